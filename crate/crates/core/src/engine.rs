//! Reference class forecasting.
//!
//! A reference class is a filtered set of comparable completed projects. Its
//! inaccuracy sample, sorted, is the empirical outcome distribution. The
//! uplift for an acceptable overrun risk `p` is the `(1 - p)` quantile of
//! that distribution: with the uplift applied, the share of class members
//! whose overrun would still exceed the adjusted budget is at most `p`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::{cost_inaccuracy, traffic_inaccuracy, Dataset, ProjectRecord, ProjectType};
use crate::error::{Error, Result};
use crate::scalar::{count, Scalar};

/// Percentage points of extra construction cost overrun per year of delay
/// after the decision to build.
pub const DELAY_OVERRUN_PP_PER_YEAR: f64 = 4.64;

/// Classes smaller than this are flagged in reports but still usable.
pub const MIN_CLASS_SIZE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    CostInaccuracy,
    TrafficInaccuracy,
}

impl Measure {
    pub fn short_name(self) -> &'static str {
        match self {
            Measure::CostInaccuracy => "cost",
            Measure::TrafficInaccuracy => "traffic",
        }
    }

    pub fn evaluate<T: Scalar>(self, record: &ProjectRecord<T>) -> Result<T> {
        match self {
            Measure::CostInaccuracy => cost_inaccuracy(record),
            Measure::TrafficInaccuracy => traffic_inaccuracy(record),
        }
    }

    fn has_outcome<T: Scalar>(self, record: &ProjectRecord<T>) -> bool {
        match self {
            Measure::CostInaccuracy => record.has_cost_outcome(),
            Measure::TrafficInaccuracy => record.has_traffic_outcome(),
        }
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cost" | "cost_inaccuracy" => Ok(Measure::CostInaccuracy),
            "traffic" | "traffic_inaccuracy" => Ok(Measure::TrafficInaccuracy),
            _ => Err(Error::invalid(format!("unknown measure {s:?} (expected cost or traffic)"))),
        }
    }
}

/// Filters defining a reference class. `None` means "no restriction".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCriteria {
    pub project_type: Option<ProjectType>,
    pub regions: Option<BTreeSet<String>>,
    pub decision_years: Option<(i32, i32)>,
    pub measure: Measure,
}

impl ClassCriteria {
    pub fn new(measure: Measure) -> Self {
        ClassCriteria { project_type: None, regions: None, decision_years: None, measure }
    }

    pub fn with_type(mut self, project_type: ProjectType) -> Self {
        self.project_type = Some(project_type);
        self
    }

    pub fn with_regions<I, S>(mut self, regions: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.regions = Some(regions.into_iter().map(Into::into).collect());
        self
    }

    pub fn with_decision_years(mut self, first: i32, last: i32) -> Self {
        self.decision_years = Some((first, last));
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((a, b)) = self.decision_years {
            if a > b {
                return Err(Error::invalid(format!("decision-year range {a}..={b} is empty")));
            }
        }
        if self.regions.as_ref().is_some_and(BTreeSet::is_empty) {
            return Err(Error::invalid("region filter is an empty set"));
        }
        Ok(())
    }

    /// Whether the record passes every filter (outcome availability is not
    /// checked here).
    pub fn matches<T: Scalar>(&self, record: &ProjectRecord<T>) -> bool {
        self.project_type.is_none_or(|t| t == record.project_type)
            && self.regions.as_ref().is_none_or(|set| set.contains(&record.region))
            && self.decision_years.is_none_or(|(a, b)| (a..=b).contains(&record.decision_year))
    }

    /// Human-readable class name, e.g. `rail/UK/cost`.
    pub fn name(&self) -> String {
        let mut parts = vec![self.project_type.map_or("all", ProjectType::as_str).to_string()];
        if let Some(regions) = &self.regions {
            parts.push(regions.iter().cloned().collect::<Vec<_>>().join("+"));
        }
        if let Some((a, b)) = self.decision_years {
            parts.push(format!("{a}-{b}"));
        }
        parts.push(self.measure.short_name().to_string());
        parts.join("/")
    }

    /// The standard classes: cost for rail, bridges/tunnels and roads,
    /// traffic for rail and roads, plus UK rail cost.
    pub fn standard_classes() -> Vec<ClassCriteria> {
        use Measure::*;
        use ProjectType::*;
        vec![
            ClassCriteria::new(CostInaccuracy).with_type(Rail),
            ClassCriteria::new(CostInaccuracy).with_type(BridgeTunnel),
            ClassCriteria::new(CostInaccuracy).with_type(Road),
            ClassCriteria::new(TrafficInaccuracy).with_type(Rail),
            ClassCriteria::new(TrafficInaccuracy).with_type(Road),
            ClassCriteria::new(CostInaccuracy).with_type(Rail).with_regions(["UK"]),
        ]
    }
}

impl fmt::Display for ClassCriteria {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Comparable completed projects and their inaccuracy sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceClass<T> {
    pub name: String,
    pub criteria: ClassCriteria,
    pub members: Vec<String>,
    pub sample: Vec<T>,
}

impl<T: Scalar> ReferenceClass<T> {
    /// Ad hoc class over a bare sample; members get positional ids.
    pub fn from_sample(name: impl Into<String>, measure: Measure, sample: Vec<T>) -> Self {
        ReferenceClass {
            name: name.into(),
            criteria: ClassCriteria::new(measure),
            members: (0..sample.len()).map(|i| format!("s{i}")).collect(),
            sample,
        }
    }

    pub fn len(&self) -> usize {
        self.sample.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sample.is_empty()
    }

    pub fn is_small(&self, threshold: usize) -> bool {
        self.len() < threshold
    }
}

/// Selects the records that match `criteria` and carry the measured outcome.
/// Records without outcomes (projects still in planning) are skipped.
pub fn build_reference_class<T: Scalar>(dataset: &Dataset<T>, criteria: &ClassCriteria) -> Result<ReferenceClass<T>> {
    criteria.validate()?;
    let mut members = Vec::new();
    let mut sample = Vec::new();
    for record in dataset.records() {
        if criteria.matches(record) && criteria.measure.has_outcome(record) {
            sample.push(criteria.measure.evaluate(record)?);
            members.push(record.id.clone());
        }
    }
    if members.is_empty() {
        return Err(Error::EmptyClass(criteria.name()));
    }
    Ok(ReferenceClass { name: criteria.name(), criteria: criteria.clone(), members, sample })
}

/// Sorted inaccuracy sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalDistribution<T> {
    sorted: Vec<T>,
}

impl<T: Scalar> EmpiricalDistribution<T> {
    pub fn new(mut sample: Vec<T>) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        if sample.iter().any(|v| v.is_nan()) {
            return Err(Error::invalid("sample contains NaN"));
        }
        sample.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
        Ok(EmpiricalDistribution { sorted: sample })
    }

    pub fn sorted_sample(&self) -> &[T] {
        &self.sorted
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    pub fn min(&self) -> T {
        self.sorted[0]
    }

    pub fn max(&self) -> T {
        self.sorted[self.sorted.len() - 1]
    }

    pub fn quantile(&self, q: T) -> Result<T> {
        quantile_sorted(&self.sorted, q)
    }

    /// Empirical probability that an outcome exceeds `x`.
    pub fn exceedance(&self, x: T) -> T {
        let above = self.sorted.len() - self.sorted.partition_point(|v| *v <= x);
        count::<T>(above) / count::<T>(self.sorted.len())
    }
}

pub fn empirical_distribution<T: Scalar>(class: &ReferenceClass<T>) -> Result<EmpiricalDistribution<T>> {
    if class.is_empty() {
        return Err(Error::EmptyClass(class.name.clone()));
    }
    EmpiricalDistribution::new(class.sample.clone())
}

/// Linear interpolation between order statistics at position `(n - 1) q`.
///
/// `sorted` must be non-decreasing and non-empty. The result is clamped to
/// the bracketing pair so rounding can never break monotonicity in `q`.
pub fn quantile_sorted<T: Scalar>(sorted: &[T], q: T) -> Result<T> {
    if sorted.is_empty() {
        return Err(Error::EmptySample);
    }
    if !(q >= T::zero() && q <= T::one()) {
        return Err(Error::invalid(format!("quantile level {q} outside [0, 1]")));
    }
    let n = sorted.len();
    let h = count::<T>(n - 1) * q;
    let lo = h.floor();
    let i = lo.to_usize().unwrap_or(0).min(n - 1);
    if i + 1 >= n {
        return Ok(sorted[n - 1]);
    }
    let (a, b) = (sorted[i], sorted[i + 1]);
    let v = a + (h - lo) * (b - a);
    Ok(v.max(a).min(b))
}

pub fn quantile<T: Scalar>(dist: &EmpiricalDistribution<T>, q: T) -> Result<T> {
    dist.quantile(q)
}

fn check_risk<T: Scalar>(risk: T) -> Result<()> {
    if risk > T::zero() && risk <= T::one() {
        Ok(())
    } else {
        Err(Error::invalid(format!("acceptable risk {risk} outside (0, 1]")))
    }
}

/// Percentage uplift such that the empirical probability of the overrun
/// exceeding it is at most `acceptable_risk`. May be negative.
pub fn required_uplift<T: Scalar>(dist: &EmpiricalDistribution<T>, acceptable_risk: T) -> Result<T> {
    check_risk(acceptable_risk)?;
    dist.quantile(T::one() - acceptable_risk)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpliftPoint<T> {
    pub acceptable_risk: T,
    pub uplift_pct: T,
}

/// Required uplift as a function of acceptable risk, risk ascending.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UpliftCurve<T> {
    pub points: Vec<UpliftPoint<T>>,
}

impl<T: Scalar> UpliftCurve<T> {
    /// Two-column CSV: `acceptable_risk,uplift_pct`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("acceptable_risk,uplift_pct\n");
        for p in &self.points {
            out.push_str(&format!("{},{}\n", p.acceptable_risk, p.uplift_pct));
        }
        out
    }

    pub fn is_non_increasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].uplift_pct <= w[0].uplift_pct)
    }
}

pub fn uplift_curve<T: Scalar>(dist: &EmpiricalDistribution<T>, risk_grid: &[T]) -> Result<UpliftCurve<T>> {
    if risk_grid.is_empty() {
        return Err(Error::invalid("risk grid is empty"));
    }
    if risk_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("risk grid must be strictly increasing"));
    }
    let points = risk_grid
        .iter()
        .map(|&r| Ok(UpliftPoint { acceptable_risk: r, uplift_pct: required_uplift(dist, r)? }))
        .collect::<Result<Vec<_>>>()?;
    Ok(UpliftCurve { points })
}

/// `0.01, 0.02, ..., 0.99`.
pub fn default_risk_grid<T: Scalar>() -> Vec<T> {
    (1..=99).map(|i| count::<T>(i) / T::hundred()).collect()
}

/// Base estimate with an uplift applied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdjustedForecast<T> {
    pub base_estimate: T,
    pub uplift_pct: T,
    pub uplift_amount: T,
    pub adjusted_estimate: T,
    pub clamped: bool,
}

pub fn adjust_forecast<T: Scalar>(
    base_estimate: T,
    uplift_pct: T,
    clamp_negative: bool,
) -> Result<AdjustedForecast<T>> {
    if !(base_estimate > T::zero() && base_estimate.is_finite()) {
        return Err(Error::invalid(format!("base estimate {base_estimate} must be positive")));
    }
    if !uplift_pct.is_finite() {
        return Err(Error::invalid("uplift is not finite"));
    }
    let clamped = clamp_negative && uplift_pct < T::zero();
    let uplift_pct = if clamped { T::zero() } else { uplift_pct };
    let uplift_amount = base_estimate * uplift_pct / T::hundred();
    Ok(AdjustedForecast {
        base_estimate,
        uplift_pct,
        uplift_amount,
        adjusted_estimate: base_estimate + uplift_amount,
        clamped,
    })
}

/// Inverse of [`adjust_forecast`]: the base that `uplift_pct` turns into `adjusted`.
pub fn remove_uplift<T: Scalar>(adjusted_estimate: T, uplift_pct: T) -> T {
    adjusted_estimate / (T::one() + uplift_pct / T::hundred())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayAdjustment<T> {
    pub extra_overrun_pct: T,
    pub extra_cost: T,
}

/// Expected extra overrun from `delay_years` of delay, linear in the delay.
pub fn delay_adjustment<T: Scalar>(base_estimate: T, delay_years: T) -> Result<DelayAdjustment<T>> {
    if !(base_estimate > T::zero()) {
        return Err(Error::invalid(format!("base estimate {base_estimate} must be positive")));
    }
    if !(delay_years >= T::zero() && delay_years.is_finite()) {
        return Err(Error::invalid(format!("delay {delay_years} years must be non-negative")));
    }
    let extra_overrun_pct = T::lit(DELAY_OVERRUN_PP_PER_YEAR) * delay_years;
    Ok(DelayAdjustment { extra_overrun_pct, extra_cost: base_estimate * extra_overrun_pct / T::hundred() })
}

/// Outcome of a reference class forecast. Serializes to a flat JSON object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastReport<T> {
    pub base_estimate: T,
    pub class_name: String,
    pub acceptable_risk: T,
    pub uplift_pct: T,
    pub uplift_amount: T,
    pub adjusted_estimate: T,
    pub clamped: bool,
}

/// Class uplift at `acceptable_risk` plus the delay term, applied to `base_estimate`.
pub fn reference_forecast<T: Scalar>(
    base_estimate: T,
    class: &ReferenceClass<T>,
    acceptable_risk: T,
    delay_years: T,
    clamp_negative: bool,
) -> Result<ForecastReport<T>> {
    let dist = empirical_distribution(class)?;
    let class_uplift = required_uplift(&dist, acceptable_risk)?;
    let delay = delay_adjustment(base_estimate, delay_years)?;
    let adjusted = adjust_forecast(base_estimate, class_uplift + delay.extra_overrun_pct, clamp_negative)?;
    Ok(ForecastReport {
        base_estimate,
        class_name: class.name.clone(),
        acceptable_risk,
        uplift_pct: adjusted.uplift_pct,
        uplift_amount: adjusted.uplift_amount,
        adjusted_estimate: adjusted.adjusted_estimate,
        clamped: adjusted.clamped,
    })
}
