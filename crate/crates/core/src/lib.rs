//! Reference class forecasting toolkit.
//!
//! * [`data`]: project records, CSV ingestion and the inaccuracy measures.
//! * [`stats`]: summary statistics, band shares, separation test, bootstrap.
//! * [`engine`]: reference classes, empirical quantiles, uplift curves and
//!   forecast adjustment.
//! * [`sim`]: Monte Carlo model of project selection under biased estimates.
//! * [`sample_data`]: deterministic synthetic reference dataset.
//! * [`cli`]: the `refcast` command line.
//!
//! Statistics and forecasting are generic over [`Scalar`] (`f32` or `f64`);
//! the aliases below fix the scalar for the common cases.

// `!(x > y)` comparisons deliberately reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod data;
pub mod engine;
mod error;
pub mod sample_data;
pub mod scalar;
pub mod sim;
pub mod stats;
pub mod svg;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use data::{cost_inaccuracy, parse_dataset, traffic_inaccuracy, validate_record, ProjectType, Violation};
pub use engine::{
    adjust_forecast, build_reference_class, delay_adjustment, empirical_distribution, quantile, reference_forecast,
    required_uplift, uplift_curve, ClassCriteria, Measure,
};
pub use stats::{
    bootstrap_ci, separation_test, share_outside_band, share_overrun, shortfall_to_overestimate, summarize, Statistic,
    TestResult,
};

pub type ProjectRecord = data::ProjectRecord<f64>;
pub type Dataset = data::Dataset<f64>;
pub type ReferenceClass = engine::ReferenceClass<f64>;
pub type EmpiricalDistribution = engine::EmpiricalDistribution<f64>;
pub type UpliftCurve = engine::UpliftCurve<f64>;
pub type UpliftPoint = engine::UpliftPoint<f64>;
pub type ForecastReport = engine::ForecastReport<f64>;
pub type SummaryStats = stats::SummaryStats<f64>;
pub type Interval = stats::Interval<f64>;

pub type ProjectRecordF32 = data::ProjectRecord<f32>;
pub type DatasetF32 = data::Dataset<f32>;
pub type ReferenceClassF32 = engine::ReferenceClass<f32>;
pub type EmpiricalDistributionF32 = engine::EmpiricalDistribution<f32>;
pub type UpliftCurveF32 = engine::UpliftCurve<f32>;
pub type ForecastReportF32 = engine::ForecastReport<f32>;
pub type SummaryStatsF32 = stats::SummaryStats<f32>;
pub type IntervalF32 = stats::Interval<f32>;
