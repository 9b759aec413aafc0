//! Flat `key = value` simulation config files.
//!
//! ```text
//! # comments start with '#'
//! n_candidates = 12
//! budget = 2500
//! true_cost_min = 100
//! true_cost_max = 1000
//! true_benefit_min = 200
//! true_benefit_max = 1500
//! trials = 1000
//! master_seed = 20051201
//! selection_rule = exhaustive        # or greedy_bcr (default)
//! cost_bias = class:rail:cost        # class:TYPE:MEASURE[:REGION]
//! benefit_bias = class:rail:traffic  # normal:MEAN:SD | lognormal:MEAN:SD | constant:VALUE
//! bias_correlation = 0               # optional, default 0
//! dataset = ../data/reference_projects.csv  # needed by class sources, relative to this file
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use super::{BiasSource, SelectionRule, Shape, SimConfig};
use crate::data::{parse_dataset, Dataset, ProjectType};
use crate::engine::{build_reference_class, ClassCriteria, Measure};
use crate::error::{Error, Result};

pub const CONFIG_KEYS: [&str; 13] = [
    "n_candidates",
    "budget",
    "true_cost_min",
    "true_cost_max",
    "true_benefit_min",
    "true_benefit_max",
    "trials",
    "master_seed",
    "selection_rule",
    "cost_bias",
    "benefit_bias",
    "bias_correlation",
    "dataset",
];

struct Entries {
    map: BTreeMap<&'static str, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                line: line_no,
                message: format!("expected key = value, got {line:?}"),
            })?;
            let key = key.trim();
            let known = CONFIG_KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| Error::Config { line: line_no, message: format!("unknown key {key:?}") })?;
            if map.insert(*known, (line_no, value.trim().to_string())).is_some() {
                return Err(Error::Config { line: line_no, message: format!("duplicate key {key:?}") });
            }
        }
        Ok(Entries { map })
    }

    fn raw(&self, key: &'static str) -> Option<&(usize, String)> {
        self.map.get(key)
    }

    fn required<T: std::str::FromStr>(&self, key: &'static str) -> Result<T> {
        let (line, value) =
            self.raw(key).ok_or_else(|| Error::Config { line: 0, message: format!("missing required key {key:?}") })?;
        value.parse().map_err(|_| Error::Config { line: *line, message: format!("bad value for {key}: {value:?}") })
    }

    fn optional<T: std::str::FromStr>(&self, key: &'static str, default: T) -> Result<T> {
        if self.raw(key).is_some() {
            self.required(key)
        } else {
            Ok(default)
        }
    }
}

fn parse_bias(
    key: &'static str,
    entries: &Entries,
    dataset: &mut dyn FnMut() -> Result<Dataset<f64>>,
) -> Result<BiasSource> {
    let (line, spec) =
        entries.raw(key).ok_or_else(|| Error::Config { line: 0, message: format!("missing required key {key:?}") })?;
    let line = *line;
    let bad = |message: String| Error::Config { line, message };
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("{key}: {s:?} is not a number")));
    match parts.as_slice() {
        ["constant", v] => Ok(BiasSource::constant(num(v)?)),
        ["normal", m, s] => Ok(BiasSource::Parametric { mean: num(m)?, sd: num(s)?, shape: Shape::Normal }),
        ["lognormal", m, s] => Ok(BiasSource::Parametric { mean: num(m)?, sd: num(s)?, shape: Shape::LogNormal }),
        ["class", t, measure, rest @ ..] if rest.len() <= 1 => {
            let project_type: ProjectType = t.parse().map_err(|e: Error| bad(e.to_string()))?;
            let measure: Measure = measure.parse().map_err(|e: Error| bad(e.to_string()))?;
            let mut criteria = ClassCriteria::new(measure).with_type(project_type);
            if let Some(region) = rest.first() {
                criteria = criteria.with_regions([*region]);
            }
            let ds = dataset()?;
            let class = build_reference_class(&ds, &criteria).map_err(|e| bad(e.to_string()))?;
            Ok(BiasSource::Empirical { label: class.name, sample: class.sample })
        }
        _ => Err(bad(format!(
            "{key}: expected constant:V, normal:MEAN:SD, lognormal:MEAN:SD or class:TYPE:MEASURE[:REGION], got {spec:?}"
        ))),
    }
}

/// Parses config text. `base_dir` resolves a relative `dataset` path.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<SimConfig> {
    let entries = Entries::parse(text)?;
    let mut cached: Option<Dataset<f64>> = None;
    let mut load = || -> Result<Dataset<f64>> {
        if let Some(ds) = &cached {
            return Ok(ds.clone());
        }
        let (line, path) = entries
            .raw("dataset")
            .ok_or_else(|| Error::Config { line: 0, message: "class bias sources need a dataset key".into() })?;
        let full = base_dir.join(path);
        let text = std::fs::read_to_string(&full)
            .map_err(|e| Error::Config { line: *line, message: format!("cannot read {}: {e}", full.display()) })?;
        let ds = parse_dataset::<f64>(&text)?;
        cached = Some(ds.clone());
        Ok(ds)
    };

    let cost_bias = parse_bias("cost_bias", &entries, &mut load)?;
    let benefit_bias = parse_bias("benefit_bias", &entries, &mut load)?;
    let config = SimConfig {
        n_candidates: entries.required("n_candidates")?,
        budget: entries.required("budget")?,
        cost_bias,
        benefit_bias,
        true_cost_range: (entries.required("true_cost_min")?, entries.required("true_cost_max")?),
        true_benefit_range: (entries.required("true_benefit_min")?, entries.required("true_benefit_max")?),
        trials: entries.required("trials")?,
        master_seed: entries.required("master_seed")?,
        selection_rule: entries.optional("selection_rule", SelectionRule::GreedyBcr)?,
        bias_correlation: entries.optional("bias_correlation", 0.0)?,
    };
    config.validate()?;
    Ok(config)
}

pub fn parse_config_file(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config { line: 0, message: format!("cannot read {}: {e}", path.display()) })?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "n_candidates = 4\nbudget = 100\ntrue_cost_min = 10\ntrue_cost_max = 50\n\
        true_benefit_min = 10\ntrue_benefit_max = 90\ntrials = 3\nmaster_seed = 7\n";

    #[test]
    fn parses_parametric_config() {
        let text = format!(
            "{BASE}cost_bias = lognormal:44.7:38.4 # rail\nbenefit_bias = constant:0\nselection_rule = exhaustive\n"
        );
        let c = parse_config(&text, Path::new(".")).unwrap();
        assert_eq!(c.n_candidates, 4);
        assert_eq!(c.selection_rule, SelectionRule::Exhaustive);
        assert_eq!(c.cost_bias, BiasSource::Parametric { mean: 44.7, sd: 38.4, shape: Shape::LogNormal });
        assert_eq!(c.benefit_bias, BiasSource::constant(0.0));
        assert_eq!(c.bias_correlation, 0.0);
    }

    #[test]
    fn reports_bad_lines() {
        let cases = [
            (format!("{BASE}cost_bias = constant:0\nbenefit_bias = constant:0\nfoo = 1\n"), "unknown key"),
            (format!("{BASE}cost_bias = constant:0\nbenefit_bias = constant:0\nbudget = 5\n"), "duplicate"),
            (format!("{BASE}cost_bias = gamma:1:2\nbenefit_bias = constant:0\n"), "expected constant"),
            (format!("{BASE}cost_bias = constant:0\n"), "missing required key \"benefit_bias\""),
            (format!("{BASE}cost_bias = class:rail:cost\nbenefit_bias = constant:0\n"), "dataset"),
            ("n_candidates 4\n".to_string(), "expected key = value"),
        ];
        for (text, needle) in cases {
            let err = parse_config(&text, Path::new(".")).unwrap_err();
            assert!(err.to_string().contains(needle), "{needle}: {err}");
        }
        let text = format!("{BASE}cost_bias = constant:0\nbenefit_bias = constant:0\nselection_rule = random\n");
        assert!(matches!(parse_config(&text, Path::new(".")), Err(Error::Config { line: 11, .. })));
    }
}
