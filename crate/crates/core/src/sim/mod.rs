//! Monte Carlo model of project selection under biased estimates.
//!
//! Each trial draws a portfolio of candidates with true costs and benefits,
//! then derives the estimates a promoter would have shown by inverting a
//! sampled cost overrun and benefit inaccuracy. Two selections are made with
//! the same rule: one on the estimates, one on the truth. Realized outcomes
//! are always true values, so the gap between the two is the value lost to
//! biased forecasts.
//!
//! The budget also binds on true costs. Projects chosen on estimates are
//! funded in order of estimated BCR; one whose true cost no longer fits the
//! remaining budget is dropped. The realized portfolio therefore always fits
//! the budget, and an exhaustive oracle can never be beaten by it.
//!
//! The candidate model (uniform true values, per-candidate bias draws,
//! independent unless a correlation is configured) is deliberately minimal.

mod bias;
mod config;
mod select;

pub use bias::{draw_pair, BiasSource, Shape};
pub use config::{parse_config, parse_config_file, CONFIG_KEYS};
pub use select::{brute_force_optimal, select_projects, Basis, Selection, SelectionRule, EXHAUSTIVE_MAX_CANDIDATES};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SEED_DERIVATION: &str = "splitmix64(master_seed + 0x9E3779B97F4A7C15 * (trial + 1)); ChaCha8 per trial";

/// Seed for trial `trial`: a SplitMix64 finalizer over the master seed
/// advanced by the golden-ratio increment `trial + 1` times.
pub fn derive_trial_seed(master_seed: u64, trial: u64) -> u64 {
    let mut z = master_seed.wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(trial.wrapping_add(1)));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub n_candidates: usize,
    pub budget: f64,
    pub cost_bias: BiasSource,
    pub benefit_bias: BiasSource,
    pub true_cost_range: (f64, f64),
    pub true_benefit_range: (f64, f64),
    pub trials: usize,
    pub master_seed: u64,
    pub selection_rule: SelectionRule,
    /// Gaussian-copula correlation between a candidate's cost overrun and
    /// benefit inaccuracy. Zero means independent draws.
    pub bias_correlation: f64,
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_candidates == 0 {
            return Err(Error::invalid("n_candidates must be at least 1"));
        }
        if !(self.budget >= 0.0 && self.budget.is_finite()) {
            return Err(Error::invalid("budget must be finite and non-negative"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be at least 1"));
        }
        if self.selection_rule == SelectionRule::Exhaustive && self.n_candidates > EXHAUSTIVE_MAX_CANDIDATES {
            return Err(Error::invalid(format!(
                "exhaustive rule requires n_candidates <= {EXHAUSTIVE_MAX_CANDIDATES}"
            )));
        }
        for (name, (lo, hi)) in [("true_cost", self.true_cost_range), ("true_benefit", self.true_benefit_range)] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::invalid(format!("{name} range must satisfy 0 < min <= max")));
            }
        }
        if !(-1.0 < self.bias_correlation && self.bias_correlation < 1.0) {
            return Err(Error::invalid("bias_correlation must lie in (-1, 1)"));
        }
        self.cost_bias.validate()?;
        self.benefit_bias.validate()
    }
}

/// One project proposal. Estimates are derived from truth so that the
/// realized inaccuracies equal the sampled ones.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub id: usize,
    pub true_cost: f64,
    pub true_benefit: f64,
    pub est_cost: f64,
    pub est_benefit: f64,
    pub sampled_cost_overrun: f64,
    pub sampled_benefit_inaccuracy: f64,
}

impl Candidate {
    pub fn new(id: usize, true_cost: f64, true_benefit: f64, cost_overrun: f64, benefit_inaccuracy: f64) -> Self {
        Candidate {
            id,
            true_cost,
            true_benefit,
            est_cost: true_cost / (1.0 + cost_overrun / 100.0),
            est_benefit: true_benefit / (1.0 + benefit_inaccuracy / 100.0),
            sampled_cost_overrun: cost_overrun,
            sampled_benefit_inaccuracy: benefit_inaccuracy,
        }
    }

    /// Candidate whose estimates equal the truth.
    pub fn exact(id: usize, cost: f64, benefit: f64) -> Self {
        Candidate::new(id, cost, benefit, 0.0, 0.0)
    }

    pub fn estimated_bcr(&self) -> f64 {
        self.est_benefit / self.est_cost
    }

    pub fn true_bcr(&self) -> f64 {
        self.true_benefit / self.true_cost
    }
}

fn uniform<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

/// Draws one portfolio. Deterministic in `(config, trial_seed)`.
pub fn generate_portfolio(config: &SimConfig, trial_seed: u64) -> Result<Vec<Candidate>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
    (0..config.n_candidates)
        .map(|id| {
            let true_cost = uniform(&mut rng, config.true_cost_range);
            let true_benefit = uniform(&mut rng, config.true_benefit_range);
            let (overrun, inaccuracy) =
                draw_pair(&config.cost_bias, &config.benefit_bias, config.bias_correlation, &mut rng)?;
            Ok(Candidate::new(id, true_cost, true_benefit, overrun, inaccuracy))
        })
        .collect()
}

fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(std::cmp::Ordering::Equal));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties. Degenerate inputs
/// (fewer than two values or a constant side) give 1 when the rank vectors
/// coincide and 0 otherwise.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    if rx == ry {
        return 1.0;
    }
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    (cov / (vx * vy).sqrt()).clamp(-1.0, 1.0)
}

/// Per-trial detail behind a [`SimResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: usize,
    pub seed: u64,
    pub biased_ids: Vec<usize>,
    /// Part of `biased_ids` still fundable once true costs are known.
    pub funded_ids: Vec<usize>,
    pub oracle_ids: Vec<usize>,
    /// True net benefit of the funded projects chosen on estimates.
    pub biased_realized_net: f64,
    /// True net benefit of the projects chosen on true values.
    pub oracle_realized_net: f64,
    pub regret: f64,
    pub overlap: f64,
    pub rank_correlation: f64,
}

fn realized_net(candidates: &[Candidate], ids: &[usize]) -> f64 {
    let mut chosen: Vec<&Candidate> = candidates.iter().filter(|c| ids.contains(&c.id)).collect();
    chosen.sort_by_key(|c| c.id);
    let benefit: f64 = chosen.iter().map(|c| c.true_benefit).sum();
    let cost: f64 = chosen.iter().map(|c| c.true_cost).sum();
    benefit - cost
}

/// Funds `ids` in order of estimated BCR (ties by id) while their true
/// costs fit `budget`; returns the funded ids ascending.
pub fn fund_within_budget(candidates: &[Candidate], ids: &[usize], budget: f64) -> Vec<usize> {
    let mut queue: Vec<&Candidate> = candidates.iter().filter(|c| ids.contains(&c.id)).collect();
    queue.sort_by(|a, b| {
        b.estimated_bcr().partial_cmp(&a.estimated_bcr()).unwrap_or(std::cmp::Ordering::Equal).then(a.id.cmp(&b.id))
    });
    let mut spent = 0.0;
    let mut funded = Vec::new();
    for c in queue {
        if spent + c.true_cost <= budget {
            spent += c.true_cost;
            funded.push(c.id);
        }
    }
    funded.sort_unstable();
    funded
}

/// `1 - biased / oracle`. When the oracle realizes nothing, regret is 0 if
/// the biased choice lost nothing either and 1 if it lost money.
fn regret(biased: f64, oracle: f64) -> f64 {
    if oracle > 0.0 {
        1.0 - biased / oracle
    } else if biased >= oracle {
        0.0
    } else {
        1.0
    }
}

/// Share of the biased selection also chosen by the oracle. An empty biased
/// selection counts as full agreement only when the oracle is empty too.
fn overlap(biased: &[usize], oracle: &[usize]) -> f64 {
    if biased.is_empty() {
        return if oracle.is_empty() { 1.0 } else { 0.0 };
    }
    biased.iter().filter(|id| oracle.contains(id)).count() as f64 / biased.len() as f64
}

pub fn run_trial(config: &SimConfig, trial: usize) -> Result<TrialOutcome> {
    let seed = derive_trial_seed(config.master_seed, trial as u64);
    let candidates = generate_portfolio(config, seed)?;
    let biased = select_projects(&candidates, config.budget, Basis::Estimated, config.selection_rule)?;
    let oracle = select_projects(&candidates, config.budget, Basis::True, config.selection_rule)?;
    let funded = fund_within_budget(&candidates, &biased.ids, config.budget);
    let biased_net = realized_net(&candidates, &funded);
    let oracle_net = realized_net(&candidates, &oracle.ids);
    let est: Vec<f64> = candidates.iter().map(Candidate::estimated_bcr).collect();
    let truth: Vec<f64> = candidates.iter().map(Candidate::true_bcr).collect();
    Ok(TrialOutcome {
        trial,
        seed,
        regret: regret(biased_net, oracle_net),
        overlap: overlap(&biased.ids, &oracle.ids),
        rank_correlation: spearman(&est, &truth),
        biased_ids: biased.ids,
        funded_ids: funded,
        oracle_ids: oracle.ids,
        biased_realized_net: biased_net,
        oracle_realized_net: oracle_net,
    })
}

/// Runs every trial (in parallel) and returns them in trial order.
pub fn run_trials(config: &SimConfig) -> Result<Vec<TrialOutcome>> {
    config.validate()?;
    (0..config.trials).into_par_iter().map(|t| run_trial(config, t)).collect()
}

/// Aggregate selection-distortion metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub mean_regret: f64,
    pub mean_overlap: f64,
    pub rank_correlation: f64,
    pub trials: usize,
    pub seed_derivation: String,
}

/// Averages trial outcomes in trial order.
pub fn summarize_trials(outcomes: &[TrialOutcome]) -> SimResult {
    let n = outcomes.len() as f64;
    let mean = |f: fn(&TrialOutcome) -> f64| outcomes.iter().map(f).sum::<f64>() / n;
    SimResult {
        mean_regret: mean(|t| t.regret),
        mean_overlap: mean(|t| t.overlap),
        rank_correlation: mean(|t| t.rank_correlation),
        trials: outcomes.len(),
        seed_derivation: SEED_DERIVATION.to_string(),
    }
}

pub fn run_simulation(config: &SimConfig) -> Result<SimResult> {
    Ok(summarize_trials(&run_trials(config)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn config(cost: BiasSource, benefit: BiasSource) -> SimConfig {
        SimConfig {
            n_candidates: 8,
            budget: 2000.0,
            cost_bias: cost,
            benefit_bias: benefit,
            true_cost_range: (100.0, 1000.0),
            true_benefit_range: (100.0, 2000.0),
            trials: 50,
            master_seed: 42,
            selection_rule: SelectionRule::GreedyBcr,
            bias_correlation: 0.0,
        }
    }

    #[test]
    fn seeds_are_stable_and_distinct() {
        assert_eq!(derive_trial_seed(42, 0), derive_trial_seed(42, 0));
        assert_ne!(derive_trial_seed(42, 0), derive_trial_seed(42, 1));
        assert_ne!(derive_trial_seed(42, 0), derive_trial_seed(43, 0));
        // SplitMix64 reference output for state 0 advanced once
        assert_eq!(derive_trial_seed(0, 0), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn fixed_bias_inverts_exactly() {
        let cfg = config(BiasSource::constant(44.7), BiasSource::constant(-51.4));
        let cands = generate_portfolio(&cfg, 9).unwrap();
        assert_eq!(cands.len(), 8);
        for c in &cands {
            assert!((c.est_cost - c.true_cost / 1.447).abs() <= 1e-12 * c.true_cost);
            assert!((c.est_benefit - c.true_benefit / 0.486).abs() <= 1e-12 * c.true_benefit);
            let realized_overrun = 100.0 * (c.true_cost - c.est_cost) / c.est_cost;
            assert!((realized_overrun - 44.7).abs() < 1e-9);
        }
        assert_eq!(cands, generate_portfolio(&cfg, 9).unwrap());
        assert_ne!(cands, generate_portfolio(&cfg, 10).unwrap());
    }

    #[test]
    fn zero_bias_is_lossless() {
        for rule in [SelectionRule::GreedyBcr, SelectionRule::Exhaustive] {
            let mut cfg = config(BiasSource::constant(0.0), BiasSource::constant(0.0));
            cfg.selection_rule = rule;
            let r = run_simulation(&cfg).unwrap();
            assert_eq!(r.mean_regret, 0.0);
            assert_eq!(r.mean_overlap, 1.0);
            assert_eq!(r.rank_correlation, 1.0);
            assert_eq!(r.trials, 50);
        }
    }

    #[test]
    fn single_candidate_overlap_is_binary() {
        let mut cfg = config(
            BiasSource::Parametric { mean: 44.7, sd: 38.4, shape: Shape::LogNormal },
            BiasSource::Parametric { mean: -51.4, sd: 28.1, shape: Shape::LogNormal },
        );
        cfg.n_candidates = 1;
        cfg.budget = 1e6;
        cfg.trials = 200;
        let outcomes = run_trials(&cfg).unwrap();
        assert!(outcomes.iter().all(|t| t.overlap == 0.0 || t.overlap == 1.0));
        assert!(outcomes.iter().any(|t| t.overlap == 0.0));
    }

    #[test]
    fn overruns_are_paid_from_the_budget() {
        // estimated costs 50 and 40 fit a budget of 100; true costs 75 and 60 do not
        let cands = [Candidate::new(0, 75.0, 300.0, 50.0, 0.0), Candidate::new(1, 60.0, 120.0, 50.0, 0.0)];
        assert_eq!(fund_within_budget(&cands, &[0, 1], 100.0), vec![0]);
        assert_eq!(fund_within_budget(&cands, &[1], 100.0), vec![1]);
        assert_eq!(fund_within_budget(&cands, &[0, 1], 50.0), Vec::<usize>::new());
    }

    #[test]
    fn biased_selection_never_beats_exhaustive_oracle() {
        let mut cfg = config(
            BiasSource::Parametric { mean: 44.7, sd: 38.4, shape: Shape::LogNormal },
            BiasSource::Parametric { mean: -51.4, sd: 28.1, shape: Shape::Normal },
        );
        cfg.selection_rule = SelectionRule::Exhaustive;
        cfg.trials = 300;
        let outcomes = run_trials(&cfg).unwrap();
        assert!(outcomes.iter().all(|t| t.regret >= 0.0 && t.biased_realized_net <= t.oracle_realized_net));
        assert!(summarize_trials(&outcomes).mean_regret > 0.0);
    }

    #[test]
    fn spearman_basics() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), 1.0);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-12);
        assert_eq!(spearman(&[1.0], &[5.0]), 1.0);
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), 0.0);
    }

    #[test]
    fn regret_and_overlap_edge_cases() {
        assert_eq!(regret(50.0, 100.0), 0.5);
        assert_eq!(regret(0.0, 0.0), 0.0);
        assert_eq!(regret(-5.0, 0.0), 1.0);
        assert_eq!(overlap(&[], &[]), 1.0);
        assert_eq!(overlap(&[], &[1]), 0.0);
        assert_eq!(overlap(&[1, 2], &[2, 3]), 0.5);
    }

    #[test]
    fn invalid_configs() {
        let good = config(BiasSource::constant(0.0), BiasSource::constant(0.0));
        let mut c = good.clone();
        c.n_candidates = 0;
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.trials = 0;
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.selection_rule = SelectionRule::Exhaustive;
        c.n_candidates = 21;
        assert!(c.validate().is_err());
        let mut c = good.clone();
        c.true_cost_range = (10.0, 5.0);
        assert!(c.validate().is_err());
        let mut c = good;
        c.budget = -1.0;
        assert!(c.validate().is_err());
    }
}
