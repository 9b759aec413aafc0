use rand::Rng;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

const MAX_REDRAWS: usize = 10_000;

/// Distribution family for a parametric bias source.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// Inaccuracy itself is normal; draws at or below -100% are redrawn.
    Normal,
    /// The actual/estimate ratio `1 + x/100` is lognormal with the implied
    /// mean and sd, so draws always stay above -100%.
    LogNormal,
}

/// Where per-candidate inaccuracies (in percent) come from.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum BiasSource {
    /// Resampled with replacement from a reference class sample.
    Empirical {
        label: String,
        sample: Vec<f64>,
    },
    Parametric {
        mean: f64,
        sd: f64,
        shape: Shape,
    },
}

impl BiasSource {
    pub fn constant(value: f64) -> Self {
        BiasSource::Parametric { mean: value, sd: 0.0, shape: Shape::Normal }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            BiasSource::Empirical { label, sample } => {
                if sample.is_empty() {
                    return Err(Error::invalid(format!("bias source {label} has an empty sample")));
                }
                if sample.iter().any(|&x| !(x > -100.0 && x.is_finite())) {
                    return Err(Error::invalid(format!("bias source {label} has values at or below -100%")));
                }
            }
            BiasSource::Parametric { mean, sd, shape } => {
                if !(mean.is_finite() && sd.is_finite() && *sd >= 0.0) {
                    return Err(Error::invalid("parametric bias needs finite mean and sd >= 0"));
                }
                if *mean <= -100.0 {
                    return Err(Error::invalid(format!("parametric bias mean {mean} must be above -100%")));
                }
                if *shape == Shape::Normal && *sd == 0.0 && *mean <= -100.0 {
                    return Err(Error::invalid("constant bias at or below -100%"));
                }
            }
        }
        Ok(())
    }

    pub fn is_degenerate(&self) -> bool {
        match self {
            BiasSource::Empirical { sample, .. } => sample.windows(2).all(|w| w[0] == w[1]),
            BiasSource::Parametric { sd, .. } => *sd == 0.0,
        }
    }

    /// Maps a standard normal score to an inaccuracy. `None` marks a draw at
    /// or below -100%, which the caller redraws.
    fn value_at_normal_score(&self, z: f64) -> Option<f64> {
        let x = match self {
            BiasSource::Empirical { sample, .. } => {
                let u = Normal::standard().cdf(z);
                let i = ((u * sample.len() as f64) as usize).min(sample.len() - 1);
                sample[i]
            }
            BiasSource::Parametric { mean, sd, shape: Shape::Normal } => mean + sd * z,
            BiasSource::Parametric { mean, sd, shape: Shape::LogNormal } => {
                let (mu, sigma) = lognormal_params(*mean, *sd);
                100.0 * ((mu + sigma * z).exp() - 1.0)
            }
        };
        (x > -100.0).then_some(x)
    }

    fn draw_once<R: Rng>(&self, rng: &mut R) -> Option<f64> {
        match self {
            BiasSource::Empirical { sample, .. } => Some(sample[rng.random_range(0..sample.len())]),
            BiasSource::Parametric { mean, sd, .. } if *sd == 0.0 => (*mean > -100.0).then_some(*mean),
            _ => self.value_at_normal_score(standard_normal(rng)),
        }
    }

    /// One inaccuracy draw, redrawing anything at or below -100%.
    pub fn draw<R: Rng>(&self, rng: &mut R) -> Result<f64> {
        for _ in 0..MAX_REDRAWS {
            if let Some(x) = self.draw_once(rng) {
                return Ok(x);
            }
        }
        Err(Error::invalid("bias source keeps producing draws at or below -100%"))
    }
}

fn lognormal_params(mean_pct: f64, sd_pct: f64) -> (f64, f64) {
    let m = 1.0 + mean_pct / 100.0;
    let s = sd_pct / 100.0;
    let var = (1.0 + (s * s) / (m * m)).ln();
    (m.ln() - var / 2.0, var.sqrt())
}

fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // open interval so the inverse CDF stays finite
    let u = (rng.random::<f64>() * (1.0 - f64::EPSILON)) + f64::EPSILON / 2.0;
    Normal::standard().inverse_cdf(u)
}

/// Draws a (cost, benefit) pair with Gaussian-copula correlation `rho`.
/// With `rho == 0` the two sources are drawn independently.
pub fn draw_pair<R: Rng>(cost: &BiasSource, benefit: &BiasSource, rho: f64, rng: &mut R) -> Result<(f64, f64)> {
    if rho == 0.0 {
        return Ok((cost.draw(rng)?, benefit.draw(rng)?));
    }
    let tail = (1.0 - rho * rho).sqrt();
    for _ in 0..MAX_REDRAWS {
        let z1 = standard_normal(rng);
        let z2 = rho * z1 + tail * standard_normal(rng);
        let c = if cost.is_degenerate() { cost.draw_once(rng) } else { cost.value_at_normal_score(z1) };
        let b = if benefit.is_degenerate() { benefit.draw_once(rng) } else { benefit.value_at_normal_score(z2) };
        if let (Some(c), Some(b)) = (c, b) {
            return Ok((c, b));
        }
    }
    Err(Error::invalid("correlated bias draws keep falling at or below -100%"))
}
