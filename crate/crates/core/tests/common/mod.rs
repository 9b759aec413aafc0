#![allow(dead_code)]

use std::path::PathBuf;
use std::process::{Command, Output};

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn dataset_path() -> PathBuf {
    repo_root().join("data/reference_projects.csv")
}

pub fn config_path(name: &str) -> PathBuf {
    repo_root().join("configs").join(name)
}

pub fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)
}

pub fn refcast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refcast")).args(args).output().expect("binary runs")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

pub fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

/// Reference quantile: sort, then interpolate between the order statistics
/// around position (n - 1) q.
pub fn oracle_quantile(sample: &[f64], q: f64) -> f64 {
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let pos = q * (x.len() - 1) as f64;
    let below = pos.floor() as usize;
    let above = pos.ceil() as usize;
    if below == above {
        return x[below];
    }
    x[below] + (x[above] - x[below]) * (pos - below as f64)
}

/// Reference two-sided permutation p-value: every subset of the pooled
/// values with `a.len()` members (a bitmask over positions) is scored by its
/// doubled midrank sum and compared with the observed one.
pub fn oracle_permutation_p(a: &[f64], b: &[f64]) -> f64 {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let n = pooled.len();
    // doubled midrank: 2 * (#less) + (#equal) + 1
    let rank2: Vec<i64> = pooled
        .iter()
        .map(|&v| {
            let less = pooled.iter().filter(|&&w| w < v).count() as i64;
            let equal = pooled.iter().filter(|&&w| w == v).count() as i64;
            2 * less + equal + 1
        })
        .collect();
    let k = a.len();
    // doubled expected rank sum: k (n + 1)
    let centre = (k * (n + 1)) as i64;
    let observed: i64 = rank2[..k].iter().sum();
    let dev = (observed - centre).abs();
    let (mut hits, mut total) = (0u64, 0u64);
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        total += 1;
        let s: i64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| rank2[i]).sum();
        if (s - centre).abs() >= dev {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}
