//! Budget-constrained project selection.

use std::cmp::Ordering;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::Candidate;
use crate::error::{Error, Result};

/// Largest portfolio the exhaustive searches accept.
pub const EXHAUSTIVE_MAX_CANDIDATES: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// Rank by benefit-cost ratio, fill the budget, skip what does not fit.
    GreedyBcr,
    /// Subset with the largest total net benefit that fits the budget.
    Exhaustive,
}

impl FromStr for SelectionRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy_bcr" => Ok(SelectionRule::GreedyBcr),
            "exhaustive" => Ok(SelectionRule::Exhaustive),
            _ => Err(Error::invalid(format!("unknown selection rule {s:?} (expected greedy_bcr or exhaustive)"))),
        }
    }
}

/// Which figures a decision maker sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    Estimated,
    True,
}

impl Basis {
    pub fn cost(self, c: &Candidate) -> f64 {
        match self {
            Basis::Estimated => c.est_cost,
            Basis::True => c.true_cost,
        }
    }

    pub fn benefit(self, c: &Candidate) -> f64 {
        match self {
            Basis::Estimated => c.est_benefit,
            Basis::True => c.true_benefit,
        }
    }
}

/// Chosen ids (ascending) and their totals on the basis used to choose them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Selection {
    pub ids: Vec<usize>,
    pub total_cost: f64,
    pub total_benefit: f64,
}

impl Selection {
    pub fn net_benefit(&self) -> f64 {
        self.total_benefit - self.total_cost
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

fn by_id(candidates: &[Candidate]) -> Vec<&Candidate> {
    let mut v: Vec<&Candidate> = candidates.iter().collect();
    v.sort_by_key(|c| c.id);
    v
}

/// Totals for a set of candidates, summed in ascending id order.
fn totals(chosen: &[&Candidate], basis: Basis) -> Selection {
    let mut ids: Vec<usize> = chosen.iter().map(|c| c.id).collect();
    ids.sort_unstable();
    let mut sorted = chosen.to_vec();
    sorted.sort_by_key(|c| c.id);
    Selection {
        ids,
        total_cost: sorted.iter().map(|c| basis.cost(c)).sum(),
        total_benefit: sorted.iter().map(|c| basis.benefit(c)).sum(),
    }
}

/// Higher net benefit wins; equal nets go to the lexicographically smaller id set.
fn better(candidate: (f64, &[usize]), incumbent: (f64, &[usize])) -> bool {
    match candidate.0.partial_cmp(&incumbent.0) {
        Some(Ordering::Greater) => true,
        Some(Ordering::Equal) => candidate.1 < incumbent.1,
        _ => false,
    }
}

pub fn select_projects(candidates: &[Candidate], budget: f64, basis: Basis, rule: SelectionRule) -> Result<Selection> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidates to select from"));
    }
    if !(budget >= 0.0) {
        return Err(Error::invalid(format!("budget {budget} must be non-negative")));
    }
    match rule {
        SelectionRule::GreedyBcr => Ok(greedy(candidates, budget, basis)),
        SelectionRule::Exhaustive => exhaustive(candidates, budget, basis),
    }
}

/// Only candidates with positive net benefit on the chosen basis (BCR > 1)
/// are considered; ties in BCR go to the lower id.
fn greedy(candidates: &[Candidate], budget: f64, basis: Basis) -> Selection {
    let mut ranked: Vec<&Candidate> = candidates.iter().filter(|c| basis.benefit(c) > basis.cost(c)).collect();
    ranked.sort_by(|a, b| {
        let ra = basis.benefit(a) / basis.cost(a);
        let rb = basis.benefit(b) / basis.cost(b);
        rb.partial_cmp(&ra).unwrap_or(Ordering::Equal).then(a.id.cmp(&b.id))
    });
    let mut spent = 0.0;
    let mut chosen = Vec::new();
    for c in ranked {
        let cost = basis.cost(c);
        if spent + cost <= budget {
            spent += cost;
            chosen.push(c);
        }
    }
    totals(&chosen, basis)
}

/// Depth-first include/exclude search with budget pruning.
fn exhaustive(candidates: &[Candidate], budget: f64, basis: Basis) -> Result<Selection> {
    if candidates.len() > EXHAUSTIVE_MAX_CANDIDATES {
        return Err(Error::invalid(format!(
            "exhaustive selection limited to {EXHAUSTIVE_MAX_CANDIDATES} candidates, got {}",
            candidates.len()
        )));
    }
    let ordered = by_id(candidates);

    struct Search<'a> {
        items: Vec<&'a Candidate>,
        basis: Basis,
        budget: f64,
        best_net: f64,
        best: Vec<usize>,
        stack: Vec<usize>,
    }

    impl Search<'_> {
        fn visit(&mut self, i: usize, cost: f64, net: f64) {
            if i == self.items.len() {
                let ids: Vec<usize> = self.stack.iter().map(|&k| self.items[k].id).collect();
                if better((net, &ids), (self.best_net, &self.best)) {
                    self.best_net = net;
                    self.best = ids;
                }
                return;
            }
            let c = self.items[i];
            let next_cost = cost + self.basis.cost(c);
            if next_cost <= self.budget {
                self.stack.push(i);
                let next_net = self.running_net();
                self.visit(i + 1, next_cost, next_net);
                self.stack.pop();
            }
            self.visit(i + 1, cost, net);
        }

        // Recomputed in ascending id order so results match a plain
        // enumeration bit for bit.
        fn running_net(&self) -> f64 {
            let benefit: f64 = self.stack.iter().map(|&k| self.basis.benefit(self.items[k])).sum();
            let cost: f64 = self.stack.iter().map(|&k| self.basis.cost(self.items[k])).sum();
            benefit - cost
        }
    }

    let mut search = Search { items: ordered, basis, budget, best_net: 0.0, best: Vec::new(), stack: Vec::new() };
    search.visit(0, 0.0, 0.0);
    let chosen: Vec<&Candidate> =
        search.best.iter().map(|id| *search.items.iter().find(|c| c.id == *id).expect("chosen id exists")).collect();
    Ok(totals(&chosen, basis))
}

/// Reference optimum on true values by plain enumeration of all `2^n`
/// subsets. Used to check the other selection rules.
pub fn brute_force_optimal(candidates: &[Candidate], budget: f64) -> Result<Selection> {
    if candidates.len() > EXHAUSTIVE_MAX_CANDIDATES {
        return Err(Error::invalid(format!(
            "brute force limited to {EXHAUSTIVE_MAX_CANDIDATES} candidates, got {}",
            candidates.len()
        )));
    }
    let ordered = by_id(candidates);
    let n = ordered.len();
    let mut best_net = 0.0;
    let mut best: Vec<usize> = Vec::new();
    for mask in 0u32..(1u32 << n) {
        let members: Vec<&Candidate> = (0..n).filter(|&i| mask & (1 << i) != 0).map(|i| ordered[i]).collect();
        let cost: f64 = members.iter().map(|c| c.true_cost).sum();
        if cost > budget {
            continue;
        }
        let benefit: f64 = members.iter().map(|c| c.true_benefit).sum();
        let ids: Vec<usize> = members.iter().map(|c| c.id).collect();
        if better((benefit - cost, &ids), (best_net, &best)) {
            best_net = benefit - cost;
            best = ids;
        }
    }
    let chosen: Vec<&Candidate> = best.iter().map(|id| *ordered.iter().find(|c| c.id == *id).unwrap()).collect();
    Ok(totals(&chosen, Basis::True))
}
