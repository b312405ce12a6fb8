//! Exact online matchers computing true Euclidean weights.
//!
//! [`Greedy`] keeps one value slot per seller. When a buyer arrives it is
//! offered to the live seller with the largest value increment; a seller may
//! replace its matched buyer with a better one (free disposal) and only the
//! increment counts toward the running total `p`. A re-match that would not
//! increase a seller's value is skipped so the reported pairing stays
//! meaningful. The realized total is always at least half the best offline
//! matching that respects the deadline windows.
//!
//! Worked example (d = 1, coordinates on the line):
//!
//! * sellers: `S0` at `0.0` live on steps 1..=2, `S1` at `10.0` live on 1..=3
//! * buyers: `B0` at `3.0` (step 2), `B1` at `20.0` (step 3), `B2` at `0.5` (step 4)
//!
//! `B0` sees both sellers (distances 3 and 7); `S1` takes it and `p = 7`.
//! `B1` arrives after `S0` expired; `S1` re-matches to `B1` (distance 10,
//! increment 3, `B0` discarded) and `p = 10`. `B2` finds nobody live, so the
//! final outcome is the single pair `(S1, B1)` with weight 10, while the
//! offline optimum pairs `S0-B0` and `S1-B1` for 13.
//!
//! [`PostponedGreedy`] handles streams where nobody's side is known up
//! front: every arrival acts as both a provisional seller and a buyer, and a
//! fair coin settles the side when the node's deadline passes.

use crate::error::{Error, Result};
use crate::market::{l2_distance, Instance, MatchOutcome, MatchedPair, Node, Role};
use crate::postponed::PostponedCore;
use std::time::Instant;

/// Per-seller running state of the exact greedy matcher.
#[derive(Debug, Clone)]
pub struct GreedyState {
    pub(crate) w: Vec<f64>,
    pub(crate) m: Vec<Option<usize>>,
    pub(crate) flag: Vec<bool>,
    pub(crate) p: f64,
    pub(crate) d_touches: u64,
}

impl GreedyState {
    pub(crate) fn new(n: usize) -> Self {
        GreedyState {
            w: vec![0.0; n],
            m: vec![None; n],
            flag: vec![false; n],
            p: 0.0,
            d_touches: 0,
        }
    }

    /// Current matching value per seller slot.
    pub fn w(&self) -> &[f64] {
        &self.w
    }

    /// Matched buyer id per seller slot.
    pub fn matches(&self) -> &[Option<usize>] {
        &self.m
    }

    pub fn flags(&self) -> &[bool] {
        &self.flag
    }

    /// Accumulated matching value; equals the sum of `w` at all times.
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Number of full-dimension vectors weighed so far.
    pub fn d_vector_touches(&self) -> u64 {
        self.d_touches
    }
}

/// Dual certificate extracted from a greedy run: the value increment each
/// buyer contributed on arrival and the final value held by each seller.
#[derive(Debug, Clone, Default)]
pub struct GreedyTrace {
    pub increments: Vec<(usize, f64)>,
    pub final_values: Vec<(usize, f64)>,
}

impl GreedyTrace {
    pub fn increment_sum(&self) -> f64 {
        self.increments.iter().map(|&(_, v)| v).sum()
    }

    pub fn final_value_sum(&self) -> f64 {
        self.final_values.iter().map(|&(_, v)| v).sum()
    }
}

/// Exact greedy matcher over a fixed-role instance.
pub struct Greedy<'a> {
    sellers: Vec<&'a Node>,
    d: usize,
    state: GreedyState,
    increments: Vec<(usize, f64)>,
}

impl<'a> Greedy<'a> {
    pub fn new(instance: &'a Instance) -> Result<Self> {
        if instance.is_postponed() {
            return Err(Error::BadParameter(
                "greedy requires fixed seller/buyer roles".into(),
            ));
        }
        let sellers: Vec<&Node> = instance.sellers().collect();
        let mut state = GreedyState::new(sellers.len());
        for (i, s) in sellers.iter().enumerate() {
            state.flag[i] = s.arrival == 0;
        }
        Ok(Greedy {
            sellers,
            d: instance.d(),
            state,
            increments: Vec::new(),
        })
    }

    pub fn state(&self) -> &GreedyState {
        &self.state
    }

    /// Process one stream event. Sellers only toggle availability; a buyer
    /// triggers the argmax-increment step over the live sellers.
    pub fn update(&mut self, event: &Node) -> Result<()> {
        if event.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: event.dim(),
            });
        }
        if event.role == Role::Undetermined {
            return Err(Error::BadParameter(
                "greedy requires fixed seller/buyer roles".into(),
            ));
        }
        let t = event.arrival;
        for (i, s) in self.sellers.iter().enumerate() {
            self.state.flag[i] = s.arrival <= t && t <= s.deadline;
        }
        if event.role != Role::Buyer {
            return Ok(());
        }

        let mut best: Option<(usize, f64, f64)> = None;
        for i in 0..self.sellers.len() {
            if !self.state.flag[i] {
                continue;
            }
            let w_ib = l2_distance(&self.sellers[i].vector, &event.vector);
            self.state.d_touches += 1;
            let inc = w_ib - self.state.w[i];
            // sellers are id-ordered, so strict improvement keeps the lowest id on ties
            if best.map_or(true, |(_, binc, _)| inc > binc) {
                best = Some((i, inc, w_ib));
            }
        }
        self.increments
            .push((event.id, best.map_or(0.0, |(_, inc, _)| inc.max(0.0))));
        if let Some((i0, inc, w_new)) = best {
            if inc > 0.0 {
                self.state.m[i0] = Some(event.id);
                self.state.p += inc;
                self.state.w[i0] = w_new;
            }
        }
        Ok(())
    }

    pub fn total_weight(&self) -> f64 {
        self.state.p
    }

    pub fn outcome(&self, per_step_nanos: Vec<u64>) -> MatchOutcome {
        let pairs = self
            .sellers
            .iter()
            .enumerate()
            .filter_map(|(i, s)| {
                self.state.m[i].map(|buyer| MatchedPair {
                    seller: s.id,
                    buyer,
                    weight: self.state.w[i],
                })
            })
            .collect();
        MatchOutcome {
            total_weight: self.state.p,
            pairs,
            per_step_nanos,
        }
    }

    pub fn trace(&self) -> GreedyTrace {
        GreedyTrace {
            increments: self.increments.clone(),
            final_values: self
                .sellers
                .iter()
                .enumerate()
                .map(|(i, s)| (s.id, self.state.w[i]))
                .collect(),
        }
    }
}

/// Fold the whole stream through [`Greedy`] and report the outcome.
pub fn greedy_run(instance: &Instance) -> Result<MatchOutcome> {
    Ok(greedy_run_traced(instance)?.0)
}

/// [`greedy_run`] plus the dual certificate of the run.
pub fn greedy_run_traced(instance: &Instance) -> Result<(MatchOutcome, GreedyTrace)> {
    let mut matcher = Greedy::new(instance)?;
    let mut per_step = Vec::new();
    for event in instance.stream() {
        let t0 = Instant::now();
        matcher.update(event)?;
        per_step.push(t0.elapsed().as_nanos() as u64);
    }
    let trace = matcher.trace();
    Ok((matcher.outcome(per_step), trace))
}

/// Exact postponed matcher: roles resolve by coin at deadline time.
/// Borrowed vectors back the weight computations; the per-node protocol
/// state lives in the shared resolution core.
pub struct PostponedGreedy<'a> {
    core: PostponedCore,
    raw: Vec<&'a [f64]>,
    d: usize,
}

impl<'a> PostponedGreedy<'a> {
    pub fn new(d: usize, coin_seed: u64) -> Self {
        PostponedGreedy {
            core: PostponedCore::new(coin_seed),
            raw: Vec::new(),
            d,
        }
    }

    pub fn update(&mut self, node: &'a Node) -> Result<()> {
        if node.role != Role::Undetermined {
            return Err(Error::RoleAlreadyFixed { id: node.id });
        }
        if node.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: node.dim(),
            });
        }
        self.core.expire_due(node.arrival);
        let slot = self.core.admit(node.id, node.deadline);
        self.raw.push(&node.vector);
        let raw = &self.raw;
        let arriving = raw[slot];
        self.core.match_arrival(slot, |j| l2_distance(raw[j], arriving));
        Ok(())
    }

    /// Resolve every node still in the market.
    pub fn finish(&mut self) {
        self.core.finish();
    }

    pub fn total_weight(&self) -> f64 {
        self.core.p()
    }

    pub fn outcome(&self, per_step_nanos: Vec<u64>) -> MatchOutcome {
        MatchOutcome {
            total_weight: self.core.p(),
            pairs: self.core.pairs().to_vec(),
            per_step_nanos,
        }
    }
}

/// Run the exact postponed matcher over an all-undetermined instance.
pub fn postponed_greedy_run(instance: &Instance, coin_seed: u64) -> Result<MatchOutcome> {
    if let Some(fixed) = instance.nodes().iter().find(|n| n.role != Role::Undetermined) {
        return Err(Error::RoleAlreadyFixed { id: fixed.id });
    }
    let mut matcher = PostponedGreedy::new(instance.d(), coin_seed);
    let mut per_step = Vec::new();
    for node in instance.stream() {
        let t0 = Instant::now();
        matcher.update(node)?;
        per_step.push(t0.elapsed().as_nanos() as u64);
    }
    matcher.finish();
    Ok(matcher.outcome(per_step))
}
