//! Sketch-accelerated matchers.
//!
//! These mirror the exact matchers in [`crate::greedy`] but weigh edges in
//! the projected space: [`FastGreedy`] pre-sketches every seller once, then
//! each buyer costs one `s x d` projection plus an `O(s)` distance per live
//! seller instead of an `O(d)` distance per live seller. With an identity
//! projection both structures reproduce their exact counterparts decision
//! for decision, which the test suite uses as a cross-check.

use crate::error::{Error, Result};
use crate::greedy::GreedyState;
use crate::market::{l2_distance, Instance, MatchOutcome, MatchedPair, Node, Role};
use crate::postponed::PostponedCore;
use crate::sketch::{recommended_s, SketchMatrix, SketchedPoint};

/// Online matcher over known sellers with sketched weights.
pub struct FastGreedy<'a> {
    sketch: SketchMatrix,
    sellers: Vec<&'a Node>,
    sketched: Vec<SketchedPoint>,
    state: GreedyState,
    eps: f64,
    delta: f64,
}

impl<'a> FastGreedy<'a> {
    /// Build the projection at the recommended dimension for the instance's
    /// seller count and pre-sketch every seller.
    pub fn init(instance: &'a Instance, eps: f64, delta: f64, seed: u64) -> Result<Self> {
        let n = instance.n_sellers();
        if n == 0 {
            return Err(Error::BadParameter("at least one seller required".into()));
        }
        let s = recommended_s(n.max(2), eps, delta)?;
        let sketch = SketchMatrix::build(s, instance.d(), seed)?;
        Self::with_sketch(instance, sketch, eps, delta)
    }

    /// Same as [`FastGreedy::init`] with an explicit sketch dimension, for
    /// parameter sweeps.
    pub fn init_with_s(
        instance: &'a Instance,
        s: usize,
        eps: f64,
        delta: f64,
        seed: u64,
    ) -> Result<Self> {
        let sketch = SketchMatrix::build(s, instance.d(), seed)?;
        Self::with_sketch(instance, sketch, eps, delta)
    }

    /// Adopt a caller-supplied projection (identity, explicit test matrix).
    pub fn with_sketch(
        instance: &'a Instance,
        sketch: SketchMatrix,
        eps: f64,
        delta: f64,
    ) -> Result<Self> {
        if instance.is_postponed() {
            return Err(Error::BadParameter(
                "fast greedy requires fixed seller/buyer roles".into(),
            ));
        }
        if sketch.d() != instance.d() {
            return Err(Error::DimensionMismatch {
                expected: instance.d(),
                got: sketch.d(),
            });
        }
        let sellers: Vec<&Node> = instance.sellers().collect();
        let sketched = sellers
            .iter()
            .map(|s| sketch.sketch_point(s.id, &s.vector))
            .collect::<Result<Vec<_>>>()?;
        let mut state = GreedyState::new(sellers.len());
        for (i, s) in sellers.iter().enumerate() {
            state.flag[i] = s.arrival == 0;
        }
        Ok(FastGreedy {
            sketch,
            sellers,
            sketched,
            state,
            eps,
            delta,
        })
    }

    pub fn s(&self) -> usize {
        self.sketch.s()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn sketch(&self) -> &SketchMatrix {
        &self.sketch
    }

    pub fn sketched_sellers(&self) -> &[SketchedPoint] {
        &self.sketched
    }

    pub fn state(&self) -> &GreedyState {
        &self.state
    }

    /// Approximate weights from `y` to every live seller; expired or
    /// not-yet-arrived slots report `None` rather than a zero weight.
    pub fn query(&self, y: &[f64]) -> Result<Vec<Option<f64>>> {
        let y_sketch = self.sketch.apply(y)?;
        Ok(self.weights_against(&y_sketch))
    }

    fn weights_against(&self, y_sketch: &[f64]) -> Vec<Option<f64>> {
        self.sketched
            .iter()
            .enumerate()
            .map(|(i, p)| {
                if self.state.flag[i] {
                    Some(l2_distance(&p.coords, y_sketch))
                } else {
                    None
                }
            })
            .collect()
    }

    /// Same control flow as the exact matcher; only the weights differ.
    pub fn update(&mut self, event: &Node) -> Result<()> {
        if event.dim() != self.sketch.d() {
            return Err(Error::DimensionMismatch {
                expected: self.sketch.d(),
                got: event.dim(),
            });
        }
        if event.role == Role::Undetermined {
            return Err(Error::BadParameter(
                "fast greedy requires fixed seller/buyer roles".into(),
            ));
        }
        let t = event.arrival;
        for (i, s) in self.sellers.iter().enumerate() {
            self.state.flag[i] = s.arrival <= t && t <= s.deadline;
        }
        if event.role != Role::Buyer {
            return Ok(());
        }

        // the only full-dimension work on the buyer path
        let y_sketch = self.sketch.apply(&event.vector)?;
        self.state.d_touches += 1;

        let mut best: Option<(usize, f64, f64)> = None;
        for i in 0..self.sellers.len() {
            if !self.state.flag[i] {
                continue;
            }
            let w_ib = l2_distance(&self.sketched[i].coords, &y_sketch);
            let inc = w_ib - self.state.w[i];
            if best.map_or(true, |(_, binc, _)| inc > binc) {
                best = Some((i, inc, w_ib));
            }
        }
        if let Some((i0, inc, w_new)) = best {
            if inc > 0.0 {
                self.state.m[i0] = Some(event.id);
                self.state.p += inc;
                self.state.w[i0] = w_new;
            }
        }
        Ok(())
    }

    /// Running total; maintained incrementally, no recomputation.
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
}

/// Fold a whole instance through [`FastGreedy`].
pub fn fast_greedy_run(
    instance: &Instance,
    s_override: Option<usize>,
    eps: f64,
    delta: f64,
    seed: u64,
) -> Result<MatchOutcome> {
    let mut matcher = match s_override {
        Some(s) => FastGreedy::init_with_s(instance, s, eps, delta, seed)?,
        None => FastGreedy::init(instance, eps, delta, seed)?,
    };
    let mut per_step = Vec::new();
    for event in instance.stream() {
        let t0 = std::time::Instant::now();
        matcher.update(event)?;
        per_step.push(t0.elapsed().as_nanos() as u64);
    }
    Ok(matcher.outcome(per_step))
}

/// Postponed matcher that keeps only sketched copies: each arrival is
/// projected once and its raw vector dropped.
pub struct FastPostponedGreedy {
    sketch: SketchMatrix,
    core: PostponedCore,
    sketched: Vec<Vec<f64>>,
    eps: f64,
    delta: f64,
}

impl FastPostponedGreedy {
    /// `expected_nodes` sizes the projection; no points are sketched yet.
    pub fn init(
        expected_nodes: usize,
        d: usize,
        eps: f64,
        delta: f64,
        sketch_seed: u64,
        coin_seed: u64,
    ) -> Result<Self> {
        let s = recommended_s(expected_nodes.max(2), eps, delta)?;
        let sketch = SketchMatrix::build(s, d, sketch_seed)?;
        Ok(Self::with_sketch_internal(sketch, eps, delta, coin_seed))
    }

    pub fn init_with_s(
        d: usize,
        s: usize,
        eps: f64,
        delta: f64,
        sketch_seed: u64,
        coin_seed: u64,
    ) -> Result<Self> {
        let sketch = SketchMatrix::build(s, d, sketch_seed)?;
        Ok(Self::with_sketch_internal(sketch, eps, delta, coin_seed))
    }

    pub fn with_sketch(sketch: SketchMatrix, eps: f64, delta: f64, coin_seed: u64) -> Self {
        Self::with_sketch_internal(sketch, eps, delta, coin_seed)
    }

    fn with_sketch_internal(sketch: SketchMatrix, eps: f64, delta: f64, coin_seed: u64) -> Self {
        FastPostponedGreedy {
            sketch,
            core: PostponedCore::new(coin_seed),
            sketched: Vec::new(),
            eps,
            delta,
        }
    }

    pub fn s(&self) -> usize {
        self.sketch.s()
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn sketch(&self) -> &SketchMatrix {
        &self.sketch
    }

    pub fn live_sellers(&self) -> usize {
        self.core.live_seller_count()
    }

    pub fn live_buyers(&self) -> usize {
        self.core.live_buyer_count()
    }

    pub fn update(&mut self, node: &Node) -> Result<()> {
        if node.role != Role::Undetermined {
            return Err(Error::RoleAlreadyFixed { id: node.id });
        }
        if node.dim() != self.sketch.d() {
            return Err(Error::DimensionMismatch {
                expected: self.sketch.d(),
                got: node.dim(),
            });
        }
        self.core.expire_due(node.arrival);
        let projected = self.sketch.apply(&node.vector)?;
        let slot = self.core.admit(node.id, node.deadline);
        self.sketched.push(projected);
        let sketched = &self.sketched;
        let arriving = &sketched[slot];
        self.core
            .match_arrival(slot, |j| l2_distance(&sketched[j], arriving));
        Ok(())
    }

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

/// Fold a whole undetermined instance through [`FastPostponedGreedy`].
pub fn fast_postponed_run(
    instance: &Instance,
    s_override: Option<usize>,
    eps: f64,
    delta: f64,
    sketch_seed: u64,
    coin_seed: u64,
) -> Result<MatchOutcome> {
    if let Some(fixed) = instance.nodes().iter().find(|n| n.role != Role::Undetermined) {
        return Err(Error::RoleAlreadyFixed { id: fixed.id });
    }
    let mut matcher = match s_override {
        Some(s) => FastPostponedGreedy::init_with_s(
            instance.d(),
            s,
            eps,
            delta,
            sketch_seed,
            coin_seed,
        )?,
        None => FastPostponedGreedy::init(
            instance.nodes().len(),
            instance.d(),
            eps,
            delta,
            sketch_seed,
            coin_seed,
        )?,
    };
    let mut per_step = Vec::new();
    for node in instance.stream() {
        let t0 = std::time::Instant::now();
        matcher.update(node)?;
        per_step.push(t0.elapsed().as_nanos() as u64);
    }
    matcher.finish();
    Ok(matcher.outcome(per_step))
}
