//! Experiment engine: single timed runs, parameter sweeps and the mean/std
//! summary table, with CSV output.
//!
//! Wall time covers the online stream fold (plus final role resolution for
//! postponed algorithms); structure setup such as pre-sketching known
//! sellers is excluded, matching the per-arrival cost the algorithms claim.
//! Weight results depend only on `(algorithm, instance, seed)`, never on the
//! clock, so reruns reproduce CSV weight columns byte for byte.

use crate::data::{gen_synthetic, GenMode};
use crate::error::{Error, Result};
use crate::fast::{FastGreedy, FastPostponedGreedy};
use crate::greedy::{Greedy, PostponedGreedy};
use crate::market::{Instance, MatchOutcome};
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Greedy,
    FastGreedy,
    PostponedGreedy,
    FastPostponedGreedy,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::Greedy,
        Algorithm::FastGreedy,
        Algorithm::PostponedGreedy,
        Algorithm::FastPostponedGreedy,
    ];

    pub fn is_fast(self) -> bool {
        matches!(self, Algorithm::FastGreedy | Algorithm::FastPostponedGreedy)
    }

    pub fn is_postponed(self) -> bool {
        matches!(
            self,
            Algorithm::PostponedGreedy | Algorithm::FastPostponedGreedy
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Algorithm::Greedy => "greedy",
            Algorithm::FastGreedy => "fast-greedy",
            Algorithm::PostponedGreedy => "pgreedy",
            Algorithm::FastPostponedGreedy => "fast-pgreedy",
        };
        f.write_str(name)
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Algorithm::Greedy),
            "fast-greedy" => Ok(Algorithm::FastGreedy),
            "pgreedy" => Ok(Algorithm::PostponedGreedy),
            "fast-pgreedy" => Ok(Algorithm::FastPostponedGreedy),
            other => Err(Error::BadParameter(format!("unknown algorithm '{other}'"))),
        }
    }
}

/// Per-run knobs. `s` is the explicit sketch width; when `None` the fast
/// algorithms fall back to the recommended dimension for `(eps, delta)`.
/// `dl` only annotates the output record.
#[derive(Debug, Clone, Copy)]
pub struct RunParams {
    pub s: Option<usize>,
    pub eps: f64,
    pub delta: f64,
    pub dl: Option<u64>,
}

impl Default for RunParams {
    fn default() -> Self {
        RunParams {
            s: None,
            eps: 0.1,
            delta: 0.01,
            dl: None,
        }
    }
}

/// One benchmark observation.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub algorithm: Algorithm,
    /// Size parameter: sellers per side for bipartite runs, total online
    /// points for postponed runs.
    pub n: usize,
    pub d: usize,
    /// Sketch width actually used; `None` for the exact algorithms.
    pub s: Option<usize>,
    pub dl: u64,
    pub seed: u64,
    pub wall_nanos: u64,
    pub total_weight: f64,
    pub per_iter_nanos: Option<Vec<u64>>,
}

/// Deterministic seed derivation (splitmix64 over seed xor salted constant).
pub(crate) fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn uniform_dl(instance: &Instance) -> Option<u64> {
    let mut nodes = instance.nodes().iter();
    let first = nodes.next()?;
    let dl = first.deadline - first.arrival;
    nodes.all(|n| n.deadline - n.arrival == dl).then_some(dl)
}

/// Run one algorithm over one instance. The sketch seed and the coin seed
/// are derived from `seed`, so equal `(algorithm, instance, seed)` triples
/// reproduce the same total weight.
pub fn run_once(
    algorithm: Algorithm,
    instance: &Instance,
    params: &RunParams,
    seed: u64,
) -> Result<SweepRecord> {
    let sketch_seed = mix_seed(seed, 1);
    let coin_seed = mix_seed(seed, 2);

    let (outcome, wall_nanos, s_used) = match algorithm {
        Algorithm::Greedy => {
            let mut m = Greedy::new(instance)?;
            let (per_step, wall) = timed_fold(instance, |event| m.update(event))?;
            (m.outcome(per_step), wall, None)
        }
        Algorithm::FastGreedy => {
            let mut m = match params.s {
                Some(s) => FastGreedy::init_with_s(instance, s, params.eps, params.delta, sketch_seed)?,
                None => FastGreedy::init(instance, params.eps, params.delta, sketch_seed)?,
            };
            let s = m.s();
            let (per_step, wall) = timed_fold(instance, |event| m.update(event))?;
            (m.outcome(per_step), wall, Some(s))
        }
        Algorithm::PostponedGreedy => {
            let mut m = PostponedGreedy::new(instance.d(), coin_seed);
            let t0 = Instant::now();
            let mut per_step = Vec::new();
            for node in instance.stream() {
                let ti = Instant::now();
                m.update(node)?;
                per_step.push(ti.elapsed().as_nanos() as u64);
            }
            m.finish();
            let wall = t0.elapsed().as_nanos() as u64;
            (m.outcome(per_step), wall, None)
        }
        Algorithm::FastPostponedGreedy => {
            let mut m = match params.s {
                Some(s) => FastPostponedGreedy::init_with_s(
                    instance.d(),
                    s,
                    params.eps,
                    params.delta,
                    sketch_seed,
                    coin_seed,
                )?,
                None => FastPostponedGreedy::init(
                    instance.nodes().len(),
                    instance.d(),
                    params.eps,
                    params.delta,
                    sketch_seed,
                    coin_seed,
                )?,
            };
            let s = m.s();
            let t0 = Instant::now();
            let mut per_step = Vec::new();
            for node in instance.stream() {
                let ti = Instant::now();
                m.update(node)?;
                per_step.push(ti.elapsed().as_nanos() as u64);
            }
            m.finish();
            let wall = t0.elapsed().as_nanos() as u64;
            (m.outcome(per_step), wall, Some(s))
        }
    };

    let n = if instance.is_postponed() {
        instance.nodes().len()
    } else {
        instance.n_sellers()
    };
    Ok(SweepRecord {
        algorithm,
        n,
        d: instance.d(),
        s: s_used,
        dl: params.dl.or_else(|| uniform_dl(instance)).unwrap_or(0),
        seed,
        wall_nanos,
        total_weight: outcome.total_weight,
        per_iter_nanos: Some(outcome.per_step_nanos),
    })
}

fn timed_fold(
    instance: &Instance,
    mut step: impl FnMut(&crate::market::Node) -> Result<()>,
) -> Result<(Vec<u64>, u64)> {
    let t0 = Instant::now();
    let mut per_step = Vec::new();
    for event in instance.stream() {
        let ti = Instant::now();
        step(event)?;
        per_step.push(ti.elapsed().as_nanos() as u64);
    }
    Ok((per_step, t0.elapsed().as_nanos() as u64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    N,
    S,
    D,
    Dl,
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "n" => Ok(SweepAxis::N),
            "s" => Ok(SweepAxis::S),
            "d" => Ok(SweepAxis::D),
            "dl" => Ok(SweepAxis::Dl),
            other => Err(Error::BadParameter(format!("unknown sweep axis '{other}'"))),
        }
    }
}

/// Fixed parameters of a sweep; the chosen axis overrides one of them per
/// value.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub n: usize,
    pub d: usize,
    pub dl: u64,
    pub s: usize,
    pub eps: f64,
    pub delta: f64,
    pub algorithms: Vec<Algorithm>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n: 1000,
            d: 50_000,
            dl: 100,
            s: 20,
            eps: 0.1,
            delta: 0.01,
            algorithms: Algorithm::ALL.to_vec(),
        }
    }
}

/// Run every configured algorithm over `values x repeats` fresh instances.
/// Instance seeds derive from `(base_seed, value index, repeat)`, shared by
/// all algorithms of that cell so comparisons stay paired.
pub fn sweep(
    axis: SweepAxis,
    values: &[u64],
    config: &SweepConfig,
    repeats: usize,
    base_seed: u64,
) -> Result<Vec<SweepRecord>> {
    if values.is_empty() {
        return Err(Error::BadParameter("sweep values must be non-empty".into()));
    }
    if values.iter().any(|&v| v == 0) {
        return Err(Error::BadParameter("sweep values must be positive".into()));
    }
    if repeats == 0 {
        return Err(Error::BadParameter("repeats must be positive".into()));
    }
    if config.algorithms.is_empty() {
        return Err(Error::BadParameter("no algorithms configured".into()));
    }

    let mut records = Vec::new();
    for (vi, &value) in values.iter().enumerate() {
        let (mut n, mut d, mut dl, mut s) = (config.n, config.d, config.dl, config.s);
        match axis {
            SweepAxis::N => n = value as usize,
            SweepAxis::S => s = value as usize,
            SweepAxis::D => d = value as usize,
            SweepAxis::Dl => dl = value,
        }
        for repeat in 0..repeats {
            let inst_seed = mix_seed(base_seed, (vi * repeats + repeat) as u64 + 3);
            // one instance at a time keeps the memory peak at a single copy
            let bipartite_algos: Vec<_> = config
                .algorithms
                .iter()
                .copied()
                .filter(|a| !a.is_postponed())
                .collect();
            let postponed_algos: Vec<_> = config
                .algorithms
                .iter()
                .copied()
                .filter(|a| a.is_postponed())
                .collect();
            for (mode, algos) in [
                (GenMode::Bipartite, bipartite_algos),
                (GenMode::Postponed, postponed_algos),
            ] {
                if algos.is_empty() {
                    continue;
                }
                // a postponed market with n online points over n steps is the
                // structural twin of an n-pair bipartite market: same value
                // slots, same bid count, same deadline window
                let gen_n = match mode {
                    GenMode::Bipartite => n,
                    GenMode::Postponed => n.div_ceil(2),
                };
                let instance = gen_synthetic(gen_n, d, dl, inst_seed, mode)?;
                for algorithm in algos {
                    let params = RunParams {
                        s: algorithm.is_fast().then_some(s),
                        eps: config.eps,
                        delta: config.delta,
                        dl: Some(dl),
                    };
                    records.push(run_once(algorithm, &instance, &params, inst_seed)?);
                }
            }
        }
    }
    Ok(records)
}

/// One line of the mean/std table.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub n: usize,
    pub d: usize,
    pub s: Option<usize>,
    pub dl: u64,
    pub count: usize,
    pub mean: f64,
    pub std: f64,
}

/// Sample mean and (n-1) standard deviation of total weight per
/// `(algorithm, n, d, s, dl)` group, in first-appearance order.
pub fn summarize(records: &[SweepRecord]) -> Result<Vec<SummaryRow>> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut groups: Vec<((Algorithm, usize, usize, Option<usize>, u64), Vec<f64>)> = Vec::new();
    for r in records {
        let key = (r.algorithm, r.n, r.d, r.s, r.dl);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, vals)) => vals.push(r.total_weight),
            None => groups.push((key, vec![r.total_weight])),
        }
    }
    Ok(groups
        .into_iter()
        .map(|((algorithm, n, d, s, dl), vals)| {
            let count = vals.len();
            let mean = vals.iter().sum::<f64>() / count as f64;
            let std = if count < 2 {
                0.0
            } else {
                (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (count - 1) as f64).sqrt()
            };
            SummaryRow {
                algorithm,
                n,
                d,
                s,
                dl,
                count,
                mean,
                std,
            }
        })
        .collect())
}

fn opt_s(s: Option<usize>) -> String {
    s.map(|v| v.to_string()).unwrap_or_default()
}

pub const RECORDS_CSV_HEADER: &str = "algorithm,n,d,s,dl,seed,wall_nanos,total_weight";
pub const ITERS_CSV_HEADER: &str = "seed,iter,nanos";

/// One record as a CSV row (no trailing newline).
pub fn record_csv_row(r: &SweepRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{:?}",
        r.algorithm,
        r.n,
        r.d,
        opt_s(r.s),
        r.dl,
        r.seed,
        r.wall_nanos,
        r.total_weight
    )
}

/// Per-iteration rows for one record (one line per stream event).
pub fn iter_csv_rows(r: &SweepRecord) -> String {
    let mut out = String::new();
    if let Some(iters) = &r.per_iter_nanos {
        for (i, nanos) in iters.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", r.seed, i, nanos));
        }
    }
    out
}

/// Records as CSV with header `algorithm,n,d,s,dl,seed,wall_nanos,total_weight`.
pub fn records_to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from(RECORDS_CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&record_csv_row(r));
        out.push('\n');
    }
    out
}

/// Per-iteration timings as CSV with header `seed,iter,nanos`.
pub fn iters_to_csv(records: &[SweepRecord]) -> String {
    let mut out = String::from(ITERS_CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&iter_csv_rows(r));
    }
    out
}

/// Write the records CSV; with `include_iters`, also write the sibling
/// `<stem>.iters.csv` next to it.
pub fn write_records_csv(path: &Path, records: &[SweepRecord], include_iters: bool) -> Result<()> {
    std::fs::write(path, records_to_csv(records))?;
    if include_iters {
        std::fs::write(path.with_extension("iters.csv"), iters_to_csv(records))?;
    }
    Ok(())
}

/// Summary table as CSV with header `algorithm,n,d,s,dl,count,mean,std`.
pub fn summary_to_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("algorithm,n,d,s,dl,count,mean,std\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{:?},{:?}\n",
            r.algorithm,
            r.n,
            r.d,
            opt_s(r.s),
            r.dl,
            r.count,
            r.mean,
            r.std
        ));
    }
    out
}

/// Convenience for callers that already know the outcome they timed.
pub fn outcome_total(outcome: &MatchOutcome) -> f64 {
    outcome.total_weight
}
