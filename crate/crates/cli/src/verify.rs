//! The `verify` subcommand: rechecks the library's headline guarantees on
//! freshly generated inputs and prints one PASS/FAIL line per property.

use clap::Args;
use sketchmatch::data::{gen_random_small, gen_unit_points};
use sketchmatch::fast::FastGreedy;
use sketchmatch::greedy::{greedy_run, greedy_run_traced};
use sketchmatch::oracle::{brute_force_opt, competitive_ratio, dual_certificate_check};
use sketchmatch::{approx_distance, edge_weight, recommended_s, SketchMatrix};
use std::process::ExitCode;

use crate::UsageError;

#[derive(Args)]
pub struct VerifyArgs {
    /// Number of random small instances for the ratio and certificate checks
    #[arg(long, default_value_t = 200)]
    instances: u64,
    /// Largest per-side instance size (capped by the brute-force guard at 10)
    #[arg(long, default_value_t = 6)]
    max_n: usize,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// Override the sketch width instead of deriving it from --eps/--delta
    #[arg(long)]
    s: Option<usize>,
    /// Trials for the distortion check
    #[arg(long, default_value_t = 50)]
    jl_trials: u64,
    #[arg(long)]
    seed: Option<u64>,
}

pub fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, UsageError> {
    if args.instances == 0 || args.jl_trials == 0 {
        return Err(UsageError("--instances and --jl-trials must be positive".into()));
    }
    if args.max_n == 0 || args.max_n > 10 {
        return Err(UsageError(
            "--max-n must lie in 1..=10 (brute-force oracle guard)".into(),
        ));
    }
    if !(args.eps > 0.0 && args.eps < 1.0) || !(args.delta > 0.0 && args.delta < 1.0) {
        return Err(UsageError("--eps and --delta must lie in (0, 1)".into()));
    }
    let seed = crate::resolve_seed(args.seed)?;

    let mut all_pass = true;
    let mut report = |name: &str, pass: bool, detail: String| {
        println!("{name}: {} ({detail})", if pass { "PASS" } else { "FAIL" });
        all_pass &= pass;
    };

    // exact greedy keeps at least half of the offline optimum
    let mut worst: f64 = f64::INFINITY;
    let mut ratio_ok = true;
    for i in 0..args.instances {
        let inst = gen_random_small(seed.wrapping_add(i), args.max_n)?;
        let alg = greedy_run(&inst)?.total_weight;
        let opt = brute_force_opt(&inst)?.total_weight;
        let ratio = competitive_ratio(alg, opt)?;
        worst = worst.min(ratio);
        ratio_ok &= ratio >= 0.5 * (1.0 - 1e-12);
    }
    report(
        "half-competitive",
        ratio_ok,
        format!("worst ratio {worst:.4} over {} instances", args.instances),
    );

    // every run's price certificate covers every feasible pair
    let mut cert_ok = true;
    let mut accounting_ok = true;
    for i in 0..args.instances {
        let inst = gen_random_small(seed.wrapping_add(i), args.max_n)?;
        let (_, trace) = greedy_run_traced(&inst)?;
        cert_ok &= dual_certificate_check(&inst, &trace);
        let (bi, vf) = (trace.increment_sum(), trace.final_value_sum());
        accounting_ok &= (bi - vf).abs() <= 1e-9 * (1.0 + vf.abs());
    }
    report("dual-certificate", cert_ok, format!("{} instances", args.instances));
    report(
        "price-accounting",
        accounting_ok,
        "buyer increments sum to seller values".into(),
    );

    // pairwise distances survive the projection within (1 +- eps)
    let (n, d) = (100usize, 500usize);
    let s = match args.s {
        Some(s) => s,
        None => recommended_s(n, args.eps, args.delta)?,
    };
    let mut bad_trials = 0u64;
    for trial in 0..args.jl_trials {
        let points = gen_unit_points(n, d, seed.wrapping_add(40_000 + trial))?;
        let sketch = SketchMatrix::build(s, d, seed.wrapping_add(trial))?;
        let sketched: Vec<Vec<f64>> = points
            .iter()
            .map(|p| sketch.apply(p))
            .collect::<sketchmatch::Result<_>>()?;
        'trial: for i in 0..n {
            for j in (i + 1)..n {
                let truth = edge_weight(&points[i], &points[j])?;
                let approx = approx_distance(&sketched[i], &sketched[j])?;
                if approx < (1.0 - args.eps) * truth || approx > (1.0 + args.eps) * truth {
                    bad_trials += 1;
                    break 'trial;
                }
            }
        }
    }
    let fraction = bad_trials as f64 / args.jl_trials as f64;
    report(
        "jl-distortion",
        fraction <= args.delta + 0.05,
        format!("{bad_trials}/{} trials violated at s={s}", args.jl_trials),
    );

    // sketched greedy stays above (1 - eps)/2 of the optimum on most runs
    let floor = (1.0 - args.eps) / 2.0;
    let mut good = 0u64;
    for i in 0..args.instances {
        let inst = gen_random_small(seed.wrapping_add(20_000 + i), args.max_n)?;
        let s = match args.s {
            Some(s) => s,
            None => recommended_s(inst.n_sellers().max(2), args.eps, args.delta)?,
        };
        let mut m = FastGreedy::init_with_s(&inst, s, args.eps, args.delta, seed.wrapping_add(i))?;
        for event in inst.stream() {
            m.update(event)?;
        }
        let opt = brute_force_opt(&inst)?.total_weight;
        if m.total_weight() >= floor * opt {
            good += 1;
        }
    }
    let needed = ((1.0 - args.delta - 0.05) * args.instances as f64).ceil() as u64;
    report(
        "sketched-ratio-floor",
        good >= needed,
        format!(
            "{good}/{} instances at or above {floor:.2} x OPT, need {needed}",
            args.instances
        ),
    );

    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}
