//! Ground-truth machinery: exhaustive offline optimum and the price-based
//! certificate that bounds any greedy run against it.
//!
//! The optimum maximizes total weight over all partial matchings whose pairs
//! satisfy [`feasible`]. It is deliberately brute force so it stays
//! independent of the online algorithms it judges; a guard caps it at
//! 10x10 nodes.

use crate::error::{Error, Result};
use crate::greedy::GreedyTrace;
use crate::market::{feasible, l2_distance, Instance, MatchOutcome, MatchedPair};
use std::collections::HashMap;

const ORACLE_LIMIT: usize = 10;

/// Best feasibility-respecting partial matching, by exhaustive search over
/// include/exclude choices per seller. Ties prefer the lexicographically
/// smallest pair list.
pub fn brute_force_opt(instance: &Instance) -> Result<MatchOutcome> {
    let sellers: Vec<_> = instance.sellers().collect();
    let buyers: Vec<_> = instance.buyers().collect();
    if sellers.len() > ORACLE_LIMIT || buyers.len() > ORACLE_LIMIT {
        return Err(Error::OracleTooLarge {
            sellers: sellers.len(),
            buyers: buyers.len(),
            limit: ORACLE_LIMIT,
        });
    }

    let mut weight = vec![vec![None; buyers.len()]; sellers.len()];
    for (i, s) in sellers.iter().enumerate() {
        for (j, b) in buyers.iter().enumerate() {
            if feasible(s, b) {
                weight[i][j] = Some(l2_distance(&s.vector, &b.vector));
            }
        }
    }

    struct Search<'m> {
        weight: &'m [Vec<Option<f64>>],
        seller_ids: Vec<usize>,
        buyer_ids: Vec<usize>,
        used: Vec<bool>,
        current: Vec<MatchedPair>,
        best_total: f64,
        best_pairs: Vec<MatchedPair>,
    }

    impl Search<'_> {
        fn consider(&mut self, total: f64) {
            let ids = |pairs: &[MatchedPair]| -> Vec<(usize, usize)> {
                pairs.iter().map(|p| (p.seller, p.buyer)).collect()
            };
            if total > self.best_total
                || (total == self.best_total && ids(&self.current) < ids(&self.best_pairs))
            {
                self.best_total = total;
                self.best_pairs = self.current.clone();
            }
        }

        fn recurse(&mut self, i: usize, total: f64) {
            if i == self.weight.len() {
                self.consider(total);
                return;
            }
            // leave seller i unmatched
            self.recurse(i + 1, total);
            for j in 0..self.used.len() {
                if self.used[j] {
                    continue;
                }
                if let Some(w) = self.weight[i][j] {
                    self.used[j] = true;
                    self.current.push(MatchedPair {
                        seller: self.seller_ids[i],
                        buyer: self.buyer_ids[j],
                        weight: w,
                    });
                    self.recurse(i + 1, total + w);
                    self.current.pop();
                    self.used[j] = false;
                }
            }
        }
    }

    let mut search = Search {
        weight: &weight,
        seller_ids: sellers.iter().map(|s| s.id).collect(),
        buyer_ids: buyers.iter().map(|b| b.id).collect(),
        used: vec![false; buyers.len()],
        current: Vec::new(),
        best_total: 0.0,
        best_pairs: Vec::new(),
    };
    search.recurse(0, 0.0);

    Ok(MatchOutcome {
        total_weight: search.best_total,
        pairs: search.best_pairs,
        per_step_nanos: Vec::new(),
    })
}

/// Check the certificate a greedy run leaves behind: all prices are
/// non-negative and every feasible pair is covered, i.e.
/// `final_value(seller) + increment(buyer) >= weight(seller, buyer)` up to
/// `1e-9` slack. A certificate that passes pins the run to at least half
/// the offline optimum.
pub fn dual_certificate_check(instance: &Instance, trace: &GreedyTrace) -> bool {
    let seller_price: HashMap<usize, f64> = trace.final_values.iter().copied().collect();
    let buyer_price: HashMap<usize, f64> = trace.increments.iter().copied().collect();
    if seller_price.values().chain(buyer_price.values()).any(|&v| v < 0.0) {
        return false;
    }
    for s in instance.sellers() {
        for b in instance.buyers() {
            if !feasible(s, b) {
                continue;
            }
            let (Some(&vf), Some(&ib)) = (seller_price.get(&s.id), buyer_price.get(&b.id)) else {
                return false;
            };
            let w = l2_distance(&s.vector, &b.vector);
            if vf + ib < w - 1e-9 * w.abs().max(1.0) {
                return false;
            }
        }
    }
    true
}

/// Ratio of an algorithm's total to the offline optimum; `0/0` counts as 1.
pub fn competitive_ratio(alg_total: f64, opt_total: f64) -> Result<f64> {
    if alg_total < 0.0 || opt_total < 0.0 {
        return Err(Error::BadValue(format!(
            "totals must be non-negative, got alg={alg_total}, opt={opt_total}"
        )));
    }
    if opt_total == 0.0 && alg_total == 0.0 {
        return Ok(1.0);
    }
    Ok(alg_total / opt_total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::gen_random_small;
    use crate::greedy::{greedy_run, greedy_run_traced, GreedyTrace};
    use crate::market::{Node, Role};

    fn seller(id: usize, x: f64, arrival: u64, deadline: u64) -> Node {
        Node::new(id, vec![x], arrival, deadline, Role::Seller).unwrap()
    }

    fn buyer(id: usize, x: f64, arrival: u64) -> Node {
        Node::new(id, vec![x], arrival, arrival + 10, Role::Buyer).unwrap()
    }

    #[test]
    fn single_feasible_pair() {
        let inst = Instance::bipartite(1, vec![seller(0, 0.0, 1, 5)], vec![buyer(0, 2.0, 3)]).unwrap();
        let opt = brute_force_opt(&inst).unwrap();
        assert_eq!(opt.total_weight, 2.0);
        assert_eq!(opt.pairs, vec![MatchedPair { seller: 0, buyer: 0, weight: 2.0 }]);
    }

    #[test]
    fn two_by_two_takes_the_diagonal() {
        // weights: (s0,b0)=5, (s0,b1)=1, (s1,b0)=1, (s1,b1)=5
        let inst = Instance::bipartite(
            1,
            vec![seller(0, 0.0, 1, 9), seller(1, 6.0, 1, 9)],
            vec![buyer(0, 5.0, 2), buyer(1, 1.0, 3)],
        )
        .unwrap();
        let opt = brute_force_opt(&inst).unwrap();
        assert_eq!(opt.total_weight, 10.0);
        assert_eq!(
            opt.pairs,
            vec![
                MatchedPair { seller: 0, buyer: 0, weight: 5.0 },
                MatchedPair { seller: 1, buyer: 1, weight: 5.0 },
            ]
        );
    }

    #[test]
    fn infeasible_pairs_leave_an_empty_matching() {
        let inst = Instance::bipartite(1, vec![seller(0, 0.0, 1, 2)], vec![buyer(0, 1.0, 5)]).unwrap();
        let opt = brute_force_opt(&inst).unwrap();
        assert_eq!(opt.total_weight, 0.0);
        assert!(opt.pairs.is_empty());
    }

    #[test]
    fn oversized_instances_are_rejected() {
        let sellers: Vec<Node> = (0..11).map(|i| seller(i, i as f64, 1, 99)).collect();
        let inst = Instance::bipartite(1, sellers, vec![buyer(0, 0.0, 2)]).unwrap();
        assert!(matches!(
            brute_force_opt(&inst),
            Err(Error::OracleTooLarge { sellers: 11, .. })
        ));
    }

    #[test]
    fn empty_instance_certificate_passes() {
        let inst = Instance::new(1, Vec::new()).unwrap();
        assert!(dual_certificate_check(&inst, &GreedyTrace::default()));
    }

    #[test]
    fn constructed_violation_fails_the_check() {
        let inst = Instance::bipartite(1, vec![seller(0, 0.0, 1, 5)], vec![buyer(0, 1.0, 2)]).unwrap();
        let trace = GreedyTrace {
            increments: vec![(0, 0.0)],
            final_values: vec![(0, 0.0)],
        };
        // pair weight 1 but both prices zero
        assert!(!dual_certificate_check(&inst, &trace));
    }

    #[test]
    fn greedy_runs_produce_valid_certificates() {
        for seed in 0..30 {
            let inst = gen_random_small(seed, 6).unwrap();
            let (_, trace) = greedy_run_traced(&inst).unwrap();
            assert!(dual_certificate_check(&inst, &trace), "seed {seed}");
            let (bi, vf) = (trace.increment_sum(), trace.final_value_sum());
            assert!((bi - vf).abs() <= 1e-9 * (1.0 + vf.abs()), "seed {seed}");
        }
    }

    #[test]
    fn greedy_stays_within_half_of_opt_and_below_it() {
        for seed in 100..150 {
            let inst = gen_random_small(seed, 6).unwrap();
            let alg = greedy_run(&inst).unwrap().total_weight;
            let opt = brute_force_opt(&inst).unwrap().total_weight;
            assert!(opt >= alg - 1e-9 * (1.0 + alg), "seed {seed}: opt {opt} < alg {alg}");
            let ratio = competitive_ratio(alg, opt).unwrap();
            assert!(ratio >= 0.5 * (1.0 - 1e-12), "seed {seed}: ratio {ratio}");
            assert!(ratio <= 1.0 + 1e-9, "seed {seed}: ratio {ratio}");
        }
    }

    #[test]
    fn ratio_conventions() {
        assert_eq!(competitive_ratio(3.0, 6.0).unwrap(), 0.5);
        assert_eq!(competitive_ratio(0.0, 0.0).unwrap(), 1.0);
        assert!(competitive_ratio(-1.0, 2.0).is_err());
        assert!(competitive_ratio(1.0, -2.0).is_err());
    }
}
