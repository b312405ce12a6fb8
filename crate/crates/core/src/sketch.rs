//! Random-sign projection used to approximate edge weights.
//!
//! The projection maps `d`-dimensional points to `s` dimensions with a dense
//! matrix whose entries are `+1/sqrt(s)` or `-1/sqrt(s)`, each with
//! probability one half. For `s` around `8 * eps^-2 * ln(n/delta)` the
//! Euclidean distance between any of the `n` points survives the projection
//! within a `(1 +- eps)` factor with probability at least `1 - delta`, so
//! distances between sketched points stand in for the true weights.
//!
//! Matrices are reproducible: the same `(seed, s, d)` always yields the same
//! entries, generated from a ChaCha8 stream.

use crate::error::{Error, Result};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Constant in front of `eps^-2 * ln(n/delta)` used by [`recommended_s`].
pub const JL_CONSTANT: f64 = 8.0;

/// Dense `s x d` random-sign projection matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchMatrix {
    s: usize,
    d: usize,
    entries: Vec<f64>,
    seed: Option<u64>,
}

/// A point after projection, tagged with the id of its source node.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchedPoint {
    pub id: usize,
    pub coords: Vec<f64>,
}

impl SketchedPoint {
    /// Distance to another sketched point, in the projected space.
    pub fn distance_to(&self, other: &SketchedPoint) -> Result<f64> {
        approx_distance(&self.coords, &other.coords)
    }
}

impl SketchMatrix {
    /// Sample a fresh sign matrix from a deterministic ChaCha8 stream.
    pub fn build(s: usize, d: usize, seed: u64) -> Result<Self> {
        if s == 0 || d == 0 {
            return Err(Error::EmptyDimension);
        }
        let scale = 1.0 / (s as f64).sqrt();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let entries = (0..s * d)
            .map(|_| if rng.next_u32() & 1 == 0 { scale } else { -scale })
            .collect();
        Ok(SketchMatrix {
            s,
            d,
            entries,
            seed: Some(seed),
        })
    }

    /// Exact pass-through projection (`s = d`). Applying it reproduces the
    /// input coordinates, which turns the sketched algorithms into their
    /// exact counterparts; used to cross-check the two implementations.
    pub fn identity(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::EmptyDimension);
        }
        let mut entries = vec![0.0; d * d];
        for i in 0..d {
            entries[i * d + i] = 1.0;
        }
        Ok(SketchMatrix {
            s: d,
            d,
            entries,
            seed: None,
        })
    }

    /// Wrap explicit entries (row-major, length `s * d`).
    pub fn from_entries(s: usize, d: usize, entries: Vec<f64>) -> Result<Self> {
        if s == 0 || d == 0 {
            return Err(Error::EmptyDimension);
        }
        if entries.len() != s * d {
            return Err(Error::DimensionMismatch {
                expected: s * d,
                got: entries.len(),
            });
        }
        if let Some(index) = entries.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFiniteInput { index });
        }
        Ok(SketchMatrix {
            s,
            d,
            entries,
            seed: None,
        })
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn d(&self) -> usize {
        self.d
    }

    /// Seed the matrix was sampled from; `None` for identity or explicit
    /// matrices.
    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.d..(i + 1) * self.d]
    }

    /// Project a raw vector into the sketch space in `s * d` multiply-adds.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                got: x.len(),
            });
        }
        let mut out = Vec::with_capacity(self.s);
        for i in 0..self.s {
            let row = &self.entries[i * self.d..(i + 1) * self.d];
            let mut acc = 0.0;
            for j in 0..self.d {
                acc += row[j] * x[j];
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// `apply` plus the source-node id tag.
    pub fn sketch_point(&self, id: usize, x: &[f64]) -> Result<SketchedPoint> {
        Ok(SketchedPoint {
            id,
            coords: self.apply(x)?,
        })
    }
}

/// Sketch dimension sufficient for distortion `eps` and failure rate `delta`
/// over `n` points: `ceil(8 * eps^-2 * ln(n/delta))`, at least 1.
pub fn recommended_s(n: usize, eps: f64, delta: f64) -> Result<usize> {
    if n < 2 {
        return Err(Error::BadParameter(format!("n must be at least 2, got {n}")));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::BadParameter(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::BadParameter(format!(
            "delta must lie in (0, 1), got {delta}"
        )));
    }
    let s = (JL_CONSTANT / (eps * eps) * (n as f64 / delta).ln()).ceil();
    Ok((s as usize).max(1))
}

/// Euclidean distance between two sketched coordinate vectors, `O(s)` time.
pub fn approx_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            got: q.len(),
        });
    }
    Ok(crate::market::l2_distance(p, q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn build_entries_are_scaled_signs() {
        let m = SketchMatrix::build(4, 3, 1).unwrap();
        for i in 0..4 {
            for &e in m.row(i) {
                assert!(e == 0.5 || e == -0.5, "entry {e} not in {{-0.5, 0.5}}");
            }
        }
    }

    #[test]
    fn build_is_deterministic() {
        let a = SketchMatrix::build(4, 3, 1).unwrap();
        let b = SketchMatrix::build(4, 3, 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn build_rejects_empty_dimensions() {
        assert!(matches!(SketchMatrix::build(0, 3, 1), Err(Error::EmptyDimension)));
        assert!(matches!(SketchMatrix::build(3, 0, 1), Err(Error::EmptyDimension)));
    }

    #[test]
    fn sign_balance_within_five_sigma() {
        let m = SketchMatrix::build(100, 50, 2).unwrap();
        let positives = (0..100)
            .flat_map(|i| m.row(i).iter())
            .filter(|&&e| e > 0.0)
            .count() as f64;
        let total = 5000.0;
        let sigma = (total * 0.25f64).sqrt();
        assert!(
            (positives - total / 2.0).abs() <= 5.0 * sigma,
            "sign balance off: {positives} positives out of {total}"
        );
    }

    #[test]
    fn recommended_s_matches_formula() {
        assert_eq!(recommended_s(1000, 0.5, 0.1).unwrap(), 295);
        assert_eq!(recommended_s(100, 0.2, 0.01).unwrap(), 1843);
    }

    #[test]
    fn recommended_s_small_inputs_stay_positive() {
        let s = recommended_s(2, 0.999, 0.99).unwrap();
        assert!(s >= 1 && s < 20);
    }

    #[test]
    fn recommended_s_rejects_bad_parameters() {
        assert!(recommended_s(1, 0.5, 0.1).is_err());
        assert!(recommended_s(10, 0.0, 0.1).is_err());
        assert!(recommended_s(10, 1.0, 0.1).is_err());
        assert!(recommended_s(10, 0.5, 0.0).is_err());
        assert!(recommended_s(10, 0.5, 1.0).is_err());
    }

    #[test]
    fn apply_zero_vector_is_zero() {
        let m = SketchMatrix::build(6, 4, 3).unwrap();
        let out = m.apply(&[0.0; 4]).unwrap();
        assert!(out.iter().all(|&c| c == 0.0));
    }

    #[test]
    fn apply_identity_matrix_returns_input() {
        let m = SketchMatrix::identity(5).unwrap();
        let x = [0.25, -1.5, 3.0, 0.0, 9.5];
        assert_eq!(m.apply(&x).unwrap(), x.to_vec());
    }

    #[test]
    fn apply_explicit_matrix_matches_hand_multiplication() {
        // rows (1, 2, 3) and (0, -1, 1) against x = (2, 1, -1)
        let m = SketchMatrix::from_entries(2, 3, vec![1.0, 2.0, 3.0, 0.0, -1.0, 1.0]).unwrap();
        let out = m.apply(&[2.0, 1.0, -1.0]).unwrap();
        assert_eq!(out, vec![2.0 + 2.0 - 3.0, -1.0 - 1.0]);
    }

    #[test]
    fn apply_dimension_mismatch() {
        let m = SketchMatrix::build(2, 3, 0).unwrap();
        assert!(matches!(
            m.apply(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn approx_distance_coincident_points() {
        let m = SketchMatrix::build(8, 5, 11).unwrap();
        let p = m.sketch_point(0, &[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(p.distance_to(&p).unwrap(), 0.0);
    }

    #[test]
    fn single_row_sketch_is_absolute_projection() {
        let m = SketchMatrix::from_entries(1, 3, vec![0.5, -0.25, 1.0]).unwrap();
        let x = [1.0, 2.0, 3.0];
        let y = [0.5, 0.0, -1.0];
        let p = m.apply(&x).unwrap();
        let q = m.apply(&y).unwrap();
        let expected = (0.5f64 * (1.0 - 0.5) + (-0.25) * (2.0 - 0.0) + 1.0 * (3.0 - (-1.0))).abs();
        assert!((approx_distance(&p, &q).unwrap() - expected).abs() < 1e-12);
    }

    fn unit_vectors(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
        use rand_chacha::ChaCha8Rng;
        use rand_core::{RngCore, SeedableRng};
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let v: Vec<f64> = (0..d)
                    .map(|_| (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0)
                    .collect();
                let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                v.into_iter().map(|x| x / norm).collect()
            })
            .collect()
    }

    #[test]
    fn distortion_band_holds_on_sampled_trials() {
        // light version of the full distortion check in the acceptance suite
        let n = 40;
        let (eps, delta) = (0.25, 0.05);
        let s = recommended_s(n, eps, delta).unwrap();
        let mut bad_trials = 0;
        for seed in 0..10u64 {
            let points = unit_vectors(n, 200, 1000 + seed);
            let m = SketchMatrix::build(s, 200, seed).unwrap();
            let sketched: Vec<Vec<f64>> = points.iter().map(|p| m.apply(p).unwrap()).collect();
            let mut violated = false;
            for i in 0..n {
                for j in (i + 1)..n {
                    let true_d = crate::market::edge_weight(&points[i], &points[j]).unwrap();
                    let approx = approx_distance(&sketched[i], &sketched[j]).unwrap();
                    if approx < (1.0 - eps) * true_d || approx > (1.0 + eps) * true_d {
                        violated = true;
                    }
                }
            }
            if violated {
                bad_trials += 1;
            }
        }
        assert!(bad_trials <= 1, "{bad_trials}/10 trials violated the band");
    }

    proptest! {
        #[test]
        fn apply_is_linear(
            x in proptest::collection::vec(-5.0f64..5.0, 6),
            y in proptest::collection::vec(-5.0f64..5.0, 6),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
        ) {
            let m = SketchMatrix::build(4, 6, 42).unwrap();
            let combo: Vec<f64> = (0..6).map(|i| a * x[i] + b * y[i]).collect();
            let lhs = m.apply(&combo).unwrap();
            let mx = m.apply(&x).unwrap();
            let my = m.apply(&y).unwrap();
            for i in 0..4 {
                let rhs = a * mx[i] + b * my[i];
                let tol = 1e-9 * (1.0 + rhs.abs());
                prop_assert!((lhs[i] - rhs).abs() <= tol);
            }
        }

        #[test]
        fn scaling_commutes_with_apply(x in proptest::collection::vec(-5.0f64..5.0, 5)) {
            let m = SketchMatrix::build(3, 5, 7).unwrap();
            let doubled: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
            let lhs = m.apply(&doubled).unwrap();
            let rhs = m.apply(&x).unwrap();
            for i in 0..3 {
                let tol = 1e-9 * (1.0 + rhs[i].abs());
                prop_assert!((lhs[i] - 2.0 * rhs[i]).abs() <= tol);
            }
        }
    }
}
