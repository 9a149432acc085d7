//! Regular-simplex basis `e_0, ..., e_kappa` of `R^kappa`.
//!
//! The vectors are unit length with pairwise inner product `-1/kappa`, so
//! they sum to zero and any `kappa` of them form a basis. Lattice dynamics
//! never touch these floats (they work on integer counts); the basis is used
//! by the continuum code and by cross-checks between the count form and the
//! projection form of the heights.

use serde::Serialize;

use crate::error::{BbsError, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimplexBasis {
    kappa: usize,
    /// Row-major, `(kappa + 1) x kappa`; row `i` is `e_i`.
    vectors: Vec<f64>,
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Builds the basis by centering the standard basis of `R^(kappa+1)`,
/// scaling it to unit length and expressing it in an orthonormal frame of
/// the zero-sum hyperplane. The frame comes from Gram-Schmidt on the
/// centered seeds `delta_k - 1/(kappa+1)`, `k < kappa`, so the output is
/// fully deterministic.
pub fn build_simplex_basis(kappa: usize) -> Result<SimplexBasis> {
    if kappa == 0 {
        return Err(BbsError::ZeroKappa);
    }
    let m = kappa + 1;
    let center = 1.0 / m as f64;
    let centered = |i: usize| -> Vec<f64> {
        (0..m)
            .map(|j| if i == j { 1.0 - center } else { -center })
            .collect()
    };

    let mut frame: Vec<Vec<f64>> = Vec::with_capacity(kappa);
    for k in 0..kappa {
        let mut v = centered(k);
        // modified Gram-Schmidt, two passes for stability at large kappa
        for _ in 0..2 {
            for u in &frame {
                let c = dot(&v, u);
                v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = dot(&v, &v).sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        frame.push(v);
    }

    let scale = (m as f64 / kappa as f64).sqrt();
    let mut vectors = Vec::with_capacity(m * kappa);
    for i in 0..m {
        let c = centered(i);
        for u in &frame {
            vectors.push(scale * dot(&c, u));
        }
    }
    Ok(SimplexBasis { kappa, vectors })
}

impl SimplexBasis {
    /// Wraps hand-made vectors (one per row). Used to test the Gram report
    /// on bases that were not produced by [`build_simplex_basis`].
    pub fn from_vectors(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let kappa = vectors.len().checked_sub(1).ok_or(BbsError::ZeroKappa)?;
        if kappa == 0 {
            return Err(BbsError::ZeroKappa);
        }
        let mut flat = Vec::with_capacity(vectors.len() * kappa);
        for v in &vectors {
            if v.len() != kappa {
                return Err(BbsError::DimensionMismatch {
                    expected: kappa,
                    got: v.len(),
                });
            }
            flat.extend_from_slice(v);
        }
        Ok(SimplexBasis {
            kappa,
            vectors: flat,
        })
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.kappa..(i + 1) * self.kappa]
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[f64]> {
        self.vectors.chunks_exact(self.kappa)
    }

    /// `e_i - e_0`, the direction along which color `i` reflects.
    pub fn edge(&self, i: usize) -> Vec<f64> {
        self.difference(i, 0)
    }

    /// `e_j - e_k`.
    pub fn difference(&self, j: usize, k: usize) -> Vec<f64> {
        self.vector(j)
            .iter()
            .zip(self.vector(k))
            .map(|(a, b)| a - b)
            .collect()
    }

    /// `sum_j counts[j] * e_j`.
    pub fn combine(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.kappa];
        for (c, e) in coeffs.iter().zip(self.vectors()) {
            out.iter_mut().zip(e).for_each(|(o, x)| *o += c * x);
        }
        out
    }

    /// Same as [`combine`](Self::combine) for integer counts.
    pub fn embed_counts(&self, counts: &[i64]) -> Vec<f64> {
        let mut out = vec![0.0; self.kappa];
        for (&c, e) in counts.iter().zip(self.vectors()) {
            if c != 0 {
                let c = c as f64;
                out.iter_mut().zip(e).for_each(|(o, x)| *o += c * x);
            }
        }
        out
    }

    /// The reflection swapping `e_j` and `e_k` and fixing every other
    /// vertex, i.e. the transposition `tau_(j,k)` acting on `R^kappa`.
    pub fn transpose(&self, v: &[f64], j: usize, k: usize) -> Vec<f64> {
        let u = self.difference(j, k);
        let c = 2.0 * dot(v, &u) / dot(&u, &u);
        v.iter().zip(&u).map(|(x, y)| x - c * y).collect()
    }

    /// Largest absolute deviation of the Gram matrix from 1 on the diagonal
    /// and `-1/kappa` off it.
    pub fn gram_report(&self) -> f64 {
        let target_off = -1.0 / self.kappa as f64;
        let mut worst: f64 = 0.0;
        for i in 0..=self.kappa {
            for j in 0..=self.kappa {
                let g = dot(self.vector(i), self.vector(j));
                let t = if i == j { 1.0 } else { target_off };
                worst = worst.max((g - t).abs());
            }
        }
        worst
    }

    /// Coefficients `a_0..a_kappa` with `sum a_i = 0` and `sum a_i e_i = v`.
    ///
    /// Pairing with `e_i` gives `e_i . v = a_i (1 + 1/kappa)` once the
    /// zero-sum constraint is used, so the system solves in closed form.
    pub fn decompose(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.kappa {
            return Err(BbsError::DimensionMismatch {
                expected: self.kappa,
                got: v.len(),
            });
        }
        let k = self.kappa as f64;
        let factor = k / (k + 1.0);
        let mut a: Vec<f64> = self.vectors().map(|e| factor * dot(e, v)).collect();
        // remove rounding drift so the constraint holds to the last ulp
        let mean = a.iter().sum::<f64>() / a.len() as f64;
        a.iter_mut().for_each(|x| *x -= mean);
        Ok(a)
    }
}
