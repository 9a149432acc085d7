//! The generalized BBS on continuous paths.
//!
//! Paths are piecewise linear on a uniform grid `x_k = k h`, so every
//! supremum or infimum over an interval with grid endpoints is attained at
//! a node and all transforms reduce to node arithmetic. The window is
//! treated as the whole line: running extrema start at the left edge. The
//! truncated operator makes the dependence on that choice explicit.

use std::io;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BbsError, Result};
use crate::lattice::{check_color, csv_err, PathEncoding};
use crate::pitman::{forward_window, inverse_window};
use crate::random::ColorLaw;
use crate::rng::{stream, RNG_ALGORITHM};
use crate::simplex::{build_simplex_basis, dot, SimplexBasis};
use crate::stats::ks_two_sample;

const GRID_TOL: f64 = 1e-9;

/// Piecewise-linear path in `R^kappa` with nodes `k h`, `k_min <= k <= k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledPath {
    kappa: usize,
    h: f64,
    k_min: i64,
    /// Row-major, one row of `kappa` values per node.
    values: Vec<f64>,
}

impl SampledPath {
    pub fn new(kappa: usize, h: f64, k_min: i64, values: Vec<f64>) -> Result<Self> {
        if kappa == 0 {
            return Err(BbsError::ZeroKappa);
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(BbsError::InvalidArgument(format!(
                "grid step {h} must be positive"
            )));
        }
        if !values.len().is_multiple_of(kappa) {
            return Err(BbsError::DimensionMismatch {
                expected: kappa,
                got: values.len() % kappa,
            });
        }
        let nodes = (values.len() / kappa) as i64;
        if k_min > 0 || k_min + nodes - 1 < 0 {
            return Err(BbsError::InvalidArgument("grid must contain x = 0".into()));
        }
        let zero = (-k_min) as usize * kappa;
        if values[zero..zero + kappa].iter().any(|&v| v != 0.0) {
            return Err(BbsError::InvalidArgument(
                "path must vanish at x = 0".into(),
            ));
        }
        Ok(SampledPath {
            kappa,
            h,
            k_min,
            values,
        })
    }

    /// Nodes `k_min..=k_max`, value from `f(k)`.
    pub fn from_fn(
        kappa: usize,
        h: f64,
        k_min: i64,
        k_max: i64,
        f: impl Fn(i64) -> Vec<f64>,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity((k_max - k_min + 1).max(0) as usize * kappa);
        for k in k_min..=k_max {
            let row = f(k);
            if row.len() != kappa {
                return Err(BbsError::DimensionMismatch {
                    expected: kappa,
                    got: row.len(),
                });
            }
            values.extend(row);
        }
        Self::new(kappa, h, k_min, values)
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn k_min(&self) -> i64 {
        self.k_min
    }

    pub fn k_max(&self) -> i64 {
        self.k_min + self.nodes() as i64 - 1
    }

    pub fn nodes(&self) -> usize {
        self.values.len() / self.kappa
    }

    /// Index of the node at `x = 0`.
    pub fn anchor(&self) -> usize {
        (-self.k_min) as usize
    }

    pub fn x(&self, idx: usize) -> f64 {
        (self.k_min + idx as i64) as f64 * self.h
    }

    pub fn row(&self, idx: usize) -> &[f64] {
        &self.values[idx * self.kappa..(idx + 1) * self.kappa]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.kappa)
    }

    pub fn span(&self) -> (f64, f64) {
        (self.k_min as f64 * self.h, self.k_max() as f64 * self.h)
    }

    /// Node index of `x`, if `x` is a node up to rounding.
    pub fn node_of(&self, x: f64) -> Option<usize> {
        let k = (x / self.h).round();
        if (k * self.h - x).abs() > GRID_TOL * self.h.max(1.0) {
            return None;
        }
        let k = k as i64;
        (self.k_min..=self.k_max())
            .contains(&k)
            .then(|| (k - self.k_min) as usize)
    }

    /// Linear interpolation at `x`.
    pub fn value_at(&self, x: f64) -> Result<Vec<f64>> {
        let (lo, hi) = self.span();
        if x < lo - GRID_TOL || x > hi + GRID_TOL {
            return Err(BbsError::OutOfWindow {
                index: x.floor() as i64,
                first: self.k_min,
                last: self.k_max(),
            });
        }
        let t = (x / self.h - self.k_min as f64).clamp(0.0, (self.nodes() - 1) as f64);
        let k = (t.floor() as usize).min(self.nodes().saturating_sub(2));
        let frac = t - k as f64;
        if self.nodes() == 1 {
            return Ok(self.row(0).to_vec());
        }
        Ok(self
            .row(k)
            .iter()
            .zip(self.row(k + 1))
            .map(|(a, b)| a + frac * (b - a))
            .collect())
    }

    /// Values with every node mapped through `f`.
    fn map_rows(&self, mut f: impl FnMut(usize, &[f64]) -> Vec<f64>) -> SampledPath {
        let mut values = Vec::with_capacity(self.values.len());
        for (idx, row) in self.rows().enumerate() {
            values.extend(f(idx, row));
        }
        SampledPath {
            values,
            ..self.clone()
        }
    }

    /// `x -> a S_{b x}`, represented exactly on the grid of step `h / b`.
    pub fn rescaled(&self, a: f64, b: f64) -> Result<SampledPath> {
        if !(a > 0.0 && b > 0.0) {
            return Err(BbsError::InvalidArgument(
                "scaling factors must be positive".into(),
            ));
        }
        let values = self.values.iter().map(|v| a * v).collect();
        SampledPath::new(self.kappa, self.h / b, self.k_min, values)
    }

    /// Largest node-wise sup-norm distance, or infinity on different grids.
    pub fn max_deviation(&self, other: &SampledPath) -> f64 {
        if self.kappa != other.kappa
            || self.k_min != other.k_min
            || self.nodes() != other.nodes()
            || (self.h - other.h).abs() > GRID_TOL * self.h
        {
            return f64::INFINITY;
        }
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// CSV with header `x,S1,...,Sk`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["x".to_string()];
        header.extend((1..=self.kappa).map(|j| format!("S{j}")));
        w.write_record(&header).map_err(csv_err)?;
        for (idx, row) in self.rows().enumerate() {
            let mut rec = vec![self.x(idx).to_string()];
            rec.extend(row.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| csv_err(e.into()))?;
        Ok(())
    }
}

fn check_basis(path: &SampledPath, basis: &SimplexBasis) -> Result<()> {
    if basis.kappa() != path.kappa {
        return Err(BbsError::DimensionMismatch {
            expected: path.kappa,
            got: basis.kappa(),
        });
    }
    Ok(())
}

/// `A_i` at every node.
pub fn a_heights(path: &SampledPath, basis: &SimplexBasis, i: usize) -> Result<Vec<f64>> {
    check_basis(path, basis)?;
    check_color(path.kappa, i)?;
    let edge = basis.edge(i);
    let norm2 = dot(&edge, &edge);
    Ok(path.rows().map(|r| -2.0 * dot(&edge, r) / norm2).collect())
}

/// `A_i S_x = -2 (e_i - e_0) . S_x / |e_i - e_0|^2`, interpolated.
pub fn a_height_continuum(
    path: &SampledPath,
    basis: &SimplexBasis,
    i: usize,
    x: f64,
) -> Result<f64> {
    check_basis(path, basis)?;
    check_color(path.kappa, i)?;
    let edge = basis.edge(i);
    Ok(-2.0 * dot(&edge, &path.value_at(x)?) / dot(&edge, &edge))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContinuumDirection {
    Forward,
    Inverse,
}

/// Two-sided `P_alpha` or its inverse, with the running infimum taken over
/// the window.
pub fn pitman_continuum(
    path: &SampledPath,
    alpha: &[f64],
    direction: ContinuumDirection,
) -> Result<SampledPath> {
    if alpha.len() != path.kappa {
        return Err(BbsError::DimensionMismatch {
            expected: path.kappa,
            got: alpha.len(),
        });
    }
    let norm2 = dot(alpha, alpha);
    if norm2 == 0.0 {
        return Err(BbsError::InvalidArgument("alpha must be nonzero".into()));
    }
    let proj: Vec<f64> = path.rows().map(|r| dot(alpha, r) / norm2).collect();
    let out = match direction {
        ContinuumDirection::Forward => forward_window(&proj, path.anchor()),
        ContinuumDirection::Inverse => inverse_window(&proj, path.anchor()),
    };
    Ok(path.map_rows(|idx, r| {
        let d = out[idx] - proj[idx];
        r.iter().zip(alpha).map(|(x, a)| x + d * a).collect()
    }))
}

/// `tau_(0,i) S_x = S_x + A_i S_x (e_i - e_0)`.
pub fn tau_continuum(path: &SampledPath, basis: &SimplexBasis, i: usize) -> Result<SampledPath> {
    let a = a_heights(path, basis, i)?;
    let edge = basis.edge(i);
    Ok(shift_along(path, &edge, |idx| a[idx]))
}

fn shift_along(path: &SampledPath, edge: &[f64], coef: impl Fn(usize) -> f64) -> SampledPath {
    path.map_rows(|idx, r| {
        let c = coef(idx);
        r.iter().zip(edge).map(|(x, e)| x + c * e).collect()
    })
}

/// `T_i S_x = S_x + (A_i S_x - sup_{y<=x} A_i S_y + sup_{y<=0} A_i S_y)(e_i - e_0)`.
pub fn apply_Ti_continuum(
    path: &SampledPath,
    basis: &SimplexBasis,
    i: usize,
) -> Result<SampledPath> {
    let a = a_heights(path, basis, i)?;
    let mut sup = f64::NEG_INFINITY;
    let running: Vec<f64> = a
        .iter()
        .map(|&v| {
            sup = sup.max(v);
            sup
        })
        .collect();
    let m0 = running[path.anchor()];
    let edge = basis.edge(i);
    Ok(shift_along(path, &edge, |k| a[k] - running[k] + m0))
}

/// `T_i` as `tau_(0,i) P_{e_i - e_0}`, the definition the closed form above
/// is derived from.
pub fn apply_Ti_continuum_via_pitman(
    path: &SampledPath,
    basis: &SimplexBasis,
    i: usize,
) -> Result<SampledPath> {
    check_color(path.kappa, i)?;
    let p = pitman_continuum(path, &basis.edge(i), ContinuumDirection::Forward)?;
    tau_continuum(&p, basis, i)
}

/// `T_i^{-1} = P^{-1}_{e_i - e_0} tau_(0,i)`.
pub fn apply_Ti_inverse_continuum(
    path: &SampledPath,
    basis: &SimplexBasis,
    i: usize,
) -> Result<SampledPath> {
    let t = tau_continuum(path, basis, i)?;
    pitman_continuum(&t, &basis.edge(i), ContinuumDirection::Inverse)
}

fn lprime_index(path: &SampledPath, lprime: f64) -> Result<usize> {
    let (lo, hi) = path.span();
    if lprime.is_nan() || lprime <= 0.0 || -lprime < lo - GRID_TOL || lprime > hi + GRID_TOL {
        return Err(BbsError::InvalidArgument(format!(
            "L' = {lprime} must lie in (0, L] for the window [{lo}, {hi}]"
        )));
    }
    path.node_of(-lprime).ok_or_else(|| {
        BbsError::InvalidArgument(format!("L' = {lprime} is not a multiple of h = {}", path.h))
    })
}

/// `T_i^{L'}`: the running supremum only looks back to `-L'`, is frozen at
/// `A_i S_{-L'}` left of it and at its value at `L'` right of it.
pub fn apply_Ti_truncated(
    path: &SampledPath,
    basis: &SimplexBasis,
    i: usize,
    lprime: f64,
) -> Result<SampledPath> {
    let a = a_heights(path, basis, i)?;
    let left = lprime_index(path, lprime)?;
    let right = path.node_of(lprime).unwrap_or(path.nodes() - 1);
    let mut m = vec![0.0; a.len()];
    let mut sup = a[left];
    for (k, slot) in m.iter_mut().enumerate() {
        if k < left {
            *slot = a[left];
        } else {
            if k <= right {
                sup = sup.max(a[k]);
            }
            *slot = sup;
        }
    }
    let m0 = m[path.anchor()];
    let edge = basis.edge(i);
    Ok(shift_along(path, &edge, |k| a[k] - m[k] + m0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationCheck {
    /// `sup_{y<=-L'} A_i S_y <= A_i S_{-L''}` on the window.
    pub condition_holds: bool,
    /// Sup-norm distance between `T_i^{L'}` and the window `T_i` on
    /// `[-L'', L'']`.
    pub deviation: f64,
}

/// Compares the truncated and window operators on `[-analysis, analysis]`.
pub fn truncation_check(
    path: &SampledPath,
    basis: &SimplexBasis,
    i: usize,
    lprime: f64,
    analysis: f64,
) -> Result<TruncationCheck> {
    let a = a_heights(path, basis, i)?;
    let left = lprime_index(path, lprime)?;
    let lo = path.node_of(-analysis).ok_or_else(|| {
        BbsError::InvalidArgument(format!("analysis bound {analysis} is not a node"))
    })?;
    let hi = path.node_of(analysis).ok_or_else(|| {
        BbsError::InvalidArgument(format!("analysis bound {analysis} is not a node"))
    })?;
    let tail_sup = a[..=left].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let full = apply_Ti_continuum(path, basis, i)?;
    let trunc = apply_Ti_truncated(path, basis, i, lprime)?;
    let mut dev = 0.0f64;
    for k in lo..=hi {
        for (x, y) in full.row(k).iter().zip(trunc.row(k)) {
            dev = dev.max((x - y).abs());
        }
    }
    Ok(TruncationCheck {
        condition_holds: tail_sup <= a[lo],
        deviation: dev,
    })
}

/// Embeds a lattice path with `h = 1`, one node per site.
pub fn embed_lattice(path: &PathEncoding, basis: &SimplexBasis) -> Result<SampledPath> {
    let lo = path.start().min(0);
    let hi = path.end().max(0);
    let mut values = Vec::with_capacity((hi - lo + 1) as usize * path.kappa());
    for n in lo..=hi {
        values.extend(path.point(basis, n)?);
    }
    SampledPath::new(path.kappa(), 1.0, lo, values)
}

/// Drift `D = sum c_j e_j`, given through the coefficients `c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    kappa: usize,
    c: Vec<f64>,
}

const DRIFT_TOL: f64 = 1e-12;

impl DriftSpec {
    pub fn new(kappa: usize, c: Vec<f64>) -> Result<Self> {
        if kappa == 0 {
            return Err(BbsError::ZeroKappa);
        }
        if c.len() != kappa + 1 {
            return Err(BbsError::InadmissibleDrift(format!(
                "expected {} coefficients, got {}",
                kappa + 1,
                c.len()
            )));
        }
        let total: f64 = c.iter().sum();
        if total.abs() > DRIFT_TOL {
            return Err(BbsError::InadmissibleDrift(format!(
                "coefficients sum to {total}, not 0"
            )));
        }
        Ok(DriftSpec { kappa, c })
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn c(&self) -> &[f64] {
        &self.c
    }

    pub fn drift(&self, basis: &SimplexBasis) -> Vec<f64> {
        basis.combine(&self.c)
    }

    /// Same spec with every coefficient multiplied by `s`.
    pub fn scaled(&self, s: f64) -> DriftSpec {
        DriftSpec {
            kappa: self.kappa,
            c: self.c.iter().map(|c| c * s).collect(),
        }
    }

    /// Drift of `A_i` per unit length, `c_0 - c_i`.
    pub fn a_drift(&self, i: usize) -> f64 {
        self.c[0] - self.c[i]
    }
}

/// `c_0 > c_i` for every color, which is `(e_i - e_0) . D < 0` since
/// `(e_i - e_0) . D = (c_i - c_0) |e_i - e_0|^2 / 2`.
pub fn drift_admissible(spec: &DriftSpec) -> bool {
    (1..=spec.kappa).all(|i| spec.c[0] > spec.c[i])
}

fn require_admissible(spec: &DriftSpec) -> Result<()> {
    if drift_admissible(spec) {
        Ok(())
    } else {
        Err(BbsError::InadmissibleDrift(format!(
            "need c_0 > c_i for every color, got {:?}",
            spec.c
        )))
    }
}

fn grid_steps(l: f64, h: f64) -> Result<i64> {
    if !(h > 0.0 && l > 0.0) {
        return Err(BbsError::InvalidArgument(format!(
            "need L > 0 and h > 0, got {l}, {h}"
        )));
    }
    let k = (l / h).round();
    if (k * h - l).abs() > GRID_TOL * l.max(1.0) {
        return Err(BbsError::InvalidArgument(format!(
            "L = {l} is not a multiple of h = {h}"
        )));
    }
    Ok(k as i64)
}

fn brownian_from_rng(
    spec: &DriftSpec,
    d: &[f64],
    k: i64,
    h: f64,
    rng: &mut crate::rng::Rng,
) -> Result<SampledPath> {
    let kappa = spec.kappa;
    let m = k as usize;
    let sd = h.sqrt();
    let mut values = vec![0.0; (2 * m + 1) * kappa];
    // right half from B^1, then left half from B^2, so the two sides use
    // disjoint parts of the stream
    for side in [1i64, -1] {
        let mut cur = vec![0.0; kappa];
        for step in 1..=m {
            for (j, c) in cur.iter_mut().enumerate() {
                let z: f64 = StandardNormal.sample(rng);
                *c += side as f64 * (sd * z + d[j] * h);
            }
            let idx = (m as i64 + side * step as i64) as usize;
            values[idx * kappa..(idx + 1) * kappa].copy_from_slice(&cur);
        }
    }
    SampledPath::new(kappa, h, -k, values)
}

/// Two-sided Brownian motion with drift on `[-L, L]`: `S_x = B^1_x + x D`
/// and `S_{-x} = -(B^2_x + x D)` for `x >= 0`.
pub fn sample_brownian_with_drift(
    spec: &DriftSpec,
    l: f64,
    h: f64,
    seed: u64,
) -> Result<SampledPath> {
    require_admissible(spec)?;
    let k = grid_steps(l, h)?;
    let basis = build_simplex_basis(spec.kappa)?;
    let d = spec.drift(&basis);
    brownian_from_rng(spec, &d, k, h, &mut crate::rng::rng_from_seed(seed))
}

/// `X^{(n)}_x = sqrt(kappa / n) Y^{(n)}_{n x}` on `[-L, L]`, emitted every
/// `stride` walk steps. The walk takes step `e_j` with probability
/// `1/(kappa+1) + c_j / sqrt(n kappa)`; nodes sit at integer walk times,
/// where the interpolation `Y` is exact.
pub fn donsker_rescale(
    spec: &DriftSpec,
    n: u64,
    l: f64,
    stride: u64,
    seed: u64,
) -> Result<SampledPath> {
    require_admissible(spec)?;
    if stride == 0 {
        return Err(BbsError::InvalidArgument("stride must be positive".into()));
    }
    let steps = grid_steps(l * n as f64, 1.0)?;
    if steps % stride as i64 != 0 {
        return Err(BbsError::InvalidArgument(format!(
            "L n = {steps} is not a multiple of the stride {stride}"
        )));
    }
    let law = ColorLaw::near_critical(spec.kappa, &spec.c, n as f64)?;
    let basis = build_simplex_basis(spec.kappa)?;
    let dist =
        WeightedIndex::new(law.probs()).map_err(|e| BbsError::InadmissibleLaw(e.to_string()))?;
    let kappa = spec.kappa;
    let scale = (kappa as f64 / n as f64).sqrt();
    let m = (steps / stride as i64) as usize;
    let mut rng = crate::rng::rng_from_seed(seed);
    let mut values = vec![0.0; (2 * m + 1) * kappa];
    for side in [1i64, -1] {
        let mut cur = vec![0.0; kappa];
        for node in 1..=m {
            for _ in 0..stride {
                let e = basis.vector(dist.sample(&mut rng));
                cur.iter_mut()
                    .zip(e)
                    .for_each(|(c, v)| *c += side as f64 * v);
            }
            let idx = (m as i64 + side * node as i64) as usize;
            for (slot, c) in values[idx * kappa..(idx + 1) * kappa].iter_mut().zip(&cur) {
                *slot = scale * c;
            }
        }
    }
    SampledPath::new(kappa, stride as f64 / n as f64, -(m as i64), values)
}

/// Mean vector and covariance matrix (row-major) of one step `xi^(n)`.
pub fn step_moments(spec: &DriftSpec, n: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let law = ColorLaw::near_critical(spec.kappa, &spec.c, n)?;
    let basis = build_simplex_basis(spec.kappa)?;
    let k = spec.kappa;
    let mut mean = vec![0.0; k];
    let mut second = vec![0.0; k * k];
    for (j, &p) in law.probs().iter().enumerate() {
        let e = basis.vector(j);
        for s in 0..k {
            mean[s] += p * e[s];
            for t in 0..k {
                second[s * k + t] += p * e[s] * e[t];
            }
        }
    }
    let cov = (0..k * k)
        .map(|st| second[st] - mean[st / k] * mean[st % k])
        .collect();
    Ok((mean, cov))
}

/// `A_i S_x / (x (c_0 - c_i))` at `x = -L` and `x = L`; both tend to 1 for
/// admissible drifts.
pub fn drift_ratio(path: &SampledPath, spec: &DriftSpec, i: usize) -> Result<(f64, f64)> {
    let basis = build_simplex_basis(spec.kappa)?;
    let a = a_heights(path, &basis, i)?;
    let d = spec.a_drift(i);
    let (lo, hi) = path.span();
    Ok((a[0] / (lo * d), a[a.len() - 1] / (hi * d)))
}

/// Largest node deviation between `T_i(a S_{b .})` and `a (T_i S)_{b .}`.
pub fn scaling_equivariance_check(
    path: &SampledPath,
    basis: &SimplexBasis,
    i: usize,
    a: f64,
    b: f64,
) -> Result<f64> {
    let lhs = apply_Ti_continuum(&path.rescaled(a, b)?, basis, i)?;
    let rhs = apply_Ti_continuum(path, basis, i)?.rescaled(a, b)?;
    let mut dev = lhs.max_deviation(&rhs);
    // also on the original grid, where the nodes of the rescaled path need
    // not fall
    let (lo, hi) = lhs.span();
    for idx in 0..path.nodes() {
        let x = path.x(idx);
        if x < lo || x > hi {
            continue;
        }
        for (u, v) in lhs.value_at(x)?.iter().zip(rhs.value_at(x)?) {
            dev = dev.max((u - v).abs());
        }
    }
    Ok(dev)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmInvarianceParams {
    pub drift: DriftSpec,
    pub l: f64,
    pub h: f64,
    pub lprime: f64,
    /// Half-width of the analysis window; the truncation condition is
    /// checked against it.
    pub analysis: f64,
    pub seeds: usize,
    pub seed: u64,
    pub threshold: f64,
    /// The control (drift doubled) must exceed this KS distance.
    pub control_threshold: f64,
}

impl BmInvarianceParams {
    pub fn new(drift: DriftSpec, seeds: usize, seed: u64) -> Self {
        BmInvarianceParams {
            drift,
            l: 50.0,
            h: 0.01,
            lprime: 25.0,
            analysis: 12.5,
            seeds,
            seed,
            threshold: 0.035,
            control_threshold: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionalKs {
    pub name: String,
    pub ks: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorBmReport {
    pub color: usize,
    pub used_seeds: usize,
    pub contaminated_seeds: usize,
    pub functionals: Vec<FunctionalKs>,
    pub max_ks: f64,
    pub pass: bool,
    pub control_used_seeds: usize,
    pub control_max_ks: f64,
    pub control_rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BmInvarianceReport {
    pub params: BmInvarianceParams,
    pub rng: String,
    pub functional_names: Vec<String>,
    pub colors: Vec<ColorBmReport>,
    pub pass: bool,
    pub control_pass: bool,
}

fn functional_names(kappa: usize) -> Vec<String> {
    let mut names = Vec::new();
    for j in 1..=kappa {
        names.push(format!("S{j}(1)-S{j}(0)"));
        names.push(format!("S{j}(0)-S{j}(-1)"));
    }
    for j in 1..=kappa {
        names.push(format!("A{j}(1)-A{j}(0)"));
    }
    names
}

fn functionals(path: &SampledPath, basis: &SimplexBasis) -> Result<Vec<f64>> {
    let at = |x: f64| path.node_of(x).map(|k| path.row(k).to_vec());
    let (p1, p0, m1) = match (at(1.0), at(0.0), at(-1.0)) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => {
            return Err(BbsError::InvalidArgument(
                "grid must contain -1, 0 and 1".into(),
            ))
        }
    };
    let mut out = Vec::new();
    for j in 0..path.kappa {
        out.push(p1[j] - p0[j]);
        out.push(p0[j] - m1[j]);
    }
    for j in 1..=path.kappa {
        let edge = basis.edge(j);
        let a = |v: &[f64]| -2.0 * dot(&edge, v) / dot(&edge, &edge);
        out.push(a(&p1) - a(&p0));
    }
    Ok(out)
}

/// Per seed and color: the functionals of `S` and of `T_i^{L'} S`, or
/// `None` when the truncation condition fails on the analysis window.
type SeedSample = Vec<Option<(Vec<f64>, Vec<f64>)>>;

fn run_seed(
    params: &BmInvarianceParams,
    spec: &DriftSpec,
    basis: &SimplexBasis,
    k: i64,
    index: u64,
) -> Result<SeedSample> {
    let d = spec.drift(basis);
    let mut rng = stream(params.seed, index);
    let path = brownian_from_rng(spec, &d, k, params.h, &mut rng)?;
    let base = functionals(&path, basis)?;
    (1..=spec.kappa)
        .map(|i| {
            let check = truncation_check(&path, basis, i, params.lprime, params.analysis)?;
            if !check.condition_holds {
                return Ok(None);
            }
            let t = apply_Ti_truncated(&path, basis, i, params.lprime)?;
            Ok(Some((base.clone(), functionals(&t, basis)?)))
        })
        .collect()
}

fn column(rows: &[&(Vec<f64>, Vec<f64>)], f: usize, transformed: bool) -> Vec<f64> {
    rows.iter()
        .map(|r| if transformed { r.1[f] } else { r.0[f] })
        .collect()
}

/// Samples `S`, applies `T_i^{L'}` for each color and compares unit
/// increments of `S` and `T_i S` by two-sample KS across seeds. The same
/// seeds drive the control, whose paths carry drift `2 D`; its transformed
/// functionals are compared against the untransformed drift-`D` sample.
/// Seeds whose left tail could reach the analysis window through the
/// running supremum are excluded and counted.
pub fn bm_invariance_test(params: &BmInvarianceParams) -> Result<BmInvarianceReport> {
    let spec = &params.drift;
    require_admissible(spec)?;
    if params.lprime > params.l || params.analysis >= params.lprime || params.analysis < 1.0 {
        return Err(BbsError::InvalidArgument(format!(
            "need 1 <= analysis < L' <= L, got {}, {}, {}",
            params.analysis, params.lprime, params.l
        )));
    }
    if params.seeds < 2 {
        return Err(BbsError::InvalidArgument("need at least two seeds".into()));
    }
    let k = grid_steps(params.l, params.h)?;
    let basis = build_simplex_basis(spec.kappa)?;
    let control = spec.scaled(2.0);

    let samples: Vec<(SeedSample, SeedSample)> = (0..params.seeds as u64)
        .into_par_iter()
        .map(|s| {
            Ok((
                run_seed(params, spec, &basis, k, 2 * s)?,
                run_seed(params, &control, &basis, k, 2 * s)?,
            ))
        })
        .collect::<Result<_>>()?;

    let names = functional_names(spec.kappa);
    let mut colors = Vec::new();
    for i in 1..=spec.kappa {
        let used: Vec<_> = samples.iter().filter_map(|s| s.0[i - 1].as_ref()).collect();
        let ctrl: Vec<_> = samples.iter().filter_map(|s| s.1[i - 1].as_ref()).collect();
        if used.len() < 2 || ctrl.len() < 2 {
            return Err(BbsError::InvalidArgument(format!(
                "color {i}: too few uncontaminated seeds"
            )));
        }
        let mut fks = Vec::new();
        let mut control_max = 0.0f64;
        for (f, name) in names.iter().enumerate() {
            let base = column(&used, f, false);
            fks.push(FunctionalKs {
                name: name.clone(),
                ks: ks_two_sample(&base, &column(&used, f, true)),
            });
            control_max = control_max.max(ks_two_sample(&base, &column(&ctrl, f, true)));
        }
        let max_ks = fks.iter().map(|f| f.ks).fold(0.0, f64::max);
        colors.push(ColorBmReport {
            color: i,
            used_seeds: used.len(),
            contaminated_seeds: params.seeds - used.len(),
            functionals: fks,
            max_ks,
            pass: max_ks < params.threshold,
            control_used_seeds: ctrl.len(),
            control_max_ks: control_max,
            control_rejected: control_max > params.control_threshold,
        });
    }
    Ok(BmInvarianceReport {
        params: params.clone(),
        rng: RNG_ALGORITHM.to_string(),
        functional_names: names,
        pass: colors.iter().all(|c| c.pass),
        control_pass: colors.iter().all(|c| c.control_rejected),
        colors,
    })
}
