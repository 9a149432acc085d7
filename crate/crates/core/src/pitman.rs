//! Discrete Pitman transforms.
//!
//! Paths live on a finite window containing 0 plus a tail descriptor. With
//! [`Tail::Slopes`] the path continues linearly beyond each edge, which makes
//! every infimum over a half-line computable in closed form:
//!
//! * two-sided `P_1` needs the left tail bounded below (left slope `<= 0`),
//!   in which case the left-tail infimum sits at the window edge. If the right
//!   slope is negative the window is extended until the path reaches its
//!   running infimum; past that point `P_1 pi = -pi + const`.
//! * `P_1^{-1}` is the mirror image: `P_1^{-1} pi(n) = (P_1 rho)(-n)` with
//!   `rho(n) = pi(-n)`.
//!
//! [`Tail::Windowed`] paths have unknown tails. Only the one-sided transform
//! is defined for them; two-sided transforms report [`BbsError::Undecidable`].
//! The window-truncated kernels ([`forward_window`], [`inverse_window`]) are
//! exposed for the continuum code, which treats its window as the whole line.

use serde::{Deserialize, Serialize};

use crate::error::{BbsError, Result};
use crate::simplex::dot;

/// Absolute tolerance for comparisons on real-valued paths. Integer and
/// half-integer inputs are represented exactly, so this is only relevant for
/// genuinely real data.
pub const PATH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tail {
    /// `pi(n) = pi(first) + (n - first) * left` for `n < first`, and
    /// `pi(n) = pi(last) + (n - last) * right` for `n > last`.
    Slopes {
        left: f64,
        right: f64,
    },
    Windowed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Yes,
    No,
    Undecidable,
}

impl Decision {
    pub fn and(self, other: Decision) -> Decision {
        match (self, other) {
            (Decision::No, _) | (_, Decision::No) => Decision::No,
            (Decision::Yes, Decision::Yes) => Decision::Yes,
            _ => Decision::Undecidable,
        }
    }

    fn from_bool(b: bool) -> Decision {
        if b {
            Decision::Yes
        } else {
            Decision::No
        }
    }
}

/// The domain sets on which the two-sided transforms and their round trips
/// are defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainSet {
    /// `inf_{m <= 0} pi(m) > -inf`.
    P1,
    /// `inf_{m >= 0} pi(m) > -inf`.
    P1Inv,
    /// `P1`, steps of magnitude in `{0, c}`, and `inf_{m<=n} pi = pi(n)`
    /// infinitely often as `n -> +inf`.
    P1InvP1,
    /// Mirror of `P1InvP1`.
    P1P1Inv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    OneSided,
    Forward,
    Inverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarPath {
    offset: i64,
    values: Vec<f64>,
    tail: Tail,
}

fn check_window(offset: i64, len: usize) -> Result<usize> {
    if offset > 0 || offset + (len as i64) <= 0 {
        return Err(BbsError::AnchorOutsideWindow {
            first: offset,
            last: offset + len as i64 - 1,
        });
    }
    Ok((-offset) as usize)
}

impl ScalarPath {
    pub fn new(offset: i64, values: Vec<f64>, tail: Tail) -> Result<Self> {
        let zero = check_window(offset, values.len())?;
        if values[zero] != 0.0 {
            return Err(BbsError::MalformedPath {
                index: 0,
                reason: format!("pi(0) = {} but must be 0", values[zero]),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(BbsError::MalformedPath {
                index: offset + k as i64,
                reason: "non-finite value".into(),
            });
        }
        if let Tail::Slopes { left, right } = tail {
            if !left.is_finite() || !right.is_finite() {
                return Err(BbsError::MalformedPath {
                    index: 0,
                    reason: "non-finite tail slope".into(),
                });
            }
        }
        Ok(ScalarPath {
            offset,
            values,
            tail,
        })
    }

    /// Path on `[first, last]` given by `f`, which must vanish at 0.
    pub fn from_fn(first: i64, last: i64, tail: Tail, f: impl Fn(i64) -> f64) -> Result<Self> {
        Self::new(first, (first..=last).map(f).collect(), tail)
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn first(&self) -> i64 {
        self.offset
    }

    pub fn last(&self) -> i64 {
        self.offset + self.values.len() as i64 - 1
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail(&self) -> Tail {
        self.tail
    }

    fn zero_index(&self) -> usize {
        (-self.offset) as usize
    }

    /// `pi(n)`, extended along the tails; `None` outside a windowed path.
    pub fn get(&self, n: i64) -> Option<f64> {
        let (first, last) = (self.first(), self.last());
        if n >= first && n <= last {
            return Some(self.values[(n - first) as usize]);
        }
        match self.tail {
            Tail::Windowed => None,
            Tail::Slopes { left, right } => Some(if n < first {
                self.values[0] + (n - first) as f64 * left
            } else {
                self.values[self.values.len() - 1] + (n - last) as f64 * right
            }),
        }
    }

    /// Same path materialized on a window covering `[first, last]`.
    pub fn widened(&self, first: i64, last: i64) -> Result<Self> {
        let lo = first.min(self.first());
        let hi = last.max(self.last());
        let values = (lo..=hi)
            .map(|n| {
                self.get(n).ok_or(BbsError::OutOfWindow {
                    index: n,
                    first: self.first(),
                    last: self.last(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(lo, values, self.tail)
    }

    /// `n -> pi(-n)`.
    pub fn reflected(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        let tail = match self.tail {
            Tail::Slopes { left, right } => Tail::Slopes {
                left: -right,
                right: -left,
            },
            Tail::Windowed => Tail::Windowed,
        };
        ScalarPath {
            offset: -self.last(),
            values,
            tail,
        }
    }

    /// Whether both paths describe the same function on `Z` (or on the
    /// common window when either is windowed), within `tol`.
    pub fn same_path(&self, other: &ScalarPath, tol: f64) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= tol;
        match (self.tail, other.tail) {
            (
                Tail::Slopes {
                    left: l1,
                    right: r1,
                },
                Tail::Slopes {
                    left: l2,
                    right: r2,
                },
            ) => {
                if !close(l1, l2) || !close(r1, r2) {
                    return false;
                }
                let lo = self.first().min(other.first());
                let hi = self.last().max(other.last());
                (lo..=hi).all(|n| close(self.get(n).unwrap(), other.get(n).unwrap()))
            }
            _ => {
                let lo = self.first().max(other.first());
                let hi = self.last().min(other.last());
                (lo..=hi).all(|n| match (self.get(n), other.get(n)) {
                    (Some(a), Some(b)) => close(a, b),
                    _ => false,
                })
            }
        }
    }
}

/// Window-truncated two-sided `P_1`: the left tail is taken to end at the
/// first node, so `out[k] = v[k] - 2 min_{j<=k} v[j] + 2 min_{j<=anchor} v[j]`.
pub fn forward_window(values: &[f64], anchor: usize) -> Vec<f64> {
    let base = values[..=anchor]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let mut run = f64::INFINITY;
    values
        .iter()
        .map(|&v| {
            run = run.min(v);
            v - 2.0 * run + 2.0 * base
        })
        .collect()
}

/// Window-truncated `P_1^{-1}`: `out[k] = v[k] - 2 min_{j>=k} v[j] +
/// 2 min_{j>=anchor} v[j]`.
pub fn inverse_window(values: &[f64], anchor: usize) -> Vec<f64> {
    let mut suffix = vec![0.0; values.len()];
    let mut run = f64::INFINITY;
    for (s, &v) in suffix.iter_mut().zip(values).rev() {
        run = run.min(v);
        *s = run;
    }
    let base = suffix[anchor];
    values
        .iter()
        .zip(&suffix)
        .map(|(&v, &s)| v - 2.0 * s + 2.0 * base)
        .collect()
}

/// One-sided transform on `Z_+`: `P_1 pi(n) = pi(n) - 2 min_{0<=m<=n} pi(m)`.
///
/// The path must start at 0. On windowed inputs every output value depends
/// only on the window, so the result is windowed too. The left slope has no
/// meaning on `Z_+` and is carried through unchanged.
pub fn pitman_one_sided(pi: &ScalarPath) -> Result<ScalarPath> {
    if pi.offset != 0 {
        return Err(BbsError::domain(
            "pitman_one_sided",
            format!("path must start at 0, starts at {}", pi.offset),
        ));
    }
    match pi.tail {
        Tail::Windowed => ScalarPath::new(0, forward_window(&pi.values, 0), Tail::Windowed),
        Tail::Slopes { left, right } => {
            let settled = settle_right(pi, right)?;
            let out = forward_window(&settled.values, 0);
            ScalarPath::new(
                0,
                out,
                Tail::Slopes {
                    left,
                    right: right.abs(),
                },
            )
        }
    }
}

/// Extends the window to the right until the last value is the running
/// infimum (needed only when the right slope is negative).
fn settle_right(pi: &ScalarPath, right: f64) -> Result<ScalarPath> {
    if right >= 0.0 {
        return Ok(pi.clone());
    }
    let min = pi.values.iter().copied().fold(f64::INFINITY, f64::min);
    let gap = pi.values[pi.values.len() - 1] - min;
    let extra = (gap / -right - PATH_TOL).ceil().max(0.0) as i64;
    pi.widened(pi.first(), pi.last() + extra)
}

/// Two-sided `P_1 pi(n) = pi(n) - 2 inf_{m<=n} pi(m) + 2 inf_{m<=0} pi(m)`.
pub fn pitman_two_sided(pi: &ScalarPath) -> Result<ScalarPath> {
    let (left, right) = match pi.tail {
        Tail::Windowed => {
            return Err(BbsError::Undecidable {
                op: "pitman_two_sided",
            })
        }
        Tail::Slopes { left, right } => (left, right),
    };
    if left > 0.0 {
        return Err(BbsError::domain(
            "pitman_two_sided",
            "inf over m <= 0 is -inf (left tail decreases without bound)",
        ));
    }
    let settled = settle_right(pi, right)?;
    let out = forward_window(&settled.values, settled.zero_index());
    ScalarPath::new(
        settled.offset,
        out,
        Tail::Slopes {
            left: -left,
            right: right.abs(),
        },
    )
}

/// `P_1^{-1} pi(n) = pi(n) - 2 inf_{m>=n} pi(m) + 2 inf_{m>=0} pi(m)`.
pub fn pitman_inverse(pi: &ScalarPath) -> Result<ScalarPath> {
    if pi.tail == Tail::Windowed {
        return Err(BbsError::Undecidable {
            op: "pitman_inverse",
        });
    }
    match pitman_two_sided(&pi.reflected()) {
        Ok(p) => Ok(p.reflected()),
        Err(BbsError::Domain { .. }) => Err(BbsError::domain(
            "pitman_inverse",
            "inf over m >= 0 is -inf (right tail decreases without bound)",
        )),
        Err(e) => Err(e),
    }
}

fn steps_ok(pi: &ScalarPath, c: f64) -> bool {
    let ok = |d: f64| d.abs() <= PATH_TOL || (d.abs() - c).abs() <= PATH_TOL;
    let window = pi.values.windows(2).all(|w| ok(w[1] - w[0]));
    match pi.tail {
        Tail::Slopes { left, right } => window && ok(left) && ok(right),
        Tail::Windowed => window,
    }
}

/// Membership of `pi` in one of the domain sets, with step magnitude `c`
/// (1 in the lattice setting). Tail conditions are decided from the slopes:
/// for `P1InvP1`, a negative right slope means the path keeps hitting new
/// minima, a positive one means it never does again, and a flat tail hits
/// its running minimum forever iff the last window value already is it.
pub fn in_domain(pi: &ScalarPath, which: DomainSet, c: f64) -> Decision {
    let (left, right) = match pi.tail {
        Tail::Slopes { left, right } => (left, right),
        Tail::Windowed => {
            return match which {
                DomainSet::P1InvP1 | DomainSet::P1P1Inv if !steps_ok(pi, c) => Decision::No,
                _ => Decision::Undecidable,
            }
        }
    };
    let min = pi.values.iter().copied().fold(f64::INFINITY, f64::min);
    match which {
        DomainSet::P1 => Decision::from_bool(left <= 0.0),
        DomainSet::P1Inv => Decision::from_bool(right >= 0.0),
        DomainSet::P1InvP1 => {
            let io = if right < 0.0 {
                true
            } else if right > 0.0 {
                false
            } else {
                pi.values[pi.values.len() - 1] <= min + PATH_TOL
            };
            Decision::from_bool(left <= 0.0 && steps_ok(pi, c) && io)
        }
        DomainSet::P1P1Inv => {
            let io = if left > 0.0 {
                true
            } else if left < 0.0 {
                false
            } else {
                pi.values[0] <= min + PATH_TOL
            };
            Decision::from_bool(right >= 0.0 && steps_ok(pi, c) && io)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VectorTail {
    /// Constant step vectors beyond the left and right edges.
    Steps {
        left: Vec<f64>,
        right: Vec<f64>,
    },
    Windowed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorPath {
    dim: usize,
    offset: i64,
    /// Row-major, one row of `dim` coordinates per index.
    values: Vec<f64>,
    tail: VectorTail,
}

impl VectorPath {
    pub fn new(dim: usize, offset: i64, rows: Vec<Vec<f64>>, tail: VectorTail) -> Result<Self> {
        if dim == 0 {
            return Err(BbsError::InvalidArgument(
                "dimension must be positive".into(),
            ));
        }
        let zero = check_window(offset, rows.len())?;
        let mut values = Vec::with_capacity(rows.len() * dim);
        for r in &rows {
            if r.len() != dim {
                return Err(BbsError::DimensionMismatch {
                    expected: dim,
                    got: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        if rows[zero].iter().any(|&x| x != 0.0) {
            return Err(BbsError::MalformedPath {
                index: 0,
                reason: "value at 0 must be the zero vector".into(),
            });
        }
        if let VectorTail::Steps { left, right } = &tail {
            for s in [left, right] {
                if s.len() != dim {
                    return Err(BbsError::DimensionMismatch {
                        expected: dim,
                        got: s.len(),
                    });
                }
            }
        }
        Ok(VectorPath {
            dim,
            offset,
            values,
            tail,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn first(&self) -> i64 {
        self.offset
    }

    pub fn last(&self) -> i64 {
        self.offset + (self.values.len() / self.dim) as i64 - 1
    }

    pub fn tail(&self) -> &VectorTail {
        &self.tail
    }

    fn row(&self, n: i64) -> &[f64] {
        let k = (n - self.offset) as usize;
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn get(&self, n: i64) -> Option<Vec<f64>> {
        let (first, last) = (self.first(), self.last());
        if n >= first && n <= last {
            return Some(self.row(n).to_vec());
        }
        match &self.tail {
            VectorTail::Windowed => None,
            VectorTail::Steps { left, right } => {
                let (edge, step) = if n < first {
                    (first, left)
                } else {
                    (last, right)
                };
                let t = (n - edge) as f64;
                Some(
                    self.row(edge)
                        .iter()
                        .zip(step)
                        .map(|(x, s)| x + t * s)
                        .collect(),
                )
            }
        }
    }

    /// The scalar path `alpha . pi(n) / |alpha|^2`.
    pub fn project(&self, alpha: &[f64]) -> Result<ScalarPath> {
        let norm2 = dot(alpha, alpha);
        let values = self
            .values
            .chunks_exact(self.dim)
            .map(|r| dot(alpha, r) / norm2)
            .collect();
        let tail = match &self.tail {
            VectorTail::Windowed => Tail::Windowed,
            VectorTail::Steps { left, right } => Tail::Slopes {
                left: dot(alpha, left) / norm2,
                right: dot(alpha, right) / norm2,
            },
        };
        ScalarPath::new(self.offset, values, tail)
    }
}

/// `P_alpha pi = pi + (P_1 pi_alpha - pi_alpha) alpha`: the component of `pi`
/// orthogonal to `alpha` passes through untouched.
pub fn pitman_alpha(pi: &VectorPath, alpha: &[f64], direction: Direction) -> Result<VectorPath> {
    if alpha.len() != pi.dim {
        return Err(BbsError::DimensionMismatch {
            expected: pi.dim,
            got: alpha.len(),
        });
    }
    if alpha.iter().all(|&a| a == 0.0) {
        return Err(BbsError::InvalidArgument("alpha must be nonzero".into()));
    }
    let proj = pi.project(alpha)?;
    let out = match direction {
        Direction::OneSided => pitman_one_sided(&proj)?,
        Direction::Forward => pitman_two_sided(&proj)?,
        Direction::Inverse => pitman_inverse(&proj)?,
    };
    let mut rows = Vec::with_capacity(out.values.len());
    for n in out.first()..=out.last() {
        let v = pi
            .get(n)
            .ok_or(BbsError::Undecidable { op: "pitman_alpha" })?;
        let d = out.get(n).unwrap() - proj.get(n).unwrap();
        rows.push(v.iter().zip(alpha).map(|(x, a)| x + d * a).collect());
    }
    let tail = match (&pi.tail, out.tail, proj.tail) {
        (
            VectorTail::Steps { left, right },
            Tail::Slopes {
                left: ol,
                right: or,
            },
            Tail::Slopes {
                left: pl,
                right: pr,
            },
        ) => VectorTail::Steps {
            left: left
                .iter()
                .zip(alpha)
                .map(|(s, a)| s + (ol - pl) * a)
                .collect(),
            right: right
                .iter()
                .zip(alpha)
                .map(|(s, a)| s + (or - pr) * a)
                .collect(),
        },
        _ => VectorTail::Windowed,
    };
    VectorPath::new(pi.dim, out.first(), rows, tail)
}
