//! Finite-window classifiers for the reversibility and invariance sets, and
//! the three two-color counterexample families.
//!
//! Finite-support paths have known tails (`A_i` grows by one per site on
//! both sides of the window), so every quantity here is decided exactly for
//! them. Windowed paths only bound the quantities; their flags come back as
//! [`Decision::Undecidable`] and the asymptotic conditions are replaced by
//! explicit finite-horizon proxies whose parameters travel with the report.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::carrier::{apply_Ti_direct, apply_Ti_inverse_direct, run_carrier_with_initial_load};
use crate::dynamics::{sup_left_of_zero, Letter};
use crate::error::{BbsError, Result};
use crate::lattice::{check_color, Boundary, Configuration, PathEncoding, Symbol};
use crate::pitman::{in_domain, Decision, DomainSet, ScalarPath, Tail};

/// A supremum or infimum over an infinite range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Extended {
    Finite(i64),
    PosInf,
    NegInf,
    /// Not determined by the window; the value is the bound the window gives
    /// (a lower bound for suprema, an upper bound for infima).
    Unknown(i64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioPoint {
    pub n: i64,
    /// `A_i S_n / sup_{m<=n} A_i S_m`, absent where the supremum is 0.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassReport {
    pub color: usize,
    pub boundary: Boundary,
    /// `sup_{n<=0} A_i S_n`.
    pub m0: Extended,
    /// `inf_{n>=0} A_i S_n`.
    pub i0: Extended,
    /// `sup_n A_i S_n`.
    pub m_inf: Extended,
    /// `inf_n A_i S_n`.
    pub i_minf: Extended,
    /// `T_i^{-1} T_i S = S`.
    pub inverse_after_forward: Decision,
    /// `T_i T_i^{-1} S = S`.
    pub forward_after_inverse: Decision,
    pub reversible: Decision,
    /// Largest carrier load seen in the window. For windowed paths the
    /// carrier enters empty, so this is a lower bound on `sup_n W_n`.
    pub window_carrier_sup: u64,
    pub subcritical_plus: Decision,
    pub subcritical_minus: Decision,
    pub critical_plus: Decision,
    pub critical_minus: Decision,
    pub ratio_trace: Vec<RatioPoint>,
}

fn height_path(path: &PathEncoding, i: usize, sign: f64) -> Result<ScalarPath> {
    let lo = path.start().min(0);
    let hi = path.end().max(0);
    let values = (lo..=hi)
        .map(|n| path.height(i, n).map(|a| sign * a as f64))
        .collect::<Result<Vec<_>>>()?;
    let tail = match path.boundary() {
        Boundary::FiniteSupport => Tail::Slopes {
            left: sign,
            right: sign,
        },
        Boundary::Windowed => Tail::Windowed,
    };
    ScalarPath::new(lo, values, tail)
}

/// Ratio trace over `[from, to]` (clamped to the window for windowed
/// paths). For windowed paths the supremum runs over the window only.
pub fn subcriticality_ratio(
    path: &PathEncoding,
    i: usize,
    from: i64,
    to: i64,
) -> Result<Vec<RatioPoint>> {
    check_color(path.kappa(), i)?;
    let (from, to) = match path.boundary() {
        Boundary::FiniteSupport => (from, to),
        Boundary::Windowed => (from.max(path.start()), to.min(path.end())),
    };
    let lo = match path.boundary() {
        Boundary::FiniteSupport => from.min(path.start()),
        Boundary::Windowed => path.start(),
    };
    let mut sup = i64::MIN;
    let mut out = Vec::new();
    for n in lo..=to {
        let a = path.height(i, n)?;
        sup = sup.max(a);
        if n >= from {
            out.push(RatioPoint {
                n,
                ratio: (sup != 0).then(|| a as f64 / sup as f64),
            });
        }
    }
    Ok(out)
}

/// Reversibility report for color `i`; the ratio trace covers the window.
pub fn reversibility_report(path: &PathEncoding, i: usize) -> Result<ClassReport> {
    check_color(path.kappa(), i)?;
    let fin = path.boundary() == Boundary::FiniteSupport;
    let heights = path.heights(i)?;
    let idx = |k: usize| path.start() + k as i64;
    let left_max = heights
        .iter()
        .enumerate()
        .filter(|(k, _)| idx(*k) <= 0)
        .map(|(_, &a)| a)
        .max();
    let right_min = heights
        .iter()
        .enumerate()
        .filter(|(k, _)| idx(*k) >= 0)
        .map(|(_, &a)| a)
        .min();
    let wmax = *heights.iter().max().unwrap();
    let wmin = *heights.iter().min().unwrap();

    let (m0, i0, m_inf, i_minf) = if fin {
        let i0 = (0..=path.end().max(0))
            .map(|n| path.height(i, n))
            .try_fold(i64::MAX, |m, a| Ok::<_, BbsError>(m.min(a?)))?;
        (
            Extended::Finite(sup_left_of_zero(path, i)?),
            Extended::Finite(i0),
            Extended::PosInf,
            Extended::NegInf,
        )
    } else {
        (
            Extended::Unknown(left_max.unwrap_or(0)),
            Extended::Unknown(right_min.unwrap_or(0)),
            Extended::Unknown(wmax),
            Extended::Unknown(wmin),
        )
    };

    let forward = in_domain(&height_path(path, i, -1.0)?, DomainSet::P1InvP1, 1.0);
    let backward = in_domain(&height_path(path, i, 1.0)?, DomainSet::P1P1Inv, 1.0);

    let config = path.decode()?;
    let trace = run_carrier_with_initial_load(&config, i, 0)?;
    // finite support: A_i grows linearly in both directions, so the ratio
    // tends to 1 and the carrier is eventually empty on the right while A_i
    // is unbounded, which rules out the critical regime
    let (sub, crit) = if fin {
        (Decision::Yes, Decision::No)
    } else {
        (Decision::Undecidable, Decision::Undecidable)
    };
    Ok(ClassReport {
        color: i,
        boundary: path.boundary(),
        m0,
        i0,
        m_inf,
        i_minf,
        inverse_after_forward: forward,
        forward_after_inverse: backward,
        reversible: forward.and(backward),
        window_carrier_sup: trace.max_load(),
        subcritical_plus: sub,
        subcritical_minus: sub,
        critical_plus: crit,
        critical_minus: crit,
        ratio_trace: subcriticality_ratio(path, i, path.start(), path.end())?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodSetParams {
    /// Indices `[-horizon, horizon]` are analyzed.
    pub horizon: i64,
    /// Fraction of each half-range (at its far end) used as the asymptotic
    /// proxy.
    pub tail_fraction: f64,
    /// Allowed deviation of `A_i / sup_{m<=n} A_i` from 1.
    pub tolerance: f64,
    /// Bound for `F_j / F_i` with `F_i(n) = sup_{m<=n} A_i S_m`.
    pub ratio_bound: f64,
}

impl GoodSetParams {
    pub fn new(horizon: i64) -> Self {
        GoodSetParams {
            horizon,
            tail_fraction: 0.25,
            tolerance: 0.1,
            ratio_bound: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorGood {
    pub color: usize,
    /// `F_i` at `+horizon` and `-horizon`.
    pub f_plus: i64,
    pub f_minus: i64,
    pub worst_deviation_plus: f64,
    pub worst_deviation_minus: f64,
    pub ratio_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairGood {
    pub i: usize,
    pub j: usize,
    /// Largest `F_j / F_i` over both tail ranges.
    pub max_ratio: f64,
    pub bounded: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodSetReport {
    pub params: GoodSetParams,
    /// Analyzed range after clamping to the window.
    pub range: (i64, i64),
    pub colors: Vec<ColorGood>,
    pub pairs: Vec<PairGood>,
    pub good: bool,
}

/// Finite-horizon proxy for membership in the good set: for each color the
/// ratio `A_i / F_i` stays within `tolerance` of 1 on the outer
/// `tail_fraction` of both half-ranges, and `F_j / F_i <= ratio_bound`
/// there for every pair.
pub fn good_set_check(path: &PathEncoding, params: &GoodSetParams) -> Result<GoodSetReport> {
    let (lo, hi) = match path.boundary() {
        Boundary::FiniteSupport => (-params.horizon, params.horizon),
        Boundary::Windowed => (
            (-params.horizon).max(path.start()),
            params.horizon.min(path.end()),
        ),
    };
    let right_from = (hi as f64 * (1.0 - params.tail_fraction)).ceil() as i64;
    let left_to = (lo as f64 * (1.0 - params.tail_fraction)).floor() as i64;
    let in_tail = |n: i64| (n >= right_from && n > 0) || (n <= left_to && n < 0);
    let kappa = path.kappa();

    // F_i over the analyzed range
    let mut f: Vec<Vec<(i64, i64, i64)>> = Vec::with_capacity(kappa);
    for i in 1..=kappa {
        let mut sup = i64::MIN;
        let mut rows = Vec::with_capacity((hi - lo + 1).max(0) as usize);
        let start = match path.boundary() {
            Boundary::FiniteSupport => lo.min(path.start()),
            Boundary::Windowed => path.start(),
        };
        for n in start..=hi {
            let a = path.height(i, n)?;
            sup = sup.max(a);
            if n >= lo {
                rows.push((n, a, sup));
            }
        }
        f.push(rows);
    }

    let mut colors = Vec::with_capacity(kappa);
    for (k, rows) in f.iter().enumerate() {
        let (mut dp, mut dm) = (0.0f64, 0.0f64);
        for &(n, a, s) in rows.iter().filter(|r| in_tail(r.0)) {
            let dev = if s == 0 {
                f64::INFINITY
            } else {
                (a as f64 / s as f64 - 1.0).abs()
            };
            if n > 0 {
                dp = dp.max(dev);
            } else {
                dm = dm.max(dev);
            }
        }
        colors.push(ColorGood {
            color: k + 1,
            f_plus: rows.last().map(|r| r.2).unwrap_or(0),
            f_minus: rows.first().map(|r| r.2).unwrap_or(0),
            worst_deviation_plus: dp,
            worst_deviation_minus: dm,
            ratio_ok: dp <= params.tolerance && dm <= params.tolerance,
        });
    }

    let mut pairs = Vec::new();
    for i in 0..kappa {
        for j in 0..kappa {
            if i == j {
                continue;
            }
            let mut worst = 0.0f64;
            for (ri, rj) in f[i].iter().zip(&f[j]).filter(|(r, _)| in_tail(r.0)) {
                let r = if ri.2 == 0 {
                    f64::INFINITY
                } else {
                    rj.2 as f64 / ri.2 as f64
                };
                worst = worst.max(if r.is_nan() { f64::INFINITY } else { r });
            }
            pairs.push(PairGood {
                i: i + 1,
                j: j + 1,
                max_ratio: worst,
                bounded: worst <= params.ratio_bound,
            });
        }
    }
    let good = colors.iter().all(|c| c.ratio_ok) && pairs.iter().all(|p| p.bounded);
    Ok(GoodSetReport {
        params: params.clone(),
        range: (lo, hi),
        colors,
        pairs,
        good,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleName {
    A,
    B,
    C,
}

impl FromStr for ExampleName {
    type Err = BbsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a" | "A" => Ok(ExampleName::A),
            "b" | "B" => Ok(ExampleName::B),
            "c" | "C" => Ok(ExampleName::C),
            other => Err(BbsError::InvalidArgument(format!(
                "unknown example {other:?}; expected a, b or c"
            ))),
        }
    }
}

impl fmt::Display for ExampleName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExampleName::A => "a",
            ExampleName::B => "b",
            ExampleName::C => "c",
        })
    }
}

fn epoch_a(m: usize, out: &mut Vec<Symbol>) {
    let k = 2 * m - 1;
    out.push(0);
    out.extend(std::iter::repeat_n(2, k));
    for _ in 0..k {
        out.extend([0, 1]);
    }
    out.push(0);
    for _ in 0..2 * m {
        out.extend([0, 1]);
    }
}

/// Last site of each epoch of example (a); epoch `m` has `10m - 1` sites
/// and the first epoch starts at site 1.
pub fn epoch_ends_a(epochs: usize) -> Vec<i64> {
    let mut end = 0i64;
    (1..=epochs as i64)
        .map(|m| {
            end += 10 * m - 1;
            end
        })
        .collect()
}

/// The two-color counterexample configurations.
///
/// * (a): empty left of 0, `eta_0 = 0`, then epochs
///   `0 2_(2m-1) (0 1)_(2m-1) 0 (0 1)_(2m)` for `m = 1..=epochs`, where
///   `(0 1)_(k)` is `0 1` repeated `k` times. Finite support: the right
///   truncation does not affect `T_2` on the window because the color-2
///   carrier empties within each epoch.
/// * (b): repeating `0 1 2` with the single defect `0 2 1` on sites 0..=2,
///   `epochs` periods on each side of it (windowed).
/// * (c): repeating `0 1 2` on the same window (windowed).
pub fn example_config(name: ExampleName, epochs: usize) -> Result<Configuration> {
    if epochs == 0 {
        return Err(BbsError::InvalidArgument("epochs must be positive".into()));
    }
    match name {
        ExampleName::A => {
            let mut cells = vec![0];
            for m in 1..=epochs {
                epoch_a(m, &mut cells);
            }
            Configuration::finite(2, 0, cells)
        }
        ExampleName::B | ExampleName::C => {
            let p = epochs as i64;
            let first = -3 * p;
            let last = 3 * p + 2;
            let cells = (first..=last)
                .map(|n| {
                    let s = n.rem_euclid(3) as Symbol;
                    match (name, n) {
                        (ExampleName::B, 1) => 2,
                        (ExampleName::B, 2) => 1,
                        _ => s,
                    }
                })
                .collect();
            Configuration::windowed(2, first, cells)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorResult {
    /// Cells `[first + margin, last - margin]` of the result.
    pub first: i64,
    pub cells: Vec<Symbol>,
    pub margin: i64,
}

/// Applies a word to a windowed configuration by treating the outside as
/// empty, then keeps only the interior. The margin on each side is one
/// period-sized buffer of 3 sites plus, per letter, the largest carrier
/// load seen in that step: a wrong edge assumption can only disturb cells
/// the carrier reaches while it differs from the true one.
pub fn apply_word_interior(config: &Configuration, word: &[Letter]) -> Result<InteriorResult> {
    let mut cur = config.with_boundary(Boundary::FiniteSupport)?;
    let (first, last) = (config.first(), config.last());
    let mut margin = 3i64;
    for &l in word {
        let c = l.unsigned_abs() as usize;
        check_color(config.kappa(), c)?;
        let window = cur.extended(first, last)?;
        let view = Configuration::finite(config.kappa(), first, window.window(first, last))?;
        margin += run_carrier_with_initial_load(&view, c, 0)?.max_load() as i64 + 1;
        cur = if l > 0 {
            apply_Ti_direct(&cur, c)?
        } else {
            apply_Ti_inverse_direct(&cur, c)?
        };
    }
    let cur = cur.extended(first, last)?;
    let (a, b) = (first + margin, last - margin);
    if a > b {
        return Err(BbsError::InvalidArgument(format!(
            "window too short for margin {margin}"
        )));
    }
    Ok(InteriorResult {
        first: a,
        cells: cur.window(a, b),
        margin,
    })
}

/// Whether `cells` repeat a rotation of `0 1 2` or of `0 2 1`.
pub fn is_periodic_012_or_021(cells: &[Symbol]) -> bool {
    if cells.len() < 3 {
        return false;
    }
    let block = &cells[..3];
    let rotations = |p: [Symbol; 3]| (0..3).map(move |r| [p[r], p[(r + 1) % 3], p[(r + 2) % 3]]);
    let ok = rotations([0, 1, 2])
        .chain(rotations([0, 2, 1]))
        .any(|r| r == block);
    ok && cells.iter().enumerate().all(|(k, &s)| s == block[k % 3])
}
