//! `T_i`, `T_i^{-1}` and words in them, through Pitman transforms.
//!
//! With `alpha = e_i - e_0` the projection `pi_alpha = alpha . S / |alpha|^2`
//! of a path encoding equals `-A_i S / 2`, and `P_alpha` only changes the
//! `e_0` and `e_i` coefficients, keeping `a_0 + a_i` fixed. So the whole
//! transform runs on integer counts: take the scalar path `-A_i S / 2`
//! (half-integers are exact in `f64`), apply the two-sided `P_1`, and
//! rebuild `a_0, a_i` from the new projection before swapping them (the
//! `tau_(0,i)` step).

use serde::{Deserialize, Serialize};

use crate::carrier::{apply_Ti_direct, apply_Ti_inverse_direct, carrier_from_heights};
use crate::error::{BbsError, Result};
use crate::lattice::{check_color, decode, encode, Boundary, Configuration, PathEncoding, Symbol};
use crate::pitman::{
    pitman_alpha, pitman_inverse, pitman_two_sided, Direction, ScalarPath, Tail, VectorPath,
    VectorTail,
};
use crate::simplex::SimplexBasis;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Route {
    Pitman,
    Direct,
}

fn require_finite(path: &PathEncoding, op: &'static str) -> Result<()> {
    if path.boundary() == Boundary::Windowed {
        return Err(BbsError::Undecidable { op });
    }
    Ok(())
}

fn reflect_counts(path: &PathEncoding, i: usize, inverse: bool) -> Result<PathEncoding> {
    let lo = path.start().min(0);
    let hi = path.end().max(0);
    // forward: pi = -A/2 on S; inverse: pi = +A/2, the projection of tau S
    let sign = if inverse { 1.0 } else { -1.0 };
    let w = path.kappa() + 1;
    let mut r = vec![0i64; w];
    let mut values = Vec::with_capacity((hi - lo + 1) as usize);
    for n in lo..=hi {
        path.counts_into(n, &mut r)?;
        values.push(sign * (r[0] - r[i]) as f64 / 2.0);
    }
    let tail = Tail::Slopes {
        left: sign * 0.5,
        right: sign * 0.5,
    };
    let pi = ScalarPath::new(lo, values, tail)?;
    let out = if inverse {
        pitman_inverse(&pi)?
    } else {
        pitman_two_sided(&pi)?
    };

    let mut counts = Vec::with_capacity(out.values().len() * w);
    for (k, &c) in out.values().iter().enumerate() {
        let n = out.first() + k as i64;
        path.counts_into(n, &mut r)?;
        let sum = r[0] + r[i];
        let twice = 2.0 * c;
        let c2 = twice as i64;
        if c2 as f64 != twice || (sum + c2) % 2 != 0 {
            return Err(BbsError::MalformedPath {
                index: n,
                reason: "reflected projection is not a lattice value".into(),
            });
        }
        // forward: a_0 - a_i = -2c, then tau swaps; inverse: tau came first
        let (big, small) = ((sum + c2) / 2, (sum - c2) / 2);
        if inverse {
            r[0] = small;
            r[i] = big;
        } else {
            r[0] = big;
            r[i] = small;
        }
        counts.extend_from_slice(&r);
    }
    PathEncoding::from_flat_counts(path.kappa(), out.first(), counts, Boundary::FiniteSupport)
}

/// `T_i S = tau_(0,i) P_{e_i - e_0} S` on a finite-support encoding. The
/// returned window extends to the right as far as the moved balls reach.
pub fn apply_Ti(path: &PathEncoding, i: usize) -> Result<PathEncoding> {
    check_color(path.kappa(), i)?;
    require_finite(path, "apply_Ti")?;
    reflect_counts(path, i, false)
}

/// `T_i^{-1} S = P^{-1}_{e_i - e_0} tau_(0,i) S`.
pub fn apply_Ti_inverse(path: &PathEncoding, i: usize) -> Result<PathEncoding> {
    check_color(path.kappa(), i)?;
    require_finite(path, "apply_Ti_inverse")?;
    reflect_counts(path, i, true)
}

/// A word letter: `+i` is `T_i`, `-i` is `T_i^{-1}`.
pub type Letter = i32;

/// Parses `"+1+2-1"`, `"1,2,-1"` or `"1 2 -1"`.
pub fn parse_word(text: &str) -> Result<Vec<Letter>> {
    let mut out = Vec::new();
    let mut cur = String::new();
    let flush = |cur: &mut String, out: &mut Vec<Letter>| -> Result<()> {
        if !cur.is_empty() {
            let v: Letter = cur
                .parse()
                .map_err(|_| BbsError::Parse(format!("bad word letter {cur:?}")))?;
            if v == 0 {
                return Err(BbsError::Parse("word letters must be nonzero".into()));
            }
            out.push(v);
            cur.clear();
        }
        Ok(())
    };
    for ch in text.chars() {
        match ch {
            '+' | '-' => {
                flush(&mut cur, &mut out)?;
                if ch == '-' {
                    cur.push('-');
                }
            }
            d if d.is_ascii_digit() => cur.push(d),
            ',' | ' ' | '\t' => flush(&mut cur, &mut out)?,
            other => return Err(BbsError::Parse(format!("unexpected {other:?} in word"))),
        }
    }
    if cur == "-" {
        return Err(BbsError::Parse("dangling sign in word".into()));
    }
    flush(&mut cur, &mut out)?;
    Ok(out)
}

pub fn format_word(word: &[Letter]) -> String {
    word.iter().map(|l| format!("{l:+}")).collect()
}

/// The full update `T = T_kappa ... T_1`, i.e. the word `+1 +2 ... +kappa`.
pub fn full_update_word(kappa: usize) -> Vec<Letter> {
    (1..=kappa as Letter).collect()
}

fn wrap(step: usize, e: BbsError) -> BbsError {
    BbsError::WordStep {
        step,
        source: Box::new(e),
    }
}

fn letter_color(kappa: usize, l: Letter) -> Result<usize> {
    let c = l.unsigned_abs() as usize;
    check_color(kappa, c)?;
    Ok(c)
}

/// Applies the letters left to right.
pub fn apply_word(path: &PathEncoding, word: &[Letter]) -> Result<PathEncoding> {
    let mut cur = path.clone();
    for (k, &l) in word.iter().enumerate() {
        let c = letter_color(path.kappa(), l).map_err(|e| wrap(k, e))?;
        cur = if l > 0 {
            apply_Ti(&cur, c)
        } else {
            apply_Ti_inverse(&cur, c)
        }
        .map_err(|e| wrap(k, e))?;
    }
    Ok(cur)
}

/// Applies a word to a configuration along either route. The result is
/// trimmed so that both routes produce identical values.
pub fn apply_word_config(
    config: &Configuration,
    word: &[Letter],
    route: Route,
) -> Result<Configuration> {
    let out = match route {
        Route::Pitman => decode(&apply_word(&encode(config), word)?)?,
        Route::Direct => {
            let mut cur = config.clone();
            for (k, &l) in word.iter().enumerate() {
                let c = letter_color(config.kappa(), l).map_err(|e| wrap(k, e))?;
                cur = if l > 0 {
                    apply_Ti_direct(&cur, c)
                } else {
                    apply_Ti_inverse_direct(&cur, c)
                }
                .map_err(|e| wrap(k, e))?;
            }
            cur
        }
    };
    Ok(out.trimmed())
}

/// `M_0 = sup_{n<=0} A_i S_n`; the empty left tail makes the supremum a
/// maximum over the window part left of 0 (or `A_i S_0 = 0` if the window
/// starts right of 0).
pub fn sup_left_of_zero(path: &PathEncoding, i: usize) -> Result<i64> {
    require_finite(path, "sup_left_of_zero")?;
    (path.start().min(0)..=0)
        .map(|n| path.height(i, n))
        .try_fold(i64::MIN, |m, a| Ok(m.max(a?)))
}

/// Largest violation, over the union of the input and output windows, of
/// `A_j T_i S = A_j S + W - M_0` and `A_j T_i S = A_j S + (A_i T_i S -
/// A_i S) / 2` (checked in doubled form so it stays integral).
pub fn cross_height_check(path: &PathEncoding, i: usize, j: usize) -> Result<i64> {
    check_color(path.kappa(), j)?;
    if i == j {
        return Err(BbsError::InvalidArgument(
            "cross_height_check needs i != j".into(),
        ));
    }
    let t = apply_Ti(path, i)?;
    let m0 = sup_left_of_zero(path, i)?;
    let lo = path.start().min(t.start());
    let hi = path.end().max(t.end());
    let mut sup = i64::MIN;
    let mut worst = 0;
    for n in lo..=hi {
        let ai = path.height(i, n)?;
        sup = sup.max(ai);
        let w = sup - ai;
        let aj = path.height(j, n)?;
        let tj = t.height(j, n)?;
        let ti = t.height(i, n)?;
        worst = worst.max((tj - (aj + w - m0)).abs());
        worst = worst.max((2 * tj - (2 * aj + ti - ai)).abs());
    }
    Ok(worst)
}

/// Largest violation of `A_i T_i S = 2 sup_{m<=n} A_i S - A_i S -
/// 2 sup_{m<=0} A_i S` over the output window.
pub fn reflection_formula_check(path: &PathEncoding, i: usize) -> Result<i64> {
    let t = apply_Ti(path, i)?;
    let m0 = sup_left_of_zero(path, i)?;
    let lo = path.start().min(t.start());
    let mut sup = i64::MIN;
    let mut worst = 0;
    for n in lo..=path.end().max(t.end()) {
        let a = path.height(i, n)?;
        sup = sup.max(a);
        worst = worst.max((t.height(i, n)? - (2 * sup - a - 2 * m0)).abs());
    }
    Ok(worst)
}

/// Largest violation of `W = sup A - A` between the carrier run on the
/// configuration and the height formula.
pub fn carrier_identity_check(config: &Configuration, i: usize) -> Result<i64> {
    let a = crate::carrier::run_carrier(config, i)?;
    let b = carrier_from_heights(&encode(config), i)?;
    Ok(a.loads()
        .iter()
        .zip(b.loads())
        .map(|(x, y)| (*x as i64 - *y as i64).abs())
        .max()
        .unwrap_or(0))
}

/// `S` as a real vector path with finite-support tails (each outside step
/// is `e_0`). The window is widened to contain 0.
pub fn embed_vector_path(path: &PathEncoding, basis: &SimplexBasis) -> Result<VectorPath> {
    require_finite(path, "embed_vector_path")?;
    if basis.kappa() != path.kappa() {
        return Err(BbsError::DimensionMismatch {
            expected: path.kappa(),
            got: basis.kappa(),
        });
    }
    let lo = path.start().min(0);
    let hi = path.end().max(0);
    let rows = (lo..=hi)
        .map(|n| path.point(basis, n))
        .collect::<Result<Vec<_>>>()?;
    let e0 = basis.vector(0).to_vec();
    VectorPath::new(
        basis.kappa(),
        lo,
        rows,
        VectorTail::Steps {
            left: e0.clone(),
            right: e0,
        },
    )
}

/// Inverse of [`embed_vector_path`]: decomposes each point against the
/// basis and rounds to counts, failing if any coefficient is further than
/// `1e-6` from an integer.
pub fn counts_from_vector_path(vp: &VectorPath, basis: &SimplexBasis) -> Result<PathEncoding> {
    let m = (basis.kappa() + 1) as f64;
    let mut rows = Vec::new();
    for n in vp.first()..=vp.last() {
        let coeffs = basis.decompose(&vp.get(n).unwrap())?;
        let mut r = Vec::with_capacity(coeffs.len());
        for b in coeffs {
            let a = b + n as f64 / m;
            let k = a.round();
            if (a - k).abs() > 1e-6 {
                return Err(BbsError::MalformedPath {
                    index: n,
                    reason: format!("coefficient {a} is not an integer"),
                });
            }
            r.push(k as i64);
        }
        rows.push(r);
    }
    PathEncoding::from_counts(basis.kappa(), vp.first(), rows, Boundary::FiniteSupport)
}

/// `tau_(j,k)` applied pointwise, including the tail steps.
pub fn transpose_vector_path(
    vp: &VectorPath,
    basis: &SimplexBasis,
    j: usize,
    k: usize,
) -> Result<VectorPath> {
    let rows = (vp.first()..=vp.last())
        .map(|n| basis.transpose(&vp.get(n).unwrap(), j, k))
        .collect();
    let tail = match vp.tail() {
        VectorTail::Steps { left, right } => VectorTail::Steps {
            left: basis.transpose(left, j, k),
            right: basis.transpose(right, j, k),
        },
        VectorTail::Windowed => VectorTail::Windowed,
    };
    VectorPath::new(vp.dim(), vp.first(), rows, tail)
}

/// `T_i` through real vectors: `tau_(0,i) P_{e_i - e_0}` on the embedded
/// path, then back to counts.
pub fn apply_Ti_via_vectors(
    path: &PathEncoding,
    basis: &SimplexBasis,
    i: usize,
) -> Result<PathEncoding> {
    check_color(path.kappa(), i)?;
    let vp = embed_vector_path(path, basis)?;
    let p = pitman_alpha(&vp, &basis.edge(i), Direction::Forward)?;
    counts_from_vector_path(&transpose_vector_path(&p, basis, 0, i)?, basis)
}

/// `T_2 T_1` written as `tau_(0,1) tau_(1,2) P_{e_2 - e_1} P_{e_1 - e_0}`.
pub fn t2t1_factorized(path: &PathEncoding, basis: &SimplexBasis) -> Result<PathEncoding> {
    if path.kappa() < 2 {
        return Err(BbsError::InvalidColor {
            color: 2,
            kappa: path.kappa(),
        });
    }
    let vp = embed_vector_path(path, basis)?;
    let p1 = pitman_alpha(&vp, &basis.edge(1), Direction::Forward)?;
    let p2 = pitman_alpha(&p1, &basis.difference(2, 1), Direction::Forward)?;
    let t12 = transpose_vector_path(&p2, basis, 1, 2)?;
    counts_from_vector_path(&transpose_vector_path(&t12, basis, 0, 1)?, basis)
}

/// The `{0, i}` subsequence of a finite-support window as a 1-color
/// configuration (`i` becomes 1).
pub fn zero_i_subsequence(config: &Configuration, i: usize) -> Vec<Symbol> {
    config
        .cells()
        .iter()
        .filter(|&&s| s == 0 || s as usize == i)
        .map(|&s| (s != 0) as Symbol)
        .collect()
}

/// Checks that `T_i` fixes every symbol outside `{0, i}` and acts on the
/// `{0, i}` subsequence as the 1-color map.
pub fn subsequence_check(config: &Configuration, i: usize) -> Result<bool> {
    let t = apply_Ti_direct(config, i)?;
    let c = config.extended(t.first(), t.last())?;
    let t = t.extended(c.first(), c.last())?;
    let in_pair = |s: Symbol| s == 0 || s as usize == i;
    let fixed = c
        .cells()
        .iter()
        .zip(t.cells())
        .all(|(&a, &b)| if in_pair(a) { in_pair(b) } else { a == b });
    if !fixed {
        return Ok(false);
    }
    let sub = Configuration::finite(1, 1, zero_i_subsequence(&c, i))?;
    let moved = apply_Ti_direct(&sub, 1)?;
    let expected = Configuration::finite(1, 1, zero_i_subsequence(&t, i))?;
    Ok(moved.same_state(&expected))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::parse_symbols;
    use crate::simplex::build_simplex_basis;

    fn cfg(kappa: usize, s: &str) -> Configuration {
        Configuration::finite(kappa, 1, parse_symbols(s).unwrap()).unwrap()
    }

    #[test]
    fn apply_ti_examples() {
        let c = cfg(2, "120010");
        let t = decode(&apply_Ti(&encode(&c), 1).unwrap()).unwrap();
        assert!(t.same_state(&cfg(2, "021001")));
        let back = decode(&apply_Ti_inverse(&encode(&cfg(2, "021001")), 1).unwrap()).unwrap();
        assert!(back.same_state(&c));
        let e = encode(&Configuration::empty(3).unwrap());
        assert!(decode(&apply_Ti(&e, 2).unwrap())
            .unwrap()
            .trimmed()
            .is_empty());
        assert!(decode(&apply_Ti_inverse(&e, 2).unwrap())
            .unwrap()
            .trimmed()
            .is_empty());
    }

    #[test]
    fn windowed_is_undecidable() {
        let w = encode(&cfg(2, "12").with_boundary(Boundary::Windowed).unwrap());
        assert!(matches!(apply_Ti(&w, 1), Err(BbsError::Undecidable { .. })));
    }

    #[test]
    fn parse_word_forms() {
        assert_eq!(parse_word("+1+2-1").unwrap(), vec![1, 2, -1]);
        assert_eq!(parse_word("1, 2,-3").unwrap(), vec![1, 2, -3]);
        assert_eq!(parse_word("").unwrap(), Vec::<Letter>::new());
        assert!(parse_word("+0").is_err());
        assert!(parse_word("+1x").is_err());
        assert!(parse_word("+1-").is_err());
        assert_eq!(format_word(&[1, -2]), "+1-2");
    }

    #[test]
    fn word_errors_carry_step() {
        let p = encode(&cfg(2, "12"));
        match apply_word(&p, &[1, 3]) {
            Err(BbsError::WordStep { step: 1, .. }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn one_sided_closed_form() {
        // window starting at 1: sup over m <= 0 is A_0 = 0
        let c = cfg(3, "0120313203011230");
        let p = encode(&c);
        let t = apply_Ti(&p, 1).unwrap();
        let mut sup = 0;
        for n in 0..=p.end() {
            let a = p.height(1, n).unwrap();
            sup = sup.max(a);
            assert_eq!(t.height(1, n).unwrap(), 2 * sup - a);
        }
    }

    #[test]
    fn vector_route_matches_counts() {
        let b = build_simplex_basis(3).unwrap();
        let c = Configuration::finite(3, -4, parse_symbols("0120313203011230").unwrap()).unwrap();
        let p = encode(&c);
        for i in 1..=3 {
            let a = decode(&apply_Ti(&p, i).unwrap()).unwrap();
            let v = decode(&apply_Ti_via_vectors(&p, &b, i).unwrap()).unwrap();
            assert!(a.same_state(&v));
        }
        let f = decode(&t2t1_factorized(&p, &b).unwrap()).unwrap();
        assert!(f.same_state(&apply_word_config(&c, &[1, 2], Route::Pitman).unwrap()));
    }

    #[test]
    fn identities_on_a_fixed_config() {
        let p =
            encode(&Configuration::finite(3, -5, parse_symbols("3102213300120").unwrap()).unwrap());
        for i in 1..=3 {
            assert_eq!(reflection_formula_check(&p, i).unwrap(), 0);
            for j in 1..=3 {
                if i != j {
                    assert_eq!(cross_height_check(&p, i, j).unwrap(), 0);
                }
            }
        }
        let e = encode(&Configuration::empty(3).unwrap());
        assert_eq!(cross_height_check(&e, 1, 2).unwrap(), 0);
    }

    #[test]
    fn subsequence_examples() {
        let c = cfg(3, "0120313203011230");
        for i in 1..=3 {
            assert!(subsequence_check(&c, i).unwrap());
        }
    }
}
