//! The color-`i` carrier and the direct ball-moving dynamics.
//!
//! The carrier sweeps left to right, picks up every color-`i` ball and drops
//! one ball on each empty site while it is loaded. This realizes "each ball
//! jumps to the leftmost empty site to its right, balls moving one at a time
//! from left to right" in a single pass, independently of any Pitman
//! transform.

use serde::{Deserialize, Serialize};

use crate::error::{BbsError, Result};
use crate::lattice::{check_color, Boundary, Configuration, PathEncoding, Symbol};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CarrierTrace {
    color: usize,
    /// Site of `loads[0]`.
    offset: i64,
    /// Load before the first site.
    initial: u64,
    loads: Vec<u64>,
}

impl CarrierTrace {
    pub fn color(&self) -> usize {
        self.color
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn initial(&self) -> u64 {
        self.initial
    }

    pub fn loads(&self) -> &[u64] {
        &self.loads
    }

    /// Load after the last site (the initial load for an empty window).
    pub fn final_load(&self) -> u64 {
        self.loads.last().copied().unwrap_or(self.initial)
    }

    pub fn max_load(&self) -> u64 {
        self.loads.iter().copied().fold(self.initial, u64::max)
    }

    /// `W_n`, or `None` outside the traced sites.
    pub fn get(&self, n: i64) -> Option<u64> {
        if n == self.offset - 1 {
            return Some(self.initial);
        }
        let k = n.checked_sub(self.offset)?;
        usize::try_from(k)
            .ok()
            .and_then(|k| self.loads.get(k).copied())
    }
}

fn step(load: u64, s: Symbol, i: Symbol) -> u64 {
    if s == i {
        load + 1
    } else if s == 0 && load > 0 {
        load - 1
    } else {
        load
    }
}

/// Carrier trace over the window of a finite-support configuration, starting
/// empty: the empty left tail forces the two-sided carrier to vanish there.
pub fn run_carrier(config: &Configuration, i: usize) -> Result<CarrierTrace> {
    if config.boundary() == Boundary::Windowed {
        return Err(BbsError::Undecidable { op: "run_carrier" });
    }
    run_carrier_with_initial_load(config, i, 0)
}

/// Carrier trace under an explicit assumption on the load entering the
/// window from the left. This is the only way to run a windowed
/// configuration; the caller owns the assumption.
pub fn run_carrier_with_initial_load(
    config: &Configuration,
    i: usize,
    initial: u64,
) -> Result<CarrierTrace> {
    check_color(config.kappa(), i)?;
    let mut load = initial;
    let loads = config
        .cells()
        .iter()
        .map(|&s| {
            load = step(load, s, i as Symbol);
            load
        })
        .collect();
    Ok(CarrierTrace {
        color: i,
        offset: config.first(),
        initial,
        loads,
    })
}

/// `W_n = sup_{m<=n} A_i S_m - A_i S_n`, with the supremum over the empty
/// left tail attained at the window edge.
pub fn carrier_from_heights(path: &PathEncoding, i: usize) -> Result<CarrierTrace> {
    if path.boundary() == Boundary::Windowed {
        return Err(BbsError::Undecidable {
            op: "carrier_from_heights",
        });
    }
    let heights = path.heights(i)?;
    let mut sup = i64::MIN;
    let all: Vec<u64> = heights
        .iter()
        .map(|&a| {
            sup = sup.max(a);
            (sup - a) as u64
        })
        .collect();
    Ok(CarrierTrace {
        color: i,
        offset: path.start() + 1,
        initial: all[0],
        loads: all[1..].to_vec(),
    })
}

fn transport(cells: &[Symbol], i: Symbol, initial: u64) -> (Vec<Symbol>, u64) {
    let mut load = initial;
    let out = cells
        .iter()
        .map(|&s| {
            let before = load;
            load = step(load, s, i);
            if s == i {
                0
            } else if s == 0 && before > 0 {
                i
            } else {
                s
            }
        })
        .collect();
    (out, load)
}

/// `T_i` by moving balls. The window grows to the right by the load left in
/// the carrier at the old right edge, which is exactly where the last balls
/// land.
pub fn apply_Ti_direct(config: &Configuration, i: usize) -> Result<Configuration> {
    if config.boundary() == Boundary::Windowed {
        return Err(BbsError::Undecidable {
            op: "apply_Ti_direct",
        });
    }
    check_color(config.kappa(), i)?;
    let (mut cells, left) = transport(config.cells(), i as Symbol, 0);
    cells.extend(std::iter::repeat_n(i as Symbol, left as usize));
    Configuration::finite(config.kappa(), config.first(), cells)
}

/// `T_i` on the window alone given the entering load. Returns the windowed
/// result and the load carried out past the right edge, whose balls land
/// outside the window.
pub fn apply_Ti_direct_with_load(
    config: &Configuration,
    i: usize,
    initial: u64,
) -> Result<(Configuration, u64)> {
    check_color(config.kappa(), i)?;
    let (cells, left) = transport(config.cells(), i as Symbol, initial);
    Ok((
        Configuration::new(config.kappa(), config.first(), cells, config.boundary())?,
        left,
    ))
}

/// `T_i^{-1}` as mirror image of `T_i`: reflect space, move balls, reflect
/// back. Balls of color `i` then jump to the nearest empty site on their
/// left, processed right to left.
pub fn apply_Ti_inverse_direct(config: &Configuration, i: usize) -> Result<Configuration> {
    let moved = apply_Ti_direct(&mirror(config)?, i)?;
    mirror(&moved)
}

/// Site `n` goes to `-n`.
pub fn mirror(config: &Configuration) -> Result<Configuration> {
    let mut cells = config.cells().to_vec();
    cells.reverse();
    Configuration::new(config.kappa(), -config.last(), cells, config.boundary())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{encode, parse_symbols};

    fn cfg(kappa: usize, s: &str) -> Configuration {
        Configuration::finite(kappa, 1, parse_symbols(s).unwrap()).unwrap()
    }

    /// Ball-by-ball simulation: each color-i ball, leftmost first, jumps to
    /// the nearest empty site to its right that no earlier ball has taken.
    fn naive_ti(c: &Configuration, i: Symbol) -> Vec<Symbol> {
        let n = c.len();
        let mut cells: Vec<Symbol> = c.cells().to_vec();
        cells.extend(std::iter::repeat_n(0, n + 1));
        let balls: Vec<usize> = (0..n).filter(|&k| cells[k] == i).collect();
        let mut moved = vec![false; cells.len()];
        for b in balls {
            let mut t = b + 1;
            while cells[t] != 0 || moved[t] {
                t += 1;
            }
            cells[b] = 0;
            cells[t] = i;
            moved[t] = true;
        }
        cells
    }

    #[test]
    fn carrier_examples() {
        let c = cfg(2, "120010");
        assert_eq!(run_carrier(&c, 1).unwrap().loads(), &[1, 1, 0, 0, 1, 0]);
        assert!(run_carrier(&cfg(2, "000"), 1)
            .unwrap()
            .loads()
            .iter()
            .all(|&w| w == 0));
        assert_eq!(run_carrier(&cfg(2, "222"), 2).unwrap().loads(), &[1, 2, 3]);
        assert_eq!(
            carrier_from_heights(&encode(&c), 1).unwrap().loads(),
            &[1, 1, 0, 0, 1, 0]
        );
        let w = c.with_boundary(Boundary::Windowed).unwrap();
        assert!(matches!(
            run_carrier(&w, 1),
            Err(BbsError::Undecidable { .. })
        ));
        assert_eq!(
            run_carrier_with_initial_load(&w, 1, 2).unwrap().loads(),
            &[3, 3, 2, 1, 2, 1]
        );
    }

    #[test]
    fn direct_examples() {
        let out = apply_Ti_direct(&cfg(2, "120010"), 1).unwrap();
        assert!(out.same_state(&cfg(2, "021001")));
        let intro = cfg(3, "0120313203011230");
        let out = apply_Ti_direct(&intro, 1).unwrap();
        assert!(out.same_state(&cfg(3, "00213032130002311")));
        let e = Configuration::empty(2).unwrap();
        assert!(apply_Ti_direct(&e, 1).unwrap().same_state(&e));
    }

    #[test]
    fn window_grows_by_final_load() {
        let c = cfg(1, "111");
        let out = apply_Ti_direct(&c, 1).unwrap();
        assert_eq!(out.symbol_string(), "000111");
    }

    #[test]
    fn soliton_moves_its_length() {
        let mut c = cfg(1, "1110000000");
        for t in 1..4 {
            c = apply_Ti_direct(&c, 1).unwrap().trimmed();
            assert_eq!(c.first(), 1 + 3 * t);
            assert_eq!(c.symbol_string(), "111");
        }
    }

    #[test]
    fn exhaustive_against_naive_simulation() {
        for kappa in 1..=3usize {
            let len = if kappa == 3 { 6 } else { 8 };
            let total = (kappa as u64 + 1).pow(len as u32);
            for code in 0..total {
                let mut x = code;
                let cells: Vec<Symbol> = (0..len)
                    .map(|_| {
                        let s = (x % (kappa as u64 + 1)) as Symbol;
                        x /= kappa as u64 + 1;
                        s
                    })
                    .collect();
                let c = Configuration::finite(kappa, 1, cells).unwrap();
                for i in 1..=kappa {
                    let direct = apply_Ti_direct(&c, i).unwrap();
                    let naive = Configuration::finite(kappa, 1, naive_ti(&c, i as Symbol)).unwrap();
                    assert!(direct.same_state(&naive), "{c} color {i}");
                    let a = run_carrier(&c, i).unwrap();
                    let b = carrier_from_heights(&encode(&c), i).unwrap();
                    assert_eq!(a, b);
                    let back = apply_Ti_inverse_direct(&direct, i).unwrap();
                    assert!(back.same_state(&c));
                }
            }
        }
    }
}
