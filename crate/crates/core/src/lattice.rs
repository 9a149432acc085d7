//! Particle configurations and their path encodings.
//!
//! A configuration stores the symbols `eta_n` for `n` in a finite window
//! `[first, last]`. Its path encoding stores the cumulative tallies
//! `a_0(n), ..., a_kappa(n)` for `n` in `[first - 1, last]`, anchored so
//! that `a(0) = 0`. Site `n` contributes the step from `n - 1` to `n`.
//!
//! Two boundary modes are supported:
//! * [`Boundary::FiniteSupport`]: every site outside the window is empty, so
//!   all quantities extend analytically (each outside step is `e_0`).
//! * [`Boundary::Windowed`]: nothing is known outside the window. Such
//!   windows must contain the anchor, and queries outside them fail.

use std::fmt;
use std::io;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{BbsError, Result};
use crate::simplex::{dot, SimplexBasis};

pub type Symbol = u32;

/// Largest kappa representable in the one-character-per-cell text format.
pub const TEXT_FORMAT_MAX_KAPPA: usize = 61;
const SYMBOLS: &[u8] = b"0123456789abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    FiniteSupport,
    Windowed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Configuration {
    kappa: usize,
    offset: i64,
    cells: Vec<Symbol>,
    boundary: Boundary,
}

fn check_anchor(first: i64, last: i64, boundary: Boundary) -> Result<()> {
    if boundary == Boundary::Windowed && !(first - 1 <= 0 && 0 <= last) {
        return Err(BbsError::AnchorOutsideWindow {
            first: first - 1,
            last,
        });
    }
    Ok(())
}

impl Configuration {
    pub fn new(kappa: usize, offset: i64, cells: Vec<Symbol>, boundary: Boundary) -> Result<Self> {
        if kappa == 0 {
            return Err(BbsError::ZeroKappa);
        }
        if let Some((k, &s)) = cells.iter().enumerate().find(|(_, &s)| s as usize > kappa) {
            return Err(BbsError::InvalidSymbol {
                index: offset + k as i64,
                symbol: s,
                kappa,
            });
        }
        check_anchor(offset, offset + cells.len() as i64 - 1, boundary)?;
        Ok(Configuration {
            kappa,
            offset,
            cells,
            boundary,
        })
    }

    pub fn finite(kappa: usize, offset: i64, cells: Vec<Symbol>) -> Result<Self> {
        Self::new(kappa, offset, cells, Boundary::FiniteSupport)
    }

    pub fn windowed(kappa: usize, offset: i64, cells: Vec<Symbol>) -> Result<Self> {
        Self::new(kappa, offset, cells, Boundary::Windowed)
    }

    /// The all-empty configuration (finite support, empty window).
    pub fn empty(kappa: usize) -> Result<Self> {
        Self::finite(kappa, 1, Vec::new())
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    /// First stored site.
    pub fn first(&self) -> i64 {
        self.offset
    }

    /// Last stored site (`first - 1` for an empty window).
    pub fn last(&self) -> i64 {
        self.offset + self.cells.len() as i64 - 1
    }

    pub fn cells(&self) -> &[Symbol] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// `eta_n`; `None` only for windowed configurations outside the window.
    pub fn get(&self, n: i64) -> Option<Symbol> {
        if n >= self.first() && n <= self.last() {
            Some(self.cells[(n - self.offset) as usize])
        } else {
            match self.boundary {
                Boundary::FiniteSupport => Some(0),
                Boundary::Windowed => None,
            }
        }
    }

    pub fn with_boundary(&self, boundary: Boundary) -> Result<Self> {
        Self::new(self.kappa, self.offset, self.cells.clone(), boundary)
    }

    /// Finite-support copy whose window covers `[first, last]` in addition
    /// to the current one.
    pub fn extended(&self, first: i64, last: i64) -> Result<Self> {
        if self.boundary != Boundary::FiniteSupport {
            return Err(BbsError::Undecidable { op: "extend" });
        }
        let lo = first.min(self.first());
        let hi = last.max(self.last());
        let cells = (lo..=hi).map(|n| self.get(n).unwrap_or(0)).collect();
        Self::new(self.kappa, lo, cells, self.boundary)
    }

    /// Finite-support copy with leading and trailing empty sites removed.
    pub fn trimmed(&self) -> Self {
        if self.boundary != Boundary::FiniteSupport {
            return self.clone();
        }
        match (
            self.cells.iter().position(|&s| s != 0),
            self.cells.iter().rposition(|&s| s != 0),
        ) {
            (Some(a), Some(b)) => Configuration {
                kappa: self.kappa,
                offset: self.offset + a as i64,
                cells: self.cells[a..=b].to_vec(),
                boundary: self.boundary,
            },
            _ => Configuration {
                kappa: self.kappa,
                offset: 1,
                cells: Vec::new(),
                boundary: self.boundary,
            },
        }
    }

    /// Equality of the represented states: finite-support configurations
    /// compare site by site over the union of windows.
    pub fn same_state(&self, other: &Configuration) -> bool {
        if self.kappa != other.kappa || self.boundary != other.boundary {
            return false;
        }
        match self.boundary {
            Boundary::FiniteSupport => self.trimmed() == other.trimmed(),
            Boundary::Windowed => self == other,
        }
    }

    /// Number of balls of each color `0..=kappa` in the window.
    pub fn color_counts(&self) -> Vec<usize> {
        let mut out = vec![0; self.kappa + 1];
        for &s in &self.cells {
            out[s as usize] += 1;
        }
        out
    }

    /// Cells of `[first, last]` clamped to the window.
    pub fn window(&self, first: i64, last: i64) -> Vec<Symbol> {
        (first.max(self.first())..=last.min(self.last()))
            .map(|n| self.cells[(n - self.offset) as usize])
            .collect()
    }

    pub fn symbol_string(&self) -> String {
        symbols_to_string(&self.cells)
    }

    /// `kappa=K offset=N cells=<symbols>`, plus `boundary=windowed` when
    /// the configuration is windowed.
    pub fn to_text(&self) -> Result<String> {
        if self.kappa > TEXT_FORMAT_MAX_KAPPA {
            return Err(BbsError::InvalidArgument(format!(
                "kappa = {} exceeds the text-format limit {}",
                self.kappa, TEXT_FORMAT_MAX_KAPPA
            )));
        }
        let mut s = format!(
            "kappa={} offset={} cells={}",
            self.kappa,
            self.offset,
            self.symbol_string()
        );
        if self.boundary == Boundary::Windowed {
            s.push_str(" boundary=windowed");
        }
        Ok(s)
    }

    pub fn parse_text(text: &str) -> Result<Self> {
        let mut kappa = None;
        let mut offset = None;
        let mut cells = None;
        let mut boundary = Boundary::FiniteSupport;
        for tok in text.split_whitespace() {
            let (key, val) = tok
                .split_once('=')
                .ok_or_else(|| BbsError::Parse(format!("expected key=value, got {tok:?}")))?;
            match key {
                "kappa" => {
                    kappa = Some(
                        val.parse::<usize>()
                            .map_err(|e| BbsError::Parse(format!("kappa: {e}")))?,
                    )
                }
                "offset" => {
                    offset = Some(
                        val.parse::<i64>()
                            .map_err(|e| BbsError::Parse(format!("offset: {e}")))?,
                    )
                }
                "cells" => cells = Some(parse_symbols(val)?),
                "boundary" => {
                    boundary = match val {
                        "finite" | "finite_support" => Boundary::FiniteSupport,
                        "windowed" => Boundary::Windowed,
                        other => {
                            return Err(BbsError::Parse(format!("unknown boundary {other:?}")))
                        }
                    }
                }
                other => return Err(BbsError::Parse(format!("unknown key {other:?}"))),
            }
        }
        let kappa = kappa.ok_or_else(|| BbsError::Parse("missing kappa".into()))?;
        let offset = offset.ok_or_else(|| BbsError::Parse("missing offset".into()))?;
        Self::new(kappa, offset, cells.unwrap_or_default(), boundary)
    }
}

impl FromStr for Configuration {
    type Err = BbsError;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse_text(s)
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol_string())
    }
}

pub fn symbols_to_string(cells: &[Symbol]) -> String {
    cells
        .iter()
        .map(|&s| SYMBOLS.get(s as usize).map(|&c| c as char).unwrap_or('?'))
        .collect()
}

pub fn parse_symbols(text: &str) -> Result<Vec<Symbol>> {
    text.bytes()
        .filter(|b| !b.is_ascii_whitespace())
        .map(|b| {
            SYMBOLS
                .iter()
                .position(|&c| c == b)
                .map(|p| p as Symbol)
                .ok_or_else(|| BbsError::Parse(format!("invalid cell symbol {:?}", b as char)))
        })
        .collect()
}

/// Swaps the symbols `0` and `i` at every site.
pub fn permute_zero_i(config: &Configuration, i: usize) -> Result<Configuration> {
    check_color(config.kappa, i)?;
    let i = i as Symbol;
    let cells = config
        .cells
        .iter()
        .map(|&s| match s {
            0 => i,
            s if s == i => 0,
            s => s,
        })
        .collect();
    Ok(Configuration {
        cells,
        ..config.clone()
    })
}

pub(crate) fn check_color(kappa: usize, i: usize) -> Result<()> {
    if i == 0 || i > kappa {
        return Err(BbsError::InvalidColor { color: i, kappa });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathEncoding {
    kappa: usize,
    start: i64,
    /// Row-major, one row of `kappa + 1` counts per index in `start..=end`.
    counts: Vec<i64>,
    boundary: Boundary,
}

/// Cumulative color tallies of a configuration, anchored at `a(0) = 0`.
pub fn encode(config: &Configuration) -> PathEncoding {
    let w = config.kappa + 1;
    let rows = config.len() + 1;
    let mut counts = vec![0i64; rows * w];
    for (k, &s) in config.cells.iter().enumerate() {
        let (prev, cur) = counts.split_at_mut((k + 1) * w);
        cur[..w].copy_from_slice(&prev[k * w..]);
        cur[s as usize] += 1;
    }
    let start = config.first() - 1;
    let end = config.last();
    // Shift so that the anchor condition holds.
    let (shift_row, base0) = if start <= 0 && 0 <= end {
        ((0 - start) as usize, 0)
    } else if start > 0 {
        // sites 1..=start are empty
        (0, start)
    } else {
        // sites end+1..=0 are empty
        ((end - start) as usize, end)
    };
    let shift: Vec<i64> = counts[shift_row * w..(shift_row + 1) * w].to_vec();
    for row in counts.chunks_exact_mut(w) {
        row.iter_mut().zip(&shift).for_each(|(x, s)| *x -= s);
        row[0] += base0;
    }
    PathEncoding {
        kappa: config.kappa,
        start,
        counts,
        boundary: config.boundary,
    }
}

/// Recovers the configuration from its encoding.
pub fn decode(path: &PathEncoding) -> Result<Configuration> {
    path.decode()
}

/// `A_i S_n = a_0(n) - a_i(n)`.
pub fn height(path: &PathEncoding, i: usize, n: i64) -> Result<i64> {
    path.height(i, n)
}

/// `A_i S_n` computed as `-2 (e_i - e_0) . S_n / |e_i - e_0|^2`.
pub fn height_via_projection(
    path: &PathEncoding,
    basis: &SimplexBasis,
    i: usize,
    n: i64,
) -> Result<f64> {
    path.height_via_projection(basis, i, n)
}

impl PathEncoding {
    /// Builds an encoding from explicit count rows, checking every path
    /// invariant (row sums, unit steps, anchoring).
    pub fn from_counts(
        kappa: usize,
        start: i64,
        rows: Vec<Vec<i64>>,
        boundary: Boundary,
    ) -> Result<Self> {
        if kappa == 0 {
            return Err(BbsError::ZeroKappa);
        }
        if rows.is_empty() {
            return Err(BbsError::MalformedPath {
                index: start,
                reason: "no rows".into(),
            });
        }
        let w = kappa + 1;
        let mut counts = Vec::with_capacity(rows.len() * w);
        for r in &rows {
            if r.len() != w {
                return Err(BbsError::DimensionMismatch {
                    expected: w,
                    got: r.len(),
                });
            }
            counts.extend_from_slice(r);
        }
        Self::from_flat_counts(kappa, start, counts, boundary)
    }

    /// [`from_counts`](Self::from_counts) with the rows concatenated.
    pub(crate) fn from_flat_counts(
        kappa: usize,
        start: i64,
        counts: Vec<i64>,
        boundary: Boundary,
    ) -> Result<Self> {
        let w = kappa + 1;
        if counts.is_empty() || !counts.len().is_multiple_of(w) {
            return Err(BbsError::MalformedPath {
                index: start,
                reason: "no rows".into(),
            });
        }
        for (k, r) in counts.chunks_exact(w).enumerate() {
            let n = start + k as i64;
            if r.iter().sum::<i64>() != n {
                return Err(BbsError::MalformedPath {
                    index: n,
                    reason: "counts do not sum to the index".into(),
                });
            }
        }
        let p = PathEncoding {
            kappa,
            start,
            counts,
            boundary,
        };
        p.validate()?;
        Ok(p)
    }

    /// Writes `counts_at(n)` into `out` without allocating.
    pub(crate) fn counts_into(&self, n: i64, out: &mut [i64]) -> Result<()> {
        let (start, end) = (self.start, self.end());
        if n >= start && n <= end {
            out.copy_from_slice(self.row(n));
            return Ok(());
        }
        if self.boundary == Boundary::Windowed {
            return Err(BbsError::OutOfWindow {
                index: n,
                first: start,
                last: end,
            });
        }
        let (edge, delta) = if n < start {
            (start, n - start)
        } else {
            (end, n - end)
        };
        out.copy_from_slice(self.row(edge));
        out[0] += delta;
        Ok(())
    }

    fn validate(&self) -> Result<()> {
        let (start, end) = (self.start, self.end());
        check_anchor(start + 1, end, self.boundary)?;
        // step rule
        for n in start + 1..=end {
            self.step_symbol(n)?;
        }
        let anchor_ok = if start <= 0 && 0 <= end {
            self.row(0).iter().all(|&x| x == 0)
        } else if start > 0 {
            self.row(start)[0] == start && self.row(start)[1..].iter().all(|&x| x == 0)
        } else {
            self.row(end)[0] == end && self.row(end)[1..].iter().all(|&x| x == 0)
        };
        if !anchor_ok {
            return Err(BbsError::MalformedPath {
                index: 0,
                reason: "counts are not anchored at a(0) = 0".into(),
            });
        }
        Ok(())
    }

    fn width(&self) -> usize {
        self.kappa + 1
    }

    fn row(&self, n: i64) -> &[i64] {
        let k = (n - self.start) as usize;
        &self.counts[k * self.width()..(k + 1) * self.width()]
    }

    fn step_symbol(&self, n: i64) -> Result<Symbol> {
        let (prev, cur) = (self.row(n - 1), self.row(n));
        let mut found = None;
        for (j, (a, b)) in prev.iter().zip(cur).enumerate() {
            match b - a {
                0 => {}
                1 if found.is_none() => found = Some(j as Symbol),
                _ => {
                    return Err(BbsError::MalformedPath {
                        index: n,
                        reason: "step is not a single unit vector".into(),
                    })
                }
            }
        }
        found.ok_or_else(|| BbsError::MalformedPath {
            index: n,
            reason: "zero step".into(),
        })
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    /// First path index (one before the first cell).
    pub fn start(&self) -> i64 {
        self.start
    }

    pub fn end(&self) -> i64 {
        self.start + (self.counts.len() / self.width()) as i64 - 1
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<i64> {
        self.start..=self.end()
    }

    pub fn rows(&self) -> impl Iterator<Item = (i64, &[i64])> {
        let start = self.start;
        self.counts
            .chunks_exact(self.width())
            .enumerate()
            .map(move |(k, r)| (start + k as i64, r))
    }

    /// `(a_0(n), ..., a_kappa(n))` for any `n` when the support is finite.
    pub fn counts_at(&self, n: i64) -> Result<Vec<i64>> {
        let mut r = vec![0; self.width()];
        self.counts_into(n, &mut r)?;
        Ok(r)
    }

    pub fn height(&self, i: usize, n: i64) -> Result<i64> {
        check_color(self.kappa, i)?;
        let (start, end) = (self.start, self.end());
        if n >= start && n <= end {
            let r = self.row(n);
            return Ok(r[0] - r[i]);
        }
        let r = self.counts_at(n)?;
        Ok(r[0] - r[i])
    }

    /// `A_i S_n` over the stored window, in index order.
    pub fn heights(&self, i: usize) -> Result<Vec<i64>> {
        check_color(self.kappa, i)?;
        Ok(self.rows().map(|(_, r)| r[0] - r[i]).collect())
    }

    pub fn height_via_projection(&self, basis: &SimplexBasis, i: usize, n: i64) -> Result<f64> {
        check_color(self.kappa, i)?;
        if basis.kappa() != self.kappa {
            return Err(BbsError::DimensionMismatch {
                expected: self.kappa,
                got: basis.kappa(),
            });
        }
        let s = basis.embed_counts(&self.counts_at(n)?);
        let d = basis.edge(i);
        Ok(-2.0 * dot(&d, &s) / dot(&d, &d))
    }

    /// `S_n` as a point of `R^kappa`.
    pub fn point(&self, basis: &SimplexBasis, n: i64) -> Result<Vec<f64>> {
        Ok(basis.embed_counts(&self.counts_at(n)?))
    }

    pub fn decode(&self) -> Result<Configuration> {
        let cells = (self.start + 1..=self.end())
            .map(|n| self.step_symbol(n))
            .collect::<Result<Vec<_>>>()?;
        Configuration::new(self.kappa, self.start + 1, cells, self.boundary)
    }

    /// Writes `n, a_0..a_kappa, A_1..A_kappa` rows with a header.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["n".to_string()];
        header.extend((0..=self.kappa).map(|j| format!("a_{j}")));
        header.extend((1..=self.kappa).map(|j| format!("A_{j}")));
        w.write_record(&header).map_err(csv_err)?;
        for (n, r) in self.rows() {
            let mut rec = vec![n.to_string()];
            rec.extend(r.iter().map(|x| x.to_string()));
            rec.extend((1..=self.kappa).map(|j| (r[0] - r[j]).to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| BbsError::Parse(e.to_string()))?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> BbsError {
    BbsError::Parse(e.to_string())
}
