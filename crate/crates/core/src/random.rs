//! Random initial configurations and the i.i.d. invariance experiment.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::carrier::{apply_Ti_direct_with_load, run_carrier_with_initial_load};
use crate::error::{BbsError, Result};
use crate::lattice::{check_color, Configuration, Symbol};
use crate::rng::{derive_seed, rng_from_seed, RNG_ALGORITHM};
use crate::stats::{chi_square, ChiSquare};

const LAW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorLaw {
    kappa: usize,
    probs: Vec<f64>,
}

impl ColorLaw {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(BbsError::InadmissibleLaw(
                "need probabilities for color 0 and at least one ball color".into(),
            ));
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(BbsError::InadmissibleLaw(format!(
                "probabilities must lie in [0, 1]: {probs:?}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > LAW_TOL {
            return Err(BbsError::InadmissibleLaw(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(ColorLaw {
            kappa: probs.len() - 1,
            probs,
        })
    }

    /// `p_i = 1/(kappa+1) + c_i / sqrt(n kappa)`.
    pub fn near_critical(kappa: usize, c: &[f64], n: f64) -> Result<Self> {
        check_drift_coefficients(kappa, c).map_err(BbsError::InadmissibleLaw)?;
        let scale = (n * kappa as f64).sqrt();
        let probs: Vec<f64> = c
            .iter()
            .map(|ci| 1.0 / (kappa as f64 + 1.0) + ci / scale)
            .collect();
        if probs.iter().any(|&p| p <= 0.0 || p >= 1.0) {
            return Err(BbsError::InadmissibleLaw(format!(
                "n = {n} is too small: probabilities {probs:?} leave (0, 1)"
            )));
        }
        // renormalize away the rounding in sum(c) = 0
        let total: f64 = probs.iter().sum();
        Self::new(probs.iter().map(|p| p / total).collect())
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// `p_i < p_0` for every ball color, the condition under which `T_i`
    /// preserves the product law.
    pub fn admissible(&self) -> bool {
        self.probs[1..].iter().all(|&p| p < self.probs[0])
    }

    /// The probability vector read backwards, used as a mis-specified null.
    pub fn reversed(&self) -> ColorLaw {
        let mut probs = self.probs.clone();
        probs.reverse();
        ColorLaw {
            kappa: self.kappa,
            probs,
        }
    }
}

/// Checks `sum c = 0` and `c_0 > c_i`; shared with the drift specification.
pub(crate) fn check_drift_coefficients(kappa: usize, c: &[f64]) -> std::result::Result<(), String> {
    if c.len() != kappa + 1 {
        return Err(format!(
            "expected {} coefficients, got {}",
            kappa + 1,
            c.len()
        ));
    }
    let total: f64 = c.iter().sum();
    if total.abs() > LAW_TOL {
        return Err(format!("coefficients sum to {total}, not 0"));
    }
    if let Some(i) = (1..=kappa).find(|&i| c[i] >= c[0]) {
        return Err(format!(
            "need c_0 > c_{i}, got c_0 = {}, c_{i} = {}",
            c[0], c[i]
        ));
    }
    Ok(())
}

/// Cells `first..=last` drawn i.i.d. from `law`. The window must contain
/// the anchor, as for any windowed configuration.
pub fn sample_iid(law: &ColorLaw, first: i64, last: i64, seed: u64) -> Result<Configuration> {
    let dist =
        WeightedIndex::new(&law.probs).map_err(|e| BbsError::InadmissibleLaw(e.to_string()))?;
    let mut rng = rng_from_seed(seed);
    let len = (last - first + 1).max(0) as usize;
    let cells = (0..len).map(|_| dist.sample(&mut rng) as Symbol).collect();
    Configuration::windowed(law.kappa, first, cells)
}

pub fn sample_near_critical(
    kappa: usize,
    c: &[f64],
    n: f64,
    first: i64,
    last: i64,
    seed: u64,
) -> Result<Configuration> {
    sample_iid(&ColorLaw::near_critical(kappa, c, n)?, first, last, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityStat {
    pub color: usize,
    /// `A_i S_N / ((p_0 - p_i) N)` with `N` the last site.
    pub ratio: f64,
    /// Standardized deviation of `A_i S_N` from its mean `(p_0 - p_i) N`.
    pub z: f64,
}

/// Per-color law-of-large-numbers diagnostic over sites `1..=last`.
pub fn density_check(config: &Configuration, law: &ColorLaw) -> Result<Vec<DensityStat>> {
    if law.kappa != config.kappa() {
        return Err(BbsError::DimensionMismatch {
            expected: config.kappa(),
            got: law.kappa,
        });
    }
    if !law.admissible() {
        return Err(BbsError::InadmissibleLaw(
            "need p_i < p_0 for every color".into(),
        ));
    }
    let cells = config.window(1, config.last());
    if cells.len() < 1000 {
        return Err(BbsError::InvalidArgument(format!(
            "density check needs at least 1000 sites right of 0, got {}",
            cells.len()
        )));
    }
    let n = cells.len() as f64;
    let mut counts = vec![0usize; law.kappa + 1];
    for &s in &cells {
        counts[s as usize] += 1;
    }
    let p0 = law.probs[0];
    Ok((1..=law.kappa)
        .map(|i| {
            let a = counts[0] as f64 - counts[i] as f64;
            let pi = law.probs[i];
            let mu = p0 - pi;
            let var = p0 + pi - mu * mu;
            DensityStat {
                color: i,
                ratio: a / (mu * n),
                z: if var > 0.0 {
                    (a - mu * n) / (var * n).sqrt()
                } else {
                    0.0
                },
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceParams {
    pub law: ColorLaw,
    pub color: usize,
    /// Size of the analysis window; the sample covers twice as many sites.
    pub sites: usize,
    pub word_length: usize,
    pub trials: usize,
    pub seed: u64,
    pub threshold: f64,
    /// Fraction of clean trials that must pass.
    pub required_fraction: f64,
    /// Required rise of `A_i` inside the left margin before the analysis
    /// window, see [`invariance_test`].
    pub min_left_rise: i64,
    /// p-value below which the mis-specified null counts as rejected.
    pub control_threshold: f64,
}

impl InvarianceParams {
    pub fn new(
        law: ColorLaw,
        color: usize,
        sites: usize,
        word_length: usize,
        trials: usize,
        seed: u64,
    ) -> Self {
        InvarianceParams {
            law,
            color,
            sites,
            word_length,
            trials,
            seed,
            threshold: 1e-3,
            required_fraction: 0.9,
            min_left_rise: 50,
            control_threshold: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub trial: usize,
    pub seed: u64,
    pub contaminated: bool,
    pub left_rise: i64,
    pub right_renewal: bool,
    pub chi_square: Option<ChiSquare>,
    pub pass: bool,
    pub control: Option<ChiSquare>,
    pub control_rejected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub params: InvarianceParams,
    pub rng: String,
    pub trials: Vec<TrialReport>,
    pub clean_trials: usize,
    pub contaminated_trials: usize,
    pub passed_trials: usize,
    pub pass: bool,
    pub control_rejected_trials: usize,
    pub control_pass: bool,
    /// Pattern counts summed over clean trials, indexed by
    /// `sum_k symbol_k (kappa+1)^k`.
    pub pattern_counts: Vec<u64>,
}

/// Counts non-overlapping blocks of length `w`; non-overlapping blocks of an
/// i.i.d. sequence are independent, which the chi-square test requires.
pub fn block_pattern_counts(cells: &[Symbol], kappa: usize, w: usize) -> Vec<u64> {
    let base = kappa as u64 + 1;
    let mut counts = vec![0u64; base.pow(w as u32) as usize];
    for block in cells.chunks_exact(w) {
        let mut idx = 0u64;
        for (k, &s) in block.iter().enumerate() {
            idx += s as u64 * base.pow(k as u32);
        }
        counts[idx as usize] += 1;
    }
    counts
}

/// Expected block counts under the product law.
pub fn product_expectation(law: &ColorLaw, w: usize, blocks: u64) -> Vec<f64> {
    let base = law.kappa + 1;
    (0..base.pow(w as u32))
        .map(|mut idx| {
            let mut p = 1.0;
            for _ in 0..w {
                p *= law.probs[idx % base];
                idx /= base;
            }
            p * blocks as f64
        })
        .collect()
}

fn run_trial(params: &InvarianceParams, trial: usize) -> Result<(TrialReport, Vec<u64>)> {
    let n = params.sites as i64;
    let half = n / 2;
    let seed = derive_seed(params.seed, trial as u64);
    let eta = sample_iid(&params.law, -n, n, seed)?;
    let i = params.color;
    // the carrier enters the window empty; the result is exact from the first
    // site where the window's running max of A_i exceeds the true sup to the
    // left, which is why the left margin must rise far enough
    let (t, _) = apply_Ti_direct_with_load(&eta, i, 0)?;
    let trace = run_carrier_with_initial_load(&eta, i, 0)?;

    let margin = eta.window(-n, -half - 1);
    let mut a: i64 = 0;
    let mut rise: i64 = 0;
    for &s in &margin {
        a += match s {
            0 => 1,
            s if s as usize == i => -1,
            _ => 0,
        };
        rise = rise.max(a);
    }
    let right_renewal = (half + 1..=n).any(|k| trace.get(k) == Some(0));
    let contaminated = rise < params.min_left_rise || !right_renewal;

    let cells = t.window(-half, half);
    let counts = block_pattern_counts(&cells, params.law.kappa, params.word_length);
    let blocks: u64 = counts.iter().sum();
    let (chi, control) = if contaminated {
        (None, None)
    } else {
        let e = product_expectation(&params.law, params.word_length, blocks);
        let e_bad = product_expectation(&params.law.reversed(), params.word_length, blocks);
        (
            Some(chi_square(&counts, &e)?),
            Some(chi_square(&counts, &e_bad)?),
        )
    };
    let pass = chi.as_ref().is_some_and(|c| c.p_value > params.threshold);
    let control_rejected = control
        .as_ref()
        .is_some_and(|c| c.p_value < params.control_threshold);
    Ok((
        TrialReport {
            trial,
            seed,
            contaminated,
            left_rise: rise,
            right_renewal,
            chi_square: chi,
            pass,
            control,
            control_rejected,
        },
        if contaminated {
            vec![0; counts.len()]
        } else {
            counts
        },
    ))
}

/// Samples `eta` on `[-N, N]`, applies `T_i` with an empty carrier entering
/// at `-N`, and tests the block frequencies of `T_i eta` on `[-N/2, N/2]`
/// against the product law. The same counts are also tested against the
/// reversed law as a power check.
///
/// A trial is excluded as boundary-contaminated when `A_i` does not rise by
/// at least `min_left_rise` within the left margin (so an unseen entering
/// load of that size would still be absorbed) or when the carrier never
/// empties in the right margin.
pub fn invariance_test(params: &InvarianceParams) -> Result<InvarianceReport> {
    check_color(params.law.kappa, params.color)?;
    if !params.law.admissible() {
        return Err(BbsError::InadmissibleLaw(format!(
            "need p_i < p_0 for every color, got {:?}",
            params.law.probs
        )));
    }
    if params.word_length == 0 || params.word_length > 4 {
        return Err(BbsError::InvalidArgument(
            "word length must be in 1..=4".into(),
        ));
    }
    if params.sites < 4 * params.word_length {
        return Err(BbsError::InvalidArgument("too few sites".into()));
    }
    let results = (0..params.trials)
        .into_par_iter()
        .map(|t| run_trial(params, t))
        .collect::<Result<Vec<_>>>()?;
    let mut pattern_counts = vec![0u64; (params.law.kappa + 1).pow(params.word_length as u32)];
    let mut trials = Vec::with_capacity(results.len());
    for (r, counts) in results {
        pattern_counts
            .iter_mut()
            .zip(&counts)
            .for_each(|(a, b)| *a += b);
        trials.push(r);
    }
    let clean = trials.iter().filter(|t| !t.contaminated).count();
    let passed = trials.iter().filter(|t| t.pass).count();
    let rejected = trials.iter().filter(|t| t.control_rejected).count();
    let needed = (params.required_fraction * clean as f64).ceil() as usize;
    Ok(InvarianceReport {
        params: params.clone(),
        rng: RNG_ALGORITHM.to_string(),
        clean_trials: clean,
        contaminated_trials: trials.len() - clean,
        passed_trials: passed,
        pass: clean > 0 && passed >= needed,
        control_rejected_trials: rejected,
        control_pass: clean > 0 && rejected == clean,
        trials,
        pattern_counts,
    })
}
