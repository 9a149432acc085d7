//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Run with `cargo test -p bbs-core --test acceptance`.

use std::time::{Duration, Instant};

use bbs_core::carrier::apply_Ti_inverse_direct;
use bbs_core::classify::{epoch_ends_a, example_config, subcriticality_ratio, ExampleName};
use bbs_core::continuum::{
    bm_invariance_test, donsker_rescale, scaling_equivariance_check, BmInvarianceParams, DriftSpec,
    SampledPath,
};
use bbs_core::dynamics::{
    carrier_identity_check, reflection_formula_check, subsequence_check, t2t1_factorized,
};
use bbs_core::lattice::parse_symbols;
use bbs_core::random::{invariance_test, ColorLaw, InvarianceParams};
use bbs_core::rng::stream;
use bbs_core::simplex::dot;
use bbs_core::stats::{covariance, ks_one_sample};
use bbs_core::{
    apply_Ti, apply_Ti_direct, apply_Ti_inverse, apply_word_config, build_simplex_basis,
    cross_height_check, decode, encode, in_domain, pitman_inverse, pitman_two_sided, Configuration,
    Decision, DomainSet, Route, ScalarPath, Symbol, Tail,
};
use rand::Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

const SEED: u64 = 20_240_601;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn cfg(kappa: usize, offset: i64, cells: &str) -> Configuration {
    Configuration::finite(kappa, offset, parse_symbols(cells).unwrap()).unwrap()
}

/// Every word of length `0..=max_len` over `0..=kappa`, placed at `offset(len)`.
fn all_windows(kappa: usize, max_len: usize, offset: impl Fn(usize) -> i64) -> Vec<Configuration> {
    let base = kappa as u64 + 1;
    let mut out = Vec::new();
    for len in 0..=max_len {
        for code in 0..base.pow(len as u32) {
            let mut x = code;
            let cells: Vec<Symbol> = (0..len)
                .map(|_| {
                    let s = (x % base) as Symbol;
                    x /= base;
                    s
                })
                .collect();
            out.push(Configuration::finite(kappa, offset(len), cells).unwrap());
        }
    }
    out
}

/// Exhaustive families of the oracle criteria: each window both right of 0
/// and straddling it.
fn exhaustive_families() -> Vec<Configuration> {
    let mut all = Vec::new();
    for (kappa, max_len) in [(2, 8), (3, 6)] {
        all.extend(all_windows(kappa, max_len, |_| 1));
        all.extend(all_windows(kappa, max_len, |len| -(len as i64) / 2));
    }
    all
}

fn random_config(kappa: usize, len: usize, offset: i64, index: u64) -> Configuration {
    let mut rng = stream(SEED, index);
    let cells = (0..len)
        .map(|_| rng.random_range(0..=kappa as Symbol))
        .collect();
    Configuration::finite(kappa, offset, cells).unwrap()
}

fn c1_golden() -> Outcome {
    let one = [
        "0 1 1 1 0 0 0 0 0 0 1 0 0 0 0 0 0 0 0 0 0",
        "0 0 0 0 1 1 1 0 0 0 0 1 0 0 0 0 0 0 0 0 0",
        "0 0 0 0 0 0 0 1 1 1 0 0 1 0 0 0 0 0 0 0 0",
        "0 0 0 0 0 0 0 0 0 0 1 1 0 1 1 0 0 0 0 0 0",
        "0 0 0 0 0 0 0 0 0 0 0 0 1 0 0 1 1 1 0 0 0",
    ];
    let eta = "0 1 2 0 3 1 3 2 0 3 0 1 1 2 3 0 0 0 0 0 0 0 0 0";
    let three: [(&[i32], &str); 4] = [
        (&[1], "0 0 2 1 3 0 3 2 1 3 0 0 0 2 3 1 1 0 0 0 0 0 0 0"),
        (&[1, 2], "0 0 0 1 3 2 3 0 1 3 2 0 0 0 3 1 1 2 0 0 0 0 0 0"),
        (
            &[1, 2, 3],
            "0 0 0 1 0 2 0 3 1 0 2 3 3 0 0 1 1 2 3 0 0 0 0 0",
        ),
        (
            &[1, 2, 3, 1, 2, 3],
            "0 0 0 0 1 0 2 0 3 1 0 0 0 2 3 3 0 0 0 1 1 2 3 0",
        ),
    ];
    let mut bad = Vec::new();
    for route in [Route::Pitman, Route::Direct] {
        let mut cur = cfg(1, 1, one[0]);
        for (t, want) in one.iter().enumerate().skip(1) {
            cur = apply_word_config(&cur, &[1], route).unwrap();
            if cur.extended(1, 21).unwrap().cells() != cfg(1, 1, want).cells() {
                bad.push(format!("1-color T^{t} via {route:?}"));
            }
        }
        for (word, want) in three {
            let got = apply_word_config(&cfg(3, 1, eta), word, route).unwrap();
            if got.extended(1, 24).unwrap().cells() != cfg(3, 1, want).cells() {
                bad.push(format!("3-color {word:?} via {route:?}"));
            }
        }
    }
    outcome(
        bad.is_empty(),
        format!("4 + 4 strings on both routes; mismatches: {bad:?}"),
    )
}

fn c2_oracle() -> Outcome {
    let all = exhaustive_families();
    let mismatches: usize = all
        .par_iter()
        .map(|c| {
            let p = encode(c);
            (1..=c.kappa())
                .filter(|&i| {
                    let pitman = decode(&apply_Ti(&p, i).unwrap()).unwrap();
                    !pitman.same_state(&apply_Ti_direct(c, i).unwrap())
                })
                .count()
        })
        .sum();
    outcome(
        mismatches == 0,
        format!("{} windows x colors, {mismatches} mismatches", all.len()),
    )
}

fn round_trips(c: &Configuration) -> usize {
    let p = encode(c);
    (1..=c.kappa())
        .filter(|&i| {
            let t = apply_Ti(&p, i).unwrap();
            let a = decode(&apply_Ti_inverse(&t, i).unwrap()).unwrap();
            let u = apply_Ti_inverse(&p, i).unwrap();
            let b = decode(&apply_Ti(&u, i).unwrap()).unwrap();
            let d = apply_Ti_inverse_direct(&apply_Ti_direct(c, i).unwrap(), i).unwrap();
            !(a.same_state(c) && b.same_state(c) && d.same_state(c))
        })
        .count()
}

/// A random scalar path with steps in `{-1, 0, 1}` that satisfies the
/// forward (`forward = true`) or backward round-trip condition.
fn domain_path(index: u64, forward: bool) -> ScalarPath {
    let mut rng = stream(SEED ^ 0x5ca1a, index);
    let left_len = rng.random_range(0..60usize);
    let right_len = rng.random_range(0..60usize);
    let mut neg = vec![0.0];
    for _ in 0..left_len {
        neg.push(neg.last().unwrap() - rng.random_range(-1..=1) as f64);
    }
    let mut pos = vec![0.0];
    for _ in 0..right_len {
        pos.push(pos.last().unwrap() + rng.random_range(-1..=1) as f64);
    }
    let flat = rng.random_bool(0.5);
    let mut values: Vec<f64> = neg.iter().rev().chain(&pos[1..]).copied().collect();
    let mut zero = left_len;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let (left, right) = if forward {
        let left = if rng.random_bool(0.5) { -1.0 } else { 0.0 };
        if flat {
            while *values.last().unwrap() > min {
                let v = values.last().unwrap() - 1.0;
                values.push(v);
            }
            (left, 0.0)
        } else {
            (left, -1.0)
        }
    } else {
        let right = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
        if flat {
            while values[0] > min {
                values.insert(0, values[0] - 1.0);
                zero += 1;
            }
            (0.0, right)
        } else {
            (1.0, right)
        }
    };
    ScalarPath::new(-(zero as i64), values, Tail::Slopes { left, right }).unwrap()
}

fn c3_inversion() -> Outcome {
    let all = exhaustive_families();
    let exhaustive_bad: usize = all.par_iter().map(round_trips).sum();
    let random_bad: usize = (0..100_000u64)
        .into_par_iter()
        .map(|k| round_trips(&random_config(3, 200, -100 + (k % 200) as i64, k)))
        .sum();

    let scalar_bad: usize = (0..100_000u64)
        .into_par_iter()
        .map(|k| {
            let forward = k % 2 == 0;
            let p = domain_path(k, forward);
            let (set, back) = if forward {
                (
                    DomainSet::P1InvP1,
                    pitman_inverse(&pitman_two_sided(&p).unwrap()).unwrap(),
                )
            } else {
                (
                    DomainSet::P1P1Inv,
                    pitman_two_sided(&pitman_inverse(&p).unwrap()).unwrap(),
                )
            };
            let ok = in_domain(&p, set, 1.0) == Decision::Yes && back.same_path(&p, 0.0);
            usize::from(!ok)
        })
        .sum();

    // |n| never returns to its running infimum on the right
    let abs = ScalarPath::from_fn(
        -5,
        5,
        Tail::Slopes {
            left: -1.0,
            right: 1.0,
        },
        |n| n.abs() as f64,
    )
    .unwrap();
    let excluded = in_domain(&abs, DomainSet::P1InvP1, 1.0) == Decision::No;
    let fails = !pitman_inverse(&pitman_two_sided(&abs).unwrap())
        .unwrap()
        .same_path(&abs, 1e-9);

    outcome(
        exhaustive_bad == 0 && random_bad == 0 && scalar_bad == 0 && excluded && fails,
        format!(
            "exhaustive {exhaustive_bad} + random {random_bad} lattice failures, \
             {scalar_bad}/100000 scalar failures, |n| excluded {excluded} and round trip fails {fails}"
        ),
    )
}

fn c4_identities() -> Outcome {
    let basis = build_simplex_basis(3).unwrap();
    let bad: Vec<usize> = (0..10_000u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(SEED ^ 0x1e77a, k);
            let len = rng.random_range(1..120usize);
            let c = random_config(3, len, rng.random_range(-80..40i64), k + 1_000_000);
            let p = encode(&c);
            let mut v = [0usize; 5];
            for i in 1..=3 {
                v[0] += usize::from(carrier_identity_check(&c, i).unwrap() != 0);
                v[1] += usize::from(reflection_formula_check(&p, i).unwrap() != 0);
                for j in (1..=3).filter(|&j| j != i) {
                    v[2] += usize::from(cross_height_check(&p, i, j).unwrap() != 0);
                }
                v[4] += usize::from(!subsequence_check(&c, i).unwrap());
            }
            let f = decode(&t2t1_factorized(&p, &basis).unwrap()).unwrap();
            let w = apply_word_config(&c, &[1, 2], Route::Pitman).unwrap();
            v[3] += usize::from(!f.same_state(&w));
            v.to_vec()
        })
        .reduce(
            || vec![0; 5],
            |a, b| a.iter().zip(&b).map(|(x, y)| x + y).collect(),
        );
    outcome(
        bad.iter().all(|&b| b == 0),
        format!(
            "10000 instances; failures: carrier {}, reflection {}, cross-height {}, tau-factorization {}, subsequence {}",
            bad[0], bad[1], bad[2], bad[3], bad[4]
        ),
    )
}

fn c5_simplex() -> Outcome {
    let mut worst = 0.0f64;
    for kappa in [1usize, 2, 3, 5, 10] {
        let basis = build_simplex_basis(kappa).unwrap();
        let e: Vec<Vec<f64>> = (0..=kappa).map(|i| basis.vector(i).to_vec()).collect();
        for i in 0..=kappa {
            for j in 0..=kappa {
                let want = if i == j { 1.0 } else { -1.0 / kappa as f64 };
                worst = worst.max((dot(&e[i], &e[j]) - want).abs());
            }
        }
        for s in 0..kappa {
            worst = worst.max(e.iter().map(|v| v[s]).sum::<f64>().abs());
        }
        let mut rng = stream(SEED ^ 0x51, kappa as u64);
        let factor = (kappa as f64 + 1.0) / kappa as f64;
        for _ in 0..1000 {
            let mut u: Vec<f64> = (0..kappa).map(|_| rng.random_range(-1.0..1.0)).collect();
            let nu = dot(&u, &u).sqrt();
            u.iter_mut().for_each(|x| *x /= nu);
            let sq: f64 = e.iter().map(|v| dot(v, &u).powi(2)).sum();
            worst = worst.max((sq - factor).abs());
            if kappa > 1 {
                let mut v: Vec<f64> = (0..kappa).map(|_| rng.random_range(-1.0..1.0)).collect();
                let proj = dot(&v, &u);
                v.iter_mut().zip(&u).for_each(|(x, y)| *x -= proj * y);
                let cross: f64 = e.iter().map(|w| dot(w, &u) * dot(w, &v)).sum();
                worst = worst.max(cross.abs());
            }
        }
    }
    outcome(worst < 1e-10, format!("largest deviation {worst:.2e}"))
}

fn c6_iid() -> Outcome {
    let laws = [vec![0.6, 0.4], vec![0.5, 0.3, 0.2]];
    let mut lines = Vec::new();
    let mut pass = true;
    for (li, probs) in laws.iter().enumerate() {
        let law = ColorLaw::new(probs.clone()).unwrap();
        for i in 1..=law.kappa() {
            for w in 1..=3 {
                let seed = SEED + (li * 100 + i * 10 + w) as u64;
                let params = InvarianceParams::new(law.clone(), i, 1_000_000, w, 10, seed);
                let r = invariance_test(&params).unwrap();
                pass &= r.pass && r.control_pass && r.clean_trials == 10;
                lines.push(format!(
                    "law {probs:?} T_{i} w={w}: {}/{} pass, control {}/{}, contaminated {}",
                    r.passed_trials,
                    r.clean_trials,
                    r.control_rejected_trials,
                    r.clean_trials,
                    r.contaminated_trials
                ));
            }
        }
    }
    outcome(pass, lines.join("; "))
}

fn c7_counterexample() -> Outcome {
    let epochs = 50;
    let a = encode(&example_config(ExampleName::A, epochs).unwrap());
    let t = apply_Ti(&a, 2).unwrap();
    let ends = epoch_ends_a(epochs);
    let ratio = |p, color, n| {
        subcriticality_ratio(p, color, n, n).unwrap()[0]
            .ratio
            .unwrap()
    };
    let after: Vec<f64> = ends.iter().map(|&n| ratio(&t, 1, n)).collect();
    let below = after.iter().filter(|&&r| r < 0.6).count();
    let last_half_below = after[epochs / 2..].iter().all(|&r| r < 0.6);
    let decreasing = after[epochs / 2..].windows(2).all(|w| w[1] <= w[0]);
    let last = after[epochs - 1];
    let horizon = *ends.last().unwrap();
    let pre = [ratio(&a, 1, horizon), ratio(&a, 2, horizon)];
    let pass =
        last_half_below && decreasing && (last - 0.5).abs() < 0.05 && pre.iter().all(|&r| r > 0.9);
    outcome(
        pass,
        format!(
            "after T_2: {below}/{epochs} epoch ends below 0.6, all of the last {} below and decreasing: {}, \
             final {last:.4}; before T_2 at n = {horizon}: {:.4}, {:.4}",
            epochs - epochs / 2,
            last_half_below && decreasing,
            pre[0],
            pre[1]
        ),
    )
}

fn c8_donsker() -> Outcome {
    let n = 10_000;
    let samples = 10_000u64;
    let one = DriftSpec::new(1, vec![0.5, -0.5]).unwrap();
    let xs: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let p = donsker_rescale(&one, n, 1.0, n, bbs_core::rng::derive_seed(SEED, k)).unwrap();
            p.row(p.node_of(1.0).unwrap())[0]
        })
        .collect();
    let normal = Normal::new(1.0, 1.0).unwrap();
    let ks = ks_one_sample(&xs, |x| normal.cdf(x));

    let two = DriftSpec::new(2, vec![1.0, -0.5, -0.5]).unwrap();
    let incs: Vec<(f64, f64)> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let p =
                donsker_rescale(&two, n, 1.0, n, bbs_core::rng::derive_seed(SEED + 1, k)).unwrap();
            let r = p.row(p.node_of(1.0).unwrap());
            (r[0], r[1])
        })
        .collect();
    let (a, b): (Vec<f64>, Vec<f64>) = incs.into_iter().unzip();
    let cov = covariance(&a, &b);
    outcome(
        ks < 0.02 && cov.abs() < 0.05,
        format!("kappa=1 KS to N(1,1) {ks:.4}; kappa=2 cross covariance {cov:.4}"),
    )
}

fn c9_brownian() -> Outcome {
    let specs = [
        DriftSpec::new(1, vec![0.5, -0.5]).unwrap(),
        DriftSpec::new(2, vec![1.0, -0.5, -0.5]).unwrap(),
    ];
    let mut pass = true;
    let mut lines = Vec::new();
    for (k, spec) in specs.into_iter().enumerate() {
        let params = BmInvarianceParams::new(spec.clone(), 5000, SEED + 7 * k as u64);
        let r = bm_invariance_test(&params).unwrap();
        pass &= r.pass && r.control_pass;
        for c in &r.colors {
            lines.push(format!(
                "c={:?} T_{}: max KS {:.4} over {} seeds ({} contaminated), control KS {:.4}",
                spec.c(),
                c.color,
                c.max_ks,
                c.used_seeds,
                c.contaminated_seeds,
                c.control_max_ks
            ));
        }
    }
    outcome(pass, lines.join("; "))
}

fn c10_scaling() -> Outcome {
    let worst = (0..1000u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(SEED ^ 0xab, k);
            let kappa = rng.random_range(1..=3usize);
            let m = 100i64;
            let mut values = vec![0.0; (2 * m + 1) as usize * kappa];
            for side in [1i64, -1] {
                let mut cur = vec![0.0; kappa];
                for step in 1..=m {
                    for c in cur.iter_mut() {
                        *c += rng.random_range(-1.0..1.0);
                    }
                    let idx = (m + side * step) as usize;
                    values[idx * kappa..(idx + 1) * kappa].copy_from_slice(&cur);
                }
            }
            let path = SampledPath::new(kappa, 0.1, -m, values).unwrap();
            let basis = build_simplex_basis(kappa).unwrap();
            let i = rng.random_range(1..=kappa);
            [(2.0, 1.0), (1.0, 2.0), (3.0, 0.5)]
                .iter()
                .map(|&(a, b)| scaling_equivariance_check(&path, &basis, i, a, b).unwrap())
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    outcome(worst < 1e-10, format!("largest deviation {worst:.2e}"))
}

/// Id, name, stated runtime limit (if any), check.
type Criterion = (u32, &'static str, Option<Duration>, fn() -> Outcome);

fn main() {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria: [Criterion; 10] = [
        (1, "golden introductory evolutions", secs(1), c1_golden),
        (2, "Pitman route equals carrier route", secs(10), c2_oracle),
        (3, "inversion and scalar round trip", None, c3_inversion),
        (4, "height and carrier identities", None, c4_identities),
        (5, "simplex identities", None, c5_simplex),
        (6, "i.i.d. invariance", secs(120), c6_iid),
        (7, "counterexample (a)", None, c7_counterexample),
        (8, "Donsker scaling", secs(300), c8_donsker),
        (9, "Brownian invariance", secs(600), c9_brownian),
        (10, "scaling equivariance", None, c10_scaling),
    ];
    // an optional criterion number restricts the run
    let filter: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        if filter.is_some_and(|f| f != id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = budget.is_none_or(|b| elapsed <= b);
        let pass = out.pass && in_time;
        failed += usize::from(!pass);
        let limit = match budget {
            Some(b) if in_time => format!(", limit {}s", b.as_secs()),
            Some(b) => format!(", OVER limit {}s", b.as_secs()),
            None => String::new(),
        };
        println!(
            "{} {id:>2} {name}: {} [{:.2}s{limit}]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
