use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use bbs_core::carrier::apply_Ti_inverse_direct;
use bbs_core::classify::{
    apply_word_interior, epoch_ends_a, example_config, good_set_check, is_periodic_012_or_021,
    reversibility_report, subcriticality_ratio, ExampleName, GoodSetParams,
};
use bbs_core::continuum::{
    bm_invariance_test, donsker_rescale, BmInvarianceParams, DriftSpec, SampledPath,
};
use bbs_core::dynamics::{format_word, full_update_word, parse_word, Letter};
use bbs_core::lattice::symbols_to_string;
use bbs_core::random::{
    density_check, invariance_test, product_expectation, sample_iid, ColorLaw, InvarianceParams,
};
use bbs_core::rng::derive_seed;
use bbs_core::stats::{covariance, ks_one_sample};
use bbs_core::{
    apply_Ti, apply_Ti_direct, apply_Ti_inverse, build_simplex_basis, carrier_from_heights, decode,
    encode, pitman_inverse, pitman_one_sided, pitman_two_sided, run_carrier, Configuration,
    ScalarPath, Tail,
};
use rayon::prelude::*;
use serde_json::{json, Value};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::args::*;
use crate::spec::{ExperimentSpec, Report};

/// How a command finished when it did not hit an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    /// A statistical test ran to completion and failed.
    Failed,
}

impl Status {
    fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Ok
        } else {
            Status::Failed
        }
    }
}

pub fn execute(spec: &ExperimentSpec, out: Option<&std::path::PathBuf>) -> Result<Status> {
    let emit = |results: Value, diagnostics: Value| -> Result<()> {
        Report::new(spec, results, diagnostics).emit(out)
    };
    match &spec.command {
        Command::Basis(a) => basis(a, emit),
        Command::Evolve(a) => evolve(spec, a, false, out),
        Command::Invert(a) => evolve(spec, a, true, out),
        Command::Carrier(a) => carrier(a, emit),
        Command::Pitman(a) => pitman(a),
        Command::Classify(a) => classify(a, emit),
        Command::Examples(a) => examples(a, emit),
        Command::Sample(a) => sample(a, emit),
        Command::InvarianceTest(a) => invariance(a, emit),
        Command::Donsker(a) => donsker(a, emit),
        Command::BmInvariance(a) => bm(a, emit),
        Command::Encode(a) => encode_csv(a),
        Command::Run(_) => bail!("run cannot be nested inside a spec"),
    }
}

fn load_config(input: &ConfigInput) -> Result<Configuration> {
    let text = match (&input.config_file, &input.config) {
        (Some(p), _) => {
            std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?
        }
        (None, Some(s)) => s.clone(),
        (None, None) => bail!("one of --config-file or --config is required"),
    };
    let line = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .ok_or_else(|| anyhow!("configuration input is empty"))?;
    Configuration::parse_text(line).context("lattice")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, format!("{text}\n")).with_context(|| format!("writing {}", path.display()))
}

fn sink(path: &Option<std::path::PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => Box::new(io::stdout().lock()),
    })
}

fn basis(a: &BasisArgs, emit: impl Fn(Value, Value) -> Result<()>) -> Result<Status> {
    let b = build_simplex_basis(a.kappa).context("simplex")?;
    let vectors: Vec<&[f64]> = b.vectors().collect();
    let gram: Vec<Vec<f64>> = vectors
        .iter()
        .map(|u| {
            vectors
                .iter()
                .map(|v| bbs_core::simplex::dot(u, v))
                .collect()
        })
        .collect();
    emit(
        json!({ "kappa": a.kappa, "vectors": vectors, "gram": gram }),
        json!({ "gram_max_deviation": b.gram_report() }),
    )?;
    Ok(Status::Ok)
}

fn step(cur: &Configuration, l: Letter, direct: bool) -> bbs_core::Result<Configuration> {
    let c = l.unsigned_abs() as usize;
    let out = match (direct, l > 0) {
        (false, true) => decode(&apply_Ti(&encode(cur), c)?)?,
        (false, false) => decode(&apply_Ti_inverse(&encode(cur), c)?)?,
        (true, true) => apply_Ti_direct(cur, c)?,
        (true, false) => apply_Ti_inverse_direct(cur, c)?,
    };
    Ok(out.trimmed())
}

fn evolve(
    spec: &ExperimentSpec,
    a: &EvolveArgs,
    inverse: bool,
    out: Option<&std::path::PathBuf>,
) -> Result<Status> {
    let config = load_config(&a.input)?;
    let mut word = match &a.word {
        Some(w) => parse_word(w).context("dynamics")?,
        None => full_update_word(config.kappa()),
    };
    if inverse {
        word = word.iter().rev().map(|l| -l).collect();
    }
    let route = if a.direct { RouteArg::Direct } else { a.route };
    let label = format_word(&word);

    let mut states = vec![("id".to_string(), config.clone())];
    let mut cur = config.clone();
    for s in 1..=a.steps {
        for (k, &l) in word.iter().enumerate() {
            let next = match route {
                RouteArg::Pitman => step(&cur, l, false),
                RouteArg::Direct => step(&cur, l, true),
                RouteArg::Both => {
                    let p = step(&cur, l, false).context("dynamics")?;
                    let d = step(&cur, l, true).context("carrier")?;
                    if !p.same_state(&d) {
                        bail!(
                            "route mismatch at step {s}, letter {k} ({l:+}): pitman {} vs direct {}",
                            p.to_text()?,
                            d.to_text()?
                        );
                    }
                    Ok(p)
                }
            }
            .with_context(|| format!("dynamics: step {s}, letter {k} ({l:+})"))?;
            cur = next;
            if a.trace && s == 1 && k + 1 < word.len() {
                states.push((format_word(&word[..=k]), cur.clone()));
            }
        }
        let name = if s == 1 {
            label.clone()
        } else {
            format!("({label})^{s}")
        };
        states.push((name, cur.clone()));
    }

    if let Some(p) = &a.output {
        write_text(p, &cur.to_text()?)?;
    }
    // one common window so the lines align
    let first = states.iter().map(|(_, c)| c.first()).min().unwrap_or(0);
    let last = states.iter().map(|(_, c)| c.last()).max().unwrap_or(0);
    let lines: Vec<String> = states
        .iter()
        .map(|(_, c)| {
            let cells = if first <= last {
                c.extended(first, last).map(|e| e.window(first, last))
            } else {
                Ok(Vec::new())
            }?;
            Ok(cells
                .iter()
                .map(|&s| symbols_to_string(&[s]))
                .collect::<Vec<_>>()
                .join(" "))
        })
        .collect::<bbs_core::Result<_>>()?;

    if a.json {
        let results = json!({
            "word": label,
            "window": [first, last],
            "states": states.iter().zip(&lines).map(|((n, c), l)| json!({
                "label": n,
                "config": c.to_text().ok(),
                "cells": l,
            })).collect::<Vec<_>>(),
            "final": cur.to_text()?,
        });
        Report::new(spec, results, json!({ "route": route })).emit(out)?;
    } else {
        for l in &lines {
            println!("{l}");
        }
    }
    Ok(Status::Ok)
}

fn carrier(a: &CarrierArgs, emit: impl Fn(Value, Value) -> Result<()>) -> Result<Status> {
    let config = load_config(&a.input)?;
    let colors: Vec<usize> = match a.color {
        Some(c) => vec![c],
        None => (1..=config.kappa()).collect(),
    };
    let path = encode(&config);
    let mut results = Vec::new();
    let mut agree = true;
    for c in colors {
        let t = run_carrier(&config, c).context("carrier")?;
        let h = carrier_from_heights(&path, c).context("carrier")?;
        agree &= t == h;
        results.push(json!({
            "color": c,
            "offset": t.offset(),
            "initial": t.initial(),
            "loads": t.loads(),
            "max_load": t.max_load(),
            "final_load": t.final_load(),
            "matches_heights": t == h,
        }));
    }
    emit(
        json!({ "carriers": results }),
        json!({ "all_match_heights": agree }),
    )?;
    if !agree {
        bail!("carrier: the carrier run disagrees with the height formula");
    }
    Ok(Status::Ok)
}

fn read_scalar_csv(path: &Path, tail: Tail) -> Result<ScalarPath> {
    let mut rdr =
        csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut first = None;
    let mut values = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let n: i64 = rec
            .get(0)
            .ok_or_else(|| anyhow!("row {row}: missing n"))?
            .trim()
            .parse()
            .with_context(|| format!("row {row}: n"))?;
        let v: f64 = rec
            .get(1)
            .ok_or_else(|| anyhow!("row {row}: missing value"))?
            .trim()
            .parse()
            .with_context(|| format!("row {row}: value"))?;
        let start = *first.get_or_insert(n);
        if n != start + row as i64 {
            bail!("row {row}: index {n} is not consecutive");
        }
        values.push(v);
    }
    let first = first.ok_or_else(|| anyhow!("{} has no rows", path.display()))?;
    ScalarPath::new(first, values, tail).context("pitman")
}

fn pitman(a: &PitmanArgs) -> Result<Status> {
    let tail = match a.slopes.as_deref() {
        Some([left, right]) => Tail::Slopes {
            left: *left,
            right: *right,
        },
        Some(_) => bail!("--slopes takes two values"),
        None => Tail::Windowed,
    };
    let pi = read_scalar_csv(&a.input, tail)?;
    let out = match a.transform {
        Transform::OneSided => pitman_one_sided(&pi),
        Transform::TwoSided => pitman_two_sided(&pi),
        Transform::Inverse => pitman_inverse(&pi),
    }
    .context("pitman")?;
    let mut w = csv::Writer::from_writer(sink(&a.output)?);
    w.write_record(["n", "value"])?;
    for (k, v) in out.values().iter().enumerate() {
        w.write_record([(out.first() + k as i64).to_string(), v.to_string()])?;
    }
    w.flush()?;
    Ok(Status::Ok)
}

fn classify(a: &ClassifyArgs, emit: impl Fn(Value, Value) -> Result<()>) -> Result<Status> {
    let config = load_config(&a.input)?;
    let path = encode(&config);
    let report = reversibility_report(&path, a.color).context("classify")?;
    let good = good_set_check(&path, &GoodSetParams::new(a.horizon)).context("classify")?;
    emit(
        json!({ "class_report": report, "good_set": good }),
        json!({ "boundary": config.boundary(), "window": [config.first(), config.last()] }),
    )?;
    Ok(Status::Ok)
}

fn examples(a: &ExamplesArgs, emit: impl Fn(Value, Value) -> Result<()>) -> Result<Status> {
    let name: ExampleName = a.name.parse().context("classify")?;
    let config = example_config(name, a.epochs).context("classify")?;
    if let Some(p) = &a.output {
        write_text(p, &config.to_text()?)?;
    }
    let analysis = match name {
        ExampleName::A => {
            let path = encode(&config);
            let trace = run_carrier(&config, 2).context("carrier")?;
            let mut start = config.first();
            let mut epochs = Vec::new();
            for (m, &end) in epoch_ends_a(a.epochs).iter().enumerate() {
                let max = (start..=end)
                    .filter_map(|n| trace.get(n))
                    .max()
                    .unwrap_or(0);
                let ratio = subcriticality_ratio(&path, 2, end, end).context("classify")?;
                epochs.push(json!({
                    "epoch": m + 1,
                    "end": end,
                    "max_carrier_load": max,
                    "ratio_color_2": ratio.first().and_then(|r| r.ratio),
                }));
                start = end + 1;
            }
            json!({ "epochs": epochs })
        }
        ExampleName::B | ExampleName::C => {
            let words: [&[Letter]; 4] = [&[1], &[2], &[1, 2], &[2, 1]];
            let mut out = Vec::new();
            for w in words {
                let r = apply_word_interior(&config, w).context("classify")?;
                out.push(json!({
                    "word": format_word(w),
                    "first": r.first,
                    "margin": r.margin,
                    "cells": symbols_to_string(&r.cells),
                    "periodic_012_or_021": is_periodic_012_or_021(&r.cells),
                }));
            }
            json!({ "interior": out })
        }
    };
    emit(
        json!({ "name": name, "epochs": a.epochs, "config": config.to_text()?, "analysis": analysis }),
        json!({ "boundary": config.boundary() }),
    )?;
    Ok(Status::Ok)
}

fn law_from(probs: &Option<Vec<f64>>, c: &Option<Vec<f64>>, n: Option<f64>) -> Result<ColorLaw> {
    let law = match (probs, c, n) {
        (Some(p), _, _) => ColorLaw::new(p.clone()),
        (None, Some(c), Some(n)) => ColorLaw::near_critical(c.len().saturating_sub(1), c, n),
        _ => bail!("give --probs or --c with --n"),
    };
    law.context("random")
}

fn sample(a: &SampleArgs, emit: impl Fn(Value, Value) -> Result<()>) -> Result<Status> {
    let law = law_from(&a.probs, &a.c, a.n)?;
    let seed = a.seed.expect("seed resolved before execution");
    let config = sample_iid(&law, a.first, a.last, seed).context("random")?;
    if let Some(p) = &a.output {
        write_text(p, &config.to_text()?)?;
    }
    // only meaningful for admissible laws on long enough samples
    let density = density_check(&config, &law).ok();
    emit(
        json!({ "config": config.to_text()?, "color_counts": config.color_counts() }),
        json!({ "law": law.probs(), "admissible": law.admissible(), "density": density }),
    )?;
    Ok(Status::Ok)
}

fn invariance(a: &InvarianceArgs, emit: impl Fn(Value, Value) -> Result<()>) -> Result<Status> {
    let law = ColorLaw::new(a.probs.clone()).context("random")?;
    if let Some(k) = a.kappa {
        if k != law.kappa() {
            bail!("--kappa {k} but --probs has {} ball colors", law.kappa());
        }
    }
    let seed = a.seed.expect("seed resolved before execution");
    let params = InvarianceParams::new(law.clone(), a.color, a.sites, a.word, a.trials, seed);
    let report = invariance_test(&params).context("random")?;
    if let Some(p) = &a.csv {
        let blocks: u64 = report.pattern_counts.iter().sum();
        let expected = product_expectation(&law, a.word, blocks);
        let mut w =
            csv::Writer::from_path(p).with_context(|| format!("writing {}", p.display()))?;
        w.write_record(["pattern", "count", "expected"])?;
        for (idx, (&o, e)) in report.pattern_counts.iter().zip(&expected).enumerate() {
            let mut cells = Vec::with_capacity(a.word);
            let mut rest = idx;
            for _ in 0..a.word {
                cells.push((rest % (law.kappa() + 1)) as bbs_core::Symbol);
                rest /= law.kappa() + 1;
            }
            w.write_record([symbols_to_string(&cells), o.to_string(), e.to_string()])?;
        }
        w.flush()?;
    }
    let pass = report.pass;
    let diagnostics = json!({
        "clean_trials": report.clean_trials,
        "contaminated_trials": report.contaminated_trials,
        "control_pass": report.control_pass,
    });
    emit(serde_json::to_value(&report)?, diagnostics)?;
    Ok(Status::from_pass(pass))
}

fn default_drift(kappa: usize) -> Vec<f64> {
    let mut c = vec![-0.5 / kappa as f64; kappa + 1];
    c[0] = 0.5;
    c
}

fn donsker(a: &DonskerArgs, emit: impl Fn(Value, Value) -> Result<()>) -> Result<Status> {
    let c = a.c.clone().unwrap_or_else(|| default_drift(a.kappa));
    let spec = DriftSpec::new(a.kappa, c).context("continuum")?;
    let seed = a.seed.expect("seed resolved before execution");
    let stride = a.stride.unwrap_or(a.n);
    if a.samples < 2 {
        bail!("need at least two samples");
    }
    let sample = |k: u64| donsker_rescale(&spec, a.n, a.l, stride, derive_seed(seed, k));
    if let Some(p) = &a.dump {
        let path = sample(0).context("continuum")?;
        path.write_csv(File::create(p)?).context("continuum")?;
    }
    let ends: Vec<Vec<f64>> = (0..a.samples)
        .into_par_iter()
        .map(|k| unit_value(&sample(k)?))
        .collect::<bbs_core::Result<_>>()
        .context("continuum")?;

    let basis = build_simplex_basis(a.kappa).context("simplex")?;
    let d = spec.drift(&basis);
    let coords: Vec<Vec<f64>> = (0..a.kappa)
        .map(|s| ends.iter().map(|r| r[s]).collect())
        .collect();
    let ks: Vec<f64> = coords
        .iter()
        .zip(&d)
        .map(|(xs, &m)| {
            let normal = Normal::new(m, 1.0).expect("unit variance");
            ks_one_sample(xs, |x| normal.cdf(x))
        })
        .collect();
    let cov: Vec<Vec<f64>> = coords
        .iter()
        .map(|x| coords.iter().map(|y| covariance(x, y)).collect())
        .collect();
    let max_ks = ks.iter().cloned().fold(0.0, f64::max);
    let max_off = (0..a.kappa)
        .flat_map(|s| (0..a.kappa).filter(move |&t| t != s).map(move |t| (s, t)))
        .map(|(s, t)| cov[s][t].abs())
        .fold(0.0, f64::max);
    let pass = max_ks < a.ks_threshold && max_off < a.cov_threshold;
    emit(
        json!({
            "drift": d,
            "ks": ks,
            "covariance": cov,
            "max_ks": max_ks,
            "max_off_diagonal_covariance": max_off,
            "pass": pass,
        }),
        json!({ "rng": "ChaCha8Rng", "stride": stride, "grid_h": stride as f64 / a.n as f64 }),
    )?;
    Ok(Status::from_pass(pass))
}

fn unit_value(p: &SampledPath) -> bbs_core::Result<Vec<f64>> {
    p.value_at(1.0)
}

fn bm(a: &BmArgs, emit: impl Fn(Value, Value) -> Result<()>) -> Result<Status> {
    let spec = DriftSpec::new(a.kappa, a.c.clone()).context("continuum")?;
    let seed = a.seed.expect("seed resolved before execution");
    let mut params = BmInvarianceParams::new(spec.clone(), a.seeds, seed);
    params.l = a.l;
    params.h = a.h;
    params.lprime = a.lprime;
    params.analysis = a.analysis;
    params.threshold = a.threshold;
    if let Some(p) = &a.dump {
        let path = bbs_core::continuum::sample_brownian_with_drift(&spec, a.l, a.h, seed)
            .context("continuum")?;
        path.write_csv(File::create(p)?).context("continuum")?;
    }
    let report = bm_invariance_test(&params).context("continuum")?;
    let pass = report.pass;
    let diagnostics = json!({
        "control_pass": report.control_pass,
        "contaminated_seeds": report.colors.iter().map(|c| c.contaminated_seeds).collect::<Vec<_>>(),
    });
    emit(serde_json::to_value(&report)?, diagnostics)?;
    Ok(Status::from_pass(pass))
}

fn encode_csv(a: &EncodeArgs) -> Result<Status> {
    let config = load_config(&a.input)?;
    encode(&config)
        .write_csv(sink(&a.output)?)
        .context("lattice")?;
    Ok(Status::Ok)
}
