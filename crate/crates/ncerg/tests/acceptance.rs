//! Acceptance criteria. Runs without the libtest harness so that every
//! criterion prints one pass/fail line; exits nonzero if any fails.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use nalgebra::DMatrix;
use ncerg::config::SemigroupConfig;
use ncerg::suites::{self, Context};
use ncerg::{ExperimentConfig, SuiteOutcome};
use ncerg_core::algebra::CMatrix;
use ncerg_core::averaging::{cesaro_average, sandwich_check};
use ncerg_core::bau::{bau_cauchy_certify, lemma_bb_certificate, Family, LemmaBbParams};
use ncerg_core::quadrature::QuadratureConfig;
use ncerg_core::random::Sampler;
use ncerg_core::semigroup::{map_matrix, Semigroup, SemigroupSpec};
use ncerg_core::{Complex64, Operator};

type Verdict = Result<String, String>;
type Criterion = Box<dyn FnOnce(&mut Option<f64>) -> Verdict>;

fn variants() -> Vec<SemigroupConfig> {
    vec![
        SemigroupConfig::Identity,
        SemigroupConfig::ScalarDecay { rate: 1.0 },
        SemigroupConfig::UnitaryFlow { hamiltonian: None },
        SemigroupConfig::SchurDecay {
            rates: None,
            scale: 1.0,
        },
        SemigroupConfig::GeneratorExp {
            generator: None,
            jumps: 2,
            decay: 0.1,
        },
    ]
}

fn context(semigroup: SemigroupConfig, dims: &[usize], seed: u64) -> Context {
    let mut cfg = ExperimentConfig {
        semigroup,
        seed,
        ..ExperimentConfig::default()
    };
    cfg.algebra.dims = dims.to_vec();
    cfg.algebra.weights = (0..dims.len()).map(|i| 1.0 / (i + 1) as f64).collect();
    Context::new(cfg).expect("valid configuration")
}

fn failed_checks(out: &SuiteOutcome) -> Vec<String> {
    out.checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| {
            format!(
                "{}: {} ({:e} vs {:e}) {}",
                c.suite, c.name, c.value, c.threshold, c.detail
            )
        })
        .collect()
}

fn check_value(out: &SuiteOutcome, name: &str) -> Result<f64, String> {
    let c = out
        .checks
        .iter()
        .find(|c| c.name == name)
        .ok_or_else(|| format!("{}: missing check {name:?}", out.suite))?;
    if c.passed {
        Ok(c.value)
    } else {
        Err(format!(
            "{}: {name} failed ({:e} vs {:e}) {}",
            out.suite, c.value, c.threshold, c.detail
        ))
    }
}

/// The generator of `sg` as a matrix on the vectorised algebra, rebuilt from its `SemigroupSpec`.
fn generator(sg: &Semigroup) -> CMatrix {
    let alg = sg.algebra();
    let d = alg.vec_dim();
    let i = Complex64::new(0.0, 1.0);
    match sg.spec() {
        SemigroupSpec::Identity => CMatrix::zeros(d, d),
        SemigroupSpec::ScalarDecay { rate } => CMatrix::identity(d, d).scale(-rate),
        SemigroupSpec::UnitaryFlow { hamiltonian: h } => {
            map_matrix(alg, |x| Ok((&(h * x) - &(x * h)).scale(i))).unwrap()
        }
        SemigroupSpec::SchurDecay { rates } => map_matrix(alg, |x| {
            let blocks = x
                .blocks()
                .iter()
                .zip(rates)
                .map(|(b, c): (&CMatrix, &DMatrix<f64>)| b.zip_map(c, |z, r| z * -r))
                .collect();
            Operator::from_blocks(alg, blocks)
        })
        .unwrap(),
        SemigroupSpec::GeneratorExp { generator } => generator.clone(),
    }
}

fn taylor_exp(m: &CMatrix) -> CMatrix {
    let mut term = CMatrix::identity(m.nrows(), m.ncols());
    let mut sum = term.clone();
    for k in 1..=20 {
        term = &term * m / Complex64::new(k as f64, 0.0);
        sum += &term;
    }
    sum
}

/// Midpoint Riemann sum of `(1/T) ∫_0^T α_t(x) dt` with `n` points, stepping
/// with a Taylor exponential of the generator.
fn riemann_average(sg: &Semigroup, x: &Operator, horizon: f64, n: usize) -> Operator {
    let l = generator(sg);
    let h = horizon / n as f64;
    let step = taylor_exp(&l.scale(h));
    let mut v = taylor_exp(&l.scale(h / 2.0)) * x.to_vec();
    let mut sum = v.clone();
    for _ in 1..n {
        v = &step * v;
        sum += &v;
    }
    Operator::from_vec(sg.algebra(), &sum.scale(1.0 / n as f64)).unwrap()
}

fn criterion_1() -> Verdict {
    let mut worst = 0.0f64;
    for v in variants() {
        let ctx = context(v, &[2, 2], 11);
        let x = Sampler::new(11).operator(&ctx.alg);
        for horizon in [1.0, 0.125] {
            let avg = cesaro_average(&ctx.sg, &x, horizon, &QuadratureConfig::default())
                .map_err(|e| e.to_string())?;
            let oracle = riemann_average(&ctx.sg, &x, horizon, 100_000);
            let rel = avg.dist_inf(&oracle) / oracle.norm_inf();
            if rel > 1e-8 {
                return Err(format!(
                    "{} at T = {horizon}: relative error {rel:e}",
                    ctx.sg.name()
                ));
            }
            worst = worst.max(rel);
        }
    }
    Ok(format!(
        "max relative ∞-norm error {worst:e} over 5 variants, T ∈ {{1, 1/8}}"
    ))
}

fn criterion_2() -> Verdict {
    let grid = [0.05, 0.3, 1.0];
    let mut worst = f64::INFINITY;
    for v in variants() {
        let ctx = context(v, &[3, 3], 2);
        let mut sampler = Sampler::new(2);
        let xs: Vec<Operator> = (0..20).map(|_| sampler.positive(&ctx.alg)).collect();
        for &a in &grid {
            for &b in &grid {
                for x in &xs {
                    let s = sandwich_check(&ctx.sg, x, a, b, &ctx.cfg.quadrature, 1e-10)
                        .map_err(|e| e.to_string())?;
                    let m = s.lower.min(s.upper);
                    if m < -1e-8 {
                        return Err(format!(
                            "{} at (a, b) = ({a}, {b}): slack {m:e}",
                            ctx.sg.name()
                        ));
                    }
                    worst = worst.min(m);
                }
            }
        }
    }
    Ok(format!(
        "min slack {worst:e} over 9 pairs, 20 samples, 5 variants"
    ))
}

fn criterion_3() -> Verdict {
    let ctx = context(SemigroupConfig::default(), &[3, 3], 3);
    let cfg = &ctx.cfg;
    let x = Sampler::new(3).positive(&ctx.alg);
    let grid: Vec<f64> = (0..=12).map(|j| 2f64.powi(-j)).collect();
    let averages: Vec<Operator> = grid
        .iter()
        .map(|&t| cesaro_average(&ctx.sg, &x, t, &cfg.quadrature))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut finals = Vec::new();
    for p in [1.0, 2.0] {
        let xp = x.pnorm(p).unwrap();
        let gaps: Vec<f64> = averages
            .iter()
            .map(|a| (a - &x).pnorm(p).unwrap())
            .collect();
        if let Some(w) = gaps.windows(2).find(|w| w[1] > w[0]) {
            return Err(format!("p = {p}: gap rises from {:e} to {:e}", w[0], w[1]));
        }
        let last = gaps[gaps.len() - 1] / xp;
        if last >= 1e-3 {
            return Err(format!("p = {p}: final relative gap {last:e}"));
        }
        finals.push(last);
    }
    let eps = 0.1 * ctx.alg.total_trace();
    let family = Family::new(grid, averages).map_err(|e| e.to_string())?;
    let cert = bau_cauchy_certify(&family, eps, 1e-3 * x.norm_inf(), &cfg.tolerances)
        .map_err(|e| e.to_string())?;
    let cotrace = cert.certificate.projection.cotrace();
    if !cert.certified || cotrace > eps || !cert.certificate.verify(&family, 1e-10) {
        return Err(format!(
            "Cauchy certificate rejected: co-trace {cotrace:e}, ε = {eps:e}"
        ));
    }
    Ok(format!(
        "final ‖β_T(x) − x‖_p / ‖x‖_p = {:e} (p = 1), {:e} (p = 2); certificate co-trace {cotrace:e} ≤ {eps:e}",
        finals[0], finals[1]
    ))
}

fn criterion_4() -> Verdict {
    let ctx = context(SemigroupConfig::default(), &[3, 3], 4);
    let cfg = &ctx.cfg;
    let x = Sampler::new(4).positive(&ctx.alg);
    let eps = 0.1 * ctx.alg.total_trace();
    let cert = lemma_bb_certificate(
        &ctx.sg,
        &x,
        &LemmaBbParams::new(1.0, 1.0, eps),
        &cfg.quadrature,
        &cfg.tolerances,
    )
    .map_err(|e| e.to_string())?;
    let e = &cert.certificate.projection;
    let tau_perp = ctx.alg.total_trace() - e.operator().trace().re;
    if !(tau_perp < eps) {
        return Err(format!("τ(e⊥) = {tau_perp:e} ≥ ε = {eps:e}"));
    }
    for l in cert.h_levels.iter().chain(&cert.g_levels) {
        if l.cut != eps / 2f64.powi(l.k as i32 + 1) {
            return Err(format!("level {} cut {:e}", l.k, l.cut));
        }
    }
    let level_sum: f64 = cert
        .h_levels
        .iter()
        .chain(&cert.g_levels)
        .map(|l| l.cotrace)
        .sum();
    if tau_perp > level_sum + 1e-12 {
        return Err(format!(
            "meet co-trace {tau_perp:e} above level sum {level_sum:e}"
        ));
    }
    let cut_sum: f64 = cert
        .h_levels
        .iter()
        .chain(&cert.g_levels)
        .map(|l| l.cut)
        .sum();
    // Recompute the last decay row from the averages.
    let a = *cert.differences.grid().last().unwrap();
    let bx = cesaro_average(&ctx.sg, &x, 1.0, &cfg.quadrature).unwrap();
    let diff = &cesaro_average(&ctx.sg, &bx, a, &cfg.quadrature).unwrap() - &bx;
    let decay = diff.compress(e).norm_inf();
    let stored = cert.decay.last().unwrap().compressed_difference;
    if !(decay < 1e-6) || (decay - stored).abs() > 1e-12 {
        return Err(format!("decay {decay:e} (stored {stored:e}) at a = {a:e}"));
    }
    Ok(format!(
        "τ(e⊥) = {tau_perp:e} < ε = {eps:e}; level co-traces {level_sum:e} ≤ Σ cuts {cut_sum:e}; decay {decay:e} at a = {a:e}"
    ))
}

fn criterion_5(default_c: &mut Option<f64>) -> Verdict {
    let mut lines = Vec::new();
    for v in variants() {
        let is_default = v == SemigroupConfig::default();
        let ctx = context(v, &[3, 3], 5);
        let out = suites::maximal(&ctx).map_err(|e| e.to_string())?;
        let excess = check_value(&out, "uniform compressed bound")?;
        let ratio = check_value(&out, "empirical constant finite and stable")?;
        let c = out.empirical_c.filter(|c| c.is_finite() && *c > 0.0);
        if c.is_none() {
            return Err(format!("{}: no finite empirical C", ctx.sg.name()));
        }
        if is_default {
            *default_c = c;
        }
        lines.push(format!(
            "{} excess {excess:.2e} ratio {ratio:.2}",
            ctx.sg.name()
        ));
    }
    Ok(lines.join("; "))
}

fn criterion_6() -> Verdict {
    let mut worst = f64::INFINITY;
    for v in variants() {
        let ctx = context(v, &[3, 3], 6);
        let out = suites::weighted_avg(&ctx).map_err(|e| e.to_string())?;
        worst = worst.min(check_value(&out, "substitution bound")?);
    }
    Ok(format!(
        "min rhs − lhs {worst:e} over 200 cases on each of 5 variants"
    ))
}

fn criterion_7() -> Verdict {
    let ctx = context(SemigroupConfig::default(), &[3, 3], 7);
    let cfg = &ctx.cfg;
    let b = cfg.weight.build().map_err(|e| e.to_string())?;
    let trig = b.trig_part();
    // Dense midpoint oracle of the local mean of |b − P| over the final quarter.
    let grid = &cfg.besicovitch_grid;
    let tail = &grid[grid.len() - grid.len().div_ceil(4)..];
    let n = 100_000;
    let tail_sup = tail
        .iter()
        .map(|&t| {
            let h = t / n as f64;
            (0..n)
                .map(|j| (b.eval((j as f64 + 0.5) * h) - trig.eval((j as f64 + 0.5) * h)).norm())
                .sum::<f64>()
                / n as f64
        })
        .fold(0.0, f64::max);
    if tail_sup >= 0.05 {
        return Err(format!("tail-sup {tail_sup:e}"));
    }
    let out = suites::besicovitch(&ctx).map_err(|e| e.to_string())?;
    let failed = failed_checks(&out);
    if !failed.is_empty() {
        return Err(failed.join("; "));
    }
    let gap = check_value(&out, "transfer to weighted averages")?;
    let limit = check_value(&out, "tail norms below 2‖b‖_∞‖x‖_p")?;
    Ok(format!("tail-sup {tail_sup:e} < 0.05; transfer gap {gap:e}; tail norm {limit:e} within 2‖b‖_∞‖x‖_p"))
}

fn criterion_8(c: Option<f64>) -> Verdict {
    let c = c.ok_or("no empirical C from the maximal criterion")?;
    let ctx = context(SemigroupConfig::default(), &[3, 3], 5);
    let out = suites::banach_check(&ctx, c).map_err(|e| e.to_string())?;
    let failed = failed_checks(&out);
    if !failed.is_empty() {
        return Err(failed.join("; "));
    }
    let replay = check_value(&out, "replay reproduces bounds")?;
    let cotrace = check_value(&out, "final co-trace")?;
    let eps = ctx.cfg.banach_epsilon * ctx.alg.total_trace();
    if !(cotrace < eps * (c + 1.0) / 2.0) {
        return Err(format!("final co-trace {cotrace:e}"));
    }
    Ok(format!(
        "C = {c:e}; replay discrepancy {replay:e}; final co-trace {cotrace:e} < {:e}",
        eps * (c + 1.0) / 2.0
    ))
}

fn collect_files(root: &Path, dir: &Path, into: &mut BTreeMap<String, Vec<u8>>) {
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            collect_files(root, &path, into);
        } else {
            let key = path.strip_prefix(root).unwrap().display().to_string();
            into.insert(key, fs::read(&path).unwrap());
        }
    }
}

fn criterion_9() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for (run, threads) in [("a", "1"), ("b", "4")] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_ncerg"))
            .args(["run", "--suite", "full", "--seed", "9", "--out"])
            .arg(&out)
            .env("NCERG_THREADS", threads)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(format!("run {run} exited with {}", status.status));
        }
        let mut files = BTreeMap::new();
        collect_files(&out, &out, &mut files);
        outputs.push((files, status.stdout));
    }
    let (a, b) = (&outputs[0], &outputs[1]);
    if a.0.keys().ne(b.0.keys()) {
        return Err("runs wrote different file sets".into());
    }
    if let Some(k) = a.0.keys().find(|k| a.0[*k] != b.0[*k]) {
        return Err(format!("{k} differs between runs"));
    }
    if a.1 != b.1 {
        return Err("console reports differ".into());
    }
    Ok(format!(
        "{} files byte-identical across two seeded runs (1 and 4 threads)",
        a.0.len()
    ))
}

fn main() -> ExitCode {
    let mut default_c = None;
    let criteria: Vec<(&str, Criterion)> = vec![
        (
            "Cesàro average matches a Riemann-sum oracle",
            Box::new(|_| criterion_1()),
        ),
        ("sandwich slacks", Box::new(|_| criterion_2())),
        (
            "local convergence and Cauchy certificate",
            Box::new(|_| criterion_3()),
        ),
        (
            "multi-level projection construction",
            Box::new(|_| criterion_4()),
        ),
        ("maximal projection and empirical C", Box::new(criterion_5)),
        ("substitution bound sweep", Box::new(|_| criterion_6())),
        ("Besicovitch-weighted pipeline", Box::new(|_| criterion_7())),
        ("Banach principle assembly", Box::new(|c| criterion_8(*c))),
        ("deterministic full run", Box::new(|_| criterion_9())),
    ];
    let mut all = true;
    for (i, (name, f)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let verdict = f(&mut default_c);
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("criterion {}: pass: {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                all = false;
                println!("criterion {}: FAIL: {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
