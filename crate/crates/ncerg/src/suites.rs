//! The experiment suites. Each one draws its random operators from its own
//! seeded stream, so results do not depend on which suites run or in what order.

use std::sync::Arc;

use ncerg_core::averaging::{
    besicovitch_error, cesaro_average, sandwich_check, substitution_bound_check, weighted_average,
    BesicovitchWeight, Residual, ResidualKind, TrigTerm,
};
use ncerg_core::banach::{
    bp2_assemble, cauchy_certifier, maximal_oracle, replay, scheme_from_semigroup, Bp2Params,
    IndexedMaps,
};
use ncerg_core::bau::{
    bau_cauchy_certify, lemma_bb_certificate, lp_limit_check, maximal_from_averages,
    measure_nbhd_witness, perturbation_transfer, Family, LemmaBbParams, MaximalParams, NbhdOutcome,
};
use ncerg_core::random::Sampler;
use ncerg_core::semigroup::{validate_absolute_contraction, Semigroup, SemigroupSpec};
use ncerg_core::{Error, Operator, TracialAlgebra};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::report::{Cell, SuiteOutcome, Table};
use crate::{stream_seed, RunError};

/// Shared state for one run.
pub struct Context {
    pub cfg: ExperimentConfig,
    pub alg: Arc<TracialAlgebra>,
    pub sg: Semigroup,
}

impl Context {
    pub fn new(cfg: ExperimentConfig) -> Result<Self, RunError> {
        cfg.validate()?;
        let alg = cfg.build_algebra()?;
        let sg = cfg.build_semigroup(&alg)?;
        Ok(Self { cfg, alg, sg })
    }

    fn sampler(&self, suite: &str) -> Sampler {
        Sampler::new(stream_seed(self.cfg.seed, suite))
    }

    fn budget(&self) -> f64 {
        self.cfg.epsilon * self.alg.total_trace()
    }
}

/// Failures of a proof step are check failures; anything else is a numerical error.
fn step_result<T>(
    out: &mut SuiteOutcome,
    name: &str,
    r: ncerg_core::Result<T>,
) -> Result<Option<T>, RunError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(
            e @ (Error::StepFailed { .. }
            | Error::PremiseViolated { .. }
            | Error::ScheduleExhausted { .. }),
        ) => {
            out.check(name, false, f64::NAN, f64::NAN, e.to_string());
            Ok(None)
        }
        Err(e) => Err(RunError::Numerical(format!("{}: {name}: {e}", out.suite))),
    }
}

fn with_context<T>(suite: &str, what: &str, r: ncerg_core::Result<T>) -> Result<T, RunError> {
    r.map_err(|e| RunError::Numerical(format!("{suite}: {what}: {e}")))
}

pub fn validate_semigroup(ctx: &Context) -> Result<SuiteOutcome, RunError> {
    let mut out = SuiteOutcome::new("validate-semigroup");
    let tol = 1e-9;
    let report = with_context(
        out.suite,
        "validation",
        validate_absolute_contraction(
            &ctx.sg,
            &ctx.cfg.validation_times,
            tol,
            stream_seed(ctx.cfg.seed, out.suite),
        ),
    )?;
    let mut rows = Table::new("validation.csv");
    let mut violations = Table::new("violations.csv");
    for r in &report.rows {
        rows.push(vec![
            r.t.into(),
            r.choi_min_eigenvalue.into(),
            r.positivity_violation.into(),
            r.unitality_excess.into(),
            r.trace_excess.into(),
        ]);
        for (check, v) in [
            ("positivity", r.positivity_violation),
            ("unitality", r.unitality_excess),
            ("trace", r.trace_excess),
        ] {
            if v > tol {
                violations.push(vec![r.t.into(), check.into(), v.into()]);
            }
        }
    }
    let worst = report
        .max_positivity_violation
        .max(report.max_unitality_excess)
        .max(report.max_trace_excess);
    out.check(
        "absolute contraction",
        report.passed,
        worst,
        tol,
        format!(
            "{}; completely positive: {}; semigroup law residual {:e}",
            report.variant, report.completely_positive, report.semigroup_law_residual
        ),
    );
    out.tables.push(rows);
    out.tables.push(violations);
    Ok(out)
}

fn analytic_local_gap(spec: &SemigroupSpec, t: f64, norm: f64) -> Option<f64> {
    match spec {
        SemigroupSpec::Identity => Some(0.0),
        SemigroupSpec::ScalarDecay { rate } => {
            Some((1.0 + (-rate * t).exp_m1() / (rate * t)) * norm)
        }
        _ => None,
    }
}

pub fn local_avg(ctx: &Context) -> Result<SuiteOutcome, RunError> {
    let mut out = SuiteOutcome::new("local-avg");
    let cfg = &ctx.cfg;
    let x = ctx.sampler(out.suite).positive(&ctx.alg);
    let xp = with_context(out.suite, "norm", x.pnorm(cfg.p))?;
    let averages = cfg
        .t_grid
        .par_iter()
        .map(|&t| cesaro_average(&ctx.sg, &x, t, &cfg.quadrature))
        .collect::<ncerg_core::Result<Vec<_>>>();
    let averages = with_context(out.suite, "cesaro average", averages)?;

    let mut table = Table::new("local_avg.csv");
    let mut gaps = Vec::with_capacity(averages.len());
    for (&t, avg) in cfg.t_grid.iter().zip(&averages) {
        let gap = with_context(out.suite, "norm", (avg - &x).pnorm(cfg.p))?;
        let analytic = analytic_local_gap(ctx.sg.spec(), t, xp).map_or(Cell::Empty, Cell::Num);
        table.push(vec![t.into(), gap.into(), analytic]);
        gaps.push(gap);
    }
    out.tables.push(table);
    let worst_rise = gaps
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    out.check(
        "norm gap non-increasing as T decreases",
        worst_rise <= 1e-12 * xp,
        worst_rise,
        1e-12 * xp,
        format!("p = {}", cfg.p),
    );
    let last = *gaps.last().expect("nonempty grid");
    out.check(
        "final norm gap",
        last < cfg.decay_tol * xp,
        last,
        cfg.decay_tol * xp,
        format!(
            "‖β_T(x) − x‖_p at T = {:e}",
            cfg.t_grid[cfg.t_grid.len() - 1]
        ),
    );

    let family = with_context(
        out.suite,
        "family",
        Family::new(cfg.t_grid.clone(), averages),
    )?;
    let decay_tol = cfg.decay_tol * x.norm_inf();
    let cert = with_context(
        out.suite,
        "cauchy certificate",
        bau_cauchy_certify(&family, ctx.budget(), decay_tol, &cfg.tolerances),
    )?;
    let mut decay = Table::new("cauchy_decay.csv");
    for &(t, d) in &cert.decay {
        decay.push(vec![t.into(), d.into()]);
    }
    out.tables.push(decay);
    out.check(
        "b.a.u. Cauchy certificate",
        cert.certified,
        cert.certificate.cotrace,
        ctx.budget(),
        format!(
            "final compressed difference {:e} against {decay_tol:e}",
            cert.decay.last().map_or(0.0, |d| d.1)
        ),
    );
    out.certificate("cauchy", cert.certificate.to_json());

    let tail = &family.members()[family.len() - 1] - &x;
    match with_context(
        out.suite,
        "neighbourhood",
        measure_nbhd_witness(&tail, ctx.budget(), decay_tol, &cfg.tolerances),
    )? {
        NbhdOutcome::Witness(w) => {
            out.check(
                "measure neighbourhood witness",
                true,
                w.cotrace,
                ctx.budget(),
                "",
            );
            out.certificate("neighbourhood", w.to_json());
        }
        NbhdOutcome::Failure { min_cotrace } => {
            out.check(
                "measure neighbourhood witness",
                false,
                min_cotrace,
                ctx.budget(),
                "",
            );
        }
    }
    Ok(out)
}

pub fn sandwich(ctx: &Context) -> Result<SuiteOutcome, RunError> {
    let mut out = SuiteOutcome::new("sandwich");
    let cfg = &ctx.cfg;
    let mut sampler = ctx.sampler(out.suite);
    let xs: Vec<Operator> = (0..cfg.samples)
        .map(|_| sampler.positive(&ctx.alg))
        .collect();
    let pairs: Vec<(f64, f64)> = cfg
        .sandwich_grid
        .iter()
        .flat_map(|&a| cfg.sandwich_grid.iter().map(move |&b| (a, b)))
        .collect();
    let slacks = pairs
        .par_iter()
        .map(|&(a, b)| {
            let mut lower = f64::INFINITY;
            let mut upper = f64::INFINITY;
            for x in &xs {
                let s =
                    sandwich_check(&ctx.sg, x, a, b, &cfg.quadrature, cfg.tolerances.positivity)?;
                lower = lower.min(s.lower);
                upper = upper.min(s.upper);
            }
            Ok((a, b, lower, upper))
        })
        .collect::<ncerg_core::Result<Vec<_>>>();
    let slacks = with_context(out.suite, "sandwich", slacks)?;
    let mut table = Table::new("sandwich.csv");
    let mut worst = f64::INFINITY;
    for &(a, b, lower, upper) in &slacks {
        table.push(vec![a.into(), b.into(), lower.into(), upper.into()]);
        worst = worst.min(lower).min(upper);
    }
    out.tables.push(table);
    out.check(
        "sandwich slacks",
        worst >= -1e-8,
        worst,
        -1e-8,
        format!("{} pairs (a, b), {} samples", pairs.len(), xs.len()),
    );

    let b = cfg.sandwich_grid.iter().copied().fold(0.0, f64::max);
    let eps = ctx.budget();
    let params = LemmaBbParams::new(b, cfg.p, eps);
    let Some(cert) = step_result(
        &mut out,
        "projection construction",
        lemma_bb_certificate(&ctx.sg, &xs[0], &params, &cfg.quadrature, &cfg.tolerances),
    )?
    else {
        return Ok(out);
    };
    let mut levels = Table::new("lemma_levels.csv");
    let mut exact_cuts = true;
    for (family, records) in [("h", &cert.h_levels), ("g", &cert.g_levels)] {
        for l in records.iter() {
            exact_cuts &= l.cut == eps / 2f64.powi(l.k as i32 + 1);
            levels.push(vec![
                family.into(),
                l.k.into(),
                l.a.into(),
                l.moment.into(),
                l.moment_target.into(),
                l.cut.into(),
                l.cotrace.into(),
            ]);
        }
    }
    let mut decay = Table::new("lemma_decay.csv");
    for r in &cert.decay {
        decay.push(vec![
            r.a.into(),
            r.compressed_difference.into(),
            r.compressed_h.into(),
            r.compressed_g.into(),
        ]);
    }
    out.tables.push(levels);
    out.tables.push(decay);
    let cotrace = cert.certificate.cotrace;
    out.check(
        "construction co-trace",
        cotrace < eps,
        cotrace,
        eps,
        format!("b = {b}, p = {}", cfg.p),
    );
    out.check("level cuts are ε/2^(k+1)", exact_cuts, 0.0, 0.0, "");
    out.check(
        "meet co-trace within level sum",
        cotrace <= cert.level_cotrace_sum,
        cotrace,
        cert.level_cotrace_sum,
        "",
    );
    let final_decay = cert.decay.last().map_or(0.0, |r| r.compressed_difference);
    out.check(
        "decay reaches 1e-6",
        final_decay < 1e-6,
        final_decay,
        1e-6,
        "",
    );
    out.certificate("construction", cert.certificate.to_json());
    Ok(out)
}

pub fn maximal(ctx: &Context) -> Result<SuiteOutcome, RunError> {
    let mut out = SuiteOutcome::new("maximal");
    let cfg = &ctx.cfg;
    let mut sampler = ctx.sampler(out.suite);
    let xs: Vec<Operator> = (0..cfg.samples)
        .map(|_| sampler.hermitian(&ctx.alg))
        .collect();
    // The averages do not depend on ε; compute them once per sample.
    let mut grid = cfg.maximal_grid.clone();
    grid.sort_by(|a, b| b.total_cmp(a));
    grid.dedup();
    let families = xs
        .par_iter()
        .map(|x| {
            Family::from_fn(grid.clone(), |t| {
                Ok(cesaro_average(&ctx.sg, x, t, &cfg.quadrature)?.hermitian_part())
            })
        })
        .collect::<ncerg_core::Result<Vec<_>>>();
    let families = with_context(out.suite, "averages", families)?;
    let jobs: Vec<(usize, usize)> = (0..cfg.maximal_epsilons.len())
        .flat_map(|e| (0..xs.len()).map(move |i| (e, i)))
        .collect();
    let certs = jobs
        .par_iter()
        .map(|&(e, i)| {
            let params = MaximalParams {
                c: cfg.c,
                p: cfg.p,
                epsilon: cfg.maximal_epsilons[e],
            };
            maximal_from_averages(&xs[i], families[i].clone(), &params, &cfg.tolerances)
        })
        .collect::<ncerg_core::Result<Vec<_>>>();
    let certs = with_context(out.suite, "maximal projection", certs)?;

    let mut table = Table::new("maximal.csv");
    let mut per_eps = vec![0.0f64; cfg.maximal_epsilons.len()];
    let mut worst_excess = f64::NEG_INFINITY;
    let mut exceeded = 0;
    for (&(e, i), cert) in jobs.iter().zip(&certs) {
        let eps = cfg.maximal_epsilons[e];
        let c = &cert.certificate;
        let flagged = c.flags.iter().any(|f| f == ncerg_core::bau::BOUND_EXCEEDED);
        exceeded += usize::from(flagged);
        table.push(vec![
            eps.into(),
            i.into(),
            c.cotrace.into(),
            cert.bound.into(),
            c.achieved_bound.into(),
            cert.empirical_c.into(),
            usize::from(flagged).into(),
        ]);
        per_eps[e] = per_eps[e].max(cert.empirical_c);
        worst_excess = worst_excess.max(c.achieved_bound - eps);
    }
    out.tables.push(table);
    let mut c_table = Table::new("maximal_c.csv");
    for (eps, c) in cfg.maximal_epsilons.iter().zip(&per_eps) {
        c_table.push(vec![(*eps).into(), (*c).into()]);
    }
    out.tables.push(c_table);
    out.check(
        "uniform compressed bound",
        worst_excess <= 1e-8,
        worst_excess,
        1e-8,
        "max over samples, ε and T of ‖eβ_T(x)e‖ − ε",
    );
    let c_max = per_eps.iter().copied().fold(0.0, f64::max);
    let c_min = per_eps.iter().copied().fold(f64::INFINITY, f64::min);
    let ratio = c_max / c_min;
    out.check(
        "empirical constant finite and stable",
        c_max.is_finite() && c_min > 0.0 && ratio < 10.0,
        ratio,
        10.0,
        format!(
            "empirical C between {c_min:e} and {c_max:e}; {exceeded} runs above configured C = {}",
            cfg.c
        ),
    );
    out.empirical_c = Some(c_max);
    out.certificate("maximal", certs[certs.len() - 1].certificate.to_json());
    Ok(out)
}

/// A random weight with `‖b‖_∞ <= 1`: up to three trig terms plus a residual.
/// The `sin(1/t)` residual is excluded because strict quadrature of `β̃_T` cannot converge on it.
pub fn random_weight(s: &mut Sampler) -> Result<BesicovitchWeight, RunError> {
    let terms = 1 + (3.0 * s.uniform(0.0, 1.0)) as usize;
    let mut trig: Vec<TrigTerm> = (0..terms)
        .map(|_| TrigTerm::new(s.complex_normal(), s.uniform(-4.0, 4.0)))
        .collect();
    let kind = match (4.0 * s.uniform(0.0, 1.0)) as usize {
        0 => ResidualKind::Zero,
        1 => ResidualKind::Constant,
        2 => ResidualKind::Linear,
        _ => ResidualKind::Cosine {
            frequency: s.uniform(1.0, 20.0),
        },
    };
    let amplitude = s.normal();
    let total = trig.iter().map(|t| t.kappa.norm()).sum::<f64>()
        + if kind == ResidualKind::Zero {
            0.0
        } else {
            amplitude.abs()
        };
    let scale = s.uniform(0.1, 1.0) / total;
    for t in &mut trig {
        t.kappa *= scale;
    }
    let residual = if kind == ResidualKind::Zero {
        Residual::zero()
    } else {
        Residual::new(kind, amplitude * scale)
    };
    Ok(BesicovitchWeight::new(trig, residual, None)?)
}

pub fn weighted_avg(ctx: &Context) -> Result<SuiteOutcome, RunError> {
    let mut out = SuiteOutcome::new("weighted-avg");
    let cfg = &ctx.cfg;
    let b = cfg.weight.build()?;
    let mut sampler = ctx.sampler(out.suite);
    let x = sampler.positive(&ctx.alg);
    let xp = with_context(out.suite, "norm", x.pnorm(cfg.p))?;
    let bound = b.sup_bound() * xp;
    let norms = cfg
        .t_grid
        .par_iter()
        .map(|&t| weighted_average(&ctx.sg, &b, &x, t, &cfg.quadrature)?.pnorm(cfg.p))
        .collect::<ncerg_core::Result<Vec<_>>>();
    let norms = with_context(out.suite, "weighted average", norms)?;
    let mut table = Table::new("weighted_avg.csv");
    let mut worst = f64::INFINITY;
    for (&t, &n) in cfg.t_grid.iter().zip(&norms) {
        table.push(vec![t.into(), n.into(), bound.into(), (bound - n).into()]);
        worst = worst.min(bound - n);
    }
    out.tables.push(table);
    out.check(
        "weighted averages bounded by ‖b‖_∞‖x‖_p",
        worst >= -1e-8 * bound,
        worst,
        -1e-8 * bound,
        "",
    );

    // Randomized sweep: draws are made sequentially, evaluation in parallel.
    let cases: Vec<(BesicovitchWeight, Operator, f64)> = (0..cfg.sweep_cases)
        .map(|i| {
            let w = random_weight(&mut sampler)?;
            Ok((
                w,
                sampler.positive(&ctx.alg),
                cfg.t_grid[i % cfg.t_grid.len()],
            ))
        })
        .collect::<Result<_, RunError>>()?;
    let bounds = cases
        .par_iter()
        .map(|(w, x, t)| {
            substitution_bound_check(&ctx.sg, w, &w.trig_part(), x, *t, &cfg.quadrature)
        })
        .collect::<ncerg_core::Result<Vec<_>>>();
    let bounds = with_context(out.suite, "substitution bound", bounds)?;
    let mut table = Table::new("substitution.csv");
    let mut worst = f64::INFINITY;
    for (i, ((_, _, t), r)) in cases.iter().zip(&bounds).enumerate() {
        table.push(vec![
            i.into(),
            (*t).into(),
            r.lhs.into(),
            r.rhs.into(),
            (r.rhs - r.lhs).into(),
        ]);
        worst = worst.min(r.rhs - r.lhs);
    }
    out.tables.push(table);
    out.check(
        "substitution bound",
        worst >= -1e-8,
        worst,
        -1e-8,
        format!("{} random cases, min of rhs − lhs", cases.len()),
    );
    Ok(out)
}

pub fn besicovitch(ctx: &Context) -> Result<SuiteOutcome, RunError> {
    let mut out = SuiteOutcome::new("besicovitch");
    let cfg = &ctx.cfg;
    let b = cfg.weight.build()?;
    let trig = b.trig_part();
    let table = with_context(
        out.suite,
        "local mean",
        besicovitch_error(&b, &trig, &cfg.besicovitch_grid, &cfg.quadrature),
    )?;
    let mut csv = Table::new("besicovitch.csv");
    for &(t, mean, err) in &table.rows {
        csv.push(vec![t.into(), mean.into(), err.into()]);
    }
    out.tables.push(csv);
    out.check(
        "local mean error of the weight",
        table.tail_sup < cfg.besicovitch_tail_max,
        table.tail_sup,
        cfg.besicovitch_tail_max,
        "max over the final quarter of the T grid",
    );

    let x = ctx.sampler(out.suite).positive(&ctx.alg);
    let family = |w: &BesicovitchWeight| {
        let members = cfg
            .besicovitch_grid
            .par_iter()
            .map(|&t| weighted_average(&ctx.sg, w, &x, t, &cfg.quadrature))
            .collect::<ncerg_core::Result<Vec<_>>>()?;
        Family::new(cfg.besicovitch_grid.clone(), members)
    };
    let base = with_context(out.suite, "trig-polynomial averages", family(&trig))?;
    let tilde = with_context(out.suite, "weighted averages", family(&b))?;
    let xn = x.norm_inf();
    let base_cert = with_context(
        out.suite,
        "cauchy certificate",
        bau_cauchy_certify(&base, ctx.budget(), cfg.decay_tol * xn, &cfg.tolerances),
    )?;
    out.check(
        "trig-polynomial averages b.a.u. Cauchy",
        base_cert.certified,
        base_cert.certificate.cotrace,
        ctx.budget(),
        "",
    );
    let eps_seq: Vec<f64> = cfg.transfer_epsilons.iter().map(|e| e * xn).collect();
    if let Some(transfer) = step_result(
        &mut out,
        "transfer to weighted averages",
        perturbation_transfer(&tilde, &base, &base_cert.certificate, &eps_seq),
    )? {
        let mut csv = Table::new("transfer.csv");
        for s in &transfer.chain {
            csv.push(vec![
                s.epsilon.into(),
                cfg.besicovitch_grid[s.threshold_index].into(),
                s.gap.into(),
                s.base_bound.into(),
                s.new_bound.into(),
                s.allowed.into(),
            ]);
        }
        out.tables.push(csv);
        let last = transfer.chain.last().expect("nonempty chain");
        let cert = &transfer.certificate;
        out.check(
            "transfer to weighted averages",
            base_cert.certified && cert.cotrace <= ctx.budget() && last.new_bound <= last.allowed,
            last.new_bound,
            last.allowed,
            format!("co-trace {:e}", cert.cotrace),
        );
        out.certificate("transfer", cert.to_json());
    }

    let limit = x.scale(b.eval(0.0));
    let xp = with_context(out.suite, "norm", x.pnorm(cfg.p))?;
    let lp = with_context(
        out.suite,
        "limit check",
        lp_limit_check(&tilde, cfg.p, &limit, cfg.decay_tol * xp),
    )?;
    out.check(
        "limit norm below tail norms",
        lp.passed,
        lp.limit_norm,
        lp.liminf_proxy + cfg.decay_tol * xp,
        "limit b(0)x",
    );
    let s_bound = 2.0 * b.sup_bound() * xp;
    out.check(
        "tail norms below 2‖b‖_∞‖x‖_p",
        lp.liminf_proxy <= s_bound,
        lp.liminf_proxy,
        s_bound,
        "",
    );
    Ok(out)
}

pub fn banach_check(ctx: &Context, c: f64) -> Result<SuiteOutcome, RunError> {
    let mut out = SuiteOutcome::new("banach-check");
    let cfg = &ctx.cfg;
    let x = ctx.sampler(out.suite).positive(&ctx.alg);
    let maps = with_context(
        out.suite,
        "maps",
        IndexedMaps::cesaro(&ctx.sg, cfg.t_grid.clone(), cfg.quadrature),
    )?;
    let scheme = with_context(
        out.suite,
        "scheme",
        scheme_from_semigroup(&ctx.sg, cfg.p, cfg.alpha, cfg.quadrature),
    )?;
    let oracle = with_context(
        out.suite,
        "oracle",
        maximal_oracle(
            &ctx.sg,
            cfg.t_grid.clone(),
            c,
            cfg.p,
            cfg.quadrature,
            cfg.tolerances,
        ),
    )?;
    let dense = cauchy_certifier(cfg.tolerances);
    let params = Bp2Params {
        epsilon: cfg.banach_epsilon,
        n_max: cfg.banach_approximants,
    };
    let Some(cert) = step_result(
        &mut out,
        "assembly",
        bp2_assemble(
            &maps,
            &x,
            &params,
            &scheme,
            &oracle,
            &dense,
            &cfg.tolerances,
        ),
    )?
    else {
        return Ok(out);
    };
    let mut table = Table::new("banach_steps.csv");
    for s in &cert.steps {
        table.push(vec![
            s.step.into(),
            s.quantity.into(),
            s.index.map_or(Cell::Empty, Cell::Int),
            s.value.into(),
            s.target.into(),
        ]);
    }
    out.tables.push(table);
    let eps = cfg.banach_epsilon;
    out.check(
        "assembly",
        true,
        cert.certificate.achieved_bound,
        eps,
        format!(
            "n0 = {}, N0 = {}, horizon {}",
            cert.n0, cert.big_n0, cert.horizon
        ),
    );
    let drift = with_context(out.suite, "replay", replay(&cert, &maps, &x, cfg.p))?;
    out.check("replay reproduces bounds", drift <= 1e-10, drift, 1e-10, "");
    let cotrace = cert.f().cotrace();
    let target = eps * (c + 1.0) / 2.0;
    out.check(
        "final co-trace",
        cotrace < target,
        cotrace,
        target,
        format!("C = {c:e}"),
    );
    out.check(
        "budget ledger",
        cert.budget_spent < target,
        cert.budget_spent,
        target,
        "Σ τ(p_n⊥) + τ(q⊥)",
    );
    out.certificate("banach", cert.to_json());
    Ok(out)
}
