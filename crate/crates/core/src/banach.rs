//! Banach-principle engine: transfers b.a.u. convergence of `a_m(x) − a_n(x)`
//! from a dense subset to a whole `L^p` space, executing the standard proof
//! on concrete data and recording every intermediate bound.
//!
//! Infinite index sets are replaced by a finite grid of maps (the horizon);
//! "for all m, n >= N_0" is checked on the grid tail only.

use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::{meet_all, proj_meet, Operator, Projection};
use crate::averaging::{cesaro_average, dense_approximant};
use crate::bau::{
    bau_cauchy_certify, maximal_projection, Family, MaximalParams, ProjectionCertificate,
};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureConfig;
use crate::semigroup::{continuity_modulus, Semigroup};

type MapFn<'a> = dyn Fn(usize, &Operator) -> Result<Operator> + Send + Sync + 'a;

/// Finitely many maps `a_0, …, a_{N−1}` labelled by a strictly decreasing grid.
pub struct IndexedMaps<'a> {
    grid: Vec<f64>,
    map: Box<MapFn<'a>>,
}

impl<'a> IndexedMaps<'a> {
    pub fn new(
        grid: Vec<f64>,
        map: impl Fn(usize, &Operator) -> Result<Operator> + Send + Sync + 'a,
    ) -> Result<Self> {
        if grid.len() < 2 || grid.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParameter(
                "maps need at least two labels, strictly decreasing".into(),
            ));
        }
        Ok(Self {
            grid,
            map: Box::new(map),
        })
    }

    /// a_m = β_{T_m}.
    pub fn cesaro(sg: &'a Semigroup, grid: Vec<f64>, quad: QuadratureConfig) -> Result<Self> {
        let labels = grid.clone();
        Self::new(grid, move |m, x| cesaro_average(sg, x, labels[m], &quad))
    }

    pub fn constant_identity(grid: Vec<f64>) -> Result<Self> {
        Self::new(grid, |_, x| Ok(x.clone()))
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn apply(&self, m: usize, x: &Operator) -> Result<Operator> {
        (self.map)(m, x)
    }

    /// The family `m ↦ a_m(x)`.
    pub fn family(&self, x: &Operator) -> Result<Family> {
        let members = (0..self.len())
            .map(|m| self.apply(m, x))
            .collect::<Result<Vec<_>>>()?;
        Family::new(self.grid.clone(), members)
    }
}

/// An element of the dense subset close to `x`.
#[derive(Debug, Clone)]
pub struct Approximant {
    pub x_n: Operator,
    /// Scheme-specific parameter, e.g. `k` for `x_k = β_{1/k}(x)`.
    pub parameter: f64,
    pub gap: f64,
    pub target: f64,
}

type GeneratorFn<'a> = dyn Fn(&Operator, usize, f64) -> Result<(Operator, f64)> + Send + Sync + 'a;

/// Generates `x_n` with `‖x_n − x‖_p < (ε/2^{n+1})^{2/α}`.
pub struct ApproximationScheme<'a> {
    pub p: f64,
    pub alpha: f64,
    generator: Box<GeneratorFn<'a>>,
}

impl<'a> ApproximationScheme<'a> {
    pub fn new(
        p: f64,
        alpha: f64,
        generator: impl Fn(&Operator, usize, f64) -> Result<(Operator, f64)> + Send + Sync + 'a,
    ) -> Result<Self> {
        if !(p >= 1.0 && alpha > 0.0) {
            return Err(Error::InvalidParameter(
                "scheme needs p >= 1 and α > 0".into(),
            ));
        }
        Ok(Self {
            p,
            alpha,
            generator: Box::new(generator),
        })
    }

    pub fn gap_target(&self, n: usize, epsilon: f64) -> f64 {
        (epsilon / 2f64.powi(n as i32 + 1)).powf(2.0 / self.alpha)
    }

    /// Generates and checks the gap bound.
    pub fn generate(&self, x: &Operator, n: usize, epsilon: f64) -> Result<Approximant> {
        let target = self.gap_target(n, epsilon);
        let (x_n, parameter) = (self.generator)(x, n, epsilon)?;
        let gap = (&x_n - x).pnorm(self.p)?;
        if !(gap < target) {
            return Err(Error::StepFailed {
                step: "approximation",
                index: n,
                detail: format!("gap {gap:e} not below {target:e}"),
            });
        }
        Ok(Approximant {
            x_n,
            parameter,
            gap,
            target,
        })
    }
}

/// Largest `k` tried by [`scheme_from_semigroup`].
pub const MAX_DENSE_K: u64 = 1 << 48;

/// Scheme `x_n = k ∫_0^{1/k} α_s(x) ds` with `k` doubled until the continuity
/// modulus on `(0, 1/k]` is below the gap target, then confirmed by a direct
/// evaluation of `‖x_n − x‖_p`.
pub fn scheme_from_semigroup<'a>(
    sg: &'a Semigroup,
    p: f64,
    alpha: f64,
    quad: QuadratureConfig,
) -> Result<ApproximationScheme<'a>> {
    ApproximationScheme::new(p, alpha, move |x, n, eps| {
        let target = (eps / 2f64.powi(n as i32 + 1)).powf(2.0 / alpha);
        let mut k: u64 = 1;
        let mut achieved = f64::INFINITY;
        while k <= MAX_DENSE_K {
            let h = 1.0 / k as f64;
            let s_grid: Vec<f64> = (1..=8).map(|j| h * j as f64 / 8.0).collect();
            let modulus = continuity_modulus(sg, x, p, &s_grid)?
                .into_iter()
                .map(|(_, v)| v)
                .fold(0.0, f64::max);
            if modulus < target {
                let mut x_n = dense_approximant(sg, x, k, &quad)?;
                // α_t preserves adjoints; drop the round-off asymmetry.
                if x.is_self_adjoint(1e-12) {
                    x_n = x_n.hermitian_part();
                }
                achieved = (&x_n - x).pnorm(p)?;
                if achieved < target {
                    return Ok((x_n, k as f64));
                }
            }
            k *= 2;
        }
        Err(Error::StepFailed {
            step: "approximation",
            index: n,
            detail: format!(
                "continuity modulus too flat: best gap {achieved:e} above {target:e} at k = {MAX_DENSE_K}"
            ),
        })
    })
}

type OracleFn<'a> = dyn Fn(&Operator, f64) -> Result<ProjectionCertificate> + Send + Sync + 'a;

/// Supplies `p` with `τ(p⊥) < C (‖y‖_p / ε)^α` and `sup_m ‖p a_m(y) p‖ < ε`.
pub struct ConditionOneOracle<'a> {
    pub c: f64,
    pub alpha: f64,
    /// Exponent of the norm in the co-trace bound.
    pub p: f64,
    call: Box<OracleFn<'a>>,
}

impl<'a> ConditionOneOracle<'a> {
    pub fn new(
        c: f64,
        alpha: f64,
        p: f64,
        call: impl Fn(&Operator, f64) -> Result<ProjectionCertificate> + Send + Sync + 'a,
    ) -> Result<Self> {
        if !(c > 0.0 && alpha > 0.0 && p >= 1.0) {
            return Err(Error::InvalidParameter(
                "oracle needs C > 0, α > 0, p >= 1".into(),
            ));
        }
        Ok(Self {
            c,
            alpha,
            p,
            call: Box::new(call),
        })
    }

    pub fn cotrace_bound(&self, y: &Operator, epsilon: f64) -> Result<f64> {
        Ok(self.c * (y.pnorm(self.p)? / epsilon).powf(self.alpha))
    }

    pub fn call(&self, y: &Operator, epsilon: f64) -> Result<ProjectionCertificate> {
        (self.call)(y, epsilon)
    }
}

/// Oracle backed by [`maximal_projection`] for Cesàro averages on `grid`.
pub fn maximal_oracle<'a>(
    sg: &'a Semigroup,
    grid: Vec<f64>,
    c: f64,
    p: f64,
    quad: QuadratureConfig,
    tol: Tolerances,
) -> Result<ConditionOneOracle<'a>> {
    ConditionOneOracle::new(c, p, p, move |y, epsilon| {
        let params = MaximalParams { c, p, epsilon };
        Ok(maximal_projection(sg, y, &params, &grid, &quad, &tol)?.certificate)
    })
}

/// `(family, co-trace budget, bound target) ↦ q` for members of the dense subset.
pub type DenseCertifier<'a> =
    dyn Fn(&Family, f64, f64) -> Result<ProjectionCertificate> + Send + Sync + 'a;

/// Dense-set certifier built on [`bau_cauchy_certify`].
pub fn cauchy_certifier(
    tol: Tolerances,
) -> impl Fn(&Family, f64, f64) -> Result<ProjectionCertificate> + Send + Sync {
    move |family, budget, target| Ok(bau_cauchy_certify(family, budget, target, &tol)?.certificate)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bp2Params {
    pub epsilon: f64,
    /// Approximants `x_1, …, x_{n_max}` are generated.
    pub n_max: usize,
}

impl Bp2Params {
    pub fn new(epsilon: f64) -> Self {
        Self { epsilon, n_max: 6 }
    }
}

/// One recorded bound. `value < target` unless `inclusive`, then `value <= target`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: &'static str,
    pub quantity: &'static str,
    pub index: Option<usize>,
    pub value: f64,
    pub target: f64,
    pub inclusive: bool,
}

impl StepRecord {
    fn holds(&self) -> bool {
        if self.inclusive {
            self.value <= self.target
        } else {
            self.value < self.target
        }
    }
}

#[derive(Debug, Clone)]
pub struct Bp2Certificate {
    pub epsilon: f64,
    pub c: f64,
    pub alpha: f64,
    /// Number of maps on the index grid.
    pub horizon: usize,
    pub n0: usize,
    /// First grid index of the tail where the final bound holds.
    pub big_n0: usize,
    pub steps: Vec<StepRecord>,
    /// Σ τ(p_n⊥) + τ(q⊥).
    pub budget_spent: f64,
    pub approximants: Vec<Approximant>,
    pub p_n: Vec<Projection>,
    pub p: Projection,
    pub q: Projection,
    pub certificate: ProjectionCertificate,
    pub note: &'static str,
}

pub const GRID_ONLY_NOTE: &str =
    "bounds over all indices are verified on the finite index grid only";

impl Bp2Certificate {
    pub fn f(&self) -> &Projection {
        &self.certificate.projection
    }

    pub fn to_json(&self) -> Value {
        json!({
            "epsilon": self.epsilon,
            "c": self.c,
            "alpha": self.alpha,
            "horizon": self.horizon,
            "n0": self.n0,
            "big_n0": self.big_n0,
            "budget_spent": self.budget_spent,
            "steps": self.steps,
            "approximant_parameters": self.approximants.iter().map(|a| a.parameter).collect::<Vec<_>>(),
            "certificate": self.certificate.to_json(),
            "note": self.note,
        })
    }
}

fn sup_compressed_images(
    maps: &IndexedMaps,
    y: &Operator,
    e: &Projection,
    from: usize,
) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for m in from..maps.len() {
        worst = worst.max(maps.apply(m, y)?.compress(e).norm_inf());
    }
    Ok(worst)
}

fn sup_compressed_pairs(
    maps: &IndexedMaps,
    y: &Operator,
    e: &Projection,
    from: usize,
) -> Result<f64> {
    let family = maps.family(y)?;
    Ok(family.sup_compressed_pairs(e, from))
}

fn check(step: StepRecord) -> Result<StepRecord> {
    if step.holds() {
        Ok(step)
    } else {
        Err(Error::StepFailed {
            step: step.step,
            index: step.index.unwrap_or(0),
            detail: format!(
                "{} = {:e} exceeds {:e}",
                step.quantity, step.value, step.target
            ),
        })
    }
}

/// All recomputable quantities, in the order they are stored in `steps`.
#[allow(clippy::too_many_arguments)]
fn step_values(
    maps: &IndexedMaps,
    x: &Operator,
    p_exp: f64,
    approximants: &[Approximant],
    p_n: &[Projection],
    p: &Projection,
    q: &Projection,
    f: &Projection,
    n0: usize,
    big_n0: usize,
) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (a, pn) in approximants.iter().zip(p_n) {
        let y = &a.x_n - x;
        out.push(y.pnorm(p_exp)?);
        out.push(pn.cotrace());
        out.push(sup_compressed_images(maps, &y, pn, 0)?);
    }
    out.push(p.cotrace());
    let x0 = &approximants[n0 - 1].x_n;
    out.push(sup_compressed_images(maps, &(x0 - x), p, 0)?);
    out.push(q.cotrace());
    out.push(sup_compressed_pairs(maps, x0, q, big_n0)?);
    out.push(f.cotrace());
    let t1 = sup_compressed_images(maps, &(x - x0), f, big_n0)?;
    let t2 = sup_compressed_pairs(maps, x0, f, big_n0)?;
    out.push(t1);
    out.push(t2);
    out.push(sup_compressed_pairs(maps, x, f, big_n0)?);
    Ok(out)
}

/// Runs the five steps of the proof:
/// 1. approximants `x_n` and oracle projections `p_n` for `x_n − x` at level `ε/2^{n+1}`;
/// 2. `p = ∧ p_n` with `τ(p⊥) < Cε/2`;
/// 3. `n_0` with `sup_m ‖p a_m(x_{n_0} − x) p‖ < ε/3`;
/// 4. `q` from the dense certifier for `x_{n_0}` with pair bound `< ε/3` past `N_0`;
/// 5. `f = p ∧ q` with `τ(f⊥) < ε(C+1)/2` and `‖f(a_m(x) − a_n(x))f‖ <= ε` for `m, n >= N_0`.
pub fn bp2_assemble(
    maps: &IndexedMaps,
    x: &Operator,
    params: &Bp2Params,
    scheme: &ApproximationScheme,
    oracle: &ConditionOneOracle,
    dense: &DenseCertifier,
    tol: &Tolerances,
) -> Result<Bp2Certificate> {
    let eps = params.epsilon;
    if !(eps > 0.0) || params.n_max == 0 {
        return Err(Error::InvalidParameter(
            "need ε > 0 and at least one approximant".into(),
        ));
    }
    let alg = x.algebra();
    let c = oracle.c;
    let mut steps = Vec::new();

    // Step 1.
    let mut approximants = Vec::with_capacity(params.n_max);
    let mut p_n = Vec::with_capacity(params.n_max);
    for n in 1..=params.n_max {
        let approx = scheme.generate(x, n, eps)?;
        let level = eps / 2f64.powi(n as i32 + 1);
        let y = &approx.x_n - x;
        steps.push(check(StepRecord {
            step: "approximation",
            quantity: "‖x_n − x‖_X",
            index: Some(n),
            value: approx.gap,
            target: approx.target,
            inclusive: false,
        })?);
        let cert = oracle.call(&y, level)?;
        let cotrace = StepRecord {
            step: "oracle",
            quantity: "τ(p_n⊥)",
            index: Some(n),
            value: cert.projection.cotrace(),
            target: oracle.cotrace_bound(&y, level)?,
            inclusive: false,
        };
        // p_n = 1 is admissible even when ‖y‖ = 0 makes the bound vanish.
        steps.push(if cotrace.value == 0.0 {
            cotrace
        } else {
            check(cotrace)?
        });
        steps.push(check(StepRecord {
            step: "oracle",
            quantity: "sup_m ‖p_n a_m(x_n − x) p_n‖",
            index: Some(n),
            value: sup_compressed_images(maps, &y, &cert.projection, 0)?,
            target: level,
            inclusive: false,
        })?);
        approximants.push(approx);
        p_n.push(cert.projection);
    }

    // Step 2.
    let p = meet_all(alg, &p_n, tol);
    steps.push(check(StepRecord {
        step: "meet",
        quantity: "τ(p⊥)",
        index: None,
        value: p.cotrace(),
        target: c * eps / 2.0,
        inclusive: false,
    })?);

    // Step 3.
    let mut anchor = None;
    for (i, a) in approximants.iter().enumerate() {
        let v = sup_compressed_images(maps, &(&a.x_n - x), &p, 0)?;
        if v < eps / 3.0 {
            anchor = Some((i + 1, v));
            break;
        }
    }
    let Some((n0, anchor_bound)) = anchor else {
        return Err(Error::StepFailed {
            step: "anchor",
            index: params.n_max,
            detail: format!("no approximant reaches ε/3 = {:e}", eps / 3.0),
        });
    };
    steps.push(StepRecord {
        step: "anchor",
        quantity: "sup_m ‖p a_m(x_{n0} − x) p‖",
        index: Some(n0),
        value: anchor_bound,
        target: eps / 3.0,
        inclusive: false,
    });

    // Step 4.
    let x0 = approximants[n0 - 1].x_n.clone();
    let dense_family = maps.family(&x0)?;
    let q_cert = dense(&dense_family, eps / 2.0, eps / 3.0)?;
    let q = q_cert.projection.clone();
    steps.push(check(StepRecord {
        step: "dense",
        quantity: "τ(q⊥)",
        index: None,
        value: q.cotrace(),
        target: eps / 2.0,
        inclusive: false,
    })?);
    let n = maps.len();
    let mut big_n0 = None;
    for j in 0..n - 1 {
        if dense_family.sup_compressed_pairs(&q, j) < eps / 3.0 {
            big_n0 = Some(j);
            break;
        }
    }
    let Some(big_n0) = big_n0 else {
        return Err(Error::StepFailed {
            step: "dense",
            index: n - 2,
            detail: format!(
                "pair bound {:e} on the last pair is not below ε/3",
                dense_family.sup_compressed_pairs(&q, n - 2)
            ),
        });
    };
    steps.push(StepRecord {
        step: "dense",
        quantity: "sup_{m,n >= N0} ‖q(a_m(x_{n0}) − a_n(x_{n0}))q‖",
        index: Some(big_n0),
        value: dense_family.sup_compressed_pairs(&q, big_n0),
        target: eps / 3.0,
        inclusive: false,
    });

    // Step 5.
    let f = proj_meet(&p, &q, tol);
    steps.push(check(StepRecord {
        step: "assemble",
        quantity: "τ(f⊥)",
        index: None,
        value: f.cotrace(),
        target: eps * (c + 1.0) / 2.0,
        inclusive: false,
    })?);
    let t1 = sup_compressed_images(maps, &(x - &x0), &f, big_n0)?;
    let t2 = dense_family.sup_compressed_pairs(&f, big_n0);
    for (quantity, value) in [
        ("sup_m ‖f a_m(x − x_{n0}) f‖", t1),
        ("sup_{m,n >= N0} ‖f(a_m(x_{n0}) − a_n(x_{n0}))f‖", t2),
    ] {
        steps.push(check(StepRecord {
            step: "assemble",
            quantity,
            index: Some(big_n0),
            value,
            target: eps / 3.0,
            inclusive: false,
        })?);
    }
    let family = maps.family(x)?;
    let mut certificate =
        crate::bau::pairwise_certificate(f, eps, &family, big_n0, "a_m(x) − a_n(x)");
    steps.push(check(StepRecord {
        step: "assemble",
        quantity: "sup_{m,n >= N0} ‖f(a_m(x) − a_n(x))f‖",
        index: Some(big_n0),
        value: certificate.achieved_bound,
        target: eps,
        inclusive: true,
    })?);
    certificate.flags.push(GRID_ONLY_NOTE.into());

    let budget_spent = p_n.iter().map(Projection::cotrace).sum::<f64>() + q.cotrace();
    Ok(Bp2Certificate {
        epsilon: eps,
        c,
        alpha: oracle.alpha,
        horizon: n,
        n0,
        big_n0,
        steps,
        budget_spent,
        approximants,
        p_n,
        p,
        q,
        certificate,
        note: GRID_ONLY_NOTE,
    })
}

/// Recomputes every stored bound from the stored projections and approximants;
/// returns the largest absolute discrepancy.
pub fn replay(cert: &Bp2Certificate, maps: &IndexedMaps, x: &Operator, p_exp: f64) -> Result<f64> {
    let values = step_values(
        maps,
        x,
        p_exp,
        &cert.approximants,
        &cert.p_n,
        &cert.p,
        &cert.q,
        cert.f(),
        cert.n0,
        cert.big_n0,
    )?;
    if values.len() != cert.steps.len() {
        return Err(Error::InvalidParameter(format!(
            "certificate has {} steps, replay produced {}",
            cert.steps.len(),
            values.len()
        )));
    }
    Ok(values
        .iter()
        .zip(&cert.steps)
        .map(|(v, s)| (v - s.value).abs())
        .fold(0.0, f64::max))
}
