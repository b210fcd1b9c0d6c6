//! Projection certificates for bilateral almost uniform convergence.
//!
//! A [`ProjectionCertificate`] is a concrete projection `e` together with its
//! co-trace `τ(e⊥)` and the uniform bound `sup ‖e y e‖_∞` it achieves on a
//! finite family. Certificates are self-verifying: the bound can be recomputed
//! from `e` and the family with [`ProjectionCertificate::recompute_bound`].

use std::collections::HashMap;
use std::sync::Arc;

use serde::Serialize;
use serde_json::{json, Value};

use crate::algebra::{
    meet_all, proj_meet, Operator, Projection, SpectralResolution, TracialAlgebra,
};
use crate::averaging::{cesaro_average, tail_start, weighted_integral};
use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::quadrature::QuadratureConfig;
use crate::semigroup::Semigroup;

/// Operators indexed by a strictly decreasing grid of parameters `T_0 > T_1 > …`.
#[derive(Debug, Clone)]
pub struct Family {
    grid: Vec<f64>,
    members: Vec<Operator>,
}

impl Family {
    pub fn new(grid: Vec<f64>, members: Vec<Operator>) -> Result<Self> {
        if grid.is_empty() || grid.len() != members.len() {
            return Err(Error::InvalidParameter(format!(
                "family needs matching nonempty grid and members ({} vs {})",
                grid.len(),
                members.len()
            )));
        }
        if grid.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidParameter(
                "family grid must be strictly decreasing".into(),
            ));
        }
        if members.iter().any(|m| !m.same_algebra(&members[0])) {
            return Err(Error::AlgebraMismatch);
        }
        Ok(Self { grid, members })
    }

    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> Result<Operator>) -> Result<Self> {
        let members = grid.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
        Self::new(grid, members)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn members(&self) -> &[Operator] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn algebra(&self) -> &Arc<TracialAlgebra> {
        self.members[0].algebra()
    }

    /// max_{j >= start} ‖e y_j e‖_∞.
    pub fn sup_compressed(&self, e: &Projection, start: usize) -> f64 {
        self.members[start.min(self.len())..]
            .iter()
            .map(|y| y.compress(e).norm_inf())
            .fold(0.0, f64::max)
    }

    /// max_{start <= i < j} ‖e (y_i − y_j) e‖_∞.
    pub fn sup_compressed_pairs(&self, e: &Projection, start: usize) -> f64 {
        let compressed: Vec<Operator> = self.members[start.min(self.len())..]
            .iter()
            .map(|y| y.compress(e))
            .collect();
        let mut worst: f64 = 0.0;
        for i in 0..compressed.len() {
            for j in i + 1..compressed.len() {
                worst = worst.max(compressed[i].dist_inf(&compressed[j]));
            }
        }
        worst
    }
}

/// Which quantity a certificate bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    /// sup_j ‖e y_j e‖.
    Members,
    /// sup_{i<j} ‖e (y_i − y_j) e‖.
    PairwiseDifferences,
    /// sup_j ‖y_j e‖.
    RightMultiplication,
}

#[derive(Debug, Clone)]
pub struct ProjectionCertificate {
    pub projection: Projection,
    pub cotrace: f64,
    pub epsilon: f64,
    pub achieved_bound: f64,
    pub kind: FamilyKind,
    pub description: String,
    pub grid: Vec<f64>,
    /// First grid index the bound ranges over.
    pub tail_start: usize,
    pub flags: Vec<String>,
}

impl ProjectionCertificate {
    fn build(
        projection: Projection,
        epsilon: f64,
        kind: FamilyKind,
        description: impl Into<String>,
        family: &Family,
        tail_start: usize,
    ) -> Self {
        let mut cert = Self {
            cotrace: projection.cotrace(),
            projection,
            epsilon,
            achieved_bound: 0.0,
            kind,
            description: description.into(),
            grid: family.grid().to_vec(),
            tail_start,
            flags: Vec::new(),
        };
        cert.achieved_bound = cert.recompute_bound(family);
        cert
    }

    /// Recomputes the uniform bound from the stored projection and `family`.
    pub fn recompute_bound(&self, family: &Family) -> f64 {
        let e = &self.projection;
        match self.kind {
            FamilyKind::Members => family.sup_compressed(e, self.tail_start),
            FamilyKind::PairwiseDifferences => family.sup_compressed_pairs(e, self.tail_start),
            FamilyKind::RightMultiplication => family.members()[self.tail_start..]
                .iter()
                .map(|y| (y * e.operator()).norm_inf())
                .fold(0.0, f64::max),
        }
    }

    /// Cotrace matches `τ(1 − e)` to 1e-12 and the bound is reproduced to `tol`.
    pub fn verify(&self, family: &Family, tol: f64) -> bool {
        let alg = self.projection.algebra();
        let direct = alg
            .trace(&(&Operator::identity(alg) - self.projection.operator()))
            .map(|z| z.re)
            .unwrap_or(f64::NAN);
        (direct - self.cotrace).abs() <= 1e-12
            && (self.recompute_bound(family) - self.achieved_bound).abs() <= tol
    }

    pub fn to_json(&self) -> Value {
        json!({
            "cotrace": self.cotrace,
            "epsilon": self.epsilon,
            "achieved_bound": self.achieved_bound,
            "grid": self.grid,
            "projection": self.projection.operator().to_json(),
            "flags": self.flags,
            "kind": self.kind,
            "description": self.description,
            "tail_start": self.tail_start,
        })
    }
}

/// Certificate for `sup_{start <= i < j} ‖e (y_i − y_j) e‖` on `family`.
pub fn pairwise_certificate(
    e: Projection,
    epsilon: f64,
    family: &Family,
    tail_start: usize,
    description: &str,
) -> ProjectionCertificate {
    ProjectionCertificate::build(
        e,
        epsilon,
        FamilyKind::PairwiseDifferences,
        description,
        family,
        tail_start,
    )
}

/// Outcome of [`measure_nbhd_witness`].
#[derive(Debug, Clone)]
pub enum NbhdOutcome {
    Witness(ProjectionCertificate),
    /// No projection with `‖xe‖ <= δ` has co-trace `<= ε`; this is the smallest achievable.
    Failure {
        min_cotrace: f64,
    },
}

/// Is `x` in the measure-topology neighbourhood `V(ε, δ)`? Builds `e` as the
/// spectral projection of `x* x` at level `δ²`.
pub fn measure_nbhd_witness(
    x: &Operator,
    epsilon: f64,
    delta: f64,
    tol: &Tolerances,
) -> Result<NbhdOutcome> {
    if !(epsilon > 0.0 && delta > 0.0) {
        return Err(Error::InvalidParameter("ε and δ must be > 0".into()));
    }
    let xx = &x.adjoint() * x;
    let res = xx.spectral_resolution(tol.self_adjoint)?;
    let e = res.spectral_projection(delta * delta, tol.spectral_tie);
    let cotrace = e.cotrace();
    if cotrace > epsilon {
        return Ok(NbhdOutcome::Failure {
            min_cotrace: cotrace,
        });
    }
    let family = Family::new(vec![1.0], vec![x.clone()])?;
    Ok(NbhdOutcome::Witness(ProjectionCertificate::build(
        e,
        epsilon,
        FamilyKind::RightMultiplication,
        "measure neighbourhood witness ‖xe‖ <= δ",
        &family,
        0,
    )))
}

/// One spectral cut of the construction: `p_k` is the spectral projection of
/// `h^p(a_k)` at level `ε / 2^{k+1}`.
#[derive(Debug, Clone, Serialize)]
pub struct LevelRecord {
    pub k: usize,
    pub a: f64,
    /// τ(h^p(a_k)).
    pub moment: f64,
    /// ε² / 2^{2k}.
    pub moment_target: f64,
    /// ε / 2^{k+1}.
    pub cut: f64,
    pub cotrace: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayRow {
    pub a: f64,
    /// ‖e (β_a(β_b(x)) − β_b(x)) e‖_∞.
    pub compressed_difference: f64,
    pub compressed_h: f64,
    pub compressed_g: f64,
}

#[derive(Debug, Clone)]
pub struct LemmaBbParams {
    pub b: f64,
    pub p: f64,
    pub epsilon: f64,
    /// Number of cuts `k = 1..=levels`.
    pub levels: usize,
    /// Candidate values for `a_k`, strictly decreasing.
    pub a_schedule: Vec<f64>,
    /// Values of `a` for the decay table, strictly decreasing.
    pub decay_grid: Vec<f64>,
}

impl LemmaBbParams {
    pub fn new(b: f64, p: f64, epsilon: f64) -> Self {
        Self {
            b,
            p,
            epsilon,
            levels: 8,
            a_schedule: (0..48).map(|j| 0.5f64.powi(j)).collect(),
            decay_grid: (0..=30).map(|j| 0.5f64.powi(j)).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LemmaBbCertificate {
    pub certificate: ProjectionCertificate,
    pub h_levels: Vec<LevelRecord>,
    pub g_levels: Vec<LevelRecord>,
    pub p_cotrace: f64,
    pub q_cotrace: f64,
    /// Σ_k τ(p_k⊥) + Σ_k τ(q_k⊥).
    pub level_cotrace_sum: f64,
    pub decay: Vec<DecayRow>,
    /// The differences `β_a(β_b(x)) − β_b(x)` over the decay grid.
    pub differences: Family,
}

fn select_levels(
    integral: impl Fn(f64) -> Result<Operator>,
    params: &LemmaBbParams,
    tol: &Tolerances,
) -> Result<(Vec<LevelRecord>, Vec<Projection>)> {
    let mut records = Vec::with_capacity(params.levels);
    let mut cuts = Vec::with_capacity(params.levels);
    let mut idx = 0;
    let mut smallest = f64::INFINITY;
    for k in 1..=params.levels {
        let moment_target = params.epsilon.powi(2) / 4f64.powi(k as i32);
        let cut = params.epsilon / 2f64.powi(k as i32 + 1);
        let mut accepted = None;
        while idx < params.a_schedule.len() {
            let a = params.a_schedule[idx];
            let h = integral(a)?;
            let hp = h.positive_power(params.p, tol.self_adjoint)?;
            let moment = hp.trace().re;
            smallest = smallest.min(moment);
            if moment < moment_target {
                let res = hp.spectral_resolution(tol.self_adjoint)?;
                let pk = res.spectral_projection(cut, tol.spectral_tie);
                let cotrace = pk.cotrace();
                if cotrace <= cut {
                    accepted = Some((a, moment, pk, cotrace));
                    break;
                }
            }
            idx += 1;
        }
        let Some((a, moment, pk, cotrace)) = accepted else {
            return Err(Error::ScheduleExhausted {
                smallest,
                target: moment_target,
            });
        };
        records.push(LevelRecord {
            k,
            a,
            moment,
            moment_target,
            cut,
            cotrace,
        });
        cuts.push(pk);
    }
    Ok((records, cuts))
}

/// Projection construction behind `lim_{a→0} β_a(β_b(x)) = β_b(x)` for positive `x`.
///
/// With `h(a) = (1/b)∫_0^a α_s(x)ds` and `g(a) = (1/b)∫_b^{b+a} α_s(x)ds`, each
/// level `k` picks the first `a_k` in the schedule with `τ(h^p(a_k)) < ε²/2^{2k}`
/// whose cut `p_k` at `ε/2^{k+1}` also has `τ(p_k⊥) <= ε/2^{k+1}`; likewise
/// `q_k` for `g`. Then `e = (∧ p_k) ∧ (∧ q_k)`.
pub fn lemma_bb_certificate(
    sg: &Semigroup,
    x: &Operator,
    params: &LemmaBbParams,
    quad: &QuadratureConfig,
    tol: &Tolerances,
) -> Result<LemmaBbCertificate> {
    let LemmaBbParams { b, p, epsilon, .. } = *params;
    if !(b > 0.0 && epsilon > 0.0 && p >= 1.0) {
        return Err(Error::InvalidParameter("need b > 0, ε > 0, p >= 1".into()));
    }
    if !x.is_positive(tol.positivity) {
        return Err(Error::NotPositive {
            min_eigenvalue: x.min_eigenvalue(),
        });
    }
    for grid in [&params.a_schedule, &params.decay_grid] {
        if grid.is_empty() || grid.windows(2).any(|w| w[1] >= w[0]) || grid[grid.len() - 1] <= 0.0 {
            return Err(Error::InvalidParameter(
                "a schedules must be positive and strictly decreasing".into(),
            ));
        }
    }
    let alg = x.algebra();
    let h = |a: f64| Ok(weighted_integral(sg, None, x, 0.0, a, quad)?.scale_real(1.0 / b));
    let g = |a: f64| Ok(weighted_integral(sg, None, x, b, b + a, quad)?.scale_real(1.0 / b));

    let (h_levels, p_cuts) = select_levels(h, params, tol)?;
    let (g_levels, q_cuts) = select_levels(g, params, tol)?;
    let p = meet_all(alg, &p_cuts, tol);
    let q = meet_all(alg, &q_cuts, tol);
    let e = proj_meet(&p, &q, tol);
    let level_cotrace_sum: f64 = h_levels.iter().chain(&g_levels).map(|l| l.cotrace).sum();

    let beta_b = cesaro_average(sg, x, b, quad)?;
    let mut decay = Vec::with_capacity(params.decay_grid.len());
    let mut diffs = Vec::with_capacity(params.decay_grid.len());
    for &a in &params.decay_grid {
        let diff = &cesaro_average(sg, &beta_b, a, quad)? - &beta_b;
        decay.push(DecayRow {
            a,
            compressed_difference: diff.compress(&e).norm_inf(),
            compressed_h: h(a)?.compress(&e).norm_inf(),
            compressed_g: g(a)?.compress(&e).norm_inf(),
        });
        diffs.push(diff);
    }
    let differences = Family::new(params.decay_grid.clone(), diffs)?;
    let mut certificate = ProjectionCertificate::build(
        e,
        epsilon,
        FamilyKind::Members,
        format!("β_a(β_b(x)) − β_b(x), b = {b}, p = {}", params.p),
        &differences,
        0,
    );
    if certificate.cotrace >= epsilon {
        certificate.flags.push("cotrace budget exceeded".into());
    }
    if certificate.cotrace > level_cotrace_sum + 1e-12 {
        certificate
            .flags
            .push("meet cotrace above level sum".into());
    }
    Ok(LemmaBbCertificate {
        certificate,
        p_cotrace: p.cotrace(),
        q_cotrace: q.cotrace(),
        h_levels,
        g_levels,
        level_cotrace_sum,
        decay,
        differences,
    })
}

/// Constants of the maximal inequality `τ(e⊥) <= C (‖x‖_p / ε)^p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaximalParams {
    pub c: f64,
    pub p: f64,
    pub epsilon: f64,
}

impl MaximalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.epsilon > 0.0 && self.p >= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "maximal parameters need C > 0, ε > 0, p >= 1 (got {self:?})"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MaximalRow {
    pub t: f64,
    /// τ(e_T⊥) for the cut of |β_T(x)| at ε.
    pub cotrace: f64,
    /// ε^{−p} ‖β_T(x)‖_p^p.
    pub chebyshev_bound: f64,
    /// ‖e β_T(x) e‖_∞ for the final meet `e`.
    pub compressed: f64,
}

pub const BOUND_EXCEEDED: &str = "bound exceeded for configured C";

#[derive(Debug, Clone)]
pub struct MaximalCertificate {
    pub certificate: ProjectionCertificate,
    pub rows: Vec<MaximalRow>,
    pub norm_p: f64,
    /// C (‖x‖_p / ε)^p with the configured C.
    pub bound: f64,
    /// Smallest C for which this run satisfies the bound.
    pub empirical_c: f64,
    pub averages: Family,
}

/// One projection controlling `‖e β_T(x) e‖ <= ε` over the whole T grid.
pub fn maximal_projection(
    sg: &Semigroup,
    x: &Operator,
    params: &MaximalParams,
    t_grid: &[f64],
    quad: &QuadratureConfig,
    tol: &Tolerances,
) -> Result<MaximalCertificate> {
    params.validate()?;
    if !x.is_self_adjoint(tol.self_adjoint) && x.norm_inf() > 0.0 {
        return Err(Error::NotSelfAdjoint {
            residual: x.hermitian_residual() / x.norm_inf(),
        });
    }
    if t_grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) || t_grid.is_empty() {
        return Err(Error::InvalidParameter(
            "T grid must be a nonempty subset of (0, ∞)".into(),
        ));
    }
    let mut grid = t_grid.to_vec();
    grid.sort_by(|a, b| b.total_cmp(a));
    grid.dedup();
    let averages = Family::from_fn(grid, |t| {
        Ok(cesaro_average(sg, x, t, quad)?.hermitian_part())
    })?;
    maximal_from_averages(x, averages, params, tol)
}

/// As [`maximal_projection`], with the self-adjoint averages `β_T(x)` already computed.
pub fn maximal_from_averages(
    x: &Operator,
    averages: Family,
    params: &MaximalParams,
    tol: &Tolerances,
) -> Result<MaximalCertificate> {
    params.validate()?;
    let grid = averages.grid().to_vec();
    let alg = x.algebra();
    let eps = params.epsilon;
    let mut cuts = Vec::with_capacity(grid.len());
    let mut partial = Vec::with_capacity(grid.len());
    for (t, avg) in grid.iter().zip(averages.members()) {
        let res = avg.abs().spectral_resolution(tol.self_adjoint)?;
        let cut = res.spectral_projection(eps, tol.spectral_tie);
        partial.push((
            *t,
            cut.cotrace(),
            avg.pnorm(params.p)?.powf(params.p) / eps.powf(params.p),
        ));
        cuts.push(cut);
    }
    let e = meet_all(alg, &cuts, tol);
    let rows = partial
        .into_iter()
        .zip(averages.members())
        .map(|((t, cotrace, chebyshev_bound), avg)| MaximalRow {
            t,
            cotrace,
            chebyshev_bound,
            compressed: avg.compress(&e).norm_inf(),
        })
        .collect();

    let norm_p = x.pnorm(params.p)?;
    let shape = (norm_p / eps).powf(params.p);
    let mut certificate = ProjectionCertificate::build(
        e,
        eps,
        FamilyKind::Members,
        format!("β_T(x) over {} values of T", grid.len()),
        &averages,
        0,
    );
    let bound = params.c * shape;
    let empirical_c = if certificate.cotrace == 0.0 {
        0.0
    } else {
        certificate.cotrace / shape
    };
    if certificate.cotrace > bound {
        certificate.flags.push(BOUND_EXCEEDED.into());
    }
    Ok(MaximalCertificate {
        certificate,
        rows,
        norm_p,
        bound,
        empirical_c,
        averages,
    })
}

/// A level of the Cauchy construction: every pair in the tail from
/// `tail_start` is cut at `level`, at co-trace cost `cotrace`.
#[derive(Debug, Clone, Serialize)]
pub struct CauchyLevel {
    pub level: f64,
    pub budget: f64,
    pub tail_start: usize,
    pub cotrace: f64,
}

#[derive(Debug, Clone)]
pub struct CauchyCertificate {
    pub certificate: ProjectionCertificate,
    pub levels: Vec<CauchyLevel>,
    /// `(T_j, d_j)` with `d_j = max_{j <= i < l} ‖e (y_i − y_l) e‖_∞`.
    pub decay: Vec<(f64, f64)>,
    pub certified: bool,
}

/// Builds `e` for a family on a decreasing grid and reports how the
/// compressed pairwise differences decay along the tail.
///
/// Level `k` cuts `|y_i − y_l|` at `η_k = η_0 / 2^k` for all pairs in the
/// shortest-prefix tail whose meet costs at most `ε / 2^{k+1}`; `e` is the meet
/// over levels. The family is certified b.a.u.-Cauchy when `τ(e⊥) <= ε`, the
/// decay is non-increasing, and its final value is below `tol`.
pub fn bau_cauchy_certify(
    family: &Family,
    epsilon: f64,
    decay_tol: f64,
    tol: &Tolerances,
) -> Result<CauchyCertificate> {
    if !(epsilon > 0.0 && decay_tol > 0.0) {
        return Err(Error::InvalidParameter(
            "ε and tolerance must be > 0".into(),
        ));
    }
    let n = family.len();
    let alg = family.algebra().clone();
    let members = family.members();

    let mut norms = HashMap::new();
    for i in 0..n {
        for j in i + 1..n {
            norms.insert((i, j), members[i].dist_inf(&members[j]));
        }
    }
    let eta0 = norms.values().copied().fold(0.0, f64::max);
    let mut resolutions: HashMap<(usize, usize), SpectralResolution> = HashMap::new();
    let mut resolution = |i: usize, j: usize| -> Result<SpectralResolution> {
        if let Some(r) = resolutions.get(&(i, j)) {
            return Ok(r.clone());
        }
        let r = (&members[i] - &members[j])
            .abs()
            .spectral_resolution(tol.self_adjoint)?;
        resolutions.insert((i, j), r.clone());
        Ok(r)
    };

    let mut levels = Vec::new();
    let mut level_projections = Vec::new();
    if n >= 2 && eta0 > 0.0 {
        let mut start = 0;
        for k in 0..64 {
            let level = eta0 / 2f64.powi(k);
            let budget = epsilon / 2f64.powi(k + 1);
            let mut meet_from = |s: usize| -> Result<Projection> {
                let mut cuts = Vec::new();
                for i in s..n {
                    for j in i + 1..n {
                        if norms[&(i, j)] > level + tol.spectral_tie {
                            cuts.push(
                                resolution(i, j)?.spectral_projection(level, tol.spectral_tie),
                            );
                        }
                    }
                }
                Ok(meet_all(&alg, &cuts, tol))
            };
            // Co-trace is non-increasing in the tail start: bisect for the first fit.
            let (mut lo, mut hi) = (start, n - 2);
            let last = meet_from(hi)?;
            if last.cotrace() > budget {
                break;
            }
            let mut best = last;
            while lo < hi {
                let mid = (lo + hi) / 2;
                let m = meet_from(mid)?;
                if m.cotrace() <= budget {
                    hi = mid;
                    best = m;
                } else {
                    lo = mid + 1;
                }
            }
            start = hi;
            levels.push(CauchyLevel {
                level,
                budget,
                tail_start: start,
                cotrace: best.cotrace(),
            });
            level_projections.push(best);
            if level <= decay_tol / 4.0 {
                break;
            }
        }
    }
    let e = meet_all(&alg, &level_projections, tol);

    let compressed: Vec<Operator> = members.iter().map(|y| y.compress(&e)).collect();
    let mut decay = Vec::with_capacity(n.saturating_sub(1));
    let mut running: f64 = 0.0;
    // Sweep from the end so each d_j is the max over the tail starting at j.
    let mut tail_max = vec![0.0; n];
    for j in (0..n).rev() {
        for l in j + 1..n {
            running = running.max(compressed[j].dist_inf(&compressed[l]));
        }
        tail_max[j] = running;
    }
    decay.extend(
        family
            .grid()
            .iter()
            .copied()
            .zip(tail_max)
            .take(n.saturating_sub(1)),
    );

    let mut certificate = ProjectionCertificate::build(
        e,
        epsilon,
        FamilyKind::PairwiseDifferences,
        "b.a.u. Cauchy family",
        family,
        0,
    );
    let monotone = decay.windows(2).all(|w| w[1].1 <= w[0].1);
    let final_ok = decay.last().is_none_or(|d| d.1 < decay_tol);
    let certified = certificate.cotrace <= epsilon && monotone && final_ok;
    if !certified {
        certificate.flags.push("not certified".into());
    }
    Ok(CauchyCertificate {
        certificate,
        levels,
        decay,
        certified,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TransferStep {
    pub epsilon: f64,
    pub threshold_index: usize,
    /// max over the tail of ‖ỹ_T − y_T‖_∞.
    pub gap: f64,
    pub base_bound: f64,
    pub new_bound: f64,
    pub allowed: f64,
}

#[derive(Debug, Clone)]
pub struct TransferCertificate {
    pub certificate: ProjectionCertificate,
    pub chain: Vec<TransferStep>,
}

/// Carries a certificate from `base` to a family `tilde` that is eventually
/// within `ε` of it in operator norm, for each `ε` in `eps_seq`.
///
/// The projection is reused unchanged; compression is a contraction, so the
/// new bound exceeds the base bound by at most `2ε`.
pub fn perturbation_transfer(
    tilde: &Family,
    base: &Family,
    base_cert: &ProjectionCertificate,
    eps_seq: &[f64],
) -> Result<TransferCertificate> {
    if tilde.grid() != base.grid() {
        return Err(Error::InvalidParameter("families must share a grid".into()));
    }
    if eps_seq.is_empty() || eps_seq.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidParameter(
            "ε sequence must be nonempty and positive".into(),
        ));
    }
    let gaps: Vec<f64> = tilde
        .members()
        .iter()
        .zip(base.members())
        .map(|(a, b)| a.dist_inf(b))
        .collect();
    let n = gaps.len();
    let mut chain = Vec::with_capacity(eps_seq.len());
    let mut last_cert = None;
    for &eps in eps_seq {
        // First index after which every gap stays below ε.
        let mut threshold = n;
        while threshold > 0 && gaps[threshold - 1] < eps {
            threshold -= 1;
        }
        if threshold == n {
            let (idx, gap) = gaps.iter().enumerate().skip(base_cert.tail_start).fold(
                (n - 1, 0.0),
                |acc, (i, &g)| if g >= acc.1 { (i, g) } else { acc },
            );
            return Err(Error::PremiseViolated {
                t: tilde.grid()[idx],
                gap,
                epsilon: eps,
            });
        }
        let threshold = threshold.max(base_cert.tail_start);
        let gap = gaps[threshold..].iter().copied().fold(0.0, f64::max);
        let mut base_tail = base_cert.clone();
        base_tail.tail_start = threshold;
        let base_bound = base_tail.recompute_bound(base);
        let new_bound = base_tail.recompute_bound(tilde);
        let allowed = base_bound + 2.0 * gap;
        if new_bound > allowed + 1e-12 {
            return Err(Error::StepFailed {
                step: "transfer",
                index: threshold,
                detail: format!("bound {new_bound} exceeds {allowed}"),
            });
        }
        chain.push(TransferStep {
            epsilon: eps,
            threshold_index: threshold,
            gap,
            base_bound,
            new_bound,
            allowed,
        });
        let mut cert = base_tail;
        cert.achieved_bound = new_bound;
        cert.description = format!("transferred from: {}", base_cert.description);
        cert.flags.retain(|f| f != "not certified");
        cert.flags.push(format!("transfer ε = {eps}"));
        last_cert = Some(cert);
    }
    Ok(TransferCertificate {
        certificate: last_cert.expect("nonempty ε sequence"),
        chain,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LpLimitReport {
    pub p: f64,
    /// min over the final quarter of the grid of ‖y_T‖_p.
    pub liminf_proxy: f64,
    pub limit_norm: f64,
    pub tail_start: usize,
    pub passed: bool,
}

/// Checks `‖limit‖_p <= liminf_T ‖y_T‖_p` with the tail minimum as proxy.
pub fn lp_limit_check(
    family: &Family,
    p: f64,
    limit: &Operator,
    tol: f64,
) -> Result<LpLimitReport> {
    let start = tail_start(family.len());
    let liminf_proxy = family.members()[start..]
        .iter()
        .map(|y| y.pnorm(p))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    let limit_norm = limit.pnorm(p)?;
    Ok(LpLimitReport {
        p,
        liminf_proxy,
        limit_norm,
        tail_start: start,
        passed: limit_norm <= liminf_proxy + tol,
    })
}
