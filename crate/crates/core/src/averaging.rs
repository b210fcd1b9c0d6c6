//! Local ergodic averages and Besicovitch weights.
//!
//! * `β_T(x) = (1/T) ∫_0^T α_t(x) dt` ([`cesaro_average`])
//! * `β̃_T(x) = (1/T) ∫_0^T b(t) α_t(x) dt` ([`weighted_average`])
//! * `(1/T) ∫_0^T λ^t α_t(x) dt` for `|λ| = 1` ([`oscillatory_average`])
//!
//! Weights are evaluated at the quadrature nodes themselves.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::Operator;
use crate::error::{Error, Result};
use crate::quadrature::{integrate, integrate_lenient, QuadratureConfig};
use crate::semigroup::Semigroup;

/// One term `κ e^{2πiθt}` of a trigonometric polynomial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigTerm {
    pub kappa: Complex64,
    pub theta: f64,
}

impl TrigTerm {
    pub fn new(kappa: Complex64, theta: f64) -> Self {
        Self { kappa, theta }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.kappa * Complex64::new(0.0, 2.0 * PI * self.theta * t).exp()
    }
}

/// Bounded real profile multiplied by a complex amplitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResidualKind {
    Zero,
    Constant,
    /// `min(t, 1)`.
    Linear,
    Cosine {
        frequency: f64,
    },
    /// `sin(1/t)`, no limit at 0.
    SinInverse,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residual {
    pub kind: ResidualKind,
    pub amplitude: Complex64,
}

impl Residual {
    pub fn zero() -> Self {
        Self {
            kind: ResidualKind::Zero,
            amplitude: Complex64::new(0.0, 0.0),
        }
    }

    pub fn new(kind: ResidualKind, amplitude: f64) -> Self {
        Self {
            kind,
            amplitude: Complex64::new(amplitude, 0.0),
        }
    }

    fn profile(&self, t: f64) -> f64 {
        match self.kind {
            ResidualKind::Zero => 0.0,
            ResidualKind::Constant => 1.0,
            ResidualKind::Linear => t.min(1.0),
            ResidualKind::Cosine { frequency } => (frequency * t).cos(),
            ResidualKind::SinInverse => {
                if t > 0.0 {
                    (1.0 / t).sin()
                } else {
                    0.0
                }
            }
        }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        if self.kind == ResidualKind::Zero {
            return Complex64::new(0.0, 0.0);
        }
        self.amplitude * self.profile(t)
    }

    /// sup_t |r(t)|.
    pub fn sup_bound(&self) -> f64 {
        match self.kind {
            ResidualKind::Zero => 0.0,
            _ => self.amplitude.norm(),
        }
    }

    fn with_amplitude(&self, amplitude: Complex64) -> Self {
        Self {
            kind: self.kind,
            amplitude,
        }
    }
}

/// Bounded weight `b = P + r`, with `P(t) = Σ κ_j e^{2πiθ_j t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct BesicovitchWeight {
    trig: Vec<TrigTerm>,
    residual: Residual,
    sup_bound: f64,
}

/// Horizon and sample count used to check a declared sup bound.
const SUP_CHECK_HORIZON: f64 = 10.0;
const SUP_CHECK_SAMPLES: usize = 2000;

impl BesicovitchWeight {
    /// Builds the weight; `sup_bound = None` uses `Σ|κ_j| + sup|r|`. A declared
    /// bound is checked against samples of `|b(t)|` on `[0, 10]`.
    pub fn new(trig: Vec<TrigTerm>, residual: Residual, sup_bound: Option<f64>) -> Result<Self> {
        let natural: f64 = trig.iter().map(|t| t.kappa.norm()).sum::<f64>() + residual.sup_bound();
        let sup_bound = sup_bound.unwrap_or(natural);
        if !(sup_bound >= 0.0 && sup_bound.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sup bound {sup_bound} is invalid"
            )));
        }
        let w = Self {
            trig,
            residual,
            sup_bound,
        };
        let worst = w.sampled_sup(SUP_CHECK_HORIZON, SUP_CHECK_SAMPLES);
        if worst > sup_bound * (1.0 + 1e-12) + 1e-15 {
            return Err(Error::InvalidParameter(format!(
                "|b(t)| reaches {worst} above the declared sup bound {sup_bound}"
            )));
        }
        Ok(w)
    }

    /// b ≡ c.
    pub fn constant(c: Complex64) -> Self {
        Self {
            trig: vec![TrigTerm::new(c, 0.0)],
            residual: Residual::zero(),
            sup_bound: c.norm(),
        }
    }

    pub fn one() -> Self {
        Self::constant(Complex64::new(1.0, 0.0))
    }

    pub fn trig_polynomial(trig: Vec<TrigTerm>) -> Self {
        let sup_bound = trig.iter().map(|t| t.kappa.norm()).sum();
        Self {
            trig,
            residual: Residual::zero(),
            sup_bound,
        }
    }

    pub fn trig(&self) -> &[TrigTerm] {
        &self.trig
    }

    pub fn residual(&self) -> &Residual {
        &self.residual
    }

    /// Declared ‖b‖_∞.
    pub fn sup_bound(&self) -> f64 {
        self.sup_bound
    }

    /// The trigonometric part `P` alone.
    pub fn trig_part(&self) -> BesicovitchWeight {
        Self::trig_polynomial(self.trig.clone())
    }

    pub fn eval_trig(&self, t: f64) -> Complex64 {
        self.trig.iter().map(|term| term.eval(t)).sum()
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.eval_trig(t) + self.residual.eval(t)
    }

    pub fn sampled_sup(&self, horizon: f64, samples: usize) -> f64 {
        (0..=samples)
            .map(|k| self.eval(horizon * k as f64 / samples as f64).norm())
            .fold(0.0, f64::max)
    }

    /// `t ↦ conj b(t)`.
    pub fn conjugate(&self) -> BesicovitchWeight {
        Self {
            trig: self
                .trig
                .iter()
                .map(|t| TrigTerm::new(t.kappa.conj(), -t.theta))
                .collect(),
            residual: self.residual.with_amplitude(self.residual.amplitude.conj()),
            sup_bound: self.sup_bound,
        }
    }

    /// `t ↦ Re b(t)`.
    pub fn real_part(&self) -> BesicovitchWeight {
        let half = Complex64::new(0.5, 0.0);
        self.split(half, half)
    }

    /// `t ↦ Im b(t)`.
    pub fn imag_part(&self) -> BesicovitchWeight {
        // Im z = (z − conj z) / 2i
        let c = Complex64::new(0.0, -0.5);
        self.split(c, -c)
    }

    // c · b + d · conj(b), for real-valued results.
    fn split(&self, c: Complex64, d: Complex64) -> BesicovitchWeight {
        let mut trig = Vec::with_capacity(2 * self.trig.len());
        for t in &self.trig {
            trig.push(TrigTerm::new(c * t.kappa, t.theta));
            trig.push(TrigTerm::new(d * t.kappa.conj(), -t.theta));
        }
        let amp = c * self.residual.amplitude + d * self.residual.amplitude.conj();
        Self {
            trig,
            residual: self.residual.with_amplitude(Complex64::new(amp.re, 0.0)),
            sup_bound: self.sup_bound,
        }
    }
}

fn check_horizon(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "averaging horizon T = {t} must be > 0"
        )));
    }
    Ok(())
}

/// `∫_lo^hi w(t) α_t(x) dt`; `None` integrates `α_t(x)` itself.
pub fn weighted_integral(
    sg: &Semigroup,
    weight: Option<&dyn Fn(f64) -> Complex64>,
    x: &Operator,
    lo: f64,
    hi: f64,
    quad: &QuadratureConfig,
) -> Result<Operator> {
    let q = match weight {
        None => integrate(|t| sg.apply(t, x), lo, hi, quad)?,
        Some(w) => integrate(|t| Ok(sg.apply(t, x)?.scale(w(t))), lo, hi, quad)?,
    };
    Ok(q.value)
}

/// β_T(x).
pub fn cesaro_average(
    sg: &Semigroup,
    x: &Operator,
    horizon: f64,
    quad: &QuadratureConfig,
) -> Result<Operator> {
    check_horizon(horizon)?;
    Ok(weighted_integral(sg, None, x, 0.0, horizon, quad)?.scale_real(1.0 / horizon))
}

/// β̃_T(x) = (1/T) ∫_0^T b(t) α_t(x) dt.
pub fn weighted_average(
    sg: &Semigroup,
    b: &BesicovitchWeight,
    x: &Operator,
    horizon: f64,
    quad: &QuadratureConfig,
) -> Result<Operator> {
    check_horizon(horizon)?;
    let w = |t: f64| b.eval(t);
    Ok(weighted_integral(sg, Some(&w), x, 0.0, horizon, quad)?.scale_real(1.0 / horizon))
}

/// Principal logarithm of a unit complex number, with `log(−1) = iπ`.
pub fn unit_log(lambda: Complex64) -> Result<Complex64> {
    if (lambda.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "|λ| = {} must be 1",
            lambda.norm()
        )));
    }
    let arg = if lambda.im == 0.0 && lambda.re < 0.0 {
        PI
    } else {
        lambda.arg()
    };
    Ok(Complex64::new(0.0, arg))
}

/// (1/T) ∫_0^T λ^t α_t(x) dt with `λ^t = e^{t log λ}`.
pub fn oscillatory_average(
    sg: &Semigroup,
    lambda: Complex64,
    x: &Operator,
    horizon: f64,
    quad: &QuadratureConfig,
) -> Result<Operator> {
    check_horizon(horizon)?;
    let log = unit_log(lambda)?;
    let w = |t: f64| (log * t).exp();
    Ok(weighted_integral(sg, Some(&w), x, 0.0, horizon, quad)?.scale_real(1.0 / horizon))
}

/// x_k = k ∫_0^{1/k} α_s(x) ds.
pub fn dense_approximant(
    sg: &Semigroup,
    x: &Operator,
    k: u64,
    quad: &QuadratureConfig,
) -> Result<Operator> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    cesaro_average(sg, x, 1.0 / k as f64, quad)
}

/// Smallest eigenvalues of `Δ − L` and `U − Δ` in the sandwich
/// `L <= Δ <= U`, where `Δ = β_a(β_b(x)) − β_b(x)`,
/// `U = (1/b) ∫_b^{b+a} α_s(x) ds` and `L = −(1/b) ∫_0^a α_s(x) ds`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SandwichSlack {
    pub lower: f64,
    pub upper: f64,
}

pub fn sandwich_check(
    sg: &Semigroup,
    x: &Operator,
    a: f64,
    b: f64,
    quad: &QuadratureConfig,
    positivity_tol: f64,
) -> Result<SandwichSlack> {
    check_horizon(a)?;
    check_horizon(b)?;
    if !x.is_positive(positivity_tol) {
        return Err(Error::NotPositive {
            min_eigenvalue: x.min_eigenvalue(),
        });
    }
    let beta_b = cesaro_average(sg, x, b, quad)?;
    let delta = &cesaro_average(sg, &beta_b, a, quad)? - &beta_b;
    let upper = weighted_integral(sg, None, x, b, b + a, quad)?.scale_real(1.0 / b);
    let lower = weighted_integral(sg, None, x, 0.0, a, quad)?.scale_real(-1.0 / b);
    Ok(SandwichSlack {
        lower: (&delta - &lower).min_eigenvalue(),
        upper: (&upper - &delta).min_eigenvalue(),
    })
}

/// `(1/T) ∫_0^T |b(t) − P(t)| dt` over a decreasing grid of `T`.
#[derive(Debug, Clone, Serialize)]
pub struct BesicovitchTable {
    /// `(T, local mean, quadrature error estimate)`.
    pub rows: Vec<(f64, f64, f64)>,
    /// Maximum over the final quarter of the grid: the finite stand-in for `limsup_{T→0}`.
    pub tail_sup: f64,
}

pub fn besicovitch_error(
    b: &BesicovitchWeight,
    p: &BesicovitchWeight,
    t_grid: &[f64],
    quad: &QuadratureConfig,
) -> Result<BesicovitchTable> {
    if t_grid.is_empty() {
        return Err(Error::InvalidParameter("empty T grid".into()));
    }
    if t_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(
            "T grid must be strictly decreasing".into(),
        ));
    }
    let mut rows = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        check_horizon(t)?;
        let q = integrate_lenient(|s| Ok((b.eval(s) - p.eval(s)).norm()), 0.0, t, quad)?;
        rows.push((t, q.value / t, q.error_estimate / t));
    }
    let tail = tail_start(rows.len());
    let tail_sup = rows[tail..].iter().map(|r| r.1).fold(0.0, f64::max);
    Ok(BesicovitchTable { rows, tail_sup })
}

/// Index where the final quarter of a grid of length `n` begins.
pub fn tail_start(n: usize) -> usize {
    n - n.div_ceil(4).max(1)
}

/// `lhs = ‖β̃_T(x) − (1/T)∫_0^T P(t)α_t(x)dt‖_∞` and
/// `rhs = 2 ((1/T)∫_0^T |P − b|) ‖x‖_∞`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubstitutionBound {
    pub lhs: f64,
    pub rhs: f64,
    /// Quadrature error estimate carried by `rhs`; `|P − b|` is only piecewise smooth.
    pub rhs_error: f64,
}

pub fn substitution_bound_check(
    sg: &Semigroup,
    b: &BesicovitchWeight,
    p: &BesicovitchWeight,
    x: &Operator,
    horizon: f64,
    quad: &QuadratureConfig,
) -> Result<SubstitutionBound> {
    check_horizon(horizon)?;
    let tilde = weighted_average(sg, b, x, horizon, quad)?;
    let trig = weighted_average(sg, p, x, horizon, quad)?;
    let mean = integrate_lenient(|s| Ok((p.eval(s) - b.eval(s)).norm()), 0.0, horizon, quad)?;
    let scale = 2.0 * x.norm_inf() / horizon;
    Ok(SubstitutionBound {
        lhs: tilde.dist_inf(&trig),
        rhs: scale * mean.value,
        rhs_error: scale * mean.error_estimate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::TracialAlgebra;
    use crate::random::Sampler;
    use crate::semigroup::{distance_rates, random_lindblad, SemigroupSpec};
    use std::sync::Arc;

    fn alg() -> Arc<TracialAlgebra> {
        TracialAlgebra::new(vec![2, 2], vec![1.0, 0.5]).unwrap()
    }

    fn quad() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    // Midpoint Riemann sum with n cells, stepping the semigroup by α_h.
    fn riemann(sg: &Semigroup, x: &Operator, horizon: f64, n: usize) -> Operator {
        let h = horizon / n as f64;
        let mut y = sg.apply(h / 2.0, x).unwrap();
        let mut acc = y.clone();
        for _ in 1..n {
            y = sg.apply(h, &y).unwrap();
            acc = &acc + &y;
        }
        acc.scale_real(1.0 / n as f64)
    }

    #[test]
    fn identity_average_is_constant() {
        let alg = alg();
        let x = Sampler::new(1).operator(&alg);
        let sg = Semigroup::new(&alg, SemigroupSpec::Identity).unwrap();
        for t in [1e-4, 0.3, 5.0] {
            assert!(cesaro_average(&sg, &x, t, &quad()).unwrap().dist_inf(&x) < 1e-14);
        }
        assert!(cesaro_average(&sg, &x, 0.0, &quad()).is_err());
    }

    #[test]
    fn scalar_decay_average_closed_form() {
        let alg = alg();
        let x = Sampler::new(2).operator(&alg);
        let gamma = 1.7;
        let sg = Semigroup::new(&alg, SemigroupSpec::ScalarDecay { rate: gamma }).unwrap();
        for t in [1e-3, 0.5, 4.0] {
            let expected = x.scale_real((1.0 - (-gamma * t).exp()) / (gamma * t));
            let got = cesaro_average(&sg, &x, t, &quad()).unwrap();
            assert!(got.dist_inf(&expected) < 1e-12 * x.norm_inf());
        }
    }

    #[test]
    fn unitary_average_matches_riemann_oracle() {
        let alg = alg();
        let mut s = Sampler::new(3);
        let sg = Semigroup::new(
            &alg,
            SemigroupSpec::UnitaryFlow {
                hamiltonian: s.hermitian(&alg),
            },
        )
        .unwrap();
        let x = s.operator(&alg);
        let got = cesaro_average(&sg, &x, 1.0, &quad()).unwrap();
        let oracle = riemann(&sg, &x, 1.0, 100_000);
        assert!(got.dist_inf(&oracle) < 1e-8 * oracle.norm_inf());
    }

    #[test]
    fn unit_weight_reduces_to_cesaro_exactly() {
        let alg = alg();
        let mut s = Sampler::new(4);
        let sg = Semigroup::new(
            &alg,
            SemigroupSpec::GeneratorExp {
                generator: random_lindblad(&alg, &mut s, 2, 0.1).unwrap(),
            },
        )
        .unwrap();
        let x = s.operator(&alg);
        let a = cesaro_average(&sg, &x, 0.7, &quad()).unwrap();
        let b = weighted_average(&sg, &BesicovitchWeight::one(), &x, 0.7, &quad()).unwrap();
        assert!(a.dist_inf(&b) < 1e-12);
        let l = oscillatory_average(&sg, c(1.0, 0.0), &x, 0.7, &quad()).unwrap();
        assert!(a.dist_inf(&l) < 1e-12);
    }

    #[test]
    fn single_frequency_closed_form_with_identity() {
        let alg = alg();
        let x = Sampler::new(5).operator(&alg);
        let sg = Semigroup::new(&alg, SemigroupSpec::Identity).unwrap();
        let theta = 0.3;
        let horizon = 2.5;
        let w = c(0.0, 2.0 * PI * theta);
        let factor = ((w * horizon).exp() - 1.0) / (w * horizon);
        let expected = x.scale(factor);
        let b = BesicovitchWeight::trig_polynomial(vec![TrigTerm::new(c(1.0, 0.0), theta)]);
        let got = weighted_average(&sg, &b, &x, horizon, &quad()).unwrap();
        assert!(got.dist_inf(&expected) < 1e-12);
        let lambda = (w).exp();
        let got = oscillatory_average(&sg, lambda, &x, horizon, &quad()).unwrap();
        assert!(got.dist_inf(&expected) < 1e-12);
    }

    #[test]
    fn two_term_trig_with_scalar_decay_closed_form() {
        let alg = alg();
        let x = Sampler::new(6).operator(&alg);
        let gamma = 0.6;
        let sg = Semigroup::new(&alg, SemigroupSpec::ScalarDecay { rate: gamma }).unwrap();
        let terms = vec![
            TrigTerm::new(c(0.4, 0.2), 1.5),
            TrigTerm::new(c(-0.3, 0.1), -0.25),
        ];
        let b = BesicovitchWeight::trig_polynomial(terms.clone());
        for horizon in [0.01, 1.0, 3.0] {
            let factor: Complex64 = terms
                .iter()
                .map(|t| {
                    let z = c(-gamma, 2.0 * PI * t.theta);
                    t.kappa * ((z * horizon).exp() - 1.0) / (z * horizon)
                })
                .sum();
            let got = weighted_average(&sg, &b, &x, horizon, &quad()).unwrap();
            assert!(got.dist_inf(&x.scale(factor)) < 1e-12 * x.norm_inf());
        }
    }

    #[test]
    fn weighted_and_oscillatory_paths_agree() {
        let alg = alg();
        let mut s = Sampler::new(7);
        let sg = Semigroup::new(
            &alg,
            SemigroupSpec::UnitaryFlow {
                hamiltonian: s.hermitian(&alg),
            },
        )
        .unwrap();
        let x = s.operator(&alg);
        for theta in [-0.4, 0.1, 0.5] {
            let b = BesicovitchWeight::trig_polynomial(vec![TrigTerm::new(c(1.0, 0.0), theta)]);
            let lambda = c(0.0, 2.0 * PI * theta).exp();
            let lhs = weighted_average(&sg, &b, &x, 1.3, &quad()).unwrap();
            let rhs = oscillatory_average(&sg, lambda, &x, 1.3, &quad()).unwrap();
            assert!(lhs.dist_inf(&rhs) < 1e-12, "θ = {theta}");
        }
        assert!(oscillatory_average(&sg, c(2.0, 0.0), &x, 1.0, &quad()).is_err());
    }

    #[test]
    fn minus_one_uses_i_pi() {
        assert_eq!(unit_log(c(-1.0, 0.0)).unwrap(), c(0.0, PI));
        assert_eq!(unit_log(c(-1.0, -0.0)).unwrap(), c(0.0, PI));
    }

    #[test]
    fn dense_approximant_examples() {
        let alg = alg();
        let mut s = Sampler::new(8);
        let x = s.operator(&alg);
        let id = Semigroup::new(&alg, SemigroupSpec::Identity).unwrap();
        assert!(dense_approximant(&id, &x, 3, &quad()).unwrap().dist_inf(&x) < 1e-14);
        let sd = Semigroup::new(&alg, SemigroupSpec::ScalarDecay { rate: 1.0 }).unwrap();
        let expected = x.scale_real((1.0 - (-0.1f64).exp()) * 10.0);
        assert!(
            dense_approximant(&sd, &x, 10, &quad())
                .unwrap()
                .dist_inf(&expected)
                < 1e-13
        );

        let gen = Semigroup::new(
            &alg,
            SemigroupSpec::GeneratorExp {
                generator: random_lindblad(&alg, &mut s, 2, 0.1).unwrap(),
            },
        )
        .unwrap();
        let mut last = f64::INFINITY;
        for k in [1, 2, 4, 8, 16, 32, 64] {
            let xk = dense_approximant(&gen, &x, k, &quad()).unwrap();
            let gap = (&xk - &x).pnorm(2.0).unwrap();
            assert!(gap < last, "k = {k}");
            last = gap;
            // Lemma-style estimate: gap <= sup_{s <= 1/k} ‖α_s x − x‖_2.
            let grid: Vec<f64> = (1..=50).map(|j| j as f64 / (50.0 * k as f64)).collect();
            let sup = crate::semigroup::continuity_modulus(&gen, &x, 2.0, &grid)
                .unwrap()
                .into_iter()
                .map(|r| r.1)
                .fold(0.0, f64::max);
            assert!(gap <= sup * (1.0 + 1e-9));
        }
    }

    #[test]
    fn sandwich_examples() {
        let alg = alg();
        let mut s = Sampler::new(9);
        let x = s.positive(&alg);
        let id = Semigroup::new(&alg, SemigroupSpec::Identity).unwrap();
        let slack = sandwich_check(&id, &x, 0.5, 1.0, &quad(), 1e-10).unwrap();
        let expected = x.scale_real(0.5).min_eigenvalue();
        assert!((slack.lower - expected).abs() < 1e-12);
        assert!((slack.upper - expected).abs() < 1e-12);

        let gamma: f64 = 0.9;
        let sd = Semigroup::new(&alg, SemigroupSpec::ScalarDecay { rate: gamma }).unwrap();
        let (a, b) = (0.3, 0.7);
        // β_a β_b x − β_b x = (f(a) f(b) − f(b)) x with f(T) = (1 − e^{−γT})/(γT).
        let f = |t: f64| (1.0 - (-gamma * t).exp()) / (gamma * t);
        let delta = f(a) * f(b) - f(b);
        let upper = ((-gamma * b).exp() - (-gamma * (a + b)).exp()) / (gamma * b);
        let lower = -(1.0 - (-gamma * a).exp()) / (gamma * b);
        assert!(delta - lower >= 0.0 && upper - delta >= 0.0);
        let slack = sandwich_check(&sd, &x, a, b, &quad(), 1e-10).unwrap();
        let m = x.min_eigenvalue();
        assert!((slack.lower - (delta - lower) * m).abs() < 1e-12);
        assert!((slack.upper - (upper - delta) * m).abs() < 1e-12);

        let h = s.hermitian(&alg);
        if !h.is_positive(1e-10) {
            assert!(sandwich_check(&id, &h, 0.5, 1.0, &quad(), 1e-10).is_err());
        }
    }

    #[test]
    fn sandwich_under_unitary_flow() {
        let alg = alg();
        let mut s = Sampler::new(10);
        let sg = Semigroup::new(
            &alg,
            SemigroupSpec::UnitaryFlow {
                hamiltonian: s.hermitian(&alg).scale_real(2.0),
            },
        )
        .unwrap();
        let x = s.positive(&alg);
        for a in [0.1, 0.5, 1.0] {
            for b in [0.1, 0.5, 1.0] {
                let slack = sandwich_check(&sg, &x, a, b, &quad(), 1e-10).unwrap();
                assert!(
                    slack.lower >= -1e-8 && slack.upper >= -1e-8,
                    "a={a} b={b} {slack:?}"
                );
            }
        }
    }

    #[test]
    fn besicovitch_error_examples() {
        let p = BesicovitchWeight::trig_polynomial(vec![TrigTerm::new(c(0.5, 0.0), 2.0)]);
        let grid = crate::semigroup::log_grid(1.0, 1e-3, 12);
        let grid: Vec<f64> = grid.into_iter().collect();
        let zero = besicovitch_error(&p, &p, &grid, &quad()).unwrap();
        assert!(zero.rows.iter().all(|r| r.1 == 0.0));
        assert_eq!(zero.tail_sup, 0.0);

        let lin = BesicovitchWeight::new(
            p.trig().to_vec(),
            Residual::new(ResidualKind::Linear, 1.0),
            None,
        )
        .unwrap();
        let table = besicovitch_error(&lin, &p, &grid, &quad()).unwrap();
        for (t, v, _) in &table.rows {
            assert!((v - t / 2.0).abs() < 1e-12);
        }

        let wild = BesicovitchWeight::new(
            p.trig().to_vec(),
            Residual::new(ResidualKind::SinInverse, 0.1),
            None,
        )
        .unwrap();
        let table = besicovitch_error(&wild, &p, &grid, &quad()).unwrap();
        assert!(table.tail_sup <= 0.1);
        for &(t, v, _) in &table.rows {
            // Dense midpoint sums as an independent scalar oracle.
            let n = 200_000;
            let h = t / n as f64;
            let oracle: f64 = (0..n)
                .map(|k| (1.0 / ((k as f64 + 0.5) * h)).sin().abs())
                .sum::<f64>()
                * 0.1
                / n as f64;
            assert!((v - oracle).abs() < 2e-3, "T = {t}: {v} vs {oracle}");
        }
        assert!(besicovitch_error(&p, &p, &[0.1, 0.2], &quad()).is_err());
    }

    #[test]
    fn declared_sup_bound_is_checked() {
        let terms = vec![TrigTerm::new(c(1.0, 0.0), 0.5)];
        assert!(BesicovitchWeight::new(terms.clone(), Residual::zero(), Some(0.5)).is_err());
        assert!(BesicovitchWeight::new(terms, Residual::zero(), Some(1.0)).is_ok());
    }

    #[test]
    fn substitution_bound_examples() {
        let alg = alg();
        let mut s = Sampler::new(11);
        let x = s.positive(&alg);
        let p = BesicovitchWeight::trig_polynomial(vec![
            TrigTerm::new(c(0.4, 0.0), 0.0),
            TrigTerm::new(c(0.2, 0.1), 1.0),
        ]);
        let sg = Semigroup::new(
            &alg,
            SemigroupSpec::SchurDecay {
                rates: alg.dims().iter().map(|&n| distance_rates(n, 0.8)).collect(),
            },
        )
        .unwrap();
        let same = substitution_bound_check(&sg, &p, &p, &x, 0.8, &quad()).unwrap();
        assert_eq!(same.lhs, 0.0);
        assert_eq!(same.rhs, 0.0);

        let delta = 0.05;
        let shifted = BesicovitchWeight::new(
            p.trig().to_vec(),
            Residual::new(ResidualKind::Constant, delta),
            None,
        )
        .unwrap();
        let r = substitution_bound_check(&sg, &shifted, &p, &x, 0.8, &quad()).unwrap();
        let beta = cesaro_average(&sg, &x, 0.8, &quad()).unwrap();
        assert!((r.lhs - delta * beta.norm_inf()).abs() < 1e-10);
        assert!((r.rhs - 2.0 * delta * x.norm_inf()).abs() < 1e-12);
        assert!(r.lhs <= r.rhs);

        let wiggly = BesicovitchWeight::new(
            p.trig().to_vec(),
            Residual::new(ResidualKind::Cosine { frequency: 7.0 }, 0.05),
            None,
        )
        .unwrap();
        for horizon in [0.01, 0.3, 2.0] {
            let r = substitution_bound_check(&sg, &wiggly, &p, &x, horizon, &quad()).unwrap();
            assert!(r.lhs <= r.rhs + 1e-8);
        }
    }

    #[test]
    fn conjugation_decomposition_and_domination() {
        let alg = alg();
        let mut s = Sampler::new(12);
        let sg = Semigroup::new(
            &alg,
            SemigroupSpec::GeneratorExp {
                generator: random_lindblad(&alg, &mut s, 2, 0.05).unwrap(),
            },
        )
        .unwrap();
        let b = BesicovitchWeight::new(
            vec![
                TrigTerm::new(c(0.3, 0.4), 0.7),
                TrigTerm::new(c(0.2, -0.1), -1.2),
            ],
            Residual {
                kind: ResidualKind::Cosine { frequency: 3.0 },
                amplitude: c(0.1, 0.2),
            },
            None,
        )
        .unwrap();
        assert!(b.sup_bound() <= 1.0);
        let h = s.hermitian(&alg);
        let x = s.positive(&alg);
        for horizon in [0.05, 0.5, 2.0] {
            let w = weighted_average(&sg, &b, &h, horizon, &quad()).unwrap();
            let wc = weighted_average(&sg, &b.conjugate(), &h, horizon, &quad()).unwrap();
            assert!(w.adjoint().dist_inf(&wc) < 1e-10);

            let re = weighted_average(&sg, &b.real_part(), &x, horizon, &quad()).unwrap();
            let im = weighted_average(&sg, &b.imag_part(), &x, horizon, &quad()).unwrap();
            let full = weighted_average(&sg, &b, &x, horizon, &quad()).unwrap();
            let mut recombined = re.clone();
            recombined.axpy(c(0.0, 1.0), &im);
            assert!(full.dist_inf(&recombined) < 1e-12 * x.norm_inf().max(1.0));

            let beta = cesaro_average(&sg, &x, horizon, &quad()).unwrap();
            let gap = &beta.scale_real(2.0) - &(&re + &beta);
            assert!(gap.min_eigenvalue() >= -1e-10 * x.norm_inf());

            for p in [1.0, 2.0, f64::INFINITY] {
                assert!(
                    full.pnorm(p).unwrap() <= 2.0 * b.sup_bound() * x.pnorm(p).unwrap() + 1e-10
                );
            }
        }
    }

    #[test]
    fn cesaro_average_is_positive_and_decays_to_x() {
        let alg = alg();
        let mut s = Sampler::new(13);
        let sg = Semigroup::new(
            &alg,
            SemigroupSpec::UnitaryFlow {
                hamiltonian: s.hermitian(&alg),
            },
        )
        .unwrap();
        let x = s.positive(&alg);
        let mut last = f64::INFINITY;
        for j in 0..=12 {
            let horizon = 0.5f64.powi(j);
            let avg = cesaro_average(&sg, &x, horizon, &quad()).unwrap();
            assert!(avg.min_eigenvalue() >= -1e-10 * x.norm_inf());
            let d = (&avg - &x).pnorm(1.0).unwrap();
            assert!(d < last);
            last = d;
        }
        assert!(last < 1e-3 * x.pnorm(1.0).unwrap());
    }
}
