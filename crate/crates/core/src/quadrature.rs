//! Composite Gauss–Legendre quadrature with panel refinement.
//!
//! Each pass evaluates the composite rule on `m` equal panels and on
//! `factor · m` panels; the difference of the two passes is the error
//! estimate, and refinement continues until it falls below
//! `rel_tol · max(‖I‖, ∫‖f‖)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::algebra::Operator;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    /// Gauss–Legendre nodes per panel.
    pub order: usize,
    /// Initial panels per unit length of the integration interval (at least one panel).
    pub panels_per_unit: usize,
    pub refinement_factor: usize,
    pub rel_tol: f64,
    pub max_refinements: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            order: 10,
            panels_per_unit: 4,
            refinement_factor: 2,
            rel_tol: 1e-10,
            max_refinements: 12,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "quadrature tolerance must be > 0".into(),
            ));
        }
        if self.panels_per_unit < 1 || self.order < 1 {
            return Err(Error::InvalidParameter(
                "quadrature needs at least one panel and one node".into(),
            ));
        }
        if self.refinement_factor < 2 {
            return Err(Error::InvalidParameter(
                "refinement factor must be >= 2".into(),
            ));
        }
        Ok(())
    }
}

/// Values that can be integrated: a normed vector space over the reals.
pub trait Integrand: Clone {
    fn zero_like(&self) -> Self;
    fn add_scaled(&mut self, c: f64, other: &Self);
    fn norm(&self) -> f64;
    fn distance(&self, other: &Self) -> f64;
}

impl Integrand for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, c: f64, other: &Self) {
        *self += c * other;
    }
    fn norm(&self) -> f64 {
        self.abs()
    }
    fn distance(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
}

impl Integrand for Complex64 {
    fn zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add_scaled(&mut self, c: f64, other: &Self) {
        *self += other * c;
    }
    fn norm(&self) -> f64 {
        Complex64::norm(*self)
    }
    fn distance(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
}

/// Operator integrands are measured in the operator norm.
impl Integrand for Operator {
    fn zero_like(&self) -> Self {
        Operator::zero(self.algebra())
    }
    fn add_scaled(&mut self, c: f64, other: &Self) {
        self.axpy(Complex64::new(c, 0.0), other);
    }
    fn norm(&self) -> f64 {
        self.norm_inf()
    }
    fn distance(&self, other: &Self) -> f64 {
        self.dist_inf(other)
    }
}

#[derive(Debug, Clone)]
pub struct Quadrature<V> {
    pub value: V,
    pub error_estimate: f64,
    pub panels: usize,
    pub converged: bool,
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on [−1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Three-term recurrence for P_n(x) and its derivative.
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn composite<V: Integrand>(
    f: &impl Fn(f64) -> Result<V>,
    a: f64,
    b: f64,
    panels: usize,
    rule: &(Vec<f64>, Vec<f64>),
) -> Result<(V, f64)> {
    let h = (b - a) / panels as f64;
    let mut acc: Option<V> = None;
    let mut mass = 0.0;
    for k in 0..panels {
        let left = a + k as f64 * h;
        for (x, w) in rule.0.iter().zip(&rule.1) {
            let t = left + 0.5 * h * (x + 1.0);
            let v = f(t)?;
            let c = 0.5 * h * w;
            mass += c * v.norm();
            match acc.as_mut() {
                Some(s) => s.add_scaled(c, &v),
                None => {
                    let mut s = v.zero_like();
                    s.add_scaled(c, &v);
                    acc = Some(s);
                }
            }
        }
    }
    Ok((acc.expect("at least one node"), mass))
}

fn run<V: Integrand>(
    f: impl Fn(f64) -> Result<V>,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
    strict: bool,
) -> Result<Quadrature<V>> {
    cfg.validate()?;
    if !(a.is_finite() && b.is_finite() && a <= b) {
        return Err(Error::InvalidParameter(format!("bad interval [{a}, {b}]")));
    }
    let rule = gauss_legendre(cfg.order);
    let mut panels = ((cfg.panels_per_unit as f64 * (b - a)).ceil() as usize).max(1);
    let (mut coarse, _) = composite(&f, a, b, panels, &rule)?;
    if a == b {
        return Ok(Quadrature {
            value: coarse,
            error_estimate: 0.0,
            panels,
            converged: true,
        });
    }
    let mut best_err = f64::INFINITY;
    let mut target = 0.0;
    for _ in 0..cfg.max_refinements {
        panels *= cfg.refinement_factor;
        let (fine, mass) = composite(&f, a, b, panels, &rule)?;
        let err = fine.distance(&coarse);
        target = cfg.rel_tol * fine.norm().max(mass);
        best_err = err;
        if err <= target {
            return Ok(Quadrature {
                value: fine,
                error_estimate: err,
                panels,
                converged: true,
            });
        }
        coarse = fine;
    }
    if strict {
        return Err(Error::QuadratureNonConvergence {
            a,
            b,
            refinements: cfg.max_refinements,
            achieved: best_err,
            target,
        });
    }
    Ok(Quadrature {
        value: coarse,
        error_estimate: best_err,
        panels,
        converged: false,
    })
}

/// ∫_a^b f, failing with [`Error::QuadratureNonConvergence`] if the tolerance is not met.
pub fn integrate<V: Integrand>(
    f: impl Fn(f64) -> Result<V>,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<Quadrature<V>> {
    run(f, a, b, cfg, true)
}

/// Like [`integrate`] but returns the last estimate with `converged = false`
/// instead of failing. Used for weights that oscillate without limit near 0.
pub fn integrate_lenient<V: Integrand>(
    f: impl Fn(f64) -> Result<V>,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<Quadrature<V>> {
    run(f, a, b, cfg, false)
}
