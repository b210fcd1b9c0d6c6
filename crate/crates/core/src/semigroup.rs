//! One-parameter semigroups `{α_t}` of absolute contractions and their validation.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::Serialize;

use crate::algebra::{CMatrix, Operator, TracialAlgebra};
use crate::error::{Error, Result};
use crate::expm::expm;
use crate::random::Sampler;

/// The shipped semigroup families.
#[derive(Debug, Clone)]
pub enum SemigroupSpec {
    /// α_t = id.
    Identity,
    /// α_t(x) = e^{−γt} x.
    ScalarDecay { rate: f64 },
    /// α_t(x) = e^{itH} x e^{−itH}.
    UnitaryFlow { hamiltonian: Operator },
    /// α_t(x) = S(t) ∘ x blockwise, with S_{jk}(t) = e^{−t c_{jk}}.
    SchurDecay { rates: Vec<DMatrix<f64>> },
    /// α_t = exp(tL), `L` acting on the row-major vectorisation of the algebra.
    GeneratorExp { generator: CMatrix },
}

impl SemigroupSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SemigroupSpec::Identity => "identity",
            SemigroupSpec::ScalarDecay { .. } => "scalar_decay",
            SemigroupSpec::UnitaryFlow { .. } => "unitary_flow",
            SemigroupSpec::SchurDecay { .. } => "schur_decay",
            SemigroupSpec::GeneratorExp { .. } => "generator_exp",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CachePolicy {
    Disabled,
    /// Keep at most this many evaluated propagators; the cache is flushed when full.
    Bounded(usize),
}

impl Default for CachePolicy {
    fn default() -> Self {
        CachePolicy::Bounded(4096)
    }
}

#[derive(Debug)]
enum Kernel {
    Identity,
    Scalar(f64),
    Unitary {
        eigenvalues: Vec<Vec<f64>>,
        eigenvectors: Vec<CMatrix>,
    },
    Schur(Vec<DMatrix<f64>>),
    Generator(CMatrix),
}

#[derive(Debug)]
enum Propagator {
    Unitary(Vec<CMatrix>),
    Matrix(CMatrix),
}

/// A validated semigroup bound to its algebra.
#[derive(Debug)]
pub struct Semigroup {
    alg: Arc<TracialAlgebra>,
    spec: SemigroupSpec,
    kernel: Kernel,
    policy: CachePolicy,
    cache: Mutex<HashMap<u64, Arc<Propagator>>>,
}

impl Semigroup {
    pub fn new(alg: &Arc<TracialAlgebra>, spec: SemigroupSpec) -> Result<Self> {
        Self::with_cache(alg, spec, CachePolicy::default())
    }

    pub fn with_cache(
        alg: &Arc<TracialAlgebra>,
        spec: SemigroupSpec,
        policy: CachePolicy,
    ) -> Result<Self> {
        let kernel = match &spec {
            SemigroupSpec::Identity => Kernel::Identity,
            SemigroupSpec::ScalarDecay { rate } => {
                if !(rate.is_finite() && *rate >= 0.0) {
                    return Err(Error::InvalidSemigroup(format!(
                        "decay rate {rate} must be finite and >= 0"
                    )));
                }
                Kernel::Scalar(*rate)
            }
            SemigroupSpec::UnitaryFlow { hamiltonian } => {
                if **hamiltonian.algebra() != **alg {
                    return Err(Error::AlgebraMismatch);
                }
                let res = hamiltonian
                    .spectral_resolution(1e-10)
                    .map_err(|e| Error::InvalidSemigroup(format!("hamiltonian: {e}")))?;
                Kernel::Unitary {
                    eigenvalues: res.eigenvalues().to_vec(),
                    eigenvectors: res.eigenvectors().to_vec(),
                }
            }
            SemigroupSpec::SchurDecay { rates } => {
                if rates.len() != alg.num_blocks() {
                    return Err(Error::InvalidSemigroup(format!(
                        "{} rate matrices for {} blocks",
                        rates.len(),
                        alg.num_blocks()
                    )));
                }
                for (i, (c, &n)) in rates.iter().zip(alg.dims()).enumerate() {
                    if c.shape() != (n, n) {
                        return Err(Error::InvalidSemigroup(format!(
                            "rate matrix {i} has shape {:?}, expected ({n}, {n})",
                            c.shape()
                        )));
                    }
                    if c.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                        return Err(Error::InvalidSemigroup(format!(
                            "rate matrix {i} must be entrywise finite and nonnegative"
                        )));
                    }
                    if (c - c.transpose()).amax() > 0.0 {
                        return Err(Error::InvalidSemigroup(format!(
                            "rate matrix {i} must be symmetric"
                        )));
                    }
                }
                Kernel::Schur(rates.clone())
            }
            SemigroupSpec::GeneratorExp { generator } => {
                let d = alg.vec_dim();
                if generator.shape() != (d, d) {
                    return Err(Error::InvalidSemigroup(format!(
                        "generator has shape {:?}, expected ({d}, {d})",
                        generator.shape()
                    )));
                }
                if generator
                    .iter()
                    .any(|z| !(z.re.is_finite() && z.im.is_finite()))
                {
                    return Err(Error::InvalidSemigroup(
                        "generator has non-finite entries".into(),
                    ));
                }
                Kernel::Generator(generator.clone())
            }
        };
        Ok(Self {
            alg: alg.clone(),
            spec,
            kernel,
            policy,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn algebra(&self) -> &Arc<TracialAlgebra> {
        &self.alg
    }

    pub fn spec(&self) -> &SemigroupSpec {
        &self.spec
    }

    pub fn name(&self) -> &'static str {
        self.spec.name()
    }

    fn propagator(&self, t: f64, build: impl FnOnce() -> Propagator) -> Arc<Propagator> {
        let capacity = match self.policy {
            CachePolicy::Disabled => return Arc::new(build()),
            CachePolicy::Bounded(c) => c,
        };
        let key = t.to_bits();
        if let Some(p) = self.cache.lock().expect("cache lock").get(&key) {
            return p.clone();
        }
        let p = Arc::new(build());
        let mut cache = self.cache.lock().expect("cache lock");
        if cache.len() >= capacity {
            cache.clear();
        }
        cache.entry(key).or_insert_with(|| p.clone()).clone()
    }

    /// α_t(x). `α_0(x)` returns `x` unchanged.
    pub fn apply(&self, t: f64, x: &Operator) -> Result<Operator> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "time t = {t} must be finite and >= 0"
            )));
        }
        if **x.algebra() != *self.alg {
            return Err(Error::AlgebraMismatch);
        }
        if t == 0.0 {
            return Ok(x.clone());
        }
        Ok(match &self.kernel {
            Kernel::Identity => x.clone(),
            Kernel::Scalar(rate) => x.scale_real((-rate * t).exp()),
            Kernel::Unitary {
                eigenvalues,
                eigenvectors,
            } => {
                let prop = self.propagator(t, || {
                    Propagator::Unitary(
                        eigenvalues
                            .iter()
                            .zip(eigenvectors)
                            .map(|(ls, v)| {
                                let d = DVector::from_iterator(
                                    ls.len(),
                                    ls.iter().map(|&l| Complex64::new(0.0, t * l).exp()),
                                );
                                v * CMatrix::from_diagonal(&d) * v.adjoint()
                            })
                            .collect(),
                    )
                });
                let Propagator::Unitary(us) = &*prop else {
                    unreachable!("unitary kernel caches unitaries")
                };
                let blocks = x
                    .blocks()
                    .iter()
                    .zip(us)
                    .map(|(b, u)| u * b * u.adjoint())
                    .collect();
                Operator::from_blocks(&self.alg, blocks)?
            }
            Kernel::Schur(rates) => {
                let blocks = x
                    .blocks()
                    .iter()
                    .zip(rates)
                    .map(|(b, c)| {
                        CMatrix::from_fn(b.nrows(), b.ncols(), |j, k| {
                            b[(j, k)] * (-t * c[(j, k)]).exp()
                        })
                    })
                    .collect();
                Operator::from_blocks(&self.alg, blocks)?
            }
            Kernel::Generator(l) => {
                let prop = self.propagator(t, || {
                    Propagator::Matrix(expm(&(l * Complex64::new(t, 0.0))))
                });
                let Propagator::Matrix(e) = &*prop else {
                    unreachable!("generator kernel caches matrices")
                };
                Operator::from_vec(&self.alg, &(e * x.to_vec()))?
            }
        })
    }

    /// Schur weight matrices `S(t)` (SchurDecay only).
    pub fn schur_matrices(&self, t: f64) -> Option<Vec<DMatrix<f64>>> {
        match &self.kernel {
            Kernel::Schur(rates) => Some(rates.iter().map(|c| c.map(|v| (-t * v).exp())).collect()),
            _ => None,
        }
    }

    /// Matrix of α_t on the vectorised algebra.
    pub fn propagator_matrix(&self, t: f64) -> Result<CMatrix> {
        map_matrix(&self.alg, |x| self.apply(t, x))
    }

    /// Choi matrices of α_t: one per (input block, output block) pair.
    pub fn choi_blocks(&self, t: f64) -> Result<Vec<CMatrix>> {
        let dims = self.alg.dims().to_vec();
        let mut out = Vec::new();
        for (i, &ni) in dims.iter().enumerate() {
            // images[j][k] = α_t(E^{(i)}_{jk})
            let mut images = Vec::with_capacity(ni * ni);
            for j in 0..ni {
                for k in 0..ni {
                    images.push(self.apply(t, &matrix_unit(&self.alg, i, j, k))?);
                }
            }
            for (l, &nl) in dims.iter().enumerate() {
                let mut c = CMatrix::zeros(ni * nl, ni * nl);
                for j in 0..ni {
                    for k in 0..ni {
                        let img = images[j * ni + k].block(l);
                        for a in 0..nl {
                            for b in 0..nl {
                                c[(j * nl + a, k * nl + b)] = img[(a, b)];
                            }
                        }
                    }
                }
                out.push(c);
            }
        }
        Ok(out)
    }
}

/// The operator with a single 1 at entry (j, k) of block `i`.
pub fn matrix_unit(alg: &Arc<TracialAlgebra>, i: usize, j: usize, k: usize) -> Operator {
    let blocks = alg
        .dims()
        .iter()
        .enumerate()
        .map(|(b, &n)| {
            let mut m = CMatrix::zeros(n, n);
            if b == i {
                m[(j, k)] = Complex64::new(1.0, 0.0);
            }
            m
        })
        .collect();
    Operator::from_blocks(alg, blocks).expect("shapes follow the algebra")
}

/// Matrix of a linear map on the vectorised algebra.
pub fn map_matrix(
    alg: &Arc<TracialAlgebra>,
    f: impl Fn(&Operator) -> Result<Operator>,
) -> Result<CMatrix> {
    let d = alg.vec_dim();
    let mut m = CMatrix::zeros(d, d);
    let mut col = 0;
    for (i, &n) in alg.dims().iter().enumerate() {
        for j in 0..n {
            for k in 0..n {
                m.set_column(col, &f(&matrix_unit(alg, i, j, k))?.to_vec());
                col += 1;
            }
        }
    }
    Ok(m)
}

/// Heisenberg-picture Lindblad generator
/// `L(x) = i[H, x] + Σ_j (A_j* x A_j − ½{A_j* A_j, x}) − decay · x`.
///
/// With self-adjoint jump operators the flow is unital and trace preserving;
/// `decay >= 0` makes it strictly subunital.
pub fn lindblad_generator(
    alg: &Arc<TracialAlgebra>,
    hamiltonian: &Operator,
    jumps: &[Operator],
    decay: f64,
) -> Result<CMatrix> {
    let i = Complex64::new(0.0, 1.0);
    map_matrix(alg, |x| {
        let mut out = (&(hamiltonian * x) - &(x * hamiltonian)).scale(i);
        for a in jumps {
            let ad = a.adjoint();
            let ada = &ad * a;
            out = &out + &(&(&ad * x) * a);
            out = &out - &(&(&ada * x) + &(x * &ada)).scale_real(0.5);
        }
        out.axpy(Complex64::new(-decay, 0.0), x);
        Ok(out)
    })
}

/// Random absolute-contraction generator: Lindblad form with random
/// Hamiltonian and `num_jumps` self-adjoint jump operators.
pub fn random_lindblad(
    alg: &Arc<TracialAlgebra>,
    sampler: &mut Sampler,
    num_jumps: usize,
    decay: f64,
) -> Result<CMatrix> {
    let h = sampler.hermitian(alg);
    let jumps: Vec<_> = (0..num_jumps)
        .map(|_| sampler.hermitian(alg).scale_real(0.7))
        .collect();
    lindblad_generator(alg, &h, &jumps, decay)
}

/// One row of a [`ValidationReport`].
#[derive(Debug, Clone, Serialize)]
pub struct ValidationRow {
    pub t: f64,
    pub choi_min_eigenvalue: f64,
    pub positivity_violation: f64,
    pub unitality_excess: f64,
    pub trace_excess: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub t: f64,
    pub check: &'static str,
    pub value: f64,
}

/// Outcome of [`validate_absolute_contraction`]. Violations are nonnegative.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub variant: &'static str,
    pub t_samples: Vec<f64>,
    pub rows: Vec<ValidationRow>,
    /// Choi matrices were positive semidefinite at every sampled `t`.
    pub completely_positive: bool,
    /// Positivity rests on random positive inputs only (no Choi certificate).
    pub sampled_only: bool,
    /// Minimum over `t` and blocks of the smallest eigenvalue of `S(t)` (SchurDecay only).
    pub schur_min_eigenvalue: Option<f64>,
    pub max_positivity_violation: f64,
    pub max_unitality_excess: f64,
    pub max_trace_excess: f64,
    pub semigroup_law_residual: f64,
    /// `(s, ‖α_s(x) − x‖_∞)` for the first probe.
    pub continuity: Vec<(f64, f64)>,
    pub worst_witness: Option<Witness>,
    pub passed: bool,
}

const PROBES: usize = 20;

/// Checks positivity, subunitality and trace non-increase of α_t on the sampled times.
///
/// Positivity is certified by the Choi matrices where they are positive
/// semidefinite; otherwise the report falls back to `PROBES` random positive
/// inputs and sets `sampled_only`.
pub fn validate_absolute_contraction(
    sg: &Semigroup,
    t_samples: &[f64],
    tol: f64,
    seed: u64,
) -> Result<ValidationReport> {
    if let Some(t) = t_samples.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(Error::InvalidParameter(format!(
            "sample time {t} must be >= 0"
        )));
    }
    let alg = sg.algebra();
    let mut sampler = Sampler::new(seed);
    let probes: Vec<Operator> = (0..PROBES)
        .map(|_| {
            let x = sampler.positive(alg);
            let tr = x.trace().re;
            x.scale_real(1.0 / tr)
        })
        .collect();
    let one = Operator::identity(alg);

    let mut rows = Vec::with_capacity(t_samples.len());
    let mut completely_positive = true;
    let mut schur_min: Option<f64> = None;
    let mut worst: Option<Witness> = None;
    let mut note = |t: f64, check: &'static str, value: f64| {
        if value > tol && worst.as_ref().is_none_or(|w| value > w.value) {
            worst = Some(Witness { t, check, value });
        }
    };

    for &t in t_samples {
        let mut choi_min = f64::INFINITY;
        for c in sg.choi_blocks(t)? {
            let scale = c.norm().max(f64::MIN_POSITIVE);
            let sym = (&c + c.adjoint()) * Complex64::new(0.5, 0.0);
            let m = SymmetricEigen::new(sym).eigenvalues.min() / scale;
            choi_min = choi_min.min(m);
        }
        if choi_min < -tol {
            completely_positive = false;
        }
        if let Some(ss) = sg.schur_matrices(t) {
            for s in ss {
                let m = SymmetricEigen::new(s).eigenvalues.min();
                schur_min = Some(schur_min.map_or(m, |v: f64| v.min(m)));
            }
        }

        let mut positivity: f64 = 0.0;
        let mut trace_excess: f64 = 0.0;
        for x in &probes {
            let y = sg.apply(t, x)?;
            let scale = x.norm_inf();
            positivity = positivity.max((-y.min_eigenvalue() / scale).max(0.0));
            positivity = positivity.max(y.hermitian_residual() / scale);
            trace_excess = trace_excess.max((y.trace().re - x.trace().re).max(0.0));
        }
        let unit = sg.apply(t, &one)?;
        let unitality = (&unit - &one).max_eigenvalue().max(0.0);

        note(t, "positivity", positivity);
        note(t, "unitality", unitality);
        note(t, "trace", trace_excess);
        rows.push(ValidationRow {
            t,
            choi_min_eigenvalue: choi_min,
            positivity_violation: positivity,
            unitality_excess: unitality,
            trace_excess,
        });
    }

    let max_of = |f: fn(&ValidationRow) -> f64| rows.iter().map(f).fold(0.0, f64::max);
    let max_positivity_violation = max_of(|r| r.positivity_violation);
    let max_unitality_excess = max_of(|r| r.unitality_excess);
    let max_trace_excess = max_of(|r| r.trace_excess);

    let mut law: f64 = 0.0;
    for w in t_samples.windows(2) {
        law = law.max(semigroup_law_residual(sg, w[0], w[1], &probes[..3])?);
    }
    let continuity = continuity_modulus(sg, &probes[0], f64::INFINITY, t_samples)?;

    Ok(ValidationReport {
        variant: sg.name(),
        t_samples: t_samples.to_vec(),
        rows,
        completely_positive,
        sampled_only: !completely_positive,
        schur_min_eigenvalue: schur_min,
        max_positivity_violation,
        max_unitality_excess,
        max_trace_excess,
        semigroup_law_residual: law,
        continuity,
        worst_witness: worst,
        passed: max_positivity_violation <= tol
            && max_unitality_excess <= tol
            && max_trace_excess <= tol,
    })
}

/// `(s, ‖α_s(x) − x‖_p)` over the grid.
pub fn continuity_modulus(
    sg: &Semigroup,
    x: &Operator,
    p: f64,
    s_grid: &[f64],
) -> Result<Vec<(f64, f64)>> {
    s_grid
        .iter()
        .map(|&s| Ok((s, (&sg.apply(s, x)? - x).pnorm(p)?)))
        .collect()
}

/// max over probes of ‖α_t(α_s(x)) − α_{t+s}(x)‖_∞ / ‖x‖_∞.
pub fn semigroup_law_residual(sg: &Semigroup, t: f64, s: f64, probes: &[Operator]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for x in probes {
        let scale = x.norm_inf();
        if scale == 0.0 {
            continue;
        }
        let lhs = sg.apply(t, &sg.apply(s, x)?)?;
        let rhs = sg.apply(t + s, x)?;
        worst = worst.max(lhs.dist_inf(&rhs) / scale);
    }
    Ok(worst)
}

/// Rate matrix `c_{jk} = scale · |j − k|` for an `n × n` block.
pub fn distance_rates(n: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |j, k| scale * (j as f64 - k as f64).abs())
}

/// `n` log-spaced points from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (a + (b - a) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alg4() -> Arc<TracialAlgebra> {
        TracialAlgebra::new(vec![2, 2], vec![1.0, 0.5]).unwrap()
    }

    #[test]
    fn identity_and_scalar_examples() {
        let alg = alg4();
        let x = Sampler::new(1).operator(&alg);
        let id = Semigroup::new(&alg, SemigroupSpec::Identity).unwrap();
        assert_eq!(id.apply(3.7, &x).unwrap().dist_inf(&x), 0.0);
        let sd = Semigroup::new(&alg, SemigroupSpec::ScalarDecay { rate: 1.0 }).unwrap();
        let y = sd.apply(2f64.ln(), &x).unwrap();
        assert!(y.dist_inf(&x.scale_real(0.5)) < 1e-15);
        assert!(sd.apply(-1.0, &x).is_err());
        assert!(Semigroup::new(&alg, SemigroupSpec::ScalarDecay { rate: -1.0 }).is_err());
    }

    #[test]
    fn zero_time_is_exact_for_every_variant() {
        let alg = alg4();
        let mut s = Sampler::new(2);
        let x = s.operator(&alg);
        for spec in all_variants(&alg, &mut s) {
            let sg = Semigroup::new(&alg, spec).unwrap();
            assert_eq!(
                sg.apply(0.0, &x).unwrap().dist_inf(&x),
                0.0,
                "{}",
                sg.name()
            );
        }
    }

    pub(crate) fn all_variants(alg: &Arc<TracialAlgebra>, s: &mut Sampler) -> Vec<SemigroupSpec> {
        vec![
            SemigroupSpec::Identity,
            SemigroupSpec::ScalarDecay { rate: 0.8 },
            SemigroupSpec::UnitaryFlow {
                hamiltonian: s.hermitian(alg),
            },
            SemigroupSpec::SchurDecay {
                rates: alg.dims().iter().map(|&n| distance_rates(n, 1.0)).collect(),
            },
            SemigroupSpec::GeneratorExp {
                generator: random_lindblad(alg, s, 2, 0.1).unwrap(),
            },
        ]
    }

    #[test]
    fn unitary_flow_preserves_two_norm() {
        let alg = alg4();
        let mut s = Sampler::new(3);
        let sg = Semigroup::new(
            &alg,
            SemigroupSpec::UnitaryFlow {
                hamiltonian: s.hermitian(&alg),
            },
        )
        .unwrap();
        let x = s.operator(&alg);
        for t in [0.1, 1.0, 7.5] {
            let y = sg.apply(t, &x).unwrap();
            assert!((y.pnorm(2.0).unwrap() - x.pnorm(2.0).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn apply_is_linear() {
        let alg = alg4();
        let mut s = Sampler::new(4);
        let x = s.operator(&alg);
        let y = s.operator(&alg);
        let c = Complex64::new(0.3, -1.2);
        for spec in all_variants(&alg, &mut s) {
            let sg = Semigroup::new(&alg, spec).unwrap();
            let mut combo = x.clone();
            combo.axpy(c, &y);
            let lhs = sg.apply(0.7, &combo).unwrap();
            let mut rhs = sg.apply(0.7, &x).unwrap();
            rhs.axpy(c, &sg.apply(0.7, &y).unwrap());
            assert!(lhs.dist_inf(&rhs) < 1e-12, "{}", sg.name());
        }
    }

    #[test]
    fn every_variant_validates_on_log_grid() {
        let alg = alg4();
        let mut s = Sampler::new(5);
        let grid = log_grid(1e-4, 10.0, 12);
        for spec in all_variants(&alg, &mut s) {
            let sg = Semigroup::new(&alg, spec).unwrap();
            let report = validate_absolute_contraction(&sg, &grid, 1e-9, 7).unwrap();
            assert!(report.passed, "{}: {:?}", sg.name(), report.worst_witness);
            assert!(report.completely_positive, "{}", sg.name());
            assert!(report.semigroup_law_residual < 1e-9, "{}", sg.name());
        }
    }

    #[test]
    fn unitary_flow_preserves_trace_exactly() {
        let alg = alg4();
        let mut s = Sampler::new(6);
        let sg = Semigroup::new(
            &alg,
            SemigroupSpec::UnitaryFlow {
                hamiltonian: s.hermitian(&alg),
            },
        )
        .unwrap();
        let report = validate_absolute_contraction(&sg, &[0.5, 2.0], 1e-12, 1).unwrap();
        assert!(report.passed);
        assert!(report.max_trace_excess < 1e-13);
    }

    #[test]
    fn schur_distance_decay_agrees_with_eigenvalue_oracle() {
        let alg = TracialAlgebra::matrix(3).unwrap();
        let sg = Semigroup::new(
            &alg,
            SemigroupSpec::SchurDecay {
                rates: vec![distance_rates(3, 1.0)],
            },
        )
        .unwrap();
        let ts = [0.05, 0.5, 2.0];
        let report = validate_absolute_contraction(&sg, &ts, 1e-10, 3).unwrap();
        // S(t) = [ρ^{|j-k|}] with ρ = e^{-t}. The antisymmetric vector (1, 0, -1)
        // has eigenvalue 1 - ρ²; on the symmetric subspace S reduces to
        // [[1 + ρ², √2ρ], [√2ρ, 1]].
        let oracle = ts
            .iter()
            .map(|&t| {
                let r = (-t).exp();
                let r2 = r * r;
                let sym_min = ((2.0 + r2) - (r2 * r2 + 8.0 * r2).sqrt()) / 2.0;
                (1.0 - r2).min(sym_min)
            })
            .fold(f64::INFINITY, f64::min);
        let measured = report.schur_min_eigenvalue.unwrap();
        assert!((measured - oracle).abs() < 1e-9, "{measured} vs {oracle}");
        assert!(measured > 0.0);
        assert!(report.passed && report.completely_positive);
    }

    #[test]
    fn non_contractive_generator_fails_validation() {
        let alg = TracialAlgebra::matrix(2).unwrap();
        // α_t(x) = e^{t} x grows: unitality and trace both fail.
        let generator = CMatrix::identity(4, 4);
        let sg = Semigroup::new(&alg, SemigroupSpec::GeneratorExp { generator }).unwrap();
        let report = validate_absolute_contraction(&sg, &[0.1, 1.0], 1e-10, 0).unwrap();
        assert!(!report.passed);
        let w = report.worst_witness.unwrap();
        assert_eq!(w.t, 1.0);
        assert!(report.max_unitality_excess > 1.0);
    }

    #[test]
    fn transpose_is_positive_but_not_completely_positive() {
        // L = log of transpose is not available; instead use the generator
        // L(x) = x^T - x, whose flow α_t = e^{-t}(cosh t · x + sinh t · x^T)
        // is positive and unital, but its Choi matrix is not PSD for t > 0.
        let alg = TracialAlgebra::matrix(2).unwrap();
        let generator = map_matrix(&alg, |x| {
            let b = x.block(0).transpose();
            Ok(&Operator::from_blocks(&alg, vec![b]).unwrap() - x)
        })
        .unwrap();
        let sg = Semigroup::new(&alg, SemigroupSpec::GeneratorExp { generator }).unwrap();
        let report = validate_absolute_contraction(&sg, &[0.5, 3.0], 1e-10, 9).unwrap();
        assert!(!report.completely_positive);
        assert!(report.sampled_only);
        assert!(report.passed);
    }

    #[test]
    fn continuity_modulus_examples() {
        let alg = alg4();
        let mut s = Sampler::new(10);
        let x = s.operator(&alg);
        let grid = [0.0, 0.01, 0.1, 1.0];
        let id = Semigroup::new(&alg, SemigroupSpec::Identity).unwrap();
        assert!(continuity_modulus(&id, &x, 2.0, &grid)
            .unwrap()
            .iter()
            .all(|&(_, v)| v == 0.0));

        let sd = Semigroup::new(&alg, SemigroupSpec::ScalarDecay { rate: 1.0 }).unwrap();
        let xp = x.pnorm(1.5).unwrap();
        for (s_, v) in continuity_modulus(&sd, &x, 1.5, &grid).unwrap() {
            assert!((v - (1.0 - (-s_).exp()) * xp).abs() < 1e-13);
        }
    }

    #[test]
    fn continuity_modulus_exponential_bound() {
        // Single block with unit weight: ‖·‖_2 is the Euclidean norm of the
        // vectorisation, so ‖L‖ is the spectral norm of the generator matrix.
        let alg = TracialAlgebra::matrix(3).unwrap();
        let mut s = Sampler::new(12);
        let generator = random_lindblad(&alg, &mut s, 2, 0.2).unwrap();
        let lnorm = generator.clone().singular_values().max();
        let sg = Semigroup::new(&alg, SemigroupSpec::GeneratorExp { generator }).unwrap();
        let x = s.operator(&alg);
        let xn = x.pnorm(2.0).unwrap();
        let grid = log_grid(1e-4, 3.0, 15);
        let table = continuity_modulus(&sg, &x, 2.0, &grid).unwrap();
        assert_eq!(continuity_modulus(&sg, &x, 2.0, &[0.0]).unwrap()[0].1, 0.0);
        for (s_, v) in table {
            let bound = s_ * lnorm * xn * (s_ * lnorm).exp();
            assert!(v <= bound * (1.0 + 1e-12), "s = {s_}: {v} > {bound}");
        }
    }

    #[test]
    fn semigroup_law_examples() {
        let alg = TracialAlgebra::matrix(3).unwrap();
        let mut s = Sampler::new(13);
        let probes: Vec<_> = (0..4).map(|_| s.operator(&alg)).collect();
        let id = Semigroup::new(&alg, SemigroupSpec::Identity).unwrap();
        assert_eq!(semigroup_law_residual(&id, 0.3, 0.4, &probes).unwrap(), 0.0);
        let sd = Semigroup::new(&alg, SemigroupSpec::ScalarDecay { rate: 2.0 }).unwrap();
        assert!(semigroup_law_residual(&sd, 0.3, 0.4, &probes).unwrap() < 1e-13);

        // Arbitrary (non-contractive) generator on a 3-dimensional algebra.
        let alg3 = TracialAlgebra::new(vec![1, 1, 1], vec![1.0, 2.0, 0.5]).unwrap();
        let generator = s.matrix(3);
        let sg = Semigroup::with_cache(
            &alg3,
            SemigroupSpec::GeneratorExp { generator },
            CachePolicy::Disabled,
        )
        .unwrap();
        let probes: Vec<_> = (0..4).map(|_| s.operator(&alg3)).collect();
        for (t, u) in [(0.2, 0.5), (1.0, 1.7), (3.0, 0.01)] {
            assert!(semigroup_law_residual(&sg, t, u, &probes).unwrap() < 1e-9);
        }
    }

    #[test]
    fn extension_norm_bounds() {
        let alg = alg4();
        let mut s = Sampler::new(14);
        let grid = log_grid(1e-3, 10.0, 8);
        for spec in all_variants(&alg, &mut s) {
            let sg = Semigroup::new(&alg, spec).unwrap();
            for _ in 0..10 {
                let x = s.operator(&alg);
                let h = s.hermitian(&alg);
                for &t in &grid {
                    let y = sg.apply(t, &x).unwrap();
                    let yh = sg.apply(t, &h).unwrap();
                    for p in [1.0, 2.0, f64::INFINITY] {
                        assert!(y.pnorm(p).unwrap() <= 2.0 * x.pnorm(p).unwrap() + 1e-12);
                        assert!(yh.pnorm(p).unwrap() <= h.pnorm(p).unwrap() * (1.0 + 1e-10));
                    }
                }
            }
        }
    }

    #[test]
    fn cache_returns_identical_results_under_concurrency() {
        let alg = alg4();
        let mut s = Sampler::new(15);
        let sg = Semigroup::new(
            &alg,
            SemigroupSpec::GeneratorExp {
                generator: random_lindblad(&alg, &mut s, 2, 0.0).unwrap(),
            },
        )
        .unwrap();
        let x = s.operator(&alg);
        let reference = sg.apply(0.37, &x).unwrap();
        std::thread::scope(|scope| {
            for _ in 0..4 {
                scope.spawn(|| {
                    for _ in 0..20 {
                        assert_eq!(sg.apply(0.37, &x).unwrap().dist_inf(&reference), 0.0);
                    }
                });
            }
        });
    }
}
