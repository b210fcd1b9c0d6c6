//! Experiment configuration: JSON or TOML, every field defaulted.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DMatrix;
use ncerg_core::averaging::{BesicovitchWeight, Residual, ResidualKind, TrigTerm};
use ncerg_core::quadrature::QuadratureConfig;
use ncerg_core::random::Sampler;
use ncerg_core::semigroup::{distance_rates, random_lindblad, Semigroup, SemigroupSpec};
use ncerg_core::{CMatrix, Complex64, OperatorJson, Tolerances, TracialAlgebra};
use serde::{Deserialize, Serialize};

use crate::RunError;

/// Largest total matrix size `Σ n_i` accepted.
pub const MAX_TOTAL_DIM: usize = 16;
/// Largest number of points in any grid.
pub const MAX_GRID: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgebraConfig {
    pub dims: Vec<usize>,
    pub weights: Vec<f64>,
}

impl Default for AlgebraConfig {
    fn default() -> Self {
        Self {
            dims: vec![3, 3],
            weights: vec![1.0, 0.5],
        }
    }
}

fn one() -> f64 {
    1.0
}

fn two() -> usize {
    2
}

fn tenth() -> f64 {
    0.1
}

/// Unspecified operators and generators are drawn from the seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case", deny_unknown_fields)]
pub enum SemigroupConfig {
    Identity,
    ScalarDecay {
        #[serde(default = "one")]
        rate: f64,
    },
    UnitaryFlow {
        #[serde(default)]
        hamiltonian: Option<OperatorJson>,
    },
    SchurDecay {
        /// One `n × n` rate matrix per block; defaults to `scale · |j − k|`.
        #[serde(default)]
        rates: Option<Vec<Vec<Vec<f64>>>>,
        #[serde(default = "one")]
        scale: f64,
    },
    GeneratorExp {
        #[serde(default)]
        generator: Option<MatrixJson>,
        /// Random Lindblad generator: number of jump operators and their strength.
        #[serde(default = "two")]
        jumps: usize,
        #[serde(default = "tenth")]
        decay: f64,
    },
}

impl Default for SemigroupConfig {
    fn default() -> Self {
        SemigroupConfig::GeneratorExp {
            generator: None,
            jumps: 2,
            decay: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    fn to_matrix(&self) -> Result<CMatrix, RunError> {
        let n = self.re.len();
        if self.re.iter().any(|r| r.len() != n)
            || !(self.im.is_empty() || (self.im.len() == n && self.im.iter().all(|r| r.len() == n)))
        {
            return Err(RunError::Config("generator must be a square matrix".into()));
        }
        Ok(CMatrix::from_fn(n, n, |i, j| {
            let im = if self.im.is_empty() {
                0.0
            } else {
                self.im[i][j]
            };
            Complex64::new(self.re[i][j], im)
        }))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigTermConfig {
    pub kappa_re: f64,
    #[serde(default)]
    pub kappa_im: f64,
    pub theta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ResidualConfig {
    Zero,
    Constant { amplitude: f64 },
    Linear { amplitude: f64 },
    Cosine { amplitude: f64, frequency: f64 },
    SinInverse { amplitude: f64 },
}

impl ResidualConfig {
    pub fn to_residual(self) -> Residual {
        match self {
            ResidualConfig::Zero => Residual::zero(),
            ResidualConfig::Constant { amplitude } => {
                Residual::new(ResidualKind::Constant, amplitude)
            }
            ResidualConfig::Linear { amplitude } => Residual::new(ResidualKind::Linear, amplitude),
            ResidualConfig::Cosine {
                amplitude,
                frequency,
            } => Residual::new(ResidualKind::Cosine { frequency }, amplitude),
            ResidualConfig::SinInverse { amplitude } => {
                Residual::new(ResidualKind::SinInverse, amplitude)
            }
        }
    }
}

/// `b(t) = Σ κ_j e^{2πiθ_j t} + r(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightConfig {
    pub trig: Vec<TrigTermConfig>,
    pub residual: ResidualConfig,
    pub sup_bound: Option<f64>,
}

impl Default for WeightConfig {
    fn default() -> Self {
        Self {
            trig: vec![
                TrigTermConfig {
                    kappa_re: 0.6,
                    kappa_im: 0.0,
                    theta: 0.0,
                },
                TrigTermConfig {
                    kappa_re: 0.2,
                    kappa_im: 0.1,
                    theta: 1.5,
                },
            ],
            residual: ResidualConfig::Linear { amplitude: 0.15 },
            sup_bound: None,
        }
    }
}

impl WeightConfig {
    pub fn build(&self) -> Result<BesicovitchWeight, RunError> {
        let trig = self
            .trig
            .iter()
            .map(|t| TrigTerm::new(Complex64::new(t.kappa_re, t.kappa_im), t.theta))
            .collect();
        Ok(BesicovitchWeight::new(
            trig,
            self.residual.to_residual(),
            self.sup_bound,
        )?)
    }
}

fn dyadic_grid() -> Vec<f64> {
    (0..=12).map(|j| 0.5f64.powi(j)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algebra: AlgebraConfig,
    pub semigroup: SemigroupConfig,
    pub weight: WeightConfig,
    /// Averaging horizons, strictly decreasing.
    pub t_grid: Vec<f64>,
    /// Horizons for the maximal-inequality suite.
    pub maximal_grid: Vec<f64>,
    /// Horizons for the weighted suite, strictly decreasing; its final quarter stands in for T → 0.
    pub besicovitch_grid: Vec<f64>,
    /// Times at which the semigroup is validated.
    pub validation_times: Vec<f64>,
    /// Values of `a` and `b` for the sandwich suite.
    pub sandwich_grid: Vec<f64>,
    /// Co-trace budget of b.a.u. certificates, as a fraction of `τ(1)`.
    pub epsilon: f64,
    pub maximal_epsilons: Vec<f64>,
    pub banach_epsilon: f64,
    /// Approximants generated by the banach suite.
    pub banach_approximants: usize,
    pub p: f64,
    /// Constant of the maximal inequality; the full suite uses the measured one.
    pub c: f64,
    pub alpha: f64,
    /// Final decay of certified families, relative to `‖x‖_∞`.
    pub decay_tol: f64,
    /// Perturbation levels for the transfer check, relative to `‖x‖_∞`.
    pub transfer_epsilons: Vec<f64>,
    /// Threshold for the local-mean error of the weight.
    pub besicovitch_tail_max: f64,
    /// Random operators per check.
    pub samples: usize,
    /// Cases in the randomized weighted-average sweep.
    pub sweep_cases: usize,
    pub quadrature: QuadratureConfig,
    pub tolerances: Tolerances,
    pub seed: u64,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algebra: AlgebraConfig::default(),
            semigroup: SemigroupConfig::default(),
            weight: WeightConfig::default(),
            t_grid: dyadic_grid(),
            maximal_grid: ncerg_core::semigroup::log_grid(1e-5, 10.0, 48),
            besicovitch_grid: ncerg_core::semigroup::log_grid(1.0, 1e-5, 48),
            validation_times: vec![0.0, 0.01, 0.1, 0.5, 1.0, 2.0, 5.0],
            sandwich_grid: vec![0.05, 0.3, 1.0],
            epsilon: 0.1,
            maximal_epsilons: vec![0.5, 0.2, 0.1],
            banach_epsilon: 0.3,
            banach_approximants: 6,
            p: 1.0,
            c: 1.0,
            alpha: 1.0,
            decay_tol: 1e-3,
            transfer_epsilons: vec![0.1, 0.01, 0.001],
            besicovitch_tail_max: 0.05,
            samples: 20,
            sweep_cases: 200,
            quadrature: QuadratureConfig::default(),
            tolerances: Tolerances::default(),
            seed: 0,
            out: None,
        }
    }
}

fn check_grid(name: &str, grid: &[f64], allow_zero: bool) -> Result<(), RunError> {
    if grid.is_empty() || grid.len() > MAX_GRID {
        return Err(RunError::Config(format!(
            "{name} needs 1..={MAX_GRID} points"
        )));
    }
    let ok = |t: &f64| t.is_finite() && (*t > 0.0 || (allow_zero && *t == 0.0));
    if !grid.iter().all(ok) {
        return Err(RunError::Config(format!(
            "{name} must contain finite positive values"
        )));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Reads JSON or TOML, chosen by file extension.
    pub fn load(path: &Path) -> Result<Self, RunError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        let cfg: Self = match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => toml::from_str(&text).map_err(|e| RunError::Config(e.to_string()))?,
            Some("json") => {
                serde_json::from_str(&text).map_err(|e| RunError::Config(e.to_string()))?
            }
            other => {
                return Err(RunError::Config(format!(
                    "unknown config extension {other:?}; use .json or .toml"
                )))
            }
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), RunError> {
        let a = &self.algebra;
        if a.dims.is_empty() || a.dims.contains(&0) || a.dims.iter().sum::<usize>() > MAX_TOTAL_DIM
        {
            return Err(RunError::Config(format!(
                "block sizes must be >= 1 and sum to at most {MAX_TOTAL_DIM}"
            )));
        }
        for (name, grid) in [
            ("t_grid", &self.t_grid),
            ("besicovitch_grid", &self.besicovitch_grid),
        ] {
            check_grid(name, grid, false)?;
            if grid.len() < 2 || grid.windows(2).any(|w| w[1] >= w[0]) {
                return Err(RunError::Config(format!(
                    "{name} must be strictly decreasing with >= 2 points"
                )));
            }
        }
        check_grid("maximal_grid", &self.maximal_grid, false)?;
        check_grid("validation_times", &self.validation_times, true)?;
        check_grid("sandwich_grid", &self.sandwich_grid, false)?;
        check_grid("maximal_epsilons", &self.maximal_epsilons, false)?;
        check_grid("transfer_epsilons", &self.transfer_epsilons, false)?;
        let positive = [
            ("epsilon", self.epsilon),
            ("banach_epsilon", self.banach_epsilon),
            ("c", self.c),
            ("alpha", self.alpha),
            ("decay_tol", self.decay_tol),
            ("besicovitch_tail_max", self.besicovitch_tail_max),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(RunError::Config(format!(
                    "{name} must be positive (got {v})"
                )));
            }
        }
        if self.epsilon > 1.0 {
            return Err(RunError::Config(
                "epsilon is a fraction of τ(1) and must be <= 1".into(),
            ));
        }
        if !(self.p >= 1.0) {
            return Err(RunError::Config(format!("p must be >= 1 (got {})", self.p)));
        }
        if self.samples == 0 || self.sweep_cases == 0 || self.banach_approximants == 0 {
            return Err(RunError::Config(
                "samples, sweep_cases and banach_approximants must be >= 1".into(),
            ));
        }
        self.quadrature
            .validate()
            .map_err(|e| RunError::Config(e.to_string()))?;
        Ok(())
    }

    pub fn build_algebra(&self) -> Result<Arc<TracialAlgebra>, RunError> {
        Ok(TracialAlgebra::new(
            self.algebra.dims.clone(),
            self.algebra.weights.clone(),
        )?)
    }

    /// Random pieces are drawn from a stream reserved for the semigroup.
    pub fn build_semigroup(&self, alg: &Arc<TracialAlgebra>) -> Result<Semigroup, RunError> {
        let mut sampler = Sampler::new(crate::stream_seed(self.seed, "semigroup"));
        let spec = match &self.semigroup {
            SemigroupConfig::Identity => SemigroupSpec::Identity,
            SemigroupConfig::ScalarDecay { rate } => SemigroupSpec::ScalarDecay { rate: *rate },
            SemigroupConfig::UnitaryFlow { hamiltonian } => SemigroupSpec::UnitaryFlow {
                hamiltonian: match hamiltonian {
                    Some(h) => h.to_operator_in(alg)?,
                    None => sampler.hermitian(alg),
                },
            },
            SemigroupConfig::SchurDecay { rates, scale } => SemigroupSpec::SchurDecay {
                rates: match rates {
                    Some(r) => r
                        .iter()
                        .map(|m| {
                            let n = m.len();
                            if m.iter().any(|row| row.len() != n) {
                                return Err(RunError::Config(
                                    "rate matrices must be square".into(),
                                ));
                            }
                            Ok(DMatrix::from_fn(n, n, |i, j| m[i][j]))
                        })
                        .collect::<Result<_, _>>()?,
                    None => alg
                        .dims()
                        .iter()
                        .map(|&n| distance_rates(n, *scale))
                        .collect(),
                },
            },
            SemigroupConfig::GeneratorExp {
                generator,
                jumps,
                decay,
            } => SemigroupSpec::GeneratorExp {
                generator: match generator {
                    Some(g) => g.to_matrix()?,
                    None => random_lindblad(alg, &mut sampler, *jumps, *decay)?,
                },
            },
        };
        Ok(Semigroup::new(alg, spec)?)
    }
}
