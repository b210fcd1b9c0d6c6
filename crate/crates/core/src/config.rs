use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by every module.
///
/// | field | default | meaning |
/// |---|---|---|
/// | `positivity` | `1e-10` | `x >= 0` iff min eigenvalue of the Hermitian part is `>= -positivity * ‖x‖` |
/// | `self_adjoint` | `1e-10` | relative bound on `‖x - x*‖` |
/// | `projection` | `1e-8` | absolute bound on `‖p² - p‖` and `‖p - p*‖` |
/// | `spectral_tie` | `1e-12` | eigenvalues `<= level + spectral_tie` are kept by a spectral cut |
/// | `meet_singular` | `1e-8` | null-space singular value threshold (scaled by block dimension) in the meet |
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub positivity: f64,
    pub self_adjoint: f64,
    pub projection: f64,
    pub spectral_tie: f64,
    pub meet_singular: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            positivity: 1e-10,
            self_adjoint: 1e-10,
            projection: 1e-8,
            spectral_tie: 1e-12,
            meet_singular: 1e-8,
        }
    }
}
