//! Seeded random operators for tests and experiments.

use std::sync::Arc;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::{CMatrix, Operator, Projection, TracialAlgebra};

/// Deterministic sampler; the same seed always yields the same draws.
#[derive(Debug, Clone)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    pub fn complex_normal(&mut self) -> Complex64 {
        Complex64::new(self.normal(), self.normal()) / 2f64.sqrt()
    }

    pub fn matrix(&mut self, n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| self.complex_normal())
    }

    pub fn unit_vector(&mut self, n: usize) -> DVector<Complex64> {
        let v = DVector::from_fn(n, |_, _| self.complex_normal());
        let norm = v.norm();
        v / Complex64::new(norm, 0.0)
    }

    /// Ginibre operator, entries of unit variance scaled by 1/√n per block.
    pub fn operator(&mut self, alg: &Arc<TracialAlgebra>) -> Operator {
        let blocks = alg
            .dims()
            .iter()
            .map(|&n| self.matrix(n) / Complex64::new((n as f64).sqrt(), 0.0))
            .collect();
        Operator::from_blocks(alg, blocks).expect("shapes follow the algebra")
    }

    pub fn hermitian(&mut self, alg: &Arc<TracialAlgebra>) -> Operator {
        self.operator(alg).hermitian_part()
    }

    /// `g* g` for a Ginibre `g`.
    pub fn positive(&mut self, alg: &Arc<TracialAlgebra>) -> Operator {
        let g = self.operator(alg);
        &g.adjoint() * &g
    }

    /// Haar-ish unitary from the QR factorisation of a Ginibre matrix.
    pub fn unitary(&mut self, alg: &Arc<TracialAlgebra>) -> Operator {
        let blocks = alg
            .dims()
            .iter()
            .map(|&n| {
                let qr = self.matrix(n).qr();
                let r = qr.r();
                let mut q = qr.q();
                for k in 0..n {
                    let d = r[(k, k)];
                    let phase = if d.norm() > 0.0 {
                        d / d.norm()
                    } else {
                        Complex64::new(1.0, 0.0)
                    };
                    let col = q.column(k) * phase;
                    q.set_column(k, &col);
                }
                q
            })
            .collect();
        Operator::from_blocks(alg, blocks).expect("shapes follow the algebra")
    }

    /// Random projection with the given rank in each block.
    pub fn projection(&mut self, alg: &Arc<TracialAlgebra>, ranks: &[usize]) -> Projection {
        let cols: Vec<Vec<_>> = alg
            .dims()
            .iter()
            .zip(ranks)
            .map(|(&n, &r)| (0..r.min(n)).map(|_| self.unit_vector(n)).collect())
            .collect();
        Projection::from_spanning_columns(alg, &cols).expect("one list per block")
    }
}
