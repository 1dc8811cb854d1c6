//! Random operators and states for property tests and randomized checks.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::operator::{Complex, Operator};

fn gaussian_complex<R: Rng + ?Sized>(rng: &mut R) -> Complex {
    Complex::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

/// Hermitian matrix with independent Gaussian entries (GUE-like, unnormalized).
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, scale: f64, rng: &mut R) -> Operator {
    let g = Operator::from_fn(dim, |_, _| gaussian_complex(rng));
    (&g + &g.adjoint()).scale(Complex::new(0.5 * scale, 0.0))
}

/// Haar-distributed unit vector.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DVector<Complex> {
    let v = DVector::from_fn(dim, |_, _| gaussian_complex(rng));
    let n = v.norm();
    v / Complex::new(n, 0.0)
}

/// Random full-rank density matrix `G G^dag / Tr[G G^dag]`.
pub fn random_density<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let g = Operator::from_fn(dim, |_, _| gaussian_complex(rng));
    let w = &g * &g.adjoint();
    let tr = w.trace().re;
    w.scale(Complex::new(1.0 / tr, 0.0))
}
