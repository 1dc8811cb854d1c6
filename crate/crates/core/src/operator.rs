//! Dense complex operators on small Hilbert spaces and exact unitary evolution.
//!
//! Everything works in natural units (hbar = 1): a Hermitian generator `H`
//! produces the propagator `U(t) = exp(-i H t)`, states evolve as
//! `mu -> U mu U^dag` and observables in the Heisenberg picture as
//! `A -> U^dag A U`.

use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Result, TdiError};
use crate::tolerances::ALGEBRAIC_TOL;

pub type Complex = Complex64;

/// Largest Hilbert-space dimension accepted by the eigensolver paths.
pub const MAX_DIM: usize = 64;

pub(crate) const I: Complex = Complex::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq)]
pub struct Operator(DMatrix<Complex>);

impl Operator {
    pub fn from_matrix(m: DMatrix<Complex>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(TdiError::DimMismatch { expected: m.nrows(), found: m.ncols() });
        }
        if m.nrows() == 0 {
            return Err(TdiError::InvalidParameter("operator dimension must be positive".into()));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(TdiError::NonFinite("operator entries".into()));
        }
        Ok(Self(m))
    }

    /// Builds an operator from row-major nested rows.
    pub fn from_rows(rows: &[Vec<Complex>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(TdiError::DimMismatch { expected: n, found: bad.len() });
        }
        Self::from_matrix(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> Complex) -> Self {
        Self(DMatrix::from_fn(dim, dim, f))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    /// `|i><j|` in a `dim`-dimensional space.
    pub fn ket_bra(dim: usize, i: usize, j: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(i, j)] = Complex::new(1.0, 0.0);
        Self(m)
    }

    /// Projector onto basis state `k`.
    pub fn projector(dim: usize, k: usize) -> Self {
        Self::ket_bra(dim, k, k)
    }

    /// `|v><v|` for a (not necessarily normalized) vector.
    pub fn outer(v: &DVector<Complex>) -> Self {
        Self(v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<Complex> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<Complex> {
        self.0
    }

    pub fn get(&self, i: usize, j: usize) -> Complex {
        self.0[(i, j)]
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn trace(&self) -> Complex {
        self.0.trace()
    }

    pub fn scale(&self, c: Complex) -> Self {
        Self(&self.0 * c)
    }

    pub fn apply(&self, v: &DVector<Complex>) -> DVector<Complex> {
        &self.0 * v
    }

    /// Max-entry norm of `self - other`.
    pub fn max_abs_diff(&self, other: &Operator) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn ensure_dim(&self, expected: usize) -> Result<()> {
        if self.dim() == expected {
            Ok(())
        } else {
            Err(TdiError::DimMismatch { expected, found: self.dim() })
        }
    }

    pub fn hermiticity_residual(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn unitarity_residual(&self) -> f64 {
        let prod = Self(self.0.adjoint() * &self.0);
        prod.max_abs_diff(&Self::identity(self.dim()))
    }

    pub fn check_hermitian(&self, tol: f64) -> Result<()> {
        let residual = self.hermiticity_residual();
        if residual < tol {
            Ok(())
        } else {
            Err(TdiError::NotHermitian { residual })
        }
    }

    pub fn check_unitary(&self, tol: f64) -> Result<()> {
        let residual = self.unitarity_residual();
        if residual < tol {
            Ok(())
        } else {
            Err(TdiError::NotUnitary { residual })
        }
    }

    /// Hermitian, unit trace and no eigenvalue below `-tol`.
    pub fn check_density(&self, tol: f64) -> Result<()> {
        self.check_hermitian(tol)?;
        let tr = self.trace();
        if (tr - Complex::new(1.0, 0.0)).norm() >= tol {
            return Err(TdiError::NotDensity(format!("trace is {tr}")));
        }
        let min = self.eigh(tol)?.min_eigenvalue();
        if min < -tol {
            return Err(TdiError::Positivity { eigenvalue: min });
        }
        Ok(())
    }

    /// Eigendecomposition of a Hermitian operator.
    pub fn eigh(&self, tol: f64) -> Result<HermitianEigen> {
        HermitianEigen::new(self, tol)
    }
}

impl Mul for &Operator {
    type Output = Operator;

    fn mul(self, rhs: &Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl Add for &Operator {
    type Output = Operator;

    fn add(self, rhs: &Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl Sub for &Operator {
    type Output = Operator;

    fn sub(self, rhs: &Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

/// Spectral decomposition `A = V diag(lambda) V^dag` of a Hermitian operator.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    values: Vec<f64>,
    vectors: DMatrix<Complex>,
}

impl HermitianEigen {
    pub fn new(a: &Operator, tol: f64) -> Result<Self> {
        if a.dim() > MAX_DIM {
            return Err(TdiError::DimTooLarge(a.dim()));
        }
        a.check_hermitian(tol)?;
        // symmetrize so rounding-level asymmetry does not leak into the solver
        let sym = (a.matrix() + a.matrix().adjoint()) * Complex::new(0.5, 0.0);
        let eig = sym.symmetric_eigen();
        Ok(Self { values: eig.eigenvalues.iter().copied().collect(), vectors: eig.eigenvectors })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn vectors(&self) -> &DMatrix<Complex> {
        &self.vectors
    }

    pub fn vector(&self, k: usize) -> DVector<Complex> {
        self.vectors.column(k).into_owned()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Eigenvalues in ascending order.
    pub fn sorted_values(&self) -> Vec<f64> {
        let mut v = self.values.clone();
        v.sort_by(f64::total_cmp);
        v
    }

    /// `V diag(g(lambda)) V^dag`.
    pub fn map(&self, g: impl Fn(f64) -> Complex) -> Operator {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (k, &lam) in self.values.iter().enumerate() {
            let w = g(lam);
            for i in 0..n {
                scaled[(i, k)] *= w;
            }
        }
        Operator(scaled * self.vectors.adjoint())
    }

    /// `exp(-i A t)` when `A` is the Hamiltonian.
    pub fn propagator(&self, t: f64) -> Operator {
        self.map(|lam| (-I * lam * t).exp())
    }
}

/// `U(t) = exp(-i H t)` via Hermitian eigendecomposition.
pub fn expm_hermitian(h: &Operator, t: f64) -> Result<Operator> {
    expm_hermitian_tol(h, t, ALGEBRAIC_TOL)
}

pub fn expm_hermitian_tol(h: &Operator, t: f64, tol: f64) -> Result<Operator> {
    if !t.is_finite() {
        return Err(TdiError::NonFinite("evolution time".into()));
    }
    Ok(HermitianEigen::new(h, tol)?.propagator(t))
}

/// Schrodinger-picture state update `U mu U^dag`.
pub fn evolve_density(mu: &Operator, u: &Operator) -> Result<Operator> {
    u.ensure_dim(mu.dim())?;
    Ok(&(u * mu) * &u.adjoint())
}

/// Heisenberg-picture operator `U^dag A U`.
pub fn heisenberg(a: &Operator, u: &Operator) -> Result<Operator> {
    u.ensure_dim(a.dim())?;
    Ok(&(&u.adjoint() * a) * u)
}

/// `Tr[mu A B]`.
pub fn trace_product(mu: &Operator, a: &Operator, b: &Operator) -> Result<Complex> {
    a.ensure_dim(mu.dim())?;
    b.ensure_dim(mu.dim())?;
    // Tr[mu A B] = sum_ij (mu A)_ij B_ji, avoids forming the full triple product
    let ma = mu * a;
    let n = mu.dim();
    let mut acc = Complex::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            acc += ma.get(i, j) * b.get(j, i);
        }
    }
    Ok(acc)
}

/// Pauli matrices and two-level helpers.
pub mod pauli {
    use super::{Operator, I};

    pub fn sigma_x() -> Operator {
        &Operator::ket_bra(2, 0, 1) + &Operator::ket_bra(2, 1, 0)
    }

    pub fn sigma_y() -> Operator {
        &Operator::ket_bra(2, 0, 1).scale(-I) + &Operator::ket_bra(2, 1, 0).scale(I)
    }

    pub fn sigma_z() -> Operator {
        &Operator::projector(2, 0) - &Operator::projector(2, 1)
    }
}

#[cfg(test)]
mod tests {
    use super::pauli::*;
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn rabi(omega: f64) -> Operator {
        sigma_x().scale(c(-omega / 2.0, 0.0))
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let u = expm_hermitian(&Operator::zeros(3), 5.0).unwrap();
        assert!(u.max_abs_diff(&Operator::identity(3)) < 1e-15);
    }

    #[test]
    fn rabi_full_period_is_minus_identity() {
        let u = expm_hermitian(&rabi(1.0), 2.0 * PI).unwrap();
        assert!(u.max_abs_diff(&Operator::identity(2).scale(c(-1.0, 0.0))) < 1e-14);
    }

    #[test]
    fn rabi_half_period_swaps_with_phase_i() {
        let u = expm_hermitian(&rabi(1.0), PI).unwrap();
        assert!(u.max_abs_diff(&sigma_x().scale(I)) < 1e-14);
        // |L> -> i|R>
        assert!((u.get(1, 0) - I).norm() < 1e-14);
    }

    #[test]
    fn expm_rejects_non_hermitian() {
        let a = Operator::ket_bra(2, 0, 1);
        match expm_hermitian(&a, 1.0) {
            Err(TdiError::NotHermitian { residual }) => assert!((residual - 1.0).abs() < 1e-15),
            other => panic!("expected NotHermitian, got {other:?}"),
        }
    }

    #[test]
    fn expm_rejects_oversized() {
        assert!(matches!(expm_hermitian(&Operator::zeros(MAX_DIM + 1), 1.0), Err(TdiError::DimTooLarge(65))));
    }

    #[test]
    fn expm_unitarity_at_max_dim() {
        let h = Operator::from_fn(MAX_DIM, |i, j| {
            let x = ((i * 7 + j * 13) % 11) as f64 - 5.0;
            let y = if i == j { 0.0 } else { ((i + 3 * j) % 5) as f64 - 2.0 };
            if i <= j {
                c(x + (i + j) as f64 * 0.01, y)
            } else {
                c(0.0, 0.0)
            }
        });
        let h = &h + &h.adjoint();
        let u = expm_hermitian(&h, 0.73).unwrap();
        assert!(u.unitarity_residual() < 1e-12);
    }

    #[test]
    fn evolve_density_examples() {
        let mu = Operator::projector(2, 0);
        let out = evolve_density(&mu, &Operator::identity(2)).unwrap();
        assert_eq!(out, mu);

        let out = evolve_density(&mu, &sigma_x().scale(I)).unwrap();
        assert!(out.max_abs_diff(&Operator::projector(2, 1)) < 1e-15);

        let mixed = Operator::identity(2).scale(c(0.5, 0.0));
        let u = expm_hermitian(&(&sigma_x() + &sigma_z().scale(c(0.3, 0.0))), 1.7).unwrap();
        assert!(evolve_density(&mixed, &u).unwrap().max_abs_diff(&mixed) < 1e-15);
    }

    #[test]
    fn heisenberg_examples() {
        let pl = Operator::projector(2, 0);
        assert_eq!(heisenberg(&pl, &Operator::identity(2)).unwrap(), pl);
        let out = heisenberg(&pl, &sigma_x().scale(I)).unwrap();
        assert!(out.max_abs_diff(&Operator::projector(2, 1)) < 1e-15);
        let u = expm_hermitian(&sigma_y(), 0.4).unwrap();
        assert!(heisenberg(&Operator::identity(2), &u).unwrap().max_abs_diff(&Operator::identity(2)) < 1e-15);
    }

    #[test]
    fn trace_product_examples() {
        let mu = Operator::projector(2, 0);
        let id = Operator::identity(2);
        assert_eq!(trace_product(&mu, &id, &id).unwrap(), c(1.0, 0.0));
        let pl = Operator::projector(2, 0);
        let pr = Operator::projector(2, 1);
        assert_eq!(trace_product(&mu, &pl, &pr).unwrap(), c(0.0, 0.0));

        let plus = (&id + &sigma_x()).scale(c(0.5, 0.0));
        let b = &(&sigma_x() * &pl) * &sigma_x();
        // B = |R><R| and |L><L||R><R| = 0
        assert!(trace_product(&plus, &pl, &b).unwrap().norm() < 1e-15);
        // Tr[mu |L><L| sx] = mu_RL = 1/2
        assert!((trace_product(&plus, &pl, &sigma_x()).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn dim_mismatch_is_rejected() {
        let a = Operator::identity(2);
        let b = Operator::identity(3);
        assert!(matches!(heisenberg(&a, &b), Err(TdiError::DimMismatch { expected: 2, found: 3 })));
        assert!(evolve_density(&a, &b).is_err());
        assert!(trace_product(&a, &a, &b).is_err());
    }

    #[test]
    fn density_checks() {
        assert!(Operator::projector(3, 1).check_density(1e-10).is_ok());
        let bad = Operator::from_rows(&[vec![c(0.5, 0.0), c(0.6, 0.0)], vec![c(0.6, 0.0), c(0.5, 0.0)]]).unwrap();
        assert!(matches!(bad.check_density(1e-10), Err(TdiError::Positivity { .. })));
        assert!(Operator::identity(2).check_density(1e-10).is_err());
    }

    #[test]
    fn from_rows_rejects_ragged_and_nan() {
        assert!(Operator::from_rows(&[vec![c(1.0, 0.0)], vec![]]).is_err());
        assert!(Operator::from_rows(&[vec![c(f64::NAN, 0.0)]]).is_err());
    }
}
