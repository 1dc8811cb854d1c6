//! Dynamical couple-correlation function (DCF) and intermediate scattering
//! function (ISF) of discrete-site targets, plus the conjugation-symmetry
//! checks that separate quantum from classical behaviour.
//!
//! For sites `r_n` the DCF is the sum over pairs with `r_m - r_n = r` of
//! `Tr[mu(t1) rho_n rho_m(t2 - t1)]`, and the ISF is evaluated independently
//! as `Tr[mu D(p,t1)^dag D(p,t2)]`.

use serde::{Deserialize, Serialize};

use crate::classical::{classical_isf_family, ClassicalModel, MCEstimate};
use crate::error::Result;
use crate::model::{density_fourier, MomentumTransfer, TargetModel};
use crate::operator::{heisenberg, trace_product, Complex, I};
use crate::tolerances::Tolerances;
use crate::{dot, neg, Vec3};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsfValue {
    pub value: Complex,
    pub p: MomentumTransfer,
    pub t1: f64,
    pub t2: f64,
}

/// Outcome of a symmetry check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryCheck {
    pub holds: bool,
    pub residual: f64,
    pub threshold: f64,
}

impl SymmetryCheck {
    fn new(residual: f64, threshold: f64) -> Self {
        Self { holds: residual < threshold, residual, threshold }
    }
}

/// DCF `G(r, t1, t2)`; zero when no site pair is separated by `r`.
pub fn dcf(model: &TargetModel, r: &Vec3, t1: f64, t2: f64) -> Complex {
    let pairs = model.lattice().pairs_with_separation(r);
    if pairs.is_empty() {
        return Complex::new(0.0, 0.0);
    }
    let mu_t1 = model.density_at(t1);
    let u = model.propagator(t2 - t1);
    let ops = model.lattice().site_ops();
    pairs
        .iter()
        .map(|&(n, m)| {
            let late = heisenberg(&ops[m], &u).expect("validated dims");
            trace_product(&mu_t1, &ops[n], &late).expect("validated dims")
        })
        .sum()
}

/// DCF at every lattice separation, in [`SiteLattice::separations`] order.
///
/// [`SiteLattice::separations`]: crate::model::SiteLattice::separations
pub fn dcf_all(model: &TargetModel, t1: f64, t2: f64) -> Vec<(Vec3, Complex)> {
    model.lattice().separations().into_iter().map(|r| (r, dcf(model, &r, t1, t2))).collect()
}

/// ISF `S(p, t1, t2) = Tr[mu D(p,t1)^dag D(p,t2)]`.
pub fn isf(model: &TargetModel, p: &MomentumTransfer, t1: f64, t2: f64) -> IsfValue {
    let d1 = density_fourier(model, p, t1);
    let d2 = density_fourier(model, p, t2);
    let value = trace_product(model.density(), &d1.adjoint(), &d2).expect("validated dims");
    IsfValue { value, p: *p, t1, t2 }
}

/// Discrete Fourier sum `sum_r G(r, t1, t2) exp(i p.r)` over lattice separations.
pub fn isf_from_dcf(model: &TargetModel, p: &MomentumTransfer, t1: f64, t2: f64) -> Complex {
    dcf_all(model, t1, t2).into_iter().map(|(r, g)| g * (I * dot(p, &r)).exp()).sum()
}

/// Quantum ISF symmetry: `S(p,t1,t2)^* = S(p,t2,t1)`.
pub fn check_quantum_symmetry(model: &TargetModel, p: &MomentumTransfer, t1: f64, t2: f64, tol: f64) -> SymmetryCheck {
    let a = isf(model, p, t1, t2).value.conj();
    let b = isf(model, p, t2, t1).value;
    SymmetryCheck::new((a - b).norm(), tol)
}

/// Quantum DCF symmetry: `G(r,t1,t2)^* = G(-r,t2,t1)`.
pub fn check_dcf_symmetry(model: &TargetModel, r: &Vec3, t1: f64, t2: f64, tol: f64) -> SymmetryCheck {
    let a = dcf(model, r, t1, t2).conj();
    let b = dcf(model, &neg(r), t2, t1);
    SymmetryCheck::new((a - b).norm(), tol)
}

/// Where ISF values come from: exact quantum evaluation or classical Monte Carlo.
#[derive(Clone, Copy, Debug)]
pub enum IsfSource<'a> {
    Quantum(&'a TargetModel),
    Classical { model: &'a ClassicalModel, n_traj: usize },
}

/// An ISF value with its standard error (zero for exact sources).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsfEstimate {
    pub value: Complex,
    pub stderr: f64,
}

impl From<MCEstimate> for IsfEstimate {
    fn from(e: MCEstimate) -> Self {
        Self { value: e.mean, stderr: e.stderr }
    }
}

impl IsfSource<'_> {
    pub fn is_stochastic(&self) -> bool {
        matches!(self, Self::Classical { .. })
    }

    pub fn id(&self) -> &str {
        match self {
            Self::Quantum(m) => m.id(),
            Self::Classical { .. } => "classical-ctmc",
        }
    }

    /// ISF at `p`, drawing Monte Carlo samples from substream `family`.
    ///
    /// Classical evaluation requires `t2 >= t1 >= 0`.
    pub fn evaluate(&self, p: &MomentumTransfer, t1: f64, t2: f64, family: u64) -> Result<IsfEstimate> {
        match *self {
            Self::Quantum(m) => Ok(IsfEstimate { value: isf(m, p, t1, t2).value, stderr: 0.0 }),
            Self::Classical { model, n_traj } => Ok(classical_isf_family(model, p, t1, t2, n_traj, family)?.into()),
        }
    }

    /// ISF at `+p` and `-p`. Monte Carlo estimates for the two momenta use
    /// independent substreams, as two separate measurements would.
    pub fn evaluate_pm(&self, p: &MomentumTransfer, t1: f64, t2: f64) -> Result<(IsfEstimate, IsfEstimate)> {
        Ok((self.evaluate(p, t1, t2, 0)?, self.evaluate(&neg(p), t1, t2, 1)?))
    }
}

/// Classical ISF symmetry: `S(p,t1,t2)^* = S(-p,t1,t2)`.
///
/// The threshold is `algebraic_tol`, widened by `statistical_sigma` combined
/// standard errors when the source is stochastic.
pub fn check_classical_symmetry(
    source: &IsfSource<'_>,
    p: &MomentumTransfer,
    t1: f64,
    t2: f64,
    tol: &Tolerances,
) -> Result<SymmetryCheck> {
    let (plus, minus) = source.evaluate_pm(p, t1, t2)?;
    let residual = (plus.value.conj() - minus.value).norm();
    let stderr = plus.stderr.hypot(minus.stderr);
    Ok(SymmetryCheck::new(residual, tol.algebraic_tol + tol.statistical_sigma * stderr))
}
