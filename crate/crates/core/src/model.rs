//! Discrete-site quantum targets.
//!
//! A target is a set of site positions `r_n` with one site-density operator
//! `rho_n` each, a Hamiltonian, and an initial state. The spatial Fourier
//! operator is
//!
//! ```text
//! D(p, t) = sum_n exp(i p.r_n) U(t)^dag rho_n U(t)
//! ```
//!
//! so that `Tr[mu D(p,t1)^dag D(p,t2)]` is the ISF with an `exp(+i p.r)`
//! kernel.

use nalgebra::DVector;

use crate::error::{Result, TdiError};
use crate::operator::{heisenberg, Complex, HermitianEigen, Operator, I, MAX_DIM};
use crate::tolerances::{ALGEBRAIC_TOL, POSITION_TOL};
use crate::{dot, sub, Vec3};

pub type MomentumTransfer = Vec3;

fn close(a: &Vec3, b: &Vec3, tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
}

#[derive(Clone, Debug)]
pub struct SiteLattice {
    sites: Vec<Vec3>,
    site_ops: Vec<Operator>,
}

impl SiteLattice {
    pub fn new(sites: Vec<Vec3>, site_ops: Vec<Operator>) -> Result<Self> {
        if sites.is_empty() {
            return Err(TdiError::InvalidParameter("lattice needs at least one site".into()));
        }
        if sites.len() != site_ops.len() {
            return Err(TdiError::InvalidParameter(format!(
                "{} sites but {} site operators",
                sites.len(),
                site_ops.len()
            )));
        }
        if sites.iter().flatten().any(|x| !x.is_finite()) {
            return Err(TdiError::NonFinite("site positions".into()));
        }
        for (i, a) in sites.iter().enumerate() {
            if let Some(j) = sites[i + 1..].iter().position(|b| close(a, b, POSITION_TOL)) {
                return Err(TdiError::InvalidParameter(format!("sites {i} and {} coincide at {a:?}", i + 1 + j)));
            }
        }
        let dim = site_ops[0].dim();
        for op in &site_ops {
            op.ensure_dim(dim)?;
            let min = op.eigh(ALGEBRAIC_TOL)?.min_eigenvalue();
            if min < -ALGEBRAIC_TOL {
                return Err(TdiError::Positivity { eigenvalue: min });
            }
        }
        Ok(Self { sites, site_ops })
    }

    /// One particle, one basis state per site, `rho_n = |n><n|`.
    pub fn single_particle(sites: Vec<Vec3>) -> Result<Self> {
        let n = sites.len();
        let ops = (0..n).map(|k| Operator::projector(n, k)).collect();
        Self::new(sites, ops)
    }

    pub fn sites(&self) -> &[Vec3] {
        &self.sites
    }

    pub fn site_ops(&self) -> &[Operator] {
        &self.site_ops
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.site_ops[0].dim()
    }

    /// Distinct separation vectors `r_m - r_n` over all ordered site pairs,
    /// in first-seen order (n outer, m inner).
    pub fn separations(&self) -> Vec<Vec3> {
        let mut out: Vec<Vec3> = Vec::new();
        for a in &self.sites {
            for b in &self.sites {
                let r = sub(b, a);
                if !out.iter().any(|s| close(s, &r, POSITION_TOL)) {
                    out.push(r);
                }
            }
        }
        out
    }

    /// Ordered pairs `(n, m)` with `r_m - r_n = r` within the position tolerance.
    pub fn pairs_with_separation(&self, r: &Vec3) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (n, a) in self.sites.iter().enumerate() {
            for (m, b) in self.sites.iter().enumerate() {
                if close(&sub(b, a), r, POSITION_TOL) {
                    out.push((n, m));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub enum InitialState {
    Density(Operator),
    Pure(DVector<Complex>),
}

impl InitialState {
    pub fn dim(&self) -> usize {
        match self {
            Self::Density(mu) => mu.dim(),
            Self::Pure(psi) => psi.len(),
        }
    }

    pub fn to_density(&self) -> Operator {
        match self {
            Self::Density(mu) => mu.clone(),
            Self::Pure(psi) => Operator::outer(psi),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TargetModel {
    id: String,
    lattice: SiteLattice,
    hamiltonian: Operator,
    spectrum: HermitianEigen,
    initial: InitialState,
    mu: Operator,
    reference: Vec3,
}

impl TargetModel {
    pub fn new(lattice: SiteLattice, hamiltonian: Operator, initial: InitialState) -> Result<Self> {
        let dim = lattice.dim();
        if dim > MAX_DIM {
            return Err(TdiError::DimTooLarge(dim));
        }
        hamiltonian.ensure_dim(dim)?;
        let spectrum = hamiltonian.eigh(ALGEBRAIC_TOL)?;
        let reference = match lattice.sites() {
            [a, b, ..] => sub(b, a),
            _ => [1.0, 0.0, 0.0],
        };
        let (initial, mu) = validate_initial(initial, dim)?;
        Ok(Self { id: "custom".into(), lattice, hamiltonian, spectrum, initial, mu, reference })
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    /// Replaces the initial state, keeping lattice and dynamics.
    pub fn with_initial(mut self, initial: InitialState) -> Result<Self> {
        let (initial, mu) = validate_initial(initial, self.dim())?;
        self.initial = initial;
        self.mu = mu;
        Ok(self)
    }

    /// Vector `d` used to express a scalar `p.d` as a momentum transfer.
    pub fn with_reference(mut self, d: Vec3) -> Self {
        self.reference = d;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn lattice(&self) -> &SiteLattice {
        &self.lattice
    }

    pub fn hamiltonian(&self) -> &Operator {
        &self.hamiltonian
    }

    pub fn spectrum(&self) -> &HermitianEigen {
        &self.spectrum
    }

    pub fn initial(&self) -> &InitialState {
        &self.initial
    }

    pub fn reference(&self) -> Vec3 {
        self.reference
    }

    /// Momentum transfer along the reference vector with `p.d = pd`.
    pub fn momentum_for(&self, pd: f64) -> MomentumTransfer {
        let d = self.reference;
        let n2 = dot(&d, &d);
        [pd * d[0] / n2, pd * d[1] / n2, pd * d[2] / n2]
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    /// Initial density matrix `mu`.
    pub fn density(&self) -> &Operator {
        &self.mu
    }

    pub fn propagator(&self, t: f64) -> Operator {
        self.spectrum.propagator(t)
    }

    /// `mu(t) = U(t) mu U(t)^dag`.
    pub fn density_at(&self, t: f64) -> Operator {
        let u = self.propagator(t);
        &(&u * &self.mu) * &u.adjoint()
    }

    /// Pure-state ensemble `{(weight, psi)}` whose mixture is `mu`.
    /// Mixed states are spectrally decomposed; zero-weight components are dropped.
    pub fn pure_components(&self) -> Vec<(f64, DVector<Complex>)> {
        match &self.initial {
            InitialState::Pure(psi) => vec![(1.0, psi.clone())],
            InitialState::Density(mu) => {
                let eig = mu.eigh(ALGEBRAIC_TOL).expect("validated density matrix");
                eig.values().iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(k, &w)| (w, eig.vector(k))).collect()
            }
        }
    }
}

fn validate_initial(initial: InitialState, dim: usize) -> Result<(InitialState, Operator)> {
    if initial.dim() != dim {
        return Err(TdiError::DimMismatch { expected: dim, found: initial.dim() });
    }
    if let InitialState::Pure(psi) = &initial {
        let norm = psi.norm();
        if !norm.is_finite() || (norm - 1.0).abs() >= ALGEBRAIC_TOL {
            return Err(TdiError::NotDensity(format!("pure state norm is {norm}")));
        }
    }
    let mu = initial.to_density();
    mu.check_density(ALGEBRAIC_TOL)?;
    Ok((initial, mu))
}

/// Single particle in a double well: `|L>` at `-d/2`, `|R>` at `+d/2`,
/// `H = -(omega/2)(|L><R| + |R><L|)` and `mu = [[P_L, Gamma], [Gamma*, 1 - P_L]]`.
pub fn build_double_well(omega: f64, d: Vec3, p_l: f64, gamma: Complex) -> Result<TargetModel> {
    if !omega.is_finite() || !p_l.is_finite() || !gamma.re.is_finite() || !gamma.im.is_finite() {
        return Err(TdiError::NonFinite("double-well parameters".into()));
    }
    if !(0.0..=1.0).contains(&p_l) {
        return Err(TdiError::InvalidParameter(format!("P_L = {p_l} is outside [0, 1]")));
    }
    let half = [d[0] / 2.0, d[1] / 2.0, d[2] / 2.0];
    let lattice = SiteLattice::single_particle(vec![[-half[0], -half[1], -half[2]], half])?;
    let hop = Complex::new(-omega / 2.0, 0.0);
    let h = Operator::from_fn(2, |i, j| if i != j { hop } else { Complex::new(0.0, 0.0) });
    let mu = Operator::from_fn(2, |i, j| match (i, j) {
        (0, 0) => Complex::new(p_l, 0.0),
        (1, 1) => Complex::new(1.0 - p_l, 0.0),
        (0, 1) => gamma,
        _ => gamma.conj(),
    });
    let min = mu.eigh(ALGEBRAIC_TOL)?.min_eigenvalue();
    if min < -ALGEBRAIC_TOL {
        return Err(TdiError::Positivity { eigenvalue: min });
    }
    Ok(TargetModel::new(lattice, h, InitialState::Density(mu))?.with_id("doublewell").with_reference(d))
}

/// Single particle on `n` sites at `k * spacing * x`, nearest-neighbour hopping
/// with amplitude `-hop`, starting on site 0.
pub fn build_chain(n: usize, hop: f64, spacing: f64) -> Result<TargetModel> {
    if !(2..=MAX_DIM).contains(&n) {
        return Err(TdiError::InvalidParameter(format!("chain length {n} outside [2, {MAX_DIM}]")));
    }
    if !hop.is_finite() || !spacing.is_finite() || spacing == 0.0 {
        return Err(TdiError::InvalidParameter(format!("bad chain hop={hop} spacing={spacing}")));
    }
    let sites = (0..n).map(|k| [k as f64 * spacing, 0.0, 0.0]).collect();
    let lattice = SiteLattice::single_particle(sites)?;
    let h =
        Operator::from_fn(n, |i, j| if i.abs_diff(j) == 1 { Complex::new(-hop, 0.0) } else { Complex::new(0.0, 0.0) });
    let mut psi = DVector::zeros(n);
    psi[0] = Complex::new(1.0, 0.0);
    Ok(TargetModel::new(lattice, h, InitialState::Pure(psi))?.with_id("chain").with_reference([spacing, 0.0, 0.0]))
}

/// `D(p, t) = sum_n exp(i p.r_n) U(t)^dag rho_n U(t)`.
pub fn density_fourier(model: &TargetModel, p: &MomentumTransfer, t: f64) -> Operator {
    let lattice = model.lattice();
    let mut acc = Operator::zeros(model.dim());
    for (r, rho) in lattice.sites().iter().zip(lattice.site_ops()) {
        let phase = (I * dot(p, r)).exp();
        acc = &acc + &rho.scale(phase);
    }
    heisenberg(&acc, &model.propagator(t)).expect("dims validated at construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const D: Vec3 = [1.0, 0.0, 0.0];

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn double_well_pure_left() {
        let m = build_double_well(1.0, D, 1.0, c(0.0, 0.0)).unwrap();
        assert!(m.density().max_abs_diff(&Operator::projector(2, 0)) < 1e-15);
        assert_eq!(m.lattice().sites(), &[[-0.5, 0.0, 0.0], [0.5, 0.0, 0.0]]);
    }

    #[test]
    fn double_well_plus_state_is_pure() {
        let m = build_double_well(1.0, D, 0.5, c(0.5, 0.0)).unwrap();
        let mu = m.density();
        assert!((mu * mu).max_abs_diff(mu) < 1e-15);
        let comps = m.pure_components();
        assert_eq!(comps.len(), 1);
        let (w, psi) = &comps[0];
        assert!((w - 1.0).abs() < 1e-12);
        // |psi> = (|L> + |R>)/sqrt2 up to a global phase
        assert!((psi[0].norm() - 0.5f64.sqrt()).abs() < 1e-12);
        assert!((psi[0] - psi[1]).norm() < 1e-12);
    }

    #[test]
    fn double_well_positivity_violation() {
        match build_double_well(1.0, D, 0.5, c(0.6, 0.0)) {
            Err(TdiError::Positivity { eigenvalue }) => assert!((eigenvalue + 0.1).abs() < 1e-12),
            other => panic!("expected positivity error, got {other:?}"),
        }
        assert!(build_double_well(1.0, D, 1.2, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn two_site_chain_matches_double_well_spectrum() {
        let chain = build_chain(2, 0.5, 1.0).unwrap();
        let dw = build_double_well(1.0, D, 1.0, c(0.0, 0.0)).unwrap();
        let a = chain.spectrum().sorted_values();
        let b = dw.spectrum().sorted_values();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn frozen_chain() {
        let chain = build_chain(3, 0.0, 1.0).unwrap();
        assert!(chain.propagator(7.3).max_abs_diff(&Operator::identity(3)) < 1e-15);
        assert!(chain.density_at(7.3).max_abs_diff(chain.density()) < 1e-15);
    }

    #[test]
    fn four_site_chain_spectrum() {
        // path-graph oracle: -2 hop cos(k pi / (n + 1)), k = 1..n
        let chain = build_chain(4, 1.0, 1.0).unwrap();
        let mut oracle: Vec<f64> = (1..=4).map(|k| -2.0 * (k as f64 * PI / 5.0).cos()).collect();
        oracle.sort_by(f64::total_cmp);
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        let frozen = [-golden, -(golden - 1.0), golden - 1.0, golden];
        for ((x, y), z) in chain.spectrum().sorted_values().iter().zip(&oracle).zip(&frozen) {
            assert!((x - y).abs() < 1e-13);
            assert!((y - z).abs() < 1e-14);
        }
    }

    #[test]
    fn chain_length_bounds() {
        assert!(build_chain(1, 1.0, 1.0).is_err());
        assert!(build_chain(65, 1.0, 1.0).is_err());
        assert!(build_chain(64, 1.0, 1.0).is_ok());
    }

    #[test]
    fn fourier_at_zero_momentum_is_identity() {
        let dw = build_double_well(1.0, D, 0.7, c(0.1, 0.2)).unwrap();
        assert!(density_fourier(&dw, &[0.0; 3], 2.3).max_abs_diff(&Operator::identity(2)) < 1e-14);
        let chain = build_chain(3, 0.8, 1.0).unwrap();
        assert!(density_fourier(&chain, &[0.0; 3], 4.1).max_abs_diff(&Operator::identity(3)) < 1e-14);
    }

    #[test]
    fn fourier_phase_arithmetic() {
        let dw = build_double_well(1.0, D, 1.0, c(0.0, 0.0)).unwrap();
        let d = density_fourier(&dw, &[2.0 * PI, 0.0, 0.0], 0.0);
        assert!(d.max_abs_diff(&Operator::identity(2).scale(c(-1.0, 0.0))) < 1e-15);
    }

    #[test]
    fn fourier_adjoint_flips_momentum() {
        let chain = build_chain(4, 0.7, 1.3).unwrap();
        let p = [0.9, 0.2, -0.4];
        let a = density_fourier(&chain, &p, 1.1).adjoint();
        let b = density_fourier(&chain, &[-0.9, -0.2, 0.4], 1.1);
        assert!(a.max_abs_diff(&b) < 1e-12);
    }

    #[test]
    fn separations_of_chain() {
        let chain = build_chain(3, 1.0, 2.0).unwrap();
        let seps = chain.lattice().separations();
        assert_eq!(seps.len(), 5);
        assert_eq!(chain.lattice().pairs_with_separation(&[2.0, 0.0, 0.0]), vec![(0, 1), (1, 2)]);
        assert_eq!(chain.lattice().pairs_with_separation(&[0.0; 3]).len(), 3);
        assert!(chain.lattice().pairs_with_separation(&[1.0, 0.0, 0.0]).is_empty());
    }

    #[test]
    fn lattice_validation() {
        assert!(SiteLattice::single_particle(vec![[0.0; 3], [0.0; 3]]).is_err());
        let bad = Operator::projector(2, 0).scale(c(-1.0, 0.0));
        assert!(SiteLattice::new(vec![[0.0; 3], [1.0, 0.0, 0.0]], vec![Operator::projector(2, 0), bad]).is_err());
        assert!(SiteLattice::new(vec![[0.0; 3]], vec![]).is_err());
    }

    #[test]
    fn pure_initial_state_must_be_normalized() {
        let chain = build_chain(2, 1.0, 1.0).unwrap();
        let psi = DVector::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(chain.with_initial(InitialState::Pure(psi)).is_err());
    }

    #[test]
    fn momentum_along_reference() {
        let dw = build_double_well(1.0, [0.0, 2.0, 0.0], 1.0, c(0.0, 0.0)).unwrap();
        let p = dw.momentum_for(PI);
        assert!((dot(&p, &dw.reference()) - PI).abs() < 1e-15);
    }
}
