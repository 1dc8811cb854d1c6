//! Detection signals of a phase-controlled time-domain interferometer and the
//! classicality discriminator built on them.
//!
//! A photon scattered at `t1` or `t2` reaches the detector through two
//! indistinguishable channels. For a pure target state the channel amplitudes
//! are `D(p,t_j)|psi>`, and the central-pulse detection probability is
//!
//! ```text
//! P(p, phi) = f(t)^2 || D(p,t1)|psi> + exp(i phi) D(p,t2)|psi> ||^2
//!           = f(t)^2 ( S(p,t1,t1) + S(p,t2,t2) + 2 Re[exp(i phi) S(p,t1,t2)] )
//! ```
//!
//! Mixed states average this over their spectral decomposition. Intensities
//! are in arbitrary units: all prefactors of the scattering amplitude drop out.

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::correlations::{isf, IsfEstimate, IsfSource};
use crate::error::{Result, TdiError};
use crate::model::{density_fourier, MomentumTransfer, TargetModel};
use crate::operator::{Complex, I};
use crate::tolerances::Tolerances;
use crate::{neg, Vec3};

/// Temporal envelope `f(t)` of the detected pulse.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EnvelopeModel {
    #[default]
    Unit,
    /// `exp(-t^2 / (2 width^2))`
    Gaussian { width: f64 },
    /// `Theta(t) exp(-t / lifetime)`
    Exponential { lifetime: f64 },
}

impl EnvelopeModel {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64, what: &str| {
            if x.is_finite() && x > 0.0 {
                Ok(())
            } else {
                Err(TdiError::InvalidParameter(format!("envelope {what} must be positive, got {x}")))
            }
        };
        match *self {
            Self::Unit => Ok(()),
            Self::Gaussian { width } => positive(width, "width"),
            Self::Exponential { lifetime } => positive(lifetime, "lifetime"),
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Self::Unit => 1.0,
            Self::Gaussian { width } => (-t * t / (2.0 * width * width)).exp(),
            Self::Exponential { lifetime } => {
                if t >= 0.0 {
                    (-t / lifetime).exp()
                } else {
                    0.0
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TdiConfig {
    pub p: MomentumTransfer,
    pub t1: f64,
    pub t2: f64,
    pub phi: f64,
    #[serde(default)]
    pub envelope: EnvelopeModel,
}

impl TdiConfig {
    pub fn new(p: MomentumTransfer, t1: f64, t2: f64, phi: f64) -> Self {
        Self { p, t1, t2, phi, envelope: EnvelopeModel::Unit }
    }

    pub fn with_envelope(mut self, envelope: EnvelopeModel) -> Self {
        self.envelope = envelope;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.p.iter().any(|x| !x.is_finite()) || !self.phi.is_finite() {
            return Err(TdiError::NonFinite("TDI configuration".into()));
        }
        if !(self.t1.is_finite() && self.t2.is_finite() && self.t2 >= self.t1) {
            return Err(TdiError::InvalidParameter(format!(
                "scattering times must satisfy t2 >= t1 (t1={}, t2={})",
                self.t1, self.t2
            )));
        }
        self.envelope.validate()
    }
}

/// Channel amplitudes `(weight, D(p,ta)|psi_k>, D(p,tb)|psi_k>)` for every
/// pure component of the initial state.
struct ChannelAmplitudes(Vec<(f64, DVector<Complex>, DVector<Complex>)>);

impl ChannelAmplitudes {
    fn new(model: &TargetModel, p: &MomentumTransfer, ta: f64, tb: f64) -> Self {
        let da = density_fourier(model, p, ta);
        let db = density_fourier(model, p, tb);
        Self(model.pure_components().into_iter().map(|(w, psi)| (w, da.apply(&psi), db.apply(&psi))).collect())
    }

    /// `sum_k w_k || a_k + exp(i theta) b_k ||^2`.
    fn probability(&self, theta: f64) -> f64 {
        let phase = (I * theta).exp();
        self.0.iter().map(|(w, a, b)| w * (a + b * phase).norm_squared()).sum()
    }
}

/// Amplitude-level detection probability (arbitrary units).
pub fn detection_probability(model: &TargetModel, cfg: &TdiConfig, t: f64) -> Result<f64> {
    cfg.validate()?;
    let f = cfg.envelope.value(t);
    Ok(f * f * ChannelAmplitudes::new(model, &cfg.p, cfg.t1, cfg.t2).probability(cfg.phi))
}

/// Closed-form detection probability, printed form versus interference algebra.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormulaComparison {
    /// `S11 + S22 + 2 cos(phi) S12^R - sin(phi) S12^I`
    pub literal: f64,
    /// `S11 + S22 + 2 cos(phi) S12^R - 2 sin(phi) S12^I`
    pub derived: f64,
    /// Direct amplitude evaluation.
    pub amplitude: f64,
    /// `literal - derived`, equal to `sin(phi) S12^I`.
    pub difference: f64,
}

pub fn detection_probability_formula(model: &TargetModel, cfg: &TdiConfig, t: f64) -> Result<FormulaComparison> {
    cfg.validate()?;
    let f2 = cfg.envelope.value(t).powi(2);
    let s11 = isf(model, &cfg.p, cfg.t1, cfg.t1).value;
    let s22 = isf(model, &cfg.p, cfg.t2, cfg.t2).value;
    let s12 = isf(model, &cfg.p, cfg.t1, cfg.t2).value;
    let (sin, cos) = cfg.phi.sin_cos();
    let diag = s11.re + s22.re;
    let literal = f2 * (diag + 2.0 * cos * s12.re - sin * s12.im);
    let derived = f2 * (diag + 2.0 * cos * s12.re - 2.0 * sin * s12.im);
    let amplitude = detection_probability(model, cfg, t)?;
    Ok(FormulaComparison { literal, derived, amplitude, difference: literal - derived })
}

/// `I+- = P(+p) +- P(-p)` at unit envelope, amplitude level.
pub fn intensity_pm(model: &TargetModel, p: &MomentumTransfer, t1: f64, t2: f64, phi: f64) -> (f64, f64) {
    let plus = ChannelAmplitudes::new(model, p, t1, t2).probability(phi);
    let minus = ChannelAmplitudes::new(model, &neg(p), t1, t2).probability(phi);
    (plus + minus, plus - minus)
}

/// Classical predictions for the intensity sum and difference, in the same
/// normalization as the printed forms:
/// `I+ = sum_j S(p,tj,tj) + 2 cos(phi) S^R(p,t1,t2)` and
/// `I- = -2 sin(phi) S^I(p,t1,t2)`.
///
/// For a source obeying `S(p)^* = S(-p)`, [`intensity_pm`] equals exactly
/// twice these values.
pub fn classical_intensity_pm(s_diag: [Complex; 2], s12: Complex, phi: f64) -> (f64, f64) {
    let (sin, cos) = phi.sin_cos();
    (s_diag[0].re + s_diag[1].re + 2.0 * cos * s12.re, -2.0 * sin * s12.im)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub phi: f64,
    pub i_plus: f64,
    pub i_minus: f64,
    pub i_plus_stderr: f64,
    pub i_minus_stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanMeta {
    pub model_id: String,
    pub p: MomentumTransfer,
    pub t1: f64,
    pub t2: f64,
    pub stochastic: bool,
    /// `(period, samples)` when rows are averaged over `t1`.
    pub t1_average: Option<(f64, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseScan {
    pub meta: ScanMeta,
    pub rows: Vec<ScanRow>,
}

impl PhaseScan {
    pub fn phis(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.phi).collect()
    }
}

fn check_phi_grid(phis: &[f64]) -> Result<()> {
    if phis.is_empty() {
        return Err(TdiError::InvalidGrid("phase grid is empty".into()));
    }
    if phis.iter().any(|x| !x.is_finite()) {
        return Err(TdiError::InvalidGrid("phase grid has non-finite entries".into()));
    }
    if phis.windows(2).any(|w| w[1] <= w[0]) {
        return Err(TdiError::InvalidGrid("phase grid must be strictly increasing".into()));
    }
    Ok(())
}

/// Rows of `(I+, I-)` and their standard errors at fixed `(t1, t2)`.
fn scan_rows(source: &IsfSource<'_>, p: &MomentumTransfer, t1: f64, t2: f64, phis: &[f64]) -> Result<Vec<ScanRow>> {
    match *source {
        IsfSource::Quantum(model) => {
            let plus = ChannelAmplitudes::new(model, p, t1, t2);
            let minus = ChannelAmplitudes::new(model, &neg(p), t1, t2);
            Ok(phis
                .iter()
                .map(|&phi| {
                    let (a, b) = (plus.probability(phi), minus.probability(phi));
                    ScanRow { phi, i_plus: a + b, i_minus: a - b, i_plus_stderr: 0.0, i_minus_stderr: 0.0 }
                })
                .collect())
        }
        IsfSource::Classical { .. } => {
            let (d1p, d1m) = source.evaluate_pm(p, t1, t1)?;
            let (d2p, d2m) = source.evaluate_pm(p, t2, t2)?;
            let (xp, xm) = source.evaluate_pm(p, t1, t2)?;
            let prob = |d1: &IsfEstimate, d2: &IsfEstimate, x: &IsfEstimate, phi: f64| {
                let value = d1.value.re + d2.value.re + 2.0 * ((I * phi).exp() * x.value).re;
                // complex-mean stderr bounds the stderr of any real projection
                let se = (d1.stderr.powi(2) + d2.stderr.powi(2) + 4.0 * x.stderr.powi(2)).sqrt();
                (value, se)
            };
            Ok(phis
                .iter()
                .map(|&phi| {
                    let (a, sa) = prob(&d1p, &d2p, &xp, phi);
                    let (b, sb) = prob(&d1m, &d2m, &xm, phi);
                    let se = sa.hypot(sb);
                    ScanRow { phi, i_plus: a + b, i_minus: a - b, i_plus_stderr: se, i_minus_stderr: se }
                })
                .collect())
        }
    }
}

/// Phase scan of a quantum target.
pub fn phase_scan(model: &TargetModel, p: &MomentumTransfer, t1: f64, t2: f64, phis: &[f64]) -> Result<PhaseScan> {
    phase_scan_source(&IsfSource::Quantum(model), p, t1, t2, phis)
}

pub fn phase_scan_source(
    source: &IsfSource<'_>,
    p: &MomentumTransfer,
    t1: f64,
    t2: f64,
    phis: &[f64],
) -> Result<PhaseScan> {
    check_phi_grid(phis)?;
    TdiConfig::new(*p, t1, t2, 0.0).validate()?;
    let rows = scan_rows(source, p, t1, t2, phis)?;
    finite_rows(&rows)?;
    let meta = ScanMeta {
        model_id: source.id().to_string(),
        p: *p,
        t1,
        t2,
        stochastic: source.is_stochastic(),
        t1_average: None,
    };
    Ok(PhaseScan { meta, rows })
}

/// Phase scan at fixed delay `dt`, averaged uniformly over `samples` values of
/// `t1` spanning one `period` (starting at `t1 = 0`).
pub fn phase_scan_averaged(
    source: &IsfSource<'_>,
    p: &MomentumTransfer,
    dt: f64,
    phis: &[f64],
    period: f64,
    samples: usize,
) -> Result<PhaseScan> {
    check_phi_grid(phis)?;
    if !(period.is_finite() && period > 0.0) {
        return Err(TdiError::InvalidParameter(format!("averaging period must be positive, got {period}")));
    }
    if samples < 16 {
        return Err(TdiError::InvalidParameter(format!("t1 averaging needs at least 16 samples, got {samples}")));
    }
    TdiConfig::new(*p, 0.0, dt, 0.0).validate()?;
    let n = samples as f64;
    let mut acc: Vec<ScanRow> = phis
        .iter()
        .map(|&phi| ScanRow { phi, i_plus: 0.0, i_minus: 0.0, i_plus_stderr: 0.0, i_minus_stderr: 0.0 })
        .collect();
    for k in 0..samples {
        let t1 = period * k as f64 / n;
        for (a, r) in acc.iter_mut().zip(scan_rows(source, p, t1, t1 + dt, phis)?) {
            a.i_plus += r.i_plus / n;
            a.i_minus += r.i_minus / n;
            // independent estimates per t1 sample: variances add
            a.i_plus_stderr += r.i_plus_stderr.powi(2);
            a.i_minus_stderr += r.i_minus_stderr.powi(2);
        }
    }
    for a in &mut acc {
        a.i_plus_stderr = a.i_plus_stderr.sqrt() / n;
        a.i_minus_stderr = a.i_minus_stderr.sqrt() / n;
    }
    finite_rows(&acc)?;
    let meta = ScanMeta {
        model_id: source.id().to_string(),
        p: *p,
        t1: 0.0,
        t2: dt,
        stochastic: source.is_stochastic(),
        t1_average: Some((period, samples)),
    };
    Ok(PhaseScan { meta, rows: acc })
}

fn finite_rows(rows: &[ScanRow]) -> Result<()> {
    if rows.iter().any(|r| !(r.i_plus.is_finite() && r.i_minus.is_finite())) {
        return Err(TdiError::NonFinite("phase scan intensities".into()));
    }
    Ok(())
}

/// Least-squares fit `y(phi) = a0 + a_c cos(phi) + a_s sin(phi)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicFit {
    pub a0: f64,
    pub a_c: f64,
    pub a_s: f64,
}

/// Fit coefficients plus the linear weights mapping data to `a_s`.
pub fn harmonic_fit(phis: &[f64], values: &[f64]) -> Result<(HarmonicFit, Vec<f64>)> {
    if phis.len() != values.len() {
        return Err(TdiError::InvalidGrid(format!("{} phases but {} values", phis.len(), values.len())));
    }
    if phis.len() < 3 {
        return Err(TdiError::InvalidGrid("harmonic fit needs at least 3 phases".into()));
    }
    let x = DMatrix::from_fn(phis.len(), 3, |i, j| match j {
        0 => 1.0,
        1 => phis[i].cos(),
        _ => phis[i].sin(),
    });
    let normal: Matrix3<f64> = (x.transpose() * &x).fixed_view::<3, 3>(0, 0).into_owned();
    let inv = normal
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .ok_or_else(|| TdiError::InvalidGrid("phase grid does not determine {1, cos, sin}".into()))?;
    // pseudo-inverse rows: beta = inv * X^T y
    let pinv = DMatrix::from_fn(3, phis.len(), |r, i| (0..3).map(|k| inv[(r, k)] * x[(i, k)]).sum::<f64>());
    let y = DVector::from_column_slice(values);
    let beta = Vector3::from_iterator((&pinv * y).iter().copied());
    let weights = pinv.row(2).iter().copied().collect();
    Ok((HarmonicFit { a0: beta[0], a_c: beta[1], a_s: beta[2] }, weights))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub fit: HarmonicFit,
    /// `|a_s|` of the `I+` harmonic fit.
    pub a_s_abs: f64,
    pub a_s_stderr: f64,
    pub a_s_threshold: f64,
    pub max_abs_i_minus_at_npi: f64,
    /// Threshold at the row attaining the largest `|I-| / threshold` ratio.
    pub i_minus_threshold: f64,
    pub excluded_by_i_minus: bool,
    pub excluded_by_a_s: bool,
    pub algebraic_tol: f64,
    pub statistical_sigma: f64,
    pub n_phases: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub classical_excluded: bool,
    pub evidence: Evidence,
}

/// Minimum number of phases the discriminator accepts (0, pi and four more).
pub const MIN_DISCRIMINATOR_PHASES: usize = 6;

fn is_multiple_of_pi(phi: f64) -> bool {
    let k = phi / std::f64::consts::PI;
    (k - k.round()).abs() < 1e-9
}

/// Checks that a grid can feed [`discriminate`].
pub fn check_discriminator_grid(phis: &[f64]) -> Result<()> {
    check_phi_grid(phis)?;
    let has = |target: f64| phis.iter().any(|&p| (p - target).abs() < 1e-9);
    if !has(0.0) || !has(std::f64::consts::PI) {
        return Err(TdiError::InvalidGrid("discriminator needs phi = 0 and phi = pi in the grid".into()));
    }
    if phis.len() < MIN_DISCRIMINATOR_PHASES {
        return Err(TdiError::InvalidGrid(format!(
            "discriminator needs at least {MIN_DISCRIMINATOR_PHASES} phases, got {}",
            phis.len()
        )));
    }
    Ok(())
}

/// Rules out a classical target if `I-` is nonzero at a multiple of pi, or if
/// `I+` carries a `sin(phi)` component.
pub fn discriminate(scan: &PhaseScan, tol: &Tolerances) -> Result<Verdict> {
    let phis = scan.phis();
    check_discriminator_grid(&phis)?;
    let i_plus: Vec<f64> = scan.rows.iter().map(|r| r.i_plus).collect();
    let (fit, weights) = harmonic_fit(&phis, &i_plus)?;
    // rows may be fully correlated (shared MC estimates), so bound linearly
    let a_s_stderr: f64 = weights.iter().zip(&scan.rows).map(|(w, r)| w.abs() * r.i_plus_stderr).sum();
    let a_s_threshold = tol.algebraic_tol + tol.statistical_sigma * a_s_stderr;
    let excluded_by_a_s = fit.a_s.abs() > a_s_threshold;

    let mut max_abs = 0.0;
    let mut worst_threshold = tol.algebraic_tol;
    let mut worst_ratio = f64::NEG_INFINITY;
    let mut excluded_by_i_minus = false;
    for r in scan.rows.iter().filter(|r| is_multiple_of_pi(r.phi)) {
        let threshold = tol.algebraic_tol + tol.statistical_sigma * r.i_minus_stderr;
        let ratio = r.i_minus.abs() / threshold;
        if r.i_minus.abs() > max_abs {
            max_abs = r.i_minus.abs();
        }
        if ratio > worst_ratio {
            worst_ratio = ratio;
            worst_threshold = threshold;
        }
        excluded_by_i_minus |= r.i_minus.abs() > threshold;
    }

    let evidence = Evidence {
        fit,
        a_s_abs: fit.a_s.abs(),
        a_s_stderr,
        a_s_threshold,
        max_abs_i_minus_at_npi: max_abs,
        i_minus_threshold: worst_threshold,
        excluded_by_i_minus,
        excluded_by_a_s,
        algebraic_tol: tol.algebraic_tol,
        statistical_sigma: tol.statistical_sigma,
        n_phases: phis.len(),
    };
    if [evidence.a_s_abs, evidence.a_s_threshold, evidence.max_abs_i_minus_at_npi].iter().any(|x| !x.is_finite()) {
        return Err(TdiError::NonFinite("discriminator evidence".into()));
    }
    Ok(Verdict { classical_excluded: excluded_by_i_minus || excluded_by_a_s, evidence })
}

/// Time-resolved Mössbauer-foil signal
/// `I(t) = h(t)^2 || D(p,0)|psi> + exp(i(Omega_D t + phi)) D(p,t)|psi> ||^2`
/// with `h(t) = Theta(t) exp(-t / lifetime)`; the prompt pulse arrives at `t = 0`.
pub fn moessbauer_signal(
    model: &TargetModel,
    p: &Vec3,
    t_grid: &[f64],
    lifetime: f64,
    omega_d: f64,
    phi: f64,
) -> Result<Vec<f64>> {
    let envelope = EnvelopeModel::Exponential { lifetime };
    envelope.validate()?;
    if !(omega_d.is_finite() && phi.is_finite()) {
        return Err(TdiError::NonFinite("Doppler frequency or phase".into()));
    }
    if t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(TdiError::InvalidGrid("time grid must be finite and nonnegative".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(TdiError::InvalidGrid("time grid must be strictly increasing".into()));
    }
    let prompt = density_fourier(model, p, 0.0);
    let components = model.pure_components();
    let prompt_amps: Vec<_> = components.iter().map(|(_, psi)| prompt.apply(psi)).collect();
    let out: Vec<f64> = t_grid
        .iter()
        .map(|&t| {
            let late = density_fourier(model, p, t);
            let phase = (I * (omega_d * t + phi)).exp();
            let h = envelope.value(t);
            let prob: f64 = components
                .iter()
                .zip(&prompt_amps)
                .map(|((w, psi), a)| w * (a + late.apply(psi) * phase).norm_squared())
                .sum();
            h * h * prob
        })
        .collect();
    if out.iter().any(|x| !x.is_finite()) {
        return Err(TdiError::NonFinite("Moessbauer signal".into()));
    }
    Ok(out)
}
