//! Closed-form correlations of a single particle in a double well, evaluated
//! as printed and next to the exact numeric evaluation.
//!
//! With `S = sin(W dt/2)`, `C = cos(W dt/2)`, `S' = sin(W dt)` and the state
//! `mu = [[P_L, Gamma], [Gamma*, P_R]]` at the first time argument, the
//! printed closed forms are
//!
//! ```text
//! G(+d)  = S^2 P_L + (i/2) S' Gamma*
//! G(-d)  = S^2 P_R + (i/2) S' Gamma
//! G(0)   = C - i S' Gamma^R
//! S(p)   = S^2 cos(pd) + C^2
//!          + i { (P_L - P_R) S^2 sin(pd) + (S'/2) [Gamma^I sin(pd) + Gamma^R (cos(pd) - 2)] }
//! Gbar(+-d) = S/2 + (i/2) S' Gamma^R
//! Gbar(0)   = C - i S' Gamma^R
//! Sbar(p)   = S^2 cos(pd) + C^2 + (i/2)(cos(pd) - 2) S' Gamma^R
//! ```
//!
//! The oracle side is computed from the operator definitions with
//! `U = exp(-iHt)` and `rho(t) = U^dag rho U`. Under that convention the exact
//! values are `G(+d) = S^2 P_L - (i/2) S' Gamma*`, `G(0) = C^2 + i S' Gamma^R`
//! and so on, so the printed forms and the oracle disagree in places. Every
//! function here returns both, and downstream checks key off the oracle.

use serde::{Deserialize, Serialize};

use crate::correlations::{dcf, isf};
use crate::error::{Result, TdiError};
use crate::model::{build_double_well, TargetModel};
use crate::operator::{Complex, I};
use crate::tolerances::{ALGEBRAIC_TOL, POSITION_TOL};
use crate::{dot, Vec3};

/// Uniform `t1` samples per period for time averages.
pub const AVERAGE_SAMPLES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleWellState {
    pub p_l: f64,
    pub gamma: Complex,
    pub omega: f64,
    pub d: Vec3,
}

impl DoubleWellState {
    pub fn new(p_l: f64, gamma: Complex, omega: f64, d: Vec3) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_l) {
            return Err(TdiError::InvalidParameter(format!("P_L = {p_l} is outside [0, 1]")));
        }
        if gamma.norm_sqr() > p_l * (1.0 - p_l) + ALGEBRAIC_TOL {
            return Err(TdiError::InvalidParameter(format!(
                "|Gamma|^2 = {} exceeds P_L P_R = {}",
                gamma.norm_sqr(),
                p_l * (1.0 - p_l)
            )));
        }
        Ok(Self { p_l, gamma, omega, d })
    }

    pub fn p_r(&self) -> f64 {
        1.0 - self.p_l
    }

    /// Target model whose initial state is this state.
    pub fn model(&self) -> Result<TargetModel> {
        build_double_well(self.omega, self.d, self.p_l, self.gamma)
    }

    fn period(&self) -> Result<f64> {
        if self.omega == 0.0 || !self.omega.is_finite() {
            return Err(TdiError::InvalidParameter("time averages need a nonzero tunnelling frequency".into()));
        }
        Ok(2.0 * std::f64::consts::PI / self.omega.abs())
    }
}

/// `S = sin(W dt/2)`, `C = cos(W dt/2)`, `S' = sin(W dt)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigFactors {
    pub s: f64,
    pub c: f64,
    pub s_prime: f64,
}

impl TrigFactors {
    pub fn new(omega: f64, dt: f64) -> Self {
        let (s, c) = (omega * dt / 2.0).sin_cos();
        Self { s, c, s_prime: (omega * dt).sin() }
    }

    /// `max(|S'^2 - 4 S^2 C^2|, |S^2 + C^2 - 1|)`.
    pub fn identity_residual(&self) -> f64 {
        let a = (self.s_prime.powi(2) - 4.0 * self.s.powi(2) * self.c.powi(2)).abs();
        let b = (self.s.powi(2) + self.c.powi(2) - 1.0).abs();
        a.max(b)
    }
}

/// The three separations at which the double-well DCF is nonzero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Separation {
    PlusD,
    MinusD,
    Zero,
}

impl Separation {
    pub const ALL: [Separation; 3] = [Separation::PlusD, Separation::MinusD, Separation::Zero];

    pub fn from_vector(r: &Vec3, d: &Vec3) -> Result<Self> {
        let near = |sign: f64| (0..3).all(|k| (r[k] - sign * d[k]).abs() < POSITION_TOL);
        if near(0.0) {
            Ok(Self::Zero)
        } else if near(1.0) {
            Ok(Self::PlusD)
        } else if near(-1.0) {
            Ok(Self::MinusD)
        } else {
            Err(TdiError::InvalidParameter(format!("separation {r:?} is not one of 0, +d, -d")))
        }
    }

    pub fn vector(&self, d: &Vec3) -> Vec3 {
        match self {
            Self::PlusD => *d,
            Self::MinusD => [-d[0], -d[1], -d[2]],
            Self::Zero => [0.0; 3],
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Self::PlusD => "+d",
            Self::MinusD => "-d",
            Self::Zero => "0",
        }
    }
}

/// A printed closed form next to the exact numeric value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub literal: Complex,
    pub oracle: Complex,
    pub abs_diff: f64,
}

impl Comparison {
    fn new(literal: Complex, oracle: Complex) -> Self {
        Self { literal, oracle, abs_diff: (literal - oracle).norm() }
    }
}

fn literal_dcf(state: &DoubleWellState, tf: &TrigFactors, sep: Separation) -> Complex {
    let half_i = I * 0.5 * tf.s_prime;
    match sep {
        Separation::PlusD => tf.s.powi(2) * state.p_l + half_i * state.gamma.conj(),
        Separation::MinusD => tf.s.powi(2) * state.p_r() + half_i * state.gamma,
        Separation::Zero => tf.c - I * tf.s_prime * state.gamma.re,
    }
}

pub fn dcf_analytic(state: &DoubleWellState, dt: f64, sep: Separation) -> Result<Comparison> {
    let tf = TrigFactors::new(state.omega, dt);
    let model = state.model()?;
    let oracle = dcf(&model, &sep.vector(&state.d), 0.0, dt);
    Ok(Comparison::new(literal_dcf(state, &tf, sep), oracle))
}

pub fn isf_analytic(state: &DoubleWellState, dt: f64, p: &Vec3) -> Result<Comparison> {
    let tf = TrigFactors::new(state.omega, dt);
    let (sin_pd, cos_pd) = dot(p, &state.d).sin_cos();
    let g = state.gamma;
    let s2 = tf.s.powi(2);
    let re = s2 * cos_pd + tf.c.powi(2);
    let im = (state.p_l - state.p_r()) * s2 * sin_pd + 0.5 * tf.s_prime * (g.im * sin_pd + g.re * (cos_pd - 2.0));
    let model = state.model()?;
    Ok(Comparison::new(Complex::new(re, im), isf(&model, p, 0.0, dt).value))
}

fn t1_average(state: &DoubleWellState, f: impl Fn(f64) -> Complex) -> Result<Complex> {
    let period = state.period()?;
    let n = AVERAGE_SAMPLES as f64;
    Ok((0..AVERAGE_SAMPLES).map(|k| f(period * k as f64 / n)).sum::<Complex>() / n)
}

pub fn averaged_isf(state: &DoubleWellState, dt: f64, p: &Vec3) -> Result<Comparison> {
    let tf = TrigFactors::new(state.omega, dt);
    let cos_pd = dot(p, &state.d).cos();
    let literal =
        Complex::new(tf.s.powi(2) * cos_pd + tf.c.powi(2), 0.5 * (cos_pd - 2.0) * tf.s_prime * state.gamma.re);
    let model = state.model()?;
    let oracle = t1_average(state, |t1| isf(&model, p, t1, t1 + dt).value)?;
    Ok(Comparison::new(literal, oracle))
}

pub fn averaged_dcf(state: &DoubleWellState, dt: f64, sep: Separation) -> Result<Comparison> {
    let tf = TrigFactors::new(state.omega, dt);
    let gr = state.gamma.re;
    let literal = match sep {
        Separation::PlusD | Separation::MinusD => 0.5 * tf.s + I * 0.5 * tf.s_prime * gr,
        Separation::Zero => tf.c - I * tf.s_prime * gr,
    };
    let model = state.model()?;
    let r = sep.vector(&state.d);
    let oracle = t1_average(state, |t1| dcf(&model, &r, t1, t1 + dt))?;
    Ok(Comparison::new(literal, oracle))
}

/// Coherence `Gamma(t) = mu(t)_{LR}` under exact evolution.
pub fn gamma_at(model: &TargetModel, t: f64) -> Complex {
    model.density_at(t).get(0, 1)
}

/// `max_t |Re Gamma(t) - Re Gamma(0)|` over the grid.
pub fn gamma_r_invariant(state: &DoubleWellState, t_grid: &[f64]) -> Result<f64> {
    let model = state.model()?;
    let g0 = gamma_at(&model, 0.0).re;
    Ok(t_grid.iter().map(|&t| (gamma_at(&model, t).re - g0).abs()).fold(0.0, f64::max))
}

/// Parameter grid for [`doublewell_report`]. Combinations violating positivity
/// are skipped.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportGrid {
    pub omega: f64,
    pub d: Vec3,
    pub p_l: Vec<f64>,
    pub gamma: Vec<Complex>,
    pub omega_dt: Vec<f64>,
    pub p_dot_d: Vec<f64>,
}

impl Default for ReportGrid {
    fn default() -> Self {
        use std::f64::consts::PI;
        Self {
            omega: 1.0,
            d: [1.0, 0.0, 0.0],
            p_l: vec![0.5, 0.8, 0.2, 1.0],
            gamma: vec![
                Complex::new(0.0, 0.0),
                Complex::new(0.3, 0.0),
                Complex::new(0.0, 0.3),
                Complex::new(0.2, 0.2),
                Complex::new(0.4, 0.0),
            ],
            omega_dt: vec![0.0, PI / 4.0, PI / 2.0, PI, 1.5 * PI],
            p_dot_d: vec![0.0, PI / 3.0, PI / 2.0, PI],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub quantity: String,
    pub p_l: f64,
    pub gamma_re: f64,
    pub gamma_im: f64,
    pub omega_dt: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_dot_d: Option<f64>,
    pub literal: [f64; 2],
    pub oracle: [f64; 2],
    pub abs_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub quantity: String,
    pub points: usize,
    pub max_abs_diff: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleWellReport {
    pub grid: ReportGrid,
    pub summary: Vec<ReportSummary>,
    pub entries: Vec<ReportEntry>,
}

pub fn doublewell_report(grid: &ReportGrid) -> Result<DoubleWellReport> {
    if grid.omega == 0.0 {
        return Err(TdiError::InvalidParameter("report needs a nonzero tunnelling frequency".into()));
    }
    let mut entries = Vec::new();
    let mut push = |quantity: String, state: &DoubleWellState, omega_dt: f64, pd: Option<f64>, c: Comparison| {
        entries.push(ReportEntry {
            quantity,
            p_l: state.p_l,
            gamma_re: state.gamma.re,
            gamma_im: state.gamma.im,
            omega_dt,
            p_dot_d: pd,
            literal: [c.literal.re, c.literal.im],
            oracle: [c.oracle.re, c.oracle.im],
            abs_diff: c.abs_diff,
        });
    };
    let d2 = dot(&grid.d, &grid.d);
    for &p_l in &grid.p_l {
        for &gamma in &grid.gamma {
            let Ok(state) = DoubleWellState::new(p_l, gamma, grid.omega, grid.d) else { continue };
            for &wdt in &grid.omega_dt {
                let dt = wdt / grid.omega;
                for sep in Separation::ALL {
                    push(format!("dcf({})", sep.label()), &state, wdt, None, dcf_analytic(&state, dt, sep)?);
                    push(format!("avg_dcf({})", sep.label()), &state, wdt, None, averaged_dcf(&state, dt, sep)?);
                }
                for &pd in &grid.p_dot_d {
                    let p = [pd * grid.d[0] / d2, pd * grid.d[1] / d2, pd * grid.d[2] / d2];
                    push("isf".into(), &state, wdt, Some(pd), isf_analytic(&state, dt, &p)?);
                    push("avg_isf".into(), &state, wdt, Some(pd), averaged_isf(&state, dt, &p)?);
                }
            }
        }
    }
    let mut summary: Vec<ReportSummary> = Vec::new();
    for e in &entries {
        match summary.iter_mut().find(|s| s.quantity == e.quantity) {
            Some(s) => {
                s.points += 1;
                s.max_abs_diff = s.max_abs_diff.max(e.abs_diff);
            }
            None => summary.push(ReportSummary { quantity: e.quantity.clone(), points: 1, max_abs_diff: e.abs_diff }),
        }
    }
    Ok(DoubleWellReport { grid: grid.clone(), summary, entries })
}
