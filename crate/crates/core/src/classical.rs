//! Classical comparator: a single particle hopping between sites as a
//! continuous-time Markov chain.
//!
//! The classical ISF is the ensemble mean of `exp(i p.(x(t2) - x(t1)))`.
//! Trajectories draw from independent ChaCha substreams keyed by
//! `(seed, family, trajectory index)` and are merged in index order, so an
//! estimate is reproducible for a fixed seed regardless of thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, TdiError};
use crate::operator::{Complex, I};
use crate::tolerances::{ALGEBRAIC_TOL, POSITION_TOL};
use crate::{dot, sub, Vec3};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassicalModel {
    sites: Vec<Vec3>,
    rates: Vec<Vec<f64>>,
    initial_dist: Vec<f64>,
    seed: u64,
}

impl ClassicalModel {
    /// `rates[n][m]` is the jump rate `k_{n->m}`; diagonal entries are ignored.
    pub fn new(sites: Vec<Vec3>, rates: Vec<Vec<f64>>, initial_dist: Vec<f64>, seed: u64) -> Result<Self> {
        let n = sites.len();
        if n == 0 {
            return Err(TdiError::InvalidParameter("classical model needs at least one site".into()));
        }
        if rates.len() != n || rates.iter().any(|row| row.len() != n) {
            return Err(TdiError::InvalidParameter(format!("rate matrix must be {n}x{n}")));
        }
        for (i, row) in rates.iter().enumerate() {
            for (j, &k) in row.iter().enumerate() {
                if i != j && !(k.is_finite() && k >= 0.0) {
                    return Err(TdiError::InvalidParameter(format!(
                        "rate k[{i}][{j}] = {k} is not a nonnegative number"
                    )));
                }
            }
        }
        if initial_dist.len() != n {
            return Err(TdiError::DimMismatch { expected: n, found: initial_dist.len() });
        }
        if initial_dist.iter().any(|&w| !(w.is_finite() && w >= 0.0)) {
            return Err(TdiError::InvalidParameter("initial distribution has negative or non-finite weights".into()));
        }
        let total: f64 = initial_dist.iter().sum();
        if (total - 1.0).abs() > ALGEBRAIC_TOL {
            return Err(TdiError::InvalidParameter(format!("initial distribution sums to {total}")));
        }
        for (i, a) in sites.iter().enumerate() {
            if sites[i + 1..].iter().any(|b| sub(a, b).iter().all(|x| x.abs() < POSITION_TOL)) {
                return Err(TdiError::InvalidParameter(format!("site {i} is duplicated")));
            }
        }
        Ok(Self { sites, rates, initial_dist, seed })
    }

    /// Two sites at `-d/2`, `+d/2` with symmetric rate `k`, started from the
    /// stationary distribution `(1/2, 1/2)`.
    pub fn symmetric_two_site(k: f64, d: Vec3, seed: u64) -> Result<Self> {
        let half = [d[0] / 2.0, d[1] / 2.0, d[2] / 2.0];
        Self::new(vec![[-half[0], -half[1], -half[2]], half], vec![vec![0.0, k], vec![k, 0.0]], vec![0.5, 0.5], seed)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn sites(&self) -> &[Vec3] {
        &self.sites
    }

    pub fn rates(&self) -> &[Vec<f64>] {
        &self.rates
    }

    pub fn initial_dist(&self) -> &[f64] {
        &self.initial_dist
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn escape_rate(&self, n: usize) -> f64 {
        self.rates[n].iter().enumerate().filter(|&(m, _)| m != n).map(|(_, k)| k).sum()
    }

    fn pick<R: Rng>(weights: impl Iterator<Item = f64>, total: f64, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut last = 0;
        for (i, w) in weights.enumerate() {
            if w > 0.0 {
                acc += w;
                last = i;
                if u < acc {
                    return i;
                }
            }
        }
        last
    }

    /// Advances the particle from `site` by `duration`.
    fn advance<R: Rng>(&self, mut site: usize, duration: f64, rng: &mut R) -> usize {
        let mut left = duration;
        loop {
            let out = self.escape_rate(site);
            if out <= 0.0 {
                return site;
            }
            let wait = Exp::new(out).expect("positive rate").sample(rng);
            if wait >= left {
                return site;
            }
            left -= wait;
            let from = site;
            let weights = self.rates[from].iter().enumerate().map(|(m, &k)| if m == from { 0.0 } else { k });
            site = Self::pick(weights, out, rng);
        }
    }

    /// Positions `(x(t1), x(t2))` for one trajectory.
    fn trajectory<R: Rng>(&self, t1: f64, t2: f64, rng: &mut R) -> (usize, usize) {
        let x0 = Self::pick(self.initial_dist.iter().copied(), 1.0, rng);
        let x1 = self.advance(x0, t1, rng);
        let x2 = self.advance(x1, t2 - t1, rng);
        (x1, x2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: Complex,
    pub stderr: f64,
    pub n_traj: usize,
}

/// RNG for trajectory `index` of substream family `family`.
pub fn substream(seed: u64, family: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ family.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index);
    rng
}

/// Monte Carlo estimate of the classical ISF `<exp(i p.(x(t2) - x(t1)))>`.
pub fn classical_isf(model: &ClassicalModel, p: &Vec3, t1: f64, t2: f64, n_traj: usize) -> Result<MCEstimate> {
    classical_isf_family(model, p, t1, t2, n_traj, 0)
}

/// As [`classical_isf`], drawing from an independent substream family.
pub fn classical_isf_family(
    model: &ClassicalModel,
    p: &Vec3,
    t1: f64,
    t2: f64,
    n_traj: usize,
    family: u64,
) -> Result<MCEstimate> {
    if n_traj == 0 {
        return Err(TdiError::InvalidParameter("n_traj must be at least 1".into()));
    }
    if !(t1.is_finite() && t2.is_finite() && t1 >= 0.0 && t2 >= t1) {
        return Err(TdiError::InvalidParameter(format!("need t2 >= t1 >= 0, got t1={t1} t2={t2}")));
    }
    let samples: Vec<Complex> = (0..n_traj as u64)
        .into_par_iter()
        .map(|idx| {
            let mut rng = substream(model.seed, family, idx);
            let (a, b) = model.trajectory(t1, t2, &mut rng);
            if a == b {
                Complex::new(1.0, 0.0)
            } else {
                (I * dot(p, &sub(&model.sites[b], &model.sites[a]))).exp()
            }
        })
        .collect();
    let n = n_traj as f64;
    let mean = samples.iter().sum::<Complex>() / n;
    let stderr = if n_traj > 1 {
        let var = samples.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / (n - 1.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(MCEstimate { mean, stderr, n_traj })
}
