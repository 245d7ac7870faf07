//! Joint detection and estimation of sinusoids in white Gaussian noise.
//!
//! With a g-prior on the amplitudes and a Jeffreys prior on the noise
//! variance, both integrate out and the posterior over the model order `k`
//! and the radial frequencies `ω ∈ (0, π)^k` is
//!
//! ```text
//! p(k, ω | y) ∝ (yᵀ P_k y)^(−N/2) · Λ^k π^(−k) / (k! (1+δ²)^k)
//! P_k = I − δ²/(1+δ²) · D (DᵀD)⁻¹ Dᵀ,   P_0 = I
//! ```
//!
//! where `D` is the `N × 2k` matrix of cosine/sine columns.

mod moves;
mod priors;
mod sampler;
mod synth;

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::birth_death::ln_factorial;
use crate::error::{Error, Result};
use crate::mcmc::TargetDensity;
use crate::state::VarDimState;

pub use moves::{frequency_update_move, FrequencyUpdate, DEFAULT_WALK_PROB};
pub use priors::{
    accelerated_poisson_logpmf, accelerated_poisson_pmf, delta2_log_conditional,
    poisson_truncation_log_mass, sample_delta2, sample_lambda, truncated_poisson_logpmf,
    truncated_poisson_pmf, GammaPrior, HyperStep, InverseGammaPrior,
};
pub use sampler::{run_sampler, HyperSetting, SamplerConfig, SinusoidState};
pub use synth::{synth_signal, ExperimentSpec, SynthSignal};

/// Squared Cholesky pivot, relative to the largest Gram diagonal entry, below
/// which the design is treated as singular.
pub const SINGULAR_PIVOT_TOL: f64 = 1e-9;

/// Observed signal `y`, read-only once built.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    y: Vec<f64>,
    energy: f64,
}

impl Signal {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if y.is_empty() {
            return Err(Error::Config("signal has no samples".into()));
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("signal contains non-finite samples".into()));
        }
        let energy = y.iter().map(|v| v * v).sum();
        Ok(Self { y, energy })
    }

    /// One observation per line; blank lines and `#` comments are skipped.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut y = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v = line.parse::<f64>().map_err(|e| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg: e.to_string(),
            })?;
            y.push(v);
        }
        Self::new(y)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn to_text(&self) -> String {
        self.y.iter().map(|v| format!("{v}\n")).collect()
    }

    pub fn samples(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// `yᵀy`.
    pub fn energy(&self) -> f64 {
        self.energy
    }
}

/// `N × 2k` design matrix: column `2j` is `cos(ω_j t)`, column `2j+1` is
/// `sin(ω_j t)`, for `t = 0, …, N−1`.
pub fn design_matrix(omega: &[f64], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, 2 * omega.len(), |t, c| {
        let w = omega[c / 2] * t as f64;
        if c % 2 == 0 {
            w.cos()
        } else {
            w.sin()
        }
    })
}

/// Energy of the orthogonal projection of `y` onto the span of `D`:
/// `yᵀ D (DᵀD)⁻¹ Dᵀ y`, through a Cholesky factor of `DᵀD`.
pub fn projection_energy(y: &[f64], omega: &[f64], jitter: f64) -> Result<f64> {
    if omega.is_empty() {
        return Ok(0.0);
    }
    let d = design_matrix(omega, y.len());
    let mut gram = d.tr_mul(&d);
    for i in 0..gram.nrows() {
        gram[(i, i)] += jitter;
    }
    let scale = (0..gram.nrows()).map(|i| gram[(i, i)]).fold(0.0, f64::max);
    let b = d.tr_mul(&DVector::from_column_slice(y));
    let chol = gram.cholesky().ok_or(Error::Singular)?;
    let l = chol.l();
    for i in 0..l.nrows() {
        let pivot = l[(i, i)];
        if !(pivot * pivot > SINGULAR_PIVOT_TOL * scale) {
            return Err(Error::Singular);
        }
    }
    let z = l.solve_lower_triangular(&b).ok_or(Error::Singular)?;
    Ok(z.norm_squared())
}

/// `yᵀ P_k y`; `yᵀy` when `omega` is empty.
pub fn quad_form(y: &[f64], omega: &[f64], delta2: f64) -> Result<f64> {
    let yty: f64 = y.iter().map(|v| v * v).sum();
    let e = projection_energy(y, omega, 0.0)?;
    Ok(yty - shrinkage(delta2) * e)
}

/// `δ²/(1+δ²)`.
pub fn shrinkage(delta2: f64) -> f64 {
    delta2 / (1.0 + delta2)
}

/// Current values of the hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyperparameters {
    pub lambda: f64,
    pub delta2: f64,
}

/// The marginal posterior over `(k, ω)` at fixed hyperparameters.
#[derive(Clone, Copy, Debug)]
pub struct SinusoidPosterior<'a> {
    pub signal: &'a Signal,
    pub hyper: Hyperparameters,
    pub k_max: usize,
    /// Diagonal load added to `DᵀD` before factorization.
    pub jitter: f64,
    /// Drop the likelihood and `(1+δ²)^(−k)`, leaving the prior on `(k, ω)`.
    pub flat_likelihood: bool,
}

impl<'a> SinusoidPosterior<'a> {
    pub fn new(signal: &'a Signal, hyper: Hyperparameters, k_max: usize) -> Self {
        Self {
            signal,
            hyper,
            k_max,
            jitter: 0.0,
            flat_likelihood: false,
        }
    }

    pub fn with_flat_likelihood(mut self, flat: bool) -> Self {
        self.flat_likelihood = flat;
        self
    }

    pub fn n(&self) -> usize {
        self.signal.len()
    }

    pub fn quad_form(&self, omega: &[f64]) -> Result<f64> {
        let e = projection_energy(self.signal.samples(), omega, self.jitter)?;
        Ok(self.signal.energy() - shrinkage(self.hyper.delta2) * e)
    }
}

/// Log of the unnormalized posterior at `(k, ω)`; `-inf` off `(0, π)^k`, above
/// `k_max`, or when the design is numerically singular.
pub fn log_target(omega: &[f64], model: &SinusoidPosterior<'_>) -> f64 {
    let k = omega.len();
    if k > model.k_max || omega.iter().any(|&w| !(w > 0.0 && w < PI)) {
        return f64::NEG_INFINITY;
    }
    let kf = k as f64;
    let prior = kf * model.hyper.lambda.ln() - kf * PI.ln() - ln_factorial(k);
    if model.flat_likelihood {
        return prior;
    }
    let quad = match model.quad_form(omega) {
        Ok(q) => q,
        Err(_) => return f64::NEG_INFINITY,
    };
    -0.5 * model.n() as f64 * quad.ln() + prior - kf * model.hyper.delta2.ln_1p()
}

impl TargetDensity<VarDimState<f64>> for SinusoidPosterior<'_> {
    fn log_density(&self, x: &VarDimState<f64>) -> f64 {
        log_target(x.components(), self)
    }
}
