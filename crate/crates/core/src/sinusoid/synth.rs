use std::f64::consts::PI;

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

use super::design_matrix;

/// Synthetic-signal experiment: true components, SNR and replication count.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    /// True radial frequencies, radians in `(0, π)`.
    pub true_omega: Vec<f64>,
    /// Squared amplitudes `a_c² + a_s²` per component.
    pub true_amp2: Vec<f64>,
    /// `‖D a‖² / (N σ²)` in dB; `+inf` gives a noiseless signal.
    pub snr_db: f64,
    pub n: usize,
    pub replications: usize,
    pub base_seed: u64,
}

impl Default for ExperimentSpec {
    /// Three close tones at 7 dB, `N = 64`.
    fn default() -> Self {
        Self {
            true_omega: vec![0.63, 0.68, 0.73],
            true_amp2: vec![20.0, 6.32, 20.0],
            snr_db: 7.0,
            n: 64,
            replications: 100,
            base_seed: 0,
        }
    }
}

impl ExperimentSpec {
    pub fn true_order(&self) -> usize {
        self.true_omega.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.true_omega.len() != self.true_amp2.len() {
            return Err(Error::Config(format!(
                "{} frequencies but {} amplitudes",
                self.true_omega.len(),
                self.true_amp2.len()
            )));
        }
        if self.true_omega.iter().any(|&w| !(w > 0.0 && w < PI)) {
            return Err(Error::Config("true frequencies must lie in (0, pi)".into()));
        }
        let mut sorted = self.true_omega.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config("true frequencies must be distinct".into()));
        }
        if self.true_amp2.iter().any(|&a| !(a >= 0.0)) {
            return Err(Error::Config(
                "squared amplitudes must be nonnegative".into(),
            ));
        }
        if self.snr_db.is_nan() || self.snr_db == f64::NEG_INFINITY {
            return Err(Error::Config(format!("invalid SNR {}", self.snr_db)));
        }
        if self.n == 0 {
            return Err(Error::Config("signal length must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSignal {
    pub y: Vec<f64>,
    pub clean: Vec<f64>,
    pub sigma2: f64,
}

/// `y = D a + n` with `a_c = a_s = sqrt(A²/2)` per component and the noise
/// variance set so that `‖D a‖² / (N σ²)` equals the configured SNR.
pub fn synth_signal<R: Rng + ?Sized>(spec: &ExperimentSpec, rng: &mut R) -> Result<SynthSignal> {
    spec.validate()?;
    let amps: Vec<f64> = spec
        .true_amp2
        .iter()
        .flat_map(|&a2| {
            let a = (a2 / 2.0).sqrt();
            [a, a]
        })
        .collect();
    let clean = design_matrix(&spec.true_omega, spec.n) * DVector::from_vec(amps);
    let clean: Vec<f64> = clean.iter().copied().collect();
    let power: f64 = clean.iter().map(|v| v * v).sum();
    let sigma2 = power / (spec.n as f64 * 10f64.powf(spec.snr_db / 10.0));
    let sigma = sigma2.sqrt();
    let y = clean
        .iter()
        .map(|&c| {
            let z: f64 = StandardNormal.sample(rng);
            if sigma > 0.0 {
                c + sigma * z
            } else {
                c
            }
        })
        .collect();
    Ok(SynthSignal { y, clean, sigma2 })
}
