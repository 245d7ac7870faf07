use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::birth_death::ln_factorial;
use crate::error::{Error, Result};
use crate::mcmc::mhg_accept;
use crate::state::VarDimState;

use super::{projection_energy, shrinkage, SinusoidPosterior};

/// Random-walk step on `log δ²`.
pub const DELTA2_LOG_STEP: f64 = 0.5;

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let terms: Vec<f64> = terms.collect();
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + terms.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

fn check_order(k: usize, k_max: usize) -> Result<()> {
    if k > k_max {
        return Err(Error::Config(format!("order {k} exceeds k_max = {k_max}")));
    }
    Ok(())
}

/// Log pmf of the Poisson law of mean `lambda` truncated to `{0, …, k_max}`.
pub fn truncated_poisson_logpmf(k: usize, lambda: f64, k_max: usize) -> Result<f64> {
    check_order(k, k_max)?;
    let unnorm = |j: usize| j as f64 * lambda.ln() - ln_factorial(j);
    Ok(unnorm(k) - log_sum_exp((0..=k_max).map(unnorm)))
}

/// Log pmf of the accelerated Poisson law `∝ Λ^k/(k!)²` on `{0, …, k_max}`.
pub fn accelerated_poisson_logpmf(k: usize, lambda: f64, k_max: usize) -> Result<f64> {
    check_order(k, k_max)?;
    let unnorm = |j: usize| j as f64 * lambda.ln() - 2.0 * ln_factorial(j);
    Ok(unnorm(k) - log_sum_exp((0..=k_max).map(unnorm)))
}

pub fn truncated_poisson_pmf(lambda: f64, k_max: usize) -> Vec<f64> {
    (0..=k_max)
        .map(|k| truncated_poisson_logpmf(k, lambda, k_max).map_or(0.0, f64::exp))
        .collect()
}

pub fn accelerated_poisson_pmf(lambda: f64, k_max: usize) -> Vec<f64> {
    (0..=k_max)
        .map(|k| accelerated_poisson_logpmf(k, lambda, k_max).map_or(0.0, f64::exp))
        .collect()
}

/// `log P(Poisson(Λ) ≤ k_max) = −Λ + log Σ_{j ≤ k_max} Λ^j/j!`.
pub fn poisson_truncation_log_mass(lambda: f64, k_max: usize) -> f64 {
    -lambda + log_sum_exp((0..=k_max).map(|j| j as f64 * lambda.ln() - ln_factorial(j)))
}

/// `Gamma(shape, rate)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub fn log_density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        (self.shape - 1.0) * x.ln() - self.rate * x
    }
}

/// `IG(shape, scale)`, density `∝ x^(−shape−1) exp(−scale/x)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InverseGammaPrior {
    pub shape: f64,
    pub scale: f64,
}

impl InverseGammaPrior {
    pub fn log_density(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return f64::NEG_INFINITY;
        }
        -(self.shape + 1.0) * x.ln() - self.scale / x
    }

    pub fn mean(&self) -> Option<f64> {
        (self.shape > 1.0).then(|| self.scale / (self.shape - 1.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HyperStep {
    pub value: f64,
    pub accepted: bool,
    pub log_ratio: f64,
}

/// One Metropolis-Hastings update of `Λ | k`. The proposal is the untruncated
/// conjugate `Gamma(α + k, β + 1)`; the acceptance ratio corrects for the
/// truncated-Poisson normalizer and equals
/// `P(Poisson(Λ) ≤ k_max) / P(Poisson(Λ') ≤ k_max)`.
pub fn sample_lambda<R: Rng + ?Sized>(
    k: usize,
    current: f64,
    prior: GammaPrior,
    k_max: usize,
    rng: &mut R,
) -> Result<HyperStep> {
    let conj = Gamma::new(prior.shape + k as f64, 1.0 / (prior.rate + 1.0))
        .map_err(|e| Error::Config(format!("lambda proposal: {e}")))?;
    let proposed: f64 = conj.sample(rng);
    if !(proposed > 0.0) {
        return Ok(HyperStep {
            value: current,
            accepted: false,
            log_ratio: f64::NEG_INFINITY,
        });
    }
    let log_ratio =
        poisson_truncation_log_mass(current, k_max) - poisson_truncation_log_mass(proposed, k_max);
    let accepted = mhg_accept(log_ratio, rng)?;
    Ok(HyperStep {
        value: if accepted { proposed } else { current },
        accepted,
        log_ratio,
    })
}

/// Log conditional density of `δ²` given `k` and the projection energy `e`:
/// `log IG(δ²) − (N/2) log(yᵀy − δ²/(1+δ²)·e) − k log(1+δ²)`. With a flat
/// likelihood only the prior remains.
pub fn delta2_log_conditional(
    delta2: f64,
    k: usize,
    energy: f64,
    yty: f64,
    n: usize,
    prior: InverseGammaPrior,
    flat_likelihood: bool,
) -> f64 {
    let lp = prior.log_density(delta2);
    if flat_likelihood || lp == f64::NEG_INFINITY {
        return lp;
    }
    let quad = yty - shrinkage(delta2) * energy;
    lp - 0.5 * n as f64 * quad.ln() - k as f64 * delta2.ln_1p()
}

/// Random-walk MH on `log δ²` targeting [`delta2_log_conditional`], with the
/// log-scale Jacobian.
pub fn sample_delta2<R: Rng + ?Sized>(
    x: &VarDimState<f64>,
    model: &SinusoidPosterior<'_>,
    prior: InverseGammaPrior,
    rng: &mut R,
) -> Result<HyperStep> {
    let energy = if model.flat_likelihood {
        0.0
    } else {
        projection_energy(model.signal.samples(), x.components(), model.jitter)?
    };
    let current = model.hyper.delta2;
    let z: f64 = StandardNormal.sample(rng);
    let proposed = current * (DELTA2_LOG_STEP * z).exp();
    let cond = |d2| {
        delta2_log_conditional(
            d2,
            x.order(),
            energy,
            model.signal.energy(),
            model.n(),
            prior,
            model.flat_likelihood,
        )
    };
    let log_ratio = delta2_step_log_ratio(current, proposed, cond);
    let accepted = mhg_accept(log_ratio, rng)?;
    Ok(HyperStep {
        value: if accepted { proposed } else { current },
        accepted,
        log_ratio,
    })
}

fn delta2_step_log_ratio(current: f64, proposed: f64, cond: impl Fn(f64) -> f64) -> f64 {
    if proposed == current {
        return 0.0;
    }
    cond(proposed) - cond(current) + proposed.ln() - current.ln()
}


#[cfg(test)]
mod quadrature_tests {
    use super::*;
    use crate::rng;
    use crate::sinusoid::{synth_signal, ExperimentSpec, Hyperparameters, Signal};

    #[test]
    fn delta2_conditional_matches_quadrature_at_fixed_frequency() {
        let spec = ExperimentSpec {
            true_omega: vec![1.1],
            true_amp2: vec![2.0],
            snr_db: 3.0,
            n: 32,
            ..ExperimentSpec::default()
        };
        let y = synth_signal(&spec, &mut rng::stream(31, 0)).unwrap().y;
        let s = Signal::new(y).unwrap();
        let prior = InverseGammaPrior {
            shape: 2.0,
            scale: 100.0,
        };
        let x = VarDimState::new(vec![1.1]);
        let energy = projection_energy(s.samples(), x.components(), 0.0).unwrap();

        // Riemann sum of E[log δ²] on a log-δ² grid (Jacobian δ²).
        let (lo, hi, g) = (-10.0f64, 25.0f64, 20_000);
        let h = (hi - lo) / g as f64;
        let logs: Vec<(f64, f64)> = (0..g)
            .map(|i| {
                let u = lo + (i as f64 + 0.5) * h;
                let d2 = u.exp();
                (
                    u,
                    delta2_log_conditional(d2, 1, energy, s.energy(), s.len(), prior, false) + u,
                )
            })
            .collect();
        let max = logs.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
        let (num, den) = logs.iter().fold((0.0, 0.0), |(a, b), &(u, l)| {
            let w = (l - max).exp();
            (a + u * w, b + w)
        });
        let exact = num / den;

        let mut model = SinusoidPosterior::new(
            &s,
            Hyperparameters {
                lambda: 1.0,
                delta2: 50.0,
            },
            4,
        );
        let mut rng = rng::stream(32, 0);
        let n = 300_000;
        let mut sum = 0.0;
        for _ in 0..n {
            model.hyper.delta2 = sample_delta2(&x, &model, prior, &mut rng).unwrap().value;
            sum += model.hyper.delta2.ln();
        }
        let mean = sum / n as f64;
        assert!(
            (mean - exact).abs() < 0.03,
            "chain {mean} vs quadrature {exact}"
        );
    }
}
