use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::birth_death::{hold, WithinModelMove, UPDATE};
use crate::error::{Error, Result};
use crate::mcmc::{MoveDetail, ProposalOutcome, TargetDensity};
use crate::state::VarDimState;

use super::SinusoidPosterior;

/// Probability of the Gaussian random-walk branch.
pub const DEFAULT_WALK_PROB: f64 = 0.8;

/// Fixed-`k` update of one radial frequency.
///
/// The proposal mixes a Gaussian random walk (probability `walk_prob`) with an
/// independent uniform draw on `(0, π)`. Both branches are symmetric in
/// `(ω, ω')`, so the log ratio is the log target difference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyUpdate {
    pub walk_prob: f64,
    pub walk_std: f64,
}

impl FrequencyUpdate {
    /// Default step `0.25/N` radians for a signal of length `n`.
    pub fn for_length(n: usize) -> Self {
        Self {
            walk_prob: DEFAULT_WALK_PROB,
            walk_std: 0.25 / n as f64,
        }
    }

    pub fn propose_update<T, R>(
        &self,
        x: &VarDimState<f64>,
        target: &T,
        rng: &mut R,
    ) -> Result<ProposalOutcome<VarDimState<f64>>>
    where
        T: TargetDensity<VarDimState<f64>> + ?Sized,
        R: Rng + ?Sized,
    {
        if x.order() == 0 {
            return Err(Error::InvalidMove("frequency update at k = 0".into()));
        }
        let index = rng.random_range(0..x.order());
        let current = x.components()[index];
        let value = if rng.random::<f64>() < self.walk_prob {
            let step = Normal::new(0.0, self.walk_std)
                .map_err(|e| Error::Config(format!("walk step: {e}")))?;
            current + step.sample(rng)
        } else {
            rng.random_range(0.0..PI)
        };
        let proposed = x.replaced(index, value);
        let log_ratio = if value > 0.0 && value < PI {
            let new = target.log_density(&proposed);
            if new == f64::NEG_INFINITY {
                new
            } else {
                new - target.log_density(x)
            }
        } else {
            f64::NEG_INFINITY
        };
        Ok(ProposalOutcome {
            proposed,
            log_ratio,
            label: UPDATE,
            detail: MoveDetail::Update { index },
        })
    }
}

impl WithinModelMove<f64> for FrequencyUpdate {
    fn propose<T, R>(
        &self,
        x: &VarDimState<f64>,
        target: &T,
        rng: &mut R,
    ) -> Result<ProposalOutcome<VarDimState<f64>>>
    where
        T: TargetDensity<VarDimState<f64>> + ?Sized,
        R: Rng + ?Sized,
    {
        if x.order() == 0 {
            return Ok(hold(x));
        }
        self.propose_update(x, target, rng)
    }
}

/// Frequency update with the default settings for the model's signal length.
pub fn frequency_update_move<R: Rng + ?Sized>(
    x: &VarDimState<f64>,
    model: &SinusoidPosterior<'_>,
    rng: &mut R,
) -> Result<ProposalOutcome<VarDimState<f64>>> {
    FrequencyUpdate::for_length(model.n()).propose_update(x, model, rng)
}
