use crate::birth_death::{
    BirthDeathSchedule, BirthOrDeath, PoissonSchedule, RatioMode, Representation, SortedTarget,
    UniformInterval, DEFAULT_JUMP_SCALE,
};
use crate::error::{Error, Result};
use crate::mcmc::{
    mhg_accept, mhg_step, ChainOutput, ChainRecorder, ChainSettings, ChainState, MoveSet,
    TargetDensity,
};
use crate::rng;
use crate::state::VarDimState;

use super::{
    sample_delta2, sample_lambda, FrequencyUpdate, GammaPrior, Hyperparameters, InverseGammaPrior,
    Signal, SinusoidPosterior,
};

/// A hyperparameter held fixed or sampled under a prior.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HyperSetting<P> {
    Fixed(f64),
    Sampled { prior: P, init: f64 },
}

impl<P> HyperSetting<P> {
    pub fn initial(&self) -> f64 {
        match *self {
            Self::Fixed(v) => v,
            Self::Sampled { init, .. } => init,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplerConfig {
    pub k_max: usize,
    /// Scale `c` of the birth/death schedule.
    pub c: f64,
    pub representation: Representation,
    pub ratio_mode: RatioMode,
    pub lambda: HyperSetting<GammaPrior>,
    pub delta2: HyperSetting<InverseGammaPrior>,
    pub flat_likelihood: bool,
    /// Dedicated frequency updates per sweep after the mixture step.
    pub extra_updates: usize,
    pub walk_prob: f64,
    /// Random-walk step in radians; `None` means `0.25/N`.
    pub walk_std: Option<f64>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            k_max: 32,
            c: DEFAULT_JUMP_SCALE,
            representation: Representation::Unsorted,
            ratio_mode: RatioMode::Corrected,
            lambda: HyperSetting::Sampled {
                prior: GammaPrior {
                    shape: 1.0,
                    rate: 1e-3,
                },
                init: 1.0,
            },
            delta2: HyperSetting::Sampled {
                prior: InverseGammaPrior {
                    shape: 2.0,
                    scale: 100.0,
                },
                init: 100.0,
            },
            flat_likelihood: false,
            extra_updates: 1,
            walk_prob: super::DEFAULT_WALK_PROB,
            walk_std: None,
        }
    }
}

/// Chain state of the sinusoid sampler: frequencies plus hyperparameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SinusoidState {
    pub freqs: VarDimState<f64>,
    pub lambda: f64,
    pub delta2: f64,
}

impl ChainState for SinusoidState {
    fn order(&self) -> usize {
        self.freqs.order()
    }

    fn has_nan(&self) -> bool {
        self.freqs.has_nan() || self.lambda.is_nan() || self.delta2.is_nan()
    }
}

fn sweep_step<T>(
    target: &T,
    moves: &BirthOrDeath<UniformInterval, PoissonSchedule, FrequencyUpdate>,
    freqs: &VarDimState<f64>,
    extra_updates: usize,
    rng: &mut rng::ChainRng,
) -> Result<(VarDimState<f64>, usize, bool)>
where
    T: TargetDensity<VarDimState<f64>>,
{
    let lt = target.log_density(freqs);
    let step = mhg_step(target, moves, freqs, lt, rng)?;
    let mut x = step.state;
    for _ in 0..extra_updates {
        if x.order() == 0 {
            break;
        }
        let out = moves.within.propose_update(&x, target, rng)?;
        if out.log_ratio.is_nan() {
            return Err(Error::NanLogRatio("update"));
        }
        if mhg_accept(out.log_ratio, rng)? {
            x = out.proposed;
        }
    }
    Ok((x, step.move_index, step.accepted))
}

/// Runs the sinusoid RJ-MCMC sampler. Each sweep is one step of the
/// birth/death/update mixture, `extra_updates` frequency updates, then one
/// update of each sampled hyperparameter. Records and tallies follow the
/// mixture step.
pub fn run_sampler(
    signal: &Signal,
    cfg: &SamplerConfig,
    init: VarDimState<f64>,
    settings: ChainSettings,
) -> Result<ChainOutput<SinusoidState>> {
    settings.validate()?;
    if cfg.representation == Representation::Sorted && !init.is_sorted() {
        return Err(Error::Config(
            "sorted sampler needs a sorted initial state".into(),
        ));
    }
    let mut rng = rng::stream(settings.seed, settings.stream);
    let update = FrequencyUpdate {
        walk_prob: cfg.walk_prob,
        walk_std: cfg.walk_std.unwrap_or(0.25 / signal.len() as f64),
    };
    let mut hyper = Hyperparameters {
        lambda: cfg.lambda.initial(),
        delta2: cfg.delta2.initial(),
    };
    let posterior_at = |hyper| {
        SinusoidPosterior::new(signal, hyper, cfg.k_max).with_flat_likelihood(cfg.flat_likelihood)
    };
    let moves_at = |lambda| -> Result<_> {
        let jumps = PoissonSchedule::new(lambda, cfg.k_max, cfg.c)?;
        Ok(BirthOrDeath::new(
            BirthDeathSchedule::new(
                jumps,
                UniformInterval::FREQUENCY,
                cfg.representation,
                cfg.ratio_mode,
            ),
            update,
        ))
    };
    let log_density = |hyper, x: &VarDimState<f64>| {
        let p = posterior_at(hyper);
        match cfg.representation {
            Representation::Unsorted => p.log_density(x),
            Representation::Sorted => SortedTarget(p).log_density(x),
        }
    };

    if log_density(hyper, &init) == f64::NEG_INFINITY {
        return Err(Error::Config(
            "initial state has zero target density".into(),
        ));
    }

    let labels = moves_at(hyper.lambda)?.labels().to_vec();
    let mut recorder = ChainRecorder::new(&labels, settings);
    let mut freqs = init;
    for _ in 0..settings.n_iter {
        let posterior = posterior_at(hyper);
        let moves = moves_at(hyper.lambda)?;
        let (next, move_index, accepted) = match cfg.representation {
            Representation::Unsorted => {
                sweep_step(&posterior, &moves, &freqs, cfg.extra_updates, &mut rng)?
            }
            Representation::Sorted => sweep_step(
                &SortedTarget(posterior),
                &moves,
                &freqs,
                cfg.extra_updates,
                &mut rng,
            )?,
        };
        freqs = next;

        if let HyperSetting::Sampled { prior, .. } = cfg.lambda {
            hyper.lambda =
                sample_lambda(freqs.order(), hyper.lambda, prior, cfg.k_max, &mut rng)?.value;
        }
        if let HyperSetting::Sampled { prior, .. } = cfg.delta2 {
            hyper.delta2 = sample_delta2(&freqs, &posterior_at(hyper), prior, &mut rng)?.value;
        }

        let state = SinusoidState {
            freqs: freqs.clone(),
            lambda: hyper.lambda,
            delta2: hyper.delta2,
        };
        if state.has_nan() {
            return Err(Error::NanState("sweep"));
        }
        recorder.record(move_index, state, log_density(hyper, &freqs), accepted);
    }
    Ok(recorder.finish())
}
