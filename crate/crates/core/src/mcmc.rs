//! Generic Metropolis-Hastings-Green engine.
//!
//! A proposal kernel is a mixture of elementary moves. At state `x` move `m`
//! is chosen with probability `j(x, m)`, it proposes `x'` together with the
//! full log MHG ratio, and the proposal is accepted with probability
//! `min{1, exp(log_ratio)}`. Rejection keeps the current state.
//!
//! All ratio arithmetic is done in the log domain. `-inf` is a legitimate
//! "reject surely" value; NaN is always an error.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;
use crate::state::{Component, VarDimState};

/// Tolerance on `Σ_m j(x, m) = 1`.
pub const SELECTION_SUM_TOL: f64 = 1e-12;

/// Unnormalized log density of the target. Must be deterministic and return
/// `-inf` exactly outside the support.
pub trait TargetDensity<X: ?Sized> {
    fn log_density(&self, x: &X) -> f64;
}

impl<X: ?Sized, T: TargetDensity<X> + ?Sized> TargetDensity<X> for &T {
    fn log_density(&self, x: &X) -> f64 {
        (**self).log_density(x)
    }
}

/// A state the chain driver can record.
pub trait ChainState: Clone {
    /// Model order `k`.
    fn order(&self) -> usize;
    fn has_nan(&self) -> bool;
}

impl<S: Component> ChainState for VarDimState<S> {
    fn order(&self) -> usize {
        VarDimState::order(self)
    }

    fn has_nan(&self) -> bool {
        VarDimState::has_nan(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MoveLabel(pub &'static str);

impl std::fmt::Display for MoveLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.0)
    }
}

/// Move-specific bookkeeping attached to a proposal. Indices are 0-based.
#[derive(Clone, Debug, PartialEq)]
pub enum MoveDetail {
    /// A component inserted at `index`; `log_q` is the proposal log density of
    /// the new component, `log_eta` the log probability of landing in that
    /// slot under sorted insertion.
    Birth {
        index: usize,
        log_q: f64,
        log_eta: Option<f64>,
    },
    /// The component at `index` removed; `log_q` is the proposal log density
    /// the reverse birth would assign to it.
    Death { index: usize, log_q: f64 },
    /// Component `index` changed in place.
    Update { index: usize },
    /// Proposal equal to the current state.
    Hold,
}

#[derive(Clone, Debug)]
pub struct ProposalOutcome<X> {
    pub proposed: X,
    pub log_ratio: f64,
    pub label: MoveLabel,
    pub detail: MoveDetail,
}

/// A finite mixture of elementary moves with state-dependent selection
/// probabilities and a reverse-move involution.
pub trait MoveSet<X> {
    fn labels(&self) -> &[MoveLabel];

    /// `φ(m)`.
    fn reverse(&self, m: usize) -> usize;

    /// `j(x, m)`. Must be zero when `m` is inapplicable at `x`.
    fn selection_probability(&self, x: &X, m: usize) -> f64;

    fn propose<T, R>(&self, m: usize, x: &X, target: &T, rng: &mut R) -> Result<ProposalOutcome<X>>
    where
        T: TargetDensity<X> + ?Sized,
        R: Rng + ?Sized;
}

/// Draws a move index with probability `j(x, m)` using a single uniform draw.
pub fn select_move<X, M, R>(moves: &M, x: &X, rng: &mut R) -> Result<usize>
where
    M: MoveSet<X> + ?Sized,
    R: Rng + ?Sized,
{
    let n = moves.labels().len();
    let mut total = 0.0;
    for m in 0..n {
        let p = moves.selection_probability(x, m);
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Config(format!(
                "selection probability of `{}` is {p}",
                moves.labels()[m]
            )));
        }
        total += p;
    }
    if (total - 1.0).abs() > SELECTION_SUM_TOL {
        return Err(Error::Config(format!(
            "move selection probabilities sum to {total}"
        )));
    }

    let u: f64 = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for m in 0..n {
        let p = moves.selection_probability(x, m);
        if p > 0.0 {
            acc += p;
            last_positive = Some(m);
            if u < acc {
                return Ok(m);
            }
        }
    }
    // u landed in the rounding gap at the top of the cumulative sum.
    last_positive.ok_or_else(|| Error::Config("no move has positive probability".into()))
}

/// Accepts with probability `min{1, exp(log_ratio)}`.
pub fn mhg_accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> Result<bool> {
    if log_ratio.is_nan() {
        return Err(Error::NanLogRatio("unknown"));
    }
    if log_ratio >= 0.0 {
        return Ok(true);
    }
    if log_ratio == f64::NEG_INFINITY {
        return Ok(false);
    }
    let u: f64 = rng.random();
    Ok(u.ln() < log_ratio)
}

#[derive(Clone, Debug)]
pub struct Step<X> {
    pub state: X,
    pub log_target: f64,
    pub move_index: usize,
    pub label: MoveLabel,
    pub accepted: bool,
}

/// One transition of the mixture MHG kernel from `x`.
pub fn mhg_step<X, T, M, R>(
    target: &T,
    moves: &M,
    x: &X,
    log_target: f64,
    rng: &mut R,
) -> Result<Step<X>>
where
    X: ChainState,
    T: TargetDensity<X> + ?Sized,
    M: MoveSet<X> + ?Sized,
    R: Rng + ?Sized,
{
    let m = select_move(moves, x, rng)?;
    let outcome = moves.propose(m, x, target, rng)?;
    if outcome.proposed.has_nan() {
        return Err(Error::NanState(outcome.label.0));
    }
    if outcome.log_ratio.is_nan() {
        return Err(Error::NanLogRatio(outcome.label.0));
    }
    let accepted = mhg_accept(outcome.log_ratio, rng)?;
    let (state, log_target) = if accepted {
        let lt = target.log_density(&outcome.proposed);
        (outcome.proposed, lt)
    } else {
        (x.clone(), log_target)
    };
    Ok(Step {
        state,
        log_target,
        move_index: m,
        label: outcome.label,
        accepted,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord<X> {
    pub iteration: usize,
    pub state: X,
    pub log_target: f64,
    pub label: MoveLabel,
    pub accepted: bool,
    pub burn_in: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MoveTally {
    pub label: MoveLabel,
    pub proposals: u64,
    pub acceptances: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChainSettings {
    pub n_iter: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub stream: u64,
}

impl ChainSettings {
    pub fn new(n_iter: usize, burn_in: usize, seed: u64) -> Self {
        Self {
            n_iter,
            burn_in,
            seed,
            stream: rng::CHAIN_STREAM,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_iter > 0 && self.burn_in >= self.n_iter {
            return Err(Error::Config(format!(
                "burn_in ({}) must be smaller than n_iter ({})",
                self.burn_in, self.n_iter
            )));
        }
        if self.n_iter == 0 && self.burn_in > 0 {
            return Err(Error::Config("burn_in must be 0 when n_iter is 0".into()));
        }
        Ok(())
    }
}

/// Records of a complete chain. Burn-in records are kept and flagged.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainOutput<X> {
    pub records: Vec<IterationRecord<X>>,
    pub tallies: Vec<MoveTally>,
    pub settings: ChainSettings,
}

impl<X: ChainState> ChainOutput<X> {
    pub fn post_burn_in(&self) -> impl Iterator<Item = &IterationRecord<X>> {
        self.records.iter().filter(|r| !r.burn_in)
    }

    /// Post-burn-in counts of each model order `0..=k_max`.
    pub fn order_counts(&self, k_max: usize) -> Vec<u64> {
        let mut counts = vec![0u64; k_max + 1];
        for r in self.post_burn_in() {
            let k = r.state.order();
            if k <= k_max {
                counts[k] += 1;
            }
        }
        counts
    }

    /// Post-burn-in empirical law of the model order on `0..=k_max`.
    pub fn order_frequencies(&self, k_max: usize) -> Vec<f64> {
        let counts = self.order_counts(k_max);
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return vec![0.0; k_max + 1];
        }
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    }

    /// Posterior mean of `k` over post-burn-in records.
    pub fn mean_order(&self) -> f64 {
        let (sum, n) = self.post_burn_in().fold((0.0, 0usize), |(s, n), r| {
            (s + r.state.order() as f64, n + 1)
        });
        if n == 0 {
            f64::NAN
        } else {
            sum / n as f64
        }
    }
}

/// Accumulates records and tallies for any driver built on [`mhg_step`].
#[derive(Debug)]
pub struct ChainRecorder<X> {
    output: ChainOutput<X>,
}

impl<X: ChainState> ChainRecorder<X> {
    pub fn new(labels: &[MoveLabel], settings: ChainSettings) -> Self {
        let tallies = labels
            .iter()
            .map(|&label| MoveTally {
                label,
                proposals: 0,
                acceptances: 0,
            })
            .collect();
        Self {
            output: ChainOutput {
                records: Vec::with_capacity(settings.n_iter),
                tallies,
                settings,
            },
        }
    }

    pub fn record(&mut self, move_index: usize, state: X, log_target: f64, accepted: bool) {
        let iteration = self.output.records.len();
        let tally = &mut self.output.tallies[move_index];
        tally.proposals += 1;
        if accepted {
            tally.acceptances += 1;
        }
        let label = tally.label;
        self.output.records.push(IterationRecord {
            iteration,
            state,
            log_target,
            label,
            accepted,
            burn_in: iteration < self.output.settings.burn_in,
        });
    }

    pub fn finish(self) -> ChainOutput<X> {
        self.output
    }
}

/// Runs the mixture MHG chain for `settings.n_iter` iterations from `init`.
pub fn run_chain<X, T, M>(
    target: &T,
    moves: &M,
    init: X,
    settings: ChainSettings,
) -> Result<ChainOutput<X>>
where
    X: ChainState,
    T: TargetDensity<X> + ?Sized,
    M: MoveSet<X> + ?Sized,
{
    settings.validate()?;
    let mut log_target = target.log_density(&init);
    if log_target == f64::NEG_INFINITY || log_target.is_nan() {
        return Err(Error::Config(
            "initial state has zero target density".into(),
        ));
    }
    let mut rng = rng::stream(settings.seed, settings.stream);
    let mut recorder = ChainRecorder::new(moves.labels(), settings);
    let mut x = init;
    for _ in 0..settings.n_iter {
        let step = mhg_step(target, moves, &x, log_target, &mut rng)?;
        x = step.state;
        log_target = step.log_target;
        recorder.record(step.move_index, x.clone(), log_target, step.accepted);
    }
    Ok(recorder.finish())
}

#[derive(Clone, Debug, PartialEq)]
pub struct MoveStat {
    pub label: MoveLabel,
    pub proposals: u64,
    pub acceptance_rate: f64,
}

/// Per-move proposal counts and acceptance rates over all iterations. Moves
/// never proposed are omitted.
pub fn move_stats<X>(out: &ChainOutput<X>) -> Vec<MoveStat> {
    out.tallies
        .iter()
        .filter(|t| t.proposals > 0)
        .map(|t| MoveStat {
            label: t.label,
            proposals: t.proposals,
            acceptance_rate: t.acceptances as f64 / t.proposals as f64,
        })
        .collect()
}
