//! Birth-or-Death proposal kernels on variable-dimensional vectors.
//!
//! A birth from `x = (k, s)` draws `s* ~ q` and inserts it, a death removes a
//! uniformly chosen component. With unsorted vectors the insertion slot is
//! uniform on `{0, …, k}`; with sorted vectors it is the unique slot keeping
//! the vector sorted. The MHG ratio of a birth to `x' = (k+1, s ⊕_i s*)` is
//!
//! ```text
//! r = f_{k+1}(x') / f_k(x) · p_d(x') / p_b(x) · 1 / q(s*)
//! ```
//!
//! The `1/(k+1)` slot probabilities of the forward birth and the reverse death
//! cancel and do not appear. [`RatioMode::Legacy`] reproduces the historical
//! form carrying an extra `1/(k+1)` on births, which amounts to sampling under
//! an accelerated Poisson prior on `k`.

use std::f64::consts::PI;

use rand::Rng;

use crate::error::{Error, Result};
use crate::mcmc::{MoveDetail, MoveLabel, MoveSet, ProposalOutcome, TargetDensity};
use crate::state::{Component, VarDimState};

pub const BIRTH: MoveLabel = MoveLabel("birth");
pub const DEATH: MoveLabel = MoveLabel("death");
pub const UPDATE: MoveLabel = MoveLabel("update");

/// Default share of the move budget given to each of birth and death.
pub const DEFAULT_JUMP_SCALE: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Representation {
    Unsorted,
    Sorted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RatioMode {
    Corrected,
    Legacy,
}

impl std::str::FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unsorted" => Ok(Self::Unsorted),
            "sorted" => Ok(Self::Sorted),
            other => Err(Error::Config(format!("unknown representation `{other}`"))),
        }
    }
}

impl std::fmt::Display for Representation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Unsorted => "unsorted",
            Self::Sorted => "sorted",
        })
    }
}

impl std::str::FromStr for RatioMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corrected" => Ok(Self::Corrected),
            "legacy" => Ok(Self::Legacy),
            other => Err(Error::Config(format!("unknown ratio mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for RatioMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Corrected => "corrected",
            Self::Legacy => "legacy",
        })
    }
}

/// Proposal distribution `q(s) ν(ds)` for new components.
pub trait ComponentProposal<S> {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> S;

    /// `log q(s)`; must agree with [`ComponentProposal::sample`].
    fn log_density(&self, s: &S) -> f64;

    fn contains(&self, s: &S) -> bool;

    /// Log probability that a draw falls strictly between `lo` and `hi`
    /// (`None` meaning the edge of the space).
    fn log_mass_between(&self, lo: Option<&S>, hi: Option<&S>) -> f64;
}

/// Uniform density on an open interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UniformInterval {
    pub lo: f64,
    pub hi: f64,
}

impl UniformInterval {
    /// Radial frequencies on `(0, π)`.
    pub const FREQUENCY: Self = Self { lo: 0.0, hi: PI };
}

impl ComponentProposal<f64> for UniformInterval {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let s = rng.random_range(self.lo..self.hi);
            if s > self.lo {
                return s;
            }
        }
    }

    fn log_density(&self, s: &f64) -> f64 {
        if self.contains(s) {
            -(self.hi - self.lo).ln()
        } else {
            f64::NEG_INFINITY
        }
    }

    fn contains(&self, s: &f64) -> bool {
        *s > self.lo && *s < self.hi
    }

    fn log_mass_between(&self, lo: Option<&f64>, hi: Option<&f64>) -> f64 {
        let a = lo.copied().unwrap_or(self.lo).max(self.lo);
        let b = hi.copied().unwrap_or(self.hi).min(self.hi);
        ((b - a).max(0.0) / (self.hi - self.lo)).ln()
    }
}

/// A pmf over the labelled points `0..len`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteProposal {
    pmf: Vec<f64>,
}

impl DiscreteProposal {
    pub fn new(pmf: Vec<f64>) -> Result<Self> {
        let total: f64 = pmf.iter().sum();
        if pmf.is_empty() || pmf.iter().any(|&p| !(p >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "proposal pmf must be nonnegative and sum to 1 (sum = {total})"
            )));
        }
        Ok(Self { pmf })
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }
}

impl ComponentProposal<usize> for DiscreteProposal {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (i, &p) in self.pmf.iter().enumerate() {
            acc += p;
            if u < acc {
                return i;
            }
        }
        self.pmf.iter().rposition(|&p| p > 0.0).unwrap_or(0)
    }

    fn log_density(&self, s: &usize) -> f64 {
        self.pmf.get(*s).map_or(f64::NEG_INFINITY, |p| p.ln())
    }

    fn contains(&self, s: &usize) -> bool {
        *s < self.pmf.len()
    }

    fn log_mass_between(&self, lo: Option<&usize>, hi: Option<&usize>) -> f64 {
        let start = lo.map_or(0, |l| l + 1);
        let end = hi.map_or(self.pmf.len(), |h| *h).min(self.pmf.len());
        if start >= end {
            return f64::NEG_INFINITY;
        }
        self.pmf[start..end].iter().sum::<f64>().ln()
    }
}

/// Birth and death probabilities as functions of the model order.
pub trait JumpSchedule {
    fn k_max(&self) -> usize;
    fn birth(&self, k: usize) -> f64;
    fn death(&self, k: usize) -> f64;
}

/// `(p_b(k), p_d(k))` for the `c·min` schedule built from a truncated Poisson
/// prior of mean `lambda` on `{0, …, k_max}`:
///
/// `p_b(k) = c·min{1, p₀(k+1)/p₀(k)}`, `p_d(k) = c·min{1, p₀(k−1)/p₀(k)}`,
///
/// with `p_d(0) = 0` and `p_b(k_max) = 0`, so that
/// `p_d(k+1)/p_b(k) = p₀(k)/p₀(k+1) = (k+1)/Λ`.
pub fn schedule_probabilities(k: usize, k_max: usize, lambda: f64, c: f64) -> Result<(f64, f64)> {
    if !(c > 0.0) || !(lambda > 0.0) || k > k_max {
        return Err(Error::Config(format!(
            "invalid schedule arguments k={k}, k_max={k_max}, lambda={lambda}, c={c}"
        )));
    }
    let birth = if k == k_max {
        0.0
    } else {
        c * (lambda / (k + 1) as f64).min(1.0)
    };
    let death = if k == 0 {
        0.0
    } else {
        c * (k as f64 / lambda).min(1.0)
    };
    if birth + death > 1.0 {
        return Err(Error::Config(format!(
            "c = {c} gives p_b + p_d = {} > 1 at k = {k}",
            birth + death
        )));
    }
    Ok((birth, death))
}

/// The `c·min` truncated-Poisson schedule; see [`schedule_probabilities`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoissonSchedule {
    lambda: f64,
    k_max: usize,
    c: f64,
}

impl PoissonSchedule {
    pub fn new(lambda: f64, k_max: usize, c: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 0.5) {
            return Err(Error::Config(format!(
                "schedule constant c = {c} not in (0, 0.5]"
            )));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Config(format!("lambda = {lambda} must be positive")));
        }
        Ok(Self { lambda, k_max, c })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl JumpSchedule for PoissonSchedule {
    fn k_max(&self) -> usize {
        self.k_max
    }

    fn birth(&self, k: usize) -> f64 {
        if k >= self.k_max {
            0.0
        } else {
            self.c * (self.lambda / (k + 1) as f64).min(1.0)
        }
    }

    fn death(&self, k: usize) -> f64 {
        if k == 0 || k > self.k_max {
            0.0
        } else {
            self.c * (k as f64 / self.lambda).min(1.0)
        }
    }
}

/// Explicit per-order probabilities, indexed by `k = 0..=k_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct TableSchedule {
    birth: Vec<f64>,
    death: Vec<f64>,
}

impl TableSchedule {
    pub fn new(birth: Vec<f64>, death: Vec<f64>) -> Result<Self> {
        if birth.len() != death.len() || birth.is_empty() {
            return Err(Error::LengthMismatch(birth.len(), death.len()));
        }
        let k_max = birth.len() - 1;
        if death[0] != 0.0 || birth[k_max] != 0.0 {
            return Err(Error::Config("need p_d(0) = 0 and p_b(k_max) = 0".into()));
        }
        for (k, (&b, &d)) in birth.iter().zip(&death).enumerate() {
            if !(b >= 0.0 && d >= 0.0 && b + d <= 1.0 + 1e-15) {
                return Err(Error::Config(format!(
                    "invalid jump probabilities at k = {k}: p_b = {b}, p_d = {d}"
                )));
            }
        }
        Ok(Self { birth, death })
    }

    /// Constant `p_b = p_d = c` away from the boundaries.
    pub fn constant(k_max: usize, c: f64) -> Result<Self> {
        let birth = (0..=k_max)
            .map(|k| if k < k_max { c } else { 0.0 })
            .collect();
        let death = (0..=k_max).map(|k| if k > 0 { c } else { 0.0 }).collect();
        Self::new(birth, death)
    }
}

impl JumpSchedule for TableSchedule {
    fn k_max(&self) -> usize {
        self.birth.len() - 1
    }

    fn birth(&self, k: usize) -> f64 {
        self.birth.get(k).copied().unwrap_or(0.0)
    }

    fn death(&self, k: usize) -> f64 {
        self.death.get(k).copied().unwrap_or(0.0)
    }
}

/// Everything a Birth-or-Death kernel needs besides the target.
#[derive(Clone, Debug)]
pub struct BirthDeathSchedule<Q, J> {
    pub jumps: J,
    pub proposal: Q,
    pub representation: Representation,
    pub ratio_mode: RatioMode,
}

impl<Q, J: JumpSchedule> BirthDeathSchedule<Q, J> {
    pub fn new(
        jumps: J,
        proposal: Q,
        representation: Representation,
        ratio_mode: RatioMode,
    ) -> Self {
        Self {
            jumps,
            proposal,
            representation,
            ratio_mode,
        }
    }
}

fn ln_positive(p: f64, what: &str) -> Result<f64> {
    if p > 0.0 {
        Ok(p.ln())
    } else {
        Err(Error::InvalidMove(format!("{what} probability is {p}")))
    }
}

/// Log ratio of a birth from order `k`, before any representation terms.
fn birth_core<J: JumpSchedule>(
    k: usize,
    log_target_diff: f64,
    log_q: f64,
    jumps: &J,
) -> Result<f64> {
    if !log_q.is_finite() {
        return Err(Error::InvalidMove(format!(
            "proposal density of the new component is exp({log_q})"
        )));
    }
    let ln_pb = ln_positive(jumps.birth(k), "birth")?;
    let ln_pd = ln_positive(jumps.death(k + 1), "reverse death")?;
    Ok(log_target_diff + ln_pd - ln_pb - log_q)
}

/// Log ratio of a death from order `k` (the reverse of a birth from `k - 1`).
fn death_core<J: JumpSchedule>(
    k: usize,
    log_target_diff: f64,
    log_q: f64,
    jumps: &J,
) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidMove("death from the empty state".into()));
    }
    if !log_q.is_finite() {
        return Err(Error::InvalidMove(format!(
            "proposal density of the removed component is exp({log_q})"
        )));
    }
    let ln_pd = ln_positive(jumps.death(k), "death")?;
    let ln_pb = ln_positive(jumps.birth(k - 1), "reverse birth")?;
    Ok(log_target_diff + ln_pb - ln_pd + log_q)
}

fn log_target_diff<S, T>(x: &VarDimState<S>, x_new: &VarDimState<S>, target: &T) -> f64
where
    T: TargetDensity<VarDimState<S>> + ?Sized,
{
    let new = target.log_density(x_new);
    if new == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    new - target.log_density(x)
}

/// Log MHG ratio of a Birth-or-Death move on unsorted vectors:
/// `log f(x') − log f(x) + log p_d(x') − log p_b(x) − log q(s*)` for a birth
/// and the exact negation, roles swapped, for a death.
pub fn bod_log_ratio<S, Q, J, T>(
    x: &VarDimState<S>,
    x_new: &VarDimState<S>,
    detail: &MoveDetail,
    sched: &BirthDeathSchedule<Q, J>,
    target: &T,
) -> Result<f64>
where
    S: Component,
    J: JumpSchedule,
    T: TargetDensity<VarDimState<S>> + ?Sized,
{
    let k = x.order();
    let diff = log_target_diff(x, x_new, target);
    match *detail {
        MoveDetail::Birth { log_q, .. } => birth_core(k, diff, log_q, &sched.jumps),
        MoveDetail::Death { log_q, .. } => death_core(k, diff, log_q, &sched.jumps),
        _ => Err(Error::InvalidMove("not a birth or death".into())),
    }
}

/// The historical ratio: [`bod_log_ratio`] with an extra `−log(k+1)` on a
/// birth from order `k` and `+log(k)` on a death from order `k`.
pub fn legacy_log_ratio<S, Q, J, T>(
    x: &VarDimState<S>,
    x_new: &VarDimState<S>,
    detail: &MoveDetail,
    sched: &BirthDeathSchedule<Q, J>,
    target: &T,
) -> Result<f64>
where
    S: Component,
    J: JumpSchedule,
    T: TargetDensity<VarDimState<S>> + ?Sized,
{
    let corrected = bod_log_ratio(x, x_new, detail, sched, target)?;
    Ok(corrected + legacy_adjustment(x.order(), detail))
}

fn legacy_adjustment(k: usize, detail: &MoveDetail) -> f64 {
    match detail {
        MoveDetail::Birth { .. } => -((k + 1) as f64).ln(),
        MoveDetail::Death { .. } => (k as f64).ln(),
        _ => 0.0,
    }
}

/// Log MHG ratio on sorted vectors, where `target` returns the sorted density
/// `f̃_k`. The slot probability `η_i(x)` cancels and the reverse death picks
/// one of `k+1` components:
/// `log f̃(x') − log f̃(x) + log p_d(x') − log(k+1) − log p_b(x) − log q(s*)`.
pub fn sorted_log_ratio<S, Q, J, T>(
    x: &VarDimState<S>,
    x_new: &VarDimState<S>,
    detail: &MoveDetail,
    sched: &BirthDeathSchedule<Q, J>,
    target: &T,
) -> Result<f64>
where
    S: Component,
    J: JumpSchedule,
    T: TargetDensity<VarDimState<S>> + ?Sized,
{
    if !x.is_sorted() || !x_new.is_sorted() {
        return Err(Error::InvalidMove(
            "sorted ratio evaluated on an unsorted vector".into(),
        ));
    }
    let k = x.order();
    let diff = log_target_diff(x, x_new, target);
    let r = match *detail {
        MoveDetail::Birth { log_q, .. } => {
            birth_core(k, diff, log_q, &sched.jumps)? - ((k + 1) as f64).ln()
        }
        MoveDetail::Death { log_q, .. } => {
            death_core(k, diff, log_q, &sched.jumps)? + (k as f64).ln()
        }
        _ => return Err(Error::InvalidMove("not a birth or death".into())),
    };
    Ok(match sched.ratio_mode {
        RatioMode::Corrected => r,
        RatioMode::Legacy => r + legacy_adjustment(k, detail),
    })
}

fn unsorted_ratio<S, Q, J, T>(
    x: &VarDimState<S>,
    x_new: &VarDimState<S>,
    detail: &MoveDetail,
    sched: &BirthDeathSchedule<Q, J>,
    target: &T,
) -> Result<f64>
where
    S: Component,
    J: JumpSchedule,
    T: TargetDensity<VarDimState<S>> + ?Sized,
{
    match sched.ratio_mode {
        RatioMode::Corrected => bod_log_ratio(x, x_new, detail, sched, target),
        RatioMode::Legacy => legacy_log_ratio(x, x_new, detail, sched, target),
    }
}

/// The birth that inserts `s_star` at slot `index` of an unsorted vector.
pub fn birth_at<S, Q, J, T>(
    x: &VarDimState<S>,
    index: usize,
    s_star: S,
    sched: &BirthDeathSchedule<Q, J>,
    target: &T,
) -> Result<ProposalOutcome<VarDimState<S>>>
where
    S: Component,
    Q: ComponentProposal<S>,
    J: JumpSchedule,
    T: TargetDensity<VarDimState<S>> + ?Sized,
{
    if index > x.order() {
        return Err(Error::InvalidMove(format!(
            "birth slot {index} out of range"
        )));
    }
    let detail = MoveDetail::Birth {
        index,
        log_q: sched.proposal.log_density(&s_star),
        log_eta: None,
    };
    let proposed = x.inserted(index, s_star);
    let log_ratio = unsorted_ratio(x, &proposed, &detail, sched, target)?;
    Ok(ProposalOutcome {
        proposed,
        log_ratio,
        label: BIRTH,
        detail,
    })
}

/// Draws `s* ~ q` and a uniform slot in `{0, …, k}`, and inserts it.
pub fn birth_propose_unsorted<S, Q, J, T, R>(
    x: &VarDimState<S>,
    sched: &BirthDeathSchedule<Q, J>,
    target: &T,
    rng: &mut R,
) -> Result<ProposalOutcome<VarDimState<S>>>
where
    S: Component,
    Q: ComponentProposal<S>,
    J: JumpSchedule,
    T: TargetDensity<VarDimState<S>> + ?Sized,
    R: Rng + ?Sized,
{
    let k = x.order();
    if k >= sched.jumps.k_max() {
        return Err(Error::InvalidMove(format!("birth at k = k_max = {k}")));
    }
    let s_star = sched.proposal.sample(rng);
    if !sched.proposal.contains(&s_star) {
        return Err(Error::OutOfSupport);
    }
    let index = rng.random_range(0..=k);
    birth_at(x, index, s_star, sched, target)
}

/// The death that removes the component at `index`.
pub fn death_at<S, Q, J, T>(
    x: &VarDimState<S>,
    index: usize,
    sched: &BirthDeathSchedule<Q, J>,
    target: &T,
) -> Result<ProposalOutcome<VarDimState<S>>>
where
    S: Component,
    Q: ComponentProposal<S>,
    J: JumpSchedule,
    T: TargetDensity<VarDimState<S>> + ?Sized,
{
    if index >= x.order() {
        return Err(Error::InvalidMove(format!(
            "death index {index} with k = {}",
            x.order()
        )));
    }
    let (proposed, removed) = x.removed(index);
    let detail = MoveDetail::Death {
        index,
        log_q: sched.proposal.log_density(&removed),
    };
    let log_ratio = match sched.representation {
        Representation::Unsorted => unsorted_ratio(x, &proposed, &detail, sched, target)?,
        Representation::Sorted => sorted_log_ratio(x, &proposed, &detail, sched, target)?,
    };
    Ok(ProposalOutcome {
        proposed,
        log_ratio,
        label: DEATH,
        detail,
    })
}

/// Removes a uniformly chosen component. Both representations share it.
pub fn death_propose<S, Q, J, T, R>(
    x: &VarDimState<S>,
    sched: &BirthDeathSchedule<Q, J>,
    target: &T,
    rng: &mut R,
) -> Result<ProposalOutcome<VarDimState<S>>>
where
    S: Component,
    Q: ComponentProposal<S>,
    J: JumpSchedule,
    T: TargetDensity<VarDimState<S>> + ?Sized,
    R: Rng + ?Sized,
{
    if x.order() == 0 {
        return Err(Error::InvalidMove("death from the empty state".into()));
    }
    let index = rng.random_range(0..x.order());
    death_at(x, index, sched, target)
}

/// The sorted birth of `s_star`: inserted at the only slot keeping `x`
/// sorted. A tie with an existing component yields a reject-surely outcome.
pub fn sorted_birth_with<S, Q, J, T>(
    x: &VarDimState<S>,
    s_star: S,
    sched: &BirthDeathSchedule<Q, J>,
    target: &T,
) -> Result<ProposalOutcome<VarDimState<S>>>
where
    S: Component,
    Q: ComponentProposal<S>,
    J: JumpSchedule,
    T: TargetDensity<VarDimState<S>> + ?Sized,
{
    if !x.is_sorted() {
        return Err(Error::InvalidMove(
            "sorted birth from an unsorted vector".into(),
        ));
    }
    let comps = x.components();
    let index = comps.partition_point(|c| *c < s_star);
    let tie = comps.get(index).is_some_and(|c| *c == s_star);
    let log_eta = sched
        .proposal
        .log_mass_between(index.checked_sub(1).map(|i| &comps[i]), comps.get(index));
    let detail = MoveDetail::Birth {
        index,
        log_q: sched.proposal.log_density(&s_star),
        log_eta: Some(log_eta),
    };
    let proposed = x.inserted(index, s_star);
    let log_ratio = if tie {
        f64::NEG_INFINITY
    } else {
        sorted_log_ratio(x, &proposed, &detail, sched, target)?
    };
    Ok(ProposalOutcome {
        proposed,
        log_ratio,
        label: BIRTH,
        detail,
    })
}

/// Draws `s* ~ q` and inserts it at its sorted position.
pub fn birth_propose_sorted<S, Q, J, T, R>(
    x: &VarDimState<S>,
    sched: &BirthDeathSchedule<Q, J>,
    target: &T,
    rng: &mut R,
) -> Result<ProposalOutcome<VarDimState<S>>>
where
    S: Component,
    Q: ComponentProposal<S>,
    J: JumpSchedule,
    T: TargetDensity<VarDimState<S>> + ?Sized,
    R: Rng + ?Sized,
{
    if x.order() >= sched.jumps.k_max() {
        return Err(Error::InvalidMove(format!(
            "birth at k = k_max = {}",
            x.order()
        )));
    }
    let s_star = sched.proposal.sample(rng);
    if !sched.proposal.contains(&s_star) {
        return Err(Error::OutOfSupport);
    }
    sorted_birth_with(x, s_star, sched, target)
}

/// Sorted density `f̃_k = k!·f_k·1_sorted` of an exchangeable target.
#[derive(Clone, Copy, Debug)]
pub struct SortedTarget<T>(pub T);

impl<S: Component, T: TargetDensity<VarDimState<S>>> TargetDensity<VarDimState<S>>
    for SortedTarget<T>
{
    fn log_density(&self, x: &VarDimState<S>) -> f64 {
        if !x.is_sorted() {
            return f64::NEG_INFINITY;
        }
        let lf = self.0.log_density(x);
        if lf == f64::NEG_INFINITY {
            return lf;
        }
        lf + ln_factorial(x.order())
    }
}

pub fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|j| (j as f64).ln()).sum()
}

/// A fixed-dimension move used for the residual mass `1 − p_b − p_d`.
pub trait WithinModelMove<S> {
    fn propose<T, R>(
        &self,
        x: &VarDimState<S>,
        target: &T,
        rng: &mut R,
    ) -> Result<ProposalOutcome<VarDimState<S>>>
    where
        T: TargetDensity<VarDimState<S>> + ?Sized,
        R: Rng + ?Sized;
}

/// Proposes the current state; always accepted.
#[derive(Clone, Copy, Debug, Default)]
pub struct Hold;

impl<S: Component> WithinModelMove<S> for Hold {
    fn propose<T, R>(
        &self,
        x: &VarDimState<S>,
        _target: &T,
        _rng: &mut R,
    ) -> Result<ProposalOutcome<VarDimState<S>>>
    where
        T: TargetDensity<VarDimState<S>> + ?Sized,
        R: Rng + ?Sized,
    {
        Ok(hold(x))
    }
}

pub(crate) fn hold<S: Component>(x: &VarDimState<S>) -> ProposalOutcome<VarDimState<S>> {
    ProposalOutcome {
        proposed: x.clone(),
        log_ratio: 0.0,
        label: UPDATE,
        detail: MoveDetail::Hold,
    }
}

const BOD_LABELS: [MoveLabel; 3] = [BIRTH, DEATH, UPDATE];

/// The Birth-or-Death mixture kernel with moves `birth`, `death` and
/// `update`, selected with probabilities `p_b(k)`, `p_d(k)` and
/// `1 − p_b(k) − p_d(k)`. Birth and death are each other's reverse.
#[derive(Clone, Debug)]
pub struct BirthOrDeath<Q, J, W = Hold> {
    pub schedule: BirthDeathSchedule<Q, J>,
    pub within: W,
}

impl<Q, J, W> BirthOrDeath<Q, J, W> {
    pub fn new(schedule: BirthDeathSchedule<Q, J>, within: W) -> Self {
        Self { schedule, within }
    }
}

impl<S, Q, J, W> MoveSet<VarDimState<S>> for BirthOrDeath<Q, J, W>
where
    S: Component,
    Q: ComponentProposal<S>,
    J: JumpSchedule,
    W: WithinModelMove<S>,
{
    fn labels(&self) -> &[MoveLabel] {
        &BOD_LABELS
    }

    fn reverse(&self, m: usize) -> usize {
        [1, 0, 2][m]
    }

    fn selection_probability(&self, x: &VarDimState<S>, m: usize) -> f64 {
        let k = x.order();
        let pb = self.schedule.jumps.birth(k);
        let pd = self.schedule.jumps.death(k);
        match m {
            0 => pb,
            1 => pd,
            2 => (1.0 - pb - pd).max(0.0),
            _ => 0.0,
        }
    }

    fn propose<T, R>(
        &self,
        m: usize,
        x: &VarDimState<S>,
        target: &T,
        rng: &mut R,
    ) -> Result<ProposalOutcome<VarDimState<S>>>
    where
        T: TargetDensity<VarDimState<S>> + ?Sized,
        R: Rng + ?Sized,
    {
        match (m, self.schedule.representation) {
            (0, Representation::Unsorted) => birth_propose_unsorted(x, &self.schedule, target, rng),
            (0, Representation::Sorted) => birth_propose_sorted(x, &self.schedule, target, rng),
            (1, _) => death_propose(x, &self.schedule, target, rng),
            (2, _) => self.within.propose(x, target, rng),
            _ => Err(Error::InvalidMove(format!("unknown move index {m}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::select_move;
    use crate::rng;

    /// Flat target on ordered tuples of distinct points: `log f = w_k`.
    struct OrderWeights(Vec<f64>);

    impl<S: Component> TargetDensity<VarDimState<S>> for OrderWeights {
        fn log_density(&self, x: &VarDimState<S>) -> f64 {
            self.0.get(x.order()).copied().unwrap_or(f64::NEG_INFINITY)
        }
    }

    fn uniform_sched(
        mode: RatioMode,
        repr: Representation,
    ) -> BirthDeathSchedule<UniformInterval, TableSchedule> {
        BirthDeathSchedule::new(
            TableSchedule::constant(5, 0.25).unwrap(),
            UniformInterval::FREQUENCY,
            repr,
            mode,
        )
    }

    fn assert_within_binomial(count: usize, n: usize, p: f64) {
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        let dev = (count as f64 - n as f64 * p).abs();
        assert!(dev < 3.0 * sigma, "count {count} of {n}, expected p = {p}");
    }

    #[test]
    fn birth_from_empty_uses_the_only_slot() {
        let sched = uniform_sched(RatioMode::Corrected, Representation::Unsorted);
        let x = VarDimState::<f64>::empty();
        let mut rng = rng::stream(1, 0);
        let out =
            birth_propose_unsorted(&x, &sched, &OrderWeights(vec![0.0; 6]), &mut rng).unwrap();
        assert_eq!(out.proposed.order(), 1);
        assert!(matches!(out.detail, MoveDetail::Birth { index: 0, .. }));
    }

    #[test]
    fn birth_at_inserts_at_the_requested_slot() {
        let sched = uniform_sched(RatioMode::Corrected, Representation::Unsorted);
        let x = VarDimState::new(vec![0.1, 0.2]);
        let out = birth_at(&x, 1, 0.3, &sched, &OrderWeights(vec![0.0; 6])).unwrap();
        assert_eq!(out.proposed.components(), &[0.1, 0.3, 0.2]);
    }

    #[test]
    fn death_removes_the_requested_component() {
        let sched = uniform_sched(RatioMode::Corrected, Representation::Unsorted);
        let target = OrderWeights(vec![0.0; 6]);
        let x = VarDimState::new(vec![0.5]);
        let out = death_at(&x, 0, &sched, &target).unwrap();
        assert_eq!(out.proposed.order(), 0);
        let x = VarDimState::new(vec![0.1, 0.2, 0.3]);
        let out = death_at(&x, 1, &sched, &target).unwrap();
        assert_eq!(out.proposed.components(), &[0.1, 0.3]);
    }

    #[test]
    fn death_from_empty_is_an_error() {
        let sched = uniform_sched(RatioMode::Corrected, Representation::Unsorted);
        let mut rng = rng::stream(1, 0);
        let x = VarDimState::<f64>::empty();
        assert!(death_propose(&x, &sched, &OrderWeights(vec![0.0; 6]), &mut rng).is_err());
    }

    #[test]
    fn insertion_and_removal_slots_are_uniform() {
        let sched = uniform_sched(RatioMode::Corrected, Representation::Unsorted);
        let target = OrderWeights(vec![0.0; 6]);
        let mut rng = rng::stream(4, 0);
        let x = VarDimState::new(vec![0.5, 1.5]);
        let n = 100_000;
        let mut births = [0usize; 3];
        let mut deaths = [0usize; 2];
        for _ in 0..n {
            if let MoveDetail::Birth { index, .. } =
                birth_propose_unsorted(&x, &sched, &target, &mut rng)
                    .unwrap()
                    .detail
            {
                births[index] += 1;
            }
            if let MoveDetail::Death { index, .. } =
                death_propose(&x, &sched, &target, &mut rng).unwrap().detail
            {
                deaths[index] += 1;
            }
        }
        births
            .iter()
            .for_each(|&c| assert_within_binomial(c, n, 1.0 / 3.0));
        deaths
            .iter()
            .for_each(|&c| assert_within_binomial(c, n, 0.5));
    }

    #[test]
    fn neutral_birth_has_zero_log_ratio() {
        // f_{k+1} = f_k, p_d(x') = p_b(x), q(s*) = 1 on an interval of length 1.
        let sched = BirthDeathSchedule::new(
            TableSchedule::constant(3, 0.3).unwrap(),
            UniformInterval { lo: 0.0, hi: 1.0 },
            Representation::Unsorted,
            RatioMode::Corrected,
        );
        let x = VarDimState::new(vec![0.2]);
        let out = birth_at(&x, 0, 0.7, &sched, &OrderWeights(vec![0.0; 4])).unwrap();
        assert_eq!(out.log_ratio, 0.0);
    }

    #[test]
    fn legacy_differs_by_log_k_plus_one() {
        let target = OrderWeights(vec![0.0, -0.3, 0.4, 0.1, -1.0, 0.0]);
        let corrected = uniform_sched(RatioMode::Corrected, Representation::Unsorted);
        let legacy = uniform_sched(RatioMode::Legacy, Representation::Unsorted);
        for k in 0..5 {
            let x = VarDimState::new((0..k).map(|j| 0.1 + 0.2 * j as f64).collect());
            let a = birth_at(&x, 0, 2.0, &corrected, &target).unwrap();
            let b = birth_at(&x, 0, 2.0, &legacy, &target).unwrap();
            assert!((b.log_ratio - a.log_ratio + ((k + 1) as f64).ln()).abs() < 1e-14);
            if k > 0 {
                let a = death_at(&x, 0, &corrected, &target).unwrap();
                let b = death_at(&x, 0, &legacy, &target).unwrap();
                assert!((b.log_ratio - a.log_ratio - (k as f64).ln()).abs() < 1e-14);
            }
        }
        let x = VarDimState::<f64>::empty();
        let a = birth_at(&x, 0, 1.0, &corrected, &target).unwrap();
        let b = birth_at(&x, 0, 1.0, &legacy, &target).unwrap();
        assert_eq!(a.log_ratio, b.log_ratio);
    }

    #[test]
    fn birth_with_zero_density_component_is_an_error() {
        let sched = uniform_sched(RatioMode::Corrected, Representation::Unsorted);
        let x = VarDimState::<f64>::empty();
        assert!(birth_at(&x, 0, 4.0, &sched, &OrderWeights(vec![0.0; 6])).is_err());
    }

    #[test]
    fn sorted_birth_inserts_in_order() {
        let sched = uniform_sched(RatioMode::Corrected, Representation::Sorted);
        let target = SortedTarget(OrderWeights(vec![0.0; 6]));
        let x = VarDimState::new(vec![0.3, 0.9]);
        let out = sorted_birth_with(&x, 0.5, &sched, &target).unwrap();
        assert_eq!(out.proposed.components(), &[0.3, 0.5, 0.9]);
        match out.detail {
            MoveDetail::Birth { index, log_eta, .. } => {
                assert_eq!(index, 1);
                assert!((log_eta.unwrap() - (0.6 / PI).ln()).abs() < 1e-12);
            }
            _ => panic!("expected a birth"),
        }
        let empty = VarDimState::<f64>::empty();
        let out = sorted_birth_with(&empty, 2.0, &sched, &target).unwrap();
        assert!(matches!(out.detail, MoveDetail::Birth { index: 0, .. }));
    }

    #[test]
    fn sorted_birth_tie_is_rejected_surely() {
        let sched = uniform_sched(RatioMode::Corrected, Representation::Sorted);
        let target = SortedTarget(OrderWeights(vec![0.0; 6]));
        let x = VarDimState::new(vec![0.3, 0.9]);
        let out = sorted_birth_with(&x, 0.9, &sched, &target).unwrap();
        assert_eq!(out.log_ratio, f64::NEG_INFINITY);
    }

    #[test]
    fn sorted_ratio_rejects_unsorted_input() {
        let sched = uniform_sched(RatioMode::Corrected, Representation::Sorted);
        let target = SortedTarget(OrderWeights(vec![0.0; 6]));
        let x = VarDimState::new(vec![0.9, 0.3]);
        assert!(sorted_birth_with(&x, 0.5, &sched, &target).is_err());
    }

    #[test]
    fn slot_probability_matches_gap_width() {
        // Monte Carlo estimate of the probability of landing in slot 1.
        let q = UniformInterval::FREQUENCY;
        let x = VarDimState::new(vec![0.3, 0.9]);
        let mut rng = rng::stream(6, 0);
        let n = 100_000;
        let hits = (0..n)
            .filter(|_| {
                let s = q.sample(&mut rng);
                x.components().partition_point(|c| *c < s) == 1
            })
            .count();
        assert_within_binomial(hits, n, 0.6 / PI);
    }

    #[test]
    fn constant_sorted_target_from_empty() {
        // f̃ constant, p_b = p_d, q uniform on (0, π): log ratio = −log q(s*) − log 1.
        let sched = uniform_sched(RatioMode::Corrected, Representation::Sorted);
        let flat = |_: &VarDimState<f64>| 0.0;
        struct F<G>(G);
        impl<G: Fn(&VarDimState<f64>) -> f64> TargetDensity<VarDimState<f64>> for F<G> {
            fn log_density(&self, x: &VarDimState<f64>) -> f64 {
                (self.0)(x)
            }
        }
        let out = sorted_birth_with(&VarDimState::empty(), 1.0, &sched, &F(flat)).unwrap();
        assert!((out.log_ratio - PI.ln()).abs() < 1e-15);
    }

    #[test]
    fn schedule_examples() {
        let (pb, pd) = schedule_probabilities(0, 32, 5.0, 0.25).unwrap();
        assert_eq!((pb, pd), (0.25, 0.0));
        let (pb, _) = schedule_probabilities(7, 32, 5.0, 0.25).unwrap();
        assert_eq!(pb, 0.25 * (5.0 / 8.0));
        let (pb, _) = schedule_probabilities(32, 32, 5.0, 0.25).unwrap();
        assert_eq!(pb, 0.0);
        assert!(schedule_probabilities(3, 32, 5.0, 0.0).is_err());
        assert!(schedule_probabilities(5, 32, 5.0, 0.9).is_err());
    }

    #[test]
    fn schedule_identity_holds_for_every_order() {
        for &lambda in &[0.5, 1.0, 3.0, 5.0, 17.5] {
            let s = PoissonSchedule::new(lambda, 32, 0.25).unwrap();
            for k in 0..32 {
                let lhs = s.death(k + 1) / s.birth(k);
                let rhs = (k + 1) as f64 / lambda;
                assert!(
                    (lhs - rhs).abs() <= 1e-15 * rhs,
                    "k = {k}, lambda = {lambda}"
                );
            }
        }
    }

    #[test]
    fn death_never_selected_at_empty_state() {
        let moves = BirthOrDeath::new(
            BirthDeathSchedule::new(
                TableSchedule::constant(4, 0.5).unwrap(),
                UniformInterval::FREQUENCY,
                Representation::Unsorted,
                RatioMode::Corrected,
            ),
            Hold,
        );
        let x = VarDimState::<f64>::empty();
        let mut rng = rng::stream(2, 0);
        for _ in 0..10_000 {
            assert_ne!(select_move(&moves, &x, &mut rng).unwrap(), 1);
        }
    }

    #[test]
    fn birth_selection_frequency_matches_schedule() {
        let moves = BirthOrDeath::new(
            uniform_sched(RatioMode::Corrected, Representation::Unsorted),
            Hold,
        );
        let x = VarDimState::new(vec![0.4, 1.2]);
        let mut rng = rng::stream(3, 0);
        let n = 100_000;
        let births = (0..n)
            .filter(|_| select_move(&moves, &x, &mut rng).unwrap() == 0)
            .count();
        assert_within_binomial(births, n, 0.25);
    }
}

#[cfg(test)]
mod properties {
    use proptest::prelude::*;

    use super::*;

    /// Position-dependent target so slot choice matters.
    struct Wavy;

    impl TargetDensity<VarDimState<f64>> for Wavy {
        fn log_density(&self, x: &VarDimState<f64>) -> f64 {
            x.components()
                .iter()
                .enumerate()
                .map(|(i, s)| ((i + 1) as f64 * s).sin())
                .sum::<f64>()
                - 0.3 * x.order() as f64
        }
    }

    fn sched(
        lambda: f64,
        c: f64,
        repr: Representation,
        mode: RatioMode,
    ) -> BirthDeathSchedule<UniformInterval, PoissonSchedule> {
        BirthDeathSchedule::new(
            PoissonSchedule::new(lambda, 10, c).unwrap(),
            UniformInterval::FREQUENCY,
            repr,
            mode,
        )
    }

    fn state() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(0.01..3.13f64, 0..9)
    }

    fn modes() -> impl Strategy<Value = RatioMode> {
        prop_oneof![Just(RatioMode::Corrected), Just(RatioMode::Legacy)]
    }

    proptest! {
        #[test]
        fn birth_and_reverse_death_are_antisymmetric(
            comps in state(), s_star in 0.01..3.13f64, slot in any::<prop::sample::Index>(),
            lambda in 0.5..12.0f64, c in 0.05..0.5f64, mode in modes(),
        ) {
            let sched = sched(lambda, c, Representation::Unsorted, mode);
            let x = VarDimState::new(comps);
            let i = slot.index(x.order() + 1);
            let fwd = birth_at(&x, i, s_star, &sched, &Wavy).unwrap();
            prop_assert_eq!(fwd.proposed.order(), x.order() + 1);
            prop_assert_eq!(fwd.proposed.components()[i], s_star);
            prop_assert_eq!(fwd.proposed.removed(i).0, x.clone());
            let back = death_at(&fwd.proposed, i, &sched, &Wavy).unwrap();
            prop_assert_eq!(&back.proposed, &x);
            prop_assert!((fwd.log_ratio + back.log_ratio).abs() < 1e-12);
        }

        #[test]
        fn sorted_birth_and_death_are_antisymmetric(
            mut comps in state(), s_star in 0.01..3.13f64,
            lambda in 0.5..12.0f64, mode in modes(),
        ) {
            comps.sort_by(f64::total_cmp);
            comps.dedup();
            let sched = sched(lambda, 0.3, Representation::Sorted, mode);
            let x = VarDimState::new(comps);
            prop_assume!(!x.components().contains(&s_star));
            let fwd = sorted_birth_with(&x, s_star, &sched, &Wavy).unwrap();
            prop_assert!(fwd.proposed.is_sorted());
            let MoveDetail::Birth { index, .. } = fwd.detail else { unreachable!() };
            let back = death_at(&fwd.proposed, index, &sched, &Wavy).unwrap();
            prop_assert_eq!(&back.proposed, &x);
            prop_assert!((fwd.log_ratio + back.log_ratio).abs() < 1e-12);
        }

        #[test]
        fn location_terms_cancel(
            comps in state(), s_star in 0.01..3.13f64, slot in any::<prop::sample::Index>(),
            lambda in 0.5..12.0f64,
        ) {
            let sched = sched(lambda, 0.25, Representation::Unsorted, RatioMode::Corrected);
            let x = VarDimState::new(comps);
            let k = x.order();
            let out = birth_at(&x, slot.index(k + 1), s_star, &sched, &Wavy).unwrap();
            // Selection of slot and of the component to remove, both 1/(k+1).
            let j_fwd = sched.jumps.birth(k) / (k + 1) as f64;
            let j_rev = sched.jumps.death(k + 1) / (k + 1) as f64;
            let naive = Wavy.log_density(&out.proposed) - Wavy.log_density(&x) + j_rev.ln()
                - j_fwd.ln()
                - UniformInterval::FREQUENCY.log_density(&s_star);
            prop_assert!((out.log_ratio - naive).abs() < 1e-12);
        }

        #[test]
        fn legacy_differs_by_log_order(
            comps in state(), s_star in 0.01..3.13f64, slot in any::<prop::sample::Index>(),
            lambda in 0.5..12.0f64,
        ) {
            let x = VarDimState::new(comps);
            let k = x.order();
            let i = slot.index(k + 1);
            let corrected = sched(lambda, 0.25, Representation::Unsorted, RatioMode::Corrected);
            let legacy = sched(lambda, 0.25, Representation::Unsorted, RatioMode::Legacy);
            let a = birth_at(&x, i, s_star, &corrected, &Wavy).unwrap();
            let b = birth_at(&x, i, s_star, &legacy, &Wavy).unwrap();
            prop_assert!((b.log_ratio - a.log_ratio + ((k + 1) as f64).ln()).abs() < 1e-12);
        }
    }
}
