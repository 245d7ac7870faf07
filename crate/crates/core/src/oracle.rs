//! Exact and brute-force references for the samplers.
//!
//! Discrete toys replace the atomless component space by `M` labelled points.
//! Tuples with repeated points get zero target weight, so a birth that
//! duplicates a component is rejected surely, mirroring the negligible
//! diagonal of the continuous case. On such a space the Birth-or-Death kernel
//! is a finite matrix whose entries are built from the same ratio functions
//! the sampler uses.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::Rng;

use crate::birth_death::{
    birth_at, death_at, sorted_birth_with, BirthDeathSchedule, DiscreteProposal, JumpSchedule,
    RatioMode, Representation, TableSchedule,
};
use crate::error::{Error, Result};
use crate::mcmc::TargetDensity;
use crate::sinusoid::{log_target, Hyperparameters, Signal, SinusoidPosterior};
use crate::state::VarDimState;

/// Row-sum tolerance of a transition matrix.
pub const ROW_SUM_TOL: f64 = 1e-12;
/// L1 residual at which power iteration stops.
pub const STATIONARY_TOL: f64 = 1e-14;
pub const MAX_POWER_ITERATIONS: usize = 1_000_000;

/// All `(k, tuple)` with distinct entries from `0..points` and `k <= k_max`,
/// ordered by `k` then lexicographically. Sorted representation keeps only
/// increasing tuples.
pub fn enumerate_states(
    points: usize,
    k_max: usize,
    representation: Representation,
) -> Vec<VarDimState<usize>> {
    fn extend(
        prefix: &mut Vec<usize>,
        len: usize,
        points: usize,
        sorted: bool,
        out: &mut Vec<VarDimState<usize>>,
    ) {
        if prefix.len() == len {
            out.push(VarDimState::new(prefix.clone()));
            return;
        }
        let start = if sorted {
            prefix.last().map_or(0, |l| l + 1)
        } else {
            0
        };
        for p in start..points {
            if !sorted && prefix.contains(&p) {
                continue;
            }
            prefix.push(p);
            extend(prefix, len, points, sorted, out);
            prefix.pop();
        }
    }
    let sorted = representation == Representation::Sorted;
    let mut out = Vec::new();
    for k in 0..=k_max.min(points) {
        extend(&mut Vec::with_capacity(k), k, points, sorted, &mut out);
    }
    out
}

/// A finite Birth-or-Death problem with an explicit target.
#[derive(Clone, Debug)]
pub struct DiscreteToySpec {
    pub points: usize,
    pub k_max: usize,
    pub representation: Representation,
    pub proposal: DiscreteProposal,
    pub jumps: TableSchedule,
    states: Vec<VarDimState<usize>>,
    weights: Vec<f64>,
}

/// Log target of a toy: `log w(x)` on enumerated states, `-inf` elsewhere.
#[derive(Clone, Debug)]
pub struct ToyTarget {
    log_weights: HashMap<Vec<usize>, f64>,
}

impl TargetDensity<VarDimState<usize>> for ToyTarget {
    fn log_density(&self, x: &VarDimState<usize>) -> f64 {
        self.log_weights
            .get(x.components())
            .copied()
            .unwrap_or(f64::NEG_INFINITY)
    }
}

impl DiscreteToySpec {
    pub fn new(
        points: usize,
        k_max: usize,
        representation: Representation,
        weight: impl Fn(&VarDimState<usize>) -> f64,
        proposal: DiscreteProposal,
        jumps: TableSchedule,
    ) -> Result<Self> {
        if proposal.pmf().len() != points {
            return Err(Error::LengthMismatch(proposal.pmf().len(), points));
        }
        if jumps.k_max() != k_max {
            return Err(Error::LengthMismatch(jumps.k_max(), k_max));
        }
        let states = enumerate_states(points, k_max, representation);
        let weights: Vec<f64> = states.iter().map(weight).collect();
        if weights.iter().any(|w| !(*w >= 0.0)) || weights.iter().all(|&w| w == 0.0) {
            return Err(Error::Config(
                "toy weights must be nonnegative and not all zero".into(),
            ));
        }
        Ok(Self {
            points,
            k_max,
            representation,
            proposal,
            jumps,
            states,
            weights,
        })
    }

    /// Uniform weights, uniform proposal and constant schedule `c`.
    pub fn uniform(
        points: usize,
        k_max: usize,
        representation: Representation,
        c: f64,
    ) -> Result<Self> {
        Self::new(
            points,
            k_max,
            representation,
            |_| 1.0,
            DiscreteProposal::new(vec![1.0 / points as f64; points])?,
            TableSchedule::constant(k_max, c)?,
        )
    }

    /// Random positive weights, random proposal pmf and random schedule.
    pub fn random<R: Rng + ?Sized>(
        points: usize,
        k_max: usize,
        representation: Representation,
        rng: &mut R,
    ) -> Result<Self> {
        let states = enumerate_states(points, k_max, representation);
        let weights: HashMap<Vec<usize>, f64> = states
            .iter()
            .map(|s| (s.components().to_vec(), rng.random_range(0.05..1.0)))
            .collect();
        let raw: Vec<f64> = (0..points).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let mut pmf: Vec<f64> = raw.iter().map(|r| r / total).collect();
        let head: f64 = pmf[..points - 1].iter().sum();
        pmf[points - 1] = 1.0 - head;
        let mut birth = Vec::with_capacity(k_max + 1);
        let mut death = Vec::with_capacity(k_max + 1);
        for k in 0..=k_max {
            birth.push(if k < k_max {
                rng.random_range(0.1..0.5)
            } else {
                0.0
            });
            death.push(if k > 0 {
                rng.random_range(0.1..0.5)
            } else {
                0.0
            });
        }
        Self::new(
            points,
            k_max,
            representation,
            |s| weights[s.components()],
            DiscreteProposal::new(pmf)?,
            TableSchedule::new(birth, death)?,
        )
    }

    pub fn states(&self) -> &[VarDimState<usize>] {
        &self.states
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn target(&self) -> ToyTarget {
        ToyTarget {
            log_weights: self
                .states
                .iter()
                .zip(&self.weights)
                .map(|(s, w)| (s.components().to_vec(), w.ln()))
                .collect(),
        }
    }

    /// Normalized target law over [`DiscreteToySpec::states`].
    pub fn target_pmf(&self) -> Vec<f64> {
        normalize(&self.weights)
    }

    pub fn schedule(
        &self,
        ratio_mode: RatioMode,
    ) -> BirthDeathSchedule<DiscreteProposal, TableSchedule> {
        BirthDeathSchedule::new(
            self.jumps.clone(),
            self.proposal.clone(),
            self.representation,
            ratio_mode,
        )
    }
}

fn normalize(w: &[f64]) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

/// Dense row-stochastic matrix over an enumerated state list.
#[derive(Clone, Debug)]
pub struct TransitionMatrix {
    pub states: Vec<VarDimState<usize>>,
    n: usize,
    entries: Vec<f64>,
}

impl TransitionMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut entries = Vec::with_capacity(n * n);
        for row in &rows {
            if row.len() != n {
                return Err(Error::LengthMismatch(row.len(), n));
            }
            entries.extend_from_slice(row);
        }
        let m = Self {
            states: Vec::new(),
            n,
            entries,
        };
        m.check_rows()?;
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.n + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.entries[from * self.n..(from + 1) * self.n]
    }

    fn check_rows(&self) -> Result<()> {
        for row in 0..self.n {
            let sum: f64 = self.row(row).iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOL || self.row(row).iter().any(|&p| p < 0.0) {
                return Err(Error::RowSum { row, sum });
            }
        }
        Ok(())
    }
}

fn accept_probability(log_ratio: f64) -> f64 {
    if log_ratio >= 0.0 {
        1.0
    } else {
        log_ratio.exp()
    }
}

/// Exact transition matrix of the Birth-or-Death sampler on a toy: every
/// elementary move contributes proposal probability times acceptance
/// probability, and the diagonal absorbs all rejected and held mass.
pub fn build_transition_matrix(
    spec: &DiscreteToySpec,
    ratio_mode: RatioMode,
) -> Result<TransitionMatrix> {
    let states = spec.states.clone();
    let n = states.len();
    let index: HashMap<&[usize], usize> = states
        .iter()
        .enumerate()
        .map(|(i, s)| (s.components(), i))
        .collect();
    let target = spec.target();
    let sched = spec.schedule(ratio_mode);
    let q = spec.proposal.pmf();
    let mut entries = vec![0.0; n * n];

    for (a, x) in states.iter().enumerate() {
        let k = x.order();
        let pb = spec.jumps.birth(k);
        let pd = spec.jumps.death(k);
        let row = &mut entries[a * n..(a + 1) * n];
        let mut moved = 0.0;
        let mut add = |outcome_state: &VarDimState<usize>,
                       prob: f64,
                       log_ratio: f64|
         -> Result<()> {
            let alpha = accept_probability(log_ratio);
            if alpha > 0.0 {
                let b = *index.get(outcome_state.components()).ok_or_else(|| {
                    Error::InvalidMove(format!("accepted move to unknown state {outcome_state:?}"))
                })?;
                row[b] += prob * alpha;
                moved += prob * alpha;
            }
            Ok(())
        };

        if pb > 0.0 {
            for (s_star, &qs) in q.iter().enumerate() {
                if qs == 0.0 {
                    continue;
                }
                match spec.representation {
                    Representation::Unsorted => {
                        let prob = pb * qs / (k + 1) as f64;
                        for slot in 0..=k {
                            let out = birth_at(x, slot, s_star, &sched, &target)?;
                            add(&out.proposed, prob, out.log_ratio)?;
                        }
                    }
                    Representation::Sorted => {
                        let out = sorted_birth_with(x, s_star, &sched, &target)?;
                        add(&out.proposed, pb * qs, out.log_ratio)?;
                    }
                }
            }
        }
        if pd > 0.0 {
            let prob = pd / k as f64;
            for slot in 0..k {
                let out = death_at(x, slot, &sched, &target)?;
                add(&out.proposed, prob, out.log_ratio)?;
            }
        }
        row[a] += 1.0 - moved;
    }

    let m = TransitionMatrix { states, n, entries };
    m.check_rows()?;
    Ok(m)
}

/// Left fixed point of `P` by power iteration on the lazy chain `(I + P)/2`,
/// which has the same invariant law and is aperiodic.
pub fn stationary_distribution(p: &TransitionMatrix) -> Result<Vec<f64>> {
    let n = p.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..MAX_POWER_ITERATIONS {
        next.iter_mut().for_each(|v| *v = 0.0);
        for (a, &mass) in pi.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            for (b, &pab) in p.row(a).iter().enumerate() {
                next[b] += mass * pab;
            }
        }
        let residual: f64 = next.iter().zip(&pi).map(|(x, y)| (x - y).abs()).sum();
        for (v, old) in next.iter_mut().zip(&pi) {
            *v = 0.5 * (*v + old);
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        std::mem::swap(&mut pi, &mut next);
        if residual < STATIONARY_TOL {
            return Ok(pi);
        }
    }
    Err(Error::NonConvergence(MAX_POWER_ITERATIONS))
}

/// `max_{x,x'} |π_x P_{xx'} − π_{x'} P_{x'x}|`.
pub fn detailed_balance_residual(p: &TransitionMatrix, pi: &[f64]) -> f64 {
    let n = p.len();
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in (a + 1)..n {
            worst = worst.max((pi[a] * p.get(a, b) - pi[b] * p.get(b, a)).abs());
        }
    }
    worst
}

/// Posterior law of `k ∈ {0, …, k_max}` by midpoint Riemann sums of the
/// marginal posterior over a `G^k` grid on `(0, π)^k`.
pub fn quadrature_posterior_k(
    y: &[f64],
    delta2: f64,
    lambda: f64,
    k_max: usize,
    grid: usize,
) -> Result<Vec<f64>> {
    if k_max > 2 {
        return Err(Error::Config(format!(
            "quadrature supports k_max <= 2, got {k_max}"
        )));
    }
    if grid < 100 {
        return Err(Error::Config(format!("quadrature grid {grid} < 100")));
    }
    let signal = Signal::new(y.to_vec())?;
    let model = SinusoidPosterior::new(&signal, Hyperparameters { lambda, delta2 }, k_max);
    let h = PI / grid as f64;
    let nodes: Vec<f64> = (0..grid).map(|i| (i as f64 + 0.5) * h).collect();

    // log of each order's integral, combined with max-shifting.
    let mut log_mass = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let logs: Vec<f64> = match k {
            0 => vec![log_target(&[], &model)],
            1 => nodes.iter().map(|&w| log_target(&[w], &model)).collect(),
            _ => nodes
                .iter()
                .flat_map(|&a| nodes.iter().map(move |&b| [a, b]))
                .map(|w| log_target(&w, &model))
                .collect(),
        };
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logs.iter().map(|l| (l - max).exp()).sum();
        log_mass.push(max + sum.ln() + k as f64 * h.ln());
    }
    let max = log_mass.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(normalize(
        &log_mass.iter().map(|l| (l - max).exp()).collect::<Vec<_>>(),
    ))
}

/// `½ Σ |p − q|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch(p.len(), q.len()));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Pearson statistic `Σ (obs − exp)² / exp` of `counts` against `pmf`.
pub fn chi_square_stat(counts: &[u64], pmf: &[f64]) -> Result<f64> {
    if counts.len() != pmf.len() {
        return Err(Error::LengthMismatch(counts.len(), pmf.len()));
    }
    let total: u64 = counts.iter().sum();
    let mut stat = 0.0;
    for (&c, &p) in counts.iter().zip(pmf) {
        let expected = total as f64 * p;
        if expected == 0.0 {
            if c > 0 {
                return Err(Error::Config("positive count where the pmf is zero".into()));
            }
            continue;
        }
        stat += (c as f64 - expected).powi(2) / expected;
    }
    Ok(stat)
}

/// Law of the model order implied by a law over toy states.
pub fn order_marginal(states: &[VarDimState<usize>], pmf: &[f64], k_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; k_max + 1];
    for (s, &p) in states.iter().zip(pmf) {
        out[s.order()] += p;
    }
    out
}
