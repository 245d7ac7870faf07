//! Named validation suites with pass/fail checks and residuals.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::birth_death::{
    birth_at, BirthDeathSchedule, PoissonSchedule, RatioMode, Representation, UniformInterval,
    DEFAULT_JUMP_SCALE,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::experiment::replicate_in_memory;
use crate::mcmc::ChainSettings;
use crate::oracle::{
    build_transition_matrix, detailed_balance_residual, quadrature_posterior_k,
    stationary_distribution, tv_distance, DiscreteToySpec,
};
use crate::rng::{self, SIGNAL_STREAM};
use crate::sinusoid::{
    accelerated_poisson_pmf, design_matrix, run_sampler, shrinkage, synth_signal,
    truncated_poisson_pmf, ExperimentSpec, HyperSetting, Hyperparameters, SamplerConfig, Signal,
    SinusoidPosterior,
};
use crate::state::VarDimState;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    ToyStationarity,
    RatioCancellation,
    PriorOnly,
    Quadrature,
    SortedEquivalence,
    Fig2Trend,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::ToyStationarity,
        Suite::RatioCancellation,
        Suite::PriorOnly,
        Suite::Quadrature,
        Suite::SortedEquivalence,
        Suite::Fig2Trend,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::ToyStationarity => "toy-stationarity",
            Suite::RatioCancellation => "ratio-cancellation",
            Suite::PriorOnly => "prior-only",
            Suite::Quadrature => "quadrature",
            Suite::SortedEquivalence => "sorted-equivalence",
            Suite::Fig2Trend => "fig2-trend",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Suite::ALL.iter().map(|s| s.name()).collect();
                Error::Config(format!(
                    "unknown suite `{s}`; expected one of {}",
                    names.join(", ")
                ))
            })
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bound {
    Below(f64),
    Above(f64),
    AtLeast(f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub bound: Bound,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, bound: Bound) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
        }
    }

    pub fn pass(&self) -> bool {
        match self.bound {
            Bound::Below(t) => self.value < t,
            Bound::Above(t) => self.value > t,
            Bound::AtLeast(t) => self.value >= t,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (op, t) = match self.bound {
            Bound::Below(t) => ("<", t),
            Bound::Above(t) => (">", t),
            Bound::AtLeast(t) => (">=", t),
        };
        let verdict = if self.pass() { "PASS" } else { "FAIL" };
        write!(
            f,
            "{verdict}  {:<44} {:>12.4e} {op} {t:e}",
            self.name, self.value
        )
    }
}

#[derive(Clone, Debug)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
    pub elapsed: Duration,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(Check::pass)
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "suite {} ({:.2} s)",
            self.suite,
            self.elapsed.as_secs_f64()
        )?;
        for c in &self.checks {
            writeln!(f, "  {c}")?;
        }
        Ok(())
    }
}

fn timed(suite: Suite, f: impl FnOnce() -> Result<Vec<Check>>) -> Result<SuiteReport> {
    let start = Instant::now();
    let checks = f()?;
    Ok(SuiteReport {
        suite,
        checks,
        elapsed: start.elapsed(),
    })
}

/// Runs a suite at its default size.
pub fn run_suite(suite: Suite) -> Result<SuiteReport> {
    match suite {
        Suite::ToyStationarity => toy_stationarity(&ToyParams::default()),
        Suite::RatioCancellation => ratio_cancellation(&RatioParams::default()),
        Suite::PriorOnly => prior_only(&PriorOnlyParams::default()),
        Suite::Quadrature => quadrature(&QuadratureParams::default()),
        Suite::SortedEquivalence => sorted_equivalence(&SortedParams::default()),
        Suite::Fig2Trend => fig2_trend(&Fig2Params::default()),
    }
}

#[derive(Clone, Debug)]
pub struct ToyParams {
    pub toys: usize,
    pub k_max: usize,
    pub seed: u64,
}

impl Default for ToyParams {
    fn default() -> Self {
        Self {
            toys: 24,
            k_max: 2,
            seed: 0,
        }
    }
}

/// Random toys on 3 and 4 points: the corrected kernel's fixed point and
/// detailed balance against the target, and the legacy kernel's violation.
pub fn toy_stationarity(p: &ToyParams) -> Result<SuiteReport> {
    timed(Suite::ToyStationarity, || {
        let mut rng = rng::stream(p.seed, 0);
        let mut worst_tv = 0.0f64;
        let mut worst_balance = 0.0f64;
        let mut weakest_violation = f64::INFINITY;
        for i in 0..p.toys {
            let points = 3 + i % 2;
            let spec =
                DiscreteToySpec::random(points, p.k_max, Representation::Unsorted, &mut rng)?;
            let target = spec.target_pmf();
            let corrected = build_transition_matrix(&spec, RatioMode::Corrected)?;
            let pi = stationary_distribution(&corrected)?;
            worst_tv = worst_tv.max(tv_distance(&pi, &target)?);
            worst_balance = worst_balance.max(detailed_balance_residual(&corrected, &target));
            let legacy = build_transition_matrix(&spec, RatioMode::Legacy)?;
            weakest_violation = weakest_violation.min(detailed_balance_residual(&legacy, &target));
        }
        Ok(vec![
            Check::new("toys checked", p.toys as f64, Bound::AtLeast(20.0)),
            Check::new(
                "max TV(stationary, target), corrected",
                worst_tv,
                Bound::Below(1e-10),
            ),
            Check::new(
                "max detailed-balance residual, corrected",
                worst_balance,
                Bound::Below(1e-12),
            ),
            Check::new(
                "min detailed-balance residual, legacy",
                weakest_violation,
                Bound::Above(1e-9),
            ),
        ])
    })
}

#[derive(Clone, Debug)]
pub struct RatioParams {
    pub configs: usize,
    pub n: usize,
    pub max_order: usize,
    pub seed: u64,
}

impl Default for RatioParams {
    fn default() -> Self {
        Self {
            configs: 1000,
            n: 32,
            max_order: 5,
            seed: 0,
        }
    }
}

/// `yᵀP_k y` through an explicit LU inverse of the Gram matrix.
fn quad_form_by_inverse(y: &[f64], omega: &[f64], delta2: f64) -> Option<f64> {
    let yv = DVector::from_column_slice(y);
    let yty = yv.norm_squared();
    if omega.is_empty() {
        return Some(yty);
    }
    let d = design_matrix(omega, y.len());
    let b = d.transpose() * &yv;
    let inv = (d.transpose() * &d).try_inverse()?;
    Some(yty - shrinkage(delta2) * (b.transpose() * inv * &b)[(0, 0)])
}

fn well_separated(omega: &[f64], gap: f64) -> bool {
    let mut sorted = omega.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.first().is_none_or(|&w| w > gap)
        && sorted.last().is_none_or(|&w| w < PI - gap)
        && sorted.windows(2).all(|w| w[1] - w[0] > gap)
}

/// Birth ratio of the sampler against the closed form
/// `(quad_{k+1}/quad_k)^{-N/2} / (1+δ²)` on random configurations.
pub fn ratio_cancellation(p: &RatioParams) -> Result<SuiteReport> {
    timed(Suite::RatioCancellation, || {
        let mut rng = rng::stream(p.seed, 0);
        let k_max = 32;
        let gap = 2.0 * PI / (4.0 * p.n as f64);
        let mut worst = 0.0f64;
        let mut done = 0;
        while done < p.configs {
            let k = rng.random_range(0..=p.max_order);
            let omega: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..PI)).collect();
            let s_star: f64 = rng.random_range(0.0..PI);
            let mut grown = omega.clone();
            grown.push(s_star);
            if !well_separated(&grown, gap) {
                continue;
            }
            let y: Vec<f64> = (0..p.n)
                .map(|_| StandardNormal.sample(&mut rng))
                .collect::<Vec<f64>>();
            let delta2 = 10f64.powf(rng.random_range(-1.0..3.0));
            let lambda = rng.random_range(0.5..10.0);
            let slot = rng.random_range(0..=k);

            let signal = Signal::new(y.clone())?;
            let target = SinusoidPosterior::new(&signal, Hyperparameters { lambda, delta2 }, k_max);
            let sched = BirthDeathSchedule::new(
                PoissonSchedule::new(lambda, k_max, DEFAULT_JUMP_SCALE)?,
                UniformInterval::FREQUENCY,
                Representation::Unsorted,
                RatioMode::Corrected,
            );
            let out = birth_at(
                &VarDimState::new(omega.clone()),
                slot,
                s_star,
                &sched,
                &target,
            )?;
            let (Some(q0), Some(q1)) = (
                quad_form_by_inverse(&y, &omega, delta2),
                quad_form_by_inverse(&y, &grown, delta2),
            ) else {
                continue;
            };
            let log_closed = -(p.n as f64 / 2.0) * (q1 / q0).ln() - (1.0 + delta2).ln();
            worst = worst.max((out.log_ratio - log_closed).exp_m1().abs());
            done += 1;
        }
        Ok(vec![
            Check::new(
                "configurations",
                done as f64,
                Bound::AtLeast(p.configs as f64),
            ),
            Check::new(
                "max relative error of birth ratio",
                worst,
                Bound::Below(1e-9),
            ),
        ])
    })
}

#[derive(Clone, Debug)]
pub struct PriorOnlyParams {
    pub lambda: f64,
    pub k_max: usize,
    pub samples: usize,
    pub burn_in: usize,
    pub c: f64,
    pub seed: u64,
    pub tolerance: f64,
    pub separation: f64,
}

impl Default for PriorOnlyParams {
    fn default() -> Self {
        Self {
            lambda: 5.0,
            k_max: 32,
            samples: 200_000,
            burn_in: 20_000,
            c: DEFAULT_JUMP_SCALE,
            seed: 0,
            tolerance: 0.02,
            separation: 0.15,
        }
    }
}

fn prior_only_config(
    lambda: f64,
    k_max: usize,
    c: f64,
    ratio_mode: RatioMode,
    representation: Representation,
) -> SamplerConfig {
    SamplerConfig {
        k_max,
        c,
        ratio_mode,
        representation,
        lambda: HyperSetting::Fixed(lambda),
        delta2: HyperSetting::Fixed(100.0),
        flat_likelihood: true,
        ..SamplerConfig::default()
    }
}

/// Any signal will do once the likelihood is switched off.
fn placeholder_signal() -> Result<Signal> {
    Signal::new((0..32).map(|t| (0.5 * t as f64).sin()).collect())
}

fn prior_only_law(
    cfg: &SamplerConfig,
    samples: usize,
    burn_in: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let out = run_sampler(
        &placeholder_signal()?,
        cfg,
        VarDimState::empty(),
        ChainSettings::new(samples + burn_in, burn_in, seed),
    )?;
    Ok(out.order_frequencies(cfg.k_max))
}

/// Prior-only chains: the corrected ratio keeps the truncated Poisson prior
/// on `k`, the legacy ratio turns it into the accelerated Poisson law.
pub fn prior_only(p: &PriorOnlyParams) -> Result<SuiteReport> {
    timed(Suite::PriorOnly, || {
        let poisson = truncated_poisson_pmf(p.lambda, p.k_max);
        let accelerated = accelerated_poisson_pmf(p.lambda, p.k_max);
        let law = |mode, seed| {
            let cfg = prior_only_config(p.lambda, p.k_max, p.c, mode, Representation::Unsorted);
            prior_only_law(&cfg, p.samples, p.burn_in, seed)
        };
        let (corrected, legacy) = rayon::join(
            || law(RatioMode::Corrected, p.seed),
            || law(RatioMode::Legacy, p.seed.wrapping_add(1)),
        );
        let (corrected, legacy) = (corrected?, legacy?);
        Ok(vec![
            Check::new(
                "TV(corrected, Poisson)",
                tv_distance(&corrected, &poisson)?,
                Bound::Below(p.tolerance),
            ),
            Check::new(
                "TV(legacy, accelerated Poisson)",
                tv_distance(&legacy, &accelerated)?,
                Bound::Below(p.tolerance),
            ),
            Check::new(
                "TV(legacy, Poisson)",
                tv_distance(&legacy, &poisson)?,
                Bound::Above(p.separation),
            ),
        ])
    })
}

#[derive(Clone, Debug)]
pub struct QuadratureParams {
    pub n: usize,
    pub omega: f64,
    pub snr_db: f64,
    pub delta2: f64,
    pub lambda: f64,
    pub n_iter: usize,
    pub burn_in: usize,
    pub grid: usize,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for QuadratureParams {
    fn default() -> Self {
        let grid = 200;
        Self {
            n: 32,
            // A midpoint node of the quadrature grid.
            omega: 40.5 * PI / grid as f64,
            snr_db: 20.0,
            delta2: 100.0,
            lambda: 1.0,
            n_iter: 500_000,
            burn_in: 10_000,
            grid,
            seed: 0,
            tolerance: 0.02,
        }
    }
}

/// RJ-MCMC order law against brute-force quadrature at `k_max = 2`.
pub fn quadrature(p: &QuadratureParams) -> Result<SuiteReport> {
    timed(Suite::Quadrature, || {
        let spec = ExperimentSpec {
            true_omega: vec![p.omega],
            true_amp2: vec![1.0],
            snr_db: p.snr_db,
            n: p.n,
            replications: 1,
            base_seed: p.seed,
        };
        let y = synth_signal(&spec, &mut rng::stream(p.seed, SIGNAL_STREAM))?.y;
        let exact = quadrature_posterior_k(&y, p.delta2, p.lambda, 2, p.grid)?;
        let cfg = SamplerConfig {
            k_max: 2,
            lambda: HyperSetting::Fixed(p.lambda),
            delta2: HyperSetting::Fixed(p.delta2),
            ..SamplerConfig::default()
        };
        let out = run_sampler(
            &Signal::new(y)?,
            &cfg,
            VarDimState::empty(),
            ChainSettings::new(p.n_iter, p.burn_in, p.seed),
        )?;
        let sampled = out.order_frequencies(2);
        let worst = exact
            .iter()
            .zip(&sampled)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let mut checks = vec![
            Check::new(
                "|sum(quadrature pmf) - 1|",
                (exact.iter().sum::<f64>() - 1.0).abs(),
                Bound::Below(1e-12),
            ),
            Check::new(
                "max |MCMC - quadrature| over k",
                worst,
                Bound::Below(p.tolerance),
            ),
        ];
        for k in 0..=2 {
            checks.push(Check::new(
                format!(
                    "|MCMC - quadrature| at k={k} ({:.4} vs {:.4})",
                    sampled[k], exact[k]
                ),
                (sampled[k] - exact[k]).abs(),
                Bound::Below(p.tolerance),
            ));
        }
        Ok(checks)
    })
}

#[derive(Clone, Debug)]
pub struct SortedParams {
    pub lambda: f64,
    pub k_max: usize,
    pub samples: usize,
    pub burn_in: usize,
    pub c: f64,
    pub seed: u64,
    pub tolerance: f64,
}

impl Default for SortedParams {
    fn default() -> Self {
        Self {
            lambda: 3.0,
            k_max: 32,
            samples: 100_000,
            burn_in: 10_000,
            c: DEFAULT_JUMP_SCALE,
            seed: 0,
            tolerance: 0.03,
        }
    }
}

/// Sorted and unsorted representations of the same prior-only target.
pub fn sorted_equivalence(p: &SortedParams) -> Result<SuiteReport> {
    timed(Suite::SortedEquivalence, || {
        let law = |repr, seed| {
            let cfg = prior_only_config(p.lambda, p.k_max, p.c, RatioMode::Corrected, repr);
            prior_only_law(&cfg, p.samples, p.burn_in, seed)
        };
        let (unsorted, sorted) = rayon::join(
            || law(Representation::Unsorted, p.seed),
            || law(Representation::Sorted, p.seed.wrapping_add(1)),
        );
        let (unsorted, sorted) = (unsorted?, sorted?);
        let poisson = truncated_poisson_pmf(p.lambda, p.k_max);
        Ok(vec![
            Check::new(
                "TV(sorted, unsorted)",
                tv_distance(&sorted, &unsorted)?,
                Bound::Below(p.tolerance),
            ),
            Check::new(
                "TV(sorted, Poisson)",
                tv_distance(&sorted, &poisson)?,
                Bound::Below(p.tolerance),
            ),
        ])
    })
}

#[derive(Clone, Debug)]
pub struct Fig2Params {
    pub replications: usize,
    pub n_iter: usize,
    pub burn_in: usize,
    pub base_seed: u64,
    pub min_shifted: usize,
}

impl Default for Fig2Params {
    fn default() -> Self {
        Self {
            replications: 10,
            n_iter: 30_000,
            burn_in: 5_000,
            base_seed: 0,
            min_shifted: 8,
        }
    }
}

/// Replications of the three-tone experiment with sampled hyperparameters:
/// the legacy ratio shifts the posterior of `k` to the left.
pub fn fig2_trend(p: &Fig2Params) -> Result<SuiteReport> {
    timed(Suite::Fig2Trend, || {
        let mut cfg = RunConfig {
            n_iter: p.n_iter,
            burn_in: p.burn_in,
            ..RunConfig::default()
        };
        cfg.experiment.replications = p.replications;
        cfg.experiment.base_seed = p.base_seed;
        let true_order = cfg.experiment.true_order();
        let report = replicate_in_memory(&cfg)?;
        let reps = &report.replications;
        let shifted = reps
            .iter()
            .filter(|r| r.mean_legacy < r.mean_corrected)
            .count();
        let modal = reps
            .iter()
            .filter(|r| r.mode_corrected() == true_order)
            .count();
        let mean = |f: fn(&crate::experiment::ReplicationOutcome) -> f64| {
            reps.iter().map(f).sum::<f64>() / reps.len() as f64
        };
        Ok(vec![
            Check::new(
                "replications with E[k] legacy < corrected",
                shifted as f64,
                Bound::AtLeast(p.min_shifted as f64),
            ),
            Check::new(
                format!("replications with corrected mode at k={true_order}"),
                modal as f64,
                Bound::Above(p.replications as f64 / 2.0),
            ),
            Check::new(
                "mean E[k] corrected - legacy",
                mean(|r| r.mean_corrected) - mean(|r| r.mean_legacy),
                Bound::Above(0.0),
            ),
        ])
    })
}
