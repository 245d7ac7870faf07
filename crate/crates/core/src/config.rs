//! Flat `key = value` run configuration.
//!
//! Keys carry a section prefix (`paths.`, `sampler.`, `model.`,
//! `experiment.`, `validate.`); `#` starts a comment. Unknown keys are
//! rejected and every omitted key takes its default.

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mcmc::ChainSettings;
use crate::sinusoid::{ExperimentSpec, GammaPrior, HyperSetting, InverseGammaPrior, SamplerConfig};

pub const SEED_ENV: &str = "TRANSJUMP_SEED";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Run,
    Replicate,
    Validate,
    PriorsPlot,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "run" => Ok(Self::Run),
            "replicate" => Ok(Self::Replicate),
            "validate" => Ok(Self::Validate),
            "priors-plot" => Ok(Self::PriorsPlot),
            other => Err(Error::Config(format!("unknown mode `{other}`"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Run => "run",
            Self::Replicate => "replicate",
            Self::Validate => "validate",
            Self::PriorsPlot => "priors-plot",
        })
    }
}

/// Fully resolved configuration of one CLI invocation.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub signal: Option<PathBuf>,
    pub output: PathBuf,
    pub n_iter: usize,
    pub burn_in: usize,
    pub seed: u64,
    pub sampler: SamplerConfig,
    /// When off, sampled hyperparameters are held at their initial values.
    pub sample_hyperparameters: bool,
    pub experiment: ExperimentSpec,
    pub suite: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Run,
            signal: None,
            output: PathBuf::from("out"),
            n_iter: 100_000,
            burn_in: 20_000,
            seed: 0,
            sampler: SamplerConfig::default(),
            sample_hyperparameters: true,
            experiment: ExperimentSpec::default(),
            suite: None,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| Error::Config(format!("bad value `{value}` for `{key}`: {e}")))
}

fn parse_list(key: &str, value: &str) -> Result<Vec<f64>> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|v| parse_value(key, v.trim()))
        .collect()
}

fn join(v: &[f64]) -> String {
    v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

/// Which of the two mutually exclusive forms of a hyperparameter was given.
#[derive(Default)]
struct HyperKeys {
    fixed: Option<f64>,
    prior: [Option<f64>; 2],
    init: Option<f64>,
}

impl HyperKeys {
    fn resolve<P>(
        self,
        name: &str,
        default: HyperSetting<P>,
        make: impl Fn(f64, f64) -> P,
        unpack: impl Fn(&P) -> (f64, f64),
    ) -> Result<HyperSetting<P>> {
        let prior_given = self.prior.iter().any(Option::is_some) || self.init.is_some();
        match (self.fixed, prior_given) {
            (Some(_), true) => Err(Error::Config(format!(
                "both a fixed `model.{name}` and a `model.{name}_prior` were given"
            ))),
            (Some(v), false) => Ok(HyperSetting::Fixed(v)),
            (None, _) => {
                let (d_prior, d_init) = match default {
                    HyperSetting::Sampled { prior, init } => (unpack(&prior), init),
                    HyperSetting::Fixed(v) => ((f64::NAN, f64::NAN), v),
                };
                let a = self.prior[0].unwrap_or(d_prior.0);
                let b = self.prior[1].unwrap_or(d_prior.1);
                Ok(HyperSetting::Sampled {
                    prior: make(a, b),
                    init: self.init.unwrap_or(d_init),
                })
            }
        }
    }
}

impl RunConfig {
    /// Parses `text`; parse errors are reported against `path`.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        Self::parse_inner(text, path, None)
    }

    /// Parses `text` for a caller that fixes the mode; a `mode` key, if
    /// present, must agree with it.
    pub fn parse_as(text: &str, path: &Path, mode: Mode) -> Result<Self> {
        Self::parse_inner(text, path, Some(mode))
    }

    fn parse_inner(text: &str, path: &Path, forced: Option<Mode>) -> Result<Self> {
        let mut cfg = Self {
            mode: forced.unwrap_or(Mode::Run),
            ..Self::default()
        };
        let mut lambda = HyperKeys::default();
        let mut delta2 = HyperKeys::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            cfg.set(key, value, &mut lambda, &mut delta2)
                .map_err(|e| match e {
                    Error::Config(msg) => parse_err(msg),
                    other => other,
                })?;
        }
        let defaults = SamplerConfig::default();
        cfg.sampler.lambda = lambda.resolve(
            "lambda",
            defaults.lambda,
            |shape, rate| GammaPrior { shape, rate },
            |p| (p.shape, p.rate),
        )?;
        cfg.sampler.delta2 = delta2.resolve(
            "delta2",
            defaults.delta2,
            |shape, scale| InverseGammaPrior { shape, scale },
            |p| (p.shape, p.scale),
        )?;
        if let Some(mode) = forced.filter(|&m| m != cfg.mode) {
            return Err(Error::Config(format!(
                "config mode `{}` does not match `{mode}`",
                cfg.mode
            )));
        }
        cfg.check()?;
        Ok(cfg)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    fn set(
        &mut self,
        key: &str,
        value: &str,
        lambda: &mut HyperKeys,
        delta2: &mut HyperKeys,
    ) -> Result<()> {
        let s = &mut self.sampler;
        let e = &mut self.experiment;
        match key {
            "mode" => self.mode = parse_value(key, value)?,
            "paths.signal" => self.signal = Some(PathBuf::from(value)),
            "paths.output" => self.output = PathBuf::from(value),
            "sampler.n_iter" => self.n_iter = parse_value(key, value)?,
            "sampler.burn_in" => self.burn_in = parse_value(key, value)?,
            "sampler.seed" => self.seed = parse_value(key, value)?,
            "sampler.ratio_mode" => s.ratio_mode = parse_value(key, value)?,
            "sampler.representation" => s.representation = parse_value(key, value)?,
            "sampler.k_max" => s.k_max = parse_value(key, value)?,
            "sampler.c" => s.c = parse_value(key, value)?,
            "sampler.extra_updates" => s.extra_updates = parse_value(key, value)?,
            "sampler.walk_prob" => s.walk_prob = parse_value(key, value)?,
            "sampler.walk_std" => {
                s.walk_std = if value == "auto" {
                    None
                } else {
                    Some(parse_value(key, value)?)
                }
            }
            "model.lambda" => lambda.fixed = Some(parse_value(key, value)?),
            "model.lambda_prior.shape" => lambda.prior[0] = Some(parse_value(key, value)?),
            "model.lambda_prior.rate" => lambda.prior[1] = Some(parse_value(key, value)?),
            "model.lambda_init" => lambda.init = Some(parse_value(key, value)?),
            "model.delta2" => delta2.fixed = Some(parse_value(key, value)?),
            "model.delta2_prior.shape" => delta2.prior[0] = Some(parse_value(key, value)?),
            "model.delta2_prior.scale" => delta2.prior[1] = Some(parse_value(key, value)?),
            "model.delta2_init" => delta2.init = Some(parse_value(key, value)?),
            "model.sample_hyperparameters" => {
                self.sample_hyperparameters = parse_value(key, value)?
            }
            "model.flat_likelihood" => s.flat_likelihood = parse_value(key, value)?,
            "experiment.omega" => e.true_omega = parse_list(key, value)?,
            "experiment.amp2" => e.true_amp2 = parse_list(key, value)?,
            "experiment.snr_db" => e.snr_db = parse_value(key, value)?,
            "experiment.n" => e.n = parse_value(key, value)?,
            "experiment.replications" => e.replications = parse_value(key, value)?,
            "experiment.base_seed" => e.base_seed = parse_value(key, value)?,
            "validate.suite" => self.suite = Some(value.to_string()),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Cross-field checks applied after every key is read.
    pub fn check(&self) -> Result<()> {
        self.chain_settings().validate()?;
        let s = &self.sampler;
        if !(s.c > 0.0 && s.c <= 0.5) {
            return Err(Error::Config(format!(
                "sampler.c = {} must lie in (0, 0.5]",
                s.c
            )));
        }
        if !(0.0..=1.0).contains(&s.walk_prob) {
            return Err(Error::Config(format!(
                "sampler.walk_prob = {} outside [0, 1]",
                s.walk_prob
            )));
        }
        if let Some(std) = s.walk_std {
            if !(std > 0.0) {
                return Err(Error::Config(format!(
                    "sampler.walk_std = {std} must be positive"
                )));
            }
        }
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "{name} = {v} must be positive and finite"
                )))
            }
        };
        match s.lambda {
            HyperSetting::Fixed(v) => positive("model.lambda", v)?,
            HyperSetting::Sampled { prior, init } => {
                positive("model.lambda_prior.shape", prior.shape)?;
                positive("model.lambda_prior.rate", prior.rate)?;
                positive("model.lambda_init", init)?;
            }
        }
        match s.delta2 {
            HyperSetting::Fixed(v) => positive("model.delta2", v)?,
            HyperSetting::Sampled { prior, init } => {
                positive("model.delta2_prior.shape", prior.shape)?;
                positive("model.delta2_prior.scale", prior.scale)?;
                positive("model.delta2_init", init)?;
            }
        }
        match self.mode {
            Mode::Run if self.signal.is_none() => Err(Error::Config(
                "missing required key `paths.signal` for mode `run`".into(),
            )),
            Mode::Replicate => {
                self.experiment.validate()?;
                if self.experiment.replications == 0 {
                    return Err(Error::Config(
                        "experiment.replications must be at least 1".into(),
                    ));
                }
                Ok(())
            }
            Mode::Validate if self.suite.is_none() => Err(Error::Config(
                "missing required key `validate.suite` for mode `validate`".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Replaces the seeds with the value of [`SEED_ENV`] if `lookup` has one.
    pub fn apply_seed_override(&mut self, lookup: impl Fn(&str) -> Option<String>) -> Result<()> {
        if let Some(v) = lookup(SEED_ENV) {
            let seed: u64 = parse_value(SEED_ENV, v.trim())?;
            self.seed = seed;
            self.experiment.base_seed = seed;
        }
        Ok(())
    }

    pub fn chain_settings(&self) -> ChainSettings {
        ChainSettings::new(self.n_iter, self.burn_in, self.seed)
    }

    /// Sampler settings with hyperparameter sampling switched off if requested.
    pub fn resolved_sampler(&self) -> SamplerConfig {
        let mut s = self.sampler.clone();
        if !self.sample_hyperparameters {
            s.lambda = HyperSetting::Fixed(s.lambda.initial());
            s.delta2 = HyperSetting::Fixed(s.delta2.initial());
        }
        s
    }

    /// Canonical text form; `parse(to_text())` reproduces `self`.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut kv = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(out, "{k} = {v}");
        };
        let s = &self.sampler;
        let e = &self.experiment;
        kv("mode", &self.mode);
        if let Some(p) = &self.signal {
            kv("paths.signal", &p.display());
        }
        kv("paths.output", &self.output.display());
        kv("sampler.n_iter", &self.n_iter);
        kv("sampler.burn_in", &self.burn_in);
        kv("sampler.seed", &self.seed);
        kv("sampler.ratio_mode", &s.ratio_mode);
        kv("sampler.representation", &s.representation);
        kv("sampler.k_max", &s.k_max);
        kv("sampler.c", &s.c);
        kv("sampler.extra_updates", &s.extra_updates);
        kv("sampler.walk_prob", &s.walk_prob);
        match s.walk_std {
            Some(v) => kv("sampler.walk_std", &v),
            None => kv("sampler.walk_std", &"auto"),
        }
        match s.lambda {
            HyperSetting::Fixed(v) => kv("model.lambda", &v),
            HyperSetting::Sampled { prior, init } => {
                kv("model.lambda_prior.shape", &prior.shape);
                kv("model.lambda_prior.rate", &prior.rate);
                kv("model.lambda_init", &init);
            }
        }
        match s.delta2 {
            HyperSetting::Fixed(v) => kv("model.delta2", &v),
            HyperSetting::Sampled { prior, init } => {
                kv("model.delta2_prior.shape", &prior.shape);
                kv("model.delta2_prior.scale", &prior.scale);
                kv("model.delta2_init", &init);
            }
        }
        kv("model.sample_hyperparameters", &self.sample_hyperparameters);
        kv("model.flat_likelihood", &s.flat_likelihood);
        kv("experiment.omega", &join(&e.true_omega));
        kv("experiment.amp2", &join(&e.true_amp2));
        kv("experiment.snr_db", &e.snr_db);
        kv("experiment.n", &e.n);
        kv("experiment.replications", &e.replications);
        kv("experiment.base_seed", &e.base_seed);
        if let Some(suite) = &self.suite {
            kv("validate.suite", suite);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig> {
        RunConfig::parse(text, Path::new("test.cfg"))
    }

    #[test]
    fn empty_run_config_names_the_missing_signal() {
        let err = parse("").unwrap_err().to_string();
        assert!(err.contains("paths.signal"), "{err}");
    }

    #[test]
    fn defaults_match_the_reference_experiment() {
        let cfg = parse("paths.signal = y.txt\n").unwrap();
        assert_eq!((cfg.n_iter, cfg.burn_in), (100_000, 20_000));
        assert_eq!(cfg.sampler.k_max, 32);
        assert_eq!(cfg.sampler.c, 0.25);
        assert!(matches!(
            cfg.sampler.lambda,
            HyperSetting::Sampled {
                prior: GammaPrior {
                    shape: 1.0,
                    rate: 0.001
                },
                ..
            }
        ));
        assert!(matches!(
            cfg.sampler.delta2,
            HyperSetting::Sampled {
                prior: InverseGammaPrior {
                    shape: 2.0,
                    scale: 100.0
                },
                ..
            }
        ));
    }

    #[test]
    fn round_trip_is_identity() {
        let text = "mode = replicate\npaths.output = /tmp/x\nsampler.n_iter = 500\nsampler.burn_in = 50\n\
                    sampler.ratio_mode = legacy\nsampler.representation = sorted\nsampler.walk_std = 0.01\n\
                    model.lambda = 2.5\nmodel.delta2_prior.scale = 50\nexperiment.omega = 0.1,0.2\n\
                    experiment.amp2 = 1,2.5\nexperiment.snr_db = inf\n";
        let cfg = parse(text).unwrap();
        assert_eq!(parse(&cfg.to_text()).unwrap(), cfg);
        let default_cfg = parse("paths.signal = a b.txt").unwrap();
        assert_eq!(parse(&default_cfg.to_text()).unwrap(), default_cfg);
    }

    #[test]
    fn rejects_unknown_and_contradictory_keys() {
        let err = parse("paths.signal = y\nsampler.nitr = 5\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err =
            parse("paths.signal = y\nmodel.lambda = 3\nmodel.lambda_prior.rate = 1\n").unwrap_err();
        assert!(err.to_string().contains("both"), "{err}");
        assert!(parse("paths.signal = y\nsampler.burn_in = 100000\n").is_err());
        assert!(parse("paths.signal = y\nsampler.c = 0.6\n").is_err());
        assert!(parse("paths.signal = y\nnot a pair\n").is_err());
    }

    #[test]
    fn comments_and_whitespace() {
        let cfg =
            parse("# header\n  paths.signal =  y.txt   # trailing\n\nsampler.seed=9\n").unwrap();
        assert_eq!(cfg.signal.as_deref(), Some(Path::new("y.txt")));
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn forced_mode() {
        let cfg = RunConfig::parse_as("", Path::new("t"), Mode::Replicate).unwrap();
        assert_eq!(cfg.mode, Mode::Replicate);
        assert!(RunConfig::parse_as(
            "mode = run\npaths.signal = y\n",
            Path::new("t"),
            Mode::Replicate
        )
        .is_err());
        let err =
            RunConfig::parse_as("\nbogus = 1\n", Path::new("t"), Mode::Replicate).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn seed_override() {
        let mut cfg = parse("paths.signal = y\nsampler.seed = 3\n").unwrap();
        cfg.apply_seed_override(|_| None).unwrap();
        assert_eq!(cfg.seed, 3);
        cfg.apply_seed_override(|k| (k == SEED_ENV).then(|| "77".to_string()))
            .unwrap();
        assert_eq!((cfg.seed, cfg.experiment.base_seed), (77, 77));
        assert!(cfg.apply_seed_override(|_| Some("x".into())).is_err());
    }

    #[test]
    fn hyperparameter_switch_freezes_initial_values() {
        let cfg = parse(
            "paths.signal = y\nmodel.sample_hyperparameters = false\nmodel.lambda_init = 4\n",
        )
        .unwrap();
        let s = cfg.resolved_sampler();
        assert_eq!(s.lambda, HyperSetting::Fixed(4.0));
        assert_eq!(s.delta2, HyperSetting::Fixed(100.0));
    }
}
