//! Single runs, replication sweeps and prior plots, written as CSV and SVG.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::birth_death::RatioMode;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::mcmc::{ChainOutput, ChainSettings};
use crate::rng::{self, CHAIN_STREAM, SIGNAL_STREAM};
use crate::sinusoid::{
    accelerated_poisson_pmf, run_sampler, synth_signal, truncated_poisson_pmf, Signal,
    SinusoidState,
};
use crate::state::VarDimState;

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// `iter,k,logtarget,move,accepted,lambda,delta2`, one row per iteration.
pub fn trace_csv(out: &ChainOutput<SinusoidState>) -> String {
    let mut s = String::from("iter,k,logtarget,move,accepted,lambda,delta2\n");
    for r in &out.records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.iteration,
            r.state.freqs.order(),
            r.log_target,
            r.label,
            u8::from(r.accepted),
            r.state.lambda,
            r.state.delta2
        );
    }
    s
}

/// Wide component table: `iter,omega_1..omega_{k_max}`, empty cells past `k`.
pub fn components_csv(out: &ChainOutput<SinusoidState>, k_max: usize) -> String {
    let mut s = String::from("iter");
    for j in 1..=k_max {
        let _ = write!(s, ",omega_{j}");
    }
    s.push('\n');
    for r in &out.records {
        let _ = write!(s, "{}", r.iteration);
        let comps = r.state.freqs.components();
        for j in 0..k_max {
            s.push(',');
            if let Some(w) = comps.get(j) {
                let _ = write!(s, "{w}");
            }
        }
        s.push('\n');
    }
    s
}

/// `k,count,frequency` over post-burn-in records.
pub fn summary_csv(counts: &[u64]) -> String {
    let total: u64 = counts.iter().sum();
    let mut s = String::from("k,count,frequency\n");
    for (k, &c) in counts.iter().enumerate() {
        let f = if total == 0 {
            0.0
        } else {
            c as f64 / total as f64
        };
        let _ = writeln!(s, "{k},{c},{f}");
    }
    s
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub output: ChainOutput<SinusoidState>,
    pub counts: Vec<u64>,
    pub files: Vec<PathBuf>,
}

/// One chain on the configured signal file; writes `trace.csv`,
/// `components.csv`, `summary.csv` and `config.txt` to the output directory.
pub fn run_experiment(cfg: &RunConfig) -> Result<RunReport> {
    let path = cfg
        .signal
        .as_deref()
        .ok_or_else(|| Error::Config("missing required key `paths.signal`".into()))?;
    let signal = Signal::read(path)?;
    let sampler = cfg.resolved_sampler();
    let output = run_sampler(
        &signal,
        &sampler,
        VarDimState::empty(),
        cfg.chain_settings(),
    )?;
    let counts = output.order_counts(sampler.k_max);

    create_dir(&cfg.output)?;
    let files = vec![
        (cfg.output.join("trace.csv"), trace_csv(&output)),
        (
            cfg.output.join("components.csv"),
            components_csv(&output, sampler.k_max),
        ),
        (cfg.output.join("summary.csv"), summary_csv(&counts)),
        (cfg.output.join("config.txt"), cfg.to_text()),
    ];
    for (p, text) in &files {
        write_file(p, text)?;
    }
    Ok(RunReport {
        output,
        counts,
        files: files.into_iter().map(|(p, _)| p).collect(),
    })
}

/// Per-replication result of a corrected/legacy pair on one signal.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationOutcome {
    pub index: usize,
    pub seed: u64,
    pub freq_corrected: Vec<f64>,
    pub freq_legacy: Vec<f64>,
    pub mean_corrected: f64,
    pub mean_legacy: f64,
}

impl ReplicationOutcome {
    pub fn mode_corrected(&self) -> usize {
        argmax(&self.freq_corrected)
    }

    pub fn mode_legacy(&self) -> usize {
        argmax(&self.freq_legacy)
    }
}

/// First index of the largest entry.
pub fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &x)| {
            if x > best.1 {
                (i, x)
            } else {
                best
            }
        })
        .0
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateReport {
    pub replications: Vec<ReplicationOutcome>,
    /// Mean over replications of the per-run frequencies, rows `0..=k_max`.
    pub aggregate_corrected: Vec<f64>,
    pub aggregate_legacy: Vec<f64>,
}

struct Replication {
    outcome: ReplicationOutcome,
    signal: Signal,
    counts_corrected: Vec<u64>,
    counts_legacy: Vec<u64>,
}

/// Replication `r` uses seed `base_seed + r` for both the signal and the
/// chains, so corrected and legacy runs share the signal and random numbers.
fn run_replications(cfg: &RunConfig) -> Result<Vec<Replication>> {
    let spec = &cfg.experiment;
    spec.validate()?;
    if spec.replications == 0 {
        return Err(Error::Config(
            "experiment.replications must be at least 1".into(),
        ));
    }
    let sampler = cfg.resolved_sampler();
    let k_max = sampler.k_max;
    (0..spec.replications)
        .into_par_iter()
        .map(|r| {
            let seed = spec.base_seed.wrapping_add(r as u64);
            let synth = synth_signal(spec, &mut rng::stream(seed, SIGNAL_STREAM))?;
            let signal = Signal::new(synth.y)?;
            let settings = ChainSettings {
                n_iter: cfg.n_iter,
                burn_in: cfg.burn_in,
                seed,
                stream: CHAIN_STREAM,
            };
            let run = |mode| {
                let mut s = sampler.clone();
                s.ratio_mode = mode;
                run_sampler(&signal, &s, VarDimState::empty(), settings)
            };
            let corrected = run(RatioMode::Corrected)?;
            let legacy = run(RatioMode::Legacy)?;
            Ok(Replication {
                outcome: ReplicationOutcome {
                    index: r,
                    seed,
                    freq_corrected: corrected.order_frequencies(k_max),
                    freq_legacy: legacy.order_frequencies(k_max),
                    mean_corrected: corrected.mean_order(),
                    mean_legacy: legacy.mean_order(),
                },
                counts_corrected: corrected.order_counts(k_max),
                counts_legacy: legacy.order_counts(k_max),
                signal,
            })
        })
        .collect()
}

fn aggregate(replications: Vec<ReplicationOutcome>, k_max: usize) -> ReplicateReport {
    let n = replications.len() as f64;
    let mut corrected = vec![0.0; k_max + 1];
    let mut legacy = vec![0.0; k_max + 1];
    for r in &replications {
        for k in 0..=k_max {
            corrected[k] += r.freq_corrected[k] / n;
            legacy[k] += r.freq_legacy[k] / n;
        }
    }
    ReplicateReport {
        replications,
        aggregate_corrected: corrected,
        aggregate_legacy: legacy,
    }
}

/// Corrected and legacy runs on one synthetic signal per replication,
/// without writing any files.
pub fn replicate_in_memory(cfg: &RunConfig) -> Result<ReplicateReport> {
    let reps = run_replications(cfg)?;
    Ok(aggregate(
        reps.into_iter().map(|r| r.outcome).collect(),
        cfg.sampler.k_max,
    ))
}

/// [`replicate_in_memory`] plus output files: `rep_NNN/{signal.txt,
/// summary_corrected.csv, summary_legacy.csv}`, `aggregate.csv`,
/// `replications.csv`, `aggregate.svg` and `config.txt`.
pub fn replicate(cfg: &RunConfig) -> Result<ReplicateReport> {
    let reps = run_replications(cfg)?;
    let k_max = cfg.sampler.k_max;
    create_dir(&cfg.output)?;
    for r in &reps {
        let dir = cfg.output.join(format!("rep_{:03}", r.outcome.index));
        create_dir(&dir)?;
        write_file(&dir.join("signal.txt"), &r.signal.to_text())?;
        write_file(
            &dir.join("summary_corrected.csv"),
            &summary_csv(&r.counts_corrected),
        )?;
        write_file(
            &dir.join("summary_legacy.csv"),
            &summary_csv(&r.counts_legacy),
        )?;
    }
    let report = aggregate(reps.into_iter().map(|r| r.outcome).collect(), k_max);

    let mut agg = String::from("k,freq_corrected,freq_legacy\n");
    for k in 0..=k_max {
        let _ = writeln!(
            agg,
            "{k},{},{}",
            report.aggregate_corrected[k], report.aggregate_legacy[k]
        );
    }
    write_file(&cfg.output.join("aggregate.csv"), &agg)?;

    let mut reps = String::from(
        "replication,seed,mean_k_corrected,mean_k_legacy,mode_corrected,mode_legacy\n",
    );
    for r in &report.replications {
        let _ = writeln!(
            reps,
            "{},{},{},{},{},{}",
            r.index,
            r.seed,
            r.mean_corrected,
            r.mean_legacy,
            r.mode_corrected(),
            r.mode_legacy()
        );
    }
    write_file(&cfg.output.join("replications.csv"), &reps)?;
    write_file(&cfg.output.join("config.txt"), &cfg.to_text())?;
    write_file(
        &cfg.output.join("aggregate.svg"),
        &bar_chart_svg(
            "Frequency of selection of each model order",
            "k",
            &[
                Series {
                    name: "corrected",
                    color: "#999999",
                    values: &report.aggregate_corrected,
                },
                Series {
                    name: "legacy",
                    color: "#000000",
                    values: &report.aggregate_legacy,
                },
            ],
        ),
    )?;
    Ok(report)
}

/// Writes `priors.csv` (`k,poisson,accelerated`) and `priors.svg`.
pub fn priors_plot(lambda: f64, k_max: usize, out_dir: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::Config(format!("lambda = {lambda} must be positive")));
    }
    let poisson = truncated_poisson_pmf(lambda, k_max);
    let accelerated = accelerated_poisson_pmf(lambda, k_max);
    create_dir(out_dir)?;
    let mut csv = String::from("k,poisson,accelerated\n");
    for k in 0..=k_max {
        let _ = writeln!(csv, "{k},{},{}", poisson[k], accelerated[k]);
    }
    write_file(&out_dir.join("priors.csv"), &csv)?;
    write_file(
        &out_dir.join("priors.svg"),
        &bar_chart_svg(
            &format!("Poisson and accelerated Poisson, mean parameter {lambda}"),
            "k",
            &[
                Series {
                    name: "poisson",
                    color: "#999999",
                    values: &poisson,
                },
                Series {
                    name: "accelerated",
                    color: "#000000",
                    values: &accelerated,
                },
            ],
        ),
    )?;
    Ok((poisson, accelerated))
}

pub struct Series<'a> {
    pub name: &'a str,
    pub color: &'a str,
    pub values: &'a [f64],
}

/// Grouped bar chart over categories `0..len` as a standalone SVG 1.1 document.
pub fn bar_chart_svg(title: &str, x_label: &str, series: &[Series<'_>]) -> String {
    const W: f64 = 720.0;
    const H: f64 = 400.0;
    const LEFT: f64 = 60.0;
    const RIGHT: f64 = 20.0;
    const TOP: f64 = 40.0;
    const BOTTOM: f64 = 50.0;
    let n = series
        .iter()
        .map(|s| s.values.len())
        .max()
        .unwrap_or(0)
        .max(1);
    let y_max = series
        .iter()
        .flat_map(|s| s.values.iter().copied())
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let plot_w = W - LEFT - RIGHT;
    let plot_h = H - TOP - BOTTOM;
    let slot = plot_w / n as f64;
    let bar = slot * 0.8 / series.len().max(1) as f64;
    let y_of = |v: f64| TOP + plot_h * (1.0 - v / y_max);

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    for (i, ser) in series.iter().enumerate() {
        for (k, &v) in ser.values.iter().enumerate() {
            let x = LEFT + k as f64 * slot + slot * 0.1 + i as f64 * bar;
            let y = y_of(v);
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{y:.2}" width="{bar:.2}" height="{:.2}" fill="{}"/>"#,
                TOP + plot_h - y,
                ser.color
            );
        }
    }
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{0}" x2="{1}" y2="{0}" stroke="black"/>"#,
        TOP + plot_h,
        W - RIGHT
    );
    let _ = writeln!(
        s,
        r#"<line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{}" stroke="black"/>"#,
        TOP + plot_h
    );
    let step = n.div_ceil(16).max(1);
    for k in (0..n).step_by(step) {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="middle">{k}</text>"#,
            LEFT + (k as f64 + 0.5) * slot,
            TOP + plot_h + 14.0
        );
    }
    for t in 0..=4 {
        let v = y_max * t as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="10" text-anchor="end">{v:.3}</text>"#,
            LEFT - 6.0,
            y_of(v) + 3.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
        LEFT + plot_w / 2.0,
        H - 12.0,
        escape(x_label)
    );
    for (i, ser) in series.iter().enumerate() {
        let y = TOP + 6.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<rect x="{:.2}" y="{y:.2}" width="10" height="10" fill="{}"/>"#,
            W - RIGHT - 110.0,
            ser.color
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{}</text>"#,
            W - RIGHT - 95.0,
            y + 9.0,
            escape(ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mcmc::ChainSettings;
    use crate::sinusoid::{HyperSetting, SamplerConfig};

    fn tiny_output() -> ChainOutput<SinusoidState> {
        let signal = Signal::new((0..16).map(|t| (0.9 * t as f64).cos()).collect()).unwrap();
        run_sampler(
            &signal,
            &SamplerConfig::default(),
            VarDimState::empty(),
            ChainSettings::new(20, 5, 1),
        )
        .unwrap()
    }

    #[test]
    fn trace_has_one_row_per_iteration() {
        let out = tiny_output();
        let trace = trace_csv(&out);
        assert_eq!(trace.lines().count(), 21);
        assert_eq!(
            trace.lines().next(),
            Some("iter,k,logtarget,move,accepted,lambda,delta2")
        );
        let comps = components_csv(&out, 32);
        assert_eq!(comps.lines().count(), 21);
        assert!(comps.lines().all(|l| l.split(',').count() == 33));
    }

    #[test]
    fn summary_frequencies_sum_to_one() {
        let s = summary_csv(&[3, 0, 5, 2]);
        let total: f64 = s
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(s.lines().nth(3), Some("2,5,0.5"));
    }

    #[test]
    fn argmax_takes_the_first_maximum() {
        assert_eq!(argmax(&[0.1, 0.4, 0.4, 0.1]), 1);
        assert_eq!(argmax(&[]), 0);
    }

    #[test]
    fn svg_is_well_formed_enough() {
        let svg = bar_chart_svg(
            "a < b",
            "k",
            &[Series {
                name: "x",
                color: "#000",
                values: &[0.2, 0.8],
            }],
        );
        assert!(svg.starts_with("<?xml"));
        assert!(svg.contains(r#"version="1.1""#));
        assert!(svg.contains("a &lt; b"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<rect").count(), 1 + 2 + 1);
    }

    #[test]
    fn in_memory_matches_written_replication() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = RunConfig {
            n_iter: 200,
            burn_in: 20,
            output: dir.path().to_path_buf(),
            ..RunConfig::default()
        };
        cfg.experiment.replications = 2;
        cfg.sampler.k_max = 8;
        cfg.sampler.lambda = HyperSetting::Fixed(2.0);
        assert_eq!(replicate(&cfg).unwrap(), replicate_in_memory(&cfg).unwrap());
    }
}
