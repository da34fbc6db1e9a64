//! Command-line front end: loads a [`RunConfig`], runs the selected command
//! inside a fixed-size worker pool, and writes CSV, JSON and SVG artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Parser;
use serde::Serialize;
use serde_json::json;

use crate::config::{streams, Command, RegularityMode, RunConfig, ScalingAxisKind, DEFAULT_PROBES};
use crate::ensembles::{partial_circulant, sample_sign_vector, CirculantSpec, EmbeddingOperator};
use crate::error::{usage, Error, Result};
use crate::experiments::{
    baseline_compare, distortion_trials, evaluate_bound, quantile, samples_to_csv, scaling_study,
    tail_report, BaselineTable, BoundParameters, DistortionSample, ScalingAxis, ScalingGrid,
    TailReport, MIN_TAIL_SAMPLES,
};
use crate::geometry::{mean_width, Exactness, TestSet, WidthEstimate};
use crate::regularity::{
    check_low_to_high_profile, exact_profile, gaussian_regularity_expectation, k_star,
    sampled_profile, select_delta, RegularityProfile,
};
use crate::svg::{Plot, Series};

#[derive(Debug, Parser)]
#[command(
    name = "signembed",
    version,
    about = "Sign-randomized embedding experiments"
)]
pub struct Cli {
    /// Run configuration (TOML).
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Worker threads; results do not depend on this.
    #[arg(long, value_name = "INT")]
    pub workers: Option<usize>,
    /// Output directory, overriding `output_dir` in the config.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub verbose: bool,
}

/// Process exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) | Error::Parse(_) => 2,
        Error::Resource(_) => 3,
        Error::Numerical(_) | Error::Io(_) => 1,
    }
}

#[derive(Debug, Default)]
pub struct Outcome {
    /// One-screen summary.
    pub summary: Vec<String>,
    /// Artifact names relative to the output directory, in write order.
    pub files: Vec<String>,
}

struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<()> {
        std::fs::write(self.dir.join(name), contents)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Parse(format!("{name}: {e}")))?;
        text.push('\n');
        self.write(name, text)
    }
}

/// Runs a parsed command line end to end.
pub fn execute(cli: &Cli) -> Result<Outcome> {
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return usage("--workers must be ≥ 1");
    }
    let cfg = RunConfig::load(&cli.config)?;
    let out = match (&cli.out, &cfg.output_dir) {
        (Some(dir), _) | (None, Some(dir)) => dir.clone(),
        (None, None) => return usage("output_dir: not set in the config and no --out given"),
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Resource(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| run(&cfg, &out, cli.verbose))
}

/// Runs one configured command, writing artifacts into `out`.
pub fn run(cfg: &RunConfig, out: &Path, verbose: bool) -> Result<Outcome> {
    cfg.validate()?;
    std::fs::create_dir_all(out)?;
    let out = std::path::absolute(out)?;
    let mut art = Artifacts {
        dir: out.clone(),
        files: Vec::new(),
    };
    let started = Instant::now();
    let mut summary = vec![format!(
        "command: {}  seed: {}",
        cfg.command.as_str(),
        cfg.seed
    )];
    match cfg.command {
        Command::Regularity => regularity(cfg, &mut art, &mut summary)?,
        Command::Width => width(cfg, &mut art, &mut summary)?,
        Command::Distort => distort(cfg, &mut art, &mut summary, false)?,
        Command::Tails => distort(cfg, &mut art, &mut summary, true)?,
        Command::Scaling => scaling(cfg, &mut art, &mut summary)?,
        Command::Baseline => baseline(cfg, &mut art, &mut summary)?,
        Command::CirculantDemo => circulant_demo(cfg, &mut art, &mut summary)?,
    }
    art.write("effective_config.toml", cfg.effective(&out)?.to_toml()?)?;
    summary.push(format!(
        "artifacts: {} in {}",
        art.files.join(", "),
        out.display()
    ));
    if verbose {
        summary.push(format!("elapsed: {:.2?}", started.elapsed()));
    }
    Ok(Outcome {
        summary,
        files: art.files,
    })
}

fn describe_operator(op: &EmbeddingOperator) -> serde_json::Value {
    let (m, n) = op.dims();
    json!({ "kind": op.kind_name(), "m": m, "n": n })
}

fn describe_set(t: &TestSet) -> serde_json::Value {
    json!({
        "variant": t.variant_name(),
        "n": t.ambient_dim(),
        "radius": crate::geometry::radius(t),
    })
}

fn sorted_values(samples: &[DistortionSample]) -> Vec<f64> {
    let mut v: Vec<f64> = samples.iter().map(|s| s.sup_distortion).collect();
    v.sort_by(f64::total_cmp);
    v
}

fn overall_exactness(samples: &[DistortionSample]) -> Exactness {
    if samples.iter().all(|s| s.exactness == Exactness::Exact) {
        Exactness::Exact
    } else {
        Exactness::LowerBound
    }
}

fn profile_plot(profile: &RegularityProfile) -> String {
    let raw = profile
        .entries
        .iter()
        .map(|e| (e.k as f64, e.raw))
        .collect();
    let env = profile
        .entries
        .iter()
        .map(|e| {
            (
                e.k as f64,
                gaussian_regularity_expectation(profile.m, profile.n, e.k),
            )
        })
        .collect();
    Plot::new(
        "Regularity profile",
        "k",
        "sup over k-sparse unit x of |‖Ax‖² − 1|",
    )
    .with(Series::line(profile.mode.as_str(), raw))
    .with(Series::line("√(k ln(en/k)/m)", env))
    .render()
}

fn survival_plot(report: &TailReport) -> String {
    let pts = report
        .survival
        .iter()
        .filter(|s| s.log_survival.is_finite())
        .map(|s| (s.threshold, s.log_survival))
        .collect();
    Plot::new("Empirical log-survival", "threshold", "ln P(X ≥ threshold)")
        .with(Series::line("ln survival", pts))
        .render()
}

fn regularity(cfg: &RunConfig, art: &mut Artifacts, summary: &mut Vec<String>) -> Result<()> {
    let a = cfg.operator()?.materialize()?;
    let n = a.cols();
    let max_k = cfg.regularity.max_k.unwrap_or(n).min(n);
    let profile = match cfg.regularity.mode {
        RegularityMode::Exact => exact_profile(&a, max_k)?,
        RegularityMode::Sampled => {
            let ks: Vec<usize> = (1..=max_k).collect();
            sampled_profile(
                &a,
                &ks,
                cfg.regularity.probes.unwrap_or(DEFAULT_PROBES),
                cfg.stream(streams::REGULARITY),
            )?
        }
    };
    let (delta, source) = match cfg.regularity.delta {
        Some(d) => (Some(d), "configured"),
        None => (select_delta(&profile)?, "grid"),
    };
    let k_star = delta.map(|d| k_star(&profile, d)).transpose()?;
    let low_to_high = match delta {
        Some(d)
            if profile.mode == crate::regularity::ProfileMode::Exact && profile.max_k() == n =>
        {
            Some(check_low_to_high_profile(&profile, d)?)
        }
        _ => None,
    };
    art.write("profile.csv", profile.to_csv())?;
    art.json(
        "regularity.json",
        &json!({
            "command": "regularity",
            "m": profile.m,
            "n": profile.n,
            "mode": profile.mode.as_str(),
            "trials": profile.trials,
            "entries": profile.entries,
            "delta": delta,
            "delta_source": delta.map(|_| source),
            "k_star": k_star,
            "low_to_high": low_to_high,
        }),
    )?;
    art.write("profile.svg", profile_plot(&profile))?;
    summary.push(format!(
        "operator {}x{}  mode {}  K = {}",
        profile.m,
        profile.n,
        profile.mode.as_str(),
        profile.max_k()
    ));
    for e in profile.entries.iter().take(8) {
        summary.push(format!("  raw[{}] = {:.6}", e.k, e.raw));
    }
    match (delta, k_star) {
        (Some(d), Some(k)) => summary.push(format!("delta = {d:.6} ({source})  k* = {k}")),
        _ => summary.push("no grid delta satisfies k*(delta) ≥ 1/delta²".into()),
    }
    if let Some(r) = &low_to_high {
        summary.push(format!(
            "low-to-high check: {:?}  violations {}  max ratio {:.4}",
            r.status, r.violations, r.max_ratio
        ));
    }
    Ok(())
}

fn width(cfg: &RunConfig, art: &mut Artifacts, summary: &mut Vec<String>) -> Result<()> {
    let t = cfg.test_set()?;
    let w = mean_width(&t, cfg.width.samples(), cfg.stream(streams::WIDTH))?;
    art.json(
        "width.json",
        &json!({ "command": "width", "test_set": describe_set(&t), "width": w }),
    )?;
    summary.push(format!(
        "test set {} in R^{}",
        t.variant_name(),
        t.ambient_dim()
    ));
    summary.push(format!(
        "mean width {:.6} ± {:.6}  radius {:.6}  critical dimension {:.4}",
        w.mean, w.std_error, w.radius, w.critical_dimension
    ));
    Ok(())
}

fn bound_for(cfg: &RunConfig, delta: f64, n: usize, w: &WidthEstimate) -> Result<BoundParameters> {
    BoundParameters::new(delta, n, w.mean, w.radius, cfg.bound.u)
}

fn bound_json(p: &BoundParameters) -> Result<serde_json::Value> {
    let unit = p.with_u(1.0)?;
    Ok(json!({
        "parameters": p,
        "value": evaluate_bound(p),
        "value_u1": evaluate_bound(&unit),
    }))
}

fn quantile_json(sorted: &[f64]) -> serde_json::Value {
    json!({
        "median": quantile(sorted, 0.5),
        "q90": quantile(sorted, 0.9),
        "q99": quantile(sorted, 0.99),
        "max": sorted[sorted.len() - 1],
    })
}

fn distort(
    cfg: &RunConfig,
    art: &mut Artifacts,
    summary: &mut Vec<String>,
    tails: bool,
) -> Result<()> {
    let a = cfg.operator()?;
    let t = cfg.test_set()?;
    let samples = distortion_trials(&a, &t, cfg.trials(), cfg.stream(streams::TRIALS))?;
    art.write("distortion.csv", samples_to_csv(&samples))?;
    let sorted = sorted_values(&samples);
    let exactness = overall_exactness(&samples);

    let bound = match cfg.bound.delta {
        Some(delta) => {
            let w = mean_width(&t, cfg.width.samples(), cfg.stream(streams::WIDTH))?;
            Some((bound_for(cfg, delta, a.cols(), &w)?, w))
        }
        None => None,
    };
    let tail = if tails {
        let (p, _) = bound.as_ref().expect("validated");
        let scale = evaluate_bound(&p.with_u(1.0)?);
        let report = tail_report(&samples, scale)?;
        art.json("tails.json", &report)?;
        art.write("survival.svg", survival_plot(&report))?;
        Some(report)
    } else {
        None
    };

    art.json(
        "summary.json",
        &json!({
            "command": cfg.command.as_str(),
            "operator": describe_operator(&a),
            "test_set": describe_set(&t),
            "trials": samples.len(),
            "exactness": exactness.as_str(),
            "sup_distortion": quantile_json(&sorted),
            "width": bound.as_ref().map(|(_, w)| w),
            "bound": bound.as_ref().map(|(p, _)| bound_json(p)).transpose()?,
            "fitted_slope": tail.as_ref().map(|r| r.fitted_slope),
        }),
    )?;
    let (m, n) = a.dims();
    summary.push(format!(
        "operator {} {m}x{n}  set {}  trials {}",
        a.kind_name(),
        t.variant_name(),
        samples.len()
    ));
    summary.push(format!(
        "sup-distortion median {:.6}  q90 {:.6}  max {:.6}  ({})",
        quantile(&sorted, 0.5),
        quantile(&sorted, 0.9),
        sorted[sorted.len() - 1],
        exactness.as_str()
    ));
    if let Some((p, _)) = &bound {
        summary.push(format!(
            "bound reference (u = {}): {:.6}",
            p.u,
            evaluate_bound(p)
        ));
    }
    if let Some(r) = &tail {
        match r.fitted_slope {
            Some(s) => summary.push(format!("log-survival slope: {s:.4}")),
            None => summary.push("log-survival slope: undefined (no spread)".into()),
        }
    }
    Ok(())
}

fn scaling(cfg: &RunConfig, art: &mut Artifacts, summary: &mut Vec<String>) -> Result<()> {
    let s = cfg.scaling.as_ref().expect("validated");
    let axis = match s.axis {
        ScalingAxisKind::Rows => ScalingAxis::Rows {
            n: s.n,
            ms: s.values.clone(),
        },
        ScalingAxisKind::SubspaceDim => ScalingAxis::SubspaceDim {
            m: s.m.expect("validated"),
            n: s.n,
            dims: s.values.clone(),
        },
    };
    let grid = ScalingGrid {
        family: s.family,
        axis,
        trials: cfg.trials(),
        width_samples: cfg.width.samples(),
    };
    let t = match (&cfg.test_set, s.axis) {
        (Some(_), _) => cfg.test_set()?,
        // Unused by the subspace axis, which draws its own sets.
        (None, _) => TestSet::sparse_sphere(s.n, 1)?,
    };
    let table = scaling_study(&grid, &t, cfg.stream(streams::TRIALS))?;
    art.write("scaling.csv", table.to_csv())?;
    art.json("scaling.json", &table)?;
    let x_label = if s.axis == ScalingAxisKind::Rows {
        "m"
    } else {
        "mean width"
    };
    let pts = table
        .rows
        .iter()
        .map(|r| {
            let x = if s.axis == ScalingAxisKind::Rows {
                r.m as f64
            } else {
                r.width
            };
            (x.ln(), r.median.ln())
        })
        .collect();
    art.write(
        "scaling.svg",
        Plot::new(
            "Median sup-distortion (log-log)",
            &format!("ln {x_label}"),
            "ln median",
        )
        .with(Series::line("median", pts))
        .render(),
    )?;
    summary.push(format!(
        "scaling over {} ({} points)",
        table.axis,
        table.rows.len()
    ));
    for r in &table.rows {
        summary.push(format!(
            "  {:>6}  median {:.6}  q90 {:.6}",
            r.parameter, r.median, r.q90
        ));
    }
    match table.exponent {
        Some(e) => summary.push(format!("fitted log-log exponent: {e:.4}")),
        None => summary.push("fitted log-log exponent: undefined".into()),
    }
    Ok(())
}

fn baseline_json(b: &BaselineTable) -> serde_json::Value {
    let (m, n) = (b.m, b.n);
    let envelope = (n as f64).ln().powi(2);
    json!({
        "m": m,
        "n": n,
        "trials": b.trials,
        "quantiles": b.quantiles,
        "median_ratio": b.median_ratio,
        "degenerate": b.degenerate,
        "log_squared_envelope": envelope,
        "within_envelope": b.median_ratio.map(|r| r <= envelope),
    })
}

fn baseline(cfg: &RunConfig, art: &mut Artifacts, summary: &mut Vec<String>) -> Result<()> {
    let a = cfg.operator()?;
    let t = cfg.test_set()?;
    let b = baseline_compare(&a, &t, cfg.trials(), cfg.stream(streams::BASELINE))?;
    art.write("baseline.csv", b.to_csv())?;
    art.json(
        "baseline.json",
        &json!({
            "command": "baseline",
            "operator": describe_operator(&a),
            "test_set": describe_set(&t),
            "baseline": baseline_json(&b),
        }),
    )?;
    summary.push(format!(
        "operator {} {}x{}  trials {}",
        a.kind_name(),
        b.m,
        b.n,
        b.trials
    ));
    summary.push(format!(
        "median randomized {:.6}  median gaussian {:.6}",
        b.quantiles[0].randomized, b.quantiles[0].gaussian
    ));
    match b.median_ratio {
        Some(r) => summary.push(format!("median ratio {r:.4}")),
        None => summary.push("median ratio undefined (gaussian median is 0; degenerate)".into()),
    }
    Ok(())
}

/// Sparsity levels `1, 2, 4, …` up to `max_k`.
fn dyadic_levels(max_k: usize) -> Vec<usize> {
    std::iter::successors(Some(1usize), |k| k.checked_mul(2))
        .take_while(|&k| k <= max_k)
        .collect()
}

/// End to end on one partial circulant: generator and operator, sampled
/// regularity, distortion trials and tails, and the Gaussian baseline.
fn circulant_demo(cfg: &RunConfig, art: &mut Artifacts, summary: &mut Vec<String>) -> Result<()> {
    let op_cfg = cfg.operator.as_ref().expect("validated");
    if op_cfg.kind != crate::config::OperatorKind::Circulant {
        return usage("operator.kind must be \"circulant\" for circulant-demo");
    }
    let a = cfg.operator()?;
    let (m, n) = a.dims();
    let t = cfg.test_set()?;

    let dense = a.materialize()?;
    let max_k = cfg.regularity.max_k.unwrap_or(16).min(n);
    let ks = dyadic_levels(max_k);
    let probes = cfg.regularity.probes.unwrap_or(DEFAULT_PROBES);
    let profile = sampled_profile(&dense, &ks, probes, cfg.stream(streams::REGULARITY))?;
    drop(dense);
    art.write("profile.csv", profile.to_csv())?;
    let delta_estimate = profile
        .entries
        .iter()
        .map(|e| e.raw / (e.k as f64).sqrt())
        .fold(0.0, f64::max);
    let delta = cfg.bound.delta.unwrap_or(delta_estimate);

    let w = mean_width(&t, cfg.width.samples(), cfg.stream(streams::WIDTH))?;
    let bound = if delta > 0.0 {
        Some(bound_for(cfg, delta, n, &w)?)
    } else {
        None
    };

    let samples = distortion_trials(&a, &t, cfg.trials(), cfg.stream(streams::TRIALS))?;
    art.write("distortion.csv", samples_to_csv(&samples))?;
    let sorted = sorted_values(&samples);
    let tails = if samples.len() >= MIN_TAIL_SAMPLES {
        let scale = bound
            .as_ref()
            .map(|p| p.with_u(1.0).map(|q| evaluate_bound(&q)))
            .transpose()?
            .unwrap_or(0.0);
        let report = tail_report(&samples, scale)?;
        art.json("tails.json", &report)?;
        art.write("survival.svg", survival_plot(&report))?;
        Some(report)
    } else {
        None
    };

    let b = baseline_compare(&a, &t, cfg.trials(), cfg.stream(streams::BASELINE))?;
    art.write("baseline.csv", b.to_csv())?;
    art.write("profile.svg", profile_plot(&profile))?;

    // ξ plus one ε: the embedding uses 2n signs in total.
    let signs_consumed = 2 * n;
    art.json(
        "demo.json",
        &json!({
            "command": "circulant-demo",
            "seed": cfg.seed,
            "m": m,
            "n": n,
            "fft": matches!(&a, EmbeddingOperator::Circulant(c) if c.uses_fft()),
            "signs_consumed": signs_consumed,
            "regularity": {
                "mode": profile.mode.as_str(),
                "probes": probes,
                "entries": profile.entries,
                "delta_estimate": delta_estimate,
            },
            "test_set": describe_set(&t),
            "width": w,
            "bound": bound.as_ref().map(bound_json).transpose()?,
            "distortion": {
                "trials": samples.len(),
                "exactness": overall_exactness(&samples).as_str(),
                "summary": quantile_json(&sorted),
            },
            "tails": tails.as_ref().map(|r| json!({
                "quantiles": r.quantiles,
                "fitted_slope": r.fitted_slope,
                "scale": r.scale,
            })),
            "baseline": baseline_json(&b),
        }),
    )?;

    summary.push(format!(
        "partial circulant {m}x{n}  signs consumed {signs_consumed}"
    ));
    summary.push(format!(
        "sampled regularity at k = {:?}: delta estimate {:.6}",
        ks, delta_estimate
    ));
    summary.push(format!(
        "mean width {:.4}  radius {:.4}  critical dimension {:.3}",
        w.mean, w.radius, w.critical_dimension
    ));
    summary.push(format!(
        "sup-distortion median {:.6}  q90 {:.6}  max {:.6}",
        quantile(&sorted, 0.5),
        quantile(&sorted, 0.9),
        sorted[sorted.len() - 1]
    ));
    if let Some(p) = &bound {
        summary.push(format!(
            "bound reference (delta {:.4}, u = {}): {:.6}",
            p.delta,
            p.u,
            evaluate_bound(p)
        ));
    }
    match b.median_ratio {
        Some(r) => summary.push(format!(
            "baseline median ratio {r:.4}  (envelope ln²n = {:.2})",
            (n as f64).ln().powi(2)
        )),
        None => summary.push("baseline median ratio undefined (degenerate)".into()),
    }
    Ok(())
}

/// Convenience for callers that hold a circulant generator rather than a
/// config: the normalized partial circulant on rows `0..m`.
pub fn circulant_from_seed(n: usize, m: usize, seed: u64) -> Result<EmbeddingOperator> {
    let r = crate::numerics::RngStream::new(seed, 0).child(streams::OPERATOR);
    partial_circulant(CirculantSpec::first_rows(
        sample_sign_vector(n, r.child(0))?,
        m,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Usage("x".into())), 2);
        assert_eq!(exit_code(&Error::Parse("x".into())), 2);
        assert_eq!(exit_code(&Error::Resource("x".into())), 3);
        assert_eq!(exit_code(&Error::Numerical("x".into())), 1);
    }

    #[test]
    fn levels() {
        assert_eq!(dyadic_levels(16), vec![1, 2, 4, 8, 16]);
        assert_eq!(dyadic_levels(7), vec![1, 2, 4]);
    }

    #[test]
    fn demo_counts_signs() {
        let cfg = RunConfig::from_toml(
            r#"
command = "circulant-demo"
seed = 3
trials = 20

[operator]
kind = "circulant"
m = 8
n = 16

[test_set]
variant = "subspace_ball"
n = 16
d = 2

[width]
samples = 1000
"#,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let outcome = run(&cfg, dir.path(), false).unwrap();
        let demo: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("demo.json")).unwrap())
                .unwrap();
        assert_eq!(demo["signs_consumed"], 32);
        assert!(demo["bound"]["value"].as_f64().unwrap() > 0.0);
        assert!(demo["distortion"]["summary"]["median"].as_f64().is_some());
        assert!(outcome.files.contains(&"effective_config.toml".to_string()));
        let a = circulant_from_seed(16, 8, 3).unwrap();
        assert_eq!(
            a.materialize().unwrap(),
            cfg.operator().unwrap().materialize().unwrap()
        );
    }
}
