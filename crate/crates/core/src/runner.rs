//! Command-line front end: config-driven experiments with deterministic CSV
//! output and a JSON run manifest.
//!
//! Identical (config, seed) pairs produce byte-identical CSV files; wall time
//! and the start timestamp live only in the manifest. Thread count comes from
//! the environment (rayon's default) and never changes results.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde::Serialize;

use crate::config::{
    EstimatorConfig, ExperimentConfig, KernelConfig, LossConfig, ModelConfig, RunConfig,
};
use crate::cutoffs::{self, CutoffReport};
use crate::diagnostics;
use crate::error::{Error, Result};
use crate::estimators::Estimator;
use crate::kernels::LossSpec;
use crate::mixture::MixingDistribution;
use crate::risk;
use crate::rng::task_seed;

#[derive(Parser, Debug)]
#[command(
    name = "shrinklab",
    version,
    about = "Dominance laboratory for balanced-loss shrinkage: cut-offs, risk scans, structural checks"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Experiment config (TOML). `verify` falls back to built-in defaults.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Override replicates per grid point.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Override the output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
pub enum Command {
    /// Emit dominance cut-off rows for the configured (model, kernel, loss).
    Cutoff,
    /// Paired dominance scan of each configured estimator against the target.
    RiskScan,
    /// Unknown-variance dominance scan under the quadratic balanced loss.
    UvScan,
    /// Run the structural diagnostic suite and emit a pass/fail table.
    Verify,
    /// Check that risk-difference signs transfer between balanced and
    /// unbalanced losses for Bayes blends at matched seeds.
    BayesCompare,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Cutoff => "cutoff",
            Command::RiskScan => "risk-scan",
            Command::UvScan => "uv-scan",
            Command::Verify => "verify",
            Command::BayesCompare => "bayes-compare",
        }
    }

    pub fn csv_name(&self) -> &'static str {
        match self {
            Command::Cutoff => "cutoff.csv",
            Command::RiskScan => "risk_scan.csv",
            Command::UvScan => "uv_scan.csv",
            Command::Verify => "verify.csv",
            Command::BayesCompare => "bayes_compare.csv",
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    subcommand: &'a str,
    crate_version: &'static str,
    seed: u64,
    n: usize,
    rows: usize,
    all_pass: bool,
    wall_time_ms: u128,
    started_unix_ms: u128,
    config: &'a ExperimentConfig,
}

struct Outcome {
    rows: usize,
    all_pass: bool,
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Built-in fallback so `verify` runs without a config file.
fn default_verify_config() -> ExperimentConfig {
    ExperimentConfig {
        model: ModelConfig {
            family: "normal".into(),
            d: 5,
            sigma2: Some(1.0),
            shape: None,
            scale: None,
            rate: None,
            points: None,
            weights: None,
        },
        kernel: KernelConfig {
            family: "identity".into(),
            role: None,
            alpha: None,
            gamma: None,
            beta: None,
            r: None,
        },
        loss: LossConfig { family: "balanced_squared".into(), omegas: vec![0.3] },
        estimator: vec![],
        run: RunConfig { n: 4096, seed: 0, grid: None, out: None },
    }
}

/// Run one subcommand end to end; returns the process exit code
/// (0 all verdicts pass, 1 some verdict failed).
pub fn execute(cli: &Cli) -> Result<i32> {
    let clock = Instant::now();
    let started_unix_ms = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0);
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            ExperimentConfig::from_toml_str(&text)?
        }
        None => match cli.command {
            Command::Verify => default_verify_config(),
            cmd => return Err(Error::Config(format!("`{}` needs --config", cmd.name()))),
        },
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(n) = cli.n {
        cfg.run.n = n;
    }
    if let Some(out) = &cli.out {
        cfg.run.out = Some(out.display().to_string());
    }
    cfg.validate()?;
    let out_dir = PathBuf::from(cfg.run.out.clone().unwrap_or_else(|| ".".into()));
    fs::create_dir_all(&out_dir)?;

    let outcome = match cli.command {
        Command::Cutoff => run_cutoff(&cfg, &out_dir)?,
        Command::RiskScan => run_risk_scan(&cfg, &out_dir)?,
        Command::UvScan => run_uv_scan(&cfg, &out_dir)?,
        Command::Verify => run_verify(&cfg, &out_dir)?,
        Command::BayesCompare => run_bayes_compare(&cfg, &out_dir)?,
    };

    let manifest = Manifest {
        subcommand: cli.command.name(),
        crate_version: env!("CARGO_PKG_VERSION"),
        seed: cfg.run.seed,
        n: cfg.run.n,
        rows: outcome.rows,
        all_pass: outcome.all_pass,
        wall_time_ms: clock.elapsed().as_millis(),
        started_unix_ms,
        config: &cfg,
    };
    fs::write(out_dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    println!(
        "{}: {} rows -> {} ({})",
        cli.command.name(),
        outcome.rows,
        out_dir.join(cli.command.csv_name()).display(),
        if outcome.all_pass { "all pass" } else { "FAIL" }
    );
    Ok(if outcome.all_pass { 0 } else { 1 })
}

fn cutoff_writer(out_dir: &Path, name: &str) -> Result<csv::Writer<fs::File>> {
    Ok(csv::Writer::from_path(out_dir.join(name))?)
}

fn write_cutoff_row(w: &mut csv::Writer<fs::File>, r: &CutoffReport) -> Result<()> {
    w.write_record([
        r.tag.label().to_string(),
        r.route.label().to_string(),
        fmt(r.value),
        fmt(r.error),
        r.model.clone(),
        r.kernel.clone(),
        fmt(r.omega),
        r.d.to_string(),
    ])?;
    Ok(())
}

fn run_cutoff(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Outcome> {
    let model = cfg.build_model()?;
    let kernel = cfg.build_kernel_checked()?;
    let mut reports: Vec<CutoffReport> = Vec::new();
    match cfg.loss.family.as_str() {
        "balanced_squared" => {
            for omega in &cfg.loss.omegas {
                match model.mixing {
                    MixingDistribution::Degenerate { sigma2 } => {
                        reports.push(cutoffs::cutoff_quadratic(model.d, *omega, sigma2)?)
                    }
                    _ => {
                        // Mixture analogue: (1-omega) times the unbalanced
                        // inverse-moment bound.
                        let plain = cutoffs::cutoff_plain_inverse_moment(&model)?;
                        let mut r = plain.clone();
                        r.value *= 1.0 - omega;
                        r.error *= 1.0 - omega;
                        r.omega = *omega;
                        reports.push(r);
                    }
                }
            }
        }
        "concave_balanced" => {
            for omega in &cfg.loss.omegas {
                let (mixing, moment) = cutoffs::cutoff_concave(&model, &kernel, *omega)?;
                reports.push(moment);
                if let Some(m) = mixing {
                    reports.push(m);
                }
            }
        }
        "composite_balanced" => {
            for omega in &cfg.loss.omegas {
                reports.push(cutoffs::cutoff_composite(&model, &kernel, *omega)?);
            }
            // The omega-free cap the tilted bound never exceeds.
            reports.push(cutoffs::cutoff_plain_inverse_moment(&model)?);
        }
        other => return Err(Error::Config(format!("[loss] unknown family `{other}`"))),
    }
    let mut w = cutoff_writer(out_dir, "cutoff.csv")?;
    w.write_record(["bound", "route", "value", "error", "model", "kernel", "omega", "d"])?;
    for r in &reports {
        write_cutoff_row(&mut w, r)?;
        println!(
            "cutoff {} omega={}: {} (+- {}, {})",
            r.tag.label(),
            r.omega,
            r.value,
            r.error,
            r.route.label()
        );
    }
    w.flush()?;
    Ok(Outcome { rows: reports.len(), all_pass: true })
}

fn scan_writer(out_dir: &Path, name: &str) -> Result<csv::Writer<fs::File>> {
    let mut w = csv::Writer::from_path(out_dir.join(name))?;
    w.write_record([
        "theta_norm",
        "estimator",
        "loss_family",
        "omega",
        "risk_diff",
        "std_err",
        "n",
        "verdict",
    ])?;
    Ok(w)
}

fn write_scan(w: &mut csv::Writer<fs::File>, scan: &risk::DominanceScan) -> Result<usize> {
    for p in &scan.points {
        w.write_record([
            fmt(p.theta_norm),
            scan.estimator.clone(),
            scan.loss_family.clone(),
            fmt(scan.omega),
            fmt(p.difference.mean),
            fmt(p.difference.std_err),
            p.difference.n.to_string(),
            p.verdict.label().to_string(),
        ])?;
    }
    println!(
        "{} omega={} {}: {}/{} dominate, {} violations",
        scan.loss_family,
        scan.omega,
        scan.estimator,
        scan.points.iter().filter(|p| p.verdict == risk::Verdict::Dominates).count(),
        scan.points.len(),
        scan.points.iter().filter(|p| p.verdict == risk::Verdict::Violated).count(),
    );
    Ok(scan.points.len())
}

fn run_risk_scan(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Outcome> {
    if cfg.estimator.is_empty() {
        return Err(Error::Config("risk-scan needs at least one [[estimator]] block".into()));
    }
    let model = cfg.build_model()?;
    let losses = cfg.build_losses()?;
    let grid = cfg.theta_grid();
    let mut w = scan_writer(out_dir, "risk_scan.csv")?;
    let mut rows = 0;
    let mut all_pass = true;
    let mut combo = 0u64;
    for loss in &losses {
        for est_cfg in &cfg.estimator {
            if est_cfg.family == "uv_baranchik" {
                return Err(Error::Config(
                    "uv_baranchik blocks run under the `uv-scan` subcommand".into(),
                ));
            }
            let resolved = cfg.resolve_estimator(est_cfg, loss.omega)?;
            let scan = risk::dominance_scan(
                &model,
                loss,
                &resolved.estimator,
                &grid,
                cfg.run.n,
                task_seed(cfg.run.seed, "risk_scan_combo", combo),
            )?;
            combo += 1;
            all_pass &= scan.all_pass();
            rows += write_scan(&mut w, &scan)?;
        }
    }
    w.flush()?;
    Ok(Outcome { rows, all_pass })
}

fn run_uv_scan(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Outcome> {
    let model = cfg.build_model()?;
    let sigma2 = match model.mixing {
        MixingDistribution::Degenerate { sigma2 } => sigma2,
        _ => return Err(Error::Config("uv-scan needs the normal model".into())),
    };
    if cfg.loss.family != "balanced_squared" {
        return Err(Error::Config("uv-scan runs under balanced_squared loss only".into()));
    }
    let uv_blocks: Vec<&EstimatorConfig> =
        cfg.estimator.iter().filter(|e| e.family == "uv_baranchik").collect();
    if uv_blocks.is_empty() {
        return Err(Error::Config(
            "uv-scan needs a [[estimator]] block with family \"uv_baranchik\"".into(),
        ));
    }
    let grid = cfg.theta_grid();
    let mut w = scan_writer(out_dir, "uv_scan.csv")?;
    let mut rows = 0;
    let mut all_pass = true;
    let mut combo = 0u64;
    for omega in &cfg.loss.omegas {
        for est_cfg in &uv_blocks {
            let resolved = cfg.resolve_estimator(est_cfg, *omega)?;
            let scan = risk::unknown_variance_scan(
                model.d,
                est_cfg.k.expect("validated uv block"),
                *omega,
                resolved.a,
                cfg.build_shrink(est_cfg)?,
                sigma2,
                &grid,
                cfg.run.n,
                task_seed(cfg.run.seed, "uv_scan_combo", combo),
            )?;
            combo += 1;
            all_pass &= scan.all_pass();
            rows += write_scan(&mut w, &scan)?;
        }
    }
    w.flush()?;
    Ok(Outcome { rows, all_pass })
}

fn run_verify(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Outcome> {
    let lines = diagnostics::verify_suite(cfg.run.seed);
    let mut w = csv::Writer::from_path(out_dir.join("verify.csv"))?;
    w.write_record(["check", "pass", "detail"])?;
    for l in &lines {
        println!("{}  {:44} {}", if l.pass { "PASS" } else { "FAIL" }, l.name, l.detail);
        w.write_record([l.name.clone(), l.pass.to_string(), l.detail.clone()])?;
    }
    w.flush()?;
    Ok(Outcome { rows: lines.len(), all_pass: lines.iter().all(|l| l.pass) })
}

/// Unwrap a blend into its unbalanced inner rule for the omega = 0 legs.
fn inner_of(est: Estimator) -> Estimator {
    match est {
        Estimator::BayesBalanced { inner, .. } => *inner,
        other => other,
    }
}

fn run_bayes_compare(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Outcome> {
    let model = cfg.build_model()?;
    if !matches!(model.mixing, MixingDistribution::Degenerate { .. }) {
        return Err(Error::Config("bayes-compare needs the normal model".into()));
    }
    if cfg.loss.family != "balanced_squared" {
        return Err(Error::Config(
            "bayes-compare studies the quadratic balanced loss only".into(),
        ));
    }
    let bayes_cfg = cfg
        .estimator
        .iter()
        .find(|e| e.family == "conjugate_bayes")
        .ok_or_else(|| {
            Error::Config("bayes-compare needs a conjugate_bayes [[estimator]] block".into())
        })?;
    let competitor_cfg = cfg.estimator.iter().find(|e| e.family != "conjugate_bayes");
    if let Some(c) = competitor_cfg {
        if c.a_fraction_of_cutoff.is_some() {
            return Err(Error::Config(
                "bayes-compare competitors take an absolute `a`, not a cutoff fraction".into(),
            ));
        }
    }
    let grid = cfg.theta_grid();
    let mut w = csv::Writer::from_path(out_dir.join("bayes_compare.csv"))?;
    w.write_record([
        "theta_norm",
        "omega",
        "bayes",
        "competitor",
        "diff_balanced",
        "se_balanced",
        "diff_unbalanced",
        "se_unbalanced",
        "sign_match",
        "verdict",
    ])?;
    let mut rows = 0;
    let mut all_pass = true;
    for (oi, omega) in cfg.loss.omegas.iter().enumerate() {
        let loss_w = LossSpec::new(
            crate::kernels::LossFamily::BalancedSquared,
            *omega,
            crate::kernels::Kernel::Identity,
            model.d,
        )?;
        let loss_0 = LossSpec::new(
            crate::kernels::LossFamily::BalancedSquared,
            0.0,
            crate::kernels::Kernel::Identity,
            model.d,
        )?;
        let bayes_w = cfg.resolve_estimator(bayes_cfg, *omega)?.estimator;
        let bayes_0 = inner_of(bayes_w.clone());
        let comp_0 = match competitor_cfg {
            Some(c) => inner_of(cfg.resolve_estimator(c, 0.0)?.estimator),
            None => Estimator::TargetX,
        };
        let comp_w = Estimator::BayesBalanced { omega: *omega, inner: Box::new(comp_0.clone()) };
        for (pi, norm) in grid.iter().enumerate() {
            let mut theta = vec![0.0; model.d];
            theta[0] = *norm;
            let seed_pt =
                task_seed(cfg.run.seed, "bayes_point", (oi * grid.len() + pi) as u64);
            let dw = risk::mc_risk_difference(
                &model, &loss_w, &bayes_w, &comp_w, &theta, cfg.run.n, seed_pt,
            )?;
            let d0 = risk::mc_risk_difference(
                &model, &loss_0, &bayes_0, &comp_0, &theta, cfg.run.n, seed_pt,
            )?;
            let sign_match = dw.mean.signum() == d0.mean.signum();
            let both_null = dw.mean.abs() <= 3.0 * dw.std_err
                && d0.mean.abs() <= 3.0 * d0.std_err;
            let pass = sign_match || both_null;
            all_pass &= pass;
            w.write_record([
                fmt(*norm),
                fmt(*omega),
                bayes_0.label(),
                comp_0.label(),
                fmt(dw.mean),
                fmt(dw.std_err),
                fmt(d0.mean),
                fmt(d0.std_err),
                sign_match.to_string(),
                (if pass { "pass" } else { "fail" }).to_string(),
            ])?;
            rows += 1;
        }
        println!(
            "bayes-compare omega={omega}: sign transfer checked on {} grid points",
            grid.len()
        );
    }
    w.flush()?;
    Ok(Outcome { rows, all_pass })
}
