//! `converge`: empirical demonstration that the finite-ensemble kernel at
//! initialization approaches the closed form as the tree count grows.
//! Emits the angle-sweep curves for two 2-d inputs, the mean absolute
//! error table over random inputs per (ensemble size, trial), and the
//! fitted log-log error slope.

use std::fmt::Write as _;

use anyhow::Result;
use clap::Args;
use serde_json::json;
use tntk::dataset::InputMatrix;
use tntk::kernel::{gram, tntk_limit, KernelSpec};
use tntk::SoftTreeEnsemble;

use super::{derive_seed, parse_m_list, random_unit_inputs, OutputFormat, RunContext};
use crate::parallel::map_parallel;
use crate::stats;

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    /// Ensemble sizes to test, comma separated.
    #[arg(long, default_value = "16,64,256,1024,4096")]
    pub m_list: String,
    /// Re-initializations per ensemble size.
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    /// Random unit inputs for the error measurement.
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// Feature dimension of the error-measurement inputs.
    #[arg(long, default_value_t = 5)]
    pub dim: usize,
    /// Angle-grid resolution of the two-input sweep.
    #[arg(long, default_value_t = 50)]
    pub beta_steps: usize,
}

struct ErrorRow {
    m: usize,
    trial: usize,
    mean_abs_error: f64,
}

struct SweepRow {
    m: usize,
    trial: usize,
    beta: f64,
    value: f64,
}

pub fn run(args: &ConvergeArgs, ctx: &RunContext) -> Result<()> {
    let m_list = parse_m_list(&args.m_list)?;
    let depth = args.depth;
    let alpha = args.alpha;
    let spec = KernelSpec::Tntk { depth, alpha };
    spec.validate().map_err(|e| anyhow::anyhow!("{e}"))?;

    // Error measurement over random unit inputs against the closed form.
    let x = random_unit_inputs(args.points, args.dim, derive_seed(ctx.seed, 0));
    let limit = gram(&spec, &x).map_err(|e| anyhow::anyhow!("{e}"))?;
    let tasks: Vec<(usize, usize)> = m_list
        .iter()
        .flat_map(|&m| (0..args.trials).map(move |trial| (m, trial)))
        .collect();
    let base_seed = ctx.seed;
    let points = args.points;
    let error_rows: Vec<ErrorRow> = map_parallel(tasks, ctx.threads, |(m, trial)| {
        let seed = derive_seed(base_seed, 1 + (m as u64) * 1000 + trial as u64);
        let ens = SoftTreeEnsemble::new_random(m, depth, alpha, x.feature_count(), seed)
            .expect("ensemble");
        let empirical = ens.empirical_ntk(&x, 0).expect("empirical kernel");
        let mut total = 0.0;
        for i in 0..points {
            for j in 0..points {
                total += (empirical.matrix.get(i, j) - limit.matrix.get(i, j)).abs();
            }
        }
        ErrorRow { m, trial, mean_abs_error: total / (points * points) as f64 }
    });

    // Angle sweep with inputs (1, 0) and (cos beta, sin beta).
    let xi = vec![1.0, 0.0];
    let betas: Vec<f64> = (0..=args.beta_steps)
        .map(|k| std::f64::consts::PI * k as f64 / args.beta_steps as f64)
        .collect();
    let limit_curve: Vec<(f64, f64)> = betas
        .iter()
        .map(|&beta| (beta, tntk_limit(&xi, &[beta.cos(), beta.sin()], depth, alpha)))
        .collect();
    let sweep_tasks: Vec<(usize, usize)> = m_list
        .iter()
        .flat_map(|&m| (0..args.trials).map(move |trial| (m, trial)))
        .collect();
    let sweep_rows: Vec<Vec<SweepRow>> = map_parallel(sweep_tasks, ctx.threads, |(m, trial)| {
        let seed = derive_seed(base_seed, 2_000_000 + (m as u64) * 1000 + trial as u64);
        let ens = SoftTreeEnsemble::new_random(m, depth, alpha, 2, seed).expect("ensemble");
        betas
            .iter()
            .map(|&beta| {
                let pair = InputMatrix::from_samples(
                    &[xi.clone(), vec![beta.cos(), beta.sin()]],
                    Vec::new(),
                )
                .expect("pair");
                let empirical = ens.empirical_ntk(&pair, 0).expect("empirical kernel");
                SweepRow { m, trial, beta, value: empirical.matrix.get(0, 1) }
            })
            .collect()
    });

    // Log-log slope of the trial-averaged error against M.
    let mut log_m = Vec::new();
    let mut log_err = Vec::new();
    for &m in &m_list {
        let values: Vec<f64> = error_rows
            .iter()
            .filter(|r| r.m == m)
            .map(|r| r.mean_abs_error)
            .collect();
        let (mean, _) = stats::mean_std(&values);
        log_m.push((m as f64).ln());
        log_err.push(mean.ln());
    }
    let fit = stats::fit_line(&log_m, &log_err);
    let slope = fit.map(|f| f.slope);
    match slope {
        Some(s) => println!("error slope vs M (log-log): {s:.4}"),
        None => println!("error slope vs M: not enough sizes to fit"),
    }

    let config = json!({
        "command": "converge",
        "depth": depth,
        "alpha": alpha,
        "m_list": m_list,
        "trials": args.trials,
        "points": args.points,
        "dim": args.dim,
        "beta_steps": args.beta_steps,
        "seed": ctx.seed,
    });
    let path = ctx.output_path("converge");
    let content = match ctx.format {
        OutputFormat::Csv => {
            let mut out = String::new();
            writeln!(out, "# {config}").unwrap();
            writeln!(out, "kind,m,trial,beta,value").unwrap();
            for row in &error_rows {
                writeln!(out, "error,{},{},,{}", row.m, row.trial, row.mean_abs_error).unwrap();
            }
            if let Some(s) = slope {
                writeln!(out, "slope,,,,{s}").unwrap();
            }
            for (beta, value) in &limit_curve {
                writeln!(out, "limit,,,{beta},{value}").unwrap();
            }
            for rows in &sweep_rows {
                for row in rows {
                    writeln!(out, "sweep,{},{},{},{}", row.m, row.trial, row.beta, row.value)
                        .unwrap();
                }
            }
            out
        }
        OutputFormat::Json => serde_json::to_string_pretty(&json!({
            "config": config,
            "slope": slope,
            "errors": error_rows.iter().map(|r| json!({
                "m": r.m, "trial": r.trial, "mean_abs_error": r.mean_abs_error,
            })).collect::<Vec<_>>(),
            "limit_curve": limit_curve.iter().map(|(beta, value)| json!({
                "beta": beta, "value": value,
            })).collect::<Vec<_>>(),
            "sweep": sweep_rows.iter().flatten().map(|r| json!({
                "m": r.m, "trial": r.trial, "beta": r.beta, "value": r.value,
            })).collect::<Vec<_>>(),
        }))?,
    };
    ctx.write(&path, &content)
}
