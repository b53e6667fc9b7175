//! `drift`: sup-norm change of the empirical kernel during training,
//! measured at checkpoints across ensemble sizes and seeds, with the
//! fitted log-log slope of the final drift against the ensemble size.

use std::fmt::Write as _;

use anyhow::Result;
use clap::Args;
use serde_json::json;
use tntk::training::{kernel_drift, TrainingConfig};
use tntk::{CounterRng, SoftTreeEnsemble};

use super::{derive_seed, parse_m_list, random_unit_inputs, OutputFormat, RunContext};
use crate::parallel::map_parallel;
use crate::specgrid::integer_list;
use crate::stats;

#[derive(Debug, Args)]
pub struct DriftArgs {
    #[arg(long, default_value = "16,64,256,1024")]
    pub m_list: String,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 500)]
    pub steps: usize,
    /// Checkpoint steps at which the kernel is snapshotted.
    #[arg(long, default_value = "0,100,200,300,400,500")]
    pub checkpoints: String,
    /// Seeds per ensemble size.
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    #[arg(long, default_value_t = 10)]
    pub train_n: usize,
    #[arg(long, default_value_t = 5)]
    pub dim: usize,
}

pub fn run(args: &DriftArgs, ctx: &RunContext) -> Result<()> {
    let m_list = parse_m_list(&args.m_list)?;
    let checkpoints = integer_list(&args.checkpoints)?;
    let x = random_unit_inputs(args.train_n, args.dim, derive_seed(ctx.seed, 0));
    let targets = CounterRng::new(derive_seed(ctx.seed, 1)).gaussian_vec(args.train_n);
    let config = TrainingConfig {
        learning_rate: args.lr,
        steps: args.steps,
        shift_initial_outputs: true,
    };

    let tasks: Vec<(usize, usize)> = m_list
        .iter()
        .flat_map(|&m| (0..args.trials).map(move |trial| (m, trial)))
        .collect();
    let base_seed = ctx.seed;
    let depth = args.depth;
    let alpha = args.alpha;
    let rows: Vec<(usize, usize, Vec<(usize, f64)>)> =
        map_parallel(tasks, ctx.threads, |(m, trial)| {
            let seed = derive_seed(base_seed, 2 + (m as u64) * 1000 + trial as u64);
            let mut ens = SoftTreeEnsemble::new_random(m, depth, alpha, x.feature_count(), seed)
                .expect("ensemble");
            let drifts =
                kernel_drift(&mut ens, &x, &targets, &config, &checkpoints).expect("drift run");
            (m, trial, drifts)
        });

    // Slope of the seed-averaged final drift against M.
    let final_step = *checkpoints.iter().max().unwrap_or(&args.steps);
    let mut log_m = Vec::new();
    let mut log_drift = Vec::new();
    for &m in &m_list {
        let finals: Vec<f64> = rows
            .iter()
            .filter(|(rm, _, _)| *rm == m)
            .filter_map(|(_, _, drifts)| {
                drifts.iter().find(|(c, _)| *c == final_step).map(|(_, d)| *d)
            })
            .collect();
        let (mean, _) = stats::mean_std(&finals);
        log_m.push((m as f64).ln());
        log_drift.push(mean.ln());
    }
    let fit = stats::fit_line(&log_m, &log_drift);
    let slope = fit.map(|f| f.slope);
    match slope {
        Some(s) => println!("final drift slope vs M (log-log): {s:.4}"),
        None => println!("drift slope: not enough sizes to fit"),
    }

    let config_json = json!({
        "command": "drift",
        "m_list": m_list,
        "depth": depth,
        "alpha": alpha,
        "lr": args.lr,
        "steps": args.steps,
        "checkpoints": checkpoints,
        "trials": args.trials,
        "train_n": args.train_n,
        "dim": args.dim,
        "seed": ctx.seed,
    });
    let path = ctx.output_path("drift");
    let content = match ctx.format {
        OutputFormat::Csv => {
            let mut out = String::new();
            writeln!(out, "# {config_json}").unwrap();
            writeln!(out, "m,seed,checkpoint,sup_drift").unwrap();
            for (m, trial, drifts) in &rows {
                for (checkpoint, sup) in drifts {
                    writeln!(out, "{m},{trial},{checkpoint},{sup}").unwrap();
                }
            }
            out
        }
        OutputFormat::Json => serde_json::to_string_pretty(&json!({
            "config": config_json,
            "slope": slope,
            "rows": rows.iter().flat_map(|(m, trial, drifts)| {
                drifts.iter().map(move |(checkpoint, sup)| json!({
                    "m": m, "seed": trial, "checkpoint": checkpoint, "sup_drift": sup,
                }))
            }).collect::<Vec<_>>(),
        }))?,
    };
    ctx.write(&path, &content)
}
