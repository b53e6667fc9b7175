//! `timing`: wall-clock Gram-assembly time as a function of depth. The
//! tree kernel's closed form is non-recursive, so its cost is flat in
//! depth; the MLP kernel's layer recursion grows linearly. The fitted
//! time-vs-depth slope with its p-value quantifies both.

use std::fmt::Write as _;
use std::time::Instant;

use anyhow::Result;
use clap::Args;
use serde_json::json;
use tntk::dataset::InputMatrix;
use tntk::kernel::{gram, KernelSpec};
use tntk::{Activation, CounterRng};

use super::gram::KernelFamily;
use super::{derive_seed, OutputFormat, RunContext};
use crate::specgrid::{integer_list, spec_to_string};
use crate::stats;

#[derive(Debug, Args)]
pub struct TimingArgs {
    #[arg(long, value_enum, default_value = "tntk")]
    pub kernel: KernelFamily,
    /// Depths (tntk) or hidden-layer counts (mlp) to measure. The rbf
    /// kernel has no depth; the grid then repeats identical measurements.
    #[arg(long, default_value = "1,5,9,13,17,21,25,29")]
    pub depth_list: String,
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    #[arg(long, default_value_t = 10)]
    pub dim: usize,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2.0)]
    pub gamma: f64,
}

pub fn run(args: &TimingArgs, ctx: &RunContext) -> Result<()> {
    let depths = integer_list(&args.depth_list)?;
    let spec_for = |depth: usize| -> KernelSpec {
        match args.kernel {
            KernelFamily::Tntk => KernelSpec::Tntk { depth, alpha: args.alpha },
            KernelFamily::Mlp => {
                KernelSpec::MlpNtk { hidden_layers: depth, activation: Activation::Relu }
            }
            KernelFamily::Rbf => KernelSpec::Rbf { gamma: args.gamma },
        }
    };
    for &depth in &depths {
        spec_for(depth).validate().map_err(|e| anyhow::anyhow!("{e}"))?;
    }

    // Zero-mean unit-variance Gaussian features.
    let mut rng = CounterRng::new(derive_seed(ctx.seed, 0));
    let samples: Vec<Vec<f64>> = (0..args.n).map(|_| rng.gaussian_vec(args.dim)).collect();
    let x = InputMatrix::from_samples(&samples, Vec::new()).map_err(|e| anyhow::anyhow!("{e}"))?;

    // Warm caches before measuring.
    let _ = gram(&spec_for(depths[depths.len() / 2]), &x).map_err(|e| anyhow::anyhow!("{e}"))?;

    let mut rows: Vec<(usize, usize, f64)> = Vec::new();
    for trial in 0..args.trials {
        for &depth in &depths {
            let spec = spec_for(depth);
            let start = Instant::now();
            let result = gram(&spec, &x).map_err(|e| anyhow::anyhow!("{e}"))?;
            let seconds = start.elapsed().as_secs_f64();
            std::hint::black_box(result.matrix.get(0, 0));
            rows.push((depth, trial, seconds));
        }
    }

    let mut per_depth_summary = Vec::new();
    for &depth in &depths {
        let values: Vec<f64> =
            rows.iter().filter(|(d, _, _)| *d == depth).map(|(_, _, s)| *s).collect();
        let (mean, std) = stats::mean_std(&values);
        per_depth_summary.push((depth, mean, std));
        println!("depth {depth}: {mean:.6} s +- {std:.6}");
    }
    let xs: Vec<f64> = rows.iter().map(|(d, _, _)| *d as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|(_, _, s)| *s).collect();
    let fit = stats::fit_line(&xs, &ys);
    if let Some(fit) = &fit {
        println!(
            "time-vs-depth slope = {:.3e} s/level (t = {:.2}, p = {:.4})",
            fit.slope, fit.t_statistic, fit.p_value
        );
    }

    let config_json = json!({
        "command": "timing",
        "kernel": spec_to_string(&spec_for(depths[0])),
        "depth_list": depths,
        "n": args.n,
        "dim": args.dim,
        "trials": args.trials,
        "seed": ctx.seed,
    });
    let path = ctx.output_path("timing");
    let content = match ctx.format {
        OutputFormat::Csv => {
            let mut out = String::new();
            writeln!(out, "# {config_json}").unwrap();
            writeln!(out, "depth,trial,seconds").unwrap();
            for (depth, trial, seconds) in &rows {
                writeln!(out, "{depth},{trial},{seconds}").unwrap();
            }
            out
        }
        OutputFormat::Json => serde_json::to_string_pretty(&json!({
            "config": config_json,
            "slope": fit.map(|f| f.slope),
            "p_value": fit.map(|f| f.p_value),
            "summary": per_depth_summary.iter().map(|(depth, mean, std)| json!({
                "depth": depth, "mean_seconds": mean, "std_seconds": std,
            })).collect::<Vec<_>>(),
            "rows": rows.iter().map(|(depth, trial, seconds)| json!({
                "depth": depth, "trial": trial, "seconds": seconds,
            })).collect::<Vec<_>>(),
        }))?,
    };
    ctx.write(&path, &content)
}
