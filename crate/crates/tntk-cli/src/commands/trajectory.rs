//! `trajectory`: full-batch gradient descent of a finite ensemble on
//! random data, overlaid with the closed-form gradient-flow trajectory of
//! the limiting kernel. Defaults match the output-dynamics experiment:
//! depth 3, hardness 2.0, learning rate 0.1, 10 train and 10 test points
//! of dimension 5 with random targets.

use std::fmt::Write as _;

use anyhow::Result;
use clap::Args;
use serde_json::json;
use tntk::kernel::{gram, KernelSpec};
use tntk::linalg::Matrix;
use tntk::training::{analytic_trajectory, train_gd, TrainingConfig};
use tntk::{CounterRng, SoftTreeEnsemble};

use super::{derive_seed, random_unit_inputs, OutputFormat, RunContext};

#[derive(Debug, Args)]
pub struct TrajectoryArgs {
    /// Ensemble size.
    #[arg(long, default_value_t = 1024)]
    pub m: usize,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.1)]
    pub lr: f64,
    #[arg(long, default_value_t = 2000)]
    pub steps: usize,
    #[arg(long, default_value_t = 10)]
    pub train_n: usize,
    #[arg(long, default_value_t = 10)]
    pub test_n: usize,
    #[arg(long, default_value_t = 5)]
    pub dim: usize,
    /// Keep the raw initial outputs instead of shifting them to zero.
    #[arg(long)]
    pub no_shift: bool,
    /// Also write the trained ensemble as a JSON snapshot for exact
    /// experiment resumption.
    #[arg(long)]
    pub snapshot_out: Option<std::path::PathBuf>,
}

pub fn run(args: &TrajectoryArgs, ctx: &RunContext) -> Result<()> {
    let spec = KernelSpec::Tntk { depth: args.depth, alpha: args.alpha };
    spec.validate().map_err(|e| anyhow::anyhow!("{e}"))?;

    let x_train = random_unit_inputs(args.train_n, args.dim, derive_seed(ctx.seed, 0));
    let x_test = random_unit_inputs(args.test_n, args.dim, derive_seed(ctx.seed, 1));
    let targets = CounterRng::new(derive_seed(ctx.seed, 2)).gaussian_vec(args.train_n);

    let h_train = gram(&spec, &x_train).map_err(|e| anyhow::anyhow!("{e}"))?;
    let h_cross = Matrix::from_fn(args.test_n, args.train_n, |t, i| {
        spec.eval(x_test.sample(t), x_train.sample(i))
    });
    let tau_grid: Vec<f64> = (0..=args.steps).map(|s| s as f64).collect();
    let (analytic_train, analytic_test) =
        analytic_trajectory(&h_train.matrix, &h_cross, &targets, args.lr, &tau_grid)
            .map_err(|e| anyhow::anyhow!("{e}"))?;

    let mut ensemble =
        SoftTreeEnsemble::new_random(args.m, args.depth, args.alpha, args.dim, derive_seed(ctx.seed, 3))
            .map_err(|e| anyhow::anyhow!("{e}"))?;
    let config = TrainingConfig {
        learning_rate: args.lr,
        steps: args.steps,
        shift_initial_outputs: !args.no_shift,
    };
    let result = train_gd(&mut ensemble, &x_train, &targets, &x_test, &config)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    if let Some(path) = &args.snapshot_out {
        ctx.write(path, &crate::io::ensemble_to_json(&ensemble))?;
    }

    let mut max_deviation = 0.0_f64;
    let mut output_min = f64::INFINITY;
    let mut output_max = f64::NEG_INFINITY;
    for step in 0..=args.steps {
        for (g, a) in result.gd_train[step].iter().zip(&analytic_train[step]) {
            max_deviation = max_deviation.max((g - a).abs());
            output_min = output_min.min(*a);
            output_max = output_max.max(*a);
        }
        for (g, a) in result.gd_test[step].iter().zip(&analytic_test[step]) {
            max_deviation = max_deviation.max((g - a).abs());
            output_min = output_min.min(*a);
            output_max = output_max.max(*a);
        }
    }
    println!("max |gd - analytic| = {max_deviation}");
    println!("analytic output range = {}", output_max - output_min);

    let config_json = json!({
        "command": "trajectory",
        "m": args.m,
        "depth": args.depth,
        "alpha": args.alpha,
        "lr": args.lr,
        "steps": args.steps,
        "train_n": args.train_n,
        "test_n": args.test_n,
        "dim": args.dim,
        "shift_initial_outputs": !args.no_shift,
        "seed": ctx.seed,
    });
    let path = ctx.output_path("trajectory");
    let content = match ctx.format {
        OutputFormat::Csv => {
            let mut out = String::new();
            writeln!(out, "# {config_json}").unwrap();
            writeln!(out, "step,point_id,split,gd_output,analytic_output").unwrap();
            for step in 0..=args.steps {
                for p in 0..args.train_n {
                    writeln!(
                        out,
                        "{step},{p},train,{},{}",
                        result.gd_train[step][p], analytic_train[step][p]
                    )
                    .unwrap();
                }
                for p in 0..args.test_n {
                    writeln!(
                        out,
                        "{step},{p},test,{},{}",
                        result.gd_test[step][p], analytic_test[step][p]
                    )
                    .unwrap();
                }
            }
            out
        }
        OutputFormat::Json => serde_json::to_string_pretty(&json!({
            "config": config_json,
            "max_deviation": max_deviation,
            "gd_train": result.gd_train,
            "gd_test": result.gd_test,
            "analytic_train": analytic_train,
            "analytic_test": analytic_test,
        }))?,
    };
    ctx.write(&path, &content)
}
