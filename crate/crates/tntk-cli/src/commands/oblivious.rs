//! `oblivious`: compares the empirical kernels of vanilla ensembles and
//! their weight-shared oblivious counterparts against the shared closed
//! form, over random unit input pairs.

use std::fmt::Write as _;

use anyhow::Result;
use clap::Args;
use serde_json::json;
use tntk::dataset::InputMatrix;
use tntk::kernel::{tntk_limit, KernelSpec};
use tntk::{CounterRng, SoftTreeEnsemble};

use super::{derive_seed, parse_m_list, OutputFormat, RunContext};
use crate::parallel::map_parallel;

#[derive(Debug, Args)]
pub struct ObliviousArgs {
    #[arg(long, default_value = "16,64,256,1024,4096")]
    pub m_list: String,
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    #[arg(long, default_value_t = 2.0)]
    pub alpha: f64,
    /// Number of random unit input pairs.
    #[arg(long, default_value_t = 50)]
    pub pairs: usize,
    #[arg(long, default_value_t = 5)]
    pub dim: usize,
    #[arg(long, default_value_t = 3)]
    pub trials: usize,
}

struct Row {
    m: usize,
    trial: usize,
    vanilla_vs_limit: f64,
    oblivious_vs_limit: f64,
    oblivious_vs_vanilla: f64,
}

/// Mean absolute kernel errors over the input pairs for one ensemble.
pub fn pair_errors(
    vanilla: &SoftTreeEnsemble,
    oblivious: &SoftTreeEnsemble,
    pairs: &[(Vec<f64>, Vec<f64>)],
    depth: usize,
    alpha: f64,
) -> (f64, f64, f64) {
    let mut v_err = 0.0;
    let mut o_err = 0.0;
    let mut vo_err = 0.0;
    for (xi, xj) in pairs {
        let x = InputMatrix::from_samples(&[xi.clone(), xj.clone()], Vec::new()).expect("pair");
        let limit = tntk_limit(xi, xj, depth, alpha);
        let v = vanilla.empirical_ntk(&x, 0).expect("vanilla kernel").matrix.get(0, 1);
        let o = oblivious.empirical_ntk(&x, 0).expect("oblivious kernel").matrix.get(0, 1);
        v_err += (v - limit).abs();
        o_err += (o - limit).abs();
        vo_err += (o - v).abs();
    }
    let count = pairs.len() as f64;
    (v_err / count, o_err / count, vo_err / count)
}

pub fn run(args: &ObliviousArgs, ctx: &RunContext) -> Result<()> {
    let m_list = parse_m_list(&args.m_list)?;
    KernelSpec::Tntk { depth: args.depth, alpha: args.alpha }
        .validate()
        .map_err(|e| anyhow::anyhow!("{e}"))?;

    let mut pair_rng = CounterRng::new(derive_seed(ctx.seed, 0));
    let pairs: Vec<(Vec<f64>, Vec<f64>)> = (0..args.pairs)
        .map(|_| (pair_rng.unit_vector(args.dim), pair_rng.unit_vector(args.dim)))
        .collect();

    let tasks: Vec<(usize, usize)> = m_list
        .iter()
        .flat_map(|&m| (0..args.trials).map(move |trial| (m, trial)))
        .collect();
    let base_seed = ctx.seed;
    let depth = args.depth;
    let alpha = args.alpha;
    let dim = args.dim;
    let rows: Vec<Row> = map_parallel(tasks, ctx.threads, |(m, trial)| {
        let seed = derive_seed(base_seed, 1 + (m as u64) * 1000 + trial as u64);
        let vanilla = SoftTreeEnsemble::new_random(m, depth, alpha, dim, seed).expect("ensemble");
        let oblivious = vanilla.make_oblivious().expect("oblivious");
        let (vanilla_vs_limit, oblivious_vs_limit, oblivious_vs_vanilla) =
            pair_errors(&vanilla, &oblivious, &pairs, depth, alpha);
        Row { m, trial, vanilla_vs_limit, oblivious_vs_limit, oblivious_vs_vanilla }
    });

    for &m in &m_list {
        let subset: Vec<&Row> = rows.iter().filter(|r| r.m == m).collect();
        let mean = |f: fn(&Row) -> f64| {
            subset.iter().map(|r| f(r)).sum::<f64>() / subset.len() as f64
        };
        println!(
            "M={m}: |vanilla - limit| = {:.6}, |oblivious - limit| = {:.6}, |oblivious - vanilla| = {:.6}",
            mean(|r| r.vanilla_vs_limit),
            mean(|r| r.oblivious_vs_limit),
            mean(|r| r.oblivious_vs_vanilla)
        );
    }

    let config_json = json!({
        "command": "oblivious",
        "m_list": m_list,
        "depth": depth,
        "alpha": alpha,
        "pairs": args.pairs,
        "dim": dim,
        "trials": args.trials,
        "seed": ctx.seed,
    });
    let path = ctx.output_path("oblivious");
    let content = match ctx.format {
        OutputFormat::Csv => {
            let mut out = String::new();
            writeln!(out, "# {config_json}").unwrap();
            writeln!(out, "m,trial,vanilla_vs_limit,oblivious_vs_limit,oblivious_vs_vanilla")
                .unwrap();
            for r in &rows {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.m, r.trial, r.vanilla_vs_limit, r.oblivious_vs_limit, r.oblivious_vs_vanilla
                )
                .unwrap();
            }
            out
        }
        OutputFormat::Json => serde_json::to_string_pretty(&json!({
            "config": config_json,
            "rows": rows.iter().map(|r| json!({
                "m": r.m,
                "trial": r.trial,
                "vanilla_vs_limit": r.vanilla_vs_limit,
                "oblivious_vs_limit": r.oblivious_vs_limit,
                "oblivious_vs_vanilla": r.oblivious_vs_vanilla,
            })).collect::<Vec<_>>(),
        }))?,
    };
    ctx.write(&path, &content)
}
