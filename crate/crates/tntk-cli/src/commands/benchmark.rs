//! `benchmark`: the classification protocol over one dataset file or a
//! directory of them. Each `;`-separated kernel group is tuned on the
//! class-balanced inner splits and scored by 4-fold cross validation;
//! the summary table carries one accuracy column per group, matching the
//! per-dataset result tables (dataset, size, one column per tuned
//! family/hardness, plus any baselines supplied).

use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde_json::json;
use tntk::dataset::{
    make_cv_plan, preprocess_with, tune_and_evaluate, InputMatrix, TuneOptions,
};
use tntk::kernel::KernelSpec;
use tntk::regression::{classify, krr_fit, one_hot};

use super::gram::{scaling_options, ScalingArg};
use super::{OutputFormat, RunContext};
use crate::io::{load_dataset, LoadSchema};
use crate::parallel::map_parallel;
use crate::specgrid::{parse_grid_groups, spec_to_string};

/// Ridge strength of the protocol; fixed, never tuned.
pub const RIDGE: f64 = 1e-8;

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    /// Dataset file or a directory of dataset files.
    #[arg(long)]
    pub data: PathBuf,
    /// Semicolon-separated kernel grids; each grid is tuned internally
    /// and reported as one column.
    #[arg(
        long,
        default_value = "tntk:depth=1..29:alpha=0.5,1,2,4,8,16,32,64; mlp:layers=1..29:activation=relu; rbf:gamma=default"
    )]
    pub kernels: String,
    /// Feature scaling before the bias/unit-norm stage. Corpus-style
    /// files are already distribution-scaled, so the default is the
    /// per-sample unit norm.
    #[arg(long, value_enum, default_value = "unit")]
    pub scaling: ScalingArg,
    #[arg(long, default_value_t = 1.0)]
    pub bias: f64,
    /// Encode one-hot targets as -1/+1 instead of 0/1.
    #[arg(long)]
    pub signed_targets: bool,
    #[arg(long)]
    pub label_column: Option<usize>,
    /// Also emit the per-spec plain 4-fold accuracy curve of every group
    /// (no tuning), for depth-dependence plots.
    #[arg(long)]
    pub per_depth: bool,
}

fn dataset_paths(root: &PathBuf) -> Result<Vec<PathBuf>> {
    if root.is_dir() {
        let mut paths: Vec<PathBuf> = std::fs::read_dir(root)
            .with_context(|| format!("reading directory {}", root.display()))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| {
                p.is_file()
                    && matches!(
                        p.extension().and_then(|e| e.to_str()),
                        Some("csv" | "dat" | "data" | "txt")
                    )
            })
            .collect();
        paths.sort();
        if paths.is_empty() {
            anyhow::bail!("no dataset files (*.csv, *.dat, *.data, *.txt) in {}", root.display());
        }
        Ok(paths)
    } else {
        Ok(vec![root.clone()])
    }
}

struct GroupResult {
    label: String,
    mean_accuracy_pct: f64,
    /// Per outer fold: the validation-selected spec and its held-out
    /// accuracy.
    per_fold: Vec<(String, f64)>,
    warnings: Vec<String>,
}

struct DatasetResult {
    name: String,
    size: usize,
    groups: Vec<GroupResult>,
    curves: Vec<(String, f64)>,
}

fn plain_cv_accuracy(
    x: &InputMatrix,
    spec: &KernelSpec,
    plan: &tntk::dataset::CvPlan,
    signed: bool,
) -> Result<f64> {
    let classes = x.class_count();
    let mut total = 0.0;
    for fold in &plan.folds {
        let pool: Vec<usize> = (0..x.len()).filter(|i| !fold.contains(i)).collect();
        let train = x.subset(&pool);
        let test = x.subset(fold);
        let targets = one_hot(train.labels(), classes, signed);
        let model =
            krr_fit(spec.clone(), train, &targets, RIDGE).map_err(|e| anyhow::anyhow!("{e}"))?;
        let predicted = classify(&model, &test).map_err(|e| anyhow::anyhow!("{e}"))?;
        let hits = predicted.iter().zip(test.labels()).filter(|(p, l)| p == l).count();
        total += hits as f64 / test.len() as f64;
    }
    Ok(100.0 * total / plan.folds.len() as f64)
}

pub fn run(args: &BenchmarkArgs, ctx: &RunContext) -> Result<()> {
    let groups = parse_grid_groups(&args.kernels)?;
    if groups.is_empty() {
        anyhow::bail!("--kernels expanded to no groups");
    }
    let options = scaling_options(args.scaling, args.bias);
    let paths = dataset_paths(&args.data)?;
    let tune_options = TuneOptions { lambda: RIDGE, signed_targets: args.signed_targets };

    let mut results: Vec<DatasetResult> = Vec::new();
    for path in &paths {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let raw = load_dataset(
            path,
            LoadSchema { delimiter: None, label_column: args.label_column },
        )?;
        let x = match options {
            Some(options) => {
                let (x, report) =
                    preprocess_with(&raw, options).map_err(|e| anyhow::anyhow!("{e}"))?;
                for j in &report.dropped_features {
                    eprintln!("warning: {name}: dropped zero-variance feature {j}");
                }
                if report.duplicate_pairs > 0 {
                    eprintln!("warning: {name}: {} duplicate sample pair(s)", report.duplicate_pairs);
                }
                x
            }
            None => raw,
        };
        let plan = make_cv_plan(&x, ctx.seed).map_err(|e| anyhow::anyhow!("{e}"))?;
        for w in &plan.warnings {
            eprintln!("warning: {name}: {w}");
        }

        let group_results: Vec<GroupResult> =
            map_parallel(groups.clone(), ctx.threads, |(label, grid)| {
                let outcome = tune_and_evaluate(&x, &grid, &plan, tune_options)
                    .map_err(|e| anyhow::anyhow!("{e}"))
                    .expect("tuned evaluation");
                GroupResult {
                    label,
                    mean_accuracy_pct: outcome.mean_accuracy_pct,
                    per_fold: outcome
                        .per_fold
                        .iter()
                        .map(|f| (spec_to_string(&grid[f.selected]), f.test_accuracy))
                        .collect(),
                    warnings: outcome.warnings,
                }
            });
        for g in &group_results {
            for w in &g.warnings {
                eprintln!("warning: {name}: {w}");
            }
            println!("{name} ({} samples): {} -> {:.3}%", x.len(), g.label, g.mean_accuracy_pct);
        }

        let mut curves = Vec::new();
        if args.per_depth {
            let specs: Vec<KernelSpec> =
                groups.iter().flat_map(|(_, grid)| grid.iter().cloned()).collect();
            let accuracies = map_parallel(specs.clone(), ctx.threads, |spec| {
                plain_cv_accuracy(&x, &spec, &plan, args.signed_targets)
                    .expect("per-spec evaluation")
            });
            curves = specs
                .iter()
                .map(spec_to_string)
                .zip(accuracies)
                .collect();
        }

        results.push(DatasetResult { name, size: x.len(), groups: group_results, curves });
    }

    let config_json = json!({
        "command": "benchmark",
        "data": args.data.display().to_string(),
        "kernels": groups.iter().map(|(label, grid)| json!({
            "label": label, "specs": grid.len(),
        })).collect::<Vec<_>>(),
        "scaling": format!("{:?}", args.scaling).to_lowercase(),
        "bias": args.bias,
        "signed_targets": args.signed_targets,
        "ridge": RIDGE,
        "seed": ctx.seed,
    });
    let path = ctx.output_path("benchmark");
    let content = match ctx.format {
        OutputFormat::Csv => {
            let mut out = String::new();
            writeln!(out, "# {config_json}").unwrap();
            let labels: Vec<String> =
                groups.iter().map(|(label, _)| label.replace(',', " ")).collect();
            writeln!(out, "dataset,size,{}", labels.join(",")).unwrap();
            for r in &results {
                let cells: Vec<String> =
                    r.groups.iter().map(|g| format!("{:.3}", g.mean_accuracy_pct)).collect();
                writeln!(out, "{},{},{}", r.name, r.size, cells.join(",")).unwrap();
            }
            if args.per_depth {
                writeln!(out, "curve_dataset,spec,accuracy").unwrap();
                for r in &results {
                    for (spec, accuracy) in &r.curves {
                        writeln!(out, "{},{spec},{accuracy}", r.name).unwrap();
                    }
                }
            }
            out
        }
        OutputFormat::Json => serde_json::to_string_pretty(&json!({
            "config": config_json,
            "datasets": results.iter().map(|r| json!({
                "dataset": r.name,
                "size": r.size,
                "groups": r.groups.iter().map(|g| json!({
                    "grid": g.label,
                    "mean_accuracy": g.mean_accuracy_pct,
                    "per_fold": g.per_fold.iter().map(|(spec, accuracy)| json!({
                        "best_spec": spec, "test_accuracy": accuracy,
                    })).collect::<Vec<_>>(),
                })).collect::<Vec<_>>(),
                "per_spec_curve": r.curves.iter().map(|(spec, accuracy)| json!({
                    "spec": spec, "accuracy": accuracy,
                })).collect::<Vec<_>>(),
            })).collect::<Vec<_>>(),
        }))?,
    };
    ctx.write(&path, &content)
}
