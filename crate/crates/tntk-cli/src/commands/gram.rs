//! `gram`: limiting Gram matrix of a kernel over a dataset file, with the
//! extreme eigenvalues printed for a positive-definiteness check.

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::{Args, ValueEnum};
use serde_json::json;
use tntk::dataset::{preprocess_with, FeatureScaling, PreprocessOptions};
use tntk::kernel::{gram, KernelSpec};
use tntk::linalg::eigh;
use tntk::Activation;

use super::{OutputFormat, RunContext};
use crate::io;
use crate::specgrid::spec_to_string;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelFamily {
    Tntk,
    Mlp,
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ActivationArg {
    Relu,
    Erf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScalingArg {
    /// Per-feature standardization, then bias, then unit norm.
    Standardize,
    /// Per-sample unit norm, then bias, then unit norm again.
    Unit,
    /// Bias and unit norm only.
    None,
    /// Use the file's vectors untouched.
    Raw,
}

#[derive(Debug, Args)]
pub struct GramArgs {
    #[arg(long, value_enum)]
    pub kernel: KernelFamily,
    /// Tree depth (tntk only).
    #[arg(long)]
    pub depth: Option<usize>,
    /// Split hardness (tntk) or erf-activation hardness (mlp).
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Hidden layer count (mlp only).
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long, value_enum, default_value = "relu")]
    pub activation: ActivationArg,
    /// RBF bandwidth (rbf only).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Dataset file (whitespace- or comma-delimited, label column last
    /// unless --label-column is given).
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub label_column: Option<usize>,
    #[arg(long, value_enum, default_value = "standardize")]
    pub scaling: ScalingArg,
    /// Bias coordinate value appended during preprocessing.
    #[arg(long, default_value_t = 1.0)]
    pub bias: f64,
}

impl GramArgs {
    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        let spec = match self.kernel {
            KernelFamily::Tntk => {
                if self.layers.is_some() || self.gamma.is_some() {
                    bail!("--layers/--gamma do not apply to the tntk kernel");
                }
                let (Some(depth), Some(alpha)) = (self.depth, self.alpha) else {
                    bail!("tntk kernel needs --depth and --alpha");
                };
                KernelSpec::Tntk { depth, alpha }
            }
            KernelFamily::Mlp => {
                if self.depth.is_some() || self.gamma.is_some() {
                    bail!("--depth/--gamma do not apply to the mlp kernel");
                }
                let Some(hidden_layers) = self.layers else {
                    bail!("mlp kernel needs --layers");
                };
                let activation = match self.activation {
                    ActivationArg::Relu => {
                        if self.alpha.is_some() {
                            bail!("--alpha only applies to the erf activation");
                        }
                        Activation::Relu
                    }
                    ActivationArg::Erf => {
                        let Some(alpha) = self.alpha else {
                            bail!("erf activation needs --alpha");
                        };
                        Activation::ScaledErf { alpha }
                    }
                };
                KernelSpec::MlpNtk { hidden_layers, activation }
            }
            KernelFamily::Rbf => {
                if self.depth.is_some() || self.alpha.is_some() || self.layers.is_some() {
                    bail!("--depth/--alpha/--layers do not apply to the rbf kernel");
                }
                let Some(gamma) = self.gamma else {
                    bail!("rbf kernel needs --gamma");
                };
                KernelSpec::Rbf { gamma }
            }
        };
        spec.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
        Ok(spec)
    }
}

pub fn scaling_options(scaling: ScalingArg, bias: f64) -> Option<PreprocessOptions> {
    match scaling {
        ScalingArg::Standardize => {
            Some(PreprocessOptions { scaling: FeatureScaling::Standardize, bias_value: bias })
        }
        ScalingArg::Unit => {
            Some(PreprocessOptions { scaling: FeatureScaling::UnitNorm, bias_value: bias })
        }
        ScalingArg::None => {
            Some(PreprocessOptions { scaling: FeatureScaling::None, bias_value: bias })
        }
        ScalingArg::Raw => None,
    }
}

pub fn run(args: &GramArgs, ctx: &RunContext) -> Result<()> {
    let spec = args.kernel_spec()?;
    let raw = io::load_dataset(
        &args.input,
        io::LoadSchema { delimiter: None, label_column: args.label_column },
    )?;
    let x = match scaling_options(args.scaling, args.bias) {
        Some(options) => {
            let (x, report) = preprocess_with(&raw, options).map_err(|e| anyhow::anyhow!("{e}"))?;
            for j in &report.dropped_features {
                eprintln!("warning: dropped zero-variance feature {j}");
            }
            if report.duplicate_pairs > 0 {
                eprintln!(
                    "warning: {} duplicate sample pair(s); kernel is only positive semi-definite",
                    report.duplicate_pairs
                );
            }
            x
        }
        None => raw,
    };

    let gram_matrix = gram(&spec, &x).map_err(|e| anyhow::anyhow!("{e}"))?;
    let eig = eigh(&gram_matrix.matrix).map_err(|e| anyhow::anyhow!("{e}"))?;
    println!("n={}", x.len());
    println!("lambda_min={}", eig.min_eigenvalue());
    println!("lambda_max={}", eig.max_eigenvalue());

    let config = json!({
        "command": "gram",
        "spec": spec_to_string(&spec),
        "input": args.input.display().to_string(),
        "scaling": format!("{:?}", args.scaling).to_lowercase(),
        "bias": args.bias,
        "seed": ctx.seed,
    });
    let path = ctx.output_path("gram");
    let content = match ctx.format {
        OutputFormat::Csv => io::gram_to_csv(&gram_matrix, &config),
        OutputFormat::Json => io::gram_to_json(&gram_matrix, &config),
    };
    ctx.write(&path, &content)
}
