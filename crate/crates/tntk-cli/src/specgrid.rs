//! Kernel spec strings and grids.
//!
//! A single spec serializes as `family:key=value:...`:
//!
//! ```text
//! tntk:depth=3:alpha=2
//! mlp:layers=3:activation=relu
//! mlp:layers=2:activation=erf:alpha=2
//! rbf:gamma=0.5
//! ```
//!
//! A grid allows each numeric value to be a comma list (`alpha=0.5,1,2`)
//! or an inclusive integer range (`depth=1..29`), expanding to the cross
//! product in row-major order (later keys vary fastest). `gamma=default`
//! expands to the standard 30-point tuning grid. Several grids separated
//! by `;` form groups, each tuned independently by the benchmark.

use anyhow::{anyhow, bail, Context, Result};
use tntk::{Activation, KernelSpec};

/// The standard 30-value RBF bandwidth grid used for tuning.
pub const RBF_GAMMA_GRID: [f64; 30] = [
    0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7,
    0.8, 0.9, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 20.0, 30.0,
];

/// Canonical string form of a spec; `parse_spec` inverts it exactly.
pub fn spec_to_string(spec: &KernelSpec) -> String {
    match spec {
        KernelSpec::Tntk { depth, alpha } => format!("tntk:depth={depth}:alpha={alpha}"),
        KernelSpec::MlpNtk { hidden_layers, activation } => match activation {
            Activation::Relu => format!("mlp:layers={hidden_layers}:activation=relu"),
            Activation::ScaledErf { alpha } => {
                format!("mlp:layers={hidden_layers}:activation=erf:alpha={alpha}")
            }
        },
        KernelSpec::Rbf { gamma } => format!("rbf:gamma={gamma}"),
    }
}

pub fn parse_spec(text: &str) -> Result<KernelSpec> {
    let specs = parse_grid(text)?;
    if specs.len() != 1 {
        bail!("expected a single kernel spec, got a grid of {}", specs.len());
    }
    Ok(specs.into_iter().next().unwrap())
}

/// Expands one grid expression into its list of specs.
pub fn parse_grid(text: &str) -> Result<Vec<KernelSpec>> {
    let mut parts = text.trim().split(':');
    let family = parts.next().unwrap_or_default().to_ascii_lowercase();
    let mut keys: Vec<(String, String)> = Vec::new();
    for part in parts {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| anyhow!("malformed spec field {part:?} (expected key=value)"))?;
        keys.push((key.to_ascii_lowercase(), value.to_string()));
    }
    let lookup = |name: &str| keys.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str());
    let reject_unknown = |allowed: &[&str]| -> Result<()> {
        for (k, _) in &keys {
            if !allowed.contains(&k.as_str()) {
                bail!("unknown field {k:?} for kernel family {family:?}");
            }
        }
        Ok(())
    };

    let specs = match family.as_str() {
        "tntk" => {
            reject_unknown(&["depth", "alpha"])?;
            let depths =
                integer_values(lookup("depth").ok_or_else(|| anyhow!("tntk needs depth=..."))?)?;
            let alphas =
                real_values(lookup("alpha").ok_or_else(|| anyhow!("tntk needs alpha=..."))?)?;
            let mut out = Vec::new();
            for &depth in &depths {
                for &alpha in &alphas {
                    out.push(KernelSpec::Tntk { depth, alpha });
                }
            }
            out
        }
        "mlp" => {
            reject_unknown(&["layers", "activation", "alpha"])?;
            let layers =
                integer_values(lookup("layers").ok_or_else(|| anyhow!("mlp needs layers=..."))?)?;
            let activation = lookup("activation").unwrap_or("relu").to_ascii_lowercase();
            let mut out = Vec::new();
            match activation.as_str() {
                "relu" => {
                    if lookup("alpha").is_some() {
                        bail!("alpha only applies to the erf activation");
                    }
                    for &hidden_layers in &layers {
                        out.push(KernelSpec::MlpNtk { hidden_layers, activation: Activation::Relu });
                    }
                }
                "erf" => {
                    let alphas = real_values(
                        lookup("alpha").ok_or_else(|| anyhow!("erf activation needs alpha=..."))?,
                    )?;
                    for &hidden_layers in &layers {
                        for &alpha in &alphas {
                            out.push(KernelSpec::MlpNtk {
                                hidden_layers,
                                activation: Activation::ScaledErf { alpha },
                            });
                        }
                    }
                }
                other => bail!("unknown activation {other:?} (expected relu or erf)"),
            }
            out
        }
        "rbf" => {
            reject_unknown(&["gamma"])?;
            let gamma_text = lookup("gamma").ok_or_else(|| anyhow!("rbf needs gamma=..."))?;
            let gammas = if gamma_text.eq_ignore_ascii_case("default") {
                RBF_GAMMA_GRID.to_vec()
            } else {
                real_values(gamma_text)?
            };
            gammas.iter().map(|&gamma| KernelSpec::Rbf { gamma }).collect()
        }
        other => bail!("unknown kernel family {other:?} (expected tntk, mlp, or rbf)"),
    };
    for spec in &specs {
        spec.validate().map_err(|e| anyhow!("{e}"))?;
    }
    Ok(specs)
}

/// Parses `;`-separated grid groups, each with a display label.
pub fn parse_grid_groups(text: &str) -> Result<Vec<(String, Vec<KernelSpec>)>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|group| Ok((group.trim().to_string(), parse_grid(group)?)))
        .collect()
}

fn integer_values(text: &str) -> Result<Vec<usize>> {
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: usize = lo.trim().parse().context("range start")?;
        let hi: usize = hi.trim().parse().context("range end")?;
        if lo > hi {
            bail!("empty range {text:?}");
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|t| t.trim().parse::<usize>().with_context(|| format!("integer {t:?}")))
        .collect()
}

fn real_values(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("number {t:?}")))
        .collect()
}

/// Comma list of reals, also accepting `min:max:count` for a uniform grid.
pub fn real_list_or_linspace(text: &str) -> Result<Vec<f64>> {
    let colon_parts: Vec<&str> = text.split(':').collect();
    if colon_parts.len() == 3 {
        let lo: f64 = colon_parts[0].trim().parse().context("grid min")?;
        let hi: f64 = colon_parts[1].trim().parse().context("grid max")?;
        let count: usize = colon_parts[2].trim().parse().context("grid count")?;
        if count < 2 {
            bail!("grid needs at least two points");
        }
        return Ok((0..count)
            .map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64)
            .collect());
    }
    real_values(text)
}

/// Comma list of integers, also accepting `lo..hi` inclusive ranges.
pub fn integer_list(text: &str) -> Result<Vec<usize>> {
    integer_values(text)
}
