//! `profile`: normalized curves of the decision-function pair
//! expectations and of the limiting kernel over the input inner product,
//! for plotting the hardness dependence and the deep-tree degeneracy.
//! All curves are scaled so their value at inner product 1 is 1.

use std::fmt::Write as _;

use anyhow::Result;
use clap::Args;
use serde_json::json;
use tntk::kernel::{decision_pair_expect, decision_slope_pair_expect, tntk_limit_unit};

use super::{OutputFormat, RunContext};
use crate::specgrid::{integer_list, real_list_or_linspace};

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[arg(long, default_value = "0.5,1,2,4,8,16,32,64")]
    pub alpha_list: String,
    #[arg(long, default_value = "1,3,7,15,29")]
    pub depth_list: String,
    /// Inner-product grid: comma list or min:max:count.
    #[arg(long, default_value = "-1:1:81", allow_hyphen_values = true)]
    pub rho_grid: String,
}

pub fn run(args: &ProfileArgs, ctx: &RunContext) -> Result<()> {
    let alphas = real_list_or_linspace(&args.alpha_list)?;
    let depths = integer_list(&args.depth_list)?;
    let rho_grid = real_list_or_linspace(&args.rho_grid)?;
    if rho_grid.iter().any(|r| !(-1.0..=1.0).contains(r)) {
        anyhow::bail!("rho grid must lie in [-1, 1]");
    }

    // (quantity, alpha, depth, rho, normalized value)
    let mut rows: Vec<(&'static str, f64, Option<usize>, f64, f64)> = Vec::new();
    for &alpha in &alphas {
        let t_at_one = decision_pair_expect(1.0, 1.0, 1.0, alpha);
        let t_dot_at_one = decision_slope_pair_expect(1.0, 1.0, 1.0, alpha);
        for &rho in &rho_grid {
            rows.push((
                "t",
                alpha,
                None,
                rho,
                decision_pair_expect(rho, 1.0, 1.0, alpha) / t_at_one,
            ));
            rows.push((
                "t_dot",
                alpha,
                None,
                rho,
                decision_slope_pair_expect(rho, 1.0, 1.0, alpha) / t_dot_at_one,
            ));
        }
        for &depth in &depths {
            let theta_at_one = tntk_limit_unit(1.0, depth, alpha);
            for &rho in &rho_grid {
                rows.push((
                    "theta",
                    alpha,
                    Some(depth),
                    rho,
                    tntk_limit_unit(rho, depth, alpha) / theta_at_one,
                ));
            }
        }
    }

    let config_json = json!({
        "command": "profile",
        "alpha_list": alphas,
        "depth_list": depths,
        "rho_points": rho_grid.len(),
        "seed": ctx.seed,
    });
    let path = ctx.output_path("profile");
    let content = match ctx.format {
        OutputFormat::Csv => {
            let mut out = String::new();
            writeln!(out, "# {config_json}").unwrap();
            writeln!(out, "quantity,alpha,depth,rho,value").unwrap();
            for (quantity, alpha, depth, rho, value) in &rows {
                let depth_text = depth.map(|d| d.to_string()).unwrap_or_default();
                writeln!(out, "{quantity},{alpha},{depth_text},{rho},{value}").unwrap();
            }
            out
        }
        OutputFormat::Json => serde_json::to_string_pretty(&json!({
            "config": config_json,
            "rows": rows.iter().map(|(quantity, alpha, depth, rho, value)| json!({
                "quantity": quantity, "alpha": alpha, "depth": depth, "rho": rho, "value": value,
            })).collect::<Vec<_>>(),
        }))?,
    };
    ctx.write(&path, &content)
}
