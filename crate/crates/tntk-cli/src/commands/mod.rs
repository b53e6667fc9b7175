//! Command implementations. Every command fully resolves its
//! configuration (flags + seed), stamps it into the output file's header
//! line, and derives all randomness from the seed, so identical
//! invocations produce identical numeric outputs.

pub mod benchmark;
pub mod converge;
pub mod drift;
pub mod gram;
pub mod oblivious;
pub mod profile;
pub mod timing;
pub mod trajectory;

use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::ValueEnum;
use tntk::dataset::InputMatrix;
use tntk::CounterRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Json,
}

/// Global run settings shared by every command.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub format: OutputFormat,
}

impl RunContext {
    pub fn output_path(&self, default_name: &str) -> PathBuf {
        match &self.out {
            Some(path) => path.clone(),
            None => {
                let ext = match self.format {
                    OutputFormat::Csv => "csv",
                    OutputFormat::Json => "json",
                };
                PathBuf::from(format!("{default_name}.{ext}"))
            }
        }
    }

    pub fn write(&self, path: &Path, content: &str) -> Result<()> {
        crate::io::write_output(path, content)?;
        println!("wrote {}", path.display());
        Ok(())
    }
}

/// Stable per-task seed derivation from the run seed.
pub fn derive_seed(base: u64, task: u64) -> u64 {
    CounterRng::new(base).split(task).next_u64()
}

/// `n` random unit-norm samples of the given dimension.
pub fn random_unit_inputs(n: usize, dim: usize, seed: u64) -> InputMatrix {
    let mut rng = CounterRng::new(seed);
    let samples: Vec<Vec<f64>> = (0..n).map(|_| rng.unit_vector(dim)).collect();
    InputMatrix::from_samples(&samples, Vec::new()).expect("nonempty unit inputs")
}

/// Comma list of ensemble sizes.
pub fn parse_m_list(text: &str) -> Result<Vec<usize>> {
    crate::specgrid::integer_list(text)
}
