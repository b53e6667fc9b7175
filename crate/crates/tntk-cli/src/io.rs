//! File formats: corpus-style dataset files, Gram matrices (CSV and
//! JSON), training trajectories, drift tables, and ensemble snapshots.
//!
//! Every file written by a command starts with one `# {...}` JSON header
//! line carrying the resolved configuration, so a result file is
//! self-describing. Floats are printed in shortest round-trip form, which
//! makes write/read cycles bit-identical.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};
use tntk::dataset::InputMatrix;
use tntk::kernel::{GramMatrix, Provenance};
use tntk::linalg::SymmetricMatrix;
use tntk::{SoftTreeEnsemble, TreeStructure};

use crate::specgrid::{parse_spec, spec_to_string};

/// Dataset parsing settings: the corpus layout is whitespace-delimited
/// with the class label in the last column, but both knobs are
/// configurable.
#[derive(Debug, Clone, Copy, Default)]
pub struct LoadSchema {
    /// Field delimiter; `None` autodetects (comma if the first data line
    /// contains one, otherwise any whitespace).
    pub delimiter: Option<char>,
    /// Zero-based label column; `None` means the last column.
    pub label_column: Option<usize>,
}

/// Reads a delimited text dataset. Labels must be integral; they are
/// remapped onto `0..C` in sorted order of the distinct raw values.
pub fn load_dataset(path: &Path, schema: LoadSchema) -> Result<InputMatrix> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading dataset {}", path.display()))?;
    let mut samples: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels: Vec<i64> = Vec::new();
    let mut width = None;
    let mut delimiter = schema.delimiter;

    for (line_index, line) in text.lines().enumerate() {
        let line_number = line_index + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if delimiter.is_none() && trimmed.contains(',') {
            delimiter = Some(',');
        }
        let fields: Vec<&str> = match delimiter {
            Some(d) => trimmed.split(d).map(str::trim).filter(|t| !t.is_empty()).collect(),
            None => trimmed.split_whitespace().collect(),
        };
        if fields.len() < 2 {
            bail!("line {line_number}: need at least one feature and a label");
        }
        match width {
            None => width = Some(fields.len()),
            Some(w) if w != fields.len() => {
                bail!("line {line_number}: expected {w} columns, found {}", fields.len())
            }
            _ => {}
        }
        let label_column = schema.label_column.unwrap_or(fields.len() - 1);
        if label_column >= fields.len() {
            bail!("line {line_number}: label column {label_column} out of range");
        }
        let mut features = Vec::with_capacity(fields.len() - 1);
        let mut label = None;
        for (column, field) in fields.iter().enumerate() {
            let value: f64 = field
                .parse()
                .map_err(|_| anyhow!("line {line_number}: malformed number {field:?}"))?;
            if column == label_column {
                if (value - value.round()).abs() > 1e-9 {
                    bail!("line {line_number}: non-integer label {field:?}");
                }
                label = Some(value.round() as i64);
            } else {
                features.push(value);
            }
        }
        samples.push(features);
        raw_labels.push(label.unwrap());
    }
    if samples.is_empty() {
        bail!("dataset {} has no data rows", path.display());
    }

    let mut distinct: Vec<i64> = raw_labels.clone();
    distinct.sort_unstable();
    distinct.dedup();
    let labels: Vec<usize> =
        raw_labels.iter().map(|l| distinct.binary_search(l).unwrap()).collect();
    InputMatrix::from_samples(&samples, labels).map_err(|e| anyhow!("{e}"))
}

/// Writes a dataset in the corpus layout (whitespace-delimited, label
/// last) with shortest round-trip float formatting.
pub fn save_dataset(path: &Path, x: &InputMatrix) -> Result<()> {
    let mut out = String::new();
    for (i, sample) in x.samples().enumerate() {
        for v in sample {
            write!(out, "{v} ").unwrap();
        }
        let label = x.labels().get(i).copied().unwrap_or(0);
        writeln!(out, "{label}").unwrap();
    }
    std::fs::write(path, out).with_context(|| format!("writing dataset {}", path.display()))
}

fn provenance_to_string(p: &Provenance) -> String {
    match p {
        Provenance::Limiting => "limiting".to_string(),
        Provenance::Empirical { trees, seed, step } => {
            format!("empirical:trees={trees}:seed={seed}:step={step}")
        }
    }
}

fn parse_provenance(text: &str) -> Result<Provenance> {
    if text == "limiting" {
        return Ok(Provenance::Limiting);
    }
    let mut trees = None;
    let mut seed = None;
    let mut step = None;
    let mut parts = text.split(':');
    if parts.next() != Some("empirical") {
        bail!("unknown provenance {text:?}");
    }
    for part in parts {
        match part.split_once('=') {
            Some(("trees", v)) => trees = Some(v.parse()?),
            Some(("seed", v)) => seed = Some(v.parse()?),
            Some(("step", v)) => step = Some(v.parse()?),
            _ => bail!("unknown provenance field {part:?}"),
        }
    }
    Ok(Provenance::Empirical {
        trees: trees.ok_or_else(|| anyhow!("provenance missing trees"))?,
        seed: seed.ok_or_else(|| anyhow!("provenance missing seed"))?,
        step: step.ok_or_else(|| anyhow!("provenance missing step"))?,
    })
}

/// Gram matrix as CSV: the config header line, `spec` and `provenance`
/// and `n` key rows, then the dense rows in row-major order.
pub fn gram_to_csv(gram: &GramMatrix, config: &serde_json::Value) -> String {
    let mut out = String::new();
    writeln!(out, "# {config}").unwrap();
    writeln!(out, "spec,{}", spec_to_string(&gram.spec)).unwrap();
    writeln!(out, "provenance,{}", provenance_to_string(&gram.provenance)).unwrap();
    let n = gram.matrix.dim();
    writeln!(out, "n,{n}").unwrap();
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| format!("{}", gram.matrix.get(i, j))).collect();
        writeln!(out, "{}", row.join(",")).unwrap();
    }
    out
}

pub fn gram_from_csv(text: &str) -> Result<GramMatrix> {
    let mut lines = text.lines().filter(|l| !l.trim_start().starts_with('#'));
    let spec_line = lines.next().ok_or_else(|| anyhow!("missing spec line"))?;
    let spec = parse_spec(
        spec_line.strip_prefix("spec,").ok_or_else(|| anyhow!("expected spec,... line"))?,
    )?;
    let prov_line = lines.next().ok_or_else(|| anyhow!("missing provenance line"))?;
    let provenance = parse_provenance(
        prov_line.strip_prefix("provenance,").ok_or_else(|| anyhow!("expected provenance,..."))?,
    )?;
    let n_line = lines.next().ok_or_else(|| anyhow!("missing n line"))?;
    let n: usize =
        n_line.strip_prefix("n,").ok_or_else(|| anyhow!("expected n,..."))?.trim().parse()?;
    let mut matrix = SymmetricMatrix::zeros(n);
    for i in 0..n {
        let row = lines.next().ok_or_else(|| anyhow!("missing matrix row {i}"))?;
        let values: Vec<f64> = row
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|e| anyhow!("row {i}: {e}")))
            .collect::<Result<_>>()?;
        if values.len() != n {
            bail!("row {i}: expected {n} values, found {}", values.len());
        }
        for (j, v) in values.iter().enumerate() {
            if j >= i {
                matrix.set_sym(i, j, *v);
            }
        }
    }
    Ok(GramMatrix { matrix, spec, provenance })
}

#[derive(Serialize, Deserialize)]
struct GramJson {
    config: serde_json::Value,
    spec: String,
    provenance: String,
    n: usize,
    entries: Vec<Vec<f64>>,
}

pub fn gram_to_json(gram: &GramMatrix, config: &serde_json::Value) -> String {
    let n = gram.matrix.dim();
    let body = GramJson {
        config: config.clone(),
        spec: spec_to_string(&gram.spec),
        provenance: provenance_to_string(&gram.provenance),
        n,
        entries: (0..n).map(|i| (0..n).map(|j| gram.matrix.get(i, j)).collect()).collect(),
    };
    serde_json::to_string_pretty(&body).expect("gram serialization")
}

pub fn gram_from_json(text: &str) -> Result<GramMatrix> {
    let body: GramJson = serde_json::from_str(text)?;
    if body.entries.len() != body.n {
        bail!("entry rows {} disagree with n {}", body.entries.len(), body.n);
    }
    let mut matrix = SymmetricMatrix::zeros(body.n);
    for (i, row) in body.entries.iter().enumerate() {
        if row.len() != body.n {
            bail!("row {i}: expected {} values", body.n);
        }
        for (j, v) in row.iter().enumerate() {
            if j >= i {
                matrix.set_sym(i, j, *v);
            }
        }
    }
    Ok(GramMatrix {
        matrix,
        spec: parse_spec(&body.spec)?,
        provenance: parse_provenance(&body.provenance)?,
    })
}

#[derive(Serialize, Deserialize)]
struct EnsembleSnapshot {
    trees: usize,
    depth: usize,
    alpha: f64,
    structure: String,
    features: usize,
    seed: u64,
    weights: Vec<f64>,
    leaves: Vec<f64>,
}

/// Serializes an ensemble for exact experiment resumption.
pub fn ensemble_to_json(ensemble: &SoftTreeEnsemble) -> String {
    let snapshot = EnsembleSnapshot {
        trees: ensemble.trees(),
        depth: ensemble.topology().depth(),
        alpha: ensemble.alpha(),
        structure: match ensemble.structure() {
            TreeStructure::Vanilla => "vanilla".to_string(),
            TreeStructure::Oblivious => "oblivious".to_string(),
        },
        features: ensemble.features(),
        seed: ensemble.seed(),
        weights: ensemble.weights().to_vec(),
        leaves: ensemble.leaves().to_vec(),
    };
    serde_json::to_string(&snapshot).expect("ensemble serialization")
}

pub fn ensemble_from_json(text: &str) -> Result<SoftTreeEnsemble> {
    let snapshot: EnsembleSnapshot = serde_json::from_str(text)?;
    let structure = match snapshot.structure.as_str() {
        "vanilla" => TreeStructure::Vanilla,
        "oblivious" => TreeStructure::Oblivious,
        other => bail!("unknown structure {other:?}"),
    };
    SoftTreeEnsemble::from_parts(
        snapshot.trees,
        snapshot.depth,
        snapshot.alpha,
        structure,
        snapshot.features,
        snapshot.seed,
        snapshot.weights,
        snapshot.leaves,
    )
    .map_err(|e| anyhow!("{e}"))
}

/// Writes a string to `path`, creating parent directories as needed.
pub fn write_output(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}
