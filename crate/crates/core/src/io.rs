//! Generator and state files, built-in generators, atomic output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::balance::carlen_maas_counterexample;
use crate::error::{LelError, Result};
use crate::generator::{build_gns, depolarizing, qubit_xz, Generator, GnsGenerator, JumpTerm, RawGenerator};
use crate::matcore::{matrices_from_csv, matrix_from_rows, CMatrix, DensityMatrix};

/// A loaded generator: either validated GNS data or a bare superoperator.
pub enum LoadedGenerator {
    Gns(GnsGenerator),
    Raw(RawGenerator),
}

impl LoadedGenerator {
    pub fn as_dyn(&self) -> &dyn Generator {
        match self {
            LoadedGenerator::Gns(g) => g,
            LoadedGenerator::Raw(g) => g,
        }
    }

    pub fn gns(&self) -> Option<&GnsGenerator> {
        match self {
            LoadedGenerator::Gns(g) => Some(g),
            LoadedGenerator::Raw(_) => None,
        }
    }

    pub fn require_gns(&self) -> Result<&GnsGenerator> {
        self.gns().ok_or_else(|| {
            LelError::validation(
                "GNS generator",
                None,
                format!("'{}' is not given in jump-term form", self.as_dyn().label()),
            )
        })
    }
}

#[derive(Debug, Deserialize, Serialize)]
struct TermFile {
    #[serde(rename = "V")]
    v: Value,
    omega: f64,
    weight: f64,
}

#[derive(Debug, Deserialize, Serialize)]
struct GeneratorFile {
    sigma: Value,
    terms: Vec<TermFile>,
    #[serde(default)]
    label: Option<String>,
}

fn rows_of(v: &Value, what: &str) -> Result<Vec<Vec<f64>>> {
    let rows = v
        .as_array()
        .ok_or_else(|| LelError::Parse(format!("{what}: expected a list of rows")))?;
    rows.iter()
        .map(|r| {
            r.as_array()
                .ok_or_else(|| LelError::Parse(format!("{what}: row is not a list")))?
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| LelError::Parse(format!("{what}: non-numeric entry {x}"))))
                .collect()
        })
        .collect()
}

/// Inline rows of 2n interleaved reals, or "file.csv" / "file.csv#name" relative to `base`.
fn matrix_value(v: &Value, base: &Path, what: &str) -> Result<CMatrix> {
    match v {
        Value::String(s) => {
            let (file, name) = match s.split_once('#') {
                Some((f, n)) => (f, Some(n)),
                None => (s.as_str(), None),
            };
            let text = fs::read_to_string(base.join(file))?;
            let blocks = matrices_from_csv(&text)?;
            let found = match name {
                Some(n) => blocks.into_iter().find(|(b, _)| b == n),
                None => blocks.into_iter().next(),
            };
            found
                .map(|(_, m)| m)
                .ok_or_else(|| LelError::Parse(format!("{what}: no matrix block in {s}")))
        }
        _ => matrix_from_rows(&rows_of(v, what)?),
    }
}

pub fn matrix_rows(a: &CMatrix) -> Vec<Vec<f64>> {
    (0..a.nrows())
        .map(|i| (0..a.ncols()).flat_map(|j| [a[(i, j)].re, a[(i, j)].im]).collect())
        .collect()
}

pub fn generator_to_json(g: &GnsGenerator) -> Value {
    let file = GeneratorFile {
        sigma: serde_json::to_value(matrix_rows(g.stationary().matrix())).expect("finite rows"),
        terms: g
            .terms()
            .iter()
            .map(|t| TermFile {
                v: serde_json::to_value(matrix_rows(&t.v)).expect("finite rows"),
                omega: t.omega,
                weight: t.weight,
            })
            .collect(),
        label: Some(g.label().to_string()),
    };
    serde_json::to_value(file).expect("serializable")
}

pub fn generator_from_json(text: &str, base: &Path) -> Result<GnsGenerator> {
    let file: GeneratorFile = serde_json::from_str(text)?;
    let sigma = DensityMatrix::new(matrix_value(&file.sigma, base, "sigma")?)?;
    let terms = file
        .terms
        .iter()
        .enumerate()
        .map(|(j, t)| Ok(JumpTerm::new(matrix_value(&t.v, base, &format!("terms[{j}].V"))?, t.omega, t.weight)))
        .collect::<Result<Vec<_>>>()?;
    let g = build_gns(sigma, terms)?;
    Ok(match file.label {
        Some(l) => g.with_label(l),
        None => g,
    })
}

fn parse_query(q: &str) -> Result<Vec<(String, String)>> {
    q.split('&')
        .filter(|p| !p.is_empty())
        .map(|p| {
            p.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| LelError::Parse(format!("builtin parameter '{p}' is not key=value")))
        })
        .collect()
}

fn parse_floats(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| LelError::Parse(format!("'{x}' is not a number"))))
        .collect()
}

/// `builtin:carlen-maas`, `builtin:qubit-xz`, `builtin:depolarizing?gamma=1&sigma=0.7,0.3`.
pub fn builtin(spec: &str) -> Result<LoadedGenerator> {
    let (name, query) = spec.split_once('?').unwrap_or((spec, ""));
    let params = parse_query(query)?;
    match name {
        "carlen-maas" | "qubit-xz" if !params.is_empty() => {
            Err(LelError::Parse(format!("builtin:{name} takes no parameters")))
        }
        "carlen-maas" => Ok(LoadedGenerator::Raw(carlen_maas_counterexample())),
        "qubit-xz" => Ok(LoadedGenerator::Gns(qubit_xz())),
        "depolarizing" => {
            let mut gamma = 1.0;
            let mut probs = vec![0.7, 0.3];
            for (k, v) in params {
                match k.as_str() {
                    "gamma" => gamma = parse_floats(&v)?[0],
                    "sigma" => probs = parse_floats(&v)?,
                    _ => return Err(LelError::Parse(format!("unknown depolarizing parameter '{k}'"))),
                }
            }
            let sigma = DensityMatrix::diagonal(&probs)?;
            Ok(LoadedGenerator::Gns(depolarizing(&sigma, gamma)?))
        }
        _ => Err(LelError::Parse(format!("unknown builtin generator '{name}'"))),
    }
}

/// A builtin spec or a JSON generator file.
pub fn load_generator(spec: &str) -> Result<LoadedGenerator> {
    if let Some(rest) = spec.strip_prefix("builtin:") {
        return builtin(rest);
    }
    let path = Path::new(spec);
    let text = fs::read_to_string(path)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
    Ok(LoadedGenerator::Gns(generator_from_json(&text, &base)?))
}

/// A state from a CSV matrix block (first block) or a JSON list of interleaved rows.
pub fn load_state(path: &Path) -> Result<DensityMatrix> {
    let text = fs::read_to_string(path)?;
    let m = if text.trim_start().starts_with('[') {
        let v: Value = serde_json::from_str(&text)?;
        matrix_from_rows(&rows_of(&v, "state")?)?
    } else {
        matrices_from_csv(&text)?
            .into_iter()
            .next()
            .map(|(_, m)| m)
            .ok_or_else(|| LelError::Parse(format!("no matrix block in {}", path.display())))?
    };
    DensityMatrix::new(m)
}

/// Writes via a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .ok_or_else(|| LelError::Parse(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).inspect_err(|_| {
        let _ = fs::remove_file(&tmp);
    })?;
    Ok(())
}
