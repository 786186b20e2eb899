//! Model, gain and graph inputs shared by the subcommands.

use std::collections::BTreeMap;

use clap::Args;
use lapnet::fixtures::fixture;
use lapnet::graph::WeightedGraph;
use lapnet::io::{parse_edge_list, parse_graph_shorthand, parse_model};
use lapnet::linalg::Mat;
use lapnet::model::SubsystemModel;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Model file (JSON with A, B, E, H, C, sigma and optional K, F).
    #[arg(long, conflicts_with = "fixture")]
    pub model: Option<String>,
    /// Built-in fixture name (see `lapnet fixtures --list`).
    #[arg(long)]
    pub fixture: Option<String>,
    /// Fixture parameter override, `name=value`. Repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE", requires = "fixture")]
    pub params: Vec<String>,
    /// Gain K as rows separated by `;`, entries by `,` (e.g. `1,2;3,4`).
    #[arg(long = "k", value_name = "MATRIX")]
    pub k: Option<String>,
    /// Observer gain F in the same notation as `--k`.
    #[arg(long = "f", value_name = "MATRIX")]
    pub f: Option<String>,
}

/// Where an input came from and its digest, for the output header.
#[derive(Debug, Clone, Serialize)]
pub struct InputRecord {
    pub source: String,
    pub sha256: String,
}

pub struct LoadedModel {
    pub model: SubsystemModel<f64>,
    pub k: Option<Mat<f64>>,
    pub f: Option<Mat<f64>>,
    pub record: InputRecord,
}

impl LoadedModel {
    pub fn k(&self) -> Result<&Mat<f64>, CliError> {
        self.k
            .as_ref()
            .ok_or_else(|| CliError::Validation("no gain K: pass --k or use a model that carries one".into()))
    }

    pub fn f(&self) -> Result<&Mat<f64>, CliError> {
        self.f
            .as_ref()
            .ok_or_else(|| CliError::Validation("no observer gain F: pass --f or use a model that carries one".into()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn read_file(path: &str) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("cannot read {path}: {e}")))
}

/// Parses `1,2;3,4` into a 2 × 2 matrix.
pub fn parse_matrix(text: &str) -> Result<Mat<f64>, CliError> {
    let rows: Vec<Vec<f64>> = text
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::Validation(format!("bad matrix entry {v:?} in {text:?}")))
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let cols = rows[0].len();
    if rows.iter().any(|r| r.len() != cols) {
        return Err(CliError::Validation(format!("matrix rows of unequal length in {text:?}")));
    }
    Ok(Mat::from_row_iterator(rows.len(), cols, rows.into_iter().flatten()))
}

pub fn parse_params(params: &[String]) -> Result<BTreeMap<String, f64>, CliError> {
    params
        .iter()
        .map(|p| {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| CliError::Validation(format!("parameter {p:?} is not name=value")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| CliError::Validation(format!("parameter {k} has non-numeric value {v:?}")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

pub fn load_model(args: &ModelArgs) -> Result<LoadedModel, CliError> {
    let mut loaded = match (&args.model, &args.fixture) {
        (Some(path), _) => {
            let text = read_file(path)?;
            let doc = parse_model(&text)?;
            LoadedModel {
                model: doc.model,
                k: doc.k,
                f: doc.f,
                record: InputRecord { source: path.clone(), sha256: sha256_hex(text.as_bytes()) },
            }
        }
        (None, Some(name)) => {
            let fx = fixture::<f64>(name, &parse_params(&args.params)?)?;
            let canonical: Vec<String> = fx.params.iter().map(|(k, v)| format!("{k}={v:e}")).collect();
            let source = format!("fixture:{name}?{}", canonical.join("&"));
            LoadedModel {
                model: fx.model,
                k: Some(fx.gains.k),
                f: fx.gains.f,
                record: InputRecord { sha256: sha256_hex(source.as_bytes()), source },
            }
        }
        (None, None) => return Err(CliError::Usage("one of --model or --fixture is required".into())),
    };
    if let Some(k) = &args.k {
        loaded.k = Some(parse_matrix(k)?);
        loaded.record.source.push_str(&format!(" K={k}"));
    }
    if let Some(f) = &args.f {
        loaded.f = Some(parse_matrix(f)?);
        loaded.record.source.push_str(&format!(" F={f}"));
    }
    if args.k.is_some() || args.f.is_some() {
        loaded.record.sha256 = sha256_hex(
            format!("{}|{}|{}", loaded.record.sha256, args.k.as_deref().unwrap_or(""), args.f.as_deref().unwrap_or(""))
                .as_bytes(),
        );
    }
    Ok(loaded)
}

/// Graph from `kind:N[:w]` shorthand, or an edge-list file.
pub fn load_graph(spec: &str) -> Result<(WeightedGraph<f64>, InputRecord), CliError> {
    if std::path::Path::new(spec).is_file() {
        let text = read_file(spec)?;
        let g = parse_edge_list(&text)?;
        Ok((g, InputRecord { source: spec.to_string(), sha256: sha256_hex(text.as_bytes()) }))
    } else {
        let g = parse_graph_shorthand(spec)?;
        Ok((g, InputRecord { source: spec.to_string(), sha256: sha256_hex(spec.as_bytes()) }))
    }
}

pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>, CliError> {
    text.split(',')
        .map(|v| v.trim().parse().map_err(|_| CliError::Validation(format!("bad {what} entry {v:?}"))))
        .collect()
}

pub fn rows(m: &Mat<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}
