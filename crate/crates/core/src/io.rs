//! File formats: model JSON, edge lists, and the `kind:N[:weight]` graph
//! shorthand.
//!
//! A model file holds the matrices as arrays of rows:
//!
//! ```json
//! {"A": [[0.0]], "B": [[1.0]], "E": [[1.0]], "H": [[1.0]], "C": [[1.0]],
//!  "sigma": 0.0, "K": [[1.0]]}
//! ```
//!
//! `D`, `K` and `F` are optional. An edge list starts with `nodes N`
//! followed by one `i j [w]` line per edge; `#` starts a comment.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{generate, GraphKind, WeightedGraph};
use crate::linalg::Mat;
use crate::model::{GainSet, SubsystemModel};

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    #[serde(rename = "A")]
    a: Rows,
    #[serde(rename = "B")]
    b: Rows,
    #[serde(rename = "E")]
    e: Rows,
    #[serde(rename = "H")]
    h: Rows,
    #[serde(rename = "C")]
    c: Rows,
    #[serde(rename = "D", default, skip_serializing_if = "Option::is_none")]
    d: Option<Rows>,
    #[serde(default)]
    sigma: f64,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    k: Option<Rows>,
    #[serde(rename = "F", default, skip_serializing_if = "Option::is_none")]
    f: Option<Rows>,
}

/// A model together with whatever gains the file carried.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelDocument {
    pub model: SubsystemModel<f64>,
    pub k: Option<Mat<f64>>,
    pub f: Option<Mat<f64>>,
}

impl ModelDocument {
    /// Gains from the file, failing if `K` is absent.
    pub fn gains(&self) -> Result<GainSet<f64>> {
        let k = self.k.clone().ok_or_else(|| Error::Invalid("model file has no gain \"K\"".into()))?;
        Ok(GainSet { k, f: self.f.clone() })
    }
}

fn to_mat(rows: &Rows, field: &str) -> Result<Mat<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, |row| row.len());
    if let Some((i, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != c) {
        return Err(Error::Dimension(format!(
            "field \"{field}\": row {i} has {} entries, row 0 has {c}",
            row.len()
        )));
    }
    if r == 0 || c == 0 {
        return Err(Error::Dimension(format!("field \"{field}\" is empty")));
    }
    Ok(Mat::from_fn(r, c, |i, j| rows[i][j]))
}

fn to_rows(m: &Mat<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// Parses a model document from JSON text.
pub fn parse_model(text: &str) -> Result<ModelDocument> {
    let file: ModelFile = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let (a, b, e, h, c) = (
        to_mat(&file.a, "A")?,
        to_mat(&file.b, "B")?,
        to_mat(&file.e, "E")?,
        to_mat(&file.h, "H")?,
        to_mat(&file.c, "C")?,
    );
    let model = match &file.d {
        Some(d) => SubsystemModel::with_noise_map(a, b, e, h, c, to_mat(d, "D")?, file.sigma)?,
        None => SubsystemModel::new(a, b, e, h, c, file.sigma)?,
    };
    let k = file.k.as_ref().map(|k| to_mat(k, "K")).transpose()?;
    let f = file.f.as_ref().map(|f| to_mat(f, "F")).transpose()?;
    if let Some(f) = &f {
        model.check_observer_gain(f)?;
    }
    if let Some(k) = &k {
        // K may be an output-feedback gain (p × q) or, next to F, a
        // state-feedback gain (p × n).
        if !(f.is_some() && k.nrows() == model.p() && k.ncols() == model.n()) {
            model.check_gain(k)?;
        }
    }
    Ok(ModelDocument { model, k, f })
}

/// Serializes a model and optional gains. `D` is written only when it
/// differs from the identity.
pub fn model_to_json(model: &SubsystemModel<f64>, k: Option<&Mat<f64>>, f: Option<&Mat<f64>>) -> String {
    let d = model.d();
    let default_d = d.is_square() && *d == Mat::identity(d.nrows(), d.ncols());
    let file = ModelFile {
        a: to_rows(model.a()),
        b: to_rows(model.b()),
        e: to_rows(model.e()),
        h: to_rows(model.h()),
        c: to_rows(model.c()),
        d: (!default_d).then(|| to_rows(d)),
        sigma: model.sigma(),
        k: k.map(to_rows),
        f: f.map(to_rows),
    };
    serde_json::to_string_pretty(&file).expect("model serializes")
}

pub fn load_model(path: &Path) -> Result<ModelDocument> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read model file {}: {e}", path.display())))?;
    parse_model(&text)
}

pub fn save_model(path: &Path, doc: &ModelDocument) -> Result<()> {
    std::fs::write(path, model_to_json(&doc.model, doc.k.as_ref(), doc.f.as_ref()))
        .map_err(|e| Error::Invalid(format!("cannot write model file {}: {e}", path.display())))
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, column, message: message.into() }
}

/// Parses an edge list. Node indices are zero-based; the weight defaults
/// to 1.
pub fn parse_edge_list(text: &str) -> Result<WeightedGraph<f64>> {
    let mut nodes: Option<usize> = None;
    let mut edges = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = raw.split('#').next().unwrap_or("");
        // (column, token) pairs, columns 1-based.
        let mut tokens = Vec::new();
        let mut start = None;
        for (i, ch) in body.char_indices().chain(std::iter::once((body.len(), ' '))) {
            match (ch.is_whitespace(), start) {
                (false, None) => start = Some(i),
                (true, Some(s)) => {
                    tokens.push((body[..s].chars().count() + 1, &body[s..i]));
                    start = None;
                }
                _ => {}
            }
        }
        if tokens.is_empty() {
            continue;
        }
        let Some(n) = nodes else {
            if tokens.len() != 2 || tokens[0].1 != "nodes" {
                return Err(parse_err(line, tokens[0].0, "expected header 'nodes N'"));
            }
            let n = tokens[1]
                .1
                .parse::<usize>()
                .map_err(|_| parse_err(line, tokens[1].0, format!("bad node count '{}'", tokens[1].1)))?;
            nodes = Some(n);
            continue;
        };
        if tokens.len() < 2 || tokens.len() > 3 {
            return Err(parse_err(line, tokens[0].0, "expected 'i j' or 'i j w'"));
        }
        let idx = |k: usize| -> Result<usize> {
            let (col, tok) = tokens[k];
            let v = tok.parse::<usize>().map_err(|_| parse_err(line, col, format!("bad node index '{tok}'")))?;
            if v >= n {
                return Err(parse_err(line, col, format!("node {v} out of range for {n} nodes")));
            }
            Ok(v)
        };
        let (i, j) = (idx(0)?, idx(1)?);
        let w = match tokens.get(2) {
            Some(&(col, tok)) => {
                let w = tok.parse::<f64>().map_err(|_| parse_err(line, col, format!("bad weight '{tok}'")))?;
                if !(w > 0.0 && w.is_finite()) {
                    return Err(parse_err(line, col, format!("weight must be positive and finite, got {tok}")));
                }
                w
            }
            None => 1.0,
        };
        if let Some(&(a, b, _)) = edges.iter().find(|&&(a, b, _)| (a, b) == (i, j) || (a, b) == (j, i)) {
            return Err(parse_err(line, tokens[0].0, format!("duplicate edge ({a}, {b})")));
        }
        edges.push((i, j, w));
    }
    let n = nodes.ok_or_else(|| parse_err(1, 1, "missing header 'nodes N'"))?;
    WeightedGraph::new(n, edges)
}

/// Writes a graph in the edge-list format.
pub fn edge_list_to_string(g: &WeightedGraph<f64>) -> String {
    let mut out = format!("nodes {}\n", g.n_nodes());
    for &(i, j, w) in g.edges() {
        out.push_str(&format!("{i} {j} {w}\n"));
    }
    out
}

/// Parses `kind:N[:weight]`, e.g. `path:5` or `complete:4:2.5`.
pub fn parse_graph_shorthand(spec: &str) -> Result<WeightedGraph<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() < 2 || parts.len() > 3 {
        return Err(Error::Invalid(format!("graph spec '{spec}' is not kind:N[:weight]")));
    }
    let kind: GraphKind = parts[0].parse()?;
    let n: usize = parts[1]
        .parse()
        .map_err(|_| Error::Invalid(format!("bad node count '{}' in graph spec '{spec}'", parts[1])))?;
    let w: f64 = match parts.get(2) {
        Some(t) => t.parse().map_err(|_| Error::Invalid(format!("bad weight '{t}' in graph spec '{spec}'")))?,
        None => 1.0,
    };
    generate(kind, n, w)
}

/// Graph from either the shorthand or a path to an edge-list file.
pub fn load_graph(spec: &str) -> Result<WeightedGraph<f64>> {
    let kind = spec.split(':').next().unwrap_or("");
    if spec.contains(':') && kind.parse::<GraphKind>().is_ok() {
        return parse_graph_shorthand(spec);
    }
    let text = std::fs::read_to_string(spec)
        .map_err(|e| Error::Invalid(format!("'{spec}' is neither a graph spec nor a readable file: {e}")))?;
    parse_edge_list(&text)
}
