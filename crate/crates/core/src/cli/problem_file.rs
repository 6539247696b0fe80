//! Flat `key = value` problem files.
//!
//! ```text
//! # Example
//! name = "decay"
//! N = "-(1+u^2)"
//! phi = "0"
//! u0 = 1
//! h = 1/4
//! n = 8
//! ```
//!
//! Expression values are double-quoted; numeric values may be constant
//! expressions such as `1/3`. Lists (`nodes`, `majorant`) are comma-separated,
//! optionally inside brackets.

use std::collections::BTreeMap;

use crate::expr::{parse, Expression};
use crate::fdcore::Problem;
use crate::mesh::{uniform_grid, Grid, Quadrature};

use super::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum GridSpec {
    Uniform { h: f64, n: usize },
    Nodes(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub name: String,
    pub x0: f64,
    pub u0: f64,
    pub x_end: Option<f64>,
    pub n: String,
    pub phi: String,
    pub exact: Option<String>,
    pub adm_linear: Option<f64>,
    pub weight: Option<String>,
    pub grid: GridSpec,
    pub quadrature_samples: usize,
    pub m: usize,
    /// Half-width of the `u` range sampled by the condition checker.
    pub u_bound: f64,
    /// Explicit majorant coefficients `B_0, B_1, ...`.
    pub majorant: Option<Vec<f64>>,
    pub q: f64,
}

const KEYS: &[&str] = &[
    "name",
    "x0",
    "u0",
    "x_end",
    "N",
    "phi",
    "exact",
    "adm_linear",
    "weight",
    "h",
    "n",
    "nodes",
    "quadrature_samples",
    "m",
    "u_bound",
    "majorant",
    "Q",
];

fn err(line: usize, message: impl Into<String>) -> CliError {
    CliError::Parse(format!("line {line}: {}", message.into()))
}

fn unquote(raw: &str, line: usize) -> Result<String, CliError> {
    let raw = raw.trim();
    if let Some(rest) = raw.strip_prefix('"') {
        let inner = rest
            .strip_suffix('"')
            .ok_or_else(|| err(line, "unterminated string"))?;
        if inner.contains('"') {
            return Err(err(line, "stray quote inside string"));
        }
        Ok(inner.to_string())
    } else {
        Ok(raw.to_string())
    }
}

/// Removes a trailing `#` comment that is not inside quotes.
fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn constant(text: &str, key: &str, line: usize) -> Result<f64, CliError> {
    let e = parse(text).map_err(|e| err(line, format!("{key}: {e}")))?;
    if e.depends_on_x() || e.depends_on_u() {
        return Err(err(line, format!("{key} must be a constant, got {text:?}")));
    }
    let v = e
        .eval(0.0, 0.0)
        .map_err(|e| err(line, format!("{key}: {e}")))?;
    Ok(v)
}

fn count(text: &str, key: &str, line: usize) -> Result<usize, CliError> {
    text.trim().parse::<usize>().map_err(|_| {
        err(
            line,
            format!("{key} must be a non-negative integer, got {text:?}"),
        )
    })
}

fn list(text: &str, key: &str, line: usize) -> Result<Vec<f64>, CliError> {
    let inner = text.trim().trim_start_matches('[').trim_end_matches(']');
    inner
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| constant(s.trim(), key, line))
        .collect()
}

fn expression(text: &str, key: &str) -> Result<Expression, CliError> {
    parse(text).map_err(|e| CliError::Parse(format!("{key} = {text:?}: {e}")))
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<ProblemFile, CliError> {
        let mut values: BTreeMap<&str, (String, usize)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = strip_comment(raw).trim();
            if body.is_empty() {
                continue;
            }
            let (key, value) = body
                .split_once('=')
                .ok_or_else(|| err(line, format!("expected `key = value`, got {body:?}")))?;
            let key = key.trim();
            let Some(&known) = KEYS.iter().find(|&&k| k == key) else {
                return Err(err(line, format!("unknown key {key:?}")));
            };
            let value = unquote(value, line)?;
            if values.insert(known, (value, line)).is_some() {
                return Err(err(line, format!("duplicate key {key:?}")));
            }
        }
        let get = |k: &str| values.get(k).map(|(v, l)| (v.as_str(), *l));
        let required =
            |k: &str| get(k).ok_or_else(|| CliError::Parse(format!("missing required key {k:?}")));
        let num = |k: &str, default: f64| -> Result<f64, CliError> {
            match get(k) {
                Some((v, l)) => constant(v, k, l),
                None => Ok(default),
            }
        };

        let grid = match (get("nodes"), get("h"), get("n")) {
            (Some((v, l)), None, None) => GridSpec::Nodes(list(v, "nodes", l)?),
            (None, Some((h, lh)), Some((n, ln))) => GridSpec::Uniform {
                h: constant(h, "h", lh)?,
                n: count(n, "n", ln)?,
            },
            _ => {
                return Err(CliError::Parse(
                    "give either `nodes` or both `h` and `n`".into(),
                ))
            }
        };
        let (n_text, _) = required("N")?;
        let (phi_text, _) = required("phi")?;
        Ok(ProblemFile {
            name: get("name").map_or_else(|| "problem".to_string(), |(v, _)| v.to_string()),
            x0: num("x0", 0.0)?,
            u0: {
                let (v, l) = required("u0")?;
                constant(v, "u0", l)?
            },
            x_end: get("x_end")
                .map(|(v, l)| constant(v, "x_end", l))
                .transpose()?,
            n: n_text.to_string(),
            phi: phi_text.to_string(),
            exact: get("exact").map(|(v, _)| v.to_string()),
            adm_linear: get("adm_linear")
                .map(|(v, l)| constant(v, "adm_linear", l))
                .transpose()?,
            weight: get("weight").map(|(v, _)| v.to_string()),
            grid,
            quadrature_samples: get("quadrature_samples")
                .map_or(Ok(32), |(v, l)| count(v, "quadrature_samples", l))?,
            m: get("m").map_or(Ok(3), |(v, l)| count(v, "m", l))?,
            u_bound: num("u_bound", 10.0)?,
            majorant: get("majorant")
                .map(|(v, l)| list(v, "majorant", l))
                .transpose()?,
            q: num("Q", 0.0)?,
        })
    }

    pub fn read(path: &std::path::Path) -> Result<ProblemFile, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        ProblemFile::parse(&text)
    }

    pub fn grid(&self) -> Result<Grid, CliError> {
        let g = match &self.grid {
            GridSpec::Uniform { h, n } => uniform_grid(self.x0, *h, *n),
            GridSpec::Nodes(nodes) => Grid::new(nodes.clone()),
        };
        g.map_err(|e| CliError::Parse(format!("grid: {e}")))
    }

    pub fn quadrature(&self, samples_override: Option<usize>) -> Result<Quadrature, CliError> {
        Quadrature::new(samples_override.unwrap_or(self.quadrature_samples))
            .map_err(|e| CliError::Parse(e.to_string()))
    }

    /// The Cauchy problem; `x_end` defaults to the last grid node.
    pub fn problem(&self) -> Result<Problem, CliError> {
        let x_end = match self.x_end {
            Some(x) => x,
            None => self.grid()?.end(),
        };
        let invalid = |e: crate::fdcore::FdError| CliError::Parse(e.to_string());
        let mut p = Problem::new(
            expression(&self.n, "N")?,
            expression(&self.phi, "phi")?,
            self.x0,
            self.u0,
            x_end,
        )
        .map_err(invalid)?;
        if let Some(e) = &self.exact {
            p = p.with_exact(expression(e, "exact")?).map_err(invalid)?;
        }
        if let Some(w) = &self.weight {
            p = p.with_weight(expression(w, "weight")?).map_err(invalid)?;
        }
        if let Some(l) = self.adm_linear {
            p = p.with_adm_linear(l);
        }
        Ok(p)
    }
}
