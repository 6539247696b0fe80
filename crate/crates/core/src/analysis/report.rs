use crate::expr::Expression;
use crate::fdcore::{at_sample, Problem};
use crate::mesh::PiecewiseTerm;

use super::reference::ReferenceSolution;
use super::AnalysisError;

/// What approximations are measured against.
#[derive(Debug, Clone, Copy)]
pub enum Truth<'a> {
    Exact(&'a Expression),
    Reference(&'a ReferenceSolution),
}

impl Truth<'_> {
    pub fn eval(&self, x: f64) -> Result<f64, AnalysisError> {
        match self {
            Truth::Exact(e) => Ok(e.eval(x, 0.0)?),
            Truth::Reference(r) => r.eval(x),
        }
    }
}

fn weight(p: &Problem, x: f64) -> Result<f64, crate::expr::ExprError> {
    p.weight.as_ref().map_or(Ok(1.0), |w| w.eval(x, 0.0))
}

fn residual(p: &Problem, x: f64, u: f64, du: f64) -> Result<f64, crate::expr::ExprError> {
    Ok(weight(p, x)? * (du - p.n.eval(x, u)? * u - p.phi.eval(x, 0.0)?))
}

/// `nu(x) = w(x) (u'(x) - N(x, u) u - phi(x))` for a sampled approximation.
pub fn discrepancy(p: &Problem, approx: &PiecewiseTerm, x: f64) -> Result<f64, AnalysisError> {
    let u = approx.eval(x)?;
    let du = approx.eval_derivative(x)?;
    Ok(residual(p, x, u, du)?)
}

/// Discrepancy at every sample, shared nodes once (left panel). The
/// singular point of a clustered panel yields `NaN`.
pub fn discrepancy_samples(
    p: &Problem,
    approx: &PiecewiseTerm,
) -> Result<Vec<(f64, f64)>, AnalysisError> {
    let mesh = approx.mesh();
    mesh.sample_points()
        .map(|(i, k, x)| {
            let u = approx.panel_samples(i)[k];
            let du = approx.sample_derivative(i, k);
            let nu = at_sample(mesh.panel(i), k, x, residual(p, x, u, du))?;
            Ok((x, nu.unwrap_or(f64::NAN)))
        })
        .collect()
}

/// Per-order errors over a window.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub window: (f64, f64),
    pub xs: Vec<f64>,
    /// `truth - approximation` at `xs`, one curve per order.
    pub curves: Vec<Vec<f64>>,
    pub sup_errors: Vec<f64>,
    /// Fitted geometric ratio of consecutive sup-errors.
    pub ratio: Option<f64>,
}

/// `exp` of the least-squares slope of `ln e_m` against `m`.
pub fn fit_ratio(errors: &[f64]) -> Option<f64> {
    if errors.len() < 2 || errors.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
        return None;
    }
    let n = errors.len() as f64;
    let mean_m = (n - 1.0) / 2.0;
    let logs: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let mean_l = logs.iter().sum::<f64>() / n;
    let (mut num, mut den) = (0.0, 0.0);
    for (m, l) in logs.iter().enumerate() {
        let dm = m as f64 - mean_m;
        num += dm * (l - mean_l);
        den += dm * dm;
    }
    Some((num / den).exp())
}

/// Errors of each partial sum at the samples inside `window`.
pub fn error_report(
    partial_sums: &[PiecewiseTerm],
    truth: &Truth<'_>,
    window: (f64, f64),
) -> Result<ErrorReport, AnalysisError> {
    let (a, b) = window;
    if partial_sums.is_empty() || !(b >= a) {
        return Err(AnalysisError::Invalid(format!(
            "need at least one partial sum and a window with a <= b, got [{a}, {b}]"
        )));
    }
    let mesh = partial_sums[0].mesh();
    let tol = 1e-12 * (1.0 + a.abs().max(b.abs()));
    let points: Vec<(usize, usize, f64)> = mesh
        .sample_points()
        .filter(|&(_, _, x)| x >= a - tol && x <= b + tol)
        .collect();
    let (xs, curves) = if points.is_empty() {
        let xs = if a == b { vec![a] } else { vec![a, b] };
        let truth_vals = xs
            .iter()
            .map(|&x| truth.eval(x))
            .collect::<Result<Vec<_>, _>>()?;
        let curves = partial_sums
            .iter()
            .map(|s| {
                xs.iter()
                    .zip(&truth_vals)
                    .map(|(&x, t)| Ok(t - s.eval(x)?))
                    .collect()
            })
            .collect::<Result<Vec<Vec<f64>>, AnalysisError>>()?;
        (xs, curves)
    } else {
        let xs: Vec<f64> = points.iter().map(|p| p.2).collect();
        let truth_vals = xs
            .iter()
            .map(|&x| truth.eval(x))
            .collect::<Result<Vec<_>, _>>()?;
        let curves = partial_sums
            .iter()
            .map(|s| {
                points
                    .iter()
                    .zip(&truth_vals)
                    .map(|(&(i, k, _), t)| t - s.panel_samples(i)[k])
                    .collect()
            })
            .collect();
        (xs, curves)
    };
    let sup_errors: Vec<f64> = curves
        .iter()
        .map(|c: &Vec<f64>| c.iter().fold(0.0_f64, |m, e| m.max(e.abs())))
        .collect();
    let ratio = fit_ratio(&sup_errors);
    Ok(ErrorReport {
        window,
        xs,
        curves,
        sup_errors,
        ratio,
    })
}
