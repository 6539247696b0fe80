//! Adomian decomposition baseline with a linear split `N(x, u) u = L u + R(x, u) u`.
//!
//! `u_A^(0)` solves `u' = L u + phi`, `u(x0) = u0`, and `u_A^(i+1)` solves
//! `u' = L u + A_i(R u; u_A^(0), ..., u_A^(i))` from zero. The grid only
//! fixes where terms are sampled; each linear solve marches across panels
//! with the same integrating-factor quadrature as the FD-method.

use std::sync::Arc;

use crate::analysis::{error_report, AnalysisError, ErrorReport, Truth};
use crate::expr::{Expression, Jet};
use crate::fdcore::{at_sample, fd_solve_on, solve_linear_panel, FdError, Problem};
use crate::mesh::{Mesh, PiecewiseTerm};

#[derive(Debug, Clone, PartialEq)]
pub struct AdmSolution {
    pub terms: Vec<PiecewiseTerm>,
    pub partial_sums: Vec<PiecewiseTerm>,
    pub linear: f64,
}

/// Taylor jet in `u` of `(N(x, u) - L) u` about `u0`.
fn remainder_jet(
    n: &Expression,
    l: f64,
    x: f64,
    u0: f64,
    order: usize,
) -> Result<Jet, crate::expr::ExprError> {
    let nj = n.jet_eval(x, u0, order)?;
    let shifted = &nj - &Jet::constant(l, order);
    Ok(&shifted * &Jet::variable(u0, order))
}

fn march(
    mesh: &Arc<Mesh>,
    l: f64,
    ua0: f64,
    mut source: impl FnMut(usize, usize, f64) -> Result<f64, FdError>,
) -> Result<PiecewiseTerm, FdError> {
    let mut ua = ua0;
    let mut samples = Vec::with_capacity(mesh.panels().len());
    let mut derivs = Vec::with_capacity(mesh.panels().len());
    for (i, panel) in mesh.panels().iter().enumerate() {
        let n = vec![l; panel.xs().len()];
        let s = panel
            .xs()
            .iter()
            .enumerate()
            .map(|(k, &x)| source(i, k, x))
            .collect::<Result<Vec<_>, _>>()?;
        let (v, d) = solve_linear_panel(panel, &n, &s, None, ua);
        ua = v[v.len() - 1];
        samples.push(v);
        derivs.push(d);
    }
    Ok(PiecewiseTerm::from_samples(
        mesh.clone(),
        samples,
        Some(derivs),
    ))
}

/// ADM terms `u_A^(0)..u_A^(m)` sampled on `mesh`.
pub fn adm_solve(p: &Problem, m: usize, mesh: &Arc<Mesh>) -> Result<AdmSolution, FdError> {
    let l = p.linear_split();
    let base = march(mesh, l, p.u0, |i, k, x| {
        Ok(at_sample(mesh.panel(i), k, x, p.phi.eval(x, 0.0))?.unwrap_or(f64::NAN))
    })?;
    let mut terms = vec![base];
    let mut values = Vec::new();
    for order in 0..m {
        let next = march(mesh, l, 0.0, |i, k, x| {
            values.clear();
            values.extend(terms.iter().map(|t| t.panel_samples(i)[k]));
            let jet = remainder_jet(&p.n, l, x, values[0], order);
            let Some(jet) = at_sample(mesh.panel(i), k, x, jet)? else {
                return Ok(f64::NAN);
            };
            Ok(jet.compose(&Jet::from_coeffs(values.clone()))[order])
        })?;
        terms.push(next);
    }
    let mut partial_sums: Vec<PiecewiseTerm> = Vec::with_capacity(m + 1);
    for t in &terms {
        let sum = match partial_sums.last() {
            Some(prev) => PiecewiseTerm::sum(&[prev, t]),
            None => t.clone(),
        };
        partial_sums.push(sum);
    }
    Ok(AdmSolution {
        terms,
        partial_sums,
        linear: l,
    })
}

/// Per-order sup-errors of both methods over a window.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub window: (f64, f64),
    pub fd: ErrorReport,
    pub adm: ErrorReport,
}

pub fn adm_compare(
    p: &Problem,
    m: usize,
    mesh: &Arc<Mesh>,
    window: (f64, f64),
    truth: &Truth<'_>,
) -> Result<Comparison, AnalysisError> {
    let fd = fd_solve_on(p, mesh, m)?;
    let adm = adm_solve(p, m, mesh)?;
    Ok(Comparison {
        window,
        fd: error_report(&fd.partial_sums, truth, window)?,
        adm: error_report(&adm.partial_sums, truth, window)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;
    use crate::mesh::{uniform_grid, Quadrature};

    fn mesh_for(p: &Problem, h: f64, n: usize) -> Arc<Mesh> {
        p.mesh(uniform_grid(p.x0, h, n).unwrap(), Quadrature::default())
            .unwrap()
    }

    #[test]
    fn decaying_example_first_correction() {
        let p = Problem::new(parse("-1-u^2").unwrap(), parse("0").unwrap(), 0.0, 1.0, 2.0)
            .unwrap()
            .with_adm_linear(-1.0);
        let sol = adm_solve(&p, 1, &mesh_for(&p, 0.25, 8)).unwrap();
        assert!((sol.terms[0].eval(1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-9);
        let want = -((-1.0f64).exp() - (-3.0f64).exp()) / 2.0;
        assert!((want + 0.159046).abs() < 1e-6);
        assert!((sol.terms[1].eval(1.0).unwrap() - want).abs() < 1e-8);
    }

    #[test]
    fn example1_base_term_solves_linear_part() {
        let p = Problem::new(
            parse("-(1+u^2)").unwrap(),
            parse("cos(x)+sin(x)+sin(x)^3").unwrap(),
            0.0,
            0.0,
            6.0,
        )
        .unwrap()
        .with_adm_linear(-1.0);
        let mesh = mesh_for(&p, 1.0 / 3.0, 18);
        let sol = adm_solve(&p, 0, &mesh).unwrap();
        // u' = -u + cos + sin + sin^3 has solution sin(x) + w(x) with
        // w' + w = sin^3, w(0) = 0; sin^3 = (3 sin x - sin 3x)/4.
        let w = |x: f64| {
            let part1 = 0.75 * (x.sin() - x.cos()) / 2.0;
            let part3 = -0.25 * ((3.0 * x).sin() - 3.0 * (3.0 * x).cos()) / 10.0;
            let c = -(-0.75 / 2.0 + 0.25 * 3.0 / 10.0);
            part1 + part3 + c * (-x).exp()
        };
        for x in [0.4, 2.5, 5.9] {
            let got = sol.terms[0].eval(x).unwrap();
            assert!((got - (x.sin() + w(x))).abs() < 1e-8, "{x}: {got}");
        }
    }

    #[test]
    fn pure_linear_split_has_no_corrections() {
        let p = Problem::new(parse("-2").unwrap(), parse("x").unwrap(), 0.0, 1.0, 1.0)
            .unwrap()
            .with_adm_linear(-2.0);
        let sol = adm_solve(&p, 3, &mesh_for(&p, 0.25, 4)).unwrap();
        for t in &sol.terms[1..] {
            assert_eq!(t.sup_norm(), 0.0);
        }
    }

    /// Largest sample difference between runs with `S` and `2S` samples.
    fn doubling_gap(p: &Problem, s: usize) -> Vec<f64> {
        let grid = uniform_grid(0.0, 1.0 / 3.0, 18).unwrap();
        let coarse = adm_solve(
            p,
            3,
            &p.mesh(grid.clone(), Quadrature::new(s).unwrap()).unwrap(),
        )
        .unwrap();
        let fine = adm_solve(
            p,
            3,
            &p.mesh(grid, Quadrature::new(2 * s).unwrap()).unwrap(),
        )
        .unwrap();
        coarse
            .terms
            .iter()
            .zip(&fine.terms)
            .map(|(a, b)| {
                let mut gap: f64 = 0.0;
                for i in 0..18 {
                    for k in 0..=s {
                        gap = gap.max((a.panel_samples(i)[k] - b.panel_samples(i)[2 * k]).abs());
                    }
                }
                gap
            })
            .collect()
    }

    #[test]
    fn sample_count_only_changes_quadrature_error() {
        let p = Problem::new(
            parse("-(1+u^2)").unwrap(),
            parse("cos(x)+sin(x)+sin(x)^3").unwrap(),
            0.0,
            0.0,
            6.0,
        )
        .unwrap()
        .with_adm_linear(-1.0);
        let g32 = doubling_gap(&p, 32);
        let g64 = doubling_gap(&p, 64);
        assert!(g32[0] <= 1e-8, "{g32:?}");
        // Higher terms carry larger derivatives; the gap must shrink at the
        // fourth-order Simpson rate.
        for (a, b) in g32.iter().zip(&g64) {
            let rate = a / b;
            assert!((12.0..20.0).contains(&rate), "{g32:?} {g64:?}");
        }
    }

    #[test]
    fn degenerate_window_has_zero_errors() {
        let p = Problem::new(
            parse("-(1+u^2)").unwrap(),
            parse("cos(x)+sin(x)+sin(x)^3").unwrap(),
            0.0,
            0.0,
            6.0,
        )
        .unwrap()
        .with_exact(parse("sin(x)").unwrap())
        .unwrap()
        .with_adm_linear(-1.0);
        let exact = p.exact.clone().unwrap();
        let cmp = adm_compare(
            &p,
            3,
            &mesh_for(&p, 1.0 / 3.0, 18),
            (0.0, 0.0),
            &Truth::Exact(&exact),
        )
        .unwrap();
        assert!(cmp
            .fd
            .sup_errors
            .iter()
            .chain(&cmp.adm.sup_errors)
            .all(|&e| e == 0.0));
    }
}
