//! The FD-method: base problem with a frozen argument, F-term assembly,
//! correction solves and partial sums.
//!
//! On each subinterval `[a, b]` of the grid the base term solves
//! `u' = N(x, c) u + phi` with `c = u^(0)(a)` frozen, and correction `j + 1`
//! solves `u' = n(x) u + N_u(x, c) u^(0)(x) u(a) + F^(j+1)(x)` with
//! `n(x) = N(x, c)`. Each linear problem is integrated in closed form through
//! its integrating factor, with every antiderivative replaced by cumulative
//! Simpson over the panel samples. Node values are carried forward, so every
//! term is continuous by construction.

use std::sync::Arc;

use thiserror::Error;

use crate::adomian::AdomianError;
use crate::expr::{ExprError, Expression, Jet};
use crate::mesh::{Grid, Mesh, MeshError, Panel, PanelKind, PiecewiseTerm, Quadrature};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FdError {
    #[error("at x = {x}: {source}")]
    Expr { x: f64, source: ExprError },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Adomian(#[from] AdomianError),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("correction order {j} needs terms u^(0)..u^({j}), got {got}")]
    MissingTerms { j: usize, got: usize },
}

/// Cauchy problem `u' - N(x, u) u = phi(x)`, `u(x0) = u0`, on `[x0, x_end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Problem {
    pub n: Expression,
    pub phi: Expression,
    pub x0: f64,
    pub u0: f64,
    pub x_end: f64,
    pub exact: Option<Expression>,
    /// Linear split coefficient `L` for the Adomian baseline.
    pub adm_linear: Option<f64>,
    /// Discrepancy weight `w(x)`, 1 when absent.
    pub weight: Option<Expression>,
}

impl Problem {
    pub fn new(
        n: Expression,
        phi: Expression,
        x0: f64,
        u0: f64,
        x_end: f64,
    ) -> Result<Problem, FdError> {
        let p = Problem {
            n,
            phi,
            x0,
            u0,
            x_end,
            exact: None,
            adm_linear: None,
            weight: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_exact(mut self, exact: Expression) -> Result<Problem, FdError> {
        self.exact = Some(exact);
        self.validate()?;
        Ok(self)
    }

    pub fn with_adm_linear(mut self, l: f64) -> Problem {
        self.adm_linear = Some(l);
        self
    }

    pub fn with_weight(mut self, weight: Expression) -> Result<Problem, FdError> {
        self.weight = Some(weight);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), FdError> {
        let bad = |m: String| Err(FdError::InvalidProblem(m));
        if !(self.x0.is_finite() && self.u0.is_finite() && self.x_end.is_finite()) {
            return bad("x0, u0 and x_end must be finite".into());
        }
        if !(self.x_end > self.x0) {
            return bad(format!(
                "x_end = {} must exceed x0 = {}",
                self.x_end, self.x0
            ));
        }
        if self.phi.depends_on_u() {
            return bad("phi must not depend on u".into());
        }
        if let Some(w) = &self.weight {
            if w.depends_on_u() {
                return bad("weight must not depend on u".into());
            }
        }
        if let Some(e) = &self.exact {
            if e.depends_on_u() {
                return bad("exact solution must not depend on u".into());
            }
            let v = e
                .eval(self.x0, 0.0)
                .map_err(|source| FdError::Expr { x: self.x0, source })?;
            if (v - self.u0).abs() > 1e-10 {
                return bad(format!(
                    "exact solution gives {v} at x0, expected u0 = {}",
                    self.u0
                ));
            }
        }
        Ok(())
    }

    pub fn linear_split(&self) -> f64 {
        self.adm_linear.unwrap_or(0.0)
    }

    /// Whether `N` and `phi` can be evaluated at `x`; used to detect
    /// singular left endpoints.
    pub fn regular_at(&self, x: f64) -> bool {
        self.n.eval(x, self.u0).is_ok() && self.phi.eval(x, 0.0).is_ok()
    }

    /// Sample layout for `grid`: panels whose left node is singular are
    /// clustered towards it.
    pub fn mesh(&self, grid: Grid, quad: Quadrature) -> Result<Arc<Mesh>, FdError> {
        let tol = 1e-9 * (1.0 + self.x0.abs().max(self.x_end.abs()));
        if (grid.start() - self.x0).abs() > tol || (grid.end() - self.x_end).abs() > tol {
            return Err(FdError::InvalidProblem(format!(
                "grid [{}, {}] does not span [{}, {}]",
                grid.start(),
                grid.end(),
                self.x0,
                self.x_end
            )));
        }
        let kinds: Vec<PanelKind> = grid.nodes()[..grid.intervals()]
            .iter()
            .map(|&a| {
                if self.regular_at(a) {
                    PanelKind::Uniform
                } else {
                    PanelKind::Clustered
                }
            })
            .collect();
        Ok(Arc::new(Mesh::with_kinds(grid, quad, &kinds)))
    }
}

/// Partial sums of the FD series.
#[derive(Debug, Clone, PartialEq)]
pub struct FdSolution {
    pub terms: Vec<PiecewiseTerm>,
    pub partial_sums: Vec<PiecewiseTerm>,
    pub mesh: Arc<Mesh>,
    pub m: usize,
    pub warnings: Vec<String>,
}

impl FdSolution {
    pub fn grid(&self) -> &Grid {
        self.mesh.grid()
    }
}

/// Evaluates at one sample; a domain error at the left end of a clustered
/// panel is the expected singular point and yields `None`.
pub(crate) fn at_sample<T>(
    panel: &Panel,
    k: usize,
    x: f64,
    r: Result<T, ExprError>,
) -> Result<Option<T>, FdError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if k == 0 && panel.kind == PanelKind::Clustered && e.is_domain() => Ok(None),
        Err(source) => Err(FdError::Expr { x, source }),
    }
}

/// Solves `u' = n u + s + b u(a)` on one panel with `u(a) = ua`.
///
/// Returns values and derivatives at the panel samples. Coefficients may be
/// non-finite at the left end of a clustered panel.
pub fn solve_linear_panel(
    panel: &Panel,
    n: &[f64],
    s: &[f64],
    b: Option<&[f64]>,
    ua: f64,
) -> (Vec<f64>, Vec<f64>) {
    let int_n = panel.cumulative(n);
    let decay: Vec<f64> = int_n.iter().map(|v| (-v).exp()).collect();
    let forced: Vec<f64> = decay.iter().zip(s).map(|(d, v)| d * v).collect();
    let cum_s = panel.cumulative(&forced);
    let cum_b = b.map(|b| {
        let g: Vec<f64> = decay.iter().zip(b).map(|(d, v)| d * v).collect();
        panel.cumulative(&g)
    });
    let mut values = Vec::with_capacity(n.len());
    let mut derivs = Vec::with_capacity(n.len());
    for k in 0..n.len() {
        let growth = int_n[k].exp();
        let hom = 1.0 + cum_b.as_ref().map_or(0.0, |c| c[k]);
        let u = if k == 0 {
            ua
        } else {
            growth * (ua * hom + cum_s[k])
        };
        let du = n[k] * u + s[k] + b.map_or(0.0, |b| b[k] * ua);
        values.push(u);
        derivs.push(du);
    }
    (values, derivs)
}

/// Base term `u^(0)` with the argument of `N` frozen at each left node.
pub fn solve_base(p: &Problem, mesh: &Arc<Mesh>) -> Result<PiecewiseTerm, FdError> {
    let mut ua = p.u0;
    let mut samples = Vec::with_capacity(mesh.panels().len());
    let mut derivs = Vec::with_capacity(mesh.panels().len());
    for panel in mesh.panels() {
        let c = ua;
        let mut n = Vec::with_capacity(panel.xs().len());
        let mut s = Vec::with_capacity(panel.xs().len());
        for (k, &x) in panel.xs().iter().enumerate() {
            n.push(at_sample(panel, k, x, p.n.eval(x, c))?.unwrap_or(f64::NAN));
            s.push(at_sample(panel, k, x, p.phi.eval(x, 0.0))?.unwrap_or(f64::NAN));
        }
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

/// Coefficients of correction `j + 1` on panel `i`: `n(x) = N(x, c)`,
/// `N_u(x, c) u^(0)(x)` and `F^(j+1)(x)` at every sample (`NaN` at a
/// singular left end).
struct CorrectionData {
    n: Vec<f64>,
    b: Vec<f64>,
    f: Vec<f64>,
}

fn correction_data(
    j: usize,
    terms: &[PiecewiseTerm],
    p: &Problem,
    i: usize,
) -> Result<CorrectionData, FdError> {
    if terms.len() < j + 1 {
        return Err(FdError::MissingTerms {
            j,
            got: terms.len(),
        });
    }
    let mesh = terms[0].mesh();
    let panel = mesh.panel(i);
    let frozen: Vec<f64> = terms[..=j].iter().map(|t| t.node_value(i)).collect();
    let mut frozen_ext = frozen.clone();
    frozen_ext.push(0.0);
    let frozen_series = Jet::from_coeffs(frozen_ext);

    let len = panel.xs().len();
    let mut out = CorrectionData {
        n: Vec::with_capacity(len),
        b: Vec::with_capacity(len),
        f: Vec::with_capacity(len),
    };
    let mut live = vec![0.0; j + 1];
    for (k, &x) in panel.xs().iter().enumerate() {
        for (p_idx, t) in terms[..=j].iter().enumerate() {
            live[p_idx] = t.panel_samples(i)[k];
        }
        let frozen_jet = at_sample(panel, k, x, p.n.jet_eval(x, frozen[0], j + 1))?;
        let live_jet = at_sample(panel, k, x, p.n.jet_eval(x, live[0], j))?;
        let (Some(frozen_jet), Some(live_jet)) = (frozen_jet, live_jet) else {
            out.n.push(f64::NAN);
            out.b.push(f64::NAN);
            out.f.push(f64::NAN);
            continue;
        };
        let a_bar = frozen_jet.compose(&frozen_series);
        let a_live = live_jet.compose(&Jet::from_coeffs(live.clone()));
        let mut f = a_bar[j + 1] * live[0];
        for p_idx in 1..=j {
            f += a_bar[j + 1 - p_idx] * live[p_idx];
        }
        for p_idx in 0..=j {
            f += (a_live[j - p_idx] - a_bar[j - p_idx]) * live[p_idx];
        }
        out.n.push(frozen_jet[0]);
        out.b
            .push(frozen_jet.coeffs().get(1).copied().unwrap_or(0.0) * live[0]);
        out.f.push(f);
    }
    Ok(out)
}

/// `F^(j+1)` at the samples of panel `i`, given `u^(0)..u^(j)`.
pub fn assemble_f(
    j: usize,
    terms: &[PiecewiseTerm],
    p: &Problem,
    i: usize,
) -> Result<Vec<f64>, FdError> {
    Ok(correction_data(j, terms, p, i)?.f)
}

/// Correction `u^(j+1)` from `u^(0)..u^(j)`, zero at `x0`.
pub fn solve_correction(
    j: usize,
    p: &Problem,
    terms: &[PiecewiseTerm],
) -> Result<PiecewiseTerm, FdError> {
    if terms.len() < j + 1 {
        return Err(FdError::MissingTerms {
            j,
            got: terms.len(),
        });
    }
    let mesh = terms[0].mesh().clone();
    let mut ua = 0.0;
    let mut samples = Vec::with_capacity(mesh.panels().len());
    let mut derivs = Vec::with_capacity(mesh.panels().len());
    for (i, panel) in mesh.panels().iter().enumerate() {
        let data = correction_data(j, terms, p, i)?;
        let (v, d) = solve_linear_panel(panel, &data.n, &data.f, Some(&data.b), ua);
        ua = v[v.len() - 1];
        samples.push(v);
        derivs.push(d);
    }
    Ok(PiecewiseTerm::from_samples(mesh, samples, Some(derivs)))
}

/// Terms `u^(0)..u^(m)` and partial sums on a prepared mesh.
pub fn fd_solve_on(p: &Problem, mesh: &Arc<Mesh>, m: usize) -> Result<FdSolution, FdError> {
    let mut terms = vec![solve_base(p, mesh)?];
    let mut warnings = Vec::new();
    for j in 0..m {
        let next = solve_correction(j, p, &terms)?;
        let (prev_norm, norm) = (terms[j].sup_norm(), next.sup_norm());
        if norm > 10.0 * prev_norm && prev_norm > 0.0 {
            warnings.push(format!(
                "possible divergence: sup|u^({})| = {norm:.3e} exceeds 10 x sup|u^({j})| = {prev_norm:.3e}",
                j + 1
            ));
        }
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
    Ok(FdSolution {
        terms,
        partial_sums,
        mesh: mesh.clone(),
        m,
        warnings,
    })
}

/// Runs the FD-method to order `m` on `grid`.
pub fn fd_solve(
    p: &Problem,
    grid: Grid,
    m: usize,
    quad: Quadrature,
) -> Result<FdSolution, FdError> {
    let mesh = p.mesh(grid, quad)?;
    fd_solve_on(p, &mesh, m)
}
