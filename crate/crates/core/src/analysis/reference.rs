use crate::fdcore::Problem;
use crate::mesh::{Panel, PanelKind};

use super::AnalysisError;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// One accepted step with its dense-output coefficients.
#[derive(Debug, Clone, PartialEq)]
struct Step {
    x: f64,
    h: f64,
    rcont: [f64; 5],
}

/// Dense Dormand-Prince 5(4) solution on `[start, x_end]`.
///
/// When the right-hand side is singular at `x0` the integration starts at
/// `x0 + 1e-6` from a Picard-corrected value; points in between are
/// interpolated linearly from `u0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    x0: f64,
    u0: f64,
    start: f64,
    start_value: f64,
    steps: Vec<Step>,
    x_end: f64,
}

impl ReferenceSolution {
    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn steps(&self) -> usize {
        self.steps.len()
    }

    fn check(&self, x: f64) -> Result<(), AnalysisError> {
        let slack = 1e-12 * (1.0 + self.x_end.abs());
        if !(x >= self.x0 && x <= self.x_end + slack) {
            return Err(AnalysisError::Invalid(format!(
                "x = {x} outside the reference interval [{}, {}]",
                self.x0, self.x_end
            )));
        }
        Ok(())
    }

    fn step_at(&self, x: f64) -> (&Step, f64) {
        let idx = self.steps.partition_point(|s| s.x <= x).saturating_sub(1);
        let s = &self.steps[idx];
        (s, ((x - s.x) / s.h).clamp(0.0, 1.0))
    }

    pub fn eval(&self, x: f64) -> Result<f64, AnalysisError> {
        self.check(x)?;
        if x <= self.start {
            if self.start == self.x0 {
                return Ok(self.u0);
            }
            let t = (x - self.x0) / (self.start - self.x0);
            return Ok(self.u0 + t * (self.start_value - self.u0));
        }
        let (s, theta) = self.step_at(x);
        let t1 = 1.0 - theta;
        let r = &s.rcont;
        Ok(r[0] + theta * (r[1] + t1 * (r[2] + theta * (r[3] + t1 * r[4]))))
    }

    /// Derivative of the dense output.
    pub fn derivative(&self, x: f64) -> Result<f64, AnalysisError> {
        self.check(x)?;
        if x < self.start || self.steps.is_empty() {
            return Ok(if self.start == self.x0 {
                0.0
            } else {
                (self.start_value - self.u0) / (self.start - self.x0)
            });
        }
        let (s, theta) = self.step_at(x);
        let t1 = 1.0 - theta;
        let r = &s.rcont;
        let p = r[3] + t1 * r[4];
        let q = r[2] + theta * p;
        let dq = p - theta * r[4];
        let sv = r[1] + t1 * q;
        let ds = -q + t1 * dq;
        Ok((sv + theta * ds) / s.h)
    }
}

fn rhs(p: &Problem, x: f64, u: f64) -> Result<f64, AnalysisError> {
    Ok(p.n.eval(x, u)? * u + p.phi.eval(x, 0.0)?)
}

/// Value at `x0 + eps` from three Picard sweeps on a clustered panel, which
/// integrates inverse-square-root singularities at `x0` accurately.
fn singular_start(p: &Problem, eps: f64) -> Result<f64, AnalysisError> {
    let quad = crate::mesh::Quadrature::default();
    let grid = crate::mesh::Grid::new(vec![p.x0, p.x0 + eps])?;
    let mesh = crate::mesh::Mesh::with_kinds(grid, quad, &[PanelKind::Clustered]);
    let panel: &Panel = mesh.panel(0);
    let mut u = vec![p.u0; panel.xs().len()];
    for _ in 0..3 {
        let f: Vec<f64> = panel
            .xs()
            .iter()
            .zip(&u)
            .enumerate()
            .map(|(k, (&x, &v))| match rhs(p, x, v) {
                Ok(r) => Ok(r),
                Err(_) if k == 0 => Ok(f64::NAN),
                Err(e) => Err(e),
            })
            .collect::<Result<_, _>>()?;
        let cum = panel.cumulative(&f);
        u = cum.iter().map(|c| p.u0 + c).collect();
    }
    Ok(u[u.len() - 1])
}

/// Adaptive Dormand-Prince integration of `u' = N(x, u) u + phi(x)` with
/// mixed absolute/relative tolerance `tol`.
///
/// Steps are controlled at `tol / 10`: the fourth-order dense output is
/// otherwise an order of magnitude less accurate than the step endpoints.
pub fn reference_solve(p: &Problem, tol: f64) -> Result<ReferenceSolution, AnalysisError> {
    if !(tol > 0.0) {
        return Err(AnalysisError::Invalid(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let tol = tol / 10.0;
    let (mut x, mut y) = (p.x0, p.u0);
    let mut k1 = match rhs(p, x, y) {
        Ok(v) => v,
        Err(AnalysisError::Expr(e)) if e.is_domain() => {
            x = p.x0 + 1e-6;
            y = singular_start(p, 1e-6)?;
            rhs(p, x, y)?
        }
        Err(e) => return Err(e),
    };
    let (start, start_value) = (x, y);
    let x_end = p.x_end;
    let span = x_end - x;
    let sc = tol + tol * y.abs();
    let mut h = if k1.abs() > 0.0 {
        (0.01 * sc.max(y.abs()) / k1.abs()).min(0.01 * span)
    } else {
        0.01 * span
    };
    h = h.max(1e-12 * span).min(span);
    let mut steps = Vec::new();
    let mut rejected_last = false;
    while x < x_end {
        if x + h >= x_end || x + 1.01 * h >= x_end {
            h = x_end - x;
        }
        if h < 1e-14 * (1.0 + x.abs()) {
            return Err(AnalysisError::StepUnderflow { x });
        }
        let k2 = rhs(p, x + C2 * h, y + h * A21 * k1)?;
        let k3 = rhs(p, x + C3 * h, y + h * (A31 * k1 + A32 * k2))?;
        let k4 = rhs(p, x + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3))?;
        let k5 = rhs(
            p,
            x + C5 * h,
            y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4),
        )?;
        let k6 = rhs(
            p,
            x + h,
            y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5),
        )?;
        let y_new = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6);
        let k7 = rhs(p, x + h, y_new)?;
        let err_est = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        let scale = tol + tol * y.abs().max(y_new.abs());
        let err = (err_est / scale).abs();
        if err <= 1.0 {
            let rc2 = y_new - y;
            let rc3 = h * k1 - rc2;
            let rc4 = rc2 - h * k7 - rc3;
            let rc5 = h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7);
            steps.push(Step {
                x,
                h,
                rcont: [y, rc2, rc3, rc4, rc5],
            });
            x = if x + h >= x_end { x_end } else { x + h };
            y = y_new;
            k1 = k7;
            let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
            fac = fac.clamp(0.2, 10.0);
            if rejected_last {
                fac = fac.min(1.0);
            }
            h *= fac;
            rejected_last = false;
        } else {
            h *= (0.9 * err.powf(-0.2)).max(0.2);
            rejected_last = true;
        }
    }
    Ok(ReferenceSolution {
        x0: p.x0,
        u0: p.u0,
        start,
        start_value,
        steps,
        x_end,
    })
}
