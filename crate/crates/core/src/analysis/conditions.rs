use crate::fdcore::Problem;

use super::majorant::golden_max;
use super::AnalysisError;

/// Rectangle of `(x, u)` samples used to certify the conditions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleBox {
    pub x_range: (f64, f64),
    pub u_range: (f64, f64),
    pub x_samples: usize,
    pub u_samples: usize,
}

pub(crate) fn linspace(a: f64, b: f64, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| {
        if i + 1 == n {
            b
        } else {
            a + (b - a) * i as f64 / (n - 1) as f64
        }
    })
}

impl SampleBox {
    pub fn xs(&self) -> impl Iterator<Item = f64> {
        linspace(self.x_range.0, self.x_range.1, self.x_samples)
    }

    pub fn us(&self) -> impl Iterator<Item = f64> {
        linspace(self.u_range.0, self.u_range.1, self.u_samples)
    }
}

/// Structural form of `N` as a series in `u`.
#[derive(Debug, Clone, PartialEq)]
pub enum PowerSeriesForm {
    /// `N = sum a_i(x) u^i` with `b[i] = max_x |a_i(x)|` over the samples.
    Polynomial {
        degree: usize,
        b: Vec<f64>,
    },
    NotPolynomial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    /// `-max (N(x, u) u)'_u` over the box.
    pub alpha: f64,
    /// `max |phi|` over the x-samples.
    pub k: f64,
    /// `max{|u0|, k / alpha}`, infinite when `alpha <= 0`.
    pub mu: f64,
    pub sample_box: SampleBox,
    pub condition1: PowerSeriesForm,
    pub condition2: bool,
    pub condition3: bool,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.condition2 && self.condition3
    }
}

/// Samples the hypotheses of the convergence theorem on
/// `[x0, x_end] x [-u_bound, u_bound]`.
pub fn check_conditions(
    p: &Problem,
    u_bound: f64,
    x_samples: usize,
    u_samples: usize,
) -> Result<ConditionReport, AnalysisError> {
    if !(u_bound > 0.0) || x_samples < 2 || u_samples < 2 {
        return Err(AnalysisError::Invalid(format!(
            "need u_bound > 0 and at least two samples per axis (got {u_bound}, {x_samples}, {u_samples})"
        )));
    }
    // A singular left endpoint is sampled from just inside the interval.
    let x_start = if p.regular_at(p.x0) {
        p.x0
    } else {
        p.x0 + 1e-9 * (p.x_end - p.x0)
    };
    let sample_box = SampleBox {
        x_range: (x_start, p.x_end),
        u_range: (-u_bound, u_bound),
        x_samples,
        u_samples,
    };
    let us: Vec<f64> = sample_box.us().collect();
    let mut worst = f64::NEG_INFINITY;
    for x in sample_box.xs() {
        for &u in &us {
            let (n, n_u) = p.n.eval_du(x, u)?;
            worst = worst.max(n + u * n_u);
        }
    }
    let alpha = -worst;

    let xs: Vec<f64> = sample_box.xs().collect();
    let phi_abs = |x: f64| p.phi.eval(x, 0.0).map(f64::abs);
    let mut k = 0.0;
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        let v = phi_abs(x)?;
        if v > k {
            k = v;
            best = i;
        }
    }
    // Sampling underestimates the maximum; refine between the neighbours.
    let lo = xs[best.saturating_sub(1)];
    let hi = xs[(best + 1).min(xs.len() - 1)];
    if hi > lo {
        if let Ok((_, v)) = golden_max(|x| phi_abs(x).unwrap_or(f64::NEG_INFINITY), lo, hi, 1e-12) {
            k = k.max(v);
        }
    }

    let condition1 = match p.n.u_degree() {
        Some(degree) => {
            let mut b = vec![0.0_f64; degree + 1];
            for &x in &xs {
                let jet = p.n.jet_eval(x, 0.0, degree)?;
                for (bi, c) in b.iter_mut().zip(jet.coeffs()) {
                    *bi = bi.max(c.abs());
                }
            }
            PowerSeriesForm::Polynomial { degree, b }
        }
        None => PowerSeriesForm::NotPolynomial,
    };

    let condition3 = alpha > 0.0;
    let mu = if condition3 {
        p.u0.abs().max(k / alpha)
    } else {
        f64::INFINITY
    };
    Ok(ConditionReport {
        alpha,
        k,
        mu,
        sample_box,
        condition1,
        condition2: k.is_finite(),
        condition3,
    })
}

/// Box `|u| <= 10` with 2001 samples per axis.
pub fn check_conditions_default(p: &Problem) -> Result<ConditionReport, AnalysisError> {
    check_conditions(p, 10.0, 2001, 2001)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn example1() -> Problem {
        Problem::new(
            parse("-(1+u^2)").unwrap(),
            parse("cos(x)+sin(x)+sin(x)^3").unwrap(),
            0.0,
            0.0,
            48.0,
        )
        .unwrap()
    }

    /// Dense brute-force maximum of |cos x + sin x + sin^3 x| over one period.
    fn k_oracle() -> f64 {
        let n = 2_000_000;
        (0..=n)
            .map(|i| {
                let x = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                (x.cos() + x.sin() + x.sin().powi(3)).abs()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn example1_conditions() {
        let r = check_conditions(&example1(), 10.0, 401, 401).unwrap();
        // (N u)'_u = -1 - 3u^2 peaks at u = 0.
        assert_eq!(r.alpha, 1.0);
        assert!(r.passed());
        let k = k_oracle();
        assert!((k - 2.126).abs() < 1e-3);
        assert!((r.k - k).abs() < 1e-9, "{} vs {k}", r.k);
        assert_eq!(r.mu, r.k);
        assert_eq!(
            r.condition1,
            PowerSeriesForm::Polynomial {
                degree: 2,
                b: vec![1.0, 0.0, 1.0]
            }
        );
    }

    #[test]
    fn growth_fails_condition3() {
        let p = Problem::new(parse("u").unwrap(), parse("0").unwrap(), 0.0, 0.0, 1.0).unwrap();
        let r = check_conditions(&p, 10.0, 11, 21).unwrap();
        assert!(!r.condition3);
        assert!(!r.passed());
        assert_eq!(r.alpha, -20.0);
    }

    #[test]
    fn non_polynomial_n_is_flagged() {
        let p = Problem::new(
            parse("-exp(u)").unwrap(),
            parse("1").unwrap(),
            0.0,
            0.0,
            1.0,
        )
        .unwrap();
        let r = check_conditions(&p, 1.0, 11, 11).unwrap();
        assert_eq!(r.condition1, PowerSeriesForm::NotPolynomial);
    }

    #[test]
    fn singular_endpoint_is_sampled_from_inside() {
        let p = Problem::new(
            parse("-(1/sqrt(x)+1)*u^2").unwrap(),
            parse("1").unwrap(),
            0.0,
            1.0,
            1.0,
        )
        .unwrap();
        let r = check_conditions(&p, 1.0, 11, 11).unwrap();
        assert_eq!(r.sample_box.x_range, (1e-9, 1.0));
        // (N u)'_u = -3 (1/sqrt(x) + 1) u^2 peaks at 0 on u = 0.
        assert_eq!(r.alpha, 0.0);
        assert!(!r.condition3);
        assert!(check_conditions(&p, 0.0, 11, 11).is_err());
        let q = Problem::new(
            parse("-u/(x-0.5)").unwrap(),
            parse("1").unwrap(),
            0.0,
            1.0,
            1.0,
        )
        .unwrap();
        assert!(matches!(
            check_conditions(&q, 1.0, 11, 11),
            Err(AnalysisError::Expr(_))
        ));
    }

    #[test]
    fn mu_invariants() {
        let p = Problem::new(
            parse("-(2+u^2)").unwrap(),
            parse("3*cos(x)").unwrap(),
            0.0,
            5.0,
            4.0,
        )
        .unwrap();
        let r = check_conditions(&p, 3.0, 101, 101).unwrap();
        assert!(r.mu >= 5.0);
        assert!(r.mu >= r.k / r.alpha - 1e-12);
        assert_eq!(r.alpha, 2.0);
    }
}
