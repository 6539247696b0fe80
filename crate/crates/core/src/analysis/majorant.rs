use crate::expr::Jet;
use crate::fdcore::Problem;

use super::conditions::{linspace, ConditionReport};
use super::AnalysisError;

/// Maximises a unimodal `f` on `[a, b]` by golden-section search.
pub(crate) fn golden_max(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
) -> Result<(f64, f64), AnalysisError> {
    if !(b > a) {
        return Err(AnalysisError::Invalid(format!("empty bracket [{a}, {b}]")));
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if hi - lo <= rel_tol * (lo.abs() + hi.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    Ok(if f1 >= f2 { (x1, f1) } else { (x2, f2) })
}

/// `alpha / (2 B_bar + alpha^2)` capped by `4 / alpha`.
pub fn step_bound(alpha: f64, b_bar: f64) -> Result<f64, AnalysisError> {
    if !(alpha > 0.0) {
        return Err(AnalysisError::NonPositiveAlpha(alpha));
    }
    if !(b_bar >= 0.0) {
        return Err(AnalysisError::Invalid(format!(
            "B_bar must be non-negative, got {b_bar}"
        )));
    }
    Ok((4.0 / alpha).min(alpha / (2.0 * b_bar + alpha * alpha)))
}

/// Constants of the per-subinterval estimates, sampled on
/// `[x0, x_end] x [-mu, mu]` for grid step `h`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepConstants {
    pub h: f64,
    pub alpha: f64,
    pub k: f64,
    pub mu: f64,
    pub n_max: f64,
    pub b: f64,
    pub c: f64,
    pub p_bar: f64,
    pub b_bar: f64,
    pub d_bar: f64,
    pub mu1: f64,
    /// The undefined symbol `Q` of the derivative bound, a free setting.
    pub q: f64,
    pub sigma: f64,
}

pub fn step_constants(
    p: &Problem,
    report: &ConditionReport,
    h: f64,
    q: f64,
    x_samples: usize,
    u_samples: usize,
) -> Result<StepConstants, AnalysisError> {
    let alpha = report.alpha;
    if !(alpha > 0.0) {
        return Err(AnalysisError::NonPositiveAlpha(alpha));
    }
    if !(h > 0.0) || x_samples < 2 || u_samples < 2 {
        return Err(AnalysisError::Invalid(
            "need h > 0 and at least two samples per axis".into(),
        ));
    }
    let (mu, k) = (report.mu, report.k);
    let us: Vec<f64> = linspace(-mu, mu, u_samples).collect();
    let (mut n_max, mut b, mut c) = (0.0_f64, 0.0_f64, 0.0_f64);
    for x in linspace(p.x0, p.x_end, x_samples) {
        for &u in &us {
            let (n, n_u) = p.n.eval_du(x, u)?;
            n_max = n_max.max(n.abs());
            b = b.max(n_u.abs() * (n.abs() * mu + k));
            c = c.max(n_u.abs() * mu);
        }
    }
    let grow = (n_max * h).exp();
    let p_bar = c + n_max * grow * (1.0 + h * c);
    let b_bar = b / 2.0 + c * p_bar / 2.0;
    let d_bar = 1.0 + h * (c / 2.0) * (1.0 + n_max * h * grow);
    let mu1 = step_bound(alpha, b_bar)?;
    let first = (1.0 + b_bar * mu1 * mu1) * (2.0 / alpha) * d_bar + mu1 * d_bar;
    let second = (p_bar * d_bar * (2.0 / alpha) + q / alpha + 1.0) * (c / alpha).exp();
    Ok(StepConstants {
        h,
        alpha,
        k,
        mu,
        n_max,
        b,
        c,
        p_bar,
        b_bar,
        d_bar,
        mu1,
        q,
        sigma: first.max(second),
    })
}

/// Scalar majorant `N~(u) = sum B_i u^i` with the constants of the V-sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorantSpec {
    pub b: Vec<f64>,
    pub v0: f64,
    pub sigma: f64,
    /// `sigma / (1 + sigma V0 N~'(V0))`
    pub sigma_big: f64,
    pub h_candidates: Vec<f64>,
}

impl MajorantSpec {
    pub fn new(b: Vec<f64>, v0: f64, sigma: f64) -> Result<MajorantSpec, AnalysisError> {
        let mut spec = MajorantSpec {
            b,
            v0,
            sigma,
            sigma_big: 0.0,
            h_candidates: Vec::new(),
        };
        spec.sigma_big = sigma / (1.0 + sigma * v0 * spec.n_tilde_prime(v0));
        spec.validate()?;
        Ok(spec)
    }

    /// Uses an explicit `Sigma` (which may be infinite) instead of deriving it.
    pub fn with_sigma_big(mut self, sigma_big: f64) -> Result<MajorantSpec, AnalysisError> {
        self.sigma_big = sigma_big;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<(), AnalysisError> {
        if self.b.is_empty() || self.b.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(AnalysisError::Invalid(
                "majorant coefficients must be finite and non-negative".into(),
            ));
        }
        if !(self.v0 > 0.0) || !self.v0.is_finite() {
            return Err(AnalysisError::Invalid(format!(
                "V0 must be positive, got {}",
                self.v0
            )));
        }
        if !(self.sigma > 0.0) || !(self.sigma_big > 0.0) {
            return Err(AnalysisError::Invalid(
                "sigma and Sigma must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn n_tilde(&self, g: f64) -> f64 {
        self.b.iter().rev().fold(0.0, |acc, &c| acc * g + c)
    }

    pub fn n_tilde_prime(&self, g: f64) -> f64 {
        self.b
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(0.0, |acc, (i, &c)| acc * g + i as f64 * c)
    }

    /// `N~` evaluated on a jet.
    fn n_tilde_jet(&self, u: &Jet) -> Jet {
        let k = u.order();
        self.b.iter().rev().fold(Jet::constant(0.0, k), |acc, &c| {
            &(&acc * u) + &Jet::constant(c, k)
        })
    }

    fn n_tilde_prime_jet(&self, u: &Jet) -> Jet {
        let k = u.order();
        self.b
            .iter()
            .enumerate()
            .skip(1)
            .rev()
            .fold(Jet::constant(0.0, k), |acc, (i, &c)| {
                &(&acc * u) + &Jet::constant(i as f64 * c, k)
            })
    }

    /// `z(g) = [(g - V0)/Sigma - (N~(g) - N~(V0)) g] / (g^2 N~'(g))`
    pub fn z(&self, g: f64) -> f64 {
        let lin = if self.sigma_big.is_infinite() {
            0.0
        } else {
            (g - self.v0) / self.sigma_big
        };
        (lin - (self.n_tilde(g) - self.n_tilde(self.v0)) * g) / (g * g * self.n_tilde_prime(g))
    }

    fn z_jet(&self, g: f64, order: usize) -> Jet {
        let gj = Jet::variable(g, order);
        let lin = if self.sigma_big.is_infinite() {
            Jet::constant(0.0, order)
        } else {
            (&gj - &Jet::constant(self.v0, order)).scale(1.0 / self.sigma_big)
        };
        let dn = &self.n_tilde_jet(&gj) - &Jet::constant(self.n_tilde(self.v0), order);
        let num = &lin - &(&dn * &gj);
        let den = &(&gj * &gj) * &self.n_tilde_prime_jet(&gj);
        num.div(&den)
            .unwrap_or_else(|_| Jet::constant(f64::NAN, order))
    }
}

/// `V_0..V_m` with `V_0 = mu` and
/// `V_{j+1} = sigma { sum_{p=1}^{j} A_{j+1-p}(N~) V_p + sum_{p=0}^{j} A_{j-p}(N~' u) V_p
///            + V_0 A_{j+1}(N~; V_0, .., V_j, 0) }`.
pub fn majorant_sequence(spec: &MajorantSpec, m: usize) -> Result<Vec<f64>, AnalysisError> {
    spec.validate()?;
    let mut v = vec![spec.v0];
    for j in 0..m {
        let mut ext = v.clone();
        ext.push(0.0);
        let a_n = spec
            .n_tilde_jet(&Jet::variable(spec.v0, j + 1))
            .compose(&Jet::from_coeffs(ext));
        let u = Jet::variable(spec.v0, j);
        let a_d = (&spec.n_tilde_prime_jet(&u) * &u).compose(&Jet::from_coeffs(v.clone()));
        let mut acc = spec.v0 * a_n[j + 1];
        for p in 1..=j {
            acc += a_n[j + 1 - p] * v[p];
        }
        for p in 0..=j {
            acc += a_d[j - p] * v[p];
        }
        v.push(spec.sigma * acc);
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadiusReport {
    pub g_max: f64,
    /// `z(g_max)`
    pub r: f64,
    pub mu1: Option<f64>,
    pub admissible_h: Option<f64>,
    /// Central-difference slope of `z` at `V0`.
    pub slope_at_v0: f64,
    /// `1 / (sigma V0^2 N~'(V0))`
    pub expected_slope: f64,
}

/// Locates the first interior maximum of `z(g)` on `(V0, V0 2^40]`.
pub fn radius(spec: &MajorantSpec, mu1: Option<f64>) -> Result<RadiusReport, AnalysisError> {
    spec.validate()?;
    let v0 = spec.v0;
    if !(spec.n_tilde_prime(v0) > 0.0) {
        return Err(AnalysisError::NoCertifiedRadius(
            "N~' vanishes at V0 (no u-dependence in the majorant)".into(),
        ));
    }
    let per_doubling = 8;
    let gs: Vec<f64> = (0..=40 * per_doubling)
        .map(|t| v0 * 2f64.powf(t as f64 / per_doubling as f64))
        .collect();
    let zs: Vec<f64> = gs
        .iter()
        .enumerate()
        .map(|(t, &g)| if t == 0 { 0.0 } else { spec.z(g) })
        .collect();
    let peak = (1..zs.len() - 1).find(|&t| zs[t] > zs[t - 1] && zs[t] >= zs[t + 1]);
    let Some(t) = peak else {
        return Err(AnalysisError::NoCertifiedRadius(format!(
            "z(g) has no interior maximum on (V0, V0*2^40] (z at the far end: {:.3e})",
            zs[zs.len() - 1]
        )));
    };
    let (mut g_max, _) = golden_max(|g| spec.z(g), gs[t - 1], gs[t + 1], 1e-12)?;
    // Newton on z' with jet derivatives removes the golden-section plateau.
    for _ in 0..8 {
        let jet = spec.z_jet(g_max, 2);
        let (d1, d2) = (jet.derivative(1), jet.derivative(2));
        if !(d2 < 0.0) {
            break;
        }
        let next = g_max - d1 / d2;
        if !(next > gs[t - 1] && next < gs[t + 1]) {
            break;
        }
        let done = (next - g_max).abs() <= 1e-15 * g_max;
        g_max = next;
        if done {
            break;
        }
    }
    let r = spec.z(g_max);
    if !(r > 0.0) {
        return Err(AnalysisError::NoCertifiedRadius(format!(
            "the first maximum of z(g) is not positive (z({g_max:.6e}) = {r:.3e})"
        )));
    }
    let dh = 1e-5 * v0;
    let slope_at_v0 = (spec.z(v0 + dh) - spec.z(v0 - dh)) / (2.0 * dh);
    let expected_slope = 1.0 / (spec.sigma * v0 * v0 * spec.n_tilde_prime(v0));
    Ok(RadiusReport {
        g_max,
        r,
        mu1,
        admissible_h: mu1.map(|m| m.min(r)),
        slope_at_v0,
        expected_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::check_conditions;
    use crate::expr::parse;
    use proptest::prelude::*;

    fn linear_spec() -> MajorantSpec {
        MajorantSpec::new(vec![0.0, 1.0], 1.0, 1.0).unwrap()
    }

    #[test]
    fn step_bound_examples() {
        assert_eq!(step_bound(1.0, 0.0).unwrap(), 1.0);
        assert!((step_bound(2.0, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert!((step_bound(0.1, 1.0).unwrap() - 0.1 / 2.01).abs() < 1e-15);
        assert!(matches!(
            step_bound(0.0, 1.0),
            Err(AnalysisError::NonPositiveAlpha(_))
        ));
    }

    #[test]
    fn closed_form_radius() {
        let spec = linear_spec();
        assert_eq!(spec.sigma_big, 0.5);
        // z(g) = (g - 1)(2 - g)/g^2
        for g in [1.1, 1.5, 3.0] {
            assert!((spec.z(g) - (g - 1.0) * (2.0 - g) / (g * g)).abs() < 1e-15);
        }
        let r = radius(&spec, Some(0.3)).unwrap();
        assert!((r.g_max - 4.0 / 3.0).abs() < 1e-8, "{}", r.g_max);
        assert!((r.r - 0.125).abs() < 1e-8);
        assert!((r.slope_at_v0 - 1.0).abs() < 1e-6);
        assert_eq!(r.expected_slope, 1.0);
        assert_eq!(r.admissible_h, Some(0.125f64.min(0.3)));
    }

    #[test]
    fn infinite_sigma_has_no_radius() {
        let spec = linear_spec().with_sigma_big(f64::INFINITY).unwrap();
        assert!(spec.z(2.0) < 0.0);
        assert!(matches!(
            radius(&spec, None),
            Err(AnalysisError::NoCertifiedRadius(_))
        ));
    }

    #[test]
    fn sequence_examples() {
        let v = majorant_sequence(&linear_spec(), 3).unwrap();
        assert_eq!(&v[..3], &[1.0, 1.0, 3.0]);
        let zero = MajorantSpec::new(vec![0.0, 0.0], 2.0, 1.5).unwrap();
        assert_eq!(
            majorant_sequence(&zero, 4).unwrap(),
            vec![2.0, 0.0, 0.0, 0.0, 0.0]
        );
        assert_eq!(majorant_sequence(&linear_spec(), 0).unwrap(), vec![1.0]);
    }

    /// Coefficients of `g(z)` solving
    /// `g - V0 = Sigma { g [N~(g) - N~(V0)] + z g^2 N~'(g) }` order by order.
    /// At order `k` the unknown `V_k` enters the right side only through
    /// `V0 N~'(V0) V_k`, so it is isolated from the remaining (non-negative) sum.
    fn implicit_oracle(spec: &MajorantSpec, m: usize) -> Vec<f64> {
        let mut v = vec![spec.v0];
        for k in 1..=m {
            let mut trial = v.clone();
            trial.push(0.0);
            let g = Jet::from_coeffs(trial);
            let dn = &spec.n_tilde_jet(&g) - &Jet::constant(spec.n_tilde(spec.v0), k);
            let mut zc = vec![0.0; k + 1];
            zc[1] = 1.0;
            let z = Jet::from_coeffs(zc);
            let rhs = &(&g * &dn) + &(&(&z * &(&g * &g)) * &spec.n_tilde_prime_jet(&g));
            let self_coeff = spec.sigma_big * spec.v0 * spec.n_tilde_prime(spec.v0);
            v.push(spec.sigma_big * rhs[k] / (1.0 - self_coeff));
        }
        v
    }

    #[test]
    fn sequence_matches_series_inversion_of_closed_form() {
        // z = w(1-w)/(1+w)^2 with g = 1 + w inverts to w = z + 3z^2 + 13z^3 + 67z^4 + ...
        let v = majorant_sequence(&linear_spec(), 4).unwrap();
        let oracle = implicit_oracle(&linear_spec(), 4);
        for (a, b) in v.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-12 * b.abs().max(1.0));
        }
        assert!(
            (v[3] - 13.0).abs() < 1e-12 && (v[4] - 67.0).abs() < 1e-11,
            "{v:?}"
        );
    }

    #[test]
    fn example1_constants() {
        let p = crate::fdcore::Problem::new(
            parse("-(1+u^2)").unwrap(),
            parse("cos(x)+sin(x)+sin(x)^3").unwrap(),
            0.0,
            0.0,
            48.0,
        )
        .unwrap();
        let report = check_conditions(&p, 10.0, 201, 201).unwrap();
        let c = step_constants(&p, &report, 1.0 / 3.0, 0.0, 201, 201).unwrap();
        let mu = report.mu;
        // |N| = 1 + u^2, |N_u| = 2|u| on |u| <= mu.
        assert!((c.n_max - (1.0 + mu * mu)).abs() < 1e-12);
        assert!((c.c - 2.0 * mu * mu).abs() < 1e-12);
        assert!((c.b - 2.0 * mu * ((1.0 + mu * mu) * mu + report.k)).abs() < 1e-9);
        assert!(c.mu1 > 0.0 && c.mu1 <= 4.0);
        assert!(c.sigma.is_finite() && c.sigma > 0.0);
    }

    proptest! {
        #[test]
        fn sequence_agrees_with_implicit_equation(
            b in prop::collection::vec(0.0f64..2.0, 2..5),
            v0 in 0.2f64..2.0,
            sigma in 0.1f64..3.0,
        ) {
            prop_assume!(b[1..].iter().any(|&c| c > 0.05));
            let spec = MajorantSpec::new(b, v0, sigma).unwrap();
            let v = majorant_sequence(&spec, 5).unwrap();
            let oracle = implicit_oracle(&spec, 5);
            for (a, o) in v.iter().zip(&oracle) {
                prop_assert!((a - o).abs() <= 1e-12 * o.abs().max(1.0), "{:?} vs {:?}", v, oracle);
            }
        }

        #[test]
        fn slope_at_v0_matches_formula(
            b in prop::collection::vec(0.0f64..2.0, 2..5),
            v0 in 0.2f64..2.0,
            sigma in 0.1f64..3.0,
        ) {
            prop_assume!(b[1] > 0.05);
            let spec = MajorantSpec::new(b, v0, sigma).unwrap();
            if let Ok(r) = radius(&spec, None) {
                prop_assert!(r.r > 0.0 && r.g_max > v0);
                prop_assert!(r.slope_at_v0 > 0.0);
                prop_assert!((r.slope_at_v0 - r.expected_slope).abs() <= 1e-6 * r.expected_slope);
            }
        }
    }
}
