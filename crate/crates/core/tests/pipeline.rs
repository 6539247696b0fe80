use std::sync::Arc;

use fdmethod::adm::adm_solve;
use fdmethod::analysis::{
    check_conditions, error_report, majorant_sequence, radius, reference_solve, step_constants,
    MajorantSpec, PowerSeriesForm, Truth,
};
use fdmethod::expr::parse;
use fdmethod::fdcore::{fd_solve_on, Problem};
use fdmethod::mesh::{uniform_grid, Mesh, Quadrature};
use proptest::prelude::*;

fn example1() -> Problem {
    Problem::new(
        parse("-(1+u^2)").unwrap(),
        parse("cos(x)+sin(x)+sin(x)^3").unwrap(),
        0.0,
        0.0,
        48.0,
    )
    .unwrap()
    .with_exact(parse("sin(x)").unwrap())
    .unwrap()
}

fn mesh(p: &Problem, h: f64, n: usize, samples: usize) -> Arc<Mesh> {
    p.mesh(
        uniform_grid(p.x0, h, n).unwrap(),
        Quadrature::new(samples).unwrap(),
    )
    .unwrap()
}

fn fd_errors(p: &Problem, h: f64, n: usize, m: usize) -> Vec<f64> {
    let sol = fd_solve_on(p, &mesh(p, h, n, 32), m).unwrap();
    let exact = p.exact.as_ref().unwrap();
    error_report(&sol.partial_sums, &Truth::Exact(exact), (p.x0, p.x_end))
        .unwrap()
        .sup_errors
}

#[test]
fn example1_ratio_is_roughly_constant() {
    let e = fd_errors(&example1(), 1.0 / 3.0, 144, 3);
    let rho = fdmethod::analysis::fit_ratio(&e).unwrap();
    assert!(rho < 1.0);
    for w in e.windows(2) {
        let r = w[1] / w[0];
        assert!(r < 1.0 && r > rho / 2.0 && r < 2.0 * rho, "{e:?} rho {rho}");
    }
}

#[test]
fn halving_h_does_not_increase_errors() {
    let p = example1();
    let coarse = fd_errors(&p, 1.0 / 3.0, 144, 3);
    let fine = fd_errors(&p, 1.0 / 6.0, 288, 3);
    for m in 1..=3 {
        assert!(
            fine[m] <= 1.1 * coarse[m],
            "m = {m}: {} vs {}",
            fine[m],
            coarse[m]
        );
    }
}

#[test]
fn base_term_bounded_for_certified_step() {
    let p = example1();
    let report = check_conditions(&p, 10.0, 401, 401).unwrap();
    let c = step_constants(&p, &report, 1.0 / 3.0, 0.0, 401, 401).unwrap();
    // The bound only tightens as h shrinks, so mu1 at h = 1/3 is admissible.
    let n = (48.0 / c.mu1).ceil() as usize;
    let h = 48.0 / n as f64;
    assert!(h <= c.mu1);
    let sol = fd_solve_on(&p, &mesh(&p, h, n, 4), 0).unwrap();
    assert!(sol.terms[0].sup_norm() <= report.mu + 1e-6);
}

#[test]
fn fd_terms_obey_the_majorant_sequence() {
    let p = example1();
    let h = 1.0 / 3.0;
    let report = check_conditions(&p, 10.0, 401, 401).unwrap();
    let c = step_constants(&p, &report, h, 0.0, 401, 401).unwrap();
    let PowerSeriesForm::Polynomial { b, .. } = report.condition1.clone() else {
        panic!("example 1 is polynomial in u");
    };
    let spec = MajorantSpec::new(b, report.mu, c.sigma).unwrap();
    let v = majorant_sequence(&spec, 3).unwrap();
    let sol = fd_solve_on(&p, &mesh(&p, h, 144, 32), 3).unwrap();
    for (j, t) in sol.terms.iter().enumerate() {
        let scale = h.powi(j as i32);
        assert!(t.sup_norm() / scale <= 1.05 * v[j], "j = {j}");
        assert!(
            (t.sup_norm() + t.derivative_sup_norm()) / scale <= 1.15 * v[j],
            "j = {j}"
        );
    }
    // rho <= h / R when a radius is certified, otherwise rho < 1 on its own.
    let rho = fdmethod::analysis::fit_ratio(&fd_errors(&p, h, 144, 3)).unwrap();
    match radius(&spec, Some(c.mu1)) {
        Ok(r) => assert!(rho <= h / r.r),
        Err(_) => assert!(rho < 1.0),
    }
}

fn reference_residual(n: &str, phi: &str, u0: f64, x_end: f64, tol: f64) -> f64 {
    let p = Problem::new(parse(n).unwrap(), parse(phi).unwrap(), 0.0, u0, x_end).unwrap();
    let r = reference_solve(&p, tol).unwrap();
    (0..=8000)
        .map(|i| {
            let x = x_end * i as f64 / 8000.0;
            let u = r.eval(x).unwrap();
            let nu = r.derivative(x).unwrap()
                - p.n.eval(x, u).unwrap() * u
                - p.phi.eval(x, 0.0).unwrap();
            nu.abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn reference_discrepancy_is_small() {
    let tol = 1e-10;
    for (n, phi, u0, x_end) in [
        ("-(1+u^2)", "cos(x)+sin(x)+sin(x)^3", 0.0, 48.0),
        ("-1", "0", 1.0, 5.0),
    ] {
        let nu = reference_residual(n, phi, u0, x_end, tol);
        assert!(nu <= 100.0 * tol, "{n}: {nu:e}");
    }
}

#[test]
fn reference_discrepancy_shrinks_with_tolerance() {
    // Long smooth steps leave the derivative of the fourth-order dense
    // output above 100 tol here; it still converges as tol^(4/5).
    let nu: Vec<f64> = [1e-6, 1e-8, 1e-10]
        .iter()
        .map(|&tol| reference_residual("-(2+sin(x))*u^2", "cos(3*x)", 0.5, 5.0, tol))
        .collect();
    assert!(nu[1] < nu[0] / 10.0 && nu[2] < nu[1] / 10.0, "{nu:?}");
}

#[test]
fn adm_with_exact_split_solves_linear_problem() {
    let p = Problem::new(
        parse("-3").unwrap(),
        parse("sin(2*x)").unwrap(),
        0.0,
        1.5,
        4.0,
    )
    .unwrap()
    .with_adm_linear(-3.0);
    let sol = adm_solve(&p, 2, &mesh(&p, 0.25, 16, 32)).unwrap();
    let exact = |x: f64| {
        let part = (3.0 * (2.0 * x).sin() - 2.0 * (2.0 * x).cos()) / 13.0;
        part + (1.5 + 2.0 / 13.0) * (-3.0 * x).exp()
    };
    for x in [0.0, 0.25, 1.75, 4.0] {
        let got = sol.partial_sums[0].eval(x).unwrap();
        assert!((got - exact(x)).abs() < 1e-9, "{x}: {got} vs {}", exact(x));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn u_independent_n_has_vanishing_corrections(
        a in 0.2f64..3.0, b in -0.5f64..0.5, w in 0.5f64..3.0, c in -2.0f64..2.0,
        u0 in -2.0f64..2.0, h in 0.05f64..0.5, n in 4usize..16,
    ) {
        let p = Problem::new(
            parse(&format!("-({a:?}+({b:?})*cos({w:?}*x))")).unwrap(),
            parse(&format!("({c:?})*sin(x)+1")).unwrap(),
            0.0, u0, h * n as f64,
        ).unwrap();
        let sol = fd_solve_on(&p, &mesh(&p, h, n, 16), 4).unwrap();
        for t in &sol.terms[1..] {
            prop_assert!(t.sup_norm() <= 1e-12);
        }
        for s in &sol.partial_sums {
            prop_assert_eq!(s.samples(), sol.terms[0].samples());
        }
    }

    #[test]
    fn base_term_is_bounded_and_terms_are_continuous(
        a in 0.5f64..3.0, b in 0.0f64..2.0, c in -3.0f64..3.0, w in 0.5f64..4.0,
        u0 in -2.0f64..2.0, h in 0.05f64..0.5, n in 4usize..24,
    ) {
        let p = Problem::new(
            parse(&format!("-({a:?}+({b:?})*u^2)")).unwrap(),
            parse(&format!("({c:?})*cos({w:?}*x)")).unwrap(),
            0.0, u0, h * n as f64,
        ).unwrap();
        let report = check_conditions(&p, 5.0, 201, 41).unwrap();
        prop_assert!(report.condition3);
        let sol = fd_solve_on(&p, &mesh(&p, h, n, 16), 3).unwrap();
        prop_assert!(sol.terms[0].sup_norm() <= report.mu + 1e-6);
        for t in &sol.terms {
            prop_assert!(t.max_node_jump() <= 1e-10);
        }
    }
}
