use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use fdmethod::cli::read_csv;

fn example(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("examples")
        .join(name)
}

fn fdm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdm"))
        .args(args)
        .output()
        .expect("failed to run fdm")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// `key = value` lookup in a report.
fn value(report: &str, key: &str) -> f64 {
    report
        .lines()
        .find_map(|l| {
            l.strip_prefix(key)?
                .trim_start()
                .strip_prefix('=')?
                .split('#')
                .next()
        })
        .unwrap_or_else(|| panic!("{key} missing from:\n{report}"))
        .trim()
        .parse()
        .unwrap()
}

fn write_problem(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn column<'a>(table: &'a [(String, Vec<f64>)], name: &str) -> &'a [f64] {
    &table
        .iter()
        .find(|c| c.0 == name)
        .unwrap_or_else(|| panic!("no column {name}"))
        .1
}

fn sup(values: &[f64]) -> f64 {
    values
        .iter()
        .filter(|v| v.is_finite())
        .fold(0.0, |m, v| m.max(v.abs()))
}

fn header(csv: &str) -> &str {
    csv.lines().next().unwrap()
}

#[test]
fn solve_example1_golden_header_and_shape() {
    let o = fdm(&[
        "solve",
        example("example1.prob").to_str().unwrap(),
        "--m",
        "3",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    assert_eq!(
        header(&csv),
        "x,u0term,u1term,u2term,u3term,sum0,sum1,sum2,sum3,exact,delta0,delta1,delta2,delta3,nu0,nu1,nu2,nu3"
    );
    let table = read_csv(&csv).unwrap();
    let xs = column(&table, "x");
    assert_eq!(xs.len(), 144 * 32 + 1);
    assert_eq!(xs[0], 0.0);
    assert!((xs[xs.len() - 1] - 48.0).abs() < 1e-12);
    assert!(xs.windows(2).all(|w| w[1] > w[0]));
    assert!(sup(column(&table, "delta3")) < sup(column(&table, "delta0")));
}

#[test]
fn solve_m0_has_only_base_columns() {
    let o = fdm(&[
        "solve",
        example("example1.prob").to_str().unwrap(),
        "--m",
        "0",
    ]);
    assert!(o.status.success());
    assert_eq!(header(&stdout(&o)), "x,u0term,sum0,exact,delta0,nu0");
}

#[test]
fn solve_example2_discrepancy_decreases() {
    let o = fdm(&[
        "solve",
        example("example2.prob").to_str().unwrap(),
        "--m",
        "2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    assert_eq!(
        header(&csv),
        "x,u0term,u1term,u2term,sum0,sum1,sum2,nu0,nu1,nu2"
    );
    let table = read_csv(&csv).unwrap();
    let xs = column(&table, "x");
    let inside = |name: &str| -> Vec<f64> {
        column(&table, name)
            .iter()
            .zip(xs)
            .filter(|(_, &x)| x > 0.0)
            .map(|(v, _)| *v)
            .collect()
    };
    let (n0, n2) = (sup(&inside("nu0")), sup(&inside("nu2")));
    assert!(n2 < n0, "{n2} vs {n0}");
    assert!(inside("nu2").iter().all(|v| v.is_finite()));
}

#[test]
fn solve_with_reference_column() {
    let o = fdm(&[
        "solve",
        example("example2.prob").to_str().unwrap(),
        "--m",
        "1",
        "--reference",
        "--window",
        "0.5",
        "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    assert_eq!(
        header(&csv),
        "x,u0term,u1term,sum0,sum1,reference,delta0,delta1,nu0,nu1"
    );
    let table = read_csv(&csv).unwrap();
    assert!(column(&table, "x")
        .iter()
        .all(|&x| (0.5 - 1e-12..=1.0 + 1e-12).contains(&x)));
    assert_eq!(column(&table, "x").len(), 10 * 32 + 1);
}

#[test]
fn solve_output_file_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let o = fdm(&[
            "solve",
            example("example1.prob").to_str().unwrap(),
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(o.status.success());
        assert!(o.stdout.is_empty());
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn adm_diverges_on_example1_window() {
    let o = fdm(&[
        "adm",
        example("example1.prob").to_str().unwrap(),
        "--m",
        "3",
        "--window",
        "0",
        "6",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = read_csv(&stdout(&o)).unwrap();
    let errors: Vec<f64> = (0..4)
        .map(|j| sup(column(&table, &format!("delta{j}"))))
        .collect();
    assert!(errors[3] > errors[0], "{errors:?}");
    assert_eq!(column(&table, "x").len(), 18 * 32 + 1);
}

#[test]
fn adm_without_truth_omits_error_columns() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_problem(
        dir.path(),
        "p.prob",
        "N = \"-(1+u^2)\"\nphi = \"cos(x)\"\nu0 = 0\nh = 0.25\nn = 8\nadm_linear = -1\n",
    );
    let o = fdm(&["adm", f.to_str().unwrap(), "--m", "0"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(header(&stdout(&o)), "x,u0term,sum0,nu0");
}

#[test]
fn compare_ratios_on_example1() {
    let o = fdm(&[
        "compare",
        example("example1.prob").to_str().unwrap(),
        "--m",
        "3",
        "--window",
        "0",
        "6",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.starts_with("m,fd_sup_error,adm_sup_error\n"));
    assert!(value(&out, "fd_ratio") < 1.0);
    assert!(value(&out, "adm_ratio") >= 1.0);
}

#[test]
fn compare_degenerate_window_is_zero() {
    let o = fdm(&[
        "compare",
        example("example1.prob").to_str().unwrap(),
        "--window",
        "0",
        "0",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let rows: Vec<&str> = out
        .lines()
        .skip(1)
        .take_while(|l| !l.starts_with('#'))
        .collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[1].parse::<f64>().unwrap(), 0.0);
        assert_eq!(fields[2].parse::<f64>().unwrap(), 0.0);
    }
}

#[test]
fn compare_linear_problem_against_reference() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_problem(
        dir.path(),
        "lin.prob",
        "N = \"-2\"\nphi = \"cos(3*x)\"\nu0 = 0.7\nh = 0.25\nn = 12\nadm_linear = -2\n",
    );
    let out_csv = dir.path().join("cmp.csv");
    let o = fdm(&[
        "compare",
        f.to_str().unwrap(),
        "--m",
        "2",
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("# truth = reference"));
    let table = read_csv(&std::fs::read_to_string(&out_csv).unwrap()).unwrap();
    for name in ["fd_sup_error", "adm_sup_error"] {
        assert!(
            column(&table, name).iter().all(|&e| e < 1e-6),
            "{name}: {table:?}"
        );
    }
}

#[test]
fn check_example1_passes() {
    let o = fdm(&[
        "check",
        example("example1.prob").to_str().unwrap(),
        "--samples",
        "401",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(value(&out, "alpha"), 1.0);
    assert!((value(&out, "mu") - 2.126).abs() < 1e-3);
    assert!(out.contains("passed = true"));
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let grow = write_problem(
        dir.path(),
        "grow.prob",
        "N = \"u\"\nphi = \"0\"\nu0 = 1\nh = 0.5\nn = 2\n",
    );
    let o = fdm(&["check", grow.to_str().unwrap(), "--samples", "51"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("condition3 = fail"));

    let bad = write_problem(
        dir.path(),
        "bad.prob",
        "N = \"-(1+u^\"\nphi = \"0\"\nu0 = 1\nh = 0.5\nn = 2\n",
    );
    let o = fdm(&["check", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("column"), "{}", stderr(&o));

    let o = fdm(&["check", dir.path().join("missing.prob").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = fdm(&["solve"]);
    assert_eq!(o.status.code(), Some(1));
    let o = fdm(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn check_singular_example2_fails_condition3() {
    let o = fdm(&[
        "check",
        example("example2.prob").to_str().unwrap(),
        "--samples",
        "201",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert_eq!(value(&stdout(&o), "alpha"), 0.0);
}

#[test]
fn radius_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_problem(
        dir.path(),
        "cf.prob",
        "N = \"-u\"\nphi = \"0\"\nu0 = 1\nh = 0.5\nn = 2\nmajorant = 0, 1\n",
    );
    let o = fdm(&["radius", f.to_str().unwrap(), "--sigma", "1", "--v0", "1"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert!((value(&out, "g_max") - 4.0 / 3.0).abs() < 1e-8);
    assert!((value(&out, "R") - 0.125).abs() < 1e-8);
    assert_eq!(value(&out, "Sigma"), 0.5);
    assert!(out.contains("caveat"));
}

#[test]
fn radius_example1_prints_constants_and_caveat() {
    let o = fdm(&[
        "radius",
        example("example1.prob").to_str().unwrap(),
        "--auto",
    ]);
    let out = stdout(&o);
    for key in ["mu", "alpha", "k", "mu1", "sigma", "Sigma"] {
        assert!(value(&out, key).is_finite(), "{key}");
    }
    assert!(out.contains("caveat"));
    let mu1 = value(&out, "mu1");
    assert!(mu1 > 0.0 && mu1 <= 4.0);
    // The derived sigma is too large for the first maximum of z to be positive.
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("no certified radius"));
}

#[test]
fn radius_nonpolynomial_needs_majorant() {
    let dir = tempfile::tempdir().unwrap();
    let f = write_problem(
        dir.path(),
        "np.prob",
        "N = \"-exp(u)\"\nphi = \"1\"\nu0 = 0\nh = 0.5\nn = 2\n",
    );
    let o = fdm(&["radius", f.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("majorant"));
}

#[test]
fn plot_curves_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("e1.csv");
    assert!(fdm(&[
        "solve",
        example("example1.prob").to_str().unwrap(),
        "--out",
        csv.to_str().unwrap()
    ])
    .status
    .success());
    let svg = dir.path().join("e1.svg");
    let args = [
        "plot",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
        "--columns",
        "delta0,delta1,delta2,delta3",
        "--log",
    ];
    assert!(fdm(&args).status.success());
    let first = std::fs::read_to_string(&svg).unwrap();
    assert!(first.contains(r#"viewBox="0 0 800 600""#));
    assert_eq!(first.matches("stroke-width=\"1.2\"").count(), 4);
    assert!(fdm(&args).status.success());
    assert_eq!(first, std::fs::read_to_string(&svg).unwrap());

    let o = fdm(&[
        "plot",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
        "--columns",
        "",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let o = fdm(&[
        "plot",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
        "--columns",
        "nope",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nope"));
}

#[test]
fn plot_example2_discrepancies() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("e2.csv");
    assert!(fdm(&[
        "solve",
        example("example2.prob").to_str().unwrap(),
        "--out",
        csv.to_str().unwrap()
    ])
    .status
    .success());
    let svg = dir.path().join("e2.svg");
    let o = fdm(&[
        "plot",
        csv.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
        "--columns",
        "nu0,nu1,nu2",
        "--log",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        std::fs::read_to_string(&svg)
            .unwrap()
            .matches("stroke-width=\"1.2\"")
            .count(),
        3
    );
}
