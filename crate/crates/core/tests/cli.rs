//! End-to-end checks of the `fdtest` binary.

use std::path::Path;
use std::process::{Command, Output};

use fdtest::io::read_table_file;

fn fdtest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fdtest")).args(args).output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Four units in two groups on a 32-point grid.
fn write_small_data(dir: &Path) {
    let mut csv = String::from("day,a,b,c,d\n");
    for l in 1..=32 {
        let t = l as f64;
        let vals: Vec<String> = (0..4)
            .map(|k| format!("{}", (t * 0.2 * (k + 1) as f64).sin() + 0.1 * k as f64 * t.cos()))
            .collect();
        csv.push_str(&format!("{l},{}\n", vals.join(",")));
    }
    std::fs::write(dir.join("curves.csv"), csv).unwrap();
    std::fs::write(
        dir.join("meta.csv"),
        "unit,group,covariate\na,west,1.0\nb,west,2.5\nc,east,1.5\nd,east,3.0\n",
    )
    .unwrap();
}

#[test]
fn decompose_writes_one_row_per_coefficient() {
    let dir = tempfile::tempdir().unwrap();
    write_small_data(dir.path());
    let out = dir.path().join("coef.csv");
    let result = fdtest(&[
        "decompose",
        "--input",
        path_str(&dir.path().join("curves.csv")),
        "--p",
        "9",
        "--out",
        path_str(&out),
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let table = read_table_file(&out).unwrap();
    assert_eq!(table.columns, vec!["replicate", "j", "unit", "coefficient"]);
    assert_eq!(table.rows.len(), 9 * 4);
    assert_eq!(table.header.get("p"), Some("9"));
    assert_eq!(table.header.get("interpolated"), Some("false"));
}

#[test]
fn test_report_is_self_describing() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("day");
    let units = 12;
    for k in 0..units {
        csv.push_str(&format!(",u{k}"));
    }
    csv.push('\n');
    for l in 1..=64 {
        csv.push_str(&l.to_string());
        for k in 0..units {
            let v = ((l * (k + 3)) as f64 * 0.37).sin() + 0.05 * k as f64;
            csv.push_str(&format!(",{v}"));
        }
        csv.push('\n');
    }
    std::fs::write(dir.path().join("curves.csv"), csv).unwrap();
    let mut meta = String::from("unit,group,covariate\n");
    for k in 0..units {
        meta.push_str(&format!("u{k},{},{}\n", ["x", "y", "z"][k % 3], 10.0 + k as f64));
    }
    std::fs::write(dir.path().join("meta.csv"), meta).unwrap();
    let out = dir.path().join("report.csv");
    let result = fdtest(&[
        "test",
        "--input",
        path_str(&dir.path().join("curves.csv")),
        "--meta",
        path_str(&dir.path().join("meta.csv")),
        "--p",
        "15",
        "--iters",
        "5000",
        "--pairs",
        "x:y",
        "--out",
        path_str(&out),
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let table = read_table_file(&out).unwrap();
    assert_eq!(table.header.get("statistic"), Some("F_global = sum_{j=1}^{15} w_j F_j"));
    assert_eq!(table.header.get("pairs"), Some("x:y"));
    // one slope contrast
    assert_eq!(table.header.get("nu"), Some("1"));
    // n N - P = 12 - 6
    assert_eq!(table.header.get("df2"), Some("6"));
    let weights = table.numeric_column("weight").unwrap();
    let f = table.numeric_column("f").unwrap();
    let recomputed: f64 = weights.iter().zip(&f).map(|(w, f)| w * f).sum();
    let reported: f64 = table.header.get("f_global").unwrap().parse().unwrap();
    assert!((recomputed - reported).abs() <= 1e-12 * reported.abs().max(1.0));
    let p: f64 = table.header.get("p_value").unwrap().parse().unwrap();
    assert!(p > 0.0 && p <= 1.0);
}

#[test]
fn figure4_output_is_byte_identical_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("small.toml");
    std::fs::write(&config, "p = 31\nn = 16\niters = 2000\ngrid-points = 3\n").unwrap();
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let result = fdtest(&["figure4", "--config", path_str(&config), "--seed", seed, "--out", path_str(&out)]);
        assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
        std::fs::read(out).unwrap()
    };
    let a = run("a.csv", "3");
    let b = run("b.csv", "3");
    let c = run("c.csv", "4");
    assert_eq!(a, b);
    assert_ne!(a, c);
    let table = read_table_file(&dir.path().join("a.csv")).unwrap();
    assert_eq!(table.rows.len(), 2 * 3 * 6);
    assert_eq!(table.header.get("seed"), Some("3"));
    assert_eq!(table.header.get("null_iterations"), Some("2000"));
}

#[test]
fn power_command_reports_a_probability() {
    let result = fdtest(&[
        "power",
        "--p",
        "31",
        "--n",
        "16",
        "--iters",
        "2000",
        "--stat",
        "an",
        "--alternative",
        "spiked:j0=2",
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let table = fdtest::io::read_table(result.stdout.as_slice()).unwrap();
    let power = table.numeric_column("power").unwrap()[0];
    assert!((0.0..=1.0).contains(&power));
    assert_eq!(table.rows[0][0], "an");
    assert_eq!(table.header.get("lambda_calibrated"), Some("true"));
}

#[test]
fn rates_command_columns() {
    let result = fdtest(&["rates", "--n-max-log2", "12"]);
    assert!(result.status.success());
    let table = fdtest::io::read_table(result.stdout.as_slice()).unwrap();
    for c in ["n", "seq_i", "seq_ii", "delta_hat"] {
        assert!(table.column(c).is_some(), "missing {c}");
    }
    assert_eq!(table.rows.len(), 7);
}

#[test]
fn exit_codes() {
    // usage error
    assert_eq!(fdtest(&["decompose", "--bogus"]).status.code(), Some(1));
    // configuration errors are aggregated into one message
    let bad = fdtest(&["figure4", "--alpha", "2", "--iters", "3"]);
    assert_eq!(bad.status.code(), Some(1));
    let msg = String::from_utf8_lossy(&bad.stderr);
    assert!(msg.contains("alpha") && msg.contains("iterations"), "{msg}");
    // data errors
    assert_eq!(fdtest(&["decompose", "--input", "/nonexistent/curves.csv"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let bad_csv = dir.path().join("bad.csv");
    std::fs::write(&bad_csv, "t,a\n1,0\n2,x\n").unwrap();
    let parse = fdtest(&["decompose", "--input", path_str(&bad_csv), "--p", "1"]);
    assert_eq!(parse.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&parse.stderr).contains("row 3, column 2"));
    // numerical failure: more frequencies than grid points
    let ok_csv = dir.path().join("ok.csv");
    std::fs::write(&ok_csv, "t,a\n1,0\n2,1\n3,0\n").unwrap();
    assert_eq!(fdtest(&["decompose", "--input", path_str(&ok_csv), "--p", "5"]).status.code(), Some(3));
    // help is not an error
    assert_eq!(fdtest(&["--help"]).status.code(), Some(0));
}
