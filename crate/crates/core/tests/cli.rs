use std::process::{Command, Output};

fn shiftbeam(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shiftbeam")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn column(csv: &str, name: &str) -> Vec<(f64, f64)> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
            (f[0], f[k])
        })
        .collect()
}

fn argmax(v: &[(f64, f64)], sign: f64) -> f64 {
    v.iter().max_by(|a, b| (sign * a.1).total_cmp(&(sign * b.1))).unwrap().0
}

#[test]
fn solve_ex1_slope_extrema_near_ends() {
    let csv = stdout(&shiftbeam(&["solve", "--epsilon", "1e-2", "--q", "2", "--N", "64"]));
    let du = column(&csv, "du");
    assert!(argmax(&du, 1.0) < 0.1, "max u′ at {}", argmax(&du, 1.0));
    assert!(argmax(&du, -1.0) > 1.9, "min u′ at {}", argmax(&du, -1.0));
}

#[test]
fn solve_ex2_second_derivative_vanishes_at_ends() {
    let csv = stdout(&shiftbeam(&["solve", "--example", "ex2", "--epsilon", "1e-2", "--q", "2", "--N", "64"]));
    let w = column(&csv, "w");
    let peak = w.iter().map(|p| p.1.abs()).fold(0.0, f64::max);
    assert!(w[0].1.abs() <= 1e-10 * peak && w.last().unwrap().1.abs() <= 1e-10 * peak);
}

#[test]
fn solve_is_deterministic() {
    let args = ["solve", "--epsilon", "1e-3", "--q", "3", "--N", "32", "--bmesh", "Shishkin"];
    assert_eq!(shiftbeam(&args).stdout, shiftbeam(&args).stdout);
}

#[test]
fn validation_errors_exit_2() {
    let o = shiftbeam(&["convergence", "--N", "60"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`N`"));
    assert_eq!(shiftbeam(&["solve", "--q", "1,2"]).status.code(), Some(2));
    assert_eq!(shiftbeam(&["solve", "--imesh", "nope"]).status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, r#"{"N": []}"#).unwrap();
    let o = shiftbeam(&["convergence", "--config", empty.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\n  \"q\": [1,\n  \"N\" 64\n}").unwrap();
    let o = shiftbeam(&["solve", "--config", broken.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));
}

#[test]
fn config_file_and_dump_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = shiftbeam(&["--dump-config", "--example", "ex2", "--q", "1,3", "--N", "16,32", "--sigma", "2.5", "solve"]);
    let text = stdout(&out);
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, &text).unwrap();
    let again = shiftbeam(&["--dump-config", "--config", path.to_str().unwrap(), "solve"]);
    assert_eq!(stdout(&again), text);
    assert!(text.contains("\"example\": \"ex2\""));
}

#[test]
fn convergence_table_and_output_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.csv");
    let o = shiftbeam(&["convergence", "--q", "1", "--N", "64,128", "--n-ref", "512", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let csv = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "q,N,energy,energy_rate,l2_u,l2_u_rate,l2_w,l2_w_rate");
    assert_eq!(lines.len(), 3);
    let rate: f64 = lines[2].split(',').nth(3).unwrap().parse().unwrap();
    assert!((rate - 1.0).abs() < 0.05);
    // failing rate check
    let o = shiftbeam(&["convergence", "--q", "1", "--N", "64,128", "--n-ref", "512", "--min-rate", "1.5"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn reference_must_dominate() {
    let o = shiftbeam(&["convergence", "--q", "1", "--N", "256", "--n-ref", "512"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn compare_meshes_has_four_columns() {
    let csv = stdout(&shiftbeam(&["compare-meshes", "--q", "2", "--N", "64", "--n-ref", "512"]));
    assert_eq!(
        csv.lines().next().unwrap(),
        "q,N,BS-BS,BS-BS_rate,BS-Shishkin,BS-Shishkin_rate,BS-weakeq,BS-weakeq_rate,BS-weakShishkin,BS-weakShishkin_rate"
    );
}

#[test]
fn greens_table() {
    let csv = stdout(&shiftbeam(&["greens"]));
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(rows.len() >= 12);
    assert!(rows.iter().any(|r| r.starts_with("det A,")));
    for r in rows.iter().filter(|r| r.contains(",1.00000e-4,") && !r.starts_with("det A")) {
        let rel: f64 = r.rsplit(',').next().unwrap().parse().unwrap();
        assert!(rel <= 1e-2, "{r}");
    }
    let m2 = stdout(&shiftbeam(&["greens", "--variant", "m2"]));
    assert!(m2.lines().skip(1).all(|r| r.starts_with("kernel residual,")));
    assert_eq!(shiftbeam(&["greens", "--variant", "m3"]).status.code(), Some(2));
}

#[test]
fn decompose_reports() {
    let csv = stdout(&shiftbeam(&["decompose", "--epsilon", "1e-2", "--q", "3", "--N", "128"]));
    assert!(csv.starts_with("x,S0,E,W,V0,u_h\n"));
    let ratio: f64 = csv
        .lines()
        .find_map(|l| l.strip_prefix("# ratio,"))
        .expect("ratio row")
        .parse()
        .unwrap();
    assert!(ratio >= 5.0);

    let flat = stdout(&shiftbeam(&["decompose", "--epsilon", "1e-2", "--d", "0"]));
    assert!(column(&flat, "W").iter().all(|p| p.1.abs() < 1e-14));

    let sweep = stdout(&shiftbeam(&["decompose", "--epsilon", "1e-2", "--sweep", "--epsilons", "1e-3,1e-4,1e-5,1e-6"]));
    let slopes = sweep.lines().find(|l| l.starts_with("# slopes,")).unwrap();
    assert_eq!(slopes, "# slopes,boundary=0.5000,inner=2.5000");
}

#[test]
fn postprocess_rates() {
    let csv = stdout(&shiftbeam(&["postprocess", "--q", "1", "--N", "64,128", "--min-rate", "1.7"]));
    assert_eq!(csv.lines().count(), 3);
}
