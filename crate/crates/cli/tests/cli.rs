use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rydpair"))
        .args(args)
        .env("RYDPAIR_DATA_DIR", data_dir())
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).expect("utf-8 output")
}

fn data_lines(o: &Output) -> Vec<String> {
    stdout(o)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("valid json")
}

fn csv_column(lines: &[String], name: &str) -> Vec<f64> {
    let idx = lines[0].split(',').position(|c| c == name).expect("column");
    lines[1..]
        .iter()
        .map(|l| l.split(',').nth(idx).unwrap().parse().unwrap())
        .collect()
}

#[test]
fn levels_table_and_header() {
    let o = run(&["levels", "Rb", "40", "50", "s", "1/2"]);
    assert!(o.status.success());
    let lines = data_lines(&o);
    assert_eq!(lines.len(), 12);
    let text = stdout(&o);
    assert!(text.contains("# sha256 quantum_defects.dat: "));
    assert!(text.contains("# config: "));
    let e = csv_column(&lines, "energy_GHz");
    assert!(e.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn bad_species_is_usage_error() {
    let o = run(&["levels", "K", "40", "50", "s", "1/2"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("species"));
}

#[test]
fn resonances_default_scan() {
    let o = run(&["resonances", "--format", "json"]);
    assert!(o.status.success());
    let doc = json(&o);
    let rows = doc["data"].as_array().unwrap();
    assert_eq!(rows.len(), 15);
    assert!(rows.iter().any(|r| r["a"] == "Rb 48s1/2"
        && r["beta"] == "Cs 50p1/2"
        && r["channel_index"] == 3
        && (r["delta_MHz"].as_f64().unwrap() + 5.71).abs() < 0.1));
    assert_eq!(doc["metadata"]["data_files"].as_array().unwrap().len(), 2);
}

#[test]
fn resonances_csv_columns() {
    let o = run(&["resonances", "--nmin", "48", "--nmax", "48"]);
    let lines = data_lines(&o);
    assert_eq!(
        lines[0],
        "channel_index,a,alpha,b,beta,delta_MHz,C3_GHz_um3,UvdW_GHz_um6,Rc_um"
    );
    assert_eq!(lines.len(), 2);
}

#[test]
fn huge_c3_floor_gives_empty_table() {
    let o = run(&["resonances", "--c3-min", "1e9"]);
    assert!(o.status.success());
    assert_eq!(data_lines(&o).len(), 1);
}

#[test]
fn invalid_channel_is_usage_error() {
    assert_eq!(
        run(&["resonances", "--channels", "1,5"]).status.code(),
        Some(2)
    );
}

#[test]
fn potential_curve() {
    let o = run(&["potential"]);
    assert!(o.status.success());
    let lines = data_lines(&o);
    let r = csv_column(&lines, "R_um");
    assert_eq!(r.len(), 100);
    assert!((r[0] - 1.0).abs() < 1e-12 && (r[99] - 20.0).abs() < 1e-9);

    let meta = run(&["potential", "--format", "json", "--r", "1"]);
    let rc = json(&meta)["metadata"]["config"]["input"]["Rc_um"]
        .as_f64()
        .unwrap();
    let far = format!("{}", 5.0 * rc);
    let o = run(&["potential", "--r", &far]);
    let lines = data_lines(&o);
    let exact = csv_column(&lines, "U_exact_MHz")[0];
    let vdw = csv_column(&lines, "U_vdW_MHz")[0];
    assert!(((exact - vdw) / vdw).abs() < 0.01);
}

#[test]
fn potential_rejects_empty_or_bad_separations() {
    assert_eq!(run(&["potential", "--points", "0"]).status.code(), Some(2));
    assert_eq!(run(&["potential", "--r", "-1"]).status.code(), Some(2));
}

#[test]
fn angular_cs_pair_profile() {
    let o = run(&["angular", "--points", "9"]);
    assert!(o.status.success());
    let lines = data_lines(&o);
    let theta = csv_column(&lines, "theta_deg");
    let u = csv_column(&lines, "U_GHz");
    let r6 = 12.7f64.powi(6);
    for (t, u) in theta.iter().zip(&u) {
        let expect = 3740.0 + 225.0 * t.to_radians().sin().powi(2);
        assert!((u * r6 / expect - 1.0).abs() < 0.05);
    }
    for i in 0..u.len() {
        assert!((u[i] - u[u.len() - 1 - i]).abs() <= 1e-12 * u[i].abs());
    }
}

#[test]
fn angular_unknown_spin_is_usage_error() {
    assert_eq!(
        run(&["angular", "--spin", "sideways"]).status.code(),
        Some(2)
    );
}

#[test]
fn budget_defaults() {
    let o = run(&["budget"]);
    assert!(o.status.success());
    let b = &json(&o)["data"];
    assert_eq!(b["dominant"], "transfer_error");
    assert!((b["transfer_error"].as_f64().unwrap() - 0.0012).abs() < 0.00018);
    assert!((b["couplings"]["u_rbcs_mhz"].as_f64().unwrap() - 96.8).abs() < 4.84);
}

#[test]
fn budget_larger_spacing_doubles_ratio() {
    let base = json(&run(&["budget"]))["data"]["coupling_ratio"]
        .as_f64()
        .unwrap();
    let wide = json(&run(&["budget", "--d", "5.0"]))["data"]["coupling_ratio"]
        .as_f64()
        .unwrap();
    let gain = wide / base;
    assert!((1.5..2.5).contains(&gain), "gain {gain}");
}

#[test]
fn budget_negative_spacing_is_usage_error() {
    assert_eq!(run(&["budget", "--d", "-1"]).status.code(), Some(2));
}

#[test]
fn budget_table_and_csv() {
    let t = run(&["budget", "--format", "table"]);
    assert!(stdout(&t).contains("dominant"));
    let c = run(&["budget", "--format", "csv"]);
    assert!(data_lines(&c)
        .iter()
        .any(|l| l.starts_with("crosstalk.ratio,")));
    assert_eq!(
        run(&["levels", "Rb", "40", "41", "s", "1/2", "--format", "table"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn output_is_deterministic() {
    let a = run(&[
        "resonances",
        "--pair",
        "CsCs",
        "--defect-frac",
        "0.002",
        "--c3-min",
        "0.5",
    ]);
    let b = run(&[
        "resonances",
        "--pair",
        "CsCs",
        "--defect-frac",
        "0.002",
        "--c3-min",
        "0.5",
    ]);
    assert_eq!(a.stdout, b.stdout);
    let s = run(&[
        "resonances",
        "--pair",
        "CsCs",
        "--defect-frac",
        "0.002",
        "--c3-min",
        "0.5",
        "--sequential",
    ]);
    assert_eq!(data_lines(&a), data_lines(&s));
}

#[test]
fn missing_data_is_data_error() {
    let o = run(&[
        "--data-dir",
        "/nonexistent/rydpair",
        "levels",
        "Rb",
        "40",
        "41",
        "s",
        "1/2",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn malformed_data_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("quantum_defects.dat"),
        "Rb 0 1/2 not-a-number\n",
    )
    .unwrap();
    std::fs::copy(
        data_dir().join("lifetimes.dat"),
        dir.path().join("lifetimes.dat"),
    )
    .unwrap();
    let o = run(&[
        "--data-dir",
        dir.path().to_str().unwrap(),
        "levels",
        "Rb",
        "40",
        "41",
        "s",
        "1/2",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn level_outside_data_is_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let defects = std::fs::read_to_string(data_dir().join("quantum_defects.dat")).unwrap();
    let rb_only: String = defects
        .lines()
        .filter(|l| !l.starts_with("Cs"))
        .map(|l| format!("{l}\n"))
        .collect();
    std::fs::write(dir.path().join("quantum_defects.dat"), rb_only).unwrap();
    std::fs::copy(
        data_dir().join("lifetimes.dat"),
        dir.path().join("lifetimes.dat"),
    )
    .unwrap();
    let o = run(&[
        "--data-dir",
        dir.path().to_str().unwrap(),
        "levels",
        "Cs",
        "40",
        "41",
        "s",
        "1/2",
    ]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn writes_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("budget.json");
    let o = run(&["budget", "--output", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert!(doc["metadata"]["version"].is_string());
}
