use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use pvrbf::document::{five_param_doc, ModelDocument};
use pvrbf::reference_module;

fn pvrbf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pvrbf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_reference_model(dir: &Path) -> String {
    let path = dir.join("module.json");
    ModelDocument::FiveParam(five_param_doc(&reference_module(), 1000.0))
        .write(&path)
        .unwrap();
    path.to_str().unwrap().to_string()
}

fn value_of(text: &str, key: &str) -> f64 {
    text.lines()
        .flat_map(|l| l.split_whitespace())
        .find_map(|w| w.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .parse()
        .unwrap()
}

#[test]
fn table1_then_eval_prints_finite_mse() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_reference_model(dir.path());
    let net = dir.path().join("m.json");
    let grid = dir.path().join("grid.csv");
    let (net, grid) = (net.to_str().unwrap(), grid.to_str().unwrap());

    let o = pvrbf(&["table1", "--which", "current", "--sigma", "1.0", "--out", net]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = pvrbf(&["gen-data", "--model", &model, "--grid", "200,600,1000", "--kind", "current", "--out", grid]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = pvrbf(&["eval", "--net", net, "--data", grid]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(value_of(&stdout(&o), "relative_mse").is_finite());
}

#[test]
fn train_with_defaults_meets_goal() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_reference_model(dir.path());
    let data = dir.path().join("train.csv");
    let net = dir.path().join("net.json");
    let (data, net) = (data.to_str().unwrap(), net.to_str().unwrap());

    let o = pvrbf(&["gen-data", "--model", &model, "--n", "5600", "--kind", "current", "--seed", "3", "--out", data]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = pvrbf(&["train", "--data", data, "--out", net]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(value_of(&stdout(&o), "relative_mse") < 0.02, "{}", stdout(&o));
    let o = pvrbf(&["eval", "--net", net, "--data", data]);
    assert!(value_of(&stdout(&o), "relative_mse") < 0.02);
}

#[test]
fn header_only_curve_is_malformed() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("empty.csv");
    fs::write(&curve, "# g_wm2=1000\n# t_kelvin=298.15\nv_volt,i_ampere,p_watt\n").unwrap();
    let o = pvrbf(&["metrics", "--curve", curve.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("malformed curve"), "{}", stderr(&o));
}

#[test]
fn unknown_flag_prints_usage_and_exits_one() {
    let o = pvrbf(&["simulate", "--frobnicate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));
}

#[test]
fn simulate_metrics_and_extract() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_reference_model(dir.path());
    let out = dir.path().join("iv.csv");
    let o = pvrbf(&["simulate", "--model", &model, "--g", "200,600,1000", "--n", "101", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let curves: Vec<String> = ["200", "600", "1000"]
        .iter()
        .map(|g| dir.path().join(format!("iv_g{g}.csv")).to_str().unwrap().to_string())
        .collect();
    for c in &curves {
        assert!(Path::new(c).exists());
    }

    let o = pvrbf(&["metrics", "--curve", &curves[2], "--area", "0.6"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let ff = value_of(&text, "fill_factor");
    assert!(ff > 0.0 && ff < 1.0);
    assert!(value_of(&text, "efficiency") > 0.0);

    let mut start = reference_module();
    start.photocurrent *= 1.5;
    start.series_resistance *= 1.5;
    let init = dir.path().join("init.json");
    ModelDocument::FiveParam(five_param_doc(&start, 1000.0)).write(&init).unwrap();
    let report = dir.path().join("fit.json");
    let mut args = vec!["extract", "--curves"];
    args.extend(curves.iter().map(String::as_str));
    args.extend(["--init", init.to_str().unwrap(), "--out", report.to_str().unwrap()]);
    let o = pvrbf(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    let fitted = ModelDocument::read(&report).unwrap().into_module().unwrap();
    let pvrbf::CircuitModel::FiveParam(m) = fitted.circuit else { panic!() };
    assert!((m.series_resistance - 0.3).abs() < 3e-3);
    assert!((m.photocurrent - 5.0).abs() < 5e-2);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_reference_model(dir.path());
    let mut files = Vec::new();
    for run in 0..2 {
        let data = dir.path().join(format!("d{run}.csv"));
        let net = dir.path().join(format!("n{run}.json"));
        let o = pvrbf(&["gen-data", "--model", &model, "--n", "400", "--kind", "power", "--seed", "9", "--out", data.to_str().unwrap()]);
        assert!(o.status.success());
        let o = pvrbf(&["train", "--data", data.to_str().unwrap(), "--epochs", "20", "--sigmas", "0.3", "--out", net.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        files.push((fs::read(&data).unwrap(), fs::read(&net).unwrap()));
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn numerical_failure_exits_two() {
    // A lossless, very sharp diode overflows the exponential well inside the sweep.
    let dir = tempfile::tempdir().unwrap();
    let mut m = reference_module();
    m.saturation_current = 1e-3;
    m.ideality = 0.1;
    m.series_resistance = 0.0;
    let path = dir.path().join("m.json");
    ModelDocument::FiveParam(five_param_doc(&m, 1000.0)).write(&path).unwrap();
    let out = dir.path().join("c.csv");
    let o = pvrbf(&["simulate", "--model", path.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn voltage_beyond_range_is_a_usage_failure() {
    let dir = tempfile::tempdir().unwrap();
    let model = write_reference_model(dir.path());
    let out = dir.path().join("c.csv");
    let o = pvrbf(&["simulate", "--model", &model, "--vmax", "120", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("100 V"));
}
