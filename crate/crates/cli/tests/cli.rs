use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn tilekit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tilekit"))
        .args(args)
        .env_remove(tilekit::OUT_ENV)
        .output()
        .unwrap()
}

fn in_dir(dir: &Path, args: &[&str]) -> Output {
    let mut all = vec!["--out", dir.to_str().unwrap(), "--no-svg"];
    all.extend_from_slice(args);
    tilekit(&all)
}

fn records(path: &Path) -> (csv::StringRecord, Vec<csv::StringRecord>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().clone();
    (header, r.records().map(Result::unwrap).collect())
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn increase_factor_prints_the_ratio() {
    let o = tilekit(&["increase-factor", "--D", "340", "--w", "150"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "1.844");
}

#[test]
fn help_and_usage_exit_codes() {
    assert_eq!(tilekit(&["--help"]).status.code(), Some(0));
    assert_eq!(tilekit(&["--version"]).status.code(), Some(0));
    assert_eq!(tilekit(&["nonsense"]).status.code(), Some(1));
    assert_eq!(tilekit(&["increase-factor", "--D", "0", "--w", "150"]).status.code(), Some(1));
}

#[test]
fn lmin_sweep_writes_one_row_per_sample() {
    let dir = TempDir::new().unwrap();
    let o = in_dir(dir.path(), &["lmin-sweep", "--axis", "D", "--from", "210", "--to", "400", "--samples", "50"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = records(&dir.path().join("lmin_D.csv"));
    assert_eq!(header, vec!["axis_value", "lmin_mm", "feasible"]);
    assert_eq!(rows.len(), 50);
    assert_eq!(rows[0][0].parse::<f64>().unwrap(), 210.0);
    assert_eq!(rows[49][0].parse::<f64>().unwrap(), 400.0);
    let lmin: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(lmin.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn angle_axes_accept_units() {
    let dir = TempDir::new().unwrap();
    let o = in_dir(dir.path(), &["lmin-sweep", "--axis", "Ps", "--from", "0 deg", "--to", "360 deg", "--samples", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = records(&dir.path().join("lmin_Ps.csv"));
    let last: f64 = rows[4][0].parse().unwrap();
    assert!((last - std::f64::consts::TAU).abs() < 1e-6);
    assert_eq!(rows[0][1], rows[4][1]);
}

#[test]
fn pattern_csv_round_trips() {
    let dir = TempDir::new().unwrap();
    let o = in_dir(dir.path(), &["pattern", "--preset", "B", "--phi-max", "0.1", "--tiles", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = records(&dir.path().join("pattern.csv"));
    assert_eq!(header, vec!["t", "tile", "delta", "phi", "r"]);
    assert_eq!(rows.len(), 2 * 201);
    // Tile 1 starts level at r0.
    assert_eq!((&rows[0][1], rows[0][3].parse::<f64>().unwrap()), ("1", 0.0));
    assert_eq!(rows[0][4].parse::<f64>().unwrap(), 70.0);
    for r in &rows {
        let phi: f64 = r[3].parse().unwrap();
        assert!((0.0..=0.1 + 1e-12).contains(&phi));
    }
}

#[test]
fn validate_reports_and_exits_by_validity() {
    let dir = TempDir::new().unwrap();
    let ok = in_dir(dir.path(), &["validate", "--preset", "B", "--spacing", "240", "--length", "100", "--phi-max", "auto"]);
    assert_eq!(ok.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("validity.json")).unwrap()).unwrap();
    assert_eq!(report["valid"], true);
    assert_eq!(report["gaps"].as_array().unwrap().len(), 2);

    let bad = in_dir(dir.path(), &["validate", "--preset", "B", "--spacing", "240", "--length", "60", "--phi-max", "0.3"]);
    assert_eq!(bad.status.code(), Some(2));
    let report: serde_json::Value = serde_json::from_str(&stdout(&bad)).unwrap();
    assert_eq!(report["valid"], false);
}

#[test]
fn simulate_writes_trajectory_and_outcome() {
    let dir = TempDir::new().unwrap();
    let o = in_dir(
        dir.path(),
        &["simulate", "--preset", "A", "--spacing", "180", "--length", "0", "--phi-max", "auto", "--seed", "3"],
    );
    assert_eq!(o.status.code(), Some(2));
    let outcome: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("outcome.json")).unwrap()).unwrap();
    assert_eq!(outcome["verdict"], "fail");
    assert_eq!(outcome["outcome"], "in-gap-failure");
    let (header, rows) = records(&dir.path().join("trajectory.csv"));
    assert_eq!(header, vec!["t", "x_mm", "z_mm", "v_mm_s", "status"]);
    assert!(!rows.is_empty());
    assert_eq!(&rows.last().unwrap()[4], "in-gap-failure");
}

#[test]
fn refused_pattern_exits_two_with_report() {
    let dir = TempDir::new().unwrap();
    let o = in_dir(dir.path(), &["simulate", "--preset", "B", "--spacing", "240", "--length", "100", "--phi-max", "0.4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(dir.path().join("validity.json").exists());
    assert!(!dir.path().join("outcome.json").exists());
}

#[test]
fn config_errors_exit_one_and_name_every_problem() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[array]\nspacing = \"-3 mm\"\ncolour = 1\n[pattern]\npreset = \"Z\"\n").unwrap();
    let o = tilekit(&["--config", cfg.to_str().unwrap(), "validate"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("array.spacing") && err.contains("array.colour") && err.contains("pattern.preset"), "{err}");

    let missing = tilekit(&["--config", dir.path().join("nope.toml").to_str().unwrap(), "validate"]);
    assert_eq!(missing.status.code(), Some(1));
}

#[test]
fn output_directory_precedence() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("c.toml");
    let from_cfg = dir.path().join("from_cfg");
    std::fs::write(&cfg, format!("[output]\ndirectory = {:?}\nsvg = false\n", from_cfg.to_str().unwrap())).unwrap();
    let run = |env: Option<&Path>, flag: Option<&Path>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_tilekit"));
        c.env_remove(tilekit::OUT_ENV).arg("--config").arg(&cfg);
        if let Some(e) = env {
            c.env(tilekit::OUT_ENV, e);
        }
        if let Some(f) = flag {
            c.arg("--out").arg(f);
        }
        let o = c.args(["workspace", "--resolution", "3"]).output().unwrap();
        assert!(o.status.success());
    };
    run(None, None);
    assert!(from_cfg.join("workspace.csv").exists());
    let from_env = dir.path().join("from_env");
    run(Some(&from_env), None);
    assert!(from_env.join("workspace.csv").exists());
    let from_flag = dir.path().join("from_flag");
    run(Some(&from_env), Some(&from_flag));
    assert!(from_flag.join("workspace.csv").exists());
    assert!(!from_cfg.join("workspace.svg").exists());
}

#[test]
fn workspace_and_alpha_map_plots() {
    let dir = TempDir::new().unwrap();
    let o = tilekit(&["--out", dir.path().to_str().unwrap(), "workspace", "--resolution", "4"]);
    assert!(o.status.success());
    let (header, rows) = records(&dir.path().join("workspace.csv"));
    assert_eq!(header.len(), 9);
    assert_eq!(rows.len(), 64);
    assert!(std::fs::read_to_string(dir.path().join("workspace.svg")).unwrap().starts_with("<svg"));

    let o = tilekit(&[
        "--out",
        dir.path().to_str().unwrap(),
        "alpha-map",
        "--spacing",
        "24 cm",
        "--delta-samples",
        "4",
        "--phi-samples",
        "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = records(&dir.path().join("alpha_map.csv"));
    assert_eq!(header, vec!["delta", "phi", "alpha"]);
    assert_eq!(rows.len(), 12);
    // Level cells sit at D - E_w.
    assert_eq!(rows[0][2].parse::<f64>().unwrap(), 90.0);
    assert!(dir.path().join("alpha_map.svg").exists());
}

#[test]
fn grid_marks_skipped_cells() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("g.toml");
    std::fs::write(
        &cfg,
        "[simulation]\ntime_limit = \"2 s\"\n[grid]\nlengths = [0]\nspacings = [180, 200]\npatterns = [\"A\"]\nskip = [[0, 200]]\n",
    )
    .unwrap();
    let o = tilekit(&["--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "grid"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = records(&dir.path().join("grid.csv"));
    assert_eq!(header, vec!["L_mm\\D_mm", "180", "200"]);
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "0");
    assert_eq!(&rows[0][2], "untested");
    assert_ne!(&rows[0][1], "success");
}
