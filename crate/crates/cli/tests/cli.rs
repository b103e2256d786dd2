use std::path::Path;
use std::process::{Command, Output};

use bathmodes::bcf_from_modes_at;
use bathmodes_cli::output::read_modes_csv;
use tempfile::TempDir;

const OHMIC: &str = "exponent_s = 1
coupling_alpha = 5
cutoff_frequency_cm1 = 53
temperature_k = 300
time_points = 100
frequency_points = 400
verification_points = 200
";

fn bathmodes(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bathmodes")).current_dir(dir).args(args).output().unwrap()
}

fn config(dir: &Path, text: &str) -> String {
    std::fs::write(dir.join("run.toml"), text).unwrap();
    "run.toml".into()
}

fn read(path: impl AsRef<Path>) -> String {
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn discretize_writes_tables_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), &format!("{OHMIC}method = \"id\"\nrank = 20\n"));
    let first = bathmodes(dir.path(), &["discretize", "--config", &cfg, "--output-dir", "a"]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let second = bathmodes(dir.path(), &["discretize", "--config", &cfg, "--output-dir", "b"]);
    assert!(second.status.success());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(read(a.join("modes_id.csv")), read(b.join("modes_id.csv")));
    // the JSON echoes the resolved config, which includes the output directory
    let without_dir = |p: std::path::PathBuf| {
        let mut v: serde_json::Value = serde_json::from_str(&read(p)).unwrap();
        assert!(v["config"].as_object_mut().unwrap().remove("output_dir").is_some());
        v
    };
    assert_eq!(without_dir(a.join("modes_id.json")), without_dir(b.join("modes_id.json")));
    let modes = read_modes_csv(&read(a.join("modes_id.csv"))).unwrap();
    assert_eq!(modes.len(), 20);
    let json: serde_json::Value = serde_json::from_str(&read(a.join("modes_id.json"))).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["modes"].as_array().unwrap().len(), 20);
    assert_eq!(json["config_sha256"].as_str().unwrap().len(), 64);
    assert!(json["provenance"]["achieved_error"].as_f64().unwrap() > 0.0);
}

#[test]
fn compare_panel_round_trips_through_mode_tables() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), &format!("{OHMIC}method = \"all\"\nbsdo_intervals_cm1 = [[-180, 180], [-250, 250]]\n"));
    let out = bathmodes(dir.path(), &["compare", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let outdir = dir.path().join("out");
    let errors = read(outdir.join("compare_errors.csv"));
    assert_eq!(errors.lines().filter(|l| l.ends_with(",ok")).count(), 5);

    let panel = read(outdir.join("compare_panel.csv"));
    let norm: f64 = panel.lines().find_map(|l| l.strip_prefix("# normalization_abs_c0 = ")).unwrap().parse().unwrap();
    let mut rows = panel.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<&str> = rows.next().unwrap().split(',').collect();
    let data: Vec<Vec<f64>> = rows.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    let times: Vec<f64> = data.iter().map(|r| r[0]).collect();
    for slug in ["id", "ld", "mdm", "bsdo_-180_180", "bsdo_-250_250"] {
        let modes = read_modes_csv(&read(outdir.join(format!("modes_{slug}.csv")))).unwrap();
        let col = header.iter().position(|h| *h == format!("{slug}_re")).unwrap();
        for (c, row) in bcf_from_modes_at(&modes, &times).iter().zip(&data) {
            assert!((c.re - row[col]).abs() <= 1e-12 * norm && (c.im - row[col + 1]).abs() <= 1e-12 * norm);
        }
    }
}

#[test]
fn bcf_reconstructs_a_mode_table() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), &format!("{OHMIC}method = \"bsdo\"\nbsdo_modes = 10\n"));
    assert!(bathmodes(dir.path(), &["discretize", "--config", &cfg]).status.success());
    let out = bathmodes(dir.path(), &["bcf", "--config", &cfg, "--modes", "out/modes_bsdo_-500_500.csv"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let reference = read(dir.path().join("out/bcf_reference.csv"));
    assert!(reference.contains("t_fs,re,im,abs\n"));
    assert_eq!(reference.lines().filter(|l| !l.starts_with('#')).count(), 201);
    assert!(dir.path().join("out/bcf_modes_bsdo_-500_500.csv").exists());
}

#[test]
fn chain_writes_coefficients() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), &format!("{OHMIC}bsdo_modes = 6\nbsdo_intervals_cm1 = [-250, 250]\n"));
    let out = bathmodes(dir.path(), &["chain", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = read(dir.path().join("out/chain_bsdo_-250_250.csv"));
    assert!(text.contains("# delta_w_cm2 = "));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "site,alpha_cm1,hop_cm1");
    assert_eq!(rows.len(), 7);
    assert!(rows[6].ends_with(','));
}

#[test]
fn config_errors_exit_with_2() {
    let dir = TempDir::new().unwrap();
    let both = config(dir.path(), &format!("{OHMIC}tabulated_file = \"sd.txt\"\n"));
    let out = bathmodes(dir.path(), &["discretize", "--config", &both]);
    assert_eq!(out.status.code(), Some(2));
    let cfg = config(dir.path(), &format!("{OHMIC}cutoff_time_ps = 1\n"));
    let out = bathmodes(dir.path(), &["discretize", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cutoff_time_fs"));
    let cfg = config(dir.path(), &format!("{OHMIC}method = []\n"));
    assert_eq!(bathmodes(dir.path(), &["compare", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(bathmodes(dir.path(), &["discretize", "--config", "missing.toml"]).status.code(), Some(2));
}

#[test]
fn bsdo_refuses_singular_origin_with_advice() {
    let dir = TempDir::new().unwrap();
    let cfg = config(
        dir.path(),
        "exponent_s = 0.25\ncoupling_alpha = 5\ncutoff_frequency_cm1 = 53\ntemperature_k = 50\nmethod = \"bsdo\"\nbsdo_intervals_cm1 = [-200, 200]\n",
    );
    let out = bathmodes(dir.path(), &["discretize", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("unbounded") && stderr.contains("omega_min > 0"), "{stderr}");
}

#[test]
fn flags_override_the_file() {
    let dir = TempDir::new().unwrap();
    let cfg = config(dir.path(), &format!("{OHMIC}method = \"mdm\"\n"));
    let out = bathmodes(dir.path(), &["discretize", "--config", &cfg, "--mdm-modes", "8", "--method", "mdm,ld", "--ld-modes", "6"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read_modes_csv(&read(dir.path().join("out/modes_mdm.csv"))).unwrap().len(), 8);
    assert_eq!(read_modes_csv(&read(dir.path().join("out/modes_ld.csv"))).unwrap().len(), 6);
}

#[test]
fn tabulated_pipeline_runs() {
    let dir = TempDir::new().unwrap();
    let mut table = String::from("# omega J\n");
    for i in 0..=400 {
        let w = i as f64 * 2.5;
        let j = 300.0 * w / 50.0 * (-w / 50.0).exp() + 80.0 / (1.0 + ((w - 600.0) / 20.0).powi(2));
        table.push_str(&format!("{w} {j}\n"));
    }
    std::fs::write(dir.path().join("sd.txt"), table).unwrap();
    let cfg = config(
        dir.path(),
        "tabulated_file = \"sd.txt\"\nomega_floor_cm1 = 1\ntemperature_k = 0\nomega_lo_cm1 = 0\nomega_hi_cm1 = 1000\ncutoff_time_fs = 250\ntime_points = 100\nfrequency_points = 400\ntolerance = 1e-4\nverification_points = 100\nmethod = [\"id\", \"bsdo\"]\nbsdo_modes = 12\n",
    );
    let out = bathmodes(dir.path(), &["compare", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&read(dir.path().join("out/modes_id.json"))).unwrap();
    assert_eq!(json["config"]["smoothing_lambda"], "gcv");
    assert!(json["modes"].as_array().unwrap().iter().all(|m| m["omega_cm1"].as_f64().unwrap() >= 1.0));
}
