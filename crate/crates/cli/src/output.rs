//! Flat-file artifacts. Floats are written in shortest round-trip form and no
//! file carries a timestamp, so identical runs give identical bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use bathmodes::{BcfSeries, ChainCoefficients, DiscreteBath, Mode, Provenance};
use serde::Serialize;

use crate::run::{ComparisonBundle, Job, RunError};

pub const SCHEMA_VERSION: u32 = 1;

/// Shortest representation that parses back to the same bits; exponent form
/// outside [1e-4, 1e15).
pub fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) || !a.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), RunError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
    }
    std::fs::write(path, contents).map_err(|source| RunError::Io { path: path.to_path_buf(), source })
}

pub fn modes_csv(job: &Job, bath: &DiscreteBath, config_hash: &str) -> String {
    let mut s = String::new();
    writeln!(s, "# bathmodes mode table").unwrap();
    writeln!(s, "# method = {}", job.label()).unwrap();
    writeln!(s, "# temperature_k = {}", bath.temperature.as_kelvin()).unwrap();
    writeln!(s, "# modes = {}", bath.len()).unwrap();
    writeln!(s, "# sum_g2_cm2 = {}", num(bath.total_weight())).unwrap();
    if let Some(e) = bath.provenance.achieved_error {
        writeln!(s, "# achieved_error = {}", num(e)).unwrap();
    }
    for w in &bath.provenance.warnings {
        writeln!(s, "# warning: {w}").unwrap();
    }
    writeln!(s, "# config_sha256 = {config_hash}").unwrap();
    writeln!(s, "omega_cm1,g_cm1,g2_cm2").unwrap();
    for m in &bath.modes {
        writeln!(s, "{},{},{}", num(m.omega), num(m.g), num(m.g2)).unwrap();
    }
    s
}

/// Modes from a CSV written by [`modes_csv`]; weights come from the g2 column.
pub fn read_modes_csv(text: &str) -> Result<Vec<Mode>, String> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty());
    match lines.next() {
        Some("omega_cm1,g_cm1,g2_cm2") => {}
        other => return Err(format!("expected header omega_cm1,g_cm1,g2_cm2, found {other:?}")),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(format!("row {}: expected 3 columns", i + 1));
            }
            let parse = |c: &str| c.trim().parse::<f64>().map_err(|e| format!("row {}: {e}", i + 1));
            Ok(Mode::new(parse(cols[0])?, parse(cols[2])?))
        })
        .collect()
}

#[derive(Serialize)]
struct ModeRow {
    omega_cm1: f64,
    g_cm1: f64,
    g2_cm2: f64,
}

#[derive(Serialize)]
struct ModesDocument<'a> {
    schema_version: u32,
    method: String,
    temperature_k: f64,
    config_sha256: &'a str,
    config: &'a toml::Table,
    modes: Vec<ModeRow>,
    provenance: &'a Provenance,
}

pub fn modes_json(job: &Job, bath: &DiscreteBath, config: &toml::Table, config_hash: &str) -> String {
    let doc = ModesDocument {
        schema_version: SCHEMA_VERSION,
        method: job.label(),
        temperature_k: bath.temperature.as_kelvin(),
        config_sha256: config_hash,
        config,
        modes: bath.modes.iter().map(|m| ModeRow { omega_cm1: m.omega, g_cm1: m.g, g2_cm2: m.g2 }).collect(),
        provenance: &bath.provenance,
    };
    let mut s = serde_json::to_string_pretty(&doc).expect("mode document serializes");
    s.push('\n');
    s
}

pub fn bcf_csv(series: &BcfSeries, source: &str) -> String {
    let mut s = String::new();
    writeln!(s, "# bathmodes correlation function").unwrap();
    writeln!(s, "# source = {source}").unwrap();
    writeln!(s, "# normalization_abs_c0 = {}", num(series.normalization())).unwrap();
    writeln!(s, "t_fs,re,im,abs").unwrap();
    for (t, c) in series.times().iter().zip(series.values()) {
        writeln!(s, "{},{},{},{}", num(*t), num(c.re), num(c.im), num(c.norm())).unwrap();
    }
    s
}

pub fn chain_csv(interval: [f64; 2], chain: &ChainCoefficients) -> String {
    let mut s = String::new();
    writeln!(s, "# bathmodes chain coefficients").unwrap();
    writeln!(s, "# interval_cm1 = [{}, {}]", num(interval[0]), num(interval[1])).unwrap();
    writeln!(s, "# delta_w_cm2 = {}", num(chain.delta_w)).unwrap();
    writeln!(s, "# system_coupling_cm1 = {}", num(chain.system_coupling)).unwrap();
    writeln!(s, "site,alpha_cm1,hop_cm1").unwrap();
    for (k, a) in chain.site_energies.iter().enumerate() {
        match chain.hoppings.get(k) {
            Some(h) => writeln!(s, "{k},{},{}", num(*a), num(*h)).unwrap(),
            None => writeln!(s, "{k},{},", num(*a)).unwrap(),
        }
    }
    s
}

/// One row per time: the reference and, for every successful method, its BCF and error.
pub fn compare_panel_csv(bundle: &ComparisonBundle) -> String {
    let ok: Vec<_> = bundle.results.iter().filter_map(|r| r.outcome.as_ref().ok().map(|o| (&r.job, o))).collect();
    let mut s = String::new();
    writeln!(s, "# bathmodes comparison panel").unwrap();
    writeln!(s, "# normalization_abs_c0 = {}", num(bundle.reference.normalization())).unwrap();
    write!(s, "t_fs,reference_re,reference_im").unwrap();
    for (job, _) in &ok {
        let l = job.slug();
        write!(s, ",{l}_re,{l}_im,{l}_err").unwrap();
    }
    s.push('\n');
    for (i, (t, c)) in bundle.reference.times().iter().zip(bundle.reference.values()).enumerate() {
        write!(s, "{},{},{}", num(*t), num(c.re), num(c.im)).unwrap();
        for (_, o) in &ok {
            let v = o.series.values()[i];
            write!(s, ",{},{},{}", num(v.re), num(v.im), num(o.report.errors[i])).unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn compare_errors_csv(bundle: &ComparisonBundle) -> String {
    let mut s = String::new();
    writeln!(s, "# bathmodes error summary; errors are |C_approx(t) - C(t)| / |C(0)|").unwrap();
    writeln!(s, "method,modes,max_error,mean_error,sum_g2_mismatch,status").unwrap();
    for r in &bundle.results {
        match &r.outcome {
            Ok(o) => writeln!(
                s,
                "{},{},{},{},{},ok",
                r.job.label(),
                o.bath.len(),
                num(o.report.max_error),
                num(o.report.mean_error),
                num(o.weight_mismatch)
            )
            .unwrap(),
            Err(e) => writeln!(s, "{},,,,,\"failed: {}\"", r.job.label(), e.replace('"', "'")).unwrap(),
        }
    }
    s
}

pub fn modes_paths(dir: &Path, job: &Job) -> (PathBuf, PathBuf) {
    let slug = job.slug();
    (dir.join(format!("modes_{slug}.csv")), dir.join(format!("modes_{slug}.json")))
}
