//! Output files: per-step CSV, RMSE table, run manifest and content hashes.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::scenario::{CraterLimit, RmseRow, RmseTable, ScenarioConfig, StepRecord};

pub const STEPS_SCHEMA: &str = "craternav-steps/1";
pub const RMSE_SCHEMA: &str = "craternav-rmse/1";
pub const MANIFEST_SCHEMA: &str = "craternav-manifest/1";

pub const STEPS_HEADER: [&str; 36] = [
    "t_s",
    "r_x_km",
    "r_y_km",
    "r_z_km",
    "v_x_km_s",
    "v_y_km_s",
    "v_z_km_s",
    "q_w",
    "q_x",
    "q_y",
    "q_z",
    "altitude_km",
    "visible",
    "identified",
    "used",
    "status",
    "iterations",
    "final_step_km",
    "est_x_km",
    "est_y_km",
    "est_z_km",
    "est_q_w",
    "est_q_x",
    "est_q_y",
    "est_q_z",
    "err_x_m",
    "err_y_m",
    "err_z_m",
    "err_phi_deg",
    "err_theta_deg",
    "err_psi_deg",
    "warm_x_km",
    "warm_y_km",
    "warm_z_km",
    "crater_count",
    "attitude",
];

/// Fixed 17-significant-digit scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt<const N: usize>(v: Option<[f64; N]>) -> [String; N] {
    match v {
        Some(a) => a.map(fmt_f64),
        None => std::array::from_fn(|_| String::new()),
    }
}

pub fn write_steps_csv<W: Write>(records: &[StepRecord], mut w: W) -> Result<()> {
    writeln!(w, "#schema={STEPS_SCHEMA}")?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(STEPS_HEADER)?;
    for r in records {
        let s = &r.truth;
        let e = &r.estimate;
        let mut row: Vec<String> = Vec::with_capacity(STEPS_HEADER.len());
        row.push(fmt_f64(r.t));
        row.extend(s.position.iter().map(|v| fmt_f64(*v)));
        row.extend(s.velocity.iter().map(|v| fmt_f64(*v)));
        row.extend(s.attitude.to_array().map(fmt_f64));
        row.push(fmt_f64(r.altitude_km));
        row.push(r.visible_count.to_string());
        row.push(r.identified_count.to_string());
        row.push(r.used_count.to_string());
        row.push(e.status.as_str().to_string());
        row.push(e.iterations.to_string());
        row.push(fmt_f64(e.final_step_norm));
        row.extend(opt(e.position.map(|p| [p.x, p.y, p.z])));
        row.extend(opt(e.attitude.map(|q| q.to_array())));
        row.extend(opt(r.position_error_m.map(|p| [p.x, p.y, p.z])));
        row.extend(opt(r.attitude_error_deg));
        row.extend(opt(e.warm_start.map(|p| [p.x, p.y, p.z])));
        row.push(e.crater_count.to_string());
        row.push(if e.attitude.is_some() { "estimated" } else { "skipped" }.to_string());
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Rows X, Y, Z (m) and φ, θ, ψ (deg), one column per crater limit.
pub fn write_rmse_table<W: Write>(table: &RmseTable, mut w: W) -> Result<()> {
    writeln!(w, "#schema={RMSE_SCHEMA}")?;
    writeln!(w, "#window_s={},{}", fmt_f64(table.window.0), fmt_f64(table.window.1))?;
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["axis".to_string(), "unit".to_string()];
    header.extend(table.columns.iter().map(|(l, _)| format!("limit_{l}")));
    out.write_record(&header)?;
    type Cell = Box<dyn Fn(&RmseRow) -> String>;
    let rows: [(&str, &str, Cell); 8] = [
        ("X", "m", Box::new(|r| fmt_f64(r.position_m[0]))),
        ("Y", "m", Box::new(|r| fmt_f64(r.position_m[1]))),
        ("Z", "m", Box::new(|r| fmt_f64(r.position_m[2]))),
        ("phi", "deg", Box::new(|r| fmt_f64(r.attitude_deg[0]))),
        ("theta", "deg", Box::new(|r| fmt_f64(r.attitude_deg[1]))),
        ("psi", "deg", Box::new(|r| fmt_f64(r.attitude_deg[2]))),
        ("converged_steps", "count", Box::new(|r| r.converged_steps.to_string())),
        ("skipped_steps", "count", Box::new(|r| r.skipped_steps.to_string())),
    ];
    for (axis, unit, cell) in rows.iter() {
        let mut record = vec![axis.to_string(), unit.to_string()];
        record.extend(table.columns.iter().map(|(_, row)| cell(row)));
        out.write_record(&record)?;
    }
    out.flush()?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_reader<R: Read>(mut r: R) -> Result<String> {
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = r.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let f = fs::File::open(path).map_err(|e| Error::file(path, e))?;
    sha256_reader(std::io::BufReader::new(f))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifestCommand {
    Run,
    Sweep,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogFingerprint {
    pub path: String,
    pub sha256: String,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputFile {
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
}

/// Everything needed to rerun a command and check its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema: String,
    pub tool_version: String,
    pub command: ManifestCommand,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limits: Option<Vec<CraterLimit>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_s: Option<[f64; 2]>,
    pub plots: bool,
    pub catalog: CatalogFingerprint,
    pub config: ScenarioConfig,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest always serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let m: RunManifest = toml::from_str(text).map_err(|e| Error::Manifest(e.to_string()))?;
        if m.schema != MANIFEST_SCHEMA {
            return Err(Error::Manifest(format!("unsupported manifest schema `{}`", m.schema)));
        }
        m.config.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        Self::from_toml(&text)
    }
}
