//! Artifact formats: trajectory and scan CSV, JSON reports, gnuplot scripts.
//!
//! Every artifact starts with a provenance block (config hash, seed,
//! version). Files are written to a temporary sibling and renamed into
//! place.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::asymptotics::ScanRow;
use crate::error::{Error, Result};
use crate::integrator::{PruferState, StepStats, Trajectory};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

impl Provenance {
    /// Hashes the command name, its normalised parameters and the raw
    /// bytes of every input file.
    pub fn new(command: &str, params: &str, inputs: &[&[u8]], seed: u64) -> Provenance {
        let mut h = Sha256::new();
        h.update(command.as_bytes());
        h.update([0]);
        h.update(params.as_bytes());
        for input in inputs {
            h.update([0]);
            h.update((input.len() as u64).to_le_bytes());
            h.update(input);
        }
        Provenance {
            command: command.to_string(),
            config_hash: hex::encode(h.finalize()),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    fn comment_lines(&self, out: &mut String) {
        let _ = writeln!(out, "# command: {}", self.command);
        let _ = writeln!(out, "# config_hash: {}", self.config_hash);
        let _ = writeln!(out, "# seed: {}", self.seed);
        let _ = writeln!(out, "# version: {}", self.version);
    }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(std::io::Error::other(format!("not a file path: {}", path.display()))))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes)?;
    if let Err(e) = fs::rename(&tmp, path) {
        let _ = fs::remove_file(&tmp);
        return Err(e.into());
    }
    Ok(())
}

/// 17 significant digits, enough to round-trip any `f64`.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// CSV with header `x,theta,logR,xi,psi`; `xi` and `psi` are empty when the
/// trajectory has no phase data. Extra `# key: value` lines follow the
/// provenance block.
pub fn trajectory_csv(traj: &Trajectory, prov: &Provenance, extra: &[(&str, String)]) -> String {
    let mut out = String::new();
    prov.comment_lines(&mut out);
    let _ = writeln!(out, "# E: {}", num(traj.energy));
    for (k, v) in extra {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out.push_str("x,theta,logR,xi,psi\n");
    for s in &traj.samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            num(s.x),
            num(s.theta),
            num(s.log_r),
            opt(s.xi),
            opt(s.psi)
        );
    }
    out
}

/// Value of a `# key: value` header line.
pub fn header_value<'a>(text: &'a str, key: &str) -> Option<&'a str> {
    text.lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l[1..].trim().split_once(':'))
        .find(|(k, _)| k.trim() == key)
        .map(|(_, v)| v.trim())
}

/// Parses a CSV written by [`trajectory_csv`]. Suprema are recomputed from
/// the samples.
pub fn read_trajectory_csv(text: &str) -> Result<Trajectory> {
    let bad = |m: String| Error::Trajectory(m);
    let energy: f64 = header_value(text, "E")
        .ok_or_else(|| bad("missing \"# E:\" header".into()))?
        .parse()
        .map_err(|e| bad(format!("energy: {e}")))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.starts_with('#') && !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == "x,theta,logR,xi,psi" => {}
        other => return Err(bad(format!("unexpected header {:?}", other.map(|o| o.1)))),
    }
    let field = |s: &str, line: usize, name: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            return Ok(None);
        }
        s.parse()
            .map(Some)
            .map_err(|e| bad(format!("line {}: {name}: {e}", line + 1)))
    };
    let mut samples = Vec::new();
    for (i, line) in lines {
        let cols: Vec<&str> = line.split(',').map(str::trim).collect();
        if cols.len() != 5 {
            return Err(bad(format!("line {}: expected 5 columns, got {}", i + 1, cols.len())));
        }
        let need = |s: &str, name: &str| {
            field(s, i, name)?.ok_or_else(|| bad(format!("line {}: empty {name}", i + 1)))
        };
        samples.push(PruferState {
            x: need(cols[0], "x")?,
            theta: need(cols[1], "theta")?,
            log_r: need(cols[2], "logR")?,
            xi: field(cols[3], i, "xi")?,
            psi: field(cols[4], i, "psi")?,
        });
    }
    if samples.is_empty() {
        return Err(bad("no samples".into()));
    }
    let sup = samples.iter().map(|s| s.log_r).fold(f64::NEG_INFINITY, f64::max);
    let interval_sup = samples.windows(2).map(|w| w[0].log_r.max(w[1].log_r)).collect();
    Ok(Trajectory {
        energy,
        eta: 2.0 * energy.sqrt(),
        samples,
        sup_log_r: sup,
        interval_sup,
        stats: StepStats::default(),
    })
}

/// Scan table with header `E,sup_logR,status`.
pub fn scan_csv(rows: &[ScanRow], prov: &Provenance, extra: &[(&str, String)]) -> String {
    let mut out = String::new();
    prov.comment_lines(&mut out);
    for (k, v) in extra {
        let _ = writeln!(out, "# {k}: {v}");
    }
    out.push_str("E,sup_logR,status\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{}", num(r.energy), num(r.sup_log_r), r.status);
    }
    out
}

/// A gnuplot script plotting `sup log R` against `E` from `csv_name`,
/// with vertical markers at `marks`.
pub fn gnuplot_script(csv_name: &str, marks: &[f64]) -> String {
    let mut out = String::new();
    out.push_str("set datafile separator ','\n");
    out.push_str("set key off\n");
    out.push_str("set xlabel 'E'\n");
    out.push_str("set ylabel 'sup log R'\n");
    for (i, m) in marks.iter().enumerate() {
        let _ = writeln!(
            out,
            "set arrow {} from {m},graph 0 to {m},graph 1 nohead dt 2 lc rgb 'gray'",
            i + 1
        );
    }
    let _ = writeln!(out, "plot '{csv_name}' using 1:2 every ::1 with linespoints pt 7 ps 0.5");
    out
}

/// Serialises `value` as a JSON object with an added `provenance` field.
pub fn json_with_provenance<T: Serialize>(value: &T, prov: &Provenance) -> Result<String> {
    let body = serde_json::to_value(value)?;
    let mut map = serde_json::Map::new();
    map.insert("provenance".into(), serde_json::to_value(prov)?);
    match body {
        serde_json::Value::Object(fields) => map.extend(fields),
        other => {
            map.insert("value".into(), other);
        }
    }
    let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(map))?;
    text.push('\n');
    Ok(text)
}
