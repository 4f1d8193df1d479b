use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Duration;

use super::spurious::SpuriousRow;
use super::toy_sweep::ResultRow;
use crate::error::{Error, Result};
use crate::model::fmt_real;
use crate::scalar::Real;
use crate::scm_toy::ToyDataset;

pub const TOY_HEADER: &str = "method,a,mse_mean,mse_stderr,reps";
pub const SPURIOUS_HEADER: &str = "method,accuracy,n_test,seed";
pub const DATASET_HEADER: &str = "x11,x21,x12,x22,y";

fn write(path: &Path, body: &str) -> Result<()> {
    fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn read_rows(path: &Path, header: &str, width: usize) -> Result<Vec<Vec<String>>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let bad = |msg: String| Error::Parse {
        path: path.to_path_buf(),
        msg,
    };
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(header) {
        return Err(bad(format!("missing header `{header}`")));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            let f: Vec<String> = l.split(',').map(|s| s.trim().to_string()).collect();
            if f.len() == width {
                Ok(f)
            } else {
                Err(bad(format!(
                    "line {}: expected {width} fields, got {}",
                    i + 2,
                    f.len()
                )))
            }
        })
        .collect()
}

fn parse_field<V: std::str::FromStr>(path: &Path, field: &str, what: &str) -> Result<V> {
    field.parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        msg: format!("bad {what} {field:?}"),
    })
}

pub fn write_toy_results<T: Real>(rows: &[ResultRow<T>], path: &Path) -> Result<()> {
    let mut s = format!("{TOY_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            r.method,
            fmt_real(r.a),
            fmt_real(r.mse_mean),
            fmt_real(r.mse_stderr),
            r.reps
        );
    }
    write(path, &s)
}

pub fn read_toy_results(path: &Path) -> Result<Vec<ResultRow<f64>>> {
    read_rows(path, TOY_HEADER, 5)?
        .into_iter()
        .map(|f| {
            Ok(ResultRow {
                method: f[0].clone(),
                a: parse_field(path, &f[1], "a")?,
                mse_mean: parse_field(path, &f[2], "mse_mean")?,
                mse_stderr: parse_field(path, &f[3], "mse_stderr")?,
                reps: parse_field(path, &f[4], "reps")?,
            })
        })
        .collect()
}

pub fn write_spurious_results(rows: &[SpuriousRow], path: &Path) -> Result<()> {
    let mut s = format!("{SPURIOUS_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            r.method,
            fmt_real(r.accuracy),
            r.n_test,
            r.seed
        );
    }
    write(path, &s)
}

pub fn read_spurious_results(path: &Path) -> Result<Vec<SpuriousRow>> {
    read_rows(path, SPURIOUS_HEADER, 4)?
        .into_iter()
        .map(|f| {
            Ok(SpuriousRow {
                method: f[0].clone(),
                accuracy: parse_field(path, &f[1], "accuracy")?,
                n_test: parse_field(path, &f[2], "n_test")?,
                seed: parse_field(path, &f[3], "seed")?,
            })
        })
        .collect()
}

pub fn write_dataset_csv<T: Real>(data: &ToyDataset<T>, path: &Path) -> Result<()> {
    let mut s = format!("{DATASET_HEADER}\n");
    for d in &data.samples {
        let _ = writeln!(
            s,
            "{},{},{},{},{}",
            fmt_real(d.x.x11),
            fmt_real(d.x.x21),
            fmt_real(d.x.x12),
            fmt_real(d.x.x22),
            fmt_real(d.y)
        );
    }
    write(path, &s)
}

/// Plain-text run manifest: version, the effective configuration as
/// `key = value` lines, and wall-clock time.
pub fn write_manifest(
    path: &Path,
    command: &str,
    config: &[(String, String)],
    elapsed: Duration,
) -> Result<()> {
    let mut s = String::new();
    let _ = writeln!(s, "# rice-lab run manifest");
    let _ = writeln!(s, "version = {}", crate::VERSION);
    let _ = writeln!(s, "command = {command}");
    let _ = writeln!(
        s,
        "seed_scheme = child = splitmix64(splitmix64(parent ^ fnv1a(label)) ^ splitmix64(index + fnv1a(label))); chacha8 stream per (child, sample)"
    );
    for (k, v) in config {
        let _ = writeln!(s, "{k} = {v}");
    }
    let _ = writeln!(s, "wall_clock_seconds = {:.3}", elapsed.as_secs_f64());
    write(path, &s)
}
