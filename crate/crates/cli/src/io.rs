//! Artifact encodings.
//!
//! Checkpoints are little-endian binary: magic `DM4N`, format version u32,
//! then n, N (u32 each), L, t (f64 each), then the N^n complex samples as
//! interleaved (re, im) f64 pairs in row-major mode order. Round-trips are
//! bit-exact. CSV reals carry 17 significant digits (round-trip-exact
//! doubles) with `.` decimal; metadata lines are prefixed `#`. Every file is
//! written to a temp path and renamed, so readers never observe partials.

use std::io::Read;
use std::path::Path;

use dm4nls_core::averaging::AveragingReport;
use dm4nls_core::diagnostics::DiagnosticsRecord;
use dm4nls_core::grid::{Field, GridSpec};
use num_complex::Complex64;

use crate::CliError;

const MAGIC: &[u8; 4] = b"DM4N";
const VERSION: u32 = 1;

fn file_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::validation(format!("{}: {e}", path.display()))
}

/// Write `bytes` to `path` atomically (same-directory temp + rename).
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(|e| file_err(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| file_err(path, e))
}

/// Serialize a state (plus its clock) into the checkpoint encoding.
pub fn checkpoint_bytes(field: &Field, t: f64) -> Vec<u8> {
    let spec = field.spec();
    let mut out = Vec::with_capacity(4 + 4 + 8 + 16 + 16 * field.samples().len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(spec.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(spec.points_per_axis() as u32).to_le_bytes());
    out.extend_from_slice(&spec.half_length().to_le_bytes());
    out.extend_from_slice(&t.to_le_bytes());
    for s in field.samples() {
        out.extend_from_slice(&s.re.to_le_bytes());
        out.extend_from_slice(&s.im.to_le_bytes());
    }
    out
}

pub fn write_checkpoint(path: &Path, field: &Field, t: f64) -> Result<(), CliError> {
    atomic_write(path, &checkpoint_bytes(field, t))
}

pub fn read_checkpoint(path: &Path) -> Result<(Field, f64), CliError> {
    let mut file = std::fs::File::open(path).map_err(|e| file_err(path, e))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(|e| file_err(path, e))?;

    let mut cursor = bytes.as_slice();
    let mut take = |n: usize| -> Result<&[u8], CliError> {
        if cursor.len() < n {
            return Err(file_err(path, "truncated checkpoint"));
        }
        let (head, rest) = cursor.split_at(n);
        cursor = rest;
        Ok(head)
    };

    if take(4)? != MAGIC {
        return Err(file_err(path, "not a checkpoint (bad magic)"));
    }
    let version = u32::from_le_bytes(take(4)?.try_into().unwrap());
    if version != VERSION {
        return Err(file_err(path, format!("unsupported checkpoint version {version}")));
    }
    let dim = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    let points = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
    let half_length = f64::from_le_bytes(take(8)?.try_into().unwrap());
    let t = f64::from_le_bytes(take(8)?.try_into().unwrap());

    let spec = GridSpec::new(dim, points, half_length)?;
    let mut samples = Vec::with_capacity(spec.total_points());
    for _ in 0..spec.total_points() {
        let re = f64::from_le_bytes(take(8)?.try_into().unwrap());
        let im = f64::from_le_bytes(take(8)?.try_into().unwrap());
        samples.push(Complex64::new(re, im));
    }
    if !cursor.is_empty() {
        return Err(file_err(path, "trailing bytes after checkpoint payload"));
    }
    Ok((Field::from_samples(spec, samples)?, t))
}

/// 17 significant digits; parses back to the identical double.
pub fn real17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Diagnostics table: `#` metadata, header, one row per snapshot.
pub fn diagnostics_csv(metadata: &[String], records: &[DiagnosticsRecord]) -> String {
    let mut out = String::new();
    for line in metadata {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str("t,mass,energy,grad_l2,h1,h2,potential_max\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            real17(r.t),
            real17(r.mass),
            real17(r.energy),
            real17(r.grad_l2),
            real17(r.h1),
            real17(r.h2),
            real17(r.potential_max),
        ));
    }
    out
}

/// JSONL mirror of the CSV: identical keys, one object per snapshot.
pub fn diagnostics_jsonl(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::new();
    for r in records {
        let obj = serde_json::json!({
            "t": r.t,
            "mass": r.mass,
            "energy": r.energy,
            "grad_l2": r.grad_l2,
            "h1": r.h1,
            "h2": r.h2,
            "potential_max": r.potential_max,
        });
        out.push_str(&obj.to_string());
        out.push('\n');
    }
    out
}

/// Averaging table: the fitted rate appears only on the last row (empty when
/// no fit was possible).
pub fn averaging_csv(metadata: &[String], report: &AveragingReport) -> String {
    let mut out = String::new();
    for line in metadata {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out.push_str("epsilon,sup_hs_error,fitted_rate\n");
    let last = report.epsilons.len() - 1;
    for (i, (&eps, &err)) in report.epsilons.iter().zip(&report.errors).enumerate() {
        let rate = match report.fitted_rate {
            Some(r) if i == last => real17(r),
            _ => String::new(),
        };
        out.push_str(&format!("{},{},{}\n", real17(eps), real17(err), rate));
    }
    out
}
