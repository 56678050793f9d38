//! Artifact writers. CSV files start with a version comment line; floats are
//! written in shortest round-trip exponent form.

use std::fmt::Write as _;
use std::path::Path;

use paraopt::analysis::SweepTable;
use paraopt::SolveLog;
use serde::Serialize;

use crate::CliError;

pub const CSV_VERSION_LINE: &str = "# paraopt-kit v1";

pub fn num(x: f64) -> String {
    format!("{x:e}")
}

/// CSV text with the version line, a header and the given rows.
pub fn csv<I>(columns: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut s = String::new();
    let _ = writeln!(s, "{CSV_VERSION_LINE}");
    let _ = writeln!(s, "{}", columns.join(","));
    for r in rows {
        let _ = writeln!(s, "{}", r.join(","));
    }
    s
}

pub fn sweep_csv(t: &SweepTable) -> String {
    csv(
        &["sigma_hat", "gamma_hat", "rho_star"],
        t.rows().map(|(s, g, r)| vec![num(s), num(g), num(r)]),
    )
}

/// `iteration,residual,inner_iters,seconds`; row 0 is the initial residual.
pub fn solve_log_csv(log: &SolveLog) -> String {
    let first = vec!["0".to_string(), num(log.initial_residual), "0".into(), num(0.0)];
    csv(
        &["iteration", "residual", "inner_iters", "seconds"],
        std::iter::once(first).chain(log.records.iter().map(|r| {
            vec![
                r.iteration.to_string(),
                num(r.residual),
                r.inner_iterations.to_string(),
                num(r.seconds),
            ]
        })),
    )
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cannot create output directory {}: {e}", dir.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("cannot serialize {}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}
