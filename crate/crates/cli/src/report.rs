//! Deterministic artifact writers.  Data files (JSON reports, CSV series)
//! are byte-identical across re-runs with the same config and seed; wall
//! clock and host facts go to `run.log`, which is the one file excluded
//! from that guarantee.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use gaplab_core::walk::Trajectory;
use gaplab_core::{Error, Result};
use serde::Serialize;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Wrapper that stamps every JSON artifact with the tool version and the
/// config hash.
#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    tool_version: &'static str,
    config_hash: &'a str,
    #[serde(flatten)]
    body: &'a T,
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Config(format!("cannot create {}: {e}", dir.display())))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, config_hash: &str, body: &T) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(&Artifact { tool_version: TOOL_VERSION, config_hash, body })
        .map_err(|e| Error::Config(format!("serialize {name}: {e}")))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| Error::Config(format!("write {}: {e}", path.display())))?;
    Ok(path)
}

/// Partial-sum series with a '#' preamble carrying version and config hash;
/// 17 significant digits, '.' decimal separator, LF endings.  Rows are
/// thinned to every `stride`-th step plus the final one.
pub fn write_trajectory_csv<P>(
    dir: &Path,
    name: &str,
    t: &Trajectory<P>,
    stride: usize,
    config_hash: &str,
) -> Result<PathBuf> {
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(|e| Error::Config(format!("create {}: {e}", path.display())))?;
    let mut w = std::io::BufWriter::new(file);
    let stride = stride.max(1);
    let mut emit = || -> std::io::Result<()> {
        writeln!(w, "# gaplab {TOOL_VERSION} config {config_hash} seed {} path {}", t.seed, t.path)?;
        let mut header = String::from("step");
        for i in 1..=t.dim {
            header.push_str(&format!(",s{i}"));
        }
        writeln!(w, "{header}")?;
        for k in (0..=t.steps()).filter(|&k| k % stride == 0 || k == t.steps()) {
            let mut line = format!("{k}");
            for v in t.sum_at(k) {
                line.push_str(&format!(",{v:.16e}"));
            }
            writeln!(w, "{line}")?;
        }
        w.flush()
    };
    emit().map_err(|e| Error::Config(format!("write {}: {e}", path.display())))?;
    Ok(path)
}

/// Timing and host notes; excluded from the byte-identical guarantee.
pub fn write_run_log(dir: &Path, lines: &[String]) -> Result<()> {
    let path = dir.join("run.log");
    let mut text = String::new();
    for l in lines {
        text.push_str(l);
        text.push('\n');
    }
    fs::write(&path, text).map_err(|e| Error::Config(format!("write {}: {e}", path.display())))
}
