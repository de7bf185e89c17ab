//! CSV and JSON writers.
//!
//! Every file opens with its schema id, the tool version and the full run
//! configuration; the wall-clock timestamp is kept on a line (CSV) or key
//! (JSON) of its own so two runs of the same configuration differ only there.
//!
//! CSV layout:
//!
//! ```text
//! # schema: syncq/series/v1
//! # version: 0.1.0
//! # config: {"subcommand":"series",...}
//! # timestamp: 1760000000
//! n,r,inv_r,partial_sum
//! ...
//! ```

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn unix_timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

pub fn write_csv<W: Write, C: Serialize>(
    mut w: W,
    schema: &str,
    config: &C,
    timestamp: u64,
    header: &[&str],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> Result<()> {
    writeln!(w, "# schema: {schema}")?;
    writeln!(w, "# version: {VERSION}")?;
    writeln!(w, "# config: {}", serde_json::to_string(config)?)?;
    writeln!(w, "# timestamp: {timestamp}")?;
    writeln!(w, "{}", header.join(","))?;
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Envelope<'a, C: Serialize, D: Serialize> {
    schema: &'a str,
    version: &'a str,
    config: &'a C,
    timestamp: u64,
    data: &'a D,
}

pub fn write_json<W: Write, C: Serialize, D: Serialize>(
    mut w: W,
    schema: &str,
    config: &C,
    timestamp: u64,
    data: &D,
) -> Result<()> {
    let env = Envelope { schema, version: VERSION, config, timestamp, data };
    serde_json::to_writer_pretty(&mut w, &env)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Drops the timestamp line or key so two outputs can be compared byte for byte.
pub fn strip_timestamp(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with("# timestamp:") && !l.trim_start().starts_with("\"timestamp\":"))
        .collect::<Vec<_>>()
        .join("\n")
}
