//! CSV emission. Every file opens with a `# <schema> v<version>` comment
//! line followed by the column header. Floats use Rust's shortest
//! round-trip formatting so files are byte-stable across runs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use super::{HarnessError, Result};

pub const EPISODES_SCHEMA: &str = "# mofql-episodes v1";
pub const TRAJECTORY_SCHEMA: &str = "# mofql-trajectory v1";
pub const TIMING_SCHEMA: &str = "# mofql-timing v1";
pub const EVAL_SCHEMA: &str = "# mofql-eval v1";
pub const SWEEP_SCHEMA: &str = "# mofql-sweep v1";
pub const POINTS_SCHEMA: &str = "# mofql-points v1";

pub fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

/// Writes a CSV file: schema line, header, then one line per row.
pub fn write_csv<I>(path: &Path, schema: &str, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let io = |e| HarnessError::io(path, e);
    let file = File::create(path).map_err(io)?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{schema}").map_err(io)?;
    writeln!(w, "{}", header.join(",")).map_err(io)?;
    for row in rows {
        writeln!(w, "{}", row.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Shorthand for turning displayable values into a CSV row.
#[macro_export]
#[doc(hidden)]
macro_rules! csv_row {
    ($($v:expr),* $(,)?) => {
        vec![$($v.to_string()),*]
    };
}
