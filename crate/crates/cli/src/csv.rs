//! Signal files: one sample per line, written with 17 significant digits,
//! preceded by an optional `# h=<grid size>` header. Blank lines and other
//! `#` comments are ignored on input.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rosetta_core::Signal1D;

use crate::error::{CliError, Result};

pub fn write_signal<W: Write>(mut out: W, signal: &Signal1D) -> std::io::Result<()> {
    writeln!(out, "# h={}", signal.h())?;
    for v in signal.values() {
        writeln!(out, "{v:.16e}")?;
    }
    out.flush()
}

pub fn read_signal<R: BufRead>(input: R, origin: &str) -> Result<Signal1D> {
    let mut h = 1.0;
    let mut values = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line.map_err(|source| CliError::Io {
            path: origin.into(),
            source,
        })?;
        let parse_err = |message: String| CliError::Parse {
            origin: origin.to_string(),
            line: idx + 1,
            message,
        };
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(comment) = text.strip_prefix('#') {
            if let Some(raw) = comment.trim().strip_prefix("h=") {
                h = raw
                    .trim()
                    .parse()
                    .map_err(|e| parse_err(format!("bad grid size `{raw}`: {e}")))?;
            }
            continue;
        }
        let v: f64 = text
            .parse()
            .map_err(|e| parse_err(format!("bad sample `{text}`: {e}")))?;
        values.push(v);
    }
    Signal1D::new(values, h).map_err(|e| CliError::Parse {
        origin: origin.to_string(),
        line: 0,
        message: e.to_string(),
    })
}

pub fn read_signal_file(path: &Path) -> Result<Signal1D> {
    let file = File::open(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_signal(BufReader::new(file), &path.display().to_string())
}

pub fn write_signal_file(path: &Path, signal: &Signal1D) -> Result<()> {
    let io_err = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err)?;
    write_signal(BufWriter::new(file), signal).map_err(io_err)
}
