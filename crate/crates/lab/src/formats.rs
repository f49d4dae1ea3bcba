//! Plain-text and CSV file formats.
//!
//! - Degree file: first line `n`, second line the `n` degrees separated by
//!   spaces. Loading validates every sequence invariant.
//! - Pairing file: `m` lines `s t`, point indices of one matching-pair.
//! - Edge list: one line `u v` per matching-pair; loops appear as `u u`.
//! - Trace CSV: header `t,A,delta_A,partner_degree,component_id`, one row
//!   per exploration step; `partner_degree` is 0 for an in-cluster partner.
//!
//! CSV artifacts written by the harness start with one provenance line
//! `# pairlab <version> config=<hash> seed=<seed>` before the header.

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use pairlab_core::degree::{DegreeError, DegreeSequence};
use pairlab_core::exploration::StepRecord;
use pairlab_core::pairing::{Pairing, PairingError, PointSpace};
use thiserror::Error;

pub const TRACE_HEADER: &str = "t,A,delta_A,partner_degree,component_id";

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Degree(#[from] DegreeError),
    #[error(transparent)]
    Pairing(#[from] PairingError),
}

fn parse_err(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Parse {
        line,
        message: message.into(),
    }
}

/// Parses the raw degree list without checking sequence invariants.
pub fn parse_degree_list(text: &str) -> Result<Vec<u32>, FormatError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (ln, first) = lines.next().ok_or_else(|| parse_err(1, "missing vertex count"))?;
    let n: usize = first
        .trim()
        .parse()
        .map_err(|e| parse_err(ln + 1, format!("vertex count: {e}")))?;
    let (ln, second) = lines.next().ok_or_else(|| parse_err(ln + 2, "missing degree line"))?;
    let degrees = second
        .split_whitespace()
        .map(|tok| {
            tok.parse::<u32>()
                .map_err(|e| parse_err(ln + 1, format!("degree {tok:?}: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if degrees.len() != n {
        return Err(parse_err(
            ln + 1,
            format!("expected {n} degrees, found {}", degrees.len()),
        ));
    }
    if let Some((ln, _)) = lines.next() {
        return Err(parse_err(ln + 1, "unexpected trailing content"));
    }
    Ok(degrees)
}

pub fn parse_degree_sequence(text: &str) -> Result<DegreeSequence, FormatError> {
    Ok(DegreeSequence::new(parse_degree_list(text)?)?)
}

pub fn read_degree_sequence(path: &Path) -> Result<DegreeSequence, FormatError> {
    parse_degree_sequence(&fs::read_to_string(path)?)
}

pub fn format_degree_sequence(seq: &DegreeSequence) -> String {
    let mut out = format!("{}\n", seq.n());
    for (i, d) in seq.degrees().iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{d}").unwrap();
    }
    out.push('\n');
    out
}

pub fn write_pairing<W: Write>(mut w: W, p: &Pairing<'_>) -> io::Result<()> {
    for (s, t) in p.pairs() {
        writeln!(w, "{s} {t}")?;
    }
    Ok(())
}

pub fn parse_pairing<'s>(space: &'s PointSpace, text: &str) -> Result<Pairing<'s>, FormatError> {
    let mut pairs = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace().map(|tok| {
            tok.parse::<u32>()
                .map_err(|e| parse_err(ln + 1, format!("point {tok:?}: {e}")))
        });
        let (Some(a), Some(b), None) = (it.next(), it.next(), it.next()) else {
            return Err(parse_err(ln + 1, "expected two point indices"));
        };
        pairs.push((a?, b?));
    }
    Ok(Pairing::from_pairs(space, &pairs)?)
}

pub fn write_edge_list<W: Write>(mut w: W, p: &Pairing<'_>) -> io::Result<()> {
    for (u, v) in p.edges() {
        writeln!(w, "{u} {v}")?;
    }
    Ok(())
}

pub fn write_trace_rows<W: Write>(mut w: W, steps: &[StepRecord], component_id: Option<u64>) -> io::Result<()> {
    for rec in steps {
        let id = component_id.unwrap_or(u64::from(rec.component_id));
        writeln!(
            w,
            "{},{},{},{},{}",
            rec.t, rec.active, rec.delta_active, rec.partner_degree, id
        )?;
    }
    Ok(())
}

/// Provenance line placed above every CSV header.
pub fn provenance_line(config_hash: &str, seed: u64) -> String {
    format!(
        "# pairlab {} config={config_hash} seed={seed}",
        env!("CARGO_PKG_VERSION")
    )
}
