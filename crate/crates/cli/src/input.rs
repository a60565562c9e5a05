use std::collections::BTreeSet;
use std::path::Path;

use serde::de::DeserializeOwned;
use stoqwalk_core::compile::{CircuitFile, StoqVerifier};
use stoqwalk_core::instance::{InstanceFile, ValidationReport};
use stoqwalk_core::{Bitstring, Caps, Hamiltonian};

use crate::report::{CliResult, Source, UsageError};

pub fn read(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

/// Strict JSON parse with `path:line:column` diagnostics.
pub fn parse<T: DeserializeOwned>(path: &Path, bytes: &[u8]) -> CliResult<T> {
    serde_json::from_slice(bytes).map_err(|e| {
        UsageError(format!(
            "{}:{}:{}: {}",
            path.display(),
            e.line(),
            e.column(),
            strip_position(&e.to_string())
        ))
    })
}

// serde_json appends " at line L column C"; the prefix already carries it
fn strip_position(msg: &str) -> &str {
    msg.rfind(" at line ").map_or(msg, |j| &msg[..j])
}

/// Parsed but not yet validated instance file.
pub fn instance_file(path: &Path) -> CliResult<(InstanceFile, Source)> {
    let bytes = read(path)?;
    let file = parse(path, &bytes)?;
    Ok((file, Source::new(path, &bytes)))
}

pub fn instance(path: &Path, caps: &Caps) -> CliResult<(Hamiltonian, Source)> {
    let (file, src) = instance_file(path)?;
    let report: ValidationReport = stoqwalk_core::instance::validate(&file, caps);
    if !report.is_valid() {
        return Err(UsageError(format!("{}: invalid instance: {report}", path.display())));
    }
    Ok((Hamiltonian::from_file(&file, caps)?, src))
}

pub fn circuit(path: &Path) -> CliResult<(StoqVerifier, Source)> {
    let bytes = read(path)?;
    let file: CircuitFile = parse(path, &bytes)?;
    let v = StoqVerifier::from_file(&file).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    Ok((v, Source::new(path, &bytes)))
}

pub fn bitstring(s: &str, len: usize, what: &str) -> CliResult<Bitstring> {
    let x: Bitstring = s.parse().map_err(|e| UsageError(format!("{what}: {e}")))?;
    if x.len() != len {
        return Err(UsageError(format!("{what} {s:?} has length {}, expected {len}", x.len())));
    }
    Ok(x)
}

/// Whitespace-separated bitstrings; `#` starts a comment.
pub fn string_set(path: &Path, len: usize) -> CliResult<BTreeSet<Bitstring>> {
    let text = String::from_utf8(read(path)?).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    let mut out = BTreeSet::new();
    for (j, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        for tok in body.split_whitespace() {
            out.insert(bitstring(tok, len, &format!("{}:{}", path.display(), j + 1))?);
        }
    }
    Ok(out)
}
