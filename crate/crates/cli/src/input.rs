//! Chain files: JSON `{"states": [...], "P": [[...]], "pi": [...]}` or a
//! headerless CSV square matrix.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use l2gap_core::{stationary, KernelMatrix, TransitionKernel};

use crate::report::num;

/// Largest allowed gap between a supplied `"pi"` and the solved one.
pub const PI_MATCH_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct ChainFile {
    pub kernel: TransitionKernel,
    /// SHA-256 of the raw file bytes, hex encoded.
    pub digest: String,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn load(path: &Path) -> Result<ChainFile> {
    let bytes = std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    let kernel = if is_csv {
        parse_csv(&bytes)?
    } else {
        parse_json(&bytes)?
    };
    Ok(ChainFile {
        kernel,
        digest: digest(&bytes),
    })
}

fn number(v: &Value, what: &str) -> Result<f64> {
    v.as_f64().with_context(|| format!("{what} is not a number"))
}

pub fn parse_json(bytes: &[u8]) -> Result<TransitionKernel> {
    let doc: Value = serde_json::from_slice(bytes).context("parsing chain JSON")?;
    let obj = doc.as_object().context("chain file must be a JSON object")?;
    let rows = obj
        .get("P")
        .and_then(Value::as_array)
        .context("missing array \"P\"")?
        .iter()
        .enumerate()
        .map(|(i, row)| {
            row.as_array()
                .with_context(|| format!("row {i} of \"P\" is not an array"))?
                .iter()
                .enumerate()
                .map(|(j, v)| number(v, &format!("P[{i}][{j}]")))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<String> = match obj.get("states") {
        Some(Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) => Ok(n.to_string()),
                _ => bail!("state labels must be strings or numbers"),
            })
            .collect::<Result<_>>()?,
        Some(_) => bail!("\"states\" must be an array"),
        None => (0..rows.len()).map(|i| i.to_string()).collect(),
    };
    let kernel = TransitionKernel::new(labels, rows)?;
    if let Some(pi) = obj.get("pi") {
        let given = pi
            .as_array()
            .context("\"pi\" must be an array")?
            .iter()
            .enumerate()
            .map(|(i, v)| number(v, &format!("pi[{i}]")))
            .collect::<Result<Vec<f64>>>()?;
        check_pi(&kernel, &given)?;
    }
    Ok(kernel)
}

fn check_pi(kernel: &TransitionKernel, given: &[f64]) -> Result<()> {
    if given.len() != kernel.dim() {
        bail!("\"pi\" has {} entries for {} states", given.len(), kernel.dim());
    }
    let solved = stationary(kernel)?;
    let worst = given
        .iter()
        .zip(solved.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if !(worst <= PI_MATCH_TOL) {
        bail!("supplied \"pi\" differs from the stationary distribution by {worst:e}");
    }
    Ok(())
}

pub fn parse_csv(bytes: &[u8]) -> Result<TransitionKernel> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("reading CSV row {i}"))?;
        let row = record
            .iter()
            .enumerate()
            .map(|(j, field)| {
                field
                    .parse::<f64>()
                    .with_context(|| format!("CSV entry ({i}, {j}) = {field:?} is not a number"))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(TransitionKernel::unlabeled(rows)?)
}

/// The JSON chain-file form of `kernel`.
pub fn to_json(kernel: &TransitionKernel) -> Value {
    let mut obj = Map::new();
    obj.insert(
        "states".into(),
        Value::Array(kernel.labels().iter().cloned().map(Value::String).collect()),
    );
    obj.insert(
        "P".into(),
        Value::Array(
            kernel
                .to_rows()
                .into_iter()
                .map(|row| Value::Array(row.into_iter().map(num).collect()))
                .collect(),
        ),
    );
    Value::Object(obj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip_is_exact() {
        let k = l2gap_core::zoo::random_stochastic(5, 3, 0.2).unwrap();
        let text = serde_json::to_string(&to_json(&k)).unwrap();
        assert_eq!(parse_json(text.as_bytes()).unwrap(), k);
    }

    #[test]
    fn pi_is_checked() {
        let ok = br#"{"states": ["a", "b"], "P": [[0.7, 0.3], [0.2, 0.8]], "pi": [0.4, 0.6]}"#;
        assert!(parse_json(ok).is_ok());
        let bad = br#"{"states": ["a", "b"], "P": [[0.7, 0.3], [0.2, 0.8]], "pi": [0.5, 0.5]}"#;
        assert!(parse_json(bad).is_err());
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_json(b"[1, 2]").is_err());
        assert!(parse_json(br#"{"P": [[0.5, 0.6], [0.5, 0.5]]}"#).is_err());
        assert!(parse_json(br#"{"P": [["x"]]}"#).is_err());
    }

    #[test]
    fn csv_matrix() {
        let k = parse_csv(b"0.5, 0.5\n0.25, 0.75\n").unwrap();
        assert_eq!(k.labels(), ["0", "1"]);
        assert_eq!(k.entry(1, 1), 0.75);
        assert!(parse_csv(b"0.5,0.5\n1\n").is_err());
    }
}
