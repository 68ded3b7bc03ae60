//! JSON interchange format for decompositions.

use std::fs;
use std::io::Write;
use std::path::Path;

use sbtd::{CoreStructure, Decomposition, DenseMatrix, DenseTensor, Term};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionDocument {
    pub schema_version: u32,
    pub dims: Vec<usize>,
    pub terms: Vec<TermDocument>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDocument {
    pub structure: CoreStructure,
    /// One row-major matrix per mode.
    pub factors: Vec<Vec<Vec<f64>>>,
    pub core: CoreDocument,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoreDocument {
    pub dims: Vec<usize>,
    /// Entries in linear order, last index fastest.
    pub data: Vec<f64>,
}

impl DecompositionDocument {
    pub fn from_decomposition(s: &Decomposition) -> Self {
        let terms = s
            .terms()
            .iter()
            .map(|t| TermDocument {
                structure: t.structure(),
                factors: t.factors().iter().map(DenseMatrix::to_rows).collect(),
                core: CoreDocument {
                    dims: t.core().dims().to_vec(),
                    data: t.core().data().to_vec(),
                },
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            dims: s.dims().to_vec(),
            terms,
        }
    }

    /// Builds and validates the decomposition; errors name the offending
    /// field.
    pub fn to_decomposition(&self) -> CliResult<Decomposition> {
        let bad = |path: String, msg: String| CliError::Input(format!("{path}: {msg}"));
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(
                "schema_version".into(),
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        if self.terms.is_empty() {
            return Err(bad("terms".into(), "at least one term is required".into()));
        }
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(bad("dims".into(), format!("{:?} is not a valid shape", self.dims)));
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for (r, t) in self.terms.iter().enumerate() {
            let at = format!("terms[{r}]");
            if t.factors.len() != self.dims.len() {
                return Err(bad(
                    format!("{at}.factors"),
                    format!("{} factors for an order-{} decomposition", t.factors.len(), self.dims.len()),
                ));
            }
            if t.core.dims.len() != self.dims.len() {
                return Err(bad(
                    format!("{at}.core.dims"),
                    format!("core order {} differs from order {}", t.core.dims.len(), self.dims.len()),
                ));
            }
            let mut factors = Vec::with_capacity(t.factors.len());
            for (d, rows) in t.factors.iter().enumerate() {
                let path = format!("{at}.factors[{d}]");
                if rows.len() != self.dims[d] {
                    return Err(bad(path, format!("{} rows, expected {}", rows.len(), self.dims[d])));
                }
                if let Some(i) = rows.iter().position(|row| row.len() != t.core.dims[d]) {
                    return Err(bad(
                        format!("{path}[{i}]"),
                        format!("{} columns, expected core dim {}", rows[i].len(), t.core.dims[d]),
                    ));
                }
                factors.push(DenseMatrix::from_rows(rows).map_err(|e| bad(path, e.to_string()))?);
            }
            let core = DenseTensor::new(t.core.dims.clone(), t.core.data.clone())
                .map_err(|e| bad(format!("{at}.core"), e.to_string()))?;
            let term = Term::new(factors, core, t.structure).map_err(|e| bad(at.clone(), e.to_string()))?;
            terms.push(term);
        }
        let s = Decomposition::new(terms).map_err(|e| bad("terms".into(), e.to_string()))?;
        let report = s.validate(1e-10);
        if !report.is_valid() {
            return Err(CliError::Input(format!("invalid decomposition: {}", report.failures().join("; "))));
        }
        Ok(s)
    }
}

pub fn parse_document(text: &str) -> CliResult<DecompositionDocument> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Input(format!("{path}: {}", e.inner()))
    })
}

pub fn load_decomposition(path: &Path) -> CliResult<Decomposition> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    parse_document(&text)?.to_decomposition()
}

/// Writes through a temporary file in the target directory, so a failed
/// write never leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Input(format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

pub fn save_decomposition(path: &Path, s: &Decomposition) -> CliResult<()> {
    let doc = DecompositionDocument::from_decomposition(s);
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Input(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    const ODECO: &str = r#"{
        "schema_version": 1,
        "dims": [2, 2, 2],
        "terms": [
            {"structure": "rank1", "factors": [[[1.0], [0.0]], [[1.0], [0.0]], [[1.0], [0.0]]], "core": {"dims": [1, 1, 1], "data": [2.0]}},
            {"structure": "rank1", "factors": [[[0.0], [1.0]], [[0.0], [1.0]], [[0.0], [1.0]]], "core": {"dims": [1, 1, 1], "data": [-1.0]}}
        ]
    }"#;

    #[test]
    fn round_trip() {
        let s = parse_document(ODECO).unwrap().to_decomposition().unwrap();
        let doc = DecompositionDocument::from_decomposition(&s);
        assert_eq!(doc.to_decomposition().unwrap(), s);
    }

    #[test]
    fn type_errors_name_the_path() {
        let text = ODECO.replace("\"data\": [2.0]", "\"data\": [\"x\"]");
        let msg = parse_document(&text).unwrap_err().to_string();
        assert!(msg.starts_with("terms[0].core.data[0]"), "{msg}");
    }

    #[test]
    fn shape_errors_name_the_field() {
        let text = ODECO.replacen("[[[1.0], [0.0]], [[1.0], [0.0]]", "[[[1.0], [0.0]], [[1.0, 2.0], [0.0]]", 1);
        let msg = parse_document(&text).unwrap().to_decomposition().unwrap_err().to_string();
        assert!(msg.starts_with("terms[0].factors[1][0]"), "{msg}");
        let text = ODECO.replace("\"schema_version\": 1", "\"schema_version\": 7");
        let msg = parse_document(&text).unwrap().to_decomposition().unwrap_err().to_string();
        assert!(msg.starts_with("schema_version"), "{msg}");
    }

    #[test]
    fn rank_deficient_factor_rejected() {
        let text = ODECO.replacen("[[[1.0], [0.0]]", "[[[0.0], [0.0]]", 1);
        let msg = parse_document(&text).unwrap().to_decomposition().unwrap_err().to_string();
        assert!(msg.contains("term 0"), "{msg}");
    }
}
