//! Canonical documents: a schema id, a format version and a JSON payload.
//!
//! Keys are emitted in sorted order and integers in plain decimal, so a fixed
//! value always serializes to the same bytes. Matrices travel as fixed-width
//! hex so that equal shapes give equal lengths.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::lattice::{reduce, Mat};

pub const FORMAT_VERSION: u32 = 1;

/// Schema ids of the payloads this crate writes.
pub mod schema {
    pub const SET_SYSTEM: &str = "ashvss/set-system";
    pub const VERIFICATION: &str = "ashvss/verification-report";
    pub const TOKEN_INSTANCE: &str = "ashvss/token-instance";
    pub const TOKEN_PACK: &str = "ashvss/token-pack";
    pub const SHARE: &str = "ashvss/share";
    pub const RECONSTRUCTION: &str = "ashvss/reconstruction";
    pub const VERDICTS: &str = "ashvss/verdicts";
    pub const SIMULATION: &str = "ashvss/simulation-report";

    pub const ALL: &[&str] =
        &[SET_SYSTEM, VERIFICATION, TOKEN_INSTANCE, TOKEN_PACK, SHARE, RECONSTRUCTION, VERDICTS, SIMULATION];
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("malformed document: {0}")]
    Malformed(String),
    #[error("unsupported format version {found} (expected {FORMAT_VERSION})")]
    Version { found: u64 },
    #[error("unknown schema {0:?}")]
    UnknownSchema(String),
    #[error("expected a {expected} document, found {found}")]
    SchemaMismatch { expected: String, found: String },
    #[error("declared width {declared} does not match {found} bytes of data")]
    Width { declared: usize, found: usize },
    #[error("value {value} does not fit below {bound}")]
    Overflow { value: u64, bound: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Document {
    pub schema: String,
    pub version: u32,
    pub payload: Value,
}

impl Document {
    pub fn encode<T: Serialize>(schema: &str, payload: &T) -> Result<Self, CodecError> {
        let payload = serde_json::to_value(payload).map_err(|e| CodecError::Malformed(e.to_string()))?;
        Ok(Document { schema: schema.to_string(), version: FORMAT_VERSION, payload })
    }

    pub fn decode<T: DeserializeOwned>(&self, schema: &str) -> Result<T, CodecError> {
        if self.schema != schema {
            return Err(CodecError::SchemaMismatch { expected: schema.into(), found: self.schema.clone() });
        }
        serde_json::from_value(self.payload.clone()).map_err(|e| CodecError::Malformed(e.to_string()))
    }
}

/// Sorted-key JSON bytes.
pub fn serialize(doc: &Document) -> Vec<u8> {
    let mut root = serde_json::Map::new();
    root.insert("payload".into(), doc.payload.clone());
    root.insert("schema".into(), Value::String(doc.schema.clone()));
    root.insert("version".into(), Value::from(doc.version));
    // `Map` is ordered by key, and re-parsing normalizes any nested maps.
    let v: Value = serde_json::from_str(&Value::Object(root).to_string()).expect("own output parses");
    serde_json::to_vec(&v).expect("JSON values always serialize")
}

pub fn deserialize(bytes: &[u8]) -> Result<Document, CodecError> {
    let v: Value = serde_json::from_slice(bytes).map_err(|e| CodecError::Malformed(e.to_string()))?;
    let Value::Object(mut root) = v else {
        return Err(CodecError::Malformed("top level must be an object".into()));
    };
    if root.len() != 3 {
        return Err(CodecError::Malformed("expected exactly payload, schema and version".into()));
    }
    let version = root
        .get("version")
        .and_then(Value::as_u64)
        .ok_or_else(|| CodecError::Malformed("missing integer version".into()))?;
    if version != FORMAT_VERSION as u64 {
        return Err(CodecError::Version { found: version });
    }
    let schema = root
        .get("schema")
        .and_then(Value::as_str)
        .ok_or_else(|| CodecError::Malformed("missing schema".into()))?
        .to_string();
    if !schema::ALL.contains(&schema.as_str()) {
        return Err(CodecError::UnknownSchema(schema));
    }
    let payload = root.remove("payload").ok_or_else(|| CodecError::Malformed("missing payload".into()))?;
    Ok(Document { schema, version: FORMAT_VERSION, payload })
}

/// Shorthand for `serialize(Document::encode(..))`.
pub fn to_bytes<T: Serialize>(schema: &str, payload: &T) -> Result<Vec<u8>, CodecError> {
    Ok(serialize(&Document::encode(schema, payload)?))
}

pub fn from_bytes<T: DeserializeOwned>(schema: &str, bytes: &[u8]) -> Result<T, CodecError> {
    deserialize(bytes)?.decode(schema)
}

/// A matrix of residues mod `q` as fixed-width, row-major hex.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HexMat {
    pub rows: usize,
    pub cols: usize,
    /// Hex digits per entry.
    pub width: usize,
    pub hex: String,
}

/// Hex digits needed for residues mod `q`.
pub fn hex_width(q: u64) -> usize {
    let bits = 64 - (q - 1).leading_zeros() as usize;
    bits.div_ceil(4).max(1)
}

impl HexMat {
    pub fn encode(m: &Mat, q: u64) -> HexMat {
        let width = hex_width(q);
        let mut hex = String::with_capacity(m.data().len() * width);
        for &x in m.data() {
            hex.push_str(&format!("{:0width$x}", reduce(x as i128, q)));
        }
        HexMat { rows: m.rows(), cols: m.cols(), width, hex }
    }

    /// Parses entries, each of which must lie below `q`.
    pub fn decode(&self, q: u64) -> Result<Mat, CodecError> {
        let width = hex_width(q);
        if self.width != width {
            return Err(CodecError::Width { declared: self.width, found: width });
        }
        let cells = self.rows.checked_mul(self.cols).and_then(|c| c.checked_mul(width));
        if cells != Some(self.hex.len()) {
            return Err(CodecError::Width { declared: cells.unwrap_or(usize::MAX), found: self.hex.len() });
        }
        if !self.hex.is_ascii() {
            return Err(CodecError::Malformed("non-ASCII hex".into()));
        }
        let mut data = Vec::with_capacity(self.rows * self.cols);
        for i in 0..self.rows * self.cols {
            let chunk = &self.hex[i * width..(i + 1) * width];
            let v = u64::from_str_radix(chunk, 16).map_err(|e| CodecError::Malformed(e.to_string()))?;
            if v >= q {
                return Err(CodecError::Overflow { value: v, bound: q });
            }
            data.push(v as i64);
        }
        Ok(Mat::from_vec(self.rows, self.cols, data))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sorted_and_stable() {
        let doc = Document::encode(schema::VERDICTS, &serde_json::json!({"b": 1, "a": [2, {"z": 0, "y": 1}]})).unwrap();
        let bytes = serialize(&doc);
        assert_eq!(
            String::from_utf8(bytes.clone()).unwrap(),
            r#"{"payload":{"a":[2,{"y":1,"z":0}],"b":1},"schema":"ashvss/verdicts","version":1}"#
        );
        assert_eq!(deserialize(&bytes).unwrap(), doc);
    }

    #[test]
    fn rejects() {
        let good = serialize(&Document::encode(schema::VERDICTS, &1u8).unwrap());
        let s = String::from_utf8(good).unwrap();
        let bumped = s.replace("\"version\":1", "\"version\":2");
        assert_eq!(deserialize(bumped.as_bytes()), Err(CodecError::Version { found: 2 }));
        let unknown = s.replace("ashvss/verdicts", "ashvss/other");
        assert!(matches!(deserialize(unknown.as_bytes()), Err(CodecError::UnknownSchema(_))));
        assert!(matches!(deserialize(&s.as_bytes()[..10]), Err(CodecError::Malformed(_))));
        assert!(matches!(deserialize(b"[]"), Err(CodecError::Malformed(_))));
        let doc = deserialize(s.as_bytes()).unwrap();
        assert!(matches!(doc.decode::<u8>(schema::SHARE), Err(CodecError::SchemaMismatch { .. })));
    }

    #[test]
    fn hex_matrices() {
        let q = 31 << 18;
        assert_eq!(hex_width(q), 6);
        assert_eq!(hex_width(16), 1);
        assert_eq!(hex_width(17), 2);
        let m = Mat::from_rows(&[vec![0, -1, 5], vec![q as i64 - 1, 17, 3]]);
        let h = HexMat::encode(&m, q);
        assert_eq!(h.hex.len(), 36);
        assert_eq!(h.decode(q).unwrap(), m.reduced(q));
        let mut short = h.clone();
        short.hex.pop();
        assert!(matches!(short.decode(q), Err(CodecError::Width { .. })));
        let mut wide = h.clone();
        wide.rows = usize::MAX;
        assert!(matches!(wide.decode(q), Err(CodecError::Width { .. })));
        let mut big = h;
        big.hex.replace_range(0..6, "ffffff");
        assert!(matches!(big.decode(q), Err(CodecError::Overflow { .. })));
    }
}
