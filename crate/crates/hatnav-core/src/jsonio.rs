//! Versioned JSON artifact files.
//!
//! Every machine-readable artifact is a JSON object with a `schema_version`
//! field followed by the payload fields. Serialization is deterministic
//! (fixed field order, shortest-roundtrip floats), which the pipeline's
//! byte-identity guarantee relies on.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Versioned<T> {
    schema_version: u32,
    #[serde(flatten)]
    body: T,
}

/// Serialize a payload with its schema version, pretty-printed with a
/// trailing newline.
pub fn to_json_bytes<T: Serialize>(body: &T) -> Result<Vec<u8>> {
    let doc = Versioned {
        schema_version: SCHEMA_VERSION,
        body,
    };
    let mut bytes = serde_json::to_vec_pretty(&doc)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn write_json<T: Serialize>(path: &Path, body: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, to_json_bytes(body)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    if !path.exists() {
        return Err(Error::FileNotFound(path.to_path_buf()));
    }
    let bytes = fs::read(path)?;
    let doc: Versioned<T> = serde_json::from_slice(&bytes)?;
    if doc.schema_version != SCHEMA_VERSION {
        return Err(Error::SchemaMismatch(format!(
            "{} has schema_version {}, expected {SCHEMA_VERSION}",
            path.display(),
            doc.schema_version
        )));
    }
    Ok(doc.body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Payload {
        a: f64,
        b: Vec<u32>,
    }

    #[test]
    fn roundtrip_with_version() {
        let path = std::env::temp_dir().join(format!(
            "hatnav-jsonio-{}-{:?}.json",
            std::process::id(),
            std::thread::current().id()
        ));
        let payload = Payload {
            a: 0.25,
            b: vec![1, 2, 3],
        };
        write_json(&path, &payload).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert!(text.contains("\"schema_version\": 1"));
        let back: Payload = read_json(&path).unwrap();
        fs::remove_file(&path).ok();
        assert_eq!(payload, back);
    }

    #[test]
    fn missing_file_is_file_not_found() {
        let err = read_json::<Payload>(Path::new("/nonexistent/x.json")).unwrap_err();
        assert!(matches!(err, Error::FileNotFound(_)));
    }
}
