//! Content-addressed JSON artifacts and construction trees.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// SHA-256 of the canonical (key-sorted, compact) JSON encoding.
pub fn content_hash(v: &Value) -> String {
    let canon = serde_json::to_string(v).expect("json values always serialize");
    hex::encode(Sha256::digest(canon.as_bytes()))
}

/// Wraps a body as `{kind, params, body..., hash}`; the hash covers every
/// other field.
pub fn seal(kind: &str, params: Value, body: Value) -> Value {
    let mut obj = json!({ "kind": kind, "params": params });
    if let (Value::Object(dst), Value::Object(src)) = (&mut obj, body) {
        for (k, v) in src {
            dst.insert(k, v);
        }
    }
    let h = content_hash(&obj);
    obj["hash"] = Value::String(h);
    obj
}

/// Checks kind and hash of a sealed artifact and returns it without the hash.
pub fn unseal(v: &Value, kind: &str) -> Result<Value> {
    let got = v.get("kind").and_then(Value::as_str).unwrap_or("");
    if got != kind {
        return Err(Error::Parse(format!("expected artifact kind {kind:?}, found {got:?}")));
    }
    let mut body = v.clone();
    let stored = body
        .as_object_mut()
        .and_then(|o| o.remove("hash"))
        .and_then(|h| h.as_str().map(str::to_owned))
        .ok_or_else(|| Error::Parse("artifact has no hash".into()))?;
    let actual = content_hash(&body);
    if actual != stored {
        return Err(Error::Verification(format!("hash mismatch: stored {stored}, computed {actual}")));
    }
    Ok(body)
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json(path: &Path, v: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(v)?;
    std::fs::write(path, text + "\n")?;
    Ok(())
}

/// Serializable description of how a descriptor was assembled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionTree {
    pub kind: String,
    #[serde(default)]
    pub params: Value,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<ConstructionTree>,
}

impl ConstructionTree {
    pub fn leaf(kind: &str, params: Value) -> Self {
        ConstructionTree { kind: kind.to_owned(), params, children: Vec::new() }
    }

    pub fn node(kind: &str, params: Value, children: Vec<ConstructionTree>) -> Self {
        ConstructionTree { kind: kind.to_owned(), params, children }
    }

    pub fn hash(&self) -> String {
        content_hash(&serde_json::to_value(self).expect("tree serializes"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seal_roundtrip_and_tamper() {
        let a = seal("design", json!({"n": 8}), json!({"sets": [[0, 1], [2, 3]]}));
        assert!(unseal(&a, "design").is_ok());
        assert!(unseal(&a, "weak_design").is_err());
        let mut b = a.clone();
        b["sets"][0][0] = json!(5);
        assert!(matches!(unseal(&b, "design"), Err(Error::Verification(_))));
    }

    #[test]
    fn hash_ignores_key_order() {
        let x: Value = serde_json::from_str(r#"{"a":1,"b":2}"#).unwrap();
        let y: Value = serde_json::from_str(r#"{"b":2,"a":1}"#).unwrap();
        assert_eq!(content_hash(&x), content_hash(&y));
    }
}
