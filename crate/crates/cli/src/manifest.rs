use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub name: String,
    pub source: String,
    pub sha256: String,
}

/// Provenance record written next to every command's outputs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub argv: Vec<String>,
    pub inputs: Vec<FileDigest>,
    pub seed: Option<u64>,
    /// RFC 3339, UTC.
    pub timestamp: String,
    pub outputs: Vec<FileDigest>,
}

impl RunManifest {
    pub fn file_name(command: &str) -> String {
        format!("{command}.manifest.json")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips_through_json() {
        let m = RunManifest {
            tool: "fragilis".into(),
            version: "0.1.0".into(),
            command: "stress".into(),
            argv: vec!["fragilis".into(), "stress".into(), "model.json".into()],
            inputs: vec![FileDigest {
                name: "model".into(),
                source: "model.json".into(),
                sha256: "00ff".into(),
            }],
            seed: Some(7),
            timestamp: "2024-01-01T00:00:00Z".into(),
            outputs: vec![],
        };
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<RunManifest>(&text).unwrap(), m);
    }
}
