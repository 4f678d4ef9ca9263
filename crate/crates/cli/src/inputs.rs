//! Resolution of input arguments to bytes: a file path, or the name of a
//! bundled asset. `FRAGILIS_DATA_DIR` shadows the bundled copies.

use std::path::{Path, PathBuf};

use fragilis::assets;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const DATA_DIR_ENV: &str = "FRAGILIS_DATA_DIR";

pub struct Input {
    /// The argument as given.
    pub arg: String,
    /// Where the bytes came from: a path or `bundled:<file>`.
    pub source: String,
    pub bytes: Vec<u8>,
}

impl Input {
    pub fn sha256(&self) -> String {
        sha256_hex(&self.bytes)
    }

    pub fn parse_error(&self, message: impl ToString) -> CliError {
        CliError::Parse {
            source_name: self.source.clone(),
            message: message.to_string(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn resolve(arg: &str) -> CliResult<Input> {
    let path = Path::new(arg);
    if path.is_file() {
        return Ok(Input {
            arg: arg.to_string(),
            source: arg.to_string(),
            bytes: read(path)?,
        });
    }
    let Some((file, contents)) = assets::find(arg) else {
        return Err(CliError::Usage(format!("`{arg}` is neither a file nor a bundled asset")));
    };
    if let Some(dir) = std::env::var_os(DATA_DIR_ENV) {
        let candidate = PathBuf::from(dir).join(file);
        if candidate.is_file() {
            return Ok(Input {
                arg: arg.to_string(),
                source: candidate.display().to_string(),
                bytes: read(&candidate)?,
            });
        }
    }
    Ok(Input {
        arg: arg.to_string(),
        source: format!("bundled:{file}"),
        bytes: contents.as_bytes().to_vec(),
    })
}
