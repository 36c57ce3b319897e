//! Versioned single-file container: a JSON manifest followed by binary
//! blocks of little-endian `f64`.
//!
//! ```text
//! "DRGA" | version u32 | manifest_len u32 | manifest (UTF-8 JSON)
//! | block_count u32 | { len u64 | len x f64 }*
//! ```

use std::path::Path;

use crate::error::{Error, Result};

pub const ARCHIVE_MAGIC: &[u8; 4] = b"DRGA";
pub const ARCHIVE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Archive {
    pub manifest: serde_json::Value,
    pub blocks: Vec<Vec<f64>>,
}

impl Archive {
    pub fn to_bytes(&self) -> Vec<u8> {
        let manifest = serde_json::to_vec(&self.manifest).expect("manifest serializes");
        let mut out = Vec::new();
        out.extend_from_slice(ARCHIVE_MAGIC);
        out.extend_from_slice(&ARCHIVE_VERSION.to_le_bytes());
        out.extend_from_slice(&(manifest.len() as u32).to_le_bytes());
        out.extend_from_slice(&manifest);
        out.extend_from_slice(&(self.blocks.len() as u32).to_le_bytes());
        for block in &self.blocks {
            out.extend_from_slice(&(block.len() as u64).to_le_bytes());
            for v in block {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], origin: &Path) -> Result<Self> {
        let fail = |offset: usize, message: &str| Error::Format {
            path: origin.to_path_buf(),
            location: format!("byte {offset}"),
            message: message.to_string(),
        };
        let mut at = 0usize;
        let mut take = |n: usize, what: &str| -> Result<&[u8]> {
            if bytes.len() < at + n {
                return Err(fail(at, &format!("truncated {what}")));
            }
            let s = &bytes[at..at + n];
            at += n;
            Ok(s)
        };
        if take(4, "magic")? != ARCHIVE_MAGIC {
            return Err(fail(0, "bad magic, expected \"DRGA\""));
        }
        let version = u32::from_le_bytes(take(4, "version")?.try_into().unwrap());
        if version != ARCHIVE_VERSION {
            return Err(fail(4, &format!("unsupported archive version {version}")));
        }
        let len = u32::from_le_bytes(take(4, "manifest length")?.try_into().unwrap()) as usize;
        let manifest: serde_json::Value =
            serde_json::from_slice(take(len, "manifest")?).map_err(|e| fail(12, &format!("manifest: {e}")))?;
        let count = u32::from_le_bytes(take(4, "block count")?.try_into().unwrap()) as usize;
        let mut blocks = Vec::with_capacity(count);
        for _ in 0..count {
            let n = u64::from_le_bytes(take(8, "block length")?.try_into().unwrap()) as usize;
            let raw = take(n.checked_mul(8).ok_or_else(|| fail(0, "block too large"))?, "block")?;
            blocks.push(raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect());
        }
        if at != bytes.len() {
            return Err(fail(at, "trailing bytes after last block"));
        }
        Ok(Self { manifest, blocks })
    }
}

pub fn write_archive(archive: &Archive, path: &Path) -> Result<()> {
    std::fs::write(path, archive.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_archive(path: &Path) -> Result<Archive> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Archive::from_bytes(&bytes, path)
}
