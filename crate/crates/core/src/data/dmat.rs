//! DMAT: a minimal dense binary matrix container.
//!
//! Layout (all integers little-endian, no padding):
//!
//! ```text
//! offset  size        field
//! 0       4           magic "DMAT"
//! 4       4           format version (u32) = 1
//! 8       4           rows (u32)
//! 12      4           cols (u32)
//! 16      rows*cols*4 row-major IEEE-754 binary32 values
//! ...     4           optional: name length (u32)
//! ...     len         optional: UTF-8 name
//! ```

use std::fs;
use std::path::Path;

use super::ViewMatrix;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"DMAT";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

/// Serializes a view into DMAT bytes, embedding its name.
pub fn to_bytes(view: &ViewMatrix) -> Vec<u8> {
    let name = view.name().as_bytes();
    let mut out = Vec::with_capacity(HEADER_LEN + view.data().len() * 4 + 4 + name.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(view.rows() as u32).to_le_bytes());
    out.extend_from_slice(&(view.dim() as u32).to_le_bytes());
    for v in view.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    if !name.is_empty() {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name);
    }
    out
}

fn read_u32(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap())
}

/// Parses DMAT bytes. `origin` is only used in diagnostics.
///
/// Returns the view and whether the file carried an embedded name. When it
/// did not, the view is named `fallback_name`.
pub fn from_bytes(bytes: &[u8], origin: &Path, fallback_name: &str) -> Result<(ViewMatrix, bool)> {
    let fail = |offset: usize, message: String| Error::Format {
        path: origin.to_path_buf(),
        location: format!("byte {offset}"),
        message,
    };

    if bytes.len() < HEADER_LEN {
        return Err(fail(
            bytes.len(),
            format!("truncated header: need {HEADER_LEN} bytes, file has {}", bytes.len()),
        ));
    }
    if &bytes[0..4] != MAGIC {
        return Err(fail(0, format!("bad magic {:?}, expected \"DMAT\"", &bytes[0..4])));
    }
    let version = read_u32(bytes, 4);
    if version != VERSION {
        return Err(fail(4, format!("unsupported format version {version}")));
    }
    let rows = read_u32(bytes, 8) as usize;
    let cols = read_u32(bytes, 12) as usize;
    if rows == 0 || cols == 0 {
        return Err(fail(8, format!("empty matrix ({rows} x {cols})")));
    }
    let payload = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| fail(8, format!("dimensions {rows} x {cols} overflow")))?;
    let end = HEADER_LEN + payload;
    if bytes.len() < end {
        return Err(fail(
            bytes.len(),
            format!(
                "truncated payload: {rows} x {cols} needs {payload} bytes from offset {HEADER_LEN}, found {}",
                bytes.len() - HEADER_LEN
            ),
        ));
    }

    let mut data = Vec::with_capacity(rows * cols);
    for (i, chunk) in bytes[HEADER_LEN..end].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::Format {
                path: origin.to_path_buf(),
                location: format!("byte {} (row {}, col {})", HEADER_LEN + 4 * i, i / cols, i % cols),
                message: format!("non-finite value {v}"),
            });
        }
        data.push(v);
    }

    let rest = &bytes[end..];
    let (name, embedded) = if rest.is_empty() {
        (fallback_name.to_string(), false)
    } else {
        if rest.len() < 4 {
            return Err(fail(end, "truncated name length".into()));
        }
        let len = read_u32(bytes, end) as usize;
        let name_bytes = &rest[4..];
        if name_bytes.len() != len {
            return Err(fail(end + 4, format!("name length {len} but {} bytes follow", name_bytes.len())));
        }
        let name = std::str::from_utf8(name_bytes).map_err(|e| fail(end + 4 + e.valid_up_to(), "name is not valid UTF-8".into()))?;
        (name.to_string(), true)
    };

    Ok((ViewMatrix::new(name, rows, cols, data)?, embedded))
}

pub fn write(view: &ViewMatrix, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(view)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<ViewMatrix> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let stem = super::file_stem(path);
    from_bytes(&bytes, path, &stem).map(|(v, _)| v)
}
