//! Binary field snapshots.
//!
//! Layout, all little-endian:
//!
//! | offset | size | content |
//! |-------:|-----:|---------|
//! | 0  | 8  | magic `FNLSNAP\0` |
//! | 8  | 4  | format version (`u32`) |
//! | 12 | 4  | reserved, zero |
//! | 16 | 8  | `N` (`u64`) |
//! | 24 | 8  | `D` (`f64`) |
//! | 32 | 8  | `t` |
//! | 40 | 8  | `s` |
//! | 48 | 8  | `p` |
//! | 56 | 8  | `γ` |
//! | 64 | 8  | `ε` |
//! | 72 | 8  | ground-state residual, NaN for ordinary fields |
//! | 80 | 4  | CRC-32 of the payload |
//! | 84 | 4  | CRC-32 of bytes 0..84 |
//! | 88 | 16N | `N` pairs `(re, im)` of `f64` |

use std::path::Path;

use fnls::{Grid, ModelParams, PhysicalField};
use num_complex::Complex64;

use crate::io::{write_atomic, IoError};

pub const MAGIC: [u8; 8] = *b"FNLSNAP\0";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 88;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub version: u32,
    pub n: usize,
    pub d: f64,
    pub t: f64,
    pub s: f64,
    pub p: f64,
    pub gamma: f64,
    pub epsilon: f64,
    pub residual_norm: Option<f64>,
    pub payload_crc: u32,
}

impl SnapshotHeader {
    pub fn new(grid: &Grid, params: &ModelParams, t: f64, residual_norm: Option<f64>) -> Self {
        SnapshotHeader {
            version: VERSION,
            n: grid.n_modes(),
            d: grid.half_width(),
            t,
            s: params.s(),
            p: params.p(),
            gamma: params.gamma(),
            epsilon: params.epsilon(),
            residual_norm,
            payload_crc: 0,
        }
    }

    pub fn params(&self) -> fnls::Result<ModelParams> {
        ModelParams::new(self.s, self.p, self.gamma, self.epsilon)
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SnapshotError {
    #[error("not a snapshot file (bad magic)")]
    BadMagic,
    #[error("unsupported snapshot version {found}, this build reads version {VERSION}")]
    Version { found: u32 },
    #[error("file too short for a header: {len} bytes")]
    Truncated { len: usize },
    #[error("header checksum mismatch: stored {stored:08x}, computed {computed:08x}")]
    HeaderChecksum { stored: u32, computed: u32 },
    #[error("payload checksum mismatch: stored {stored:08x}, computed {computed:08x} over {bytes} bytes (expected {expected_bytes})")]
    PayloadChecksum {
        stored: u32,
        computed: u32,
        bytes: usize,
        expected_bytes: usize,
    },
    #[error("header describes N={n}, D={d}, which is not a valid grid: {reason}")]
    BadGrid { n: usize, d: f64, reason: String },
}

fn put(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

pub fn encode(field: &PhysicalField, header: &SnapshotHeader) -> Vec<u8> {
    let values = field.values();
    let mut payload = Vec::with_capacity(16 * values.len());
    for z in values {
        payload.extend_from_slice(&z.re.to_le_bytes());
        payload.extend_from_slice(&z.im.to_le_bytes());
    }
    let mut buf = Vec::with_capacity(HEADER_LEN + payload.len());
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&0u32.to_le_bytes());
    buf.extend_from_slice(&(values.len() as u64).to_le_bytes());
    put(&mut buf, field.grid().half_width());
    put(&mut buf, header.t);
    put(&mut buf, header.s);
    put(&mut buf, header.p);
    put(&mut buf, header.gamma);
    put(&mut buf, header.epsilon);
    put(&mut buf, header.residual_norm.unwrap_or(f64::NAN));
    buf.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
    let header_crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&header_crc.to_le_bytes());
    buf.extend_from_slice(&payload);
    buf
}

fn f64_at(b: &[u8], off: usize) -> f64 {
    f64::from_le_bytes(b[off..off + 8].try_into().expect("8 bytes"))
}

fn u32_at(b: &[u8], off: usize) -> u32 {
    u32::from_le_bytes(b[off..off + 4].try_into().expect("4 bytes"))
}

pub fn decode(bytes: &[u8]) -> Result<(PhysicalField, SnapshotHeader), SnapshotError> {
    if bytes.len() < 8 || bytes[..8] != MAGIC {
        return Err(if bytes.len() < 8 {
            SnapshotError::Truncated { len: bytes.len() }
        } else {
            SnapshotError::BadMagic
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(SnapshotError::Truncated { len: bytes.len() });
    }
    let version = u32_at(bytes, 8);
    let stored = u32_at(bytes, 84);
    let computed = crc32fast::hash(&bytes[..84]);
    if stored != computed {
        return Err(SnapshotError::HeaderChecksum { stored, computed });
    }
    if version != VERSION {
        return Err(SnapshotError::Version { found: version });
    }
    let n = u64::from_le_bytes(bytes[16..24].try_into().expect("8 bytes")) as usize;
    let residual = f64_at(bytes, 72);
    let header = SnapshotHeader {
        version,
        n,
        d: f64_at(bytes, 24),
        t: f64_at(bytes, 32),
        s: f64_at(bytes, 40),
        p: f64_at(bytes, 48),
        gamma: f64_at(bytes, 56),
        epsilon: f64_at(bytes, 64),
        residual_norm: (!residual.is_nan()).then_some(residual),
        payload_crc: u32_at(bytes, 80),
    };
    let payload = &bytes[HEADER_LEN..];
    let computed = crc32fast::hash(payload);
    if computed != header.payload_crc || payload.len() != 16 * n {
        return Err(SnapshotError::PayloadChecksum {
            stored: header.payload_crc,
            computed,
            bytes: payload.len(),
            expected_bytes: 16 * n,
        });
    }
    let grid = Grid::new(n, header.d).map_err(|e| SnapshotError::BadGrid {
        n,
        d: header.d,
        reason: e.to_string(),
    })?;
    let values = payload
        .chunks_exact(16)
        .map(|c| Complex64::new(f64_at(c, 0), f64_at(c, 8)))
        .collect();
    let field = PhysicalField::new(grid, values).expect("length checked");
    Ok((field, header))
}

pub fn write_snapshot(path: &Path, field: &PhysicalField, header: &SnapshotHeader) -> Result<(), IoError> {
    write_atomic(path, &encode(field, header))
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{path}: {source}")]
    Format { path: String, source: SnapshotError },
}

pub fn read_snapshot(path: &Path) -> Result<(PhysicalField, SnapshotHeader), ReadError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::new(path, e))?;
    decode(&bytes).map_err(|source| ReadError::Format {
        path: path.display().to_string(),
        source,
    })
}
