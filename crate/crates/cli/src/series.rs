//! Diagnostic series as CSV.
//!
//! Columns `t,mass,energy,delta_E,sup_norm,grad_l2,hdot_sigma,delta_sing,mu`,
//! every value written with 17 significant digits so that a read-back
//! reproduces the `f64` exactly.

use std::path::Path;

use fnls::Sample;

use crate::io::{write_atomic, IoError};

pub const HEADER: [&str; 9] = [
    "t",
    "mass",
    "energy",
    "delta_E",
    "sup_norm",
    "grad_l2",
    "hdot_sigma",
    "delta_sing",
    "mu",
];

#[derive(Debug, thiserror::Error)]
pub enum SeriesError {
    #[error(transparent)]
    Io(#[from] IoError),
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

pub fn series_to_csv(series: &[Sample]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(HEADER).expect("in-memory write");
    for s in series {
        let row = [s.t, s.mass, s.energy, s.delta_e, s.sup_norm, s.grad_l2, s.hdot_sigma, s.delta, s.mu];
        w.write_record(row.iter().map(|v| fmt17(*v))).expect("in-memory write");
    }
    w.into_inner().expect("in-memory flush")
}

pub fn write_series(path: &Path, series: &[Sample]) -> Result<(), IoError> {
    write_atomic(path, &series_to_csv(series))
}

/// Parses a series; `tail_ratio` is not part of the file and reads as NaN.
pub fn series_from_csv(text: &[u8], path: &str) -> Result<Vec<Sample>, SeriesError> {
    let err = |message: String| SeriesError::Format {
        path: path.to_string(),
        message,
    };
    let mut r = csv::Reader::from_reader(text);
    let headers = r.headers().map_err(|e| err(e.to_string()))?.clone();
    if headers.iter().ne(HEADER.iter().copied()) {
        return Err(err(format!("unexpected header {:?}", headers.iter().collect::<Vec<_>>())));
    }
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let v: Vec<f64> = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| err(format!("row {}: {e}", i + 2)))?;
        out.push(Sample {
            t: v[0],
            mass: v[1],
            energy: v[2],
            delta_e: v[3],
            sup_norm: v[4],
            grad_l2: v[5],
            hdot_sigma: v[6],
            delta: v[7],
            mu: v[8],
            tail_ratio: f64::NAN,
        });
    }
    Ok(out)
}

pub fn read_series(path: &Path) -> Result<Vec<Sample>, SeriesError> {
    let bytes = std::fs::read(path).map_err(|e| IoError::new(path, e))?;
    series_from_csv(&bytes, &path.display().to_string())
}
