//! Point sets on the unit hypercube and their CSV interchange format.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An `n x p` design on `[0,1]^p`, stored row-major.
///
/// Construction validates the invariants: at least one row and one column,
/// every coordinate in `[0,1]`, and no two rows exactly equal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Design {
    points: Vec<f64>,
    n: usize,
    p: usize,
    pub label: String,
}

impl Design {
    pub fn new(points: Vec<f64>, p: usize, label: impl Into<String>) -> Result<Self> {
        if p == 0 || points.is_empty() {
            return Err(Error::Empty);
        }
        if points.len() % p != 0 {
            return Err(Error::RaggedRow {
                row: points.len() / p + 1,
                expected: p,
                got: points.len() % p,
            });
        }
        let n = points.len() / p;
        for (row, chunk) in points.chunks_exact(p).enumerate() {
            for &v in chunk {
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: row + 1 });
                }
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::OutOfRange { row: row + 1, value: v });
                }
            }
        }
        check_duplicates(&points, p)?;
        Ok(Self {
            points,
            n,
            p,
            label: label.into(),
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], label: impl Into<String>) -> Result<Self> {
        let p = rows.first().map(|r| r.as_ref().len()).ok_or(Error::Empty)?;
        let mut points = Vec::with_capacity(rows.len() * p);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != p {
                return Err(Error::RaggedRow {
                    row: i + 1,
                    expected: p,
                    got: r.len(),
                });
            }
            points.extend_from_slice(r);
        }
        Self::new(points, p, label)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.p..(i + 1) * self.p]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.points.chunks_exact(self.p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.points
    }

    pub fn column(&self, l: usize) -> Vec<f64> {
        self.rows().map(|r| r[l]).collect()
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Rows reordered so that row `k` of the result is row `perm[k]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::invalid("permutation length differs from n"));
        }
        let mut pts = Vec::with_capacity(self.points.len());
        for &k in perm {
            pts.extend_from_slice(self.row(k));
        }
        Self::new(pts, self.p, self.label.clone())
    }

    /// The design restricted to the coordinates in `dims`.
    ///
    /// Projections can collapse distinct rows, so the result is returned as a
    /// raw row-major buffer rather than a `Design`.
    pub fn project(&self, dims: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * dims.len());
        for r in self.rows() {
            out.extend(dims.iter().map(|&l| r[l]));
        }
        out
    }
}

fn check_duplicates(points: &[f64], p: usize) -> Result<()> {
    let mut seen: HashMap<Vec<u64>, usize> = HashMap::with_capacity(points.len() / p);
    for (i, r) in points.chunks_exact(p).enumerate() {
        // +0.0 and -0.0 compare equal, so normalise before hashing bits
        let key: Vec<u64> = r.iter().map(|v| (v + 0.0).to_bits()).collect();
        if let Some(&j) = seen.get(&key) {
            return Err(Error::DuplicateRow {
                first: j + 1,
                second: i + 1,
            });
        }
        seen.insert(key, i);
    }
    Ok(())
}

/// Parse a design from CSV text: one row per point, optional header.
pub fn read_design<R: Read>(reader: R, label: impl Into<String>) -> Result<Design> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let mut points = Vec::new();
    let mut p = None;
    let mut data_row = 0usize;
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let values = match parsed {
            Ok(v) => v,
            // a non-numeric first line is a header
            Err(_) if line == 0 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    row: data_row + 1,
                    message: e.to_string(),
                })
            }
        };
        data_row += 1;
        match p {
            None => p = Some(values.len()),
            Some(p) if p != values.len() => {
                return Err(Error::RaggedRow {
                    row: data_row,
                    expected: p,
                    got: values.len(),
                })
            }
            _ => {}
        }
        points.extend(values);
    }
    let p = p.ok_or(Error::Empty)?;
    Design::new(points, p, label)
}

/// Write a design as CSV with header `x1,...,xp`.
///
/// Coordinates use the shortest decimal representation that round-trips to
/// the same `f64` (never more than 17 significant digits).
pub fn write_design<W: Write>(d: &Design, mut w: W) -> std::io::Result<()> {
    let header: Vec<String> = (1..=d.p()).map(|l| format!("x{l}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for r in d.rows() {
        let line: Vec<String> = r.iter().map(|v| format!("{}", v + 0.0)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn load_design(path: impl AsRef<Path>) -> Result<Design> {
    let path = path.as_ref();
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let label = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    read_design(f, label)
}

pub fn save_design(d: &Design, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    write_design(d, &mut w).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}
