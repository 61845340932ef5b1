//! Region-grid histogram features extracted from code maps.

use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::encoders::{CodeMap, Method};
use crate::error::{Error, Result};

/// Rows x columns partition of a code map into rectangular regions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionGrid {
    pub rows: usize,
    pub cols: usize,
}

impl RegionGrid {
    /// Panics if either dimension is zero.
    pub fn new(rows: usize, cols: usize) -> Self {
        assert!(rows >= 1 && cols >= 1, "grid dimensions must be positive");
        Self { rows, cols }
    }

    pub fn region_count(self) -> usize {
        self.rows * self.cols
    }

    /// Row span of grid row `r` over an image of the given height:
    /// [floor(r*h/rows), floor((r+1)*h/rows)). Spans tile the image exactly.
    fn row_span(self, r: usize, height: usize) -> (usize, usize) {
        (r * height / self.rows, (r + 1) * height / self.rows)
    }

    fn col_span(self, c: usize, width: usize) -> (usize, usize) {
        (c * width / self.cols, (c + 1) * width / self.cols)
    }
}

impl std::fmt::Display for RegionGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.rows, self.cols)
    }
}

impl FromStr for RegionGrid {
    type Err = Error;

    /// Parses "RxC", e.g. "7x6".
    fn from_str(s: &str) -> Result<RegionGrid> {
        let bad = || Error::InvalidConfig(format!("grid must look like 7x6, got {s:?}"));
        let (rows, cols) = s.split_once(['x', 'X']).ok_or_else(bad)?;
        let rows: usize = rows.trim().parse().map_err(|_| bad())?;
        let cols: usize = cols.trim().parse().map_err(|_| bad())?;
        if rows == 0 || cols == 0 {
            return Err(bad());
        }
        Ok(RegionGrid { rows, cols })
    }
}

/// Histogram normalization mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Normalization {
    /// Raw bin counts; each region's slice sums to its pixel count.
    Raw,
    /// Each region's slice divided by its pixel count, summing to one.
    L1,
}

impl std::fmt::Display for Normalization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Normalization::Raw => "RAW",
            Normalization::L1 => "L1",
        })
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Normalization> {
        match s.to_ascii_uppercase().as_str() {
            "RAW" => Ok(Normalization::Raw),
            "L1" => Ok(Normalization::L1),
            _ => Err(Error::InvalidConfig(format!(
                "normalization must be RAW or L1, got {s:?}"
            ))),
        }
    }
}

impl Normalization {
    pub(crate) fn tag(self) -> u8 {
        match self {
            Normalization::Raw => 0,
            Normalization::L1 => 1,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<Normalization> {
        match tag {
            0 => Some(Normalization::Raw),
            1 => Some(Normalization::L1),
            _ => None,
        }
    }
}

/// Provenance a feature vector carries so models can refuse mismatched inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureMeta {
    pub method: Method,
    pub grid: RegionGrid,
    pub norm: Normalization,
    pub code_count: u16,
}

/// Concatenated per-region histograms; region row-major, code fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
    meta: FeatureMeta,
}

impl FeatureVector {
    /// Wraps externally computed values. [`region_histograms`] is the normal
    /// constructor; this is the escape hatch for classifier inputs that do
    /// not come from code maps (synthetic points, saved CSV rows, ...).
    pub fn new(values: Vec<f64>, meta: FeatureMeta) -> FeatureVector {
        FeatureVector { values, meta }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn meta(&self) -> &FeatureMeta {
        &self.meta
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Writes the values as a little-endian f64 array behind the DPFV magic.
    pub fn write_binary(&self, mut w: impl Write) -> Result<()> {
        w.write_all(FEATURE_MAGIC)?;
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Reads back the f64 array written by [`FeatureVector::write_binary`].
    pub fn read_binary_values(mut r: impl Read) -> Result<Vec<f64>> {
        let mut data = Vec::new();
        r.read_to_end(&mut data)?;
        if data.len() < 8 || &data[..8] != FEATURE_MAGIC {
            return Err(Error::CorruptRecord("missing DPFV0001 header".into()));
        }
        let body = &data[8..];
        if body.len() % 8 != 0 {
            return Err(Error::CorruptRecord(
                "feature payload is not a whole number of f64 values".into(),
            ));
        }
        Ok(body
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect())
    }
}

const FEATURE_MAGIC: &[u8; 8] = b"DPFV0001";

/// Counts code occurrences per grid region. Region boundaries are
/// floor-based so regions tile the code map exactly; concatenation order is
/// row-major over regions with the code index fastest-varying.
pub fn region_histograms(
    codes: &CodeMap,
    grid: RegionGrid,
    norm: Normalization,
) -> Result<FeatureVector> {
    let (w, h) = (codes.width(), codes.height());
    if grid.rows > h || grid.cols > w {
        return Err(Error::GridTooFine {
            rows: grid.rows,
            cols: grid.cols,
            width: w,
            height: h,
        });
    }
    let bins = codes.code_count() as usize;
    let mut values = vec![0.0f64; grid.region_count() * bins];
    for r in 0..grid.rows {
        let (row_lo, row_hi) = grid.row_span(r, h);
        for c in 0..grid.cols {
            let (col_lo, col_hi) = grid.col_span(c, w);
            let slice_start = (r * grid.cols + c) * bins;
            let slice = &mut values[slice_start..slice_start + bins];
            for row in row_lo..row_hi {
                for col in col_lo..col_hi {
                    slice[codes.code(row, col) as usize] += 1.0;
                }
            }
            if norm == Normalization::L1 {
                let count = ((row_hi - row_lo) * (col_hi - col_lo)) as f64;
                for v in slice.iter_mut() {
                    *v /= count;
                }
            }
        }
    }
    Ok(FeatureVector {
        values,
        meta: FeatureMeta {
            method: codes.method(),
            grid,
            norm,
            code_count: codes.code_count(),
        },
    })
}

/// One labeled feature vector ready for CSV export.
pub struct FeatureRecord {
    pub id: String,
    pub label: String,
    pub vector: FeatureVector,
}

/// Writes records as flat CSV rows: id, label, method, grid, norm, then the
/// feature values. All records must share one feature layout.
pub fn write_features_csv(w: impl Write, records: &[FeatureRecord]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    let Some(first) = records.first() else {
        return Err(Error::EmptyDataset);
    };
    let dim = first.vector.len();
    let mut header = vec![
        "id".to_string(),
        "label".to_string(),
        "method".to_string(),
        "grid".to_string(),
        "norm".to_string(),
    ];
    header.extend((0..dim).map(|i| format!("f{i}")));
    csv.write_record(&header).map_err(csv_io)?;
    for record in records {
        if record.vector.meta() != first.vector.meta() {
            return Err(Error::InconsistentFeatureMeta(format!(
                "record {} does not match the first record's layout",
                record.id
            )));
        }
        let meta = record.vector.meta();
        let mut row = vec![
            record.id.clone(),
            record.label.clone(),
            meta.method.to_string(),
            meta.grid.to_string(),
            meta.norm.to_string(),
        ];
        row.extend(record.vector.values().iter().map(|v| v.to_string()));
        csv.write_record(&row).map_err(csv_io)?;
    }
    csv.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
