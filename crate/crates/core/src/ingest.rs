//! bedGraph ingestion: parse signal tracks, bin them at nucleosome
//! resolution and binarize them into an incidence matrix.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default bin width in base pairs (one nucleosome per bin).
pub const DEFAULT_BIN_SIZE: u64 = 200;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: interval {start}-{end} overlaps previous interval ending at {prev_end}")]
    Overlap {
        line: usize,
        start: u64,
        end: u64,
        prev_end: u64,
    },
    #[error("line {line}: chromosome {found} differs from {expected}; one chromosome per stream")]
    MultipleChromosomes {
        line: usize,
        expected: String,
        found: String,
    },
    #[error("invalid bin size {0}")]
    InvalidBinSize(u64),
    #[error("invalid span {start}-{end} for bin size {bin_size}")]
    InvalidSpan { start: u64, end: u64, bin_size: u64 },
    #[error("invalid binarization threshold {0}")]
    InvalidThreshold(f64),
    #[error("incidence matrix needs at least one marker")]
    Empty,
    #[error("row {marker} has length {found}, expected {expected}")]
    RaggedRows {
        marker: String,
        expected: usize,
        found: usize,
    },
    #[error("duplicate marker name {0}")]
    DuplicateMarker(String),
    #[error("incidence entry {0} is not 0 or 1")]
    NonBinary(u8),
    #[error("malformed incidence matrix: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: u64,
    pub end: u64,
    pub value: f64,
}

impl Interval {
    pub fn len(&self) -> u64 {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }
}

/// One marker's signal along a single chromosome, with sorted
/// non-overlapping intervals. Gaps carry zero signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTrack {
    pub marker_name: String,
    pub chrom: Option<String>,
    pub intervals: Vec<Interval>,
}

fn is_header(line: &str) -> bool {
    line.starts_with('#') || line.starts_with("track") || line.starts_with("browser")
}

/// Parses a bedGraph stream (`chrom start end value` per line).
///
/// Comment, `track` and `browser` lines are skipped. Intervals are sorted by
/// start before the overlap check; errors carry the 1-based line number.
pub fn parse_bedgraph<R: BufRead>(reader: R, marker_name: &str) -> Result<RawTrack, IngestError> {
    let mut chrom: Option<String> = None;
    let mut rows: Vec<(usize, Interval)> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || is_header(trimmed) {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(IngestError::Parse {
                line: lineno,
                msg: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let parse_u64 = |s: &str, what: &str| {
            s.parse::<u64>().map_err(|_| IngestError::Parse {
                line: lineno,
                msg: format!("{what} '{s}' is not a non-negative integer"),
            })
        };
        let start = parse_u64(fields[1], "start")?;
        let end = parse_u64(fields[2], "end")?;
        let value: f64 = fields[3].parse().map_err(|_| IngestError::Parse {
            line: lineno,
            msg: format!("value '{}' is not numeric", fields[3]),
        })?;
        if !value.is_finite() {
            return Err(IngestError::Parse {
                line: lineno,
                msg: format!("value '{}' is not finite", fields[3]),
            });
        }
        if start >= end {
            return Err(IngestError::Parse {
                line: lineno,
                msg: format!("start {start} is not below end {end}"),
            });
        }
        match &chrom {
            None => chrom = Some(fields[0].to_string()),
            Some(c) if c != fields[0] => {
                return Err(IngestError::MultipleChromosomes {
                    line: lineno,
                    expected: c.clone(),
                    found: fields[0].to_string(),
                })
            }
            Some(_) => {}
        }
        rows.push((lineno, Interval { start, end, value }));
    }
    rows.sort_by_key(|(_, iv)| (iv.start, iv.end));
    for pair in rows.windows(2) {
        let (_, prev) = pair[0];
        let (line, cur) = pair[1];
        if cur.start < prev.end {
            return Err(IngestError::Overlap {
                line,
                start: cur.start,
                end: cur.end,
                prev_end: prev.end,
            });
        }
    }
    Ok(RawTrack {
        marker_name: marker_name.to_string(),
        chrom,
        intervals: rows.into_iter().map(|(_, iv)| iv).collect(),
    })
}

/// Writes a track back in bedGraph form. Values use the shortest
/// representation that parses back to the same `f64`.
pub fn write_bedgraph(track: &RawTrack) -> String {
    let chrom = track.chrom.as_deref().unwrap_or("chrUn");
    let mut out = String::new();
    for iv in &track.intervals {
        let _ = writeln!(out, "{chrom}\t{}\t{}\t{}", iv.start, iv.end, iv.value);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Coverage-weighted mean over the bin; uncovered base pairs count as 0.
    #[default]
    Mean,
    /// Largest signal touching the bin (0 if part of the bin is uncovered).
    Max,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinnedTrack {
    pub marker_name: String,
    pub bin_size: u64,
    pub start: u64,
    pub values: Vec<f64>,
}

pub fn bin_signal(
    track: &RawTrack,
    bin_size: u64,
    span: (u64, u64),
    aggregation: Aggregation,
) -> Result<BinnedTrack, IngestError> {
    let (start, end) = span;
    if bin_size == 0 {
        return Err(IngestError::InvalidBinSize(bin_size));
    }
    if end <= start || (end - start) % bin_size != 0 {
        return Err(IngestError::InvalidSpan { start, end, bin_size });
    }
    let n_bins = ((end - start) / bin_size) as usize;
    let mut acc = vec![0.0f64; n_bins];
    let mut covered = vec![0u64; n_bins];
    let mut peak = vec![f64::NEG_INFINITY; n_bins];
    for iv in &track.intervals {
        let lo = iv.start.max(start);
        let hi = iv.end.min(end);
        if lo >= hi {
            continue;
        }
        let first = ((lo - start) / bin_size) as usize;
        let last = ((hi - 1 - start) / bin_size) as usize;
        for b in first..=last {
            let b_lo = start + b as u64 * bin_size;
            let b_hi = b_lo + bin_size;
            let overlap = hi.min(b_hi) - lo.max(b_lo);
            acc[b] += overlap as f64 * iv.value;
            covered[b] += overlap;
            peak[b] = peak[b].max(iv.value);
        }
    }
    let values = match aggregation {
        Aggregation::Mean => acc.into_iter().map(|s| s / bin_size as f64).collect(),
        Aggregation::Max => peak
            .into_iter()
            .zip(&covered)
            .map(|(p, &c)| {
                if c == 0 {
                    0.0
                } else if c < bin_size {
                    p.max(0.0)
                } else {
                    p
                }
            })
            .collect(),
    };
    Ok(BinnedTrack {
        marker_name: track.marker_name.clone(),
        bin_size,
        start,
        values,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    /// Active iff value > threshold.
    #[default]
    Strict,
    /// Active iff value >= threshold.
    Inclusive,
}

pub fn binarize(binned: &BinnedTrack, threshold: f64, activation: Activation) -> Result<Vec<u8>, IngestError> {
    if !(threshold >= 0.0) || !threshold.is_finite() {
        return Err(IngestError::InvalidThreshold(threshold));
    }
    Ok(binned
        .values
        .iter()
        .map(|&v| {
            let on = match activation {
                Activation::Strict => v > threshold,
                Activation::Inclusive => v >= threshold,
            };
            u8::from(on)
        })
        .collect())
}

/// M×N binary presence matrix; row `m` is a marker, column `n` a nucleosome.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidenceMatrix {
    #[serde(rename = "M")]
    markers: usize,
    #[serde(rename = "N")]
    nucleosomes: usize,
    marker_names: Vec<String>,
    data: Vec<u8>,
}

impl IncidenceMatrix {
    pub fn new(marker_names: Vec<String>, nucleosomes: usize, data: Vec<u8>) -> Result<Self, IngestError> {
        let markers = marker_names.len();
        if markers == 0 {
            return Err(IngestError::Empty);
        }
        if data.len() != markers * nucleosomes {
            return Err(IngestError::Malformed(format!(
                "{} entries for a {markers}x{nucleosomes} matrix",
                data.len()
            )));
        }
        if let Some(&bad) = data.iter().find(|&&v| v > 1) {
            return Err(IngestError::NonBinary(bad));
        }
        let mut seen = HashSet::new();
        for name in &marker_names {
            if !seen.insert(name.as_str()) {
                return Err(IngestError::DuplicateMarker(name.clone()));
            }
        }
        Ok(Self {
            markers,
            nucleosomes,
            marker_names,
            data,
        })
    }

    /// Unnamed matrix (markers named `m0`, `m1`, ...).
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self, IngestError> {
        let named: Vec<(String, Vec<u8>)> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| (format!("m{i}"), r.clone()))
            .collect();
        assemble(named)
    }

    pub fn markers(&self) -> usize {
        self.markers
    }

    pub fn nucleosomes(&self) -> usize {
        self.nucleosomes
    }

    pub fn marker_names(&self) -> &[String] {
        &self.marker_names
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> u8 {
        self.data[m * self.nucleosomes + n]
    }

    pub fn row(&self, m: usize) -> &[u8] {
        &self.data[m * self.nucleosomes..(m + 1) * self.nucleosomes]
    }

    /// Columns `start..start + len` as a new matrix.
    pub fn window(&self, start: usize, len: usize) -> Result<Self, IngestError> {
        if start + len > self.nucleosomes || len == 0 {
            return Err(IngestError::Malformed(format!(
                "window {start}+{len} outside {} nucleosomes",
                self.nucleosomes
            )));
        }
        let mut data = Vec::with_capacity(self.markers * len);
        for m in 0..self.markers {
            data.extend_from_slice(&self.row(m)[start..start + len]);
        }
        Self::new(self.marker_names.clone(), len, data)
    }

    /// Transposed CSV: header `nucleosome,<marker names...>`, then one line
    /// per nucleosome with its 0/1 incidences.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("nucleosome");
        for name in &self.marker_names {
            out.push(',');
            out.push_str(name);
        }
        out.push('\n');
        for n in 0..self.nucleosomes {
            let _ = write!(out, "{n}");
            for m in 0..self.markers {
                let _ = write!(out, ",{}", self.get(m, n));
            }
            out.push('\n');
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, IngestError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| IngestError::Malformed("empty CSV".into()))?;
        let names: Vec<String> = header.split(',').skip(1).map(|s| s.trim().to_string()).collect();
        let markers = names.len();
        let mut columns: Vec<Vec<u8>> = Vec::new();
        for (i, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').map(str::trim).collect();
            if cells.len() != markers + 1 {
                return Err(IngestError::Parse {
                    line: i + 2,
                    msg: format!("expected {} columns, found {}", markers + 1, cells.len()),
                });
            }
            let col = cells[1..]
                .iter()
                .map(|c| match *c {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    other => Err(IngestError::Parse {
                        line: i + 2,
                        msg: format!("incidence '{other}' is not 0 or 1"),
                    }),
                })
                .collect::<Result<Vec<u8>, _>>()?;
            columns.push(col);
        }
        let nucleosomes = columns.len();
        let mut data = vec![0u8; markers * nucleosomes];
        for (n, col) in columns.iter().enumerate() {
            for (m, &v) in col.iter().enumerate() {
                data[m * nucleosomes + n] = v;
            }
        }
        Self::new(names, nucleosomes, data)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("incidence matrix serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, IngestError> {
        let raw: IncidenceMatrix = serde_json::from_str(text).map_err(|e| IngestError::Malformed(e.to_string()))?;
        Self::new(raw.marker_names, raw.nucleosomes, raw.data)
    }
}

/// Stacks binary rows into an incidence matrix, preserving input order.
pub fn assemble(rows: Vec<(String, Vec<u8>)>) -> Result<IncidenceMatrix, IngestError> {
    let Some(first) = rows.first() else {
        return Err(IngestError::Empty);
    };
    let n = first.1.len();
    let mut names = Vec::with_capacity(rows.len());
    let mut data = Vec::with_capacity(rows.len() * n);
    for (name, row) in rows {
        if row.len() != n {
            return Err(IngestError::RaggedRows {
                marker: name,
                expected: n,
                found: row.len(),
            });
        }
        names.push(name);
        data.extend(row);
    }
    IncidenceMatrix::new(names, n, data)
}
