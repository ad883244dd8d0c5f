//! Field snapshots and iteration-trace CSV.
//!
//! Snapshot layout (all little-endian):
//!
//! ```text
//! b"GPEF" | u32 version = 1 | u32 dim | u32 n[dim] | f64 (a, b)[dim] | f64 (re, im)[Πn]
//! ```
//!
//! The payload is row-major with the last axis fastest, the same order as
//! [`WaveField::values`].

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{SpectralGrid, WaveField};
use crate::solver::{IterationRecord, IterationTrace, RunStatus, StageMark};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"GPEF";
pub const SNAPSHOT_VERSION: u32 = 1;

pub const TRACE_HEADER: &str = "iter,tau,kappa,E_relaxed,E_original,residual,wall_ns,stage";

pub fn encode_snapshot(f: &WaveField) -> Vec<u8> {
    let grid = f.grid();
    let mut out = Vec::with_capacity(12 + 20 * grid.dim() + 16 * grid.len());
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    for &n in grid.points() {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for &(a, b) in grid.bounds() {
        out.extend_from_slice(&a.to_le_bytes());
        out.extend_from_slice(&b.to_le_bytes());
    }
    for z in f.values() {
        out.extend_from_slice(&z.re.to_le_bytes());
        out.extend_from_slice(&z.im.to_le_bytes());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Format(format!("truncated while reading {what}"))),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<WaveField> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4, "magic")? != SNAPSHOT_MAGIC {
        return Err(Error::Format("bad magic; not a GPEF snapshot".into()));
    }
    let version = cur.u32("version")?;
    if version != SNAPSHOT_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = cur.u32("dimension")? as usize;
    if !(1..=2).contains(&dim) {
        return Err(Error::Format(format!("unsupported dimension {dim}")));
    }
    let n = (0..dim)
        .map(|_| cur.u32("grid size").map(|v| v as usize))
        .collect::<Result<Vec<_>>>()?;
    let bounds = (0..dim)
        .map(|_| Ok((cur.f64("bounds")?, cur.f64("bounds")?)))
        .collect::<Result<Vec<_>>>()?;
    let grid = SpectralGrid::new(&bounds, &n).map_err(|e| Error::Format(format!("bad header: {e}")))?;
    let expected = 16 * grid.len();
    let remaining = bytes.len() - cur.pos;
    if remaining != expected {
        return Err(Error::Format(format!(
            "payload has {remaining} bytes, header implies {expected}"
        )));
    }
    let values = cur
        .take(expected, "payload")?
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    WaveField::new(grid, values).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_field_snapshot(f: &WaveField, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_snapshot(f)).map_err(|e| Error::io(path, e))
}

pub fn read_field_snapshot(path: impl AsRef<Path>) -> Result<WaveField> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut file| file.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_snapshot(&bytes)
}

/// Reads a snapshot that must live on `grid`.
pub fn read_field_snapshot_on(path: impl AsRef<Path>, grid: &Arc<SpectralGrid>) -> Result<WaveField> {
    let f = read_field_snapshot(path)?;
    if **f.grid() != **grid {
        return Err(Error::GridMismatch(format!(
            "snapshot grid {:?} on {:?}, expected {:?} on {:?}",
            f.grid().points(),
            f.grid().bounds(),
            grid.points(),
            grid.bounds()
        )));
    }
    WaveField::new(grid.clone(), f.into_values())
}

fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_trace_csv_to(trace: &IterationTrace, mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{TRACE_HEADER}")?;
    for r in &trace.records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.iter,
            sci(r.tau),
            sci(r.kappa),
            sci(r.relaxed_energy),
            sci(r.original_energy),
            sci(r.residual),
            r.wall_ns,
            r.stage
        )?;
    }
    out.flush()
}

pub fn write_trace_csv(trace: &IterationTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_trace_csv_to(trace, BufWriter::new(file)).map_err(|e| Error::io(path, e))
}

/// Parses a trace CSV. Stage marks are rebuilt from the `stage` column; their
/// initial energies are unknown and left as NaN.
pub fn read_trace_csv_from(input: impl BufRead) -> Result<IterationTrace> {
    let mut lines = input.lines().enumerate();
    match lines.next() {
        Some((_, Ok(h))) if h.trim() == TRACE_HEADER => {}
        Some((_, Ok(h))) => return Err(Error::Format(format!("unexpected trace header `{h}`"))),
        Some((_, Err(e))) => return Err(Error::Format(e.to_string())),
        None => return Err(Error::Format("empty trace file".into())),
    }
    let mut trace = IterationTrace::default();
    for (lineno, line) in lines {
        let line = line.map_err(|e| Error::Format(e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Format(format!("line {}: bad {what}", lineno + 1));
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 8 {
            return Err(bad("column count"));
        }
        let float = |i: usize, what: &str| cols[i].trim().parse::<f64>().map_err(|_| bad(what));
        let record = IterationRecord {
            iter: cols[0].trim().parse().map_err(|_| bad("iter"))?,
            tau: float(1, "tau")?,
            kappa: float(2, "kappa")?,
            relaxed_energy: float(3, "E_relaxed")?,
            original_energy: float(4, "E_original")?,
            residual: float(5, "residual")?,
            wall_ns: cols[6].trim().parse().map_err(|_| bad("wall_ns"))?,
            stage: cols[7].trim().parse().map_err(|_| bad("stage"))?,
        };
        if trace.stages.last().map(|s| s.stage) != Some(record.stage) {
            trace.stages.push(StageMark {
                stage: record.stage,
                tau: record.tau,
                first_iter: record.iter,
                initial_relaxed: f64::NAN,
                initial_original: f64::NAN,
                status: RunStatus::MaxIterations,
            });
        }
        trace.records.push(record);
    }
    Ok(trace)
}

pub fn read_trace_csv(path: impl AsRef<Path>) -> Result<IterationTrace> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_trace_csv_from(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field() -> WaveField {
        let grid = SpectralGrid::new(&[(-1.0, 2.0), (0.0, 4.0)], &[8, 4]).unwrap();
        WaveField::from_fn(grid, |x| Complex64::new(x[0].sin() / 3.0, x[1].cos() * 1e-300)).unwrap()
    }

    #[test]
    fn snapshot_round_trip_is_exact() {
        let f = field();
        let bytes = encode_snapshot(&f);
        assert_eq!(&bytes[..4], b"GPEF");
        assert_eq!(bytes.len(), 12 + 2 * 4 + 2 * 16 + 16 * 32);
        let g = decode_snapshot(&bytes).unwrap();
        assert_eq!(g.grid().points(), f.grid().points());
        for (a, b) in f.values().iter().zip(g.values()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn malformed_snapshots_are_rejected() {
        let bytes = encode_snapshot(&field());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_snapshot(&bad), Err(Error::Format(_))));
        assert!(matches!(decode_snapshot(&bytes[..bytes.len() - 1]), Err(Error::Format(_))));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(decode_snapshot(&bad), Err(Error::Format(_))));
        assert!(matches!(decode_snapshot(b"GP"), Err(Error::Format(_))));
    }

    #[test]
    fn snapshot_on_wrong_grid_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.gpef");
        write_field_snapshot(&field(), &path).unwrap();
        let other = SpectralGrid::new(&[(-1.0, 2.0), (0.0, 4.0)], &[8, 8]).unwrap();
        assert!(matches!(read_field_snapshot_on(&path, &other), Err(Error::GridMismatch(_))));
        assert!(read_field_snapshot_on(&path, field().grid()).is_ok());
    }

    fn trace(n: usize) -> IterationTrace {
        let mut t = IterationTrace::default();
        for i in 0..n {
            let stage = i / 2;
            if t.stages.last().map(|s| s.stage) != Some(stage) {
                t.stages.push(StageMark {
                    stage,
                    tau: 0.1,
                    first_iter: i + 1,
                    initial_relaxed: 1.0,
                    initial_original: 1.0,
                    status: RunStatus::Converged,
                });
            }
            t.records.push(IterationRecord {
                iter: i + 1,
                tau: 0.1 / (stage + 1) as f64,
                kappa: 1.0 / 3.0,
                relaxed_energy: 1.0 - 1e-17 * i as f64,
                original_energy: std::f64::consts::PI,
                residual: 1e-300,
                wall_ns: 12345,
                stage,
            });
        }
        t
    }

    #[test]
    fn trace_csv_has_header_plus_rows_and_round_trips() {
        let t = trace(3);
        let mut buf = Vec::new();
        write_trace_csv_to(&t, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert_eq!(text.lines().next().unwrap(), TRACE_HEADER);
        let back = read_trace_csv_from(buf.as_slice()).unwrap();
        assert_eq!(back.records, t.records);
        assert_eq!(back.stages.len(), 2);
        assert_eq!(back.stages[1].first_iter, 3);
    }

    #[test]
    fn trace_csv_rejects_garbage() {
        assert!(read_trace_csv_from("a,b\n".as_bytes()).is_err());
        let doc = format!("{TRACE_HEADER}\n1,2,3\n");
        assert!(read_trace_csv_from(doc.as_bytes()).is_err());
    }
}
