//! Persistence: the PGSP binary format for path segments and bulk sample
//! matrices, plus plain CSV for human inspection.
//!
//! PGSP layout, all little-endian:
//!
//! ```text
//! magic   4 bytes  "PGSP"
//! version u32      currently 1
//! k       u32
//! offset  i64
//! length  u64      number of f64 values that follow
//! seed    u64      root seed of the generating stream
//! values  length × f64
//! ```
//!
//! Segments store `length` path values starting at `offset`. Sample
//! matrices reuse the container with `offset = 0` and `length = n·k`,
//! row-major.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::process::PathSegment;

pub const PGSP_MAGIC: [u8; 4] = *b"PGSP";
pub const PGSP_VERSION: u32 = 1;

/// Header of any PGSP container.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PgspHeader {
    pub k: u32,
    pub offset: i64,
    pub length: u64,
    pub root_seed: u64,
}

pub fn write_pgsp(path: &Path, header: &PgspHeader, values: &[f64]) -> Result<()> {
    if values.len() as u64 != header.length {
        return Err(Error::InvalidInput(format!(
            "header length {} does not match {} values",
            header.length,
            values.len()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&PGSP_MAGIC)?;
    w.write_all(&PGSP_VERSION.to_le_bytes())?;
    w.write_all(&header.k.to_le_bytes())?;
    w.write_all(&header.offset.to_le_bytes())?;
    w.write_all(&header.length.to_le_bytes())?;
    w.write_all(&header.root_seed.to_le_bytes())?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pgsp(path: &Path) -> Result<(PgspHeader, Vec<f64>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if magic != PGSP_MAGIC {
        return Err(Error::Format("missing PGSP magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != PGSP_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let k = read_u32(&mut r)?;
    let offset = read_i64(&mut r)?;
    let length = read_u64(&mut r)?;
    let root_seed = read_u64(&mut r)?;
    let mut values = Vec::with_capacity(length as usize);
    let mut buf = [0u8; 8];
    for _ in 0..length {
        r.read_exact(&mut buf)
            .map_err(|_| Error::Format("file truncated before declared length".into()))?;
        values.push(f64::from_le_bytes(buf));
    }
    Ok((
        PgspHeader {
            k,
            offset,
            length,
            root_seed,
        },
        values,
    ))
}

pub fn write_segment(path: &Path, segment: &PathSegment) -> Result<()> {
    let header = PgspHeader {
        k: segment.k(),
        offset: segment.offset(),
        length: segment.len() as u64,
        root_seed: segment.root_seed(),
    };
    write_pgsp(path, &header, segment.values())
}

pub fn read_segment(path: &Path) -> Result<PathSegment> {
    let (header, values) = read_pgsp(path)?;
    PathSegment::from_parts(header.k, header.root_seed, header.offset, values)
}

/// Segment as CSV: `n,y` rows. Values print in shortest round-trip form,
/// so re-parsing reproduces the exact bits.
pub fn write_segment_csv(path: &Path, segment: &PathSegment) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "n,y")?;
    for (i, v) in segment.values().iter().enumerate() {
        writeln!(w, "{},{}", segment.offset() + i as i64, v)?;
    }
    w.flush()?;
    Ok(())
}

/// Sample matrix as CSV with header `x1,…,xk`, one draw per row.
pub fn write_samples_csv(path: &Path, k: usize, rows: &[f64]) -> Result<()> {
    if k == 0 || rows.len() % k != 0 {
        return Err(Error::InvalidInput(format!(
            "flat sample buffer of {} values is not a multiple of k = {k}",
            rows.len()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    let header: Vec<String> = (1..=k).map(|j| format!("x{j}")).collect();
    writeln!(w, "{}", header.join(","))?;
    for row in rows.chunks(k) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Read a sample CSV back into (k, row-major values).
pub fn read_samples_csv(path: &Path) -> Result<(usize, Vec<f64>)> {
    let r = BufReader::new(File::open(path)?);
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty file".into()))??;
    let k = header.split(',').count();
    if k == 0 || !header.starts_with("x1") {
        return Err(Error::Format("missing x1..xk header".into()));
    }
    let mut values = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut fields = 0;
        for field in line.split(',') {
            let v: f64 = field
                .parse()
                .map_err(|_| Error::Format(format!("bad number on data row {}", lineno + 1)))?;
            values.push(v);
            fields += 1;
        }
        if fields != k {
            return Err(Error::Format(format!(
                "row {} has {fields} fields, expected {k}",
                lineno + 1
            )));
        }
    }
    Ok((k, values))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_i64<R: Read>(r: &mut R) -> Result<i64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(i64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::VectorStream;

    #[test]
    fn pgsp_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("seg.pgsp");
        let stream = VectorStream::new(3, 42).unwrap();
        let seg = stream.segment(-500, 1000).unwrap();
        write_segment(&path, &seg).unwrap();
        let back = read_segment(&path).unwrap();
        assert_eq!(back.k(), 3);
        assert_eq!(back.offset(), -500);
        assert_eq!(back.root_seed(), 42);
        assert_eq!(back.len(), 1000);
        for (a, b) in back.values().iter().zip(seg.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("samples.csv");
        let stream = VectorStream::new(4, 7).unwrap();
        let mut flat = Vec::new();
        for n in 0..200 {
            flat.extend_from_slice(stream.vector_at(n).coords());
        }
        write_samples_csv(&path, 4, &flat).unwrap();
        let (k, back) = read_samples_csv(&path).unwrap();
        assert_eq!(k, 4);
        assert_eq!(back.len(), flat.len());
        for (a, b) in back.iter().zip(&flat) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn foreign_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("junk.pgsp");
        std::fs::write(&path, b"NOPExxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx").unwrap();
        assert!(matches!(read_pgsp(&path), Err(Error::Format(_))));
        // truncated payload
        let seg_path = dir.path().join("trunc.pgsp");
        let stream = VectorStream::new(2, 1).unwrap();
        let seg = stream.segment(0, 10).unwrap();
        write_segment(&seg_path, &seg).unwrap();
        let bytes = std::fs::read(&seg_path).unwrap();
        std::fs::write(&seg_path, &bytes[..bytes.len() - 4]).unwrap();
        assert!(matches!(read_segment(&seg_path), Err(Error::Format(_))));
    }

    #[test]
    fn sample_matrix_header_is_validated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a,b\n1,2\n").unwrap();
        assert!(read_samples_csv(&path).is_err());
        assert!(write_samples_csv(&path, 3, &[1.0, 2.0]).is_err());
    }
}
