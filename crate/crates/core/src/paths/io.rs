//! CSV (`time,v1,..,vd`) and binary path dumps.
//!
//! Binary layout: 8-byte magic `LVPATH01`, `u32` dimension, `u64` point count,
//! then per point the time and the `d` values, all `f64` little-endian.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::SamplePath;
use crate::error::{invalid, Result};

pub const BINARY_MAGIC: &[u8; 8] = b"LVPATH01";

pub fn write_csv(path: &SamplePath, file: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(file)?);
    let header: Vec<String> = std::iter::once("time".to_string())
        .chain((1..=path.dim()).map(|i| format!("v{i}")))
        .collect();
    writeln!(w, "{}", header.join(","))?;
    for (t, v) in path.times.iter().zip(&path.values) {
        write!(w, "{t:e}")?;
        for x in v {
            write!(w, ",{x:e}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a CSV with a header row; every column after the first is a coordinate.
pub fn read_csv(file: &Path, scheme: &str) -> Result<SamplePath> {
    let r = BufReader::new(File::open(file)?);
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if i == 0 || line.is_empty() {
            continue;
        }
        let nums: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().trim_matches('"').parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| invalid(format!("line {}: {e}", i + 1)))?;
        if nums.len() < 2 {
            return Err(invalid(format!("line {}: need time and at least one value", i + 1)));
        }
        times.push(nums[0]);
        values.push(nums[1..].to_vec());
    }
    SamplePath::new(times, values, scheme, 0)
}

pub fn write_binary(path: &SamplePath, file: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(file)?);
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&(path.dim() as u32).to_le_bytes())?;
    w.write_all(&(path.len() as u64).to_le_bytes())?;
    for (t, v) in path.times.iter().zip(&path.values) {
        w.write_all(&t.to_le_bytes())?;
        for x in v {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_binary(file: &Path, scheme: &str) -> Result<SamplePath> {
    let mut r = BufReader::new(File::open(file)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(invalid("not a path dump (bad magic)"));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let d = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    let mut read_f64 = |r: &mut BufReader<File>| -> Result<f64> {
        r.read_exact(&mut b8)?;
        Ok(f64::from_le_bytes(b8))
    };
    let mut times = Vec::with_capacity(n);
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        times.push(read_f64(&mut r)?);
        values.push((0..d).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?);
    }
    SamplePath::new(times, values, scheme, 0)
}
