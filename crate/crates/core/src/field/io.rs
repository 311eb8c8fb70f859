//! Field dumps: CSV `(x, y, value)` and the binary snapshot.
//!
//! Snapshot layout, all little-endian: magic `RFIMFLD1`, center x and y (i32),
//! radius (u32), epsilon (f64), seed (u64), then `(2N+1)²` f64 values row-major
//! (rows bottom to top, left to right).

use std::io::{Read, Write};

use super::FieldSample;
use crate::error::{LabError, Result};
use crate::lattice::{BoxRegion, Site};
use crate::num::Real;

pub const SNAPSHOT_MAGIC: &[u8; 8] = b"RFIMFLD1";

pub fn write_csv<R: Real, W: Write>(field: &FieldSample<R>, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "y", "value"]).map_err(csv_err)?;
    for (s, v) in field.iter() {
        out.write_record([s.x.to_string(), s.y.to_string(), format!("{:e}", v.f64())])
            .map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a CSV dump covering a full box; epsilon and seed are not stored there.
pub fn read_csv<R: Real, Rd: Read>(r: Rd, epsilon: R, seed: u64) -> Result<FieldSample<R>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec.map_err(csv_err)?;
        let parse = |i: usize| {
            rec.get(i)
                .ok_or_else(|| LabError::Format("short CSV row".into()))
        };
        let x: i32 = parse(0)?
            .trim()
            .parse()
            .map_err(|e| LabError::Format(format!("{e}")))?;
        let y: i32 = parse(1)?
            .trim()
            .parse()
            .map_err(|e| LabError::Format(format!("{e}")))?;
        let v: f64 = parse(2)?
            .trim()
            .parse()
            .map_err(|e| LabError::Format(format!("{e}")))?;
        rows.push((Site::new(x, y), v));
    }
    if rows.is_empty() {
        return Err(LabError::Format("empty field CSV".into()));
    }
    let (x0, x1) = (
        rows.iter().map(|r| r.0.x).min().unwrap(),
        rows.iter().map(|r| r.0.x).max().unwrap(),
    );
    let (y0, y1) = (
        rows.iter().map(|r| r.0.y).min().unwrap(),
        rows.iter().map(|r| r.0.y).max().unwrap(),
    );
    if x1 - x0 != y1 - y0 || (x1 - x0) % 2 != 0 {
        return Err(LabError::Format(
            "CSV sites do not form a centered box".into(),
        ));
    }
    let region = BoxRegion::new(
        Site::new((x0 + x1) / 2, (y0 + y1) / 2),
        ((x1 - x0) / 2) as u32,
    );
    let mut values = vec![None; region.len()];
    for (s, v) in rows {
        let i = region.index_of(s).unwrap();
        values[i] = Some(R::of(v));
    }
    let values = values
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .ok_or_else(|| LabError::Format("CSV box has missing sites".into()))?;
    FieldSample::from_values(region, epsilon, seed, values)
}

pub fn write_snapshot<R: Real, W: Write>(field: &FieldSample<R>, mut w: W) -> Result<()> {
    w.write_all(SNAPSHOT_MAGIC)?;
    w.write_all(&field.region.center.x.to_le_bytes())?;
    w.write_all(&field.region.center.y.to_le_bytes())?;
    w.write_all(&field.region.radius.to_le_bytes())?;
    w.write_all(&field.epsilon.f64().to_le_bytes())?;
    w.write_all(&field.seed.to_le_bytes())?;
    for v in field.values() {
        w.write_all(&v.f64().to_le_bytes())?;
    }
    Ok(())
}

pub fn read_snapshot<R: Real, Rd: Read>(mut r: Rd) -> Result<FieldSample<R>> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(LabError::Format("bad snapshot magic".into()));
    }
    let mut b4 = [0u8; 4];
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b4)?;
    let cx = i32::from_le_bytes(b4);
    r.read_exact(&mut b4)?;
    let cy = i32::from_le_bytes(b4);
    r.read_exact(&mut b4)?;
    let radius = u32::from_le_bytes(b4);
    r.read_exact(&mut b8)?;
    let epsilon = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let seed = u64::from_le_bytes(b8);
    let region = BoxRegion::new(Site::new(cx, cy), radius);
    let mut values = Vec::with_capacity(region.len());
    for _ in 0..region.len() {
        r.read_exact(&mut b8)?;
        values.push(R::of(f64::from_le_bytes(b8)));
    }
    FieldSample::from_values(region, R::of(epsilon), seed, values)
}

fn csv_err(e: csv::Error) -> LabError {
    LabError::Format(e.to_string())
}
