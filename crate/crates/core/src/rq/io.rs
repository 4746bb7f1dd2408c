//! RQ-point CSV (`chunk_id,width,height,bitrate_bps,quality_db`) and ladder
//! JSON.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{build_curve, BitrateLadder, RateQualitySurface, ResolutionSet, Result, RqError, RqPoint};

/// One encode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RqRecord {
    pub chunk_id: String,
    pub width: u32,
    pub height: u32,
    pub bitrate_bps: f64,
    pub quality_db: f64,
}

impl RqRecord {
    pub fn point(&self) -> RqPoint {
        RqPoint::from_bps(self.bitrate_bps, self.quality_db)
    }
}

pub fn read_rq_csv<R: Read>(reader: R) -> Result<Vec<RqRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

pub fn read_rq_csv_path(path: &Path) -> Result<Vec<RqRecord>> {
    read_rq_csv(std::fs::File::open(path)?)
}

pub fn write_rq_csv<W: Write>(writer: W, records: &[RqRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Groups records by chunk id, keeping first-appearance order.
pub fn group_by_chunk(records: Vec<RqRecord>) -> Vec<(String, Vec<RqRecord>)> {
    let mut groups: Vec<(String, Vec<RqRecord>)> = Vec::new();
    for r in records {
        match groups.iter_mut().find(|(id, _)| *id == r.chunk_id) {
            Some((_, v)) => v.push(r),
            None => groups.push((r.chunk_id.clone(), vec![r])),
        }
    }
    groups
}

/// Builds one chunk's surface. Every record must match a resolution of `set`
/// and every resolution must be present.
pub fn surface_from_records(
    chunk_id: &str,
    records: &[RqRecord],
    set: &ResolutionSet,
) -> Result<RateQualitySurface> {
    if let Some(r) = records.iter().find(|r| set.find(r.width, r.height).is_none()) {
        return Err(RqError::UnknownResolution {
            chunk: chunk_id.to_string(),
            width: r.width,
            height: r.height,
        });
    }
    let per_res: Vec<Vec<RqPoint>> = set
        .iter()
        .map(|res| {
            records
                .iter()
                .filter(|r| r.width == res.width && r.height == res.height)
                .map(RqRecord::point)
                .collect()
        })
        .collect();
    if let Some(pos) = per_res.iter().position(Vec::is_empty) {
        return Err(RqError::MissingResolution {
            chunk: chunk_id.to_string(),
            resolution: set.get(pos + 1).expect("position within set").label.clone(),
        });
    }
    let curves = set
        .iter()
        .zip(&per_res)
        .map(|(res, pts)| build_curve(res.clone(), pts))
        .collect::<Result<Vec<_>>>()?;
    RateQualitySurface::new(set.clone(), curves)
}

/// Flattens a surface back to records (one per retained curve point).
pub fn surface_to_records(chunk_id: &str, surface: &RateQualitySurface) -> Vec<RqRecord> {
    surface
        .curves()
        .iter()
        .flat_map(|c| {
            c.points().iter().map(move |p| RqRecord {
                chunk_id: chunk_id.to_string(),
                width: c.resolution().width,
                height: c.resolution().height,
                bitrate_bps: p.log2_rate.exp2(),
                quality_db: p.quality,
            })
        })
        .collect()
}

pub fn read_ladder(path: &Path) -> Result<BitrateLadder> {
    let bytes = std::fs::read(path)?;
    Ok(serde_json::from_slice(&bytes)?)
}

pub fn write_ladder(path: &Path, ladder: &BitrateLadder) -> Result<()> {
    let mut s = serde_json::to_string_pretty(ladder)?;
    s.push('\n');
    std::fs::write(path, s)?;
    Ok(())
}
