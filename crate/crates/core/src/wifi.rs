//! Wi-Fi fingerprint records and their sparse frame vectors.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::Path;

use crate::descriptor::Descriptor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WifiRecord {
    pub frame_index: usize,
    /// Densely re-indexed access point identity.
    pub ap_id: u32,
    pub rssi: f64,
}

pub const WIFI_CSV_HEADER: &str = "frame_index,ap_id,rssi";

/// Reads `frame_index,ap_id,rssi` rows (LF or CRLF line endings).
pub fn read_wifi_csv(reader: impl BufRead) -> Result<Vec<WifiRecord>> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| Error::format(e.to_string()))?,
        None => return Err(Error::format("wifi csv is empty")),
    };
    let header = header.trim_start_matches('\u{feff}').trim_end();
    if header != WIFI_CSV_HEADER {
        return Err(Error::format(format!(
            "wifi csv header must be {WIFI_CSV_HEADER:?}, found {header:?}"
        )));
    }
    let mut out = Vec::new();
    for (lineno, line) in lines {
        let line = line.map_err(|e| Error::format(e.to_string()))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::format(format!("line {}: {what}: {line:?}", lineno + 1));
        let mut fields = line.split(',').map(str::trim);
        let (Some(f), Some(a), Some(r), None) =
            (fields.next(), fields.next(), fields.next(), fields.next())
        else {
            return Err(bad("expected 3 fields"));
        };
        let rssi: f64 = r.parse().map_err(|_| bad("bad rssi"))?;
        if !rssi.is_finite() {
            return Err(bad("non-finite rssi"));
        }
        out.push(WifiRecord {
            frame_index: f.parse().map_err(|_| bad("bad frame_index"))?,
            ap_id: a.parse().map_err(|_| bad("bad ap_id"))?,
            rssi,
        });
    }
    Ok(out)
}

pub fn load_wifi_csv(path: impl AsRef<Path>) -> Result<Vec<WifiRecord>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_wifi_csv(std::io::BufReader::new(file))
}

/// Sparse vector of the access points observed at `frame_index`.
pub fn wifi_vectorize(records: &[WifiRecord], frame_index: usize, ap_count: usize) -> Result<Descriptor> {
    let frame: Vec<WifiRecord> = records
        .iter()
        .filter(|r| r.frame_index == frame_index)
        .copied()
        .collect();
    vectorize_frame(&frame, frame_index, ap_count)
}

fn vectorize_frame(frame: &[WifiRecord], frame_index: usize, ap_count: usize) -> Result<Descriptor> {
    let mut by_ap: BTreeMap<u32, f64> = BTreeMap::new();
    for r in frame {
        if r.ap_id as usize >= ap_count {
            return Err(Error::invalid(format!(
                "ap_id {} >= ap_count {ap_count}",
                r.ap_id
            )));
        }
        by_ap
            .entry(r.ap_id)
            .and_modify(|v| {
                log::warn!(
                    "duplicate record for frame {frame_index}, ap {}; keeping the stronger rssi",
                    r.ap_id
                );
                *v = v.max(r.rssi);
            })
            .or_insert(r.rssi);
    }
    Descriptor::sparse(ap_count, by_ap)
}

/// Vectorizes every frame `0..=max(frame_index)`, frames without records become empty.
/// `ap_count` defaults to `1 + max(ap_id)`.
pub fn vectorize_all(records: &[WifiRecord], ap_count: Option<usize>) -> Result<Vec<Descriptor>> {
    if records.is_empty() {
        return Err(Error::invalid("no wifi records"));
    }
    let needed = records.iter().map(|r| r.ap_id as usize + 1).max().unwrap_or(1);
    let ap_count = ap_count.unwrap_or(needed);
    if ap_count < needed {
        return Err(Error::invalid(format!(
            "ap_count {ap_count} smaller than 1 + max ap_id ({needed})"
        )));
    }
    let n_frames = records.iter().map(|r| r.frame_index).max().unwrap_or(0) + 1;
    let mut frames: Vec<Vec<WifiRecord>> = vec![Vec::new(); n_frames];
    for r in records {
        frames[r.frame_index].push(*r);
    }
    frames
        .iter()
        .enumerate()
        .map(|(f, recs)| vectorize_frame(recs, f, ap_count))
        .collect()
}
