//! Disk sets as CSV (`id,x,y,radius` with a header row) and distance tables.

use std::collections::HashSet;

use lowenv::geom::Disk;
use lowenv::sssp::SsspResult;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::ParseError;

#[derive(Deserialize)]
struct Row {
    id: u64,
    x: f64,
    y: f64,
    radius: f64,
}

/// Parses a disk CSV. Ids must be distinct and the file must hold at least one disk.
pub fn parse_disks(text: &str) -> Result<Vec<Disk>, ParseError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let headers = rdr.headers().map_err(|e| ParseError::new(1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["id", "x", "y", "radius"] {
        return Err(ParseError::new(1, format!("expected header id,x,y,radius, found {:?}", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for rec in rdr.deserialize::<Row>() {
        let line = out.len() + 2;
        let row = rec.map_err(|e| ParseError::new(e.position().map_or(line, |p| p.line() as usize), e.to_string()))?;
        let d = Disk::new(row.id, row.x, row.y, row.radius).map_err(|e| ParseError::new(line, e.to_string()))?;
        if !ids.insert(d.id) {
            return Err(ParseError::new(line, format!("duplicate id {}", d.id)));
        }
        out.push(d);
    }
    if out.is_empty() {
        return Err(ParseError::new(1, "no disks".into()));
    }
    Ok(out)
}

pub fn parse_disks_bytes(data: &[u8]) -> Result<Vec<Disk>, ParseError> {
    let text = std::str::from_utf8(data).map_err(|e| ParseError::new(0, e.to_string()))?;
    parse_disks(text)
}

pub fn to_csv(disks: &[Disk]) -> String {
    let mut s = String::from("id,x,y,radius\n");
    for d in disks {
        s.push_str(&format!("{},{},{},{}\n", d.id, d.x, d.y, d.r));
    }
    s
}

/// `v` with 12 significant digits, `inf` when infinite.
pub fn sig12(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 || v.is_nan() {
        return format!("{v}");
    }
    let mag = v.abs().log10().floor() as i32;
    if !(-4..=15).contains(&mag) {
        return format!("{v:.11e}");
    }
    let decimals = (11 - mag).max(0) as usize;
    let s = format!("{v:.decimals$}");
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// `id,dis,pred` rows in input order; `pred` is empty for the source and unreached disks.
pub fn distances_csv(res: &SsspResult) -> String {
    let mut s = String::from("id,dis,pred\n");
    for ((id, d), p) in res.ids.iter().zip(&res.dis).zip(&res.pred) {
        let p = p.map(|p| p.to_string()).unwrap_or_default();
        s.push_str(&format!("{id},{},{p}\n", sig12(*d)));
    }
    s
}

/// `n` disks with centers uniform in `[0, side)^2` and radii uniform in `[0, rmax)`.
pub fn random_disks(seed: u64, n: usize, side: f64, rmax: f64) -> Vec<Disk> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n as u64)
        .map(|id| {
            let r = if rmax > 0.0 { rng.gen_range(0.0..rmax) } else { 0.0 };
            Disk::new(id, rng.gen_range(0.0..side), rng.gen_range(0.0..side), r).expect("finite")
        })
        .collect()
}
