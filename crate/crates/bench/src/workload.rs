//! JSONL workloads: one operation per line, integer coordinates only.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use lowenv::geom::{Plane, Point3, VerticalLine};
use lowenv::oracle::naive_lowest;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ParseError;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum WorkloadOp {
    /// Adds the plane `z = a x + b y + c`.
    Insert { seq: u64, id: u64, a: i64, b: i64, c: i64 },
    Delete { seq: u64, id: u64 },
    /// Lowest plane on the vertical line through `(x, y)`.
    Query { seq: u64, x: i64, y: i64 },
    KLowest { seq: u64, x: i64, y: i64, k: usize },
    BelowPoint { seq: u64, x: i64, y: i64, z: i64 },
}

impl WorkloadOp {
    pub fn seq(&self) -> u64 {
        match *self {
            WorkloadOp::Insert { seq, .. }
            | WorkloadOp::Delete { seq, .. }
            | WorkloadOp::Query { seq, .. }
            | WorkloadOp::KLowest { seq, .. }
            | WorkloadOp::BelowPoint { seq, .. } => seq,
        }
    }

    fn set_seq(&mut self, s: u64) {
        match self {
            WorkloadOp::Insert { seq, .. }
            | WorkloadOp::Delete { seq, .. }
            | WorkloadOp::Query { seq, .. }
            | WorkloadOp::KLowest { seq, .. }
            | WorkloadOp::BelowPoint { seq, .. } => *seq = s,
        }
    }

    pub fn class(&self) -> OpClass {
        match self {
            WorkloadOp::Insert { .. } => OpClass::Insert,
            WorkloadOp::Delete { .. } => OpClass::Delete,
            WorkloadOp::Query { .. } => OpClass::Query,
            WorkloadOp::KLowest { .. } => OpClass::KLowest,
            WorkloadOp::BelowPoint { .. } => OpClass::BelowPoint,
        }
    }

    pub fn plane(&self) -> Option<Plane> {
        match *self {
            WorkloadOp::Insert { id, a, b, c, .. } => Plane::new(id, a, b, c).ok(),
            _ => None,
        }
    }

    pub fn line(&self) -> Option<VerticalLine> {
        match *self {
            WorkloadOp::Query { x, y, .. } | WorkloadOp::KLowest { x, y, .. } | WorkloadOp::BelowPoint { x, y, .. } => VerticalLine::new(x, y).ok(),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OpClass {
    Insert,
    Delete,
    Query,
    KLowest,
    BelowPoint,
}

/// Relative weights of the five operation kinds, in the order insert,
/// delete, query, k-lowest, below-point. Written `40/30/30` or `40/30/20/5/5`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OpMix(pub [f64; 5]);

impl OpMix {
    pub const INSERT_ONLY: OpMix = OpMix([1.0, 0.0, 0.0, 0.0, 0.0]);

    fn normalized(&self) -> [f64; 5] {
        let total: f64 = self.0.iter().sum();
        self.0.map(|w| w / total)
    }
}

impl Default for OpMix {
    fn default() -> Self {
        OpMix([40.0, 30.0, 30.0, 0.0, 0.0])
    }
}

impl FromStr for OpMix {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<f64> = s.split('/').map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad weight {p:?}: {e}"))).collect::<Result<_, _>>()?;
        if parts.len() != 3 && parts.len() != 5 {
            return Err(format!("expected 3 or 5 weights, got {}", parts.len()));
        }
        if parts.iter().any(|w| !w.is_finite() || *w < 0.0) || parts.iter().sum::<f64>() <= 0.0 {
            return Err("weights must be nonnegative with a positive sum".into());
        }
        let mut w = [0.0; 5];
        w[..parts.len()].copy_from_slice(&parts);
        Ok(OpMix(w))
    }
}

impl fmt::Display for OpMix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let w: Vec<String> = self.0.iter().map(|w| w.to_string()).collect();
        f.write_str(&w.join("/"))
    }
}

/// Parameters for [`generate`].
#[derive(Clone, Debug, PartialEq)]
pub struct GenConfig {
    pub seed: u64,
    /// Total number of operations, prefill included.
    pub ops: usize,
    pub mix: OpMix,
    /// Leading inserts before the mix starts.
    pub prefill: usize,
    /// Plane slopes are drawn from `(-slope, slope)`.
    pub slope: i64,
    /// Query coordinates are drawn from `(-span, span)`.
    pub span: i64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { seed: 0, ops: 1000, mix: OpMix::default(), prefill: 0, slope: 1000, span: 3000 }
    }
}

fn random_plane(rng: &mut ChaCha8Rng, id: u64, slope: i64) -> WorkloadOp {
    let c = slope * slope;
    WorkloadOp::Insert { seq: 0, id, a: rng.gen_range(-slope + 1..slope), b: rng.gen_range(-slope + 1..slope), c: rng.gen_range(-c + 1..c) }
}

/// A random workload; the same config always yields the same operations.
///
/// Deletes pick a uniformly random live id and fall back to an insert when
/// the set is empty.
pub fn generate(cfg: &GenConfig) -> Vec<WorkloadOp> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let weights = cfg.mix.normalized();
    let mut live: Vec<u64> = Vec::new();
    let mut next = 1u64;
    let mut out = Vec::with_capacity(cfg.ops);
    let slope = cfg.slope.clamp(1, 46_000);
    let span = cfg.span.max(1);
    for i in 0..cfg.ops {
        let kind = if i < cfg.prefill {
            0
        } else {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            weights.iter().position(|w| {
                acc += w;
                u < acc
            })
            .unwrap_or(4)
        };
        let mut op = match kind {
            1 if !live.is_empty() => {
                let id = live.swap_remove(rng.gen_range(0..live.len()));
                WorkloadOp::Delete { seq: 0, id }
            }
            0 | 1 => {
                live.push(next);
                next += 1;
                random_plane(&mut rng, next - 1, slope)
            }
            2 => WorkloadOp::Query { seq: 0, x: rng.gen_range(-span + 1..span), y: rng.gen_range(-span + 1..span) },
            3 => WorkloadOp::KLowest {
                seq: 0,
                x: rng.gen_range(-span + 1..span),
                y: rng.gen_range(-span + 1..span),
                k: rng.gen_range(1..=live.len().max(1) + 1),
            },
            _ => {
                let z = slope * span * 2;
                WorkloadOp::BelowPoint { seq: 0, x: rng.gen_range(-span + 1..span), y: rng.gen_range(-span + 1..span), z: rng.gen_range(-z..z) }
            }
        };
        op.set_seq(i as u64);
        out.push(op);
    }
    out
}

/// `n` random inserts, then for each plane: a query at one fixed line and a
/// deletion of the plane lowest there. This is the pattern that exposes the
/// faithful deletion flaw.
pub fn generate_delete_lowest(seed: u64, n: usize) -> Vec<WorkloadOp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<WorkloadOp> = (1..=n as u64).map(|id| random_plane(&mut rng, id, 1000)).collect();
    let mut live: Vec<Plane> = out.iter().filter_map(WorkloadOp::plane).collect();
    let (x, y) = (rng.gen_range(-300..300), rng.gen_range(-300..300));
    let line = VerticalLine::new(x, y).expect("small coordinates");
    while let Some(low) = naive_lowest(&live, &line) {
        out.push(WorkloadOp::Query { seq: 0, x, y });
        out.push(WorkloadOp::Delete { seq: 0, id: low.id });
        live.retain(|p| p.id != low.id);
    }
    out.push(WorkloadOp::Query { seq: 0, x, y });
    renumber(&mut out);
    out
}

/// Sets every `seq` to its index.
pub fn renumber(ops: &mut [WorkloadOp]) {
    for (i, op) in ops.iter_mut().enumerate() {
        op.set_seq(i as u64);
    }
}

/// Drops deletes of ids that are not live at that point and inserts of ids
/// already live, then renumbers. Used after cutting pieces out of a workload.
pub fn repair(ops: Vec<WorkloadOp>) -> Vec<WorkloadOp> {
    let mut live = HashSet::new();
    let mut out: Vec<WorkloadOp> = ops
        .into_iter()
        .filter(|op| match op {
            WorkloadOp::Insert { id, .. } => live.insert(*id),
            WorkloadOp::Delete { id, .. } => live.remove(id),
            _ => true,
        })
        .collect();
    renumber(&mut out);
    out
}

pub fn to_jsonl(ops: &[WorkloadOp]) -> String {
    let mut s = String::with_capacity(ops.len() * 64);
    for op in ops {
        s.push_str(&serde_json::to_string(op).expect("plain data serializes"));
        s.push('\n');
    }
    s
}

/// Parses and validates a workload. Blank lines are skipped.
pub fn parse_workload(text: &str) -> Result<Vec<WorkloadOp>, ParseError> {
    let mut ops = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let op: WorkloadOp = serde_json::from_str(line).map_err(|e| ParseError::new(i + 1, e.to_string()))?;
        ops.push((i + 1, op));
    }
    validate(&ops)?;
    Ok(ops.into_iter().map(|(_, op)| op).collect())
}

pub fn parse_workload_bytes(data: &[u8]) -> Result<Vec<WorkloadOp>, ParseError> {
    let text = std::str::from_utf8(data).map_err(|e| ParseError::new(0, e.to_string()))?;
    parse_workload(text)
}

fn validate(ops: &[(usize, WorkloadOp)]) -> Result<(), ParseError> {
    let mut live = HashSet::new();
    for (idx, (line, op)) in ops.iter().enumerate() {
        let err = |msg: String| Err(ParseError::new(*line, msg));
        if op.seq() != idx as u64 {
            return err(format!("seq {} out of order, expected {idx}", op.seq()));
        }
        match *op {
            WorkloadOp::Insert { id, a, b, c, .. } => {
                if let Err(e) = Plane::new(id, a, b, c) {
                    return err(e.to_string());
                }
                if !live.insert(id) {
                    return err(format!("insert of live id {id}"));
                }
            }
            WorkloadOp::Delete { id, .. } => {
                if !live.remove(&id) {
                    return err(format!("delete of absent id {id}"));
                }
            }
            WorkloadOp::Query { x, y, .. } => {
                if let Err(e) = VerticalLine::new(x, y) {
                    return err(e.to_string());
                }
            }
            WorkloadOp::KLowest { x, y, k, .. } => {
                if k == 0 {
                    return err("k must be at least 1".into());
                }
                if let Err(e) = VerticalLine::new(x, y) {
                    return err(e.to_string());
                }
            }
            WorkloadOp::BelowPoint { x, y, z, .. } => {
                if let Err(e) = Point3::new(x, y, z) {
                    return err(e.to_string());
                }
            }
        }
    }
    Ok(())
}
