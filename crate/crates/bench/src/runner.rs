//! Replays a workload against one structure, optionally diffing every answer
//! against a brute-force copy of the plane set.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use lowenv::chan::{ChanConfig, ChanStructure};
use lowenv::geom::{Plane, Point3};
use lowenv::kreport::{below_point, KLowest};
use lowenv::oracle::{naive_below, naive_k_lowest, naive_lowest};
use lowenv::star::{DeleteMode, StarConfig, StarStructure};
use serde::Serialize;

use crate::workload::{OpClass, WorkloadOp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StructureKind {
    /// The standalone insertion-and-deletion structure.
    Chan,
    /// The two-tier structure with an auxiliary set for fresh planes.
    Star,
}

impl FromStr for StructureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "chan" => Ok(StructureKind::Chan),
            "star" => Ok(StructureKind::Star),
            _ => Err(format!("unknown structure {s:?} (chan|star)")),
        }
    }
}

impl fmt::Display for StructureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            StructureKind::Chan => "chan",
            StructureKind::Star => "star",
        })
    }
}

pub fn parse_mode(s: &str) -> Result<DeleteMode, String> {
    match s {
        "faithful" => Ok(DeleteMode::Faithful),
        "corrected" => Ok(DeleteMode::Corrected),
        _ => Err(format!("unknown mode {s:?} (faithful|corrected)")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunOptions {
    pub structure: StructureKind,
    /// Ignored by the chan structure.
    pub mode: DeleteMode,
    pub oracle_diff: bool,
}

impl RunOptions {
    pub fn new(structure: StructureKind, mode: DeleteMode, oracle_diff: bool) -> Self {
        RunOptions { structure, mode, oracle_diff }
    }
}

/// What one operation returned.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Done,
    Lowest(Option<u64>),
    Ids(Vec<u64>),
    Error(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Divergence {
    /// Index of the operation in the workload.
    pub index: usize,
    pub op: WorkloadOp,
    pub expected: Outcome,
    pub actual: Outcome,
    /// Ids held by a main tier and present below it when the divergence surfaced.
    pub dual_members: Vec<u64>,
}

/// A deletion whose id sat in a main tier and its auxiliary set at once.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DualWitness {
    pub index: usize,
    pub id: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct OpCounts {
    pub insert: u64,
    pub delete: u64,
    pub query: u64,
    pub k_lowest: u64,
    pub below_point: u64,
}

impl OpCounts {
    fn bump(&mut self, c: OpClass, by: u64) {
        *match c {
            OpClass::Insert => &mut self.insert,
            OpClass::Delete => &mut self.delete,
            OpClass::Query => &mut self.query,
            OpClass::KLowest => &mut self.k_lowest,
            OpClass::BelowPoint => &mut self.below_point,
        } += by;
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Counters {
    pub insertions: u64,
    pub deletions: u64,
    pub reinsertions: u64,
    pub chan_delete_calls: u64,
    pub rebuilds: u64,
    pub merges: u64,
    pub full_rebuilds: u64,
    pub mean_reinsertions_per_deletion: f64,
    pub mean_chan_calls_per_deletion: f64,
    /// Rebuilds after which substructure-levels summed past `2n`.
    pub level_sum_violations: u64,
    pub max_level_sum_ratio: f64,
    /// Operations after which some auxiliary set reached its size threshold.
    pub threshold_violations: u64,
    pub max_merge_depth: usize,
    pub merge_depth_histogram: Vec<u64>,
    /// Largest merge depth over `log2 log2 n`.
    pub merge_depth_ratio: f64,
    /// Mean substructure-level of the planes in the outermost main structure at the end.
    pub average_level: Option<f64>,
    pub max_dual_members: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub structure: StructureKind,
    pub mode: DeleteMode,
    pub oracle_diff: bool,
    pub ops: usize,
    /// Operations executed; less than `ops` after a divergence.
    pub executed: usize,
    /// Largest number of planes present at once.
    pub max_live: usize,
    pub counts: OpCounts,
    pub outcomes: Vec<Outcome>,
    pub counters: Counters,
    pub divergence: Option<Divergence>,
    pub dual_witness: Option<DualWitness>,
    /// Nanoseconds per operation class. Excluded from determinism checks.
    pub wall_ns: OpCounts,
}

impl RunReport {
    /// The report without wall times, for comparing replays.
    pub fn without_timings(&self) -> RunReport {
        RunReport { wall_ns: OpCounts::default(), ..self.clone() }
    }
}

enum Subject {
    Chan(ChanStructure),
    Star(StarStructure),
}

impl Subject {
    fn as_klowest(&self) -> &dyn KLowest {
        match self {
            Subject::Chan(c) => c,
            Subject::Star(s) => s,
        }
    }
}

#[derive(Default)]
struct Naive {
    planes: Vec<Plane>,
    slot: HashMap<u64, usize>,
}

impl Naive {
    fn insert(&mut self, p: Plane) {
        self.slot.insert(p.id, self.planes.len());
        self.planes.push(p);
    }

    fn delete(&mut self, id: u64) {
        if let Some(i) = self.slot.remove(&id) {
            self.planes.swap_remove(i);
            if i < self.planes.len() {
                self.slot.insert(self.planes[i].id, i);
            }
        }
    }
}

fn ids(v: &[Plane]) -> Vec<u64> {
    v.iter().map(|p| p.id).collect()
}

/// Executes `ops` in order. Stops at the first divergence from the oracle,
/// or at the first operation the structure rejects.
pub fn run(ops: &[WorkloadOp], opts: RunOptions) -> RunReport {
    let mut subject = match opts.structure {
        StructureKind::Chan => Subject::Chan(ChanStructure::new(ChanConfig::default())),
        StructureKind::Star => Subject::Star(StarStructure::new(StarConfig::with_mode(opts.mode))),
    };
    let track_duals = opts.oracle_diff && matches!(subject, Subject::Star(_)) && opts.mode == DeleteMode::Faithful;
    let mut naive = Naive::default();
    let mut counts = OpCounts::default();
    let mut wall = OpCounts::default();
    let mut outcomes = Vec::with_capacity(ops.len());
    let mut divergence = None;
    let mut dual_witness = None;
    let mut threshold_violations = 0;
    let mut max_duals = 0;
    let (mut live, mut max_live) = (0usize, 0usize);

    for (index, op) in ops.iter().enumerate() {
        if track_duals {
            if let (Subject::Star(s), WorkloadOp::Delete { id, .. }) = (&subject, op) {
                let duals = s.dual_members();
                max_duals = max_duals.max(duals.len());
                if dual_witness.is_none() && duals.binary_search(id).is_ok() {
                    dual_witness = Some(DualWitness { index, id: *id });
                }
            }
        }
        let start = Instant::now();
        let actual = apply(&mut subject, op);
        wall.bump(op.class(), start.elapsed().as_nanos() as u64);
        counts.bump(op.class(), 1);
        match (op, &actual) {
            (WorkloadOp::Insert { .. }, Outcome::Done) => {
                live += 1;
                max_live = max_live.max(live);
            }
            (WorkloadOp::Delete { .. }, Outcome::Done) => live -= 1,
            _ => {}
        }
        if let Subject::Star(s) = &subject {
            threshold_violations += u64::from(!s.threshold_holds());
        }
        let expected = if opts.oracle_diff { Some(expect(&mut naive, op)) } else { None };
        let failed = matches!(actual, Outcome::Error(_)) || expected.as_ref().is_some_and(|e| *e != actual);
        if failed {
            let dual_members = match &subject {
                Subject::Star(s) => s.dual_members(),
                Subject::Chan(_) => Vec::new(),
            };
            divergence = Some(Divergence { index, op: op.clone(), expected: expected.unwrap_or(Outcome::Done), actual: actual.clone(), dual_members });
            outcomes.push(actual);
            break;
        }
        outcomes.push(actual);
    }

    let executed = outcomes.len();
    let counters = counters(&subject, threshold_violations, max_duals);
    RunReport {
        structure: opts.structure,
        mode: opts.mode,
        oracle_diff: opts.oracle_diff,
        ops: ops.len(),
        executed,
        max_live,
        counts,
        outcomes,
        counters,
        divergence,
        dual_witness,
        wall_ns: wall,
    }
}

fn apply(subject: &mut Subject, op: &WorkloadOp) -> Outcome {
    let res = match (subject, op) {
        (s, WorkloadOp::Insert { id, a, b, c, .. }) => Plane::new(*id, *a, *b, *c).and_then(|p| match s {
            Subject::Chan(c) => c.insert(p),
            Subject::Star(t) => t.insert(p),
        }).map(|_| Outcome::Done),
        (Subject::Chan(c), WorkloadOp::Delete { id, .. }) => c.delete(*id).map(|_| Outcome::Done),
        (Subject::Star(s), WorkloadOp::Delete { id, .. }) => s.delete(*id).map(|_| Outcome::Done),
        (s, WorkloadOp::Query { .. }) => {
            let line = op.line().expect("validated");
            Ok(Outcome::Lowest(match s {
                Subject::Chan(c) => c.query(&line),
                Subject::Star(t) => t.query(&line),
            }.map(|p| p.id)))
        }
        (s, WorkloadOp::KLowest { k, .. }) => s.as_klowest().k_lowest_at(&op.line().expect("validated"), *k).map(|v| Outcome::Ids(ids(&v))),
        (s, WorkloadOp::BelowPoint { x, y, z, .. }) => Point3::new(*x, *y, *z).and_then(|p| below_point(s.as_klowest(), &p)).map(|v| Outcome::Ids(ids(&v))),
    };
    res.unwrap_or_else(|e| Outcome::Error(e.to_string()))
}

fn expect(naive: &mut Naive, op: &WorkloadOp) -> Outcome {
    match op {
        WorkloadOp::Insert { .. } => {
            naive.insert(op.plane().expect("validated"));
            Outcome::Done
        }
        WorkloadOp::Delete { id, .. } => {
            naive.delete(*id);
            Outcome::Done
        }
        WorkloadOp::Query { .. } => Outcome::Lowest(naive_lowest(&naive.planes, &op.line().expect("validated")).map(|p| p.id)),
        WorkloadOp::KLowest { k, .. } => Outcome::Ids(ids(&naive_k_lowest(&naive.planes, &op.line().expect("validated"), *k).expect("k validated"))),
        WorkloadOp::BelowPoint { x, y, z, .. } => Outcome::Ids(ids(&naive_below(&naive.planes, &Point3::new(*x, *y, *z).expect("validated")))),
    }
}

fn counters(subject: &Subject, threshold_violations: u64, max_dual_members: usize) -> Counters {
    let per = |a: u64, d: u64| if d == 0 { 0.0 } else { a as f64 / d as f64 };
    match subject {
        Subject::Chan(c) => {
            let st = c.stats();
            Counters {
                insertions: st.insertions,
                deletions: st.deletions,
                reinsertions: st.reinsertions,
                chan_delete_calls: st.chan_delete_calls,
                rebuilds: st.rebuilds,
                full_rebuilds: st.top_rebuilds,
                mean_reinsertions_per_deletion: per(st.reinsertions, st.deletions),
                mean_chan_calls_per_deletion: per(st.chan_delete_calls, st.deletions),
                level_sum_violations: st.level_sum_violations,
                threshold_violations,
                average_level: (!c.is_empty()).then(|| c.total_level_sum() as f64 / c.len() as f64),
                max_dual_members,
                ..Default::default()
            }
        }
        Subject::Star(s) => {
            let st = s.stats();
            Counters {
                insertions: st.insertions,
                deletions: st.deletions,
                reinsertions: st.reinsertions,
                chan_delete_calls: st.chan_delete_calls,
                rebuilds: st.merges + st.full_rebuilds,
                merges: st.merges,
                full_rebuilds: st.full_rebuilds,
                mean_reinsertions_per_deletion: per(st.reinsertions, st.deletions),
                mean_chan_calls_per_deletion: per(st.chan_delete_calls, st.deletions),
                level_sum_violations: st.level_sum_violations,
                max_level_sum_ratio: st.max_level_sum_ratio,
                threshold_violations,
                max_merge_depth: st.max_merge_depth(),
                merge_depth_histogram: st.merge_depths.clone(),
                merge_depth_ratio: st.max_depth_ratio,
                average_level: s.main_level_sum().filter(|x| x.1 > 0).map(|(sum, n)| sum as f64 / n as f64),
                max_dual_members,
            }
        }
    }
}
