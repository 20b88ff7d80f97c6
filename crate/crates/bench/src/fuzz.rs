//! Seed-iterating oracle-diff fuzzing with op-bisection shrinking.

use lowenv::star::DeleteMode;
use serde::Serialize;

use crate::runner::{run, RunOptions, RunReport, StructureKind};
use crate::workload::{generate, generate_delete_lowest, repair, GenConfig, OpMix, WorkloadOp};

/// Which workload shapes a fuzz run draws from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Generators {
    /// Random insert/delete/query mixes only.
    Mixed,
    /// Mixes alternating with delete-the-lowest-plane-at-one-line runs.
    Both,
}

#[derive(Clone, Debug)]
pub struct FuzzConfig {
    /// Total operations over all workloads.
    pub budget: usize,
    pub structure: StructureKind,
    pub mode: DeleteMode,
    pub seed: u64,
    pub ops_per_workload: usize,
    /// Mixed workloads start with up to this many inserts.
    pub max_prefill: usize,
    pub mix: OpMix,
    pub generators: Generators,
    /// Replays allowed while shrinking a failure.
    pub shrink_runs: usize,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        FuzzConfig {
            budget: 100_000,
            structure: StructureKind::Star,
            mode: DeleteMode::Corrected,
            seed: 0,
            ops_per_workload: 5000,
            max_prefill: 1500,
            mix: OpMix([35.0, 25.0, 40.0, 0.0, 0.0]),
            generators: Generators::Both,
            shrink_runs: 48,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FuzzFailure {
    pub seed: u64,
    pub generator: String,
    pub original_len: usize,
    pub repro: Vec<WorkloadOp>,
    /// Replay of `repro`.
    pub report: RunReport,
    pub shrink_runs: usize,
}

/// Counters summed or maximized over every workload of a fuzz run.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct FuzzTotals {
    pub workloads: usize,
    pub ops: usize,
    pub queries: u64,
    pub deletions: u64,
    pub reinsertions: u64,
    pub chan_delete_calls: u64,
    pub merges: u64,
    pub full_rebuilds: u64,
    pub level_sum_violations: u64,
    pub threshold_violations: u64,
    pub max_merge_depth: usize,
    /// Largest merge depth over `log2 log2 n` in any workload: the fitted constant.
    pub merge_depth_ratio: f64,
    pub max_live: usize,
}

impl FuzzTotals {
    fn add(&mut self, r: &RunReport) {
        let c = &r.counters;
        self.workloads += 1;
        self.ops += r.executed;
        self.queries += r.counts.query + r.counts.k_lowest + r.counts.below_point;
        self.deletions += c.deletions;
        self.reinsertions += c.reinsertions;
        self.chan_delete_calls += c.chan_delete_calls;
        self.merges += c.merges;
        self.full_rebuilds += c.full_rebuilds;
        self.level_sum_violations += c.level_sum_violations;
        self.threshold_violations += c.threshold_violations;
        self.max_merge_depth = self.max_merge_depth.max(c.max_merge_depth);
        self.merge_depth_ratio = self.merge_depth_ratio.max(c.merge_depth_ratio);
        self.max_live = self.max_live.max(r.max_live);
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FuzzOutcome {
    Exhausted(FuzzTotals),
    Failed(Box<FuzzFailure>),
}

/// The workload fuzzing uses for `seed`, trimmed to `limit` operations.
pub fn workload_for(cfg: &FuzzConfig, seed: u64, limit: usize) -> (String, Vec<WorkloadOp>) {
    let adversarial = cfg.generators == Generators::Both && seed % 2 == 1;
    let (name, mut ops) = if adversarial {
        let n = 300 + (seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) >> 32) as usize % 700;
        (format!("delete-lowest n={n}"), generate_delete_lowest(seed, n))
    } else {
        let prefill = if cfg.max_prefill == 0 { 0 } else { (seed.wrapping_mul(0xbf58_476d_1ce4_e5b9) >> 32) as usize % (cfg.max_prefill + 1) };
        let g = GenConfig { seed, ops: cfg.ops_per_workload, mix: cfg.mix, prefill, ..Default::default() };
        (format!("mixed prefill={prefill} mix={}", cfg.mix), generate(&g))
    };
    ops.truncate(limit);
    (name, ops)
}

/// Runs workloads for seeds `cfg.seed, cfg.seed + 1, ...` until the budget is
/// spent or one diverges from the oracle; a failure is shrunk before returning.
pub fn fuzz(cfg: &FuzzConfig) -> FuzzOutcome {
    let opts = RunOptions::new(cfg.structure, cfg.mode, true);
    let mut totals = FuzzTotals::default();
    let mut seed = cfg.seed;
    while totals.ops < cfg.budget {
        let (generator, ops) = workload_for(cfg, seed, cfg.budget - totals.ops);
        let report = run(&ops, opts);
        totals.add(&report);
        if report.divergence.is_some() {
            let original_len = ops.len();
            let (repro, report, shrink_runs) = shrink(ops, report, opts, cfg.shrink_runs);
            return FuzzOutcome::Failed(Box::new(FuzzFailure { seed, generator, original_len, repro, report, shrink_runs }));
        }
        seed += 1;
    }
    FuzzOutcome::Exhausted(totals)
}

/// A failing replay worth keeping: it diverges, and in faithful star runs a
/// dual-member deletion precedes the divergence.
fn interesting(report: &RunReport, opts: RunOptions) -> bool {
    let Some(d) = &report.divergence else { return false };
    if opts.structure == StructureKind::Star && opts.mode == DeleteMode::Faithful {
        return report.dual_witness.as_ref().is_some_and(|w| w.index < d.index);
    }
    true
}

/// Cuts everything after the divergence, then removes halves, quarters, ...
/// of the workload while the replay stays interesting.
pub fn shrink(ops: Vec<WorkloadOp>, report: RunReport, opts: RunOptions, max_runs: usize) -> (Vec<WorkloadOp>, RunReport, usize) {
    let cut = |ops: &[WorkloadOp], r: &RunReport| -> Vec<WorkloadOp> {
        let end = r.divergence.as_ref().map_or(ops.len(), |d| d.index + 1);
        ops[..end].to_vec()
    };
    let mut best = cut(&ops, &report);
    let mut best_report = run(&best, opts);
    let mut runs = 1;
    if !interesting(&best_report, opts) {
        return (ops, report, runs);
    }
    let mut chunk = best.len() / 2;
    while chunk >= 1 && runs < max_runs {
        let mut start = 0;
        while start < best.len() && runs < max_runs {
            let end = (start + chunk).min(best.len());
            let mut cand: Vec<WorkloadOp> = best[..start].to_vec();
            cand.extend_from_slice(&best[end..]);
            let cand = repair(cand);
            runs += 1;
            let r = run(&cand, opts);
            if interesting(&r, opts) {
                best = cut(&cand, &r);
                best_report = RunReport { ops: best.len(), ..r };
            } else {
                start += chunk;
            }
        }
        chunk /= 2;
    }
    (best, best_report, runs)
}
