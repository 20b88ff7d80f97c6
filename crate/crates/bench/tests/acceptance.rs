//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.
//!
//! The two 10^6-op oracle fuzz runs dominate; expect roughly half an hour on one core.

use std::process::ExitCode;
use std::time::Instant;

use lowenv::chan::{ChanConfig, ChanStructure};
use lowenv::cutting::{build_shallow_cutting, verify_cutting, CuttingBudget};
use lowenv::geom::{lift_point, Disk, PlanarPoint, Plane, Point3, VerticalLine};
use lowenv::kreport::{below_point, DeletionOnlyKLowest, KLowest};
use lowenv::oracle::{dijkstra_explicit, naive_below, naive_k_lowest};
use lowenv::sssp::{close, sssp};
use lowenv::star::{DeleteMode, StarConfig, StarStructure};
use lowenv_bench::cost::{cost_audit, render_table};
use lowenv_bench::fuzz::{fuzz, workload_for, FuzzConfig, FuzzOutcome, FuzzTotals, Generators};
use lowenv_bench::runner::{run, RunOptions, StructureKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const WORKLOADS: usize = 200;
const OPS_PER_WORKLOAD: usize = 5000;
const MAX_LIVE: usize = 2000;

/// First faithful-mode seed that diverges, where its full workload does, and
/// where the shrunk repro does. Frozen from a fuzz run starting at seed 0.
const FAITHFUL_SEED: u64 = 1;
const FAITHFUL_INDEX: usize = 995;
const FAITHFUL_REPRO_INDEX: usize = 534;

struct Gate {
    failed: usize,
}

impl Gate {
    fn check(&mut self, name: &str, ok: bool, detail: String, start: Instant) {
        let tag = if ok { "PASS" } else { "FAIL" };
        println!("[{tag}] {name}: {detail} ({:.1} s)", start.elapsed().as_secs_f64());
        if !ok {
            self.failed += 1;
        }
    }
}

fn mixed_fuzz(structure: StructureKind) -> (Result<FuzzTotals, String>, Instant) {
    let start = Instant::now();
    let cfg = FuzzConfig {
        budget: WORKLOADS * OPS_PER_WORKLOAD,
        structure,
        mode: DeleteMode::Corrected,
        ops_per_workload: OPS_PER_WORKLOAD,
        generators: Generators::Mixed,
        ..Default::default()
    };
    let out = match fuzz(&cfg) {
        FuzzOutcome::Exhausted(t) => Ok(t),
        FuzzOutcome::Failed(f) => {
            let d = f.report.divergence.as_ref().expect("failures diverge");
            Err(format!("seed {} diverged at op {}: expected {:?}, got {:?}", f.seed, d.index, d.expected, d.actual))
        }
    };
    (out, start)
}

fn oracle_equivalence(gate: &mut Gate, name: &str, structure: StructureKind) -> Option<FuzzTotals> {
    let (out, start) = mixed_fuzz(structure);
    match out {
        Ok(t) => {
            let ok = t.workloads == WORKLOADS && t.ops == WORKLOADS * OPS_PER_WORKLOAD && t.max_live <= MAX_LIVE;
            gate.check(name, ok, format!("{} workloads, {} ops, {} queries, n up to {}, 0 divergences", t.workloads, t.ops, t.queries, t.max_live), start);
            Some(t)
        }
        Err(msg) => {
            gate.check(name, false, msg, start);
            None
        }
    }
}

fn faithful_flaw(gate: &mut Gate) {
    let start = Instant::now();
    let cfg = FuzzConfig { budget: 200_000, mode: DeleteMode::Faithful, ..Default::default() };
    let FuzzOutcome::Failed(f) = fuzz(&cfg) else {
        gate.check("faithful-flaw", false, "faithful fuzz exhausted its budget without diverging".into(), start);
        return;
    };
    let opts = RunOptions::new(StructureKind::Star, DeleteMode::Faithful, true);
    let d = f.report.divergence.clone().expect("failures diverge");
    let witness = f.report.dual_witness.clone();
    let witnessed = witness.as_ref().is_some_and(|w| w.index < d.index);

    let (_, ops) = workload_for(&cfg, FAITHFUL_SEED, usize::MAX);
    let pinned: Vec<Option<usize>> = (0..3).map(|_| run(&ops, opts).divergence.map(|d| d.index)).collect();
    let pinned_ok = pinned.iter().all(|i| *i == Some(FAITHFUL_INDEX));
    let replays: Vec<_> = (0..3).map(|_| run(&f.repro, opts).without_timings()).collect();
    let repro_ok = replays.iter().all(|r| *r == f.report.without_timings());

    let ok = f.seed == FAITHFUL_SEED && d.index == FAITHFUL_REPRO_INDEX && witnessed && pinned_ok && repro_ok;
    let w = witness.map_or("none".to_string(), |w| format!("id {} deleted at op {}", w.id, w.index));
    gate.check(
        "faithful-flaw",
        ok,
        format!(
            "seed {} ({}), repro {} ops diverging at op {} (expected {:?}, got {:?}); dual member: {w}; pinned replays {:?}; repro replays identical: {repro_ok}",
            f.seed, f.generator, f.repro.len(), d.index, d.expected, d.actual, pinned
        ),
        start,
    );
}

fn level_sum(gate: &mut Gate, runs: &[(&str, Option<&FuzzTotals>)], start: Instant) {
    let mut ok = true;
    let mut parts = Vec::new();
    for (name, t) in runs {
        match t {
            Some(t) => {
                ok &= t.level_sum_violations == 0;
                parts.push(format!("{name}: {} violations over {} full rebuilds", t.level_sum_violations, t.full_rebuilds));
            }
            None => {
                ok = false;
                parts.push(format!("{name}: fuzz run failed"));
            }
        }
    }
    gate.check("level-sum", ok, parts.join("; "), start);
}

fn threshold(gate: &mut Gate, star: Option<&FuzzTotals>, start: Instant) {
    match star {
        Some(t) => gate.check(
            "threshold",
            t.threshold_violations == 0,
            format!(
                "{} size violations over {} ops; max merge depth {}, fitted C = {:.3} (depth / log2 log2 n)",
                t.threshold_violations, t.ops, t.max_merge_depth, t.merge_depth_ratio
            ),
            start,
        ),
        None => gate.check("threshold", false, "star fuzz run failed".into(), start),
    }
}

fn cutting_validity(gate: &mut Gate) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut passed = 0;
    let mut failures = Vec::new();
    for build in 0..100 {
        let n = rng.gen_range(1..=2000usize);
        let k = match build % 3 {
            0 => 1,
            1 => (n as f64).sqrt() as usize,
            _ => n / 4,
        }
        .max(1);
        let planes: Vec<Plane> = if build % 5 == 4 {
            (1..=n as u64).map(|id| lift_point(&PlanarPoint::new(id, rng.gen_range(-500..500), rng.gen_range(-500..500)).unwrap())).collect()
        } else {
            (1..=n as u64)
                .map(|id| Plane::new(id, rng.gen_range(-999..1000), rng.gen_range(-999..1000), rng.gen_range(-999_999..1_000_000)).unwrap())
                .collect()
        };
        match build_shallow_cutting(&planes, k, &CuttingBudget::default()) {
            Ok(cut) if verify_cutting(&cut, &planes, k).passed() => passed += 1,
            Ok(_) => failures.push(format!("build {build} (n={n}, k={k}) failed verification")),
            Err(e) => failures.push(format!("build {build} (n={n}, k={k}): {e}")),
        }
    }
    gate.check("cutting-validity", passed == 100, format!("{passed}/100 builds verified {}", failures.join("; ")).trim_end().to_string(), start);
}

fn ids(v: &[Plane]) -> Vec<u64> {
    v.iter().map(|p| p.id).collect()
}

fn k_report(gate: &mut Gate) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (mut triples, mut below_triples) = (0usize, 0usize);
    let mut mismatches = Vec::new();
    let mut cases = [0u64; 3];
    let mut fallbacks = 0;
    for inst in 0..20 {
        let n = if inst < 4 { rng.gen_range(1..=40) } else { rng.gen_range(41..=1500) };
        let mut live: Vec<Plane> = (1..=n as u64)
            .map(|id| Plane::new(id, rng.gen_range(-999..1000), rng.gen_range(-999..1000), rng.gen_range(-999_999..1_000_000)).unwrap())
            .collect();
        let mut chan = ChanStructure::preprocess(live.clone(), ChanConfig::default()).unwrap();
        let mut star = StarStructure::build(live.clone(), StarConfig::default()).unwrap();
        let r = rng.gen_range(1..=n);
        let mut dok = DeletionOnlyKLowest::build(live.clone(), r).unwrap();
        for t in 0..500 {
            if t % 10 == 9 && live.len() > 1 {
                let id = live.swap_remove(rng.gen_range(0..live.len())).id;
                chan.delete(id).unwrap();
                star.delete(id).unwrap();
                dok.delete(id).unwrap();
            }
            let line = VerticalLine::new(rng.gen_range(-3000..3000), rng.gen_range(-3000..3000)).unwrap();
            let k = if rng.gen_bool(0.5) { rng.gen_range(1..=live.len() + 1) } else { 1 << rng.gen_range(0..=live.len().ilog2()) };
            let want = ids(&naive_k_lowest(&live, &line, k).unwrap());
            let got = [ids(&chan.k_lowest_at(&line, k).unwrap()), ids(&star.k_lowest_at(&line, k).unwrap()), ids(&dok.query_counted(&line, k).unwrap())];
            for (name, g) in ["chan", "star", "dok"].iter().zip(&got) {
                if *g != want && mismatches.len() < 5 {
                    mismatches.push(format!("{name} instance {inst} triple {t} k={k}"));
                }
            }
            triples += 1;
            if t % 10 == 0 {
                let p = live[rng.gen_range(0..live.len())];
                let (x, y) = (rng.gen_range(-3000..3000), rng.gen_range(-3000..3000));
                let z = p.a() * x + p.b() * y + p.c() + rng.gen_range(-3..=3);
                let point = Point3::new(x, y, z).unwrap();
                let want = ids(&naive_below(&live, &point));
                for (name, s) in [("chan", &chan as &dyn KLowest), ("star", &star)] {
                    let mut got = ids(&below_point(s, &point).unwrap());
                    got.sort_unstable();
                    let mut want = want.clone();
                    want.sort_unstable();
                    if got != want && mismatches.len() < 5 {
                        mismatches.push(format!("{name} below_point instance {inst} triple {t}"));
                    }
                }
                below_triples += 1;
            }
        }
        let s = dok.stats();
        cases[0] += s.case_all;
        cases[1] += s.case_middle;
        cases[2] += s.case_last;
        fallbacks += s.fallbacks;
    }
    let ok = mismatches.is_empty() && triples >= 10_000 && below_triples >= 1000 && cases.iter().all(|&c| c > 0);
    gate.check(
        "k-report",
        ok,
        format!(
            "{triples} k-lowest triples x 3 structures, {below_triples} below-point triples x 2; dok branches all/middle/last = {}/{}/{} ({fallbacks} fallbacks){}",
            cases[0],
            cases[1],
            cases[2],
            if mismatches.is_empty() { String::new() } else { format!("; mismatches: {}", mismatches.join(", ")) }
        ),
        start,
    );
}

fn sssp_instances(gate: &mut Gate) {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut bad = Vec::new();
    let (mut disconnected, mut connected, mut compared) = (0, 0, 0);
    for inst in 0..50 {
        let n = [100, 500, 1500][inst % 3];
        let r = if inst % 2 == 0 { 0.0 } else { rng.gen_range(0.5..3.0) };
        let rmax = if (inst / 2) % 2 == 0 { 0.0 } else { rng.gen_range(1.0..3.0) };
        // Zero radii with r = 0 only joins coincident centers; those stay sparse on purpose.
        let side = (n as f64).sqrt() * rng.gen_range(0.4..1.0);
        let split = inst % 5 == 4;
        let disks: Vec<Disk> = (0..n as u64)
            .map(|id| {
                let shift = if split && id % 2 == 1 { 10.0 * side } else { 0.0 };
                let rad = if rmax > 0.0 { rng.gen_range(0.0..rmax) } else { 0.0 };
                Disk::new(id, rng.gen_range(0.0..side) + shift, rng.gen_range(0.0..side), rad).unwrap()
            })
            .collect();
        let source = rng.gen_range(0..n as u64);
        let res = sssp(&disks, r, source).unwrap();
        let want = dijkstra_explicit(&disks, r, source).unwrap();
        compared += n;
        if want.iter().any(|d| d.is_infinite()) {
            disconnected += 1;
        } else {
            connected += 1;
        }
        if let Some(i) = (0..n).find(|&i| !close(res.dis[i], want[i])) {
            bad.push(format!("instance {inst} disk {}: {} vs {}", disks[i].id, res.dis[i], want[i]));
        }
    }
    gate.check(
        "sssp",
        bad.is_empty() && disconnected > 0 && connected > 0,
        format!("50 instances, {compared} distances within 1e-9 relative, {connected} fully reached, {disconnected} with unreachable disks {}", bad.join("; ")).trim_end().to_string(),
        start,
    );
}

fn main() -> ExitCode {
    let mut gate = Gate { failed: 0 };
    cutting_validity(&mut gate);
    k_report(&mut gate);
    sssp_instances(&mut gate);
    faithful_flaw(&mut gate);

    let star = oracle_equivalence(&mut gate, "oracle-equivalence-star", StructureKind::Star);
    let chan = oracle_equivalence(&mut gate, "oracle-equivalence-chan", StructureKind::Chan);
    let now = Instant::now();
    level_sum(&mut gate, &[("star", star.as_ref()), ("chan", chan.as_ref())], now);
    threshold(&mut gate, star.as_ref(), now);

    let start = Instant::now();
    let rows = cost_audit(&[256, 512, 1024, 2048, 4096], 0);
    println!("[REPORT] cost-audit ({:.1} s)\n{}", start.elapsed().as_secs_f64(), render_table(&rows));

    if gate.failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {} criteria failed", gate.failed);
        ExitCode::FAILURE
    }
}
