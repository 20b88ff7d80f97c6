use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lowenv::cutting::{build_shallow_cutting, verify_cutting, CuttingBudget};
use lowenv::geom::Plane;
use lowenv::oracle::dijkstra_explicit;
use lowenv::sssp::{close, sssp};
use lowenv::star::DeleteMode;
use lowenv_bench::cost::{cost_audit, render_table};
use lowenv_bench::disks::{distances_csv, parse_disks};
use lowenv_bench::fuzz::{fuzz, FuzzConfig, FuzzOutcome, Generators};
use lowenv_bench::runner::{parse_mode, run, RunOptions, StructureKind};
use lowenv_bench::workload::{generate, generate_delete_lowest, parse_workload, to_jsonl, GenConfig, OpMix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "lowenv", version, about = "Workloads, replays and fuzzing for dynamic lower envelopes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write a deterministic JSONL workload.
    Gen {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of operations.
        #[arg(long, short, default_value_t = 1000)]
        n: usize,
        /// Weights insert/delete/query[/k_lowest/below_point].
        #[arg(long, default_value = "40/30/30")]
        mix: OpMix,
        #[arg(long, default_value_t = 0)]
        prefill: usize,
        /// Insert `n` planes, then repeatedly delete the lowest one at a fixed line.
        #[arg(long)]
        delete_lowest: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a workload and print a JSON report.
    Run {
        workload: PathBuf,
        #[arg(long, default_value = "star", value_parser = |s: &str| s.parse::<StructureKind>())]
        structure: StructureKind,
        #[arg(long, default_value = "corrected", value_parser = parse_mode)]
        mode: DeleteMode,
        #[arg(long)]
        oracle_diff: bool,
        /// Omit per-operation outcomes from the report.
        #[arg(long)]
        summary: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fuzz against the oracle until the op budget runs out or a replay diverges.
    Fuzz {
        #[arg(long, default_value_t = 100_000)]
        budget: usize,
        #[arg(long, default_value = "star", value_parser = |s: &str| s.parse::<StructureKind>())]
        structure: StructureKind,
        #[arg(long, default_value = "corrected", value_parser = parse_mode)]
        mode: DeleteMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Skip the delete-lowest workloads.
        #[arg(long)]
        mixed_only: bool,
        /// Where to write the shrunk repro workload.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Shortest paths in the proximity graph of a disk CSV.
    Sssp {
        disks: PathBuf,
        #[arg(long, short, default_value_t = 0.0)]
        r: f64,
        #[arg(long)]
        source: u64,
        /// Compare against Dijkstra on the explicit graph.
        #[arg(long)]
        check: bool,
        /// Distance CSV destination; stats go to stderr.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build and verify a shallow cutting over random planes.
    VerifyCutting {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short, default_value_t = 1000)]
        n: usize,
        #[arg(long, short, default_value_t = 10)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Table of re-insertions and substructure visits per deletion for n = 2^8 .. 2^12.
    CostAudit {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

enum Fail {
    /// Divergence or failed check.
    Check(String),
    /// Bad input.
    Usage(String),
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Fail> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Fail::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read(p: &Path) -> Result<String, Fail> {
    fs::read_to_string(p).map_err(|e| Fail::Usage(format!("{}: {e}", p.display())))
}

fn json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("plain data serializes") + "\n"
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match exec(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Fail::Check(m)) => {
            eprintln!("{m}");
            ExitCode::from(1)
        }
        Err(Fail::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn exec(cmd: Cmd) -> Result<(), Fail> {
    match cmd {
        Cmd::Gen { seed, n, mix, prefill, delete_lowest, out } => {
            let ops = if delete_lowest { generate_delete_lowest(seed, n) } else { generate(&GenConfig { seed, ops: n, mix, prefill, ..Default::default() }) };
            emit(&out, &to_jsonl(&ops))
        }
        Cmd::Run { workload, structure, mode, oracle_diff, summary, out } => {
            let ops = parse_workload(&read(&workload)?).map_err(|e| Fail::Usage(format!("{}: {e}", workload.display())))?;
            let mut report = run(&ops, RunOptions::new(structure, mode, oracle_diff));
            if summary {
                report.outcomes.clear();
            }
            emit(&out, &json(&report))?;
            match &report.divergence {
                Some(d) if mode == DeleteMode::Corrected || structure == StructureKind::Chan => {
                    Err(Fail::Check(format!("divergence at op {}: expected {:?}, got {:?}", d.index, d.expected, d.actual)))
                }
                Some(d) => {
                    eprintln!("faithful divergence at op {}", d.index);
                    Ok(())
                }
                None => Ok(()),
            }
        }
        Cmd::Fuzz { budget, structure, mode, seed, mixed_only, out } => {
            let cfg = FuzzConfig { budget, structure, mode, seed, generators: if mixed_only { Generators::Mixed } else { Generators::Both }, ..Default::default() };
            match fuzz(&cfg) {
                FuzzOutcome::Exhausted(totals) => {
                    println!("{}", json(&serde_json::json!({ "exhausted": totals })).trim_end());
                    Ok(())
                }
                FuzzOutcome::Failed(f) => {
                    if let Some(p) = &out {
                        fs::write(p, to_jsonl(&f.repro)).map_err(|e| Fail::Usage(format!("{}: {e}", p.display())))?;
                    }
                    let d = f.report.divergence.as_ref().expect("failures diverge");
                    println!(
                        "{}",
                        json(&serde_json::json!({
                            "seed": f.seed,
                            "generator": f.generator,
                            "original_len": f.original_len,
                            "repro_len": f.repro.len(),
                            "divergence_index": d.index,
                            "expected": d.expected,
                            "actual": d.actual,
                            "dual_witness": f.report.dual_witness,
                            "shrink_runs": f.shrink_runs,
                        }))
                        .trim_end()
                    );
                    Err(Fail::Check(format!("seed {} diverges at op {}", f.seed, d.index)))
                }
            }
        }
        Cmd::Sssp { disks, r, source, check, out } => {
            let ds = parse_disks(&read(&disks)?).map_err(|e| Fail::Usage(format!("{}: {e}", disks.display())))?;
            let res = sssp(&ds, r, source).map_err(|e| Fail::Usage(e.to_string()))?;
            emit(&out, &distances_csv(&res))?;
            eprintln!("{}", json(&res.stats).trim_end());
            if check {
                let want = dijkstra_explicit(&ds, r, source).map_err(|e| Fail::Usage(e.to_string()))?;
                if let Some(i) = (0..ds.len()).find(|&i| !close(res.dis[i], want[i])) {
                    return Err(Fail::Check(format!("disk {}: got {}, explicit graph gives {}", ds[i].id, res.dis[i], want[i])));
                }
                eprintln!("check passed: {} distances agree", ds.len());
            }
            Ok(())
        }
        Cmd::VerifyCutting { seed, n, k, out } => {
            if n == 0 || k == 0 {
                return Err(Fail::Usage("n and k must be positive".into()));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let planes: Vec<Plane> = (1..=n as u64)
                .map(|id| Plane::new(id, rng.gen_range(-999..1000), rng.gen_range(-999..1000), rng.gen_range(-999_999..1_000_000)).expect("in range"))
                .collect();
            let cut = build_shallow_cutting(&planes, k, &CuttingBudget::default()).map_err(|e| Fail::Check(e.to_string()))?;
            let rep = verify_cutting(&cut, &planes, k);
            emit(&out, &json(&rep))?;
            if rep.passed() {
                Ok(())
            } else {
                Err(Fail::Check("cutting failed verification".into()))
            }
        }
        Cmd::CostAudit { seed, out } => {
            let rows = cost_audit(&[256, 512, 1024, 2048, 4096], seed);
            emit(&out, &render_table(&rows))
        }
    }
}
