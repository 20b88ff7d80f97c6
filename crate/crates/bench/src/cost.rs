//! Empirical cost table: re-insertions and substructure visits per deletion.

use lowenv::chan::{ChanConfig, ChanStructure};
use lowenv::geom::Plane;
use lowenv::star::{StarConfig, StarStructure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::runner::StructureKind;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CostRow {
    pub structure: StructureKind,
    pub n: usize,
    pub deletions: u64,
    pub mean_reinsertions_per_deletion: f64,
    pub mean_chan_calls_per_deletion: f64,
    /// Mean substructure-level right after building over all `n` planes.
    pub average_level: f64,
    /// The same after the deletions.
    pub final_average_level: f64,
}

fn random_planes(seed: u64, n: usize) -> Vec<Plane> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (1..=n as u64)
        .map(|id| Plane::new(id, rng.gen_range(-999..1000), rng.gen_range(-999..1000), rng.gen_range(-999_999..1_000_000)).expect("in range"))
        .collect()
}

/// Builds each structure over `n` random planes for every `n` in `sizes`, then
/// deletes a random quarter of them.
pub fn cost_audit(sizes: &[usize], seed: u64) -> Vec<CostRow> {
    let mut rows = Vec::new();
    for &n in sizes {
        let planes = random_planes(seed ^ n as u64, n);
        let mut order: Vec<u64> = planes.iter().map(|p| p.id).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(n as u64));
        for i in (1..order.len()).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let dels = &order[..n / 4];
        let per = |a: u64, d: u64| if d == 0 { 0.0 } else { a as f64 / d as f64 };

        let mut chan = ChanStructure::preprocess(planes.clone(), ChanConfig::default()).expect("distinct ids");
        let average_level = chan.total_level_sum() as f64 / n as f64;
        for &id in dels {
            chan.delete(id).expect("present");
        }
        let st = chan.stats();
        rows.push(CostRow {
            structure: StructureKind::Chan,
            n,
            deletions: st.deletions,
            mean_reinsertions_per_deletion: per(st.reinsertions, st.deletions),
            mean_chan_calls_per_deletion: per(st.chan_delete_calls, st.deletions),
            average_level,
            final_average_level: chan.total_level_sum() as f64 / chan.len().max(1) as f64,
        });

        let mut star = StarStructure::build(planes, StarConfig::default()).expect("distinct ids");
        let average_level = star.main_level_sum().map_or(0.0, |(s, m)| s as f64 / m.max(1) as f64);
        for &id in dels {
            star.delete(id).expect("present");
        }
        let st = star.stats();
        rows.push(CostRow {
            structure: StructureKind::Star,
            n,
            deletions: st.deletions,
            mean_reinsertions_per_deletion: per(st.reinsertions, st.deletions),
            mean_chan_calls_per_deletion: per(st.chan_delete_calls, st.deletions),
            average_level,
            final_average_level: star.main_level_sum().map_or(0.0, |(s, m)| s as f64 / m.max(1) as f64),
        });
    }
    rows
}

/// The rows as a Markdown table.
pub fn render_table(rows: &[CostRow]) -> String {
    let mut s = String::from("| structure | n | deletions | re-insertions / deletion | chan-delete calls / deletion | average level (built) | average level (after) |\n|---|---:|---:|---:|---:|---:|---:|\n");
    for r in rows {
        s.push_str(&format!(
            "| {} | {} | {} | {:.2} | {:.2} | {:.3} | {:.3} |\n",
            r.structure, r.n, r.deletions, r.mean_reinsertions_per_deletion, r.mean_chan_calls_per_deletion, r.average_level, r.final_average_level
        ));
    }
    s
}
