use lowenv::geom::{disk_edge, Disk};
use lowenv::nn2d::{DeletionPool, WeightedPoint, EPS_DIST};
use lowenv::oracle::dijkstra_explicit;
use lowenv::sssp::{close, collect_ba, sssp, sssp_with, SsspOptions, TaIndex};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn disk(id: u64, x: f64, y: f64, r: f64) -> Disk {
    Disk::new(id, x, y, r).unwrap()
}

fn random_disks(seed: u64, n: usize, side: f64, rmax: f64) -> Vec<Disk> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let r = if rmax > 0.0 { rng.gen_range(0.0..rmax) } else { 0.0 };
            disk(i as u64 * 3 + 1, rng.gen_range(0.0..side), rng.gen_range(0.0..side), r)
        })
        .collect()
}

fn assert_matches_oracle(disks: &[Disk], r: f64, source: u64, audit: bool) {
    let want = dijkstra_explicit(disks, r, source).unwrap();
    let got = sssp_with(disks, r, source, &SsspOptions { audit }).unwrap();
    for (i, (g, w)) in got.dis.iter().zip(&want).enumerate() {
        assert!(close(*g, *w), "disk {}: got {g}, want {w}", disks[i].id);
    }
    assert_eq!(got.stats.invariant_violations, 0);
    assert_eq!(got.stats.nonadjacent_predecessors, 0);
    // The predecessor tree certifies each distance with a real edge.
    for (i, p) in got.pred.iter().enumerate() {
        match p {
            None => assert!(disks[i].id == source || got.dis[i].is_infinite()),
            Some(q) => {
                let j = disks.iter().position(|d| d.id == *q).unwrap();
                assert!(disk_edge(&disks[i], &disks[j], r).unwrap());
                assert!(close(got.dis[i], got.dis[j] + disks[i].dist(&disks[j])));
            }
        }
    }
}

#[test]
fn three_disks_on_a_line() {
    let d = [disk(1, 0.0, 0.0, 0.0), disk(2, 5.0, 0.0, 0.0), disk(3, 10.0, 0.0, 0.0)];
    let res = sssp(&d, 5.0, 1).unwrap();
    assert_eq!(res.dis, vec![0.0, 5.0, 10.0]);
    assert_eq!(res.pred, vec![None, Some(1), Some(2)]);
}

#[test]
fn single_disk_and_errors() {
    let d = [disk(7, 1.0, 1.0, 2.0)];
    let res = sssp(&d, 3.0, 7).unwrap();
    assert_eq!(res.dis, vec![0.0]);
    assert!(sssp(&d, 3.0, 8).is_err());
    assert!(sssp(&d, -1.0, 7).is_err());
    assert!(sssp(&[disk(1, 0.0, 0.0, 0.0), disk(1, 1.0, 0.0, 0.0)], 1.0, 1).is_err());
}

#[test]
fn edge_weight_is_center_distance() {
    let d = [disk(1, 0.0, 0.0, 1.0), disk(2, 4.0, 0.0, 1.0)];
    assert_eq!(sssp(&d, 2.0, 1).unwrap().dis, vec![0.0, 4.0]);
    assert_eq!(sssp(&d, 1.9, 1).unwrap().dis, vec![0.0, f64::INFINITY]);
}

#[test]
fn collect_ba_examples() {
    let a = disk(1, 0.0, 0.0, 1.0);
    let mut pool: DeletionPool = DeletionPool::new(vec![WeightedPoint::new(2, 3.0, 0.0, -1.0), WeightedPoint::new(3, 5.0, 0.0, 0.0)]);
    assert_eq!(collect_ba(&a, &mut pool, 1.0), vec![2]);
    assert_eq!(pool.len(), 1);
    let mut empty: DeletionPool = DeletionPool::new(vec![]);
    assert!(collect_ba(&a, &mut empty, 1.0).is_empty());
    assert_eq!(collect_ba(&a, &mut pool, 10.0), vec![3]);
    assert!(pool.is_empty());
}

#[test]
fn collect_ba_takes_exact_boundary_gaps() {
    // Gap exactly r after float rounding of the center distance.
    let a = disk(1, 0.1, 0.2, 0.3);
    let b = disk(2, 0.1 + 0.3 + 0.7 + 0.5, 0.2, 0.5);
    let r = 0.7;
    let want = disk_edge(&a, &b, r).unwrap();
    let mut pool: DeletionPool = DeletionPool::new(vec![WeightedPoint::new(2, b.x, b.y, -b.r)]);
    assert_eq!(collect_ba(&a, &mut pool, r).len(), want as usize);
}

#[test]
fn ta_small_cases() {
    let mut ta = TaIndex::new();
    let b = disk(9, 0.0, 0.0, 1.0);
    assert_eq!(ta.leftmost_adjacent_leaf(&b, 1.0), None);
    ta.insert(disk(1, 2.0, 0.0, 0.0), 0.0).unwrap();
    assert_eq!(ta.leaves().len(), 1);
    let leaf = ta.leftmost_adjacent_leaf(&b, 1.0).unwrap();
    assert_eq!(ta.leaf_item(leaf).0.id, 1);
    assert_eq!(ta.best_predecessor(&b, leaf, 1.0), (1, 2.0, true));
    assert_eq!(ta.leftmost_adjacent_leaf(&b, 0.5), None);
    assert!(ta.insert(disk(1, 0.0, 0.0, 0.0), 1.0).is_err());

    let mut ta = TaIndex::new();
    for (id, dis) in [(1, 30.0), (2, 20.0), (3, 10.0)] {
        ta.insert(disk(id, 0.0, id as f64, 0.0), dis).unwrap();
    }
    assert_eq!(ta.leaves().iter().map(|l| l.0.id).collect::<Vec<_>>(), vec![3, 2, 1]);
    ta.audit().unwrap();
}

#[test]
fn best_predecessor_tie_goes_to_smaller_id() {
    let mut ta = TaIndex::new();
    ta.insert(disk(1, 0.0, 0.0, 1.0), 0.0).unwrap();
    ta.insert(disk(2, 2.0, 0.0, 1.0), 2.0).unwrap();
    let b = disk(3, 4.0, 0.0, 1.0);
    let leaf = ta.leftmost_adjacent_leaf(&b, 2.0).unwrap();
    assert_eq!(ta.leaf_item(leaf).0.id, 1);
    assert_eq!(ta.best_predecessor(&b, leaf, 2.0), (1, 4.0, true));
}

#[test]
fn thousand_inserts_pass_the_structural_audit() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut ta = TaIndex::new();
    for id in 0..1000 {
        ta.insert(disk(id, rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0), rng.gen_range(0.0..2.0)), rng.gen_range(0.0..50.0)).unwrap();
        if id % 97 == 0 {
            ta.audit().unwrap();
        }
    }
    ta.audit().unwrap();
    assert!(ta.rebuilds() > 0);
    assert!(ta.height() <= 2 * 10 + 4, "height {}", ta.height());
}

/// Leftmost adjacent leaf and best predecessor against scans over the leaf sequence.
#[test]
fn ta_queries_match_scans() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trial in 0..20 {
        let mut ta = TaIndex::new();
        let n = 1 + trial * 10;
        for id in 0..n as u64 {
            ta.insert(disk(id, rng.gen_range(0.0..30.0), rng.gen_range(0.0..30.0), rng.gen_range(0.0..1.5)), rng.gen_range(0.0..40.0)).unwrap();
        }
        let leaves = ta.leaves();
        for _ in 0..50 {
            let b = disk(10_000, rng.gen_range(-5.0..35.0), rng.gen_range(-5.0..35.0), rng.gen_range(0.0..1.5));
            let r = rng.gen_range(0.0..3.0);
            let first = leaves.iter().position(|(d, _)| disk_edge(d, &b, r).unwrap());
            let got = ta.leftmost_adjacent_leaf(&b, r);
            assert_eq!(got.map(|l| ta.leaf_item(l).0.id), first.map(|i| leaves[i].0.id));
            let Some(leaf) = got else { continue };
            let (q, d, adjacent) = ta.best_predecessor(&b, leaf, r);
            let vals: Vec<(f64, u64)> = leaves[first.unwrap()..].iter().map(|(p, dis)| (dis + p.dist(&b), p.id)).collect();
            let best = vals.iter().map(|v| v.0).fold(f64::INFINITY, f64::min);
            let want = vals.iter().filter(|v| v.0 <= best + EPS_DIST).map(|v| v.1).min().unwrap();
            assert_eq!(q, want);
            assert!((d - best).abs() <= EPS_DIST);
            assert!(adjacent);
        }
    }
}

#[test]
fn pure_disk_graph() {
    for seed in 0..4 {
        let d = random_disks(seed, 300, 100.0, 4.0);
        assert_matches_oracle(&d, 0.0, d[0].id, seed == 0);
    }
}

#[test]
fn unit_points() {
    for seed in 0..4 {
        let d = random_disks(10 + seed, 300, 100.0, 0.0);
        assert_matches_oracle(&d, 8.0, d[5].id, seed == 0);
    }
}

#[test]
fn disconnected_clusters() {
    let mut d = random_disks(20, 150, 20.0, 1.0);
    d.extend(random_disks(21, 150, 20.0, 1.0).into_iter().map(|c| disk(c.id + 1, c.x + 1000.0, c.y, c.r)));
    let res = sssp(&d, 2.0, d[0].id).unwrap();
    assert!(res.dis[150..].iter().all(|x| x.is_infinite()));
    assert_matches_oracle(&d, 2.0, d[0].id, false);
}

#[test]
fn grid_with_exact_touching() {
    // Integer grid with gaps exactly r: every boundary decision is a tie.
    let mut d = Vec::new();
    for i in 0..15 {
        for j in 0..15 {
            d.push(disk(i * 15 + j, 3.0 * i as f64, 3.0 * j as f64, 1.0));
        }
    }
    assert_matches_oracle(&d, 1.0, 0, true);
    assert_matches_oracle(&d, 0.999, 0, false);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_instances_match_dijkstra(seed in any::<u64>(), n in 1usize..120, side in 5.0f64..200.0, rmax in 0.0f64..5.0, r in 0.0f64..10.0) {
        let d = random_disks(seed, n, side, rmax);
        let src = d[(seed % n as u64) as usize].id;
        assert_matches_oracle(&d, r, src, n <= 60);
    }
}
