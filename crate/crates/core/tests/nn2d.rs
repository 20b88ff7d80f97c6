use lowenv::geom::PlanarPoint;
use lowenv::nn2d::{AwnnBackend, DeletionPool, ExhaustiveAwnn, InsertOnlyAwnn, NnIndex, WeightedPoint, EPS_DIST};
use lowenv::oracle::{naive_awnn, naive_nn};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn wp(id: u64, x: f64, y: f64, w: f64) -> WeightedPoint {
    WeightedPoint::new(id, x, y, w)
}

fn tuples<'a>(pts: impl IntoIterator<Item = &'a WeightedPoint>) -> Vec<(u64, f64, f64, f64)> {
    pts.into_iter().map(|p| (p.id, p.x, p.y, p.w)).collect()
}

fn random_wp(rng: &mut impl Rng, id: u64) -> WeightedPoint {
    // Coarse grid so exact ties are common.
    wp(id, rng.gen_range(-20..20) as f64, rng.gen_range(-20..20) as f64, rng.gen_range(-10..10) as f64 * 0.5)
}

#[test]
fn nn_two_points() {
    let mut n = NnIndex::new();
    assert_eq!(n.nearest(0, 0).unwrap(), None);
    n.insert(PlanarPoint::new(1, 1, 0).unwrap()).unwrap();
    n.insert(PlanarPoint::new(2, 3, 0).unwrap()).unwrap();
    assert_eq!(n.nearest(0, 0).unwrap().unwrap().id, 1);
    assert_eq!(n.nearest(2, 0).unwrap().unwrap().id, 1);
    assert_eq!(n.nearest(3, 5).unwrap().unwrap().id, 2);
    assert!(n.insert(PlanarPoint::new(2, 9, 9).unwrap()).is_err());
    assert!(n.delete(7).is_err());
    n.delete(1).unwrap();
    assert_eq!(n.nearest(-100, 40).unwrap().unwrap().id, 2);
}

#[test]
fn nn_singleton() {
    let mut n = NnIndex::new();
    n.insert(PlanarPoint::new(4, -7, 12).unwrap()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        assert_eq!(n.nearest(rng.gen_range(-30000..30000), rng.gen_range(-30000..30000)).unwrap().unwrap().id, 4);
    }
}

#[test]
fn nn_ten_thousand_mixed_ops() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut n = NnIndex::new();
    let mut live: Vec<(u64, i64, i64)> = Vec::new();
    let mut next = 0u64;
    for _ in 0..10_000 {
        let r: f64 = rng.gen();
        if r < 0.4 || live.is_empty() {
            let (x, y) = (rng.gen_range(-500..500), rng.gen_range(-500..500));
            n.insert(PlanarPoint::new(next, x, y).unwrap()).unwrap();
            live.push((next, x, y));
            next += 1;
        } else if r < 0.65 {
            let (id, _, _) = live.swap_remove(rng.gen_range(0..live.len()));
            n.delete(id).unwrap();
        } else {
            let (x, y) = (rng.gen_range(-600..600), rng.gen_range(-600..600));
            assert_eq!(n.nearest(x, y).unwrap().map(|p| p.id), naive_nn(&live, x, y));
        }
    }
    assert_eq!(n.len(), live.len());
}

#[test]
fn awnn_examples() {
    let b = ExhaustiveAwnn::build(vec![wp(1, 2.0, 0.0, 0.0), wp(2, 5.0, 0.0, -4.0)]);
    let (p, d) = b.nearest((0.0, 0.0)).unwrap();
    assert_eq!(p.id, 2);
    assert!((d - 1.0).abs() < 1e-12);
    assert!(ExhaustiveAwnn::build(vec![]).nearest((0.0, 0.0)).is_err());
    // Zero weights reduce to plain nearest neighbor; exact ties go to the smaller id.
    let b = ExhaustiveAwnn::build(vec![wp(9, 1.0, 0.0, 0.0), wp(3, -1.0, 0.0, 0.0), wp(5, 0.0, 3.0, 0.0)]);
    assert_eq!(b.nearest((0.0, 0.0)).unwrap().0.id, 3);
}

#[test]
fn binary_counter_buckets() {
    let mut io: InsertOnlyAwnn = InsertOnlyAwnn::new();
    assert!(io.nearest((0.0, 0.0)).is_err());
    io.insert(wp(0, 0.0, 0.0, 0.0)).unwrap();
    assert_eq!(io.bucket_sizes(), vec![1]);
    for id in 1..7 {
        io.insert(wp(id, id as f64, 0.0, 0.0)).unwrap();
    }
    assert_eq!(io.bucket_sizes(), vec![4, 2, 1]);
    io.insert(wp(7, 7.0, 0.0, 0.0)).unwrap();
    assert_eq!(io.bucket_sizes(), vec![8]);
    assert!(io.insert(wp(3, 0.0, 0.0, 0.0)).is_err());
    assert_eq!(io.len(), 8);
    let built = InsertOnlyAwnn::<ExhaustiveAwnn>::from_points((0..13).map(|i| wp(i, 0.0, i as f64, 0.0)).collect()).unwrap();
    assert_eq!(built.bucket_sizes(), vec![8, 4, 1]);
}

#[test]
fn pool_examples() {
    let mut empty: DeletionPool = DeletionPool::new(vec![]);
    assert_eq!(empty.pop_within((0.0, 0.0), 100.0), None);
    let mut p: DeletionPool = DeletionPool::new(vec![wp(1, 3.0, 0.0, -1.0)]);
    assert_eq!(p.pop_within((0.0, 0.0), 1.5), None);
    assert_eq!(p.len(), 1);
    assert_eq!(p.pop_within((0.0, 0.0), 2.0).unwrap().id, 1);
    assert!(p.is_empty());
    assert_eq!(p.pop_within((0.0, 0.0), 100.0), None);
}

#[test]
fn pool_offers_tied_members_in_id_order() {
    let mut p: DeletionPool = DeletionPool::new(vec![wp(4, 1.0, 0.0, 0.0), wp(2, -1.0, 0.0, 0.0), wp(8, 0.0, 1.0, 0.0)]);
    // Reject id 2; the next tied member by id is 4.
    assert_eq!(p.pop_nearest_if((0.0, 0.0), |q, _| q.id != 2).unwrap().id, 4);
    assert_eq!(p.pop_nearest_if((0.0, 0.0), |_, _| false), None);
    assert_eq!(p.len(), 2);
}

#[test]
fn pool_rebuilds_keep_live_set() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let pts: Vec<WeightedPoint> = (0..200).map(|i| random_wp(&mut rng, i)).collect();
    let mut pool: DeletionPool = DeletionPool::new(pts.clone());
    let mut live = pts;
    let mut seen = std::collections::HashSet::new();
    while !live.is_empty() {
        let q = (rng.gen_range(-25.0..25.0), rng.gen_range(-25.0..25.0));
        let want = naive_awnn(&tuples(&live), q, EPS_DIST).unwrap();
        let got = pool.pop_within(q, f64::INFINITY).unwrap();
        assert_eq!(got.id, want);
        assert!(seen.insert(got.id));
        live.retain(|p| p.id != got.id);
        assert!(pool.tombstones() <= pool.len());
        let mut a: Vec<u64> = pool.members().iter().map(|p| p.id).collect();
        let mut b: Vec<u64> = live.iter().map(|p| p.id).collect();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
    }
    assert!(pool.rebuilds() >= 5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn backends_match_exhaustive_scan(seed in any::<u64>(), n in 1usize..80) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<WeightedPoint> = (0..n).map(|i| random_wp(&mut rng, i as u64 * 7 % 97 + i as u64 * 100)).collect();
        let whole = ExhaustiveAwnn::build(pts.clone());
        let mut io: InsertOnlyAwnn = InsertOnlyAwnn::new();
        for (i, p) in pts.iter().enumerate() {
            io.insert(*p).unwrap();
            let sizes = io.bucket_sizes();
            let bits: Vec<usize> = (0..usize::BITS).rev().map(|b| 1usize << b).filter(|b| (i + 1) & b != 0).collect();
            prop_assert_eq!(sizes, bits);
            let q = (rng.gen_range(-25..25) as f64, rng.gen_range(-25..25) as f64);
            prop_assert_eq!(io.nearest(q).unwrap().0.id, naive_awnn(&tuples(&pts[..=i]), q, EPS_DIST).unwrap());
        }
        for _ in 0..20 {
            let q = (rng.gen_range(-25.0..25.0), rng.gen_range(-25.0..25.0));
            prop_assert_eq!(whole.nearest(q).unwrap().0.id, naive_awnn(&tuples(&pts), q, EPS_DIST).unwrap());
        }
    }

    #[test]
    fn pool_pops_match_exhaustive_scan(seed in any::<u64>(), n in 0usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<WeightedPoint> = (0..n).map(|i| random_wp(&mut rng, i as u64)).collect();
        let mut pool: DeletionPool = DeletionPool::new(pts.clone());
        let mut live = pts;
        for _ in 0..2 * n + 2 {
            let q = (rng.gen_range(-25..25) as f64, rng.gen_range(-25..25) as f64);
            let bound = rng.gen_range(-5.0..30.0);
            let t = tuples(&live);
            let want = naive_awnn(&t, q, EPS_DIST).ok().filter(|&id| {
                let p = live.iter().find(|p| p.id == id).unwrap();
                p.weighted_dist(q) <= bound + EPS_DIST
            });
            let got = pool.pop_within(q, bound).map(|p| p.id);
            prop_assert_eq!(got, want);
            if let Some(id) = got {
                live.retain(|p| p.id != id);
            }
            prop_assert_eq!(pool.len(), live.len());
        }
    }
}
