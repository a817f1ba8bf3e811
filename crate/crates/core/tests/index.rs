mod common;

use proptest::prelude::*;

use kcover::geometry::torus_distance;
use kcover::sampling::sample_fixed;
use kcover::{PointCloud, SeedSpec, SpatialIndex, TorusPoint};

use common::{brute_count, brute_knn};

fn cloud_and_query() -> impl Strategy<Value = (PointCloud, TorusPoint, f64)> {
    (1usize..=3, 5usize..200, any::<u64>()).prop_flat_map(|(d, n, seed)| {
        let cloud = sample_fixed(n, d, SeedSpec::new(seed, 0)).unwrap();
        (Just(cloud), prop::collection::vec(0.0..1.0f64, d), 0.001..0.25f64)
            .prop_map(|(c, x, rho)| (c, TorusPoint::new(&x).unwrap(), rho))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn queries_match_brute_force((cloud, x, rho) in cloud_and_query(), cell in 0.01..0.25f64) {
        let index = SpatialIndex::build(&cloud, cell).unwrap();
        let mut prev = 0.0;
        for k in 1..=cloud.len().min(6) {
            let dk = index.knn_distance(&x, k).unwrap();
            prop_assert_eq!(dk, brute_knn(&cloud, &x, k));
            prop_assert!(dk >= prev);
            prev = dk;
        }
        let exclude = [0usize];
        match (index.count_in_ball(&x, rho, &exclude), brute_count(&cloud, &x, rho, &exclude, 1e-9)) {
            (Ok(a), Some(b)) => prop_assert_eq!(a, b),
            (Err(_), None) => {}
            (a, b) => prop_assert!(false, "index {a:?}, brute force {b:?}"),
        }
    }

    #[test]
    fn knn_distance_is_the_kth_order_statistic((cloud, x, _) in cloud_and_query()) {
        let index = SpatialIndex::with_default_cells(&cloud, 3).unwrap();
        let k = cloud.len().min(3);
        let dk = index.knn_distance(&x, k).unwrap();
        let eps = 1e-9;
        let within = |r: f64| cloud.points().iter().filter(|p| torus_distance(&x, p).unwrap() < r).count();
        prop_assert!(within(dk + eps) >= k);
        prop_assert!(within(dk - eps) < k);
    }
}

#[test]
fn range_queries_have_no_false_negatives() {
    for d in 1..=3 {
        let cloud = sample_fixed(3000, d, SeedSpec::new(9, d as u64)).unwrap();
        let index = SpatialIndex::with_default_cells(&cloud, 2).unwrap();
        for q in 0..200u64 {
            let x = cloud.points()[q as usize].translated(&[0.013, 0.021, 0.034][..d]);
            let radius = 0.002 + 0.001 * q as f64;
            let mut found = Vec::new();
            index.for_each_within(&x, radius, |id, _| found.push(id));
            found.sort_unstable();
            let expected: Vec<usize> = (0..cloud.len())
                .filter(|&i| torus_distance(&x, &cloud.points()[i]).unwrap() <= radius)
                .collect();
            for id in &expected {
                assert!(found.binary_search(id).is_ok(), "d={d} q={q} missing {id}");
            }
        }
    }
}
