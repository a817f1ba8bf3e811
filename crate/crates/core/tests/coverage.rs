use std::collections::HashSet;

use kcover::coverage::{is_covered_grid_refined, is_covered_morse_with, Covered, NodeGrid, Witness};
use kcover::critical::{enumerate_with_index, EnumerationWindow};
use kcover::euler::euler_of_enumeration;
use kcover::sampling::sample_poisson;
use kcover::window::WindowConfig;
use kcover::{SeedSpec, SpatialIndex, MAX_DIM};

fn covered_yes(c: Covered) -> bool {
    c == Covered::Yes
}

#[test]
fn coverage_is_monotone_in_radius_and_order() {
    for t in 0..6u64 {
        let cloud = sample_poisson(3000.0, 2, SeedSpec::new(31, t)).unwrap();
        let cfg = WindowConfig::new(3000.0, 2, 2, 0.0).unwrap();
        let radii: Vec<f64> = (0..8).map(|j| cfg.r0() * (0.8 + 0.1 * j as f64)).collect();
        let mut by_k = Vec::new();
        for k in 1..=3 {
            let index = SpatialIndex::with_default_cells(&cloud, k).unwrap();
            let morse: Vec<bool> =
                radii.iter().map(|&r| covered_yes(is_covered_morse_with(&index, k, r).unwrap().covered)).collect();
            let grid: Vec<bool> = radii
                .iter()
                .map(|&r| covered_yes(is_covered_grid_refined(&index, k, r, r / 256.0).unwrap().covered))
                .collect();
            assert!(morse.windows(2).all(|w| !w[0] || w[1]), "t={t} k={k} {morse:?}");
            assert_eq!(morse, grid, "t={t} k={k}");
            by_k.push(morse);
        }
        for k in 1..3 {
            for (hi, lo) in by_k[k].iter().zip(&by_k[k - 1]) {
                assert!(!hi || *lo, "t={t}: covered for k={} but not for k={k}", k + 1);
            }
        }
    }
}

#[test]
fn witnesses_are_uncovered() {
    let mut seen = 0;
    for t in 0..20u64 {
        let cloud = sample_poisson(2000.0, 2, SeedSpec::new(32, t)).unwrap();
        let index = SpatialIndex::with_default_cells(&cloud, 2).unwrap();
        let r = WindowConfig::new(2000.0, 2, 2, -1.0).unwrap().r0();
        for v in [is_covered_morse_with(&index, 2, r).unwrap(), is_covered_grid_refined(&index, 2, r, r / 64.0).unwrap()] {
            if v.covered == Covered::No {
                seen += 1;
                let w = v.witness.expect("an uncovered verdict carries a witness");
                assert!(index.knn_distance(w.location(), 2).unwrap() > r);
                if let Witness::CriticalPoint(c) = w {
                    assert!(c.rho > r && c.mu == 2);
                }
            }
        }
    }
    assert!(seen > 10);
}

/// Euler characteristic of the cubical complex on the lattice nodes where
/// `d_k <= r`: nodes, minus edges joining two covered nodes, plus unit
/// squares with four covered corners. Only cells touching a vacant node
/// need visiting; the full lattice contributes `N - 2N + N = 0`.
fn covered_cubical_euler(index: &SpatialIndex<'_>, k: usize, r: f64, h: f64) -> i64 {
    let grid = NodeGrid::with_spacing(2, h).unwrap();
    let vacant: HashSet<u64> = grid.nodes_above(index, k, r, usize::MAX).unwrap().into_iter().collect();
    let m = grid.per_axis;
    let step = |id: u64, dx: u64, dy: u64| {
        let c = grid.coords(id);
        let mut n = [0u64; MAX_DIM];
        n[0] = (c[0] + dx + m) % m;
        n[1] = (c[1] + dy + m) % m;
        grid.linear(&n)
    };
    // Cells are keyed by their lower-left node.
    let mut broken_edges = HashSet::new();
    let mut broken_squares = HashSet::new();
    for &id in &vacant {
        broken_edges.insert((id, 0));
        broken_edges.insert((id, 1));
        broken_edges.insert((step(id, m - 1, 0), 0));
        broken_edges.insert((step(id, 0, m - 1), 1));
        for (dx, dy) in [(0, 0), (m - 1, 0), (0, m - 1), (m - 1, m - 1)] {
            broken_squares.insert(step(id, dx, dy));
        }
    }
    -(vacant.len() as i64) + broken_edges.len() as i64 - broken_squares.len() as i64
}

/// The torus has `χ = 0`, so the coverage set and its open complement have
/// opposite Euler characteristics. The lattice only resolves the topology
/// when no critical value is close to `r` (tiny pockets and thin necks), so
/// each trial picks the radius near `r0` farthest from every critical value
/// and compares only lattice values that are stable under refinement.
#[test]
fn euler_characteristic_matches_lattice_topology() {
    let n = 5000.0;
    let r0 = WindowConfig::new(n, 2, 2, 0.0).unwrap().r0();
    let mut compared = 0;
    let mut skipped = 0;
    for t in 0..60 {
        let cloud = sample_poisson(n, 2, SeedSpec::new(33, t)).unwrap();
        let index = SpatialIndex::with_default_cells(&cloud, 2).unwrap();
        let e = match enumerate_with_index(&index, 2, EnumerationWindow::new(0.0, 0.25).unwrap()) {
            Ok(e) => e,
            Err(err) if err.is_degenerate() => {
                skipped += 1;
                continue;
            }
            Err(err) => panic!("{err}"),
        };
        let clearance = |r: f64| e.points.iter().map(|c| (c.rho - r).abs() / r).fold(f64::INFINITY, f64::min);
        let r = (0..=40).map(|j| r0 * (0.96 + 0.002 * j as f64)).max_by(|a, b| clearance(*a).total_cmp(&clearance(*b))).unwrap();
        if clearance(r) < 0.003 {
            skipped += 1;
            continue;
        }
        // a lattice value that still changes under refinement is unresolved
        let lattice = covered_cubical_euler(&index, 2, r, r / 512.0);
        if lattice != covered_cubical_euler(&index, 2, r, r / 1024.0) {
            skipped += 1;
            continue;
        }
        compared += 1;
        let chi = euler_of_enumeration(&e, cloud.len(), r).unwrap();
        assert_eq!(chi, lattice, "trial {t} at r = {r}");
    }
    assert!(compared >= 50, "compared {compared}, skipped {skipped}");
}
