use proptest::prelude::*;
use rand::Rng;

use kcover::geometry::{canonicalize, centroid, circumsphere, in_open_simplex, lift, torus_distance};
use kcover::{Error, SeedSpec, TorusPoint};

fn point(d: usize) -> impl Strategy<Value = TorusPoint> {
    prop::collection::vec(0.0..1.0f64, d).prop_map(|v| TorusPoint::new(&v).unwrap())
}

/// `m` points within a box of side 0.2 around a random base, so a lift exists.
fn cluster(d: usize, m: usize) -> impl Strategy<Value = Vec<TorusPoint>> {
    (prop::collection::vec(0.0..1.0f64, d), prop::collection::vec(prop::collection::vec(-0.1..0.1f64, d), m)).prop_map(
        move |(base, offs)| {
            offs.iter()
                .map(|o| TorusPoint::new(&base.iter().zip(o).map(|(b, x)| b + x).collect::<Vec<_>>()).unwrap())
                .collect()
        },
    )
}

fn dims_and_points() -> impl Strategy<Value = (TorusPoint, TorusPoint, TorusPoint)> {
    (1usize..=3).prop_flat_map(|d| (point(d), point(d), point(d)))
}

proptest! {
    #[test]
    fn metric_axioms((x, y, z) in dims_and_points()) {
        let d = x.dim() as f64;
        let xy = torus_distance(&x, &y).unwrap();
        prop_assert_eq!(xy, torus_distance(&y, &x).unwrap());
        prop_assert_eq!(torus_distance(&x, &x).unwrap(), 0.0);
        prop_assert!(xy <= d.sqrt() / 2.0 + 1e-15);
        let xz = torus_distance(&x, &z).unwrap();
        let zy = torus_distance(&z, &y).unwrap();
        prop_assert!(xy <= xz + zy + 1e-12);
    }

    #[test]
    fn canonical_coordinates(v in prop::collection::vec(-5.0..5.0f64, 1..=3)) {
        let p = TorusPoint::new(&v).unwrap();
        prop_assert!(p.coords().iter().all(|&c| (0.0..1.0).contains(&c)));
        for (c, x) in p.coords().iter().zip(&v) {
            prop_assert_eq!(*c, canonicalize(*x));
        }
    }

    #[test]
    fn lift_round_trip(pts in (1usize..=3, 2usize..=4).prop_flat_map(|(d, m)| cluster(d, m))) {
        let l = lift(&pts).unwrap();
        let mut diam: f64 = 0.0;
        for (p, o) in pts.iter().zip(&l.offsets) {
            prop_assert!(o.norm() < 0.5);
            let back = TorusPoint::new(&l.base.coords().iter().zip(o.as_slice()).map(|(b, x)| b + x).collect::<Vec<_>>()).unwrap();
            // base + (p - base) can round by an ulp
            for (a, b) in back.coords().iter().zip(p.coords()) {
                let gap = (a - b).abs();
                prop_assert!(gap.min(1.0 - gap) <= 4.0 * f64::EPSILON);
            }
            for q in &l.offsets {
                diam = diam.max(o.as_slice().iter().zip(q.as_slice()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt());
            }
        }
        prop_assert!((l.diameter - diam).abs() < 1e-15);
    }

    #[test]
    fn translation_equivariance(
        pts in (1usize..=3).prop_flat_map(|d| (Just(d), 2usize..=d + 1)).prop_flat_map(|(d, m)| cluster(d, m)),
        shift in prop::collection::vec(-1.0..1.0f64, 3),
    ) {
        let d = pts[0].dim();
        let v = &shift[..d];
        let Ok(s) = circumsphere(&pts) else { return Ok(()) };
        let moved: Vec<TorusPoint> = pts.iter().map(|p| p.translated(v)).collect();
        let t = circumsphere(&moved).unwrap();
        prop_assert!((s.radius - t.radius).abs() < 1e-9);
        prop_assert!(torus_distance(&t.center, &s.center.translated(v)).unwrap() < 1e-9);
    }

    #[test]
    fn centroid_is_inside(pts in (1usize..=3).prop_flat_map(|d| cluster(d, d + 1))) {
        match circumsphere(&pts) {
            Ok(_) => prop_assert!(in_open_simplex(&pts, &centroid(&pts).unwrap()).unwrap()),
            Err(Error::Degenerate { .. }) => {}
            Err(e) => prop_assert!(false, "{e}"),
        }
    }
}

#[test]
fn circumsphere_equidistance_on_many_configurations() {
    for d in 1..=3usize {
        for m in 2..=d + 1 {
            let mut rng = SeedSpec::new(17, (10 * d + m) as u64).rng();
            let mut solved = 0;
            for _ in 0..10_000 {
                let base: Vec<f64> = (0..d).map(|_| rng.random()).collect();
                let pts: Vec<TorusPoint> = (0..m)
                    .map(|_| {
                        let x: Vec<f64> = base.iter().map(|b| b + rng.random_range(-0.1..0.1)).collect();
                        TorusPoint::new(&x).unwrap()
                    })
                    .collect();
                let Ok(s) = circumsphere(&pts) else { continue };
                solved += 1;
                // Past the convexity radius the sphere wraps and the torus
                // distance no longer measures it.
                if s.radius > 0.25 {
                    continue;
                }
                let worst =
                    pts.iter().map(|p| (torus_distance(&s.center, p).unwrap() - s.radius).abs()).fold(0.0, f64::max);
                assert!(worst <= 1e-9, "d={d} m={m} worst={worst}");
            }
            assert!(solved > 9_000, "d={d} m={m} solved {solved}");
        }
    }
}
