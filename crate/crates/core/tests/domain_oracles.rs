//! Brute-force oracles for the domain geometry: distance transform, inradius,
//! ridge membership, and gradient-flow tracing.

use proptest::prelude::*;
use robin_lab::domain::{self, Shape};

/// Reference distance: per-vertex minimum over the boundary sample list,
/// evaluated with the same integer-squared-units formula as the production
/// transform so agreement must be bit-exact.
fn brute_force_distance(dom: &robin_lab::Domain64) -> Vec<f64> {
    let half = dom.h * 0.5;
    dom.field_vertices()
        .map(|v| {
            let (ix, iy) = dom.vertex_xy(v);
            let (px, py) = (2 * ix as i64, 2 * iy as i64);
            let best = (0..dom.num_sites())
                .map(|s| {
                    let p = dom.site_raw(s);
                    let (dx, dy) = (px - p[0], py - p[1]);
                    dx * dx + dy * dy
                })
                .min()
                .unwrap();
            half * (best as f64).sqrt()
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn distance_transform_equals_brute_force(
        nx in 2usize..=33,
        ny in 2usize..=33,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mask: Vec<bool> = (0..nx * ny).map(|_| rng.gen_bool(0.7)).collect();
        let Ok(dom) = domain::build_grid_domain::<f64>(&mask, nx, ny, 1.0 / 16.0) else {
            return Ok(());
        };
        let dist = domain::distance_field(&dom);
        let brute = brute_force_distance(&dom);
        prop_assert_eq!(dist.d.values(), &brute[..]);
    }
}

#[test]
fn square_inradius_exact() {
    let dom = domain::generate::<f64>(&Shape::Square { side: 1.0 }, 1.0 / 32.0).unwrap();
    assert_eq!(domain::inradius(&dom), 0.5);
    let lam = domain::lambda_infinity(&dom, 1.0).unwrap();
    assert!((lam - 2.0 / 3.0).abs() < 1e-12, "lambda {lam}");
}

#[test]
fn disk_lambda_infinity_near_half() {
    let dom = domain::generate::<f64>(&Shape::Disk { radius: 1.0 }, 1.0 / 64.0).unwrap();
    let lam = domain::lambda_infinity(&dom, 1.0).unwrap();
    assert!((lam - 0.5).abs() <= 0.02, "lambda {lam}");
}

#[test]
fn rectangle_inradius_and_ridge_line() {
    let h = 1.0 / 16.0;
    let dom = domain::generate::<f64>(&Shape::Rectangle { width: 2.0, height: 1.0 }, h).unwrap();
    assert_eq!(domain::inradius(&dom), 0.5);
    let ridge = domain::ridge_set_default(&dom);
    // the open horizontal segment y = 0.5, 0.5 < x < 1.5 lies on the ridge
    for v in dom.field_vertices() {
        let p = dom.vertex_pos(v);
        if (p[1] - 0.5).abs() < 1e-12 && p[0] > 0.5 + h && p[0] < 1.5 - h {
            let fi = dom.field_index(v).unwrap();
            assert!(ridge.contains(fi), "({}, {}) missing from ridge", p[0], p[1]);
        }
    }
}

#[test]
fn square_ridge_contains_center_and_diagonals() {
    let dom = domain::generate::<f64>(&Shape::Square { side: 1.0 }, 1.0 / 16.0).unwrap();
    let ridge = domain::ridge_set_default(&dom);
    let at = |x: f64, y: f64| {
        let ix = (x * 16.0).round() as usize;
        let iy = (y * 16.0).round() as usize;
        dom.field_index(dom.vertex_index(ix, iy)).unwrap()
    };
    assert!(ridge.contains(at(0.5, 0.5)));
    assert!(ridge.contains(at(0.25, 0.25)));
    assert!(ridge.contains(at(0.75, 0.25)));
    // a generic off-diagonal vertex is not on the ridge
    assert!(!ridge.contains(at(0.25, 0.5)));
}

#[test]
fn disk_ridge_contains_center() {
    let dom = domain::generate::<f64>(&Shape::Disk { radius: 1.0 }, 1.0 / 32.0).unwrap();
    let ridge = domain::ridge_set_default(&dom);
    let c = (dom.shape.0 - 1) / 2;
    let fi = dom.field_index(dom.vertex_index(c, c)).unwrap();
    assert!(ridge.contains(fi));
    // ridge members carry at least two realizing boundary points: certified
    // exhaustively inside ridge_set; spot-check the count is small vs domain
    assert!(ridge.members.len() < dom.num_inside() / 4);
}

#[test]
fn trace_square_vertical_to_center_ridge() {
    let h = 1.0 / 32.0;
    let dom = domain::generate::<f64>(&Shape::Square { side: 1.0 }, h).unwrap();
    let dist = domain::distance_field(&dom);
    let ridge = domain::ridge_set_default(&dom);
    let start = dom.vertex_index(16, (0.2 / h).round() as usize);
    let path = domain::trace_to_ridge(&dom, &dist, &ridge, start).unwrap();
    assert!((path.endpoint[0] - 0.5).abs() <= 1.5 * h, "endpoint {:?}", path.endpoint);
    assert!((path.endpoint[1] - 0.5).abs() <= 1.5 * h, "endpoint {:?}", path.endpoint);
    assert!(path.chord_deviation() <= h, "deviation {}", path.chord_deviation());
}

#[test]
fn trace_from_ridge_vertex_is_rejected() {
    let dom = domain::generate::<f64>(&Shape::Square { side: 1.0 }, 1.0 / 16.0).unwrap();
    let dist = domain::distance_field(&dom);
    let ridge = domain::ridge_set_default(&dom);
    let center = dom.vertex_index(8, 8);
    assert!(matches!(
        domain::trace_to_ridge(&dom, &dist, &ridge, center),
        Err(domain::TraceError::StartOnRidge)
    ));
}

#[test]
fn distance_field_zero_on_boundary_nonnegative_inside() {
    let dom = domain::generate::<f64>(&Shape::LShape { size: 2.0 }, 1.0 / 8.0).unwrap();
    let dist = domain::distance_field(&dom);
    assert!(dist.d.values().iter().all(|&d| d >= 0.0));
    for f in &dom.boundary_faces {
        for v in [f.v.0, f.v.1] {
            let fi = dom.field_index(v as usize).unwrap();
            assert_eq!(dist.d.values()[fi], 0.0);
        }
    }
    // largest ball sits against the reentrant corner: radius 2 - sqrt(2),
    // from maximizing min(a, sqrt(2)(1 - a)) over centers (a, a)
    let r = domain::inradius(&dom);
    assert!((r - (2.0 - 2.0_f64.sqrt())).abs() <= 1.0 / 8.0, "inradius {r}");
}
