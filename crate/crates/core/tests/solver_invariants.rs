//! Independent oracles for the solvers: closed-form radial solutions,
//! quadrature cross-checks, convexity and homogeneity properties, and the
//! viscosity-residual machinery.

use robin_lab::domain::{self, Shape};
use robin_lab::eigen::{self, SolveOptions};
use robin_lab::fields::{self, RobinParams, ScalarField};
use robin_lab::poisson::{self, PoissonOptions};
use robin_lab::viscosity;

fn disk_center(dom: &robin_lab::Domain64) -> [f64; 2] {
    let c = dom.h * ((dom.shape.0 - 1) as f64) * 0.5;
    [c, c]
}

fn radius_field(dom: &robin_lab::Domain64) -> ScalarField<f64> {
    let c = disk_center(dom);
    ScalarField::from_fn(dom, |p| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt())
}

// ---------------------------------------------------------------------------
// Closed-form radial oracles
// ---------------------------------------------------------------------------

#[test]
fn ball_oracle_exact_values() {
    // n=2, p=2, beta=1: v(r) = 3/4 - r^2/4
    let v0 = poisson::radial_oracle_ball::<f64>(2, Some(2.0), 1.0, 0.0).unwrap();
    let v1 = poisson::radial_oracle_ball::<f64>(2, Some(2.0), 1.0, 1.0).unwrap();
    assert!((v0 - 0.75).abs() < 1e-14, "v(0) = {v0}");
    assert!((v1 - 0.5).abs() < 1e-14, "v(1) = {v1}");
    let vh = poisson::radial_oracle_ball::<f64>(2, Some(2.0), 1.0, 0.5).unwrap();
    assert!((vh - (0.75 - 0.0625)).abs() < 1e-14);
    // p = infinity: -r + 1/beta + 1
    let vi = poisson::radial_oracle_ball::<f64>(2, None, 2.0, 0.3).unwrap();
    assert!((vi - 1.2).abs() < 1e-14, "v_inf(0.3) = {vi}");
    assert!(poisson::radial_oracle_ball(2, Some(2.0), 1.0, 1.5).is_err());
    assert!(poisson::radial_oracle_ball(2, Some(1.0), 1.0, 0.5).is_err());
    assert!(poisson::radial_oracle_ball(2, Some(2.0), -1.0, 0.5).is_err());
}

#[test]
fn annular_oracle_continuity_and_limits() {
    // the two branches agree at r = eps
    let inner = poisson::radial_oracle_annular::<f64>(2, Some(4.0), 1.0, 0.5, 0.5).unwrap();
    let eps_plus =
        poisson::radial_oracle_annular::<f64>(2, Some(4.0), 1.0, 0.5, 0.5 + 1e-13).unwrap();
    assert!((inner - eps_plus).abs() < 1e-12, "{inner} vs {eps_plus}");
    // p = infinity branch
    let vi = poisson::radial_oracle_annular::<f64>(2, None, 1.0, 0.5, 0.25).unwrap();
    assert!((vi - 1.75).abs() < 1e-14);
    // p must exceed the dimension for the finite branch
    assert!(poisson::radial_oracle_annular(2, Some(2.0), 1.0, 0.5, 0.3).is_err());
    assert!(poisson::radial_oracle_annular(3, Some(3.0), 1.0, 0.5, 0.3).is_err());
}

/// The radial ODE gives v(r) = v(1) + int_r^1 (F(s)/s)^(1/(p-1)) ds with
/// F(s) = min(s, eps)^2 / 2 and v(1) = (eps^2 / (2 beta^p))^(1/(p-1)) in two
/// dimensions. Integrating numerically cross-checks the closed form.
#[test]
fn annular_oracle_matches_radial_quadrature() {
    let (p, beta, eps) = (8.0_f64, 1.0_f64, 0.5_f64);
    let alpha = 1.0 / (p - 1.0);
    let flux = |s: f64| (s.min(eps).powi(2) / (2.0 * s)).powf(alpha);
    let v1 = (eps * eps / (2.0 * beta.powf(p))).powf(alpha);
    for &r in &[0.1, 0.25, 0.5, 0.7, 0.9] {
        let m = 200_000;
        let dr = (1.0 - r) / m as f64;
        // composite trapezoid
        let mut acc = 0.5 * (flux(r) + flux(1.0));
        for k in 1..m {
            acc += flux(r + k as f64 * dr);
        }
        let quad = v1 + acc * dr;
        let closed = poisson::radial_oracle_annular(2, Some(p), beta, eps, r).unwrap();
        assert!((quad - closed).abs() < 1e-8, "r={r}: {quad} vs {closed}");
    }
}

// ---------------------------------------------------------------------------
// Energy and quotient of the limit candidate 1/beta + d
// ---------------------------------------------------------------------------

#[test]
fn energy_of_linear_field_matches_hand_integrals() {
    // w = x on the unit square, beta = 1, p = 10:
    // grad term = 1, boundary term = 2 int_0^1 x^10 dx + 1 = 1 + 2/11
    let dom = domain::generate::<f64>(&Shape::Square { side: 1.0 }, 1.0 / 32.0).unwrap();
    let w = ScalarField::from_fn(&dom, |p| p[0]);
    let rp = RobinParams::finite(1.0, 10.0).unwrap();
    let (grad_term, bdry_term) = fields::p_energy(&dom, &w, &rp).unwrap();
    assert!((grad_term - 1.0).abs() < 1e-10, "grad term {grad_term}");
    let expect = 1.0 + 2.0 / 11.0;
    assert!(
        (bdry_term - expect).abs() < 0.01 * expect,
        "boundary term {bdry_term} vs {expect}"
    );
}

#[test]
fn rayleigh_quotient_of_linear_field_matches_hand_value() {
    // w = x, beta = 1, p = 4: (1 + 1.4) / (1/5) = 12
    let dom = domain::generate::<f64>(&Shape::Square { side: 1.0 }, 1.0 / 32.0).unwrap();
    let w = ScalarField::from_fn(&dom, |p| p[0]);
    let rp = RobinParams::finite(1.0, 4.0).unwrap();
    let q = fields::rayleigh_quotient(&dom, &w, &rp).unwrap();
    assert!((q - 12.0).abs() < 0.02 * 12.0, "quotient {q}");
}

#[test]
fn stabilized_p_norm_converges_to_weighted_max() {
    let samples = [0.3, 1.7, 0.9, 1.699, 0.2];
    let weights = [0.4, 0.25, 0.15, 0.1, 0.1];
    // the weighted p-mean tends to max|samples| as p grows
    let mut prev_err = f64::INFINITY;
    for &p in &[8.0, 16.0, 32.0, 64.0, 128.0] {
        let norm = fields::stabilized_p_norm(&samples, &weights, p).unwrap();
        let err: f64 = norm - 1.7;
        assert!(err < 0.0, "weighted mean must stay below the max");
        assert!(err.abs() < prev_err * 0.7, "p={p}: {} vs {prev_err}", err.abs());
        prev_err = err.abs();
    }
}

// ---------------------------------------------------------------------------
// p-Poisson solver properties
// ---------------------------------------------------------------------------

#[test]
fn zero_load_gives_zero_solution() {
    let dom = domain::generate::<f64>(&Shape::Square { side: 1.0 }, 1.0 / 16.0).unwrap();
    let f = ScalarField::constant(&dom, 0.0);
    let rp = RobinParams::finite(1.0, 3.0).unwrap();
    let res = poisson::solve_p_poisson(&dom, &f, &rp, &PoissonOptions::default()).unwrap();
    assert!(res.v.sup_abs() < 1e-12);
    assert!(res.j_value.abs() < 1e-14);
}

#[test]
fn continuation_and_direct_solve_agree() {
    // J_p is strictly convex, so both paths reach the same minimizer
    let dom = domain::generate::<f64>(&Shape::Disk { radius: 1.0 }, 1.0 / 16.0).unwrap();
    let f = ScalarField::constant(&dom, 1.0);
    let rp = RobinParams::finite(1.0, 4.0).unwrap();
    let base = PoissonOptions { tol: 1e-7, max_iter: 40_000, continuation: true };
    let with = poisson::solve_p_poisson(&dom, &f, &rp, &base).unwrap();
    let opts = PoissonOptions { continuation: false, ..base };
    let without = poisson::solve_p_poisson(&dom, &f, &rp, &opts).unwrap();
    let gap = with.v.sup_dist(&without.v);
    assert!(gap < 1e-3, "minimizer gap {gap}");
    assert!(
        (with.j_value - without.j_value).abs() < 1e-8,
        "objective gap {}",
        (with.j_value - without.j_value).abs()
    );
}

#[test]
fn weak_residual_vanishes_against_random_test_fields() {
    use rand::{Rng, SeedableRng};
    let dom = domain::generate::<f64>(&Shape::Square { side: 1.0 }, 1.0 / 16.0).unwrap();
    let f = ScalarField::constant(&dom, 1.0);
    let rp = RobinParams::finite(1.0, 3.0).unwrap();
    let res = poisson::solve_p_poisson(&dom, &f, &rp, &PoissonOptions::default()).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
    for _ in 0..20 {
        let phi = ScalarField::new(
            (0..dom.num_inside()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        );
        let r = poisson::weak_residual(&dom, &f, &rp, &res.v, &phi).unwrap();
        assert!(r.abs() < 1e-6, "weak residual {r}");
    }
}

#[test]
fn j_infinity_is_linear_and_matches_unit_square() {
    let dom = domain::generate::<f64>(&Shape::Square { side: 1.0 }, 1.0 / 16.0).unwrap();
    let f = ScalarField::constant(&dom, 1.0);
    let one = ScalarField::constant(&dom, 1.0);
    let j = poisson::j_infinity(&dom, &f, &one).unwrap();
    assert!((j + 1.0).abs() < 1e-12, "J_inf(1) = {j}");
    let phi = ScalarField::from_fn(&dom, |p| p[0] + 0.5 * p[1]);
    let psi = ScalarField::from_fn(&dom, |p| p[0] * p[1]);
    let combo = ScalarField::new(
        phi.values()
            .iter()
            .zip(psi.values())
            .map(|(&a, &b)| 2.0 * a - 3.0 * b)
            .collect(),
    );
    let ja = poisson::j_infinity(&dom, &f, &phi).unwrap();
    let jb = poisson::j_infinity(&dom, &f, &psi).unwrap();
    let jc = poisson::j_infinity(&dom, &f, &combo).unwrap();
    assert!((jc - (2.0 * ja - 3.0 * jb)).abs() < 1e-12);
}

#[test]
fn amle_reproduces_affine_data_and_obeys_max_principle() {
    let dom = domain::generate::<f64>(&Shape::Square { side: 1.0 }, 1.0 / 16.0).unwrap();
    let affine = ScalarField::from_fn(&dom, |p| 0.4 * p[0] - 0.9 * p[1] + 0.3);
    // fix only the outermost ring of vertices
    let fixed: Vec<Option<f64>> = dom
        .field_vertices()
        .enumerate()
        .map(|(fi, v)| {
            let (ix, iy) = dom.vertex_xy(v);
            let edge = ix == 0 || iy == 0 || ix == dom.shape.0 - 1 || iy == dom.shape.1 - 1;
            edge.then(|| affine.values()[fi])
        })
        .collect();
    let ext = poisson::amle_extend(&dom, &fixed).unwrap();
    // affine functions are infinity-harmonic, so the extension reproduces them
    assert!(ext.sup_dist(&affine) < 1e-7, "gap {}", ext.sup_dist(&affine));
    let lo = affine.values().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = affine.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    for &x in ext.values() {
        assert!(x >= lo - 1e-9 && x <= hi + 1e-9);
    }
}

// ---------------------------------------------------------------------------
// Eigen solver properties
// ---------------------------------------------------------------------------

#[test]
fn eigenvalue_invariant_under_warm_start_scaling() {
    let dom = domain::generate::<f64>(&Shape::Square { side: 1.0 }, 1.0 / 16.0).unwrap();
    let rp = RobinParams::finite(1.0, 4.0).unwrap();
    let opts = SolveOptions::default();
    let base = eigen::solve_eigen(&dom, &rp, &opts, None).unwrap();
    let scaled = base.u.map(|x| 1e3 * x);
    let again = eigen::solve_eigen(&dom, &rp, &opts, Some(&scaled)).unwrap();
    let rel = (again.lambda_p - base.lambda_p).abs() / base.lambda_p;
    assert!(rel < 1e-8, "lambda drift {rel}");
}

#[test]
fn minimizer_does_not_exceed_candidate_quotient() {
    let dom = domain::generate::<f64>(&Shape::Disk { radius: 1.0 }, 1.0 / 16.0).unwrap();
    let rp = RobinParams::finite(1.0, 8.0).unwrap();
    let res = eigen::solve_eigen(&dom, &rp, &SolveOptions::default(), None).unwrap();
    let cand = poisson::limit_maximal_solution(&dom, 1.0);
    let cand_q = fields::rayleigh_quotient(&dom, &cand, &rp).unwrap();
    assert!(
        res.lambda_p <= cand_q * (1.0 + 1e-10),
        "minimum {} above candidate {}",
        res.lambda_p,
        cand_q
    );
}

#[test]
fn robin_eigenvalue_respects_ball_lower_bound() {
    // the equal-area disk minimizes the first Robin eigenvalue
    let h = 1.0 / 32.0;
    let lshape = domain::generate::<f64>(&Shape::LShape { size: 2.0 }, h).unwrap();
    let r_eq = (3.0 / std::f64::consts::PI).sqrt();
    let disk = domain::generate::<f64>(&Shape::Disk { radius: r_eq }, h).unwrap();
    let opts = SolveOptions::default();
    for &p in &[2.0, 4.0] {
        let rp = RobinParams::finite(1.0, p).unwrap();
        let l_val = eigen::solve_eigen(&lshape, &rp, &opts, None).unwrap().lambda_p;
        let d_val = eigen::solve_eigen(&disk, &rp, &opts, None).unwrap().lambda_p;
        assert!(
            l_val >= d_val * 0.98,
            "p={p}: L-shape {l_val} below ball bound {d_val}"
        );
    }
}

// ---------------------------------------------------------------------------
// Viscosity residuals
// ---------------------------------------------------------------------------

#[test]
fn cone_infinity_laplacian_bounded_by_curvature() {
    // the one-cell bilinear second difference carries an interpolation error
    // of order |Laplacian u| on oblique directions, so the exact radial cone
    // 2 - r stays within the curvature envelope 1/r rather than O(h)
    let h = 1.0 / 32.0;
    let dom = domain::generate::<f64>(&Shape::Disk { radius: 1.0 }, h).unwrap();
    let c = disk_center(&dom);
    let u = ScalarField::from_fn(&dom, |p| {
        2.0 - ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt()
    });
    let il = viscosity::infinity_laplacian(&dom, &u).unwrap();
    let r = radius_field(&dom);
    for fi in 0..dom.num_inside() {
        if il.incomplete[fi] || il.small_gradient[fi] {
            continue;
        }
        let rad = r.values()[fi];
        if !(0.15..=0.85).contains(&rad) {
            continue;
        }
        assert!(
            il.values[fi].abs() <= 1.0 / rad + 10.0 * h,
            "Delta_inf = {} at r = {rad}",
            il.values[fi]
        );
    }
}

#[test]
fn candidate_eikonal_residual_near_one_off_ridge() {
    let h = 1.0 / 32.0;
    let dom = domain::generate::<f64>(&Shape::Disk { radius: 1.0 }, h).unwrap();
    let cand = poisson::limit_maximal_solution(&dom, 1.0);
    // lambda = 0 reduces the residual to |grad u|, which should be 1
    let res = viscosity::eikonal_residual(&dom, &cand, 0.0).unwrap();
    let r = radius_field(&dom);
    for fi in 0..dom.num_inside() {
        if r.values()[fi] < 5.0 * h || r.values()[fi] > 1.0 - 5.0 * h {
            continue;
        }
        assert!((res[fi] - 1.0).abs() < 5.0 * h, "|grad| = {} at fi {fi}", res[fi]);
    }
}

#[test]
fn square_candidate_residual_report_is_small() {
    // the square candidate 1 + d is exactly piecewise linear, so the masked
    // residual report should be clean at grid accuracy
    let h = 1.0 / 32.0;
    let dom = domain::generate::<f64>(&Shape::Square { side: 1.0 }, h).unwrap();
    let cand = poisson::limit_maximal_solution(&dom, 1.0);
    let lam = domain::lambda_infinity(&dom, 1.0).unwrap();
    let rep = viscosity::limit_pde_residual(&dom, &cand, lam, 1.0).unwrap();
    assert!(rep.interior_q95 <= 5.0 * h, "interior q95 {}", rep.interior_q95);
    assert!(rep.boundary_q95 <= 5.0 * h, "boundary q95 {}", rep.boundary_q95);
}

#[test]
fn eikonal_branch_detects_inflated_eigenvalue_at_incenter() {
    // the disk keeps |grad u| = 1 across the center (the cone gradients
    // rotate but their norms stay 1); the square would average in sqrt(2)
    // from diagonal-straddling triangles
    let dom = domain::generate::<f64>(&Shape::Disk { radius: 1.0 }, 1.0 / 32.0).unwrap();
    let cand = poisson::limit_maximal_solution(&dom, 1.0);
    let lam = domain::lambda_infinity(&dom, 1.0).unwrap();
    let c = (dom.shape.0 - 1) / 2;
    let fi = dom.field_index(dom.vertex_index(c, c)).unwrap();
    // at the incenter |grad u| = 1 and lam * u = 1, so the branch vanishes;
    // inflating lambda by 10% pushes it to -0.1
    let good = viscosity::eikonal_residual(&dom, &cand, lam).unwrap()[fi];
    let bad = viscosity::eikonal_residual(&dom, &cand, 1.1 * lam).unwrap()[fi];
    assert!(good.abs() < 0.04, "residual at incenter {good}");
    assert!(bad < -0.05, "inflated residual {bad}");
}

#[test]
fn residual_report_requires_positive_field() {
    let dom = domain::generate::<f64>(&Shape::Square { side: 1.0 }, 1.0 / 16.0).unwrap();
    let u = ScalarField::constant(&dom, 0.0);
    assert!(viscosity::limit_pde_residual(&dom, &u, 0.5, 1.0).is_err());
}
