//! Robin p-Poisson solves, closed-form radial oracles, the geometric limit
//! solution, discrete infinity-harmonic extension, and the ridge-support
//! uniqueness certificate.

use crate::domain::{self, Domain, RidgeSet, TriKind};
use crate::fields::{FieldError, RobinParams, ScalarField};
use crate::scalar::Real;
use thiserror::Error;

#[derive(Debug, Clone, Copy)]
pub struct PoissonOptions<R> {
    /// Residual tolerance; convergence at sup |grad J| <= tol * (1 + sup|f|).
    pub tol: R,
    pub max_iter: usize,
    /// Warm-start through doubling exponents from p = 2.
    pub continuation: bool,
}

impl<R: Real> Default for PoissonOptions<R> {
    fn default() -> Self {
        Self { tol: R::from_f64c(1e-8), max_iter: 20_000, continuation: true }
    }
}

#[derive(Debug, Clone)]
pub struct PoissonResult<R> {
    pub p: R,
    pub v: ScalarField<R>,
    pub j_value: R,
    /// Sup norm of the assembled weak-form residual (the gradient of J_p).
    pub residual_norm: R,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Error)]
pub enum PoissonError<R: Real> {
    #[error("p-Poisson solve did not converge in {} iterations (residual {})", .0.iterations, .0.residual_norm)]
    NotConverged(Box<PoissonResult<R>>),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error("invalid parameter: {0}")]
    BadParams(String),
    #[error("witness construction failed: extension violates feasibility by {0}")]
    WitnessConstructionFailed(f64),
    #[error("free region is disconnected from the fixed set")]
    Disconnected,
}

impl<R: Real> PoissonError<R> {
    pub fn partial(self) -> Option<PoissonResult<R>> {
        match self {
            PoissonError::NotConverged(r) => Some(*r),
            _ => None,
        }
    }
}

/// J_p value and gradient at a field.
fn j_and_grad<R: Real>(
    dom: &Domain<R>,
    f: &ScalarField<R>,
    rp: &RobinParams<R>,
    w: &ScalarField<R>,
) -> (R, Vec<R>) {
    let p = rp.p.expect("finite p");
    let area = dom.triangle_area();
    let inv_h = R::one() / dom.h;
    let half = R::from_f64c(0.5);
    let third = R::one() / R::from_f64c(3.0);
    let vals = w.values();
    let fvals = f.values();
    let fidx = |v: u32| dom.field_index(v as usize).expect("inside");

    let mut j_grad_term = R::zero();
    let mut j_load = R::zero();
    let mut grad = vec![R::zero(); vals.len()];

    for t in &dom.cell_triangles {
        let i = [fidx(t.v[0]), fidx(t.v[1]), fidx(t.v[2])];
        let (w0, w1, w2) = (vals[i[0]], vals[i[1]], vals[i[2]]);
        let g = match t.kind {
            TriKind::Lower => [(w1 - w0) * inv_h, (w2 - w1) * inv_h],
            TriKind::Upper => [(w1 - w2) * inv_h, (w2 - w0) * inv_h],
        };
        let basis: [[R; 2]; 3] = match t.kind {
            TriKind::Lower => [[-inv_h, R::zero()], [inv_h, -inv_h], [R::zero(), inv_h]],
            TriKind::Upper => [[R::zero(), -inv_h], [inv_h, R::zero()], [-inv_h, inv_h]],
        };
        let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
        if gn > R::zero() {
            let pow = gn.powf(p - R::from_f64c(2.0));
            j_grad_term = j_grad_term + area * pow * gn * gn;
            for k in 0..3 {
                grad[i[k]] = grad[i[k]] + area * pow * (g[0] * basis[k][0] + g[1] * basis[k][1]);
            }
        }
        let fc = (fvals[i[0]] + fvals[i[1]] + fvals[i[2]]) * third;
        let wc = (w0 + w1 + w2) * third;
        j_load = j_load + area * fc * wc;
        let common = area * fc * third;
        for k in 0..3 {
            grad[i[k]] = grad[i[k]] - common;
        }
    }

    let beta_p = rp.beta.powf(p);
    let mut j_bdry = R::zero();
    for face in &dom.boundary_faces {
        let (a, b) = (fidx(face.v.0), fidx(face.v.1));
        let mid = (vals[a] + vals[b]) * half;
        if mid != R::zero() {
            let pow = mid.abs().powf(p - R::from_f64c(2.0));
            j_bdry = j_bdry + beta_p * face.measure * pow * mid * mid;
            let common = beta_p * face.measure * pow * mid * half;
            grad[a] = grad[a] + common;
            grad[b] = grad[b] + common;
        }
    }

    let j = (j_grad_term + j_bdry) / p - j_load;
    (j, grad)
}

/// Pairs the assembled J_p gradient with a test field: the discrete weak-form
/// residual functional evaluated at `phi`.
pub fn weak_residual<R: Real>(
    dom: &Domain<R>,
    f: &ScalarField<R>,
    rp: &RobinParams<R>,
    v: &ScalarField<R>,
    phi: &ScalarField<R>,
) -> Result<R, FieldError> {
    v.check(dom)?;
    phi.check(dom)?;
    f.check(dom)?;
    let (_, g) = j_and_grad(dom, f, rp, v);
    Ok(g.iter().zip(phi.values()).map(|(&a, &b)| a * b).sum())
}

/// Gradient of J_p; exposed for finite-difference verification.
pub fn j_gradient<R: Real>(
    dom: &Domain<R>,
    f: &ScalarField<R>,
    rp: &RobinParams<R>,
    w: &ScalarField<R>,
) -> Result<Vec<R>, FieldError> {
    w.check(dom)?;
    f.check(dom)?;
    rp.p_finite()?;
    Ok(j_and_grad(dom, f, rp, w).1)
}

pub fn j_value<R: Real>(
    dom: &Domain<R>,
    f: &ScalarField<R>,
    rp: &RobinParams<R>,
    w: &ScalarField<R>,
) -> Result<R, FieldError> {
    w.check(dom)?;
    f.check(dom)?;
    rp.p_finite()?;
    Ok(j_and_grad(dom, f, rp, w).0)
}

fn ncg_minimize<R: Real>(
    dom: &Domain<R>,
    f: &ScalarField<R>,
    rp: &RobinParams<R>,
    mut w: ScalarField<R>,
    tol_abs: R,
    max_iter: usize,
) -> (ScalarField<R>, R, usize, bool) {
    let (mut j, mut g) = j_and_grad(dom, f, rp, &w);
    let mut dir: Vec<R> = g.iter().map(|&x| -x).collect();
    let mut g2: R = g.iter().map(|&x| x * x).sum();
    let c_armijo = R::from_f64c(1e-4);
    let mut t_prev = R::one();
    let mut iterations = 0usize;
    for it in 0..max_iter {
        iterations = it;
        let sup = g.iter().fold(R::zero(), |m, &x| m.max(x.abs()));
        if sup <= tol_abs {
            return (w, sup, it, true);
        }
        // directional slope; restart on non-descent directions
        let mut slope: R = g.iter().zip(&dir).map(|(&a, &b)| a * b).sum();
        if slope >= R::zero() {
            dir = g.iter().map(|&x| -x).collect();
            slope = -g2;
        }
        let mut t = (t_prev * R::from_f64c(2.0)).min(R::from_f64c(1e6));
        let mut accepted = false;
        for _ in 0..80 {
            let trial = ScalarField::new(
                w.values().iter().zip(&dir).map(|(&x, &d)| x + t * d).collect(),
            );
            let (j_trial, g_trial) = j_and_grad(dom, f, rp, &trial);
            if j_trial <= j + c_armijo * t * slope {
                let g2_new: R = g_trial.iter().map(|&x| x * x).sum();
                // Polak-Ribiere+
                let mut gy: R = R::zero();
                for i in 0..g.len() {
                    gy = gy + g_trial[i] * (g_trial[i] - g[i]);
                }
                let betak = (gy / g2).max(R::zero());
                for i in 0..dir.len() {
                    dir[i] = -g_trial[i] + betak * dir[i];
                }
                w = trial;
                j = j_trial;
                g = g_trial;
                g2 = g2_new;
                t_prev = t;
                accepted = true;
                break;
            }
            t = t * R::from_f64c(0.5);
        }
        if !accepted {
            let sup = g.iter().fold(R::zero(), |m, &x| m.max(x.abs()));
            return (w, sup, it, sup <= tol_abs);
        }
    }
    let sup = g.iter().fold(R::zero(), |m, &x| m.max(x.abs()));
    (w, sup, iterations, sup <= tol_abs)
}

/// Minimizes J_p by nonlinear conjugate gradients with Armijo line search and
/// p-continuation warm start from p = 2.
pub fn solve_p_poisson<R: Real>(
    dom: &Domain<R>,
    f: &ScalarField<R>,
    rp: &RobinParams<R>,
    opts: &PoissonOptions<R>,
) -> Result<PoissonResult<R>, PoissonError<R>> {
    let p = rp.p_finite()?;
    f.check(dom)?;
    if f.values().iter().any(|&x| x < R::zero()) {
        return Err(PoissonError::BadParams("f must be nonnegative".into()));
    }
    let f_sup = f.sup_abs();
    let tol_abs = opts.tol * (R::one() + f_sup);

    let mut stages: Vec<R> = Vec::new();
    if opts.continuation && p > R::from_f64c(2.0) {
        let mut q = R::from_f64c(2.0);
        while q < p {
            stages.push(q);
            q = q * R::from_f64c(2.0);
        }
    }
    stages.push(p);

    let mut w = ScalarField::constant(dom, R::zero());
    let mut residual = R::infinity();
    let mut iterations = 0usize;
    let mut converged = false;
    for (si, &ps) in stages.iter().enumerate() {
        let rps = RobinParams::finite(rp.beta, ps)?;
        let last = si + 1 == stages.len();
        // intermediate stages only need a rough warm start
        let stage_tol = if last { tol_abs } else { tol_abs * R::from_f64c(100.0) };
        let (wn, res, its, ok) = ncg_minimize(dom, f, &rps, w, stage_tol, opts.max_iter);
        w = wn;
        if last {
            residual = res;
            iterations = its;
            converged = ok;
        }
    }

    let (j, _) = j_and_grad(dom, f, rp, &w);
    let result = PoissonResult { p, v: w, j_value: j, residual_norm: residual, iterations, converged };
    if converged {
        Ok(result)
    } else {
        Err(PoissonError::NotConverged(Box::new(result)))
    }
}

// ---------------------------------------------------------------------------
// Radial oracles
// ---------------------------------------------------------------------------

/// Closed-form radial solution on the unit ball with f = 1:
/// v_p(r) = -C r^(p/(p-1)) + (1/(n beta^p))^(1/(p-1)) + C,
/// C = (p-1)/(n^(1/(p-1)) p); for p = infinity, -r + 1/beta + 1.
pub fn radial_oracle_ball<R: Real>(
    n: usize,
    p: Option<R>,
    beta: R,
    r: R,
) -> Result<R, PoissonError<R>> {
    if r < R::zero() || r > R::one() {
        return Err(PoissonError::BadParams(format!("radius {r} outside [0,1]")));
    }
    if beta <= R::zero() {
        return Err(PoissonError::BadParams("beta must be positive".into()));
    }
    let nf = R::from_usizec(n);
    match p {
        None => Ok(-r + R::one() / beta + R::one()),
        Some(p) => {
            if !(p > R::one()) {
                return Err(PoissonError::BadParams(format!("p = {p} must exceed 1")));
            }
            let alpha = R::one() / (p - R::one());
            let c = (p - R::one()) / (nf.powf(alpha) * p);
            let e = (R::one() / (nf * beta.powf(p))).powf(alpha);
            Ok(-c * r.powf(p / (p - R::one())) + e + c)
        }
    }
}

/// Closed-form radial solution on the unit ball for f = indicator of the ball
/// of radius eps. Requires p > n for the finite-p branch; for p = infinity
/// returns 1/beta + (1 - r).
pub fn radial_oracle_annular<R: Real>(
    n: usize,
    p: Option<R>,
    beta: R,
    eps: R,
    r: R,
) -> Result<R, PoissonError<R>> {
    if !(eps > R::zero() && eps < R::one()) {
        return Err(PoissonError::BadParams(format!("eps = {eps} outside (0,1)")));
    }
    if r < R::zero() || r > R::one() {
        return Err(PoissonError::BadParams(format!("radius {r} outside [0,1]")));
    }
    if beta <= R::zero() {
        return Err(PoissonError::BadParams("beta must be positive".into()));
    }
    let nf = R::from_usizec(n);
    match p {
        None => Ok(R::one() / beta + (R::one() - r)),
        Some(p) => {
            if !(p > nf) {
                return Err(PoissonError::BadParams(format!("p = {p} must exceed n = {n}")));
            }
            let alpha = R::one() / (p - R::one());
            let na = nf.powf(alpha);
            let c = (p - R::one()) / (na * p);
            let d = eps.powf(nf * alpha) * (p - R::one()) / (na * (p - nf));
            let e = eps.powf(nf * alpha) / (nf * beta.powf(p)).powf(alpha);
            let outer_exp = (p - nf) / (p - R::one());
            if r <= eps {
                Ok(c * (eps.powf(p / (p - R::one())) - r.powf(p / (p - R::one())))
                    + d * (R::one() - eps.powf(outer_exp))
                    + e)
            } else {
                Ok(d * (R::one() - r.powf(outer_exp)) + e)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Limit problem
// ---------------------------------------------------------------------------

/// The pointwise-maximal feasible function 1/beta + d for the limit
/// functional's gradient and boundary constraints.
pub fn limit_maximal_solution<R: Real>(dom: &Domain<R>, beta: R) -> ScalarField<R> {
    assert!(beta > R::zero());
    let dist = domain::distance_field(dom);
    dist.d.map(|d| R::one() / beta + d)
}

/// J_infinity(phi) = -integral of f phi, centroid quadrature.
pub fn j_infinity<R: Real>(
    dom: &Domain<R>,
    f: &ScalarField<R>,
    phi: &ScalarField<R>,
) -> Result<R, FieldError> {
    f.check(dom)?;
    phi.check(dom)?;
    let area = dom.triangle_area();
    let third = R::one() / R::from_f64c(3.0);
    let fidx = |v: u32| dom.field_index(v as usize).expect("inside");
    let mut acc = R::zero();
    for t in &dom.cell_triangles {
        let i = [fidx(t.v[0]), fidx(t.v[1]), fidx(t.v[2])];
        let fc = (f.values()[i[0]] + f.values()[i[1]] + f.values()[i[2]]) * third;
        let pc = (phi.values()[i[0]] + phi.values()[i[1]] + phi.values()[i[2]]) * third;
        acc = acc + area * fc * pc;
    }
    Ok(-acc)
}

/// Max violation of the upper envelope v <= 1/beta + d.
pub fn upper_envelope_check<R: Real>(dom: &Domain<R>, v: &ScalarField<R>, beta: R) -> R {
    let env = limit_maximal_solution(dom, beta);
    v.max_diff(&env)
}

// ---------------------------------------------------------------------------
// Discrete infinity-harmonic extension
// ---------------------------------------------------------------------------

/// Discrete infinity-harmonic extension: Jacobi iteration of the midpoint
/// scheme u <- (max_N u + min_N u)/2 over the 8-neighbour stencil on free
/// vertices. Jacobi keeps the result independent of vertex ordering.
pub fn amle_extend<R: Real>(
    dom: &Domain<R>,
    fixed: &[Option<R>],
) -> Result<ScalarField<R>, PoissonError<R>> {
    assert_eq!(fixed.len(), dom.num_inside());
    let n_fixed = fixed.iter().filter(|x| x.is_some()).count();
    if n_fixed == 0 {
        return Err(PoissonError::BadParams("fixed set is empty".into()));
    }
    let (nx, ny) = dom.shape;
    let mut nbrs: Vec<Vec<u32>> = vec![Vec::new(); dom.num_inside()];
    for (fi, v) in dom.field_vertices().enumerate() {
        let (ix, iy) = dom.vertex_xy(v);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let jx = ix as i64 + dx;
                let jy = iy as i64 + dy;
                if jx < 0 || jy < 0 || jx >= nx as i64 || jy >= ny as i64 {
                    continue;
                }
                if let Some(fj) = dom.field_index(dom.vertex_index(jx as usize, jy as usize)) {
                    nbrs[fi].push(fj as u32);
                }
            }
        }
    }

    // connectivity of the free region to the fixed set
    let mut reach: Vec<bool> = fixed.iter().map(|x| x.is_some()).collect();
    let mut stack: Vec<usize> = (0..reach.len()).filter(|&i| reach[i]).collect();
    while let Some(i) = stack.pop() {
        for &j in &nbrs[i] {
            if !reach[j as usize] {
                reach[j as usize] = true;
                stack.push(j as usize);
            }
        }
    }
    if reach.iter().any(|&r| !r) {
        return Err(PoissonError::Disconnected);
    }

    let fixed_min = fixed.iter().flatten().fold(R::infinity(), |m, &x| m.min(x));
    let fixed_max = fixed.iter().flatten().fold(-R::infinity(), |m, &x| m.max(x));
    let mid = (fixed_min + fixed_max) * R::from_f64c(0.5);
    let mut u: Vec<R> = fixed.iter().map(|x| x.unwrap_or(mid)).collect();
    let mut next = u.clone();
    let tol = R::from_f64c(1e-10);
    let half = R::from_f64c(0.5);
    let max_sweeps = 4_000_000 / u.len().max(1) + 200_000;
    for _ in 0..max_sweeps {
        let mut change = R::zero();
        for fi in 0..u.len() {
            if fixed[fi].is_some() {
                continue;
            }
            let mut lo = R::infinity();
            let mut hi = -R::infinity();
            for &j in &nbrs[fi] {
                let x = u[j as usize];
                lo = lo.min(x);
                hi = hi.max(x);
            }
            let val = (lo + hi) * half;
            change = change.max((val - u[fi]).abs());
            next[fi] = val;
        }
        std::mem::swap(&mut u, &mut next);
        next.copy_from_slice(&u);
        if change <= tol {
            break;
        }
    }
    Ok(ScalarField::new(u))
}

// ---------------------------------------------------------------------------
// Uniqueness certificate
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct UniquenessReport<R: Real> {
    pub ridge: RidgeSet<R>,
    /// Support of f dilated by one cell, per field index.
    pub support: Vec<bool>,
    /// ridge subset of support.
    pub included: bool,
    /// Alternative minimizer with equal J_infinity value, when not included.
    pub witness: Option<ScalarField<R>>,
}

/// Checks the ridge-in-support uniqueness condition; when it fails, builds a
/// second minimizer by infinity-harmonic extension over the uncovered
/// component.
pub fn uniqueness_certificate<R: Real>(
    dom: &Domain<R>,
    f: &ScalarField<R>,
    beta: R,
) -> Result<UniquenessReport<R>, PoissonError<R>> {
    f.check(dom)?;
    if f.values().iter().all(|&x| x <= R::zero()) {
        return Err(PoissonError::BadParams("f must be positive somewhere".into()));
    }
    let ridge = domain::ridge_set_default(dom);
    let support = dilate_positive_set(dom, f);
    let uncovered: Vec<u32> = ridge
        .members
        .iter()
        .copied()
        .filter(|&m| !support[m as usize])
        .collect();
    if uncovered.is_empty() {
        return Ok(UniquenessReport { ridge, support, included: true, witness: None });
    }

    // component (8-neighbour) of the complement of the support containing the
    // lexicographically first uncovered ridge vertex
    let seed = *uncovered
        .iter()
        .min_by_key(|&&m| dom.field_vertex(m as usize))
        .expect("nonempty");
    let component = flood_complement(dom, &support, seed as usize);

    let vbar = limit_maximal_solution(dom, beta);
    let fixed: Vec<Option<R>> = (0..dom.num_inside())
        .map(|fi| (!component[fi]).then(|| vbar.values()[fi]))
        .collect();
    let witness = amle_extend(dom, &fixed)?;

    // feasibility within the discretization margin; the uniform 8-neighbour
    // stencil bounds slopes in the Chebyshev metric, so Euclidean triangle
    // gradients of the extension legitimately reach sqrt(2) at 45 degrees
    let (grad_sup, bdry_sup, _) = crate::fields::sup_norms(dom, &witness)?;
    let two_h = dom.h * R::from_f64c(2.0);
    let bdry_cap = R::one() / beta + two_h;
    let grad_cap = R::from_f64c(2.0).sqrt() + grad_slack(dom) + two_h;
    if grad_sup > grad_cap || bdry_sup > bdry_cap {
        return Err(PoissonError::WitnessConstructionFailed(
            (grad_sup - R::one()).to_f64().unwrap_or(f64::NAN),
        ));
    }
    Ok(UniquenessReport { ridge, support, included: false, witness: Some(witness) })
}

/// Interpolation overshoot allowance for |grad| of curved distance fields.
fn grad_slack<R: Real>(dom: &Domain<R>) -> R {
    dom.h * dom.h * R::from_f64c(64.0)
}

fn dilate_positive_set<R: Real>(dom: &Domain<R>, f: &ScalarField<R>) -> Vec<bool> {
    let (nx, ny) = dom.shape;
    let mut out = vec![false; dom.num_inside()];
    for (fi, v) in dom.field_vertices().enumerate() {
        if f.values()[fi] > R::zero() {
            let (ix, iy) = dom.vertex_xy(v);
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let jx = ix as i64 + dx;
                    let jy = iy as i64 + dy;
                    if jx < 0 || jy < 0 || jx >= nx as i64 || jy >= ny as i64 {
                        continue;
                    }
                    if let Some(fj) = dom.field_index(dom.vertex_index(jx as usize, jy as usize)) {
                        out[fj] = true;
                    }
                }
            }
        }
    }
    out
}

fn flood_complement<R: Real>(dom: &Domain<R>, support: &[bool], seed: usize) -> Vec<bool> {
    let (nx, ny) = dom.shape;
    let mut comp = vec![false; dom.num_inside()];
    comp[seed] = true;
    let mut stack = vec![seed];
    while let Some(fi) = stack.pop() {
        let v = dom.field_vertex(fi);
        let (ix, iy) = dom.vertex_xy(v);
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let jx = ix as i64 + dx;
                let jy = iy as i64 + dy;
                if jx < 0 || jy < 0 || jx >= nx as i64 || jy >= ny as i64 {
                    continue;
                }
                if let Some(fj) = dom.field_index(dom.vertex_index(jx as usize, jy as usize)) {
                    if !support[fj] && !comp[fj] {
                        comp[fj] = true;
                        stack.push(fj);
                    }
                }
            }
        }
    }
    comp
}
