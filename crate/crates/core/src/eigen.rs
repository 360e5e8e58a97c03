//! First Robin p-Laplacian eigenpair by Rayleigh-quotient minimization, and
//! p-sweeps tracking lambda_p^(1/p) against the geometric limit value.

use crate::domain::{self, Domain, TriKind};
use crate::fields::{self, FieldError, RobinParams, ScalarField};
use crate::scalar::Real;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions<R> {
    /// Relative projected-gradient tolerance.
    pub tol: R,
    pub max_iter: usize,
}

impl<R: Real> Default for SolveOptions<R> {
    fn default() -> Self {
        Self { tol: R::from_f64c(1e-6), max_iter: 20_000 }
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult<R> {
    pub p: R,
    pub lambda_p: R,
    /// lambda_p^(1/p), taken in log space.
    pub lambda_root: R,
    /// Nonnegative eigenfunction with unit volume p-norm.
    pub u: ScalarField<R>,
    pub iterations: usize,
    pub grad_norm: R,
    pub converged: bool,
}

#[derive(Debug, Error)]
pub enum EigenError<R: Real> {
    #[error("eigen solve did not converge in {} iterations (grad norm {})", .0.iterations, .0.grad_norm)]
    NotConverged(Box<EigenResult<R>>),
    #[error("line search stalled at iteration {}", .0.iterations)]
    LineSearchStall(Box<EigenResult<R>>),
    #[error(transparent)]
    Field(#[from] FieldError),
}

impl<R: Real> EigenError<R> {
    /// The partial result carried by solver failures.
    pub fn partial(self) -> Option<EigenResult<R>> {
        match self {
            EigenError::NotConverged(r) | EigenError::LineSearchStall(r) => Some(*r),
            EigenError::Field(_) => None,
        }
    }
}

/// Raw numerator/denominator of the quotient plus its gradient with respect
/// to the vertex values. Fields are kept normalized by the caller so the raw
/// powers stay in range.
struct Assembly<R> {
    energy: R,
    volume: R,
    grad_q: Vec<R>,
}

fn assemble<R: Real>(dom: &Domain<R>, rp: &RobinParams<R>, w: &ScalarField<R>) -> Assembly<R> {
    let p = rp.p.expect("finite p");
    let area = dom.triangle_area();
    let inv_h = R::one() / dom.h;
    let half = R::from_f64c(0.5);
    let third = R::one() / R::from_f64c(3.0);
    let vals = w.values();
    let fidx = |v: u32| dom.field_index(v as usize).expect("inside");

    let mut energy = R::zero();
    let mut volume = R::zero();
    let mut de = vec![R::zero(); vals.len()];
    let mut dn = vec![R::zero(); vals.len()];

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
            energy = energy + area * pow * gn * gn;
            let common = area * p * pow;
            for k in 0..3 {
                de[i[k]] = de[i[k]] + common * (g[0] * basis[k][0] + g[1] * basis[k][1]);
            }
        }
        let c = (w0 + w1 + w2) * third;
        if c != R::zero() {
            let pow = c.abs().powf(p - R::from_f64c(2.0));
            volume = volume + area * pow * c * c;
            let common = area * p * pow * c * third;
            for k in 0..3 {
                dn[i[k]] = dn[i[k]] + common;
            }
        }
    }

    let beta_p = rp.beta.powf(p);
    for f in &dom.boundary_faces {
        let (a, b) = (fidx(f.v.0), fidx(f.v.1));
        let mid = (vals[a] + vals[b]) * half;
        if mid != R::zero() {
            let pow = mid.abs().powf(p - R::from_f64c(2.0));
            energy = energy + beta_p * f.measure * pow * mid * mid;
            let common = beta_p * f.measure * p * pow * mid * half;
            de[a] = de[a] + common;
            de[b] = de[b] + common;
        }
    }

    let q = energy / volume;
    let grad_q: Vec<R> = de
        .iter()
        .zip(&dn)
        .map(|(&e, &n)| (e - q * n) / volume)
        .collect();
    Assembly { energy, volume, grad_q }
}

fn quotient_value<R: Real>(dom: &Domain<R>, rp: &RobinParams<R>, w: &ScalarField<R>) -> R {
    let p = rp.p.expect("finite p");
    let area = dom.triangle_area();
    let inv_h = R::one() / dom.h;
    let half = R::from_f64c(0.5);
    let third = R::one() / R::from_f64c(3.0);
    let vals = w.values();
    let fidx = |v: u32| dom.field_index(v as usize).expect("inside");
    let mut energy = R::zero();
    let mut volume = R::zero();
    for t in &dom.cell_triangles {
        let (w0, w1, w2) = (
            vals[fidx(t.v[0])],
            vals[fidx(t.v[1])],
            vals[fidx(t.v[2])],
        );
        let g = match t.kind {
            TriKind::Lower => [(w1 - w0) * inv_h, (w2 - w1) * inv_h],
            TriKind::Upper => [(w1 - w2) * inv_h, (w2 - w0) * inv_h],
        };
        let gn2 = g[0] * g[0] + g[1] * g[1];
        if gn2 > R::zero() {
            energy = energy + area * gn2.sqrt().powf(p);
        }
        let c = ((w0 + w1 + w2) * third).abs();
        if c > R::zero() {
            volume = volume + area * c.powf(p);
        }
    }
    let beta_p = rp.beta.powf(p);
    for f in &dom.boundary_faces {
        let mid = ((vals[fidx(f.v.0)] + vals[fidx(f.v.1)]) * half).abs();
        if mid > R::zero() {
            energy = energy + beta_p * f.measure * mid.powf(p);
        }
    }
    energy / volume
}

/// Gradient of the Rayleigh quotient at an arbitrary (not necessarily
/// normalized) field; exposed for finite-difference verification.
pub fn quotient_gradient<R: Real>(
    dom: &Domain<R>,
    rp: &RobinParams<R>,
    w: &ScalarField<R>,
) -> Result<Vec<R>, FieldError> {
    w.check(dom)?;
    rp.p_finite()?;
    Ok(assemble(dom, rp, w).grad_q)
}

fn normalize_p<R: Real>(dom: &Domain<R>, rp: &RobinParams<R>, w: &mut ScalarField<R>) {
    let terms = fields::log_energy_terms(dom, w, rp).expect("finite p");
    let log_vol = terms.log_vol.expect("nonzero field");
    let p = rp.p.expect("finite p");
    let scale = (-log_vol / p).exp();
    for v in w.values_mut() {
        *v = *v * scale;
    }
}

/// Minimizes the Rayleigh quotient by projected gradient descent with a
/// Barzilai-Borwein trial step, Armijo backtracking, and the absolute-value
/// nonnegativity projection. Initial guess defaults to 1/beta + d.
pub fn solve_eigen<R: Real>(
    dom: &Domain<R>,
    rp: &RobinParams<R>,
    opts: &SolveOptions<R>,
    warm_start: Option<&ScalarField<R>>,
) -> Result<EigenResult<R>, EigenError<R>> {
    let p = rp.p_finite()?;
    let mut w = match warm_start {
        Some(w0) => {
            w0.check(dom)?;
            w0.map(|x| x.abs())
        }
        None => {
            let dist = domain::distance_field(dom);
            let inv_beta = R::one() / rp.beta;
            dist.d.map(|d| inv_beta + d)
        }
    };
    normalize_p(dom, rp, &mut w);

    let c_armijo = R::from_f64c(1e-4);
    let mut prev_w: Option<Vec<R>> = None;
    let mut prev_g: Option<Vec<R>> = None;
    let mut q;
    let mut grad_norm = R::infinity();
    let mut iterations = 0usize;

    for it in 0..opts.max_iter {
        iterations = it;
        let asm = assemble(dom, rp, &w);
        q = asm.energy / asm.volume;
        let g = asm.grad_q;
        let g2: R = g.iter().map(|&x| x * x).sum();
        grad_norm = g2.sqrt();
        // the gradient's natural magnitude is p*q (q itself shrinks like
        // Lambda^p at large p), so the tolerance must scale with it
        if grad_norm <= opts.tol * p * q {
            return Ok(finish(dom, rp, w, p, it, grad_norm, true));
        }

        // Barzilai-Borwein trial step from the previous iterate
        let mut t = match (&prev_w, &prev_g) {
            (Some(pw), Some(pg)) => {
                let mut sy = R::zero();
                let mut yy = R::zero();
                for i in 0..g.len() {
                    let s = w.values()[i] - pw[i];
                    let y = g[i] - pg[i];
                    sy = sy + s * y;
                    yy = yy + y * y;
                }
                if yy > R::zero() && sy.abs() > R::zero() {
                    (sy / yy).abs()
                } else {
                    R::one() / (R::one() + q.abs())
                }
            }
            _ => R::one() / (R::one() + q.abs()),
        };

        prev_w = Some(w.values().to_vec());
        prev_g = Some(g.clone());

        let mut accepted = false;
        for _ in 0..60 {
            let mut trial = ScalarField::new(
                w.values()
                    .iter()
                    .zip(&g)
                    .map(|(&x, &gi)| (x - t * gi).abs())
                    .collect(),
            );
            normalize_p(dom, rp, &mut trial);
            let q_trial = quotient_value(dom, rp, &trial);
            if q_trial <= q - c_armijo * t * g2 {
                debug_assert!(q_trial <= q * (R::one() + R::from_f64c(1e-12)));
                w = trial;
                accepted = true;
                break;
            }
            t = t * R::from_f64c(0.5);
        }
        if !accepted {
            // the Armijo decrease hits the floating-point floor of the
            // quotient just above the gradient tolerance; accept a near-miss
            let near = grad_norm <= opts.tol.sqrt() * p * q;
            let res = finish(dom, rp, w, p, it, grad_norm, near);
            return if near {
                Ok(res)
            } else {
                Err(EigenError::LineSearchStall(Box::new(res)))
            };
        }
    }
    let res = finish(dom, rp, w, p, iterations, grad_norm, false);
    Err(EigenError::NotConverged(Box::new(res)))
}

fn finish<R: Real>(
    dom: &Domain<R>,
    rp: &RobinParams<R>,
    mut w: ScalarField<R>,
    p: R,
    iterations: usize,
    grad_norm: R,
    converged: bool,
) -> EigenResult<R> {
    for v in w.values_mut() {
        *v = v.abs();
    }
    normalize_p(dom, rp, &mut w);
    let log_q = fields::log_rayleigh_quotient(dom, &w, rp).expect("nonzero field");
    EigenResult {
        p,
        lambda_p: log_q.exp(),
        lambda_root: (log_q / p).exp(),
        u: w,
        iterations,
        grad_norm,
        converged,
    }
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct SweepRow<R> {
    pub p: R,
    pub lambda_p: R,
    pub lambda_root: R,
    /// lambda_root - lambda_inf_geometric.
    pub gap: R,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone)]
pub struct SweepTable<R> {
    pub beta: R,
    pub rows: Vec<SweepRow<R>>,
    pub lambda_inf_geometric: R,
}

impl<R: Real> SweepTable<R> {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,lambda_p,lambda_root,gap,iters,converged\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.p, r.lambda_p, r.lambda_root, r.gap, r.iterations, r.converged
            ));
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }
}

/// Runs solve_eigen over an increasing p list with warm-start continuation.
/// Per-p failures keep their partial result and annotate the row.
pub fn eigen_sweep<R: Real>(
    dom: &Domain<R>,
    beta: R,
    p_list: &[R],
    opts: &SolveOptions<R>,
) -> Result<SweepTable<R>, EigenError<R>> {
    assert!(p_list.windows(2).all(|w| w[0] < w[1]), "p_list must be increasing");
    let lambda_inf = domain::lambda_infinity(dom, beta).expect("beta > 0");
    let mut rows = Vec::with_capacity(p_list.len());
    let mut warm: Option<ScalarField<R>> = None;
    for &p in p_list {
        let rp = RobinParams::finite(beta, p)?;
        let res = match solve_eigen(dom, &rp, opts, warm.as_ref()) {
            Ok(res) => res,
            Err(e) => e.partial().ok_or_else(|| {
                EigenError::Field(FieldError::BadExponent(p.to_f64().unwrap_or(f64::NAN)))
            })?,
        };
        warm = Some(res.u.clone());
        rows.push(SweepRow {
            p,
            lambda_p: res.lambda_p,
            lambda_root: res.lambda_root,
            gap: res.lambda_root - lambda_inf,
            iterations: res.iterations,
            converged: res.converged,
        });
    }
    Ok(SweepTable { beta, rows, lambda_inf_geometric: lambda_inf })
}

/// Rescales a large-p eigenfunction to the max u = 1/lambda_root
/// normalization and reports the worst violation of u <= 1/beta + d.
#[derive(Debug, Clone)]
pub struct LimitCheckReport<R> {
    /// max over vertices of u_rescaled - (1/beta + d); <= 0 means the
    /// envelope bound holds with slack.
    pub violation: R,
    pub lambda_root: R,
}

pub fn eigenfunction_limit_check<R: Real>(
    res: &EigenResult<R>,
    dom: &Domain<R>,
    beta: R,
) -> LimitCheckReport<R> {
    let dist = domain::distance_field(dom);
    let envelope = dist.d.map(|d| R::one() / beta + d);
    let umax = res.u.sup_abs();
    let scale = (R::one() / res.lambda_root) / umax;
    let scaled = res.u.map(|x| x * scale);
    LimitCheckReport { violation: scaled.max_diff(&envelope), lambda_root: res.lambda_root }
}

/// Envelope violation of an explicitly rescaled field (used when the caller
/// supplies its own normalization).
pub fn envelope_violation<R: Real>(dom: &Domain<R>, u: &ScalarField<R>, beta: R) -> R {
    let dist = domain::distance_field(dom);
    let envelope = dist.d.map(|d| R::one() / beta + d);
    u.max_diff(&envelope)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{generate, Shape};

    #[test]
    fn single_entry_sweep_matches_solve() {
        let dom = generate::<f64>(&Shape::Square { side: 1.0 }, 1.0 / 16.0).unwrap();
        let opts = SolveOptions::default();
        let rp = RobinParams::finite(1.0, 2.0).unwrap();
        let res = solve_eigen(&dom, &rp, &opts, None).unwrap();
        let table = eigen_sweep(&dom, 1.0, &[2.0], &opts).unwrap();
        assert_eq!(table.rows.len(), 1);
        assert!((table.rows[0].lambda_p - res.lambda_p).abs() < 1e-10);
        assert!((table.lambda_inf_geometric - 2.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn minimizer_beats_distance_candidate() {
        let dom = generate::<f64>(&Shape::Square { side: 1.0 }, 1.0 / 16.0).unwrap();
        let rp = RobinParams::finite(1.0, 2.0).unwrap();
        let dist = crate::domain::distance_field(&dom);
        let cand = dist.d.map(|d| 1.0 + d);
        let q_cand = fields::rayleigh_quotient(&dom, &cand, &rp).unwrap();
        let res = solve_eigen(&dom, &rp, &SolveOptions::default(), None).unwrap();
        assert!(res.lambda_p <= q_cand + 1e-12, "{} vs {}", res.lambda_p, q_cand);
        assert!(res.u.values().iter().all(|&x| x >= 0.0));
        // unit norm and consistent quotient
        let q = fields::rayleigh_quotient(&dom, &res.u, &rp).unwrap();
        assert!((q - res.lambda_p).abs() <= 1e-12 * q);
    }

    #[test]
    fn limit_check_on_envelope_itself() {
        let dom = generate::<f64>(&Shape::Disk { radius: 1.0 }, 1.0 / 16.0).unwrap();
        let dist = crate::domain::distance_field(&dom);
        let envelope = dist.d.map(|d| 1.0 + d);
        assert_eq!(envelope_violation(&dom, &envelope, 1.0), 0.0);
        let shrunk = envelope.map(|x| 0.5 * x);
        assert!(envelope_violation(&dom, &shrunk, 1.0) < 0.0);
    }
}
