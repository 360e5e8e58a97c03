//! Finite-difference residuals of the limit eigenvalue PDE
//! min{|grad u| - lambda u, -Delta_inf u} = 0 with Robin-type boundary branch
//! -min{|grad u| - beta u, -du/dnu} = 0.

use crate::domain::{ridge, Domain, RidgeSet};
use crate::fields::{self, FieldError, ScalarField};
use crate::scalar::Real;

/// Directional second-difference infinity Laplacian per inside vertex:
/// |grad u|^2 (u(x + h g) - 2 u(x) + u(x - h g)) / h^2 with g the unit
/// vertex gradient and bilinear sampling.
#[derive(Debug, Clone)]
pub struct InfinityLaplacian<R> {
    pub values: Vec<R>,
    /// Gradient too small to define a direction; value set to zero.
    pub small_gradient: Vec<bool>,
    /// A sample point fell outside the domain closure; value unreliable.
    pub incomplete: Vec<bool>,
}

/// Bilinear interpolation of a scalar field; None when a needed cell corner
/// lies outside the domain.
fn sample_scalar<R: Real>(dom: &Domain<R>, w: &ScalarField<R>, p: [R; 2]) -> Option<R> {
    let hf = dom.h;
    let fx = (p[0] / hf).to_f64()?;
    let fy = (p[1] / hf).to_f64()?;
    if fx < -1e-9 || fy < -1e-9 {
        return None;
    }
    let cx = (fx.floor().max(0.0) as usize).min(dom.shape.0.checked_sub(2)?);
    let cy = (fy.floor().max(0.0) as usize).min(dom.shape.1.checked_sub(2)?);
    let tx = fx - cx as f64;
    let ty = fy - cy as f64;
    if !(-1e-9..=1.0 + 1e-9).contains(&tx) || !(-1e-9..=1.0 + 1e-9).contains(&ty) {
        return None;
    }
    let tx = R::from_f64c(tx.clamp(0.0, 1.0));
    let ty = R::from_f64c(ty.clamp(0.0, 1.0));
    let corner = |ix: usize, iy: usize| -> Option<R> {
        dom.field_index(dom.vertex_index(ix, iy)).map(|f| w.values()[f])
    };
    let c00 = corner(cx, cy)?;
    let c10 = corner(cx + 1, cy)?;
    let c01 = corner(cx, cy + 1)?;
    let c11 = corner(cx + 1, cy + 1)?;
    let one = R::one();
    let bottom = c00 * (one - tx) + c10 * tx;
    let top = c01 * (one - tx) + c11 * tx;
    Some(bottom * (one - ty) + top * ty)
}

/// Vertex gradients of `u` (incident-triangle average of exact P1 gradients).
pub fn vertex_gradients<R: Real>(
    dom: &Domain<R>,
    u: &ScalarField<R>,
) -> Result<Vec<[R; 2]>, FieldError> {
    let tri = fields::gradient(dom, u)?;
    Ok(ridge::average_triangle_vectors(dom, &tri))
}

/// Per-vertex |grad u| as the average of incident-triangle gradient norms
/// (consistent with the energy discretization, and unlike the norm of the
/// averaged vector it does not collapse across the ridge).
pub fn vertex_gradient_norms<R: Real>(
    dom: &Domain<R>,
    u: &ScalarField<R>,
) -> Result<Vec<R>, FieldError> {
    let tri = fields::gradient(dom, u)?;
    let mut acc = vec![R::zero(); dom.num_inside()];
    let mut cnt = vec![0usize; dom.num_inside()];
    for (t, tr) in dom.cell_triangles.iter().enumerate() {
        let n = (tri[t][0] * tri[t][0] + tri[t][1] * tri[t][1]).sqrt();
        for &v in &tr.v {
            let f = dom.field_index(v as usize).expect("inside");
            acc[f] = acc[f] + n;
            cnt[f] += 1;
        }
    }
    for f in 0..acc.len() {
        if cnt[f] > 0 {
            acc[f] = acc[f] / R::from_usizec(cnt[f]);
        }
    }
    Ok(acc)
}

pub fn infinity_laplacian<R: Real>(
    dom: &Domain<R>,
    u: &ScalarField<R>,
) -> Result<InfinityLaplacian<R>, FieldError> {
    u.check(dom)?;
    let vg = vertex_gradients(dom, u)?;
    let norms = vertex_gradient_norms(dom, u)?;
    let h = dom.h;
    let eps = R::from_f64c(1e-10) * (R::one() + u.sup_abs());
    let mut values = vec![R::zero(); dom.num_inside()];
    let mut small = vec![false; dom.num_inside()];
    let mut incomplete = vec![false; dom.num_inside()];
    for (fi, v) in dom.field_vertices().enumerate() {
        let g = vg[fi];
        let dirn = (g[0] * g[0] + g[1] * g[1]).sqrt();
        if dirn <= eps {
            small[fi] = true;
            continue;
        }
        let dir = [g[0] / dirn, g[1] / dirn];
        let p = dom.vertex_pos(v);
        let fwd = sample_scalar(dom, u, [p[0] + h * dir[0], p[1] + h * dir[1]]);
        let back = sample_scalar(dom, u, [p[0] - h * dir[0], p[1] - h * dir[1]]);
        match (fwd, back) {
            (Some(a), Some(b)) => {
                let center = u.values()[fi];
                let second = (a - center - center + b) / (h * h);
                values[fi] = norms[fi] * norms[fi] * second;
            }
            _ => incomplete[fi] = true,
        }
    }
    Ok(InfinityLaplacian { values, small_gradient: small, incomplete })
}

/// Pointwise |grad u| - lambda u per inside vertex.
pub fn eikonal_residual<R: Real>(
    dom: &Domain<R>,
    u: &ScalarField<R>,
    lambda: R,
) -> Result<Vec<R>, FieldError> {
    let norms = vertex_gradient_norms(dom, u)?;
    Ok(norms
        .iter()
        .zip(u.values())
        .map(|(&n, &uv)| n - lambda * uv)
        .collect())
}

#[derive(Debug, Clone)]
pub struct ResidualReport<R> {
    /// min{|grad u| - lambda u, -Delta_inf u} per inside vertex (signed).
    pub interior: Vec<R>,
    /// Vertices excluded from the interior statistics: within two cells of
    /// the ridge, with an incomplete stencil, or on the boundary.
    pub masked: Vec<bool>,
    /// Sup and 95th percentile of |residual| over unmasked vertices.
    pub interior_sup: R,
    pub interior_q95: R,
    /// -min{|grad u| - beta u, -du/dnu} per boundary face (signed).
    pub boundary: Vec<R>,
    pub boundary_sup: R,
    pub boundary_q95: R,
}

fn quantile<R: Real>(sorted: &[R], q: f64) -> R {
    if sorted.is_empty() {
        return R::zero();
    }
    let idx = ((sorted.len() as f64 * q).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

/// Vertices of any boundary face, as field indices with the averaged outward
/// unit normal.
fn boundary_vertex_normals<R: Real>(dom: &Domain<R>) -> Vec<(usize, [R; 2])> {
    let mut acc: Vec<[R; 2]> = vec![[R::zero(); 2]; dom.num_inside()];
    let mut hit = vec![false; dom.num_inside()];
    for f in &dom.boundary_faces {
        for v in [f.v.0, f.v.1] {
            let fi = dom.field_index(v as usize).expect("boundary vertex inside");
            acc[fi][0] = acc[fi][0] + f.normal[0];
            acc[fi][1] = acc[fi][1] + f.normal[1];
            hit[fi] = true;
        }
    }
    let mut out = Vec::new();
    for fi in 0..acc.len() {
        if !hit[fi] {
            continue;
        }
        let n = acc[fi];
        let len = (n[0] * n[0] + n[1] * n[1]).sqrt();
        if len > R::zero() {
            out.push((fi, [n[0] / len, n[1] / len]));
        }
    }
    out
}

/// Grid-distance (in cells, Chebyshev) dilation of the ridge by `cells`.
fn dilate_ridge<R: Real>(dom: &Domain<R>, ridge: &RidgeSet<R>, cells: i64) -> Vec<bool> {
    let (nx, ny) = dom.shape;
    let mut out = vec![false; dom.num_inside()];
    for &m in &ridge.members {
        let (ix, iy) = dom.vertex_xy(dom.field_vertex(m as usize));
        for dy in -cells..=cells {
            for dx in -cells..=cells {
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
    out
}

/// Residuals of the limit PDE for a positive eigenfunction candidate. The
/// ridge of the candidate domain (dilated by two cells), incomplete stencils,
/// and boundary vertices are excluded from the interior statistics; the
/// signed residual is still reported everywhere else.
pub fn limit_pde_residual<R: Real>(
    dom: &Domain<R>,
    u: &ScalarField<R>,
    lambda: R,
    beta: R,
) -> Result<ResidualReport<R>, FieldError> {
    u.check(dom)?;
    if u.values().iter().any(|&x| x <= R::zero()) {
        return Err(FieldError::NonpositiveField);
    }
    let ridge = crate::domain::ridge_set_default(dom);
    let inf_lap = infinity_laplacian(dom, u)?;
    let eik = eikonal_residual(dom, u, lambda)?;
    let mut masked = dilate_ridge(dom, &ridge, 2);

    let bnorms = boundary_vertex_normals(dom);
    let mut is_boundary = vec![false; dom.num_inside()];
    for &(fi, _) in &bnorms {
        is_boundary[fi] = true;
    }

    let mut interior = vec![R::zero(); dom.num_inside()];
    for fi in 0..dom.num_inside() {
        if inf_lap.incomplete[fi] || is_boundary[fi] {
            masked[fi] = true;
        }
        if is_boundary[fi] {
            continue;
        }
        // small-gradient vertices keep Delta_inf u = 0
        interior[fi] = eik[fi].min(-inf_lap.values[fi]);
    }
    let mut vals: Vec<R> = interior
        .iter()
        .zip(&masked)
        .filter(|(_, &m)| !m)
        .map(|(&x, _)| x.abs())
        .collect();
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let interior_sup = vals.last().copied().unwrap_or_else(R::zero);
    let interior_q95 = quantile(&vals, 0.95);

    let norms = vertex_gradient_norms(dom, u)?;
    let h = dom.h;
    let half = R::from_f64c(0.5);
    let mut boundary = Vec::with_capacity(dom.boundary_faces.len());
    for face in &dom.boundary_faces {
        let fa = dom.field_index(face.v.0 as usize).expect("boundary vertex inside");
        let fb = dom.field_index(face.v.1 as usize).expect("boundary vertex inside");
        let u_mid = half * (u.values()[fa] + u.values()[fb]);
        let gn = half * (norms[fa] + norms[fb]);
        let pa = dom.vertex_pos(face.v.0 as usize);
        let pb = dom.vertex_pos(face.v.1 as usize);
        let mid = [half * (pa[0] + pb[0]), half * (pa[1] + pb[1])];
        let nu = face.normal;
        // one-sided inward difference for du/dnu from the face midpoint
        let inward = sample_scalar(dom, u, [mid[0] - h * nu[0], mid[1] - h * nu[1]]);
        let dnu = match inward {
            Some(w) => (u_mid - w) / h,
            None => gn,
        };
        let robin = gn - beta * u_mid;
        boundary.push(-robin.min(-dnu));
    }
    let mut bvals: Vec<R> = boundary.iter().map(|x| x.abs()).collect();
    bvals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let boundary_sup = bvals.last().copied().unwrap_or_else(R::zero);
    let boundary_q95 = quantile(&bvals, 0.95);

    Ok(ResidualReport {
        interior,
        masked,
        interior_sup,
        interior_q95,
        boundary,
        boundary_sup,
        boundary_q95,
    })
}
