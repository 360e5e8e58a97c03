//! Ridge (medial axis) detection and gradient-flow tracing of the distance
//! field.

use super::{DistanceResult, Domain};
use crate::scalar::Real;
use thiserror::Error;

/// Vertices whose distance to the boundary is realized by more than one
/// boundary sample.
#[derive(Debug, Clone)]
pub struct RidgeSet<R> {
    /// Inside-vertex (field) indices, sorted.
    pub members: Vec<u32>,
    /// Minimum separation between realizing samples, length units.
    pub tol: R,
}

impl<R> RidgeSet<R> {
    pub fn contains(&self, field_index: usize) -> bool {
        self.members.binary_search(&(field_index as u32)).is_ok()
    }
}

/// Exhaustive two-nearest-boundary-sample ridge detector.
///
/// A vertex is a member when at least two samples attain its exact minimum
/// squared distance and are separated by more than both `tol` and the
/// distance itself. The minimum is an integer in (h/2)^2 units, so "attain"
/// is an exact integer tie; `tol` filters the sub-cell ties produced by
/// boundary sampling, and the depth-scaled separation test (realizing points
/// at least 60 degrees apart as seen from the vertex) rejects the medial
/// spokes of the pixelated boundary itself, whose realizing samples stay a
/// few cells apart at every depth. Defaults to 1.5 h via
/// [`ridge_set_default`].
pub fn ridge_set<R: Real>(dom: &Domain<R>, tol: R) -> RidgeSet<R> {
    let tol_fine = tol / (dom.h * R::from_f64c(0.5));
    let tol_sq = (tol_fine * tol_fine).to_f64().unwrap();
    let tol_sq = tol_sq.ceil() as i64;
    let mut members = Vec::new();
    let mut realizers: Vec<[i64; 2]> = Vec::new();
    for (fi, v) in dom.field_vertices().enumerate() {
        let (ix, iy) = dom.vertex_xy(v);
        let (px, py) = (2 * ix as i64, 2 * iy as i64);
        let mut best = i64::MAX;
        realizers.clear();
        for s in &dom.sites {
            let dx = px - s[0];
            let dy = py - s[1];
            let sq = dx * dx + dy * dy;
            if sq < best {
                best = sq;
                realizers.clear();
                realizers.push(*s);
            } else if sq == best {
                realizers.push(*s);
            }
        }
        if best <= tol_sq {
            continue;
        }
        let sep_sq = tol_sq.max(best);
        let mut split = false;
        'outer: for (i, a) in realizers.iter().enumerate() {
            for b in &realizers[i + 1..] {
                let dx = a[0] - b[0];
                let dy = a[1] - b[1];
                if dx * dx + dy * dy > sep_sq {
                    split = true;
                    break 'outer;
                }
            }
        }
        if split {
            members.push(fi as u32);
        }
    }
    RidgeSet { members, tol }
}

pub fn ridge_set_default<R: Real>(dom: &Domain<R>) -> RidgeSet<R> {
    ridge_set(dom, dom.h * R::from_f64c(1.5))
}

/// Cross-check flags: triangles whose |grad d| drops below 1 - tol/h.
pub fn gradient_drop_flags<R: Real>(dom: &Domain<R>, dist: &DistanceResult<R>, tol: R) -> Vec<bool> {
    let thresh = R::one() - tol / dom.h;
    dist.grad
        .iter()
        .map(|g| (g[0] * g[0] + g[1] * g[1]).sqrt() < thresh)
        .collect()
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("start vertex is a ridge member")]
    StartOnRidge,
    #[error("start vertex not inside the domain")]
    StartOutside,
    #[error("no progress: |grad d| = {0} below 0.5 at the start")]
    NoProgress(f64),
    #[error("walk exceeded the step budget without reaching the ridge")]
    StepBudget,
}

#[derive(Debug, Clone)]
pub struct TracePath<R> {
    pub endpoint: [R; 2],
    pub length: R,
    pub path: Vec<[R; 2]>,
}

impl<R: Real> TracePath<R> {
    /// Maximum deviation of intermediate points from the start-endpoint chord.
    pub fn chord_deviation(&self) -> R {
        let a = self.path[0];
        let b = self.endpoint;
        let (ex, ey) = (b[0] - a[0], b[1] - a[1]);
        let len = (ex * ex + ey * ey).sqrt();
        if len == R::zero() {
            return R::zero();
        }
        let mut worst = R::zero();
        for p in &self.path {
            let (dx, dy) = (p[0] - a[0], p[1] - a[1]);
            let cross = (dx * ey - dy * ex).abs() / len;
            worst = worst.max(cross);
        }
        worst
    }
}

/// Follows the interpolated distance gradient from a non-ridge start vertex in
/// half-cell steps until a ridge vertex is reached.
pub fn trace_to_ridge<R: Real>(
    dom: &Domain<R>,
    dist: &DistanceResult<R>,
    ridge: &RidgeSet<R>,
    start_vertex: usize,
) -> Result<TracePath<R>, TraceError> {
    let fi = dom.field_index(start_vertex).ok_or(TraceError::StartOutside)?;
    if ridge.contains(fi) {
        return Err(TraceError::StartOnRidge);
    }
    let vg = vertex_gradients(dom, dist);
    let half = R::from_f64c(0.5);
    let step = dom.h * half;
    let mut pos = dom.vertex_pos(start_vertex);
    let g0 = sample_gradient(dom, &vg, pos);
    let g0n = (g0[0] * g0[0] + g0[1] * g0[1]).sqrt();
    if g0n < half {
        return Err(TraceError::NoProgress(g0n.to_f64().unwrap_or(0.0)));
    }

    let ridge_pts: Vec<[R; 2]> = ridge
        .members
        .iter()
        .map(|&f| dom.vertex_pos(dom.field_vertex(f as usize)))
        .collect();
    let arrive = dom.h * R::from_f64c(0.75);
    let near_ridge = |p: [R; 2]| -> bool {
        ridge_pts.iter().any(|q| {
            let (dx, dy) = (p[0] - q[0], p[1] - q[1]);
            (dx * dx + dy * dy).sqrt() <= arrive
        })
    };

    let mut path = vec![pos];
    let mut length = R::zero();
    let max_steps = 8 * (dom.shape.0 + dom.shape.1);
    for _ in 0..max_steps {
        if near_ridge(pos) {
            return Ok(TracePath { endpoint: pos, length, path });
        }
        let g = sample_gradient(dom, &vg, pos);
        let gn = (g[0] * g[0] + g[1] * g[1]).sqrt();
        if gn < R::from_f64c(0.3) {
            // gradient collapses only in the ridge collar; stop here
            return Ok(TracePath { endpoint: pos, length, path });
        }
        pos = [pos[0] + step * g[0] / gn, pos[1] + step * g[1] / gn];
        length = length + step;
        path.push(pos);
    }
    Err(TraceError::StepBudget)
}

/// Area-weighted vertex gradients of the distance field (uniform triangle
/// areas make this a plain average over incident triangles).
pub(crate) fn vertex_gradients<R: Real>(dom: &Domain<R>, dist: &DistanceResult<R>) -> Vec<[R; 2]> {
    average_triangle_vectors(dom, &dist.grad)
}

pub(crate) fn average_triangle_vectors<R: Real>(dom: &Domain<R>, tri_vec: &[[R; 2]]) -> Vec<[R; 2]> {
    let mut acc = vec![[R::zero(); 2]; dom.num_inside()];
    let mut cnt = vec![0usize; dom.num_inside()];
    for (t, tri) in dom.cell_triangles.iter().enumerate() {
        for &v in &tri.v {
            let f = dom.field_index(v as usize).expect("triangle vertex inside");
            acc[f][0] = acc[f][0] + tri_vec[t][0];
            acc[f][1] = acc[f][1] + tri_vec[t][1];
            cnt[f] += 1;
        }
    }
    for f in 0..acc.len() {
        if cnt[f] > 0 {
            let inv = R::one() / R::from_usizec(cnt[f]);
            acc[f][0] = acc[f][0] * inv;
            acc[f][1] = acc[f][1] * inv;
        }
    }
    acc
}

/// Bilinear interpolation of per-vertex vectors at an arbitrary point;
/// clamps to the grid and substitutes the nearest inside value where a cell
/// corner falls outside the domain.
pub(crate) fn sample_gradient<R: Real>(dom: &Domain<R>, vg: &[[R; 2]], p: [R; 2]) -> [R; 2] {
    let hf = dom.h;
    let fx = (p[0] / hf).to_f64().unwrap();
    let fy = (p[1] / hf).to_f64().unwrap();
    let cx = fx.floor().clamp(0.0, (dom.shape.0 - 2) as f64) as usize;
    let cy = fy.floor().clamp(0.0, (dom.shape.1 - 2) as f64) as usize;
    let tx = R::from_f64c((fx - cx as f64).clamp(0.0, 1.0));
    let ty = R::from_f64c((fy - cy as f64).clamp(0.0, 1.0));
    let corner = |ix: usize, iy: usize| -> [R; 2] {
        let v = dom.vertex_index(ix, iy);
        match dom.field_index(v) {
            Some(f) => vg[f],
            None => [R::zero(), R::zero()],
        }
    };
    let c00 = corner(cx, cy);
    let c10 = corner(cx + 1, cy);
    let c01 = corner(cx, cy + 1);
    let c11 = corner(cx + 1, cy + 1);
    let one = R::one();
    let mut out = [R::zero(); 2];
    for k in 0..2 {
        let bottom = c00[k] * (one - tx) + c10[k] * tx;
        let top = c01[k] * (one - tx) + c11[k] * tx;
        out[k] = bottom * (one - ty) + top * ty;
    }
    out
}
