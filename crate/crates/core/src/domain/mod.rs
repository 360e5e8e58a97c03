//! Masked uniform-grid domains and their exact geometry: boundary faces,
//! distance field, inradius, ridge (medial axis) and distance gradient flow.

mod edt;
pub(crate) mod ridge;

pub use ridge::{gradient_drop_flags, ridge_set, ridge_set_default, trace_to_ridge, RidgeSet, TraceError, TracePath};

use crate::fields::ScalarField;
use crate::scalar::Real;
use std::collections::HashSet;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("mask has no interior cell")]
    EmptyDomain,
    #[error("invalid mask: {0}")]
    BadMask(String),
    #[error("mask file: {0}")]
    Io(#[from] std::io::Error),
    #[error("mask file parse error: {0}")]
    Parse(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TriKind {
    /// Vertices (0,0), (h,0), (h,h) of the cell.
    Lower,
    /// Vertices (0,0), (h,h), (0,h) of the cell.
    Upper,
}

#[derive(Debug, Clone, Copy)]
pub struct Triangle {
    pub v: [u32; 3],
    pub kind: TriKind,
}

#[derive(Debug, Clone, Copy)]
pub struct BoundaryFace<R> {
    /// Vertex pair spanning the face.
    pub v: (u32, u32),
    /// Outward unit normal.
    pub normal: [R; 2],
    /// Face measure; `h` for raw masks, projection-corrected for the
    /// curved built-in generators.
    pub measure: R,
}

/// Computational domain: a masked uniform Cartesian grid with a fixed-diagonal
/// triangulation of its interior cells.
#[derive(Debug, Clone)]
pub struct Domain<R: Real> {
    pub n: usize,
    /// Vertices per axis (nx, ny).
    pub shape: (usize, usize),
    pub h: R,
    /// Per-vertex flag: vertex belongs to the closure of the domain,
    /// i.e. it is a corner of at least one interior cell.
    pub inside: Vec<bool>,
    pub boundary_faces: Vec<BoundaryFace<R>>,
    pub cell_triangles: Vec<Triangle>,
    /// Whether the interior cells form a single connected component.
    /// Disconnection is legal; callers may warn.
    pub connected: bool,
    /// Discrete boundary samples (boundary vertices and face midpoints),
    /// in integer h/2 units.
    pub(crate) sites: Vec<[i64; 2]>,
    vertex_to_field: Vec<u32>,
    field_to_vertex: Vec<u32>,
}

pub const NO_FIELD: u32 = u32::MAX;

impl<R: Real> Domain<R> {
    pub fn nx(&self) -> usize {
        self.shape.0
    }

    pub fn ny(&self) -> usize {
        self.shape.1
    }

    /// Number of inside vertices = length of every ScalarField on this domain.
    pub fn num_inside(&self) -> usize {
        self.field_to_vertex.len()
    }

    pub fn vertex_index(&self, ix: usize, iy: usize) -> usize {
        iy * self.shape.0 + ix
    }

    pub fn vertex_xy(&self, v: usize) -> (usize, usize) {
        (v % self.shape.0, v / self.shape.0)
    }

    /// Physical coordinates of a grid vertex.
    pub fn vertex_pos(&self, v: usize) -> [R; 2] {
        let (ix, iy) = self.vertex_xy(v);
        [self.h * R::from_usizec(ix), self.h * R::from_usizec(iy)]
    }

    pub fn field_index(&self, v: usize) -> Option<usize> {
        let f = self.vertex_to_field[v];
        (f != NO_FIELD).then_some(f as usize)
    }

    pub fn field_vertex(&self, f: usize) -> usize {
        self.field_to_vertex[f] as usize
    }

    pub fn field_vertices(&self) -> impl Iterator<Item = usize> + '_ {
        self.field_to_vertex.iter().map(|&v| v as usize)
    }

    pub fn triangle_area(&self) -> R {
        self.h * self.h * R::from_f64c(0.5)
    }

    /// Total area |Omega| as the triangle-area sum.
    pub fn area(&self) -> R {
        self.triangle_area() * R::from_usizec(self.cell_triangles.len())
    }

    /// Sum of boundary face measures.
    pub fn boundary_measure(&self) -> R {
        self.boundary_faces.iter().map(|f| f.measure).sum()
    }

    pub fn num_sites(&self) -> usize {
        self.sites.len()
    }

    /// Boundary sample point in integer h/2 units.
    pub fn site_raw(&self, s: usize) -> [i64; 2] {
        self.sites[s]
    }

    /// Physical position of a boundary sample point.
    pub fn site_pos(&self, s: usize) -> [R; 2] {
        let half = self.h * R::from_f64c(0.5);
        [
            half * R::from_f64c(self.sites[s][0] as f64),
            half * R::from_f64c(self.sites[s][1] as f64),
        ]
    }
}

/// Exact distance-to-boundary data for a domain.
#[derive(Debug, Clone)]
pub struct DistanceResult<R: Real> {
    /// Distance from each inside vertex to the discrete boundary.
    pub d: ScalarField<R>,
    /// Index (into the domain's boundary sample list) of a nearest boundary
    /// point per inside vertex.
    pub nearest: Vec<u32>,
    /// Per-triangle gradient of the piecewise-linear interpolant of `d`.
    pub grad: Vec<[R; 2]>,
}

/// Builds a Domain from a per-vertex mask. A cell is interior iff all four of
/// its corner vertices are masked.
pub fn build_grid_domain<R: Real>(
    mask: &[bool],
    nx: usize,
    ny: usize,
    h: R,
) -> Result<Domain<R>, DomainError> {
    if mask.len() != nx * ny {
        return Err(DomainError::BadMask(format!(
            "mask length {} != {}x{}",
            mask.len(),
            nx,
            ny
        )));
    }
    if h <= R::zero() {
        return Err(DomainError::BadMask("h must be positive".into()));
    }
    let cw = nx.saturating_sub(1);
    let ch = ny.saturating_sub(1);
    let cell_in = |cx: usize, cy: usize| -> bool {
        mask[cy * nx + cx] && mask[cy * nx + cx + 1] && mask[(cy + 1) * nx + cx] && mask[(cy + 1) * nx + cx + 1]
    };
    let mut any = false;
    let mut interior_cells = vec![false; cw * ch];
    for cy in 0..ch {
        for cx in 0..cw {
            if cell_in(cx, cy) {
                interior_cells[cy * cw + cx] = true;
                any = true;
            }
        }
    }
    if !any {
        return Err(DomainError::EmptyDomain);
    }

    let mut inside = vec![false; nx * ny];
    let mut triangles = Vec::new();
    for cy in 0..ch {
        for cx in 0..cw {
            if !interior_cells[cy * cw + cx] {
                continue;
            }
            let v00 = (cy * nx + cx) as u32;
            let v10 = v00 + 1;
            let v01 = v00 + nx as u32;
            let v11 = v01 + 1;
            for v in [v00, v10, v01, v11] {
                inside[v as usize] = true;
            }
            triangles.push(Triangle { v: [v00, v10, v11], kind: TriKind::Lower });
            triangles.push(Triangle { v: [v00, v11, v01], kind: TriKind::Upper });
        }
    }

    // Boundary faces: edges of interior cells whose neighbouring cell is
    // missing or outside the grid. Normal points away from the cell.
    let cell_at = |cx: isize, cy: isize| -> bool {
        cx >= 0 && cy >= 0 && (cx as usize) < cw && (cy as usize) < ch && interior_cells[cy as usize * cw + cx as usize]
    };
    let one = R::one();
    let mut faces = Vec::new();
    for cy in 0..ch {
        for cx in 0..cw {
            if !interior_cells[cy * cw + cx] {
                continue;
            }
            let v00 = (cy * nx + cx) as u32;
            let v10 = v00 + 1;
            let v01 = v00 + nx as u32;
            let v11 = v01 + 1;
            let c = (cx as isize, cy as isize);
            if !cell_at(c.0, c.1 - 1) {
                faces.push(BoundaryFace { v: (v00, v10), normal: [R::zero(), -one], measure: h });
            }
            if !cell_at(c.0, c.1 + 1) {
                faces.push(BoundaryFace { v: (v01, v11), normal: [R::zero(), one], measure: h });
            }
            if !cell_at(c.0 - 1, c.1) {
                faces.push(BoundaryFace { v: (v00, v01), normal: [-one, R::zero()], measure: h });
            }
            if !cell_at(c.0 + 1, c.1) {
                faces.push(BoundaryFace { v: (v10, v11), normal: [one, R::zero()], measure: h });
            }
        }
    }

    // Boundary samples: boundary vertices plus face midpoints, h/2 units.
    let mut bverts: HashSet<u32> = HashSet::new();
    for f in &faces {
        bverts.insert(f.v.0);
        bverts.insert(f.v.1);
    }
    let mut bverts: Vec<u32> = bverts.into_iter().collect();
    bverts.sort_unstable();
    let mut sites = Vec::with_capacity(bverts.len() + faces.len());
    for &v in &bverts {
        let ix = (v as usize % nx) as i64;
        let iy = (v as usize / nx) as i64;
        sites.push([2 * ix, 2 * iy]);
    }
    for f in &faces {
        let (ax, ay) = ((f.v.0 as usize % nx) as i64, (f.v.0 as usize / nx) as i64);
        let (bx, by) = ((f.v.1 as usize % nx) as i64, (f.v.1 as usize / nx) as i64);
        sites.push([ax + bx, ay + by]);
    }

    let mut vertex_to_field = vec![NO_FIELD; nx * ny];
    let mut field_to_vertex = Vec::new();
    for v in 0..nx * ny {
        if inside[v] {
            vertex_to_field[v] = field_to_vertex.len() as u32;
            field_to_vertex.push(v as u32);
        }
    }

    let connected = cells_connected(&interior_cells, cw, ch);

    Ok(Domain {
        n: 2,
        shape: (nx, ny),
        h,
        inside,
        boundary_faces: faces,
        cell_triangles: triangles,
        connected,
        sites,
        vertex_to_field,
        field_to_vertex,
    })
}

fn cells_connected(cells: &[bool], cw: usize, ch: usize) -> bool {
    let total: usize = cells.iter().filter(|&&c| c).count();
    if total == 0 {
        return true;
    }
    let start = cells.iter().position(|&c| c).unwrap();
    let mut seen = vec![false; cells.len()];
    let mut stack = vec![start];
    seen[start] = true;
    let mut count = 0usize;
    while let Some(c) = stack.pop() {
        count += 1;
        let (cx, cy) = (c % cw, c / cw);
        let mut push = |nc: usize| {
            if cells[nc] && !seen[nc] {
                seen[nc] = true;
                stack.push(nc);
            }
        };
        if cx > 0 {
            push(c - 1);
        }
        if cx + 1 < cw {
            push(c + 1);
        }
        if cy > 0 {
            push(c - cw);
        }
        if cy + 1 < ch {
            push(c + cw);
        }
    }
    count == total
}

/// Exact Euclidean distance from every inside vertex to the discrete boundary
/// sample set, with nearest-sample indices and per-triangle gradients.
///
/// All squared distances are integers in (h/2)^2 units, so the result is
/// bit-identical to a brute-force minimum over the sample list.
pub fn distance_field<R: Real>(dom: &Domain<R>) -> DistanceResult<R> {
    let (nx, ny) = dom.shape;
    let fw = 2 * nx - 1;
    let fh = 2 * ny - 1;
    let (sq, arg) = edt::exact_edt(fw, fh, &dom.sites);
    let half = dom.h * R::from_f64c(0.5);
    let mut values = Vec::with_capacity(dom.num_inside());
    let mut nearest = Vec::with_capacity(dom.num_inside());
    for v in dom.field_vertices() {
        let (ix, iy) = dom.vertex_xy(v);
        let fi = (2 * iy) * fw + 2 * ix;
        values.push(half * R::from_f64c((sq[fi] as f64).sqrt()));
        nearest.push(arg[fi]);
    }
    let d = ScalarField::new(values);
    let grad = crate::fields::gradient(dom, &d).expect("distance field matches domain");
    DistanceResult { d, nearest, grad }
}

/// Inradius: max of the distance field over inside vertices.
pub fn inradius<R: Real>(dom: &Domain<R>) -> R {
    let dist = distance_field(dom);
    dist.d.values().iter().fold(R::zero(), |m, &x| m.max(x))
}

#[derive(Debug, Error)]
#[error("beta must be positive (got {0})")]
pub struct NonPositiveBeta(pub f64);

/// Geometric value of the limit eigenvalue: 1 / (1/beta + R_Omega).
pub fn lambda_infinity<R: Real>(dom: &Domain<R>, beta: R) -> Result<R, NonPositiveBeta> {
    if beta <= R::zero() {
        return Err(NonPositiveBeta(beta.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(R::one() / (R::one() / beta + inradius(dom)))
}

// ---------------------------------------------------------------------------
// Generators and mask files
// ---------------------------------------------------------------------------

/// Built-in domain generators selected by name in run configs.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// Disk of the given radius centred on the grid.
    Disk { radius: f64 },
    Square { side: f64 },
    Rectangle { width: f64, height: f64 },
    /// [0,s]^2 minus the open upper-right quadrant [s/2,s]^2.
    LShape { size: f64 },
    Annulus { r_outer: f64, r_inner: f64 },
}

/// Builds a generator domain at spacing `h`. Curved shapes get
/// projection-corrected boundary measures from the analytic normal, so the
/// face-measure sum converges to the true perimeter; polygonal shapes keep
/// the exact measure `h` per face.
pub fn generate<R: Real>(shape: &Shape, h: R) -> Result<Domain<R>, DomainError> {
    let hf = h.to_f64().unwrap();
    match *shape {
        Shape::Disk { radius } => {
            let dom = disk_mask(radius, 0.0, h)?;
            Ok(correct_radial_measures(dom, radius, 0.0))
        }
        Shape::Annulus { r_outer, r_inner } => {
            if !(r_inner > 0.0 && r_inner < r_outer) {
                return Err(DomainError::BadMask("annulus needs 0 < r_inner < r_outer".into()));
            }
            let dom = disk_mask(r_outer, r_inner, h)?;
            Ok(correct_radial_measures(dom, r_outer, r_inner))
        }
        Shape::Square { side } => rect_mask(side, side, hf, h),
        Shape::Rectangle { width, height } => rect_mask(width, height, hf, h),
        Shape::LShape { size } => {
            let m = (size / hf).round() as usize;
            if m < 2 || m % 2 != 0 {
                return Err(DomainError::BadMask("L-shape size must be an even number of cells".into()));
            }
            let n = m + 1;
            let mut mask = vec![false; n * n];
            for iy in 0..n {
                for ix in 0..n {
                    // keep unless strictly in the open removed quadrant
                    if !(ix > m / 2 && iy > m / 2) {
                        mask[iy * n + ix] = true;
                    }
                }
            }
            build_grid_domain(&mask, n, n, h)
        }
    }
}

fn rect_mask<R: Real>(w: f64, hgt: f64, hf: f64, h: R) -> Result<Domain<R>, DomainError> {
    let mx = (w / hf).round() as usize;
    let my = (hgt / hf).round() as usize;
    if mx == 0 || my == 0 {
        return Err(DomainError::EmptyDomain);
    }
    let (nx, ny) = (mx + 1, my + 1);
    let mask = vec![true; nx * ny];
    build_grid_domain(&mask, nx, ny, h)
}

/// Vertex mask around the grid centre with a half-cell offset on both radii,
/// so the cell-area sum is unbiased against the smooth disk; one-cell outside
/// margin on every side.
fn disk_mask<R: Real>(r_outer: f64, r_inner: f64, h: R) -> Result<Domain<R>, DomainError> {
    let hf = h.to_f64().unwrap();
    let m = (r_outer / hf).ceil() as usize + 2;
    let n = 2 * m + 1;
    let c = m as f64;
    let ro = r_outer + 0.5 * hf;
    let ri = if r_inner > 0.0 { r_inner - 0.5 * hf } else { 0.0 };
    let mut mask = vec![false; n * n];
    for iy in 0..n {
        for ix in 0..n {
            let x = (ix as f64 - c) * hf;
            let y = (iy as f64 - c) * hf;
            let r = (x * x + y * y).sqrt();
            if r <= ro && r >= ri {
                mask[iy * n + ix] = true;
            }
        }
    }
    build_grid_domain(&mask, n, n, h)
}

/// Scales each face measure by |<face normal, analytic radial normal>| so the
/// staircase perimeter sum converges to the smooth one.
fn correct_radial_measures<R: Real>(mut dom: Domain<R>, r_outer: f64, r_inner: f64) -> Domain<R> {
    let hf = dom.h.to_f64().unwrap();
    let nx = dom.shape.0;
    let c = ((nx - 1) / 2) as f64;
    for f in dom.boundary_faces.iter_mut() {
        let (ax, ay) = ((f.v.0 as usize % nx) as f64, (f.v.0 as usize / nx) as f64);
        let (bx, by) = ((f.v.1 as usize % nx) as f64, (f.v.1 as usize / nx) as f64);
        let mx = (0.5 * (ax + bx) - c) * hf;
        let my = (0.5 * (ay + by) - c) * hf;
        let r = (mx * mx + my * my).sqrt();
        if r <= 0.0 {
            continue;
        }
        // outer faces project on the outward radial, inner (annulus hole)
        // faces on the inward radial; |cos| covers both.
        let _ = (r_outer, r_inner);
        let n_true = [mx / r, my / r];
        let nf = [f.normal[0].to_f64().unwrap(), f.normal[1].to_f64().unwrap()];
        let cosang = (nf[0] * n_true[0] + nf[1] * n_true[1]).abs();
        f.measure = f.measure * R::from_f64c(cosang);
    }
    dom
}

/// Reads a `P1`-style plain-text bitmap with a trailing `h=<spacing>` line.
pub fn load_mask_file<R: Real>(path: &Path) -> Result<Domain<R>, DomainError> {
    let text = std::fs::read_to_string(path)?;
    let mut tokens = Vec::new();
    let mut hval: Option<f64> = None;
    for line in text.lines() {
        let line = line.trim();
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("h=") {
            hval = Some(
                rest.trim()
                    .parse::<f64>()
                    .map_err(|e| DomainError::Parse(format!("bad h value: {e}")))?,
            );
            continue;
        }
        tokens.extend(line.split_whitespace().map(String::from));
    }
    if tokens.first().map(String::as_str) != Some("P1") {
        return Err(DomainError::Parse("expected P1 header".into()));
    }
    if tokens.len() < 3 {
        return Err(DomainError::Parse("missing width/height".into()));
    }
    let nx: usize = tokens[1].parse().map_err(|_| DomainError::Parse("bad width".into()))?;
    let ny: usize = tokens[2].parse().map_err(|_| DomainError::Parse("bad height".into()))?;
    let entries = &tokens[3..];
    if entries.len() != nx * ny {
        return Err(DomainError::Parse(format!(
            "expected {} entries, found {}",
            nx * ny,
            entries.len()
        )));
    }
    let mask: Vec<bool> = entries.iter().map(|t| t == "1").collect();
    let h = hval.ok_or_else(|| DomainError::Parse("missing h=<spacing> line".into()))?;
    build_grid_domain(&mask, nx, ny, R::from_f64c(h))
}

/// Writes the mask of a domain in the same `P1` + `h=` format.
pub fn write_mask_file<R: Real>(dom: &Domain<R>, path: &Path) -> std::io::Result<()> {
    use std::io::Write;
    let mut out = String::new();
    out.push_str("P1\n");
    out.push_str(&format!("{} {}\n", dom.shape.0, dom.shape.1));
    for iy in 0..dom.shape.1 {
        let row: Vec<&str> = (0..dom.shape.0)
            .map(|ix| if dom.inside[dom.vertex_index(ix, iy)] { "1" } else { "0" })
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out.push_str(&format!("h={}\n", dom.h));
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())
}
