//! Scalar fields on a domain, discrete differential operators, and the
//! overflow-safe p-power kernels shared by every solver.

use crate::domain::{Domain, TriKind};
use crate::scalar::Real;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("field length {field} does not match domain inside count {domain}")]
    DomainMismatch { field: usize, domain: usize },
    #[error("field contains a non-finite value at index {0}")]
    NonFinite(usize),
    #[error("p must be finite and > 1 for this operation (got {0})")]
    BadExponent(f64),
    #[error("sample/weight length mismatch ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("p must be >= 1 (got {0})")]
    SubUnitExponent(f64),
    #[error("field has zero p-norm")]
    ZeroField,
    #[error("field must be strictly positive for this operation")]
    NonpositiveField,
    #[error("field csv: {0}")]
    Io(#[from] std::io::Error),
    #[error("field csv parse error: {0}")]
    Parse(String),
}

/// One value per inside vertex of a domain.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField<R> {
    values: Vec<R>,
}

impl<R: Real> ScalarField<R> {
    pub fn new(values: Vec<R>) -> Self {
        Self { values }
    }

    pub fn constant(dom: &Domain<R>, c: R) -> Self {
        Self { values: vec![c; dom.num_inside()] }
    }

    /// Builds a field by evaluating `f` at each inside vertex position.
    pub fn from_fn(dom: &Domain<R>, mut f: impl FnMut([R; 2]) -> R) -> Self {
        let values = dom.field_vertices().map(|v| f(dom.vertex_pos(v))).collect();
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[R] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [R] {
        &mut self.values
    }

    pub fn check(&self, dom: &Domain<R>) -> Result<(), FieldError> {
        if self.len() != dom.num_inside() {
            return Err(FieldError::DomainMismatch { field: self.len(), domain: dom.num_inside() });
        }
        if let Some(i) = self.values.iter().position(|x| !x.is_finite()) {
            return Err(FieldError::NonFinite(i));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(R) -> R) -> Self {
        Self { values: self.values.iter().map(|&x| f(x)).collect() }
    }

    pub fn sup_abs(&self) -> R {
        self.values.iter().fold(R::zero(), |m, &x| m.max(x.abs()))
    }

    /// Max over vertices of self - other.
    pub fn max_diff(&self, other: &Self) -> R {
        self.values
            .iter()
            .zip(&other.values)
            .fold(-R::infinity(), |m, (&a, &b)| m.max(a - b))
    }

    pub fn sup_dist(&self, other: &Self) -> R {
        self.values
            .iter()
            .zip(&other.values)
            .fold(R::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }
}

/// Robin boundary stiffness and exponent. `p = None` encodes p = infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobinParams<R> {
    pub beta: R,
    pub p: Option<R>,
}

impl<R: Real> RobinParams<R> {
    pub fn finite(beta: R, p: R) -> Result<Self, FieldError> {
        if !(p > R::one()) || !p.is_finite() {
            return Err(FieldError::BadExponent(p.to_f64().unwrap_or(f64::NAN)));
        }
        assert!(beta > R::zero(), "beta must be positive");
        Ok(Self { beta, p: Some(p) })
    }

    pub fn infinite(beta: R) -> Self {
        assert!(beta > R::zero(), "beta must be positive");
        Self { beta, p: None }
    }

    pub fn p_finite(&self) -> Result<R, FieldError> {
        self.p.ok_or(FieldError::BadExponent(f64::INFINITY))
    }
}

// ---------------------------------------------------------------------------
// Discrete operators
// ---------------------------------------------------------------------------

/// Exact gradient of the piecewise-linear interpolant, one vector per
/// triangle.
pub fn gradient<R: Real>(dom: &Domain<R>, w: &ScalarField<R>) -> Result<Vec<[R; 2]>, FieldError> {
    w.check(dom)?;
    let inv_h = R::one() / dom.h;
    let fval = |v: u32| -> R {
        w.values()[dom.field_index(v as usize).expect("triangle vertex inside")]
    };
    Ok(dom
        .cell_triangles
        .iter()
        .map(|t| {
            let (w0, w1, w2) = (fval(t.v[0]), fval(t.v[1]), fval(t.v[2]));
            match t.kind {
                TriKind::Lower => [(w1 - w0) * inv_h, (w2 - w1) * inv_h],
                TriKind::Upper => [(w1 - w2) * inv_h, (w2 - w0) * inv_h],
            }
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Stabilized p-power kernel
// ---------------------------------------------------------------------------

/// Log of a weighted power sum, ln(sum_i w_i |s_i|^p), computed max-scaled.
/// Returns `None` when every sample is zero. This is the single code path all
/// p-power accumulations go through.
pub fn log_weighted_power_sum<R: Real>(samples: &[R], weights: &[R], p: R) -> Option<R> {
    debug_assert_eq!(samples.len(), weights.len());
    let m = samples.iter().fold(R::zero(), |m, &s| m.max(s.abs()));
    if m == R::zero() {
        return None;
    }
    let mut acc = R::zero();
    for (&s, &w) in samples.iter().zip(weights) {
        let r = s.abs() / m;
        if r > R::zero() {
            acc = acc + w * (p * r.ln()).exp();
        }
    }
    Some(p * m.ln() + acc.ln())
}

/// ln(e^a + e^b) without overflow.
pub fn log_add_exp<R: Real>(a: R, b: R) -> R {
    if a == R::neg_infinity() {
        return b;
    }
    if b == R::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Weighted p-norm (sum w |s|^p)^(1/p), max-scaled so it does not overflow
/// for p up to 1000. Returns 0 for all-zero samples.
pub fn stabilized_p_norm<R: Real>(samples: &[R], weights: &[R], p: R) -> Result<R, FieldError> {
    if samples.len() != weights.len() {
        return Err(FieldError::LengthMismatch(samples.len(), weights.len()));
    }
    if p < R::one() {
        return Err(FieldError::SubUnitExponent(p.to_f64().unwrap_or(f64::NAN)));
    }
    match log_weighted_power_sum(samples, weights, p) {
        None => Ok(R::zero()),
        Some(ls) => Ok((ls / p).exp()),
    }
}

// ---------------------------------------------------------------------------
// Energies and norms
// ---------------------------------------------------------------------------

/// The three ingredients of the p-energy in log space:
/// ln of the gradient term, the boundary term and the volume p-norm term.
#[derive(Debug, Clone, Copy)]
pub struct LogEnergy<R> {
    pub log_grad: Option<R>,
    pub log_bdry: Option<R>,
    pub log_vol: Option<R>,
}

/// Assembles ln of: triangle-quadrature |grad w|^p integral, the
/// beta^p-weighted boundary |w|^p integral (face-midpoint rule) and the
/// centroid-rule volume |w|^p integral.
pub fn log_energy_terms<R: Real>(
    dom: &Domain<R>,
    w: &ScalarField<R>,
    rp: &RobinParams<R>,
) -> Result<LogEnergy<R>, FieldError> {
    let p = rp.p_finite()?;
    w.check(dom)?;
    let grads = gradient(dom, w)?;
    let area = dom.triangle_area();
    let grad_norms: Vec<R> = grads.iter().map(|g| (g[0] * g[0] + g[1] * g[1]).sqrt()).collect();
    let areas = vec![area; grad_norms.len()];
    let log_grad = log_weighted_power_sum(&grad_norms, &areas, p);

    let fval = |v: u32| w.values()[dom.field_index(v as usize).expect("inside")];
    let half = R::from_f64c(0.5);
    let mids: Vec<R> = dom
        .boundary_faces
        .iter()
        .map(|f| (fval(f.v.0) + fval(f.v.1)) * half)
        .collect();
    let measures: Vec<R> = dom.boundary_faces.iter().map(|f| f.measure).collect();
    let log_bdry = log_weighted_power_sum(&mids, &measures, p).map(|l| l + p * rp.beta.ln());

    let third = R::one() / R::from_f64c(3.0);
    let cents: Vec<R> = dom
        .cell_triangles
        .iter()
        .map(|t| (fval(t.v[0]) + fval(t.v[1]) + fval(t.v[2])) * third)
        .collect();
    let tri_areas = vec![area; cents.len()];
    let log_vol = log_weighted_power_sum(&cents, &tri_areas, p);

    Ok(LogEnergy { log_grad, log_bdry, log_vol })
}

/// p-energy of a field: (gradient term, boundary term).
pub fn p_energy<R: Real>(
    dom: &Domain<R>,
    w: &ScalarField<R>,
    rp: &RobinParams<R>,
) -> Result<(R, R), FieldError> {
    let terms = log_energy_terms(dom, w, rp)?;
    let to_val = |l: Option<R>| l.map_or(R::zero(), |x| x.exp());
    Ok((to_val(terms.log_grad), to_val(terms.log_bdry)))
}

/// Rayleigh quotient (grad + boundary) / volume p-norm^p, stabilized.
pub fn rayleigh_quotient<R: Real>(
    dom: &Domain<R>,
    w: &ScalarField<R>,
    rp: &RobinParams<R>,
) -> Result<R, FieldError> {
    Ok(log_rayleigh_quotient(dom, w, rp)?.exp())
}

/// ln of the Rayleigh quotient; preferred for large p.
pub fn log_rayleigh_quotient<R: Real>(
    dom: &Domain<R>,
    w: &ScalarField<R>,
    rp: &RobinParams<R>,
) -> Result<R, FieldError> {
    let terms = log_energy_terms(dom, w, rp)?;
    let log_vol = terms.log_vol.ok_or(FieldError::ZeroField)?;
    let log_num = match (terms.log_grad, terms.log_bdry) {
        (Some(a), Some(b)) => log_add_exp(a, b),
        (Some(a), None) => a,
        (None, Some(b)) => b,
        (None, None) => R::neg_infinity(),
    };
    Ok(log_num - log_vol)
}

/// Sup norms used by the p = infinity code path:
/// (max triangle |grad w|, max boundary-face midpoint |w|, max vertex |w|).
pub fn sup_norms<R: Real>(dom: &Domain<R>, w: &ScalarField<R>) -> Result<(R, R, R), FieldError> {
    w.check(dom)?;
    let grads = gradient(dom, w)?;
    let grad_sup = grads
        .iter()
        .fold(R::zero(), |m, g| m.max((g[0] * g[0] + g[1] * g[1]).sqrt()));
    let fval = |v: u32| w.values()[dom.field_index(v as usize).expect("inside")];
    let half = R::from_f64c(0.5);
    let bdry_sup = dom
        .boundary_faces
        .iter()
        .fold(R::zero(), |m, f| m.max(((fval(f.v.0) + fval(f.v.1)) * half).abs()));
    Ok((grad_sup, bdry_sup, w.sup_abs()))
}

// ---------------------------------------------------------------------------
// CSV serialization
// ---------------------------------------------------------------------------

/// Writes a field as `ix,iy,value` rows; values use the shortest
/// round-trippable decimal form so loading is bit-exact.
pub fn write_field_csv<R: Real>(
    dom: &Domain<R>,
    w: &ScalarField<R>,
    path: &Path,
) -> Result<(), FieldError> {
    use std::io::Write;
    w.check(dom)?;
    let mut out = String::from("ix,iy,value\n");
    for (f, v) in dom.field_vertices().enumerate() {
        let (ix, iy) = dom.vertex_xy(v);
        out.push_str(&format!("{},{},{}\n", ix, iy, w.values()[f]));
    }
    let mut file = std::fs::File::create(path)?;
    file.write_all(out.as_bytes())?;
    Ok(())
}

pub fn read_field_csv<R: Real>(dom: &Domain<R>, path: &Path) -> Result<ScalarField<R>, FieldError>
where
    R: std::str::FromStr,
{
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some("ix,iy,value") => {}
        other => return Err(FieldError::Parse(format!("bad header: {:?}", other))),
    }
    let mut values = vec![None; dom.num_inside()];
    for (ln, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let err = |m: &str| FieldError::Parse(format!("line {}: {}", ln + 2, m));
        let ix: usize = parts.next().ok_or_else(|| err("missing ix"))?.trim().parse().map_err(|_| err("bad ix"))?;
        let iy: usize = parts.next().ok_or_else(|| err("missing iy"))?.trim().parse().map_err(|_| err("bad iy"))?;
        let val: R = parts
            .next()
            .ok_or_else(|| err("missing value"))?
            .trim()
            .parse()
            .map_err(|_| err("bad value"))?;
        if ix >= dom.shape.0 || iy >= dom.shape.1 {
            return Err(err("vertex outside grid"));
        }
        let f = dom
            .field_index(dom.vertex_index(ix, iy))
            .ok_or_else(|| err("vertex not inside the domain"))?;
        values[f] = Some(val);
    }
    let values: Option<Vec<R>> = values.into_iter().collect();
    values
        .map(ScalarField::new)
        .ok_or_else(|| FieldError::Parse("missing vertices".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{generate, Shape};

    fn unit_square(h: f64) -> Domain<f64> {
        generate(&Shape::Square { side: 1.0 }, h).unwrap()
    }

    #[test]
    fn gradient_reproduces_affine_fields() {
        let dom = unit_square(0.125);
        let w = ScalarField::from_fn(&dom, |p| 3.0 * p[0] + 4.0 * p[1] - 2.0);
        for g in gradient(&dom, &w).unwrap() {
            assert!((g[0] - 3.0).abs() < 1e-12 && (g[1] - 4.0).abs() < 1e-12);
        }
        let lin = ScalarField::from_fn(&dom, |p| p[0]);
        for g in gradient(&dom, &lin).unwrap() {
            assert!((g[0] - 1.0).abs() < 1e-12 && g[1].abs() < 1e-12);
        }
        let c = ScalarField::constant(&dom, 7.5);
        for g in gradient(&dom, &c).unwrap() {
            assert!(g[0].abs() < 1e-12 && g[1].abs() < 1e-12);
        }
    }

    #[test]
    fn p_norm_basics() {
        assert!((stabilized_p_norm(&[3.0f64], &[1.0], 7.0).unwrap() - 3.0).abs() < 1e-12);
        assert!((stabilized_p_norm(&[3.0f64, 4.0], &[1.0, 1.0], 2.0).unwrap() - 5.0).abs() < 1e-12);
        let v = stabilized_p_norm(&[2.0f64, 3.0], &[0.5, 0.5], 200.0).unwrap();
        assert!((v - 3.0).abs() / 3.0 < 0.01, "got {v}");
        assert_eq!(stabilized_p_norm(&[0.0f64, 0.0], &[1.0, 1.0], 5.0).unwrap(), 0.0);
        assert!(stabilized_p_norm(&[1.0f64], &[1.0, 2.0], 2.0).is_err());
        assert!(stabilized_p_norm(&[1.0f64], &[1.0], 0.5).is_err());
        // no overflow at p = 1000
        assert!(stabilized_p_norm(&[1e8f64, 2e8], &[1.0, 1.0], 1000.0).unwrap().is_finite());
    }

    #[test]
    fn energy_of_constant_field() {
        let dom = unit_square(1.0 / 32.0);
        let c = 1.5;
        let rp = RobinParams::finite(1.0, 2.0).unwrap();
        let w = ScalarField::constant(&dom, c);
        let (g, b) = p_energy(&dom, &w, &rp).unwrap();
        assert!(g.abs() < 1e-12);
        assert!((b - 4.0 * c * c).abs() < 1e-10, "boundary term {b}");
    }

    #[test]
    fn energy_of_linear_field() {
        let dom = unit_square(1.0 / 32.0);
        let rp = RobinParams::finite(3.0, 2.0).unwrap();
        let w = ScalarField::from_fn(&dom, |p| p[0]);
        let (g, _) = p_energy(&dom, &w, &rp).unwrap();
        assert!((g - 1.0).abs() < 1e-10, "grad term {g}");
    }

    #[test]
    fn quotient_of_unit_constant() {
        let dom = unit_square(1.0 / 32.0);
        let rp = RobinParams::finite(1.0, 2.0).unwrap();
        let w = ScalarField::constant(&dom, 1.0);
        let q = rayleigh_quotient(&dom, &w, &rp).unwrap();
        assert!((q - 4.0).abs() < 1e-10, "quotient {q}");
    }

    #[test]
    fn quotient_scale_invariance() {
        let dom = unit_square(1.0 / 16.0);
        let rp = RobinParams::finite(2.0, 3.0).unwrap();
        let w = ScalarField::from_fn(&dom, |p| 0.3 + p[0] * p[1]);
        let q0 = rayleigh_quotient(&dom, &w, &rp).unwrap();
        for c in [1e-3, 1e3] {
            let q = rayleigh_quotient(&dom, &w.map(|x| x * c), &rp).unwrap();
            assert!((q - q0).abs() / q0 < 1e-10, "c={c}: {q} vs {q0}");
        }
    }

    #[test]
    fn negation_invariance() {
        let dom = unit_square(1.0 / 16.0);
        let rp = RobinParams::finite(1.5, 4.0).unwrap();
        let w = ScalarField::from_fn(&dom, |p| p[0] - 0.3);
        let (g1, b1) = p_energy(&dom, &w, &rp).unwrap();
        let (g2, b2) = p_energy(&dom, &w.map(|x| -x), &rp).unwrap();
        assert!((g1 - g2).abs() <= 1e-12 * g1.abs().max(1.0));
        assert!((b1 - b2).abs() <= 1e-12 * b1.abs().max(1.0));
        let q1 = rayleigh_quotient(&dom, &w, &rp).unwrap();
        let q2 = rayleigh_quotient(&dom, &w.map(|x| -x), &rp).unwrap();
        assert!((q1 - q2).abs() <= 1e-10 * q1.abs());
    }

    #[test]
    fn zero_field_quotient_rejected() {
        let dom = unit_square(0.25);
        let rp = RobinParams::finite(1.0, 2.0).unwrap();
        let w = ScalarField::constant(&dom, 0.0);
        assert!(matches!(rayleigh_quotient(&dom, &w, &rp), Err(FieldError::ZeroField)));
    }

    #[test]
    fn sup_norms_linear_and_constant() {
        let dom = unit_square(1.0 / 16.0);
        let w = ScalarField::from_fn(&dom, |p| p[0]);
        let (g, b, v) = sup_norms(&dom, &w).unwrap();
        assert!((g - 1.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12 && (v - 1.0).abs() < 1e-12);
        let c = ScalarField::constant(&dom, -2.5);
        let (g, b, v) = sup_norms(&dom, &c).unwrap();
        assert!(g.abs() < 1e-12 && (b - 2.5).abs() < 1e-12 && (v - 2.5).abs() < 1e-12);
    }

    #[test]
    fn infinite_p_rejected_by_energy() {
        let dom = unit_square(0.25);
        let rp = RobinParams::infinite(1.0);
        let w = ScalarField::constant(&dom, 1.0);
        assert!(p_energy(&dom, &w, &rp).is_err());
    }

    #[test]
    fn csv_roundtrip_bit_exact() {
        let dom = generate::<f64>(&Shape::Disk { radius: 0.5 }, 1.0 / 16.0).unwrap();
        let w = ScalarField::from_fn(&dom, |p| (p[0] * 17.3).sin() * (p[1] + 0.1).ln_1p());
        let tmp = std::env::temp_dir().join("robin_lab_field_test.csv");
        write_field_csv(&dom, &w, &tmp).unwrap();
        let w2 = read_field_csv(&dom, &tmp).unwrap();
        assert_eq!(w.values(), w2.values());
        std::fs::remove_file(&tmp).ok();
    }
}
