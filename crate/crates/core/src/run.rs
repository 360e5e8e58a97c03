//! Config-driven experiment runner: builds the domain, executes the requested
//! mode, and writes CSV artifacts plus `report.txt` under `results/<name>/`.

use crate::config::{DomainSpec, FSpec, Mode, RunConfig};
use crate::domain::{self, Domain, Shape};
use crate::eigen::{self, SolveOptions};
use crate::fields::{self, RobinParams, ScalarField};
use crate::poisson::{self, PoissonOptions};
use crate::viscosity;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("domain: {0}")]
    Domain(#[from] domain::DomainError),
    #[error("field: {0}")]
    Field(#[from] fields::FieldError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Config(String),
    #[error("solver did not converge")]
    NonConvergence,
    #[error("mode assertion failed: {0}")]
    AssertionFailed(String),
}

impl RunError {
    /// Process exit status for the failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Domain(_) => 2,
            RunError::NonConvergence => 3,
            _ => 1,
        }
    }
}

pub fn build_domain(cfg: &RunConfig) -> Result<Domain<f64>, RunError> {
    let dom = match &cfg.domain {
        DomainSpec::Disk { radius } => domain::generate(&Shape::Disk { radius: *radius }, cfg.h)?,
        DomainSpec::Square { side } => domain::generate(&Shape::Square { side: *side }, cfg.h)?,
        DomainSpec::Rectangle { width, height } => {
            domain::generate(&Shape::Rectangle { width: *width, height: *height }, cfg.h)?
        }
        DomainSpec::LShape { size } => domain::generate(&Shape::LShape { size: *size }, cfg.h)?,
        DomainSpec::Annulus { r_outer, r_inner } => {
            domain::generate(&Shape::Annulus { r_outer: *r_outer, r_inner: *r_inner }, cfg.h)?
        }
        DomainSpec::Mask { path } => domain::load_mask_file(path)?,
    };
    Ok(dom)
}

/// Grid centre used by the radial generators and indicator loads.
fn grid_center(dom: &Domain<f64>) -> [f64; 2] {
    [
        dom.h * ((dom.shape.0 - 1) as f64) * 0.5,
        dom.h * ((dom.shape.1 - 1) as f64) * 0.5,
    ]
}

pub fn build_f(cfg: &RunConfig, dom: &Domain<f64>) -> Result<ScalarField<f64>, RunError> {
    let c = grid_center(dom);
    let radial = |p: [f64; 2]| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt();
    Ok(match &cfg.f {
        FSpec::Const => ScalarField::constant(dom, 1.0),
        FSpec::BallIndicator { eps } => {
            ScalarField::from_fn(dom, |p| if radial(p) <= *eps { 1.0 } else { 0.0 })
        }
        FSpec::AnnulusIndicator { r0, r1 } => ScalarField::from_fn(dom, |p| {
            let r = radial(p);
            if r >= *r0 && r <= *r1 {
                1.0
            } else {
                0.0
            }
        }),
        FSpec::Csv { path } => fields::read_field_csv(dom, path)?,
    })
}

pub struct RunArtifacts {
    pub dir: PathBuf,
    pub report: String,
}

pub fn run(cfg: &RunConfig) -> Result<RunArtifacts, RunError> {
    let dir = cfg.out_dir.join(&cfg.name);
    std::fs::create_dir_all(&dir)?;
    let dom = build_domain(cfg)?;
    if !dom.connected {
        eprintln!("warning: domain interior is disconnected");
    }

    let mut report = String::new();
    writeln!(report, "mode = {}", cfg.mode.as_str()).unwrap();
    writeln!(report, "beta = {}", cfg.beta).unwrap();
    writeln!(report, "h = {}", dom.h).unwrap();
    writeln!(report, "vertices = {}", dom.num_inside()).unwrap();
    writeln!(report, "area = {}", dom.area()).unwrap();
    writeln!(report, "boundary_measure = {}", dom.boundary_measure()).unwrap();
    let rin = domain::inradius(&dom);
    let lam_inf = domain::lambda_infinity(&dom, cfg.beta)
        .map_err(|e| RunError::Config(e.to_string()))?;
    writeln!(report, "inradius = {}", rin).unwrap();
    writeln!(report, "lambda_infinity = {}", lam_inf).unwrap();
    writeln!(report, "boundary_quadrature = face-midpoint").unwrap();

    let outcome = match cfg.mode {
        Mode::EigenSweep => run_eigen_sweep(cfg, &dom, lam_inf, &dir, &mut report),
        Mode::PoissonSweep => run_poisson_sweep(cfg, &dom, &dir, &mut report),
        Mode::LimitSolve => run_limit_solve(cfg, &dom, lam_inf, &dir, &mut report),
        Mode::Uniqueness => run_uniqueness(cfg, &dom, &dir, &mut report),
        Mode::Check => {
            let summary = crate::check::check_suite(cfg.seed);
            report.push_str(&summary.text);
            if summary.all_passed {
                Ok(())
            } else {
                Err(RunError::AssertionFailed("check suite failed".into()))
            }
        }
    };

    // the report is written even when the mode failed (partial artifacts)
    if let Err(e) = &outcome {
        writeln!(report, "status = FAILED ({e})").unwrap();
    } else {
        writeln!(report, "status = ok").unwrap();
    }
    std::fs::write(dir.join("report.txt"), &report)?;
    outcome.map(|_| RunArtifacts { dir, report })
}

fn run_eigen_sweep(
    cfg: &RunConfig,
    dom: &Domain<f64>,
    lam_inf: f64,
    dir: &Path,
    report: &mut String,
) -> Result<(), RunError> {
    if cfg.p_list.is_empty() {
        return Err(RunError::Config("eigen-sweep needs a nonempty p_list".into()));
    }
    let opts = SolveOptions { tol: cfg.tol, max_iter: cfg.max_iter };
    let table = eigen::eigen_sweep(dom, cfg.beta, &cfg.p_list, &opts)
        .map_err(|e| RunError::Config(e.to_string()))?;
    table.write_csv(&dir.join("sweep.csv"))?;
    writeln!(report, "gap_reference = {}", lam_inf).unwrap();
    writeln!(report, "sweep:").unwrap();
    for row in &table.rows {
        writeln!(
            report,
            "  p={} lambda_root={} gap={} iters={} converged={}",
            row.p, row.lambda_root, row.gap, row.iterations, row.converged
        )
        .unwrap();
    }
    if let Some(last) = table.rows.last() {
        if last.converged {
            let rp = RobinParams::finite(cfg.beta, last.p)?;
            let res = eigen::solve_eigen(dom, &rp, &opts, None)
                .map_err(|_| RunError::NonConvergence)?;
            fields::write_field_csv(dom, &res.u, &dir.join("u_last.csv"))?;
            let lim = eigen::eigenfunction_limit_check(&res, dom, cfg.beta);
            writeln!(report, "limit_check_violation = {}", lim.violation).unwrap();
        }
    }
    if table.rows.iter().any(|r| !r.converged) {
        return Err(RunError::NonConvergence);
    }
    Ok(())
}

fn run_poisson_sweep(
    cfg: &RunConfig,
    dom: &Domain<f64>,
    dir: &Path,
    report: &mut String,
) -> Result<(), RunError> {
    if cfg.p_list.is_empty() {
        return Err(RunError::Config("poisson-sweep needs a nonempty p_list".into()));
    }
    let f = build_f(cfg, dom)?;
    let opts = PoissonOptions { tol: cfg.tol, max_iter: cfg.max_iter, continuation: true };
    let mut failed = false;
    writeln!(report, "poisson sweep:").unwrap();
    for &p in &cfg.p_list {
        let rp = RobinParams::finite(cfg.beta, p)?;
        let res = match poisson::solve_p_poisson(dom, &f, &rp, &opts) {
            Ok(r) => r,
            Err(e) => {
                let msg = e.to_string();
                match e.partial() {
                    Some(r) => {
                        failed = true;
                        r
                    }
                    None => return Err(RunError::Config(msg)),
                }
            }
        };
        let fname = format!("v_p{p}.csv");
        fields::write_field_csv(dom, &res.v, &dir.join(&fname))?;
        let env_violation = poisson::upper_envelope_check(dom, &res.v, cfg.beta);
        writeln!(
            report,
            "  p={} j_value={} residual={} iters={} converged={} envelope_violation={}",
            p, res.j_value, res.residual_norm, res.iterations, res.converged, env_violation
        )
        .unwrap();
    }
    if failed {
        return Err(RunError::NonConvergence);
    }
    Ok(())
}

fn run_limit_solve(
    cfg: &RunConfig,
    dom: &Domain<f64>,
    lam_inf: f64,
    dir: &Path,
    report: &mut String,
) -> Result<(), RunError> {
    let v = poisson::limit_maximal_solution(dom, cfg.beta);
    fields::write_field_csv(dom, &v, &dir.join("v_limit.csv"))?;
    let (grad_sup, bdry_sup, _) = fields::sup_norms(dom, &v)?;
    writeln!(report, "feasibility: sup|grad v| = {}", grad_sup).unwrap();
    writeln!(report, "feasibility: beta * sup_boundary |v| = {}", cfg.beta * bdry_sup).unwrap();

    let ridge = domain::ridge_set_default(dom);
    writeln!(report, "ridge_vertices = {}", ridge.members.len()).unwrap();
    let rep = viscosity::limit_pde_residual(dom, &v, lam_inf, cfg.beta)?;
    writeln!(report, "interior_residual_sup = {}", rep.interior_sup).unwrap();
    writeln!(report, "interior_residual_q95 = {}", rep.interior_q95).unwrap();
    writeln!(report, "boundary_residual_sup = {}", rep.boundary_sup).unwrap();
    writeln!(report, "boundary_residual_q95 = {}", rep.boundary_q95).unwrap();
    writeln!(report, "residual_mask = ridge dilated by 2 cells + incomplete stencils").unwrap();
    Ok(())
}

fn run_uniqueness(
    cfg: &RunConfig,
    dom: &Domain<f64>,
    dir: &Path,
    report: &mut String,
) -> Result<(), RunError> {
    let f = build_f(cfg, dom)?;
    let cert = poisson::uniqueness_certificate(dom, &f, cfg.beta)
        .map_err(|e| RunError::AssertionFailed(e.to_string()))?;
    writeln!(report, "ridge_vertices = {}", cert.ridge.members.len()).unwrap();
    writeln!(report, "ridge_in_support = {}", cert.included).unwrap();
    if let Some(w) = &cert.witness {
        fields::write_field_csv(dom, w, &dir.join("witness.csv"))?;
        let vbar = poisson::limit_maximal_solution(dom, cfg.beta);
        let j_bar = poisson::j_infinity(dom, &f, &vbar)?;
        let j_wit = poisson::j_infinity(dom, &f, w)?;
        writeln!(report, "j_infinity_maximal = {}", j_bar).unwrap();
        writeln!(report, "j_infinity_witness = {}", j_wit).unwrap();
        writeln!(report, "witness_field_gap = {}", w.sup_dist(&vbar)).unwrap();
        writeln!(report, "verdict = non-unique (witness constructed)").unwrap();
    } else {
        writeln!(report, "verdict = unique (ridge inside supp f)").unwrap();
    }
    Ok(())
}

/// Re-reads a results directory, verifying every artifact named in report.txt
/// exists and parses back; returns a digest for printing.
pub fn report_summary(results_dir: &Path) -> Result<String, RunError> {
    let report_path = results_dir.join("report.txt");
    let text = std::fs::read_to_string(&report_path)?;
    let mut out = String::new();
    let mut checked = 0usize;
    for entry in std::fs::read_dir(results_dir)? {
        let path = entry?.path();
        let name = path.file_name().unwrap_or_default().to_string_lossy().to_string();
        if name.ends_with(".csv") {
            let body = std::fs::read_to_string(&path)?;
            let lines = body.lines().count();
            if lines < 2 {
                return Err(RunError::AssertionFailed(format!("{name}: empty CSV")));
            }
            checked += 1;
            writeln!(out, "artifact {name}: {} rows", lines - 1).unwrap();
        }
    }
    writeln!(out, "artifacts_checked = {checked}").unwrap();
    out.push_str(&text);
    Ok(out)
}
