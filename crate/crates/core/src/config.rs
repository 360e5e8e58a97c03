//! Run configuration: flat key=value text with `[section]` headers.
//!
//! ```text
//! name = disk-sweep
//! mode = eigen-sweep
//! beta = 1.0
//! p_list = 4,8,16,32
//! seed = 0
//!
//! [domain]
//! generator = disk
//! radius = 1.0
//! h = 0.015625
//!
//! [f]
//! kind = const
//!
//! [solver]
//! tol = 1e-8
//! max_iter = 20000
//!
//! [output]
//! dir = results
//! ```

use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: unknown key `{key}` in section [{section}]")]
    UnknownKey { line: usize, section: String, key: String },
    #[error("field `{field}`: {msg}")]
    BadValue { field: String, msg: String },
    #[error("missing required field `{0}`")]
    Missing(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    EigenSweep,
    PoissonSweep,
    LimitSolve,
    Uniqueness,
    Check,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::EigenSweep => "eigen-sweep",
            Mode::PoissonSweep => "poisson-sweep",
            Mode::LimitSolve => "limit-solve",
            Mode::Uniqueness => "uniqueness",
            Mode::Check => "check",
        }
    }
}

#[derive(Debug, Clone)]
pub enum DomainSpec {
    Disk { radius: f64 },
    Square { side: f64 },
    Rectangle { width: f64, height: f64 },
    LShape { size: f64 },
    Annulus { r_outer: f64, r_inner: f64 },
    Mask { path: PathBuf },
}

#[derive(Debug, Clone)]
pub enum FSpec {
    Const,
    BallIndicator { eps: f64 },
    AnnulusIndicator { r0: f64, r1: f64 },
    Csv { path: PathBuf },
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub name: String,
    pub mode: Mode,
    pub beta: f64,
    pub p_list: Vec<f64>,
    pub seed: u64,
    pub domain: DomainSpec,
    /// Grid spacing for generator domains; mask files carry their own.
    pub h: f64,
    pub f: FSpec,
    pub tol: f64,
    pub max_iter: usize,
    pub out_dir: PathBuf,
}

struct RawEntry {
    line: usize,
    section: String,
    key: String,
    value: String,
}

fn parse_entries(text: &str) -> Result<Vec<RawEntry>, ConfigError> {
    let mut out = Vec::new();
    let mut section = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let s = raw.trim();
        if s.is_empty() || s.starts_with('#') {
            continue;
        }
        if let Some(name) = s.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::Syntax { line, msg: "unclosed section header".into() })?;
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = s
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { line, msg: format!("expected key = value, got `{s}`") })?;
        out.push(RawEntry {
            line,
            section: section.clone(),
            key: key.trim().to_string(),
            value: value.trim().to_string(),
        });
    }
    Ok(out)
}

fn parse_f64(e: &RawEntry) -> Result<f64, ConfigError> {
    e.value.parse::<f64>().map_err(|_| ConfigError::BadValue {
        field: qualify(e),
        msg: format!("`{}` is not a number (line {})", e.value, e.line),
    })
}

fn qualify(e: &RawEntry) -> String {
    if e.section.is_empty() {
        e.key.clone()
    } else {
        format!("{}.{}", e.section, e.key)
    }
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let entries = parse_entries(text)?;

    let mut name: Option<String> = None;
    let mut mode: Option<Mode> = None;
    let mut beta: Option<f64> = None;
    let mut p_list: Vec<f64> = Vec::new();
    let mut seed: u64 = 0;
    let mut generator: Option<String> = None;
    let mut mask: Option<PathBuf> = None;
    let mut h: Option<f64> = None;
    let mut radius = 1.0;
    let mut side = 1.0;
    let mut width = 1.0;
    let mut height = 1.0;
    let mut size = 1.0;
    let mut r_outer = 1.0;
    let mut r_inner = 0.5;
    let mut f_kind: Option<String> = None;
    let mut f_eps = 0.5;
    let mut f_r0 = 0.5;
    let mut f_r1 = 0.75;
    let mut f_path: Option<PathBuf> = None;
    let mut tol = 1e-6;
    let mut max_iter = 20_000usize;
    let mut out_dir = PathBuf::from("results");

    for e in &entries {
        match (e.section.as_str(), e.key.as_str()) {
            ("", "name") => name = Some(e.value.clone()),
            ("", "mode") => {
                mode = Some(match e.value.as_str() {
                    "eigen-sweep" => Mode::EigenSweep,
                    "poisson-sweep" => Mode::PoissonSweep,
                    "limit-solve" => Mode::LimitSolve,
                    "uniqueness" => Mode::Uniqueness,
                    "check" => Mode::Check,
                    other => {
                        return Err(ConfigError::BadValue {
                            field: "mode".into(),
                            msg: format!("unknown mode `{other}` (line {})", e.line),
                        })
                    }
                })
            }
            ("", "beta") => beta = Some(parse_f64(e)?),
            ("", "seed") => {
                seed = e.value.parse().map_err(|_| ConfigError::BadValue {
                    field: "seed".into(),
                    msg: format!("`{}` is not an unsigned integer (line {})", e.value, e.line),
                })?
            }
            ("", "p_list") => {
                p_list = e
                    .value
                    .split(',')
                    .map(|t| {
                        t.trim().parse::<f64>().map_err(|_| ConfigError::BadValue {
                            field: "p_list".into(),
                            msg: format!("`{}` is not a number (line {})", t.trim(), e.line),
                        })
                    })
                    .collect::<Result<_, _>>()?
            }
            ("domain", "generator") => generator = Some(e.value.clone()),
            ("domain", "mask") => mask = Some(PathBuf::from(&e.value)),
            ("domain", "h") => h = Some(parse_f64(e)?),
            ("domain", "radius") => radius = parse_f64(e)?,
            ("domain", "side") => side = parse_f64(e)?,
            ("domain", "width") => width = parse_f64(e)?,
            ("domain", "height") => height = parse_f64(e)?,
            ("domain", "size") => size = parse_f64(e)?,
            ("domain", "r_outer") => r_outer = parse_f64(e)?,
            ("domain", "r_inner") => r_inner = parse_f64(e)?,
            ("f", "kind") => f_kind = Some(e.value.clone()),
            ("f", "eps") => f_eps = parse_f64(e)?,
            ("f", "r0") => f_r0 = parse_f64(e)?,
            ("f", "r1") => f_r1 = parse_f64(e)?,
            ("f", "path") => f_path = Some(PathBuf::from(&e.value)),
            ("solver", "tol") => tol = parse_f64(e)?,
            ("solver", "max_iter") => {
                max_iter = e.value.parse().map_err(|_| ConfigError::BadValue {
                    field: "solver.max_iter".into(),
                    msg: format!("`{}` is not an unsigned integer (line {})", e.value, e.line),
                })?
            }
            ("output", "dir") => out_dir = PathBuf::from(&e.value),
            _ => {
                return Err(ConfigError::UnknownKey {
                    line: e.line,
                    section: e.section.clone(),
                    key: e.key.clone(),
                })
            }
        }
    }

    let mode = mode.ok_or_else(|| ConfigError::Missing("mode".into()))?;
    let beta = beta.unwrap_or(1.0);
    if beta <= 0.0 {
        return Err(ConfigError::BadValue {
            field: "beta".into(),
            msg: format!("beta must be positive, got {beta}"),
        });
    }
    for w in p_list.windows(2) {
        if w[1] <= w[0] {
            return Err(ConfigError::BadValue {
                field: "p_list".into(),
                msg: "p_list must be strictly increasing".into(),
            });
        }
    }
    if let Some(&p0) = p_list.first() {
        if p0 <= 1.0 {
            return Err(ConfigError::BadValue {
                field: "p_list".into(),
                msg: format!("entries must exceed 1, got {p0}"),
            });
        }
    }
    if tol <= 0.0 {
        return Err(ConfigError::BadValue { field: "solver.tol".into(), msg: "tol must be positive".into() });
    }

    let domain = match (generator.as_deref(), mask) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::BadValue {
                field: "domain.generator".into(),
                msg: "give either a generator or a mask file, not both".into(),
            })
        }
        (None, Some(path)) => DomainSpec::Mask { path },
        (gen, None) => {
            let g = gen.unwrap_or("disk");
            match g {
                "disk" => DomainSpec::Disk { radius },
                "square" => DomainSpec::Square { side },
                "rectangle" => DomainSpec::Rectangle { width, height },
                "lshape" => DomainSpec::LShape { size },
                "annulus" => DomainSpec::Annulus { r_outer, r_inner },
                other => {
                    return Err(ConfigError::BadValue {
                        field: "domain.generator".into(),
                        msg: format!("unknown generator `{other}`"),
                    })
                }
            }
        }
    };
    let h = match &domain {
        DomainSpec::Mask { .. } => h.unwrap_or(0.0),
        _ => h.ok_or_else(|| ConfigError::Missing("domain.h".into()))?,
    };
    if !matches!(domain, DomainSpec::Mask { .. }) && h <= 0.0 {
        return Err(ConfigError::BadValue { field: "domain.h".into(), msg: "h must be positive".into() });
    }

    let f = match f_kind.as_deref() {
        None | Some("const") => FSpec::Const,
        Some("ball_indicator") => FSpec::BallIndicator { eps: f_eps },
        Some("annulus_indicator") => FSpec::AnnulusIndicator { r0: f_r0, r1: f_r1 },
        Some("csv") => FSpec::Csv {
            path: f_path.ok_or_else(|| ConfigError::Missing("f.path".into()))?,
        },
        Some(other) => {
            return Err(ConfigError::BadValue {
                field: "f.kind".into(),
                msg: format!("unknown f kind `{other}`"),
            })
        }
    };

    let name = name.unwrap_or_else(|| mode.as_str().to_string());
    Ok(RunConfig { name, mode, beta, p_list, seed, domain, h, f, tol, max_iter, out_dir })
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
name = demo
mode = eigen-sweep
beta = 1.0
p_list = 4, 8, 16, 32
seed = 7

[domain]
generator = square
side = 1.0
h = 0.03125

[solver]
tol = 1e-7
max_iter = 5000

[output]
dir = results
";

    #[test]
    fn parses_sample() {
        let cfg = parse_config(SAMPLE).unwrap();
        assert_eq!(cfg.name, "demo");
        assert_eq!(cfg.mode, Mode::EigenSweep);
        assert_eq!(cfg.p_list, vec![4.0, 8.0, 16.0, 32.0]);
        assert_eq!(cfg.seed, 7);
        assert!(matches!(cfg.domain, DomainSpec::Square { side } if side == 1.0));
        assert_eq!(cfg.tol, 1e-7);
        assert_eq!(cfg.max_iter, 5000);
    }

    #[test]
    fn rejects_unknown_key_with_location() {
        let text = "mode = check\n[domain]\ngenerator = disk\nh = 0.1\nwobble = 3\n";
        let err = parse_config(text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("wobble") && msg.contains("line 5"), "{msg}");
    }

    #[test]
    fn rejects_nonpositive_beta_naming_field() {
        let text = "mode = check\nbeta = -1\n[domain]\ngenerator = disk\nh = 0.1\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.to_string().contains("beta"), "{err}");
    }

    #[test]
    fn rejects_decreasing_p_list() {
        let text = "mode = check\np_list = 8,4\n[domain]\ngenerator = disk\nh = 0.1\n";
        assert!(parse_config(text).is_err());
    }

    #[test]
    fn missing_mode_is_an_error() {
        assert!(matches!(parse_config("beta = 1\n"), Err(ConfigError::Missing(_))));
    }
}
