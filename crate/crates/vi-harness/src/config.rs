//! Run configuration: JSON config files, built-in defaults and the merge
//! with command-line overrides. Precedence is defaults < file < flags.

use serde::Deserialize;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Alg1,
    Alg2,
    Korpelevich,
    Tseng,
    Thong,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Alg1,
        Algorithm::Alg2,
        Algorithm::Korpelevich,
        Algorithm::Tseng,
        Algorithm::Thong,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Alg1 => "alg1",
            Algorithm::Alg2 => "alg2",
            Algorithm::Korpelevich => "korpelevich",
            Algorithm::Tseng => "tseng",
            Algorithm::Thong => "thong",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alg1" => Ok(Algorithm::Alg1),
            "alg2" => Ok(Algorithm::Alg2),
            "korpelevich" => Ok(Algorithm::Korpelevich),
            "tseng" => Ok(Algorithm::Tseng),
            "thong" => Ok(Algorithm::Thong),
            other => Err(format!(
                "unknown algorithm '{other}'; expected one of alg1, alg2, korpelevich, tseng, thong"
            )),
        }
    }
}

/// The optional JSON config file. Every field may be omitted; unknown
/// fields are rejected so typos fail loudly.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub problem: Option<String>,
    pub algorithm: Option<String>,
    pub x0: Option<Vec<f64>>,
    pub max_iter: Option<usize>,
    pub tol_step: Option<f64>,
    pub tol_residual: Option<f64>,
    pub seed: Option<u64>,
    pub strict_paper: Option<bool>,
    pub lambda: Option<f64>,
    pub r: Option<f64>,
    pub trace: Option<PathBuf>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("bad config {}: {e}", path.display()))
    }
}

/// Fully resolved settings for one run.
#[derive(Clone, Debug)]
pub struct Settings {
    pub problem: String,
    pub algorithm: Algorithm,
    pub x0: Option<Vec<f64>>,
    pub max_iter: usize,
    pub tol_step: f64,
    pub tol_residual: f64,
    pub seed: u64,
    pub strict_paper: bool,
    pub lambda: Option<f64>,
    pub r: Option<f64>,
    pub trace: Option<PathBuf>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            problem: String::new(),
            algorithm: Algorithm::Alg1,
            x0: None,
            max_iter: 500,
            tol_step: 1e-10,
            tol_residual: 1e-8,
            seed: 0,
            strict_paper: false,
            lambda: None,
            r: None,
            trace: None,
        }
    }
}

/// Command-line overrides in the same shape as the file config.
#[derive(Debug, Default)]
pub struct Overrides {
    pub problem: Option<String>,
    pub algorithm: Option<Algorithm>,
    pub x0: Option<Vec<f64>>,
    pub max_iter: Option<usize>,
    pub tol_step: Option<f64>,
    pub tol_residual: Option<f64>,
    pub seed: Option<u64>,
    pub strict_paper: bool,
    pub lambda: Option<f64>,
    pub r: Option<f64>,
    pub trace: Option<PathBuf>,
}

/// Merge defaults, an optional config file and the command line into one
/// settings block. The problem id and algorithm must be present somewhere.
pub fn resolve(file: Option<FileConfig>, cli: Overrides) -> Result<Settings, String> {
    let mut s = Settings::default();
    if let Some(f) = file {
        if let Some(v) = f.problem {
            s.problem = v;
        }
        if let Some(v) = f.algorithm {
            s.algorithm = v.parse()?;
        }
        if let Some(v) = f.x0 {
            s.x0 = Some(v);
        }
        if let Some(v) = f.max_iter {
            s.max_iter = v;
        }
        if let Some(v) = f.tol_step {
            s.tol_step = v;
        }
        if let Some(v) = f.tol_residual {
            s.tol_residual = v;
        }
        if let Some(v) = f.seed {
            s.seed = v;
        }
        if let Some(v) = f.strict_paper {
            s.strict_paper = v;
        }
        if let Some(v) = f.lambda {
            s.lambda = Some(v);
        }
        if let Some(v) = f.r {
            s.r = Some(v);
        }
        if let Some(v) = f.trace {
            s.trace = Some(v);
        }
    }
    if let Some(v) = cli.problem {
        s.problem = v;
    }
    if let Some(v) = cli.algorithm {
        s.algorithm = v;
    }
    if let Some(v) = cli.x0 {
        s.x0 = Some(v);
    }
    if let Some(v) = cli.max_iter {
        s.max_iter = v;
    }
    if let Some(v) = cli.tol_step {
        s.tol_step = v;
    }
    if let Some(v) = cli.tol_residual {
        s.tol_residual = v;
    }
    if let Some(v) = cli.seed {
        s.seed = v;
    }
    if cli.strict_paper {
        s.strict_paper = true;
    }
    if let Some(v) = cli.lambda {
        s.lambda = Some(v);
    }
    if let Some(v) = cli.r {
        s.r = Some(v);
    }
    if let Some(v) = cli.trace {
        s.trace = Some(v);
    }
    if s.problem.is_empty() {
        return Err("no problem selected; pass --problem or set it in the config file".into());
    }
    Ok(s)
}

/// Parse a semicolon-separated coordinate list, e.g. `"1.5;-2"`.
pub fn parse_coords(s: &str) -> Result<Vec<f64>, String> {
    s.split(';')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad coordinate '{t}': {e}"))
        })
        .collect()
}
