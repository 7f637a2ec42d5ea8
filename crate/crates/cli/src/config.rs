//! `key = value` configuration files and their merge with command-line
//! flags.
//!
//! Precedence, highest first: command-line flag, the `OUTPUT_DIR`
//! environment variable (output directory only), the config file, the
//! built-in default. Keys may be spelled with `-` or `_`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fracsol_core::continuation::BranchOptions;
use fracsol_core::ground_state::{ProblemSpec, SolverOptions};
use fracsol_core::linearized::EigenOptions;
use fracsol_core::GridSpec;
use serde_json::{json, Value};

use crate::error::{usage, HarnessError, Result};

pub const DEFAULT_OUTPUT_DIR: &str = "fracsol-out";
pub const OUTPUT_DIR_ENV: &str = "OUTPUT_DIR";

#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    origin: String,
    entries: BTreeMap<String, (usize, String)>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Blank lines and `#` comments are skipped; every other line must be
    /// `key = value`.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| HarnessError::Usage(format!("{origin}:{}: expected `key = value`", k + 1)))?;
            let key = normalize(key.trim());
            if key.is_empty() {
                return Err(HarnessError::Usage(format!("{origin}:{}: empty key", k + 1)));
            }
            if entries.insert(key.clone(), (k + 1, value.trim().to_string())).is_some() {
                return Err(HarnessError::Usage(format!("{origin}:{}: duplicate key `{key}`", k + 1)));
            }
        }
        Ok(ConfigFile { origin: origin.to_string(), entries })
    }

    pub fn from_option(path: Option<&Path>) -> Result<Self> {
        path.map_or_else(|| Ok(ConfigFile::default()), ConfigFile::load)
    }

    /// Removes and parses `key`.
    pub fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        let Some((line, value)) = self.entries.remove(key) else {
            return Ok(None);
        };
        value
            .parse()
            .map(Some)
            .map_err(|_| HarnessError::Usage(format!("{}:{line}: cannot parse `{key} = {value}`", self.origin)))
    }

    /// `cli`, else the file entry, else `default`.
    pub fn pick<T: FromStr>(&mut self, cli: Option<T>, key: &str, default: T) -> Result<T> {
        let file = self.take(key)?;
        Ok(cli.or(file).unwrap_or(default))
    }

    /// Fails on keys the command did not consume.
    pub fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((key, (line, _))) => Err(HarnessError::Usage(format!("{}:{line}: unknown key `{key}`", self.origin))),
        }
    }
}

fn normalize(key: &str) -> String {
    key.replace('-', "_").to_ascii_lowercase()
}

pub fn output_dir(cli: Option<PathBuf>, file: &mut ConfigFile) -> Result<PathBuf> {
    let from_file: Option<PathBuf> = file.take("output_dir")?;
    let from_env = std::env::var_os(OUTPUT_DIR_ENV).filter(|v| !v.is_empty()).map(PathBuf::from);
    Ok(cli.or(from_env).or(from_file).unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR)))
}

/// Raw problem parameters before validation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemParams {
    pub dims: usize,
    pub s: f64,
    pub p: f64,
    pub points: usize,
    pub half_width: f64,
}

impl ProblemParams {
    pub fn spec(&self) -> Result<ProblemSpec> {
        let grid = GridSpec::new(self.dims, self.points, self.half_width).map_err(usage)?;
        ProblemSpec::new(grid, self.s, self.p).map_err(usage)
    }

    pub fn at_order(&self, s: f64) -> ProblemParams {
        ProblemParams { s, ..*self }
    }

    fn echo(&self, out: &mut BTreeMap<String, Value>) {
        out.insert("dim".into(), json!(self.dims));
        out.insert("s".into(), json!(self.s));
        out.insert("p".into(), json!(self.p));
        out.insert("points".into(), json!(self.points));
        out.insert("box".into(), json!(self.half_width));
    }
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub problem: ProblemSpec,
    pub params: ProblemParams,
    pub init_width: f64,
    pub solver: SolverOptions,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub params: ProblemParams,
    pub s_values: Vec<f64>,
    pub zero_tol: f64,
    pub init_width: f64,
    pub solver: SolverOptions,
    pub eigen: EigenOptions,
}

#[derive(Debug, Clone)]
pub struct SpectrumConfig {
    pub problem: ProblemSpec,
    pub params: ProblemParams,
    pub zero_tol: f64,
    pub init_width: f64,
    pub solver: SolverOptions,
    pub eigen: EigenOptions,
}

#[derive(Debug, Clone)]
pub struct BranchConfig {
    pub params: ProblemParams,
    pub s_values: Vec<f64>,
    pub options: BranchOptions,
    pub uniqueness_tol: f64,
    pub init_width: f64,
    pub solver: SolverOptions,
}

#[derive(Debug, Clone)]
pub struct ExtendConfig {
    /// Ground state used by the form and Rayleigh checks.
    pub params: ProblemParams,
    pub extent: f64,
    pub levels: usize,
    pub samples: u64,
    pub seed: u64,
    pub init_width: f64,
    pub solver: SolverOptions,
}

#[derive(Debug, Clone, Copy)]
pub struct IneqConfig {
    pub samples: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct AcceptConfig {
    pub seed: u64,
}

/// Evenly spaced values from `from` to `to` inclusive, rounded to 12
/// decimals so that `0.7 + 0.05 k` prints as written.
pub fn s_grid(from: f64, to: f64, steps: usize) -> Result<Vec<f64>> {
    if steps == 0 {
        return Err(HarnessError::Usage("steps must be at least 1".into()));
    }
    if !(from.is_finite() && to.is_finite()) {
        return Err(HarnessError::Usage("s range must be finite".into()));
    }
    if steps == 1 {
        return Ok(vec![from]);
    }
    let round = |v: f64| (v * 1e12).round() / 1e12;
    Ok((0..steps)
        .map(|k| round(from + (to - from) * k as f64 / (steps - 1) as f64))
        .collect())
}

pub fn check_zero_tol(zero_tol: f64) -> Result<()> {
    if zero_tol >= 0.0 && zero_tol.is_finite() {
        Ok(())
    } else {
        Err(HarnessError::Usage(format!("zero_tol must be a finite non-negative number (got {zero_tol})")))
    }
}

pub fn check_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(HarnessError::Usage(format!("{name} must be positive (got {value})")))
    }
}

/// Resolved configuration echoed into the manifest.
pub trait Echo {
    fn echo(&self) -> BTreeMap<String, Value>;
}

impl Echo for SolveConfig {
    fn echo(&self) -> BTreeMap<String, Value> {
        let mut m = BTreeMap::new();
        self.params.echo(&mut m);
        m.insert("init_width".into(), json!(self.init_width));
        m.insert("residual_tol".into(), json!(self.solver.residual_tol));
        m.insert("max_iter".into(), json!(self.solver.max_iter));
        m
    }
}

impl Echo for SweepConfig {
    fn echo(&self) -> BTreeMap<String, Value> {
        let mut m = BTreeMap::new();
        self.params.echo(&mut m);
        m.remove("s");
        m.insert("s_values".into(), json!(self.s_values));
        m.insert("zero_tol".into(), json!(self.zero_tol));
        m.insert("seed".into(), json!(self.eigen.seed));
        m.insert("init_width".into(), json!(self.init_width));
        m
    }
}

impl Echo for SpectrumConfig {
    fn echo(&self) -> BTreeMap<String, Value> {
        let mut m = BTreeMap::new();
        self.params.echo(&mut m);
        m.insert("zero_tol".into(), json!(self.zero_tol));
        m.insert("seed".into(), json!(self.eigen.seed));
        m.insert("lanczos_steps".into(), json!(self.eigen.lanczos_steps));
        m.insert("init_width".into(), json!(self.init_width));
        m
    }
}

impl Echo for BranchConfig {
    fn echo(&self) -> BTreeMap<String, Value> {
        let mut m = BTreeMap::new();
        self.params.echo(&mut m);
        m.remove("s");
        m.insert("s_values".into(), json!(self.s_values));
        m.insert("r0".into(), json!(self.options.r0));
        m.insert("tol".into(), json!(self.options.tol));
        m.insert("uniqueness_tol".into(), json!(self.uniqueness_tol));
        m.insert("init_width".into(), json!(self.init_width));
        m
    }
}

impl Echo for ExtendConfig {
    fn echo(&self) -> BTreeMap<String, Value> {
        let mut m = BTreeMap::new();
        self.params.echo(&mut m);
        m.insert("extent".into(), json!(self.extent));
        m.insert("levels".into(), json!(self.levels));
        m.insert("samples".into(), json!(self.samples));
        m.insert("seed".into(), json!(self.seed));
        m
    }
}

impl Echo for IneqConfig {
    fn echo(&self) -> BTreeMap<String, Value> {
        BTreeMap::from([("samples".into(), json!(self.samples)), ("seed".into(), json!(self.seed))])
    }
}

impl Echo for AcceptConfig {
    fn echo(&self) -> BTreeMap<String, Value> {
        BTreeMap::from([("seed".into(), json!(self.seed))])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_dashes() {
        let mut f = ConfigFile::parse("# run\ns-from = 0.7 # lower end\n\npoints=64\n", "cfg").unwrap();
        assert_eq!(f.take::<f64>("s_from").unwrap(), Some(0.7));
        assert_eq!(f.pick(None, "points", 128usize).unwrap(), 64);
        assert_eq!(f.pick(Some(32usize), "points", 128).unwrap(), 32);
        f.finish().unwrap();
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(ConfigFile::parse("points 64", "cfg").is_err());
        assert!(ConfigFile::parse("a = 1\na = 2", "cfg").is_err());
        let mut f = ConfigFile::parse("points = many", "cfg").unwrap();
        assert!(f.take::<usize>("points").is_err());
    }

    #[test]
    fn leftover_keys_are_reported() {
        let f = ConfigFile::parse("colour = blue", "cfg").unwrap();
        let err = f.finish().unwrap_err();
        assert!(err.to_string().contains("unknown key `colour`"));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn s_grid_hits_the_endpoints() {
        let g = s_grid(0.7, 1.0, 7).unwrap();
        assert_eq!(g, vec![0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 1.0]);
        assert_eq!(s_grid(0.9, 0.9, 1).unwrap(), vec![0.9]);
        assert!(s_grid(0.7, 1.0, 0).is_err());
    }
}
