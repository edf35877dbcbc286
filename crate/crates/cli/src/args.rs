//! Command-line flags and their merging with configuration files.
//!
//! A configuration file holds `key = value` lines whose keys mirror the long
//! flags with `-` replaced by `_` (`tol_abs`, `theta0`, ...). Flags given on
//! the command line take precedence.

use crate::error::{CliError, CliResult};
use clap::{Args, Parser, Subcommand};
use rubberroll_core::integrate::Tolerances;
use rubberroll_core::model::{parse_config, parse_number, Params};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Parser)]
#[command(
    name = "rubberroll",
    version,
    about = "Rubber rolling of an ellipsoid of revolution on a plane"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a trajectory and write it as CSV
    #[command(visible_alias = "trajectory")]
    Simulate(SimulateArgs),
    /// Build the bifurcation diagram on the (kappa, energy) plane as JSON
    Bifurcation(BifurcationArgs),
    /// Rotation numbers on a grid of levels, as CSV
    RotationNumber(RotationArgs),
    /// Resonance curves N(kappa, energy) = -n, as CSV
    Resonance(ResonanceArgs),
    /// Classify the motion on a level set, as JSON
    Classify(ClassifyArgs),
    /// Run the self-verification suite
    Verify(VerifyArgs),
}

/// Options shared by all subcommands.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// Offset of the center of mass along the axis, in polar semiaxes [0, 1]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Ratio of equatorial to polar semiaxis
    #[arg(long)]
    pub beta: Option<f64>,
    /// Ratio of axial to equatorial moment of inertia (0, 2]
    #[arg(long)]
    pub nu: Option<f64>,
    /// m b3^2 / i1
    #[arg(long)]
    pub eta: Option<f64>,
    /// Configuration file with key = value lines
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Absolute integration tolerance
    #[arg(long)]
    pub tol_abs: Option<f64>,
    /// Relative integration tolerance
    #[arg(long)]
    pub tol_rel: Option<f64>,
    /// Maximum number of integration steps
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// Worker threads for grid computations
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output file (standard output when omitted or `-`)
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: Common,
    /// Vertical angular momentum integral
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    /// Energy level; sets the initial p_theta >= 0
    #[arg(long, allow_hyphen_values = true)]
    pub energy: Option<f64>,
    /// Energy above the minimum for rolling over both vertices; sets the initial p_theta >= 0
    #[arg(long)]
    pub energy_above_min: Option<f64>,
    /// Initial nutation angle
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: Option<f64>,
    /// Initial momentum conjugate to theta
    #[arg(long, allow_hyphen_values = true)]
    pub ptheta0: Option<f64>,
    /// Initial angular velocity in the body frame, `x,y,z` (full system)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub omega: Option<Vec<f64>>,
    /// Initial vertical unit vector in the body frame, `x,y,z` (full system)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub gamma: Option<Vec<f64>>,
    /// Final time
    #[arg(long)]
    pub tmax: Option<f64>,
    /// Output spacing
    #[arg(long)]
    pub dt: Option<f64>,
    /// Initial precession angle
    #[arg(long, allow_hyphen_values = true)]
    pub psi0: Option<f64>,
    /// Initial proper rotation angle (reduced system)
    #[arg(long, allow_hyphen_values = true)]
    pub phi0: Option<f64>,
    /// Initial x of the center of mass
    #[arg(long, allow_hyphen_values = true)]
    pub x0: Option<f64>,
    /// Initial y of the center of mass
    #[arg(long, allow_hyphen_values = true)]
    pub y0: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct BifurcationArgs {
    #[command(flatten)]
    pub common: Common,
    /// Curves are truncated where |kappa| exceeds this value
    #[arg(long)]
    pub kappa_limit: Option<f64>,
    /// Largest chord between consecutive curve samples
    #[arg(long)]
    pub max_chord: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct RotationArgs {
    #[command(flatten)]
    pub common: Common,
    /// Values of kappa, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub kappa: Option<Vec<f64>>,
    /// Grid of kappa values as `start:end:count`
    #[arg(long, allow_hyphen_values = true)]
    pub kappa_range: Option<String>,
    /// Energy levels, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub energy: Option<Vec<f64>>,
    /// Grid of energy levels as `start:end:count`
    #[arg(long, allow_hyphen_values = true)]
    pub energy_range: Option<String>,
    /// Turning points (p_theta = 0) instead of energy levels, comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta0: Option<Vec<f64>>,
    /// Component of the level set, counted from small theta
    #[arg(long)]
    pub branch: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct ResonanceArgs {
    #[command(flatten)]
    pub common: Common,
    /// Resonance orders n (N = -n), comma separated
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub n: Option<Vec<i64>>,
    /// Grid of kappa values as `start:end:count`
    #[arg(long, allow_hyphen_values = true)]
    pub kappa_range: Option<String>,
    /// Potential well, counted from small theta
    #[arg(long)]
    pub branch: Option<usize>,
    /// Extent of each energy slice above the highest saddle level
    #[arg(long)]
    pub eps_span: Option<f64>,
    /// Uniform samples per energy slice
    #[arg(long)]
    pub eps_samples: Option<usize>,
    /// Also locate the largest kappa of the n = 0 curve (reported on standard error)
    #[arg(long)]
    pub kappa_max: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, allow_hyphen_values = true)]
    pub kappa: Option<f64>,
    /// Energy level
    #[arg(long, allow_hyphen_values = true)]
    pub energy: Option<f64>,
    /// A point of the orbit instead of the energy
    #[arg(long, allow_hyphen_values = true)]
    pub theta0: Option<f64>,
    /// Momentum at theta0
    #[arg(long, allow_hyphen_values = true)]
    pub ptheta0: Option<f64>,
    /// Component of the level set, counted from small theta
    #[arg(long)]
    pub branch: Option<usize>,
    /// Fixed tolerance for accepting a rational rotation number
    #[arg(long)]
    pub rational_tol: Option<f64>,
    /// Largest denominator of a rational rotation number
    #[arg(long)]
    pub q_max: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: Common,
    /// Only the sub-second checks
    #[arg(long)]
    pub quick: bool,
    /// Sign of the cross term of B used by the reduced-energy check (derived|printed)
    #[arg(long)]
    pub b_sign: Option<String>,
    /// Seed of the random test states
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Flags merged with an optional configuration file.
#[derive(Debug, Clone)]
pub struct Settings {
    pub common: Common,
    map: BTreeMap<String, String>,
}

impl Settings {
    pub fn load(common: &Common) -> CliResult<Self> {
        let map = match &common.config {
            Some(path) => read_config(path)?,
            None => BTreeMap::new(),
        };
        Ok(Self {
            common: common.clone(),
            map,
        })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    /// A number from the flag or else the configuration file.
    pub fn f64(&self, key: &str, flag: Option<f64>) -> CliResult<Option<f64>> {
        match (flag, self.raw(key)) {
            (Some(v), _) => Ok(Some(v)),
            (None, Some(s)) => Ok(Some(parse_number::<f64>(key, s)?)),
            (None, None) => Ok(None),
        }
    }

    pub fn usize(&self, key: &str, flag: Option<usize>) -> CliResult<Option<usize>> {
        match (flag, self.raw(key)) {
            (Some(v), _) => Ok(Some(v)),
            (None, Some(s)) => s.parse().map(Some).map_err(|_| {
                CliError::Input(format!(
                    "configuration key `{key}`: expected a non-negative integer, got `{s}`"
                ))
            }),
            (None, None) => Ok(None),
        }
    }

    pub fn string(&self, key: &str, flag: Option<&str>) -> Option<String> {
        flag.map(str::to_string)
            .or_else(|| self.raw(key).map(str::to_string))
    }

    /// A comma-separated list of numbers.
    pub fn list(&self, key: &str, flag: Option<&[f64]>) -> CliResult<Option<Vec<f64>>> {
        if let Some(v) = flag {
            return Ok(Some(v.to_vec()));
        }
        match self.raw(key) {
            Some(s) => s
                .split(',')
                .map(|x| Ok(parse_number::<f64>(key, x.trim())?))
                .collect::<CliResult<Vec<_>>>()
                .map(Some),
            None => Ok(None),
        }
    }

    pub fn flag(&self, key: &str, flag: bool) -> bool {
        flag || matches!(self.raw(key), Some("true") | Some("1") | Some("yes"))
    }

    /// The four dimensionless parameters; all are required unless defaults
    /// are supplied.
    pub fn params(&self, defaults: Option<Params>) -> CliResult<Params> {
        let c = &self.common;
        let pick = |key: &str, flag: Option<f64>, dflt: Option<f64>| -> CliResult<f64> {
            self.f64(key, flag)?.or(dflt).ok_or_else(|| {
                CliError::Input(format!(
                    "missing required parameter --{key} (give it as a flag or in --config)"
                ))
            })
        };
        let d = defaults;
        let p = Params::new(
            pick("alpha", c.alpha, d.map(|p| p.alpha))?,
            pick("beta", c.beta, d.map(|p| p.beta))?,
            pick("nu", c.nu, d.map(|p| p.nu))?,
            pick("eta", c.eta, d.map(|p| p.eta))?,
        )?;
        Ok(p)
    }

    pub fn tolerances(&self) -> CliResult<Tolerances> {
        let mut tol = Tolerances::default();
        if let Some(a) = self.f64("tol_abs", self.common.tol_abs)? {
            tol.abs = a;
        }
        if let Some(r) = self.f64("tol_rel", self.common.tol_rel)? {
            tol.rel = r;
        }
        if let Some(m) = self.usize("max_steps", self.common.max_steps)? {
            tol.max_steps = m;
        }
        if !(tol.abs > 0.0 && tol.rel >= 0.0 && tol.abs.is_finite() && tol.rel.is_finite()) {
            return Err(CliError::Input(format!(
                "tolerances must be positive (tol_abs = {}, tol_rel = {})",
                tol.abs, tol.rel
            )));
        }
        Ok(tol)
    }

    pub fn out(&self) -> Option<PathBuf> {
        self.common
            .out
            .clone()
            .or_else(|| self.raw("out").map(PathBuf::from))
    }

    pub fn jobs(&self) -> CliResult<Option<usize>> {
        self.usize("jobs", self.common.jobs)
    }
}

fn read_config(path: &Path) -> CliResult<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path).map_err(|e| {
        CliError::Input(format!(
            "cannot read configuration file {}: {e}",
            path.display()
        ))
    })?;
    Ok(parse_config(&text)?)
}

/// Parses `start:end:count` into `count` evenly spaced values.
pub fn parse_range(range: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = range.split(':').collect();
    let bad = || {
        CliError::Input(format!(
            "range `{range}` must have the form start:end:count"
        ))
    };
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if n == 0 || !a.is_finite() || !b.is_finite() {
        return Err(bad());
    }
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("0:1:3").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_range("-1:1:1").unwrap(), vec![-1.0]);
        assert!(parse_range("0:1").is_err());
        assert!(parse_range("0:1:0").is_err());
    }

    #[test]
    fn flags_override_configuration() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(
            &path,
            "alpha = 0.25\nbeta = 2\nnu = 1\neta = 1\n# comment\ntol_abs = 1e-9\n",
        )
        .unwrap();
        let common = Common {
            beta: Some(3.0),
            config: Some(path),
            ..Default::default()
        };
        let s = Settings::load(&common).unwrap();
        let p = s.params(None).unwrap();
        assert_eq!((p.alpha, p.beta, p.nu, p.eta), (0.25, 3.0, 1.0, 1.0));
        assert_eq!(s.tolerances().unwrap().abs, 1e-9);
    }

    #[test]
    fn missing_parameter_is_reported() {
        let s = Settings::load(&Common {
            alpha: Some(0.5),
            ..Default::default()
        })
        .unwrap();
        let err = s.params(None).unwrap_err();
        assert!(err.to_string().contains("--beta"));
    }
}
