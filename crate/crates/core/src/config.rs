//! Experiment configuration: a flat `key = value` text format with `#`
//! comments, one pair per line, every key optional.

use crate::algebra::{make_default_rep, GammaRep, Mat2};
use crate::error::{Error, Result};
use crate::scalar::{cast, Scalar};
use num_complex::Complex;
use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DealiasMode {
    TwoThirds,
    Full,
    Off,
}

impl DealiasMode {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "two-thirds" => Some(Self::TwoThirds),
            "full" => Some(Self::Full),
            "off" => Some(Self::Off),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::TwoThirds => "two-thirds",
            Self::Full => "full",
            Self::Off => "off",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Gaussian,
    GaussianPair,
    Ring,
}

impl Profile {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gaussian" => Some(Self::Gaussian),
            "gaussian-pair" => Some(Self::GaussianPair),
            "ring" => Some(Self::Ring),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::GaussianPair => "gaussian-pair",
            Self::Ring => "ring",
        }
    }
}

/// The interaction matrix, either one of the named presets or a custom
/// row-major `re im` list of eight numbers.
#[derive(Debug, Clone, PartialEq)]
pub enum HMatrix {
    Gamma0,
    Identity,
    Zero,
    Custom([f64; 8]),
}

impl HMatrix {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "gamma0" => return Some(Self::Gamma0),
            "identity" => return Some(Self::Identity),
            "zero" => return Some(Self::Zero),
            _ => {}
        }
        let nums: Vec<f64> = s
            .split_whitespace()
            .map(|tok| tok.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .ok()?;
        if nums.len() == 8 {
            let mut a = [0.0; 8];
            a.copy_from_slice(&nums);
            Some(Self::Custom(a))
        } else {
            None
        }
    }

    pub fn to_mat2<T: Scalar>(&self) -> Mat2<T> {
        match self {
            Self::Gamma0 => make_default_rep::<T>(Mat2::zero()).gamma[0],
            Self::Identity => Mat2::identity(),
            Self::Zero => Mat2::zero(),
            Self::Custom(a) => Mat2::new(
                Complex::new(cast(a[0]), cast(a[1])),
                Complex::new(cast(a[2]), cast(a[3])),
                Complex::new(cast(a[4]), cast(a[5])),
                Complex::new(cast(a[6]), cast(a[7])),
            ),
        }
    }

    pub fn echo(&self) -> String {
        match self {
            Self::Gamma0 => "gamma0".into(),
            Self::Identity => "identity".into(),
            Self::Zero => "zero".into(),
            Self::Custom(a) => a
                .iter()
                .map(|v| format!("{v:.16e}"))
                .collect::<Vec<_>>()
                .join(" "),
        }
    }
}

/// Full experiment description. Defaults give a quick, well-resolved
/// massless run with the `γ0` cubic term.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub mass: f64,
    pub h_matrix: HMatrix,
    pub epsilon: f64,
    pub profile: Profile,
    pub width: f64,
    pub separation: f64,
    pub ring_radius: f64,
    pub n: usize,
    pub length: f64,
    /// Time step; zero selects the default `0.01 min(1, h)`.
    pub dt: f64,
    pub t_end: f64,
    /// Ghost weight exponent δ.
    pub delta: f64,
    pub dealias: DealiasMode,
    /// Time between diagnostics rows.
    pub cadence: f64,
    /// Time between field snapshots; zero keeps only the final state.
    pub snapshot_every: f64,
    /// Times at which a truncated scattering-state candidate is stored.
    pub psi_plus_times: Vec<f64>,
    pub seed: u64,
    /// Whether the running scattering integral is accumulated.
    pub scattering: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            mass: 0.0,
            h_matrix: HMatrix::Gamma0,
            epsilon: 0.05,
            profile: Profile::Gaussian,
            width: 1.5,
            separation: 8.0,
            ring_radius: 6.0,
            n: 128,
            length: 40.0,
            dt: 0.0,
            t_end: 5.0,
            delta: 0.1,
            dealias: DealiasMode::TwoThirds,
            cadence: 0.5,
            snapshot_every: 0.0,
            psi_plus_times: Vec::new(),
            seed: 0,
            scattering: true,
        }
    }
}

impl SimConfig {
    /// Effective time step: the configured one, or `0.01 min(1, h)`.
    pub fn dt_effective(&self) -> f64 {
        if self.dt > 0.0 {
            self.dt
        } else {
            let h = self.length / self.n as f64;
            0.01 * h.min(1.0)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::ConfigInvalid(msg));
        if self.n < 16 || !self.n.is_power_of_two() {
            return fail(format!("n must be a power of two >= 16, got {}", self.n));
        }
        if self.length <= 0.0 {
            return fail("length must be positive".into());
        }
        if self.mass < 0.0 {
            return fail("mass must be nonnegative".into());
        }
        if self.epsilon < 0.0 {
            return fail("epsilon must be nonnegative".into());
        }
        if self.dt < 0.0 {
            return fail("dt must be positive (or zero for the default)".into());
        }
        if self.t_end < 0.0 {
            return fail("t_end must be nonnegative".into());
        }
        if self.delta <= 0.0 {
            return fail(format!("delta must be positive, got {}", self.delta));
        }
        if self.width <= 0.0 {
            return fail("width must be positive".into());
        }
        let dt = self.dt_effective();
        if self.cadence < dt {
            return fail(format!(
                "cadence {} must be at least one time step {dt}",
                self.cadence
            ));
        }
        Ok(())
    }

    /// Build the gamma representation carrying this config's `H`.
    pub fn rep<T: Scalar>(&self) -> GammaRep<T> {
        make_default_rep(self.h_matrix.to_mat2())
    }

    /// Canonical text form; parses back to the same config.
    pub fn echo(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mass = {:.16e}", self.mass);
        let _ = writeln!(s, "h_matrix = {}", self.h_matrix.echo());
        let _ = writeln!(s, "epsilon = {:.16e}", self.epsilon);
        let _ = writeln!(s, "profile = {}", self.profile.name());
        let _ = writeln!(s, "width = {:.16e}", self.width);
        let _ = writeln!(s, "separation = {:.16e}", self.separation);
        let _ = writeln!(s, "ring_radius = {:.16e}", self.ring_radius);
        let _ = writeln!(s, "n = {}", self.n);
        let _ = writeln!(s, "length = {:.16e}", self.length);
        let _ = writeln!(s, "dt = {:.16e}", self.dt);
        let _ = writeln!(s, "t_end = {:.16e}", self.t_end);
        let _ = writeln!(s, "delta = {:.16e}", self.delta);
        let _ = writeln!(s, "dealias = {}", self.dealias.name());
        let _ = writeln!(s, "cadence = {:.16e}", self.cadence);
        let _ = writeln!(s, "snapshot_every = {:.16e}", self.snapshot_every);
        if !self.psi_plus_times.is_empty() {
            let list = self
                .psi_plus_times
                .iter()
                .map(|v| format!("{v:.16e}"))
                .collect::<Vec<_>>()
                .join(" ");
            let _ = writeln!(s, "psi_plus_times = {list}");
        }
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(
            s,
            "scattering = {}",
            if self.scattering { "on" } else { "off" }
        );
        s
    }
}

/// Parse the flat `key = value` format; errors carry 1-based line numbers.
pub fn parse_config(text: &str) -> Result<SimConfig> {
    let mut cfg = SimConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::ConfigParse {
            line: line_no,
            msg: format!("expected `key = value`, got `{line}`"),
        })?;
        let key = key.trim();
        let value = value.trim();
        let bad = |msg: String| Error::ConfigParse { line: line_no, msg };
        let parse_f64 = |v: &str| {
            v.parse::<f64>()
                .map_err(|_| bad(format!("`{key}` expects a number, got `{v}`")))
        };
        match key {
            "mass" => cfg.mass = parse_f64(value)?,
            "h_matrix" => {
                cfg.h_matrix = HMatrix::parse(value).ok_or_else(|| {
                    bad(format!(
                        "`h_matrix` expects gamma0|identity|zero or 8 numbers, got `{value}`"
                    ))
                })?
            }
            "epsilon" => cfg.epsilon = parse_f64(value)?,
            "profile" => {
                cfg.profile = Profile::parse(value)
                    .ok_or_else(|| bad(format!("unknown profile `{value}`")))?
            }
            "width" => cfg.width = parse_f64(value)?,
            "separation" => cfg.separation = parse_f64(value)?,
            "ring_radius" => cfg.ring_radius = parse_f64(value)?,
            "n" => {
                cfg.n = value
                    .parse::<usize>()
                    .map_err(|_| bad(format!("`n` expects an integer, got `{value}`")))?
            }
            "length" => cfg.length = parse_f64(value)?,
            "dt" => cfg.dt = parse_f64(value)?,
            "t_end" => cfg.t_end = parse_f64(value)?,
            "delta" => cfg.delta = parse_f64(value)?,
            "dealias" => {
                cfg.dealias = DealiasMode::parse(value)
                    .ok_or_else(|| bad(format!("unknown dealias mode `{value}`")))?
            }
            "cadence" => cfg.cadence = parse_f64(value)?,
            "snapshot_every" => cfg.snapshot_every = parse_f64(value)?,
            "psi_plus_times" => {
                cfg.psi_plus_times = value
                    .split_whitespace()
                    .map(|tok| {
                        tok.parse::<f64>()
                            .map_err(|_| bad(format!("bad time `{tok}` in psi_plus_times")))
                    })
                    .collect::<Result<_>>()?
            }
            "seed" => {
                cfg.seed = value
                    .parse::<u64>()
                    .map_err(|_| bad(format!("`seed` expects an integer, got `{value}`")))?
            }
            "scattering" => {
                cfg.scattering = match value {
                    "on" | "true" | "1" => true,
                    "off" | "false" | "0" => false,
                    _ => return Err(bad(format!("`scattering` expects on/off, got `{value}`"))),
                }
            }
            _ => return Err(bad(format!("unknown key `{key}`"))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_valid_defaults() {
        let cfg = parse_config("").unwrap();
        assert_eq!(cfg, SimConfig::default());
    }

    #[test]
    fn comments_and_blanks_ignored() {
        let cfg = parse_config("# a comment\n\n  n = 64  # trailing\nepsilon = 0.1\n").unwrap();
        assert_eq!(cfg.n, 64);
        assert_eq!(cfg.epsilon, 0.1);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_config("n = 64\nbogus_key = 1\n").unwrap_err();
        match err {
            Error::ConfigParse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other}"),
        }
        let err = parse_config("n = twelve\n").unwrap_err();
        match err {
            Error::ConfigParse { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn echo_round_trips() {
        let mut cfg = SimConfig::default();
        cfg.n = 64;
        cfg.mass = 0.25;
        cfg.h_matrix = HMatrix::Custom([1.0, 0.5, 0.0, -0.25, 0.125, 0.0, 2.0, 0.0]);
        cfg.psi_plus_times = vec![2.0, 4.0];
        cfg.dealias = DealiasMode::Full;
        let parsed = parse_config(&cfg.echo()).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn h_matrix_presets() {
        let g0 = HMatrix::Gamma0.to_mat2::<f64>();
        assert_eq!(g0.e[0][0].re, 1.0);
        assert_eq!(g0.e[1][1].re, -1.0);
        assert!(HMatrix::parse("1 0 0 0 0 0 1 0").is_some());
        assert!(HMatrix::parse("1 0 0").is_none());
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut cfg = SimConfig::default();
        cfg.delta = 0.0;
        assert!(cfg.validate().is_err());
        let mut cfg = SimConfig::default();
        cfg.n = 100;
        assert!(cfg.validate().is_err());
        let mut cfg = SimConfig::default();
        cfg.cadence = 1e-6;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn default_dt_follows_grid() {
        let mut cfg = SimConfig::default();
        cfg.n = 128;
        cfg.length = 40.0;
        // h = 0.3125 < 1, so dt = 0.01 h
        assert!((cfg.dt_effective() - 0.003125).abs() < 1e-15);
        cfg.length = 400.0;
        // h = 3.125 > 1, so dt = 0.01
        assert!((cfg.dt_effective() - 0.01).abs() < 1e-15);
    }
}
