//! Flat `key = value` experiment configuration.
//!
//! Values are resolved in three layers: per-experiment defaults, the config
//! file, then command-line overrides. Every layer goes through [`ExperimentConfig::set`]
//! so the same validation applies everywhere.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use kryrom::assembly::DEFAULT_DENSE_CAP;
use kryrom::krylov::TolScale;
use kryrom::rom::{BasisMethod, DtRule};

use crate::error::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    FomTiming,
    RomAccuracy,
    Convergence,
    Decay,
    Exactness,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::FomTiming,
        Experiment::RomAccuracy,
        Experiment::Convergence,
        Experiment::Decay,
        Experiment::Exactness,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Experiment::FomTiming => "fom-timing",
            Experiment::RomAccuracy => "rom-accuracy",
            Experiment::Convergence => "convergence",
            Experiment::Decay => "decay",
            Experiment::Exactness => "exactness",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL.into_iter().find(|e| e.as_str() == s).ok_or_else(|| format!("unknown experiment '{s}'"))
    }
}

/// Which source drives the solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceKind {
    /// The stationary quartic polynomial.
    Polynomial,
    /// The smooth manufactured solution, separated in time at Chebyshev nodes.
    Manufactured,
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceKind::Polynomial => "polynomial",
            SourceKind::Manufactured => "manufactured",
        })
    }
}

impl FromStr for SourceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "polynomial" => Ok(SourceKind::Polynomial),
            "manufactured" => Ok(SourceKind::Manufactured),
            _ => Err(format!("unknown source '{s}' (expected polynomial or manufactured)")),
        }
    }
}

/// Inclusive range of refinement levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LevelRange {
    pub first: u32,
    pub last: u32,
}

impl LevelRange {
    pub fn iter(&self) -> impl Iterator<Item = u32> {
        self.first..=self.last
    }

    pub fn len(&self) -> usize {
        (self.last - self.first + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

impl fmt::Display for LevelRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..{}", self.first, self.last)
    }
}

impl FromStr for LevelRange {
    type Err = String;

    /// `a..b` (inclusive) or a single level.
    fn from_str(s: &str) -> Result<Self, String> {
        let parse = |v: &str| v.trim().parse::<u32>().map_err(|_| format!("bad level '{v}'"));
        let (first, last) = match s.split_once("..") {
            Some((a, b)) => (parse(a)?, parse(b.trim_start_matches('='))?),
            None => {
                let l = parse(s)?;
                (l, l)
            }
        };
        if first > last {
            return Err(format!("empty level range {first}..{last}"));
        }
        Ok(LevelRange { first, last })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub dim: usize,
    pub degree: usize,
    pub levels: LevelRange,
    pub dt_rule: DtRule,
    /// Krylov length (`ell_max` for the adaptive method).
    pub ell: usize,
    pub tol_rank: f64,
    pub tol_svd: f64,
    pub tol_scale: TolScale,
    pub method: BasisMethod,
    pub source: SourceKind,
    /// Chebyshev nodes used to separate a time-dependent source.
    pub nodes: usize,
    pub t_final: f64,
    pub out: PathBuf,
    pub dense_cap: usize,
    /// Eigenmodes (0-based, ascending eigenvalue) mixed into the exactness source.
    pub modes: Vec<usize>,
    /// Timing repetitions; the fastest run is reported.
    pub repeats: usize,
    pub mesh_dump: bool,
    pub trajectory: bool,
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> ExperimentConfig {
        let base = ExperimentConfig {
            experiment,
            dim: 2,
            degree: 1,
            levels: LevelRange { first: 4, last: 7 },
            dt_rule: DtRule::GridSpacing,
            ell: 10,
            tol_rank: 1e-14,
            tol_svd: 1e-14,
            tol_scale: TolScale::Absolute,
            method: BasisMethod::Adaptive,
            source: SourceKind::Polynomial,
            nodes: 8,
            t_final: 1.0,
            out: PathBuf::from("out"),
            dense_cap: DEFAULT_DENSE_CAP,
            modes: vec![0, 1, 2, 4],
            repeats: 1,
            mesh_dump: false,
            trajectory: false,
        };
        match experiment {
            Experiment::FomTiming | Experiment::RomAccuracy => base,
            Experiment::Convergence => ExperimentConfig {
                levels: LevelRange { first: 3, last: 7 },
                dt_rule: DtRule::BalancedOrder,
                ell: 5,
                tol_rank: 1e-10,
                tol_svd: 1e-10,
                method: BasisMethod::BlockIsvd,
                source: SourceKind::Manufactured,
                ..base
            },
            Experiment::Decay => ExperimentConfig { levels: LevelRange { first: 6, last: 6 }, ell: 8, ..base },
            Experiment::Exactness => {
                ExperimentConfig { levels: LevelRange { first: 4, last: 4 }, tol_rank: 0.0, tol_svd: 0.0, ..base }
            }
        }
    }

    /// Defaults for `experiment`, then the file at `path` if given.
    pub fn load(experiment: Experiment, path: Option<&Path>) -> Result<ExperimentConfig, BenchError> {
        let mut cfg = ExperimentConfig::defaults(experiment);
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)
                .map_err(|e| BenchError::Config(format!("cannot read {}: {e}", path.display())))?;
            cfg.apply_text(&text)?;
        }
        Ok(cfg)
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), BenchError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| BenchError::ConfigLine {
                line: i + 1,
                msg: format!("expected key = value, got '{line}'"),
            })?;
            self.set(key.trim(), value.trim()).map_err(|e| match e {
                BenchError::Config(msg) => BenchError::ConfigLine { line: i + 1, msg },
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), BenchError> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T, BenchError> {
            v.parse().map_err(|_| BenchError::Config(format!("{key}: cannot parse '{v}'")))
        }
        fn tol(key: &str, v: &str) -> Result<f64, BenchError> {
            let t: f64 = num(key, v)?;
            if !(0.0..1.0).contains(&t) {
                return Err(BenchError::Config(format!("{key} must lie in [0, 1), got {t}")));
            }
            Ok(t)
        }
        let bad = |msg: String| BenchError::Config(format!("{key}: {msg}"));
        match key {
            "experiment" => {
                let e: Experiment = value.parse().map_err(bad)?;
                if e != self.experiment {
                    return Err(BenchError::Config(format!(
                        "config file is for '{e}' but the '{}' experiment was requested",
                        self.experiment
                    )));
                }
            }
            "dim" => {
                self.dim = num(key, value)?;
                if !(2..=3).contains(&self.dim) {
                    return Err(bad(format!("must be 2 or 3, got {}", self.dim)));
                }
            }
            "degree" => {
                self.degree = num(key, value)?;
                if !(1..=2).contains(&self.degree) {
                    return Err(bad(format!("must be 1 or 2, got {}", self.degree)));
                }
            }
            "levels" => self.levels = value.parse().map_err(bad)?,
            "dt_rule" => self.dt_rule = value.parse().map_err(|e: kryrom::Error| bad(e.to_string()))?,
            "ell" => {
                self.ell = num(key, value)?;
                if self.ell == 0 {
                    return Err(bad("must be at least 1".into()));
                }
            }
            "tol" | "tol_rank" => self.tol_rank = tol(key, value)?,
            "tol_svd" => self.tol_svd = tol(key, value)?,
            "tol_scale" => {
                self.tol_scale = match value {
                    "absolute" => TolScale::Absolute,
                    "relative" => TolScale::Relative,
                    _ => return Err(bad(format!("expected absolute or relative, got '{value}'"))),
                }
            }
            "method" => self.method = value.parse().map_err(|e: kryrom::Error| bad(e.to_string()))?,
            "source" => self.source = value.parse().map_err(bad)?,
            "nodes" | "m" => {
                self.nodes = num(key, value)?;
                if self.nodes == 0 {
                    return Err(bad("must be at least 1".into()));
                }
            }
            "t_final" => {
                self.t_final = num(key, value)?;
                if !(self.t_final > 0.0) {
                    return Err(bad(format!("must be positive, got {}", self.t_final)));
                }
            }
            "out" => self.out = PathBuf::from(value),
            "dense_cap" => self.dense_cap = num(key, value)?,
            "modes" => {
                self.modes = value.split(',').map(|v| num::<usize>(key, v.trim())).collect::<Result<_, _>>()?;
                if self.modes.is_empty() {
                    return Err(bad("needs at least one mode".into()));
                }
            }
            "repeats" => self.repeats = num::<usize>(key, value)?.max(1),
            "mesh_dump" => self.mesh_dump = num(key, value)?,
            "trajectory" => self.trajectory = num(key, value)?,
            _ => return Err(BenchError::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// All settings as `(key, value)` pairs, in file syntax.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("experiment", self.experiment.to_string()),
            ("dim", self.dim.to_string()),
            ("degree", self.degree.to_string()),
            ("levels", self.levels.to_string()),
            ("dt_rule", self.dt_rule.to_string()),
            ("ell", self.ell.to_string()),
            ("tol_rank", format!("{:e}", self.tol_rank)),
            ("tol_svd", format!("{:e}", self.tol_svd)),
            (
                "tol_scale",
                match self.tol_scale {
                    TolScale::Absolute => "absolute",
                    TolScale::Relative => "relative",
                }
                .to_string(),
            ),
            ("method", self.method.to_string()),
            ("source", self.source.to_string()),
            ("nodes", self.nodes.to_string()),
            ("t_final", self.t_final.to_string()),
            ("out", self.out.display().to_string()),
            ("dense_cap", self.dense_cap.to_string()),
            ("modes", self.modes.iter().map(|m| m.to_string()).collect::<Vec<_>>().join(",")),
            ("repeats", self.repeats.to_string()),
            ("mesh_dump", self.mesh_dump.to_string()),
            ("trajectory", self.trajectory.to_string()),
        ]
    }

    pub fn to_text(&self) -> String {
        self.pairs().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_ranges() {
        assert_eq!("4..7".parse::<LevelRange>().unwrap(), LevelRange { first: 4, last: 7 });
        assert_eq!("3..=5".parse::<LevelRange>().unwrap(), LevelRange { first: 3, last: 5 });
        assert_eq!("6".parse::<LevelRange>().unwrap().len(), 1);
        assert!("7..4".parse::<LevelRange>().is_err());
        assert!("a..4".parse::<LevelRange>().is_err());
    }

    #[test]
    fn file_values_and_comments() {
        let mut cfg = ExperimentConfig::defaults(Experiment::Convergence);
        cfg.apply_text(
            "# k = 2 run\nexperiment = convergence\ndegree = 2  # quadratic\n\nlevels = 3..6\ntol = 1e-12\n",
        )
        .unwrap();
        assert_eq!(cfg.degree, 2);
        assert_eq!(cfg.levels, LevelRange { first: 3, last: 6 });
        assert_eq!(cfg.tol_rank, 1e-12);
        assert_eq!(cfg.method, BasisMethod::BlockIsvd);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let mut cfg = ExperimentConfig::defaults(Experiment::Decay);
        let err = cfg.apply_text("dim = 2\ntol = 1.5\n").unwrap_err();
        assert!(matches!(err, BenchError::ConfigLine { line: 2, .. }), "{err}");
        assert!(cfg.apply_text("bogus = 1").is_err());
        assert!(cfg.apply_text("no equals sign").is_err());
        assert!(cfg.apply_text("experiment = convergence").is_err());
        assert!(cfg.apply_text("t_final = 0").is_err());
        assert!(cfg.apply_text("dim = 4").is_err());
    }

    #[test]
    fn text_round_trip() {
        for e in Experiment::ALL {
            let mut cfg = ExperimentConfig::defaults(e);
            cfg.modes = vec![1, 3];
            cfg.dt_rule = DtRule::Fixed(0.125);
            let mut back = ExperimentConfig::defaults(e);
            back.apply_text(&cfg.to_text()).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn experiment_names() {
        for e in Experiment::ALL {
            assert_eq!(e.as_str().parse::<Experiment>().unwrap(), e);
        }
    }
}
