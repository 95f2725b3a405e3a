use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analytic::{TvsParams, LAMBDA};
use crate::chaos::SIGMA_MAX;
use crate::lattice::{MAX_RESOLUTION, MIN_RESOLUTION};
use crate::tvs::RadiusMode;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ExitLaw,
    Covariance,
    ChaosMoments,
    ConditionalOnePoint,
    ConditionalThreePoint,
    Dimension,
    OnePoint,
    TwoPoint,
    Minkowski,
    ContentLemma,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 10] = [
        ExperimentKind::ExitLaw,
        ExperimentKind::Covariance,
        ExperimentKind::ChaosMoments,
        ExperimentKind::ConditionalOnePoint,
        ExperimentKind::ConditionalThreePoint,
        ExperimentKind::Dimension,
        ExperimentKind::OnePoint,
        ExperimentKind::TwoPoint,
        ExperimentKind::Minkowski,
        ExperimentKind::ContentLemma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ExitLaw => "exit-law",
            ExperimentKind::Covariance => "covariance",
            ExperimentKind::ChaosMoments => "chaos-moments",
            ExperimentKind::ConditionalOnePoint => "conditional-one-point",
            ExperimentKind::ConditionalThreePoint => "conditional-three-point",
            ExperimentKind::Dimension => "dimension",
            ExperimentKind::OnePoint => "one-point",
            ExperimentKind::TwoPoint => "two-point",
            ExperimentKind::Minkowski => "minkowski",
            ExperimentKind::ContentLemma => "content-lemma",
        }
    }

    fn uses_lattice(self) -> bool {
        !matches!(self, ExperimentKind::ExitLaw | ExperimentKind::ContentLemma)
    }

    fn uses_chaos(self) -> bool {
        matches!(
            self,
            ExperimentKind::ChaosMoments | ExperimentKind::ConditionalOnePoint | ExperimentKind::ConditionalThreePoint
        )
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config {
                key: "experiment".into(),
                reason: format!(
                    "unknown experiment `{s}`; valid names: {}",
                    Self::ALL.map(|k| k.name()).join(", ")
                ),
            })
    }
}

/// Where per-node conformal radii come from in the minkowski and
/// conditional-one-point experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadiusChoice {
    Exact,
    /// Distance to the set times a factor calibrated on a subsample per sample.
    Koebe,
}

/// Nodes per sample used to calibrate the Koebe factor.
pub const KOEBE_CALIBRATION_NODES: usize = 32;

impl RadiusChoice {
    pub(crate) fn mode(self, factor: f64) -> RadiusMode {
        match self {
            RadiusChoice::Exact => RadiusMode::Exact,
            RadiusChoice::Koebe => RadiusMode::Koebe { factor },
        }
    }
}

/// Flat key=value configuration.
///
/// | key | meaning | default |
/// |---|---|---|
/// | `experiment` | one of [`ExperimentKind::ALL`] | required |
/// | `a`, `b` | levels of the band `[−a, b]` in units of λ = π/2; `a + b ≥ 2` | 2, 2 |
/// | `lattice_n` | grid points across the diameter, `h = 2/n` | 256 (512 for `dimension`) |
/// | `sigma` | imaginary chaos parameter (or Laplace parameter for `exit-law`) | per experiment |
/// | `eps` | circle-average radius | `max(8h, 0.04)` |
/// | `delta` | Minkowski-measure offset below σ_c | 0.1 |
/// | `samples` | Monte Carlo samples (outer samples for conditional runs) | 200 |
/// | `inner_resamples` | complement resamples per outer sample | 200 |
/// | `seed` | master seed | 1 |
/// | `output_path` | directory receiving `report.json` and `rows.csv` | `tvslab-out` |
/// | `region_radius` | radius of the disc `U` around 0 for pairings | 0.3 |
/// | `separation` | `|x − y|` for two-point hitting | 0.25 |
/// | `z_x`, `z_y` | evaluation point for one-point hitting | 0, 0 |
/// | `radius_mode` | `exact` or `koebe` | `koebe` |
/// | `max_points` | Riemann-sum nodes per region for the conditional triple | 30 |
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub a: f64,
    pub b: f64,
    pub lattice_n: usize,
    pub sigma: Option<f64>,
    pub eps: Option<f64>,
    pub delta: f64,
    pub samples: usize,
    pub inner_resamples: usize,
    pub seed: u64,
    pub output_path: PathBuf,
    pub region_radius: f64,
    pub separation: f64,
    pub z_x: f64,
    pub z_y: f64,
    pub radius_mode: RadiusChoice,
    pub max_points: usize,
}

/// Keys [`crate::experiment::sweep`] may vary.
pub const SWEEPABLE: [&str; 12] = [
    "a",
    "b",
    "lattice_n",
    "sigma",
    "eps",
    "delta",
    "samples",
    "inner_resamples",
    "region_radius",
    "separation",
    "max_points",
    "z_x",
];

/// Largest hitting radius of the one-point experiment.
pub(crate) const ONE_POINT_MAX_EPS: f64 = 0.223_130_160_148_429_83; // e^{−1.5}
/// Largest δ of the two-point experiment.
pub(crate) const TWO_POINT_MAX_DELTA: f64 = 0.03;

fn bad(key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        key: key.into(),
        reason: reason.into(),
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e: T::Err| bad(key, format!("cannot parse `{value}`: {e}")))
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        ExperimentConfig {
            experiment,
            a: 2.0,
            b: 2.0,
            lattice_n: if experiment == ExperimentKind::Dimension {
                512
            } else {
                256
            },
            sigma: None,
            eps: None,
            delta: 0.1,
            samples: 200,
            inner_resamples: 200,
            seed: 1,
            output_path: PathBuf::from("tvslab-out"),
            region_radius: 0.3,
            separation: 0.25,
            z_x: 0.0,
            z_y: 0.0,
            radius_mode: RadiusChoice::Koebe,
            max_points: 30,
        }
    }

    /// Parses `key = value` lines; `#` starts a comment. `experiment` is required.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("line {}: expected key = value, got `{raw}`", lineno + 1)))?;
            pairs.push((k.trim().to_string(), v.trim().to_string()));
        }
        Self::from_pairs(&pairs)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Builds from ordered pairs; later pairs override earlier ones.
    pub fn from_pairs(pairs: &[(String, String)]) -> Result<Self> {
        let kind = pairs
            .iter()
            .rev()
            .find(|(k, _)| k == "experiment")
            .ok_or_else(|| bad("experiment", "missing"))?;
        let mut cfg = Self::new(kind.1.parse()?);
        for (k, v) in pairs {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" => self.experiment = value.trim().parse()?,
            "a" => self.a = parse(key, value)?,
            "b" => self.b = parse(key, value)?,
            "lattice_n" => self.lattice_n = parse(key, value)?,
            "sigma" => self.sigma = Some(parse(key, value)?),
            "eps" => self.eps = Some(parse(key, value)?),
            "delta" => self.delta = parse(key, value)?,
            "samples" => self.samples = parse(key, value)?,
            "inner_resamples" => self.inner_resamples = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "output_path" => self.output_path = PathBuf::from(value.trim()),
            "region_radius" => self.region_radius = parse(key, value)?,
            "separation" => self.separation = parse(key, value)?,
            "z_x" => self.z_x = parse(key, value)?,
            "z_y" => self.z_y = parse(key, value)?,
            "radius_mode" => {
                self.radius_mode = match value.trim() {
                    "exact" => RadiusChoice::Exact,
                    "koebe" => RadiusChoice::Koebe,
                    other => return Err(bad(key, format!("`{other}` is neither `exact` nor `koebe`"))),
                }
            }
            "max_points" => self.max_points = parse(key, value)?,
            other => return Err(bad(other, "unknown key")),
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("override `{assignment}` is not key=value")))?;
        self.set(k.trim(), v)
    }

    pub fn params(&self) -> Result<TvsParams> {
        TvsParams::in_lambda_units(self.a, self.b).map_err(|e| bad("a", e.to_string()))
    }

    pub fn h(&self) -> f64 {
        2.0 / self.lattice_n as f64
    }

    /// The σ an experiment runs with when none is configured.
    pub fn resolved_sigma(&self) -> Option<f64> {
        if self.sigma.is_some() {
            return self.sigma;
        }
        let sc = 2.0 * LAMBDA / ((self.a + self.b) * LAMBDA);
        match self.experiment {
            ExperimentKind::ExitLaw => Some(0.5 * sc),
            ExperimentKind::ChaosMoments => Some(0.5),
            ExperimentKind::ConditionalOnePoint | ExperimentKind::ConditionalThreePoint => Some(0.3),
            ExperimentKind::TwoPoint => Some(0.9 * sc),
            _ => None,
        }
    }

    pub fn resolved_eps(&self) -> Option<f64> {
        match self.experiment {
            ExperimentKind::Covariance => Some(self.eps.unwrap_or(0.05)),
            k if k.uses_chaos() => Some(self.eps.unwrap_or((8.0 * self.h()).max(0.04))),
            _ => None,
        }
    }

    /// Checks every field against the ranges of the operations the experiment
    /// composes. Nothing is allocated here.
    pub fn validate(&self) -> Result<()> {
        let kind = self.experiment;
        let params = self.params()?;
        let sc = params.sigma_critical();
        if kind.uses_lattice() && !(MIN_RESOLUTION..=MAX_RESOLUTION).contains(&self.lattice_n) {
            return Err(bad(
                "lattice_n",
                format!(
                    "must lie in [{MIN_RESOLUTION}, {MAX_RESOLUTION}], got {}",
                    self.lattice_n
                ),
            ));
        }
        if self.samples < 2 {
            return Err(bad("samples", "need at least 2 for a standard error"));
        }
        if matches!(
            kind,
            ExperimentKind::ConditionalOnePoint | ExperimentKind::ConditionalThreePoint
        ) && self.inner_resamples < 2
        {
            return Err(bad("inner_resamples", "need at least 2 for a standard error"));
        }
        if let Some(s) = self.resolved_sigma() {
            let limit = match kind {
                ExperimentKind::ChaosMoments => SIGMA_MAX,
                _ => sc,
            };
            if !(s > 0.0 && s < limit) {
                return Err(bad("sigma", format!("must lie in (0, {limit}) for {kind}, got {s}")));
            }
        }
        if let Some(e) = self.resolved_eps() {
            let min = crate::lattice::MIN_EPS_SPACINGS * self.h();
            if !(e >= min) {
                return Err(bad(
                    "eps",
                    format!("must be at least {min} (3 lattice spacings), got {e}"),
                ));
            }
        }
        if kind.uses_chaos() && !(self.region_radius > 0.0 && self.region_radius + self.resolved_eps().unwrap() < 1.0) {
            return Err(bad(
                "region_radius",
                "the disc plus its ε-collar must stay inside the unit disc",
            ));
        }
        if matches!(
            kind,
            ExperimentKind::ChaosMoments | ExperimentKind::ConditionalThreePoint
        ) {
            let r = super::kinds::triple_regions();
            let gap = r[0].gap(&r[1]);
            if !(2.0 * self.resolved_eps().unwrap() < gap) {
                return Err(bad(
                    "eps",
                    format!(
                        "the triple's discs are {gap:.3} apart, so eps must be below {:.3}",
                        gap / 2.0
                    ),
                ));
            }
        }
        match kind {
            ExperimentKind::Minkowski if !(self.delta > 0.0 && self.delta < sc) => {
                return Err(bad("delta", format!("must lie in (0, σ_c = {sc}), got {}", self.delta)));
            }
            ExperimentKind::ConditionalThreePoint => {
                if !params.is_symmetric() {
                    return Err(bad("b", "the conditional triple needs symmetric levels a = b"));
                }
                if self.max_points == 0 {
                    return Err(bad("max_points", "must be positive"));
                }
            }
            ExperimentKind::Dimension if self.h() > 1.0 / 256.0 => {
                return Err(bad(
                    "lattice_n",
                    "box counting needs 4 dyadic scales between 4h and 1/8, so n ≥ 512",
                ));
            }
            ExperimentKind::OnePoint => {
                let r = (self.z_x * self.z_x + self.z_y * self.z_y).sqrt();
                if 1.0 - r < 2.0 * ONE_POINT_MAX_EPS {
                    return Err(bad(
                        "z_x",
                        format!("z must be at least {} from the boundary", 2.0 * ONE_POINT_MAX_EPS),
                    ));
                }
            }
            ExperimentKind::TwoPoint if !(self.separation > 4.0 * TWO_POINT_MAX_DELTA && self.separation < 1.5) => {
                return Err(bad(
                    "separation",
                    format!(
                        "must lie in ({}, 1.5), got {}",
                        4.0 * TWO_POINT_MAX_DELTA,
                        self.separation
                    ),
                ));
            }
            _ => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_overrides() {
        let text = "# run\nexperiment = minkowski\n\ndelta = 0.05  # finer\nlattice_n=128\nradius_mode = exact\n";
        let mut cfg = ExperimentConfig::parse(text).unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Minkowski);
        assert_eq!(cfg.delta, 0.05);
        assert_eq!(cfg.lattice_n, 128);
        assert_eq!(cfg.radius_mode, RadiusChoice::Exact);
        cfg.apply_override("seed=17").unwrap();
        assert_eq!(cfg.seed, 17);
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_experiment_lists_valid_names() {
        let err = ExperimentConfig::parse("experiment = chaos\n").unwrap_err().to_string();
        for k in ExperimentKind::ALL {
            assert!(err.contains(k.name()), "{err}");
        }
    }

    #[test]
    fn field_level_errors() {
        let cases = [
            ("lattice_n", "8"),
            ("a", "-0.5"),
            ("samples", "1"),
            ("delta", "0.6"),
            ("sigma", "0.5"),
        ];
        for (key, value) in cases {
            let mut cfg = ExperimentConfig::new(ExperimentKind::Minkowski);
            if key == "sigma" {
                cfg.experiment = ExperimentKind::ConditionalOnePoint;
            }
            cfg.set(key, value).unwrap();
            match cfg.validate() {
                Err(Error::Config { key: k, .. }) => assert_eq!(k, key, "{key}={value}"),
                other => panic!("{key}={value}: {other:?}"),
            }
        }
        let mut cfg = ExperimentConfig::new(ExperimentKind::Dimension);
        cfg.lattice_n = 256;
        assert!(cfg.validate().is_err());
        assert!(ExperimentConfig::parse("experiment = dimension\nfoo = 1\n").is_err());
        assert!(ExperimentConfig::parse("samples = 3\n").is_err());
        let mut cfg = ExperimentConfig::new(ExperimentKind::ConditionalThreePoint);
        cfg.b = 3.0;
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::new(ExperimentKind::ConditionalThreePoint);
        cfg.lattice_n = 64;
        assert!(matches!(cfg.validate(), Err(Error::Config { key, .. }) if key == "eps"));
    }

    #[test]
    fn every_kind_validates_with_defaults() {
        for k in ExperimentKind::ALL {
            ExperimentConfig::new(k).validate().unwrap();
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
        }
    }
}
