//! Scenario configuration files.
//!
//! ```toml
//! alpha = { mag = 4.0, phase = "0pi" }     # or { re = 4.0, im = 0.0 }
//! gts = ["3.7pi", "1.9pi"]
//! n_max = 60                                # optional
//!
//! [grid]
//! re_range = [-6.0, 6.0]
//! im_range = [-6.0, 6.0]
//! step = 0.05
//!
//! [probe]
//! beta_mag = 4.0
//! gt_p = "1.5pi"
//! n_phi = 720
//!
//! [damping]
//! kappa_t = [0.0, 0.03125, 0.0625, 0.125]
//! ```

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::fock::truncation_for;
use crate::homodyne::DEFAULT_PROBE_GT;
use crate::jc::PiMultiple;
use crate::phase_space::GridSpec;
use crate::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeParams {
    pub beta_mag: f64,
    pub gt_p: f64,
    pub n_phi: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub alpha: C64,
    /// Interaction times `gt_i` in radians.
    pub gts: Vec<f64>,
    pub n_max_override: Option<usize>,
    pub grid: Option<GridSpec>,
    pub probe: Option<ProbeParams>,
    pub damping: Option<Vec<f64>>,
}

impl ScenarioConfig {
    pub fn new(alpha: C64, gts: Vec<f64>) -> Self {
        Self { alpha, gts, n_max_override: None, grid: None, probe: None, damping: None }
    }

    /// Truncation: the override if given, else the default rule for `|α|`.
    pub fn n_max(&self) -> usize {
        self.n_max_override.unwrap_or_else(|| truncation_for(self.alpha.norm()))
    }

    /// Probe settings, defaulting to `|β| = |α|`, `gt_p = 1.5π`, 720 phases.
    pub fn probe_or_default(&self) -> ProbeParams {
        self.probe.clone().unwrap_or(ProbeParams { beta_mag: self.alpha.norm(), gt_p: DEFAULT_PROBE_GT, n_phi: 720 })
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let raw: RawScenario = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        raw.resolve()
    }

    pub fn read(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawAlpha {
    Real(f64),
    Cartesian { re: f64, #[serde(default)] im: f64 },
    Polar { mag: f64, #[serde(default)] phase: Option<String> },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    alpha: RawAlpha,
    gts: Vec<String>,
    n_max: Option<usize>,
    grid: Option<RawGrid>,
    probe: Option<RawProbe>,
    damping: Option<RawDamping>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    re_range: [f64; 2],
    im_range: Option<[f64; 2]>,
    step: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProbe {
    beta_mag: Option<f64>,
    gt_p: Option<String>,
    n_phi: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDamping {
    kappa_t: Vec<f64>,
}

fn field_err(field: &str, e: Error) -> Error {
    Error::Config(format!("field `{field}`: {e}"))
}

impl RawScenario {
    fn resolve(self) -> Result<ScenarioConfig> {
        let alpha = match self.alpha {
            RawAlpha::Real(re) => C64::new(re, 0.0),
            RawAlpha::Cartesian { re, im } => C64::new(re, im),
            RawAlpha::Polar { mag, phase } => {
                let phase = match phase {
                    Some(p) => p.parse::<PiMultiple>().map_err(|e| field_err("alpha.phase", e))?.value(),
                    None => 0.0,
                };
                C64::from_polar(mag, phase)
            }
        };
        if !alpha.re.is_finite() || !alpha.im.is_finite() {
            return Err(Error::Config("field `alpha`: must be finite".into()));
        }
        let gts = self
            .gts
            .iter()
            .enumerate()
            .map(|(i, g)| {
                let v = g.parse::<PiMultiple>().map_err(|e| field_err(&format!("gts[{i}]"), e))?.value();
                if v < 0.0 {
                    return Err(Error::Config(format!("field `gts[{i}]`: interaction time must be >= 0")));
                }
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        if gts.is_empty() {
            return Err(Error::Config("field `gts`: need at least one interaction time".into()));
        }
        let grid = self
            .grid
            .map(|g| {
                let re = (g.re_range[0], g.re_range[1]);
                let im = g.im_range.map_or(re, |r| (r[0], r[1]));
                GridSpec::new(re, im, g.step).map_err(|e| field_err("grid", e))
            })
            .transpose()?;
        let probe = self
            .probe
            .map(|p| {
                let gt_p = match p.gt_p {
                    Some(s) => s.parse::<PiMultiple>().map_err(|e| field_err("probe.gt_p", e))?.value(),
                    None => DEFAULT_PROBE_GT,
                };
                Ok::<_, Error>(ProbeParams {
                    beta_mag: p.beta_mag.unwrap_or(alpha.norm()),
                    gt_p,
                    n_phi: p.n_phi.unwrap_or(720),
                })
            })
            .transpose()?;
        let damping = self.damping.map(|d| d.kappa_t);
        if let Some(ks) = &damping {
            if let Some(k) = ks.iter().find(|k| !(**k >= 0.0)) {
                return Err(Error::Config(format!("field `damping.kappa_t`: {k} is negative")));
            }
        }
        Ok(ScenarioConfig { alpha, gts, n_max_override: self.n_max, grid, probe, damping })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn parses_full_config() {
        let cfg = ScenarioConfig::from_toml_str(
            r#"
            alpha = { mag = 4.0, phase = "0.25pi" }
            gts = ["3.7pi", "1.9pi"]
            [grid]
            re_range = [-6.0, 6.0]
            step = 0.05
            [probe]
            gt_p = "1.5pi"
            [damping]
            kappa_t = [0.0, 0.0625]
            "#,
        )
        .unwrap();
        assert!((cfg.alpha - C64::from_polar(4.0, PI / 4.0)).norm() < 1e-15);
        assert_eq!(cfg.gts, vec![3.7 * PI, 1.9 * PI]);
        assert_eq!(cfg.n_max(), 58);
        assert_eq!(cfg.grid.unwrap().ny(), 241);
        let probe = cfg.probe.unwrap();
        assert_eq!(probe.beta_mag, 4.0);
        assert_eq!(probe.n_phi, 720);
        assert_eq!(cfg.damping.unwrap().len(), 2);
    }

    #[test]
    fn reports_line_and_field() {
        let err = ScenarioConfig::from_toml_str("alpha = 2.0\ngts = [\"0pi\",\n\"badpi\"]\n").unwrap_err();
        assert!(err.to_string().contains("gts[1]"), "{err}");
        let err = ScenarioConfig::from_toml_str("alpha = 2.0\ngts = [\"0pi\"]\nbogus = 1\n").unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
    }
}
