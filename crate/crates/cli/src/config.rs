//! TOML run configuration. Every key is optional; see docs/config.md.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pluri::dynamics::EscapeParams;
use pluri::grid::SliceSpec;
use pluri::jensen::{Domain, SetDescriptor};
use pluri::mapfile::parse_map;
use pluri::poly::PolyMap;
use pluri::{CVec, C64};

use crate::Failure;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub map: MapConfig,
    pub escape: EscapeConfig,
    pub slice: SliceConfig,
    pub green: GreenConfig,
    pub disk: DiskConfig,
    pub envelope: EnvelopeConfig,
    pub equidist: EquidistConfig,
    pub birkhoff: BirkhoffConfig,
    pub verify: VerifyConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            map: MapConfig::default(),
            escape: EscapeConfig::default(),
            slice: SliceConfig::default(),
            green: GreenConfig::default(),
            disk: DiskConfig::default(),
            envelope: EnvelopeConfig::default(),
            equidist: EquidistConfig::default(),
            birkhoff: BirkhoffConfig::default(),
            verify: VerifyConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapConfig {
    /// (x^2 + a y, x)
    Henon { a: f64 },
    /// (p(x) + a y, x), p by ascending coefficients
    HenonLike { p: Vec<C64>, a: C64 },
    /// A map file; relative paths are resolved against the config file.
    File { path: PathBuf },
}

impl Default for MapConfig {
    fn default() -> Self {
        MapConfig::Henon { a: 0.3 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EscapeConfig {
    pub max_iter: usize,
    pub escape_radius: f64,
    pub zero_threshold: f64,
    /// Overrides the map's lambda1.
    pub lambda1: Option<f64>,
}

impl Default for EscapeConfig {
    fn default() -> Self {
        EscapeConfig { max_iter: 80, escape_radius: 1e8, zero_threshold: 1e-6, lambda1: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SliceConfig {
    pub base: Vec<C64>,
    pub direction: Vec<C64>,
    pub extent: f64,
    pub resolution: usize,
}

impl Default for SliceConfig {
    fn default() -> Self {
        SliceConfig {
            base: vec![c(0.0, 0.0), c(0.0, 0.0)],
            direction: vec![c(1.0, 0.0), c(0.0, 0.0)],
            extent: 2.0,
            resolution: 256,
        }
    }
}

impl SliceConfig {
    pub fn build(&self) -> Result<SliceSpec, Failure> {
        let base = CVec::new(self.base.clone()).map_err(Failure::config)?;
        let dir = CVec::new(self.direction.clone()).map_err(Failure::config)?;
        SliceSpec::new(base, dir, self.extent, self.resolution).map_err(Failure::config)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GreenDirection {
    Forward,
    Backward,
    Both,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenConfig {
    pub direction: GreenDirection,
    /// Random points for the invariance residual summary.
    pub residual_samples: usize,
    /// Points are drawn from [-box, box] in every real coordinate.
    pub residual_box: f64,
}

impl Default for GreenConfig {
    fn default() -> Self {
        GreenConfig { direction: GreenDirection::Both, residual_samples: 1000, residual_box: 3.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Probe {
    /// Poletsky infimum of `field`.
    Poletsky,
    /// Relative extremal function of `set` in `domain`.
    RelativeGreen,
    /// Hull membership of each point with respect to `set`.
    Hull,
    /// Largest disk mass on `set`.
    Pluripolar,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    NormSq,
    /// A random smooth psh function drawn from the run seed.
    RandomPsh,
    /// -1 on the interior of `set`, 0 elsewhere.
    Obstacle,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiskConfig {
    pub probe: Probe,
    pub points: Vec<Vec<C64>>,
    pub field: FieldKind,
    pub set: SetDescriptor,
    pub domain: Domain,
    pub degree: usize,
    pub coeff_bound: f64,
    pub restarts: usize,
    pub epsilon: f64,
}

impl Default for DiskConfig {
    fn default() -> Self {
        let origin = CVec::from_slice(&[c(0.0, 0.0)]);
        DiskConfig {
            probe: Probe::RelativeGreen,
            points: vec![vec![c(0.5, 0.0)], vec![c(0.1, 0.0)]],
            field: FieldKind::Obstacle,
            set: SetDescriptor::ball(origin.clone(), 0.25),
            domain: Domain::Ball { center: origin, radius: 1.0 },
            degree: 4,
            coeff_bound: 1.0,
            restarts: 32,
            epsilon: 0.01,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvelopeConfig {
    /// Radius of the disk A = {|w - a_center| <= r}.
    pub r: f64,
    pub a_center: C64,
    /// Radius of U = {|w| < r_u}.
    pub r_u: f64,
    pub resolution: usize,
    pub tol: f64,
    /// None gives 10 resolution^2.
    pub max_sweeps: Option<usize>,
}

impl Default for EnvelopeConfig {
    fn default() -> Self {
        EnvelopeConfig { r: 0.25, a_center: c(0.0, 0.0), r_u: 1.0, resolution: 256, tol: 1e-8, max_sweeps: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeChoice {
    Auto,
    Direct,
    Shadowed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoxConfig {
    pub center: Vec<C64>,
    /// Half side length in every real coordinate.
    pub half_width: f64,
}

impl BoxConfig {
    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let lo = self.center.iter().flat_map(|z| [z.re - self.half_width, z.im - self.half_width]).collect();
        let hi = self.center.iter().flat_map(|z| [z.re + self.half_width, z.im + self.half_width]).collect();
        (lo, hi)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EquidistConfig {
    /// Cesaro lengths reported, one row each.
    pub m: Vec<usize>,
    /// None gives m / 4 per row.
    pub burn_in: Option<usize>,
    pub points: usize,
    pub degree: usize,
    pub scheme: SchemeChoice,
    pub box_a: BoxConfig,
    pub box_b: BoxConfig,
}

impl Default for EquidistConfig {
    fn default() -> Self {
        EquidistConfig {
            m: vec![1, 100, 200, 400],
            burn_in: None,
            points: 10_000,
            degree: 4,
            scheme: SchemeChoice::Auto,
            box_a: BoxConfig { center: vec![c(0.7, 0.0), c(0.7, 0.0)], half_width: 0.05 },
            box_b: BoxConfig { center: vec![c(0.573, 0.0), c(0.62, 0.0)], half_width: 0.05 },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceChoice {
    Auto,
    Literal,
    Leaf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BirkhoffConfig {
    /// Run the Birkhoff field as part of `equidist`.
    pub enabled: bool,
    pub m: usize,
    pub snapshots: Option<Vec<usize>>,
    pub source: SourceChoice,
    pub center: Vec<C64>,
    pub radius: f64,
    pub height: f64,
    pub slice: SliceConfig,
}

impl Default for BirkhoffConfig {
    fn default() -> Self {
        BirkhoffConfig {
            enabled: false,
            m: 400,
            snapshots: None,
            source: SourceChoice::Auto,
            center: vec![c(0.7, 0.0), c(0.7, 0.0)],
            radius: 0.5,
            height: 1.0,
            slice: SliceConfig { extent: 1.5, ..SliceConfig::default() },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Criteria to run; empty means all.
    pub criteria: Vec<u32>,
    /// Rerun the suite with a different thread count and compare outputs byte for byte.
    pub determinism: bool,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig { criteria: Vec::new(), determinism: true }
    }
}

/// A parsed config with the directory its relative paths refer to.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::Config(anyhow::anyhow!("config: {e}")))
    }

    pub fn load(path: Option<&Path>) -> Result<Loaded, Failure> {
        match path {
            None => Ok(Loaded { config: RunConfig::default(), base_dir: PathBuf::from(".") }),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Failure::Config(anyhow::anyhow!("cannot read {}: {e}", p.display())))?;
                let config = Self::parse(&text)?;
                let base_dir = p.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
                Ok(Loaded { config, base_dir })
            }
        }
    }

    /// Canonical text of the effective configuration; this is what gets hashed.
    pub fn canonical(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

impl Loaded {
    pub fn map(&self) -> Result<PolyMap, Failure> {
        let m = match &self.config.map {
            MapConfig::Henon { a } => PolyMap::henon(*a),
            MapConfig::HenonLike { p, a } => PolyMap::generalized_henon(p, *a),
            MapConfig::File { path } => {
                let full = if path.is_absolute() { path.clone() } else { self.base_dir.join(path) };
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| Failure::Config(anyhow::anyhow!("cannot read map file {}: {e}", full.display())))?;
                parse_map(&text)
            }
        };
        m.map_err(Failure::config)
    }

    pub fn escape(&self, m: &PolyMap) -> Result<EscapeParams, Failure> {
        let e = &self.config.escape;
        EscapeParams::new(e.max_iter, e.escape_radius, e.lambda1.unwrap_or(m.lambda1()), e.zero_threshold)
            .map_err(Failure::config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_the_default() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg.canonical(), RunConfig::default().canonical());
        assert_eq!(RunConfig::parse(&cfg.canonical()).unwrap().canonical(), cfg.canonical());
    }

    #[test]
    fn documented_example_is_the_default() {
        let doc = include_str!("../../../docs/config.md");
        let start = doc.find("```toml\n").unwrap() + 8;
        let block = &doc[start..start + doc[start..].find("```").unwrap()];
        assert_eq!(RunConfig::parse(block).unwrap().canonical(), RunConfig::default().canonical());
    }

    #[test]
    fn sections_and_errors() {
        let cfg = RunConfig::parse(
            "seed = 9\n[map]\nkind = \"henon\"\na = 0.2\n[slice]\nresolution = 64\nbase = [[0.0, 0.0], [0.3, 0.1]]\n\
             [disk]\nprobe = \"hull\"\nset = { kind = \"torus_band\", radii = [1.0, 1.0], half_width = 0.05 }\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.slice.resolution, 64);
        assert_eq!(cfg.slice.base[1], c(0.3, 0.1));
        assert_eq!(cfg.disk.probe, Probe::Hull);
        assert!(matches!(cfg.disk.set, SetDescriptor::TorusBand { .. }));

        for bad in ["seed = -1", "[slice]\nresolutoin = 3", "[map]\nkind = \"cubic\"", "[green]\ndirection = \"up\""] {
            let err = RunConfig::parse(bad).unwrap_err();
            assert_eq!(err.exit_code(), 2, "{bad}");
        }
    }
}
