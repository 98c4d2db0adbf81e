//! TOML run configuration. Every key is optional; command-line flags win.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use sisbf::pso::Inertia;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub channel: ChannelSection,
    #[serde(default)]
    pub subarray: SubarraySection,
    #[serde(default)]
    pub band: BandSection,
    #[serde(default)]
    pub constraints: ConstraintSection,
    #[serde(default)]
    pub pso: PsoSection,
    #[serde(default)]
    pub grid: GridSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    /// Channel file; relative paths are taken from the config file's directory.
    pub file: Option<PathBuf>,
    pub synthetic: Option<bool>,
    /// Full array for the synthetic channel, e.g. "8x8".
    pub array: Option<String>,
    pub separation_wavelengths: Option<f64>,
    pub alpha: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubarraySection {
    pub layout: Option<String>,
    pub tx_block: Option<usize>,
    pub rx_block: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSection {
    pub center_hz: Option<f64>,
    pub width_hz: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSection {
    pub epsilon: Option<f64>,
    pub penalty: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsoSection {
    pub particles: Option<usize>,
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
    pub inertia: Option<InertiaSpec>,
    pub omega_max: Option<f64>,
    pub threads: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    /// "azimuth", "elevation" or "downlink".
    pub preset: Option<String>,
    pub psi_d: Option<String>,
    pub psi_u: Option<String>,
    pub theta_d: Option<String>,
    pub theta_u: Option<String>,
    pub schemes: Option<Vec<String>>,
}

/// `0.7298`, `"1.1"` or `"ratio"` for the `(T − 1)/T` schedule.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum InertiaSpec {
    Value(f64),
    Name(String),
}

impl InertiaSpec {
    pub fn resolve(&self) -> Result<Inertia> {
        match self {
            InertiaSpec::Value(v) => Ok(Inertia::Constant(*v)),
            InertiaSpec::Name(s) => parse_inertia(s),
        }
    }
}

pub fn parse_inertia(s: &str) -> Result<Inertia> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("ratio") {
        return Ok(Inertia::IterationRatio);
    }
    match t.parse::<f64>() {
        Ok(v) => Ok(Inertia::Constant(v)),
        Err(_) => bail!("inertia must be a number or \"ratio\", got {s:?}"),
    }
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: FileConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if let Some(f) = cfg.channel.file.as_mut() {
            if f.is_relative() {
                if let Some(dir) = path.parent() {
                    *f = dir.join(&*f);
                }
            }
        }
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_sections() {
        let cfg: FileConfig = toml::from_str(
            r#"
            [channel]
            synthetic = true
            array = "4x4"
            [subarray]
            layout = "2x2"
            tx_block = 1
            [band]
            center_hz = 3.5e9
            width_hz = 20e6
            [constraints]
            epsilon = 0.1
            [pso]
            iterations = 40
            inertia = "ratio"
            [grid]
            psi_d = "0:30:180"
            schemes = ["md", "ncm"]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.subarray.tx_block, Some(1));
        assert_eq!(
            cfg.pso.inertia.unwrap().resolve().unwrap(),
            Inertia::IterationRatio
        );
        assert_eq!(cfg.grid.schemes.unwrap().len(), 2);
    }

    #[test]
    fn numeric_inertia_and_unknown_keys() {
        let cfg: FileConfig = toml::from_str("[pso]\ninertia = 1.1\n").unwrap();
        assert_eq!(
            cfg.pso.inertia.unwrap().resolve().unwrap(),
            Inertia::Constant(1.1)
        );
        assert!(toml::from_str::<FileConfig>("[pso]\nparticle = 3\n").is_err());
        assert!(parse_inertia("fast").is_err());
    }
}
