//! Run configuration in a flat `key = value` text format.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::dasc::DascParams;
use crate::eaf::{Weighting, DEFAULT_EPSILON};
use crate::error::{DascError, Result};
use crate::gidasc::BlurRule;
use crate::learn::SvmConfig;
use crate::lss::LssParams;
use crate::pattern::LogPolarGrid;
use crate::superpixel::SlicParams;
use crate::wmsd::WmsdParams;

/// Averaging weights by name: `box`, `gaussian` or `guided`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightingKind {
    Box,
    Gaussian,
    #[default]
    Guided,
}

impl fmt::Display for WeightingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WeightingKind::Box => "box",
            WeightingKind::Gaussian => "gaussian",
            WeightingKind::Guided => "guided",
        })
    }
}

impl FromStr for WeightingKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "box" => Ok(WeightingKind::Box),
            "gaussian" => Ok(WeightingKind::Gaussian),
            "guided" => Ok(WeightingKind::Guided),
            _ => Err(format!("unknown weighting '{s}' (box, gaussian, guided)")),
        }
    }
}

impl fmt::Display for BlurRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BlurRule {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "scale-space" => Ok(BlurRule::ScaleSpace),
            "inverse-root" => Ok(BlurRule::InverseRoot),
            _ => Err(format!("unknown blur rule '{s}' (scale-space, inverse-root)")),
        }
    }
}

macro_rules! run_config {
    ($($field:ident : $ty:ty = $default:expr, $key:literal;)*) => {
        /// Every tunable of the pipeline. Paths are empty when unset.
        #[derive(Debug, Clone, PartialEq)]
        pub struct RunConfig {
            $(pub $field: $ty,)*
        }

        impl Default for RunConfig {
            fn default() -> Self {
                Self { $($field: $default,)* }
            }
        }

        impl RunConfig {
            /// All keys in serialization order.
            pub const KEYS: &'static [&'static str] = &[$($key),*];

            /// `(key, value)` pairs in serialization order.
            pub fn entries(&self) -> Vec<(&'static str, String)> {
                vec![$(($key, self.$field.to_string())),*]
            }

            /// Sets one key from its text value; unknown keys are rejected.
            pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
                match key {
                    $($key => {
                        self.$field = value.parse::<$ty>().map_err(|e| {
                            DascError::Format(format!("{key} = '{value}': {e}"))
                        })?;
                    })*
                    _ => return Err(DascError::Format(format!("unknown configuration key '{key}'"))),
                }
                Ok(())
            }
        }
    };
}

run_config! {
    seed: u64 = 0, "seed";
    sigma_c: f64 = 0.5, "dasc.sigma_c";
    tau_c: f64 = 0.03, "dasc.tau_c";
    patch_size: usize = 5, "dasc.patch_size";
    support_size: usize = 31, "dasc.support_size";
    dim: usize = 128, "dasc.dim";
    weighting: WeightingKind = WeightingKind::Guided, "dasc.weighting";
    epsilon: f64 = DEFAULT_EPSILON, "dasc.epsilon";
    grid_n_rho: usize = 4, "grid.n_rho";
    grid_n_theta: usize = 36, "grid.n_theta";
    grid_radius: usize = 13, "grid.radius";
    sigma_r: f64 = 0.5, "learn.sigma_r";
    c_svm: f64 = 1.0, "learn.c_svm";
    epochs: usize = 50, "learn.epochs";
    lss_n_rho: usize = 3, "lss.n_rho";
    lss_n_theta: usize = 12, "lss.n_theta";
    lss_patch_size: usize = 5, "lss.patch_size";
    lss_window_size: usize = 31, "lss.window_size";
    lss_sigma_s: f64 = 1.0, "lss.sigma_s";
    wmsd_n_rho: usize = 3, "wmsd.n_rho";
    wmsd_n_theta: usize = 12, "wmsd.n_theta";
    wmsd_radius: usize = 8, "wmsd.radius";
    wmsd_patch_size: usize = 5, "wmsd.patch_size";
    wmsd_epsilon: f64 = DEFAULT_EPSILON, "wmsd.epsilon";
    wmsd_levels: usize = 4, "wmsd.levels";
    wmsd_base_sigma: f64 = 1.0, "wmsd.base_sigma";
    wmsd_sigma_step: f64 = std::f64::consts::SQRT_2, "wmsd.sigma_step";
    wmsd_o: usize = 10, "wmsd.o";
    wmsd_threshold: f64 = 0.6, "wmsd.threshold";
    wmsd_minima: bool = false, "wmsd.minima";
    wmsd_border: usize = 3, "wmsd.border";
    superpixels: usize = 500, "slic.superpixels";
    compactness: f64 = 10.0, "slic.compactness";
    lambda_c: f64 = 0.1, "field.lambda_c";
    lambda_p: f64 = 30.0, "field.lambda_p";
    mu: f64 = 1.0, "field.mu";
    blur: BlurRule = BlurRule::ScaleSpace, "gi.blur";
    max_disp: usize = 64, "match.max_disp";
    flow_radius: usize = 16, "match.flow_radius";
    bad_threshold: f64 = 1.0, "match.bad_threshold";
    disparity_scale: f64 = 256.0, "match.disparity_scale";
    patterns: String = String::new(), "paths.patterns";
    output_dir: String = String::new(), "paths.output_dir";
}

impl RunConfig {
    /// Parses `key = value` lines; `#` starts a comment line. Keys absent
    /// from the text keep their defaults; repeated keys are rejected.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut seen = std::collections::HashSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                DascError::Format(format!("line {}: expected 'key = value'", i + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(DascError::Format(format!("line {}: repeated key '{key}'", i + 1)));
            }
            cfg.set(key, value)
                .map_err(|e| DascError::Format(format!("line {}: {e}", i + 1)))?;
        }
        Ok(cfg)
    }

    pub fn serialize(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| DascError::io(path, e))?;
        Self::parse(&text).map_err(|e| DascError::Format(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.serialize()).map_err(|e| DascError::io(path, e))
    }

    pub fn weighting(&self) -> Weighting {
        match self.weighting {
            WeightingKind::Box => Weighting::Box,
            WeightingKind::Gaussian => Weighting::Gaussian,
            WeightingKind::Guided => Weighting::Guided {
                epsilon: self.epsilon,
            },
        }
    }

    pub fn dasc_params(&self) -> Result<DascParams> {
        let p = DascParams {
            sigma_c: self.sigma_c,
            tau_c: self.tau_c,
            patch_size: self.patch_size,
            support_size: self.support_size,
            dim: self.dim,
            weighting: self.weighting(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn grid(&self) -> Result<LogPolarGrid> {
        LogPolarGrid::generate(self.grid_n_rho, self.grid_n_theta, self.grid_radius)
    }

    pub fn svm_config(&self) -> SvmConfig {
        SvmConfig {
            c_svm: self.c_svm,
            epochs: self.epochs,
            seed: self.seed,
        }
    }

    pub fn lss_params(&self) -> LssParams {
        LssParams {
            n_rho: self.lss_n_rho,
            n_theta: self.lss_n_theta,
            patch_size: self.lss_patch_size,
            window_size: self.lss_window_size,
            sigma_s: self.lss_sigma_s,
        }
    }

    pub fn wmsd_params(&self) -> Result<WmsdParams> {
        let p = WmsdParams {
            n_rho: self.wmsd_n_rho,
            n_theta: self.wmsd_n_theta,
            radius: self.wmsd_radius,
            patch_size: self.wmsd_patch_size,
            epsilon: self.wmsd_epsilon,
            n_levels: self.wmsd_levels,
            base_sigma: self.wmsd_base_sigma,
            sigma_step: self.wmsd_sigma_step,
            o: self.wmsd_o,
            threshold_factor: self.wmsd_threshold,
            include_minima: self.wmsd_minima,
            border: self.wmsd_border,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn slic_params(&self) -> SlicParams {
        SlicParams {
            target_count: self.superpixels,
            compactness: self.compactness,
            seed: self.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::parse(&c.serialize()).unwrap(), c);
        assert_eq!(c.entries().len(), RunConfig::KEYS.len());
    }

    #[test]
    fn edited_values_round_trip() {
        let mut c = RunConfig::default();
        c.set("dasc.weighting", "box").unwrap();
        c.set("field.mu", "0.1").unwrap();
        c.set("gi.blur", "inverse-root").unwrap();
        c.set("paths.patterns", "/tmp/p.txt").unwrap();
        c.set("wmsd.minima", "true").unwrap();
        c.wmsd_sigma_step = 1.0 / 3.0;
        assert_eq!(RunConfig::parse(&c.serialize()).unwrap(), c);
    }

    #[test]
    fn bad_input_is_rejected() {
        assert!(RunConfig::parse("nonsense = 1").is_err());
        assert!(RunConfig::parse("seed 3").is_err());
        assert!(RunConfig::parse("seed = x").is_err());
        assert!(RunConfig::parse("seed = 1\nseed = 2").is_err());
        assert!(RunConfig::parse("dasc.weighting = bilateral").is_err());
        let c = RunConfig::parse("# comment\n\nseed = 7\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.dim, 128);
    }

    #[test]
    fn derived_parameters_follow_keys() {
        let c = RunConfig::parse("dasc.weighting = guided\ndasc.epsilon = 0.01").unwrap();
        assert_eq!(c.weighting(), Weighting::Guided { epsilon: 0.01 });
        assert_eq!(c.grid().unwrap().len(), 145);
        assert!(RunConfig::parse("dasc.patch_size = 4").unwrap().dasc_params().is_err());
    }
}
