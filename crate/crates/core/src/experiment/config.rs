use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ProbeSet;
use crate::regularity::PairSpec;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "BELTRAMI_OUT_DIR";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "svg" => Ok(Format::Svg),
            other => Err(format!("unknown format `{other}` (expected csv, json or svg)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Coarse grid and short probe window; seconds to run.
    Smoke,
    /// Acceptance resolution.
    Full,
}

impl std::str::FromStr for Profile {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "smoke" => Ok(Profile::Smoke),
            "full" => Ok(Profile::Full),
            other => Err(format!("unknown profile `{other}` (expected smoke or full)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    pub j_min: u32,
    pub j_max: u32,
    pub angles: usize,
    pub pairs: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub k: u32,
    pub grid_n: usize,
    pub pad_half_width: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub probes: ProbeConfig,
    /// Relative tolerance on fitted slopes.
    pub fit_tol: f64,
    /// Relative tolerance of the probe quadrature in the lemma experiment.
    pub quad_tol: f64,
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
    /// Worker threads; `None` uses all cores. Results do not depend on it.
    pub jobs: Option<usize>,
}

impl ExperimentConfig {
    pub fn profile(profile: Profile) -> Self {
        let out_dir = std::env::var_os(OUT_DIR_ENV).map_or_else(|| PathBuf::from("out"), PathBuf::from);
        let (grid_n, j_min, j_max, angles, pairs) = match profile {
            Profile::Smoke => (512, 4, 8, 16, 128),
            Profile::Full => (2048, 5, 14, 32, 256),
        };
        Self {
            k: 1,
            grid_n,
            pad_half_width: 2.0,
            tol: 1e-10,
            max_iter: 50,
            probes: ProbeConfig {
                j_min,
                j_max,
                angles,
                pairs,
                seed: 2024,
            },
            fit_tol: 0.15,
            quad_tol: 1e-6,
            out_dir,
            formats: vec![Format::Csv, Format::Json, Format::Svg],
            jobs: None,
        }
    }

    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }

    pub fn probe_set(&self) -> Result<ProbeSet> {
        ProbeSet::new(self.probes.j_min, self.probes.j_max, self.probes.angles)
    }

    pub fn pair_spec(&self) -> PairSpec {
        PairSpec {
            pairs: self.probes.pairs,
            seed: self.probes.seed,
            ..PairSpec::default()
        }
    }

    /// Applies `patch` on top of `self`; fields absent from the patch are kept.
    pub fn apply(&mut self, patch: &ConfigPatch) {
        macro_rules! set {
            ($($field:ident),*) => { $(if let Some(v) = patch.$field.clone() { self.$field = v; })* };
        }
        set!(k, grid_n, pad_half_width, tol, max_iter, fit_tol, quad_tol, out_dir, formats);
        if patch.jobs.is_some() {
            self.jobs = patch.jobs;
        }
        if let Some(p) = &patch.probes {
            macro_rules! set_probe {
                ($($field:ident),*) => { $(if let Some(v) = p.$field { self.probes.$field = v; })* };
            }
            set_probe!(j_min, j_max, angles, pairs, seed);
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |path: &str, msg: String| Err(Error::Config { path: path.into(), msg });
        if !(1..=3).contains(&self.k) {
            return fail("k", format!("{} outside 1..=3", self.k));
        }
        if self.grid_n < 64 || !self.grid_n.is_power_of_two() {
            return fail("grid_n", format!("{} is not a power of two >= 64", self.grid_n));
        }
        if !(self.pad_half_width >= 2.0 && self.pad_half_width.is_finite()) {
            return fail("pad_half_width", format!("{} must be finite and >= 2", self.pad_half_width));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return fail("tol", format!("{} outside (0, 1)", self.tol));
        }
        if self.max_iter == 0 {
            return fail("max_iter", "must be positive".into());
        }
        if !(self.fit_tol > 0.0 && self.fit_tol < 1.0) {
            return fail("fit_tol", format!("{} outside (0, 1)", self.fit_tol));
        }
        if !(self.quad_tol > 0.0 && self.quad_tol < 1.0) {
            return fail("quad_tol", format!("{} outside (0, 1)", self.quad_tol));
        }
        let p = &self.probes;
        if p.j_min < 4 {
            return fail("probes.j_min", format!("{} < 4: probe radii must stay below 1/8", p.j_min));
        }
        if p.j_min >= p.j_max {
            return fail("probes.j_max", format!("j_min = {} must be below j_max = {}", p.j_min, p.j_max));
        }
        if p.j_max - p.j_min < 4 {
            return fail("probes.j_max", "the fit window needs at least 5 scales".into());
        }
        if p.j_max > 30 {
            return fail("probes.j_max", format!("{} > 30", p.j_max));
        }
        if p.angles < 16 {
            return fail("probes.angles", format!("{} < 16", p.angles));
        }
        if p.pairs == 0 {
            return fail("probes.pairs", "must be positive".into());
        }
        if self.formats.is_empty() {
            return fail("formats", "at least one of csv, json, svg".into());
        }
        if self.jobs == Some(0) {
            return fail("jobs", "must be positive".into());
        }
        Ok(())
    }
}

/// Partial configuration as read from a JSON file or collected from flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigPatch {
    pub k: Option<u32>,
    pub grid_n: Option<usize>,
    pub pad_half_width: Option<f64>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub probes: Option<ProbePatch>,
    pub fit_tol: Option<f64>,
    pub quad_tol: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub formats: Option<Vec<Format>>,
    pub jobs: Option<usize>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbePatch {
    pub j_min: Option<u32>,
    pub j_max: Option<u32>,
    pub angles: Option<usize>,
    pub pairs: Option<usize>,
    pub seed: Option<u64>,
}

impl ConfigPatch {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config {
            path: format!("line {} column {}", e.line(), e.column()),
            msg: e.to_string(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Profile defaults, then the optional file, then flag overrides; validated.
pub fn resolve(profile: Profile, file: Option<&ConfigPatch>, flags: &ConfigPatch) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::profile(profile);
    if let Some(f) = file {
        cfg.apply(f);
    }
    cfg.apply(flags);
    cfg.validate()?;
    Ok(cfg)
}
