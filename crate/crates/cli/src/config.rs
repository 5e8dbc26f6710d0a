//! Run configuration: a TOML file with one section per stage.
//!
//! Relative paths in the file are resolved against the file's directory.
//! Command-line flags override file values.

use std::path::{Path, PathBuf};

use dialectkit::analysis::{Linkage, Metric};
use dialectkit::lintext::{Loss, Preset};
use dialectkit::textnorm::NormalizationConfig;
use serde::Deserialize;

use crate::Invalid;

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub jobs: usize,
    pub paths: Paths,
    pub normalize: NormalizationConfig,
    pub weaklabel: WeaklabelSection,
    pub train: TrainSection,
    pub filter: FilterSection,
    pub valence: ValenceSection,
    pub cluster: ClusterSection,
    pub eval: EvalSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 1,
            jobs: 1,
            paths: Paths::default(),
            normalize: NormalizationConfig::default(),
            weaklabel: WeaklabelSection::default(),
            train: TrainSection::default(),
            filter: FilterSection::default(),
            valence: ValenceSection::default(),
            cluster: ClusterSection::default(),
            eval: EvalSection::default(),
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub tweets: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub gazetteer: Option<PathBuf>,
    pub obscene: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub corpus: Option<PathBuf>,
    pub msa_corpus: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub regions: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeaklabelSection {
    pub balance: bool,
    pub holdout_per_class: usize,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub preset: Option<Preset>,
    pub learning_rate: Option<f32>,
    pub epochs: Option<u32>,
    pub loss: Option<Loss>,
    pub l2: Option<f32>,
    pub lr_decay: Option<bool>,
    pub embed_dim: Option<u32>,
    pub hash_buckets: Option<u32>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterSection {
    pub n_per_country: usize,
    pub dialectal_threshold: f64,
    pub vulgar_threshold: f64,
    pub min_confidence: f64,
}

impl Default for FilterSection {
    fn default() -> Self {
        let c = dialectkit::pipeline::CascadeConfig::default();
        FilterSection {
            n_per_country: c.n_per_country,
            dialectal_threshold: c.dialectal_threshold,
            vulgar_threshold: c.vulgar_threshold,
            min_confidence: c.min_confidence,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValenceSection {
    pub top_k: usize,
    pub min_count: u64,
    pub top_words: usize,
}

impl Default for ValenceSection {
    fn default() -> Self {
        ValenceSection {
            top_k: 10_000,
            min_count: 10,
            top_words: 20,
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSection {
    pub linkage: Linkage,
    pub metric: Metric,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub bin_width: usize,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { bin_width: 5 }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Invalid(format!("config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text).map_err(|e| {
            let at = e.span().map_or(0, |s| s.start);
            let line = text[..at].matches('\n').count() + 1;
            let key = key_at(&text, at).map(|k| format!(" (`{k}`)")).unwrap_or_default();
            Invalid(format!("config {} line {line}{key}: {}", path.display(), e.message().trim()))
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.paths.resolve(base);
        Ok(cfg)
    }
}

/// Dotted name of the key assigned on the line containing byte `at`.
fn key_at(text: &str, at: usize) -> Option<String> {
    let start = text[..at].rfind('\n').map_or(0, |i| i + 1);
    let line = text[start..].lines().next()?;
    let key = line.split_once('=')?.0.trim();
    if key.is_empty() || key.starts_with('#') {
        return None;
    }
    let section = text[..start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim());
    Some(match section {
        Some(s) => format!("{s}.{key}"),
        None => key.to_string(),
    })
}

impl Paths {
    fn resolve(&mut self, base: &Path) {
        for p in [
            &mut self.tweets,
            &mut self.profiles,
            &mut self.gazetteer,
            &mut self.obscene,
            &mut self.model,
            &mut self.corpus,
            &mut self.msa_corpus,
            &mut self.test,
            &mut self.regions,
            &mut self.output_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }
}

/// Picks the flag value, else the config value; errors name the config field.
pub fn input_path(flag: &Option<PathBuf>, file: &Option<PathBuf>, field: &str) -> anyhow::Result<PathBuf> {
    let path = flag
        .clone()
        .or_else(|| file.clone())
        .ok_or_else(|| Invalid(format!("missing required input `paths.{field}` (or its command-line flag)")))?;
    if !path.exists() {
        return Err(Invalid(format!("`paths.{field}`: {} does not exist", path.display())).into());
    }
    Ok(path)
}

/// Output path from the flag, else `<output_dir>/<default_name>`.
pub fn output_path(
    flag: &Option<PathBuf>,
    output_dir: &Option<PathBuf>,
    default_name: &str,
    field: &str,
) -> anyhow::Result<PathBuf> {
    if let Some(p) = flag {
        return Ok(p.clone());
    }
    let dir = output_dir
        .as_ref()
        .ok_or_else(|| Invalid(format!("no `{field}` given and no `paths.output_dir` configured")))?;
    Ok(dir.join(default_name))
}
