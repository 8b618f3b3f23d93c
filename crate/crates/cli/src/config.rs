//! Declarative run configuration: one TOML file drives every command, with
//! flags reserved for paths and the seed override.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use triage_core::eval::PipelineConfig;
use triage_core::text::{default_stoplist, parse_stoplist};
use triage_core::topics::LdaParams;
use triage_core::InputFormat;

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: InputSection,
    #[serde(default)]
    pub filter: FilterSection,
    #[serde(default)]
    pub text: TextSection,
    #[serde(default)]
    pub topics: TopicsSection,
    #[serde(default)]
    pub assignment: AssignmentSection,
    #[serde(default)]
    pub run: RunSection,
    /// Directory of the config file; paths in the file resolve against it.
    #[serde(skip)]
    base_dir: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub path: PathBuf,
    #[serde(default = "default_format")]
    pub format: String,
}

fn default_format() -> String {
    "csv".into()
}

/// Record-level predicates applied at ingest; omitted lists keep everything,
/// so corpora without matching status vocabularies stay usable.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub status: Option<Vec<String>>,
    pub resolution: Option<Vec<String>>,
    pub issue_type: Option<Vec<String>>,
    #[serde(default = "default_min_fixes")]
    pub min_fixes: usize,
}

fn default_min_fixes() -> usize {
    10
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TextSection {
    /// Stop-word list file; the bundled English list when omitted.
    pub stopwords: Option<PathBuf>,
    #[serde(default = "default_min_df")]
    pub min_df: usize,
}

fn default_min_df() -> usize {
    2
}

impl Default for TextSection {
    fn default() -> Self {
        TextSection { stopwords: None, min_df: default_min_df() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopicsSection {
    #[serde(default = "default_k_min")]
    pub k_min: usize,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    /// Document-topic concentration; 50/K when omitted.
    pub alpha: Option<f64>,
    #[serde(default = "default_beta")]
    pub beta: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    #[serde(default = "default_top_n")]
    pub top_n: usize,
    #[serde(default = "default_fold_in_sweeps")]
    pub fold_in_sweeps: usize,
}

fn default_k_min() -> usize {
    1
}
fn default_k_max() -> usize {
    15
}
fn default_beta() -> f64 {
    0.01
}
fn default_iterations() -> usize {
    1000
}
fn default_burn_in() -> usize {
    200
}
fn default_top_n() -> usize {
    10
}
fn default_fold_in_sweeps() -> usize {
    50
}

impl Default for TopicsSection {
    fn default() -> Self {
        TopicsSection {
            k_min: default_k_min(),
            k_max: default_k_max(),
            alpha: None,
            beta: default_beta(),
            iterations: default_iterations(),
            burn_in: default_burn_in(),
            top_n: default_top_n(),
            fold_in_sweeps: default_fold_in_sweeps(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssignmentSection {
    #[serde(default = "default_penalty")]
    pub penalty_factor: f64,
}

fn default_penalty() -> f64 {
    1.5
}

impl Default for AssignmentSection {
    fn default() -> Self {
        AssignmentSection { penalty_factor: default_penalty() }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
}

fn default_seed() -> u64 {
    42
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { seed: default_seed(), out_dir: default_out_dir() }
    }
}

impl RunConfig {
    pub fn load(path: &Path, seed_override: Option<u64>) -> Result<Self, CliError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|e| CliError::io(path, e))?;
        let mut config: RunConfig = toml::from_str(&raw)
            .map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })?;
        config.base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        if let Some(seed) = seed_override {
            config.run.seed = seed;
        }
        config.validate(path)?;
        Ok(config)
    }

    fn validate(&self, path: &Path) -> Result<(), CliError> {
        let fail = |message: &str| {
            Err(CliError::Config { path: path.to_path_buf(), message: message.to_string() })
        };
        if self.format()?.is_none() {
            return fail("input.format must be \"csv\" or \"jsonl\"");
        }
        if self.filter.min_fixes < 1 {
            return fail("filter.min_fixes must be at least 1");
        }
        if self.text.min_df < 1 {
            return fail("text.min_df must be at least 1");
        }
        if self.topics.k_min < 1 || self.topics.k_min > self.topics.k_max {
            return fail("topics.k_min must satisfy 1 <= k_min <= k_max");
        }
        if self.topics.burn_in >= self.topics.iterations {
            return fail("topics.burn_in must be below topics.iterations");
        }
        let penalty = self.assignment.penalty_factor;
        if !penalty.is_finite() || penalty <= 0.0 {
            return fail("assignment.penalty_factor must be positive");
        }
        Ok(())
    }

    fn format(&self) -> Result<Option<InputFormat>, CliError> {
        Ok(match self.input.format.as_str() {
            "csv" => Some(InputFormat::Csv),
            "jsonl" => Some(InputFormat::Jsonl),
            _ => None,
        })
    }

    pub fn input_format(&self) -> InputFormat {
        self.format().unwrap().expect("validated at load")
    }

    /// Resolve a configured path against the config file's directory.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn input_path(&self) -> PathBuf {
        self.resolve(&self.input.path)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.resolve(&self.run.out_dir)
    }

    pub fn stoplist(&self) -> Result<HashSet<String>, CliError> {
        match &self.text.stopwords {
            None => Ok(default_stoplist()),
            Some(path) => {
                let path = self.resolve(path);
                let raw = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
                Ok(parse_stoplist(&raw))
            }
        }
    }

    pub fn lda_params(&self) -> LdaParams {
        LdaParams {
            alpha: self.topics.alpha,
            beta: self.topics.beta,
            iterations: self.topics.iterations,
            burn_in: self.topics.burn_in,
            seed: self.run.seed,
            average_theta: false,
        }
    }

    pub fn pipeline_config(&self) -> Result<PipelineConfig, CliError> {
        Ok(PipelineConfig {
            min_fixes: self.filter.min_fixes,
            stoplist: self.stoplist()?,
            min_df: self.text.min_df,
            k_min: self.topics.k_min,
            k_max: self.topics.k_max,
            lda: self.lda_params(),
            coherence_top_n: self.topics.top_n,
            fold_in_sweeps: self.topics.fold_in_sweeps,
            penalty_factor: self.assignment.penalty_factor,
        })
    }
}
