//! Run configuration: a line-oriented `key = value` file with `[sections]`
//! (a TOML subset). Unknown keys are rejected; missing keys take defaults.
//!
//! ```text
//! corpus_root = "speeches"
//! output_dir = "out"
//! seed = 42
//! threshold = 0.8
//!
//! [years]
//! start = 1970
//! end = 2014
//!
//! [lda]
//! n_topics = 8
//! ```

use std::fs;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::graph::{LowDegree, WindowAlignment};
use crate::infomet::{NmiConfig, NmiMode};
use crate::topics::LdaConfig;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    corpus_root: PathBuf,
    output_dir: PathBuf,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_threshold")]
    threshold: f64,
    threads: Option<usize>,
    #[serde(default)]
    years: RawYears,
    #[serde(default)]
    preprocess: RawPreprocess,
    #[serde(default)]
    lda: RawLda,
    #[serde(default)]
    nmi: RawNmi,
    #[serde(default)]
    graph: RawGraph,
    #[serde(default)]
    smoothing: RawSmoothing,
    #[serde(default)]
    infomap: RawInfomap,
}

fn default_threshold() -> f64 {
    0.8
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawYears {
    start: i32,
    end: i32,
}

impl Default for RawYears {
    fn default() -> Self {
        RawYears { start: 1970, end: 2014 }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawPreprocess {
    stopwords: Option<PathBuf>,
    stem: bool,
    min_term_count: u64,
    min_doc_count: u64,
}

impl Default for RawPreprocess {
    fn default() -> Self {
        RawPreprocess {
            stopwords: None,
            stem: true,
            min_term_count: 10,
            min_doc_count: 5,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLda {
    #[serde(default = "default_topics")]
    n_topics: usize,
    alpha: Option<f64>,
    beta: Option<f64>,
    n_iterations: Option<usize>,
    burn_in: Option<usize>,
    #[serde(default)]
    average_samples: bool,
}

fn default_topics() -> usize {
    8
}

impl Default for RawLda {
    fn default() -> Self {
        RawLda {
            n_topics: default_topics(),
            alpha: None,
            beta: None,
            n_iterations: None,
            burn_in: None,
            average_samples: false,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawNmi {
    bins: usize,
    mode: NmiMode,
}

impl Default for RawNmi {
    fn default() -> Self {
        let d = NmiConfig::default();
        RawNmi {
            bins: d.bins,
            mode: d.mode,
        }
    }
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
struct RawGraph {
    low_degree: LowDegree,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawSmoothing {
    window: usize,
    alignment: WindowAlignment,
}

impl Default for RawSmoothing {
    fn default() -> Self {
        RawSmoothing {
            window: 10,
            alignment: WindowAlignment::Trailing,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawInfomap {
    trials: usize,
    weighted: bool,
}

impl Default for RawInfomap {
    fn default() -> Self {
        RawInfomap {
            trials: 10,
            weighted: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreprocessSettings {
    /// Custom stopword file; the bundled English list when absent.
    pub stopwords: Option<PathBuf>,
    pub stem: bool,
    pub min_term_count: u64,
    pub min_doc_count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub corpus_root: PathBuf,
    pub output_dir: PathBuf,
    pub year_start: i32,
    pub year_end: i32,
    pub seed: u64,
    pub threshold: f64,
    /// Worker pool size; `None` uses every CPU.
    pub threads: Option<usize>,
    pub preprocess: PreprocessSettings,
    /// `seed` here is a base value; each year derives its own.
    pub lda: LdaConfig,
    pub nmi: NmiConfig,
    pub low_degree: LowDegree,
    pub smoothing_window: usize,
    pub smoothing_alignment: WindowAlignment,
    pub infomap_trials: usize,
    pub weighted_walk: bool,
}

impl PipelineConfig {
    pub fn years(&self) -> RangeInclusive<i32> {
        self.year_start..=self.year_end
    }

    /// Parse config text. Relative paths are resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(toml_error)?;

        if !(0.0..=1.0).contains(&raw.threshold) {
            return Err(Error::config(
                "threshold",
                format!("{} is outside [0, 1]", raw.threshold),
            ));
        }
        if raw.years.start > raw.years.end {
            return Err(Error::config("years", "start is after end"));
        }
        if raw.threads == Some(0) {
            return Err(Error::config("threads", "must be at least 1"));
        }
        if raw.preprocess.min_term_count < 1 {
            return Err(Error::config("min_term_count", "must be at least 1"));
        }
        if raw.preprocess.min_doc_count < 1 {
            return Err(Error::config("min_doc_count", "must be at least 1"));
        }
        if raw.nmi.bins < 2 {
            return Err(Error::config("bins", "must be at least 2"));
        }
        if raw.smoothing.window < 1 {
            return Err(Error::config("window", "must be at least 1"));
        }
        if raw.infomap.trials < 1 {
            return Err(Error::config("trials", "must be at least 1"));
        }

        let defaults = LdaConfig::with_topics(raw.lda.n_topics.max(1));
        let lda = LdaConfig {
            n_topics: raw.lda.n_topics,
            alpha: raw.lda.alpha.unwrap_or(defaults.alpha),
            beta: raw.lda.beta.unwrap_or(defaults.beta),
            n_iterations: raw.lda.n_iterations.unwrap_or(defaults.n_iterations),
            burn_in: raw.lda.burn_in.unwrap_or(defaults.burn_in),
            seed: raw.seed,
            average_samples: raw.lda.average_samples,
        };
        lda.validate()?;

        let resolve = |p: PathBuf| if p.is_absolute() { p } else { base_dir.join(p) };
        Ok(PipelineConfig {
            corpus_root: resolve(raw.corpus_root),
            output_dir: resolve(raw.output_dir),
            year_start: raw.years.start,
            year_end: raw.years.end,
            seed: raw.seed,
            threshold: raw.threshold,
            threads: raw.threads,
            preprocess: PreprocessSettings {
                stopwords: raw.preprocess.stopwords.map(resolve),
                stem: raw.preprocess.stem,
                min_term_count: raw.preprocess.min_term_count,
                min_doc_count: raw.preprocess.min_doc_count,
            },
            lda,
            nmi: NmiConfig {
                bins: raw.nmi.bins,
                mode: raw.nmi.mode,
            },
            low_degree: raw.graph.low_degree,
            smoothing_window: raw.smoothing.window,
            smoothing_alignment: raw.smoothing.alignment,
            infomap_trials: raw.infomap.trials,
            weighted_walk: raw.infomap.weighted,
        })
    }

    /// SHA-256 over the resolved settings that affect numeric output.
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.threads = None;
        let json = serde_json::to_vec(&canon).expect("config serializes");
        hex::encode(Sha256::digest(&json))
    }
}

fn toml_error(e: toml::de::Error) -> Error {
    let msg = e.message().to_string();
    let key = msg
        .strip_prefix("unknown field `")
        .and_then(|rest| rest.split('`').next())
        .map(str::to_string)
        .or_else(|| {
            msg.strip_prefix("missing field `")
                .and_then(|rest| rest.split('`').next())
                .map(str::to_string)
        })
        .unwrap_or_else(|| "<syntax>".to_string());
    let location = e.span().map(|s| format!(" (byte {})", s.start)).unwrap_or_default();
    Error::Config {
        key,
        message: format!("{msg}{location}"),
    }
}

/// Read and validate a config file.
pub fn validate_config(path: &Path) -> Result<PipelineConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    PipelineConfig::parse(&text, base)
}
