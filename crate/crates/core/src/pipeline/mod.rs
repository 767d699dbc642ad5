//! End-to-end yearly runs: corpus, topics, network, metrics, communities.
//!
//! Years are independent once the vocabulary is trimmed over the whole
//! corpus. Each year writes only inside its own directory; the cross-year
//! tables are written after every year has finished.

mod config;
mod svg;

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::warn;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{
    load_corpus, preprocess_all, trim_vocabulary, DocTermMatrix, PreprocessConfig, SpeechDoc, StopWords,
};
use crate::error::{Error, Result};
use crate::graph::{
    build_network, moving_average, write_dot, write_edge_list, write_graphml, write_metrics_csv, write_smoothed_csv,
    Graph, MetricsRow, SmoothedSeries,
};
use crate::infomap::{
    communities_table, infomap_search_with, visit_rates_with, write_tree, CommunityTable, InfomapConfig,
};
use crate::infomet::nmi_matrix;
use crate::topics::{fit_lda, topic_prevalences, LdaConfig};

pub use config::{validate_config, PipelineConfig, PreprocessSettings};
pub use svg::line_chart;

/// Environment variable overriding the worker pool size.
pub const THREADS_ENV: &str = "SEMNET_THREADS";

/// Per-purpose seed for one year.
pub fn derive_seed(seed: u64, year: i32, salt: u64) -> u64 {
    let mut z =
        seed ^ (year as i64 as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt.wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const LDA_SALT: u64 = 1;
const INFOMAP_SALT: u64 = 2;

#[derive(Clone, Debug, Serialize)]
pub struct YearArtifacts {
    pub year: i32,
    pub n_docs: usize,
    pub files: Vec<PathBuf>,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub years: Vec<YearArtifacts>,
    /// Cross-year and corpus-level files.
    pub files: Vec<PathBuf>,
    pub failed_years: Vec<i32>,
    pub warnings: Vec<String>,
    pub seconds: f64,
}

impl RunManifest {
    pub fn is_complete(&self) -> bool {
        self.failed_years.is_empty()
    }

    pub fn all_files(&self) -> impl Iterator<Item = &PathBuf> {
        self.files.iter().chain(self.years.iter().flat_map(|y| y.files.iter()))
    }

    fn warn(&mut self, msg: String) {
        warn!("{msg}");
        self.warnings.push(msg);
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

fn resolve_threads(config: &PipelineConfig) -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .or(config.threads)
}

struct YearResult {
    artifacts: YearArtifacts,
    metrics: MetricsRow,
    communities: CommunityTable,
}

struct YearJob<'a> {
    year: i32,
    docs: Vec<&'a SpeechDoc>,
    matrix: DocTermMatrix,
}

fn run_year(job: &YearJob<'_>, config: &PipelineConfig) -> Result<YearResult> {
    let started = Instant::now();
    let dir = config.output_dir.join(job.year.to_string());
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut files = Vec::new();
    let mut emit = |name: &str, write: &dyn Fn(BufWriter<File>) -> Result<()>| -> Result<()> {
        let path = dir.join(name);
        write(create(&path)?)?;
        files.push(path);
        Ok(())
    };

    let lda_config = LdaConfig {
        seed: derive_seed(config.seed, job.year, LDA_SALT),
        ..config.lda.clone()
    };
    let model = fit_lda(&job.matrix, &lda_config)?;
    let countries: Vec<String> = job.docs.iter().map(|d| d.country.to_string()).collect();
    let theta = topic_prevalences(&model, &job.matrix, &lda_config)?.with_labels(countries)?;
    emit("theta.csv", &|w| theta.write_csv(w))?;
    emit("phi.csv", &|w| model.write_phi_csv(&lda_config, w))?;

    let graph: Graph = build_network(&theta, config.threshold, &config.nmi)?;
    let nmi = nmi_matrix(&theta, &config.nmi)?;
    emit("nmi.csv", &|w| nmi.write_csv(w))?;
    emit("edges.csv", &|w| write_edge_list(&graph, w))?;
    emit("network.graphml", &|w| write_graphml(&graph, w))?;
    emit("network.dot", &|w| write_dot(&graph, w))?;

    let metrics = MetricsRow::compute(&graph, job.year, config.low_degree)?;

    let infomap = InfomapConfig {
        seed: derive_seed(config.seed, job.year, INFOMAP_SALT),
        trials: config.infomap_trials,
        weighted: config.weighted_walk,
    };
    let (partition, _) = infomap_search_with(&graph, &infomap)?;
    let communities = communities_table(&partition, graph.labels(), job.year)?;
    let rates = visit_rates_with(&graph, config.weighted_walk)?;
    emit("communities.csv", &|w| communities.write_csv(w))?;
    emit("communities.tree", &|w| write_tree(&graph, &partition, &rates, w))?;

    Ok(YearResult {
        artifacts: YearArtifacts {
            year: job.year,
            n_docs: job.docs.len(),
            files,
            seconds: started.elapsed().as_secs_f64(),
        },
        metrics,
        communities,
    })
}

const METRIC_NAMES: [&str; 4] = ["density", "avg_path_length", "global_clustering", "diameter"];

fn metric_value(row: &MetricsRow, name: &str) -> f64 {
    match name {
        "density" => row.density,
        "avg_path_length" => row.avg_path_length,
        "global_clustering" => row.global_clustering,
        _ => row.diameter as f64,
    }
}

/// Run every year in the configured range and write all outputs.
///
/// Fails outright only when the corpus cannot be read or holds no documents;
/// a failing year is recorded in the manifest and the others continue.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunManifest> {
    let started = Instant::now();
    let mut manifest = RunManifest {
        config_hash: config.hash(),
        ..RunManifest::default()
    };

    let corpus = load_corpus(&config.corpus_root, config.years())?;
    for w in &corpus.warnings {
        manifest.warn(w.to_string());
    }
    if corpus.docs.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let stopwords = match &config.preprocess.stopwords {
        Some(path) => StopWords::parse(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)?,
        None => StopWords::english(),
    };
    let pre = PreprocessConfig {
        stopwords,
        stem: config.preprocess.stem,
    };

    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = resolve_threads(config) {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| Error::Invalid(format!("thread pool: {e}")))?
    };

    let tokenized = pool.install(|| preprocess_all(&corpus.docs, &pre));
    let (vocab, dtm) = trim_vocabulary(
        &tokenized,
        config.preprocess.min_term_count,
        config.preprocess.min_doc_count,
    )?;
    for d in dtm.empty_rows() {
        manifest.warn(format!("{}: no tokens left after trimming", dtm.doc_ids()[d]));
    }

    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let vocab_path = out.join("vocabulary.txt");
    vocab
        .write_text(create(&vocab_path)?)
        .map_err(|e| Error::io(&vocab_path, e))?;
    let dtm_path = out.join("dtm.csv");
    dtm.write_csv(create(&dtm_path)?)?;
    manifest.files.extend([vocab_path, dtm_path]);

    let mut by_year: BTreeMap<i32, Vec<usize>> = BTreeMap::new();
    for (i, d) in corpus.docs.iter().enumerate() {
        by_year.entry(d.year).or_default().push(i);
    }
    let mut jobs = Vec::new();
    for (&year, idx) in &by_year {
        if idx.len() < 2 {
            manifest.warn(format!("{year}: skipped, only {} document(s)", idx.len()));
            continue;
        }
        jobs.push(YearJob {
            year,
            docs: idx.iter().map(|&i| &corpus.docs[i]).collect(),
            matrix: dtm.select_rows(idx),
        });
    }

    let results: Vec<(i32, Result<YearResult>)> =
        pool.install(|| jobs.par_iter().map(|job| (job.year, run_year(job, config))).collect());

    let mut metrics = Vec::new();
    let mut tables = Vec::new();
    for (year, result) in results {
        match result {
            Ok(r) => {
                metrics.push(r.metrics);
                tables.push(r.communities);
                manifest.years.push(r.artifacts);
            }
            Err(e) => {
                manifest.warn(format!("{year}: failed: {e}"));
                manifest.failed_years.push(year);
            }
        }
    }

    let metrics_path = out.join("metrics.csv");
    write_metrics_csv(&metrics, create(&metrics_path)?)?;
    manifest.files.push(metrics_path);

    let communities_path = out.join("communities.csv");
    {
        let mut w = csv::Writer::from_writer(create(&communities_path)?);
        w.write_record(["year", "community", "members"])?;
        for t in &tables {
            t.write_rows(&mut w)?;
        }
        w.flush().map_err(|e| Error::io(&communities_path, e))?;
    }
    manifest.files.push(communities_path);

    write_smoothed(config, &metrics, &mut manifest)?;

    manifest.seconds = started.elapsed().as_secs_f64();
    let manifest_path = out.join("manifest.json");
    manifest.files.push(manifest_path.clone());
    serde_json::to_writer_pretty(create(&manifest_path)?, &manifest)
        .map_err(|e| Error::Invalid(format!("manifest: {e}")))?;
    Ok(manifest)
}

fn write_smoothed(config: &PipelineConfig, metrics: &[MetricsRow], manifest: &mut RunManifest) -> Result<()> {
    let mut smoothed: Vec<(&str, SmoothedSeries)> = Vec::new();
    for name in METRIC_NAMES {
        let series: Vec<(i32, f64)> = metrics.iter().map(|r| (r.year, metric_value(r, name))).collect();
        match moving_average(&series, config.smoothing_window, config.smoothing_alignment) {
            Ok(s) => smoothed.push((name, s)),
            Err(e) => {
                manifest.warn(format!("smoothing skipped: {e}"));
                return Ok(());
            }
        }
    }
    let out = &config.output_dir;
    let path = out.join("metrics_smoothed.csv");
    let columns: Vec<(&str, &SmoothedSeries)> = smoothed.iter().map(|(n, s)| (*n, s)).collect();
    write_smoothed_csv(&columns, create(&path)?)?;
    manifest.files.push(path);
    for (name, s) in &smoothed {
        let points: Vec<(i32, f64)> = s.years().zip(s.values.iter().copied()).collect();
        let title = format!("{name}, {}-year moving average", s.window);
        let path = out.join(format!("{name}.svg"));
        fs::write(&path, line_chart(&title, &points)).map_err(|e| Error::io(&path, e))?;
        manifest.files.push(path);
    }
    Ok(())
}
