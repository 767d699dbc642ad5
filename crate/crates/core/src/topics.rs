//! Latent Dirichlet allocation fitted by collapsed Gibbs sampling.
//!
//! Every random draw comes from a ChaCha8 stream keyed by the seed, with the
//! sweep number selecting the stream and the token's position in the corpus
//! selecting the word offset. A token's draw therefore depends only on
//! `(seed, iteration, doc, position)`, never on scheduling.

use std::io::{BufRead, Write};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::DocTermMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub n_topics: usize,
    /// Symmetric document-topic prior.
    pub alpha: f64,
    /// Symmetric topic-term prior.
    pub beta: f64,
    pub n_iterations: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Average theta and phi over post-burn-in sweeps instead of reading
    /// them off the final state.
    pub average_samples: bool,
}

impl LdaConfig {
    /// Conventional defaults for `k` topics: alpha = 50/k, beta = 0.01,
    /// 1000 sweeps with 200 burn-in.
    pub fn with_topics(k: usize) -> Self {
        LdaConfig {
            n_topics: k,
            alpha: 50.0 / k as f64,
            beta: 0.01,
            n_iterations: 1000,
            burn_in: 200,
            seed: 0,
            average_samples: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_topics < 2 {
            return Err(Error::config("n_topics", "must be at least 2"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::config("alpha", "must be positive"));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::config("beta", "must be positive"));
        }
        if self.burn_in >= self.n_iterations {
            return Err(Error::config("burn_in", "must be smaller than n_iterations"));
        }
        Ok(())
    }
}

impl Default for LdaConfig {
    fn default() -> Self {
        Self::with_topics(8)
    }
}

fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn token_rng(seed: u64, iteration: u64, token_offset: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(iteration);
    rng.set_word_pos(2 * token_offset as u128);
    rng
}

/// A fitted model: token assignments plus the count tables they imply.
#[derive(Clone, Debug)]
pub struct LdaModel {
    n_topics: usize,
    n_terms: usize,
    alpha: f64,
    beta: f64,
    /// Token range of document `d` is `doc_offsets[d]..doc_offsets[d + 1]`.
    doc_offsets: Vec<usize>,
    words: Vec<usize>,
    assignments: Vec<usize>,
    n_dk: Vec<u32>,
    n_kw: Vec<u32>,
    n_k: Vec<u64>,
    theta_sum: Option<Vec<f64>>,
    phi_sum: Option<Vec<f64>>,
    n_samples: usize,
}

pub fn fit_lda(matrix: &DocTermMatrix, config: &LdaConfig) -> Result<LdaModel> {
    config.validate()?;
    if matrix.total_count() == 0 {
        return Err(Error::EmptyCorpus);
    }
    let k = config.n_topics;
    let v = matrix.n_terms();
    let n_docs = matrix.n_docs();

    let mut doc_offsets = Vec::with_capacity(n_docs + 1);
    let mut words = Vec::new();
    doc_offsets.push(0);
    for d in 0..n_docs {
        for &(t, c) in matrix.row(d) {
            words.extend(std::iter::repeat_n(t, c as usize));
        }
        doc_offsets.push(words.len());
    }

    let mut model = LdaModel {
        n_topics: k,
        n_terms: v,
        alpha: config.alpha,
        beta: config.beta,
        doc_offsets,
        assignments: vec![0; words.len()],
        words,
        n_dk: vec![0; n_docs * k],
        n_kw: vec![0; k * v],
        n_k: vec![0; k],
        theta_sum: config.average_samples.then(|| vec![0.0; n_docs * k]),
        phi_sum: config.average_samples.then(|| vec![0.0; k * v]),
        n_samples: 0,
    };

    let mut rng = token_rng(config.seed, 0, 0);
    for i in 0..model.words.len() {
        let z = ((unit_f64(&mut rng) * k as f64) as usize).min(k - 1);
        model.assignments[i] = z;
    }
    model.rebuild_counts();

    let mut weights = vec![0.0; k];
    for it in 1..=config.n_iterations {
        model.sweep(config.seed, it as u64, &mut weights);
        debug_assert!(model.counts_consistent());
        if config.average_samples && it > config.burn_in {
            model.accumulate_sample();
        }
    }
    Ok(model)
}

impl LdaModel {
    fn rebuild_counts(&mut self) {
        let k = self.n_topics;
        self.n_dk.iter_mut().for_each(|c| *c = 0);
        self.n_kw.iter_mut().for_each(|c| *c = 0);
        self.n_k.iter_mut().for_each(|c| *c = 0);
        for d in 0..self.n_docs() {
            for i in self.doc_offsets[d]..self.doc_offsets[d + 1] {
                let z = self.assignments[i];
                self.n_dk[d * k + z] += 1;
                self.n_kw[z * self.n_terms + self.words[i]] += 1;
                self.n_k[z] += 1;
            }
        }
    }

    /// Unnormalized conditional for a token already removed from the counts.
    fn fill_weights(&self, d: usize, w: usize, weights: &mut [f64]) {
        let k = self.n_topics;
        let v_beta = self.n_terms as f64 * self.beta;
        for (z, wt) in weights.iter_mut().enumerate() {
            *wt = (self.n_dk[d * k + z] as f64 + self.alpha) * (self.n_kw[z * self.n_terms + w] as f64 + self.beta)
                / (self.n_k[z] as f64 + v_beta);
        }
    }

    fn sweep(&mut self, seed: u64, iteration: u64, weights: &mut [f64]) {
        let k = self.n_topics;
        for d in 0..self.n_docs() {
            let (start, end) = (self.doc_offsets[d], self.doc_offsets[d + 1]);
            if start == end {
                continue;
            }
            let mut rng = token_rng(seed, iteration, start);
            for i in start..end {
                let w = self.words[i];
                let old = self.assignments[i];
                self.n_dk[d * k + old] -= 1;
                self.n_kw[old * self.n_terms + w] -= 1;
                self.n_k[old] -= 1;

                self.fill_weights(d, w, weights);
                let total: f64 = weights.iter().sum();
                let mut u = unit_f64(&mut rng) * total;
                let mut new = k - 1;
                for (z, &wt) in weights.iter().enumerate() {
                    if u < wt {
                        new = z;
                        break;
                    }
                    u -= wt;
                }

                self.assignments[i] = new;
                self.n_dk[d * k + new] += 1;
                self.n_kw[new * self.n_terms + w] += 1;
                self.n_k[new] += 1;
            }
        }
    }

    fn accumulate_sample(&mut self) {
        let theta = self.point_theta();
        let phi = self.point_phi();
        if let Some(sum) = self.theta_sum.as_mut() {
            sum.iter_mut().zip(&theta).for_each(|(s, x)| *s += x);
        }
        if let Some(sum) = self.phi_sum.as_mut() {
            sum.iter_mut().zip(&phi).for_each(|(s, x)| *s += x);
        }
        self.n_samples += 1;
    }

    fn point_theta(&self) -> Vec<f64> {
        let k = self.n_topics;
        let mut out = vec![0.0; self.n_docs() * k];
        for d in 0..self.n_docs() {
            let n_d = self.doc_len(d);
            if n_d == 0 {
                out[d * k..(d + 1) * k].fill(1.0 / k as f64);
                continue;
            }
            let denom = n_d as f64 + k as f64 * self.alpha;
            for z in 0..k {
                out[d * k + z] = (self.n_dk[d * k + z] as f64 + self.alpha) / denom;
            }
        }
        out
    }

    fn point_phi(&self) -> Vec<f64> {
        let v = self.n_terms;
        let mut out = vec![0.0; self.n_topics * v];
        for z in 0..self.n_topics {
            let denom = self.n_k[z] as f64 + v as f64 * self.beta;
            for w in 0..v {
                out[z * v + w] = (self.n_kw[z * v + w] as f64 + self.beta) / denom;
            }
        }
        out
    }

    pub fn n_topics(&self) -> usize {
        self.n_topics
    }

    pub fn n_terms(&self) -> usize {
        self.n_terms
    }

    pub fn n_docs(&self) -> usize {
        self.doc_offsets.len() - 1
    }

    pub fn doc_len(&self, doc: usize) -> usize {
        self.doc_offsets[doc + 1] - self.doc_offsets[doc]
    }

    /// Topic label of every token occurrence, documents in order, each
    /// document's tokens ordered by term id.
    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    /// Term id of every token occurrence, aligned with [`Self::assignments`].
    pub fn tokens(&self) -> &[usize] {
        &self.words
    }

    pub fn doc_topic_count(&self, doc: usize, topic: usize) -> u32 {
        self.n_dk[doc * self.n_topics + topic]
    }

    pub fn topic_term_count(&self, topic: usize, term: usize) -> u32 {
        self.n_kw[topic * self.n_terms + term]
    }

    pub fn topic_count(&self, topic: usize) -> u64 {
        self.n_k[topic]
    }

    /// Topic-term distributions, one row per topic. Averaged over the
    /// post-burn-in sweeps when the model was fitted with averaging.
    pub fn phi(&self) -> Vec<Vec<f64>> {
        let flat = match (&self.phi_sum, self.n_samples) {
            (Some(sum), n) if n > 0 => sum.iter().map(|s| s / n as f64).collect(),
            _ => self.point_phi(),
        };
        flat.chunks(self.n_terms.max(1))
            .map(<[f64]>::to_vec)
            .take(self.n_topics)
            .collect()
    }

    /// Normalized full conditional of token `position` (within `doc`) given
    /// every other assignment.
    pub fn token_conditional(&self, doc: usize, position: usize) -> Vec<f64> {
        let k = self.n_topics;
        let i = self.doc_offsets[doc] + position;
        assert!(i < self.doc_offsets[doc + 1], "position out of range");
        let (w, z) = (self.words[i], self.assignments[i]);
        let mut probe = self.clone();
        probe.n_dk[doc * k + z] -= 1;
        probe.n_kw[z * self.n_terms + w] -= 1;
        probe.n_k[z] -= 1;
        let mut weights = vec![0.0; k];
        probe.fill_weights(doc, w, &mut weights);
        let total: f64 = weights.iter().sum();
        weights.iter().map(|x| x / total).collect()
    }

    /// Recount every table from the assignments and compare.
    pub fn counts_consistent(&self) -> bool {
        let mut fresh = self.clone();
        fresh.rebuild_counts();
        let k = self.n_topics;
        let rows_ok =
            (0..self.n_docs()).all(|d| (0..k).map(|z| self.n_dk[d * k + z] as usize).sum::<usize>() == self.doc_len(d));
        let topics_ok = (0..k).all(|z| {
            (0..self.n_terms)
                .map(|w| self.n_kw[z * self.n_terms + w] as u64)
                .sum::<u64>()
                == self.n_k[z]
        });
        rows_ok && topics_ok && fresh.n_dk == self.n_dk && fresh.n_kw == self.n_kw && fresh.n_k == self.n_k
    }

    /// Phi as CSV preceded by a `# key = value` block describing the fit.
    pub fn write_phi_csv<W: Write>(&self, config: &LdaConfig, mut out: W) -> Result<()> {
        let io = |e| Error::io("<phi>", e);
        writeln!(out, "# n_topics = {}", config.n_topics).map_err(io)?;
        writeln!(out, "# alpha = {}", config.alpha).map_err(io)?;
        writeln!(out, "# beta = {}", config.beta).map_err(io)?;
        writeln!(out, "# n_iterations = {}", config.n_iterations).map_err(io)?;
        writeln!(out, "# burn_in = {}", config.burn_in).map_err(io)?;
        writeln!(out, "# seed = {}", config.seed).map_err(io)?;
        writeln!(out, "# average_samples = {}", config.average_samples).map_err(io)?;
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["topic".to_string()];
        header.extend((0..self.n_terms).map(|t| format!("phi_{t}")));
        w.write_record(&header)?;
        for (z, row) in self.phi().iter().enumerate() {
            let mut rec = vec![z.to_string()];
            rec.extend(row.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(io)?;
        Ok(())
    }
}

/// Per-document topic prevalences, one simplex row per document.
#[derive(Clone, Debug, PartialEq)]
pub struct TopicMatrix {
    labels: Vec<String>,
    n_topics: usize,
    theta: Vec<f64>,
}

impl TopicMatrix {
    pub fn new(labels: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if labels.len() != rows.len() {
            return Err(Error::LengthMismatch(labels.len(), rows.len()));
        }
        let n_topics = rows.first().map_or(0, Vec::len);
        let mut theta = Vec::with_capacity(rows.len() * n_topics);
        for row in rows {
            if row.len() != n_topics {
                return Err(Error::LengthMismatch(n_topics, row.len()));
            }
            theta.extend(row);
        }
        Ok(TopicMatrix {
            labels,
            n_topics,
            theta,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_topics(&self) -> usize {
        self.n_topics
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.theta[i * self.n_topics..(i + 1) * self.n_topics]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.theta.chunks(self.n_topics.max(1)).take(self.n_rows())
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.labels.len() {
            return Err(Error::LengthMismatch(self.labels.len(), labels.len()));
        }
        self.labels = labels;
        Ok(self)
    }

    /// CSV with header `doc_id,theta_0,...,theta_{K-1}`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["doc_id".to_string()];
        header.extend((0..self.n_topics).map(|k| format!("theta_{k}")));
        w.write_record(&header)?;
        for (label, row) in self.labels.iter().zip(self.rows()) {
            let mut rec = vec![label.clone()];
            rec.extend(row.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<theta>", e))?;
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let mut labels = Vec::new();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let mut fields = rec.iter();
            let label = fields.next().ok_or_else(|| Error::Invalid("empty theta row".into()))?;
            let row = fields
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Invalid(format!("bad theta value `{f}` for {label}")))
                })
                .collect::<Result<Vec<_>>>()?;
            labels.push(label.to_string());
            rows.push(row);
        }
        Self::new(labels, rows)
    }
}

/// `theta[d][k] = (n_dk + alpha) / (N_d + K alpha)`; documents without
/// tokens get the uniform vector. With `average_samples`, the average over
/// post-burn-in sweeps is returned instead.
pub fn topic_prevalences(model: &LdaModel, matrix: &DocTermMatrix, config: &LdaConfig) -> Result<TopicMatrix> {
    if model.n_docs() != matrix.n_docs()
        || model.n_terms() != matrix.n_terms()
        || (0..matrix.n_docs()).any(|d| model.doc_len(d) as u64 != matrix.doc_len(d))
    {
        return Err(Error::Invalid("model was not fitted on this matrix".into()));
    }
    if config.n_topics != model.n_topics {
        return Err(Error::LengthMismatch(model.n_topics, config.n_topics));
    }
    let k = model.n_topics;
    let flat = match (&model.theta_sum, model.n_samples) {
        (Some(sum), n) if config.average_samples && n > 0 => sum.iter().map(|s| s / n as f64).collect(),
        _ => {
            let mut m = model.clone();
            m.alpha = config.alpha;
            m.point_theta()
        }
    };
    let rows = flat.chunks(k).map(<[f64]>::to_vec).collect();
    TopicMatrix::new(matrix.doc_ids().to_vec(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: Vec<Vec<(usize, u32)>>, n_terms: usize) -> DocTermMatrix {
        let ids = (0..rows.len()).map(|i| format!("d{i}")).collect();
        DocTermMatrix::from_rows(ids, n_terms, rows).unwrap()
    }

    fn quick(k: usize) -> LdaConfig {
        LdaConfig {
            n_iterations: 50,
            burn_in: 10,
            ..LdaConfig::with_topics(k)
        }
    }

    #[test]
    fn config_validation() {
        assert!(LdaConfig::with_topics(1).validate().is_err());
        let bad = LdaConfig {
            burn_in: 1000,
            ..LdaConfig::default()
        };
        assert!(bad.validate().is_err());
        assert!(LdaConfig {
            alpha: 0.0,
            ..LdaConfig::default()
        }
        .validate()
        .is_err());
        assert_eq!(LdaConfig::default().alpha, 6.25);
    }

    #[test]
    fn empty_corpus_is_an_error() {
        let m = matrix(vec![vec![], vec![]], 3);
        assert!(matches!(fit_lda(&m, &quick(2)), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn one_term_vocabulary_gives_point_mass() {
        let m = matrix(vec![vec![(0, 5)], vec![(0, 2)]], 1);
        for k in [2, 3, 8] {
            let model = fit_lda(&m, &quick(k)).unwrap();
            for row in model.phi() {
                assert_eq!(row, vec![1.0]);
            }
        }
    }

    #[test]
    fn theta_formula() {
        // Force n_d0 = 3, n_d1 = 1 by building the counts directly.
        let m = matrix(vec![vec![(0, 4)]], 1);
        let cfg = LdaConfig { alpha: 0.5, ..quick(2) };
        let mut model = fit_lda(&m, &cfg).unwrap();
        model.assignments = vec![0, 0, 0, 1];
        model.rebuild_counts();
        let theta = topic_prevalences(&model, &m, &cfg).unwrap();
        assert!((theta.row(0)[0] - 0.7).abs() < 1e-15);
        assert!((theta.row(0)[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn degenerate_assignment_with_vanishing_alpha() {
        let m = matrix(vec![vec![(0, 6)]], 1);
        let cfg = LdaConfig {
            alpha: 1e-12,
            ..quick(2)
        };
        let mut model = fit_lda(&m, &cfg).unwrap();
        model.assignments = vec![0; 6];
        model.rebuild_counts();
        let theta = topic_prevalences(&model, &m, &cfg).unwrap();
        assert!((theta.row(0)[0] - 1.0).abs() < 1e-9);
        assert!(theta.row(0)[1] < 1e-9);
    }

    #[test]
    fn empty_document_gets_uniform_theta() {
        let m = matrix(vec![vec![(0, 3), (1, 2)], vec![]], 2);
        let cfg = quick(8);
        let model = fit_lda(&m, &cfg).unwrap();
        let theta = topic_prevalences(&model, &m, &cfg).unwrap();
        assert!(theta.row(1).iter().all(|&x| x == 0.125));
    }

    #[test]
    fn counts_stay_consistent_and_seeded_runs_agree() {
        let m = matrix(
            vec![vec![(0, 3), (2, 4)], vec![(1, 5), (2, 1)], vec![(0, 2), (1, 2)]],
            3,
        );
        let a = fit_lda(&m, &quick(3)).unwrap();
        let b = fit_lda(&m, &quick(3)).unwrap();
        assert!(a.counts_consistent());
        assert_eq!(a.assignments(), b.assignments());
        let c = fit_lda(&m, &LdaConfig { seed: 9, ..quick(3) }).unwrap();
        assert!(c.counts_consistent());
    }

    #[test]
    fn averaged_estimates_are_on_the_simplex() {
        let m = matrix(vec![vec![(0, 3), (2, 4)], vec![(1, 5), (2, 1)]], 3);
        let cfg = LdaConfig {
            average_samples: true,
            ..quick(2)
        };
        let model = fit_lda(&m, &cfg).unwrap();
        let theta = topic_prevalences(&model, &m, &cfg).unwrap();
        for row in theta.rows() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        for row in model.phi() {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn mismatched_matrix_rejected() {
        let m = matrix(vec![vec![(0, 3)]], 2);
        let other = matrix(vec![vec![(0, 3)], vec![(1, 1)]], 2);
        let model = fit_lda(&m, &quick(2)).unwrap();
        assert!(topic_prevalences(&model, &other, &quick(2)).is_err());
    }

    #[test]
    fn theta_csv_round_trip() {
        let t = TopicMatrix::new(vec!["USA".into(), "FRA".into()], vec![vec![0.25, 0.75], vec![0.5, 0.5]]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("doc_id,theta_0,theta_1\nUSA,0.25,0.75\n"));
        assert_eq!(TopicMatrix::read_csv(&buf[..]).unwrap(), t);
    }
}
