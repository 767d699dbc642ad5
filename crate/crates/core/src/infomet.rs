//! Entropy, mutual information and normalized mutual information between
//! topic-prevalence vectors. All quantities are in bits.
//!
//! Count-based entropies sum their terms in sorted count order, so any two
//! histograms that are transposes of each other (or share the same multiset
//! of cell counts) produce bit-identical results.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::topics::TopicMatrix;

const SIMPLEX_TOL: f64 = 1e-9;

/// A non-negative vector summing to one within 1e-9.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        if p.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::NotSimplex("entries must be finite and non-negative".into()));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::NotSimplex(format!("entries sum to {sum}")));
        }
        Ok(ProbVector(p))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `-sum p log2 p`, with `0 log 0 = 0`.
pub fn entropy(p: &ProbVector) -> f64 {
    let h: f64 = p.0.iter().filter(|&&x| x > 0.0).map(|&x| -x * x.log2()).sum();
    h.max(0.0)
}

fn entropy_of_counts(counts: impl IntoIterator<Item = u64>) -> f64 {
    let mut counts: Vec<u64> = counts.into_iter().filter(|&c| c > 0).collect();
    counts.sort_unstable();
    let n = counts.iter().sum::<u64>() as f64;
    let h: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

/// B x B co-occurrence counts of binned value pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JointHistogram {
    bins: usize,
    counts: Vec<u64>,
}

impl JointHistogram {
    /// Build from a row-major `bins x bins` count table.
    pub fn from_counts(bins: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != bins * bins {
            return Err(Error::LengthMismatch(bins * bins, counts.len()));
        }
        Ok(JointHistogram { bins, counts })
    }

    /// Histogram of `(x_k, y_k)` bin-index pairs.
    pub fn from_pairs(bins: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut counts = vec![0; bins * bins];
        for (x, y) in pairs {
            if x >= bins || y >= bins {
                return Err(Error::Invalid(format!("bin ({x}, {y}) out of range for {bins} bins")));
            }
            counts[x * bins + y] += 1;
        }
        Ok(JointHistogram { bins, counts })
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn count(&self, x: usize, y: usize) -> u64 {
        self.counts[x * self.bins + y]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn row_marginals(&self) -> Vec<u64> {
        self.counts.chunks(self.bins).map(|r| r.iter().sum()).collect()
    }

    pub fn col_marginals(&self) -> Vec<u64> {
        (0..self.bins)
            .map(|y| (0..self.bins).map(|x| self.count(x, y)).sum())
            .collect()
    }

    pub fn transpose(&self) -> Self {
        let b = self.bins;
        let counts = (0..b * b).map(|i| self.count(i % b, i / b)).collect();
        JointHistogram { bins: b, counts }
    }

    pub fn entropy_x(&self) -> f64 {
        entropy_of_counts(self.row_marginals())
    }

    pub fn entropy_y(&self) -> f64 {
        entropy_of_counts(self.col_marginals())
    }

    pub fn joint_entropy(&self) -> f64 {
        entropy_of_counts(self.counts.iter().copied())
    }
}

/// Plug-in mutual information `H(X) + H(Y) - H(X, Y)`, clamped at zero.
pub fn mutual_information(joint: &JointHistogram) -> f64 {
    if joint.total() == 0 {
        return 0.0;
    }
    let i = (joint.entropy_x() + joint.entropy_y()) - joint.joint_entropy();
    i.max(0.0)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NmiMode {
    /// Bin each vector's components and treat index-aligned pairs as joint
    /// samples.
    #[default]
    Paired,
    /// X picks one of the two vectors uniformly, Y is a topic drawn from it.
    Mixture,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NmiConfig {
    pub bins: usize,
    pub mode: NmiMode,
}

impl Default for NmiConfig {
    fn default() -> Self {
        NmiConfig {
            bins: 4,
            mode: NmiMode::Paired,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MiResult {
    pub i_xy: f64,
    pub h_x: f64,
    pub h_y: f64,
    pub nmi: f64,
}

/// Equal-width bin of `x` over `[0, 1]`; `1.0` lands in the last bin.
pub fn bin_index(x: f64, bins: usize) -> usize {
    ((x * bins as f64) as usize).min(bins - 1)
}

fn normalize(i_xy: f64, h_x: f64, h_y: f64) -> f64 {
    let denom = (h_x * h_y).sqrt();
    if denom > 0.0 {
        (i_xy / denom).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Normalized mutual information `I / sqrt(H_x H_y)` between two prevalence
/// vectors. A zero marginal entropy yields 0.
pub fn normalized_mi(u: &[f64], v: &[f64], config: &NmiConfig) -> Result<MiResult> {
    if u.len() != v.len() {
        return Err(Error::LengthMismatch(u.len(), v.len()));
    }
    if u.len() < 2 {
        return Err(Error::Invalid("vectors need at least two components".into()));
    }
    if config.bins < 2 {
        return Err(Error::config("bins", "must be at least 2"));
    }
    let pu = ProbVector::new(u.to_vec())?;
    let pv = ProbVector::new(v.to_vec())?;
    Ok(match config.mode {
        NmiMode::Paired => {
            let b = config.bins;
            let joint =
                JointHistogram::from_pairs(b, u.iter().zip(v).map(|(&x, &y)| (bin_index(x, b), bin_index(y, b))))?;
            let (h_x, h_y) = (joint.entropy_x(), joint.entropy_y());
            let i_xy = mutual_information(&joint);
            MiResult {
                i_xy,
                h_x,
                h_y,
                nmi: normalize(i_xy, h_x, h_y),
            }
        }
        NmiMode::Mixture => {
            let mix = ProbVector(u.iter().zip(v).map(|(a, b)| 0.5 * (a + b)).collect());
            let h_y = entropy(&mix);
            let i_xy = (h_y - 0.5 * (entropy(&pu) + entropy(&pv))).max(0.0);
            MiResult {
                i_xy,
                h_x: 1.0,
                h_y,
                nmi: normalize(i_xy, 1.0, h_y),
            }
        }
    })
}

/// Symmetric pairwise NMI over the rows of a topic matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct NmiMatrix {
    labels: Vec<String>,
    values: Vec<f64>,
}

impl NmiMatrix {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.labels.len() + j]
    }

    /// Square CSV: first header cell empty, then labels; each row starts with
    /// its label.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![String::new()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        let n = self.labels.len();
        for i in 0..n {
            let mut rec = vec![self.labels[i].clone()];
            rec.extend((0..n).map(|j| self.get(i, j).to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| Error::io("<nmi>", e))?;
        Ok(())
    }
}

/// Every pair is evaluated once and mirrored; the diagonal holds each row's
/// self-similarity.
pub fn nmi_matrix(theta: &TopicMatrix, config: &NmiConfig) -> Result<NmiMatrix> {
    let n = theta.n_rows();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let r = normalized_mi(theta.row(i), theta.row(j), config)?;
            values[i * n + j] = r.nmi;
            values[j * n + i] = r.nmi;
        }
    }
    Ok(NmiMatrix {
        labels: theta.labels().to_vec(),
        values,
    })
}
