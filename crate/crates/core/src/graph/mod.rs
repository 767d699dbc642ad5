//! Threshold networks and their topology metrics.

mod io;

use std::collections::{BTreeMap, HashMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::infomet::{normalized_mi, NmiConfig};
use crate::topics::TopicMatrix;

pub use io::{read_edge_list, write_dot, write_edge_list, write_graphml, write_metrics_csv, write_smoothed_csv};

/// Undirected simple graph over string labels. Edge weights are stored but
/// the metrics below ignore them.
#[derive(Clone, Debug, PartialEq)]
pub struct Graph {
    labels: Vec<String>,
    index: HashMap<String, usize>,
    adj: Vec<Vec<usize>>,
    weights: BTreeMap<(usize, usize), f64>,
}

impl Graph {
    pub fn new(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Invalid("a graph needs at least one node".into()));
        }
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(Error::DuplicateLabel(l.clone()));
            }
        }
        let adj = vec![Vec::new(); labels.len()];
        Ok(Graph {
            labels,
            index,
            adj,
            weights: BTreeMap::new(),
        })
    }

    /// Nodes named `0..n`.
    pub fn with_nodes(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| i.to_string()).collect())
    }

    pub fn add_edge(&mut self, a: usize, b: usize, weight: f64) -> Result<()> {
        let n = self.n_nodes();
        if a >= n || b >= n {
            return Err(Error::UnknownNode(format!("{}", a.max(b))));
        }
        if a == b {
            return Err(Error::Invalid(format!("self-loop on `{}`", self.labels[a])));
        }
        let key = (a.min(b), a.max(b));
        if self.weights.contains_key(&key) {
            return Err(Error::Invalid(format!(
                "duplicate edge `{}`-`{}`",
                self.labels[key.0], self.labels[key.1]
            )));
        }
        self.weights.insert(key, weight);
        for (x, y) in [(a, b), (b, a)] {
            let pos = self.adj[x].partition_point(|&z| z < y);
            self.adj[x].insert(pos, y);
        }
        Ok(())
    }

    pub fn add_edge_by_label(&mut self, a: &str, b: &str, weight: f64) -> Result<()> {
        let ia = self.node_index(a).ok_or_else(|| Error::UnknownNode(a.into()))?;
        let ib = self.node_index(b).ok_or_else(|| Error::UnknownNode(b.into()))?;
        self.add_edge(ia, ib, weight)
    }

    /// Build from `(a, b)` index pairs with unit weight.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = Self::with_nodes(n)?;
        for &(a, b) in edges {
            g.add_edge(a, b, 1.0)?;
        }
        Ok(g)
    }

    pub fn n_nodes(&self) -> usize {
        self.labels.len()
    }

    pub fn n_edges(&self) -> usize {
        self.weights.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn node_index(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Sorted neighbor indices.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adj[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adj[i].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.weights.contains_key(&(a.min(b), a.max(b)))
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<f64> {
        self.weights.get(&(a.min(b), a.max(b))).copied()
    }

    /// Edges as `(a, b, weight)` with `a < b`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.weights.iter().map(|(&(a, b), &w)| (a, b, w))
    }

    /// Degree, or the sum of incident edge weights when `weighted`.
    pub fn strength(&self, i: usize, weighted: bool) -> f64 {
        if weighted {
            self.adj[i].iter().map(|&j| self.weight(i, j).unwrap_or(0.0)).sum()
        } else {
            self.degree(i) as f64
        }
    }
}

/// Link every pair of rows whose NMI is at least `threshold`. All rows
/// become nodes, isolated or not; the NMI is kept as the edge weight.
pub fn build_network(theta: &TopicMatrix, threshold: f64, nmi: &NmiConfig) -> Result<Graph> {
    if theta.n_rows() < 2 {
        return Err(Error::Invalid("a network needs at least two rows".into()));
    }
    if threshold.is_nan() {
        return Err(Error::config("threshold", "must be a number"));
    }
    let mut g = Graph::new(theta.labels().to_vec())?;
    let n = theta.n_rows();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let scores = pairs
        .par_iter()
        .map(|&(i, j)| normalized_mi(theta.row(i), theta.row(j), nmi).map(|r| r.nmi))
        .collect::<Result<Vec<_>>>()?;
    for (&(i, j), s) in pairs.iter().zip(scores) {
        if s >= threshold {
            g.add_edge(i, j, s)?;
        }
    }
    Ok(g)
}

/// `2E / (N (N - 1))`.
pub fn density(g: &Graph) -> Result<f64> {
    let n = g.n_nodes();
    if n < 2 {
        return Err(Error::UndefinedDensity(n));
    }
    Ok(2.0 * g.n_edges() as f64 / (n as f64 * (n as f64 - 1.0)))
}

/// Hop distances from `source`; `None` for unreachable nodes.
pub fn bfs_distances(g: &Graph, source: usize) -> Vec<Option<u32>> {
    let mut dist = vec![None; g.n_nodes()];
    dist[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        let du = dist[u].expect("queued nodes have a distance");
        for &v in g.neighbors(u) {
            if dist[v].is_none() {
                dist[v] = Some(du + 1);
                queue.push_back(v);
            }
        }
    }
    dist
}

/// Shortest-path summary over connected unordered pairs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PathSummary {
    pub connected_pairs: u64,
    pub total_length: u64,
    pub longest: u32,
}

pub fn path_summary(g: &Graph) -> PathSummary {
    (0..g.n_nodes())
        .into_par_iter()
        .map(|s| {
            let mut acc = PathSummary::default();
            for (t, d) in bfs_distances(g, s).into_iter().enumerate() {
                if let (true, Some(d)) = (t > s, d) {
                    acc.connected_pairs += 1;
                    acc.total_length += d as u64;
                    acc.longest = acc.longest.max(d);
                }
            }
            acc
        })
        .reduce(PathSummary::default, |a, b| PathSummary {
            connected_pairs: a.connected_pairs + b.connected_pairs,
            total_length: a.total_length + b.total_length,
            longest: a.longest.max(b.longest),
        })
}

/// Mean shortest-path length over connected pairs only.
pub fn avg_path_length(g: &Graph) -> Result<f64> {
    let s = path_summary(g);
    if s.connected_pairs == 0 {
        return Err(Error::NoPaths);
    }
    Ok(s.total_length as f64 / s.connected_pairs as f64)
}

/// Longest shortest path over connected pairs.
pub fn diameter(g: &Graph) -> Result<u32> {
    let s = path_summary(g);
    if s.connected_pairs == 0 {
        return Err(Error::NoPaths);
    }
    Ok(s.longest)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeStats {
    pub degree: usize,
    /// Links among the node's neighbors.
    pub neighbor_links: usize,
    /// `2 e / (k (k - 1))`; zero when the degree is below two.
    pub local_clustering: f64,
}

pub fn node_stats(g: &Graph) -> Vec<NodeStats> {
    (0..g.n_nodes())
        .map(|i| {
            let nb = g.neighbors(i);
            let k = nb.len();
            let mut e = 0;
            for (x, &a) in nb.iter().enumerate() {
                for &b in &nb[x + 1..] {
                    if g.has_edge(a, b) {
                        e += 1;
                    }
                }
            }
            let c = if k >= 2 {
                2.0 * e as f64 / (k as f64 * (k as f64 - 1.0))
            } else {
                0.0
            };
            NodeStats {
                degree: k,
                neighbor_links: e,
                local_clustering: c,
            }
        })
        .collect()
}

/// How nodes with fewer than two neighbors enter the clustering average.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LowDegree {
    /// Count them with a coefficient of zero.
    #[default]
    Zero,
    /// Leave them out of the average.
    Exclude,
}

/// Average of local clustering coefficients.
pub fn global_clustering(g: &Graph, low_degree: LowDegree) -> f64 {
    let stats = node_stats(g);
    let included: Vec<f64> = stats
        .iter()
        .filter(|s| low_degree == LowDegree::Zero || s.degree >= 2)
        .map(|s| s.local_clustering)
        .collect();
    if included.is_empty() {
        return 0.0;
    }
    included.iter().sum::<f64>() / included.len() as f64
}

/// One year of network properties.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub year: i32,
    pub density: f64,
    pub avg_path_length: f64,
    pub global_clustering: f64,
    pub diameter: u32,
}

impl MetricsRow {
    pub fn compute(g: &Graph, year: i32, low_degree: LowDegree) -> Result<Self> {
        let paths = path_summary(g);
        if paths.connected_pairs == 0 {
            return Err(Error::NoPaths);
        }
        Ok(MetricsRow {
            year,
            density: density(g)?,
            avg_path_length: paths.total_length as f64 / paths.connected_pairs as f64,
            global_clustering: global_clustering(g, low_degree),
            diameter: paths.longest,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowAlignment {
    /// Each mean is labelled with the last year of its window.
    #[default]
    Trailing,
    /// Each mean is labelled with the middle year (lower middle for even
    /// windows).
    Centered,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothedSeries {
    pub window: usize,
    /// Year label of `values[0]`.
    pub start_year: i32,
    pub values: Vec<f64>,
}

impl SmoothedSeries {
    pub fn years(&self) -> impl Iterator<Item = i32> + '_ {
        (0..self.values.len()).map(|i| self.start_year + i as i32)
    }
}

/// Full-window moving means of a contiguous yearly series.
pub fn moving_average(series: &[(i32, f64)], window: usize, alignment: WindowAlignment) -> Result<SmoothedSeries> {
    if window == 0 {
        return Err(Error::config("window", "must be at least 1"));
    }
    if series.len() < window {
        return Err(Error::SeriesTooShort {
            len: series.len(),
            window,
        });
    }
    if series.windows(2).any(|p| p[1].0 != p[0].0 + 1) {
        return Err(Error::Invalid("years must be contiguous and ascending".into()));
    }
    let values = series
        .windows(window)
        .map(|w| w.iter().map(|&(_, v)| v).sum::<f64>() / window as f64)
        .collect();
    let offset = match alignment {
        WindowAlignment::Trailing => window - 1,
        WindowAlignment::Centered => (window - 1) / 2,
    };
    Ok(SmoothedSeries {
        window,
        start_year: series[0].0 + offset as i32,
        values,
    })
}
