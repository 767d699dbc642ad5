//! Brute-force reference implementations shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use statrs::distribution::{ChiSquared, ContinuousCDF};

use semnet::corpus::DocTermMatrix;
use semnet::graph::Graph;
use semnet::topics::{fit_lda, LdaConfig, LdaModel};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdos-Renyi graph with labels `n0..`.
pub fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64) -> Graph {
    let mut g = Graph::with_nodes(n).unwrap();
    for i in 0..n {
        for j in (i + 1)..n {
            if rng.random::<f64>() < p {
                g.add_edge(i, j, 1.0).unwrap();
            }
        }
    }
    g
}

pub fn adjacency(g: &Graph) -> Vec<Vec<bool>> {
    let n = g.n_nodes();
    let mut a = vec![vec![false; n]; n];
    for (i, j, _) in g.edges() {
        a[i][j] = true;
        a[j][i] = true;
    }
    a
}

pub fn clique_edges(nodes: &[usize]) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for (x, &a) in nodes.iter().enumerate() {
        for &b in &nodes[x + 1..] {
            e.push((a, b));
        }
    }
    e
}

#[derive(Debug, PartialEq)]
pub struct BruteMetrics {
    pub density: f64,
    /// `None` when no pair is connected.
    pub avg_path_length: Option<f64>,
    pub diameter: Option<u32>,
    /// Mean local clustering, nodes of degree < 2 counted as zero.
    pub clustering_zero: f64,
    /// Mean local clustering over nodes of degree >= 2.
    pub clustering_exclude: f64,
}

/// Floyd-Warshall distances and a triple loop over node triples.
pub fn brute_metrics(g: &Graph) -> BruteMetrics {
    let a = adjacency(g);
    let n = a.len();
    const INF: u32 = u32::MAX / 4;
    let mut d = vec![vec![INF; n]; n];
    for i in 0..n {
        d[i][i] = 0;
        for j in 0..n {
            if a[i][j] {
                d[i][j] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    let (mut pairs, mut total, mut longest) = (0u64, 0u64, 0u32);
    for i in 0..n {
        for j in 0..n {
            if i != j && d[i][j] < INF {
                pairs += 1;
                total += d[i][j] as u64;
                longest = longest.max(d[i][j]);
            }
        }
    }
    let m: usize = (0..n).map(|i| (0..n).filter(|&j| a[i][j]).count()).sum::<usize>() / 2;

    let mut local = Vec::with_capacity(n);
    for i in 0..n {
        let k = (0..n).filter(|&j| a[i][j]).count();
        let mut tri = 0usize;
        for j in 0..n {
            for l in 0..n {
                if j != l && a[i][j] && a[i][l] && a[j][l] {
                    tri += 1;
                }
            }
        }
        // Ordered neighbor pairs: tri counts each linked pair twice.
        let c = if k >= 2 { tri as f64 / (k * (k - 1)) as f64 } else { 0.0 };
        local.push((k, c));
    }
    let zero = local.iter().map(|x| x.1).sum::<f64>() / n as f64;
    let kept: Vec<f64> = local.iter().filter(|x| x.0 >= 2).map(|x| x.1).collect();
    let exclude = if kept.is_empty() {
        0.0
    } else {
        kept.iter().sum::<f64>() / kept.len() as f64
    };

    BruteMetrics {
        density: 2.0 * m as f64 / (n * (n - 1)) as f64,
        avg_path_length: (pairs > 0).then(|| total as f64 / pairs as f64),
        diameter: (pairs > 0).then_some(longest),
        clustering_zero: zero,
        clustering_exclude: exclude,
    }
}

fn h(p: &[f64]) -> f64 {
    let total: f64 = p.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    -p.iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| {
            let r = x / total;
            r * r.log2()
        })
        .sum::<f64>()
}

/// Two-level map equation written as weighted entropies of normalized
/// codebooks: `q H(Q) + sum_i p_i H(P^i)` with `p_i` the module's use rate.
/// Walk rates are degree / 2E, exit rates summed from the adjacency matrix.
pub fn direct_codelength(g: &Graph, module_of: &[usize]) -> f64 {
    let a = adjacency(g);
    let n = a.len();
    let two_m: f64 = a.iter().map(|r| r.iter().filter(|&&x| x).count() as f64).sum();
    let rate: Vec<f64> = a
        .iter()
        .map(|r| r.iter().filter(|&&x| x).count() as f64 / two_m)
        .collect();
    let n_mod = module_of.iter().max().map_or(0, |m| m + 1);
    let mut exit = vec![0.0; n_mod];
    for i in 0..n {
        for j in 0..n {
            if a[i][j] && module_of[i] != module_of[j] {
                exit[module_of[i]] += 1.0 / two_m;
            }
        }
    }
    let q: f64 = exit.iter().sum();
    let mut l = q * h(&exit);
    for m in 0..n_mod {
        let mut book = vec![exit[m]];
        book.extend((0..n).filter(|&i| module_of[i] == m).map(|i| rate[i]));
        let use_rate: f64 = book.iter().sum();
        l += use_rate * h(&book);
    }
    l
}

/// Every set partition of `0..n` as restricted growth strings.
pub fn set_partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, max: usize, n: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == n {
            out.push(prefix.clone());
            return;
        }
        for m in 0..=max + 1 {
            prefix.push(m);
            rec(prefix, max.max(m), n, out);
            prefix.pop();
        }
    }
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    rec(&mut vec![0], 0, n, &mut out);
    out
}

/// Documents drawn from planted topics: theta ~ Dirichlet(doc_alpha),
/// each token's topic from theta and its term from the topic row.
pub fn planted_corpus(
    rng: &mut ChaCha8Rng,
    phi: &[Vec<f64>],
    n_docs: usize,
    doc_len: usize,
    doc_alpha: f64,
) -> DocTermMatrix {
    let k = phi.len();
    let v = phi[0].len();
    let gamma = Gamma::new(doc_alpha, 1.0).unwrap();
    let mut rows = Vec::with_capacity(n_docs);
    for _ in 0..n_docs {
        let theta: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
        let mut row = Vec::new();
        for _ in 0..doc_len {
            let z = categorical(rng, &theta);
            row.push((categorical(rng, &phi[z]), 1));
        }
        rows.push(row);
    }
    DocTermMatrix::from_rows((0..n_docs).map(|d| format!("d{d}")).collect(), v, rows).unwrap()
}

pub fn categorical(rng: &mut ChaCha8Rng, p: &[f64]) -> usize {
    let mut u = rng.random::<f64>() * p.iter().sum::<f64>();
    for (i, &x) in p.iter().enumerate() {
        if u < x {
            return i;
        }
        u -= x;
    }
    p.len() - 1
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// Matching of fitted rows to planted rows for two topics:
/// the smaller per-topic cosine under the better of the two assignments.
pub fn matched_min_cosine(fitted: &[Vec<f64>], planted: &[Vec<f64>]) -> f64 {
    assert_eq!(fitted.len(), 2);
    let straight = cosine(&fitted[0], &planted[0]).min(cosine(&fitted[1], &planted[1]));
    let swapped = cosine(&fitted[0], &planted[1]).min(cosine(&fitted[1], &planted[0]));
    straight.max(swapped)
}

/// Two topics on disjoint halves of `2 * half` terms, with unequal weights.
pub fn disjoint_topics(half: usize) -> Vec<Vec<f64>> {
    let weights: Vec<f64> = (1..=half).map(|i| i as f64).collect();
    let total: f64 = weights.iter().sum();
    let mut a = vec![0.0; 2 * half];
    let mut b = vec![0.0; 2 * half];
    for i in 0..half {
        a[i] = weights[i] / total;
        b[half + i] = weights[half - 1 - i] / total;
    }
    vec![a, b]
}

/// Random points on the simplex of dimension `k`.
pub fn random_simplex(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

/// Log of the rising factorial `x (x + 1) ... (x + n - 1)`.
pub fn ln_rising(x: f64, n: u32) -> f64 {
    (0..n).map(|i| (x + i as f64).ln()).sum()
}

const TOY_THEMES: [&str; 3] = [
    "peace security weapons treaty disarmament troops",
    "growth trade poverty debt markets investment",
    "climate forests oceans emissions warming energy",
];

/// Write two speeches per theme for each year. With `split_year`, that year
/// gets only two speeches on different themes, so its network has no edge.
pub fn write_toy_corpus(dir: &std::path::Path, years: &[i32], split_year: Option<i32>) {
    const CODES: [&str; 6] = ["ARG", "BRA", "CHN", "DEU", "EGY", "FRA"];
    for &year in years {
        let picks: Vec<(usize, usize)> = if Some(year) == split_year {
            vec![(0, 0), (1, 1)]
        } else {
            (0..6).map(|i| (i, i / 2)).collect()
        };
        for (c, theme) in picks {
            let words: Vec<&str> = TOY_THEMES[theme].split(' ').collect();
            let mut text = String::new();
            for i in 0..60 {
                text.push_str(words[(i * 7 + c) % words.len()]);
                text.push_str(if i % 10 == 9 { ".\n" } else { " " });
            }
            let name = format!("{}_{}_{}.txt", CODES[c], year - 1945, year);
            std::fs::write(dir.join(name), text).unwrap();
        }
    }
}

/// Config text for a toy run rooted at `corpus` and writing to `out`.
pub fn toy_config(corpus: &std::path::Path, out: &std::path::Path, start: i32, end: i32) -> String {
    format!(
        "corpus_root = {corpus:?}\noutput_dir = {out:?}\nseed = 11\n\n[years]\nstart = {start}\nend = {end}\n\n\
         [preprocess]\nmin_term_count = 2\nmin_doc_count = 2\n\n\
         [lda]\nn_topics = 3\nalpha = 0.1\nn_iterations = 60\nburn_in = 20\n\n[smoothing]\nwindow = 1\n"
    )
}

pub fn lda_config(k: usize, alpha: f64, beta: f64, iterations: usize, seed: u64) -> LdaConfig {
    LdaConfig {
        n_topics: k,
        alpha,
        beta,
        n_iterations: iterations,
        burn_in: iterations / 2,
        seed,
        average_samples: false,
    }
}

/// Log of the collapsed joint `p(w, z)` up to a constant, from counts.
pub fn log_joint(
    docs: &[(usize, usize)],
    z: &[usize],
    k: usize,
    v: usize,
    alpha: f64,
    beta: f64,
    n_docs: usize,
) -> f64 {
    let mut n_dk = vec![vec![0u32; k]; n_docs];
    let mut n_kw = vec![vec![0u32; v]; k];
    for (&(d, w), &t) in docs.iter().zip(z) {
        n_dk[d][t] += 1;
        n_kw[t][w] += 1;
    }
    let mut l = 0.0;
    for row in &n_dk {
        let n_d: u32 = row.iter().sum();
        l += row.iter().map(|&c| ln_rising(alpha, c)).sum::<f64>() - ln_rising(k as f64 * alpha, n_d);
    }
    for row in &n_kw {
        let n_k: u32 = row.iter().sum();
        l += row.iter().map(|&c| ln_rising(beta, c)).sum::<f64>() - ln_rising(v as f64 * beta, n_k);
    }
    l
}

fn token_docs(model: &LdaModel) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let tokens = model.tokens();
    let mut i = 0;
    for d in 0..model.n_docs() {
        for _ in 0..model.doc_len(d) {
            out.push((d, tokens[i]));
            i += 1;
        }
    }
    out
}

/// Largest gap between the sampler's full conditional and the ratio of
/// collapsed joints, over every token of a small fitted corpus.
pub fn conditional_max_error(seed: u64) -> f64 {
    let matrix = planted_corpus(&mut rng(seed), &disjoint_topics(4), 6, 9, 0.7);
    let (k, alpha, beta) = (3, 0.4, 0.2);
    let model = fit_lda(&matrix, &lda_config(k, alpha, beta, 7, 99 + seed)).unwrap();
    let docs = token_docs(&model);
    let mut z = model.assignments().to_vec();
    let mut worst: f64 = 0.0;
    let mut offset = 0;
    for d in 0..model.n_docs() {
        for pos in 0..model.doc_len(d) {
            let i = offset + pos;
            let saved = z[i];
            let logs: Vec<f64> = (0..k)
                .map(|t| {
                    z[i] = t;
                    log_joint(&docs, &z, k, matrix.n_terms(), alpha, beta, model.n_docs())
                })
                .collect();
            z[i] = saved;
            let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let total: f64 = logs.iter().map(|l| (l - max).exp()).sum();
            let got = model.token_conditional(d, pos);
            for t in 0..k {
                worst = worst.max((got[t] - (logs[t] - max).exp() / total).abs());
            }
        }
        offset += model.doc_len(d);
    }
    worst
}

/// Exact posterior over the four assignments of a two-token corpus against
/// the empirical distribution of independent chains.
pub fn two_token_chi_square(draws: u64) -> (f64, f64) {
    let matrix = DocTermMatrix::from_rows(vec!["d".into()], 2, vec![vec![(0, 1), (1, 1)]]).unwrap();
    let (k, alpha, beta) = (2, 0.5, 0.5);
    let states = [[0, 0], [0, 1], [1, 0], [1, 1]];
    let docs = [(0, 0), (0, 1)];
    let weights: Vec<f64> = states
        .iter()
        .map(|z| log_joint(&docs, z, k, 2, alpha, beta, 1).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let mut counts = [0u64; 4];
    for seed in 0..draws {
        let model = fit_lda(&matrix, &lda_config(k, alpha, beta, 24, seed)).unwrap();
        let z = model.assignments();
        counts[z[0] * 2 + z[1]] += 1;
    }
    let stat: f64 = (0..4)
        .map(|s| {
            let expected = weights[s] / total * draws as f64;
            (counts[s] as f64 - expected).powi(2) / expected
        })
        .sum();
    let critical = ChiSquared::new(3.0).unwrap().inverse_cdf(0.99);
    (stat, critical)
}
