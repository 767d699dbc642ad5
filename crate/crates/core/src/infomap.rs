//! Two-level map equation and a multilevel greedy search for the partition
//! that minimizes it.
//!
//! For an undirected graph the random walker's stationary visit rate of a
//! node is its strength over total strength, and each edge carries
//! `w / (2W)` flow in each direction. With `q_i` the exit flow of module `i`
//! and `p_i` its summed visit rate, the description length is
//!
//! ```text
//! L = q H(Q) + sum_i (q_i + p_i) H(P^i)
//!   = plogp(q) - 2 sum_i plogp(q_i) - sum_a plogp(p_a) + sum_i plogp(q_i + p_i)
//! ```
//!
//! where `q = sum_i q_i`. The second form is what the search evaluates
//! incrementally.

use std::collections::HashMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Minimum decrease for a move to be accepted.
pub const MOVE_TOLERANCE: f64 = 1e-12;
const MAX_CORE_PASSES: usize = 100;
const MAX_REFINEMENTS: usize = 20;
/// Consecutive non-improving tuning rounds that end a trial.
const MAX_STALE_ROUNDS: usize = 6;
/// Passes used to find submodules for coarse tuning. A single pass keeps
/// them small, so a misplaced pair can still leave its module.
const SUBMODULE_PASSES: usize = 1;

fn plogp(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// Stationary visit rates of the undirected walk, indexed by node.
#[derive(Clone, Debug, PartialEq)]
pub struct VisitRates(Vec<f64>);

impl VisitRates {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, node: usize) -> f64 {
        self.0[node]
    }
}

pub fn visit_rates(g: &Graph) -> Result<VisitRates> {
    visit_rates_with(g, false)
}

/// Strength over total strength. With `weighted`, edge weights are the walk
/// weights; otherwise every edge counts as one.
pub fn visit_rates_with(g: &Graph, weighted: bool) -> Result<VisitRates> {
    if g.n_edges() == 0 {
        return Err(Error::NoWalk);
    }
    let strengths: Vec<f64> = (0..g.n_nodes()).map(|i| g.strength(i, weighted)).collect();
    let total: f64 = strengths.iter().sum();
    if !(total > 0.0) {
        return Err(Error::NoWalk);
    }
    Ok(VisitRates(strengths.iter().map(|s| s / total).collect()))
}

/// Assignment of every node to a module with dense ids `0..m`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Partition {
    module_of: Vec<usize>,
    n_modules: usize,
}

impl Partition {
    /// Module ids must be dense: every id below the maximum is used.
    pub fn new(module_of: Vec<usize>) -> Result<Self> {
        let n_modules = module_of.iter().max().map_or(0, |m| m + 1);
        let mut used = vec![false; n_modules];
        for &m in &module_of {
            used[m] = true;
        }
        if used.iter().any(|u| !u) {
            return Err(Error::Invalid("module ids must be dense".into()));
        }
        Ok(Partition { module_of, n_modules })
    }

    /// Relabel arbitrary ids in order of first appearance.
    pub fn from_labels(labels: &[usize]) -> Self {
        let mut map = HashMap::new();
        let module_of = labels
            .iter()
            .map(|l| {
                let next = map.len();
                *map.entry(*l).or_insert(next)
            })
            .collect();
        Partition {
            module_of,
            n_modules: map.len(),
        }
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            module_of: (0..n).collect(),
            n_modules: n,
        }
    }

    pub fn one_module(n: usize) -> Self {
        Partition {
            module_of: vec![0; n],
            n_modules: usize::from(n > 0),
        }
    }

    pub fn len(&self) -> usize {
        self.module_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.module_of.is_empty()
    }

    pub fn n_modules(&self) -> usize {
        self.n_modules
    }

    pub fn module_of(&self, node: usize) -> usize {
        self.module_of[node]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.module_of
    }

    /// Members of each module, ascending.
    pub fn modules(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_modules];
        for (node, &m) in self.module_of.iter().enumerate() {
            out[m].push(node);
        }
        out
    }

    /// Ids renumbered by first appearance; equal for equal set families.
    pub fn canonical(&self) -> Vec<usize> {
        Partition::from_labels(&self.module_of).module_of
    }
}

/// Map-equation description length and its parts, in bits.
#[derive(Clone, Debug, PartialEq)]
pub struct MapScore {
    pub codelength: f64,
    /// `q H(Q)`.
    pub index_codelength: f64,
    /// Exit flow `q_i` of every module.
    pub exit_rates: Vec<f64>,
    /// `(q_i + p_i) H(P^i)` for every module.
    pub module_codelengths: Vec<f64>,
}

pub fn map_equation(g: &Graph, part: &Partition) -> Result<MapScore> {
    map_equation_with(g, part, false)
}

pub fn map_equation_with(g: &Graph, part: &Partition, weighted: bool) -> Result<MapScore> {
    if part.len() != g.n_nodes() {
        return Err(Error::Invalid(format!(
            "partition covers {} nodes, graph has {}",
            part.len(),
            g.n_nodes()
        )));
    }
    let rates = visit_rates_with(g, weighted)?;
    let total: f64 = (0..g.n_nodes()).map(|i| g.strength(i, weighted)).sum();
    let m = part.n_modules();
    let mut exit = vec![0.0; m];
    let mut flow = vec![0.0; m];
    for (node, &p) in rates.as_slice().iter().enumerate() {
        flow[part.module_of(node)] += p;
    }
    for (a, b, w) in g.edges() {
        let (ma, mb) = (part.module_of(a), part.module_of(b));
        if ma != mb {
            let f = if weighted { w } else { 1.0 } / total;
            exit[ma] += f;
            exit[mb] += f;
        }
    }

    let q: f64 = exit.iter().sum();
    let index_codelength = plogp(q) - exit.iter().map(|&x| plogp(x)).sum::<f64>();
    let mut module_codelengths = vec![0.0; m];
    for (i, module) in part.modules().iter().enumerate() {
        let within: f64 = module.iter().map(|&a| plogp(rates.get(a))).sum();
        module_codelengths[i] = plogp(exit[i] + flow[i]) - plogp(exit[i]) - within;
    }
    let codelength = index_codelength + module_codelengths.iter().sum::<f64>();
    Ok(MapScore {
        codelength: codelength.max(0.0),
        index_codelength,
        exit_rates: exit,
        module_codelengths,
    })
}

/// One level of the multilevel search: nodes are leaves or aggregated
/// modules, edges carry one-directional flow.
#[derive(Clone, Debug)]
struct FlowLevel {
    flow: Vec<f64>,
    /// Total flow on edges leaving each node.
    exit: Vec<f64>,
    adj: Vec<Vec<(usize, f64)>>,
    /// Leaf nodes contained in each node.
    members: Vec<Vec<usize>>,
}

impl FlowLevel {
    fn len(&self) -> usize {
        self.flow.len()
    }

    /// Leaves are the nodes with positive strength; `coded[i]` is the graph
    /// node behind leaf `i`.
    fn leaves(g: &Graph, weighted: bool) -> Result<(FlowLevel, Vec<usize>)> {
        let rates = visit_rates_with(g, weighted)?;
        let coded: Vec<usize> = (0..g.n_nodes()).filter(|&i| rates.get(i) > 0.0).collect();
        let mut leaf_of = vec![usize::MAX; g.n_nodes()];
        for (l, &node) in coded.iter().enumerate() {
            leaf_of[node] = l;
        }
        let total: f64 = (0..g.n_nodes()).map(|i| g.strength(i, weighted)).sum();
        let mut adj = vec![Vec::new(); coded.len()];
        for (a, b, w) in g.edges() {
            let f = if weighted { w } else { 1.0 } / total;
            if f > 0.0 {
                adj[leaf_of[a]].push((leaf_of[b], f));
                adj[leaf_of[b]].push((leaf_of[a], f));
            }
        }
        let exit = adj.iter().map(|row| row.iter().map(|&(_, f)| f).sum()).collect();
        let level = FlowLevel {
            flow: coded.iter().map(|&i| rates.get(i)).collect(),
            exit,
            adj,
            members: (0..coded.len()).map(|l| vec![l]).collect(),
        };
        Ok((level, coded))
    }

    /// Collapse each module into one node. `modules` must be dense.
    fn aggregate(&self, modules: &[usize], n_modules: usize) -> FlowLevel {
        let mut flow = vec![0.0; n_modules];
        let mut members = vec![Vec::new(); n_modules];
        let mut links: Vec<HashMap<usize, f64>> = vec![HashMap::new(); n_modules];
        for x in 0..self.len() {
            let mx = modules[x];
            flow[mx] += self.flow[x];
            members[mx].extend_from_slice(&self.members[x]);
            for &(y, f) in &self.adj[x] {
                let my = modules[y];
                if mx != my {
                    *links[mx].entry(my).or_default() += f;
                }
            }
        }
        let adj: Vec<Vec<(usize, f64)>> = links
            .into_iter()
            .map(|m| {
                let mut row: Vec<_> = m.into_iter().collect();
                row.sort_by_key(|&(y, _)| y);
                row
            })
            .collect();
        let exit = adj.iter().map(|row| row.iter().map(|&(_, f)| f).sum()).collect();
        FlowLevel {
            flow,
            exit,
            adj,
            members,
        }
    }
}

/// Module bookkeeping for the incremental objective.
struct ModuleState {
    module_of: Vec<usize>,
    flow: Vec<f64>,
    exit: Vec<f64>,
    size: Vec<usize>,
    /// Unused module ids.
    empty: Vec<usize>,
    sum_exit: f64,
}

impl ModuleState {
    fn new(level: &FlowLevel, init: &[usize]) -> Self {
        let n = level.len();
        let mut flow = vec![0.0; n];
        let mut exit = vec![0.0; n];
        let mut size = vec![0; n];
        for x in 0..n {
            let m = init[x];
            flow[m] += level.flow[x];
            size[m] += 1;
            for &(y, f) in &level.adj[x] {
                if init[y] != m {
                    exit[m] += f;
                }
            }
        }
        let sum_exit = exit.iter().sum();
        let empty = (0..n).rev().filter(|&m| size[m] == 0).collect();
        ModuleState {
            module_of: init.to_vec(),
            flow,
            exit,
            size,
            empty,
            sum_exit,
        }
    }

    /// `L` without the constant node-entropy term.
    #[cfg(debug_assertions)]
    fn objective(&self) -> f64 {
        let modules: f64 = self
            .exit
            .iter()
            .zip(&self.flow)
            .map(|(&q, &p)| plogp(q + p) - 2.0 * plogp(q))
            .sum();
        plogp(self.sum_exit) + modules
    }

    /// Change in `L` from moving a node with flow `px` and exit `ex` from
    /// module `a` to `b`, given its link flow into each.
    fn delta(&self, px: f64, ex: f64, a: usize, b: usize, to_a: f64, to_b: f64) -> f64 {
        let (qa, qb) = (self.exit[a], self.exit[b]);
        let (pa, pb) = (self.flow[a], self.flow[b]);
        let qa2 = (qa - ex + 2.0 * to_a).max(0.0);
        let qb2 = (qb + ex - 2.0 * to_b).max(0.0);
        let pa2 = (pa - px).max(0.0);
        let pb2 = pb + px;
        let q2 = (self.sum_exit - qa - qb + qa2 + qb2).max(0.0);
        (plogp(q2) - plogp(self.sum_exit)) - 2.0 * (plogp(qa2) + plogp(qb2) - plogp(qa) - plogp(qb))
            + (plogp(qa2 + pa2) + plogp(qb2 + pb2) - plogp(qa + pa) - plogp(qb + pb))
    }

    fn apply(&mut self, x: usize, px: f64, ex: f64, b: usize, to_a: f64, to_b: f64) {
        let a = self.module_of[x];
        let (qa, qb) = (self.exit[a], self.exit[b]);
        self.exit[a] = (qa - ex + 2.0 * to_a).max(0.0);
        self.exit[b] = (qb + ex - 2.0 * to_b).max(0.0);
        self.sum_exit = self.sum_exit - qa - qb + self.exit[a] + self.exit[b];
        self.flow[a] = (self.flow[a] - px).max(0.0);
        self.flow[b] += px;
        if self.size[b] == 0 {
            self.empty.retain(|&m| m != b);
        }
        self.size[a] -= 1;
        self.size[b] += 1;
        self.module_of[x] = b;
        if self.size[a] == 0 {
            self.flow[a] = 0.0;
            self.exit[a] = 0.0;
            self.empty.push(a);
        }
    }
}

/// Repeated passes of best single-node moves into neighboring modules.
/// Returns dense module ids and whether anything moved.
fn core_loop(level: &FlowLevel, init: &[usize], rng: &mut ChaCha8Rng, passes: usize) -> (Vec<usize>, usize, bool) {
    let n = level.len();
    let mut state = ModuleState::new(level, init);
    let mut order: Vec<usize> = (0..n).collect();
    let mut link_to = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut any_move = false;

    for _ in 0..passes {
        order.shuffle(rng);
        let mut moved = 0;
        for &x in &order {
            let a = state.module_of[x];
            touched.clear();
            for &(y, f) in &level.adj[x] {
                let m = state.module_of[y];
                if link_to[m] == 0.0 && !touched.contains(&m) {
                    touched.push(m);
                }
                link_to[m] += f;
            }
            touched.sort_unstable();
            let to_a = link_to[a];
            let (px, ex) = (level.flow[x], level.exit[x]);

            let mut best = a;
            let mut best_delta = -MOVE_TOLERANCE;
            for &b in &touched {
                if b == a {
                    continue;
                }
                let d = state.delta(px, ex, a, b, to_a, link_to[b]);
                if d < best_delta {
                    best_delta = d;
                    best = b;
                }
            }
            if state.size[a] > 1 {
                if let Some(&empty) = state.empty.last() {
                    let d = state.delta(px, ex, a, empty, to_a, 0.0);
                    if d < best_delta {
                        best = empty;
                    }
                }
            }
            if best != a {
                let to_b = link_to[best];
                #[cfg(debug_assertions)]
                let before = ModuleState::new(level, &state.module_of).objective();
                state.apply(x, px, ex, best, to_a, to_b);
                debug_assert!(ModuleState::new(level, &state.module_of).objective() < before + MOVE_TOLERANCE);
                moved += 1;
            }
            for &m in &touched {
                link_to[m] = 0.0;
            }
        }
        if moved == 0 {
            break;
        }
        any_move = true;
    }

    let dense = Partition::from_labels(&state.module_of);
    let n_modules = dense.n_modules();
    (dense.module_of, n_modules, any_move)
}

/// Move nodes, collapse modules, repeat on the collapsed network until it
/// stops shrinking. Returns the module of every leaf under `start`.
fn multilevel(start: &FlowLevel, init: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n_leaves = start.members.iter().map(Vec::len).sum();
    let mut level = start.clone();
    let mut init = init.to_vec();
    loop {
        let (modules, n_modules, _) = core_loop(&level, &init, rng, MAX_CORE_PASSES);
        let next = level.aggregate(&modules, n_modules);
        if next.len() == level.len() {
            break;
        }
        level = next;
        init = (0..level.len()).collect();
    }
    let mut leaf_module = vec![0; n_leaves];
    for (m, members) in level.members.iter().enumerate() {
        for &l in members {
            leaf_module[l] = m;
        }
    }
    leaf_module
}

/// Split every module into submodules found inside it, then let whole
/// submodules move between modules before collapsing again.
fn coarse_tune(leaves: &FlowLevel, modules: &[usize], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let dense = Partition::from_labels(modules);
    let mut sub_of = vec![0; leaves.len()];
    let mut parent = Vec::new();
    for (m, members) in dense.modules().iter().enumerate() {
        let mut local = vec![usize::MAX; leaves.len()];
        for (i, &x) in members.iter().enumerate() {
            local[x] = i;
        }
        let adj: Vec<Vec<(usize, f64)>> = members
            .iter()
            .map(|&x| {
                leaves.adj[x]
                    .iter()
                    .filter(|&&(y, _)| local[y] != usize::MAX)
                    .map(|&(y, f)| (local[y], f))
                    .collect()
            })
            .collect();
        let sub = FlowLevel {
            flow: members.iter().map(|&x| leaves.flow[x]).collect(),
            exit: adj.iter().map(|row| row.iter().map(|&(_, f)| f).sum()).collect(),
            adj,
            members: (0..members.len()).map(|i| vec![i]).collect(),
        };
        let (labels, n_sub, _) = core_loop(&sub, &(0..members.len()).collect::<Vec<_>>(), rng, SUBMODULE_PASSES);
        let base = parent.len();
        for (i, &x) in members.iter().enumerate() {
            sub_of[x] = base + labels[i];
        }
        parent.extend(std::iter::repeat_n(m, n_sub));
    }
    let level = leaves.aggregate(&sub_of, parent.len());
    multilevel(&level, &parent, rng)
}

fn leaf_codelength(leaves: &FlowLevel, modules: &[usize]) -> f64 {
    let state = ModuleState::new(leaves, &Partition::from_labels(modules).module_of);
    let node_term: f64 = leaves.flow.iter().map(|&p| plogp(p)).sum();
    let module_terms: f64 = state
        .exit
        .iter()
        .zip(&state.flow)
        .map(|(&q, &p)| plogp(q + p) - 2.0 * plogp(q))
        .sum();
    plogp(state.sum_exit) + module_terms - node_term
}

/// One search from singletons, followed by alternating fine and coarse
/// tuning while either improves the codelength.
fn run_trial(leaves: &FlowLevel, rng: &mut ChaCha8Rng) -> (Vec<usize>, f64) {
    let mut modules = multilevel(leaves, &(0..leaves.len()).collect::<Vec<_>>(), rng);
    let mut best = leaf_codelength(leaves, &modules);
    let mut stale = 0;
    for round in 0..MAX_REFINEMENTS {
        let candidate = if round % 2 == 0 {
            multilevel(leaves, &Partition::from_labels(&modules).module_of, rng)
        } else {
            coarse_tune(leaves, &modules, rng)
        };
        let l = leaf_codelength(leaves, &candidate);
        if l < best - MOVE_TOLERANCE {
            modules = candidate;
            best = l;
            stale = 0;
        } else {
            stale += 1;
            if stale == MAX_STALE_ROUNDS {
                break;
            }
        }
    }
    (Partition::from_labels(&modules).module_of, best)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InfomapConfig {
    pub seed: u64,
    pub trials: usize,
    /// Use edge weights as walk weights.
    pub weighted: bool,
}

impl Default for InfomapConfig {
    fn default() -> Self {
        InfomapConfig {
            seed: 0,
            trials: 10,
            weighted: false,
        }
    }
}

pub fn infomap_search(g: &Graph, seed: u64, n_trials: usize) -> Result<(Partition, MapScore)> {
    infomap_search_with(
        g,
        &InfomapConfig {
            seed,
            trials: n_trials,
            weighted: false,
        },
    )
}

/// Best partition over independent trials, each with its own node-order
/// stream. Nodes without edges become singleton modules numbered after the
/// coded ones.
pub fn infomap_search_with(g: &Graph, config: &InfomapConfig) -> Result<(Partition, MapScore)> {
    let (leaves, coded) = FlowLevel::leaves(g, config.weighted)?;
    let trials = config.trials.max(1);
    let results: Vec<(Vec<usize>, f64)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(t as u64);
            run_trial(&leaves, &mut rng)
        })
        .collect();

    let one = vec![0; leaves.len()];
    let one_l = leaf_codelength(&leaves, &one);
    let mut best = (one, one_l);
    for (modules, l) in results {
        let better = l < best.1 - MOVE_TOLERANCE || (l <= best.1 + MOVE_TOLERANCE && modules < best.0);
        if better {
            best = (modules, l);
        }
    }

    let n_coded_modules = best.0.iter().max().map_or(0, |m| m + 1);
    let mut module_of = vec![usize::MAX; g.n_nodes()];
    for (leaf, &node) in coded.iter().enumerate() {
        module_of[node] = best.0[leaf];
    }
    let mut next = n_coded_modules;
    for m in module_of.iter_mut().filter(|m| **m == usize::MAX) {
        *m = next;
        next += 1;
    }
    let part = Partition::new(module_of)?;
    let score = map_equation_with(g, &part, config.weighted)?;
    Ok((part, score))
}

/// Communities of one year, ordered by size (largest first) and then by
/// smallest member; members sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CommunityTable {
    pub year: i32,
    pub communities: Vec<Vec<String>>,
}

pub fn communities_table(part: &Partition, labels: &[String], year: i32) -> Result<CommunityTable> {
    if part.len() != labels.len() {
        return Err(Error::LengthMismatch(part.len(), labels.len()));
    }
    let mut communities: Vec<Vec<String>> = part
        .modules()
        .into_iter()
        .map(|m| {
            let mut names: Vec<String> = m.into_iter().map(|i| labels[i].clone()).collect();
            names.sort();
            names
        })
        .collect();
    communities.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.first().cmp(&b.first())));
    Ok(CommunityTable { year, communities })
}

impl CommunityTable {
    /// CSV `year,community,members` with members joined by `;`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["year", "community", "members"])?;
        self.write_rows(&mut w)?;
        w.flush().map_err(|e| Error::io("<communities>", e))?;
        Ok(())
    }

    /// Rows only, for concatenating several years under one header.
    pub fn write_rows<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<()> {
        for (i, members) in self.communities.iter().enumerate() {
            w.write_record([self.year.to_string(), i.to_string(), members.join(";")])?;
        }
        Ok(())
    }
}

/// Text dump, one line per node: `module:rank visit_rate label`. Modules
/// are numbered from 1 in community-table order; ranks from 1 by visit rate.
pub fn write_tree<W: Write>(g: &Graph, part: &Partition, rates: &VisitRates, mut out: W) -> Result<()> {
    let table = communities_table(part, g.labels(), 0)?;
    let mut s = String::new();
    for (m, members) in table.communities.iter().enumerate() {
        let mut ranked: Vec<(f64, &String)> = members
            .iter()
            .map(|l| (rates.get(g.node_index(l).expect("label from graph")), l))
            .collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        for (r, (rate, label)) in ranked.iter().enumerate() {
            s.push_str(&format!("{}:{} {} {}\n", m + 1, r + 1, rate, label));
        }
    }
    out.write_all(s.as_bytes()).map_err(|e| Error::io("<tree>", e))
}
