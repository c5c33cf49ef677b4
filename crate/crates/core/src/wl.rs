//! Factor graphs, iterated degrees (1-dimensional color refinement) and the
//! equivalences built on them.
//!
//! Round-`k` colors are interned integers whose order is intrinsic: at every
//! round the distinct signatures `(label, sorted [(edge label, color)])` are
//! sorted and numbered, so the order of two round-`k` values does not depend
//! on the graph they occur in. The exported encoding of a stable color is
//! the quotient of its connected component under the stable partition, with
//! the `q` classes numbered by their round-`q` order. It depends only on the
//! iterated degree, so encodings are comparable across graphs.
//!
//! [`ColorDag`] is the round-by-round alternative used by anonymous agents:
//! the minimized unfolding of a vertex, built by merging neighbour DAGs.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use crate::arith::fmt_rat;
use crate::error::Result;
use crate::model::{constraints, Constraint, ValuedStructure};

/// 1-based positions a variable occupies in a constraint.
pub type EdgeLabel = Vec<usize>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexKind {
    Variable(usize),
    Constraint(usize),
}

#[derive(Clone, Debug)]
pub struct FactorGraph {
    kinds: Vec<VertexKind>,
    labels: Vec<String>,
    adj: Vec<Vec<(usize, EdgeLabel)>>,
    constraints: Vec<Constraint>,
    num_vars: usize,
}

pub(crate) fn constraint_label(symbol: &str, weight: &crate::arith::Rat) -> String {
    format!("{symbol}={}", fmt_rat(weight))
}

pub(crate) const VARIABLE_LABEL: &str = "*";

impl FactorGraph {
    /// Vertices `0..|I|` are the variables, followed by one vertex per
    /// constraint in `constraints(I)` order.
    pub fn new(instance: &ValuedStructure) -> Result<Self> {
        let cs = constraints(instance)?;
        let n = instance.size();
        let mut kinds: Vec<VertexKind> = (0..n).map(VertexKind::Variable).collect();
        let mut labels = vec![VARIABLE_LABEL.to_string(); n];
        let mut adj = vec![Vec::new(); n];
        for (ci, c) in cs.iter().enumerate() {
            let x = n + ci;
            kinds.push(VertexKind::Constraint(ci));
            labels.push(constraint_label(instance.signature().name(c.symbol), &c.weight));
            let mut edges: BTreeMap<usize, EdgeLabel> = BTreeMap::new();
            for (pos, &v) in c.vars.iter().enumerate() {
                edges.entry(v).or_default().push(pos + 1);
            }
            let mut mine = Vec::new();
            for (v, s) in edges {
                adj[v].push((x, s.clone()));
                mine.push((v, s));
            }
            adj.push(mine);
        }
        Ok(FactorGraph {
            kinds,
            labels,
            adj,
            constraints: cs,
            num_vars: n,
        })
    }

    /// Disjoint union; vertices of `other` are shifted by `self.num_vertices()`.
    pub fn union(&self, other: &FactorGraph) -> FactorGraph {
        let off = self.num_vertices();
        let mut out = self.clone();
        out.kinds.extend(other.kinds.iter().map(|k| match *k {
            VertexKind::Variable(v) => VertexKind::Variable(v + self.num_vars),
            VertexKind::Constraint(c) => VertexKind::Constraint(c + self.constraints.len()),
        }));
        out.labels.extend(other.labels.iter().cloned());
        out.adj.extend(
            other
                .adj
                .iter()
                .map(|es| es.iter().map(|(y, s)| (y + off, s.clone())).collect()),
        );
        out.constraints.extend(other.constraints.iter().cloned());
        out.num_vars += other.num_vars;
        out
    }

    pub fn num_vertices(&self) -> usize {
        self.kinds.len()
    }

    pub fn num_variables(&self) -> usize {
        self.num_vars
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn kind(&self, x: usize) -> VertexKind {
        self.kinds[x]
    }

    pub fn is_variable(&self, x: usize) -> bool {
        matches!(self.kinds[x], VertexKind::Variable(_))
    }

    pub fn label(&self, x: usize) -> &str {
        &self.labels[x]
    }

    pub fn neighbors(&self, x: usize) -> &[(usize, EdgeLabel)] {
        &self.adj[x]
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    /// Connected components as sorted vertex lists, ordered by least vertex.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.num_vertices()];
        let mut out = Vec::new();
        for start in 0..self.num_vertices() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut queue = VecDeque::from([start]);
            while let Some(x) = queue.pop_front() {
                for (y, _) in &self.adj[x] {
                    if !seen[*y] {
                        seen[*y] = true;
                        comp.push(*y);
                        queue.push_back(*y);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    /// The empty graph counts as connected.
    pub fn is_connected(&self) -> bool {
        self.components().len() <= 1
    }

    /// Longest shortest path, for connected graphs.
    pub fn diameter(&self) -> usize {
        let n = self.num_vertices();
        let mut best = 0;
        for s in 0..n {
            let mut dist = vec![usize::MAX; n];
            dist[s] = 0;
            let mut queue = VecDeque::from([s]);
            while let Some(x) = queue.pop_front() {
                for (y, _) in &self.adj[x] {
                    if dist[*y] == usize::MAX {
                        dist[*y] = dist[x] + 1;
                        queue.push_back(*y);
                    }
                }
            }
            best = best.max(dist.into_iter().filter(|&d| d != usize::MAX).max().unwrap_or(0));
        }
        best
    }
}

/// Node of a color DAG: a vertex label plus the multiset of
/// `(edge label, child index)` pairs, children indexing the level below.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DagNode {
    pub label: String,
    pub children: Vec<(EdgeLabel, usize)>,
}

/// Minimized unfolding tree of a vertex at some depth `r`.
///
/// `levels[0]` holds the round-0 colors (bare labels) met by walks of
/// length `r`, `levels[r]` holds the single root. Every level is sorted
/// and duplicate-free, so two vertices have the same round-`r` iterated
/// degree iff their DAGs are equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ColorDag {
    levels: Vec<Vec<DagNode>>,
}

impl ColorDag {
    pub fn leaf(label: &str) -> ColorDag {
        ColorDag {
            levels: vec![vec![DagNode {
                label: label.to_string(),
                children: Vec::new(),
            }]],
        }
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn levels(&self) -> &[Vec<DagNode>] {
        &self.levels
    }

    /// One refinement step: the DAG of a vertex labelled `label` whose
    /// neighbours (through the given edge labels) hold the given DAGs. All
    /// neighbour DAGs must have the same depth, which is `depth` when there
    /// are none.
    pub fn extend(label: &str, depth: usize, neighbors: &[(&EdgeLabel, &ColorDag)]) -> ColorDag {
        debug_assert!(neighbors.iter().all(|(_, d)| d.depth() == depth));
        let mut levels: Vec<Vec<DagNode>> = Vec::with_capacity(depth + 2);
        // maps[j][i]: merged index of node i at the current level of neighbour j
        let mut maps: Vec<Vec<usize>> = vec![Vec::new(); neighbors.len()];
        for level in 0..=depth {
            let mut remapped: Vec<Vec<DagNode>> = Vec::with_capacity(neighbors.len());
            for (j, (_, dag)) in neighbors.iter().enumerate() {
                let prev = &maps[j];
                remapped.push(
                    dag.levels[level]
                        .iter()
                        .map(|node| {
                            let mut children: Vec<(EdgeLabel, usize)> = node
                                .children
                                .iter()
                                .map(|(s, c)| (s.clone(), prev[*c]))
                                .collect();
                            children.sort();
                            DagNode {
                                label: node.label.clone(),
                                children,
                            }
                        })
                        .collect(),
                );
            }
            let mut merged: Vec<DagNode> = remapped.iter().flatten().cloned().collect();
            merged.sort();
            merged.dedup();
            for (j, nodes) in remapped.iter().enumerate() {
                maps[j] = nodes
                    .iter()
                    .map(|n| merged.binary_search(n).expect("node was merged"))
                    .collect();
            }
            levels.push(merged);
        }
        let mut children: Vec<(EdgeLabel, usize)> = neighbors
            .iter()
            .enumerate()
            .map(|(j, (s, dag))| {
                let root = dag.levels[depth].len() - 1;
                ((*s).clone(), maps[j][root])
            })
            .collect();
        children.sort();
        levels.push(vec![DagNode {
            label: label.to_string(),
            children,
        }]);
        ColorDag { levels }
    }

    /// Injective text form, root level first.
    pub fn encode(&self) -> String {
        let mut out = String::new();
        for (i, level) in self.levels.iter().rev().enumerate() {
            if i > 0 {
                out.push('|');
            }
            for (j, node) in level.iter().enumerate() {
                if j > 0 {
                    out.push(';');
                }
                let _ = write!(out, "{}:{}[", node.label.len(), node.label);
                for (k, (s, c)) in node.children.iter().enumerate() {
                    if k > 0 {
                        out.push(',');
                    }
                    let s: Vec<String> = s.iter().map(usize::to_string).collect();
                    let _ = write!(out, "{}@{c}", s.join("."));
                }
                out.push(']');
            }
        }
        out
    }
}

/// Hex SHA-256 of a canonical encoding.
pub fn digest(encoding: &str) -> String {
    let hash = Sha256::digest(encoding.as_bytes());
    hash.iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Sig {
    label: String,
    children: Vec<(EdgeLabel, usize)>,
}

/// Per-round canonical color tables.
struct Rounds {
    colors: Vec<Vec<usize>>,
    sigs: Vec<Vec<Sig>>,
}

fn next_round(g: &FactorGraph, prev: Option<&[usize]>) -> (Vec<usize>, Vec<Sig>) {
    let sigs: Vec<Sig> = (0..g.num_vertices())
        .map(|x| {
            let mut children: Vec<(EdgeLabel, usize)> = match prev {
                None => Vec::new(),
                Some(p) => g.adj[x].iter().map(|(y, s)| (s.clone(), p[*y])).collect(),
            };
            children.sort();
            Sig {
                label: g.labels[x].clone(),
                children,
            }
        })
        .collect();
    let mut table = sigs.clone();
    table.sort();
    table.dedup();
    let colors = sigs
        .iter()
        .map(|s| table.binary_search(s).expect("signature is interned"))
        .collect();
    (colors, table)
}

fn count_colors(colors: &[usize]) -> usize {
    colors.iter().max().map_or(0, |m| m + 1)
}

/// Runs refinement until the partition stops changing. Returns the tables
/// and the stabilization round.
fn run_rounds(g: &FactorGraph) -> (Rounds, usize) {
    let (c0, s0) = next_round(g, None);
    let mut rounds = Rounds {
        colors: vec![c0],
        sigs: vec![s0],
    };
    loop {
        let k = rounds.colors.len() - 1;
        let (c, s) = next_round(g, Some(&rounds.colors[k]));
        let same = count_colors(&c) == count_colors(&rounds.colors[k]);
        rounds.colors.push(c);
        rounds.sigs.push(s);
        if same {
            return (rounds, k);
        }
    }
}

fn extend_rounds(g: &FactorGraph, rounds: &mut Rounds, upto: usize) {
    while rounds.colors.len() <= upto {
        let (c, s) = next_round(g, rounds.colors.last().map(Vec::as_slice));
        rounds.colors.push(c);
        rounds.sigs.push(s);
    }
}

fn extract_dag(rounds: &Rounds, depth: usize, color: usize) -> ColorDag {
    let mut ids_per_level: Vec<Vec<usize>> = vec![Vec::new(); depth + 1];
    ids_per_level[depth] = vec![color];
    for level in (1..=depth).rev() {
        let mut below: Vec<usize> = ids_per_level[level]
            .iter()
            .flat_map(|&c| rounds.sigs[level][c].children.iter().map(|(_, y)| *y))
            .collect();
        below.sort_unstable();
        below.dedup();
        ids_per_level[level - 1] = below;
    }
    let levels = (0..=depth)
        .map(|level| {
            let lower = if level > 0 {
                Some(&ids_per_level[level - 1])
            } else {
                None
            };
            ids_per_level[level]
                .iter()
                .map(|&c| {
                    let sig = &rounds.sigs[level][c];
                    let children = sig
                        .children
                        .iter()
                        .map(|(s, y)| {
                            let local = lower
                                .expect("children only above level 0")
                                .binary_search(y)
                                .expect("child is reachable");
                            (s.clone(), local)
                        })
                        .collect();
                    DagNode {
                        label: sig.label.clone(),
                        children,
                    }
                })
                .collect()
        })
        .collect();
    ColorDag { levels }
}

/// Stabilized color refinement of one factor graph.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorPartition {
    /// Stabilized color id per vertex; ids follow the order of `encodings`.
    pub colors: Vec<usize>,
    /// Canonical encoding per color id, sorted ascending.
    pub encodings: Vec<String>,
    /// First round `k` whose partition equals round `k + 1`'s.
    pub rounds: usize,
    /// Round-`k` color per vertex for `k = 0..=rounds`.
    pub history: Vec<Vec<usize>>,
}

impl ColorPartition {
    pub fn num_colors(&self) -> usize {
        self.encodings.len()
    }

    pub fn class_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.num_colors()];
        for &c in &self.colors {
            sizes[c] += 1;
        }
        sizes
    }

    pub fn members(&self, color: usize) -> Vec<usize> {
        (0..self.colors.len())
            .filter(|&x| self.colors[x] == color)
            .collect()
    }

    /// Hex SHA-256 of each encoding.
    pub fn digests(&self) -> Vec<String> {
        self.encodings.iter().map(|e| digest(e)).collect()
    }
}

/// Stabilized partition with canonical encodings.
pub fn refine(g: &FactorGraph) -> ColorPartition {
    let (mut rounds, stable) = run_rounds(g);
    let stable_colors = rounds.colors[stable].clone();
    let components = g.components();
    let class_counts: Vec<usize> = components
        .iter()
        .map(|comp| {
            let mut cs: Vec<usize> = comp.iter().map(|&x| stable_colors[x]).collect();
            cs.sort_unstable();
            cs.dedup();
            cs.len()
        })
        .collect();
    extend_rounds(g, &mut rounds, class_counts.iter().copied().max().unwrap_or(0));

    let mut code_of: BTreeMap<usize, String> = BTreeMap::new();
    for (comp, &q) in components.iter().zip(&class_counts) {
        // Representative per stable class, ranked by round-q color.
        let mut reps: BTreeMap<usize, usize> = BTreeMap::new();
        for &x in comp {
            reps.entry(stable_colors[x]).or_insert(x);
        }
        let mut ranked: Vec<(usize, usize)> = reps
            .iter()
            .map(|(&c, &x)| (rounds.colors[q][x], c))
            .collect();
        ranked.sort_unstable();
        debug_assert!(ranked.windows(2).all(|w| w[0].0 < w[1].0));
        let rank: BTreeMap<usize, usize> =
            ranked.iter().enumerate().map(|(i, &(_, c))| (c, i)).collect();
        let mut body = String::new();
        for (i, &(_, c)) in ranked.iter().enumerate() {
            let x = reps[&c];
            let mut edges: BTreeMap<(EdgeLabel, usize), usize> = BTreeMap::new();
            for (y, s) in &g.adj[x] {
                *edges.entry((s.clone(), rank[&stable_colors[*y]])).or_insert(0) += 1;
            }
            if i > 0 {
                body.push(';');
            }
            let _ = write!(body, "{}:{}[", g.labels[x].len(), g.labels[x]);
            for (k, ((s, j), n)) in edges.iter().enumerate() {
                if k > 0 {
                    body.push(',');
                }
                let s: Vec<String> = s.iter().map(usize::to_string).collect();
                let _ = write!(body, "{}@{j}*{n}", s.join("."));
            }
            body.push(']');
        }
        for (&c, &r) in &rank {
            code_of
                .entry(c)
                .or_insert_with(|| format!("{q}/{r}/{body}"));
        }
    }
    let mut encodings: Vec<String> = code_of.values().cloned().collect();
    encodings.sort();
    encodings.dedup();
    debug_assert_eq!(encodings.len(), code_of.len(), "encodings are injective");
    let colors = stable_colors
        .iter()
        .map(|c| encodings.binary_search(&code_of[c]).expect("encoding present"))
        .collect();
    ColorPartition {
        colors,
        encodings,
        rounds: stable,
        history: rounds.colors[..=stable].to_vec(),
    }
}

/// Stabilized partition without encodings: color ids are comparable within
/// this run only.
pub fn refine_ids(g: &FactorGraph) -> (Vec<usize>, usize) {
    let (rounds, stable) = run_rounds(g);
    (rounds.colors[stable].clone(), stable)
}

/// Serialized depth-`depth` [`ColorDag`] of every vertex, read off the
/// centralized round tables.
pub fn dag_encodings(g: &FactorGraph, depth: usize) -> Vec<String> {
    let (mut rounds, _) = run_rounds(g);
    extend_rounds(g, &mut rounds, depth);
    let mut cache: BTreeMap<usize, String> = BTreeMap::new();
    rounds.colors[depth]
        .iter()
        .map(|&c| {
            cache
                .entry(c)
                .or_insert_with(|| extract_dag(&rounds, depth, c).encode())
                .clone()
        })
        .collect()
}

/// The depth-`depth` DAG of every vertex, computed by repeated
/// neighbour merging exactly as the distributed agents do.
pub fn dags_by_merging(g: &FactorGraph, depth: usize) -> Vec<ColorDag> {
    let mut dags: Vec<ColorDag> = (0..g.num_vertices()).map(|x| ColorDag::leaf(g.label(x))).collect();
    for r in 0..depth {
        dags = (0..g.num_vertices())
            .map(|x| {
                let ns: Vec<(&EdgeLabel, &ColorDag)> =
                    g.adj[x].iter().map(|(y, s)| (s, &dags[*y])).collect();
                ColorDag::extend(g.label(x), r, &ns)
            })
            .collect();
    }
    dags
}

/// Multiset of canonical colors over all vertices.
pub fn degree_sequence(instance: &ValuedStructure) -> Result<BTreeMap<String, usize>> {
    let g = FactorGraph::new(instance)?;
    let p = refine(&g);
    let mut out = BTreeMap::new();
    for &c in &p.colors {
        *out.entry(p.encodings[c].clone()).or_insert(0) += 1;
    }
    Ok(out)
}

fn joint(i: &ValuedStructure, j: &ValuedStructure) -> Result<(FactorGraph, usize, Vec<usize>)> {
    i.ensure_similar(j)?;
    let gi = FactorGraph::new(i)?;
    let gj = FactorGraph::new(j)?;
    let split = gi.num_vertices();
    let g = gi.union(&gj);
    let (colors, _) = refine_ids(&g);
    Ok((g, split, colors))
}

fn color_counts(colors: &[usize], keep: impl Fn(usize) -> bool) -> BTreeMap<usize, usize> {
    let mut out = BTreeMap::new();
    for (x, &c) in colors.iter().enumerate() {
        if keep(x) {
            *out.entry(c).or_insert(0) += 1;
        }
    }
    out
}

/// `I ≡₁ J`: equal multisets of stabilized variable colors under a joint
/// refinement of both factor graphs.
pub fn equiv1(i: &ValuedStructure, j: &ValuedStructure) -> Result<bool> {
    let (g, split, colors) = joint(i, j)?;
    let left = color_counts(&colors, |x| x < split && g.is_variable(x));
    let right = color_counts(&colors, |x| x >= split && g.is_variable(x));
    Ok(left == right)
}

/// `|J| · δ(I) = |I| · δ(J)` over all vertices, under joint refinement.
pub fn weak_congruent(i: &ValuedStructure, j: &ValuedStructure) -> Result<bool> {
    let (_, split, colors) = joint(i, j)?;
    let left = color_counts(&colors, |x| x < split);
    let right = color_counts(&colors, |x| x >= split);
    let (ni, nj) = (i.size(), j.size());
    let keys: std::collections::BTreeSet<usize> = left.keys().chain(right.keys()).copied().collect();
    Ok(keys.into_iter().all(|c| {
        nj * left.get(&c).copied().unwrap_or(0) == ni * right.get(&c).copied().unwrap_or(0)
    }))
}

/// Connected components of an instance as stand-alone instances, each with
/// its variables in original order. Isolated variables form their own
/// components.
pub fn component_instances(instance: &ValuedStructure) -> Result<Vec<ValuedStructure>> {
    let g = FactorGraph::new(instance)?;
    let mut out = Vec::new();
    for (ci, comp) in g.components().into_iter().enumerate() {
        let vars: Vec<usize> = comp.iter().copied().filter(|&x| g.is_variable(x)).collect();
        let mut pos = vec![usize::MAX; instance.size()];
        for (new, &v) in vars.iter().enumerate() {
            pos[v] = new;
        }
        let names = vars.iter().map(|&v| instance.universe()[v].clone()).collect();
        let mut s = ValuedStructure::new(
            format!("{}.{ci}", instance.name()),
            crate::model::Role::Instance,
            instance.signature().clone(),
            names,
        )?;
        for &x in comp.iter().filter(|&&x| !g.is_variable(x)) {
            let c = &g.constraints[x - g.num_vars];
            let t = c.vars.iter().map(|&v| pos[v]).collect();
            s.set(c.symbol, t, crate::arith::ExtRat::Finite(c.weight.clone()))?;
        }
        out.push(s);
    }
    Ok(out)
}
