//! Rank-one PSD matrix completion, `y = ⟨X, β★β★ᵀ⟩` with `X = e_i e_jᵀ` drawn with
//! probability `p_ij`.
//!
//! Well-posedness is a property of the support graph: it fails exactly when the
//! graph induced on `V* = supp(β★)` has a bipartite connected component (an
//! isolated vertex or a loop-free even structure) or some zero coordinate has no
//! neighbour in `V*`. The RSE is the cheapest way to delete support mass so that
//! one of those two things happens.
//!
//! Vertices are 0-based here; file formats are 1-based. Matrices are vectorized
//! column-major, `vec(A)[i + j·d] = A_ij`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::io::Read;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::measures::EmpiricalMeasure;
use crate::spectral::{is_negligible, PsdMatrix};

/// Entries at or below this value are outside the support.
pub const SUPPORT_TOL: f64 = 1e-15;
/// Largest number of undirected support pairs accepted by [`McMode::Exact`].
pub const EXACT_PAIR_LIMIT: usize = 24;
/// Branch-and-bound gives up after expanding this many nodes.
pub const BB_NODE_LIMIT: usize = 20_000_000;

/// Symmetric nonnegative matrix of sampling probabilities with total mass ≤ 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbMatrix {
    entries: DMatrix<f64>,
}

/// An undirected support pair `{i, j}` (`i ≤ j`) with its ordered-pair mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pair {
    pub i: usize,
    pub j: usize,
    /// `p_ii` for a loop, `p_ij + p_ji` otherwise.
    pub mass: f64,
}

impl ProbMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let (r, c) = entries.shape();
        if r != c {
            return Err(Error::NotSquare(r, c));
        }
        if r == 0 {
            return Err(Error::InvalidInput("empty probability matrix".into()));
        }
        if entries.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidInput("probabilities must be finite and nonnegative".into()));
        }
        let asym = linalg::max_asymmetry(&entries);
        if asym > 1e-12 {
            return Err(Error::NotSymmetric(asym));
        }
        let entries = linalg::symmetrize(&entries);
        let total = entries.sum();
        if total > 1.0 + 1e-12 {
            return Err(Error::InvalidWeights(format!("probabilities sum to {total} > 1")));
        }
        Ok(Self { entries })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.sum()
    }

    /// Probability that the zero matrix is observed.
    pub fn unobserved_mass(&self) -> f64 {
        (1.0 - self.total_mass()).max(0.0)
    }

    /// Undirected support pairs in lexicographic order.
    pub fn pairs(&self) -> Vec<Pair> {
        let d = self.dim();
        let mut out = Vec::new();
        for i in 0..d {
            for j in i..d {
                let p = self.entries[(i, j)];
                if p > SUPPORT_TOL {
                    out.push(Pair { i, j, mass: if i == j { p } else { 2.0 * p } });
                }
            }
        }
        out
    }

    /// `P` with every support pair outside `kept` set to zero.
    pub fn restricted(&self, kept: &[(usize, usize)]) -> Result<Self> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for &(i, j) in kept {
            if i >= d || j >= d {
                return Err(Error::InvalidInput(format!("pair ({i},{j}) out of range")));
            }
            m[(i, j)] = self.entries[(i, j)];
            m[(j, i)] = self.entries[(j, i)];
        }
        Self::new(m)
    }

    /// Dense CSV: `d` rows of `d` numbers; lines starting with `#` are ignored.
    pub fn from_dense_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .comment(Some(b'#'))
            .flexible(true)
            .from_reader(reader);
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (line, rec) in rdr.records().enumerate() {
            let rec = rec.map_err(|e| Error::Parse(format!("line {}: {e}", line + 1)))?;
            if rec.iter().all(|f| f.is_empty()) {
                continue;
            }
            let vals = rec
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<Vec<f64>, _>>()
                .map_err(|e| Error::Parse(format!("line {}: {e}", line + 1)))?;
            rows.push(vals);
        }
        let d = rows.len();
        if d == 0 || rows.iter().any(|r| r.len() != d) {
            return Err(Error::Parse("dense probability matrix must be square".into()));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    /// Sparse triples `i,j,p` (1-based). Each entry is mirrored; if both `(i,j)` and
    /// `(j,i)` are listed they must agree within 1e-12.
    pub fn from_triples<R: Read>(mut reader: R, dim: Option<usize>) -> Result<Self> {
        let mut text = String::new();
        reader.read_to_string(&mut text).map_err(|e| Error::Parse(e.to_string()))?;
        let mut given: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        let mut max_index = 0;
        for (ln, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected `i,j,p`", ln + 1)));
            }
            let parse_idx = |s: &str| -> Result<usize> {
                let k: usize = s.parse().map_err(|_| Error::Parse(format!("line {}: bad index `{s}`", ln + 1)))?;
                if k == 0 {
                    return Err(Error::Parse(format!("line {}: indices are 1-based", ln + 1)));
                }
                Ok(k - 1)
            };
            let (i, j) = (parse_idx(fields[0])?, parse_idx(fields[1])?);
            let p: f64 = fields[2].parse().map_err(|_| Error::Parse(format!("line {}: bad probability `{}`", ln + 1, fields[2])))?;
            if given.insert((i, j), p).is_some() {
                return Err(Error::Parse(format!("line {}: duplicate entry ({}, {})", ln + 1, i + 1, j + 1)));
            }
            max_index = max_index.max(i + 1).max(j + 1);
        }
        let d = dim.unwrap_or(max_index);
        if d == 0 || max_index > d {
            return Err(Error::Parse(format!("indices exceed dimension {d}")));
        }
        let mut m = DMatrix::zeros(d, d);
        for (&(i, j), &p) in &given {
            if let Some(&q) = given.get(&(j, i)) {
                if (p - q).abs() > 1e-12 {
                    return Err(Error::Parse(format!("entries ({},{}) and ({},{}) disagree", i + 1, j + 1, j + 1, i + 1)));
                }
            }
            m[(i, j)] = p;
            m[(j, i)] = p;
        }
        Self::new(m)
    }
}

/// Observation graph of `P` together with the `β★`-induced structure.
#[derive(Debug, Clone, PartialEq)]
pub struct SupportGraph {
    pub dim: usize,
    pub pairs: Vec<Pair>,
    /// `V* = {i : β★_i ≠ 0}`.
    pub v_star: Vec<usize>,
    /// Zero coordinates with no support pair into `V*`.
    pub v_zero: Vec<usize>,
}

impl SupportGraph {
    pub fn in_star(&self, i: usize) -> bool {
        self.v_star.binary_search(&i).is_ok()
    }

    /// Pairs with both endpoints in `V*` (the edges of `G*`, loops included).
    pub fn star_pairs(&self) -> Vec<Pair> {
        self.pairs.iter().copied().filter(|p| self.in_star(p.i) && self.in_star(p.j)).collect()
    }

    /// Connected components of `G*`, each sorted, ordered by smallest vertex.
    pub fn star_components(&self) -> Vec<Vec<usize>> {
        let mut dsu = ParityDsu::new(self.dim);
        for p in self.star_pairs() {
            dsu.union(p.i, p.j);
        }
        let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &v in &self.v_star {
            comps.entry(dsu.find(v).0).or_default().push(v);
        }
        let mut out: Vec<Vec<usize>> = comps.into_values().collect();
        out.sort();
        out
    }
}

fn check_dims(p: &ProbMatrix, beta: &DVector<f64>) -> Result<()> {
    if beta.len() != p.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: beta.len() });
    }
    Ok(())
}

/// Support graph with `V*` and `V⁰`.
pub fn build_graph(p: &ProbMatrix, beta_star: &DVector<f64>) -> Result<SupportGraph> {
    check_dims(p, beta_star)?;
    let d = p.dim();
    let pairs = p.pairs();
    let v_star: Vec<usize> = (0..d).filter(|&i| beta_star[i] != 0.0).collect();
    let star = |i: usize| beta_star[i] != 0.0;
    let mut touches = vec![false; d];
    for q in &pairs {
        if q.i != q.j {
            if star(q.j) {
                touches[q.i] = true;
            }
            if star(q.i) {
                touches[q.j] = true;
            }
        }
    }
    let v_zero = (0..d).filter(|&k| !star(k) && !touches[k]).collect();
    Ok(SupportGraph { dim: d, pairs, v_star, v_zero })
}

/// Union–find that tracks the parity of the path to the root and odd cycles.
#[derive(Debug, Clone)]
struct ParityDsu {
    parent: Vec<usize>,
    parity: Vec<u8>,
    odd: Vec<bool>,
}

impl ParityDsu {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect(), parity: vec![0; n], odd: vec![false; n] }
    }

    fn reset(&mut self) {
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i;
        }
        self.parity.iter_mut().for_each(|x| *x = 0);
        self.odd.iter_mut().for_each(|x| *x = false);
    }

    fn find(&mut self, x: usize) -> (usize, u8) {
        let p = self.parent[x];
        if p == x {
            return (x, 0);
        }
        let (r, pp) = self.find(p);
        self.parity[x] ^= pp;
        self.parent[x] = r;
        (r, self.parity[x])
    }

    /// Adds an edge whose endpoints must receive different colours.
    fn union(&mut self, a: usize, b: usize) {
        let (ra, pa) = self.find(a);
        if a == b {
            self.odd[ra] = true;
            return;
        }
        let (rb, pb) = self.find(b);
        if ra == rb {
            if pa == pb {
                self.odd[ra] = true;
            }
        } else {
            self.parent[rb] = ra;
            self.parity[rb] = pa ^ pb ^ 1;
            self.odd[ra] |= self.odd[rb];
        }
    }
}

/// Assumption 1 diagnosis.
#[derive(Debug, Clone, PartialEq)]
pub struct Assumption1Report {
    /// Components of `G*` admitting a proper 2-colouring (no loops, no odd cycles).
    pub bipartite_components: Vec<Vec<usize>>,
    pub isolated_zeros: Vec<usize>,
    pub well_posed: bool,
}

/// Well-posedness of completion under `P` at `β★`.
pub fn is_well_posed(p: &ProbMatrix, beta_star: &DVector<f64>) -> Result<Assumption1Report> {
    let g = build_graph(p, beta_star)?;
    Ok(analyze(&g))
}

fn analyze(g: &SupportGraph) -> Assumption1Report {
    let mut dsu = ParityDsu::new(g.dim);
    for q in g.star_pairs() {
        dsu.union(q.i, q.j);
    }
    let bipartite_components: Vec<Vec<usize>> = g
        .star_components()
        .into_iter()
        .filter(|c| {
            let r = dsu.find(c[0]).0;
            !dsu.odd[r]
        })
        .collect();
    let isolated_zeros = g.v_zero.clone();
    let well_posed = bipartite_components.is_empty() && isolated_zeros.is_empty();
    Assumption1Report { bipartite_components, isolated_zeros, well_posed }
}

/// Search strategy for [`mc_rse`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum McMode {
    /// Enumerates every subset of support pairs (≤ 24 pairs).
    Exact,
    /// Certified best-first branch and bound.
    BranchBound,
    /// Upper bound only.
    Greedy,
}

impl McMode {
    pub fn name(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::BranchBound => "branch_bound",
            Self::Greedy => "greedy",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "exact" => Some(Self::Exact),
            "branch_bound" | "bb" => Some(Self::BranchBound),
            "greedy" => Some(Self::Greedy),
            _ => None,
        }
    }
}

/// `RSE²` with the witness support `A` (kept pairs) and the removed pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct McRse {
    pub rse_sq: f64,
    pub rse: f64,
    pub kept: Vec<(usize, usize)>,
    pub removed: Vec<(usize, usize)>,
    pub mode: McMode,
    /// True for exact and branch-and-bound results.
    pub certified: bool,
    pub nodes: usize,
}

/// Canonical removed mass: ascending sum, so equal multisets give equal floats.
fn canonical_mass(masses: &mut [f64]) -> f64 {
    masses.sort_by(f64::total_cmp);
    masses.iter().fold(0.0, |s, x| s + x)
}

fn finish(g: &SupportGraph, removed: &[bool], mode: McMode, nodes: usize) -> McRse {
    let mut masses: Vec<f64> = g.pairs.iter().zip(removed).filter(|(_, r)| **r).map(|(p, _)| p.mass).collect();
    let rse_sq = canonical_mass(&mut masses);
    let mut kept = Vec::new();
    let mut gone = Vec::new();
    for (p, &r) in g.pairs.iter().zip(removed) {
        if r { gone.push((p.i, p.j)) } else { kept.push((p.i, p.j)) }
    }
    McRse { rse_sq, rse: rse_sq.sqrt(), kept, removed: gone, mode, certified: mode != McMode::Greedy, nodes }
}

/// Ω-membership of kept pair sets, with reusable buffers.
struct OmegaChecker<'a> {
    g: &'a SupportGraph,
    star: Vec<bool>,
    dsu: ParityDsu,
    zero_hits: Vec<u32>,
}

impl<'a> OmegaChecker<'a> {
    fn new(g: &'a SupportGraph) -> Self {
        let mut star = vec![false; g.dim];
        for &v in &g.v_star {
            star[v] = true;
        }
        Self { g, star, dsu: ParityDsu::new(g.dim), zero_hits: vec![0; g.dim] }
    }

    /// Whether the support with pairs `k` (where `kept(k)`) violates Assumption 1.
    fn in_omega(&mut self, kept: impl Fn(usize) -> bool) -> bool {
        self.dsu.reset();
        self.zero_hits.iter_mut().for_each(|x| *x = 0);
        for (k, p) in self.g.pairs.iter().enumerate() {
            if !kept(k) {
                continue;
            }
            match (self.star[p.i], self.star[p.j]) {
                (true, true) => self.dsu.union(p.i, p.j),
                (true, false) => self.zero_hits[p.j] += 1,
                (false, true) => self.zero_hits[p.i] += 1,
                (false, false) => {}
            }
        }
        if (0..self.g.dim).any(|k| !self.star[k] && self.zero_hits[k] == 0) {
            return true;
        }
        let g = self.g;
        g.v_star.iter().any(|&v| {
            let (r, _) = self.dsu.find(v);
            !self.dsu.odd[r]
        })
    }
}

/// Cost structure on `V*` for labelings into Out / I / J.
struct Labeling<'a> {
    g: &'a SupportGraph,
    /// Position of each `V*` vertex in the search order.
    order: Vec<usize>,
    pos: Vec<usize>,
    loops: Vec<f64>,
    /// Neighbours within `V*` by order position, with pair index and mass.
    adj: Vec<Vec<(usize, usize, f64)>>,
    loop_pair: Vec<Option<usize>>,
}

const OUT: u8 = 0;
const SIDE_I: u8 = 1;
const SIDE_J: u8 = 2;

impl<'a> Labeling<'a> {
    fn new(g: &'a SupportGraph) -> Self {
        let n = g.v_star.len();
        let mut weight = vec![0.0; g.dim];
        for p in g.star_pairs() {
            weight[p.i] += p.mass;
            if p.i != p.j {
                weight[p.j] += p.mass;
            }
        }
        let mut order = g.v_star.clone();
        order.sort_by(|&a, &b| weight[b].total_cmp(&weight[a]).then(a.cmp(&b)));
        let mut pos = vec![usize::MAX; g.dim];
        for (k, &v) in order.iter().enumerate() {
            pos[v] = k;
        }
        let mut loops = vec![0.0; n];
        let mut loop_pair = vec![None; n];
        let mut adj = vec![Vec::new(); n];
        for (idx, p) in g.pairs.iter().enumerate() {
            let (a, b) = (pos[p.i], pos[p.j]);
            if a == usize::MAX || b == usize::MAX {
                continue;
            }
            if a == b {
                loops[a] += p.mass;
                loop_pair[a] = Some(idx);
            } else {
                adj[a].push((b, idx, p.mass));
                adj[b].push((a, idx, p.mass));
            }
        }
        Self { g, order, pos, loops, adj, loop_pair }
    }

    fn n(&self) -> usize {
        self.order.len()
    }

    /// Cost of giving position `u` label `l` against already-labelled positions `< depth`.
    fn label_cost(&self, labels: &[u8], u: usize, l: u8) -> f64 {
        let mut c = if l != OUT { self.loops[u] } else { 0.0 };
        for &(w, _, m) in &self.adj[u] {
            if w >= labels.len() {
                continue;
            }
            let lw = labels[w];
            let cut = match (l, lw) {
                (OUT, OUT) => false,
                (OUT, _) | (_, OUT) => true,
                (a, b) => a == b,
            };
            if cut {
                c += m;
            }
        }
        c
    }

    /// Removed-pair indicator for a complete labeling.
    fn removed(&self, labels: &[u8]) -> Vec<bool> {
        let mut out = vec![false; self.g.pairs.len()];
        for u in 0..self.n() {
            if labels[u] != OUT {
                if let Some(k) = self.loop_pair[u] {
                    out[k] = true;
                }
            }
            for &(w, idx, _) in &self.adj[u] {
                if w < u {
                    continue;
                }
                let cut = match (labels[u], labels[w]) {
                    (OUT, OUT) => false,
                    (OUT, _) | (_, OUT) => true,
                    (a, b) => a == b,
                };
                if cut {
                    out[idx] = true;
                }
            }
        }
        out
    }

    fn cost(&self, labels: &[u8]) -> f64 {
        let mut c = 0.0;
        for u in 0..self.n() {
            c += self.label_cost(&labels[..u], u, labels[u]);
        }
        c
    }
}

/// Cheapest way to isolate a zero vertex: `(cost, removed pairs)`.
fn best_zero_isolation(g: &SupportGraph) -> Option<(f64, Vec<bool>)> {
    let mut best: Option<(f64, Vec<bool>)> = None;
    for k in (0..g.dim).filter(|k| !g.in_star(*k)) {
        let removed: Vec<bool> = g
            .pairs
            .iter()
            .map(|p| p.i != p.j && ((p.i == k && g.in_star(p.j)) || (p.j == k && g.in_star(p.i))))
            .collect();
        let mut masses: Vec<f64> = g.pairs.iter().zip(&removed).filter(|(_, r)| **r).map(|(p, _)| p.mass).collect();
        let c = canonical_mass(&mut masses);
        if best.as_ref().is_none_or(|(b, _)| c < *b) {
            best = Some((c, removed));
        }
    }
    best
}

fn removed_mass(g: &SupportGraph, removed: &[bool]) -> f64 {
    let mut masses: Vec<f64> = g.pairs.iter().zip(removed).filter(|(_, r)| **r).map(|(p, _)| p.mass).collect();
    canonical_mass(&mut masses)
}

/// Greedy upper bound: the cheapest of several whole targets (isolate a zero vertex,
/// isolate one `V*` vertex, or 2-colour one `G*` component from a maximum spanning
/// tree followed by single-vertex flips).
fn greedy(g: &SupportGraph) -> Vec<bool> {
    let lab = Labeling::new(g);
    let n = lab.n();
    let mut best: Option<(f64, Vec<bool>)> = best_zero_isolation(g);
    let mut consider = |removed: Vec<bool>| {
        let c = removed_mass(g, &removed);
        if best.as_ref().is_none_or(|(b, _)| c < *b) {
            best = Some((c, removed));
        }
    };
    for u in 0..n {
        let mut labels = vec![OUT; n];
        labels[u] = SIDE_I;
        consider(lab.removed(&labels));
    }
    for comp in g.star_components() {
        let members: Vec<usize> = comp.iter().map(|&v| lab.pos[v]).collect();
        let mut labels = vec![OUT; n];
        // Maximum-weight spanning tree (Prim) colouring.
        let mut in_tree = vec![false; n];
        let root = members[0];
        in_tree[root] = true;
        labels[root] = SIDE_I;
        let mut heap: BinaryHeap<(OrdF64, usize, usize)> = BinaryHeap::new();
        for &(w, _, m) in &lab.adj[root] {
            heap.push((OrdF64(m), root, w));
        }
        while let Some((_, from, to)) = heap.pop() {
            if in_tree[to] {
                continue;
            }
            in_tree[to] = true;
            labels[to] = if labels[from] == SIDE_I { SIDE_J } else { SIDE_I };
            for &(w, _, m) in &lab.adj[to] {
                if !in_tree[w] {
                    heap.push((OrdF64(m), to, w));
                }
            }
        }
        loop {
            let base = lab.cost(&labels);
            let mut improved = false;
            for &u in &members {
                let old = labels[u];
                labels[u] = if old == SIDE_I { SIDE_J } else { SIDE_I };
                if lab.cost(&labels) < base - 1e-15 * base.abs() {
                    improved = true;
                    break;
                }
                labels[u] = old;
            }
            if !improved {
                break;
            }
        }
        consider(lab.removed(&labels));
    }
    best.map(|(_, r)| r).unwrap_or_else(|| vec![false; g.pairs.len()])
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}

impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

fn exact_enumeration(g: &SupportGraph) -> Result<(Vec<bool>, usize)> {
    let np = g.pairs.len();
    if np > EXACT_PAIR_LIMIT {
        return Err(Error::LimitExceeded(format!("exact mode supports at most {EXACT_PAIR_LIMIT} support pairs (got {np})")));
    }
    let total: f64 = g.pairs.iter().map(|p| p.mass).sum();
    let slack = 1e-9 * total.max(f64::MIN_POSITIVE);
    let mut best = greedy(g);
    let mut best_mass = removed_mass(g, &best);
    let mut checker = OmegaChecker::new(g);
    let mut mask: u64 = 0;
    let mut running = 0.0;
    let mut checked = 0usize;
    let count: u64 = 1 << np;
    for step in 0..count {
        if step > 0 {
            let bit = step.trailing_zeros() as usize;
            mask ^= 1 << bit;
            if mask & (1 << bit) != 0 {
                running += g.pairs[bit].mass;
            } else {
                running -= g.pairs[bit].mass;
            }
        }
        if running > best_mass + slack {
            continue;
        }
        checked += 1;
        if checker.in_omega(|k| mask & (1 << k) == 0) {
            let removed: Vec<bool> = (0..np).map(|k| mask & (1 << k) != 0).collect();
            let c = removed_mass(g, &removed);
            if c < best_mass {
                best_mass = c;
                best = removed;
            }
        }
    }
    Ok((best, checked))
}

struct Node {
    bound: f64,
    seq: usize,
    labels: Vec<u8>,
    cost: f64,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on bound, deeper first, then FIFO.
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.labels.len().cmp(&other.labels.len()))
            .then(other.seq.cmp(&self.seq))
    }
}

fn branch_and_bound(g: &SupportGraph) -> Result<(Vec<bool>, usize)> {
    let lab = Labeling::new(g);
    let n = lab.n();
    let mut best = greedy(g);
    let mut best_mass = removed_mass(g, &best);
    if n == 0 {
        return Ok((best, 0));
    }
    let total: f64 = g.pairs.iter().map(|p| p.mass).sum();
    let eps = 1e-12 * total.max(f64::MIN_POSITIVE);
    let lower = |labels: &[u8], cost: f64| -> f64 {
        let mut b = cost;
        for u in labels.len()..n {
            let c = [OUT, SIDE_I, SIDE_J].iter().map(|&l| lab.label_cost(labels, u, l)).fold(f64::INFINITY, f64::min);
            b += c;
        }
        b
    };
    let mut heap = BinaryHeap::new();
    let mut seq = 0;
    heap.push(Node { bound: lower(&[], 0.0), seq, labels: Vec::new(), cost: 0.0 });
    let mut nodes = 0usize;
    while let Some(node) = heap.pop() {
        if node.bound >= best_mass - eps {
            break;
        }
        nodes += 1;
        if nodes > BB_NODE_LIMIT {
            return Err(Error::LimitExceeded(format!("branch and bound exceeded {BB_NODE_LIMIT} nodes")));
        }
        let depth = node.labels.len();
        if depth == n {
            if node.labels.iter().any(|&l| l != OUT) {
                let removed = lab.removed(&node.labels);
                let c = removed_mass(g, &removed);
                if c < best_mass {
                    best_mass = c;
                    best = removed;
                }
            }
            continue;
        }
        let has_i = node.labels.contains(&SIDE_I);
        for l in [OUT, SIDE_I, SIDE_J] {
            if l == SIDE_J && !has_i {
                continue;
            }
            let cost = node.cost + lab.label_cost(&node.labels, depth, l);
            let mut labels = node.labels.clone();
            labels.push(l);
            if depth + 1 == n && !labels.iter().any(|&x| x != OUT) {
                continue;
            }
            let bound = lower(&labels, cost);
            if bound < best_mass - eps {
                seq += 1;
                heap.push(Node { bound, seq, labels, cost });
            }
        }
    }
    Ok((best, nodes))
}

/// `RSE² = min_{A ∈ Ω, A ⊂ supp P} Σ_{(i,j) ∈ supp P \ A} p_ij` with its witness.
pub fn mc_rse(p: &ProbMatrix, beta_star: &DVector<f64>, mode: McMode) -> Result<McRse> {
    let g = build_graph(p, beta_star)?;
    if !analyze(&g).well_posed {
        return Ok(finish(&g, &vec![false; g.pairs.len()], mode, 0));
    }
    let (removed, nodes) = match mode {
        McMode::Exact => exact_enumeration(&g)?,
        McMode::BranchBound => {
            // Zero-vertex isolation is evaluated in closed form; the search covers labelings.
            let (mut r, nodes) = branch_and_bound(&g)?;
            if let Some((c, z)) = best_zero_isolation(&g) {
                if c < removed_mass(&g, &r) {
                    r = z;
                }
            }
            (r, nodes)
        }
        McMode::Greedy => (greedy(&g), 0),
    };
    Ok(finish(&g, &removed, mode, nodes))
}

/// `Σ p_ij (v_i β_j + v_j β_i)²`.
pub fn mc_hessian_form(p: &ProbMatrix, beta_star: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
    check_dims(p, beta_star)?;
    check_dims(p, v)?;
    let d = p.dim();
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            let t = v[i] * beta_star[j] + v[j] * beta_star[i];
            s += p.get(i, j) * t * t;
        }
    }
    Ok(s)
}

/// `Φ_β = (I⊗β) + (β⊗I)`, the `d² × d` matrix with `vec(βvᵀ + vβᵀ) = Φ_β v`.
pub fn phi_matrix(beta: &DVector<f64>) -> DMatrix<f64> {
    let d = beta.len();
    let mut phi = DMatrix::zeros(d * d, d);
    for j in 0..d {
        for i in 0..d {
            phi[(i + j * d, j)] += beta[i];
            phi[(i + j * d, i)] += beta[j];
        }
    }
    phi
}

/// `λ_min(ΦᵀΣΦ)`, the REG bracket `[2‖β★‖², 4‖β★‖²]/λ_min`, and the exact REG.
#[derive(Debug, Clone, PartialEq)]
pub struct McReg {
    pub lambda_min: f64,
    pub bracket: (f64, f64),
    /// `1/λ_min(ΦᵀΣΦ, ΦᵀΦ)`.
    pub exact: f64,
}

pub fn mc_reg(p: &ProbMatrix, beta_star: &DVector<f64>) -> Result<McReg> {
    check_dims(p, beta_star)?;
    let d = p.dim();
    let phi = phi_matrix(beta_star);
    let weights = DVector::from_fn(d * d, |k, _| p.get(k % d, k / d));
    let weighted = DMatrix::from_fn(d * d, d, |r, c| phi[(r, c)] * weights[r]);
    let h = PsdMatrix::new(linalg::symmetrize(&(phi.transpose() * weighted)))?;
    let lam = h.lambda_min().max(0.0);
    let n2 = beta_star.norm_squared();
    if is_negligible(lam, h.trace()) || n2 == 0.0 {
        return Ok(McReg { lambda_min: lam, bracket: (f64::INFINITY, f64::INFINITY), exact: f64::INFINITY });
    }
    let metric = linalg::symmetrize(&(phi.transpose() * &phi));
    let (gl, _) = linalg::generalized_min_eig(h.entries(), &metric)?;
    Ok(McReg { lambda_min: lam, bracket: (2.0 * n2 / lam, 4.0 * n2 / lam), exact: 1.0 / gl })
}

/// A nonzero kernel direction `v` of the Hessian form, when one exists.
pub fn mc_kernel_witness(p: &ProbMatrix, beta_star: &DVector<f64>) -> Result<Option<DVector<f64>>> {
    let g = build_graph(p, beta_star)?;
    let rep = analyze(&g);
    if let Some(comp) = rep.bipartite_components.first() {
        let mut dsu = ParityDsu::new(g.dim);
        for q in g.star_pairs() {
            dsu.union(q.i, q.j);
        }
        let mut v = DVector::zeros(g.dim);
        let (_, p0) = dsu.find(comp[0]);
        for &i in comp {
            let (_, par) = dsu.find(i);
            v[i] = if par == p0 { beta_star[i] } else { -beta_star[i] };
        }
        return Ok(Some(v));
    }
    if let Some(&k) = rep.isolated_zeros.first() {
        let mut v = DVector::zeros(g.dim);
        v[k] = 1.0;
        return Ok(Some(v));
    }
    Ok(None)
}

/// `μ_P`: point masses at `vec(e_i e_jᵀ)` with weights `p_ij`, plus the zero matrix
/// carrying the unobserved mass.
pub fn completion_measure(p: &ProbMatrix) -> Result<EmpiricalMeasure> {
    completion_measure_masked(p, &[])
}

/// `(P_A)#μ_P`: entries in `removed` are sent to the zero matrix.
pub fn completion_measure_masked(p: &ProbMatrix, removed: &[(usize, usize)]) -> Result<EmpiricalMeasure> {
    let d = p.dim();
    let gone = |i: usize, j: usize| removed.iter().any(|&(a, b)| (a, b) == (i, j) || (a, b) == (j, i));
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut w = Vec::new();
    for j in 0..d {
        for i in 0..d {
            let pij = p.get(i, j);
            if pij > SUPPORT_TOL {
                let mut x = vec![0.0; d * d];
                if !gone(i, j) {
                    x[i + j * d] = 1.0;
                }
                rows.push(x);
                w.push(pij);
            }
        }
    }
    let rest = 1.0 - w.iter().sum::<f64>();
    if rest > 0.0 || rows.is_empty() {
        rows.push(vec![0.0; d * d]);
        w.push(rest.max(0.0));
    }
    let s: f64 = w.iter().sum();
    let w: Vec<f64> = w.iter().map(|x| x / s).collect();
    EmpiricalMeasure::from_rows(&rows, Some(&w))
}

/// Simple undirected graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleGraph {
    n: usize,
    edges: Vec<(usize, usize)>,
}

impl SimpleGraph {
    /// Rejects self-loops, out-of-range endpoints and repeated edges.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut out: Vec<(usize, usize)> = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidInput(format!("edge ({a},{b}) out of range for {n} vertices")));
            }
            if a == b {
                return Err(Error::InvalidInput(format!("self-loop at vertex {a}")));
            }
            out.push((a.min(b), a.max(b)));
        }
        out.sort();
        let len = out.len();
        out.dedup();
        if out.len() != len {
            return Err(Error::InvalidInput("repeated edge".into()));
        }
        Ok(Self { n, edges: out })
    }

    /// One `i j` pair per line, 1-based; `#` starts a comment. Optional `n` header line
    /// `# vertices N` fixes the vertex count.
    pub fn parse_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut n = 0;
        let mut declared = None;
        for (ln, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if let Some(rest) = line.strip_prefix('#') {
                let mut it = rest.split_whitespace();
                if it.next() == Some("vertices") {
                    declared = it.next().and_then(|s| s.parse::<usize>().ok());
                }
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()).collect();
            if f.len() != 2 {
                return Err(Error::Parse(format!("line {}: expected `i j`", ln + 1)));
            }
            let idx = |s: &str| -> Result<usize> {
                match s.parse::<usize>() {
                    Ok(k) if k >= 1 => Ok(k - 1),
                    _ => Err(Error::Parse(format!("line {}: bad vertex `{s}`", ln + 1))),
                }
            };
            let (a, b) = (idx(f[0])?, idx(f[1])?);
            n = n.max(a + 1).max(b + 1);
            edges.push((a, b));
        }
        let n = match declared {
            Some(k) if k >= n => k,
            Some(k) => return Err(Error::Parse(format!("declared {k} vertices but edges use {n}"))),
            None => n,
        };
        Self::new(n, &edges)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Connected components with at least one edge: `(vertices, edges)`.
    pub fn components(&self) -> Vec<(Vec<usize>, Vec<(usize, usize)>)> {
        let mut dsu = ParityDsu::new(self.n);
        for &(a, b) in &self.edges {
            dsu.union(a, b);
        }
        let mut by_root: BTreeMap<usize, (Vec<usize>, Vec<(usize, usize)>)> = BTreeMap::new();
        for &(a, b) in &self.edges {
            let r = dsu.find(a).0;
            by_root.entry(r).or_default().1.push((a, b));
        }
        for v in 0..self.n {
            let r = dsu.find(v).0;
            if let Some(e) = by_root.get_mut(&r) {
                e.0.push(v);
            }
        }
        by_root.into_values().collect()
    }
}

/// Per-component instance of the reduction: `1/(2|E_ℓ|)` on each ordered edge, `β★ = 1`.
pub fn maxcut_instance(vertices: &[usize], edges: &[(usize, usize)]) -> Result<(ProbMatrix, DVector<f64>)> {
    let k = vertices.len();
    let local = |v: usize| vertices.binary_search(&v).map_err(|_| Error::InvalidInput(format!("vertex {v} not in component")));
    let w = 1.0 / (2.0 * edges.len() as f64);
    let mut m = DMatrix::zeros(k, k);
    for &(a, b) in edges {
        let (i, j) = (local(a)?, local(b)?);
        m[(i, j)] = w;
        m[(j, i)] = w;
    }
    Ok((ProbMatrix::new(m)?, DVector::from_element(k, 1.0)))
}

/// `MaxCut(G) = |E| − Σ_ℓ |E_ℓ| · RSE²(P_ℓ, 1)`, with certified per-component RSE.
pub fn maxcut_via_rse(g: &SimpleGraph) -> Result<u64> {
    let mut cut = g.edges().len() as i64;
    for (vertices, edges) in g.components() {
        let (p, beta) = maxcut_instance(&vertices, &edges)?;
        let r = mc_rse(&p, &beta, McMode::BranchBound)?;
        let removed = r.rse_sq * edges.len() as f64;
        let rounded = removed.round();
        if (removed - rounded).abs() > 1e-9 * edges.len() as f64 {
            return Err(Error::Numerical(format!("removed edge count {removed} is not an integer")));
        }
        cut -= rounded as i64;
    }
    Ok(cut.max(0) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(x: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(x)
    }

    fn pm(rows: &[&[f64]]) -> ProbMatrix {
        let d = rows.len();
        ProbMatrix::new(DMatrix::from_fn(d, d, |i, j| rows[i][j])).unwrap()
    }

    fn triangle() -> ProbMatrix {
        let s = 1.0 / 6.0;
        pm(&[&[0.0, s, s], &[s, 0.0, s], &[s, s, 0.0]])
    }

    #[test]
    fn graph_examples() {
        let g = build_graph(&ProbMatrix::new(DMatrix::zeros(3, 3)).unwrap(), &dv(&[1.0, 0.0, 0.0])).unwrap();
        assert!(g.pairs.is_empty());
        assert_eq!(g.v_zero, vec![1, 2]);
        let g = build_graph(&triangle(), &dv(&[1.0, 1.0, 1.0])).unwrap();
        assert_eq!(g.star_pairs().len(), 3);
        assert!(g.v_zero.is_empty());
        let g = build_graph(&pm(&[&[0.5, 0.0], &[0.0, 0.0]]), &dv(&[1.0, 0.0])).unwrap();
        assert_eq!(g.v_zero, vec![1]);
    }

    #[test]
    fn assumption_examples() {
        let edge = pm(&[&[0.0, 0.5], &[0.5, 0.0]]);
        let r = is_well_posed(&edge, &dv(&[1.0, 1.0])).unwrap();
        assert!(!r.well_posed);
        assert_eq!(r.bipartite_components, vec![vec![0, 1]]);
        assert!(is_well_posed(&triangle(), &dv(&[1.0, 1.0, 1.0])).unwrap().well_posed);
        let looped = pm(&[&[0.5, 0.25], &[0.25, 0.0]]);
        assert!(is_well_posed(&looped, &dv(&[1.0, 1.0])).unwrap().well_posed);
    }

    #[test]
    fn rse_examples() {
        for mode in [McMode::Exact, McMode::BranchBound, McMode::Greedy] {
            let r = mc_rse(&triangle(), &dv(&[1.0, 1.0, 1.0]), mode).unwrap();
            assert!((r.rse_sq - 1.0 / 3.0).abs() < 1e-15, "{mode:?}");
            assert_eq!(r.removed.len(), 1);
            let r = mc_rse(&pm(&[&[0.5, 0.25], &[0.25, 0.0]]), &dv(&[1.0, 0.0]), mode).unwrap();
            assert_eq!(r.rse_sq, 0.5);
        }
        let edge = pm(&[&[0.0, 0.5], &[0.5, 0.0]]);
        let r = mc_rse(&edge, &dv(&[1.0, 1.0]), McMode::Exact).unwrap();
        assert_eq!(r.rse_sq, 0.0);
        assert_eq!(r.kept, vec![(0, 1)]);
    }

    #[test]
    fn exact_mode_limit() {
        let d = 8;
        let w = 1.0 / (d * d) as f64;
        let p = ProbMatrix::new(DMatrix::from_element(d, d, w)).unwrap();
        assert!(matches!(mc_rse(&p, &DVector::from_element(d, 1.0), McMode::Exact), Err(Error::LimitExceeded(_))));
    }

    #[test]
    fn reg_examples() {
        let p = pm(&[&[0.5, 0.25], &[0.25, 0.0]]);
        let r = mc_reg(&p, &dv(&[1.0, 1.0])).unwrap();
        assert!((r.lambda_min - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-14);
        assert!(r.exact >= r.bracket.0 * (1.0 - 1e-12) && r.exact <= r.bracket.1 * (1.0 + 1e-12));
        let edge = pm(&[&[0.0, 0.5], &[0.5, 0.0]]);
        let r = mc_reg(&edge, &dv(&[1.0, 1.0])).unwrap();
        assert_eq!(r.bracket.0, f64::INFINITY);
        let r2 = mc_reg(&p, &dv(&[3.0, 3.0])).unwrap();
        let lam = (3.0 - 5f64.sqrt()) / 2.0;
        assert!((r2.lambda_min - 9.0 * lam).abs() < 1e-12);
        assert!((r2.bracket.0 - 2.0 * 18.0 / (9.0 * lam)).abs() < 1e-9);
    }

    #[test]
    fn phi_vectorizes_symmetric_product() {
        let beta = dv(&[1.0, -2.0, 0.5]);
        let v = dv(&[0.3, 0.7, -1.1]);
        let m = &beta * v.transpose() + &v * beta.transpose();
        let lhs = phi_matrix(&beta) * &v;
        for j in 0..3 {
            for i in 0..3 {
                assert!((lhs[i + 3 * j] - m[(i, j)]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn witness_examples() {
        let edge = pm(&[&[0.0, 0.5], &[0.5, 0.0]]);
        let v = mc_kernel_witness(&edge, &dv(&[1.0, 1.0])).unwrap().unwrap();
        assert_eq!(v, dv(&[1.0, -1.0]));
        let p = pm(&[&[0.5, 0.0], &[0.0, 0.0]]);
        let v = mc_kernel_witness(&p, &dv(&[1.0, 0.0])).unwrap();
        assert!(v.is_some());
        assert!(mc_kernel_witness(&triangle(), &dv(&[1.0, 1.0, 1.0])).unwrap().is_none());
    }

    #[test]
    fn parsers() {
        let p = ProbMatrix::from_triples("1,2,0.25\n2,1,0.25\n# loop\n1 1 0.5\n".as_bytes(), None).unwrap();
        assert_eq!(p.entries(), &DMatrix::from_row_slice(2, 2, &[0.5, 0.25, 0.25, 0.0]));
        assert!(ProbMatrix::from_triples("1,2,0.25\n2,1,0.2\n".as_bytes(), None).is_err());
        assert!(ProbMatrix::from_triples("1,2,0.25\n1,2,0.25\n".as_bytes(), None).is_err());
        let q = ProbMatrix::from_dense_csv("0.5,0.25\n0.25,0\n".as_bytes()).unwrap();
        assert_eq!(p, q);
        let g = SimpleGraph::parse_edge_list("1 2\n2 3\n3 1\n").unwrap();
        assert_eq!(g.n(), 3);
        assert!(SimpleGraph::parse_edge_list("1 1\n").is_err());
    }

    #[test]
    fn maxcut_examples() {
        let k3 = SimpleGraph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(maxcut_via_rse(&k3).unwrap(), 2);
        let e = SimpleGraph::new(2, &[(0, 1)]).unwrap();
        assert_eq!(maxcut_via_rse(&e).unwrap(), 1);
        let c4 = SimpleGraph::new(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        assert_eq!(maxcut_via_rse(&c4).unwrap(), 4);
    }
}
