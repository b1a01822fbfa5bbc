//! Multi-colorings of complete binary trees, the slice decomposition and the
//! greedy colorful-path construction, plus an exhaustive min-max oracle.
//!
//! Nodes are stored in level order: node `i` has children `2i+1` and `2i+2`,
//! and the node at depth `d`, position `t` (0-based) is `2^d − 1 + t`.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use crate::adversary::AdversaryInstance;
use crate::error::{Error, Result};
use crate::geom::ceil_log2;

/// Largest number of colorings `adversary_min_bruteforce` will enumerate.
pub const BRUTEFORCE_LIMIT: u64 = 100_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultiColoredTree {
    pub beta: u32,
    /// Color multiset of every node, in level order.
    pub colors: Vec<Vec<usize>>,
}

impl MultiColoredTree {
    pub fn new(beta: u32, colors: Vec<Vec<usize>>) -> Result<Self> {
        if beta > 30 {
            return Err(Error::ParameterRange(format!("tree height {beta} too large")));
        }
        let want = (1usize << (beta + 1)) - 1;
        if colors.len() != want {
            return Err(Error::InvalidInput(format!(
                "a complete tree of height {beta} has {want} nodes, got {}",
                colors.len()
            )));
        }
        Ok(MultiColoredTree { beta, colors })
    }

    /// Every node carries `per_node` slots of one shared color.
    pub fn uniform(beta: u32, per_node: usize, color: usize) -> Self {
        let nodes = (1usize << (beta + 1)) - 1;
        MultiColoredTree {
            beta,
            colors: vec![vec![color; per_node]; nodes],
        }
    }

    pub fn node_count(&self) -> usize {
        self.colors.len()
    }

    pub fn leaf_count(&self) -> usize {
        1 << self.beta
    }

    pub fn depth(node: usize) -> u32 {
        (usize::BITS - 1) - (node + 1).leading_zeros()
    }

    pub fn node_at(depth: u32, t: usize) -> usize {
        (1usize << depth) - 1 + t
    }

    /// Root-to-leaf path ending at leaf `i` (0-based, left to right).
    pub fn path_to_leaf(&self, i: usize) -> Vec<usize> {
        let mut node = Self::node_at(self.beta, i);
        let mut path = vec![node];
        while node > 0 {
            node = (node - 1) / 2;
            path.push(node);
        }
        path.reverse();
        path
    }

    pub fn distinct_on(&self, path: &[usize]) -> usize {
        let mut seen: Vec<usize> = path.iter().flat_map(|&v| self.colors[v].iter().copied()).collect();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    /// Largest number of distinct colors on any root-leaf path.
    pub fn max_path_distinct(&self) -> usize {
        (0..self.leaf_count())
            .map(|i| self.distinct_on(&self.path_to_leaf(i)))
            .max()
            .unwrap_or(0)
    }

    /// Number of slots of each color.
    pub fn class_sizes(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for c in self.colors.iter().flatten() {
            *out.entry(*c).or_insert(0) += 1;
        }
        out
    }
}

/// Tree of an adversary instance: the line with provenance `(j, t, ·)` goes
/// to the node at depth `β − j`, position `t − 1`. Its color is
/// `coloring[line]` when a coloring is given and the line index otherwise.
///
/// The `k − k′` extra copies of the line below the whole chain belong to the
/// root, the node whose subtree spans all chain vertices.
pub fn tree_from_instance(
    inst: &AdversaryInstance,
    coloring: Option<&[usize]>,
) -> Result<MultiColoredTree> {
    if let Some(c) = coloring {
        if c.len() != inst.lines.len() {
            return Err(Error::InvalidInput(format!(
                "coloring has {} entries for {} lines",
                c.len(),
                inst.lines.len()
            )));
        }
    }
    let beta = inst.beta;
    let mut colors = vec![Vec::new(); (1usize << (beta + 1)) - 1];
    for (idx, l) in inst.lines.iter().enumerate() {
        let p = l.provenance;
        let node = MultiColoredTree::node_at(beta - p.j, p.t as usize - 1);
        colors[node].push(coloring.map_or(idx, |c| c[idx]));
    }
    MultiColoredTree::new(beta, colors)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SliceDecomposition {
    pub beta: u32,
    /// Half-open level ranges `[start, end)`; the last may be truncated at
    /// level `β + 1`.
    pub slices: Vec<(u32, u32)>,
    pub complete_count: usize,
}

/// Number of levels of slice `i` (1-based): `⌈log₂(3iβ)⌉`.
pub fn slice_size(i: u64, beta: u32) -> u32 {
    ceil_log2(3 * i * beta as u64)
}

pub fn slices(beta: u32) -> SliceDecomposition {
    let total = beta + 1;
    let mut out = Vec::new();
    let mut complete = 0;
    let mut start = 0;
    let mut i = 1;
    while start < total {
        let end = start + slice_size(i, beta.max(1));
        if end <= total {
            complete += 1;
        }
        out.push((start, end.min(total)));
        start = end;
        i += 1;
    }
    SliceDecomposition {
        beta,
        slices: out,
        complete_count: complete,
    }
}

/// Number of complete slices. For `β ≥ 4` it is also checked against
/// `⌈(β+1)/(3 log₂ β)⌉ − 1`, in the exact form `β^{3(c+1)} ≥ 2^{β+1}`.
pub fn slice_bound(beta: u32) -> usize {
    let c = slices(beta).complete_count;
    if beta >= 4 {
        assert!(
            meets_log_bound(beta, c),
            "slice count {c} below (beta+1)/(3 log beta) - 1 at beta={beta}"
        );
    }
    c
}

fn meets_log_bound(beta: u32, c: usize) -> bool {
    let e = 3 * (c as u64 + 1);
    if e * (u32::BITS - 1 - beta.leading_zeros()) as u64 > beta as u64 {
        return true;
    }
    BigUint::from(beta).pow(e as u32) >= BigUint::from(1u8) << (beta as usize + 1)
}

/// `Σ_{i=1}^{b} ⌈log₂(3iβ)⌉ ≤ 3b·log₂ β`, decided exactly.
pub fn summation_chain_holds(beta: u32, b: u32) -> bool {
    let s: u64 = (1..=b as u64).map(|i| slice_size(i, beta) as u64).sum();
    summation_bound_holds(beta, b, s)
}

/// Same inequality with the left-hand sum `s` already computed.
fn summation_bound_holds(beta: u32, b: u32, s: u64) -> bool {
    let floor_log = (u32::BITS - 1 - beta.leading_zeros()) as u64;
    if s <= 3 * b as u64 * floor_log {
        return true;
    }
    // 2^s ≤ β^{3b}
    BigUint::from(1u8) << s as usize <= BigUint::from(beta).pow(3 * b)
}

/// All `(β, b)` with `4 ≤ β ≤ max_beta`, `1 ≤ b ≤ β` violating
/// [`summation_chain_holds`].
pub fn summation_chain_violations(max_beta: u32) -> Vec<(u32, u32)> {
    use rayon::prelude::*;
    (4..=max_beta)
        .into_par_iter()
        .flat_map_iter(|beta| {
            let mut s = 0u64;
            (1..=beta).filter_map(move |b| {
                s += slice_size(b as u64, beta) as u64;
                (!summation_bound_holds(beta, b, s)).then_some((beta, b))
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GreedyPath {
    pub nodes: Vec<usize>,
    pub distinct: usize,
    /// Hypothesis violations found in the tree; when non-empty the
    /// guarantee `distinct ≥ slice_bound(β)` does not apply.
    pub violations: Vec<String>,
}

/// Builds a root-leaf path slice by slice. Once the path has at least `i`
/// distinct colors after slice `i` it continues through leftmost children;
/// otherwise the part of the slice below the current path end is searched
/// exhaustively for the sub-path adding the most new colors.
pub fn greedy_colorful_path(tree: &MultiColoredTree) -> GreedyPath {
    let violations = lemma_violations(tree);
    let decomposition = slices(tree.beta);
    let mut path: Vec<usize> = Vec::new();
    let mut counts: HashMap<usize, usize> = HashMap::new();

    for (i, &(start, end)) in decomposition.slices.iter().enumerate() {
        let have = counts.len();
        let extension = if have > i {
            let mut node = path.last().map_or(0, |&z| 2 * z + 1);
            let mut ext = Vec::new();
            for _ in start..end {
                ext.push(node);
                node = 2 * node + 1;
            }
            ext
        } else {
            let firsts: Vec<usize> = match path.last() {
                None => vec![0],
                Some(&z) => vec![2 * z + 1, 2 * z + 2],
            };
            let mut best = (0usize, Vec::new());
            let mut scratch = counts.clone();
            for f in firsts {
                let mut cur = Vec::new();
                search_slice(tree, f, end - start, &mut scratch, &mut cur, &mut best);
            }
            best.1
        };
        for &v in &extension {
            for &c in &tree.colors[v] {
                *counts.entry(c).or_insert(0) += 1;
            }
        }
        path.extend(extension);
    }
    GreedyPath {
        distinct: counts.len(),
        nodes: path,
        violations,
    }
}

/// Depth-first search over downward paths of `levels` nodes starting at
/// `node`, keeping the first one (leftmost) with the most distinct colors.
fn search_slice(
    tree: &MultiColoredTree,
    node: usize,
    levels: u32,
    counts: &mut HashMap<usize, usize>,
    cur: &mut Vec<usize>,
    best: &mut (usize, Vec<usize>),
) {
    for &c in &tree.colors[node] {
        *counts.entry(c).or_insert(0) += 1;
    }
    cur.push(node);
    if levels == 1 {
        if counts.len() > best.0 || best.1.is_empty() {
            *best = (counts.len(), cur.clone());
        }
    } else {
        search_slice(tree, 2 * node + 1, levels - 1, counts, cur, best);
        search_slice(tree, 2 * node + 2, levels - 1, counts, cur, best);
    }
    cur.pop();
    for &c in &tree.colors[node] {
        let e = counts.get_mut(&c).expect("color was counted on entry");
        *e -= 1;
        if *e == 0 {
            counts.remove(&c);
        }
    }
}

/// Checks hypotheses (i) and (ii) with the node size inferred from a
/// non-root node and a class cap of `2k`, `k = size·(β+1)`.
fn lemma_violations(tree: &MultiColoredTree) -> Vec<String> {
    let q = if tree.node_count() > 1 {
        tree.colors[1].len()
    } else {
        tree.colors[0].len()
    };
    let k = q * (tree.beta as usize + 1);
    let report = validate_coloring(tree, k, 2 * k);
    report.violations
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ColoringReport {
    pub k: usize,
    pub class_cap: usize,
    /// Slots required at every non-root node: `⌊k/(β+1)⌋`.
    pub node_size: usize,
    /// Slots required at the root, which also holds the `k mod (β+1)` extras.
    pub root_size: usize,
    pub largest_class: usize,
    pub violations: Vec<String>,
}

impl ColoringReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_coloring(tree: &MultiColoredTree, k: usize, class_cap: usize) -> ColoringReport {
    let levels = tree.beta as usize + 1;
    let node_size = k / levels;
    let root_size = node_size + k % levels;
    let mut violations = Vec::new();
    for (v, c) in tree.colors.iter().enumerate() {
        let want = if v == 0 { root_size } else { node_size };
        if c.len() != want {
            violations.push(format!("node {v} has {} colors, expected {want}", c.len()));
        }
    }
    let sizes = tree.class_sizes();
    for (&c, &s) in &sizes {
        if s > class_cap {
            violations.push(format!("color {c} has {s} slots, cap {class_cap}"));
        }
    }
    ColoringReport {
        k,
        class_cap,
        node_size,
        root_size,
        largest_class: sizes.values().copied().max().unwrap_or(0),
        violations,
    }
}

/// Minimum over all colorings of a height-`β` tree (node sizes as in
/// [`validate_coloring`], classes of at most `class_cap` slots) of the
/// largest number of distinct colors on a root-leaf path.
pub fn adversary_min_bruteforce(beta: u32, k: usize, class_cap: usize) -> Result<usize> {
    if beta > 5 {
        return Err(Error::OracleTooLarge(format!("tree height {beta}")));
    }
    if class_cap == 0 {
        return Err(Error::ParameterRange("class cap must be positive".into()));
    }
    let levels = beta as usize + 1;
    let q = k / levels;
    let root = q + k % levels;
    let nodes = (1usize << levels) - 1;
    let slots = root + q * (nodes - 1);
    if slots == 0 {
        return Ok(0);
    }
    let count = bell_number(slots);
    if count.as_ref().is_none_or(|&b| b > BRUTEFORCE_LIMIT) {
        return Err(Error::OracleTooLarge(format!(
            "{slots} color slots give more than {BRUTEFORCE_LIMIT} colorings"
        )));
    }

    // Slot s belongs to owner[s]; slots are laid out in level order.
    let mut owner = Vec::with_capacity(slots);
    owner.extend(std::iter::repeat_n(0, root));
    for v in 1..nodes {
        owner.extend(std::iter::repeat_n(v, q));
    }
    let mut search = Bruteforce {
        beta,
        cap: class_cap,
        owner,
        assign: vec![0; slots],
        class_size: vec![0; slots],
        best: usize::MAX,
    };
    search.run(0, 0);
    Ok(search.best)
}

struct Bruteforce {
    beta: u32,
    cap: usize,
    owner: Vec<usize>,
    assign: Vec<usize>,
    class_size: Vec<usize>,
    best: usize,
}

impl Bruteforce {
    /// Restricted growth strings: slot `s` takes an existing color or the
    /// next unused one, which enumerates colorings up to renaming.
    fn run(&mut self, s: usize, used: usize) {
        if s == self.assign.len() {
            let value = self.max_path_distinct(used);
            self.best = self.best.min(value);
            return;
        }
        for c in 0..=used.min(self.assign.len() - 1) {
            if self.class_size[c] == self.cap {
                continue;
            }
            self.assign[s] = c;
            self.class_size[c] += 1;
            self.run(s + 1, used.max(c + 1));
            self.class_size[c] -= 1;
            if self.best <= 1 {
                return;
            }
        }
    }

    fn max_path_distinct(&self, used: usize) -> usize {
        let nodes = (1usize << (self.beta + 1)) - 1;
        let mut node_colors = vec![0u64; nodes];
        for (s, &c) in self.assign.iter().enumerate() {
            node_colors[self.owner[s]] |= 1 << c.min(63);
        }
        debug_assert!(used <= 64);
        let first_leaf = (1usize << self.beta) - 1;
        (first_leaf..nodes)
            .map(|leaf| {
                let mut mask = 0u64;
                let mut v = leaf;
                loop {
                    mask |= node_colors[v];
                    if v == 0 {
                        break;
                    }
                    v = (v - 1) / 2;
                }
                mask.count_ones() as usize
            })
            .max()
            .unwrap_or(0)
    }
}

/// Bell number `B(n)`, or `None` on overflow.
fn bell_number(n: usize) -> Option<u64> {
    let mut row: Vec<u64> = vec![1];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for x in &row {
            next.push(next.last().unwrap().checked_add(*x)?);
        }
        row = next;
    }
    Some(row[0])
}
