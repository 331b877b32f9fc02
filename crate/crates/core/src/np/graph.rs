//! Three-level graphs: ordered leaves at the bottom, differential-decorated
//! vertices in the middle, theta vertices on top.  Edges run leaf-vertex and
//! vertex-theta only; a graph contributes at expansion degree equal to the
//! sum of 2g(v) - 2 + m(v) + k(v) over its middle vertices.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;

use crate::toprec::set_partitions;

/// Middle-level vertex: genus label, attached leaf ids, theta-edge count.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VSpec {
    pub g: usize,
    pub leaves: Vec<usize>,
    pub k: usize,
}

impl VSpec {
    pub fn m(&self) -> usize {
        self.leaves.len()
    }

    /// Degree contribution 2g - 2 + m + k (possibly negative before filters).
    pub fn degree(&self) -> i64 {
        2 * self.g as i64 - 2 + self.m() as i64 + self.k as i64
    }
}

/// Graph variant: which object the leaves represent.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Single-edge evaluation leaves (the n-differential assembly).
    Omega,
    /// Multileaves carrying segment integrals; only degree >= 1 "core"
    /// vertices are enumerated (degree-0 chains resum into prefactors).
    Extended,
    /// Leaf 0 marks the dressed-field vertex; its grading is supplied by the
    /// dressed field itself, so only the remaining vertices carry degree.
    Dressed,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Graph3L {
    pub n: usize,
    /// Canonically sorted middle vertices.
    pub verts: Vec<VSpec>,
    /// Theta vertices: sorted lists of incident middle-vertex indices, with
    /// multiplicity for parallel edges; list itself sorted.
    pub thetas: Vec<Vec<usize>>,
    pub aut_order: u64,
}

impl Graph3L {
    /// Total expansion degree carried by the middle vertices (the dressed
    /// vertex of the `Dressed` variant is excluded by convention).
    pub fn degree(&self, variant: Variant) -> i64 {
        self.verts
            .iter()
            .filter(|v| !(variant == Variant::Dressed && v.leaves.contains(&0)))
            .map(VSpec::degree)
            .sum()
    }

    pub fn theta_degrees(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.thetas.iter().map(Vec::len).collect();
        d.sort();
        d
    }

    fn encode(verts: &[VSpec], thetas: &[Vec<usize>]) -> (Vec<VSpec>, Vec<Vec<usize>>) {
        (verts.to_vec(), {
            let mut t: Vec<Vec<usize>> = thetas.to_vec();
            for row in &mut t {
                row.sort();
            }
            t.sort();
            t
        })
    }

    /// Canonical form: vertices sorted by spec; ambiguity between identical
    /// specs resolved by the lexicographically smallest theta relabeling.
    pub fn canonical(n: usize, mut verts: Vec<VSpec>, thetas: Vec<Vec<usize>>) -> Graph3L {
        let order = {
            let mut idx: Vec<usize> = (0..verts.len()).collect();
            idx.sort_by(|&a, &b| verts[a].cmp(&verts[b]));
            idx
        };
        // inv[old] = new position after the sort
        let mut inv = vec![0usize; verts.len()];
        for (new, &old) in order.iter().enumerate() {
            inv[old] = new;
        }
        verts.sort();
        let thetas: Vec<Vec<usize>> = thetas
            .iter()
            .map(|row| row.iter().map(|&v| inv[v]).collect())
            .collect();
        let mut best: Option<(Vec<VSpec>, Vec<Vec<usize>>)> = None;
        for perm in spec_preserving_perms(&verts) {
            let relabeled: Vec<Vec<usize>> = thetas
                .iter()
                .map(|row| row.iter().map(|&v| perm[v]).collect())
                .collect();
            let enc = Self::encode(&verts, &relabeled);
            if best.as_ref().map(|b| enc < *b).unwrap_or(true) {
                best = Some(enc);
            }
        }
        let (verts, thetas) = best.unwrap_or_else(|| Self::encode(&verts, &[]));
        let aut_order = aut_count(&verts, &thetas);
        Graph3L { n, verts, thetas, aut_order }
    }

    /// Identity ignoring the automorphism count (used for set comparisons).
    pub fn key(&self) -> (usize, Vec<VSpec>, Vec<Vec<usize>>) {
        (self.n, self.verts.clone(), self.thetas.clone())
    }

    pub fn is_connected(&self) -> bool {
        if self.verts.is_empty() {
            return false;
        }
        // Union-find over middle vertices; leaves are single-homed and theta
        // vertices only join middle vertices, so both act as connectors.
        let mut parent: Vec<usize> = (0..self.verts.len()).collect();
        fn find(p: &mut Vec<usize>, i: usize) -> usize {
            if p[i] != i {
                let r = find(p, p[i]);
                p[i] = r;
            }
            p[i]
        }
        for row in &self.thetas {
            for w in row.windows(2) {
                let (a, b) = (find(&mut parent, w[0]), find(&mut parent, w[1]));
                parent[a] = b;
            }
        }
        let root = find(&mut parent, 0);
        (0..self.verts.len()).all(|i| find(&mut parent, i) == root)
    }
}

/// All permutations of vertex indices that map each vertex to one with an
/// identical spec (the only candidates for graph automorphisms).
fn spec_preserving_perms(verts: &[VSpec]) -> Vec<Vec<usize>> {
    let mut groups: BTreeMap<&VSpec, Vec<usize>> = BTreeMap::new();
    for (i, v) in verts.iter().enumerate() {
        groups.entry(v).or_default().push(i);
    }
    let mut perms = vec![vec![0usize; verts.len()]];
    for idx in groups.values() {
        let mut next = Vec::new();
        for base in &perms {
            for p in idx.iter().permutations(idx.len()) {
                let mut b = base.clone();
                for (src, dst) in idx.iter().zip(p) {
                    b[*src] = *dst;
                }
                next.push(b);
            }
        }
        perms = next;
    }
    perms
}

/// |Aut|: decoration-preserving vertex/theta permutation pairs times the
/// parallel-edge factor.
pub fn aut_count(verts: &[VSpec], thetas: &[Vec<usize>]) -> u64 {
    let rows: Vec<Vec<usize>> = thetas.to_vec();
    let mut pairs = 0u64;
    for perm in spec_preserving_perms(verts) {
        let mut mapped: Vec<Vec<usize>> = rows
            .iter()
            .map(|row| {
                let mut r: Vec<usize> = row.iter().map(|&v| perm[v]).collect();
                r.sort();
                r
            })
            .collect();
        mapped.sort();
        let mut orig = rows.clone();
        orig.sort();
        if mapped == orig {
            // Theta permutations compatible with this vertex permutation:
            // any bijection between equal rows.
            let mut cnt: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
            for r in &mapped {
                *cnt.entry(r.clone()).or_insert(0) += 1;
            }
            pairs += cnt.values().map(|&c| (1..=c).product::<u64>()).product::<u64>();
        }
    }
    let mut edge_factor = 1u64;
    for (vi, _) in verts.iter().enumerate() {
        for row in &rows {
            let mult = row.iter().filter(|&&v| v == vi).count() as u64;
            edge_factor *= (1..=mult).product::<u64>();
        }
    }
    pairs * edge_factor
}

/// Brute-force |Aut| directly on the edge set: count triples of vertex,
/// theta, and edge bijections preserving incidence and decorations.
pub fn aut_count_bruteforce(verts: &[VSpec], thetas: &[Vec<usize>]) -> u64 {
    // Labeled theta edges as (vertex, theta) pairs.
    let edges: Vec<(usize, usize)> = thetas
        .iter()
        .enumerate()
        .flat_map(|(t, row)| row.iter().map(move |&v| (v, t)))
        .collect();
    let mut count = 0u64;
    for vperm in spec_preserving_perms(verts) {
        for tperm in (0..thetas.len()).permutations(thetas.len()) {
            // Edge bijections compatible with (vperm, tperm): the image
            // multiset of endpoint pairs must equal the original; the number
            // of such bijections is the product of multiplicities factorial,
            // counted below by multiset matching.
            let mapped: Vec<(usize, usize)> =
                edges.iter().map(|&(v, t)| (vperm[v], tperm[t])).collect();
            let mut need: BTreeMap<(usize, usize), i64> = BTreeMap::new();
            for e in &edges {
                *need.entry(*e).or_insert(0) += 1;
            }
            for e in &mapped {
                *need.entry(*e).or_insert(0) -= 1;
            }
            if need.values().all(|&c| c == 0) {
                let mut mult: BTreeMap<(usize, usize), u64> = BTreeMap::new();
                for e in &edges {
                    *mult.entry(*e).or_insert(0) += 1;
                }
                count += mult.values().map(|&c| (1..=c).product::<u64>()).product::<u64>();
            }
        }
    }
    count
}

/// Multisets of degree->=1 leafless vertices (g, k) with total degree `d`.
fn leafless_multisets(d: i64) -> Vec<Vec<VSpec>> {
    // Candidate leafless species: k >= 1 (k = 0 would disconnect), degree
    // 2g - 2 + k between 1 and d.
    let mut species = Vec::new();
    for g in 0..=((d + 2) / 2) as usize {
        for k in 1..=(d + 2) as usize {
            let v = VSpec { g, leaves: Vec::new(), k };
            if v.degree() >= 1 && v.degree() <= d && !(g == 0 && k == 2) && !(g == 0 && k == 1) {
                // (0, 0, 1) has degree -1 and (0, 0, 2) is excluded; both
                // guards above are redundant with the degree filter except
                // the explicit (0,0,2) rule, kept for clarity.
                species.push(v);
            }
        }
    }
    // (0,0,2) never passes the degree >= 1 filter; the guard documents the rule.
    let mut out = Vec::new();
    fn rec(species: &[VSpec], from: usize, left: i64, cur: &mut Vec<VSpec>, out: &mut Vec<Vec<VSpec>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for i in from..species.len() {
            let deg = species[i].degree();
            if deg <= left {
                cur.push(species[i].clone());
                rec(species, i, left - deg, cur, out);
                cur.pop();
            }
        }
    }
    rec(&species, 0, d, &mut Vec::new(), &mut out);
    out
}

/// Set partitions of the labeled theta stubs (vertex index repeated k times)
/// into theta vertices.
fn stub_partitions(stubs: &[usize]) -> Vec<Vec<Vec<usize>>> {
    set_partitions(stubs.len())
        .into_iter()
        .map(|p| {
            p.into_iter()
                .map(|block| {
                    let mut row: Vec<usize> = block.into_iter().map(|i| stubs[i]).collect();
                    row.sort();
                    row
                })
                .collect()
        })
        .collect()
}

fn dedup(graphs: Vec<Graph3L>) -> Vec<Graph3L> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for g in graphs {
        if seen.insert(g.key()) {
            out.push(g);
        }
    }
    out.sort();
    out
}

/// All connected isomorphism classes at exactly degree `d`.
pub fn enumerate_graphs(variant: Variant, n: usize, d: usize) -> Vec<Graph3L> {
    match variant {
        Variant::Omega => enumerate_leaf_graphs(n, d as i64, false),
        Variant::Dressed => enumerate_dressed_graphs(n, d as i64),
        Variant::Extended => enumerate_core_graphs(n, d as i64),
    }
}

/// Single-edge-leaf graphs; with `dressed`, leaf 0's vertex carries no (g)
/// label of its own and is excluded from the degree count.
fn enumerate_leaf_graphs(n: usize, d: i64, dressed: bool) -> Vec<Graph3L> {
    let mut graphs = Vec::new();
    for leaf_partition in set_partitions(n) {
        // Assign (g, k) to each leafed vertex.
        let blocks: Vec<Vec<usize>> = leaf_partition;
        let mut assignments: Vec<Vec<VSpec>> = vec![Vec::new()];
        for block in &blocks {
            let is_dressed = dressed && block.contains(&0);
            let mut next = Vec::new();
            for base in &assignments {
                let used: i64 = base
                    .iter()
                    .filter(|v| !(dressed && v.leaves.contains(&0)))
                    .map(VSpec::degree)
                    .sum();
                if is_dressed {
                    // The dressed vertex: g is irrelevant (set 0), any k with
                    // the global stub bound; its degree is not counted.
                    for k in 0..=(d + 2) as usize + n {
                        let mut b = base.clone();
                        b.push(VSpec { g: 0, leaves: block.clone(), k });
                        next.push(b);
                    }
                } else {
                    for g in 0..=((d + 2) / 2) as usize {
                        for k in 0..=(d + 2) as usize {
                            let v = VSpec { g, leaves: block.clone(), k };
                            if v.degree() >= 0
                                && used + v.degree() <= d
                                && !(g == 0 && v.m() == 0 && k == 2)
                            {
                                let mut b = base.clone();
                                b.push(v);
                                next.push(b);
                            }
                        }
                    }
                }
            }
            assignments = next;
        }
        for leafed in assignments {
            let used: i64 = leafed
                .iter()
                .filter(|v| !(dressed && v.leaves.contains(&0)))
                .map(VSpec::degree)
                .sum();
            if used > d {
                continue;
            }
            for extra in leafless_multisets(d - used) {
                let mut verts = leafed.clone();
                verts.extend(extra);
                let stubs: Vec<usize> = verts
                    .iter()
                    .enumerate()
                    .flat_map(|(i, v)| std::iter::repeat(i).take(v.k))
                    .collect();
                for thetas in stub_partitions(&stubs) {
                    let g = Graph3L::canonical(n, verts.clone(), thetas);
                    if g.is_connected() {
                        graphs.push(g);
                    }
                }
            }
        }
    }
    dedup(graphs)
}

/// Dressed-variant graphs: leaf ids are 0..n with leaf 0 on the dressed
/// vertex; `d` bounds the total expansion degree, counting the dressed
/// vertex's minimal contribution of (spectator count - 1).
fn enumerate_dressed_graphs(n: usize, d: i64) -> Vec<Graph3L> {
    enumerate_leaf_graphs(n + 1, d, true)
        .into_iter()
        .filter(|g| {
            let w = g
                .verts
                .iter()
                .find(|v| v.leaves.contains(&0))
                .expect("dressed vertex");
            let spectators = (w.m() - 1 + w.k) as i64;
            g.degree(Variant::Dressed) + (spectators - 1).max(-1) <= d
        })
        .map(|mut g| {
            g.n = n;
            g
        })
        .collect()
}

/// Core graphs of the multileaf variant: every vertex has degree >= 1 (the
/// degree-0 chains exponentiate into prefactors), leaves may carry any
/// number of edges including none.
fn enumerate_core_graphs(n: usize, d: i64) -> Vec<Graph3L> {
    let mut graphs = Vec::new();
    // Enumerate multisets of vertices with total degree d, each of degree
    // >= 1, where each vertex has g, k theta-stubs, and a multiset of leaf
    // attachments (m counts edges to leaves, leaves unordered per vertex).
    fn rec(n: usize, left: i64, cur: &mut Vec<VSpec>, out: &mut Vec<Vec<VSpec>>) {
        if left == 0 {
            if !cur.is_empty() {
                out.push(cur.clone());
            }
            return;
        }
        // Candidate species of degree 1..=left, kept in sorted chains so
        // each multiset appears once.
        for g in 0..=((left + 2) / 2) as usize {
            for k in 0..=(left + 2) as usize {
                for m in 0..=(left + 2) as usize {
                    let deg = 2 * g as i64 - 2 + m as i64 + k as i64;
                    if deg < 1 || deg > left {
                        continue;
                    }
                    for leaves in multisets(n, m) {
                        let v = VSpec { g, leaves, k };
                        if cur.last().map(|l| *l <= v).unwrap_or(true) {
                            cur.push(v);
                            rec(n, left - deg, cur, out);
                            cur.pop();
                        }
                    }
                }
            }
        }
    }
    let mut vsets = Vec::new();
    rec(n, d, &mut Vec::new(), &mut vsets);
    for verts in vsets {
        let stubs: Vec<usize> = verts
            .iter()
            .enumerate()
            .flat_map(|(i, v)| std::iter::repeat(i).take(v.k))
            .collect();
        for thetas in stub_partitions(&stubs) {
            let g = Graph3L::canonical(n, verts.clone(), thetas);
            if g.is_connected() {
                graphs.push(g);
            }
        }
    }
    dedup(graphs)
}

/// Multisets of size m drawn from {0..n-1}, sorted.
fn multisets(n: usize, m: usize) -> Vec<Vec<usize>> {
    if m == 0 {
        return vec![Vec::new()];
    }
    if n == 0 {
        return Vec::new();
    }
    let mut out = Vec::new();
    fn rec(n: usize, m: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if m == 0 {
            out.push(cur.clone());
            return;
        }
        for i in from..n {
            cur.push(i);
            rec(n, m - 1, i, cur, out);
            cur.pop();
        }
    }
    rec(n, m, 0, &mut Vec::new(), &mut out);
    out
}

/// Independent generate-and-filter enumerator for small cases: try every
/// vertex count, every (g, k) decoration, every leaf map and stub partition,
/// filter the invariants, and canonicalize.
pub fn enumerate_naive(n: usize, d: usize) -> Vec<Graph3L> {
    let mut graphs = Vec::new();
    // Degree-0 vertices carry at least one leaf and degree->=1 vertices sum
    // to d, so vertex counts beyond n + d cannot pass the filters.
    let vmax = n + d;
    for nv in 1..=vmax {
        // leaf maps: leaf -> vertex
        let leaf_maps: Vec<Vec<usize>> = if n == 0 {
            vec![Vec::new()]
        } else {
            (0..n).map(|_| 0..nv).multi_cartesian_product().collect()
        };
        for leaf_map in &leaf_maps {
            // decorations
            let decos: Vec<Vec<(usize, usize)>> = (0..nv)
                .map(|_| {
                    (0..=(d + 1))
                        .flat_map(|g| (0..=(d + 3)).map(move |k| (g, k)))
                        .collect::<Vec<_>>()
                })
                .multi_cartesian_product()
                .collect();
            for deco in decos {
                let verts: Vec<VSpec> = deco
                    .iter()
                    .enumerate()
                    .map(|(i, &(g, k))| VSpec {
                        g,
                        leaves: (0..n).filter(|&l| leaf_map[l] == i).collect(),
                        k,
                    })
                    .collect();
                if verts.iter().any(|v| v.degree() < 0) {
                    continue;
                }
                if verts.iter().any(|v| v.g == 0 && v.m() == 0 && v.k == 2) {
                    continue;
                }
                if verts.iter().map(VSpec::degree).sum::<i64>() != d as i64 {
                    continue;
                }
                let stubs: Vec<usize> = verts
                    .iter()
                    .enumerate()
                    .flat_map(|(i, v)| std::iter::repeat(i).take(v.k))
                    .collect();
                for thetas in stub_partitions(&stubs) {
                    let g = Graph3L::canonical(n, verts.clone(), thetas);
                    if g.is_connected() {
                        graphs.push(g);
                    }
                }
            }
        }
    }
    dedup(graphs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leaf_variant_base_cases() {
        let g1 = enumerate_graphs(Variant::Omega, 1, 0);
        assert_eq!(g1.len(), 1);
        assert_eq!(g1[0].verts, vec![VSpec { g: 0, leaves: vec![0], k: 1 }]);
        assert_eq!(g1[0].thetas, vec![vec![0]]);
        assert_eq!(g1[0].aut_order, 1);

        let g2 = enumerate_graphs(Variant::Omega, 2, 0);
        assert_eq!(g2.len(), 2);
        // One graph joins the leaves on a single vertex, the other routes
        // both through the theta level.
        let kinds: Vec<usize> = g2.iter().map(|g| g.verts.len()).collect();
        assert!(kinds.contains(&1) && kinds.contains(&2));
    }

    #[test]
    fn no_bare_two_stub_genus_zero_vertex() {
        for n in 1..=2 {
            for d in 0..=2 {
                for g in enumerate_graphs(Variant::Omega, n, d) {
                    assert!(!g
                        .verts
                        .iter()
                        .any(|v| v.g == 0 && v.m() == 0 && v.k == 2));
                }
            }
        }
    }

    #[test]
    fn matches_naive_enumerator() {
        for n in 1..=2 {
            for d in 0..=2 {
                let fast: Vec<_> = enumerate_graphs(Variant::Omega, n, d)
                    .into_iter()
                    .map(|g| (g.key(), g.aut_order))
                    .collect();
                let naive: Vec<_> = enumerate_naive(n, d)
                    .into_iter()
                    .map(|g| (g.key(), g.aut_order))
                    .collect();
                assert_eq!(fast, naive, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn aut_matches_bruteforce() {
        for n in 1..=2 {
            for d in 0..=2 {
                for g in enumerate_graphs(Variant::Omega, n, d) {
                    if g.verts.len() + g.thetas.len() > 8 {
                        continue;
                    }
                    assert_eq!(
                        g.aut_order,
                        aut_count_bruteforce(&g.verts, &g.thetas),
                        "{g:?}"
                    );
                }
            }
        }
    }

    #[test]
    fn parallel_edges_double_aut() {
        // A single (1,0,2) vertex with both stubs on one theta vertex.
        let verts = vec![VSpec { g: 1, leaves: vec![0], k: 2 }];
        let thetas = vec![vec![0, 0]];
        assert_eq!(aut_count(&verts, &thetas), 2);
        assert_eq!(aut_count_bruteforce(&verts, &thetas), 2);
        // Two interchangeable (1,0,1) vertices on a shared theta vertex.
        let verts = vec![
            VSpec { g: 1, leaves: vec![], k: 1 },
            VSpec { g: 1, leaves: vec![], k: 1 },
        ];
        let thetas = vec![vec![0, 1]];
        assert_eq!(aut_count(&verts, &thetas), 2);
        assert_eq!(aut_count_bruteforce(&verts, &thetas), 2);
    }

    #[test]
    fn dressed_variant_marks_leaf_zero() {
        for g in enumerate_graphs(Variant::Dressed, 1, 1) {
            let hosts: Vec<_> = g.verts.iter().filter(|v| v.leaves.contains(&0)).collect();
            assert_eq!(hosts.len(), 1);
            assert!(g.is_connected());
        }
        // Pure dressed vertex: the degree-0 budget still admits the graph
        // with both leaves on the dressed vertex and no theta level.
        let d0 = enumerate_graphs(Variant::Dressed, 1, 0);
        assert!(d0
            .iter()
            .any(|g| g.verts.len() == 1 && g.thetas.is_empty()));
    }
}
