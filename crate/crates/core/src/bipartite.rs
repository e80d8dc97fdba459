//! Bipartite multigraphs: equitable edge-colourings, maximum matchings and
//! Hall-violator certificates.

use std::collections::VecDeque;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BipartiteError {
    #[error("an edge-colouring needs at least one colour")]
    ZeroColors,
}

/// A bipartite multigraph with labelled sides. Vertices are addressed by
/// their index in the label lists; parallel edges are allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteMultigraph {
    left_labels: Vec<String>,
    right_labels: Vec<String>,
    edges: Vec<(usize, usize)>,
}

impl BipartiteMultigraph {
    pub fn new(left_labels: Vec<String>, right_labels: Vec<String>) -> Self {
        Self {
            left_labels,
            right_labels,
            edges: Vec::new(),
        }
    }

    /// Graph with labels `v1..` on the left and `w1..` on the right.
    pub fn with_sizes(left: usize, right: usize) -> Self {
        Self::new(
            (1..=left).map(|i| format!("v{i}")).collect(),
            (1..=right).map(|j| format!("w{j}")).collect(),
        )
    }

    /// Adds an edge and returns its index.
    pub fn add_edge(&mut self, left: usize, right: usize) -> usize {
        assert!(
            left < self.left_labels.len() && right < self.right_labels.len(),
            "edge ({left}, {right}) out of range"
        );
        self.edges.push((left, right));
        self.edges.len() - 1
    }

    pub fn left_count(&self) -> usize {
        self.left_labels.len()
    }

    pub fn right_count(&self) -> usize {
        self.right_labels.len()
    }

    pub fn left_labels(&self) -> &[String] {
        &self.left_labels
    }

    pub fn right_labels(&self) -> &[String] {
        &self.right_labels
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn left_degree(&self, v: usize) -> usize {
        self.edges.iter().filter(|e| e.0 == v).count()
    }

    pub fn right_degree(&self, w: usize) -> usize {
        self.edges.iter().filter(|e| e.1 == w).count()
    }

    pub fn has_edge(&self, left: usize, right: usize) -> bool {
        self.edges.contains(&(left, right))
    }

    /// Sorted, deduplicated neighbourhood of a set of left vertices.
    pub fn neighborhood(&self, left_subset: &[usize]) -> Vec<usize> {
        let mut member = vec![false; self.left_count()];
        for &v in left_subset {
            member[v] = true;
        }
        let mut hit = vec![false; self.right_count()];
        for &(v, w) in &self.edges {
            if member[v] {
                hit[w] = true;
            }
        }
        (0..self.right_count()).filter(|&w| hit[w]).collect()
    }

    /// Same graph with the two sides exchanged.
    pub fn transpose(&self) -> Self {
        Self {
            left_labels: self.right_labels.clone(),
            right_labels: self.left_labels.clone(),
            edges: self.edges.iter().map(|&(v, w)| (w, v)).collect(),
        }
    }

    /// Left adjacency lists, sorted and without repeats.
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.left_count()];
        for &(v, w) in &self.edges {
            adj[v].push(w);
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }
}

/// A colouring of the edges of a multigraph with colours `1..=k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeColoring {
    k: usize,
    colors: Vec<usize>,
}

impl EdgeColoring {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn color_of(&self, edge: usize) -> usize {
        self.colors[edge]
    }

    pub fn colors(&self) -> &[usize] {
        &self.colors
    }

    /// Edge indices carrying `color`, in index order.
    pub fn class(&self, color: usize) -> Vec<usize> {
        (0..self.colors.len()).filter(|&e| self.colors[e] == color).collect()
    }

    /// `|E_i(v)|` for `i = 1..=k` at a left vertex.
    pub fn left_counts(&self, g: &BipartiteMultigraph, v: usize) -> Vec<usize> {
        self.counts(g, |e| e.0 == v)
    }

    pub fn right_counts(&self, g: &BipartiteMultigraph, w: usize) -> Vec<usize> {
        self.counts(g, |e| e.1 == w)
    }

    fn counts(&self, g: &BipartiteMultigraph, at: impl Fn(&(usize, usize)) -> bool) -> Vec<usize> {
        let mut counts = vec![0; self.k];
        for (e, edge) in g.edges.iter().enumerate() {
            if at(edge) {
                counts[self.colors[e] - 1] += 1;
            }
        }
        counts
    }

    /// Checks the definition directly: every edge has a colour in `1..=k`
    /// and at every vertex the colour class sizes differ by at most one.
    pub fn is_equitable(&self, g: &BipartiteMultigraph) -> bool {
        if self.colors.len() != g.edges.len() || self.colors.iter().any(|&c| c == 0 || c > self.k) {
            return false;
        }
        let balanced = |counts: Vec<usize>| {
            let lo = counts.iter().min().copied().unwrap_or(0);
            let hi = counts.iter().max().copied().unwrap_or(0);
            hi - lo <= 1
        };
        (0..g.left_count()).all(|v| balanced(self.left_counts(g, v)))
            && (0..g.right_count()).all(|w| balanced(self.right_counts(g, w)))
    }
}

/// Equitable `k`-edge-colouring of a bipartite multigraph.
///
/// Each vertex of degree `d` is split into `ceil(d / k)` copies holding at
/// most `k` of its edges (consecutive in edge order, so all copies but the
/// last are full). The split graph has maximum degree `k` and is coloured
/// properly by alternating-path recolouring; every full copy then sees each
/// colour once and the last copy sees each colour at most once.
pub fn equitable_edge_coloring(g: &BipartiteMultigraph, k: usize) -> Result<EdgeColoring, BipartiteError> {
    if k == 0 {
        return Err(BipartiteError::ZeroColors);
    }
    let m = g.edges.len();
    let (left_copy, left_total) = split_side(g.edges.iter().map(|e| e.0), g.left_count(), k);
    let (right_copy, right_total) = split_side(g.edges.iter().map(|e| e.1), g.right_count(), k);
    let ends: Vec<(usize, usize)> = (0..m).map(|e| (left_copy[e], left_total + right_copy[e])).collect();

    const NONE: usize = usize::MAX;
    let vertices = left_total + right_total;
    let mut at = vec![NONE; vertices * k];
    let mut color = vec![NONE; m];
    let free_at = |at: &[usize], x: usize| (0..k).find(|&c| at[x * k + c] == NONE).expect("degree <= k");

    for e in 0..m {
        let (u, v) = ends[e];
        let a = free_at(&at, u);
        let b = free_at(&at, v);
        if at[v * k + a] != NONE {
            // Swap colours a and b along the a/b path starting at v.
            let mut path = Vec::new();
            let (mut x, mut c) = (v, a);
            while at[x * k + c] != NONE {
                let f = at[x * k + c];
                path.push(f);
                x = if ends[f].0 == x { ends[f].1 } else { ends[f].0 };
                c = if c == a { b } else { a };
            }
            for &f in &path {
                let (p, q) = ends[f];
                at[p * k + color[f]] = NONE;
                at[q * k + color[f]] = NONE;
            }
            for &f in &path {
                let (p, q) = ends[f];
                color[f] = if color[f] == a { b } else { a };
                at[p * k + color[f]] = f;
                at[q * k + color[f]] = f;
            }
            debug_assert_eq!(at[u * k + a], NONE, "alternating path reached the other endpoint");
        }
        color[e] = a;
        at[u * k + a] = e;
        at[v * k + a] = e;
    }

    Ok(EdgeColoring {
        k,
        colors: color.into_iter().map(|c| c + 1).collect(),
    })
}

/// Assigns every edge end to a vertex copy; returns per-edge copy ids and
/// the number of copies.
fn split_side(ends: impl Iterator<Item = usize>, vertices: usize, k: usize) -> (Vec<usize>, usize) {
    let ends: Vec<usize> = ends.collect();
    let mut degree = vec![0usize; vertices];
    for &v in &ends {
        degree[v] += 1;
    }
    let mut base = vec![0usize; vertices];
    let mut total = 0;
    for v in 0..vertices {
        base[v] = total;
        total += degree[v].div_ceil(k);
    }
    let mut seen = vec![0usize; vertices];
    let copies = ends
        .iter()
        .map(|&v| {
            let id = base[v] + seen[v] / k;
            seen[v] += 1;
            id
        })
        .collect();
    (copies, total)
}

/// A set of vertex-disjoint edges, stored as `(left, right)` pairs sorted
/// by left vertex.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Matching {
    pairs: Vec<(usize, usize)>,
}

impl Matching {
    pub fn from_pairs(mut pairs: Vec<(usize, usize)>) -> Self {
        pairs.sort_unstable();
        Self { pairs }
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn right_of(&self, left: usize) -> Option<usize> {
        self.pairs.iter().find(|p| p.0 == left).map(|p| p.1)
    }

    /// Every pair is an edge and no vertex is used twice.
    pub fn is_valid(&self, g: &BipartiteMultigraph) -> bool {
        let mut left = vec![false; g.left_count()];
        let mut right = vec![false; g.right_count()];
        self.pairs.iter().all(|&(v, w)| {
            let fresh = v < left.len() && w < right.len() && !left[v] && !right[w];
            if fresh {
                left[v] = true;
                right[w] = true;
            }
            fresh && g.has_edge(v, w)
        })
    }
}

/// A set `A` of left vertices whose neighbourhood is smaller than `A`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HallViolator {
    pub left_subset: Vec<usize>,
    pub neighborhood: Vec<usize>,
}

impl HallViolator {
    pub fn deficiency(&self) -> usize {
        self.left_subset.len().saturating_sub(self.neighborhood.len())
    }

    /// Recomputes the neighbourhood in `g` and checks `|N(A)| < |A|`.
    pub fn verify(&self, g: &BipartiteMultigraph) -> bool {
        let mut subset = self.left_subset.clone();
        subset.sort_unstable();
        subset.dedup();
        if subset.len() != self.left_subset.len() || subset.iter().any(|&v| v >= g.left_count()) {
            return false;
        }
        let nbhd = g.neighborhood(&subset);
        nbhd == self.neighborhood && nbhd.len() < subset.len()
    }
}

impl fmt::Display for HallViolator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} left vertices {:?} have only {} neighbours {:?}",
            self.left_subset.len(),
            self.left_subset,
            self.neighborhood.len(),
            self.neighborhood
        )
    }
}

struct Augmenter {
    adj: Vec<Vec<usize>>,
    match_left: Vec<Option<usize>>,
    match_right: Vec<Option<usize>>,
}

impl Augmenter {
    fn new(g: &BipartiteMultigraph, initial: &Matching) -> Self {
        let mut match_left = vec![None; g.left_count()];
        let mut match_right = vec![None; g.right_count()];
        for &(v, w) in initial.pairs() {
            match_left[v] = Some(w);
            match_right[w] = Some(v);
        }
        Self {
            adj: g.adjacency(),
            match_left,
            match_right,
        }
    }

    fn try_augment(&mut self, v: usize, visited: &mut [bool]) -> bool {
        for i in 0..self.adj[v].len() {
            let w = self.adj[v][i];
            if visited[w] {
                continue;
            }
            visited[w] = true;
            let free = match self.match_right[w] {
                None => true,
                Some(u) => self.try_augment(u, visited),
            };
            if free {
                self.match_left[v] = Some(w);
                self.match_right[w] = Some(v);
                return true;
            }
        }
        false
    }

    fn run(&mut self) {
        let mut visited = vec![false; self.match_right.len()];
        for v in 0..self.adj.len() {
            if self.match_left[v].is_none() {
                visited.fill(false);
                self.try_augment(v, &mut visited);
            }
        }
    }

    fn matching(&self) -> Matching {
        Matching {
            pairs: self
                .match_left
                .iter()
                .enumerate()
                .filter_map(|(v, w)| w.map(|w| (v, w)))
                .collect(),
        }
    }

    /// Left vertices reachable by alternating paths from the first free
    /// left vertex, with their neighbourhood. Valid once `run` finished.
    fn violator(&self) -> Option<HallViolator> {
        let start = self.match_left.iter().position(Option::is_none)?;
        let mut seen_left = vec![false; self.adj.len()];
        let mut seen_right = vec![false; self.match_right.len()];
        let mut queue = VecDeque::from([start]);
        seen_left[start] = true;
        while let Some(v) = queue.pop_front() {
            for &w in &self.adj[v] {
                if !seen_right[w] {
                    seen_right[w] = true;
                    let u = self.match_right[w].expect("maximum matching leaves no augmenting path");
                    if !seen_left[u] {
                        seen_left[u] = true;
                        queue.push_back(u);
                    }
                }
            }
        }
        Some(HallViolator {
            left_subset: (0..seen_left.len()).filter(|&v| seen_left[v]).collect(),
            neighborhood: (0..seen_right.len()).filter(|&w| seen_right[w]).collect(),
        })
    }
}

/// Maximum-cardinality matching by augmenting paths, left vertices taken
/// in index order.
pub fn max_matching(g: &BipartiteMultigraph) -> Matching {
    max_matching_from(g, &Matching::default())
}

/// Grows `initial` to a maximum matching. Vertices matched in `initial`
/// stay matched (possibly to different partners).
pub fn max_matching_from(g: &BipartiteMultigraph, initial: &Matching) -> Matching {
    debug_assert!(initial.is_valid(g));
    let mut aug = Augmenter::new(g, initial);
    aug.run();
    aug.matching()
}

/// A matching covering every left vertex, or a Hall violator proving that
/// none exists.
pub fn saturating_matching(g: &BipartiteMultigraph) -> Result<Matching, HallViolator> {
    let mut aug = Augmenter::new(g, &Matching::default());
    aug.run();
    match aug.violator() {
        None => Ok(aug.matching()),
        Some(v) => Err(v),
    }
}

/// Why no matching covers both the left side and a required right set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoverFailure {
    /// Violator among the left vertices of the graph.
    Left(HallViolator),
    /// Violator in the transposed graph: `left_subset` lists required right
    /// vertices and `neighborhood` their left neighbours.
    Right(HallViolator),
}

/// A matching that covers every left vertex and every right vertex in
/// `required`. Such a matching exists iff each of the two sides can be
/// covered on its own; the required side is matched first and augmenting
/// from the left never unmatches a right vertex.
pub fn saturating_matching_covering(
    g: &BipartiteMultigraph,
    required: &[usize],
) -> Result<Matching, CoverFailure> {
    let mut initial = Matching::default();
    if !required.is_empty() {
        let mut sub = BipartiteMultigraph::new(
            required.iter().map(|&w| g.right_labels[w].clone()).collect(),
            g.left_labels.clone(),
        );
        for (i, &w) in required.iter().enumerate() {
            for &(v, x) in &g.edges {
                if x == w {
                    sub.edges.push((i, v));
                }
            }
        }
        match saturating_matching(&sub) {
            Ok(m) => {
                initial = Matching::from_pairs(m.pairs.iter().map(|&(i, v)| (v, required[i])).collect())
            }
            Err(v) => {
                return Err(CoverFailure::Right(HallViolator {
                    left_subset: v.left_subset.iter().map(|&i| required[i]).collect(),
                    neighborhood: v.neighborhood,
                }))
            }
        }
    }
    let mut aug = Augmenter::new(g, &initial);
    aug.run();
    match aug.violator() {
        None => Ok(aug.matching()),
        Some(v) => Err(CoverFailure::Left(v)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(left: usize, right: usize, edges: &[(usize, usize)]) -> BipartiteMultigraph {
        let mut g = BipartiteMultigraph::with_sizes(left, right);
        for &(v, w) in edges {
            g.add_edge(v, w);
        }
        g
    }

    #[test]
    fn single_colour_takes_every_edge() {
        let g = graph(2, 2, &[(0, 0), (0, 1), (1, 1), (1, 1)]);
        let c = equitable_edge_coloring(&g, 1).unwrap();
        assert!(c.colors().iter().all(|&x| x == 1));
        assert_eq!(c.left_counts(&g, 1), vec![2]);
    }

    #[test]
    fn parallel_edges_split_evenly() {
        let g = graph(1, 1, &[(0, 0); 4]);
        let c = equitable_edge_coloring(&g, 2).unwrap();
        assert_eq!(c.left_counts(&g, 0), vec![2, 2]);
        assert_eq!(c.right_counts(&g, 0), vec![2, 2]);
    }

    #[test]
    fn zero_colours_is_an_error() {
        assert_eq!(equitable_edge_coloring(&graph(1, 1, &[(0, 0)]), 0), Err(BipartiteError::ZeroColors));
    }

    #[test]
    fn star_with_more_colours_than_edges() {
        let g = graph(1, 3, &[(0, 0), (0, 1), (0, 2)]);
        let c = equitable_edge_coloring(&g, 5).unwrap();
        assert!(c.is_equitable(&g));
    }

    #[test]
    fn complete_three_by_three_matches_fully() {
        let edges: Vec<_> = (0..3).flat_map(|v| (0..3).map(move |w| (v, w))).collect();
        let g = graph(3, 3, &edges);
        let m = max_matching(&g);
        assert_eq!(m.len(), 3);
        assert!(m.is_valid(&g));
    }

    #[test]
    fn bottleneck_graph_has_matching_of_two() {
        let g = graph(3, 3, &[(0, 0), (1, 0), (2, 0), (2, 1), (2, 2)]);
        assert_eq!(max_matching(&g).len(), 2);
        let v = saturating_matching(&g).unwrap_err();
        assert!(v.verify(&g));
        assert_eq!(v.left_subset, vec![0, 1]);
        assert_eq!(v.neighborhood, vec![0]);
    }

    #[test]
    fn edgeless_graph() {
        assert!(max_matching(&graph(3, 2, &[])).is_empty());
        let v = saturating_matching(&graph(1, 2, &[])).unwrap_err();
        assert_eq!(v.deficiency(), 1);
    }

    #[test]
    fn saturating_examples() {
        // v11 - w4, v21 - w2
        let g = graph(2, 4, &[(0, 3), (1, 1)]);
        let m = saturating_matching(&g).unwrap();
        assert_eq!(m.pairs(), &[(0, 3), (1, 1)]);
        let g = graph(2, 3, &[(0, 0), (1, 0)]);
        let v = saturating_matching(&g).unwrap_err();
        assert_eq!((v.left_subset.clone(), v.neighborhood.clone()), (vec![0, 1], vec![0]));
        assert!(saturating_matching(&graph(0, 3, &[])).unwrap().is_empty());
    }

    #[test]
    fn covering_respects_required_right_vertices() {
        // Left 0 may take w0 or w1; w1 is required.
        let g = graph(1, 2, &[(0, 0), (0, 1)]);
        let plain = saturating_matching(&g).unwrap();
        assert_eq!(plain.pairs(), &[(0, 0)]);
        let m = saturating_matching_covering(&g, &[1]).unwrap();
        assert_eq!(m.pairs(), &[(0, 1)]);
        // Two required symbols but only one left vertex.
        match saturating_matching_covering(&g, &[0, 1]) {
            Err(CoverFailure::Right(v)) => {
                assert!(v.verify(&g.transpose()));
            }
            other => panic!("unexpected {other:?}"),
        }
        // Left side cannot be covered.
        let g = graph(3, 2, &[(0, 0), (0, 1), (1, 0), (1, 1), (2, 0), (2, 1)]);
        match saturating_matching_covering(&g, &[1]) {
            Err(CoverFailure::Left(v)) => assert!(v.verify(&g)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
