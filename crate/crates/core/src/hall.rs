//! List assignments, independence numbers and Hall's Condition for
//! partial latin, Sudoku and Gerechte squares and for general graphs; the
//! symbol-count criterion for latin rectangles.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::bipartite::{max_matching, BipartiteMultigraph};
use crate::grid::{Flavor, PartialGrid};

/// Largest number of empty cells (or graph vertices) the exhaustive
/// subset check will accept, whatever gate is requested.
pub const MAX_GATE: usize = 26;

/// Default gate on empty cells for [`hall_condition`].
pub const DEFAULT_GATE: usize = 18;

/// Largest candidate set the exact independence search accepts.
pub const ALPHA_GATE: usize = 160;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HallError {
    #[error("gerechte flavor needs a partition")]
    MissingPartition,
    #[error("cell ({0}, {1}) is outside the square")]
    CellOutOfRange(usize, usize),
    #[error("{cells} candidate cells exceed the exact-search gate of {gate}")]
    GateExceeded { cells: usize, gate: usize },
}

/// Candidate symbols of every cell of the full `n x n` square.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ListAssignment {
    n: usize,
    lists: Vec<u64>,
}

impl ListAssignment {
    pub fn order(&self) -> usize {
        self.n
    }

    /// Sorted candidate symbols of a cell.
    pub fn get(&self, row: usize, col: usize) -> Vec<usize> {
        let mask = self.mask(row, col);
        (1..=self.n).filter(|&k| mask >> (k - 1) & 1 == 1).collect()
    }

    pub fn contains(&self, row: usize, col: usize, symbol: usize) -> bool {
        symbol >= 1 && symbol <= self.n && self.mask(row, col) >> (symbol - 1) & 1 == 1
    }

    fn mask(&self, row: usize, col: usize) -> u64 {
        self.lists[row * self.n + col]
    }
}

/// Rows, columns and regions of the square, used for independence.
struct Square {
    n: usize,
    grid: PartialGrid,
    flavor: Flavor,
}

impl Square {
    fn new(grid: &PartialGrid, flavor: Flavor) -> Result<Self, HallError> {
        let grid = grid.embed();
        if flavor == Flavor::Gerechte && grid.partition().is_none() {
            return Err(HallError::MissingPartition);
        }
        Ok(Self {
            n: grid.n(),
            grid,
            flavor,
        })
    }

    fn region(&self, (r, c): (usize, usize)) -> Option<usize> {
        self.grid.region_of(self.flavor, r, c)
    }

    fn independent(&self, a: (usize, usize), b: (usize, usize)) -> bool {
        a.0 != b.0 && a.1 != b.1 && (self.region(a).is_none() || self.region(a) != self.region(b))
    }

    fn lists(&self) -> ListAssignment {
        let n = self.n;
        let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
        let mut rows = vec![0u64; n];
        let mut cols = vec![0u64; n];
        let mut regions = vec![0u64; n];
        for r in 0..n {
            for c in 0..n {
                if let Some(v) = self.grid.get(r, c) {
                    rows[r] |= 1 << (v - 1);
                    cols[c] |= 1 << (v - 1);
                    if let Some(g) = self.region((r, c)) {
                        regions[g] |= 1 << (v - 1);
                    }
                }
            }
        }
        let lists = (0..n * n)
            .map(|i| {
                let (r, c) = (i / n, i % n);
                match self.grid.get(r, c) {
                    Some(v) => 1 << (v - 1),
                    None => full & !rows[r] & !cols[c] & !self.region((r, c)).map_or(0, |g| regions[g]),
                }
            })
            .collect();
        ListAssignment { n, lists }
    }

    fn check_cells(&self, cells: &[(usize, usize)]) -> Result<Vec<(usize, usize)>, HallError> {
        if let Some(&(r, c)) = cells.iter().find(|&&(r, c)| r >= self.n || c >= self.n) {
            return Err(HallError::CellOutOfRange(r, c));
        }
        Ok(cells.iter().copied().collect::<BTreeSet<_>>().into_iter().collect())
    }
}

/// Candidate lists under `flavor`: a filled cell lists its own symbol, an
/// empty one every symbol absent from its row, column and (for Sudoku or
/// Gerechte) big cell or part. Grids smaller than `n x n` are embedded in
/// the top left corner of an empty square first.
pub fn list_assignment(grid: &PartialGrid, flavor: Flavor) -> Result<ListAssignment, HallError> {
    Ok(Square::new(grid, flavor)?.lists())
}

/// Largest set of pairwise independent cells of `cells` listing `symbol`.
pub fn alpha_cells(
    grid: &PartialGrid,
    symbol: usize,
    cells: &[(usize, usize)],
    flavor: Flavor,
) -> Result<usize, HallError> {
    let sq = Square::new(grid, flavor)?;
    let lists = sq.lists();
    let cells = sq.check_cells(cells)?;
    alpha(&sq, &lists, symbol, &cells)
}

fn alpha(sq: &Square, lists: &ListAssignment, symbol: usize, cells: &[(usize, usize)]) -> Result<usize, HallError> {
    let candidates: Vec<(usize, usize)> =
        cells.iter().copied().filter(|&(r, c)| lists.contains(r, c, symbol)).collect();
    if sq.flavor == Flavor::Latin {
        return Ok(alpha_by_matching(sq.n, &candidates));
    }
    if candidates.len() > ALPHA_GATE {
        return Err(HallError::GateExceeded {
            cells: candidates.len(),
            gate: ALPHA_GATE,
        });
    }
    Ok(alpha_by_search(sq, &candidates))
}

/// Without regions, independent cells are a matching between rows and
/// columns.
fn alpha_by_matching(n: usize, candidates: &[(usize, usize)]) -> usize {
    let mut g = BipartiteMultigraph::with_sizes(n, n);
    for &(r, c) in candidates {
        g.add_edge(r, c);
    }
    max_matching(&g).len()
}

/// Exact maximum independent set by branch and bound. The bound is the
/// fewest distinct rows, columns or regions among the remaining cells.
fn alpha_by_search(sq: &Square, candidates: &[(usize, usize)]) -> usize {
    fn bound(sq: &Square, rest: &[(usize, usize)]) -> usize {
        let rows: BTreeSet<usize> = rest.iter().map(|c| c.0).collect();
        let cols: BTreeSet<usize> = rest.iter().map(|c| c.1).collect();
        let mut b = rows.len().min(cols.len());
        if sq.flavor != Flavor::Latin {
            let regions: BTreeSet<Option<usize>> = rest.iter().map(|&c| sq.region(c)).collect();
            b = b.min(regions.len());
        }
        b
    }
    fn go(sq: &Square, rest: &[(usize, usize)], taken: usize, best: &mut usize) {
        if taken > *best {
            *best = taken;
        }
        if rest.is_empty() || taken + bound(sq, rest) <= *best {
            return;
        }
        let v = rest[0];
        let with: Vec<(usize, usize)> = rest[1..].iter().copied().filter(|&u| sq.independent(u, v)).collect();
        go(sq, &with, taken + 1, best);
        go(sq, &rest[1..], taken, best);
    }
    let mut best = 0;
    go(sq, candidates, 0, &mut best);
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HallInequality {
    pub lhs: usize,
    pub size: usize,
}

impl HallInequality {
    pub fn ok(&self) -> bool {
        self.lhs >= self.size
    }
}

/// Sum over all symbols of [`alpha_cells`] against the size of the set.
pub fn hall_inequality(
    grid: &PartialGrid,
    cells: &[(usize, usize)],
    flavor: Flavor,
) -> Result<HallInequality, HallError> {
    let sq = Square::new(grid, flavor)?;
    let lists = sq.lists();
    let cells = sq.check_cells(cells)?;
    let mut lhs = 0;
    for k in 1..=sq.n {
        lhs += alpha(&sq, &lists, k, &cells)?;
    }
    Ok(HallInequality { lhs, size: cells.len() })
}

/// Hall's Inequality for the whole square.
pub fn whole_square_inequality(grid: &PartialGrid, flavor: Flavor) -> Result<HallInequality, HallError> {
    let n = grid.n();
    let all: Vec<(usize, usize)> = (0..n).flat_map(|r| (0..n).map(move |c| (r, c))).collect();
    hall_inequality(grid, &all, flavor)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HallWitness {
    /// Cells (or graph vertices as `(v, 0)`) in increasing order.
    pub cells: Vec<(usize, usize)>,
    pub lhs: usize,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HallReport {
    pub holds: bool,
    pub witness: Option<HallWitness>,
    pub subsets_checked: u64,
    /// The instance exceeded the gate and nothing was checked; `holds` is
    /// then `false` but carries no information.
    pub gave_up: bool,
}

impl HallReport {
    fn gave_up() -> Self {
        Self {
            holds: false,
            witness: None,
            subsets_checked: 0,
            gave_up: true,
        }
    }
}

/// Result of the exhaustive subset check on `k` items.
struct SubsetCheck {
    failing: Option<(u32, usize)>,
    checked: u64,
}

/// Checks `Σ_σ α(σ, Q) ≥ |Q|` for every subset `Q` of `k` items with
/// pairwise conflict masks `conflicts` and per-symbol candidate masks.
///
/// `mis[m]`, the independence number of the items in mask `m`, follows from
/// `mis[m] = max(mis[m - v], 1 + mis[m - v - conflicts(v)])` for the lowest
/// item `v` of `m`. The reported failing subset is the smallest one, ties
/// broken by the lexicographically first sorted item list.
fn check_subsets(k: usize, conflicts: &[u32], symbol_masks: &[u32]) -> SubsetCheck {
    let size = 1usize << k;
    let mut mis = vec![0u8; size];
    for m in 1..size {
        let v = m.trailing_zeros() as usize;
        let without = m & !(1 << v);
        let with = without & !(conflicts[v] as usize);
        mis[m] = mis[without].max(1 + mis[with]);
    }
    let mut failing: Option<(u32, usize)> = None;
    for q in 1..size {
        let need = q.count_ones() as usize;
        if let Some((best, _)) = failing {
            if need > best.count_ones() as usize {
                continue;
            }
        }
        let mut lhs = 0;
        for &m in symbol_masks {
            lhs += mis[q & m as usize] as usize;
            if lhs >= need {
                break;
            }
        }
        if lhs < need {
            let q32 = q as u32;
            let better = match failing {
                None => true,
                Some((best, _)) => {
                    let bc = best.count_ones();
                    let qc = q32.count_ones();
                    // Equal sizes: the first differing item decides.
                    qc < bc || (qc == bc && q32 >> (q32 ^ best).trailing_zeros() & 1 == 1)
                }
            };
            if better {
                failing = Some((q32, lhs));
            }
        }
    }
    SubsetCheck {
        failing,
        checked: size as u64,
    }
}

/// Hall's Condition for the partial square under `flavor`, checked over
/// every subset of its empty cells (a subset with filled cells satisfies
/// the inequality exactly when its empty part does). More than
/// `min(gate, MAX_GATE)` empty cells gives up.
pub fn hall_condition(grid: &PartialGrid, flavor: Flavor, gate: usize) -> Result<HallReport, HallError> {
    let sq = Square::new(grid, flavor)?;
    let lists = sq.lists();
    let empty = sq.grid.empty_cells();
    let k = empty.len();
    if k > gate.min(MAX_GATE) {
        return Ok(HallReport::gave_up());
    }
    let conflicts: Vec<u32> = empty
        .iter()
        .map(|&a| {
            empty
                .iter()
                .enumerate()
                .filter(|&(_, &b)| a != b && !sq.independent(a, b))
                .fold(0, |m, (j, _)| m | 1 << j)
        })
        .collect();
    let symbol_masks: Vec<u32> = (1..=sq.n)
        .map(|s| {
            empty
                .iter()
                .enumerate()
                .filter(|&(_, &(r, c))| lists.contains(r, c, s))
                .fold(0, |m, (j, _)| m | 1 << j)
        })
        .collect();
    let result = check_subsets(k, &conflicts, &symbol_masks);
    Ok(report_from(result, |j| empty[j]))
}

fn report_from(result: SubsetCheck, item: impl Fn(usize) -> (usize, usize)) -> HallReport {
    let witness = result.failing.map(|(mask, lhs)| HallWitness {
        cells: (0..32).filter(|&j| mask >> j & 1 == 1).map(&item).collect(),
        lhs,
        size: mask.count_ones() as usize,
    });
    HallReport {
        holds: witness.is_none(),
        witness,
        subsets_checked: result.checked,
        gave_up: false,
    }
}

/// Hall's Condition for a list assignment on a simple graph: every
/// induced subgraph `H` must satisfy `Σ_σ α(L, σ, H) ≥ |V(H)|`. Witness
/// vertices are reported as `(v, 0)`.
pub fn hall_condition_graph(
    vertices: usize,
    edges: &[(usize, usize)],
    lists: &[Vec<usize>],
    gate: usize,
) -> HallReport {
    assert_eq!(lists.len(), vertices, "one list per vertex");
    if vertices > gate.min(MAX_GATE) {
        return HallReport::gave_up();
    }
    let mut conflicts = vec![0u32; vertices];
    for &(a, b) in edges {
        assert!(a < vertices && b < vertices, "edge ({a}, {b}) out of range");
        if a != b {
            conflicts[a] |= 1 << b;
            conflicts[b] |= 1 << a;
        }
    }
    let colours: BTreeSet<usize> = lists.iter().flatten().copied().collect();
    let symbol_masks: Vec<u32> = colours
        .iter()
        .map(|c| (0..vertices).filter(|&v| lists[v].contains(c)).fold(0, |m, v| m | 1 << v))
        .collect();
    report_from(check_subsets(vertices, &conflicts, &symbol_masks), |v| (v, 0))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RyserCounts {
    /// Occurrences of symbols `1..=n`.
    pub counts: Vec<usize>,
    /// `r + s - n`, possibly negative.
    pub bound: isize,
}

impl RyserCounts {
    pub fn ok(&self) -> bool {
        self.failing().is_empty()
    }

    /// Symbols occurring fewer than `bound` times.
    pub fn failing(&self) -> Vec<usize> {
        (1..=self.counts.len())
            .filter(|&k| (self.counts[k - 1] as isize) < self.bound)
            .collect()
    }
}

/// Symbol counts of an `r x s` latin rectangle against `r + s - n`.
pub fn ryser_counts(grid: &PartialGrid, n: usize) -> RyserCounts {
    let mut counts = vec![0; n];
    for row in grid.to_rows() {
        for v in row {
            if (1..=n).contains(&v) {
                counts[v - 1] += 1;
            }
        }
    }
    RyserCounts {
        counts,
        bound: (grid.rows() + grid.cols()) as isize - n as isize,
    }
}
