//! Known incompletable constructions, a brute-force completion oracle and
//! seeded instance generators.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grid::{validate_partial, GridError, PartialGrid, SudokuGeometry};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FixtureError {
    #[error("parameter out of range: {0}")]
    Range(String),
    #[error(transparent)]
    Grid(#[from] GridError),
}

fn range_err<T>(msg: impl Into<String>) -> Result<T, FixtureError> {
    Err(FixtureError::Range(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Found,
    Incompletable,
    GaveUp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub outcome: Outcome,
    pub square: Option<PartialGrid>,
    pub nodes_expanded: u64,
}

/// Order among equally constrained cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    RowMajor,
    ReverseRowMajor,
}

pub const DEFAULT_NODE_LIMIT: u64 = 20_000_000;

/// Depth-first search over a set of target cells with row, column and
/// region masks. The most constrained target is filled next; a target with
/// no candidate prunes the branch.
struct Search {
    n: usize,
    cells: Vec<usize>,
    region: Vec<Option<usize>>,
    rows: Vec<u64>,
    cols: Vec<u64>,
    regions: Vec<u64>,
    targets: Vec<usize>,
    nodes: u64,
    limit: u64,
    rng: Option<ChaCha8Rng>,
}

impl Search {
    fn new(grid: &PartialGrid, targets: Vec<usize>, limit: u64, tie: TieBreak, rng: Option<ChaCha8Rng>) -> Self {
        let n = grid.n();
        let square = grid.embed();
        let mut s = Self {
            n,
            cells: vec![0; n * n],
            region: (0..n * n).map(|i| square.region_of(square.flavor(), i / n, i % n)).collect(),
            rows: vec![0; n],
            cols: vec![0; n],
            regions: vec![0; n],
            targets,
            nodes: 0,
            limit,
            rng,
        };
        if tie == TieBreak::ReverseRowMajor {
            s.targets.reverse();
        }
        for i in 0..n * n {
            if let Some(v) = square.get(i / n, i % n) {
                s.place(i, v);
            }
        }
        s
    }

    fn candidates(&self, i: usize) -> u64 {
        let full = if self.n == 64 { u64::MAX } else { (1u64 << self.n) - 1 };
        let reg = self.region[i].map_or(0, |g| self.regions[g]);
        full & !self.rows[i / self.n] & !self.cols[i % self.n] & !reg
    }

    fn place(&mut self, i: usize, v: usize) {
        let b = 1u64 << (v - 1);
        self.cells[i] = v;
        self.rows[i / self.n] |= b;
        self.cols[i % self.n] |= b;
        if let Some(g) = self.region[i] {
            self.regions[g] |= b;
        }
    }

    fn clear(&mut self, i: usize) {
        let b = !(1u64 << (self.cells[i] - 1));
        self.rows[i / self.n] &= b;
        self.cols[i % self.n] &= b;
        if let Some(g) = self.region[i] {
            self.regions[g] &= b;
        }
        self.cells[i] = 0;
    }

    /// `Some(true)` when every target is filled, `Some(false)` when the
    /// subtree is exhausted, `None` past the node limit.
    fn run(&mut self) -> Option<bool> {
        self.nodes += 1;
        if self.nodes > self.limit {
            return None;
        }
        let mut best: Option<(usize, u64)> = None;
        for &i in &self.targets {
            if self.cells[i] != 0 {
                continue;
            }
            let c = self.candidates(i);
            if c == 0 {
                return Some(false);
            }
            if best.is_none_or(|(_, b)| c.count_ones() < b.count_ones()) {
                best = Some((i, c));
            }
        }
        let Some((i, mask)) = best else {
            return Some(true);
        };
        let mut values: Vec<usize> = (1..=self.n).filter(|&k| mask >> (k - 1) & 1 == 1).collect();
        if let Some(rng) = self.rng.as_mut() {
            values.shuffle(rng);
        }
        for v in values {
            self.place(i, v);
            match self.run() {
                Some(false) => self.clear(i),
                done => return done,
            }
        }
        Some(false)
    }

    fn grid(&self, template: &PartialGrid) -> PartialGrid {
        let mut out = template.embed();
        for i in 0..self.n * self.n {
            out.set(i / self.n, i % self.n, (self.cells[i] != 0).then_some(self.cells[i]));
        }
        out
    }
}

/// Exhaustive backtracking completion of the `n x n` square containing
/// `grid`, under the grid's flavor. Deterministic: equal inputs give equal
/// outcomes and node counts.
pub fn brute_force_complete(grid: &PartialGrid, node_limit: u64) -> OracleResult {
    brute_force_complete_with(grid, node_limit, TieBreak::RowMajor)
}

pub fn brute_force_complete_with(grid: &PartialGrid, node_limit: u64, tie: TieBreak) -> OracleResult {
    if !validate_partial(grid).ok() {
        return OracleResult {
            outcome: Outcome::Incompletable,
            square: None,
            nodes_expanded: 0,
        };
    }
    let n = grid.n();
    let mut search = Search::new(grid, (0..n * n).collect(), node_limit, tie, None);
    let result = search.run();
    let (outcome, square) = match result {
        Some(true) => (Outcome::Found, Some(search.grid(grid))),
        Some(false) => (Outcome::Incompletable, None),
        None => (Outcome::GaveUp, None),
    };
    OracleResult {
        outcome,
        square,
        nodes_expanded: search.nodes,
    }
}

/// Symbols `1..=q` along the first row of the first big cell and symbol
/// `q + 1` in row `b` of big cell `(1, b + 1)` for `b = 1..p - 1`: symbol
/// `q + 1` then has no room left in the first big cell.
pub fn gen_evans_small(p: usize, q: usize) -> Result<PartialGrid, FixtureError> {
    if p < 2 || q < 2 {
        return range_err(format!("need p, q >= 2, got p={p} q={q}"));
    }
    let mut g = PartialGrid::new(SudokuGeometry::new(p, q)?, p * q, p * q)?;
    for c in 0..q {
        g.set(0, c, Some(c + 1));
    }
    for b in 1..p {
        g.set(b, b * q, Some(q + 1));
    }
    Ok(g)
}

/// The `k x k` matrix with rows `R_1..R_k` over symbols `1..=k^2`, and its
/// row rotations `M_i = (R_i, R_{i+1}, ..., R_{i-1})`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RotatedBlockMatrix {
    k: usize,
}

impl RotatedBlockMatrix {
    pub fn new(k: usize) -> Self {
        Self { k }
    }

    /// `M_i` for `i` in `1..=k`.
    pub fn rotation(&self, i: usize) -> Vec<Vec<usize>> {
        let k = self.k;
        (0..k)
            .map(|a| {
                let row = (i - 1 + a) % k;
                (0..k).map(|b| row * k + b + 1).collect()
            })
            .collect()
    }

    pub fn transposed_rotation(&self, i: usize) -> Vec<Vec<usize>> {
        let m = self.rotation(i);
        (0..self.k).map(|a| (0..self.k).map(|b| m[b][a]).collect()).collect()
    }
}

/// Order-`k^2` Sudoku with `M_1..M_{i-1}` in the first big cells of big
/// row 1 and the transposes of `M_i..M_k` stacked in big column `i` from
/// big row 2 down. Row 1 of big column `i` then admits no symbol.
pub fn gen_evans_big(k: usize, i: usize) -> Result<PartialGrid, FixtureError> {
    if k < 2 || i < 2 || i > k {
        return range_err(format!("need k >= 2 and 2 <= i <= k, got k={k} i={i}"));
    }
    let n = k * k;
    let mut g = PartialGrid::new(SudokuGeometry::new(k, k)?, n, n)?;
    let m = RotatedBlockMatrix::new(k);
    let mut put = |band: usize, stack: usize, block: Vec<Vec<usize>>| {
        for (a, row) in block.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                g.set(band * k + a, stack * k + b, Some(v));
            }
        }
    };
    for c in 0..i - 1 {
        put(0, c, m.rotation(c + 1));
    }
    for t in 1..=k - i + 1 {
        put(t, i - 1, m.transposed_rotation(i + t - 1));
    }
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fig6Variant {
    Column,
    Diagonal,
}

impl std::str::FromStr for Fig6Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "column" => Ok(Fig6Variant::Column),
            "diagonal" => Ok(Fig6Variant::Diagonal),
            other => Err(format!("unknown variant `{other}`")),
        }
    }
}

/// Two incompletable partial latin squares of order `n` with `n` filled
/// cells. Column: `1..=x` along row 1 and `x+1..=n` down column `x + 1`
/// from row 2, so cell `(1, x + 1)` has no candidate. Diagonal: `1..x`
/// along row 1 and `x` on the diagonal from `(2, x)` to `(n - x + 2, n)`,
/// so `x` has no place in row 1.
pub fn gen_fig6(n: usize, x: usize, variant: Fig6Variant) -> Result<PartialGrid, FixtureError> {
    let ok = match variant {
        Fig6Variant::Column => x >= 1 && x < n,
        Fig6Variant::Diagonal => x >= 2 && x <= n,
    };
    if !ok {
        return range_err(format!("x={x} out of range for n={n} ({variant:?})"));
    }
    let mut g = PartialGrid::latin(n, n, n)?;
    match variant {
        Fig6Variant::Column => {
            for c in 0..x {
                g.set(0, c, Some(c + 1));
            }
            for (t, v) in (x + 1..=n).enumerate() {
                g.set(t + 1, x, Some(v));
            }
        }
        Fig6Variant::Diagonal => {
            for c in 0..x - 1 {
                g.set(0, c, Some(c + 1));
            }
            for t in 0..=n - x {
                g.set(1 + t, x - 1 + t, Some(x));
            }
        }
    }
    Ok(g)
}

fn geometry_and_bounds(p: usize, q: usize, r: usize, s: usize) -> Result<SudokuGeometry, FixtureError> {
    let geom = SudokuGeometry::new(p, q)?;
    if r > geom.n() || s > geom.n() {
        return range_err(format!("{r}x{s} does not fit order {}", geom.n()));
    }
    Ok(geom)
}

/// Fills `targets` of `grid` with a seeded randomised search, retrying
/// with fresh randomness if one attempt exceeds its node budget.
fn random_fill(grid: &PartialGrid, targets: Vec<usize>, seed: u64) -> Option<PartialGrid> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..64 {
        let attempt = ChaCha8Rng::from_rng(&mut rng).expect("seeded generator");
        let mut search = Search::new(grid, targets.clone(), 200_000, TieBreak::RowMajor, Some(attempt));
        match search.run() {
            Some(true) => return Some(search.grid(grid)),
            Some(false) => return None,
            None => {}
        }
    }
    None
}

/// The top left `r x s` corner of a random full `(p, q)`-Sudoku square.
/// Always completable; deterministic per seed.
pub fn gen_random_rectangle(p: usize, q: usize, r: usize, s: usize, seed: u64) -> Result<PartialGrid, FixtureError> {
    let geom = geometry_and_bounds(p, q, r, s)?;
    let n = geom.n();
    let empty = PartialGrid::new(geom, n, n)?;
    let square = random_fill(&empty, (0..n * n).collect(), seed).expect("an empty square always fills");
    Ok(square.truncate(r, s))
}

/// A random filled valid `r x s` rectangle, built by filling only the
/// rectangle. Unlike [`gen_random_rectangle`] the result need not extend
/// to a full square.
pub fn sample_rectangle(p: usize, q: usize, r: usize, s: usize, seed: u64) -> Result<PartialGrid, FixtureError> {
    let geom = geometry_and_bounds(p, q, r, s)?;
    let n = geom.n();
    let empty = PartialGrid::new(geom, n, n)?;
    let targets = (0..r).flat_map(|i| (0..s).map(move |j| i * n + j)).collect();
    let filled = random_fill(&empty, targets, seed).expect("a rectangle alone always fills");
    Ok(filled.truncate(r, s))
}

/// Every filled valid `r x s` rectangle of the geometry, in lexicographic
/// row-major order.
pub fn enumerate_rectangles(p: usize, q: usize, r: usize, s: usize) -> Result<Vec<PartialGrid>, FixtureError> {
    let geom = geometry_and_bounds(p, q, r, s)?;
    let base = PartialGrid::new(geom, r, s)?;
    let region: Vec<Option<usize>> = (0..r * s).map(|i| base.region_of(base.flavor(), i / s.max(1), i % s.max(1))).collect();
    let n = geom.n();
    let mut rows = vec![0u64; r];
    let mut cols = vec![0u64; s];
    let mut regions = vec![0u64; n];
    let mut cells = vec![0usize; r * s];
    let mut out = Vec::new();

    #[allow(clippy::too_many_arguments)]
    fn go(
        i: usize,
        s: usize,
        n: usize,
        region: &[Option<usize>],
        rows: &mut [u64],
        cols: &mut [u64],
        regions: &mut [u64],
        cells: &mut [usize],
        base: &PartialGrid,
        out: &mut Vec<PartialGrid>,
    ) {
        if i == cells.len() {
            let mut g = base.clone();
            for (j, &v) in cells.iter().enumerate() {
                g.set(j / s, j % s, Some(v));
            }
            out.push(g);
            return;
        }
        let (r, c) = (i / s, i % s);
        let used = rows[r] | cols[c] | region[i].map_or(0, |g| regions[g]);
        for v in 1..=n {
            let b = 1u64 << (v - 1);
            if used & b != 0 {
                continue;
            }
            rows[r] |= b;
            cols[c] |= b;
            if let Some(g) = region[i] {
                regions[g] |= b;
            }
            cells[i] = v;
            go(i + 1, s, n, region, rows, cols, regions, cells, base, out);
            rows[r] &= !b;
            cols[c] &= !b;
            if let Some(g) = region[i] {
                regions[g] &= !b;
            }
        }
    }
    go(0, s, n, &region, &mut rows, &mut cols, &mut regions, &mut cells, &base, &mut out);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn incompletable(g: &PartialGrid) -> bool {
        brute_force_complete(g, DEFAULT_NODE_LIMIT).outcome == Outcome::Incompletable
    }

    #[test]
    fn full_square_is_its_own_completion() {
        let rows = vec![vec![1, 2, 3, 4], vec![3, 4, 1, 2], vec![2, 1, 4, 3], vec![4, 3, 2, 1]];
        let g = PartialGrid::from_rows(SudokuGeometry::new(2, 2).unwrap(), &rows).unwrap();
        let res = brute_force_complete(&g, 10);
        assert_eq!(res.outcome, Outcome::Found);
        assert_eq!(res.square.unwrap(), g);
    }

    #[test]
    fn empty_square_completes() {
        let g = PartialGrid::new(SudokuGeometry::new(2, 2).unwrap(), 4, 4).unwrap();
        let res = brute_force_complete(&g, DEFAULT_NODE_LIMIT);
        let square = res.square.unwrap();
        assert!(square.is_full() && validate_partial(&square).ok());
    }

    #[test]
    fn node_limit_gives_up() {
        let g = PartialGrid::new(SudokuGeometry::new(3, 3).unwrap(), 9, 9).unwrap();
        let res = brute_force_complete(&g, 5);
        assert_eq!((res.outcome, res.nodes_expanded), (Outcome::GaveUp, 6));
    }

    #[test]
    fn evans_small_layout() {
        let g = gen_evans_small(2, 2).unwrap();
        assert_eq!(g.filled_count(), 3);
        assert_eq!((g.get(0, 0), g.get(0, 1), g.get(1, 2)), (Some(1), Some(2), Some(3)));
        let big = gen_evans_small(4, 4).unwrap();
        assert_eq!(big.filled_count(), 7);
        assert_eq!((big.get(1, 4), big.get(2, 8), big.get(3, 12)), (Some(5), Some(5), Some(5)));
        assert!(incompletable(&g));
        assert!(gen_evans_small(1, 3).is_err());
    }

    #[test]
    fn evans_big_layout() {
        let g = gen_evans_big(2, 2).unwrap();
        assert_eq!(
            g.to_rows(),
            vec![vec![1, 2, 0, 0], vec![3, 4, 0, 0], vec![0, 0, 3, 1], vec![0, 0, 4, 2]]
        );
        assert!(validate_partial(&g).ok());
        assert!(incompletable(&g));
        assert_eq!(gen_evans_big(3, 2).unwrap().filled_count(), 27);
        assert!(gen_evans_big(3, 4).is_err());
    }

    #[test]
    fn small_latin_layouts() {
        let c = gen_fig6(3, 2, Fig6Variant::Column).unwrap();
        assert_eq!(c.to_rows(), vec![vec![1, 2, 0], vec![0, 0, 3], vec![0, 0, 0]]);
        let d = gen_fig6(4, 2, Fig6Variant::Diagonal).unwrap();
        assert_eq!(
            d.to_rows(),
            vec![vec![1, 0, 0, 0], vec![0, 2, 0, 0], vec![0, 0, 2, 0], vec![0, 0, 0, 2]]
        );
        assert!(incompletable(&c) && incompletable(&d));
        assert!(gen_fig6(3, 3, Fig6Variant::Column).is_err());
        assert!(gen_fig6(3, 1, Fig6Variant::Diagonal).is_err());
    }

    #[test]
    fn random_rectangles_are_deterministic_and_valid() {
        let a = gen_random_rectangle(2, 3, 4, 5, 9).unwrap();
        assert_eq!(a, gen_random_rectangle(2, 3, 4, 5, 9).unwrap());
        assert!(a.is_full() && validate_partial(&a).ok());
        assert_eq!((a.rows(), a.cols()), (4, 5));
        let b = sample_rectangle(3, 3, 5, 7, 3).unwrap();
        assert!(b.is_full() && validate_partial(&b).ok());
        assert!(gen_random_rectangle(2, 2, 5, 1, 0).is_err());
    }

    #[test]
    fn enumeration_counts() {
        // 288 Sudoku squares of order 4 and 12 latin squares of order 3.
        assert_eq!(enumerate_rectangles(2, 2, 4, 4).unwrap().len(), 288);
        assert_eq!(enumerate_rectangles(1, 3, 3, 3).unwrap().len(), 12);
        assert_eq!(enumerate_rectangles(2, 2, 0, 3).unwrap().len(), 1);
    }

    #[test]
    fn reverse_tie_break_agrees() {
        for g in [gen_evans_small(2, 3).unwrap(), gen_fig6(5, 3, Fig6Variant::Diagonal).unwrap()] {
            let a = brute_force_complete(&g, DEFAULT_NODE_LIMIT);
            let b = brute_force_complete_with(&g, DEFAULT_NODE_LIMIT, TieBreak::ReverseRowMajor);
            assert_eq!(a.outcome, b.outcome);
        }
    }
}
