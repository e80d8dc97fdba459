//! Completion of a filled `r x s` Sudoku rectangle sitting in the top left
//! corner of an empty `n x n` square.
//!
//! The pipeline fills the *restricted* big cells (those the rectangle only
//! partly covers) with saturating matchings, distributes every remaining
//! symbol of a row or column over the empty big cells with equitable
//! edge-colourings, assembles the result as an outline latin square and
//! expands that outline. Each step that can fail for a genuinely
//! incompletable input returns a checkable [`Obstruction`].

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use thiserror::Error;

use crate::bipartite::{
    equitable_edge_coloring, saturating_matching, saturating_matching_covering, BipartiteMultigraph, CoverFailure,
    HallViolator, Matching,
};
use crate::grid::{validate_partial, Flavor, PartialGrid, ValidationReport, Violation, ViolationKind};
use crate::outline::{expand_outline, validate_outline, Composition, OutlineLatinSquare};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CompletionError {
    #[error("{0}")]
    Precondition(String),
    #[error("medium-cell plan is inconsistent: {0}")]
    InvalidPlan(String),
    #[error("internal invariant broken: {0}")]
    Internal(String),
}

/// Which symbols a replicated row (column) vertex may take.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeRule {
    /// The symbol is missing from the row (column).
    RowOnly,
    /// The symbol is missing from the row (column) and from the filled
    /// part of the restricted big cell. This is what the construction needs.
    BigCellAware,
}

/// Symbol sets over `1..=64` as bit masks, bit `k - 1` for symbol `k`.
type SymbolSet = u64;

fn bit(k: usize) -> SymbolSet {
    1 << (k - 1)
}

fn all_symbols(n: usize) -> SymbolSet {
    if n == 64 {
        u64::MAX
    } else {
        (1 << n) - 1
    }
}

fn symbols_of(set: SymbolSet) -> impl Iterator<Item = usize> {
    (0..64).filter(move |b| set >> b & 1 == 1).map(|b| b + 1)
}

fn block_set(grid: &PartialGrid, rows: Range<usize>, cols: Range<usize>) -> SymbolSet {
    rows.flat_map(|r| cols.clone().map(move |c| (r, c)))
        .map(|(r, c)| grid.raw(r, c))
        .filter(|&v| v != 0)
        .fold(0, |acc, v| acc | bit(v))
}

/// Shape of the rectangle relative to the big-cell grid.
#[derive(Debug, Clone, Copy)]
struct Layout {
    p: usize,
    q: usize,
    n: usize,
    r: usize,
    s: usize,
    r_star: usize,
    s_star: usize,
    /// Rows of the partially covered band.
    dr: usize,
    /// Columns of the partially covered stack.
    ds: usize,
    full_bands: usize,
    full_stacks: usize,
    free_bands: usize,
    free_stacks: usize,
}

impl Layout {
    fn new(grid: &PartialGrid) -> Self {
        let g = grid.geometry();
        let a = g.anchors(grid.rows(), grid.cols());
        let (p, q) = (g.p(), g.q());
        let (dr, ds) = (a.row_excess(), a.col_excess());
        let full_bands = a.r_star / p;
        let full_stacks = a.s_star / q;
        Self {
            p,
            q,
            n: g.n(),
            r: a.r,
            s: a.s,
            r_star: a.r_star,
            s_star: a.s_star,
            dr,
            ds,
            full_bands,
            full_stacks,
            free_bands: q - full_bands - usize::from(dr > 0),
            free_stacks: p - full_stacks - usize::from(ds > 0),
        }
    }

    fn band_rows(&self, band: usize) -> Range<usize> {
        band * self.p..((band + 1) * self.p).min(self.r)
    }

    fn stack_cols(&self, stack: usize) -> Range<usize> {
        stack * self.q..((stack + 1) * self.q).min(self.s)
    }

    fn partial_rows(&self) -> Range<usize> {
        self.r_star..self.r
    }

    fn partial_cols(&self) -> Range<usize> {
        self.s_star..self.s
    }

    /// Bands whose side graph exists.
    fn side_bands(&self) -> Range<usize> {
        if self.ds == 0 {
            0..0
        } else {
            0..self.full_bands + usize::from(self.dr > 0)
        }
    }

    /// Stacks whose bottom graph exists.
    fn bottom_stacks(&self) -> Range<usize> {
        if self.dr == 0 {
            0..0
        } else {
            0..self.full_stacks + usize::from(self.ds > 0)
        }
    }

    fn has_corner(&self) -> bool {
        self.dr > 0 && self.ds > 0
    }
}

/// The rectangle viewed under the flavor its geometry implies, or the
/// report explaining why it is not a filled valid rectangle.
fn normalized(grid: &PartialGrid) -> Result<PartialGrid, ValidationReport> {
    let g = grid.geometry();
    let flavor = if g.p() == 1 || g.q() == 1 {
        Flavor::Latin
    } else {
        Flavor::Sudoku
    };
    let grid = grid.with_flavor(flavor).expect("non-gerechte flavor");
    let report = rectangle_report(&grid);
    if report.ok() {
        Ok(grid)
    } else {
        Err(report)
    }
}

fn rectangle_report(grid: &PartialGrid) -> ValidationReport {
    let mut report = validate_partial(grid);
    let empty = grid.empty_cells();
    if !empty.is_empty() {
        report.violations.push(Violation {
            kind: ViolationKind::Unfilled,
            location: empty,
            symbol: None,
            expected: None,
            found: None,
        });
    }
    report
}

fn line_sets(grid: &PartialGrid) -> (Vec<SymbolSet>, Vec<SymbolSet>) {
    let rows = (0..grid.rows()).map(|r| block_set(grid, r..r + 1, 0..grid.cols())).collect();
    let cols = (0..grid.cols()).map(|c| block_set(grid, 0..grid.rows(), c..c + 1)).collect();
    (rows, cols)
}

/// A bipartite graph between replicated lines and symbols, with the line
/// owning each left vertex.
struct LineGraph {
    graph: BipartiteMultigraph,
    owners: Vec<usize>,
}

fn side_line_graph(grid: &PartialGrid, l: &Layout, band: usize, rule: EdgeRule) -> LineGraph {
    let (row_sets, _) = line_sets(grid);
    let blocked = match rule {
        EdgeRule::RowOnly => 0,
        EdgeRule::BigCellAware => block_set(grid, l.band_rows(band), l.partial_cols()),
    };
    line_graph(l.band_rows(band), l.q - l.ds, "r", l.n, |i| row_sets[i] | blocked)
}

fn bottom_line_graph(grid: &PartialGrid, l: &Layout, stack: usize, rule: EdgeRule) -> LineGraph {
    let (_, col_sets) = line_sets(grid);
    let blocked = match rule {
        EdgeRule::RowOnly => 0,
        EdgeRule::BigCellAware => block_set(grid, l.partial_rows(), l.stack_cols(stack)),
    };
    line_graph(l.stack_cols(stack), l.p - l.dr, "c", l.n, |j| col_sets[j] | blocked)
}

fn line_graph(
    lines: Range<usize>,
    copies: usize,
    tag: &str,
    n: usize,
    excluded: impl Fn(usize) -> SymbolSet,
) -> LineGraph {
    let mut left = Vec::new();
    let mut owners = Vec::new();
    for i in lines.clone() {
        for c in 0..copies {
            left.push(format!("{tag}{}.{}", i + 1, c + 1));
            owners.push(i);
        }
    }
    let mut graph = BipartiteMultigraph::new(left, (1..=n).map(|k| k.to_string()).collect());
    for (v, &i) in owners.iter().enumerate() {
        let allowed = all_symbols(n) & !excluded(i);
        for k in symbols_of(allowed) {
            graph.add_edge(v, k - 1);
        }
    }
    LineGraph { graph, owners }
}

/// Side graph of `band` (0-based): rows of the band replicated
/// `q - (s - s*)` times against the symbols. The band after the last full
/// one is the partial band and exists only when `p` does not divide `r`.
pub fn side_graph(grid: &PartialGrid, band: usize) -> Result<BipartiteMultigraph, CompletionError> {
    side_graph_with(grid, band, EdgeRule::BigCellAware)
}

pub fn side_graph_with(grid: &PartialGrid, band: usize, rule: EdgeRule) -> Result<BipartiteMultigraph, CompletionError> {
    let grid = normalized(grid).map_err(|r| CompletionError::Precondition(format!("invalid rectangle: {r}")))?;
    let l = Layout::new(&grid);
    if l.ds == 0 {
        return Err(CompletionError::Precondition(format!(
            "q = {} divides s = {}, no side graphs",
            l.q, l.s
        )));
    }
    if !l.side_bands().contains(&band) {
        return Err(CompletionError::Precondition(format!(
            "band {} out of range 1..={}",
            band + 1,
            l.side_bands().end
        )));
    }
    Ok(side_line_graph(&grid, &l, band, rule).graph)
}

/// Bottom graph of `stack`: the mirror of [`side_graph`] with columns
/// replicated `p - (r - r*)` times.
pub fn bottom_graph(grid: &PartialGrid, stack: usize) -> Result<BipartiteMultigraph, CompletionError> {
    bottom_graph_with(grid, stack, EdgeRule::BigCellAware)
}

pub fn bottom_graph_with(
    grid: &PartialGrid,
    stack: usize,
    rule: EdgeRule,
) -> Result<BipartiteMultigraph, CompletionError> {
    let grid = normalized(grid).map_err(|r| CompletionError::Precondition(format!("invalid rectangle: {r}")))?;
    let l = Layout::new(&grid);
    if l.dr == 0 {
        return Err(CompletionError::Precondition(format!(
            "p = {} divides r = {}, no bottom graphs",
            l.p, l.r
        )));
    }
    if !l.bottom_stacks().contains(&stack) {
        return Err(CompletionError::Precondition(format!(
            "stack {} out of range 1..={}",
            stack + 1,
            l.bottom_stacks().end
        )));
    }
    Ok(bottom_line_graph(&grid, &l, stack, rule).graph)
}

/// How often a symbol is forced into the corner big cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Demand {
    /// Partial rows that must take the symbol in their medium cell: the
    /// rows missing it outnumber the free big columns.
    row: usize,
    /// Same for the partial columns and the free big rows.
    col: usize,
    /// 1 when the corner big cell can still take the symbol.
    supply: usize,
}

fn demand(grid: &PartialGrid, l: &Layout, k: usize) -> Demand {
    let (row_sets, col_sets) = line_sets(grid);
    let containing = |sets: &[SymbolSet], range: Range<usize>| range.filter(|&i| sets[i] & bit(k) != 0).count();
    let row = l.dr.saturating_sub(l.free_stacks + containing(&row_sets, l.partial_rows()));
    let col = l.ds.saturating_sub(l.free_bands + containing(&col_sets, l.partial_cols()));
    let corner = block_set(grid, l.partial_rows(), l.partial_cols());
    let supply = usize::from(l.has_corner() && corner & bit(k) == 0);
    Demand { row, col, supply }
}

/// The corner big cell's joint graph: copies of the partial rows and then
/// of the partial columns against the symbols. Row copies avoid symbols
/// some partial column is forced to take, and vice versa. The returned
/// symbols are those the corner is forced to take.
fn corner_graph(grid: &PartialGrid, l: &Layout) -> (LineGraph, usize, Vec<usize>) {
    let (row_sets, col_sets) = line_sets(grid);
    let corner = block_set(grid, l.partial_rows(), l.partial_cols());
    let mut forced_rows = 0;
    let mut forced_cols = 0;
    let mut required = Vec::new();
    for k in 1..=l.n {
        let d = demand(grid, l, k);
        if d.row > 0 {
            forced_rows |= bit(k);
        }
        if d.col > 0 {
            forced_cols |= bit(k);
        }
        if d.row + d.col > 0 {
            required.push(k - 1);
        }
    }
    let rows = line_graph(l.partial_rows(), l.q - l.ds, "r", l.n, |i| row_sets[i] | corner | forced_cols);
    let cols = line_graph(l.partial_cols(), l.p - l.dr, "c", l.n, |j| col_sets[j] | corner | forced_rows);
    let split = rows.owners.len();
    let mut left = rows.graph.left_labels().to_vec();
    left.extend_from_slice(cols.graph.left_labels());
    let mut graph = BipartiteMultigraph::new(left, rows.graph.right_labels().to_vec());
    for &(v, w) in rows.graph.edges() {
        graph.add_edge(v, w);
    }
    for &(v, w) in cols.graph.edges() {
        graph.add_edge(split + v, w);
    }
    let mut owners = rows.owners;
    owners.extend(cols.owners);
    (LineGraph { graph, owners }, split, required)
}

/// Symbols planned for the medium cells of the restricted big cells, keyed
/// by absolute (0-based) row and column. The horizontal medium cell of a
/// row holds `q - (s - s*)` symbols; the vertical one of a column holds
/// `p - (r - r*)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MediumCellPlan {
    pub horizontal: BTreeMap<usize, Vec<usize>>,
    pub vertical: BTreeMap<usize, Vec<usize>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    InputInvalid,
    SideMatching,
    BottomMatching,
    CornerConflict,
    OutlineInvalid,
    Ryser,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::InputInvalid => "input-invalid",
            Stage::SideMatching => "side-matching",
            Stage::BottomMatching => "bottom-matching",
            Stage::CornerConflict => "corner-conflict",
            Stage::OutlineInvalid => "outline-invalid",
            Stage::Ryser => "ryser",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which graph a Hall violator refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphSource {
    /// Side graph of a band (0-based).
    Side(usize),
    /// Bottom graph of a stack (0-based).
    Bottom(usize),
    /// Joint corner graph; the violator is a set of row and column copies.
    Corner,
    /// Transposed joint corner graph; the violator is a set of forced
    /// symbols with too few copies able to take them.
    CornerSymbols,
}

impl fmt::Display for GraphSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GraphSource::Side(b) => write!(f, "side graph {}", b + 1),
            GraphSource::Bottom(b) => write!(f, "bottom graph {}", b + 1),
            GraphSource::Corner => f.write_str("corner graph"),
            GraphSource::CornerSymbols => f.write_str("corner graph (forced symbols)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ObstructionDetail {
    Hall {
        source: GraphSource,
        graph: BipartiteMultigraph,
        violator: HallViolator,
    },
    Validation(ValidationReport),
    Ryser {
        symbol: usize,
        count: usize,
        bound: usize,
    },
    /// The partial rows and columns together need `symbol` in the corner
    /// big cell more often than it can appear there.
    SymbolDemand {
        symbol: usize,
        row_demand: usize,
        col_demand: usize,
        supply: usize,
    },
}

/// Why a rectangle cannot be completed (or was rejected).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Obstruction {
    pub stage: Stage,
    pub detail: ObstructionDetail,
}

impl Obstruction {
    fn hall(stage: Stage, source: GraphSource, graph: BipartiteMultigraph, violator: HallViolator) -> Self {
        Self {
            stage,
            detail: ObstructionDetail::Hall {
                source,
                graph,
                violator,
            },
        }
    }

    fn input(report: ValidationReport) -> Self {
        Self {
            stage: Stage::InputInvalid,
            detail: ObstructionDetail::Validation(report),
        }
    }

    /// Re-derives the certificate from `grid` alone: the graph is rebuilt
    /// and the violator's deficiency recomputed, counts are recounted.
    pub fn verify(&self, grid: &PartialGrid) -> bool {
        let normal = normalized(grid);
        match (&self.detail, normal) {
            (ObstructionDetail::Validation(report), Err(actual)) => {
                self.stage == Stage::InputInvalid && *report == actual
            }
            (ObstructionDetail::Validation(report), Ok(_)) => self.stage == Stage::OutlineInvalid && !report.ok(),
            (ObstructionDetail::Ryser { symbol, count, bound }, _) => {
                let latin = grid.with_flavor(Flavor::Latin).expect("latin view");
                let counts = symbol_counts(&latin, grid.n());
                let expected = (grid.rows() + grid.cols()).saturating_sub(grid.n());
                self.stage == Stage::Ryser
                    && counts.get(symbol - 1) == Some(count)
                    && *bound == expected
                    && count < bound
            }
            (_, Err(_)) => false,
            (ObstructionDetail::Hall { source, graph, violator }, Ok(g)) => {
                let l = Layout::new(&g);
                let rebuilt = match source {
                    GraphSource::Side(b) if l.side_bands().contains(b) => {
                        side_line_graph(&g, &l, *b, EdgeRule::BigCellAware).graph
                    }
                    GraphSource::Bottom(b) if l.bottom_stacks().contains(b) => {
                        bottom_line_graph(&g, &l, *b, EdgeRule::BigCellAware).graph
                    }
                    GraphSource::Corner if l.has_corner() => corner_graph(&g, &l).0.graph,
                    GraphSource::CornerSymbols if l.has_corner() => corner_graph(&g, &l).0.graph.transpose(),
                    _ => return false,
                };
                rebuilt == *graph && violator.verify(graph)
            }
            (
                ObstructionDetail::SymbolDemand {
                    symbol,
                    row_demand,
                    col_demand,
                    supply,
                },
                Ok(g),
            ) => {
                let l = Layout::new(&g);
                if *symbol == 0 || *symbol > l.n {
                    return false;
                }
                let d = demand(&g, &l, *symbol);
                (d.row, d.col, d.supply) == (*row_demand, *col_demand, *supply) && d.row + d.col > d.supply
            }
        }
    }
}

impl fmt::Display for Obstruction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: ", self.stage)?;
        match &self.detail {
            ObstructionDetail::Hall { source, graph, violator } => {
                let names = |ids: &[usize], labels: &[String]| {
                    ids.iter().map(|&i| labels[i].as_str()).collect::<Vec<_>>().join(" ")
                };
                write!(
                    f,
                    "{source}: {{{}}} can only use {{{}}}",
                    names(&violator.left_subset, graph.left_labels()),
                    names(&violator.neighborhood, graph.right_labels())
                )
            }
            ObstructionDetail::Validation(report) => write!(f, "{report}"),
            ObstructionDetail::Ryser { symbol, count, bound } => write!(f, "symbol {symbol}: N={count} < {bound}"),
            ObstructionDetail::SymbolDemand {
                symbol,
                row_demand,
                col_demand,
                supply,
            } => write!(
                f,
                "symbol {symbol} is needed {row_demand} time(s) by partial rows and {col_demand} by partial \
                 columns of the corner big cell, which can take it {supply} time(s)"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// A full square extending the input.
    Completable(PartialGrid),
    Incompletable(Obstruction),
}

impl Verdict {
    pub fn is_completable(&self) -> bool {
        matches!(self, Verdict::Completable(_))
    }

    pub fn square(&self) -> Option<&PartialGrid> {
        match self {
            Verdict::Completable(g) => Some(g),
            Verdict::Incompletable(_) => None,
        }
    }

    pub fn obstruction(&self) -> Option<&Obstruction> {
        match self {
            Verdict::Completable(_) => None,
            Verdict::Incompletable(o) => Some(o),
        }
    }
}

fn record(into: &mut BTreeMap<usize, Vec<usize>>, owners: &[usize], m: &Matching) {
    for &(v, w) in m.pairs() {
        into.entry(owners[v]).or_default().push(w + 1);
    }
}

/// Fills every medium cell of every restricted big cell, or explains why
/// no completion can fill them.
pub fn plan_medium_cells(grid: &PartialGrid) -> Result<MediumCellPlan, Obstruction> {
    let grid = normalized(grid).map_err(Obstruction::input)?;
    let l = Layout::new(&grid);
    let mut plan = MediumCellPlan::default();

    for band in l.side_bands() {
        let lg = side_line_graph(&grid, &l, band, EdgeRule::BigCellAware);
        match saturating_matching(&lg.graph) {
            Ok(m) if band < l.full_bands => record(&mut plan.horizontal, &lg.owners, &m),
            Ok(_) => {}
            Err(v) => return Err(Obstruction::hall(Stage::SideMatching, GraphSource::Side(band), lg.graph, v)),
        }
    }
    for stack in l.bottom_stacks() {
        let lg = bottom_line_graph(&grid, &l, stack, EdgeRule::BigCellAware);
        match saturating_matching(&lg.graph) {
            Ok(m) if stack < l.full_stacks => record(&mut plan.vertical, &lg.owners, &m),
            Ok(_) => {}
            Err(v) => return Err(Obstruction::hall(Stage::BottomMatching, GraphSource::Bottom(stack), lg.graph, v)),
        }
    }
    for k in 1..=l.n {
        let d = demand(&grid, &l, k);
        if d.row + d.col > d.supply {
            return Err(Obstruction {
                stage: Stage::CornerConflict,
                detail: ObstructionDetail::SymbolDemand {
                    symbol: k,
                    row_demand: d.row,
                    col_demand: d.col,
                    supply: d.supply,
                },
            });
        }
    }
    if l.has_corner() {
        let (lg, split, required) = corner_graph(&grid, &l);
        match saturating_matching_covering(&lg.graph, &required) {
            Ok(m) => {
                for &(v, w) in m.pairs() {
                    let side = if v < split { &mut plan.horizontal } else { &mut plan.vertical };
                    side.entry(lg.owners[v]).or_default().push(w + 1);
                }
            }
            Err(CoverFailure::Left(v)) => {
                return Err(Obstruction::hall(Stage::CornerConflict, GraphSource::Corner, lg.graph, v))
            }
            Err(CoverFailure::Right(v)) => {
                return Err(Obstruction::hall(
                    Stage::CornerConflict,
                    GraphSource::CornerSymbols,
                    lg.graph.transpose(),
                    v,
                ))
            }
        }
    }
    for list in plan.horizontal.values_mut().chain(plan.vertical.values_mut()) {
        list.sort_unstable();
    }
    Ok(plan)
}

fn plan_set(map: &BTreeMap<usize, Vec<usize>>, key: usize) -> SymbolSet {
    map.get(&key).map_or(0, |v| v.iter().fold(0, |acc, &k| acc | bit(k)))
}

fn check_plan(grid: &PartialGrid, l: &Layout, plan: &MediumCellPlan) -> Result<(), CompletionError> {
    let bad = |msg: String| Err(CompletionError::InvalidPlan(msg));
    let (row_sets, col_sets) = line_sets(grid);
    let expect_rows: Vec<usize> = if l.ds > 0 { (0..l.r).collect() } else { Vec::new() };
    let expect_cols: Vec<usize> = if l.dr > 0 { (0..l.s).collect() } else { Vec::new() };
    if plan.horizontal.keys().copied().collect::<Vec<_>>() != expect_rows {
        return bad("horizontal medium cells do not match the rows".into());
    }
    if plan.vertical.keys().copied().collect::<Vec<_>>() != expect_cols {
        return bad("vertical medium cells do not match the columns".into());
    }
    let check = |map: &BTreeMap<usize, Vec<usize>>, sets: &[SymbolSet], size: usize, what: &str| {
        for (&i, list) in map {
            let set = plan_set(map, i);
            if list.len() != size || set.count_ones() as usize != size || list.iter().any(|&k| k == 0 || k > l.n) {
                return bad(format!("{what} {} needs {size} distinct symbols", i + 1));
            }
            if set & sets[i] != 0 {
                return bad(format!("{what} {} repeats a symbol already present", i + 1));
            }
        }
        Ok(())
    };
    check(&plan.horizontal, &row_sets, l.q - l.ds, "row")?;
    check(&plan.vertical, &col_sets, l.p - l.dr, "column")?;

    let distinct = |pieces: Vec<SymbolSet>, sizes: usize, what: String| {
        let union = pieces.iter().fold(0, |a, b| a | b);
        if union.count_ones() as usize != sizes {
            return bad(format!("{what} repeats a symbol"));
        }
        Ok(())
    };
    for band in l.side_bands() {
        let rows = l.band_rows(band);
        let mut pieces = vec![block_set(grid, rows.clone(), l.partial_cols())];
        pieces.extend(rows.clone().map(|i| plan_set(&plan.horizontal, i)));
        let mut size = rows.len() * l.q;
        if band == l.full_bands {
            pieces.extend(l.partial_cols().map(|j| plan_set(&plan.vertical, j)));
            size = l.n - (l.p - l.dr) * (l.q - l.ds);
        }
        distinct(pieces, size, format!("big cell ({}, {})", band + 1, l.full_stacks + 1))?;
    }
    for stack in l.bottom_stacks().take(l.full_stacks) {
        let cols = l.stack_cols(stack);
        let mut pieces = vec![block_set(grid, l.partial_rows(), cols.clone())];
        pieces.extend(cols.clone().map(|j| plan_set(&plan.vertical, j)));
        distinct(pieces, cols.len() * l.p, format!("big cell ({}, {})", l.full_bands + 1, stack + 1))?;
    }
    Ok(())
}

/// Symbols each row (column) of the rectangle sends to the free big
/// columns (rows), in order of the free big columns (rows).
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Distribution {
    pub rows: BTreeMap<usize, Vec<Vec<usize>>>,
    pub cols: BTreeMap<usize, Vec<Vec<usize>>>,
}

/// Distributes the symbols still missing from each row (column) after the
/// rectangle and the plan over the free big columns (rows).
///
/// Within a band, the graph between its rows and their missing symbols has
/// row degree `e q` for `e` free big columns and symbol degree at most `e`,
/// so an equitable `e`-colouring hands every row `q` symbols per colour
/// and every symbol at most one row per colour: colour `c` becomes the
/// contents of the `c`-th free big column.
pub fn distribute_free(grid: &PartialGrid, plan: &MediumCellPlan) -> Result<Distribution, CompletionError> {
    let grid = normalized(grid).map_err(|r| CompletionError::Precondition(format!("invalid rectangle: {r}")))?;
    let l = Layout::new(&grid);
    check_plan(&grid, &l, plan)?;
    let (row_sets, col_sets) = line_sets(&grid);
    let mut dist = Distribution::default();

    let mut row_groups: Vec<Range<usize>> = (0..l.full_bands).map(|b| l.band_rows(b)).collect();
    if l.dr > 0 {
        row_groups.push(l.partial_rows());
    }
    for rows in row_groups {
        let have: Vec<SymbolSet> = rows.clone().map(|i| row_sets[i] | plan_set(&plan.horizontal, i)).collect();
        let parts = distribute_group(&have, l.free_stacks, l.q, l.n)?;
        dist.rows.extend(rows.zip(parts));
    }

    let mut col_groups: Vec<Range<usize>> = (0..l.full_stacks).map(|b| l.stack_cols(b)).collect();
    if l.ds > 0 {
        col_groups.push(l.partial_cols());
    }
    for cols in col_groups {
        let have: Vec<SymbolSet> = cols.clone().map(|j| col_sets[j] | plan_set(&plan.vertical, j)).collect();
        let parts = distribute_group(&have, l.free_bands, l.p, l.n)?;
        dist.cols.extend(cols.zip(parts));
    }
    Ok(dist)
}

fn distribute_group(
    have: &[SymbolSet],
    colors: usize,
    width: usize,
    n: usize,
) -> Result<Vec<Vec<Vec<usize>>>, CompletionError> {
    let internal = |msg: &str| Err(CompletionError::Internal(msg.to_string()));
    let missing: Vec<SymbolSet> = have.iter().map(|&h| all_symbols(n) & !h).collect();
    if missing.iter().any(|m| m.count_ones() as usize != colors * width) {
        return internal("a line misses the wrong number of symbols");
    }
    if colors == 0 {
        return Ok(vec![Vec::new(); have.len()]);
    }
    let mut g = BipartiteMultigraph::with_sizes(have.len(), n);
    for (v, &m) in missing.iter().enumerate() {
        for k in symbols_of(m) {
            g.add_edge(v, k - 1);
        }
    }
    if (0..n).any(|w| g.right_degree(w) > colors) {
        return internal("a symbol is missing from more lines than there are free big cells");
    }
    let coloring = equitable_edge_coloring(&g, colors).expect("at least one colour");
    let mut out = vec![vec![Vec::new(); colors]; have.len()];
    for (e, &(v, w)) in g.edges().iter().enumerate() {
        out[v][coloring.color_of(e) - 1].push(w + 1);
    }
    let balanced = out.iter().all(|parts| parts.iter().all(|p| p.len() == width))
        && (0..n).all(|w| coloring.right_counts(&g, w).iter().all(|&c| c <= 1));
    if !balanced {
        return internal("equitable colouring is unbalanced");
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
enum Block {
    Unit(usize),
    Medium,
    Free(usize),
}

fn blocks(units: usize, medium: usize, free: usize, size: usize) -> Vec<(Block, usize)> {
    let mut out: Vec<(Block, usize)> = (0..units).map(|i| (Block::Unit(i), 1)).collect();
    if medium > 0 {
        out.push((Block::Medium, medium));
    }
    out.extend((0..free).map(|b| (Block::Free(b), size)));
    out
}

/// Builds the outline latin square with row parts `(1 x r, p - (r - r*),
/// p, ...)`, column parts `(1 x s, q - (s - s*), q, ...)` and unit symbol
/// parts. Cells not covered by the rectangle, the plan or the distribution
/// receive the complement of their big cell.
pub fn assemble_outline(
    grid: &PartialGrid,
    plan: &MediumCellPlan,
    dist: &Distribution,
) -> Result<OutlineLatinSquare, Obstruction> {
    let grid = normalized(grid).map_err(Obstruction::input)?;
    let l = Layout::new(&grid);
    let full = all_symbols(l.n);
    let medium_rows = if l.dr > 0 { l.p - l.dr } else { 0 };
    let medium_cols = if l.ds > 0 { l.q - l.ds } else { 0 };
    let row_blocks = blocks(l.r, medium_rows, l.free_bands, l.p);
    let col_blocks = blocks(l.s, medium_cols, l.free_stacks, l.q);

    let piece = |map: &BTreeMap<usize, Vec<Vec<usize>>>, line: usize, b: usize| -> Vec<usize> {
        map.get(&line).and_then(|v| v.get(b)).cloned().unwrap_or_default()
    };
    let to_set = |list: &[usize]| list.iter().filter(|&&k| k >= 1 && k <= l.n).fold(0, |a, &k| a | bit(k));

    let mut cells = Vec::with_capacity(row_blocks.len() * col_blocks.len());
    for &(rb, _) in &row_blocks {
        for &(cb, _) in &col_blocks {
            let symbols: Vec<usize> = match (rb, cb) {
                (Block::Unit(i), Block::Unit(j)) => vec![grid.raw(i, j)],
                (Block::Unit(i), Block::Medium) => plan.horizontal.get(&i).cloned().unwrap_or_default(),
                (Block::Unit(i), Block::Free(b)) => piece(&dist.rows, i, b),
                (Block::Medium, Block::Unit(j)) => plan.vertical.get(&j).cloned().unwrap_or_default(),
                (Block::Free(a), Block::Unit(j)) => piece(&dist.cols, j, a),
                (Block::Medium, Block::Medium) => {
                    let used = block_set(&grid, l.partial_rows(), l.partial_cols())
                        | l.partial_rows().fold(0, |a, i| a | plan_set(&plan.horizontal, i))
                        | l.partial_cols().fold(0, |a, j| a | plan_set(&plan.vertical, j));
                    symbols_of(full & !used).collect()
                }
                (Block::Medium, Block::Free(b)) => {
                    let used = l.partial_rows().fold(0, |a, i| a | to_set(&piece(&dist.rows, i, b)));
                    symbols_of(full & !used).collect()
                }
                (Block::Free(a), Block::Medium) => {
                    let used = l.partial_cols().fold(0, |acc, j| acc | to_set(&piece(&dist.cols, j, a)));
                    symbols_of(full & !used).collect()
                }
                (Block::Free(_), Block::Free(_)) => (1..=l.n).collect(),
            };
            let mut counts = vec![0; l.n];
            for k in symbols {
                if (1..=l.n).contains(&k) {
                    counts[k - 1] += 1;
                }
            }
            cells.push(counts);
        }
    }
    let comp = |b: &[(Block, usize)]| Composition::new(b.iter().map(|&(_, size)| size).collect()).expect("positive parts");
    let outline = OutlineLatinSquare::new(comp(&row_blocks), comp(&col_blocks), Composition::unit(l.n), cells)
        .expect("parts sum to n");
    let report = validate_outline(&outline);
    if !report.ok() {
        return Err(Obstruction {
            stage: Stage::OutlineInvalid,
            detail: ObstructionDetail::Validation(report),
        });
    }
    Ok(outline)
}

/// Completes a filled valid rectangle or returns the first obstruction.
/// Geometries with `p == 1` or `q == 1` are plain latin rectangles and go
/// through [`complete_latin_rectangle`]. A Gerechte partition, if any, is
/// ignored.
pub fn complete(grid: &PartialGrid) -> Verdict {
    let grid = match normalized(grid) {
        Ok(g) => g,
        Err(report) => return Verdict::Incompletable(Obstruction::input(report)),
    };
    let geom = grid.geometry();
    if geom.p() == 1 || geom.q() == 1 {
        return match complete_latin_rectangle(&grid, geom.n()) {
            Ok(square) => Verdict::Completable(square),
            Err(o) => Verdict::Incompletable(o),
        };
    }
    let plan = match plan_medium_cells(&grid) {
        Ok(plan) => plan,
        Err(o) => return Verdict::Incompletable(o),
    };
    let dist = distribute_free(&grid, &plan).expect("a successful plan always distributes");
    let outline = match assemble_outline(&grid, &plan, &dist) {
        Ok(o) => o,
        Err(o) => return Verdict::Incompletable(o),
    };
    let latin = expand_outline(&outline).expect("validated outline with unit symbols expands");
    let square = PartialGrid::from_rows(geom, &latin.to_rows()).expect("same order");
    let report = validate_partial(&square);
    if !report.ok() {
        return Verdict::Incompletable(Obstruction {
            stage: Stage::OutlineInvalid,
            detail: ObstructionDetail::Validation(report),
        });
    }
    assert!(square.extends(&grid), "expansion preserves the unit cells");
    Verdict::Completable(square)
}

/// Same verdict as [`complete`]; each stage is a matching, a colouring or
/// a count, so the decision takes polynomial time.
pub fn decide_completable(grid: &PartialGrid) -> Verdict {
    complete(grid)
}

fn symbol_counts(grid: &PartialGrid, n: usize) -> Vec<usize> {
    let mut counts = vec![0; n];
    for row in grid.to_rows() {
        for v in row {
            if (1..=n).contains(&v) {
                counts[v - 1] += 1;
            }
        }
    }
    counts
}

/// Completes an `r x s` latin rectangle on symbols `1..=n` to a latin
/// square of order `n`, ignoring big cells.
///
/// Fails with a `ryser` obstruction when some symbol occurs fewer than
/// `r + s - n` times. Otherwise new columns are added one at a time by a
/// matching that covers every row and every symbol whose count is at the
/// bound, then new rows by perfect matchings.
pub fn complete_latin_rectangle(grid: &PartialGrid, n: usize) -> Result<PartialGrid, Obstruction> {
    let latin = grid.with_flavor(Flavor::Latin).expect("latin view");
    let (r, s) = (grid.rows(), grid.cols());
    let mut report = rectangle_report(&latin);
    if r > n || s > n {
        report.violations.push(Violation {
            kind: ViolationKind::Range,
            location: vec![(r, s)],
            symbol: None,
            expected: Some(n),
            found: Some(r.max(s)),
        });
    }
    for (i, row) in latin.to_rows().iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v > n {
                report.violations.push(Violation {
                    kind: ViolationKind::Range,
                    location: vec![(i, j)],
                    symbol: Some(v),
                    expected: Some(n),
                    found: Some(v),
                });
            }
        }
    }
    if !report.ok() || n > 64 {
        return Err(Obstruction::input(report));
    }

    let mut counts = symbol_counts(&latin, n);
    let bound = (r + s).saturating_sub(n);
    if let Some(k) = (0..n).find(|&k| counts[k] < bound) {
        return Err(Obstruction {
            stage: Stage::Ryser,
            detail: ObstructionDetail::Ryser {
                symbol: k + 1,
                count: counts[k],
                bound,
            },
        });
    }

    let mut rows = latin.to_rows();
    let mut row_sets: Vec<SymbolSet> = rows.iter().map(|row| row.iter().fold(0, |a, &v| a | bit(v))).collect();
    for width in s..n {
        let mut g = BipartiteMultigraph::with_sizes(r, n);
        for (i, &set) in row_sets.iter().enumerate() {
            for k in symbols_of(all_symbols(n) & !set) {
                g.add_edge(i, k - 1);
            }
        }
        let tight: Vec<usize> = (0..n).filter(|&k| counts[k] + n == r + width).collect();
        let m = saturating_matching_covering(&g, &tight).expect("the count bound keeps every column extension possible");
        for &(i, w) in m.pairs() {
            rows[i].push(w + 1);
            row_sets[i] |= bit(w + 1);
            counts[w] += 1;
        }
    }
    let mut col_sets: Vec<SymbolSet> = (0..n).map(|j| rows.iter().fold(0, |a, row| a | bit(row[j]))).collect();
    for _ in r..n {
        let mut g = BipartiteMultigraph::with_sizes(n, n);
        for (j, &set) in col_sets.iter().enumerate() {
            for k in symbols_of(all_symbols(n) & !set) {
                g.add_edge(j, k - 1);
            }
        }
        let m = saturating_matching(&g).expect("a latin rectangle always gains a row");
        let row: Vec<usize> = m.pairs().iter().map(|&(_, w)| w + 1).collect();
        for (j, &k) in row.iter().enumerate() {
            col_sets[j] |= bit(k);
        }
        rows.push(row);
    }

    let geometry = if n == grid.n() {
        grid.geometry()
    } else {
        crate::grid::SudokuGeometry::latin(n).expect("order checked")
    };
    let square = PartialGrid::from_rows(geometry, &rows).expect("n x n fits");
    Ok(square.with_flavor(Flavor::Latin).expect("latin view"))
}

/// Which side and bottom graphs the matching criterion checked, and the
/// Hall violators of those without a saturating matching.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingCriterion {
    pub checked: Vec<GraphSource>,
    pub failures: Vec<(GraphSource, HallViolator)>,
}

impl MatchingCriterion {
    pub fn holds(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Checks only that every side and bottom graph has a saturating matching
/// under `rule`, without the corner interaction or the free-region counts.
pub fn matching_criterion(grid: &PartialGrid, rule: EdgeRule) -> Result<MatchingCriterion, CompletionError> {
    let grid = normalized(grid).map_err(|r| CompletionError::Precondition(format!("invalid rectangle: {r}")))?;
    let l = Layout::new(&grid);
    let mut out = MatchingCriterion {
        checked: Vec::new(),
        failures: Vec::new(),
    };
    let graphs = l
        .side_bands()
        .map(|b| (GraphSource::Side(b), side_line_graph(&grid, &l, b, rule).graph))
        .chain(
            l.bottom_stacks()
                .map(|b| (GraphSource::Bottom(b), bottom_line_graph(&grid, &l, b, rule).graph)),
        );
    for (source, g) in graphs {
        out.checked.push(source);
        if let Err(v) = saturating_matching(&g) {
            out.failures.push((source, v));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SudokuGeometry;

    fn rect(p: usize, q: usize, rows: &[Vec<usize>]) -> PartialGrid {
        PartialGrid::from_rows(SudokuGeometry::new(p, q).unwrap(), rows).unwrap()
    }

    fn edges(g: &BipartiteMultigraph) -> Vec<(usize, usize)> {
        g.edges().iter().map(|&(v, w)| (v, w + 1)).collect()
    }

    fn worked() -> PartialGrid {
        rect(2, 2, &[vec![1, 2, 3], vec![3, 4, 1], vec![2, 1, 4]])
    }

    #[test]
    fn side_graph_of_two_rows() {
        let g = side_graph(&rect(2, 2, &[vec![1, 2, 3], vec![3, 4, 1]]), 0).unwrap();
        assert_eq!(edges(&g), vec![(0, 4), (1, 2)]);
    }

    #[test]
    fn side_graph_replication() {
        let r = rect(2, 3, &[vec![1, 2, 3, 4], vec![4, 5, 6, 1]]);
        let g = side_graph(&r, 0).unwrap();
        assert_eq!(g.left_count(), 4);
        assert_eq!(g.left_labels()[1], "r1.2");
    }

    #[test]
    fn corner_only_side_graph() {
        let r = rect(2, 2, &[vec![1, 2, 3]]);
        assert_eq!(edges(&side_graph(&r, 0).unwrap()), vec![(0, 4)]);
        assert!(side_graph(&r, 1).is_err());
    }

    #[test]
    fn bottom_graph_over_the_first_stack() {
        let r = rect(2, 2, &[vec![1, 2, 3]]);
        let g = bottom_graph_with(&r, 0, EdgeRule::RowOnly).unwrap();
        assert_eq!(edges(&g), vec![(0, 2), (0, 3), (0, 4), (1, 1), (1, 3), (1, 4)]);
        let strict = bottom_graph(&r, 0).unwrap();
        assert_eq!(edges(&strict), vec![(0, 3), (0, 4), (1, 3), (1, 4)]);
    }

    #[test]
    fn bottom_graph_needs_a_partial_band() {
        let r = rect(2, 2, &[vec![1, 2, 3], vec![3, 4, 1]]);
        assert!(matches!(bottom_graph(&r, 0), Err(CompletionError::Precondition(_))));
    }

    #[test]
    fn worked_plan() {
        let plan = plan_medium_cells(&worked()).unwrap();
        let expect = |v: &[(usize, usize)]| v.iter().map(|&(i, k)| (i, vec![k])).collect::<BTreeMap<_, _>>();
        assert_eq!(plan.horizontal, expect(&[(0, 4), (1, 2), (2, 3)]));
        assert_eq!(plan.vertical, expect(&[(0, 4), (1, 3), (2, 2)]));
    }

    #[test]
    fn worked_instance_completes_uniquely() {
        let square = complete(&worked()).square().cloned().unwrap();
        assert_eq!(
            square.to_rows(),
            vec![vec![1, 2, 3, 4], vec![3, 4, 1, 2], vec![2, 1, 4, 3], vec![4, 3, 2, 1]]
        );
    }

    #[test]
    fn divisible_shape_needs_no_plan() {
        let r = rect(2, 2, &[vec![1, 2], vec![3, 4]]);
        assert_eq!(plan_medium_cells(&r).unwrap(), MediumCellPlan::default());
        let dist = distribute_free(&r, &MediumCellPlan::default()).unwrap();
        assert_eq!(dist.rows[&0], vec![vec![3, 4]]);
        let square = complete(&r).square().cloned().unwrap();
        assert!(validate_partial(&square).ok() && square.extends(&r));
    }

    #[test]
    fn single_row_corner_plan_is_consistent() {
        let r = rect(2, 2, &[vec![1, 2, 3]]);
        let plan = plan_medium_cells(&r).unwrap();
        assert_eq!(plan.horizontal[&0], vec![4]);
        assert!(complete(&r).is_completable());
    }

    #[test]
    fn empty_rectangle_completes() {
        for (p, q) in [(2, 2), (2, 3), (3, 2)] {
            let r = PartialGrid::new(SudokuGeometry::new(p, q).unwrap(), 0, 0).unwrap();
            let square = complete(&r).square().cloned().unwrap();
            assert!(square.is_full() && validate_partial(&square).ok());
        }
    }

    #[test]
    fn tampered_plan_breaks_the_outline() {
        let grid = worked();
        let plan = plan_medium_cells(&grid).unwrap();
        let dist = distribute_free(&grid, &plan).unwrap();
        let mut bad = plan.clone();
        bad.horizontal.insert(1, vec![4]);
        let err = assemble_outline(&grid, &bad, &dist).unwrap_err();
        assert_eq!(err.stage, Stage::OutlineInvalid);
        assert!(err.verify(&grid));
        assert!(matches!(distribute_free(&grid, &bad), Err(CompletionError::InvalidPlan(_))));
    }

    #[test]
    fn latin_geometry_routes_to_ryser() {
        let r = rect(1, 3, &[vec![1, 2], vec![2, 1]]);
        let o = complete(&r).obstruction().cloned().unwrap();
        assert_eq!(o.stage, Stage::Ryser);
        assert_eq!(o.to_string(), "ryser: symbol 3: N=0 < 1");
        assert!(o.verify(&r));
    }

    #[test]
    fn latin_rectangle_completes_when_counts_allow() {
        let r = PartialGrid::latin_from_rows(3, &[vec![1, 2], vec![2, 3]]).unwrap();
        let square = complete_latin_rectangle(&r, 3).unwrap();
        assert!(validate_partial(&square).ok() && square.is_full() && square.extends(&r));
        let empty = PartialGrid::latin(5, 0, 0).unwrap();
        assert!(complete_latin_rectangle(&empty, 5).unwrap().is_full());
        let wide = PartialGrid::latin_from_rows(4, &[vec![1, 2], vec![2, 1]]).unwrap();
        assert!(complete_latin_rectangle(&wide, 4).is_ok());
    }

    #[test]
    fn invalid_input_is_reported() {
        let r = rect(2, 2, &[vec![1, 1]]);
        let o = complete(&r).obstruction().cloned().unwrap();
        assert_eq!(o.stage, Stage::InputInvalid);
        assert!(o.verify(&r));
        let holes = rect(2, 2, &[vec![1, 0]]);
        let o = complete(&holes).obstruction().cloned().unwrap();
        assert!(matches!(&o.detail, ObstructionDetail::Validation(rep) if rep.has(ViolationKind::Unfilled)));
    }

    #[test]
    fn demand_conflict_without_a_corner() {
        // Both partial rows miss 5 and 6, which must share one big cell.
        let r = rect(3, 2, &[vec![1, 2, 3, 4], vec![3, 4, 1, 2]]);
        let o = complete(&r).obstruction().cloned().unwrap();
        assert_eq!(o.stage, Stage::CornerConflict);
        assert!(matches!(o.detail, ObstructionDetail::SymbolDemand { symbol: 5, row_demand: 1, supply: 0, .. }));
        assert!(o.verify(&r));
    }

    #[test]
    fn criterion_reports_each_graph() {
        let c = matching_criterion(&worked(), EdgeRule::RowOnly).unwrap();
        assert_eq!(
            c.checked,
            vec![GraphSource::Side(0), GraphSource::Side(1), GraphSource::Bottom(0), GraphSource::Bottom(1)]
        );
        assert!(c.holds());
    }
}
