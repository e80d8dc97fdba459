//! Partial latin, Sudoku and Gerechte grids.
//!
//! Row and column indices in the Rust API are 0-based; symbols are the
//! integers `1..=n` and an empty cell is `None`. The text format and all
//! human-facing output use 1-based coordinates.

mod text;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

pub use text::{parse_grid, serialize_grid, ParseError};

/// Largest supported order. Candidate sets are kept in a `u64`.
pub const MAX_ORDER: usize = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GridError {
    #[error("big-cell dimensions must be positive (p={p}, q={q})")]
    ZeroDimension { p: usize, q: usize },
    #[error("order {0} exceeds the supported maximum of {MAX_ORDER}")]
    OrderTooLarge(usize),
    #[error("cell ({row}, {col}) lies outside the {rows}x{cols} grid")]
    OutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
    #[error("a {rows}x{cols} grid does not fit inside a square of order {n}")]
    DoesNotFit { rows: usize, cols: usize, n: usize },
    #[error("row {row} has {found} entries, expected {expected}")]
    RowLength {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("invalid partition: {0}")]
    Partition(String),
}

/// The `p x q` big-cell structure of a Sudoku square of order `n = pq`.
///
/// Big cells have `p` rows and `q` columns, so there are `q` big rows and
/// `p` big columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SudokuGeometry {
    p: usize,
    q: usize,
}

impl SudokuGeometry {
    pub fn new(p: usize, q: usize) -> Result<Self, GridError> {
        if p == 0 || q == 0 {
            return Err(GridError::ZeroDimension { p, q });
        }
        if p * q > MAX_ORDER {
            return Err(GridError::OrderTooLarge(p * q));
        }
        Ok(Self { p, q })
    }

    /// Geometry whose big cells are whole rows, i.e. plain latin squares.
    pub fn latin(n: usize) -> Result<Self, GridError> {
        Self::new(1, n)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n(&self) -> usize {
        self.p * self.q
    }

    pub fn big_rows(&self) -> usize {
        self.q
    }

    pub fn big_cols(&self) -> usize {
        self.p
    }

    /// Big cell `(big_row, big_col)` containing the small cell `(row, col)`.
    pub fn big_cell_of(&self, row: usize, col: usize) -> Result<(usize, usize), GridError> {
        let n = self.n();
        if row >= n || col >= n {
            return Err(GridError::OutOfRange {
                row,
                col,
                rows: n,
                cols: n,
            });
        }
        Ok((row / self.p, col / self.q))
    }

    /// Row-major index of the big cell containing `(row, col)`; no bounds check.
    pub(crate) fn box_index(&self, row: usize, col: usize) -> usize {
        (row / self.p) * self.p + col / self.q
    }

    pub fn anchors(&self, r: usize, s: usize) -> Anchors {
        anchors(r, s, *self)
    }
}

impl fmt::Display for SudokuGeometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.p, self.q)
    }
}

/// The largest big-cell-aligned rectangle inside an `r x s` rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Anchors {
    pub r: usize,
    pub s: usize,
    pub r_star: usize,
    pub s_star: usize,
}

impl Anchors {
    /// Rows of the rectangle past the last complete big row.
    pub fn row_excess(&self) -> usize {
        self.r - self.r_star
    }

    pub fn col_excess(&self) -> usize {
        self.s - self.s_star
    }
}

pub fn anchors(r: usize, s: usize, geom: SudokuGeometry) -> Anchors {
    Anchors {
        r,
        s,
        r_star: r / geom.p * geom.p,
        s_star: s / geom.q * geom.q,
    }
}

/// Which constraints a grid is subject to besides rows and columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flavor {
    Latin,
    Sudoku,
    Gerechte,
}

impl Flavor {
    pub fn name(&self) -> &'static str {
        match self {
            Flavor::Latin => "latin",
            Flavor::Sudoku => "sudoku",
            Flavor::Gerechte => "gerechte",
        }
    }
}

impl std::str::FromStr for Flavor {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "latin" => Ok(Flavor::Latin),
            "sudoku" => Ok(Flavor::Sudoku),
            "gerechte" => Ok(Flavor::Gerechte),
            other => Err(format!("unknown flavor `{other}`")),
        }
    }
}

/// An `rows x cols` array of optional symbols sitting in the top left corner
/// of an `n x n` square whose remaining cells are empty.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartialGrid {
    geometry: SudokuGeometry,
    rows: usize,
    cols: usize,
    cells: Vec<usize>,
    flavor: Flavor,
    partition: Option<Vec<usize>>,
}

impl PartialGrid {
    /// An empty grid. Geometries with `p == 1` or `q == 1` get the latin
    /// flavor since their big cells are whole rows or columns.
    pub fn new(geometry: SudokuGeometry, rows: usize, cols: usize) -> Result<Self, GridError> {
        let n = geometry.n();
        if rows > n || cols > n {
            return Err(GridError::DoesNotFit { rows, cols, n });
        }
        let flavor = if geometry.p == 1 || geometry.q == 1 {
            Flavor::Latin
        } else {
            Flavor::Sudoku
        };
        Ok(Self {
            geometry,
            rows,
            cols,
            cells: vec![0; rows * cols],
            flavor,
            partition: None,
        })
    }

    pub fn latin(n: usize, rows: usize, cols: usize) -> Result<Self, GridError> {
        Self::new(SudokuGeometry::latin(n)?, rows, cols)
    }

    /// Builds a grid from row vectors where `0` marks an empty cell.
    pub fn from_rows(geometry: SudokuGeometry, rows: &[Vec<usize>]) -> Result<Self, GridError> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut grid = Self::new(geometry, rows.len(), cols)?;
        for (r, row) in rows.iter().enumerate() {
            if row.len() != cols {
                return Err(GridError::RowLength {
                    row: r + 1,
                    found: row.len(),
                    expected: cols,
                });
            }
            for (c, &v) in row.iter().enumerate() {
                grid.cells[r * cols + c] = v;
            }
        }
        Ok(grid)
    }

    pub fn latin_from_rows(n: usize, rows: &[Vec<usize>]) -> Result<Self, GridError> {
        Self::from_rows(SudokuGeometry::latin(n)?, rows)
    }

    /// Attaches a Gerechte partition (part ids `1..=n`, one per cell) and
    /// switches the flavor to Gerechte. The grid must be the full `n x n`
    /// square and every part must have exactly `n` cells.
    pub fn with_partition(mut self, partition: &[Vec<usize>]) -> Result<Self, GridError> {
        let n = self.geometry.n();
        if self.rows != n || self.cols != n {
            return Err(GridError::Partition(format!(
                "gerechte grids must be {n}x{n}, got {}x{}",
                self.rows, self.cols
            )));
        }
        if partition.len() != n || partition.iter().any(|r| r.len() != n) {
            return Err(GridError::Partition(format!("expected {n} rows of {n} part ids")));
        }
        let flat: Vec<usize> = partition.iter().flatten().copied().collect();
        let mut sizes = vec![0usize; n + 1];
        for &id in &flat {
            if id == 0 || id > n {
                return Err(GridError::Partition(format!("part id {id} outside 1..={n}")));
            }
            sizes[id] += 1;
        }
        if let Some(id) = (1..=n).find(|&id| sizes[id] != n) {
            return Err(GridError::Partition(format!(
                "part {id} has {} cells, expected {n}",
                sizes[id]
            )));
        }
        self.partition = Some(flat);
        self.flavor = Flavor::Gerechte;
        Ok(self)
    }

    pub fn geometry(&self) -> SudokuGeometry {
        self.geometry
    }

    pub fn n(&self) -> usize {
        self.geometry.n()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    /// Part ids (`1..=n`, row-major) for Gerechte grids.
    pub fn partition(&self) -> Option<&[usize]> {
        self.partition.as_deref()
    }

    pub fn get(&self, row: usize, col: usize) -> Option<usize> {
        assert!(row < self.rows && col < self.cols, "cell ({row}, {col}) out of range");
        match self.cells[row * self.cols + col] {
            0 => None,
            v => Some(v),
        }
    }

    pub fn set(&mut self, row: usize, col: usize, symbol: Option<usize>) {
        assert!(row < self.rows && col < self.cols, "cell ({row}, {col}) out of range");
        self.cells[row * self.cols + col] = symbol.unwrap_or(0);
    }

    /// Raw cell value, `0` when empty.
    pub(crate) fn raw(&self, row: usize, col: usize) -> usize {
        self.cells[row * self.cols + col]
    }

    pub fn to_rows(&self) -> Vec<Vec<usize>> {
        (0..self.rows)
            .map(|r| self.cells[r * self.cols..(r + 1) * self.cols].to_vec())
            .collect()
    }

    pub fn filled_count(&self) -> usize {
        self.cells.iter().filter(|&&v| v != 0).count()
    }

    pub fn is_full(&self) -> bool {
        self.cells.iter().all(|&v| v != 0)
    }

    /// Coordinates of the empty cells in row-major order.
    pub fn empty_cells(&self) -> Vec<(usize, usize)> {
        (0..self.rows)
            .flat_map(|r| (0..self.cols).map(move |c| (r, c)))
            .filter(|&(r, c)| self.raw(r, c) == 0)
            .collect()
    }

    /// The full `n x n` square with this grid in its top left corner.
    pub fn embed(&self) -> PartialGrid {
        let n = self.n();
        if self.rows == n && self.cols == n {
            return self.clone();
        }
        let mut out = PartialGrid::new(self.geometry, n, n).expect("n x n always fits");
        out.flavor = self.flavor;
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.cells[r * n + c] = self.raw(r, c);
            }
        }
        out
    }

    /// The top left `rows x cols` sub-grid.
    pub fn truncate(&self, rows: usize, cols: usize) -> PartialGrid {
        assert!(rows <= self.rows && cols <= self.cols);
        let mut out = PartialGrid::new(self.geometry, rows, cols).expect("sub-grid fits");
        out.flavor = if self.flavor == Flavor::Gerechte && (rows, cols) != (self.rows, self.cols) {
            Flavor::Sudoku
        } else {
            self.flavor
        };
        if out.flavor == Flavor::Gerechte {
            out.partition = self.partition.clone();
        }
        for r in 0..rows {
            for c in 0..cols {
                out.cells[r * cols + c] = self.raw(r, c);
            }
        }
        out
    }

    /// Same cells, viewed under another flavor. Switching to Gerechte is
    /// only possible when a partition is attached.
    pub fn with_flavor(&self, flavor: Flavor) -> Option<PartialGrid> {
        if flavor == Flavor::Gerechte && self.partition.is_none() {
            return None;
        }
        let mut out = self.clone();
        out.flavor = flavor;
        Some(out)
    }

    /// True when every filled cell of `inner` holds the same symbol here.
    pub fn extends(&self, inner: &PartialGrid) -> bool {
        inner.rows <= self.rows
            && inner.cols <= self.cols
            && (0..inner.rows).all(|r| {
                (0..inner.cols).all(|c| {
                    let v = inner.raw(r, c);
                    v == 0 || self.raw(r, c) == v
                })
            })
    }

    /// Index of the region (big cell or Gerechte part) containing a cell
    /// under `flavor`, or `None` for plain latin constraints.
    pub(crate) fn region_of(&self, flavor: Flavor, row: usize, col: usize) -> Option<usize> {
        match flavor {
            Flavor::Latin => None,
            Flavor::Sudoku => Some(self.geometry.box_index(row, col)),
            Flavor::Gerechte => self
                .partition
                .as_ref()
                .map(|p| p[row * self.cols + col] - 1),
        }
    }
}

impl fmt::Display for PartialGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&serialize_grid(self))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViolationKind {
    Row,
    Column,
    BigCell,
    Part,
    Range,
    /// An empty cell where a filled one is required.
    Unfilled,
    /// Outline condition (i): symbol count in a row block.
    OutlineRow,
    /// Outline condition (ii): symbol count in a column block.
    OutlineColumn,
    /// Outline condition (iii): number of symbols in a cell.
    OutlineCell,
}

impl fmt::Display for ViolationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationKind::Row => "row",
            ViolationKind::Column => "column",
            ViolationKind::BigCell => "bigcell",
            ViolationKind::Part => "part",
            ViolationKind::Range => "range",
            ViolationKind::Unfilled => "unfilled",
            ViolationKind::OutlineRow => "outline-row",
            ViolationKind::OutlineColumn => "outline-column",
            ViolationKind::OutlineCell => "outline-cell",
        };
        f.write_str(s)
    }
}

/// One broken constraint. `location` holds 0-based coordinates: the
/// duplicated cells for grid violations, or `(block, 0)` / `(i, j)` for
/// outline rows, columns and cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub location: Vec<(usize, usize)>,
    pub symbol: Option<usize>,
    pub expected: Option<usize>,
    pub found: Option<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        match self.kind {
            ViolationKind::OutlineRow | ViolationKind::OutlineColumn => {
                write!(f, " {}", self.location[0].0 + 1)?
            }
            _ => {
                for (r, c) in &self.location {
                    write!(f, " ({},{})", r + 1, c + 1)?;
                }
            }
        }
        if let Some(s) = self.symbol {
            write!(f, " symbol {s}")?;
        }
        if let (Some(e), Some(found)) = (self.expected, self.found) {
            write!(f, " expected {e} found {found}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, kind: ViolationKind) -> bool {
        self.violations.iter().any(|v| v.kind == kind)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            return f.write_str("valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Lists every duplicate symbol in a row, column, big cell (Sudoku flavor)
/// or part (Gerechte flavor), and every symbol outside `1..=n`.
pub fn validate_partial(grid: &PartialGrid) -> ValidationReport {
    let n = grid.n();
    let mut violations = Vec::new();
    let mut groups: BTreeMap<(ViolationKind, usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for r in 0..grid.rows {
        for c in 0..grid.cols {
            let v = grid.raw(r, c);
            if v == 0 {
                continue;
            }
            if v > n {
                violations.push(Violation {
                    kind: ViolationKind::Range,
                    location: vec![(r, c)],
                    symbol: Some(v),
                    expected: None,
                    found: None,
                });
                continue;
            }
            groups.entry((ViolationKind::Row, r, v)).or_default().push((r, c));
            groups.entry((ViolationKind::Column, c, v)).or_default().push((r, c));
            match grid.flavor {
                Flavor::Latin => {}
                Flavor::Sudoku => {
                    let b = grid.geometry.box_index(r, c);
                    groups.entry((ViolationKind::BigCell, b, v)).or_default().push((r, c));
                }
                Flavor::Gerechte => {
                    let part = grid.region_of(Flavor::Gerechte, r, c).expect("partition present");
                    groups.entry((ViolationKind::Part, part, v)).or_default().push((r, c));
                }
            }
        }
    }
    for ((kind, _, symbol), cells) in groups {
        if cells.len() > 1 {
            violations.push(Violation {
                kind,
                location: cells,
                symbol: Some(symbol),
                expected: None,
                found: None,
            });
        }
    }
    ValidationReport { violations }
}
