//! Amalgamations of latin squares into outline latin squares, and the
//! inverse expansion by repeated splitting.

use std::fmt;

use thiserror::Error;

use crate::bipartite::{equitable_edge_coloring, BipartiteMultigraph};
use crate::grid::{validate_partial, PartialGrid, ValidationReport, Violation, ViolationKind};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OutlineError {
    #[error("composition parts must be positive")]
    EmptyPart,
    #[error("compositions sum to {found}, expected {expected}")]
    CompositionMismatch { expected: usize, found: usize },
    #[error("outline cells do not match the {rows}x{cols} shape over {symbols} symbols")]
    Shape {
        rows: usize,
        cols: usize,
        symbols: usize,
    },
    #[error("input is not a latin square:\n{0}")]
    NotLatin(ValidationReport),
    #[error("outline conditions fail:\n{0}")]
    Invalid(ValidationReport),
    #[error("no composite part left to split on this axis")]
    NothingToSplit,
    #[error("expansion needs the symbol composition to be all ones")]
    SymbolsNotUnit,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// An ordered list of positive parts.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Composition(Vec<usize>);

impl Composition {
    pub fn new(parts: Vec<usize>) -> Result<Self, OutlineError> {
        if parts.contains(&0) {
            return Err(OutlineError::EmptyPart);
        }
        Ok(Self(parts))
    }

    /// `(1, 1, ..., 1)` with `n` parts.
    pub fn unit(n: usize) -> Self {
        Self(vec![1; n])
    }

    pub fn parts(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn is_unit(&self) -> bool {
        self.0.iter().all(|&p| p == 1)
    }

    /// Part index of every position `0..total`.
    pub fn block_of(&self) -> Vec<usize> {
        self.0
            .iter()
            .enumerate()
            .flat_map(|(i, &p)| std::iter::repeat_n(i, p))
            .collect()
    }
}

impl fmt::Display for Composition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(usize::to_string).collect();
        f.write_str(&parts.join(" "))
    }
}

/// An `s x t` array of symbol multisets over `1..=u`, indexed by the row
/// composition `S`, column composition `T` and symbol composition `U`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OutlineLatinSquare {
    row_comp: Composition,
    col_comp: Composition,
    sym_comp: Composition,
    /// Row-major multiplicity vectors of length `u`.
    cells: Vec<Vec<usize>>,
}

impl OutlineLatinSquare {
    /// Builds an outline from multiplicity vectors (`cells[i * t + j][k - 1]`
    /// is the number of copies of symbol `k` in cell `(i, j)`). Only the
    /// shape is checked here; see [`validate_outline`] for the conditions.
    pub fn new(
        row_comp: Composition,
        col_comp: Composition,
        sym_comp: Composition,
        cells: Vec<Vec<usize>>,
    ) -> Result<Self, OutlineError> {
        let n = row_comp.total();
        for c in [&col_comp, &sym_comp] {
            if c.total() != n {
                return Err(OutlineError::CompositionMismatch {
                    expected: n,
                    found: c.total(),
                });
            }
        }
        let (s, t, u) = (row_comp.len(), col_comp.len(), sym_comp.len());
        if cells.len() != s * t || cells.iter().any(|c| c.len() != u) {
            return Err(OutlineError::Shape {
                rows: s,
                cols: t,
                symbols: u,
            });
        }
        Ok(Self {
            row_comp,
            col_comp,
            sym_comp,
            cells,
        })
    }

    /// Builds an outline from explicit symbol lists per cell (row-major).
    pub fn from_symbols(
        row_comp: Composition,
        col_comp: Composition,
        sym_comp: Composition,
        cells: &[Vec<usize>],
    ) -> Result<Self, OutlineError> {
        let u = sym_comp.len();
        let mut counts = Vec::with_capacity(cells.len());
        for cell in cells {
            let mut c = vec![0; u];
            for &k in cell {
                if k == 0 || k > u {
                    return Err(OutlineError::Shape {
                        rows: row_comp.len(),
                        cols: col_comp.len(),
                        symbols: u,
                    });
                }
                c[k - 1] += 1;
            }
            counts.push(c);
        }
        Self::new(row_comp, col_comp, sym_comp, counts)
    }

    pub fn order(&self) -> usize {
        self.row_comp.total()
    }

    pub fn row_comp(&self) -> &Composition {
        &self.row_comp
    }

    pub fn col_comp(&self) -> &Composition {
        &self.col_comp
    }

    pub fn sym_comp(&self) -> &Composition {
        &self.sym_comp
    }

    /// Multiplicity vector of cell `(i, j)`.
    pub fn cell(&self, i: usize, j: usize) -> &[usize] {
        &self.cells[i * self.col_comp.len() + j]
    }

    /// Sorted symbols of cell `(i, j)`, repeated by multiplicity.
    pub fn cell_symbols(&self, i: usize, j: usize) -> Vec<usize> {
        self.cell(i, j)
            .iter()
            .enumerate()
            .flat_map(|(k, &c)| std::iter::repeat_n(k + 1, c))
            .collect()
    }

    fn transpose(&self) -> Self {
        let (s, t) = (self.row_comp.len(), self.col_comp.len());
        let cells = (0..t)
            .flat_map(|j| (0..s).map(move |i| (i, j)))
            .map(|(i, j)| self.cells[i * t + j].clone())
            .collect();
        Self {
            row_comp: self.col_comp.clone(),
            col_comp: self.row_comp.clone(),
            sym_comp: self.sym_comp.clone(),
            cells,
        }
    }
}

/// The `(S, T, U)`-amalgamation of a latin square: cell `(i, j)` collects
/// the `U`-block of every symbol in row block `i` and column block `j`.
pub fn amalgamate(
    latin: &PartialGrid,
    row_comp: &Composition,
    col_comp: &Composition,
    sym_comp: &Composition,
) -> Result<OutlineLatinSquare, OutlineError> {
    let n = latin.n();
    let report = validate_partial(&latin.with_flavor(crate::grid::Flavor::Latin).expect("latin"));
    if latin.rows() != n || latin.cols() != n || !latin.is_full() || !report.ok() {
        return Err(OutlineError::NotLatin(report));
    }
    for c in [row_comp, col_comp, sym_comp] {
        if c.total() != n {
            return Err(OutlineError::CompositionMismatch {
                expected: n,
                found: c.total(),
            });
        }
    }
    let (rb, cb, sb) = (row_comp.block_of(), col_comp.block_of(), sym_comp.block_of());
    let t = col_comp.len();
    let mut cells = vec![vec![0; sym_comp.len()]; row_comp.len() * t];
    for r in 0..n {
        for c in 0..n {
            let v = latin.get(r, c).expect("full square");
            cells[rb[r] * t + cb[c]][sb[v - 1]] += 1;
        }
    }
    OutlineLatinSquare::new(row_comp.clone(), col_comp.clone(), sym_comp.clone(), cells)
}

/// Checks the three outline conditions: row block `i` holds symbol `k`
/// exactly `p_i r_k` times, column block `j` holds it `q_j r_k` times, and
/// cell `(i, j)` holds `p_i q_j` symbols.
pub fn validate_outline(o: &OutlineLatinSquare) -> ValidationReport {
    let (s, t, u) = (o.row_comp.len(), o.col_comp.len(), o.sym_comp.len());
    let (ps, qs, rs) = (o.row_comp.parts(), o.col_comp.parts(), o.sym_comp.parts());
    let mut violations = Vec::new();
    for i in 0..s {
        for k in 0..u {
            let found: usize = (0..t).map(|j| o.cell(i, j)[k]).sum();
            if found != ps[i] * rs[k] {
                violations.push(count_violation(ViolationKind::OutlineRow, (i, 0), Some(k + 1), ps[i] * rs[k], found));
            }
        }
    }
    for j in 0..t {
        for k in 0..u {
            let found: usize = (0..s).map(|i| o.cell(i, j)[k]).sum();
            if found != qs[j] * rs[k] {
                violations.push(count_violation(
                    ViolationKind::OutlineColumn,
                    (j, 0),
                    Some(k + 1),
                    qs[j] * rs[k],
                    found,
                ));
            }
        }
    }
    for i in 0..s {
        for j in 0..t {
            let found: usize = o.cell(i, j).iter().sum();
            if found != ps[i] * qs[j] {
                violations.push(count_violation(ViolationKind::OutlineCell, (i, j), None, ps[i] * qs[j], found));
            }
        }
    }
    ValidationReport { violations }
}

fn count_violation(
    kind: ViolationKind,
    at: (usize, usize),
    symbol: Option<usize>,
    expected: usize,
    found: usize,
) -> Violation {
    Violation {
        kind,
        location: vec![at],
        symbol,
        expected: Some(expected),
        found: Some(found),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Row,
    Column,
}

/// Splits the first composite part `m` on `axis` into `(1, m - 1)`.
///
/// The cells of the composite row form a bipartite multigraph between
/// column blocks and symbols (one edge per symbol copy). In an equitable
/// `m`-edge-colouring, column block `j` (degree `m q_j`) sees every colour
/// `q_j` times and symbol `k` (degree `m r_k`) sees it `r_k` times, so one
/// colour class is a valid unit row and the rest a valid `(m - 1)`-row.
pub fn split_front(o: &OutlineLatinSquare, axis: Axis) -> Result<OutlineLatinSquare, OutlineError> {
    let report = validate_outline(o);
    if !report.ok() {
        return Err(OutlineError::Invalid(report));
    }
    match axis {
        Axis::Row => split_first_row(o),
        Axis::Column => split_first_row(&o.transpose()).map(|x| x.transpose()),
    }
}

fn split_first_row(o: &OutlineLatinSquare) -> Result<OutlineLatinSquare, OutlineError> {
    let parts = o.row_comp.parts();
    let i = parts.iter().position(|&p| p >= 2).ok_or(OutlineError::NothingToSplit)?;
    let m = parts[i];
    let (t, u) = (o.col_comp.len(), o.sym_comp.len());

    let mut g = BipartiteMultigraph::with_sizes(t, u);
    for j in 0..t {
        for (k, &count) in o.cell(i, j).iter().enumerate() {
            for _ in 0..count {
                g.add_edge(j, k);
            }
        }
    }
    let coloring = equitable_edge_coloring(&g, m).expect("m >= 2");
    let mut peeled = vec![vec![0; u]; t];
    for e in coloring.class(1) {
        let (j, k) = g.edges()[e];
        peeled[j][k] += 1;
    }

    let mut new_parts = parts[..i].to_vec();
    new_parts.extend([1, m - 1]);
    new_parts.extend_from_slice(&parts[i + 1..]);
    let mut cells = Vec::with_capacity(o.cells.len() + t);
    cells.extend_from_slice(&o.cells[..i * t]);
    cells.extend(peeled.iter().cloned());
    for j in 0..t {
        let rest = o.cell(i, j).iter().zip(&peeled[j]).map(|(a, b)| a - b).collect();
        cells.push(rest);
    }
    cells.extend_from_slice(&o.cells[(i + 1) * t..]);

    OutlineLatinSquare::new(Composition(new_parts), o.col_comp.clone(), o.sym_comp.clone(), cells)
}

/// A latin square whose `(S, T, U)`-amalgamation is `o`, found by splitting
/// every row part and then every column part down to ones.
pub fn expand_outline(o: &OutlineLatinSquare) -> Result<PartialGrid, OutlineError> {
    if !o.sym_comp.is_unit() {
        return Err(OutlineError::SymbolsNotUnit);
    }
    let report = validate_outline(o);
    if !report.ok() {
        return Err(OutlineError::Invalid(report));
    }
    let mut cur = o.clone();
    while !cur.row_comp.is_unit() {
        cur = split_first_row(&cur)?;
    }
    let mut t = cur.transpose();
    while !t.row_comp.is_unit() {
        t = split_first_row(&t)?;
    }
    cur = t.transpose();

    let n = o.order();
    let rows: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let syms = cur.cell_symbols(i, j);
                    debug_assert_eq!(syms.len(), 1);
                    syms[0]
                })
                .collect()
        })
        .collect();
    Ok(PartialGrid::latin_from_rows(n, &rows).expect("order already bounded"))
}

/// Text form used by tests and fixtures:
///
/// ```text
/// outline v1
/// S: 2 2
/// T: 2 2
/// U: 1 1 1 1
/// 1,2,3,4 | 1,2,3,4
/// 1,2,3,4 | 1,2,3,4
/// ```
pub fn serialize_outline(o: &OutlineLatinSquare) -> String {
    let mut out = format!("outline v1\nS: {}\nT: {}\nU: {}\n", o.row_comp, o.col_comp, o.sym_comp);
    for i in 0..o.row_comp.len() {
        let cells: Vec<String> = (0..o.col_comp.len())
            .map(|j| {
                let syms: Vec<String> = o.cell_symbols(i, j).iter().map(usize::to_string).collect();
                syms.join(",")
            })
            .collect();
        out.push_str(&cells.join(" | "));
        out.push('\n');
    }
    out
}

pub fn parse_outline(text: &str) -> Result<OutlineLatinSquare, OutlineError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    let err = |line: usize, message: &str| OutlineError::Parse {
        line,
        message: message.to_string(),
    };
    let (line, magic) = lines.next().ok_or_else(|| err(0, "empty input"))?;
    if magic != "outline v1" {
        return Err(err(line, "expected `outline v1`"));
    }
    let mut comps = Vec::new();
    for tag in ["S:", "T:", "U:"] {
        let (line, body) = lines.next().ok_or_else(|| err(0, "missing composition"))?;
        let rest = body.strip_prefix(tag).ok_or_else(|| err(line, "expected composition line"))?;
        let parts = rest
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<Vec<usize>, _>>()
            .map_err(|_| err(line, "bad composition part"))?;
        comps.push(Composition::new(parts)?);
    }
    let [row_comp, col_comp, sym_comp]: [Composition; 3] = comps.try_into().expect("three compositions");
    let mut cells = Vec::new();
    for _ in 0..row_comp.len() {
        let (line, body) = lines.next().ok_or_else(|| err(0, "missing outline rows"))?;
        let row: Vec<&str> = body.split('|').collect();
        if row.len() != col_comp.len() {
            return Err(err(line, "wrong number of cells"));
        }
        for cell in row {
            let cell = cell.trim();
            let syms = if cell.is_empty() {
                Vec::new()
            } else {
                cell.split(',')
                    .map(|x| x.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| err(line, "bad symbol"))?
            };
            cells.push(syms);
        }
    }
    if let Some((line, _)) = lines.next() {
        return Err(err(line, "trailing content"));
    }
    OutlineLatinSquare::from_symbols(row_comp, col_comp, sym_comp, &cells)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square4() -> PartialGrid {
        PartialGrid::latin_from_rows(
            4,
            &[vec![1, 2, 3, 4], vec![3, 4, 1, 2], vec![2, 1, 4, 3], vec![4, 3, 2, 1]],
        )
        .unwrap()
    }

    fn comp(parts: &[usize]) -> Composition {
        Composition::new(parts.to_vec()).unwrap()
    }

    #[test]
    fn unit_compositions_give_back_the_square() {
        let l = square4();
        let u = Composition::unit(4);
        let o = amalgamate(&l, &u, &u, &u).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(o.cell_symbols(i, j), vec![l.get(i, j).unwrap()]);
            }
        }
        assert_eq!(expand_outline(&o).unwrap(), l);
    }

    #[test]
    fn single_block_counts_every_symbol_n_times() {
        let o = amalgamate(&square4(), &comp(&[4]), &comp(&[4]), &Composition::unit(4)).unwrap();
        assert_eq!(o.cell(0, 0), &[4, 4, 4, 4]);
        assert!(validate_outline(&o).ok());
    }

    #[test]
    fn two_by_two_blocks() {
        let o = amalgamate(&square4(), &comp(&[2, 2]), &comp(&[2, 2]), &Composition::unit(4)).unwrap();
        assert_eq!(o.cell_symbols(0, 0), vec![1, 2, 3, 4]);
        assert!(validate_outline(&o).ok());
    }

    #[test]
    fn broken_column_count_fails_condition_two() {
        let o = OutlineLatinSquare::from_symbols(
            comp(&[1, 1, 1]),
            comp(&[2, 1]),
            Composition::unit(3),
            &[vec![1, 2], vec![3], vec![1, 2], vec![3], vec![2, 3], vec![1]],
        )
        .unwrap();
        let report = validate_outline(&o);
        assert!(report.violations.iter().any(|v| v.kind == ViolationKind::OutlineColumn
            && v.location == vec![(1, 0)]
            && v.symbol == Some(3)
            && v.found == Some(2)));
        assert!(report.violations.iter().any(|v| v.kind == ViolationKind::OutlineColumn
            && v.location == vec![(1, 0)]
            && v.symbol == Some(2)
            && v.found == Some(0)));
    }

    #[test]
    fn short_cell_fails_condition_three() {
        let mut o = amalgamate(&square4(), &comp(&[2, 2]), &comp(&[2, 2]), &Composition::unit(4)).unwrap();
        o.cells[0][0] -= 1;
        let report = validate_outline(&o);
        assert!(report.has(ViolationKind::OutlineCell));
    }

    #[test]
    fn split_conserves_symbols() {
        let o = amalgamate(&square4(), &comp(&[2, 2]), &comp(&[1, 3]), &Composition::unit(4)).unwrap();
        let split = split_front(&o, Axis::Row).unwrap();
        assert_eq!(split.row_comp().parts(), &[1, 1, 2]);
        assert!(validate_outline(&split).ok());
        for j in 0..2 {
            let merged: Vec<usize> =
                split.cell(0, j).iter().zip(split.cell(1, j)).map(|(a, b)| a + b).collect();
            assert_eq!(merged, o.cell(0, j));
        }
        let col = split_front(&o, Axis::Column).unwrap();
        assert_eq!(col.col_comp().parts(), &[1, 1, 2]);
        assert!(validate_outline(&col).ok());
    }

    #[test]
    fn nothing_to_split() {
        let u = Composition::unit(4);
        let o = amalgamate(&square4(), &u, &u, &u).unwrap();
        assert_eq!(split_front(&o, Axis::Row), Err(OutlineError::NothingToSplit));
    }

    #[test]
    fn full_amalgam_of_order_two_expands_to_a_latin_square() {
        let o = OutlineLatinSquare::from_symbols(comp(&[2]), comp(&[2]), Composition::unit(2), &[vec![1, 1, 2, 2]])
            .unwrap();
        let l = expand_outline(&o).unwrap();
        let both = [vec![vec![1, 2], vec![2, 1]], vec![vec![2, 1], vec![1, 2]]];
        assert!(both.contains(&l.to_rows()));
        assert_eq!(amalgamate(&l, &comp(&[2]), &comp(&[2]), &Composition::unit(2)).unwrap(), o);
    }

    #[test]
    fn symbol_merging_is_not_expanded() {
        let o = amalgamate(&square4(), &comp(&[2, 2]), &comp(&[2, 2]), &comp(&[2, 2])).unwrap();
        assert!(validate_outline(&o).ok());
        assert_eq!(expand_outline(&o), Err(OutlineError::SymbolsNotUnit));
    }

    #[test]
    fn text_round_trip() {
        let o = amalgamate(&square4(), &comp(&[2, 2]), &comp(&[1, 3]), &Composition::unit(4)).unwrap();
        let text = serialize_outline(&o);
        assert!(text.starts_with("outline v1\nS: 2 2\nT: 1 3\nU: 1 1 1 1\n"));
        assert_eq!(parse_outline(&text).unwrap(), o);
    }
}
