//! The `sudoku v1` grid text format.
//!
//! ```text
//! sudoku v1
//! p q rows cols
//! <rows lines of cols tokens: a symbol in 1..=pq or `.`>
//! [partition
//!  <rows lines of cols part ids in 1..=pq>]
//! ```
//!
//! Blank lines are ignored. A grid with zero columns has no body lines.

use thiserror::Error;

use super::{GridError, PartialGrid, SudokuGeometry};

const MAGIC: &str = "sudoku v1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: expected `{MAGIC}` header")]
    BadMagic { line: usize },
    #[error("line {line}: expected `p q rows cols`")]
    BadDimensions { line: usize },
    #[error("line {line}: expected {expected} tokens, found {found}")]
    WrongTokenCount {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}: token `{token}` is neither an integer nor `.`")]
    BadToken { line: usize, token: String },
    #[error("line {line}: symbol {symbol} outside 1..={n}")]
    SymbolOutOfRange { line: usize, symbol: usize, n: usize },
    #[error("unexpected end of input: missing {0}")]
    Truncated(&'static str),
    #[error("line {line}: unexpected trailing content")]
    TrailingContent { line: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

pub fn parse_grid(text: &str) -> Result<PartialGrid, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (line, magic) = lines.next().ok_or(ParseError::Truncated("header"))?;
    if magic.split_whitespace().collect::<Vec<_>>().join(" ") != MAGIC {
        return Err(ParseError::BadMagic { line });
    }

    let (line, dims) = lines.next().ok_or(ParseError::Truncated("dimensions"))?;
    let dims: Vec<usize> = dims
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| ParseError::BadDimensions { line })?;
    let [p, q, rows, cols] = dims[..] else {
        return Err(ParseError::BadDimensions { line });
    };
    let geometry = SudokuGeometry::new(p, q)?;
    let n = geometry.n();
    let mut grid = PartialGrid::new(geometry, rows, cols)?;

    if cols > 0 {
        for r in 0..rows {
            let (line, body) = lines.next().ok_or(ParseError::Truncated("grid rows"))?;
            let tokens = split_row(line, body, cols)?;
            for (c, tok) in tokens.into_iter().enumerate() {
                let value = match tok {
                    "." => None,
                    t => Some(parse_symbol(line, t, n)?),
                };
                grid.set(r, c, value);
            }
        }
    }

    if let Some((line, marker)) = lines.next() {
        if marker != "partition" {
            return Err(ParseError::TrailingContent { line });
        }
        let mut partition = Vec::with_capacity(rows);
        for _ in 0..rows {
            let (line, body) = lines.next().ok_or(ParseError::Truncated("partition rows"))?;
            let ids = split_row(line, body, cols)?
                .into_iter()
                .map(|t| parse_symbol(line, t, n))
                .collect::<Result<Vec<_>, _>>()?;
            partition.push(ids);
        }
        grid = grid.with_partition(&partition)?;
    }

    if let Some((line, _)) = lines.next() {
        return Err(ParseError::TrailingContent { line });
    }
    Ok(grid)
}

fn split_row(line: usize, body: &str, expected: usize) -> Result<Vec<&str>, ParseError> {
    let tokens: Vec<&str> = body.split_whitespace().collect();
    if tokens.len() != expected {
        return Err(ParseError::WrongTokenCount {
            line,
            expected,
            found: tokens.len(),
        });
    }
    Ok(tokens)
}

fn parse_symbol(line: usize, token: &str, n: usize) -> Result<usize, ParseError> {
    let symbol: usize = token.parse().map_err(|_| ParseError::BadToken {
        line,
        token: token.to_string(),
    })?;
    if symbol == 0 || symbol > n {
        return Err(ParseError::SymbolOutOfRange { line, symbol, n });
    }
    Ok(symbol)
}

/// Canonical text: single spaces between tokens, `\n` line endings.
pub fn serialize_grid(grid: &PartialGrid) -> String {
    let g = grid.geometry();
    let mut out = format!("{MAGIC}\n{} {} {} {}\n", g.p(), g.q(), grid.rows(), grid.cols());
    if grid.cols() > 0 {
        for r in 0..grid.rows() {
            let row: Vec<String> = (0..grid.cols())
                .map(|c| grid.get(r, c).map_or_else(|| ".".to_string(), |v| v.to_string()))
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    }
    if let Some(partition) = grid.partition() {
        out.push_str("partition\n");
        for row in partition.chunks(grid.cols()) {
            let ids: Vec<String> = row.iter().map(usize::to_string).collect();
            out.push_str(&ids.join(" "));
            out.push('\n');
        }
    }
    out
}
