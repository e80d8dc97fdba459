//! Completion and Hall checks for partial latin and (p,q)-Sudoku rectangles.
//!
//! Coordinates are 0-based throughout the API; symbols are `1..=n` with
//! `n = pq`. The text formats and the command line are 1-based.
//!
//! - [`grid`]: partial grids, validation, the `sudoku v1` text format.
//! - [`bipartite`]: multigraphs, equitable edge colourings, matchings and
//!   Hall violators.
//! - [`outline`]: compositions, outline latin squares, amalgamation and
//!   expansion.
//! - [`completion`]: the constructive completion of filled rectangles and
//!   its obstructions.
//! - [`hall`]: list assignments, Hall inequalities and the Ryser counts.
//! - [`fixtures`]: the search oracle and instance generators.
//! - [`cli`]: the `sudoku-ryser` command line.

pub mod bipartite;
pub mod cli;
pub mod completion;
pub mod fixtures;
pub mod grid;
pub mod hall;
pub mod outline;
