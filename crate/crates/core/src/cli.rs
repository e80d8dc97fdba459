//! Command-line front end. Results go to stdout (grids in the `sudoku v1`
//! format), diagnostics to stderr.
//!
//! Exit codes: 0 completable, holds or valid; 1 incompletable, fails or
//! invalid; 2 usage, I/O or format error; 3 gave up at a gate or limit.

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};

use crate::completion::{complete, matching_criterion, EdgeRule, Verdict};
use crate::fixtures::{
    brute_force_complete, gen_evans_big, gen_evans_small, gen_fig6, gen_random_rectangle, Fig6Variant, Outcome,
    DEFAULT_NODE_LIMIT,
};
use crate::grid::{parse_grid, serialize_grid, validate_partial, Flavor, PartialGrid};
use crate::hall::{hall_condition, ryser_counts, DEFAULT_GATE};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_GAVE_UP: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "sudoku-ryser", version, about = "Complete and check partial Sudoku and latin rectangles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Complete a grid and print the square.
    Complete {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
        /// Node budget for the search method.
        #[arg(long, default_value_t = DEFAULT_NODE_LIMIT)]
        limit: u64,
    },
    /// Check a necessary or sufficient condition for completability.
    #[command(group(ArgGroup::new("condition").required(true).args(["ryser", "hall", "matchings"])))]
    Check {
        file: PathBuf,
        /// Symbol counts of a filled rectangle against r + s - n.
        #[arg(long)]
        ryser: bool,
        /// Hall's Condition over the empty cells.
        #[arg(long)]
        hall: bool,
        /// Saturating matchings of every side and bottom graph.
        #[arg(long)]
        matchings: bool,
        #[arg(long, value_enum, requires = "hall")]
        flavor: Option<FlavorArg>,
        /// Most empty cells the Hall check will enumerate subsets of.
        #[arg(long, default_value_t = DEFAULT_GATE, requires = "hall")]
        gate: usize,
    },
    /// Print a generated grid.
    #[command(subcommand)]
    Gen(Generator),
    /// Validate a grid.
    Verify { file: PathBuf },
}

#[derive(Subcommand, Debug)]
enum Generator {
    /// p + q - 1 cells that cannot be completed.
    EvansSmall {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        q: usize,
    },
    /// Filled big cells blocking the rest of a (k,k) square.
    EvansBig {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        i: usize,
    },
    /// n cells of a latin square of order n that cannot be completed.
    Fig6 {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        x: usize,
        #[arg(long, value_enum)]
        variant: VariantArg,
    },
    /// A seeded random filled rectangle.
    Random {
        #[arg(long)]
        p: usize,
        #[arg(long)]
        q: usize,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        s: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Method {
    /// Constructive completion for rectangles, search otherwise.
    Auto,
    /// Constructive completion of a rectangle whose sides are multiples of p and q.
    #[value(name = "thm2")]
    Divisible,
    /// Constructive completion of any filled rectangle.
    #[value(name = "thm3")]
    General,
    /// Exhaustive search.
    Brute,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FlavorArg {
    Latin,
    Sudoku,
    Gerechte,
}

impl From<FlavorArg> for Flavor {
    fn from(f: FlavorArg) -> Self {
        match f {
            FlavorArg::Latin => Flavor::Latin,
            FlavorArg::Sudoku => Flavor::Sudoku,
            FlavorArg::Gerechte => Flavor::Gerechte,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum VariantArg {
    Column,
    Diagonal,
}

impl From<VariantArg> for Fig6Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Column => Fig6Variant::Column,
            VariantArg::Diagonal => Fig6Variant::Diagonal,
        }
    }
}

/// A failure that maps straight to an exit code.
struct Failure {
    code: i32,
    message: String,
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

type Exit = Result<i32, Failure>;

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.command {
        Command::Complete { file, method, limit } => read(&file).and_then(|g| run_complete(&g, method, limit)),
        Command::Check {
            file,
            ryser,
            hall,
            flavor,
            gate,
            ..
        } => read(&file).and_then(|g| {
            if ryser {
                run_ryser(&g)
            } else if hall {
                run_hall(&g, flavor.map_or(g.flavor(), Flavor::from), gate)
            } else {
                run_matchings(&g)
            }
        }),
        Command::Gen(generator) => run_gen(generator),
        Command::Verify { file } => read(&file).map(|g| {
            let report = validate_partial(&g);
            println!("{report}");
            if report.ok() {
                EXIT_OK
            } else {
                EXIT_FAIL
            }
        }),
    };
    result.unwrap_or_else(|f| {
        eprintln!("error: {}", f.message);
        f.code
    })
}

fn read(path: &PathBuf) -> Result<PartialGrid, Failure> {
    let text = fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    parse_grid(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// The filled top-left rectangle of `grid`, if its filled cells form one.
/// A grid without empty cells is its own rectangle.
fn filled_rectangle(grid: &PartialGrid) -> Option<PartialGrid> {
    let (mut rows, mut cols) = (0, 0);
    for r in 0..grid.rows() {
        for c in 0..grid.cols() {
            if grid.get(r, c).is_some() {
                rows = rows.max(r + 1);
                cols = cols.max(c + 1);
            }
        }
    }
    let rect = grid.truncate(rows, cols);
    let outside = grid.filled_count() - rect.filled_count();
    (rect.is_full() && outside == 0).then_some(rect)
}

fn print_verdict(verdict: Verdict) -> i32 {
    match verdict {
        Verdict::Completable(square) => {
            print!("{}", serialize_grid(&square));
            EXIT_OK
        }
        Verdict::Incompletable(o) => {
            eprintln!("incompletable: {o}");
            EXIT_FAIL
        }
    }
}

fn run_complete(grid: &PartialGrid, method: Method, limit: u64) -> Exit {
    let rect = if grid.flavor() == Flavor::Gerechte {
        None
    } else {
        filled_rectangle(grid)
    };
    match (method, rect) {
        (Method::Brute, _) | (Method::Auto, None) => {
            let result = brute_force_complete(&grid.embed(), limit);
            eprintln!("nodes expanded: {}", result.nodes_expanded);
            Ok(match result.outcome {
                Outcome::Found => {
                    print!("{}", serialize_grid(result.square.as_ref().expect("found squares are kept")));
                    EXIT_OK
                }
                Outcome::Incompletable => {
                    eprintln!("incompletable: search exhausted");
                    EXIT_FAIL
                }
                Outcome::GaveUp => {
                    eprintln!("gave up after {limit} nodes");
                    EXIT_GAVE_UP
                }
            })
        }
        (Method::Divisible, Some(rect)) => {
            let g = rect.geometry();
            if rect.rows() % g.p() != 0 || rect.cols() % g.q() != 0 {
                return Err(usage(format!(
                    "thm2 needs p | r and q | s, got a {}x{} rectangle for {g}",
                    rect.rows(),
                    rect.cols()
                )));
            }
            Ok(print_verdict(complete(&rect)))
        }
        (_, Some(rect)) => Ok(print_verdict(complete(&rect))),
        (_, None) => Err(usage("the filled cells do not form a top-left rectangle; use --method brute")),
    }
}

fn run_ryser(grid: &PartialGrid) -> Exit {
    let rect = filled_rectangle(grid).ok_or_else(|| usage("the filled cells do not form a top-left rectangle"))?;
    let report = validate_partial(&rect.with_flavor(Flavor::Latin).expect("latin view"));
    if !report.ok() {
        println!("{report}");
        return Ok(EXIT_FAIL);
    }
    let counts = ryser_counts(&rect, grid.n());
    let failing = counts.failing();
    for &k in &failing {
        println!("symbol {k}: N={} < {}", counts.counts[k - 1], counts.bound);
    }
    if failing.is_empty() {
        println!("every symbol occurs at least {} times", counts.bound.max(0));
        Ok(EXIT_OK)
    } else {
        Ok(EXIT_FAIL)
    }
}

fn run_hall(grid: &PartialGrid, flavor: Flavor, gate: usize) -> Exit {
    let report = hall_condition(grid, flavor, gate).map_err(|e| usage(e.to_string()))?;
    if report.gave_up {
        eprintln!("gave up: more than {gate} empty cells");
        return Ok(EXIT_GAVE_UP);
    }
    if let Some(w) = report.witness {
        let cells: Vec<String> = w.cells.iter().map(|(r, c)| format!("({},{})", r + 1, c + 1)).collect();
        println!("fails: {} < {} on cells {}", w.lhs, w.size, cells.join(" "));
        return Ok(EXIT_FAIL);
    }
    println!("holds: {} subsets checked", report.subsets_checked);
    Ok(EXIT_OK)
}

fn run_matchings(grid: &PartialGrid) -> Exit {
    let rect = filled_rectangle(grid).ok_or_else(|| usage("the filled cells do not form a top-left rectangle"))?;
    let criterion = matching_criterion(&rect, EdgeRule::BigCellAware).map_err(|e| usage(e.to_string()))?;
    if criterion.checked.is_empty() {
        println!("p and q divide the sides: no side or bottom graphs");
    }
    for source in &criterion.checked {
        match criterion.failures.iter().find(|(s, _)| s == source) {
            Some((_, v)) => println!("{source}: {v}"),
            None => println!("{source}: saturated"),
        }
    }
    Ok(if criterion.holds() { EXIT_OK } else { EXIT_FAIL })
}

fn run_gen(generator: Generator) -> Exit {
    let grid = match generator {
        Generator::EvansSmall { p, q } => gen_evans_small(p, q),
        Generator::EvansBig { k, i } => gen_evans_big(k, i),
        Generator::Fig6 { n, x, variant } => gen_fig6(n, x, variant.into()),
        Generator::Random { p, q, r, s, seed } => gen_random_rectangle(p, q, r, s, seed),
    }
    .map_err(|e| usage(e.to_string()))?;
    print!("{}", serialize_grid(&grid));
    Ok(EXIT_OK)
}
