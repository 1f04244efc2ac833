//! Command-line front end.
//!
//! Exit status: 0 on success, 1 for usage and input errors, 2 when the
//! computation itself fails (node budget exceeded, degenerate correlation,
//! unsupported geometry). Failures print one `code=<NAME> msg="..."` line on
//! stderr.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::combine::{affine_combination, combine_many, simplify, CombineBudget, DEFAULT_MAX_NODES};
use crate::error::{Error, Result};
use crate::geometry::Measure;
use crate::io::{self, Forest};
use crate::mds::{classical_mds, scatter_svg};
use crate::measures::{
    distance_matrix, forest_distance, norm_squared, scalar_mean, squared_distance, tree_correlation, tree_distance,
    tree_variance, Summation,
};
use crate::oracle::grid::{grid_integral, Combiner};
use crate::oracle::monte_carlo::monte_carlo_integral;
use crate::tree::{FeatureSchema, LeafKind, LeafValue, Tree};

#[derive(Debug, Parser)]
#[command(name = "treealgebra", version, about = "Exact algebra on decision trees and forests")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Overlay all trees of a forest into one tree (tuple leaves, or an affine combination with --weights)
    Combine(CombineArgs),
    /// Write the tree of a weighted sum of the forest's trees
    Affine(AffineArgs),
    /// L2 distance between two trees
    Dist(PairArgs),
    /// Correlation between two scalar trees
    Corr(PairArgs),
    /// Matrix of pairwise tree distances for a forest
    DistMatrix(DistMatrixArgs),
    /// L2 distance between the sums of two forests
    ForestDist(ForestDistArgs),
    /// Classical multidimensional scaling of a distance matrix
    Mds(MdsArgs),
    /// Compare exact results with the cell-grid and Monte-Carlo oracles
    OracleCheck(OracleCheckArgs),
    /// Check a tree or forest file against every tree invariant
    Validate(ValidateArgs),
    /// Convert an external forest dump into a forest file
    Import(ImportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeasureKind {
    /// Uniform on the domain box
    Uniform,
    /// Point masses read from --data
    Empirical,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    /// Probability measure to integrate against
    #[arg(long, value_enum, default_value_t = MeasureKind::Uniform)]
    pub measure: MeasureKind,
    /// Headerless CSV of data points, one per row in schema order (empirical measure)
    #[arg(long, value_name = "CSV")]
    pub data: Option<PathBuf>,
    /// Headerless CSV of point weights, normalized to sum to one (empirical measure)
    #[arg(long, value_name = "CSV")]
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// Abort when the combined tree would exceed this many nodes
    #[arg(long, value_name = "N", default_value_t = DEFAULT_MAX_NODES, value_parser = parse_positive)]
    pub max_nodes: usize,
    /// Merge sibling leaves with equal values after combining
    #[arg(long)]
    pub simplify: bool,
}

#[derive(Debug, Args)]
pub struct CombineArgs {
    /// Forest file to combine
    #[arg(long, value_name = "JSON")]
    pub forest: PathBuf,
    /// Output tree file
    #[arg(long, value_name = "JSON")]
    pub out: PathBuf,
    /// Headerless CSV of one weight per tree; produces the affine combination
    #[arg(long, value_name = "CSV")]
    pub weights: Option<PathBuf>,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Debug, Args)]
pub struct AffineArgs {
    /// Forest file to combine
    #[arg(long, value_name = "JSON")]
    pub forest: PathBuf,
    /// Headerless CSV of one weight per tree
    #[arg(long, value_name = "CSV")]
    pub weights: PathBuf,
    /// Output tree file
    #[arg(long, value_name = "JSON")]
    pub out: PathBuf,
    #[command(flatten)]
    pub budget: BudgetArgs,
}

#[derive(Debug, Args)]
pub struct PairArgs {
    /// First tree file
    #[arg(long, value_name = "JSON")]
    pub a: PathBuf,
    /// Second tree file
    #[arg(long, value_name = "JSON")]
    pub b: PathBuf,
    #[command(flatten)]
    pub measure: MeasureArgs,
}

#[derive(Debug, Args)]
pub struct DistMatrixArgs {
    /// Forest file
    #[arg(long, value_name = "JSON")]
    pub forest: PathBuf,
    /// Output CSV matrix
    #[arg(long, value_name = "CSV")]
    pub out: PathBuf,
    /// Worker threads for pairwise distances
    #[arg(long, value_name = "N", default_value_t = 1, value_parser = parse_positive)]
    pub jobs: usize,
    #[command(flatten)]
    pub measure: MeasureArgs,
}

#[derive(Debug, Args)]
pub struct ForestDistArgs {
    /// First forest file
    #[arg(long, value_name = "JSON")]
    pub f: PathBuf,
    /// Second forest file
    #[arg(long, value_name = "JSON")]
    pub g: PathBuf,
    #[command(flatten)]
    pub measure: MeasureArgs,
}

#[derive(Debug, Args)]
pub struct MdsArgs {
    /// Headerless CSV distance matrix
    #[arg(long, value_name = "CSV")]
    pub matrix: PathBuf,
    /// Number of output dimensions
    #[arg(long, value_name = "N", default_value_t = 2)]
    pub dims: usize,
    /// Output CSV of coordinates, one row per point
    #[arg(long, value_name = "CSV")]
    pub out: PathBuf,
    /// Also write a scatter plot of the first two coordinates
    #[arg(long, value_name = "SVG")]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OracleCheckArgs {
    /// Forest (or tree) file
    #[arg(long, value_name = "JSON")]
    pub forest: PathBuf,
    /// Monte-Carlo sample count
    #[arg(long, value_name = "N", default_value_t = 100_000)]
    pub samples: usize,
    /// Monte-Carlo seed
    #[arg(long, value_name = "S", env = "TREEALG_SEED", default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub measure: MeasureArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Tree or forest file
    #[arg(value_name = "JSON")]
    pub path: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Dialect {
    /// One CSV row per node
    FlatTable,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    /// Input format
    #[arg(long, value_enum, default_value_t = Dialect::FlatTable)]
    pub dialect: Dialect,
    /// Node table to import
    #[arg(long, value_name = "CSV")]
    pub table: PathBuf,
    /// Schema file (a schema object, or any tree or forest file)
    #[arg(long, value_name = "JSON")]
    pub schema: PathBuf,
    /// Output forest file
    #[arg(long, value_name = "JSON")]
    pub out: PathBuf,
}

/// Help for the program and every subcommand, as pinned by the golden test.
pub fn usage_text() -> String {
    let mut cmd = Cli::command();
    let mut out = cmd.render_long_help().to_string();
    for sub in cmd.get_subcommands_mut() {
        out.push_str("\n---\n");
        out.push_str(&sub.render_long_help().to_string());
    }
    out
}

/// Console rendering of a real: nine digits after the point.
pub fn format_number(x: f64) -> String {
    format!("{:.9}", x)
}

fn measure_for(args: &MeasureArgs, schema: &FeatureSchema) -> Result<Measure> {
    match args.measure {
        MeasureKind::Uniform => {
            if args.data.is_some() || args.weights.is_some() {
                return Err(Error::Precondition(
                    "--data and --weights need --measure empirical".into(),
                ));
            }
            Ok(Measure::UniformBox)
        }
        MeasureKind::Empirical => {
            let data = args
                .data
                .as_deref()
                .ok_or_else(|| Error::Precondition("--measure empirical needs --data".into()))?;
            io::load_empirical(schema, data, args.weights.as_deref())
        }
    }
}

fn single_tree(path: &Path) -> Result<Tree> {
    let mut forest = io::load_trees(path)?;
    if forest.trees.len() != 1 {
        return Err(Error::Precondition(format!(
            "{} holds {} trees; expected one",
            path.display(),
            forest.trees.len()
        )));
    }
    Ok(forest.trees.remove(0))
}

fn same_schema(a: &FeatureSchema, b: &FeatureSchema) -> Result<()> {
    if a != b {
        return Err(Error::SchemaMismatch("inputs are defined on different schemas".into()));
    }
    Ok(())
}

fn write_tree(path: &Path, tree: &Tree) -> Result<()> {
    io::write_atomic(path, io::tree_to_json_string(tree).as_bytes())
}

fn run_combine(
    forest: &Path,
    weights: Option<&Path>,
    out: &Path,
    budget: &BudgetArgs,
    stdout: &mut dyn Write,
) -> Result<()> {
    let forest = io::load_forest(forest)?;
    let mut b = CombineBudget::new(budget.max_nodes);
    let tree = match weights {
        Some(w) => affine_combination(&forest.trees, &io::parse_vector(&io::read_text(w)?)?, &mut b)?,
        None => combine_many(&forest.trees, &mut b)?,
    };
    let tree = if budget.simplify { simplify(&tree) } else { tree };
    write_tree(out, &tree)?;
    writeln!(stdout, "nodes={} leaves={}", tree.len(), tree.leaf_count())?;
    Ok(())
}

struct OracleLine {
    label: String,
    exact: f64,
    grid: Option<f64>,
    mc: f64,
    se: f64,
}

impl OracleLine {
    fn render(&self) -> String {
        let grid = match self.grid {
            Some(g) => format!("grid={} grid_delta={:.3e}", format_number(g), (self.exact - g).abs()),
            None => "grid=NA grid_delta=NA".to_string(),
        };
        let z = if self.se > 0.0 {
            format!("{:.3}", (self.mc - self.exact) / self.se)
        } else if self.mc == self.exact {
            "0.000".to_string()
        } else {
            "inf".to_string()
        };
        format!(
            "{} exact={} {} mc={} mc_se={:.3e} mc_z={}",
            self.label,
            format_number(self.exact),
            grid,
            format_number(self.mc),
            self.se,
            z
        )
    }
}

fn run_oracle_check(args: &OracleCheckArgs, stdout: &mut dyn Write) -> Result<()> {
    let forest = io::load_trees(&args.forest)?;
    let measure = measure_for(&args.measure, &forest.schema)?;
    let grid = |trees: &[&Tree], c: &Combiner| grid_integral(trees, c, &measure).ok();
    let mc = |trees: &[&Tree], c: &Combiner, salt: u64| {
        monte_carlo_integral(trees, c, &measure, args.samples, args.seed.wrapping_add(salt))
    };
    let mut lines = Vec::new();
    let mut salt = 0u64;
    let scalar = forest.trees.first().and_then(Tree::leaf_kind) == Some(LeafKind::Scalar);
    if scalar {
        for (i, t) in forest.trees.iter().enumerate() {
            let mean = scalar_mean(t, &measure)?;
            let centre = Tree::constant(t.schema_arc().clone(), LeafValue::Scalar(mean))?;
            let checks: [(&str, f64, Vec<&Tree>, Combiner); 3] = [
                ("mean", mean, vec![t], Combiner::RawValue),
                ("norm2", norm_squared(t, &measure)?, vec![t, t], Combiner::Product),
                (
                    "variance",
                    tree_variance(t, &measure)?,
                    vec![t, &centre],
                    Combiner::WeightedSumSquare(vec![1.0, -1.0]),
                ),
            ];
            for (name, exact, trees, combiner) in checks {
                salt += 1;
                let est = mc(&trees, &combiner, salt)?;
                lines.push(OracleLine {
                    label: format!("tree {} {}", i, name),
                    exact,
                    grid: grid(&trees, &combiner),
                    mc: est.estimate,
                    se: est.std_error,
                });
            }
        }
    }
    for i in 0..forest.trees.len() {
        for j in i + 1..forest.trees.len() {
            let (a, b) = (&forest.trees[i], &forest.trees[j]);
            salt += 1;
            let exact = squared_distance(a, b, &measure, Summation::Recursive)?;
            let est = mc(&[a, b], &Combiner::SquaredDifference, salt)?;
            lines.push(OracleLine {
                label: format!("pair {} {} dist2", i, j),
                exact,
                grid: grid(&[a, b], &Combiner::SquaredDifference),
                mc: est.estimate,
                se: est.std_error,
            });
        }
    }
    for l in &lines {
        writeln!(stdout, "{}", l.render())?;
    }
    Ok(())
}

fn execute(cli: Cli, stdout: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Combine(a) => run_combine(&a.forest, a.weights.as_deref(), &a.out, &a.budget, stdout),
        Command::Affine(a) => run_combine(&a.forest, Some(&a.weights), &a.out, &a.budget, stdout),
        Command::Dist(a) => {
            let (t1, t2) = (single_tree(&a.a)?, single_tree(&a.b)?);
            same_schema(t1.schema(), t2.schema())?;
            let m = measure_for(&a.measure, t1.schema())?;
            writeln!(stdout, "{}", format_number(tree_distance(&t1, &t2, &m)?))?;
            Ok(())
        }
        Command::Corr(a) => {
            let (t1, t2) = (single_tree(&a.a)?, single_tree(&a.b)?);
            same_schema(t1.schema(), t2.schema())?;
            let m = measure_for(&a.measure, t1.schema())?;
            writeln!(stdout, "{}", format_number(tree_correlation(&t1, &t2, &m)?))?;
            Ok(())
        }
        Command::DistMatrix(a) => {
            let forest = io::load_trees(&a.forest)?;
            let m = measure_for(&a.measure, &forest.schema)?;
            let d = distance_matrix(&forest.trees, &m, a.jobs)?;
            io::write_atomic(&a.out, io::format_matrix(&d).as_bytes())?;
            writeln!(stdout, "trees={}", forest.trees.len())?;
            Ok(())
        }
        Command::ForestDist(a) => {
            let (f, g) = (io::load_trees(&a.f)?, io::load_trees(&a.g)?);
            same_schema(&f.schema, &g.schema)?;
            let m = measure_for(&a.measure, &f.schema)?;
            writeln!(stdout, "{}", format_number(forest_distance(&f.trees, &g.trees, &m)?))?;
            Ok(())
        }
        Command::Mds(a) => {
            let d = io::parse_matrix(&io::read_text(&a.matrix)?)?;
            let e = classical_mds(&d, a.dims)?;
            io::write_atomic(&a.out, io::format_matrix(&e.coordinates).as_bytes())?;
            if let Some(svg) = &a.svg {
                io::write_atomic(svg, scatter_svg(&e.coordinates).as_bytes())?;
            }
            writeln!(stdout, "stress={}", format_number(e.stress))?;
            if e.effective_dims < a.dims {
                writeln!(stdout, "effective_dims={}", e.effective_dims)?;
            }
            Ok(())
        }
        Command::OracleCheck(a) => run_oracle_check(&a, stdout),
        Command::Validate(a) => {
            let forest = io::load_trees(&a.path)?;
            writeln!(stdout, "ok trees={}", forest.trees.len())?;
            Ok(())
        }
        Command::Import(a) => {
            let schema = std::sync::Arc::new(io::schema_from_json_str(&io::read_text(&a.schema)?)?);
            let forest: Forest = match a.dialect {
                Dialect::FlatTable => io::import_flat_table(&io::read_text(&a.table)?, schema)?,
            };
            io::save_forest(&a.out, &forest)?;
            writeln!(stdout, "trees={}", forest.trees.len())?;
            Ok(())
        }
    }
}

fn escape(msg: &str) -> String {
    msg.replace('\\', "\\\\").replace('"', "\\\"").replace('\n', " ")
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", rendered);
                    0
                }
                _ => {
                    let first = rendered
                        .lines()
                        .next()
                        .unwrap_or("usage error")
                        .trim_start_matches("error: ");
                    let _ = writeln!(stderr, "code=USAGE msg=\"{}\"", escape(first));
                    let _ = write!(stderr, "{}", rendered);
                    1
                }
            };
        }
    };
    match execute(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "code={} msg=\"{}\"", e.code(), escape(&e.to_string()));
            if e.is_computation_error() {
                2
            } else {
                1
            }
        }
    }
}

fn parse_positive(s: &str) -> std::result::Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}
