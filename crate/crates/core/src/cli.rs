//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a requested check failed, 2 invalid input,
//! 3 solver failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::geometry::CoordinateSystem;
use crate::io::{read_points_file, write_cloud, PointTable};
use crate::measures::{sample, MeasureSpec, WeightedPointCloud};
use crate::partition::PartitionTree;
use crate::solver::{Solver, SolverConfig};
use crate::svg;
use crate::verify::{self, CheckReport, VerificationReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "yaoyao", version, about = "Yao-Yao equipartitions of weighted point clouds")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw points from a measure spec (JSON file, or inline JSON) into CSV.
    Sample {
        #[arg(long)]
        spec: String,
        #[arg(short = 'n', long = "count")]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compute the center (printed in ambient coordinates) and partition.
    Center {
        points: PathBuf,
        /// Coordinate system JSON: {"matrix": [[...]], "offset": [...]}.
        #[arg(long)]
        system: Option<PathBuf>,
        /// Solver configuration JSON.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Where to write the partition JSON.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Worker threads; 1 runs sequentially. Output does not depend on it.
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run property checks of a partition against a point cloud.
    Verify {
        partition: PathBuf,
        points: PathBuf,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [
            CheckKind::Equipartition, CheckKind::Prefix, CheckKind::Avoidance, CheckKind::Depth,
        ])]
        checks: Vec<CheckKind>,
        /// Random hyperplanes (or samples per region) for randomized checks.
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Relative mass tolerance for the equipartition checks.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Where to write the JSON report (stdout if absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Render a planar partition to SVG.
    Plot {
        partition: PathBuf,
        points: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CheckKind {
    Equipartition,
    Prefix,
    Avoidance,
    Depth,
    Representations,
}

/// Parses `args` (including the program name) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) if e.is_solver_failure() => {
            eprintln!("error: solver failed: {e}");
            eprintln!("trace: {e:?}");
            EXIT_SOLVER
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INPUT
        }
    }
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Sample { spec, n, seed, output } => {
            let text = if spec.trim_start().starts_with('{') {
                spec
            } else {
                fs::read_to_string(&spec)?
            };
            let cloud = sample(&MeasureSpec::from_json(&text)?, n, seed)?;
            match output {
                Some(path) => write_cloud(fs::File::create(path)?, &cloud)?,
                None => write_cloud(std::io::stdout().lock(), &cloud)?,
            }
            Ok(EXIT_OK)
        }
        Command::Center {
            points,
            system,
            config,
            output,
            threads,
        } => {
            let table = read_points_file(&points)?;
            let system = match system {
                Some(p) => serde_json::from_str::<CoordinateSystem>(&fs::read_to_string(p)?)?,
                None => CoordinateSystem::standard(table.dim),
            };
            let cfg = match config {
                Some(p) => SolverConfig::from_json(&fs::read_to_string(p)?)?,
                None => SolverConfig::default(),
            };
            let cloud = cloud_in(&system, &table)?;
            let tree = partition(&cloud, &system, cfg, threads)?;
            let center = tree.center_ambient();
            println!("{}", center.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" "));
            if let Some(path) = output {
                write_text(&path, &tree.to_json()?)?;
            }
            Ok(EXIT_OK)
        }
        Command::Verify {
            partition,
            points,
            checks,
            count,
            seed,
            tol,
            output,
        } => {
            let tree = PartitionTree::from_json(&fs::read_to_string(partition)?)?;
            let table = read_points_file(&points)?;
            let cloud = cloud_in(tree.system(), &table)?;
            let reports = checks
                .iter()
                .map(|kind| run_check(*kind, &tree, &cloud, count, seed, tol))
                .collect::<Result<Vec<CheckReport>>>()?;
            let report = VerificationReport::new(reports);
            for c in &report.checks {
                eprintln!("{} {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
            }
            let json = serde_json::to_string_pretty(&report)?;
            match output {
                Some(path) => write_text(&path, &json)?,
                None => println!("{json}"),
            }
            Ok(if report.pass { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
        Command::Plot {
            partition,
            points,
            output,
        } => {
            let tree = PartitionTree::from_json(&fs::read_to_string(partition)?)?;
            let table = read_points_file(&points)?;
            write_text(&output, &svg::render(&tree, &table.points)?)?;
            Ok(EXIT_OK)
        }
    }
}

fn cloud_in(system: &CoordinateSystem, table: &PointTable) -> Result<WeightedPointCloud> {
    if system.dim() != table.dim {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            got: table.dim,
        });
    }
    WeightedPointCloud::from_ambient(system, &table.points, &table.weights)
}

fn partition(
    cloud: &WeightedPointCloud,
    system: &CoordinateSystem,
    cfg: SolverConfig,
    threads: Option<usize>,
) -> Result<PartitionTree> {
    match threads {
        None | Some(1) => Solver::new(cfg)?.partition(cloud, system),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::InvalidInput(format!("cannot start {t} threads: {e}")))?;
            let solver = Solver::new(cfg)?.with_parallelism(true);
            pool.install(|| solver.partition(cloud, system))
        }
    }
}

fn run_check(
    kind: CheckKind,
    tree: &PartitionTree,
    cloud: &WeightedPointCloud,
    count: usize,
    seed: u64,
    tol: f64,
) -> Result<CheckReport> {
    match kind {
        CheckKind::Equipartition => verify::check_equipartition(tree, cloud, tol),
        CheckKind::Prefix => verify::check_prefix_masses(tree, cloud, tol),
        CheckKind::Avoidance => verify::check_avoidance(tree, Some(cloud), count, seed),
        CheckKind::Depth => verify::check_depth(tree, cloud, count, seed),
        CheckKind::Representations => verify::check_representations(tree, count, seed),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        f.write_all(b"\n")?;
    }
    Ok(())
}
