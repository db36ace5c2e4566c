//! `navsim` command line: run scenario suites, plan on map files, dump
//! frontiers and skeletons, summarise results.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use navsim_core::commonsense::CoOccurrenceTable;
use navsim_core::frontier::{frontiers, DEFAULT_MIN_CLUSTER_SIZE};
use navsim_core::grid::{traversable_mask, Cell, CostMap, Grid, Point, Pose};
use navsim_core::harness::{
    format_summary, read_results_csv, run_suite, scenario_files, summarize_rows, write_results_csv, SuiteOverrides,
};
use navsim_core::mapio::{load_map, write_pgm};
use navsim_core::planner::{plan, PlannerKind};
use navsim_core::sim::{PerceptionSpec, Scenario, ValidatorMode};
use navsim_core::skeleton::thin;
use navsim_core::worlds;

const RESULTS_FILE: &str = "results.csv";

/// Exit status for invalid arguments, unreadable inputs and bad configs.
const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 1;

#[derive(Parser)]
#[command(name = "navsim", version, about = "Object-goal navigation planning and grid-world simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Planner {
    Medial,
    Fmm,
}

impl From<Planner> for PlannerKind {
    fn from(p: Planner) -> Self {
        match p {
            Planner::Medial => PlannerKind::Medial,
            Planner::Fmm => PlannerKind::Fmm,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Perception {
    Mock,
    Replay,
    Wire,
}

#[derive(Clone, Copy, ValueEnum)]
enum Validator {
    Mock,
    Agree,
    Disagree,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario file or every `*.json` scenario in a directory.
    Run {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        planner: Option<Planner>,
        #[arg(long, value_enum)]
        perception: Option<Perception>,
        /// Perception service base URL, for `--perception wire`.
        #[arg(long)]
        endpoint: Option<String>,
        /// Recorded exchanges, for `--perception replay`.
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Validator behaviour under mock perception.
        #[arg(long, value_enum)]
        validator: Option<Validator>,
        #[arg(long)]
        max_steps: Option<u32>,
        /// Co-occurrence table (`goal,context,affinity` lines).
        #[arg(long)]
        cooc: Option<PathBuf>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Plan between two metric points; writes the path as CSV and an
    /// annotated graymap.
    Plan {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, value_parser = parse_point)]
        start: Point,
        #[arg(long, value_parser = parse_point)]
        goal: Point,
        #[arg(long, value_enum, default_value = "medial")]
        planner: Planner,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Print frontier clusters of a map as CSV.
    Frontiers {
        #[arg(long)]
        map: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MIN_CLUSTER_SIZE)]
        min_size: usize,
    },
    /// Summarise a results CSV (or the one inside a results directory).
    Eval {
        #[arg(long)]
        results: PathBuf,
    },
    /// Write the skeleton of a map's traversable space as a graymap.
    Skeleton {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the bundled scenario worlds.
    Worlds {
        #[arg(long, default_value = "worlds")]
        out: PathBuf,
    },
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn config(error: anyhow::Error) -> Failure {
    Failure { code: EXIT_CONFIG, error }
}

fn runtime(error: anyhow::Error) -> Failure {
    Failure { code: EXIT_RUNTIME, error }
}

fn parse_point(s: &str) -> Result<Point, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected `x,y`, got `{s}`"))?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|_| format!("not a number: `{v}`"));
    Ok(Point::new(num(x)?, num(y)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), Failure> {
    match cmd {
        Command::Run {
            scenario,
            seed,
            planner,
            perception,
            endpoint,
            transcript,
            validator,
            max_steps,
            cooc,
            out,
        } => {
            let perception = match perception {
                None => None,
                Some(Perception::Mock) => Some(PerceptionSpec::default()),
                Some(Perception::Replay) => Some(PerceptionSpec::Replay {
                    transcript: absolute(transcript.ok_or_else(|| config(anyhow!("--perception replay needs --transcript")))?)?,
                }),
                Some(Perception::Wire) => Some(PerceptionSpec::Wire {
                    endpoint: endpoint.ok_or_else(|| config(anyhow!("--perception wire needs --endpoint")))?,
                }),
            };
            let table = match cooc {
                Some(p) => Some(CoOccurrenceTable::load(&p).map_err(|e| config(e.into()))?),
                None => None,
            };
            let overrides = SuiteOverrides {
                seed,
                planner: planner.map(Into::into),
                perception,
                validator: validator.map(|v| match v {
                    Validator::Mock => ValidatorMode::Mock,
                    Validator::Agree => ValidatorMode::Agree,
                    Validator::Disagree => ValidatorMode::Disagree,
                }),
                max_steps,
                table,
            };
            run(&scenario, &overrides, &out)
        }
        Command::Plan {
            map,
            start,
            goal,
            planner,
            out,
        } => plan_cmd(&map, start, goal, planner.into(), &out),
        Command::Frontiers { map, min_size } => {
            let cm = load_map(&map).map_err(|e| config(e.into()))?;
            let mut text = String::from("id,size,centroid_x,centroid_y,target_x,target_y\n");
            for (i, f) in frontiers(&cm, min_size).iter().enumerate() {
                let t = cm.meta.grid_to_world(f.target_cell(&cm.meta));
                text += &format!("{i},{},{},{},{},{}\n", f.size, f.centroid.x, f.centroid.y, t.x, t.y);
            }
            std::io::stdout().write_all(text.as_bytes()).map_err(|e| runtime(e.into()))
        }
        Command::Eval { results } => {
            let path = if results.is_dir() { results.join(RESULTS_FILE) } else { results };
            let rows = read_results_csv(&path).map_err(|e| config(e.into()))?;
            let summary = summarize_rows(&rows).map_err(|e| config(e.into()))?;
            print!("{}", format_summary(&summary));
            Ok(())
        }
        Command::Skeleton { map, out } => {
            let cm = load_map(&map).map_err(|e| config(e.into()))?;
            let sk = thin(&traversable_mask(&cm));
            let gray = Grid::from_fn(cm.meta.width, cm.meta.height, |c| match (sk.contains(c), cm.is_lethal(c)) {
                (true, _) => 255,
                (false, true) => 0,
                (false, false) => 96,
            });
            write_pgm(&out, &gray).map_err(|e| runtime(e.into()))?;
            println!("{} skeleton cells -> {}", sk.len(), out.display());
            Ok(())
        }
        Command::Worlds { out } => {
            fs::create_dir_all(&out).map_err(|e| runtime(e.into()))?;
            let files = worlds::write_bundled(&out).map_err(|e| runtime(e.into()))?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(())
        }
    }
}

/// Relative override paths are taken from the working directory, not the
/// scenario's directory.
fn absolute(p: PathBuf) -> Result<PathBuf, Failure> {
    std::path::absolute(&p).with_context(|| format!("{}", p.display())).map_err(config)
}

fn run(scenario: &Path, overrides: &SuiteOverrides, out: &Path) -> Result<(), Failure> {
    let paths = if scenario.is_dir() {
        scenario_files(scenario).map_err(|e| config(e.into()))?
    } else {
        vec![scenario.to_path_buf()]
    };
    if paths.is_empty() {
        return Err(config(anyhow!("no scenario files in {}", scenario.display())));
    }
    for p in &paths {
        let mut s = Scenario::load(p).map_err(|e| config(e.into()))?;
        overrides.apply(&mut s);
        s.validate().map_err(|e| config(anyhow!("{}: {e}", p.display())))?;
    }
    let rows = run_suite(&paths, overrides);
    for r in &rows {
        if let Some(e) = &r.error {
            eprintln!("{}: {e}", r.world);
        }
    }
    fs::create_dir_all(out)
        .with_context(|| format!("{}", out.display()))
        .map_err(runtime)?;
    let csv = out.join(RESULTS_FILE);
    write_results_csv(&csv, &rows).map_err(|e| runtime(e.into()))?;
    let summary = summarize_rows(&rows).map_err(|e| runtime(e.into()))?;
    print!("{}", format_summary(&summary));
    println!("results -> {}", csv.display());
    Ok(())
}

fn plan_cmd(map: &Path, start: Point, goal: Point, kind: PlannerKind, out: &Path) -> Result<(), Failure> {
    let cm = load_map(map).map_err(|e| config(e.into()))?;
    for (name, p) in [("start", start), ("goal", goal)] {
        cm.meta
            .world_to_grid(p)
            .map_err(|e| config(anyhow!("{name} ({}, {}): {e}", p.x, p.y)))?;
    }
    let path = plan(&Pose::new(start.x, start.y, 0.0), goal, &cm, kind).map_err(|e| runtime(e.into()))?;
    fs::create_dir_all(out)
        .with_context(|| format!("{}", out.display()))
        .map_err(runtime)?;
    let cells = path.cells();
    let mut text = String::from("x,y\n");
    for c in &cells {
        let p = cm.meta.grid_to_world(*c);
        text += &format!("{},{}\n", p.x, p.y);
    }
    let csv = out.join("path.csv");
    fs::write(&csv, text)
        .with_context(|| format!("{}", csv.display()))
        .map_err(runtime)?;
    let pgm = out.join("path.pgm");
    write_pgm(&pgm, &annotate(&cm, &cells)).map_err(|e| runtime(e.into()))?;
    println!(
        "{} cells, {:.3} m -> {}, {}",
        cells.len(),
        path.metric_length,
        csv.display(),
        pgm.display()
    );
    Ok(())
}

/// Free space white, obstacles black, unknown light grey, path dark grey.
fn annotate(cm: &CostMap, path: &[Cell]) -> Grid<u8> {
    let mut g = Grid::from_fn(cm.meta.width, cm.meta.height, |c| {
        if cm.is_lethal(c) {
            0
        } else if cm.is_unknown(c) {
            205
        } else {
            255 - cm.get(c) / 2
        }
    });
    for &c in path {
        g[c] = 64;
    }
    g
}
