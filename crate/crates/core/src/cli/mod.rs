//! Batch front end behind the `aloe` binary.
//!
//! Exit codes: 0 success, 1 invalid input, 2 infeasible deterministic
//! constraint, 3 empty mixture (the union has probability 0), 4 verification
//! failure.

mod report;
mod verify;

pub use report::{CsvRow, Report};
pub use verify::{run_checks, Check};

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::error;
use serde::Serialize;

use crate::benchmarks::{run_highdim, run_polygon, AngleSet, HighDimSpec, PolygonRow, PolygonSpec};
use crate::error::{AloeError, Result};
use crate::estimator::{estimate_with, AloeEstimate, EstimateOptions, DEFAULT_BLOCK_SIZE};
use crate::events::{load_problem, EventSystem, HalfSpaceProblem};
use crate::grid::{to_halfspace_problem, GridCase, GridModel, GridProblem};
use crate::stats::RandomStream;

/// Seed used when neither `--seed` nor `ALOE_SEED` is given.
pub const DEFAULT_SEED: u64 = 20_170_301;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_EMPTY: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "aloe",
    version,
    about = "Probability that at least one rare Gaussian event occurs"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Clone)]
pub struct CommonArgs {
    /// Random seed.
    #[arg(long, global = true, env = "ALOE_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Samples per estimate.
    #[arg(long, short = 'n', global = true, default_value_t = 10_000,
          value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    /// Independent replications.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub reps: u64,
    /// Samples per work unit; results do not depend on it.
    #[arg(long, global = true, default_value_t = DEFAULT_BLOCK_SIZE,
          value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    pub block_size: usize,
    /// Worker threads (default: all cores); results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long, short = 'o', global = true)]
    pub output: Option<PathBuf>,
    /// Omit the generation time from JSON reports.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
    /// Events with threshold above this are left out of the mixture.
    #[arg(long, global = true, default_value_t = 38.0)]
    pub drop_below: f64,
    /// Add the probability of dropped events to the estimate and union bound.
    #[arg(long, global = true)]
    pub add_dropped_to_bound: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a half-space union read from a JSON problem file.
    Estimate {
        /// Problem file: `{"d","omega","tau"}` or `{"eta","sigma","gamma","kappa"}`.
        #[arg(long, short = 'i')]
        input: PathBuf,
    },
    /// Circumscribed-polygon benchmark with its sandwich reference.
    Polygon {
        /// Number of sides.
        #[arg(long = "J", short = 'J', default_value_t = 360)]
        j: usize,
        /// Inscribed radius; several values may be given.
        #[arg(long, value_delimiter = ',', default_values_t = [6.0])]
        tau: Vec<f64>,
        /// Use normals at prime multiples of one degree (requires J = 360).
        #[arg(long)]
        prime: bool,
        /// JSON file with a PolygonSpec or a list of them; overrides J/tau.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Random high-dimensional half-spaces near independence.
    Highdim {
        /// Number of random problems to generate.
        #[arg(long, default_value_t = 20)]
        cases: usize,
        /// Dimensions to draw from.
        #[arg(long, value_delimiter = ',', default_values_t = [20usize, 50, 100, 200, 500])]
        dims: Vec<usize>,
        /// JSON file with a HighDimSpec or a list of them; overrides --cases.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// DC power-grid phase and power limit violations.
    Grid {
        /// Grid case JSON file.
        #[arg(long)]
        case: PathBuf,
        /// Phase limits to evaluate instead of the case's own.
        #[arg(long, value_delimiter = ',')]
        theta_bar: Vec<f64>,
    },
    /// Run the invariant suite and exit nonzero on any failure.
    Verify {
        /// Also check this grid case.
        #[arg(long)]
        case: Option<PathBuf>,
    },
}

/// Parses arguments and runs, returning the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
            let _ = e.print();
            return code;
        }
    };
    run(cli)
}

pub fn run(cli: Cli) -> i32 {
    let pool = match cli.common.threads {
        Some(0) => {
            error!("--threads must be at least 1");
            return EXIT_INVALID;
        }
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build(),
        None => rayon::ThreadPoolBuilder::new().build(),
    };
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            error!("could not start worker pool: {e}");
            return EXIT_INVALID;
        }
    };
    let outcome = pool.install(|| dispatch(&cli));
    match outcome {
        Ok(Outcome { text, code }) => match emit(&cli.common, &text) {
            Ok(()) => code,
            Err(e) => {
                error!("{e}");
                EXIT_INVALID
            }
        },
        Err(e) => {
            error!("{e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &AloeError) -> i32 {
    match e {
        AloeError::InfeasibleDeterministic { .. } => EXIT_INFEASIBLE,
        AloeError::EmptyMixture => EXIT_EMPTY,
        _ => EXIT_INVALID,
    }
}

struct Outcome {
    text: String,
    code: i32,
}

fn emit(common: &CommonArgs, text: &str) -> Result<()> {
    match &common.output {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn timestamp(common: &CommonArgs) -> Option<u64> {
    if common.no_timestamp {
        None
    } else {
        SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs())
    }
}

fn options(common: &CommonArgs) -> EstimateOptions {
    EstimateOptions {
        block_size: common.block_size,
    }
}

fn dispatch(cli: &Cli) -> Result<Outcome> {
    let c = &cli.common;
    if !(c.drop_below.is_finite()) {
        return Err(AloeError::InvalidInput(
            "--drop-below must be finite".into(),
        ));
    }
    match &cli.command {
        Command::Estimate { input } => run_estimate(c, input),
        Command::Polygon {
            j,
            tau,
            prime,
            spec,
        } => run_polygons(c, *j, tau, *prime, spec.as_deref()),
        Command::Highdim { cases, dims, spec } => run_highdims(c, *cases, dims, spec.as_deref()),
        Command::Grid { case, theta_bar } => run_grid(c, case, theta_bar),
        Command::Verify { case } => run_verify(c, case.as_deref()),
    }
}

#[derive(Debug, Serialize)]
struct EstimateResult {
    case: String,
    rep: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    theta_or_tau: Option<f64>,
    #[serde(flatten)]
    estimate: AloeEstimate,
}

impl EstimateResult {
    fn csv_row(&self) -> CsvRow {
        CsvRow::from_estimate(&self.case, self.theta_or_tau, &self.estimate)
    }
}

fn case_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "case".into())
}

/// Runs `reps` replications, applying the dropped-mass option. An empty
/// mixture is reported as a zero estimate with exit code 3.
fn replicate(
    c: &CommonArgs,
    problem: &HalfSpaceProblem,
    case: &str,
    theta_or_tau: Option<f64>,
    stream: RandomStream,
) -> Result<std::result::Result<Vec<EstimateResult>, EstimateResult>> {
    let mut out = Vec::with_capacity(c.reps as usize);
    for r in 0..c.reps {
        let run_stream = stream.substream(r);
        match estimate_with(problem, c.n, run_stream, &options(c)) {
            Ok(mut e) => {
                if c.add_dropped_to_bound {
                    e = e.with_dropped_mass_added();
                }
                out.push(EstimateResult {
                    case: case.to_string(),
                    rep: r,
                    theta_or_tau,
                    estimate: e,
                });
            }
            Err(AloeError::EmptyMixture) => {
                return Ok(Err(EstimateResult {
                    case: case.to_string(),
                    rep: r,
                    theta_or_tau,
                    estimate: empty_estimate(problem, c, run_stream),
                }));
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Ok(out))
}

fn empty_estimate(
    problem: &HalfSpaceProblem,
    c: &CommonArgs,
    stream: RandomStream,
) -> AloeEstimate {
    let dropped = problem.dropped_mass();
    let extra = if c.add_dropped_to_bound { dropped } else { 0.0 };
    AloeEstimate {
        mu_hat: extra,
        se: 0.0,
        n: 0,
        union_bound: extra,
        lower_bound: 0.0,
        hard_range: [extra, extra],
        s_histogram: Vec::new(),
        var_bound_theorem: 0.0,
        var_bound_lemma: 0.0,
        cv_bound: 0.0,
        seed: stream.seed,
        stream_id: stream.stream_id,
        num_events: 0,
        dropped_mass: if c.add_dropped_to_bound { 0.0 } else { dropped },
        degenerate_se: true,
    }
}

fn render_estimates(c: &CommonArgs, command: &str, results: &[EstimateResult]) -> Result<String> {
    match c.format {
        Format::Json => Report::new(command, c.seed, timestamp(c), results).to_json(),
        Format::Csv => report::to_csv(results.iter().map(EstimateResult::csv_row)),
    }
}

fn common_threshold(problem: &HalfSpaceProblem) -> Option<f64> {
    let t = problem.thresholds();
    let first = t[0];
    t.iter().all(|&v| v == first).then_some(first)
}

fn run_estimate(c: &CommonArgs, input: &Path) -> Result<Outcome> {
    let problem = load_problem(input)?.with_drop_threshold(c.drop_below);
    let name = case_name(input);
    let stream = RandomStream::new(c.seed, 0);
    let tau = common_threshold(&problem);
    match replicate(c, &problem, &name, tau, stream)? {
        Ok(results) => Ok(Outcome {
            text: render_estimates(c, "estimate", &results)?,
            code: EXIT_OK,
        }),
        Err(empty) => Ok(Outcome {
            text: render_estimates(c, "estimate", &[empty])?,
            code: EXIT_EMPTY,
        }),
    }
}

fn read_one_or_many<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.is_array() {
        Ok(serde_json::from_value(value)?)
    } else {
        Ok(vec![serde_json::from_value(value)?])
    }
}

fn run_polygons(
    c: &CommonArgs,
    j: usize,
    taus: &[f64],
    prime: bool,
    spec: Option<&Path>,
) -> Result<Outcome> {
    let specs: Vec<PolygonSpec> = match spec {
        Some(path) => read_one_or_many(path)?,
        None => taus
            .iter()
            .map(|&tau| PolygonSpec {
                j,
                tau,
                angle_set: if prime {
                    AngleSet::Prime
                } else {
                    AngleSet::Full
                },
            })
            .collect(),
    };
    let stream = RandomStream::new(c.seed, 0);
    let rows: Vec<PolygonRow> = specs
        .iter()
        .map(|s| run_polygon(s, c.n, c.reps as usize, stream, &options(c)))
        .collect::<Result<_>>()?;
    let text = match c.format {
        Format::Json => Report::new("polygon", c.seed, timestamp(c), &rows).to_json()?,
        Format::Csv => report::polygon_csv(&rows)?,
    };
    Ok(Outcome {
        text,
        code: EXIT_OK,
    })
}

fn run_highdims(
    c: &CommonArgs,
    cases: usize,
    dims: &[usize],
    spec: Option<&Path>,
) -> Result<Outcome> {
    let specs: Vec<HighDimSpec> = match spec {
        Some(path) => read_one_or_many(path)?,
        None => {
            if dims.is_empty() || cases == 0 {
                return Err(AloeError::InvalidInput(
                    "need at least one case and one dimension".into(),
                ));
            }
            let mut rng = RandomStream::new(c.seed, 0).derive(0x4844).rng();
            (0..cases)
                .map(|_| HighDimSpec::sample_from(dims, &mut rng))
                .collect()
        }
    };
    let stream = RandomStream::new(c.seed, 0);
    let mut rows = Vec::with_capacity(specs.len());
    for (i, s) in specs.iter().enumerate() {
        let mut row = run_highdim(s, c.n, stream.substream(i as u64), &options(c))?;
        if c.add_dropped_to_bound {
            row.estimate = row.estimate.with_dropped_mass_added();
        }
        rows.push(row);
    }
    let text = match c.format {
        Format::Json => Report::new("highdim", c.seed, timestamp(c), &rows).to_json()?,
        Format::Csv => report::to_csv(rows.iter().enumerate().map(|(i, r)| {
            let name = format!("highdim-{i}-d{}-J{}", r.problem.spec.d, r.problem.spec.j);
            CsvRow::from_estimate(&name, Some(r.problem.tau), &r.estimate)
        }))?,
    };
    Ok(Outcome {
        text,
        code: EXIT_OK,
    })
}

#[derive(Debug, Serialize)]
struct GridResult {
    #[serde(flatten)]
    result: EstimateResult,
    num_random: usize,
    num_rows: usize,
    deterministic_rows: usize,
    /// The largest single-row probabilities with their constraint labels.
    dominant_rows: Vec<DominantRow>,
}

#[derive(Debug, Serialize)]
struct DominantRow {
    row: usize,
    label: String,
    probability: f64,
}

fn dominant_rows(gp: &GridProblem, k: usize) -> Vec<DominantRow> {
    let p = gp.problem.probabilities();
    let mut idx: Vec<usize> = (0..p.len()).filter(|&j| p[j] > 0.0).collect();
    idx.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    idx.into_iter()
        .take(k)
        .map(|j| DominantRow {
            row: j,
            label: gp.system.row_labels[j].to_string(),
            probability: p[j],
        })
        .collect()
}

fn run_grid(c: &CommonArgs, path: &Path, theta_bars: &[f64]) -> Result<Outcome> {
    let base = GridCase::load(path)?;
    let name = base.name.clone().unwrap_or_else(|| case_name(path));
    let thetas = if theta_bars.is_empty() {
        vec![base.theta_bar]
    } else {
        theta_bars.to_vec()
    };
    let stream = RandomStream::new(c.seed, 0);
    let mut results = Vec::new();
    let mut code = EXIT_OK;
    for &theta in &thetas {
        let mut case = base.clone();
        case.theta_bar = theta;
        let model = GridModel::new(case)?;
        let mut gp = to_halfspace_problem(&model.assemble())?;
        gp.problem = gp.problem.with_drop_threshold(c.drop_below);
        let runs = match replicate(c, &gp.problem, &name, Some(theta), stream)? {
            Ok(runs) => runs,
            Err(empty) => {
                code = EXIT_EMPTY;
                vec![empty]
            }
        };
        for result in runs {
            results.push(GridResult {
                result,
                num_random: model.num_random(),
                num_rows: gp.system.num_rows(),
                deterministic_rows: gp.deterministic_rows.len(),
                dominant_rows: dominant_rows(&gp, 5),
            });
        }
    }
    let text = match c.format {
        Format::Json => Report::new("grid", c.seed, timestamp(c), &results).to_json()?,
        Format::Csv => report::to_csv(results.iter().map(|r| r.result.csv_row()))?,
    };
    Ok(Outcome { text, code })
}

fn run_verify(c: &CommonArgs, case: Option<&Path>) -> Result<Outcome> {
    let grid = match case {
        Some(path) => Some(GridCase::load(path)?),
        None => None,
    };
    let checks = run_checks(c.seed, grid.as_ref());
    let failed = checks.iter().any(|ch| !ch.passed);
    let text = match c.format {
        Format::Json => Report::new("verify", c.seed, timestamp(c), &checks).to_json()?,
        Format::Csv => report::checks_csv(&checks)?,
    };
    Ok(Outcome {
        text,
        code: if failed { EXIT_VERIFY } else { EXIT_OK },
    })
}
