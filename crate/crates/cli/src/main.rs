use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{Context, Result};
use billiards::cohomology::{all_closed_bounds, bound_closed, bound_periodic, closed_string_ring, cyclic_ring, quotient_ring, Clause, Coefficients, GradedRing};
use billiards::report::{self, ExperimentSpec, Format, VerifyOutcome};
use billiards::solver::{solve_closed, solve_periodic, SolveReport, SolverSettings};
use billiards::sphere::{closed_spectrum, periodic_spectrum, SpectrumRecord};
use billiards::{BodySpec, ConvexBody, Error};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DVector;
use serde::Serialize;

const EXIT_VIOLATION: u8 = 2;
const EXIT_CONFIG: u8 = 3;
const EXIT_INTERNAL: u8 = 1;

#[derive(Parser)]
#[command(name = "billiards", version, about = "Billiard trajectories in convex bodies and the topological bounds on their number")]
struct Cli {
    /// Seed for the random starts (overrides experiment files).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write results into this directory instead of stdout.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

impl From<OutputFormat> for Format {
    fn from(f: OutputFormat) -> Self {
        match f {
            OutputFormat::Json => Format::Json,
            OutputFormat::Csv => Format::Csv,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Lower bounds on the number of trajectory orbits.
    Bounds {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        /// Restrict to one clause (I, II, III); default lists all applicable ones.
        #[arg(long)]
        clause: Option<String>,
    },
    /// Basis and multiplication table of a cohomology ring.
    Ring {
        #[arg(long, value_enum)]
        space: Space,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "Z")]
        coeffs: String,
    },
    /// Closed strings through an anchor point.
    SolveClosed {
        #[command(flatten)]
        solve: SolveArgs,
        /// Anchor coordinates, comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        anchor: Vec<f64>,
    },
    /// Periodic trajectories.
    SolvePeriodic {
        #[command(flatten)]
        solve: SolveArgs,
    },
    /// Exact critical data on the round sphere.
    SphereOracle {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, conflicts_with = "periodic")]
        closed: bool,
        #[arg(long)]
        periodic: bool,
        #[arg(long, default_value_t = 0)]
        level: usize,
    },
    /// Runs an experiment file and compares observed counts with the bounds.
    Verify {
        spec: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Space {
    ClosedString,
    Quotient,
    Cyclic,
}

#[derive(Args)]
struct SolveArgs {
    /// Body file (TOML, or JSON with a `.json` extension).
    #[arg(long)]
    body: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    starts: Option<usize>,
    /// Truncation level of the configuration space.
    #[arg(long)]
    eps: Option<f64>,
    /// Solver settings file (TOML); flags override it.
    #[arg(long)]
    settings: Option<PathBuf>,
}

impl SolveArgs {
    fn settings(&self, seed: Option<u64>) -> Result<SolverSettings> {
        let mut s = match &self.settings {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
            }
            None => SolverSettings::default(),
        };
        if let Some(k) = self.starts {
            s.starts = Some(k);
        }
        if let Some(e) = self.eps {
            s.epsilon = Some(e);
        }
        if let Some(seed) = seed {
            s.seed = seed;
        }
        Ok(s)
    }

    fn body(&self) -> Result<Arc<ConvexBody>> {
        Ok(Arc::new(ConvexBody::from_file(&self.body).with_context(|| format!("loading body {}", self.body.display()))?))
    }
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    body: BodySpec,
    report: &'a SolveReport,
}

/// Destination of the main result: a file in `--out`, or stdout.
struct Sink {
    dir: Option<PathBuf>,
    format: Format,
}

impl Sink {
    fn open(&self, stem: &str) -> Result<Box<dyn Write>> {
        match &self.dir {
            Some(dir) => {
                let ext = match self.format {
                    Format::Json => "json",
                    Format::Csv => "csv",
                };
                let path = dir.join(format!("{stem}.{ext}"));
                let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
                Ok(Box::new(BufWriter::new(file)))
            }
            None => Ok(Box::new(io::stdout().lock())),
        }
    }

    fn emit<T: Serialize>(&self, stem: &str, value: &T, csv: impl FnOnce(&mut dyn Write) -> billiards::Result<()>) -> Result<()> {
        let mut out = self.open(stem)?;
        match self.format {
            Format::Json => report::write_json(value, &mut out)?,
            Format::Csv => csv(&mut out)?,
        }
        out.flush()?;
        Ok(())
    }

    fn dump_orbits(&self, prefix: &str, solve: &SolveReport) -> Result<()> {
        let Some(dir) = &self.dir else { return Ok(()) };
        for (id, orbit) in solve.orbits.iter().enumerate() {
            let path = dir.join(format!("{prefix}orbit_{id}.csv"));
            let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            report::emit_trajectory_dump(&orbit.representative, BufWriter::new(file))?;
        }
        Ok(())
    }
}

fn ring_for(space: Space, m: usize, n: usize, coeffs: Coefficients) -> billiards::Result<GradedRing> {
    match space {
        Space::ClosedString => closed_string_ring(m, n, coeffs),
        Space::Quotient => quotient_ring(m, n, coeffs),
        Space::Cyclic => cyclic_ring(m, n, coeffs),
    }
}

fn write_ring_csv(ring: &GradedRing, out: &mut dyn Write) -> billiards::Result<()> {
    let dump = ring.dump();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row", "label", "degree", "order", "left", "right", "result"])?;
    for b in &dump.basis {
        w.write_record(["basis", &b.label, &b.degree.to_string(), &b.order.to_string(), "", "", ""])?;
    }
    for p in &dump.products {
        w.write_record(["product", "", "", "", &p.left, &p.right, &p.result])?;
    }
    w.flush()?;
    Ok(())
}

fn write_spectrum_csv(rec: &SpectrumRecord, out: &mut dyn Write) -> billiards::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["part", "position", "eigenvalue"])?;
    for (i, v) in rec.q_eigenvalues.iter().enumerate() {
        w.write_record(["q_form", &i.to_string(), &v.to_string()])?;
    }
    for (i, v) in rec.hessian_eigenvalues.iter().enumerate() {
        w.write_record(["hessian", &i.to_string(), &v.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    let sink = Sink { dir: cli.out.clone(), format: cli.format.into() };
    if let Some(dir) = &sink.dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    match cli.command {
        Command::Bounds { m, n, clause } => {
            let bounds = match clause.as_deref() {
                Some(c) => vec![bound_closed(m, n, c.parse::<Clause>()?)?],
                None => all_closed_bounds(m, n).into_iter().chain(bound_periodic(m, n).ok()).collect(),
            };
            if bounds.is_empty() {
                return Err(Error::BadInput(format!("no bound applies to m={m}, n={n}")).into());
            }
            sink.emit("bounds", &bounds, |w| report::write_bounds_csv(&bounds, w))?;
        }
        Command::Ring { space, m, n, coeffs } => {
            let ring = ring_for(space, m, n, coeffs.parse()?)?;
            ring.verify_axioms()?;
            sink.emit("ring", &ring.dump(), |w| write_ring_csv(&ring, w))?;
        }
        Command::SolveClosed { solve, anchor } => {
            let body = solve.body()?;
            let settings = solve.settings(cli.seed)?;
            let result = solve_closed(body.clone(), DVector::from_vec(anchor), solve.n, &settings)?;
            finish_solve(&sink, "solve_closed", &body, &result)?;
        }
        Command::SolvePeriodic { solve } => {
            let body = solve.body()?;
            let settings = solve.settings(cli.seed)?;
            let result = solve_periodic(body.clone(), solve.n, &settings)?;
            finish_solve(&sink, "solve_periodic", &body, &result)?;
        }
        Command::SphereOracle { m, n, closed: _, periodic, level } => {
            let rec = if periodic { periodic_spectrum(m, n, level)? } else { closed_spectrum(m, n, level)? };
            sink.emit("sphere_oracle", &rec, |w| write_spectrum_csv(&rec, w))?;
        }
        Command::Verify { spec: path } => {
            let mut spec = ExperimentSpec::from_file(&path)?;
            if let Some(seed) = cli.seed {
                spec.seed = Some(seed);
            }
            let sink = Sink { dir: sink.dir.or_else(|| spec.out.clone()), format: sink.format };
            if let Some(dir) = &sink.dir {
                std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            }
            let base = path.parent().unwrap_or(Path::new("."));
            let body = spec.load_body(base)?;
            let outcome = report::run_verify(&spec, body)?;
            return finish_verify(&sink, &outcome);
        }
    }
    Ok(0)
}

fn finish_solve(sink: &Sink, stem: &str, body: &ConvexBody, result: &SolveReport) -> Result<()> {
    if let Err(e) = result.ensure_converged() {
        eprintln!("warning: {e}");
    }
    let output = SolveOutput { body: body.to_spec(), report: result };
    sink.emit(stem, &output, |w| report::write_solve_csv(result, w))?;
    sink.dump_orbits("", result)
}

fn finish_verify(sink: &Sink, outcome: &VerifyOutcome) -> Result<u8> {
    sink.emit("verify", outcome, |w| report::write_verdicts_csv(&outcome.rows, w))?;
    for solve in &outcome.solves {
        sink.dump_orbits(&format!("n{}_", solve.n), solve)?;
    }
    for row in &outcome.rows {
        let bound = row.bound.map_or("-".to_string(), |b| b.to_string());
        eprintln!(
            "{} m={} n={} bound={} observed={} families={}",
            row.verdict, row.m, row.n, bound, row.observed_isolated_orbits, row.degenerate_families
        );
    }
    Ok(if outcome.violated() { EXIT_VIOLATION } else { 0 })
}

/// Input problems exit with the config code; numerical failures are internal.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::NoConvergence(_) | Error::Axiom(_) | Error::NoSolutions(_)) => EXIT_INTERNAL,
        Some(_) => EXIT_CONFIG,
        None if err.downcast_ref::<io::Error>().is_some() => EXIT_CONFIG,
        None => EXIT_INTERNAL,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
