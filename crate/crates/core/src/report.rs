//! Experiments: bound-vs-observed verdicts, tabular output and trajectory dumps.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::cohomology::{all_closed_bounds, bound_periodic, BoundReport, Clause};
use crate::configuration::Configuration;
use crate::error::{Error, Result};
use crate::geometry::{BodySpec, ConvexBody};
use crate::solver::{solve_closed, solve_periodic, SolveReport, SolverSettings};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryKind {
    Closed,
    Periodic,
}

/// Body given inline or as a path (relative to the experiment file).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BodySource {
    Path(PathBuf),
    Inline(BodySpec),
}

/// An experiment file.
///
/// ```toml
/// body = "ellipsoid.toml"
/// kind = "closed"
/// anchor = [0.0, 1.0, 0.0]
/// n = [2, 4]
/// seed = 7
///
/// [solver]
/// starts = 500
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub body: BodySource,
    pub kind: TrajectoryKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<Vec<f64>>,
    pub n: Vec<usize>,
    #[serde(default)]
    pub solver: SolverSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n.is_empty() {
            return Err(Error::Config("`n` must list at least one value".into()));
        }
        match (self.kind, &self.anchor) {
            (TrajectoryKind::Closed, None) => Err(Error::Config("closed experiments need an `anchor`".into())),
            (TrajectoryKind::Periodic, Some(_)) => Err(Error::Config("periodic experiments take no `anchor`".into())),
            _ => Ok(()),
        }
    }

    /// Builds the body; relative paths resolve against `base_dir`.
    pub fn load_body(&self, base_dir: &Path) -> Result<Arc<ConvexBody>> {
        let body = match &self.body {
            BodySource::Inline(spec) => ConvexBody::from_spec(spec)?,
            BodySource::Path(p) => ConvexBody::from_file(&base_dir.join(p))?,
        };
        Ok(Arc::new(body))
    }

    /// Solver settings with the experiment-level seed applied.
    pub fn settings(&self) -> SolverSettings {
        let mut s = self.solver.clone();
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Info,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Info => "INFO",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictRow {
    pub m: usize,
    pub n: usize,
    pub kind: TrajectoryKind,
    pub bound: Option<usize>,
    pub bound_clause: Option<Clause>,
    pub observed_isolated_orbits: usize,
    pub degenerate_families: usize,
    pub all_morse: bool,
    pub verdict: Verdict,
}

/// Largest applicable lower bound. Clause III needs generic data, so it is
/// used only when every critical point found is Morse.
pub fn applicable_bound(kind: TrajectoryKind, m: usize, n: usize, all_morse: bool) -> Option<BoundReport> {
    match kind {
        TrajectoryKind::Closed => all_closed_bounds(m, n)
            .into_iter()
            .filter(|b| all_morse || b.clause != Clause::III)
            .max_by_key(|b| b.value),
        TrajectoryKind::Periodic => bound_periodic(m, n).ok(),
    }
}

/// PASS/FAIL only for all-Morse runs with an applicable bound; INFO otherwise.
pub fn verdict_for(kind: TrajectoryKind, report: &SolveReport) -> VerdictRow {
    let all_morse = report.all_morse();
    let bound = applicable_bound(kind, report.m, report.n, all_morse);
    let observed = report.orbits.len();
    let verdict = match (&bound, all_morse) {
        (Some(b), true) if observed >= b.value => Verdict::Pass,
        (Some(_), true) => Verdict::Fail,
        _ => Verdict::Info,
    };
    VerdictRow {
        m: report.m,
        n: report.n,
        kind,
        bound: bound.as_ref().map(|b| b.value),
        bound_clause: bound.as_ref().map(|b| b.clause),
        observed_isolated_orbits: observed,
        degenerate_families: report.families.len(),
        all_morse,
        verdict,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyOutcome {
    pub rows: Vec<VerdictRow>,
    pub bounds: Vec<Vec<BoundReport>>,
    pub solves: Vec<SolveReport>,
}

impl VerifyOutcome {
    pub fn violated(&self) -> bool {
        self.rows.iter().any(|r| r.verdict == Verdict::Fail)
    }
}

pub fn run_verify(spec: &ExperimentSpec, body: Arc<ConvexBody>) -> Result<VerifyOutcome> {
    spec.validate()?;
    let settings = spec.settings();
    let m = body.dim_m();
    let mut outcome = VerifyOutcome { rows: Vec::new(), bounds: Vec::new(), solves: Vec::new() };
    for &n in &spec.n {
        let report = match spec.kind {
            TrajectoryKind::Closed => {
                let anchor = DVector::from_column_slice(spec.anchor.as_deref().unwrap_or_default());
                solve_closed(body.clone(), anchor, n, &settings)?
            }
            TrajectoryKind::Periodic => solve_periodic(body.clone(), n, &settings)?,
        };
        let bounds = match spec.kind {
            TrajectoryKind::Closed => all_closed_bounds(m, n),
            TrajectoryKind::Periodic => bound_periodic(m, n).into_iter().collect(),
        };
        outcome.rows.push(verdict_for(spec.kind, &report));
        outcome.bounds.push(bounds);
        outcome.solves.push(report);
    }
    Ok(outcome)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Config(format!("unknown format `{other}`"))),
        }
    }
}

pub fn write_json<T: Serialize, W: Write>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn write_rows<T: Serialize, W: Write>(rows: impl IntoIterator<Item = T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct BoundRow<'a> {
    m: usize,
    n: usize,
    kind: &'static str,
    clause: String,
    value: usize,
    witness: &'a str,
    evidence: &'a str,
}

pub fn write_bounds_csv<W: Write>(bounds: &[BoundReport], out: W) -> Result<()> {
    write_rows(
        bounds.iter().map(|b| BoundRow {
            m: b.m,
            n: b.n,
            kind: match b.kind {
                crate::cohomology::BoundKind::ClosedFromPoint => "closed",
                crate::cohomology::BoundKind::Periodic => "periodic",
            },
            clause: b.clause.to_string(),
            value: b.value,
            witness: b.witness.as_ref().map_or("", |w| w.product.as_str()),
            evidence: &b.evidence,
        }),
        out,
    )
}

#[derive(Serialize)]
struct OrbitRow {
    id: usize,
    class: &'static str,
    length: f64,
    morse_index: usize,
    nullity: usize,
    orbit_size: Option<usize>,
    gradient_norm: Option<f64>,
}

/// One row per isolated orbit, then one per degenerate family.
pub fn write_solve_csv<W: Write>(report: &SolveReport, out: W) -> Result<()> {
    let orbits = report.orbits.iter().enumerate().map(|(id, o)| OrbitRow {
        id,
        class: "orbit",
        length: o.length,
        morse_index: o.morse_index,
        nullity: o.nullity,
        orbit_size: Some(o.orbit_size),
        gradient_norm: Some(o.certificate.gradient_norm),
    });
    let families = report.families.iter().enumerate().map(|(id, f)| OrbitRow {
        id,
        class: "family",
        length: f.length,
        morse_index: f.morse_index,
        nullity: f.nullity,
        orbit_size: None,
        gradient_norm: None,
    });
    write_rows(orbits.chain(families), out)
}

pub fn write_verdicts_csv<W: Write>(rows: &[VerdictRow], out: W) -> Result<()> {
    #[derive(Serialize)]
    struct Flat {
        m: usize,
        n: usize,
        kind: &'static str,
        bound: Option<usize>,
        clause: Option<String>,
        observed_isolated_orbits: usize,
        degenerate_families: usize,
        all_morse: bool,
        verdict: String,
    }
    write_rows(
        rows.iter().map(|r| Flat {
            m: r.m,
            n: r.n,
            kind: match r.kind {
                TrajectoryKind::Closed => "closed",
                TrajectoryKind::Periodic => "periodic",
            },
            bound: r.bound,
            clause: r.bound_clause.map(|c| c.to_string()),
            observed_isolated_orbits: r.observed_isolated_orbits,
            degenerate_families: r.degenerate_families,
            all_morse: r.all_morse,
            verdict: r.verdict.to_string(),
        }),
        out,
    )
}

/// Writes a trajectory as CSV with header `row,label,from,to,x0,…`.
///
/// `anchor` and `bounce` rows carry coordinates; `segment` rows name their
/// endpoints (`A` for the anchor, otherwise a bounce label). A closed string
/// starts and ends its segment list at `A`.
pub fn emit_trajectory_dump<W: Write>(c: &Configuration, out: W) -> Result<()> {
    let dim = c.body().ambient_dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["row".to_string(), "label".into(), "from".into(), "to".into()];
    header.extend((0..dim).map(|k| format!("x{k}")));
    w.write_record(&header)?;
    let coords = |p: &DVector<f64>| p.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    if let Some(a) = c.anchor() {
        let mut rec = vec!["anchor".to_string(), "A".into(), String::new(), String::new()];
        rec.extend(coords(a));
        w.write_record(&rec)?;
    }
    for (j, p) in c.points().iter().enumerate() {
        let mut rec = vec!["bounce".to_string(), j.to_string(), String::new(), String::new()];
        rec.extend(coords(p));
        w.write_record(&rec)?;
    }
    let n = c.n();
    let labels: Vec<String> = match c.anchor() {
        Some(_) => std::iter::once("A".to_string()).chain((0..n).map(|j| j.to_string())).chain(std::iter::once("A".into())).collect(),
        None => (0..n).map(|j| j.to_string()).chain(std::iter::once("0".into())).collect(),
    };
    for (k, pair) in labels.windows(2).enumerate() {
        let mut rec = vec!["segment".to_string(), k.to_string(), pair[0].clone(), pair[1].clone()];
        rec.extend(std::iter::repeat_n(String::new(), dim));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dump written by [`emit_trajectory_dump`] back into a configuration.
pub fn read_trajectory_dump<R: std::io::Read>(input: R, body: Arc<ConvexBody>) -> Result<Configuration> {
    let mut reader = csv::Reader::from_reader(input);
    let mut anchor = None;
    let mut points = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        let parse = || -> Result<DVector<f64>> {
            let xs = rec
                .iter()
                .skip(4)
                .map(|s| s.parse::<f64>().map_err(|e| Error::Config(format!("bad coordinate `{s}`: {e}"))))
                .collect::<Result<Vec<_>>>()?;
            Ok(DVector::from_vec(xs))
        };
        match rec.get(0) {
            Some("anchor") => anchor = Some(parse()?),
            Some("bounce") => points.push(parse()?),
            Some("segment") => {}
            other => return Err(Error::Config(format!("unknown dump row {other:?}"))),
        }
    }
    match anchor {
        Some(a) => Configuration::closed_string(body, a, points),
        None => Configuration::cyclic(body, points),
    }
}
