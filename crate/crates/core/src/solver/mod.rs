//! Multi-start search for critical points of the negative length.
//!
//! Each start runs a trust-region Levenberg–Marquardt iteration on the
//! gradient; a second run from the same start is deflated away from what the
//! first found (chained up to `deflation_depth` times). Starts are
//! independent and run in parallel; the merge is sequential in start order,
//! so reports are reproducible for a fixed seed.

mod dedup;
mod trust_region;

use std::sync::Arc;

use nalgebra::{DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dedup::{canonical_form, deduplicate, orbit_size, snapped};

use crate::configuration::{Configuration, Kind};
use crate::error::{Error, Result};
use crate::geometry::ConvexBody;
use trust_region::{newton, Termination};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    /// Number of random starts; `None` means `200·n·m`.
    pub starts: Option<usize>,
    /// Extra polygon starts per turning number (see [`polygon_starts`]).
    pub polygon_starts: usize,
    pub seed: u64,
    /// Truncation level of `G_ε`; `None` means `(10⁻³·diameter)ⁿ`.
    pub epsilon: Option<f64>,
    pub gradient_tolerance: f64,
    pub max_iterations: usize,
    /// Gradient-descent steps before the Newton phase.
    pub descent_iterations: usize,
    /// Eigenvalues with `|λ| ≤ null_threshold · max|λ|` count as null.
    pub null_threshold: f64,
    /// Merge tolerance and canonical-form grid, relative to the diameter.
    pub merge_tolerance: f64,
    pub deflation_depth: usize,
    pub deflation_power: f64,
    pub deflation_shift: f64,
    /// Initial trust radius, relative to the diameter.
    pub initial_radius: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            starts: None,
            polygon_starts: 4,
            seed: 0,
            epsilon: None,
            gradient_tolerance: 1e-10,
            max_iterations: 200,
            descent_iterations: 10,
            null_threshold: 1e-6,
            merge_tolerance: 1e-7,
            deflation_depth: 1,
            deflation_power: 2.0,
            deflation_shift: 1.0,
            initial_radius: 0.2,
        }
    }
}

impl SolverSettings {
    pub fn with_starts(mut self, starts: usize) -> Self {
        self.starts = Some(starts);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn resolved_starts(&self, n: usize, m: usize) -> usize {
        self.starts.unwrap_or(200 * n * m)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub gradient_norm: f64,
    pub min_gap: f64,
    pub newton_residual_history: Vec<f64>,
    /// Largest deviation from the reflection law over all bounces.
    pub reflection_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalOrbit {
    pub representative: Configuration,
    pub length: f64,
    pub morse_index: usize,
    pub nullity: usize,
    pub orbit_kind: String,
    pub orbit_size: usize,
    pub certificate: Certificate,
}

/// Critical points with positive nullity sharing a level, index and nullity.
#[derive(Debug, Clone, Serialize)]
pub struct CriticalFamily {
    pub representative: Configuration,
    pub length: f64,
    pub morse_index: usize,
    pub nullity: usize,
    pub members_found: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SolveStats {
    pub starts_attempted: usize,
    /// Converged runs, deflated reruns included.
    pub converged: usize,
    pub rejected_boundary: usize,
    pub rejected_duplicate: usize,
    pub unconverged: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub kind: String,
    pub m: usize,
    pub n: usize,
    pub epsilon: f64,
    pub settings: SolverSettings,
    pub stats: SolveStats,
    pub orbits: Vec<CriticalOrbit>,
    pub families: Vec<CriticalFamily>,
}

impl SolveReport {
    /// `true` when every critical point found is nondegenerate.
    pub fn all_morse(&self) -> bool {
        self.families.is_empty()
    }

    pub fn ensure_converged(&self) -> Result<()> {
        if self.stats.converged == 0 {
            return Err(Error::NoSolutions(self.stats.starts_attempted));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub morse_index: usize,
    pub nullity: usize,
    pub is_generic: bool,
    pub eigenvalues: Vec<f64>,
}

/// Morse index and nullity from the Hessian spectrum with the cut
/// `λ_cut = null_threshold · max|λ|`.
pub fn classify(c: &Configuration, settings: &SolverSettings) -> Result<Classification> {
    let gnorm = c.gradient_norm()?;
    if gnorm > settings.gradient_tolerance {
        return Err(Error::NotCritical(gnorm));
    }
    let mut eigenvalues: Vec<f64> = SymmetricEigen::new(c.hessian()?).eigenvalues.iter().cloned().collect();
    eigenvalues.sort_by(f64::total_cmp);
    let scale = eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let cut = settings.null_threshold * scale;
    let morse_index = eigenvalues.iter().filter(|&&v| v < -cut).count();
    let nullity = eigenvalues.iter().filter(|&&v| v.abs() <= cut).count();
    Ok(Classification { morse_index, nullity, is_generic: nullity == 0, eigenvalues })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum BoundaryVerdict {
    Keep,
    Reject,
}

/// Rejects configurations in the boundary band of `G_ε` (gap product within
/// 10% of `ε`) whose gradient is nonzero and points out of `G_ε`.
pub fn boundary_filter(c: &Configuration, epsilon: f64, settings: &SolverSettings) -> Result<BoundaryVerdict> {
    if c.gap_product() > 1.1 * epsilon {
        return Ok(BoundaryVerdict::Keep);
    }
    let frame = c.frame()?;
    let grad = c.gradient_in(&frame)?;
    if grad.norm() <= settings.gradient_tolerance {
        return Ok(BoundaryVerdict::Keep);
    }
    let inward = frame.coordinates(&c.log_gap_product_gradient()?);
    Ok(if grad.dot(&inward) < 0.0 { BoundaryVerdict::Reject } else { BoundaryVerdict::Keep })
}

/// Largest `|d_out − (d_in − 2⟨d_in,N⟩N)|` over all bounces.
pub fn reflection_law_residual(c: &Configuration) -> Result<f64> {
    let n = c.n();
    let mut worst: f64 = 0.0;
    for j in 0..n {
        let x = &c.points()[j];
        let (prev, next) = match c.anchor() {
            Some(a) => (if j == 0 { a } else { &c.points()[j - 1] }, if j + 1 == n { a } else { &c.points()[j + 1] }),
            None => (&c.points()[(j + n - 1) % n], &c.points()[(j + 1) % n]),
        };
        let d_in = (x - prev).normalize();
        let d_out = (next - x).normalize();
        let normal = c.body().outward_normal(x)?;
        let reflected = &d_in - &normal * (2.0 * d_in.dot(&normal));
        worst = worst.max((d_out - reflected).norm());
    }
    Ok(worst)
}

/// Seeded random starts in `G_ε`: start `i` uses stream `i` of the seed.
pub fn generate_starts(body: &Arc<ConvexBody>, kind: &Kind, n: usize, count: usize, seed: u64, epsilon: f64) -> Result<Vec<Configuration>> {
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            loop {
                let points = (0..n).map(|_| body.sample_point(&mut rng)).collect::<Result<Vec<_>>>()?;
                let c = Configuration::new(body.clone(), kind.clone(), points)?;
                if c.is_admissible() && c.in_g_epsilon(epsilon) {
                    return Ok(c);
                }
            }
        })
        .collect()
}

/// Regular polygons in random central planes, projected onto `X`: for each
/// turning number `k`, `per_turning` configurations with consecutive points
/// `2πk/(n+1)` apart (through the anchor) or `2πk/n` apart (periodic). These
/// are the round-sphere critical points; on other bodies they seed basins
/// that uniform starts reach only rarely. Start `i` uses stream `offset + i`.
pub fn polygon_starts(body: &Arc<ConvexBody>, kind: &Kind, n: usize, per_turning: usize, seed: u64, offset: u64, epsilon: f64) -> Result<Vec<Configuration>> {
    let dim = body.ambient_dim();
    let (steps, turnings) = match kind {
        Kind::ClosedString { .. } => (n + 1, (n + 1) / 2),
        Kind::Cyclic => (n, n / 2),
    };
    let mut out = Vec::new();
    let mut stream = offset;
    for k in 1..=turnings {
        for _ in 0..per_turning {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream);
            stream += 1;
            let e1 = match kind {
                Kind::ClosedString { anchor } => anchor.normalize(),
                Kind::Cyclic => random_unit(dim, &mut rng, None),
            };
            let e2 = random_unit(dim, &mut rng, Some(&e1));
            let phase = match kind {
                Kind::ClosedString { .. } => 0.0,
                Kind::Cyclic => rng.random_range(0.0..std::f64::consts::TAU),
            };
            let psi = std::f64::consts::TAU * k as f64 / steps as f64;
            let offset_index = usize::from(matches!(kind, Kind::ClosedString { .. }));
            let points = (0..n)
                .map(|j| {
                    let t = phase + (j + offset_index) as f64 * psi;
                    body.project(&(&e1 * t.cos() + &e2 * t.sin()))
                })
                .collect::<Result<Vec<_>>>()?;
            let c = Configuration::new(body.clone(), kind.clone(), points)?;
            if c.is_admissible() && c.in_g_epsilon(epsilon) {
                out.push(c);
            }
        }
    }
    Ok(out)
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng, orthogonal_to: Option<&DVector<f64>>) -> DVector<f64> {
    loop {
        let mut v = DVector::from_iterator(dim, (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)));
        if let Some(e) = orthogonal_to {
            v -= e * e.dot(&v);
        }
        let norm = v.norm();
        if norm > 1e-8 {
            return v / norm;
        }
    }
}

enum Outcome {
    Critical(Configuration, Vec<f64>),
    Boundary,
    Unconverged,
}

fn run_start(start: &Configuration, settings: &SolverSettings, epsilon: f64) -> Result<Vec<Outcome>> {
    let mut outcomes = Vec::new();
    let mut known: Vec<Configuration> = Vec::new();
    for _ in 0..=settings.deflation_depth {
        let result = newton(start.clone(), &known, settings, epsilon)?;
        match result.termination {
            Termination::Converged => {
                known.push(result.config.clone());
                outcomes.push(Outcome::Critical(result.config, result.history));
            }
            Termination::MaxIterations | Termination::Stalled => {
                // a failed deflated rerun says nothing about the start
                if !known.is_empty() {
                    break;
                }
                let verdict = if result.config.is_admissible() {
                    boundary_filter(&result.config, epsilon, settings)?
                } else {
                    BoundaryVerdict::Reject
                };
                outcomes.push(if verdict == BoundaryVerdict::Reject { Outcome::Boundary } else { Outcome::Unconverged });
                break;
            }
        }
    }
    Ok(outcomes)
}

fn all_starts(body: &Arc<ConvexBody>, kind: &Kind, n: usize, settings: &SolverSettings, epsilon: f64) -> Result<Vec<Configuration>> {
    let count = settings.resolved_starts(n, body.dim_m());
    let mut starts = generate_starts(body, kind, n, count, settings.seed, epsilon)?;
    starts.extend(polygon_starts(body, kind, n, settings.polygon_starts, settings.seed, count as u64, epsilon)?);
    Ok(starts)
}

fn resolve_epsilon(body: &ConvexBody, n: usize, settings: &SolverSettings) -> Result<f64> {
    let eps = settings.epsilon.unwrap_or_else(|| Configuration::default_epsilon(body, n));
    if !(eps > 0.0) {
        return Err(Error::BadInput(format!("epsilon must be positive, got {eps}")));
    }
    Ok(eps)
}

/// Closed strings through `anchor` with `n` reflections, up to reversal.
pub fn solve_closed(body: Arc<ConvexBody>, anchor: DVector<f64>, n: usize, settings: &SolverSettings) -> Result<SolveReport> {
    if n == 0 {
        return Err(Error::BadInput("n must be at least 1".into()));
    }
    body.check_point(&anchor)?;
    let kind = Kind::ClosedString { anchor };
    let epsilon = resolve_epsilon(&body, n, settings)?;
    let starts = all_starts(&body, &kind, n, settings, epsilon)?;
    solve_with_epsilon(starts, settings, epsilon, &kind, body.dim_m(), n)
}

/// `n`-periodic trajectories, up to the dihedral action.
pub fn solve_periodic(body: Arc<ConvexBody>, n: usize, settings: &SolverSettings) -> Result<SolveReport> {
    if n < 2 {
        return Err(Error::BadInput("periodic trajectories need n ≥ 2".into()));
    }
    let epsilon = resolve_epsilon(&body, n, settings)?;
    let starts = all_starts(&body, &Kind::Cyclic, n, settings, epsilon)?;
    solve_with_epsilon(starts, settings, epsilon, &Kind::Cyclic, body.dim_m(), n)
}

/// Runs the search from explicit starts (all of one kind, body and `n`).
pub fn solve_from_starts(starts: Vec<Configuration>, settings: &SolverSettings) -> Result<SolveReport> {
    let first = starts.first().ok_or_else(|| Error::BadInput("no starts given".into()))?;
    let (kind, m, n) = (first.kind().clone(), first.m(), first.n());
    let epsilon = resolve_epsilon(first.body(), n, settings)?;
    solve_with_epsilon(starts, settings, epsilon, &kind, m, n)
}

fn solve_with_epsilon(starts: Vec<Configuration>, settings: &SolverSettings, epsilon: f64, kind: &Kind, m: usize, n: usize) -> Result<SolveReport> {
    let per_start: Vec<Vec<Outcome>> = starts.par_iter().map(|s| run_start(s, settings, epsilon)).collect::<Result<_>>()?;
    let mut stats = SolveStats { starts_attempted: starts.len(), ..SolveStats::default() };
    let diameter = starts.first().map_or(1.0, |s| s.body().diameter());
    let merge = settings.merge_tolerance * diameter;
    let mut orbits: Vec<CriticalOrbit> = Vec::new();
    let mut families: Vec<CriticalFamily> = Vec::new();
    let mut seen_degenerate: Vec<Configuration> = Vec::new();
    for outcome in per_start.into_iter().flatten() {
        let (config, history) = match outcome {
            Outcome::Critical(c, h) => (c, h),
            Outcome::Boundary => {
                stats.rejected_boundary += 1;
                continue;
            }
            Outcome::Unconverged => {
                stats.unconverged += 1;
                continue;
            }
        };
        let reflection_residual = reflection_law_residual(&config)?;
        if reflection_residual > 1e-8 {
            stats.unconverged += 1;
            continue;
        }
        stats.converged += 1;
        let duplicate = orbits.iter().any(|o| o.representative.orbit_distance(&config) <= merge)
            || seen_degenerate.iter().any(|d| d.orbit_distance(&config) <= merge);
        if duplicate {
            stats.rejected_duplicate += 1;
            continue;
        }
        let class = classify(&config, settings)?;
        let length = config.total_length()?;
        let (representative, _) = canonical_form(&config, merge);
        if class.nullity > 0 {
            seen_degenerate.push(representative.clone());
            let same_level = families.iter_mut().find(|f| {
                (f.length - length).abs() <= 1e-8 * length && f.morse_index == class.morse_index && f.nullity == class.nullity
            });
            match same_level {
                Some(f) => f.members_found += 1,
                None => families.push(CriticalFamily {
                    representative,
                    length,
                    morse_index: class.morse_index,
                    nullity: class.nullity,
                    members_found: 1,
                }),
            }
            continue;
        }
        let gradient_norm = config.gradient_norm()?;
        let min_gap = config.min_gap();
        orbits.push(CriticalOrbit {
            orbit_kind: kind.symmetry().label().to_string(),
            orbit_size: orbit_size(&config, merge),
            representative,
            length,
            morse_index: class.morse_index,
            nullity: class.nullity,
            certificate: Certificate { gradient_norm, min_gap, newton_residual_history: history, reflection_residual },
        });
    }
    orbits.sort_by(|a, b| a.length.total_cmp(&b.length).then_with(|| snapped(&a.representative, merge).cmp(&snapped(&b.representative, merge))));
    families.sort_by(|a, b| a.length.total_cmp(&b.length));
    let mut resolved = settings.clone();
    resolved.starts = Some(stats.starts_attempted);
    resolved.epsilon = Some(epsilon);
    Ok(SolveReport {
        kind: kind.label().to_string(),
        m,
        n,
        epsilon,
        settings: resolved,
        stats,
        orbits,
        families,
    })
}
