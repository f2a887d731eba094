//! Multi-start searches: exact counts on the circle and ellipse, bound
//! satisfaction on a triaxial ellipsoid.

use std::f64::consts::PI;
use std::sync::Arc;

use billiards::report::{verdict_for, TrajectoryKind, Verdict};
use billiards::solver::{solve_closed, solve_periodic, SolveReport, SolverSettings};
use billiards::ConvexBody;
use nalgebra::{DVector, Matrix2, SymmetricEigen, Vector2};

use crate::Outcome;

fn err(e: billiards::Error) -> String {
    e.to_string()
}

fn describe(r: &SolveReport) -> String {
    let lengths: Vec<String> = r.orbits.iter().map(|o| format!("{:.6}", o.length)).collect();
    format!("{} orbits [{}], {} families", r.orbits.len(), lengths.join(", "), r.families.len())
}

pub fn circle_count() -> Outcome {
    let body = Arc::new(ConvexBody::unit_sphere(1).map_err(err)?);
    let anchor = DVector::from_vec(vec![0.3f64.cos(), 0.3f64.sin()]);
    let mut summary = Vec::new();
    for n in [2, 4, 6, 8] {
        let settings = SolverSettings::default().with_starts(1000).with_seed(1);
        let report = solve_closed(body.clone(), anchor.clone(), n, &settings).map_err(err)?;
        // Critical values are 2(n+1)·sin(πk/(n+1)), k = 1..n/2.
        let mut expected: Vec<f64> = (1..=n / 2).map(|k| 2.0 * (n + 1) as f64 * (PI * k as f64 / (n + 1) as f64).sin()).collect();
        expected.sort_by(f64::total_cmp);
        let mut found: Vec<f64> = report.orbits.iter().map(|o| o.length).collect();
        found.sort_by(f64::total_cmp);
        let lengths_match = found.len() == expected.len() && found.iter().zip(&expected).all(|(a, b)| (a - b).abs() < 1e-8);
        if !lengths_match || !report.families.is_empty() || report.orbits.iter().any(|o| o.orbit_size != 2 || o.nullity != 0) {
            return Err(format!("n={n}: expected {} orbits {expected:?}, found {}", n / 2, describe(&report)));
        }
        let uniform = SolverSettings { polygon_starts: 0, ..settings };
        let uniform = solve_closed(body.clone(), anchor.clone(), n, &uniform).map_err(err)?;
        summary.push(format!("n={n}: {} (uniform starts only: {})", report.orbits.len(), uniform.orbits.len()));
    }
    Ok(summary.join("; "))
}

fn ellipse_point(t: f64) -> Vector2<f64> {
    Vector2::new(2.0 * t.cos(), t.sin())
}

/// Gradient of `x²/4 + y² − 1`.
fn ellipse_normal(p: &Vector2<f64>) -> Vector2<f64> {
    Vector2::new(p.x / 2.0, 2.0 * p.y).normalize()
}

/// Second intersection of the inward normal line at `x(t)`, and the
/// cross product of that chord with the normal at its far end.
fn normal_chord(t: f64) -> (Vector2<f64>, Vector2<f64>, f64) {
    let p = ellipse_point(t);
    let d = -ellipse_normal(&p);
    let s = -2.0 * (p.x * d.x / 4.0 + p.y * d.y) / (d.x * d.x / 4.0 + d.y * d.y);
    let q = p + d * s;
    let chord = q - p;
    let nq = ellipse_normal(&q);
    (p, q, chord.x * nq.y - chord.y * nq.x)
}

fn length_in_angles(t1: f64, t2: f64) -> f64 {
    -2.0 * (ellipse_point(t1) - ellipse_point(t2)).norm()
}

/// Index of `−length` at the double normal through `x(t1)`, `x(t2)`.
fn angle_hessian_index(t1: f64, t2: f64) -> usize {
    let h = 1e-4;
    let f = |a: f64, b: f64| length_in_angles(t1 + a, t2 + b);
    let d11 = (f(h, 0.0) - 2.0 * f(0.0, 0.0) + f(-h, 0.0)) / (h * h);
    let d22 = (f(0.0, h) - 2.0 * f(0.0, 0.0) + f(0.0, -h)) / (h * h);
    let d12 = (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4.0 * h * h);
    SymmetricEigen::new(Matrix2::new(d11, d12, d12, d22)).eigenvalues.iter().filter(|&&v| v < -1e-6).count()
}

fn angle_of(p: &Vector2<f64>) -> f64 {
    p.y.atan2(p.x / 2.0)
}

/// Double normals of the ellipse `(2, 1)` by a sign scan of the normal-chord
/// cross product, refined by bisection. Returns `(length, index)` per
/// unordered pair.
fn brute_force_double_normals() -> Vec<(f64, usize)> {
    let samples = 20_000;
    let grid = |i: usize| (i as f64 + 0.37) * 2.0 * PI / samples as f64;
    let mut pairs: Vec<(Vector2<f64>, Vector2<f64>)> = Vec::new();
    for i in 0..samples {
        let (mut a, mut b) = (grid(i), grid(i + 1));
        let (fa, fb) = (normal_chord(a).2, normal_chord(b).2);
        if fa.signum() == fb.signum() {
            continue;
        }
        let sa = fa.signum();
        for _ in 0..100 {
            let mid = 0.5 * (a + b);
            if normal_chord(mid).2.signum() == sa {
                a = mid;
            } else {
                b = mid;
            }
        }
        let (p, q, _) = normal_chord(0.5 * (a + b));
        let seen = pairs.iter().any(|(x, y)| ((x - p).norm() < 1e-6 && (y - q).norm() < 1e-6) || ((x - q).norm() < 1e-6 && (y - p).norm() < 1e-6));
        if !seen {
            pairs.push((p, q));
        }
    }
    let mut out: Vec<(f64, usize)> =
        pairs.iter().map(|(p, q)| ((p - q).norm() * 2.0, angle_hessian_index(angle_of(p), angle_of(q)))).collect();
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

pub fn ellipse_periodic() -> Outcome {
    let oracle = brute_force_double_normals();
    let body = Arc::new(ConvexBody::ellipsoid(&[2.0, 1.0]).map_err(err)?);
    let report = solve_periodic(body, 2, &SolverSettings::default()).map_err(err)?;
    let found: Vec<(f64, usize)> = report.orbits.iter().map(|o| (o.length, o.morse_index)).collect();
    let matches = found.len() == oracle.len()
        && found.iter().zip(&oracle).all(|(a, b)| (a.0 - b.0).abs() < 1e-6 && a.1 == b.1)
        && report.families.is_empty();
    let indices: Vec<usize> = found.iter().map(|o| o.1).collect();
    if !matches || oracle.len() != 2 || indices != [1, 0] {
        return Err(format!("brute force {oracle:?}, solver {found:?} ({} families)", report.families.len()));
    }
    Ok(format!("{} orbits {found:?} match brute force", found.len()))
}

pub fn ellipsoid_bounds() -> Outcome {
    let body = Arc::new(ConvexBody::ellipsoid(&[1.1, 1.0, 0.9]).map_err(err)?);
    let anchor = DVector::from_vec(vec![0.0, 1.0, 0.0]);
    let settings = SolverSettings::default();
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    let mut record = |kind: TrajectoryKind, report: &SolveReport| {
        let row = verdict_for(kind, report);
        let kind_name = match kind {
            TrajectoryKind::Closed => "closed",
            TrajectoryKind::Periodic => "periodic",
        };
        let line = format!(
            "{kind_name} n={}: {} Morse orbits, {} families, bound {} -> {}",
            row.n,
            row.observed_isolated_orbits,
            row.degenerate_families,
            row.bound.map_or("-".into(), |b| b.to_string()),
            row.verdict
        );
        if row.verdict == Verdict::Fail {
            failures.push(line.clone());
        }
        lines.push(line);
    };
    for n in [2, 4] {
        let report = solve_closed(body.clone(), anchor.clone(), n, &settings).map_err(err)?;
        record(TrajectoryKind::Closed, &report);
    }
    for n in [3, 5] {
        let report = solve_periodic(body.clone(), n, &settings).map_err(err)?;
        record(TrajectoryKind::Periodic, &report);
    }
    if failures.is_empty() {
        Ok(lines.join("; "))
    } else {
        Err(failures.join("; "))
    }
}
