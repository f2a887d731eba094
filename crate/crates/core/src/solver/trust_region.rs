//! Trust-region Levenberg–Marquardt iteration on the critical-point equation
//! `grad F(c) = 0`, optionally deflated away from known solutions. A few
//! gradient-descent steps come first, so starts drift toward the basin they
//! belong to before Newton takes over.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::SolverSettings;
use crate::configuration::{Configuration, Frame, TangentVector};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Termination {
    Converged,
    MaxIterations,
    Stalled,
}

#[derive(Debug, Clone)]
pub(crate) struct NewtonOutcome {
    pub config: Configuration,
    pub termination: Termination,
    /// Gradient norm at every accepted iterate.
    pub history: Vec<f64>,
}

/// Deflation factor `M = Π_k (d_k^{−p} + σ)` and its gradient in tangent
/// coordinates; `d_k` is the Euclidean distance to the nearest group image
/// of the `k`-th known solution.
fn deflation(c: &Configuration, frame: &Frame, known: &[Configuration], settings: &SolverSettings) -> Option<(f64, DVector<f64>)> {
    let n = c.n();
    let m = c.m();
    let mut factor = 1.0;
    let mut log_grad = DVector::zeros(n * m);
    for r in known {
        let (d2, image) = r
            .group_orbit()
            .into_iter()
            .map(|img| {
                let d2: f64 = c.points().iter().zip(img.points()).map(|(x, y)| (x - y).norm_squared()).sum();
                (d2, img)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))?;
        if !(d2 > 0.0) {
            return None;
        }
        let p = settings.deflation_power;
        let mk = d2.powf(-p / 2.0) + settings.deflation_shift;
        let dmk = -(p / 2.0) * d2.powf(-p / 2.0 - 1.0);
        let diffs: Vec<DVector<f64>> = c.points().iter().zip(image.points()).map(|(x, y)| (x - y) * 2.0).collect();
        let grad_d2 = frame.coordinates(&diffs).to_flat();
        log_grad += grad_d2 * (dmk / mk);
        factor *= mk;
    }
    Some((factor, log_grad * factor))
}

/// Minimizer of `|r + Jδ|²` subject to `|δ| ≤ radius`, computed from the
/// eigendecomposition of `JᵀJ` with numerically null directions dropped.
pub(crate) fn lm_step(j: &DMatrix<f64>, r: &DVector<f64>, radius: f64) -> DVector<f64> {
    let eig = SymmetricEigen::new(j.transpose() * j);
    let b = j.transpose() * r;
    let s_max = eig.eigenvalues.iter().fold(0.0f64, |a, &s| a.max(s));
    let cut = 1e-14 * s_max;
    let comps: Vec<(usize, f64, f64)> = (0..b.len())
        .filter(|&i| eig.eigenvalues[i] > cut)
        .map(|i| (i, eig.eigenvalues[i], eig.eigenvectors.column(i).dot(&b)))
        .collect();
    let step_for = |mu: f64| {
        let mut step = DVector::zeros(b.len());
        for &(i, s, c) in &comps {
            step -= eig.eigenvectors.column(i) * (c / (s + mu));
        }
        step
    };
    let norm_for = |mu: f64| comps.iter().map(|&(_, s, c)| (c / (s + mu)).powi(2)).sum::<f64>().sqrt();
    if norm_for(0.0) <= radius {
        return step_for(0.0);
    }
    let (mut lo, mut hi) = (0.0, b.norm() / radius);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if norm_for(mid) > radius {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-14 * hi {
            break;
        }
    }
    step_for(hi)
}

struct Evaluation {
    frame: Frame,
    gradient: DVector<f64>,
    residual: DVector<f64>,
    deflation: Option<(f64, DVector<f64>)>,
}

fn evaluate(c: &Configuration, known: &[Configuration], settings: &SolverSettings) -> Result<Option<Evaluation>> {
    let frame = c.frame()?;
    let gradient = c.gradient_in(&frame)?.to_flat();
    let deflation = if known.is_empty() {
        None
    } else {
        match deflation(c, &frame, known, settings) {
            Some(d) => Some(d),
            None => return Ok(None),
        }
    };
    let residual = match &deflation {
        Some((factor, _)) => &gradient * *factor,
        None => gradient.clone(),
    };
    Ok(Some(Evaluation { frame, gradient, residual, deflation }))
}

/// Gradient descent on `F` with a step-length radius and an Armijo test.
fn descend(mut c: Configuration, settings: &SolverSettings, epsilon: f64, radius: &mut f64, history: &mut Vec<f64>) -> Result<Configuration> {
    let diameter = c.body().diameter();
    let (n, m) = (c.n(), c.m());
    for _ in 0..settings.descent_iterations {
        let frame = c.frame()?;
        let g = c.gradient_in(&frame)?;
        let gnorm = g.norm();
        if gnorm <= settings.gradient_tolerance {
            break;
        }
        history.push(gnorm);
        let f0 = c.neg_total_length()?;
        loop {
            if *radius < 1e-15 * diameter {
                return Ok(c);
            }
            let t = (*radius / gnorm).min(1.0);
            let step = TangentVector::from_flat(n, m, &(g.to_flat() * -t));
            let accepted = c
                .retract(&frame, &step)
                .ok()
                .filter(|trial| trial.is_admissible() && trial.in_g_epsilon(epsilon))
                .and_then(|trial| {
                    let f1 = trial.neg_total_length().ok()?;
                    (f1 <= f0 - 1e-4 * t * gnorm * gnorm).then_some(trial)
                });
            match accepted {
                Some(trial) => {
                    if t * gnorm > 0.99 * *radius {
                        *radius = (2.0 * *radius).min(diameter);
                    }
                    c = trial;
                    break;
                }
                None => *radius *= 0.25,
            }
        }
    }
    Ok(c)
}

/// Runs the iteration from `start`, keeping every iterate admissible and
/// inside `G_ε`. Undeflated runs begin with a short descent phase.
pub(crate) fn newton(start: Configuration, known: &[Configuration], settings: &SolverSettings, epsilon: f64) -> Result<NewtonOutcome> {
    let diameter = start.body().diameter();
    let (n, m) = (start.n(), start.m());
    let mut radius = settings.initial_radius * diameter;
    let max_radius = diameter;
    let mut history = Vec::new();
    let mut c = if known.is_empty() { descend(start, settings, epsilon, &mut radius, &mut history)? } else { start };
    radius = radius.max(settings.initial_radius * diameter);
    let Some(mut current) = evaluate(&c, known, settings)? else {
        return Ok(NewtonOutcome { config: c, termination: Termination::Stalled, history });
    };
    for _ in 0..settings.max_iterations {
        let gnorm = current.gradient.norm();
        history.push(gnorm);
        if gnorm <= settings.gradient_tolerance {
            return Ok(NewtonOutcome { config: c, termination: Termination::Converged, history });
        }
        let hessian = c.hessian_in(&current.frame)?;
        let jacobian = match &current.deflation {
            Some((factor, grad)) => &hessian * *factor + &current.gradient * grad.transpose(),
            None => hessian,
        };
        // Inner loop: shrink the radius until a step is accepted.
        loop {
            if radius < 1e-15 * diameter {
                return Ok(NewtonOutcome { config: c, termination: Termination::Stalled, history });
            }
            let step = lm_step(&jacobian, &current.residual, radius);
            let step_norm = step.norm();
            let predicted = 0.5 * (current.residual.norm_squared() - (&current.residual + &jacobian * &step).norm_squared());
            let trial = c
                .retract(&current.frame, &TangentVector::from_flat(n, m, &step))
                .ok()
                .filter(|t| t.is_admissible() && t.in_g_epsilon(epsilon));
            let trial_eval = match trial {
                Some(t) => evaluate(&t, known, settings)?.map(|e| (t, e)),
                None => None,
            };
            let Some((trial, eval)) = trial_eval else {
                radius = 0.25 * step_norm.min(radius);
                continue;
            };
            let actual = 0.5 * (current.residual.norm_squared() - eval.residual.norm_squared());
            let rho = if predicted > 0.0 { actual / predicted } else { -1.0 };
            if rho < 0.25 {
                radius = 0.25 * step_norm.min(radius);
            } else if rho > 0.75 && step_norm > 0.99 * radius {
                radius = (2.0 * radius).min(max_radius);
            }
            // The deflated merit has spurious minima away from any root, so
            // deflated runs take every admissible step.
            if rho > 1e-4 || !known.is_empty() {
                c = trial;
                current = eval;
                break;
            }
        }
    }
    let gnorm = current.gradient.norm();
    let termination = if gnorm <= settings.gradient_tolerance { Termination::Converged } else { Termination::MaxIterations };
    history.push(gnorm);
    Ok(NewtonOutcome { config: c, termination, history })
}
