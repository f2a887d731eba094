//! Sphere spectra against their closed forms, and finite-difference checks
//! of the analytic gradient and Hessian.

use std::f64::consts::PI;
use std::sync::Arc;

use billiards::sphere::{closed_trajectory, periodic_family};
use billiards::{Configuration, ConvexBody, Kind, Polynomial, TangentVector, Term};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::Outcome;

fn random_unit<R: Rng>(rng: &mut R, dim: usize) -> DVector<f64> {
    let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    v.normalize()
}

/// Random orthonormal pair in `R^dim`.
fn random_pair<R: Rng>(rng: &mut R, dim: usize) -> (DVector<f64>, DVector<f64>) {
    let e1 = random_unit(rng, dim);
    let raw = random_unit(rng, dim);
    let e2 = (&raw - &e1 * e1.dot(&raw)).normalize();
    (e1, e2)
}

fn spectrum(h: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(h.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Closed string with turning `ψ`: in-plane `(sin(ψ/2)/2)(2 − 2cos(πs/(n+1)))`,
/// out-of-plane `(2cos(πs/(n+1)) − 2cos ψ)/(2 sin(ψ/2))` with multiplicity `m−1`.
fn closed_form_closed(k: usize, n: usize, m: usize) -> Vec<f64> {
    let psi = 2.0 * PI * k as f64 / (n + 1) as f64;
    let h = (psi / 2.0).sin();
    let mut ev = Vec::new();
    for s in 1..=n {
        let c = (PI * s as f64 / (n + 1) as f64).cos();
        ev.push(h / 2.0 * (2.0 - 2.0 * c));
        for _ in 1..m {
            ev.push((2.0 * c - 2.0 * psi.cos()) / (2.0 * h));
        }
    }
    ev.sort_by(f64::total_cmp);
    ev
}

/// Periodic `n`-gon with turning `α`: the cyclic analogue, `cos(2πs/n)`, `s = 0..n−1`.
fn closed_form_periodic(alpha: f64, n: usize, m: usize) -> Vec<f64> {
    let h = (alpha / 2.0).sin();
    let mut ev = Vec::new();
    for s in 0..n {
        let c = (2.0 * PI * s as f64 / n as f64).cos();
        ev.push(h / 2.0 * (2.0 - 2.0 * c));
        for _ in 1..m {
            ev.push((2.0 * c - 2.0 * alpha.cos()) / (2.0 * h));
        }
    }
    ev.sort_by(f64::total_cmp);
    ev
}

/// `(index, nullity)` of a spectrum at the given relative cutoff.
fn signs(ev: &[f64], cut: f64) -> (usize, usize) {
    let scale = ev.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    (ev.iter().filter(|&&v| v < -cut * scale).count(), ev.iter().filter(|&&v| v.abs() <= cut * scale).count())
}

fn compare(numeric: &[f64], exact: &[f64], what: &str) -> Result<(), String> {
    if numeric.len() != exact.len() {
        return Err(format!("{what}: {} eigenvalues, expected {}", numeric.len(), exact.len()));
    }
    let scale = exact.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    for (a, b) in numeric.iter().zip(exact) {
        if (a - b).abs() > 1e-6 * scale {
            return Err(format!("{what}: eigenvalue {a} vs closed form {b}"));
        }
    }
    Ok(())
}

fn check_critical(c: &Configuration, what: &str) -> Result<Vec<f64>, String> {
    let g = c.gradient_norm().map_err(|e| e.to_string())?;
    if g > 1e-10 {
        return Err(format!("{what}: gradient norm {g:e}"));
    }
    Ok(spectrum(&c.hessian().map_err(|e| e.to_string())?))
}

pub fn sphere_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut closed = 0;
    let mut periodic = 0;
    for m in 2..=4 {
        for n in 1..=10 {
            // Level p has turning k = [(n+1)/2] − p.
            for k in 1..=(n + 1) / 2 {
                let p = (n + 1) / 2 - k;
                let what = format!("closed m={m} n={n} k={k}");
                let (anchor, a) = random_pair(&mut rng, m + 1);
                let c = closed_trajectory(&anchor, &a, k, n).map_err(|e| format!("{what}: {e}"))?;
                let numeric = check_critical(&c, &what)?;
                compare(&numeric, &closed_form_closed(k, n, m), &what)?;
                let (index, nullity) = signs(&numeric, 1e-6);
                let want_index = match (n % 2, p) {
                    (0, p) => 2 * p * (m - 1),
                    (_, 0) => 0,
                    (_, p) => (2 * p - 1) * (m - 1),
                };
                let want_nullity = if 2 * k <= n { m - 1 } else { 0 };
                if (index, nullity) != (want_index, want_nullity) {
                    return Err(format!("{what}: index/nullity ({index}, {nullity}), expected ({want_index}, {want_nullity})"));
                }
                closed += 1;
            }
            if n >= 3 && n % 2 == 1 {
                for p in 0..=(n - 3) / 2 {
                    let what = format!("periodic m={m} n={n} p={p}");
                    let alpha = 2.0 * PI * ((n - 1) / 2 - p) as f64 / n as f64;
                    let (e1, e2) = random_pair(&mut rng, m + 1);
                    let c = periodic_family(n, p, &e1, &e2).map_err(|e| format!("{what}: {e}"))?;
                    let numeric = check_critical(&c, &what)?;
                    compare(&numeric, &closed_form_periodic(alpha, n, m), &what)?;
                    let got = signs(&numeric, 1e-6);
                    if got != (2 * p * (m - 1), 2 * m - 1) {
                        return Err(format!("{what}: index/nullity {got:?}, expected ({}, {})", 2 * p * (m - 1), 2 * m - 1));
                    }
                    periodic += 1;
                }
            }
        }
    }
    Ok(format!("{closed} closed levels, {periodic} periodic levels"))
}

fn quartic_body() -> ConvexBody {
    let term = |coef: f64, e: [u32; 3]| Term { coef, exponents: e.to_vec() };
    let poly = Polynomial::new(vec![
        term(1.0, [2, 0, 0]),
        term(1.0, [0, 2, 0]),
        term(1.0, [0, 0, 2]),
        term(0.5, [4, 0, 0]),
        term(0.5, [0, 4, 0]),
        term(-1.0, [0, 0, 0]),
    ]);
    ConvexBody::implicit(poly).expect("quartic body")
}

/// A configuration whose consecutive points are at least a tenth of the
/// diameter apart.
fn random_configuration<R: Rng>(rng: &mut R, body: &Arc<ConvexBody>, closed: bool) -> Configuration {
    loop {
        let n = rng.random_range(2..=5);
        let mut sample = || body.sample_point(rng).expect("sample");
        let points: Vec<_> = (0..n).map(|_| sample()).collect();
        let c = if closed {
            let anchor = sample();
            Configuration::new(body.clone(), Kind::ClosedString { anchor }, points)
        } else {
            Configuration::new(body.clone(), Kind::Cyclic, points)
        };
        if let Ok(c) = c {
            if c.min_gap() >= 0.1 * body.diameter() {
                return c;
            }
        }
    }
}

fn max_abs(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Central differences of `F ∘ R` through the retraction in the tangent frame.
fn finite_difference_check(c: &Configuration) -> Result<(f64, f64), String> {
    let frame = c.frame().map_err(|e| e.to_string())?;
    let (n, m) = (c.n(), c.m());
    let dim = n * m;
    let f = |v: &DVector<f64>| -> f64 {
        c.retract(&frame, &TangentVector::from_flat(n, m, v)).and_then(|r| r.neg_total_length()).expect("retraction")
    };
    let unit = |i: usize| DVector::from_fn(dim, |r, _| if r == i { 1.0 } else { 0.0 });
    let g = c.gradient_in(&frame).map_err(|e| e.to_string())?.to_flat();
    let h = 1e-5;
    let g_fd = DVector::from_fn(dim, |i, _| (f(&(unit(i) * h)) - f(&(unit(i) * -h))) / (2.0 * h));
    let grad_err = max_abs((&g_fd - &g).iter().copied()) / max_abs(g.iter().copied()).max(1.0);

    let hess = c.hessian_in(&frame).map_err(|e| e.to_string())?;
    let h = 1e-4;
    let f0 = f(&DVector::zeros(dim));
    let mut h_fd = DMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            let value = if i == j {
                (f(&(unit(i) * h)) - 2.0 * f0 + f(&(unit(i) * -h))) / (h * h)
            } else {
                let (ei, ej) = (unit(i) * h, unit(j) * h);
                (f(&(&ei + &ej)) - f(&(&ei - &ej)) - f(&(&ej - &ei)) + f(&(-&ei - &ej))) / (4.0 * h * h)
            };
            h_fd[(i, j)] = value;
            h_fd[(j, i)] = value;
        }
    }
    let hess_err = max_abs((&h_fd - &hess).iter().copied()) / max_abs(hess.iter().copied()).max(1.0);
    Ok((grad_err, hess_err))
}

pub fn finite_differences() -> Outcome {
    let bodies: Vec<(&str, Arc<ConvexBody>)> = vec![
        ("sphere", Arc::new(ConvexBody::unit_sphere(2).map_err(|e| e.to_string())?)),
        ("ellipsoid", Arc::new(ConvexBody::ellipsoid(&[1.1, 1.0, 0.9]).map_err(|e| e.to_string())?)),
        ("implicit quartic", Arc::new(quartic_body())),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = (0.0f64, 0.0f64);
    for (name, body) in &bodies {
        for trial in 0..100 {
            let c = random_configuration(&mut rng, body, trial % 2 == 0);
            let (g, h) = finite_difference_check(&c)?;
            if g > 1e-5 || h > 1e-4 {
                return Err(format!("{name} trial {trial} ({}): gradient error {g:e}, Hessian error {h:e}", c.kind().label()));
            }
            worst = (worst.0.max(g), worst.1.max(h));
        }
    }
    Ok(format!("300 configurations, worst relative error gradient {:.1e}, Hessian {:.1e}", worst.0, worst.1))
}
