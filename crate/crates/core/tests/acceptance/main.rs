//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails or overruns its time budget.
//!
//! `cargo test -p billiards --test acceptance -- <substring>` runs a subset.

mod algebra;
mod numerics;
mod search;

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

/// `Ok(detail)` or `Err(reason)`.
pub type Outcome = Result<String, String>;

struct Criterion {
    name: &'static str,
    budget: Duration,
    check: fn() -> Outcome,
}

const fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

const CRITERIA: &[Criterion] = &[
    Criterion { name: "ring-reproduction", budget: secs(10), check: algebra::ring_reproduction },
    Criterion { name: "poincare-betti", budget: secs(1), check: algebra::poincare_betti },
    Criterion { name: "bound-tables", budget: secs(5), check: algebra::bound_tables },
    Criterion { name: "sphere-oracle-equivalence", budget: secs(60), check: numerics::sphere_oracle_equivalence },
    Criterion { name: "circle-count", budget: secs(30), check: search::circle_count },
    Criterion { name: "ellipse-periodic", budget: secs(10), check: search::ellipse_periodic },
    Criterion { name: "ellipsoid-bound-satisfaction", budget: secs(15 * 60), check: search::ellipsoid_bounds },
    Criterion { name: "gradient-hessian-numerics", budget: secs(60), check: numerics::finite_differences },
];

fn main() {
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let selected: Vec<&Criterion> =
        CRITERIA.iter().filter(|c| filters.is_empty() || filters.iter().any(|f| c.name.contains(f.as_str()))).collect();
    if selected.is_empty() {
        println!("no acceptance criterion matches {filters:?}");
        return;
    }
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for c in &selected {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(c.check)).unwrap_or_else(|e| {
            let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let result = match result {
            Ok(_) if elapsed > c.budget => Err(format!("took {elapsed:.2?}, budget {:?}", c.budget)),
            r => r,
        };
        let (tag, detail) = match result {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{tag} {:<30} {:>9.2?}  {detail}", c.name, elapsed);
    }
    println!("{} of {} acceptance criteria passed", selected.len() - failed, selected.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
