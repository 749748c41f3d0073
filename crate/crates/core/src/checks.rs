//! Property suites run by `meanfield check`.
//!
//! Every suite draws its samples from one seeded [`FieldSampler`], so a seed
//! fixes the samples and the report exactly.

use serde::{Deserialize, Serialize};

use crate::diagnostics;
use crate::functional::{self, Params};
use crate::minimax;
use crate::sampling::FieldSampler;
use crate::torus::{self, MeanZeroField, TorusGrid, MU1};

/// The residual under test; swapped out to check that a broken gradient is
/// caught.
pub type ResidualFn = fn(&MeanZeroField, &Params) -> MeanZeroField;

pub const POINCARE_SAMPLES: usize = 100;
pub const POINCARE_SLACK: f64 = 1e-8;
pub const EIGENVALUE_RTOL: f64 = 1e-10;
pub const GRADIENT_DIRECTIONS: usize = 20;
pub const GRADIENT_STEP: f64 = 1e-5;
pub const GRADIENT_RTOL: f64 = 1e-6;
pub const JENSEN_SAMPLES: usize = 100;
pub const JENSEN_TOL: f64 = 1e-12;
pub const CONVEXITY_TOL: f64 = 1e-8;
pub const SYMMETRY_RTOL: f64 = 1e-12;
pub const MOUNTAIN_DIRECTIONS: usize = 50;
pub const MOUNTAIN_RADIUS: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    pub passed: bool,
    pub samples: usize,
    /// Worst observed value of the suite's statistic.
    pub worst: f64,
    /// The bound `worst` is compared with.
    pub bound: f64,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub seed: u64,
    pub grid_n: usize,
    pub params: Params,
    pub suites: Vec<SuiteResult>,
}

impl CheckReport {
    pub fn all_passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.name == name)
    }
}

fn result(name: &str, samples: usize, worst: f64, bound: f64, passed: bool, detail: String) -> SuiteResult {
    SuiteResult {
        name: name.to_string(),
        passed,
        samples,
        worst,
        bound,
        detail,
    }
}

/// `first_eigenvalue = 4π²` and the two-sided eigenvalue bound.
pub fn eigenvalue_suite(grid: TorusGrid) -> SuiteResult {
    let mu = torus::first_eigenvalue(grid);
    let rel = (mu - MU1).abs() / MU1;
    let assumption = torus::eigenvalue_assumption_holds(mu);
    result(
        "eigenvalue",
        1,
        rel,
        EIGENVALUE_RTOL,
        rel <= EIGENVALUE_RTOL && assumption,
        format!("mu1 = {mu:.17e}"),
    )
}

/// `∫|∇u|² ≥ μ1 ∫u²` on random zero-mean fields; the statistic is the
/// largest violation relative to `max(1, μ1 ∫u²)`.
pub fn poincare_suite(grid: TorusGrid, sampler: &mut FieldSampler) -> SuiteResult {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..POINCARE_SAMPLES {
        let u = sampler.field(grid);
        let rhs = MU1 * u.dot(&u);
        let violation = (rhs - torus::h1_norm_sq(&u)) / rhs.max(1.0);
        worst = worst.max(violation);
    }
    result(
        "poincare",
        POINCARE_SAMPLES,
        worst,
        POINCARE_SLACK,
        worst <= POINCARE_SLACK,
        String::new(),
    )
}

/// `⟨R(u), v⟩` against central differences of `I` in random unit directions.
pub fn gradient_suite(
    grid: TorusGrid,
    p: &Params,
    sampler: &mut FieldSampler,
    residual: ResidualFn,
) -> SuiteResult {
    let u = sampler.field(grid);
    let r = residual(&u, p);
    let scale = r.l2_norm().max(f64::MIN_POSITIVE);
    let h = GRADIENT_STEP;
    let mut worst: f64 = 0.0;
    for _ in 0..GRADIENT_DIRECTIONS {
        let v = sampler.field(grid);
        let v = v.scaled(1.0 / v.l2_norm());
        let plus = functional::eval_i(&u.lin_comb(1.0, &v, h), p).total;
        let minus = functional::eval_i(&u.lin_comb(1.0, &v, -h), p).total;
        let fd = (plus - minus) / (2.0 * h);
        let analytic = r.dot(&v);
        // relative to the Cauchy–Schwarz scale ‖R‖‖v‖ of the directional derivative
        let rel = (fd - analytic).abs() / scale;
        worst = worst.max(rel);
    }
    result(
        "gradient",
        GRADIENT_DIRECTIONS,
        worst,
        GRADIENT_RTOL,
        worst <= GRADIENT_RTOL,
        format!("h = {h:e}"),
    )
}

/// `G(u) ≥ 0` for zero-mean `u`.
pub fn jensen_suite(grid: TorusGrid, sampler: &mut FieldSampler) -> SuiteResult {
    let mut worst = f64::INFINITY;
    for _ in 0..JENSEN_SAMPLES {
        let u = sampler.field(grid).scaled(sampler.uniform(0.1, 5.0));
        worst = worst.min(functional::eval_g(&u));
    }
    result(
        "jensen",
        JENSEN_SAMPLES,
        worst,
        -JENSEN_TOL,
        worst >= -JENSEN_TOL,
        String::new(),
    )
}

/// Centered second differences `(G(u+tφ) − 2G(u) + G(u−tφ))/t²` are
/// non-negative.
pub fn convexity_suite(grid: TorusGrid, sampler: &mut FieldSampler) -> SuiteResult {
    let t = 1e-2;
    let mut worst = f64::INFINITY;
    for _ in 0..JENSEN_SAMPLES {
        let u = sampler.field(grid).scaled(sampler.uniform(0.1, 5.0));
        let phi = sampler.field(grid);
        let g0 = functional::eval_g(&u);
        let gp = functional::eval_g(&u.lin_comb(1.0, &phi, t));
        let gm = functional::eval_g(&u.lin_comb(1.0, &phi, -t));
        worst = worst.min((gp - 2.0 * g0 + gm) / (t * t));
    }
    result(
        "convexity",
        JENSEN_SAMPLES,
        worst,
        -CONVEXITY_TOL,
        worst >= -CONVEXITY_TOL,
        format!("t = {t:e}"),
    )
}

/// `I_{λ1,λ2}(u) = I_{λ2,λ1}(−u)`.
pub fn symmetry_suite(grid: TorusGrid, p: &Params, sampler: &mut FieldSampler) -> SuiteResult {
    let mut worst: f64 = 0.0;
    for _ in 0..JENSEN_SAMPLES {
        let u = sampler.field(grid).scaled(sampler.uniform(0.1, 5.0));
        let a = functional::eval_i(&u, p).total;
        let b = functional::eval_i(&u.neg(), &p.swapped()).total;
        worst = worst.max((a - b).abs() / a.abs().max(b.abs()).max(1e-300));
    }
    result(
        "symmetry",
        JENSEN_SAMPLES,
        worst,
        SYMMETRY_RTOL,
        worst <= SYMMETRY_RTOL,
        String::new(),
    )
}

/// `I_{λ+s}(u) ≤ I_λ(u)` for `s > 0`.
pub fn monotonicity_suite(grid: TorusGrid, p: &Params, sampler: &mut FieldSampler) -> SuiteResult {
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..JENSEN_SAMPLES {
        let u = sampler.field(grid).scaled(sampler.uniform(0.1, 5.0));
        let s = sampler.uniform(0.01, 5.0);
        let a = functional::eval_i(&u, &p.shifted(s)).total;
        let b = functional::eval_i(&u, p).total;
        worst = worst.max(a - b);
    }
    result("monotonicity", JENSEN_SAMPLES, worst, 0.0, worst <= 0.0, String::new())
}

/// Positive energy on a small sphere and a negative-energy endpoint. Only
/// meaningful inside the admissible region; elsewhere it passes vacuously.
pub fn mountain_suite(grid: TorusGrid, p: &Params, sampler: &mut FieldSampler) -> SuiteResult {
    if !diagnostics::in_lambda(p).in_region {
        return result("mountain", 0, 0.0, 0.0, true, "outside the region; skipped".into());
    }
    let mut worst = f64::INFINITY;
    for _ in 0..MOUNTAIN_DIRECTIONS {
        let phi = sampler.field_with_norm(grid, MOUNTAIN_RADIUS);
        worst = worst.min(functional::eval_i(&phi, p).total);
    }
    let (endpoint_ok, detail) = match minimax::find_negative_endpoint(p, grid) {
        Ok(u) => {
            let e = functional::eval_i(&u, p).total;
            let norm = torus::h1_norm_sq(&u).sqrt();
            (e < 0.0 && norm >= 1.0, format!("endpoint I = {e:.6e}, norm = {norm:.6e}"))
        }
        Err(e) => (false, e.to_string()),
    };
    result(
        "mountain",
        MOUNTAIN_DIRECTIONS,
        worst,
        0.0,
        worst > 0.0 && endpoint_ok,
        detail,
    )
}

/// Runs every suite with the library residual.
pub fn run_checks(grid: TorusGrid, p: &Params, seed: u64) -> CheckReport {
    run_checks_with(grid, p, seed, functional::residual)
}

pub fn run_checks_with(grid: TorusGrid, p: &Params, seed: u64, residual: ResidualFn) -> CheckReport {
    let mut s = FieldSampler::new(seed);
    let suites = vec![
        eigenvalue_suite(grid),
        poincare_suite(grid, &mut s),
        gradient_suite(grid, p, &mut s, residual),
        jensen_suite(grid, &mut s),
        convexity_suite(grid, &mut s),
        symmetry_suite(grid, p, &mut s),
        monotonicity_suite(grid, p, &mut s),
        mountain_suite(grid, p, &mut s),
    ];
    CheckReport {
        seed,
        grid_n: grid.n(),
        params: *p,
        suites,
    }
}
