//! Admissible region, concentration classification and parameter sweeps.
//!
//! The region is
//!
//! ```text
//! Λ = { (λ1, λ2) : λ1 + λ2 < μ1|M|,  max{λ1, λ2} > 8π }
//! ```
//!
//! with `μ1|M| = 4π²` on the unit torus.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::functional::{self, Params};
use crate::minimax::{self, MinimaxOptions};
use crate::torus::{self, Field, MeanZeroField, Point, TorusGrid, AREA, MU1};

/// `sup |u|` above which a local extremum counts as a concentration point.
pub const PEAK_THRESHOLD: f64 = 10.0;
pub const DEFAULT_BALL_RADIUS: f64 = 0.1;

const EIGHT_PI: f64 = 8.0 * PI;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub in_region: bool,
    /// `λ1 + λ2 < μ1|M|`
    pub sum_check: bool,
    /// `max{λ1, λ2} > 8π`
    pub max_check: bool,
    /// Signed Euclidean distance to the nearer boundary line; positive inside.
    pub margin: f64,
}

pub fn in_lambda(p: &Params) -> RegionVerdict {
    let bound = MU1 * AREA;
    let sum_check = p.sum() < bound;
    let max_check = p.max() > EIGHT_PI;
    let margin = ((bound - p.sum()) / std::f64::consts::SQRT_2).min(p.max() - EIGHT_PI);
    RegionVerdict {
        in_region: sum_check && max_check,
        sum_check,
        max_check,
        margin,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Plus,
    Minus,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Plus => "+",
            Side::Minus => "-",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Compact,
    OneSided,
    TwoSided,
}

impl Classification {
    pub fn as_str(self) -> &'static str {
        match self {
            Classification::Compact => "compact",
            Classification::OneSided => "one_sided",
            Classification::TwoSided => "two_sided",
        }
    }
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub location: Point,
    pub side: Side,
    /// `±u` at the peak.
    pub height: f64,
    /// `λ_side ∫_{B(x, r)} e^{±u} / ∫ e^{±u}`
    pub ball_mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationReport {
    pub peaks: Vec<Peak>,
    pub sup_plus: f64,
    pub sup_minus: f64,
    pub classification: Classification,
    /// `|ball_mass − 8π|`, one per peak.
    pub quantization_gaps: Vec<f64>,
}

/// Local maxima of `f` above the threshold, highest first, with weaker
/// maxima inside `radius` of a stronger one suppressed.
fn find_peaks(f: &Field, radius: f64) -> Vec<(usize, usize, f64)> {
    let grid = f.grid();
    let n = grid.n();
    let mut cands = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = f.at(i, j);
            if v <= PEAK_THRESHOLD {
                continue;
            }
            let mut is_max = true;
            'nb: for di in [n - 1, 0, 1] {
                for dj in [n - 1, 0, 1] {
                    if (di, dj) != (0, 0) && f.at((i + di) % n, (j + dj) % n) > v {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                cands.push((i, j, v));
            }
        }
    }
    cands.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
    let mut kept: Vec<(usize, usize, f64)> = Vec::new();
    for c in cands {
        let pc = grid.point(c.0, c.1);
        if kept
            .iter()
            .all(|k| torus::torus_distance(grid.point(k.0, k.1), pc) > radius)
        {
            kept.push(c);
        }
    }
    kept
}

fn ball_mass(density: &Field, center: Point, radius: f64, lambda: f64) -> f64 {
    let grid = density.grid();
    let n = grid.n();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            if torus::torus_distance(grid.point(i, j), center) <= radius {
                acc += density.at(i, j);
            }
        }
    }
    lambda * acc * grid.h() * grid.h()
}

pub fn concentration_report(
    u: &MeanZeroField,
    p: &Params,
    ball_radius: f64,
) -> Result<ConcentrationReport> {
    if !(ball_radius > 0.0 && ball_radius <= 0.25) {
        return Err(crate::Error::InvalidOptions(format!(
            "ball radius {ball_radius} must lie in (0, 0.25]"
        )));
    }
    let grid = u.grid();
    let minus = -u.as_field();
    let mut peaks = Vec::new();
    for (side, field, lambda) in [
        (Side::Plus, u.as_field(), p.lambda1),
        (Side::Minus, &minus, p.lambda2),
    ] {
        let found = find_peaks(field, ball_radius);
        if found.is_empty() {
            continue;
        }
        let density = functional::gibbs_density(field);
        for (i, j, height) in found {
            let location = grid.point(i, j);
            peaks.push(Peak {
                location,
                side,
                height,
                ball_mass: ball_mass(&density, location, ball_radius, lambda),
            });
        }
    }
    let plus = peaks.iter().any(|k| k.side == Side::Plus);
    let minus_side = peaks.iter().any(|k| k.side == Side::Minus);
    let classification = match (plus, minus_side) {
        (false, false) => Classification::Compact,
        (true, true) => Classification::TwoSided,
        _ => Classification::OneSided,
    };
    Ok(ConcentrationReport {
        quantization_gaps: peaks.iter().map(|k| (k.ball_mass - EIGHT_PI).abs()).collect(),
        peaks,
        sup_plus: u.max(),
        sup_minus: -u.min(),
        classification,
    })
}

/// `(m1 − m2)² − 8π(m1 + m2)`; zero on the two-sided mass relation.
pub fn mass_relation_residual(m1: f64, m2: f64) -> f64 {
    (m1 - m2).powi(2) - EIGHT_PI * (m1 + m2)
}

/// Minimum of `x + y` over `x, y ≥ 4π` with `(x − y)² = 8π(x + y)`.
///
/// On the constraint the smaller mass is `(s − √(8πs))/2` for `s = x + y`,
/// so the minimum is the root of `s − √(8πs) − 8π`, found by bisection.
pub fn two_sided_threshold() -> f64 {
    let f = |s: f64| s - (EIGHT_PI * s).sqrt() - EIGHT_PI;
    let (mut lo, mut hi) = (EIGHT_PI, 200.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `4(3 + √5)π`
pub fn two_sided_threshold_closed_form() -> f64 {
    4.0 * (3.0 + 5.0_f64.sqrt()) * PI
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChain {
    pub numeric: f64,
    pub closed_form: f64,
    pub sixteen_pi: f64,
    pub region_bound: f64,
    /// `numeric` agrees with `closed_form` to `1e-10` relative.
    pub agrees: bool,
    /// `4(3+√5)π > 16π > μ1|M|`
    pub chain_holds: bool,
}

/// A two-sided blow-up point forces `λ1 + λ2 ≥ 4(3+√5)π > 16π`, which is
/// incompatible with `λ1 + λ2 < μ1|M| = 4π²`.
pub fn threshold_chain() -> ThresholdChain {
    let numeric = two_sided_threshold();
    let closed_form = two_sided_threshold_closed_form();
    let sixteen_pi = 16.0 * PI;
    let region_bound = MU1 * AREA;
    ThresholdChain {
        numeric,
        closed_form,
        sixteen_pi,
        region_bound,
        agrees: (numeric - closed_form).abs() <= 1e-10 * closed_form,
        chain_holds: numeric > sixteen_pi && sixteen_pi > region_bound,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Converged,
    NotConverged,
    Skipped,
    Failed,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Converged => "converged",
            RowStatus::NotConverged => "not_converged",
            RowStatus::Skipped => "skipped",
            RowStatus::Failed => "failed",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub params: Params,
    pub region: RegionVerdict,
    pub status: RowStatus,
    pub converged: bool,
    pub c_est: Option<f64>,
    pub residual: Option<f64>,
    pub h1_norm: Option<f64>,
    pub i_value: Option<f64>,
    pub classification: Option<Classification>,
    pub message: Option<String>,
}

impl SweepRow {
    fn empty(params: Params, region: RegionVerdict, status: RowStatus) -> Self {
        SweepRow {
            params,
            region,
            status,
            converged: false,
            c_est: None,
            residual: None,
            h1_norm: None,
            i_value: None,
            classification: None,
            message: None,
        }
    }
}

pub fn sweep_row(p: &Params, grid: TorusGrid, opts: &MinimaxOptions, tol: f64) -> SweepRow {
    let region = in_lambda(p);
    if !region.in_region {
        return SweepRow::empty(*p, region, RowStatus::Skipped);
    }
    let result = match minimax::solve(p, grid, opts, tol) {
        Ok(r) => r,
        Err(e) => {
            let mut row = SweepRow::empty(*p, region, RowStatus::Failed);
            row.message = Some(e.to_string());
            return row;
        }
    };
    let refined = result.refined.as_ref().expect("solve always refines");
    let u = &refined.field;
    let converged = result.converged && refined.converged;
    let mut row = SweepRow::empty(
        *p,
        region,
        if converged { RowStatus::Converged } else { RowStatus::NotConverged },
    );
    row.converged = converged;
    row.c_est = Some(result.c_est);
    row.residual = Some(refined.residual);
    row.h1_norm = Some(torus::h1_norm_sq(u).sqrt());
    row.i_value = Some(functional::eval_i(u, p).total);
    row.classification = concentration_report(u, p, DEFAULT_BALL_RADIUS)
        .ok()
        .map(|r| r.classification);
    row
}

/// One row per input, in input order. Rows run on the current rayon pool.
pub fn sweep(params: &[Params], grid: TorusGrid, opts: &MinimaxOptions, tol: f64) -> Vec<SweepRow> {
    params
        .par_iter()
        .map(|p| sweep_row(p, grid, opts, tol))
        .collect()
}
