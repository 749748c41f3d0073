//! The bubble family
//!
//! ```text
//! v_ε(p) = ln ε² / (ε² + d(p,p0)²)²      for d(p,p0) < r0, constant beyond
//! u_ε    = v_ε − mean(v_ε)
//! ```
//!
//! and least-squares fits of its energy terms against `ln(1/ε)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{self, Params};
use crate::torus::{self, Field, MeanZeroField, Point, Regularity, TorusGrid};

pub const DEFAULT_CENTER: Point = Point::new(0.5, 0.5);
pub const DEFAULT_R0: f64 = 0.25;

/// Dyadic scales `2^-3 ..= 2^-7`.
pub fn default_eps_list() -> Vec<f64> {
    (3..=7).map(|k| 2.0_f64.powi(-k)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub center: Point,
    pub eps: f64,
    pub r0: f64,
}

impl BumpSpec {
    pub fn new(center: Point, eps: f64, r0: f64) -> Result<Self> {
        if !(r0 > 0.0 && r0 < 0.5) {
            return Err(Error::InvalidBump(format!(
                "r0 = {r0} must lie in (0, 0.5), below the injectivity radius"
            )));
        }
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::InvalidBump(format!("eps = {eps} must be positive")));
        }
        Ok(BumpSpec { center, eps, r0 })
    }

    /// Rejects scales the grid cannot resolve (`eps < 4h`).
    pub fn check_resolved(&self, grid: TorusGrid) -> Result<()> {
        let min = 4.0 * grid.h();
        if self.eps < min * (1.0 - 1e-12) {
            return Err(Error::InvalidBump(format!(
                "eps = {} is below 4h = {min} on an n = {} grid",
                self.eps,
                grid.n()
            )));
        }
        Ok(())
    }

    /// `v_ε` as a function of the distance to the center.
    pub fn profile(&self, d: f64) -> f64 {
        let e2 = self.eps * self.eps;
        let r = d.min(self.r0);
        (e2 / (e2 + r * r).powi(2)).ln()
    }
}

/// Samples `u_ε` on `grid`. The result is flagged [`Regularity::Kinked`].
pub fn build_u_eps(spec: &BumpSpec, grid: TorusGrid) -> Result<MeanZeroField> {
    spec.check_resolved(grid)?;
    let v = Field::from_fn(grid, |p| spec.profile(torus::torus_distance(p, spec.center)));
    Ok(MeanZeroField::project(v.with_regularity(Regularity::Kinked)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute deviation of a data point from the fitted line.
    pub max_residual: f64,
}

/// Ordinary least squares `y ≈ slope * x + intercept`.
pub fn fit_line(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "need at least two points");
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let max_residual = x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).abs())
        .fold(0.0, f64::max);
    LinearFit {
        slope,
        intercept,
        max_residual,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionRow {
    pub eps: f64,
    pub ln_inv_eps: f64,
    /// `∫|∇u_ε|²`
    pub dirichlet_energy: f64,
    /// `ln ∫ e^{u_ε}`
    pub ln_int_exp_plus: f64,
    /// `ln ∫ e^{−u_ε}`
    pub ln_int_exp_minus: f64,
    pub i_value: f64,
    /// `u_ε(p0)`
    pub peak: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFits {
    pub dirichlet: LinearFit,
    pub ln_exp_plus: LinearFit,
    pub ln_exp_minus: LinearFit,
    pub i_value: LinearFit,
    /// `ln∫e^{u_ε} − ∫|∇u_ε|²/16π`, the Moser–Trudinger gap.
    pub mt_gap: LinearFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub center: Point,
    pub r0: f64,
    pub params: Params,
    pub grid_n: usize,
    /// Sorted by decreasing `eps`.
    pub rows: Vec<ExpansionRow>,
    pub fits: ExpansionFits,
}

pub fn expansion_row(spec: &BumpSpec, p: &Params, grid: TorusGrid) -> Result<ExpansionRow> {
    let u = build_u_eps(spec, grid)?;
    let e = functional::eval_i(&u, p);
    let (i0, j0) = nearest_index(grid, spec.center);
    Ok(ExpansionRow {
        eps: spec.eps,
        ln_inv_eps: (1.0 / spec.eps).ln(),
        dirichlet_energy: 2.0 * e.dirichlet,
        ln_int_exp_plus: e.g_plus,
        ln_int_exp_minus: e.g_minus,
        i_value: e.total,
        peak: u.at(i0, j0),
    })
}

fn nearest_index(grid: TorusGrid, p: Point) -> (usize, usize) {
    let n = grid.n() as f64;
    let idx = |c: f64| ((c * n).round() as usize) % grid.n();
    (idx(p.x), idx(p.y))
}

/// Evaluates the bubble energies at every scale and fits each column
/// against `ln(1/ε)`. Rows are computed in parallel on the current rayon pool.
pub fn expansion_report(
    center: Point,
    r0: f64,
    eps_list: &[f64],
    p: &Params,
    grid: TorusGrid,
) -> Result<ExpansionReport> {
    if eps_list.len() < 4 {
        return Err(Error::InvalidEpsList(format!(
            "a fit needs at least 4 scales, got {}",
            eps_list.len()
        )));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidEpsList("scales must be strictly decreasing".into()));
    }
    let specs = eps_list
        .iter()
        .map(|&eps| {
            let s = BumpSpec::new(center, eps, r0)?;
            s.check_resolved(grid)?;
            Ok(s)
        })
        .collect::<Result<Vec<_>>>()?;

    let rows = specs
        .par_iter()
        .map(|s| expansion_row(s, p, grid))
        .collect::<Result<Vec<_>>>()?;

    let x: Vec<f64> = rows.iter().map(|r| r.ln_inv_eps).collect();
    let col = |f: fn(&ExpansionRow) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
    let mt: Vec<f64> = rows
        .iter()
        .map(|r| r.ln_int_exp_plus - r.dirichlet_energy / (16.0 * std::f64::consts::PI))
        .collect();
    let fits = ExpansionFits {
        dirichlet: fit_line(&x, &col(|r| r.dirichlet_energy)),
        ln_exp_plus: fit_line(&x, &col(|r| r.ln_int_exp_plus)),
        ln_exp_minus: fit_line(&x, &col(|r| r.ln_int_exp_minus)),
        i_value: fit_line(&x, &col(|r| r.i_value)),
        mt_gap: fit_line(&x, &mt),
    };
    Ok(ExpansionReport {
        center,
        r0,
        params: *p,
        grid_n: grid.n(),
        rows,
        fits,
    })
}

/// Drops the scales a grid cannot resolve.
pub fn clip_eps_list(eps_list: &[f64], grid: TorusGrid) -> Vec<f64> {
    let min = 4.0 * grid.h() * (1.0 - 1e-12);
    eps_list.iter().copied().filter(|&e| e >= min).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize) -> TorusGrid {
        TorusGrid::new(n).unwrap()
    }

    #[test]
    fn rejects_unresolved_and_oversized() {
        let g = grid(64);
        let s = BumpSpec::new(DEFAULT_CENTER, 1.0 / 32.0, 0.25).unwrap();
        assert!(build_u_eps(&s, g).is_err());
        assert!(BumpSpec::new(DEFAULT_CENTER, 0.1, 0.5).is_err());
        assert!(BumpSpec::new(DEFAULT_CENTER, 0.0, 0.25).is_err());
    }

    #[test]
    fn bubble_is_mean_zero_and_kinked() {
        let g = grid(128);
        let s = BumpSpec::new(DEFAULT_CENTER, 1.0 / 16.0, 0.25).unwrap();
        let u = build_u_eps(&s, g).unwrap();
        assert!(u.mean().abs() <= torus::mean_zero_tolerance(&u));
        assert_eq!(u.regularity(), Regularity::Kinked);
    }

    #[test]
    fn bubble_is_radial() {
        let g = grid(128);
        let s = BumpSpec::new(DEFAULT_CENTER, 1.0 / 16.0, 0.25).unwrap();
        let u = build_u_eps(&s, g).unwrap();
        // (64 ± a, 64 ± b) and (64 ± b, 64 ± a) share a distance to the center
        for (a, b) in [(3, 4), (0, 7), (5, 12), (2, 9)] {
            let reference = u.at(64 + a, 64 + b);
            for (i, j) in [
                (64 - a, 64 + b),
                (64 + a, 64 - b),
                (64 - a, 64 - b),
                (64 + b, 64 + a),
                (64 - b, 64 - a),
            ] {
                assert!((u.at(i, j) - reference).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fit_line_recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 5.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let f = fit_line(&x, &y);
        assert!((f.slope - 3.0).abs() < 1e-12);
        assert!((f.intercept + 1.0).abs() < 1e-12);
        assert!(f.max_residual < 1e-12);
    }

    #[test]
    fn report_validates_list() {
        let g = grid(64);
        let p = Params::new(30.0, 5.0).unwrap();
        let short = [0.25, 0.125, 0.0625];
        assert!(matches!(
            expansion_report(DEFAULT_CENTER, 0.25, &short, &p, g),
            Err(Error::InvalidEpsList(_))
        ));
        let unsorted = [0.2, 0.25, 0.125, 0.0625];
        assert!(expansion_report(DEFAULT_CENTER, 0.4, &unsorted, &p, g).is_err());
    }

    #[test]
    fn clip_respects_resolution() {
        let clipped = clip_eps_list(&default_eps_list(), grid(128));
        assert_eq!(clipped, vec![0.125, 0.0625, 0.03125]);
    }

    #[test]
    fn dirichlet_matches_closed_form_at_large_eps() {
        // ∫_B |∇v|² = 16π [ln((ε²+r0²)/ε²) + ε²/(ε²+r0²) − 1]
        let (eps, r0): (f64, f64) = (1.0 / 16.0, 0.25);
        let a = eps * eps + r0 * r0;
        let exact = 16.0 * PI * ((a / (eps * eps)).ln() + eps * eps / a - 1.0);
        let s = BumpSpec::new(DEFAULT_CENTER, eps, r0).unwrap();
        let u = build_u_eps(&s, grid(512)).unwrap();
        let d = torus::h1_norm_sq(&u);
        assert!((d - exact).abs() / exact < 5e-3, "{d} vs {exact}");
    }
}
