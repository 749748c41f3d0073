//! The mean field energy
//!
//! ```text
//! I(u) = ½∫|∇u|² − λ1 G(u) − λ2 G(−u),     G(u) = ln( (1/|M|) ∫ e^u )
//! ```
//!
//! together with its L² gradient (the PDE residual), its Riesz representative
//! in the zero-mean energy space, and the second variation at the origin.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{self, Field, MeanZeroField};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl Params {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        for (name, v) in [("lambda1", lambda1), ("lambda2", lambda2)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!("{name} = {v} must be finite and >= 0")));
            }
        }
        Ok(Params { lambda1, lambda2 })
    }

    /// `(λ2, λ1)`.
    pub fn swapped(&self) -> Params {
        Params {
            lambda1: self.lambda2,
            lambda2: self.lambda1,
        }
    }

    /// `(λ1 + s, λ2 + s)`.
    pub fn shifted(&self, s: f64) -> Params {
        Params {
            lambda1: self.lambda1 + s,
            lambda2: self.lambda2 + s,
        }
    }

    pub fn sum(&self) -> f64 {
        self.lambda1 + self.lambda2
    }

    pub fn max(&self) -> f64 {
        self.lambda1.max(self.lambda2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `½∫|∇u|²`
    pub dirichlet: f64,
    /// `G(u)`
    pub g_plus: f64,
    /// `G(−u)`
    pub g_minus: f64,
    pub total: f64,
}

/// Stable `ln mean(e^u)`; equals `G(u)` because the torus has unit area.
pub fn eval_g(u: &Field) -> f64 {
    let m = u.max();
    let s: f64 = u.values().iter().map(|&v| (v - m).exp()).sum();
    m + (s / u.values().len() as f64).ln()
}

pub fn eval_i(u: &MeanZeroField, p: &Params) -> EnergyBreakdown {
    let dirichlet = 0.5 * torus::h1_norm_sq(u);
    let g_plus = eval_g(u);
    let g_minus = eval_g(&-u.as_field());
    EnergyBreakdown {
        dirichlet,
        g_plus,
        g_minus,
        total: dirichlet - p.lambda1 * g_plus - p.lambda2 * g_minus,
    }
}

/// Probability density `e^u / ∫ e^u`, evaluated without overflow.
pub fn gibbs_density(u: &Field) -> Field {
    let m = u.max();
    let e = u.map(|v| (v - m).exp());
    let z = e.mean();
    e.map(|v| v / z)
}

/// `R(u) = −Δu − λ1(e^u/∫e^u − 1) + λ2(e^{−u}/∫e^{−u} − 1)`.
///
/// This is the L² gradient of `I` on zero-mean directions.
pub fn residual(u: &MeanZeroField, p: &Params) -> MeanZeroField {
    let lap = torus::minus_laplacian(u);
    let rho_plus = gibbs_density(u);
    let rho_minus = gibbs_density(&-u.as_field());
    let values: Vec<f64> = lap
        .values()
        .iter()
        .zip(rho_plus.values())
        .zip(rho_minus.values())
        .map(|((&l, &rp), &rm)| l - p.lambda1 * (rp - 1.0) + p.lambda2 * (rm - 1.0))
        .collect();
    let f = Field::from_values(u.grid(), values).expect("residual of a finite field is finite");
    // exact zero mean up to rounding; remove the rounding
    MeanZeroField::project(f)
}

/// Riesz representative of `I'(u)` in the energy space: `(−Δ)^{-1} R(u)`.
pub fn sobolev_gradient(u: &MeanZeroField, p: &Params) -> Result<MeanZeroField> {
    torus::inv_minus_laplacian(&residual(u, p))
}

/// Energy-space dual norm of `G'(u)`.
pub fn dual_norm_gprime(u: &MeanZeroField) -> f64 {
    let rho = MeanZeroField::project(gibbs_density(u));
    let w = torus::inv_minus_laplacian_unchecked(&rho);
    torus::h1_norm_sq(&w).sqrt()
}

/// `⟨I''(0)φ, φ⟩ = ∫|∇φ|² − (λ1 + λ2) ∫ φ²`.
pub fn hess_at_zero_quadform(phi: &MeanZeroField, p: &Params) -> f64 {
    torus::h1_norm_sq(phi) - p.sum() * phi.dot(phi)
}

/// Derivative of [`residual`] at `u` applied to `v`:
///
/// `−Δv − λ1 ρ₊ (v − ∫ρ₊v) − λ2 ρ₋ (v − ∫ρ₋v)`, with `ρ± = e^{±u}/∫e^{±u}`.
pub fn linearized_residual(u: &MeanZeroField, p: &Params, v: &Field) -> MeanZeroField {
    Linearization::at(u, p).apply(v)
}

/// Frozen densities for repeated Jacobian-vector products at one point.
pub(crate) struct Linearization {
    params: Params,
    rho_plus: Field,
    rho_minus: Field,
}

impl Linearization {
    pub(crate) fn at(u: &MeanZeroField, p: &Params) -> Self {
        Linearization {
            params: *p,
            rho_plus: gibbs_density(u),
            rho_minus: gibbs_density(&-u.as_field()),
        }
    }

    pub(crate) fn apply(&self, v: &Field) -> MeanZeroField {
        let lap = torus::minus_laplacian(v);
        let avg_plus = self.rho_plus.dot(v);
        let avg_minus = self.rho_minus.dot(v);
        let (l1, l2) = (self.params.lambda1, self.params.lambda2);
        let values: Vec<f64> = lap
            .values()
            .iter()
            .zip(v.values())
            .zip(self.rho_plus.values().iter().zip(self.rho_minus.values()))
            .map(|((&l, &x), (&rp, &rm))| {
                l - l1 * rp * (x - avg_plus) - l2 * rm * (x - avg_minus)
            })
            .collect();
        MeanZeroField::project(Field::from_raw(v.grid(), values, v.regularity()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{Point, TorusGrid};
    use std::f64::consts::PI;

    /// `ln( ∫_0^1 e^{a cos 2πx} dx )` by a 20000-point midpoint rule.
    fn ln_bessel_i0(a: f64) -> f64 {
        let m = 20_000;
        let s: f64 = (0..m)
            .map(|k| (a * (2.0 * PI * (k as f64 + 0.5) / m as f64).cos()).exp())
            .sum();
        (s / m as f64).ln()
    }

    fn grid() -> TorusGrid {
        TorusGrid::new(64).unwrap()
    }

    fn cos_x(g: TorusGrid, a: f64) -> MeanZeroField {
        MeanZeroField::new(Field::from_fn(g, move |p: Point| a * (2.0 * PI * p.x).cos())).unwrap()
    }

    #[test]
    fn bessel_oracle_values() {
        assert!((ln_bessel_i0(1.0) - 0.235_914).abs() < 1e-5);
        assert!((ln_bessel_i0(0.5) - 0.061_550).abs() < 1e-5);
    }

    #[test]
    fn g_examples() {
        let g = grid();
        assert_eq!(eval_g(&Field::zeros(g)), 0.0);
        assert!((eval_g(&cos_x(g, 1.0)) - ln_bessel_i0(1.0)).abs() < 1e-12);
        let f = Field::from_fn(g, |p| 0.5 * (2.0 * PI * p.y).cos());
        assert!((eval_g(&f) - ln_bessel_i0(0.5)).abs() < 1e-12);
    }

    #[test]
    fn g_survives_large_amplitudes() {
        let g = grid();
        let f = Field::from_fn(g, |p| 800.0 * (2.0 * PI * p.x).cos());
        let v = eval_g(&f);
        assert!(v.is_finite() && v > 790.0);
    }

    #[test]
    fn energy_examples() {
        let g = grid();
        let zero = MeanZeroField::zeros(g);
        assert_eq!(eval_i(&zero, &Params::new(30.0, 5.0).unwrap()).total, 0.0);
        let u = cos_x(g, 1.0);
        let e0 = eval_i(&u, &Params::new(0.0, 0.0).unwrap());
        assert!((e0.total - PI * PI).abs() < 1e-10);
        let e = eval_i(&u, &Params::new(10.0, 10.0).unwrap());
        let expect = PI * PI - 20.0 * ln_bessel_i0(1.0);
        assert!((e.total - expect).abs() < 1e-8, "{} vs {expect}", e.total);
        assert!((e.total - 5.151).abs() < 1e-3);
        let recombined = e.dirichlet - 10.0 * e.g_plus - 10.0 * e.g_minus;
        assert!((recombined - e.total).abs() <= 1e-12 * e.total.abs());
    }

    #[test]
    fn residual_examples() {
        let g = grid();
        let r0 = residual(&MeanZeroField::zeros(g), &Params::new(30.0, 5.0).unwrap());
        assert!(r0.max_abs() < 1e-13);
        let u = cos_x(g, 1.0);
        let r = residual(&u, &Params::new(0.0, 0.0).unwrap());
        for (a, b) in r.values().iter().zip(u.values()) {
            assert!((a - 4.0 * PI * PI * b).abs() < 1e-10);
        }
    }

    #[test]
    fn sobolev_gradient_examples() {
        let g = grid();
        let p = Params::new(30.0, 5.0).unwrap();
        let s = sobolev_gradient(&MeanZeroField::zeros(g), &p).unwrap();
        assert!(s.max_abs() < 1e-15);
        let u = MeanZeroField::new(Field::from_fn(g, |q| {
            (2.0 * PI * q.x).sin() + 0.3 * (2.0 * PI * (2.0 * q.x + q.y)).cos()
        }))
        .unwrap();
        let s = sobolev_gradient(&u, &Params::new(0.0, 0.0).unwrap()).unwrap();
        for (a, b) in s.values().iter().zip(u.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn descent_along_sobolev_gradient() {
        let g = grid();
        let p = Params::new(30.0, 5.0).unwrap();
        let u = cos_x(g, 1.3);
        let s = sobolev_gradient(&u, &p).unwrap();
        assert!(torus::h1_norm_sq(&s) > 1e-8);
        let e0 = eval_i(&u, &p).total;
        for t in [1e-3, 1e-2, 0.1] {
            let v = u.lin_comb(1.0, &s, -t);
            assert!(eval_i(&v, &p).total < e0);
        }
    }

    #[test]
    fn dual_norm_examples() {
        let g = grid();
        assert!(dual_norm_gprime(&MeanZeroField::zeros(g)) < 1e-15);
    }

    #[test]
    fn hessian_examples() {
        let g = grid();
        let u = cos_x(g, 1.0);
        let q = hess_at_zero_quadform(&u, &Params::new(30.0, 5.0).unwrap());
        assert!((q - (2.0 * PI * PI - 17.5)).abs() < 1e-10);
        assert!((q - 2.239).abs() < 1e-3);
        let q0 = hess_at_zero_quadform(&u, &Params::new(0.0, 0.0).unwrap());
        assert_eq!(q0, torus::h1_norm_sq(&u));
        let half = 2.0 * PI * PI;
        let qc = hess_at_zero_quadform(&u, &Params::new(half, half).unwrap());
        assert!(qc.abs() < 1e-10);
    }

    #[test]
    fn params_validation() {
        assert!(Params::new(-1.0, 0.0).is_err());
        assert!(Params::new(f64::NAN, 0.0).is_err());
        let p = Params::new(30.0, 5.0).unwrap();
        assert_eq!(p.swapped(), Params::new(5.0, 30.0).unwrap());
    }
}
