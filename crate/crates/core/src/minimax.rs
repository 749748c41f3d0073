//! Mountain-pass engine.
//!
//! A discrete path runs from the origin (a strict local minimum when
//! `λ1 + λ2 < μ1`) to a bubble of negative energy. Each sweep pushes the
//! nodes near the top of the path down the Sobolev gradient, which lowers
//! the path maximum towards the minimax level
//!
//! ```text
//! c = inf_{γ ∈ Γ} max_{t ∈ [0,1]} I(γ(t)).
//! ```
//!
//! The highest node is then polished into a critical point by
//! [`refine_critical`].

use serde::{Deserialize, Serialize};

use crate::bumps::{self, BumpSpec};
use crate::diagnostics;
use crate::error::{Error, Result};
use crate::functional::{self, Linearization, Params};
use crate::krylov::{self, GmresOptions};
use crate::torus::{self, Field, MeanZeroField, Regularity, TorusGrid};

/// Cutoff radius of the bubble used as path endpoint. Larger than the
/// expansion default so that negative energy is reached at resolvable scales.
pub const ENDPOINT_R0: f64 = 0.45;

/// Energy-norm radius at which the path is probed for the lower bound on `c`.
pub const LOWER_BOUND_RADIUS: f64 = 0.1;

/// Steps below this size count as stagnation.
pub const MIN_STEP: f64 = 1e-12;

/// Refinement switches from descent to Newton below this L² residual.
pub const NEWTON_SWITCH: f64 = 10.0;

const ARMIJO: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinimaxOptions {
    /// Number of path segments `K`; the path has `K + 1` nodes.
    pub nodes: usize,
    pub max_iters: usize,
    pub step0: f64,
    /// Energy-dual norm of `I'` at the highest node that counts as converged.
    pub grad_tol: f64,
    /// Nodes within `band * (max − min)` of the path maximum move each sweep.
    pub band: f64,
    /// Endpoint scalings tried in order.
    pub seeds: Vec<f64>,
    /// Arc-length redistribution period, in sweeps.
    pub reparam_every: usize,
}

impl Default for MinimaxOptions {
    fn default() -> Self {
        MinimaxOptions {
            nodes: 24,
            max_iters: 1000,
            step0: 1.0,
            grad_tol: 1e-3,
            band: 0.15,
            seeds: vec![1.0, 1.5, 2.0],
            reparam_every: 10,
        }
    }
}

impl MinimaxOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidOptions(m));
        if self.nodes < 8 {
            return bad(format!("K = {} must be at least 8", self.nodes));
        }
        if !(self.step0 > 0.0 && self.step0.is_finite()) {
            return bad(format!("step0 = {} must be positive", self.step0));
        }
        if !(self.band > 0.0 && self.band <= 0.5) {
            return bad(format!("band = {} must lie in (0, 0.5]", self.band));
        }
        if !(self.grad_tol > 0.0 && self.grad_tol.is_finite()) {
            return bad(format!("grad_tol = {} must be positive", self.grad_tol));
        }
        if self.seeds.is_empty() || self.seeds.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
            return bad("seeds must be a non-empty list of positive scalings".into());
        }
        if self.reparam_every == 0 {
            return bad("reparam_every must be positive".into());
        }
        Ok(())
    }
}

/// Discrete path `γ(j/K)`, `j = 0..=K`, from `0` to the endpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct Path {
    nodes: Vec<MeanZeroField>,
}

impl Path {
    pub fn nodes(&self) -> &[MeanZeroField] {
        &self.nodes
    }

    /// Number of segments `K`.
    pub fn segments(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn endpoint(&self) -> &MeanZeroField {
        self.nodes.last().expect("paths have at least two nodes")
    }

    pub fn energies(&self, p: &Params) -> Vec<f64> {
        self.nodes.iter().map(|u| functional::eval_i(u, p).total).collect()
    }

    /// First node whose energy norm reaches `rho`, with its energy.
    pub fn first_crossing(&self, rho: f64, p: &Params) -> Option<(usize, f64)> {
        self.nodes
            .iter()
            .position(|u| torus::h1_norm_sq(u).sqrt() >= rho)
            .map(|j| (j, functional::eval_i(&self.nodes[j], p).total))
    }
}

/// Scale and sign of the first bubble `±u_ε`, scanning `ε` downwards from
/// `ENDPOINT_R0 / 4` in quarter-octave steps to `4h`, with negative energy
/// and energy norm at least one. The sign follows the larger parameter.
fn endpoint_scale(p: &Params, grid: TorusGrid) -> Result<(f64, f64)> {
    let threshold = 8.0 * std::f64::consts::PI;
    if p.max() <= threshold {
        return Err(Error::BoundedBelow(p.max()));
    }
    let sign = if p.lambda1 > threshold { 1.0 } else { -1.0 };
    let min_eps = 4.0 * grid.h();
    let ratio = 2.0_f64.powf(-0.25);
    let mut eps = ENDPOINT_R0 / 4.0;
    let mut best = (f64::INFINITY, eps);
    while eps >= min_eps * (1.0 - 1e-12) {
        let u = endpoint_bubble(eps, sign, grid)?;
        let total = functional::eval_i(&u, p).total;
        if total < 0.0 && torus::h1_norm_sq(&u) >= 1.0 {
            return Ok((eps, sign));
        }
        if total < best.0 {
            best = (total, eps);
        }
        eps *= ratio;
    }
    Err(Error::NoNegativeEndpoint {
        best_total: best.0,
        best_eps: best.1,
    })
}

/// The minimax works with the spectral functional throughout, so the bubble
/// is flagged smooth.
fn endpoint_bubble(eps: f64, sign: f64, grid: TorusGrid) -> Result<MeanZeroField> {
    let spec = BumpSpec::new(bumps::DEFAULT_CENTER, eps, ENDPOINT_R0)?;
    Ok(bumps::build_u_eps(&spec, grid)?
        .scaled(sign)
        .with_regularity(Regularity::Smooth))
}

/// First bubble `±u_ε` of a decreasing scan with `I < 0` and `‖·‖ ≥ 1`.
pub fn find_negative_endpoint(p: &Params, grid: TorusGrid) -> Result<MeanZeroField> {
    let (eps, sign) = endpoint_scale(p, grid)?;
    endpoint_bubble(eps, sign, grid)
}

/// Straight segment `j/K · endpoint`.
pub fn init_path(endpoint: &MeanZeroField, k: usize) -> Result<Path> {
    if k < 8 {
        return Err(Error::InvalidOptions(format!("K = {k} must be at least 8")));
    }
    let mut nodes: Vec<MeanZeroField> = (0..k)
        .map(|j| endpoint.scaled(j as f64 / k as f64))
        .collect();
    nodes[0] = MeanZeroField::zeros(endpoint.grid());
    nodes.push(endpoint.clone());
    Ok(Path { nodes })
}

/// Highest point of the piecewise-linear path: on segment `seg` at
/// `(1 − a) u_seg + a u_{seg+1}`.
#[derive(Clone, Debug)]
struct PathMax {
    energy: f64,
    seg: usize,
    a: f64,
    point: MeanZeroField,
}

const SAMPLES: [f64; 3] = [0.25, 0.5, 0.75];
const GOLDEN_ITERS: usize = 48;

fn point_on(nodes: &[MeanZeroField], seg: usize, a: f64) -> MeanZeroField {
    if a == 0.0 {
        nodes[seg].clone()
    } else if a == 1.0 {
        nodes[seg + 1].clone()
    } else {
        nodes[seg].lin_comb(1.0 - a, &nodes[seg + 1], a)
    }
}

fn path_max(nodes: &[MeanZeroField], energies: &[f64], p: &Params) -> PathMax {
    let k = nodes.len() - 1;
    let energy_at = |seg: usize, a: f64| functional::eval_i(&point_on(nodes, seg, a), p).total;

    // coarse samples: nodes plus three interior points per segment
    let mut best = (energies[0], 0, 0.0);
    for (j, &e) in energies.iter().enumerate() {
        if e > best.0 {
            best = if j < k { (e, j, 0.0) } else { (e, k - 1, 1.0) };
        }
    }
    for seg in 0..k {
        for &a in &SAMPLES {
            let e = energy_at(seg, a);
            if e > best.0 {
                best = (e, seg, a);
            }
        }
    }

    // golden-section refinement on the brackets around the best sample
    let mut brackets = Vec::new();
    let (_, seg, a) = best;
    if a > 0.0 && a < 1.0 {
        brackets.push((seg, a - 0.25, a + 0.25));
    } else {
        let node = if a == 0.0 { seg } else { seg + 1 };
        if node > 0 {
            brackets.push((node - 1, 0.75, 1.0));
        }
        if node < k {
            brackets.push((node, 0.0, 0.25));
        }
    }
    let g = (5.0_f64.sqrt() - 1.0) / 2.0;
    for (seg, mut lo, mut hi) in brackets {
        let mut x1 = hi - g * (hi - lo);
        let mut x2 = lo + g * (hi - lo);
        let mut f1 = energy_at(seg, x1);
        let mut f2 = energy_at(seg, x2);
        for _ in 0..GOLDEN_ITERS {
            if f1 >= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - g * (hi - lo);
                f1 = energy_at(seg, x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + g * (hi - lo);
                f2 = energy_at(seg, x2);
            }
        }
        for (x, f) in [(x1, f1), (x2, f2)] {
            if f > best.0 {
                best = (f, seg, x);
            }
        }
    }

    let (energy, seg, a) = best;
    PathMax {
        energy,
        seg,
        a,
        point: point_on(nodes, seg, a),
    }
}

fn sobolev_grad(u: &MeanZeroField, p: &Params) -> MeanZeroField {
    torus::inv_minus_laplacian_unchecked(&functional::residual(u, p))
}

struct SweepState<'a> {
    params: &'a Params,
    opts: &'a MinimaxOptions,
    nodes: Vec<MeanZeroField>,
    energies: Vec<f64>,
    top: PathMax,
}

impl<'a> SweepState<'a> {
    fn new(path: &Path, params: &'a Params, opts: &'a MinimaxOptions) -> Self {
        let energies = path.energies(params);
        let top = path_max(&path.nodes, &energies, params);
        SweepState {
            params,
            opts,
            nodes: path.nodes.clone(),
            energies,
            top,
        }
    }

    fn k(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Interior node the path maximum is moved onto.
    fn anchor(&self) -> usize {
        let (seg, k) = (self.top.seg, self.k());
        let j = if self.top.a < 0.5 { seg } else { seg + 1 };
        j.clamp(1, k - 1)
    }

    /// Moves the anchor node onto the path maximum, then steps every node in
    /// the band along its negative Sobolev gradient with Armijo backtracking
    /// from `step`. Returns the candidate nodes and energies.
    fn trial(&self, step: f64, top_grad: &MeanZeroField) -> (Vec<MeanZeroField>, Vec<f64>) {
        let mut nodes = self.nodes.clone();
        let mut energies = self.energies.clone();
        let anchor = self.anchor();
        nodes[anchor] = self.top.point.clone();
        energies[anchor] = self.top.energy;

        let emax = self.top.energy;
        let emin = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let cut = emax - self.opts.band * (emax - emin);
        for j in 1..self.k() {
            if energies[j] < cut {
                continue;
            }
            let g = if j == anchor {
                top_grad.clone()
            } else {
                sobolev_grad(&nodes[j], self.params)
            };
            let gsq = torus::h1_norm_sq(&g);
            if gsq == 0.0 {
                continue;
            }
            let mut t = step;
            while t >= MIN_STEP {
                let cand = nodes[j].lin_comb(1.0, &g, -t);
                let e = functional::eval_i(&cand, self.params).total;
                if e <= energies[j] - ARMIJO * t * gsq {
                    nodes[j] = cand;
                    energies[j] = e;
                    break;
                }
                t *= 0.5;
            }
        }
        (nodes, energies)
    }

    /// One sweep. The candidate is accepted once the path maximum does not
    /// rise; otherwise the initial step is halved.
    fn sweep(&mut self, top_grad: &MeanZeroField) -> Result<()> {
        let mut step = self.opts.step0;
        while step >= MIN_STEP {
            let (nodes, energies) = self.trial(step, top_grad);
            let top = path_max(&nodes, &energies, self.params);
            if top.energy <= self.top.energy {
                self.nodes = nodes;
                self.energies = energies;
                self.top = top;
                return Ok(());
            }
            step *= 0.5;
        }
        Err(Error::Stagnation {
            node: self.anchor(),
            min_step: MIN_STEP,
        })
    }

    /// Redistributes interior nodes uniformly in energy-norm arc length with
    /// the path maximum as a node. Rejected if the maximum would rise.
    fn reparametrize(&mut self) {
        let k = self.k();
        let mut arc = vec![0.0; k + 1];
        for j in 0..k {
            let d = self.nodes[j + 1].lin_comb(1.0, &self.nodes[j], -1.0);
            arc[j + 1] = arc[j] + torus::h1_norm_sq(&d).sqrt();
        }
        let total = arc[k];
        if total.is_nan() || total <= 0.0 {
            return;
        }
        let s_top = arc[self.top.seg] + self.top.a * (arc[self.top.seg + 1] - arc[self.top.seg]);
        let new_top = ((s_top / total * k as f64).round() as usize).clamp(1, k - 1);
        let target = |j: usize| {
            if j <= new_top {
                s_top * j as f64 / new_top as f64
            } else {
                s_top + (total - s_top) * (j - new_top) as f64 / (k - new_top) as f64
            }
        };

        let mut nodes = Vec::with_capacity(k + 1);
        nodes.push(self.nodes[0].clone());
        let mut seg = 0;
        for j in 1..k {
            if j == new_top {
                nodes.push(self.top.point.clone());
                continue;
            }
            let s = target(j);
            while seg + 1 < k && arc[seg + 1] < s {
                seg += 1;
            }
            let len = arc[seg + 1] - arc[seg];
            let a = if len > 0.0 { ((s - arc[seg]) / len).clamp(0.0, 1.0) } else { 0.0 };
            nodes.push(point_on(&self.nodes, seg, a));
        }
        nodes.push(self.nodes[k].clone());

        let energies: Vec<f64> = nodes
            .iter()
            .map(|u| functional::eval_i(u, self.params).total)
            .collect();
        let top = path_max(&nodes, &energies, self.params);
        if top.energy <= self.top.energy {
            self.nodes = nodes;
            self.energies = energies;
            self.top = top;
        }
    }
}

/// One deformation sweep.
///
/// The highest point of the piecewise-linear path becomes a node, and every
/// node within the band below the maximum takes one backtracked step along
/// its negative Sobolev gradient. The sweep is accepted once the path
/// maximum has not risen, halving the initial step as needed; stagnation is
/// reported when that step underflows. Endpoints never move. If the path
/// maximum is already critical the path is returned unchanged.
pub fn deform_step(path: &Path, p: &Params, opts: &MinimaxOptions) -> Result<Path> {
    opts.validate()?;
    let mut state = SweepState::new(path, p, opts);
    let g = sobolev_grad(&state.top.point, p);
    if torus::h1_norm_sq(&g) == 0.0 {
        return Ok(path.clone());
    }
    state.sweep(&g)?;
    Ok(Path { nodes: state.nodes })
}

/// Maximum of `I` over the piecewise-linear path.
pub fn path_max_energy(path: &Path, p: &Params) -> f64 {
    path_max(&path.nodes, &path.energies(p), p).energy
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub iter: usize,
    /// Maximum of `I` over the path.
    pub max_energy: f64,
    /// Energy-dual norm of `I'` at the path maximum.
    pub grad_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttemptOutcome {
    Converged,
    Stagnated,
    BudgetExhausted,
    /// The dilated endpoint was not resolvable or not of negative energy.
    Skipped,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedAttempt {
    pub scale: f64,
    pub eps: f64,
    pub outcome: AttemptOutcome,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RefineOutcome {
    pub field: MeanZeroField,
    /// L² norm of the residual at `field`.
    pub residual: f64,
    pub converged: bool,
    pub descent_iters: usize,
    pub newton_iters: usize,
}

#[derive(Clone, Debug)]
pub struct MinimaxResult {
    pub c_est: f64,
    /// The path maximum.
    pub argmax: MeanZeroField,
    /// Path parameter of `argmax` in `[0, 1]`.
    pub argmax_t: f64,
    /// History of the reported attempt (the converged one, else the last).
    pub history: Vec<HistoryEntry>,
    pub converged: bool,
    pub seed_scale: f64,
    pub attempts: Vec<SeedAttempt>,
    pub path: Path,
    pub refined: Option<RefineOutcome>,
}

struct Attempt {
    outcome: AttemptOutcome,
    history: Vec<HistoryEntry>,
    path: Path,
    top: PathMax,
}

fn run_attempt(path: Path, p: &Params, opts: &MinimaxOptions) -> Attempt {
    let mut state = SweepState::new(&path, p, opts);
    let mut history = Vec::new();
    let mut outcome = AttemptOutcome::BudgetExhausted;
    for it in 0..=opts.max_iters {
        let g = sobolev_grad(&state.top.point, p);
        let gnorm = torus::h1_norm_sq(&g).sqrt();
        history.push(HistoryEntry {
            iter: it,
            max_energy: state.top.energy,
            grad_norm: gnorm,
        });
        if gnorm < opts.grad_tol {
            outcome = AttemptOutcome::Converged;
            break;
        }
        if it == opts.max_iters {
            break;
        }
        if state.sweep(&g).is_err() {
            outcome = AttemptOutcome::Stagnated;
            break;
        }
        if (it + 1) % opts.reparam_every == 0 {
            state.reparametrize();
        }
    }
    Attempt {
        outcome,
        history,
        path: Path { nodes: state.nodes },
        top: state.top,
    }
}

/// Minimax from straight-line paths, restarting over the seed scalings until
/// one attempt meets `grad_tol`. A seed `s` dilates the endpoint bubble to
/// `ε/s`; seeds whose dilation falls below `4h` are skipped.
pub fn run_minimax(p: &Params, grid: TorusGrid, opts: &MinimaxOptions) -> Result<MinimaxResult> {
    opts.validate()?;
    if !diagnostics::in_lambda(p).in_region {
        return Err(Error::OutsideRegion(p.lambda1, p.lambda2));
    }
    let (eps0, sign) = endpoint_scale(p, grid)?;
    let min_eps = 4.0 * grid.h() * (1.0 - 1e-12);

    let mut attempts = Vec::new();
    let mut last: Option<(f64, Attempt)> = None;
    for &scale in &opts.seeds {
        let eps = eps0 / scale;
        let endpoint = if eps >= min_eps {
            Some(endpoint_bubble(eps, sign, grid)?)
        } else {
            None
        };
        let endpoint = match endpoint {
            Some(u) if functional::eval_i(&u, p).total < 0.0 => u,
            _ => {
                attempts.push(SeedAttempt {
                    scale,
                    eps,
                    outcome: AttemptOutcome::Skipped,
                    iterations: 0,
                });
                continue;
            }
        };
        let attempt = run_attempt(init_path(&endpoint, opts.nodes)?, p, opts);
        attempts.push(SeedAttempt {
            scale,
            eps,
            outcome: attempt.outcome,
            iterations: attempt.history.len() - 1,
        });
        let done = attempt.outcome == AttemptOutcome::Converged;
        last = Some((scale, attempt));
        if done {
            break;
        }
    }

    let (seed_scale, attempt) = match last {
        Some(v) => v,
        None => {
            // every seed was skipped; fall back to the undilated endpoint
            let endpoint = endpoint_bubble(eps0, sign, grid)?;
            (1.0, run_attempt(init_path(&endpoint, opts.nodes)?, p, opts))
        }
    };
    let k = attempt.path.segments() as f64;
    Ok(MinimaxResult {
        c_est: attempt.top.energy,
        argmax_t: (attempt.top.seg as f64 + attempt.top.a) / k,
        argmax: attempt.top.point,
        converged: attempt.outcome == AttemptOutcome::Converged,
        history: attempt.history,
        seed_scale,
        attempts,
        path: attempt.path,
        refined: None,
    })
}

/// Minimax followed by refinement of the highest node.
pub fn solve(p: &Params, grid: TorusGrid, opts: &MinimaxOptions, tol: f64) -> Result<MinimaxResult> {
    let mut result = run_minimax(p, grid, opts)?;
    result.refined = Some(refine_critical(&result.argmax, p, tol));
    Ok(result)
}

fn l2_residual(u: &MeanZeroField, p: &Params) -> f64 {
    functional::residual(u, p).l2_norm()
}

/// Merit `½‖(−Δ)^{-1} R(u)‖²`, the squared energy-dual norm of `I'(u)`,
/// together with the gradient it was computed from.
fn merit(u: &MeanZeroField, p: &Params) -> (f64, MeanZeroField) {
    let g = torus::inv_minus_laplacian_unchecked(&functional::residual(u, p));
    (0.5 * torus::h1_norm_sq(&g), g)
}

const DESCENT_BUDGET: usize = 20_000;
const NEWTON_BUDGET: usize = 60;
const FALLBACK_STEPS: usize = 25;
/// Newton iterations allowed without halving the best residual.
const NEWTON_STALL: usize = 4;

struct Refiner<'a> {
    p: &'a Params,
    u: MeanZeroField,
    phi: f64,
    grad: MeanZeroField,
    step: f64,
    descent_iters: usize,
}

impl<'a> Refiner<'a> {
    fn new(u0: &MeanZeroField, p: &'a Params) -> Self {
        let u = u0.clone().with_regularity(Regularity::Smooth);
        let (phi, grad) = merit(&u, p);
        Refiner {
            p,
            u,
            phi,
            grad,
            step: 1.0,
            descent_iters: 0,
        }
    }

    /// One backtracked step of Sobolev-gradient descent on the merit.
    /// Returns false once the step underflows.
    fn descent_step(&mut self) -> bool {
        let lin = Linearization::at(&self.u, self.p);
        // merit gradient in the energy space: (−Δ)^{-1} DR(u)[g]
        let d = torus::inv_minus_laplacian_unchecked(&lin.apply(&self.grad));
        let dsq = torus::h1_norm_sq(&d);
        if dsq == 0.0 {
            return false;
        }
        self.descent_iters += 1;
        let mut t = self.step;
        loop {
            let cand = self.u.lin_comb(1.0, &d, -t);
            let (phi, grad) = merit(&cand, self.p);
            if phi <= self.phi - ARMIJO * t * dsq {
                self.u = cand;
                self.phi = phi;
                self.grad = grad;
                self.step = (t * 2.0).min(1e6);
                return true;
            }
            t *= 0.5;
            if t < 1e-14 {
                return false;
            }
        }
    }

    /// One damped Newton step; the Jacobian solve is GMRES on the
    /// `(−Δ)^{-1}`-preconditioned linearization. Returns false if no
    /// damping of the Newton direction lowers the residual.
    fn newton_step(&mut self, res: f64) -> bool {
        let grid = self.u.grid();
        let lin = Linearization::at(&self.u, self.p);
        let apply = |v: &[f64]| -> Vec<f64> {
            let f = Field::from_raw(grid, v.to_vec(), Regularity::Smooth);
            torus::inv_minus_laplacian_unchecked(&lin.apply(&f)).into_field().into_values()
        };
        let rhs: Vec<f64> = self.grad.values().iter().map(|v| -v).collect();
        let out = krylov::gmres(apply, &rhs, &GmresOptions::default());
        let dir = MeanZeroField::project(Field::from_raw(grid, out.x, Regularity::Smooth));
        let mut t = 1.0;
        while t >= 1.0 / 64.0 {
            let cand = self.u.lin_comb(1.0, &dir, t);
            if l2_residual(&cand, self.p) < res {
                let (phi, grad) = merit(&cand, self.p);
                self.u = cand;
                self.phi = phi;
                self.grad = grad;
                return true;
            }
            t *= 0.5;
        }
        false
    }
}

/// Drives `u0` to a zero of the residual: Sobolev-gradient descent on
/// `½‖I'(u)‖²` until the L² residual drops below [`NEWTON_SWITCH`], then
/// damped Newton–Krylov, falling back to descent when Newton stalls.
///
/// Never fails silently: when a budget runs out the best iterate comes back
/// with `converged = false`.
pub fn refine_critical(u0: &MeanZeroField, p: &Params, tol: f64) -> RefineOutcome {
    let mut r = Refiner::new(u0, p);
    let mut res = l2_residual(&r.u, p);
    let mut newton_iters = 0;
    let mut best = (res, r.u.clone());

    if res > tol {
        while res >= NEWTON_SWITCH && r.descent_iters < DESCENT_BUDGET {
            if !r.descent_step() {
                break;
            }
            res = l2_residual(&r.u, p);
        }
        if res < best.0 {
            best = (res, r.u.clone());
        }
        let mut stalled = 0;
        while res > tol && newton_iters < NEWTON_BUDGET && stalled < NEWTON_STALL {
            newton_iters += 1;
            if !r.newton_step(res) {
                let mut moved = false;
                for _ in 0..FALLBACK_STEPS {
                    moved |= r.descent_step();
                }
                if !moved {
                    break;
                }
            }
            res = l2_residual(&r.u, p);
            stalled = if res < 0.5 * best.0 { 0 } else { stalled + 1 };
            if res < best.0 {
                best = (res, r.u.clone());
            }
        }
    }

    let (residual, field) = best;
    RefineOutcome {
        converged: residual <= tol,
        field,
        residual,
        descent_iters: r.descent_iters,
        newton_iters,
    }
}
