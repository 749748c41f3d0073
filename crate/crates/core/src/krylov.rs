//! Restarted GMRES for matrix-free linear operators.

#[derive(Clone, Copy, Debug)]
pub struct GmresOptions {
    pub restart: usize,
    pub max_iters: usize,
    /// Stop once `‖b − Ax‖ ≤ rel_tol ‖b‖`.
    pub rel_tol: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions {
            restart: 60,
            max_iters: 300,
            rel_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub rel_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solves `A x = b` from `x = 0`.
pub fn gmres<A>(apply: A, b: &[f64], opts: &GmresOptions) -> GmresOutcome
where
    A: Fn(&[f64]) -> Vec<f64>,
{
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return GmresOutcome {
            x,
            rel_residual: 0.0,
            iterations: 0,
            converged: true,
        };
    }
    let m = opts.restart.max(1);
    let mut iterations = 0;
    let mut rel;

    while iterations < opts.max_iters {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= opts.rel_tol {
            return GmresOutcome {
                x,
                rel_residual: rel,
                iterations,
                converged: true,
            };
        }

        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m + 1);
        basis.push(r.iter().map(|v| v / beta).collect());
        // Hessenberg columns, already rotated
        let mut hess: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut cs: Vec<f64> = Vec::with_capacity(m);
        let mut sn: Vec<f64> = Vec::with_capacity(m);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;

        while k < m && iterations < opts.max_iters {
            let mut w = apply(&basis[k]);
            let mut h = vec![0.0; k + 2];
            // modified Gram-Schmidt
            for (i, v) in basis.iter().enumerate() {
                h[i] = dot(&w, v);
                for (wj, vj) in w.iter_mut().zip(v) {
                    *wj -= h[i] * vj;
                }
            }
            h[k + 1] = norm(&w);
            for i in 0..k {
                let t = cs[i] * h[i] + sn[i] * h[i + 1];
                h[i + 1] = -sn[i] * h[i] + cs[i] * h[i + 1];
                h[i] = t;
            }
            let denom = (h[k] * h[k] + h[k + 1] * h[k + 1]).sqrt();
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (h[k] / denom, h[k + 1] / denom) };
            let next_norm = h[k + 1];
            h[k] = c * h[k] + s * h[k + 1];
            h[k + 1] = 0.0;
            g[k + 1] = -s * g[k];
            g[k] *= c;
            cs.push(c);
            sn.push(s);
            hess.push(h);
            iterations += 1;
            k += 1;
            rel = g[k].abs() / bnorm;
            if rel <= opts.rel_tol || next_norm == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / next_norm).collect());
        }

        // back substitution on the k x k triangle
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let mut acc = g[i];
            for j in (i + 1)..k {
                acc -= hess[j][i] * y[j];
            }
            y[i] = if hess[i][i] != 0.0 { acc / hess[i][i] } else { 0.0 };
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * vi;
            }
        }
        if rel <= opts.rel_tol {
            break;
        }
    }

    let ax = apply(&x);
    let true_rel = norm(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>()) / bnorm;
    GmresOutcome {
        x,
        rel_residual: true_rel,
        iterations,
        converged: true_rel <= opts.rel_tol,
    }
}
