//! The reference mountain-pass solve at `(λ1, λ2) = (30, 5)` on a 128² grid.

use std::time::Instant;

use meanfield::{diagnostics, functional, minimax, torus, Params, TorusGrid};

fn main() {
    let p = Params::new(30.0, 5.0).unwrap();
    let grid = TorusGrid::new(128).unwrap();
    let t = Instant::now();
    let r = minimax::solve(&p, grid, &minimax::MinimaxOptions::default(), 1e-8).unwrap();
    let u = r.refined.as_ref().unwrap();
    println!(
        "c_est {:.8} converged {} sweeps {} residual {:.3e} descent {} newton {}",
        r.c_est,
        r.converged,
        r.history.len() - 1,
        u.residual,
        u.descent_iters,
        u.newton_iters
    );
    let report = diagnostics::concentration_report(&u.field, &p, 0.1).unwrap();
    println!(
        "I {:.8} norm {:.4} max {:.4} min {:.4} class {} elapsed {:.1?}",
        functional::eval_i(&u.field, &p).total,
        torus::h1_norm_sq(&u.field).sqrt(),
        u.field.max(),
        u.field.min(),
        report.classification,
        t.elapsed()
    );
}
