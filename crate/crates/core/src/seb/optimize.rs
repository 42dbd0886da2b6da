//! Small dense quasi-Newton minimizer.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub(crate) struct Minimum {
    pub x: Vec<f64>,
    pub converged: bool,
}

/// BFGS with Armijo backtracking. `fg` returns `None` where the objective is
/// undefined, which the line search treats as an infinite value.
pub(crate) fn bfgs(
    mut fg: impl FnMut(&[f64]) -> Option<(f64, Vec<f64>)>,
    x0: &[f64],
    gtol: f64,
    max_iter: usize,
) -> Option<Minimum> {
    let n = x0.len();
    let mut x = DVector::from_column_slice(x0);
    let (mut f, g) = fg(x.as_slice())?;
    let mut g = DVector::from_vec(g);
    let mut h = DMatrix::<f64>::identity(n, n);
    let mut iterations = 0;
    let mut stalled = 0;
    while iterations < max_iter {
        let grad_inf = g.amax();
        if grad_inf <= gtol {
            return Some(Minimum { x: x.as_slice().to_vec(), converged: true });
        }
        iterations += 1;
        let mut dir = -(&h * &g);
        let mut slope = dir.dot(&g);
        if slope >= 0.0 {
            h = DMatrix::identity(n, n);
            dir = -g.clone();
            slope = dir.dot(&g);
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = &x + &dir * step;
            if let Some((ft, gt)) = fg(trial.as_slice()) {
                if ft.is_finite() && ft <= f + 1e-4 * step * slope {
                    accepted = Some((trial, ft, DVector::from_vec(gt)));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gn)) = accepted else {
            // no descent along the quasi-Newton direction; retry once from steepest descent
            if h != DMatrix::identity(n, n) {
                h = DMatrix::identity(n, n);
                continue;
            }
            break;
        };
        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-300 {
            if iterations == 1 {
                // scale the initial inverse Hessian to the observed curvature
                h *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &h * &y;
            let yhy = y.dot(&hy);
            h += (&s * s.transpose()) * (rho * rho * yhy + rho) - (&hy * s.transpose() + &s * hy.transpose()) * rho;
        }
        stalled = if (f - fnew).abs() <= 1e-16 * f.abs().max(1.0) { stalled + 1 } else { 0 };
        x = xn;
        f = fnew;
        g = gn;
        if stalled >= 5 {
            break;
        }
    }
    Some(Minimum { x: x.as_slice().to_vec(), converged: g.amax() <= gtol })
}
