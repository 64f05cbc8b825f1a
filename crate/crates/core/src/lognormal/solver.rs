//! Damped Gauss-Newton refinement of stroke parameters.
//!
//! Strokes are optimised in an unconstrained space `(ln d, t0, mu, ln sigma)`
//! so that amplitude and spread stay positive. The Jacobian is obtained by
//! central differences, one stroke at a time: a stroke's parameters only
//! touch its own term of the sum.

use super::{stroke_velocity, LognormalStroke};

const PARAMS: usize = 4;

#[derive(Debug, Clone, Copy)]
pub(crate) struct Report {
    pub sse: f64,
    #[cfg_attr(not(test), allow(dead_code))]
    pub initial_sse: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn pack(s: &LognormalStroke) -> [f64; PARAMS] {
    [s.d.ln(), s.t0, s.mu, s.sigma.ln()]
}

fn unpack(p: &[f64], template: &LognormalStroke) -> LognormalStroke {
    LognormalStroke { d: p[0].exp(), t0: p[1], mu: p[2], sigma: p[3].exp(), ..*template }
}

fn step_size(j: usize, value: f64) -> f64 {
    match j {
        1 => 1e-7,
        _ => 1e-6 * value.abs().max(1.0),
    }
}

fn sse_of(strokes: &[LognormalStroke], times: &[f64], target: &[f64], buf: &mut [f64]) -> f64 {
    if !strokes.iter().all(|s| s.is_valid() && s.sigma < 5.0 && s.mu < 5.0) {
        return f64::INFINITY;
    }
    let mut sse = 0.0;
    for (i, (&t, &y)) in times.iter().zip(target).enumerate() {
        let m: f64 = strokes.iter().map(|s| stroke_velocity(s, t)).sum();
        buf[i] = m - y;
        sse += buf[i] * buf[i];
    }
    if sse.is_finite() {
        sse
    } else {
        f64::INFINITY
    }
}

/// Least-squares fit of the sum of `strokes` to `target` sampled at `times`.
/// On return `strokes` holds the best parameters found; the sum of squared
/// residuals never increases relative to the input.
pub(crate) fn refine(strokes: &mut [LognormalStroke], times: &[f64], target: &[f64], max_iter: usize) -> Report {
    let m = times.len();
    let np = strokes.len() * PARAMS;
    let mut residual = vec![0.0; m];
    let mut trial_buf = vec![0.0; m];
    let mut sse = sse_of(strokes, times, target, &mut residual);
    let initial_sse = sse;
    let mut report = Report { sse, initial_sse, iterations: 0, converged: false };
    if !sse.is_finite() || np == 0 || m == 0 {
        return report;
    }
    let signal: f64 = target.iter().map(|y| y * y).sum::<f64>().max(f64::MIN_POSITIVE);

    let mut lambda = 1e-3;
    let mut jac = vec![0.0; np * m]; // column-major
    let mut normal = vec![0.0; np * np];
    let mut grad = vec![0.0; np];
    let mut plus = vec![0.0; m];

    for iter in 0..max_iter {
        report.iterations = iter + 1;
        // Jacobian columns
        for (k, s) in strokes.iter().enumerate() {
            let base = pack(s);
            for j in 0..PARAMS {
                let h = step_size(j, base[j]);
                let mut p = base;
                p[j] += h;
                let sp = unpack(&p, s);
                p[j] = base[j] - h;
                let sm = unpack(&p, s);
                for (i, &t) in times.iter().enumerate() {
                    plus[i] = (stroke_velocity(&sp, t) - stroke_velocity(&sm, t)) / (2.0 * h);
                }
                let col = k * PARAMS + j;
                jac[col * m..(col + 1) * m].copy_from_slice(&plus);
            }
        }
        for a in 0..np {
            let ca = &jac[a * m..(a + 1) * m];
            grad[a] = ca.iter().zip(&residual).map(|(x, r)| x * r).sum();
            for b in 0..=a {
                let cb = &jac[b * m..(b + 1) * m];
                let v: f64 = ca.iter().zip(cb).map(|(x, y)| x * y).sum();
                normal[a * np + b] = v;
                normal[b * np + a] = v;
            }
        }
        let diag_floor = 1e-12 * (0..np).map(|a| normal[a * np + a]).fold(0.0, f64::max).max(1e-300);

        let mut accepted = None;
        'damping: for _ in 0..10 {
            let mut system = normal.clone();
            for a in 0..np {
                system[a * np + a] += lambda * normal[a * np + a].max(diag_floor);
            }
            let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
            let Some(delta) = cholesky_solve(&mut system, &rhs, np) else {
                lambda *= 10.0;
                continue;
            };
            // halve the step on residual increase before raising the damping
            let mut scale = 1.0;
            for _ in 0..3 {
                let mut trial: Vec<LognormalStroke> = strokes.to_vec();
                for (k, s) in trial.iter_mut().enumerate() {
                    let mut p = pack(s);
                    for j in 0..PARAMS {
                        p[j] += scale * delta[k * PARAMS + j];
                    }
                    *s = unpack(&p, s);
                }
                let trial_sse = sse_of(&trial, times, target, &mut trial_buf);
                if trial_sse < sse {
                    accepted = Some((trial, trial_sse));
                    break 'damping;
                }
                scale *= 0.5;
            }
            lambda *= 10.0;
        }

        match accepted {
            Some((trial, trial_sse)) => {
                let gain = sse - trial_sse;
                strokes.copy_from_slice(&trial);
                std::mem::swap(&mut residual, &mut trial_buf);
                sse = trial_sse;
                lambda = (lambda * 0.1).max(1e-12);
                if gain <= 1e-13 * sse || sse <= 1e-26 * signal {
                    report.converged = true;
                    break;
                }
            }
            None => {
                // no descent direction left: at a (local) minimum
                report.converged = true;
                break;
            }
        }
    }
    report.sse = sse;
    report
}

/// Solves `A x = b` for symmetric positive definite `A` (row-major, `n x n`),
/// overwriting `A` with its Cholesky factor. `None` if not positive definite.
fn cholesky_solve(a: &mut [f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * y[k];
        }
        y[i] = s / a[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= a[k * n + i] * x[k];
        }
        x[i] = s / a[i * n + i];
    }
    Some(x)
}
