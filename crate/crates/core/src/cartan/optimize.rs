//! Dense BFGS with a strong-Wolfe line search.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::{dot, sqrt};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Status {
    Converged,
    Stalled,
    MaxIterations,
}

#[derive(Clone, Debug)]
pub(crate) struct Outcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub status: Status,
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// Minimizes `f`, which writes its gradient into the second argument and
/// returns the value. Stops when the largest gradient component drops below
/// `gtol`, after `max_iter` iterations, or when the line search can make no
/// further progress.
pub(crate) fn bfgs<F>(x0: &[f64], mut f: F, gtol: f64, max_iter: usize) -> Outcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    // inverse Hessian approximation, row major
    let mut hinv = vec![0.0; n * n];
    let reset = |h: &mut [f64]| {
        h.iter_mut().for_each(|v| *v = 0.0);
        (0..n).for_each(|i| h[i * n + i] = 1.0);
    };
    reset(&mut hinv);
    let mut fresh = true;
    let mut p = vec![0.0; n];
    let mut xn = vec![0.0; n];
    let mut gn = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut hy = vec![0.0; n];

    for it in 0..max_iter {
        if inf_norm(&g) < gtol {
            return Outcome { x, iterations: it, status: Status::Converged };
        }
        for i in 0..n {
            p[i] = -dot(&hinv[i * n..(i + 1) * n], &g);
        }
        let mut slope = dot(&p, &g);
        if !(slope < 0.0) {
            reset(&mut hinv);
            fresh = true;
            p.iter_mut().zip(&g).for_each(|(pi, gi)| *pi = -gi);
            slope = dot(&p, &g);
        }
        let found = line_search(&mut f, &x, fx, slope, &p, &mut xn, &mut gn);
        let Some((alpha, fnew)) = found else {
            if fresh {
                return Outcome { x, iterations: it, status: Status::Stalled };
            }
            reset(&mut hinv);
            fresh = true;
            continue;
        };
        for i in 0..n {
            s[i] = alpha * p[i];
            y[i] = gn[i] - g[i];
        }
        x.copy_from_slice(&xn);
        g.copy_from_slice(&gn);
        let improved = fx - fnew;
        fx = fnew;
        let sy = dot(&s, &y);
        if sy > 0.0 {
            if fresh {
                // scale the initial guess as in Nocedal and Wright (6.20)
                let scale = sy / dot(&y, &y);
                hinv.iter_mut().for_each(|v| *v *= scale);
                fresh = false;
            }
            for i in 0..n {
                hy[i] = dot(&hinv[i * n..(i + 1) * n], &y);
            }
            let yhy = dot(&y, &hy);
            let rho = 1.0 / sy;
            let coef = (1.0 + rho * yhy) * rho;
            for i in 0..n {
                let row = &mut hinv[i * n..(i + 1) * n];
                for j in 0..n {
                    row[j] += coef * s[i] * s[j] - rho * (hy[i] * s[j] + s[i] * hy[j]);
                }
            }
        }
        if improved <= 0.0 && inf_norm(&g) >= gtol && fresh {
            return Outcome { x, iterations: it + 1, status: Status::Stalled };
        }
    }
    Outcome { x, iterations: max_iter, status: Status::MaxIterations }
}

/// Strong Wolfe line search along `p` (Nocedal and Wright, Algorithms 3.5/3.6).
/// On success `xn`, `gn` hold the accepted point and its gradient.
fn line_search<F>(
    f: &mut F,
    x: &[f64],
    f0: f64,
    slope0: f64,
    p: &[f64],
    xn: &mut [f64],
    gn: &mut [f64],
) -> Option<(f64, f64)>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    const C1: f64 = 1e-4;
    const C2: f64 = 0.9;
    let mut eval = |alpha: f64, xn: &mut [f64], gn: &mut [f64]| -> (f64, f64) {
        for i in 0..x.len() {
            xn[i] = x[i] + alpha * p[i];
        }
        let v = f(xn, gn);
        (v, dot(gn, p))
    };
    let pnorm = sqrt(dot(p, p));
    if !(pnorm > 0.0) {
        return None;
    }
    let max_alpha = (10.0 / pnorm).max(1.0);
    let (mut a_prev, mut f_prev, mut d_prev) = (0.0, f0, slope0);
    let mut alpha = 1.0f64.min(max_alpha);
    for k in 0..30 {
        let (fa, da) = eval(alpha, xn, gn);
        if fa > f0 + C1 * alpha * slope0 || (k > 0 && fa >= f_prev) {
            return zoom(&mut eval, f0, slope0, (a_prev, f_prev, d_prev), (alpha, fa, da), xn, gn);
        }
        if da.abs() <= -C2 * slope0 {
            return Some((alpha, fa));
        }
        if da >= 0.0 {
            return zoom(&mut eval, f0, slope0, (alpha, fa, da), (a_prev, f_prev, d_prev), xn, gn);
        }
        if alpha >= max_alpha {
            return Some((alpha, fa));
        }
        (a_prev, f_prev, d_prev) = (alpha, fa, da);
        alpha = (2.0 * alpha).min(max_alpha);
    }
    None
}

type Probe = (f64, f64, f64);

fn zoom<E>(eval: &mut E, f0: f64, slope0: f64, mut lo: Probe, mut hi: Probe, xn: &mut [f64], gn: &mut [f64]) -> Option<(f64, f64)>
where
    E: FnMut(f64, &mut [f64], &mut [f64]) -> (f64, f64),
{
    const C1: f64 = 1e-4;
    const C2: f64 = 0.9;
    for _ in 0..40 {
        let (a_lo, f_lo, d_lo) = lo;
        let (a_hi, f_hi, _) = hi;
        let width = a_hi - a_lo;
        // minimizer of the quadratic through (a_lo, f_lo, d_lo) and (a_hi, f_hi)
        let denom = 2.0 * (f_hi - f_lo - d_lo * width);
        let mut a = if denom > 0.0 { a_lo - d_lo * width * width / denom } else { a_lo + 0.5 * width };
        let (left, right) = if a_lo < a_hi { (a_lo, a_hi) } else { (a_hi, a_lo) };
        let margin = 0.1 * (right - left);
        if !(a > left + margin && a < right - margin) {
            a = 0.5 * (a_lo + a_hi);
        }
        if (right - left) < 1e-16 * right.abs().max(1e-300) {
            break;
        }
        let (fa, da) = eval(a, xn, gn);
        if fa > f0 + C1 * a * slope0 || fa >= f_lo {
            hi = (a, fa, da);
        } else {
            if da.abs() <= -C2 * slope0 {
                return Some((a, fa));
            }
            if da * (a_hi - a_lo) >= 0.0 {
                hi = lo;
            }
            lo = (a, fa, da);
        }
    }
    // accept the best sufficient-decrease point if there is one
    let (a_lo, f_lo, _) = lo;
    if a_lo > 0.0 && f_lo < f0 {
        let (fa, _) = eval(a_lo, xn, gn);
        return Some((a_lo, fa));
    }
    None
}
