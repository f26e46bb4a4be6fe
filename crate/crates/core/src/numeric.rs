//! Small shared numerical kernels: an embedded adaptive Runge-Kutta step,
//! a conjugate-gradient solver over caller-supplied matvecs, and ordinary
//! least squares for slope estimation.

/// First positive zero of the Bessel function J0, used by the disk
/// eigenvalue oracles.
pub const BESSEL_J0_ZERO_1: f64 = 2.404_825_557_695_773;

/// Outcome of an adaptive Runge-Kutta integration.
#[derive(Debug, Clone, PartialEq)]
pub enum OdeOutcome {
    ReachedHorizon,
    StoppedByEvent,
    StepUnderflow { t: f64 },
}

/// Embedded Dormand-Prince 5(4) integrator over fixed-size state vectors.
///
/// `stop` is checked after every accepted step; returning `true` ends the
/// integration with `StoppedByEvent`. `record` sees every accepted `(t, y)`.
pub fn rk45<const N: usize>(
    f: &dyn Fn(f64, &[f64; N]) -> [f64; N],
    y0: [f64; N],
    t0: f64,
    t_end: f64,
    abs_tol: f64,
    rel_tol: f64,
    record: &mut dyn FnMut(f64, &[f64; N]),
    stop: &mut dyn FnMut(f64, &[f64; N]) -> bool,
) -> OdeOutcome {
    // Dormand-Prince coefficients.
    const A21: f64 = 1.0 / 5.0;
    const A31: f64 = 3.0 / 40.0;
    const A32: f64 = 9.0 / 40.0;
    const A41: f64 = 44.0 / 45.0;
    const A42: f64 = -56.0 / 15.0;
    const A43: f64 = 32.0 / 9.0;
    const A51: f64 = 19372.0 / 6561.0;
    const A52: f64 = -25360.0 / 2187.0;
    const A53: f64 = 64448.0 / 6561.0;
    const A54: f64 = -212.0 / 729.0;
    const A61: f64 = 9017.0 / 3168.0;
    const A62: f64 = -355.0 / 33.0;
    const A63: f64 = 46732.0 / 5247.0;
    const A64: f64 = 49.0 / 176.0;
    const A65: f64 = -5103.0 / 18656.0;
    const B1: f64 = 35.0 / 384.0;
    const B3: f64 = 500.0 / 1113.0;
    const B4: f64 = 125.0 / 192.0;
    const B5: f64 = -2187.0 / 6784.0;
    const B6: f64 = 11.0 / 84.0;
    // Fourth-order weights for the error estimate.
    const E1: f64 = 71.0 / 57600.0;
    const E3: f64 = -71.0 / 16695.0;
    const E4: f64 = 71.0 / 1920.0;
    const E5: f64 = -17253.0 / 339200.0;
    const E6: f64 = 22.0 / 525.0;
    const E7: f64 = -1.0 / 40.0;

    let span = t_end - t0;
    let mut t = t0;
    let mut y = y0;
    let mut dt = (span / 100.0).min(1.0).max(1e-8);
    let dt_min = span.abs() * 1e-14 + 1e-300;

    record(t, &y);
    if stop(t, &y) {
        return OdeOutcome::StoppedByEvent;
    }

    let axpy = |y: &[f64; N], parts: &[(f64, &[f64; N])], dt: f64| -> [f64; N] {
        let mut out = *y;
        for (c, k) in parts {
            for i in 0..N {
                out[i] += dt * c * k[i];
            }
        }
        out
    };

    while t < t_end {
        if dt < dt_min {
            return OdeOutcome::StepUnderflow { t };
        }
        let h = dt.min(t_end - t);
        let k1 = f(t, &y);
        let k2 = f(t + 0.2 * h, &axpy(&y, &[(A21, &k1)], h));
        let k3 = f(t + 0.3 * h, &axpy(&y, &[(A31, &k1), (A32, &k2)], h));
        let k4 = f(t + 0.8 * h, &axpy(&y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
        let k5 = f(
            t + 8.0 / 9.0 * h,
            &axpy(&y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
        );
        let y6 = axpy(
            &y,
            &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            h,
        );
        let k6 = f(t + h, &y6);
        let y_next = axpy(&y, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
        let k7 = f(t + h, &y_next);

        let mut err: f64 = 0.0;
        for i in 0..N {
            let e = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = abs_tol + rel_tol * y[i].abs().max(y_next[i].abs());
            err = err.max((e / scale).abs());
        }

        if err <= 1.0 {
            t += h;
            y = y_next;
            record(t, &y);
            if stop(t, &y) {
                return OdeOutcome::StoppedByEvent;
            }
        }
        let factor = if err > 0.0 {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        } else {
            5.0
        };
        dt = h * factor;
    }
    OdeOutcome::ReachedHorizon
}

/// Conjugate gradient for a symmetric positive definite operator given as a
/// matvec closure, with Jacobi preconditioning. Returns the iteration count
/// or `None` on non-convergence.
pub fn conjugate_gradient(
    matvec: &dyn Fn(&[f64], &mut [f64]),
    diag: &[f64],
    b: &[f64],
    x: &mut [f64],
    rel_tol: f64,
    max_iter: usize,
) -> Option<usize> {
    let n = b.len();
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];

    matvec(x, &mut ap);
    for i in 0..n {
        r[i] = b[i] - ap[i];
    }
    let b_norm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if b_norm == 0.0 {
        x.fill(0.0);
        return Some(0);
    }
    let tol = rel_tol * b_norm;

    for i in 0..n {
        z[i] = r[i] / diag[i];
    }
    p.copy_from_slice(&z);
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();

    for it in 0..max_iter {
        let r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if r_norm <= tol {
            return Some(it);
        }
        matvec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return None;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / diag[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let r_norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
    if r_norm <= tol {
        Some(max_iter)
    } else {
        None
    }
}

/// Ordinary least-squares line fit.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope estimate.
    pub slope_se: f64,
    pub n: usize,
}

pub fn ols_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for i in 0..n {
        let dx = xs[i] - mx;
        sxx += dx * dx;
        sxy += dx * (ys[i] - my);
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let mut sse = 0.0;
    for i in 0..n {
        let e = ys[i] - (intercept + slope * xs[i]);
        sse += e * e;
    }
    let slope_se = if n > 2 {
        (sse / (nf - 2.0) / sxx).sqrt()
    } else {
        0.0
    };
    Some(LineFit {
        slope,
        intercept,
        slope_se,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rk45_integrates_exponential_decay() {
        let f = |_t: f64, y: &[f64; 1]| [-y[0]];
        let mut last = (0.0, [0.0]);
        let out = rk45(
            &f,
            [1.0],
            0.0,
            5.0,
            1e-12,
            1e-12,
            &mut |t, y| last = (t, *y),
            &mut |_, _| false,
        );
        assert_eq!(out, OdeOutcome::ReachedHorizon);
        assert!((last.1[0] - (-5.0f64).exp()).abs() < 1e-10);
    }

    #[test]
    fn cg_solves_small_spd_system() {
        // Tridiagonal [2,-1] system, solution known exactly.
        let n = 50;
        let matvec = move |x: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let mut v = 2.0 * x[i];
                if i > 0 {
                    v -= x[i - 1];
                }
                if i + 1 < n {
                    v -= x[i + 1];
                }
                out[i] = v;
            }
        };
        let diag = vec![2.0; n];
        let mut x = vec![0.0; n];
        let b = vec![1.0; n];
        let it = conjugate_gradient(&matvec, &diag, &b, &mut x, 1e-13, 1000).unwrap();
        assert!(it <= n + 1);
        let mut ax = vec![0.0; n];
        matvec(&x, &mut ax);
        for i in 0..n {
            assert!((ax[i] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn ols_recovers_exact_line() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 1.5 * x - 3.0).collect();
        let fit = ols_line(&xs, &ys).unwrap();
        assert!((fit.slope - 1.5).abs() < 1e-12);
        assert!((fit.intercept + 3.0).abs() < 1e-12);
        assert!(fit.slope_se < 1e-12);
    }
}
