//! Shared acceptance-test support.
//!
//! Contains a dense-matrix reference solver for the l1 recovery
//! program, implemented as a primal-dual (proximal splitting)
//! iteration that shares no code with the library's solver: the
//! dictionary is materialized entry by entry from the impulse
//! response, and all linear algebra here is plain dense loops. Slow
//! and simple on purpose.

/// Dense stacked dictionary `[D T_h  I]`, built directly from the
/// entry formulas: `(T_h)[i][j] = h[i-j]`, `(D v)[i] = v[i] - v[i+1]`.
pub fn dense_stack(h: &[f64], driver_len: usize) -> Vec<Vec<f64>> {
    let t = h.len();
    let full_len = t + driver_len - 1;
    let m = full_len - 1;
    let n = driver_len + m;
    let th = |i: usize, j: usize| -> f64 {
        if i >= j && i - j < t {
            h[i - j]
        } else {
            0.0
        }
    };
    (0..m)
        .map(|i| {
            let mut row = vec![0.0; n];
            for (j, slot) in row[..driver_len].iter_mut().enumerate() {
                *slot = th(i, j) - th(i + 1, j);
            }
            row[driver_len + i] = 1.0;
            row
        })
        .collect()
}

fn dense_apply(a: &[Vec<f64>], v: &[f64], out: &mut [f64]) {
    for (o, row) in out.iter_mut().zip(a) {
        *o = row.iter().zip(v).map(|(r, x)| r * x).sum();
    }
}

fn dense_apply_transpose(a: &[Vec<f64>], v: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for (row, vi) in a.iter().zip(v) {
        for (o, r) in out.iter_mut().zip(row) {
            *o += r * vi;
        }
    }
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn operator_norm(a: &[Vec<f64>]) -> f64 {
    let m = a.len();
    let n = a[0].len();
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + (i % 7) as f64 * 0.1).collect();
    let mut av = vec![0.0; m];
    let mut atav = vec![0.0; n];
    let mut sigma_sq = 0.0;
    for _ in 0..300 {
        let nv = norm2(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        dense_apply(a, &v, &mut av);
        dense_apply_transpose(a, &av, &mut atav);
        sigma_sq = norm2(&atav);
        v.copy_from_slice(&atav);
    }
    sigma_sq.sqrt() * 1.001
}

pub struct RefSolution {
    pub objective: f64,
    pub feasibility_gap: f64,
    pub stationarity: f64,
}

/// Solves `min ||z||_1 s.t. ||d - A z|| <= eta` (optionally with the
/// first `driver_len` coordinates nonnegative) by a primal-dual
/// iteration on the dense dictionary, stopping when the first-order
/// residuals drop below `kkt_tol`.
pub fn reference_solve(
    a: &[Vec<f64>],
    d: &[f64],
    eta: f64,
    nonneg: bool,
    driver_len: usize,
    kkt_tol: f64,
    max_iters: usize,
) -> RefSolution {
    let m = a.len();
    let n = a[0].len();
    let step = 0.95 / operator_norm(a);

    let mut z = vec![0.0; n];
    z[driver_len..].copy_from_slice(d);
    let mut zbar = z.clone();
    let mut p = vec![0.0; m];
    let mut q = vec![0.0; m];
    let mut grad = vec![0.0; n];
    let mut resid = vec![0.0; m];

    let mut iterations = 0;
    let mut feasibility_gap = f64::INFINITY;
    let mut stationarity = f64::INFINITY;
    while iterations < max_iters {
        iterations += 1;

        // Dual ascent on the ball constraint: shift by sigma * A zbar,
        // then subtract sigma times the projection of q / sigma onto
        // the ball around d.
        dense_apply(a, &zbar, &mut resid);
        for i in 0..m {
            q[i] = p[i] + step * resid[i];
        }
        let mut dev_sq = 0.0;
        for i in 0..m {
            let dev = q[i] / step - d[i];
            dev_sq += dev * dev;
        }
        let dev_norm = dev_sq.sqrt();
        if dev_norm <= eta {
            p.iter_mut().for_each(|v| *v = 0.0);
        } else {
            let shrink = eta / dev_norm;
            for i in 0..m {
                let w = q[i] / step;
                let proj = d[i] + (w - d[i]) * shrink;
                p[i] = q[i] - step * proj;
            }
        }

        // Primal descent with soft thresholding.
        dense_apply_transpose(a, &p, &mut grad);
        for i in 0..n {
            let v = z[i] - step * grad[i];
            let new = if nonneg && i < driver_len {
                (v - step).max(0.0)
            } else if v > step {
                v - step
            } else if v < -step {
                v + step
            } else {
                0.0
            };
            zbar[i] = 2.0 * new - z[i];
            z[i] = new;
        }

        if iterations % 50 == 0 {
            dense_apply(a, &z, &mut resid);
            let mut nr_sq = 0.0;
            for i in 0..m {
                let r = d[i] - resid[i];
                nr_sq += r * r;
            }
            feasibility_gap = (nr_sq.sqrt() - eta).max(0.0);
            // The multiplier for the residual constraint is -p.
            dense_apply_transpose(a, &p, &mut grad);
            let mut viol_sq = 0.0;
            for i in 0..n {
                let g = -grad[i];
                let dist = if nonneg && i < driver_len {
                    if z[i] > 0.0 {
                        (g - 1.0).abs()
                    } else {
                        (g - 1.0).max(0.0)
                    }
                } else if z[i] != 0.0 {
                    (g - z[i].signum()).abs()
                } else {
                    (g.abs() - 1.0).max(0.0)
                };
                viol_sq += dist * dist;
            }
            stationarity = viol_sq.sqrt();
            if feasibility_gap <= kkt_tol && stationarity <= kkt_tol {
                break;
            }
        }
    }

    let objective = z.iter().map(|v| v.abs()).sum();
    RefSolution {
        objective,
        feasibility_gap,
        stationarity,
    }
}

/// Tie-adjusted rank statistic: the fraction of (positive, negative)
/// score pairs ordered correctly, ties counted half.
pub fn rank_statistic(positives: &[f64], negatives: &[f64]) -> f64 {
    let mut u = 0.0;
    for p in positives {
        for n in negatives {
            u += if p > n {
                1.0
            } else if p == n {
                0.5
            } else {
                0.0
            };
        }
    }
    u / (positives.len() as f64 * negatives.len() as f64)
}
