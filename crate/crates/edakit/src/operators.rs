//! Matrix-free operators of the decomposition model and dense
//! desk-scale materializations of the same maps.
//!
//! The model uses two structured linear maps. `T_h` is the tall Toeplitz
//! matrix whose columns are shifted copies of the impulse response `h`,
//! so `T_h x = h ∗ x`. `D` is the pairwise difference matrix taking
//! `v` to `(v_1 - v_2, v_2 - v_3, ...)`. Everything the solver needs is
//! expressed through four primitives: both maps and both adjoints, each
//! applied in O(length) or O(length · len(h)) time without forming a
//! matrix. The dense builders exist for oracle tests and coherence
//! computations, where explicit columns are wanted.

use crate::error::{Error, Result};
use crate::signal::{ImpulseResponse, Signal};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Upper bound on the spectral norm of the pairwise difference matrix,
/// valid for every size. The exact value for `n` columns is
/// `2 cos(pi / (2n))`, which approaches 2 from below.
pub const DIFFERENCE_NORM_BOUND: f64 = 2.0;

pub(crate) mod kernels {
    //! Unchecked slice routines shared by the public operators and the
    //! solver's inner loops. Callers guarantee dimensions.

    /// Full convolution, `out.len() == h.len() + x.len() - 1`.
    pub fn conv_into(h: &[f64], x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), h.len() + x.len() - 1);
        out.fill(0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for (i, &hi) in h.iter().enumerate() {
                out[j + i] += hi * xj;
            }
        }
    }

    /// Toeplitz adjoint (correlation), `out.len() == r.len() - h.len() + 1`.
    pub fn corr_into(h: &[f64], r: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), r.len() + 1 - h.len());
        for (j, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (i, &hi) in h.iter().enumerate() {
                acc += hi * r[j + i];
            }
            *o = acc;
        }
    }

    /// Pairwise differences, `out.len() == v.len() - 1`.
    pub fn diff_into(v: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), v.len() - 1);
        for (i, o) in out.iter_mut().enumerate() {
            *o = v[i] - v[i + 1];
        }
    }

    /// Adjoint of the pairwise difference, `out.len() == w.len() + 1`.
    pub fn diff_adjoint_into(w: &[f64], out: &mut [f64]) {
        debug_assert_eq!(out.len(), w.len() + 1);
        let n = out.len();
        out[0] = w[0];
        for i in 1..n - 1 {
            out[i] = w[i] - w[i - 1];
        }
        out[n - 1] = -w[n - 2];
    }

    pub fn dot(a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    pub fn norm2(a: &[f64]) -> f64 {
        dot(a, a).sqrt()
    }

    pub fn norm1(a: &[f64]) -> f64 {
        a.iter().map(|x| x.abs()).sum()
    }
}

/// Convolves the impulse response with a coefficient vector, producing
/// a signal of length `h.len() + x.len() - 1` at the response's rate.
pub fn convolve(h: &ImpulseResponse, x: &[f64]) -> Result<Signal> {
    if x.is_empty() {
        return Err(Error::EmptyInput("convolution coefficients"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("convolution coefficients"));
    }
    let mut out = vec![0.0; h.len() + x.len() - 1];
    kernels::conv_into(h.samples(), x, &mut out);
    Signal::new(out, h.sample_rate_hz())
}

/// Applies the transpose of the Toeplitz convolution matrix of `h` to a
/// signal-domain vector `r`, producing a coefficient-domain vector of
/// length `r.len() - h.len() + 1`.
pub fn toeplitz_adjoint_apply(h: &ImpulseResponse, r: &[f64]) -> Result<Vec<f64>> {
    if r.len() < h.len() {
        return Err(Error::DimensionMismatch(format!(
            "adjoint input has {} samples, needs at least the response length {}",
            r.len(),
            h.len()
        )));
    }
    let mut out = vec![0.0; r.len() + 1 - h.len()];
    kernels::corr_into(h.samples(), r, &mut out);
    Ok(out)
}

/// Pairwise differences `(v_1 - v_2, v_2 - v_3, ...)`; shortens the
/// vector by one.
pub fn difference_apply(v: &[f64]) -> Result<Vec<f64>> {
    if v.len() < 2 {
        return Err(Error::DimensionMismatch(format!(
            "difference needs at least 2 samples, got {}",
            v.len()
        )));
    }
    let mut out = vec![0.0; v.len() - 1];
    kernels::diff_into(v, &mut out);
    Ok(out)
}

/// Adjoint of [`difference_apply`]; lengthens the vector by one.
pub fn difference_adjoint_apply(w: &[f64]) -> Result<Vec<f64>> {
    if w.is_empty() {
        return Err(Error::EmptyInput("difference adjoint input"));
    }
    let mut out = vec![0.0; w.len() + 1];
    kernels::diff_adjoint_into(w, &mut out);
    Ok(out)
}

/// Reduces the sample rate by an integer factor, replacing each block of
/// source samples with its mean. A trailing block shorter than the
/// factor is dropped, so every output sample averages the same number of
/// inputs. The source rate must be an integer multiple of `target_hz`
/// (to within a 1e-9 relative slack).
pub fn downsample(signal: &Signal, target_hz: f64) -> Result<Signal> {
    if !(target_hz.is_finite() && target_hz > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "target rate must be positive and finite, got {target_hz}"
        )));
    }
    let source_hz = signal.sample_rate_hz();
    let ratio = source_hz / target_hz;
    let factor = ratio.round();
    if factor < 1.0 || (ratio - factor).abs() > 1e-9 * ratio.max(1.0) {
        return Err(Error::NonIntegerRatio {
            source_hz,
            target_hz,
        });
    }
    let factor = factor as usize;
    if factor == 1 {
        return Ok(signal.clone());
    }
    let n_out = signal.len() / factor;
    if n_out == 0 {
        return Err(Error::DimensionMismatch(format!(
            "{} samples cannot fill one block of {}",
            signal.len(),
            factor
        )));
    }
    let samples = signal.samples();
    let out = (0..n_out)
        .map(|b| samples[b * factor..(b + 1) * factor].iter().sum::<f64>() / factor as f64)
        .collect();
    Signal::new(out, target_hz)
}

/// Zeroes all but the `k` largest-magnitude entries. Ties are broken
/// toward the lower index, so the result is deterministic.
pub fn keep_largest(values: &[f64], k: usize) -> Vec<f64> {
    if k >= values.len() {
        return values.to_vec();
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    let mut out = vec![0.0; values.len()];
    for &i in &order[..k] {
        out[i] = values[i];
    }
    out
}

/// Estimates the spectral norm of the `(n-1) x n` difference matrix by
/// power iteration on `DᵀD` from a fixed seeded start. The estimate
/// approaches the true value `2 cos(pi / (2n))` from below.
pub fn difference_norm_estimate(n: usize, iterations: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::DimensionMismatch(format!(
            "difference matrix needs n >= 2, got {n}"
        )));
    }
    if iterations == 0 {
        return Err(Error::InvalidParameter(
            "power iteration needs at least one step".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x0eda);
    let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let nv = kernels::norm2(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut dv = vec![0.0; n - 1];
    let mut w = vec![0.0; n];
    let mut lambda = 0.0;
    for _ in 0..iterations {
        kernels::diff_into(&v, &mut dv);
        kernels::diff_adjoint_into(&dv, &mut w);
        lambda = kernels::dot(&v, &w);
        let nw = kernels::norm2(&w);
        if nw == 0.0 {
            return Ok(0.0);
        }
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / nw;
        }
    }
    Ok(lambda.max(0.0).sqrt())
}

/// Dense Toeplitz convolution matrix of `h` with `cols` columns,
/// returned as rows. Row `i`, column `j` holds `h[i - j]` where defined.
pub fn toeplitz_dense(h: &[f64], cols: usize) -> Vec<Vec<f64>> {
    let rows = h.len() + cols - 1;
    (0..rows)
        .map(|i| {
            (0..cols)
                .map(|j| {
                    if i >= j && i - j < h.len() {
                        h[i - j]
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Dense `(n-1) x n` pairwise difference matrix, returned as rows.
pub fn difference_dense(n: usize) -> Vec<Vec<f64>> {
    (0..n.saturating_sub(1))
        .map(|i| {
            (0..n)
                .map(|j| {
                    if j == i {
                        1.0
                    } else if j == i + 1 {
                        -1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ir(samples: &[f64]) -> ImpulseResponse {
        ImpulseResponse::from_samples(samples.to_vec(), 4.0).unwrap()
    }

    /// Oracle: literal matrix-vector product against the entry formula
    /// `(T_h)[i][j] = h[i - j]`.
    fn dense_toeplitz_matvec(h: &[f64], x: &[f64]) -> Vec<f64> {
        let rows = h.len() + x.len() - 1;
        let mut out = vec![0.0; rows];
        for (i, o) in out.iter_mut().enumerate() {
            for (j, &xj) in x.iter().enumerate() {
                if i >= j && i - j < h.len() {
                    *o += h[i - j] * xj;
                }
            }
        }
        out
    }

    #[test]
    fn convolve_with_unit_impulse_reproduces_kernel() {
        let h = ir(&[1.0, 0.5, 0.25]);
        let mut x = vec![0.0; 6];
        x[0] = 1.0;
        let y = convolve(&h, &x).unwrap();
        assert_eq!(y.samples()[..3], [1.0, 0.5, 0.25]);
        assert!(y.samples()[3..].iter().all(|&v| v == 0.0));
        assert_eq!(y.len(), 8);
    }

    #[test]
    fn convolve_small_known_case() {
        let h = ir(&[1.0, 1.0]);
        let y = convolve(&h, &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(y.samples(), [1.0, 3.0, 5.0, 3.0]);
    }

    #[test]
    fn convolve_matches_dense_oracle() {
        let h = ir(&[0.3, -1.2, 0.8, 0.05]);
        let x = [1.5, 0.0, -2.0, 0.25, 4.0];
        let y = convolve(&h, &x).unwrap();
        let oracle = dense_toeplitz_matvec(h.samples(), &x);
        for (a, b) in y.samples().iter().zip(&oracle) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn toeplitz_adjoint_matches_dense_transpose() {
        let h = ir(&[0.3, -1.2, 0.8]);
        let r = [1.0, -1.0, 2.0, 0.5, 0.25, -3.0];
        let got = toeplitz_adjoint_apply(&h, &r).unwrap();
        // (T_hᵀ r)[j] = sum_i T_h[i][j] r[i]
        let cols = r.len() + 1 - h.len();
        let th = toeplitz_dense(h.samples(), cols);
        for (j, g) in got.iter().enumerate() {
            let mut acc = 0.0;
            for (i, row) in th.iter().enumerate() {
                acc += row[j] * r[i];
            }
            assert!((g - acc).abs() <= 1e-12);
        }
    }

    #[test]
    fn toeplitz_adjoint_of_unit_impulse_is_prefix() {
        let h = ir(&[1.0]);
        let r = [4.0, 5.0, 6.0];
        assert_eq!(toeplitz_adjoint_apply(&h, &r).unwrap(), vec![4.0, 5.0, 6.0]);
    }

    #[test]
    fn toeplitz_adjoint_rejects_short_input() {
        let h = ir(&[1.0, 2.0, 3.0]);
        assert!(toeplitz_adjoint_apply(&h, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn difference_of_constant_is_zero() {
        let d = difference_apply(&[7.0; 9]).unwrap();
        assert_eq!(d, vec![0.0; 8]);
    }

    #[test]
    fn difference_small_known_case() {
        assert_eq!(difference_apply(&[3.0, 1.0, 4.0]).unwrap(), vec![2.0, -3.0]);
    }

    #[test]
    fn difference_adjoint_of_basis_vector() {
        assert_eq!(
            difference_adjoint_apply(&[1.0, 0.0, 0.0]).unwrap(),
            vec![1.0, -1.0, 0.0, 0.0]
        );
    }

    #[test]
    fn difference_adjoint_matches_dense_transpose() {
        let w = [0.5, -2.0, 1.25, 3.0];
        let got = difference_adjoint_apply(&w).unwrap();
        let d = difference_dense(w.len() + 1);
        for (i, g) in got.iter().enumerate() {
            let mut acc = 0.0;
            for (row, &wj) in d.iter().zip(&w) {
                acc += row[i] * wj;
            }
            assert!((g - acc).abs() <= 1e-12);
        }
    }

    #[test]
    fn difference_norm_estimate_stays_below_bound() {
        for n in [10, 100, 500] {
            let est = difference_norm_estimate(n, 150).unwrap();
            assert!(est <= DIFFERENCE_NORM_BOUND + 1e-9, "n = {n}: {est}");
            assert!(est > 1.9, "n = {n}: {est}");
        }
    }

    #[test]
    fn difference_norm_estimate_matches_closed_form() {
        // Exact spectral norm of the (n-1) x n difference matrix.
        let n = 10;
        let exact = 2.0 * (std::f64::consts::PI / (2.0 * n as f64)).cos();
        let est = difference_norm_estimate(n as usize, 300).unwrap();
        assert!((est - exact).abs() <= 1e-8, "{est} vs {exact}");
    }

    #[test]
    fn downsample_constant_is_constant() {
        let s = Signal::new(vec![2.5; 64], 32.0).unwrap();
        let d = downsample(&s, 4.0).unwrap();
        assert_eq!(d.len(), 8);
        assert!(d.samples().iter().all(|&v| (v - 2.5).abs() <= 1e-15));
        assert_eq!(d.sample_rate_hz(), 4.0);
    }

    #[test]
    fn downsample_halving_averages_pairs() {
        let s = Signal::new(vec![1.0, 2.0, 3.0, 4.0], 4.0).unwrap();
        let d = downsample(&s, 2.0).unwrap();
        assert_eq!(d.samples(), [1.5, 3.5]);
    }

    #[test]
    fn downsample_drops_partial_trailing_block() {
        let s = Signal::new(vec![1.0, 2.0, 3.0, 4.0, 100.0], 4.0).unwrap();
        let d = downsample(&s, 2.0).unwrap();
        assert_eq!(d.samples(), [1.5, 3.5]);
    }

    #[test]
    fn downsample_rejects_non_integer_ratio() {
        let s = Signal::new(vec![0.0; 32], 32.0).unwrap();
        assert!(matches!(
            downsample(&s, 5.0),
            Err(Error::NonIntegerRatio { .. })
        ));
        assert!(matches!(
            downsample(&s, 64.0),
            Err(Error::NonIntegerRatio { .. })
        ));
    }

    #[test]
    fn downsample_reduces_white_noise_variance() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let samples: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        let s = Signal::new(samples, 32.0).unwrap();
        let d = downsample(&s, 4.0).unwrap();
        let mean = d.samples().iter().sum::<f64>() / d.len() as f64;
        let var = d.samples().iter().map(|v| (v - mean).powi(2)).sum::<f64>() / d.len() as f64;
        // Mean of 8 unit-variance samples has variance 1/8.
        assert!((var - 0.125).abs() <= 0.125 * 0.05, "variance {var}");
    }

    #[test]
    fn keep_largest_known_cases() {
        assert_eq!(
            keep_largest(&[-5.0, 3.0, 3.0, 1.0], 2),
            vec![-5.0, 3.0, 0.0, 0.0]
        );
        assert_eq!(keep_largest(&[1.0, 2.0], 0), vec![0.0, 0.0]);
        assert_eq!(keep_largest(&[1.0, 2.0], 5), vec![1.0, 2.0]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn toeplitz_adjoint_identity(
            h in proptest::collection::vec(-5.0f64..5.0, 1..12),
            x in proptest::collection::vec(-5.0f64..5.0, 1..20),
            seed in 0u64..1000,
        ) {
            use rand::SeedableRng;
            use rand_distr::{Distribution, StandardNormal};
            let hr = ir(&h);
            let y = convolve(&hr, &x).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let r: Vec<f64> = (0..y.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let lhs = kernels::dot(y.samples(), &r);
            let back = toeplitz_adjoint_apply(&hr, &r).unwrap();
            let rhs = kernels::dot(&x, &back);
            let scale = 1.0 + kernels::norm2(&x) * kernels::norm2(&r) * kernels::norm2(&h);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * scale);
        }

        #[test]
        fn difference_adjoint_identity(
            v in proptest::collection::vec(-5.0f64..5.0, 2..40),
            seed in 0u64..1000,
        ) {
            use rand::SeedableRng;
            use rand_distr::{Distribution, StandardNormal};
            let dv = difference_apply(&v).unwrap();
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let w: Vec<f64> = (0..dv.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
            let lhs = kernels::dot(&dv, &w);
            let rhs = kernels::dot(&v, &difference_adjoint_apply(&w).unwrap());
            let scale = 1.0 + kernels::norm2(&v) * kernels::norm2(&w);
            prop_assert!((lhs - rhs).abs() <= 1e-10 * scale);
        }

        #[test]
        fn convolution_is_linear(
            h in proptest::collection::vec(-5.0f64..5.0, 1..10),
            x in proptest::collection::vec(-5.0f64..5.0, 1..15),
            y in proptest::collection::vec(-5.0f64..5.0, 1..15),
            a in -3.0f64..3.0,
        ) {
            prop_assume!(x.len() == y.len());
            let hr = ir(&h);
            let combo: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| a * xi + yi).collect();
            let lhs = convolve(&hr, &combo).unwrap();
            let cx = convolve(&hr, &x).unwrap();
            let cy = convolve(&hr, &y).unwrap();
            for ((l, xi), yi) in lhs.samples().iter().zip(cx.samples()).zip(cy.samples()) {
                let want = a * xi + yi;
                prop_assert!((l - want).abs() <= 1e-12 * (1.0 + want.abs()));
            }
        }

        #[test]
        fn keep_largest_is_best_l1_truncation(
            v in proptest::collection::vec(-5.0f64..5.0, 1..30),
            k in 0usize..30,
        ) {
            let kept = keep_largest(&v, k);
            let nonzeros = kept.iter().filter(|&&x| x != 0.0).count();
            prop_assert!(nonzeros <= k.min(v.len()));
            // Dropped mass never grows when k grows.
            let drop_k: f64 = v.iter().zip(&kept).map(|(a, b)| (a - b).abs()).sum();
            let kept_next = keep_largest(&v, k + 1);
            let drop_next: f64 = v.iter().zip(&kept_next).map(|(a, b)| (a - b).abs()).sum();
            prop_assert!(drop_next <= drop_k + 1e-12);
            // Kept entries match the original in place.
            for (a, b) in v.iter().zip(&kept) {
                prop_assert!(*b == 0.0 || a == b);
            }
        }
    }
}
