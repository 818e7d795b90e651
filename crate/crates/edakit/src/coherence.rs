//! Coherence analysis of the combined dictionary `C = [D T_h  I]`.
//!
//! Recovery guarantees for the sparse decomposition hinge on three
//! mutual-coherence parameters:
//!
//! * `mu_h` — largest normalized inner product between two distinct
//!   columns of `D T_h`,
//! * `mu_m` — largest normalized inner product between a column of
//!   `D T_h` and a canonical basis vector (equivalently the largest
//!   absolute entry of the column-normalized `D T_h`),
//! * `mu_c` — the same maximum taken over all column pairs of the
//!   stacked dictionary `C`, which collapses to `max(mu_h, mu_m)`
//!   because distinct identity columns are orthogonal.
//!
//! [`coherence_params`] computes the parameters twice — once from raw
//! columns with per-pair normalization and once through the Gram
//! matrix of pre-normalized columns — and insists the two agree to
//! `1e-12`. [`sparsity_condition`] turns a report into a certified
//! sparsity budget: strictly fewer combined events and jumps than the
//! threshold puts an instance in the bounded-error regime.

use crate::error::{Error, Result};
use crate::operators::kernels::{conv_into, diff_into, dot, norm2};
use crate::signal::ImpulseResponse;

/// Agreement tolerance between the two computation routes.
const ROUTE_AGREEMENT: f64 = 1e-12;

/// Coherence parameters of `C = [D T_h  I]` for a given driver length.
#[derive(Debug, Clone)]
pub struct CoherenceReport {
    /// Peak coherence among distinct `D T_h` columns, in `[0, 1]`.
    pub mu_h: f64,
    /// Peak coherence between `D T_h` columns and basis vectors.
    pub mu_m: f64,
    /// Peak coherence over the stacked dictionary: `max(mu_h, mu_m)`.
    pub mu_c: f64,
    /// l2 norms of the `D T_h` columns, all strictly positive.
    pub column_norms: Vec<f64>,
}

/// Result of checking a sparsity budget against a report.
#[derive(Debug, Clone, Copy)]
pub struct SparsityCheck {
    /// Certified budget: recovery is guaranteed for
    /// `events + jumps < threshold` (strictly). Infinite when the
    /// coherence vanishes entirely.
    pub threshold: f64,
    /// Whether the supplied counts satisfy the strict inequality.
    pub holds: bool,
}

/// Qualitative reading of a sparsity check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoveryRegime {
    /// The counts are inside the certified budget: the recovery error
    /// is bounded by a constant multiple of the noise and deviation
    /// budgets.
    BoundedError,
    /// Outside the certified budget; recovery may still work but
    /// carries no guarantee.
    NoGuarantee,
}

/// Certificate echoing the inputs that produced a regime call.
#[derive(Debug, Clone)]
pub struct RecoveryCertificate {
    pub regime: RecoveryRegime,
    pub mu_h: f64,
    pub mu_m: f64,
    pub mu_c: f64,
    pub threshold: f64,
    pub events: usize,
    pub jumps: usize,
}

/// Computes the coherence parameters of `C = [D T_h  I]` where the
/// driver has `driver_len` entries.
///
/// The columns are produced by applying the convolution and
/// differencing operators to basis vectors; no dictionary matrix is
/// materialized for the primary route. Two independent formulations
/// are evaluated and cross-checked internally.
///
/// # Errors
///
/// Rejects an identically zero response, a dictionary with fewer than
/// two rows, and any zero column of `D T_h` (a constant response with
/// `driver_len = 1` is the degenerate case).
pub fn coherence_params(h: &ImpulseResponse, driver_len: usize) -> Result<CoherenceReport> {
    let hs = h.samples();
    if hs.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidParameter(
            "impulse response is identically zero".into(),
        ));
    }
    if driver_len == 0 {
        return Err(Error::InvalidParameter(
            "driver_len must be positive".into(),
        ));
    }
    let full_len = hs.len() + driver_len - 1;
    if full_len < 2 {
        return Err(Error::InvalidParameter(
            "dictionary needs at least two rows; lengthen h or the driver".into(),
        ));
    }
    let m = full_len - 1;

    // Columns of D T_h, built by pushing basis vectors through the
    // operators.
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(driver_len);
    let mut basis = vec![0.0; driver_len];
    let mut full = vec![0.0; full_len];
    for j in 0..driver_len {
        basis[j] = 1.0;
        conv_into(hs, &basis, &mut full);
        let mut col = vec![0.0; m];
        diff_into(&full, &mut col);
        cols.push(col);
        basis[j] = 0.0;
    }

    let mut column_norms = Vec::with_capacity(driver_len);
    for (j, col) in cols.iter().enumerate() {
        let n = norm2(col);
        if n == 0.0 {
            return Err(Error::ZeroColumn { index: j });
        }
        column_norms.push(n);
    }

    // Route one: raw columns, normalization applied per pair.
    let mut mu_h_pair: f64 = 0.0;
    for i in 0..driver_len {
        for j in (i + 1)..driver_len {
            let v = dot(&cols[i], &cols[j]).abs() / (column_norms[i] * column_norms[j]);
            mu_h_pair = mu_h_pair.max(v);
        }
    }
    let mut mu_m_pair: f64 = 0.0;
    for (col, n) in cols.iter().zip(&column_norms) {
        for &e in col {
            mu_m_pair = mu_m_pair.max(e.abs() / n);
        }
    }

    // The stacked-dictionary maximum, taken brute force over every
    // column pair of [D T_h  I]; identity-identity pairs vanish.
    let mut mu_c_brute = mu_h_pair;
    for (col, n) in cols.iter().zip(&column_norms) {
        for &e in col {
            mu_c_brute = mu_c_brute.max(e.abs() / n);
        }
    }

    // Route two: normalize the columns first, then take maxima of the
    // Gram matrix and of the normalized entries.
    let normalized: Vec<Vec<f64>> = cols
        .iter()
        .zip(&column_norms)
        .map(|(col, n)| col.iter().map(|v| v / n).collect())
        .collect();
    let mut mu_h_gram: f64 = 0.0;
    for i in 0..driver_len {
        for j in (i + 1)..driver_len {
            mu_h_gram = mu_h_gram.max(dot(&normalized[i], &normalized[j]).abs());
        }
    }
    let mut mu_m_gram: f64 = 0.0;
    for col in &normalized {
        for &e in col {
            mu_m_gram = mu_m_gram.max(e.abs());
        }
    }

    assert!(
        (mu_h_pair - mu_h_gram).abs() <= ROUTE_AGREEMENT
            && (mu_m_pair - mu_m_gram).abs() <= ROUTE_AGREEMENT,
        "coherence routes disagree: pair ({mu_h_pair}, {mu_m_pair}) vs gram ({mu_h_gram}, {mu_m_gram})"
    );

    let mu_h = mu_h_gram.min(1.0);
    let mu_m = mu_m_gram.min(1.0);
    let mu_c = mu_h.max(mu_m);
    assert!(
        (mu_c_brute.min(1.0) - mu_c).abs() <= ROUTE_AGREEMENT,
        "stacked-dictionary maximum {mu_c_brute} disagrees with max(mu_h, mu_m) = {mu_c}"
    );

    Ok(CoherenceReport {
        mu_h,
        mu_m,
        mu_c,
        column_norms,
    })
}

fn threshold_value(mu_h: f64, mu_m: f64, mu_c: f64) -> f64 {
    let denom1 = mu_h + 2.0 * mu_c + (mu_h * mu_h + mu_m * mu_m).sqrt();
    let b1 = if denom1 > 0.0 {
        2.0 * (1.0 + mu_h) / denom1
    } else {
        f64::INFINITY
    };
    let b2 = if mu_c > 0.0 {
        (1.0 + mu_c) / (2.0 * mu_c)
    } else {
        f64::INFINITY
    };
    b1.max(b2)
}

/// Evaluates the certified sparsity budget for `events` driver spikes
/// and `jumps` baseline changes.
///
/// The budget is the larger of two bounds derived from the coherence
/// parameters; either vanishing denominator yields an infinite budget,
/// so a perfectly incoherent dictionary certifies any counts.
pub fn sparsity_condition(report: &CoherenceReport, events: usize, jumps: usize) -> SparsityCheck {
    let threshold = threshold_value(report.mu_h, report.mu_m, report.mu_c);
    SparsityCheck {
        threshold,
        holds: ((events + jumps) as f64) < threshold,
    }
}

/// Wraps a sparsity check into a qualitative certificate that echoes
/// the coherence values it was based on. No numeric error constant is
/// reported: inside the budget the recovery error is bounded by a
/// constant multiple of the noise and deviation budgets, but the
/// constant itself is not computed.
pub fn recovery_certificate(
    report: &CoherenceReport,
    events: usize,
    jumps: usize,
) -> RecoveryCertificate {
    let check = sparsity_condition(report, events, jumps);
    RecoveryCertificate {
        regime: if check.holds {
            RecoveryRegime::BoundedError
        } else {
            RecoveryRegime::NoGuarantee
        },
        mu_h: report.mu_h,
        mu_m: report.mu_m,
        mu_c: report.mu_c,
        threshold: check.threshold,
        events,
        jumps,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::ImpulseResponse;

    fn canonical_h() -> ImpulseResponse {
        ImpulseResponse::biexponential(10.0, 1.0, 4.0, 40.0).unwrap()
    }

    fn report_with(mu_h: f64, mu_m: f64) -> CoherenceReport {
        CoherenceReport {
            mu_h,
            mu_m,
            mu_c: mu_h.max(mu_m),
            column_norms: vec![1.0],
        }
    }

    #[test]
    fn unit_impulse_reduces_to_differencing_matrix() {
        // With h = e1 the convolution is the identity, so the columns
        // are those of D: edge columns have a single +-1, interior
        // columns have norm sqrt(2), and adjacent columns overlap.
        let h = ImpulseResponse::from_samples(vec![1.0], 4.0).unwrap();
        let rep = coherence_params(&h, 10).unwrap();
        assert_eq!(rep.column_norms.len(), 10);
        assert!((rep.column_norms[0] - 1.0).abs() <= 1e-15);
        assert!((rep.column_norms[9] - 1.0).abs() <= 1e-15);
        for n in &rep.column_norms[1..9] {
            assert!((n - 2.0_f64.sqrt()).abs() <= 1e-15);
        }
        assert!((rep.mu_m - 1.0).abs() <= 1e-15);
        assert!((rep.mu_h - 1.0 / 2.0_f64.sqrt()).abs() <= 1e-12);
        assert_eq!(rep.mu_c, 1.0);
    }

    #[test]
    fn stacked_maximum_equals_max_of_blocks() {
        let rep = coherence_params(&canonical_h(), 60).unwrap();
        assert_eq!(rep.mu_c, rep.mu_h.max(rep.mu_m));
        assert!(rep.mu_h >= 0.0 && rep.mu_h <= 1.0);
        assert!(rep.mu_m >= 0.0 && rep.mu_m <= 1.0);
    }

    #[test]
    fn coherence_ignores_positive_scaling_of_h() {
        let h = canonical_h();
        for alpha in [3.7, 1e-3] {
            let scaled = ImpulseResponse::from_samples(
                h.samples().iter().map(|v| alpha * v).collect(),
                h.sample_rate_hz(),
            )
            .unwrap();
            let a = coherence_params(&h, 40).unwrap();
            let b = coherence_params(&scaled, 40).unwrap();
            assert!((a.mu_h - b.mu_h).abs() <= 1e-12);
            assert!((a.mu_m - b.mu_m).abs() <= 1e-12);
            assert!((a.mu_c - b.mu_c).abs() <= 1e-12);
        }
    }

    #[test]
    fn constant_response_with_unit_driver_has_zero_column() {
        let h = ImpulseResponse::from_samples(vec![1.0, 1.0], 4.0).unwrap();
        match coherence_params(&h, 1) {
            Err(Error::ZeroColumn { index: 0 }) => {}
            other => panic!("expected zero-column error, got {other:?}"),
        }
    }

    #[test]
    fn single_column_has_no_pairwise_coherence() {
        let h = ImpulseResponse::from_samples(vec![1.0, 0.5], 4.0).unwrap();
        let rep = coherence_params(&h, 1).unwrap();
        assert_eq!(rep.mu_h, 0.0);
        assert!(rep.mu_m > 0.0);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        let zero = ImpulseResponse::from_samples(vec![0.0, 0.0], 4.0).unwrap();
        assert!(coherence_params(&zero, 5).is_err());
        let h = ImpulseResponse::from_samples(vec![1.0], 4.0).unwrap();
        assert!(coherence_params(&h, 0).is_err());
        // One sample and a one-long driver leave a single row, which
        // cannot be differenced.
        assert!(coherence_params(&h, 1).is_err());
    }

    #[test]
    fn canonical_response_values_are_stable() {
        // Regression constants for the canonical response at 4 Hz with
        // a 240-sample driver, frozen from a dense-matrix evaluation.
        let rep = coherence_params(&canonical_h(), 240).unwrap();
        assert!(
            (rep.mu_h - CANONICAL_MU_H).abs() <= 1e-9,
            "mu_h {}",
            rep.mu_h
        );
        assert!(
            (rep.mu_m - CANONICAL_MU_M).abs() <= 1e-9,
            "mu_m {}",
            rep.mu_m
        );
        assert_eq!(rep.mu_c, rep.mu_h.max(rep.mu_m));
    }

    const CANONICAL_MU_H: f64 = 0.7554703252097155;
    const CANONICAL_MU_M: f64 = 0.6499338560792829;

    #[test]
    fn zero_budget_always_certified() {
        for (mu_h, mu_m) in [(0.0, 0.0), (0.3, 0.8), (1.0, 1.0)] {
            let check = sparsity_condition(&report_with(mu_h, mu_m), 0, 0);
            assert!(check.holds);
            assert!(check.threshold >= 1.0 - 1e-15);
        }
    }

    #[test]
    fn fully_coherent_dictionary_certifies_nothing() {
        let rep = report_with(1.0, 1.0);
        let check = sparsity_condition(&rep, 1, 0);
        // Larger branch: (1 + 1) / 2 = 1; the other branch evaluates
        // to 4 / (3 + sqrt(2)) and loses the max.
        assert!((check.threshold - 1.0).abs() <= 1e-15);
        let other = 2.0 * 2.0 / (1.0 + 2.0 + 2.0_f64.sqrt());
        assert!(other < check.threshold);
        assert!(!check.holds);
        for s in 1..5 {
            assert!(!sparsity_condition(&rep, s, s).holds);
        }
    }

    #[test]
    fn vanishing_coherence_certifies_everything() {
        let check = sparsity_condition(&report_with(0.0, 0.0), 1_000_000, 1_000_000);
        assert!(check.threshold.is_infinite());
        assert!(check.holds);
    }

    #[test]
    fn condition_flips_exactly_at_the_threshold() {
        let rep = coherence_params(&canonical_h(), 240).unwrap();
        let tau = sparsity_condition(&rep, 0, 0).threshold;
        assert!(tau.is_finite() && tau > 0.0);
        let below = tau.floor() as usize;
        let above = tau.ceil() as usize;
        if (below as f64) < tau {
            assert!(sparsity_condition(&rep, below, 0).holds);
        }
        assert!(!sparsity_condition(&rep, above, 0).holds);
    }

    #[test]
    fn threshold_never_drops_when_coherence_shrinks() {
        let grid: Vec<f64> = (0..=20).map(|i| i as f64 / 20.0).collect();
        for &mu_m in &grid {
            let mut prev = f64::NEG_INFINITY;
            for &mu_h in grid.iter().rev() {
                let t = threshold_value(mu_h, mu_m, mu_h.max(mu_m));
                assert!(t >= prev - 1e-12, "mu_h {mu_h} mu_m {mu_m}: {t} < {prev}");
                prev = t;
            }
        }
        for &mu_h in &grid {
            let mut prev = f64::NEG_INFINITY;
            for &mu_m in grid.iter().rev() {
                let t = threshold_value(mu_h, mu_m, mu_h.max(mu_m));
                assert!(t >= prev - 1e-12, "mu_h {mu_h} mu_m {mu_m}: {t} < {prev}");
                prev = t;
            }
        }
    }

    #[test]
    fn certificate_echoes_its_inputs() {
        let rep = coherence_params(&canonical_h(), 60).unwrap();
        let cert = recovery_certificate(&rep, 1, 0);
        assert_eq!(cert.mu_h, rep.mu_h);
        assert_eq!(cert.events, 1);
        assert_eq!(cert.jumps, 0);
        let loose = recovery_certificate(&report_with(0.0, 0.0), 50, 50);
        assert_eq!(loose.regime, RecoveryRegime::BoundedError);
        let tight = recovery_certificate(&report_with(1.0, 1.0), 50, 50);
        assert_eq!(tight.regime, RecoveryRegime::NoGuarantee);
    }
}
