//! Core value types: sampled signals, impulse responses, and the two
//! structured-sparse coefficient vectors of the decomposition model.
//!
//! Every constructor validates its invariants once, so downstream code
//! can assume finite values and consistent dimensions.

use crate::error::{Error, Result};
use crate::operators::keep_largest;

/// Float slack allowed when checking the l1 sparsity-deviation budgets
/// of [`ScrEvents`] and [`BaselineDiff`].
pub const MEMBERSHIP_SLACK: f64 = 1e-9;

fn ensure_finite(values: &[f64], what: &'static str) -> Result<()> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(what));
    }
    Ok(())
}

fn ensure_rate(rate_hz: f64) -> Result<()> {
    if !(rate_hz.is_finite() && rate_hz > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sample rate must be positive and finite, got {rate_hz}"
        )));
    }
    Ok(())
}

/// A uniformly sampled real-valued signal.
///
/// Samples are in microsiemens for raw recordings, but nothing in the
/// crate depends on the unit. The sample rate travels with the data
/// because file formats do not carry it.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl Signal {
    /// Wraps a non-empty vector of finite samples taken at `sample_rate_hz`.
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("signal samples"));
        }
        ensure_finite(&samples, "signal samples")?;
        ensure_rate(sample_rate_hz)?;
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Duration covered by the samples, in seconds.
    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }
}

/// How an [`ImpulseResponse`] was built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IrShape {
    /// Difference of two exponentials with time constants `tau1 > tau2`.
    Biexponential { tau1_s: f64, tau2_s: f64 },
    /// Arbitrary user-supplied samples.
    Custom,
}

/// The stereotyped shape of a single skin-conductance response.
///
/// The canonical form is the difference of two exponential decays,
///
/// ```text
/// f(u) = 2 (exp(-u / tau1) - exp(-u / tau2)),    tau1 > tau2 > 0,
/// ```
///
/// sampled on the half-open grid `u_k = k / rate, u_k in [0, duration)`.
/// With the default parameters (tau1 = 10 s, tau2 = 1 s, 4 Hz, 40 s) this
/// yields 160 samples, starts at exactly zero, and peaks near 2.56 s.
///
/// ```
/// use edakit::ImpulseResponse;
///
/// let h = ImpulseResponse::biexponential(10.0, 1.0, 4.0, 40.0).unwrap();
/// assert_eq!(h.len(), 160);
/// assert_eq!(h.samples()[0], 0.0);
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct ImpulseResponse {
    samples: Vec<f64>,
    sample_rate_hz: f64,
    shape: IrShape,
}

impl ImpulseResponse {
    /// Builds the biexponential response sampled at `sample_rate_hz` on
    /// `[0, duration_s)`.
    pub fn biexponential(
        tau1_s: f64,
        tau2_s: f64,
        sample_rate_hz: f64,
        duration_s: f64,
    ) -> Result<Self> {
        if !(tau1_s.is_finite() && tau2_s.is_finite() && tau1_s > tau2_s && tau2_s > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time constants must satisfy tau1 > tau2 > 0, got tau1 = {tau1_s}, tau2 = {tau2_s}"
            )));
        }
        ensure_rate(sample_rate_hz)?;
        if !(duration_s.is_finite() && duration_s > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "duration must be positive and finite, got {duration_s}"
            )));
        }
        // Half-open grid: k / rate < duration. The epsilon absorbs float
        // noise in rate * duration so on-grid endpoints are excluded
        // rather than rounded in.
        let steps = sample_rate_hz * duration_s;
        let n = ((steps - 1e-9).ceil()).max(1.0) as usize;
        let samples = (0..n)
            .map(|k| {
                let u = k as f64 / sample_rate_hz;
                2.0 * ((-u / tau1_s).exp() - (-u / tau2_s).exp())
            })
            .collect();
        Ok(Self {
            samples,
            sample_rate_hz,
            shape: IrShape::Biexponential { tau1_s, tau2_s },
        })
    }

    /// Wraps arbitrary finite samples as an impulse response.
    pub fn from_samples(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyInput("impulse response samples"));
        }
        ensure_finite(&samples, "impulse response samples")?;
        ensure_rate(sample_rate_hz)?;
        Ok(Self {
            samples,
            sample_rate_hz,
            shape: IrShape::Custom,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn shape(&self) -> IrShape {
        self.shape
    }
}

/// A driver vector that is sparse up to a small l1 deviation: at most
/// `sparsity` entries carry the signal and the rest sum to no more than
/// `deviation_l1` in absolute value.
#[derive(Debug, Clone, PartialEq)]
pub struct ScrEvents {
    values: Vec<f64>,
    sparsity: usize,
    deviation_l1: f64,
}

impl ScrEvents {
    /// Validates that `values` is within l1 distance `deviation_l1` of
    /// its best `sparsity`-sparse approximation (with [`MEMBERSHIP_SLACK`]
    /// of float slack) and wraps it.
    pub fn new(values: Vec<f64>, sparsity: usize, deviation_l1: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("event values"));
        }
        ensure_finite(&values, "event values")?;
        if !(deviation_l1.is_finite() && deviation_l1 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "l1 deviation must be nonnegative, got {deviation_l1}"
            )));
        }
        if sparsity > values.len() {
            return Err(Error::InvalidParameter(format!(
                "sparsity {sparsity} exceeds vector length {}",
                values.len()
            )));
        }
        let actual = sparse_deviation(&values, sparsity);
        if actual > deviation_l1 + MEMBERSHIP_SLACK {
            return Err(Error::SparsityBudget(format!(
                "l1 distance to best {sparsity}-sparse approximation is {actual}, \
                 budget is {deviation_l1}"
            )));
        }
        Ok(Self {
            values,
            sparsity,
            deviation_l1,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sparsity(&self) -> usize {
        self.sparsity
    }

    pub fn deviation_l1(&self) -> f64 {
        self.deviation_l1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// First differences of the baseline, sparse up to an l1 deviation of
/// `deviation_l1` outside the `jumps` largest entries.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineDiff {
    values: Vec<f64>,
    jumps: usize,
    deviation_l1: f64,
}

impl BaselineDiff {
    /// Same membership rule as [`ScrEvents::new`], with `jumps` in place
    /// of the event count.
    pub fn new(values: Vec<f64>, jumps: usize, deviation_l1: f64) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyInput("baseline difference values"));
        }
        ensure_finite(&values, "baseline difference values")?;
        if !(deviation_l1.is_finite() && deviation_l1 >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "l1 deviation must be nonnegative, got {deviation_l1}"
            )));
        }
        if jumps > values.len() {
            return Err(Error::InvalidParameter(format!(
                "jump count {jumps} exceeds vector length {}",
                values.len()
            )));
        }
        let actual = sparse_deviation(&values, jumps);
        if actual > deviation_l1 + MEMBERSHIP_SLACK {
            return Err(Error::SparsityBudget(format!(
                "l1 distance to best {jumps}-sparse approximation is {actual}, \
                 budget is {deviation_l1}"
            )));
        }
        Ok(Self {
            values,
            jumps,
            deviation_l1,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn jumps(&self) -> usize {
        self.jumps
    }

    pub fn deviation_l1(&self) -> f64 {
        self.deviation_l1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

/// l1 distance from `values` to its best `k`-sparse approximation.
fn sparse_deviation(values: &[f64], k: usize) -> f64 {
    let kept = keep_largest(values, k);
    values
        .iter()
        .zip(kept.iter())
        .map(|(v, w)| (v - w).abs())
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn biexponential_canonical_length_is_160() {
        let h = ImpulseResponse::biexponential(10.0, 1.0, 4.0, 40.0).unwrap();
        assert_eq!(h.len(), 160);
    }

    #[test]
    fn biexponential_starts_at_zero() {
        let h = ImpulseResponse::biexponential(10.0, 1.0, 4.0, 40.0).unwrap();
        assert_eq!(h.samples()[0], 0.0);
    }

    #[test]
    fn biexponential_matches_direct_evaluation() {
        let h = ImpulseResponse::biexponential(10.0, 1.0, 4.0, 40.0).unwrap();
        for (k, &sample) in h.samples().iter().enumerate() {
            let u = k as f64 / 4.0;
            let direct = 2.0 * ((-u / 10.0).exp() - (-u).exp());
            assert!((sample - direct).abs() <= 1e-15);
        }
    }

    #[test]
    fn biexponential_grid_peak_matches_direct_argmax() {
        // The continuous maximizer is u* = tau1 tau2 / (tau1 - tau2)
        // * ln(tau1 / tau2), about 2.5584 s here, so the grid argmax
        // lands on the nearest-from-below sample u = 2.5 s.
        let h = ImpulseResponse::biexponential(10.0, 1.0, 4.0, 40.0).unwrap();
        let mut best = (0, f64::NEG_INFINITY);
        for k in 0..160 {
            let u = k as f64 / 4.0;
            let direct = 2.0 * ((-u / 10.0).exp() - (-u).exp());
            if direct > best.1 {
                best = (k, direct);
            }
        }
        let (argmax, peak) = best;
        assert_eq!(argmax, 10);
        let measured = h
            .samples()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        assert_eq!(measured.0, argmax);
        assert!((measured.1 - peak).abs() <= 1e-15);
        assert!((peak - 1.3934315688950122).abs() <= 1e-12);
        let continuous_peak_s = 10.0 / 9.0 * 10.0f64.ln();
        assert!((continuous_peak_s - 2.5584).abs() <= 1e-4);
    }

    #[test]
    fn biexponential_off_grid_endpoint_rounds_up() {
        // 4 Hz over 40.1 s: 160.4 grid steps, so samples 0..=160 fit.
        let h = ImpulseResponse::biexponential(10.0, 1.0, 4.0, 40.1).unwrap();
        assert_eq!(h.len(), 161);
    }

    #[test]
    fn biexponential_rejects_bad_time_constants() {
        assert!(ImpulseResponse::biexponential(1.0, 10.0, 4.0, 40.0).is_err());
        assert!(ImpulseResponse::biexponential(10.0, -1.0, 4.0, 40.0).is_err());
        assert!(ImpulseResponse::biexponential(10.0, 10.0, 4.0, 40.0).is_err());
        assert!(ImpulseResponse::biexponential(10.0, 1.0, 0.0, 40.0).is_err());
        assert!(ImpulseResponse::biexponential(10.0, 1.0, 4.0, 0.0).is_err());
    }

    #[test]
    fn signal_rejects_empty_and_non_finite() {
        assert!(Signal::new(vec![], 4.0).is_err());
        assert!(Signal::new(vec![1.0, f64::NAN], 4.0).is_err());
        assert!(Signal::new(vec![1.0], -4.0).is_err());
    }

    #[test]
    fn scr_events_membership_honors_budget() {
        // Exactly 2-sparse passes with zero budget.
        assert!(ScrEvents::new(vec![0.0, 3.0, 0.0, -1.0], 2, 0.0).is_ok());
        // A third nonzero entry of mass 0.5 needs at least that much budget.
        assert!(ScrEvents::new(vec![0.5, 3.0, 0.0, -1.0], 2, 0.4).is_err());
        assert!(ScrEvents::new(vec![0.5, 3.0, 0.0, -1.0], 2, 0.5).is_ok());
    }

    #[test]
    fn baseline_diff_membership_honors_budget() {
        assert!(BaselineDiff::new(vec![0.0, 0.0, 2.0], 1, 0.0).is_ok());
        assert!(BaselineDiff::new(vec![0.1, 0.0, 2.0], 1, 0.05).is_err());
        assert!(BaselineDiff::new(vec![0.1, 0.0, 2.0], 1, 0.1).is_ok());
    }

    #[test]
    fn sparsity_larger_than_length_is_rejected() {
        assert!(ScrEvents::new(vec![1.0, 2.0], 3, 0.0).is_err());
        assert!(BaselineDiff::new(vec![1.0], 2, 0.0).is_err());
    }
}
