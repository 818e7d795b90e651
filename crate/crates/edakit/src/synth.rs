//! Seeded generators for synthetic benchmark instances.
//!
//! An instance is drawn directly in the differenced domain: a sparse
//! driver `x` with exponentially distributed magnitudes, a sparse
//! baseline-difference vector `Db` with standard normal magnitudes,
//! both optionally blurred by a dense perturbation of prescribed l1
//! mass, plus a noise vector rescaled to an exact l2 norm. The
//! observation is
//!
//! ```text
//! Dy = D T_h x + alpha * Db + noise.
//! ```
//!
//! [`compose_raw`] builds the same instance in the raw signal domain
//! instead (integrating the baseline from its differences and bounding
//! the raw noise at half the differenced budget), which is what the
//! file-based pipeline and the detection experiments consume.
//!
//! All draws come from a counter-based generator seeded explicitly;
//! the three components of one instance use separate streams, so they
//! are independent yet individually reproducible.

use crate::error::{Error, Result};
use crate::operators::kernels;
use crate::signal::{BaselineDiff, ImpulseResponse, ScrEvents, Signal};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

/// Mean of the exponential distribution behind event magnitudes.
pub const EVENT_MAGNITUDE_MEAN: f64 = 2.0;

const STREAM_EVENTS: u64 = 0;
const STREAM_BASELINE: u64 = 1;
const STREAM_NOISE: u64 = 2;

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Everything needed to draw one synthetic instance.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    /// Impulse response used to build the convolution dictionary.
    pub h: ImpulseResponse,
    /// Length `T` of the driver vector.
    pub driver_len: usize,
    /// Number of significant events `s`.
    pub events: usize,
    /// Number of significant baseline jumps `c`.
    pub jumps: usize,
    /// l1 mass `delta` of the dense perturbation added to the driver.
    pub event_deviation: f64,
    /// l1 mass `gamma` of the dense perturbation added to the jumps.
    pub jump_deviation: f64,
    /// Exact l2 norm `epsilon` of the differenced-domain noise.
    pub noise_norm: f64,
    /// Scale `alpha` applied to the baseline differences.
    pub baseline_scale: f64,
    pub seed: u64,
}

impl SynthConfig {
    /// Baseline-difference length implied by the dimensions.
    pub fn diff_len(&self) -> usize {
        self.h.len() + self.driver_len - 2
    }

    fn validate(&self) -> Result<()> {
        if self.driver_len == 0 {
            return Err(Error::EmptyInput("driver vector"));
        }
        if self.h.len() + self.driver_len < 3 {
            return Err(Error::DimensionMismatch(
                "instance too short: the differenced observation would be empty".into(),
            ));
        }
        for (name, v) in [
            ("event_deviation", self.event_deviation),
            ("jump_deviation", self.jump_deviation),
            ("noise_norm", self.noise_norm),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be nonnegative and finite, got {v}"
                )));
            }
        }
        if !self.baseline_scale.is_finite() {
            return Err(Error::NonFinite("baseline_scale"));
        }
        Ok(())
    }
}

/// One synthetic instance in the differenced domain, with its ground
/// truth attached.
#[derive(Debug, Clone)]
pub struct SynthInstance {
    pub x_true: ScrEvents,
    pub db_true: BaselineDiff,
    pub noise: Vec<f64>,
    /// `D T_h x + alpha * Db + noise`.
    pub dy: Vec<f64>,
}

/// The same instance composed in the raw signal domain.
#[derive(Debug, Clone)]
pub struct RawInstance {
    pub x_true: ScrEvents,
    pub db_true: BaselineDiff,
    /// Integrated baseline, length `h.len() + driver_len - 1`.
    pub baseline: Vec<f64>,
    /// Raw noise with l2 norm `noise_norm / 2`.
    pub noise: Vec<f64>,
    /// `h ∗ x + baseline + noise`.
    pub y: Signal,
}

/// Options for [`compose_raw`] beyond the differenced-domain config.
#[derive(Debug, Clone)]
pub struct RawOptions {
    /// Baseline level before the first jump.
    pub baseline_level: f64,
    /// When set, events are placed only on these driver indices.
    pub event_support: Option<Vec<usize>>,
}

impl Default for RawOptions {
    fn default() -> Self {
        Self {
            baseline_level: 10.0,
            event_support: None,
        }
    }
}

fn draw_sparse(
    rng_support: &mut ChaCha8Rng,
    len: usize,
    pool: Option<&[usize]>,
    k: usize,
    deviation_l1: f64,
    mut magnitude: impl FnMut(&mut ChaCha8Rng) -> f64,
) -> Result<Vec<f64>> {
    if len == 0 {
        return Err(Error::EmptyInput("sparse vector"));
    }
    if !(deviation_l1.is_finite() && deviation_l1 >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "l1 deviation must be nonnegative, got {deviation_l1}"
        )));
    }
    let pool_len = pool.map_or(len, |p| p.len());
    if k > pool_len {
        return Err(Error::InvalidParameter(format!(
            "cannot place {k} significant entries on {pool_len} admissible indices"
        )));
    }
    if let Some(p) = pool {
        if p.iter().any(|&i| i >= len) {
            return Err(Error::InvalidParameter(
                "support pool index out of range".into(),
            ));
        }
        let mut seen = vec![false; len];
        for &i in p {
            if seen[i] {
                return Err(Error::InvalidParameter(
                    "support pool contains duplicate indices".into(),
                ));
            }
            seen[i] = true;
        }
    }
    let mut values = vec![0.0; len];
    let picks = rand::seq::index::sample(rng_support, pool_len, k);
    for slot in picks.iter() {
        let idx = pool.map_or(slot, |p| p[slot]);
        values[idx] = magnitude(rng_support);
    }
    if deviation_l1 > 0.0 {
        let dense: Vec<f64> = (0..len)
            .map(|_| StandardNormal.sample(rng_support))
            .collect();
        let mass = kernels::norm1(&dense);
        if mass == 0.0 {
            return Err(Error::InvalidParameter(
                "degenerate dense perturbation draw".into(),
            ));
        }
        let scale = deviation_l1 / mass;
        for (v, g) in values.iter_mut().zip(&dense) {
            *v += scale * g;
        }
    }
    Ok(values)
}

/// Draws a driver vector: `events` significant entries placed uniformly
/// without replacement, with i.i.d. exponential magnitudes of mean
/// [`EVENT_MAGNITUDE_MEAN`], plus a dense Gaussian perturbation rescaled
/// to exact l1 mass `deviation_l1`.
pub fn gen_events(len: usize, events: usize, deviation_l1: f64, seed: u64) -> Result<ScrEvents> {
    gen_events_on_support_impl(len, None, events, deviation_l1, seed)
}

/// Like [`gen_events`], but significant entries land only on `pool`.
pub fn gen_events_on_support(
    len: usize,
    pool: &[usize],
    events: usize,
    deviation_l1: f64,
    seed: u64,
) -> Result<ScrEvents> {
    gen_events_on_support_impl(len, Some(pool), events, deviation_l1, seed)
}

fn gen_events_on_support_impl(
    len: usize,
    pool: Option<&[usize]>,
    events: usize,
    deviation_l1: f64,
    seed: u64,
) -> Result<ScrEvents> {
    let mut rng = stream_rng(seed, STREAM_EVENTS);
    let exp =
        Exp::new(1.0 / EVENT_MAGNITUDE_MEAN).expect("exponential rate is a positive constant");
    let values = draw_sparse(&mut rng, len, pool, events, deviation_l1, |r| exp.sample(r))?;
    ScrEvents::new(values, events, deviation_l1)
}

/// Draws a baseline-difference vector: `jumps` significant entries with
/// standard normal magnitudes plus a dense perturbation of exact l1
/// mass `deviation_l1`.
pub fn gen_baseline_diff(
    len: usize,
    jumps: usize,
    deviation_l1: f64,
    seed: u64,
) -> Result<BaselineDiff> {
    let mut rng = stream_rng(seed, STREAM_BASELINE);
    let values = draw_sparse(&mut rng, len, None, jumps, deviation_l1, |r| {
        StandardNormal.sample(r)
    })?;
    BaselineDiff::new(values, jumps, deviation_l1)
}

/// Draws a Gaussian noise vector rescaled to exact l2 norm
/// `target_norm`, from the dedicated noise stream of `seed`.
pub fn gen_noise(len: usize, target_norm: f64, seed: u64) -> Result<Vec<f64>> {
    if len == 0 {
        return Err(Error::EmptyInput("noise vector"));
    }
    if !(target_norm.is_finite() && target_norm >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "noise norm must be nonnegative, got {target_norm}"
        )));
    }
    Ok(draw_noise(
        &mut stream_rng(seed, STREAM_NOISE),
        len,
        target_norm,
    ))
}

fn draw_noise(rng: &mut ChaCha8Rng, len: usize, target_norm: f64) -> Vec<f64> {
    if target_norm == 0.0 {
        return vec![0.0; len];
    }
    let mut noise: Vec<f64> = (0..len).map(|_| StandardNormal.sample(rng)).collect();
    let norm = kernels::norm2(&noise);
    if norm == 0.0 {
        // Probability-zero draw; retry deterministically from the stream.
        return draw_noise(rng, len, target_norm);
    }
    let scale = target_norm / norm;
    noise.iter_mut().for_each(|v| *v *= scale);
    noise
}

/// Draws one differenced-domain instance.
pub fn compose_observation(cfg: &SynthConfig) -> Result<SynthInstance> {
    cfg.validate()?;
    let x_true = gen_events(cfg.driver_len, cfg.events, cfg.event_deviation, cfg.seed)?;
    let m = cfg.diff_len();
    let db_true = gen_baseline_diff(m, cfg.jumps, cfg.jump_deviation, cfg.seed)?;
    let mut rng = stream_rng(cfg.seed, STREAM_NOISE);
    let noise = draw_noise(&mut rng, m, cfg.noise_norm);
    let dy = differenced_forward(cfg, &x_true, &db_true, &noise);
    Ok(SynthInstance {
        x_true,
        db_true,
        noise,
        dy,
    })
}

fn differenced_forward(
    cfg: &SynthConfig,
    x: &ScrEvents,
    db: &BaselineDiff,
    noise: &[f64],
) -> Vec<f64> {
    let mut full = vec![0.0; cfg.h.len() + cfg.driver_len - 1];
    kernels::conv_into(cfg.h.samples(), x.values(), &mut full);
    let mut dy = vec![0.0; full.len() - 1];
    kernels::diff_into(&full, &mut dy);
    for ((d, b), n) in dy.iter_mut().zip(db.values()).zip(noise) {
        // Left-to-right sum, so the construction identity holds bit for bit.
        *d = *d + cfg.baseline_scale * b + n;
    }
    dy
}

/// Draws one raw-domain instance: `y = h ∗ x + baseline + noise`, where
/// the baseline integrates `alpha * Db` from `opts.baseline_level` and
/// the raw noise carries half the differenced noise budget (the
/// difference operator at most doubles an l2 norm).
pub fn compose_raw(cfg: &SynthConfig, opts: &RawOptions) -> Result<RawInstance> {
    cfg.validate()?;
    let x_true = match &opts.event_support {
        Some(pool) => gen_events_on_support(
            cfg.driver_len,
            pool,
            cfg.events,
            cfg.event_deviation,
            cfg.seed,
        )?,
        None => gen_events(cfg.driver_len, cfg.events, cfg.event_deviation, cfg.seed)?,
    };
    if !opts.baseline_level.is_finite() {
        return Err(Error::NonFinite("baseline_level"));
    }
    let m = cfg.diff_len();
    let db_true = gen_baseline_diff(m, cfg.jumps, cfg.jump_deviation, cfg.seed)?;
    let scaled_db: Vec<f64> = db_true
        .values()
        .iter()
        .map(|v| cfg.baseline_scale * v)
        .collect();
    let baseline = integrate_baseline(&scaled_db, opts.baseline_level);
    let mut rng = stream_rng(cfg.seed, STREAM_NOISE);
    let noise = draw_noise(&mut rng, m + 1, cfg.noise_norm / 2.0);
    let mut y = vec![0.0; m + 1];
    kernels::conv_into(cfg.h.samples(), x_true.values(), &mut y);
    for ((yi, b), n) in y.iter_mut().zip(&baseline).zip(&noise) {
        *yi = *yi + b + n;
    }
    let y = Signal::new(y, cfg.h.sample_rate_hz())?;
    Ok(RawInstance {
        x_true,
        db_true,
        baseline,
        noise,
        y,
    })
}

/// Reconstructs a baseline from its pairwise differences: since the
/// differences are `b_i - b_{i+1}`, each step subtracts the next
/// difference from the running level.
pub fn integrate_baseline(db: &[f64], initial_level: f64) -> Vec<f64> {
    let mut b = Vec::with_capacity(db.len() + 1);
    b.push(initial_level);
    for &d in db {
        b.push(b.last().unwrap() - d);
    }
    b
}

/// l2 relative error of `estimate` against a nonzero `truth`.
pub fn relative_error(truth: &[f64], estimate: &[f64]) -> Result<f64> {
    if truth.len() != estimate.len() {
        return Err(Error::DimensionMismatch(format!(
            "truth has {} entries, estimate {}",
            truth.len(),
            estimate.len()
        )));
    }
    let denom = kernels::norm2(truth);
    if denom == 0.0 {
        return Err(Error::ZeroTruth);
    }
    let diff: f64 = truth
        .iter()
        .zip(estimate)
        .map(|(t, e)| (t - e) * (t - e))
        .sum();
    Ok(diff.sqrt() / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::keep_largest;

    fn small_h() -> ImpulseResponse {
        ImpulseResponse::biexponential(2.0, 0.5, 4.0, 5.0).unwrap()
    }

    fn canonical_cfg(seed: u64) -> SynthConfig {
        SynthConfig {
            h: ImpulseResponse::biexponential(10.0, 1.0, 4.0, 40.0).unwrap(),
            driver_len: 240,
            events: 5,
            jumps: 5,
            event_deviation: 0.01,
            jump_deviation: 0.01,
            noise_norm: 0.01,
            baseline_scale: 1.0,
            seed,
        }
    }

    #[test]
    fn gen_events_zero_deviation_is_exactly_sparse() {
        let x = gen_events(100, 7, 0.0, 3).unwrap();
        let nonzeros = x.values().iter().filter(|&&v| v != 0.0).count();
        assert_eq!(nonzeros, 7);
        assert!(x.values().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn gen_events_same_seed_is_identical() {
        let a = gen_events(50, 4, 0.01, 11).unwrap();
        let b = gen_events(50, 4, 0.01, 11).unwrap();
        assert_eq!(a.values(), b.values());
        let c = gen_events(50, 4, 0.01, 12).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn gen_events_magnitude_mean_is_two() {
        let mut sum = 0.0;
        let mut count = 0usize;
        for seed in 0..2000 {
            let x = gen_events(20, 5, 0.0, seed).unwrap();
            for &v in x.values() {
                if v != 0.0 {
                    sum += v;
                    count += 1;
                }
            }
        }
        assert_eq!(count, 10_000);
        let mean = sum / count as f64;
        assert!((mean - EVENT_MAGNITUDE_MEAN).abs() < 0.1, "mean {mean}");
    }

    #[test]
    fn gen_events_respects_support_pool() {
        let pool = [3usize, 7, 8, 20, 21];
        let x = gen_events_on_support(40, &pool, 3, 0.0, 5).unwrap();
        for (i, &v) in x.values().iter().enumerate() {
            if v != 0.0 {
                assert!(pool.contains(&i));
            }
        }
        assert_eq!(x.values().iter().filter(|&&v| v != 0.0).count(), 3);
    }

    #[test]
    fn gen_events_rejects_overfull_and_bad_pools() {
        assert!(gen_events(10, 11, 0.0, 0).is_err());
        assert!(gen_events_on_support(10, &[1, 2], 3, 0.0, 0).is_err());
        assert!(gen_events_on_support(10, &[1, 10], 1, 0.0, 0).is_err());
        assert!(gen_events_on_support(10, &[1, 1], 1, 0.0, 0).is_err());
    }

    #[test]
    fn gen_baseline_diff_variance_is_one() {
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        let mut count = 0usize;
        for seed in 0..2000 {
            let db = gen_baseline_diff(20, 5, 0.0, seed).unwrap();
            for &v in db.values() {
                if v != 0.0 {
                    sum += v;
                    sumsq += v * v;
                    count += 1;
                }
            }
        }
        assert_eq!(count, 10_000);
        let mean = sum / count as f64;
        let var = sumsq / count as f64 - mean * mean;
        assert!(mean.abs() < 0.05, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    #[test]
    fn perturbation_has_exact_l1_mass() {
        // With no significant entries the vector is exactly the rescaled
        // dense perturbation.
        let x = gen_events(64, 0, 0.25, 9).unwrap();
        let mass: f64 = x.values().iter().map(|v| v.abs()).sum();
        assert!((mass - 0.25).abs() <= 1e-12 * 0.25);
    }

    #[test]
    fn compose_observation_dimensions_match_model() {
        let inst = compose_observation(&canonical_cfg(0)).unwrap();
        assert_eq!(inst.x_true.len(), 240);
        assert_eq!(inst.db_true.len(), 160 + 240 - 2);
        assert_eq!(inst.dy.len(), 398);
    }

    #[test]
    fn compose_observation_noise_norm_is_exact() {
        let inst = compose_observation(&canonical_cfg(7)).unwrap();
        let norm = inst.noise.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((norm - 0.01).abs() <= 1e-12 * 0.01);
    }

    #[test]
    fn compose_observation_is_the_stated_sum() {
        let cfg = canonical_cfg(3);
        let inst = compose_observation(&cfg).unwrap();
        // Rebuild D T_h x term by term and compare exactly.
        let full = crate::operators::convolve(&cfg.h, inst.x_true.values()).unwrap();
        let dtx = crate::operators::difference_apply(full.samples()).unwrap();
        assert_eq!(inst.dy.len(), dtx.len());
        for (i, &dtxi) in dtx.iter().enumerate() {
            let want = dtxi + cfg.baseline_scale * inst.db_true.values()[i] + inst.noise[i];
            assert_eq!(inst.dy[i], want);
        }
    }

    #[test]
    fn compose_observation_alpha_zero_drops_baseline() {
        let mut cfg = canonical_cfg(4);
        cfg.baseline_scale = 0.0;
        cfg.noise_norm = 0.0;
        cfg.event_deviation = 0.0;
        let inst = compose_observation(&cfg).unwrap();
        let full = crate::operators::convolve(&cfg.h, inst.x_true.values()).unwrap();
        let dtx = crate::operators::difference_apply(full.samples()).unwrap();
        assert_eq!(inst.dy, dtx);
    }

    #[test]
    fn compose_raw_reconstructs_differenced_model() {
        let mut cfg = canonical_cfg(5);
        cfg.h = small_h();
        cfg.driver_len = 60;
        let inst = compose_raw(&cfg, &RawOptions::default()).unwrap();
        // Differencing y must reproduce D T_h x + alpha Db + Dn.
        let dy = crate::operators::difference_apply(inst.y.samples()).unwrap();
        let full = crate::operators::convolve(&cfg.h, inst.x_true.values()).unwrap();
        let dtx = crate::operators::difference_apply(full.samples()).unwrap();
        let dn = crate::operators::difference_apply(&inst.noise).unwrap();
        for i in 0..dy.len() {
            let want = dtx[i] + cfg.baseline_scale * inst.db_true.values()[i] + dn[i];
            assert!((dy[i] - want).abs() <= 1e-9, "row {i}");
        }
        // Raw noise carries half the differenced budget.
        let nn = inst.noise.iter().map(|v| v * v).sum::<f64>().sqrt();
        assert!((nn - cfg.noise_norm / 2.0).abs() <= 1e-12 * cfg.noise_norm);
    }

    #[test]
    fn integrate_baseline_inverts_differences() {
        let db = [0.5, -1.0, 0.0, 2.0];
        let b = integrate_baseline(&db, 10.0);
        assert_eq!(b.len(), 5);
        let back = crate::operators::difference_apply(&b).unwrap();
        for (a, w) in back.iter().zip(&db) {
            assert!((a - w).abs() <= 1e-12);
        }
        assert_eq!(b[0], 10.0);
    }

    #[test]
    fn keep_largest_recovers_significant_support() {
        let x = gen_events(80, 6, 0.0, 21).unwrap();
        let kept = keep_largest(x.values(), 6);
        assert_eq!(kept, x.values());
    }

    #[test]
    fn relative_error_known_cases() {
        assert_eq!(relative_error(&[1.0, 0.0], &[1.0, 0.0]).unwrap(), 0.0);
        assert_eq!(relative_error(&[3.0, 4.0], &[0.0, 0.0]).unwrap(), 1.0);
        let e = relative_error(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((e - 1.0).abs() <= 1e-15);
        assert!(matches!(
            relative_error(&[0.0, 0.0], &[1.0, 0.0]),
            Err(Error::ZeroTruth)
        ));
        assert!(relative_error(&[1.0], &[1.0, 2.0]).is_err());
    }
}
