//! Random natural frequencies and probabilistic experiments: Monte Carlo
//! coherence probabilities, the erf-product approximation q̃_c, the
//! transition-point scaling law, and statistical checks of the limit
//! theorems.
//!
//! Coherence of a random instance is decided by the analytic interval
//! condition on the mode inputs a_j = W_jᵀω (locked iff
//! −εM_j ≤ a_j ≤ −εm_j), which is exact and avoids ODE integration.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::Array1;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use libm::erf;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::basis::{build_fourier_basis, random_complement_basis};
use crate::dynamics::{classify, CoherenceTag};
use crate::error::{CoreError, Result};
use crate::interaction::PeriodicFunction;
use crate::modes;
use crate::rng::stream_rng;
use crate::stats;

/// An i.i.d. natural-frequency distribution with mean ω₀ and variance σ².
#[derive(Clone)]
pub enum FrequencyDistribution {
    Gaussian { mean: f64, sd: f64 },
    /// uniform on [mean − sd·√3, mean + sd·√3]
    Uniform { mean: f64, sd: f64 },
    /// two-point: mean ± sd with equal probability
    TwoPoint { mean: f64, sd: f64 },
    /// quantile transform of U(0, 1); `mean`/`sd` are declared moments
    Quantile {
        mean: f64,
        sd: f64,
        quantile: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for FrequencyDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Gaussian { mean, sd } => write!(f, "Gaussian(mean={mean}, sd={sd})"),
            Self::Uniform { mean, sd } => write!(f, "Uniform(mean={mean}, sd={sd})"),
            Self::TwoPoint { mean, sd } => write!(f, "TwoPoint(mean={mean}, sd={sd})"),
            Self::Quantile { mean, sd, .. } => write!(f, "Quantile(mean={mean}, sd={sd})"),
        }
    }
}

impl FrequencyDistribution {
    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        if sd <= 0.0 {
            return Err(CoreError::InvalidParameter(format!(
                "standard deviation must be positive, got {sd}"
            )));
        }
        Ok(Self::Gaussian { mean, sd })
    }

    pub fn uniform(mean: f64, sd: f64) -> Result<Self> {
        if sd <= 0.0 {
            return Err(CoreError::InvalidParameter(format!(
                "standard deviation must be positive, got {sd}"
            )));
        }
        Ok(Self::Uniform { mean, sd })
    }

    pub fn two_point(mean: f64, sd: f64) -> Result<Self> {
        if sd <= 0.0 {
            return Err(CoreError::InvalidParameter(format!(
                "standard deviation must be positive, got {sd}"
            )));
        }
        Ok(Self::TwoPoint { mean, sd })
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Gaussian { mean, .. }
            | Self::Uniform { mean, .. }
            | Self::TwoPoint { mean, .. }
            | Self::Quantile { mean, .. } => *mean,
        }
    }

    pub fn sd(&self) -> f64 {
        match self {
            Self::Gaussian { sd, .. }
            | Self::Uniform { sd, .. }
            | Self::TwoPoint { sd, .. }
            | Self::Quantile { sd, .. } => *sd,
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Gaussian { mean, sd } => {
                mean + sd * rng.sample::<f64, _>(rand_distr::StandardNormal)
            }
            Self::Uniform { mean, sd } => {
                let half = sd * 3f64.sqrt();
                rng.gen_range(mean - half..mean + half)
            }
            Self::TwoPoint { mean, sd } => {
                if rng.gen::<bool>() {
                    mean + sd
                } else {
                    mean - sd
                }
            }
            Self::Quantile { quantile, .. } => quantile(rng.gen::<f64>()),
        }
    }

    pub fn sample_vec<R: Rng>(&self, rng: &mut R, n: usize) -> Array1<f64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

/// Draw a frequency vector; deterministic given (dist, n, seed).
pub fn sample_frequencies(
    dist: &FrequencyDistribution,
    n: usize,
    seed: u64,
) -> Result<Array1<f64>> {
    if n == 0 {
        return Err(CoreError::InvalidParameter("need n >= 1".into()));
    }
    let mut rng = stream_rng(seed, 0);
    Ok(dist.sample_vec(&mut rng, n))
}

/// Mode functions for a random system: either one shared function or one
/// per mode.
#[derive(Debug, Clone)]
pub enum ModeSpec {
    Shared(PeriodicFunction),
    PerMode(Vec<PeriodicFunction>),
}

impl ModeSpec {
    pub fn sine() -> Self {
        Self::Shared(PeriodicFunction::sine())
    }

    pub fn materialize(&self, k: usize) -> Result<Vec<PeriodicFunction>> {
        match self {
            Self::Shared(p) => Ok(vec![p.clone(); k]),
            Self::PerMode(ps) => {
                if ps.len() != k {
                    return Err(CoreError::DimensionMismatch {
                        expected: k,
                        got: ps.len(),
                    });
                }
                Ok(ps.clone())
            }
        }
    }

    /// (m_j, M_j) bounds for each of the k modes.
    fn bounds(&self, k: usize) -> Result<Vec<(f64, f64)>> {
        Ok(self
            .materialize(k)?
            .iter()
            .map(|p| (p.min(), p.max()))
            .collect())
    }
}

/// Monte Carlo estimate of the probability that a random-frequency system
/// is coherent.
#[derive(Debug, Clone, Serialize)]
pub struct CoherenceProbabilityEstimate {
    pub q_c_hat: f64,
    pub trials: usize,
    /// 95% normal-approximation half-width
    pub ci_halfwidth: f64,
    pub epsilon: f64,
    pub n: usize,
}

impl CoherenceProbabilityEstimate {
    /// Half-width at an arbitrary z.
    pub fn ci_at(&self, z: f64) -> f64 {
        stats::binomial_ci_halfwidth(self.q_c_hat, self.trials, z)
    }
}

/// For each trial sample ω, form a = Wᵀω, and count the trial coherent
/// iff every a_j lies in [−εM_j, −εm_j].
pub fn estimate_coherence_probability(
    n: usize,
    epsilon: f64,
    dist: &FrequencyDistribution,
    modes: &ModeSpec,
    trials: usize,
    seed: u64,
) -> Result<CoherenceProbabilityEstimate> {
    if trials == 0 {
        return Err(CoreError::InvalidParameter("need trials >= 1".into()));
    }
    let w = build_fourier_basis(n)?;
    let bounds = modes.bounds(n - 1)?;
    let wm = w.matrix();
    let coherent: usize = (0..trials as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k);
            let omega = dist.sample_vec(&mut rng, n);
            let a = wm.t().dot(&omega);
            let ok = a
                .iter()
                .zip(&bounds)
                .all(|(&aj, &(m, mm))| aj >= -epsilon * mm && aj <= -epsilon * m);
            usize::from(ok)
        })
        .sum();
    let q_c_hat = coherent as f64 / trials as f64;
    Ok(CoherenceProbabilityEstimate {
        q_c_hat,
        trials,
        ci_halfwidth: stats::binomial_ci_halfwidth(q_c_hat, trials, stats::Z_95),
        epsilon,
        n,
    })
}

/// The independence approximation q̃_c(ε; N) = erf(ε/(σ√2))^(N−1).
pub fn qc_tilde(epsilon: f64, sigma: f64, n: usize) -> f64 {
    erf(epsilon / (sigma * 2f64.sqrt())).powi(n as i32 - 1)
}

/// C₀ = 2/(√π + √(π+4)), from the error-function lower bound.
pub fn scaling_c0() -> f64 {
    2.0 / (PI.sqrt() + (PI + 4.0).sqrt())
}

/// C₁ = 2·ln C₀ − ln(1−q).
pub fn scaling_c1(q: f64) -> f64 {
    2.0 * scaling_c0().ln() - (1.0 - q).ln()
}

/// The implicitly defined transition point ε_{q,σ}(N) together with the
/// analytic envelope σ√(C₁ + 2·ln(N−1)).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TransitionPoint {
    pub epsilon: f64,
    pub bound: f64,
}

/// Root-find ε with q̃_c(ε; N) = q by bisection (q̃_c is monotone in ε,
/// so bisection is unconditionally convergent). Relative tolerance 1e-10.
pub fn transition_point(q: f64, sigma: f64, n: usize) -> Result<TransitionPoint> {
    if !(0.0 < q && q < 1.0) {
        return Err(CoreError::InvalidParameter(format!(
            "q must be in (0, 1), got {q}"
        )));
    }
    if sigma <= 0.0 || n < 2 {
        return Err(CoreError::InvalidParameter(format!(
            "need sigma > 0 and n >= 2, got sigma = {sigma}, n = {n}"
        )));
    }
    let mut lo = 0.0f64;
    let mut hi = sigma * (10.0 + 2.0 * (n as f64).ln().sqrt());
    debug_assert!(qc_tilde(hi, sigma, n) > q);
    while hi - lo > 1e-10 * hi.max(1e-300) {
        let mid = 0.5 * (lo + hi);
        if qc_tilde(mid, sigma, n) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let epsilon = 0.5 * (lo + hi);
    let bound = sigma * (scaling_c1(q) + 2.0 * ((n - 1) as f64).ln()).sqrt();
    Ok(TransitionPoint { epsilon, bound })
}

/// Outcome counts for the partial-coherence-implies-coherence check.
#[derive(Debug, Clone, Serialize)]
pub struct DichotomyReport {
    pub n: usize,
    pub epsilon: f64,
    pub trials: usize,
    pub coherent: usize,
    pub partially_coherent: usize,
    pub incoherent: usize,
    /// trials with some mode input within 1e-3·ε of a locking boundary
    pub marginal: usize,
    /// the quantity predicted to be zero: partial-but-not-coherent
    /// instances that are not marginal
    pub partial_not_coherent_nonmarginal: usize,
    /// whether the trigonometric basis satisfies mode injectivity at this n
    pub fourier_injective: bool,
    /// true when a seeded random complement basis was substituted because
    /// the trigonometric one violates the injectivity hypothesis
    pub used_random_basis: bool,
}

/// Classify analytic output frequencies over random draws of ω. Uses a
/// tight pair tolerance because the analytic route carries no simulation
/// noise.
///
/// The partial-coherence dichotomy requires a mode-injective basis: two
/// oscillators sharing every coefficient of the unlocked modes tie
/// exactly, with positive probability, whatever ω. The trigonometric
/// family violates injectivity at some sizes (n = 4, 8, ...), so when it
/// does, the check runs on a seeded random complement basis instead and
/// says so in the report.
pub fn verify_coherence_dichotomy(
    n: usize,
    epsilon: f64,
    dist: &FrequencyDistribution,
    modes: &ModeSpec,
    trials: usize,
    seed: u64,
    pair_tol: f64,
) -> Result<DichotomyReport> {
    let fourier = build_fourier_basis(n)?;
    let fourier_injective = fourier.mode_injective();
    let w = if fourier_injective {
        fourier
    } else {
        random_complement_basis(n, crate::rng::derive(seed, &[crate::rng::hash_label("basis")]))?
    };
    let mode_fns = modes.materialize(n - 1)?;
    let wm = w.matrix();
    let ones = w.uniform();

    #[derive(Default)]
    struct Counts {
        coherent: usize,
        partial: usize,
        incoherent: usize,
        marginal: usize,
        violations: usize,
    }

    let counts = (0..trials as u64)
        .into_par_iter()
        .try_fold(Counts::default, |mut acc, k| -> Result<Counts> {
            let mut rng = stream_rng(seed, k);
            let omega = dist.sample_vec(&mut rng, n);
            let a = wm.t().dot(&omega);
            let mut mu = Array1::zeros(n - 1);
            let mut marginal = false;
            for (j, (&aj, pj)) in a.iter().zip(&mode_fns).enumerate() {
                mu[j] = modes::mode_frequency(pj, aj, epsilon)?.mu;
                let lo = -epsilon * pj.max();
                let hi = -epsilon * pj.min();
                if (aj - lo).abs() < 1e-3 * epsilon || (aj - hi).abs() < 1e-3 * epsilon {
                    marginal = true;
                }
            }
            let v_rate = ones.dot(&omega);
            let omega_out = &(ones.clone() * v_rate) + &wm.dot(&mu);
            let class = classify(omega_out.as_slice().unwrap(), pair_tol);
            match class.tag {
                CoherenceTag::Coherent => acc.coherent += 1,
                CoherenceTag::PartiallyCoherent => {
                    acc.partial += 1;
                    if !marginal {
                        acc.violations += 1;
                    }
                }
                CoherenceTag::Incoherent => acc.incoherent += 1,
            }
            if marginal {
                acc.marginal += 1;
            }
            Ok(acc)
        })
        .try_reduce(Counts::default, |mut a, b| {
            a.coherent += b.coherent;
            a.partial += b.partial;
            a.incoherent += b.incoherent;
            a.marginal += b.marginal;
            a.violations += b.violations;
            Ok(a)
        })?;

    Ok(DichotomyReport {
        n,
        epsilon,
        trials,
        coherent: counts.coherent,
        partially_coherent: counts.partial,
        incoherent: counts.incoherent,
        marginal: counts.marginal,
        partial_not_coherent_nonmarginal: counts.violations,
        fourier_injective,
        used_random_basis: !fourier_injective,
    })
}

/// Preregistered KS acceptance threshold: the asymptotic 99% null
/// quantile plus an explicit finite-N allowance proportional to the
/// largest combination coefficient (the CLT guarantees convergence, not
/// a rate).
pub fn ks_threshold(samples: usize, max_coeff: f64) -> f64 {
    stats::ks_null_quantile(samples, 0.01) + 0.1 * max_coeff
}

/// Goodness-of-fit summary for one linear combination of frequencies
/// against its Gaussian limit.
#[derive(Debug, Clone, Serialize)]
pub struct CltReport {
    pub n: usize,
    pub samples: usize,
    pub ks_statistic: f64,
    pub threshold: f64,
    pub max_coeff: f64,
    pub pass: bool,
}

/// Column `column` (zero-based) of the Fourier basis, computed directly.
fn fourier_column(n: usize, column: usize) -> Result<Array1<f64>> {
    if column + 1 >= n {
        return Err(CoreError::InvalidParameter(format!(
            "column {column} out of range for n = {n}"
        )));
    }
    let scale = 1.0 / (n as f64).sqrt();
    Ok((1..=n)
        .map(|j| {
            let x = 2.0 * PI * (j as f64) * ((column + 1) as f64) / n as f64;
            scale * (x.sin() + x.cos())
        })
        .collect())
}

fn ks_against_gaussian(
    coeffs: &Array1<f64>,
    n: usize,
    dist: &FrequencyDistribution,
    samples: usize,
    seed: u64,
) -> CltReport {
    let sigma = dist.sd();
    let norm = coeffs.dot(coeffs).sqrt();
    let target = Normal::new(0.0, sigma * norm).expect("valid normal");
    let values: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream_rng(seed, k);
            let omega = dist.sample_vec(&mut rng, n);
            coeffs.dot(&omega) - dist.mean() * coeffs.sum()
        })
        .collect();
    let ks = stats::ks_statistic(&values, |x| target.cdf(x));
    let max_coeff = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let threshold = ks_threshold(samples, max_coeff);
    CltReport {
        n,
        samples,
        ks_statistic: ks,
        threshold,
        max_coeff,
        pass: ks < threshold,
    }
}

/// Draw samples of a_j^{(N)} = W_jᵀω and test them against the
/// Gaussian(0, σ²) limit with the KS statistic.
pub fn clt_check(
    n: usize,
    column: usize,
    dist: &FrequencyDistribution,
    samples: usize,
    seed: u64,
) -> Result<CltReport> {
    let col = fourier_column(n, column)?;
    Ok(ks_against_gaussian(&col, n, dist, samples, seed))
}

/// Cramér–Wold style joint check: t₁a_{c₁} + t₂a_{c₂} must match
/// Gaussian(0, σ²(t₁² + t₂²)) in the limit, which is how independence of
/// the limiting mode inputs manifests.
pub fn independence_check(
    n: usize,
    columns: (usize, usize),
    weights: (f64, f64),
    dist: &FrequencyDistribution,
    samples: usize,
    seed: u64,
) -> Result<CltReport> {
    let c1 = fourier_column(n, columns.0)?;
    let c2 = fourier_column(n, columns.1)?;
    let combined = &(c1 * weights.0) + &(c2 * weights.1);
    Ok(ks_against_gaussian(&combined, n, dist, samples, seed))
}
