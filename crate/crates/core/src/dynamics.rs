//! Direct numerical integration of the phase system and the decoupled
//! mode equations, empirical output frequencies, and coherence
//! classification.

use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::interaction::DiagonalizableSystem;
use crate::modes;
use crate::ode::{self, StepControl};

/// A sampled solution. States are unwrapped (lifted to the real line,
/// never reduced mod 2π).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }

    /// Write as CSV with header t,theta1,...,thetaN.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        let dim = self.dim();
        let header: Vec<String> = std::iter::once("t".to_string())
            .chain((1..=dim).map(|i| format!("theta{i}")))
            .collect();
        writeln!(out, "{}", header.join(","))?;
        for (t, s) in self.times.iter().zip(&self.states) {
            let mut line = format!("{t:.10e}");
            for x in s {
                line.push(',');
                line.push_str(&format!("{x:.10e}"));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }
}

/// Coherence trichotomy over output frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CoherenceTag {
    Coherent,
    PartiallyCoherent,
    Incoherent,
}

/// Classification of a frequency vector: which oscillator pairs are
/// locked, and the resulting trichotomy tag.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoherenceClass {
    pub tag: CoherenceTag,
    pub locked_pairs: Vec<(usize, usize)>,
}

/// Pair (i, j) is locked iff |Ω_i − Ω_j| ≤ pair_tol·(1 + max|Ω|).
pub fn classify(omega_out: &[f64], pair_tol: f64) -> CoherenceClass {
    let n = omega_out.len();
    let max_abs = omega_out.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let tol = pair_tol * (1.0 + max_abs);
    let mut locked_pairs = Vec::new();
    let mut total_pairs = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            total_pairs += 1;
            if (omega_out[i] - omega_out[j]).abs() <= tol {
                locked_pairs.push((i, j));
            }
        }
    }
    let tag = if locked_pairs.len() == total_pairs {
        CoherenceTag::Coherent
    } else if locked_pairs.is_empty() {
        CoherenceTag::Incoherent
    } else {
        CoherenceTag::PartiallyCoherent
    };
    CoherenceClass { tag, locked_pairs }
}

/// Per-component regression slope with its standard error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrequencyEstimate {
    pub omega: Vec<f64>,
    pub stderr: Vec<f64>,
}

/// Output frequencies as least-squares slopes of θ_i(t) over the
/// post-burn-in window. Regression removes the O(1/t) intercept bias of
/// the naive θ(t_end)/t_end estimate.
pub fn estimate_output_frequencies(
    traj: &Trajectory,
    burn_in_fraction: f64,
) -> Result<FrequencyEstimate> {
    if !(0.0..1.0).contains(&burn_in_fraction) {
        return Err(CoreError::InvalidParameter(format!(
            "burn_in_fraction must be in [0, 1), got {burn_in_fraction}"
        )));
    }
    let n_total = traj.times.len();
    if n_total < 4 {
        return Err(CoreError::WindowTooShort(format!(
            "{n_total} samples in trajectory"
        )));
    }
    let t0 = traj.times[0];
    let t_end = *traj.times.last().unwrap();
    let t_start = t0 + burn_in_fraction * (t_end - t0);
    let start_idx = traj.times.partition_point(|&t| t < t_start);
    let m = n_total - start_idx;
    if m < 4 {
        return Err(CoreError::WindowTooShort(format!(
            "{m} samples after burn-in"
        )));
    }

    let ts = &traj.times[start_idx..];
    let t_mean: f64 = ts.iter().sum::<f64>() / m as f64;
    let sxx: f64 = ts.iter().map(|t| (t - t_mean) * (t - t_mean)).sum();
    if sxx == 0.0 {
        return Err(CoreError::WindowTooShort("degenerate time window".into()));
    }

    let dim = traj.dim();
    let mut omega = vec![0.0; dim];
    let mut stderr = vec![0.0; dim];
    for c in 0..dim {
        let ys: Vec<f64> = traj.states[start_idx..].iter().map(|s| s[c]).collect();
        let y_mean = ys.iter().sum::<f64>() / m as f64;
        let sxy: f64 = ts
            .iter()
            .zip(&ys)
            .map(|(t, y)| (t - t_mean) * (y - y_mean))
            .sum();
        let slope = sxy / sxx;
        let intercept = y_mean - slope * t_mean;
        let ss_resid: f64 = ts
            .iter()
            .zip(&ys)
            .map(|(t, y)| {
                let r = y - (intercept + slope * t);
                r * r
            })
            .sum();
        omega[c] = slope;
        stderr[c] = (ss_resid / (m as f64 - 2.0) / sxx).sqrt();
    }
    Ok(FrequencyEstimate { omega, stderr })
}

/// Integrate the full phase system, sampling at `points` uniform times.
pub fn integrate_system(
    sys: &DiagonalizableSystem,
    theta0: &Array1<f64>,
    t_end: f64,
    points: usize,
    ctrl: StepControl,
) -> Result<Trajectory> {
    if theta0.len() != sys.n() {
        return Err(CoreError::DimensionMismatch {
            expected: sys.n(),
            got: theta0.len(),
        });
    }
    let w = sys.basis().matrix().clone();
    let omega = sys.omega().clone();
    let eps = sys.epsilon();
    let modes = sys.modes().to_vec();
    let n = sys.n();
    let k = sys.basis().k();
    let mut u = vec![0.0; k];
    let field = move |_t: f64, y: &[f64], dy: &mut [f64]| {
        // dy = ω + ε·W·p(Wᵀy), unrolled to avoid allocation per call
        for (kk, uk) in u.iter_mut().enumerate() {
            let mut acc = 0.0;
            for l in 0..n {
                acc += w[[l, kk]] * y[l];
            }
            *uk = modes[kk].eval(acc);
        }
        for i in 0..n {
            let mut acc = 0.0;
            for (kk, uk) in u.iter().enumerate() {
                acc += w[[i, kk]] * uk;
            }
            dy[i] = omega[i] + eps * acc;
        }
    };
    let grid = ode::uniform_grid(0.0, t_end, points);
    let theta0: Vec<f64> = theta0.to_vec();
    Ok(ode::integrate_dense(field, 0.0, &theta0, &grid, ctrl)?)
}

/// Result of checking the change of variables against direct integration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeparationReport {
    /// max over sampled t of |θ_full(t) − (v(t)·1⃗ + W·u(t))|_∞
    pub max_discrepancy: f64,
    pub samples: usize,
    pub t_end: f64,
}

/// Integrate (a) the full θ system and (b) the N−1 decoupled scalar mode
/// equations u̇_j = a_j + εp_j(u_j) with v(t) = v(0) + (1⃗ᵀω)t, and
/// report the sup-norm discrepancy between the two routes.
pub fn verify_separation(
    sys: &DiagonalizableSystem,
    theta0: &Array1<f64>,
    t_end: f64,
    points: usize,
    ctrl: StepControl,
) -> Result<SeparationReport> {
    let full = integrate_system(sys, theta0, t_end, points, ctrl)?;

    let d = crate::basis::decompose(theta0, sys.basis())?;
    let a = sys.mode_inputs();
    let eps = sys.epsilon();
    let grid = ode::uniform_grid(0.0, t_end, points);

    // each mode is an independent scalar equation
    let mut mode_paths: Vec<Vec<f64>> = Vec::with_capacity(sys.basis().k());
    for (j, pj) in sys.modes().iter().enumerate() {
        let aj = a[j];
        let p = pj.clone();
        let traj = ode::integrate_dense(
            move |_t, y: &[f64], dy: &mut [f64]| dy[0] = aj + eps * p.eval(y[0]),
            0.0,
            &[d.u[j]],
            &grid,
            ctrl,
        )?;
        mode_paths.push(traj.states.iter().map(|s| s[0]).collect());
    }

    let ones = sys.basis().uniform();
    let v_rate = ones.dot(sys.omega());
    let w = sys.basis().matrix();
    let mut max_disc = 0.0f64;
    for (s_idx, t) in grid.iter().enumerate() {
        let v = d.v + v_rate * t;
        for i in 0..sys.n() {
            let mut composed = ones[i] * v;
            for (j, path) in mode_paths.iter().enumerate() {
                composed += w[[i, j]] * path[s_idx];
            }
            max_disc = max_disc.max((full.states[s_idx][i] - composed).abs());
        }
    }
    Ok(SeparationReport {
        max_discrepancy: max_disc,
        samples: points,
        t_end,
    })
}

/// Modes whose input a_j sits within 1e-3·ε of a locking boundary;
/// finite-time estimation cannot resolve their slow drift.
pub fn marginal_modes(sys: &DiagonalizableSystem) -> Vec<bool> {
    let a = sys.mode_inputs();
    let eps = sys.epsilon();
    sys.modes()
        .iter()
        .zip(a.iter())
        .map(|(p, &aj)| {
            let lo = -eps * p.max();
            let hi = -eps * p.min();
            (aj - lo).abs() < 1e-3 * eps || (aj - hi).abs() < 1e-3 * eps
        })
        .collect()
}

/// One instance run end-to-end: analytic and empirical frequencies,
/// classification, and marginal flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationRecord {
    pub schema_version: u32,
    #[serde(rename = "N")]
    pub n: usize,
    pub epsilon: f64,
    pub omega: Vec<f64>,
    #[serde(rename = "Omega_analytic")]
    pub omega_analytic: Vec<f64>,
    #[serde(rename = "Omega_empirical")]
    pub omega_empirical: Vec<f64>,
    pub empirical_stderr: Vec<f64>,
    pub class: CoherenceClass,
    pub marginal_flags: Vec<bool>,
}

/// Simulate one system and compare against the analytic output
/// frequencies Ω = (1⃗ᵀω)1⃗ + Wμ.
pub fn classify_instance(
    sys: &DiagonalizableSystem,
    theta0: &Array1<f64>,
    t_end: f64,
    points: usize,
    pair_tol: f64,
    ctrl: StepControl,
) -> Result<(ClassificationRecord, Trajectory)> {
    let (_, omega_analytic) = modes::output_frequency_vector(sys)?;
    let traj = integrate_system(sys, theta0, t_end, points, ctrl)?;
    let est = estimate_output_frequencies(&traj, 0.2)?;
    let class = classify(&est.omega, pair_tol);
    let record = ClassificationRecord {
        schema_version: 1,
        n: sys.n(),
        epsilon: sys.epsilon(),
        omega: sys.omega().to_vec(),
        omega_analytic: omega_analytic.to_vec(),
        omega_empirical: est.omega.clone(),
        empirical_stderr: est.stderr.clone(),
        class,
        marginal_flags: marginal_modes(sys),
    };
    Ok((record, traj))
}
