//! Scalar mode analysis: the period integral T(a, ε), the input–output
//! frequency map μ_p(a, ε), locking intervals, and the push-forward
//! density of μ under Gaussian input.

use ndarray::Array1;
use libm::erf;

use crate::error::{CoreError, Result};
use crate::interaction::{DiagonalizableSystem, PeriodicFunction};
use crate::quad;

const ABS_TOL: f64 = 1e-10;
const REL_TOL: f64 = 1e-9;
const MAX_INTERVALS: usize = 4000;

/// Output frequency of one scalar mode u̇ = a + εp(u).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeFrequencyResult {
    /// asymptotic winding rate lim u(t)/t
    pub mu: f64,
    /// true iff a lies in the locking interval [−εM, −εm]
    pub locked: bool,
    /// |T(a, ε)|, the time to advance by one period; present iff not locked
    pub period_t: Option<f64>,
}

/// Boundary slack: roundoff at the locking boundary must not produce
/// spurious huge periods.
fn boundary_eta(a: f64) -> f64 {
    1e-12 * a.abs().max(1.0)
}

fn is_locked(p: &PeriodicFunction, a: f64, epsilon: f64) -> bool {
    let lo = -epsilon * p.max() - boundary_eta(a);
    let hi = -epsilon * p.min() + boundary_eta(a);
    a >= lo && a <= hi
}

/// T(a, ε) = ∫₀ᴸ du/(a + εp(u)).
///
/// Requires a outside the locking interval [−εM, −εm]; inside it the
/// integrand has a zero and T is undefined. The result is negative on
/// the a < −εM branch, matching μ = L/T. Relative accuracy is 1e-9 away
/// from the boundary and degrades as the integrand develops a
/// near-singularity at |a + εm| → 0 or |a + εM| → 0.
pub fn period_integral(p: &PeriodicFunction, a: f64, epsilon: f64) -> Result<f64> {
    if epsilon < 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "epsilon must be nonnegative, got {epsilon}"
        )));
    }
    if is_locked(p, a, epsilon) {
        return Err(CoreError::LockedRegime {
            a,
            lo: -epsilon * p.max(),
            hi: -epsilon * p.min(),
        });
    }
    if a > -epsilon * p.min() {
        ascending_period(p, a, epsilon)
    } else {
        // descending branch: reduce by u → −u, which maps the equation
        // onto the ascending branch of p̂(w) = −p(−w) with input −a
        let reflected = p.negated_reflection();
        Ok(-ascending_period(&reflected, -a, epsilon)?)
    }
}

/// The branch with a + εp(u) > 0 everywhere.
fn ascending_period(p: &PeriodicFunction, a: f64, epsilon: f64) -> Result<f64> {
    let len = p.period();
    let gap = a + epsilon * p.min();
    debug_assert!(gap > 0.0);
    if gap < 0.01 * epsilon {
        // Near the locking boundary the integrand peaks sharply at the
        // minimizer of the denominator. Integrate over [u*, u* + L] and
        // substitute u = u* ± s² on each half so nodes cluster at u*.
        let u_star = p.argmin();
        let half = (0.5 * len).sqrt();
        let left = quad::integrate(
            |s| 2.0 * s / (a + epsilon * p.eval(u_star + s * s)),
            0.0,
            half,
            ABS_TOL,
            REL_TOL,
            MAX_INTERVALS,
        )?;
        let right = quad::integrate(
            |s| 2.0 * s / (a + epsilon * p.eval(u_star + len - s * s)),
            0.0,
            half,
            ABS_TOL,
            REL_TOL,
            MAX_INTERVALS,
        )?;
        Ok(left + right)
    } else {
        quad::integrate(
            |u| 1.0 / (a + epsilon * p.eval(u)),
            0.0,
            len,
            ABS_TOL,
            REL_TOL,
            MAX_INTERVALS,
        )
    }
}

/// μ_p(a, ε): zero on the locking interval, L/T(a, ε) outside it.
/// ε = 0 degenerates to μ = a.
pub fn mode_frequency(p: &PeriodicFunction, a: f64, epsilon: f64) -> Result<ModeFrequencyResult> {
    if epsilon == 0.0 {
        return Ok(ModeFrequencyResult {
            mu: a,
            locked: a == 0.0,
            period_t: (a != 0.0).then(|| p.period() / a.abs()),
        });
    }
    if is_locked(p, a, epsilon) {
        return Ok(ModeFrequencyResult {
            mu: 0.0,
            locked: true,
            period_t: None,
        });
    }
    let t = period_integral(p, a, epsilon)?;
    Ok(ModeFrequencyResult {
        mu: p.period() / t,
        locked: false,
        period_t: Some(t.abs()),
    })
}

/// The sin closed form: ±√(a² − ε²) outside |a| ≤ ε, zero inside.
/// Both boundary points return 0.
pub fn mode_frequency_sin_closed_form(a: f64, epsilon: f64) -> f64 {
    if a > epsilon {
        (a * a - epsilon * epsilon).sqrt()
    } else if a < -epsilon {
        -(a * a - epsilon * epsilon).sqrt()
    } else {
        0.0
    }
}

/// Analytic output frequencies of a full system: per-mode μ_j from
/// a_j = W_jᵀω, and Ω = (1⃗ᵀω)·1⃗ + W·μ. Independent of initial
/// conditions.
pub fn output_frequency_vector(
    sys: &DiagonalizableSystem,
) -> Result<(Array1<f64>, Array1<f64>)> {
    let a = sys.mode_inputs();
    let mut mu = Array1::zeros(a.len());
    for (j, (&aj, pj)) in a.iter().zip(sys.modes()).enumerate() {
        mu[j] = mode_frequency(pj, aj, sys.epsilon())?.mu;
    }
    let ones = sys.basis().uniform();
    let v_rate = ones.dot(sys.omega());
    let omega_out = &(ones * v_rate) + &sys.basis().matrix().dot(&mu);
    Ok((mu, omega_out))
}

/// Push-forward of a standard Gaussian input through μ_sin(·, ε): a point
/// mass at zero of weight erf(ε/√2) plus a symmetric continuous part.
#[derive(Debug, Clone, Copy)]
pub struct FrequencyDensity {
    pub epsilon: f64,
    /// probability mass at μ = 0
    pub atom_weight: f64,
}

impl FrequencyDensity {
    /// Density of the continuous part at μ ≠ 0:
    /// |μ|·e^{−(μ²+ε²)/2} / √(2π(μ²+ε²)).
    pub fn continuous(&self, mu: f64) -> f64 {
        let e2 = self.epsilon * self.epsilon;
        let m2 = mu * mu;
        mu.abs() * (-(m2 + e2) / 2.0).exp() / (2.0 * std::f64::consts::PI * (m2 + e2)).sqrt()
    }

    /// atom + ∫ continuous dμ via adaptive quadrature; should be 1.
    pub fn total_mass(&self) -> Result<f64> {
        let cutoff = self.epsilon + 12.0;
        let cont = quad::integrate(
            |mu| self.continuous(mu),
            0.0,
            cutoff,
            1e-12,
            1e-10,
            MAX_INTERVALS,
        )?;
        Ok(self.atom_weight + 2.0 * cont)
    }

    /// CDF of |μ| conditional on μ ≠ 0. Since μ = √(a² − ε²) for |a| > ε,
    /// P(|μ| ≤ x | unlocked) = (erf(√(x²+ε²)/√2) − erf(ε/√2)) / (1 − erf(ε/√2)).
    pub fn conditional_abs_cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let e = self.epsilon;
        let root2 = std::f64::consts::SQRT_2;
        let top = erf(((x * x + e * e).sqrt()) / root2) - erf(e / root2);
        top / (1.0 - erf(e / root2))
    }
}

/// Density g(μ; ε) for standard Gaussian input and p = sin.
pub fn gaussian_output_density(epsilon: f64) -> Result<FrequencyDensity> {
    if epsilon <= 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    Ok(FrequencyDensity {
        epsilon,
        atom_weight: erf(epsilon / std::f64::consts::SQRT_2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_fourier_basis;
    use std::f64::consts::PI;

    fn sine() -> PeriodicFunction {
        PeriodicFunction::sine()
    }

    #[test]
    fn period_integral_sin_closed_form() {
        // ∫₀^{2π} du/(a + sin u) = 2π/√(a² − 1)
        let t = period_integral(&sine(), 2.0, 1.0).unwrap();
        let exact = 2.0 * PI / 3f64.sqrt();
        assert!((t - exact).abs() < 1e-9, "t = {t}, exact = {exact}");
        assert!((exact - 3.6275987).abs() < 1e-6);
    }

    #[test]
    fn period_integral_constant_limit() {
        // ε → 0 gives T → L/a
        let t = period_integral(&sine(), 2.5, 1e-8).unwrap();
        assert!((t - 2.0 * PI / 2.5).abs() < 1e-7);
        let t0 = period_integral(&sine(), 2.5, 0.0).unwrap();
        assert!((t0 - 2.0 * PI / 2.5).abs() < 1e-12);
    }

    #[test]
    fn period_integral_near_singular_stress() {
        let a = 1.01;
        let t = period_integral(&sine(), a, 1.0).unwrap();
        let exact = 2.0 * PI / (a * a - 1.0).sqrt();
        assert!((t - exact).abs() / exact < 1e-6, "t = {t}, exact = {exact}");
    }

    #[test]
    fn period_integral_locked_regime_errors() {
        assert!(matches!(
            period_integral(&sine(), 0.5, 1.0),
            Err(CoreError::LockedRegime { .. })
        ));
        assert!(matches!(
            period_integral(&sine(), -1.0, 1.0),
            Err(CoreError::LockedRegime { .. })
        ));
    }

    #[test]
    fn mode_frequency_reference_values() {
        // locked: −1 ≤ 0.5 ≤ 1
        let r = mode_frequency(&sine(), 0.5, 1.0).unwrap();
        assert!(r.locked);
        assert_eq!(r.mu, 0.0);
        assert!(r.period_t.is_none());

        // running: μ = √(4 − 1) = √3
        let r = mode_frequency(&sine(), 2.0, 1.0).unwrap();
        assert!(!r.locked);
        assert!((r.mu - 3f64.sqrt()).abs() < 1e-9);
        assert!((r.mu - 1.7320508).abs() < 1e-6);

        // mirrored branch
        let r = mode_frequency(&sine(), -2.0, 1.0).unwrap();
        assert!((r.mu + 3f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn closed_form_piecewise_values() {
        assert!((mode_frequency_sin_closed_form(2.0, 1.0) - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(mode_frequency_sin_closed_form(1.0, 1.0), 0.0);
        assert_eq!(mode_frequency_sin_closed_form(-1.0, 1.0), 0.0);
        assert!((mode_frequency_sin_closed_form(-3.0, 1.0) + 8f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn odd_symmetry_via_reflection() {
        // the descending branch reuses the ascending-branch quadrature on the
        // reflected mode function, so the two signs agree to roundoff
        let p = sine();
        for a in [1.3, 2.0, 5.5, 1.001] {
            let pos = mode_frequency(&p, a, 1.0).unwrap().mu;
            let neg = mode_frequency(&p, -a, 1.0).unwrap().mu;
            assert!((pos + neg).abs() <= 1e-13 * pos.abs(), "a = {a}: {pos} vs {neg}");
        }
    }

    #[test]
    fn monotone_nondecreasing_in_a() {
        let p = sine();
        let eps = 0.7;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=200 {
            let a = -4.0 + i as f64 * 0.04;
            let mu = mode_frequency(&p, a, eps).unwrap().mu;
            assert!(mu >= prev - 1e-12, "a = {a}: {mu} < {prev}");
            prev = mu;
        }
    }

    #[test]
    fn oracle_equivalence_spot_grid() {
        // coarse version of the acceptance grid
        let p = sine();
        for eps in [0.25, 1.0, 2.0] {
            for i in 0..=100 {
                let a = -5.0 + i as f64 * 0.1;
                let mu = mode_frequency(&p, a, eps).unwrap().mu;
                let cf = mode_frequency_sin_closed_form(a, eps);
                assert!((mu - cf).abs() < 1e-7, "a = {a}, eps = {eps}: {mu} vs {cf}");
            }
        }
    }

    #[test]
    fn nonsymmetric_mode_locking_interval() {
        // p with m = −0.5, M = 1.5: locking interval is [−1.5ε, 0.5ε]
        let p = PeriodicFunction::from_fn("shifted", 2.0 * PI, |x| x.sin() + 0.5).unwrap();
        let eps = 1.0;
        assert!(mode_frequency(&p, 0.3, eps).unwrap().locked);
        assert!(mode_frequency(&p, -1.2, eps).unwrap().locked);
        assert!(!mode_frequency(&p, 0.7, eps).unwrap().locked);
        assert!(!mode_frequency(&p, -1.7, eps).unwrap().locked);
    }

    #[test]
    fn output_frequencies_uniform_omega() {
        let w = build_fourier_basis(5).unwrap();
        let c = 0.9;
        let omega = Array1::from_elem(5, c);
        let sys = DiagonalizableSystem::with_sine_modes(w, 1.0, omega).unwrap();
        let (mu, big_omega) = output_frequency_vector(&sys).unwrap();
        assert!(mu.iter().all(|&x| x == 0.0));
        for o in big_omega.iter() {
            assert!((o - c).abs() < 1e-12);
        }
    }

    #[test]
    fn output_frequencies_n2_hand_computed() {
        // locked case: a₁ = 1/√2 < 1, Ω = (1/2, 1/2)
        let w = build_fourier_basis(2).unwrap();
        let sys =
            DiagonalizableSystem::with_sine_modes(w, 1.0, ndarray::array![0.0, 1.0]).unwrap();
        let (mu, omega_out) = output_frequency_vector(&sys).unwrap();
        assert_eq!(mu[0], 0.0);
        assert!((omega_out[0] - 0.5).abs() < 1e-12);
        assert!((omega_out[1] - 0.5).abs() < 1e-12);

        // running case: a₁ = √2, μ = 1, Ω = (1 − 1/√2, 1 + 1/√2)
        let w = build_fourier_basis(2).unwrap();
        let sys =
            DiagonalizableSystem::with_sine_modes(w, 1.0, ndarray::array![0.0, 2.0]).unwrap();
        let (mu, omega_out) = output_frequency_vector(&sys).unwrap();
        assert!((mu[0] - 1.0).abs() < 1e-9);
        let s = 1.0 / 2f64.sqrt();
        assert!((omega_out[0] - (1.0 - s)).abs() < 1e-9);
        assert!((omega_out[1] - (1.0 + s)).abs() < 1e-9);
    }

    #[test]
    fn density_atom_is_erf() {
        let g = gaussian_output_density(1.0).unwrap();
        assert!((g.atom_weight - 0.6826895).abs() < 1e-6);
    }

    #[test]
    fn density_normalizes() {
        for eps in [0.5, 1.0, 2.0] {
            let g = gaussian_output_density(eps).unwrap();
            let mass = g.total_mass().unwrap();
            assert!((mass - 1.0).abs() < 1e-6, "eps = {eps}: mass = {mass}");
        }
    }

    #[test]
    fn density_small_epsilon_tends_to_gaussian() {
        let g = gaussian_output_density(1e-6).unwrap();
        assert!(g.atom_weight < 1e-5);
        let std_normal = |x: f64| (-x * x / 2.0).exp() / (2.0 * PI).sqrt();
        for mu in [0.5, 1.0, 2.0] {
            assert!((g.continuous(mu) - std_normal(mu)).abs() < 1e-6);
        }
    }

    #[test]
    fn density_rejects_bad_epsilon() {
        assert!(gaussian_output_density(0.0).is_err());
        assert!(gaussian_output_density(-1.0).is_err());
    }

    #[test]
    fn conditional_abs_cdf_endpoints() {
        let g = gaussian_output_density(1.0).unwrap();
        assert_eq!(g.conditional_abs_cdf(0.0), 0.0);
        assert!((g.conditional_abs_cdf(50.0) - 1.0).abs() < 1e-12);
        // median consistency against direct probability
        let x = 1.0;
        let p = g.conditional_abs_cdf(x);
        assert!(p > 0.0 && p < 1.0);
    }
}
