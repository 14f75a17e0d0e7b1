//! Interaction builders: diagonalizable interactions f(Wu) = Wp(u),
//! Kuramoto-form pairwise interactions, gradient potentials, and the
//! voltage-controlled-oscillator coupling.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use ndarray::Array1;

use crate::basis::BasisMatrix;
use crate::error::{CoreError, Result};
use crate::quad;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Dense-sampling resolution used to bracket extrema at construction.
const EXTREMA_SAMPLES: usize = 4096;

/// A real, continuous, L-periodic function with cached extrema over one
/// period. The locking interval of the scalar mode equation is
/// `[-εM, -εm]`, so `m` and `M` are refined to high accuracy.
#[derive(Clone)]
pub struct PeriodicFunction {
    name: String,
    period: f64,
    f: RealFn,
    min: f64,
    max: f64,
    argmin: f64,
    argmax: f64,
}

impl fmt::Debug for PeriodicFunction {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("PeriodicFunction")
            .field("name", &self.name)
            .field("period", &self.period)
            .field("min", &self.min)
            .field("max", &self.max)
            .finish()
    }
}

/// Golden-section minimization on [lo, hi]; the abscissa converges to
/// ~1e-11·span, so the value error is at roundoff for smooth functions.
fn golden_min(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_8;
    let tol = 1e-11 * (hi - lo).abs().max(1.0);
    let mut x1 = hi - INVPHI * (hi - lo);
    let mut x2 = lo + INVPHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while (hi - lo).abs() > tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INVPHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INVPHI * (hi - lo);
            f2 = f(x2);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

impl PeriodicFunction {
    /// Wrap an arbitrary function of the given period. Extrema are found
    /// by dense sampling followed by golden-section refinement.
    pub fn from_fn<F>(name: impl Into<String>, period: f64, f: F) -> Result<Self>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !(period > 0.0) {
            return Err(CoreError::InvalidParameter(format!(
                "period must be positive, got {period}"
            )));
        }
        let f: RealFn = Arc::new(f);
        let step = period / EXTREMA_SAMPLES as f64;
        let mut best_min = (0.0, f(0.0));
        let mut best_max = best_min;
        for i in 1..EXTREMA_SAMPLES {
            let x = i as f64 * step;
            let y = f(x);
            if y < best_min.1 {
                best_min = (x, y);
            }
            if y > best_max.1 {
                best_max = (x, y);
            }
        }
        let g = f.clone();
        let (argmin, min) = golden_min(&move |x| g(x), best_min.0 - step, best_min.0 + step);
        let g = f.clone();
        let (argmax, neg_max) = golden_min(&move |x| -g(x), best_max.0 - step, best_max.0 + step);
        Ok(Self {
            name: name.into(),
            period,
            f,
            min,
            max: -neg_max,
            argmin: argmin.rem_euclid(period),
            argmax: argmax.rem_euclid(period),
        })
    }

    /// p(u) = sin(u), period 2π.
    pub fn sine() -> Self {
        Self::from_fn("sin", 2.0 * PI, f64::sin).expect("valid period")
    }

    /// Odd triangle wave with range [−1, 1] and period 2π.
    pub fn triangle() -> Self {
        Self::from_fn("triangle", 2.0 * PI, |x| (2.0 / PI) * x.sin().asin())
            .expect("valid period")
    }

    /// Piecewise-linear interpolation through equally spaced samples over
    /// one period (the `sampled:<file>` mode spec).
    pub fn from_samples(name: impl Into<String>, period: f64, samples: Vec<f64>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(CoreError::InvalidParameter(
                "need at least 2 samples per period".into(),
            ));
        }
        let n = samples.len();
        let p = period;
        Self::from_fn(name, period, move |x| {
            let t = x.rem_euclid(p) / p * n as f64;
            let i = (t as usize).min(n - 1);
            let frac = t - i as f64;
            let a = samples[i];
            let b = samples[(i + 1) % n];
            a + frac * (b - a)
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    /// min over one period
    pub fn min(&self) -> f64 {
        self.min
    }

    /// max over one period
    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn argmin(&self) -> f64 {
        self.argmin
    }

    pub fn argmax(&self) -> f64 {
        self.argmax
    }

    /// The reduction p̂(w) = −p(−w) that maps the descending branch
    /// `a < −εM` of the mode equation onto the ascending one. Extrema map
    /// exactly: min p̂ = −M at −argmax, max p̂ = −m at −argmin.
    pub fn negated_reflection(&self) -> Self {
        let f = self.f.clone();
        let g: RealFn = Arc::new(move |w| -f(-w));
        Self {
            name: format!("reflect({})", self.name),
            period: self.period,
            f: g,
            min: -self.max,
            max: -self.min,
            argmin: (-self.argmax).rem_euclid(self.period),
            argmax: (-self.argmin).rem_euclid(self.period),
        }
    }
}

/// A full diagonalizable system instance: θ̇ = ω + ε·W·p(Wᵀθ).
#[derive(Debug, Clone)]
pub struct DiagonalizableSystem {
    basis: BasisMatrix,
    epsilon: f64,
    omega: Array1<f64>,
    modes: Vec<PeriodicFunction>,
}

impl DiagonalizableSystem {
    pub fn new(
        basis: BasisMatrix,
        epsilon: f64,
        omega: Array1<f64>,
        modes: Vec<PeriodicFunction>,
    ) -> Result<Self> {
        if omega.len() != basis.n() {
            return Err(CoreError::DimensionMismatch {
                expected: basis.n(),
                got: omega.len(),
            });
        }
        if modes.len() != basis.k() {
            return Err(CoreError::DimensionMismatch {
                expected: basis.k(),
                got: modes.len(),
            });
        }
        if epsilon < 0.0 {
            return Err(CoreError::InvalidParameter(format!(
                "coupling strength must be nonnegative, got {epsilon}"
            )));
        }
        Ok(Self {
            basis,
            epsilon,
            omega,
            modes,
        })
    }

    /// System with every mode function equal to sin.
    pub fn with_sine_modes(basis: BasisMatrix, epsilon: f64, omega: Array1<f64>) -> Result<Self> {
        let modes = vec![PeriodicFunction::sine(); basis.k()];
        Self::new(basis, epsilon, omega, modes)
    }

    pub fn n(&self) -> usize {
        self.basis.n()
    }

    pub fn basis(&self) -> &BasisMatrix {
        &self.basis
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn omega(&self) -> &Array1<f64> {
        &self.omega
    }

    pub fn modes(&self) -> &[PeriodicFunction] {
        &self.modes
    }

    /// Mode input frequencies a = Wᵀω.
    pub fn mode_inputs(&self) -> Array1<f64> {
        self.basis.matrix().t().dot(&self.omega)
    }

    /// The coupling term f(θ) = W·p(Wᵀθ), without ω and ε.
    pub fn coupling(&self, theta: &Array1<f64>) -> Result<Array1<f64>> {
        if theta.len() != self.n() {
            return Err(CoreError::DimensionMismatch {
                expected: self.n(),
                got: theta.len(),
            });
        }
        let u = self.basis.matrix().t().dot(theta);
        let p: Array1<f64> = u
            .iter()
            .zip(&self.modes)
            .map(|(&uj, pj)| pj.eval(uj))
            .collect();
        Ok(self.basis.matrix().dot(&p))
    }

    /// The right-hand side ω + ε·W·p(Wᵀθ) of the phase system.
    pub fn field(&self, theta: &Array1<f64>) -> Result<Array1<f64>> {
        Ok(&self.omega + &(self.coupling(theta)? * self.epsilon))
    }
}

/// Full right-hand side as a free function, mirroring [`DiagonalizableSystem::field`].
pub fn diagonalizable_field(sys: &DiagonalizableSystem, theta: &Array1<f64>) -> Result<Array1<f64>> {
    sys.field(theta)
}

/// One pairwise coupling function h with an optional analytic
/// antiderivative H (normalized so H(0) = 0).
#[derive(Clone)]
pub struct PairwiseFn {
    h: RealFn,
    antiderivative: Option<RealFn>,
}

impl PairwiseFn {
    pub fn new<F>(h: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            h: Arc::new(h),
            antiderivative: None,
        }
    }

    pub fn with_antiderivative<F, G>(h: F, antiderivative: G) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            h: Arc::new(h),
            antiderivative: Some(Arc::new(antiderivative)),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.h)(x)
    }
}

/// Kuramoto-form interaction f_i(θ) = Σ_j h_ij(θ_j − θ_i). Odd h_ij make
/// the interaction satisfy conditions (C1) and (C2).
#[derive(Clone)]
pub struct KuramotoInteraction {
    n: usize,
    // row-major n×n grid
    h: Vec<PairwiseFn>,
}

impl fmt::Debug for KuramotoInteraction {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        fm.debug_struct("KuramotoInteraction")
            .field("n", &self.n)
            .finish()
    }
}

impl KuramotoInteraction {
    pub fn from_grid(n: usize, h: Vec<PairwiseFn>) -> Result<Self> {
        if h.len() != n * n {
            return Err(CoreError::DimensionMismatch {
                expected: n * n,
                got: h.len(),
            });
        }
        Ok(Self { n, h })
    }

    /// Same h for every pair.
    pub fn uniform(n: usize, h: PairwiseFn) -> Self {
        Self {
            n,
            h: vec![h; n * n],
        }
    }

    /// Kuramoto's mean-field model: h_ij(x) = sin(x)/N, H_ij(x) = (1−cos x)/N.
    pub fn mean_field(n: usize) -> Self {
        let nf = n as f64;
        Self::uniform(
            n,
            PairwiseFn::with_antiderivative(move |x| x.sin() / nf, move |x| (1.0 - x.cos()) / nf),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn pair(&self, i: usize, j: usize) -> &PairwiseFn {
        &self.h[i * self.n + j]
    }

    /// Component i of the coupling term: Σ_j h_ij(θ_j − θ_i).
    pub fn coupling_component(&self, i: usize, theta: &Array1<f64>) -> f64 {
        (0..self.n)
            .map(|j| self.pair(i, j).eval(theta[j] - theta[i]))
            .sum()
    }
}

/// The phase-system right-hand side ω_i + ε·Σ_j h_ij(θ_j − θ_i).
pub fn kuramoto_field(
    k: &KuramotoInteraction,
    omega: &Array1<f64>,
    epsilon: f64,
    theta: &Array1<f64>,
) -> Result<Array1<f64>> {
    if omega.len() != k.n() || theta.len() != k.n() {
        return Err(CoreError::DimensionMismatch {
            expected: k.n(),
            got: omega.len().min(theta.len()),
        });
    }
    Ok((0..k.n())
        .map(|i| omega[i] + epsilon * k.coupling_component(i, theta))
        .collect())
}

/// Value of the potential V(u) together with a flag for the slower
/// quadrature path taken when some H_ij has no analytic antiderivative.
#[derive(Debug, Clone, Copy)]
pub struct PotentialValue {
    pub value: f64,
    pub quadrature_fallback: bool,
}

/// V(u) = (1/2)·Σ_i Σ_j H_ij(Σ_k (W_ik − W_jk) u_k).
///
/// For odd symmetric pairwise couplings, the negative gradient of the full
/// potential −ωᵀWu + εV(u) reproduces the u-equation right-hand side.
pub fn gradient_potential(
    k: &KuramotoInteraction,
    u: &Array1<f64>,
    w: &BasisMatrix,
) -> Result<PotentialValue> {
    if w.n() != k.n() {
        return Err(CoreError::DimensionMismatch {
            expected: k.n(),
            got: w.n(),
        });
    }
    if u.len() != w.k() {
        return Err(CoreError::DimensionMismatch {
            expected: w.k(),
            got: u.len(),
        });
    }
    let theta = w.matrix().dot(u);
    let n = k.n();
    let mut sum = 0.0;
    let mut fallback = false;
    for i in 0..n {
        for j in 0..n {
            let d = theta[i] - theta[j];
            let pf = k.pair(i, j);
            let hij = match &pf.antiderivative {
                Some(big_h) => big_h(d),
                None => {
                    fallback = true;
                    if d == 0.0 {
                        0.0
                    } else {
                        let h = pf.h.clone();
                        quad::integrate(move |x| h(x), 0.0, d, 1e-12, 1e-10, 500)?
                    }
                }
            };
            sum += hij;
        }
    }
    Ok(PotentialValue {
        value: 0.5 * sum,
        quadrature_fallback: fallback,
    })
}

/// Σ_b sin(|b|π/2)·Π_ℓ cos(x_ℓ − b_ℓπ/2) over binary tuples b with odd
/// popcount |b|, which telescopes to sin(Σ_ℓ x_ℓ): it is the imaginary part
/// of Π_ℓ (cos x_ℓ + i·sin x_ℓ), so tuples with |b| ≡ 3 (mod 4) enter with a
/// minus sign. Enumeration shares prefix products across the 2^(N−1) odd
/// tuples.
pub fn vco_trig_expansion(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n == 0 {
        return Err(CoreError::InvalidParameter("need at least one angle".into()));
    }
    if n > 20 {
        return Err(CoreError::TooManyTerms(n));
    }
    let sines: Vec<f64> = x.iter().map(|&a| a.sin()).collect();
    let cosines: Vec<f64> = x.iter().map(|&a| a.cos()).collect();

    fn walk(l: usize, prod: f64, count: u32, sines: &[f64], cosines: &[f64]) -> f64 {
        if l == sines.len() {
            return match count % 4 {
                1 => prod,
                3 => -prod,
                _ => 0.0,
            };
        }
        // b_l = 0 keeps cos; b_l = 1 shifts to cos(x − π/2) = sin(x)
        walk(l + 1, prod * cosines[l], count, sines, cosines)
            + walk(l + 1, prod * sines[l], count + 1, sines, cosines)
    }
    Ok(walk(0, 1.0, 0, &sines, &cosines))
}

/// The input signal to VCO j: I_j = ε·Σ_k W_{jk}·sin(Σ_ℓ W_{ℓk}θ_ℓ).
/// With sine modes this equals component j of ε·f(θ). `j` is zero-based.
pub fn vco_input_signal(sys: &DiagonalizableSystem, j: usize, theta: &Array1<f64>) -> Result<f64> {
    if theta.len() != sys.n() {
        return Err(CoreError::DimensionMismatch {
            expected: sys.n(),
            got: theta.len(),
        });
    }
    if j >= sys.n() {
        return Err(CoreError::InvalidParameter(format!(
            "oscillator index {j} out of range for n = {}",
            sys.n()
        )));
    }
    let w = sys.basis().matrix();
    let mut signal = 0.0;
    for k in 0..sys.basis().k() {
        let arg: f64 = (0..sys.n()).map(|l| w[[l, k]] * theta[l]).sum();
        signal += w[[j, k]] * arg.sin();
    }
    Ok(sys.epsilon() * signal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::build_fourier_basis;
    use rand::Rng;
    use rand::SeedableRng;

    fn rng() -> rand_chacha::ChaCha8Rng {
        rand_chacha::ChaCha8Rng::seed_from_u64(1234)
    }

    #[test]
    fn sine_extrema() {
        let p = PeriodicFunction::sine();
        assert!((p.min() + 1.0).abs() < 1e-14);
        assert!((p.max() - 1.0).abs() < 1e-14);
        assert!((p.argmin() - 1.5 * PI).abs() < 1e-7);
        assert!((p.argmax() - 0.5 * PI).abs() < 1e-7);
    }

    #[test]
    fn triangle_extrema_and_periodicity() {
        let p = PeriodicFunction::triangle();
        assert!((p.min() + 1.0).abs() < 1e-9);
        assert!((p.max() - 1.0).abs() < 1e-9);
        for i in 0..40 {
            let x = i as f64 * 0.37;
            assert!((p.eval(x + p.period()) - p.eval(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn sampled_function_interpolates() {
        let samples: Vec<f64> = (0..64).map(|i| (2.0 * PI * i as f64 / 64.0).sin()).collect();
        let p = PeriodicFunction::from_samples("sampled", 2.0 * PI, samples).unwrap();
        assert!((p.min() + 1.0).abs() < 2e-3);
        assert!((p.max() - 1.0).abs() < 2e-3);
        assert!((p.eval(0.1) - 0.1f64.sin()).abs() < 5e-3);
    }

    #[test]
    fn negated_reflection_swaps_extrema() {
        let p = PeriodicFunction::from_fn("skew", 2.0 * PI, |x| x.sin() + 0.3 * (2.0 * x).cos())
            .unwrap();
        let q = p.negated_reflection();
        assert!((q.min() + p.max()).abs() < 1e-12);
        assert!((q.max() + p.min()).abs() < 1e-12);
        for i in 0..20 {
            let x = i as f64 * 0.3;
            assert!((q.eval(x) + p.eval(-x)).abs() < 1e-14);
        }
    }

    #[test]
    fn field_uncoupled_limit_returns_omega() {
        let w = build_fourier_basis(5).unwrap();
        let omega: Array1<f64> = (0..5).map(|i| i as f64 * 0.3 - 0.7).collect();
        let sys = DiagonalizableSystem::with_sine_modes(w, 0.0, omega.clone()).unwrap();
        let theta: Array1<f64> = (0..5).map(|i| 0.1 * i as f64).collect();
        let f = sys.field(&theta).unwrap();
        for (a, b) in f.iter().zip(omega.iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn field_uniform_theta_returns_omega() {
        let w = build_fourier_basis(4).unwrap();
        let omega: Array1<f64> = (0..4).map(|i| 1.0 + i as f64).collect();
        let sys = DiagonalizableSystem::with_sine_modes(w, 1.5, omega.clone()).unwrap();
        let theta = Array1::from_elem(4, 2.3);
        let f = sys.field(&theta).unwrap();
        for (a, b) in f.iter().zip(omega.iter()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn n2_hand_evaluated_field() {
        // θ = (0, π/√2)ᵀ gives Wᵀθ = π/2, so f = W·sin(π/2) = W column
        let w = build_fourier_basis(2).unwrap();
        let s = 1.0 / 2f64.sqrt();
        let sys = DiagonalizableSystem::with_sine_modes(w, 1.0, Array1::zeros(2)).unwrap();
        let theta = ndarray::array![0.0, PI * s];
        let f = sys.field(&theta).unwrap();
        assert!((f[0] + s).abs() < 1e-12);
        assert!((f[1] - s).abs() < 1e-12);
    }

    #[test]
    fn conditions_c1_c2_hold_for_diagonalizable_field() {
        let w = build_fourier_basis(6).unwrap();
        let sys = DiagonalizableSystem::with_sine_modes(w, 1.0, Array1::zeros(6)).unwrap();
        let ones = sys.basis().uniform();
        let mut r = rng();
        for _ in 0..100 {
            let theta: Array1<f64> = (0..6).map(|_| r.gen_range(-10.0..10.0)).collect();
            let c: f64 = r.gen_range(-5.0..5.0);
            let f = sys.coupling(&theta).unwrap();
            assert!(ones.dot(&f).abs() < 1e-10, "(C1) violated");
            let shifted = &theta + &(&ones * c);
            let f2 = sys.coupling(&shifted).unwrap();
            for (a, b) in f.iter().zip(f2.iter()) {
                assert!((a - b).abs() < 1e-10, "(C2) violated");
            }
        }
    }

    #[test]
    fn mean_field_uniform_phases() {
        let k = KuramotoInteraction::mean_field(5);
        let omega: Array1<f64> = (0..5).map(|i| i as f64).collect();
        let theta = Array1::from_elem(5, 0.9);
        let f = kuramoto_field(&k, &omega, 2.0, &theta).unwrap();
        for (a, b) in f.iter().zip(omega.iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn two_oscillator_sine_pair() {
        let k = KuramotoInteraction::uniform(2, PairwiseFn::new(f64::sin));
        let theta = ndarray::array![0.0, PI / 2.0];
        let f = kuramoto_field(&k, &Array1::zeros(2), 1.0, &theta).unwrap();
        assert!((f[0] - 1.0).abs() < 1e-14);
        assert!((f[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn odd_pairwise_functions_give_c1_c2() {
        let k = KuramotoInteraction::uniform(
            5,
            PairwiseFn::new(|x| x.sin() + 0.2 * (3.0 * x).sin()),
        );
        let mut r = rng();
        for _ in 0..100 {
            let theta: Array1<f64> = (0..5).map(|_| r.gen_range(-6.0..6.0)).collect();
            let f = kuramoto_field(&k, &Array1::zeros(5), 1.0, &theta).unwrap();
            let s: f64 = f.iter().sum();
            assert!(s.abs() < 1e-10, "(C1) via odd h failed: {s}");
            let c: f64 = r.gen_range(-4.0..4.0);
            let shifted = theta.mapv(|t| t + c);
            let f2 = kuramoto_field(&k, &Array1::zeros(5), 1.0, &shifted).unwrap();
            for (a, b) in f.iter().zip(f2.iter()) {
                assert!((a - b).abs() < 1e-10, "(C2) via odd h failed");
            }
        }
    }

    #[test]
    fn potential_zero_at_origin() {
        let w = build_fourier_basis(4).unwrap();
        let k = KuramotoInteraction::mean_field(4);
        let v = gradient_potential(&k, &Array1::zeros(3), &w).unwrap();
        assert_eq!(v.value, 0.0);
        assert!(!v.quadrature_fallback);
    }

    #[test]
    fn potential_matches_direct_double_sum() {
        let w = build_fourier_basis(4).unwrap();
        let k = KuramotoInteraction::mean_field(4);
        let mut r = rng();
        for _ in 0..10 {
            let u: Array1<f64> = (0..3).map(|_| r.gen_range(-3.0..3.0)).collect();
            let theta = w.matrix().dot(&u);
            let mut direct = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    direct += (1.0 - (theta[i] - theta[j]).cos()) / 4.0;
                }
            }
            direct *= 0.5;
            let v = gradient_potential(&k, &u, &w).unwrap();
            assert!((v.value - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn quadrature_fallback_agrees_with_analytic() {
        let w = build_fourier_basis(3).unwrap();
        let analytic = KuramotoInteraction::mean_field(3);
        let numeric = KuramotoInteraction::uniform(3, PairwiseFn::new(|x| x.sin() / 3.0));
        let mut r = rng();
        for _ in 0..5 {
            let u: Array1<f64> = (0..2).map(|_| r.gen_range(-2.0..2.0)).collect();
            let va = gradient_potential(&analytic, &u, &w).unwrap();
            let vn = gradient_potential(&numeric, &u, &w).unwrap();
            assert!(vn.quadrature_fallback);
            assert!((va.value - vn.value).abs() < 1e-9);
        }
    }

    #[test]
    fn gradient_check_finite_differences() {
        // -∇[−ωᵀWu + εV(u)] must reproduce the u-equation RHS
        let n = 4;
        let w = build_fourier_basis(n).unwrap();
        let k = KuramotoInteraction::mean_field(n);
        let eps = 0.8;
        let omega = ndarray::array![0.3, -0.2, 0.5, 0.1];
        let mut r = rng();
        let h = 1e-5;
        for _ in 0..10 {
            let u: Array1<f64> = (0..n - 1).map(|_| r.gen_range(-2.0..2.0)).collect();
            let pot = |uu: &Array1<f64>| -> f64 {
                let lin = -omega.dot(&w.matrix().dot(uu));
                lin + eps * gradient_potential(&k, uu, &w).unwrap().value
            };
            // analytic RHS: Wᵀω + ε Wᵀ f(Wu)
            let theta = w.matrix().dot(&u);
            let f = kuramoto_field(&k, &Array1::zeros(n), 1.0, &theta).unwrap();
            let rhs = w.matrix().t().dot(&omega) + w.matrix().t().dot(&f) * eps;
            for j in 0..n - 1 {
                let mut up = u.clone();
                let mut dn = u.clone();
                up[j] += h;
                dn[j] -= h;
                let grad = (pot(&up) - pot(&dn)) / (2.0 * h);
                assert!(
                    (-grad - rhs[j]).abs() < 1e-6,
                    "component {j}: fd {grad} vs rhs {}",
                    rhs[j]
                );
            }
        }
    }

    #[test]
    fn vco_expansion_small_identities() {
        // N = 1: the single odd tuple leaves cos(x − π/2) = sin(x)
        let x = 0.734;
        assert!((vco_trig_expansion(&[x]).unwrap() - x.sin()).abs() < 1e-15);
        // N = 2: angle-addition identity
        let (a, b) = (0.3, -1.2);
        assert!((vco_trig_expansion(&[a, b]).unwrap() - (a + b).sin()).abs() < 1e-15);
    }

    #[test]
    fn vco_expansion_matches_sine_of_sum() {
        let mut r = rng();
        for _ in 0..20 {
            let x: Vec<f64> = (0..6).map(|_| r.gen_range(-3.0..3.0)).collect();
            let total: f64 = x.iter().sum();
            assert!((vco_trig_expansion(&x).unwrap() - total.sin()).abs() < 1e-9);
        }
    }

    #[test]
    fn vco_expansion_caps_term_count() {
        let x = vec![0.0; 21];
        assert!(matches!(
            vco_trig_expansion(&x),
            Err(CoreError::TooManyTerms(21))
        ));
    }

    #[test]
    fn vco_input_vanishes_on_uniform_phase_and_zero_coupling() {
        let w = build_fourier_basis(4).unwrap();
        let sys = DiagonalizableSystem::with_sine_modes(w, 1.3, Array1::zeros(4)).unwrap();
        let theta = Array1::from_elem(4, 0.77);
        for j in 0..4 {
            assert!(vco_input_signal(&sys, j, &theta).unwrap().abs() < 1e-12);
        }
        let w = build_fourier_basis(4).unwrap();
        let sys0 = DiagonalizableSystem::with_sine_modes(w, 0.0, Array1::zeros(4)).unwrap();
        let theta: Array1<f64> = (0..4).map(|i| i as f64 * 0.5).collect();
        for j in 0..4 {
            assert_eq!(vco_input_signal(&sys0, j, &theta).unwrap(), 0.0);
        }
    }

    #[test]
    fn vco_input_matches_diagonalizable_field() {
        let w = build_fourier_basis(4).unwrap();
        let sys = DiagonalizableSystem::with_sine_modes(w, 0.7, Array1::zeros(4)).unwrap();
        let mut r = rng();
        for _ in 0..20 {
            let theta: Array1<f64> = (0..4).map(|_| r.gen_range(-5.0..5.0)).collect();
            let f = sys.coupling(&theta).unwrap() * sys.epsilon();
            for j in 0..4 {
                let i_j = vco_input_signal(&sys, j, &theta).unwrap();
                assert!((i_j - f[j]).abs() < 1e-10, "component {j}");
            }
        }
    }
}
