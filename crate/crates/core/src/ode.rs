//! Explicit adaptive Runge–Kutta 5(4) (Dormand–Prince) with dense output.
//!
//! The phase-oscillator fields are smooth and non-stiff for bounded ε, so
//! a single explicit pair suffices.

use crate::dynamics::Trajectory;
use crate::error::CoreError;

/// Step-size control settings.
#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rtol: f64,
    pub atol: f64,
    /// initial step; chosen automatically when absent
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-10,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 50_000_000,
        }
    }
}

impl StepControl {
    pub fn with_tolerances(rtol: f64, atol: f64) -> Self {
        Self {
            rtol,
            atol,
            ..Self::default()
        }
    }
}

/// Integration failed (step-size underflow or step budget); the
/// trajectory accumulated so far is preserved.
#[derive(Debug)]
pub struct FailedIntegration {
    pub partial: Trajectory,
    pub error: CoreError,
}

impl From<FailedIntegration> for CoreError {
    fn from(f: FailedIntegration) -> Self {
        f.error
    }
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// 5th-order weights coincide with the last tableau row (FSAL).
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];
// dense-output weights for the 4th-order continuous extension
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

struct DenseStep {
    t: f64,
    h: f64,
    rcont: [Vec<f64>; 5],
}

impl DenseStep {
    fn eval(&self, t: f64, out: &mut [f64]) {
        let th = (t - self.t) / self.h;
        let th1 = 1.0 - th;
        for i in 0..out.len() {
            out[i] = self.rcont[0][i]
                + th * (self.rcont[1][i]
                    + th1 * (self.rcont[2][i] + th * (self.rcont[3][i] + th1 * self.rcont[4][i])));
        }
    }
}

struct Stepper<F> {
    f: F,
    t: f64,
    y: Vec<f64>,
    k: [Vec<f64>; 7],
    h: f64,
    ctrl: StepControl,
    steps: usize,
    rejected: usize,
}

impl<F: FnMut(f64, &[f64], &mut [f64])> Stepper<F> {
    fn new(mut f: F, t0: f64, y0: &[f64], t_end: f64, ctrl: StepControl) -> Self {
        let dim = y0.len();
        let mut k: [Vec<f64>; 7] = Default::default();
        for ki in &mut k {
            *ki = vec![0.0; dim];
        }
        let (k0, rest) = k.split_at_mut(1);
        let _ = rest;
        f(t0, y0, &mut k0[0]);
        let span = (t_end - t0).abs().max(1e-12);
        let h = ctrl
            .h_init
            .unwrap_or_else(|| (1e-3 * span).min(0.1).max(1e-8))
            .min(ctrl.h_max);
        Self {
            f,
            t: t0,
            y: y0.to_vec(),
            k,
            h,
            ctrl,
            steps: 0,
            rejected: 0,
        }
    }

    /// Advance one accepted step toward `t_end`; returns the dense
    /// interpolant for the step, or None when `t_end` is reached.
    fn step(&mut self, t_end: f64) -> Result<Option<DenseStep>, CoreError> {
        if self.t >= t_end {
            return Ok(None);
        }
        let dim = self.y.len();
        let mut y_stage = vec![0.0; dim];
        let mut y_new = vec![0.0; dim];

        loop {
            if self.steps + self.rejected >= self.ctrl.max_steps {
                return Err(CoreError::IntegrationFailure {
                    t: self.t,
                    reason: "step budget exhausted".into(),
                    steps: self.steps,
                });
            }
            let h = self.h.min(t_end - self.t);
            if h < 1e-14 * self.t.abs().max(1.0) {
                return Err(CoreError::IntegrationFailure {
                    t: self.t,
                    reason: "step size underflow".into(),
                    steps: self.steps,
                });
            }

            for s in 1..7 {
                for i in 0..dim {
                    let mut acc = 0.0;
                    for (j, aj) in A[s - 1].iter().enumerate().take(s) {
                        acc += aj * self.k[j][i];
                    }
                    y_stage[i] = self.y[i] + h * acc;
                }
                let t_stage = self.t + C[s] * h;
                if s < 6 {
                    let (head, tail) = self.k.split_at_mut(s);
                    let _ = head;
                    (self.f)(t_stage, &y_stage, &mut tail[0]);
                } else {
                    // stage 7 is evaluated at y_new (FSAL)
                    y_new.copy_from_slice(&y_stage);
                    let (_, tail) = self.k.split_at_mut(6);
                    (self.f)(t_stage, &y_new, &mut tail[0]);
                }
            }

            // embedded error estimate
            let mut err_sq = 0.0;
            for i in 0..dim {
                let mut e = 0.0;
                for s in 0..7 {
                    e += (B5[s] - B4[s]) * self.k[s][i];
                }
                e *= h;
                let sc = self.ctrl.atol + self.ctrl.rtol * self.y[i].abs().max(y_new[i].abs());
                err_sq += (e / sc) * (e / sc);
            }
            let err = (err_sq / dim as f64).sqrt();

            if err <= 1.0 {
                let mut rcont: [Vec<f64>; 5] = Default::default();
                for r in &mut rcont {
                    *r = vec![0.0; dim];
                }
                for i in 0..dim {
                    let ydiff = y_new[i] - self.y[i];
                    let bspl = h * self.k[0][i] - ydiff;
                    rcont[0][i] = self.y[i];
                    rcont[1][i] = ydiff;
                    rcont[2][i] = bspl;
                    rcont[3][i] = ydiff - h * self.k[6][i] - bspl;
                    let mut d = 0.0;
                    for s in 0..7 {
                        d += D[s] * self.k[s][i];
                    }
                    rcont[4][i] = h * d;
                }
                let dense = DenseStep {
                    t: self.t,
                    h,
                    rcont,
                };

                self.t += h;
                std::mem::swap(&mut self.y, &mut y_new);
                self.k.swap(0, 6); // FSAL
                let factor = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
                self.h = (self.h * factor).min(self.ctrl.h_max);
                self.steps += 1;
                return Ok(Some(dense));
            }

            self.rejected += 1;
            let factor = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            self.h *= factor;
        }
    }
}

/// Integrate from `t0` to `t_end`, recording every accepted step.
/// Deterministic given inputs and settings.
pub fn integrate<F>(
    f: F,
    t0: f64,
    y0: &[f64],
    t_end: f64,
    ctrl: StepControl,
) -> Result<Trajectory, FailedIntegration>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let mut stepper = Stepper::new(f, t0, y0, t_end, ctrl);
    let mut traj = Trajectory {
        times: vec![t0],
        states: vec![y0.to_vec()],
    };
    loop {
        match stepper.step(t_end) {
            Ok(Some(_)) => {
                traj.times.push(stepper.t);
                traj.states.push(stepper.y.clone());
            }
            Ok(None) => return Ok(traj),
            Err(error) => return Err(FailedIntegration {
                partial: traj,
                error,
            }),
        }
    }
}

/// Integrate and sample the solution at the given strictly increasing
/// times (all ≥ `t0`) via the 4th-order dense output.
pub fn integrate_dense<F>(
    f: F,
    t0: f64,
    y0: &[f64],
    sample_times: &[f64],
    ctrl: StepControl,
) -> Result<Trajectory, FailedIntegration>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let t_end = sample_times.last().copied().unwrap_or(t0);
    let mut stepper = Stepper::new(f, t0, y0, t_end, ctrl);
    let mut traj = Trajectory {
        times: Vec::with_capacity(sample_times.len()),
        states: Vec::with_capacity(sample_times.len()),
    };
    let mut idx = 0;
    while idx < sample_times.len() && sample_times[idx] <= t0 {
        traj.times.push(sample_times[idx]);
        traj.states.push(y0.to_vec());
        idx += 1;
    }
    let dim = y0.len();
    let mut buf = vec![0.0; dim];
    loop {
        match stepper.step(t_end) {
            Ok(Some(dense)) => {
                while idx < sample_times.len() && sample_times[idx] <= stepper.t + 1e-14 {
                    dense.eval(sample_times[idx].min(stepper.t), &mut buf);
                    traj.times.push(sample_times[idx]);
                    traj.states.push(buf.clone());
                    idx += 1;
                }
            }
            Ok(None) => {
                // endpoint roundoff: flush any remaining sample at t_end
                while idx < sample_times.len() {
                    traj.times.push(sample_times[idx]);
                    traj.states.push(stepper.y.clone());
                    idx += 1;
                }
                return Ok(traj);
            }
            Err(error) => {
                return Err(FailedIntegration {
                    partial: traj,
                    error,
                })
            }
        }
    }
}

/// Evenly spaced sample times over [t0, t_end], inclusive.
pub fn uniform_grid(t0: f64, t_end: f64, points: usize) -> Vec<f64> {
    assert!(points >= 2);
    let dt = (t_end - t0) / (points - 1) as f64;
    (0..points)
        .map(|i| {
            if i == points - 1 {
                t_end
            } else {
                t0 + i as f64 * dt
            }
        })
        .collect()
}
