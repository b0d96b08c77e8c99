//! Adaptive Dormand-Prince 5(4) integrator with a fourth-order continuous
//! extension, operating on flat `f64` state vectors.
//!
//! The stepper is deliberately minimal: callers drive the step loop
//! themselves, which lets the n-resolved solver grow its state vector
//! between accepted steps. Dense output is evaluated on the last accepted
//! interval only.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h})")]
    StepSizeUnderflow { t: f64, h: f64 },
    #[error("step limit {0} exceeded")]
    TooManySteps(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_steps: 10_000_000,
        }
    }
}

// Dormand-Prince coefficients.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
const A7: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// Difference between the 5th and the embedded 4th order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense-output coefficients (Hairer's contd5).
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step: interval and interpolation data live inside the
/// stepper until the next step.
#[derive(Debug, Clone, Copy)]
pub struct AcceptedStep {
    pub t_old: f64,
    pub t_new: f64,
}

pub struct DormandPrince45<F>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    f: F,
    ctrl: StepControl,
    pub t: f64,
    pub y: Vec<f64>,
    h: f64,
    /// Derivative at (t, y); first-same-as-last reuse across steps.
    dy: Vec<f64>,
    // dense-output polynomial for the last accepted interval
    rcont: [Vec<f64>; 5],
    last: Option<AcceptedStep>,
    steps_taken: usize,
    stages: [Vec<f64>; 7],
    y_tmp: Vec<f64>,
}

impl<F> DormandPrince45<F>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    pub fn new(mut f: F, t0: f64, y0: Vec<f64>, ctrl: StepControl) -> Self {
        let n = y0.len();
        let mut dy = vec![0.0; n];
        f(t0, &y0, &mut dy);
        let h = initial_step(&mut f, t0, &y0, &dy, &ctrl);
        Self {
            f,
            ctrl,
            t: t0,
            y: y0,
            h,
            dy,
            rcont: std::array::from_fn(|_| vec![0.0; n]),
            last: None,
            steps_taken: 0,
            stages: std::array::from_fn(|_| vec![0.0; n]),
            y_tmp: vec![0.0; n],
        }
    }

    /// Replaces the state vector (e.g. after growing the system), keeping
    /// the current time and a proportional step size.
    pub fn replace_state(&mut self, y: Vec<f64>) {
        let n = y.len();
        self.y = y;
        self.dy = vec![0.0; n];
        (self.f)(self.t, &self.y, &mut self.dy);
        self.rcont = std::array::from_fn(|_| vec![0.0; n]);
        self.last = None;
        self.stages = std::array::from_fn(|_| vec![0.0; n]);
        self.y_tmp = vec![0.0; n];
    }

    /// Advances by one accepted step, at most up to `t_limit`.
    pub fn step(&mut self, t_limit: f64) -> Result<AcceptedStep, OdeError> {
        let n = self.y.len();
        loop {
            self.steps_taken += 1;
            if self.steps_taken > self.ctrl.max_steps {
                return Err(OdeError::TooManySteps(self.ctrl.max_steps));
            }
            let mut h = self.h.min(t_limit - self.t);
            if h <= 0.0 {
                h = self.h;
            }
            if self.t + h == self.t {
                return Err(OdeError::StepSizeUnderflow { t: self.t, h });
            }

            self.stages[0].copy_from_slice(&self.dy);
            let a_rows: [&[f64]; 6] = [&A2, &A3, &A4, &A5, &A6, &A7];
            for (s, a) in a_rows.iter().enumerate() {
                for i in 0..n {
                    let mut acc = 0.0;
                    for (j, &aj) in a.iter().enumerate() {
                        acc += aj * self.stages[j][i];
                    }
                    self.y_tmp[i] = self.y[i] + h * acc;
                }
                let (t_s, stage) = (self.t + C[s + 1] * h, &mut self.stages[s + 1]);
                (self.f)(t_s, &self.y_tmp, stage);
            }
            // stage 7 input is the 5th-order solution itself (FSAL)
            let y_new = &self.y_tmp;

            let mut err_sq = 0.0;
            for i in 0..n {
                let mut e = 0.0;
                for (j, &ej) in E.iter().enumerate() {
                    e += ej * self.stages[j][i];
                }
                e *= h;
                let sc = self.ctrl.abs_tol
                    + self.ctrl.rel_tol * self.y[i].abs().max(y_new[i].abs());
                err_sq += (e / sc) * (e / sc);
            }
            let err = (err_sq / n as f64).sqrt();

            if err <= 1.0 {
                // build the dense-output polynomial before moving state
                for i in 0..n {
                    let ydiff = y_new[i] - self.y[i];
                    let bspl = h * self.stages[0][i] - ydiff;
                    self.rcont[0][i] = self.y[i];
                    self.rcont[1][i] = ydiff;
                    self.rcont[2][i] = bspl;
                    self.rcont[3][i] = ydiff - h * self.stages[6][i] - bspl;
                    let mut acc = 0.0;
                    for (j, &dj) in D.iter().enumerate() {
                        acc += dj * self.stages[j][i];
                    }
                    self.rcont[4][i] = h * acc;
                }
                let accepted = AcceptedStep {
                    t_old: self.t,
                    t_new: self.t + h,
                };
                self.t = accepted.t_new;
                std::mem::swap(&mut self.y, &mut self.y_tmp);
                self.dy.copy_from_slice(&self.stages[6]);
                self.last = Some(accepted);

                let scale = (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
                self.h = h * scale;
                return Ok(accepted);
            }
            let scale = (0.9 * err.powf(-0.2)).clamp(0.2, 1.0);
            self.h = h * scale;
            if !self.h.is_finite() || self.h < f64::EPSILON * self.t.abs().max(1.0) {
                return Err(OdeError::StepSizeUnderflow { t: self.t, h: self.h });
            }
        }
    }

    /// Evaluates the interpolant on the last accepted interval.
    pub fn dense_eval(&self, t: f64, out: &mut [f64]) {
        let step = self
            .last
            .expect("dense_eval called before any accepted step");
        let h = step.t_new - step.t_old;
        let theta = (t - step.t_old) / h;
        let theta1 = 1.0 - theta;
        for i in 0..out.len() {
            out[i] = self.rcont[0][i]
                + theta
                    * (self.rcont[1][i]
                        + theta1
                            * (self.rcont[2][i]
                                + theta * (self.rcont[3][i] + theta1 * self.rcont[4][i])));
        }
    }
}

/// Hairer's starting step heuristic for a 5th order method.
fn initial_step<F>(f: &mut F, t0: f64, y0: &[f64], dy0: &[f64], ctrl: &StepControl) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let sc = |y: f64| ctrl.abs_tol + ctrl.rel_tol * y.abs();
    let d0 = (y0
        .iter()
        .map(|&y| (y / sc(y)) * (y / sc(y)))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    let d1 = (y0
        .iter()
        .zip(dy0)
        .map(|(&y, &dy)| (dy / sc(y)) * (dy / sc(y)))
        .sum::<f64>()
        / n as f64)
        .sqrt();
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1: Vec<f64> = y0.iter().zip(dy0).map(|(&y, &dy)| y + h0 * dy).collect();
    let mut dy1 = vec![0.0; n];
    f(t0 + h0, &y1, &mut dy1);
    let d2 = (dy1
        .iter()
        .zip(dy0)
        .zip(y0)
        .map(|((&a, &b), &y)| {
            let e = (a - b) / sc(y);
            e * e
        })
        .sum::<f64>()
        / n as f64)
        .sqrt()
        / h0;
    let d_max = d1.max(d2);
    let h1 = if d_max <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d_max).powf(0.2)
    };
    h1.min(100.0 * h0)
}
