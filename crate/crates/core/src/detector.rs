//! The point-contact detector decoupled from the double dot: classical rate
//! equations, exact and stationary-phase counting laws, the Bayesian update
//! after a partial observation, Landauer current and shot noise.

use thiserror::Error;

use crate::model::{CountingDistribution, DetectorMicroParams, ModelError, PnSource};
use crate::ode::{DormandPrince45, StepControl};

#[derive(Debug, Error)]
pub enum DetectorError {
    #[error("conditional update needs t >= t1 (got t = {t}, t1 = {t1})")]
    TimeOrder { t: f64, t1: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A partial observation: `n1` electrons seen at time `t1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalObservation {
    pub t1: f64,
    pub n1: u64,
}

impl ConditionalObservation {
    /// Excess count over the expected drift, `delta_n = n1 - d1 t1`.
    pub fn delta_n(&self, d1: f64) -> f64 {
        self.n1 as f64 - d1 * self.t1
    }
}

/// Exact counting law of the decoupled detector: Poisson with mean `d1 t`,
/// evaluated in log space so large `n` stays finite.
pub fn poisson_pn(d1: f64, t: f64, n: u64) -> f64 {
    let lambda = d1 * t;
    if lambda == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    (nf * lambda.ln() - lambda - ln_factorial(n)).exp()
}

fn ln_factorial(n: u64) -> f64 {
    // direct log sum is exact enough here and avoids a gamma dependency
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Stationary-phase form of the counting law: a Gaussian packet of width
/// `sqrt(2 d1 t)` moving with group velocity `d1`.
pub fn gaussian_pn(d1: f64, t: f64, n: u64) -> f64 {
    let lambda = d1 * t;
    let dev = lambda - n as f64;
    (-dev * dev / (2.0 * lambda)).exp() / (2.0 * std::f64::consts::PI * lambda).sqrt()
}

/// Counting law after observing `n1` electrons at `t1`: same packet and
/// group velocity, restarted from the observation, hence strictly narrower
/// than the unconditioned law whenever `t1 > 0`.
///
/// The peak sits at `n = n1 + d1 (t - t1)`, i.e. the unconditioned center
/// shifted by `delta_n = n1 - d1 t1`.
pub fn conditional_pn(
    d1: f64,
    obs: &ConditionalObservation,
    t: f64,
    n: u64,
) -> Result<f64, DetectorError> {
    if t < obs.t1 {
        return Err(DetectorError::TimeOrder { t, t1: obs.t1 });
    }
    let var = d1 * (t - obs.t1);
    let center = d1 * t + obs.delta_n(d1);
    if var == 0.0 {
        return Ok(if n == obs.n1 { 1.0 } else { 0.0 });
    }
    let dev = center - n as f64;
    Ok((-dev * dev / (2.0 * var)).exp() / (2.0 * std::f64::consts::PI * var).sqrt())
}

/// Renormalized discrete conditional distribution on `0..=n_max`.
pub fn conditional_distribution(
    d1: f64,
    obs: &ConditionalObservation,
    t: f64,
    n_max: usize,
) -> Result<CountingDistribution, DetectorError> {
    let mut probs: Vec<f64> = (0..=n_max as u64)
        .map(|n| conditional_pn(d1, obs, t, n))
        .collect::<Result<_, _>>()?;
    let total: f64 = probs.iter().sum();
    if total > 0.0 {
        for p in &mut probs {
            *p /= total;
        }
    }
    Ok(CountingDistribution::new(t, probs, PnSource::Gaussian))
}

/// Integrates the classical rate chain `dp_n = -d1 p_n + d1 p_{n-1}` from
/// `p_n(0) = delta_{n,0}`. Agrees with [`poisson_pn`] to integrator accuracy
/// and exists as an independent route for consistency checks.
pub fn classical_rate_evolve(d1: f64, t: f64, n_max: usize) -> CountingDistribution {
    let nb = n_max + 1;
    let mut y0 = vec![0.0; nb];
    y0[0] = 1.0;
    if t == 0.0 || d1 == 0.0 {
        return CountingDistribution::new(t, y0, PnSource::Ode);
    }
    let mut stepper = DormandPrince45::new(
        move |_t, y: &[f64], dy: &mut [f64]| {
            dy[0] = -d1 * y[0];
            for n in 1..y.len() {
                dy[n] = -d1 * y[n] + d1 * y[n - 1];
            }
        },
        0.0,
        y0,
        StepControl {
            rel_tol: 1e-11,
            abs_tol: 1e-13,
            max_steps: 10_000_000,
        },
    );
    while stepper.t < t {
        stepper
            .step(t)
            .expect("rate chain integration cannot stiffen");
    }
    let mut out = vec![0.0; nb];
    stepper.dense_eval(t, &mut out);
    CountingDistribution::clipped(t, out, PnSource::Ode)
}

/// Full Poisson distribution on `0..=n_max` as a [`CountingDistribution`].
pub fn poisson_distribution(d1: f64, t: f64, n_max: usize) -> CountingDistribution {
    let probs = (0..=n_max as u64).map(|n| poisson_pn(d1, t, n)).collect();
    CountingDistribution::new(t, probs, PnSource::Exact)
}

/// Landauer current `I = T v_d / 2 pi` (units with e = 1).
pub fn landauer_current(micro: &DetectorMicroParams) -> Result<f64, DetectorError> {
    let micro = micro.validated()?;
    Ok(micro.transmission() * micro.v_d / (2.0 * std::f64::consts::PI))
}

/// Shot-noise power `2 delta_nu (v_d / 2 pi) T (1 - T)`; vanishes for a
/// fully open or fully blocked channel.
pub fn shot_noise(micro: &DetectorMicroParams) -> Result<f64, DetectorError> {
    let micro = micro.validated()?;
    let t = micro.transmission();
    Ok(2.0 * micro.delta_nu * micro.v_d / (2.0 * std::f64::consts::PI) * t * (1.0 - t))
}

/// Cumulants of a counting distribution, obtained by differentiating the
/// log generating function `log p~(k)` at `k = 0`. The derivatives of
/// `p~` are moment sums, evaluated exactly; they combine into cumulants
/// through the standard moment-cumulant relations.
pub fn counting_cumulants(dist: &CountingDistribution, orders: usize) -> Vec<f64> {
    assert!(orders >= 1 && orders <= 4, "cumulants 1..=4 supported");
    let m = |p: u32| -> f64 {
        dist.probs
            .iter()
            .enumerate()
            .map(|(n, &pr)| (n as f64).powi(p as i32) * pr)
            .sum()
    };
    let (m1, m2, m3, m4) = (m(1), m(2), m(3), m(4));
    let k1 = m1;
    let k2 = m2 - m1 * m1;
    let k3 = m3 - 3.0 * m2 * m1 + 2.0 * m1.powi(3);
    let k4 = m4 - 4.0 * m3 * m1 - 3.0 * m2 * m2 + 12.0 * m2 * m1 * m1 - 6.0 * m1.powi(4);
    [k1, k2, k3, k4][..orders].to_vec()
}
