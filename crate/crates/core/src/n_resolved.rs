//! Direct time integration of the joint detector + electron equations,
//! resolved in the number `n` of collected electrons.
//!
//! Per block `n` (with `s21 = conj(s12)` implicit and `s11[-1] = 0`):
//!
//! ```text
//! d s11[n] = -d1 s11[n] + d1 s11[n-1] + i w0 (s12[n] - s21[n])
//! d s22[n] =                          - i w0 (s12[n] - s21[n])
//! d s12[n] = i eps s12[n] + i w0 (s11[n] - s22[n]) - d1/2 s12[n]
//! ```
//!
//! The gain term feeds `s11` only; a one-electron hop cannot carry a
//! coherence from the `n-1` sector because the contact is blocked whenever
//! the right dot is occupied. This solver is the reference against which the
//! spectral and closed-form routes are checked.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::model::{
    CountingDistribution, InitialCondition, ModelError, PnSource, ReducedDensityMatrix,
    SystemParams,
};
use crate::ode::{DormandPrince45, OdeError, StepControl};

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error("truncation grew past the hard cap of {0} blocks")]
    CapacityExceeded(usize),
    #[error(transparent)]
    Integrator(#[from] OdeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("t_grid must be non-empty, start at t >= 0 and increase strictly")]
    BadTimeGrid,
}

/// One 2x2 block of the joint density matrix at fixed collector count.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Block {
    pub s11: f64,
    pub s22: f64,
    pub s12: C64,
}

impl Block {
    pub fn s21(&self) -> C64 {
        self.s12.conj()
    }
}

/// Joint state: a truncated sequence over `n` of density-matrix blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct NResolvedState {
    pub t: f64,
    blocks: Vec<Block>,
}

impl NResolvedState {
    pub fn from_reduced_at_zero(rho: ReducedDensityMatrix, n_capacity: usize) -> Self {
        let mut blocks = vec![Block::default(); n_capacity + 1];
        blocks[0] = Block {
            s11: rho.s11,
            s22: rho.s22,
            s12: rho.s12,
        };
        Self { t: 0.0, blocks }
    }

    pub fn n_max(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn block(&self, n: usize) -> Block {
        self.blocks[n]
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    /// Total trace over both dot states and all collector counts.
    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.s11 + b.s22).sum()
    }

    /// Trace mass sitting in the top (truncation) block.
    pub fn top_block_mass(&self) -> f64 {
        let top = self.blocks[self.blocks.len() - 1];
        top.s11 + top.s22
    }

    fn to_flat(&self) -> Vec<f64> {
        let nb = self.blocks.len();
        let mut y = vec![0.0; 4 * nb];
        for (n, b) in self.blocks.iter().enumerate() {
            y[n] = b.s11;
            y[nb + n] = b.s22;
            y[2 * nb + n] = b.s12.re;
            y[3 * nb + n] = b.s12.im;
        }
        y
    }

    fn from_flat(t: f64, y: &[f64]) -> Self {
        let nb = y.len() / 4;
        let blocks = (0..nb)
            .map(|n| Block {
                s11: y[n],
                s22: y[nb + n],
                s12: C64::new(y[2 * nb + n], y[3 * nb + n]),
            })
            .collect();
        Self { t, blocks }
    }
}

/// Derivative of a joint state; same block layout as the state itself.
#[derive(Debug, Clone, PartialEq)]
pub struct NResolvedStateDerivative {
    pub blocks: Vec<Block>,
}

/// Integration options. Truncation starts from a Poisson tail bound and
/// grows whenever the top block accumulates more than `tail_epsilon`.
#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub tail_epsilon: f64,
    /// Output sample times, strictly increasing, first entry >= 0.
    pub t_grid: Vec<f64>,
    /// Hard cap on the number of blocks.
    pub max_blocks: usize,
}

impl EvolveOptions {
    pub fn new(t_grid: Vec<f64>) -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            tail_epsilon: 1e-12,
            t_grid,
            max_blocks: 100_000,
        }
    }

    fn validate(&self) -> Result<(), EvolveError> {
        let ok = !self.t_grid.is_empty()
            && self.t_grid[0] >= 0.0
            && self.t_grid.windows(2).all(|w| w[1] > w[0])
            && self.rel_tol > 0.0
            && self.abs_tol > 0.0
            && self.tail_epsilon > 0.0;
        if ok {
            Ok(())
        } else {
            Err(EvolveError::BadTimeGrid)
        }
    }
}

/// Number of blocks that keeps the Poisson tail at rate `d1` over horizon
/// `t_end` below truncation level.
pub fn suggested_blocks(d1: f64, t_end: f64) -> usize {
    let lambda = (d1 * t_end).max(0.0);
    (4.0 + lambda + 6.0 * lambda.sqrt()).ceil() as usize + 1
}

fn flat_derivative(y: &[f64], dy: &mut [f64], params: &SystemParams) {
    let nb = y.len() / 4;
    let (w, eps, d1) = (params.omega0, params.epsilon, params.d1);
    let (s11, rest) = y.split_at(nb);
    let (s22, rest) = rest.split_at(nb);
    let (re12, im12) = rest.split_at(nb);
    let (d11, drest) = dy.split_at_mut(nb);
    let (d22, drest) = drest.split_at_mut(nb);
    let (dre, dim) = drest.split_at_mut(nb);
    for n in 0..nb {
        // i w (s12 - s21) = -2 w Im s12
        let coh = -2.0 * w * im12[n];
        d11[n] = -d1 * s11[n] + coh;
        d22[n] = -coh;
        dre[n] = -eps * im12[n] - 0.5 * d1 * re12[n];
        dim[n] = eps * re12[n] + w * (s11[n] - s22[n]) - 0.5 * d1 * im12[n];
    }
    for n in 1..nb {
        d11[n] += d1 * s11[n - 1];
    }
}

/// Right-hand side of the joint equations, as a pure function.
pub fn derivative(state: &NResolvedState, params: &SystemParams) -> NResolvedStateDerivative {
    let y = state.to_flat();
    let mut dy = vec![0.0; y.len()];
    flat_derivative(&y, &mut dy, params);
    let d = NResolvedState::from_flat(state.t, &dy);
    NResolvedStateDerivative { blocks: d.blocks }
}

/// Integrates the joint equations, sampling at `opts.t_grid`.
///
/// Sampling uses the integrator's continuous extension, so the output grid
/// does not constrain the step size. The truncation index grows by 25%
/// whenever the top block holds more than `tail_epsilon` of trace mass.
pub fn evolve(
    init: &NResolvedState,
    params: &SystemParams,
    opts: &EvolveOptions,
) -> Result<Vec<NResolvedState>, EvolveError> {
    opts.validate()?;
    let params = params.validated()?;
    let t_end = *opts.t_grid.last().unwrap();

    let mut nb = init
        .blocks
        .len()
        .max(suggested_blocks(params.d1, t_end - init.t));
    if nb > opts.max_blocks {
        return Err(EvolveError::CapacityExceeded(opts.max_blocks));
    }
    let mut y = vec![0.0; 4 * nb];
    embed(&init.to_flat(), &mut y);

    let ctrl = StepControl {
        rel_tol: opts.rel_tol,
        abs_tol: opts.abs_tol,
        max_steps: 50_000_000,
    };
    let p = params;
    let mut stepper =
        DormandPrince45::new(move |_t, y, dy| flat_derivative(y, dy, &p), init.t, y.clone(), ctrl);

    let mut out = Vec::with_capacity(opts.t_grid.len());
    let mut grid_iter = opts.t_grid.iter().copied().peekable();
    // emit samples that coincide with the start time
    while let Some(&tq) = grid_iter.peek() {
        if tq <= stepper.t {
            out.push(NResolvedState::from_flat(tq, &stepper.y));
            grid_iter.next();
        } else {
            break;
        }
    }

    let mut scratch = vec![0.0; 4 * nb];
    while stepper.t < t_end {
        let step = stepper.step(t_end)?;
        while let Some(&tq) = grid_iter.peek() {
            if tq <= step.t_new {
                stepper.dense_eval(tq, &mut scratch);
                out.push(NResolvedState::from_flat(tq, &scratch));
                grid_iter.next();
            } else {
                break;
            }
        }
        // grow the truncation before mass reaches the boundary
        let top11 = stepper.y[nb - 1];
        let top22 = stepper.y[2 * nb - 1];
        if top11 + top22 > opts.tail_epsilon {
            let new_nb = (nb + nb / 4).max(nb + 4);
            if new_nb > opts.max_blocks {
                return Err(EvolveError::CapacityExceeded(opts.max_blocks));
            }
            let mut grown = vec![0.0; 4 * new_nb];
            embed(&stepper.y, &mut grown);
            nb = new_nb;
            scratch = vec![0.0; 4 * nb];
            stepper.replace_state(grown);
        }
    }
    Ok(out)
}

/// Copies block-layout data into a (possibly larger) zero-filled layout.
fn embed(src: &[f64], dst: &mut [f64]) {
    let nb_src = src.len() / 4;
    let nb_dst = dst.len() / 4;
    debug_assert!(nb_dst >= nb_src);
    for c in 0..4 {
        dst[c * nb_dst..c * nb_dst + nb_src]
            .copy_from_slice(&src[c * nb_src..(c + 1) * nb_src]);
    }
}

/// Traces out the electron: `P_n = s11[n] + s22[n]`, with negative
/// round-off clipped to zero in the output only.
pub fn counting_distribution(state: &NResolvedState) -> CountingDistribution {
    let raw: Vec<f64> = state.blocks.iter().map(|b| b.s11 + b.s22).collect();
    CountingDistribution::clipped(state.t, raw, PnSource::Ode)
}

/// Traces out the detector: sums the blocks over `n`.
pub fn reduce(state: &NResolvedState) -> ReducedDensityMatrix {
    let mut rho = ReducedDensityMatrix {
        s11: 0.0,
        s22: 0.0,
        s12: C64::new(0.0, 0.0),
    };
    for b in &state.blocks {
        rho.s11 += b.s11;
        rho.s22 += b.s22;
        rho.s12 += b.s12;
    }
    rho
}

/// Convenience wrapper: evolve from a named initial condition.
pub fn evolve_from(
    kind: InitialCondition,
    params: &SystemParams,
    opts: &EvolveOptions,
) -> Result<Vec<NResolvedState>, EvolveError> {
    let t_end = opts.t_grid.last().copied().unwrap_or(0.0);
    let init = crate::model::build_initial(kind, suggested_blocks(params.d1, t_end))?;
    evolve(&init, params, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::poisson_pn;
    use crate::model::build_initial;
    use approx::assert_abs_diff_eq;

    fn params(d1: f64) -> SystemParams {
        SystemParams::new(1.0, 0.0, d1).unwrap()
    }

    #[test]
    fn derivative_left_dot() {
        let state = build_initial(InitialCondition::LeftDot, 4).unwrap();
        let p = params(3.0);
        let d = derivative(&state, &p);
        assert_eq!(d.blocks[0].s11, -3.0);
        assert_eq!(d.blocks[0].s22, 0.0);
        assert_eq!(d.blocks[0].s12, C64::new(0.0, 1.0));
        assert_eq!(d.blocks[1].s11, 3.0);
        assert_eq!(d.blocks[1].s22, 0.0);
    }

    #[test]
    fn derivative_ground_state() {
        let state = build_initial(InitialCondition::GroundState, 2).unwrap();
        let p = params(3.0);
        let d = derivative(&state, &p);
        // populations balanced, so only the damping acts on s12
        assert_eq!(d.blocks[0].s12, C64::new(-0.75, 0.0));
        assert_eq!(d.blocks[0].s11, 0.0);
    }

    #[test]
    fn decoupled_dot_reduces_to_classical_rates() {
        // with omega0 -> 0 the s11 chain is a pure birth process
        let p = SystemParams::new(1e-30, 0.0, 2.0).unwrap();
        let state = build_initial(InitialCondition::LeftDot, 12).unwrap();
        let d = derivative(&state, &p);
        assert_eq!(d.blocks[0].s11, -2.0);
        assert_eq!(d.blocks[1].s11, 2.0);
        assert!(d.blocks[0].s12.im.abs() < 1e-29);
    }

    #[test]
    fn free_rabi_oscillation() {
        // d1 = 0: pure two-level problem, s11 = cos^2(w t)
        let p = SystemParams::new(1.0, 0.0, 0.0).unwrap();
        let opts = EvolveOptions::new(vec![std::f64::consts::FRAC_PI_2]);
        let states = evolve_from(InitialCondition::LeftDot, &p, &opts).unwrap();
        let rho = reduce(&states[0]);
        assert_abs_diff_eq!(rho.s22, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rho.s11, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn poisson_limit_without_coupling() {
        let p = SystemParams::new(1e-12, 0.0, 1.0).unwrap();
        let opts = EvolveOptions::new(vec![1.0]);
        let states = evolve_from(InitialCondition::LeftDot, &p, &opts).unwrap();
        let pn = counting_distribution(&states[0]);
        for n in 0..=6 {
            assert_abs_diff_eq!(pn.probs[n], poisson_pn(1.0, 1.0, n as u64), epsilon = 1e-9);
        }
    }

    #[test]
    fn trace_is_conserved_strong_damping() {
        let p = params(32.0);
        let grid: Vec<f64> = (1..=20).map(|i| 0.5 * i as f64).collect();
        let opts = EvolveOptions::new(grid);
        let states = evolve_from(InitialCondition::LeftDot, &p, &opts).unwrap();
        for s in &states {
            assert!((s.trace() - 1.0).abs() < 1e-9, "trace drift at t={}", s.t);
        }
    }

    #[test]
    fn counting_peak_tracks_half_current() {
        let p = params(1.0);
        let opts = EvolveOptions::new(vec![4.0]);
        let states = evolve_from(InitialCondition::LeftDot, &p, &opts).unwrap();
        let pn = counting_distribution(&states[0]);
        let peak = pn.argmax() as i64;
        assert!((peak - 2).abs() <= 1, "argmax = {peak}");
    }

    #[test]
    fn ground_state_two_peaks() {
        let p = params(32.0);
        let opts = EvolveOptions::new(vec![1.0]);
        let states = evolve_from(InitialCondition::GroundState, &p, &opts).unwrap();
        let pn = counting_distribution(&states[0]);
        // frozen peak at n = 0
        assert!(pn.probs[0] > 0.4);
        // moving peak near n = d1 t = 32
        let (lo, hi) = (24, 40);
        let peak = (lo..hi).max_by(|&a, &b| pn.probs[a].total_cmp(&pn.probs[b])).unwrap();
        assert!((peak as i64 - 32).abs() <= 3, "moving peak at {peak}");
        assert!(pn.probs[peak] > 5.0 * pn.probs[16]);
    }

    #[test]
    fn truncation_growth_does_not_disturb_low_n() {
        let p = params(4.0);
        let opts_small = EvolveOptions {
            max_blocks: 100_000,
            ..EvolveOptions::new(vec![2.0])
        };
        let a = {
            let init = build_initial(InitialCondition::LeftDot, 10).unwrap();
            evolve(&init, &p, &opts_small).unwrap()
        };
        let b = {
            let init = build_initial(InitialCondition::LeftDot, 60).unwrap();
            evolve(&init, &p, &opts_small).unwrap()
        };
        let pa = counting_distribution(&a[0]);
        let pb = counting_distribution(&b[0]);
        for n in 0..=10 {
            assert_abs_diff_eq!(pa.probs[n], pb.probs[n], epsilon = 1e-9);
        }
    }

    #[test]
    fn reduce_keeps_unit_trace_and_hermiticity() {
        let p = params(32.0);
        let opts = EvolveOptions::new(vec![0.3]);
        let states = evolve_from(InitialCondition::GroundState, &p, &opts).unwrap();
        let rho = reduce(&states[0]);
        assert!(rho.is_valid(1e-9));
    }

    #[test]
    fn capacity_error_when_cap_too_small() {
        let p = params(32.0);
        let opts = EvolveOptions {
            max_blocks: 8,
            ..EvolveOptions::new(vec![5.0])
        };
        let init = build_initial(InitialCondition::LeftDot, 4).unwrap();
        assert!(matches!(
            evolve(&init, &p, &opts),
            Err(EvolveError::CapacityExceeded(8))
        ));
    }

    #[test]
    fn rejects_bad_grid() {
        let p = params(1.0);
        let init = build_initial(InitialCondition::LeftDot, 4).unwrap();
        let opts = EvolveOptions::new(vec![1.0, 0.5]);
        assert!(matches!(evolve(&init, &p, &opts), Err(EvolveError::BadTimeGrid)));
    }
}
