//! Counting-phase route: Fourier transform over the collector number,
//! matrix-exponential propagation per mode, secular roots with residue
//! sums, perturbative root formulas and the stationary-phase packet forms.
//!
//! Transforming the joint equations with `s~_ij(k) = sum_n s_ij[n] e^{ink}`
//! turns the gain term into a multiplication by `e^{ik}`, so each mode
//! evolves under a small constant generator. For aligned levels the odd
//! coherence combination `(s~12 - s~21)/2` closes with the populations into
//! a three-dimensional system whose secular roots `e_j` (eigenvalues of
//! `i A(k)`) carry the full counting statistics.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use thiserror::Error;

use crate::detector::poisson_pn;
use crate::linalg::{eigenvalues, expm};
use crate::model::{CountingDistribution, InitialCondition, PnSource, SystemParams};

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("num_k = {num_k} risks aliasing: needs at least {needed} (tail mass {tail:.2e})")]
    AliasingRisk {
        num_k: usize,
        needed: usize,
        tail: f64,
    },
    #[error("residue minors are only tabulated for LeftDot and GroundState")]
    UnsupportedInit,
}

/// `xi = 1 - e^{ik}`.
pub fn xi(k: f64) -> C64 {
    C64::new(1.0, 0.0) - (C64::i() * k).exp()
}

/// One counting-phase mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMode {
    pub k: f64,
    pub xi: C64,
    /// `(s~11, s~22, s~12, s~21)`. Conjugation maps `k -> -k`, so within a
    /// single mode `s~21` is an independent quantity, not `conj(s~12)`.
    pub sigma_tilde: [C64; 4],
}

impl KMode {
    /// Detector-traced transform `s~11 + s~22`; the generating function of
    /// the counting distribution.
    pub fn pn_transform(&self) -> C64 {
        self.sigma_tilde[0] + self.sigma_tilde[1]
    }
}

/// Generator `A(k)` with `d/dt s~ = A(k) s~`. Aligned levels reduce to the
/// 3-vector `(s~11, s~22, (s~12 - s~21)/2)`; detuned systems use the full
/// 4-vector `(s~11, s~22, s~12, s~21)`.
pub fn generator(params: &SystemParams, k: f64) -> DMatrix<C64> {
    let w = C64::new(params.omega0, 0.0);
    let d1 = C64::new(params.d1, 0.0);
    let i = C64::i();
    let z = C64::new(0.0, 0.0);
    let xi_k = xi(k);
    if params.epsilon == 0.0 {
        DMatrix::from_row_slice(
            3,
            3,
            &[
                -d1 * xi_k, z, 2.0 * i * w,
                z, z, -2.0 * i * w,
                i * w, -i * w, -d1 / 2.0,
            ],
        )
    } else {
        let ie = C64::new(0.0, params.epsilon);
        DMatrix::from_row_slice(
            4,
            4,
            &[
                -d1 * xi_k, z, i * w, -i * w,
                z, z, -i * w, i * w,
                i * w, -i * w, ie - d1 / 2.0, z,
                -i * w, i * w, z, -ie - d1 / 2.0,
            ],
        )
    }
}

/// Propagates one mode: `s~(k, t) = exp(A(k) t) s~(k, 0)`, with
/// `s~(k, 0)` equal to the reduced initial matrix for every `k` (all weight
/// starts at n = 0).
pub fn evolve_k_mode(params: &SystemParams, init: InitialCondition, k: f64, t: f64) -> KMode {
    let rho = init.reduced();
    let (s12, s21) = (rho.s12, rho.s12.conj());
    let gen = generator(params, k);
    let e = expm(&gen.map(|z| z * t)).expect("mode generator is small and finite");
    let sigma_tilde = if params.epsilon == 0.0 {
        let delta0 = (s12 - s21) / 2.0;
        let v = [C64::new(rho.s11, 0.0), C64::new(rho.s22, 0.0), delta0];
        let prop = |row: usize| (0..3).map(|c| e[(row, c)] * v[c]).sum::<C64>();
        let (s11_t, s22_t, delta_t) = (prop(0), prop(1), prop(2));
        // the even coherence combination decouples and only dephases
        let sum_t = (s12 + s21) / 2.0 * (-params.d1 * t / 2.0).exp();
        [s11_t, s22_t, sum_t + delta_t, sum_t - delta_t]
    } else {
        let v = [C64::new(rho.s11, 0.0), C64::new(rho.s22, 0.0), s12, s21];
        let prop = |row: usize| (0..4).map(|c| e[(row, c)] * v[c]).sum::<C64>();
        [prop(0), prop(1), prop(2), prop(3)]
    };
    KMode {
        k,
        xi: xi(k),
        sigma_tilde,
    }
}

/// Chernoff bound on the Poisson tail `P(N >= m)` at mean `lambda`.
fn poisson_tail_bound(lambda: f64, m: f64) -> f64 {
    if m <= lambda || lambda <= 0.0 {
        return 1.0;
    }
    (m - lambda - m * (m / lambda).ln()).exp()
}

/// Uniform grid size that keeps the distribution band-limited: the next
/// power of two at or above `4 (n_max + 1)`.
pub fn suggested_num_k(n_max: usize) -> usize {
    (4 * (n_max + 1)).next_power_of_two()
}

/// Inverse transform `P_n(t) = (1/2 pi) int (s~11 + s~22) e^{-ink} dk`,
/// evaluated on a uniform k-grid. `P_n` has finite support, so the discrete
/// sum is exact once `num_k` exceeds that support; the Poisson tail bound
/// guards against aliasing.
///
/// Modes are independent and evaluated in parallel; the final reduction
/// runs in a fixed order so results do not depend on the worker count.
pub fn pn_inverse_transform(
    params: &SystemParams,
    init: InitialCondition,
    t: f64,
    n_max: usize,
    num_k: usize,
) -> Result<CountingDistribution, SpectralError> {
    check_aliasing(params, t, n_max, num_k)?;
    let modes: Vec<C64> = (0..num_k)
        .into_par_iter()
        .map(|m| {
            let k = 2.0 * std::f64::consts::PI * m as f64 / num_k as f64;
            evolve_k_mode(params, init, k, t).pn_transform()
        })
        .collect();
    Ok(assemble_pn(t, &modes, n_max, PnSource::Spectral))
}

fn check_aliasing(
    params: &SystemParams,
    t: f64,
    n_max: usize,
    num_k: usize,
) -> Result<(), SpectralError> {
    let needed = 2 * n_max + 1;
    let tail = poisson_tail_bound(params.d1 * t, num_k as f64);
    if num_k < needed || tail > 1e-9 {
        return Err(SpectralError::AliasingRisk {
            num_k,
            needed,
            tail,
        });
    }
    Ok(())
}

fn assemble_pn(t: f64, modes: &[C64], n_max: usize, source: PnSource) -> CountingDistribution {
    let num_k = modes.len();
    let raw: Vec<f64> = (0..=n_max)
        .map(|n| {
            let mut acc = C64::new(0.0, 0.0);
            for (m, pk) in modes.iter().enumerate() {
                let k = 2.0 * std::f64::consts::PI * (m as f64) / num_k as f64;
                acc += pk * (-C64::i() * (n as f64) * k).exp();
            }
            acc.re / num_k as f64
        })
        .collect();
    CountingDistribution::clipped(t, raw, source)
}

/// Secular roots `e_j` at one counting phase: eigenvalues of `i A(k)` for
/// the aligned-level three-dimensional system, so that each mode carries
/// `exp(-i e_j t)`. Sorted by magnitude of the imaginary part (slowest
/// decay first), ties broken by descending real part.
pub fn secular_roots(params: &SystemParams, k: f64) -> [C64; 3] {
    assert_eq!(
        params.epsilon, 0.0,
        "secular roots are defined for aligned levels"
    );
    let a = generator(params, k);
    let ia = a.map(|z| C64::i() * z);
    let mut roots = eigenvalues(&ia).expect("3x3 Schur converges");
    roots.sort_by(|x, y| {
        x.im.abs()
            .total_cmp(&y.im.abs())
            .then(y.re.total_cmp(&x.re))
    });
    [roots[0], roots[1], roots[2]]
}

/// Strong-damping root expansion:
///
/// ```text
/// e_{1,2} = -i (d1 xi/2 + 4 w0^2/d1 -+ sqrt(d1^2 xi^2/4 + 16 w0^4/d1^2))
/// e_3     = -i d1/2 + i (8 w0^2/d1)(1 + xi)
/// ```
///
/// Returned in this order together with a flag that is false outside the
/// strong-damping regime (`d1 < 8 w0`), where the expansion degrades.
pub fn perturbative_roots(params: &SystemParams, k: f64) -> ([C64; 3], bool) {
    let (w, d1) = (params.omega0, params.d1);
    let i = C64::i();
    let xi_k = xi(k);
    let disc = (d1 * d1 * xi_k * xi_k / 4.0 + C64::new(16.0 * w.powi(4) / (d1 * d1), 0.0)).sqrt();
    let base = d1 * xi_k / 2.0 + C64::new(4.0 * w * w / d1, 0.0);
    let e1 = -i * (base - disc);
    let e2 = -i * (base + disc);
    let e3 = -i * d1 / 2.0 + i * (8.0 * w * w / d1) * (C64::new(1.0, 0.0) + xi_k);
    (([e1, e2, e3]), d1 >= 8.0 * w)
}

/// Weak-damping stationary-phase packet: a Gaussian at half the bare drift,
/// `P_n(t) = (pi d1 t)^{-1/2} exp(-(d1 t/2 - n)^2 / (d1 t))`. The halved
/// group velocity is the time-averaged current of an electron shared
/// equally between the dots.
pub fn stationary_phase_weak(params: &SystemParams, t: f64, n: u64) -> f64 {
    let lam = params.d1 * t;
    if lam <= 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let dev = 0.5 * lam - n as f64;
    (-dev * dev / lam).exp() / (std::f64::consts::PI * lam).sqrt()
}

/// Strong-damping two-component form for a ground-state start: a frozen
/// peak at n = 0 with weight `1/2 exp(-4 w0^2 t / d1)` plus half the moving
/// packet. The packet is evaluated with the exact Poisson law; the Gaussian
/// stationary-phase form is available separately for comparison.
pub fn stationary_phase_strong_ground(params: &SystemParams, t: f64, n: u64) -> f64 {
    let frozen = if n == 0 {
        0.5 * (-4.0 * params.omega0 * params.omega0 * t / params.d1).exp()
    } else {
        0.0
    };
    frozen + 0.5 * poisson_pn(params.d1, t, n)
}

/// Residue numerator entering the root-sum form of the inverse transform.
pub fn minor_determinant(
    init: InitialCondition,
    e: C64,
    params: &SystemParams,
    k: f64,
) -> Result<C64, SpectralError> {
    let (w, d1) = (params.omega0, params.d1);
    let i = C64::i();
    match init {
        InitialCondition::LeftDot => Ok(e * (e + i * d1 / 2.0) - C64::new(4.0 * w * w, 0.0)),
        InitialCondition::GroundState => {
            let xi_k = xi(k);
            Ok(e * (2.0 * e + i * d1 * (C64::new(1.0, 0.0) + xi_k))
                - d1 * d1 * xi_k / 2.0
                - C64::new(8.0 * w * w, 0.0))
        }
        _ => Err(SpectralError::UnsupportedInit),
    }
}

fn residue_weight(init: InitialCondition) -> Result<f64, SpectralError> {
    match init {
        InitialCondition::LeftDot => Ok(1.0),
        // the initial weight is split between the dots
        InitialCondition::GroundState => Ok(0.5),
        _ => Err(SpectralError::UnsupportedInit),
    }
}

/// Per-mode residue data: secular roots, minors and the assembled
/// integrand of the root-sum inverse transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSolution {
    pub k: f64,
    pub roots: [C64; 3],
    pub minors: [C64; 3],
    pub weight: f64,
}

impl SpectralSolution {
    pub fn new(
        params: &SystemParams,
        init: InitialCondition,
        k: f64,
    ) -> Result<Self, SpectralError> {
        let roots = secular_roots(params, k);
        let minors = [
            minor_determinant(init, roots[0], params, k)?,
            minor_determinant(init, roots[1], params, k)?,
            minor_determinant(init, roots[2], params, k)?,
        ];
        Ok(Self {
            k,
            roots,
            minors,
            weight: residue_weight(init)?,
        })
    }

    fn min_root_separation(&self) -> f64 {
        let [a, b, c] = self.roots;
        (a - b).norm().min((a - c).norm()).min((b - c).norm())
    }

    /// `w sum_j M(e_j) / prod_{j' != j} (e_j - e_{j'}) exp(-i e_j t)`; the
    /// counting-transform value rebuilt from the residue sum. Valid only
    /// for distinct roots.
    pub fn pn_transform(&self, t: f64) -> C64 {
        let [e1, e2, e3] = self.roots;
        let mut acc = C64::new(0.0, 0.0);
        for (j, (&ej, &mj)) in self.roots.iter().zip(self.minors.iter()).enumerate() {
            let others: [C64; 2] = match j {
                0 => [e2, e3],
                1 => [e1, e3],
                _ => [e1, e2],
            };
            let denom = (ej - others[0]) * (ej - others[1]);
            acc += mj / denom * (-C64::i() * ej * t).exp();
        }
        acc * self.weight
    }
}

/// Inverse transform evaluated through the residue sum over secular roots,
/// an independent derivation of the same integral as
/// [`pn_inverse_transform`]. Near-confluent modes (the root-sum form
/// assumes distinct roots) fall back to the matrix-exponential route.
pub fn pn_residue_path(
    params: &SystemParams,
    init: InitialCondition,
    t: f64,
    n_max: usize,
    num_k: usize,
) -> Result<CountingDistribution, SpectralError> {
    assert_eq!(params.epsilon, 0.0, "residue path is aligned-levels only");
    check_aliasing(params, t, n_max, num_k)?;
    residue_weight(init)?;
    let modes: Vec<C64> = (0..num_k)
        .into_par_iter()
        .map(|m| {
            let k = 2.0 * std::f64::consts::PI * m as f64 / num_k as f64;
            let sol = SpectralSolution::new(params, init, k).expect("init checked above");
            let scale = sol.roots.iter().map(|e| e.norm()).fold(1.0, f64::max);
            if sol.min_root_separation() < 1e-8 * scale {
                evolve_k_mode(params, init, k, t).pn_transform()
            } else {
                sol.pn_transform(t)
            }
        })
        .collect();
    Ok(assemble_pn(t, &modes, n_max, PnSource::Spectral))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::n_resolved::suggested_blocks;
    use approx::assert_abs_diff_eq;

    fn params(d1: f64) -> SystemParams {
        SystemParams::new(1.0, 0.0, d1).unwrap()
    }

    #[test]
    fn generator_at_k_zero_conserves_trace() {
        let a = generator(&params(3.0), 0.0);
        // population columns sum to zero: nothing leaves the (s11, s22) block
        for c in 0..2 {
            let col_sum = a[(0, c)] + a[(1, c)];
            assert_abs_diff_eq!(col_sum.norm(), 0.0, epsilon = 1e-15);
        }
        assert_abs_diff_eq!(a[(0, 0)].norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn generator_at_k_pi() {
        let a = generator(&params(3.0), std::f64::consts::PI);
        // xi = 2 at k = pi
        assert_abs_diff_eq!(a[(0, 0)].re, -6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a[(0, 0)].im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn detuned_generator_is_four_dimensional() {
        let p = SystemParams::new(1.0, 0.4, 2.0).unwrap();
        let a = generator(&p, 0.3);
        assert_eq!(a.nrows(), 4);
        assert_abs_diff_eq!(a[(2, 2)].im, 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(a[(3, 3)].im, -0.4, epsilon = 1e-15);
    }

    #[test]
    fn decoupled_mode_is_poissonian() {
        let p = SystemParams::new(1e-14, 0.0, 2.0).unwrap();
        let k = 0.7;
        let m = evolve_k_mode(&p, InitialCondition::LeftDot, k, 1.5);
        let expect = (-p.d1 * xi(k) * 1.5).exp();
        assert_abs_diff_eq!((m.sigma_tilde[0] - expect).norm(), 0.0, epsilon = 1e-10);
    }

    #[test]
    fn mode_at_k_zero_is_reduced_matrix() {
        let p = params(32.0);
        let m = evolve_k_mode(&p, InitialCondition::LeftDot, 0.0, 0.7);
        let (s11, s12) = crate::reduced::closed_form_localized(&p, 0.7).unwrap();
        assert_abs_diff_eq!(m.sigma_tilde[0].re, s11, epsilon = 1e-10);
        assert_abs_diff_eq!(m.sigma_tilde[0].im, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((m.sigma_tilde[2] - s12).norm(), 0.0, epsilon = 1e-10);
        // pn transform at k = 0 is the total probability
        assert_abs_diff_eq!(m.pn_transform().re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mode_at_t_zero_is_initial_matrix() {
        let p = params(4.0);
        for k in [0.0, 1.0, 2.5] {
            let m = evolve_k_mode(&p, InitialCondition::GroundState, k, 0.0);
            assert_abs_diff_eq!(m.sigma_tilde[0].re, 0.5, epsilon = 1e-14);
            assert_abs_diff_eq!(m.sigma_tilde[2].re, 0.5, epsilon = 1e-14);
        }
    }

    #[test]
    fn root_at_k_zero_vanishes() {
        let roots = secular_roots(&params(32.0), 0.0);
        assert!(roots[0].norm() < 1e-12, "conservation root: {:?}", roots[0]);
    }

    #[test]
    fn root_identities_against_generator() {
        for d1 in [0.1, 1.0, 32.0] {
            let p = params(d1);
            for k in [0.1, 0.9, 2.2, 3.0] {
                let a = generator(&p, k);
                let ia = a.map(|z| C64::i() * z);
                let roots = secular_roots(&p, k);
                let sum: C64 = roots.iter().sum();
                let prod: C64 = roots.iter().product();
                let tr = ia[(0, 0)] + ia[(1, 1)] + ia[(2, 2)];
                let det = ia.determinant();
                let scale = roots.iter().map(|e| e.norm()).fold(1.0, f64::max);
                assert!((sum - tr).norm() <= 1e-10 * scale, "d1={d1} k={k}");
                assert!(
                    (prod - det).norm() <= 1e-10 * scale.powi(3).max(1.0),
                    "d1={d1} k={k}"
                );
            }
        }
    }

    #[test]
    fn weak_damping_roots() {
        let p = params(0.1);
        let k = 0.15;
        let roots = secular_roots(&p, k);
        // slowest root tracks -i d1 xi / 2
        let expect = -C64::i() * p.d1 * xi(k) / 2.0;
        assert!((roots[0] - expect).norm() < 0.05 * expect.norm());
        // the other two sit near the Rabi sidebands +-2 w0
        let mut re: Vec<f64> = roots[1..].iter().map(|e| e.re).collect();
        re.sort_by(f64::total_cmp);
        assert_abs_diff_eq!(re[0], -2.0, epsilon = 0.05);
        assert_abs_diff_eq!(re[1], 2.0, epsilon = 0.05);
    }

    #[test]
    fn perturbative_roots_at_k_zero() {
        let p = params(32.0);
        let ([e1, e2, e3], ok) = perturbative_roots(&p, 0.0);
        assert!(ok);
        assert_abs_diff_eq!(e1.norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!((e2 - C64::new(0.0, -8.0 / 32.0)).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            (e3 - C64::new(0.0, -16.0 + 8.0 / 32.0)).norm(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn perturbative_branches() {
        let p = params(32.0);
        // |xi| >> 8 w0^2/d1^2: slow root saturates at -4i w0^2/d1
        let (roots, _) = perturbative_roots(&p, 1.5);
        assert!((roots[0] - C64::new(0.0, -4.0 / 32.0)).norm() < 0.02);
        // |xi| << 8 w0^2/d1^2: slow root is the drift -i d1 xi / 2
        let k_small = 1e-4;
        let (roots, _) = perturbative_roots(&p, k_small);
        let drift = -C64::i() * p.d1 * xi(k_small) / 2.0;
        assert!((roots[0] - drift).norm() < 0.05 * drift.norm());
    }

    #[test]
    fn perturbative_flags_weak_regime() {
        let (_, ok) = perturbative_roots(&params(1.0), 0.5);
        assert!(!ok);
    }

    #[test]
    fn perturbative_matches_exact_at_strong_damping() {
        let p = params(32.0);
        let budget = (p.omega0 / p.d1).powi(2);
        for m in 0..16 {
            let k = 2.0 * std::f64::consts::PI * (m as f64 + 0.5) / 16.0 - std::f64::consts::PI;
            let exact = secular_roots(&p, k);
            let (pert, _) = perturbative_roots(&p, k);
            // pair each perturbative root with its nearest exact root
            for pe in pert {
                let best = exact
                    .iter()
                    .map(|ex| (pe - ex).norm())
                    .fold(f64::INFINITY, f64::min);
                let rel = best / pe.norm().max(1e-3);
                assert!(rel < 100.0 * budget, "k={k}: rel={rel}");
            }
        }
    }

    #[test]
    fn inverse_transform_recovers_poisson() {
        let p = SystemParams::new(1e-14, 0.0, 4.0).unwrap();
        let pn = pn_inverse_transform(&p, InitialCondition::LeftDot, 1.0, 20, 64).unwrap();
        for n in 0..=20u64 {
            assert_abs_diff_eq!(
                pn.probs[n as usize],
                poisson_pn(4.0, 1.0, n),
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn ground_and_mixture_transforms_agree() {
        // for aligned levels the odd coherence starts at zero in both cases
        let p = params(8.0);
        let a = pn_inverse_transform(&p, InitialCondition::GroundState, 0.5, 16, 64).unwrap();
        let b = pn_inverse_transform(&p, InitialCondition::Mixture, 0.5, 16, 64).unwrap();
        for n in 0..=16 {
            assert_abs_diff_eq!(a.probs[n], b.probs[n], epsilon = 1e-12);
        }
    }

    #[test]
    fn aliasing_guard_triggers() {
        let p = params(32.0);
        assert!(matches!(
            pn_inverse_transform(&p, InitialCondition::LeftDot, 1.0, 10, 24),
            Err(SpectralError::AliasingRisk { .. })
        ));
    }

    #[test]
    fn minor_values_at_root_zero() {
        let p = params(1.0);
        let zero = C64::new(0.0, 0.0);
        let m_left = minor_determinant(InitialCondition::LeftDot, zero, &p, 0.0).unwrap();
        assert_abs_diff_eq!((m_left - C64::new(-4.0, 0.0)).norm(), 0.0, epsilon = 1e-14);
        let m_ground = minor_determinant(InitialCondition::GroundState, zero, &p, 0.0).unwrap();
        assert_abs_diff_eq!((m_ground - C64::new(-8.0, 0.0)).norm(), 0.0, epsilon = 1e-14);
        assert!(matches!(
            minor_determinant(InitialCondition::RightDot, zero, &p, 0.0),
            Err(SpectralError::UnsupportedInit)
        ));
    }

    #[test]
    fn residue_transform_starts_normalized() {
        // at t = 0 the root sum collapses to the leading coefficient
        for init in [InitialCondition::LeftDot, InitialCondition::GroundState] {
            let p = params(32.0);
            for k in [0.3, 1.2, 2.9] {
                let sol = SpectralSolution::new(&p, init, k).unwrap();
                assert_abs_diff_eq!((sol.pn_transform(0.0) - C64::new(1.0, 0.0)).norm(), 0.0, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn residue_path_matches_matrix_exponential() {
        let p = params(32.0);
        let t = 0.5;
        let n_max = suggested_blocks(p.d1, t);
        let num_k = suggested_num_k(n_max);
        for init in [InitialCondition::LeftDot, InitialCondition::GroundState] {
            let via_residues = pn_residue_path(&p, init, t, n_max, num_k).unwrap();
            let via_expm = pn_inverse_transform(&p, init, t, n_max, num_k).unwrap();
            let max_dev = via_residues
                .probs
                .iter()
                .zip(&via_expm.probs)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(max_dev < 1e-6, "{init:?}: max dev {max_dev}");
        }
    }

    #[test]
    fn weak_packet_normalization_and_peak() {
        let p = params(1.0);
        let t = 40.0; // d1 t = 40 >= 20
        let total: f64 = (0..200).map(|n| stationary_phase_weak(&p, t, n)).sum();
        assert!((total - 1.0).abs() < 0.01, "total = {total}");
        let peak = (0..200)
            .max_by(|&a, &b| {
                stationary_phase_weak(&p, t, a).total_cmp(&stationary_phase_weak(&p, t, b))
            })
            .unwrap();
        assert_eq!(peak, 20);
        // early times concentrate at n = 0
        assert!(stationary_phase_weak(&p, 1e-6, 0) > stationary_phase_weak(&p, 1e-6, 1) * 1e6);
    }

    #[test]
    fn strong_ground_form_limits() {
        let p = params(32.0);
        assert_abs_diff_eq!(stationary_phase_strong_ground(&p, 0.0, 0), 1.0, epsilon = 1e-14);
        // frozen weight 1/4 once 4 w0^2 t / d1 = ln 2 and the packet left
        let t = 2.0f64.ln() * p.d1 / 4.0;
        assert_abs_diff_eq!(stationary_phase_strong_ground(&p, t, 0), 0.25, epsilon = 1e-12);
    }
}
