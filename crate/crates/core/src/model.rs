//! Shared domain types: system parameters, initial conditions, the reduced
//! density matrix and counting distributions.
//!
//! Units: `hbar = 1` and the electron charge `e = 1` throughout. Energies
//! and rates are expressed in units of the interdot coupling `omega0`, times
//! in units of `1/omega0`.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::n_resolved::NResolvedState;

/// Reduced Planck constant in the unit system used throughout.
pub const HBAR: f64 = 1.0;
/// Electron charge in the unit system used throughout.
pub const E_CHARGE: f64 = 1.0;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("{field} must be finite, got {value}")]
    NonFinite { field: &'static str, value: f64 },
    #[error("{field} must be non-negative, got {value}")]
    NegativeRate { field: &'static str, value: f64 },
    #[error("n capacity must be at least 1")]
    ZeroCapacity,
    #[error("transmission must lie in [0, 1], got {0}")]
    TransmissionOutOfRange(f64),
    #[error("bias v_d must be positive, got {0}")]
    NonPositiveBias(f64),
    #[error("blocked-channel transmission t2 must not exceed t1 ({t2} > {t1})")]
    BlockedExceedsOpen { t1: f64, t2: f64 },
}

/// Damping regime relative to the confluence point `gamma_d = 8 omega0`,
/// where `omega = sqrt(gamma_d^2 - 64 omega0^2)` turns real.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DampingRegime {
    /// `d1 < omega0 / 4`
    Weak,
    /// in between
    Boundary,
    /// `d1 > 8 omega0`
    Strong,
}

/// Physical parameters of the monitored double dot plus detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Interdot coupling `omega0` (energy units, hbar = 1).
    pub omega0: f64,
    /// Level detuning `epsilon = E2 - E1`.
    pub epsilon: f64,
    /// Collector penetration rate when the left dot is occupied,
    /// `d1 = t1 v_d / 2 pi`. Equals the dephasing rate `gamma_d`.
    pub d1: f64,
}

impl SystemParams {
    /// Validates and returns the parameter set.
    pub fn new(omega0: f64, epsilon: f64, d1: f64) -> Result<Self, ModelError> {
        Self { omega0, epsilon, d1 }.validated()
    }

    /// Checks the invariants: `omega0 > 0`, `d1 >= 0`, everything finite.
    /// Idempotent.
    pub fn validated(self) -> Result<Self, ModelError> {
        for (field, value) in [
            ("omega0", self.omega0),
            ("epsilon", self.epsilon),
            ("d1", self.d1),
        ] {
            if !value.is_finite() {
                return Err(ModelError::NonFinite { field, value });
            }
        }
        if self.omega0 <= 0.0 {
            return Err(ModelError::NegativeRate {
                field: "omega0",
                value: self.omega0,
            });
        }
        if self.d1 < 0.0 {
            return Err(ModelError::NegativeRate {
                field: "d1",
                value: self.d1,
            });
        }
        Ok(self)
    }

    /// The dephasing rate `gamma_d`, identical to `d1`.
    pub fn gamma_d(&self) -> f64 {
        self.d1
    }

    pub fn regime(&self) -> DampingRegime {
        if self.d1 < self.omega0 / 4.0 {
            DampingRegime::Weak
        } else if self.d1 > 8.0 * self.omega0 {
            DampingRegime::Strong
        } else {
            DampingRegime::Boundary
        }
    }
}

/// Microscopic point-contact parameters, kept separate from the dynamical
/// rate `d1` so that the Landauer current and shot noise can be evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorMicroParams {
    /// Emitter-collector hopping amplitude `Omega`.
    pub coupling: f64,
    /// Density of states in the emitter.
    pub rho_l: f64,
    /// Density of states in the collector.
    pub rho_r: f64,
    /// Applied bias `v_d = mu_l - mu_r`.
    pub v_d: f64,
    /// Detector band width entering the noise power.
    pub delta_nu: f64,
    /// Transmission with the left dot occupied.
    pub t1: f64,
    /// Transmission with the right dot occupied. The dynamics assume a fully
    /// blocked channel; `t2` is carried for bookkeeping only.
    pub t2: f64,
}

impl DetectorMicroParams {
    /// Transmission coefficient `T = (2 pi)^2 Omega^2 rho_l rho_r`.
    pub fn transmission(&self) -> f64 {
        let two_pi = 2.0 * std::f64::consts::PI;
        two_pi * two_pi * self.coupling * self.coupling * self.rho_l * self.rho_r
    }

    /// Penetration rate `D = 2 pi Omega^2 rho_l rho_r v_d`, numerically the
    /// Landauer current in these units.
    pub fn penetration_rate(&self) -> f64 {
        2.0 * std::f64::consts::PI
            * self.coupling
            * self.coupling
            * self.rho_l
            * self.rho_r
            * self.v_d
    }

    /// Dynamical rate `d1 = t1 v_d / 2 pi` implied by these parameters.
    pub fn d1(&self) -> f64 {
        self.t1 * self.v_d / (2.0 * std::f64::consts::PI)
    }

    /// How deep into the large-bias regime the parameters sit,
    /// `v_d / (Omega^2 max(rho_l, rho_r))`. The rate-equation treatment
    /// assumes this is large.
    pub fn large_bias_ratio(&self) -> f64 {
        self.v_d / (self.coupling * self.coupling * self.rho_l.max(self.rho_r))
    }

    pub fn validated(self) -> Result<Self, ModelError> {
        let t = self.transmission();
        if !t.is_finite() || !(0.0..=1.0).contains(&t) {
            return Err(ModelError::TransmissionOutOfRange(t));
        }
        if !(self.v_d > 0.0) {
            return Err(ModelError::NonPositiveBias(self.v_d));
        }
        if self.t2 > self.t1 {
            return Err(ModelError::BlockedExceedsOpen {
                t1: self.t1,
                t2: self.t2,
            });
        }
        Ok(self)
    }
}

/// Electron density matrix with the detector traced out. The lower
/// off-diagonal element is never stored: `sigma21 = conj(sigma12)` by
/// construction, which keeps the matrix Hermitian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedDensityMatrix {
    pub s11: f64,
    pub s22: f64,
    pub s12: C64,
}

impl ReducedDensityMatrix {
    pub fn s21(&self) -> C64 {
        self.s12.conj()
    }

    pub fn trace(&self) -> f64 {
        self.s11 + self.s22
    }

    /// `|s12|^2 - s11 s22`; zero for a pure state, negative for a mixture.
    pub fn purity_defect(&self) -> f64 {
        self.s12.norm_sqr() - self.s11 * self.s22
    }

    /// Checks unit trace, positivity of populations and the Cauchy-Schwarz
    /// bound on the coherence, all up to `tol`.
    pub fn is_valid(&self, tol: f64) -> bool {
        (self.trace() - 1.0).abs() <= tol
            && self.s11 >= -tol
            && self.s22 >= -tol
            && self.s11 <= 1.0 + tol
            && self.s22 <= 1.0 + tol
            && self.purity_defect() <= tol
    }
}

/// Initial condition of the double-dot electron; the collector always starts
/// empty (all weight at n = 0).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitialCondition {
    /// Electron localized in the left (detector-opening) dot.
    LeftDot,
    /// Electron localized in the right (detector-blocking) dot.
    RightDot,
    /// Symmetric superposition, `s11 = s22 = s12 = 1/2`.
    GroundState,
    /// Statistical mixture, `s11 = s22 = 1/2`, no coherence.
    Mixture,
}

impl InitialCondition {
    pub fn reduced(&self) -> ReducedDensityMatrix {
        let (s11, s22, s12) = match self {
            InitialCondition::LeftDot => (1.0, 0.0, 0.0),
            InitialCondition::RightDot => (0.0, 1.0, 0.0),
            InitialCondition::GroundState => (0.5, 0.5, 0.5),
            InitialCondition::Mixture => (0.5, 0.5, 0.0),
        };
        ReducedDensityMatrix {
            s11,
            s22,
            s12: C64::new(s12, 0.0),
        }
    }
}

/// Builds the joint state with all weight in the n = 0 block.
pub fn build_initial(
    kind: InitialCondition,
    n_capacity: usize,
) -> Result<NResolvedState, ModelError> {
    if n_capacity == 0 {
        return Err(ModelError::ZeroCapacity);
    }
    Ok(NResolvedState::from_reduced_at_zero(
        kind.reduced(),
        n_capacity,
    ))
}

/// Tag recording which solver route produced a counting distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PnSource {
    /// Closed form (Poisson or its conditional update).
    Exact,
    /// Stationary-phase Gaussian packet.
    Gaussian,
    /// Direct integration of the rate equations.
    Ode,
    /// Counting-phase (Fourier) route.
    Spectral,
}

impl PnSource {
    pub fn label(&self) -> &'static str {
        match self {
            PnSource::Exact => "exact",
            PnSource::Gaussian => "gaussian",
            PnSource::Ode => "ode",
            PnSource::Spectral => "spectral",
        }
    }
}

/// Probability distribution over the number of collected electrons at a
/// fixed time.
#[derive(Debug, Clone, PartialEq)]
pub struct CountingDistribution {
    pub t: f64,
    pub probs: Vec<f64>,
    pub source: PnSource,
    /// Total negative round-off mass that was clipped to zero on output.
    pub clipped_mass: f64,
}

impl CountingDistribution {
    pub fn new(t: f64, probs: Vec<f64>, source: PnSource) -> Self {
        Self {
            t,
            probs,
            source,
            clipped_mass: 0.0,
        }
    }

    /// Clips small negative entries to zero, recording the clipped mass.
    pub fn clipped(t: f64, raw: Vec<f64>, source: PnSource) -> Self {
        let mut clipped_mass = 0.0;
        let probs = raw
            .into_iter()
            .map(|p| {
                if p < 0.0 {
                    clipped_mass -= p;
                    0.0
                } else {
                    p
                }
            })
            .collect();
        Self {
            t,
            probs,
            source,
            clipped_mass,
        }
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(n, p)| n as f64 * p)
            .sum()
    }

    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (n, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = n;
            }
        }
        best
    }
}
