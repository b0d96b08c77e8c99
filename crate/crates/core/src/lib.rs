//! Joint dynamics of a two-state (double-dot) electron and the point-contact
//! detector that continuously monitors it.
//!
//! The crate tracks the full n-resolved density matrix of the electron plus
//! the number `n` of electrons transferred to the detector collector, and
//! derives from it the observable counting statistics: electron-number
//! distributions, average current, dephasing and Zeno-time scaling, and the
//! pointer records predicted by different wave-function collapse rules.
//!
//! Solver routes are deliberately redundant so they can cross-check each
//! other:
//!
//! * [`n_resolved`]: direct adaptive integration of the coupled rate
//!   equations, the reference solution;
//! * [`spectral`]: counting-phase (Fourier) modes propagated by matrix
//!   exponentials, with secular roots and residue sums as a second path;
//! * [`reduced`]: detector-traced dynamics and its closed forms;
//! * [`detector`]: the decoupled detector (Poisson laws, Landauer current,
//!   shot noise);
//! * [`collapse`]: executable collapse scenarios and pointer readout;
//! * [`figures`]: derived observables and figure datasets;
//! * [`check`]: the cross-solver consistency suite.

pub mod check;
pub mod collapse;
pub mod detector;
pub mod figures;
pub mod linalg;
pub mod model;
pub mod n_resolved;
pub mod ode;
pub mod reduced;
pub mod spectral;

pub use model::{
    build_initial, CountingDistribution, DampingRegime, DetectorMicroParams, InitialCondition,
    ModelError, PnSource, ReducedDensityMatrix, SystemParams,
};
pub use n_resolved::{EvolveOptions, NResolvedState};
pub use spectral::SpectralSolution;
pub use collapse::{CollapseKind, ScenarioParams, TrajectoryRecord};
pub use figures::FigureDataset;
