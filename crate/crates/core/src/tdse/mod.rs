//! Single-electron dynamics in a 1D double quantum dot: Fourier-grid
//! Hamiltonian, Chebyshev propagation, barrier-controlled qubit rotations.

mod chebyshev;
mod dynamics;
mod grid;
mod well;

pub use chebyshev::{
    bessel_j_sequence, chebyshev_step, ChebyshevParams, ChebyshevPropagator, DEFAULT_TAIL_TOLERANCE,
    MAX_TAIL_TERMS, NORM_GROWTH_LIMIT,
};
pub use dynamics::{
    bloch_trajectory, calibrate_hold_time, evolve_timeline, qubit_projection, well_ground_states, BlochSample,
    Calibration, CalibrationOptions, QubitProjection, Stepping, TimelineParams, Trajectory, MIN_STEPS_PER_PHASE,
    PHASE_AMPLITUDE_FLOOR, TIMELINE_NORM_TOL,
};
pub use grid::{apply_hamiltonian, energy_bounds, Hamiltonian, SpatialGrid, WaveFunction, WAVE_NORM_TOL};
pub use well::{build_double_well, left_minimum_index, BarrierTimeline, DoubleWellSpec, Phase};
