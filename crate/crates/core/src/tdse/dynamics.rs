//! Barrier-driven evolution, qubit readout and hold-time calibration.

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use super::chebyshev::{ChebyshevParams, ChebyshevPropagator, DEFAULT_TAIL_TOLERANCE};
use super::grid::{energy_bounds, Hamiltonian, SpatialGrid, WaveFunction};
use super::well::{left_minimum_index, BarrierTimeline, DoubleWellSpec, Phase, SplitPotential};
use crate::error::{Error, Result};
use crate::linalg::C64;

/// Fewest time steps used for any ramp or hold of nonzero length.
pub const MIN_STEPS_PER_PHASE: usize = 16;

/// Allowed drift of the norm over a whole timeline.
pub const TIMELINE_NORM_TOL: f64 = 1e-10;

/// Moduli below this leave the relative qubit phase undefined.
pub const PHASE_AMPLITUDE_FLOOR: f64 = 1e-6;

/// How a time-dependent barrier is frozen within one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stepping {
    /// One constant Hamiltonian per step, sampled at the step midpoint.
    Midpoint,
    /// Fourth-order commutator-free Magnus: two half-length exponentials per
    /// step with constant Hamiltonians built from the two Gauss-point samples.
    #[default]
    Magnus4,
}

const SQRT3_6: f64 = 0.288_675_134_594_812_9; // sqrt(3) / 6

impl Stepping {
    /// `(barrier, fraction of the step)` pairs in the order they act, for the
    /// step starting at local time `t0` with length `h`.
    fn substeps(self, barrier: impl Fn(f64) -> f64, t0: f64, h: f64) -> Vec<(f64, f64)> {
        match self {
            Stepping::Midpoint => vec![(barrier(t0 + 0.5 * h), 1.0)],
            Stepping::Magnus4 => {
                let b1 = barrier(t0 + (0.5 - SQRT3_6) * h);
                let b2 = barrier(t0 + (0.5 + SQRT3_6) * h);
                let (a1, a2) = (0.25 + SQRT3_6, 0.25 - SQRT3_6);
                vec![
                    (2.0 * (a1 * b1 + a2 * b2), 0.5),
                    (2.0 * (a2 * b1 + a1 * b2), 0.5),
                ]
            }
        }
    }

    /// How far a combined barrier can leave the sampled range, as a fraction
    /// of that range.
    fn overshoot(self) -> f64 {
        match self {
            Stepping::Midpoint => 0.0,
            Stepping::Magnus4 => 2.0 * (SQRT3_6 - 0.25),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimelineParams {
    /// Largest time step; each phase is split into equal steps no longer
    /// than this.
    pub dt: f64,
    pub tail_tolerance: f64,
    /// Record every `sample_every`-th step (phase ends are always recorded).
    pub sample_every: usize,
    pub stepping: Stepping,
}

impl Default for TimelineParams {
    fn default() -> Self {
        TimelineParams {
            dt: 0.01,
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            sample_every: 10,
            stepping: Stepping::default(),
        }
    }
}

impl TimelineParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidArgument(format!("dt must be positive, got {}", self.dt)));
        }
        if self.sample_every == 0 {
            return Err(Error::InvalidArgument("sample_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Steps used for a phase of length `len`.
    pub fn steps_for(&self, len: f64) -> usize {
        if len <= 0.0 {
            0
        } else {
            MIN_STEPS_PER_PHASE.max((len / self.dt).ceil() as usize)
        }
    }
}

/// Wavefunctions sampled at increasing times.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<WaveFunction>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &WaveFunction {
        self.states.last().expect("trajectory holds at least the initial state")
    }
}

/// Shared propagation state for one potential family and spectral window.
struct Propagation {
    split: SplitPotential,
    hamiltonian: Hamiltonian,
    window: (f64, f64),
    tail_tolerance: f64,
    stepping: Stepping,
}

impl Propagation {
    fn new(grid: &SpatialGrid, spec: &DoubleWellSpec, barriers: (f64, f64), params: &TimelineParams) -> Result<Self> {
        let split = SplitPotential::new(grid, spec)?;
        let margin = params.stepping.overshoot() * (barriers.0 - barriers.1).abs();
        let lo_b = barriers.0.min(barriers.1) - margin;
        let hi_b = barriers.0.max(barriers.1) + margin;
        // V is affine in the barrier with a non-negative profile.
        let (e_min, _) = energy_bounds(grid, &split.at(lo_b));
        let (_, e_max) = energy_bounds(grid, &split.at(hi_b));
        let hamiltonian = Hamiltonian::new(grid, split.at(lo_b))?;
        Ok(Propagation {
            split,
            hamiltonian,
            window: (e_min, e_max),
            tail_tolerance: params.tail_tolerance,
            stepping: params.stepping,
        })
    }

    fn propagator(&self, dt: f64) -> Result<ChebyshevPropagator> {
        ChebyshevPropagator::new(ChebyshevParams::new(dt, self.window.0, self.window.1, self.tail_tolerance)?)
    }

    /// Advances through one phase in `steps` equal steps, or applies the
    /// adjoint map (steps and sub-steps reversed, time negated) when
    /// `backward`. `record(k, state)` is called after every step `k` in
    /// `1..=steps`.
    #[allow(clippy::too_many_arguments)]
    fn run_phase(
        &mut self,
        timeline: &BarrierTimeline,
        phase: Phase,
        len: f64,
        steps: usize,
        backward: bool,
        state: &mut [C64],
        mut record: impl FnMut(usize, &[C64]),
    ) -> Result<()> {
        if steps == 0 {
            return Ok(());
        }
        let h = len / steps as f64;
        let sign = if backward { -1.0 } else { 1.0 };
        let full = self.propagator(sign * h)?;
        let half = self.propagator(sign * 0.5 * h)?;
        let mut current_barrier = f64::NAN;
        for k in 1..=steps {
            let idx = if backward { steps - k } else { k - 1 };
            let mut subs = self
                .stepping
                .substeps(|s| timeline.phase_barrier(phase, s), idx as f64 * h, h);
            if backward {
                subs.reverse();
            }
            for (b, fraction) in subs {
                if b != current_barrier {
                    self.hamiltonian.set_potential(self.split.at(b))?;
                    current_barrier = b;
                }
                let prop = if fraction == 1.0 { &full } else { &half };
                prop.step(&self.hamiltonian, state)?;
            }
            record(k, state);
        }
        Ok(())
    }
}

/// Evolves `psi0` through the barrier timeline with a potential that is
/// piecewise constant within each step (see [`Stepping`]). The first sample
/// is `psi0` at `t = 0`.
pub fn evolve_timeline(
    psi0: &WaveFunction,
    grid: &SpatialGrid,
    spec: &DoubleWellSpec,
    timeline: &BarrierTimeline,
    params: &TimelineParams,
) -> Result<Trajectory> {
    timeline.validate()?;
    params.validate()?;
    if psi0.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: psi0.len(),
        });
    }
    let mut prop = Propagation::new(grid, spec, (timeline.low, timeline.high), params)?;
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![psi0.clone()],
    };
    let mut state = psi0.amplitudes().to_vec();
    for (phase, start, len) in timeline.phases() {
        let steps = params.steps_for(len);
        let h = if steps > 0 { len / steps as f64 } else { 0.0 };
        prop.run_phase(timeline, phase, len, steps, false, &mut state, |k, s| {
            if k % params.sample_every == 0 || k == steps {
                traj.times.push(start + k as f64 * h);
                traj.states.push(WaveFunction::from_raw(s.to_vec(), grid.dx()));
            }
        })?;
    }
    let norm_sqr = traj.last().norm_sqr();
    if (norm_sqr.sqrt() - psi0.norm_sqr().sqrt()).abs() > TIMELINE_NORM_TOL {
        return Err(Error::NotNormalized { norm_sqr });
    }
    Ok(traj)
}

/// Left- and right-localized states built from the two lowest eigenstates
/// of the Hamiltonian at `spec.barrier_height`. Each is real and positive
/// at its own well minimum, and they are exact mirror images.
pub fn well_ground_states(grid: &SpatialGrid, spec: &DoubleWellSpec) -> Result<(WaveFunction, WaveFunction)> {
    let split = SplitPotential::new(grid, spec)?;
    let v = split.at(spec.barrier_height);
    let m = grid.len();
    if m % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "mirror symmetry needs an even number of grid points, got {m}"
        )));
    }
    let eig = SymmetricEigen::new(Hamiltonian::new(grid, v.clone())?.dense());
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let v0: Vec<f64> = eig.eigenvectors.column(order[0]).iter().copied().collect();
    let v1: Vec<f64> = eig.eigenvectors.column(order[1]).iter().copied().collect();

    // Resolve the doublet into parity eigenstates; a tiny splitting may
    // leave the solver's vectors mixed.
    let mirror = |u: &[f64]| -> Vec<f64> { (0..m).map(|i| u[grid.mirror_index(i)]).collect() };
    let dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).map(|(x, y)| x * y).sum() };
    let (p0, p1) = (mirror(&v0), mirror(&v1));
    let (a, b, d) = (dot(&v0, &p0), dot(&v0, &p1), dot(&v1, &p1));
    // eigenvector of [[a, b], [b, d]] for eigenvalue +1 (even combination)
    let angle = 0.5 * (2.0 * b).atan2(a - d);
    let (s, c) = angle.sin_cos();
    let raw_even: Vec<f64> = (0..m).map(|i| c * v0[i] + s * v1[i]).collect();
    let raw_odd: Vec<f64> = (0..m).map(|i| -s * v0[i] + c * v1[i]).collect();
    let symmetrize = |u: &[f64], sign: f64| -> Vec<f64> {
        let pu = mirror(u);
        let w: Vec<f64> = u.iter().zip(&pu).map(|(x, y)| 0.5 * (x + sign * y)).collect();
        let n = dot(&w, &w).sqrt();
        w.into_iter().map(|x| x / n).collect()
    };
    let mut even = symmetrize(&raw_even, 1.0);
    let mut odd = symmetrize(&raw_odd, -1.0);

    let left = left_minimum_index(grid, &v);
    let right = grid.mirror_index(left);
    if even[left] < 0.0 {
        even.iter_mut().for_each(|x| *x = -*x);
    }
    if odd[right] < 0.0 {
        odd.iter_mut().for_each(|x| *x = -*x);
    }
    let scale = std::f64::consts::FRAC_1_SQRT_2 / grid.dx().sqrt();
    let phi_l: Vec<C64> = (0..m).map(|i| C64::from((even[i] - odd[i]) * scale)).collect();
    let phi_r: Vec<C64> = (0..m).map(|i| C64::from((even[i] + odd[i]) * scale)).collect();
    Ok((
        WaveFunction::normalized(grid, phi_l)?,
        WaveFunction::normalized(grid, phi_r)?,
    ))
}

/// Amplitudes on the two localized states and the probability outside them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitProjection {
    pub alpha: C64,
    pub beta: C64,
    pub leakage: f64,
}

impl QubitProjection {
    /// `arg(beta / alpha)` when both moduli exceed [`PHASE_AMPLITUDE_FLOOR`].
    pub fn relative_phase(&self) -> Option<f64> {
        if self.alpha.norm() > PHASE_AMPLITUDE_FLOOR && self.beta.norm() > PHASE_AMPLITUDE_FLOOR {
            Some((self.beta / self.alpha).arg())
        } else {
            None
        }
    }

    pub fn transfer(&self) -> f64 {
        self.beta.norm_sqr()
    }
}

pub fn qubit_projection(psi: &WaveFunction, phi_l: &WaveFunction, phi_r: &WaveFunction) -> QubitProjection {
    let alpha = phi_l.inner(psi);
    let beta = phi_r.inner(psi);
    QubitProjection {
        alpha,
        beta,
        leakage: 1.0 - alpha.norm_sqr() - beta.norm_sqr(),
    }
}

/// One row of a Bloch trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochSample {
    pub t: f64,
    pub alpha_abs: f64,
    pub beta_abs: f64,
    pub relative_phase: Option<f64>,
    pub leakage: f64,
    pub norm: f64,
}

pub fn bloch_trajectory(traj: &Trajectory, phi_l: &WaveFunction, phi_r: &WaveFunction) -> Vec<BlochSample> {
    traj.times
        .iter()
        .zip(&traj.states)
        .map(|(&t, psi)| {
            let q = qubit_projection(psi, phi_l, phi_r);
            BlochSample {
                t,
                alpha_abs: q.alpha.norm(),
                beta_abs: q.beta.norm(),
                relative_phase: q.relative_phase(),
                leakage: q.leakage,
                norm: psi.norm_sqr().sqrt(),
            }
        })
        .collect()
}

/// Search settings for [`calibrate_hold_time`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationOptions {
    /// Accepted distance between achieved and target transfer.
    pub tolerance: f64,
    /// Scan length in units of the low-barrier tunnelling period.
    pub scan_periods: f64,
    pub scan_points: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            tolerance: 0.005,
            scan_periods: 1.25,
            scan_points: 4000,
        }
    }
}

/// Outcome of a hold-time calibration, verified by a full timeline run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub target: f64,
    pub hold: f64,
    /// Transfer predicted by the hold-phase spectral model.
    pub predicted_transfer: f64,
    /// `|beta|^2` after the full run.
    pub achieved_transfer: f64,
    pub leakage: f64,
    pub relative_phase: Option<f64>,
    /// Tunnelling period `2 pi / (E_1 - E_0)` at the low barrier.
    pub period: f64,
    pub scan_min: f64,
    pub scan_max: f64,
}

/// Transfer `|<chi| exp(-i H_low T) |psi_down>|^2` as a function of the
/// hold time, from the low-barrier eigendecomposition.
struct HoldModel {
    energies: Vec<f64>,
    weights: Vec<C64>,
    period: f64,
}

impl HoldModel {
    fn new(h_low: &Hamiltonian, psi_down: &[C64], chi: &[C64], dx: f64) -> Self {
        let m = psi_down.len();
        let eig = SymmetricEigen::new(h_low.dense());
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut energies = Vec::with_capacity(m);
        let mut weights = Vec::with_capacity(m);
        for &k in &order {
            let vk = eig.eigenvectors.column(k);
            let a: C64 = (0..m).map(|i| psi_down[i] * vk[i]).sum();
            let b: C64 = (0..m).map(|i| chi[i] * vk[i]).sum();
            energies.push(eig.eigenvalues[k]);
            weights.push(b.conj() * a * dx);
        }
        let period = 2.0 * std::f64::consts::PI / (energies[1] - energies[0]);
        HoldModel {
            energies,
            weights,
            period,
        }
    }

    fn transfer(&self, hold: f64) -> f64 {
        self.energies
            .iter()
            .zip(&self.weights)
            .map(|(&e, &w)| w * C64::from_polar(1.0, -e * hold))
            .sum::<C64>()
            .norm_sqr()
    }
}

/// Minimizes `f` on `[a, b]` by golden-section search.
fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() < 1e-12 * (1.0 + a.abs()) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Root of `g` on `[a, b]` given a sign change, by bisection.
fn bisect(g: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let mut ga = g(a);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if (b - a).abs() < 1e-13 * (1.0 + a.abs()) {
            return mid;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm > 0.0) == (ga > 0.0) {
            a = mid;
            ga = gm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Earliest hold time in `times` (increasing) at which `f` comes within
/// `tol` of `target`, refined to the exact crossing or closest approach.
fn first_hit(f: &dyn Fn(f64) -> f64, times: &[f64], target: f64, tol: f64) -> Option<f64> {
    let g = |t: f64| f(t) - target;
    let vals: Vec<f64> = times.iter().map(|&t| g(t)).collect();
    for i in 0..times.len() {
        if vals[i].abs() <= tol {
            // inside a window: exact crossing if the window contains one,
            // else the closest approach near the best sample
            let mut j = i;
            while j + 1 < times.len() && vals[j + 1].abs() <= tol {
                if (vals[j] > 0.0) != (vals[j + 1] > 0.0) {
                    return Some(bisect(g, times[j], times[j + 1]));
                }
                j += 1;
            }
            if j + 1 < times.len() && (vals[j] > 0.0) != (vals[j + 1] > 0.0) {
                return Some(bisect(g, times[j], times[j + 1]));
            }
            let best = (i..=j).min_by(|&a, &b| vals[a].abs().total_cmp(&vals[b].abs())).unwrap();
            let lo = times[best.saturating_sub(1)];
            let hi = times[(best + 1).min(times.len() - 1)];
            let t = golden_min(|t| g(t).abs(), lo, hi);
            return Some(if g(t).abs() <= vals[best].abs() { t } else { times[best] });
        }
        if i > 0 && (vals[i] > 0.0) != (vals[i - 1] > 0.0) {
            return Some(bisect(g, times[i - 1], times[i]));
        }
        // a narrow extremum between samples may still reach the target
        if i > 0 && i + 1 < times.len() {
            let is_max = vals[i] >= vals[i - 1] && vals[i] >= vals[i + 1];
            let is_min = vals[i] <= vals[i - 1] && vals[i] <= vals[i + 1];
            if is_max || is_min {
                let sign = if is_max { -1.0 } else { 1.0 };
                let t = golden_min(|t| sign * g(t), times[i - 1], times[i + 1]);
                if g(t).abs() <= tol {
                    return Some(t);
                }
            }
        }
    }
    None
}

/// Finds the shortest hold for which starting in `phi_L` at the high
/// barrier ends with `|beta|^2` within `options.tolerance` of
/// `target_transfer`, then verifies it with a full run.
pub fn calibrate_hold_time(
    grid: &SpatialGrid,
    spec: &DoubleWellSpec,
    template: &BarrierTimeline,
    target_transfer: f64,
    params: &TimelineParams,
    options: &CalibrationOptions,
) -> Result<Calibration> {
    if !(0.0..=1.0).contains(&target_transfer) {
        return Err(Error::InvalidArgument(format!(
            "target transfer must lie in [0, 1], got {target_transfer}"
        )));
    }
    template.validate()?;
    params.validate()?;
    let (phi_l, phi_r) = well_ground_states(grid, &spec.with_barrier(template.high))?;
    let mut prop = Propagation::new(grid, spec, (template.low, template.high), params)?;

    let mut psi_down = phi_l.amplitudes().to_vec();
    let down_steps = params.steps_for(template.ramp_down);
    prop.run_phase(template, Phase::RampDown, template.ramp_down, down_steps, false, &mut psi_down, |_, _| {})?;
    let mut chi = phi_r.amplitudes().to_vec();
    let up_steps = params.steps_for(template.ramp_up);
    prop.run_phase(template, Phase::RampUp, template.ramp_up, up_steps, true, &mut chi, |_, _| {})?;

    let h_low = Hamiltonian::new(grid, prop.split.at(template.low))?;
    let model = HoldModel::new(&h_low, &psi_down, &chi, grid.dx());
    let span = options.scan_periods * model.period;
    let n = options.scan_points.max(2);
    let times: Vec<f64> = (0..n).map(|i| span * i as f64 / (n - 1) as f64).collect();
    let f = |t: f64| model.transfer(t);

    let hold = first_hit(&f, &times, target_transfer, options.tolerance).ok_or_else(|| {
        let (lo, hi) = times
            .iter()
            .map(|&t| f(t))
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
        Error::CalibrationUnreachable {
            target: target_transfer,
            min_achieved: lo,
            max_achieved: hi,
        }
    })?;

    let timeline = template.with_hold(hold);
    let traj = evolve_timeline(&phi_l, grid, spec, &timeline, params)?;
    let q = qubit_projection(traj.last(), &phi_l, &phi_r);
    let (scan_min, scan_max) = times
        .iter()
        .map(|&t| f(t))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    Ok(Calibration {
        target: target_transfer,
        hold,
        predicted_transfer: f(hold),
        achieved_transfer: q.transfer(),
        leakage: q.leakage,
        relative_phase: q.relative_phase(),
        period: model.period,
        scan_min,
        scan_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (SpatialGrid, DoubleWellSpec) {
        (SpatialGrid::new(-10.0, 10.0, 128).unwrap(), DoubleWellSpec::default())
    }

    fn max_diff(a: &WaveFunction, b: &WaveFunction) -> f64 {
        a.amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn ground_states_are_localized_mirror_pair() {
        let (g, spec) = setup();
        let (l, r) = well_ground_states(&g, &spec).unwrap();
        assert!(l.inner(&r).norm() < 1e-6);
        assert!((l.norm_sqr() - 1.0).abs() < 1e-12);
        assert!((r.norm_sqr() - 1.0).abs() < 1e-12);
        for i in 0..g.len() {
            assert!((l.amplitudes()[i] - r.amplitudes()[g.mirror_index(i)]).norm() < 1e-8);
        }
        assert!(l.left_probability() > 0.99);
        let v = super::super::well::build_double_well(&g, &spec, spec.barrier_height).unwrap();
        let lm = left_minimum_index(&g, &v);
        assert!(l.amplitudes()[lm].re > 0.0 && l.amplitudes()[lm].im == 0.0);
        assert!(r.amplitudes()[g.mirror_index(lm)].re > 0.0);
        // negligible amplitude at the periodic boundary
        assert!(l.amplitudes()[0].norm() < 1e-9);
    }

    #[test]
    fn projection_examples() {
        let (g, spec) = setup();
        let (l, r) = well_ground_states(&g, &spec).unwrap();
        let q = qubit_projection(&l, &l, &r);
        assert!((q.alpha - 1.0).norm() < 1e-10 && q.beta.norm() < 1e-10 && q.leakage.abs() < 1e-10);
        assert_eq!(q.relative_phase(), None);

        let i = C64::new(0.0, 1.0);
        let mix: Vec<C64> = l
            .amplitudes()
            .iter()
            .zip(r.amplitudes())
            .map(|(a, b)| (a + i * b) * std::f64::consts::FRAC_1_SQRT_2)
            .collect();
        let mix = WaveFunction::normalized(&g, mix).unwrap();
        let q = qubit_projection(&mix, &l, &r);
        assert!((q.alpha.norm_sqr() - 0.5).abs() < 1e-10);
        assert!((q.beta.norm_sqr() - 0.5).abs() < 1e-10);
        assert!((q.relative_phase().unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
    }

    #[test]
    fn zero_duration_timeline_returns_initial_state() {
        let (g, spec) = setup();
        let (l, _) = well_ground_states(&g, &spec).unwrap();
        let tl = BarrierTimeline::default().with_hold(0.0);
        let tl = BarrierTimeline {
            ramp_down: 0.0,
            ramp_up: 0.0,
            ..tl
        };
        let traj = evolve_timeline(&l, &g, &spec, &tl, &TimelineParams::default()).unwrap();
        assert_eq!(traj.len(), 1);
        assert_eq!(traj.times, vec![0.0]);
        assert_eq!(traj.last(), &l);
    }

    #[test]
    fn high_barrier_suppresses_tunnelling() {
        let (g, spec) = setup();
        let (l, r) = well_ground_states(&g, &spec).unwrap();
        let tl = BarrierTimeline {
            ramp_down: 0.0,
            hold: 20.0,
            ramp_up: 0.0,
            high: spec.barrier_height,
            low: spec.barrier_height,
        };
        let traj = evolve_timeline(&l, &g, &spec, &tl, &TimelineParams::default()).unwrap();
        for s in bloch_trajectory(&traj, &l, &r) {
            assert!(s.beta_abs.powi(2) < 1e-3, "t = {}", s.t);
            assert!((s.norm - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn stationary_trajectory_is_flat() {
        let (g, spec) = setup();
        let (l, r) = well_ground_states(&g, &spec).unwrap();
        let traj = Trajectory {
            times: vec![0.0, 1.0, 2.0],
            states: vec![l.clone(); 3],
        };
        for s in bloch_trajectory(&traj, &l, &r) {
            assert!((s.alpha_abs - 1.0).abs() < 1e-10);
            assert!(s.beta_abs < 1e-10);
            assert_eq!(s.relative_phase, None);
            assert!(s.leakage.abs() < 1e-10);
        }
    }

    #[test]
    fn ramp_discretization_converges_under_halving() {
        let (g, spec) = setup();
        let (l, _) = well_ground_states(&g, &spec).unwrap();
        let tl = BarrierTimeline::default().with_hold(3.0);
        let run = |dt: f64, stepping: Stepping| {
            let p = TimelineParams {
                dt,
                stepping,
                ..TimelineParams::default()
            };
            evolve_timeline(&l, &g, &spec, &tl, &p).unwrap().last().clone()
        };
        let dt = TimelineParams::default().dt;
        let coarse = run(dt, Stepping::Magnus4);
        let fine = run(dt / 2.0, Stepping::Magnus4);
        assert!(max_diff(&coarse, &fine) < 1e-8, "{:e}", max_diff(&coarse, &fine));
        // the midpoint rule is second order and agrees to its own accuracy
        let mid = run(dt, Stepping::Midpoint);
        assert!(max_diff(&mid, &fine) < 1e-4);
    }

    #[test]
    fn calibrated_rotations() {
        let (g, spec) = setup();
        let template = BarrierTimeline::default();
        let params = TimelineParams::default();
        let options = CalibrationOptions::default();

        let pi = calibrate_hold_time(&g, &spec, &template, 1.0, &params, &options).unwrap();
        assert!(pi.achieved_transfer >= 0.99 && pi.leakage <= 0.01, "{pi:?}");
        assert!((pi.achieved_transfer - pi.predicted_transfer).abs() < 1e-9);

        let half = calibrate_hold_time(&g, &spec, &template, 0.5, &params, &options).unwrap();
        assert!((half.achieved_transfer - 0.5).abs() <= 0.01 && half.leakage <= 0.01, "{half:?}");

        let zero = calibrate_hold_time(&g, &spec, &template, 0.0, &params, &options).unwrap();
        assert!(zero.achieved_transfer <= 0.01, "{zero:?}");
        assert!(zero.hold > pi.hold && zero.hold <= pi.period * options.scan_periods);

        // |beta|^2 rises monotonically while the barrier is held low
        let (l, r) = well_ground_states(&g, &spec.with_barrier(template.high)).unwrap();
        let p = TimelineParams {
            sample_every: 1,
            ..params
        };
        let tl = template.with_hold(pi.hold);
        let traj = evolve_timeline(&l, &g, &spec, &tl, &p).unwrap();
        let samples = bloch_trajectory(&traj, &l, &r);
        let hold: Vec<f64> = samples
            .iter()
            .filter(|s| s.t >= tl.ramp_down && s.t <= tl.ramp_down + tl.hold)
            .map(|s| s.beta_abs.powi(2))
            .collect();
        assert!(hold.len() > 100);
        assert!(hold.windows(2).all(|w| w[1] >= w[0] - 1e-9));
        for s in &samples {
            assert!((s.alpha_abs.powi(2) + s.beta_abs.powi(2) + s.leakage - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn calibration_errors() {
        let (g, spec) = setup();
        let template = BarrierTimeline::default();
        let params = TimelineParams::default();
        let short = CalibrationOptions {
            scan_periods: 0.02,
            ..CalibrationOptions::default()
        };
        match calibrate_hold_time(&g, &spec, &template, 1.0, &params, &short) {
            Err(Error::CalibrationUnreachable { max_achieved, .. }) => assert!(max_achieved < 0.99),
            other => panic!("expected unreachable, got {other:?}"),
        }
        assert!(calibrate_hold_time(&g, &spec, &template, 1.5, &params, &CalibrationOptions::default()).is_err());
    }

    #[test]
    fn search_helpers() {
        let t = golden_min(|x| (x - 0.3).powi(2), 0.0, 1.0);
        assert!((t - 0.3).abs() < 1e-6);
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0);
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        let times: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
        // sin^2 peaks at exactly 1 between samples
        let hit = first_hit(&|x: f64| x.sin().powi(2), &times, 1.0, 1e-9).unwrap();
        assert!((hit - std::f64::consts::FRAC_PI_2).abs() < 1e-4);
        let hit = first_hit(&|x: f64| x.sin().powi(2), &times, 0.5, 0.005).unwrap();
        assert!((hit - std::f64::consts::FRAC_PI_4).abs() < 1e-10);
        assert!(first_hit(&|x: f64| 0.5 * x.sin().powi(2), &times, 1.0, 0.005).is_none());
    }
}
