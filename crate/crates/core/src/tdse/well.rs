//! Symmetric double-well potential with a controllable central barrier, and
//! the barrier schedule of a single-qubit rotation.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::grid::SpatialGrid;
use crate::error::{Error, Result};

/// Two inverted Gaussian wells of depth `well_depth` and width `well_width`
/// centred at `+-well_separation / 2` about the grid midpoint, plus a
/// central Gaussian barrier of width `barrier_width`:
///
/// ```text
/// V(y) = -D [g(y - s/2) + g(y + s/2)] + B exp(-y^2 / (2 w_b^2)),
/// g(u) = exp(-u^2 / (2 w^2))
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoubleWellSpec {
    pub well_depth: f64,
    pub well_width: f64,
    pub well_separation: f64,
    pub barrier_width: f64,
    /// Static barrier height, used where no timeline is involved.
    pub barrier_height: f64,
}

impl Default for DoubleWellSpec {
    fn default() -> Self {
        DoubleWellSpec {
            well_depth: 8.0,
            well_width: 0.6,
            well_separation: 2.0,
            barrier_width: 0.35,
            barrier_height: 30.0,
        }
    }
}

impl DoubleWellSpec {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("well_depth", self.well_depth),
            ("well_width", self.well_width),
            ("barrier_width", self.barrier_width),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {value}")));
            }
        }
        if !(self.well_separation.is_finite() && self.well_separation >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "well_separation must be non-negative, got {}",
                self.well_separation
            )));
        }
        check_barrier(self.barrier_height)
    }

    pub fn with_barrier(&self, barrier_height: f64) -> Self {
        DoubleWellSpec {
            barrier_height,
            ..*self
        }
    }
}

fn check_barrier(b: f64) -> Result<()> {
    if !(b.is_finite() && b >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "barrier height must be finite and non-negative, got {b}"
        )));
    }
    Ok(())
}

/// Barrier-independent part of the potential and the unit barrier profile,
/// so that `V = base + barrier * profile`.
#[derive(Debug, Clone)]
pub(crate) struct SplitPotential {
    pub base: Vec<f64>,
    pub profile: Vec<f64>,
}

impl SplitPotential {
    pub fn new(grid: &SpatialGrid, spec: &DoubleWellSpec) -> Result<Self> {
        spec.validate()?;
        let half = spec.well_separation / 2.0;
        let g = |u: f64| (-u * u / (2.0 * spec.well_width * spec.well_width)).exp();
        let (base, profile) = (0..grid.len())
            .map(|i| {
                let y = grid.centered(i);
                let wells = -spec.well_depth * (g(y - half) + g(y + half));
                let barrier = (-y * y / (2.0 * spec.barrier_width * spec.barrier_width)).exp();
                (wells, barrier)
            })
            .unzip();
        Ok(SplitPotential { base, profile })
    }

    pub fn at(&self, barrier: f64) -> Vec<f64> {
        self.base
            .iter()
            .zip(&self.profile)
            .map(|(b, p)| b + barrier * p)
            .collect()
    }
}

/// Samples of the double well with central barrier height `barrier`.
pub fn build_double_well(grid: &SpatialGrid, spec: &DoubleWellSpec, barrier: f64) -> Result<Vec<f64>> {
    check_barrier(barrier)?;
    Ok(SplitPotential::new(grid, spec)?.at(barrier))
}

/// Index of the left-well minimum (the right one is its mirror image).
pub fn left_minimum_index(grid: &SpatialGrid, v: &[f64]) -> usize {
    (1..grid.len() / 2)
        .min_by(|&a, &b| v[a].total_cmp(&v[b]))
        .unwrap_or(0)
}

/// Barrier lowered from `high` to `low`, held, and raised again, with
/// half-cosine ramps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BarrierTimeline {
    pub ramp_down: f64,
    pub hold: f64,
    pub ramp_up: f64,
    pub high: f64,
    pub low: f64,
}

impl Default for BarrierTimeline {
    /// Ramps matched to [`DoubleWellSpec::default`]; the hold is left to
    /// calibration.
    fn default() -> Self {
        BarrierTimeline {
            ramp_down: 10.0,
            hold: 0.0,
            ramp_up: 10.0,
            high: 30.0,
            low: 0.0,
        }
    }
}

/// Phases of a [`BarrierTimeline`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    RampDown,
    Hold,
    RampUp,
}

impl BarrierTimeline {
    pub fn validate(&self) -> Result<()> {
        for (name, d) in [("ramp_down", self.ramp_down), ("hold", self.hold), ("ramp_up", self.ramp_up)] {
            if !(d.is_finite() && d >= 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "{name} duration must be non-negative, got {d}"
                )));
            }
        }
        check_barrier(self.high)?;
        check_barrier(self.low)
    }

    pub fn with_hold(&self, hold: f64) -> Self {
        BarrierTimeline { hold, ..*self }
    }

    pub fn duration(&self) -> f64 {
        self.ramp_down + self.hold + self.ramp_up
    }

    /// `(phase, start time, length)` for each phase in order.
    pub fn phases(&self) -> [(Phase, f64, f64); 3] {
        [
            (Phase::RampDown, 0.0, self.ramp_down),
            (Phase::Hold, self.ramp_down, self.hold),
            (Phase::RampUp, self.ramp_down + self.hold, self.ramp_up),
        ]
    }

    /// Barrier height at local time `s` within `phase`.
    pub fn phase_barrier(&self, phase: Phase, s: f64) -> f64 {
        let blend = |u: f64| 0.5 * (1.0 - (PI * u.clamp(0.0, 1.0)).cos());
        match phase {
            Phase::RampDown if self.ramp_down > 0.0 => {
                self.high + (self.low - self.high) * blend(s / self.ramp_down)
            }
            Phase::RampDown | Phase::Hold => self.low,
            Phase::RampUp if self.ramp_up > 0.0 => self.low + (self.high - self.low) * blend(s / self.ramp_up),
            Phase::RampUp => self.high,
        }
    }

    /// Barrier height at time `t`, clamped to the timeline ends.
    pub fn barrier_at(&self, t: f64) -> f64 {
        if t < self.ramp_down {
            self.phase_barrier(Phase::RampDown, t)
        } else if t <= self.ramp_down + self.hold {
            self.low
        } else {
            self.phase_barrier(Phase::RampUp, t - self.ramp_down - self.hold)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tdse::grid::Hamiltonian;
    use nalgebra::SymmetricEigen;

    fn grid() -> SpatialGrid {
        SpatialGrid::new(-10.0, 10.0, 128).unwrap()
    }

    fn splitting(grid: &SpatialGrid, spec: &DoubleWellSpec, barrier: f64) -> f64 {
        let v = build_double_well(grid, spec, barrier).unwrap();
        let eig = SymmetricEigen::new(Hamiltonian::new(grid, v).unwrap().dense());
        let mut e: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e[1] - e[0]
    }

    #[test]
    fn potential_is_mirror_symmetric() {
        let g = grid();
        let spec = DoubleWellSpec::default();
        let v = build_double_well(&g, &spec, 5.0).unwrap();
        for i in 0..g.len() {
            assert!((v[i] - v[g.mirror_index(i)]).abs() <= 1e-14);
            assert!(v[i].is_finite());
        }
        let l = left_minimum_index(&g, &v);
        assert!(g.centered(l) < 0.0);
        assert!((g.centered(l) + spec.well_separation / 2.0).abs() < 0.5);
    }

    #[test]
    fn barrier_controls_central_maximum() {
        let g = grid();
        let spec = DoubleWellSpec::default();
        let mid = g.len() / 2;
        let v0 = build_double_well(&g, &spec, 0.0).unwrap();
        let v1 = build_double_well(&g, &spec, 4.0).unwrap();
        assert!((v1[mid] - v0[mid] - 4.0).abs() < 1e-12);
        assert!(build_double_well(&g, &spec, -1.0).is_err());
    }

    #[test]
    fn touching_wells_without_barrier_form_one_minimum() {
        let g = grid();
        let spec = DoubleWellSpec {
            well_separation: 1.4,
            well_width: 0.7,
            ..DoubleWellSpec::default()
        };
        let v = build_double_well(&g, &spec, 0.0).unwrap();
        let minima = (1..g.len() - 1).filter(|&i| v[i] < v[i - 1] && v[i] <= v[i + 1]).count();
        assert_eq!(minima, 1);
    }

    #[test]
    fn tall_barrier_decouples_the_wells() {
        let g = grid();
        let spec = DoubleWellSpec::default();
        let mut last = f64::INFINITY;
        for barrier in [0.0, 10.0, 40.0, 100.0, 200.0] {
            let d = splitting(&g, &spec, barrier);
            assert!(d < last);
            last = d;
        }
        assert!(last < 1e-6, "splitting {last:e}");
    }

    #[test]
    fn timeline_profile() {
        let tl = BarrierTimeline {
            ramp_down: 2.0,
            hold: 3.0,
            ramp_up: 4.0,
            high: 10.0,
            low: 1.0,
        };
        assert_eq!(tl.duration(), 9.0);
        assert_eq!(tl.barrier_at(0.0), 10.0);
        assert!((tl.barrier_at(1.0) - 5.5).abs() < 1e-12);
        assert_eq!(tl.barrier_at(2.0), 1.0);
        assert_eq!(tl.barrier_at(4.0), 1.0);
        assert!((tl.barrier_at(7.0) - 5.5).abs() < 1e-12);
        assert_eq!(tl.barrier_at(9.0), 10.0);
        // continuity at the joins
        for t in [2.0, 5.0] {
            assert!((tl.barrier_at(t - 1e-9) - tl.barrier_at(t + 1e-9)).abs() < 1e-6);
        }
        assert!(tl.with_hold(-1.0).validate().is_err());
    }
}
