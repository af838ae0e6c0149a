//! Chebyshev expansion of the short-time propagator `exp(-i H dt)`.
//!
//! With `H~ = (2H - e_max - e_min) / (e_max - e_min)` and
//! `alpha = (e_max - e_min) dt / 2`,
//!
//! ```text
//! exp(-i H dt) = exp(-i (e_max + e_min) dt / 2) * sum_n c_n J_n(alpha) phi_n
//! ```
//!
//! where `c_0 = 1`, `c_n = 2` otherwise, and `phi_n = (-i)^n T_n(H~) psi`
//! obeys `phi_{n+1} = -2i H~ phi_n + phi_{n-1}`.

use serde::{Deserialize, Serialize};

use super::grid::{energy_bounds, Hamiltonian, SpatialGrid, WaveFunction};
use crate::error::{Error, Result};
use crate::linalg::C64;

pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-14;

/// Largest number of expansion terms allowed beyond `|alpha|`.
pub const MAX_TAIL_TERMS: usize = 60;

/// Relative norm growth that signals an expansion outside its spectral bounds.
pub const NORM_GROWTH_LIMIT: f64 = 1e-8;

/// Bessel functions of the first kind `J_0(x) ..= J_{n_max}(x)` by Miller's
/// backward recurrence, normalized with `J_0 + 2 sum_k J_{2k} = 1`.
pub fn bessel_j_sequence(x: f64, n_max: usize) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let top = (n_max as f64).max(ax);
    // Start well above both the requested order and the turning point.
    let mut start = (top + 40.0 + 10.0 * top.sqrt()).ceil() as usize;
    start += start % 2;

    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-300; // J_k
    let mut norm = 0.0;
    for k in (1..=start).rev() {
        let prev = 2.0 * k as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        // cur now holds J_{k-1}
        let idx = k - 1;
        if idx <= n_max {
            out[idx] = cur;
        }
        if idx % 2 == 0 {
            norm += if idx == 0 { cur } else { 2.0 * cur };
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            for v in out.iter_mut().skip(idx) {
                *v *= 1e-250;
            }
        }
    }
    for v in &mut out {
        *v /= norm;
    }
    if x < 0.0 {
        for (n, v) in out.iter_mut().enumerate() {
            if n % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// Time step and spectral window of one Chebyshev propagation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevParams {
    pub dt: f64,
    pub e_min: f64,
    pub e_max: f64,
    pub tail_tolerance: f64,
}

impl ChebyshevParams {
    pub fn new(dt: f64, e_min: f64, e_max: f64, tail_tolerance: f64) -> Result<Self> {
        let p = ChebyshevParams {
            dt,
            e_min,
            e_max,
            tail_tolerance,
        };
        p.validate()?;
        Ok(p)
    }

    /// Bounds taken from [`energy_bounds`] for a static potential.
    pub fn for_potential(grid: &SpatialGrid, v: &[f64], dt: f64) -> Result<Self> {
        let (e_min, e_max) = energy_bounds(grid, v);
        Self::new(dt, e_min, e_max, DEFAULT_TAIL_TOLERANCE)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e_min.is_finite() && self.e_max.is_finite() && self.e_max > self.e_min) {
            return Err(Error::InvalidArgument(format!(
                "spectral bounds must satisfy e_min < e_max, got [{}, {}]",
                self.e_min, self.e_max
            )));
        }
        if !self.dt.is_finite() {
            return Err(Error::InvalidArgument(format!("time step {} is not finite", self.dt)));
        }
        if !(self.tail_tolerance > 0.0 && self.tail_tolerance <= 1e-8) {
            return Err(Error::InvalidArgument(format!(
                "tail tolerance must lie in (0, 1e-8], got {}",
                self.tail_tolerance
            )));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        (self.e_max - self.e_min) * self.dt / 2.0
    }

    pub fn with_dt(&self, dt: f64) -> Self {
        ChebyshevParams { dt, ..*self }
    }
}

/// Precomputed expansion coefficients for one `(dt, e_min, e_max)`.
#[derive(Debug, Clone)]
pub struct ChebyshevPropagator {
    params: ChebyshevParams,
    coeffs: Vec<f64>,
    phase: C64,
}

impl ChebyshevPropagator {
    pub fn new(params: ChebyshevParams) -> Result<Self> {
        params.validate()?;
        let alpha = params.alpha();
        let cap = alpha.abs().ceil() as usize + MAX_TAIL_TERMS;
        let j = bessel_j_sequence(alpha, cap);
        let n_max = (0..=cap)
            .find(|&n| n as f64 > alpha.abs() && j[n].abs() < params.tail_tolerance)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "Bessel tail above {} after {cap} terms (alpha = {alpha}); shorten the time step",
                    params.tail_tolerance
                ))
            })?;
        debug_assert!(n_max as f64 <= alpha.abs() + MAX_TAIL_TERMS as f64);
        let coeffs = j[..=n_max]
            .iter()
            .enumerate()
            .map(|(n, &jn)| if n == 0 { jn } else { 2.0 * jn })
            .collect();
        let phase = C64::from_polar(1.0, -(params.e_max + params.e_min) * params.dt / 2.0);
        Ok(ChebyshevPropagator {
            params,
            coeffs,
            phase,
        })
    }

    pub fn params(&self) -> &ChebyshevParams {
        &self.params
    }

    /// Highest polynomial degree kept.
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Checks that `h` lies inside the spectral window.
    pub fn check_bounds(&self, h: &Hamiltonian) -> Result<()> {
        let (lo, hi) = energy_bounds(h.grid(), h.potential());
        let slack = 1e-12 * (self.params.e_max - self.params.e_min);
        if lo < self.params.e_min - slack || hi > self.params.e_max + slack {
            return Err(Error::SpectralBounds(format!(
                "spectrum bound [{lo}, {hi}] exceeds window [{}, {}]",
                self.params.e_min, self.params.e_max
            )));
        }
        Ok(())
    }

    /// Advances `psi` by one step in place.
    pub fn step(&self, h: &Hamiltonian, psi: &mut [C64]) -> Result<()> {
        self.check_bounds(h)?;
        self.step_unchecked(h, psi)
    }

    /// Advances without checking the potential against the window; norm
    /// growth still fails the step.
    pub(crate) fn step_unchecked(&self, h: &Hamiltonian, psi: &mut [C64]) -> Result<()> {
        let m = psi.len();
        let width = self.params.e_max - self.params.e_min;
        let a = 2.0 / width;
        let b = -(self.params.e_max + self.params.e_min) / width;
        let before: f64 = psi.iter().map(|z| z.norm_sqr()).sum();

        // -i H~ applied to `src`, written to `dst`
        let minus_i = C64::new(0.0, -1.0);
        let apply = |src: &[C64], dst: &mut [C64]| {
            h.apply_into(src, dst);
            for (d, s) in dst.iter_mut().zip(src) {
                *d = minus_i * (*d * a + s * b);
            }
        };

        let mut prev = psi.to_vec();
        let mut cur = vec![C64::new(0.0, 0.0); m];
        let mut acc: Vec<C64> = prev.iter().map(|z| z * self.coeffs[0]).collect();
        if self.coeffs.len() > 1 {
            apply(&prev, &mut cur);
            for (s, c) in acc.iter_mut().zip(&cur) {
                *s += c * self.coeffs[1];
            }
        }
        let mut next = vec![C64::new(0.0, 0.0); m];
        for &cn in &self.coeffs[2.min(self.coeffs.len())..] {
            apply(&cur, &mut next);
            for ((nx, p), s) in next.iter_mut().zip(&prev).zip(acc.iter_mut()) {
                *nx = *nx * 2.0 + p;
                *s += *nx * cn;
            }
            std::mem::swap(&mut prev, &mut cur);
            std::mem::swap(&mut cur, &mut next);
        }

        let after: f64 = acc.iter().map(|z| z.norm_sqr()).sum();
        if after.sqrt() > before.sqrt() * (1.0 + NORM_GROWTH_LIMIT) {
            return Err(Error::SpectralBounds(format!(
                "norm grew by a factor {} in one step",
                (after / before).sqrt()
            )));
        }
        for (p, s) in psi.iter_mut().zip(acc) {
            *p = s * self.phase;
        }
        Ok(())
    }
}

/// One step of `exp(-i H dt)` for the static potential `v`.
pub fn chebyshev_step(
    psi: &WaveFunction,
    v: &[f64],
    grid: &SpatialGrid,
    params: &ChebyshevParams,
) -> Result<WaveFunction> {
    let h = Hamiltonian::new(grid, v.to_vec())?;
    if psi.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: psi.len(),
        });
    }
    let prop = ChebyshevPropagator::new(*params)?;
    let mut out = psi.amplitudes().to_vec();
    prop.step(&h, &mut out)?;
    Ok(WaveFunction::from_raw(out, grid.dx()))
}
