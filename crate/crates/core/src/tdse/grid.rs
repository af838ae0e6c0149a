//! Periodic 1D grid, normalized wavefunctions and the Fourier-spectral
//! Hamiltonian `-(1/2) d^2/dx^2 + V` (hbar = m = 1).

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::C64;

/// Normalization tolerance for [`WaveFunction`].
pub const WAVE_NORM_TOL: f64 = 1e-12;

/// `m` equally spaced points `x_i = x_min + i dx`, `dx = (x_max - x_min) / m`,
/// with `x_max` identified with `x_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialGrid {
    x_min: f64,
    x_max: f64,
    m: usize,
}

impl SpatialGrid {
    pub fn new(x_min: f64, x_max: f64, m: usize) -> Result<Self> {
        if m < 16 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 16 points, got {m}"
            )));
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::InvalidArgument(format!(
                "grid bounds must satisfy x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        Ok(SpatialGrid { x_min, x_max, m })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.m as f64
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.x(i)).collect()
    }

    /// Offset of point `i` from the grid midpoint, `(i - m/2) dx`. Exactly
    /// antisymmetric under [`SpatialGrid::mirror_index`] for even `m`.
    pub fn centered(&self, i: usize) -> f64 {
        (i as f64 - self.m as f64 / 2.0) * self.dx()
    }

    /// Reflection about the midpoint: `i -> (m - i) mod m`.
    pub fn mirror_index(&self, i: usize) -> usize {
        (self.m - i) % self.m
    }

    pub fn k_max(&self) -> f64 {
        PI / self.dx()
    }

    /// Squared wavenumbers in FFT order. The unpaired Nyquist mode of an even
    /// grid gets `(pi/dx)^2`.
    pub fn wavenumbers_sqr(&self) -> Vec<f64> {
        let m = self.m as i64;
        let dk = 2.0 * PI / self.length();
        (0..m)
            .map(|j| {
                let kj = if j <= m / 2 { j } else { j - m };
                let k = dk * kj as f64;
                k * k
            })
            .collect()
    }
}

/// Samples of a wavefunction with `sum |psi_i|^2 dx = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    psi: Vec<C64>,
    dx: f64,
}

impl WaveFunction {
    /// Rescales arbitrary nonzero samples to unit norm.
    pub fn normalized(grid: &SpatialGrid, samples: Vec<C64>) -> Result<Self> {
        check_len(grid, samples.len())?;
        let dx = grid.dx();
        let norm_sqr: f64 = samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx;
        if !(norm_sqr.is_finite() && norm_sqr > 0.0) {
            return Err(Error::NotNormalized { norm_sqr });
        }
        let scale = 1.0 / norm_sqr.sqrt();
        Ok(WaveFunction {
            psi: samples.into_iter().map(|z| z * scale).collect(),
            dx,
        })
    }

    /// Wraps samples that must already be normalized within [`WAVE_NORM_TOL`].
    pub fn from_samples(grid: &SpatialGrid, samples: Vec<C64>) -> Result<Self> {
        check_len(grid, samples.len())?;
        let wf = WaveFunction::from_raw(samples, grid.dx());
        let norm_sqr = wf.norm_sqr();
        if (norm_sqr - 1.0).abs() > WAVE_NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(wf)
    }

    pub(crate) fn from_raw(psi: Vec<C64>, dx: f64) -> Self {
        WaveFunction { psi, dx }
    }

    pub fn len(&self) -> usize {
        self.psi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.psi.is_empty()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.psi
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.psi
    }

    pub fn norm_sqr(&self) -> f64 {
        self.psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx
    }

    /// `<self|other> = sum conj(self_i) other_i dx`.
    pub fn inner(&self, other: &WaveFunction) -> C64 {
        assert_eq!(self.len(), other.len(), "wavefunction length mismatch");
        self.psi
            .iter()
            .zip(&other.psi)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            * self.dx
    }

    /// Probability of finding the particle at `x < midpoint`.
    pub fn left_probability(&self) -> f64 {
        let half = self.psi.len() / 2;
        self.psi[..half].iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dx
    }
}

fn check_len(grid: &SpatialGrid, found: usize) -> Result<()> {
    if found != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found,
        });
    }
    Ok(())
}

/// `H = -(1/2) d^2/dx^2 + V` on a periodic grid, applied with FFTs.
#[derive(Clone)]
pub struct Hamiltonian {
    grid: SpatialGrid,
    v: Vec<f64>,
    half_k2: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Hamiltonian {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Hamiltonian")
            .field("grid", &self.grid)
            .field("v", &self.v)
            .finish_non_exhaustive()
    }
}

impl Hamiltonian {
    pub fn new(grid: &SpatialGrid, v: Vec<f64>) -> Result<Self> {
        check_len(grid, v.len())?;
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "potential is not finite at grid point {i}"
            )));
        }
        let mut planner = FftPlanner::new();
        Ok(Hamiltonian {
            grid: *grid,
            half_k2: grid.wavenumbers_sqr().into_iter().map(|k2| 0.5 * k2).collect(),
            forward: planner.plan_fft_forward(grid.len()),
            inverse: planner.plan_fft_inverse(grid.len()),
            v,
        })
    }

    pub fn grid(&self) -> &SpatialGrid {
        &self.grid
    }

    pub fn potential(&self) -> &[f64] {
        &self.v
    }

    /// Replaces the potential, keeping the FFT plans.
    pub fn set_potential(&mut self, v: Vec<f64>) -> Result<()> {
        check_len(&self.grid, v.len())?;
        self.v = v;
        Ok(())
    }

    /// `out = H psi`. `out` is also used as FFT scratch space.
    pub fn apply_into(&self, psi: &[C64], out: &mut [C64]) {
        let m = self.grid.len();
        assert_eq!(psi.len(), m, "wavefunction length mismatch");
        assert_eq!(out.len(), m, "output length mismatch");
        out.copy_from_slice(psi);
        self.forward.process(out);
        let scale = 1.0 / m as f64;
        for (z, &t) in out.iter_mut().zip(&self.half_k2) {
            *z *= t * scale;
        }
        self.inverse.process(out);
        for ((z, &p), &v) in out.iter_mut().zip(psi).zip(&self.v) {
            *z += p * v;
        }
    }

    pub fn apply(&self, psi: &[C64]) -> Vec<C64> {
        let mut out = vec![C64::new(0.0, 0.0); psi.len()];
        self.apply_into(psi, &mut out);
        out
    }

    /// `<psi|H|psi>` for a normalized wavefunction.
    pub fn expectation(&self, psi: &WaveFunction) -> f64 {
        let h = self.apply(psi.amplitudes());
        psi.amplitudes()
            .iter()
            .zip(&h)
            .map(|(a, b)| (a.conj() * b).re)
            .sum::<f64>()
            * psi.dx()
    }

    /// The same operator as a dense real symmetric matrix, from the closed
    /// form of the periodic spectral second-derivative matrix.
    pub fn dense(&self) -> DMatrix<f64> {
        let m = self.grid.len();
        let h = 2.0 * PI / m as f64;
        let scale = (2.0 * PI / self.grid.length()).powi(2);
        DMatrix::from_fn(m, m, |i, j| {
            let d2 = if i == j {
                -PI * PI / (3.0 * h * h) - 1.0 / 6.0
            } else {
                let diff = i.abs_diff(j);
                let sign = if diff % 2 == 0 { 1.0 } else { -1.0 };
                let s = (diff as f64 * h / 2.0).sin();
                -sign / (2.0 * s * s)
            };
            let kinetic = -0.5 * scale * d2;
            if i == j {
                kinetic + self.v[i]
            } else {
                kinetic
            }
        })
    }
}

/// `(-(1/2) d^2/dx^2 + V) psi` without normalization.
pub fn apply_hamiltonian(psi: &WaveFunction, v: &[f64], grid: &SpatialGrid) -> Result<Vec<C64>> {
    check_len(grid, psi.len())?;
    let h = Hamiltonian::new(grid, v.to_vec())?;
    Ok(h.apply(psi.amplitudes()))
}

/// `(min V, max V + k_max^2 / 2)`, which brackets the spectrum of the
/// discretized Hamiltonian.
pub fn energy_bounds(grid: &SpatialGrid, v: &[f64]) -> (f64, f64) {
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let k = grid.k_max();
    (lo, hi + 0.5 * k * k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(m: usize) -> SpatialGrid {
        SpatialGrid::new(-8.0, 8.0, m).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(SpatialGrid::new(0.0, 1.0, 8).is_err());
        assert!(SpatialGrid::new(1.0, 1.0, 32).is_err());
        let g = SpatialGrid::new(-1.0, 1.0, 16).unwrap();
        assert_eq!(g.dx(), 0.125);
        assert_eq!(g.mirror_index(0), 0);
        assert_eq!(g.mirror_index(3), 13);
        assert_eq!(g.centered(3), -g.centered(13));
    }

    #[test]
    fn plane_wave_is_eigenvector() {
        let g = grid(64);
        for mode in [0i32, 1, 5, -7, 31] {
            let k = 2.0 * PI * mode as f64 / g.length();
            let samples: Vec<C64> = g.points().iter().map(|&x| C64::from_polar(1.0, k * x)).collect();
            let psi = WaveFunction::normalized(&g, samples).unwrap();
            let h = apply_hamiltonian(&psi, &vec![0.0; 64], &g).unwrap();
            for (hz, z) in h.iter().zip(psi.amplitudes()) {
                assert!((hz - z * (0.5 * k * k)).norm() < 1e-10, "mode {mode}");
            }
        }
    }

    #[test]
    fn constant_state_in_constant_potential() {
        let g = grid(32);
        let psi = WaveFunction::normalized(&g, vec![C64::new(1.0, 0.0); 32]).unwrap();
        let h = apply_hamiltonian(&psi, &vec![2.5; 32], &g).unwrap();
        for (hz, z) in h.iter().zip(psi.amplitudes()) {
            assert!((hz - z * 2.5).norm() < 1e-12);
        }
    }

    #[test]
    fn harmonic_ground_energy() {
        let omega = 1.3;
        let g = SpatialGrid::new(-10.0, 10.0, 128).unwrap();
        let v: Vec<f64> = g.points().iter().map(|x| 0.5 * omega * omega * x * x).collect();
        let h = Hamiltonian::new(&g, v).unwrap();
        let eig = SymmetricEigen::new(h.dense());
        let e0 = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        assert!((e0 - 0.5 * omega).abs() < 1e-6, "E0 = {e0}");
    }

    #[test]
    fn dense_matrix_matches_fft_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for m in [16, 32, 64] {
            let g = grid(m);
            let v: Vec<f64> = (0..m).map(|_| rng.random_range(-3.0..3.0)).collect();
            let h = Hamiltonian::new(&g, v).unwrap();
            let dense = h.dense();
            for col in 0..m {
                let mut e = vec![C64::new(0.0, 0.0); m];
                e[col] = C64::new(1.0, 0.0);
                let applied = h.apply(&e);
                for row in 0..m {
                    assert!((applied[row] - dense[(row, col)]).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn bounds_examples_and_bracketing() {
        let g = SpatialGrid::new(0.0, 32.0, 32).unwrap();
        let (lo, hi) = energy_bounds(&g, &[0.0; 32]);
        assert_eq!(lo, 0.0);
        assert!((hi - PI * PI / 2.0).abs() < 1e-14);
        let (lo, hi) = energy_bounds(&g, &[1.5; 32]);
        assert_eq!(lo, 1.5);
        assert!((hi - 1.5 - PI * PI / 2.0).abs() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = grid(64);
        for _ in 0..5 {
            let v: Vec<f64> = (0..64).map(|_| rng.random_range(-10.0..10.0)).collect();
            let (lo, hi) = energy_bounds(&g, &v);
            let eig = SymmetricEigen::new(Hamiltonian::new(&g, v).unwrap().dense());
            for &e in eig.eigenvalues.iter() {
                assert!(e >= lo - 1e-10 && e <= hi + 1e-10, "{e} outside [{lo}, {hi}]");
            }
        }
    }

    #[test]
    fn wavefunction_norm_checks() {
        let g = grid(16);
        assert!(WaveFunction::from_samples(&g, vec![C64::new(1.0, 0.0); 16]).is_err());
        assert!(WaveFunction::normalized(&g, vec![C64::new(0.0, 0.0); 16]).is_err());
        assert!(WaveFunction::normalized(&g, vec![C64::new(1.0, 0.0); 15]).is_err());
        let psi = WaveFunction::normalized(&g, vec![C64::new(0.0, 3.0); 16]).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-14);
        assert!((psi.left_probability() - 0.5).abs() < 1e-14);
    }
}
