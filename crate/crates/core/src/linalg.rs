//! Small dense complex linear-algebra helpers shared by the walk, synthesis
//! and conveyor modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

/// Orthogonality tolerance for stored coins and stage rotations.
pub const UNITARY_TOL: f64 = 1e-12;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// `max |U^dag U - I|` over all entries. Non-square input returns infinity.
pub fn unitarity_deviation(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    let gram = u.adjoint() * u;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let expected = if i == j { ONE } else { ZERO };
            worst = worst.max((gram[(i, j)] - expected).norm());
        }
    }
    worst
}

pub fn ensure_unitary(u: &CMatrix, tol: f64) -> Result<()> {
    let deviation = unitarity_deviation(u);
    if deviation < tol {
        Ok(())
    } else {
        Err(Error::NotUnitary { deviation })
    }
}

/// Largest entrywise modulus of `a - b`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn max_abs_diff_slice(a: &[C64], b: &[C64]) -> f64 {
    assert_eq!(a.len(), b.len(), "length mismatch");
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Full SVD `m = U diag(s) V^dag` of a square matrix by one-sided Jacobi
/// rotations, returned as `(U, s, V^dag)` with `s` descending. Used instead
/// of nalgebra's bidiagonal SVD, which can return wrong factors for blocks
/// with clustered or exactly vanishing singular values.
pub fn jacobi_svd(m: &CMatrix) -> (CMatrix, Vec<f64>, CMatrix) {
    assert!(m.is_square(), "jacobi_svd expects a square matrix");
    let n = m.nrows();
    let mut a = m.clone();
    let mut v = CMatrix::identity(n, n);
    // columns below this squared norm count as converged against any other
    let negligible = (1e-17 * m.norm()).powi(2).max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if g <= 1e-15 * (alpha * beta).sqrt() || alpha.min(beta) <= negligible {
                    continue;
                }
                rotated = true;
                // phase column q so that the overlap is real and positive
                let phase = gamma.conj() / g;
                let phase = phase / phase.norm();
                for i in 0..n {
                    a[(i, q)] *= phase;
                    v[(i, q)] *= phase;
                }
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for mat in [&mut a, &mut v] {
                    for i in 0..n {
                        let (xp, xq) = (mat[(i, p)], mat[(i, q)]);
                        mat[(i, p)] = xp * c - xq * sn;
                        mat[(i, q)] = xp * sn + xq * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = (0..n).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let cutoff = 1e-14 * norms.iter().copied().fold(f64::MIN_POSITIVE, f64::max);

    let mut u = CMatrix::zeros(n, n);
    let mut v_sorted = CMatrix::zeros(n, n);
    let mut s = vec![0.0; n];
    let mut filled = 0;
    for (k, &j) in order.iter().enumerate() {
        v_sorted.set_column(k, &v.column(j));
        if norms[j] > cutoff {
            s[k] = norms[j];
            u.set_column(k, &a.column(j).unscale(norms[j]));
            filled = k + 1;
        }
    }
    // vanishing singular values: any orthonormal completion of U will do
    for k in filled..n {
        let mut best = DVector::<C64>::zeros(n);
        let mut best_norm = -1.0;
        for e in 0..n {
            let mut cand = DVector::<C64>::zeros(n);
            cand[e] = ONE;
            for _ in 0..2 {
                for j in 0..k {
                    let coeff = u.column(j).dotc(&cand);
                    cand -= u.column(j) * coeff;
                }
            }
            let norm = cand.norm();
            if norm > best_norm {
                best_norm = norm;
                best = cand;
            }
        }
        u.set_column(k, &best.unscale(best_norm));
    }
    (u, s, v_sorted.adjoint())
}

/// Nearest unitary in the Frobenius sense (unitary polar factor).
pub fn polar_unitary(m: &CMatrix) -> CMatrix {
    let (u, _, v_t) = jacobi_svd(m);
    u * v_t
}

/// Haar-distributed random unitary via QR of a complex Ginibre matrix with
/// the diagonal phases of R divided out.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    let z = CMatrix::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) / std::f64::consts::SQRT_2
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Random unit vector with complex Gaussian entries.
pub fn random_unit_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DVector<C64> {
    let v = DVector::from_fn(n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im)
    });
    let norm = v.norm();
    v / C64::from(norm)
}

pub fn is_power_of_two(n: usize) -> bool {
    n != 0 && n & (n - 1) == 0
}
