//! Synthesis of an `n x n` coin into `n - 1` stages of simultaneous,
//! disjoint pairwise rotations.
//!
//! A stage with stride `d` couples the indices `k*d + r` and `k*d + r + d/2`
//! for `k = 0..n/d` and `r = 1..=d/2` (1-based), so every index takes part in
//! exactly one 2x2 rotation. The schedule comes from a recursive
//! cosine-sine decomposition
//!
//! ```text
//!     U = [L0    ] [C -S] [R0    ]
//!         [    L1] [S  C] [    R1]
//! ```
//!
//! where the middle factor is one stage with `d = n` and the block-diagonal
//! factors recurse on the two halves in parallel. Stage counts obey
//! `stages(n) = 2 stages(n/2) + 1` with `stages(2) = 1`, i.e. `n - 1`, and the
//! strides follow the ruler sequence `2, 4, 2, 8, 2, 4, 2, ...`. The 2x2
//! blocks at the leaves are general unitaries, which absorbs every phase of
//! the recursion without separate diagonal stages.
//!
//! Stages are stored in *application* order: the first stage acts first on
//! the vector, and `U = S_{n-1} ... S_2 S_1`.

use nalgebra::{DMatrix, Matrix2};

use crate::error::{Error, Result};
use crate::linalg::{
    jacobi_svd, ensure_unitary, is_power_of_two, polar_unitary, unitarity_deviation, CMatrix, C64, ONE, UNITARY_TOL, ZERO,
};

/// Accepted `max |U^dag U - I|` for matrices handed to [`cs_decompose`].
pub const INPUT_UNITARY_TOL: f64 = 1e-10;

pub type Unitary2 = Matrix2<C64>;

/// A 2x2 unitary acting on the (1-based) index pair `(a, b)`, `a < b`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairRotation {
    pub a: usize,
    pub b: usize,
    pub u: Unitary2,
}

impl PairRotation {
    pub fn new(a: usize, b: usize, u: Unitary2) -> Result<Self> {
        if a == 0 || a >= b {
            return Err(Error::InvalidArgument(format!(
                "pair ({a}, {b}) must satisfy 1 <= a < b"
            )));
        }
        let dev = unitarity_deviation(&CMatrix::from_iterator(2, 2, u.iter().copied()));
        if dev >= UNITARY_TOL {
            return Err(Error::NotUnitary { deviation: dev });
        }
        Ok(Self { a, b, u })
    }

    fn act(&self, line: &mut [C64]) {
        let (xa, xb) = (line[self.a - 1], line[self.b - 1]);
        line[self.a - 1] = self.u[(0, 0)] * xa + self.u[(0, 1)] * xb;
        line[self.b - 1] = self.u[(1, 0)] * xa + self.u[(1, 1)] * xb;
    }
}

/// The `n/2` index pairs of a stage with stride `d`, sorted by first index.
pub fn stage_pairs(n: usize, d: usize) -> Result<Vec<(usize, usize)>> {
    if !is_power_of_two(n) || n < 2 {
        return Err(Error::InvalidArgument(format!(
            "dimension {n} is not a power of two >= 2"
        )));
    }
    if !is_power_of_two(d) || d < 2 || d > n {
        return Err(Error::InvalidArgument(format!(
            "stride {d} is not an even power-of-two divisor of {n}"
        )));
    }
    let half = d / 2;
    let mut pairs = Vec::with_capacity(n / 2);
    for k in 0..n / d {
        for r in 1..=half {
            pairs.push((k * d + r, k * d + r + half));
        }
    }
    pairs.sort_unstable();
    Ok(pairs)
}

/// One layer of simultaneous pair rotations.
#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    d: usize,
    rotations: Vec<PairRotation>,
}

impl Stage {
    /// Validates that the rotations cover exactly the stride-`d` pattern.
    pub fn new(n: usize, d: usize, mut rotations: Vec<PairRotation>) -> Result<Self> {
        let expected = stage_pairs(n, d)?;
        rotations.sort_by_key(|r| r.a);
        let found: Vec<(usize, usize)> = rotations.iter().map(|r| (r.a, r.b)).collect();
        if found != expected {
            return Err(Error::InvalidArgument(format!(
                "stage pairs {found:?} do not follow the stride-{d} pattern {expected:?}"
            )));
        }
        Ok(Self { d, rotations })
    }

    /// Stage of identity rotations.
    pub fn identity(n: usize, d: usize) -> Result<Self> {
        let rotations = stage_pairs(n, d)?
            .into_iter()
            .map(|(a, b)| PairRotation { a, b, u: Unitary2::identity() })
            .collect();
        Ok(Self { d, rotations })
    }

    pub fn stride(&self) -> usize {
        self.d
    }

    pub fn rotations(&self) -> &[PairRotation] {
        &self.rotations
    }

    /// Logical dimension of the line the stage acts on.
    pub fn dimension(&self) -> usize {
        2 * self.rotations.len()
    }

    /// Applies every rotation in place. Pairs are disjoint, so order is
    /// irrelevant.
    pub fn apply(&self, line: &mut [C64]) {
        assert_eq!(line.len(), self.dimension(), "line length does not match stage");
        for rot in &self.rotations {
            rot.act(line);
        }
    }

    /// The stage as a dense `n x n` matrix: a direct sum of its 2x2 blocks
    /// placed on their index pairs.
    pub fn matrix(&self) -> CMatrix {
        let n = self.dimension();
        let mut m = CMatrix::zeros(n, n);
        for rot in &self.rotations {
            let (a, b) = (rot.a - 1, rot.b - 1);
            m[(a, a)] = rot.u[(0, 0)];
            m[(a, b)] = rot.u[(0, 1)];
            m[(b, a)] = rot.u[(1, 0)];
            m[(b, b)] = rot.u[(1, 1)];
        }
        m
    }
}

/// Returns `stage` applied to `line`.
pub fn apply_stage(line: &[C64], stage: &Stage) -> Vec<C64> {
    let mut out = line.to_vec();
    stage.apply(&mut out);
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageSequence {
    n: usize,
    stages: Vec<Stage>,
}

impl StageSequence {
    pub fn new(n: usize, stages: Vec<Stage>) -> Result<Self> {
        if let Some(bad) = stages.iter().find(|s| s.dimension() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: bad.dimension(),
            });
        }
        Ok(Self { n, stages })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Applies all stages in order.
    pub fn apply(&self, line: &mut [C64]) {
        for stage in &self.stages {
            stage.apply(line);
        }
    }
}

/// `S_last * ... * S_1`; the identity for an empty sequence.
pub fn reconstruct(seq: &StageSequence) -> CMatrix {
    let n = seq.n;
    seq.stages
        .iter()
        .fold(CMatrix::identity(n, n), |acc, stage| stage.matrix() * acc)
}

/// Factors of one cosine-sine split, see the module docs.
#[derive(Clone, Debug)]
pub struct CosSin {
    pub l0: CMatrix,
    pub l1: CMatrix,
    pub r0: CMatrix,
    pub r1: CMatrix,
    /// Angles in `[0, pi/2]`, non-increasing (cosines ascend).
    pub theta: Vec<f64>,
}

impl CosSin {
    /// Multiplies the three factors back together.
    pub fn compose(&self) -> CMatrix {
        let h = self.theta.len();
        let n = 2 * h;
        let mut left = CMatrix::zeros(n, n);
        left.view_mut((0, 0), (h, h)).copy_from(&self.l0);
        left.view_mut((h, h), (h, h)).copy_from(&self.l1);
        let mut right = CMatrix::zeros(n, n);
        right.view_mut((0, 0), (h, h)).copy_from(&self.r0);
        right.view_mut((h, h), (h, h)).copy_from(&self.r1);
        let mut mid = CMatrix::zeros(n, n);
        for (i, &t) in self.theta.iter().enumerate() {
            let (s, c) = t.sin_cos();
            mid[(i, i)] = C64::from(c);
            mid[(i, i + h)] = C64::from(-s);
            mid[(i + h, i)] = C64::from(s);
            mid[(i + h, i + h)] = C64::from(c);
        }
        left * mid * right
    }
}

/// Orthogonalize `v` against the first `count` columns of `basis` (two
/// passes of modified Gram-Schmidt).
fn project_out(v: &mut nalgebra::DVector<C64>, basis: &CMatrix, count: usize) {
    for _ in 0..2 {
        for j in 0..count {
            let q = basis.column(j);
            let coeff = q.dotc(v);
            *v -= q * coeff;
        }
    }
}

/// Unit-norm columns of `m` made orthonormal to each other and to the first
/// `count` columns of `basis`, which grows as columns are accepted.
fn orthonormalize_into(
    m: &CMatrix,
    basis: &mut CMatrix,
    count: &mut usize,
) -> Vec<nalgebra::DVector<C64>> {
    (0..m.ncols())
        .map(|i| {
            let mut v = m.column(i).into_owned();
            project_out(&mut v, basis, *count);
            let q = v.unscale(v.norm());
            basis.set_column(*count, &q);
            *count += 1;
            q
        })
        .collect()
}

/// Completes the first `count` orthonormal columns of `basis` with
/// standard basis vectors, returning the added columns.
fn complement(basis: &CMatrix, count: usize) -> CMatrix {
    let h = basis.nrows();
    let mut full = basis.clone();
    let mut filled = count;
    let mut extra = CMatrix::zeros(h, h - count);
    while filled < h {
        let mut best = nalgebra::DVector::<C64>::zeros(h);
        let mut best_norm = -1.0;
        for e in 0..h {
            let mut cand = nalgebra::DVector::<C64>::zeros(h);
            cand[e] = ONE;
            project_out(&mut cand, &full, filled);
            let cn = cand.norm();
            if cn > best_norm {
                best_norm = cn;
                best = cand;
            }
        }
        let q = best.unscale(best_norm);
        full.set_column(filled, &q);
        extra.set_column(filled - count, &q);
        filled += 1;
    }
    extra
}

/// Cosine-sine split of an even-dimensional unitary.
///
/// The SVD of the top-left block fixes `R0` and the cosines. Directions
/// whose cosine is below `1/sqrt 2` take `L0` from that SVD and `L1` from the
/// normalized columns of `u10 R0^dag`. For the remaining directions the sines
/// are small and clustered, so they come from an SVD of `u10` restricted to
/// that subspace; `R0` is rotated to match and `L0` is re-read from `u00`.
/// Each row of `R1` is read off whichever of `u01` and `u11` carries the
/// larger weight and the result is projected back onto the unitary group.
pub fn cos_sin(u: &CMatrix) -> Result<CosSin> {
    let n = u.nrows();
    if !u.is_square() || n < 2 || n % 2 != 0 {
        return Err(Error::InvalidArgument(format!(
            "cosine-sine split needs an even square matrix, got {}x{}",
            u.nrows(),
            u.ncols()
        )));
    }
    let h = n / 2;
    let u00 = u.view((0, 0), (h, h)).into_owned();
    let u01 = u.view((0, h), (h, h)).into_owned();
    let u10 = u.view((h, 0), (h, h)).into_owned();
    let u11 = u.view((h, h), (h, h)).into_owned();

    let (w, sv, vt) = jacobi_svd(&u00);
    // singular values come out descending; reorder so the cosines ascend.
    let mut order: Vec<usize> = (0..h).collect();
    order.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    let split = order
        .iter()
        .take_while(|&&i| sv[i] < std::f64::consts::FRAC_1_SQRT_2)
        .count();
    let m = h - split;

    let mut l0 = CMatrix::zeros(h, h);
    let mut l1 = CMatrix::zeros(h, h);
    let mut r0 = CMatrix::from_fn(h, h, |r, c| vt[(order[r], c)]);
    let mut cos = vec![0.0; h];
    let mut sin = vec![0.0; h];

    // Large sines: u10 R0^dag has well-separated orthogonal columns.
    let y_a = &u10 * r0.rows(0, split).adjoint();
    let mut basis1 = CMatrix::zeros(h, h);
    let mut count1 = 0;
    for (i, q) in orthonormalize_into(&y_a, &mut basis1, &mut count1)
        .into_iter()
        .enumerate()
    {
        cos[i] = sv[order[i]];
        sin[i] = q.dotc(&y_a.column(i)).re.max(0.0);
        l0.set_column(i, &w.column(order[i]));
        l1.set_column(i, &q);
    }

    if m > 0 {
        // Small sines: SVD of u10 on the remaining subspace, in coordinates
        // of the complement of the columns of L1 chosen so far.
        let k = complement(&basis1, count1);
        let y_b = k.adjoint() * &u10 * r0.rows(split, m).adjoint();
        let (p, sv_b, qt) = jacobi_svd(&y_b);
        let mut order_b: Vec<usize> = (0..m).collect();
        order_b.sort_by(|&i, &j| sv_b[j].total_cmp(&sv_b[i]));
        let p = CMatrix::from_fn(m, m, |r, c| p[(r, order_b[c])]);
        let qt = CMatrix::from_fn(m, m, |r, c| qt[(order_b[r], c)]);
        let r0_b = &qt * r0.rows(split, m);
        r0.rows_mut(split, m).copy_from(&r0_b);
        l1.columns_mut(split, m).copy_from(&(&k * p));

        // u00 R0^dag now has orthogonal columns with norms near one.
        let mut basis0 = CMatrix::zeros(h, h);
        basis0.columns_mut(0, split).copy_from(&l0.columns(0, split));
        let mut count0 = split;
        let m_b = &u00 * r0_b.adjoint();
        for (j, q) in orthonormalize_into(&m_b, &mut basis0, &mut count0)
            .into_iter()
            .enumerate()
        {
            let i = split + j;
            cos[i] = q.dotc(&m_b.column(j)).re.max(0.0);
            sin[i] = sv_b[order_b[j]];
            l0.set_column(i, &q);
        }
    }

    let theta: Vec<f64> = (0..h).map(|i| sin[i].atan2(cos[i])).collect();

    // u01 = -L0 S R1 and u11 = L1 C R1
    let x = l0.adjoint() * &u01;
    let z = l1.adjoint() * &u11;
    let mut r1 = CMatrix::zeros(h, h);
    for i in 0..h {
        let (s, c) = theta[i].sin_cos();
        if s > c {
            r1.set_row(i, &(x.row(i) * C64::from(-1.0 / s)));
        } else {
            r1.set_row(i, &(z.row(i) * C64::from(1.0 / c)));
        }
    }
    let r1 = polar_unitary(&r1);

    Ok(CosSin {
        l0,
        l1,
        r0,
        r1,
        theta,
    })
}

type LocalStage = (usize, Vec<(usize, usize, Unitary2)>);

fn to_unitary2(m: &CMatrix) -> Unitary2 {
    Unitary2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

/// Runs two half-size schedules side by side, the second shifted by `offset`.
fn merge(first: Vec<LocalStage>, second: Vec<LocalStage>, offset: usize) -> Vec<LocalStage> {
    debug_assert_eq!(first.len(), second.len());
    first
        .into_iter()
        .zip(second)
        .map(|((d, mut rots), (d2, other))| {
            debug_assert_eq!(d, d2);
            rots.extend(other.into_iter().map(|(a, b, u)| (a + offset, b + offset, u)));
            (d, rots)
        })
        .collect()
}

fn decompose_block(u: &CMatrix) -> Result<Vec<LocalStage>> {
    let n = u.nrows();
    if n == 2 {
        return Ok(vec![(2, vec![(0, 1, to_unitary2(u))])]);
    }
    let h = n / 2;
    let cs = cos_sin(u)?;
    let middle: Vec<(usize, usize, Unitary2)> = cs
        .theta
        .iter()
        .enumerate()
        .map(|(r, &t)| {
            let (s, c) = t.sin_cos();
            let rot = Unitary2::new(C64::from(c), C64::from(-s), C64::from(s), C64::from(c));
            (r, r + h, rot)
        })
        .collect();
    let mut stages = merge(decompose_block(&cs.r0)?, decompose_block(&cs.r1)?, h);
    stages.push((n, middle));
    stages.extend(merge(decompose_block(&cs.l0)?, decompose_block(&cs.l1)?, h));
    Ok(stages)
}

/// Decomposes a unitary of power-of-two dimension `n >= 2` into `n - 1`
/// stages whose ordered product reproduces it.
pub fn cs_decompose(u: &CMatrix) -> Result<StageSequence> {
    let n = u.nrows();
    if !u.is_square() {
        return Err(Error::InvalidArgument(format!(
            "expected a square matrix, got {}x{}",
            u.nrows(),
            u.ncols()
        )));
    }
    if n < 2 || !is_power_of_two(n) {
        return Err(Error::InvalidArgument(format!(
            "dimension {n} is not a power of two >= 2; pad with `pad_to_power_of_two` first"
        )));
    }
    ensure_unitary(u, INPUT_UNITARY_TOL)?;
    let stages = decompose_block(u)?
        .into_iter()
        .map(|(d, rots)| {
            let rotations = rots
                .into_iter()
                .map(|(a, b, u)| PairRotation { a: a + 1, b: b + 1, u })
                .collect();
            Stage::new(n, d, rotations)
        })
        .collect::<Result<Vec<_>>>()?;
    StageSequence::new(n, stages)
}

/// Smallest power of two that is at least `max(n, 2)`.
pub fn padded_dimension(n: usize) -> usize {
    n.max(2).next_power_of_two()
}

/// Extends `u` with identity-fixed indices up to [`padded_dimension`].
pub fn pad_to_power_of_two(u: &CMatrix) -> CMatrix {
    let n = u.nrows();
    let p = padded_dimension(n);
    let mut out = DMatrix::from_fn(p, p, |i, j| if i == j { ONE } else { ZERO });
    out.view_mut((0, 0), (n, n)).copy_from(u);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{haar_unitary, max_abs_diff};
    use crate::walk::{dft_coin, grover_coin, hadamard_coin, mask_coin};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
        let (ar, ac) = a.shape();
        let (br, bc) = b.shape();
        CMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
    }

    /// Brute-force enumeration of the stride pattern straight from its
    /// definition, without the sort.
    fn pattern(n: usize, d: usize) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for k in 0..n / d {
            for r in 1..=d / 2 {
                v.push((k * d + r, k * d + r + d / 2));
            }
        }
        v
    }

    #[test]
    fn stage_pair_examples() {
        assert_eq!(stage_pairs(4, 2).unwrap(), vec![(1, 2), (3, 4)]);
        assert_eq!(stage_pairs(4, 4).unwrap(), vec![(1, 3), (2, 4)]);
        assert_eq!(stage_pairs(8, 4).unwrap(), vec![(1, 3), (2, 4), (5, 7), (6, 8)]);
        assert!(stage_pairs(8, 3).is_err());
        assert!(stage_pairs(8, 16).is_err());
        assert!(stage_pairs(6, 2).is_err());
    }

    #[test]
    fn stage_pairs_partition_the_line() {
        for n in [2, 4, 8, 16, 32] {
            let mut d = 2;
            while d <= n {
                let pairs = stage_pairs(n, d).unwrap();
                assert_eq!(pairs.len(), n / 2);
                let mut seen = vec![false; n + 1];
                for &(a, b) in &pairs {
                    assert!(!seen[a] && !seen[b]);
                    seen[a] = true;
                    seen[b] = true;
                    assert_eq!(b - a, d / 2);
                }
                assert!(seen[1..].iter().all(|&s| s));
                d *= 2;
            }
        }
    }

    #[test]
    fn identity_decomposes_into_identity_stages() {
        let seq = cs_decompose(&CMatrix::identity(4, 4)).unwrap();
        assert_eq!(seq.len(), 3);
        for stage in seq.stages() {
            for rot in stage.rotations() {
                assert!(max_abs_diff(
                    &CMatrix::from_iterator(2, 2, rot.u.iter().copied()),
                    &CMatrix::identity(2, 2)
                ) < 1e-15);
            }
        }
    }

    #[test]
    fn stride_schedule_is_the_ruler_sequence() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let seq = cs_decompose(&haar_unitary(8, &mut rng)).unwrap();
        let strides: Vec<usize> = seq.stages().iter().map(Stage::stride).collect();
        assert_eq!(strides, vec![2, 4, 2, 8, 2, 4, 2]);
    }

    #[test]
    fn hadamard_tensor_hadamard_round_trips() {
        let h = hadamard_coin();
        let u = kron(&h, &h);
        let seq = cs_decompose(&u).unwrap();
        assert!(max_abs_diff(&reconstruct(&seq), &u) < 1e-12);
    }

    #[test]
    fn structured_coins_round_trip() {
        // degenerate singular values at 0, 1 and 1/sqrt(2)
        let mut cases = vec![grover_coin(4).unwrap(), grover_coin(8).unwrap(), dft_coin(8).unwrap()];
        cases.push(mask_coin(&hadamard_coin(), &[false, true, false, false, false, false, false, true]).unwrap());
        cases.push(mask_coin(&grover_coin(3).unwrap(), &[true, false, true, false, true, false, false, false]).unwrap());
        let perm = CMatrix::from_fn(8, 8, |i, j| if (i + 3) % 8 == j { ONE } else { ZERO });
        cases.push(perm);
        cases.push(CMatrix::from_diagonal(&nalgebra::DVector::from_fn(16, |i, _| C64::from_polar(1.0, i as f64))));
        for u in cases {
            let seq = cs_decompose(&u).unwrap();
            assert_eq!(seq.len(), u.nrows() - 1);
            let err = max_abs_diff(&reconstruct(&seq), &u);
            assert!(err < 1e-12, "n = {}, err = {err:e}", u.nrows());
        }
    }

    #[test]
    fn cos_sin_factors_are_unitary_and_compose() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [2, 4, 8, 16] {
            let u = haar_unitary(n, &mut rng);
            let cs = cos_sin(&u).unwrap();
            for f in [&cs.l0, &cs.l1, &cs.r0, &cs.r1] {
                assert!(unitarity_deviation(f) < 1e-13);
            }
            assert!(cs.theta.windows(2).all(|w| w[0] + 1e-12 >= w[1]));
            assert!(max_abs_diff(&cs.compose(), &u) < 1e-12);
        }
    }

    #[test]
    fn random_unitaries_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for n in [2, 4, 8, 16, 32] {
            for _ in 0..10 {
                let u = haar_unitary(n, &mut rng);
                let seq = cs_decompose(&u).unwrap();
                assert_eq!(seq.len(), n - 1);
                assert!(max_abs_diff(&reconstruct(&seq), &u) < 1e-10);
            }
        }
    }

    #[test]
    fn near_degenerate_unitaries_round_trip() {
        // U = V diag(exp(i eps phi)) V^dag is eps-close to the identity, so
        // the sines of every split are O(eps).
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for eps in [1e-3, 1e-6, 1e-8, 1e-10, 1e-13] {
            for n in [4, 8, 16] {
                let v = haar_unitary(n, &mut rng);
                let phases = nalgebra::DVector::from_fn(n, |i, _| C64::from_polar(1.0, eps * (i as f64 + 0.5)));
                let u = &v * CMatrix::from_diagonal(&phases) * v.adjoint();
                let seq = cs_decompose(&u).unwrap();
                let err = max_abs_diff(&reconstruct(&seq), &u);
                assert!(err < 1e-12, "eps = {eps:e}, n = {n}, err = {err:e}");
            }
        }
    }

    #[test]
    fn padded_unitaries_round_trip() {
        // the identity block gives many unit cosines and exactly zero sines
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for n in [3, 5, 6, 9, 12, 13, 14, 22, 27, 30] {
            for _ in 0..4 {
                let u = pad_to_power_of_two(&haar_unitary(n, &mut rng));
                let err = max_abs_diff(&reconstruct(&cs_decompose(&u).unwrap()), &u);
                assert!(err < 1e-12, "n = {n}, err = {err:e}");
            }
        }
    }

    #[test]
    fn emitted_stages_follow_the_pattern() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let seq = cs_decompose(&haar_unitary(16, &mut rng)).unwrap();
        for stage in seq.stages() {
            let mut found: Vec<_> = stage.rotations().iter().map(|r| (r.a, r.b)).collect();
            let mut expected = pattern(16, stage.stride());
            found.sort_unstable();
            expected.sort_unstable();
            assert_eq!(found, expected);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut m = CMatrix::identity(4, 4);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(matches!(cs_decompose(&m), Err(Error::NotUnitary { .. })));
        assert!(cs_decompose(&CMatrix::identity(6, 6)).is_err());
        assert!(cs_decompose(&CMatrix::identity(1, 1)).is_err());
    }

    #[test]
    fn reconstruct_small_cases() {
        let empty = StageSequence::new(4, vec![]).unwrap();
        assert_eq!(reconstruct(&empty), CMatrix::identity(4, 4));
        let h = hadamard_coin();
        let stage = Stage::new(2, 2, vec![PairRotation::new(1, 2, to_unitary2(&h)).unwrap()]).unwrap();
        let seq = StageSequence::new(2, vec![stage]).unwrap();
        assert!(max_abs_diff(&reconstruct(&seq), &h) < 1e-16);
    }

    #[test]
    fn apply_stage_examples() {
        let x = vec![ONE, ZERO, ZERO, ZERO];
        let id = Stage::identity(4, 2).unwrap();
        assert_eq!(apply_stage(&x, &id), x);

        let swap = Unitary2::new(ZERO, ONE, ONE, ZERO);
        let stage = Stage::new(
            4,
            2,
            vec![
                PairRotation::new(1, 2, swap).unwrap(),
                PairRotation::new(3, 4, Unitary2::identity()).unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(apply_stage(&x, &stage), vec![ZERO, ONE, ZERO, ZERO]);
    }

    #[test]
    fn apply_stage_matches_dense_and_is_order_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let seq = cs_decompose(&haar_unitary(16, &mut rng)).unwrap();
        let x = crate::linalg::random_unit_vector(16, &mut rng);
        for stage in seq.stages() {
            let fast = apply_stage(x.as_slice(), stage);
            let dense = stage.matrix() * &x;
            assert!(crate::linalg::max_abs_diff_slice(&fast, dense.as_slice()) < 1e-12);
            let norm: f64 = fast.iter().map(|a| a.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-12);

            let mut reversed = x.as_slice().to_vec();
            for rot in stage.rotations().iter().rev() {
                rot.act(&mut reversed);
            }
            assert_eq!(reversed, fast);
        }
    }

    #[test]
    fn stage_validation() {
        let swap = Unitary2::new(ZERO, ONE, ONE, ZERO);
        assert!(Stage::new(4, 2, vec![PairRotation::new(1, 3, swap).unwrap()]).is_err());
        assert!(PairRotation::new(2, 2, swap).is_err());
        assert!(PairRotation::new(1, 2, Unitary2::new(ONE, ONE, ZERO, ONE)).is_err());
    }

    #[test]
    fn padding() {
        assert_eq!(padded_dimension(1), 2);
        assert_eq!(padded_dimension(5), 8);
        assert_eq!(padded_dimension(8), 8);
        let g = grover_coin(3).unwrap();
        let p = pad_to_power_of_two(&g);
        assert_eq!(p.nrows(), 4);
        assert_eq!(p[(3, 3)], ONE);
        assert_eq!(p.view((0, 0), (3, 3)).into_owned(), g);
        let seq = cs_decompose(&p).unwrap();
        assert!(max_abs_diff(&reconstruct(&seq), &p) < 1e-12);
    }
}
