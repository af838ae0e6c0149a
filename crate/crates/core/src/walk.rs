//! Walk state on the `n x n` grid and the two evolution procedures.
//!
//! The grid element `A[j][k]` is the amplitude of the walker sitting at node
//! `j` with its coin pointing at node `k`. One step of the textbook walk is a
//! coin on every node (acting along grid rows) followed by the translation
//! `T|j,k> = |k,j>`, i.e. a transpose of the grid. Since
//! `T C^H T = C^V`, two such steps collapse into a row-coin application
//! followed by a column-coin application with no data movement at all;
//! [`evolve`] uses that form and [`reference_evolve`] the textbook one.
//!
//! After an odd number of [`evolve`] steps the transpose has been absorbed
//! into the orientation, so the walker's node is the *column* index; use
//! [`position_distribution_after`] when the parity is not known statically.

use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::linalg::{ensure_unitary, haar_unitary, max_abs_diff, random_unit_vector, CMatrix, C64, ONE, UNITARY_TOL};

/// Tolerance on `sum |A|^2 - 1` accepted when a state is constructed.
pub const NORM_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct WalkState {
    amp: CMatrix,
}

impl WalkState {
    /// Walker at node `j` with coin state `k` (both 1-based).
    pub fn localized(n: usize, j: usize, k: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("walk dimension must be positive".into()));
        }
        if !(1..=n).contains(&j) || !(1..=n).contains(&k) {
            return Err(Error::InvalidArgument(format!(
                "localized state ({j}, {k}) outside 1..={n}"
            )));
        }
        let mut amp = CMatrix::zeros(n, n);
        amp[(j - 1, k - 1)] = ONE;
        Ok(Self { amp })
    }

    /// Wraps a square amplitude grid; the total probability must be 1
    /// within [`NORM_TOL`].
    pub fn from_amplitudes(amp: CMatrix) -> Result<Self> {
        if !amp.is_square() || amp.nrows() == 0 {
            return Err(Error::InvalidArgument(format!(
                "walk amplitudes must be a non-empty square grid, got {}x{}",
                amp.nrows(),
                amp.ncols()
            )));
        }
        let state = Self { amp };
        let norm_sqr = state.norm_sqr();
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr });
        }
        Ok(state)
    }

    /// Amplitudes on the coin states of a single node; everything else is zero.
    pub fn at_node(n: usize, node: usize, coins: &[(usize, C64)]) -> Result<Self> {
        if !(1..=n).contains(&node) {
            return Err(Error::InvalidArgument(format!("node {node} outside 1..={n}")));
        }
        let mut amp = CMatrix::zeros(n, n);
        for &(k, a) in coins {
            if !(1..=n).contains(&k) {
                return Err(Error::InvalidArgument(format!("coin state {k} outside 1..={n}")));
            }
            amp[(node - 1, k - 1)] += a;
        }
        Self::from_amplitudes(amp)
    }

    /// Random normalized grid with complex Gaussian entries.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let v = random_unit_vector(n * n, rng);
        Self {
            amp: CMatrix::from_row_slice(n, n, v.as_slice()),
        }
    }

    pub(crate) fn from_raw(amp: CMatrix) -> Self {
        Self { amp }
    }

    pub fn n(&self) -> usize {
        self.amp.nrows()
    }

    pub fn amplitudes(&self) -> &CMatrix {
        &self.amp
    }

    /// 1-based amplitude lookup.
    pub fn amplitude(&self, j: usize, k: usize) -> C64 {
        self.amp[(j - 1, k - 1)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn transpose(&self) -> Self {
        Self {
            amp: self.amp.transpose(),
        }
    }
}

pub fn hadamard_coin() -> CMatrix {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    CMatrix::from_row_slice(2, 2, &[h, h, h, -h])
}

/// `2/n - delta_jk`.
pub fn grover_coin(n: usize) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("coin dimension must be positive".into()));
    }
    let off = 2.0 / n as f64;
    Ok(CMatrix::from_fn(n, n, |j, k| {
        C64::new(if j == k { off - 1.0 } else { off }, 0.0)
    }))
}

/// `exp(2 pi i jk / n) / sqrt(n)`.
pub fn dft_coin(n: usize) -> Result<CMatrix> {
    if n == 0 {
        return Err(Error::InvalidArgument("coin dimension must be positive".into()));
    }
    let scale = 1.0 / (n as f64).sqrt();
    Ok(CMatrix::from_fn(n, n, |j, k| {
        // reduce jk mod n first so the angle stays small and exact for n = 2
        let phase = 2.0 * std::f64::consts::PI * ((j * k) % n) as f64 / n as f64;
        C64::from_polar(scale, phase)
    }))
}

/// Embeds `sub` on the masked-in indices of an `n x n` identity.
///
/// Masked-out basis states are fixed points of the result, so they never
/// exchange amplitude with the rest of the node. `sub` must have dimension
/// equal to the number of `true` entries in `row_mask`.
pub fn mask_coin(sub: &CMatrix, row_mask: &[bool]) -> Result<CMatrix> {
    let active: Vec<usize> = row_mask
        .iter()
        .enumerate()
        .filter_map(|(i, &on)| on.then_some(i))
        .collect();
    if sub.nrows() != active.len() || sub.ncols() != active.len() {
        return Err(Error::DimensionMismatch {
            expected: active.len(),
            found: sub.nrows(),
        });
    }
    let n = row_mask.len();
    let mut c = CMatrix::identity(n, n);
    for (a, &i) in active.iter().enumerate() {
        for (b, &j) in active.iter().enumerate() {
            c[(i, j)] = sub[(a, b)];
        }
    }
    Ok(c)
}

/// Which n-ary coin is embedded at each node of a general graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CoinKind {
    Grover,
    Dft,
    /// Only meaningful for degree-2 nodes; lower degrees get the identity.
    Hadamard,
}

impl CoinKind {
    pub fn build(self, dim: usize) -> Result<CMatrix> {
        if dim <= 1 {
            return Ok(CMatrix::identity(dim, dim));
        }
        match self {
            CoinKind::Grover => grover_coin(dim),
            CoinKind::Dft => dft_coin(dim),
            CoinKind::Hadamard if dim == 2 => Ok(hadamard_coin()),
            CoinKind::Hadamard => Err(Error::InvalidArgument(format!(
                "Hadamard coin needs exactly two coin states, node has {dim}"
            ))),
        }
    }
}

impl std::str::FromStr for CoinKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "grover" => Ok(CoinKind::Grover),
            "dft" | "fourier" => Ok(CoinKind::Dft),
            "hadamard" => Ok(CoinKind::Hadamard),
            other => Err(Error::InvalidArgument(format!("unknown coin kind `{other}`"))),
        }
    }
}

/// Orientation of a coin application on the grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// Coins act along rows: row `j` holds the coin states of node `j`.
    Horizontal,
    /// Coins act along columns.
    Vertical,
}

impl Orientation {
    /// Step `i` (1-based) is horizontal when `i` is odd.
    pub fn for_step(step: usize) -> Self {
        if step % 2 == 1 {
            Orientation::Horizontal
        } else {
            Orientation::Vertical
        }
    }

    pub fn letter(self) -> char {
        match self {
            Orientation::Horizontal => 'H',
            Orientation::Vertical => 'V',
        }
    }
}

/// Coins for one step: one matrix per row (column), or one shared by all.
#[derive(Clone, Debug, PartialEq)]
pub enum CoinSet {
    Uniform(CMatrix),
    PerLine(Vec<CMatrix>),
}

impl CoinSet {
    /// Coin of line `line` (0-based).
    pub fn coin(&self, line: usize) -> &CMatrix {
        match self {
            CoinSet::Uniform(c) => c,
            CoinSet::PerLine(cs) => &cs[line],
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let check = |c: &CMatrix| -> Result<()> {
            if c.nrows() != n || c.ncols() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: c.nrows(),
                });
            }
            ensure_unitary(c, UNITARY_TOL)
        };
        match self {
            CoinSet::Uniform(c) => check(c),
            CoinSet::PerLine(cs) => {
                if cs.len() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: cs.len(),
                    });
                }
                cs.iter().try_for_each(check)
            }
        }
    }
}

/// The coins used at every step. Step `i` (1-based) is applied horizontally
/// when `i` is odd and vertically when even.
#[derive(Clone, Debug)]
pub struct CoinPlan {
    n: usize,
    steps: Vec<Arc<CoinSet>>,
}

impl CoinPlan {
    pub fn new(n: usize, steps: Vec<CoinSet>) -> Result<Self> {
        for set in &steps {
            set.validate(n)?;
        }
        Ok(Self {
            n,
            steps: steps.into_iter().map(Arc::new).collect(),
        })
    }

    /// The same coin set at every one of `steps` steps.
    pub fn repeated(n: usize, set: CoinSet, steps: usize) -> Result<Self> {
        set.validate(n)?;
        let shared = Arc::new(set);
        Ok(Self {
            n,
            steps: vec![shared; steps],
        })
    }

    pub fn uniform(coin: CMatrix, steps: usize) -> Result<Self> {
        Self::repeated(coin.nrows(), CoinSet::Uniform(coin), steps)
    }

    /// Node `j` gets `kind` embedded on the coin states of its edges; states
    /// belonging to removed edges are left untouched.
    pub fn for_graph(graph: &Graph, kind: CoinKind, steps: usize) -> Result<Self> {
        let mask = graph.edge_mask();
        let n = graph.node_count();
        let coins = (1..=n)
            .map(|j| {
                let row = mask.row(j);
                let dim = row.iter().filter(|&&b| b).count();
                mask_coin(&kind.build(dim)?, &row)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::repeated(n, CoinSet::PerLine(coins), steps)
    }

    /// Independent Haar-random coin per line and per step.
    pub fn random<R: Rng + ?Sized>(n: usize, steps: usize, rng: &mut R) -> Self {
        let steps = (0..steps)
            .map(|_| Arc::new(CoinSet::PerLine((0..n).map(|_| haar_unitary(n, rng)).collect())))
            .collect();
        Self { n, steps }
    }

    /// One Haar-random coin shared by all lines, fresh at every step.
    pub fn random_uniform<R: Rng + ?Sized>(n: usize, steps: usize, rng: &mut R) -> Self {
        let steps = (0..steps)
            .map(|_| Arc::new(CoinSet::Uniform(haar_unitary(n, rng))))
            .collect();
        Self { n, steps }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Coins of step `step` (1-based).
    pub fn step(&self, step: usize) -> &CoinSet {
        &self.steps[step - 1]
    }

    fn check(&self, state: &WalkState, steps: usize) -> Result<()> {
        if state.n() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: state.n(),
            });
        }
        if steps > self.steps.len() {
            return Err(Error::PlanTooShort {
                requested: steps,
                available: self.steps.len(),
            });
        }
        Ok(())
    }
}

fn check_set(state: &WalkState, coins: &CoinSet) -> Result<()> {
    let n = state.n();
    let found = coins.coin(0).nrows();
    if found != n {
        return Err(Error::DimensionMismatch { expected: n, found });
    }
    if let CoinSet::PerLine(cs) = coins {
        if cs.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: cs.len(),
            });
        }
    }
    Ok(())
}

/// `C^H`: row `j` is replaced by `c_j * row_j`.
pub fn apply_coin_rows(state: &WalkState, coins: &CoinSet) -> Result<WalkState> {
    check_set(state, coins)?;
    let amp = match coins {
        // rows as row vectors: (c x^T)^T = x c^T
        CoinSet::Uniform(c) => &state.amp * c.transpose(),
        CoinSet::PerLine(cs) => {
            let mut out = state.amp.clone();
            for (j, c) in cs.iter().enumerate() {
                let row: DVector<C64> = state.amp.row(j).transpose();
                out.set_row(j, &(c * row).transpose());
            }
            out
        }
    };
    Ok(WalkState { amp })
}

/// `C^V`: column `k` is replaced by `c_k * col_k`.
pub fn apply_coin_cols(state: &WalkState, coins: &CoinSet) -> Result<WalkState> {
    check_set(state, coins)?;
    let amp = match coins {
        CoinSet::Uniform(c) => c * &state.amp,
        CoinSet::PerLine(cs) => {
            let mut out = state.amp.clone();
            for (k, c) in cs.iter().enumerate() {
                out.set_column(k, &(c * state.amp.column(k)));
            }
            out
        }
    };
    Ok(WalkState { amp })
}

/// Grid-form evolution `C_s^{H|V} ... C_2^V C_1^H |psi_0>`.
pub fn evolve(s0: &WalkState, steps: usize, plan: &CoinPlan) -> Result<WalkState> {
    plan.check(s0, steps)?;
    let mut state = s0.clone();
    for i in 1..=steps {
        state = match Orientation::for_step(i) {
            Orientation::Horizontal => apply_coin_rows(&state, plan.step(i))?,
            Orientation::Vertical => apply_coin_cols(&state, plan.step(i))?,
        };
    }
    Ok(state)
}

/// Coin-then-translate evolution `T C_s ... T C_1 |psi_0>` with the
/// transpose translation. Every step's coins act along rows.
pub fn reference_evolve(s0: &WalkState, steps: usize, plan: &CoinPlan) -> Result<WalkState> {
    plan.check(s0, steps)?;
    let mut state = s0.clone();
    for i in 1..=steps {
        state = apply_coin_rows(&state, plan.step(i))?.transpose();
    }
    Ok(state)
}

/// Largest entrywise gap between [`evolve`] and [`reference_evolve`]; the
/// reference is transposed back after an odd step count.
pub fn oracle_deviation(s0: &WalkState, steps: usize, plan: &CoinPlan) -> Result<f64> {
    let grid = evolve(s0, steps, plan)?;
    let mut reference = reference_evolve(s0, steps, plan)?;
    if steps % 2 == 1 {
        reference = reference.transpose();
    }
    Ok(max_abs_diff(grid.amplitudes(), reference.amplitudes()))
}

/// Probabilities over nodes, reported 1-based by [`Distribution::iter`].
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    p: Vec<f64>,
}

impl Distribution {
    pub fn from_probabilities(p: Vec<f64>) -> Result<Self> {
        let total: f64 = p.iter().sum();
        if p.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(Error::InvalidArgument("probabilities must be finite and non-negative".into()));
        }
        if (total - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm_sqr: total });
        }
        Ok(Self { p })
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }

    /// `(node, probability)` with 1-based nodes.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.p.iter().copied().enumerate().map(|(i, p)| (i + 1, p))
    }

    pub fn mean(&self) -> f64 {
        self.iter().map(|(x, p)| x as f64 * p).sum()
    }

    pub fn std_dev(&self) -> f64 {
        let mean = self.mean();
        self.iter()
            .map(|(x, p)| (x as f64 - mean).powi(2) * p)
            .sum::<f64>()
            .sqrt()
    }
}

/// `p_j = sum_k |A_jk|^2` (row sums).
pub fn position_distribution(state: &WalkState) -> Distribution {
    let p = state
        .amp
        .row_iter()
        .map(|row| row.iter().map(|a| a.norm_sqr()).sum())
        .collect();
    Distribution { p }
}

/// Node distribution of a state produced by `steps` grid-form steps: row
/// sums after an even count, column sums after an odd one.
pub fn position_distribution_after(state: &WalkState, steps: usize) -> Distribution {
    if steps % 2 == 0 {
        position_distribution(state)
    } else {
        position_distribution(&state.transpose())
    }
}
