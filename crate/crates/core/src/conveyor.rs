//! The physical `2n x 2n` dot grid and the five-step conveyor protocol that
//! realizes one stage of pair rotations between non-neighbouring dots.
//!
//! Physical sites are 1-based. Site `(2j-1, 2k-1)` holds the logical
//! amplitude `A[j][k]`; every other site is a register. Along a horizontal
//! line (data row `2j-1`) the registers are the even columns, so the register
//! beside logical position `p` is column `2p`. Vertical lines mirror this on
//! rows.
//!
//! A stage of stride `d` is executed per line as
//!
//! 1. pi-transfer every `a = k*d + r` from its data dot into its register,
//! 2. move the register row by `+d` cells, which parks `a`'s amplitude next
//!    to the data dot of `b = a + d/2`,
//! 3. apply the 2x2 rotation between that register and `b`,
//! 4. move the register row back by `-d`,
//! 5. pi-transfer the registers back into their data dots.
//!
//! Transfers are phase-free exchanges and register motion is an exact
//! permutation; physical phases belong in the stage rotations.

use std::fmt;

use crate::decomp::{cs_decompose, pad_to_power_of_two, padded_dimension, Stage, StageSequence};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64, ZERO};
use crate::walk::{CoinPlan, CoinSet, Orientation, WalkState};

/// Register amplitudes below this count as empty when a state is extracted.
pub const REGISTER_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct PhysicalGrid {
    n: usize,
    amp: CMatrix,
}

/// Places a logical state on the data sites; registers start empty.
pub fn embed(state: &WalkState) -> PhysicalGrid {
    let n = state.n();
    let mut amp = CMatrix::zeros(2 * n, 2 * n);
    for j in 0..n {
        for k in 0..n {
            amp[(2 * j, 2 * k)] = state.amplitudes()[(j, k)];
        }
    }
    PhysicalGrid { n, amp }
}

/// Reads the logical state back off the data sites. Fails if any register
/// still carries amplitude.
pub fn extract(grid: &PhysicalGrid) -> Result<WalkState> {
    let max_amplitude = grid.max_register_amplitude();
    if max_amplitude > REGISTER_TOL {
        return Err(Error::ProtocolIncomplete { max_amplitude });
    }
    let n = grid.n;
    let amp = CMatrix::from_fn(n, n, |j, k| grid.amp[(2 * j, 2 * k)]);
    Ok(WalkState::from_raw(amp))
}

impl PhysicalGrid {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Physical amplitudes, `2n x 2n`, 0-based storage.
    pub fn amplitudes(&self) -> &CMatrix {
        &self.amp
    }

    /// 1-based physical lookup.
    pub fn site(&self, row: usize, col: usize) -> C64 {
        self.amp[(row - 1, col - 1)]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn max_register_amplitude(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..2 * self.n {
            for c in 0..2 * self.n {
                if r % 2 == 1 || c % 2 == 1 {
                    worst = worst.max(self.amp[(r, c)].norm());
                }
            }
        }
        worst
    }

    fn check_line(&self, line: usize) -> Result<()> {
        if !(1..=self.n).contains(&line) {
            return Err(Error::InvalidArgument(format!(
                "line {line} outside 1..={}",
                self.n
            )));
        }
        Ok(())
    }

    /// 0-based storage index of physical position `pos` (1-based) on `line`.
    fn index(&self, orient: Orientation, line: usize, pos: usize) -> (usize, usize) {
        match orient {
            Orientation::Horizontal => (2 * line - 2, pos - 1),
            Orientation::Vertical => (pos - 1, 2 * line - 2),
        }
    }

    fn get(&self, orient: Orientation, line: usize, pos: usize) -> C64 {
        self.amp[self.index(orient, line, pos)]
    }

    fn set(&mut self, orient: Orientation, line: usize, pos: usize, value: C64) {
        let idx = self.index(orient, line, pos);
        self.amp[idx] = value;
    }

    /// Ideal pi rotation between the data dot of each logical position in
    /// `positions` and its register: a plain exchange.
    pub fn pi_transfer(&mut self, positions: &[usize], orient: Orientation, line: usize) -> Result<()> {
        self.check_line(line)?;
        for &p in positions {
            if !(1..=self.n).contains(&p) {
                return Err(Error::InvalidArgument(format!(
                    "position {p} outside 1..={}",
                    self.n
                )));
            }
            let data = self.get(orient, line, 2 * p - 1);
            let reg = self.get(orient, line, 2 * p);
            self.set(orient, line, 2 * p - 1, reg);
            self.set(orient, line, 2 * p, data);
        }
        Ok(())
    }

    /// Moves every register on the line by `offset` physical cells. The
    /// offset must be even, and no occupied register may leave the grid.
    pub fn shift_register(&mut self, offset: isize, orient: Orientation, line: usize) -> Result<()> {
        self.check_line(line)?;
        if offset % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "register shift {offset} is odd and would land on data sites"
            )));
        }
        if offset == 0 {
            return Ok(());
        }
        let len = 2 * self.n as isize;
        let registers: Vec<(usize, C64)> = (1..=self.n)
            .map(|i| 2 * i)
            .map(|pos| (pos, self.get(orient, line, pos)))
            .collect();
        for &(pos, value) in &registers {
            let target = pos as isize + offset;
            if value != ZERO && !(1..=len).contains(&target) {
                return Err(Error::ShiftOutOfRange { offset, site: pos });
            }
        }
        for &(pos, _) in &registers {
            self.set(orient, line, pos, ZERO);
        }
        for (pos, value) in registers {
            let target = pos as isize + offset;
            if (1..=len).contains(&target) {
                self.set(orient, line, target as usize, value);
            }
        }
        Ok(())
    }

    /// Applies each stage rotation between the register parked beside `b`
    /// (carrying `a`'s amplitude) and the data dot of `b`.
    pub fn rotate_pairs(&mut self, stage: &Stage, orient: Orientation, line: usize) -> Result<()> {
        self.check_line(line)?;
        if stage.dimension() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: stage.dimension(),
            });
        }
        for rot in stage.rotations() {
            let reg = 2 * rot.b;
            let data = 2 * rot.b - 1;
            let xa = self.get(orient, line, reg);
            let xb = self.get(orient, line, data);
            self.set(orient, line, reg, rot.u[(0, 0)] * xa + rot.u[(0, 1)] * xb);
            self.set(orient, line, data, rot.u[(1, 0)] * xa + rot.u[(1, 1)] * xb);
        }
        Ok(())
    }

    /// Runs the full five-step protocol for one stage on one line and logs
    /// the actions.
    pub fn run_stage(
        &mut self,
        stage: &Stage,
        orient: Orientation,
        line: usize,
        trace: &mut ProtocolTrace,
    ) -> Result<()> {
        if stage.dimension() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: stage.dimension(),
            });
        }
        let d = stage.stride() as isize;
        let movers: Vec<usize> = stage.rotations().iter().map(|r| r.a).collect();
        let pairs: Vec<(usize, usize)> = stage.rotations().iter().map(|r| (r.a, r.b)).collect();

        self.pi_transfer(&movers, orient, line)?;
        trace.push(line, orient, Action::PiTransfer(movers.clone()));
        self.shift_register(d, orient, line)?;
        trace.push(line, orient, Action::Shift(d));
        self.rotate_pairs(stage, orient, line)?;
        trace.push(line, orient, Action::Rotate(pairs));
        self.shift_register(-d, orient, line)?;
        trace.push(line, orient, Action::Shift(-d));
        self.pi_transfer(&movers, orient, line)?;
        trace.push(line, orient, Action::PiTransfer(movers));
        Ok(())
    }
}

/// One primitive of the protocol.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    /// Logical positions exchanged with their registers.
    PiTransfer(Vec<usize>),
    /// Register displacement in physical cells.
    Shift(isize),
    /// Logical pairs `(a, b)` rotated.
    Rotate(Vec<(usize, usize)>),
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::PiTransfer(_) => "pi_transfer",
            Action::Shift(_) => "shift",
            Action::Rotate(_) => "rotate",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceEntry {
    /// Position within the five-step protocol, 1..=5.
    pub step: u8,
    pub line: usize,
    pub orient: Orientation,
    pub action: Action,
}

/// Ordered record of every primitive executed.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProtocolTrace {
    entries: Vec<TraceEntry>,
    enabled: bool,
    // counts are kept even when entries are not
    counts: [usize; 3],
}

impl ProtocolTrace {
    pub fn new() -> Self {
        Self {
            entries: Vec::new(),
            enabled: true,
            counts: [0; 3],
        }
    }

    /// A trace that only counts actions, for long runs.
    pub fn counting() -> Self {
        Self {
            enabled: false,
            ..Self::new()
        }
    }

    fn push(&mut self, line: usize, orient: Orientation, action: Action) {
        let slot = match action {
            Action::PiTransfer(_) => 0,
            Action::Shift(_) => 1,
            Action::Rotate(_) => 2,
        };
        self.counts[slot] += 1;
        if self.enabled {
            let step = (self.counts.iter().sum::<usize>() - 1) % 5 + 1;
            self.entries.push(TraceEntry {
                step: step as u8,
                line,
                orient,
                action,
            });
        }
    }

    pub fn entries(&self) -> &[TraceEntry] {
        &self.entries
    }

    /// `(pi transfers, shifts, rotations)` executed so far.
    pub fn counts(&self) -> (usize, usize, usize) {
        (self.counts[0], self.counts[1], self.counts[2])
    }
}

impl fmt::Display for TraceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let params = match &self.action {
            Action::PiTransfer(pos) => format!(
                "positions={}",
                pos.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
            ),
            Action::Shift(off) => format!("offset={off:+}"),
            Action::Rotate(pairs) => format!(
                "pairs={}",
                pairs
                    .iter()
                    .map(|(a, b)| format!("{a}-{b}"))
                    .collect::<Vec<_>>()
                    .join(",")
            ),
        };
        write!(
            f,
            "STEP {} ACTION={} line={} orient={} params={}",
            self.step,
            self.action.name(),
            self.line,
            self.orient.letter(),
            params
        )
    }
}

impl fmt::Display for ProtocolTrace {
    /// One action per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for entry in &self.entries {
            writeln!(f, "{entry}")?;
        }
        Ok(())
    }
}

fn decompose_set(set: &CoinSet, n: usize, padded: usize) -> Result<Vec<StageSequence>> {
    let prepare = |c: &CMatrix| {
        if padded == n {
            cs_decompose(c)
        } else {
            cs_decompose(&pad_to_power_of_two(c))
        }
    };
    match set {
        CoinSet::Uniform(c) => Ok(vec![prepare(c)?]),
        CoinSet::PerLine(cs) => cs.iter().map(prepare).collect(),
    }
}

/// Runs `steps` walk steps entirely through the physical protocol: every
/// coin is synthesized into stages and each stage is executed on all rows
/// (odd steps) or columns (even steps). Non-power-of-two walks are padded
/// with empty, identity-coined lines.
pub fn run_walk_physical(
    s0: &WalkState,
    steps: usize,
    plan: &CoinPlan,
    trace: &mut ProtocolTrace,
) -> Result<WalkState> {
    let n = s0.n();
    if plan.n() != n {
        return Err(Error::DimensionMismatch {
            expected: plan.n(),
            found: n,
        });
    }
    if steps > plan.len() {
        return Err(Error::PlanTooShort {
            requested: steps,
            available: plan.len(),
        });
    }
    let padded = padded_dimension(n);
    let mut amp = CMatrix::zeros(padded, padded);
    amp.view_mut((0, 0), (n, n)).copy_from(s0.amplitudes());
    let mut grid = embed(&WalkState::from_raw(amp));

    for i in 1..=steps {
        let orient = Orientation::for_step(i);
        let seqs = decompose_set(plan.step(i), n, padded)?;
        let identity: Vec<Stage> = match seqs.first() {
            Some(seq) => seq
                .stages()
                .iter()
                .map(|s| Stage::identity(padded, s.stride()))
                .collect::<Result<_>>()?,
            None => Vec::new(),
        };
        for (s, id_stage) in identity.iter().enumerate() {
            for line in 1..=padded {
                let stage = if line > n {
                    id_stage
                } else if seqs.len() == 1 {
                    &seqs[0].stages()[s]
                } else {
                    &seqs[line - 1].stages()[s]
                };
                grid.run_stage(stage, orient, line, trace)?;
                let leftover = grid.max_register_amplitude();
                if leftover > 1e-12 {
                    return Err(Error::ProtocolIncomplete {
                        max_amplitude: leftover,
                    });
                }
            }
        }
    }

    let out = extract(&grid)?;
    let amp = out.amplitudes().view((0, 0), (n, n)).into_owned();
    Ok(WalkState::from_raw(amp))
}
