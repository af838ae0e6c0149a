//! JSON documents and delimited-text exports.
//!
//! Complex numbers are `[re, im]` pairs and matrices are stored row-major.

use serde::{Deserialize, Serialize};

use crate::decomp::{PairRotation, Stage, StageSequence, Unitary2};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};
use crate::tdse::{BlochSample, WaveFunction};
use crate::walk::{Distribution, WalkState};

type Pair = [f64; 2];

fn to_pair(z: &C64) -> Pair {
    [z.re, z.im]
}

fn from_pair(p: &Pair) -> C64 {
    C64::new(p[0], p[1])
}

fn row_major(m: &CMatrix) -> Vec<Pair> {
    (0..m.nrows())
        .flat_map(|r| (0..m.ncols()).map(move |c| (r, c)))
        .map(|(r, c)| to_pair(&m[(r, c)]))
        .collect()
}

fn square_from_row_major(n: usize, entries: &[Pair], what: &str) -> Result<CMatrix> {
    if entries.len() != n * n {
        return Err(Error::InvalidArgument(format!(
            "{what} with n = {n} needs {} entries, found {}",
            n * n,
            entries.len()
        )));
    }
    Ok(CMatrix::from_fn(n, n, |r, c| from_pair(&entries[r * n + c])))
}

#[derive(Serialize, Deserialize)]
struct StateDocument {
    n: usize,
    amp: Vec<Pair>,
}

pub fn state_to_json(state: &WalkState) -> String {
    let doc = StateDocument {
        n: state.n(),
        amp: row_major(state.amplitudes()),
    };
    serde_json::to_string_pretty(&doc).expect("state document serializes")
}

/// Parses a walk state; the amplitudes must be normalized.
pub fn state_from_json(text: &str) -> Result<WalkState> {
    let doc: StateDocument = serde_json::from_str(text)?;
    WalkState::from_amplitudes(square_from_row_major(doc.n, &doc.amp, "state")?)
}

#[derive(Serialize, Deserialize)]
struct UnitaryDocument {
    n: usize,
    entries: Vec<Pair>,
}

pub fn unitary_to_json(u: &CMatrix) -> String {
    let doc = UnitaryDocument {
        n: u.nrows(),
        entries: row_major(u),
    };
    serde_json::to_string_pretty(&doc).expect("unitary document serializes")
}

/// Parses a square matrix. Unitarity is left to the consumer.
pub fn unitary_from_json(text: &str) -> Result<CMatrix> {
    let doc: UnitaryDocument = serde_json::from_str(text)?;
    square_from_row_major(doc.n, &doc.entries, "matrix")
}

#[derive(Serialize, Deserialize)]
struct PairDocument {
    a: usize,
    b: usize,
    u: [Pair; 4],
}

#[derive(Serialize, Deserialize)]
struct StageDocument {
    d: usize,
    pairs: Vec<PairDocument>,
}

#[derive(Serialize, Deserialize)]
struct SequenceDocument {
    n: usize,
    stages: Vec<StageDocument>,
}

pub fn stages_to_json(seq: &StageSequence) -> String {
    let doc = SequenceDocument {
        n: seq.n(),
        stages: seq
            .stages()
            .iter()
            .map(|s| StageDocument {
                d: s.stride(),
                pairs: s
                    .rotations()
                    .iter()
                    .map(|r| PairDocument {
                        a: r.a,
                        b: r.b,
                        u: [
                            to_pair(&r.u[(0, 0)]),
                            to_pair(&r.u[(0, 1)]),
                            to_pair(&r.u[(1, 0)]),
                            to_pair(&r.u[(1, 1)]),
                        ],
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("stage document serializes")
}

/// Parses and validates a stage sequence (pair pattern and 2x2 unitarity).
pub fn stages_from_json(text: &str) -> Result<StageSequence> {
    let doc: SequenceDocument = serde_json::from_str(text)?;
    let stages = doc
        .stages
        .into_iter()
        .map(|s| {
            let rotations = s
                .pairs
                .into_iter()
                .map(|p| {
                    let u = Unitary2::new(
                        from_pair(&p.u[0]),
                        from_pair(&p.u[1]),
                        from_pair(&p.u[2]),
                        from_pair(&p.u[3]),
                    );
                    PairRotation::new(p.a, p.b, u)
                })
                .collect::<Result<Vec<_>>>()?;
            Stage::new(doc.n, s.d, rotations)
        })
        .collect::<Result<Vec<_>>>()?;
    StageSequence::new(doc.n, stages)
}

#[derive(Serialize, Deserialize)]
struct WaveDocument {
    n: usize,
    dx: f64,
    amp: Vec<Pair>,
}

/// Wavefunction snapshot in the walk-state layout plus the grid spacing.
pub fn wavefunction_to_json(psi: &WaveFunction) -> String {
    let doc = WaveDocument {
        n: psi.len(),
        dx: psi.dx(),
        amp: psi.amplitudes().iter().map(to_pair).collect(),
    };
    serde_json::to_string_pretty(&doc).expect("wavefunction document serializes")
}

/// Tab-separated `node probability` rows (1-based nodes) under a header.
pub fn distribution_tsv(dist: &Distribution) -> String {
    let mut out = String::from("node\tprobability\n");
    for (node, p) in dist.iter() {
        out.push_str(&format!("{node}\t{p}\n"));
    }
    out
}

/// Tab-separated Bloch rows; an undefined relative phase is written `nan`.
pub fn trajectory_tsv(samples: &[BlochSample]) -> String {
    let mut out = String::from("t\talpha_sqr\tbeta_sqr\trelative_phase\tleakage\tnorm\n");
    for s in samples {
        let phase = s.relative_phase.map_or_else(|| "nan".to_string(), |p| p.to_string());
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            s.t,
            s.alpha_abs * s.alpha_abs,
            s.beta_abs * s.beta_abs,
            phase,
            s.leakage,
            s.norm
        ));
    }
    out
}
