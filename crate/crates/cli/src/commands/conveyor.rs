use serde::Serialize;

use qdot_walk::conveyor::{embed, extract, run_walk_physical, ProtocolTrace};
use qdot_walk::decomp::{apply_stage, stage_pairs, PairRotation, Stage, Unitary2};
use qdot_walk::linalg::{haar_unitary, is_power_of_two, max_abs_diff, UNITARY_TOL};
use qdot_walk::walk::{evolve, CoinPlan, Orientation, WalkState};
use rand::Rng;

use super::{rng, Context};
use crate::config::ConveyorConfig;
use crate::error::{CliError, CliResult};

#[derive(Serialize)]
struct ConveyorReport {
    config_version: i64,
    seed: u64,
    n: usize,
    stages: usize,
    identity: bool,
    tolerance: f64,
    max_deviation: f64,
    max_register_amplitude: f64,
    pi_transfers: usize,
    shifts: usize,
    rotations: usize,
    walk_steps: Option<usize>,
    walk_deviation: Option<f64>,
}

fn random_stage(n: usize, identity: bool, rng: &mut impl Rng) -> CliResult<Stage> {
    let strides: Vec<usize> = (1..).map(|e| 1usize << e).take_while(|&d| d <= n).collect();
    let d = strides[rng.random_range(0..strides.len())];
    if identity {
        return Ok(Stage::identity(n, d)?);
    }
    let rotations = stage_pairs(n, d)?
        .into_iter()
        .map(|(a, b)| {
            let u = haar_unitary(2, rng);
            PairRotation::new(a, b, Unitary2::new(u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]))
        })
        .collect::<qdot_walk::Result<Vec<_>>>()?;
    Ok(Stage::new(n, d, rotations)?)
}

/// The logical effect of `stage` on one row or column of `state`.
fn logical(state: &WalkState, stage: &Stage, orient: Orientation, line: usize) -> WalkState {
    let mut amp = state.amplitudes().clone();
    let (j, n) = (line - 1, state.n());
    let current: Vec<_> = match orient {
        Orientation::Horizontal => (0..n).map(|k| amp[(j, k)]).collect(),
        Orientation::Vertical => (0..n).map(|k| amp[(k, j)]).collect(),
    };
    for (k, z) in apply_stage(&current, stage).into_iter().enumerate() {
        match orient {
            Orientation::Horizontal => amp[(j, k)] = z,
            Orientation::Vertical => amp[(k, j)] = z,
        }
    }
    WalkState::from_amplitudes(amp).expect("stages are unitary")
}

pub fn cmd_conveyor_verify(config: &ConveyorConfig, ctx: &Context) -> CliResult<()> {
    let n = config.n;
    if n < 2 || !is_power_of_two(n) {
        return Err(CliError::Config(format!("n must be a power of two >= 2, got {n}")));
    }
    let seed = ctx.seed(config.seed);
    let mut rng = rng(seed);
    let mut trace = ProtocolTrace::counting();
    let mut rows = String::from("stage\tstride\torientation\tline\tdeviation\tmax_register\n");
    let (mut worst, mut worst_register) = (0.0f64, 0.0f64);
    for i in 1..=config.stages {
        let stage = random_stage(n, config.identity, &mut rng)?;
        let orient = if rng.random_bool(0.5) {
            Orientation::Horizontal
        } else {
            Orientation::Vertical
        };
        let line = rng.random_range(1..=n);
        let state = WalkState::random(n, &mut rng);
        let mut grid = embed(&state);
        grid.run_stage(&stage, orient, line, &mut trace)?;
        let register = grid.max_register_amplitude();
        let physical = extract(&grid)?;
        let dev = max_abs_diff(physical.amplitudes(), logical(&state, &stage, orient, line).amplitudes());
        rows.push_str(&format!(
            "{i}\t{}\t{}\t{line}\t{dev}\t{register}\n",
            stage.stride(),
            orient.letter()
        ));
        worst = worst.max(dev);
        worst_register = worst_register.max(register);
    }
    let (pi_transfers, shifts, rotations) = trace.counts();

    let walk = if ctx.oracle {
        let steps = config.oracle_steps;
        let plan = CoinPlan::random(n, steps, &mut rng);
        let s0 = WalkState::random(n, &mut rng);
        let physical = run_walk_physical(&s0, steps, &plan, &mut ProtocolTrace::counting())?;
        let logical = evolve(&s0, steps, &plan)?;
        Some((steps, max_abs_diff(physical.amplitudes(), logical.amplitudes())))
    } else {
        None
    };

    ctx.out.write("stages.tsv", &rows)?;
    let report = ConveyorReport {
        config_version: config.version,
        seed,
        n,
        stages: config.stages,
        identity: config.identity,
        tolerance: config.tolerance,
        max_deviation: worst,
        max_register_amplitude: worst_register,
        pi_transfers,
        shifts,
        rotations,
        walk_steps: walk.map(|w| w.0),
        walk_deviation: walk.map(|w| w.1),
    };
    ctx.out.write_json("report.json", &report)?;

    println!(
        "conveyor-verify: n = {n}, {} stages, max deviation {worst:.3e}, max register amplitude {worst_register:.3e}",
        config.stages
    );
    println!("trace: {pi_transfers} pi transfers, {shifts} shifts, {rotations} rotations");
    if let Some((steps, dev)) = walk {
        println!("oracle: {steps}-step physical walk deviates by {dev:.3e}");
    }
    if worst_register > UNITARY_TOL {
        return Err(CliError::Invariant(format!(
            "register sites hold amplitude {worst_register:.3e} after a stage"
        )));
    }
    let total = worst.max(walk.map_or(0.0, |w| w.1));
    if total > config.tolerance {
        return Err(CliError::Tolerance(format!(
            "physical protocol deviates by {total:.3e} (limit {:e})",
            config.tolerance
        )));
    }
    Ok(())
}
