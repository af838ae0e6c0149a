use serde::Serialize;

use qdot_walk::io::{trajectory_tsv, wavefunction_to_json};
use qdot_walk::linalg::max_abs_diff_slice;
use qdot_walk::tdse::{bloch_trajectory, evolve_timeline, qubit_projection, well_ground_states, TimelineParams};

use super::Context;
use crate::config::{TdseConfig, Well};
use crate::error::{CliError, CliResult};

#[derive(Serialize)]
struct TdseReport {
    config_version: i64,
    seed: u64,
    duration: f64,
    samples: usize,
    alpha_sqr: f64,
    beta_sqr: f64,
    leakage: f64,
    relative_phase: Option<f64>,
    norm: f64,
    halving_difference: Option<f64>,
}

pub fn cmd_tdse(config: &TdseConfig, ctx: &Context) -> CliResult<()> {
    let seed = ctx.seed(config.seed);
    let grid = config.grid.build()?;
    let spec = config.well;
    let timeline = config.timeline;
    let (phi_l, phi_r) = well_ground_states(&grid, &spec.with_barrier(timeline.high))?;
    let psi0 = match config.initial {
        Well::Left => &phi_l,
        Well::Right => &phi_r,
    };
    let traj = evolve_timeline(psi0, &grid, &spec, &timeline, &config.propagation)?;
    let samples = bloch_trajectory(&traj, &phi_l, &phi_r);
    let last = traj.last();
    let q = qubit_projection(last, &phi_l, &phi_r);

    let halving = if ctx.oracle {
        let fine = TimelineParams {
            dt: config.propagation.dt / 2.0,
            ..config.propagation
        };
        let fine_traj = evolve_timeline(psi0, &grid, &spec, &timeline, &fine)?;
        Some(max_abs_diff_slice(last.amplitudes(), fine_traj.last().amplitudes()))
    } else {
        None
    };

    ctx.out.write("trajectory.tsv", &trajectory_tsv(&samples))?;
    ctx.out.write("final_state.json", &(wavefunction_to_json(last) + "\n"))?;
    let report = TdseReport {
        config_version: config.version,
        seed,
        duration: timeline.duration(),
        samples: samples.len(),
        alpha_sqr: q.alpha.norm_sqr(),
        beta_sqr: q.beta.norm_sqr(),
        leakage: q.leakage,
        relative_phase: q.relative_phase(),
        norm: last.norm_sqr().sqrt(),
        halving_difference: halving,
    };
    ctx.out.write_json("report.json", &report)?;

    println!(
        "tdse: t = {:.4}, |alpha|^2 = {:.6}, |beta|^2 = {:.6}, leakage {:.3e}",
        report.duration, report.alpha_sqr, report.beta_sqr, report.leakage
    );
    if let Some(diff) = halving {
        println!("oracle: final state changes by {diff:.3e} when dt is halved");
        if diff > config.halving_tolerance {
            return Err(CliError::Tolerance(format!(
                "time-step halving changes the final state by {diff:.3e} (limit {:e})",
                config.halving_tolerance
            )));
        }
    }
    Ok(())
}
