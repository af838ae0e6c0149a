use serde::Serialize;

use qdot_walk::io::trajectory_tsv;
use qdot_walk::tdse::{bloch_trajectory, calibrate_hold_time, evolve_timeline, well_ground_states, Calibration};

use super::Context;
use crate::config::CalibrateConfig;
use crate::error::{CliError, CliResult};

#[derive(Serialize)]
struct CalibrateReport {
    config_version: i64,
    seed: u64,
    results: Vec<Calibration>,
}

pub fn cmd_calibrate(config: &CalibrateConfig, ctx: &Context) -> CliResult<()> {
    let seed = ctx.seed(config.seed);
    let grid = config.grid.build()?;
    let spec = config.well;
    let template = config.timeline;
    let (phi_l, phi_r) = well_ground_states(&grid, &spec.with_barrier(template.high))?;

    let mut results = Vec::with_capacity(config.targets.len());
    for (i, &target) in config.targets.iter().enumerate() {
        let cal = calibrate_hold_time(&grid, &spec, &template, target, &config.propagation, &config.search)?;
        let traj = evolve_timeline(&phi_l, &grid, &spec, &template.with_hold(cal.hold), &config.propagation)?;
        ctx.out.write(
            &format!("trajectory_{}.tsv", i + 1),
            &trajectory_tsv(&bloch_trajectory(&traj, &phi_l, &phi_r)),
        )?;
        println!(
            "calibrate: target {target:.4} -> hold {:.6}, transfer {:.6}, leakage {:.3e}",
            cal.hold, cal.achieved_transfer, cal.leakage
        );
        results.push(cal);
    }
    ctx.out.write_json(
        "calibration.json",
        &CalibrateReport {
            config_version: config.version,
            seed,
            results: results.clone(),
        },
    )?;

    if let Some(bad) = results.iter().find(|c| c.leakage > config.max_leakage) {
        return Err(CliError::Tolerance(format!(
            "target {} leaks {:.3e} out of the qubit (limit {})",
            bad.target, bad.leakage, config.max_leakage
        )));
    }
    Ok(())
}
