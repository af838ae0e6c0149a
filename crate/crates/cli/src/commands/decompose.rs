use std::fs;

use serde::Serialize;

use qdot_walk::decomp::{cs_decompose, pad_to_power_of_two, reconstruct};
use qdot_walk::io::{stages_to_json, unitary_from_json};
use qdot_walk::linalg::{haar_unitary, max_abs_diff, CMatrix, ONE, ZERO};

use super::{rng, Context};
use crate::config::DecomposeConfig;
use crate::error::{CliError, CliResult};

#[derive(Serialize)]
struct DecomposeReport {
    config_version: i64,
    seed: u64,
    source: &'static str,
    n: usize,
    padded_n: usize,
    stage_count: usize,
    strides: Vec<usize>,
    reconstruction_error: f64,
    oracle_deviation: Option<f64>,
}

/// Applies the stage sequence to each basis vector and compares with the
/// matching column of `u`.
fn column_deviation(seq: &qdot_walk::decomp::StageSequence, u: &CMatrix) -> f64 {
    let n = u.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        let mut v = vec![ZERO; n];
        v[j] = ONE;
        seq.apply(&mut v);
        for (i, z) in v.iter().enumerate() {
            worst = worst.max((z - u[(i, j)]).norm());
        }
    }
    worst
}

pub fn cmd_decompose(config: &DecomposeConfig, ctx: &Context) -> CliResult<()> {
    let seed = ctx.seed(config.seed);
    let (u, source) = match (&config.unitary, config.random_dimension) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read unitary {}: {e}", path.display())))?;
            let u = unitary_from_json(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            (u, "file")
        }
        (None, Some(n)) => {
            if n == 0 {
                return Err(CliError::Config("random_dimension must be positive".into()));
            }
            (haar_unitary(n, &mut rng(seed)), "haar")
        }
        (None, None) => unreachable!("checked at load"),
    };
    let n = u.nrows();
    let padded = pad_to_power_of_two(&u);
    let seq = cs_decompose(&padded)?;
    let error = max_abs_diff(&reconstruct(&seq), &padded);
    let oracle = ctx.oracle.then(|| column_deviation(&seq, &padded));

    ctx.out.write("stages.json", &(stages_to_json(&seq) + "\n"))?;
    let report = DecomposeReport {
        config_version: config.version,
        seed,
        source,
        n,
        padded_n: seq.n(),
        stage_count: seq.len(),
        strides: seq.stages().iter().map(|s| s.stride()).collect(),
        reconstruction_error: error,
        oracle_deviation: oracle,
    };
    ctx.out.write_json("report.json", &report)?;

    println!(
        "decompose: n = {n} (padded {}), {} stages, reconstruction error {error:.3e}",
        seq.n(),
        seq.len()
    );
    let worst = error.max(oracle.unwrap_or(0.0));
    if let Some(dev) = oracle {
        println!("oracle: max column deviation {dev:.3e}");
    }
    if worst > config.tolerance {
        return Err(CliError::Tolerance(format!(
            "reconstruction error {worst:.3e} exceeds {:e}",
            config.tolerance
        )));
    }
    Ok(())
}
