use std::fs;

use serde::Serialize;

use qdot_walk::graph::{parse_graph, Graph};
use qdot_walk::io::{distribution_tsv, state_to_json};
use qdot_walk::linalg::C64;
use qdot_walk::walk::{
    apply_coin_cols, apply_coin_rows, evolve, oracle_deviation, position_distribution_after, CoinKind, CoinPlan,
    Orientation, WalkState, NORM_TOL,
};

use super::{rng, Context};
use crate::config::{CoinChoice, Family, Start, WalkConfig};
use crate::error::{CliError, CliResult};

const ORACLE_TOL: f64 = 1e-10;

#[derive(Serialize)]
struct WalkReport {
    config_version: i64,
    seed: u64,
    nodes: usize,
    edges: usize,
    steps: usize,
    coin: String,
    mean: f64,
    std_dev: f64,
    norm_error: f64,
    oracle_deviation: Option<f64>,
}

fn load_graph(config: &WalkConfig) -> CliResult<Graph> {
    if let Some(path) = &config.graph {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read graph {}: {e}", path.display())))?;
        return parse_graph(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())));
    }
    let n = config.nodes.unwrap_or(0);
    Ok(match config.family.expect("checked at load") {
        Family::Complete => Graph::complete(n)?,
        Family::Cycle => Graph::cycle(n)?,
        Family::Path => Graph::path(n)?,
    })
}

fn initial_state(start: &Start, n: usize, rng: &mut impl rand::Rng) -> CliResult<WalkState> {
    Ok(match start {
        Start::Localized { node, coin } => WalkState::localized(n, *node, *coin)?,
        Start::Node { node, coins } => {
            let amps: Vec<(usize, C64)> = coins.iter().map(|c| (c.k, C64::new(c.re, c.im))).collect();
            WalkState::at_node(n, *node, &amps)?
        }
        Start::Random => WalkState::random(n, rng),
    })
}

pub fn cmd_walk(config: &WalkConfig, ctx: &Context) -> CliResult<()> {
    let seed = ctx.seed(config.seed);
    let mut rng = rng(seed);
    let graph = load_graph(config)?;
    let n = graph.node_count();
    let steps = config.steps;
    let plan = match config.coin {
        CoinChoice::Grover => CoinPlan::for_graph(&graph, CoinKind::Grover, steps)?,
        CoinChoice::Dft => CoinPlan::for_graph(&graph, CoinKind::Dft, steps)?,
        CoinChoice::Hadamard => CoinPlan::for_graph(&graph, CoinKind::Hadamard, steps)?,
        CoinChoice::Random => CoinPlan::random(n, steps, &mut rng),
        CoinChoice::RandomUniform => CoinPlan::random_uniform(n, steps, &mut rng),
    };
    let s0 = initial_state(&config.start, n, &mut rng)?;

    let mut spread = String::from("step\tmean\tstd_dev\n");
    let mut state = s0.clone();
    for i in 0..=steps {
        if i > 0 {
            state = match Orientation::for_step(i) {
                Orientation::Horizontal => apply_coin_rows(&state, plan.step(i))?,
                Orientation::Vertical => apply_coin_cols(&state, plan.step(i))?,
            };
        }
        let dist = position_distribution_after(&state, i);
        spread.push_str(&format!("{i}\t{}\t{}\n", dist.mean(), dist.std_dev()));
        if config.snapshot_every > 0 && i % config.snapshot_every == 0 {
            ctx.out.write(&format!("state_{i:05}.json"), &state_to_json(&state))?;
        }
    }
    let last = evolve(&s0, steps, &plan)?;
    if last != state {
        return Err(CliError::Invariant("stepwise and batch evolution disagree".into()));
    }
    let dist = position_distribution_after(&last, steps);
    let norm_error = (dist.total() - 1.0).abs();
    let oracle = if ctx.oracle {
        Some(oracle_deviation(&s0, steps, &plan)?)
    } else {
        None
    };

    ctx.out.write("distribution.tsv", &distribution_tsv(&dist))?;
    ctx.out.write("spread.tsv", &spread)?;
    ctx.out.write("final_state.json", &state_to_json(&last))?;
    let report = WalkReport {
        config_version: config.version,
        seed,
        nodes: n,
        edges: graph.edge_count(),
        steps,
        coin: config.coin.name().to_string(),
        mean: dist.mean(),
        std_dev: dist.std_dev(),
        norm_error,
        oracle_deviation: oracle,
    };
    ctx.out.write_json("report.json", &report)?;

    println!("walk: {n} nodes, {steps} steps, mean {:.6}, std dev {:.6}", report.mean, report.std_dev);
    if norm_error > NORM_TOL {
        return Err(CliError::Invariant(format!("probability lost: |sum p - 1| = {norm_error:.3e}")));
    }
    if let Some(dev) = oracle {
        println!("oracle: max deviation {dev:.3e}");
        if dev > ORACLE_TOL {
            return Err(CliError::Tolerance(format!(
                "grid evolution deviates from the reference by {dev:.3e} (limit {ORACLE_TOL:e})"
            )));
        }
    }
    Ok(())
}
