mod calibrate;
mod conveyor;
mod decompose;
mod tdse;
mod walk;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use calibrate::cmd_calibrate;
pub use conveyor::cmd_conveyor_verify;
pub use decompose::cmd_decompose;
pub use tdse::cmd_tdse;
pub use walk::cmd_walk;

use crate::output::OutDir;

/// Settings shared by every subcommand.
pub struct Context {
    pub out: OutDir,
    /// `--seed`, which takes precedence over the config's `seed`.
    pub seed: Option<u64>,
    pub oracle: bool,
}

impl Context {
    pub fn seed(&self, from_config: Option<u64>) -> u64 {
        self.seed.or(from_config).unwrap_or(0)
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
