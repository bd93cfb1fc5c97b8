//! Per-path random streams.
//!
//! Every path owns a few ChaCha streams keyed on `(master_seed, path)`: the
//! order flow, the fundamental and the meta-order direction when that is
//! random. A path's draws therefore do not depend on the worker that runs
//! it, on the order in which paths are scheduled, or on which optional
//! channels are switched on.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type PathRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Flow,
    Fundamental,
    Direction,
}

const CHANNELS: u64 = 3;

/// Stream for `channel` of path `path` under `master_seed`.
pub fn path_rng(master_seed: u64, path: u64, channel: Channel) -> PathRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    let offset = match channel {
        Channel::Flow => 0,
        Channel::Fundamental => 1,
        Channel::Direction => 2,
    };
    rng.set_stream(path.wrapping_mul(CHANNELS).wrapping_add(offset));
    rng
}
