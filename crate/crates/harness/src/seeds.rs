//! Stable sub-seeds. Values depend only on the inputs, never on thread
//! scheduling or the standard library's hasher.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3))
}

/// Seed for (master seed, stage tag, replication, user).
pub fn sub_seed(master: u64, tag: &str, replication: u64, user: u64) -> u64 {
    let mut h = splitmix64(master);
    for part in [fnv1a(tag.as_bytes()), replication, user] {
        h = splitmix64(h ^ part);
    }
    h
}

pub fn rng_for(master: u64, tag: &str, replication: u64, user: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(sub_seed(master, tag, replication, user))
}
