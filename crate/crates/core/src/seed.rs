//! Deterministic seed derivation.
//!
//! Every random stream in the crate is keyed by a `(parent, tag, index)`
//! triple, so results do not depend on the order in which work is scheduled.

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// SplitMix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn tag_hash(tag: &str) -> u64 {
    tag.bytes().fold(FNV_OFFSET, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(FNV_PRIME)
    })
}

/// Derives a child seed from a parent seed, a stream tag and an index.
#[inline]
pub fn derive_seed(parent: u64, tag: &str, index: u64) -> u64 {
    mix64(mix64(parent ^ tag_hash(tag)).wrapping_add(mix64(index)))
}

/// Fair coin keyed by a seed.
#[inline]
pub fn coin(seed: u64) -> bool {
    mix64(seed) >> 63 == 1
}
