//! Deterministic seed derivation for parallel work units.
//!
//! Every stochastic stage owns a master seed; each repetition, fold shuffle,
//! or Monte Carlo replication draws its RNG from a seed derived here. The
//! derivation is a splitmix64 mix of (master, stream, index), so parallel and
//! serial execution see identical streams regardless of scheduling order.

/// Stream tags keep independent consumers of the same master seed apart.
pub mod stream {
    pub const DML_REPETITION: u64 = 0x01;
    pub const CV_FOLDS: u64 = 0x02;
    pub const PARALLEL_ANALYSIS: u64 = 0x03;
    pub const SIM_COHORT: u64 = 0x04;
    pub const BENCHMARK_REPLICATION: u64 = 0x05;
    pub const CFA_RESTARTS: u64 = 0x06;
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a master seed, a stream tag, and an index.
pub fn derive_seed(master: u64, stream: u64, index: u64) -> u64 {
    let a = splitmix64(master ^ splitmix64(stream));
    splitmix64(a ^ splitmix64(index.wrapping_add(0x51ed_270b)))
}
