//! Shared fixtures for the benchmarks.

use dpsoliton::wave::{solve_base, solve_profile, Profile, WaveParams};

pub fn params() -> WaveParams {
    WaveParams::new(0.1, 1.0).expect("valid parameters")
}

/// The `L = 40, h = 0.02` profile used by the Evans and Lax benchmarks.
pub fn evans_profile() -> Profile {
    solve_base(&params(), 40.0, 0.02, Default::default()).expect("profile")
}

/// The `L = 100, h = 0.04` profile (with `∂_c u₀`) used for kernel and evolution.
pub fn evolve_profile() -> Profile {
    solve_profile(&params(), 100.0, 0.04).expect("profile")
}
