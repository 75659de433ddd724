//! Fixtures shared by the benchmarks.

use planeseg::synth::{synth_scene, SynthParams, SynthScene};

/// A medium-difficulty synthetic scene, fixed across runs.
pub fn scene() -> SynthScene {
    synth_scene(2024, 1, &SynthParams::default())
}

/// The same scene at a larger resolution, for whole-image operations.
pub fn large_scene() -> SynthScene {
    let params = SynthParams {
        width: 640,
        height: 480,
        ..Default::default()
    };
    synth_scene(2024, 2, &params)
}
