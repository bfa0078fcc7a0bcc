//! Fixtures shared by the benchmarks.

use rigidity_core::matching::audit::{draw_sample, SampleMode};
use rigidity_core::matching::{MatchSample, MatchingSetup, Preset};

/// Setup of a preset plus `n` proof samples drawn from it.
pub fn preset_samples(preset: Preset, n: u64) -> (MatchingSetup, Vec<MatchSample>) {
    let setup = preset.setup().expect("preset constants are valid");
    let samples = (0..n).map(|i| draw_sample(&setup, SampleMode::Proof, 17, i)).collect();
    (setup, samples)
}
