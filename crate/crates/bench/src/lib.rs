//! Benchmark-only crate; see `benches/hot_paths.rs`.

/// Shared fixture: the adder-erasure family at delta = 0.2 with a
/// designed two-user code, as used across the benchmarks.
pub fn fixture() -> (
    raclab_core::ChannelFamily,
    raclab_core::InputDistribution,
    raclab_core::CodeDesign,
) {
    let ch = raclab_core::channel::make_adder_erasure(2, 0.2).unwrap();
    let px = raclab_core::InputDistribution::bernoulli(0.5).unwrap();
    let stats = raclab_core::ChannelStatistics::compute(&ch, &px).unwrap();
    let design = raclab_core::design::choose_parameters(
        &ch,
        &px,
        &stats,
        raclab_core::design::MessageCount::from_count(16).unwrap(),
        &[0.1, 0.05, 0.05],
        &[40, 90],
        raclab_core::ZeroTestKind::Hoeffding,
        &raclab_core::ThresholdMode::NormalApprox,
    )
    .unwrap();
    (ch, px, design)
}
