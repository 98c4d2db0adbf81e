//! Regression checks against files in `tests/data`.
//!
//! `los_2x2.{bin,csv}`: `generate_los_channel` for 2x2 Tx and Rx arrays, two
//! wavelengths apart, default amplitude, 5 points over 3.49-3.51 GHz.
//!
//! `reference_sweep.csv`: 8x8 synthetic channel on the 1601-point 3-4 GHz
//! grid, first 2x2 tiles, 20 MHz at 3.5 GHz, ψ_D and ψ_U over 0:60:180 at
//! θ = 90°, all schemes, 20 iterations, seed 7, other settings default.

use std::path::PathBuf;

use sisbf::channel::{
    generate_los_channel, linspace_hz, load_channel, reference_frequency_grid, ChannelFormat,
    DEFAULT_LOS_ALPHA, DEFAULT_SEPARATION_WAVELENGTHS,
};
use sisbf::geometry::ArrayLayout;
use sisbf::objective::ConstraintConfig;
use sisbf::pso::PsoConfig;
use sisbf::sweep::{run_sweep, AngleAxis, SchemeKind, SubarraySelection, SweepContext, SweepGrid};

fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

#[test]
fn los_channel_files_match_generator() {
    let l = ArrayLayout::ura(2, 2).unwrap();
    let freqs = linspace_hz(3.49e9, 3.51e9, 5);
    let want = generate_los_channel(
        &l,
        &l,
        DEFAULT_SEPARATION_WAVELENGTHS,
        &freqs,
        DEFAULT_LOS_ALPHA,
    )
    .unwrap();
    for (name, fmt) in [
        ("los_2x2.bin", ChannelFormat::Binary),
        ("los_2x2.csv", ChannelFormat::Csv),
    ] {
        let got = load_channel(&data(name), fmt).unwrap();
        assert_eq!(got.rx_layout(), want.rx_layout());
        assert_eq!(got.freqs_hz(), want.freqs_hz());
        for (g, w) in got.data().iter().zip(want.data()) {
            assert!((g - w).norm() <= 1e-12 * w.norm(), "{name}: {g} vs {w}");
        }
    }
}

#[test]
fn reference_sweep_matches_golden() {
    let full = ArrayLayout::ura(8, 8).unwrap();
    let ch = generate_los_channel(
        &full,
        &full,
        DEFAULT_SEPARATION_WAVELENGTHS,
        &reference_frequency_grid(),
        DEFAULT_LOS_ALPHA,
    )
    .unwrap();
    let sub = ArrayLayout::ura(2, 2).unwrap();
    let ctx = SweepContext::new(
        &ch,
        &SubarraySelection::first_block(sub),
        3.5e9,
        20e6,
        ConstraintConfig::default_for(4, 4),
        PsoConfig {
            iterations: 20,
            seed: 7,
            ..PsoConfig::default()
        },
    )
    .unwrap();
    let grid = SweepGrid {
        psi_d: AngleAxis::range(0.0, 60.0, 180.0).unwrap(),
        psi_u: AngleAxis::range(0.0, 60.0, 180.0).unwrap(),
        theta_d: AngleAxis::single(90.0).unwrap(),
        theta_u: AngleAxis::single(90.0).unwrap(),
    };
    let got = run_sweep(&grid, &SchemeKind::ALL, &ctx)
        .unwrap()
        .to_csv_string()
        .unwrap();
    let want = std::fs::read_to_string(data("reference_sweep.csv")).unwrap();

    let got: Vec<&str> = got.lines().collect();
    let want: Vec<&str> = want.lines().collect();
    assert_eq!(got.len(), want.len());
    assert_eq!(got.len(), 1 + 16 * 3 + 9);
    for (g, w) in got.iter().zip(&want) {
        for (a, b) in g.split(',').zip(w.split(',')) {
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => assert!((x - y).abs() <= 1e-6 * y.abs().max(1.0), "{g}\n{w}"),
                _ => assert_eq!(a, b),
            }
        }
    }
}
