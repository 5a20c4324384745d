//! Distributional checks of the generator against the reference table
//! values: average degrees under the preset parameterizations.

use speclore::genmodel::{draw_model, preset_spec, Preset};

fn mean_avg_degree(preset: Preset, reps: usize, seed0: u64) -> f64 {
    let spec = preset_spec(preset).unwrap();
    let mut acc = 0.0;
    for rep in 0..reps {
        let draw = draw_model(&spec, seed0 + rep as u64).unwrap();
        acc += draw.adjacency.degree_stats().avg_degree;
    }
    acc / reps as f64
}

#[test]
fn spec1_average_degrees_match_reference() {
    // tau = 0.5 -> 35.28, tau = 0.75 -> 47.68, tau = 0.25 -> 29.51.
    let cases = [(0.75, 47.68), (0.5, 35.28), (0.25, 29.51)];
    for (tau, want) in cases {
        let got = mean_avg_degree(Preset::Spec1 { tau }, 30, 1000);
        assert!(
            (got - want).abs() < 0.10 * want,
            "tau {tau}: avg degree {got:.2}, reference {want}"
        );
    }
}

#[test]
fn spec3_average_degree_at_denser_sparsity() {
    let got = mean_avg_degree(Preset::Spec3 { alpha_bar: -2.14 }, 30, 2000);
    assert!(
        (got - 58.86).abs() < 0.10 * 58.86,
        "avg degree {got:.2}, reference 58.86"
    );
}

#[test]
fn spec4_average_degree_slightly_below_spec1() {
    let got = mean_avg_degree(
        Preset::Spec4 {
            tau: 0.5,
            alpha_bar: -2.49,
        },
        30,
        3000,
    );
    assert!(
        (got - 34.09).abs() < 0.10 * 34.09,
        "avg degree {got:.2}, reference 34.09"
    );
}
