//! Rate-envelope behavior on the reference parameterization: the envelope
//! sandwich against the simulated testing error, and the term balance
//! across latent noise scales.

use speclore::genmodel::{preset_spec, Preset};
use speclore::theory::{rate_bounds, testing_error_mc, RateConfig};

#[test]
fn envelopes_sandwich_the_simulated_testing_error() {
    // The (2m+1)-node testing problem at the reference scale: m = 499,
    // n = 2m + 1 = 999.
    let spec = preset_spec(Preset::Spec1 { tau: 0.5 }).unwrap();
    let m = 499;
    let nu_hat = testing_error_mc(&spec, m, 40_000, 9).unwrap().nu_hat;
    let cfg = RateConfig::new(0.1, 2 * m + 1, 30_000, 256).unwrap();
    let est = rate_bounds(&spec, &cfg, 9).unwrap();
    assert!(nu_hat > 0.0, "no rejections simulated");
    let log_nu = nu_hat.ln();
    assert!(
        log_nu >= est.lower.total.ln() - 0.5,
        "log nu_hat {log_nu:.3} below lower envelope {:.3}",
        est.lower.total.ln()
    );
    assert!(
        log_nu <= est.upper.total.ln() + 0.5,
        "log nu_hat {log_nu:.3} above upper envelope {:.3}",
        est.upper.total.ln()
    );
}

#[test]
fn latent_term_dominance_flips_with_tau() {
    // Small tau: the network term dominates; large tau: the latent term
    // is comparable or dominant.
    let cfg = RateConfig::new(0.1, 1000, 8000, 256).unwrap();
    let small = rate_bounds(
        &preset_spec(Preset::Spec1 { tau: 0.25 }).unwrap(),
        &cfg,
        3,
    )
    .unwrap();
    assert!(
        small.upper.latent_term < 0.2 * small.upper.network_term,
        "tau = 0.25: latent {:.3e} vs network {:.3e}",
        small.upper.latent_term,
        small.upper.network_term
    );
    let large = rate_bounds(
        &preset_spec(Preset::Spec1 { tau: 0.75 }).unwrap(),
        &cfg,
        3,
    )
    .unwrap();
    assert!(
        large.upper.latent_term > 0.5 * large.upper.network_term,
        "tau = 0.75: latent {:.3e} vs network {:.3e}",
        large.upper.latent_term,
        large.upper.network_term
    );
}

#[test]
fn latent_term_strictly_increasing_in_tau() {
    let cfg = RateConfig::new(0.1, 1000, 500, 64).unwrap();
    let mut prev = 0.0;
    for tau in [0.25, 0.5, 0.75] {
        let est = rate_bounds(&preset_spec(Preset::Spec1 { tau }).unwrap(), &cfg, 1).unwrap();
        assert!(est.upper.latent_term > prev, "tau {tau}");
        prev = est.upper.latent_term;
    }
}
