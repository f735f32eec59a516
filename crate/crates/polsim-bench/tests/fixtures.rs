//! The benchmark fixtures must be stable: identical inputs on every run,
//! or criterion comparisons across commits measure the data instead of
//! the code.

use polsim_bench::{noisy_record, reference_target, spectrum, synthesis_opd};

#[test]
fn record_fixture_is_reproducible() {
    let a = noisy_record();
    let b = noisy_record();
    assert_eq!(a.n, b.n);
    assert_eq!(a.duration_s, b.duration_s);
}

#[test]
fn record_fixture_matches_its_target_coarsely() {
    let record = noisy_record();
    let fit = polsim::mle_reconstruct(&record).expect("fixture reconstructs");
    let target = reference_target();
    assert!(polsim::fidelity(&fit.rho, &target) > 0.99);
}

#[test]
fn synthesis_fixture_is_fully_decohering() {
    let spectrum = spectrum();
    let opd = synthesis_opd(&spectrum);
    assert!(opd > 10.0 * polsim::optics::coherence_length(&spectrum));
}
