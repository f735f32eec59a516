//! Benchmarks for the numeric kernels on the hot paths: angle synthesis,
//! the forward bench model, the likelihood fit, process reconstruction
//! and the uncertainty-ellipsoid estimator.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use polsim::{
    apply_kraus, canonical_process, chi_from_kraus, ellipsoid_at, fidelity, forward_pipeline,
    mle_reconstruct, sqpt_end_to_end_with, sqpt_inputs, sqpt_reconstruct, synth_angles,
    CountingConfig, DriftModel, WeightedOutput,
};
use polsim_bench::{noisy_record, reference_target, spectrum, synthesis_opd};

fn synthesis(c: &mut Criterion) {
    let target = reference_target();
    let spectrum = spectrum();
    let opd = synthesis_opd(&spectrum);
    let angles = synth_angles(&target);

    c.bench_function("synth_angles", |b| {
        b.iter(|| synth_angles(black_box(&target)))
    });
    c.bench_function("forward_pipeline", |b| {
        b.iter(|| forward_pipeline(black_box(&angles), &spectrum, opd))
    });
    c.bench_function("synthesis_round_trip", |b| {
        b.iter(|| {
            let solved = synth_angles(black_box(&target));
            let produced = forward_pipeline(&solved, &spectrum, opd);
            fidelity(&produced, &target)
        })
    });
}

fn tomography(c: &mut Criterion) {
    let record = noisy_record();
    c.bench_function("mle_reconstruct", |b| {
        b.iter(|| mle_reconstruct(black_box(&record)).expect("fixture record reconstructs"))
    });
}

fn process(c: &mut Criterion) {
    let kraus = canonical_process("coherent_partial_polarizer").expect("catalog process");
    c.bench_function("chi_from_kraus", |b| {
        b.iter(|| chi_from_kraus(black_box(&kraus)))
    });

    let outputs: Vec<WeightedOutput> = sqpt_inputs()
        .iter()
        .map(|rho| {
            let (out, weight) = apply_kraus(&kraus, rho).expect("probe survives");
            WeightedOutput { rho: out, weight }
        })
        .collect();
    let outputs: [WeightedOutput; 4] = outputs.try_into().expect("four probes");
    c.bench_function("sqpt_reconstruct", |b| {
        b.iter(|| sqpt_reconstruct(black_box(&outputs)))
    });

    let counting = CountingConfig {
        drift: DriftModel::none(),
        ..CountingConfig::default()
    };
    c.bench_function("sqpt_end_to_end_counted", |b| {
        b.iter(|| {
            sqpt_end_to_end_with(black_box(&kraus), 100_000.0, &counting, 23)
                .expect("counted reconstruction succeeds")
        })
    });
}

fn uncertainty(c: &mut Criterion) {
    let rho = reference_target();
    let mut group = c.benchmark_group("distinguish");
    group.sample_size(10);
    group.bench_function("ellipsoid_at_25_trials", |b| {
        b.iter(|| {
            ellipsoid_at(black_box(&rho), 25, 300_000.0, 11).expect("ellipsoid estimate succeeds")
        })
    });
    group.finish();
}

criterion_group!(benches, synthesis, tomography, process, uncertainty);
criterion_main!(benches);
