mod common;

use std::collections::BTreeSet;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pwsim::analysis::{fidelity, perturbed_fidelity, state_fidelity, TriggerPolicy, WTarget};
use pwsim::elements::{ModeMap, UNITARITY_TOL};
use pwsim::fock::{FockState, SpatialMode};
use pwsim::postselection::{project, DetectionPattern, ModeConstraint};
use pwsim::schemes::{build_scheme, PerturbationSpec, Scheme, SchemeParams};

use common::{expand, random_circuit};

fn composed(c: &common::RandomCircuit) -> ModeMap {
    c.elements
        .iter()
        .try_fold(ModeMap::identity(c.registry.clone()), |acc, e| acc.then(&e.to_mode_map(&c.registry)?))
        .unwrap()
}

fn sequential(c: &common::RandomCircuit) -> FockState {
    c.elements.iter().try_fold(c.input.clone(), |s, e| e.apply(&s)).unwrap()
}

fn distance(a: &FockState, b: &FockState) -> f64 {
    let d = FockState::scale_add(&[(Complex64::new(1.0, 0.0), a), (Complex64::new(-1.0, 0.0), b)]).unwrap();
    d.norm_sqr().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn random_circuits_are_unitary_and_norm_preserving(seed in any::<u64>()) {
        let c = random_circuit(&mut ChaCha8Rng::seed_from_u64(seed), 4);
        prop_assert!(composed(&c).unitarity_defect() < UNITARITY_TOL);
        let out = sequential(&c);
        prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        prop_assert_eq!(out.photon_numbers(), c.input.photon_numbers());
    }

    #[test]
    fn sequential_matches_single_shot_expansion(seed in any::<u64>()) {
        let c = random_circuit(&mut ChaCha8Rng::seed_from_u64(seed), 4);
        let one_shot = expand(composed(&c).matrix(), &c.input);
        let seq = sequential(&c);
        prop_assert!(distance(&one_shot, &seq) < 1e-10);
    }

    #[test]
    fn exhaustive_patterns_sum_to_one(seed in any::<u64>()) {
        let c = random_circuit(&mut ChaCha8Rng::seed_from_u64(seed), 3);
        let out = sequential(&c);
        let modes = out.registry().spatial_modes();
        let totals = out.photon_numbers();
        let mut sum = 0.0;
        for &n in BTreeSet::from_iter(totals.iter()) {
            for split in compositions(n, modes.len()) {
                let pattern = DetectionPattern::new(
                    modes.iter().cloned().zip(split.into_iter().map(ModeConstraint::Total)),
                ).unwrap();
                sum += project(&out, &pattern).unwrap().probability;
            }
        }
        prop_assert!((sum - 1.0).abs() < 1e-10, "sum {}", sum);
    }

    #[test]
    fn fidelity_is_symmetric_and_phase_blind(seed in any::<u64>(), theta in -6.0f64..6.0) {
        let c = random_circuit(&mut ChaCha8Rng::seed_from_u64(seed), 3);
        let a = sequential(&c);
        let b = c.input.clone();
        let f = state_fidelity(&a, &b).unwrap();
        prop_assert!((f - state_fidelity(&b, &a).unwrap()).abs() < 1e-12);
        let rotated = a.scaled(Complex64::from_polar(1.0, theta));
        prop_assert!((f - state_fidelity(&rotated, &b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn projection_is_idempotent(seed in any::<u64>()) {
        let c = random_circuit(&mut ChaCha8Rng::seed_from_u64(seed), 3);
        let out = sequential(&c);
        let first = out.registry().spatial_modes()[0].clone();
        let pattern = DetectionPattern::new([(first, ModeConstraint::Total(1))]).unwrap();
        let once = project(&out, &pattern).unwrap();
        if let Some(s) = once.conditional {
            let again = project(&s, &pattern).unwrap();
            prop_assert!((again.probability - 1.0).abs() < 1e-12);
            prop_assert!(distance(again.conditional.as_ref().unwrap(), &s) < 1e-12);
        }
    }

    #[test]
    fn scheme_outputs_match_single_shot(s in 0usize..3, r in proptest::array::uniform3(0.05f64..0.95)) {
        let scheme = Scheme::ALL[s];
        let c = build_scheme(scheme, &SchemeParams::uniform(r).with_phases([0.4, -1.0, 2.0], [1.5, 0.2, -0.3])).unwrap();
        let one_shot = expand(c.composed_map().unwrap().matrix(), c.source());
        prop_assert!(distance(&one_shot, &c.run().unwrap()) < 1e-10);
    }

    #[test]
    fn target_fidelity_phase_blind(c in proptest::array::uniform3(-1.0f64..1.0), theta in -6.0f64..6.0) {
        prop_assume!(c.iter().map(|x| x * x).sum::<f64>() > 1e-3);
        let t = WTarget::from_real(c).unwrap();
        let reg = pwsim::analysis::w_registry();
        let s = t.to_state(pwsim::fock::Polarization::V, &reg).unwrap().scaled(Complex64::from_polar(1.0, theta));
        prop_assert!((fidelity(&s, &t).unwrap() - 1.0).abs() < 1e-12);
    }
}

/// Ways to place `n` photons in `k` ordered paths.
fn compositions(n: u32, k: usize) -> Vec<Vec<u32>> {
    if k == 1 {
        return vec![vec![n]];
    }
    let mut out = Vec::new();
    for first in 0..=n {
        for mut rest in compositions(n - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

#[test]
fn fidelity_depends_only_on_differences() {
    // Asymmetric (delta_kV = 0) and symmetric probes with the same
    // differences agree to second order.
    for scheme in [Scheme::I, Scheme::II] {
        for d in [[0.0, 0.01, 0.0], [0.0, 0.0, 0.01], [0.01, 0.005, -0.004]] {
            let sym = perturbed_fidelity(scheme, TriggerPolicy::D1V, &PerturbationSpec::symmetric(scheme, d))
                .unwrap()
                .unwrap();
            let asym = perturbed_fidelity(scheme, TriggerPolicy::D1V, &PerturbationSpec::h_only(scheme, d))
                .unwrap()
                .unwrap();
            let scale = d.iter().map(|x| x * x).sum::<f64>();
            assert!(((1.0 - sym) - (1.0 - asym)).abs() < 0.05 * scale, "{scheme} {d:?}: {sym} vs {asym}");
        }
    }
}

#[test]
fn delta_one_leaves_scheme_i_fidelity_exact() {
    for d1 in [-0.1, -0.05, 0.02, 0.1] {
        for spec in [PerturbationSpec::symmetric(Scheme::I, [d1, 0.0, 0.0]), PerturbationSpec::h_only(Scheme::I, [d1, 0.0, 0.0])] {
            let f = perturbed_fidelity(Scheme::I, TriggerPolicy::D1V, &spec).unwrap().unwrap();
            assert!((f - 1.0).abs() < 1e-12, "d1 = {d1}: {f}");
        }
    }
}

#[test]
fn aux_paths_are_vacuum_constrained_unless_listed() {
    let reg = pwsim::fock::Registry::from_spatial(&["a", "aux-a"]).unwrap();
    let s = FockState::from_labels(reg, &[(pwsim::fock::ModeLabel::new("aux-a", pwsim::fock::Polarization::H), 1)]).unwrap();
    let p = DetectionPattern::new([(SpatialMode::new("a"), ModeConstraint::Vacuum)]).unwrap();
    assert_eq!(project(&s, &p).unwrap().probability, 0.0);
    let p = DetectionPattern::new([
        (SpatialMode::new("a"), ModeConstraint::Vacuum),
        (SpatialMode::new("aux-a"), ModeConstraint::Unconstrained),
    ])
    .unwrap();
    assert_eq!(project(&s, &p).unwrap().probability, 1.0);
}
