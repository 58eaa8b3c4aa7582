use std::sync::Arc;

use proptest::prelude::*;
use treeprep::amplitude::{build_tree, TargetState};
use treeprep::architecture::{Architecture, Variant};
use treeprep::linalg::C64;
use treeprep::plan::StageKind;
use treeprep::sim::{term_list_distance, CompiledCircuit, ProductTerm, SparseState};
use treeprep::synth::{self, StateWitness};

/// Output register holding `|j>` with amplitude `psi_j`, QRAM empty.
fn expected_output(arch: &Architecture, target: &TargetState) -> Vec<ProductTerm> {
    let n = arch.n();
    (0..target.len())
        .filter(|&j| target.amplitude(j).norm() > 0.0)
        .map(|j| {
            let ones: Vec<u32> = (1..=n)
                .filter(|k| (j >> (n - k)) & 1 == 1)
                .map(|k| arch.o(k))
                .collect();
            ProductTerm::basis(target.amplitude(j), &ones)
        })
        .collect()
}

fn final_error(variant: Variant, target: &TargetState) -> f64 {
    let tree = build_tree(target);
    let s = synth::synthesize(variant, &tree, None).unwrap();
    let state = treeprep::sim::run_noiseless(&s.circuit).unwrap();
    term_list_distance(state.terms(), &expected_output(&s.arch, target))
}

fn check_witnesses(variant: Variant, target: &TargetState, witnesses: &[StateWitness]) {
    let tree = build_tree(target);
    let s = synth::synthesize(variant, &tree, None).unwrap();
    let seq = CompiledCircuit::new(&s.sequential_circuit().unwrap());
    for w in witnesses {
        let mut state = SparseState::initial(&s.arch);
        state.run_prefix(&seq, w.after_moments).unwrap();
        let d = term_list_distance(state.terms(), &w.terms);
        assert!(
            d < 1e-10,
            "{variant} n={} {}: distance {d}",
            tree.n(),
            w.label
        );
    }
}

fn witnesses2(target: &TargetState) -> Vec<StateWitness> {
    let tree = build_tree(target);
    let arch = Architecture::new(Variant::TwoPerNode, tree.n()).unwrap();
    let n = tree.n();
    let mut w: Vec<_> = (0..=n)
        .map(|l| synth::fanin_witness2(&tree, &arch, l))
        .collect();
    w.extend(
        (0..=n)
            .rev()
            .map(|l| synth::fanout_witness2(&tree, &arch, l)),
    );
    w
}

fn witnesses3(target: &TargetState) -> Vec<StateWitness> {
    let tree = build_tree(target);
    let arch = Architecture::new(Variant::ThreePerNode, tree.n()).unwrap();
    let n = tree.n();
    let mut w: Vec<_> = (0..=n + 1)
        .map(|l| synth::fanin_witness3(&tree, &arch, l))
        .collect();
    w.extend(synth::fanout_witnesses3(&tree, &arch));
    w
}

#[test]
fn one_qubit_targets_land_on_the_output() {
    for variant in [Variant::TwoPerNode, Variant::ThreePerNode] {
        let t = TargetState::new(vec![C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        assert!(final_error(variant, &t) < 1e-12);
    }
}

#[test]
fn basis_targets_are_routed_exactly() {
    for variant in [Variant::TwoPerNode, Variant::ThreePerNode] {
        for n in 1..=4 {
            for k in 0..1 << n {
                let t = TargetState::basis(n, k).unwrap();
                assert_eq!(final_error(variant, &t), 0.0, "{variant} n={n} k={k}");
            }
        }
    }
}

#[test]
fn stage_witnesses_hold_on_random_targets() {
    for n in 1..=5 {
        for seed in 0..50 {
            let t = TargetState::random(n, 1000 * n as u64 + seed).unwrap();
            check_witnesses(Variant::TwoPerNode, &t, &witnesses2(&t));
            check_witnesses(Variant::ThreePerNode, &t, &witnesses3(&t));
        }
    }
}

#[test]
fn witnesses_with_vanishing_subtrees() {
    let z = C64::new(0.0, 0.0);
    let h = C64::new(0.5f64.sqrt(), 0.0);
    let t = TargetState::new(vec![z, z, z, h, z, C64::new(0.0, 0.5f64.sqrt()), z, z]).unwrap();
    check_witnesses(Variant::TwoPerNode, &t, &witnesses2(&t));
    check_witnesses(Variant::ThreePerNode, &t, &witnesses3(&t));
    assert!(final_error(Variant::TwoPerNode, &t) < 1e-12);
    assert!(final_error(Variant::ThreePerNode, &t) < 1e-12);
}

#[test]
fn noiseless_term_counts_stay_below_two_to_the_n() {
    for variant in [Variant::TwoPerNode, Variant::ThreePerNode] {
        for n in 1..=6 {
            let tree = build_tree(&TargetState::random(n, 5).unwrap());
            let s = synth::synthesize(variant, &tree, None).unwrap();
            let compiled = CompiledCircuit::new(&s.circuit);
            let mut state = SparseState::initial(&s.arch);
            let mut worst = 0;
            state
                .run_traced(&compiled, None, |_, t| worst = worst.max(t))
                .unwrap();
            assert!(worst <= 1 << n, "{variant} n={n}: {worst} terms");
        }
    }
}

#[test]
fn pointer_is_unique_during_fanin() {
    for n in 1..=5 {
        let tree = build_tree(&TargetState::random(n, 77).unwrap());
        let arch = Arc::new(Architecture::new(Variant::TwoPerNode, n).unwrap());
        let fanin = synth::synth_fanin2(&tree, &arch).unwrap();
        let compiled = CompiledCircuit::new(&fanin);
        for steps in 0..=fanin.depth() {
            let mut state = SparseState::initial(&arch);
            state.run_prefix(&compiled, steps).unwrap();
            for t in state.terms() {
                let pointers = t
                    .factors
                    .iter()
                    .filter(|(q, _)| arch.qubit(*q).role == treeprep::Role::U)
                    .count();
                assert_eq!(pointers, 1);
            }
        }
    }
}

#[test]
fn three_per_node_fanin_superposes_only_unconsumed_routers() {
    use treeprep::sim::Factor;
    let n = 4;
    let tree = build_tree(&TargetState::random(n, 3).unwrap());
    let arch = Arc::new(Architecture::new(Variant::ThreePerNode, n).unwrap());
    let fanin = synth::synth_fanin3(&tree, &arch).unwrap();
    let compiled = CompiledCircuit::new(&fanin);
    for l in 0..=n {
        let mut state = SparseState::initial(&arch);
        state.run_prefix(&compiled, 1 + 2 * l).unwrap();
        for t in state.terms() {
            for (q, f) in &t.factors {
                if matches!(f, Factor::Super(..)) {
                    let id = arch.qubit(*q);
                    assert_eq!(id.role, treeprep::Role::D);
                    assert!(id.layer < n);
                }
            }
        }
    }
}

#[test]
fn fanout_schedule_lengths() {
    for n in 1..=10 {
        let p2 = synth::plan_fanout2(n, synth::DEFAULT_STAGGER2).unwrap();
        p2.check_disjoint().unwrap();
        assert!(p2.depth() <= 4 * n + 3, "2pn n={n}: {}", p2.depth());
        let p3 = synth::plan_fanout3(n, synth::DEFAULT_STAGGER3).unwrap();
        p3.check_disjoint().unwrap();
        assert!(p3.depth() <= 8 * n + 8, "3pn n={n}: {}", p3.depth());
    }
    // n = 1: F(1) = PRT_0, NOT; F(0) = PS_0, swap to O_1
    let p = synth::plan_fanout2(1, synth::DEFAULT_STAGGER2).unwrap();
    assert_eq!(p.sequential_moments().len(), 4);
}

#[test]
fn too_small_stagger_is_repaired_by_the_scheduler() {
    for n in 2..=6 {
        let p = synth::plan_fanout2(n, 1).unwrap();
        p.check_disjoint().unwrap();
        assert!(p.delays.iter().any(|&d| d > 0));
        let p = synth::plan_fanout3(n, 1).unwrap();
        p.check_disjoint().unwrap();
    }
}

#[test]
fn full_plans_report_phase_spans() {
    for variant in [Variant::TwoPerNode, Variant::ThreePerNode] {
        let p = synth::plan_full(variant, 4, None).unwrap();
        assert_eq!(
            p.span(StageKind::Fanin) + p.span(StageKind::Fanout),
            p.depth()
        );
    }
}

#[test]
fn both_protocols_prepare_the_same_output() {
    for n in 1..=5 {
        let t = TargetState::random(n, 99).unwrap();
        let tree = build_tree(&t);
        let a = synth::synthesize(Variant::TwoPerNode, &tree, None).unwrap();
        let b = synth::synthesize(Variant::ThreePerNode, &tree, None).unwrap();
        let sa = treeprep::sim::run_noiseless(&a.circuit).unwrap();
        let sb = treeprep::sim::run_noiseless(&b.circuit).unwrap();
        let ea = expected_output(&a.arch, &t);
        let eb = expected_output(&b.arch, &t);
        assert!(term_list_distance(sa.terms(), &ea) < 1e-10);
        assert!(term_list_distance(sb.terms(), &eb) < 1e-10);
    }
}

#[test]
fn synthesized_circuits_pass_validation() {
    for variant in [Variant::TwoPerNode, Variant::ThreePerNode] {
        for n in 1..=6 {
            let tree = build_tree(&TargetState::random(n, 1).unwrap());
            let s = synth::synthesize(variant, &tree, None).unwrap();
            assert!(s.circuit.validate().is_empty());
        }
    }
}

#[test]
fn synthesis_is_deterministic() {
    let tree = build_tree(&TargetState::random(3, 8).unwrap());
    for variant in [Variant::TwoPerNode, Variant::ThreePerNode] {
        let a = synth::synthesize(variant, &tree, None)
            .unwrap()
            .circuit
            .to_json();
        let b = synth::synthesize(variant, &tree, None)
            .unwrap()
            .circuit
            .to_json();
        assert_eq!(a, b);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn random_targets_are_prepared(n in 1usize..=5, seed in any::<u64>(), three in any::<bool>()) {
        let variant = if three { Variant::ThreePerNode } else { Variant::TwoPerNode };
        let t = TargetState::random(n, seed).unwrap();
        prop_assert!(final_error(variant, &t) < 1e-10);
    }

    #[test]
    fn any_stagger_is_safe(n in 1usize..=6, stagger in 0usize..10) {
        synth::plan_fanout2(n, stagger).unwrap().check_disjoint().unwrap();
        synth::plan_fanout3(n, stagger).unwrap().check_disjoint().unwrap();
    }
}
