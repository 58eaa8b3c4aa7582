use std::sync::Arc;

use super::{bit, check_arch, prefix, StateWitness};
use crate::amplitude::AmplitudeTree;
use crate::architecture::{Architecture, Variant};
use crate::circuit::Circuit;
use crate::error::Result;
use crate::plan::{placeholder_rotations, LayerOp, Plan, Stage, StageKind};
use crate::sim::ProductTerm;

pub const DEFAULT_STAGGER2: usize = 3;

/// `PCR_l` then `PRT_l` for `l = 0..n-1`.
pub fn fanin_stage2(n: usize) -> Stage {
    let moments = (0..n)
        .flat_map(|l| {
            [
                vec![LayerOp::CtrlRot { level: l }],
                vec![LayerOp::Route { level: l }],
            ]
        })
        .collect();
    Stage::new("fanin", StageKind::Fanin, moments)
}

fn route_up(from: usize) -> impl Iterator<Item = Vec<LayerOp>> {
    (0..from).rev().map(|l| vec![LayerOp::Route { level: l }])
}

/// `F(n), F(n-1), .., F(0)`; the first is anchored to `anchor` at `offset`,
/// the rest `stagger` moments after their predecessor.
pub fn fanout_stages2(n: usize, stagger: usize, anchor: Option<(usize, usize)>) -> Vec<Stage> {
    let base = anchor.map(|(a, _)| a + 1).unwrap_or(0);
    let mut first: Vec<_> = route_up(n).collect();
    first.push(vec![LayerOp::NotRoot]);
    let mut head = Stage::new(format!("fanout({n})"), StageKind::Fanout, first);
    if let Some((a, off)) = anchor {
        head = head.after(a, off);
    }
    let mut stages = vec![head];
    for l in (0..n).rev() {
        let mut m = vec![vec![LayerOp::SwapUD { level: l }]];
        m.extend(route_up(l));
        m.push(vec![LayerOp::SwapRootOut]);
        m.extend((1..=l).map(|k| vec![LayerOp::SwapOut { k }]));
        let prev = base + stages.len() - 1;
        stages.push(Stage::new(format!("fanout({l})"), StageKind::Fanout, m).after(prev, stagger));
    }
    stages
}

pub fn plan_fanout2(n: usize, stagger: usize) -> Result<Plan> {
    Plan::schedule(Variant::TwoPerNode, n, fanout_stages2(n, stagger, None))
}

pub fn plan_full2(n: usize, stagger: usize) -> Result<Plan> {
    let fanin = fanin_stage2(n);
    let len = fanin.len();
    let mut stages = vec![fanin];
    stages.extend(fanout_stages2(n, stagger, Some((0, len))));
    Plan::schedule(Variant::TwoPerNode, n, stages)
}

pub fn synth_fanin2(tree: &AmplitudeTree, arch: &Arc<Architecture>) -> Result<Circuit> {
    check_arch(arch, Variant::TwoPerNode, tree.n())?;
    let plan = Plan::schedule(Variant::TwoPerNode, tree.n(), vec![fanin_stage2(tree.n())])?;
    plan.to_circuit(arch, &tree.rotation_table())
}

pub fn synth_fanout2(arch: &Arc<Architecture>, stagger: usize) -> Result<Circuit> {
    check_arch(arch, Variant::TwoPerNode, arch.n())?;
    plan_fanout2(arch.n(), stagger)?.to_circuit(arch, &placeholder_rotations(arch.n()))
}

pub fn synth_full2(
    tree: &AmplitudeTree,
    arch: &Arc<Architecture>,
    stagger: usize,
) -> Result<Circuit> {
    check_arch(arch, Variant::TwoPerNode, tree.n())?;
    plan_full2(tree.n(), stagger)?.to_circuit(arch, &tree.rotation_table())
}

/// D-sublayer path bits `j_1..j_upto` of a level-`l` index.
fn path_bits(arch: &Architecture, j: usize, l: usize, upto: usize, ones: &mut Vec<u32>) {
    for lp in 0..upto {
        if bit(j, l, lp + 1) {
            ones.push(arch.d(lp, prefix(j, l, lp)));
        }
    }
}

/// State after fanin step `l`: `sum_j psi_{l,j} |B_{l,j}>`.
pub fn fanin_witness2(tree: &AmplitudeTree, arch: &Architecture, l: usize) -> StateWitness {
    let terms = (0..1usize << l)
        .map(|j| {
            let mut ones = vec![arch.u(l, j)];
            path_bits(arch, j, l, l, &mut ones);
            ProductTerm::basis(tree.amplitude(l, j), &ones)
        })
        .collect();
    StateWitness {
        label: format!("fanin step {l}"),
        after_moments: 2 * l,
        terms,
    }
}

/// State after `F(l)` in the sequential order: path bits `j_1..j_l` still in
/// the D sublayers, bits `j_{l+1}..j_n` in `O_{l+1}..O_n`.
pub fn fanout_witness2(tree: &AmplitudeTree, arch: &Architecture, l: usize) -> StateWitness {
    let n = tree.n();
    let terms = (0..1usize << n)
        .map(|j| {
            let mut ones = Vec::new();
            path_bits(arch, j, n, l, &mut ones);
            for k in l + 1..=n {
                if bit(j, n, k) {
                    ones.push(arch.o(k));
                }
            }
            ProductTerm::basis(tree.amplitude(n, j), &ones)
        })
        .collect();
    // F(n) has n + 1 moments, F(l) for l < n has 2l + 2
    let fanout_done: usize = (n + 1) + (l..n).map(|lp| 2 * lp + 2).sum::<usize>();
    StateWitness {
        label: format!("fanout({l})"),
        after_moments: 2 * n + fanout_done,
        terms,
    }
}
