use std::sync::Arc;

use super::{bit, check_arch, prefix, StateWitness};
use crate::amplitude::AmplitudeTree;
use crate::architecture::{Architecture, Variant};
use crate::circuit::Circuit;
use crate::error::Result;
use crate::plan::{placeholder_rotations, LayerOp, Plan, Stage, StageKind};
use crate::sim::ProductTerm;

pub const DEFAULT_STAGGER3: usize = 6;

/// `PR`, then `PCNOT_l`, `PCRT_l` for each level, then the open-controlled
/// uncompute of every unused rotation.
pub fn fanin_stage3(n: usize) -> Stage {
    let mut moments = vec![(0..n)
        .map(|l| LayerOp::Rot { level: l })
        .collect::<Vec<_>>()];
    for l in 0..n {
        moments.push(vec![LayerOp::Cnot { level: l }]);
        moments.push(vec![LayerOp::CRoute { level: l }]);
    }
    moments.push(
        (0..n)
            .map(|l| LayerOp::OpenCtrlRotInv { level: l })
            .collect(),
    );
    Stage::new("fanin", StageKind::Fanin, moments)
}

fn croute_up(from: usize) -> impl Iterator<Item = Vec<LayerOp>> {
    (0..from).rev().map(|l| vec![LayerOp::CRoute { level: l }])
}

/// `F(n)`, then for `L = n-1..0` the pair `A_L` (clear `M_L` through the
/// root) and `B_L` (move bit `j_{L+1}` from `D_L` to `O_{L+1}`). Each `A` is
/// anchored `stagger` moments after the previous `A` (or `F(n)`); each `B`
/// follows its `A` as soon as the registers allow.
pub fn fanout_stages3(n: usize, stagger: usize, anchor: Option<(usize, usize)>) -> Vec<Stage> {
    let base = anchor.map(|(a, _)| a + 1).unwrap_or(0);
    let mut first: Vec<_> = croute_up(n).collect();
    first.push(vec![LayerOp::NotRoot]);
    let mut head = Stage::new(format!("fanout({n})"), StageKind::Fanout, first);
    if let Some((a, off)) = anchor {
        head = head.after(a, off);
    }
    let mut stages = vec![head];
    let mut last_a = base;
    for l in (0..n).rev() {
        let mut a = vec![vec![LayerOp::SwapUM { level: l }]];
        a.extend(croute_up(l));
        a.push(vec![LayerOp::NotRoot]);
        stages.push(Stage::new(format!("clear M{l}"), StageKind::Fanout, a).after(last_a, stagger));
        last_a = base + stages.len() - 1;

        let mut b = vec![vec![LayerOp::DistSwapUD { level: l }]];
        b.extend(croute_up(l));
        b.push(vec![LayerOp::SwapRootOut]);
        b.extend((1..=l).map(|k| vec![LayerOp::SwapOut { k }]));
        stages.push(Stage::new(format!("output {}", l + 1), StageKind::Fanout, b).after(last_a, 1));
    }
    stages
}

pub fn plan_fanout3(n: usize, stagger: usize) -> Result<Plan> {
    Plan::schedule(Variant::ThreePerNode, n, fanout_stages3(n, stagger, None))
}

pub fn plan_full3(n: usize, stagger: usize) -> Result<Plan> {
    let fanin = fanin_stage3(n);
    let len = fanin.len();
    let mut stages = vec![fanin];
    stages.extend(fanout_stages3(n, stagger, Some((0, len))));
    Plan::schedule(Variant::ThreePerNode, n, stages)
}

pub fn synth_fanin3(tree: &AmplitudeTree, arch: &Arc<Architecture>) -> Result<Circuit> {
    check_arch(arch, Variant::ThreePerNode, tree.n())?;
    let plan = Plan::schedule(
        Variant::ThreePerNode,
        tree.n(),
        vec![fanin_stage3(tree.n())],
    )?;
    plan.to_circuit(arch, &tree.rotation_table())
}

pub fn synth_fanout3(arch: &Arc<Architecture>, stagger: usize) -> Result<Circuit> {
    check_arch(arch, Variant::ThreePerNode, arch.n())?;
    plan_fanout3(arch.n(), stagger)?.to_circuit(arch, &placeholder_rotations(arch.n()))
}

pub fn synth_full3(
    tree: &AmplitudeTree,
    arch: &Arc<Architecture>,
    stagger: usize,
) -> Result<Circuit> {
    check_arch(arch, Variant::ThreePerNode, tree.n())?;
    plan_full3(tree.n(), stagger)?.to_circuit(arch, &tree.rotation_table())
}

/// Path markers of node `(l, j)`: `M` at levels `< m_upto`, set `D` bits at
/// levels `< d_upto`.
fn path_marks(arch: &Architecture, j: usize, l: usize, m_upto: usize, d_upto: usize) -> Vec<u32> {
    let mut ones = Vec::new();
    for lp in 0..m_upto {
        ones.push(arch.m(lp, prefix(j, l, lp)));
    }
    for lp in 0..d_upto {
        if bit(j, l, lp + 1) {
            ones.push(arch.d(lp, prefix(j, l, lp)));
        }
    }
    ones
}

/// State after fanin step `l` (`0 <= l <= n`, before the final uncompute):
/// path markers, pointer `U_{l,j}`, and the untouched pre-rotated `D`s.
/// With `l = n + 1`, the state after the uncompute moment.
pub fn fanin_witness3(tree: &AmplitudeTree, arch: &Architecture, l: usize) -> StateWitness {
    let n = tree.n();
    let finished = l > n;
    let l = l.min(n);
    let table = tree.rotation_table();
    let terms = (0..1usize << l)
        .map(|j| {
            let mut ones = path_marks(arch, j, l, l, l);
            ones.push(arch.u(l, j));
            let mut t = ProductTerm::basis(tree.amplitude(l, j), &ones);
            if !finished {
                for lp in 0..n {
                    for k in 0..1usize << lp {
                        let on_path = lp < l && k == prefix(j, l, lp);
                        if !on_path {
                            t.set(arch.d(lp, k), table.get(lp, k).column(0));
                        }
                    }
                }
            }
            t
        })
        .collect();
    StateWitness {
        label: if finished {
            "fanin final".to_string()
        } else {
            format!("fanin step {l}")
        },
        after_moments: if finished { 2 * n + 2 } else { 1 + 2 * l },
        terms,
    }
}

/// States at every fanout stage boundary of the sequential schedule, in order.
pub fn fanout_witnesses3(tree: &AmplitudeTree, arch: &Architecture) -> Vec<StateWitness> {
    let n = tree.n();
    let mut out = Vec::new();
    let mut t = 2 * n + 2;
    let mut push = |label: String, len: usize, m_upto: usize, d_upto: usize, o_from: usize| {
        t += len;
        let terms = (0..1usize << n)
            .map(|j| {
                let mut ones = path_marks(arch, j, n, m_upto, d_upto);
                for k in o_from..=n {
                    if bit(j, n, k) {
                        ones.push(arch.o(k));
                    }
                }
                ProductTerm::basis(tree.amplitude(n, j), &ones)
            })
            .collect();
        out.push(StateWitness {
            label,
            after_moments: t,
            terms,
        });
    };
    push(format!("fanout({n})"), n + 1, n, n, n + 1);
    for l in (0..n).rev() {
        push(format!("clear M{l}"), l + 2, l, l + 1, l + 2);
        push(format!("output {}", l + 1), 2 * l + 2, l, l, l + 1);
    }
    out
}
