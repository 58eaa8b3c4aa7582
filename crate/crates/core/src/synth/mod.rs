//! Protocol synthesis: fanin, pipelined fanout, and stage witnesses.

mod three;
mod two;

use std::sync::Arc;

pub use three::{
    fanin_stage3, fanin_witness3, fanout_stages3, fanout_witnesses3, plan_fanout3, plan_full3,
    synth_fanin3, synth_fanout3, synth_full3, DEFAULT_STAGGER3,
};
pub use two::{
    fanin_stage2, fanin_witness2, fanout_stages2, fanout_witness2, plan_fanout2, plan_full2,
    synth_fanin2, synth_fanout2, synth_full2, DEFAULT_STAGGER2,
};

use crate::amplitude::{AmplitudeTree, RotationTable};
use crate::architecture::{Architecture, Variant};
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::plan::Plan;
use crate::sim::ProductTerm;

/// Exact sparse state expected at a boundary of the sequential schedule.
#[derive(Clone, Debug)]
pub struct StateWitness {
    pub label: String,
    /// Number of sequential moments after which the witness holds.
    pub after_moments: usize,
    pub terms: Vec<ProductTerm>,
}

pub fn default_stagger(variant: Variant) -> usize {
    match variant {
        Variant::TwoPerNode => DEFAULT_STAGGER2,
        Variant::ThreePerNode => DEFAULT_STAGGER3,
    }
}

/// Full fanin + fanout plan for either protocol.
pub fn plan_full(variant: Variant, n: usize, stagger: Option<usize>) -> Result<Plan> {
    let stagger = stagger.unwrap_or(default_stagger(variant));
    match variant {
        Variant::TwoPerNode => plan_full2(n, stagger),
        Variant::ThreePerNode => plan_full3(n, stagger),
    }
}

/// A synthesized protocol: the plan, its architecture and the expanded circuit.
#[derive(Clone, Debug)]
pub struct Synthesis {
    pub plan: Plan,
    pub arch: Arc<Architecture>,
    pub rotations: RotationTable,
    pub circuit: Circuit,
}

impl Synthesis {
    pub fn sequential_circuit(&self) -> Result<Circuit> {
        self.plan.to_sequential_circuit(&self.arch, &self.rotations)
    }
}

pub fn synthesize(
    variant: Variant,
    tree: &AmplitudeTree,
    stagger: Option<usize>,
) -> Result<Synthesis> {
    synthesize_with(variant, tree.n(), tree.rotation_table(), stagger)
}

pub fn synthesize_with(
    variant: Variant,
    n: usize,
    rotations: RotationTable,
    stagger: Option<usize>,
) -> Result<Synthesis> {
    if rotations.n() != n {
        return Err(Error::SizeMismatch {
            what: "rotation table",
            found: rotations.n(),
            expected: n,
        });
    }
    let arch = Arc::new(Architecture::new(variant, n)?);
    let plan = plan_full(variant, n, stagger)?;
    let circuit = plan.to_circuit(&arch, &rotations)?;
    Ok(Synthesis {
        plan,
        arch,
        rotations,
        circuit,
    })
}

fn check_arch(arch: &Architecture, variant: Variant, n: usize) -> Result<()> {
    if arch.variant() != variant {
        return Err(Error::Contract(format!(
            "expected a {variant} architecture, got {}",
            arch.variant()
        )));
    }
    if arch.n() != n {
        return Err(Error::SizeMismatch {
            what: "architecture",
            found: arch.n(),
            expected: n,
        });
    }
    Ok(())
}

/// Bit `j_k` (1-based, most significant first) of an `l`-bit index.
pub(crate) fn bit(j: usize, l: usize, k: usize) -> bool {
    (j >> (l - k)) & 1 == 1
}

/// Index at level `lp` of the path to node `(l, j)`.
pub(crate) fn prefix(j: usize, l: usize, lp: usize) -> usize {
    j >> (l - lp)
}
