//! Layer-level circuit plans and the stage scheduler.
//!
//! A [`LayerOp`] is one parallel operation over a whole sublayer (for example
//! every `Route` rooted at `D_l`). A protocol is a list of [`Stage`]s, each a
//! straight-line run of moments. The scheduler overlaps stages as long as, for
//! every register, all accesses by an earlier stage precede all accesses by a
//! later one; under that rule the packed schedule is the same unitary as
//! running the stages back to back.

use std::collections::HashMap;
use std::sync::Arc;

use crate::amplitude::RotationTable;
use crate::architecture::{Architecture, Variant};
use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::linalg::Mat2;

/// A whole sublayer, or a single output qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Register {
    U(usize),
    M(usize),
    D(usize),
    O(usize),
}

impl Register {
    /// Number of physical qubits in the register.
    pub fn size(self) -> usize {
        match self {
            Register::U(l) | Register::M(l) | Register::D(l) => 1 << l,
            Register::O(_) => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LayerOp {
    /// `r_{l,j}` on every `D_{l,j}`.
    Rot {
        level: usize,
    },
    /// `r_{l,j}` on `D_{l,j}` controlled by `U_{l,j}`.
    CtrlRot {
        level: usize,
    },
    /// `r_{l,j}^dagger` on `D_{l,j}` when `M_{l,j} = 0`.
    OpenCtrlRotInv {
        level: usize,
    },
    /// `U_{l,j} -> M_{l,j}`.
    Cnot {
        level: usize,
    },
    Route {
        level: usize,
    },
    CRoute {
        level: usize,
    },
    SwapUD {
        level: usize,
    },
    SwapUM {
        level: usize,
    },
    DistSwapUD {
        level: usize,
    },
    NotRoot,
    /// `U_{0,0} <-> O_1`.
    SwapRootOut,
    /// `O_k <-> O_{k+1}`.
    SwapOut {
        k: usize,
    },
}

impl LayerOp {
    pub fn registers(&self) -> Vec<Register> {
        use Register::*;
        match *self {
            LayerOp::Rot { level: l } => vec![D(l)],
            LayerOp::CtrlRot { level: l } | LayerOp::SwapUD { level: l } => vec![U(l), D(l)],
            LayerOp::OpenCtrlRotInv { level: l } => vec![M(l), D(l)],
            LayerOp::Cnot { level: l } | LayerOp::SwapUM { level: l } => vec![U(l), M(l)],
            LayerOp::DistSwapUD { level: l } => vec![U(l), M(l), D(l)],
            LayerOp::Route { level: l } => vec![D(l), U(l), U(l + 1)],
            LayerOp::CRoute { level: l } => vec![M(l), D(l), U(l), U(l + 1)],
            LayerOp::NotRoot => vec![U(0)],
            LayerOp::SwapRootOut => vec![U(0), O(1)],
            LayerOp::SwapOut { k } => vec![O(k), O(k + 1)],
        }
    }

    /// Number of parallel gates the op expands to.
    pub fn width(&self) -> usize {
        match *self {
            LayerOp::Rot { level }
            | LayerOp::CtrlRot { level }
            | LayerOp::OpenCtrlRotInv { level }
            | LayerOp::Cnot { level }
            | LayerOp::Route { level }
            | LayerOp::CRoute { level }
            | LayerOp::SwapUD { level }
            | LayerOp::SwapUM { level }
            | LayerOp::DistSwapUD { level } => 1 << level,
            LayerOp::NotRoot | LayerOp::SwapRootOut | LayerOp::SwapOut { .. } => 1,
        }
    }

    pub fn gates(&self, arch: &Architecture, rot: &RotationTable) -> Vec<Gate> {
        let nodes = |l: usize| 0..1usize << l;
        match *self {
            LayerOp::Rot { level: l } => nodes(l)
                .map(|j| Gate::Rot1 {
                    q: arch.d(l, j),
                    u: rot.get(l, j),
                })
                .collect(),
            LayerOp::CtrlRot { level: l } => nodes(l)
                .map(|j| Gate::CRot {
                    c: arch.u(l, j),
                    t: arch.d(l, j),
                    u: rot.get(l, j),
                })
                .collect(),
            LayerOp::OpenCtrlRotInv { level: l } => nodes(l)
                .map(|j| Gate::OpenCRot {
                    c: arch.m(l, j),
                    t: arch.d(l, j),
                    u: rot.get(l, j).adjoint(),
                })
                .collect(),
            LayerOp::Cnot { level: l } => nodes(l)
                .map(|j| Gate::CNot {
                    c: arch.u(l, j),
                    t: arch.m(l, j),
                })
                .collect(),
            LayerOp::Route { level: l } => nodes(l)
                .map(|j| Gate::Route {
                    rt: arch.d(l, j),
                    inp: arch.u(l, j),
                    lo: arch.u(l + 1, 2 * j),
                    ro: arch.u(l + 1, 2 * j + 1),
                })
                .collect(),
            LayerOp::CRoute { level: l } => nodes(l)
                .map(|j| Gate::CRoute {
                    m: arch.m(l, j),
                    d: arch.d(l, j),
                    inp: arch.u(l, j),
                    lo: arch.u(l + 1, 2 * j),
                    ro: arch.u(l + 1, 2 * j + 1),
                })
                .collect(),
            LayerOp::SwapUD { level: l } => nodes(l)
                .map(|j| Gate::Swap {
                    a: arch.u(l, j),
                    b: arch.d(l, j),
                })
                .collect(),
            LayerOp::SwapUM { level: l } => nodes(l)
                .map(|j| Gate::Swap {
                    a: arch.u(l, j),
                    b: arch.m(l, j),
                })
                .collect(),
            LayerOp::DistSwapUD { level: l } => nodes(l)
                .map(|j| Gate::DistSwap {
                    a: arch.u(l, j),
                    mid: arch.m(l, j),
                    b: arch.d(l, j),
                })
                .collect(),
            LayerOp::NotRoot => vec![Gate::not(arch.u(0, 0))],
            LayerOp::SwapRootOut => vec![Gate::Swap {
                a: arch.u(0, 0),
                b: arch.o(1),
            }],
            LayerOp::SwapOut { k } => vec![Gate::Swap {
                a: arch.o(k),
                b: arch.o(k + 1),
            }],
        }
    }
}

pub type Moment = Vec<LayerOp>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StageKind {
    Fanin,
    Fanout,
}

#[derive(Clone, Debug)]
pub struct Stage {
    pub label: String,
    pub kind: StageKind,
    pub moments: Vec<Moment>,
    /// Stage whose start this one is measured from; `None` means time zero.
    pub anchor: Option<usize>,
    /// Minimum start-to-start distance from the anchor.
    pub min_offset: usize,
}

impl Stage {
    pub fn new(label: impl Into<String>, kind: StageKind, moments: Vec<Moment>) -> Self {
        Stage {
            label: label.into(),
            kind,
            moments,
            anchor: None,
            min_offset: 0,
        }
    }

    pub fn after(mut self, anchor: usize, min_offset: usize) -> Self {
        self.anchor = Some(anchor);
        self.min_offset = min_offset;
        self
    }

    pub fn len(&self) -> usize {
        self.moments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.moments.is_empty()
    }

    /// First and last relative access time of every register.
    fn footprint(&self) -> HashMap<Register, (usize, usize)> {
        let mut out: HashMap<Register, (usize, usize)> = HashMap::new();
        for (t, moment) in self.moments.iter().enumerate() {
            for op in moment {
                for r in op.registers() {
                    out.entry(r).and_modify(|e| e.1 = t).or_insert((t, t));
                }
            }
        }
        out
    }
}

/// A scheduled protocol.
#[derive(Clone, Debug)]
pub struct Plan {
    pub variant: Variant,
    pub n: usize,
    pub stages: Vec<Stage>,
    /// Absolute start moment of each stage before empty-moment compaction.
    pub starts: Vec<usize>,
    /// Number of moments by which the scheduler pushed each stage past its
    /// requested offset.
    pub delays: Vec<usize>,
    moments: Vec<Moment>,
    /// Moment index of each packed moment before compaction.
    raw_index: Vec<usize>,
}

impl Plan {
    /// Place the stages as early as their anchors and register hazards allow.
    pub fn schedule(variant: Variant, n: usize, stages: Vec<Stage>) -> Result<Plan> {
        let mut starts: Vec<usize> = Vec::with_capacity(stages.len());
        let mut delays = Vec::with_capacity(stages.len());
        let mut last_access: HashMap<Register, usize> = HashMap::new();
        for (i, stage) in stages.iter().enumerate() {
            let requested = match stage.anchor {
                Some(a) if a < i => starts[a] + stage.min_offset,
                Some(a) => {
                    return Err(Error::Contract(format!(
                        "stage {i} anchored to later stage {a}"
                    )))
                }
                None => stage.min_offset,
            };
            let footprint = stage.footprint();
            let mut start = requested;
            for (reg, (first, _)) in &footprint {
                if let Some(&busy) = last_access.get(reg) {
                    // every earlier access must come strictly before ours
                    start = start.max((busy + 1).saturating_sub(*first));
                }
            }
            for (reg, (_, last)) in &footprint {
                let e = last_access.entry(*reg).or_insert(0);
                *e = (*e).max(start + last);
            }
            delays.push(start - requested);
            starts.push(start);
        }
        let total = stages
            .iter()
            .zip(&starts)
            .map(|(s, &t)| t + s.len())
            .max()
            .unwrap_or(0);
        let mut packed: Vec<Moment> = vec![Vec::new(); total];
        for (stage, &t) in stages.iter().zip(&starts) {
            for (k, m) in stage.moments.iter().enumerate() {
                packed[t + k].extend(m.iter().copied());
            }
        }
        let mut moments = Vec::new();
        let mut raw_index = Vec::new();
        for (t, m) in packed.into_iter().enumerate() {
            if !m.is_empty() {
                moments.push(m);
                raw_index.push(t);
            }
        }
        Ok(Plan {
            variant,
            n,
            stages,
            starts,
            delays,
            moments,
            raw_index,
        })
    }

    pub fn moments(&self) -> &[Moment] {
        &self.moments
    }

    pub fn depth(&self) -> usize {
        self.moments.len()
    }

    /// The stages run back to back with no overlap.
    pub fn sequential_moments(&self) -> Vec<Moment> {
        self.stages
            .iter()
            .flat_map(|s| s.moments.iter().filter(|m| !m.is_empty()).cloned())
            .collect()
    }

    /// Cumulative moment counts at the end of each stage in the sequential order.
    pub fn sequential_boundaries(&self) -> Vec<usize> {
        let mut acc = 0;
        self.stages
            .iter()
            .map(|s| {
                acc += s.moments.iter().filter(|m| !m.is_empty()).count();
                acc
            })
            .collect()
    }

    /// Packed moments spanned by stages of the given kind.
    pub fn span(&self, kind: StageKind) -> usize {
        let (lo, hi) = self
            .stages
            .iter()
            .zip(&self.starts)
            .filter(|(s, _)| s.kind == kind)
            .fold((usize::MAX, 0), |(lo, hi), (s, &t)| {
                (lo.min(t), hi.max(t + s.len()))
            });
        if lo == usize::MAX {
            return 0;
        }
        self.raw_index
            .iter()
            .filter(|&&t| t >= lo && t < hi)
            .count()
    }

    /// Check that no moment uses a register twice.
    pub fn check_disjoint(&self) -> Result<()> {
        for (t, m) in self.moments.iter().enumerate() {
            let mut seen = HashMap::new();
            for op in m {
                for r in op.registers() {
                    if let Some(prev) = seen.insert(r, *op) {
                        return Err(Error::Conflict {
                            qubit: format!("{r:?} in moment {t} ({prev:?} and {op:?})"),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn to_circuit(&self, arch: &Arc<Architecture>, rot: &RotationTable) -> Result<Circuit> {
        expand(arch, rot, &self.moments)
    }

    pub fn to_sequential_circuit(
        &self,
        arch: &Arc<Architecture>,
        rot: &RotationTable,
    ) -> Result<Circuit> {
        expand(arch, rot, &self.sequential_moments())
    }
}

fn expand(arch: &Arc<Architecture>, rot: &RotationTable, moments: &[Moment]) -> Result<Circuit> {
    if rot.n() != arch.n() {
        return Err(Error::SizeMismatch {
            what: "rotation table",
            found: rot.n(),
            expected: arch.n(),
        });
    }
    let mut c = Circuit::new(arch.clone());
    for m in moments {
        c.append_moment(m.iter().flat_map(|op| op.gates(arch, rot)).collect())?;
    }
    Ok(c)
}

/// The rotation payloads used when only the circuit shape matters.
pub fn placeholder_rotations(n: usize) -> RotationTable {
    RotationTable {
        levels: (0..n).map(|l| vec![Mat2::IDENTITY; 1 << l]).collect(),
    }
}
