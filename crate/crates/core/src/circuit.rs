//! Moments of disjoint atomic gates over an [`Architecture`].

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::architecture::{Architecture, Variant};
use crate::error::{Error, Result};
use crate::linalg::Mat2;

pub const PAYLOAD_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    Rot1,
    CRot,
    OpenCRot,
    CNot,
    Swap,
    DistSwap,
    Route,
    CRoute,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Rot1 => 1,
            GateKind::CRot | GateKind::OpenCRot | GateKind::CNot | GateKind::Swap => 2,
            GateKind::DistSwap => 3,
            GateKind::Route => 4,
            GateKind::CRoute => 5,
        }
    }

    pub fn has_payload(self) -> bool {
        matches!(self, GateKind::Rot1 | GateKind::CRot | GateKind::OpenCRot)
    }
}

/// An atomic gate. Operand order is significant.
///
/// * `Route { rt, inp, lo, ro }`: swaps `inp` with `lo` when `rt = 0`, with `ro` when `rt = 1`.
/// * `CRoute { m, d, .. }`: identity when `m = 0`, otherwise a `Route` with `rt = d`.
/// * `DistSwap { a, mid, b }`: swaps `a` and `b` across the path `a - mid - b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    Rot1 {
        q: u32,
        u: Mat2,
    },
    CRot {
        c: u32,
        t: u32,
        u: Mat2,
    },
    OpenCRot {
        c: u32,
        t: u32,
        u: Mat2,
    },
    CNot {
        c: u32,
        t: u32,
    },
    Swap {
        a: u32,
        b: u32,
    },
    DistSwap {
        a: u32,
        mid: u32,
        b: u32,
    },
    Route {
        rt: u32,
        inp: u32,
        lo: u32,
        ro: u32,
    },
    CRoute {
        m: u32,
        d: u32,
        inp: u32,
        lo: u32,
        ro: u32,
    },
}

impl Gate {
    pub fn not(q: u32) -> Gate {
        Gate::Rot1 { q, u: Mat2::X }
    }

    pub fn kind(&self) -> GateKind {
        match self {
            Gate::Rot1 { .. } => GateKind::Rot1,
            Gate::CRot { .. } => GateKind::CRot,
            Gate::OpenCRot { .. } => GateKind::OpenCRot,
            Gate::CNot { .. } => GateKind::CNot,
            Gate::Swap { .. } => GateKind::Swap,
            Gate::DistSwap { .. } => GateKind::DistSwap,
            Gate::Route { .. } => GateKind::Route,
            Gate::CRoute { .. } => GateKind::CRoute,
        }
    }

    pub fn qubits(&self) -> Vec<u32> {
        match *self {
            Gate::Rot1 { q, .. } => vec![q],
            Gate::CRot { c, t, .. } | Gate::OpenCRot { c, t, .. } | Gate::CNot { c, t } => {
                vec![c, t]
            }
            Gate::Swap { a, b } => vec![a, b],
            Gate::DistSwap { a, mid, b } => vec![a, mid, b],
            Gate::Route { rt, inp, lo, ro } => vec![rt, inp, lo, ro],
            Gate::CRoute { m, d, inp, lo, ro } => vec![m, d, inp, lo, ro],
        }
    }

    pub fn payload(&self) -> Option<Mat2> {
        match *self {
            Gate::Rot1 { u, .. } | Gate::CRot { u, .. } | Gate::OpenCRot { u, .. } => Some(u),
            _ => None,
        }
    }

    /// Rebuild a gate from its kind, operands and (for payload kinds) 8 params.
    pub fn from_parts(kind: GateKind, q: &[u32], params: &[f64]) -> Result<Gate> {
        if q.len() != kind.arity() {
            return Err(Error::InvalidGate(format!(
                "{kind:?} takes {} qubits, got {}",
                kind.arity(),
                q.len()
            )));
        }
        let u = if kind.has_payload() {
            Mat2::from_params(params).ok_or_else(|| {
                Error::InvalidGate(format!("{kind:?} needs 8 params, got {}", params.len()))
            })?
        } else {
            if !params.is_empty() {
                return Err(Error::InvalidGate(format!("{kind:?} takes no params")));
            }
            Mat2::IDENTITY
        };
        Ok(match kind {
            GateKind::Rot1 => Gate::Rot1 { q: q[0], u },
            GateKind::CRot => Gate::CRot {
                c: q[0],
                t: q[1],
                u,
            },
            GateKind::OpenCRot => Gate::OpenCRot {
                c: q[0],
                t: q[1],
                u,
            },
            GateKind::CNot => Gate::CNot { c: q[0], t: q[1] },
            GateKind::Swap => Gate::Swap { a: q[0], b: q[1] },
            GateKind::DistSwap => Gate::DistSwap {
                a: q[0],
                mid: q[1],
                b: q[2],
            },
            GateKind::Route => Gate::Route {
                rt: q[0],
                inp: q[1],
                lo: q[2],
                ro: q[3],
            },
            GateKind::CRoute => Gate::CRoute {
                m: q[0],
                d: q[1],
                inp: q[2],
                lo: q[3],
                ro: q[4],
            },
        })
    }

    fn check_operands(&self) -> Result<()> {
        let qs = self.qubits();
        let distinct: HashSet<_> = qs.iter().collect();
        if distinct.len() != qs.len() {
            return Err(Error::InvalidGate(format!("{self}: repeated operand")));
        }
        if let Some(u) = self.payload() {
            if !u.is_unitary(PAYLOAD_TOLERANCE) {
                return Err(Error::InvalidGate(format!(
                    "{self}: payload is not unitary"
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}{:?}", self.kind(), self.qubits())
    }
}

/// Operand sets must induce connected subgraphs; cluster gates additionally
/// need their specific shape.
fn connectivity_ok(arch: &Architecture, g: &Gate) -> bool {
    let adj = |a, b| arch.adjacent(a, b);
    match *g {
        Gate::Rot1 { .. } => true,
        Gate::CRot { c: a, t: b, .. }
        | Gate::OpenCRot { c: a, t: b, .. }
        | Gate::CNot { c: a, t: b }
        | Gate::Swap { a, b } => adj(a, b),
        Gate::DistSwap { a, mid, b } => adj(a, mid) && adj(mid, b),
        Gate::Route { rt, inp, lo, ro } => adj(rt, inp) && adj(rt, lo) && adj(rt, ro),
        Gate::CRoute { m, d, inp, lo, ro } => adj(inp, m) && adj(m, d) && adj(d, lo) && adj(d, ro),
    }
}

#[derive(Clone, Debug)]
pub struct Circuit {
    arch: Arc<Architecture>,
    moments: Vec<Vec<Gate>>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ResourceMetrics {
    pub depth: usize,
    pub gate_count: usize,
    pub sta: usize,
    pub per_kind: BTreeMap<GateKind, usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub moment: usize,
    pub gate: usize,
    pub message: String,
}

impl Circuit {
    pub fn new(arch: Arc<Architecture>) -> Self {
        Circuit {
            arch,
            moments: Vec::new(),
        }
    }

    pub fn arch(&self) -> &Architecture {
        &self.arch
    }

    pub fn arch_arc(&self) -> &Arc<Architecture> {
        &self.arch
    }

    pub fn variant(&self) -> Variant {
        self.arch.variant()
    }

    pub fn n(&self) -> usize {
        self.arch.n()
    }

    pub fn moments(&self) -> &[Vec<Gate>] {
        &self.moments
    }

    pub fn depth(&self) -> usize {
        self.moments.len()
    }

    /// Append a moment after checking disjointness and connectivity.
    pub fn append_moment(&mut self, gates: Vec<Gate>) -> Result<()> {
        let mut seen = HashSet::new();
        for g in &gates {
            g.check_operands()?;
            for q in g.qubits() {
                if q as usize >= self.arch.num_qubits() {
                    return Err(Error::UnknownQubit(format!("#{q}")));
                }
                if !seen.insert(q) {
                    return Err(Error::Conflict {
                        qubit: self.arch.qubit(q).to_string(),
                    });
                }
            }
            if !connectivity_ok(&self.arch, g) {
                return Err(Error::Connectivity {
                    gate: self.describe(g),
                });
            }
        }
        let mut gates = gates;
        gates.sort_by_key(|g| g.qubits()[0]);
        self.moments.push(gates);
        Ok(())
    }

    /// Append without checks; used by deserialization so that corrupted files
    /// can still be loaded and reported on.
    fn push_unchecked(&mut self, gates: Vec<Gate>) {
        self.moments.push(gates);
    }

    pub fn describe(&self, g: &Gate) -> String {
        let names: Vec<String> = g
            .qubits()
            .iter()
            .map(|&q| {
                if (q as usize) < self.arch.num_qubits() {
                    self.arch.qubit(q).to_string()
                } else {
                    format!("#{q}")
                }
            })
            .collect();
        format!("{:?}({})", g.kind(), names.join(", "))
    }

    /// All disjointness, operand and connectivity violations.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let nq = self.arch.num_qubits();
        for (m, gates) in self.moments.iter().enumerate() {
            let mut seen = HashSet::new();
            for (i, g) in gates.iter().enumerate() {
                let mut push = |message: String| {
                    out.push(Violation {
                        moment: m,
                        gate: i,
                        message,
                    })
                };
                if g.qubits().iter().any(|&q| q as usize >= nq) {
                    push(format!("{}: unknown qubit", self.describe(g)));
                    continue;
                }
                if let Err(e) = g.check_operands() {
                    push(e.to_string());
                }
                for q in g.qubits() {
                    if !seen.insert(q) {
                        push(format!("qubit {} used twice in moment", self.arch.qubit(q)));
                    }
                }
                if !connectivity_ok(&self.arch, g) {
                    push(format!("{} is not connectivity-legal", self.describe(g)));
                }
            }
        }
        out
    }

    pub fn validate_connectivity(&self) -> Result<(), Vec<Violation>> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            Err(v)
        }
    }

    pub fn metrics(&self) -> ResourceMetrics {
        let mut first = vec![usize::MAX; self.arch.num_qubits()];
        let mut last = vec![0usize; self.arch.num_qubits()];
        let mut per_kind = BTreeMap::new();
        let mut gate_count = 0;
        for (m, gates) in self.moments.iter().enumerate() {
            for g in gates {
                gate_count += 1;
                *per_kind.entry(g.kind()).or_insert(0) += 1;
                for q in g.qubits() {
                    let q = q as usize;
                    first[q] = first[q].min(m);
                    last[q] = m;
                }
            }
        }
        let sta = first
            .iter()
            .zip(&last)
            .filter(|(f, _)| **f != usize::MAX)
            .map(|(f, l)| l - f + 1)
            .sum();
        ResourceMetrics {
            depth: self.depth(),
            gate_count,
            sta,
            per_kind,
        }
    }

    /// Moments of `self` followed by those of `other` (same architecture).
    pub fn concat(&self, other: &Circuit) -> Result<Circuit> {
        if self.arch.variant() != other.arch.variant() || self.arch.n() != other.arch.n() {
            return Err(Error::SizeMismatch {
                what: "architecture",
                found: other.arch.n(),
                expected: self.arch.n(),
            });
        }
        let mut out = self.clone();
        out.moments.extend(other.moments.iter().cloned());
        Ok(out)
    }

    pub fn to_file(&self) -> CircuitFile {
        CircuitFile {
            variant: self.arch.variant(),
            n: self.arch.n(),
            moments: self
                .moments
                .iter()
                .map(|gates| {
                    let mut recs: Vec<GateRecord> = gates
                        .iter()
                        .map(|g| GateRecord {
                            kind: g.kind(),
                            qubits: g.qubits(),
                            params: g.payload().map(|u| u.to_params()).unwrap_or_default(),
                        })
                        .collect();
                    recs.sort_by(|a, b| a.qubits.cmp(&b.qubits));
                    recs
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_file()).expect("circuit serializes")
    }

    /// Load a circuit file. Structural errors are reported later by
    /// [`Circuit::validate`], not here.
    pub fn from_file(file: &CircuitFile) -> Result<Circuit> {
        let arch = Arc::new(Architecture::new(file.variant, file.n)?);
        let mut c = Circuit::new(arch);
        for moment in &file.moments {
            let gates = moment
                .iter()
                .map(|r| Gate::from_parts(r.kind, &r.qubits, &r.params))
                .collect::<Result<Vec<_>>>()?;
            c.push_unchecked(gates);
        }
        Ok(c)
    }

    pub fn from_json(s: &str) -> Result<Circuit> {
        Circuit::from_file(&serde_json::from_str(s)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub kind: GateKind,
    pub qubits: Vec<u32>,
    #[serde(default)]
    pub params: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitFile {
    pub variant: Variant,
    pub n: usize,
    pub moments: Vec<Vec<GateRecord>>,
}
