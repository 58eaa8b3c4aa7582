//! Tree-plus-output-line hardware graphs and the parent/ancestor relation.
//!
//! Qubit ids are dense: layer by layer `U_l`, then `M_l` (three per node),
//! then `D_l`, followed by the output line `O_1..O_n`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "2pn")]
    TwoPerNode,
    #[serde(rename = "3pn")]
    ThreePerNode,
}

impl Variant {
    pub fn label(self) -> &'static str {
        match self {
            Variant::TwoPerNode => "2pn",
            Variant::ThreePerNode => "3pn",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2pn" => Ok(Variant::TwoPerNode),
            "3pn" => Ok(Variant::ThreePerNode),
            other => Err(Error::OutOfRange(format!("unknown protocol {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Role {
    U,
    M,
    D,
    O,
}

/// A named qubit. Output qubits use `layer == index == k` for `O_k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QubitId {
    pub role: Role,
    pub layer: usize,
    pub index: usize,
}

impl QubitId {
    pub fn u(layer: usize, index: usize) -> Self {
        QubitId {
            role: Role::U,
            layer,
            index,
        }
    }
    pub fn m(layer: usize, index: usize) -> Self {
        QubitId {
            role: Role::M,
            layer,
            index,
        }
    }
    pub fn d(layer: usize, index: usize) -> Self {
        QubitId {
            role: Role::D,
            layer,
            index,
        }
    }
    pub fn o(k: usize) -> Self {
        QubitId {
            role: Role::O,
            layer: k,
            index: k,
        }
    }
}

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.role {
            Role::O => write!(f, "O{}", self.layer),
            r => write!(f, "{:?}{},{}", r, self.layer, self.index),
        }
    }
}

const ABSENT: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct Architecture {
    variant: Variant,
    n: usize,
    qubits: Vec<QubitId>,
    // first id of each (layer, sublayer U/M/D)
    starts: Vec<[u32; 3]>,
    out_start: u32,
    adjacency: Vec<Vec<u32>>,
}

pub fn build_architecture(variant: Variant, n: usize) -> Result<Architecture> {
    Architecture::new(variant, n)
}

impl Architecture {
    pub fn new(variant: Variant, n: usize) -> Result<Self> {
        if !(1..=24).contains(&n) {
            return Err(Error::InvalidSize(n));
        }
        let mut qubits = Vec::new();
        let mut starts = Vec::with_capacity(n + 1);
        for l in 0..=n {
            let mut s = [ABSENT; 3];
            let roles: &[Role] = match variant {
                Variant::TwoPerNode if l == n => &[Role::U],
                Variant::TwoPerNode => &[Role::U, Role::D],
                Variant::ThreePerNode => &[Role::U, Role::M, Role::D],
            };
            for &role in roles {
                s[role as usize] = qubits.len() as u32;
                qubits.extend((0..1usize << l).map(|j| QubitId {
                    role,
                    layer: l,
                    index: j,
                }));
            }
            starts.push(s);
        }
        let out_start = qubits.len() as u32;
        qubits.extend((1..=n).map(QubitId::o));

        let mut arch = Architecture {
            variant,
            n,
            adjacency: vec![Vec::new(); qubits.len()],
            qubits,
            starts,
            out_start,
        };
        let mut edges = Vec::new();
        for l in 0..=n {
            for j in 0..1usize << l {
                match variant {
                    Variant::TwoPerNode => {
                        if l < n {
                            edges.push((arch.u(l, j), arch.d(l, j)));
                        }
                    }
                    Variant::ThreePerNode => {
                        edges.push((arch.u(l, j), arch.m(l, j)));
                        edges.push((arch.m(l, j), arch.d(l, j)));
                    }
                }
                if l < n {
                    edges.push((arch.d(l, j), arch.u(l + 1, 2 * j)));
                    edges.push((arch.d(l, j), arch.u(l + 1, 2 * j + 1)));
                }
            }
        }
        edges.push((arch.o(1), arch.u(0, 0)));
        for k in 1..n {
            edges.push((arch.o(k), arch.o(k + 1)));
        }
        for (a, b) in edges {
            arch.adjacency[a as usize].push(b);
            arch.adjacency[b as usize].push(a);
        }
        Ok(arch)
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubit(&self, id: u32) -> QubitId {
        self.qubits[id as usize]
    }

    pub fn qubits(&self) -> &[QubitId] {
        &self.qubits
    }

    pub fn output_ids(&self) -> std::ops::Range<u32> {
        self.out_start..self.out_start + self.n as u32
    }

    pub fn is_output(&self, id: u32) -> bool {
        id >= self.out_start
    }

    pub fn neighbors(&self, id: u32) -> &[u32] {
        &self.adjacency[id as usize]
    }

    pub fn adjacent(&self, a: u32, b: u32) -> bool {
        self.adjacency[a as usize].contains(&b)
    }

    pub fn edges(&self) -> Vec<(u32, u32)> {
        let mut out = Vec::new();
        for (a, adj) in self.adjacency.iter().enumerate() {
            for &b in adj {
                if (a as u32) < b {
                    out.push((a as u32, b));
                }
            }
        }
        out
    }

    fn sub(&self, role: Role, l: usize, j: usize) -> u32 {
        let s = self.starts[l][role as usize];
        debug_assert!(s != ABSENT && j < 1 << l, "{role:?}{l},{j} absent");
        s + j as u32
    }

    pub fn u(&self, l: usize, j: usize) -> u32 {
        self.sub(Role::U, l, j)
    }

    pub fn m(&self, l: usize, j: usize) -> u32 {
        self.sub(Role::M, l, j)
    }

    pub fn d(&self, l: usize, j: usize) -> u32 {
        self.sub(Role::D, l, j)
    }

    pub fn o(&self, k: usize) -> u32 {
        debug_assert!((1..=self.n).contains(&k));
        self.out_start + k as u32 - 1
    }

    pub fn id(&self, q: QubitId) -> Result<u32> {
        let unknown = || Error::UnknownQubit(q.to_string());
        if q.role == Role::O {
            if (1..=self.n).contains(&q.layer) && q.index == q.layer {
                return Ok(self.o(q.layer));
            }
            return Err(unknown());
        }
        if q.layer > self.n || q.index >= 1 << q.layer {
            return Err(unknown());
        }
        let s = self.starts[q.layer][q.role as usize];
        if s == ABSENT {
            return Err(unknown());
        }
        Ok(s + q.index as u32)
    }

    pub fn parent(&self, id: u32) -> Result<Option<u32>> {
        let q = *self
            .qubits
            .get(id as usize)
            .ok_or_else(|| Error::UnknownQubit(format!("#{id}")))?;
        Ok(match q.role {
            Role::O if q.layer == self.n => None,
            Role::O => Some(self.o(q.layer + 1)),
            Role::U if q.layer == 0 => Some(self.o(1)),
            Role::U => Some(self.d(q.layer - 1, q.index / 2)),
            Role::M => Some(self.u(q.layer, q.index)),
            Role::D => Some(match self.variant {
                Variant::TwoPerNode => self.u(q.layer, q.index),
                Variant::ThreePerNode => self.m(q.layer, q.index),
            }),
        })
    }

    /// Iterated parents of `U_{l,j}`, excluding `U_{l,j}` itself.
    pub fn ancestors(&self, l: usize, j: usize) -> Vec<u32> {
        let mut out = Vec::new();
        let mut cur = self.u(l, j);
        while let Some(p) = self.parent(cur).expect("valid id") {
            out.push(p);
            cur = p;
        }
        out
    }

    /// Ancestors of `U_{l,j}` together with all their graph neighbours.
    pub fn hat_ancestors(&self, l: usize, j: usize) -> BTreeSet<u32> {
        let mut set = BTreeSet::new();
        for a in self.ancestors(l, j) {
            set.insert(a);
            set.extend(self.neighbors(a).iter().copied());
        }
        set
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let qubits: Vec<_> = self
            .qubits
            .iter()
            .enumerate()
            .map(|(id, q)| {
                serde_json::json!({
                    "role": q.role,
                    "layer": q.layer,
                    "index": q.index,
                    "id": id,
                })
            })
            .collect();
        serde_json::json!({
            "variant": self.variant,
            "n": self.n,
            "qubits": qubits,
            "edges": self.edges(),
        })
    }
}

pub fn verify_degree(arch: &Architecture) -> usize {
    arch.max_degree()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_per_node_counts() {
        let a = Architecture::new(Variant::TwoPerNode, 2).unwrap();
        assert_eq!(a.num_qubits(), 12);
        assert_eq!(a.max_degree(), 3);
        let a = Architecture::new(Variant::TwoPerNode, 1).unwrap();
        let names: Vec<String> = a.qubits().iter().map(|q| q.to_string()).collect();
        assert_eq!(names, ["U0,0", "D0,0", "U1,0", "U1,1", "O1"]);
        let d00 = a.d(0, 0);
        let mut nb = a.neighbors(d00).to_vec();
        nb.sort();
        assert_eq!(nb, vec![a.u(0, 0), a.u(1, 0), a.u(1, 1)]);
    }

    #[test]
    fn three_per_node_counts() {
        let a = Architecture::new(Variant::ThreePerNode, 2).unwrap();
        assert_eq!(a.num_qubits() - 2, 6 * 4 - 3);
        for n in 1..=3 {
            assert_eq!(
                Architecture::new(Variant::ThreePerNode, n)
                    .unwrap()
                    .max_degree(),
                3
            );
            assert_eq!(
                Architecture::new(Variant::TwoPerNode, n)
                    .unwrap()
                    .max_degree(),
                3
            );
        }
    }

    #[test]
    fn rejects_zero_layers() {
        assert!(matches!(
            Architecture::new(Variant::TwoPerNode, 0),
            Err(Error::InvalidSize(0))
        ));
    }

    #[test]
    fn parents() {
        let a = Architecture::new(Variant::TwoPerNode, 3).unwrap();
        assert_eq!(a.parent(a.d(2, 3)).unwrap(), Some(a.u(2, 3)));
        assert_eq!(a.parent(a.u(2, 3)).unwrap(), Some(a.d(1, 1)));
        assert_eq!(a.parent(a.u(0, 0)).unwrap(), Some(a.o(1)));
        assert_eq!(a.parent(a.o(3)).unwrap(), None);
        assert!(a.parent(10_000).is_err());
        let b = Architecture::new(Variant::ThreePerNode, 3).unwrap();
        assert_eq!(b.parent(b.d(1, 1)).unwrap(), Some(b.m(1, 1)));
        assert_eq!(b.parent(b.m(1, 1)).unwrap(), Some(b.u(1, 1)));
    }

    #[test]
    fn ancestor_chains() {
        let a = Architecture::new(Variant::TwoPerNode, 1).unwrap();
        assert_eq!(a.ancestors(1, 0), vec![a.d(0, 0), a.u(0, 0), a.o(1)]);
        let a = Architecture::new(Variant::TwoPerNode, 2).unwrap();
        for j in 0..4 {
            assert_eq!(a.ancestors(2, j).len(), 6);
            let hat = a.hat_ancestors(2, j);
            assert!(a.ancestors(2, j).iter().all(|q| hat.contains(q)));
        }
        let b = Architecture::new(Variant::ThreePerNode, 3).unwrap();
        assert_eq!(b.ancestors(3, 5).len(), 12);
    }

    #[test]
    fn ids_roundtrip() {
        for v in [Variant::TwoPerNode, Variant::ThreePerNode] {
            let a = Architecture::new(v, 3).unwrap();
            for (id, q) in a.qubits().iter().enumerate() {
                assert_eq!(a.id(*q).unwrap(), id as u32);
            }
        }
        let a = Architecture::new(Variant::TwoPerNode, 2).unwrap();
        assert!(a.id(QubitId::m(0, 0)).is_err());
        assert!(a.id(QubitId::d(2, 0)).is_err());
        assert!(a.id(QubitId::o(3)).is_err());
    }
}
