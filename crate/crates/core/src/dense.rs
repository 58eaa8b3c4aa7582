//! Dense state-vector oracle.
//!
//! Qubits that no gate ever touches only see Pauli errors, which keep them in
//! a product with the rest, so they are carried as separate 2-vectors. The
//! remaining qubits form one dense vector. This is exact.

use std::collections::HashMap;

use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::linalg::{Mat2, C64, ONE, ZERO};
use crate::noise::ErrorConfig;

pub const DEFAULT_GUARD: usize = 24;

#[derive(Clone, Debug)]
pub struct DenseState {
    /// Qubit id of each local bit position.
    active: Vec<u32>,
    local: HashMap<u32, usize>,
    vec: Vec<C64>,
    idle: HashMap<u32, [C64; 2]>,
    num_qubits: usize,
}

/// Qubits touched by at least one gate, ascending.
pub fn active_qubits(circuit: &Circuit) -> Vec<u32> {
    let mut seen = vec![false; circuit.arch().num_qubits()];
    for m in circuit.moments() {
        for g in m {
            for q in g.qubits() {
                seen[q as usize] = true;
            }
        }
    }
    (0..seen.len() as u32)
        .filter(|&q| seen[q as usize])
        .collect()
}

impl DenseState {
    /// Basis state with `ones` excited.
    pub fn basis(num_qubits: usize, active: Vec<u32>, ones: &[u32], guard: usize) -> Result<Self> {
        if active.len() > guard {
            return Err(Error::DenseGuard {
                needed: active.len(),
                guard,
            });
        }
        let local: HashMap<u32, usize> = active.iter().enumerate().map(|(i, &q)| (q, i)).collect();
        let mut idle = HashMap::new();
        for q in 0..num_qubits as u32 {
            if !local.contains_key(&q) {
                idle.insert(q, [ONE, ZERO]);
            }
        }
        let mut index = 0usize;
        for &q in ones {
            match local.get(&q) {
                Some(&b) => index |= 1 << b,
                None => {
                    idle.insert(q, [ZERO, ONE]);
                }
            }
        }
        let mut vec = vec![ZERO; 1 << active.len()];
        vec[index] = ONE;
        Ok(DenseState {
            active,
            local,
            vec,
            idle,
            num_qubits,
        })
    }

    /// Arbitrary vector over the active qubits, all idle qubits `|0>`.
    pub fn from_vector(num_qubits: usize, active: Vec<u32>, vec: Vec<C64>) -> Result<Self> {
        let mut s = Self::basis(num_qubits, active, &[], usize::MAX)?;
        if vec.len() != s.vec.len() {
            return Err(Error::SizeMismatch {
                what: "dense vector",
                found: vec.len(),
                expected: s.vec.len(),
            });
        }
        s.vec = vec;
        Ok(s)
    }

    pub fn vector(&self) -> &[C64] {
        &self.vec
    }

    fn bit(&self, q: u32) -> usize {
        1 << self.local[&q]
    }

    fn single(&mut self, q: u32, u: &Mat2, ctrl: Option<(usize, bool)>) {
        let b = self.bit(q);
        for i in 0..self.vec.len() {
            if i & b != 0 {
                continue;
            }
            if let Some((cb, on)) = ctrl {
                if (i & cb != 0) != on {
                    continue;
                }
            }
            let v = u.apply([self.vec[i], self.vec[i | b]]);
            self.vec[i] = v[0];
            self.vec[i | b] = v[1];
        }
    }

    fn permute(&mut self, f: impl Fn(usize) -> usize) {
        let mut out = vec![ZERO; self.vec.len()];
        for (i, x) in self.vec.iter().enumerate() {
            out[f(i)] += *x;
        }
        self.vec = out;
    }

    pub fn apply_gate(&mut self, g: &Gate) {
        let swap_bits = |i: usize, a: usize, b: usize| {
            if (i & a != 0) != (i & b != 0) {
                i ^ a ^ b
            } else {
                i
            }
        };
        match *g {
            Gate::Rot1 { q, u } => self.single(q, &u, None),
            Gate::CRot { c, t, u } => {
                let cb = self.bit(c);
                self.single(t, &u, Some((cb, true)))
            }
            Gate::OpenCRot { c, t, u } => {
                let cb = self.bit(c);
                self.single(t, &u, Some((cb, false)))
            }
            Gate::CNot { c, t } => {
                let (cb, tb) = (self.bit(c), self.bit(t));
                self.permute(|i| if i & cb != 0 { i ^ tb } else { i })
            }
            Gate::Swap { a, b } | Gate::DistSwap { a, b, .. } => {
                let (ab, bb) = (self.bit(a), self.bit(b));
                self.permute(|i| swap_bits(i, ab, bb))
            }
            Gate::Route { rt, inp, lo, ro } => {
                let (r, x, l, o) = (self.bit(rt), self.bit(inp), self.bit(lo), self.bit(ro));
                self.permute(|i| swap_bits(i, x, if i & r != 0 { o } else { l }))
            }
            Gate::CRoute { m, d, inp, lo, ro } => {
                let (mb, db) = (self.bit(m), self.bit(d));
                let (x, l, o) = (self.bit(inp), self.bit(lo), self.bit(ro));
                self.permute(|i| {
                    if i & mb == 0 {
                        i
                    } else {
                        swap_bits(i, x, if i & db != 0 { o } else { l })
                    }
                })
            }
        }
    }

    pub fn apply_pauli(&mut self, q: u32, p: &Mat2) {
        if let Some(v) = self.idle.get_mut(&q) {
            *v = p.apply(*v);
        } else {
            self.single(q, p, None);
        }
    }

    pub fn run(&mut self, circuit: &Circuit, config: Option<&ErrorConfig>) -> Result<()> {
        if let Some(c) = config {
            if c.len() != circuit.depth() {
                return Err(Error::ConfigLength {
                    found: c.len(),
                    expected: circuit.depth(),
                });
            }
        }
        for (m, gates) in circuit.moments().iter().enumerate() {
            for g in gates {
                self.apply_gate(g);
            }
            if let Some(c) = config {
                for &(q, p) in c.moment(m) {
                    self.apply_pauli(q, &p.matrix());
                }
            }
        }
        Ok(())
    }

    /// Full-register expansion `index -> amplitude`, bit `q` = qubit `q`.
    pub fn to_basis_map(&self) -> HashMap<u64, C64> {
        assert!(self.num_qubits <= 64);
        let mut idle_parts = vec![(0u64, ONE)];
        let mut idle: Vec<_> = self.idle.iter().collect();
        idle.sort_by_key(|(q, _)| **q);
        for (&q, v) in idle {
            idle_parts = idle_parts
                .into_iter()
                .flat_map(|(k, x)| [(k, x * v[0]), (k | 1 << q, x * v[1])])
                .filter(|(_, x)| x.norm() > 0.0)
                .collect();
        }
        let mut out = HashMap::new();
        for (i, x) in self.vec.iter().enumerate() {
            if x.norm() == 0.0 {
                continue;
            }
            let mut k = 0u64;
            for (b, &q) in self.active.iter().enumerate() {
                if i >> b & 1 == 1 {
                    k |= 1 << q;
                }
            }
            for &(ik, y) in &idle_parts {
                out.insert(k | ik, x * y);
            }
        }
        out
    }

    pub fn norm_sqr(&self) -> f64 {
        let idle: f64 = self
            .idle
            .values()
            .map(|v| v[0].norm_sqr() + v[1].norm_sqr())
            .product();
        self.vec.iter().map(|x| x.norm_sqr()).sum::<f64>() * idle
    }
}

/// Run from the standard initial state (`U_{0,0}` excited).
pub fn dense_run(
    circuit: &Circuit,
    config: Option<&ErrorConfig>,
    guard: usize,
) -> Result<DenseState> {
    let arch = circuit.arch();
    let mut s = DenseState::basis(
        arch.num_qubits(),
        active_qubits(circuit),
        &[arch.u(0, 0)],
        guard,
    )?;
    s.run(circuit, config)?;
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::architecture::{Architecture, Variant};
    use std::sync::Arc;

    #[test]
    fn route_moves_excitation_and_idle_qubits_see_paulis() {
        let a = Arc::new(Architecture::new(Variant::TwoPerNode, 1).unwrap());
        let mut c = Circuit::new(a.clone());
        c.append_moment(vec![Gate::not(a.d(0, 0))]).unwrap();
        c.append_moment(vec![Gate::Route {
            rt: a.d(0, 0),
            inp: a.u(0, 0),
            lo: a.u(1, 0),
            ro: a.u(1, 1),
        }])
        .unwrap();
        let cfg = ErrorConfig::single(2, 1, a.o(1), crate::noise::Pauli::X);
        let s = dense_run(&c, Some(&cfg), DEFAULT_GUARD).unwrap();
        let map = s.to_basis_map();
        let expected = (1u64 << a.d(0, 0)) | (1 << a.u(1, 1)) | (1 << a.o(1));
        assert_eq!(map.len(), 1);
        assert!((map[&expected] - ONE).norm() < 1e-15);
    }

    #[test]
    fn guard() {
        let a = Arc::new(Architecture::new(Variant::TwoPerNode, 1).unwrap());
        assert!(matches!(
            DenseState::basis(a.num_qubits(), vec![0, 1, 2], &[], 2),
            Err(Error::DenseGuard {
                needed: 3,
                guard: 2
            })
        ));
    }
}
