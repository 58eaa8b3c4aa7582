//! Sum-of-product-states simulator.
//!
//! Every term is an amplitude times a tensor product of single-qubit factors.
//! Qubits not listed are `|0>`. Gates that are controlled on a superposed
//! factor split the term into its two basis components first, so the
//! representation stays closed under every gate kind the protocols use.

use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use crate::amplitude::TargetState;
use crate::architecture::Architecture;
use crate::circuit::{Circuit, Gate};
use crate::error::{Error, Result};
use crate::linalg::{Mat2, C64, I, ONE, ZERO};
use crate::noise::{ErrorConfig, Pauli};

/// Amplitudes and factor components below this are treated as zero.
pub const PRUNE: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Factor {
    One,
    /// `c0 |0> + c1 |1>`, unit norm, neither component negligible.
    Super(C64, C64),
}

impl Factor {
    pub fn components(self) -> [C64; 2] {
        match self {
            Factor::One => [ZERO, ONE],
            Factor::Super(a, b) => [a, b],
        }
    }
}

fn components(f: Option<Factor>) -> [C64; 2] {
    f.map_or([ONE, ZERO], Factor::components)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductTerm {
    pub amp: C64,
    /// Sorted by qubit, no `|0>` entries.
    pub factors: Vec<(u32, Factor)>,
}

impl ProductTerm {
    /// `amp` times the basis state with exactly `ones` excited.
    pub fn basis(amp: C64, ones: &[u32]) -> Self {
        let mut factors: Vec<_> = ones.iter().map(|&q| (q, Factor::One)).collect();
        factors.sort_by_key(|f| f.0);
        factors.dedup_by_key(|f| f.0);
        ProductTerm { amp, factors }
    }

    pub fn get(&self, q: u32) -> Option<Factor> {
        self.factors
            .binary_search_by_key(&q, |f| f.0)
            .ok()
            .map(|i| self.factors[i].1)
    }

    fn put(&mut self, q: u32, f: Option<Factor>) {
        match (self.factors.binary_search_by_key(&q, |e| e.0), f) {
            (Ok(i), Some(f)) => self.factors[i].1 = f,
            (Ok(i), None) => {
                self.factors.remove(i);
            }
            (Err(i), Some(f)) => self.factors.insert(i, (q, f)),
            (Err(_), None) => {}
        }
    }

    /// Set qubit `q` to the (unit) vector `v`, folding basis-like vectors
    /// into the amplitude.
    pub fn set(&mut self, q: u32, v: [C64; 2]) {
        if v[1].norm() < PRUNE {
            self.amp *= v[0];
            self.put(q, None);
        } else if v[0].norm() < PRUNE {
            self.amp *= v[1];
            self.put(q, Some(Factor::One));
        } else {
            self.put(q, Some(Factor::Super(v[0], v[1])));
        }
    }

    fn swap(&mut self, a: u32, b: u32) {
        let fa = self.get(a);
        let fb = self.get(b);
        if fa != fb {
            self.put(a, fb);
            self.put(b, fa);
        }
    }

    /// Basis components of qubit `q`: `(value, weight, term)`.
    fn split(self, q: u32) -> Split {
        match self.get(q) {
            None => Split::One(false, self),
            Some(Factor::One) => Split::One(true, self),
            Some(Factor::Super(c0, c1)) => {
                let mut zero = self.clone();
                zero.amp *= c0;
                zero.put(q, None);
                let mut one = self;
                one.amp *= c1;
                one.put(q, Some(Factor::One));
                Split::Two(zero, one)
            }
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amp.norm_sqr()
    }

    /// `<self|other>` of the two product states, amplitudes included.
    pub fn overlap(&self, other: &ProductTerm) -> C64 {
        self.amp.conj() * other.amp * factor_overlap(&self.factors, &other.factors)
    }
}

enum Split {
    One(bool, ProductTerm),
    Two(ProductTerm, ProductTerm),
}

impl Split {
    fn each(self, mut f: impl FnMut(bool, ProductTerm)) {
        match self {
            Split::One(v, t) => f(v, t),
            Split::Two(z, o) => {
                f(false, z);
                f(true, o);
            }
        }
    }
}

/// `<a|b>` of two factor lists (amplitudes excluded).
pub fn factor_overlap(a: &[(u32, Factor)], b: &[(u32, Factor)]) -> C64 {
    let mut acc = ONE;
    let (mut i, mut k) = (0, 0);
    while i < a.len() || k < b.len() {
        let qa = a.get(i).map_or(u32::MAX, |e| e.0);
        let qb = b.get(k).map_or(u32::MAX, |e| e.0);
        let (x, y) = if qa == qb {
            i += 1;
            k += 1;
            (a[i - 1].1.components(), b[k - 1].1.components())
        } else if qa < qb {
            i += 1;
            (a[i - 1].1.components(), [ONE, ZERO])
        } else {
            k += 1;
            ([ONE, ZERO], b[k - 1].1.components())
        };
        acc *= x[0].conj() * y[0] + x[1].conj() * y[1];
        if acc.norm() < PRUNE * PRUNE {
            return ZERO;
        }
    }
    acc
}

/// Apply one gate to one term, pushing the resulting terms.
pub fn apply_gate_term(t: ProductTerm, g: &Gate, out: &mut Vec<ProductTerm>) {
    match *g {
        Gate::Rot1 { q, u } => {
            let mut t = t;
            let v = u.apply(components(t.get(q)));
            t.set(q, v);
            out.push(t);
        }
        Gate::CRot { c, t: tq, u } | Gate::OpenCRot { c, t: tq, u } => {
            let on = matches!(g, Gate::CRot { .. });
            t.split(c).each(|v, mut t| {
                if v == on {
                    let w = u.apply(components(t.get(tq)));
                    t.set(tq, w);
                }
                out.push(t);
            });
        }
        Gate::CNot { c, t: tq } => t.split(c).each(|v, mut t| {
            if v {
                let [a, b] = components(t.get(tq));
                t.set(tq, [b, a]);
            }
            out.push(t);
        }),
        Gate::Swap { a, b } | Gate::DistSwap { a, b, .. } => {
            let mut t = t;
            t.swap(a, b);
            out.push(t);
        }
        Gate::Route { rt, inp, lo, ro } => t.split(rt).each(|v, mut t| {
            t.swap(inp, if v { ro } else { lo });
            out.push(t);
        }),
        Gate::CRoute { m, d, inp, lo, ro } => t.split(m).each(|mv, t| {
            if !mv {
                out.push(t);
                return;
            }
            t.split(d).each(|dv, mut t| {
                t.swap(inp, if dv { ro } else { lo });
                out.push(t);
            });
        }),
    }
}

impl Pauli {
    pub fn matrix(self) -> Mat2 {
        match self {
            Pauli::X => Mat2::X,
            Pauli::Y => Mat2::Y,
            Pauli::Z => Mat2::Z,
        }
    }
}

pub fn apply_pauli_term(t: &mut ProductTerm, q: u32, p: Pauli) {
    let [a, b] = components(t.get(q));
    let v = match p {
        Pauli::X => [b, a],
        Pauli::Y => [-I * b, I * a],
        Pauli::Z => [a, -b],
    };
    t.set(q, v);
}

/// Per-moment lookup tables so each term only visits the gates that can act
/// on it: gates touching one of its excited/superposed qubits, plus gates that
/// act nontrivially on `|0...0>` (single-qubit rotations and open controls).
#[derive(Clone, Debug)]
pub struct CompiledCircuit {
    num_qubits: usize,
    moments: Vec<CompiledMoment>,
}

#[derive(Clone, Debug)]
struct CompiledMoment {
    gates: Vec<Gate>,
    owner: Vec<u32>,
    always: Vec<u32>,
}

const NO_GATE: u32 = u32::MAX;

impl CompiledCircuit {
    pub fn new(circuit: &Circuit) -> Self {
        let nq = circuit.arch().num_qubits();
        let moments = circuit
            .moments()
            .iter()
            .map(|gates| {
                let mut owner = vec![NO_GATE; nq];
                let mut always = Vec::new();
                for (i, g) in gates.iter().enumerate() {
                    for q in g.qubits() {
                        owner[q as usize] = i as u32;
                    }
                    if matches!(g, Gate::Rot1 { .. } | Gate::OpenCRot { .. }) {
                        always.push(i as u32);
                    }
                }
                CompiledMoment {
                    gates: gates.clone(),
                    owner,
                    always,
                }
            })
            .collect();
        CompiledCircuit {
            num_qubits: nq,
            moments,
        }
    }

    pub fn depth(&self) -> usize {
        self.moments.len()
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }
}

#[derive(Clone, Debug)]
pub struct SparseState {
    num_qubits: usize,
    terms: Vec<ProductTerm>,
    cap: usize,
    merge: bool,
}

pub fn default_cap(n: usize) -> usize {
    1usize << (n + 10).min(40)
}

impl SparseState {
    pub fn new(num_qubits: usize, terms: Vec<ProductTerm>, cap: usize) -> Self {
        SparseState {
            num_qubits,
            terms,
            cap,
            merge: true,
        }
    }

    /// `|1>` on `U_{0,0}`, everything else `|0>`.
    pub fn initial(arch: &Architecture) -> Self {
        Self::new(
            arch.num_qubits(),
            vec![ProductTerm::basis(ONE, &[arch.u(0, 0)])],
            default_cap(arch.n()),
        )
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    /// Disable merging of identical terms (for soundness checks).
    pub fn without_merging(mut self) -> Self {
        self.merge = false;
        self
    }

    pub fn terms(&self) -> &[ProductTerm] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// `<psi|psi>`, including cross terms between non-orthogonal products.
    pub fn norm_sqr(&self) -> f64 {
        let mut acc = 0.0;
        for (i, a) in self.terms.iter().enumerate() {
            acc += a.norm_sqr();
            for b in &self.terms[i + 1..] {
                acc += 2.0 * a.overlap(b).re;
            }
        }
        acc
    }

    pub fn apply_gate(&mut self, g: &Gate) {
        let mut out = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            apply_gate_term(t, g, &mut out);
        }
        self.terms = out;
        self.tidy();
    }

    fn apply_moment(&mut self, m: &CompiledMoment) {
        let mut out = Vec::with_capacity(self.terms.len());
        let mut relevant: Vec<u32> = Vec::new();
        let mut cur = Vec::new();
        let mut next = Vec::new();
        for t in self.terms.drain(..) {
            relevant.clear();
            relevant.extend(
                t.factors
                    .iter()
                    .map(|f| m.owner[f.0 as usize])
                    .filter(|&g| g != NO_GATE),
            );
            relevant.extend(m.always.iter().copied());
            relevant.sort_unstable();
            relevant.dedup();
            cur.clear();
            cur.push(t);
            for &gi in &relevant {
                let g = &m.gates[gi as usize];
                next.clear();
                for t in cur.drain(..) {
                    apply_gate_term(t, g, &mut next);
                }
                std::mem::swap(&mut cur, &mut next);
            }
            out.append(&mut cur);
        }
        self.terms = out;
    }

    pub fn apply_errors(&mut self, errors: &[(u32, Pauli)]) {
        if errors.is_empty() {
            return;
        }
        for t in &mut self.terms {
            for &(q, p) in errors {
                apply_pauli_term(t, q, p);
            }
        }
        self.tidy();
    }

    /// Merge identical factor maps and drop negligible terms.
    fn tidy(&mut self) {
        if self.merge {
            let mut index: HashMap<FactorKey<'_>, usize> = HashMap::with_capacity(self.terms.len());
            let mut amps: Vec<C64> = Vec::with_capacity(self.terms.len());
            let mut keep: Vec<usize> = Vec::with_capacity(self.terms.len());
            for (i, t) in self.terms.iter().enumerate() {
                match index.entry(FactorKey(&t.factors)) {
                    std::collections::hash_map::Entry::Occupied(e) => amps[*e.get()] += t.amp,
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(amps.len());
                        amps.push(t.amp);
                        keep.push(i);
                    }
                }
            }
            if keep.len() < self.terms.len() {
                let old = std::mem::take(&mut self.terms);
                let mut slots: Vec<Option<ProductTerm>> = old.into_iter().map(Some).collect();
                self.terms = keep
                    .iter()
                    .zip(&amps)
                    .map(|(&i, &a)| {
                        let mut t = slots[i].take().expect("kept once");
                        t.amp = a;
                        t
                    })
                    .collect();
            }
        }
        self.terms.retain(|t| t.amp.norm() >= PRUNE);
    }

    /// Run a compiled circuit with errors injected after every moment.
    pub fn run(&mut self, circuit: &CompiledCircuit, config: Option<&ErrorConfig>) -> Result<()> {
        self.run_traced(circuit, config, |_, _| {})
    }

    /// As [`run`](Self::run), reporting `(moment, term count)` after each moment.
    pub fn run_traced(
        &mut self,
        circuit: &CompiledCircuit,
        config: Option<&ErrorConfig>,
        mut trace: impl FnMut(usize, usize),
    ) -> Result<()> {
        if let Some(c) = config {
            if c.len() != circuit.depth() {
                return Err(Error::ConfigLength {
                    found: c.len(),
                    expected: circuit.depth(),
                });
            }
        }
        for (i, m) in circuit.moments.iter().enumerate() {
            self.apply_moment(m);
            self.tidy();
            if let Some(c) = config {
                self.apply_errors(c.moment(i));
            }
            if self.terms.len() > self.cap {
                return Err(Error::Capacity {
                    cap: self.cap,
                    moment: i,
                    terms: self.terms.len(),
                });
            }
            trace(i, self.terms.len());
        }
        Ok(())
    }

    /// Apply moment `m` of `circuit` followed by `errors`.
    pub fn step(&mut self, circuit: &CompiledCircuit, m: usize, errors: &[(u32, Pauli)]) {
        self.apply_moment(&circuit.moments[m]);
        self.tidy();
        self.apply_errors(errors);
    }

    /// Run only the first `moments` moments, noiselessly.
    pub fn run_prefix(&mut self, circuit: &CompiledCircuit, moments: usize) -> Result<()> {
        for (i, m) in circuit.moments.iter().take(moments).enumerate() {
            self.apply_moment(m);
            self.tidy();
            if self.terms.len() > self.cap {
                return Err(Error::Capacity {
                    cap: self.cap,
                    moment: i,
                    terms: self.terms.len(),
                });
            }
        }
        Ok(())
    }

    /// Full basis expansion `index -> amplitude`, bit `q` of the index being
    /// qubit `q`. Only for small registers.
    pub fn to_basis_map(&self) -> HashMap<u64, C64> {
        assert!(self.num_qubits <= 64);
        let mut out: HashMap<u64, C64> = HashMap::new();
        for t in &self.terms {
            let mut partial = vec![(0u64, t.amp)];
            for &(q, f) in &t.factors {
                let [a, b] = f.components();
                let bit = 1u64 << q;
                partial = partial
                    .into_iter()
                    .flat_map(|(k, x)| [(k, x * a), (k | bit, x * b)])
                    .filter(|(_, x)| x.norm() > 0.0)
                    .collect();
            }
            for (k, x) in partial {
                *out.entry(k).or_insert(ZERO) += x;
            }
        }
        out
    }
}

/// Bitwise key for merging factor maps.
struct FactorKey<'a>(&'a [(u32, Factor)]);

impl PartialEq for FactorKey<'_> {
    fn eq(&self, other: &Self) -> bool {
        self.0.len() == other.0.len()
            && self.0.iter().zip(other.0).all(|(a, b)| {
                a.0 == b.0
                    && match (a.1, b.1) {
                        (Factor::One, Factor::One) => true,
                        (Factor::Super(a0, a1), Factor::Super(b0, b1)) => {
                            bits(a0) == bits(b0) && bits(a1) == bits(b1)
                        }
                        _ => false,
                    }
            })
    }
}

impl Eq for FactorKey<'_> {}

impl Hash for FactorKey<'_> {
    fn hash<H: Hasher>(&self, h: &mut H) {
        for (q, f) in self.0 {
            q.hash(h);
            match f {
                Factor::One => 0u8.hash(h),
                Factor::Super(a, b) => {
                    1u8.hash(h);
                    bits(*a).hash(h);
                    bits(*b).hash(h);
                }
            }
        }
    }
}

fn bits(z: C64) -> (u64, u64) {
    (z.re.to_bits(), z.im.to_bits())
}

/// Largest per-amplitude difference between two small states.
pub fn max_basis_difference(a: &HashMap<u64, C64>, b: &HashMap<u64, C64>) -> f64 {
    let mut worst: f64 = 0.0;
    for (k, x) in a {
        worst = worst.max((x - b.get(k).copied().unwrap_or(ZERO)).norm());
    }
    for (k, y) in b {
        if !a.contains_key(k) {
            worst = worst.max(y.norm());
        }
    }
    worst
}

/// Upper bound on the per-amplitude difference between two term lists whose
/// terms pair up by basis pattern (the noiseless witness situation).
///
/// Terms are matched on their set of excited and superposed qubits; a matched
/// pair `a f - b g` is bounded by `|a - b| + |b| sum ||f_i - g_i||`, an
/// unmatched term by its own amplitude.
pub fn term_list_distance(a: &[ProductTerm], b: &[ProductTerm]) -> f64 {
    fn shape(t: &ProductTerm) -> Vec<(u32, bool)> {
        t.factors
            .iter()
            .map(|(q, f)| (*q, matches!(f, Factor::One)))
            .collect()
    }
    let mut by_shape: HashMap<Vec<(u32, bool)>, Vec<&ProductTerm>> = HashMap::new();
    for t in b {
        by_shape.entry(shape(t)).or_default().push(t);
    }
    let mut worst: f64 = 0.0;
    for t in a {
        let Some(list) = by_shape.get_mut(&shape(t)) else {
            worst = worst.max(t.amp.norm());
            continue;
        };
        let Some(u) = list.pop() else {
            worst = worst.max(t.amp.norm());
            continue;
        };
        let mut d = (t.amp - u.amp).norm();
        for ((_, f), (_, g)) in t.factors.iter().zip(&u.factors) {
            let (x, y) = (f.components(), g.components());
            d += u.amp.norm() * ((x[0] - y[0]).norm_sqr() + (x[1] - y[1]).norm_sqr()).sqrt();
        }
        worst = worst.max(d);
    }
    for list in by_shape.values() {
        for t in list {
            worst = worst.max(t.amp.norm());
        }
    }
    worst
}

/// Non-squared Uhlmann fidelity between the target on the output register and
/// the output's reduced state, `sqrt(<psi| Tr_qram |Phi><Phi| |psi>)`.
///
/// With `|Phi> = sum_k a_k |Q_k>|j_k>` this equals
/// `|| sum_k a_k conj(psi_{j_k}) |Q_k> ||`. Superposed output factors are
/// expanded into their basis components first.
type QramKey = (u32, u8, (u64, u64), (u64, u64));

pub fn output_fidelity(state: &SparseState, arch: &Architecture, target: &TargetState) -> f64 {
    let n = arch.n();
    let out = arch.output_ids();
    // group identical QRAM product states
    let mut groups: Vec<(Vec<(u32, Factor)>, C64)> = Vec::new();
    let mut index: HashMap<Vec<QramKey>, usize> = HashMap::new();
    for t in &state.terms {
        let split = t.factors.partition_point(|f| f.0 < out.start);
        let (qram, outs) = t.factors.split_at(split);
        let mut parts = vec![(0usize, t.amp)];
        for &(q, f) in outs {
            let k = (q - out.start + 1) as usize;
            let bit = 1usize << (n - k);
            let [a, b] = f.components();
            parts = parts
                .into_iter()
                .flat_map(|(j, x)| [(j, x * a), (j | bit, x * b)])
                .filter(|(_, x)| x.norm() > 0.0)
                .collect();
        }
        let coeff: C64 = parts
            .iter()
            .map(|&(j, x)| x * target.amplitude(j).conj())
            .sum();
        if coeff.norm() == 0.0 {
            continue;
        }
        let key: Vec<_> = qram
            .iter()
            .map(|(q, f)| match f {
                Factor::One => (*q, 0u8, (0, 0), (0, 0)),
                Factor::Super(a, b) => (*q, 1u8, bits(*a), bits(*b)),
            })
            .collect();
        match index.get(&key) {
            Some(&g) => groups[g].1 += coeff,
            None => {
                index.insert(key, groups.len());
                groups.push((qram.to_vec(), coeff));
            }
        }
    }
    let mut f2 = 0.0;
    for (i, (qa, ca)) in groups.iter().enumerate() {
        f2 += ca.norm_sqr();
        for (qb, cb) in &groups[i + 1..] {
            f2 += 2.0 * (ca.conj() * cb * factor_overlap(qa, qb)).re;
        }
    }
    f2.max(0.0).sqrt()
}

/// Noiseless run of a whole circuit from the standard initial state.
pub fn run_noiseless(circuit: &Circuit) -> Result<SparseState> {
    let compiled = CompiledCircuit::new(circuit);
    let mut s = SparseState::initial(circuit.arch());
    s.run(&compiled, None)?;
    Ok(s)
}
