//! Clifford+T accounting over layer plans, precision budgets, and the
//! rotation-perturbation experiment.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::amplitude::{AmplitudeTree, RotationTable};
use crate::architecture::Variant;
use crate::error::{Error, Result};
use crate::linalg::{Mat2, C64};
use crate::plan::{LayerOp, Register};
use crate::sim::{run_noiseless, SparseState};
use crate::synth;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    Geometric,
    Uniform,
}

impl Strategy {
    pub fn label(self) -> &'static str {
        match self {
            Strategy::Geometric => "geometric",
            Strategy::Uniform => "uniform",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric" => Ok(Strategy::Geometric),
            "uniform" => Ok(Strategy::Uniform),
            _ => Err(Error::OutOfRange(format!(
                "unknown strategy `{s}` (geometric | uniform)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TBudget {
    pub epsilon: f64,
    pub strategy: Strategy,
    /// `levels[l]` is the precision of every rotation at tree level `l`.
    pub levels: Vec<f64>,
}

impl TBudget {
    pub fn total(&self) -> f64 {
        self.levels.iter().sum()
    }
}

pub fn allocate_budget(epsilon: f64, n: usize, strategy: Strategy) -> Result<TBudget> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::OutOfRange(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidSize(n));
    }
    let levels = match strategy {
        Strategy::Geometric => (0..n)
            .map(|l| epsilon / 2f64.powi((n - l) as i32))
            .collect(),
        Strategy::Uniform => {
            let mut share = epsilon / n as f64;
            while share * n as f64 > epsilon || (0..n).map(|_| share).sum::<f64>() > epsilon {
                share = share.next_down();
            }
            vec![share; n]
        }
    };
    Ok(TBudget {
        epsilon,
        strategy,
        levels,
    })
}

/// Cost of one exact (error-free) gate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactCost {
    pub t_count: u64,
    pub t_depth: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TCostModel {
    pub k: f64,
    pub k0: u64,
    /// Approximate single-axis rotations per rotation template.
    pub pieces: u64,
    /// Two Fredkin gates.
    pub route: ExactCost,
    /// Two doubly controlled swaps.
    pub croute: ExactCost,
}

impl Default for TCostModel {
    fn default() -> Self {
        TCostModel {
            k: 3.0,
            k0: 0,
            pieces: 4,
            route: ExactCost {
                t_count: 14,
                t_depth: 6,
            },
            croute: ExactCost {
                t_count: 28,
                t_depth: 12,
            },
        }
    }
}

impl TCostModel {
    /// T gates for one axis rotation at precision `eps`.
    pub fn t(&self, eps: f64) -> u64 {
        let raw = (self.k * (1.0 / eps).log2()).ceil();
        raw.max(0.0) as u64 + self.k0
    }

    /// T gates of one rotation template at budget `eps` (each piece gets `eps / pieces`).
    pub fn template(&self, eps: f64) -> u64 {
        self.pieces * self.t(eps / self.pieces as f64)
    }

    /// Per-gate cost of a layer op; templates are sequential on one qubit.
    pub fn op_cost(&self, op: &LayerOp, budget: &TBudget) -> ExactCost {
        match *op {
            LayerOp::Rot { level }
            | LayerOp::CtrlRot { level }
            | LayerOp::OpenCtrlRotInv { level } => {
                let t = self.template(budget.levels[level]);
                ExactCost {
                    t_count: t,
                    t_depth: t,
                }
            }
            LayerOp::Route { .. } => self.route,
            LayerOp::CRoute { .. } => self.croute,
            _ => ExactCost {
                t_count: 0,
                t_depth: 0,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CliffordTMetrics {
    pub protocol: Variant,
    pub n: usize,
    pub epsilon: f64,
    pub strategy: Strategy,
    pub t_count: u64,
    pub t_depth: u64,
    /// In cycles: one per Clifford layer, one per T layer.
    pub sta: u64,
    pub total_budget: f64,
}

impl CliffordTMetrics {
    pub const HEADER: [&'static str; 10] = [
        "protocol",
        "n",
        "epsilon",
        "strategy",
        "t_count",
        "t_depth",
        "sta",
        "ratio_count",
        "ratio_depth",
        "ratio_sta",
    ];

    fn log_inv(&self) -> f64 {
        (1.0 / self.epsilon).log2()
    }

    /// `t_count / (N log2(1/eps))`.
    pub fn ratio_count(&self) -> f64 {
        self.t_count as f64 / ((1u64 << self.n) as f64 * self.log_inv())
    }

    /// `t_depth / (n + log2(1/eps))`.
    pub fn ratio_depth(&self) -> f64 {
        self.t_depth as f64 / (self.n as f64 + self.log_inv())
    }

    /// `sta / (N log2(1/eps))`.
    pub fn ratio_sta(&self) -> f64 {
        self.sta as f64 / ((1u64 << self.n) as f64 * self.log_inv())
    }

    pub fn record(&self) -> Vec<String> {
        vec![
            self.protocol.to_string(),
            self.n.to_string(),
            self.epsilon.to_string(),
            self.strategy.to_string(),
            self.t_count.to_string(),
            self.t_depth.to_string(),
            self.sta.to_string(),
            self.ratio_count().to_string(),
            self.ratio_depth().to_string(),
            self.ratio_sta().to_string(),
        ]
    }
}

struct Timed {
    start: u64,
    end: u64,
}

/// ASAP dataflow over ops in program order; ops only wait on shared registers.
fn dataflow(ops: &[LayerOp], dur: impl Fn(&LayerOp) -> u64) -> Vec<Timed> {
    let mut ready: HashMap<Register, u64> = HashMap::new();
    ops.iter()
        .map(|op| {
            let regs = op.registers();
            let start = regs
                .iter()
                .map(|r| ready.get(r).copied().unwrap_or(0))
                .max()
                .unwrap_or(0);
            let end = start + dur(op);
            for r in regs {
                ready.insert(r, end);
            }
            Timed { start, end }
        })
        .collect()
}

/// Slide each op that opens the lifetime of its only register up against
/// the register's next use.
fn slide_leading(ops: &[LayerOp], times: &mut [Timed]) {
    let mut opened: HashSet<Register> = HashSet::new();
    for i in 0..ops.len() {
        let regs = ops[i].registers();
        let opens = regs.iter().all(|r| !opened.contains(r));
        opened.extend(regs.iter().copied());
        if regs.len() != 1 || !opens {
            continue;
        }
        let r = regs[0];
        if let Some(next) = (i + 1..ops.len()).find(|&k| ops[k].registers().contains(&r)) {
            let d = times[i].end - times[i].start;
            let end = times[next].start;
            times[i] = Timed {
                start: end - d,
                end,
            };
        }
    }
}

/// Accounting over the protocol's layer plan; nothing is simulated.
pub fn clifford_t_metrics(
    protocol: Variant,
    n: usize,
    epsilon: f64,
    strategy: Strategy,
    model: &TCostModel,
) -> Result<CliffordTMetrics> {
    let budget = allocate_budget(epsilon, n, strategy)?;
    let plan = synth::plan_full(protocol, n, None)?;
    let ops: Vec<LayerOp> = plan.moments().iter().flatten().copied().collect();

    let t_count = ops
        .iter()
        .map(|op| op.width() as u64 * model.op_cost(op, &budget).t_count)
        .sum();
    let t_depth = dataflow(&ops, |op| model.op_cost(op, &budget).t_depth)
        .iter()
        .map(|t| t.end)
        .max()
        .unwrap_or(0);

    let mut times = dataflow(&ops, |op| model.op_cost(op, &budget).t_depth.max(1));
    slide_leading(&ops, &mut times);
    let mut life: HashMap<Register, (u64, u64)> = HashMap::new();
    for (op, t) in ops.iter().zip(&times) {
        for r in op.registers() {
            let e = life.entry(r).or_insert((t.start, t.end));
            e.0 = e.0.min(t.start);
            e.1 = e.1.max(t.end);
        }
    }
    let sta = life
        .iter()
        .map(|(r, (a, b))| r.size() as u64 * (b - a))
        .sum();

    Ok(CliffordTMetrics {
        protocol,
        n,
        epsilon,
        strategy,
        t_count,
        t_depth,
        sta,
        total_budget: budget.total(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbationReport {
    pub distance: f64,
    pub bound: f64,
    pub holds: bool,
}

/// `r * exp(-i theta/2 axis.sigma)` with `||r - result|| = delta` for a random axis.
pub fn perturb(r: &Mat2, delta: f64, rng: &mut impl Rng) -> Mat2 {
    if delta <= 0.0 {
        return *r;
    }
    let v: [f64; 3] = [
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
        rng.sample(StandardNormal),
    ];
    let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2])
        .sqrt()
        .max(f64::MIN_POSITIVE);
    let axis = [v[0] / norm, v[1] / norm, v[2] / norm];
    let theta = 4.0 * (delta.min(2.0) / 2.0).asin();
    *r * Mat2::axis_rotation(axis, theta)
}

/// Every rotation at level `l` moved by exactly `deltas[l]`.
pub fn perturbed_table(tree: &AmplitudeTree, deltas: &[f64], seed: u64) -> RotationTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut table = tree.rotation_table();
    for (l, level) in table.levels.iter_mut().enumerate() {
        for r in level.iter_mut() {
            *r = perturb(r, deltas[l], &mut rng);
        }
    }
    table
}

/// Full basis expansion keyed by the sorted list of excited qubits.
fn expand(state: &SparseState) -> HashMap<Vec<u32>, C64> {
    let mut out: HashMap<Vec<u32>, C64> = HashMap::new();
    for t in state.terms() {
        let mut parts: Vec<(Vec<u32>, C64)> = vec![(Vec::new(), t.amp)];
        for &(q, f) in &t.factors {
            let [a, b] = f.components();
            parts = parts
                .into_iter()
                .flat_map(|(ones, x)| {
                    let mut with = ones.clone();
                    with.push(q);
                    [(ones, x * a), (with, x * b)]
                })
                .filter(|(_, x)| x.norm() > 0.0)
                .collect();
        }
        for (k, x) in parts {
            *out.entry(k).or_default() += x;
        }
    }
    out
}

fn state_distance(a: &SparseState, b: &SparseState) -> f64 {
    let (ea, eb) = (expand(a), expand(b));
    let mut sum = 0.0;
    for (k, x) in &ea {
        sum += (x - eb.get(k).copied().unwrap_or_default()).norm_sqr();
    }
    for (k, y) in &eb {
        if !ea.contains_key(k) {
            sum += y.norm_sqr();
        }
    }
    sum.sqrt()
}

/// Distance between the exact and perturbed noiseless final states.
pub fn perturbation_distance(
    variant: Variant,
    tree: &AmplitudeTree,
    deltas: &[f64],
    seed: u64,
) -> Result<f64> {
    if deltas.len() != tree.n() {
        return Err(Error::SizeMismatch {
            what: "perturbation levels",
            found: deltas.len(),
            expected: tree.n(),
        });
    }
    let exact = synth::synthesize(variant, tree, None)?;
    let moved =
        synth::synthesize_with(variant, tree.n(), perturbed_table(tree, deltas, seed), None)?;
    Ok(state_distance(
        &run_noiseless(&exact.circuit)?,
        &run_noiseless(&moved.circuit)?,
    ))
}

pub fn perturbation_bound_check(
    variant: Variant,
    tree: &AmplitudeTree,
    budget: &TBudget,
    seed: u64,
) -> Result<PerturbationReport> {
    let distance = perturbation_distance(variant, tree, &budget.levels, seed)?;
    let bound = budget.total();
    Ok(PerturbationReport {
        distance,
        bound,
        holds: distance <= bound + 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::amplitude::{build_tree, TargetState};

    #[test]
    fn budgets() {
        let b = allocate_budget(0.01, 3, Strategy::Geometric).unwrap();
        assert!((b.levels[1] - 0.0025).abs() < 1e-15);
        assert!((b.total() - 0.01 * (1.0 - 0.125)).abs() < 1e-15);
        let u = allocate_budget(0.01, 3, Strategy::Uniform).unwrap();
        assert!((u.total() - 0.01).abs() < 1e-15);
        for n in 1..=30 {
            for eps in [1e-3, 0.1, 0.7, 1e-9] {
                assert!(allocate_budget(eps, n, Strategy::Uniform).unwrap().total() <= eps);
                assert!(
                    allocate_budget(eps, n, Strategy::Geometric)
                        .unwrap()
                        .total()
                        <= eps
                );
            }
        }
        assert!(allocate_budget(0.0, 3, Strategy::Uniform).is_err());
        assert_eq!("uniform".parse::<Strategy>().unwrap(), Strategy::Uniform);
    }

    #[test]
    fn t_is_monotone() {
        let m = TCostModel::default();
        let mut last = 0;
        for k in 0..40 {
            let t = m.t(10f64.powf(-(k as f64) / 4.0));
            assert!(t >= last);
            last = t;
        }
        assert_eq!(m.t(0.5), 3);
        assert_eq!(m.t(1.0), 0);
    }

    #[test]
    fn perturbation_is_exactly_delta() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = Mat2::ry(0.7) * Mat2::rz(-1.1);
        for delta in [1e-9, 1e-4, 0.1, 0.5] {
            let p = perturb(&r, delta, &mut rng);
            assert!((r.op_distance(&p) - delta).abs() < 1e-12 + delta * 1e-9);
            assert!(p.is_unitary(1e-12));
        }
    }

    #[test]
    fn zero_perturbation_has_zero_distance() {
        let tree = build_tree(&TargetState::random(3, 4).unwrap());
        for v in [Variant::TwoPerNode, Variant::ThreePerNode] {
            assert_eq!(perturbation_distance(v, &tree, &[0.0; 3], 1).unwrap(), 0.0);
        }
    }

    #[test]
    fn dataflow_respects_registers() {
        let ops = [
            LayerOp::Rot { level: 1 },
            LayerOp::Cnot { level: 0 },
            LayerOp::CRoute { level: 0 },
            LayerOp::CRoute { level: 1 },
        ];
        let mut t = dataflow(&ops, |op| {
            if matches!(op, LayerOp::Rot { .. }) {
                10
            } else {
                1
            }
        });
        assert_eq!(t[1].start, 0);
        assert_eq!(t[2].start, 1);
        assert_eq!(t[3].start, 10);
        slide_leading(&ops, &mut t);
        assert_eq!((t[0].start, t[0].end), (0, 10));
    }

    #[test]
    fn counts_scale_with_precision() {
        let m = TCostModel::default();
        let a =
            clifford_t_metrics(Variant::ThreePerNode, 4, 1e-3, Strategy::Geometric, &m).unwrap();
        let b =
            clifford_t_metrics(Variant::ThreePerNode, 4, 1e-9, Strategy::Geometric, &m).unwrap();
        assert!(b.t_count > a.t_count && b.t_depth > a.t_depth && b.sta > a.sta);
        assert!(a.total_budget <= 1e-3);
    }
}
