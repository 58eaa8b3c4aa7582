//! Good-branch analysis and Monte-Carlo robustness experiments.
//!
//! Branch `j` is good for a configuration when every qubit in the
//! ancestor-plus-neighbour set of leaf pointer `U_{n,j}` survives all moments.
//! For 2pn it is error-free when additionally every zero-padded prefix
//! `j_1..j_l 0..0` is good.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::amplitude::{build_tree, TargetState};
use crate::architecture::{Architecture, Variant};
use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::C64;
use crate::noise::{sample_config, survived_mask, ErrorConfig, NoiseParams};
use crate::sim::{
    output_fidelity, term_list_distance, CompiledCircuit, Factor, ProductTerm, SparseState,
};
use crate::synth;

pub const BOUND_SLACK: f64 = 1e-9;

/// Per-branch qubit sets of one architecture.
#[derive(Clone, Debug)]
pub struct BranchStructure {
    variant: Variant,
    n: usize,
    hats: Vec<Vec<u32>>,
}

/// `j_1 .. j_l 0 .. 0`.
pub fn padded_prefix(j: usize, n: usize, l: usize) -> usize {
    (j >> (n - l)) << (n - l)
}

impl BranchStructure {
    pub fn new(arch: &Architecture) -> Self {
        let n = arch.n();
        let hats = (0..1usize << n)
            .map(|j| arch.hat_ancestors(n, j).into_iter().collect())
            .collect();
        BranchStructure {
            variant: arch.variant(),
            n,
            hats,
        }
    }

    pub fn hat(&self, j: usize) -> &[u32] {
        &self.hats[j]
    }

    /// The qubits whose survival decides membership of `j` in the branch set
    /// used by the bound: `g'` for 2pn, `g` for 3pn.
    pub fn guard_set(&self, j: usize) -> BTreeSet<u32> {
        let mut set: BTreeSet<u32> = self.hats[j].iter().copied().collect();
        if self.variant == Variant::TwoPerNode {
            for l in 0..self.n {
                set.extend(self.hats[padded_prefix(j, self.n, l)].iter().copied());
            }
        }
        set
    }

    pub fn good(&self, survived: &[bool]) -> Vec<bool> {
        self.hats
            .iter()
            .map(|h| h.iter().all(|&q| survived[q as usize]))
            .collect()
    }

    pub fn error_free(&self, good: &[bool]) -> Result<Vec<bool>> {
        if self.variant != Variant::TwoPerNode {
            return Err(Error::Contract(
                "error-free branches are defined for the two-per-node protocol only".into(),
            ));
        }
        Ok((0..good.len())
            .map(|j| good[j] && (0..self.n).all(|l| good[padded_prefix(j, self.n, l)]))
            .collect())
    }
}

fn members(mask: &[bool]) -> Vec<usize> {
    mask.iter()
        .enumerate()
        .filter(|(_, &b)| b)
        .map(|(j, _)| j)
        .collect()
}

pub fn good_branches(config: &ErrorConfig, arch: &Architecture) -> Vec<usize> {
    let bs = BranchStructure::new(arch);
    members(&bs.good(&survived_mask(config, arch.num_qubits())))
}

pub fn error_free_branches(config: &ErrorConfig, arch: &Architecture) -> Result<Vec<usize>> {
    let bs = BranchStructure::new(arch);
    let good = bs.good(&survived_mask(config, arch.num_qubits()));
    Ok(members(&bs.error_free(&good)?))
}

fn weight(target: &TargetState, set: &[usize]) -> f64 {
    set.iter().map(|&j| target.amplitude(j).norm_sqr()).sum()
}

#[derive(Clone, Debug)]
pub struct BranchReport {
    pub good: Vec<usize>,
    /// `None` for 3pn.
    pub error_free: Option<Vec<usize>>,
    pub lambda: f64,
    pub lambda_prime: Option<f64>,
    pub fidelity: f64,
    /// `Lambda'` for 2pn, `Lambda` for 3pn.
    pub bound: f64,
    pub violated: bool,
    pub coherent: bool,
}

/// Shared per-circuit data for repeated trajectory evaluation.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub circuit: Circuit,
    pub compiled: CompiledCircuit,
    pub target: TargetState,
    pub branches: BranchStructure,
}

impl Experiment {
    pub fn new(circuit: Circuit, target: TargetState) -> Self {
        Experiment {
            compiled: CompiledCircuit::new(&circuit),
            branches: BranchStructure::new(circuit.arch()),
            circuit,
            target,
        }
    }

    pub fn synthesize(
        variant: Variant,
        target: TargetState,
        stagger: Option<usize>,
    ) -> Result<Self> {
        let s = synth::synthesize(variant, &build_tree(&target), stagger)?;
        Ok(Self::new(s.circuit, target))
    }

    pub fn arch(&self) -> &Architecture {
        self.circuit.arch()
    }

    pub fn depth(&self) -> usize {
        self.circuit.depth()
    }

    pub fn run(&self, config: &ErrorConfig) -> Result<SparseState> {
        let mut s = SparseState::initial(self.arch());
        s.run(&self.compiled, Some(config))?;
        Ok(s)
    }

    /// Branch sets, weights, fidelity and the per-trajectory bound verdict.
    pub fn check(&self, config: &ErrorConfig) -> Result<BranchReport> {
        let state = self.run(config)?;
        let fidelity = output_fidelity(&state, self.arch(), &self.target);
        let good_mask = self
            .branches
            .good(&survived_mask(config, self.arch().num_qubits()));
        let good = members(&good_mask);
        let lambda = weight(&self.target, &good);
        let (error_free, lambda_prime) = match self.branches.variant {
            Variant::TwoPerNode => {
                let ef = members(&self.branches.error_free(&good_mask)?);
                let lp = weight(&self.target, &ef);
                (Some(ef), Some(lp))
            }
            Variant::ThreePerNode => (None, None),
        };
        let bound = lambda_prime.unwrap_or(lambda);
        let protected = error_free.as_deref().unwrap_or(&good);
        let coherent =
            structural_coherence_check(&state, self.arch(), &self.target, protected).coherent;
        Ok(BranchReport {
            violated: fidelity < bound - BOUND_SLACK,
            good,
            error_free,
            lambda,
            lambda_prime,
            fidelity,
            bound,
            coherent,
        })
    }
}

pub fn per_config_bound_check(
    circuit: &Circuit,
    target: &TargetState,
    config: &ErrorConfig,
) -> Result<BranchReport> {
    Experiment::new(circuit.clone(), target.clone()).check(config)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coherence {
    pub coherent: bool,
    /// Norm of the common QRAM factor (the proportionality constant's modulus).
    pub constant: f64,
}

/// Components of the final state with output index `j`, divided by `psi_j`.
fn normalized_component(
    state: &SparseState,
    arch: &Architecture,
    j: usize,
    psi: C64,
) -> Vec<ProductTerm> {
    let n = arch.n();
    let out = arch.output_ids();
    let mut comp = Vec::new();
    for t in state.terms() {
        let split = t.factors.partition_point(|f| f.0 < out.start);
        let mut coeff = t.amp;
        let mut present = vec![false; n + 1];
        for &(q, f) in &t.factors[split..] {
            let k = (q - out.start + 1) as usize;
            present[k] = true;
            let [a, b] = f.components();
            coeff *= if (j >> (n - k)) & 1 == 1 { b } else { a };
        }
        for (k, &p) in present.iter().enumerate().skip(1) {
            if !p && (j >> (n - k)) & 1 == 1 {
                coeff = C64::new(0.0, 0.0);
            }
        }
        if coeff.norm() > 0.0 {
            comp.push(ProductTerm {
                amp: coeff / psi,
                factors: t.factors[..split].to_vec(),
            });
        }
    }
    comp
}

/// Whether the components of the given output indices all equal `psi_j`
/// times one common QRAM state.
pub fn structural_coherence_check(
    state: &SparseState,
    arch: &Architecture,
    target: &TargetState,
    branches: &[usize],
) -> Coherence {
    let live: Vec<usize> = branches
        .iter()
        .copied()
        .filter(|&j| target.amplitude(j).norm() > 1e-12)
        .collect();
    let Some(&first) = live.first() else {
        return Coherence {
            coherent: true,
            constant: 0.0,
        };
    };
    let reference = normalized_component(state, arch, first, target.amplitude(first));
    let constant = reference
        .iter()
        .map(|a| reference.iter().map(|b| a.overlap(b)).sum::<C64>())
        .sum::<C64>()
        .re
        .max(0.0)
        .sqrt();
    let coherent = live[1..].iter().all(|&j| {
        let comp = normalized_component(state, arch, j, target.amplitude(j));
        term_list_distance(&comp, &reference) <= 1e-9
    });
    Coherence { coherent, constant }
}

/// `Pr[j in g'(c)]` (2pn) or `Pr[j in g(c)]` (3pn) for a circuit of `moments`.
pub fn branch_survival_probability(
    bs: &BranchStructure,
    j: usize,
    epsilon: f64,
    moments: usize,
) -> f64 {
    (1.0 - epsilon).powf((moments * bs.guard_set(j).len()) as f64)
}

/// Whether `j` is in the protected branch set of a configuration.
pub fn branch_member(
    bs: &BranchStructure,
    config: &ErrorConfig,
    num_qubits: usize,
    j: usize,
) -> bool {
    let good = bs.good(&survived_mask(config, num_qubits));
    match bs.variant {
        Variant::TwoPerNode => bs.error_free(&good).expect("2pn")[j],
        Variant::ThreePerNode => good[j],
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub index: u64,
    pub fidelity: f64,
    pub lambda: f64,
    pub lambda_prime: Option<f64>,
    pub good: usize,
    pub error_free: Option<usize>,
    pub violated: bool,
    pub coherent: bool,
    pub errors: usize,
}

/// Sample and evaluate trajectories `0..count`; results in index order.
pub fn run_trajectories(
    exp: &Experiment,
    noise: NoiseParams,
    seed: u64,
    count: usize,
    exec: Execution,
) -> Vec<Result<Trajectory>> {
    exec.map(count, |i| {
        let index = i as u64;
        let config = sample_config(exp.depth(), exp.arch().num_qubits(), noise, seed, index);
        let r = exp.check(&config)?;
        Ok(Trajectory {
            index,
            fidelity: r.fidelity,
            lambda: r.lambda,
            lambda_prime: r.lambda_prime,
            good: r.good.len(),
            error_free: r.error_free.as_ref().map(Vec::len),
            violated: r.violated,
            coherent: r.coherent,
            errors: config.error_count(),
        })
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub protocol: Variant,
    pub n: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub trajectories: usize,
    pub mean_f: f64,
    pub se_f: f64,
    pub mean_lambda: f64,
    /// Equals `mean_lambda` for 3pn.
    pub mean_lambda_prime: f64,
    pub se_bound: f64,
    /// Standard error of the paired difference `F - bound`.
    pub se_gap: f64,
    pub ratio_n3: f64,
    pub ratio_n2: f64,
    pub violations: usize,
    pub failures: usize,
}

impl SweepRow {
    pub const HEADER: [&'static str; 11] = [
        "protocol",
        "n",
        "epsilon",
        "seed",
        "trajectories",
        "mean_F",
        "mean_lambda",
        "mean_lambda_prime",
        "ratio_n3",
        "ratio_n2",
        "violations",
    ];

    pub fn record(&self) -> Vec<String> {
        vec![
            self.protocol.to_string(),
            self.n.to_string(),
            self.epsilon.to_string(),
            self.seed.to_string(),
            self.trajectories.to_string(),
            self.mean_f.to_string(),
            self.mean_lambda.to_string(),
            self.mean_lambda_prime.to_string(),
            self.ratio_n3.to_string(),
            self.ratio_n2.to_string(),
            self.violations.to_string(),
        ]
    }

    /// `mean_F >= mean bound - k * se_gap`.
    pub fn mean_bound_holds(&self, k: f64) -> bool {
        self.mean_f >= self.mean_bound() - k * self.se_gap
    }

    /// Bound mean: `Lambda'` for 2pn, `Lambda` for 3pn.
    pub fn mean_bound(&self) -> f64 {
        match self.protocol {
            Variant::TwoPerNode => self.mean_lambda_prime,
            Variant::ThreePerNode => self.mean_lambda,
        }
    }
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Aggregate one (protocol, n, epsilon) point over a random target drawn from `seed`.
pub fn sweep_point(
    protocol: Variant,
    n: usize,
    epsilon: f64,
    trajectories: usize,
    seed: u64,
    exec: Execution,
) -> Result<SweepRow> {
    let target = TargetState::random(n, seed)?;
    let exp = Experiment::synthesize(protocol, target, None)?;
    let noise = NoiseParams::new(epsilon)?;
    let results = run_trajectories(&exp, noise, seed, trajectories, exec);
    let ok: Vec<&Trajectory> = results.iter().filter_map(|r| r.as_ref().ok()).collect();
    let f: Vec<f64> = ok.iter().map(|t| t.fidelity).collect();
    let lam: Vec<f64> = ok.iter().map(|t| t.lambda).collect();
    let lam_p: Vec<f64> = ok
        .iter()
        .map(|t| t.lambda_prime.unwrap_or(t.lambda))
        .collect();
    let (mean_f, se_f) = mean_se(&f);
    let (mean_lambda, _) = mean_se(&lam);
    let (mean_lambda_prime, se_bound) = mean_se(&lam_p);
    let gap: Vec<f64> = f.iter().zip(&lam_p).map(|(a, b)| a - b).collect();
    let (_, se_gap) = mean_se(&gap);
    let nf = n as f64;
    Ok(SweepRow {
        protocol,
        n,
        epsilon,
        seed,
        trajectories,
        mean_f,
        se_f,
        mean_lambda,
        mean_lambda_prime,
        se_bound,
        se_gap,
        ratio_n3: (1.0 - mean_f) / (epsilon * nf.powi(3)),
        ratio_n2: (1.0 - mean_f) / (epsilon * nf.powi(2)),
        violations: ok.iter().filter(|t| t.violated).count(),
        failures: results.len() - ok.len(),
    })
}

pub fn scaling_sweep(
    protocol: Variant,
    ns: &[usize],
    epsilons: &[f64],
    trajectories: usize,
    seed: u64,
    exec: Execution,
) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for &n in ns {
        for &eps in epsilons {
            rows.push(sweep_point(protocol, n, eps, trajectories, seed, exec)?);
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct Counterexample {
    pub protocol: String,
    pub n: usize,
    pub fidelity: f64,
    pub bound: f64,
    pub good: Vec<usize>,
    pub error_free: Option<Vec<usize>>,
    pub config: serde_json::Value,
    /// Term count after each moment.
    pub trace: Vec<usize>,
}

/// Config and per-moment term counts for a trajectory, as JSON.
pub fn counterexample_dump(exp: &Experiment, config: &ErrorConfig) -> Result<String> {
    let r = exp.check(config)?;
    let mut trace = Vec::with_capacity(exp.depth());
    let mut s = SparseState::initial(exp.arch());
    s.run_traced(&exp.compiled, Some(config), |_, k| trace.push(k))?;
    let dump = Counterexample {
        protocol: exp.arch().variant().to_string(),
        n: exp.arch().n(),
        fidelity: r.fidelity,
        bound: r.bound,
        good: r.good,
        error_free: r.error_free,
        config: serde_json::from_str(&config.to_json())?,
        trace,
    };
    Ok(serde_json::to_string_pretty(&dump)?)
}

/// Whether any factor of the final state is still superposed on the output.
pub fn has_output_superposition(state: &SparseState, arch: &Architecture) -> bool {
    let start = arch.output_ids().start;
    state.terms().iter().any(|t| {
        t.factors
            .iter()
            .any(|(q, f)| *q >= start && matches!(f, Factor::Super(..)))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::Pauli;

    fn arch(v: Variant, n: usize) -> Architecture {
        Architecture::new(v, n).unwrap()
    }

    #[test]
    fn empty_config_keeps_everything() {
        for v in [Variant::TwoPerNode, Variant::ThreePerNode] {
            let a = arch(v, 3);
            let c = ErrorConfig::empty(5);
            assert_eq!(good_branches(&c, &a), (0..8).collect::<Vec<_>>());
        }
        let a = arch(Variant::TwoPerNode, 3);
        assert_eq!(
            error_free_branches(&ErrorConfig::empty(5), &a)
                .unwrap()
                .len(),
            8
        );
    }

    #[test]
    fn root_errors_kill_every_branch() {
        for v in [Variant::TwoPerNode, Variant::ThreePerNode] {
            let a = arch(v, 3);
            for q in [a.u(0, 0), a.o(1), a.o(3)] {
                let c = ErrorConfig::single(4, 2, q, Pauli::X);
                assert!(good_branches(&c, &a).is_empty());
            }
        }
    }

    #[test]
    fn leaf_local_error_removes_only_its_branches() {
        let a = arch(Variant::TwoPerNode, 3);
        // U_{3,5} neighbours D_{2,2}, which is an ancestor of leaves 4 and 5
        let c = ErrorConfig::single(3, 0, a.u(3, 5), Pauli::Z);
        let good = good_branches(&c, &a);
        let expected: Vec<usize> = (0..8).filter(|j| j / 2 != 2).collect();
        assert_eq!(good, expected);
        // brute force: j good iff its hat set avoids the hit qubit
        for j in 0..8 {
            assert_eq!(
                good.contains(&j),
                !a.hat_ancestors(3, j).contains(&a.u(3, 5))
            );
        }
    }

    #[test]
    fn error_free_needs_the_zero_branch() {
        let a = arch(Variant::TwoPerNode, 2);
        // D_{1,0} is an ancestor of leaves 0 and 1
        let c = ErrorConfig::single(2, 0, a.d(1, 0), Pauli::X);
        let g = good_branches(&c, &a);
        assert!(!g.contains(&0));
        assert!(error_free_branches(&c, &a).unwrap().is_empty());
        let b = arch(Variant::ThreePerNode, 2);
        assert!(error_free_branches(&c, &b).is_err());
    }

    #[test]
    fn error_free_is_subset_of_good() {
        let a = arch(Variant::TwoPerNode, 3);
        let noise = NoiseParams::new(0.02).unwrap();
        for i in 0..200 {
            let c = sample_config(6, a.num_qubits(), noise, 3, i);
            let g = good_branches(&c, &a);
            let gp = error_free_branches(&c, &a).unwrap();
            assert!(gp.iter().all(|j| g.contains(j)));
        }
    }

    #[test]
    fn survival_probability_limits_and_counts() {
        for n in 2..=8 {
            let a2 = BranchStructure::new(&arch(Variant::TwoPerNode, n));
            let a3 = BranchStructure::new(&arch(Variant::ThreePerNode, n));
            let h2 = (0..1 << n).map(|j| a2.guard_set(j).len()).max().unwrap();
            let h3 = (0..1 << n).map(|j| a3.guard_set(j).len()).max().unwrap();
            assert!(h2 <= 4 * n * n + 8, "2pn n={n}: {h2}");
            assert!(h3 <= 10 * n + 4, "3pn n={n}: {h3}");
            assert_eq!(branch_survival_probability(&a2, 0, 0.0, 10), 1.0);
        }
    }

    #[test]
    fn noiseless_report() {
        let t = TargetState::random(2, 1).unwrap();
        for v in [Variant::TwoPerNode, Variant::ThreePerNode] {
            let exp = Experiment::synthesize(v, t.clone(), None).unwrap();
            let r = exp.check(&ErrorConfig::empty(exp.depth())).unwrap();
            assert!((r.fidelity - 1.0).abs() < 1e-9);
            assert!((r.bound - 1.0).abs() < 1e-12);
            assert!(!r.violated && r.coherent);
        }
    }
}
