//! Target vectors, the recursive amplitude tree, and per-node rotations.
//!
//! Node `(l, j)` of the tree sits at depth `l`; the bits of `j` are read
//! most-significant first, so `j_1` is the branch taken at the root. The
//! amplitude of an inner node is the norm of its two children carrying the
//! phase of its left child, which makes the first component of every node
//! rotation real and non-negative.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat2, C64, ONE, ZERO};

pub const DEFAULT_NORM_TOLERANCE: f64 = 1e-9;

/// Result of checking `sum |psi_j|^2 == 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormReport {
    pub norm: f64,
    pub tolerance: f64,
    pub pass: bool,
}

pub fn validate_normalization(amplitudes: &[C64], tolerance: f64) -> NormReport {
    let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
    NormReport {
        norm,
        tolerance,
        pass: (norm - 1.0).abs() <= tolerance,
    }
}

#[derive(Clone, Copy, Debug)]
pub struct TargetOptions {
    pub tolerance: f64,
    pub auto_normalize: bool,
}

impl Default for TargetOptions {
    fn default() -> Self {
        TargetOptions {
            tolerance: DEFAULT_NORM_TOLERANCE,
            auto_normalize: false,
        }
    }
}

/// A normalized length-`2^n` amplitude vector.
///
/// The stored amplitudes are canonicalized so that the tree root `psi_{0,0}`
/// is real and positive (so `psi_0 >= 0` whenever it is nonzero); the removed
/// phase is kept in [`TargetState::global_phase`].
/// The circuits prepare the canonical vector, which equals the input up to
/// that global phase.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetState {
    n: usize,
    amplitudes: Vec<C64>,
    global_phase: C64,
}

impl TargetState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        Self::with_options(amplitudes, TargetOptions::default())
    }

    pub fn with_options(mut amplitudes: Vec<C64>, opts: TargetOptions) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::BadLength { len });
        }
        let report = validate_normalization(&amplitudes, opts.tolerance);
        if !report.pass {
            if !opts.auto_normalize || report.norm == 0.0 || !report.norm.is_finite() {
                return Err(Error::NotNormalized {
                    norm: report.norm,
                    tolerance: opts.tolerance,
                });
            }
            let scale = report.norm.sqrt().recip();
            for a in &mut amplitudes {
                *a *= scale;
            }
        }
        let global_phase = unit_phase(tree_levels(&amplitudes)[0][0]);
        let undo = global_phase.conj();
        for a in &mut amplitudes {
            *a *= undo;
        }
        Ok(TargetState {
            n: len.trailing_zeros() as usize,
            amplitudes,
            global_phase,
        })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize(n));
        }
        let len = 1usize << n;
        let a = C64::new((len as f64).sqrt().recip(), 0.0);
        Self::new(vec![a; len])
    }

    pub fn basis(n: usize, k: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize(n));
        }
        let len = 1usize << n;
        if k >= len {
            return Err(Error::OutOfRange(format!("basis index {k} >= {len}")));
        }
        let mut v = vec![ZERO; len];
        v[k] = ONE;
        Self::new(v)
    }

    /// Haar-like random target: i.i.d. complex Gaussian entries, normalized.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize(n));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = 1usize << n;
        let v: Vec<C64> = (0..len)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                C64::new(re, im)
            })
            .collect();
        Self::with_options(
            v,
            TargetOptions {
                auto_normalize: true,
                ..TargetOptions::default()
            },
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, j: usize) -> C64 {
        self.amplitudes[j]
    }

    pub fn global_phase(&self) -> C64 {
        self.global_phase
    }

    /// The amplitudes as originally supplied (after optional normalization).
    pub fn original(&self) -> Vec<C64> {
        self.amplitudes
            .iter()
            .map(|a| a * self.global_phase)
            .collect()
    }

    pub fn norm_report(&self) -> NormReport {
        validate_normalization(&self.amplitudes, DEFAULT_NORM_TOLERANCE)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: AmplitudeFile = serde_json::from_str(s)?;
        file.into_target(TargetOptions::default())
    }

    pub fn to_json(&self) -> String {
        let file = AmplitudeFile {
            n: self.n,
            amplitudes: self.original().iter().map(|a| [a.re, a.im]).collect(),
        };
        serde_json::to_string(&file).expect("amplitude file serializes")
    }
}

/// On-disk amplitude input: `{"n": int, "amplitudes": [[re, im], ...]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AmplitudeFile {
    pub n: usize,
    pub amplitudes: Vec<[f64; 2]>,
}

impl AmplitudeFile {
    pub fn into_target(self, opts: TargetOptions) -> Result<TargetState> {
        if self.n == 0 {
            return Err(Error::InvalidSize(0));
        }
        let expected = 1usize
            .checked_shl(self.n as u32)
            .ok_or_else(|| Error::OutOfRange(format!("n = {} is too large", self.n)))?;
        if self.amplitudes.len() != expected {
            return Err(Error::SizeMismatch {
                what: "amplitudes",
                found: self.amplitudes.len(),
                expected,
            });
        }
        let v = self
            .amplitudes
            .iter()
            .map(|[re, im]| C64::new(*re, *im))
            .collect();
        TargetState::with_options(v, opts)
    }
}

/// The intermediate amplitudes `psi_{l,j}` for `0 <= l <= n`.
#[derive(Clone, Debug)]
pub struct AmplitudeTree {
    n: usize,
    levels: Vec<Vec<C64>>,
}

/// Phase of `z` with `arg(0) := 0`.
fn unit_phase(z: C64) -> C64 {
    let r = z.norm();
    if r > 0.0 {
        z / r
    } else {
        ONE
    }
}

pub fn build_tree(target: &TargetState) -> AmplitudeTree {
    AmplitudeTree {
        n: target.n(),
        levels: tree_levels(target.amplitudes()),
    }
}

fn tree_levels(leaves: &[C64]) -> Vec<Vec<C64>> {
    let n = leaves.len().trailing_zeros() as usize;
    let mut levels = vec![Vec::new(); n + 1];
    levels[n] = leaves.to_vec();
    for l in (0..n).rev() {
        let below = &levels[l + 1];
        let here: Vec<C64> = (0..1usize << l)
            .map(|j| {
                let (left, right) = (below[2 * j], below[2 * j + 1]);
                let mag = (left.norm_sqr() + right.norm_sqr()).sqrt();
                unit_phase(left) * mag
            })
            .collect();
        levels[l] = here;
    }
    levels
}

impl AmplitudeTree {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn level(&self, l: usize) -> &[C64] {
        &self.levels[l]
    }

    pub fn amplitude(&self, l: usize, j: usize) -> C64 {
        self.levels[l][j]
    }

    pub fn leaves(&self) -> &[C64] {
        &self.levels[self.n]
    }

    pub fn rotation_params(&self, l: usize, j: usize) -> Result<RotationParams> {
        if l >= self.n || j >= (1usize << l) {
            return Err(Error::OutOfRange(format!(
                "rotation ({l}, {j}) for a tree with n = {}",
                self.n
            )));
        }
        let parent = self.levels[l][j];
        let (c0, c1) = if parent.norm() == 0.0 {
            (ONE, ZERO)
        } else {
            let left = self.levels[l + 1][2 * j];
            let right = self.levels[l + 1][2 * j + 1];
            // left and parent share a phase, so the quotient is real
            (C64::new(left.norm() / parent.norm(), 0.0), right / parent)
        };
        Ok(RotationParams::from_column(l, j, c0, c1))
    }

    pub fn rotation_table(&self) -> RotationTable {
        let levels = (0..self.n)
            .map(|l| {
                (0..1usize << l)
                    .map(|j| self.rotation_params(l, j).expect("in range").unitary)
                    .collect()
            })
            .collect();
        RotationTable { levels }
    }
}

/// The unitary `r_{l,j}` that splits node `(l, j)` into its children.
#[derive(Clone, Copy, Debug)]
pub struct RotationParams {
    pub level: usize,
    pub index: usize,
    pub c0: C64,
    pub c1: C64,
    /// `[[c0, -conj(c1)], [c1, conj(c0)]]`, determinant one.
    pub unitary: Mat2,
    /// z-phase: `c1 = e^{i alpha} sin(beta / 2)`.
    pub alpha: f64,
    /// y-angle: `c0 = cos(beta / 2)`.
    pub beta: f64,
}

impl RotationParams {
    fn from_column(level: usize, index: usize, c0: C64, c1: C64) -> Self {
        let unitary = Mat2::new(c0, -c1.conj(), c1, c0.conj());
        let beta = 2.0 * c1.norm().atan2(c0.re);
        let alpha = if c1.norm() > 0.0 { c1.arg() } else { 0.0 };
        RotationParams {
            level,
            index,
            c0,
            c1,
            unitary,
            alpha,
            beta,
        }
    }

    /// `Rz(alpha) Ry(beta)`; its first column is `(c0, c1)` up to the
    /// global phase `e^{-i alpha / 2}`.
    pub fn euler_form(&self) -> Mat2 {
        Mat2::rz(self.alpha) * Mat2::ry(self.beta)
    }
}

/// One 2x2 unitary per inner node, `levels[l][j]` for `l < n`.
#[derive(Clone, Debug, PartialEq)]
pub struct RotationTable {
    pub levels: Vec<Vec<Mat2>>,
}

impl RotationTable {
    pub fn n(&self) -> usize {
        self.levels.len()
    }

    pub fn get(&self, l: usize, j: usize) -> Mat2 {
        self.levels[l][j]
    }

    pub fn identity(n: usize) -> Self {
        RotationTable {
            levels: (0..n).map(|l| vec![Mat2::IDENTITY; 1 << l]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn uniform_two_qubits() {
        let t = TargetState::uniform(2).unwrap();
        let tree = build_tree(&t);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for j in 0..2 {
            assert!((tree.amplitude(1, j) - c(s, 0.0)).norm() < 1e-15);
        }
        assert!((tree.amplitude(0, 0) - ONE).norm() < 1e-15);
    }

    #[test]
    fn basis_one_uses_zero_phase_convention() {
        let t = TargetState::new(vec![ZERO, ONE]).unwrap();
        let tree = build_tree(&t);
        assert_eq!(tree.level(1), &[ZERO, ONE]);
        assert!((tree.amplitude(0, 0) - ONE).norm() < 1e-15);
        let r = tree.rotation_params(0, 0).unwrap();
        assert_eq!((r.c0, r.c1), (ZERO, ONE));
    }

    #[test]
    fn three_fifths_four_fifths_i() {
        let t = TargetState::new(vec![c(0.6, 0.0), c(0.0, 0.8)]).unwrap();
        let tree = build_tree(&t);
        assert!((tree.amplitude(0, 0).norm() - 1.0).abs() < 1e-12);
        let r = tree.rotation_params(0, 0).unwrap();
        assert!((r.c0 - c(0.6, 0.0)).norm() < 1e-15);
        assert!((r.c1 - c(0.0, 0.8)).norm() < 1e-15);
        let expected = Mat2::new(c(0.6, 0.0), c(0.0, 0.8), c(0.0, 0.8), c(0.6, 0.0));
        assert!(r.unitary.op_distance(&expected) < 1e-15);
        assert!(r.unitary.is_unitary(1e-12));
    }

    #[test]
    fn identity_for_trivial_and_zero_subtrees() {
        let t = TargetState::new(vec![ONE, ZERO, ZERO, ZERO]).unwrap();
        let tree = build_tree(&t);
        let root = tree.rotation_params(0, 0).unwrap();
        assert_eq!(root.unitary, Mat2::IDENTITY);
        assert_eq!((root.alpha, root.beta), (0.0, 0.0));
        // node (1, 1) carries no amplitude
        let dead = tree.rotation_params(1, 1).unwrap();
        assert_eq!(dead.unitary, Mat2::IDENTITY);
    }

    #[test]
    fn rotation_index_out_of_range() {
        let tree = build_tree(&TargetState::uniform(2).unwrap());
        assert!(tree.rotation_params(2, 0).is_err());
        assert!(tree.rotation_params(1, 2).is_err());
    }

    #[test]
    fn rejects_unnormalized_input_with_norm() {
        match TargetState::new(vec![ONE, ONE]) {
            Err(Error::NotNormalized { norm, .. }) => assert!((norm - 2.0).abs() < 1e-15),
            other => panic!("expected rejection, got {other:?}"),
        }
        let fixed = TargetState::with_options(
            vec![ONE, ONE],
            TargetOptions {
                auto_normalize: true,
                ..TargetOptions::default()
            },
        )
        .unwrap();
        assert!(fixed.norm_report().pass);
    }

    #[test]
    fn normalization_reports() {
        let r = validate_normalization(&[ONE, ZERO], 1e-9);
        assert!(r.pass && (r.norm - 1.0).abs() < 1e-15);
        let r = validate_normalization(&[ONE, ONE], 1e-9);
        assert!(!r.pass && (r.norm - 2.0).abs() < 1e-15);
        let r = validate_normalization(&[c(0.6, 0.0), c(0.0, 0.8)], 1e-9);
        assert!(r.pass);
    }

    #[test]
    fn global_phase_is_split_off() {
        let phase = C64::from_polar(1.0, 0.7);
        let t = TargetState::new(vec![phase * 0.6, phase * c(0.0, 0.8)]).unwrap();
        assert!((t.global_phase() - phase).norm() < 1e-15);
        assert!((t.amplitude(0) - c(0.6, 0.0)).norm() < 1e-15);
        assert!((t.original()[1] - phase * c(0.0, 0.8)).norm() < 1e-15);
    }

    #[test]
    fn root_is_real_even_when_first_amplitude_vanishes() {
        let t = TargetState::new(vec![ZERO, ZERO, c(0.0, 0.6), c(0.8, 0.0)]).unwrap();
        let tree = build_tree(&t);
        assert!((tree.amplitude(0, 0) - ONE).norm() < 1e-15);
        assert_eq!(t.global_phase(), ONE);
        assert!((t.amplitude(2) - c(0.0, 0.6)).norm() < 1e-15);
    }

    #[test]
    fn bad_lengths() {
        assert!(matches!(
            TargetState::new(vec![ONE]),
            Err(Error::BadLength { .. })
        ));
        assert!(matches!(
            TargetState::new(vec![ONE, ZERO, ZERO]),
            Err(Error::BadLength { .. })
        ));
    }

    #[test]
    fn json_file_roundtrip_and_size_check() {
        let t = TargetState::random(3, 4).unwrap();
        let back = TargetState::from_json_str(&t.to_json()).unwrap();
        for (a, b) in t.amplitudes().iter().zip(back.amplitudes()) {
            assert!((a - b).norm() < 1e-15);
        }
        let bad = r#"{"n": 2, "amplitudes": [[1.0, 0.0], [0.0, 0.0]]}"#;
        assert!(matches!(
            TargetState::from_json_str(bad),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn euler_form_matches_first_column_up_to_phase() {
        let tree = build_tree(&TargetState::random(3, 11).unwrap());
        for l in 0..3 {
            for j in 0..1 << l {
                let r = tree.rotation_params(l, j).unwrap();
                let e = r.euler_form().column(0);
                let phase = C64::from_polar(1.0, -r.alpha / 2.0);
                assert!((e[0] - phase * r.c0).norm() < 1e-12);
                assert!((e[1] - phase * r.c1).norm() < 1e-12);
            }
        }
    }
}
