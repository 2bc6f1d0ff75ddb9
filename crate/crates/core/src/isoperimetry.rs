//! Conductance of sets and the extremal isoperimetric constants.
//!
//! For a kernel `K` and a set `A` of states,
//!
//! ```text
//! k_K(A) = 1 / (π(A) π(Aᶜ)) · Σ_{x∈A} π(x) K(x, Aᶜ)
//! ```
//!
//! `k_n` and `K_n` are the infimum and supremum of `k_{Pⁿ}(A)` over proper
//! subsets; the adjoint-pair constant uses `K = P*ⁿPⁿ`.
//!
//! Exact extrema enumerate one member of every complement pair `{A, Aᶜ}`
//! (those containing state 0). Above [`EXACT_LIMIT`] states only the local
//! search in [`search`](crate::search) is available and results are flagged
//! as inexact.

use fixedbitset::FixedBitSet;
use rayon::prelude::*;

use crate::chain::{
    adjoint_pair, reverse_pair, KernelMatrix, OperatorKernel, StationaryWeights, TransitionKernel,
};
use crate::error::{GapError, Result};
use crate::search::{local_search_conductance, SearchConfig};

/// Largest state count for which exact enumeration is attempted.
pub const EXACT_LIMIT: usize = 24;

/// Constants at or below this value count as zero.
pub const CONDUCTANCE_POS_TOL: f64 = 1e-10;

/// A subset of the state space with its cached stationary mass.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSet {
    members: FixedBitSet,
    mass: f64,
}

impl StateSet {
    pub fn new(dim: usize, indices: &[usize], pi: &StationaryWeights) -> Result<Self> {
        if pi.len() != dim {
            return Err(GapError::DimensionMismatch {
                expected: dim,
                found: pi.len(),
            });
        }
        let mut members = FixedBitSet::with_capacity(dim);
        for &i in indices {
            if i >= dim {
                return Err(GapError::InvalidInputs(format!(
                    "state index {i} out of range for {dim} states"
                )));
            }
            members.insert(i);
        }
        Ok(Self::from_bits(members, pi))
    }

    pub(crate) fn from_bits(members: FixedBitSet, pi: &StationaryWeights) -> Self {
        let mass = members.ones().map(|i| pi.get(i)).sum();
        Self { members, mass }
    }

    /// Bit `i` of `mask` selects state `i`.
    pub fn from_mask(mask: u64, dim: usize, pi: &StationaryWeights) -> Self {
        let mut members = FixedBitSet::with_capacity(dim);
        for i in 0..dim.min(64) {
            if mask >> i & 1 == 1 {
                members.insert(i);
            }
        }
        Self::from_bits(members, pi)
    }

    pub fn dim(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.contains(i)
    }

    pub fn indices(&self) -> Vec<usize> {
        self.members.ones().collect()
    }

    pub fn len(&self) -> usize {
        self.members.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `π(A)`.
    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn complement(&self, pi: &StationaryWeights) -> Self {
        let mut members = self.members.clone();
        members.toggle_range(..);
        Self::from_bits(members, pi)
    }

    /// The bitmask, when the state space fits in 64 bits.
    pub fn to_mask(&self) -> Option<u64> {
        (self.dim() <= 64).then(|| self.members.ones().fold(0u64, |m, i| m | 1 << i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Extremum {
    Inf,
    Sup,
}

impl Extremum {
    /// Whether `candidate` beats `incumbent` under this extremum.
    pub(crate) fn improves(self, candidate: f64, incumbent: f64) -> bool {
        match self {
            Extremum::Inf => candidate < incumbent,
            Extremum::Sup => candidate > incumbent,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum Strategy {
    #[default]
    Exact,
    LocalSearch(SearchConfig),
}

impl Strategy {
    pub fn is_exact(&self) -> bool {
        matches!(self, Strategy::Exact)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConductanceResult {
    pub value: f64,
    pub witness: StateSet,
    /// `true` when `value` is the global extremum.
    pub exact: bool,
}

/// `k_K(A)`.
pub fn conductance_set(
    kernel: &impl KernelMatrix,
    pi: &StationaryWeights,
    set: &StateSet,
) -> Result<f64> {
    let n = kernel.dim();
    if pi.len() != n || set.dim() != n {
        return Err(GapError::DimensionMismatch {
            expected: n,
            found: if pi.len() != n { pi.len() } else { set.dim() },
        });
    }
    let inside = set.mass();
    let outside: f64 = (0..n).filter(|&i| !set.contains(i)).map(|i| pi.get(i)).sum();
    if inside <= 0.0 || outside <= 0.0 {
        return Err(GapError::DegenerateSet { mass: inside });
    }
    let m = kernel.matrix();
    let mut flow = 0.0;
    for x in set.members.ones() {
        let out: f64 = (0..n).filter(|&y| !set.contains(y)).map(|y| m[(x, y)]).sum();
        flow += pi.get(x) * out;
    }
    Ok(flow / (inside * outside))
}

/// Byte-chunked partial row sums: `sum(row, mask)` returns
/// `Σ_{y ∈ mask} m(row, y)` with `⌈n/8⌉` table lookups.
///
/// The summation order depends on the mask only, so re-evaluating a mask
/// reproduces its value bit for bit, and rows of exact zeros give exact zeros.
pub(crate) struct RowTable {
    chunks: usize,
    table: Vec<f64>,
}

impl RowTable {
    pub(crate) fn new(rows: usize, cols: usize, entry: impl Fn(usize, usize) -> f64) -> Self {
        let chunks = cols.div_ceil(8);
        let mut table = vec![0.0; rows * chunks * 256];
        for r in 0..rows {
            for c in 0..chunks {
                let base = (r * chunks + c) * 256;
                for byte in 1..256usize {
                    let low = byte.trailing_zeros() as usize;
                    let col = c * 8 + low;
                    let v = if col < cols { entry(r, col) } else { 0.0 };
                    table[base + byte] = table[base + (byte & (byte - 1))] + v;
                }
            }
        }
        Self { chunks, table }
    }

    #[inline]
    pub(crate) fn sum(&self, row: usize, mask: u32) -> f64 {
        let mut acc = 0.0;
        let base = row * self.chunks * 256;
        for c in 0..self.chunks {
            let byte = ((mask >> (8 * c)) & 0xff) as usize;
            acc += self.table[base + c * 256 + byte];
        }
        acc
    }
}

/// Evaluates `k_K(A)` for bitmask sets of a fixed kernel.
pub(crate) struct MaskEvaluator {
    dim: usize,
    full: u32,
    flows: RowTable,
    mass: RowTable,
    weights: Vec<f64>,
}

impl MaskEvaluator {
    pub(crate) fn new(kernel: &impl KernelMatrix, pi: &StationaryWeights) -> Self {
        let dim = kernel.dim();
        let m = kernel.matrix();
        let w = pi.as_slice();
        Self {
            dim,
            full: if dim == 32 { u32::MAX } else { (1u32 << dim) - 1 },
            flows: RowTable::new(dim, dim, |x, y| m[(x, y)]),
            mass: RowTable::new(1, dim, |_, y| w[y]),
            weights: w.to_vec(),
        }
    }

    #[inline]
    pub(crate) fn value(&self, set: u32) -> f64 {
        let comp = !set & self.full;
        let inside = self.mass.sum(0, set);
        let outside = self.mass.sum(0, comp);
        let mut flow = 0.0;
        let mut bits = set;
        while bits != 0 {
            let x = bits.trailing_zeros() as usize;
            flow += self.weights[x] * self.flows.sum(x, comp);
            bits &= bits - 1;
        }
        flow / (inside * outside)
    }

    pub(crate) fn full(&self) -> u32 {
        self.full
    }

    pub(crate) fn dim(&self) -> usize {
        self.dim
    }
}

/// Orders candidates: better value first, then smaller canonical mask.
fn better(mode: Extremum, a: (f64, u32), b: (f64, u32)) -> bool {
    if a.0 == b.0 {
        a.1 < b.1
    } else {
        mode.improves(a.0, b.0)
    }
}

/// Exact extremum over proper subsets; returns `(value, mask)` where the
/// mask is the smaller-valued member of the optimal complement pair.
pub(crate) fn exact_extremum(eval: &MaskEvaluator, mode: Extremum) -> (f64, u32) {
    let n = eval.dim();
    let full = eval.full();
    // masks containing state 0: A = (m << 1) | 1 for m < 2^(n-1), A ≠ Ω
    let half: u64 = 1u64 << (n - 1);
    let last = half - 1;
    const CHUNK: u64 = 1 << 12;
    let chunks = half.div_ceil(CHUNK);

    let scan = |c: u64| {
        let start = c * CHUNK;
        let end = (start + CHUNK).min(last);
        let mut best: Option<(f64, u32)> = None;
        for m in start..end {
            let set = ((m as u32) << 1) | 1;
            let v = eval.value(set);
            let rep = set.min(!set & full);
            let cand = (v, rep);
            if best.is_none_or(|b| better(mode, cand, b)) {
                best = Some(cand);
            }
        }
        best
    };
    let pick = |a: Option<(f64, u32)>, b: Option<(f64, u32)>| match (a, b) {
        (Some(x), Some(y)) => Some(if better(mode, y, x) { y } else { x }),
        (x, None) => x,
        (None, y) => y,
    };

    (0..chunks)
        .into_par_iter()
        .map(scan)
        .reduce(|| None, pick)
        .expect("at least one proper subset")
}

/// Extremal conductance over proper subsets.
pub fn conductance_extremal(
    kernel: &impl KernelMatrix,
    pi: &StationaryWeights,
    mode: Extremum,
    strategy: &Strategy,
) -> Result<ConductanceResult> {
    let n = kernel.dim();
    if pi.len() != n {
        return Err(GapError::DimensionMismatch {
            expected: n,
            found: pi.len(),
        });
    }
    if n < 2 {
        return Err(GapError::DegenerateSet { mass: 1.0 });
    }
    pi.require_positive()?;
    match strategy {
        Strategy::Exact => {
            if n > EXACT_LIMIT {
                return Err(GapError::TooLargeForExact {
                    dim: n,
                    limit: EXACT_LIMIT,
                });
            }
            let eval = MaskEvaluator::new(kernel, pi);
            let (value, mask) = exact_extremum(&eval, mode);
            Ok(ConductanceResult {
                value,
                witness: StateSet::from_mask(mask as u64, n, pi),
                exact: true,
            })
        }
        Strategy::LocalSearch(cfg) => local_search_conductance(kernel, pi, mode, cfg),
    }
}

/// `k_n = inf_A k_{Pⁿ}(A)`.
pub fn k_n(
    kernel: &TransitionKernel,
    pi: &StationaryWeights,
    n: usize,
    strategy: &Strategy,
) -> Result<ConductanceResult> {
    let pn = kernel.power(n);
    conductance_extremal(&pn, pi, Extremum::Inf, strategy)
}

/// `K_n = sup_A k_{Pⁿ}(A)`.
pub fn big_k_n(
    kernel: &TransitionKernel,
    pi: &StationaryWeights,
    n: usize,
    strategy: &Strategy,
) -> Result<ConductanceResult> {
    let pn = kernel.power(n);
    conductance_extremal(&pn, pi, Extremum::Sup, strategy)
}

/// `k_{P*ⁿPⁿ}`.
pub fn k_adjoint_pair(
    kernel: &TransitionKernel,
    pi: &StationaryWeights,
    n: usize,
    strategy: &Strategy,
) -> Result<ConductanceResult> {
    let k = adjoint_pair(kernel, pi, n)?;
    conductance_extremal(&k, pi, Extremum::Inf, strategy)
}

/// `k_{PⁿP*ⁿ}`.
pub fn k_reverse_pair(
    kernel: &TransitionKernel,
    pi: &StationaryWeights,
    n: usize,
    strategy: &Strategy,
) -> Result<ConductanceResult> {
    let k = reverse_pair(kernel, pi, n)?;
    conductance_extremal(&k, pi, Extremum::Inf, strategy)
}

/// Infimum conductance of an arbitrary operator kernel.
pub fn k_operator(
    kernel: &OperatorKernel,
    pi: &StationaryWeights,
    strategy: &Strategy,
) -> Result<ConductanceResult> {
    conductance_extremal(kernel, pi, Extremum::Inf, strategy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{adjoint_pair, stationary, StationaryWeights, TransitionKernel};
    use approx::assert_abs_diff_eq;

    fn three_state() -> (TransitionKernel, StationaryWeights) {
        let p = TransitionKernel::new(
            vec!["1", "2", "3"],
            vec![
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![0.5, 0.0, 0.5],
            ],
        )
        .unwrap();
        let pi = stationary(&p).unwrap();
        (p, pi)
    }

    fn chain(rows: Vec<Vec<f64>>) -> (TransitionKernel, StationaryWeights) {
        let p = TransitionKernel::unlabeled(rows).unwrap();
        let pi = stationary(&p).unwrap();
        (p, pi)
    }

    /// Direct minimum over every nonempty proper subset.
    fn brute(kernel: &impl KernelMatrix, pi: &StationaryWeights, mode: Extremum) -> f64 {
        let n = kernel.dim();
        let mut best = match mode {
            Extremum::Inf => f64::INFINITY,
            Extremum::Sup => f64::NEG_INFINITY,
        };
        for mask in 1..(1u64 << n) - 1 {
            let set = StateSet::from_mask(mask, n, pi);
            let v = conductance_set(kernel, pi, &set).unwrap();
            if mode.improves(v, best) {
                best = v;
            }
        }
        best
    }

    #[test]
    fn set_examples() {
        let pi = StationaryWeights::new(vec![0.25, 0.25, 0.5]).unwrap();
        let id = TransitionKernel::identity(3).unwrap();
        let a = StateSet::new(3, &[0, 2], &pi).unwrap();
        assert_eq!(conductance_set(&id, &pi, &a).unwrap(), 0.0);

        let (flip, pi2) = chain(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let a = StateSet::new(2, &[0], &pi2).unwrap();
        assert_abs_diff_eq!(conductance_set(&flip, &pi2, &a).unwrap(), 2.0, epsilon = 1e-15);

        let (p, pi) = three_state();
        let sp = adjoint_pair(&p, &pi, 1).unwrap();
        let a = StateSet::new(3, &[1], &pi).unwrap();
        assert_eq!(conductance_set(&sp, &pi, &a).unwrap(), 0.0);
    }

    #[test]
    fn degenerate_sets_rejected() {
        let (p, pi) = three_state();
        let empty = StateSet::new(3, &[], &pi).unwrap();
        let all = StateSet::new(3, &[0, 1, 2], &pi).unwrap();
        assert!(matches!(conductance_set(&p, &pi, &empty), Err(GapError::DegenerateSet { .. })));
        assert!(matches!(conductance_set(&p, &pi, &all), Err(GapError::DegenerateSet { .. })));
    }

    #[test]
    fn two_state_closed_form() {
        let (a, b) = (0.3, 0.2);
        let (p, pi) = chain(vec![vec![1.0 - a, a], vec![b, 1.0 - b]]);
        let res = k_n(&p, &pi, 1, &Strategy::Exact).unwrap();
        assert_abs_diff_eq!(res.value, a + b, epsilon = 1e-12);
        assert_abs_diff_eq!(res.value, brute(&p, &pi, Extremum::Inf), epsilon = 1e-12);
        assert_eq!(res.witness.indices(), vec![0]);
        assert!(res.exact);

        let (p, pi) = chain(vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        assert_abs_diff_eq!(big_k_n(&p, &pi, 1, &Strategy::Exact).unwrap().value, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn flip_chain_sup() {
        let (p, pi) = chain(vec![vec![0.0, 1.0], vec![1.0, 0.0]]);
        let res = big_k_n(&p, &pi, 1, &Strategy::Exact).unwrap();
        assert_abs_diff_eq!(res.value, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn identity_has_zero_constant() {
        let id = TransitionKernel::identity(3).unwrap();
        let pi = StationaryWeights::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(k_n(&id, &pi, 1, &Strategy::Exact).unwrap().value, 0.0);
    }

    #[test]
    fn three_state_pairs() {
        let (p, pi) = three_state();
        let first = k_adjoint_pair(&p, &pi, 1, &Strategy::Exact).unwrap();
        assert_eq!(first.value, 0.0);
        // witness {state "2"} is the smaller-mask member of {{2}, {1, 3}}
        assert_eq!(first.witness.indices(), vec![1]);

        let second = k_adjoint_pair(&p, &pi, 2, &Strategy::Exact).unwrap();
        let sp2 = adjoint_pair(&p, &pi, 2).unwrap();
        let oracle = brute(&sp2, &pi, Extremum::Inf);
        assert!(second.value > 1e-6);
        assert_abs_diff_eq!(second.value, oracle, epsilon = 1e-12);
    }

    #[test]
    fn exact_matches_direct_evaluation() {
        let (p, pi) = chain(vec![
            vec![0.1, 0.2, 0.3, 0.4],
            vec![0.25, 0.25, 0.25, 0.25],
            vec![0.0, 0.5, 0.2, 0.3],
            vec![0.6, 0.0, 0.1, 0.3],
        ]);
        for mode in [Extremum::Inf, Extremum::Sup] {
            let res = conductance_extremal(&p, &pi, mode, &Strategy::Exact).unwrap();
            assert_abs_diff_eq!(res.value, brute(&p, &pi, mode), epsilon = 1e-12);
            let again = conductance_set(&p, &pi, &res.witness).unwrap();
            assert_abs_diff_eq!(again, res.value, epsilon = 1e-12);
        }
    }

    #[test]
    fn exact_limit_enforced() {
        let n = EXACT_LIMIT + 1;
        let rows = (0..n).map(|_| vec![1.0 / n as f64; n]).collect();
        let (p, pi) = chain(rows);
        assert!(matches!(
            k_n(&p, &pi, 1, &Strategy::Exact),
            Err(GapError::TooLargeForExact { .. })
        ));
    }

    #[test]
    fn single_state_has_no_proper_subset() {
        let (p, pi) = chain(vec![vec![1.0]]);
        assert!(k_n(&p, &pi, 1, &Strategy::Exact).is_err());
    }

    #[test]
    fn row_table_sums() {
        let t = RowTable::new(1, 10, |_, c| (c + 1) as f64);
        assert_eq!(t.sum(0, 0), 0.0);
        assert_eq!(t.sum(0, 0b11_0000_0101), 1.0 + 3.0 + 9.0 + 10.0);
    }
}
