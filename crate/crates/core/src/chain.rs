//! Transition kernels on a finite state space, the invariant measure and the
//! operator algebra of `L²(π)`.
//!
//! Every kernel is stored as a dense row-major view `K(x, y)` in a [`faer::Mat`].
//! The weighted inner product is `⟨f, g⟩_π = Σ_x π(x) f(x) g(x)`; the adjoint of
//! a kernel with respect to it is the time reversal
//! `p*(y, x) = π(x) p(x, y) / π(y)`.

use std::collections::VecDeque;

use faer::linalg::solvers::Solve;
use faer::Mat;

use crate::error::{GapError, Result};

/// Row-sum tolerance for stochastic kernels.
pub const ROW_TOL: f64 = 1e-9;
/// Tolerance for eigenvalue comparisons.
pub const EIG_TOL: f64 = 1e-9;
/// Bound on `‖πP − π‖₁` for an accepted stationary vector.
pub const STAT_TOL: f64 = 1e-10;
/// Tolerance on `Σπ = 1`.
pub const MASS_TOL: f64 = 1e-12;
/// Detailed-balance tolerance used for self-adjointness flags.
pub const SYM_TOL: f64 = 1e-9;

/// Anything that exposes a square kernel matrix.
pub trait KernelMatrix {
    fn matrix(&self) -> &Mat<f64>;

    fn dim(&self) -> usize {
        self.matrix().nrows()
    }

    fn entry(&self, x: usize, y: usize) -> f64 {
        self.matrix()[(x, y)]
    }

    /// `(Kf)(x) = Σ_y K(x, y) f(y)`.
    fn apply(&self, f: &[f64]) -> Vec<f64> {
        let m = self.matrix();
        (0..m.nrows())
            .map(|x| (0..m.ncols()).map(|y| m[(x, y)] * f[y]).sum())
            .collect()
    }
}

/// A row-stochastic matrix over labelled states.
#[derive(Debug, Clone)]
pub struct TransitionKernel {
    labels: Vec<String>,
    rows: Mat<f64>,
}

impl KernelMatrix for TransitionKernel {
    fn matrix(&self) -> &Mat<f64> {
        &self.rows
    }
}

impl PartialEq for TransitionKernel {
    fn eq(&self, other: &Self) -> bool {
        self.labels == other.labels && mat_eq(&self.rows, &other.rows)
    }
}

fn mat_eq(a: &Mat<f64>, b: &Mat<f64>) -> bool {
    a.nrows() == b.nrows()
        && a.ncols() == b.ncols()
        && (0..a.nrows()).all(|i| (0..a.ncols()).all(|j| a[(i, j)] == b[(i, j)]))
}

impl TransitionKernel {
    /// Validates and builds a kernel. Entries are never clamped: any negative
    /// entry or row sum off by more than [`ROW_TOL`] is rejected.
    pub fn new<S: Into<String>>(labels: Vec<S>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let n = labels.len();
        if n == 0 {
            return Err(GapError::EmptyKernel);
        }
        if rows.len() != n {
            return Err(GapError::DimensionMismatch {
                expected: n,
                found: rows.len(),
            });
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(GapError::DimensionMismatch {
                expected: n,
                found: bad.len(),
            });
        }
        let m = Mat::from_fn(n, n, |i, j| rows[i][j]);
        Self::from_mat(labels, m)
    }

    pub fn from_mat(labels: Vec<String>, rows: Mat<f64>) -> Result<Self> {
        let n = rows.nrows();
        if n == 0 {
            return Err(GapError::EmptyKernel);
        }
        if rows.ncols() != n {
            return Err(GapError::DimensionMismatch {
                expected: n,
                found: rows.ncols(),
            });
        }
        if labels.len() != n {
            return Err(GapError::DimensionMismatch {
                expected: n,
                found: labels.len(),
            });
        }
        for i in 0..n {
            let mut sum = 0.0;
            for j in 0..n {
                let v = rows[(i, j)];
                if !v.is_finite() {
                    return Err(GapError::NonFiniteEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                if v < 0.0 {
                    return Err(GapError::NegativeEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                sum += v;
            }
            if (sum - 1.0).abs() > ROW_TOL {
                return Err(GapError::NonStochasticRow { row: i, sum });
            }
        }
        Ok(Self { labels, rows })
    }

    /// Kernel with labels `"0"`, `"1"`, ….
    pub fn unlabeled(rows: Vec<Vec<f64>>) -> Result<Self> {
        let labels = (0..rows.len()).map(|i| i.to_string()).collect::<Vec<_>>();
        Self::new(labels, rows)
    }

    pub fn identity(n: usize) -> Result<Self> {
        let labels = (0..n).map(|i| i.to_string()).collect();
        Self::from_mat(labels, Mat::identity(n, n))
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).map(|j| self.rows[(i, j)]).collect())
            .collect()
    }

    /// `Pⁿ` as a kernel over the same labels; `P⁰ = I`.
    pub fn power(&self, n: usize) -> TransitionKernel {
        TransitionKernel {
            labels: self.labels.clone(),
            rows: mat_power(&self.rows, n),
        }
    }

    /// The kernel restricted to `keep` (in that order). Rows must already
    /// be closed on `keep`, which holds for the recurrent class of a chain.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let labels = keep.iter().map(|&i| self.labels[i].clone()).collect();
        let m = Mat::from_fn(keep.len(), keep.len(), |a, b| self.rows[(keep[a], keep[b])]);
        Self::from_mat(labels, m)
    }

    /// `εI + (1 − ε)P`.
    pub fn lazy(&self, eps: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&eps) {
            return Err(GapError::InvalidParameter(format!(
                "laziness {eps} outside [0, 1)"
            )));
        }
        let n = self.dim();
        let m = Mat::from_fn(n, n, |i, j| {
            let d = if i == j { eps } else { 0.0 };
            d + (1.0 - eps) * self.rows[(i, j)]
        });
        Self::from_mat(self.labels.clone(), m)
    }

    /// Adjacency of the support graph `x → y` iff `p(x, y) > 0`.
    fn successors(&self) -> Vec<Vec<usize>> {
        let n = self.dim();
        (0..n)
            .map(|i| (0..n).filter(|&j| self.rows[(i, j)] > 0.0).collect())
            .collect()
    }

    /// Closed communicating classes of the support graph, each sorted, listed
    /// by smallest member.
    pub fn closed_classes(&self) -> Vec<Vec<usize>> {
        let n = self.dim();
        let succ = self.successors();
        let reach: Vec<Vec<bool>> = (0..n)
            .map(|s| {
                let mut seen = vec![false; n];
                let mut queue = VecDeque::from([s]);
                seen[s] = true;
                while let Some(x) = queue.pop_front() {
                    for &y in &succ[x] {
                        if !seen[y] {
                            seen[y] = true;
                            queue.push_back(y);
                        }
                    }
                }
                seen
            })
            .collect();

        let mut assigned = vec![false; n];
        let mut classes = Vec::new();
        for x in 0..n {
            if assigned[x] {
                continue;
            }
            let closed = (0..n).all(|y| !reach[x][y] || reach[y][x]);
            if !closed {
                continue;
            }
            let class: Vec<usize> = (0..n).filter(|&y| reach[x][y]).collect();
            for &y in &class {
                assigned[y] = true;
            }
            classes.push(class);
        }
        classes
    }
}

/// A probability vector `π` with `πP = π`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryWeights {
    weights: Vec<f64>,
}

impl StationaryWeights {
    /// Accepts a probability vector; stationarity is checked separately with
    /// [`StationaryWeights::residual`].
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(GapError::EmptyKernel);
        }
        if let Some(&w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(GapError::InvalidWeights(format!("entry {w} is not a probability")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(GapError::InvalidWeights(format!("weights sum to {total}")));
        }
        Ok(Self { weights })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn get(&self, x: usize) -> f64 {
        self.weights[x]
    }

    /// `‖πK − π‖₁`.
    pub fn residual(&self, kernel: &impl KernelMatrix) -> f64 {
        let m = kernel.matrix();
        let n = self.weights.len();
        (0..n)
            .map(|y| {
                let flow: f64 = (0..n).map(|x| self.weights[x] * m[(x, y)]).sum();
                (flow - self.weights[y]).abs()
            })
            .sum()
    }

    /// Indices with positive mass.
    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len())
            .filter(|&i| self.weights[i] > 0.0)
            .collect()
    }

    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let sub: Vec<f64> = keep.iter().map(|&i| self.weights[i]).collect();
        let total: f64 = sub.iter().sum();
        Self::new(sub.into_iter().map(|w| w / total).collect())
    }

    pub(crate) fn require_positive(&self) -> Result<()> {
        match self.weights.iter().position(|&w| w <= 0.0) {
            Some(state) => Err(GapError::ZeroMassState { state }),
            None => Ok(()),
        }
    }
}

/// `⟨f, g⟩_π`.
pub fn inner(pi: &StationaryWeights, f: &[f64], g: &[f64]) -> f64 {
    pi.as_slice()
        .iter()
        .zip(f.iter().zip(g))
        .map(|(w, (a, b))| w * a * b)
        .sum()
}

/// Unique invariant measure by a dense solve of `(Pᵀ − I)π = 0`, `Σπ = 1`.
///
/// Transient states get exactly zero mass: the solve runs on the single
/// closed class only.
pub fn stationary(kernel: &TransitionKernel) -> Result<StationaryWeights> {
    let classes = kernel.closed_classes();
    if classes.len() != 1 {
        return Err(GapError::NotUniquelyErgodic {
            closed_classes: classes.len(),
        });
    }
    let class = &classes[0];
    let m = class.len();
    let p = kernel.matrix();

    let mut a = Mat::<f64>::from_fn(m, m, |i, j| {
        let v = p[(class[j], class[i])];
        if i == j {
            v - 1.0
        } else {
            v
        }
    });
    for j in 0..m {
        a[(m - 1, j)] = 1.0;
    }
    let mut rhs = Mat::<f64>::zeros(m, 1);
    rhs[(m - 1, 0)] = 1.0;
    let sol = a.partial_piv_lu().solve(&rhs);

    let mut weights = vec![0.0; kernel.dim()];
    for (k, &state) in class.iter().enumerate() {
        let v = sol[(k, 0)];
        if !v.is_finite() {
            return Err(GapError::Linalg("stationary solve produced a non-finite value".into()));
        }
        weights[state] = v.max(0.0);
    }
    let total: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= total;
    }
    let pi = StationaryWeights::new(weights)?;
    let res = pi.residual(kernel);
    if res > STAT_TOL {
        return Err(GapError::Linalg(format!("stationary residual {res:e} exceeds tolerance")));
    }
    Ok(pi)
}

/// A kernel together with its invariant measure, restricted to the
/// `π`-support. Every analysis in the crate runs on this pair.
#[derive(Debug, Clone)]
pub struct Chain {
    pub kernel: TransitionKernel,
    pub pi: StationaryWeights,
    /// Labels of states dropped because they carry no stationary mass.
    pub pruned: Vec<String>,
}

impl Chain {
    pub fn new(kernel: TransitionKernel) -> Result<Self> {
        let pi = stationary(&kernel)?;
        let keep = pi.support();
        if keep.len() == kernel.dim() {
            return Ok(Self {
                kernel,
                pi,
                pruned: Vec::new(),
            });
        }
        let pruned = (0..kernel.dim())
            .filter(|i| !keep.contains(i))
            .map(|i| kernel.labels()[i].clone())
            .collect();
        Ok(Self {
            kernel: kernel.restrict(&keep)?,
            pi: pi.restrict(&keep)?,
            pruned,
        })
    }

    pub fn dim(&self) -> usize {
        self.kernel.dim()
    }
}

/// A nonnegative sub-Markov operator such as `P*ⁿPⁿ` or `(P + P*)/2`.
#[derive(Debug, Clone)]
pub struct OperatorKernel {
    matrix: Mat<f64>,
    self_adjoint: bool,
    nonnegative: bool,
}

impl KernelMatrix for OperatorKernel {
    fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }
}

impl OperatorKernel {
    /// Validated: entries `≥ 0`, row sums `≤ 1 + ROW_TOL`.
    pub fn new(matrix: Mat<f64>, pi: &StationaryWeights) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n || pi.len() != n {
            return Err(GapError::DimensionMismatch {
                expected: n,
                found: if matrix.ncols() != n {
                    matrix.ncols()
                } else {
                    pi.len()
                },
            });
        }
        for i in 0..n {
            let mut sum = 0.0;
            for j in 0..n {
                let v = matrix[(i, j)];
                if v < 0.0 {
                    return Err(GapError::NegativeEntry {
                        row: i,
                        col: j,
                        value: v,
                    });
                }
                sum += v;
            }
            if sum > 1.0 + ROW_TOL {
                return Err(GapError::NonStochasticRow { row: i, sum });
            }
        }
        Ok(Self::unchecked(matrix, pi))
    }

    /// Signed variant for kernels such as `P + P* − P*P` that only satisfy
    /// nonnegativity under extra hypotheses.
    pub fn signed(matrix: Mat<f64>, pi: &StationaryWeights) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n || pi.len() != n {
            return Err(GapError::DimensionMismatch {
                expected: n,
                found: pi.len(),
            });
        }
        Ok(Self::unchecked(matrix, pi))
    }

    fn unchecked(matrix: Mat<f64>, pi: &StationaryWeights) -> Self {
        let n = matrix.nrows();
        let w = pi.as_slice();
        let self_adjoint = (0..n).all(|x| {
            (0..x).all(|y| (w[x] * matrix[(x, y)] - w[y] * matrix[(y, x)]).abs() <= SYM_TOL)
        });
        let nonnegative = (0..n).all(|x| (0..n).all(|y| matrix[(x, y)] >= 0.0));
        Self {
            matrix,
            self_adjoint,
            nonnegative,
        }
    }

    pub fn from_transition(kernel: &TransitionKernel, pi: &StationaryWeights) -> Self {
        Self::unchecked(kernel.matrix().clone(), pi)
    }

    pub fn is_self_adjoint(&self) -> bool {
        self.self_adjoint
    }

    pub fn is_nonnegative(&self) -> bool {
        self.nonnegative
    }
}

pub(crate) fn mat_power(m: &Mat<f64>, n: usize) -> Mat<f64> {
    let dim = m.nrows();
    let mut result = Mat::<f64>::identity(dim, dim);
    for _ in 0..n {
        result = &result * m;
    }
    result
}

/// Time reversal `p*(y, x) = π(x) p(x, y) / π(y)`.
pub fn adjoint(kernel: &TransitionKernel, pi: &StationaryWeights) -> Result<TransitionKernel> {
    check_dims(kernel, pi)?;
    pi.require_positive()?;
    let w = pi.as_slice();
    let p = kernel.matrix();
    let n = kernel.dim();
    let m = Mat::from_fn(n, n, |y, x| w[x] * p[(x, y)] / w[y]);
    TransitionKernel::from_mat(kernel.labels().to_vec(), m)
}

/// Matrix product `K₁K₂`.
pub fn compose(
    first: &impl KernelMatrix,
    second: &impl KernelMatrix,
    pi: &StationaryWeights,
) -> Result<OperatorKernel> {
    if first.dim() != second.dim() {
        return Err(GapError::DimensionMismatch {
            expected: first.dim(),
            found: second.dim(),
        });
    }
    OperatorKernel::new(first.matrix() * second.matrix(), pi)
}

/// `Kⁿ`, with `K⁰ = I`.
pub fn power(kernel: &impl KernelMatrix, n: usize, pi: &StationaryWeights) -> Result<OperatorKernel> {
    OperatorKernel::new(mat_power(kernel.matrix(), n), pi)
}

/// `P*ⁿPⁿ`.
pub fn adjoint_pair(
    kernel: &TransitionKernel,
    pi: &StationaryWeights,
    n: usize,
) -> Result<OperatorKernel> {
    let pn = kernel.power(n);
    let star = adjoint(&pn, pi)?;
    compose(&star, &pn, pi)
}

/// `PⁿP*ⁿ`.
pub fn reverse_pair(
    kernel: &TransitionKernel,
    pi: &StationaryWeights,
    n: usize,
) -> Result<OperatorKernel> {
    let pn = kernel.power(n);
    let star = adjoint(&pn, pi)?;
    compose(&pn, &star, pi)
}

/// Additive reversibilization `(P + P*)/2`.
pub fn additive_reversibilization(
    kernel: &TransitionKernel,
    pi: &StationaryWeights,
) -> Result<OperatorKernel> {
    let star = adjoint(kernel, pi)?;
    let n = kernel.dim();
    let m = Mat::from_fn(n, n, |i, j| 0.5 * (kernel.entry(i, j) + star.entry(i, j)));
    OperatorKernel::new(m, pi)
}

/// `P + P* − P*P`; may carry negative entries.
pub fn difference_reversibilization(
    kernel: &TransitionKernel,
    pi: &StationaryWeights,
) -> Result<OperatorKernel> {
    let star = adjoint(kernel, pi)?;
    let sp = star.matrix() * kernel.matrix();
    let n = kernel.dim();
    let m = Mat::from_fn(n, n, |i, j| kernel.entry(i, j) + star.entry(i, j) - sp[(i, j)]);
    OperatorKernel::signed(m, pi)
}

/// `S = D^{1/2} P D^{-1/2}` with `D = diag(π)`; the `L²(π)` operator norm
/// of `P` is the Euclidean norm of `S`.
pub fn symmetrize(kernel: &impl KernelMatrix, pi: &StationaryWeights) -> Result<Mat<f64>> {
    if kernel.dim() != pi.len() {
        return Err(GapError::DimensionMismatch {
            expected: kernel.dim(),
            found: pi.len(),
        });
    }
    pi.require_positive()?;
    let s: Vec<f64> = pi.as_slice().iter().map(|w| w.sqrt()).collect();
    let p = kernel.matrix();
    let n = kernel.dim();
    Ok(Mat::from_fn(n, n, |x, y| s[x] * p[(x, y)] / s[y]))
}

/// Symmetric measure `μ(x, y) = Σ_z π(z) p(z, x) p(z, y)` on `Ω²`, for which
/// `⟨f, P*Pg⟩_π = Σ μ(x, y) g(x) f(y)`.
#[derive(Debug, Clone)]
pub struct FormKernel {
    mu: Mat<f64>,
}

impl FormKernel {
    pub fn matrix(&self) -> &Mat<f64> {
        &self.mu
    }

    pub fn total_mass(&self) -> f64 {
        let n = self.mu.nrows();
        (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).map(|(x, y)| self.mu[(x, y)]).sum()
    }

    /// `Σ_{x,y} μ(x, y) g(x) f(y)`.
    pub fn bilinear(&self, f: &[f64], g: &[f64]) -> f64 {
        let n = self.mu.nrows();
        let mut acc = 0.0;
        for x in 0..n {
            for y in 0..n {
                acc += self.mu[(x, y)] * g[x] * f[y];
            }
        }
        acc
    }

    /// `½ Σ_{x,y} (f(y) − f(x))² μ(x, y)`, which equals `⟨f, (I − P*P)f⟩_π`.
    pub fn dirichlet(&self, f: &[f64]) -> f64 {
        let n = self.mu.nrows();
        let mut acc = 0.0;
        for x in 0..n {
            for y in 0..n {
                let d = f[y] - f[x];
                acc += d * d * self.mu[(x, y)];
            }
        }
        0.5 * acc
    }
}

pub fn form_kernel(kernel: &TransitionKernel, pi: &StationaryWeights) -> Result<FormKernel> {
    check_dims(kernel, pi)?;
    let n = kernel.dim();
    let p = kernel.matrix();
    let w = pi.as_slice();
    let mu = Mat::from_fn(n, n, |x, y| (0..n).map(|z| w[z] * p[(z, x)] * p[(z, y)]).sum());
    Ok(FormKernel { mu })
}

fn check_dims(kernel: &impl KernelMatrix, pi: &StationaryWeights) -> Result<()> {
    if kernel.dim() != pi.len() {
        return Err(GapError::DimensionMismatch {
            expected: kernel.dim(),
            found: pi.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn three_state() -> TransitionKernel {
        TransitionKernel::new(
            vec!["1", "2", "3"],
            vec![
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![0.5, 0.0, 0.5],
            ],
        )
        .unwrap()
    }

    fn two_state(a: f64, b: f64) -> TransitionKernel {
        TransitionKernel::unlabeled(vec![vec![1.0 - a, a], vec![b, 1.0 - b]]).unwrap()
    }

    #[test]
    fn validation() {
        assert!(TransitionKernel::unlabeled(vec![vec![1.0]]).is_ok());
        assert!(matches!(
            TransitionKernel::unlabeled(vec![vec![0.5, 0.6], vec![0.5, 0.5]]),
            Err(GapError::NonStochasticRow { row: 0, .. })
        ));
        assert!(matches!(
            TransitionKernel::unlabeled(vec![vec![1.5, -0.5], vec![0.5, 0.5]]),
            Err(GapError::NegativeEntry { row: 0, col: 1, .. })
        ));
        assert!(matches!(
            TransitionKernel::new(vec!["a"], vec![vec![0.5, 0.5], vec![0.5, 0.5]]),
            Err(GapError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            TransitionKernel::unlabeled(vec![vec![0.5, 0.5], vec![1.0]]),
            Err(GapError::DimensionMismatch { .. })
        ));
        assert_eq!(TransitionKernel::unlabeled(vec![]), Err(GapError::EmptyKernel));
    }

    #[test]
    fn stationary_examples() {
        let pi = stationary(&three_state()).unwrap();
        for (got, want) in pi.as_slice().iter().zip([0.25, 0.25, 0.5]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-12);
        }
        let pi = stationary(&two_state(0.3, 0.2)).unwrap();
        assert_abs_diff_eq!(pi.get(0), 0.2 / 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(pi.get(1), 0.3 / 0.5, epsilon = 1e-12);
        assert_eq!(
            stationary(&TransitionKernel::identity(2).unwrap()),
            Err(GapError::NotUniquelyErgodic { closed_classes: 2 })
        );
    }

    #[test]
    fn stationary_matches_power_iteration() {
        let p = three_state();
        let mut v = vec![1.0 / 3.0; 3];
        // the chain is aperiodic, so iterating πP converges
        for _ in 0..2000 {
            let m = p.matrix();
            v = (0..3).map(|y| (0..3).map(|x| v[x] * m[(x, y)]).sum()).collect();
        }
        let pi = stationary(&p).unwrap();
        for i in 0..3 {
            assert_abs_diff_eq!(pi.get(i), v[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn transient_states_are_pruned() {
        // state 0 leaks into the closed pair {1, 2}
        let k = TransitionKernel::unlabeled(vec![
            vec![0.5, 0.25, 0.25],
            vec![0.0, 0.5, 0.5],
            vec![0.0, 0.3, 0.7],
        ])
        .unwrap();
        let pi = stationary(&k).unwrap();
        assert_eq!(pi.get(0), 0.0);
        let chain = Chain::new(k).unwrap();
        assert_eq!(chain.dim(), 2);
        assert_eq!(chain.pruned, vec!["0".to_string()]);
        assert!(chain.pi.residual(&chain.kernel) < STAT_TOL);
    }

    #[test]
    fn adjoint_of_three_state_example() {
        let p = three_state();
        let pi = stationary(&p).unwrap();
        let star = adjoint(&p, &pi).unwrap();
        let sp = compose(&star, &p, &pi).unwrap();
        let want = [[0.5, 0.0, 0.5], [0.0, 1.0, 0.0], [0.25, 0.0, 0.75]];
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(sp.entry(i, j), want[i][j], epsilon = 1e-12);
            }
        }
        assert!(sp.is_self_adjoint());
        let back = adjoint(&star, &pi).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(back.entry(i, j), p.entry(i, j), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn adjoint_of_reversible_is_itself() {
        let p = two_state(0.3, 0.2);
        let pi = stationary(&p).unwrap();
        let star = adjoint(&p, &pi).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(star.entry(i, j), p.entry(i, j), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn adjoint_needs_positive_mass() {
        let p = two_state(0.3, 0.2);
        let pi = StationaryWeights::new(vec![1.0, 0.0]).unwrap();
        assert_eq!(adjoint(&p, &pi), Err(GapError::ZeroMassState { state: 1 }));
    }

    #[test]
    fn powers() {
        let p = three_state();
        let pi = stationary(&p).unwrap();
        let p1 = power(&p, 1, &pi).unwrap();
        let p0 = power(&p, 0, &pi).unwrap();
        let p2 = power(&p, 2, &pi).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(p1.entry(i, j), p.entry(i, j));
                assert_eq!(p0.entry(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
        assert_eq!((0..3).map(|j| p2.entry(0, j)).collect::<Vec<_>>(), vec![0.0, 0.0, 1.0]);
    }

    #[test]
    fn compose_checks_dimensions() {
        let pi = StationaryWeights::new(vec![0.5, 0.5]).unwrap();
        let a = TransitionKernel::identity(2).unwrap();
        let b = TransitionKernel::identity(3).unwrap();
        assert!(matches!(compose(&a, &b, &pi), Err(GapError::DimensionMismatch { .. })));
    }

    #[test]
    fn symmetrize_examples() {
        let p = two_state(0.3, 0.2);
        let pi = stationary(&p).unwrap();
        let s = symmetrize(&p, &pi).unwrap();
        assert_abs_diff_eq!(s[(0, 1)], s[(1, 0)], epsilon = 1e-12);

        let p = three_state();
        let pi = stationary(&p).unwrap();
        let s = symmetrize(&p, &pi).unwrap();
        // S(0,1) = sqrt(1/4)·1/sqrt(1/4) = 1, S(1,0) = 0
        assert_abs_diff_eq!(s[(0, 1)], 1.0, epsilon = 1e-12);
        assert_eq!(s[(1, 0)], 0.0);
        // S(2,0) = sqrt(1/2)·(1/2)/sqrt(1/4)
        assert_abs_diff_eq!(s[(2, 0)], 0.5f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn form_kernel_examples() {
        let id = TransitionKernel::identity(3).unwrap();
        let pi = StationaryWeights::new(vec![0.2, 0.3, 0.5]).unwrap();
        let mu = form_kernel(&id, &pi).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                let want = if x == y { pi.get(x) } else { 0.0 };
                assert_abs_diff_eq!(mu.matrix()[(x, y)], want, epsilon = 1e-15);
            }
        }

        let p = two_state(0.5, 0.5);
        let pi = stationary(&p).unwrap();
        let mu = form_kernel(&p, &pi).unwrap();
        for x in 0..2 {
            for y in 0..2 {
                assert_abs_diff_eq!(mu.matrix()[(x, y)], 0.25, epsilon = 1e-15);
            }
        }

        let p = three_state();
        let pi = stationary(&p).unwrap();
        let mu = form_kernel(&p, &pi).unwrap();
        assert_abs_diff_eq!(mu.total_mass(), 1.0, epsilon = 1e-12);
        for x in 0..3 {
            for y in 0..3 {
                assert_eq!(mu.matrix()[(x, y)], mu.matrix()[(y, x)]);
            }
        }
    }

    #[test]
    fn lazy_rejects_bad_eps() {
        let p = two_state(0.3, 0.2);
        assert!(p.lazy(1.0).is_err());
        assert!(p.lazy(-0.1).is_err());
        let l = p.lazy(0.5).unwrap();
        assert_abs_diff_eq!(l.entry(0, 0), 0.5 + 0.5 * 0.7, epsilon = 1e-15);
    }
}
