//! How far `Pⁿ` is from its time reversal.
//!
//! On a finite space the edge measure `Q⁽ⁿ⁾(x, y) = π(x) pⁿ(x, y)` and its
//! transpose `Q̃⁽ⁿ⁾(x, y) = π(y) pⁿ(y, x)` are compared through the ratio
//! `r = Q⁽ⁿ⁾ / Q̃⁽ⁿ⁾`. `C_R(n)` is the sup of `max(r, 1/r)` and `V(n, q)` the
//! worst `Lᵠ(p(y, ·))` norm of `r(·, y)`.

use faer::Mat;
use rayon::prelude::*;

use crate::chain::{difference_reversibilization, KernelMatrix, StationaryWeights, TransitionKernel};
use crate::error::{GapError, Result};
use crate::isoperimetry::{RowTable, Strategy, EXACT_LIMIT};

/// Entries of `P + P* − P*P` at or above `-POSITIVITY_TOL` count as nonnegative.
pub const POSITIVITY_TOL: f64 = 1e-12;

/// `C_R(1)` within this of 1 counts as reversible.
pub const REVERSIBLE_TOL: f64 = 1e-9;

/// `Q⁽ⁿ⁾(x, y) = π(x) pⁿ(x, y)`.
pub fn q_matrix(kernel: &TransitionKernel, pi: &StationaryWeights, n: usize) -> Result<Mat<f64>> {
    if kernel.dim() != pi.len() {
        return Err(GapError::DimensionMismatch {
            expected: kernel.dim(),
            found: pi.len(),
        });
    }
    let pn = kernel.power(n);
    let m = pn.matrix();
    let w = pi.as_slice();
    Ok(Mat::from_fn(kernel.dim(), kernel.dim(), |x, y| w[x] * m[(x, y)]))
}

#[derive(Debug, Clone)]
pub struct RatioMatrix {
    pub order: usize,
    /// `r(x, y)` on the support of `Q̃⁽ⁿ⁾`, `NaN` elsewhere.
    pub values: Mat<f64>,
    /// `Q̃⁽ⁿ⁾(x, y) > 0`.
    pub support: Vec<Vec<bool>>,
    /// The supports of `Q⁽ⁿ⁾` and `Q̃⁽ⁿ⁾` coincide.
    pub equivalent: bool,
}

impl RatioMatrix {
    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        self.support[x][y].then(|| self.values[(x, y)])
    }

    pub fn dim(&self) -> usize {
        self.support.len()
    }
}

pub fn ratio_matrix(kernel: &TransitionKernel, pi: &StationaryWeights, n: usize) -> Result<RatioMatrix> {
    let q = q_matrix(kernel, pi, n)?;
    let dim = kernel.dim();
    let mut support = vec![vec![false; dim]; dim];
    let mut equivalent = true;
    let values = Mat::from_fn(dim, dim, |x, y| {
        let fwd = q[(x, y)];
        let back = q[(y, x)];
        if back > 0.0 {
            support[x][y] = true;
            fwd / back
        } else {
            if fwd > 0.0 {
                equivalent = false;
            }
            f64::NAN
        }
    });
    Ok(RatioMatrix {
        order: n,
        values,
        support,
        equivalent,
    })
}

/// `C_R(n)`: the smallest `C` with `1/C ≤ r ≤ C` on the support, `+∞` when
/// the supports differ.
pub fn weak_rev_constant(kernel: &TransitionKernel, pi: &StationaryWeights, n: usize) -> Result<f64> {
    let r = ratio_matrix(kernel, pi, n)?;
    Ok(constant_of(&r))
}

fn constant_of(r: &RatioMatrix) -> f64 {
    if !r.equivalent {
        return f64::INFINITY;
    }
    let dim = r.dim();
    let mut c: f64 = 1.0;
    for x in 0..dim {
        for y in 0..dim {
            if let Some(v) = r.get(x, y) {
                c = c.max(v).max(1.0 / v);
            }
        }
    }
    c
}

/// `V(n, q) = max_y ‖r(·, y)‖_{Lᵠ(p(y, ·))}`.
///
/// The norm runs over `x` with `p(y, x) > 0`. Any mass of `Q⁽ⁿ⁾` outside the
/// support of `Q̃⁽ⁿ⁾` means the density does not exist and the result is
/// `+∞`.
pub fn very_weak_norm(kernel: &TransitionKernel, pi: &StationaryWeights, n: usize, q: f64) -> Result<f64> {
    if q.is_nan() || q <= 1.0 {
        return Err(GapError::InvalidExponent(q));
    }
    let r = ratio_matrix(kernel, pi, n)?;
    if !r.equivalent {
        return Ok(f64::INFINITY);
    }
    let dim = kernel.dim();
    let mut worst: f64 = 0.0;
    for y in 0..dim {
        if pi.get(y) <= 0.0 {
            continue;
        }
        let norm = if q.is_infinite() {
            let mut m: f64 = 0.0;
            for x in 0..dim {
                if kernel.entry(y, x) > 0.0 {
                    match r.get(x, y) {
                        Some(v) => m = m.max(v),
                        None => return Ok(f64::INFINITY),
                    }
                }
            }
            m
        } else {
            let mut acc = 0.0;
            for x in 0..dim {
                let p = kernel.entry(y, x);
                if p > 0.0 {
                    match r.get(x, y) {
                        Some(v) => acc += v.powf(q) * p,
                        None => return Ok(f64::INFINITY),
                    }
                }
            }
            acc.powf(1.0 / q)
        };
        worst = worst.max(norm);
    }
    Ok(worst)
}

/// Entrywise nonnegativity of `P + P* − P*P`.
pub fn posii_positive(kernel: &TransitionKernel, pi: &StationaryWeights) -> Result<bool> {
    let d = difference_reversibilization(kernel, pi)?;
    let m = d.matrix();
    let n = kernel.dim();
    Ok((0..n).all(|x| (0..n).all(|y| m[(x, y)] >= -POSITIVITY_TOL)))
}

/// `min_x p(x, x)`.
pub fn laziness(kernel: &TransitionKernel) -> f64 {
    (0..kernel.dim())
        .map(|x| kernel.entry(x, x))
        .fold(f64::INFINITY, f64::min)
}

fn step_ratio(one: f64, two: f64) -> f64 {
    if two > 0.0 {
        one / two
    } else if one > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// `C_∞ = max p(x, A) / p²(x, A)` over states `x` and proper sets `A` with
/// `π(A) ≥ 1/2`, using `0/0 = 0` and `c/0 = +∞`.
///
/// The exact strategy scans every admissible set. The search strategy takes,
/// for each `x`, prefixes of the states ordered by decreasing
/// `p(x, y) / p²(x, y)`, and so returns a lower bound.
pub fn c_infty(kernel: &TransitionKernel, pi: &StationaryWeights, strategy: &Strategy) -> Result<f64> {
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
    let p2 = kernel.power(2);
    match strategy {
        Strategy::Exact => {
            if n > EXACT_LIMIT {
                return Err(GapError::TooLargeForExact {
                    dim: n,
                    limit: EXACT_LIMIT,
                });
            }
            Ok(c_infty_exact(kernel, &p2, pi))
        }
        Strategy::LocalSearch(_) => Ok(c_infty_greedy(kernel, &p2, pi)),
    }
}

fn c_infty_exact(kernel: &TransitionKernel, p2: &TransitionKernel, pi: &StationaryWeights) -> f64 {
    let n = kernel.dim();
    let one = RowTable::new(n, n, |x, y| kernel.entry(x, y));
    let two = RowTable::new(n, n, |x, y| p2.entry(x, y));
    let mass = RowTable::new(1, n, |_, y| pi.get(y));
    let full: u32 = (1u32 << n) - 1;
    let half = 0.5 - 1e-12;
    (1..full)
        .into_par_iter()
        .filter(|&set| mass.sum(0, set) >= half)
        .map(|set| {
            (0..n)
                .map(|x| step_ratio(one.sum(x, set), two.sum(x, set)))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max)
}

fn c_infty_greedy(kernel: &TransitionKernel, p2: &TransitionKernel, pi: &StationaryWeights) -> f64 {
    let n = kernel.dim();
    let half = 0.5 - 1e-12;
    let mut best: f64 = 0.0;
    for x in 0..n {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            let ra = step_ratio(kernel.entry(x, a), p2.entry(x, a));
            let rb = step_ratio(kernel.entry(x, b), p2.entry(x, b));
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        let (mut one, mut two, mut mass) = (0.0, 0.0, 0.0);
        for &y in &order[..n - 1] {
            one += kernel.entry(x, y);
            two += p2.entry(x, y);
            mass += pi.get(y);
            if mass >= half {
                best = best.max(step_ratio(one, two));
            }
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReversibilityProfile {
    pub order: usize,
    pub c_r: f64,
    /// `(q, V(n, q))` for each tested exponent.
    pub v: Vec<(f64, f64)>,
    /// `C_R(1) = 1`.
    pub reversible: bool,
}

pub fn profile(
    kernel: &TransitionKernel,
    pi: &StationaryWeights,
    n: usize,
    exponents: &[f64],
) -> Result<ReversibilityProfile> {
    let c_r = weak_rev_constant(kernel, pi, n)?;
    let c_1 = if n == 1 { c_r } else { weak_rev_constant(kernel, pi, 1)? };
    let v = exponents
        .iter()
        .map(|&q| very_weak_norm(kernel, pi, n, q).map(|v| (q, v)))
        .collect::<Result<Vec<_>>>()?;
    Ok(ReversibilityProfile {
        order: n,
        c_r,
        v,
        reversible: c_1 <= 1.0 + REVERSIBLE_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::stationary;
    use crate::search::SearchConfig;
    use approx::assert_abs_diff_eq;

    fn chain(rows: Vec<Vec<f64>>) -> (TransitionKernel, StationaryWeights) {
        let p = TransitionKernel::unlabeled(rows).unwrap();
        let pi = stationary(&p).unwrap();
        (p, pi)
    }

    fn three_state() -> (TransitionKernel, StationaryWeights) {
        chain(vec![
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.5, 0.0, 0.5],
        ])
    }

    fn two_state(a: f64, b: f64) -> (TransitionKernel, StationaryWeights) {
        chain(vec![vec![1.0 - a, a], vec![b, 1.0 - b]])
    }

    fn symmetric_weights() -> (TransitionKernel, StationaryWeights) {
        let w = [[1.0, 2.0, 0.5], [2.0, 0.3, 1.0], [0.5, 1.0, 4.0]];
        let rows = w
            .iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.iter().map(|v| v / s).collect()
            })
            .collect();
        chain(rows)
    }

    #[test]
    fn reversible_ratio_is_one() {
        let (p, pi) = symmetric_weights();
        let r = ratio_matrix(&p, &pi, 1).unwrap();
        assert!(r.equivalent);
        for x in 0..3 {
            for y in 0..3 {
                assert_abs_diff_eq!(r.get(x, y).unwrap(), 1.0, epsilon = 1e-12);
            }
        }
        for n in 1..=4 {
            assert_abs_diff_eq!(weak_rev_constant(&p, &pi, n).unwrap(), 1.0, epsilon = 1e-9);
        }
        for q in [1.5, 2.0, f64::INFINITY] {
            assert_abs_diff_eq!(very_weak_norm(&p, &pi, 1, q).unwrap(), 1.0, epsilon = 1e-9);
        }
        let (p, pi) = two_state(0.3, 0.2);
        assert_abs_diff_eq!(weak_rev_constant(&p, &pi, 2).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn three_state_not_weak_reversible_at_first_order() {
        let (p, pi) = three_state();
        let r = ratio_matrix(&p, &pi, 1).unwrap();
        assert!(!r.equivalent);
        // Q(0,1) = 1/4 but Q̃(0,1) = π(1)p(1,0) = 0
        assert_eq!(r.get(0, 1), None);
        assert_eq!(weak_rev_constant(&p, &pi, 1).unwrap(), f64::INFINITY);
        assert_eq!(very_weak_norm(&p, &pi, 1, 2.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn three_state_higher_orders() {
        let (p, pi) = three_state();
        let q3 = q_matrix(&p, &pi, 3).unwrap();
        let p3 = p.power(3);
        let r = ratio_matrix(&p, &pi, 3).unwrap();
        let symmetric_support =
            (0..3).all(|x| (0..3).all(|y| (p3.entry(x, y) > 0.0) == (p3.entry(y, x) > 0.0)));
        assert_eq!(r.equivalent, symmetric_support);
        assert_abs_diff_eq!(q3[(0, 0)], 0.25 * p3.entry(0, 0), epsilon = 1e-15);
        // every entry of P⁴ is positive
        let c4 = weak_rev_constant(&p, &pi, 4).unwrap();
        assert!(c4.is_finite() && c4 >= 1.0);
    }

    #[test]
    fn ratio_reciprocity() {
        let (p, pi) = chain(vec![
            vec![0.1, 0.6, 0.3],
            vec![0.2, 0.2, 0.6],
            vec![0.5, 0.4, 0.1],
        ]);
        let r = ratio_matrix(&p, &pi, 1).unwrap();
        assert!(r.equivalent);
        for x in 0..3 {
            for y in 0..3 {
                assert_abs_diff_eq!(r.get(x, y).unwrap() * r.get(y, x).unwrap(), 1.0, epsilon = 1e-9);
            }
        }
        let c = weak_rev_constant(&p, &pi, 1).unwrap();
        assert!(c > 1.0);
        assert_abs_diff_eq!(very_weak_norm(&p, &pi, 1, f64::INFINITY).unwrap(), c, epsilon = 1e-9);
        assert!(very_weak_norm(&p, &pi, 1, 2.0).unwrap() <= c + 1e-9);
    }

    #[test]
    fn exponent_validation() {
        let (p, pi) = two_state(0.3, 0.2);
        assert_eq!(very_weak_norm(&p, &pi, 1, 1.0), Err(GapError::InvalidExponent(1.0)));
        assert!(very_weak_norm(&p, &pi, 1, 0.5).is_err());
    }

    #[test]
    fn positivity_examples() {
        let (p, pi) = two_state(0.5, 0.5);
        assert!(posii_positive(&p, &pi).unwrap());
        let (p, pi) = two_state(1.0, 1.0);
        assert!(!posii_positive(&p, &pi).unwrap());
    }

    #[test]
    fn positivity_matches_two_step_condition_when_reversible() {
        let (p, pi) = symmetric_weights();
        let p2 = p.power(2);
        let direct = (0..3).all(|x| (0..3).all(|y| 2.0 * p.entry(x, y) - p2.entry(x, y) >= -1e-12));
        assert_eq!(posii_positive(&p, &pi).unwrap(), direct);
    }

    #[test]
    fn laziness_and_c_infty() {
        let id = TransitionKernel::identity(3).unwrap();
        let pi = StationaryWeights::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(laziness(&id), 1.0);
        assert_eq!(c_infty(&id, &pi, &Strategy::Exact).unwrap(), 1.0);

        let (flip, pi) = two_state(1.0, 1.0);
        assert_eq!(c_infty(&flip, &pi, &Strategy::Exact).unwrap(), f64::INFINITY);

        let (p, pi) = two_state(0.5, 0.5);
        assert_abs_diff_eq!(c_infty(&p, &pi, &Strategy::Exact).unwrap(), 1.0, epsilon = 1e-12);

        let (p, _) = three_state();
        let lazy = p.lazy(0.5).unwrap();
        assert!(laziness(&lazy) >= 0.5);
    }

    #[test]
    fn greedy_c_infty_is_a_lower_bound() {
        let (p, pi) = chain(vec![
            vec![0.1, 0.6, 0.3, 0.0],
            vec![0.2, 0.2, 0.1, 0.5],
            vec![0.5, 0.4, 0.1, 0.0],
            vec![0.0, 0.3, 0.3, 0.4],
        ]);
        let exact = c_infty(&p, &pi, &Strategy::Exact).unwrap();
        let greedy = c_infty(&p, &pi, &Strategy::LocalSearch(SearchConfig::default())).unwrap();
        assert!(greedy <= exact);
        assert!(greedy > 0.0);
    }

    #[test]
    fn profile_flags_reversibility() {
        let (p, pi) = symmetric_weights();
        let prof = profile(&p, &pi, 2, &[2.0, f64::INFINITY]).unwrap();
        assert!(prof.reversible);
        assert_eq!(prof.v.len(), 2);
        let (p, pi) = three_state();
        let prof = profile(&p, &pi, 1, &[2.0]).unwrap();
        assert!(!prof.reversible);
        assert_eq!(prof.c_r, f64::INFINITY);
    }
}
