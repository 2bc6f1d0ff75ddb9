//! Randomized local search for extremal conductance on state spaces too large
//! to enumerate.
//!
//! Each move toggles one state in or out of the current set. With
//! `w(x, y) = π(x) K(x, y)`, the crossing flow `F(A) = Σ_{x∈A, y∉A} w(x, y)`
//! is updated in `O(1)` per candidate move from the running sums
//! `out(x) = Σ_{y∉A} w(x, y)` and `inw(y) = Σ_{x∈A} w(x, y)`, and in `O(n)`
//! per accepted move.
//!
//! Results are upper bounds for an infimum (lower bounds for a supremum) and
//! are always flagged inexact.

use fixedbitset::FixedBitSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chain::{KernelMatrix, StationaryWeights};
use crate::error::{GapError, Result};
use crate::isoperimetry::{conductance_set, ConductanceResult, Extremum, StateSet};

#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub seed: u64,
    pub restarts: usize,
    /// Annealing steps per restart; `10 · n` when unset.
    pub max_iters: Option<usize>,
    /// Geometric temperature decay per step.
    pub cooling: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            restarts: 32,
            max_iters: None,
            cooling: 0.95,
        }
    }
}

impl SearchConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

struct Walker<'a> {
    w: &'a [Vec<f64>],
    pi: &'a [f64],
    inside: Vec<bool>,
    size: usize,
    mass: f64,
    flow: f64,
    out: Vec<f64>,
    inw: Vec<f64>,
}

impl<'a> Walker<'a> {
    fn new(w: &'a [Vec<f64>], pi: &'a [f64], inside: Vec<bool>) -> Self {
        let n = pi.len();
        let out = (0..n)
            .map(|x| (0..n).filter(|&y| !inside[y]).map(|y| w[x][y]).sum())
            .collect();
        let inw = (0..n)
            .map(|y| (0..n).filter(|&x| inside[x]).map(|x| w[x][y]).sum())
            .collect();
        let flow = (0..n)
            .filter(|&x| inside[x])
            .map(|x| (0..n).filter(|&y| !inside[y]).map(|y| w[x][y]).sum::<f64>())
            .sum();
        let mass = (0..n).filter(|&x| inside[x]).map(|x| pi[x]).sum();
        let size = inside.iter().filter(|&&b| b).count();
        Self {
            w,
            pi,
            inside,
            size,
            mass,
            flow,
            out,
            inw,
        }
    }

    fn value_of(flow: f64, mass: f64) -> f64 {
        flow / (mass * (1.0 - mass))
    }

    fn value(&self) -> f64 {
        Self::value_of(self.flow, self.mass)
    }

    /// Conductance after toggling `j`, or `None` if the set would become
    /// empty or full.
    fn toggled(&self, j: usize) -> Option<f64> {
        let n = self.pi.len();
        let wjj = self.w[j][j];
        let (flow, mass) = if self.inside[j] {
            if self.size == 1 {
                return None;
            }
            (self.flow - self.out[j] + self.inw[j] - wjj, self.mass - self.pi[j])
        } else {
            if self.size + 1 == n {
                return None;
            }
            (self.flow - self.inw[j] + self.out[j] - wjj, self.mass + self.pi[j])
        };
        if mass <= 0.0 || mass >= 1.0 {
            return None;
        }
        Some(Self::value_of(flow.max(0.0), mass))
    }

    fn apply(&mut self, j: usize) {
        let n = self.pi.len();
        let wjj = self.w[j][j];
        if self.inside[j] {
            self.flow = self.flow - self.out[j] + self.inw[j] - wjj;
            self.mass -= self.pi[j];
            self.size -= 1;
            self.inside[j] = false;
            for x in 0..n {
                self.out[x] += self.w[x][j];
                self.inw[x] -= self.w[j][x];
            }
        } else {
            self.flow = self.flow - self.inw[j] + self.out[j] - wjj;
            self.mass += self.pi[j];
            self.size += 1;
            self.inside[j] = true;
            for x in 0..n {
                self.out[x] -= self.w[x][j];
                self.inw[x] += self.w[j][x];
            }
        }
        self.flow = self.flow.max(0.0);
    }
}

/// Lower score is better.
fn score(mode: Extremum, v: f64) -> f64 {
    match mode {
        Extremum::Inf => v,
        Extremum::Sup => -v,
    }
}

/// The member of `{A, Aᶜ}` that omits the last state.
fn canonical(set: &[bool]) -> Vec<bool> {
    if *set.last().unwrap() {
        set.iter().map(|b| !b).collect()
    } else {
        set.to_vec()
    }
}

/// Compares canonical sets as binary numbers with state `n − 1` most
/// significant, matching the mask order used by exact enumeration.
fn mask_less(a: &[bool], b: &[bool]) -> bool {
    for i in (0..a.len()).rev() {
        if a[i] != b[i] {
            return b[i];
        }
    }
    false
}

type Candidate = (f64, Vec<bool>);

fn pick(mode: Extremum, a: Candidate, b: Candidate) -> Candidate {
    let (sa, sb) = (score(mode, a.0), score(mode, b.0));
    if sb < sa || (sb == sa && mask_less(&b.1, &a.1)) {
        b
    } else {
        a
    }
}

fn descend(walker: &mut Walker<'_>, mode: Extremum) {
    let n = walker.pi.len();
    loop {
        let current = score(mode, walker.value());
        let mut best: Option<(f64, usize)> = None;
        for j in 0..n {
            if let Some(v) = walker.toggled(j) {
                let s = score(mode, v);
                if s < current - 1e-15 && best.is_none_or(|(b, _)| s < b) {
                    best = Some((s, j));
                }
            }
        }
        match best {
            Some((_, j)) => walker.apply(j),
            None => return,
        }
    }
}

fn restart(
    w: &[Vec<f64>],
    pi: &[f64],
    mode: Extremum,
    cfg: &SearchConfig,
    index: usize,
) -> Candidate {
    let n = pi.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(index as u64));
    let mut inside: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
    if inside.iter().all(|&b| b) || inside.iter().all(|&b| !b) {
        let j = rng.random_range(0..n);
        inside[j] = !inside[j];
    }
    let mut walker = Walker::new(w, pi, inside);
    descend(&mut walker, mode);
    let mut best = (walker.value(), walker.inside.clone());

    let iters = cfg.max_iters.unwrap_or(10 * n);
    let mut temp = 0.1 * walker.value().abs().max(1e-3);
    for _ in 0..iters {
        let j = rng.random_range(0..n);
        if let Some(v) = walker.toggled(j) {
            let delta = score(mode, v) - score(mode, walker.value());
            if delta <= 0.0 || rng.random::<f64>() < (-delta / temp).exp() {
                walker.apply(j);
                if score(mode, walker.value()) < score(mode, best.0) {
                    best = (walker.value(), walker.inside.clone());
                }
            }
        }
        temp *= cfg.cooling;
    }

    let mut polish = Walker::new(w, pi, best.1);
    descend(&mut polish, mode);
    (polish.value(), canonical(&polish.inside))
}

pub fn local_search_conductance(
    kernel: &impl KernelMatrix,
    pi: &StationaryWeights,
    mode: Extremum,
    cfg: &SearchConfig,
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
    if !(cfg.cooling > 0.0 && cfg.cooling <= 1.0) {
        return Err(GapError::InvalidParameter(format!(
            "cooling factor {} outside (0, 1]",
            cfg.cooling
        )));
    }
    let p = pi.as_slice();
    let m = kernel.matrix();
    let w: Vec<Vec<f64>> = (0..n)
        .map(|x| (0..n).map(|y| p[x] * m[(x, y)]).collect())
        .collect();

    // singletons are cheap and often extremal
    let mut best: Option<Candidate> = None;
    for i in 0..n {
        let mut inside = vec![false; n];
        inside[i] = true;
        let walker = Walker::new(&w, p, inside);
        let cand = (walker.value(), canonical(&walker.inside));
        best = Some(match best {
            None => cand,
            Some(b) => pick(mode, b, cand),
        });
    }
    let seeded = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| restart(&w, p, mode, cfg, r))
        .collect::<Vec<_>>();
    let mut best = best.expect("at least two states");
    for cand in seeded {
        best = pick(mode, best, cand);
    }

    let mut bits = FixedBitSet::with_capacity(n);
    for (i, &b) in best.1.iter().enumerate() {
        bits.set(i, b);
    }
    let witness = StateSet::from_bits(bits, pi);
    let value = conductance_set(kernel, pi, &witness)?;
    Ok(ConductanceResult {
        value,
        witness,
        exact: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{stationary, TransitionKernel};
    use crate::isoperimetry::{conductance_extremal, Strategy};
    use approx::assert_abs_diff_eq;

    fn chain(rows: Vec<Vec<f64>>) -> (TransitionKernel, StationaryWeights) {
        let p = TransitionKernel::unlabeled(rows).unwrap();
        let pi = stationary(&p).unwrap();
        (p, pi)
    }

    #[test]
    fn incremental_flow_matches_direct() {
        let (p, pi) = chain(vec![
            vec![0.1, 0.2, 0.3, 0.4],
            vec![0.25, 0.25, 0.25, 0.25],
            vec![0.0, 0.5, 0.2, 0.3],
            vec![0.6, 0.0, 0.1, 0.3],
        ]);
        let n = 4;
        let w: Vec<Vec<f64>> = (0..n)
            .map(|x| (0..n).map(|y| pi.get(x) * p.entry(x, y)).collect())
            .collect();
        let mut walker = Walker::new(&w, pi.as_slice(), vec![true, false, false, false]);
        for j in [2, 1, 0, 3, 2] {
            let predicted = walker.toggled(j).unwrap();
            walker.apply(j);
            let fresh = Walker::new(&w, pi.as_slice(), walker.inside.clone());
            assert_abs_diff_eq!(predicted, fresh.value(), epsilon = 1e-12);
            assert_abs_diff_eq!(walker.value(), fresh.value(), epsilon = 1e-12);
        }
    }

    #[test]
    fn agrees_with_exact_on_small_chains() {
        let (p, pi) = chain(vec![
            vec![0.5, 0.5, 0.0, 0.0, 0.0],
            vec![0.3, 0.2, 0.5, 0.0, 0.0],
            vec![0.0, 0.4, 0.1, 0.5, 0.0],
            vec![0.0, 0.0, 0.05, 0.45, 0.5],
            vec![0.0, 0.0, 0.0, 0.5, 0.5],
        ]);
        for mode in [Extremum::Inf, Extremum::Sup] {
            let exact = conductance_extremal(&p, &pi, mode, &Strategy::Exact).unwrap();
            let approx =
                local_search_conductance(&p, &pi, mode, &SearchConfig::with_seed(7)).unwrap();
            assert!(!approx.exact);
            assert_abs_diff_eq!(approx.value, exact.value, epsilon = 1e-12);
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let (p, pi) = chain(vec![
            vec![0.2, 0.3, 0.5],
            vec![0.6, 0.1, 0.3],
            vec![0.3, 0.3, 0.4],
        ]);
        let cfg = SearchConfig::with_seed(3);
        let a = local_search_conductance(&p, &pi, Extremum::Inf, &cfg).unwrap();
        let b = local_search_conductance(&p, &pi, Extremum::Inf, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_cooling() {
        let (p, pi) = chain(vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
        let cfg = SearchConfig {
            cooling: 0.0,
            ..SearchConfig::default()
        };
        assert!(local_search_conductance(&p, &pi, Extremum::Inf, &cfg).is_err());
    }
}
