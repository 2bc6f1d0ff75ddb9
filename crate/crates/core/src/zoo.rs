//! Named chains and seeded random families.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::chain::{KernelMatrix, TransitionKernel};
use crate::error::{GapError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ZooSpec {
    PaperExample,
    Haggstrom { levels: usize },
    TwoState { a: f64, b: f64 },
    Cycle { m: usize },
    RandomStochastic { dim: usize, seed: u64, sparsity: f64 },
    RandomReversible { dim: usize, seed: u64 },
}

impl ZooSpec {
    pub fn build(&self) -> Result<TransitionKernel> {
        match *self {
            ZooSpec::PaperExample => Ok(paper_example()),
            ZooSpec::Haggstrom { levels } => haggstrom(levels),
            ZooSpec::TwoState { a, b } => two_state(a, b),
            ZooSpec::Cycle { m } => cycle(m),
            ZooSpec::RandomStochastic {
                dim,
                seed,
                sparsity,
            } => random_stochastic(dim, seed, sparsity),
            ZooSpec::RandomReversible { dim, seed } => random_reversible(dim, seed),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ZooSpec::PaperExample => "paper-example",
            ZooSpec::Haggstrom { .. } => "haggstrom",
            ZooSpec::TwoState { .. } => "two-state",
            ZooSpec::Cycle { .. } => "cycle",
            ZooSpec::RandomStochastic { .. } => "random-stochastic",
            ZooSpec::RandomReversible { .. } => "random-reversible",
        }
    }
}

/// Three states where `P*P` has a fixed point yet the chain has a gap.
pub fn paper_example() -> TransitionKernel {
    TransitionKernel::new(
        vec!["1", "2", "3"],
        vec![
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![0.5, 0.0, 0.5],
        ],
    )
    .expect("valid kernel")
}

/// Index of corridor state `(a, b)` in [`haggstrom`]; state 0 is the hub.
pub fn haggstrom_index(a: usize, b: usize) -> usize {
    1 + a * (a - 1) / 2 + (b - 1)
}

/// Hub `0` plus corridors `(a, a) → (a, a−1) → … → (a, 1) → 0` for
/// `a = 1..=levels`. The hub enters corridor `a` with probability
/// `2^{-(a+1)}`; the mass of the missing corridors stays at the hub.
pub fn haggstrom(levels: usize) -> Result<TransitionKernel> {
    if levels == 0 {
        return Err(GapError::InvalidParameter("haggstrom needs at least one level".into()));
    }
    let n = 1 + levels * (levels + 1) / 2;
    let mut labels = vec!["0".to_string()];
    let mut rows = vec![vec![0.0; n]; n];
    rows[0][0] = 0.5 + 0.5f64.powi(levels as i32 + 1);
    for a in 1..=levels {
        rows[0][haggstrom_index(a, a)] = 0.5f64.powi(a as i32 + 1);
        for b in 1..=a {
            labels.push(format!("({a},{b})"));
            let target = if b == 1 { 0 } else { haggstrom_index(a, b - 1) };
            rows[haggstrom_index(a, b)][target] = 1.0;
        }
    }
    TransitionKernel::new(labels, rows)
}

/// Rows `(1−a, a; b, 1−b)`.
pub fn two_state(a: f64, b: f64) -> Result<TransitionKernel> {
    for (name, v) in [("a", a), ("b", b)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(GapError::InvalidParameter(format!("{name} = {v} outside [0, 1]")));
        }
    }
    TransitionKernel::unlabeled(vec![vec![1.0 - a, a], vec![b, 1.0 - b]])
}

/// Deterministic rotation `i → i + 1 mod m`.
pub fn cycle(m: usize) -> Result<TransitionKernel> {
    if m < 2 {
        return Err(GapError::InvalidParameter(format!("cycle length {m} below 2")));
    }
    TransitionKernel::unlabeled(
        (0..m)
            .map(|i| (0..m).map(|j| if j == (i + 1) % m { 1.0 } else { 0.0 }).collect())
            .collect(),
    )
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 {
        return Err(GapError::InvalidParameter(format!("dimension {dim} below 2")));
    }
    Ok(())
}

/// Rows drawn from a flat Dirichlet on a random support: each entry is
/// dropped with probability `sparsity`, every row keeps at least one entry.
/// Draws repeat until the chain is irreducible.
pub fn random_stochastic(dim: usize, seed: u64, sparsity: f64) -> Result<TransitionKernel> {
    check_dim(dim)?;
    if !(0.0..1.0).contains(&sparsity) {
        return Err(GapError::InvalidParameter(format!("sparsity {sparsity} outside [0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let rows: Vec<Vec<f64>> = (0..dim)
            .map(|_| {
                let mut row: Vec<f64> = (0..dim)
                    .map(|_| {
                        let g: f64 = rng.sample(Exp1);
                        if rng.random::<f64>() < sparsity {
                            0.0
                        } else {
                            g
                        }
                    })
                    .collect();
                if row.iter().all(|&v| v == 0.0) {
                    let j = rng.random_range(0..dim);
                    row[j] = rng.sample::<f64, _>(Exp1).max(f64::MIN_POSITIVE);
                }
                let total: f64 = row.iter().sum();
                row.iter().map(|v| v / total).collect()
            })
            .collect();
        let kernel = TransitionKernel::unlabeled(rows)?;
        let classes = kernel.closed_classes();
        if classes.len() == 1 && classes[0].len() == dim {
            return Ok(kernel);
        }
    }
}

/// `p(x, y) = W(x, y) / Σ_z W(x, z)` for a symmetric `W` with entries
/// uniform on `(0, 1]`; reversible with `π(x) ∝ Σ_z W(x, z)`.
pub fn random_reversible(dim: usize, seed: u64) -> Result<TransitionKernel> {
    check_dim(dim)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = vec![vec![0.0; dim]; dim];
    for x in 0..dim {
        for y in x..dim {
            let v = 1.0 - rng.random::<f64>();
            w[x][y] = v;
            w[y][x] = v;
        }
    }
    let rows = w
        .iter()
        .map(|r| {
            let s: f64 = r.iter().sum();
            r.iter().map(|v| v / s).collect()
        })
        .collect();
    TransitionKernel::unlabeled(rows)
}

/// Scales every positive entry by a factor in `[1 − eps, 1 + eps]` and
/// renormalizes; zeros stay zero, positives stay positive.
pub fn perturb_support_preserving(kernel: &TransitionKernel, eps: f64, seed: u64) -> Result<TransitionKernel> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(GapError::InvalidParameter(format!("perturbation {eps} outside (0, 1)")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = kernel.dim();
    let rows = (0..n)
        .map(|x| {
            let row: Vec<f64> = (0..n)
                .map(|y| {
                    let v = kernel.entry(x, y);
                    let u: f64 = rng.random_range(-1.0..=1.0);
                    if v > 0.0 {
                        v * (1.0 + eps * u)
                    } else {
                        0.0
                    }
                })
                .collect();
            let total: f64 = row.iter().sum();
            row.into_iter().map(|v| v / total).collect()
        })
        .collect();
    TransitionKernel::new(kernel.labels().to_vec(), rows)
}

/// `εI + (1 − ε)P` for `ε ∈ (0, 1)`.
pub fn lazy(kernel: &TransitionKernel, eps: f64) -> Result<TransitionKernel> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(GapError::InvalidParameter(format!("laziness {eps} outside (0, 1)")));
    }
    kernel.lazy(eps)
}
