//! Exact spectral quantities in `L²(π)`: the ground truth every bound is
//! checked against.
//!
//! `P` acts on `L²(π)` as `S = D^{1/2} P D^{-1/2}` acts on Euclidean space.
//! The constants span `√π`, which is a left and right eigenvector of `S`, so
//! `P` restricted to mean-zero functions is `S` compressed by the projector
//! `I − √π √πᵀ`.

use faer::{c64, Mat};

use crate::chain::{
    adjoint, compose, mat_power, symmetrize, KernelMatrix, StationaryWeights, TransitionKernel,
    EIG_TOL,
};
use crate::error::{GapError, Result};

/// Complex eigenvalue type.
pub type Complex = c64;

/// Default slack for the gap verdict.
pub const GAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    /// Eigenvalues of `P`, by decreasing modulus then decreasing real part.
    pub eigenvalues: Vec<Complex>,
    /// Eigenvalues of `P` on mean-zero functions, same order.
    pub restricted_eigenvalues: Vec<Complex>,
    /// `‖P‖` on mean-zero functions.
    pub restricted_norm: f64,
    /// Spectral radius on mean-zero functions.
    pub restricted_radius: f64,
    /// `P*P = PP*` entrywise within [`EIG_TOL`].
    pub normal: bool,
    /// `1 − restricted_radius`.
    pub gap: f64,
}

fn check(kernel: &TransitionKernel, pi: &StationaryWeights) -> Result<()> {
    if kernel.dim() != pi.len() {
        return Err(GapError::DimensionMismatch {
            expected: kernel.dim(),
            found: pi.len(),
        });
    }
    let classes = kernel.closed_classes().len();
    if classes != 1 {
        return Err(GapError::NotUniquelyErgodic {
            closed_classes: classes,
        });
    }
    pi.require_positive()
}

/// `(I − vvᵀ) M (I − vvᵀ)` with `v = √π`.
fn deflate(m: &Mat<f64>, pi: &StationaryWeights) -> Mat<f64> {
    let n = m.nrows();
    let v: Vec<f64> = pi.as_slice().iter().map(|w| w.sqrt()).collect();
    let proj = Mat::from_fn(n, n, |i, j| {
        let d = if i == j { 1.0 } else { 0.0 };
        d - v[i] * v[j]
    });
    &proj * m * &proj
}

fn eigenvalues(m: &Mat<f64>) -> Result<Vec<c64>> {
    let mut ev = m
        .eigenvalues()
        .map_err(|e| GapError::Linalg(format!("eigenvalue solver failed: {e:?}")))?;
    sort_spectrum(&mut ev);
    Ok(ev)
}

fn sort_spectrum(ev: &mut [c64]) {
    ev.sort_by(|a, b| {
        b.norm()
            .total_cmp(&a.norm())
            .then(b.re.total_cmp(&a.re))
            .then(b.im.total_cmp(&a.im))
    });
}

fn largest_singular_value(m: &Mat<f64>) -> Result<f64> {
    let sv = m
        .singular_values()
        .map_err(|e| GapError::Linalg(format!("singular value solver failed: {e:?}")))?;
    Ok(sv.into_iter().fold(0.0, f64::max))
}

pub fn spectrum(kernel: &TransitionKernel, pi: &StationaryWeights) -> Result<SpectrumReport> {
    check(kernel, pi)?;
    let eigenvalues = eigenvalues(kernel.matrix())?;

    let s = symmetrize(kernel, pi)?;
    let d = deflate(&s, pi);
    let mut restricted = eigenvalues_of_deflated(&d)?;
    sort_spectrum(&mut restricted);
    let restricted_radius = restricted.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let restricted_norm = largest_singular_value(&d)?;

    let star = adjoint(kernel, pi)?;
    let sp = compose(&star, kernel, pi)?;
    let ps = compose(kernel, &star, pi)?;
    let n = kernel.dim();
    let normal = (0..n).all(|x| (0..n).all(|y| (sp.entry(x, y) - ps.entry(x, y)).abs() <= EIG_TOL));

    Ok(SpectrumReport {
        eigenvalues,
        restricted_eigenvalues: restricted,
        restricted_norm,
        restricted_radius,
        normal,
        gap: 1.0 - restricted_radius,
    })
}

/// Drops the eigenvalue belonging to the deflated direction `√π`, which is
/// the one closest to 0.
fn eigenvalues_of_deflated(d: &Mat<f64>) -> Result<Vec<c64>> {
    let mut ev = eigenvalues(d)?;
    if let Some(pos) = ev
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.norm().total_cmp(&b.1.norm()).then(a.0.cmp(&b.0)))
        .map(|(i, _)| i)
    {
        ev.remove(pos);
    }
    Ok(ev)
}

/// `‖Pⁿ‖` on mean-zero functions.
pub fn restricted_norm_of_power(
    kernel: &TransitionKernel,
    pi: &StationaryWeights,
    n: usize,
) -> Result<f64> {
    check(kernel, pi)?;
    let s = symmetrize(kernel, pi)?;
    let d = deflate(&mat_power(&s, n), pi);
    largest_singular_value(&d)
}

/// `restricted_radius < 1 − tol`.
pub fn has_gap(kernel: &TransitionKernel, pi: &StationaryWeights, tol: f64) -> Result<bool> {
    if !(tol >= 0.0) {
        return Err(GapError::InvalidParameter(format!("tolerance {tol} must be nonnegative")));
    }
    Ok(spectrum(kernel, pi)?.restricted_radius < 1.0 - tol)
}
