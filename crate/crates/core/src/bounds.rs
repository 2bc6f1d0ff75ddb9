//! Conductance bounds on the spectrum and the gap certificate built from
//! them.
//!
//! Every function here evaluates one inequality between computed constants
//! and reports both sides, so that callers can check it against the exact
//! spectrum from [`spectral`](crate::spectral).

use crate::chain::{
    difference_reversibilization, KernelMatrix, StationaryWeights, TransitionKernel,
};
use crate::error::{GapError, Result};
use crate::isoperimetry::{
    big_k_n, conductance_extremal, k_adjoint_pair, k_n, k_reverse_pair, Extremum, StateSet,
    Strategy, CONDUCTANCE_POS_TOL, EXACT_LIMIT,
};
use crate::reversibility::{c_infty, posii_positive, very_weak_norm, weak_rev_constant, REVERSIBLE_TOL};
use crate::spectral::{restricted_norm_of_power, spectrum, GAP_TOL};

/// Slack allowed on every checked inequality.
pub const CHECK_TOL: f64 = 1e-9;

/// Largest state count for which the difference-kernel flow identity is
/// checked over every set.
pub const IDENTITY_LIMIT: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct BoundConfig {
    /// Constant of the strong Cheeger direction, `gap ≥ κ k² / 8`.
    pub kappa: f64,
    /// Largest order scanned by [`certify`].
    pub n_max: usize,
    /// Points per axis for [`two_step_lower_bound`].
    pub grid: usize,
    /// Conjugate pairs `(p, q)` for the Hölder comparison.
    pub exponents: Vec<(f64, f64)>,
    pub strategy: Strategy,
    /// Constants at or below this count as zero.
    pub tol: f64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            kappa: 1.0,
            n_max: 6,
            grid: 64,
            exponents: vec![(f64::INFINITY, 1.0), (2.0, 2.0)],
            strategy: Strategy::Exact,
            tol: CONDUCTANCE_POS_TOL,
        }
    }
}

impl BoundConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(GapError::InvalidParameter(format!("kappa {} must be positive", self.kappa)));
        }
        if self.n_max == 0 {
            return Err(GapError::InvalidParameter("n_max must be at least 1".into()));
        }
        if self.grid < 8 {
            return Err(GapError::InvalidParameter(format!("grid {} below 8", self.grid)));
        }
        if !(self.tol >= 0.0) {
            return Err(GapError::InvalidParameter(format!("tolerance {} must be nonnegative", self.tol)));
        }
        for &(p, q) in &self.exponents {
            check_conjugate(p, q)?;
        }
        Ok(())
    }
}

fn check_conjugate(p: f64, q: f64) -> Result<()> {
    if p.is_nan() || p <= 1.0 {
        return Err(GapError::InvalidExponent(p));
    }
    if q.is_nan() || q < 1.0 || q.is_infinite() {
        return Err(GapError::InvalidExponent(q));
    }
    if (1.0 / p + 1.0 / q - 1.0).abs() > 1e-12 {
        return Err(GapError::ConjugateExponentMismatch { p, q });
    }
    Ok(())
}

/// `(sqrt(1 − κk²/8))^{1/n}`: a bound on the spectral radius on mean-zero
/// functions from `k = k_{P*ⁿPⁿ} > 0`.
pub fn adjoint_pair_radius(k: f64, kappa: f64, n: usize) -> f64 {
    (1.0 - kappa * k * k / 8.0).max(0.0).sqrt().powf(1.0 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    HasGap,
    NoGapWitness,
    Undecided,
}

/// Which argument decided a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TheoremTag {
    /// Scan of `k_{P*ⁿPⁿ}` for a positive value.
    AdjointPairConductance,
    /// Finite `V(n, q)`: gap iff `k_{2n} > 0`.
    VeryWeakReversible,
    /// Finite `C_R(n)`: gap iff `k_{2n} > 0`.
    WeakReversible,
}

impl TheoremTag {
    pub fn as_str(self) -> &'static str {
        match self {
            TheoremTag::AdjointPairConductance => "adjoint_pair_conductance",
            TheoremTag::VeryWeakReversible => "very_weak_reversible",
            TheoremTag::WeakReversible => "weak_reversible",
        }
    }
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::HasGap => "has_gap",
            Verdict::NoGapWitness => "no_gap_witness",
            Verdict::Undecided => "undecided",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CertificateDetails {
    pub c_r: Option<f64>,
    /// `(p, V)` when the very-weak route decided.
    pub v: Option<(f64, f64)>,
    pub k_2n: Option<f64>,
    pub k_pair: Option<f64>,
    pub k_reverse_pair: Option<f64>,
    pub k_n: Option<f64>,
    pub big_k_n: Option<f64>,
    /// `0 < k_n ≤ K_n < 2`.
    pub aperiodic: Option<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapCertificate {
    pub verdict: Verdict,
    pub theorem: Option<TheoremTag>,
    pub n0: Option<usize>,
    pub radius_bound: Option<f64>,
    pub details: CertificateDetails,
    /// Ground truth from the spectrum, when computed.
    pub exact_has_gap: Option<bool>,
    pub exact_radius: Option<f64>,
    /// All conductances were exact extrema.
    pub exact: bool,
}

impl GapCertificate {
    fn undecided(exact: bool) -> Self {
        Self {
            verdict: Verdict::Undecided,
            theorem: None,
            n0: None,
            radius_bound: None,
            details: CertificateDetails::default(),
            exact_has_gap: None,
            exact_radius: None,
            exact,
        }
    }
}

/// First `n₀ ≤ n_max` with `k_{P*ⁿ⁰Pⁿ⁰} > tol`, with the radius bound it
/// implies; `Undecided` if every scanned constant vanishes.
pub fn adjoint_pair_certificate(
    kernel: &TransitionKernel,
    pi: &StationaryWeights,
    cfg: &BoundConfig,
) -> Result<GapCertificate> {
    cfg.validate()?;
    let mut cert = GapCertificate::undecided(cfg.strategy.is_exact());
    for n in 1..=cfg.n_max {
        let k = k_adjoint_pair(kernel, pi, n, &cfg.strategy)?.value;
        cert.details.k_pair = Some(k);
        if k > cfg.tol {
            cert.verdict = Verdict::HasGap;
            cert.theorem = Some(TheoremTag::AdjointPairConductance);
            cert.n0 = Some(n);
            cert.radius_bound = Some(adjoint_pair_radius(k, cfg.kappa, n));
            break;
        }
    }
    Ok(cert)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichReport {
    pub n: usize,
    pub k_pair: f64,
    /// `‖Pⁿ‖` on mean-zero functions.
    pub norm: f64,
    /// `sqrt(1 − k)`.
    pub lower: f64,
    /// `sqrt(1 − κk²/8)`.
    pub upper: f64,
    pub lower_holds: bool,
    pub upper_holds: bool,
}

/// `sqrt(1 − κk²/8) ≥ ‖Pⁿ‖ ≥ sqrt(1 − k)` with `k = k_{P*ⁿPⁿ}`.
pub fn norm_sandwich(
    kernel: &TransitionKernel,
    pi: &StationaryWeights,
    n: usize,
    kappa: f64,
    strategy: &Strategy,
) -> Result<SandwichReport> {
    let k = k_adjoint_pair(kernel, pi, n, strategy)?.value;
    let norm = restricted_norm_of_power(kernel, pi, n)?;
    let lower = (1.0 - k).max(0.0).sqrt();
    let upper = (1.0 - kappa * k * k / 8.0).max(0.0).sqrt();
    Ok(SandwichReport {
        n,
        k_pair: k,
        norm,
        lower,
        upper,
        lower_holds: norm >= lower - CHECK_TOL,
        upper_holds: norm <= upper + CHECK_TOL,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct HolderReport {
    pub n0: usize,
    pub p: f64,
    pub q: f64,
    /// `V` of `Pⁿ⁰` with exponent `p`.
    pub v: f64,
    pub k_pair: f64,
    pub k_2n: f64,
    pub k_reverse_pair: f64,
    /// `2^{1/p} V k_{2n}^{1/q}`.
    pub first_rhs: f64,
    /// `2^{1/p} V k_{Pⁿ P*ⁿ}^{1/q}`.
    pub second_rhs: f64,
    pub first_holds: bool,
    pub second_holds: bool,
    /// `V = ∞`, so both sides are trivially ordered.
    pub vacuous: bool,
}

/// `k_{P*ⁿPⁿ} ≤ 2^{1/p} V k_{2n}^{1/q}` and `k_{2n} ≤ 2^{1/p} V k_{PⁿP*ⁿ}^{1/q}`,
/// where `V` measures `Pⁿ` against its reversal in `Lᵖ(pⁿ(y, ·))`.
pub fn holder_comparison(
    kernel: &TransitionKernel,
    pi: &StationaryWeights,
    n0: usize,
    p: f64,
    q: f64,
    strategy: &Strategy,
) -> Result<HolderReport> {
    check_conjugate(p, q)?;
    if n0 == 0 {
        return Err(GapError::InvalidParameter("order must be at least 1".into()));
    }
    let v = very_weak_norm(&kernel.power(n0), pi, 1, p)?;
    let k_pair = k_adjoint_pair(kernel, pi, n0, strategy)?.value;
    let k_2n = k_n(kernel, pi, 2 * n0, strategy)?.value;
    let k_reverse = k_reverse_pair(kernel, pi, n0, strategy)?.value;
    let factor = if p.is_infinite() { 1.0 } else { 2f64.powf(1.0 / p) } * v;
    let rhs = |k: f64| {
        if v.is_infinite() {
            f64::INFINITY
        } else {
            factor * k.max(0.0).powf(1.0 / q)
        }
    };
    let (first_rhs, second_rhs) = (rhs(k_2n), rhs(k_reverse));
    Ok(HolderReport {
        n0,
        p,
        q,
        v,
        k_pair,
        k_2n,
        k_reverse_pair: k_reverse,
        first_rhs,
        second_rhs,
        first_holds: k_pair <= first_rhs + CHECK_TOL,
        second_holds: k_2n <= second_rhs + CHECK_TOL,
        vacuous: v.is_infinite(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub n0: usize,
    /// `C_R(n₀)`.
    pub c: f64,
    pub k_pair: f64,
    pub k_2n: f64,
    pub k_reverse_pair: f64,
    pub first_holds: bool,
    pub second_holds: bool,
    /// `C k_{2n} − k_{P*ⁿPⁿ}`.
    pub first_margin: f64,
    /// `C k_{PⁿP*ⁿ} − k_{2n}`.
    pub second_margin: f64,
}

/// `k_{P*ⁿPⁿ} ≤ C k_{2n}` and `k_{2n} ≤ C k_{PⁿP*ⁿ}` with `C = C_R(n)`.
pub fn reversibility_comparison(
    kernel: &TransitionKernel,
    pi: &StationaryWeights,
    n0: usize,
    strategy: &Strategy,
) -> Result<ComparisonReport> {
    if n0 == 0 {
        return Err(GapError::InvalidParameter("order must be at least 1".into()));
    }
    let c = weak_rev_constant(kernel, pi, n0)?;
    if c.is_infinite() {
        return Err(GapError::NotWeakReversible { order: n0 });
    }
    let k_pair = k_adjoint_pair(kernel, pi, n0, strategy)?.value;
    let k_2n = k_n(kernel, pi, 2 * n0, strategy)?.value;
    let k_reverse = k_reverse_pair(kernel, pi, n0, strategy)?.value;
    let first_margin = c * k_2n - k_pair;
    let second_margin = c * k_reverse - k_2n;
    Ok(ComparisonReport {
        n0,
        c,
        k_pair,
        k_2n,
        k_reverse_pair: k_reverse,
        first_holds: first_margin >= -CHECK_TOL,
        second_holds: second_margin >= -CHECK_TOL,
        first_margin,
        second_margin,
    })
}

/// Lower bound on `k_{2n}` from `k = k_n`, `K = K_n` and `C = C_R(n)`:
/// the best grid value over `δ, ε₁, ε₂, ε ∈ (0, 1)` of
///
/// ```text
/// min[ k²δ/16,
///      (k/4)(ε₁ε₂(1 − δ) − Cδ),
///      (k((2 − ε)(1 − ε₁)(1 − ε₂)(1 − δ) / ((1 − ε)K) − 1/(1 − ε)) − ε/(1 − ε)) ε ].
/// ```
///
/// Grid points are `i / (grid + 1)` for `i = 1..=grid`. The result is clamped
/// to `[0, 2]`.
pub fn two_step_lower_bound(k: f64, big_k: f64, c_r: f64, grid: usize) -> Result<f64> {
    if !(0.0..=2.0 + CHECK_TOL).contains(&k) {
        return Err(GapError::InvalidInputs(format!("k_n = {k} outside [0, 2]")));
    }
    if !(0.0..=2.0 + CHECK_TOL).contains(&big_k) {
        return Err(GapError::InvalidInputs(format!("K_n = {big_k} outside [0, 2]")));
    }
    if !(c_r >= 1.0 && c_r.is_finite()) {
        return Err(GapError::InvalidInputs(format!("C_R = {c_r} outside [1, ∞)")));
    }
    if grid < 8 {
        return Err(GapError::InvalidInputs(format!("grid {grid} below 8")));
    }
    if k == 0.0 {
        return Ok(0.0);
    }
    let big_k = big_k.max(k);
    let pts: Vec<f64> = (1..=grid).map(|i| i as f64 / (grid + 1) as f64).collect();
    let mut best: f64 = 0.0;
    for &delta in &pts {
        let t1 = k * k * delta / 16.0;
        if t1 <= best {
            continue;
        }
        for (i, &e1) in pts.iter().enumerate() {
            // symmetric in ε₁ and ε₂
            for &e2 in &pts[i..] {
                let t2 = k / 4.0 * (e1 * e2 * (1.0 - delta) - c_r * delta);
                let cap = t1.min(t2);
                if cap <= best {
                    continue;
                }
                let shared = (1.0 - e1) * (1.0 - e2) * (1.0 - delta) / big_k;
                for &eps in &pts {
                    let t3 = (k * ((2.0 - eps) * shared / (1.0 - eps) - 1.0 / (1.0 - eps))
                        - eps / (1.0 - eps))
                        * eps;
                    let v = cap.min(t3);
                    if v > best {
                        best = v;
                    }
                }
            }
        }
    }
    Ok(best.clamp(0.0, 2.0))
}

/// `f_A(x) = p(x, Aᶜ) / p²(x, Aᶜ)` with `0/0 = 0` and `c/0 = +∞`.
pub fn flow_ratio_vector(kernel: &TransitionKernel, set: &StateSet) -> Vec<f64> {
    let n = kernel.dim();
    let p2 = kernel.power(2);
    (0..n)
        .map(|x| {
            let (one, two) = (0..n)
                .filter(|&y| !set.contains(y))
                .fold((0.0, 0.0), |(a, b), y| (a + kernel.entry(x, y), b + p2.entry(x, y)));
            if two > 0.0 {
                one / two
            } else if one > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowRatioReport {
    pub p: f64,
    pub q: f64,
    pub k1: f64,
    pub k2: f64,
    /// Minimizer of `k₂` with `π(A) ≤ 1/2`.
    pub witness: StateSet,
    /// `‖1_A f_A‖` in `Lᵖ(π_A)`, `π_A = π(· ∩ A) / π(A)`.
    pub norm: f64,
    /// `(1/2)^{q/p} k₁^q / norm^q`; zero when the norm is infinite.
    pub bound: f64,
    pub holds: bool,
}

/// Lower bound on `k₂` through the ratio of one-step to two-step escape
/// probabilities on the set that attains `k₂`.
pub fn flow_ratio_bound(
    kernel: &TransitionKernel,
    pi: &StationaryWeights,
    p: f64,
    strategy: &Strategy,
) -> Result<FlowRatioReport> {
    let q = if p.is_infinite() { 1.0 } else { p / (p - 1.0) };
    check_conjugate(p, q)?;
    if !strategy.is_exact() || kernel.dim() > EXACT_LIMIT {
        return Err(GapError::TooLargeForExact {
            dim: kernel.dim(),
            limit: EXACT_LIMIT,
        });
    }
    let k1 = k_n(kernel, pi, 1, strategy)?.value;
    let two = k_n(kernel, pi, 2, strategy)?;
    let witness = if two.witness.mass() > 0.5 {
        two.witness.complement(pi)
    } else {
        two.witness
    };
    let f = flow_ratio_vector(kernel, &witness);
    let members = witness.indices();
    let norm = if p.is_infinite() {
        members.iter().map(|&x| f[x]).fold(0.0, f64::max)
    } else {
        let mass = witness.mass();
        members
            .iter()
            .map(|&x| pi.get(x) / mass * f[x].powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    };
    let bound = if k1 == 0.0 || norm.is_infinite() {
        0.0
    } else {
        let scale = if p.is_infinite() { 1.0 } else { 0.5f64.powf(q / p) };
        scale * k1.powf(q) / norm.powf(q)
    };
    Ok(FlowRatioReport {
        p,
        q,
        k1,
        k2: two.value,
        witness,
        norm,
        bound,
        holds: bound <= two.value + CHECK_TOL,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceReport {
    pub k1: f64,
    /// `k` of `P + P* − P*P`.
    pub k_difference: f64,
    /// `k_{P+P*−P*P} ≥ k₁²`.
    pub holds: bool,
    /// Worst deviation, over all proper `A`, of
    /// `π(A)π(Aᶜ) k_{P+P*−P*P}(A) = Σ_{A} π p(·, Aᶜ)² + Σ_{Aᶜ} π p(·, A)²`;
    /// `None` above [`IDENTITY_LIMIT`] states.
    pub identity_error: Option<f64>,
}

/// Conductance of the difference kernel `P + P* − P*P` against `k₁²`.
pub fn difference_conductance(
    kernel: &TransitionKernel,
    pi: &StationaryWeights,
    strategy: &Strategy,
) -> Result<DifferenceReport> {
    let k1 = k_n(kernel, pi, 1, strategy)?.value;
    let d = difference_reversibilization(kernel, pi)?;
    let k_difference = conductance_extremal(&d, pi, Extremum::Inf, strategy)?.value;
    let identity_error = (kernel.dim() <= IDENTITY_LIMIT).then(|| identity_error(kernel, pi, &d));
    Ok(DifferenceReport {
        k1,
        k_difference,
        holds: k_difference >= k1 * k1 - CHECK_TOL,
        identity_error,
    })
}

fn identity_error(kernel: &TransitionKernel, pi: &StationaryWeights, d: &impl KernelMatrix) -> f64 {
    let n = kernel.dim();
    let mut worst: f64 = 0.0;
    for mask in 1u32..(1u32 << n) - 1 {
        let inside = |i: usize| mask >> i & 1 == 1;
        let mut lhs = 0.0;
        let mut rhs = 0.0;
        for x in 0..n {
            let across: f64 = (0..n).filter(|&y| inside(y) != inside(x)).map(|y| kernel.entry(x, y)).sum();
            rhs += pi.get(x) * across * across;
            if inside(x) {
                lhs += pi.get(x) * (0..n).filter(|&y| !inside(y)).map(|y| d.entry(x, y)).sum::<f64>();
            }
        }
        worst = worst.max((lhs - rhs).abs());
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct UnitExclusionReport {
    pub k1: f64,
    /// `sqrt(κ/8) k₁²`.
    pub rho: f64,
    /// `min |λ − 1|` over eigenvalues on mean-zero functions.
    pub min_distance: f64,
    pub exclusion_holds: bool,
    pub reversible: bool,
    /// Reversible only: `σ ⊂ [0, 1 − ρ]`.
    pub nonnegative_interval_holds: Option<bool>,
    /// Reversible only: `σ ⊂ [1 − √2, 1]`.
    pub positivity_interval_holds: Option<bool>,
    pub difference: DifferenceReport,
}

/// Under entrywise positivity of `P + P* − P*P`, no eigenvalue on mean-zero
/// functions lies within `sqrt(κ/8) k₁²` of 1.
pub fn unit_exclusion(
    kernel: &TransitionKernel,
    pi: &StationaryWeights,
    cfg: &BoundConfig,
) -> Result<UnitExclusionReport> {
    if !posii_positive(kernel, pi)? {
        return Err(GapError::HypothesisFailed(
            "P + P* - P*P has negative entries".into(),
        ));
    }
    let difference = difference_conductance(kernel, pi, &cfg.strategy)?;
    let k1 = difference.k1;
    let rho = (cfg.kappa / 8.0).sqrt() * k1 * k1;
    let spec = spectrum(kernel, pi)?;
    let min_distance = spec
        .restricted_eigenvalues
        .iter()
        .map(|z| ((z.re - 1.0).powi(2) + z.im.powi(2)).sqrt())
        .fold(f64::INFINITY, f64::min);
    let reversible = weak_rev_constant(kernel, pi, 1)? <= 1.0 + REVERSIBLE_TOL;
    let within = |lo: f64, hi: f64| {
        spec.restricted_eigenvalues
            .iter()
            .all(|z| z.im.abs() <= CHECK_TOL && z.re >= lo - CHECK_TOL && z.re <= hi + CHECK_TOL)
    };
    Ok(UnitExclusionReport {
        k1,
        rho,
        min_distance,
        exclusion_holds: min_distance >= rho - CHECK_TOL,
        reversible,
        nonnegative_interval_holds: reversible.then(|| within(0.0, 1.0 - rho)),
        positivity_interval_holds: reversible.then(|| within(1.0 - 2f64.sqrt(), 1.0)),
        difference,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioRadiusReport {
    pub k1: f64,
    pub c_r: f64,
    pub c_infty: f64,
    /// `sqrt(1 − κk₁² / (8 C_R² C_∞²))`.
    pub radius: f64,
}

/// Spectral radius bound from `k₁`, `C_R(1)` and the escape ratio constant
/// `C_∞`.
pub fn ratio_radius(
    kernel: &TransitionKernel,
    pi: &StationaryWeights,
    cfg: &BoundConfig,
) -> Result<RatioRadiusReport> {
    let k1 = k_n(kernel, pi, 1, &cfg.strategy)?.value;
    if k1 <= cfg.tol {
        return Err(GapError::HypothesisFailed(format!("k_1 = {k1} is not positive")));
    }
    let c_r = weak_rev_constant(kernel, pi, 1)?;
    if c_r.is_infinite() {
        return Err(GapError::HypothesisFailed("chain is not weak reversible of order 1".into()));
    }
    let c_inf = c_infty(kernel, pi, &cfg.strategy)?;
    if !(c_inf > 0.0 && c_inf.is_finite()) {
        return Err(GapError::HypothesisFailed(format!("C_inf = {c_inf} is not finite and positive")));
    }
    let radius = (1.0 - cfg.kappa * k1 * k1 / (8.0 * c_r * c_r * c_inf * c_inf))
        .max(0.0)
        .sqrt();
    Ok(RatioRadiusReport {
        k1,
        c_r,
        c_infty: c_inf,
        radius,
    })
}

/// Decides the gap question.
///
/// 1. The smallest `n ≤ n_max` with `C_R(n) < ∞`: the chain has a gap iff
///    `k_{2n} > tol`.
/// 2. Otherwise the same test for the smallest `n` with `V(n, p) < ∞` for a
///    configured exponent.
/// 3. Otherwise the scan of `k_{P*ⁿPⁿ}`.
///
/// The exact spectral verdict is recorded alongside.
pub fn certify(kernel: &TransitionKernel, pi: &StationaryWeights, cfg: &BoundConfig) -> Result<GapCertificate> {
    cfg.validate()?;
    let strategy = &cfg.strategy;

    let mut decided = None;
    for n in 1..=cfg.n_max {
        let c = weak_rev_constant(kernel, pi, n)?;
        if c.is_finite() {
            let details = CertificateDetails {
                c_r: Some(c),
                ..CertificateDetails::default()
            };
            decided = Some((n, TheoremTag::WeakReversible, details));
            break;
        }
    }
    if decided.is_none() {
        'outer: for n in 1..=cfg.n_max {
            for &(p, _) in &cfg.exponents {
                let v = very_weak_norm(kernel, pi, n, p)?;
                if v.is_finite() {
                    let details = CertificateDetails {
                        v: Some((p, v)),
                        ..CertificateDetails::default()
                    };
                    decided = Some((n, TheoremTag::VeryWeakReversible, details));
                    break 'outer;
                }
            }
        }
    }

    let mut cert = match decided {
        Some((n, tag, mut details)) => {
            let k_2n = k_n(kernel, pi, 2 * n, strategy)?.value;
            let kn = k_n(kernel, pi, n, strategy)?.value;
            let big = big_k_n(kernel, pi, n, strategy)?.value;
            details.k_2n = Some(k_2n);
            details.k_n = Some(kn);
            details.big_k_n = Some(big);
            details.aperiodic = Some(kn > cfg.tol && big < 2.0 - cfg.tol);
            let mut cert = GapCertificate::undecided(strategy.is_exact());
            cert.theorem = Some(tag);
            cert.n0 = Some(n);
            if k_2n > cfg.tol {
                // σ(P) = σ(P*), so either pair bounds ‖Pⁿ‖
                let k_pair = k_adjoint_pair(kernel, pi, n, strategy)?.value;
                let k_rev = k_reverse_pair(kernel, pi, n, strategy)?.value;
                details.k_pair = Some(k_pair);
                details.k_reverse_pair = Some(k_rev);
                cert.verdict = Verdict::HasGap;
                cert.radius_bound = Some(adjoint_pair_radius(k_pair.max(k_rev), cfg.kappa, n));
            } else {
                cert.verdict = Verdict::NoGapWitness;
            }
            cert.details = details;
            cert
        }
        None => adjoint_pair_certificate(kernel, pi, cfg)?,
    };

    let spec = spectrum(kernel, pi)?;
    cert.exact_has_gap = Some(spec.restricted_radius < 1.0 - GAP_TOL);
    cert.exact_radius = Some(spec.restricted_radius);
    Ok(cert)
}
