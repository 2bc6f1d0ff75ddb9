//! Seeded suites that check each bound against exact computation over a
//! population of random chains.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::bounds::{
    adjoint_pair_certificate, certify, difference_conductance, flow_ratio_bound,
    holder_comparison, norm_sandwich, ratio_radius, reversibility_comparison,
    two_step_lower_bound, unit_exclusion, BoundConfig, Verdict, CHECK_TOL,
};
use crate::chain::{stationary, StationaryWeights, TransitionKernel};
use crate::error::{GapError, Result};
use crate::isoperimetry::{big_k_n, k_n};
use crate::reversibility::{posii_positive, weak_rev_constant};
use crate::spectral::spectrum;
use crate::zoo::{cycle, lazy, random_reversible, random_stochastic};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Sandwich,
    Holder,
    TwoStep,
    FlowRatio,
    UnitExclusion,
    Soundness,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Sandwich,
        Suite::Holder,
        Suite::TwoStep,
        Suite::FlowRatio,
        Suite::UnitExclusion,
        Suite::Soundness,
    ];

    /// Command-line name.
    pub fn name(self) -> &'static str {
        match self {
            Suite::Sandwich => "sandwich",
            Suite::Holder => "iterier",
            Suite::TwoStep => "lemma-main",
            Suite::FlowRatio => "nele",
            Suite::UnitExclusion => "thm5",
            Suite::Soundness => "soundness",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = GapError;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|suite| suite.name() == s)
            .ok_or_else(|| GapError::InvalidParameter(format!("unknown suite {s:?}")))
    }
}

/// One chain of a suite population.
#[derive(Debug, Clone)]
pub struct Member {
    pub name: String,
    pub kernel: TransitionKernel,
    pub pi: StationaryWeights,
}

impl Member {
    fn new(name: String, kernel: TransitionKernel) -> Result<Self> {
        let pi = stationary(&kernel)?;
        Ok(Self { name, kernel, pi })
    }
}

/// For each trial `i`, with `dim = 3 + i mod 5`: a random stochastic chain
/// (dense for even `i`, sparsity 0.4 for odd `i`), a random reversible
/// chain, and the half-lazy version of one of the two (alternating).
pub fn population(seed: u64, trials: usize) -> Result<Vec<Member>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut members = Vec::with_capacity(3 * trials);
    for i in 0..trials {
        let dim = 3 + i % 5;
        let (s1, s2): (u64, u64) = (rng.random(), rng.random());
        let sparsity = if i % 2 == 0 { 0.0 } else { 0.4 };
        let stoch = random_stochastic(dim, s1, sparsity)?;
        let rev = random_reversible(dim, s2)?;
        let (base, base_name) = if i % 2 == 0 {
            (&stoch, "random-stochastic")
        } else {
            (&rev, "random-reversible")
        };
        let lazy_kernel = lazy(base, 0.5)?;
        members.push(Member::new(
            format!("random-stochastic(dim={dim}, seed={s1}, sparsity={sparsity})"),
            stoch.clone(),
        )?);
        members.push(Member::new(format!("random-reversible(dim={dim}, seed={s2})"), rev.clone())?);
        members.push(Member::new(
            format!("lazy({base_name}(dim={dim}, seed={}), 0.5)", if i % 2 == 0 { s1 } else { s2 }),
            lazy_kernel,
        )?);
    }
    Ok(members)
}

/// Deterministic rotations of length 2 to 5; none has a gap.
pub fn periodic_members() -> Result<Vec<Member>> {
    (2..=5)
        .map(|m| Member::new(format!("cycle(m={m})"), cycle(m)?))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Violation {
    pub suite: Suite,
    pub check: &'static str,
    /// The check depends on the configured κ.
    pub kappa_dependent: bool,
    pub chain: String,
    pub kernel: TransitionKernel,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub chains: usize,
    /// Inequalities evaluated.
    pub checks: usize,
    /// Checks skipped because a hypothesis failed.
    pub vacuous: usize,
    pub violations: Vec<Violation>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violations_of(&self, check: &str) -> usize {
        self.violations.iter().filter(|v| v.check == check).count()
    }
}

#[derive(Default)]
struct Tally {
    checks: usize,
    vacuous: usize,
    violations: Vec<Violation>,
}

struct Ctx<'a> {
    suite: Suite,
    member: &'a Member,
    tally: Tally,
}

impl Ctx<'_> {
    fn check(&mut self, check: &'static str, kappa_dependent: bool, ok: bool, detail: impl FnOnce() -> String) {
        self.tally.checks += 1;
        if !ok {
            self.tally.violations.push(Violation {
                suite: self.suite,
                check,
                kappa_dependent,
                chain: self.member.name.clone(),
                kernel: self.member.kernel.clone(),
                detail: detail(),
            });
        }
    }

    fn skip(&mut self) {
        self.tally.vacuous += 1;
    }
}

/// Runs `suite` on the population for `seed` and `trials`; the soundness
/// suite also covers [`periodic_members`].
pub fn run_suite(suite: Suite, seed: u64, trials: usize, cfg: &BoundConfig) -> Result<SuiteOutcome> {
    cfg.validate()?;
    let mut members = population(seed, trials)?;
    if suite == Suite::Soundness {
        members.extend(periodic_members()?);
    }
    run_on(suite, &members, cfg)
}

pub fn run_on(suite: Suite, members: &[Member], cfg: &BoundConfig) -> Result<SuiteOutcome> {
    let tallies = members
        .par_iter()
        .map(|member| {
            let mut ctx = Ctx {
                suite,
                member,
                tally: Tally::default(),
            };
            match suite {
                Suite::Sandwich => sandwich(&mut ctx, cfg),
                Suite::Holder => holder(&mut ctx, cfg),
                Suite::TwoStep => two_step(&mut ctx, cfg),
                Suite::FlowRatio => flow_ratio(&mut ctx, cfg),
                Suite::UnitExclusion => exclusion(&mut ctx, cfg),
                Suite::Soundness => soundness(&mut ctx, cfg),
            }
            .map(|()| ctx.tally)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = SuiteOutcome {
        suite,
        chains: members.len(),
        checks: 0,
        vacuous: 0,
        violations: Vec::new(),
    };
    for t in tallies {
        out.checks += t.checks;
        out.vacuous += t.vacuous;
        out.violations.extend(t.violations);
    }
    Ok(out)
}

fn sandwich(ctx: &mut Ctx<'_>, cfg: &BoundConfig) -> Result<()> {
    let (p, pi) = (&ctx.member.kernel, &ctx.member.pi);
    for n in 1..=2 {
        let s = norm_sandwich(p, pi, n, cfg.kappa, &cfg.strategy)?;
        ctx.check("sandwich-lower", false, s.lower_holds, || {
            format!("n={n}: norm {:e} < sqrt(1 - k) = {:e}", s.norm, s.lower)
        });
        ctx.check("sandwich-upper", true, s.upper_holds, || {
            format!("n={n}: norm {:e} > sqrt(1 - kk/8) = {:e}", s.norm, s.upper)
        });
    }
    Ok(())
}

fn holder(ctx: &mut Ctx<'_>, cfg: &BoundConfig) -> Result<()> {
    let (p, pi) = (&ctx.member.kernel, &ctx.member.pi);
    for n0 in 1..=2 {
        for &(ep, eq) in &cfg.exponents {
            let h = holder_comparison(p, pi, n0, ep, eq, &cfg.strategy)?;
            if h.vacuous {
                ctx.skip();
                continue;
            }
            ctx.check("holder-first", false, h.first_holds, || {
                format!("n0={n0}, p={ep}: k_pair {:e} > {:e}", h.k_pair, h.first_rhs)
            });
            ctx.check("holder-second", false, h.second_holds, || {
                format!("n0={n0}, p={ep}: k_2n {:e} > {:e}", h.k_2n, h.second_rhs)
            });
        }
        match reversibility_comparison(p, pi, n0, &cfg.strategy) {
            Ok(c) => {
                ctx.check("comparison-first", false, c.first_holds, || {
                    format!("n0={n0}: C k_2n - k_pair = {:e}", c.first_margin)
                });
                ctx.check("comparison-second", false, c.second_holds, || {
                    format!("n0={n0}: C k_reverse - k_2n = {:e}", c.second_margin)
                });
            }
            Err(GapError::NotWeakReversible { .. }) => ctx.skip(),
            Err(e) => return Err(e),
        }
    }
    Ok(())
}

fn two_step(ctx: &mut Ctx<'_>, cfg: &BoundConfig) -> Result<()> {
    let (p, pi) = (&ctx.member.kernel, &ctx.member.pi);
    let c = weak_rev_constant(p, pi, 1)?;
    if c.is_infinite() {
        ctx.skip();
        return Ok(());
    }
    let k1 = k_n(p, pi, 1, &cfg.strategy)?.value;
    let big = big_k_n(p, pi, 1, &cfg.strategy)?.value;
    let k2 = k_n(p, pi, 2, &cfg.strategy)?.value;
    let bound = two_step_lower_bound(k1, big, c, cfg.grid)?;
    ctx.check("two-step", false, bound <= k2 + CHECK_TOL, || {
        format!("bound {bound:e} > k_2 = {k2:e} (k_1 = {k1:e}, K_1 = {big:e}, C_R = {c:e})")
    });
    Ok(())
}

fn flow_ratio(ctx: &mut Ctx<'_>, cfg: &BoundConfig) -> Result<()> {
    let (p, pi) = (&ctx.member.kernel, &ctx.member.pi);
    for exp in [2.0, f64::INFINITY] {
        let r = flow_ratio_bound(p, pi, exp, &cfg.strategy)?;
        ctx.check("flow-ratio", false, r.holds, || {
            format!("p={exp}: bound {:e} > k_2 = {:e}", r.bound, r.k2)
        });
    }
    Ok(())
}

fn exclusion(ctx: &mut Ctx<'_>, cfg: &BoundConfig) -> Result<()> {
    let (p, pi) = (&ctx.member.kernel, &ctx.member.pi);
    let d = difference_conductance(p, pi, &cfg.strategy)?;
    if let Some(err) = d.identity_error {
        ctx.check("difference-identity", false, err <= CHECK_TOL, || {
            format!("flow identity off by {err:e}")
        });
    }
    ctx.check("difference-conductance", false, d.holds, || {
        format!("k_diff {:e} < k_1^2 = {:e}", d.k_difference, d.k1 * d.k1)
    });
    if !posii_positive(p, pi)? {
        ctx.skip();
        return Ok(());
    }
    let r = unit_exclusion(p, pi, cfg)?;
    ctx.check("unit-exclusion", true, r.exclusion_holds, || {
        format!("eigenvalue at distance {:e} from 1 < rho = {:e}", r.min_distance, r.rho)
    });
    if let Some(ok) = r.nonnegative_interval_holds {
        let spec = spectrum(p, pi)?;
        ctx.check("nonnegative-interval", true, ok, || {
            format!(
                "eigenvalues {:?} not in [0, {:e}]",
                spec.restricted_eigenvalues.iter().map(|z| z.re).collect::<Vec<_>>(),
                1.0 - r.rho
            )
        });
    }
    if let Some(ok) = r.positivity_interval_holds {
        ctx.check("positivity-interval", false, ok, || "eigenvalue outside [1 - sqrt 2, 1]".into());
    }
    Ok(())
}

fn soundness(ctx: &mut Ctx<'_>, cfg: &BoundConfig) -> Result<()> {
    let (p, pi) = (&ctx.member.kernel, &ctx.member.pi);
    let cert = certify(p, pi, cfg)?;
    let exact_gap = cert.exact_has_gap.expect("certify records the spectrum");
    let radius = cert.exact_radius.expect("certify records the spectrum");
    match cert.verdict {
        Verdict::HasGap | Verdict::NoGapWitness => {
            let claims_gap = cert.verdict == Verdict::HasGap;
            ctx.check("certify-agreement", false, claims_gap == exact_gap, || {
                format!("verdict {} but exact radius {radius:e}", cert.verdict.as_str())
            });
        }
        Verdict::Undecided => ctx.skip(),
    }
    if let Some(r) = cert.radius_bound {
        ctx.check("certificate-radius", true, r >= radius - CHECK_TOL, || {
            format!("radius bound {r:e} < exact {radius:e}")
        });
    }
    let scan = adjoint_pair_certificate(p, pi, cfg)?;
    match scan.radius_bound {
        Some(r) => ctx.check("adjoint-pair-radius", true, r >= radius - CHECK_TOL, || {
            format!("n0={:?}: radius bound {r:e} < exact {radius:e}", scan.n0)
        }),
        None => ctx.skip(),
    }
    match ratio_radius(p, pi, cfg) {
        Ok(r) => ctx.check("ratio-radius", true, r.radius >= radius - CHECK_TOL, || {
            format!("radius bound {:e} < exact {radius:e}", r.radius)
        }),
        Err(GapError::HypothesisFailed(_)) => ctx.skip(),
        Err(e) => return Err(e),
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::KernelMatrix;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn population_shape() {
        let pop = population(5, 10).unwrap();
        assert_eq!(pop.len(), 30);
        for (i, chunk) in pop.chunks(3).enumerate() {
            for m in chunk {
                assert_eq!(m.kernel.dim(), 3 + i % 5);
            }
        }
        let again = population(5, 10).unwrap();
        for (a, b) in pop.iter().zip(&again) {
            assert_eq!(a.kernel, b.kernel);
            assert_eq!(a.name, b.name);
        }
    }

    #[test]
    fn small_suites_pass() {
        let cfg = BoundConfig {
            grid: 16,
            ..BoundConfig::default()
        };
        for suite in [Suite::Sandwich, Suite::Holder, Suite::FlowRatio, Suite::Soundness] {
            let out = run_suite(suite, 1, 6, &cfg).unwrap();
            assert!(out.passed(), "{suite}: {:?}", out.violations);
            assert!(out.checks > 0);
        }
    }
}
