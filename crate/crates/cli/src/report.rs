//! Deterministic JSON reports.
//!
//! Objects are `BTreeMap`-backed, so keys come out sorted. Finite floats are
//! written with 17 significant digits, which round-trips every `f64`;
//! non-finite values become the strings `"inf"`, `"-inf"` and `"nan"`.

use anyhow::Result;
use serde_json::{json, Map, Number, Value};

use l2gap_core::bounds::{
    adjoint_pair_certificate, certify, difference_conductance, flow_ratio_bound,
    holder_comparison, norm_sandwich, ratio_radius, reversibility_comparison,
    two_step_lower_bound, unit_exclusion, BoundConfig, GapCertificate, Verdict,
};
use l2gap_core::isoperimetry::{big_k_n, k_adjoint_pair, k_n, k_reverse_pair, ConductanceResult};
use l2gap_core::reversibility::{c_infty, laziness, posii_positive, very_weak_norm, weak_rev_constant};
use l2gap_core::spectral::{spectrum, Complex, SpectrumReport};
use l2gap_core::verify::SuiteOutcome;
use l2gap_core::{Chain, GapError, Strategy};

use crate::input::ChainFile;

pub fn num(x: f64) -> Value {
    if x.is_nan() {
        Value::String("nan".into())
    } else if x.is_infinite() {
        Value::String(if x > 0.0 { "inf" } else { "-inf" }.into())
    } else {
        let text = format!("{x:.16e}");
        Value::Number(text.parse::<Number>().expect("formatted float is valid JSON"))
    }
}

fn opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, num)
}

fn exponent_key(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

/// Run settings echoed into every report.
#[derive(Debug, Clone)]
pub struct Settings {
    pub cfg: BoundConfig,
    pub seed: u64,
}

impl Settings {
    fn strategy_name(&self) -> &'static str {
        match self.cfg.strategy {
            Strategy::Exact => "exact",
            Strategy::LocalSearch(_) => "heuristic",
        }
    }

    pub fn to_json(&self) -> Value {
        let c = &self.cfg;
        json!({
            "kappa": num(c.kappa),
            "n_max": c.n_max,
            "grid": c.grid,
            "exponents": c.exponents.iter().map(|&(p, q)| json!([num(p), num(q)])).collect::<Vec<_>>(),
            "strategy": self.strategy_name(),
            "seed": self.seed,
            "tol": num(c.tol),
        })
    }
}

/// Hypothesis failures become report content; other errors abort.
fn section<T>(result: l2gap_core::Result<T>, render: impl FnOnce(T) -> Value) -> Result<Value> {
    match result {
        Ok(t) => Ok(render(t)),
        Err(e @ (GapError::HypothesisFailed(_) | GapError::NotWeakReversible { .. })) => {
            Ok(json!({"status": "hypothesis_failed", "reason": e.to_string()}))
        }
        Err(e @ GapError::TooLargeForExact { .. }) => Ok(json!({"status": "unavailable", "reason": e.to_string()})),
        Err(e) => Err(e.into()),
    }
}

fn conductance(chain: &Chain, r: &ConductanceResult) -> Value {
    let labels = chain.kernel.labels();
    json!({
        "value": num(r.value),
        "exact": r.exact,
        "witness": r.witness.indices().into_iter().map(|i| labels[i].clone()).collect::<Vec<_>>(),
    })
}

fn input_json(file: &ChainFile, chain: &Chain) -> Value {
    json!({
        "digest": file.digest,
        "states": chain.kernel.labels(),
        "pruned": chain.pruned,
    })
}

pub fn constants_json(chain: &Chain, orders: &[usize], cfg: &BoundConfig) -> Result<Value> {
    let (p, pi, s) = (&chain.kernel, &chain.pi, &cfg.strategy);
    let mut rows = Vec::new();
    for &n in orders {
        let mut v = Map::new();
        for &(e, _) in &cfg.exponents {
            v.insert(exponent_key(e), num(very_weak_norm(p, pi, n, e)?));
        }
        rows.push(json!({
            "n": n,
            "k_n": conductance(chain, &k_n(p, pi, n, s)?),
            "big_k_n": conductance(chain, &big_k_n(p, pi, n, s)?),
            "k_adjoint_pair": conductance(chain, &k_adjoint_pair(p, pi, n, s)?),
            "k_reverse_pair": conductance(chain, &k_reverse_pair(p, pi, n, s)?),
            "c_r": num(weak_rev_constant(p, pi, n)?),
            "v": Value::Object(v),
        }));
    }
    Ok(json!({
        "orders": rows,
        "laziness": num(laziness(p)),
        "c_infty": section(c_infty(p, pi, s), num)?,
        "posii_positive": posii_positive(p, pi)?,
        "reversible": weak_rev_constant(p, pi, 1)? <= 1.0 + l2gap_core::reversibility::REVERSIBLE_TOL,
        "exact": s.is_exact(),
    }))
}

fn complex_list(zs: &[Complex]) -> Value {
    Value::Array(zs.iter().map(|z| json!({"re": num(z.re), "im": num(z.im)})).collect())
}

pub fn spectrum_json(s: &SpectrumReport) -> Value {
    json!({
        "eigenvalues": complex_list(&s.eigenvalues),
        "restricted_eigenvalues": complex_list(&s.restricted_eigenvalues),
        "restricted_norm": num(s.restricted_norm),
        "restricted_radius": num(s.restricted_radius),
        "normal": s.normal,
        "gap": num(s.gap),
    })
}

pub fn certificate_json(c: &GapCertificate) -> Value {
    let d = &c.details;
    json!({
        "verdict": c.verdict.as_str(),
        "theorem": c.theorem.map(|t| t.as_str()),
        "n0": c.n0,
        "radius_bound": opt(c.radius_bound),
        "details": {
            "c_r": opt(d.c_r),
            "v": d.v.map(|(p, v)| json!({"p": num(p), "value": num(v)})),
            "k_2n": opt(d.k_2n),
            "k_adjoint_pair": opt(d.k_pair),
            "k_reverse_pair": opt(d.k_reverse_pair),
            "k_n": opt(d.k_n),
            "big_k_n": opt(d.big_k_n),
            "aperiodic": d.aperiodic,
        },
        "exact_has_gap": c.exact_has_gap,
        "exact_radius": opt(c.exact_radius),
        "exact": c.exact,
    })
}

fn certificates_json(chain: &Chain, cfg: &BoundConfig) -> Result<Value> {
    let (p, pi, s) = (&chain.kernel, &chain.pi, &cfg.strategy);
    let orders: Vec<usize> = (1..=cfg.n_max).collect();

    let sandwich = orders
        .iter()
        .map(|&n| {
            section(norm_sandwich(p, pi, n, cfg.kappa, s), |r| {
                json!({
                    "n": r.n, "k_adjoint_pair": num(r.k_pair), "norm": num(r.norm),
                    "lower": num(r.lower), "upper": num(r.upper),
                    "lower_holds": r.lower_holds, "upper_holds": r.upper_holds,
                })
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut holder = Vec::new();
    for &n in &orders {
        for &(ep, eq) in &cfg.exponents {
            holder.push(section(holder_comparison(p, pi, n, ep, eq, s), |r| {
                json!({
                    "n0": r.n0, "p": num(r.p), "q": num(r.q), "v": num(r.v),
                    "k_adjoint_pair": num(r.k_pair), "k_2n": num(r.k_2n),
                    "k_reverse_pair": num(r.k_reverse_pair),
                    "first_rhs": num(r.first_rhs), "second_rhs": num(r.second_rhs),
                    "first_holds": r.first_holds, "second_holds": r.second_holds,
                    "vacuous": r.vacuous,
                })
            })?);
        }
    }

    let comparison = orders
        .iter()
        .map(|&n| {
            section(reversibility_comparison(p, pi, n, s), |r| {
                json!({
                    "n0": r.n0, "c": num(r.c), "k_adjoint_pair": num(r.k_pair),
                    "k_2n": num(r.k_2n), "k_reverse_pair": num(r.k_reverse_pair),
                    "first_margin": num(r.first_margin), "second_margin": num(r.second_margin),
                    "first_holds": r.first_holds, "second_holds": r.second_holds,
                })
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let c1 = weak_rev_constant(p, pi, 1)?;
    let two_step = if c1.is_finite() {
        let k1 = k_n(p, pi, 1, s)?.value;
        let big = big_k_n(p, pi, 1, s)?.value;
        let k2 = k_n(p, pi, 2, s)?.value;
        section(two_step_lower_bound(k1, big, c1, cfg.grid), |b| {
            json!({
                "k_1": num(k1), "big_k_1": num(big), "c_r": num(c1),
                "bound": num(b), "k_2": num(k2), "holds": b <= k2 + l2gap_core::bounds::CHECK_TOL,
            })
        })?
    } else {
        json!({"status": "hypothesis_failed", "reason": "chain is not weak reversible of order 1"})
    };

    let flow = [2.0, f64::INFINITY]
        .into_iter()
        .map(|e| {
            section(flow_ratio_bound(p, pi, e, s), |r| {
                json!({
                    "p": num(r.p), "q": num(r.q), "k_1": num(r.k1), "k_2": num(r.k2),
                    "witness": r.witness.indices().into_iter().map(|i| p.labels()[i].clone()).collect::<Vec<_>>(),
                    "norm": num(r.norm), "bound": num(r.bound), "holds": r.holds,
                })
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let difference = section(difference_conductance(p, pi, s), |d| {
        json!({
            "k_1": num(d.k1), "k_difference": num(d.k_difference),
            "holds": d.holds, "identity_error": opt(d.identity_error),
        })
    })?;

    let exclusion = section(unit_exclusion(p, pi, cfg), |r| {
        json!({
            "k_1": num(r.k1), "rho": num(r.rho), "min_distance": num(r.min_distance),
            "exclusion_holds": r.exclusion_holds, "reversible": r.reversible,
            "nonnegative_interval_holds": r.nonnegative_interval_holds,
            "positivity_interval_holds": r.positivity_interval_holds,
        })
    })?;

    let ratio = section(ratio_radius(p, pi, cfg), |r| {
        json!({"k_1": num(r.k1), "c_r": num(r.c_r), "c_infty": num(r.c_infty), "radius": num(r.radius)})
    })?;

    Ok(json!({
        "certify": certificate_json(&certify(p, pi, cfg)?),
        "adjoint_pair": certificate_json(&adjoint_pair_certificate(p, pi, cfg)?),
        "norm_sandwich": sandwich,
        "holder_comparison": holder,
        "reversibility_comparison": comparison,
        "two_step": two_step,
        "flow_ratio": flow,
        "difference_conductance": difference,
        "unit_exclusion": exclusion,
        "ratio_radius": ratio,
    }))
}

pub fn analyze(file: &ChainFile, settings: &Settings) -> Result<Value> {
    let chain = Chain::new(file.kernel.clone())?;
    let cfg = &settings.cfg;
    let orders: Vec<usize> = (1..=cfg.n_max).collect();
    Ok(json!({
        "input": input_json(file, &chain),
        "config": settings.to_json(),
        "constants": constants_json(&chain, &orders, cfg)?,
        "spectrum": spectrum_json(&spectrum(&chain.kernel, &chain.pi)?),
        "certificates": certificates_json(&chain, cfg)?,
    }))
}

pub fn certify_report(file: &ChainFile, settings: &Settings) -> Result<(Value, Verdict)> {
    let chain = Chain::new(file.kernel.clone())?;
    let cert = certify(&chain.kernel, &chain.pi, &settings.cfg)?;
    let report = json!({
        "input": input_json(file, &chain),
        "config": settings.to_json(),
        "certificate": certificate_json(&cert),
    });
    Ok((report, cert.verdict))
}

pub fn constants_report(file: &ChainFile, settings: &Settings, orders: &[usize]) -> Result<Value> {
    let chain = Chain::new(file.kernel.clone())?;
    Ok(json!({
        "input": input_json(file, &chain),
        "config": settings.to_json(),
        "constants": constants_json(&chain, orders, &settings.cfg)?,
    }))
}

pub fn verify_json(outcome: &SuiteOutcome, seed: u64, trials: usize, settings: &Settings) -> Value {
    json!({
        "suite": outcome.suite.name(),
        "seed": seed,
        "trials": trials,
        "config": settings.to_json(),
        "chains": outcome.chains,
        "checks": outcome.checks,
        "vacuous": outcome.vacuous,
        "passed": outcome.passed(),
        "violations": outcome.violations.iter().map(|v| json!({
            "check": v.check,
            "kappa_dependent": v.kappa_dependent,
            "chain": v.chain,
            "detail": v.detail,
            "P": v.kernel.to_rows().into_iter().map(|r| r.into_iter().map(num).collect::<Vec<_>>()).collect::<Vec<_>>(),
        })).collect::<Vec<_>>(),
    })
}

/// Flattened `path = value` lines for terminal reading.
pub fn to_text(value: &Value) -> String {
    let mut out = String::new();
    flatten(value, String::new(), &mut out);
    out
}

fn flatten(value: &Value, path: String, out: &mut String) {
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                flatten(v, p, out);
            }
        }
        Value::Array(items) if items.iter().any(|v| v.is_object() || v.is_array()) => {
            for (i, v) in items.iter().enumerate() {
                flatten(v, format!("{path}[{i}]"), out);
            }
        }
        other => {
            out.push_str(&path);
            out.push_str(" = ");
            out.push_str(&other.to_string());
            out.push('\n');
        }
    }
}
