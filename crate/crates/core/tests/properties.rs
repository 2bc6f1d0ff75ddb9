use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use l2gap_core::chain::{adjoint, adjoint_pair};
use l2gap_core::isoperimetry::{conductance_extremal, conductance_set};
use l2gap_core::reversibility::{laziness, ratio_matrix, very_weak_norm, weak_rev_constant};
use l2gap_core::spectral::spectrum;
use l2gap_core::zoo::{
    haggstrom, haggstrom_index, lazy, perturb_support_preserving, random_reversible,
    random_stochastic,
};
use l2gap_core::{stationary, Extremum, KernelMatrix, StateSet, StationaryWeights, TransitionKernel};

fn chain_of(kernel: TransitionKernel) -> (TransitionKernel, StationaryWeights) {
    let pi = stationary(&kernel).unwrap();
    (kernel, pi)
}

fn any_chain() -> impl Strategy<Value = (TransitionKernel, StationaryWeights)> {
    (2usize..=7, any::<u64>(), prop_oneof![Just(0.0), Just(0.4)], any::<bool>()).prop_map(
        |(dim, seed, sparsity, reversible)| {
            let k = if reversible {
                random_reversible(dim, seed).unwrap()
            } else {
                random_stochastic(dim, seed, sparsity).unwrap()
            };
            chain_of(k)
        },
    )
}

fn masks(dim: usize) -> impl Iterator<Item = u64> {
    1..(1u64 << dim) - 1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conductance_is_complement_symmetric((p, pi) in any_chain(), pick in any::<u64>()) {
        let n = p.dim();
        let mask = 1 + pick % ((1u64 << n) - 2);
        let a = StateSet::from_mask(mask, n, &pi);
        let lhs = conductance_set(&p, &pi, &a).unwrap();
        let rhs = conductance_set(&p, &pi, &a.complement(&pi)).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
    }

    #[test]
    fn exact_extremum_matches_brute_force((p, pi) in any_chain()) {
        let n = p.dim();
        let values: Vec<f64> = masks(n)
            .map(|m| conductance_set(&p, &pi, &StateSet::from_mask(m, n, &pi)).unwrap())
            .collect();
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let inf = conductance_extremal(&p, &pi, Extremum::Inf, &l2gap_core::Strategy::Exact).unwrap();
        let sup = conductance_extremal(&p, &pi, Extremum::Sup, &l2gap_core::Strategy::Exact).unwrap();
        prop_assert!((inf.value - lo).abs() <= 1e-9);
        prop_assert!((sup.value - hi).abs() <= 1e-9);
        let at_witness = conductance_set(&p, &pi, &inf.witness).unwrap();
        prop_assert!((at_witness - inf.value).abs() <= 1e-9);
    }

    #[test]
    fn symmetric_weights_are_reversible(dim in 2usize..=7, seed in any::<u64>()) {
        let (p, pi) = chain_of(random_reversible(dim, seed).unwrap());
        let c = weak_rev_constant(&p, &pi, 1).unwrap();
        prop_assert!((c - 1.0).abs() <= 1e-9, "C_R(1) = {}", c);
        let star = adjoint(&p, &pi).unwrap();
        for x in 0..dim {
            for y in 0..dim {
                prop_assert!((star.entry(x, y) - p.entry(x, y)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn sup_norm_of_ratio_is_weak_constant((p, pi) in any_chain()) {
        let c = weak_rev_constant(&p, &pi, 1).unwrap();
        let v = very_weak_norm(&p, &pi, 1, f64::INFINITY).unwrap();
        if c.is_finite() {
            prop_assert!((c - v).abs() <= 1e-9 * c.max(1.0), "C_R = {}, V = {}", c, v);
        } else {
            prop_assert!(v.is_infinite());
        }
    }

    #[test]
    fn ratio_times_transpose_is_one((p, pi) in any_chain(), n in 1usize..=3) {
        let r = ratio_matrix(&p, &pi, n).unwrap();
        for x in 0..r.dim() {
            for y in 0..r.dim() {
                if let (Some(a), Some(b)) = (r.get(x, y), r.get(y, x)) {
                    prop_assert!((a * b - 1.0).abs() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn radius_at_most_norm((p, pi) in any_chain()) {
        let s = spectrum(&p, &pi).unwrap();
        prop_assert!(s.restricted_radius <= s.restricted_norm + 1e-9);
        prop_assert!(s.restricted_norm <= 1.0 + 1e-9);
    }

    #[test]
    fn adjoint_is_an_involution((p, pi) in any_chain()) {
        let back = adjoint(&adjoint(&p, &pi).unwrap(), &pi).unwrap();
        let star_pi = stationary(&adjoint(&p, &pi).unwrap()).unwrap();
        for x in 0..p.dim() {
            prop_assert!((star_pi.get(x) - pi.get(x)).abs() <= 1e-9);
            for y in 0..p.dim() {
                prop_assert!((back.entry(x, y) - p.entry(x, y)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn perturbation_keeps_support((p, _pi) in any_chain(), eps in 0.01f64..0.9, seed in any::<u64>()) {
        let q = perturb_support_preserving(&p, eps, seed).unwrap();
        for x in 0..p.dim() {
            for y in 0..p.dim() {
                prop_assert_eq!(p.entry(x, y) > 0.0, q.entry(x, y) > 0.0);
            }
        }
    }

    #[test]
    fn lazy_chain_holds_at_least_eps((p, _pi) in any_chain(), eps in 0.01f64..0.99) {
        let q = lazy(&p, eps).unwrap();
        prop_assert!(laziness(&q) >= eps - 1e-12);
    }
}

#[test]
fn haggstrom_corridor_returns_deterministically() {
    for n in 1..=2 {
        let (p, pi) = chain_of(haggstrom(3 * n).unwrap());
        let k = adjoint_pair(&p, &pi, n).unwrap();
        let s = haggstrom_index(3 * n, 2 * n);
        assert_abs_diff_eq!(k.entry(s, s), 1.0, epsilon = 1e-12);
    }
}

#[test]
fn haggstrom_corridors_share_mass() {
    let (_, pi) = chain_of(haggstrom(6).unwrap());
    for a in 1..=6 {
        let first = pi.get(haggstrom_index(a, 1));
        for b in 2..=a {
            assert_abs_diff_eq!(pi.get(haggstrom_index(a, b)), first, epsilon = 1e-12);
        }
    }
    assert!((pi.get(0) - 0.5).abs() <= 0.5f64.powi(5));
}
