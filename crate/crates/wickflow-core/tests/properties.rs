//! Randomized structural invariants of the combinatorial layer, driven by
//! proptest so shrinking points at minimal counterexamples.

use proptest::collection::vec;
use proptest::prelude::*;

use wickflow_core::calculus::{malliavin, ou_operator, ou_semigroup, skorokhod};
use wickflow_core::chaos::{self, ChaosExpansion, Coeff, Kind};
use wickflow_core::{KondratievNorm, MultiIndex, Truncation};

fn index_strategy() -> impl Strategy<Value = MultiIndex> {
    vec(0u32..4, 0..5).prop_map(MultiIndex::from_entries)
}

fn scalar_expansion() -> impl Strategy<Value = ChaosExpansion> {
    vec((index_strategy(), -2.0f64..2.0), 0..8).prop_map(|items| {
        let mut f = ChaosExpansion::new(Kind::Scalar);
        for (alpha, x) in items {
            f.accumulate(alpha, Coeff::Scalar(x)).unwrap();
        }
        f
    })
}

fn max_diff(a: &ChaosExpansion, b: &ChaosExpansion) -> f64 {
    let mut worst = 0.0f64;
    for (alpha, c) in a.iter() {
        let other = b.get(alpha).map(|c| c.norm_sq().sqrt()).unwrap_or(0.0);
        worst = worst.max((c.norm_sq().sqrt() - other).abs());
    }
    for (alpha, c) in b.iter() {
        if a.get(alpha).is_none() {
            worst = worst.max(c.norm_sq().sqrt());
        }
    }
    worst
}

proptest! {
    #[test]
    fn multiindex_add_sub_roundtrip(a in index_strategy(), b in index_strategy()) {
        let sum = a.add(&b);
        prop_assert_eq!(sum.sub(&b).unwrap(), a.clone());
        prop_assert_eq!(sum.length(), a.length() + b.length());
        prop_assert!(a.le(&sum) && b.le(&sum));
    }

    #[test]
    fn multiindex_compact_roundtrip(a in index_strategy()) {
        let parsed = MultiIndex::parse_compact(&a.to_compact_string()).unwrap();
        prop_assert_eq!(parsed, a);
    }

    #[test]
    fn weight_is_multiplicative(a in index_strategy(), b in index_strategy(), p in 0.1f64..3.0) {
        let lhs = a.add(&b).weight(p);
        let rhs = a.weight(p) * b.weight(p);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
    }

    #[test]
    fn wick_commutes(f in scalar_expansion(), g in scalar_expansion()) {
        let fg = chaos::wick(&f, &g).unwrap();
        let gf = chaos::wick(&g, &f).unwrap();
        prop_assert!(max_diff(&fg, &gf) <= 1e-12);
    }

    #[test]
    fn wick_distributes_over_sums(
        f in scalar_expansion(),
        g in scalar_expansion(),
        h in scalar_expansion(),
    ) {
        let lhs = chaos::wick(&f, &g.add(&h).unwrap()).unwrap();
        let rhs = chaos::wick(&f, &g).unwrap().add(&chaos::wick(&f, &h).unwrap()).unwrap();
        prop_assert!(max_diff(&lhs, &rhs) <= 1e-10);
    }

    #[test]
    fn wick_with_unit_is_identity(f in scalar_expansion()) {
        let u = ChaosExpansion::unit();
        let fu = chaos::wick(&f, &u).unwrap();
        prop_assert!(max_diff(&fu, &f) == 0.0);
    }

    #[test]
    fn ou_operator_matches_composition(f in scalar_expansion()) {
        let composed = skorokhod(&malliavin(&f));
        let direct = ou_operator(&f);
        prop_assert!(max_diff(&composed, &direct) <= 1e-12);
    }

    #[test]
    fn ou_semigroup_property(f in scalar_expansion(), s in 0.0f64..2.0, t in 0.0f64..2.0) {
        let both = ou_semigroup(&ou_semigroup(&f, s).unwrap(), t).unwrap();
        let once = ou_semigroup(&f, s + t).unwrap();
        prop_assert!(max_diff(&both, &once) <= 1e-12);
    }

    #[test]
    fn norm_scales_quadratically(f in scalar_expansion(), c in -3.0f64..3.0) {
        let w = KondratievNorm::distribution(2.0);
        let base = f.kondratiev_norm_sq(w).unwrap();
        let scaled = f.scale(c).kondratiev_norm_sq(w).unwrap();
        prop_assert!((scaled - c * c * base).abs() <= 1e-9 * (1.0 + base));
    }

    #[test]
    fn truncation_enumerates_exactly_its_members(n in 0u32..4, m in 1u32..5) {
        let t = Truncation::new(n, m).unwrap();
        let all = t.enumerate();
        prop_assert_eq!(all.len() as u64, t.cardinality());
        for alpha in &all {
            prop_assert!(t.contains(alpha));
            prop_assert!(alpha.length() <= n as u64);
        }
    }

    #[test]
    fn wick_support_is_minkowski_sum(f in scalar_expansion(), g in scalar_expansion()) {
        let fg = chaos::wick(&f, &g).unwrap();
        for gamma in fg.support() {
            let decomposable = f
                .support()
                .any(|a| a.le(gamma) && g.get(&gamma.sub(a).unwrap()).is_some());
            prop_assert!(decomposable, "{} not reachable", gamma);
        }
    }
}
