//! Cross-module invariants on small random instances.

use bertini_core::density::{
    sampled_density, truncated_density_exact, truncated_density_formula, ExactMode, Instance, LocalConditionSet,
};
use bertini_core::geom::{self, ClosedPoint, SchemeDesc, DEFAULT_POINT_BUDGET as BUDGET};
use bertini_core::gf::{Elem, FieldTower};
use bertini_core::linalg::ideal_slice;
use bertini_core::mpoly::{binomial, HomogeneousPolynomial, MonomialBasis};
use proptest::prelude::*;
use std::sync::OnceLock;

fn towers() -> &'static [FieldTower] {
    static T: OnceLock<Vec<FieldTower>> = OnceLock::new();
    T.get_or_init(|| {
        vec![
            FieldTower::new(2, 1, 6).unwrap(),
            FieldTower::new(3, 1, 4).unwrap(),
            FieldTower::new(2, 2, 3).unwrap(),
            FieldTower::new(5, 1, 2).unwrap(),
        ]
    })
}

fn form(t: &FieldTower, n: usize, d: usize, raw: &[u32]) -> HomogeneousPolynomial {
    let b = MonomialBasis::new(n, d);
    let q = t.q() as u32;
    let c = (0..b.len()).map(|i| Elem(raw[i % raw.len()] % q)).collect();
    HomogeneousPolynomial::from_coeffs(b, c).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn embedding_is_a_ring_map(ti in 0usize..4, x in any::<u32>(), y in any::<u32>(), to in 2usize..4) {
        let t = &towers()[ti];
        let to = to.min(t.max_level());
        let base = t.base();
        let (a, b) = (Elem(x % base.order()), Elem(y % base.order()));
        let up = |v| t.embed(v, 1, to).unwrap();
        let top = t.level(to).unwrap();
        prop_assert_eq!(up(base.mul(a, b)), top.mul(up(a), up(b)));
        prop_assert_eq!(up(base.add(a, b)), top.add(up(a), up(b)));
        prop_assert_eq!(t.descend(up(a), to, 1).unwrap(), Some(a));
    }

    #[test]
    fn frobenius_has_order_k(ti in 0usize..4, x in any::<u32>(), k in 1usize..4) {
        let t = &towers()[ti];
        let k = k.min(t.max_level());
        let l = t.level(k).unwrap();
        let x0 = Elem(x % l.order());
        let mut y = x0;
        for _ in 0..k {
            y = t.frobenius(y, k).unwrap();
        }
        prop_assert_eq!(y, x0);
        let deg = t.element_degree(x0, k).unwrap();
        prop_assert_eq!(k % deg, 0);
        prop_assert!(t.descend(x0, k, deg).unwrap().is_some());
    }

    #[test]
    fn forms_scale_by_lambda_to_the_d(ti in 0usize..4, d in 1usize..4, raw in prop::collection::vec(any::<u32>(), 1..8),
                                       pt in prop::collection::vec(any::<u32>(), 3), lam in 1u32..64) {
        let t = &towers()[ti];
        let base = t.base();
        let f = form(t, 2, d, &raw);
        let x: Vec<Elem> = pt.iter().map(|&c| Elem(c % base.order())).collect();
        let l = Elem(1 + lam % (base.order() - 1));
        let lx: Vec<Elem> = x.iter().map(|&c| base.mul(l, c)).collect();
        let lhs = f.evaluate(t, 1, &lx).unwrap();
        let rhs = base.mul(base.pow(l, d as u64), f.evaluate(t, 1, &x).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn closed_points_are_orbit_invariant(ti in 0usize..3, coords in prop::collection::vec(any::<u32>(), 3), k in 1usize..4, lam in any::<u32>()) {
        let t = &towers()[ti];
        let k = k.min(t.max_level());
        let l = t.level(k).unwrap();
        let x: Vec<Elem> = coords.iter().map(|&c| Elem(c % l.order())).collect();
        prop_assume!(x.iter().any(|c| !c.is_zero()));
        let p = ClosedPoint::from_coords(t, k, &x).unwrap();
        let s = Elem(1 + lam % (l.order() - 1));
        let scaled: Vec<Elem> = x.iter().map(|&c| l.mul(s, c)).collect();
        let frob: Vec<Elem> = x.iter().map(|&c| t.frobenius(c, k).unwrap()).collect();
        prop_assert_eq!(&ClosedPoint::from_coords(t, k, &scaled).unwrap(), &p);
        prop_assert_eq!(&ClosedPoint::from_coords(t, k, &frob).unwrap(), &p);
        prop_assert_eq!(k % p.degree, 0);
        prop_assert_eq!(p.conjugates_at(t, k).unwrap().len(), p.degree);
    }

    #[test]
    fn slice_dimension_is_bounded(ti in 0usize..4, d in 0usize..5, raw in prop::collection::vec(any::<u32>(), 1..6), gd in 1usize..3) {
        let t = &towers()[ti];
        let g = form(t, 2, gd, &raw);
        let s = ideal_slice(std::slice::from_ref(&g), 2, d, t.base());
        let full = binomial(d as u64 + 2, 2) as usize;
        if d < gd || g.is_zero() {
            prop_assert_eq!(s.dim(), 0);
        } else {
            // principal ideal: I_d = g · S_{d-gd}
            prop_assert_eq!(s.dim(), binomial((d - gd) as u64 + 2, 2) as usize);
        }
        prop_assert!(s.dim() <= full);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    /// Brute force, inclusion-exclusion and, when the map is onto, the product
    /// formula all agree.
    #[test]
    fn exact_modes_agree(ti in 0usize..2, d in 2usize..6, zraw in prop::collection::vec(0u32..3, 2..4), with_z in any::<bool>(),
                         y_on in any::<bool>(), mode in 0usize..3) {
        let t = &towers()[ti];
        let n = 1;
        let z = if with_z { vec![form(t, n, 1 + zraw.len() % 2, &zraw)] } else { vec![] };
        prop_assume!(z.iter().all(|g| !g.is_zero()));
        let cand = ClosedPoint::from_coords(t, 1, &[Elem(1), Elem(1)]).unwrap();
        let y = if y_on && !geom::on_zero_set(t, &z, &cand).unwrap() { vec![cand] } else { vec![] };
        let tset = [LocalConditionSet::Full, LocalConditionSet::Zero, LocalConditionSet::NonzeroPerComponent][mode].clone();
        let inst = Instance::new(t, SchemeDesc::projective(n), z, y.clone(), tset).unwrap();
        prop_assume!(inst.slice(d).dim() <= 10);
        let brute = truncated_density_exact(&inst, d, 2, ExactMode::Exhaustive { cap_bits: 20 }).unwrap();
        let fiber = truncated_density_exact(&inst, d, 2, ExactMode::FiberCount).unwrap();
        prop_assert_eq!(&brute.value, &fiber.value);
        prop_assert_eq!(&brute.hits, &fiber.hits);
        if brute.surjective {
            let strata = inst.stratify(1).unwrap();
            let f = truncated_density_formula(&strata, &y, &inst.t, 2).unwrap();
            prop_assert_eq!(&brute.value, &f);
        }
    }

    #[test]
    fn sampling_is_reproducible(seed in any::<u64>(), d in 1usize..5) {
        let t = &towers()[0];
        let inst = Instance::new(t, SchemeDesc::projective(2), vec![], vec![], LocalConditionSet::Full).unwrap();
        let a = sampled_density(&inst, d, 2, 200, seed).unwrap();
        let b = sampled_density(&inst, d, 2, 200, seed).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.hits <= a.trials);
        prop_assert!(a.ci_low <= a.fraction() && a.fraction() <= a.ci_high);
    }

    #[test]
    fn rational_counts_of_hypersurfaces_match_points(ti in 0usize..2, raw in prop::collection::vec(any::<u32>(), 1..6), d in 1usize..3) {
        let t = &towers()[ti];
        let f = form(t, 2, d, &raw);
        let s = SchemeDesc::new(2, vec![f], vec![], None).unwrap();
        for k in 1..=2 {
            let pts = geom::rational_points(t, &s, k, BUDGET).unwrap();
            prop_assert_eq!(pts.len() as u64, geom::rational_count(t, &s, k, BUDGET).unwrap());
        }
    }
}
