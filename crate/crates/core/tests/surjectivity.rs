//! Evaluation maps become onto once the degree passes `c` plus the target
//! dimension, with or without Taylor blocks.

use bertini_core::density::{Instance, LocalConditionSet};
use bertini_core::geom::{ClosedPoint, SchemeDesc};
use bertini_core::gf::{Elem, FieldTower};
use bertini_core::linalg::stabilization_c;
use bertini_core::mpoly::parse_form;

fn check(t: &FieldTower, n: usize, z: &[&str], y: &[Vec<u32>], r: usize) {
    let z: Vec<_> = z.iter().map(|s| parse_form(s, n, t.base()).unwrap()).collect();
    let y: Vec<_> = y
        .iter()
        .map(|c| ClosedPoint::from_coords(t, 1, &c.iter().map(|&x| Elem(x)).collect::<Vec<_>>()).unwrap())
        .collect();
    let inst = Instance::new(t, SchemeDesc::projective(n), z.clone(), y, LocalConditionSet::Full).unwrap();
    let maxdeg = z.iter().map(|g| g.degree()).max().unwrap_or(0);
    let c = stabilization_c(&z, n, maxdeg + 4, t.base()).unwrap().c;
    // target dimension over F_q does not depend on d
    let target = inst.eval_map(maxdeg.max(1), r).unwrap().target_dim() / t.a();
    for d in c + target..=c + target + 2 {
        let map = inst.eval_map(d, r).unwrap();
        assert!(map.is_surjective(), "d = {d}: rank {} of {}", map.rank, map.target_dim());
    }
}

#[test]
fn projective_line_with_all_rational_jets() {
    let t = FieldTower::new(2, 1, 3).unwrap();
    check(&t, 1, &[], &[], 2);
    check(&t, 1, &[], &[vec![1, 1]], 3);
}

#[test]
fn line_through_plane_with_taylor_blocks() {
    let t = FieldTower::new(2, 1, 2).unwrap();
    check(&t, 2, &["x2"], &[vec![1, 1, 1]], 2);
}

#[test]
fn fat_point_blocks_vanish_and_rest_is_onto() {
    let t = FieldTower::new(2, 1, 2).unwrap();
    check(&t, 2, &["x1^2", "x1*x2", "x2^2"], &[vec![0, 1, 0]], 2);
}

#[test]
fn ternary_field() {
    let t = FieldTower::new(3, 1, 2).unwrap();
    check(&t, 1, &["x0*x1"], &[vec![1, 1]], 2);
}

#[test]
fn below_the_threshold_can_fail() {
    // four rational points of P^1 over F_3 cannot be separated by linear forms
    let t = FieldTower::new(3, 1, 1).unwrap();
    let y: Vec<_> = [[1u32, 0], [0, 1], [1, 1], [1, 2]]
        .iter()
        .map(|c| ClosedPoint::from_coords(&t, 1, &[Elem(c[0]), Elem(c[1])]).unwrap())
        .collect();
    let inst = Instance::new(&t, SchemeDesc::projective(1), vec![], y, LocalConditionSet::Full).unwrap();
    assert!(!inst.eval_map(1, 1).unwrap().is_surjective());
    assert!(inst.eval_map(3, 1).unwrap().is_surjective());
}
