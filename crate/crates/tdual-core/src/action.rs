//! Group actions on finite groupoids by functors, validated mechanically.

use crate::cochain::{Cochain, Tuples};
use crate::group::FiniteGroup;
use crate::groupoid::{GpRef, GroupoidError, GroupoidHom};
use crate::torus::Tor;

/// An action of a finite group on a groupoid: each group element acts as a
/// functor (an automorphism once validated). Stored as flat permutation
/// tables.
#[derive(Clone, Debug)]
pub struct GroupAction {
    pub group: FiniteGroup,
    pub gp: GpRef,
    on_objects: Vec<u32>,
    on_arrows: Vec<u32>,
}

impl GroupAction {
    pub fn from_fn(
        group: FiniteGroup,
        gp: GpRef,
        obj: impl Fn(u16, u32) -> u32,
        arr: impl Fn(u16, u32) -> u32,
    ) -> GroupAction {
        let no = gp.object_count;
        let na = gp.arrow_count();
        let mut on_objects = Vec::with_capacity(group.order * no);
        let mut on_arrows = Vec::with_capacity(group.order * na);
        for g in group.elements() {
            for x in gp.objects() {
                on_objects.push(obj(g, x));
            }
            for a in gp.arrows() {
                on_arrows.push(arr(g, a));
            }
        }
        GroupAction { group, gp, on_objects, on_arrows }
    }

    pub fn trivial(group: FiniteGroup, gp: GpRef) -> GroupAction {
        GroupAction::from_fn(group, gp, |_, x| x, |_, a| a)
    }

    #[inline]
    pub fn act_obj(&self, g: u16, x: u32) -> u32 {
        self.on_objects[usize::from(g) * self.gp.object_count + x as usize]
    }

    #[inline]
    pub fn act_arrow(&self, g: u16, a: u32) -> u32 {
        self.on_arrows[usize::from(g) * self.gp.arrow_count() + a as usize]
    }

    /// The functor by which g acts.
    pub fn as_hom(&self, g: u16) -> GroupoidHom {
        let no = self.gp.object_count;
        let na = self.gp.arrow_count();
        GroupoidHom {
            obj_map: self.on_objects[usize::from(g) * no..(usize::from(g) + 1) * no].to_vec(),
            arrow_map: self.on_arrows[usize::from(g) * na..(usize::from(g) + 1) * na].to_vec(),
        }
    }

    /// Action axioms: the identity acts trivially, the action is
    /// multiplicative, and every element acts by a functor (hence by an
    /// automorphism). Returns violations; empty means valid.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let gp = &self.gp;
        let e = self.group.id;
        if gp.objects().any(|x| self.act_obj(e, x) != x)
            || gp.arrows().any(|a| self.act_arrow(e, a) != a)
        {
            out.push("identity does not act trivially".into());
        }
        for g in self.group.elements() {
            let hom = self.as_hom(g);
            let v = hom.validate(gp, gp);
            if !v.is_empty() {
                out.push(format!("element {} does not act by a functor: {}", g, v.join("; ")));
            } else if !hom.is_isomorphism(gp, gp) {
                out.push(format!("element {} does not act bijectively", g));
            }
        }
        for g in self.group.elements() {
            for h in self.group.elements() {
                let gh = self.group.mul(g, h);
                if gp.objects().any(|x| self.act_obj(g, self.act_obj(h, x)) != self.act_obj(gh, x))
                {
                    out.push(format!("object action not multiplicative at ({g},{h})"));
                    break;
                }
                if gp
                    .arrows()
                    .any(|a| self.act_arrow(g, self.act_arrow(h, a)) != self.act_arrow(gh, a))
                {
                    out.push(format!("arrow action not multiplicative at ({g},{h})"));
                    break;
                }
            }
        }
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    /// (g . f)(h₁, ..., h_k) = f(g⁻¹h₁, ..., g⁻¹h_k); degree 0 acts through
    /// objects.
    pub fn act_cochain(&self, g: u16, c: &Cochain, tuples: &Tuples) -> Cochain {
        let gi = self.group.inv(g);
        if c.degree == 0 {
            let values: Vec<Tor> =
                self.gp.objects().map(|x| c.values[self.act_obj(gi, x) as usize]).collect();
            return Cochain { gp: c.gp.clone(), degree: 0, values };
        }
        let mut buf = vec![0u32; c.degree];
        Cochain::from_fn(tuples, c.degree, |arrows| {
            for (i, &a) in arrows.iter().enumerate() {
                buf[i] = self.act_arrow(gi, a);
            }
            c.eval(tuples, &buf)
        })
    }
}

/// Spec-facing alias: axioms of a claimed action.
pub fn check_action(action: &GroupAction) -> Vec<String> {
    action.validate()
}

/// Isomorphism search constrained to intertwine two actions of the same
/// group. The two actions must literally share the acting group's
/// multiplication table.
pub fn find_equivariant_isomorphism(
    a: &GroupAction,
    b: &GroupAction,
    cap: usize,
) -> Result<Option<GroupoidHom>, GroupoidError> {
    assert_eq!(a.group.order, b.group.order, "acting groups differ");
    assert_eq!(a.group.mul_rows(), b.group.mul_rows(), "acting groups differ");
    crate::groupoid::find_isomorphism_where(&a.gp, &b.gp, cap, |hom| {
        a.group.elements().all(|g| {
            a.gp.arrows().all(|ar| {
                hom.arrow_map[a.act_arrow(g, ar) as usize]
                    == b.act_arrow(g, hom.arrow_map[ar as usize])
            }) && a.gp.objects().all(|x| {
                hom.obj_map[a.act_obj(g, x) as usize] == b.act_obj(g, hom.obj_map[x as usize])
            })
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groupoid::FiniteGroupoid;
    use std::sync::Arc;

    fn swap_action() -> GroupAction {
        let gp: GpRef = Arc::new(FiniteGroupoid::pair_groupoid(2));
        GroupAction::from_fn(
            FiniteGroup::cyclic(2),
            gp,
            |g, x| if g == 1 { 1 - x } else { x },
            |g, a| {
                if g == 1 {
                    let (i, j) = (a / 2, a % 2);
                    (1 - i) * 2 + (1 - j)
                } else {
                    a
                }
            },
        )
    }

    #[test]
    fn swap_is_an_action() {
        let act = swap_action();
        assert!(act.is_valid());
        assert_eq!(act.act_arrow(1, 1), 2);
        assert!(act.as_hom(1).is_isomorphism(&act.gp, &act.gp));
    }

    #[test]
    fn conjugation_action_of_quaternions() {
        let q = FiniteGroup::quaternion();
        let gp: GpRef = Arc::new(FiniteGroupoid::from_group(&q));
        let qc = q.clone();
        let act = GroupAction::from_fn(
            q,
            gp,
            |_, x| x,
            move |g, a| u32::from(qc.conj(g, a as u16)),
        );
        assert!(act.is_valid());
        // conjugation by i sends j to -j
        assert_eq!(act.act_arrow(2, 4), 5);
    }

    #[test]
    fn broken_action_is_reported() {
        let gp: GpRef = Arc::new(FiniteGroupoid::pair_groupoid(2));
        // swaps objects but not arrows: not a functor
        let act = GroupAction::from_fn(
            FiniteGroup::cyclic(2),
            gp,
            |g, x| if g == 1 { 1 - x } else { x },
            |_, a| a,
        );
        assert!(!act.is_valid());
        // acts by functors but not multiplicatively: order-4 rotation for Z/2
        let gp4: GpRef = Arc::new(FiniteGroupoid::pair_groupoid(4));
        let rot = GroupAction::from_fn(
            FiniteGroup::cyclic(2),
            gp4,
            |g, x| if g == 1 { (x + 1) % 4 } else { x },
            |g, a| {
                if g == 1 {
                    let (i, j) = (a / 4, a % 4);
                    ((i + 1) % 4) * 4 + (j + 1) % 4
                } else {
                    a
                }
            },
        );
        let v = rot.validate();
        assert!(v.iter().any(|s| s.contains("not multiplicative")));
    }

    #[test]
    fn cochain_action_is_compatible() {
        let act = swap_action();
        let t = Tuples::new(&act.gp, 2);
        let c = Cochain::from_fn(&t, 1, |arr| Tor::from_level(arr[0] as i64, 8));
        let gc = act.act_cochain(1, &c, &t);
        // (1.c)(a) = c(1⁻¹ a): arrow 1 (1->0) maps to arrow 2 under the swap
        assert_eq!(gc.values[1], c.values[2]);
        // acting twice is the identity
        let back = act.act_cochain(1, &gc, &t);
        assert_eq!(back, c);
        // action commutes with the differential
        let dc = t.differential(&c);
        let gdc = act.act_cochain(1, &dc, &t);
        let dgc = t.differential(&gc);
        assert_eq!(gdc, dgc);
    }

    #[test]
    fn equivariant_iso_search() {
        let a = swap_action();
        let b = swap_action();
        let found = find_equivariant_isomorphism(&a, &b, 64).unwrap();
        assert!(found.is_some());
        // against the trivial action no equivariant iso exists
        let trivial =
            GroupAction::trivial(FiniteGroup::cyclic(2), Arc::new(FiniteGroupoid::pair_groupoid(2)));
        assert!(find_equivariant_isomorphism(&a, &trivial, 64).unwrap().is_none());
    }
}
