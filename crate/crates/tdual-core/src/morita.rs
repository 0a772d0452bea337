//! Morita equivalence bimodules between finite groupoids and their
//! mechanical verification.
//!
//! A bimodule is a finite carrier with two anchor maps and commuting
//! left/right actions. `verify` re-derives every axiom from the tables:
//! action laws, freeness on both sides, and the two quotient bijections
//! (left orbits against right objects and vice versa). Properness is
//! vacuous for finite carriers and reported as a note.

use crate::action::GroupAction;
use crate::cochain::PairCochain;
use crate::cohomology::verify_witness_fast;
use crate::constructions::{
    crossed_product, delta_rho, extension, fibred_gerbe, lift_hom, principal_bundle,
    ConstructionError, CrossedProduct, Extension, GroupValuedHom, InducedTakai,
    NonabelianCocycle, PrincipalBundle,
};
use crate::group::{FiniteGroup, GroupError, Quotient, Subgroup};
use crate::groupoid::{fibers, FiniteGroupoid, GpRef, GroupoidHom};
use crate::torus::Tor;
use std::sync::Arc;
use thiserror::Error;

/// (left, right)-bimodule on an indexed finite carrier.
///
/// Conventions: the left groupoid acts along `lanchor` with
/// `lanchor(γ·p) = dst(γ)` (defined iff `src(γ) = lanchor(p)`), the right
/// groupoid acts along `ranchor` with `ranchor(p·η) = src(η)` (defined iff
/// `dst(η) = ranchor(p)`).
#[derive(Clone, Debug)]
pub struct Bimodule {
    pub left: GpRef,
    pub right: GpRef,
    pub lanchor: Vec<u32>,
    pub ranchor: Vec<u32>,
    /// Points grouped by lanchor.
    lpoints: Vec<u32>,
    loffsets: Vec<u32>,
    lpos: Vec<u32>,
    /// left_table[left_off[γ] + lpos[p]] = γ·p.
    left_off: Vec<u32>,
    left_table: Vec<u32>,
    /// right_table[right_off[p] + pos_in_dst(η)] = p·η.
    right_off: Vec<u32>,
    right_table: Vec<u32>,
}

impl Bimodule {
    /// Tabulates the actions; `lact` sees (arrow, point) with
    /// src(arrow) = lanchor(point); `ract` sees (point, arrow) with
    /// dst(arrow) = ranchor(point).
    pub fn from_actions(
        left: &GpRef,
        right: &GpRef,
        lanchor: Vec<u32>,
        ranchor: Vec<u32>,
        lact: impl Fn(u32, u32) -> u32,
        ract: impl Fn(u32, u32) -> u32,
    ) -> Bimodule {
        let n = lanchor.len();
        assert_eq!(n, ranchor.len());
        assert!(lanchor.iter().all(|&x| (x as usize) < left.object_count));
        assert!(ranchor.iter().all(|&x| (x as usize) < right.object_count));
        let (lpoints, loffsets, lpos) = fibers(left.object_count, &lanchor);
        let mut left_off = Vec::with_capacity(left.arrow_count());
        let mut total: u64 = 0;
        for g in left.arrows() {
            left_off.push(total as u32);
            let x = left.src(g) as usize;
            total += u64::from(loffsets[x + 1] - loffsets[x]);
            assert!(total <= u32::MAX as u64, "left action table too large");
        }
        let mut left_table = vec![0u32; total as usize];
        for g in left.arrows() {
            let x = left.src(g) as usize;
            let base = left_off[g as usize] as usize;
            for (k, &p) in lpoints[loffsets[x] as usize..loffsets[x + 1] as usize]
                .iter()
                .enumerate()
            {
                let q = lact(g, p);
                assert!((q as usize) < n, "left action out of range");
                left_table[base + k] = q;
            }
        }
        let mut right_off = Vec::with_capacity(n);
        let mut rtotal: u64 = 0;
        for p in 0..n {
            right_off.push(rtotal as u32);
            rtotal += right.dst_fiber(ranchor[p]).len() as u64;
            assert!(rtotal <= u32::MAX as u64, "right action table too large");
        }
        let mut right_table = vec![0u32; rtotal as usize];
        for p in 0..n as u32 {
            let base = right_off[p as usize] as usize;
            for (k, &h) in right.dst_fiber(ranchor[p as usize]).iter().enumerate() {
                let q = ract(p, h);
                assert!((q as usize) < n, "right action out of range");
                right_table[base + k] = q;
            }
        }
        Bimodule {
            left: left.clone(),
            right: right.clone(),
            lanchor,
            ranchor,
            lpoints,
            loffsets,
            lpos,
            left_off,
            left_table,
            right_off,
            right_table,
        }
    }

    pub fn size(&self) -> usize {
        self.lanchor.len()
    }

    /// Points with a given left anchor.
    pub fn lfiber(&self, x: u32) -> &[u32] {
        let (lo, hi) = (self.loffsets[x as usize], self.loffsets[x as usize + 1]);
        &self.lpoints[lo as usize..hi as usize]
    }

    #[inline]
    pub fn lact_uc(&self, g: u32, p: u32) -> u32 {
        debug_assert_eq!(self.left.src(g), self.lanchor[p as usize]);
        self.left_table[(self.left_off[g as usize] + self.lpos[p as usize]) as usize]
    }

    pub fn lact(&self, g: u32, p: u32) -> Option<u32> {
        if self.left.src(g) == self.lanchor[p as usize] {
            Some(self.lact_uc(g, p))
        } else {
            None
        }
    }

    #[inline]
    pub fn ract_uc(&self, p: u32, h: u32) -> u32 {
        debug_assert_eq!(self.right.dst(h), self.ranchor[p as usize]);
        self.right_table[(self.right_off[p as usize] + self.right.pos_in_dst(h)) as usize]
    }

    pub fn ract(&self, p: u32, h: u32) -> Option<u32> {
        if self.right.dst(h) == self.ranchor[p as usize] {
            Some(self.ract_uc(p, h))
        } else {
            None
        }
    }

    /// Dense id of a defined left pair (arrow, point).
    #[inline]
    pub fn left_pair_id(&self, g: u32, p: u32) -> u32 {
        debug_assert_eq!(self.left.src(g), self.lanchor[p as usize]);
        self.left_off[g as usize] + self.lpos[p as usize]
    }

    pub fn left_pair_count(&self) -> usize {
        self.left_table.len()
    }

    /// Dense id of a defined right pair (point, arrow).
    #[inline]
    pub fn right_pair_id(&self, p: u32, h: u32) -> u32 {
        debug_assert_eq!(self.right.dst(h), self.ranchor[p as usize]);
        self.right_off[p as usize] + self.right.pos_in_dst(h)
    }

    pub fn right_pair_count(&self) -> usize {
        self.right_table.len()
    }

    /// Visits every defined left pair (arrow, point).
    pub fn for_each_left_pair(&self, mut f: impl FnMut(u32, u32)) {
        for g in self.left.arrows() {
            for &p in self.lfiber(self.left.src(g)) {
                f(g, p);
            }
        }
    }

    /// Visits every defined right pair (point, arrow).
    pub fn for_each_right_pair(&self, mut f: impl FnMut(u32, u32)) {
        for p in 0..self.size() as u32 {
            for &h in self.right.dst_fiber(self.ranchor[p as usize]) {
                f(p, h);
            }
        }
    }

    /// Full axiom check. Lines starting with "violation:" are failures;
    /// the rest are notes.
    pub fn verify(&self) -> Vec<String> {
        let mut out = Vec::new();
        let n = self.size();
        let left = &self.left;
        let right = &self.right;

        // unit actions
        for p in 0..n as u32 {
            if self.lact_uc(left.unit(self.lanchor[p as usize]), p) != p {
                out.push(format!("violation: left unit moves point {p}"));
            }
            if self.ract_uc(p, right.unit(self.ranchor[p as usize])) != p {
                out.push(format!("violation: right unit moves point {p}"));
            }
        }

        // anchor transport
        let mut bad_anchor = 0usize;
        self.for_each_left_pair(|g, p| {
            let q = self.lact_uc(g, p);
            if self.lanchor[q as usize] != left.dst(g)
                || self.ranchor[q as usize] != self.ranchor[p as usize]
            {
                bad_anchor += 1;
            }
        });
        self.for_each_right_pair(|p, h| {
            let q = self.ract_uc(p, h);
            if self.ranchor[q as usize] != right.src(h)
                || self.lanchor[q as usize] != self.lanchor[p as usize]
            {
                bad_anchor += 1;
            }
        });
        if bad_anchor > 0 {
            out.push(format!("violation: anchors move wrongly on {bad_anchor} pairs"));
        }

        // associativity of both actions
        let mut bad = 0usize;
        left.for_each_pair(|g1, g2, _| {
            let g12 = left.compose_uc(g1, g2);
            for &p in self.lfiber(left.src(g2)) {
                if self.lact_uc(g12, p) != self.lact_uc(g1, self.lact_uc(g2, p)) {
                    bad += 1;
                }
            }
        });
        if bad > 0 {
            out.push(format!("violation: left action not associative on {bad} triples"));
        }
        bad = 0;
        self.for_each_right_pair(|p, h1| {
            let q = self.ract_uc(p, h1);
            for &h2 in right.dst_fiber(right.src(h1)) {
                if self.ract_uc(q, h2) != self.ract_uc(p, right.compose_uc(h1, h2)) {
                    bad += 1;
                }
            }
        });
        if bad > 0 {
            out.push(format!("violation: right action not associative on {bad} triples"));
        }

        // actions commute
        bad = 0;
        self.for_each_left_pair(|g, p| {
            let gp = self.lact_uc(g, p);
            for &h in right.dst_fiber(self.ranchor[p as usize]) {
                if self.ract_uc(gp, h) != self.lact_uc(g, self.ract_uc(p, h)) {
                    bad += 1;
                }
            }
        });
        if bad > 0 {
            out.push(format!("violation: actions do not commute on {bad} pairs"));
        }

        // freeness: stamp targets per point
        let mut stamp = vec![u32::MAX; n];
        for p in 0..n as u32 {
            for &g in left.src_fiber(self.lanchor[p as usize]) {
                let q = self.lact_uc(g, p);
                if stamp[q as usize] == p {
                    out.push(format!("violation: left action not free at point {p}"));
                    break;
                }
                stamp[q as usize] = p;
            }
        }
        let mut stamp = vec![u32::MAX; n];
        for p in 0..n as u32 {
            for &h in right.dst_fiber(self.ranchor[p as usize]) {
                let q = self.ract_uc(p, h);
                if stamp[q as usize] == p {
                    out.push(format!("violation: right action not free at point {p}"));
                    break;
                }
                stamp[q as usize] = p;
            }
        }

        // quotient bijections
        let lorbits = self.orbits(true);
        match quotient_bijection(&lorbits, &self.ranchor, right.object_count) {
            Ok(()) => {}
            Err(e) => out.push(format!("violation: left-quotient map to right objects {e}")),
        }
        let rorbits = self.orbits(false);
        match quotient_bijection(&rorbits, &self.lanchor, left.object_count) {
            Ok(()) => {}
            Err(e) => out.push(format!("violation: right-quotient map to left objects {e}")),
        }

        out.push("note: properness of the anchor maps is vacuous (finite)".into());
        out
    }

    /// Orbit index per point for the left (true) or right (false) action.
    pub fn orbits(&self, left_side: bool) -> Vec<u32> {
        let n = self.size();
        let mut parent: Vec<u32> = (0..n as u32).collect();
        fn find(parent: &mut [u32], mut x: u32) -> u32 {
            while parent[x as usize] != x {
                parent[x as usize] = parent[parent[x as usize] as usize];
                x = parent[x as usize];
            }
            x
        }
        let union = |parent: &mut Vec<u32>, a: u32, b: u32| {
            let (ra, rb) = (find(parent, a), find(parent, b));
            if ra != rb {
                parent[ra as usize] = rb;
            }
        };
        if left_side {
            self.for_each_left_pair(|g, p| union(&mut parent, p, self.lact_uc(g, p)));
        } else {
            self.for_each_right_pair(|p, h| union(&mut parent, p, self.ract_uc(p, h)));
        }
        let mut label = vec![u32::MAX; n];
        let mut next = 0u32;
        let mut out = vec![0u32; n];
        for p in 0..n as u32 {
            let r = find(&mut parent, p);
            if label[r as usize] == u32::MAX {
                label[r as usize] = next;
                next += 1;
            }
            out[p as usize] = label[r as usize];
        }
        out
    }

    pub fn is_equivalence(&self) -> bool {
        self.verify().iter().all(|l| !l.starts_with("violation:"))
    }
}

/// Checks that orbit -> anchor value is a well-defined bijection onto the
/// object set.
fn quotient_bijection(orbit: &[u32], anchor: &[u32], objects: usize) -> Result<(), String> {
    let count = orbit.iter().copied().max().map_or(0, |m| m as usize + 1);
    let mut value = vec![u32::MAX; count];
    for (p, &o) in orbit.iter().enumerate() {
        let a = anchor[p];
        if value[o as usize] == u32::MAX {
            value[o as usize] = a;
        } else if value[o as usize] != a {
            return Err(format!("not constant on orbit {o}"));
        }
    }
    if count != objects {
        return Err(format!("has {count} orbits but {objects} objects"));
    }
    let mut seen = vec![false; objects];
    for &v in &value {
        if seen[v as usize] {
            return Err("not injective on orbits".into());
        }
        seen[v as usize] = true;
    }
    Ok(())
}

/// The identity equivalence: arrows of 𝒢 as a (𝒢, 𝒢)-bimodule under
/// composition.
pub fn identity_bimodule(gp: &GpRef) -> Bimodule {
    from_homomorphism(&GroupoidHom::identity(gp), gp, gp).0
}

/// P_φ of a functor φ: 𝒢 → ℋ: carrier {(x, η) : φ₀(x) = dst(η)}, a
/// (𝒢, ℋ)-bimodule with γ·(x,η) = (dst γ, φ(γ)∘η) and (x,η)·η' = (x, η∘η').
/// It verifies as an equivalence exactly when φ is an essential
/// equivalence. Returns the bimodule and the point data (x, η).
pub fn from_homomorphism(
    phi: &GroupoidHom,
    g: &GpRef,
    h: &GpRef,
) -> (Bimodule, Vec<(u32, u32)>) {
    debug_assert!(phi.is_functor(g, h));
    let mut points = Vec::new();
    let mut index = vec![u32::MAX; h.arrow_count() * g.object_count];
    for x in g.objects() {
        for &eta in h.dst_fiber(phi.obj_map[x as usize]) {
            index[x as usize * h.arrow_count() + eta as usize] = points.len() as u32;
            points.push((x, eta));
        }
    }
    let lanchor: Vec<u32> = points.iter().map(|&(x, _)| x).collect();
    let ranchor: Vec<u32> = points.iter().map(|&(_, eta)| h.src(eta)).collect();
    let pts = points.clone();
    let idx = move |x: u32, eta: u32| index[x as usize * h.arrow_count() + eta as usize];
    let hc = h.clone();
    let phi_arr = phi.arrow_map.clone();
    let bi = Bimodule::from_actions(
        g,
        h,
        lanchor,
        ranchor,
        {
            let pts = pts.clone();
            let idx = idx.clone();
            let hc = hc.clone();
            let g = g.clone();
            move |gam, p| {
                let (_, eta) = pts[p as usize];
                idx(g.dst(gam), hc.compose_uc(phi_arr[gam as usize], eta))
            }
        },
        {
            let pts = pts.clone();
            move |p, etap| {
                let (x, eta) = pts[p as usize];
                idx(x, hc.compose_uc(eta, etap))
            }
        },
    );
    (bi, points)
}

/// Q_φ, the opposite orientation: carrier {(η, x) : src(η) = φ₀(x)}, an
/// (ℋ, 𝒢)-bimodule with h·(η,x) = (h∘η, x) and (η,x)·k = (η∘φ(k), src k).
pub fn op_of_homomorphism(
    phi: &GroupoidHom,
    g: &GpRef,
    h: &GpRef,
) -> (Bimodule, Vec<(u32, u32)>) {
    debug_assert!(phi.is_functor(g, h));
    let mut points = Vec::new();
    let mut index = vec![u32::MAX; h.arrow_count() * g.object_count];
    for x in g.objects() {
        for eta in h.arrows() {
            if h.src(eta) == phi.obj_map[x as usize] {
                index[x as usize * h.arrow_count() + eta as usize] = points.len() as u32;
                points.push((eta, x));
            }
        }
    }
    let lanchor: Vec<u32> = points.iter().map(|&(eta, _)| h.dst(eta)).collect();
    let ranchor: Vec<u32> = points.iter().map(|&(_, x)| x).collect();
    let pts = points.clone();
    let idx = move |x: u32, eta: u32| index[x as usize * h.arrow_count() + eta as usize];
    let hc = h.clone();
    let gc = g.clone();
    let phi_arr = phi.arrow_map.clone();
    let bi = Bimodule::from_actions(
        h,
        g,
        lanchor,
        ranchor,
        {
            let pts = pts.clone();
            let idx = idx.clone();
            let hc = hc.clone();
            move |ha, p| {
                let (eta, x) = pts[p as usize];
                idx(x, hc.compose_uc(ha, eta))
            }
        },
        {
            let pts = pts.clone();
            move |p, k| {
                let (eta, x) = pts[p as usize];
                debug_assert_eq!(gc.dst(k), x);
                idx(gc.src(k), hc.compose_uc(eta, phi_arr[k as usize]))
            }
        },
    );
    (bi, points)
}

/// An action of a group on a bimodule's carrier, for equivariance checks.
#[derive(Clone, Debug)]
pub struct CarrierAction {
    /// Flat table, group element major: on_points[g * size + p].
    pub on_points: Vec<u32>,
}

impl CarrierAction {
    pub fn from_fn(order: usize, size: usize, f: impl Fn(u16, u32) -> u32) -> CarrierAction {
        let mut on_points = Vec::with_capacity(order * size);
        for g in 0..order as u16 {
            for p in 0..size as u32 {
                on_points.push(f(g, p));
            }
        }
        CarrierAction { on_points }
    }

    #[inline]
    pub fn act(&self, size: usize, g: u16, p: u32) -> u32 {
        self.on_points[usize::from(g) * size + p as usize]
    }
}

/// Equivariance of a bimodule under compatible group actions on the left
/// groupoid, the right groupoid, and the carrier.
pub fn equivariant_check(
    bi: &Bimodule,
    act_left: &GroupAction,
    act_right: &GroupAction,
    act_points: &CarrierAction,
) -> Vec<String> {
    let mut out = Vec::new();
    let n = bi.size();
    let grp = &act_left.group;
    if act_right.group.mul_rows() != grp.mul_rows() {
        out.push("violation: acting groups differ".into());
        return out;
    }
    if act_points.on_points.len() != grp.order * n {
        out.push("violation: carrier action has wrong size".into());
        return out;
    }
    // group laws on the carrier
    for p in 0..n as u32 {
        if act_points.act(n, grp.id, p) != p {
            out.push("violation: identity moves a carrier point".into());
            break;
        }
    }
    'outer: for g in grp.elements() {
        for h in grp.elements() {
            let gh = grp.mul(g, h);
            for p in 0..n as u32 {
                if act_points.act(n, g, act_points.act(n, h, p)) != act_points.act(n, gh, p) {
                    out.push(format!("violation: carrier action not multiplicative at ({g},{h})"));
                    break 'outer;
                }
            }
        }
    }
    // anchors are equivariant
    let mut bad = 0usize;
    for g in grp.elements() {
        for p in 0..n as u32 {
            let q = act_points.act(n, g, p);
            if bi.lanchor[q as usize] != act_left.act_obj(g, bi.lanchor[p as usize])
                || bi.ranchor[q as usize] != act_right.act_obj(g, bi.ranchor[p as usize])
            {
                bad += 1;
            }
        }
    }
    if bad > 0 {
        out.push(format!("violation: anchors not equivariant at {bad} points"));
    }
    // actions are equivariant
    let mut bad_l = 0usize;
    let mut bad_r = 0usize;
    for g in grp.elements() {
        bi.for_each_left_pair(|gam, p| {
            let lhs = act_points.act(n, g, bi.lact_uc(gam, p));
            let rhs = bi.lact(act_left.act_arrow(g, gam), act_points.act(n, g, p));
            if rhs != Some(lhs) {
                bad_l += 1;
            }
        });
        bi.for_each_right_pair(|p, h| {
            let lhs = act_points.act(n, g, bi.ract_uc(p, h));
            let rhs = bi.ract(act_points.act(n, g, p), act_right.act_arrow(g, h));
            if rhs != Some(lhs) {
                bad_r += 1;
            }
        });
    }
    if bad_l > 0 {
        out.push(format!("violation: left action not equivariant on {bad_l} pairs"));
    }
    if bad_r > 0 {
        out.push(format!("violation: right action not equivariant on {bad_r} pairs"));
    }
    out
}

#[derive(Debug, Error)]
pub enum MoritaError {
    #[error("invalid data: {0}")]
    Invalid(String),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
    #[error(transparent)]
    Group(#[from] GroupError),
    #[error(transparent)]
    Groupoid(#[from] crate::groupoid::GroupoidError),
    #[error("witness equation violated: {0}")]
    Witness(String),
}

/// Input for the named equivalences: a base groupoid, an ambient group, a
/// normal subgroup, and a transition homomorphism into the quotient.
#[derive(Clone, Debug)]
pub struct StandardData {
    pub base: GpRef,
    pub group: FiniteGroup,
    pub normal: Subgroup,
    /// Lands in the canonical quotient group of `group` by `normal`.
    pub rho_bar: GroupValuedHom,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StandardKind {
    /// Inclusion of the fibred product groupoid into the crossed product of
    /// the bundle, (g,γ) ↦ (g, eN, γ).
    Iota,
    /// Quotient of the induced groupoid of the fibred product onto the
    /// bundle, (g, g', γ) ↦ (gN, γ).
    Kappa,
    /// Orbit quotient of the bundle onto the unit groupoid of its orbit
    /// space; essential exactly when the bundle is principal.
    Quotient,
    /// The bimodule G×𝒢 between G⋉(G/N⋊𝒢) and N⋊𝒢.
    Imprimitivity,
}

fn validate_standard(data: &StandardData) -> Result<Quotient, MoritaError> {
    if !data.normal.is_normal(&data.group) {
        return Err(MoritaError::Invalid("the chosen subgroup is not normal".into()));
    }
    let q = data.group.quotient(&data.normal)?;
    if data.rho_bar.group.mul_rows() != q.group.mul_rows() {
        return Err(MoritaError::Invalid(
            "rho_bar must land in the canonical quotient group".into(),
        ));
    }
    let v = data.rho_bar.validate(&data.base);
    if !v.is_empty() {
        return Err(MoritaError::Invalid(v.join("; ")));
    }
    Ok(q)
}

/// The ambient group acting on the bundle by translation through the
/// quotient projection.
fn full_translation(amb: &FiniteGroup, q: &Quotient, bundle: &PrincipalBundle) -> GroupAction {
    let no = bundle.base.object_count as u32;
    let na = bundle.base.arrow_count() as u32;
    let (proj, qg) = (q.proj.clone(), q.group.clone());
    let (proj2, qg2) = (proj.clone(), qg.clone());
    GroupAction::from_fn(
        amb.clone(),
        bundle.gp.clone(),
        move |g, o| u32::from(qg.mul(proj[usize::from(g)], (o / no) as u16)) * no + o % no,
        move |g, a| u32::from(qg2.mul(proj2[usize::from(g)], (a / na) as u16)) * na + a % na,
    )
}

/// Everything materialized by the bundle-imprimitivity equivalence: the
/// bundle, the crossed product acting side, the extension side with its
/// cocycle, the lift, and the carrier G×𝒢₁ bimodule with moment maps
/// (g,γ) ↦ (gρ̃(γ)⁻¹N, rγ) and (g,γ) ↦ sγ.
pub struct ImprimitivityPieces {
    pub quotient: Quotient,
    pub bundle: PrincipalBundle,
    pub translation: GroupAction,
    pub hh: CrossedProduct,
    pub cocycle: NonabelianCocycle,
    pub gerbe: Extension,
    pub embed: Vec<u16>,
    pub rho_tilde: Vec<u16>,
    pub bimodule: Bimodule,
}

/// Builds the equivalence between ℋ = G⋉(G/N⋊𝒢) and 𝒦 = N⋊𝒢 on the
/// carrier G×𝒢₁, acting by (g₁,t,γ₁)·(g₂,γ₂) = (g₁g₂, γ₁γ₂) and
/// (g,γ₁)·(n,γ₂) = (gnρ̃(γ₂), γ₁γ₂).
pub fn imprimitivity_pieces(data: &StandardData) -> Result<ImprimitivityPieces, MoritaError> {
    let q = validate_standard(data)?;
    let amb = &data.group;
    let base = &data.base;
    let rho_tilde = lift_hom(base, &data.rho_bar, &q, amb);
    let bundle = principal_bundle(base, &data.rho_bar)?;
    let translation = full_translation(amb, &q, &bundle);
    let hh = crossed_product(&translation)?;
    let (cocycle, embed) = delta_rho(base, amb, &data.normal, &rho_tilde)?;
    let gerbe = extension(&cocycle)?;
    let na = base.arrow_count() as u32;
    let mut lanchor = Vec::with_capacity(amb.order * base.arrow_count());
    let mut ranchor = Vec::with_capacity(amb.order * base.arrow_count());
    for g in amb.elements() {
        for gamma in base.arrows() {
            let t = q.proj[usize::from(amb.mul(g, amb.inv(rho_tilde[gamma as usize])))];
            lanchor.push(bundle.encode_obj(t, base.dst(gamma)));
            ranchor.push(base.src(gamma));
        }
    }
    let bimodule = Bimodule::from_actions(
        &hh.gp,
        &gerbe.gp,
        lanchor,
        ranchor,
        |h, p| {
            let (g1, inner) = hh.decode(h);
            let (_, gamma1) = bundle.decode_arrow(inner);
            let (g2, gamma2) = ((p / na) as u16, p % na);
            u32::from(amb.mul(g1, g2)) * na + base.compose_uc(gamma1, gamma2)
        },
        |p, k| {
            let (g, gamma1) = ((p / na) as u16, p % na);
            let (n, gamma2) = gerbe.decode(k);
            let moved = amb.mul(amb.mul(g, embed[usize::from(n)]), rho_tilde[gamma2 as usize]);
            u32::from(moved) * na + base.compose_uc(gamma1, gamma2)
        },
    );
    Ok(ImprimitivityPieces {
        quotient: q,
        bundle,
        translation,
        hh,
        cocycle,
        gerbe,
        embed,
        rho_tilde,
        bimodule,
    })
}

/// Materializes one of the named equivalence bimodules.
pub fn standard_equivalences(
    kind: StandardKind,
    data: &StandardData,
) -> Result<Bimodule, MoritaError> {
    let q = validate_standard(data)?;
    let amb = &data.group;
    let base = &data.base;
    match kind {
        StandardKind::Iota => {
            let bundle = principal_bundle(base, &data.rho_bar)?;
            let translation = full_translation(amb, &q, &bundle);
            let hh = crossed_product(&translation)?;
            let fg = fibred_gerbe(base, amb, &q, &data.rho_bar)?;
            let en = q.group.id;
            let phi = GroupoidHom {
                obj_map: base.objects().map(|x| bundle.encode_obj(en, x)).collect(),
                arrow_map: fg
                    .gp
                    .arrows()
                    .map(|j| {
                        let (g, gamma) = fg.arrow_data[j as usize];
                        hh.encode(g, bundle.encode_arrow(en, gamma))
                    })
                    .collect(),
            };
            if !phi.is_functor(&fg.gp, &hh.gp) {
                return Err(MoritaError::Invalid("iota is not functorial".into()));
            }
            Ok(from_homomorphism(&phi, &fg.gp, &hh.gp).0)
        }
        StandardKind::Kappa => {
            let bundle = principal_bundle(base, &data.rho_bar)?;
            let fg = fibred_gerbe(base, amb, &q, &data.rho_bar)?;
            let nf = fg.gp.arrow_count() as u32;
            let no = base.object_count as u32;
            let mut endpoints = Vec::with_capacity(amb.order * nf as usize);
            for g in amb.elements() {
                for j in fg.gp.arrows() {
                    let (gj, gamma) = fg.arrow_data[j as usize];
                    endpoints.push((
                        u32::from(amb.mul(g, gj)) * no + base.src(gamma),
                        u32::from(g) * no + base.dst(gamma),
                    ));
                }
            }
            let fgc = fg.gp.clone();
            let induced: GpRef = Arc::new(FiniteGroupoid::from_parts(
                amb.order * base.object_count,
                &endpoints,
                move |a, b| (a / nf) * nf + fgc.compose_uc(a % nf, b % nf),
            )?);
            let kappa = GroupoidHom {
                obj_map: induced
                    .objects()
                    .map(|o| bundle.encode_obj(q.proj[(o / no) as usize], o % no))
                    .collect(),
                arrow_map: induced
                    .arrows()
                    .map(|a| {
                        let (g, j) = ((a / nf) as u16, a % nf);
                        let (_, gamma) = fg.arrow_data[j as usize];
                        bundle.encode_arrow(q.proj[usize::from(g)], gamma)
                    })
                    .collect(),
            };
            if !kappa.is_functor(&induced, &bundle.gp) {
                return Err(MoritaError::Invalid("kappa is not functorial".into()));
            }
            Ok(from_homomorphism(&kappa, &induced, &bundle.gp).0)
        }
        StandardKind::Quotient => {
            let bundle = principal_bundle(base, &data.rho_bar)?;
            let (comp, ncomp) = bundle.gp.components();
            let endpoints: Vec<(u32, u32)> = (0..ncomp as u32).map(|i| (i, i)).collect();
            let units: GpRef =
                Arc::new(FiniteGroupoid::from_parts(ncomp, &endpoints, |a, _| a)?);
            let qhom = GroupoidHom {
                obj_map: comp.clone(),
                arrow_map: bundle.gp.arrows().map(|a| comp[bundle.gp.dst(a) as usize]).collect(),
            };
            Ok(from_homomorphism(&qhom, &bundle.gp, &units).0)
        }
        StandardKind::Imprimitivity => Ok(imprimitivity_pieces(data)?.bimodule),
    }
}

/// Twists a plain equivalence P between ℋ and 𝒦 into one between the
/// extensions M⋊^ψℋ and M⋊^χ𝒦 along a witness (μ, ν): the carrier is
/// M×P with (m₁,h)·(m₂,p) = (m₁m₂μ(h,p), hp) and
/// (m₁,p)·(m₂,k) = (m₁m₂ν(p,k), pk). The witness is checked against the
/// descent equations first; a failure names the offending triple.
pub fn twisted_extension_bimodule(
    p: &Bimodule,
    mu: &[Tor],
    nu: &[Tor],
    psi: &PairCochain,
    chi: &PairCochain,
) -> Result<Bimodule, MoritaError> {
    if psi.level != chi.level {
        return Err(MoritaError::Invalid(format!(
            "cocycle levels differ: {} vs {}",
            psi.level, chi.level
        )));
    }
    let level = psi.level;
    if psi.gp.arrow_count() != p.left.arrow_count()
        || chi.gp.arrow_count() != p.right.arrow_count()
    {
        return Err(MoritaError::Invalid(
            "cocycles do not live over the bimodule's groupoids".into(),
        ));
    }
    if !psi.is_closed() || !psi.is_normalized() || !chi.is_closed() || !chi.is_normalized() {
        return Err(MoritaError::Invalid("both cocycles must be normalized and closed".into()));
    }
    if mu.len() != p.left_pair_count() || nu.len() != p.right_pair_count() {
        return Err(MoritaError::Invalid("witness tables have the wrong size".into()));
    }
    let to_exp = |t: &Tor| {
        t.as_level(level).map(|k| k.rem_euclid(i64::from(level)) as u32)
    };
    let mu_exp: Vec<u32> = mu
        .iter()
        .map(to_exp)
        .collect::<Option<_>>()
        .ok_or_else(|| MoritaError::Invalid("mu is not representable at the cocycle level".into()))?;
    let nu_exp: Vec<u32> = nu
        .iter()
        .map(to_exp)
        .collect::<Option<_>>()
        .ok_or_else(|| MoritaError::Invalid("nu is not representable at the cocycle level".into()))?;
    verify_witness_fast(
        p,
        level,
        |a, b| psi.eval_uc(a, b),
        |a, b| chi.eval_uc(a, b),
        |h, pt| mu_exp[p.left_pair_id(h, pt) as usize],
        |pt, k| nu_exp[p.right_pair_id(pt, k) as usize],
    )
    .map_err(MoritaError::Witness)?;
    let lext = extension(&NonabelianCocycle::from_exponents(psi))?;
    let rext = extension(&NonabelianCocycle::from_exponents(chi))?;
    let nh = p.left.arrow_count() as u32;
    let nk = p.right.arrow_count() as u32;
    let psize = p.size() as u32;
    let mut lanchor = Vec::with_capacity((level as usize) * p.size());
    let mut ranchor = Vec::with_capacity((level as usize) * p.size());
    for _ in 0..level {
        lanchor.extend_from_slice(&p.lanchor);
        ranchor.extend_from_slice(&p.ranchor);
    }
    let bi = Bimodule::from_actions(
        &lext.gp,
        &rext.gp,
        lanchor,
        ranchor,
        |a, qp| {
            let (m1, h) = (a / nh, a % nh);
            let (m2, pt) = (qp / psize, qp % psize);
            let m = (u64::from(m1)
                + u64::from(m2)
                + u64::from(mu_exp[p.left_pair_id(h, pt) as usize]))
                % u64::from(level);
            m as u32 * psize + p.lact_uc(h, pt)
        },
        |qp, b| {
            let (m2, k) = (b / nk, b % nk);
            let (m1, pt) = (qp / psize, qp % psize);
            let m = (u64::from(m1)
                + u64::from(m2)
                + u64::from(nu_exp[p.right_pair_id(pt, k) as usize]))
                % u64::from(level);
            m as u32 * psize + p.ract_uc(pt, k)
        },
    );
    Ok(bi)
}

/// The equivalence of a G-groupoid with its induced groupoid, together with
/// the data making it equivariant: the inclusion φ(γ) = (e,e,γ), the carrier
/// {(g,g⁻¹,γ)} indexed as pairs (g,γ), and the action g·(h,γ) = (gh,γ).
pub struct TakaiEquivalence {
    pub takai: InducedTakai,
    /// Left action by the induced groupoid, right action by the original.
    pub bimodule: Bimodule,
    pub phi: GroupoidHom,
    pub carrier_action: CarrierAction,
    /// φ intertwines the actions only in degenerate cases.
    pub phi_equivariant: bool,
}

impl TakaiEquivalence {
    /// Carrier pair (g,γ) as the arrow (g, g⁻¹, γ) of the induced groupoid.
    pub fn carrier_arrow(&self, p: u32) -> u32 {
        let nh = self.takai.cp.base.arrow_count() as u32;
        let (g, gamma) = ((p / nh) as u16, p % nh);
        self.takai.encode(g, self.takai.cp.group.inv(g), gamma)
    }
}

/// Builds the equivalence between induced_takai(a) and the acted-on groupoid
/// on the carrier {(g, g⁻¹, γ)}, acting by composition on the left and by
/// p·γ' = p∘φ(γ') on the right.
pub fn takai_equivalence(a: &GroupAction) -> Result<TakaiEquivalence, MoritaError> {
    let v = a.validate();
    if !v.is_empty() {
        return Err(MoritaError::Invalid(v.join("; ")));
    }
    let takai = crate::constructions::induced_takai(a)?;
    let hh = &a.gp;
    let amb = &a.group;
    let nh = hh.arrow_count() as u32;
    let tg = takai.gp().clone();
    let enc = |g: u16, gamma: u32| takai.encode(g, amb.inv(g), gamma);
    let size = amb.order * hh.arrow_count();
    let mut lanchor = Vec::with_capacity(size);
    let mut ranchor = Vec::with_capacity(size);
    for g in amb.elements() {
        for gamma in hh.arrows() {
            lanchor.push(tg.dst(enc(g, gamma)));
            ranchor.push(a.act_obj(g, hh.src(gamma)));
        }
    }
    let phi = GroupoidHom {
        obj_map: hh.objects().map(|x| takai.bundle.encode_obj(amb.id, x)).collect(),
        arrow_map: hh.arrows().map(|g| takai.encode(amb.id, amb.id, g)).collect(),
    };
    debug_assert!(phi.is_functor(hh, &tg));
    let bimodule = Bimodule::from_actions(
        &tg,
        hh,
        lanchor,
        ranchor,
        |z, pt| {
            let w = tg.compose_uc(z, enc((pt / nh) as u16, pt % nh));
            let (g2, k2, gamma2) = takai.decode(w);
            debug_assert_eq!(k2, amb.inv(g2));
            u32::from(g2) * nh + gamma2
        },
        |pt, k| {
            let w =
                tg.compose_uc(enc((pt / nh) as u16, pt % nh), phi.arrow_map[k as usize]);
            let (g2, k2, gamma2) = takai.decode(w);
            debug_assert_eq!(k2, amb.inv(g2));
            u32::from(g2) * nh + gamma2
        },
    );
    let carrier_action = CarrierAction::from_fn(amb.order, size, |g, pt| {
        u32::from(amb.mul(g, (pt / nh) as u16)) * nh + pt % nh
    });
    let phi_equivariant = amb.elements().all(|g| {
        hh.arrows().all(|gamma| {
            phi.arrow_map[a.act_arrow(g, gamma) as usize]
                == takai.bundle.translation.act_arrow(g, phi.arrow_map[gamma as usize])
        }) && hh.objects().all(|x| {
            phi.obj_map[a.act_obj(g, x) as usize]
                == takai.bundle.translation.act_obj(g, phi.obj_map[x as usize])
        })
    });
    Ok(TakaiEquivalence { takai, bimodule, phi, carrier_action, phi_equivariant })
}

/// Extends the Takai equivalence to twisted groupoids: a cocycle χ on the
/// crossed product G⋉ℋ pulls back to the induced groupoid (constant in the
/// bundle slot) and restricts to σ = χ|_ℋ along γ ↦ (e,γ); the twisted
/// carrier is M×{(g,g⁻¹,γ)} with the composition witness μ(ζ,p) = χ̃(ζ,p),
/// ν(p,γ') = χ̃(p,φγ'). Returns the untwisted pieces, the twisted bimodule,
/// and the two cocycles (χ̃ over the induced groupoid, σ over ℋ).
pub fn twisted_takai_equivalence(
    a: &GroupAction,
    chi: &PairCochain,
) -> Result<(TakaiEquivalence, Bimodule, PairCochain, PairCochain), MoritaError> {
    let te = takai_equivalence(a)?;
    let cp = &te.takai.cp;
    if chi.gp.arrow_count() != cp.gp.arrow_count() {
        return Err(MoritaError::Invalid(
            "chi must live over the crossed product of the action".into(),
        ));
    }
    if !chi.is_closed() || !chi.is_normalized() {
        return Err(MoritaError::Invalid("chi must be a normalized cocycle".into()));
    }
    let tg = te.takai.gp().clone();
    let level = chi.level;
    let chi_tilde = PairCochain::from_fn(&tg, level, |x, y| {
        chi.eval_uc(te.takai.bundle.decode_arrow(x).1, te.takai.bundle.decode_arrow(y).1)
    });
    assert!(chi_tilde.is_closed(), "pullback of a closed cocycle must be closed");
    let hh = &a.gp;
    let sigma = PairCochain::from_fn(hh, level, |x, y| {
        chi.eval_uc(cp.encode(a.group.id, x), cp.encode(a.group.id, y))
    });
    assert!(sigma.is_closed(), "restriction of a closed cocycle must be closed");
    let p = &te.bimodule;
    let mut mu = vec![Tor::ZERO; p.left_pair_count()];
    p.for_each_left_pair(|z, pt| {
        let v = chi_tilde.eval_uc(z, te.carrier_arrow(pt));
        mu[p.left_pair_id(z, pt) as usize] = Tor::from_level(i64::from(v), level);
    });
    let mut nu = vec![Tor::ZERO; p.right_pair_count()];
    p.for_each_right_pair(|pt, k| {
        let v = chi_tilde.eval_uc(te.carrier_arrow(pt), te.phi.arrow_map[k as usize]);
        nu[p.right_pair_id(pt, k) as usize] = Tor::from_level(i64::from(v), level);
    });
    let bi = twisted_extension_bimodule(p, &mu, &nu, &chi_tilde, &sigma)?;
    Ok((te, bi, chi_tilde, sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::FiniteGroup;
    use crate::groupoid::FiniteGroupoid;
    use std::sync::Arc;

    #[test]
    fn identity_bimodule_is_equivalence() {
        let gp: GpRef = Arc::new(FiniteGroupoid::pair_groupoid(3));
        let (bi, _) = from_homomorphism(&GroupoidHom::identity(&gp), &gp, &gp);
        assert_eq!(bi.size(), gp.arrow_count());
        assert!(bi.is_equivalence(), "{:?}", bi.verify());
    }

    #[test]
    fn point_into_pair_groupoid_is_essential() {
        let pt: GpRef = Arc::new(FiniteGroupoid::point());
        let p2: GpRef = Arc::new(FiniteGroupoid::pair_groupoid(2));
        // include the point as object 0
        let phi = GroupoidHom { obj_map: vec![0], arrow_map: vec![p2.unit(0)] };
        assert!(phi.is_functor(&pt, &p2));
        let (bi, _) = from_homomorphism(&phi, &pt, &p2);
        assert!(bi.is_equivalence(), "{:?}", bi.verify());
        let (qi, _) = op_of_homomorphism(&phi, &pt, &p2);
        assert!(qi.is_equivalence(), "{:?}", qi.verify());
    }

    #[test]
    fn non_full_inclusion_fails() {
        let z2: GpRef = Arc::new(FiniteGroupoid::from_group(&FiniteGroup::cyclic(2)));
        let z4: GpRef = Arc::new(FiniteGroupoid::from_group(&FiniteGroup::cyclic(4)));
        let phi = GroupoidHom { obj_map: vec![0], arrow_map: vec![0, 2] };
        let (bi, _) = from_homomorphism(&phi, &z2, &z4);
        assert!(!bi.is_equivalence());
        // the failure is the quotient bijection, not an action law
        let v = bi.verify();
        assert!(v.iter().any(|s| s.contains("quotient")), "{v:?}");
    }

    #[test]
    fn non_surjective_inclusion_fails() {
        let pt: GpRef = Arc::new(FiniteGroupoid::point());
        let two_pts: GpRef = {
            let p = FiniteGroupoid::point();
            Arc::new(FiniteGroupoid::disjoint_union(&[&p, &p]).0)
        };
        let phi = GroupoidHom { obj_map: vec![0], arrow_map: vec![two_pts.unit(0)] };
        let (bi, _) = from_homomorphism(&phi, &pt, &two_pts);
        assert!(!bi.is_equivalence());
    }

    #[test]
    fn isotropy_inclusion_into_transitive_groupoid() {
        // transitive groupoid on 2 objects with Z/2 isotropy: arrows
        // (i,j,g) = id i*4+j*2+g, src j, dst i, composing by adding g
        let z2 = FiniteGroup::cyclic(2);
        let one: GpRef = Arc::new(FiniteGroupoid::from_group(&z2));
        let arrows: Vec<(u32, u32)> = (0..8u32).map(|k| (k / 2 % 2, k / 4)).collect();
        let model: GpRef = Arc::new(
            FiniteGroupoid::from_parts(2, &arrows, |a, b| {
                (a / 4) * 4 + (b / 2 % 2) * 2 + (a + b) % 2
            })
            .unwrap(),
        );
        assert!(model.is_valid(0));
        assert_eq!(model.unit(0), 0);
        // include Z/2 as the isotropy at object 0
        let phi = GroupoidHom { obj_map: vec![0], arrow_map: vec![0, 1] };
        assert!(phi.is_functor(&one, &model), "{:?}", phi.validate(&one, &model));
        let (bi, _) = from_homomorphism(&phi, &one, &model);
        assert!(bi.is_equivalence(), "{:?}", bi.verify());
    }

    fn two_chart_data(group: FiniteGroup, gen: u16) -> StandardData {
        // pair groupoid on two charts with cross arrows carrying gen's coset
        let base: GpRef = Arc::new(FiniteGroupoid::pair_groupoid(2));
        let normal = Subgroup::closure(&group, &[gen]);
        let q = group.quotient(&normal).unwrap();
        let map: Vec<u16> = base
            .arrows()
            .map(|a| {
                let cross = base.src(a) != base.dst(a);
                if cross {
                    q.proj.iter().copied().find(|&c| c != q.group.id).unwrap_or(q.group.id)
                } else {
                    q.group.id
                }
            })
            .collect();
        let rho_bar = GroupValuedHom { group: q.group.clone(), map };
        StandardData { base, group, normal, rho_bar }
    }

    #[test]
    fn isotropy_bimodule_on_z4_with_index_two_subgroup() {
        // base a point: the carrier degenerates to G between G⋉G/N and N
        let g = FiniteGroup::cyclic(4);
        let normal = Subgroup::from_elements(&g, &[0, 2]).unwrap();
        let q = g.quotient(&normal).unwrap();
        let base: GpRef = Arc::new(FiniteGroupoid::point());
        let rho_bar = GroupValuedHom::constant(q.group.clone(), &base);
        let data = StandardData { base, group: g, normal, rho_bar };
        let pieces = imprimitivity_pieces(&data).unwrap();
        assert_eq!(pieces.bimodule.size(), 4);
        assert_eq!(pieces.hh.gp.arrow_count(), 8);
        assert_eq!(pieces.gerbe.gp.arrow_count(), 2);
        assert!(pieces.bimodule.is_equivalence(), "{:?}", pieces.bimodule.verify());
    }

    #[test]
    fn iota_into_the_crossed_product_is_essential() {
        let data = two_chart_data(FiniteGroup::cyclic(4), 2);
        let bi = standard_equivalences(StandardKind::Iota, &data).unwrap();
        assert!(bi.is_equivalence(), "{:?}", bi.verify());
        // fibred product over Z/2 keeps half of G×𝒢₁
        assert_eq!(bi.left.arrow_count(), 8);
    }

    #[test]
    fn kappa_with_full_subgroup_quotients_to_the_base() {
        let g = FiniteGroup::cyclic(2);
        let base: GpRef = Arc::new(FiniteGroupoid::pair_groupoid(2));
        let normal = Subgroup::full(&g);
        let q = g.quotient(&normal).unwrap();
        let rho_bar = GroupValuedHom::constant(q.group.clone(), &base);
        let data = StandardData { base: base.clone(), group: g, normal, rho_bar };
        let bi = standard_equivalences(StandardKind::Kappa, &data).unwrap();
        assert!(bi.is_equivalence(), "{:?}", bi.verify());
        // the right side is the trivial bundle, one copy of the base
        assert_eq!(bi.right.arrow_count(), base.arrow_count());
        assert_eq!(bi.left.arrow_count(), 2 * 2 * base.arrow_count());
    }

    #[test]
    fn kappa_on_the_moebius_transition_is_essential() {
        let data = two_chart_data(FiniteGroup::cyclic(4), 2);
        let bi = standard_equivalences(StandardKind::Kappa, &data).unwrap();
        assert!(bi.is_equivalence(), "{:?}", bi.verify());
    }

    #[test]
    fn orbit_quotient_of_a_principal_bundle_is_essential() {
        let data = two_chart_data(FiniteGroup::cyclic(4), 2);
        let bi = standard_equivalences(StandardKind::Quotient, &data).unwrap();
        assert!(bi.is_equivalence(), "{:?}", bi.verify());
        // the twisted double cover of two charts has two orbits
        assert_eq!(bi.right.object_count, 2);
    }

    #[test]
    fn orbit_quotient_fails_on_a_non_principal_bundle() {
        // a group groupoid base has isotropy, so the bundle is not principal
        let g = FiniteGroup::cyclic(2);
        let base: GpRef = Arc::new(FiniteGroupoid::from_group(&FiniteGroup::cyclic(2)));
        let normal = Subgroup::trivial(&g);
        let q = g.quotient(&normal).unwrap();
        let rho_bar = GroupValuedHom::constant(q.group.clone(), &base);
        let data = StandardData { base, group: g, normal, rho_bar };
        let bi = standard_equivalences(StandardKind::Quotient, &data).unwrap();
        assert!(!bi.is_equivalence());
    }

    #[test]
    fn imprimitivity_on_q8_with_central_fiber() {
        let g = FiniteGroup::quaternion();
        let center = g.center();
        assert_eq!(center.order(), 2);
        let data = two_chart_data(g, *center.elements.iter().find(|&&z| z != 0).unwrap());
        let pieces = imprimitivity_pieces(&data).unwrap();
        // central fiber: the conjugation slots of the cocycle are all trivial
        let id_perm: Vec<u16> = (0..2).collect();
        assert!(pieces.cocycle.tau.iter().all(|t| *t == id_perm));
        assert!(pieces.bimodule.is_equivalence(), "{:?}", pieces.bimodule.verify());
        assert_eq!(pieces.bimodule.size(), 8 * 4);
    }

    #[test]
    fn imprimitivity_on_q8_with_noncentral_fiber() {
        let g = FiniteGroup::quaternion();
        // N = <i> has order 4; conjugation by j inverts it
        let i = g.elements().find(|&x| g.element_order(x) == 4).unwrap();
        let data = two_chart_data(g, i);
        let pieces = imprimitivity_pieces(&data).unwrap();
        let id_perm: Vec<u16> = (0..4).collect();
        assert!(pieces.cocycle.tau.iter().any(|t| *t != id_perm));
        assert!(pieces.bimodule.is_equivalence(), "{:?}", pieces.bimodule.verify());
    }

    #[test]
    fn trivial_witness_twists_into_the_product_bimodule() {
        let gp: GpRef = Arc::new(FiniteGroupoid::pair_groupoid(2));
        let bi = identity_bimodule(&gp);
        let psi = crate::cochain::PairCochain::zero(&gp, 2);
        let chi = crate::cochain::PairCochain::zero(&gp, 2);
        let mu = vec![Tor::ZERO; bi.left_pair_count()];
        let nu = vec![Tor::ZERO; bi.right_pair_count()];
        let tw = twisted_extension_bimodule(&bi, &mu, &nu, &psi, &chi).unwrap();
        assert_eq!(tw.size(), 2 * bi.size());
        assert!(tw.is_equivalence(), "{:?}", tw.verify());
    }

    #[test]
    fn corrupted_witness_is_rejected_with_the_failing_triple() {
        let gp: GpRef = Arc::new(FiniteGroupoid::pair_groupoid(2));
        let bi = identity_bimodule(&gp);
        let psi = crate::cochain::PairCochain::zero(&gp, 2);
        let chi = crate::cochain::PairCochain::zero(&gp, 2);
        let mut mu = vec![Tor::ZERO; bi.left_pair_count()];
        mu[0] = Tor::from_level(1, 2);
        let nu = vec![Tor::ZERO; bi.right_pair_count()];
        let err = twisted_extension_bimodule(&bi, &mu, &nu, &psi, &chi).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("descent fails at"), "{msg}");
    }

    #[test]
    fn solver_witness_twists_the_refinement_bimodule() {
        use crate::cohomology::{bimodule_witness, Coefficient};
        let base: GpRef = Arc::new(FiniteGroupoid::from_group(&FiniteGroup::cyclic(2)));
        let r = crate::constructions::refine(&base, &[vec![0], vec![0]]).unwrap();
        let glue = r.gluing();
        let (bi, points) = from_homomorphism(&glue, &r.gp, &base);
        let chi = crate::cochain::PairCochain::from_fn(&base, 2, |a, b| (a * b) % 2);
        assert!(chi.is_closed());
        let psi = crate::cochain::PairCochain::from_fn(&r.gp, 2, |a, b| {
            chi.eval_uc(glue.arrow_map[a as usize], glue.arrow_map[b as usize])
        });
        assert!(psi.is_closed());
        let (mu, nu) =
            bimodule_witness(&psi, &chi, &bi, Coefficient::Cyclic(2)).unwrap().unwrap();
        let tw = twisted_extension_bimodule(&bi, &mu, &nu, &psi, &chi).unwrap();
        assert!(tw.is_equivalence(), "{:?}", tw.verify());
        // the explicit pullback witness solves the same equations
        let mu2 = |g: u32, p: u32| {
            let (_, eta) = points[p as usize];
            chi.eval_uc(glue.arrow_map[g as usize], eta)
        };
        let nu2 = |p: u32, k: u32| {
            let (_, eta) = points[p as usize];
            chi.eval_uc(eta, k)
        };
        crate::cohomology::verify_witness_fast(
            &bi,
            2,
            |a, b| psi.eval_uc(a, b),
            |a, b| chi.eval_uc(a, b),
            mu2,
            nu2,
        )
        .unwrap();
    }

    #[test]
    fn takai_with_trivial_group_is_identity_like() {
        let gp: GpRef = Arc::new(FiniteGroupoid::pair_groupoid(2));
        let a = GroupAction::trivial(FiniteGroup::trivial(), gp.clone());
        let te = takai_equivalence(&a).unwrap();
        assert_eq!(te.bimodule.size(), gp.arrow_count());
        assert!(te.bimodule.is_equivalence(), "{:?}", te.bimodule.verify());
        assert!(te.phi_equivariant);
    }

    #[test]
    fn takai_on_the_point_with_z2_is_equivariant() {
        let pt: GpRef = Arc::new(FiniteGroupoid::point());
        let a = GroupAction::trivial(FiniteGroup::cyclic(2), pt);
        let te = takai_equivalence(&a).unwrap();
        assert_eq!(te.takai.gp().arrow_count(), 4);
        assert!(te.bimodule.is_equivalence(), "{:?}", te.bimodule.verify());
        let report =
            equivariant_check(&te.bimodule, &te.takai.bundle.translation, &a, &te.carrier_action);
        assert!(report.is_empty(), "{report:?}");
        assert!(!te.phi_equivariant);
    }

    #[test]
    fn takai_is_equivariant_for_the_chart_swap_action() {
        let gp: GpRef = Arc::new(FiniteGroupoid::pair_groupoid(2));
        let z2 = FiniteGroup::cyclic(2);
        let swap = GroupAction::from_fn(
            z2,
            gp.clone(),
            |g, x| if g == 1 { 1 - x } else { x },
            |g, a| if g == 1 { (1 - a / 2) * 2 + (1 - a % 2) } else { a },
        );
        assert!(swap.is_valid());
        let te = takai_equivalence(&swap).unwrap();
        assert!(te.bimodule.is_equivalence(), "{:?}", te.bimodule.verify());
        let report = equivariant_check(
            &te.bimodule,
            &te.takai.bundle.translation,
            &swap,
            &te.carrier_action,
        );
        assert!(report.is_empty(), "{report:?}");
        assert!(!te.phi_equivariant);
    }

    #[test]
    fn twisted_takai_extends_the_untwisted_equivalence() {
        let hh: GpRef = Arc::new(FiniteGroupoid::from_group(&FiniteGroup::cyclic(2)));
        let a = GroupAction::trivial(FiniteGroup::cyclic(2), hh);
        let te_plain = takai_equivalence(&a).unwrap();
        let cp = &te_plain.takai.cp;
        // Heisenberg pairing on G⋉ℋ = Z/2 × Z/2
        let chi = crate::cochain::PairCochain::from_fn(&cp.gp.clone(), 2, |x, y| {
            let (_, g1) = cp.decode(x);
            let (h2, _) = cp.decode(y);
            (g1 * u32::from(h2)) % 2
        });
        assert!(chi.is_closed() && chi.is_normalized());
        let (_, tw, chi_tilde, sigma) = twisted_takai_equivalence(&a, &chi).unwrap();
        // the restriction to ℋ is trivial here, the pullback is not
        assert!(sigma.vals.iter().all(|&v| v == 0));
        assert!(chi_tilde.vals.iter().any(|&v| v != 0));
        assert!(tw.is_equivalence(), "{:?}", tw.verify());
        assert_eq!(tw.size(), 2 * te_plain.bimodule.size());
    }

    #[test]
    fn equivariance_detects_twists() {
        let gp: GpRef = Arc::new(FiniteGroupoid::pair_groupoid(2));
        let z2 = FiniteGroup::cyclic(2);
        let swap = GroupAction::from_fn(
            z2.clone(),
            gp.clone(),
            |g, x| if g == 1 { 1 - x } else { x },
            |g, a| if g == 1 { (1 - a / 2) * 2 + (1 - a % 2) } else { a },
        );
        assert!(swap.is_valid());
        let (bi, points) = from_homomorphism(&GroupoidHom::identity(&gp), &gp, &gp);
        // carrier points are (x, η); act diagonally
        let find = |x: u32, eta: u32| {
            points.iter().position(|&(a, b)| (a, b) == (x, eta)).unwrap() as u32
        };
        let idx: Vec<(u32, u32)> = points.clone();
        let diag = CarrierAction::from_fn(2, bi.size(), |g, p| {
            let (x, eta) = idx[p as usize];
            find(swap.act_obj(g, x), swap.act_arrow(g, eta))
        });
        assert!(equivariant_check(&bi, &swap, &swap, &diag).is_empty());
        // acting trivially on the carrier breaks equivariance
        let triv = CarrierAction::from_fn(2, bi.size(), |_, p| p);
        assert!(!equivariant_check(&bi, &swap, &swap, &triv).is_empty());
    }
}
