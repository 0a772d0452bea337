//! Builders for derived groupoids: Čech groupoids and refinements, crossed
//! products, generalized principal bundles, (nonabelian) extensions, fibred
//! gerbes, and induced Takai groupoids.
//!
//! Arrow encodings are deterministic and value-major: a pair (g, γ) becomes
//! id g·|𝒢₁| + γ, an object pair (g, x) becomes g·|𝒢₀| + x. Refinement
//! arrows (i, j, γ) are enumerated in lexicographic order with an index
//! table. Every builder validates its inputs and the produced groupoid
//! derives units and inverses mechanically.

use crate::action::GroupAction;
use crate::group::{FiniteGroup, Subgroup};
use crate::groupoid::{FiniteGroupoid, GpRef, GroupoidHom};
use crate::morita::Bimodule;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConstructionError {
    #[error("invalid group action: {0}")]
    InvalidAction(String),
    #[error("map is not a homomorphism: {0}")]
    NotHomomorphic(String),
    #[error("cover does not exhaust the object set (object {0} uncovered)")]
    NonExhaustingCover(u32),
    #[error("empty cover")]
    EmptyCover,
    #[error("cover member {chart} contains out-of-range point {point}")]
    CoverOutOfRange { chart: usize, point: u32 },
    #[error("point {0} lies in no cover member")]
    PointUncovered(u32),
    #[error("cocycle condition fails: {0}")]
    CocycleViolation(String),
    #[error("delta of the lift escapes the subgroup at pair ({0},{1})")]
    DeltaEscapes(u32, u32),
    #[error("subgroup is not stable under conjugation by the lift of arrow {0}")]
    NotConjStable(u32),
    #[error("lift does not send units to the identity (arrow {0})")]
    UnitLift(u32),
    #[error(transparent)]
    Groupoid(#[from] crate::groupoid::GroupoidError),
}

/// Groupoid homomorphism into a group (a functor to the one-object
/// groupoid): houses transition functions.
#[derive(Clone, Debug)]
pub struct GroupValuedHom {
    pub group: FiniteGroup,
    /// Value per arrow.
    pub map: Vec<u16>,
}

impl GroupValuedHom {
    pub fn new(group: FiniteGroup, map: Vec<u16>) -> GroupValuedHom {
        GroupValuedHom { group, map }
    }

    pub fn constant(group: FiniteGroup, gp: &FiniteGroupoid) -> GroupValuedHom {
        let map = vec![group.id; gp.arrow_count()];
        GroupValuedHom { group, map }
    }

    #[inline]
    pub fn eval(&self, a: u32) -> u16 {
        self.map[a as usize]
    }

    pub fn validate(&self, gp: &FiniteGroupoid) -> Vec<String> {
        let mut out = Vec::new();
        if self.map.len() != gp.arrow_count() {
            out.push("map length differs from arrow count".into());
            return out;
        }
        if self.map.iter().any(|&v| usize::from(v) >= self.group.order) {
            out.push("value out of range".into());
            return out;
        }
        for x in gp.objects() {
            if self.eval(gp.unit(x)) != self.group.id {
                out.push(format!("unit of object {x} does not map to the identity"));
            }
        }
        let mut bad = 0usize;
        gp.for_each_pair(|a, b, _| {
            if self.eval(gp.compose_uc(a, b)) != self.group.mul(self.eval(a), self.eval(b)) {
                bad += 1;
            }
        });
        if bad > 0 {
            out.push(format!("multiplicativity fails on {bad} pairs"));
        }
        out
    }

    pub fn is_homomorphism(&self, gp: &FiniteGroupoid) -> bool {
        self.validate(gp).is_empty()
    }
}

/// A finite base with an open cover, used to present spaces as Čech
/// groupoids.
#[derive(Clone, Debug)]
pub struct CoveredBase {
    pub points: usize,
    pub cover: Vec<Vec<u32>>,
}

impl CoveredBase {
    pub fn validate(&self) -> Result<(), ConstructionError> {
        if self.cover.is_empty() {
            return Err(ConstructionError::EmptyCover);
        }
        for (chart, u) in self.cover.iter().enumerate() {
            for &p in u {
                if p as usize >= self.points {
                    return Err(ConstructionError::CoverOutOfRange { chart, point: p });
                }
            }
        }
        let mut covered = vec![false; self.points];
        for u in &self.cover {
            for &p in u {
                covered[p as usize] = true;
            }
        }
        if let Some(p) = covered.iter().position(|&c| !c) {
            return Err(ConstructionError::PointUncovered(p as u32));
        }
        Ok(())
    }
}

/// A refinement 𝒢_𝔘 of a groupoid by a cover of its object set, with the
/// canonical equivalence bimodule.
#[derive(Clone, Debug)]
pub struct Refinement {
    pub gp: GpRef,
    pub base: GpRef,
    /// Per refined object: (chart, base object).
    pub object_chart: Vec<u32>,
    pub object_point: Vec<u32>,
    /// Per refined arrow: (dst chart i, src chart j, base arrow γ).
    pub arrow_data: Vec<(u32, u32, u32)>,
    /// (𝒢, 𝒢_𝔘)-bimodule P = ⨿ᵢ s⁻¹Uᵢ; points are (chart, base arrow).
    pub bimodule: Bimodule,
    pub point_data: Vec<(u32, u32)>,
}

impl Refinement {
    /// Refined object id of (chart, base object), if the object lies in the
    /// chart.
    pub fn object_id(&self, chart: u32, x: u32) -> Option<u32> {
        (0..self.object_chart.len() as u32).find(|&o| {
            self.object_chart[o as usize] == chart && self.object_point[o as usize] == x
        })
    }

    /// Refined arrow id of (i, j, γ).
    pub fn arrow_id(&self, i: u32, j: u32, gamma: u32) -> Option<u32> {
        (0..self.arrow_data.len() as u32)
            .find(|&a| self.arrow_data[a as usize] == (i, j, gamma))
    }

    /// The gluing functor 𝒢_𝔘 → 𝒢, (i,j,γ) ↦ γ.
    pub fn gluing(&self) -> GroupoidHom {
        GroupoidHom {
            obj_map: self.object_point.clone(),
            arrow_map: self.arrow_data.iter().map(|&(_, _, g)| g).collect(),
        }
    }
}

/// Builds the refinement of `base` by a cover of its objects, with arrows
/// 𝒢^{ij} = r⁻¹Uᵢ ∩ s⁻¹Uⱼ, plus the equivalence bimodule P = ⨿ᵢ s⁻¹Uᵢ with
/// γ·(i,η) = (i,γη) and (i,η)·(i,j,γ) = (j,ηγ).
pub fn refine(base: &GpRef, cover: &[Vec<u32>]) -> Result<Refinement, ConstructionError> {
    let cb = CoveredBase { points: base.object_count, cover: cover.to_vec() };
    cb.validate()?;
    let charts = cover.len();
    let mut in_chart = vec![vec![false; base.object_count]; charts];
    for (i, u) in cover.iter().enumerate() {
        for &x in u {
            in_chart[i][x as usize] = true;
        }
    }
    let mut object_chart = Vec::new();
    let mut object_point = Vec::new();
    let mut obj_id = vec![u32::MAX; charts * base.object_count];
    for (i, u) in cover.iter().enumerate() {
        let mut sorted = u.clone();
        sorted.sort_unstable();
        sorted.dedup();
        for &x in &sorted {
            obj_id[i * base.object_count + x as usize] = object_chart.len() as u32;
            object_chart.push(i as u32);
            object_point.push(x);
        }
    }
    let mut arrow_data = Vec::new();
    let mut arrow_id = vec![u32::MAX; charts * charts * base.arrow_count()];
    for i in 0..charts {
        for j in 0..charts {
            for g in base.arrows() {
                if in_chart[i][base.dst(g) as usize] && in_chart[j][base.src(g) as usize] {
                    arrow_id[(i * charts + j) * base.arrow_count() + g as usize] =
                        arrow_data.len() as u32;
                    arrow_data.push((i as u32, j as u32, g));
                }
            }
        }
    }
    let endpoints: Vec<(u32, u32)> = arrow_data
        .iter()
        .map(|&(i, j, g)| {
            (
                obj_id[j as usize * base.object_count + base.src(g) as usize],
                obj_id[i as usize * base.object_count + base.dst(g) as usize],
            )
        })
        .collect();
    let na = base.arrow_count();
    let ad = arrow_data.clone();
    let bc = base.clone();
    let aid = arrow_id.clone();
    let gp: GpRef = Arc::new(FiniteGroupoid::from_parts(
        object_chart.len(),
        &endpoints,
        move |a, b| {
            let (i, j, g1) = ad[a as usize];
            let (j2, k, g2) = ad[b as usize];
            debug_assert_eq!(j, j2);
            aid[((i as usize) * charts + k as usize) * na + bc.compose_uc(g1, g2) as usize]
        },
    )?);

    // bimodule carrier: (i, η) with s(η) ∈ Uᵢ
    let mut point_data = Vec::new();
    let mut pt_id = vec![u32::MAX; charts * base.arrow_count()];
    for i in 0..charts {
        for e in base.arrows() {
            if in_chart[i][base.src(e) as usize] {
                pt_id[i * base.arrow_count() + e as usize] = point_data.len() as u32;
                point_data.push((i as u32, e));
            }
        }
    }
    let lanchor: Vec<u32> = point_data.iter().map(|&(_, e)| base.dst(e)).collect();
    let ranchor: Vec<u32> = point_data
        .iter()
        .map(|&(i, e)| obj_id[i as usize * base.object_count + base.src(e) as usize])
        .collect();
    let pd = point_data.clone();
    let pid = pt_id.clone();
    let b1 = base.clone();
    let b2 = base.clone();
    let pd2 = point_data.clone();
    let pid2 = pt_id.clone();
    let ad2 = arrow_data.clone();
    let bimodule = Bimodule::from_actions(
        base,
        &gp,
        lanchor,
        ranchor,
        move |g, p| {
            let (i, e) = pd[p as usize];
            pid[i as usize * b1.arrow_count() + b1.compose_uc(g, e) as usize]
        },
        move |p, a| {
            let (i, e) = pd2[p as usize];
            let (i2, j, g) = ad2[a as usize];
            debug_assert_eq!(i, i2);
            pid2[j as usize * b2.arrow_count() + b2.compose_uc(e, g) as usize]
        },
    );
    Ok(Refinement {
        gp,
        base: base.clone(),
        object_chart,
        object_point,
        arrow_data,
        bimodule,
        point_data,
    })
}

/// Čech groupoid of a covered base: the refinement of the unit groupoid on
/// the base points. Objects are (chart, point); `object_point` is the point
/// assignment.
pub fn cech_groupoid(cb: &CoveredBase) -> Result<Refinement, ConstructionError> {
    cb.validate()?;
    let arrows: Vec<(u32, u32)> = (0..cb.points as u32).map(|x| (x, x)).collect();
    let unit_gp: GpRef =
        Arc::new(FiniteGroupoid::from_parts(cb.points, &arrows, |a, _| a)?);
    refine(&unit_gp, &cb.cover)
}

/// Full subgroupoid over the objects assigned to one base point.
pub fn restrict_to_point(
    gp: &GpRef,
    assignment: &[u32],
    m: u32,
) -> Result<(GpRef, Vec<u32>, Vec<u32>), ConstructionError> {
    assert_eq!(assignment.len(), gp.object_count);
    let objects: Vec<u32> = gp
        .objects()
        .filter(|&x| assignment[x as usize] == m)
        .collect();
    if objects.is_empty() {
        return Err(ConstructionError::PointUncovered(m));
    }
    let (sub, obj_embed, arrow_embed) = gp.restrict_to_objects(&objects);
    Ok((Arc::new(sub), obj_embed, arrow_embed))
}

/// Crossed product G ⋉ 𝒢 of a validated action.
#[derive(Clone, Debug)]
pub struct CrossedProduct {
    pub gp: GpRef,
    pub group: FiniteGroup,
    pub base: GpRef,
}

impl CrossedProduct {
    #[inline]
    pub fn encode(&self, g: u16, gamma: u32) -> u32 {
        u32::from(g) * self.base.arrow_count() as u32 + gamma
    }

    #[inline]
    pub fn decode(&self, a: u32) -> (u16, u32) {
        let n = self.base.arrow_count() as u32;
        ((a / n) as u16, a % n)
    }
}

/// Arrows (g, γ) over the base objects with s(g,γ) = g⁻¹·s(γ),
/// r(g,γ) = r(γ), and (g₁,δ₁)∘(g₂,δ₂) = (g₁g₂, δ₁·(g₁δ₂)).
pub fn crossed_product(action: &GroupAction) -> Result<CrossedProduct, ConstructionError> {
    let v = action.validate();
    if !v.is_empty() {
        return Err(ConstructionError::InvalidAction(v.join("; ")));
    }
    let base = action.gp.clone();
    let group = action.group.clone();
    let na = base.arrow_count() as u32;
    let mut endpoints = Vec::with_capacity(group.order * base.arrow_count());
    for g in group.elements() {
        let gi = group.inv(g);
        for gamma in base.arrows() {
            endpoints.push((action.act_obj(gi, base.src(gamma)), base.dst(gamma)));
        }
    }
    let act = action.clone();
    let bc = base.clone();
    let grp = group.clone();
    let gp: GpRef = Arc::new(FiniteGroupoid::from_parts(
        base.object_count,
        &endpoints,
        move |a, b| {
            let (g1, d1) = ((a / na) as u16, a % na);
            let (g2, d2) = ((b / na) as u16, b % na);
            u32::from(grp.mul(g1, g2)) * na + bc.compose_uc(d1, act.act_arrow(g1, d2))
        },
    )?);
    Ok(CrossedProduct { gp, group, base })
}

/// Generalized principal bundle G ⋊_ρ 𝒢 with its canonical left-translation
/// G-action.
#[derive(Clone, Debug)]
pub struct PrincipalBundle {
    pub gp: GpRef,
    pub group: FiniteGroup,
    pub base: GpRef,
    pub rho: GroupValuedHom,
    pub translation: GroupAction,
}

impl PrincipalBundle {
    #[inline]
    pub fn encode_arrow(&self, g: u16, gamma: u32) -> u32 {
        u32::from(g) * self.base.arrow_count() as u32 + gamma
    }

    #[inline]
    pub fn decode_arrow(&self, a: u32) -> (u16, u32) {
        let n = self.base.arrow_count() as u32;
        ((a / n) as u16, a % n)
    }

    #[inline]
    pub fn encode_obj(&self, g: u16, x: u32) -> u32 {
        u32::from(g) * self.base.object_count as u32 + x
    }

    #[inline]
    pub fn decode_obj(&self, o: u32) -> (u16, u32) {
        let n = self.base.object_count as u32;
        ((o / n) as u16, o % n)
    }
}

/// Objects G×𝒢₀, arrows G×𝒢₁ with s(g,γ) = (gρ(γ), sγ), r(g,γ) = (g, rγ),
/// composing by (g,γ₁)∘(gρ(γ₁),γ₂) = (g,γ₁γ₂).
pub fn principal_bundle(
    base: &GpRef,
    rho: &GroupValuedHom,
) -> Result<PrincipalBundle, ConstructionError> {
    let v = rho.validate(base);
    if !v.is_empty() {
        return Err(ConstructionError::NotHomomorphic(v.join("; ")));
    }
    let group = rho.group.clone();
    let na = base.arrow_count() as u32;
    let no = base.object_count as u32;
    let mut endpoints = Vec::with_capacity(group.order * base.arrow_count());
    for g in group.elements() {
        for gamma in base.arrows() {
            let s = u32::from(group.mul(g, rho.eval(gamma))) * no + base.src(gamma);
            let r = u32::from(g) * no + base.dst(gamma);
            endpoints.push((s, r));
        }
    }
    let bc = base.clone();
    let gp: GpRef = Arc::new(FiniteGroupoid::from_parts(
        (group.order as u32 * no) as usize,
        &endpoints,
        move |a, b| {
            let (g1, d1) = (a / na, a % na);
            let d2 = b % na;
            g1 * na + bc.compose_uc(d1, d2)
        },
    )?);
    let grp2 = group.clone();
    let translation = GroupAction::from_fn(
        group.clone(),
        gp.clone(),
        move |h, o| u32::from(grp2.mul(h, (o / no) as u16)) * no + o % no,
        {
            let grp3 = group.clone();
            move |h, a| u32::from(grp3.mul(h, (a / na) as u16)) * na + a % na
        },
    );
    Ok(PrincipalBundle { gp, group, base: base.clone(), rho: rho.clone(), translation })
}

/// Cocycle data (σ, τ) for an extension of a groupoid by a finite group N.
#[derive(Clone, Debug)]
pub struct NonabelianCocycle {
    pub gp: GpRef,
    pub values: FiniteGroup,
    /// σ per composable pair id.
    pub sigma: Vec<u16>,
    /// τ per arrow, as a permutation of N.
    pub tau: Vec<Vec<u16>>,
}

impl NonabelianCocycle {
    pub fn trivial(gp: &GpRef, values: FiniteGroup) -> NonabelianCocycle {
        let sigma = vec![values.id; gp.pair_count()];
        let id_perm: Vec<u16> = (0..values.order as u16).collect();
        let tau = vec![id_perm; gp.arrow_count()];
        NonabelianCocycle { gp: gp.clone(), values, sigma, tau }
    }

    /// Abelian cocycle from exponents at a level: N = Z/level, τ trivial.
    pub fn from_exponents(c: &crate::cochain::PairCochain) -> NonabelianCocycle {
        let values = FiniteGroup::cyclic(c.level);
        let sigma = c.vals.iter().map(|&v| v as u16).collect();
        let id_perm: Vec<u16> = (0..values.order as u16).collect();
        let tau = vec![id_perm; c.gp.arrow_count()];
        NonabelianCocycle { gp: c.gp.clone(), values, sigma, tau }
    }

    #[inline]
    pub fn sigma_uc(&self, a: u32, b: u32) -> u16 {
        self.sigma[self.gp.pair_id_uc(a, b) as usize]
    }

    #[inline]
    pub fn tau_apply(&self, a: u32, n: u16) -> u16 {
        self.tau[a as usize][usize::from(n)]
    }

    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let gp = &self.gp;
        let nn = &self.values;
        if self.sigma.len() != gp.pair_count() || self.tau.len() != gp.arrow_count() {
            out.push("table sizes wrong".into());
            return out;
        }
        // each tau is an automorphism; units carry identity data
        for a in gp.arrows() {
            let t = &self.tau[a as usize];
            let mut seen = vec![false; nn.order];
            for &v in t {
                if usize::from(v) >= nn.order || seen[usize::from(v)] {
                    out.push(format!("tau of arrow {a} is not a bijection"));
                    break;
                }
                seen[usize::from(v)] = true;
            }
            for x in nn.elements() {
                for y in nn.elements() {
                    if self.tau_apply(a, nn.mul(x, y))
                        != nn.mul(self.tau_apply(a, x), self.tau_apply(a, y))
                    {
                        out.push(format!("tau of arrow {a} is not a homomorphism"));
                        break;
                    }
                }
            }
        }
        for x in gp.objects() {
            let u = gp.unit(x);
            if (0..nn.order as u16).any(|n| self.tau_apply(u, n) != n) {
                out.push(format!("tau of the unit at object {x} is not the identity"));
            }
        }
        let mut unit_bad = false;
        gp.for_each_pair(|a, b, p| {
            if (gp.is_unit(a) || gp.is_unit(b)) && self.sigma[p as usize] != nn.id {
                unit_bad = true;
            }
        });
        if unit_bad {
            out.push("sigma is not normalized on units".into());
        }
        // tau(γ1)∘tau(γ2) = ad(σ(γ1,γ2))∘tau(γ1γ2)
        let mut ad_bad: Option<(u32, u32)> = None;
        gp.for_each_pair(|a, b, p| {
            if ad_bad.is_some() {
                return;
            }
            let ab = gp.compose_uc(a, b);
            let s = self.sigma[p as usize];
            for n in 0..nn.order as u16 {
                let lhs = self.tau_apply(a, self.tau_apply(b, n));
                let rhs = nn.mul(nn.mul(s, self.tau_apply(ab, n)), nn.inv(s));
                if lhs != rhs {
                    ad_bad = Some((a, b));
                    return;
                }
            }
        });
        if let Some((a, b)) = ad_bad {
            out.push(format!("tau/ad compatibility fails at pair ({a},{b})"));
        }
        // (tau(γ1)σ(γ2,γ3))·σ(γ1,γ2γ3) = σ(γ1,γ2)·σ(γ1γ2,γ3)
        let mut tri_bad: Option<(u32, u32, u32)> = None;
        gp.for_each_pair(|a, b, p| {
            if tri_bad.is_some() {
                return;
            }
            let ab = gp.compose_uc(a, b);
            let s_ab = self.sigma[p as usize];
            for &c in gp.dst_fiber(gp.src(b)) {
                let bc = gp.compose_uc(b, c);
                let lhs = nn.mul(self.tau_apply(a, self.sigma_uc(b, c)), self.sigma_uc(a, bc));
                let rhs = nn.mul(s_ab, self.sigma_uc(ab, c));
                if lhs != rhs {
                    tri_bad = Some((a, b, c));
                    return;
                }
            }
        });
        if let Some((a, b, c)) = tri_bad {
            out.push(format!("twisted cocycle identity fails at triple ({a},{b},{c})"));
        }
        out
    }
}

/// Extension groupoid B ⋊^σ 𝒢 with arrows N×𝒢₁.
#[derive(Clone, Debug)]
pub struct Extension {
    pub gp: GpRef,
    pub base: GpRef,
    pub values: FiniteGroup,
}

impl Extension {
    #[inline]
    pub fn encode(&self, n: u16, gamma: u32) -> u32 {
        u32::from(n) * self.base.arrow_count() as u32 + gamma
    }

    #[inline]
    pub fn decode(&self, a: u32) -> (u16, u32) {
        let k = self.base.arrow_count() as u32;
        ((a / k) as u16, a % k)
    }

    /// The projection functor onto the base.
    pub fn projection(&self) -> GroupoidHom {
        GroupoidHom {
            obj_map: self.base.objects().collect(),
            arrow_map: self.gp.arrows().map(|a| self.decode(a).1).collect(),
        }
    }
}

/// (p₁,γ₁)∘(p₂,γ₂) = (p₁·τ(γ₁)(p₂)·σ(γ₁,γ₂), γ₁γ₂) over the base objects.
pub fn extension(c: &NonabelianCocycle) -> Result<Extension, ConstructionError> {
    let v = c.validate();
    if !v.is_empty() {
        return Err(ConstructionError::CocycleViolation(v.join("; ")));
    }
    let base = c.gp.clone();
    let nn = c.values.clone();
    let na = base.arrow_count() as u32;
    let mut endpoints = Vec::with_capacity(nn.order * base.arrow_count());
    for _n in nn.elements() {
        for gamma in base.arrows() {
            endpoints.push((base.src(gamma), base.dst(gamma)));
        }
    }
    let cc = c.clone();
    let bc = base.clone();
    let nn2 = nn.clone();
    let gp: GpRef = Arc::new(FiniteGroupoid::from_parts(
        base.object_count,
        &endpoints,
        move |a, b| {
            let (p1, g1) = ((a / na) as u16, a % na);
            let (p2, g2) = ((b / na) as u16, b % na);
            let val = nn2.mul(nn2.mul(p1, cc.tau_apply(g1, p2)), cc.sigma_uc(g1, g2));
            u32::from(val) * na + bc.compose_uc(g1, g2)
        },
    )?);
    Ok(Extension { gp, base, values: nn })
}

/// δρ̃ of a (not necessarily homomorphic) lift, as a nonabelian cocycle with
/// values in the subgroup N: σ(γ₁,γ₂) = ρ̃(γ₁)ρ̃(γ₂)ρ̃(γ₁γ₂)⁻¹, τ = ad(ρ̃).
/// Returns the cocycle over N-as-its-own-group plus the embedding of N into
/// the ambient group.
pub fn delta_rho(
    base: &GpRef,
    ambient: &FiniteGroup,
    n: &Subgroup,
    rho_tilde: &[u16],
) -> Result<(NonabelianCocycle, Vec<u16>), ConstructionError> {
    assert_eq!(rho_tilde.len(), base.arrow_count());
    for x in base.objects() {
        let u = base.unit(x);
        if rho_tilde[u as usize] != ambient.id {
            return Err(ConstructionError::UnitLift(u));
        }
    }
    let (n_group, embed) = n.as_group(ambient);
    // conjugation stability and tau tables
    let mut tau = Vec::with_capacity(base.arrow_count());
    for a in base.arrows() {
        let g = rho_tilde[a as usize];
        let mut perm = Vec::with_capacity(n_group.order);
        for i in 0..n_group.order {
            let conj = ambient.conj(g, embed[i]);
            match n.index_of(conj) {
                Some(k) => perm.push(k as u16),
                None => return Err(ConstructionError::NotConjStable(a)),
            }
        }
        tau.push(perm);
    }
    let mut sigma = vec![0u16; base.pair_count()];
    let mut escape: Option<(u32, u32)> = None;
    base.for_each_pair(|a, b, p| {
        if escape.is_some() {
            return;
        }
        let ab = base.compose_uc(a, b);
        let d = ambient.mul(
            ambient.mul(rho_tilde[a as usize], rho_tilde[b as usize]),
            ambient.inv(rho_tilde[ab as usize]),
        );
        match n.index_of(d) {
            Some(k) => sigma[p as usize] = k as u16,
            None => escape = Some((a, b)),
        }
    });
    if let Some((a, b)) = escape {
        return Err(ConstructionError::DeltaEscapes(a, b));
    }
    let cocycle = NonabelianCocycle { gp: base.clone(), values: n_group, sigma, tau };
    Ok((cocycle, embed))
}

/// Deterministic coset section of a quotient: least representative, except
/// that the identity coset lifts to the identity.
pub fn coset_section(q: &crate::group::Quotient, ambient: &FiniteGroup) -> Vec<u16> {
    let mut s = q.section.clone();
    s[usize::from(q.proj[usize::from(ambient.id)])] = ambient.id;
    s
}

/// Lifts a quotient-valued transition ρ̄ through the projection, sending
/// units to the identity. A section always exists for finite groups, so the
/// lift is total.
pub fn lift_hom(
    base: &GpRef,
    rho_bar: &GroupValuedHom,
    q: &crate::group::Quotient,
    ambient: &FiniteGroup,
) -> Vec<u16> {
    let section = coset_section(q, ambient);
    base.arrows()
        .map(|a| section[usize::from(rho_bar.eval(a))])
        .collect()
}

/// Fibred gerbe {(g, γ) : gN = ρ̄(γ)} with componentwise composition.
#[derive(Clone, Debug)]
pub struct FibredGerbe {
    pub gp: GpRef,
    pub base: GpRef,
    /// Per arrow: (ambient group element, base arrow).
    pub arrow_data: Vec<(u16, u32)>,
    index: Vec<u32>,
}

impl FibredGerbe {
    pub fn arrow_id(&self, g: u16, gamma: u32) -> Option<u32> {
        let v = self.index[usize::from(g) * self.base.arrow_count() + gamma as usize];
        (v != u32::MAX).then_some(v)
    }
}

pub fn fibred_gerbe(
    base: &GpRef,
    ambient: &FiniteGroup,
    q: &crate::group::Quotient,
    rho_bar: &GroupValuedHom,
) -> Result<FibredGerbe, ConstructionError> {
    let v = rho_bar.validate(base);
    if !v.is_empty() {
        return Err(ConstructionError::NotHomomorphic(v.join("; ")));
    }
    assert_eq!(rho_bar.group.order, q.group.order, "rho_bar must land in the quotient");
    let mut arrow_data = Vec::new();
    let mut index = vec![u32::MAX; ambient.order * base.arrow_count()];
    let mut endpoints = Vec::new();
    for g in ambient.elements() {
        for gamma in base.arrows() {
            if q.proj[usize::from(g)] == rho_bar.eval(gamma) {
                index[usize::from(g) * base.arrow_count() + gamma as usize] =
                    arrow_data.len() as u32;
                arrow_data.push((g, gamma));
                endpoints.push((base.src(gamma), base.dst(gamma)));
            }
        }
    }
    let ad = arrow_data.clone();
    let idx = index.clone();
    let bc = base.clone();
    let amb = ambient.clone();
    let na = base.arrow_count();
    let gp: GpRef = Arc::new(FiniteGroupoid::from_parts(
        base.object_count,
        &endpoints,
        move |a, b| {
            let (g1, d1) = ad[a as usize];
            let (g2, d2) = ad[b as usize];
            idx[usize::from(amb.mul(g1, g2)) * na + bc.compose_uc(d1, d2) as usize]
        },
    )?);
    Ok(FibredGerbe { gp, base: base.clone(), arrow_data, index })
}

/// The explicit isomorphism extension(δρ̃) → fibred_gerbe, (n,γ) ↦ (nρ̃γ, γ).
pub fn gerbe_of_extension_iso(
    ext: &Extension,
    embed: &[u16],
    rho_tilde: &[u16],
    gerbe: &FibredGerbe,
    ambient: &FiniteGroup,
) -> GroupoidHom {
    let obj_map = ext.base.objects().collect();
    let arrow_map = ext
        .gp
        .arrows()
        .map(|a| {
            let (n, gamma) = ext.decode(a);
            let g = ambient.mul(embed[usize::from(n)], rho_tilde[gamma as usize]);
            gerbe.arrow_id(g, gamma).expect("image arrow in gerbe")
        })
        .collect();
    GroupoidHom { obj_map, arrow_map }
}

/// Induced Takai groupoid G ⋊_q (G ⋉ ℋ) with its left-translation action.
#[derive(Clone, Debug)]
pub struct InducedTakai {
    pub cp: CrossedProduct,
    pub bundle: PrincipalBundle,
}

impl InducedTakai {
    /// Arrow id of (g, h, γ).
    #[inline]
    pub fn encode(&self, g: u16, h: u16, gamma: u32) -> u32 {
        self.bundle.encode_arrow(g, self.cp.encode(h, gamma))
    }

    #[inline]
    pub fn decode(&self, a: u32) -> (u16, u16, u32) {
        let (g, inner) = self.bundle.decode_arrow(a);
        let (h, gamma) = self.cp.decode(inner);
        (g, h, gamma)
    }

    pub fn gp(&self) -> &GpRef {
        &self.bundle.gp
    }
}

/// Builds G ⋊_q (G ⋉ ℋ): arrows G×G×ℋ₁ with s(g,h,γ) = (gh, h⁻¹sγ),
/// r(g,h,γ) = (g, rγ).
pub fn induced_takai(action: &GroupAction) -> Result<InducedTakai, ConstructionError> {
    let cp = crossed_product(action)?;
    let na = action.gp.arrow_count() as u32;
    let q = GroupValuedHom {
        group: action.group.clone(),
        map: cp.gp.arrows().map(|a| (a / na) as u16).collect(),
    };
    let bundle = principal_bundle(&cp.gp, &q)?;
    Ok(InducedTakai { cp, bundle })
}
