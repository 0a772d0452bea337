//! The equivariant double complex of a group acting on a groupoid, the
//! total differential, and the chain map into the crossed product.
//!
//! For a G-groupoid ℋ the cochains C^q(ℋ) form G-modules by
//! (g·f)(h⃗) = f(g⁻¹h⃗), giving the double complex
//! K^{p,q} = C^p(G; C^q(ℋ)) with the group differential d in p and the
//! groupoid differential δ in q. Total cochains carry D = d + (−1)^p δ.
//! The chain map F sends a (p,q)-cochain to a (p+q)-cochain on G⋉ℋ by
//! translating the arrows of a composable tuple back to a common frame.
//!
//! [`EquivariantCocycle`] is the total-degree-2 case (σ, λ, β) stored as
//! exponent tables at a working level, the twist datum consumed by the
//! dualization pipelines.

use crate::action::GroupAction;
use crate::cochain::{Cochain, PairCochain, Tuples};
use crate::cohomology::CohomologyError;
use crate::constructions::CrossedProduct;
use rand::Rng;

/// Element of K^{p,q}: one groupoid cochain per p-tuple of group elements,
/// indexed g₁-major.
#[derive(Clone, Debug, PartialEq)]
pub struct BiCochain {
    pub pdeg: usize,
    pub qdeg: usize,
    pub slices: Vec<Cochain>,
}

impl BiCochain {
    pub fn is_zero(&self) -> bool {
        self.slices.iter().all(|s| s.is_zero())
    }
}

fn add(a: &BiCochain, b: &BiCochain) -> BiCochain {
    assert_eq!((a.pdeg, a.qdeg), (b.pdeg, b.qdeg));
    BiCochain {
        pdeg: a.pdeg,
        qdeg: a.qdeg,
        slices: a.slices.iter().zip(&b.slices).map(|(x, y)| x + y).collect(),
    }
}

fn scale(c: &BiCochain, s: i64) -> BiCochain {
    BiCochain {
        pdeg: c.pdeg,
        qdeg: c.qdeg,
        slices: c
            .slices
            .iter()
            .map(|sl| Cochain {
                gp: sl.gp.clone(),
                degree: sl.degree,
                values: sl.values.iter().map(|&v| s * v).collect(),
            })
            .collect(),
    }
}

/// Working context: the action and the tuple enumeration of the acted
/// groupoid.
pub struct EquivariantComplex<'a> {
    pub action: &'a GroupAction,
    pub tuples: Tuples,
}

impl<'a> EquivariantComplex<'a> {
    pub fn new(action: &'a GroupAction, max_degree: usize) -> EquivariantComplex<'a> {
        EquivariantComplex { action, tuples: Tuples::new(&action.gp, max_degree) }
    }

    fn order(&self) -> usize {
        self.action.group.order
    }

    pub fn g_index(&self, gs: &[u16]) -> usize {
        gs.iter().fold(0usize, |acc, &g| acc * self.order() + usize::from(g))
    }

    pub fn g_tuple(&self, mut i: usize, p: usize) -> Vec<u16> {
        let n = self.order();
        let mut gs = vec![0u16; p];
        for slot in gs.iter_mut().rev() {
            *slot = (i % n) as u16;
            i /= n;
        }
        gs
    }

    pub fn slice<'b>(&self, c: &'b BiCochain, gs: &[u16]) -> &'b Cochain {
        assert_eq!(gs.len(), c.pdeg);
        &c.slices[self.g_index(gs)]
    }

    pub fn zero(&self, pdeg: usize, qdeg: usize) -> BiCochain {
        let blocks = self.order().pow(pdeg as u32);
        BiCochain {
            pdeg,
            qdeg,
            slices: (0..blocks).map(|_| Cochain::zero(&self.tuples, qdeg)).collect(),
        }
    }

    pub fn random(
        &self,
        pdeg: usize,
        qdeg: usize,
        level: u32,
        rng: &mut impl Rng,
    ) -> BiCochain {
        let blocks = self.order().pow(pdeg as u32);
        BiCochain {
            pdeg,
            qdeg,
            slices: (0..blocks)
                .map(|_| Cochain::random(&self.tuples, qdeg, level, rng))
                .collect(),
        }
    }

    /// Groupoid differential applied slicewise: K^{p,q} → K^{p,q+1}.
    pub fn delta_q(&self, c: &BiCochain) -> BiCochain {
        BiCochain {
            pdeg: c.pdeg,
            qdeg: c.qdeg + 1,
            slices: c.slices.iter().map(|s| self.tuples.differential(s)).collect(),
        }
    }

    /// Group differential with the translation module structure:
    /// K^{p,q} → K^{p+1,q}.
    pub fn d_p(&self, c: &BiCochain) -> BiCochain {
        let p = c.pdeg;
        let g = &self.action.group;
        let blocks = self.order().pow((p + 1) as u32);
        let mut slices = Vec::with_capacity(blocks);
        let mut merged = vec![0u16; p];
        for b in 0..blocks {
            let gs = self.g_tuple(b, p + 1);
            let mut acc = self.action.act_cochain(gs[0], self.slice(c, &gs[1..]), &self.tuples);
            let mut sign = -1i64;
            for i in 1..=p {
                merged.clear();
                merged.extend_from_slice(&gs[..i - 1]);
                merged.push(g.mul(gs[i - 1], gs[i]));
                merged.extend_from_slice(&gs[i + 1..]);
                let term = self.slice(c, &merged);
                acc = if sign > 0 { &acc + term } else { &acc - term };
                sign = -sign;
            }
            let last = self.slice(c, &gs[..p]);
            acc = if sign > 0 { &acc + last } else { &acc - last };
            slices.push(acc);
        }
        BiCochain { pdeg: p + 1, qdeg: c.qdeg, slices }
    }

    /// D = d + (−1)^p δ on a total cochain given as components
    /// (c₀, …, c_n) with cₚ ∈ K^{p, n−p}; returns the n+2 components of
    /// the image at total degree n+1.
    pub fn total_differential(
        &self,
        comps: &[BiCochain],
    ) -> Result<Vec<BiCochain>, CohomologyError> {
        let n = comps.len() - 1;
        for (p, c) in comps.iter().enumerate() {
            if c.pdeg != p || c.qdeg != n - p {
                return Err(CohomologyError::BidegreeMismatch(p));
            }
        }
        let mut out = Vec::with_capacity(n + 2);
        for p in 0..=n + 1 {
            let from_d = if p >= 1 { Some(self.d_p(&comps[p - 1])) } else { None };
            let from_delta = if p <= n {
                let s = if p % 2 == 0 { 1 } else { -1 };
                Some(scale(&self.delta_q(&comps[p]), s))
            } else {
                None
            };
            out.push(match (from_d, from_delta) {
                (Some(a), Some(b)) => add(&a, &b),
                (Some(a), None) => a,
                (None, Some(b)) => b,
                (None, None) => unreachable!(),
            });
        }
        Ok(out)
    }

    /// The chain map into C^{p+q}(G⋉ℋ): a composable crossed-product tuple
    /// ((g₁,δ₁),…,(g_n,δ_n)) is translated to the ℋ-tuple
    /// γᵢ = (g₁⋯g_{i−1})·δᵢ, and the cochain reads the first p group
    /// coordinates and the last q translated arrows (a (p,0)-cochain is
    /// evaluated at the source of γ_n).
    pub fn chain_map_f(
        &self,
        c: &BiCochain,
        cp: &CrossedProduct,
        cp_tuples: &Tuples,
    ) -> Cochain {
        let n = c.pdeg + c.qdeg;
        if n == 0 {
            return Cochain {
                gp: cp.gp.clone(),
                degree: 0,
                values: c.slices[0].values.clone(),
            };
        }
        let group = &self.action.group;
        let mut gs = vec![0u16; n];
        let mut gammas = vec![0u32; n];
        Cochain::from_fn(cp_tuples, n, |arrows| {
            let mut frame = group.id;
            for (i, &a) in arrows.iter().enumerate() {
                let (g, delta) = cp.decode(a);
                gs[i] = g;
                gammas[i] = self.action.act_arrow(frame, delta);
                frame = group.mul(frame, g);
            }
            let slice = self.slice(c, &gs[..c.pdeg]);
            if c.qdeg == 0 {
                slice.values[self.action.gp.src(gammas[n - 1]) as usize]
            } else {
                slice.eval(&self.tuples, &gammas[c.pdeg..])
            }
        })
    }

    /// F of a full total cochain: the sum of the images of its components.
    pub fn chain_map_f_total(
        &self,
        comps: &[BiCochain],
        cp: &CrossedProduct,
        cp_tuples: &Tuples,
    ) -> Cochain {
        let mut acc = self.chain_map_f(&comps[0], cp, cp_tuples);
        for c in &comps[1..] {
            acc = &acc + &self.chain_map_f(c, cp, cp_tuples);
        }
        acc
    }
}

/// Equivariant 2-cocycle (σ, λ, β) on a G-groupoid, stored as exponent
/// tables at one working level: σ per composable pair, λ per (g, arrow),
/// β per (g₁, g₂, object).
#[derive(Clone, Debug, PartialEq)]
pub struct EquivariantCocycle {
    pub level: u32,
    pub sigma: PairCochain,
    pub lambda: Vec<u32>,
    pub beta: Vec<u32>,
}

impl EquivariantCocycle {
    pub fn trivial(action: &GroupAction, level: u32) -> EquivariantCocycle {
        let n = action.group.order;
        EquivariantCocycle {
            level,
            sigma: PairCochain::zero(&action.gp, level),
            lambda: vec![0; n * action.gp.arrow_count()],
            beta: vec![0; n * n * action.gp.object_count],
        }
    }

    #[inline]
    pub fn lambda_uc(&self, action: &GroupAction, g: u16, h: u32) -> u32 {
        self.lambda[usize::from(g) * action.gp.arrow_count() + h as usize]
    }

    #[inline]
    pub fn beta_uc(&self, action: &GroupAction, g1: u16, g2: u16, x: u32) -> u32 {
        let n = action.group.order;
        self.beta[(usize::from(g1) * n + usize::from(g2)) * action.gp.object_count + x as usize]
    }

    /// Exhaustively checks all four slots of D(σ,λ,β) = 0 plus the
    /// normalizations (σ on units, λ at the identity and on units, β at the
    /// identity in either argument).
    pub fn validate(&self, action: &GroupAction) -> Vec<String> {
        let mut out = Vec::new();
        let gp = &action.gp;
        let group = &action.group;
        let n = group.order as u16;
        let l = u64::from(self.level);
        let md = |x: i64| x.rem_euclid(l as i64) as u64;
        if self.sigma.level != self.level {
            out.push("violation: sigma level differs from the triple level".into());
            return out;
        }
        if self.lambda.len() != usize::from(n) * gp.arrow_count()
            || self.beta.len() != usize::from(n) * usize::from(n) * gp.object_count
        {
            out.push("violation: table sizes do not match the action".into());
            return out;
        }
        if !self.sigma.is_closed() {
            out.push("violation: sigma is not closed".into());
        }
        if !self.sigma.is_normalized() {
            out.push("violation: sigma is not normalized".into());
        }
        let lam = |g: u16, h: u32| i64::from(self.lambda_uc(action, g, h));
        let bet = |g1: u16, g2: u16, x: u32| i64::from(self.beta_uc(action, g1, g2, x));
        let mut bad_norm = 0u64;
        for h in gp.arrows() {
            if lam(group.id, h) != 0 {
                bad_norm += 1;
            }
        }
        for g in 0..n {
            for x in gp.objects() {
                if lam(g, gp.unit(x)) != 0 {
                    bad_norm += 1;
                }
                if bet(group.id, g, x) != 0 || bet(g, group.id, x) != 0 {
                    bad_norm += 1;
                }
            }
        }
        if bad_norm > 0 {
            out.push(format!("violation: lambda/beta not normalized on {bad_norm} entries"));
        }
        // d sigma = delta lambda
        let mut bad = 0u64;
        for g in 0..n {
            let gi = group.inv(g);
            gp.for_each_pair(|a, b, _| {
                let ab = gp.compose_uc(a, b);
                let moved = i64::from(
                    self.sigma.eval_uc(action.act_arrow(gi, a), action.act_arrow(gi, b)),
                ) - i64::from(self.sigma.eval_uc(a, b));
                let boundary = lam(g, b) - lam(g, ab) + lam(g, a);
                if md(moved) != md(boundary) {
                    bad += 1;
                }
            });
        }
        if bad > 0 {
            out.push(format!("violation: d(sigma) != delta(lambda) on {bad} tuples"));
        }
        // d lambda + delta beta = 0
        let mut bad = 0u64;
        for g1 in 0..n {
            let g1i = group.inv(g1);
            for g2 in 0..n {
                let g12 = group.mul(g1, g2);
                for h in gp.arrows() {
                    let dl = lam(g2, action.act_arrow(g1i, h)) - lam(g12, h) + lam(g1, h);
                    let db = bet(g1, g2, gp.src(h)) - bet(g1, g2, gp.dst(h));
                    if md(dl + db) != 0 {
                        bad += 1;
                    }
                }
            }
        }
        if bad > 0 {
            out.push(format!("violation: d(lambda) + delta(beta) != 0 on {bad} tuples"));
        }
        // d beta = 0
        let mut bad = 0u64;
        for g1 in 0..n {
            let g1i = group.inv(g1);
            for g2 in 0..n {
                for g3 in 0..n {
                    for x in gp.objects() {
                        let v = bet(g2, g3, action.act_obj(g1i, x)) - bet(group.mul(g1, g2), g3, x)
                            + bet(g1, group.mul(g2, g3), x)
                            - bet(g1, g2, x);
                        if md(v) != 0 {
                            bad += 1;
                        }
                    }
                }
            }
        }
        if bad > 0 {
            out.push(format!("violation: d(beta) != 0 on {bad} tuples"));
        }
        out
    }

    pub fn is_valid(&self, action: &GroupAction) -> bool {
        self.validate(action).is_empty()
    }

    /// ψ = F(σ,λ,β) on G⋉ℋ:
    /// ψ((g₁,δ₁),(g₂,δ₂)) = σ(δ₁, g₁δ₂) + λ(g₁, g₁δ₂) + β(g₁, g₂, s(g₁δ₂)).
    pub fn chain_map_f(&self, action: &GroupAction, cp: &CrossedProduct) -> PairCochain {
        let gp = &action.gp;
        let l = u64::from(self.level);
        PairCochain::from_fn(&cp.gp, self.level, |a, b| {
            let (g1, d1) = cp.decode(a);
            let (g2, d2) = cp.decode(b);
            let g1d2 = action.act_arrow(g1, d2);
            let v = u64::from(self.sigma.eval_uc(d1, g1d2))
                + u64::from(self.lambda_uc(action, g1, g1d2))
                + u64::from(self.beta_uc(action, g1, g2, gp.src(g1d2)));
            (v % l) as u32
        })
    }
}

/// A triple D(u, a) for random normalized (u, a) at total degree 1: always
/// a valid equivariant cocycle representing the trivial class.
pub fn coboundary_triple(
    action: &GroupAction,
    level: u32,
    rng: &mut impl Rng,
) -> EquivariantCocycle {
    let gp = &action.gp;
    let group = &action.group;
    let n = group.order;
    let l = i64::from(level);
    let md = |x: i64| x.rem_euclid(l) as u32;
    // u: normalized 1-cochain on ℋ; a: G → C⁰(ℋ) with a(e) = 0
    let u: Vec<i64> = gp
        .arrows()
        .map(|h| if gp.is_unit(h) { 0 } else { rng.gen_range(0..l) })
        .collect();
    let a: Vec<i64> = (0..n * gp.object_count)
        .map(|i| if i < gp.object_count { 0 } else { rng.gen_range(0..l) })
        .collect();
    let av = |g: u16, x: u32| a[usize::from(g) * gp.object_count + x as usize];
    let sigma = PairCochain::from_fn(gp, level, |h1, h2| {
        let h12 = gp.compose_uc(h1, h2);
        md(u[h2 as usize] - u[h12 as usize] + u[h1 as usize])
    });
    let mut lambda = vec![0u32; n * gp.arrow_count()];
    for g in 0..n as u16 {
        let gi = group.inv(g);
        for h in gp.arrows() {
            let v = u[action.act_arrow(gi, h) as usize] - u[h as usize] - av(g, gp.src(h))
                + av(g, gp.dst(h));
            lambda[usize::from(g) * gp.arrow_count() + h as usize] = md(v);
        }
    }
    let mut beta = vec![0u32; n * n * gp.object_count];
    for g1 in 0..n as u16 {
        let g1i = group.inv(g1);
        for g2 in 0..n as u16 {
            let g12 = group.mul(g1, g2);
            for x in gp.objects() {
                let v = av(g2, action.act_obj(g1i, x)) - av(g12, x) + av(g1, x);
                beta[(usize::from(g1) * n + usize::from(g2)) * gp.object_count + x as usize] =
                    md(v);
            }
        }
    }
    EquivariantCocycle { level, sigma, lambda, beta }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cochain::pullback;
    use crate::constructions::{crossed_product, principal_bundle, GroupValuedHom};
    use crate::group::FiniteGroup;
    use crate::groupoid::{FiniteGroupoid, GpRef, GroupoidHom};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn swap_action() -> GroupAction {
        let gp: GpRef = Arc::new(FiniteGroupoid::pair_groupoid(2));
        GroupAction::from_fn(
            FiniteGroup::cyclic(2),
            gp,
            |g, x| if g == 0 { x } else { 1 - x },
            |g, a| {
                if g == 0 {
                    a
                } else {
                    let (i, j) = (a / 2, a % 2);
                    (1 - i) * 2 + (1 - j)
                }
            },
        )
    }

    fn bundle_action() -> GroupAction {
        // Z/4 translating the bundle of rho: Z/2 -> Z/4, 1 -> 2
        let base: GpRef = Arc::new(FiniteGroupoid::from_group(&FiniteGroup::cyclic(2)));
        let rho = GroupValuedHom::new(FiniteGroup::cyclic(4), vec![0, 2]);
        principal_bundle(&base, &rho).unwrap().translation
    }

    #[test]
    fn total_differential_squares_to_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for action in [swap_action(), bundle_action()] {
            let eq = EquivariantComplex::new(&action, 4);
            for n in [1usize, 2] {
                for _ in 0..10 {
                    let comps: Vec<BiCochain> =
                        (0..=n).map(|p| eq.random(p, n - p, 4, &mut rng)).collect();
                    let d1 = eq.total_differential(&comps).unwrap();
                    let d2 = eq.total_differential(&d1).unwrap();
                    assert!(d2.iter().all(|c| c.is_zero()), "D^2 != 0 at degree {n}");
                }
            }
        }
    }

    #[test]
    fn invariant_closed_sigma_is_a_cocycle() {
        // trivial action of Z/2 on the Klein four-group groupoid; sigma the
        // nontrivial Schur class
        let k4: GpRef = Arc::new(FiniteGroupoid::from_group(&FiniteGroup::abelian(&[2, 2])));
        let action = GroupAction::trivial(FiniteGroup::cyclic(2), k4.clone());
        let sigma = PairCochain::from_fn(&k4, 2, |x, y| (x % 2) * (y / 2));
        let triple = EquivariantCocycle {
            level: 2,
            sigma,
            lambda: vec![0; 2 * k4.arrow_count()],
            beta: vec![0; 4 * k4.object_count],
        };
        assert!(triple.is_valid(&action), "{:?}", triple.validate(&action));
        // the same sigma with a corrupted lambda entry must fail
        let mut broken = triple.clone();
        broken.lambda[5] = 1;
        assert!(!broken.is_valid(&action));
    }

    #[test]
    fn coboundary_triples_validate() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        for action in [swap_action(), bundle_action()] {
            for _ in 0..5 {
                let t = coboundary_triple(&action, 4, &mut rng);
                assert!(t.is_valid(&action), "{:?}", t.validate(&action));
            }
        }
    }

    #[test]
    fn chain_map_f_restricts_to_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        let action = bundle_action();
        let cp = crossed_product(&action).unwrap();
        let t = coboundary_triple(&action, 4, &mut rng);
        let psi = t.chain_map_f(&action, &cp);
        assert!(psi.is_closed(), "psi must be closed");
        // restriction to {e} x H recovers sigma
        action.gp.for_each_pair(|d1, d2, _| {
            let a = cp.encode(action.group.id, d1);
            let b = cp.encode(action.group.id, d2);
            assert_eq!(psi.eval_uc(a, b), t.sigma.eval_uc(d1, d2));
        });
    }

    #[test]
    fn chain_map_f_commutes_with_differentials() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for action in [swap_action(), bundle_action()] {
            let cp = crossed_product(&action).unwrap();
            let cp_tuples = Tuples::new(&cp.gp, 3);
            let eq = EquivariantComplex::new(&action, 3);
            for n in [1usize, 2] {
                for _ in 0..25 {
                    let comps: Vec<BiCochain> =
                        (0..=n).map(|p| eq.random(p, n - p, 4, &mut rng)).collect();
                    let f_then_d =
                        cp_tuples.differential(&eq.chain_map_f_total(&comps, &cp, &cp_tuples));
                    let d = eq.total_differential(&comps).unwrap();
                    let d_then_f = eq.chain_map_f_total(&d, &cp, &cp_tuples);
                    assert_eq!(f_then_d, d_then_f, "F fails to chain at degree {n}");
                }
            }
        }
    }

    #[test]
    fn composite_equals_quotient_pullback() {
        let mut rng = ChaCha8Rng::seed_from_u64(91);
        let base: GpRef = Arc::new(FiniteGroupoid::from_group(&FiniteGroup::cyclic(2)));
        let rho = GroupValuedHom::new(FiniteGroup::cyclic(4), vec![0, 2]);
        let bundle = principal_bundle(&base, &rho).unwrap();
        let action = &bundle.translation;
        let cp = crossed_product(action).unwrap();
        let eq = EquivariantComplex::new(action, 3);
        let cp_tuples = Tuples::new(&cp.gp, 3);
        let base_tuples = Tuples::new(&base, 3);
        // bundle projection and full quotient as functors
        let pi = GroupoidHom {
            obj_map: (0..bundle.gp.object_count as u32)
                .map(|o| bundle.decode_obj(o).1)
                .collect(),
            arrow_map: (0..bundle.gp.arrow_count() as u32)
                .map(|a| bundle.decode_arrow(a).1)
                .collect(),
        };
        assert!(pi.is_functor(&bundle.gp, &base));
        let q = GroupoidHom {
            obj_map: pi.obj_map.clone(),
            arrow_map: (0..cp.gp.arrow_count() as u32)
                .map(|a| bundle.decode_arrow(cp.decode(a).1).1)
                .collect(),
        };
        assert!(q.is_functor(&cp.gp, &base));
        for degree in [1usize, 2] {
            for _ in 0..10 {
                let c = Cochain::random(&base_tuples, degree, 4, &mut rng);
                let lifted = BiCochain {
                    pdeg: 0,
                    qdeg: degree,
                    slices: vec![pullback(&c, &pi, &eq.tuples, &base_tuples)],
                };
                let through_f = eq.chain_map_f(&lifted, &cp, &cp_tuples);
                let direct = pullback(&c, &q, &cp_tuples, &base_tuples);
                assert_eq!(through_f, direct);
            }
        }
    }
}
