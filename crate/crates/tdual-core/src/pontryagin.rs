//! Pontryagin duality between twisted principal bundles and twisted gerbes.
//!
//! Duality data on a groupoid over a finite abelian group G is a triple
//! (ρ, f, ν): a G-valued homomorphism ρ, a closed normalized Ĝ-valued
//! 2-cochain f, and a torus 2-cochain ν coupled to the other two by
//! δν(γ₁,γ₂,γ₃) = −⟨f(γ₂,γ₃), ρ(γ₁)⟩ on composable triples. The data twists
//! the bundle G⋊_ρ𝒢 by σ^{νf} and the gerbe Ĝ⋊^f𝒢 by τ^{ρν}; the fibrewise
//! Fourier transform is then a *-isomorphism of the twisted convolution
//! algebras. `pontryagin_dualize` builds both sides and verifies the
//! isomorphism exactly on every basis pair, together with the exchange of
//! translation and dual translation.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::One;
use thiserror::Error;

use crate::cochain::PairCochain;
use crate::constructions::{
    extension, principal_bundle, ConstructionError, Extension, GroupValuedHom, NonabelianCocycle,
    PrincipalBundle,
};
use crate::cyclotomic::{CycCtx, CycQ};
use crate::group::{dual_group, pair, FiniteGroup};
use crate::groupoid::GpRef;
use crate::star::{twisted_algebra, StarAlgebra, StarError};
use crate::torus::Tor;

#[derive(Debug, Error)]
pub enum PontryaginError {
    #[error("duality data invalid: {0}")]
    Invalid(String),
    #[error(transparent)]
    Construction(#[from] ConstructionError),
    #[error(transparent)]
    Star(#[from] StarError),
}

/// Pontryagin duality data (ρ, f, ν) over an abelian structure group.
///
/// `f` holds one Ĝ element per composable pair id. ν itself need not be
/// closed; its failure of closedness is exactly ⟨f, ρ⟩ as stated in the
/// module doc, and `validate` checks that coupling on every triple.
#[derive(Debug, Clone)]
pub struct PontryaginData {
    pub gp: GpRef,
    pub group: FiniteGroup,
    pub rho: GroupValuedHom,
    pub f: Vec<u16>,
    pub nu: PairCochain,
}

impl PontryaginData {
    pub fn new(
        gp: GpRef,
        group: FiniteGroup,
        rho: GroupValuedHom,
        f: Vec<u16>,
        nu: PairCochain,
    ) -> Result<PontryaginData, PontryaginError> {
        let pd = PontryaginData { gp, group, rho, f, nu };
        let issues = pd.validate();
        if issues.is_empty() {
            Ok(pd)
        } else {
            Err(PontryaginError::Invalid(issues.join("; ")))
        }
    }

    /// ρ, f, ν all trivial; valid over any groupoid and abelian group.
    pub fn trivial(gp: &GpRef, group: FiniteGroup) -> PontryaginData {
        PontryaginData {
            gp: gp.clone(),
            rho: GroupValuedHom::constant(group.clone(), gp),
            f: vec![group.id; gp.pair_count()],
            nu: PairCochain::zero(gp, 1),
            group,
        }
    }

    pub fn dual(&self) -> FiniteGroup {
        dual_group(&self.group)
    }

    /// Common level for both twistings: lcm of the ν level and exp(G),
    /// so every pairing value and every ν value has an exact exponent.
    pub fn dual_level(&self) -> u32 {
        (self.nu.level).lcm(&(self.group.exponent() as u32))
    }

    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let gp = &self.gp;
        if self.group.abelian_factors.is_none() {
            out.push("structure group lacks abelian factors".into());
            return out;
        }
        if !self.group.is_abelian() {
            out.push("structure group is not abelian".into());
        }
        out.extend(self.rho.validate(gp));
        if !self.rho.is_homomorphism(gp) {
            out.push("rho is not homomorphic".into());
        }
        if self.f.len() != gp.pair_count() {
            out.push(format!(
                "f has {} entries for {} composable pairs",
                self.f.len(),
                gp.pair_count()
            ));
            return out;
        }
        let dual = self.dual();
        if self.f.iter().any(|&v| usize::from(v) >= dual.order) {
            out.push("f takes values outside the dual group".into());
        }
        if self.nu.vals.len() != gp.pair_count() || self.nu.gp.arrow_count() != gp.arrow_count() {
            out.push("nu does not live on the composable pairs of the groupoid".into());
            return out;
        }
        if !self.nu.is_normalized() {
            out.push("nu is not normalized on unit pairs".into());
        }
        let mut f_unit = true;
        let mut f_closed = true;
        let mut coupled = true;
        gp.for_each_pair(|a, b, p| {
            if (gp.is_unit(a) || gp.is_unit(b)) && self.f[p as usize] != dual.id {
                f_unit = false;
            }
            let ab = gp.compose_uc(a, b);
            let f_ab = self.f[p as usize];
            let nu_ab = Tor::from_level(i64::from(self.nu.vals[p as usize]), self.nu.level);
            for &c in gp.dst_fiber(gp.src(b)) {
                let bc = gp.compose_uc(b, c);
                let f_bc = self.f[gp.pair_id_uc(b, c) as usize];
                // δf(a,b,c) = f(b,c) f(ab,c)⁻¹ f(a,bc) f(a,b)⁻¹ in Ĝ
                let df = dual.mul(
                    dual.mul(f_bc, dual.inv(self.f[gp.pair_id_uc(ab, c) as usize])),
                    dual.mul(self.f[gp.pair_id_uc(a, bc) as usize], dual.inv(f_ab)),
                );
                if df != dual.id {
                    f_closed = false;
                }
                // δν(a,b,c) = −⟨f(b,c), ρ(a)⟩
                let dnu = Tor::from_level(i64::from(self.nu.eval_uc(b, c)), self.nu.level)
                    - Tor::from_level(i64::from(self.nu.eval_uc(ab, c)), self.nu.level)
                    + Tor::from_level(i64::from(self.nu.eval_uc(a, bc)), self.nu.level)
                    - nu_ab;
                if dnu != -pair(&self.group, f_bc, self.rho.eval(a)) {
                    coupled = false;
                }
            }
        });
        if !f_unit {
            out.push("f is not normalized on unit pairs".into());
        }
        if !f_closed {
            out.push("f is not closed".into());
        }
        if !coupled {
            out.push("the coupling δν = −⟨f, ρ⟩ fails on some composable triple".into());
        }
        out
    }
}

/// The dual pair produced from valid duality data: the twisted bundle
/// (G⋊_ρ𝒢, σ^{νf}), the twisted gerbe (Ĝ⋊^f𝒢, τ^{ρν}), and their exact
/// convolution algebras at the common level.
pub struct PontryaginDual {
    pub data: PontryaginData,
    pub dual: FiniteGroup,
    pub level: u32,
    pub bundle: PrincipalBundle,
    pub sigma: PairCochain,
    pub gerbe: Extension,
    pub tau: PairCochain,
    pub bundle_algebra: StarAlgebra,
    pub gerbe_algebra: StarAlgebra,
}

impl PontryaginDual {
    pub fn ctx(&self) -> CycCtx {
        CycCtx::new(self.level)
    }

    /// ℱ(δ_{(g,γ)}) over the gerbe basis: ℱ(a)(φ,γ) = Σ_g a(g,γ)⟨φ,g⟩⁻¹
    /// against the normalized measure on Ĝ. With counting measure on both
    /// convolution algebras the 1/|Ĝ| factor is what makes ℱ multiplicative.
    pub fn fourier_column(&self, ctx: &CycCtx, a: u32) -> Vec<(u32, CycQ)> {
        let (g, gamma) = self.bundle.decode_arrow(a);
        let inv_order = BigRational::new(BigInt::one(), BigInt::from(self.dual.order as i64));
        self.dual
            .elements()
            .map(|phi| {
                let k = pair(&self.data.group, phi, g)
                    .as_level(self.level)
                    .expect("pairing fits the working level");
                let v = ctx.scale(&inv_order, &ctx.root(-k));
                (self.gerbe.encode(phi, gamma), v)
            })
            .collect()
    }

    /// ℱ⁻¹(δ_{(φ,γ)}) over the bundle basis: ℱ⁻¹(â)(g,γ) = Σ_φ â(φ,γ)⟨φ,g⟩
    /// with counting measure on Ĝ.
    pub fn fourier_inv_column(&self, ctx: &CycCtx, x: u32) -> Vec<(u32, CycQ)> {
        let (phi, gamma) = self.gerbe.decode(x);
        self.data
            .group
            .elements()
            .map(|g| {
                let k = pair(&self.data.group, phi, g)
                    .as_level(self.level)
                    .expect("pairing fits the working level");
                (self.bundle.encode_arrow(g, gamma), ctx.root(k))
            })
            .collect()
    }

    /// Dense ℱ on a coefficient vector over the bundle basis.
    pub fn fourier(&self, ctx: &CycCtx, a: &[CycQ]) -> Vec<CycQ> {
        let mut out = vec![ctx.zero(); self.gerbe_algebra.dim()];
        for (i, coeff) in a.iter().enumerate() {
            if coeff.is_zero() {
                continue;
            }
            for (x, v) in self.fourier_column(ctx, i as u32) {
                out[x as usize] = ctx.add(&out[x as usize], &ctx.mul(coeff, &v));
            }
        }
        out
    }

    /// Dense ℱ⁻¹ on a coefficient vector over the gerbe basis.
    pub fn fourier_inv(&self, ctx: &CycCtx, a: &[CycQ]) -> Vec<CycQ> {
        let mut out = vec![ctx.zero(); self.bundle_algebra.dim()];
        for (x, coeff) in a.iter().enumerate() {
            if coeff.is_zero() {
                continue;
            }
            for (i, v) in self.fourier_inv_column(ctx, x as u32) {
                out[i as usize] = ctx.add(&out[i as usize], &ctx.mul(coeff, &v));
            }
        }
        out
    }

    /// Exhaustive exact verification of the duality. A failure here is an
    /// implementation bug, not bad input, hence the asserts.
    fn verify(&self) {
        let ctx = self.ctx();
        let grp = &self.data.group;
        let nb = self.bundle_algebra.dim();
        let ng = self.gerbe_algebra.dim();
        let cols: Vec<Vec<(u32, CycQ)>> = (0..nb as u32)
            .map(|a| self.fourier_column(&ctx, a))
            .collect();

        // Multiplicative on every basis pair, composable or not.
        for i in 0..nb {
            for j in 0..nb {
                let lhs = sparse_product(&self.gerbe_algebra, &ctx, &cols[i], &cols[j]);
                let mut rhs = vec![ctx.zero(); ng];
                if let Some((k, e)) = self.bundle_algebra.product(i as u32, j as u32) {
                    for (x, v) in &cols[k as usize] {
                        rhs[*x as usize] = ctx.mul(v, &ctx.root(i64::from(e)));
                    }
                }
                assert_eq!(lhs, rhs, "fourier map not multiplicative at pair ({i},{j})");
            }
        }

        // *-preserving on every basis element.
        for i in 0..nb {
            let (istar, e) = self.bundle_algebra.star_basis(i as u32);
            let mut lhs = vec![ctx.zero(); ng];
            for (x, v) in &cols[istar as usize] {
                lhs[*x as usize] = ctx.mul(v, &ctx.root(i64::from(e)));
            }
            let mut rhs = vec![ctx.zero(); ng];
            for (x, v) in &cols[i] {
                let (xs, ex) = self.gerbe_algebra.star_basis(*x);
                rhs[xs as usize] = ctx.mul(&ctx.conj(v), &ctx.root(i64::from(ex)));
            }
            assert_eq!(lhs, rhs, "fourier map does not preserve the involution at {i}");
        }

        // ℱ∘ℱ⁻¹ and ℱ⁻¹∘ℱ are both the identity.
        for i in 0..nb {
            let mut delta = vec![ctx.zero(); nb];
            delta[i] = ctx.one();
            let back = self.fourier_inv(&ctx, &self.fourier(&ctx, &delta));
            assert_eq!(back, delta, "fourier roundtrip fails at bundle basis {i}");
        }
        for x in 0..ng {
            let mut delta = vec![ctx.zero(); ng];
            delta[x] = ctx.one();
            let back = self.fourier(&ctx, &self.fourier_inv(&ctx, &delta));
            assert_eq!(back, delta, "fourier roundtrip fails at gerbe basis {x}");
        }

        // Translation (g₁ · a)(g,γ) := a(g g₁, γ) goes to multiplication by
        // the character evaluated at g₁.
        for g1 in grp.elements() {
            for i in 0..nb as u32 {
                let (g0, gamma) = self.bundle.decode_arrow(i);
                let shifted = self.bundle.encode_arrow(grp.mul(g0, grp.inv(g1)), gamma);
                let lhs = &cols[shifted as usize];
                let rhs = &cols[i as usize];
                for (phi, ((xl, vl), (xr, vr))) in
                    self.dual.elements().zip(lhs.iter().zip(rhs.iter()))
                {
                    assert_eq!(xl, xr);
                    let k = pair(grp, phi, g1)
                        .as_level(self.level)
                        .expect("pairing fits the working level");
                    assert!(
                        ctx.sub(vl, &ctx.mul(vr, &ctx.root(k))).is_zero(),
                        "translation is not taken to the dual character action"
                    );
                }
            }
        }

        // Multiplication by a character of G goes to translation in the
        // φ slot of the gerbe.
        for phi0 in self.dual.elements() {
            for i in 0..nb as u32 {
                let (g, _) = self.bundle.decode_arrow(i);
                let k = pair(grp, phi0, g)
                    .as_level(self.level)
                    .expect("pairing fits the working level");
                let scale = ctx.root(k);
                let mut lhs = vec![ctx.zero(); ng];
                let mut rhs = vec![ctx.zero(); ng];
                for (x, v) in &cols[i as usize] {
                    lhs[*x as usize] = ctx.mul(v, &scale);
                    let (psi, gm) = self.gerbe.decode(*x);
                    rhs[self.gerbe.encode(self.dual.mul(psi, phi0), gm) as usize] = v.clone();
                }
                assert_eq!(lhs, rhs, "character action is not taken to dual translation");
            }
        }
    }
}

fn sparse_product(
    alg: &StarAlgebra,
    ctx: &CycCtx,
    a: &[(u32, CycQ)],
    b: &[(u32, CycQ)],
) -> Vec<CycQ> {
    let mut out = vec![ctx.zero(); alg.dim()];
    for (i, ci) in a {
        for (j, cj) in b {
            if let Some((k, e)) = alg.product(*i, *j) {
                let t = ctx.mul(&ctx.mul(ci, cj), &ctx.root(i64::from(e)));
                out[k as usize] = ctx.add(&out[k as usize], &t);
            }
        }
    }
    out
}

/// Builds the dual pair for valid duality data and proves the Fourier
/// isomorphism exactly on the basis.
pub fn pontryagin_dualize(pd: &PontryaginData) -> Result<PontryaginDual, PontryaginError> {
    let issues = pd.validate();
    if !issues.is_empty() {
        return Err(PontryaginError::Invalid(issues.join("; ")));
    }
    let level = pd.dual_level();
    let dual = pd.dual();
    let bundle = principal_bundle(&pd.gp, &pd.rho)?;

    // σ^{νf}((g,γ₁), (gρ(γ₁),γ₂)) = ν(γ₁,γ₂) ⟨f(γ₁,γ₂), g⟩
    let bundle_gp = bundle.gp.clone();
    let sigma = {
        let bundle_ref = &bundle;
        PairCochain::from_fn(&bundle_gp, level, |x, y| {
            let (g, g1) = bundle_ref.decode_arrow(x);
            let (_, g2) = bundle_ref.decode_arrow(y);
            let p = pd.gp.pair_id_uc(g1, g2) as usize;
            let t = Tor::from_level(i64::from(pd.nu.vals[p]), pd.nu.level)
                + pair(&pd.group, pd.f[p], g);
            t.as_level(level).expect("twist fits the working level") as u32
        })
    };
    assert!(sigma.is_closed(), "bundle twisting must be closed for valid data");
    assert!(sigma.is_normalized());

    // The gerbe is the central extension of the base by Ĝ along f.
    let mut cocycle = NonabelianCocycle::trivial(&pd.gp, dual.clone());
    cocycle.sigma = pd.f.clone();
    let gerbe = extension(&cocycle)?;

    // τ^{ρν}((φ₁,γ₁), (φ₂,γ₂)) = ν(γ₁,γ₂) ⟨φ₂, ρ(γ₁)⟩
    let gerbe_gp = gerbe.gp.clone();
    let tau = {
        let gerbe_ref = &gerbe;
        PairCochain::from_fn(&gerbe_gp, level, |x, y| {
            let (_, g1) = gerbe_ref.decode(x);
            let (phi2, g2) = gerbe_ref.decode(y);
            let p = pd.gp.pair_id_uc(g1, g2) as usize;
            let t = Tor::from_level(i64::from(pd.nu.vals[p]), pd.nu.level)
                + pair(&pd.group, phi2, pd.rho.eval(g1));
            t.as_level(level).expect("twist fits the working level") as u32
        })
    };
    assert!(tau.is_closed(), "gerbe twisting must be closed for valid data");
    assert!(tau.is_normalized());

    let bundle_algebra = twisted_algebra(&bundle_gp, &sigma)?;
    let gerbe_algebra = twisted_algebra(&gerbe_gp, &tau)?;

    let out = PontryaginDual {
        data: pd.clone(),
        dual,
        level,
        bundle,
        sigma,
        gerbe,
        tau,
        bundle_algebra,
        gerbe_algebra,
    };
    out.verify();
    Ok(out)
}

/// Gauge transform of duality data by α: 𝒢₁ → Ĝ (vanishing on units),
/// β: 𝒢₀ → G, and a closed normalized torus 2-cochain c. Returns
/// (ρ·δβ, f·δα, ν′) where
/// ν′ = c · ν · ⟨f, β∘r⟩⁻¹ · ⟨α∘pr₂, ρ′∘pr₁⟩,
/// the unique combination transporting the coupling identity to the new
/// triple; the output is revalidated.
pub fn gauge_transform(
    pd: &PontryaginData,
    alpha: &[u16],
    beta: &[u16],
    c: &PairCochain,
) -> Result<PontryaginData, PontryaginError> {
    let issues = pd.validate();
    if !issues.is_empty() {
        return Err(PontryaginError::Invalid(issues.join("; ")));
    }
    let gp = &pd.gp;
    let grp = &pd.group;
    let dual = pd.dual();
    if alpha.len() != gp.arrow_count() {
        return Err(PontryaginError::Invalid(
            "alpha must assign a character to every arrow".into(),
        ));
    }
    if gp.objects().any(|x| alpha[gp.unit(x) as usize] != dual.id) {
        return Err(PontryaginError::Invalid("alpha must vanish on units".into()));
    }
    if alpha.iter().any(|&v| usize::from(v) >= dual.order) {
        return Err(PontryaginError::Invalid("alpha escapes the dual group".into()));
    }
    if beta.len() != gp.objects().len() {
        return Err(PontryaginError::Invalid(
            "beta must assign a group element to every object".into(),
        ));
    }
    if beta.iter().any(|&v| usize::from(v) >= grp.order) {
        return Err(PontryaginError::Invalid("beta escapes the group".into()));
    }
    if c.vals.len() != gp.pair_count() || c.gp.arrow_count() != gp.arrow_count() {
        return Err(PontryaginError::Invalid(
            "c does not live on the composable pairs of the groupoid".into(),
        ));
    }
    if !c.is_normalized() || !c.is_closed() {
        return Err(PontryaginError::Invalid(
            "c must be a closed normalized torus 2-cochain".into(),
        ));
    }

    // ρ′ = ρ·δβ with δβ(γ) = β(sγ) β(rγ)⁻¹; still homomorphic since G is abelian.
    let rho2_map: Vec<u16> = gp
        .arrows()
        .map(|a| {
            let shift = grp.mul(
                beta[gp.src(a) as usize],
                grp.inv(beta[gp.dst(a) as usize]),
            );
            grp.mul(pd.rho.eval(a), shift)
        })
        .collect();
    let rho2 = GroupValuedHom::new(grp.clone(), rho2_map);

    // f′ = f·δα with δα(γ₁,γ₂) = α(γ₁) α(γ₁γ₂)⁻¹ α(γ₂).
    let mut f2 = vec![dual.id; gp.pair_count()];
    gp.for_each_pair(|a, b, p| {
        let da = dual.mul(
            alpha[a as usize],
            dual.mul(
                dual.inv(alpha[gp.compose_uc(a, b) as usize]),
                alpha[b as usize],
            ),
        );
        f2[p as usize] = dual.mul(pd.f[p as usize], da);
    });

    let level = pd
        .nu
        .level
        .lcm(&c.level)
        .lcm(&(grp.exponent() as u32));
    let nu2 = PairCochain::from_fn(gp, level, |a, b| {
        let p = gp.pair_id_uc(a, b) as usize;
        let t = Tor::from_level(i64::from(c.vals[p]), c.level)
            + Tor::from_level(i64::from(pd.nu.vals[p]), pd.nu.level)
            - pair(grp, pd.f[p], beta[gp.dst(a) as usize])
            + pair(grp, alpha[b as usize], rho2.eval(a));
        t.as_level(level).expect("gauge terms fit the working level") as u32
    });

    PontryaginData::new(pd.gp.clone(), grp.clone(), rho2, f2, nu2)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use num_bigint::BigInt;
    use num_rational::BigRational;
    use num_traits::One;

    use super::*;
    use crate::groupoid::FiniteGroupoid;
    use crate::star::block_decomposition;

    fn k4_groupoid() -> (GpRef, FiniteGroup) {
        let k4 = FiniteGroup::abelian(&[2, 2]);
        let gp = Arc::new(FiniteGroupoid::from_group(&k4));
        (gp, k4)
    }

    #[test]
    fn trivial_data_over_a_point_is_the_size_two_dft() {
        let gp = Arc::new(FiniteGroupoid::point());
        let pd = PontryaginData::trivial(&gp, FiniteGroup::cyclic(2));
        let dual = pontryagin_dualize(&pd).unwrap();
        assert_eq!(dual.level, 2);
        let ctx = dual.ctx();
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        for g in 0..2u16 {
            let col = dual.fourier_column(&ctx, dual.bundle.encode_arrow(g, 0));
            for (phi, (x, v)) in col.iter().enumerate() {
                assert_eq!(*x, dual.gerbe.encode(phi as u16, 0));
                let expect = if phi * usize::from(g) % 2 == 1 {
                    -half.clone()
                } else {
                    half.clone()
                };
                assert_eq!(v.as_rational().unwrap(), expect);
            }
        }
        let b = block_decomposition(&dual.bundle_algebra, 5).unwrap().blocks;
        let g = block_decomposition(&dual.gerbe_algebra, 5).unwrap().blocks;
        assert_eq!(b, vec![1, 1]);
        assert_eq!(g, vec![1, 1]);
    }

    #[test]
    fn doubled_heisenberg_into_z4_matches_the_twisted_oracle_on_the_unit_slice() {
        let (gp, k4) = k4_groupoid();
        let g4 = FiniteGroup::cyclic(4);
        // f = 2·heis lands in the 2-torsion of Ẑ/4.
        let mut f = vec![0u16; gp.pair_count()];
        gp.for_each_pair(|a, b, p| {
            let ta = k4.tuple(a as u16);
            let tb = k4.tuple(b as u16);
            f[p as usize] = (2 * ((ta[1] * tb[0]) % 2)) as u16;
        });
        let pd = PontryaginData::new(
            gp.clone(),
            g4.clone(),
            GroupValuedHom::constant(g4.clone(), &gp),
            f,
            PairCochain::zero(&gp, 1),
        )
        .unwrap();
        let dual = pontryagin_dualize(&pd).unwrap();
        // ρ trivial kills the gerbe twist entirely.
        assert!(dual.tau.vals.iter().all(|&v| v == 0));

        // With ρ trivial the g = 1 slice is closed under products and its
        // structure constants are exactly those of the base twisted by f.
        let oracle_sigma = PairCochain::from_fn(&gp, 4, |a, b| {
            u32::from(pd.f[gp.pair_id_uc(a, b) as usize])
        });
        let oracle = twisted_algebra(&gp, &oracle_sigma).unwrap();
        gp.for_each_pair(|a, b, _| {
            let i = dual.bundle.encode_arrow(1, a);
            let j = dual.bundle.encode_arrow(1, b);
            let (k, e) = dual.bundle_algebra.product(i, j).unwrap();
            let (ok, oe) = oracle.product(a, b).unwrap();
            assert_eq!(k, dual.bundle.encode_arrow(1, ok));
            assert_eq!(e, oe);
        });
        for a in gp.arrows() {
            let (k, e) = dual.bundle_algebra.star_basis(dual.bundle.encode_arrow(1, a));
            let (ok, oe) = oracle.star_basis(a);
            assert_eq!(k, dual.bundle.encode_arrow(1, ok));
            assert_eq!(e, oe);
        }

        // Slice by slice the bundle algebra is K4 twisted by ⟨f,g⟩: trivial
        // for even g, Heisenberg for odd g. The gerbe algebra is the group
        // algebra of the order-16 extension and must match by the duality.
        let expect = vec![1, 1, 1, 1, 1, 1, 1, 1, 2, 2];
        let b = block_decomposition(&dual.bundle_algebra, 7).unwrap().blocks;
        let g = block_decomposition(&dual.gerbe_algebra, 7).unwrap().blocks;
        assert_eq!(b, expect);
        assert_eq!(g, expect);
    }

    #[test]
    fn coboundary_coupled_data_on_z4_has_nonclosed_nu_and_still_dualizes() {
        let z4 = FiniteGroup::cyclic(4);
        let gp = Arc::new(FiniteGroupoid::from_group(&z4));
        let g2 = FiniteGroup::cyclic(2);
        let rho = GroupValuedHom::new(g2.clone(), (0..4u16).map(|k| k % 2).collect());
        // f = δα and ν = ⟨α∘pr₂, ρ∘pr₁⟩ make valid data for any α with
        // α(unit) = 0, and ν is genuinely non-closed here.
        let alpha: Vec<u16> = vec![0, 1, 1, 0];
        let dual = dual_group(&g2);
        let mut f = vec![0u16; gp.pair_count()];
        gp.for_each_pair(|a, b, p| {
            let ab = gp.compose_uc(a, b);
            f[p as usize] = dual.mul(
                alpha[a as usize],
                dual.mul(dual.inv(alpha[ab as usize]), alpha[b as usize]),
            );
        });
        let nu = PairCochain::from_fn(&gp, 2, |a, b| {
            u32::from(alpha[b as usize]) * u32::from(rho.eval(a)) % 2
        });
        assert!(!nu.is_closed());
        assert!(f.iter().any(|&v| v != 0));
        let pd = PontryaginData::new(gp, g2, rho, f, nu).unwrap();
        let out = pontryagin_dualize(&pd).unwrap();
        let b = block_decomposition(&out.bundle_algebra, 3).unwrap().blocks;
        let g = block_decomposition(&out.gerbe_algebra, 3).unwrap().blocks;
        assert_eq!(b, g);
    }

    #[test]
    fn simultaneous_bundle_and_gerbe_twists_share_block_structure() {
        let (gp, k4) = k4_groupoid();
        let g2 = FiniteGroup::cyclic(2);
        let mut f = vec![0u16; gp.pair_count()];
        gp.for_each_pair(|a, b, p| {
            let ta = k4.tuple(a as u16);
            let tb = k4.tuple(b as u16);
            f[p as usize] = ((ta[1] * tb[0]) % 2) as u16;
        });
        let nu = PairCochain::from_fn(&gp, 2, |a, b| {
            let ta = k4.tuple(a as u16);
            let tb = k4.tuple(b as u16);
            (ta[1] * tb[0]) % 2
        });
        // ν closed and ρ trivial, so the coupling holds with both twists live.
        let pd = PontryaginData::new(
            gp.clone(),
            g2.clone(),
            GroupValuedHom::constant(g2.clone(), &gp),
            f,
            nu,
        )
        .unwrap();
        let out = pontryagin_dualize(&pd).unwrap();
        assert!(out.sigma.vals.iter().any(|&v| v != 0));
        assert!(out.tau.vals.iter().any(|&v| v != 0));
        // g = 0 slice carries the Heisenberg twist ([2]), g = 1 cancels it
        // against the pairing ([1,1,1,1]); the gerbe side must agree.
        let expect = vec![1, 1, 1, 1, 2];
        let b = block_decomposition(&out.bundle_algebra, 9).unwrap().blocks;
        let g = block_decomposition(&out.gerbe_algebra, 9).unwrap().blocks;
        assert_eq!(b, expect);
        assert_eq!(g, expect);
    }

    #[test]
    fn trivial_gauge_is_the_identity_and_carry_cocycles_transport_the_invariant() {
        let z4 = FiniteGroup::cyclic(4);
        let gp = Arc::new(FiniteGroupoid::from_group(&z4));
        let g2 = FiniteGroup::cyclic(2);
        let rho = GroupValuedHom::new(g2.clone(), (0..4u16).map(|k| k % 2).collect());
        let alpha: Vec<u16> = vec![0, 1, 1, 0];
        let dualg = dual_group(&g2);
        let mut f = vec![0u16; gp.pair_count()];
        gp.for_each_pair(|a, b, p| {
            let ab = gp.compose_uc(a, b);
            f[p as usize] = dualg.mul(
                alpha[a as usize],
                dualg.mul(dualg.inv(alpha[ab as usize]), alpha[b as usize]),
            );
        });
        let nu = PairCochain::from_fn(&gp, 2, |a, b| {
            u32::from(alpha[b as usize]) * u32::from(rho.eval(a)) % 2
        });
        let pd = PontryaginData::new(gp.clone(), g2, rho, f, nu).unwrap();

        let id = gauge_transform(&pd, &[0, 0, 0, 0], &[0], &PairCochain::zero(&gp, 1)).unwrap();
        assert_eq!(id.rho.map, pd.rho.map);
        assert_eq!(id.f, pd.f);
        gp.for_each_pair(|_, _, p| {
            let before = Tor::from_level(i64::from(pd.nu.vals[p as usize]), pd.nu.level);
            let after = Tor::from_level(i64::from(id.nu.vals[p as usize]), id.nu.level);
            assert_eq!(before, after);
        });

        // The carry cocycle of Z/4 (the Z/8 extension class) at level 2 is
        // closed and nontrivial; a non-homomorphic α moves f.
        let carry = PairCochain::from_fn(&gp, 2, |a, b| u32::from(a + b >= 4));
        assert!(carry.is_closed());
        let moved = gauge_transform(&pd, &[0, 1, 0, 0], &[1], &carry).unwrap();
        assert_ne!(moved.f, pd.f);
        assert!(gp
            .arrows()
            .any(|a| pd.rho.eval(a) == moved.rho.eval(a) && {
                let p = gp.pair_id_uc(a, a) as usize;
                Tor::from_level(i64::from(moved.nu.vals[p]), moved.nu.level)
                    != Tor::from_level(i64::from(pd.nu.vals[p]), pd.nu.level)
            }));
        // Output validated inside gauge_transform; dualizing it must succeed.
        pontryagin_dualize(&moved).unwrap();
    }

    #[test]
    fn coboundary_shift_of_rho_preserves_dual_block_multisets() {
        let z4 = FiniteGroup::cyclic(4);
        let base = Arc::new(FiniteGroupoid::from_group(&z4));
        let refined = crate::constructions::refine(&base, &[vec![0], vec![0]]).unwrap();
        let gp = refined.gp.clone();
        let g2 = FiniteGroup::cyclic(2);
        let rho = GroupValuedHom::new(
            g2.clone(),
            gp.arrows()
                .map(|a| (refined.arrow_data[a as usize].2 % 2) as u16)
                .collect(),
        );
        let pd = PontryaginData::new(
            gp.clone(),
            g2,
            rho,
            vec![0; gp.pair_count()],
            PairCochain::zero(&gp, 1),
        )
        .unwrap();
        let before = pontryagin_dualize(&pd).unwrap();

        let shifted = gauge_transform(
            &pd,
            &vec![0; gp.arrow_count()],
            &[0, 1],
            &PairCochain::zero(&gp, 1),
        )
        .unwrap();
        assert!(gp.arrows().any(|a| shifted.rho.eval(a) != pd.rho.eval(a)));
        let after = pontryagin_dualize(&shifted).unwrap();

        for (x, y) in [
            (&before.bundle_algebra, &after.bundle_algebra),
            (&before.gerbe_algebra, &after.gerbe_algebra),
        ] {
            let bx = block_decomposition(x, 11).unwrap().blocks;
            let by = block_decomposition(y, 11).unwrap().blocks;
            assert_eq!(bx, by);
        }
    }

    #[test]
    fn invalid_data_is_rejected_with_the_failing_condition_named() {
        let (gp, k4) = k4_groupoid();
        let g2 = FiniteGroup::cyclic(2);
        // Nontrivial ρ with nontrivial f but ν = 0 breaks the coupling.
        let rho = GroupValuedHom::new(
            g2.clone(),
            (0..4u16).map(|a| k4.tuple(a)[0] as u16).collect(),
        );
        let mut f = vec![0u16; gp.pair_count()];
        gp.for_each_pair(|a, b, p| {
            let ta = k4.tuple(a as u16);
            let tb = k4.tuple(b as u16);
            f[p as usize] = ((ta[1] * tb[0]) % 2) as u16;
        });
        let err = PontryaginData::new(gp.clone(), g2, rho, f, PairCochain::zero(&gp, 1))
            .unwrap_err();
        match err {
            PontryaginError::Invalid(msg) => assert!(msg.contains("coupling")),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
