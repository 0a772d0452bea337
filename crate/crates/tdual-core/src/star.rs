//! Twisted groupoid *-algebras and their Wedderburn block structure.
//!
//! The algebra of a finite groupoid twisted by a normalized 2-cocycle is
//! monomial on the δ-basis: δ_a δ_b = ζ_L^{σ(a,b)} δ_{ab} for composable
//! pairs, zero otherwise, with involution δ_a* = ζ_L^{-σ(a⁻¹,a)} δ_{a⁻¹}.
//! Everything structural here is exact: structure constants are root-of-unity
//! exponents, centers are solved by a phase-labeled union-find over loops,
//! and floating point appears only inside the spectral splitter, whose output
//! is certified against exact counts before being believed.

use std::collections::HashMap;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cochain::PairCochain;
use crate::cyclotomic::{CycCtx, CycQ};
use crate::group::FiniteGroup;
use crate::groupoid::GpRef;
use std::sync::Arc;

#[derive(Debug, Error)]
pub enum StarError {
    #[error("twist is not closed at composable triple ({0}, {1}, {2})")]
    NotClosed(u32, u32, u32),
    #[error("twist is not normalized at arrow {0}")]
    NotNormalized(u32),
    #[error("gauge cochain is nonzero on the unit arrow {0}")]
    GaugeNotNormalized(u32),
    #[error("isotropy corner has {0} elements, above the spectral cap {1}")]
    CornerTooLarge(usize, usize),
    #[error("no separating central probe found after {0} attempts: {1}")]
    ProbeExhausted(u32, String),
}

/// Spectral clustering tolerance for the block splitter.
pub const SPECTRAL_TOL: f64 = 1e-9;
/// Minimum ratio of inter-cluster gap to intra-cluster spread.
pub const GAP_RATIO: f64 = 1e3;
const PROBE_ATTEMPTS: u32 = 24;
const CORNER_CAP: usize = 512;

/// The twisted convolution algebra C*(𝒢, σ) on the δ-basis indexed by
/// arrows. `products` maps composable (i, j) to (ij, exponent); `involution`
/// maps i to (i⁻¹, exponent); values are powers of ζ_level.
pub struct StarAlgebra {
    pub gp: GpRef,
    pub level: u32,
    pub sigma: PairCochain,
    pub products: HashMap<(u32, u32), (u32, u32)>,
    pub involution: Vec<(u32, u32)>,
}

/// Builds C*(𝒢, σ). The twist must be closed (otherwise the product is not
/// associative) and normalized.
pub fn twisted_algebra(gp: &GpRef, sigma: &PairCochain) -> Result<StarAlgebra, StarError> {
    assert!(Arc::ptr_eq(gp, &sigma.gp) || gp.arrow_count() == sigma.gp.arrow_count());
    let l = sigma.level;
    let mut bad_unit = None;
    gp.for_each_pair(|a, b, p| {
        if (gp.is_unit(a) || gp.is_unit(b)) && sigma.vals[p as usize] != 0 && bad_unit.is_none() {
            bad_unit = Some(if gp.is_unit(a) { a } else { b });
        }
    });
    if let Some(a) = bad_unit {
        return Err(StarError::NotNormalized(a));
    }
    if let Some((a, b, c)) = first_closedness_violation(sigma) {
        return Err(StarError::NotClosed(a, b, c));
    }
    let mut products = HashMap::new();
    gp.for_each_pair(|a, b, p| {
        products.insert((a, b), (gp.compose_uc(a, b), sigma.vals[p as usize] % l));
    });
    let involution = (0..gp.arrow_count() as u32)
        .map(|a| {
            let inv = gp.inv(a);
            (inv, (l - sigma.eval_uc(inv, a) % l) % l)
        })
        .collect();
    Ok(StarAlgebra { gp: gp.clone(), level: l, sigma: sigma.clone(), products, involution })
}

/// C*(𝒢) with trivial twist at level 1.
pub fn untwisted_algebra(gp: &GpRef) -> StarAlgebra {
    twisted_algebra(gp, &PairCochain::zero(gp, 1)).expect("zero twist is closed")
}

fn first_closedness_violation(sigma: &PairCochain) -> Option<(u32, u32, u32)> {
    let gp = sigma.gp.clone();
    let l = sigma.level;
    let mut hit = None;
    gp.for_each_pair(|a, b, p| {
        if hit.is_some() {
            return;
        }
        let ab = gp.compose_uc(a, b);
        for &c in gp.dst_fiber(gp.src(b)) {
            let bc = gp.compose_uc(b, c);
            let v = (sigma.eval_uc(b, c) + l - sigma.eval_uc(ab, c) % l
                + sigma.eval_uc(a, bc)
                + l
                - sigma.vals[p as usize] % l)
                % l;
            if v != 0 {
                hit = Some((a, b, c));
                return;
            }
        }
    });
    hit
}

impl StarAlgebra {
    pub fn dim(&self) -> usize {
        self.gp.arrow_count()
    }

    /// δ_i δ_j as (ij, ζ-exponent), None when not composable.
    pub fn product(&self, i: u32, j: u32) -> Option<(u32, u32)> {
        self.products.get(&(i, j)).copied()
    }

    /// δ_i* as (i⁻¹, ζ-exponent).
    pub fn star_basis(&self, i: u32) -> (u32, u32) {
        self.involution[i as usize]
    }

    /// Multiplies coefficient vectors over the δ-basis, exactly.
    pub fn mult(&self, ctx: &CycCtx, a: &[CycQ], b: &[CycQ]) -> Vec<CycQ> {
        let mut out = vec![ctx.zero(); self.dim()];
        for (&(i, j), &(k, e)) in &self.products {
            if a[i as usize].is_zero() || b[j as usize].is_zero() {
                continue;
            }
            let term = ctx.mul(&a[i as usize], &b[j as usize]);
            let term = ctx.mul(&term, &ctx.root(e as i64));
            out[k as usize] = ctx.add(&out[k as usize], &term);
        }
        out
    }

    /// The adjoint of a coefficient vector, exactly.
    pub fn star(&self, ctx: &CycCtx, a: &[CycQ]) -> Vec<CycQ> {
        let mut out = vec![ctx.zero(); self.dim()];
        for i in 0..self.dim() {
            if a[i].is_zero() {
                continue;
            }
            let (j, e) = self.involution[i];
            let term = ctx.mul(&ctx.conj(&a[i]), &ctx.root(e as i64));
            out[j as usize] = ctx.add(&out[j as usize], &term);
        }
        out
    }

    /// The multiplicative unit: the sum of unit deltas.
    pub fn unit_vec(&self, ctx: &CycCtx) -> Vec<CycQ> {
        let mut out = vec![ctx.zero(); self.dim()];
        for x in self.gp.objects() {
            out[self.gp.unit(x) as usize] = ctx.one();
        }
        out
    }

    /// Re-derives the algebra axioms from the stored tables: associativity
    /// of the structure constants on all composable triples, * an
    /// anti-automorphism with *² = identity. Violations come back as
    /// messages; empty means valid.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        let l = self.level;
        let gp = &self.gp;
        for (&(a, b), &(ab, e_ab)) in &self.products {
            for &c in gp.dst_fiber(gp.src(b)) {
                let (bc, e_bc) = self.products[&(b, c)];
                let (abc1, e1) = self.products[&(ab, c)];
                let (abc2, e2) = self.products[&(a, bc)];
                if abc1 != abc2 || (e_ab + e1) % l != (e_bc + e2) % l {
                    out.push(format!("associativity fails at ({a}, {b}, {c})"));
                }
            }
        }
        for i in 0..self.dim() as u32 {
            // *² = id: the two exponents must cancel (the second star
            // conjugates the first one's root of unity).
            let (j, e) = self.involution[i as usize];
            let (back, f) = self.involution[j as usize];
            if back != i || (e + f) % l != 0 {
                out.push(format!("involution is not an involution at {i}"));
            }
        }
        for (&(a, b), &(ab, e)) in &self.products {
            // (δ_a δ_b)* = δ_b* δ_a*
            let (ab_s, e_ab_s) = self.involution[ab as usize];
            let (b_s, e_b) = self.involution[b as usize];
            let (a_s, e_a) = self.involution[a as usize];
            let (prod, e_p) = self.products[&(b_s, a_s)];
            if prod != ab_s || (l - e % l + e_ab_s) % l != (e_b + e_a + e_p) % l {
                out.push(format!("involution fails anti-multiplicativity at ({a}, {b})"));
            }
        }
        out
    }
}

/// The result of a block decomposition, with the data needed to reproduce
/// and audit it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockReport {
    /// Matrix block sizes, ascending. Σ blocks[i]² = dim.
    pub blocks: Vec<u32>,
    /// Exact center dimension of the full algebra (= number of blocks).
    pub center_dim: usize,
    pub seed: u64,
    pub tolerance: f64,
    pub notes: Vec<String>,
}

impl BlockReport {
    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }
}

/// Ordered K0 descriptor: Z^rank with the coordinatewise positive cone and
/// the block dimension vector as order unit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct K0 {
    pub rank: usize,
    /// Block dimensions, ascending; the class of the algebra unit.
    pub order_unit: Vec<u32>,
}

impl K0 {
    /// Membership in the positive cone N^rank.
    pub fn is_positive(&self, v: &[i64]) -> bool {
        v.len() == self.rank && v.iter().all(|&c| c >= 0)
    }
}

pub fn k0(alg: &StarAlgebra, seed: u64) -> Result<K0, StarError> {
    let report = block_decomposition(alg, seed)?;
    Ok(K0 { rank: report.blocks.len(), order_unit: report.blocks })
}

/// Weighted union-find over basis indices: entries related by
/// coeff[child] = ζ^off · coeff[parent], components killed when a relation
/// cycle forces a nontrivial root of unity to fix the coefficient.
struct PhaseUnionFind {
    parent: Vec<u32>,
    off: Vec<u32>,
    dead: Vec<bool>,
    level: u32,
}

impl PhaseUnionFind {
    fn new(n: usize, level: u32) -> PhaseUnionFind {
        PhaseUnionFind {
            parent: (0..n as u32).collect(),
            off: vec![0; n],
            dead: vec![false; n],
            level,
        }
    }

    /// Returns (root, offset) with coeff[i] = ζ^offset coeff[root].
    fn find(&mut self, i: u32) -> (u32, u32) {
        if self.parent[i as usize] == i {
            return (i, 0);
        }
        let (root, up) = self.find(self.parent[i as usize]);
        self.parent[i as usize] = root;
        self.off[i as usize] = (self.off[i as usize] + up) % self.level;
        (root, self.off[i as usize])
    }

    /// Imposes coeff[j] = ζ^d coeff[i].
    fn relate(&mut self, i: u32, j: u32, d: u32) {
        let l = self.level;
        let (ri, oi) = self.find(i);
        let (rj, oj) = self.find(j);
        if ri == rj {
            if (oi + d) % l != oj {
                self.dead[ri as usize] = true;
            }
            return;
        }
        // coeff[rj] = ζ^{-oj} coeff[j] = ζ^{d - oj} coeff[i] = ζ^{oi + d - oj} coeff[ri]
        self.parent[rj as usize] = ri;
        self.off[rj as usize] = ((oi + d) % l + l - oj) % l;
        self.dead[ri as usize] |= self.dead[rj as usize];
    }

    /// Surviving classes as (root, members-with-offsets), deterministic
    /// order by root index.
    fn classes(&mut self, n: usize) -> Vec<(u32, Vec<(u32, u32)>)> {
        let mut by_root: HashMap<u32, Vec<(u32, u32)>> = HashMap::new();
        for i in 0..n as u32 {
            let (r, o) = self.find(i);
            by_root.entry(r).or_default().push((i, o));
        }
        let mut out: Vec<(u32, Vec<(u32, u32)>)> = by_root
            .into_iter()
            .filter(|(r, _)| !self.dead[*r as usize])
            .collect();
        out.sort_by_key(|(r, _)| *r);
        out
    }
}

/// Exact center dimension of C*(𝒢, σ): central elements are supported on
/// isotropy loops, with coefficients tied along conjugation by every arrow
/// into the loop's object. Counts the surviving phase-consistent classes.
pub fn center_dimension(alg: &StarAlgebra) -> usize {
    let gp = &alg.gp;
    let l = alg.level;
    let loops: Vec<u32> = gp.arrows().filter(|&a| gp.src(a) == gp.dst(a)).collect();
    let index: HashMap<u32, u32> =
        loops.iter().enumerate().map(|(i, &a)| (a, i as u32)).collect();
    let mut uf = PhaseUnionFind::new(loops.len(), l);
    for (li, &g) in loops.iter().enumerate() {
        let x = gp.dst(g);
        for &b in gp.dst_fiber(x) {
            let b_inv = gp.inv(b);
            let conj = gp.compose_uc(gp.compose_uc(b_inv, g), b);
            let cj = index[&conj];
            // c_g ζ^{σ(g,b)} = c_{b⁻¹gb} ζ^{σ(b, b⁻¹gb)}
            let d = (alg.sigma.eval_uc(g, b) + l - alg.sigma.eval_uc(b, conj) % l) % l;
            uf.relate(li as u32, cj, d);
        }
    }
    uf.classes(loops.len()).len()
}

/// Block sizes of the twisted group algebra C*(H, σ_H) for a finite group
/// realized as the isotropy corner at a basepoint. Exact center via the
/// phase union-find, sizes via a seeded spectral split of a random
/// self-adjoint central probe, certified against the exact center dimension
/// and the exact minimal-polynomial degree of the probe.
fn corner_blocks(
    group: &FiniteGroup,
    sigma_h: &dyn Fn(u16, u16) -> u32,
    level: u32,
    seed: u64,
    notes: &mut Vec<String>,
) -> Result<Vec<u32>, StarError> {
    let n = group.order;
    if n > CORNER_CAP {
        return Err(StarError::CornerTooLarge(n, CORNER_CAP));
    }
    let l = level;
    // Probes need an imaginary unit to separate conjugate block pairs, so
    // the splitter works at level lcm(l, 4) and rescales twist exponents.
    let work = l * (4 / num_integer::gcd(l, 4));
    let ratio = work / l;
    let ctx = CycCtx::new(work);
    let ex = |e: u32| i64::from(e % l * ratio);

    // Exact center: c_h ζ^{σ(h,b)} = c_{b⁻¹hb} ζ^{σ(b, b⁻¹hb)} for all b.
    let mut uf = PhaseUnionFind::new(n, l);
    for h in 0..n as u16 {
        for b in 0..n as u16 {
            let hb = group.conj(group.inv(b), h);
            let d = (sigma_h(h, b) + l - sigma_h(b, hb) % l) % l;
            uf.relate(h as u32, hb as u32, d);
        }
    }
    let classes = uf.classes(n);
    let k = classes.len();
    assert!(k >= 1, "identity class always survives");

    // Exact center basis over the cyclotomic field, verified to commute.
    let mut basis: Vec<Vec<CycQ>> = Vec::with_capacity(k);
    for (_, members) in &classes {
        let mut z = vec![ctx.zero(); n];
        for &(h, o) in members {
            z[h as usize] = ctx.root(ex(o));
        }
        basis.push(z);
    }
    let group_mult = |a: &[CycQ], b: &[CycQ]| -> Vec<CycQ> {
        let mut out = vec![ctx.zero(); n];
        for i in 0..n as u16 {
            if a[i as usize].is_zero() {
                continue;
            }
            for j in 0..n as u16 {
                if b[j as usize].is_zero() {
                    continue;
                }
                let kk = group.mul(i, j) as usize;
                let term = ctx.mul(&a[i as usize], &b[j as usize]);
                let term = ctx.mul(&term, &ctx.root(ex(sigma_h(i, j))));
                out[kk] = ctx.add(&out[kk], &term);
            }
        }
        out
    };
    for z in &basis {
        for b in 0..n as u16 {
            let mut delta = vec![ctx.zero(); n];
            delta[b as usize] = ctx.one();
            let zb = group_mult(z, &delta);
            let bz = group_mult(&delta, z);
            assert!(
                zb.iter().zip(&bz).all(|(x, y)| x == y),
                "center candidate fails to commute"
            );
        }
    }

    let star = |a: &[CycQ]| -> Vec<CycQ> {
        let mut out = vec![ctx.zero(); n];
        for h in 0..n as u16 {
            if a[h as usize].is_zero() {
                continue;
            }
            let hi = group.inv(h);
            let e = (l - sigma_h(hi, h) % l) % l;
            let term = ctx.mul(&ctx.conj(&a[h as usize]), &ctx.root(ex(e)));
            out[hi as usize] = ctx.add(&out[hi as usize], &term);
        }
        out
    };

    let mut last_reason = String::new();
    for attempt in 0..PROBE_ATTEMPTS {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed.wrapping_add(u64::from(attempt).wrapping_mul(0x9E3779B97F4A7C15)));
        let mut probe = vec![ctx.zero(); n];
        let imag = ctx.root(i64::from(work / 4));
        for z in &basis {
            // Random element of Z[i] ⊂ Z[ζ_work]; a purely real probe can
            // fail to separate conjugate blocks.
            let c = ctx.add(
                &ctx.from_int(rng.gen_range(1..=97i64)),
                &ctx.mul(&ctx.from_int(rng.gen_range(0..=97i64)), &imag),
            );
            for i in 0..n {
                probe[i] = ctx.add(&probe[i], &ctx.mul(&c, &z[i]));
            }
        }
        let adj = star(&probe);
        let h: Vec<CycQ> = (0..n).map(|i| ctx.add(&probe[i], &adj[i])).collect();

        // Exact certificate: degree of the minimal polynomial of h equals
        // the center dimension iff the probe separates all blocks.
        let minpoly_deg = minimal_poly_degree(&ctx, &group_mult, group, &h, n);
        if minpoly_deg != k {
            last_reason = format!("probe separates {minpoly_deg} of {k} blocks");
            continue;
        }

        // Numeric split of the left regular representation of h.
        let mut re = DMatrix::<f64>::zeros(n, n);
        let mut im = DMatrix::<f64>::zeros(n, n);
        for j in 0..n as u16 {
            for i in 0..n as u16 {
                if h[i as usize].is_zero() {
                    continue;
                }
                let target = group.mul(i, j) as usize;
                let val = ctx.mul(&h[i as usize], &ctx.root(ex(sigma_h(i, j))));
                let (vr, vi) = ctx.to_complex(&val);
                re[(target, j as usize)] += vr;
                im[(target, j as usize)] += vi;
            }
        }
        let scale = re.amax().max(im.amax()).max(1.0);
        let herm_defect = (&re - re.transpose()).amax().max((&im + im.transpose()).amax());
        assert!(herm_defect < 1e-10 * scale, "probe representation must be hermitian");
        let mut big = DMatrix::<f64>::zeros(2 * n, 2 * n);
        big.view_mut((0, 0), (n, n)).copy_from(&re);
        big.view_mut((n, n), (n, n)).copy_from(&re);
        big.view_mut((0, n), (n, n)).copy_from(&(-&im));
        big.view_mut((n, 0), (n, n)).copy_from(&im);
        let mut eigs: Vec<f64> = nalgebra::SymmetricEigen::new(big).eigenvalues.iter().copied().collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());

        match cluster_and_certify(&eigs, scale, k, n) {
            Ok(mut sizes) => {
                if attempt > 0 {
                    notes.push(format!("corner probe retried {attempt} time(s)"));
                }
                sizes.sort_unstable();
                return Ok(sizes);
            }
            Err(reason) => {
                last_reason = reason;
                continue;
            }
        }
    }
    Err(StarError::ProbeExhausted(PROBE_ATTEMPTS, last_reason))
}

/// Degree of the minimal polynomial of `h` in the twisted group algebra,
/// by exact Gaussian elimination over Q(ζ) on its powers.
fn minimal_poly_degree(
    ctx: &CycCtx,
    group_mult: &dyn Fn(&[CycQ], &[CycQ]) -> Vec<CycQ>,
    group: &FiniteGroup,
    h: &[CycQ],
    n: usize,
) -> usize {
    // Row-echelon pivots: (column, normalized row).
    let mut pivots: Vec<(usize, Vec<CycQ>)> = Vec::new();
    let mut power = vec![ctx.zero(); n];
    power[group.id as usize] = ctx.one();
    loop {
        let mut v = power.clone();
        for (col, row) in &pivots {
            if v[*col].is_zero() {
                continue;
            }
            let c = v[*col].clone();
            for i in 0..n {
                v[i] = ctx.sub(&v[i], &ctx.mul(&c, &row[i]));
            }
        }
        let lead = (0..n).find(|&i| !v[i].is_zero());
        match lead {
            None => return pivots.len(),
            Some(col) => {
                let inv = ctx.inv(&v[col]).expect("nonzero lead");
                let row: Vec<CycQ> = (0..n).map(|i| ctx.mul(&v[i], &inv)).collect();
                pivots.push((col, row));
            }
        }
        assert!(pivots.len() <= n, "powers cannot exceed the algebra dimension");
        power = group_mult(&power, h);
    }
}

/// Clusters sorted eigenvalues of the realified probe, then certifies:
/// cluster count = k, every multiplicity an even number whose half is a
/// perfect square, squares summing to the corner dimension, and the
/// inter/intra gap ratio above the safeguard.
fn cluster_and_certify(eigs: &[f64], scale: f64, k: usize, n: usize) -> Result<Vec<u32>, String> {
    let thresh = SPECTRAL_TOL * scale;
    let mut clusters: Vec<(f64, f64, usize)> = Vec::new(); // (min, max, count)
    for &e in eigs {
        match clusters.last_mut() {
            Some((_, hi, count)) if e - *hi <= thresh => {
                *hi = e;
                *count += 1;
            }
            _ => clusters.push((e, e, 1)),
        }
    }
    if clusters.len() != k {
        return Err(format!("found {} spectral clusters, center dimension is {k}", clusters.len()));
    }
    let mut max_spread = 0.0f64;
    let mut min_gap = f64::INFINITY;
    for (i, (lo, hi, _)) in clusters.iter().enumerate() {
        max_spread = max_spread.max(hi - lo);
        if i + 1 < clusters.len() {
            min_gap = min_gap.min(clusters[i + 1].0 - hi);
        }
    }
    if clusters.len() > 1 && min_gap < GAP_RATIO * max_spread.max(thresh / GAP_RATIO) {
        return Err(format!("ambiguous clustering: gap {min_gap:.3e}, spread {max_spread:.3e}"));
    }
    let mut sizes = Vec::with_capacity(k);
    let mut total = 0usize;
    for (_, _, count) in &clusters {
        if count % 2 != 0 {
            return Err(format!("odd realified multiplicity {count}"));
        }
        let m = count / 2;
        let root = (m as f64).sqrt().round() as usize;
        if root * root != m {
            return Err(format!("multiplicity {m} is not a perfect square"));
        }
        sizes.push(root as u32);
        total += m;
    }
    if total != n {
        return Err(format!("multiplicities sum to {total}, corner dimension is {n}"));
    }
    Ok(sizes)
}

/// Wedderburn block sizes of C*(𝒢, σ), ascending.
///
/// Route: split into connected components; on each, reduce to the isotropy
/// corner at a basepoint through the transversal matrix units (the unit
/// idempotents at the component's objects are pairwise equivalent, so every
/// block size scales by the orbit size); decompose the corner exactly
/// (center) plus numerically (sizes), certified. The independently computed
/// center dimension of the full algebra must agree with the block count.
pub fn block_decomposition(alg: &StarAlgebra, seed: u64) -> Result<BlockReport, StarError> {
    let gp = &alg.gp;
    let (comp_of, comp_count) = gp.components();
    let mut notes = Vec::new();
    let mut blocks: Vec<u32> = Vec::new();
    for comp in 0..comp_count {
        let members: Vec<u32> = gp
            .objects()
            .filter(|&x| comp_of[x as usize] == comp as u32)
            .collect();
        let m = members.len() as u32;
        let basepoint = members[0];
        let (group, embed) = gp.isotropy_group(basepoint);
        let sigma_h = |i: u16, j: u16| alg.sigma.eval_uc(embed[i as usize], embed[j as usize]);
        let corner = corner_blocks(&group, &sigma_h, alg.level, seed, &mut notes)?;
        notes.push(format!(
            "component {comp}: {m} objects, isotropy order {}, corner blocks {:?}",
            group.order, corner
        ));
        let mut arrows_accounted = 0u64;
        for &nb in &corner {
            blocks.push(nb * m);
            arrows_accounted += u64::from(nb * m) * u64::from(nb * m);
        }
        let comp_arrows = gp
            .arrows()
            .filter(|&a| comp_of[gp.dst(a) as usize] == comp as u32)
            .count() as u64;
        assert_eq!(arrows_accounted, comp_arrows, "block sizes must exhaust the component");
    }
    blocks.sort_unstable();
    let center = center_dimension(alg);
    assert_eq!(center, blocks.len(), "full-algebra center must match the block count");
    let total: u64 = blocks.iter().map(|&b| u64::from(b) * u64::from(b)).sum();
    assert_eq!(total, alg.dim() as u64, "sum of squared block sizes must be the dimension");
    Ok(BlockReport {
        blocks,
        center_dim: center,
        seed,
        tolerance: SPECTRAL_TOL,
        notes,
    })
}

/// The gauge isomorphism Φ(δ_γ) = ζ^{u(γ)} δ_γ from C*(𝒢, σ) onto
/// C*(𝒢, σ − δu). Requires u to vanish on units (so Φ is *-preserving);
/// verifies multiplicativity and *-compatibility on every basis pair before
/// returning the target algebra.
pub fn gauge_isomorphism(alg: &StarAlgebra, u: &[u32]) -> Result<StarAlgebra, StarError> {
    let gp = &alg.gp;
    let l = alg.level;
    assert_eq!(u.len(), gp.arrow_count());
    for x in gp.objects() {
        if u[gp.unit(x) as usize] % l != 0 {
            return Err(StarError::GaugeNotNormalized(gp.unit(x)));
        }
    }
    let shifted = alg.sigma.gauge_shift(u);
    let target = twisted_algebra(gp, &shifted)?;
    // Φ(δ_i δ_j) = Φ(δ_i) Φ(δ_j) on every composable pair.
    for (&(i, j), &(k, e)) in &alg.products {
        let (k2, e2) = target.products[&(i, j)];
        assert_eq!(k, k2);
        let lhs = (e + u[k as usize]) % l;
        let rhs = (u[i as usize] + u[j as usize] + e2) % l;
        assert_eq!(lhs, rhs, "gauge map fails multiplicativity at ({i}, {j})");
    }
    // Φ(δ_i*) = Φ(δ_i)* on every basis element.
    for i in 0..gp.arrow_count() as u32 {
        let (j, e) = alg.involution[i as usize];
        let (j2, e2) = target.involution[i as usize];
        assert_eq!(j, j2);
        let lhs = (e + u[j as usize]) % l;
        let rhs = ((l - u[i as usize] % l) % l + e2) % l;
        assert_eq!(lhs, rhs, "gauge map fails *-compatibility at {i}");
    }
    Ok(target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cochain::Cochain;
    use crate::cochain::Tuples;
    use crate::groupoid::FiniteGroupoid;
    use crate::torus::Tor;
    use num_rational::BigRational;
    use num_traits::Zero;

    fn k4_heisenberg(gp: &GpRef, group: &FiniteGroup) -> PairCochain {
        PairCochain::from_fn(gp, 2, |a, b| {
            let ta = group.tuple(a as u16);
            let tb = group.tuple(b as u16);
            (ta[1] * tb[0]) % 2
        })
    }

    #[test]
    fn point_algebra_is_one_dimensional() {
        let gp: GpRef = Arc::new(FiniteGroupoid::point());
        let alg = untwisted_algebra(&gp);
        assert_eq!(alg.dim(), 1);
        assert_eq!(alg.product(0, 0), Some((0, 0)));
        assert!(alg.validate().is_empty());
        let report = block_decomposition(&alg, 7).unwrap();
        assert_eq!(report.blocks, vec![1]);
    }

    #[test]
    fn pair_groupoid_yields_matrix_units() {
        for n in [2usize, 3, 4] {
            let gp: GpRef = Arc::new(FiniteGroupoid::pair_groupoid(n));
            let alg = untwisted_algebra(&gp);
            assert!(alg.validate().is_empty());
            // Matrix-unit oracle: δ_a δ_b = [src a = dst b] δ_{a∘b} with no twist.
            for a in gp.arrows() {
                for b in gp.arrows() {
                    match alg.product(a, b) {
                        Some((c, e)) => {
                            assert_eq!(gp.src(a), gp.dst(b));
                            assert_eq!(e, 0);
                            assert_eq!(gp.dst(c), gp.dst(a));
                            assert_eq!(gp.src(c), gp.src(b));
                        }
                        None => assert_ne!(gp.src(a), gp.dst(b)),
                    }
                }
            }
            let report = block_decomposition(&alg, 3).unwrap();
            assert_eq!(report.blocks, vec![n as u32]);
            let k = k0(&alg, 3).unwrap();
            assert_eq!(k.rank, 1);
            assert_eq!(k.order_unit, vec![n as u32]);
            assert!(k.is_positive(&[2]) && !k.is_positive(&[-1]));
        }
    }

    #[test]
    fn klein_four_blocks_split_and_fuse() {
        let group = FiniteGroup::abelian(&[2, 2]);
        let gp: GpRef = Arc::new(FiniteGroupoid::from_group(&group));
        let plain = untwisted_algebra(&gp);
        assert_eq!(block_decomposition(&plain, 11).unwrap().blocks, vec![1, 1, 1, 1]);
        assert_eq!(k0(&plain, 11).unwrap().rank, 4);

        let sigma = k4_heisenberg(&gp, &group);
        assert!(sigma.is_closed() && sigma.is_normalized());
        let twisted = twisted_algebra(&gp, &sigma).unwrap();
        assert!(twisted.validate().is_empty());
        // Anticommutation oracle: the two generators x = (1,0), y = (0,1).
        let x = u32::from(group.from_tuple(&[1, 0]));
        let y = u32::from(group.from_tuple(&[0, 1]));
        let (xy, e1) = twisted.product(x, y).unwrap();
        let (yx, e2) = twisted.product(y, x).unwrap();
        assert_eq!(xy, yx);
        assert_eq!((e1 + 1) % 2, e2 % 2, "δ_x δ_y = -δ_y δ_x");
        let report = block_decomposition(&twisted, 11).unwrap();
        assert_eq!(report.blocks, vec![2]);
        let k = k0(&twisted, 11).unwrap();
        assert_eq!((k.rank, k.order_unit.clone()), (1, vec![2]));
    }

    #[test]
    fn cyclic_four_blocks_match_dft() {
        let group = FiniteGroup::cyclic(4);
        let gp: GpRef = Arc::new(FiniteGroupoid::from_group(&group));
        let alg = untwisted_algebra(&gp);
        // DFT oracle: the four character idempotents p_k = (1/4) Σ_j ζ^{-kj} δ_j
        // are central, idempotent, orthogonal, and sum to 1, exactly.
        let ctx = CycCtx::new(4);
        let quarter = BigRational::new(1.into(), 4.into());
        let idem: Vec<Vec<CycQ>> = (0..4i64)
            .map(|k| {
                (0..4usize)
                    .map(|j| ctx.scale(&quarter, &ctx.root(-k * j as i64)))
                    .collect()
            })
            .collect();
        let mut total = vec![ctx.zero(); 4];
        for (k, p) in idem.iter().enumerate() {
            let sq = alg.mult(&ctx, p, p);
            assert!(sq.iter().zip(p).all(|(a, b)| a == b), "p_{k} idempotent");
            for (k2, q) in idem.iter().enumerate() {
                if k2 != k {
                    let prod = alg.mult(&ctx, p, q);
                    assert!(prod.iter().all(|c| c.is_zero()), "p_{k} p_{k2} = 0");
                }
            }
            for i in 0..4 {
                total[i] = ctx.add(&total[i], &p[i]);
            }
        }
        assert_eq!(total, alg.unit_vec(&ctx));
        assert_eq!(block_decomposition(&alg, 5).unwrap().blocks, vec![1, 1, 1, 1]);
    }

    #[test]
    fn quaternion_group_has_one_quadratic_block() {
        let group = FiniteGroup::quaternion();
        let gp: GpRef = Arc::new(FiniteGroupoid::from_group(&group));
        let alg = untwisted_algebra(&gp);
        let report = block_decomposition(&alg, 2).unwrap();
        assert_eq!(report.blocks, vec![1, 1, 1, 1, 2]);
        assert_eq!(center_dimension(&alg), 5);
    }

    #[test]
    fn refined_z2_keeps_the_block_count() {
        let group = FiniteGroup::cyclic(2);
        let base: GpRef = Arc::new(FiniteGroupoid::from_group(&group));
        let base_alg = untwisted_algebra(&base);
        let base_blocks = block_decomposition(&base_alg, 9).unwrap();
        assert_eq!(base_blocks.blocks, vec![1, 1]);

        let refined = crate::constructions::refine(&base, &[vec![0], vec![0]]).unwrap();
        let rgp = refined.gp.clone();
        assert_eq!(rgp.arrow_count(), 8);
        let ralg = untwisted_algebra(&rgp);
        let rblocks = block_decomposition(&ralg, 9).unwrap();
        assert_eq!(rblocks.blocks, vec![2, 2]);
        assert_eq!(rblocks.block_count(), base_blocks.block_count());
    }

    #[test]
    fn involution_tables_pass_validation_on_random_twists() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let group = FiniteGroup::abelian(&[2, 2]);
        let gp: GpRef = Arc::new(FiniteGroupoid::from_group(&group));
        let tuples = Tuples::new(&gp, 2);
        for _ in 0..6 {
            // Coboundaries of random normalized 1-cochains are always closed.
            let u = Cochain::random(&tuples, 1, 4, &mut rng).normalize(&tuples);
            let delta = tuples.differential(&u);
            let sigma = PairCochain::from_cochain(&delta, 4);
            let alg = twisted_algebra(&gp, &sigma).unwrap();
            assert!(alg.validate().is_empty());
            assert_eq!(block_decomposition(&alg, 31).unwrap().blocks, vec![1, 1, 1, 1]);
        }
    }

    #[test]
    fn not_closed_twists_are_rejected_with_a_triple() {
        let group = FiniteGroup::cyclic(4);
        let gp: GpRef = Arc::new(FiniteGroupoid::from_group(&group));
        // δσ(1,1,2) = σ(1,2) - σ(2,2) + σ(1,3) - σ(1,1) = -1 ≠ 0 mod 4.
        let sigma = PairCochain::from_fn(&gp, 4, |a, b| if a == 1 && b == 1 { 1 } else { 0 });
        match twisted_algebra(&gp, &sigma) {
            Err(StarError::NotClosed(a, b, c)) => {
                let l = 4;
                let ab = gp.compose_uc(a, b);
                let bc = gp.compose_uc(b, c);
                let v = (sigma.eval_uc(b, c) + l - sigma.eval_uc(ab, c)
                    + sigma.eval_uc(a, bc)
                    + l
                    - sigma.eval_uc(a, b))
                    % l;
                assert_ne!(v, 0, "reported triple must witness the failure");
            }
            other => panic!("expected NotClosed, got {:?}", other.map(|a| a.dim())),
        }
    }

    #[test]
    fn gauge_isomorphism_preserves_block_multisets() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let group = FiniteGroup::abelian(&[2, 2]);
        let gp: GpRef = Arc::new(FiniteGroupoid::from_group(&group));
        let sigma = {
            let s = k4_heisenberg(&gp, &group);
            PairCochain::from_fn(&gp, 4, |a, b| 2 * s.eval_uc(a, b))
        };
        assert!(sigma.is_closed());
        let alg = twisted_algebra(&gp, &sigma).unwrap();
        for _ in 0..4 {
            let mut u: Vec<u32> = (0..gp.arrow_count()).map(|_| rng.gen_range(0..4)).collect();
            u[gp.unit(0) as usize] = 0;
            let target = gauge_isomorphism(&alg, &u).unwrap();
            let b1 = block_decomposition(&alg, 17).unwrap().blocks;
            let b2 = block_decomposition(&target, 17).unwrap().blocks;
            assert_eq!(b1, b2);
        }
    }

    #[test]
    fn mult_and_star_agree_with_tables() {
        let group = FiniteGroup::abelian(&[2, 2]);
        let gp: GpRef = Arc::new(FiniteGroupoid::from_group(&group));
        let sigma = k4_heisenberg(&gp, &group);
        let alg = twisted_algebra(&gp, &sigma).unwrap();
        let ctx = CycCtx::new(2);
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        for _ in 0..5 {
            let a: Vec<CycQ> = (0..4)
                .map(|_| ctx.from_int(rng.gen_range(-3..=3i64)))
                .collect();
            let b: Vec<CycQ> = (0..4)
                .map(|_| ctx.from_int(rng.gen_range(-3..=3i64)))
                .collect();
            // (ab)* = b* a*
            let ab = alg.mult(&ctx, &a, &b);
            let lhs = alg.star(&ctx, &ab);
            let rhs = alg.mult(&ctx, &alg.star(&ctx, &b), &alg.star(&ctx, &a));
            assert_eq!(lhs, rhs);
            // a** = a
            let back = alg.star(&ctx, &alg.star(&ctx, &a));
            assert_eq!(back, a);
            // unit acts as identity
            let unit = alg.unit_vec(&ctx);
            assert_eq!(alg.mult(&ctx, &unit, &a), a);
            assert_eq!(alg.mult(&ctx, &a, &unit), a);
        }
        let zero_check: Vec<CycQ> = vec![ctx.zero(); 4];
        assert!(zero_check.iter().all(|c| c.as_rational().is_some_and(|q| q.is_zero())));
    }

    #[test]
    fn disconnected_algebras_concatenate_blocks() {
        let group = FiniteGroup::abelian(&[2, 2]);
        let g1 = FiniteGroupoid::from_group(&group);
        let g2 = FiniteGroupoid::pair_groupoid(3);
        let (both, _, _) = FiniteGroupoid::disjoint_union(&[&g1, &g2]);
        let both: GpRef = Arc::new(both);
        let alg = untwisted_algebra(&both);
        let report = block_decomposition(&alg, 13).unwrap();
        assert_eq!(report.blocks, vec![1, 1, 1, 1, 3]);
        assert_eq!(report.center_dim, 5);
        let tor_bridge = Tor::from_level(1, 2);
        assert_eq!(tor_bridge.as_level(2), Some(1));
    }
}
