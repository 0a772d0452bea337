//! Groupoid cohomology over exact coefficients.
//!
//! Cochain lattices are integer exponent vectors over the normalized tuple
//! basis (tuples with no unit entries; degree 0 is indexed by objects). Two
//! coefficient semantics are supported: strict cyclic Z/m, where witnesses
//! must exist at denominator m, and the torus Q/Z carried at a working level
//! L, where witnesses may take larger denominators (divisibility). Both
//! reduce to Smith normal form over the integers with retained unimodular
//! transforms, so every membership answer comes with a constructive witness
//! or a certificate of absence.
//!
//! The second half of the module is the two-sided complex of a bimodule:
//! functions on tuples (h₁,…,h_j, p, k₁,…,k_i) with partial differentials
//! δℋ and δ𝒦, the augmentations from the one-sided complexes, and the
//! witness solver for the descent equations tying a cocycle ψ on the left
//! groupoid to a cocycle χ on the right one.

use crate::cochain::{Cochain, PairCochain, Tuples};
use crate::groupoid::GpRef;
use crate::morita::Bimodule;
use crate::snf::{kernel_mod_basis, snf, solve_mod, solve_mod1, IMat, Snf};
use crate::torus::Tor;
use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CohomologyError {
    #[error("level must be positive")]
    ZeroLevel,
    #[error("cochain value {0} is not representable at level {1}")]
    LevelMismatch(Tor, u32),
    #[error("cochain is not closed")]
    NotClosed,
    #[error("cochain is not normalized")]
    NotNormalized,
    #[error("state space too large for enumeration ({0} states)")]
    TooLarge(u128),
    #[error("operation undefined at degree {0}")]
    BadDegree(usize),
    #[error("total cochain component {0} has inconsistent bidegree")]
    BidegreeMismatch(usize),
}

/// Coefficient group for the homological engine (trivial action).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coefficient {
    /// Strict Z/m, embedded as (1/m)Z/Z: coboundary witnesses must exist at
    /// denominator m.
    Cyclic(u32),
    /// Q/Z carried at working level L: classes are computed at denominator
    /// L, witnesses may use any denominator.
    Torus(u32),
}

impl Coefficient {
    pub fn level(&self) -> u32 {
        match *self {
            Coefficient::Cyclic(m) => m,
            Coefficient::Torus(l) => l,
        }
    }

    pub fn divisible(&self) -> bool {
        matches!(self, Coefficient::Torus(_))
    }
}

/// Coordinate basis: the normalized tuples of one degree.
#[derive(Clone, Debug)]
pub(crate) struct Basis {
    pub degree: usize,
    pub ids: Vec<u32>,
    pub pos: Vec<u32>,
}

pub(crate) fn normalized_basis(tuples: &Tuples, degree: usize) -> Basis {
    let total = tuples.count(degree);
    if degree == 0 {
        return Basis { degree, ids: (0..total as u32).collect(), pos: (0..total as u32).collect() };
    }
    let mut ids = Vec::new();
    let mut pos = vec![u32::MAX; total];
    for id in 0..total as u32 {
        if !tuples.has_unit(degree, id) {
            pos[id as usize] = ids.len() as u32;
            ids.push(id);
        }
    }
    Basis { degree, ids, pos }
}

/// Integer matrix of the bar differential between normalized bases.
pub(crate) fn differential_matrix(tuples: &Tuples, from: &Basis, to: &Basis) -> IMat {
    assert_eq!(to.degree, from.degree + 1);
    let gp = &tuples.gp;
    let mut m = IMat::zero(to.ids.len(), from.ids.len());
    let bump = |m: &mut IMat, row: usize, col: u32, sign: i64| {
        if col != u32::MAX {
            let v = m.get(row, col as usize) + BigInt::from(sign);
            m.set(row, col as usize, v);
        }
    };
    if from.degree == 0 {
        for (row, &a) in to.ids.iter().enumerate() {
            bump(&mut m, row, from.pos[gp.src(a) as usize], 1);
            bump(&mut m, row, from.pos[gp.dst(a) as usize], -1);
        }
        return m;
    }
    let k = from.degree;
    let mut scratch = Vec::with_capacity(k);
    for (row, &tid) in to.ids.iter().enumerate() {
        let arrows = tuples.decode(k + 1, tid);
        bump(&mut m, row, from.pos[tuples.encode(&arrows[1..]) as usize], 1);
        let mut sign = -1i64;
        for i in 1..=k {
            let composed = gp.compose_uc(arrows[i - 1], arrows[i]);
            if !gp.is_unit(composed) {
                scratch.clear();
                scratch.extend_from_slice(&arrows[..i - 1]);
                scratch.push(composed);
                scratch.extend_from_slice(&arrows[i + 1..]);
                bump(&mut m, row, from.pos[tuples.encode(&scratch) as usize], sign);
            }
            sign = -sign;
        }
        bump(&mut m, row, from.pos[tuples.encode(&arrows[..k]) as usize], sign);
    }
    m
}

fn exponents(c: &Cochain, basis: &Basis, level: u32) -> Result<Vec<BigInt>, CohomologyError> {
    let mut out = Vec::with_capacity(basis.ids.len());
    for &id in &basis.ids {
        match c.values[id as usize].as_level(level) {
            Some(k) => out.push(BigInt::from(k)),
            None => return Err(CohomologyError::LevelMismatch(c.values[id as usize], level)),
        }
    }
    // off-basis values must vanish (normalized cochain)
    for (id, v) in c.values.iter().enumerate() {
        if basis.degree > 0 && basis.pos[id] == u32::MAX && !v.is_zero() {
            return Err(CohomologyError::NotNormalized);
        }
    }
    Ok(out)
}

fn cochain_from_exponents(gp: &GpRef, basis: &Basis, k: &[BigInt], level: u32) -> Cochain {
    let total = if basis.degree == 0 { gp.object_count } else { basis.pos.len() };
    let mut values = vec![Tor::ZERO; total];
    let big_l = BigInt::from(level);
    for (j, &id) in basis.ids.iter().enumerate() {
        let r = k[j].mod_floor(&big_l).to_i64().expect("exponent fits i64");
        values[id as usize] = Tor::from_level(r, level);
    }
    Cochain { gp: gp.clone(), degree: basis.degree, values }
}

/// Hⁿ presented by invariant factors with verified representatives and
/// bookkeeping to express any class in those representatives.
pub struct CohomologyGroup {
    pub degree: usize,
    pub coefficient: Coefficient,
    /// Invariant factors > 1, divisibility order.
    pub factors: Vec<u64>,
    pub representatives: Vec<Cochain>,
    level: u32,
    tuples: Tuples,
    basis: Basis,
    v_inv_a: IMat,
    scale: Vec<BigInt>,
    u2: IMat,
    d2: Vec<BigInt>,
    factor_rows: Vec<usize>,
}

impl CohomologyGroup {
    /// Coordinates of the class of a closed cochain in the representative
    /// generators (entry i modulo factors[i]). None if the input is not a
    /// normalized cocycle at the working level.
    pub fn express(&self, z: &Cochain) -> Option<Vec<u64>> {
        if z.degree != self.degree || z.values.len() != self.tuples.count(self.degree) {
            return None;
        }
        let k = exponents(z, &self.basis, self.level).ok()?;
        if !self.tuples.differential(z).is_zero() {
            return None;
        }
        let w = self.v_inv_a.mul_vec(&k);
        let mut y = Vec::with_capacity(w.len());
        for (wi, fi) in w.iter().zip(&self.scale) {
            let (q, r) = wi.div_rem(fi);
            if !r.is_zero() {
                return None;
            }
            y.push(q);
        }
        let c = self.u2.mul_vec(&y);
        Some(
            self.factor_rows
                .iter()
                .map(|&i| c[i].mod_floor(&self.d2[i]).to_u64().expect("coordinate fits"))
                .collect(),
        )
    }

    pub fn is_trivial_class(&self, z: &Cochain) -> bool {
        self.express(z).is_some_and(|c| c.iter().all(|&x| x == 0))
    }

    pub fn order(&self) -> u64 {
        self.factors.iter().product()
    }
}

/// Computes Hⁿ(𝒢; coeff) on the normalized complex by integer Smith normal
/// form over the cochain lattices.
pub fn cohomology_group(
    gp: &GpRef,
    degree: usize,
    coeff: Coefficient,
) -> Result<CohomologyGroup, CohomologyError> {
    let level = coeff.level();
    if level == 0 {
        return Err(CohomologyError::ZeroLevel);
    }
    let tuples = Tuples::new(gp, degree + 1);
    let basis = normalized_basis(&tuples, degree);
    let basis_next = normalized_basis(&tuples, degree + 1);
    let n = basis.ids.len();
    let a = differential_matrix(&tuples, &basis, &basis_next);
    let b = if degree == 0 {
        IMat::zero(n, 0)
    } else {
        let prev = normalized_basis(&tuples, degree - 1);
        differential_matrix(&tuples, &prev, &basis)
    };
    let sa = snf(&a);
    let m_k = kernel_mod_basis(&sa, u64::from(level));
    let big_l = BigInt::from(level);
    let scale: Vec<BigInt> = (0..n)
        .map(|j| {
            if j < sa.diag.len() && !sa.diag[j].is_zero() {
                &big_l / sa.diag[j].gcd(&big_l)
            } else {
                BigInt::one()
            }
        })
        .collect();

    // sublattice of coboundaries (within the cocycle lattice), in ambient
    // exponent coordinates
    let sub = match coeff {
        Coefficient::Torus(_) => {
            let sb = snf(&b);
            let zero_rows: Vec<usize> = (0..b.rows)
                .filter(|&i| i >= sb.diag.len() || sb.diag[i].is_zero())
                .collect();
            let mut f = IMat::zero(zero_rows.len(), n);
            for (r, &i) in zero_rows.iter().enumerate() {
                for j in 0..n {
                    f.set(r, j, sb.u.get(i, j).clone());
                }
            }
            kernel_mod_basis(&snf(&f), u64::from(level))
        }
        Coefficient::Cyclic(m) => {
            let mut s = IMat::zero(n, b.cols + n);
            for i in 0..n {
                for j in 0..b.cols {
                    s.set(i, j, b.get(i, j).clone());
                }
                s.set(i, b.cols + i, BigInt::from(m));
            }
            s
        }
    };

    // rewrite the sublattice in kernel coordinates: y = scale⁻¹ · V⁻¹ · k
    let mut m2 = IMat::zero(n, sub.cols);
    for j in 0..sub.cols {
        let w = sa.v_inv.mul_vec(&sub.column(j));
        for i in 0..n {
            let (q, r) = w[i].div_rem(&scale[i]);
            assert!(r.is_zero(), "coboundary lattice escapes the cocycle lattice");
            m2.set(i, j, q);
        }
    }
    let s2 = snf(&m2);
    assert_eq!(s2.rank, n, "quotient must be finite");
    let mut factors = Vec::new();
    let mut factor_rows = Vec::new();
    for (i, d) in s2.diag.iter().enumerate() {
        if *d > BigInt::one() {
            factor_rows.push(i);
            factors.push(d.to_u64().expect("factor fits u64"));
        }
    }
    let mut representatives = Vec::new();
    for &i in &factor_rows {
        let y = s2.u_inv.column(i);
        let k = m_k.mul_vec(&y);
        representatives.push(cochain_from_exponents(gp, &basis, &k, level));
    }
    let out = CohomologyGroup {
        degree,
        coefficient: coeff,
        factors,
        representatives,
        level,
        tuples,
        basis,
        v_inv_a: sa.v_inv,
        scale,
        u2: s2.u,
        d2: s2.diag,
        factor_rows,
    };
    // verify representatives: closed, expressing to unit vectors, pairwise
    // non-cohomologous by the witness solver
    for (idx, rep) in out.representatives.iter().enumerate() {
        let coords = out.express(rep).expect("representative is a cocycle");
        let expected: Vec<u64> =
            (0..out.factors.len()).map(|j| u64::from(j == idx)).collect();
        assert_eq!(coords, expected, "representative coordinates");
        if degree >= 1 {
            assert!(
                coboundary_witness(rep, coeff)?.is_none(),
                "representative must not be a coboundary"
            );
        }
    }
    for i in 0..out.representatives.len() {
        for j in 0..i {
            let diff = &out.representatives[i] - &out.representatives[j];
            if degree >= 1 {
                assert!(
                    coboundary_witness(&diff, coeff)?.is_none(),
                    "representatives must be pairwise non-cohomologous"
                );
            } else {
                assert!(!diff.is_zero());
            }
        }
    }
    Ok(out)
}

/// Finds u with δu = z, or certifies that none exists under the coefficient
/// semantics. Degree of z must be at least 1.
pub fn coboundary_witness(
    z: &Cochain,
    coeff: Coefficient,
) -> Result<Option<Cochain>, CohomologyError> {
    let level = coeff.level();
    if level == 0 {
        return Err(CohomologyError::ZeroLevel);
    }
    let d = z.degree;
    if d == 0 {
        return Err(CohomologyError::BadDegree(0));
    }
    let gp = &z.gp;
    let tuples = Tuples::new(gp, d + 1);
    if !tuples.differential(z).is_zero() {
        return Err(CohomologyError::NotClosed);
    }
    if !z.is_normalized(&tuples) {
        return Err(CohomologyError::NotNormalized);
    }
    let basis_prev = normalized_basis(&tuples, d - 1);
    let basis = normalized_basis(&tuples, d);
    let k = exponents(z, &basis, level)?;
    let b = differential_matrix(&tuples, &basis_prev, &basis);
    let sb = snf(&b);
    let u = match coeff {
        Coefficient::Torus(_) => {
            let rhs: Vec<BigRational> = k
                .iter()
                .map(|ki| BigRational::new(ki.clone(), BigInt::from(level)))
                .collect();
            match solve_mod1(&sb, &rhs) {
                Some(sol) => sol.into_iter().map(rational_to_tor).collect::<Vec<Tor>>(),
                None => return Ok(None),
            }
        }
        Coefficient::Cyclic(m) => match solve_mod(&sb, &k, u64::from(m)) {
            Some(sol) => {
                let big_m = BigInt::from(m);
                sol.iter()
                    .map(|x| {
                        Tor::from_level(
                            x.mod_floor(&big_m).to_i64().expect("witness exponent fits"),
                            m,
                        )
                    })
                    .collect()
            }
            None => return Ok(None),
        },
    };
    let total = if d == 1 { gp.object_count } else { tuples.count(d - 1) };
    let mut values = vec![Tor::ZERO; total];
    for (j, &id) in basis_prev.ids.iter().enumerate() {
        values[id as usize] = u[j];
    }
    let witness = Cochain { gp: gp.clone(), degree: d - 1, values };
    let dw = tuples.differential(&witness);
    assert_eq!(dw, *z, "solved witness must reproduce the cocycle");
    Ok(Some(witness))
}

fn rational_to_tor(r: BigRational) -> Tor {
    let den = r.denom().to_i64().expect("witness denominator fits i64");
    let num = r.numer().mod_floor(r.denom()).to_i64().expect("witness numerator fits i64");
    Tor::new(num, den)
}

/// Witness that z1 and z2 are cohomologous, if they are.
pub fn cohomologous_witness(
    z1: &Cochain,
    z2: &Cochain,
    coeff: Coefficient,
) -> Result<Option<Cochain>, CohomologyError> {
    coboundary_witness(&(z1 - z2), coeff)
}

/// Exhaustive small-case oracle: enumerates every exponent vector at the
/// working level, counts cocycles, and enumerates coboundaries of cochains
/// at `witness_level` (use the level itself for strict cyclic coefficients,
/// a proper multiple for divisible ones).
pub struct BruteForce {
    pub degree: usize,
    pub level: u32,
    pub closed: Vec<Vec<i64>>,
    pub coboundary_count: u64,
    pub order: u64,
    coboundaries: HashSet<Vec<i64>>,
    basis_ids: Vec<u32>,
}

impl BruteForce {
    pub fn is_coboundary(&self, z: &Cochain) -> bool {
        let k: Vec<i64> = self
            .basis_ids
            .iter()
            .map(|&id| z.values[id as usize].as_level(self.level).expect("level"))
            .collect();
        self.coboundaries.contains(&k)
    }

    pub fn cochain(&self, gp: &GpRef, tuples: &Tuples, k: &[i64]) -> Cochain {
        let mut values = vec![Tor::ZERO; tuples.count(self.degree)];
        for (j, &id) in self.basis_ids.iter().enumerate() {
            values[id as usize] = Tor::from_level(k[j], self.level);
        }
        Cochain { gp: gp.clone(), degree: self.degree, values }
    }
}

pub fn brute_force_cohomology(
    gp: &GpRef,
    degree: usize,
    level: u32,
    witness_level: u32,
    cap: u128,
) -> Result<BruteForce, CohomologyError> {
    if degree == 0 || level == 0 || witness_level % level != 0 {
        return Err(CohomologyError::BadDegree(degree));
    }
    let tuples = Tuples::new(gp, degree + 1);
    let basis_prev = normalized_basis(&tuples, degree - 1);
    let basis = normalized_basis(&tuples, degree);
    let basis_next = normalized_basis(&tuples, degree + 1);
    let n = basis.ids.len();
    let states = (u128::from(level)).checked_pow(n as u32).ok_or(CohomologyError::TooLarge(u128::MAX))?;
    let wstates = (u128::from(witness_level))
        .checked_pow(basis_prev.ids.len() as u32)
        .ok_or(CohomologyError::TooLarge(u128::MAX))?;
    if states > cap || wstates > cap {
        return Err(CohomologyError::TooLarge(states.max(wstates)));
    }
    let a = differential_matrix(&tuples, &basis, &basis_next);
    let b = differential_matrix(&tuples, &basis_prev, &basis);
    let big_l = BigInt::from(level);
    let mut closed = Vec::new();
    let mut k = vec![0i64; n];
    'outer: loop {
        let kb: Vec<BigInt> = k.iter().map(|&x| BigInt::from(x)).collect();
        if a.mul_vec(&kb).iter().all(|v| v.mod_floor(&big_l).is_zero()) {
            closed.push(k.clone());
        }
        for slot in k.iter_mut() {
            *slot += 1;
            if *slot < i64::from(level) {
                continue 'outer;
            }
            *slot = 0;
        }
        break;
    }
    let mut coboundaries = HashSet::new();
    let mut u = vec![0i64; basis_prev.ids.len()];
    let ratio = i64::from(witness_level / level);
    'outer2: loop {
        let ub: Vec<BigInt> = u.iter().map(|&x| BigInt::from(x)).collect();
        let img = b.mul_vec(&ub);
        // value v/witness_level representable at level iff ratio | v
        let mut ok = true;
        let mut vec_l = Vec::with_capacity(img.len());
        for v in &img {
            let vm = v.mod_floor(&BigInt::from(witness_level));
            let (q, r) = vm.div_rem(&BigInt::from(ratio));
            if !r.is_zero() {
                ok = false;
                break;
            }
            vec_l.push(q.to_i64().expect("fits"));
        }
        if ok {
            coboundaries.insert(vec_l);
        }
        for slot in u.iter_mut() {
            *slot += 1;
            if *slot < i64::from(witness_level) {
                continue 'outer2;
            }
            *slot = 0;
        }
        break;
    }
    let coboundary_count = coboundaries.len() as u64;
    assert_eq!(closed.len() as u64 % coboundary_count, 0);
    let order = closed.len() as u64 / coboundary_count;
    Ok(BruteForce {
        degree,
        level,
        closed,
        coboundary_count,
        order,
        coboundaries,
        basis_ids: basis.ids,
    })
}

/// Tuple space of the two-sided complex of a bimodule: (h₁,…,h_j, p,
/// k₁,…,k_i) with s(h_j) = ℓ(p), chains composable, dst(k₁) = ρ(p).
pub struct MixedBasis {
    pub hdeg: usize,
    pub kdeg: usize,
    pub tuples: Vec<(Vec<u32>, u32, Vec<u32>)>,
    index: BTreeMap<(Vec<u32>, u32, Vec<u32>), u32>,
}

impl MixedBasis {
    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn pos(&self, h: &[u32], p: u32, k: &[u32]) -> u32 {
        *self
            .index
            .get(&(h.to_vec(), p, k.to_vec()))
            .unwrap_or_else(|| panic!("tuple ({h:?}, {p}, {k:?}) not in basis"))
    }
}

pub fn mixed_basis(bi: &Bimodule, hdeg: usize, kdeg: usize) -> MixedBasis {
    let mut hchains: Vec<Vec<Vec<u32>>> = vec![Vec::new(); bi.size()];
    let mut kchains: Vec<Vec<Vec<u32>>> = vec![Vec::new(); bi.size()];
    for p in 0..bi.size() as u32 {
        let mut cur = vec![Vec::new()];
        for _ in 0..hdeg {
            let mut next = Vec::new();
            for c in &cur {
                // prepend h with s(h) = dst of the chain so far (or ℓ(p))
                let x = c.first().map_or(bi.lanchor[p as usize], |&a| bi.left.dst(a));
                for &h in bi.left.src_fiber(x) {
                    let mut e = vec![h];
                    e.extend_from_slice(c);
                    next.push(e);
                }
            }
            cur = next;
        }
        hchains[p as usize] = cur;
        let mut cur = vec![Vec::new()];
        for _ in 0..kdeg {
            let mut next = Vec::new();
            for c in &cur {
                let x = c.last().map_or(bi.ranchor[p as usize], |&a| bi.right.src(a));
                for &k in bi.right.dst_fiber(x) {
                    let mut e = c.clone();
                    e.push(k);
                    next.push(e);
                }
            }
            cur = next;
        }
        kchains[p as usize] = cur;
    }
    let mut tuples = Vec::new();
    let mut index = BTreeMap::new();
    for p in 0..bi.size() as u32 {
        for h in &hchains[p as usize] {
            for k in &kchains[p as usize] {
                index.insert((h.clone(), p, k.clone()), tuples.len() as u32);
                tuples.push((h.clone(), p, k.clone()));
            }
        }
    }
    MixedBasis { hdeg, kdeg, tuples, index }
}

/// Value table over a MixedBasis.
#[derive(Clone, Debug, PartialEq)]
pub struct MixedCochain {
    pub hdeg: usize,
    pub kdeg: usize,
    pub values: Vec<Tor>,
}

impl MixedCochain {
    pub fn zero(basis: &MixedBasis) -> MixedCochain {
        MixedCochain { hdeg: basis.hdeg, kdeg: basis.kdeg, values: vec![Tor::ZERO; basis.len()] }
    }

    pub fn from_fn(
        basis: &MixedBasis,
        mut f: impl FnMut(&[u32], u32, &[u32]) -> Tor,
    ) -> MixedCochain {
        MixedCochain {
            hdeg: basis.hdeg,
            kdeg: basis.kdeg,
            values: basis.tuples.iter().map(|(h, p, k)| f(h, *p, k)).collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }
}

/// Left-sided partial differential: bar in the h-variables, the last one
/// absorbed into the point.
pub fn delta_h(
    bi: &Bimodule,
    from: &MixedBasis,
    to: &MixedBasis,
    c: &MixedCochain,
) -> MixedCochain {
    assert_eq!(from.hdeg + 1, to.hdeg);
    assert_eq!(from.kdeg, to.kdeg);
    assert_eq!(c.values.len(), from.len());
    let j = from.hdeg;
    let values = to
        .tuples
        .iter()
        .map(|(h, p, k)| {
            let mut acc = c.values[from.pos(&h[1..], *p, k) as usize];
            let mut sign = -1i64;
            let mut scratch = Vec::with_capacity(j);
            for t in 1..=j {
                scratch.clear();
                scratch.extend_from_slice(&h[..t - 1]);
                scratch.push(bi.left.compose_uc(h[t - 1], h[t]));
                scratch.extend_from_slice(&h[t + 1..]);
                acc = acc + sign * c.values[from.pos(&scratch, *p, k) as usize];
                sign = -sign;
            }
            let hp = bi.lact_uc(h[j], *p);
            acc + sign * c.values[from.pos(&h[..j], hp, k) as usize]
        })
        .collect();
    MixedCochain { hdeg: to.hdeg, kdeg: to.kdeg, values }
}

/// Right-sided partial differential: the first k-variable is absorbed into
/// the point, bar in the rest.
pub fn delta_k(
    bi: &Bimodule,
    from: &MixedBasis,
    to: &MixedBasis,
    c: &MixedCochain,
) -> MixedCochain {
    assert_eq!(from.kdeg + 1, to.kdeg);
    assert_eq!(from.hdeg, to.hdeg);
    assert_eq!(c.values.len(), from.len());
    let i = from.kdeg;
    let values = to
        .tuples
        .iter()
        .map(|(h, p, k)| {
            let pk = bi.ract_uc(*p, k[0]);
            let mut acc = c.values[from.pos(h, pk, &k[1..]) as usize];
            let mut sign = -1i64;
            let mut scratch = Vec::with_capacity(i);
            for t in 1..=i {
                scratch.clear();
                scratch.extend_from_slice(&k[..t - 1]);
                scratch.push(bi.right.compose_uc(k[t - 1], k[t]));
                scratch.extend_from_slice(&k[t + 1..]);
                acc = acc + sign * c.values[from.pos(h, *p, &scratch) as usize];
                sign = -sign;
            }
            acc + sign * c.values[from.pos(h, *p, &k[..i]) as usize]
        })
        .collect();
    MixedCochain { hdeg: to.hdeg, kdeg: to.kdeg, values }
}

/// Augmentation C^j(ℋ) → C^{j,0}(P) along the left structure.
pub fn augment_h(
    bi: &Bimodule,
    tuples: &Tuples,
    c: &Cochain,
    basis: &MixedBasis,
) -> MixedCochain {
    assert_eq!(basis.hdeg, c.degree);
    assert_eq!(basis.kdeg, 0);
    MixedCochain::from_fn(basis, |h, p, _| {
        if c.degree == 0 {
            c.values[bi.lanchor[p as usize] as usize]
        } else {
            c.eval(tuples, h)
        }
    })
}

/// Augmentation C^i(𝒦) → C^{0,i}(P) along the right structure.
pub fn augment_k(
    bi: &Bimodule,
    tuples: &Tuples,
    c: &Cochain,
    basis: &MixedBasis,
) -> MixedCochain {
    assert_eq!(basis.kdeg, c.degree);
    assert_eq!(basis.hdeg, 0);
    MixedCochain::from_fn(basis, |_, p, k| {
        if c.degree == 0 {
            c.values[bi.ranchor[p as usize] as usize]
        } else {
            c.eval(tuples, k)
        }
    })
}

/// Checks the three descent equations of a witness (μ, ν) for ψ on the left
/// and χ on the right of a bimodule:
///   μ(h₂,p) − μ(h₁h₂,p) + μ(h₁,h₂p) = ψ(h₁,h₂)
///   μ(h,pk) − μ(h,p) + ν(p,k) − ν(hp,k) = 0
///   ν(pk₁,k₂) − ν(p,k₁k₂) + ν(p,k₁) = χ(k₁,k₂)
pub fn verify_witness(
    bi: &Bimodule,
    psi: impl Fn(u32, u32) -> Tor,
    chi: impl Fn(u32, u32) -> Tor,
    mu: &[Tor],
    nu: &[Tor],
) -> Vec<String> {
    let mut out = Vec::new();
    assert_eq!(mu.len(), bi.left_pair_count());
    assert_eq!(nu.len(), bi.right_pair_count());
    let mut bad = [0u64; 3];
    for p in 0..bi.size() as u32 {
        let lp = bi.lanchor[p as usize];
        let rp = bi.ranchor[p as usize];
        for &h2 in bi.left.src_fiber(lp) {
            let h2p = bi.lact_uc(h2, p);
            for &h1 in bi.left.src_fiber(bi.left.dst(h2)) {
                let h12 = bi.left.compose_uc(h1, h2);
                let lhs = mu[bi.left_pair_id(h2, p) as usize]
                    - mu[bi.left_pair_id(h12, p) as usize]
                    + mu[bi.left_pair_id(h1, h2p) as usize];
                if lhs != psi(h1, h2) {
                    bad[0] += 1;
                }
            }
        }
        for &h in bi.left.src_fiber(lp) {
            let hp = bi.lact_uc(h, p);
            for &k in bi.right.dst_fiber(rp) {
                let pk = bi.ract_uc(p, k);
                let hpk = bi.ract_uc(hp, k);
                debug_assert_eq!(bi.lact_uc(h, pk), hpk);
                let lhs = mu[bi.left_pair_id(h, pk) as usize]
                    - mu[bi.left_pair_id(h, p) as usize]
                    + nu[bi.right_pair_id(p, k) as usize]
                    - nu[bi.right_pair_id(hp, k) as usize];
                if !lhs.is_zero() {
                    bad[1] += 1;
                }
            }
        }
        for &k1 in bi.right.dst_fiber(rp) {
            let pk1 = bi.ract_uc(p, k1);
            for &k2 in bi.right.dst_fiber(bi.right.src(k1)) {
                let k12 = bi.right.compose_uc(k1, k2);
                let lhs = nu[bi.right_pair_id(pk1, k2) as usize]
                    - nu[bi.right_pair_id(p, k12) as usize]
                    + nu[bi.right_pair_id(p, k1) as usize];
                if lhs != chi(k1, k2) {
                    bad[2] += 1;
                }
            }
        }
    }
    for (i, label) in ["left", "mixed", "right"].iter().enumerate() {
        if bad[i] > 0 {
            out.push(format!("violation: {} descent equation fails on {} tuples", label, bad[i]));
        }
    }
    out
}

/// Exponent-level variant of `verify_witness` for large carriers: all data
/// given as exponents at one level, checked with modular arithmetic.
pub fn verify_witness_fast(
    bi: &Bimodule,
    level: u32,
    psi: impl Fn(u32, u32) -> u32,
    chi: impl Fn(u32, u32) -> u32,
    mu: impl Fn(u32, u32) -> u32,
    nu: impl Fn(u32, u32) -> u32,
) -> Result<(), String> {
    let l = u64::from(level);
    let md = |x: u64| (x % l) as u32;
    for p in 0..bi.size() as u32 {
        let lp = bi.lanchor[p as usize];
        let rp = bi.ranchor[p as usize];
        for &h2 in bi.left.src_fiber(lp) {
            let h2p = bi.lact_uc(h2, p);
            for &h1 in bi.left.src_fiber(bi.left.dst(h2)) {
                let h12 = bi.left.compose_uc(h1, h2);
                let lhs = md(u64::from(mu(h2, p))
                    + u64::from(level - mu(h12, p) % level)
                    + u64::from(mu(h1, h2p)));
                if lhs != psi(h1, h2) % level {
                    return Err(format!("left descent fails at (h1={h1}, h2={h2}, p={p})"));
                }
            }
        }
        for &h in bi.left.src_fiber(lp) {
            let hp = bi.lact_uc(h, p);
            for &k in bi.right.dst_fiber(rp) {
                let pk = bi.ract_uc(p, k);
                let lhs = md(u64::from(mu(h, pk))
                    + u64::from(level - mu(h, p) % level)
                    + u64::from(nu(p, k))
                    + u64::from(level - nu(hp, k) % level));
                if lhs != 0 {
                    return Err(format!("mixed descent fails at (h={h}, p={p}, k={k})"));
                }
            }
        }
        for &k1 in bi.right.dst_fiber(rp) {
            let pk1 = bi.ract_uc(p, k1);
            for &k2 in bi.right.dst_fiber(bi.right.src(k1)) {
                let k12 = bi.right.compose_uc(k1, k2);
                let lhs = md(u64::from(nu(pk1, k2))
                    + u64::from(level - nu(p, k12) % level)
                    + u64::from(nu(p, k1)));
                if lhs != chi(k1, k2) % level {
                    return Err(format!("right descent fails at (p={p}, k1={k1}, k2={k2})"));
                }
            }
        }
    }
    Ok(())
}

/// Solves the descent equations for (μ, ν) over the coefficient group, or
/// certifies that no witness exists at that semantics. The inputs must be
/// closed; μ is indexed by `left_pair_id`, ν by `right_pair_id`.
pub fn bimodule_witness(
    psi: &PairCochain,
    chi: &PairCochain,
    bi: &Bimodule,
    coeff: Coefficient,
) -> Result<Option<(Vec<Tor>, Vec<Tor>)>, CohomologyError> {
    let level = coeff.level();
    if level == 0 {
        return Err(CohomologyError::ZeroLevel);
    }
    assert_eq!(psi.level, level, "psi level must match the coefficient level");
    assert_eq!(chi.level, level, "chi level must match the coefficient level");
    if !psi.is_closed() || !chi.is_closed() {
        return Err(CohomologyError::NotClosed);
    }
    let nmu = bi.left_pair_count();
    let nnu = bi.right_pair_count();
    let cols = nmu + nnu;
    let mut rows: Vec<Vec<(usize, i64)>> = Vec::new();
    let mut rhs: Vec<BigInt> = Vec::new();
    let mu_col = |h: u32, p: u32| bi.left_pair_id(h, p) as usize;
    let nu_col = |p: u32, k: u32| nmu + bi.right_pair_id(p, k) as usize;
    for p in 0..bi.size() as u32 {
        let lp = bi.lanchor[p as usize];
        let rp = bi.ranchor[p as usize];
        for &h2 in bi.left.src_fiber(lp) {
            let h2p = bi.lact_uc(h2, p);
            for &h1 in bi.left.src_fiber(bi.left.dst(h2)) {
                let h12 = bi.left.compose_uc(h1, h2);
                rows.push(vec![
                    (mu_col(h2, p), 1),
                    (mu_col(h12, p), -1),
                    (mu_col(h1, h2p), 1),
                ]);
                rhs.push(BigInt::from(psi.eval_uc(h1, h2)));
            }
        }
        for &h in bi.left.src_fiber(lp) {
            let hp = bi.lact_uc(h, p);
            for &k in bi.right.dst_fiber(rp) {
                let pk = bi.ract_uc(p, k);
                rows.push(vec![
                    (mu_col(h, pk), 1),
                    (mu_col(h, p), -1),
                    (nu_col(p, k), 1),
                    (nu_col(hp, k), -1),
                ]);
                rhs.push(BigInt::zero());
            }
        }
        for &k1 in bi.right.dst_fiber(rp) {
            let pk1 = bi.ract_uc(p, k1);
            for &k2 in bi.right.dst_fiber(bi.right.src(k1)) {
                let k12 = bi.right.compose_uc(k1, k2);
                rows.push(vec![
                    (nu_col(pk1, k2), 1),
                    (nu_col(p, k12), -1),
                    (nu_col(p, k1), 1),
                ]);
                rhs.push(BigInt::from(chi.eval_uc(k1, k2)));
            }
        }
    }
    let mut a = IMat::zero(rows.len(), cols);
    for (r, row) in rows.iter().enumerate() {
        for &(c, s) in row {
            let v = a.get(r, c) + BigInt::from(s);
            a.set(r, c, v);
        }
    }
    let sa: Snf = snf(&a);
    let sol: Option<Vec<Tor>> = match coeff {
        Coefficient::Torus(_) => {
            let b: Vec<BigRational> = rhs
                .iter()
                .map(|k| BigRational::new(k.clone(), BigInt::from(level)))
                .collect();
            solve_mod1(&sa, &b).map(|v| v.into_iter().map(rational_to_tor).collect())
        }
        Coefficient::Cyclic(m) => solve_mod(&sa, &rhs, u64::from(m)).map(|v| {
            let big_m = BigInt::from(m);
            v.iter()
                .map(|x| {
                    Tor::from_level(x.mod_floor(&big_m).to_i64().expect("exponent fits"), m)
                })
                .collect()
        }),
    };
    let Some(sol) = sol else { return Ok(None) };
    let mu = sol[..nmu].to_vec();
    let nu = sol[nmu..].to_vec();
    let report = verify_witness(
        bi,
        |a_, b_| Tor::from_level(i64::from(psi.eval_uc(a_, b_)), level),
        |a_, b_| Tor::from_level(i64::from(chi.eval_uc(a_, b_)), level),
        &mu,
        &nu,
    );
    assert!(report.is_empty(), "solved witness fails verification: {report:?}");
    Ok(Some((mu, nu)))
}
