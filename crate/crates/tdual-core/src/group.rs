//! Finite groups as dense multiplication tables, plus the abelian character
//! machinery (duals, pairings, annihilators) the duality pipelines lean on.
//!
//! Elements are indices into the table. For groups built with
//! [`FiniteGroup::abelian`], the index is the mixed-radix encoding of the
//! tuple with respect to `abelian_factors`, which makes characters and
//! pairings pure arithmetic.

use crate::torus::Tor;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("multiplication table is not square: row {row} has length {len}, expected {expected}")]
    RaggedTable { row: usize, len: usize, expected: usize },
    #[error("entry {value} at ({a},{b}) is out of range")]
    EntryOutOfRange { a: usize, b: usize, value: usize },
    #[error("no identity element")]
    NoIdentity,
    #[error("element {0} has no inverse")]
    NoInverse(usize),
    #[error("associativity fails at ({0},{1},{2})")]
    NotAssociative(usize, usize, usize),
    #[error("subgroup is not closed: {0} * {1} escapes")]
    NotClosed(u16, u16),
    #[error("subgroup is not normal: conjugate of {0} by {1} escapes")]
    NotNormal(u16, u16),
    #[error("group of order {0} is not abelian")]
    NotAbelian(usize),
}

/// Finite group on elements `0..order` given by dense tables.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FiniteGroup {
    pub order: usize,
    mul: Vec<u16>,
    inv: Vec<u16>,
    pub id: u16,
    /// Set when the element index encodes a tuple in ⊕ Z/fᵢ (mixed radix,
    /// last factor fastest). Enables characters and pairings.
    pub abelian_factors: Option<Vec<u32>>,
    pub labels: Option<Vec<String>>,
}

impl FiniteGroup {
    /// Validates and wraps a multiplication table.
    pub fn from_mul_table(table: &[Vec<u16>]) -> Result<FiniteGroup, GroupError> {
        let n = table.len();
        for (row, r) in table.iter().enumerate() {
            if r.len() != n {
                return Err(GroupError::RaggedTable { row, len: r.len(), expected: n });
            }
            for (b, &v) in r.iter().enumerate() {
                if usize::from(v) >= n {
                    return Err(GroupError::EntryOutOfRange { a: row, b, value: usize::from(v) });
                }
            }
        }
        let mut mul = Vec::with_capacity(n * n);
        for r in table {
            mul.extend_from_slice(r);
        }
        let id = (0..n)
            .find(|&e| (0..n).all(|a| mul[e * n + a] == a as u16 && mul[a * n + e] == a as u16))
            .ok_or(GroupError::NoIdentity)? as u16;
        let mut inv = vec![0u16; n];
        for a in 0..n {
            let j = (0..n)
                .find(|&b| mul[a * n + b] == id && mul[b * n + a] == id)
                .ok_or(GroupError::NoInverse(a))?;
            inv[a] = j as u16;
        }
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let ab_c = mul[usize::from(mul[a * n + b]) * n + c];
                    let a_bc = mul[a * n + usize::from(mul[b * n + c])];
                    if ab_c != a_bc {
                        return Err(GroupError::NotAssociative(a, b, c));
                    }
                }
            }
        }
        Ok(FiniteGroup { order: n, mul, inv, id, abelian_factors: None, labels: None })
    }

    /// Direct sum of cyclic groups Z/f₁ ⊕ ... ⊕ Z/fₖ, indexed mixed-radix.
    pub fn abelian(factors: &[u32]) -> FiniteGroup {
        assert!(!factors.is_empty() && factors.iter().all(|&f| f >= 1), "bad abelian factors");
        let order: usize = factors.iter().map(|&f| f as usize).product();
        assert!(order <= u16::MAX as usize + 1, "group too large");
        let fac: Vec<u32> = factors.to_vec();
        let index = |tuple: &[u32]| -> u16 {
            let mut idx = 0usize;
            for (t, f) in tuple.iter().zip(&fac) {
                idx = idx * (*f as usize) + (*t as usize);
            }
            idx as u16
        };
        let tuple = |mut idx: usize| -> Vec<u32> {
            let mut t = vec![0u32; fac.len()];
            for i in (0..fac.len()).rev() {
                t[i] = (idx % fac[i] as usize) as u32;
                idx /= fac[i] as usize;
            }
            t
        };
        let mut mul = vec![0u16; order * order];
        let mut inv = vec![0u16; order];
        for a in 0..order {
            let ta = tuple(a);
            let ti: Vec<u32> = ta.iter().zip(&fac).map(|(&x, &f)| (f - x) % f).collect();
            inv[a] = index(&ti);
            for b in 0..order {
                let tb = tuple(b);
                let ts: Vec<u32> =
                    ta.iter().zip(&tb).zip(&fac).map(|((&x, &y), &f)| (x + y) % f).collect();
                mul[a * order + b] = index(&ts);
            }
        }
        FiniteGroup { order, mul, inv, id: 0, abelian_factors: Some(fac), labels: None }
    }

    pub fn cyclic(n: u32) -> FiniteGroup {
        FiniteGroup::abelian(&[n])
    }

    pub fn trivial() -> FiniteGroup {
        FiniteGroup::abelian(&[1])
    }

    /// The quaternion group {1,-1,i,-i,j,-j,k,-k} in that index order.
    pub fn quaternion() -> FiniteGroup {
        // Encode q = (-1)^s * u with u in {1,i,j,k}; index = 2*u + s.
        let units = ["1", "i", "j", "k"];
        // u*v = sign * w over the basis 1,i,j,k.
        let basis_mul = |u: usize, v: usize| -> (usize, bool) {
            match (u, v) {
                (0, v) => (v, false),
                (u, 0) => (u, false),
                (u, v) if u == v => (0, true),
                (1, 2) => (3, false),
                (2, 1) => (3, true),
                (2, 3) => (1, false),
                (3, 2) => (1, true),
                (3, 1) => (2, false),
                (1, 3) => (2, true),
                _ => unreachable!(),
            }
        };
        let mut table = vec![vec![0u16; 8]; 8];
        for a in 0..8 {
            for b in 0..8 {
                let (ua, sa) = (a / 2, a % 2 == 1);
                let (ub, sb) = (b / 2, b % 2 == 1);
                let (uw, sw) = basis_mul(ua, ub);
                let s = (sa ^ sb) ^ sw;
                table[a][b] = (2 * uw + usize::from(s)) as u16;
            }
        }
        let mut g = FiniteGroup::from_mul_table(&table).expect("quaternion table");
        g.labels = Some(
            units
                .iter()
                .flat_map(|u| [u.to_string(), format!("-{u}")])
                .collect(),
        );
        g
    }

    #[inline]
    pub fn mul(&self, a: u16, b: u16) -> u16 {
        self.mul[usize::from(a) * self.order + usize::from(b)]
    }

    #[inline]
    pub fn inv(&self, a: u16) -> u16 {
        self.inv[usize::from(a)]
    }

    pub fn conj(&self, g: u16, x: u16) -> u16 {
        self.mul(self.mul(g, x), self.inv(g))
    }

    pub fn elements(&self) -> impl Iterator<Item = u16> + '_ {
        (0..self.order).map(|i| i as u16)
    }

    pub fn is_abelian(&self) -> bool {
        self.elements().all(|a| self.elements().all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    pub fn element_order(&self, g: u16) -> usize {
        let mut x = g;
        let mut n = 1;
        while x != self.id {
            x = self.mul(x, g);
            n += 1;
        }
        n
    }

    pub fn exponent(&self) -> usize {
        self.elements().fold(1usize, |e, g| num_integer::lcm(e, self.element_order(g)))
    }

    pub fn label(&self, g: u16) -> String {
        match &self.labels {
            Some(l) => l[usize::from(g)].clone(),
            None => g.to_string(),
        }
    }

    /// Table rows, for serialization.
    pub fn mul_rows(&self) -> Vec<Vec<u16>> {
        (0..self.order).map(|a| self.mul[a * self.order..(a + 1) * self.order].to_vec()).collect()
    }

    /// Axiom violations, empty when the tables form a group.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.mul.len() != self.order * self.order || self.inv.len() != self.order {
            v.push("table sizes inconsistent".into());
            return v;
        }
        match FiniteGroup::from_mul_table(&self.mul_rows()) {
            Ok(g) => {
                if g.id != self.id {
                    v.push(format!("identity is {} but {} recorded", g.id, self.id));
                }
                for a in self.elements() {
                    if g.inv(a) != self.inv(a) {
                        v.push(format!("inverse table wrong at {a}"));
                    }
                }
                if let Some(f) = &self.abelian_factors {
                    let model = FiniteGroup::abelian(f);
                    if model.order != self.order || (0..self.mul.len()).any(|i| model.mul[i] != self.mul[i]) {
                        v.push("abelian_factors do not match the table".into());
                    }
                }
            }
            Err(e) => v.push(e.to_string()),
        }
        v
    }

    /// Mixed-radix tuple of an element of an abelian-indexed group.
    pub fn tuple(&self, g: u16) -> Vec<u32> {
        let f = self.abelian_factors.as_ref().expect("tuple needs abelian factors");
        let mut idx = usize::from(g);
        let mut t = vec![0u32; f.len()];
        for i in (0..f.len()).rev() {
            t[i] = (idx % f[i] as usize) as u32;
            idx /= f[i] as usize;
        }
        t
    }

    pub fn from_tuple(&self, t: &[u32]) -> u16 {
        let f = self.abelian_factors.as_ref().expect("from_tuple needs abelian factors");
        assert_eq!(f.len(), t.len());
        let mut idx = 0usize;
        for (x, m) in t.iter().zip(f) {
            idx = idx * (*m as usize) + (*x % m) as usize;
        }
        idx as u16
    }
}

/// Dual group of an abelian-indexed group: same factors, elements are
/// characters. `pair(chi, g)` is the canonical pairing.
pub fn dual_group(g: &FiniteGroup) -> FiniteGroup {
    let f = g.abelian_factors.as_ref().expect("dual_group needs abelian factors");
    FiniteGroup::abelian(f)
}

/// ⟨chi, g⟩ = Σ chiᵢ gᵢ / fᵢ in Q/Z.
pub fn pair(g: &FiniteGroup, chi: u16, x: u16) -> Tor {
    let f = g.abelian_factors.as_ref().expect("pair needs abelian factors");
    let tc = g.tuple(chi);
    let tx = g.tuple(x);
    let mut acc = Tor::ZERO;
    for i in 0..f.len() {
        acc = acc + Tor::new(i64::from(tc[i]) * i64::from(tx[i]), i64::from(f[i]));
    }
    acc
}

/// Subgroup as a sorted element list. Construction verifies closure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Subgroup {
    pub elements: Vec<u16>,
}

impl Subgroup {
    pub fn closure(g: &FiniteGroup, gens: &[u16]) -> Subgroup {
        let mut seen = vec![false; g.order];
        seen[usize::from(g.id)] = true;
        let mut stack: Vec<u16> = vec![g.id];
        for &x in gens {
            if !seen[usize::from(x)] {
                seen[usize::from(x)] = true;
                stack.push(x);
            }
        }
        let mut i = 0;
        while i < stack.len() {
            let a = stack[i];
            i += 1;
            for j in 0..stack.len() {
                for p in [g.mul(a, stack[j]), g.mul(stack[j], a), g.inv(a)] {
                    if !seen[usize::from(p)] {
                        seen[usize::from(p)] = true;
                        stack.push(p);
                    }
                }
            }
        }
        let mut elements: Vec<u16> =
            seen.iter().enumerate().filter(|(_, &s)| s).map(|(i, _)| i as u16).collect();
        elements.sort_unstable();
        Subgroup { elements }
    }

    pub fn from_elements(g: &FiniteGroup, els: &[u16]) -> Result<Subgroup, GroupError> {
        let mut elements = els.to_vec();
        elements.sort_unstable();
        elements.dedup();
        let s = Subgroup { elements };
        if !s.contains(g.id) {
            return Err(GroupError::NotClosed(g.id, g.id));
        }
        for &a in &s.elements {
            for &b in &s.elements {
                if !s.contains(g.mul(a, b)) {
                    return Err(GroupError::NotClosed(a, b));
                }
            }
            if !s.contains(g.inv(a)) {
                return Err(GroupError::NotClosed(a, a));
            }
        }
        Ok(s)
    }

    pub fn trivial(g: &FiniteGroup) -> Subgroup {
        Subgroup { elements: vec![g.id] }
    }

    pub fn full(g: &FiniteGroup) -> Subgroup {
        Subgroup { elements: g.elements().collect() }
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, x: u16) -> bool {
        self.elements.binary_search(&x).is_ok()
    }

    /// Position of x in the element list.
    pub fn index_of(&self, x: u16) -> Option<usize> {
        self.elements.binary_search(&x).ok()
    }

    pub fn is_normal(&self, g: &FiniteGroup) -> bool {
        g.elements().all(|h| self.elements.iter().all(|&n| self.contains(g.conj(h, n))))
    }

    /// Materializes the subgroup as a group of its own; returns the group and
    /// the embedding (subgroup index -> ambient element).
    pub fn as_group(&self, g: &FiniteGroup) -> (FiniteGroup, Vec<u16>) {
        let embed = self.elements.clone();
        let n = embed.len();
        let mut table = vec![vec![0u16; n]; n];
        for a in 0..n {
            for b in 0..n {
                let p = g.mul(embed[a], embed[b]);
                table[a][b] = self.index_of(p).expect("subgroup not closed") as u16;
            }
        }
        let grp = FiniteGroup::from_mul_table(&table).expect("subgroup table");
        (grp, embed)
    }
}

/// Quotient by a normal subgroup, with the canonical least-representative
/// section. Coset indices are assigned in increasing order of least element.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Quotient {
    pub group: FiniteGroup,
    /// ambient element -> coset index
    pub proj: Vec<u16>,
    /// coset index -> least representative
    pub section: Vec<u16>,
}

impl FiniteGroup {
    pub fn quotient(&self, n: &Subgroup) -> Result<Quotient, GroupError> {
        if !n.is_normal(self) {
            let bad = self
                .elements()
                .find_map(|h| {
                    n.elements.iter().find(|&&x| !n.contains(self.conj(h, x))).map(|&x| (x, h))
                })
                .unwrap();
            return Err(GroupError::NotNormal(bad.0, bad.1));
        }
        let mut proj = vec![u16::MAX; self.order];
        let mut section = Vec::new();
        for g in self.elements() {
            if proj[usize::from(g)] != u16::MAX {
                continue;
            }
            let c = section.len() as u16;
            section.push(g);
            for &x in &n.elements {
                proj[usize::from(self.mul(g, x))] = c;
            }
        }
        let q = section.len();
        let mut table = vec![vec![0u16; q]; q];
        for a in 0..q {
            for b in 0..q {
                table[a][b] = proj[usize::from(self.mul(section[a], section[b]))];
            }
        }
        let group = FiniteGroup::from_mul_table(&table)?;
        Ok(Quotient { group, proj, section })
    }

    /// The center as a subgroup.
    pub fn center(&self) -> Subgroup {
        let els: Vec<u16> = self
            .elements()
            .filter(|&z| self.elements().all(|g| self.mul(z, g) == self.mul(g, z)))
            .collect();
        Subgroup { elements: els }
    }
}

/// A basis of an abelian subgroup: elements b₁..bᵣ with orders d₁..dᵣ such
/// that every subgroup element is uniquely Σ aᵢ bᵢ, 0 <= aᵢ < dᵢ. Found by
/// bounded search; subgroups here stay tiny.
#[derive(Clone, Debug)]
pub struct AbelianBasis {
    pub basis: Vec<u16>,
    pub orders: Vec<u32>,
    /// ambient element -> coordinates (dense over the subgroup's elements)
    coords: Vec<Option<Vec<u32>>>,
}

/// Extracts a basis for a subgroup of an abelian group. Orders are returned
/// descending. Panics if the subgroup is not abelian inside `g`.
pub fn abelian_basis(g: &FiniteGroup, sub: &Subgroup) -> AbelianBasis {
    for &a in &sub.elements {
        for &b in &sub.elements {
            assert!(g.mul(a, b) == g.mul(b, a), "abelian_basis on a nonabelian subgroup");
        }
    }
    let m = sub.order();
    if m == 1 {
        return AbelianBasis { basis: vec![], orders: vec![], coords: spread(g, vec![(g.id, vec![])]) };
    }
    let orders: Vec<(u16, usize)> = sub.elements.iter().map(|&e| (e, g.element_order(e))).collect();
    // Try small ranks in turn; for each rank enumerate basis tuples with
    // descending orders whose product matches the subgroup order.
    for rank in 1..=4usize {
        let mut choice = vec![0usize; rank];
        'next: loop {
            // advance odometer
            let tuple: Vec<(u16, usize)> = choice.iter().map(|&i| orders[i]).collect();
            let prod: usize = tuple.iter().map(|t| t.1).product();
            let descending = tuple.windows(2).all(|w| w[0].1 >= w[1].1);
            if prod == m && descending && tuple.iter().all(|t| t.1 > 1) {
                if let Some(ab) = try_basis(g, sub, &tuple) {
                    return ab;
                }
            }
            // increment
            for i in (0..rank).rev() {
                choice[i] += 1;
                if choice[i] < orders.len() {
                    continue 'next;
                }
                choice[i] = 0;
            }
            break;
        }
    }
    panic!("no abelian basis found for subgroup of order {m}");
}

fn try_basis(g: &FiniteGroup, sub: &Subgroup, tuple: &[(u16, usize)]) -> Option<AbelianBasis> {
    let rank = tuple.len();
    let mut pows: Vec<Vec<u16>> = Vec::with_capacity(rank);
    for &(b, d) in tuple {
        let mut row = Vec::with_capacity(d);
        let mut x = g.id;
        for _ in 0..d {
            row.push(x);
            x = g.mul(x, b);
        }
        pows.push(row);
    }
    let total: usize = tuple.iter().map(|t| t.1).product();
    let mut reached: Vec<(u16, Vec<u32>)> = Vec::with_capacity(total);
    let mut odo = vec![0u32; rank];
    for _ in 0..total {
        let mut x = g.id;
        for i in 0..rank {
            x = g.mul(x, pows[i][odo[i] as usize]);
        }
        reached.push((x, odo.clone()));
        for i in (0..rank).rev() {
            odo[i] += 1;
            if (odo[i] as usize) < tuple[i].1 {
                break;
            }
            odo[i] = 0;
        }
    }
    let mut seen = vec![false; g.order];
    for (x, _) in &reached {
        if seen[usize::from(*x)] {
            return None;
        }
        seen[usize::from(*x)] = true;
    }
    if sub.elements.iter().any(|&e| !seen[usize::from(e)]) {
        return None;
    }
    let basis = tuple.iter().map(|t| t.0).collect();
    let orders = tuple.iter().map(|t| t.1 as u32).collect();
    Some(AbelianBasis { basis, orders, coords: spread(g, reached) })
}

fn spread(g: &FiniteGroup, pairs: Vec<(u16, Vec<u32>)>) -> Vec<Option<Vec<u32>>> {
    let mut coords = vec![None; g.order];
    for (x, c) in pairs {
        coords[usize::from(x)] = Some(c);
    }
    coords
}

impl AbelianBasis {
    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn coords(&self, x: u16) -> &[u32] {
        self.coords[usize::from(x)].as_deref().expect("element outside subgroup")
    }

    pub fn in_subgroup(&self, x: u16) -> bool {
        self.coords[usize::from(x)].is_some()
    }

    /// Character group: abelian on the basis orders (trivial group for rank 0).
    pub fn char_group(&self) -> FiniteGroup {
        if self.orders.is_empty() {
            FiniteGroup::trivial()
        } else {
            FiniteGroup::abelian(&self.orders)
        }
    }

    /// ⟨chi, x⟩ for chi in the character group and x a subgroup element
    /// (ambient index).
    pub fn pair(&self, chars: &FiniteGroup, chi: u16, x: u16) -> Tor {
        if self.orders.is_empty() {
            return Tor::ZERO;
        }
        let tc = chars.tuple(chi);
        let cx = self.coords(x);
        let mut acc = Tor::ZERO;
        for i in 0..self.orders.len() {
            acc = acc + Tor::new(i64::from(tc[i]) * i64::from(cx[i]), i64::from(self.orders[i]));
        }
        acc
    }

    /// Restriction of an ambient character to the subgroup: evaluates on the
    /// basis and re-encodes in the character group.
    pub fn restrict_char(&self, ambient: &FiniteGroup, chars: &FiniteGroup, chi: u16) -> u16 {
        if self.orders.is_empty() {
            return 0;
        }
        let mut t = Vec::with_capacity(self.orders.len());
        for (i, &b) in self.basis.iter().enumerate() {
            let v = pair(ambient, chi, b);
            let d = i64::from(self.orders[i]);
            assert!(d % v.denom() == 0, "character does not restrict");
            t.push(((v.numer() * (d / v.denom())) % d) as u32);
        }
        chars.from_tuple(&t)
    }
}

/// Annihilator N^⊥ = {chi : ⟨chi, n⟩ = 0 for all n in N} inside the dual.
pub fn annihilator(g: &FiniteGroup, sub: &Subgroup) -> Subgroup {
    let dual = dual_group(g);
    let els: Vec<u16> = dual
        .elements()
        .filter(|&chi| sub.elements.iter().all(|&n| pair(g, chi, n).is_zero()))
        .collect();
    Subgroup { elements: els }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cyclic_basics() {
        let g = FiniteGroup::cyclic(6);
        assert_eq!(g.order, 6);
        assert_eq!(g.mul(4, 5), 3);
        assert_eq!(g.inv(2), 4);
        assert_eq!(g.element_order(2), 3);
        assert_eq!(g.exponent(), 6);
        assert!(g.is_abelian());
        assert!(g.validate().is_empty());
    }

    #[test]
    fn mixed_radix_encoding() {
        let g = FiniteGroup::abelian(&[2, 4]);
        assert_eq!(g.order, 8);
        assert_eq!(g.tuple(5), vec![1, 1]);
        assert_eq!(g.from_tuple(&[1, 1]), 5);
        let a = g.from_tuple(&[1, 3]);
        let b = g.from_tuple(&[1, 2]);
        assert_eq!(g.tuple(g.mul(a, b)), vec![0, 1]);
    }

    #[test]
    fn quaternion_structure() {
        let q = FiniteGroup::quaternion();
        assert!(q.validate().is_empty());
        assert!(!q.is_abelian());
        assert_eq!(q.exponent(), 4);
        // i*j = k, j*i = -k
        let (i, j, k) = (2u16, 4u16, 6u16);
        assert_eq!(q.mul(i, j), k);
        assert_eq!(q.mul(j, i), 7);
        assert_eq!(q.element_order(1), 2);
        assert_eq!(q.element_order(i), 4);
        let z = q.center();
        assert_eq!(z.elements, vec![0, 1]);
        let quot = q.quotient(&z).unwrap();
        assert_eq!(quot.group.order, 4);
        assert!(quot.group.is_abelian());
        assert_eq!(quot.group.exponent(), 2);
    }

    #[test]
    fn quotient_sections() {
        let g = FiniteGroup::cyclic(4);
        let n = Subgroup::from_elements(&g, &[0, 2]).unwrap();
        let q = g.quotient(&n).unwrap();
        assert_eq!(q.group.order, 2);
        assert_eq!(q.section, vec![0, 1]);
        assert_eq!(q.proj, vec![0, 1, 0, 1]);
        // section picks the least representative of each coset
        assert_eq!(q.proj[usize::from(q.section[1])], 1);
    }

    #[test]
    fn pairing_and_dual() {
        let g = FiniteGroup::abelian(&[2, 4]);
        let chi = g.from_tuple(&[1, 1]);
        let x = g.from_tuple(&[1, 2]);
        assert_eq!(pair(&g, chi, x), Tor::ZERO);
        let y = g.from_tuple(&[0, 1]);
        assert_eq!(pair(&g, chi, y), Tor::new(1, 4));
        // pairing is additive in each slot
        for a in g.elements() {
            for b in g.elements() {
                assert_eq!(pair(&g, chi, g.mul(a, b)), pair(&g, chi, a) + pair(&g, chi, b));
            }
        }
        // pairing is nondegenerate
        for x in g.elements() {
            if x != 0 {
                assert!(g.elements().any(|chi| !pair(&g, chi, x).is_zero()));
            }
        }
    }

    #[test]
    fn subgroup_basis_and_characters() {
        let g = FiniteGroup::cyclic(4);
        let n = Subgroup::from_elements(&g, &[0, 2]).unwrap();
        let ab = abelian_basis(&g, &n);
        assert_eq!(ab.orders, vec![2]);
        let chars = ab.char_group();
        assert_eq!(chars.order, 2);
        assert_eq!(ab.pair(&chars, 1, 2), Tor::new(1, 2));
        // restriction of the ambient character g -> g/4
        let restricted = ab.restrict_char(&g, &chars, 1);
        assert_eq!(ab.pair(&chars, restricted, 2), Tor::new(1, 2));
    }

    #[test]
    fn annihilator_of_subgroup() {
        let g = FiniteGroup::cyclic(4);
        let n = Subgroup::from_elements(&g, &[0, 2]).unwrap();
        let perp = annihilator(&g, &n);
        assert_eq!(perp.elements, vec![0, 2]);
        // biduality: ann(ann(N)) = N under the canonical identification
        let dual = dual_group(&g);
        let back = annihilator(&dual, &perp);
        assert_eq!(back.elements, n.elements);
    }

    #[test]
    fn klein_basis() {
        let g = FiniteGroup::abelian(&[2, 2]);
        let full = Subgroup::full(&g);
        let ab = abelian_basis(&g, &full);
        assert_eq!(ab.orders, vec![2, 2]);
        let mut seen: Vec<Vec<u32>> = g.elements().map(|x| ab.coords(x).to_vec()).collect();
        seen.sort();
        seen.dedup();
        assert_eq!(seen.len(), 4);
    }

    #[test]
    fn rejects_bad_tables() {
        // left identity only: not a group table
        let t = vec![vec![0u16, 1], vec![0, 1]];
        assert!(FiniteGroup::from_mul_table(&t).is_err());
        let g = FiniteGroup::cyclic(4);
        assert!(Subgroup::from_elements(&g, &[0, 1]).is_err());
        let q = FiniteGroup::quaternion();
        let h = Subgroup::closure(&q, &[2]); // <i>, normal
        assert!(h.is_normal(&q));
        assert_eq!(h.order(), 4);
    }
}
