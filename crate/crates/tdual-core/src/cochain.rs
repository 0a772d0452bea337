//! Torus-valued cochains on composable tuples of a groupoid, with the bar
//! differential, plus a flat exponent representation for 2-cocycles used in
//! hot loops.
//!
//! Tuple ids extend the pair-id scheme of [`FiniteGroupoid`]: a composable
//! d-tuple (γ₁, ..., γ_d) is addressed by the id of its (d-1)-prefix and the
//! fiber position of γ_d, so encoding is O(d) and degree-2 ids coincide with
//! the groupoid's pair ids.

use crate::groupoid::{GpRef, GroupoidHom};
use crate::torus::Tor;
use rand::Rng;

/// Composable-tuple enumeration for degrees 0..=max_degree.
pub struct Tuples {
    pub gp: GpRef,
    max_degree: usize,
    /// levels[k] describes degree k+2.
    levels: Vec<Level>,
}

struct Level {
    /// Offset of each (d-1)-tuple's extension block.
    ext: Vec<u32>,
    /// Prefix (d-1)-tuple id per d-tuple.
    prefix: Vec<u32>,
    /// Last arrow per d-tuple.
    last: Vec<u32>,
}

impl Tuples {
    pub fn new(gp: &GpRef, max_degree: usize) -> Tuples {
        let mut t = Tuples { gp: gp.clone(), max_degree, levels: Vec::new() };
        for d in 2..=max_degree {
            let prev = t.count(d - 1);
            let mut ext = Vec::with_capacity(prev);
            let mut total: u64 = 0;
            for p in 0..prev as u32 {
                ext.push(total as u32);
                let a = t.tuple_last(d - 1, p);
                total += gp.dst_fiber(gp.src(a)).len() as u64;
                assert!(total < u32::MAX as u64, "tuple level too large");
            }
            let mut prefix = vec![0u32; total as usize];
            let mut last = vec![0u32; total as usize];
            for p in 0..prev as u32 {
                let a = t.tuple_last(d - 1, p);
                let base = ext[p as usize] as usize;
                for (k, &b) in gp.dst_fiber(gp.src(a)).iter().enumerate() {
                    prefix[base + k] = p;
                    last[base + k] = b;
                }
            }
            t.levels.push(Level { ext, prefix, last });
            if d == 2 {
                debug_assert_eq!(t.count(2), gp.pair_count());
            }
        }
        t
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn count(&self, degree: usize) -> usize {
        match degree {
            0 => self.gp.object_count,
            1 => self.gp.arrow_count(),
            d => {
                assert!(d <= self.max_degree, "degree {d} beyond max {}", self.max_degree);
                self.levels[d - 2].last.len()
            }
        }
    }

    fn tuple_last(&self, degree: usize, id: u32) -> u32 {
        match degree {
            1 => id,
            d => self.levels[d - 2].last[id as usize],
        }
    }

    /// Tuple id of a composable arrow sequence (degree = arrows.len() >= 1).
    pub fn encode(&self, arrows: &[u32]) -> u32 {
        let gp = &self.gp;
        let mut id = arrows[0];
        for (d, &a) in arrows.iter().enumerate().skip(1) {
            debug_assert_eq!(gp.src(arrows[d - 1]), gp.dst(a), "tuple not composable");
            let lvl = &self.levels[d - 1];
            id = lvl.ext[id as usize] + gp.pos_in_dst(a);
        }
        id
    }

    /// Arrows of a tuple (degree >= 1).
    pub fn decode(&self, degree: usize, id: u32) -> Vec<u32> {
        let mut out = vec![0u32; degree];
        let mut d = degree;
        let mut cur = id;
        while d >= 2 {
            let lvl = &self.levels[d - 2];
            out[d - 1] = lvl.last[cur as usize];
            cur = lvl.prefix[cur as usize];
            d -= 1;
        }
        out[0] = cur;
        out
    }

    pub fn has_unit(&self, degree: usize, id: u32) -> bool {
        let gp = &self.gp;
        let mut d = degree;
        let mut cur = id;
        while d >= 2 {
            let lvl = &self.levels[d - 2];
            if gp.is_unit(lvl.last[cur as usize]) {
                return true;
            }
            cur = lvl.prefix[cur as usize];
            d -= 1;
        }
        gp.is_unit(cur)
    }

    /// Bar differential, degree d -> d+1. Degree 0 cochains live on objects
    /// and d(u)(γ) = u(s(γ)) - u(r(γ)).
    pub fn differential(&self, c: &Cochain) -> Cochain {
        let gp = &self.gp;
        let d = c.degree;
        assert!(d + 1 <= self.max_degree || d == 0, "differential needs degree {} tuples", d + 1);
        let mut values = vec![Tor::ZERO; self.count(d + 1)];
        if d == 0 {
            for a in gp.arrows() {
                values[a as usize] =
                    c.values[gp.src(a) as usize] - c.values[gp.dst(a) as usize];
            }
            return Cochain { gp: gp.clone(), degree: 1, values };
        }
        let mut scratch = Vec::with_capacity(d);
        for (id, slot) in values.iter_mut().enumerate() {
            let arrows = self.decode(d + 1, id as u32);
            let mut acc = c.eval(self, &arrows[1..]);
            let mut sign = -1i64;
            for i in 1..=d {
                scratch.clear();
                scratch.extend_from_slice(&arrows[..i - 1]);
                scratch.push(gp.compose_uc(arrows[i - 1], arrows[i]));
                scratch.extend_from_slice(&arrows[i + 1..]);
                acc = acc + sign * c.eval(self, &scratch);
                sign = -sign;
            }
            acc = acc + sign * c.eval(self, &arrows[..d]);
            *slot = acc;
        }
        Cochain { gp: gp.clone(), degree: d + 1, values }
    }
}

/// Torus-valued cochain of a fixed degree; values indexed by tuple id
/// (objects for degree 0).
#[derive(Clone, Debug)]
pub struct Cochain {
    pub gp: GpRef,
    pub degree: usize,
    pub values: Vec<Tor>,
}

impl PartialEq for Cochain {
    fn eq(&self, other: &Cochain) -> bool {
        self.degree == other.degree && self.values == other.values
    }
}

impl Cochain {
    pub fn zero(tuples: &Tuples, degree: usize) -> Cochain {
        Cochain {
            gp: tuples.gp.clone(),
            degree,
            values: vec![Tor::ZERO; tuples.count(degree)],
        }
    }

    pub fn from_fn(tuples: &Tuples, degree: usize, mut f: impl FnMut(&[u32]) -> Tor) -> Cochain {
        let mut values = vec![Tor::ZERO; tuples.count(degree)];
        if degree == 0 {
            for (x, v) in values.iter_mut().enumerate() {
                *v = f(&[x as u32]);
            }
        } else {
            for (id, v) in values.iter_mut().enumerate() {
                *v = f(&tuples.decode(degree, id as u32));
            }
        }
        Cochain { gp: tuples.gp.clone(), degree, values }
    }

    /// Uniform random values in (1/level)Z / Z.
    pub fn random(tuples: &Tuples, degree: usize, level: u32, rng: &mut impl Rng) -> Cochain {
        let values = (0..tuples.count(degree))
            .map(|_| Tor::from_level(rng.gen_range(0..level) as i64, level))
            .collect();
        Cochain { gp: tuples.gp.clone(), degree, values }
    }

    pub fn eval(&self, tuples: &Tuples, arrows: &[u32]) -> Tor {
        debug_assert_eq!(arrows.len(), self.degree);
        self.values[tuples.encode(arrows) as usize]
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }

    /// Vanishes on every tuple containing a unit arrow.
    pub fn is_normalized(&self, tuples: &Tuples) -> bool {
        if self.degree == 0 {
            return true;
        }
        self.values
            .iter()
            .enumerate()
            .all(|(id, v)| !tuples.has_unit(self.degree, id as u32) || v.is_zero())
    }

    /// Zeroes out all unit-containing tuples.
    pub fn normalize(&self, tuples: &Tuples) -> Cochain {
        let mut out = self.clone();
        if self.degree > 0 {
            for (id, v) in out.values.iter_mut().enumerate() {
                if tuples.has_unit(self.degree, id as u32) {
                    *v = Tor::ZERO;
                }
            }
        }
        out
    }
}

impl std::ops::Add for &Cochain {
    type Output = Cochain;
    fn add(self, rhs: &Cochain) -> Cochain {
        assert_eq!(self.degree, rhs.degree);
        assert_eq!(self.values.len(), rhs.values.len());
        Cochain {
            gp: self.gp.clone(),
            degree: self.degree,
            values: self.values.iter().zip(&rhs.values).map(|(&a, &b)| a + b).collect(),
        }
    }
}

impl std::ops::Sub for &Cochain {
    type Output = Cochain;
    fn sub(self, rhs: &Cochain) -> Cochain {
        assert_eq!(self.degree, rhs.degree);
        assert_eq!(self.values.len(), rhs.values.len());
        Cochain {
            gp: self.gp.clone(),
            degree: self.degree,
            values: self.values.iter().zip(&rhs.values).map(|(&a, &b)| a - b).collect(),
        }
    }
}

impl std::ops::Neg for &Cochain {
    type Output = Cochain;
    fn neg(self) -> Cochain {
        Cochain {
            gp: self.gp.clone(),
            degree: self.degree,
            values: self.values.iter().map(|&a| -a).collect(),
        }
    }
}

/// Pullback along a functor: (F*c)(γ₁..γ_d) = c(Fγ₁..Fγ_d). `src_tuples`
/// enumerates the domain, `dst_tuples` the codomain (where c lives).
pub fn pullback(
    c: &Cochain,
    hom: &GroupoidHom,
    src_tuples: &Tuples,
    dst_tuples: &Tuples,
) -> Cochain {
    if c.degree == 0 {
        let values = hom.obj_map.iter().map(|&x| c.values[x as usize]).collect();
        return Cochain { gp: src_tuples.gp.clone(), degree: 0, values };
    }
    let mut buf = vec![0u32; c.degree];
    Cochain::from_fn(src_tuples, c.degree, |arrows| {
        for (i, &a) in arrows.iter().enumerate() {
            buf[i] = hom.arrow_map[a as usize];
        }
        c.eval(dst_tuples, &buf)
    })
}

/// 2-cochain with values k/level stored as exponents, indexed by pair id.
#[derive(Clone, Debug)]
pub struct PairCochain {
    pub gp: GpRef,
    pub level: u32,
    pub vals: Vec<u32>,
}

impl PartialEq for PairCochain {
    fn eq(&self, other: &PairCochain) -> bool {
        self.level == other.level && self.vals == other.vals
    }
}

impl PairCochain {
    pub fn zero(gp: &GpRef, level: u32) -> PairCochain {
        PairCochain { gp: gp.clone(), level, vals: vec![0; gp.pair_count()] }
    }

    /// f sees composable (a, b) and returns the exponent mod level.
    pub fn from_fn(gp: &GpRef, level: u32, mut f: impl FnMut(u32, u32) -> u32) -> PairCochain {
        let mut vals = vec![0u32; gp.pair_count()];
        gp.for_each_pair(|a, b, p| {
            vals[p as usize] = f(a, b) % level;
        });
        PairCochain { gp: gp.clone(), level, vals }
    }

    /// Reads off a degree-2 torus cochain; every value must lie in
    /// (1/level)Z.
    pub fn from_cochain(c: &Cochain, level: u32) -> PairCochain {
        assert_eq!(c.degree, 2);
        let vals = c
            .values
            .iter()
            .map(|v| {
                v.as_level(level).expect("cochain value outside level") as u32 % level.max(1)
            })
            .collect();
        PairCochain { gp: c.gp.clone(), level, vals }
    }

    pub fn to_cochain(&self) -> Cochain {
        Cochain {
            gp: self.gp.clone(),
            degree: 2,
            values: self
                .vals
                .iter()
                .map(|&k| Tor::from_level(i64::from(k), self.level))
                .collect(),
        }
    }

    #[inline]
    pub fn eval_uc(&self, a: u32, b: u32) -> u32 {
        self.vals[self.gp.pair_id_uc(a, b) as usize]
    }

    pub fn eval(&self, a: u32, b: u32) -> Option<u32> {
        self.gp.pair_id(a, b).map(|p| self.vals[p as usize])
    }

    /// Checks the 2-cocycle identity over all composable triples.
    pub fn is_closed(&self) -> bool {
        self.closedness_violations() == 0
    }

    pub fn closedness_violations(&self) -> u64 {
        let gp = self.gp.clone();
        let l = self.level;
        let mut bad = 0u64;
        gp.for_each_pair(|a, b, p| {
            let ab = gp.compose_uc(a, b);
            let s_ab = self.vals[p as usize];
            for &c in gp.dst_fiber(gp.src(b)) {
                let bc = gp.compose_uc(b, c);
                // σ(b,c) - σ(ab,c) + σ(a,bc) - σ(a,b) = 0 mod level
                let v = (self.eval_uc(b, c) + l - self.eval_uc(ab, c) + self.eval_uc(a, bc) + l
                    - s_ab)
                    % l;
                if v != 0 {
                    bad += 1;
                }
            }
        });
        bad
    }

    pub fn is_normalized(&self) -> bool {
        let gp = self.gp.clone();
        let mut ok = true;
        gp.for_each_pair(|a, b, p| {
            if (gp.is_unit(a) || gp.is_unit(b)) && self.vals[p as usize] != 0 {
                ok = false;
            }
        });
        ok
    }

    /// σ - δb for a 1-cochain of exponents over arrows.
    pub fn gauge_shift(&self, b1: &[u32]) -> PairCochain {
        assert_eq!(b1.len(), self.gp.arrow_count());
        let gp = self.gp.clone();
        let l = self.level;
        let mut vals = vec![0u32; self.vals.len()];
        gp.for_each_pair(|a, b, p| {
            let ab = gp.compose_uc(a, b);
            let delta = (b1[b as usize] % l + l - b1[ab as usize] % l + b1[a as usize] % l) % l;
            vals[p as usize] = (self.vals[p as usize] + 2 * l - delta) % l;
        });
        PairCochain { gp: self.gp.clone(), level: l, vals }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::FiniteGroup;
    use crate::groupoid::FiniteGroupoid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn z2_gp() -> GpRef {
        Arc::new(FiniteGroupoid::from_group(&FiniteGroup::cyclic(2)))
    }

    #[test]
    fn tuple_counts_and_codec() {
        let gp: GpRef = Arc::new(FiniteGroupoid::pair_groupoid(3));
        let t = Tuples::new(&gp, 3);
        assert_eq!(t.count(0), 3);
        assert_eq!(t.count(1), 9);
        assert_eq!(t.count(2), gp.pair_count());
        assert_eq!(t.count(3), 81);
        for id in 0..t.count(3) as u32 {
            let arr = t.decode(3, id);
            assert_eq!(gp.src(arr[0]), gp.dst(arr[1]));
            assert_eq!(gp.src(arr[1]), gp.dst(arr[2]));
            assert_eq!(t.encode(&arr), id);
        }
        // degree-2 ids are exactly pair ids
        gp.for_each_pair(|a, b, p| {
            assert_eq!(t.encode(&[a, b]), p);
        });
    }

    #[test]
    fn degree_one_differential_matches_hand_formula() {
        let gp = z2_gp();
        let t = Tuples::new(&gp, 2);
        // f(0) = 0, f(1) = 1/3
        let f = Cochain {
            gp: gp.clone(),
            degree: 1,
            values: vec![Tor::ZERO, Tor::new(1, 3)],
        };
        let df = t.differential(&f);
        // df(g1,g2) = f(g2) - f(g1 g2) + f(g1)
        let v = |a: u32, b: u32| df.eval(&t, &[a, b]);
        assert_eq!(v(0, 0), Tor::ZERO);
        assert_eq!(v(0, 1), Tor::ZERO);
        assert_eq!(v(1, 0), Tor::ZERO);
        assert_eq!(v(1, 1), Tor::new(2, 3));
    }

    #[test]
    fn degree_zero_differential_uses_endpoints() {
        let gp: GpRef = Arc::new(FiniteGroupoid::pair_groupoid(2));
        let t = Tuples::new(&gp, 2);
        let u = Cochain { gp: gp.clone(), degree: 0, values: vec![Tor::ZERO, Tor::new(1, 4)] };
        let du = t.differential(&u);
        // arrow 0*2+1 goes 1 -> 0: du = u(1) - u(0) = 1/4
        assert_eq!(du.values[1], Tor::new(1, 4));
        assert_eq!(du.values[2], Tor::new(3, 4));
        assert_eq!(du.values[0], Tor::ZERO);
        // d(d(u)) = 0
        let ddu = t.differential(&du);
        assert!(ddu.is_zero());
    }

    #[test]
    fn bar_differential_squares_to_zero() {
        let gp: GpRef = Arc::new(FiniteGroupoid::from_group(&FiniteGroup::abelian(&[2, 2])));
        let t = Tuples::new(&gp, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for deg in 0..=2usize {
            for _ in 0..20 {
                let c = Cochain::random(&t, deg, 12, &mut rng);
                let ddc = t.differential(&t.differential(&c));
                assert!(ddc.is_zero(), "d^2 != 0 at degree {deg}");
            }
        }
    }

    #[test]
    fn normalized_cochains_form_a_subcomplex() {
        let gp = z2_gp();
        let t = Tuples::new(&gp, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let c = Cochain::random(&t, 2, 8, &mut rng).normalize(&t);
            assert!(c.is_normalized(&t));
            assert!(t.differential(&c).is_normalized(&t));
        }
    }

    #[test]
    fn pair_cochain_closedness() {
        let gp = z2_gp();
        // extension cocycle of Z/4 over Z/2: sigma(1,1) = 1/2
        let sigma = PairCochain::from_fn(&gp, 2, |a, b| u32::from(a == 1 && b == 1));
        assert!(sigma.is_closed());
        assert!(sigma.is_normalized());
        // depends on the first argument only: delta is [b] - [ab] which is
        // nonzero at (1,1,.)
        let bad = PairCochain::from_fn(&gp, 4, |a, _| u32::from(a == 1));
        assert!(!bad.is_closed());
        // round trip through the exact representation
        let back = PairCochain::from_cochain(&sigma.to_cochain(), 2);
        assert_eq!(back, sigma);
    }

    #[test]
    fn gauge_shift_changes_by_coboundary() {
        let gp = z2_gp();
        let t = Tuples::new(&gp, 3);
        let sigma = PairCochain::from_fn(&gp, 4, |a, b| u32::from(a == 1 && b == 1) * 2);
        let shifted = sigma.gauge_shift(&[0, 3]);
        // difference is the differential of b = (0, 3/4)
        let b = Cochain {
            gp: gp.clone(),
            degree: 1,
            values: vec![Tor::ZERO, Tor::new(3, 4)],
        };
        let expect = &sigma.to_cochain() - &t.differential(&b);
        assert_eq!(shifted.to_cochain(), expect);
        assert!(shifted.is_closed());
    }

    #[test]
    fn pullback_along_group_hom() {
        let z2 = z2_gp();
        let z4: GpRef = Arc::new(FiniteGroupoid::from_group(&FiniteGroup::cyclic(4)));
        let t2 = Tuples::new(&z2, 2);
        let t4 = Tuples::new(&z4, 2);
        let inc = GroupoidHom { obj_map: vec![0], arrow_map: vec![0, 2] };
        assert!(inc.is_functor(&z2, &z4));
        let c = Cochain::from_fn(&t4, 2, |arr| Tor::from_level((arr[0] * arr[1]) as i64, 8));
        let pc = pullback(&c, &inc, &t2, &t4);
        assert_eq!(pc.eval(&t2, &[1, 1]), Tor::from_level(4, 8));
        assert_eq!(pc.eval(&t2, &[1, 0]), Tor::ZERO);
    }
}
