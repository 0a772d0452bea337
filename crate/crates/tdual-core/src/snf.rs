//! Exact integer linear algebra: Smith normal form with unimodular
//! transforms, kernels of integer matrices modulo a level, and congruence
//! solvers over Z/L and over the divisible group Q/Z.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Dense integer matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct IMat {
    pub rows: usize,
    pub cols: usize,
    data: Vec<BigInt>,
}

impl IMat {
    pub fn zero(rows: usize, cols: usize) -> IMat {
        IMat { rows, cols, data: vec![BigInt::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> IMat {
        let mut m = IMat::zero(n, n);
        for i in 0..n {
            m.set(i, i, BigInt::one());
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> i64) -> IMat {
        let mut m = IMat::zero(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, BigInt::from(f(i, j)));
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mul(&self, other: &IMat) -> IMat {
        assert_eq!(self.cols, other.rows);
        let mut out = IMat::zero(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * &x[j]).sum())
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<BigInt> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    fn swap_cols(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for i in 0..self.rows {
            self.data.swap(i * self.cols + a, i * self.cols + b);
        }
    }

    /// row[dst] -= q * row[src]
    fn row_axpy(&mut self, dst: usize, src: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for j in 0..self.cols {
            let v = self.get(dst, j) - q * self.get(src, j);
            self.set(dst, j, v);
        }
    }

    /// col[dst] -= q * col[src]
    fn col_axpy(&mut self, dst: usize, src: usize, q: &BigInt) {
        if q.is_zero() {
            return;
        }
        for i in 0..self.rows {
            let v = self.get(i, dst) - q * self.get(i, src);
            self.set(i, dst, v);
        }
    }

    /// row[dst] += row[src]
    fn row_add(&mut self, dst: usize, src: usize) {
        for j in 0..self.cols {
            let v = self.get(dst, j) + self.get(src, j);
            self.set(dst, j, v);
        }
    }

    fn negate_row(&mut self, i: usize) {
        for j in 0..self.cols {
            let v = -self.get(i, j);
            self.set(i, j, v);
        }
    }

    fn negate_col(&mut self, j: usize) {
        for i in 0..self.rows {
            let v = -self.get(i, j);
            self.set(i, j, v);
        }
    }

    /// Exact determinant by fraction-free elimination. Square matrices only.
    pub fn det(&self) -> BigInt {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a.get(k, k).is_zero() {
                match (k + 1..n).find(|&i| !a.get(i, k).is_zero()) {
                    Some(i) => {
                        a.swap_rows(k, i);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = (a.get(i, j) * a.get(k, k) - a.get(i, k) * a.get(k, j)) / &prev;
                    a.set(i, j, v);
                }
                a.set(i, k, BigInt::zero());
            }
            prev = a.get(k, k).clone();
        }
        sign * a.get(n - 1, n - 1)
    }
}

/// Smith normal form U·A·V = D with U, V unimodular and the diagonal
/// d₁ | d₂ | … nonnegative. The inverse transforms are tracked alongside.
#[derive(Clone, Debug)]
pub struct Snf {
    pub u: IMat,
    pub v: IMat,
    pub u_inv: IMat,
    pub v_inv: IMat,
    pub d: IMat,
    pub diag: Vec<BigInt>,
    pub rank: usize,
}

pub fn snf(a: &IMat) -> Snf {
    let (m, n) = (a.rows, a.cols);
    let mut d = a.clone();
    let mut u = IMat::identity(m);
    let mut v = IMat::identity(n);
    let mut u_inv = IMat::identity(m);
    let mut v_inv = IMat::identity(n);
    let one = BigInt::one();
    let mut t = 0;
    while t < m.min(n) {
        // pivot: nonzero entry of least absolute value in the trailing block
        let mut piv: Option<(usize, usize)> = None;
        for i in t..m {
            for j in t..n {
                if !d.get(i, j).is_zero()
                    && piv.map_or(true, |(pi, pj)| d.get(i, j).abs() < d.get(pi, pj).abs())
                {
                    piv = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = piv else { break };
        d.swap_rows(t, pi);
        u.swap_rows(t, pi);
        u_inv.swap_cols(t, pi);
        d.swap_cols(t, pj);
        v.swap_cols(t, pj);
        v_inv.swap_rows(t, pj);
        loop {
            let mut clean = true;
            for i in t + 1..m {
                if !d.get(i, t).is_zero() {
                    let q = d.get(i, t) / d.get(t, t);
                    d.row_axpy(i, t, &q);
                    u.row_axpy(i, t, &q);
                    u_inv.col_axpy(t, i, &-&q);
                    if !d.get(i, t).is_zero() {
                        d.swap_rows(t, i);
                        u.swap_rows(t, i);
                        u_inv.swap_cols(t, i);
                        clean = false;
                    }
                }
            }
            for j in t + 1..n {
                if !d.get(t, j).is_zero() {
                    let q = d.get(t, j) / d.get(t, t);
                    d.col_axpy(j, t, &q);
                    v.col_axpy(j, t, &q);
                    v_inv.row_axpy(t, j, &-&q);
                    if !d.get(t, j).is_zero() {
                        d.swap_cols(t, j);
                        v.swap_cols(t, j);
                        v_inv.swap_rows(t, j);
                        clean = false;
                    }
                }
            }
            if !clean {
                continue;
            }
            // divisibility: the pivot must divide the trailing block
            let mut fixed = true;
            'scan: for i in t + 1..m {
                for j in t + 1..n {
                    if !(d.get(i, j) % d.get(t, t)).is_zero() {
                        d.row_add(t, i);
                        u.row_add(t, i);
                        u_inv.col_axpy(i, t, &one);
                        fixed = false;
                        break 'scan;
                    }
                }
            }
            if fixed {
                break;
            }
        }
        if d.get(t, t).is_negative() {
            d.negate_row(t);
            u.negate_row(t);
            u_inv.negate_col(t);
        }
        t += 1;
    }
    let diag: Vec<BigInt> = (0..m.min(n)).map(|i| d.get(i, i).clone()).collect();
    let rank = diag.iter().take_while(|x| !x.is_zero()).count();
    Snf { u, v, u_inv, v_inv, d, diag, rank }
}

/// Columns form a basis of the lattice {k ∈ Zⁿ : A·k ≡ 0 mod L}; the basis
/// is V·diag(L/gcd(dᵢ, L)) with unconstrained coordinates left untouched.
pub fn kernel_mod_basis(s: &Snf, l: u64) -> IMat {
    let n = s.v.rows;
    let big_l = BigInt::from(l);
    let mut scale = IMat::zero(n, n);
    for j in 0..n {
        let f = if j < s.diag.len() && !s.diag[j].is_zero() {
            &big_l / s.diag[j].gcd(&big_l)
        } else {
            BigInt::one()
        };
        scale.set(j, j, f);
    }
    s.v.mul(&scale)
}

/// Solves A·x ≡ b (mod L) over the integers.
pub fn solve_mod(s: &Snf, b: &[BigInt], l: u64) -> Option<Vec<BigInt>> {
    let (m, n) = (s.u.rows, s.v.rows);
    assert_eq!(b.len(), m);
    let big_l = BigInt::from(l);
    let ub = s.u.mul_vec(b);
    let mut y = vec![BigInt::zero(); n];
    for (i, c) in ub.iter().enumerate() {
        let c = c.mod_floor(&big_l);
        if i < s.diag.len() && !s.diag[i].is_zero() {
            // dᵢ yᵢ ≡ c (mod L)
            let g = s.diag[i].gcd(&big_l);
            if !(&c % &g).is_zero() {
                return None;
            }
            let li = &big_l / &g;
            let di = (&s.diag[i] / &g).mod_floor(&li);
            let ci = (&c / &g).mod_floor(&li);
            let inv = mod_inverse(&di, &li)?;
            y[i] = (inv * ci).mod_floor(&li);
        } else if !c.is_zero() {
            return None;
        }
    }
    Some(s.v.mul_vec(&y))
}

/// Solves A·x ≡ b (mod 1) over the rationals. Over the divisible group Q/Z
/// the only obstructions sit in the zero rows of the diagonal.
pub fn solve_mod1(s: &Snf, b: &[BigRational]) -> Option<Vec<BigRational>> {
    let (m, n) = (s.u.rows, s.v.rows);
    assert_eq!(b.len(), m);
    let ub: Vec<BigRational> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| BigRational::from(s.u.get(i, j).clone()) * &b[j])
                .sum()
        })
        .collect();
    let mut y = vec![BigRational::zero(); n];
    for (i, c) in ub.iter().enumerate() {
        if i < s.diag.len() && !s.diag[i].is_zero() {
            y[i] = c / BigRational::from(s.diag[i].clone());
        } else if !c.is_integer() {
            return None;
        }
    }
    Some(
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| BigRational::from(s.v.get(i, j).clone()) * &y[j])
                    .sum()
            })
            .collect(),
    )
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    if m.is_one() {
        return Some(BigInt::zero());
    }
    let e = a.extended_gcd(m);
    if e.gcd.is_one() {
        Some(e.x.mod_floor(m))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn check_snf(a: &IMat) {
        let s = snf(a);
        assert_eq!(s.u.mul(a).mul(&s.v), s.d, "U A V = D");
        assert_eq!(s.u.det().abs(), BigInt::one(), "U unimodular");
        assert_eq!(s.v.det().abs(), BigInt::one(), "V unimodular");
        assert_eq!(s.u.mul(&s.u_inv), IMat::identity(s.u.rows), "U inverse");
        assert_eq!(s.v.mul(&s.v_inv), IMat::identity(s.v.rows), "V inverse");
        for i in 0..s.diag.len().saturating_sub(1) {
            if !s.diag[i].is_zero() {
                assert!((&s.diag[i + 1] % &s.diag[i]).is_zero(), "divisibility chain");
            } else {
                assert!(s.diag[i + 1].is_zero());
            }
        }
        for i in 0..s.d.rows {
            for j in 0..s.d.cols {
                if i != j {
                    assert!(s.d.get(i, j).is_zero());
                }
            }
        }
    }

    #[test]
    fn snf_known_cases() {
        let a = IMat::from_fn(2, 2, |i, j| [[2, 0], [0, 3]][i][j]);
        let s = snf(&a);
        check_snf(&a);
        assert_eq!(s.diag, vec![BigInt::from(1), BigInt::from(6)]);

        let a = IMat::from_fn(2, 2, |i, j| [[1, 2], [3, 4]][i][j]);
        let s = snf(&a);
        check_snf(&a);
        assert_eq!(s.diag, vec![BigInt::from(1), BigInt::from(2)]);

        let z = IMat::zero(3, 2);
        let s = snf(&z);
        assert_eq!(s.rank, 0);
        check_snf(&z);
    }

    #[test]
    fn snf_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..40 {
            let rows = rng.gen_range(1..=5);
            let cols = rng.gen_range(1..=5);
            let mut a = IMat::zero(rows, cols);
            for i in 0..rows {
                for j in 0..cols {
                    a.set(i, j, BigInt::from(rng.gen_range(-9i64..=9)));
                }
            }
            check_snf(&a);
        }
    }

    #[test]
    fn kernel_mod_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..25 {
            let l: u64 = [2, 3, 4, 6][rng.gen_range(0..4)];
            let rows = rng.gen_range(1..=2);
            let a = IMat::from_fn(rows, 2, |_, _| rng.gen_range(-4i64..=4));
            let s = snf(&a);
            let k = kernel_mod_basis(&s, l);
            let big_l = BigInt::from(l);
            // every column lies in the kernel mod L
            for j in 0..k.cols {
                let col = k.column(j);
                for v in a.mul_vec(&col) {
                    assert!(v.mod_floor(&big_l).is_zero());
                }
            }
            // every kernel vector mod L is an integer combination of columns
            let lattice: Vec<Vec<BigInt>> = (0..k.cols).map(|j| k.column(j)).collect();
            for x0 in 0..l {
                for x1 in 0..l {
                    let x = vec![BigInt::from(x0), BigInt::from(x1)];
                    let in_kernel = a
                        .mul_vec(&x)
                        .iter()
                        .all(|v| v.mod_floor(&big_l).is_zero());
                    if !in_kernel {
                        continue;
                    }
                    let mut hit = false;
                    'outer: for c0 in 0..l {
                        for c1 in 0..l {
                            let y0 = (&lattice[0][0] * c0 + &lattice[1][0] * c1 - &x[0])
                                .mod_floor(&big_l);
                            let y1 = (&lattice[0][1] * c0 + &lattice[1][1] * c1 - &x[1])
                                .mod_floor(&big_l);
                            if y0.is_zero() && y1.is_zero() {
                                hit = true;
                                break 'outer;
                            }
                        }
                    }
                    assert!(hit, "kernel vector {x:?} not spanned at level {l}");
                }
            }
        }
    }

    #[test]
    fn solve_mod_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..30 {
            let l: u64 = [2, 3, 4, 5, 8][rng.gen_range(0..5)];
            let rows = rng.gen_range(1..=3);
            let cols = rng.gen_range(1..=3);
            let a = IMat::from_fn(rows, cols, |_, _| rng.gen_range(-5i64..=5));
            let x0: Vec<BigInt> = (0..cols)
                .map(|_| BigInt::from(rng.gen_range(0..l as i64)))
                .collect();
            let b = a.mul_vec(&x0);
            let s = snf(&a);
            let x = solve_mod(&s, &b, l).expect("constructed system is solvable");
            let big_l = BigInt::from(l);
            for (lhs, rhs) in a.mul_vec(&x).iter().zip(&b) {
                assert_eq!(lhs.mod_floor(&big_l), rhs.mod_floor(&big_l));
            }
        }
        // 2x = 1 mod 4 has no solution
        let a = IMat::from_fn(1, 1, |_, _| 2);
        assert!(solve_mod(&snf(&a), &[BigInt::one()], 4).is_none());
    }

    #[test]
    fn solve_mod1_uses_divisibility() {
        // 2y = 1/2 mod 1 is solvable over Q/Z (y = 1/4)
        let a = IMat::from_fn(1, 1, |_, _| 2);
        let b = vec![BigRational::new(BigInt::one(), BigInt::from(2))];
        let s = snf(&a);
        let x = solve_mod1(&s, &b).unwrap();
        let lhs = BigRational::from(BigInt::from(2)) * &x[0];
        assert!((lhs - &b[0]).is_integer());
        // 0y = 1/3 is not
        let z = IMat::zero(1, 1);
        let b = vec![BigRational::new(BigInt::one(), BigInt::from(3))];
        assert!(solve_mod1(&snf(&z), &b).is_none());
        assert!(solve_mod1(&snf(&z), &[BigRational::zero()]).is_some());
    }

    #[test]
    fn solve_mod1_random_consistency() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..30 {
            let rows = rng.gen_range(1..=3);
            let cols = rng.gen_range(1..=3);
            let a = IMat::from_fn(rows, cols, |_, _| rng.gen_range(-4i64..=4));
            let x0: Vec<BigRational> = (0..cols)
                .map(|_| {
                    BigRational::new(
                        BigInt::from(rng.gen_range(0i64..12)),
                        BigInt::from(rng.gen_range(1i64..=6)),
                    )
                })
                .collect();
            let b: Vec<BigRational> = (0..rows)
                .map(|i| {
                    (0..cols)
                        .map(|j| BigRational::from(a.get(i, j).clone()) * &x0[j])
                        .sum::<BigRational>()
                        + BigRational::from(BigInt::from(rng.gen_range(-2i64..=2)))
                })
                .collect();
            let s = snf(&a);
            let x = solve_mod1(&s, &b).expect("has the witness x0");
            for i in 0..rows {
                let lhs: BigRational = (0..cols)
                    .map(|j| BigRational::from(a.get(i, j).clone()) * &x[j])
                    .sum();
                assert!((lhs - &b[i]).is_integer());
            }
        }
    }
}
