//! The finite coefficient field F_{p^n}.
//!
//! One field per session. Elements are `u64` codes: the base-p digits of the
//! code are the coordinates in the power basis 1, X, .., X^{n-1} of
//! F_p[X]/(f) where f is the lexicographically first monic irreducible of
//! degree n. Codes `0..p` are the prime field.

use std::collections::HashMap;

use crate::error::{Error, Result};

pub type Fe = u64;

#[derive(Debug, Clone)]
pub struct Field {
    p: u64,
    n: u32,
    size: u64,
    /// Low coefficients of the monic modulus (degree n term implicit).
    modulus: Vec<u64>,
    /// Same modulus as a bitmask, used when p = 2.
    modbits: u64,
    gen: Fe,
    /// Prime factorization of size - 1.
    factors: Vec<(u64, u32)>,
}

impl Field {
    pub fn new(p: u64, n: u32) -> Result<Self> {
        if p < 2 || !is_prime(p) {
            return Err(Error::Config(format!("{p} is not prime")));
        }
        if n == 0 {
            return Err(Error::Config("field degree must be positive".into()));
        }
        let size = (p as u128).pow(n);
        if size > (1u128 << 40) {
            return Err(Error::Config(format!("field {p}^{n} too large")));
        }
        let size = size as u64;
        let modulus = first_irreducible(p, n);
        let modbits = if p == 2 {
            modulus.iter().enumerate().fold(0u64, |acc, (i, &c)| acc | (c << i))
        } else {
            0
        };
        let mut f = Field { p, n, size, modulus, modbits, gen: 0, factors: factorize(size - 1) };
        f.gen = f.find_generator();
        Ok(f)
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn degree(&self) -> u32 {
        self.n
    }

    pub fn size(&self) -> u64 {
        self.size
    }

    pub fn generator(&self) -> Fe {
        self.gen
    }

    pub fn is_prime_field(&self, x: Fe) -> bool {
        x < self.p
    }

    /// Image of an integer in the prime field.
    pub fn from_int(&self, k: i64) -> Fe {
        k.rem_euclid(self.p as i64) as u64
    }

    fn digits(&self, x: Fe) -> Vec<u64> {
        let mut d = vec![0; self.n as usize];
        let mut x = x;
        for slot in d.iter_mut() {
            *slot = x % self.p;
            x /= self.p;
        }
        d
    }

    fn pack_digits(&self, d: &[u64]) -> Fe {
        d.iter().rev().fold(0, |acc, &c| acc * self.p + c)
    }

    pub fn add(&self, a: Fe, b: Fe) -> Fe {
        if self.p == 2 {
            return a ^ b;
        }
        let (da, db) = (self.digits(a), self.digits(b));
        let s: Vec<u64> = da.iter().zip(&db).map(|(x, y)| (x + y) % self.p).collect();
        self.pack_digits(&s)
    }

    pub fn neg(&self, a: Fe) -> Fe {
        if self.p == 2 {
            return a;
        }
        let d: Vec<u64> = self.digits(a).iter().map(|&x| (self.p - x) % self.p).collect();
        self.pack_digits(&d)
    }

    pub fn sub(&self, a: Fe, b: Fe) -> Fe {
        self.add(a, self.neg(b))
    }

    /// Multiplication by an element of the prime field.
    pub fn scale(&self, k: u64, a: Fe) -> Fe {
        let k = k % self.p;
        if self.p == 2 {
            return if k == 0 { 0 } else { a };
        }
        let d: Vec<u64> = self.digits(a).iter().map(|&x| x * k % self.p).collect();
        self.pack_digits(&d)
    }

    pub fn mul(&self, a: Fe, b: Fe) -> Fe {
        if a == 0 || b == 0 {
            return 0;
        }
        if self.p == 2 {
            return self.mul2(a, b);
        }
        let n = self.n as usize;
        let (da, db) = (self.digits(a), self.digits(b));
        let mut prod = vec![0u64; 2 * n - 1];
        for (i, &x) in da.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in db.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % self.p;
            }
        }
        for i in (n..2 * n - 1).rev() {
            let c = prod[i];
            if c == 0 {
                continue;
            }
            prod[i] = 0;
            for j in 0..n {
                let t = c * self.modulus[j] % self.p;
                prod[i - n + j] = (prod[i - n + j] + self.p - t) % self.p;
            }
        }
        self.pack_digits(&prod[..n])
    }

    fn mul2(&self, a: u64, b: u64) -> u64 {
        let n = self.n;
        let mut acc: u128 = 0;
        let mut b = b;
        let mut shift = 0;
        while b != 0 {
            if b & 1 == 1 {
                acc ^= (a as u128) << shift;
            }
            b >>= 1;
            shift += 1;
        }
        let full = (self.modbits as u128) | (1u128 << n);
        for i in (n..2 * n).rev() {
            if acc >> i & 1 == 1 {
                acc ^= full << (i - n);
            }
        }
        acc as u64
    }

    pub fn pow(&self, a: Fe, e: u128) -> Fe {
        if e == 0 {
            return 1;
        }
        if a == 0 {
            return 0;
        }
        let e = e % (self.size as u128 - 1);
        let e = if e == 0 { self.size as u128 - 1 } else { e };
        let (mut base, mut e, mut acc) = (a, e, 1);
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    pub fn inv(&self, a: Fe) -> Result<Fe> {
        if a == 0 {
            return Err(Error::DegenerateInput("inverse of 0 in the residue field".into()));
        }
        Ok(self.pow(a, self.size as u128 - 2))
    }

    /// x^(p^k); negative k gives the inverse automorphism.
    pub fn frob(&self, a: Fe, k: i64) -> Fe {
        let k = k.rem_euclid(self.n as i64) as u32;
        let mut x = a;
        for _ in 0..k {
            x = self.pow(x, self.p as u128);
        }
        x
    }

    /// Smallest d | n with a in F_{p^d}.
    pub fn elem_degree(&self, a: Fe) -> u32 {
        let mut ds: Vec<u32> = (1..=self.n).filter(|d| self.n.is_multiple_of(*d)).collect();
        ds.sort();
        for d in ds {
            if self.frob(a, d as i64) == a {
                return d;
            }
        }
        self.n
    }

    /// All elements of the subfield F_{p^d}, sorted by code.
    pub fn subfield(&self, d: u32) -> Result<Vec<Fe>> {
        if !self.n.is_multiple_of(d) {
            return Err(Error::ExtensionCapExceeded(format!(
                "F_{}^{} is not inside F_{}^{}",
                self.p, d, self.p, self.n
            )));
        }
        let sub = self.p.pow(d);
        let step = (self.size - 1) / (sub - 1);
        let h = self.pow(self.gen, step as u128);
        let mut out = vec![0];
        let mut x = 1;
        for _ in 0..sub - 1 {
            out.push(x);
            x = self.mul(x, h);
        }
        out.sort();
        Ok(out)
    }

    fn find_generator(&self) -> Fe {
        if self.size == 2 {
            return 1;
        }
        let order = self.size - 1;
        (2..self.size)
            .find(|&g| self.factors.iter().all(|&(l, _)| self.pow(g, (order / l) as u128) != 1))
            .expect("multiplicative group is cyclic")
    }

    /// Discrete logarithm to the base of `generator()` (Pohlig–Hellman, BSGS).
    pub fn dlog(&self, a: Fe) -> Result<u64> {
        if a == 0 {
            return Err(Error::DegenerateInput("log of 0".into()));
        }
        let order = self.size - 1;
        let mut residues = Vec::new();
        for &(l, e) in &self.factors {
            let le = l.pow(e);
            let gamma = self.pow(self.gen, (order / l) as u128);
            let mut x: u64 = 0;
            for k in 0..e {
                // strip the part already found and project to the order-l subgroup
                let shift = self.pow(self.inv(self.gen)?, x as u128);
                let h = self.pow(self.mul(a, shift), (order / l.pow(k + 1)) as u128);
                let dk = self.bsgs(gamma, h, l)?;
                x += dk * l.pow(k);
            }
            residues.push((x % le, le));
        }
        Ok(crt(&residues))
    }

    fn bsgs(&self, g: Fe, h: Fe, order: u64) -> Result<u64> {
        let m = (order as f64).sqrt().ceil() as u64 + 1;
        let mut table = HashMap::with_capacity(m as usize);
        let mut x = 1;
        for j in 0..m {
            table.entry(x).or_insert(j);
            x = self.mul(x, g);
        }
        let step = self.inv(self.pow(g, m as u128))?;
        let mut y = h;
        for i in 0..=m {
            if let Some(&j) = table.get(&y) {
                return Ok((i * m + j) % order);
            }
            y = self.mul(y, step);
        }
        Err(Error::DegenerateInput("discrete log not found".into()))
    }

    /// All x in the field with x^k = a, sorted by code.
    pub fn nth_roots(&self, a: Fe, k: u64) -> Result<Vec<Fe>> {
        if a == 0 {
            return Ok(vec![0]);
        }
        let order = self.size - 1;
        let g = num_integer::gcd(k, order);
        let l = self.dlog(a)?;
        if l % g != 0 {
            return Ok(vec![]);
        }
        let m = order / g;
        let j0 = if m == 1 { 0 } else { (l / g) as u128 * mod_inv((k / g) % m, m) as u128 % m as u128 };
        let mut roots: Vec<Fe> =
            (0..g).map(|i| self.pow(self.gen, j0 + i as u128 * m as u128)).collect();
        roots.sort();
        Ok(roots)
    }

    /// Solves the F_p-linear system f(x) = rhs where x ranges over field^k.
    /// Returns a particular solution and an F_p-basis of the kernel, or None
    /// when rhs is not in the image.
    pub fn solve_linear(
        &self,
        k: usize,
        f: &dyn Fn(&[Fe]) -> Vec<Fe>,
        rhs: &[Fe],
    ) -> Option<(Vec<Fe>, Vec<Vec<Fe>>)> {
        let n = self.n as usize;
        let dim = k * n;
        let p = self.p;
        let unit = |idx: usize| {
            let mut v = vec![0; k];
            v[idx / n] = p.pow((idx % n) as u32);
            v
        };
        // columns of the matrix
        let cols: Vec<Vec<u64>> = (0..dim)
            .map(|i| f(&unit(i)).iter().flat_map(|&c| self.digits(c)).collect())
            .collect();
        let rows = cols[0].len();
        let b: Vec<u64> = rhs.iter().flat_map(|&c| self.digits(c)).collect();
        // augmented row-major matrix
        let mut m: Vec<Vec<u64>> =
            (0..rows).map(|r| (0..dim).map(|c| cols[c][r]).chain([b[r]]).collect()).collect();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..dim {
            let Some(piv) = (row..rows).find(|&r| m[r][col] != 0) else { continue };
            m.swap(row, piv);
            let inv = mod_inv(m[row][col], p);
            for x in m[row].iter_mut() {
                *x = *x * inv % p;
            }
            for r in 0..rows {
                if r != row && m[r][col] != 0 {
                    let fac = m[r][col];
                    let pivot_row = m[row].clone();
                    for (x, &y) in m[r].iter_mut().zip(&pivot_row) {
                        *x = (*x + p * p - fac * y % p) % p;
                    }
                }
            }
            pivots.push(col);
            row += 1;
            if row == rows {
                break;
            }
        }
        if m[row..].iter().any(|r| r[dim] != 0) {
            return None;
        }
        let to_vec = |x: &[u64]| -> Vec<Fe> { x.chunks(n).map(|c| self.pack_digits(c)).collect() };
        let mut part = vec![0u64; dim];
        for (i, &c) in pivots.iter().enumerate() {
            part[c] = m[i][dim];
        }
        let free: Vec<usize> = (0..dim).filter(|c| !pivots.contains(c)).collect();
        let kernel = free
            .iter()
            .map(|&fc| {
                let mut v = vec![0u64; dim];
                v[fc] = 1;
                for (i, &c) in pivots.iter().enumerate() {
                    v[c] = (p - m[i][fc]) % p;
                }
                to_vec(&v)
            })
            .collect();
        Some((to_vec(&part), kernel))
    }
}

fn is_prime(p: u64) -> bool {
    p >= 2 && (2..).take_while(|d| d * d <= p).all(|d| !p.is_multiple_of(d))
}

fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        let mut e = 0;
        while n.is_multiple_of(d) {
            n /= d;
            e += 1;
        }
        if e > 0 {
            out.push((d, e));
        }
        d += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

fn mod_inv(a: u64, m: u64) -> u64 {
    let (mut r0, mut r1) = (m as i128, (a % m) as i128);
    let (mut s0, mut s1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0 / r1;
        (r0, r1) = (r1, r0 - q * r1);
        (s0, s1) = (s1, s0 - q * s1);
    }
    s0.rem_euclid(m as i128) as u64
}

fn crt(res: &[(u64, u64)]) -> u64 {
    let (mut x, mut m) = (0u128, 1u128);
    for &(r, mi) in res {
        let mi = mi as u128;
        let t = ((r as u128 + mi - x % mi) % mi) * mod_inv((m % mi) as u64, mi as u64) as u128 % mi;
        x += m * t;
        m *= mi;
    }
    x as u64
}

// Polynomials over F_p as coefficient vectors, lowest degree first.

fn trim(mut a: Vec<u64>) -> Vec<u64> {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

fn poly_rem(a: &[u64], f: &[u64], p: u64) -> Vec<u64> {
    let mut a = trim(a.to_vec());
    let df = f.len() - 1;
    let lead_inv = mod_inv(f[df], p);
    while a.len() > df {
        let c = a[a.len() - 1] * lead_inv % p;
        let shift = a.len() - 1 - df;
        for (j, &fj) in f.iter().enumerate() {
            a[shift + j] = (a[shift + j] + p - c * fj % p) % p;
        }
        a = trim(a);
    }
    a
}

fn poly_mulmod(a: &[u64], b: &[u64], f: &[u64], p: u64) -> Vec<u64> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut prod = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    poly_rem(&prod, f, p)
}

fn poly_gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
    let (mut a, mut b) = (trim(a.to_vec()), trim(b.to_vec()));
    while !b.is_empty() {
        let r = poly_rem(&a, &b, p);
        a = b;
        b = r;
    }
    a
}

/// x^(p^k) mod f.
fn x_pow_pk(f: &[u64], p: u64, k: u32) -> Vec<u64> {
    let mut x = poly_rem(&[0, 1], f, p);
    for _ in 0..k {
        let base = x.clone();
        let mut acc = vec![1u64];
        let mut e = p;
        let mut b = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = poly_mulmod(&acc, &b, f, p);
            }
            b = poly_mulmod(&b, &b, f, p);
            e >>= 1;
        }
        x = acc;
    }
    x
}

fn is_irreducible(f: &[u64], p: u64, n: u32) -> bool {
    let sub_x = |mut v: Vec<u64>| {
        v.resize(v.len().max(2), 0);
        v[1] = (v[1] + p - 1) % p;
        trim(v)
    };
    if !sub_x(x_pow_pk(f, p, n)).is_empty() {
        return false;
    }
    factorize(n as u64).iter().all(|&(l, _)| {
        let g = poly_gcd(f, &sub_x(x_pow_pk(f, p, n / l as u32)), p);
        g.len() == 1
    })
}

/// Low coefficients of the first monic irreducible of degree n, in
/// lexicographic order of the code of those coefficients.
fn first_irreducible(p: u64, n: u32) -> Vec<u64> {
    let count = p.pow(n);
    for code in 1..count {
        let mut low = Vec::with_capacity(n as usize);
        let mut c = code;
        for _ in 0..n {
            low.push(c % p);
            c /= p;
        }
        if low[0] == 0 {
            continue;
        }
        let mut f = low.clone();
        f.push(1);
        if is_irreducible(&f, p, n) {
            return low;
        }
    }
    unreachable!("irreducible polynomials exist in every degree")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f4_arithmetic() {
        let f = Field::new(2, 2).unwrap();
        // X^2 + X + 1
        assert_eq!(f.mul(2, 2), 3);
        assert_eq!(f.mul(2, 3), 1);
        assert_eq!(f.inv(3).unwrap(), 2);
    }

    #[test]
    fn frobenius_is_automorphism() {
        let f = Field::new(3, 4).unwrap();
        for a in [5u64, 17, 40, 77] {
            for b in [2u64, 9, 63] {
                assert_eq!(f.frob(f.mul(a, b), 1), f.mul(f.frob(a, 1), f.frob(b, 1)));
                assert_eq!(f.frob(f.add(a, b), 1), f.add(f.frob(a, 1), f.frob(b, 1)));
            }
            assert_eq!(f.frob(f.frob(a, 1), -1), a);
        }
    }

    #[test]
    fn generator_and_log() {
        let f = Field::new(2, 12).unwrap();
        for a in [1u64, 2, 77, 4000, 4095] {
            let l = f.dlog(a).unwrap();
            assert_eq!(f.pow(f.generator(), l as u128), a);
        }
    }

    #[test]
    fn subfield_sizes() {
        let f = Field::new(2, 6).unwrap();
        assert_eq!(f.subfield(2).unwrap().len(), 4);
        assert_eq!(f.subfield(3).unwrap().len(), 8);
        assert!(f.subfield(4).is_err());
        for x in f.subfield(3).unwrap() {
            assert!(f.elem_degree(x) == 1 || f.elem_degree(x) == 3);
        }
    }

    #[test]
    fn roots_of_unity() {
        let f = Field::new(3, 2).unwrap();
        let r = f.nth_roots(1, 2).unwrap();
        assert_eq!(r, vec![1, 2]);
        let sq = f.nth_roots(2, 2).unwrap();
        assert_eq!(sq.len(), 2);
        for x in sq {
            assert_eq!(f.mul(x, x), 2);
        }
    }

    #[test]
    fn artin_schreier_residue_by_linear_algebra() {
        let f = Field::new(2, 4).unwrap();
        let map = |x: &[Fe]| vec![f.sub(x[0], f.mul(x[0], x[0]))];
        let (x, ker) = f.solve_linear(1, &map, &[1]).unwrap();
        assert_eq!(f.sub(x[0], f.mul(x[0], x[0])), 1);
        assert_eq!(ker.len(), 1);
    }
}
