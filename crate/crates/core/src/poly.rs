//! Exact integer Laurent polynomials, tuples thereof, and the dense
//! integer polynomials used for characteristic polynomials and block
//! moduli.
//!
//! All coefficients are arbitrary precision. A `LaurentPoly` stores its
//! support sparsely and never keeps a zero coefficient.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

/// Sparse Laurent polynomial over the integers.
#[derive(Clone, PartialEq, Eq, Default, Hash)]
pub struct LaurentPoly {
    coeffs: BTreeMap<i64, BigInt>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn monomial(exp: i64, coeff: impl Into<BigInt>) -> Self {
        let c: BigInt = coeff.into();
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(exp, c);
        }
        Self { coeffs }
    }

    pub fn constant(c: impl Into<BigInt>) -> Self {
        Self::monomial(0, c)
    }

    pub fn from_pairs<I, C>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (i64, C)>,
        C: Into<BigInt>,
    {
        let mut p = Self::zero();
        for (e, c) in pairs {
            p.add_term(e, &c.into());
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, exp: i64) -> BigInt {
        self.coeffs.get(&exp).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn add_term(&mut self, exp: i64, c: &BigInt) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(exp).or_insert_with(BigInt::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&exp);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &BigInt)> + '_ {
        self.coeffs.iter().map(|(e, c)| (*e, c))
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    /// Multiply by z^shift.
    pub fn shifted(&self, shift: i64) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|(e, c)| (e + shift, c.clone())).collect(),
        }
    }

    /// Substitute z -> z^{-1}.
    pub fn mirrored(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|(e, c)| (-e, c.clone())).collect(),
        }
    }

    /// max_i |c_i|
    pub fn norm_inf(&self) -> BigInt {
        self.coeffs
            .values()
            .map(|c| c.abs())
            .max()
            .unwrap_or_else(BigInt::zero)
    }

    /// sum_i |c_i|
    pub fn norm_one(&self) -> BigInt {
        self.coeffs.values().map(|c| c.abs()).sum()
    }

    /// Restrict the support to exponents in [lo, hi] (inclusive).
    pub fn slice(&self, lo: i64, hi: i64) -> Self {
        Self {
            coeffs: self
                .coeffs
                .range(lo..=hi)
                .map(|(e, c)| (*e, c.clone()))
                .collect(),
        }
    }

    fn slice_below(&self, hi_exclusive: i64) -> Self {
        Self {
            coeffs: self
                .coeffs
                .range(..hi_exclusive)
                .map(|(e, c)| (*e, c.clone()))
                .collect(),
        }
    }

    fn slice_above(&self, lo_exclusive: i64) -> Self {
        Self {
            coeffs: self
                .coeffs
                .range(lo_exclusive + 1..)
                .map(|(e, c)| (*e, c.clone()))
                .collect(),
        }
    }

    /// Exact Laurent division: returns q with q * d == self, if it exists.
    /// Requires d nonzero.
    pub fn div_exact(&self, d: &LaurentPoly) -> Option<LaurentPoly> {
        assert!(!d.is_zero(), "division by zero Laurent polynomial");
        if self.is_zero() {
            return Some(LaurentPoly::zero());
        }
        let (ns, num) = self.to_int_poly_shifted();
        let (ds, den) = d.to_int_poly_shifted();
        let q = num.div_exact(&den)?;
        Some(q.to_laurent().shifted(ns - ds))
    }

    /// Decompose as z^s * P with P an integer polynomial with nonzero
    /// constant term. Zero maps to (0, zero poly).
    pub fn to_int_poly_shifted(&self) -> (i64, IntPoly) {
        match self.min_exp() {
            None => (0, IntPoly::zero()),
            Some(m) => {
                let deg = (self.max_exp().unwrap() - m) as usize;
                let mut coeffs = vec![BigInt::zero(); deg + 1];
                for (e, c) in self.iter() {
                    coeffs[(e - m) as usize] = c.clone();
                }
                (m, IntPoly::new(coeffs))
            }
        }
    }
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.iter() {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match e {
                0 => write!(f, "{}", c)?,
                1 => write!(f, "{}*z", c)?,
                _ => write!(f, "{}*z^{}", c, e)?,
            }
        }
        Ok(())
    }
}

impl Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        for (e, c) in rhs.iter() {
            out.add_term(e, c);
        }
        out
    }
}

impl Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        for (e, c) in rhs.iter() {
            out.add_term(e, &(-c));
        }
        out
    }
}

impl Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = LaurentPoly::zero();
        for (e1, c1) in self.iter() {
            for (e2, c2) in rhs.iter() {
                out.add_term(e1 + e2, &(c1 * c2));
            }
        }
        out
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        LaurentPoly {
            coeffs: self.coeffs.iter().map(|(e, c)| (*e, -c)).collect(),
        }
    }
}

/// Tail/Center/Head split of a Laurent polynomial at a height.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionAtHeight {
    pub tail: LaurentPoly,
    pub center: LaurentPoly,
    pub head: LaurentPoly,
    pub height: i64,
}

/// Split f at height h. For h >= 0 the tail is the part supported on
/// exponents < 0, the center on [0, h] and the head on exponents > h.
/// For h <= 0 the ranges mirror: tail < h, center [h, 0], head > 0.
pub fn partition_at_height(f: &LaurentPoly, h: i64) -> PartitionAtHeight {
    let (tail, center, head) = if h >= 0 {
        (f.slice_below(0), f.slice(0, h), f.slice_above(h))
    } else {
        (f.slice_below(h), f.slice(h, 0), f.slice_above(0))
    };
    PartitionAtHeight {
        tail,
        center,
        head,
        height: h,
    }
}

/// Tail overhang length T_h(f).
pub fn tail_len(f: &LaurentPoly, h: i64) -> i64 {
    if h >= 0 {
        match f.min_exp() {
            Some(m) if m < 0 => -m,
            _ => 0,
        }
    } else {
        match f.min_exp() {
            Some(m) if m < h => -m - (-h),
            _ => 0,
        }
    }
}

/// Head overhang length H_h(f).
pub fn head_len(f: &LaurentPoly, h: i64) -> i64 {
    if h >= 0 {
        match f.max_exp() {
            Some(m) if m > h => m - h,
            _ => 0,
        }
    } else {
        match f.max_exp() {
            Some(m) if m > 0 => m,
            _ => 0,
        }
    }
}

/// div(f1, f2): the maximum over all n (including n below the joint
/// support, where the partial sum is 0) of sum_{i <= n} (|c1_i| - |c2_i|).
/// Always nonnegative under this convention.
pub fn divergence(f1: &LaurentPoly, f2: &LaurentPoly) -> BigInt {
    let mut exps: Vec<i64> = f1.coeffs.keys().chain(f2.coeffs.keys()).copied().collect();
    exps.sort_unstable();
    exps.dedup();
    let mut run = BigInt::zero();
    let mut best = BigInt::zero();
    for e in exps {
        run += f1.coeff(e).abs() - f2.coeff(e).abs();
        if run > best {
            best = run.clone();
        }
    }
    best
}

/// Ordered tuple of Laurent polynomials, one per irreducible block.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct LaurentTuple {
    pub components: Vec<LaurentPoly>,
}

impl LaurentTuple {
    pub fn zeros(k: usize) -> Self {
        Self {
            components: vec![LaurentPoly::zero(); k],
        }
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(|c| c.is_zero())
    }

    pub fn add(&self, rhs: &LaurentTuple) -> LaurentTuple {
        assert_eq!(self.k(), rhs.k());
        LaurentTuple {
            components: self
                .components
                .iter()
                .zip(&rhs.components)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, rhs: &LaurentTuple) -> LaurentTuple {
        assert_eq!(self.k(), rhs.k());
        LaurentTuple {
            components: self
                .components
                .iter()
                .zip(&rhs.components)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn norm_inf(&self) -> BigInt {
        self.components
            .iter()
            .map(|c| c.norm_inf())
            .max()
            .unwrap_or_else(BigInt::zero)
    }

    pub fn norm_one(&self) -> BigInt {
        self.components.iter().map(|c| c.norm_one()).sum()
    }

    pub fn tail_len(&self, h: i64) -> i64 {
        self.components.iter().map(|c| tail_len(c, h)).max().unwrap_or(0)
    }

    pub fn head_len(&self, h: i64) -> i64 {
        self.components.iter().map(|c| head_len(c, h)).max().unwrap_or(0)
    }
}

/// Div(t, s) = sum_j |div(t_j, s_j)|.
pub fn tuple_divergence(t: &LaurentTuple, s: &LaurentTuple) -> BigInt {
    assert_eq!(t.k(), s.k(), "tuple divergence needs equal k");
    t.components
        .iter()
        .zip(&s.components)
        .map(|(a, b)| divergence(a, b).abs())
        .sum()
}

/// Componentwise exact division of tuples: Some(q) with q_i * p_i = d_i
/// for every i, None when some component does not divide.
pub fn tuple_divides(p: &LaurentTuple, d: &LaurentTuple) -> Option<LaurentTuple> {
    assert_eq!(p.k(), d.k(), "tuple division needs equal k");
    let mut components = Vec::with_capacity(p.k());
    for (pi, di) in p.components.iter().zip(&d.components) {
        components.push(di.div_exact(pi)?);
    }
    Some(LaurentTuple { components })
}

/// One step of the acceptor's right-to-left long division: r' = z*r +
/// incoming, reduced modulo the monic block polynomial p once its degree
/// reaches deg(p). The result has degree <= deg(p) - 1.
pub fn division_step(r: &LaurentPoly, incoming: &BigInt, p: &IntPoly) -> LaurentPoly {
    let d = p.degree().expect("block polynomial must be nonzero") as i64;
    assert!(p.is_monic(), "block polynomial must be monic");
    let mut next = r.shifted(1);
    next.add_term(0, incoming);
    let lead = next.coeff(d);
    if !lead.is_zero() {
        // z^d = -(lower terms of p)
        for (e, c) in p.to_laurent().iter() {
            next.add_term(e, &(-(&lead * c)));
        }
    }
    debug_assert!(next.max_exp().map_or(true, |m| m < d));
    next
}

/// Dense integer polynomial, lowest degree first, no trailing zeros.
#[derive(Clone, PartialEq, Eq, Default, Hash)]
pub struct IntPoly {
    coeffs: Vec<BigInt>,
}

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::new(vec![BigInt::one()])
    }

    pub fn monomial(deg: usize, c: impl Into<BigInt>) -> Self {
        let c: BigInt = c.into();
        if c.is_zero() {
            return Self::zero();
        }
        let mut coeffs = vec![BigInt::zero(); deg + 1];
        coeffs[deg] = c;
        Self { coeffs }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn degree(&self) -> Option<usize> {
        if self.coeffs.is_empty() {
            None
        } else {
            Some(self.coeffs.len() - 1)
        }
    }

    pub fn coeff(&self, i: usize) -> BigInt {
        self.coeffs.get(i).cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn leading(&self) -> BigInt {
        self.coeffs.last().cloned().unwrap_or_else(BigInt::zero)
    }

    pub fn is_monic(&self) -> bool {
        self.leading().is_one()
    }

    pub fn norm_inf(&self) -> BigInt {
        self.coeffs.iter().map(|c| c.abs()).max().unwrap_or_else(BigInt::zero)
    }

    pub fn norm_one(&self) -> BigInt {
        self.coeffs.iter().map(|c| c.abs()).sum()
    }

    /// Condition (*): one coefficient exceeds the sum of all others,
    /// i.e. 2|p|_inf > |p|_1.
    pub fn dominant_coefficient(&self) -> bool {
        BigInt::from(2) * self.norm_inf() > self.norm_one()
    }

    pub fn add(&self, rhs: &IntPoly) -> IntPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        IntPoly::new((0..n).map(|i| self.coeff(i) + rhs.coeff(i)).collect())
    }

    pub fn sub(&self, rhs: &IntPoly) -> IntPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        IntPoly::new((0..n).map(|i| self.coeff(i) - rhs.coeff(i)).collect())
    }

    pub fn neg(&self) -> IntPoly {
        IntPoly {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    pub fn mul(&self, rhs: &IntPoly) -> IntPoly {
        if self.is_zero() || rhs.is_zero() {
            return IntPoly::zero();
        }
        let mut out = vec![BigInt::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        IntPoly::new(out)
    }

    pub fn scale(&self, c: &BigInt) -> IntPoly {
        IntPoly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn eval(&self, x: &BigInt) -> BigInt {
        let mut acc = BigInt::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * x + c;
        }
        acc
    }

    pub fn derivative(&self) -> IntPoly {
        if self.coeffs.len() <= 1 {
            return IntPoly::zero();
        }
        IntPoly::new(
            self.coeffs[1..]
                .iter()
                .enumerate()
                .map(|(i, c)| c * BigInt::from(i as u64 + 1))
                .collect(),
        )
    }

    /// Exact division over the integers. None when the quotient does not
    /// exist in Z[z].
    pub fn div_exact(&self, d: &IntPoly) -> Option<IntPoly> {
        assert!(!d.is_zero(), "division by zero polynomial");
        if self.is_zero() {
            return Some(IntPoly::zero());
        }
        let dd = d.degree().unwrap();
        let nd = self.degree().unwrap();
        if nd < dd {
            return None;
        }
        let lead = d.leading();
        let mut rem = self.coeffs.clone();
        let mut quot = vec![BigInt::zero(); nd - dd + 1];
        for i in (dd..=nd).rev() {
            let c = rem[i].clone();
            if c.is_zero() {
                continue;
            }
            let (q, r) = num_integer::Integer::div_rem(&c, &lead);
            if !r.is_zero() {
                return None;
            }
            quot[i - dd] = q.clone();
            for (j, dc) in d.coeffs.iter().enumerate() {
                rem[i - dd + j] -= &q * dc;
            }
        }
        if rem.iter().any(|c| !c.is_zero()) {
            return None;
        }
        Some(IntPoly::new(quot))
    }

    /// Pseudo remainder: lead(d)^(deg(n)-deg(d)+1) * n mod d.
    fn pseudo_rem(&self, d: &IntPoly) -> IntPoly {
        let dd = d.degree().unwrap();
        let lead = d.leading();
        let mut rem = self.clone();
        while let Some(nd) = rem.degree() {
            if nd < dd {
                break;
            }
            let c = rem.leading();
            rem = rem.scale(&lead);
            let shift = IntPoly::monomial(nd - dd, c);
            rem = rem.sub(&d.mul(&shift));
            debug_assert!(rem.degree().map_or(true, |m| m < nd));
        }
        rem
    }

    pub fn content(&self) -> BigInt {
        let mut g = BigInt::zero();
        for c in &self.coeffs {
            g = num_integer::Integer::gcd(&g, c);
        }
        g
    }

    pub fn primitive_part(&self) -> IntPoly {
        let c = self.content();
        if c.is_zero() || c.is_one() {
            return self.clone();
        }
        IntPoly::new(
            self.coeffs
                .iter()
                .map(|a| num_integer::Integer::div_floor(a, &c))
                .collect(),
        )
    }

    /// Primitive gcd over Z (primitive PRS), normalized with positive
    /// leading coefficient.
    pub fn gcd(&self, other: &IntPoly) -> IntPoly {
        let mut a = self.primitive_part();
        let mut b = other.primitive_part();
        if a.is_zero() {
            return b.normalize_sign();
        }
        while !b.is_zero() {
            let r = a.pseudo_rem(&b).primitive_part();
            a = b;
            b = r;
        }
        a.normalize_sign()
    }

    fn normalize_sign(&self) -> IntPoly {
        if self.leading().is_negative() {
            self.neg()
        } else {
            self.clone()
        }
    }

    pub fn is_squarefree(&self) -> bool {
        let g = self.gcd(&self.derivative());
        g.degree() == Some(0)
    }

    pub fn to_laurent(&self) -> LaurentPoly {
        LaurentPoly::from_pairs(
            self.coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| (i as i64, c.clone())),
        )
    }
}

impl fmt::Debug for IntPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match i {
                0 => write!(f, "{}", c)?,
                1 => write!(f, "{}*z", c)?,
                _ => write!(f, "{}*z^{}", c, i)?,
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(pairs: &[(i64, i64)]) -> LaurentPoly {
        LaurentPoly::from_pairs(pairs.iter().copied())
    }

    #[test]
    fn arithmetic_examples() {
        // (z + 1) + (z^-1 - 1) = z + z^-1
        let a = lp(&[(1, 1), (0, 1)]);
        let b = lp(&[(-1, 1), (0, -1)]);
        assert_eq!(&a + &b, lp(&[(1, 1), (-1, 1)]));
        // (z - 1)(z + 1) = z^2 - 1
        let c = lp(&[(1, 1), (0, -1)]);
        let d = lp(&[(1, 1), (0, 1)]);
        assert_eq!(&c * &d, lp(&[(2, 1), (0, -1)]));
        // p - p = 0
        assert_eq!(&a - &a, LaurentPoly::zero());
    }

    #[test]
    fn norms() {
        let p = lp(&[(2, 1), (1, -3), (0, 1)]); // z^2 - 3z + 1
        assert_eq!(p.norm_inf(), BigInt::from(3));
        assert_eq!(p.norm_one(), BigInt::from(5));
        assert_eq!(LaurentPoly::zero().norm_inf(), BigInt::zero());
        assert_eq!(LaurentPoly::zero().norm_one(), BigInt::zero());
        let q = lp(&[(-1, 2), (3, 2)]);
        assert_eq!(q.norm_inf(), BigInt::from(2));
        assert_eq!(q.norm_one(), BigInt::from(4));
    }

    #[test]
    fn partition_positive_height() {
        let f = lp(&[(-2, 1), (0, 3), (3, 2)]);
        let p = partition_at_height(&f, 2);
        assert_eq!(p.tail, lp(&[(-2, 1)]));
        assert_eq!(p.center, lp(&[(0, 3)]));
        assert_eq!(p.head, lp(&[(3, 2)]));
    }

    #[test]
    fn partition_zero_poly() {
        for h in [-3, 0, 5] {
            let p = partition_at_height(&LaurentPoly::zero(), h);
            assert!(p.tail.is_zero() && p.center.is_zero() && p.head.is_zero());
        }
    }

    #[test]
    fn partition_negative_height_mirrors() {
        // Mirror oracle: apply the h = -h split to f(z^-1), mirror back.
        let f = lp(&[(-2, 1), (0, 3), (3, 2)]);
        let h = -1;
        let g = f.mirrored();
        let pg = partition_at_height(&g, -h);
        let expect_tail = pg.head.mirrored();
        let expect_center = pg.center.mirrored();
        let expect_head = pg.tail.mirrored();
        let p = partition_at_height(&f, h);
        assert_eq!(p.tail, expect_tail);
        assert_eq!(p.center, expect_center);
        assert_eq!(p.head, expect_head);
    }

    #[test]
    fn partition_reassembles() {
        let polys = [
            lp(&[(-4, 2), (-1, -1), (0, 5), (2, 1), (7, -3)]),
            lp(&[(0, 1)]),
            lp(&[(-3, 1), (3, 1)]),
        ];
        for f in &polys {
            for h in -5..=5 {
                let p = partition_at_height(f, h);
                assert_eq!(&(&p.tail + &p.center) + &p.head, *f);
            }
        }
    }

    #[test]
    fn overhang_lengths() {
        let f = lp(&[(-2, 1), (0, 3), (3, 2)]);
        assert_eq!(tail_len(&f, 2), 2);
        assert_eq!(head_len(&f, 2), 1);
        let one = lp(&[(0, 1)]);
        assert_eq!(tail_len(&one, 0), 0);
        assert_eq!(head_len(&one, 0), 0);
        // h <= 0 branch, by hand
        let g = lp(&[(-3, 1), (-1, 1)]);
        assert_eq!(tail_len(&g, -2), 1);
        assert_eq!(head_len(&g, -2), 0);
    }

    #[test]
    fn divergence_examples() {
        let f1 = lp(&[(-1, 2), (1, 1)]);
        let f2 = lp(&[(1, 1)]);
        assert_eq!(divergence(&f1, &f2), BigInt::from(2));
        assert_eq!(divergence(&f1, &f1), BigInt::zero());
        // max over the empty prefix clamps at 0
        let f3 = lp(&[(1, 1)]);
        let f4 = lp(&[(1, 3)]);
        assert_eq!(divergence(&f3, &f4), BigInt::zero());
        assert_eq!(divergence(&f4, &f3), BigInt::from(2));
    }

    #[test]
    fn tuple_divergence_properties() {
        let t = LaurentTuple {
            components: vec![lp(&[(0, 2), (1, -1)]), lp(&[(-2, 3)])],
        };
        let s = LaurentTuple {
            components: vec![lp(&[(0, 1)]), lp(&[(0, 5)])],
        };
        assert!(tuple_divergence(&t, &s) >= BigInt::zero());
        assert_eq!(tuple_divergence(&t, &t), BigInt::zero());
    }

    #[test]
    fn tuple_division() {
        let p = LaurentTuple {
            components: vec![lp(&[(2, 1), (1, -3), (0, 1)])],
        };
        let same = tuple_divides(&p, &p).unwrap();
        assert_eq!(same.components[0], lp(&[(0, 1)]));
        let shifted = LaurentTuple {
            components: vec![lp(&[(3, 1), (2, -3), (1, 1)])],
        };
        let q = tuple_divides(&p, &shifted).unwrap();
        assert_eq!(q.components[0], lp(&[(1, 1)]));
        let off = LaurentTuple {
            components: vec![lp(&[(2, 1), (1, -3), (0, 2)])],
        };
        assert!(tuple_divides(&p, &off).is_none());
    }

    #[test]
    fn division_step_examples() {
        let p = IntPoly::from_i64(&[1, -3, 1]); // z^2 - 3z + 1
        let r0 = LaurentPoly::zero();
        let r1 = division_step(&r0, &BigInt::from(5), &p);
        assert_eq!(r1, lp(&[(0, 5)]));
        // z * z = z^2 reduces to 3z - 1
        let r = lp(&[(1, 1)]);
        let r2 = division_step(&r, &BigInt::zero(), &p);
        assert_eq!(r2, lp(&[(1, 3), (0, -1)]));
        let r = lp(&[(0, 1)]);
        let r3 = division_step(&r, &BigInt::from(-1), &p);
        assert_eq!(r3, lp(&[(1, 1), (0, -1)]));
    }

    #[test]
    fn division_step_consumes_multiples_to_zero() {
        // Feeding the coefficients of g*p (highest first) from r = 0 ends at 0.
        let p = IntPoly::from_i64(&[1, -3, 1]);
        let g = IntPoly::from_i64(&[2, 0, -1, 4, 7]);
        let prod = g.mul(&p);
        let mut r = LaurentPoly::zero();
        for i in (0..=prod.degree().unwrap()).rev() {
            r = division_step(&r, &prod.coeff(i), &p);
        }
        assert!(r.is_zero());
    }

    #[test]
    fn int_poly_div_exact() {
        let p = IntPoly::from_i64(&[1, -3, 1]);
        let q = IntPoly::from_i64(&[-2, 5, 1]);
        let prod = p.mul(&q);
        assert_eq!(prod.div_exact(&p).unwrap(), q);
        assert_eq!(prod.div_exact(&q).unwrap(), p);
        let off = prod.add(&IntPoly::one());
        assert!(off.div_exact(&p).is_none());
    }

    #[test]
    fn int_poly_gcd_and_squarefree() {
        let p = IntPoly::from_i64(&[1, -3, 1]);
        let q = IntPoly::from_i64(&[1, -4, 1]);
        let prod = p.mul(&q);
        assert!(prod.is_squarefree());
        assert_eq!(p.gcd(&q).degree(), Some(0));
        let sq = p.mul(&p);
        assert!(!sq.is_squarefree());
        assert_eq!(sq.gcd(&sq.derivative()), p);
    }

    #[test]
    fn dominant_coefficient_condition() {
        assert!(IntPoly::from_i64(&[1, -3, 1]).dominant_coefficient());
        assert!(!IntPoly::from_i64(&[1, -1, -1, -1, 1]).dominant_coefficient());
    }
}
