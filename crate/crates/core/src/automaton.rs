//! Weighted finite automata: lazy exploration into an explicit weighted
//! graph, path-count preserving minimization, exact rational series
//! extraction, and a small explicit-NFA toolkit for the classical
//! regular operations.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::hash::Hash;
use std::rc::Rc;

use num_bigint::BigInt;
use num_integer::Integer as _;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::poly::IntPoly;

#[derive(Debug, Error)]
pub enum AutomatonError {
    #[error("reachable state count exceeded the cap of {cap}")]
    ResourceLimit { cap: usize },
}

/// Sparse edge weight: (weight, multiplicity) pairs sorted by weight,
/// counting the letters of each weight that drive the transition.
pub type WeightTerms = Vec<(u32, i64)>;

fn add_term(terms: &mut WeightTerms, w: u32, c: i64) {
    match terms.binary_search_by_key(&w, |&(a, _)| a) {
        Ok(i) => terms[i].1 += c,
        Err(i) => terms.insert(i, (w, c)),
    }
}

fn merge_terms(into: &mut WeightTerms, other: &WeightTerms) {
    for &(w, c) in other {
        add_term(into, w, c);
    }
}

/// Fully explored deterministic weighted automaton. Edges carry sparse
/// weight/multiplicity terms kept sorted by weight.
#[derive(Clone, Debug)]
pub struct ExploredDfa {
    pub start: usize,
    pub accept: Vec<bool>,
    pub edges: Vec<BTreeMap<usize, WeightTerms>>,
}

impl ExploredDfa {
    pub fn num_states(&self) -> usize {
        self.accept.len()
    }

    /// Debug dump: `state_id TAB group TAB next_state_id TAB weight_poly`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (s, row) in self.edges.iter().enumerate() {
            for (g, (t, w)) in row.iter().enumerate() {
                out.push_str(&format!("{s}\tg{g}\t{t}\t{w:?}\n"));
            }
        }
        out
    }

    /// Number of accepted words per total weight, 0..=max_weight, by
    /// dynamic programming. Letter weights must be >= 1.
    pub fn count_by_weight(&self, max_weight: usize) -> Vec<BigInt> {
        let n = self.num_states();
        // ways[w][s] = number of paths of weight w from start to s
        let mut ways = vec![vec![BigInt::zero(); n]; max_weight + 1];
        ways[0][self.start] = BigInt::one();
        for w in 0..=max_weight {
            for s in 0..n {
                if ways[w][s].is_zero() {
                    continue;
                }
                let src = ways[w][s].clone();
                for (t, terms) in &self.edges[s] {
                    for &(deg, c) in terms {
                        let deg = deg as usize;
                        if w + deg > max_weight {
                            continue;
                        }
                        assert!(deg >= 1, "letters must have positive weight");
                        let add = &src * c;
                        ways[w + deg][*t] += add;
                    }
                }
            }
        }
        (0..=max_weight)
            .map(|w| {
                (0..n)
                    .filter(|&s| self.accept[s])
                    .map(|s| ways[w][s].clone())
                    .sum()
            })
            .collect()
    }

    /// Drop states that cannot reach an accepting state (keeps the
    /// automaton's series; shrinks elimination work).
    pub fn trim(&self) -> ExploredDfa {
        let n = self.num_states();
        let mut rev: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (s, row) in self.edges.iter().enumerate() {
            for t in row.keys() {
                rev[*t].push(s);
            }
        }
        let mut live = vec![false; n];
        let mut queue: VecDeque<usize> = (0..n).filter(|&s| self.accept[s]).collect();
        for &s in &queue {
            live[s] = true;
        }
        while let Some(s) = queue.pop_front() {
            for &p in &rev[s] {
                if !live[p] {
                    live[p] = true;
                    queue.push_back(p);
                }
            }
        }
        if !live[self.start] {
            // empty language: a single dead start state
            return ExploredDfa {
                start: 0,
                accept: vec![false],
                edges: vec![BTreeMap::new()],
            };
        }
        let mut remap = vec![usize::MAX; n];
        let mut count = 0;
        for s in 0..n {
            if live[s] {
                remap[s] = count;
                count += 1;
            }
        }
        let mut edges = vec![BTreeMap::new(); count];
        let mut accept = vec![false; count];
        for s in 0..n {
            if !live[s] {
                continue;
            }
            accept[remap[s]] = self.accept[s];
            for (t, w) in &self.edges[s] {
                if live[*t] {
                    edges[remap[s]].insert(remap[*t], w.clone());
                }
            }
        }
        ExploredDfa {
            start: remap[self.start],
            accept,
            edges,
        }
    }

    /// Merge states with identical forward behavior (acceptance and
    /// class-aggregated weighted rows) by partition refinement. This is
    /// a weighted bisimulation quotient, so the series is preserved.
    pub fn minimize(&self) -> ExploredDfa {
        let n = self.num_states();
        let mut class: Vec<usize> = self.accept.iter().map(|&a| a as usize).collect();
        loop {
            let mut sig_map: HashMap<(usize, Vec<(usize, WeightTerms)>), usize> = HashMap::new();
            let mut next = vec![0usize; n];
            for s in 0..n {
                let mut row: BTreeMap<usize, WeightTerms> = BTreeMap::new();
                for (t, w) in &self.edges[s] {
                    merge_terms(row.entry(class[*t]).or_default(), w);
                }
                let sig = (class[s], row.into_iter().collect::<Vec<_>>());
                let id = sig_map.len();
                next[s] = *sig_map.entry(sig).or_insert(id);
            }
            if next == class {
                break;
            }
            class = next;
        }
        let count = class.iter().max().map_or(0, |m| m + 1);
        let mut edges = vec![BTreeMap::new(); count];
        let mut accept = vec![false; count];
        let mut seen = vec![false; count];
        for s in 0..n {
            let c = class[s];
            if seen[c] {
                continue;
            }
            seen[c] = true;
            accept[c] = self.accept[s];
            for (t, w) in &self.edges[s] {
                merge_terms(edges[c].entry(class[*t]).or_default(), w);
            }
        }
        ExploredDfa {
            start: class[self.start],
            accept,
            edges,
        }
    }

    /// Exact rational series of the accepted weighted language.
    ///
    /// The coefficient sequence is realized by a linear system of
    /// dimension at most R = sum over states of the largest incoming
    /// edge weight (expand each weight-w edge into a chain of w unit
    /// steps, sharing chains per target), so it satisfies some linear
    /// recurrence of order <= R. The minimal recurrence is found by
    /// Berlekamp-Massey modulo several word-size primes, lifted to Q by
    /// CRT plus rational reconstruction, and then verified against the
    /// exact integer coefficients through degree R + d + m, where
    /// deg den = d and deg num < m. Agreement to that order forces
    /// equality of the rational functions: den*f - num equals u/Q for
    /// some true denominator Q of f with deg u <= R + d + m, and a
    /// power series of that form vanishing past deg u is zero.
    pub fn series(&self) -> RationalSeries {
        let a = self.trim().minimize();
        let n = a.num_states();
        if n == 0 {
            return RationalSeries::zero();
        }
        // Flattened edge terms (from, to, weight, multiplicity).
        let mut flat: Vec<(u32, u32, u32, i64)> = Vec::new();
        let mut max_in = vec![1usize; n];
        let mut max_w = 1usize;
        for (s, row) in a.edges.iter().enumerate() {
            for (t, terms) in row {
                for &(deg, c) in terms {
                    assert!(deg >= 1, "letter weights must be >= 1");
                    flat.push((s as u32, *t as u32, deg, c));
                    max_in[*t] = max_in[*t].max(deg as usize);
                    max_w = max_w.max(deg as usize);
                }
            }
        }
        let rank_bound: usize = max_in.iter().sum();
        let total = 2 * rank_bound + 64;
        let mut prime = 1u64 << 62;
        let mut used: Vec<(u64, Vec<u64>)> = Vec::new();
        let mut dp = SeriesDp::new(&a, &flat, max_w);
        let mut coeffs: Vec<BigInt> = Vec::new();
        loop {
            prime = next_prime_below(prime);
            let seq = modular_coefficients(&a, &flat, max_w, prime, total);
            let den_p = modular_min_recurrence(&seq, prime);
            // Unlucky primes can only lower the degree; keep the
            // candidates of the highest degree seen so far.
            let best = used.first().map_or(0, |(_, d)| d.len());
            if den_p.len() > best {
                used.clear();
            }
            if den_p.len() >= best {
                used.push((prime, den_p));
            }
            let Some(den) = reconstruct_int_poly(&used) else {
                continue;
            };
            if let Some(series) = verified_series(&mut dp, &mut coeffs, den, rank_bound) {
                return series;
            }
        }
    }
}

/// Streaming exact coefficients of the weighted path series: a ring
/// buffer of per-state path counts indexed by arrival offset.
struct SeriesDp<'a> {
    dfa: &'a ExploredDfa,
    flat: &'a [(u32, u32, u32, i64)],
    pending: VecDeque<Vec<BigInt>>,
}

impl<'a> SeriesDp<'a> {
    fn new(dfa: &'a ExploredDfa, flat: &'a [(u32, u32, u32, i64)], max_w: usize) -> Self {
        let n = dfa.num_states();
        let mut pending = VecDeque::with_capacity(max_w);
        for _ in 0..max_w {
            pending.push_back(vec![BigInt::zero(); n]);
        }
        pending[0][dfa.start] = BigInt::one();
        Self { dfa, flat, pending }
    }

    fn next_coeff(&mut self) -> BigInt {
        let cur = self.pending.pop_front().expect("ring buffer is nonempty");
        let n = self.dfa.num_states();
        self.pending.push_back(vec![BigInt::zero(); n]);
        let mut out = BigInt::zero();
        for (s, c) in cur.iter().enumerate() {
            if self.dfa.accept[s] && !c.is_zero() {
                out += c;
            }
        }
        for &(s, t, deg, coef) in self.flat {
            let c = &cur[s as usize];
            if c.is_zero() {
                continue;
            }
            let slot = &mut self.pending[(deg - 1) as usize][t as usize];
            if coef == 1 {
                *slot += c;
            } else {
                *slot += c * coef;
            }
        }
        out
    }
}

/// First `total` series coefficients modulo p.
fn modular_coefficients(
    a: &ExploredDfa,
    flat: &[(u32, u32, u32, i64)],
    max_w: usize,
    p: u64,
    total: usize,
) -> Vec<u64> {
    let mulmod = |x: u64, y: u64| ((x as u128 * y as u128) % p as u128) as u64;
    let n = a.num_states();
    let mut pend = vec![vec![0u64; n]; max_w];
    pend[0][a.start] = 1;
    let mut seq = Vec::with_capacity(total);
    for k in 0..total {
        let cur = std::mem::replace(&mut pend[k % max_w], vec![0u64; n]);
        let mut ck = 0u64;
        for (s, &c) in cur.iter().enumerate() {
            if c != 0 && a.accept[s] {
                ck = (ck + c) % p;
            }
        }
        for &(s, t, deg, coef) in flat {
            let c = cur[s as usize];
            if c == 0 {
                continue;
            }
            let cf = if coef < 0 {
                p - ((-coef) as u64 % p)
            } else {
                coef as u64 % p
            };
            let slot = &mut pend[(k + deg as usize) % max_w][t as usize];
            *slot = (*slot + mulmod(cf, c)) % p;
        }
        seq.push(ck);
    }
    seq
}

/// Minimal linear recurrence of a sequence modulo p (Berlekamp-Massey
/// over GF(p)). Returns c with c[0] = 1 and
/// sum_j c[j] s[i-j] = 0 mod p for deg(c) <= i < s.len().
fn modular_min_recurrence(s: &[u64], p: u64) -> Vec<u64> {
    let mulmod = |x: u64, y: u64| ((x as u128 * y as u128) % p as u128) as u64;
    let powmod = |mut a: u64, mut e: u64| {
        let mut r = 1u64;
        a %= p;
        while e > 0 {
            if e & 1 == 1 {
                r = mulmod(r, a);
            }
            a = mulmod(a, a);
            e >>= 1;
        }
        r
    };
    let (mut c, mut b) = (vec![1u64], vec![1u64]);
    let (mut l, mut m, mut b_delta) = (0usize, 1usize, 1u64);
    for i in 0..s.len() {
        let mut delta = s[i];
        for j in 1..c.len().min(i + 1) {
            delta = (delta + mulmod(c[j], s[i - j])) % p;
        }
        if delta == 0 {
            m += 1;
            continue;
        }
        let coef = mulmod(delta, powmod(b_delta, p - 2));
        let update = |c: &mut Vec<u64>, b: &[u64], m: usize| {
            if c.len() < b.len() + m {
                c.resize(b.len() + m, 0);
            }
            for (j, &bj) in b.iter().enumerate() {
                c[j + m] = (c[j + m] + p - mulmod(coef, bj)) % p;
            }
        };
        if 2 * l <= i {
            let t = c.clone();
            update(&mut c, &b, m);
            l = i + 1 - l;
            b = t;
            b_delta = delta;
            m = 1;
        } else {
            update(&mut c, &b, m);
            m += 1;
        }
    }
    while c.len() > 1 && *c.last().unwrap() == 0 {
        c.pop();
    }
    c
}

/// Largest prime strictly below `n` (deterministic Miller-Rabin).
fn next_prime_below(n: u64) -> u64 {
    let mut c = n - 1;
    if c % 2 == 0 {
        c -= 1;
    }
    while !is_prime_u64(c) {
        c -= 2;
    }
    c
}

fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    let mulmod = |x: u64, y: u64| ((x as u128 * y as u128) % n as u128) as u64;
    let powmod = |mut a: u64, mut e: u64| {
        let mut r = 1u64;
        a %= n;
        while e > 0 {
            if e & 1 == 1 {
                r = mulmod(r, a);
            }
            a = mulmod(a, a);
            e >>= 1;
        }
        r
    };
    let d = (n - 1) >> (n - 1).trailing_zeros();
    let s = (n - 1).trailing_zeros();
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Lift a polynomial known modulo several primes to integer
/// coefficients via CRT and rational reconstruction (then clearing
/// denominators). The leading residues all have constant term 1, so
/// the lifted polynomial q satisfies q(0) = lcm of the reconstructed
/// denominators.
fn reconstruct_int_poly(used: &[(u64, Vec<u64>)]) -> Option<IntPoly> {
    if used.is_empty() {
        return None;
    }
    let deg = used[0].1.len() - 1;
    let mut modulus = BigInt::one();
    for (p, _) in used {
        modulus *= BigInt::from(*p);
    }
    let mut coeffs_q: Vec<BigRational> = Vec::with_capacity(deg + 1);
    for j in 0..=deg {
        // Garner-style CRT for coefficient j.
        let mut x = BigInt::zero();
        let mut m = BigInt::one();
        for (p, den_p) in used {
            let p_big = BigInt::from(*p);
            let r = BigInt::from(den_p[j]);
            // x' = x + m * t where t = (r - x)/m mod p
            let m_inv = mod_inverse(&m, &p_big)?;
            let t = ((&r - &x) * m_inv).mod_floor(&p_big);
            x += &m * t;
            m *= p_big;
        }
        coeffs_q.push(rational_reconstruct(&x, &modulus)?);
    }
    let lcm = coeffs_q.iter().fold(BigInt::one(), |acc, c| {
        num_integer::Integer::lcm(&acc, c.denom())
    });
    let coeffs: Vec<BigInt> = coeffs_q
        .iter()
        .map(|c| c.numer() * (&lcm / c.denom()))
        .collect();
    Some(IntPoly::new(coeffs))
}

fn mod_inverse(a: &BigInt, m: &BigInt) -> Option<BigInt> {
    let e = num_integer::Integer::extended_gcd(&a.mod_floor(m), m);
    if e.gcd.is_one() {
        Some(e.x.mod_floor(m))
    } else {
        None
    }
}

/// Wang rational reconstruction: the unique p/q with
/// |p|, |q| <= sqrt(m/2) and p = q*x mod m, if one exists.
fn rational_reconstruct(x: &BigInt, m: &BigInt) -> Option<BigRational> {
    let bound = num_integer::Roots::sqrt(&(m / BigInt::from(2)));
    let (mut r0, mut r1) = (m.clone(), x.mod_floor(m));
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1.abs() > bound {
        let q = &r0 / &r1;
        let r2 = &r0 - &q * &r1;
        let t2 = &t0 - &q * &t1;
        r0 = std::mem::replace(&mut r1, r2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    if t1.is_zero() || t1.abs() > bound {
        return None;
    }
    if t1.is_negative() {
        r1 = -r1;
        t1 = -t1;
    }
    Some(BigRational::new(r1, t1))
}

/// Exact verification of a candidate denominator: extend the exact
/// coefficients until a window of rank_bound + deg(den) + 1 residuals
/// past the numerator head is available, and accept only if every one
/// of them vanishes.
fn verified_series(
    dp: &mut SeriesDp,
    coeffs: &mut Vec<BigInt>,
    den: IntPoly,
    rank_bound: usize,
) -> Option<RationalSeries> {
    let d = den.degree().unwrap_or(0);
    let den_terms: Vec<(usize, &BigInt)> = den
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .collect();
    let residual = |k: usize, coeffs: &[BigInt]| -> BigInt {
        let mut acc = BigInt::zero();
        for &(j, dj) in &den_terms {
            if j > k {
                break;
            }
            acc += dj * &coeffs[k - j];
        }
        acc
    };
    // The numerator head cannot reach past rank_bound + d for a
    // correct candidate (deg num <= realization degree + deg den).
    let m_cap = rank_bound + d + 1;
    let mut m = 0usize;
    loop {
        let needed = rank_bound + d + m + 1;
        while coeffs.len() < needed {
            coeffs.push(dp.next_coeff());
        }
        let mut last_nonzero: Option<usize> = None;
        for k in (m..needed).rev() {
            if !residual(k, coeffs).is_zero() {
                last_nonzero = Some(k);
                break;
            }
        }
        match last_nonzero {
            None => break,
            Some(k) => {
                m = k + 1;
                if m > m_cap {
                    return None;
                }
            }
        }
    }
    let num: Vec<BigInt> = (0..m).map(|k| residual(k, coeffs)).collect();
    let mut num = IntPoly::new(num);
    let mut den = den;
    let g = num_integer::Integer::gcd(&num.content(), &den.content());
    if !g.is_zero() && !g.is_one() {
        let g = IntPoly::new(vec![g]);
        num = num.div_exact(&g).unwrap();
        den = den.div_exact(&g).unwrap();
    }
    if den.coeff(0).is_negative() {
        num = num.neg();
        den = den.neg();
    }
    Some(RationalSeries { num, den })
}

/// Lazily explore a deterministic machine over an explicit alphabet.
pub fn explore<S, L>(
    start: S,
    alphabet: &[L],
    mut step: impl FnMut(&S, &L) -> Option<S>,
    mut accept: impl FnMut(&S) -> bool,
    weight: impl Fn(&L) -> i64,
    cap: usize,
) -> Result<ExploredDfa, AutomatonError>
where
    S: Clone + Eq + Hash,
{
    // States are stored once, shared between the id map and the
    // frontier order.
    let mut ids: HashMap<Rc<S>, usize> = HashMap::new();
    let mut states: Vec<Rc<S>> = Vec::new();
    let mut edges: Vec<BTreeMap<usize, WeightTerms>> = Vec::new();
    let mut acc: Vec<bool> = Vec::new();
    let start = Rc::new(start);
    ids.insert(start.clone(), 0);
    states.push(start);
    let mut frontier = 0usize;
    while frontier < states.len() {
        let s = states[frontier].clone();
        edges.push(BTreeMap::new());
        acc.push(accept(&s));
        for l in alphabet {
            let Some(t) = step(&s, l) else {
                continue;
            };
            let t = Rc::new(t);
            let next_id = ids.len();
            let t_id = *ids.entry(t.clone()).or_insert(next_id);
            if t_id == next_id {
                if states.len() >= cap {
                    return Err(AutomatonError::ResourceLimit { cap });
                }
                states.push(t);
            }
            let w = weight(l);
            add_term(edges[frontier].entry(t_id).or_default(), w as u32, 1);
        }
        frontier += 1;
    }
    Ok(ExploredDfa {
        start: 0,
        accept: acc,
        edges,
    })
}

/// Rational function num/den over Z[z], gcd-reduced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatFn {
    pub num: IntPoly,
    pub den: IntPoly,
}

impl RatFn {
    pub fn zero() -> Self {
        Self {
            num: IntPoly::zero(),
            den: IntPoly::one(),
        }
    }

    pub fn one() -> Self {
        Self {
            num: IntPoly::one(),
            den: IntPoly::one(),
        }
    }

    pub fn from_poly(p: IntPoly) -> Self {
        Self {
            num: p,
            den: IntPoly::one(),
        }
    }

    fn reduced(num: IntPoly, den: IntPoly) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        if num.is_zero() {
            return Self::zero();
        }
        let g = num.gcd(&den);
        let mut num = num.div_exact(&g).unwrap();
        let mut den = den.div_exact(&g).unwrap();
        let c = num_integer::Integer::gcd(&num.content(), &den.content());
        if !c.is_one() {
            num = num.div_exact(&IntPoly::new(vec![c.clone()])).unwrap();
            den = den.div_exact(&IntPoly::new(vec![c])).unwrap();
        }
        // normalize: lowest nonzero denominator coefficient positive
        let lead_sign = den
            .coeffs()
            .iter()
            .find(|c| !c.is_zero())
            .map(|c| c.is_negative())
            .unwrap_or(false);
        if lead_sign {
            num = num.neg();
            den = den.neg();
        }
        Self { num, den }
    }

    pub fn add(&self, rhs: &RatFn) -> RatFn {
        Self::reduced(
            self.num.mul(&rhs.den).add(&rhs.num.mul(&self.den)),
            self.den.mul(&rhs.den),
        )
    }

    pub fn sub(&self, rhs: &RatFn) -> RatFn {
        Self::reduced(
            self.num.mul(&rhs.den).sub(&rhs.num.mul(&self.den)),
            self.den.mul(&rhs.den),
        )
    }

    pub fn mul(&self, rhs: &RatFn) -> RatFn {
        Self::reduced(self.num.mul(&rhs.num), self.den.mul(&rhs.den))
    }

    pub fn inv(&self) -> RatFn {
        assert!(!self.num.is_zero(), "inverting zero");
        Self::reduced(self.den.clone(), self.num.clone())
    }
}

/// A rational power series num/den with den(0) != 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RationalSeries {
    pub num: IntPoly,
    pub den: IntPoly,
}

impl RationalSeries {
    pub fn zero() -> Self {
        Self {
            num: IntPoly::zero(),
            den: IntPoly::one(),
        }
    }

    /// First `count` power-series coefficients; panics if any is not an
    /// integer (our series always are: den(0) = +-1 after reduction).
    pub fn coefficients(&self, count: usize) -> Vec<BigInt> {
        assert!(!self.den.coeff(0).is_zero(), "denominator vanishes at 0");
        let d0 = BigRational::from(self.den.coeff(0));
        let mut out = Vec::with_capacity(count);
        let mut coeffs: Vec<BigRational> = Vec::with_capacity(count);
        for i in 0..count {
            let mut acc = BigRational::from(self.num.coeff(i));
            for j in 1..=i {
                let dj = self.den.coeff(j);
                if dj.is_zero() {
                    continue;
                }
                acc -= BigRational::from(dj) * &coeffs[i - j];
            }
            let c = acc / &d0;
            coeffs.push(c.clone());
            assert!(c.denom().is_one(), "non-integer series coefficient");
            out.push(c.numer().clone());
        }
        out
    }

    /// Divide by z: requires a zero constant term in the expansion,
    /// i.e. num(0)/den(0) contributes nothing at degree 0.
    ///
    /// No gcd reduction: the polynomials can have large degree, where
    /// an integer-polynomial gcd is far more expensive than carrying a
    /// common factor.
    pub fn div_z(&self) -> RationalSeries {
        assert!(
            self.num.coeff(0).is_zero(),
            "series has a nonzero constant term"
        );
        let shifted = IntPoly::new(self.num.coeffs().get(1..).unwrap_or(&[]).to_vec());
        RationalSeries {
            num: shifted,
            den: self.den.clone(),
        }
    }

    /// Multiply by 1/(1 - z): partial sums of the coefficients.
    pub fn partial_sums(&self) -> RationalSeries {
        RationalSeries {
            num: self.num.clone(),
            den: self.den.mul(&IntPoly::from_i64(&[1, -1])),
        }
    }

    /// Check the denominator's linear recurrence on the series
    /// coefficients for indices lo..hi (inclusive):
    /// sum_j den_j * c_{i-j} equals the numerator coefficient at i
    /// (zero past its degree).
    pub fn recurrence_holds(&self, lo: usize, hi: usize) -> bool {
        let coeffs = self.coefficients(hi + 1);
        for i in lo..=hi {
            let mut acc = BigInt::zero();
            for (j, dj) in self.den.coeffs().iter().enumerate() {
                if j > i {
                    break;
                }
                acc += dj * &coeffs[i - j];
            }
            if acc != self.num.coeff(i) {
                return false;
            }
        }
        true
    }
}

/// Explicit small NFA over an indexed alphabet, for the classical
/// regular operations at test scale. Epsilon transitions are allowed.
#[derive(Clone, Debug)]
pub struct Nfa {
    pub alphabet_size: usize,
    pub trans: Vec<HashMap<usize, HashSet<usize>>>,
    pub eps: Vec<HashSet<usize>>,
    pub starts: HashSet<usize>,
    pub accept: HashSet<usize>,
}

impl Nfa {
    pub fn new(alphabet_size: usize, n: usize) -> Self {
        Self {
            alphabet_size,
            trans: vec![HashMap::new(); n],
            eps: vec![HashSet::new(); n],
            starts: HashSet::new(),
            accept: HashSet::new(),
        }
    }

    /// NFA accepting exactly one word.
    pub fn word(alphabet_size: usize, w: &[usize]) -> Self {
        let mut nfa = Self::new(alphabet_size, w.len() + 1);
        nfa.starts.insert(0);
        for (i, &c) in w.iter().enumerate() {
            nfa.trans[i].entry(c).or_default().insert(i + 1);
        }
        nfa.accept.insert(w.len());
        nfa
    }

    fn closure(&self, set: &HashSet<usize>) -> HashSet<usize> {
        let mut out = set.clone();
        let mut stack: Vec<usize> = out.iter().copied().collect();
        while let Some(s) = stack.pop() {
            for &t in &self.eps[s] {
                if out.insert(t) {
                    stack.push(t);
                }
            }
        }
        out
    }

    pub fn accepts(&self, w: &[usize]) -> bool {
        let mut cur = self.closure(&self.starts);
        for &c in w {
            let mut next = HashSet::new();
            for &s in &cur {
                if let Some(ts) = self.trans[s].get(&c) {
                    next.extend(ts);
                }
            }
            cur = self.closure(&next);
            if cur.is_empty() {
                return false;
            }
        }
        cur.iter().any(|s| self.accept.contains(s))
    }

    fn offset_into(&self, other: &mut Nfa, offset: usize) {
        for (s, row) in self.trans.iter().enumerate() {
            for (c, ts) in row {
                other.trans[s + offset]
                    .entry(*c)
                    .or_default()
                    .extend(ts.iter().map(|t| t + offset));
            }
        }
        for (s, es) in self.eps.iter().enumerate() {
            other.eps[s + offset].extend(es.iter().map(|t| t + offset));
        }
    }

    pub fn union(&self, other: &Nfa) -> Nfa {
        assert_eq!(self.alphabet_size, other.alphabet_size);
        let n1 = self.trans.len();
        let mut out = Nfa::new(self.alphabet_size, n1 + other.trans.len());
        self.offset_into(&mut out, 0);
        other.offset_into(&mut out, n1);
        out.starts.extend(&self.starts);
        out.starts.extend(other.starts.iter().map(|s| s + n1));
        out.accept.extend(&self.accept);
        out.accept.extend(other.accept.iter().map(|s| s + n1));
        out
    }

    pub fn concat(&self, other: &Nfa) -> Nfa {
        assert_eq!(self.alphabet_size, other.alphabet_size);
        let n1 = self.trans.len();
        let mut out = Nfa::new(self.alphabet_size, n1 + other.trans.len());
        self.offset_into(&mut out, 0);
        other.offset_into(&mut out, n1);
        out.starts.extend(&self.starts);
        for &a in &self.accept {
            out.eps[a].extend(other.starts.iter().map(|s| s + n1));
        }
        out.accept.extend(other.accept.iter().map(|s| s + n1));
        out
    }

    pub fn star(&self) -> Nfa {
        let n1 = self.trans.len();
        let mut out = Nfa::new(self.alphabet_size, n1 + 1);
        self.offset_into(&mut out, 0);
        out.starts.insert(n1);
        out.accept.insert(n1);
        out.eps[n1].extend(&self.starts);
        for &a in &self.accept {
            out.eps[a].insert(n1);
        }
        out
    }

    pub fn reversal(&self) -> Nfa {
        let mut out = Nfa::new(self.alphabet_size, self.trans.len());
        for (s, row) in self.trans.iter().enumerate() {
            for (c, ts) in row {
                for &t in ts {
                    out.trans[t].entry(*c).or_default().insert(s);
                }
            }
        }
        for (s, es) in self.eps.iter().enumerate() {
            for &t in es {
                out.eps[t].insert(s);
            }
        }
        out.starts = self.accept.clone();
        out.accept = self.starts.clone();
        out
    }

    /// Subset construction to a complete DFA (state 0 is the sink when
    /// needed), then complement by flipping acceptance.
    pub fn complement(&self) -> Nfa {
        let mut subsets: HashMap<Vec<usize>, usize> = HashMap::new();
        let start = {
            let mut v: Vec<usize> = self.closure(&self.starts).into_iter().collect();
            v.sort_unstable();
            v
        };
        subsets.insert(start.clone(), 0);
        let mut order = vec![start];
        let mut dtrans: Vec<Vec<usize>> = Vec::new();
        let mut i = 0;
        while i < order.len() {
            let cur: HashSet<usize> = order[i].iter().copied().collect();
            let mut row = Vec::with_capacity(self.alphabet_size);
            for c in 0..self.alphabet_size {
                let mut next = HashSet::new();
                for &s in &cur {
                    if let Some(ts) = self.trans[s].get(&c) {
                        next.extend(ts);
                    }
                }
                let mut v: Vec<usize> = self.closure(&next).into_iter().collect();
                v.sort_unstable();
                let id = *subsets.entry(v.clone()).or_insert_with(|| {
                    order.push(v);
                    order.len() - 1
                });
                row.push(id);
            }
            dtrans.push(row);
            i += 1;
        }
        let mut out = Nfa::new(self.alphabet_size, order.len());
        out.starts.insert(0);
        for (s, row) in dtrans.iter().enumerate() {
            for (c, &t) in row.iter().enumerate() {
                out.trans[s].entry(c).or_default().insert(t);
            }
        }
        for (s, subset) in order.iter().enumerate() {
            let accepts_here = subset.iter().any(|q| self.accept.contains(q));
            if !accepts_here {
                out.accept.insert(s);
            }
        }
        out
    }

    pub fn intersection(&self, other: &Nfa) -> Nfa {
        // De Morgan over the subset construction keeps this short;
        // test-scale alphabets make the cost irrelevant.
        self.complement().union(&other.complement()).complement()
    }

    /// Padded pair language: word pairs (w1, w2) with w1 accepted by
    /// self and w2 by other, read synchronously with the shorter word
    /// padded at its end. Pair symbol encoding over alphabet of size
    /// (m+1)^2 - 1: index (c1, c2) with c = m meaning pad, minus the
    /// all-pad symbol.
    pub fn pad_pair(&self, other: &Nfa) -> Nfa {
        let m = self.alphabet_size;
        assert_eq!(m, other.alphabet_size);
        let pair_alpha = (m + 1) * (m + 1) - 1;
        // deterministic product over subset states: track (set1 or done, set2 or done)
        // Simpler: explicit product NFA over (state1, pad1?) x (state2, pad2?).
        let n1 = self.trans.len();
        let n2 = other.trans.len();
        // states: (s1, s2, pad1_active, pad2_active) flattened
        let idx = |s1: usize, s2: usize, p1: bool, p2: bool| {
            ((s1 * n2 + s2) * 2 + p1 as usize) * 2 + p2 as usize
        };
        let mut out = Nfa::new(pair_alpha, n1 * n2 * 4);
        for &a in &self.starts {
            for &b in &other.starts {
                out.starts.insert(idx(a, b, false, false));
            }
        }
        let enc = |c1: usize, c2: usize| c1 * (m + 1) + c2;
        for s1 in 0..n1 {
            for s2 in 0..n2 {
                for p1 in [false, true] {
                    for p2 in [false, true] {
                        let from = idx(s1, s2, p1, p2);
                        // epsilon closure of source languages
                        for &e1 in &self.eps[s1] {
                            out.eps[from].insert(idx(e1, s2, p1, p2));
                        }
                        for &e2 in &other.eps[s2] {
                            out.eps[from].insert(idx(s1, e2, p1, p2));
                        }
                        for c1 in 0..=m {
                            for c2 in 0..=m {
                                if c1 == m && c2 == m {
                                    continue;
                                }
                                // pads only once a side has finished
                                let t1s: Vec<(usize, bool)> = if c1 == m {
                                    if self.accept.contains(&s1) || p1 {
                                        vec![(s1, true)]
                                    } else {
                                        vec![]
                                    }
                                } else if p1 {
                                    vec![]
                                } else {
                                    self.trans[s1]
                                        .get(&c1)
                                        .map(|ts| ts.iter().map(|&t| (t, false)).collect())
                                        .unwrap_or_default()
                                };
                                let t2s: Vec<(usize, bool)> = if c2 == m {
                                    if other.accept.contains(&s2) || p2 {
                                        vec![(s2, true)]
                                    } else {
                                        vec![]
                                    }
                                } else if p2 {
                                    vec![]
                                } else {
                                    other.trans[s2]
                                        .get(&c2)
                                        .map(|ts| ts.iter().map(|&t| (t, false)).collect())
                                        .unwrap_or_default()
                                };
                                for &(t1, q1) in &t1s {
                                    for &(t2, q2) in &t2s {
                                        out.trans[from]
                                            .entry(enc(c1, c2))
                                            .or_default()
                                            .insert(idx(t1, t2, q1, q2));
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        for s1 in 0..n1 {
            for s2 in 0..n2 {
                if self.accept.contains(&s1) && other.accept.contains(&s2) {
                    for p1 in [false, true] {
                        for p2 in [false, true] {
                            out.accept.insert(idx(s1, s2, p1, p2));
                        }
                    }
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words_up_to(alphabet: usize, len: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        let mut layer = vec![vec![]];
        for _ in 0..len {
            let mut next = Vec::new();
            for w in &layer {
                for c in 0..alphabet {
                    let mut w2 = w.clone();
                    w2.push(c);
                    next.push(w2);
                }
            }
            out.extend(next.iter().cloned());
            layer = next;
        }
        out
    }

    #[test]
    fn series_geometric() {
        // one accepting state with a weight-1 self-loop: 1/(1-z)
        let dfa = ExploredDfa {
            start: 0,
            accept: vec![true],
            edges: vec![BTreeMap::from([(0, vec![(1, 1)])])],
        };
        let s = dfa.series();
        assert_eq!(s.num, IntPoly::one());
        assert_eq!(s.den, IntPoly::from_i64(&[1, -1]));
        assert_eq!(
            s.coefficients(5),
            vec![1, 1, 1, 1, 1].into_iter().map(BigInt::from).collect::<Vec<_>>()
        );
    }

    #[test]
    fn series_fibonacci() {
        // self-loops of weight 1 and 2: 1/(1 - z - z^2)
        let dfa = ExploredDfa {
            start: 0,
            accept: vec![true],
            edges: vec![BTreeMap::from([(0, vec![(1, 1), (2, 1)])])],
        };
        let s = dfa.series();
        assert_eq!(s.den, IntPoly::from_i64(&[1, -1, -1]));
        assert_eq!(
            s.coefficients(6),
            vec![1, 1, 2, 3, 5, 8].into_iter().map(BigInt::from).collect::<Vec<_>>()
        );
        assert!(s.recurrence_holds(1, 50));
    }

    #[test]
    fn series_empty() {
        let dfa = ExploredDfa {
            start: 0,
            accept: vec![false],
            edges: vec![BTreeMap::new()],
        };
        assert_eq!(dfa.series(), RationalSeries::zero());
    }

    #[test]
    fn series_matches_path_counts() {
        // two-state machine with mixed weights
        let dfa = ExploredDfa {
            start: 0,
            accept: vec![false, true],
            edges: vec![
                BTreeMap::from([(0, vec![(1, 2)]), (1, vec![(2, 1)])]),
                BTreeMap::from([(0, vec![(1, 1)])]),
            ],
        };
        let s = dfa.series();
        let direct = dfa.count_by_weight(30);
        assert_eq!(s.coefficients(31), direct);
    }

    #[test]
    fn minimize_preserves_counts() {
        // duplicated states collapse without changing the series
        let dfa = ExploredDfa {
            start: 0,
            accept: vec![false, true, true],
            edges: vec![
                BTreeMap::from([(1, vec![(1, 1)]), (2, vec![(1, 1)])]),
                BTreeMap::from([(1, vec![(1, 1)])]),
                BTreeMap::from([(2, vec![(1, 1)])]),
            ],
        };
        let m = dfa.trim().minimize();
        assert_eq!(m.num_states(), 2);
        assert_eq!(dfa.count_by_weight(10), m.count_by_weight(10));
    }

    #[test]
    fn explore_simple_parity() {
        // words over {a(1), b(2)} with even count of a
        let alphabet = [(0usize, 1i64), (1usize, 2i64)];
        let dfa = explore(
            0u8,
            &alphabet,
            |s, l| Some(if l.0 == 0 { 1 - *s } else { *s }),
            |s| *s == 0,
            |l| l.1,
            100,
        )
        .unwrap();
        let counts = dfa.count_by_weight(6);
        assert_eq!(dfa.series().coefficients(7), counts);
        // weight 2: "aa" and "b"
        assert_eq!(counts[2], BigInt::from(2));
    }

    #[test]
    fn div_z_and_partial_sums() {
        let s = RationalSeries {
            num: IntPoly::from_i64(&[0, 1]),
            den: IntPoly::from_i64(&[1, -1]),
        };
        let sphere = s.div_z();
        assert_eq!(sphere.coefficients(4)[0], BigInt::one());
        let ball = sphere.partial_sums();
        assert_eq!(
            ball.coefficients(5),
            vec![1, 2, 3, 4, 5].into_iter().map(BigInt::from).collect::<Vec<_>>()
        );
    }

    #[test]
    fn nfa_regular_ops() {
        // reversal of {ab} is {ba}
        let ab = Nfa::word(2, &[0, 1]);
        let rev = ab.reversal();
        assert!(rev.accepts(&[1, 0]));
        assert!(!rev.accepts(&[0, 1]));
        // complement twice: same language on words <= length 4
        let cc = ab.complement().complement();
        for w in words_up_to(2, 4) {
            assert_eq!(ab.accepts(&w), cc.accepts(&w), "{w:?}");
        }
        // L intersect complement(L) is empty
        let inter = ab.intersection(&ab.complement());
        for w in words_up_to(2, 4) {
            assert!(!inter.accepts(&w));
        }
        // union / concat / star sanity
        let a = Nfa::word(2, &[0]);
        let b = Nfa::word(2, &[1]);
        let u = a.union(&b);
        assert!(u.accepts(&[0]) && u.accepts(&[1]) && !u.accepts(&[0, 1]));
        let cat = a.concat(&b);
        assert!(cat.accepts(&[0, 1]) && !cat.accepts(&[1, 0]));
        let star = a.star();
        assert!(star.accepts(&[]) && star.accepts(&[0, 0, 0]) && !star.accepts(&[1]));
    }

    #[test]
    fn nfa_pad_pair() {
        // pairs from L1 = {a}, L2 = {ab}: the only padded pair word is
        // (a,$)(pad...) — encode and check
        let l1 = Nfa::word(2, &[0]);
        let l2 = Nfa::word(2, &[0, 1]);
        let pp = l1.pad_pair(&l2);
        let m = 2;
        let enc = |c1: usize, c2: usize| c1 * (m + 1) + c2;
        // (a,a)(pad,b)
        assert!(pp.accepts(&[enc(0, 0), enc(m, 1)]));
        // mismatched: (a,a)(a,b) needs w1 = "aa" not in L1
        assert!(!pp.accepts(&[enc(0, 0), enc(0, 1)]));
        // pads cannot appear before the word ends
        assert!(!pp.accepts(&[enc(m, 0), enc(0, 1)]));
    }
}
