//! The weighted alphabet, the tripartite languages and their maps into
//! S, and the pair acceptors built on Laurent-polynomial division.
//!
//! Orientation note: words are stored in "paper order" (tail letters,
//! then center, then head). The division acceptor consumes letters
//! highest-exponent-first, i.e. reversed; since the language is closed
//! under reversal this is a plain deterministic machine and membership
//! tests reverse their input internally.

use num_bigint::BigInt;
use thiserror::Error;

use crate::group::SPoint;
use crate::matrix::CanonicalSetup;
use crate::poly::LaurentTuple;

#[derive(Debug, Error)]
pub enum LanguageError {
    #[error("type coefficient {coeff} exceeds the alphabet bound {bound}")]
    CoefficientOverflow { coeff: BigInt, bound: i64 },
}

/// Alphabet symbol ((a_1..a_k), b), b in {-1, +1, 2}.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Letter {
    pub a: Vec<i64>,
    pub b: i8,
}

impl Letter {
    pub fn new(a: Vec<i64>, b: i8) -> Self {
        debug_assert!(b == -1 || b == 1 || b == 2);
        Self { a, b }
    }

    pub fn weight(&self) -> i64 {
        self.a.iter().map(|x| x.abs()).sum::<i64>() + self.b.abs() as i64
    }

    pub fn a_is_zero(&self) -> bool {
        self.a.iter().all(|&x| x == 0)
    }

    /// Pinned total order for tie-breaking: (b, a) lexicographic with b
    /// ordered -1 < +1 < 2.
    pub fn order_key(&self) -> (i8, &[i64]) {
        let br = match self.b {
            -1 => 0,
            1 => 1,
            _ => 2,
        };
        (br, &self.a)
    }
}

/// Every letter with coordinate bound n, in order-key order.
pub fn alphabet(k: usize, n: i64) -> Vec<Letter> {
    let mut vecs: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..k {
        let mut next = Vec::new();
        for v in &vecs {
            for c in -n..=n {
                let mut v2 = v.clone();
                v2.push(c);
                next.push(v2);
            }
        }
        vecs = next;
    }
    let mut out = Vec::new();
    for b in [-1i8, 1, 2] {
        for v in &vecs {
            out.push(Letter::new(v.clone(), b));
        }
    }
    out
}

/// Parsed tripartite shape of a word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Shape {
    pub tail: usize,
    pub center: usize,
    pub head: usize,
    pub sign: i8,
}

impl Shape {
    pub fn height(&self) -> i64 {
        self.sign as i64 * (self.center as i64 - 1)
    }
}

/// A word over the alphabet, in paper order.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct LambdaWord {
    pub letters: Vec<Letter>,
}

impl LambdaWord {
    pub fn weight(&self) -> i64 {
        self.letters.iter().map(Letter::weight).sum()
    }

    /// Tripartite parse with conditions (1)-(3); `strict` adds condition
    /// (4) (nonzero boundary (.,2) letters).
    pub fn shape(&self, strict: bool) -> Option<Shape> {
        let mut i = 0;
        let n = self.letters.len();
        while i < n && self.letters[i].b == 2 {
            i += 1;
        }
        let tail = i;
        if i == n {
            return None; // condition (1)
        }
        let sign = self.letters[i].b;
        while i < n && self.letters[i].b == sign {
            i += 1;
        }
        let center = i - tail;
        let head = n - i;
        if self.letters[i..].iter().any(|l| l.b != 2) {
            return None; // condition (2): mixed-sign centers parse here
        }
        if sign == -1 && center < 2 {
            return None; // condition (3)
        }
        if strict {
            if tail > 0 && self.letters[0].a_is_zero() {
                return None; // condition (4), first letter
            }
            if head > 0 && self.letters[n - 1].a_is_zero() {
                return None; // condition (4), last letter
            }
        }
        Some(Shape {
            tail,
            center,
            head,
            sign,
        })
    }

    pub fn reversed(&self) -> LambdaWord {
        LambdaWord {
            letters: self.letters.iter().rev().cloned().collect(),
        }
    }
}

/// Exponent assignment, paper order: tail letters end at exponent -1
/// (positive sign) or h-1 (negative sign); center letters cover 0..h or
/// h..0; head letters continue contiguously above.
pub fn letter_exponents(shape: &Shape) -> Vec<i64> {
    let h = shape.height();
    let mut exps = Vec::with_capacity(shape.tail + shape.center + shape.head);
    let center_lo = if shape.sign > 0 { 0 } else { h };
    for i in 0..shape.tail {
        exps.push(center_lo - (shape.tail as i64 - i as i64));
    }
    for i in 0..shape.center {
        exps.push(center_lo + i as i64);
    }
    let center_hi = if shape.sign > 0 { h } else { 0 };
    for i in 0..shape.head {
        exps.push(center_hi + 1 + i as i64);
    }
    exps
}

/// The word's image in S: each letter contributes its coordinates at
/// its exponent; height from the center count and sign.
pub fn psi(word: &LambdaWord, k: usize) -> SPoint {
    let shape = word.shape(false).expect("psi needs a tripartite word");
    let exps = letter_exponents(&shape);
    let mut t = LaurentTuple::zeros(k);
    for (letter, e) in word.letters.iter().zip(exps) {
        for (j, &c) in letter.a.iter().enumerate() {
            t.components[j].add_term(e, &BigInt::from(c));
        }
    }
    SPoint {
        t,
        h: shape.height(),
    }
}

/// The unique strict word mapping to p: tail/head lengths are exactly
/// T_h/H_h of the type, so boundary (.,2) letters are nonzero.
pub fn psi_inverse_canonical(p: &SPoint, n: i64) -> Result<LambdaWord, LanguageError> {
    let h = p.h;
    let t = p.t.tail_len(h);
    let hd = p.t.head_len(h);
    let sign: i8 = if h >= 0 { 1 } else { -1 };
    let center = h.unsigned_abs() as usize + 1;
    let shape = Shape {
        tail: t as usize,
        center,
        head: hd as usize,
        sign,
    };
    let exps = letter_exponents(&shape);
    let mut letters = Vec::with_capacity(exps.len());
    for (i, e) in exps.iter().enumerate() {
        let b = if i >= shape.tail && i < shape.tail + shape.center {
            sign
        } else {
            2
        };
        let mut a = Vec::with_capacity(p.t.k());
        for comp in &p.t.components {
            let c = comp.coeff(*e);
            let ci = c.to_string().parse::<i64>().unwrap_or(i64::MAX);
            if ci.abs() > n {
                return Err(LanguageError::CoefficientOverflow { coeff: c, bound: n });
            }
            a.push(ci);
        }
        letters.push(Letter::new(a, b));
    }
    Ok(LambdaWord { letters })
}

/// T(w): the number of leading (.,2) letters, counting zero letters.
pub fn t_len(word: &LambdaWord) -> usize {
    word.shape(false).map_or(0, |s| s.tail)
}

pub fn h_len(word: &LambdaWord) -> usize {
    word.shape(false).map_or(0, |s| s.head)
}

/// Part component of the pair machine (machine order: head first).
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub enum Part {
    Head,
    CenterPos,
    CenterNegFirst,
    CenterNeg,
    Tail,
}

impl Part {
    /// Joint part transition on a matched b value, machine order
    /// (2 -> +-1 -> 2 becomes Head -> Center -> Tail).
    pub fn step(self, b: i8) -> Option<Part> {
        match (self, b) {
            (Part::Head, 2) => Some(Part::Head),
            (Part::Head, 1) => Some(Part::CenterPos),
            (Part::Head, -1) => Some(Part::CenterNegFirst),
            (Part::CenterPos, 1) => Some(Part::CenterPos),
            (Part::CenterPos, 2) => Some(Part::Tail),
            (Part::CenterNegFirst, -1) => Some(Part::CenterNeg),
            (Part::CenterNeg, -1) => Some(Part::CenterNeg),
            (Part::CenterNeg, 2) => Some(Part::Tail),
            (Part::Tail, 2) => Some(Part::Tail),
            _ => None,
        }
    }

    pub fn accepting(self) -> bool {
        matches!(self, Part::Tail | Part::CenterPos | Part::CenterNeg)
    }
}

/// Fixed-size remainder in one component: coefficients of degrees
/// 0..d-1, machine-word integers (the cap keeps them small).
pub type Rem = Vec<i64>;

/// Shared division data: monic block polynomials as i64 coefficient
/// slices, and the remainder cap.
#[derive(Clone, Debug)]
pub struct DivisionTable {
    /// Low-order coefficients of each monic block (length = degree).
    pub blocks: Vec<Vec<i64>>,
    /// Reject any remainder coefficient of block j with absolute value
    /// above caps[j].
    pub caps: Vec<i64>,
}

impl DivisionTable {
    pub fn new(setup: &CanonicalSetup, cap: i64) -> Self {
        let caps = vec![cap; setup.blocks.len()];
        Self::with_caps(setup, caps)
    }

    /// Same division data with an independent remainder cap per block.
    pub fn with_caps(setup: &CanonicalSetup, caps: Vec<i64>) -> Self {
        let blocks = setup
            .blocks
            .iter()
            .map(|p| {
                let d = p.degree().unwrap();
                (0..d)
                    .map(|i| {
                        p.coeff(i)
                            .to_string()
                            .parse::<i64>()
                            .expect("block coefficient fits i64")
                    })
                    .collect()
            })
            .collect();
        Self { blocks, caps }
    }

    pub fn zero_rems(&self) -> Vec<Rem> {
        self.blocks.iter().map(|b| vec![0i64; b.len()]).collect()
    }

    /// r' = z r + incoming, reduced mod the monic block; None when a
    /// coefficient exceeds the cap.
    pub fn step_component(&self, j: usize, r: &Rem, incoming: i64) -> Option<Rem> {
        let p = &self.blocks[j];
        let d = p.len();
        let mut next = vec![0i64; d];
        next[0] = incoming;
        for i in 1..d {
            next[i] = r[i - 1];
        }
        let lead = r[d - 1]; // coefficient of z^d after the shift
        if lead != 0 {
            for i in 0..d {
                next[i] = next[i].checked_sub(lead.checked_mul(p[i])?)?;
            }
        }
        if next.iter().any(|c| c.abs() > self.caps[j]) {
            return None;
        }
        Some(next)
    }

    pub fn step_all(&self, rems: &[Rem], incoming: &[i64]) -> Option<Vec<Rem>> {
        rems.iter()
            .zip(incoming)
            .enumerate()
            .map(|(j, (r, &inc))| self.step_component(j, r, inc))
            .collect()
    }
}

/// State of the pair acceptor: per-component remainders plus the joint
/// part.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct PairState {
    pub rems: Vec<Rem>,
    pub part: Part,
}

/// The pair acceptor in machine order. Reading the two words reversed
/// and synchronized, it divides their running difference by the block
/// tuple; acceptance = zero remainders and a completed shape.
pub struct PairMachine {
    pub table: DivisionTable,
}

impl PairMachine {
    pub fn new(setup: &CanonicalSetup, n: i64) -> Self {
        // Lemma bound: word coefficients <= A := n (difference <= 2A),
        // quotient coefficients < B = 2A, remainders < 2A + 2BM.
        let m: i64 = setup
            .m_max
            .to_string()
            .parse()
            .expect("block norm fits i64");
        let cap = 2 * n + 4 * n * m;
        Self {
            table: DivisionTable::new(setup, cap),
        }
    }

    pub fn start(&self) -> PairState {
        PairState {
            rems: self.table.zero_rems(),
            part: Part::Head,
        }
    }

    /// One synchronized step on letters (machine order). Both letters
    /// must agree in b.
    pub fn step(&self, s: &PairState, l1: &Letter, l2: &Letter) -> Option<PairState> {
        if l1.b != l2.b {
            return None;
        }
        let part = s.part.step(l1.b)?;
        let incoming: Vec<i64> = l1.a.iter().zip(&l2.a).map(|(x, y)| x - y).collect();
        let rems = self.table.step_all(&s.rems, &incoming)?;
        Some(PairState { rems, part })
    }

    pub fn accept(&self, s: &PairState) -> bool {
        s.part.accepting() && s.rems.iter().all(|r| r.iter().all(|&c| c == 0))
    }

    /// Membership for an aligned pair in paper order (equal lengths).
    pub fn accepts_pair(&self, w1: &LambdaWord, w2: &LambdaWord) -> bool {
        if w1.letters.len() != w2.letters.len() {
            return false;
        }
        let mut s = self.start();
        for (l1, l2) in w1.letters.iter().rev().zip(w2.letters.iter().rev()) {
            match self.step(&s, l1, l2) {
                Some(next) => s = next,
                None => return false,
            }
        }
        self.accept(&s)
    }
}

fn zero_pad(k: usize, count: usize) -> Vec<Letter> {
    (0..count).map(|_| Letter::new(vec![0; k], 2)).collect()
}

fn affixed(w: &LambdaWord, k: usize, pre: usize, suf: usize) -> LambdaWord {
    let mut letters = zero_pad(k, pre);
    letters.extend(w.letters.iter().cloned());
    letters.extend(zero_pad(k, suf));
    LambdaWord { letters }
}

/// Membership in the equal-length acceptor: both words in the loose
/// language, same class, equal T and H.
pub fn r_prime_accepts(machine: &PairMachine, w1: &LambdaWord, w2: &LambdaWord) -> bool {
    machine.accepts_pair(w1, w2)
}

/// Membership in the padded acceptor: same class, |T1 - T2| <= i and
/// |H1 - H2| <= i, both words in the strict language. Realized by
/// trying zero-letter affix pairs on both sides.
pub fn r_accepts(
    machine: &PairMachine,
    k: usize,
    i: usize,
    w1: &LambdaWord,
    w2: &LambdaWord,
) -> bool {
    if w1.shape(true).is_none() || w2.shape(true).is_none() {
        return false;
    }
    for p1 in 0..=i {
        for p2 in 0..=i {
            if p1.min(p2) != 0 {
                continue;
            }
            for s1 in 0..=i {
                for s2 in 0..=i {
                    if s1.min(s2) != 0 {
                        continue;
                    }
                    if machine.accepts_pair(&affixed(w1, k, p1, s1), &affixed(w2, k, p2, s2)) {
                        return true;
                    }
                }
            }
        }
    }
    false
}

/// All loose-language words with exactly `len` letters (k components,
/// bound n). Exhaustive; test-scale only.
pub fn enumerate_loose_words(k: usize, n: i64, len: usize) -> Vec<LambdaWord> {
    let letters = alphabet(k, n);
    let mut words: Vec<Vec<Letter>> = vec![vec![]];
    for _ in 0..len {
        let mut next = Vec::new();
        for w in &words {
            for l in &letters {
                let mut w2 = w.clone();
                w2.push(l.clone());
                next.push(w2);
            }
        }
        words = next;
    }
    words
        .into_iter()
        .map(|letters| LambdaWord { letters })
        .filter(|w| w.shape(false).is_some())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{block_rcf, factor_over_rationals, IntMatrix};
    use crate::poly::{tuple_divides, LaurentPoly};

    fn sol_setup() -> CanonicalSetup {
        let a = IntMatrix::from_rows_i64(&[vec![2, 1], vec![1, 1]]);
        let factors = factor_over_rationals(&a.char_poly()).unwrap();
        block_rcf(&a, &factors).unwrap()
    }

    fn w(letters: &[(&[i64], i8)]) -> LambdaWord {
        LambdaWord {
            letters: letters
                .iter()
                .map(|(a, b)| Letter::new(a.to_vec(), *b))
                .collect(),
        }
    }

    #[test]
    fn shape_conditions() {
        // single center letter: fine for both
        assert!(w(&[(&[0], 1)]).shape(true).is_some());
        // zero boundary tail letter: loose only
        let zb = w(&[(&[0], 2), (&[1], 1)]);
        assert!(zb.shape(true).is_none());
        assert!(zb.shape(false).is_some());
        // single -1 center: rejected by both
        assert!(w(&[(&[1], -1)]).shape(false).is_none());
        assert!(w(&[(&[1], -1), (&[0], -1)]).shape(false).is_some());
        // mixed signs rejected
        assert!(w(&[(&[1], 1), (&[0], -1)]).shape(false).is_none());
        // no center rejected
        assert!(w(&[(&[1], 2)]).shape(false).is_none());
    }

    #[test]
    fn psi_worked_example() {
        let word = w(&[(&[1], 2), (&[2], 1), (&[0], 1), (&[3], 2)]);
        let p = psi(&word, 1);
        assert_eq!(p.h, 1);
        assert_eq!(
            p.t.components[0],
            LaurentPoly::from_pairs([(-1, 1), (0, 2), (2, 3)])
        );
        assert_eq!(word.weight(), 12);
        assert_eq!(p.weight(), BigInt::from(12));
    }

    #[test]
    fn psi_identity_and_negative() {
        let word = w(&[(&[0], 1)]);
        let p = psi(&word, 1);
        assert!(p.t.is_zero());
        assert_eq!(p.h, 0);
        assert_eq!(p.weight(), BigInt::from(1));
        let neg = w(&[(&[5], -1), (&[0], -1)]);
        let pn = psi(&neg, 1);
        assert_eq!(pn.h, -1);
        assert_eq!(pn.t.components[0], LaurentPoly::from_pairs([(-1, 5)]));
    }

    #[test]
    fn psi_weight_identity_enumerated() {
        // strict words of length <= 4: letter weight sum = S-weight
        for len in 1..=4 {
            for word in enumerate_loose_words(1, 2, len) {
                if word.shape(true).is_none() {
                    continue;
                }
                let p = psi(&word, 1);
                assert_eq!(
                    BigInt::from(word.weight()),
                    p.weight(),
                    "word {word:?}"
                );
            }
        }
    }

    #[test]
    fn psi_injective_on_strict_words() {
        use std::collections::HashMap;
        let mut seen: HashMap<String, LambdaWord> = HashMap::new();
        for len in 1..=4 {
            for word in enumerate_loose_words(1, 2, len) {
                if word.shape(true).is_none() {
                    continue;
                }
                let p = psi(&word, 1);
                let key = format!("{p:?}");
                if let Some(prev) = seen.get(&key) {
                    panic!("psi collision: {prev:?} vs {word:?}");
                }
                seen.insert(key, word);
            }
        }
    }

    #[test]
    fn psi_inverse_round_trip() {
        let word = w(&[(&[1], 2), (&[2], 1), (&[0], 1), (&[3], 2)]);
        let p = psi(&word, 1);
        let back = psi_inverse_canonical(&p, 3).unwrap();
        assert_eq!(back, word);
        // zero head gets trimmed: type (1), h = 0 has no head letters
        let p2 = SPoint {
            t: LaurentTuple {
                components: vec![LaurentPoly::constant(1)],
            },
            h: 0,
        };
        assert_eq!(psi_inverse_canonical(&p2, 3).unwrap(), w(&[(&[1], 1)]));
        assert!(matches!(
            psi_inverse_canonical(&p, 2),
            Err(LanguageError::CoefficientOverflow { .. })
        ));
    }

    #[test]
    fn psi_inverse_is_left_inverse_enumerated() {
        for p in crate::group::enumerate_spoints(1, 6) {
            let word = psi_inverse_canonical(&p, 6).unwrap();
            assert!(word.shape(true).is_some(), "{p:?} -> {word:?}");
            let q = psi(&word, 1);
            assert_eq!(q.t, p.t);
            assert_eq!(q.h, p.h);
        }
    }

    #[test]
    fn division_acceptor_diagonal_and_shift() {
        let setup = sol_setup();
        let machine = PairMachine::new(&setup, 3);
        for len in 1..=4 {
            for word in enumerate_loose_words(1, 1, len).into_iter().take(200) {
                assert!(machine.accepts_pair(&word, &word), "diagonal {word:?}");
            }
        }
        // types z^2 - 3z + 1 vs 0 at h = 2: same class, aligned lengths
        let w1 = w(&[(&[1], 1), (&[-3], 1), (&[1], 1)]);
        let w2 = w(&[(&[0], 1), (&[0], 1), (&[0], 1)]);
        assert!(machine.accepts_pair(&w1, &w2));
        // different center signs rejected
        let neg = w(&[(&[1], -1), (&[0], -1), (&[0], -1)]);
        assert!(!machine.accepts_pair(&w1, &neg));
    }

    #[test]
    fn acceptor_matches_brute_force() {
        // k = 1, n = 2, all loose pairs with <= 3 letters: machine
        // membership == (same class && equal T && equal H). The full
        // n = 3, 6-letter sweep lives in the acceptance suite.
        let setup = sol_setup();
        let machine = PairMachine::new(&setup, 2);
        let pbar = LaurentTuple {
            components: vec![setup.blocks[0].to_laurent()],
        };
        let mut words = Vec::new();
        for len in 1..=3 {
            words.extend(enumerate_loose_words(1, 2, len));
        }
        for w1 in &words {
            for w2 in &words {
                let got = machine.accepts_pair(w1, w2);
                let p1 = psi(w1, 1);
                let p2 = psi(w2, 1);
                let expected = p1.h == p2.h
                    && t_len(w1) == t_len(w2)
                    && h_len(w1) == h_len(w2)
                    && tuple_divides(&pbar, &p1.t.sub(&p2.t)).is_some();
                assert_eq!(got, expected, "pair {w1:?} / {w2:?}");
            }
        }
    }

    #[test]
    fn padded_acceptor_examples() {
        let setup = sol_setup();
        let machine = PairMachine::new(&setup, 3);
        // T differs by 1: z^2-3z+1 vs 0 at h = 0 written minimally
        let w1 = w(&[(&[1], 2), (&[-3], 2), (&[1], 1)]);
        let w2 = w(&[(&[0], 1)]);
        assert!(!r_accepts(&machine, 1, 0, &w1, &w2));
        assert!(r_accepts(&machine, 1, 2, &w1, &w2));
        assert!(r_accepts(&machine, 1, 2, &w2, &w1), "symmetry");
        // different classes never accepted
        let w3 = w(&[(&[1], 1)]);
        assert!(!r_accepts(&machine, 1, 3, &w2, &w3));
    }
}
