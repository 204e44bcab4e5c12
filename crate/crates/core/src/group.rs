//! Exact arithmetic in G = Z^N x_A Z (canonical coordinates), word
//! evaluation to (type, height) pairs, the weighted S-space, and the
//! brute-force sphere oracle.

use std::cell::RefCell;
use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::matrix::{CanonicalSetup, IntMatrix};
use crate::poly::{LaurentPoly, LaurentTuple, tuple_divides};

#[derive(Debug, Error)]
pub enum GroupError {
    #[error("search frontier exceeded the cap of {cap} elements")]
    ResourceLimit { cap: usize },
}

/// Element (v, h) with multiplication (v1,h1)(v2,h2) = (v1 + A^h1 v2,
/// h1 + h2).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct GroupElement {
    pub v: Vec<BigInt>,
    pub h: i64,
}

impl GroupElement {
    pub fn identity(n: usize) -> Self {
        Self {
            v: vec![BigInt::zero(); n],
            h: 0,
        }
    }
}

/// Generator symbol: A(j, s) is the j-th module generator to the power
/// s = +-1; T(s) is the height generator to the power s.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Gen {
    A(usize, i8),
    T(i8),
}

/// The group, bound to a canonical setup; A is the block canonical
/// matrix and module generators are the cyclic basis vectors (standard
/// basis vectors at each block offset).
pub struct Group {
    pub setup: CanonicalSetup,
    a_inv: IntMatrix,
    powers: RefCell<HashMap<i64, IntMatrix>>,
}

impl Group {
    pub fn new(setup: CanonicalSetup) -> Self {
        let a_inv = setup.block_matrix.inverse_unimodular();
        Self {
            setup,
            a_inv,
            powers: RefCell::new(HashMap::new()),
        }
    }

    pub fn dim(&self) -> usize {
        self.setup.n_dim
    }

    /// A^h, memoized, exact for negative h (det = 1).
    pub fn a_pow(&self, h: i64) -> IntMatrix {
        if let Some(m) = self.powers.borrow().get(&h) {
            return m.clone();
        }
        let m = if h == 0 {
            IntMatrix::identity(self.dim())
        } else if h > 0 {
            self.a_pow(h - 1).mul(&self.setup.block_matrix)
        } else {
            self.a_pow(h + 1).mul(&self.a_inv)
        };
        self.powers.borrow_mut().insert(h, m.clone());
        m
    }

    pub fn mul(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        let av = self.a_pow(a.h).mul_vec(&b.v);
        GroupElement {
            v: a.v.iter().zip(&av).map(|(x, y)| x + y).collect(),
            h: a.h + b.h,
        }
    }

    pub fn inv(&self, a: &GroupElement) -> GroupElement {
        let w = self.a_pow(-a.h).mul_vec(&a.v);
        GroupElement {
            v: w.into_iter().map(|x| -x).collect(),
            h: -a.h,
        }
    }

    /// The j-th module generator: the basis vector at block j's offset.
    pub fn module_gen(&self, j: usize) -> GroupElement {
        let mut v = vec![BigInt::zero(); self.dim()];
        v[self.setup.block_offsets()[j]] = BigInt::one();
        GroupElement { v, h: 0 }
    }

    pub fn t_gen(&self) -> GroupElement {
        GroupElement {
            v: vec![BigInt::zero(); self.dim()],
            h: 1,
        }
    }

    pub fn gen_element(&self, g: Gen) -> GroupElement {
        match g {
            Gen::A(j, s) => {
                let e = self.module_gen(j);
                if s > 0 {
                    e
                } else {
                    self.inv(&e)
                }
            }
            Gen::T(s) => {
                let t = self.t_gen();
                if s > 0 {
                    t
                } else {
                    self.inv(&t)
                }
            }
        }
    }

    /// All 2k + 2 generators with inverses.
    pub fn generators(&self) -> Vec<GroupElement> {
        let mut out = Vec::new();
        for j in 0..self.setup.k {
            out.push(self.gen_element(Gen::A(j, 1)));
            out.push(self.gen_element(Gen::A(j, -1)));
        }
        out.push(self.gen_element(Gen::T(1)));
        out.push(self.gen_element(Gen::T(-1)));
        out
    }

    pub fn eval_word(&self, word: &[Gen]) -> GroupElement {
        word.iter().fold(GroupElement::identity(self.dim()), |acc, &g| {
            self.mul(&acc, &self.gen_element(g))
        })
    }

    /// Evaluate an S-point: v = sum_j t_j(A) e_{offset_j}, paired with h.
    pub fn s_point_to_group(&self, p: &SPoint) -> GroupElement {
        let offsets = self.setup.block_offsets();
        let mut v = vec![BigInt::zero(); self.dim()];
        for (j, comp) in p.t.components.iter().enumerate() {
            for (e, c) in comp.iter() {
                let mut basis = vec![BigInt::zero(); self.dim()];
                basis[offsets[j]] = BigInt::one();
                let col = self.a_pow(e).mul_vec(&basis);
                for (vi, ci) in v.iter_mut().zip(col) {
                    *vi += c * ci;
                }
            }
        }
        GroupElement { v, h: p.h }
    }

    /// Same class: equal heights and the block tuple divides the
    /// componentwise difference.
    pub fn s_equiv(&self, p1: &SPoint, p2: &SPoint) -> bool {
        if p1.h != p2.h {
            return false;
        }
        let pbar = self.block_tuple();
        tuple_divides(&pbar, &p1.t.sub(&p2.t)).is_some()
    }

    pub fn block_tuple(&self) -> LaurentTuple {
        LaurentTuple {
            components: self.setup.blocks.iter().map(|p| p.to_laurent()).collect(),
        }
    }

    /// Sphere sizes |S(0)|..|S(radius)| under the generating set
    /// {v_j^{+-1}, t^{+-1}}.
    pub fn bfs_spheres(&self, radius: u32, cap: usize) -> Result<Vec<usize>, GroupError> {
        Ok(self.bfs_ball(radius, cap)?.0)
    }

    /// Spheres plus the full distance map of the radius ball.
    pub fn bfs_ball(
        &self,
        radius: u32,
        cap: usize,
    ) -> Result<(Vec<usize>, HashMap<GroupElement, u32>), GroupError> {
        let gens = self.generators();
        let mut dist: HashMap<GroupElement, u32> = HashMap::new();
        let id = GroupElement::identity(self.dim());
        dist.insert(id.clone(), 0);
        let mut frontier = vec![id];
        let mut spheres = vec![1usize];
        for d in 1..=radius {
            let mut next = Vec::new();
            for g in &frontier {
                for s in &gens {
                    let h = self.mul(g, s);
                    if !dist.contains_key(&h) {
                        dist.insert(h.clone(), d);
                        next.push(h);
                    }
                }
            }
            if dist.len() > cap {
                return Err(GroupError::ResourceLimit { cap });
            }
            spheres.push(next.len());
            frontier = next;
        }
        Ok((spheres, dist))
    }
}

/// A point of S = Z[z,z^-1]^k x Z with the ball weighting.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SPoint {
    pub t: LaurentTuple,
    pub h: i64,
}

impl SPoint {
    pub fn zero(k: usize) -> Self {
        Self {
            t: LaurentTuple::zeros(k),
            h: 0,
        }
    }

    /// 2T_h + 2H_h + |h| + |t|_1: the group word length of a word with
    /// this unreduced type and height.
    pub fn min_word_length(&self) -> BigInt {
        BigInt::from(2 * self.t.tail_len(self.h))
            + BigInt::from(2 * self.t.head_len(self.h))
            + BigInt::from(self.h.abs())
            + self.t.norm_one()
    }

    /// S-weight: word length + 1 (the near-isometry shift).
    pub fn weight(&self) -> BigInt {
        self.min_word_length() + BigInt::one()
    }
}

/// Left-to-right scan: t^{+-1} moves the height, a_j^{+-1} read at
/// height i contributes +-z^i to component j.
pub fn word_to_type_height(word: &[Gen], k: usize) -> SPoint {
    let mut t = LaurentTuple::zeros(k);
    let mut h: i64 = 0;
    for &g in word {
        match g {
            Gen::T(s) => h += s as i64,
            Gen::A(j, s) => t.components[j].add_term(h, &BigInt::from(s)),
        }
    }
    SPoint { t, h }
}

/// Enumerate every SPoint of weight <= max_weight (k components).
/// Exhaustive: used as the oracle for the near-isometry checks.
pub fn enumerate_spoints(k: usize, max_weight: i64) -> Vec<SPoint> {
    let budget_all = max_weight - 1;
    let mut out = Vec::new();
    for h in -budget_all..=budget_all {
        // Remaining weight after |h| pays for 2T + 2H + |t|_1.
        let b = budget_all - h.abs();
        let max_t = b / 2;
        let max_h = b / 2;
        let (lo, hi) = if h >= 0 {
            (-max_t, h + max_h)
        } else {
            (h - max_t, max_h)
        };
        let mut comps: Vec<LaurentPoly> = Vec::with_capacity(k);
        enumerate_tuple(k, lo, hi, b, &mut comps, &mut |t| {
            let p = SPoint {
                t: LaurentTuple {
                    components: t.to_vec(),
                },
                h,
            };
            if p.weight() <= BigInt::from(max_weight) {
                out.push(p);
            }
        });
    }
    out
}

fn enumerate_tuple(
    k: usize,
    lo: i64,
    hi: i64,
    budget: i64,
    acc: &mut Vec<LaurentPoly>,
    emit: &mut impl FnMut(&[LaurentPoly]),
) {
    if k == 0 {
        emit(acc);
        return;
    }
    let mut current = LaurentPoly::zero();
    enumerate_poly(lo, hi, budget, &mut current, &mut |p, used| {
        acc.push(p.clone());
        enumerate_tuple(k - 1, lo, hi, budget - used, acc, emit);
        acc.pop();
    });
}

fn enumerate_poly(
    pos: i64,
    hi: i64,
    budget: i64,
    current: &mut LaurentPoly,
    emit: &mut impl FnMut(&LaurentPoly, i64),
) {
    fn rec(
        pos: i64,
        hi: i64,
        budget: i64,
        used: i64,
        current: &mut LaurentPoly,
        emit: &mut impl FnMut(&LaurentPoly, i64),
    ) {
        if pos > hi {
            emit(current, used);
            return;
        }
        rec(pos + 1, hi, budget, used, current, emit);
        for mag in 1..=budget {
            for c in [mag, -mag] {
                current.add_term(pos, &BigInt::from(c));
                rec(pos + 1, hi, budget - mag, used + mag, current, emit);
                current.add_term(pos, &BigInt::from(-c));
            }
        }
    }
    rec(pos, hi, budget, 0, current, emit);
}

/// Minimum S-weight per group element among all SPoints of weight <=
/// max_weight — the enumerated class-minimum oracle.
pub fn class_minimum_weights(group: &Group, max_weight: i64) -> HashMap<GroupElement, BigInt> {
    let mut best: HashMap<GroupElement, BigInt> = HashMap::new();
    for p in enumerate_spoints(group.setup.k, max_weight) {
        let g = group.s_point_to_group(&p);
        let w = p.weight();
        match best.get(&g) {
            Some(old) if *old <= w => {}
            _ => {
                best.insert(g, w);
            }
        }
    }
    best
}

/// All words of the free monoid over the generator symbols, by length.
pub fn all_words(k: usize, len: usize) -> Vec<Vec<Gen>> {
    let mut symbols = Vec::new();
    for j in 0..k {
        symbols.push(Gen::A(j, 1));
        symbols.push(Gen::A(j, -1));
    }
    symbols.push(Gen::T(1));
    symbols.push(Gen::T(-1));
    let mut words: Vec<Vec<Gen>> = vec![vec![]];
    let mut out = vec![vec![]];
    for _ in 0..len {
        let mut next = Vec::new();
        for w in &words {
            for &s in &symbols {
                let mut w2 = w.clone();
                w2.push(s);
                next.push(w2);
            }
        }
        out.extend(next.iter().cloned());
        words = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{block_rcf, factor_over_rationals, IntMatrix};
    use crate::poly::IntPoly;

    fn sol_group() -> Group {
        let a = IntMatrix::from_rows_i64(&[vec![2, 1], vec![1, 1]]);
        let factors = factor_over_rationals(&a.char_poly()).unwrap();
        Group::new(block_rcf(&a, &factors).unwrap())
    }

    fn ge(v: &[i64], h: i64) -> GroupElement {
        GroupElement {
            v: v.iter().map(|&x| BigInt::from(x)).collect(),
            h,
        }
    }

    #[test]
    fn multiplication_examples() {
        // Use the literal matrix [[2,1],[1,1]] as the acting matrix by
        // building a group straight from it.
        let a = IntMatrix::from_rows_i64(&[vec![2, 1], vec![1, 1]]);
        let setup = crate::matrix::CanonicalSetup {
            power: 1,
            blocks: vec![IntPoly::from_i64(&[1, -3, 1])],
            basis_change: IntMatrix::identity(2),
            block_matrix: a,
            m_per_block: vec![BigInt::from(3)],
            m_max: BigInt::from(3),
            k: 1,
            n_dim: 2,
        };
        let g = Group::new(setup);
        let x = ge(&[1, 0], 1);
        let y = ge(&[0, 1], 0);
        assert_eq!(g.mul(&x, &y), ge(&[2, 1], 1));
        let id = GroupElement::identity(2);
        assert_eq!(g.mul(&x, &id), x);
        assert_eq!(g.inv(&x), ge(&[-1, 1], -1));
        assert_eq!(g.mul(&x, &g.inv(&x)), id);
    }

    #[test]
    fn group_axioms_random() {
        use rand::{Rng, SeedableRng};
        let g = sol_group();
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..200 {
            let r = |rng: &mut rand::rngs::StdRng| {
                ge(
                    &[rng.gen_range(-5..=5), rng.gen_range(-5..=5)],
                    rng.gen_range(-4..=4),
                )
            };
            let (a, b, c) = (r(&mut rng), r(&mut rng), r(&mut rng));
            assert_eq!(g.mul(&g.mul(&a, &b), &c), g.mul(&a, &g.mul(&b, &c)));
            assert_eq!(g.mul(&a, &g.inv(&a)), GroupElement::identity(2));
            assert_eq!(g.mul(&g.inv(&a), &a), GroupElement::identity(2));
        }
    }

    #[test]
    fn word_scan_examples() {
        use crate::poly::LaurentPoly;
        // t a1 t^-1 a1 -> type z + 1, height 0
        let w = [Gen::T(1), Gen::A(0, 1), Gen::T(-1), Gen::A(0, 1)];
        let p = word_to_type_height(&w, 1);
        assert_eq!(p.t.components[0], LaurentPoly::from_pairs([(1, 1), (0, 1)]));
        assert_eq!(p.h, 0);
        let p2 = word_to_type_height(&[Gen::T(1)], 1);
        assert!(p2.t.is_zero());
        assert_eq!(p2.h, 1);
        // a1^-1 t^-1 a1 t -> z^-1 - 1, height 0
        let w3 = [Gen::A(0, -1), Gen::T(-1), Gen::A(0, 1), Gen::T(1)];
        let p3 = word_to_type_height(&w3, 1);
        assert_eq!(
            p3.t.components[0],
            LaurentPoly::from_pairs([(-1, 1), (0, -1)])
        );
        assert_eq!(p3.h, 0);
    }

    #[test]
    fn word_round_trip() {
        // word evaluation through the S-space equals direct evaluation
        let g = sol_group();
        for w in all_words(1, 4) {
            let p = word_to_type_height(&w, 1);
            assert_eq!(g.s_point_to_group(&p), g.eval_word(&w));
        }
    }

    #[test]
    fn min_word_length_examples() {
        use crate::poly::LaurentPoly;
        let p = SPoint {
            t: LaurentTuple {
                components: vec![LaurentPoly::from_pairs([(-1, 1), (1, 1)])],
            },
            h: 1,
        };
        assert_eq!(p.min_word_length(), BigInt::from(5));
        let p2 = SPoint {
            t: LaurentTuple::zeros(1),
            h: 3,
        };
        assert_eq!(p2.min_word_length(), BigInt::from(3));
        let p3 = SPoint {
            t: LaurentTuple {
                components: vec![LaurentPoly::constant(1)],
            },
            h: 0,
        };
        assert_eq!(p3.min_word_length(), BigInt::one());
    }

    #[test]
    fn s_equiv_examples() {
        let g = sol_group();
        let p1 = SPoint {
            t: LaurentTuple {
                components: vec![g.setup.blocks[0].to_laurent()],
            },
            h: 0,
        };
        let zero = SPoint::zero(1);
        assert!(g.s_equiv(&p1, &p1));
        assert!(g.s_equiv(&p1, &zero));
        let lifted = SPoint {
            t: zero.t.clone(),
            h: 1,
        };
        assert!(!g.s_equiv(&zero, &lifted));
        // s_equiv implies equal group images
        assert_eq!(g.s_point_to_group(&p1), g.s_point_to_group(&zero));
    }

    #[test]
    fn bfs_small_spheres() {
        let g = sol_group();
        let spheres = g.bfs_spheres(2, 1_000_000).unwrap();
        assert_eq!(spheres[0], 1);
        assert_eq!(spheres[1], 4);
        // frozen by this oracle itself
        assert_eq!(spheres[2], 12);
        assert!(matches!(
            g.bfs_spheres(6, 10),
            Err(GroupError::ResourceLimit { .. })
        ));
    }

    #[test]
    fn near_isometry_small_radius() {
        // BFS distance + 1 = class-minimum S-weight for the radius-5 ball
        let g = sol_group();
        let (_, dist) = g.bfs_ball(5, 1_000_000).unwrap();
        let minima = class_minimum_weights(&g, 6);
        for (el, d) in &dist {
            let w = minima
                .get(el)
                .unwrap_or_else(|| panic!("no enumerated class for {el:?}"));
            assert_eq!(*w, BigInt::from(d + 1), "element {el:?}");
        }
    }

    #[test]
    fn prop_length_vs_bfs() {
        // For enumerated SPoints, BFS distance <= formula length, and the
        // class minimum is attained.
        let g = sol_group();
        let (_, dist) = g.bfs_ball(6, 2_000_000).unwrap();
        for p in enumerate_spoints(1, 5) {
            let el = g.s_point_to_group(&p);
            if let Some(d) = dist.get(&el) {
                assert!(BigInt::from(*d) <= p.min_word_length());
            }
        }
    }
}
