//! Fellow-traveling constants, the constructive word-improvement
//! procedure, and the minimal regular cross-section.
//!
//! The cross-section machinery runs a subset construction over witness
//! configurations: a word survives exactly when no same-class witness,
//! tracked through the division acceptor with bounded zero-letter
//! padding, finishes strictly lighter (or equal weight but earlier in
//! the pinned word order).

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::rc::Rc;

use num_bigint::BigInt;
use thiserror::Error;

use crate::automaton::{explore, AutomatonError, ExploredDfa, RationalSeries};
use crate::group::SPoint;
use crate::language::{
    alphabet, psi, psi_inverse_canonical, LambdaWord, Letter, Part, Rem, DivisionTable,
};
use crate::matrix::CanonicalSetup;
use crate::poly::{divergence, tail_len, head_len, LaurentPoly};

#[derive(Debug, Error)]
pub enum CrossSectionError {
    #[error("witness is not lighter than the word; nothing to improve")]
    NotImprovable,
    #[error("improvement did not stabilize within {0} iterations")]
    NoConvergence(usize),
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
}

/// The constants of the fellow-traveling argument.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FftpConstants {
    pub m: i64,
    pub n_dim: i64,
    pub k: i64,
    pub a_bound: i64,
    pub b: i64,
    pub c: i64,
    pub k1: i64,
    pub k2: i64,
    pub k3: i64,
    pub k_ft: i64,
}

pub fn fftp_constants(setup: &CanonicalSetup) -> FftpConstants {
    let m: i64 = setup.m_max.to_string().parse().expect("M fits i64");
    let n = setup.n_dim as i64;
    let k = setup.k as i64;
    let a_bound = 2 * m * n;
    let b = 2 * a_bound;
    let c = 2 * a_bound + 2 * b * m;
    let k1 = 2 * m * n * (b + 2);
    let k2 = 2 * m * n * b;
    let k3 = k * (k * (12 * m * n * b + 4 * m * n + 1) + 2 * m * b + 2 * m * n * b + 4 * m);
    let k_ft = k3 + (k * k1 + 6) * k2;
    FftpConstants {
        m,
        n_dim: n,
        k,
        a_bound,
        b,
        c,
        k1,
        k2,
        k3,
        k_ft,
    }
}

fn tail_target_exp(h: i64, len: i64) -> i64 {
    if h >= 0 {
        -len
    } else {
        h - len
    }
}

fn head_target_exp(h: i64, len: i64) -> i64 {
    if h >= 0 {
        h + len
    } else {
        len
    }
}

/// Add s * z^shift * p with the sign chosen to keep the sup norm small.
fn plant_marker(t: &LaurentPoly, p: &LaurentPoly, shift: i64) -> LaurentPoly {
    let marker = p.shifted(shift);
    let plus = t + &marker;
    let minus = t - &marker;
    if plus.norm_inf() <= minus.norm_inf() {
        plus
    } else {
        minus
    }
}

/// If the tail (resp. head) of t is shorter than the target length,
/// plant a +-z^. p marker to extend it to the target.
fn ensure_tail_at_least(t: &LaurentPoly, p: &LaurentPoly, h: i64, target: i64) -> LaurentPoly {
    if tail_len(t, h) >= target || target <= 0 {
        return t.clone();
    }
    // p has nonzero constant term, so z^e * p has min exponent e.
    plant_marker(t, p, tail_target_exp(h, target))
}

fn ensure_head_at_least(t: &LaurentPoly, p: &LaurentPoly, h: i64, target: i64) -> LaurentPoly {
    if head_len(t, h) >= target || target <= 0 {
        return t.clone();
    }
    let d = p.max_exp().unwrap();
    plant_marker(t, p, head_target_exp(h, target) - d)
}

/// Prefix index n at which sum_{i <= n} (|f_i| - |g_i|) first exceeds
/// the threshold, if any.
fn divergence_crossing(f: &LaurentPoly, g: &LaurentPoly, threshold: i64) -> Option<i64> {
    let mut exps: Vec<i64> = f.iter().map(|(e, _)| e).chain(g.iter().map(|(e, _)| e)).collect();
    exps.sort_unstable();
    exps.dedup();
    let mut run = BigInt::from(0);
    for e in exps {
        use num_traits::Signed;
        run += f.coeff(e).abs() - g.coeff(e).abs();
        if run > BigInt::from(threshold) {
            return Some(e);
        }
    }
    None
}

/// One component's improvement state.
struct CompCtx<'a> {
    p: &'a LaurentPoly,
}

impl CompCtx<'_> {
    fn quotient(&self, t1: &LaurentPoly, t2: &LaurentPoly) -> LaurentPoly {
        (t2 - t1)
            .div_exact(self.p)
            .expect("words must lie in the same class")
    }
}

/// Lemma-style witness improvement: given a word and a strictly lighter
/// same-class witness, produce a witness that additionally fellow-travels
/// the word (bounded tail/head gaps, bounded divergence, bounded
/// coefficients). Returns the improved witness.
pub fn improve_word(
    word: &LambdaWord,
    witness: &LambdaWord,
    setup: &CanonicalSetup,
    consts: &FftpConstants,
) -> Result<LambdaWord, CrossSectionError> {
    let k = setup.k;
    let p1 = psi(word, k);
    let p2 = psi(witness, k);
    assert_eq!(p1.h, p2.h, "same class required");
    if p2.weight() >= p1.weight() {
        return Err(CrossSectionError::NotImprovable);
    }
    let h = p1.h;
    let gap = 2 * consts.m * consts.n_dim * consts.b; // tail/head slack 2MNB
    let thresh3 = 10 * consts.m * consts.n_dim * consts.b + 4 * consts.m + 1;
    let x4 = 12 * consts.m * consts.n_dim * consts.b + 4 * consts.m * consts.n_dim + 1;
    let blocks: Vec<LaurentPoly> = setup.blocks.iter().map(|b| b.to_laurent()).collect();
    let mut t2 = p2.t.clone();
    let max_rounds = 10_000;
    for _round in 0..max_rounds {
        let mut changed = false;
        for j in 0..k {
            let ctx = CompCtx { p: &blocks[j] };
            let t1j = &p1.t.components[j];
            let t2j = t2.components[j].clone();
            let q = ctx.quotient(t1j, &t2j);

            // Step 1 (tail): witness tail too long.
            if tail_len(&t2j, h) > tail_len(t1j, h) + gap && !q.is_zero() {
                let d0 = q.min_exp().unwrap();
                let kept = q.slice(d0 + gap, i64::MAX / 2);
                t2.components[j] = t1j + &(ctx.p * &kept);
                changed = true;
                continue;
            }
            // Step 1 (head): witness head too long.
            if head_len(&t2j, h) > head_len(t1j, h) + gap && !q.is_zero() {
                let d0 = q.max_exp().unwrap();
                let kept = q.slice(i64::MIN / 2, d0 - gap);
                t2.components[j] = t1j + &(ctx.p * &kept);
                changed = true;
                continue;
            }
            // Step 2 (tail): witness tail too short; cancellation in the
            // low end. Keep only the low part of the quotient and plant a
            // marker at the new boundary.
            if tail_len(t1j, h) > tail_len(&t2j, h) + gap {
                let target = tail_len(t1j, h) - gap;
                let boundary = tail_target_exp(h, target);
                let kept = q.slice(i64::MIN / 2, boundary - 1);
                let mut next = t1j + &(ctx.p * &kept);
                next = ensure_tail_at_least(&next, ctx.p, h, target);
                t2.components[j] = next;
                changed = true;
                continue;
            }
            // Step 2 (head): mirrored.
            if head_len(t1j, h) > head_len(&t2j, h) + gap {
                let target = head_len(t1j, h) - gap;
                let boundary = head_target_exp(h, target);
                let d = ctx.p.max_exp().unwrap();
                let kept = q.slice(boundary - d + 1, i64::MAX / 2);
                let mut next = t1j + &(ctx.p * &kept);
                next = ensure_head_at_least(&next, ctx.p, h, target);
                t2.components[j] = next;
                changed = true;
                continue;
            }
            // Step 3: witness prefix-heavier than the word beyond the
            // threshold; drop the low part of the quotient.
            if let Some(d0) = divergence_crossing(&t2j, t1j, thresh3) {
                let kept = q.slice(d0 + 1, i64::MAX / 2);
                let mut next = t1j + &(ctx.p * &kept);
                next = ensure_tail_at_least(&next, ctx.p, h, tail_len(t1j, h) - gap);
                next = ensure_head_at_least(&next, ctx.p, h, head_len(t1j, h) - gap);
                t2.components[j] = next;
                changed = true;
                continue;
            }
        }
        if changed {
            continue;
        }
        // Step 4: the word prefix-heavier than the witness; case split on
        // how many components stay small.
        let divs: Vec<BigInt> = (0..k)
            .map(|j| divergence(&p1.t.components[j], &t2.components[j]))
            .collect();
        let n_small = divs.iter().filter(|d| **d <= BigInt::from(x4)).count() as i64;
        let threshold = (n_small + 1) * x4;
        for j in 0..k {
            if divs[j] <= BigInt::from(threshold) {
                continue;
            }
            let ctx = CompCtx { p: &blocks[j] };
            let t1j = &p1.t.components[j];
            let t2j = t2.components[j].clone();
            let q = ctx.quotient(t1j, &t2j);
            if let Some(d0) = divergence_crossing(t1j, &t2j, threshold) {
                let kept = q.slice(i64::MIN / 2, d0);
                let mut next = t1j + &(ctx.p * &kept);
                next = ensure_tail_at_least(&next, ctx.p, h, tail_len(t1j, h) - gap);
                next = ensure_head_at_least(&next, ctx.p, h, head_len(t1j, h) - gap);
                t2.components[j] = next;
                changed = true;
            }
        }
        if !changed {
            let result = SPoint { t: t2, h };
            assert!(check_improvement(&p1, &result, consts));
            return Ok(psi_inverse_canonical(&result, consts.k1)
                .expect("improved coefficients stay within K1"));
        }
    }
    Err(CrossSectionError::NoConvergence(max_rounds))
}

/// The Lemma 5.2 bullet list, assertable per call.
pub fn check_improvement(original: &SPoint, improved: &SPoint, consts: &FftpConstants) -> bool {
    let weight_ok = improved.weight() < original.weight();
    let th_ok = (original.t.tail_len(original.h) - improved.t.tail_len(improved.h)).abs()
        <= consts.k2
        && (original.t.head_len(original.h) - improved.t.head_len(improved.h)).abs() <= consts.k2;
    let div_ok = crate::poly::tuple_divergence(&original.t, &improved.t)
        + crate::poly::tuple_divergence(&improved.t, &original.t)
        <= BigInt::from(2 * consts.k3);
    let coeff_ok = improved.t.norm_inf() <= BigInt::from(consts.k1);
    weight_ok && th_ok && div_ok && coeff_ok
}

/// Parameters for the cross-section construction.
#[derive(Clone, Debug)]
pub struct SectionParams {
    /// Coefficient bound for the language whose minimum is taken.
    pub n_main: i64,
    /// Coefficient bound for witness words.
    pub n_wit: i64,
    /// Zero-letter padding allowance (tail/head slack between a word
    /// and its witness).
    pub affix: usize,
    /// Clamp on the running weight difference along synchronized
    /// prefixes.
    pub delta_cap: i64,
    /// Remainder coefficient cap in the division acceptor.
    pub rem_cap: i64,
    /// Optional per-block remainder caps; when non-empty (one entry per
    /// block) they override `rem_cap`. The remainder domain is a
    /// product over blocks, so lowering the cap on blocks that never
    /// need large remainders shrinks the subset construction a lot.
    pub rem_caps: Vec<i64>,
    /// Cap on the per-position coefficient difference between a word
    /// and its witness, per block when `e_caps` is non-empty. Genuine minima are reachable through witnesses
    /// that change the type gradually, so a small cap keeps the
    /// branching down; validated by the oracle like the other
    /// tightened parameters.
    pub e_cap: i64,
    /// Optional per-block difference caps overriding `e_cap`, in the
    /// same spirit as `rem_caps`.
    pub e_caps: Vec<i64>,
    /// Maximum number of letters a witness may spend deviating from the
    /// word before realigning. Bounds how much of the recent word a
    /// subset state remembers; validated by the oracle.
    pub age_cap: u8,
    /// Explored-state cap.
    pub cap_states: usize,
}

impl SectionParams {
    /// The constants of the fellow-traveling argument, taken literally.
    /// Desk-scale feasible only for tiny instances; kept as the honest
    /// fallback.
    pub fn certified(consts: &FftpConstants) -> Self {
        Self {
            n_main: consts.a_bound,
            n_wit: consts.k1,
            affix: consts.k2 as usize,
            delta_cap: consts.k_ft,
            rem_cap: consts.c,
            rem_caps: Vec::new(),
            e_cap: consts.a_bound + consts.k1,
            e_caps: Vec::new(),
            age_cap: u8::MAX,
            cap_states: 200_000,
        }
    }

    /// Empirical parameters, only trusted after an oracle comparison.
    /// The remainder and difference caps track the coefficient bound
    /// (witnesses never need to deviate by more than one alphabet
    /// letter's worth), and excursions realign within a short window.
    pub fn tightened(n: i64, affix: usize, delta_cap: i64) -> Self {
        Self {
            n_main: n,
            n_wit: n,
            affix,
            delta_cap,
            rem_cap: (n - 1).max(4),
            rem_caps: Vec::new(),
            e_cap: (n - 1).max(4),
            e_caps: Vec::new(),
            age_cap: 6,
            cap_states: 2_000_000,
        }
    }
}

/// Lex comparison status of the witness against the main word, in the
/// exponent-aligned word order: descending exponents, an absent letter
/// (padding) below every real letter, letters compared by (b, a). The
/// first aligned difference decides.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum Lex {
    Eq,
    WitnessSmaller,
    WitnessBigger,
}

/// Where the witness is relative to its own real letters: still padding
/// before its first one, reading them, or padding after its last one.
/// The counter is the padding used on that side.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
enum WitPhase {
    PrePad(u8),
    Run,
    Done(u8),
}

/// One tracked witness shape: division remainders of the running
/// difference, the joint tripartite position, padding phase, and the
/// tie-break bookkeeping. The running weight difference lives outside
/// the signature (one maximum per signature in each subset state).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
struct Sig {
    rems: Box<[i16]>,
    part: Part,
    phase: WitPhase,
    lex: Lex,
    wit_last_zero2: bool,
    /// Letters read since this witness started deviating. Excursions
    /// older than the configured window are dropped, so subset states
    /// only remember a bounded suffix of the word.
    age: u8,
}

impl Sig {
    fn wit_started(&self) -> bool {
        !matches!(self.phase, WitPhase::PrePad(_))
    }
}

/// A completion of a witness during the accept-time closure: total
/// weight read (as a non-positive delta gain) and the final word-order
/// status.
#[derive(Clone, Copy, Debug)]
struct Outcome {
    gain: i32,
    lex: Lex,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
struct MainState {
    part: Part,
    started: bool,
    last_zero2: bool,
    /// Set once some completed rewrite already beats the word read so
    /// far: the word can still be a valid group word, but it is never
    /// kept, so all witness tracking stops.
    excluded: bool,
    /// Sorted (signature id, max running weight difference) pairs, one
    /// per witness currently deviating from the word (an excursion: it
    /// starts at the first differing position and ends when the running
    /// difference divides out to zero).
    configs: Box<[(u32, i16)]>,
}

struct SigArena {
    list: Vec<Sig>,
    ids: HashMap<Sig, u32>,
    /// (signature, main-letter index) -> [(next signature, witness letter weight)]
    trans: HashMap<(u32, u16), Rc<Vec<(u32, i32)>>>,
    closure: HashMap<u32, Rc<Vec<Outcome>>>,
}

impl SigArena {
    fn intern(&mut self, sig: Sig) -> u32 {
        if let Some(&id) = self.ids.get(&sig) {
            return id;
        }
        let id = self.list.len() as u32;
        self.list.push(sig.clone());
        self.ids.insert(sig, id);
        id
    }
}

struct SectionCtx {
    table: DivisionTable,
    main_letters: Vec<Letter>,
    wit_by_b: BTreeMap<i8, Vec<Letter>>,
    affix: u8,
    delta_cap: i64,
    e_caps: Vec<i64>,
    age_cap: u8,
    tie_break: bool,
    arena: RefCell<SigArena>,
    /// Per block: remainders from which zero is still reachable. A
    /// witness whose remainder leaves this set can never complete, so
    /// keeping it would only bloat the subset states.
    live: Vec<HashSet<Rem>>,
}

/// Backward reachability of the zero remainder under one division step
/// with any incoming difference |e| <= e_max, within the cap.
fn live_rems(table: &DivisionTable, j: usize, e_max: i64) -> HashSet<Rem> {
    let d = table.blocks[j].len();
    let cap = table.caps[j];
    let mut domain: Vec<Rem> = vec![vec![]];
    for _ in 0..d {
        domain = domain
            .into_iter()
            .flat_map(|r| {
                (-cap..=cap).map(move |c| {
                    let mut r2 = r.clone();
                    r2.push(c);
                    r2
                })
            })
            .collect();
    }
    let mut live: HashSet<Rem> = HashSet::new();
    live.insert(vec![0; d]);
    loop {
        let mut grew = false;
        for r in &domain {
            if live.contains(r) {
                continue;
            }
            let hit = (-e_max..=e_max).any(|e| {
                table
                    .step_component(j, r, e)
                    .is_some_and(|next| live.contains(&next))
            });
            if hit {
                live.insert(r.clone());
                grew = true;
            }
        }
        if !grew {
            return live;
        }
    }
}

impl SectionCtx {
    fn rems_live(&self, rems: &[Rem]) -> bool {
        rems.iter()
            .enumerate()
            .all(|(j, r)| self.live[j].contains(r))
    }
}

fn rems_to_i16(rems: &[Rem]) -> Box<[i16]> {
    rems.iter()
        .flat_map(|r| r.iter().map(|&c| c as i16))
        .collect()
}

impl SectionCtx {
    fn rems_of(&self, sig: &Sig) -> Vec<Rem> {
        let mut out = Vec::with_capacity(self.table.blocks.len());
        let mut pos = 0;
        for b in &self.table.blocks {
            out.push(sig.rems[pos..pos + b.len()].iter().map(|&c| c as i64).collect());
            pos += b.len();
        }
        out
    }

    fn base_sig(&self) -> Sig {
        Sig {
            rems: rems_to_i16(&self.table.zero_rems()),
            part: Part::Head,
            phase: WitPhase::PrePad(0),
            lex: Lex::Eq,
            wit_last_zero2: false,
            age: 0,
        }
    }

    /// Transitions of a witness signature when the main word reads
    /// `lm`: the witness answers with a real letter of the same b, or
    /// with padding on the zero-letter side.
    fn sig_step(&self, id: u32, letter_idx: u16) -> Rc<Vec<(u32, i32)>> {
        if let Some(cached) = self.arena.borrow().trans.get(&(id, letter_idx)) {
            return Rc::clone(cached);
        }
        let sig = self.arena.borrow().list[id as usize].clone();
        let lm = &self.main_letters[letter_idx as usize];
        let rems = self.rems_of(&sig);
        let mut out: Vec<(u32, i32)> = Vec::new();
        if sig.age >= self.age_cap {
            let rc = Rc::new(out);
            self.arena
                .borrow_mut()
                .trans
                .insert((id, letter_idx), Rc::clone(&rc));
            return rc;
        }
        // (a) real witness letter with the same b
        if !matches!(sig.phase, WitPhase::Done(_)) {
            if let Some(jp) = sig.part.step(lm.b) {
                for lw in &self.wit_by_b[&lm.b] {
                    if !sig.wit_started() && lw.b == 2 && lw.a_is_zero() {
                        continue; // witness head-boundary letter must be nonzero
                    }
                    let incoming: Vec<i64> =
                        lm.a.iter().zip(&lw.a).map(|(x, y)| x - y).collect();
                    if incoming
                        .iter()
                        .zip(&self.e_caps)
                        .any(|(e, &cap)| e.abs() > cap)
                    {
                        continue;
                    }
                    let Some(next) = self.table.step_all(&rems, &incoming) else {
                        continue;
                    };
                    if !self.rems_live(&next) {
                        continue;
                    }
                    let next_sig = Sig {
                        rems: rems_to_i16(&next),
                        part: jp,
                        phase: WitPhase::Run,
                        lex: if !self.tie_break {
                            Lex::Eq
                        } else {
                            match sig.lex {
                                Lex::Eq => match lw.order_key().cmp(&lm.order_key()) {
                                    std::cmp::Ordering::Less => Lex::WitnessSmaller,
                                    std::cmp::Ordering::Equal => Lex::Eq,
                                    std::cmp::Ordering::Greater => Lex::WitnessBigger,
                                },
                                other => other,
                            }
                        },
                        wit_last_zero2: lw.b == 2 && lw.a_is_zero(),
                        age: sig.age + 1,
                    };
                    out.push((self.arena.borrow_mut().intern(next_sig), lw.weight() as i32));
                }
            }
        }
        if lm.b == 2 {
            let incoming: Vec<i64> = lm.a.clone();
            // (b) witness-side padding before its first real letter
            if let WitPhase::PrePad(j) = sig.phase {
                if j < self.affix && sig.part == Part::Head {
                    if let Some(next) = self
                        .table
                        .step_all(&rems, &incoming)
                        .filter(|n| self.rems_live(n))
                    {
                        let next_sig = Sig {
                            rems: rems_to_i16(&next),
                            part: Part::Head,
                            phase: WitPhase::PrePad(j + 1),
                            lex: if self.tie_break && sig.lex == Lex::Eq {
                                Lex::WitnessSmaller
                            } else {
                                sig.lex
                            },
                            wit_last_zero2: false,
                            age: sig.age + 1,
                        };
                        out.push((self.arena.borrow_mut().intern(next_sig), 0));
                    }
                }
            }
            // (c) witness-side padding after its last real letter
            let done_count = match sig.phase {
                WitPhase::Run if !sig.wit_last_zero2 => Some(0),
                WitPhase::Done(j) => Some(j),
                _ => None,
            };
            if let Some(j) = done_count {
                if j < self.affix && sig.part.step(2) == Some(Part::Tail) {
                    if let Some(next) = self
                        .table
                        .step_all(&rems, &incoming)
                        .filter(|n| self.rems_live(n))
                    {
                        let next_sig = Sig {
                            rems: rems_to_i16(&next),
                            part: Part::Tail,
                            phase: WitPhase::Done(j + 1),
                            lex: if self.tie_break && sig.lex == Lex::Eq {
                                Lex::WitnessSmaller
                            } else {
                                sig.lex
                            },
                            wit_last_zero2: sig.wit_last_zero2,
                            age: sig.age + 1,
                        };
                        out.push((self.arena.borrow_mut().intern(next_sig), 0));
                    }
                }
            }
        }
        let rc = Rc::new(out);
        self.arena
            .borrow_mut()
            .trans
            .insert((id, letter_idx), Rc::clone(&rc));
        rc
    }

    /// Completions of a witness once the main word has ended: it may
    /// read up to `affix` more real tail letters against main-side
    /// padding. Memoized per signature.
    fn sig_closure(&self, id: u32) -> Rc<Vec<Outcome>> {
        if let Some(cached) = self.arena.borrow().closure.get(&id) {
            return Rc::clone(cached);
        }
        let mut outcomes = Vec::new();
        let root = self.arena.borrow().list[id as usize].clone();
        let mut frontier: Vec<(Sig, i32)> = vec![(root, 0)];
        for depth in 0..=self.affix {
            let mut next_frontier = Vec::new();
            for (sig, gain) in &frontier {
                let completes = sig.wit_started()
                    && !sig.wit_last_zero2
                    && sig.part.accepting()
                    && sig.rems.iter().all(|&c| c == 0);
                if completes {
                    outcomes.push(Outcome {
                        gain: *gain,
                        lex: sig.lex,
                    });
                }
                if depth == self.affix
                    || sig.phase != WitPhase::Run
                    || sig.part.step(2) != Some(Part::Tail)
                {
                    continue;
                }
                let rems = self.rems_of(sig);
                for lw in &self.wit_by_b[&2] {
                    if lw.a.iter().zip(&self.e_caps).any(|(a, &cap)| a.abs() > cap) {
                        continue;
                    }
                    let incoming: Vec<i64> = lw.a.iter().map(|&x| -x).collect();
                    let Some(next) = self.table.step_all(&rems, &incoming) else {
                        continue;
                    };
                    if !self.rems_live(&next) {
                        continue;
                    }
                    next_frontier.push((
                        Sig {
                            rems: rems_to_i16(&next),
                            part: Part::Tail,
                            phase: WitPhase::Run,
                            lex: if self.tie_break && sig.lex == Lex::Eq {
                                Lex::WitnessBigger
                            } else {
                                sig.lex
                            },
                            wit_last_zero2: lw.a_is_zero(),
                            age: sig.age.saturating_add(1),
                        },
                        gain - lw.weight() as i32,
                    ));
                }
            }
            frontier = next_frontier;
        }
        let rc = Rc::new(outcomes);
        self.arena.borrow_mut().closure.insert(id, Rc::clone(&rc));
        rc
    }

    /// Start state: the diagonal witness plus the initial closure where
    /// the witness reads up to `affix` real head letters against
    /// main-side padding.
    fn start_state(&self) -> MainState {
        let mut configs: BTreeMap<u32, i16> = BTreeMap::new();
        let base = self.base_sig();
        let mut frontier: Vec<(Sig, i64)> = vec![(base, 0)];
        for _ in 0..self.affix {
            let mut next_frontier = Vec::new();
            for (sig, delta) in &frontier {
                for lw in &self.wit_by_b[&2] {
                    if !sig.wit_started() && lw.a_is_zero() {
                        continue;
                    }
                    if lw.a.iter().zip(&self.e_caps).any(|(a, &cap)| a.abs() > cap) {
                        continue;
                    }
                    let rems = self.rems_of(sig);
                    let incoming: Vec<i64> = lw.a.iter().map(|&x| -x).collect();
                    let Some(next) = self.table.step_all(&rems, &incoming) else {
                        continue;
                    };
                    if !self.rems_live(&next) {
                        continue;
                    }
                    let delta2 = delta - lw.weight();
                    if delta2.abs() > self.delta_cap {
                        continue;
                    }
                    let next_sig = Sig {
                        rems: rems_to_i16(&next),
                        part: Part::Head,
                        phase: WitPhase::Run,
                        lex: if self.tie_break && sig.lex == Lex::Eq {
                            Lex::WitnessBigger
                        } else {
                            sig.lex
                        },
                        wit_last_zero2: lw.a_is_zero(),
                        age: sig.age + 1,
                    };
                    let id = self.arena.borrow_mut().intern(next_sig.clone());
                    let d16 = delta2 as i16;
                    configs
                        .entry(id)
                        .and_modify(|d| *d = (*d).max(d16))
                        .or_insert(d16);
                    next_frontier.push((next_sig, delta2));
                }
            }
            frontier = next_frontier;
        }
        MainState {
            part: Part::Head,
            started: false,
            last_zero2: false,
            excluded: false,
            configs: configs.into_iter().collect(),
        }
    }

    /// The witness that has matched the word letter-for-letter so far.
    /// It is kept implicit in the subset states (it never excludes by
    /// itself) and materialized only to seed fresh excursions.
    fn aligned_base_id(&self, state: &MainState) -> u32 {
        let sig = if state.started {
            Sig {
                rems: rems_to_i16(&self.table.zero_rems()),
                part: state.part,
                phase: WitPhase::Run,
                lex: Lex::Eq,
                wit_last_zero2: state.last_zero2,
                age: 0,
            }
        } else {
            self.base_sig()
        };
        self.arena.borrow_mut().intern(sig)
    }

    /// A witness whose running difference has divided out to zero can
    /// copy the word from here on; it wins iff it is lighter, or (under
    /// tie-breaking) equally heavy but earlier in the word order.
    fn beats_on_completion(&self, delta: i64, lex: Lex) -> bool {
        if delta > 0 {
            return true;
        }
        self.tie_break && delta == 0 && lex == Lex::WitnessSmaller
    }

    fn step(&self, state: &MainState, letter_idx: u16) -> Option<MainState> {
        let lm = &self.main_letters[letter_idx as usize];
        if !state.started && lm.b == 2 && lm.a_is_zero() {
            return None; // the word's own head-boundary letter would be zero
        }
        let part = state.part.step(lm.b)?;
        let last_zero2 = lm.b == 2 && lm.a_is_zero();
        if state.excluded {
            return Some(MainState {
                part,
                started: true,
                last_zero2,
                excluded: true,
                configs: Box::new([]),
            });
        }
        let wm = lm.weight();
        let base = (self.aligned_base_id(state), 0i16);
        let mut excluded = false;
        let mut configs: BTreeMap<u32, i16> = BTreeMap::new();
        'outer: for &(id, delta) in state.configs.iter().chain(std::iter::once(&base)) {
            let nexts = self.sig_step(id, letter_idx);
            for &(next_id, ww) in nexts.iter() {
                // A witness that falls too far behind is dropped; one that
                // gets far ahead is already a guaranteed win whenever it
                // completes, so its advantage saturates (this also merges
                // otherwise identical subset states).
                let delta2 = (delta as i64 + wm - ww as i64).min(self.delta_cap);
                if delta2 < -self.delta_cap {
                    continue;
                }
                let arena = self.arena.borrow();
                let next_sig = &arena.list[next_id as usize];
                if next_sig.phase == WitPhase::Run && next_sig.rems.iter().all(|&c| c == 0) {
                    // Excursion over: the witness realigns with the word.
                    if self.beats_on_completion(delta2, next_sig.lex) {
                        excluded = true;
                        break 'outer;
                    }
                    continue; // witness no better than the word itself
                }
                drop(arena);
                let d16 = delta2 as i16;
                configs
                    .entry(next_id)
                    .and_modify(|d| *d = (*d).max(d16))
                    .or_insert(d16);
            }
        }
        if excluded {
            configs.clear();
        }
        Some(MainState {
            part,
            started: true,
            last_zero2,
            excluded,
            configs: configs.into_iter().collect(),
        })
    }

    /// The word is kept iff it completes the strict language and no
    /// witness completion beats it: strictly lighter, or (cross-section
    /// only) equal weight and earlier in the (length, letter order)
    /// word order.
    fn accept(&self, state: &MainState) -> bool {
        if !state.started || !state.part.accepting() || state.last_zero2 || state.excluded {
            return false;
        }
        for &(id, delta) in state.configs.iter() {
            for out in self.sig_closure(id).iter() {
                let final_delta = delta as i64 + out.gain as i64;
                if self.beats_on_completion(final_delta, out.lex) {
                    return false;
                }
            }
        }
        true
    }
}

fn make_ctx(setup: &CanonicalSetup, params: &SectionParams, tie_break: bool) -> SectionCtx {
    let k = setup.k;
    let wit_letters = alphabet(k, params.n_wit);
    let mut wit_by_b: BTreeMap<i8, Vec<Letter>> = BTreeMap::new();
    for b in [-1i8, 1, 2] {
        wit_by_b.insert(
            b,
            wit_letters.iter().filter(|l| l.b == b).cloned().collect(),
        );
    }
    let table = if params.rem_caps.is_empty() {
        DivisionTable::new(setup, params.rem_cap)
    } else {
        DivisionTable::with_caps(setup, params.rem_caps.clone())
    };
    let e_caps: Vec<i64> = (0..k)
        .map(|j| {
            let e = if params.e_caps.is_empty() {
                params.e_cap
            } else {
                params.e_caps[j]
            };
            e.min(params.n_main + params.n_wit)
        })
        .collect();
    let live = (0..k).map(|j| live_rems(&table, j, e_caps[j])).collect();
    SectionCtx {
        table,
        main_letters: alphabet(k, params.n_main),
        wit_by_b,
        affix: params.affix.min(u8::MAX as usize) as u8,
        delta_cap: params.delta_cap,
        e_caps,
        age_cap: params.age_cap,
        tie_break,
        arena: RefCell::new(SigArena {
            list: Vec::new(),
            ids: HashMap::new(),
            trans: HashMap::new(),
            closure: HashMap::new(),
        }),
        live,
    }
}

/// Depth-first enumeration of the kept words up to a weight budget, in
/// paper order. Diagnostic companion to the automaton builders: the
/// same subset construction, walked word-by-word.
pub fn enumerate_section_words(
    setup: &CanonicalSetup,
    params: &SectionParams,
    tie_break: bool,
    max_weight: i64,
) -> Vec<LambdaWord> {
    let ctx = make_ctx(setup, params, tie_break);
    let mut out = Vec::new();
    let mut stack: Vec<Letter> = Vec::new();
    fn rec(
        ctx: &SectionCtx,
        state: &MainState,
        budget: i64,
        stack: &mut Vec<Letter>,
        out: &mut Vec<LambdaWord>,
    ) {
        if ctx.accept(state) {
            out.push(
                LambdaWord {
                    letters: stack.clone(),
                }
                .reversed(),
            );
        }
        for (li, l) in ctx.main_letters.iter().enumerate() {
            if l.weight() > budget {
                continue;
            }
            if let Some(next) = ctx.step(state, li as u16) {
                stack.push(l.clone());
                rec(ctx, &next, budget - l.weight(), stack, out);
                stack.pop();
            }
        }
    }
    rec(&ctx, &ctx.start_state(), max_weight, &mut stack, &mut out);
    out
}

fn build_section(
    setup: &CanonicalSetup,
    params: &SectionParams,
    tie_break: bool,
) -> Result<ExploredDfa, CrossSectionError> {
    let ctx = make_ctx(setup, params, tie_break);
    let letter_indices: Vec<u16> = (0..ctx.main_letters.len() as u16).collect();
    let weights: Vec<i64> = ctx.main_letters.iter().map(|l| l.weight()).collect();
    let dfa = explore(
        ctx.start_state(),
        &letter_indices,
        |s, &li| ctx.step(s, li),
        |s| ctx.accept(s),
        |&li| weights[li as usize],
        params.cap_states,
    )?;
    Ok(dfa.trim())
}

/// The sublanguage of class-minimal-weight words.
pub fn minimal_language(
    setup: &CanonicalSetup,
    params: &SectionParams,
) -> Result<ExploredDfa, CrossSectionError> {
    build_section(setup, params, false)
}

/// Exactly one minimal word per class: minimal-weight words that also
/// win the (length, letter-order) tie-break among equal-weight minima.
pub fn canonical_cross_section(
    setup: &CanonicalSetup,
    params: &SectionParams,
) -> Result<ExploredDfa, CrossSectionError> {
    build_section(setup, params, true)
}

/// Sphere and ball series of the group from the cross-section: the
/// weight-(d+1) count is the sphere size at distance d.
pub fn group_series(cross_section: &ExploredDfa) -> (RationalSeries, RationalSeries) {
    let series = cross_section.series();
    let sphere = series.div_z();
    let ball = sphere.partial_sums();
    (sphere, ball)
}
