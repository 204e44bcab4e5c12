//! Acceptance gate: one test per criterion, one pass/fail line each.
//!
//! Heavy artifacts (cross-section automata, BFS balls) are shared
//! between criteria through `OnceLock` so the suite stays within its
//! time budget on a single core.

use std::sync::OnceLock;

use nalgebra::DVector;
use num_bigint::BigInt;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use torus_growth::automaton::RationalSeries;
use torus_growth::convexity::{
    ac2_probe, ac2_probe_z2, lattice_embed, lemma72_bound, one_param,
    pi_m_equivariance_residual, relation_residual, JordanBlock,
};
use torus_growth::cross_section::{
    canonical_cross_section, check_improvement, fftp_constants, group_series, improve_word,
    SectionParams,
};
use torus_growth::group::{class_minimum_weights, Group};
use torus_growth::language::{
    enumerate_loose_words, h_len, psi, psi_inverse_canonical, r_prime_accepts, t_len, LambdaWord,
    PairMachine,
};
use torus_growth::matrix::{block_rcf, factor_over_rationals, CanonicalSetup, IntMatrix};
use torus_growth::poly::{tuple_divides, LaurentPoly, LaurentTuple};

fn sol_matrix() -> IntMatrix {
    IntMatrix::from_rows_i64(&[vec![2, 1], vec![1, 1]])
}

fn two_block_matrix() -> IntMatrix {
    IntMatrix::diag_blocks(&[
        sol_matrix(),
        IntMatrix::from_rows_i64(&[vec![3, 1], vec![2, 1]]),
    ])
}

fn setup_for(a: &IntMatrix) -> CanonicalSetup {
    let factors = factor_over_rationals(&a.char_poly()).unwrap();
    block_rcf(a, &factors).unwrap()
}

/// Sphere/ball series of the Sol group from the tightened
/// cross-section, plus its BFS oracle through distance 10.
fn sol_series() -> &'static (RationalSeries, RationalSeries, Vec<usize>) {
    static CELL: OnceLock<(RationalSeries, RationalSeries, Vec<usize>)> = OnceLock::new();
    CELL.get_or_init(|| {
        let setup = setup_for(&sol_matrix());
        let params = SectionParams::tightened(10, 2, 8);
        let dfa = canonical_cross_section(&setup, &params).expect("section builds");
        let (sphere, ball) = group_series(&dfa);
        let oracle = Group::new(setup)
            .bfs_spheres(10, 10_000_000)
            .expect("oracle fits");
        (sphere, ball, oracle)
    })
}

/// Same for the 4x4 two-block matrix, oracle through distance 7.
fn two_block_series() -> &'static (RationalSeries, RationalSeries, Vec<usize>) {
    static CELL: OnceLock<(RationalSeries, RationalSeries, Vec<usize>)> = OnceLock::new();
    CELL.get_or_init(|| {
        let setup = setup_for(&two_block_matrix());
        let params = SectionParams::tightened(7, 2, 8);
        let dfa = canonical_cross_section(&setup, &params).expect("section builds");
        let (sphere, ball) = group_series(&dfa);
        let oracle = Group::new(setup)
            .bfs_spheres(7, 10_000_000)
            .expect("oracle fits");
        (sphere, ball, oracle)
    })
}

fn assert_matches_oracle(sphere: &RationalSeries, oracle: &[usize], label: &str) {
    let ours = sphere.coefficients(oracle.len());
    for (d, (got, want)) in ours.iter().zip(oracle.iter()).enumerate() {
        assert_eq!(
            got,
            &BigInt::from(*want),
            "{label}: sphere mismatch at distance {d}"
        );
    }
}

#[test]
fn criterion_01_sol_series_matches_oracle_to_distance_10() {
    let (sphere, _, oracle) = sol_series();
    assert_matches_oracle(sphere, oracle, "sol");
    assert_eq!(oracle[0], 1);
    assert_eq!(oracle[1], 4);
    println!("criterion 1: PASS (sol spheres exact through distance 10)");
}

#[test]
fn criterion_02_two_block_series_matches_oracle_to_distance_7() {
    let (sphere, _, oracle) = two_block_series();
    assert_matches_oracle(sphere, oracle, "two-block");
    println!("criterion 2: PASS (4x4 two-block spheres exact through distance 7)");
}

#[test]
fn criterion_03_series_satisfy_their_recurrences() {
    let (s1, b1, _) = sol_series();
    let (s2, b2, _) = two_block_series();
    for (series, label) in [
        (s1, "sol sphere"),
        (b1, "sol ball"),
        (s2, "two-block sphere"),
        (b2, "two-block ball"),
    ] {
        assert!(
            series.recurrence_holds(1, 50),
            "{label}: denominator recurrence fails on coefficients 1..50"
        );
    }
    println!("criterion 3: PASS (denominator recurrences hold for coefficients 1..50)");
}

#[test]
fn criterion_04_acceptor_matches_brute_force_predicate() {
    let setup = setup_for(&sol_matrix());
    let machine = PairMachine::new(&setup, 3);
    let group = Group::new(setup);
    let p = group.block_tuple();
    // All loose words with 1..=5 letters, paired so the letter total is
    // <= 6. Equal height and equal overhangs force equal length, so
    // unequal-length pairs are rejected by both sides by construction.
    let mut words: Vec<LambdaWord> = Vec::new();
    for len in 1..=5 {
        words.extend(enumerate_loose_words(1, 3, len));
    }
    struct Info {
        t: LaurentTuple,
        h: i64,
        tl: usize,
        hl: usize,
        len: usize,
    }
    let infos: Vec<Info> = words
        .iter()
        .map(|w| {
            let sp = psi(w, 1);
            Info {
                t: sp.t.clone(),
                h: sp.h,
                tl: t_len(w),
                hl: h_len(w),
                len: w.letters.len(),
            }
        })
        .collect();
    let mut pairs = 0u64;
    for i in 0..words.len() {
        for j in 0..words.len() {
            if infos[i].len + infos[j].len > 6 {
                continue;
            }
            let brute = infos[i].h == infos[j].h
                && infos[i].tl == infos[j].tl
                && infos[i].hl == infos[j].hl
                && infos[i].len == infos[j].len
                && tuple_divides(&p, &infos[i].t.sub(&infos[j].t)).is_some();
            let accepted = r_prime_accepts(&machine, &words[i], &words[j]);
            assert_eq!(
                accepted, brute,
                "acceptor disagrees with brute force on pair {i},{j}"
            );
            pairs += 1;
        }
    }
    println!("criterion 4: PASS (acceptor equals brute-force predicate on {pairs} pairs)");
}

#[test]
fn criterion_05_improvement_bounds_on_200_nonminimal_words() {
    let setup = setup_for(&sol_matrix());
    let consts = fftp_constants(&setup);
    let p = setup.blocks[0].to_laurent();
    let mut rng = StdRng::seed_from_u64(20260826);
    let mut checked = 0usize;
    while checked < 200 {
        // light witness type
        let support = rng.gen_range(1..4usize);
        let mut t2 = LaurentPoly::zero();
        for _ in 0..support {
            let e = rng.gen_range(-4..5i64);
            let c = rng.gen_range(-6..7i64);
            t2 = &t2 + &LaurentPoly::from_pairs([(e, c)]);
        }
        // heavier same-class word: add p * q with a spread-out q
        let mut q = LaurentPoly::zero();
        for _ in 0..rng.gen_range(1..4usize) {
            let e = rng.gen_range(-40..41i64);
            let c = rng.gen_range(1..4i64) * if rng.gen_bool(0.5) { 1 } else { -1 };
            q = &q + &LaurentPoly::from_pairs([(e, c)]);
        }
        if q.is_zero() {
            continue;
        }
        let t1 = &t2 + &(&p * &q);
        let h = rng.gen_range(-2..3i64);
        let sp1 = torus_growth::group::SPoint {
            t: LaurentTuple {
                components: vec![t1],
            },
            h,
        };
        let sp2 = torus_growth::group::SPoint {
            t: LaurentTuple {
                components: vec![t2],
            },
            h,
        };
        if sp2.weight() >= sp1.weight() {
            continue;
        }
        let w1 = match psi_inverse_canonical(&sp1, consts.k1) {
            Ok(w) => w,
            Err(_) => continue,
        };
        let w2 = psi_inverse_canonical(&sp2, consts.k1).unwrap();
        let improved = improve_word(&w1, &w2, &setup, &consts).expect("improvable");
        let pi = psi(&improved, 1);
        let pw = psi(&w1, 1);
        assert!(
            check_improvement(&pw, &pi, &consts),
            "improvement bounds violated on sample {checked}"
        );
        checked += 1;
    }
    println!("criterion 5: PASS (all four improvement bounds on {checked} non-minimal words)");
}

#[test]
fn criterion_06_near_isometry_on_radius_8_ball() {
    let setup = setup_for(&sol_matrix());
    let group = Group::new(setup);
    let (_, dist) = group.bfs_ball(8, 10_000_000).expect("ball fits");
    let minima = class_minimum_weights(&group, 9);
    let mut checked = 0usize;
    for (g, d) in &dist {
        let min = minima
            .get(g)
            .unwrap_or_else(|| panic!("ball element at distance {d} missing from S-classes"));
        assert_eq!(
            min,
            &BigInt::from(d + 1),
            "near-isometry constant is not 1 at distance {d}"
        );
        checked += 1;
    }
    println!("criterion 6: PASS (distance + 1 equals minimal class weight on {checked} elements)");
}

fn block_types() -> Vec<JordanBlock> {
    vec![
        JordanBlock::real(2.618),
        JordanBlock::complex_pair(1.7, 0.83),
        JordanBlock::real_chain(1.9, 2),
    ]
}

#[test]
fn criterion_07_projection_bound_on_1000_sequences_per_block() {
    let mut rng = StdRng::seed_from_u64(72);
    for block in block_types() {
        for _ in 0..1000 {
            let m = rng.gen_range(1..8usize);
            let vectors: Vec<DVector<f64>> = (0..m)
                .map(|_| DVector::from_fn(block.dim, |_, _| rng.gen_range(-2.0..2.0)))
                .collect();
            let times: Vec<f64> = (1..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let (lhs, rhs) = lemma72_bound(&block, &vectors, &times);
            assert!(lhs <= rhs + 1e-9, "projection bound fails for {:?}", block.kind);
        }
        for _ in 0..1000 {
            let t: f64 = rng.gen_range(-3.0..3.0);
            let v = DVector::from_fn(block.dim, |_, _| rng.gen_range(-2.0..2.0));
            assert!(
                pi_m_equivariance_residual(&block, t, &v) < 1e-9,
                "equivariance fails for {:?}",
                block.kind
            );
        }
    }
    println!("criterion 7: PASS (1000 factor sequences and 1000 equivariance samples per block type)");
}

#[test]
fn criterion_08_isometry_relations_at_100_points() {
    let group = Group::new(setup_for(&sol_matrix()));
    let emb = lattice_embed(&group, 1e-9).expect("embedding verifies");
    let residual = relation_residual(&group, &emb, 100, 8);
    assert!(residual < 1e-9, "relation residual {residual}");
    println!("criterion 8: PASS (relation residual {residual:.3e} at 100 sample points)");
}

#[test]
fn criterion_09_ac2_probe_grows_on_sol_and_is_flat_on_z2() {
    let group = Group::new(setup_for(&sol_matrix()));
    let report = ac2_probe(&group, 9, 10_000_000).expect("probe fits");
    let maxima: Vec<u32> = report
        .rows
        .iter()
        .filter(|r| r.n >= 4)
        .map(|r| r.max_inner_distance)
        .collect();
    assert_eq!(maxima.len(), 6, "need rows for n = 4..9");
    assert!(
        maxima.windows(2).all(|w| w[0] <= w[1]),
        "sol maxima not weakly increasing: {maxima:?}"
    );
    assert!(
        maxima.windows(2).any(|w| w[0] < w[1]),
        "sol maxima never strictly increase: {maxima:?}"
    );
    let control = ac2_probe_z2(9, 10_000_000).expect("control fits");
    let flat: Vec<u32> = control.rows.iter().map(|r| r.max_inner_distance).collect();
    assert!(
        flat.windows(2).all(|w| w[0] == w[1]),
        "z2 control not constant: {flat:?}"
    );
    println!("criterion 9: PASS (sol maxima {maxima:?} increase; z2 control constant)");
}

#[test]
fn criterion_10_one_parameter_subgroup_laws() {
    let mut rng = StdRng::seed_from_u64(10);
    for block in block_types() {
        let b0 = one_param(&block, 0.0);
        assert!(
            (&b0 - nalgebra::DMatrix::identity(block.dim, block.dim)).norm() < 1e-9,
            "B(0) != I for {:?}",
            block.kind
        );
        let b1 = one_param(&block, 1.0);
        assert!(
            (&b1 - &block.matrix).norm() < 1e-9,
            "B(1) != block for {:?}",
            block.kind
        );
        for _ in 0..200 {
            let s: f64 = rng.gen_range(-3.0..3.0);
            let t: f64 = rng.gen_range(-3.0..3.0);
            let lhs = one_param(&block, s + t);
            let rhs = one_param(&block, s) * one_param(&block, t);
            assert!(
                (lhs - rhs).norm() < 1e-9,
                "B(s+t) != B(s)B(t) for {:?}",
                block.kind
            );
        }
    }
    println!("criterion 10: PASS (one-parameter laws hold at residual < 1e-9)");
}
