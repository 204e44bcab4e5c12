use std::time::Instant;
use torus_growth::cross_section::{canonical_cross_section, group_series, SectionParams};
use torus_growth::group::Group;
use torus_growth::matrix::{block_rcf, factor_over_rationals, IntMatrix};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: i64 = args[1].parse().unwrap();
    let affix: usize = args[2].parse().unwrap();
    let dcap: i64 = args[3].parse().unwrap();
    let cap: usize = args[4].parse().unwrap();
    let age: Option<u8> = args.get(5).map(|s| s.parse().unwrap());
    let oracle_r: u32 = args.get(6).map_or(7, |s| s.parse().unwrap());
    let a = IntMatrix::from_rows_i64(&[
        vec![2, 1, 0, 0],
        vec![1, 1, 0, 0],
        vec![0, 0, 3, 1],
        vec![0, 0, 2, 1],
    ]);
    let factors = factor_over_rationals(&a.char_poly()).unwrap();
    let setup = block_rcf(&a, &factors).unwrap();
    let mut params = SectionParams::tightened(n, affix, dcap);
    params.cap_states = cap;
    if let Some(age) = age {
        params.age_cap = age;
    }
    if let Some(rcap) = args.get(7) {
        params.rem_cap = rcap.parse().unwrap();
    }
    if let Some(ecap) = args.get(8) {
        params.e_cap = ecap.parse().unwrap();
    }
    if let Some(nwit) = args.get(9) {
        params.n_wit = nwit.parse().unwrap();
    }
    if let (Some(r0), Some(r1)) = (args.get(10), args.get(11)) {
        params.rem_caps = vec![r0.parse().unwrap(), r1.parse().unwrap()];
    }
    if let (Some(e0), Some(e1)) = (args.get(12), args.get(13)) {
        params.e_caps = vec![e0.parse().unwrap(), e1.parse().unwrap()];
    }
    eprintln!("params: {params:?}");
    let t0 = Instant::now();
    let dfa = match canonical_cross_section(&setup, &params) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("build failed after {:?}: {e}", t0.elapsed());
            return;
        }
    };
    eprintln!("build: {:?}, states {}", t0.elapsed(), dfa.num_states());
    let t1 = Instant::now();
    let (sphere, _ball) = group_series(&dfa);
    eprintln!(
        "series: {:?}, num len {}, den len {}",
        t1.elapsed(),
        sphere.num.coeffs().len(),
        sphere.den.coeffs().len()
    );
    let t2 = Instant::now();
    let group = Group::new(setup);
    let oracle = group.bfs_spheres(oracle_r, 50_000_000).unwrap();
    eprintln!("oracle: {:?}, spheres {:?}", t2.elapsed(), oracle);
    let coeffs = sphere.coefficients(oracle_r as usize + 1);
    eprintln!("series spheres: {coeffs:?}");
    let ok: Vec<bool> = oracle
        .iter()
        .zip(&coeffs)
        .map(|(o, c)| &num_bigint::BigInt::from(*o) == c)
        .collect();
    eprintln!("match: {ok:?}");
}
