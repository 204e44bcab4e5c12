use torus_growth::cross_section::{enumerate_section_words, SectionParams};
use torus_growth::matrix::{block_rcf, factor_over_rationals, IntMatrix};

// oracle spheres for the 4x4 two-block matrix, distances 0..=7
const ORACLE: [usize; 8] = [1, 6, 26, 110, 434, 1552, 5258, 17174];

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: i64 = args[1].parse().unwrap();
    let affix: usize = args[2].parse().unwrap();
    let dcap: i64 = args[3].parse().unwrap();
    let age: u8 = args[4].parse().unwrap();
    let rcap: i64 = args[5].parse().unwrap();
    let ecap: i64 = args[6].parse().unwrap();
    let nwit: i64 = args.get(7).map_or(n, |s| s.parse().unwrap());
    let max_w: i64 = args.get(8).map_or(8, |s| s.parse().unwrap());
    let a = IntMatrix::from_rows_i64(&[
        vec![2, 1, 0, 0],
        vec![1, 1, 0, 0],
        vec![0, 0, 3, 1],
        vec![0, 0, 2, 1],
    ]);
    let factors = factor_over_rationals(&a.char_poly()).unwrap();
    let setup = block_rcf(&a, &factors).unwrap();
    let mut params = SectionParams::tightened(n, affix, dcap);
    params.age_cap = age;
    params.rem_cap = rcap;
    params.e_cap = ecap;
    params.n_wit = nwit;
    if let (Some(r0), Some(r1)) = (args.get(9), args.get(10)) {
        params.rem_caps = vec![r0.parse().unwrap(), r1.parse().unwrap()];
    }
    if let (Some(e0), Some(e1)) = (args.get(11), args.get(12)) {
        params.e_caps = vec![e0.parse().unwrap(), e1.parse().unwrap()];
    }
    let t0 = std::time::Instant::now();
    let words = enumerate_section_words(&setup, &params, true, max_w);
    let mut counts = vec![0usize; max_w as usize + 1];
    for w in &words {
        counts[w.weight() as usize] += 1;
    }
    counts[0] = 1; // empty word
    // weight w represents distance w - 1; weight 0/1 both map to the identity
    let ok: Vec<bool> = counts
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, c)| ORACLE.get(i - 1).is_none_or(|o| o == c))
        .collect();
    println!(
        "n={n} affix={affix} d={dcap} age={age} rem={rcap} e={ecap} nwit={nwit}: {:?} match {:?} ({:?})",
        counts,
        ok,
        t0.elapsed()
    );
}
