//! Exact integer matrix algebra: characteristic polynomials, rational
//! factorization, block rational canonical form, and the power selection
//! that makes every block satisfy the dominant-coefficient condition
//! 2|p|_inf > |p|_1.

use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::poly::IntPoly;

#[derive(Debug, Error)]
pub enum MatrixError {
    #[error("eigenvalue margin {margin:.3e} below tolerance {tol:.3e}")]
    MarginTooSmall { margin: f64, tol: f64 },
    #[error("characteristic polynomial is not square-free")]
    NotSquareFree,
    #[error("no cyclic vector found for block {block}")]
    DegenerateVector { block: usize },
    #[error("no power <= {max_power} yields square-free blocks with a dominant coefficient")]
    PowerSearchExhausted { max_power: u32 },
    #[error("matrix parse error: {0}")]
    Parse(String),
    #[error("input matrix must have determinant +1, found {0}")]
    NotUnimodular(BigInt),
}

/// Dense square integer matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct IntMatrix {
    pub n: usize,
    entries: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            entries: vec![BigInt::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = BigInt::one();
        }
        m
    }

    pub fn from_rows_i64(rows: &[Vec<i64>]) -> Self {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), n, "matrix must be square");
            for (j, &e) in row.iter().enumerate() {
                m[(i, j)] = BigInt::from(e);
            }
        }
        m
    }

    /// Block-diagonal assembly.
    pub fn diag_blocks(blocks: &[IntMatrix]) -> Self {
        let n = blocks.iter().map(|b| b.n).sum();
        let mut m = Self::zeros(n);
        let mut off = 0;
        for b in blocks {
            for i in 0..b.n {
                for j in 0..b.n {
                    m[(off + i, off + j)] = b[(i, j)].clone();
                }
            }
            off += b.n;
        }
        m
    }

    /// Text format: first line N, then N rows of N whitespace-separated
    /// integers.
    pub fn parse_text(text: &str) -> Result<Self, MatrixError> {
        let mut tokens = text.split_whitespace();
        let n: usize = tokens
            .next()
            .ok_or_else(|| MatrixError::Parse("empty input".into()))?
            .parse()
            .map_err(|e| MatrixError::Parse(format!("bad dimension: {e}")))?;
        if n == 0 {
            return Err(MatrixError::Parse("dimension must be positive".into()));
        }
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let tok = tokens.next().ok_or_else(|| {
                    MatrixError::Parse(format!("expected {} entries, input ended early", n * n))
                })?;
                m[(i, j)] = tok
                    .parse()
                    .map_err(|e| MatrixError::Parse(format!("bad entry '{tok}': {e}")))?;
            }
        }
        if tokens.next().is_some() {
            return Err(MatrixError::Parse("trailing tokens after matrix".into()));
        }
        Ok(m)
    }

    pub fn mul(&self, rhs: &IntMatrix) -> IntMatrix {
        assert_eq!(self.n, rhs.n);
        let n = self.n;
        let mut out = IntMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let t = a * &rhs[(k, j)];
                    out[(i, j)] += t;
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &IntMatrix) -> IntMatrix {
        assert_eq!(self.n, rhs.n);
        let mut out = self.clone();
        for (a, b) in out.entries.iter_mut().zip(&rhs.entries) {
            *a += b;
        }
        out
    }

    pub fn scale(&self, c: &BigInt) -> IntMatrix {
        IntMatrix {
            n: self.n,
            entries: self.entries.iter().map(|e| e * c).collect(),
        }
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(v.len(), self.n);
        (0..self.n)
            .map(|i| (0..self.n).map(|j| &self[(i, j)] * &v[j]).sum())
            .collect()
    }

    pub fn trace(&self) -> BigInt {
        (0..self.n).map(|i| self[(i, i)].clone()).sum()
    }

    pub fn pow(&self, e: u32) -> IntMatrix {
        let mut out = IntMatrix::identity(self.n);
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// Fraction-free (Bareiss) determinant.
    pub fn det(&self) -> BigInt {
        let n = self.n;
        if n == 0 {
            return BigInt::one();
        }
        let mut m: Vec<Vec<BigInt>> = (0..n)
            .map(|i| (0..n).map(|j| self[(i, j)].clone()).collect())
            .collect();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for p in 0..n - 1 {
            if m[p][p].is_zero() {
                match (p + 1..n).find(|&r| !m[r][p].is_zero()) {
                    Some(r) => {
                        m.swap(p, r);
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in p + 1..n {
                for j in p + 1..n {
                    let num = &m[i][j] * &m[p][p] - &m[i][p] * &m[p][j];
                    m[i][j] = num / &prev;
                }
            }
            prev = m[p][p].clone();
        }
        sign * m[n - 1][n - 1].clone()
    }

    /// Characteristic polynomial by the Faddeev-LeVerrier recurrence,
    /// which stays in exact integers for integer input.
    pub fn char_poly(&self) -> IntPoly {
        let n = self.n;
        let mut coeffs = vec![BigInt::zero(); n + 1];
        coeffs[n] = BigInt::one();
        let mut m = IntMatrix::identity(n); // M_1 = I
        for k in 1..=n {
            let am = self.mul(&m);
            let c = -am.trace() / BigInt::from(k as u64);
            coeffs[n - k] = c.clone();
            if k < n {
                m = am.add(&IntMatrix::identity(n).scale(&c));
            }
        }
        IntPoly::new(coeffs)
    }

    /// Adjugate, via Faddeev-LeVerrier: adj(A) = (-1)^(n-1) * M_n where
    /// M_n = A*M_{n-1} + c_1*I chain's final auxiliary matrix.
    pub fn adjugate(&self) -> IntMatrix {
        let n = self.n;
        if n == 1 {
            return IntMatrix::identity(1);
        }
        let mut m = IntMatrix::identity(n);
        for k in 1..n {
            let am = self.mul(&m);
            let c = -am.trace() / BigInt::from(k as u64);
            m = am.add(&IntMatrix::identity(n).scale(&c));
        }
        if n % 2 == 0 {
            m.scale(&BigInt::from(-1))
        } else {
            m
        }
    }

    /// Exact inverse; requires det = +-1.
    pub fn inverse_unimodular(&self) -> IntMatrix {
        let d = self.det();
        assert!(d.abs().is_one(), "inverse requires determinant +-1");
        let adj = self.adjugate();
        if d.is_one() {
            adj
        } else {
            adj.scale(&BigInt::from(-1))
        }
    }

    /// Evaluate an integer polynomial at this matrix.
    pub fn eval_poly(&self, p: &IntPoly) -> IntMatrix {
        let mut out = IntMatrix::zeros(self.n);
        for c in p.coeffs().iter().rev() {
            out = self.mul(&out);
            out = out.add(&IntMatrix::identity(self.n).scale(c));
        }
        out
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.n, self.n, |i, j| {
            self[(i, j)].to_f64().expect("entry exceeds f64 range")
        })
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = BigInt;
    fn index(&self, (i, j): (usize, usize)) -> &BigInt {
        &self.entries[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut BigInt {
        &mut self.entries[i * self.n + j]
    }
}

impl std::fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for i in 0..self.n {
            write!(f, "[")?;
            for j in 0..self.n {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self[(i, j)])?;
            }
            writeln!(f, "]")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SpectralReport {
    pub eigenvalues: Vec<Complex<f64>>,
    pub moduli: Vec<f64>,
    pub distinct: bool,
    pub off_unit_circle: bool,
    pub margin: f64,
}

/// Numeric eigenvalue screen: every eigenvalue must be off the unit
/// circle and away from every other eigenvalue by at least tol.
pub fn spectral_classify(a: &IntMatrix, tol: f64) -> Result<SpectralReport, MatrixError> {
    let eig = a.to_f64().complex_eigenvalues();
    let eigenvalues: Vec<Complex<f64>> = eig.iter().copied().collect();
    let moduli: Vec<f64> = eigenvalues.iter().map(|l| l.norm()).collect();
    let mut margin = f64::INFINITY;
    for m in &moduli {
        margin = margin.min((m - 1.0).abs());
    }
    let off_unit_circle = margin > tol;
    let mut sep = f64::INFINITY;
    for i in 0..eigenvalues.len() {
        for j in i + 1..eigenvalues.len() {
            sep = sep.min((eigenvalues[i] - eigenvalues[j]).norm());
        }
    }
    margin = margin.min(sep);
    let distinct = sep > tol;
    let report = SpectralReport {
        eigenvalues,
        moduli,
        distinct,
        off_unit_circle,
        margin,
    };
    if !distinct || !off_unit_circle {
        return Err(MatrixError::MarginTooSmall {
            margin: report.margin,
            tol,
        });
    }
    Ok(report)
}

/// Factor a monic square-free integer polynomial into monic irreducible
/// integer factors: rational-root peeling, then Kronecker interpolation
/// for higher-degree factors. Degrees here are desk-scale (<= 8).
pub fn factor_over_rationals(p: &IntPoly) -> Result<Vec<IntPoly>, MatrixError> {
    assert!(p.is_monic(), "factorization expects a monic polynomial");
    if !p.is_squarefree() {
        return Err(MatrixError::NotSquareFree);
    }
    let mut factors = Vec::new();
    let mut rem = p.clone();
    // Integer roots divide the constant term (monic => rational roots are
    // integers).
    loop {
        let Some(deg) = rem.degree() else { break };
        if deg == 0 {
            break;
        }
        let c0 = rem.coeff(0);
        if c0.is_zero() {
            let lin = IntPoly::from_i64(&[0, 1]);
            rem = rem.div_exact(&lin).unwrap();
            factors.push(lin);
            continue;
        }
        let mut found = false;
        for d in divisors(&c0) {
            for root in [d.clone(), -&d] {
                if rem.eval(&root).is_zero() {
                    let lin = IntPoly::new(vec![-&root, BigInt::one()]);
                    rem = rem.div_exact(&lin).unwrap();
                    factors.push(lin);
                    found = true;
                    break;
                }
            }
            if found {
                break;
            }
        }
        if !found {
            break;
        }
    }
    factor_rootless(&rem, &mut factors);
    factors.sort_by(|a, b| {
        a.degree()
            .cmp(&b.degree())
            .then_with(|| format!("{a:?}").cmp(&format!("{b:?}")))
    });
    debug_assert_eq!(
        factors.iter().fold(IntPoly::one(), |acc, f| acc.mul(f)),
        *p
    );
    Ok(factors)
}

/// Kronecker search: find a monic factor of degree g by interpolating
/// through divisor choices of p at g+1 sample points. Recurse on both
/// halves. `rem` is monic with no integer roots.
fn factor_rootless(rem: &IntPoly, out: &mut Vec<IntPoly>) {
    let Some(deg) = rem.degree() else { return };
    if deg == 0 {
        return;
    }
    if deg <= 3 {
        // No rational roots => irreducible for degree <= 3.
        out.push(rem.clone());
        return;
    }
    for g in 2..=deg / 2 {
        if let Some(f) = kronecker_factor(rem, g) {
            let q = rem.div_exact(&f).unwrap();
            factor_rootless(&f, out);
            factor_rootless(&q, out);
            return;
        }
    }
    out.push(rem.clone());
}

fn sample_points(count: usize) -> Vec<BigInt> {
    // 0, 1, -1, 2, -2, ...
    let mut pts = Vec::with_capacity(count);
    let mut v: i64 = 0;
    while pts.len() < count {
        pts.push(BigInt::from(v));
        if v > 0 && pts.len() < count {
            pts.push(BigInt::from(-v));
        }
        v += 1;
    }
    pts
}

fn divisors(n: &BigInt) -> Vec<BigInt> {
    let n = n.abs();
    let mut out = Vec::new();
    let mut d = BigInt::one();
    while &d * &d <= n {
        if (&n % &d).is_zero() {
            out.push(d.clone());
            let q = &n / &d;
            if q != d {
                out.push(q);
            }
        }
        d += 1;
    }
    out.sort();
    out
}

fn kronecker_factor(p: &IntPoly, g: usize) -> Option<IntPoly> {
    let pts = sample_points(g + 1);
    // Candidate values at each point: signed divisors of p(x_j). p has no
    // integer roots so every p(x_j) is nonzero.
    let value_sets: Vec<Vec<BigInt>> = pts
        .iter()
        .map(|x| {
            let px = p.eval(x);
            let mut vals = Vec::new();
            for d in divisors(&px) {
                vals.push(d.clone());
                vals.push(-d);
            }
            vals
        })
        .collect();
    let mut choice = vec![0usize; g + 1];
    loop {
        let values: Vec<BigInt> = choice
            .iter()
            .enumerate()
            .map(|(j, &c)| value_sets[j][c].clone())
            .collect();
        if let Some(f) = interpolate_integer(&pts, &values) {
            if f.degree() == Some(g) && f.is_monic() && p.div_exact(&f).is_some() {
                return Some(f);
            }
        }
        // advance mixed-radix counter
        let mut j = 0;
        loop {
            if j > g {
                return None;
            }
            choice[j] += 1;
            if choice[j] < value_sets[j].len() {
                break;
            }
            choice[j] = 0;
            j += 1;
        }
    }
}

/// Lagrange interpolation returning the polynomial only when all
/// coefficients are integers.
fn interpolate_integer(pts: &[BigInt], values: &[BigInt]) -> Option<IntPoly> {
    use num_rational::BigRational;
    let n = pts.len();
    let mut acc = vec![BigRational::zero(); n];
    for i in 0..n {
        // basis_i = prod_{j != i} (x - x_j) / (x_i - x_j)
        let mut denom = BigRational::one();
        for (j, xj) in pts.iter().enumerate() {
            if j != i {
                denom *= BigRational::from(&pts[i] - xj);
            }
        }
        let mut basis = vec![BigRational::one()];
        for (j, xj) in pts.iter().enumerate() {
            if j == i {
                continue;
            }
            let xjr = BigRational::from(xj.clone());
            let mut next = vec![BigRational::zero(); basis.len() + 1];
            for (d, c) in basis.iter().enumerate() {
                next[d + 1] += c;
                next[d] -= &xjr * c;
            }
            basis = next;
        }
        let scale = BigRational::from(values[i].clone()) / denom;
        for (d, c) in basis.iter().enumerate() {
            acc[d] += &scale * c;
        }
    }
    let mut coeffs = Vec::with_capacity(n);
    for c in acc {
        if !c.denom().is_one() {
            return None;
        }
        coeffs.push(c.numer().clone());
    }
    Some(IntPoly::new(coeffs))
}

/// Block rational canonical data for a selected power of the input.
#[derive(Clone, Debug)]
pub struct CanonicalSetup {
    pub power: u32,
    pub blocks: Vec<IntPoly>,
    pub basis_change: IntMatrix,
    pub block_matrix: IntMatrix,
    pub m_per_block: Vec<BigInt>,
    pub m_max: BigInt,
    pub k: usize,
    pub n_dim: usize,
}

impl CanonicalSetup {
    pub fn block_degrees(&self) -> Vec<usize> {
        self.blocks.iter().map(|p| p.degree().unwrap()).collect()
    }

    /// Starting row index of each block in the canonical coordinates.
    pub fn block_offsets(&self) -> Vec<usize> {
        let mut off = 0;
        self.block_degrees()
            .iter()
            .map(|&d| {
                let o = off;
                off += d;
                o
            })
            .collect()
    }
}

/// Companion matrix: 1's on the subdiagonal, negated coefficients in the
/// last column.
pub fn companion(p: &IntPoly) -> IntMatrix {
    let d = p.degree().expect("companion of nonzero polynomial");
    assert!(p.is_monic());
    let mut m = IntMatrix::zeros(d);
    for i in 1..d {
        m[(i, i - 1)] = BigInt::one();
    }
    for i in 0..d {
        m[(i, d - 1)] = -p.coeff(i);
    }
    m
}

/// Build the block rational canonical form of `a` given the distinct
/// irreducible factors of its characteristic polynomial. The returned
/// basis_change Q is an integer matrix with block_matrix * Q = Q * a.
pub fn block_rcf(a: &IntMatrix, factors: &[IntPoly]) -> Result<CanonicalSetup, MatrixError> {
    let n = a.n;
    let char_p = a.char_poly();
    // Columns of P: per block, the cyclic basis v, a v, ..., a^{d-1} v with
    // v = q_i(a) e_j for the first e_j giving a nonzero image.
    let mut p_cols: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for (bi, p) in factors.iter().enumerate() {
        let q = char_p.div_exact(p).expect("factor divides char poly");
        let qa = a.eval_poly(&q);
        let d = p.degree().unwrap();
        let mut v = None;
        for j in 0..n {
            let mut e = vec![BigInt::zero(); n];
            e[j] = BigInt::one();
            let cand = qa.mul_vec(&e);
            if cand.iter().any(|c| !c.is_zero()) {
                v = Some(cand);
                break;
            }
        }
        let mut v = v.ok_or(MatrixError::DegenerateVector { block: bi })?;
        for _ in 0..d {
            p_cols.push(v.clone());
            v = a.mul_vec(&v);
        }
    }
    if p_cols.len() != n {
        return Err(MatrixError::DegenerateVector { block: factors.len() });
    }
    let mut p_mat = IntMatrix::zeros(n);
    for (j, col) in p_cols.iter().enumerate() {
        for i in 0..n {
            p_mat[(i, j)] = col[i].clone();
        }
    }
    if p_mat.det().is_zero() {
        return Err(MatrixError::DegenerateVector { block: 0 });
    }
    // a P = P C  =>  C adj(P) = adj(P) a.
    let basis_change = p_mat.adjugate();
    let block_matrix = IntMatrix::diag_blocks(&factors.iter().map(companion).collect::<Vec<_>>());
    debug_assert_eq!(
        block_matrix.mul(&basis_change),
        basis_change.mul(a),
        "conjugation identity"
    );
    let m_per_block: Vec<BigInt> = factors.iter().map(|p| p.norm_inf()).collect();
    let m_max = m_per_block.iter().cloned().max().unwrap();
    Ok(CanonicalSetup {
        power: 1,
        blocks: factors.to_vec(),
        basis_change,
        block_matrix,
        m_per_block,
        m_max,
        k: factors.len(),
        n_dim: n,
    })
}

/// Find the smallest power n <= max_power such that char(A^n) is
/// square-free and every irreducible factor has a dominant coefficient,
/// then return the full canonical setup for A^n.
pub fn select_power(a: &IntMatrix, max_power: u32) -> Result<CanonicalSetup, MatrixError> {
    for n in 1..=max_power {
        let an = a.pow(n);
        let c = an.char_poly();
        if !c.is_squarefree() {
            continue;
        }
        let factors = match factor_over_rationals(&c) {
            Ok(f) => f,
            Err(_) => continue,
        };
        if factors.iter().any(|p| p.degree() == Some(1)) {
            // A linear block means an integer eigenvalue of modulus 1 for
            // an SL matrix; rejected upstream, and no power repairs it.
            continue;
        }
        if !factors.iter().all(|p| p.dominant_coefficient()) {
            continue;
        }
        let mut setup = block_rcf(&an, &factors)?;
        setup.power = n;
        return Ok(setup);
    }
    Err(MatrixError::PowerSearchExhausted { max_power })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sol() -> IntMatrix {
        IntMatrix::from_rows_i64(&[vec![2, 1], vec![1, 1]])
    }

    fn four_dim() -> IntMatrix {
        IntMatrix::diag_blocks(&[
            sol(),
            IntMatrix::from_rows_i64(&[vec![3, 1], vec![2, 1]]),
        ])
    }

    #[test]
    fn char_poly_examples() {
        assert_eq!(sol().char_poly(), IntPoly::from_i64(&[1, -3, 1]));
        assert_eq!(
            IntMatrix::identity(3).char_poly(),
            IntPoly::from_i64(&[-1, 3, -3, 1])
        );
        let p = four_dim().char_poly();
        let expect = IntPoly::from_i64(&[1, -3, 1]).mul(&IntPoly::from_i64(&[1, -4, 1]));
        assert_eq!(p, expect);
    }

    #[test]
    fn determinants_and_inverse() {
        assert_eq!(sol().det(), BigInt::one());
        assert_eq!(four_dim().det(), BigInt::one());
        let inv = sol().inverse_unimodular();
        assert_eq!(inv, IntMatrix::from_rows_i64(&[vec![1, -1], vec![-1, 2]]));
        assert_eq!(sol().mul(&inv), IntMatrix::identity(2));
        // adjugate identity: A * adj(A) = det(A) * I
        let m = IntMatrix::from_rows_i64(&[vec![2, 0, 1], vec![1, 3, -1], vec![0, 5, 2]]);
        let d = m.det();
        assert_eq!(m.mul(&m.adjugate()), IntMatrix::identity(3).scale(&d));
    }

    #[test]
    fn spectral_reports() {
        let r = spectral_classify(&sol(), 1e-9).unwrap();
        let mut moduli = r.moduli.clone();
        moduli.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((moduli[0] - 0.3819660).abs() < 1e-6);
        assert!((moduli[1] - 2.6180339).abs() < 1e-6);
        assert!(matches!(
            spectral_classify(&IntMatrix::identity(2), 1e-9),
            Err(MatrixError::MarginTooSmall { .. })
        ));
        let rot = IntMatrix::from_rows_i64(&[vec![0, -1], vec![1, 0]]);
        assert!(matches!(
            spectral_classify(&rot, 1e-9),
            Err(MatrixError::MarginTooSmall { .. })
        ));
    }

    #[test]
    fn factorization() {
        let p = IntPoly::from_i64(&[1, -3, 1]);
        assert_eq!(factor_over_rationals(&p).unwrap(), vec![p.clone()]);
        let q = IntPoly::from_i64(&[1, -4, 1]);
        let prod = p.mul(&q);
        assert_eq!(factor_over_rationals(&prod).unwrap(), vec![p.clone(), q]);
        let dsq = IntPoly::from_i64(&[-1, 0, 1]); // z^2 - 1
        assert_eq!(
            factor_over_rationals(&dsq).unwrap(),
            vec![IntPoly::from_i64(&[-1, 1]), IntPoly::from_i64(&[1, 1])]
        );
        let sq = p.mul(&p);
        assert!(matches!(
            factor_over_rationals(&sq),
            Err(MatrixError::NotSquareFree)
        ));
    }

    #[test]
    fn kronecker_finds_quartic_split() {
        // (z^2 + z + 1)(z^2 - z - 1): no rational roots, needs the
        // degree-2 interpolation search.
        let a = IntPoly::from_i64(&[1, 1, 1]);
        let b = IntPoly::from_i64(&[-1, -1, 1]);
        let prod = a.mul(&b);
        let mut fs = factor_over_rationals(&prod).unwrap();
        fs.sort_by_key(|f| f.coeff(0).clone());
        assert_eq!(fs, vec![b, a]);
    }

    #[test]
    fn companion_convention() {
        let c = companion(&IntPoly::from_i64(&[1, -3, 1]));
        assert_eq!(c, IntMatrix::from_rows_i64(&[vec![0, -1], vec![1, 3]]));
        assert_eq!(c.char_poly(), IntPoly::from_i64(&[1, -3, 1]));
    }

    #[test]
    fn block_rcf_sol() {
        let a = sol();
        let factors = factor_over_rationals(&a.char_poly()).unwrap();
        let setup = block_rcf(&a, &factors).unwrap();
        assert_eq!(
            setup.block_matrix,
            IntMatrix::from_rows_i64(&[vec![0, -1], vec![1, 3]])
        );
        assert_eq!(
            setup.block_matrix.mul(&setup.basis_change),
            setup.basis_change.mul(&a)
        );
        assert_eq!(setup.m_max, BigInt::from(3));
        assert_eq!(setup.block_matrix.det(), BigInt::one());
    }

    #[test]
    fn block_rcf_four_dim() {
        let a = four_dim();
        let factors = factor_over_rationals(&a.char_poly()).unwrap();
        let setup = block_rcf(&a, &factors).unwrap();
        assert_eq!(setup.k, 2);
        assert_eq!(
            setup.block_matrix.mul(&setup.basis_change),
            setup.basis_change.mul(&a)
        );
        assert_eq!(setup.block_matrix.char_poly(), a.char_poly());
        assert_eq!(setup.block_matrix.det(), BigInt::one());
        assert_eq!(setup.block_offsets(), vec![0, 2]);
    }

    #[test]
    fn power_selection() {
        let s = select_power(&sol(), 8).unwrap();
        assert_eq!(s.power, 1);
        assert_eq!(s.blocks, vec![IntPoly::from_i64(&[1, -3, 1])]);
        let s4 = select_power(&four_dim(), 8).unwrap();
        assert_eq!(s4.power, 1);
        assert!(s4.blocks.iter().all(|p| p.dominant_coefficient()));
    }

    #[test]
    fn matrix_text_parse() {
        let m = IntMatrix::parse_text("2\n2 1\n1 1\n").unwrap();
        assert_eq!(m, sol());
        assert!(IntMatrix::parse_text("2\n2 1\n1\n").is_err());
        assert!(IntMatrix::parse_text("x").is_err());
        assert!(IntMatrix::parse_text("2\n2 1\n1 1\n7").is_err());
    }

    #[test]
    fn power_search_beyond_one() {
        // char(A) = z^4 - z^3 - z^2 - z + 1 has |p|_inf = 1, |p|_1 = 5:
        // no dominant coefficient at power 1. The search must find some
        // higher power (frozen once found).
        let a = companion(&IntPoly::from_i64(&[1, -1, -1, -1, 1]));
        assert_eq!(a.det(), BigInt::one());
        if spectral_classify(&a, 1e-9).is_ok() {
            let s = select_power(&a, 12).unwrap();
            assert!(s.power > 1);
            assert!(s.blocks.iter().all(|p| p.dominant_coefficient()));
        }
    }
}
