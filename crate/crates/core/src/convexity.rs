//! Geometry of the real completion: absolute Jordan form, one-parameter
//! subgroups, the isometric lattice embedding, the projection bound used
//! by the divergence estimate, and an empirical probe of almost-convexity
//! failure on the Cayley graph.
//!
//! Everything analytic here is floating point with explicit tolerances;
//! the combinatorial probe at the end is exact integer arithmetic.

use std::collections::{HashMap, HashSet};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use thiserror::Error;

use crate::group::{Group, GroupElement, GroupError};
use crate::matrix::IntMatrix;

pub const DEFAULT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ConvexityError {
    #[error("numerical failure: residual {residual} exceeds tolerance {tol}")]
    NumericalFailure { residual: f64, tol: f64 },
    #[error("isometry relation residual {residual} exceeds tolerance {tol}")]
    RelationResidual { residual: f64, tol: f64 },
    #[error("required eigenspace component vanishes (block {block})")]
    ComponentVanishes { block: usize },
    #[error("divergence bracket {bracket} is nonpositive; increase the height offset")]
    ThresholdNotMet { bracket: f64 },
    #[error(transparent)]
    Resource(#[from] GroupError),
}

/// Shape of one block of the absolute Jordan form.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum BlockKind {
    /// 1x1 real block (eigenvalue modulus on the diagonal).
    Real,
    /// 2x2 rotation-scaling block from a complex-conjugate pair (or a
    /// paired repeated negative real eigenvalue, with angle pi).
    ComplexPair,
    /// m x m real block modulus * (I + nilpotent); kept for the
    /// closed-form flow even though integer inputs with distinct
    /// eigenvalues never produce one.
    RealChain,
}

#[derive(Clone, Debug)]
pub struct JordanBlock {
    pub kind: BlockKind,
    pub dim: usize,
    /// Eigenvalue modulus.
    pub modulus: f64,
    /// Rotation angle (0 for real blocks).
    pub theta: f64,
    /// The absolute (unsigned) block B(1).
    pub matrix: DMatrix<f64>,
    /// Whether the original eigenvalue was negative real: the sign is
    /// peeled off into the flip word, not into the flow.
    pub negated: bool,
}

impl JordanBlock {
    pub fn real(lambda: f64) -> Self {
        JordanBlock {
            kind: BlockKind::Real,
            dim: 1,
            modulus: lambda.abs(),
            theta: 0.0,
            matrix: DMatrix::from_element(1, 1, lambda.abs()),
            negated: lambda < 0.0,
        }
    }

    pub fn complex_pair(modulus: f64, theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        JordanBlock {
            kind: BlockKind::ComplexPair,
            dim: 2,
            modulus,
            theta,
            matrix: DMatrix::from_row_slice(2, 2, &[c, -s, s, c]).scale(modulus),
            negated: false,
        }
    }

    /// A real chain block lambda*I + N with ones on the superdiagonal.
    pub fn real_chain(lambda: f64, dim: usize) -> Self {
        assert!(lambda > 0.0 && dim >= 1);
        let mut m = DMatrix::from_diagonal_element(dim, dim, lambda);
        for i in 0..dim - 1 {
            m[(i, i + 1)] = 1.0;
        }
        JordanBlock {
            kind: BlockKind::RealChain,
            dim,
            modulus: lambda,
            theta: 0.0,
            matrix: m,
            negated: false,
        }
    }
}

/// The absolute Jordan form: A = S * P J P^-1 with J block diagonal in
/// the blocks below, S the sign word acting by negation on the flagged
/// blocks, and P the real conjugator.
#[derive(Clone, Debug)]
pub struct AbsJordan {
    pub blocks: Vec<JordanBlock>,
    pub conjugator: DMatrix<f64>,
    /// Inverse of the conjugator (cached).
    pub conjugator_inv: DMatrix<f64>,
    /// Indices of blocks whose sign was peeled off.
    pub sign_word: Vec<usize>,
}

impl AbsJordan {
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|b| b.dim).sum()
    }

    pub fn offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.blocks.len());
        let mut pos = 0;
        for b in &self.blocks {
            out.push(pos);
            pos += b.dim;
        }
        out
    }

    /// Block-diagonal flow matrix J^t = diag(B_i(t)).
    pub fn flow(&self, t: f64) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut pos = 0;
        for b in &self.blocks {
            let bt = one_param(b, t);
            m.view_mut((pos, pos), (b.dim, b.dim)).copy_from(&bt);
            pos += b.dim;
        }
        m
    }

    /// The sign matrix of a flip word (blockwise +-I).
    pub fn flip_matrix(&self, flips: &[bool]) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        let mut pos = 0;
        for (b, &f) in self.blocks.iter().zip(flips) {
            let s = if f { -1.0 } else { 1.0 };
            for i in 0..b.dim {
                m[(pos + i, pos + i)] = s;
            }
            pos += b.dim;
        }
        m
    }

    pub fn sign_flips(&self) -> Vec<bool> {
        let mut f = vec![false; self.blocks.len()];
        for &i in &self.sign_word {
            f[i] = true;
        }
        f
    }
}

/// Inverse iteration for the eigenvector of an (assumed simple)
/// eigenvalue.
fn eigenvector(a: &DMatrix<Complex<f64>>, lambda: Complex<f64>) -> DVector<Complex<f64>> {
    let n = a.nrows();
    let shift = lambda + Complex::new(1e-10, 1e-10);
    let shifted = a - DMatrix::from_diagonal_element(n, n, shift);
    let lu = shifted.lu();
    let mut v = DVector::from_fn(n, |i, _| Complex::new(1.0 + i as f64 * 0.25, 0.3));
    v /= Complex::new(v.norm(), 0.0);
    for _ in 0..60 {
        if let Some(w) = lu.solve(&v) {
            let norm = w.norm();
            if norm.is_finite() && norm > 0.0 {
                v = w / Complex::new(norm, 0.0);
            }
        }
    }
    v
}

/// Absolute Jordan form of an integer matrix whose eigenvalues are
/// distinct (numerically), with repeated negative real eigenvalues
/// additionally supported through the pairing rule (angle-pi rotation
/// blocks).
pub fn abs_jordan(a: &IntMatrix, tol: f64) -> Result<AbsJordan, ConvexityError> {
    let af = a.to_f64();
    let n = af.nrows();
    let ac = af.map(|x| Complex::new(x, 0.0));
    let mut eig: Vec<Complex<f64>> = af.complex_eigenvalues().iter().copied().collect();
    // Deterministic order: by real part, then imaginary part.
    eig.sort_by(|x, y| (x.re, x.im).partial_cmp(&(y.re, y.im)).unwrap());

    let real_tol = 1e-8 * (1.0 + af.norm());
    let mut blocks: Vec<JordanBlock> = Vec::new();
    let mut sign_word: Vec<usize> = Vec::new();
    let mut columns: Vec<DVector<f64>> = Vec::new();

    // Split the spectrum.
    let mut neg_real: Vec<f64> = Vec::new();
    let mut pos_real: Vec<f64> = Vec::new();
    let mut complex_upper: Vec<Complex<f64>> = Vec::new();
    for l in &eig {
        if l.im.abs() <= real_tol {
            if l.re < 0.0 {
                neg_real.push(l.re);
            } else {
                pos_real.push(l.re);
            }
        } else if l.im > 0.0 {
            complex_upper.push(*l);
        }
    }

    // Repeated negative real eigenvalues pair into angle-pi rotation
    // blocks; the leftover singles keep a sign flip instead.
    let mut i = 0;
    while i < neg_real.len() {
        if i + 1 < neg_real.len() && (neg_real[i] - neg_real[i + 1]).abs() <= real_tol {
            let lambda = neg_real[i];
            let space = real_nullspace(&af, lambda, 2, tol)?;
            columns.push(space[0].clone());
            columns.push(space[1].clone());
            blocks.push(JordanBlock::complex_pair(-lambda, std::f64::consts::PI));
            i += 2;
        } else {
            let v = eigenvector(&ac, Complex::new(neg_real[i], 0.0));
            columns.push(realize(&v));
            sign_word.push(blocks.len());
            blocks.push(JordanBlock::real(neg_real[i]));
            i += 1;
        }
    }
    for &lambda in &pos_real {
        let v = eigenvector(&ac, Complex::new(lambda, 0.0));
        columns.push(realize(&v));
        blocks.push(JordanBlock::real(lambda));
    }
    for &l in &complex_upper {
        let v = eigenvector(&ac, l);
        let re: DVector<f64> = v.map(|c| c.re);
        let im: DVector<f64> = v.map(|c| -c.im);
        let scale = re.norm().max(im.norm());
        columns.push(re / scale);
        columns.push(im / scale);
        blocks.push(JordanBlock::complex_pair(l.norm(), l.arg()));
    }

    let mut p = DMatrix::zeros(n, n);
    for (j, c) in columns.iter().enumerate() {
        p.set_column(j, c);
    }
    let Some(p_inv) = p.clone().try_inverse() else {
        return Err(ConvexityError::NumericalFailure {
            residual: f64::INFINITY,
            tol,
        });
    };
    let jordan = AbsJordan {
        blocks,
        conjugator: p.clone(),
        conjugator_inv: p_inv,
        sign_word,
    };
    // Residual of A P = P S J.
    let sj = jordan.flip_matrix(&jordan.sign_flips()) * jordan.flow(1.0);
    let residual = (&af * &p - &p * sj).norm() / (1.0 + af.norm());
    // Eigenvector extraction is good to roughly sqrt(machine eps) for
    // mildly conditioned problems; the configured tol guards relations.
    if residual > tol.max(1e-9) {
        return Err(ConvexityError::NumericalFailure { residual, tol });
    }
    Ok(jordan)
}

fn realize(v: &DVector<Complex<f64>>) -> DVector<f64> {
    // Rotate the complex phase away, then take the real part.
    let (imax, _) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.norm().partial_cmp(&b.1.norm()).unwrap())
        .unwrap();
    let phase = v[imax] / Complex::new(v[imax].norm(), 0.0);
    let w: DVector<f64> = v.map(|c| (c / phase).re);
    let norm = w.norm();
    w / norm
}

/// Orthonormal basis of the (expected `want`-dimensional) nullspace of
/// A - lambda I, via SVD.
fn real_nullspace(
    a: &DMatrix<f64>,
    lambda: f64,
    want: usize,
    tol: f64,
) -> Result<Vec<DVector<f64>>, ConvexityError> {
    let n = a.nrows();
    let shifted = a - DMatrix::from_diagonal_element(n, n, lambda);
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.as_ref().unwrap();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| svd.singular_values[i].partial_cmp(&svd.singular_values[j]).unwrap());
    let cutoff = tol.max(1e-7) * (1.0 + a.norm());
    let mut out = Vec::new();
    for &i in idx.iter().take(want) {
        if svd.singular_values[i] > cutoff {
            return Err(ConvexityError::NumericalFailure {
                residual: svd.singular_values[i],
                tol,
            });
        }
        out.push(v_t.row(i).transpose());
    }
    Ok(out)
}

/// The one-parameter subgroup through a block: B(0) = I, B(1) = block,
/// B(s+t) = B(s) B(t).
pub fn one_param(block: &JordanBlock, t: f64) -> DMatrix<f64> {
    let r = block.modulus;
    match block.kind {
        BlockKind::Real => DMatrix::from_element(1, 1, r.powf(t)),
        BlockKind::ComplexPair => {
            let (s, c) = (block.theta * t).sin_cos();
            DMatrix::from_row_slice(2, 2, &[c, -s, s, c]).scale(r.powf(t))
        }
        BlockKind::RealChain => {
            let m = block.dim;
            // log of the unipotent part, a finite series.
            let u = block.matrix.clone() / r - DMatrix::identity(m, m);
            let mut l = DMatrix::zeros(m, m);
            let mut pw = DMatrix::identity(m, m);
            for j in 1..m {
                pw = &pw * &u;
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                l += pw.clone() * (sign / j as f64);
            }
            // exp(t L), again finite because L is nilpotent.
            let mut e = DMatrix::identity(m, m);
            let mut term = DMatrix::identity(m, m);
            for j in 1..m {
                term = (&term * &l).scale(t / j as f64);
                e += term.clone();
            }
            e.scale(r.powf(t))
        }
    }
}

/// Projection to the coordinates of a block on which the flow acts
/// conformally: everything for simple blocks, the top chain coordinate
/// (last one or two) for chains.
pub fn pi_m(block: &JordanBlock, v: &DVector<f64>) -> DVector<f64> {
    match block.kind {
        BlockKind::Real | BlockKind::ComplexPair => v.clone(),
        BlockKind::RealChain => {
            let mut w = DVector::zeros(v.len());
            w[v.len() - 1] = v[v.len() - 1];
            w
        }
    }
}

/// The conformal factor of the flow on the pi_m coordinates: modulus^t
/// times a rotation for complex blocks.
pub fn pi_m_factor(block: &JordanBlock, t: f64) -> DMatrix<f64> {
    let r = block.modulus.powf(t);
    match block.kind {
        BlockKind::ComplexPair => {
            let (s, c) = (block.theta * t).sin_cos();
            DMatrix::from_row_slice(2, 2, &[c, -s, s, c]).scale(r)
        }
        BlockKind::Real => DMatrix::from_element(1, 1, r),
        BlockKind::RealChain => DMatrix::from_diagonal_element(block.dim, block.dim, r),
    }
}

/// Residual of the equivariance identity pi_m(B(t) v) = r^t R(t) pi_m(v).
pub fn pi_m_equivariance_residual(block: &JordanBlock, t: f64, v: &DVector<f64>) -> f64 {
    let lhs = pi_m(block, &(one_param(block, t) * v));
    let rhs = pi_m_factor(block, t) * pi_m(block, v);
    (lhs - rhs).norm()
}

/// Both sides of the telescoped projection bound: factors v_1 .. v_k
/// composed with flow jumps t_1 .. t_{k-1} between them. Returns
/// (lhs, rhs) with lhs <= rhs guaranteed analytically.
pub fn lemma72_bound(
    block: &JordanBlock,
    vectors: &[DVector<f64>],
    times: &[f64],
) -> (f64, f64) {
    assert_eq!(times.len() + 1, vectors.len());
    let mut acc_t = 0.0;
    let mut sum = DVector::zeros(block.dim);
    let mut rhs = 0.0;
    for (j, v) in vectors.iter().enumerate() {
        if j > 0 {
            acc_t += times[j - 1];
        }
        sum += one_param(block, acc_t) * v;
        rhs += block.modulus.powf(acc_t) * pi_m(block, v).norm();
    }
    (pi_m(block, &sum).norm(), rhs)
}

/// An isometry of the model space R^n x R: x |-> tau + F J^sigma x on
/// the fiber, s |-> s + sigma on the height coordinate, with F the flip
/// word's sign matrix.
#[derive(Clone, Debug)]
pub struct IsometryElement {
    pub tau: DVector<f64>,
    pub sigma: f64,
    pub flips: Vec<bool>,
}

impl IsometryElement {
    pub fn identity(jordan: &AbsJordan) -> Self {
        IsometryElement {
            tau: DVector::zeros(jordan.dim()),
            sigma: 0.0,
            flips: vec![false; jordan.blocks.len()],
        }
    }
}

pub fn iso_compose(jordan: &AbsJordan, g1: &IsometryElement, g2: &IsometryElement) -> IsometryElement {
    let f1 = jordan.flip_matrix(&g1.flips);
    IsometryElement {
        tau: &g1.tau + f1 * jordan.flow(g1.sigma) * &g2.tau,
        sigma: g1.sigma + g2.sigma,
        flips: g1
            .flips
            .iter()
            .zip(&g2.flips)
            .map(|(a, b)| a ^ b)
            .collect(),
    }
}

pub fn iso_inverse(jordan: &AbsJordan, g: &IsometryElement) -> IsometryElement {
    let f = jordan.flip_matrix(&g.flips);
    IsometryElement {
        tau: -(jordan.flow(-g.sigma) * f * &g.tau),
        sigma: -g.sigma,
        flips: g.flips.clone(),
    }
}

pub fn iso_apply(
    jordan: &AbsJordan,
    g: &IsometryElement,
    x: &DVector<f64>,
    s: f64,
) -> (DVector<f64>, f64) {
    let f = jordan.flip_matrix(&g.flips);
    (&g.tau + f * jordan.flow(g.sigma) * x, s + g.sigma)
}

/// The lattice embedding: fiber generators map to translations by the
/// Jordan coordinates of the basis vectors, the height generator to the
/// unit height shift carrying the sign word.
#[derive(Clone, Debug)]
pub struct LatticeEmbedding {
    pub jordan: AbsJordan,
    /// Images of the standard fiber basis vectors.
    pub basis_images: Vec<IsometryElement>,
    /// Image of the height generator.
    pub t_image: IsometryElement,
}

impl LatticeEmbedding {
    /// Embed an arbitrary integer fiber vector.
    pub fn embed_fiber(&self, v: &[f64]) -> IsometryElement {
        let tau = &self.jordan.conjugator_inv * DVector::from_column_slice(v);
        IsometryElement {
            tau,
            sigma: 0.0,
            flips: vec![false; self.jordan.blocks.len()],
        }
    }

    pub fn embed_element(&self, g: &GroupElement) -> IsometryElement {
        let v: Vec<f64> = g.v.iter().map(big_to_f64).collect();
        let fiber = self.embed_fiber(&v);
        let mut out = fiber;
        let t_pow = self.height_power(g.h);
        out = iso_compose(&self.jordan, &out, &t_pow);
        out
    }

    fn height_power(&self, h: i64) -> IsometryElement {
        let mut out = IsometryElement::identity(&self.jordan);
        let step = if h >= 0 {
            self.t_image.clone()
        } else {
            iso_inverse(&self.jordan, &self.t_image)
        };
        for _ in 0..h.unsigned_abs() {
            out = iso_compose(&self.jordan, &out, &step);
        }
        out
    }
}

fn big_to_f64(b: &num_bigint::BigInt) -> f64 {
    use num_traits::ToPrimitive;
    b.to_f64().expect("coordinate exceeds f64 range")
}

/// Build the embedding from the group's block matrix and verify the
/// defining relations on random sample points.
pub fn lattice_embed(group: &Group, tol: f64) -> Result<LatticeEmbedding, ConvexityError> {
    let a = &group.setup.block_matrix;
    let jordan = abs_jordan(a, tol.max(1e-7))?;
    let n = jordan.dim();
    let basis_images: Vec<IsometryElement> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            IsometryElement {
                tau: &jordan.conjugator_inv * DVector::from_column_slice(&e),
                sigma: 0.0,
                flips: vec![false; jordan.blocks.len()],
            }
        })
        .collect();
    let t_image = IsometryElement {
        tau: DVector::zeros(n),
        sigma: 1.0,
        flips: jordan.sign_flips(),
    };
    let emb = LatticeEmbedding {
        jordan,
        basis_images,
        t_image,
    };
    let residual = relation_residual(group, &emb, 100, 7_319);
    if residual > tol {
        return Err(ConvexityError::RelationResidual { residual, tol });
    }
    Ok(emb)
}

/// Worst residual of the defining relations evaluated at random sample
/// points: t v_i t^-1 = image of A e_i, and v_i v_j = v_j v_i.
pub fn relation_residual(
    group: &Group,
    emb: &LatticeEmbedding,
    samples: usize,
    seed: u64,
) -> f64 {
    let jordan = &emb.jordan;
    let n = jordan.dim();
    let a = &group.setup.block_matrix;
    let mut rng = StdRng::seed_from_u64(seed);
    let t_inv = iso_inverse(jordan, &emb.t_image);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let x = DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
        let s: f64 = rng.gen_range(-2.0..2.0);
        for i in 0..n {
            // t v_i t^-1 against the image of A e_i.
            let conj = iso_compose(
                jordan,
                &emb.t_image,
                &iso_compose(jordan, &emb.basis_images[i], &t_inv),
            );
            let col: Vec<f64> = (0..n).map(|r| big_to_f64(&a[(r, i)])).collect();
            let ave = emb.embed_fiber(&col);
            let (p1, s1) = iso_apply(jordan, &conj, &x, s);
            let (p2, s2) = iso_apply(jordan, &ave, &x, s);
            worst = worst.max((p1 - p2).norm() + (s1 - s2).abs());
            // Translations commute.
            for j in (i + 1)..n {
                let ij = iso_compose(jordan, &emb.basis_images[i], &emb.basis_images[j]);
                let ji = iso_compose(jordan, &emb.basis_images[j], &emb.basis_images[i]);
                let (q1, r1) = iso_apply(jordan, &ij, &x, s);
                let (q2, r2) = iso_apply(jordan, &ji, &x, s);
                worst = worst.max((q1 - q2).norm() + (r1 - r2).abs());
            }
        }
    }
    worst
}

/// Norm of the projection of an integer fiber vector onto one block of
/// the Jordan coordinates.
pub fn block_projection_norm(emb: &LatticeEmbedding, block: usize, v: &[f64]) -> f64 {
    let tau = &emb.jordan.conjugator_inv * DVector::from_column_slice(v);
    let off = emb.jordan.offsets()[block];
    let dim = emb.jordan.blocks[block].dim;
    tau.rows(off, dim).norm()
}

fn expanding_block(jordan: &AbsJordan) -> usize {
    let mut best = 0;
    for (i, b) in jordan.blocks.iter().enumerate() {
        if b.modulus > jordan.blocks[best].modulus {
            best = i;
        }
    }
    best
}

fn contracting_block(jordan: &AbsJordan) -> usize {
    let mut best = 0;
    for (i, b) in jordan.blocks.iter().enumerate() {
        if b.modulus < jordan.blocks[best].modulus {
            best = i;
        }
    }
    best
}

/// The sigma_j / tau_j pair: conjugate x up and y down by w0 = t^2,
/// multiply, and append opposite powers of w0. Exact integer group
/// arithmetic; only the nonvanishing checks are numeric.
pub fn sigma_tau(
    group: &Group,
    emb: &LatticeEmbedding,
    k: u32,
    j: u32,
    x: &GroupElement,
    y: &GroupElement,
    tol: f64,
) -> Result<(GroupElement, GroupElement), ConvexityError> {
    assert_eq!(x.h, 0, "x must be a height-0 element");
    assert_eq!(y.h, 0, "y must be a height-0 element");
    let exp = expanding_block(&emb.jordan);
    let con = contracting_block(&emb.jordan);
    let xv: Vec<f64> = x.v.iter().map(big_to_f64).collect();
    let yv: Vec<f64> = y.v.iter().map(big_to_f64).collect();
    if block_projection_norm(emb, exp, &xv) <= tol {
        return Err(ConvexityError::ComponentVanishes { block: exp });
    }
    if block_projection_norm(emb, con, &yv) <= tol {
        return Err(ConvexityError::ComponentVanishes { block: con });
    }
    let t = group.t_gen();
    let w0 = group.mul(&t, &t);
    let w0_inv = group.inv(&w0);
    let pow = |g: &GroupElement, e: u32| {
        let mut out = GroupElement::identity(group.dim());
        for _ in 0..e {
            out = group.mul(&out, g);
        }
        out
    };
    let w0k = pow(&w0, k);
    let w0k_inv = pow(&w0_inv, k);
    let xk = group.mul(&group.mul(&w0k, x), &w0k_inv);
    let yk = group.mul(&group.mul(&w0k_inv, y), &w0k);
    let xy = group.mul(&xk, &yk);
    let sigma = group.mul(&xy, &pow(&w0_inv, j));
    let tau = group.mul(&xy, &pow(&w0, j));
    Ok((sigma, tau))
}

/// The bracket of the closing estimate: positive once the height offset
/// clears the threshold.
pub fn divergence_bracket(emb: &LatticeEmbedding, j: u32) -> f64 {
    let jordan = &emb.jordan;
    let exp = expanding_block(jordan);
    let r = jordan.blocks[exp].modulus;
    let t0 = 1.0;
    let t_star = 2.0 * t0;
    let c = 2.0 / (r.powf(t0) - 1.0);
    let n = jordan.dim();
    // Projection norms of the fiber generators onto the expanding block.
    let mut norms: Vec<f64> = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        norms.push(block_projection_norm(emb, exp, &e));
    }
    let x1 = norms.iter().cloned().fold(0.0f64, f64::max);
    let a_star = x1;
    x1 - c * r.powf((-(j as f64) / 4.0 + 0.5) * t_star) * a_star
}

/// Main term of the divergence estimate at scale k: grows like
/// modulus^(k t*) once the bracket is positive.
pub fn divergence_estimate(
    emb: &LatticeEmbedding,
    k: u32,
    j: u32,
) -> Result<f64, ConvexityError> {
    let bracket = divergence_bracket(emb, j);
    if bracket <= 0.0 {
        return Err(ConvexityError::ThresholdNotMet { bracket });
    }
    let r = emb.jordan.blocks[expanding_block(&emb.jordan)].modulus;
    Ok(r.powf(2.0 * k as f64) * bracket)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Ac2Row {
    pub n: u32,
    pub max_inner_distance: u32,
    pub pairs_checked: u64,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ConvexityReport {
    pub rows: Vec<Ac2Row>,
}

impl ConvexityReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,max_inner_distance,pairs_checked\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{}\n",
                r.n, r.max_inner_distance, r.pairs_checked
            ));
        }
        out
    }
}

/// The almost-convexity probe on an abstract Cayley graph: for every
/// pair of sphere-n elements at graph distance <= 2 (measured through
/// arbitrary intermediate vertices), the shortest path that stays inside
/// the radius-n ball is computed exactly; the per-n maxima are reported.
fn ac2_generic<E, F>(
    identity: E,
    neighbors: F,
    n_max: u32,
    cap: usize,
) -> Result<Vec<Ac2Row>, ConvexityError>
where
    E: Clone + Eq + std::hash::Hash,
    F: Fn(&E) -> Vec<E>,
{
    let mut dist: HashMap<E, u32> = HashMap::new();
    dist.insert(identity.clone(), 0);
    let mut levels: Vec<Vec<E>> = vec![vec![identity]];
    for d in 1..=n_max {
        let mut next = Vec::new();
        for g in &levels[(d - 1) as usize] {
            for h in neighbors(g) {
                if !dist.contains_key(&h) {
                    dist.insert(h.clone(), d);
                    next.push(h);
                }
            }
        }
        if dist.len() > cap {
            return Err(GroupError::ResourceLimit { cap }.into());
        }
        levels.push(next);
    }
    let mut rows = Vec::new();
    for n in 1..=n_max {
        let sphere = &levels[n as usize];
        let index: HashMap<&E, usize> = sphere.iter().enumerate().map(|(i, g)| (g, i)).collect();
        let mut pairs_checked: u64 = 0;
        let mut max_inner: u32 = 0;
        for (ig, g) in sphere.iter().enumerate() {
            // Partners at outer distance <= 2, deduplicated by index order.
            let mut targets: HashSet<usize> = HashSet::new();
            for h1 in neighbors(g) {
                if let Some(&ih) = index.get(&h1) {
                    if ih > ig {
                        targets.insert(ih);
                    }
                }
                for h2 in neighbors(&h1) {
                    if let Some(&ih) = index.get(&h2) {
                        if ih > ig {
                            targets.insert(ih);
                        }
                    }
                }
            }
            if targets.is_empty() {
                continue;
            }
            pairs_checked += targets.len() as u64;
            // BFS from g inside the ball until all partners are reached.
            let mut inner: HashMap<E, u32> = HashMap::new();
            inner.insert(g.clone(), 0);
            let mut frontier = vec![g.clone()];
            let mut remaining = targets.len();
            let mut depth = 0;
            while remaining > 0 && !frontier.is_empty() {
                depth += 1;
                let mut next = Vec::new();
                for u in &frontier {
                    for w in neighbors(u) {
                        if dist.get(&w).is_some_and(|&dw| dw <= n) && !inner.contains_key(&w) {
                            inner.insert(w.clone(), depth);
                            if let Some(&iw) = index.get(&w) {
                                if targets.contains(&iw) {
                                    remaining -= 1;
                                    max_inner = max_inner.max(depth);
                                }
                            }
                            next.push(w);
                        }
                    }
                }
                frontier = next;
            }
            assert_eq!(remaining, 0, "ball must connect sphere pairs");
        }
        rows.push(Ac2Row {
            n,
            max_inner_distance: max_inner,
            pairs_checked,
        });
    }
    Ok(rows)
}

/// The probe on a torus-bundle group.
pub fn ac2_probe(group: &Group, n_max: u32, cap: usize) -> Result<ConvexityReport, ConvexityError> {
    let gens = group.generators();
    let rows = ac2_generic(
        GroupElement::identity(group.dim()),
        |g| gens.iter().map(|s| group.mul(g, s)).collect(),
        n_max,
        cap,
    )?;
    Ok(ConvexityReport { rows })
}

/// Control run on Z^2 with the standard generators, which is almost
/// convex: the maxima stay constant.
pub fn ac2_probe_z2(n_max: u32, cap: usize) -> Result<ConvexityReport, ConvexityError> {
    let rows = ac2_generic(
        (0i64, 0i64),
        |&(x, y)| vec![(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)],
        n_max,
        cap,
    )?;
    Ok(ConvexityReport { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{block_rcf, factor_over_rationals};

    fn sol_group() -> Group {
        let a = IntMatrix::from_rows_i64(&[vec![2, 1], vec![1, 1]]);
        let factors = factor_over_rationals(&a.char_poly()).unwrap();
        Group::new(block_rcf(&a, &factors).unwrap())
    }

    fn block_types() -> Vec<JordanBlock> {
        vec![
            JordanBlock::real(2.618),
            JordanBlock::complex_pair(1.7, 0.83),
            JordanBlock::real_chain(1.9, 2),
        ]
    }

    #[test]
    fn sol_abs_jordan_moduli() {
        let a = IntMatrix::from_rows_i64(&[vec![2, 1], vec![1, 1]]);
        let j = abs_jordan(&a, 1e-7).unwrap();
        let mut moduli: Vec<f64> = j.blocks.iter().map(|b| b.modulus).collect();
        moduli.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let s5 = 5f64.sqrt();
        assert!((moduli[0] - (3.0 - s5) / 2.0).abs() < 1e-9);
        assert!((moduli[1] - (3.0 + s5) / 2.0).abs() < 1e-9);
        assert!(j.sign_word.is_empty());
    }

    #[test]
    fn negative_pair_becomes_pi_rotation() {
        let a = IntMatrix::from_rows_i64(&[vec![-1, 0], vec![0, -1]]);
        let j = abs_jordan(&a, 1e-7).unwrap();
        assert_eq!(j.blocks.len(), 1);
        let b = &j.blocks[0];
        assert_eq!(b.kind, BlockKind::ComplexPair);
        assert!((b.modulus - 1.0).abs() < 1e-9);
        assert!((b.theta - std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn one_param_group_laws() {
        let mut rng = StdRng::seed_from_u64(42);
        for block in block_types() {
            let b0 = one_param(&block, 0.0);
            assert!((b0 - DMatrix::identity(block.dim, block.dim)).norm() < 1e-12);
            let b1 = one_param(&block, 1.0);
            assert!((b1 - &block.matrix).norm() < 1e-9, "{:?}", block.kind);
            for _ in 0..50 {
                let s: f64 = rng.gen_range(-3.0..3.0);
                let t: f64 = rng.gen_range(-3.0..3.0);
                let lhs = one_param(&block, s + t);
                let rhs = one_param(&block, s) * one_param(&block, t);
                assert!((lhs - rhs).norm() < 1e-9, "{:?}", block.kind);
            }
        }
    }

    #[test]
    fn pi_m_equivariance() {
        let mut rng = StdRng::seed_from_u64(7);
        for block in block_types() {
            for _ in 0..50 {
                let t: f64 = rng.gen_range(-3.0..3.0);
                let v = DVector::from_fn(block.dim, |_, _| rng.gen_range(-2.0..2.0));
                assert!(pi_m_equivariance_residual(&block, t, &v) < 1e-9);
            }
        }
    }

    #[test]
    fn projection_bound_holds() {
        let mut rng = StdRng::seed_from_u64(11);
        for block in block_types() {
            for _ in 0..200 {
                let m = rng.gen_range(1..8);
                let vectors: Vec<DVector<f64>> = (0..m)
                    .map(|_| DVector::from_fn(block.dim, |_, _| rng.gen_range(-2.0..2.0)))
                    .collect();
                let times: Vec<f64> = (1..m).map(|_| rng.gen_range(-2.0..2.0)).collect();
                let (lhs, rhs) = lemma72_bound(&block, &vectors, &times);
                assert!(lhs <= rhs + 1e-9);
                if m == 1 {
                    assert!((lhs - rhs).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn sol_lattice_relations() {
        let group = sol_group();
        let emb = lattice_embed(&group, 1e-9).unwrap();
        assert!(relation_residual(&group, &emb, 100, 1) < 1e-9);
    }

    #[test]
    fn sigma_tau_heights() {
        let group = sol_group();
        let emb = lattice_embed(&group, 1e-9).unwrap();
        let x = group.module_gen(0);
        for j in 0..4u32 {
            let (s, t) = sigma_tau(&group, &emb, 2, j, &x, &x, 1e-12).unwrap();
            assert_eq!(s.h, -2 * j as i64);
            assert_eq!(t.h, 2 * j as i64);
            if j == 0 {
                assert_eq!(s, t);
            }
        }
    }

    #[test]
    fn divergence_bracket_flips_sign() {
        let group = sol_group();
        let emb = lattice_embed(&group, 1e-9).unwrap();
        assert!(divergence_bracket(&emb, 1) < 0.0);
        assert!(divergence_bracket(&emb, 64) > 0.0);
        assert!(divergence_estimate(&emb, 0, 64).unwrap() > 0.0);
        // the main term scales by modulus^(t*) per unit of k
        let r = emb.jordan.blocks[expanding_block(&emb.jordan)].modulus;
        let v1 = divergence_estimate(&emb, 3, 64).unwrap();
        let v2 = divergence_estimate(&emb, 4, 64).unwrap();
        assert!((v2 / v1 - r.powf(2.0)).abs() < 1e-9);
    }

    #[test]
    fn z2_control_is_flat() {
        let rep = ac2_probe_z2(7, 1_000_000).unwrap();
        let maxima: Vec<u32> = rep.rows.iter().map(|r| r.max_inner_distance).collect();
        // constant from the start: the inner detour never grows
        assert!(maxima.windows(2).all(|w| w[0] == w[1]), "{maxima:?}");
    }

    #[test]
    fn sol_probe_small() {
        let group = sol_group();
        let rep = ac2_probe(&group, 5, 1_000_000).unwrap();
        assert_eq!(rep.rows.len(), 5);
        for r in &rep.rows {
            assert!(r.max_inner_distance >= 2);
            assert!(r.pairs_checked > 0);
        }
    }
}
