//! Smallest eigenpairs of a sparse symmetric positive-definite operator by
//! block Lanczos on `A⁻¹` (shift-invert at zero) with full reorthogonalisation.
//!
//! The projected matrix is formed from the reorthogonalisation coefficients,
//! Ritz pairs are extracted on a geometric schedule, and convergence is decided
//! from the exact residual `‖A Q_{j+1} R_j s‖` of each Ritz vector. Accepted
//! pairs are re-checked with true residuals before returning.

use std::ops::Range;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::SparseOperator;
use crate::sparse::{pcg, Cholesky};
use crate::spectra::cluster_ranges;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerSolver {
    /// Sparse Cholesky factorisation, computed once.
    Cholesky,
    /// Jacobi-preconditioned conjugate gradient at `inner_cg_tol`.
    ConjugateGradient,
}

#[derive(Debug, Clone)]
pub struct EigSolveConfig {
    pub m: usize,
    /// Relative residual `‖Av − λv‖ / ‖λv‖` required of every pair.
    pub residual_tol: f64,
    /// Maximum number of block steps.
    pub max_outer_iter: usize,
    pub inner_cg_tol: f64,
    pub seed: u64,
    pub cluster_tol: f64,
    /// Lanczos block width; `None` picks `clamp(m / 12, 4, 32)`.
    pub block_size: Option<usize>,
    pub inner: InnerSolver,
    /// Quadrature weight `w` of the discrete inner product `w Σ u_i v_i`
    /// (`h²` for grid operators); vectors are normalised under it.
    pub weight: f64,
}

impl EigSolveConfig {
    pub fn new(m: usize) -> Self {
        Self {
            m,
            residual_tol: 1e-8,
            max_outer_iter: 2000,
            inner_cg_tol: 1e-10,
            seed: 0,
            cluster_tol: 1e-6,
            block_size: None,
            inner: InnerSolver::Cholesky,
            weight: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidInput("m must be >= 1".into()));
        }
        if !(self.residual_tol > 0.0 && self.residual_tol < 1.0) {
            return Err(Error::InvalidInput("residual_tol must lie in (0, 1)".into()));
        }
        if !(self.inner_cg_tol > 0.0 && self.inner_cg_tol < 1.0) {
            return Err(Error::InvalidInput("inner_cg_tol must lie in (0, 1)".into()));
        }
        if self.block_size == Some(0) || self.max_outer_iter == 0 {
            return Err(Error::InvalidInput("block_size and max_outer_iter must be >= 1".into()));
        }
        if !(self.weight > 0.0 && self.weight.is_finite()) {
            return Err(Error::InvalidInput("weight must be positive".into()));
        }
        if !(self.cluster_tol >= 0.0) {
            return Err(Error::InvalidInput("cluster_tol must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct EigResult {
    pub values: Vec<f64>,
    /// `w Σ v_i² = 1` for each vector.
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    /// Block steps taken.
    pub iterations: usize,
    pub clusters: Vec<Range<usize>>,
}

enum Inverse<'a> {
    Chol(Cholesky),
    Cg(&'a SparseOperator, f64),
}

impl Inverse<'_> {
    /// Overwrites each column of the column-major `n × k` block with `A⁻¹` of it.
    fn apply(&self, block: &mut [f64], n: usize, k: usize) -> Result<()> {
        match self {
            Inverse::Chol(c) => {
                let mut inter = vec![0.0; n * k];
                for r in 0..k {
                    for i in 0..n {
                        inter[i * k + r] = block[r * n + i];
                    }
                }
                c.solve_interleaved(&mut inter, k);
                for r in 0..k {
                    for i in 0..n {
                        block[r * n + i] = inter[i * k + r];
                    }
                }
            }
            Inverse::Cg(op, tol) => {
                for r in 0..k {
                    let b = block[r * n..(r + 1) * n].to_vec();
                    let mut x = vec![0.0; n];
                    pcg(op, &b, &mut x, *tol, 20 * n + 100)?;
                    block[r * n..(r + 1) * n].copy_from_slice(&x);
                }
            }
        }
        Ok(())
    }
}

/// `C (ka × kb) = Aᵀ B` for column-major `A (n × ka)`, `B (n × kb)`.
fn at_b(a: &[f64], b: &[f64], n: usize, ka: usize, kb: usize) -> Vec<f64> {
    let mut c = vec![0.0; ka * kb];
    if ka == 0 || kb == 0 || n == 0 {
        return c;
    }
    // C column-major: c[i + j*ka]
    unsafe {
        matrixmultiply::dgemm(
            ka,
            n,
            kb,
            1.0,
            a.as_ptr(),
            n as isize,
            1,
            b.as_ptr(),
            1,
            n as isize,
            0.0,
            c.as_mut_ptr(),
            1,
            ka as isize,
        );
    }
    c
}

/// `B (n × kb) += alpha · A C` for column-major `A (n × ka)`, `C (ka × kb)`.
fn b_plus_ac(b: &mut [f64], a: &[f64], c: &[f64], n: usize, ka: usize, kb: usize, alpha: f64) {
    if ka == 0 || kb == 0 || n == 0 {
        return;
    }
    unsafe {
        matrixmultiply::dgemm(
            n,
            ka,
            kb,
            alpha,
            a.as_ptr(),
            1,
            n as isize,
            c.as_ptr(),
            1,
            ka as isize,
            1.0,
            b.as_mut_ptr(),
            1,
            n as isize,
        );
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthogonalises the columns of `w` (n × k) against the basis `q` (n × kq)
/// twice, returning the summed coefficients (kq × k).
fn project_out(q: &[f64], w: &mut [f64], n: usize, kq: usize, k: usize) -> Vec<f64> {
    let mut c1 = at_b(q, w, n, kq, k);
    b_plus_ac(w, q, &c1, n, kq, k, -1.0);
    let c2 = at_b(q, w, n, kq, k);
    b_plus_ac(w, q, &c2, n, kq, k, -1.0);
    for (a, b) in c1.iter_mut().zip(&c2) {
        *a += b;
    }
    c1
}

/// Orthogonalises `w` against the last two blocks, then once against the whole
/// basis, repeating the full pass when a column loses more than 30% of its
/// norm. Returns the accumulated coefficients (`kq × k`).
fn reorthogonalise(basis: &Basis, j: usize, w: &mut [f64], k: usize) -> Vec<f64> {
    let n = basis.n;
    let kq = basis.cols();
    let lo = basis.blocks[j.saturating_sub(1)].start;
    let local = &basis.q[lo * n..kq * n];
    let kl = kq - lo;
    let mut h = vec![0.0; kq * k];
    for _ in 0..2 {
        let c = at_b(local, w, n, kl, k);
        b_plus_ac(w, local, &c, n, kl, k, -1.0);
        for col in 0..k {
            for r in 0..kl {
                h[lo + r + col * kq] += c[r + col * kl];
            }
        }
    }
    for _ in 0..2 {
        let before: Vec<f64> = w.chunks(n).map(norm).collect();
        let c = at_b(&basis.q, w, n, kq, k);
        b_plus_ac(w, &basis.q, &c, n, kq, k, -1.0);
        for (a, b) in h.iter_mut().zip(&c) {
            *a += b;
        }
        let again = w.chunks(n).zip(&before).any(|(col, &b0)| norm(col) < 0.7 * b0);
        if !again {
            break;
        }
    }
    h
}

struct Basis {
    n: usize,
    /// Column-major, all accepted columns.
    q: Vec<f64>,
    /// Column range of each block.
    blocks: Vec<Range<usize>>,
}

impl Basis {
    fn cols(&self) -> usize {
        self.q.len() / self.n
    }
}

/// Orthonormalises the `k` columns of `w` against `basis` and each other.
/// Returns the new columns and the upper-triangular coefficients `R`
/// (`k_new × k`, column-major). Columns that collapse are replaced by random
/// directions (zero row in `R`) or dropped when the space is exhausted.
/// `w` must already be orthogonal to the basis; `orig` holds the column norms
/// before that projection.
fn orthonormalise_block(
    basis: &Basis,
    w: Vec<f64>,
    orig: &[f64],
    k: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<f64>, Vec<f64>, usize) {
    let n = basis.n;
    let kq = basis.cols();
    let mut out: Vec<f64> = Vec::with_capacity(n * k);
    let mut r_full = vec![0.0; k * k];
    let mut kept = 0usize;
    for c in 0..k {
        let mut v = w[c * n..(c + 1) * n].to_vec();
        for _ in 0..2 {
            for p in 0..kept {
                let qp = &out[p * n..(p + 1) * n];
                let s = dot(qp, &v);
                r_full[p + c * k] += s;
                for i in 0..n {
                    v[i] -= s * qp[i];
                }
            }
        }
        let nv = norm(&v);
        if nv > 1e-10 * orig[c].max(f64::MIN_POSITIVE) {
            r_full[kept + c * k] = nv;
            out.extend(v.iter().map(|x| x / nv));
            kept += 1;
            continue;
        }
        // collapsed column: try a random replacement outside the current space
        let mut rv: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        for _ in 0..2 {
            project_out(&basis.q, &mut rv, n, kq, 1);
            for p in 0..kept {
                let qp = &out[p * n..(p + 1) * n];
                let s = dot(qp, &rv);
                for i in 0..n {
                    rv[i] -= s * qp[i];
                }
            }
        }
        let nr = norm(&rv);
        if nr > 1e-8 * (n as f64).sqrt() {
            out.extend(rv.iter().map(|x| x / nr));
            kept += 1;
        }
    }
    // compact R to kept rows
    let mut r = vec![0.0; kept * k];
    for c in 0..k {
        for p in 0..kept {
            r[p + c * kept] = r_full[p + c * k];
        }
    }
    (out, r, kept)
}

/// Computes the `m` smallest eigenpairs of `op`.
pub fn smallest_eigs(op: &SparseOperator, config: &EigSolveConfig) -> Result<EigResult> {
    config.validate()?;
    let n = op.dimension;
    let m = config.m;
    if m > n {
        return Err(Error::Size {
            requested: m,
            dimension: n,
        });
    }
    if !op.symmetric {
        return Err(Error::InvalidInput("operator is not symmetric".into()));
    }
    let inverse = match config.inner {
        InnerSolver::Cholesky => Inverse::Chol(Cholesky::factor(op)?),
        InnerSolver::ConjugateGradient => Inverse::Cg(op, config.inner_cg_tol),
    };
    let b = config.block_size.unwrap_or((m / 12).clamp(4, 32)).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut start: Vec<f64> = (0..n * b).map(|_| StandardNormal.sample(&mut rng)).collect();
    inverse.apply(&mut start, n, b)?;
    inverse.apply(&mut start, n, b)?;
    let mut basis = Basis {
        n,
        q: Vec::new(),
        blocks: Vec::new(),
    };
    let orig: Vec<f64> = start.chunks(n).map(norm).collect();
    let (q0, _, k0) = orthonormalise_block(&basis, start, &orig, b, &mut rng);
    basis.q = q0;
    basis.blocks.push(0..k0);

    // coefficients Q_iᵀ A⁻¹ Q_j for blocks i <= j+1, stored per block column
    let mut hcols: Vec<Vec<f64>> = Vec::new();
    let mut next_check = (m + b).max(2 * b);
    let mut best_residuals = vec![f64::INFINITY; m];
    let mut iterations = 0usize;

    loop {
        iterations += 1;
        let j = basis.blocks.len() - 1;
        let cols = basis.blocks[j].clone();
        let kj = cols.len();
        let mut w = basis.q[cols.start * n..cols.end * n].to_vec();
        inverse.apply(&mut w, n, kj)?;
        // coefficients against the whole basis (rows 0..cols.end)
        let orig: Vec<f64> = w.chunks(n).map(norm).collect();
        let h = reorthogonalise(&basis, j, &mut w, kj);
        hcols.push(h);
        let (qn, last_r, kn) = orthonormalise_block(&basis, w, &orig, kj, &mut rng);
        let exhausted = kn == 0;
        let known = basis.cols();
        if kn > 0 {
            basis.q.extend_from_slice(&qn);
            basis.blocks.push(known..known + kn);
        }

        let ready = known >= m && (known >= next_check || exhausted);
        if ready || iterations >= config.max_outer_iter {
            next_check = (known as f64 * 1.1).ceil() as usize + b;
            // projected matrix over the first `known` columns
            let mut hm = DMatrix::<f64>::zeros(known, known);
            for (bj, col) in hcols.iter().enumerate() {
                let cj = basis.blocks[bj].clone();
                // column block bj was projected against columns 0..cj.end
                for (lc, c) in cj.clone().enumerate() {
                    for rr in 0..cj.end {
                        let v = col[rr + lc * cj.end];
                        let rb = block_of(&basis.blocks, rr);
                        if rb < bj {
                            hm[(rr, c)] = v;
                            hm[(c, rr)] = v;
                        } else if rb == bj {
                            hm[(rr, c)] += 0.5 * v;
                            hm[(c, rr)] += 0.5 * v;
                        }
                    }
                }
            }
            let eig = SymmetricEigen::new(hm);
            let mut order: Vec<usize> = (0..known).collect();
            order.sort_by(|&a, &c| eig.eigenvalues[c].total_cmp(&eig.eigenvalues[a]));
            let wanted = &order[..m];

            // residual estimates ‖A Q_new R s_last‖
            let last_blk = basis.blocks[hcols.len() - 1].clone();
            let mut est = vec![0.0; m];
            if !exhausted {
                let newb = basis.blocks.last().unwrap().clone();
                let qnew = &basis.q[newb.start * n..newb.end * n];
                let mut aq = vec![0.0; qnew.len()];
                for c in 0..kn {
                    op.matvec(&qnew[c * n..(c + 1) * n], &mut aq[c * n..(c + 1) * n]);
                }
                let gram = at_b(&aq, &aq, n, kn, kn);
                for (slot, &idx) in wanted.iter().enumerate() {
                    let s_last: Vec<f64> = last_blk.clone().map(|r| eig.eigenvectors[(r, idx)]).collect();
                    let mut v = vec![0.0; kn];
                    for p in 0..kn {
                        for c in 0..kj {
                            v[p] += last_r[p + c * kn] * s_last[c];
                        }
                    }
                    let mut s2 = 0.0;
                    for p in 0..kn {
                        for q in 0..kn {
                            s2 += v[p] * gram[p + q * kn] * v[q];
                        }
                    }
                    est[slot] = s2.max(0.0).sqrt();
                }
            }
            let converged = est.iter().all(|&e| e <= 0.1 * config.residual_tol);
            if converged || exhausted || iterations >= config.max_outer_iter {
                let result = ritz_result(op, &basis.q, n, known, &eig, wanted, config)?;
                for (bres, r) in best_residuals.iter_mut().zip(&result.residuals) {
                    *bres = bres.min(*r);
                }
                if result.residuals.iter().all(|&r| r <= config.residual_tol) {
                    return Ok(EigResult {
                        iterations,
                        ..result
                    });
                }
                if exhausted || iterations >= config.max_outer_iter {
                    return Err(Error::Convergence {
                        what: "shift-invert Lanczos".into(),
                        best_residuals,
                    });
                }
            }
        }
    }
}

fn block_of(blocks: &[Range<usize>], col: usize) -> usize {
    blocks.partition_point(|r| r.end <= col)
}

fn ritz_result(
    op: &SparseOperator,
    q: &[f64],
    n: usize,
    known: usize,
    eig: &SymmetricEigen<f64, nalgebra::Dyn>,
    wanted: &[usize],
    config: &EigSolveConfig,
) -> Result<EigResult> {
    let m = wanted.len();
    let mut s = vec![0.0; known * m];
    for (c, &idx) in wanted.iter().enumerate() {
        for r in 0..known {
            s[r + c * known] = eig.eigenvectors[(r, idx)];
        }
    }
    let mut y = vec![0.0; n * m];
    b_plus_ac(&mut y, &q[..n * known], &s, n, known, m, 1.0);
    let mut values = Vec::with_capacity(m);
    let mut residuals = Vec::with_capacity(m);
    let mut vectors = Vec::with_capacity(m);
    let mut ay = vec![0.0; n];
    let scale = 1.0 / config.weight.sqrt();
    for c in 0..m {
        let v = &y[c * n..(c + 1) * n];
        op.matvec(v, &mut ay);
        let vv = dot(v, v);
        let lambda = dot(v, &ay) / vv;
        let res: f64 = ay
            .iter()
            .zip(v)
            .map(|(a, x)| (a - lambda * x).powi(2))
            .sum::<f64>()
            .sqrt()
            / (lambda.abs() * vv.sqrt());
        values.push(lambda);
        residuals.push(res);
        let inv = scale / vv.sqrt();
        vectors.push(v.iter().map(|x| x * inv).collect::<Vec<f64>>());
    }
    // ascending order, stable on ties
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let values: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
    let residuals = idx.iter().map(|&i| residuals[i]).collect();
    let mut slots: Vec<Option<Vec<f64>>> = vectors.into_iter().map(Some).collect();
    let vectors = idx.iter().map(|&i| slots[i].take().unwrap()).collect();
    let clusters = cluster_ranges(values.iter().cloned(), config.cluster_tol);
    Ok(EigResult {
        values,
        vectors,
        residuals,
        iterations: 0,
        clusters,
    })
}

/// Eigenvalues of the 5-point Laplacian on a full `p × q` rectangle of
/// unknowns with spacing `h`, ascending.
pub fn discrete_rectangle_eigenvalues(p: usize, q: usize, h: f64) -> Vec<f64> {
    let mut v = Vec::with_capacity(p * q);
    for a in 1..=p {
        let sa = (a as f64 * std::f64::consts::PI / (2.0 * (p as f64 + 1.0))).sin();
        for b in 1..=q {
            let sb = (b as f64 * std::f64::consts::PI / (2.0 * (q as f64 + 1.0))).sin();
            v.push(4.0 / (h * h) * (sa * sa + sb * sb));
        }
    }
    v.sort_by(f64::total_cmp);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{assemble_dirichlet, rasterize, rasterize_polygon, GridMask};
    use crate::spectra::DomainSpec;

    fn rectangle(p: usize, q: usize, h: f64) -> SparseOperator {
        let nx = p + 2;
        let ny = q + 2;
        let mut inside = vec![false; nx * ny];
        for j in 1..=q {
            for i in 1..=p {
                inside[j * nx + i] = true;
            }
        }
        assemble_dirichlet(&GridMask::from_raster(nx, ny, h, [0.0, 0.0], inside).unwrap())
    }

    fn dense_eigenvalues(op: &SparseOperator) -> Vec<f64> {
        let n = op.dimension;
        let a = DMatrix::from_fn(n, n, |i, j| op.get(i, j));
        let mut v: Vec<f64> = SymmetricEigen::new(a).eigenvalues.iter().cloned().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn tridiagonal_three() {
        let op = SparseOperator::tridiagonal(3, 1.0);
        let r = smallest_eigs(&op, &EigSolveConfig::new(3)).unwrap();
        let s2 = 2f64.sqrt();
        for (v, e) in r.values.iter().zip([2.0 - s2, 2.0, 2.0 + s2]) {
            assert!((v - e).abs() < 1e-12);
        }
    }

    #[test]
    fn diagonal_operator() {
        let op = SparseOperator::diagonal(&(1..=10).map(|v| v as f64).collect::<Vec<_>>());
        let r = smallest_eigs(&op, &EigSolveConfig::new(4)).unwrap();
        for (k, v) in r.values.iter().enumerate() {
            assert!((v - (k + 1) as f64).abs() < 1e-10);
            let vec = &r.vectors[k];
            assert!((vec[k].abs() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn size_error() {
        let op = SparseOperator::tridiagonal(3, 1.0);
        assert!(matches!(
            smallest_eigs(&op, &EigSolveConfig::new(4)),
            Err(Error::Size { .. })
        ));
    }

    #[test]
    fn matches_dense_oracle_on_irregular_masks() {
        let poly = [[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [1.0, 1.0], [1.0, 2.0], [0.0, 2.0]];
        for (op, m) in [
            (assemble_dirichlet(&rasterize_polygon(&poly, 0.15).unwrap()), 30),
            (assemble_dirichlet(&rasterize(&DomainSpec::disk(1.0).unwrap(), 0.1).unwrap()), 40),
        ] {
            assert!(op.dimension <= 400);
            let dense = dense_eigenvalues(&op);
            let mut cfg = EigSolveConfig::new(m);
            cfg.seed = 7;
            let r = smallest_eigs(&op, &cfg).unwrap();
            for k in 0..m {
                assert!((r.values[k] - dense[k]).abs() <= 1e-9 * dense[k], "k={k}");
                assert!(r.residuals[k] <= 1e-8);
            }
        }
    }

    #[test]
    fn rectangle_no_skip_and_cluster_residuals() {
        for (p, q, m) in [(8, 8, 20), (8, 5, 12), (32, 32, 60), (31, 17, 40), (6, 6, 18)] {
            let h = 1.0 / (p as f64 + 1.0);
            let op = rectangle(p, q, h);
            let exact = discrete_rectangle_eigenvalues(p, q, h);
            let mut cfg = EigSolveConfig::new(m);
            cfg.weight = h * h;
            let r = smallest_eigs(&op, &cfg).unwrap();
            for k in 0..m {
                assert!((r.values[k] - exact[k]).abs() <= 1e-7 * exact[k], "{p}x{q} k={k}");
            }
            // discrete orthonormality and Rayleigh consistency
            for a in 0..m {
                for c in a..m {
                    let ip: f64 = r.vectors[a].iter().zip(&r.vectors[c]).map(|(x, y)| x * y).sum::<f64>() * h * h;
                    let target = if a == c { 1.0 } else { 0.0 };
                    assert!((ip - target).abs() <= 1e-8);
                }
                let mut av = vec![0.0; op.dimension];
                op.matvec(&r.vectors[a], &mut av);
                let rq: f64 = av.iter().zip(&r.vectors[a]).map(|(x, y)| x * y).sum::<f64>() * h * h;
                assert!((rq - r.values[a]).abs() <= 10.0 * 1e-8 * r.values[a]);
            }
        }
    }

    #[test]
    fn conjugate_gradient_inner_solver() {
        let p = 12;
        let h = 1.0 / 13.0;
        let op = rectangle(p, p, h);
        let mut cfg = EigSolveConfig::new(10);
        cfg.inner = InnerSolver::ConjugateGradient;
        cfg.inner_cg_tol = cfg.residual_tol / 100.0;
        let r = smallest_eigs(&op, &cfg).unwrap();
        let exact = discrete_rectangle_eigenvalues(p, p, h);
        for k in 0..10 {
            assert!((r.values[k] - exact[k]).abs() <= 1e-7 * exact[k]);
        }
    }

    #[test]
    fn reproducible() {
        let op = rectangle(20, 15, 0.05);
        let cfg = EigSolveConfig::new(15);
        let a = smallest_eigs(&op, &cfg).unwrap();
        let b = smallest_eigs(&op, &cfg).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.vectors, b.vectors);
    }

    #[test]
    fn square_grid_64() {
        let mask = rasterize(&DomainSpec::boxed(&[1.0, 1.0]).unwrap(), 1.0 / 64.0).unwrap();
        let op = assemble_dirichlet(&mask);
        let r = smallest_eigs(&op, &EigSolveConfig::new(20)).unwrap();
        let exact = discrete_rectangle_eigenvalues(63, 63, 1.0 / 64.0);
        for k in 0..20 {
            assert!((r.values[k] - exact[k]).abs() <= 1e-7 * exact[k]);
        }
        assert_eq!(r.clusters[1], 1..3);
    }
}
