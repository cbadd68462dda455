//! Sparse Cholesky factorisation `P A Pᵀ = L Lᵀ` (up-looking, row by row) with a
//! nested-dissection ordering for lattice operators, and a Jacobi-preconditioned
//! conjugate-gradient solver.

use crate::error::{Error, Result};
use crate::grid::SparseOperator;

const NONE: usize = usize::MAX;
const ND_LEAF: usize = 64;

/// Fill-reducing ordering: `perm[new] = old`.
pub fn nested_dissection(coords: &[[u32; 2]]) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..coords.len()).collect();
    let mut out = Vec::with_capacity(coords.len());
    dissect(&mut ids, coords, &mut out);
    out
}

fn dissect(ids: &mut [usize], coords: &[[u32; 2]], out: &mut Vec<usize>) {
    if ids.len() <= ND_LEAF {
        out.extend_from_slice(ids);
        return;
    }
    let (mut lo, mut hi) = ([u32::MAX; 2], [0u32; 2]);
    for &i in ids.iter() {
        for a in 0..2 {
            lo[a] = lo[a].min(coords[i][a]);
            hi[a] = hi[a].max(coords[i][a]);
        }
    }
    let axis = if hi[0] - lo[0] >= hi[1] - lo[1] { 0 } else { 1 };
    let mut vals: Vec<u32> = ids.iter().map(|&i| coords[i][axis]).collect();
    let mid = vals.len() / 2;
    let (_, &mut cut, _) = vals.select_nth_unstable(mid);
    let mut left = Vec::new();
    let mut right = Vec::new();
    let mut sep = Vec::new();
    for &i in ids.iter() {
        let c = coords[i][axis];
        if c < cut {
            left.push(i);
        } else if c > cut {
            right.push(i);
        } else {
            sep.push(i);
        }
    }
    dissect(&mut left, coords, out);
    dissect(&mut right, coords, out);
    out.extend_from_slice(&sep);
}

/// Lower-triangular factor stored by columns, diagonal first in each column.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    perm: Vec<usize>,
    col_ptr: Vec<usize>,
    row_idx: Vec<u32>,
    values: Vec<f64>,
}

impl Cholesky {
    /// Factors `op`, using nested dissection when lattice coordinates are known.
    pub fn factor(op: &SparseOperator) -> Result<Self> {
        let perm = match &op.coords {
            Some(c) => nested_dissection(c),
            None => (0..op.dimension).collect(),
        };
        Self::factor_with(op, perm)
    }

    pub fn factor_with(op: &SparseOperator, perm: Vec<usize>) -> Result<Self> {
        let n = op.dimension;
        if perm.len() != n {
            return Err(Error::InvalidInput("permutation length mismatch".into()));
        }
        let mut iperm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }
        // upper triangle of C = P A Pᵀ by columns: column k holds C(i, k), i <= k
        let mut cnt = vec![0usize; n + 1];
        for old_r in 0..n {
            let r = iperm[old_r];
            for (old_c, _) in op.row(old_r) {
                let c = iperm[old_c];
                if r <= c {
                    cnt[c + 1] += 1;
                }
            }
        }
        for k in 0..n {
            cnt[k + 1] += cnt[k];
        }
        let cp = cnt.clone();
        let mut next = cnt;
        let mut ci = vec![0usize; cp[n]];
        let mut cx = vec![0.0; cp[n]];
        for old_r in 0..n {
            let r = iperm[old_r];
            for (old_c, v) in op.row(old_r) {
                let c = iperm[old_c];
                if r <= c {
                    ci[next[c]] = r;
                    cx[next[c]] = v;
                    next[c] += 1;
                }
            }
        }

        // elimination tree
        let mut parent = vec![NONE; n];
        let mut ancestor = vec![NONE; n];
        for k in 0..n {
            for &i0 in &ci[cp[k]..cp[k + 1]] {
                let mut i = i0;
                while i != NONE && i < k {
                    let inext = ancestor[i];
                    ancestor[i] = k;
                    if inext == NONE {
                        parent[i] = k;
                    }
                    i = inext;
                }
            }
        }

        // column counts from the row patterns
        let mut stack = vec![0usize; n];
        let mut mark = vec![NONE; n];
        let mut counts = vec![1usize; n];
        for k in 0..n {
            let top = ereach(&ci[cp[k]..cp[k + 1]], k, &parent, &mut stack, &mut mark);
            for &j in &stack[top..] {
                counts[j] += 1;
            }
        }
        let mut col_ptr = vec![0usize; n + 1];
        for k in 0..n {
            col_ptr[k + 1] = col_ptr[k] + counts[k];
        }
        let nnz = col_ptr[n];
        let mut row_idx = vec![0u32; nnz];
        let mut values = vec![0.0f64; nnz];
        let mut fill = col_ptr[..n].to_vec();
        let mut x = vec![0.0f64; n];
        mark.iter_mut().for_each(|m| *m = NONE);
        for k in 0..n {
            let top = ereach(&ci[cp[k]..cp[k + 1]], k, &parent, &mut stack, &mut mark);
            for p in cp[k]..cp[k + 1] {
                x[ci[p]] = cx[p];
            }
            let mut d = x[k];
            x[k] = 0.0;
            for &i in &stack[top..] {
                let lki = x[i] / values[col_ptr[i]];
                x[i] = 0.0;
                for p in col_ptr[i] + 1..fill[i] {
                    x[row_idx[p] as usize] -= values[p] * lki;
                }
                d -= lki * lki;
                let p = fill[i];
                fill[i] += 1;
                row_idx[p] = k as u32;
                values[p] = lki;
            }
            if !(d > 0.0) {
                return Err(Error::NotPositiveDefinite(perm[k]));
            }
            let p = fill[k];
            fill[k] += 1;
            row_idx[p] = k as u32;
            values[p] = d.sqrt();
        }
        Ok(Self {
            n,
            perm,
            col_ptr,
            row_idx,
            values,
        })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Solves `A X = B` for `k` right-hand sides stored row-interleaved:
    /// entry `(i, r)` at `b[i * k + r]`.
    pub fn solve_interleaved(&self, b: &mut [f64], k: usize) {
        let n = self.n;
        assert_eq!(b.len(), n * k);
        let mut y = vec![0.0; n * k];
        for (new, &old) in self.perm.iter().enumerate() {
            y[new * k..(new + 1) * k].copy_from_slice(&b[old * k..(old + 1) * k]);
        }
        let mut tmp = vec![0.0; k];
        // L y = b
        for j in 0..n {
            let start = self.col_ptr[j];
            let d = self.values[start];
            for r in 0..k {
                y[j * k + r] /= d;
            }
            tmp.copy_from_slice(&y[j * k..(j + 1) * k]);
            for p in start + 1..self.col_ptr[j + 1] {
                let i = self.row_idx[p] as usize;
                let l = self.values[p];
                let row = &mut y[i * k..(i + 1) * k];
                for r in 0..k {
                    row[r] -= l * tmp[r];
                }
            }
        }
        // Lᵀ x = y
        for j in (0..n).rev() {
            let start = self.col_ptr[j];
            tmp.copy_from_slice(&y[j * k..(j + 1) * k]);
            for p in start + 1..self.col_ptr[j + 1] {
                let i = self.row_idx[p] as usize;
                let l = self.values[p];
                let row = &y[i * k..(i + 1) * k];
                for r in 0..k {
                    tmp[r] -= l * row[r];
                }
            }
            let d = self.values[start];
            for r in 0..k {
                y[j * k + r] = tmp[r] / d;
            }
        }
        for (new, &old) in self.perm.iter().enumerate() {
            b[old * k..(old + 1) * k].copy_from_slice(&y[new * k..(new + 1) * k]);
        }
    }

    pub fn solve(&self, b: &mut [f64]) {
        self.solve_interleaved(b, 1);
    }
}

/// Nonzero pattern of row `k` of `L`, topologically ordered in `s[top..]`.
fn ereach(col: &[usize], k: usize, parent: &[usize], s: &mut [usize], mark: &mut [usize]) -> usize {
    let n = s.len();
    let mut top = n;
    mark[k] = k;
    for &i0 in col {
        let mut i = i0;
        if i > k {
            continue;
        }
        let mut len = 0;
        while mark[i] != k {
            s[len] = i;
            len += 1;
            mark[i] = k;
            i = parent[i];
        }
        while len > 0 {
            len -= 1;
            top -= 1;
            s[top] = s[len];
        }
    }
    top
}

/// Jacobi-preconditioned conjugate gradient; returns the iteration count.
pub fn pcg(op: &SparseOperator, b: &[f64], x: &mut [f64], rel_tol: f64, max_iter: usize) -> Result<usize> {
    let n = op.dimension;
    let dinv: Vec<f64> = op.diag().iter().map(|d| 1.0 / d).collect();
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return Ok(0);
    }
    let mut r = vec![0.0; n];
    op.matvec(x, &mut r);
    for i in 0..n {
        r[i] = b[i] - r[i];
    }
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(a, d)| a * d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for it in 0..max_iter {
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= rel_tol * bnorm {
            return Ok(it);
        }
        op.matvec(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if !(pap > 0.0) {
            return Err(Error::NotPositiveDefinite(0));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
            z[i] = r[i] * dinv[i];
        }
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Convergence {
        what: "conjugate gradient".into(),
        best_residuals: vec![r.iter().map(|v| v * v).sum::<f64>().sqrt() / bnorm],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{assemble_dirichlet, rasterize};
    use crate::spectra::DomainSpec;
    use nalgebra::{DMatrix, DVector};

    fn residual(op: &SparseOperator, x: &[f64], b: &[f64]) -> f64 {
        let mut ax = vec![0.0; x.len()];
        op.matvec(x, &mut ax);
        let num: f64 = ax.iter().zip(b).map(|(a, b)| (a - b).powi(2)).sum();
        let den: f64 = b.iter().map(|v| v * v).sum();
        (num / den).sqrt()
    }

    #[test]
    fn factor_matches_dense_solve() {
        let mask = rasterize(&DomainSpec::disk(1.0).unwrap(), 0.1).unwrap();
        let op = assemble_dirichlet(&mask);
        let n = op.dimension;
        let b: Vec<f64> = (0..n).map(|i| ((i * 37 % 11) as f64 - 5.0) / 3.0).collect();
        let chol = Cholesky::factor(&op).unwrap();
        let mut x = b.clone();
        chol.solve(&mut x);
        let dense = DMatrix::from_fn(n, n, |i, j| op.get(i, j));
        let xd = dense.lu().solve(&DVector::from_vec(b.clone())).unwrap();
        for i in 0..n {
            assert!((x[i] - xd[i]).abs() < 1e-10 * xd.amax());
        }
        assert!(residual(&op, &x, &b) < 1e-12);
    }

    #[test]
    fn nested_dissection_is_permutation_and_reduces_fill() {
        let mask = rasterize(&DomainSpec::boxed(&[1.0, 1.0]).unwrap(), 1.0 / 64.0).unwrap();
        let op = assemble_dirichlet(&mask);
        let perm = nested_dissection(op.coords.as_ref().unwrap());
        let mut seen = perm.clone();
        seen.sort();
        assert_eq!(seen, (0..op.dimension).collect::<Vec<_>>());
        let nd = Cholesky::factor(&op).unwrap();
        let natural = Cholesky::factor_with(&op, (0..op.dimension).collect()).unwrap();
        assert!(nd.nnz() < natural.nnz());
    }

    #[test]
    fn multi_rhs_matches_single() {
        let mask = rasterize(&DomainSpec::boxed(&[1.0, 0.7]).unwrap(), 1.0 / 20.0).unwrap();
        let op = assemble_dirichlet(&mask);
        let n = op.dimension;
        let chol = Cholesky::factor(&op).unwrap();
        let k = 3;
        let mut block: Vec<f64> = (0..n * k).map(|i| (i as f64 * 0.37).sin()).collect();
        let cols: Vec<Vec<f64>> = (0..k).map(|r| (0..n).map(|i| block[i * k + r]).collect()).collect();
        chol.solve_interleaved(&mut block, k);
        for (r, c) in cols.iter().enumerate() {
            let mut x = c.clone();
            chol.solve(&mut x);
            for i in 0..n {
                assert_eq!(x[i], block[i * k + r]);
            }
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        let op = SparseOperator::from_dense(&[vec![1.0, 2.0], vec![2.0, 1.0]]);
        assert!(matches!(Cholesky::factor(&op), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn pcg_agrees_with_cholesky() {
        let mask = rasterize(&DomainSpec::disk(1.0).unwrap(), 0.05).unwrap();
        let op = assemble_dirichlet(&mask);
        let b: Vec<f64> = (0..op.dimension).map(|i| (i as f64).cos()).collect();
        let mut x = vec![0.0; op.dimension];
        pcg(&op, &b, &mut x, 1e-12, 10_000).unwrap();
        let mut y = b.clone();
        Cholesky::factor(&op).unwrap().solve(&mut y);
        let scale = y.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for i in 0..op.dimension {
            assert!((x[i] - y[i]).abs() < 1e-9 * scale);
        }
    }
}
