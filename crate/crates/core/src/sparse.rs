//! Sparse LU for matrices with a structurally symmetric pattern.
//!
//! The ordering (greedy minimum degree) and the fill pattern are computed once;
//! numeric refactorization then replays a precomputed list of updates. No
//! pivoting is performed, which is safe for the diagonally weighted systems
//! produced by the integrator; tiny pivots are reported as errors.

use std::collections::BTreeSet;

use crate::error::{Error, Result};

/// Pattern of an `n x n` matrix in compressed-row form (columns sorted).
#[derive(Debug, Clone, PartialEq)]
pub struct Pattern {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
}

impl Pattern {
    /// Builds a pattern from coordinate pairs; the diagonal is always included
    /// and the pattern is symmetrized.
    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut rows: Vec<BTreeSet<usize>> = (0..n).map(|i| BTreeSet::from([i])).collect();
        for (r, c) in entries {
            rows[r].insert(c);
            rows[c].insert(r);
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        for r in rows {
            cols.extend(r);
            row_ptr.push(cols.len());
        }
        Self { n, row_ptr, cols }
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Position of `(r, c)` in the value array.
    pub fn index(&self, r: usize, c: usize) -> Option<usize> {
        let row = &self.cols[self.row_ptr[r]..self.row_ptr[r + 1]];
        row.binary_search(&c).ok().map(|k| self.row_ptr[r] + k)
    }

    pub fn row(&self, r: usize) -> std::ops::Range<usize> {
        self.row_ptr[r]..self.row_ptr[r + 1]
    }

    /// `y = A x` for values laid out on this pattern.
    pub fn matvec(&self, vals: &[f64], x: &[f64], y: &mut [f64]) {
        for r in 0..self.n {
            y[r] = self.row(r).map(|k| vals[k] * x[self.cols[k]]).sum();
        }
    }
}

#[derive(Debug, Clone)]
pub struct SparseLu {
    n: usize,
    /// `perm[new] = old`.
    perm: Vec<usize>,
    filled: Pattern,
    /// Original pattern position -> filled position.
    scatter: Vec<usize>,
    diag: Vec<usize>,
    /// For each pivot `k`: positions of `L(i,k)` for later rows `i`.
    lcol: Vec<Vec<usize>>,
    /// Flat update list `(l_ik, u_kj, a_ij)` grouped per pivot.
    updates: Vec<(u32, u32, u32)>,
    upd_ptr: Vec<usize>,
    vals: Vec<f64>,
}

impl SparseLu {
    pub fn new(pat: &Pattern) -> Self {
        let n = pat.n;
        let mut adj: Vec<BTreeSet<usize>> = (0..n)
            .map(|r| pat.cols[pat.row(r)].iter().copied().filter(|&c| c != r).collect())
            .collect();
        // Greedy minimum degree on the elimination graph.
        let mut done = vec![false; n];
        let mut perm = Vec::with_capacity(n);
        let mut later: Vec<Vec<usize>> = vec![Vec::new(); n];
        for _ in 0..n {
            let k = (0..n).filter(|&i| !done[i]).min_by_key(|&i| (adj[i].len(), i)).unwrap();
            done[k] = true;
            perm.push(k);
            let nb: Vec<usize> = adj[k].iter().copied().collect();
            for &a in &nb {
                adj[a].remove(&k);
                for &b in &nb {
                    if a != b {
                        adj[a].insert(b);
                    }
                }
            }
            later[k] = nb;
        }
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut entries = Vec::new();
        for old in 0..n {
            for &o in &later[old] {
                entries.push((inv[old], inv[o]));
            }
        }
        let filled = Pattern::from_entries(n, entries);
        let scatter = (0..n)
            .flat_map(|r| pat.row(r).map(move |k| (r, k)))
            .map(|(r, k)| filled.index(inv[r], inv[pat.cols[k]]).expect("pattern is in fill"))
            .collect();
        let diag: Vec<usize> = (0..n).map(|k| filled.index(k, k).unwrap()).collect();
        let mut lcol = Vec::with_capacity(n);
        let mut updates = Vec::new();
        let mut upd_ptr = vec![0];
        for k in 0..n {
            let upper: Vec<usize> =
                filled.cols[filled.row(k)].iter().copied().filter(|&j| j > k).collect();
            let mut lk = Vec::with_capacity(upper.len());
            for &i in &upper {
                let lik = filled.index(i, k).unwrap();
                lk.push(lik);
                for &j in &upper {
                    let ukj = filled.index(k, j).unwrap();
                    let aij = filled.index(i, j).expect("clique fill");
                    updates.push((lik as u32, ukj as u32, aij as u32));
                }
            }
            lcol.push(lk);
            upd_ptr.push(updates.len());
        }
        let nnz = filled.nnz();
        Self { n, perm, filled, scatter, diag, lcol, updates, upd_ptr, vals: vec![0.0; nnz] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn fill_nnz(&self) -> usize {
        self.filled.nnz()
    }

    /// Factorizes values given on the original pattern.
    pub fn factor(&mut self, vals: &[f64]) -> Result<()> {
        self.vals.iter_mut().for_each(|v| *v = 0.0);
        for (k, &v) in vals.iter().enumerate() {
            self.vals[self.scatter[k]] = v;
        }
        let scale = vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        for k in 0..self.n {
            let piv = self.vals[self.diag[k]];
            if !(piv.abs() > 1e-13 * scale) {
                return Err(Error::Numerical(format!(
                    "zero pivot at original row {} ({piv:e})",
                    self.perm[k]
                )));
            }
            for &lik in &self.lcol[k] {
                self.vals[lik] /= piv;
            }
            for &(lik, ukj, aij) in &self.updates[self.upd_ptr[k]..self.upd_ptr[k + 1]] {
                self.vals[aij as usize] -= self.vals[lik as usize] * self.vals[ukj as usize];
            }
        }
        Ok(())
    }

    /// Solves `A x = b` in place using the last factorization.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        let mut y: Vec<f64> = (0..n).map(|k| b[self.perm[k]]).collect();
        let f = &self.filled;
        for i in 0..n {
            let mut acc = y[i];
            for k in f.row(i) {
                let j = f.cols[k];
                if j >= i {
                    break;
                }
                acc -= self.vals[k] * y[j];
            }
            y[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = y[i];
            for k in f.row(i).rev() {
                let j = f.cols[k];
                if j <= i {
                    break;
                }
                acc -= self.vals[k] * y[j];
            }
            y[i] = acc / self.vals[self.diag[i]];
        }
        for k in 0..n {
            b[self.perm[k]] = y[k];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        // Arrow matrix plus a band, nonsymmetric values.
        let n = 6;
        let mut e = vec![];
        for i in 1..n {
            e.push((0, i));
            e.push((i, i - 1));
        }
        let pat = Pattern::from_entries(n, e);
        let vals: Vec<f64> = (0..pat.nnz())
            .map(|k| if k % 3 == 0 { 10.0 + k as f64 } else { 0.3 * (k as f64).sin() })
            .collect();
        let mut v = vals.clone();
        for r in 0..n {
            let d = pat.index(r, r).unwrap();
            v[d] = 20.0 + r as f64;
        }
        let x: Vec<f64> = (0..n).map(|i| i as f64 - 2.5).collect();
        let mut b = vec![0.0; n];
        pat.matvec(&v, &x, &mut b);
        let mut lu = SparseLu::new(&pat);
        lu.factor(&v).unwrap();
        lu.solve(&mut b);
        for i in 0..n {
            assert!((b[i] - x[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_pivot_reported() {
        let pat = Pattern::from_entries(2, [(0, 1)]);
        let mut lu = SparseLu::new(&pat);
        assert!(lu.factor(&[0.0, 1.0, 1.0, 0.0]).is_err());
    }
}
