//! Compressed sparse row matrices and the two linear solvers used by Newton:
//! an envelope (skyline) Cholesky factorisation on a reverse Cuthill–McKee
//! ordering, and Jacobi-preconditioned conjugate gradients.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::numeric::{dot, norm2};

#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Assembles an `n × n` matrix, summing duplicate entries in the order
    /// they appear in `triplets` so the result is reproducible.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &(i, _, _) in triplets {
            counts[i + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        // bucket by row keeping insertion order
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            let k = next[i];
            cols[k] = j;
            vals[k] = v;
            next[i] += 1;
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        row_ptr.push(0);
        let mut order: Vec<usize> = Vec::new();
        for i in 0..n {
            let (lo, hi) = (counts[i], counts[i + 1]);
            order.clear();
            order.extend(lo..hi);
            order.sort_by_key(|&k| cols[k]); // stable: preserves insertion order per column
            let mut last = usize::MAX;
            for &k in &order {
                if cols[k] == last {
                    *values.last_mut().expect("entry") += vals[k];
                } else {
                    col_idx.push(cols[k]);
                    values.push(vals[k]);
                    last = cols[k];
                }
            }
            row_ptr.push(col_idx.len());
        }
        Self { n, row_ptr, col_idx, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.col_idx[lo..hi].binary_search(&j) {
            Ok(k) => self.values[lo + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Raises every diagonal entry to at least `floor`.
    pub fn floor_diagonal(&mut self, floor: f64) {
        for i in 0..self.n {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            if let Ok(k) = self.col_idx[lo..hi].binary_search(&i) {
                if self.values[lo + k] < floor {
                    self.values[lo + k] = floor;
                }
            }
        }
    }

    /// Principal submatrix on the indices with `keep[i] == true`.
    pub fn principal_submatrix(&self, keep: &[bool]) -> (Self, Vec<usize>) {
        let kept: Vec<usize> = (0..self.n).filter(|&i| keep[i]).collect();
        let mut new_index = vec![usize::MAX; self.n];
        for (k, &i) in kept.iter().enumerate() {
            new_index[i] = k;
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for &i in &kept {
            for (j, v) in self.row(i) {
                if keep[j] {
                    col_idx.push(new_index[j]);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        (Self { n: kept.len(), row_ptr, col_idx, values }, kept)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.n]; self.n];
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        d
    }
}

/// Reverse Cuthill–McKee permutation of a structurally symmetric matrix:
/// `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &CsrMatrix) -> Vec<usize> {
    let n = a.n();
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect())
        .collect();
    let degree: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);

    let bfs_levels = |start: usize, visited: &[bool]| -> (usize, usize) {
        // returns (eccentricity, a min-degree node of the last level)
        let mut level = vec![usize::MAX; n];
        let mut q = VecDeque::from([start]);
        level[start] = 0;
        let mut last = start;
        while let Some(v) = q.pop_front() {
            for &w in &adj[v] {
                if level[w] == usize::MAX && !visited[w] {
                    level[w] = level[v] + 1;
                    q.push_back(w);
                    if level[w] > level[last] || (level[w] == level[last] && degree[w] < degree[last]) {
                        last = w;
                    }
                }
            }
        }
        (level[last], last)
    };

    while order.len() < n {
        let seed = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| (degree[i], i))
            .expect("unvisited node");
        // pseudo-peripheral start
        let mut start = seed;
        let (mut ecc, mut far) = bfs_levels(start, &visited);
        for _ in 0..8 {
            let (e2, f2) = bfs_levels(far, &visited);
            if e2 <= ecc {
                break;
            }
            start = far;
            ecc = e2;
            far = f2;
        }
        let mut q = VecDeque::from([start]);
        visited[start] = true;
        while let Some(v) = q.pop_front() {
            order.push(v);
            let mut nbrs: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            nbrs.sort_by_key(|&w| (degree[w], w));
            for w in nbrs {
                visited[w] = true;
                q.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// Envelope Cholesky factor `P A Pᵀ = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    n: usize,
    perm: Vec<usize>,
    /// `first[i]`: first stored column of row `i` of `L`.
    first: Vec<usize>,
    /// Offset of row `i` in `data`; row `i` holds columns `first[i]..=i`.
    offset: Vec<usize>,
    data: Vec<f64>,
}

impl SkylineCholesky {
    pub fn factor(a: &CsrMatrix) -> Result<Self> {
        let n = a.n();
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for old_i in 0..n {
            let i = inv[old_i];
            for (old_j, _) in a.row(old_i) {
                let j = inv[old_j];
                if j < i {
                    first[i] = first[i].min(j);
                }
            }
        }
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for i in 0..n {
            offset.push(offset[i] + (i - first[i] + 1));
        }
        let mut data = vec![0.0; offset[n]];
        for old_i in 0..n {
            let i = inv[old_i];
            for (old_j, v) in a.row(old_i) {
                let j = inv[old_j];
                if j <= i {
                    data[offset[i] + (j - first[i])] += v;
                }
            }
        }
        for i in 0..n {
            let fi = first[i];
            let row_i = offset[i];
            for j in fi..i {
                let fj = first[j];
                let row_j = offset[j];
                let k0 = fi.max(fj);
                let mut s = data[row_i + (j - fi)];
                for k in k0..j {
                    s -= data[row_i + (k - fi)] * data[row_j + (k - fj)];
                }
                data[row_i + (j - fi)] = s / data[row_j + (j - fj)];
            }
            let mut d = data[row_i + (i - fi)];
            for k in fi..i {
                let l = data[row_i + (k - fi)];
                d -= l * l;
            }
            if !(d > 0.0) {
                return Err(Error::Numerical(format!(
                    "Cholesky pivot {d:e} at row {i} (original {}): matrix not positive definite",
                    perm[i]
                )));
            }
            data[row_i + (i - fi)] = d.sqrt();
        }
        Ok(Self { n, perm, first, offset, data })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&old| b[old]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = self.offset[i];
            let mut s = y[i];
            for k in fi..i {
                s -= self.data[row + (k - fi)] * y[k];
            }
            y[i] = s / self.data[row + (i - fi)];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = self.offset[i];
            y[i] /= self.data[row + (i - fi)];
            let yi = y[i];
            for k in fi..i {
                y[k] -= self.data[row + (k - fi)] * yi;
            }
        }
        let mut x = vec![0.0; n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }

    /// Stored envelope size.
    pub fn envelope(&self) -> usize {
        self.data.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CgOutcome {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Jacobi-preconditioned conjugate gradients from a zero initial guess.
/// Stops when `‖b - Ax‖ ≤ tol ‖b‖`.
pub fn pcg(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, CgOutcome)> {
    let n = a.n();
    let inv_diag: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 })
        .collect();
    let bnorm = norm2(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, CgOutcome { iterations: 0, relative_residual: 0.0 }));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Numerical(format!("CG breakdown: pᵀAp = {pap:e} at iteration {it}")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rel = norm2(&r) / bnorm;
        if rel <= tol {
            return Ok((x, CgOutcome { iterations: it, relative_residual: rel }));
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    let rel = norm2(&r) / bnorm;
    Err(Error::Numerical(format!("CG did not reach tolerance {tol:e} in {max_iter} iterations (relative residual {rel:e})")))
}
