//! Small dense and banded linear-algebra helpers shared by the backends.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Symmetric sparse matrix stored as full adjacency rows (both triangles).
#[derive(Debug, Clone)]
pub struct SparseSym {
    rows: Vec<Vec<(usize, f64)>>,
}

impl SparseSym {
    pub fn new(n: usize) -> Self {
        Self {
            rows: vec![Vec::new(); n],
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    /// Adds `v` to entry (i, j) and, when i != j, to (j, i).
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        self.add_one(i, j, v);
        if i != j {
            self.add_one(j, i, v);
        }
    }

    fn add_one(&mut self, i: usize, j: usize, v: f64) {
        if let Some(entry) = self.rows[i].iter_mut().find(|(c, _)| *c == j) {
            entry.1 += v;
        } else {
            self.rows[i].push((j, v));
        }
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().find(|(c, _)| *c == j).map_or(0.0, |(_, v)| *v)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, v)| v * x[j]).sum())
            .collect()
    }

    /// Returns `self - shift * diag(mass)`.
    pub fn shifted(&self, shift: f64, mass: &[f64]) -> SparseSym {
        let mut out = self.clone();
        for (i, m) in mass.iter().enumerate() {
            out.add_one(i, i, -shift * m);
        }
        out
    }

    /// Principal submatrix with row/column `pin` removed from the system: the
    /// row and column are zeroed and the diagonal set to one.
    pub fn pinned(&self, pin: usize) -> SparseSym {
        let mut out = SparseSym::new(self.dim());
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, v) in row {
                if i != pin && j != pin {
                    out.rows[i].push((j, v));
                }
            }
        }
        out.rows[pin].push((pin, 1.0));
        out
    }
}

fn bandwidth(a: &SparseSym, position: &[usize]) -> usize {
    let mut bw = 0;
    for (i, row) in a.rows.iter().enumerate() {
        for &(j, _) in row {
            bw = bw.max(position[i].abs_diff(position[j]));
        }
    }
    bw
}

/// Reverse Cuthill-McKee ordering; returns `order[k]` = original index placed at k.
pub fn reverse_cuthill_mckee(a: &SparseSym) -> Vec<usize> {
    let n = a.dim();
    let degree: Vec<usize> = (0..n).map(|i| a.rows[i].len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    while order.len() < n {
        let seed = (0..n)
            .filter(|&i| !visited[i])
            .min_by_key(|&i| degree[i])
            .expect("unvisited node");
        let start = pseudo_peripheral(a, seed);
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            let mut next: Vec<usize> = a.rows[v].iter().map(|&(j, _)| j).filter(|&j| !visited[j]).collect();
            next.sort_by_key(|&j| (degree[j], j));
            next.dedup();
            for j in next {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(a: &SparseSym, start: usize) -> Vec<usize> {
    let mut level = vec![usize::MAX; a.dim()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &(j, _) in &a.rows[v] {
            if level[j] == usize::MAX {
                level[j] = level[v] + 1;
                queue.push_back(j);
            }
        }
    }
    level
}

fn pseudo_peripheral(a: &SparseSym, seed: usize) -> usize {
    let mut node = seed;
    let mut ecc = 0;
    for _ in 0..8 {
        let level = bfs_levels(a, node);
        let (far, depth) = level
            .iter()
            .enumerate()
            .filter(|(_, &l)| l != usize::MAX)
            .max_by_key(|(i, &l)| (l, std::cmp::Reverse(a.rows[*i].len())))
            .map(|(i, &l)| (i, l))
            .unwrap_or((node, 0));
        if depth <= ecc {
            break;
        }
        ecc = depth;
        node = far;
    }
    node
}

/// Banded Cholesky factorization of a symmetric positive definite sparse matrix,
/// with the ordering chosen between the natural and the RCM ordering.
#[derive(Debug, Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    /// `order[k]` is the original index of the k-th row of the factor.
    order: Vec<usize>,
    /// Row-major band storage: row k holds columns k-bw..=k.
    factor: Vec<f64>,
}

impl BandedCholesky {
    pub fn factor(a: &SparseSym) -> Result<Self> {
        let n = a.dim();
        let natural: Vec<usize> = (0..n).collect();
        let rcm = reverse_cuthill_mckee(a);
        let position_of = |order: &[usize]| {
            let mut pos = vec![0; n];
            for (k, &i) in order.iter().enumerate() {
                pos[i] = k;
            }
            pos
        };
        let pos_nat = position_of(&natural);
        let pos_rcm = position_of(&rcm);
        let (order, position) = if bandwidth(a, &pos_rcm) < bandwidth(a, &pos_nat) {
            (rcm, pos_rcm)
        } else {
            (natural, pos_nat)
        };
        let bw = bandwidth(a, &position);
        let width = bw + 1;
        let mut l = vec![0.0; n * width];
        for (k, &orig) in order.iter().enumerate() {
            for &(j, v) in a.row(orig) {
                let c = position[j];
                if c <= k {
                    l[k * width + (c + bw - k)] += v;
                }
            }
        }
        for i in 0..n {
            let lo_i = i.saturating_sub(bw);
            for j in lo_i..=i {
                let lo = lo_i.max(j.saturating_sub(bw));
                let mut sum = l[i * width + (j + bw - i)];
                for k in lo..j {
                    sum -= l[i * width + (k + bw - i)] * l[j * width + (k + bw - j)];
                }
                if i == j {
                    if sum <= 0.0 || !sum.is_finite() {
                        return Err(Error::NotPositiveDefinite { pivot: i, value: sum });
                    }
                    l[i * width + bw] = sum.sqrt();
                } else {
                    l[i * width + (j + bw - i)] = sum / l[j * width + bw];
                }
            }
        }
        Ok(Self {
            n,
            bw,
            order,
            factor: l,
        })
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, bw, width) = (self.n, self.bw, self.bw + 1);
        let mut y: Vec<f64> = self.order.iter().map(|&i| rhs[i]).collect();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = y[i];
            for k in lo..i {
                s -= self.factor[i * width + (k + bw - i)] * y[k];
            }
            y[i] = s / self.factor[i * width + bw];
        }
        for i in (0..n).rev() {
            let hi = (i + bw).min(n - 1);
            let mut s = y[i];
            for k in i + 1..=hi {
                s -= self.factor[k * width + (i + bw - k)] * y[k];
            }
            y[i] = s / self.factor[i * width + bw];
        }
        let mut x = vec![0.0; n];
        for (k, &i) in self.order.iter().enumerate() {
            x[i] = y[k];
        }
        x
    }
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted ascending.
pub fn sym_eigen_sorted(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let sym = 0.5 * (m + m.transpose());
    let eig = SymmetricEigen::new(sym);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in idx.iter().enumerate() {
        let mut col = eig.eigenvectors.column(i).into_owned();
        fix_sign(&mut col);
        vectors.set_column(k, &col);
    }
    (values, vectors)
}

/// Flips `v` so that its first entry of non-negligible size is positive.
pub fn fix_sign(v: &mut DVector<f64>) {
    let scale = v.amax();
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-8 * scale) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
}

/// Orthonormal basis (columns) of the null space of `constraints` (rows are
/// functionals), together with the numerical rank of the constraint matrix.
pub fn null_space(constraints: &DMatrix<f64>, rel_tol: f64) -> (DMatrix<f64>, usize) {
    let n = constraints.ncols();
    let rows = orthonormal_rows(constraints, rel_tol);
    let rank = rows.len();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n.saturating_sub(rank));
    for i in 0..n {
        if basis.len() + rank == n {
            break;
        }
        let mut v = DVector::zeros(n);
        v[i] = 1.0;
        for _ in 0..2 {
            for q in rows.iter().chain(basis.iter()) {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            basis.push(v / norm);
        }
    }
    let mut out = DMatrix::zeros(n, basis.len());
    for (k, b) in basis.iter().enumerate() {
        out.set_column(k, b);
    }
    (out, rank)
}

fn orthonormal_rows(m: &DMatrix<f64>, rel_tol: f64) -> Vec<DVector<f64>> {
    let scale = m.row_iter().map(|r| r.norm()).fold(0.0, f64::max);
    let mut q: Vec<DVector<f64>> = Vec::new();
    for row in m.row_iter() {
        let mut v = row.transpose().into_owned();
        for _ in 0..2 {
            for b in &q {
                let c = b.dot(&v);
                v.axpy(-c, b, 1.0);
            }
        }
        let norm = v.norm();
        if norm > rel_tol * scale && norm > 0.0 {
            q.push(v / norm);
        }
    }
    q
}

/// Numerical rank of a matrix from its singular values.
pub fn rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let max = sv.max();
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

/// Chebyshev polynomial of the second kind `U_n(x)` and its derivative.
pub fn chebyshev_u(n: usize, x: f64) -> (f64, f64) {
    let (mut u_prev, mut u) = (0.0, 1.0);
    let (mut d_prev, mut d) = (0.0, 0.0);
    for _ in 0..n {
        let u_next = 2.0 * x * u - u_prev;
        let d_next = 2.0 * u + 2.0 * x * d - d_prev;
        u_prev = u;
        u = u_next;
        d_prev = d;
        d = d_next;
    }
    (u, d)
}

pub fn frobenius_asymmetry(m: &DMatrix<f64>) -> f64 {
    let norm = m.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (m - m.transpose()).norm() / norm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> SparseSym {
        let mut a = SparseSym::new(n);
        for i in 0..n {
            a.add_sym(i, i, 2.0);
            if i + 1 < n {
                a.add_sym(i, i + 1, -1.0);
            }
        }
        a
    }

    #[test]
    fn banded_cholesky_solves_tridiagonal() {
        let a = laplacian_1d(50);
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = a.matvec(&x);
        let chol = BandedCholesky::factor(&a).unwrap();
        assert_eq!(chol.bandwidth(), 1);
        let y = chol.solve(&b);
        for (u, v) in x.iter().zip(&y) {
            assert!((u - v).abs() < 1e-10);
        }
    }

    #[test]
    fn banded_cholesky_rejects_indefinite() {
        let a = laplacian_1d(10).shifted(10.0, &[1.0; 10]);
        assert!(matches!(
            BandedCholesky::factor(&a),
            Err(Error::NotPositiveDefinite { .. })
        ));
    }

    #[test]
    fn rcm_reduces_bandwidth_of_periodic_chain() {
        let n = 40;
        let mut a = SparseSym::new(n);
        for i in 0..n {
            a.add_sym(i, i, 3.0);
            a.add_sym(i, (i + 1) % n, -1.0);
        }
        let chol = BandedCholesky::factor(&a).unwrap();
        assert!(chol.bandwidth() <= 2);
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let y = chol.solve(&a.matvec(&x));
        assert!(x.iter().zip(&y).all(|(u, v)| (u - v).abs() < 1e-9));
    }

    #[test]
    fn null_space_of_single_functional() {
        let c = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]);
        let (basis, rank) = null_space(&c, 1e-12);
        assert_eq!(rank, 1);
        assert_eq!(basis.ncols(), 2);
        assert!((&c * &basis).norm() < 1e-14);
        assert!((basis.transpose() * &basis - DMatrix::identity(2, 2)).norm() < 1e-14);
    }

    #[test]
    fn chebyshev_u_matches_sine_ratio() {
        let theta: f64 = 0.7;
        for n in 0..6 {
            let (u, d) = chebyshev_u(n, theta.cos());
            let expect = ((n + 1) as f64 * theta).sin() / theta.sin();
            assert!((u - expect).abs() < 1e-12);
            let h = 1e-6;
            let fd = (chebyshev_u(n, theta.cos() + h).0 - chebyshev_u(n, theta.cos() - h).0) / (2.0 * h);
            assert!((d - fd).abs() < 1e-5 * (1.0 + d.abs()));
        }
    }
}
