//! Five-point finite differences on rectangles (Dirichlet) and flat tori
//! (periodic) with grid-aligned nodal sets.

mod assemble;
mod helmholtz;
mod nodal;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::criticality::{self, CoefficientVector, ConstrainedBasis, TraceSet, WeightRho};
use crate::dtn::DtnOperator;
use crate::error::{Error, Result};
use crate::linalg;
use crate::partition::Partition;

pub use assemble::{assemble_dtn, interface_mismatch};
pub use helmholtz::{HelmholtzSolution, SubdomainSolver};
pub use nodal::{extract_nodal_partition, GridPartition};

/// Largest number of eigenpairs `eigensolve` returns.
pub const MAX_EIGENPAIRS: usize = 40;

/// Zero threshold for DtN eigenvalue counts is `ZERO_THRESHOLD_C0 * h`.
pub const ZERO_THRESHOLD_C0: f64 = 8.0;

/// Residual bound every returned eigenpair satisfies.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Dirichlet,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub width: f64,
    pub height: f64,
    /// Cells along x and y.
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
    pub boundary: Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    West,
    East,
    South,
    North,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::West, Direction::East, Direction::South, Direction::North];

    pub fn opposite(self) -> Self {
        match self {
            Direction::West => Direction::East,
            Direction::East => Direction::West,
            Direction::South => Direction::North,
            Direction::North => Direction::South,
        }
    }
}

fn cells(length: f64, h: f64) -> Result<usize> {
    let n = (length / h).round();
    if n < 2.0 || ((n * h - length) / length).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "spacing {h} does not divide length {length} into whole cells"
        )));
    }
    Ok(n as usize)
}

impl Grid {
    pub fn rectangle(width: f64, height: f64, h: f64) -> Result<Self> {
        Self::new(width, height, h, Boundary::Dirichlet)
    }

    pub fn torus(width: f64, height: f64, h: f64) -> Result<Self> {
        Self::new(width, height, h, Boundary::Periodic)
    }

    pub fn new(width: f64, height: f64, h: f64, boundary: Boundary) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::InvalidInput(format!("grid spacing must be positive, got {h}")));
        }
        Ok(Self {
            width,
            height,
            nx: cells(width, h)?,
            ny: cells(height, h)?,
            h,
            boundary,
        })
    }

    /// Unknowns along x.
    pub fn mx(&self) -> usize {
        match self.boundary {
            Boundary::Dirichlet => self.nx - 1,
            Boundary::Periodic => self.nx,
        }
    }

    pub fn my(&self) -> usize {
        match self.boundary {
            Boundary::Dirichlet => self.ny - 1,
            Boundary::Periodic => self.ny,
        }
    }

    pub fn node_count(&self) -> usize {
        self.mx() * self.my()
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.mx() + i
    }

    pub fn ij(&self, node: usize) -> (usize, usize) {
        (node % self.mx(), node / self.mx())
    }

    fn offset(&self) -> f64 {
        match self.boundary {
            Boundary::Dirichlet => self.h,
            Boundary::Periodic => 0.0,
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        self.offset() + i as f64 * self.h
    }

    pub fn y(&self, j: usize) -> f64 {
        self.offset() + j as f64 * self.h
    }

    /// Neighboring unknown, or `None` across a Dirichlet wall.
    pub fn neighbor(&self, node: usize, dir: Direction) -> Option<usize> {
        let (i, j) = self.ij(node);
        let (mx, my) = (self.mx(), self.my());
        let periodic = self.boundary == Boundary::Periodic;
        let step = |k: usize, n: usize, forward: bool| -> Option<usize> {
            match (forward, periodic) {
                (true, _) if k + 1 < n => Some(k + 1),
                (true, true) => Some(0),
                (false, _) if k > 0 => Some(k - 1),
                (false, true) => Some(n - 1),
                _ => None,
            }
        };
        match dir {
            Direction::West => step(i, mx, false).map(|i| self.index(i, j)),
            Direction::East => step(i, mx, true).map(|i| self.index(i, j)),
            Direction::South => step(j, my, false).map(|j| self.index(i, j)),
            Direction::North => step(j, my, true).map(|j| self.index(i, j)),
        }
    }

    /// `-Delta_h v`.
    pub fn apply_laplacian(&self, v: &[f64]) -> Vec<f64> {
        let inv = 1.0 / (self.h * self.h);
        (0..self.node_count())
            .map(|k| {
                let mut s = 4.0 * v[k];
                for d in Direction::ALL {
                    if let Some(n) = self.neighbor(k, d) {
                        s -= v[n];
                    }
                }
                s * inv
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteEigenpair {
    pub value: f64,
    /// Unit norm in the grid L² pairing `h² sum v²`.
    pub vector: Vec<f64>,
    pub residual: f64,
    /// Indices of the one-dimensional factors (0-based, ascending in each direction).
    pub label: (usize, usize),
}

/// One-dimensional second-difference operator along an axis, eigen-decomposed.
/// For periodic axes each degenerate pair is rotated so that its first vector
/// is cosine-like and its second vanishes at node 0.
struct Axis {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
}

fn axis(n: usize, h: f64, boundary: Boundary) -> Axis {
    let inv = 1.0 / (h * h);
    let mut t = DMatrix::zeros(n, n);
    for i in 0..n {
        t[(i, i)] = 2.0 * inv;
        if i + 1 < n {
            t[(i, i + 1)] = -inv;
            t[(i + 1, i)] = -inv;
        }
    }
    if boundary == Boundary::Periodic {
        t[(0, n - 1)] -= inv;
        t[(n - 1, 0)] -= inv;
    }
    let (values, mut vectors) = linalg::sym_eigen_sorted(&t);
    if boundary == Boundary::Periodic {
        let mut k = 1;
        while k + 1 < n {
            if (values[k] - values[k + 1]).abs() <= 1e-9 * values[k + 1] {
                let u = vectors.column(k).into_owned();
                let w = vectors.column(k + 1).into_owned();
                let mut sin_like = &w * u[0] - &u * w[0];
                sin_like /= sin_like.norm();
                // Projection of the first unit vector onto the pair.
                let mut cos_like = &u * u[0] + &w * w[0];
                cos_like /= cos_like.norm();
                linalg::fix_sign(&mut cos_like);
                linalg::fix_sign(&mut sin_like);
                vectors.set_column(k, &cos_like);
                vectors.set_column(k + 1, &sin_like);
                k += 2;
            } else {
                k += 1;
            }
        }
    }
    Axis { values, vectors }
}

fn product_pair(grid: &Grid, ax: &Axis, ay: &Axis, label: (usize, usize)) -> Result<DiscreteEigenpair> {
    let (p, r) = label;
    if p >= ax.values.len() || r >= ay.values.len() {
        return Err(Error::InvalidInput(format!("mode label {label:?} outside the grid")));
    }
    let value = ax.values[p] + ay.values[r];
    let (mx, my) = (grid.mx(), grid.my());
    let mut vector = vec![0.0; mx * my];
    for j in 0..my {
        for i in 0..mx {
            vector[j * mx + i] = ax.vectors[(i, p)] * ay.vectors[(j, r)] / grid.h;
        }
    }
    let lv = grid.apply_laplacian(&vector);
    let num: f64 = lv
        .iter()
        .zip(&vector)
        .map(|(a, v)| (a - value * v).powi(2))
        .sum::<f64>()
        .sqrt();
    let den: f64 = vector.iter().map(|v| v * v).sum::<f64>().sqrt();
    let residual = num / den;
    if residual > EIGEN_RESIDUAL_TOL {
        return Err(Error::NonConvergence(format!(
            "eigenpair {label:?} has residual {residual:.3e}"
        )));
    }
    Ok(DiscreteEigenpair {
        value,
        vector,
        residual,
        label,
    })
}

/// Lowest `count` eigenpairs of the five-point operator, ascending. The operator
/// is a Kronecker sum, so the pairs are products of one-dimensional eigenvectors;
/// degenerate clusters come out as orthonormal product bases.
pub fn eigensolve(grid: &Grid, count: usize) -> Result<Vec<DiscreteEigenpair>> {
    if count > MAX_EIGENPAIRS {
        return Err(Error::InvalidInput(format!(
            "at most {MAX_EIGENPAIRS} eigenpairs, asked for {count}"
        )));
    }
    let ax = axis(grid.mx(), grid.h, grid.boundary);
    let ay = axis(grid.my(), grid.h, grid.boundary);
    let mut labels: Vec<(usize, usize)> = (0..ax.values.len().min(count))
        .flat_map(|p| (0..ay.values.len().min(count)).map(move |r| (p, r)))
        .collect();
    labels.sort_by(|a, b| {
        (ax.values[a.0] + ay.values[a.1])
            .total_cmp(&(ax.values[b.0] + ay.values[b.1]))
            .then(a.cmp(b))
    });
    labels
        .into_iter()
        .take(count)
        .map(|l| product_pair(grid, &ax, &ay, l))
        .collect()
}

/// The product eigenpair with the given label.
pub fn eigenpair(grid: &Grid, label: (usize, usize)) -> Result<DiscreteEigenpair> {
    let ax = axis(grid.mx(), grid.h, grid.boundary);
    let ay = axis(grid.my(), grid.h, grid.boundary);
    product_pair(grid, &ax, &ay, label)
}

/// Label of the rectangle mode `sin(m pi x / a) sin(n pi y / b)`.
pub fn rectangle_label(m: usize, n: usize) -> (usize, usize) {
    (m - 1, n - 1)
}

/// Everything the grid backend derives from one eigenpair.
#[derive(Debug, Clone)]
pub struct GridAnalysis {
    pub nodal: GridPartition,
    /// The partition the operator was assembled for (orientation may differ from `nodal`).
    pub partition: Partition,
    pub traces: TraceSet,
    pub coefficients: CoefficientVector,
    pub criticality_residual: f64,
    pub rho: WeightRho,
    pub s: ConstrainedBasis,
    pub dtn: DtnOperator,
}

/// Nodal extraction, criticality data, S and the assembled DtN operator.
/// `nu_signs` overrides the canonical orientation.
pub fn analyze(grid: &Grid, pair: &DiscreteEigenpair, nu_signs: Option<&[i8]>) -> Result<GridAnalysis> {
    let nodal = extract_nodal_partition(grid, pair)?;
    let partition = match nu_signs {
        Some(s) => nodal.partition.with_orientation(s)?,
        None => nodal.partition.clone(),
    };
    let traces = nodal.traces()?;
    let (coefficients, criticality_residual) = criticality::solve_coefficients(&partition, &traces)?;
    let rho = criticality::compute_rho(
        &partition,
        &coefficients,
        &traces,
        criticality::grid_criticality_tol(grid.h),
    )?;
    let s = criticality::subspace_s_basis(&partition, &traces)?;
    let dtn = assemble_dtn(&nodal, &partition, &s)?;
    Ok(GridAnalysis {
        nodal,
        partition,
        traces,
        coefficients,
        criticality_residual,
        rho,
        s,
        dtn,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    /// Closed-form eigenvalues of the five-point Dirichlet operator on the unit square.
    fn discrete_oracle(h: f64, m: usize, n: usize) -> f64 {
        4.0 / (h * h) * ((m as f64 * PI * h / 2.0).sin().powi(2) + (n as f64 * PI * h / 2.0).sin().powi(2))
    }

    #[test]
    fn unit_square_spectrum() {
        let h = 1.0 / 120.0;
        let g = Grid::rectangle(1.0, 1.0, h).unwrap();
        let pairs = eigensolve(&g, 8).unwrap();
        assert!((pairs[0].value - discrete_oracle(h, 1, 1)).abs() < 1e-9 * pairs[0].value);
        assert!(((pairs[0].value - 2.0 * PI * PI) / (2.0 * PI * PI)).abs() <= 1e-3);
        for p in &pairs {
            assert!(p.residual <= EIGEN_RESIDUAL_TOL);
            let norm: f64 = h * h * p.vector.iter().map(|v| v * v).sum::<f64>();
            assert!((norm - 1.0).abs() < 1e-12);
            let (m, n) = (p.label.0 + 1, p.label.1 + 1);
            assert!((p.value - discrete_oracle(h, m, n)).abs() < 1e-9 * p.value);
        }
        // Fifth and sixth: the (3,1)/(1,3) pair near 10 pi².
        assert!((pairs[4].value - pairs[5].value).abs() < 1e-9 * pairs[4].value);
        assert!(((pairs[4].value - 10.0 * PI * PI) / (10.0 * PI * PI)).abs() < 1e-3);
        let dot: f64 = pairs[4].vector.iter().zip(&pairs[5].vector).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-10);
    }

    #[test]
    fn torus_ground_state_is_constant() {
        let g = Grid::torus(1.0, 1.0, 1.0 / 40.0).unwrap();
        let pairs = eigensolve(&g, 5).unwrap();
        assert!(pairs[0].value.abs() < 1e-9);
        let v = &pairs[0].vector;
        assert!(v.iter().all(|x| (x - v[0]).abs() < 1e-10));
        // Next four: (2 pi)² with multiplicity four.
        for p in &pairs[1..5] {
            assert!((p.value - pairs[1].value).abs() < 1e-9 * p.value);
        }
    }

    #[test]
    fn spacing_must_divide_the_sides() {
        assert!(Grid::rectangle(1.0, 1.0, 0.3).is_err());
        assert!(eigensolve(&Grid::rectangle(1.0, 1.0, 0.1).unwrap(), 41).is_err());
    }
}
