//! Criticality coefficients, the interface weight rho and the discrete
//! subspaces S (admissible Dirichlet data) and F (tangent directions).

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::partition::Partition;

/// Default acceptance threshold on the criticality residual for exact backends.
pub const EXACT_CRITICALITY_TOL: f64 = 1e-6;

/// Criticality threshold for finite-difference backends at spacing `h`.
pub fn grid_criticality_tol(h: f64) -> f64 {
    50.0 * h
}

/// Relative size below which a trace counts as vanishing.
const GENERICITY_TOL: f64 = 1e-10;

/// One-sided outward normal derivatives of the positive, L²-normalized ground
/// states, sampled at the interface nodes: `values[i][side][node]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSet {
    pub values: Vec<[Vec<f64>; 2]>,
}

impl TraceSet {
    pub fn new(values: Vec<[Vec<f64>; 2]>) -> Self {
        Self { values }
    }

    fn check_shape(&self, p: &Partition) -> Result<()> {
        if self.values.len() != p.interfaces.len() {
            return Err(Error::InvalidInput(format!(
                "{} trace records for {} interfaces",
                self.values.len(),
                p.interfaces.len()
            )));
        }
        for (iface, v) in p.interfaces.iter().zip(&self.values) {
            let n = iface.nodes.len();
            if v[0].len() != n || v[1].len() != n {
                return Err(Error::InvalidInput(format!(
                    "interface {} has {n} nodes but traces of length {} and {}",
                    iface.id,
                    v[0].len(),
                    v[1].len()
                )));
            }
        }
        Ok(())
    }

    fn check_generic(&self) -> Result<()> {
        let max = self
            .values
            .iter()
            .flat_map(|v| v.iter().flatten())
            .fold(0.0f64, |m, t| m.max(t.abs()));
        for (i, v) in self.values.iter().enumerate() {
            for (side, t) in v.iter().enumerate() {
                if let Some(k) = t.iter().position(|t| !(t.abs() > GENERICITY_TOL * max)) {
                    return Err(Error::Genericity(format!(
                        "ground-state trace vanishes at node {k} of interface {i}, side {side}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Multiplies every trace by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self
                .values
                .iter()
                .map(|[a, b]| [a.iter().map(|t| c * t).collect(), b.iter().map(|t| c * t).collect()])
                .collect(),
        }
    }
}

/// Criticality coefficients with unit sum of squares.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    pub a: Vec<f64>,
}

impl CoefficientVector {
    pub fn norm_squared(&self) -> f64 {
        self.a.iter().map(|x| x * x).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightRho {
    /// Values at the interface nodes in global node order.
    pub values: DVector<f64>,
    pub positive: Vec<bool>,
    /// Side-consistency residual of the two one-sided evaluations.
    pub residual: f64,
}

impl WeightRho {
    pub fn all_positive(&self) -> bool {
        self.positive.iter().all(|&p| p)
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Max over interfaces of the deviation of the two-sided ratio
/// `|a_0 t_0| / |a_1 t_1|` from its interface median, together with the
/// deviation of the median itself from one.
pub fn criticality_residual(p: &Partition, traces: &TraceSet, a: &CoefficientVector) -> f64 {
    let mut worst = 0.0f64;
    for (iface, t) in p.interfaces.iter().zip(&traces.values) {
        let [j0, j1] = iface.adjacent;
        let mut ratios: Vec<f64> = t[0]
            .iter()
            .zip(&t[1])
            .map(|(t0, t1)| (a.a[j0] * t0).abs() / (a.a[j1] * t1).abs())
            .collect();
        let r = ratios.clone();
        let m = median(&mut ratios);
        let spread = r.iter().map(|x| (x / m - 1.0).abs()).fold(0.0, f64::max);
        worst = worst.max(spread).max((m - 1.0).abs());
    }
    worst
}

/// Solves `|a_i dpsi_i| = |a_j dpsi_j|` in least squares for `log|a|`,
/// weighting each node equation by its quadrature weight. Signs follow the
/// bipartite coloring when there is one and are +1 otherwise.
pub fn solve_coefficients(p: &Partition, traces: &TraceSet) -> Result<(CoefficientVector, f64)> {
    traces.check_shape(p)?;
    traces.check_generic()?;
    let k = p.subdomain_count();
    let rows = p.dof_count();
    let mut lhs = DMatrix::zeros(rows, k);
    let mut rhs = DVector::zeros(rows);
    let mut r = 0;
    for (iface, t) in p.interfaces.iter().zip(&traces.values) {
        let [j0, j1] = iface.adjacent;
        for (node, (t0, t1)) in iface.nodes.iter().zip(t[0].iter().zip(&t[1])) {
            let s = node.weight.sqrt();
            lhs[(r, j0)] = s;
            lhs[(r, j1)] = -s;
            rhs[r] = s * (t1.abs().ln() - t0.abs().ln());
            r += 1;
        }
    }
    let log_a = if rows == 0 {
        DVector::zeros(k)
    } else {
        lhs.svd(true, true)
            .solve(&rhs, 1e-12)
            .map_err(|e| Error::NonConvergence(e.to_string()))?
    };
    // Fix the gauge before exponentiating so that the result does not depend on
    // the overall scale of the traces.
    let shift = log_a.mean();
    let mut a: Vec<f64> = log_a.iter().map(|x| (x - shift).exp()).collect();
    let norm = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    for x in &mut a {
        *x /= norm;
    }
    if let Some(eta) = p.check_bipartite() {
        for (x, s) in a.iter_mut().zip(eta) {
            *x *= f64::from(s);
        }
    }
    let a = CoefficientVector { a };
    let residual = criticality_residual(p, traces, &a);
    Ok((a, residual))
}

/// `rho = |a_j dpsi_j / dnu_j|`, averaged over the two sides of each node.
pub fn compute_rho(p: &Partition, a: &CoefficientVector, traces: &TraceSet, threshold: f64) -> Result<WeightRho> {
    traces.check_shape(p)?;
    let residual = criticality_residual(p, traces, a);
    if !(residual <= threshold) {
        return Err(Error::NotCritical { residual, threshold });
    }
    let mut values = Vec::with_capacity(p.dof_count());
    for (iface, t) in p.interfaces.iter().zip(&traces.values) {
        let [j0, j1] = iface.adjacent;
        for (t0, t1) in t[0].iter().zip(&t[1]) {
            values.push(0.5 * ((a.a[j0] * t0).abs() + (a.a[j1] * t1).abs()));
        }
    }
    let positive: Vec<bool> = values.iter().map(|&v| v > 0.0).collect();
    if let Some(k) = positive.iter().position(|&ok| !ok) {
        return Err(Error::Genericity(format!("rho vanishes at interface node {k}")));
    }
    Ok(WeightRho {
        values: DVector::from_vec(values),
        positive,
        residual,
    })
}

/// Rows `f -> sum_m w_m chi_j f_m g_j(m)` for each subdomain j, where `g` is
/// the trace raised to `power` (1 for S, 2 for F).
fn constraint_matrix(p: &Partition, traces: &TraceSet, power: i32) -> DMatrix<f64> {
    let offsets = p.dof_offsets();
    let mut c = DMatrix::zeros(p.subdomain_count(), p.dof_count());
    for (i, iface) in p.interfaces.iter().enumerate() {
        for side in 0..2 {
            let j = iface.adjacent[side];
            let chi = iface.chi(side);
            for (m, node) in iface.nodes.iter().enumerate() {
                c[(j, offsets[i] + m)] += node.weight * chi * traces.values[i][side][m].powi(power);
            }
        }
    }
    c
}

/// Orthonormal basis of a constrained subspace of interface-node space.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstrainedBasis {
    /// Columns are node vectors, orthonormal in the weighted pairing given by `metric`.
    pub basis: DMatrix<f64>,
    /// Diagonal of the inner product: quadrature weights (times rho² for F).
    pub metric: DVector<f64>,
    pub constraints: DMatrix<f64>,
    /// Observed rank of the constraint matrix.
    pub rank: usize,
}

impl ConstrainedBasis {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Largest constraint value over the basis, relative to the basis norm.
    pub fn membership_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for col in self.basis.column_iter() {
            let v = &self.constraints * col;
            worst = worst.max(v.amax() / col.norm().max(f64::MIN_POSITIVE));
        }
        worst
    }

    /// Coordinates of `f` in the basis (orthogonal projection).
    pub fn coordinates(&self, f: &DVector<f64>) -> DVector<f64> {
        self.basis.transpose() * f.component_mul(&self.metric)
    }

    pub fn project(&self, f: &DVector<f64>) -> DVector<f64> {
        &self.basis * self.coordinates(f)
    }
}

fn constrained_basis(constraints: DMatrix<f64>, metric: DVector<f64>) -> ConstrainedBasis {
    // Substituting g = M^{1/2} f turns the weighted problem into a Euclidean one.
    let sqrt_m = metric.map(f64::sqrt);
    let mut scaled = constraints.clone();
    for (mut col, s) in scaled.column_iter_mut().zip(sqrt_m.iter()) {
        col /= *s;
    }
    let (g, rank) = linalg::null_space(&scaled, 1e-10);
    let mut basis = g;
    for (mut row, s) in basis.row_iter_mut().zip(sqrt_m.iter()) {
        row /= *s;
    }
    ConstrainedBasis {
        basis,
        metric,
        constraints,
        rank,
    }
}

/// Discrete S: data f with `int_{dOmega_j} chi_j f dpsi_j/dnu_j = 0` for every j,
/// orthonormal in the quadrature pairing.
pub fn subspace_s_basis(p: &Partition, traces: &TraceSet) -> Result<ConstrainedBasis> {
    traces.check_shape(p)?;
    Ok(constrained_basis(constraint_matrix(p, traces, 1), p.weights()))
}

/// Discrete F: directions φ with `int chi_j φ (dpsi_j/dnu_j)² = 0` for every j,
/// orthonormal in the rho-weighted pairing.
pub fn subspace_f_basis(p: &Partition, traces: &TraceSet, rho: &WeightRho) -> Result<ConstrainedBasis> {
    traces.check_shape(p)?;
    let metric = p.weights().component_mul(&rho.values.component_mul(&rho.values));
    Ok(constrained_basis(constraint_matrix(p, traces, 2), metric))
}

/// Checks that multiplication by rho maps F onto S: equal dimensions and the
/// image of the F basis lies in S up to `tol` relative.
pub fn rho_maps_f_onto_s(s: &ConstrainedBasis, f: &ConstrainedBasis, rho: &WeightRho) -> bool {
    if s.dim() != f.dim() {
        return false;
    }
    if f.dim() == 0 {
        return true;
    }
    let mut image = f.basis.clone();
    for (mut row, r) in image.row_iter_mut().zip(rho.values.iter()) {
        row *= *r;
    }
    let coords = s.basis.transpose() * DMatrix::from_diagonal(&s.metric) * &image;
    let residual = (&image - &s.basis * &coords).norm() / image.norm();
    residual < 1e-8 && linalg::rank(&coords, 1e-8) == s.dim()
}
