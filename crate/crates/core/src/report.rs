//! Mode metadata, DtN eigenvalue counts, the Hessian operator and the
//! index/nullity identity report.

use std::f64::consts::PI;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::criticality::WeightRho;
use crate::dtn::{count_signs, DtnOperator};
use crate::error::{Error, Result};
use crate::linalg;

/// Relative cluster tolerance for closed-form spectra.
pub const ANALYTIC_CLUSTER_TOL: f64 = 1e-6;

/// Relative cluster tolerance `20 h² lambda / lambda` for five-point spectra.
pub fn discrete_cluster_tol(h: f64) -> f64 {
    20.0 * h * h
}

/// Similarity tolerance for `eig(H) = 2 eig(Lambda)`.
pub const SIMILARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeInfo {
    pub lambda: f64,
    pub multiplicity: usize,
    /// Minimal label: one plus the number of eigenvalues strictly below the cluster.
    pub label: usize,
    pub nodal_count: usize,
    pub deficiency: i64,
    /// Relative tolerance used to form the cluster.
    pub cluster_tol: f64,
}

/// Cluster of `lambda` in an eigenvalue list containing at least every
/// eigenvalue up to the cluster.
pub fn mode_info_from_spectrum(values: &[f64], lambda: f64, nodal_count: usize, rel_tol: f64) -> Result<ModeInfo> {
    if !(rel_tol > 0.0) || !(lambda > 0.0) {
        return Err(Error::InvalidInput(
            "cluster tolerance and eigenvalue must be positive".into(),
        ));
    }
    let tol = rel_tol * lambda;
    let below = values.iter().filter(|&&v| v < lambda - tol).count();
    let multiplicity = values.iter().filter(|&&v| (v - lambda).abs() <= tol).count();
    if multiplicity == 0 {
        return Err(Error::InvalidInput(format!("{lambda} is not in the spectrum")));
    }
    // Eigenvalues within one tolerance of either cluster edge.
    let near_low = values
        .iter()
        .filter(|&&v| v < lambda - tol && v >= lambda - 2.0 * tol)
        .count();
    let near_high = values
        .iter()
        .filter(|&&v| v > lambda + tol && v <= lambda + 2.0 * tol)
        .count();
    if near_low > 0 || near_high > 0 {
        return Err(Error::AmbiguousCluster {
            low: 1 + below - near_low,
            high: 1 + below,
        });
    }
    let label = 1 + below;
    Ok(ModeInfo {
        lambda,
        multiplicity,
        label,
        nodal_count,
        deficiency: label as i64 - nodal_count as i64,
        cluster_tol: rel_tol,
    })
}

/// Mode `sin(m pi x / a) sin(n pi y / b)` of the Dirichlet rectangle.
pub fn rectangle_mode_info(width: f64, height: f64, m: usize, n: usize) -> Result<ModeInfo> {
    rectangle_mode_info_with_tol(width, height, m, n, ANALYTIC_CLUSTER_TOL)
}

pub fn rectangle_mode_info_with_tol(width: f64, height: f64, m: usize, n: usize, rel_tol: f64) -> Result<ModeInfo> {
    if m == 0 || n == 0 {
        return Err(Error::InvalidInput("mode indices start at 1".into()));
    }
    let value = |p: usize, r: usize| PI * PI * ((p as f64 / width).powi(2) + (r as f64 / height).powi(2));
    let lambda = value(m, n);
    let reach = lambda * (1.0 + 4.0 * rel_tol);
    let p_max = (width * reach.sqrt() / PI).ceil() as usize + 1;
    let r_max = (height * reach.sqrt() / PI).ceil() as usize + 1;
    let values: Vec<f64> = (1..=p_max)
        .flat_map(|p| (1..=r_max).map(move |r| (p, r)))
        .map(|(p, r)| value(p, r))
        .filter(|&v| v <= reach)
        .collect();
    mode_info_from_spectrum(&values, lambda, m * n, rel_tol)
}

/// The nodal `k`-partition of a circle of length `circumference` (k even):
/// eigenfunction `sin(pi k s / L)`.
pub fn circle_mode_info(circumference: f64, k: usize) -> Result<ModeInfo> {
    if k < 2 || k % 2 == 1 {
        return Err(Error::InvalidInput(format!(
            "the equal {k}-partition of a circle is not nodal"
        )));
    }
    let lambda = (PI * k as f64 / circumference).powi(2);
    // (2 pi j / L)², j >= 0, with j > 0 doubly degenerate.
    let values: Vec<f64> = (0..=k / 2 + 1)
        .flat_map(|j| {
            let v = (2.0 * PI * j as f64 / circumference).powi(2);
            if j == 0 {
                vec![v]
            } else {
                vec![v, v]
            }
        })
        .collect();
    mode_info_from_spectrum(&values, lambda, k, ANALYTIC_CLUSTER_TOL)
}

/// Mode with wave numbers `(kx, ky)` on the flat torus `[0, a) x [0, b)`,
/// for the product of `cos` or `sin` factors with `max(2k, 1)` nodal
/// domains along each axis.
pub fn torus_mode_info(width: f64, height: f64, kx: usize, ky: usize) -> Result<ModeInfo> {
    let value = |p: i64, r: i64| 4.0 * PI * PI * ((p as f64 / width).powi(2) + (r as f64 / height).powi(2));
    let lambda = value(kx as i64, ky as i64);
    if lambda == 0.0 {
        return Ok(ModeInfo {
            lambda,
            multiplicity: 1,
            label: 1,
            nodal_count: 1,
            deficiency: 0,
            cluster_tol: ANALYTIC_CLUSTER_TOL,
        });
    }
    let reach = lambda * (1.0 + 4.0 * ANALYTIC_CLUSTER_TOL);
    let p_max = (width * reach.sqrt() / (2.0 * PI)).ceil() as i64 + 1;
    let r_max = (height * reach.sqrt() / (2.0 * PI)).ceil() as i64 + 1;
    let values: Vec<f64> = (-p_max..=p_max)
        .flat_map(|p| (-r_max..=r_max).map(move |r| (p, r)))
        .map(|(p, r)| value(p, r))
        .filter(|&v| v <= reach)
        .collect();
    let nodal = (2 * kx).max(1) * (2 * ky).max(1);
    mode_info_from_spectrum(&values, lambda, nodal, ANALYTIC_CLUSTER_TOL)
}

/// Mode metadata from a discrete spectrum (ascending, reaching past `lambda`).
pub fn discrete_mode_info(values: &[f64], lambda: f64, nodal_count: usize, h: f64) -> Result<ModeInfo> {
    mode_info_from_spectrum(values, lambda, nodal_count, discrete_cluster_tol(h))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralCounts {
    pub n_minus: usize,
    pub n_zero: usize,
    pub threshold: f64,
    /// Eigenvalues at or below the reporting cap, ascending.
    pub eigenvalues: Vec<f64>,
    pub cap: f64,
    pub dimension: usize,
    /// Largest |sigma| counted as zero (0 if none).
    pub zero_max: f64,
    /// Smallest |sigma| above the threshold (infinite if none).
    pub gap: f64,
    /// Whether the counts are unchanged with the threshold halved.
    pub stable_under_halving: bool,
}

impl SpectralCounts {
    pub fn new(values: &[f64], threshold: f64, cap: f64) -> Self {
        let (n_minus, n_zero) = count_signs(values, threshold);
        let stable_under_halving = count_signs(values, 0.5 * threshold) == (n_minus, n_zero);
        let zero_max = values
            .iter()
            .map(|v| v.abs())
            .filter(|&a| a <= threshold)
            .fold(0.0, f64::max);
        let gap = values
            .iter()
            .map(|v| v.abs())
            .filter(|&a| a > threshold)
            .fold(f64::INFINITY, f64::min);
        Self {
            n_minus,
            n_zero,
            threshold,
            eigenvalues: values.iter().copied().filter(|&v| v <= cap).collect(),
            cap,
            dimension: values.len(),
            zero_max,
            gap,
            stable_under_halving,
        }
    }
}

/// `H = 2 rho^-1 Lambda rho` on F, in a basis orthonormal for the
/// `rho`-weighted pairing `sum w rho² phi psi`.
#[derive(Debug, Clone, PartialEq)]
pub struct HessianOperator {
    pub matrix: DMatrix<f64>,
    /// Node values of the F basis.
    pub basis: DMatrix<f64>,
    pub rho: DVector<f64>,
    weights: DVector<f64>,
    dtn: DtnOperator,
}

pub fn hessian_operator(dtn: &DtnOperator, rho: &WeightRho) -> Result<HessianOperator> {
    let n = dtn.basis.nrows();
    if rho.values.len() != n {
        return Err(Error::InvalidInput("rho does not match the DtN node count".into()));
    }
    if let Some(k) = rho.values.iter().position(|&r| !(r > 0.0)) {
        return Err(Error::Genericity(format!("rho is not positive at node {k}")));
    }
    let d = dtn.dim();
    let rho_v = rho.values.clone();
    // F = rho^-1 S, orthonormalized in the weighted pairing by QR of
    // diag(sqrt(w) rho) Phi.
    let mut phi = dtn.basis.clone();
    for mut col in phi.column_iter_mut() {
        col.component_div_assign(&rho_v);
    }
    let scale = dtn.weights.map(f64::sqrt).component_mul(&rho_v);
    let mut scaled = phi.clone();
    for mut col in scaled.column_iter_mut() {
        col.component_mul_assign(&scale);
    }
    let basis = if d == 0 {
        DMatrix::zeros(n, 0)
    } else {
        let q = scaled.qr().q();
        let mut b = q.columns(0, d).into_owned();
        for mut col in b.column_iter_mut() {
            col.component_div_assign(&scale);
        }
        b
    };
    let mut matrix = DMatrix::zeros(d, d);
    let rw = dtn.weights.component_mul(&rho_v);
    for c in 0..d {
        let f = basis.column(c).component_mul(&rho_v);
        let lf = dtn.apply(&f);
        for r in 0..d {
            matrix[(r, c)] = 2.0 * basis.column(r).component_mul(&rw).dot(&lf);
        }
    }
    let matrix = 0.5 * (&matrix + matrix.transpose());
    Ok(HessianOperator {
        matrix,
        basis,
        rho: rho_v,
        weights: dtn.weights.clone(),
        dtn: dtn.clone(),
    })
}

impl HessianOperator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::sym_eigen_sorted(&self.matrix).0
    }

    /// `2 rho^-1 Lambda (rho phi)` for node data `phi`.
    pub fn apply(&self, phi: &DVector<f64>) -> DVector<f64> {
        let lf = self.dtn.apply(&phi.component_mul(&self.rho));
        2.0 * lf.component_div(&self.rho)
    }

    /// `sum w rho² phi psi`.
    pub fn inner(&self, phi: &DVector<f64>, psi: &DVector<f64>) -> f64 {
        phi.component_mul(psi)
            .component_mul(&self.rho)
            .component_mul(&self.rho)
            .dot(&self.weights)
    }
}

/// Largest deviation of `eig(H)` from `2 eig(Lambda)`, relative to the
/// spectral radius of `2 Lambda` (or absolute when that vanishes).
pub fn similarity_error(h: &HessianOperator, dtn: &DtnOperator) -> f64 {
    let a = h.eigenvalues();
    let b: Vec<f64> = dtn.eigenvalues().iter().map(|s| 2.0 * s).collect();
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let scale = b.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
    a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub expected: String,
    pub actual: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub case: String,
    pub bipartite: bool,
    pub info: Option<ModeInfo>,
    pub counts: SpectralCounts,
    pub similarity_error: Option<f64>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl IdentityReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// `key=value` lines, one per field, checks prefixed by `check.`.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "case={}", self.case);
        let _ = writeln!(s, "bipartite={}", self.bipartite);
        if let Some(i) = &self.info {
            let _ = writeln!(s, "lambda={:.12e}", i.lambda);
            let _ = writeln!(s, "label={}", i.label);
            let _ = writeln!(s, "nodal_count={}", i.nodal_count);
            let _ = writeln!(s, "deficiency={}", i.deficiency);
            let _ = writeln!(s, "multiplicity={}", i.multiplicity);
            let _ = writeln!(s, "cluster_tol={:e}", i.cluster_tol);
        }
        let c = &self.counts;
        let _ = writeln!(s, "dim_s={}", c.dimension);
        let _ = writeln!(s, "n_minus={}", c.n_minus);
        let _ = writeln!(s, "n_zero={}", c.n_zero);
        let _ = writeln!(s, "zero_threshold={:e}", c.threshold);
        let _ = writeln!(s, "zero_max={:e}", c.zero_max);
        let _ = writeln!(s, "gap={:e}", c.gap);
        let _ = writeln!(s, "stable_under_halving={}", c.stable_under_halving);
        let list: Vec<String> = c.eigenvalues.iter().map(|v| format!("{v:.10e}")).collect();
        let _ = writeln!(s, "eigenvalues={}", list.join(","));
        if let Some(e) = self.similarity_error {
            let _ = writeln!(s, "similarity_error={e:e}");
        }
        for ch in &self.checks {
            let _ = writeln!(s, "check.{}={}", ch.name, if ch.passed { "pass" } else { "fail" });
        }
        for (k, n) in self.notes.iter().enumerate() {
            let _ = writeln!(s, "note.{k}={n}");
        }
        let _ = writeln!(s, "result={}", if self.passed() { "pass" } else { "fail" });
        s
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.case);
        let _ = writeln!(s, "{:<24} {:>14} {:>14}  result", "check", "expected", "actual");
        for ch in &self.checks {
            let _ = writeln!(
                s,
                "{:<24} {:>14} {:>14}  {}",
                ch.name,
                ch.expected,
                ch.actual,
                if ch.passed { "pass" } else { "FAIL" }
            );
        }
        let c = &self.counts;
        let _ = writeln!(
            s,
            "dim S = {}, n- = {}, n0 = {}, tau = {:.3e}, |zero| <= {:.3e}, gap = {:.3e}",
            c.dimension, c.n_minus, c.n_zero, c.threshold, c.zero_max, c.gap
        );
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }
}

/// Checks `n- = delta` and `n0 = multiplicity - 1` for bipartite partitions
/// and `eig(H) = 2 eig(Lambda)` when a similarity error is given. Failures are
/// report entries.
pub fn verify_identities(
    case: &str,
    counts: &SpectralCounts,
    info: Option<&ModeInfo>,
    bipartite: bool,
    similarity: Option<f64>,
) -> IdentityReport {
    let mut checks = Vec::new();
    let mut notes = Vec::new();
    match (bipartite, info) {
        (true, Some(i)) => {
            checks.push(Check {
                name: "courant".into(),
                expected: ">= 0".into(),
                actual: i.deficiency.to_string(),
                passed: i.deficiency >= 0,
            });
            checks.push(Check {
                name: "index".into(),
                expected: i.deficiency.to_string(),
                actual: counts.n_minus.to_string(),
                passed: counts.n_minus as i64 == i.deficiency,
            });
            checks.push(Check {
                name: "nullity".into(),
                expected: (i.multiplicity - 1).to_string(),
                actual: counts.n_zero.to_string(),
                passed: counts.n_zero == i.multiplicity - 1,
            });
        }
        (true, None) => notes.push("no mode metadata: index and nullity not checked".into()),
        (false, _) => notes.push(
            "non-bipartite partition: counts recorded, the deficiency identity belongs to the defect framework and is not asserted"
                .into(),
        ),
    }
    checks.push(Check {
        name: "threshold_stability".into(),
        expected: "stable".into(),
        actual: if counts.stable_under_halving {
            "stable"
        } else {
            "changes"
        }
        .into(),
        passed: counts.stable_under_halving,
    });
    if let Some(e) = similarity {
        checks.push(Check {
            name: "similarity".into(),
            expected: format!("<= {SIMILARITY_TOL:.0e}"),
            actual: format!("{e:.2e}"),
            passed: e <= SIMILARITY_TOL,
        });
    }
    if counts.dimension == 0 {
        notes.push("S is trivial: the operator is empty".into());
    }
    IdentityReport {
        case: case.into(),
        bipartite,
        info: info.cloned(),
        counts: counts.clone(),
        similarity_error: similarity,
        checks,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force oracle: sorted list of all rectangle eigenvalues with indices up to 20.
    fn enumerate(width: f64, height: f64) -> Vec<f64> {
        let mut v: Vec<f64> = (1..=20)
            .flat_map(|p| (1..=20).map(move |r| (p, r)))
            .map(|(p, r)| PI * PI * ((p as f64 / width).powi(2) + (r as f64 / height).powi(2)))
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn square_modes() {
        let i = rectangle_mode_info(1.0, 1.0, 3, 1).unwrap();
        assert_eq!((i.label, i.nodal_count, i.deficiency, i.multiplicity), (5, 3, 2, 2));
        let i = rectangle_mode_info(1.0, 1.0, 2, 1).unwrap();
        assert_eq!((i.label, i.nodal_count, i.deficiency, i.multiplicity), (2, 2, 0, 2));
        // Oracle: the first six values are 2, 5, 5, 8, 10, 10 (units of pi²).
        let v = enumerate(1.0, 1.0);
        let units: Vec<f64> = v[..6].iter().map(|x| (x / (PI * PI)).round()).collect();
        assert_eq!(units, vec![2.0, 5.0, 5.0, 8.0, 10.0, 10.0]);
        assert_eq!(1 + v.iter().filter(|&&x| x < 10.0 * PI * PI * (1.0 - 1e-9)).count(), 5);
    }

    #[test]
    fn rectangle_08_mode_31_is_simple() {
        let i = rectangle_mode_info(1.0, 0.8, 3, 1).unwrap();
        assert_eq!((i.label, i.nodal_count, i.deficiency, i.multiplicity), (5, 3, 2, 1));
        assert!((i.lambda - PI * PI * (9.0 + 1.0 / 0.64)).abs() < 1e-9);
        let v = enumerate(1.0, 0.8);
        let units: Vec<f64> = v[..5].iter().map(|x| x / (PI * PI)).collect();
        for (u, e) in units.iter().zip([2.5625, 5.5625, 7.25, 10.25, 10.5625]) {
            assert!((u - e).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_and_torus_modes() {
        let i = circle_mode_info(2.0 * PI, 4).unwrap();
        assert_eq!((i.label, i.nodal_count, i.deficiency, i.multiplicity), (4, 4, 0, 2));
        assert!(circle_mode_info(2.0 * PI, 3).is_err());
        let i = torus_mode_info(1.0, 1.0, 1, 0).unwrap();
        assert_eq!((i.label, i.multiplicity, i.nodal_count, i.deficiency), (2, 4, 2, 0));
        assert_eq!(torus_mode_info(1.0, 1.0, 0, 0).unwrap().label, 1);
    }

    #[test]
    fn ambiguous_clusters_are_reported() {
        let values = [1.0, 2.0, 3.0 - 1.5e-6 * 3.0, 3.0, 4.0];
        match mode_info_from_spectrum(&values, 3.0, 3, 1e-6) {
            Err(Error::AmbiguousCluster { low, high }) => assert_eq!((low, high), (3, 4)),
            other => panic!("{other:?}"),
        }
        assert_eq!(mode_info_from_spectrum(&values, 3.0, 3, 1e-5).unwrap().multiplicity, 2);
    }

    #[test]
    fn counts_and_threshold_bookkeeping() {
        let c = SpectralCounts::new(&[-3.0, -1.0, 1e-4, 2.0, 50.0], 0.01, 10.0);
        assert_eq!((c.n_minus, c.n_zero, c.dimension), (2, 1, 5));
        assert_eq!(c.eigenvalues.len(), 4);
        assert!(c.stable_under_halving);
        assert_eq!(c.gap, 1.0);
        let c = SpectralCounts::new(&[0.008], 0.01, 10.0);
        assert!(!c.stable_under_halving);
    }

    fn dtn_from(matrix: DMatrix<f64>, weights: DVector<f64>) -> DtnOperator {
        // Basis orthonormal in the weighted pairing: scaled unit vectors.
        let n = weights.len();
        let d = matrix.nrows();
        let mut basis = DMatrix::zeros(n, d);
        for c in 0..d {
            basis[(c, c)] = 1.0 / weights[c].sqrt();
        }
        DtnOperator::from_raw(matrix, basis, weights)
    }

    fn rho_of(values: Vec<f64>) -> WeightRho {
        WeightRho {
            positive: values.iter().map(|&v| v > 0.0).collect(),
            values: DVector::from_vec(values),
            residual: 0.0,
        }
    }

    #[test]
    fn unit_weight_gives_twice_lambda() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, -1.0, 0.0, -1.0, 3.0, 0.5, 0.0, 0.5, -4.0]);
        let dtn = dtn_from(m.clone(), DVector::from_element(4, 0.25));
        let h = hessian_operator(&dtn, &rho_of(vec![1.0; 4])).unwrap();
        let a = h.eigenvalues();
        let b = linalg::sym_eigen_sorted(&m).0;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - 2.0 * y).abs() < 1e-13);
        }
    }

    #[test]
    fn nonpositive_rho_is_rejected() {
        let dtn = dtn_from(DMatrix::identity(1, 1), DVector::from_element(2, 0.5));
        assert!(hessian_operator(&dtn, &rho_of(vec![1.0, 0.0])).is_err());
    }

    #[test]
    fn report_formats() {
        let info = rectangle_mode_info(1.0, 1.0, 3, 1).unwrap();
        let counts = SpectralCounts::new(&[-75.0, -19.0, 1e-12, 14.0], 1e-9, 100.0);
        let r = verify_identities("square-31", &counts, Some(&info), true, Some(1e-14));
        assert!(r.passed());
        let kv = r.to_kv();
        assert!(kv.contains("n_minus=2\n") && kv.contains("result=pass"));
        assert!(r.to_table().contains("nullity"));
        let bad = SpectralCounts::new(&[-75.0, 1e-12, 14.0], 1e-9, 100.0);
        assert!(!verify_identities("x", &bad, Some(&info), true, None).passed());
        let nb = verify_identities("circle-3", &bad, None, false, None);
        assert!(nb.passed() && !nb.notes.is_empty());
    }
}
