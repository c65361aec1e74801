//! Semi-analytic backend for (m, 1) modes of a rectangle. The nodal set is
//! `m - 1` vertical lines, and separation of variables in `y` splits the
//! two-sided DtN map into one small transmission block per transverse
//! wavenumber `q`.
//!
//! Interface data follow the canonical orientation `nu = eta(Omega_j) nu_j`, so
//! the solution of the per-strip problems glues to a single continuous
//! function `g(x) sin(q pi y / b)` and the block maps `(g(x_1), ..., g(x_{m-1}))`
//! to the jumps `g'(x_i-) - g'(x_i+)`.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::criticality::TraceSet;
use crate::dtn::{count_signs, DtnOperator};
use crate::error::{Error, Result};
use crate::linalg;
use crate::partition::{CurveKind, Domain, Interface, Partition, Subdomain, SubdomainShape};

/// Threshold for counting zero eigenvalues of the closed-form blocks.
pub const ZERO_THRESHOLD: f64 = 1e-9;

/// Tolerance on `|sin(mu w)|` for detecting resonance.
pub const RESONANCE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeIndex {
    pub m: usize,
    pub n: usize,
    pub width: f64,
    pub height: f64,
}

impl ModeIndex {
    pub fn square(m: usize, n: usize) -> Self {
        Self::rectangle(m, n, 1.0, 1.0)
    }

    pub fn rectangle(m: usize, n: usize, width: f64, height: f64) -> Self {
        Self { m, n, width, height }
    }

    pub fn lambda(&self) -> f64 {
        let (m, n) = (self.m as f64, self.n as f64);
        PI * PI * (m * m / (self.width * self.width) + n * n / (self.height * self.height))
    }

    pub fn strip_width(&self) -> f64 {
        self.width / self.m as f64
    }

    pub fn interface_positions(&self) -> Vec<f64> {
        (1..self.m).map(|i| i as f64 * self.strip_width()).collect()
    }

    /// `mu² = lambda* - (q pi / b)²`.
    pub fn mu_squared(&self, q: usize) -> f64 {
        let k = q as f64 * PI / self.height;
        self.lambda() - k * k
    }

    /// Largest `q` that is not evanescent, as a real number `b sqrt(lambda*) / pi`.
    pub fn propagation_limit(&self) -> f64 {
        self.height * self.lambda().sqrt() / PI
    }

    /// Smallest admissible `q_max` for `dtn_spectrum`.
    pub fn required_cutoff(&self) -> usize {
        self.propagation_limit().ceil() as usize + 1
    }

    pub fn is_resonant(&self, q: usize) -> bool {
        let mu2 = self.mu_squared(q);
        mu2 > 0.0 && (mu2.sqrt() * self.strip_width()).sin().abs() <= RESONANCE_TOL
    }

    pub fn check(&self) -> Result<()> {
        if self.m == 0 || self.n == 0 || !(self.width > 0.0) || !(self.height > 0.0) {
            return Err(Error::InvalidInput(format!("invalid mode {self:?}")));
        }
        if self.n != 1 {
            return Err(Error::UnsupportedGeometry(format!(
                "mode ({}, {}) has crossing nodal lines; only (m, 1) modes are separable here",
                self.m, self.n
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransmissionBlock {
    pub q: usize,
    pub mu_squared: f64,
    pub matrix: DMatrix<f64>,
    pub resonant: bool,
}

impl TransmissionBlock {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Gershgorin lower bound on the spectrum.
    pub fn gershgorin_lower_bound(&self) -> f64 {
        (0..self.dim())
            .map(|i| {
                let off: f64 = (0..self.dim())
                    .filter(|&j| j != i)
                    .map(|j| self.matrix[(i, j)].abs())
                    .sum();
                self.matrix[(i, i)] - off
            })
            .fold(f64::INFINITY, f64::min)
    }
}

/// Diagonal and off-diagonal Dirichlet-to-Neumann coefficients of one strip:
/// `g'(0) = -d g(0) + o g(w)` and `g'(w) = -o g(0) + d g(w)`.
fn strip_coefficients(mu2: f64, w: f64) -> (f64, f64) {
    if mu2.abs() < 1e-14 {
        (1.0 / w, 1.0 / w)
    } else if mu2 > 0.0 {
        let mu = mu2.sqrt();
        let (s, c) = (mu * w).sin_cos();
        (mu * c / s, mu / s)
    } else {
        let kappa = (-mu2).sqrt();
        let x = kappa * w;
        (kappa / x.tanh(), kappa / x.sinh())
    }
}

pub fn assemble_block(mode: ModeIndex, q: usize) -> Result<TransmissionBlock> {
    mode.check()?;
    if q == 0 {
        return Err(Error::InvalidInput("transverse wavenumber starts at 1".into()));
    }
    if mode.is_resonant(q) {
        return Err(Error::Resonant { q });
    }
    let mu2 = mode.mu_squared(q);
    let (d, o) = strip_coefficients(mu2, mode.strip_width());
    let n = mode.m - 1;
    let mut matrix = DMatrix::zeros(n, n);
    for i in 0..n {
        matrix[(i, i)] = 2.0 * d;
        if i + 1 < n {
            matrix[(i, i + 1)] = -o;
            matrix[(i + 1, i)] = -o;
        }
    }
    Ok(TransmissionBlock {
        q,
        mu_squared: mu2,
        matrix,
        resonant: false,
    })
}

/// Block for a resonant `q`: each strip problem is solvable only when
/// `g(left) = (-1)^l g(right)` with `mu w = l pi`, and with zero walls these
/// relations admit only zero interface values.
pub fn resonant_block(mode: ModeIndex, q: usize) -> Result<TransmissionBlock> {
    mode.check()?;
    if !mode.is_resonant(q) {
        return Err(Error::NotResonant { q });
    }
    let mu2 = mode.mu_squared(q);
    let l = (mu2.sqrt() * mode.strip_width() / PI).round();
    let parity = if l as i64 % 2 == 0 { 1.0 } else { -1.0 };
    let n = mode.m - 1;
    let mut constraints = DMatrix::zeros(mode.m, n);
    for j in 0..mode.m {
        if j >= 1 {
            constraints[(j, j - 1)] = 1.0;
        }
        if j < n {
            constraints[(j, j)] = -parity;
        }
    }
    let (admissible, _) = linalg::null_space(&constraints, 1e-12);
    if admissible.ncols() > 0 {
        return Err(Error::UnsupportedGeometry(format!(
            "resonant wavenumber {q} admits nonzero interface data"
        )));
    }
    Ok(TransmissionBlock {
        q,
        mu_squared: mu2,
        matrix: DMatrix::zeros(0, 0),
        resonant: true,
    })
}

pub fn block(mode: ModeIndex, q: usize) -> Result<TransmissionBlock> {
    if mode.is_resonant(q) {
        resonant_block(mode, q)
    } else {
        assemble_block(mode, q)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumItem {
    pub sigma: f64,
    pub q: usize,
    /// Interface values `(g(x_1), ..., g(x_{m-1}))`, unit Euclidean norm.
    pub vector: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparableSpectrum {
    pub mode: ModeIndex,
    /// Enumerated eigenpairs, ascending in sigma.
    pub items: Vec<SpectrumItem>,
    pub q_max: usize,
    pub n_minus: usize,
    pub n_zero: usize,
    pub zero_threshold: f64,
}

pub fn dtn_spectrum(mode: ModeIndex, q_max: usize) -> Result<SeparableSpectrum> {
    mode.check()?;
    let required = mode.required_cutoff();
    if q_max < required {
        return Err(Error::InsufficientCutoff { q_max, required });
    }
    let mut items = Vec::new();
    for q in 1..=q_max {
        let b = block(mode, q)?;
        let (values, vectors) = linalg::sym_eigen_sorted(&b.matrix);
        for (k, sigma) in values.into_iter().enumerate() {
            items.push(SpectrumItem {
                sigma,
                q,
                vector: vectors.column(k).into_owned(),
            });
        }
    }
    items.sort_by(|a, b| a.sigma.total_cmp(&b.sigma).then(a.q.cmp(&b.q)));
    let sigmas: Vec<f64> = items.iter().map(|i| i.sigma).collect();
    let (n_minus, n_zero) = count_signs(&sigmas, ZERO_THRESHOLD);
    Ok(SeparableSpectrum {
        mode,
        items,
        q_max,
        n_minus,
        n_zero,
        zero_threshold: ZERO_THRESHOLD,
    })
}

/// Interface data as sine series: `f_i(y) = sum_q coeffs[q][i] sin(q pi y / b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SineData {
    pub coeffs: Vec<(usize, DVector<f64>)>,
}

/// `<Lambda f, f>` in `L²(Sigma)` for sine-series data.
pub fn quadratic_form(mode: ModeIndex, data: &SineData) -> Result<f64> {
    let mut total = 0.0;
    for (q, c) in &data.coeffs {
        if c.len() != mode.m - 1 {
            return Err(Error::InvalidInput(format!(
                "expected {} interface coefficients for q = {q}",
                mode.m - 1
            )));
        }
        if mode.is_resonant(*q) {
            if c.amax() > 0.0 {
                return Err(Error::Incompatible {
                    subdomain: 0,
                    defect: c.amax(),
                    tolerance: 0.0,
                });
            }
            continue;
        }
        let b = assemble_block(mode, *q)?;
        total += 0.5 * mode.height * c.dot(&(&b.matrix * c));
    }
    Ok(total)
}

/// Discrete sine transform of samples at `y_k = k b / (N + 1)`, `k = 1..=N`:
/// coefficients for `q = 1..=N` that interpolate the samples exactly.
pub fn sine_coefficients(samples: &[f64]) -> Vec<f64> {
    let n = samples.len();
    let np1 = (n + 1) as f64;
    (1..=n)
        .map(|q| {
            2.0 / np1
                * samples
                    .iter()
                    .enumerate()
                    .map(|(k, f)| f * (PI * (q * (k + 1)) as f64 / np1).sin())
                    .sum::<f64>()
        })
        .collect()
}

/// Partition of the rectangle into the `m` nodal strips with `nodes` interior
/// nodes per interface, canonically oriented.
pub fn mode_partition(mode: ModeIndex, nodes: usize) -> Result<Partition> {
    mode.check()?;
    let w = mode.strip_width();
    let subdomains = (0..mode.m)
        .map(|id| Subdomain {
            id,
            shape: SubdomainShape::Region {
                x_min: id as f64 * w,
                x_max: (id + 1) as f64 * w,
                y_min: 0.0,
                y_max: mode.height,
                area: w * mode.height,
            },
        })
        .collect();
    let dy = mode.height / (nodes + 1) as f64;
    let interfaces = mode
        .interface_positions()
        .into_iter()
        .enumerate()
        .map(|(i, x)| {
            let samples: Vec<_> = (1..=nodes).map(|k| (k as f64 * dy, x, k as f64 * dy)).collect();
            Interface::new(
                i,
                [i, i + 1],
                1,
                CurveKind::Open {
                    start: 0.0,
                    end: mode.height,
                },
                &samples,
            )
        })
        .collect();
    let p = Partition::new(
        Domain::Rectangle {
            width: mode.width,
            height: mode.height,
        },
        subdomains,
        interfaces,
    )?;
    Ok(p.canonically_oriented())
}

/// Outward derivative of the unit-normalized strip ground state at height `y`.
pub fn strip_trace(mode: ModeIndex, y: f64) -> f64 {
    let w = mode.strip_width();
    -(PI / w) * 2.0 / (w * mode.height).sqrt() * (PI * y / mode.height).sin()
}

pub fn mode_traces(mode: ModeIndex, p: &Partition) -> TraceSet {
    TraceSet::new(
        p.interfaces
            .iter()
            .map(|i| {
                let t: Vec<f64> = i.nodes.iter().map(|n| strip_trace(mode, n.y)).collect();
                [t.clone(), t]
            })
            .collect(),
    )
}

/// Closed-form weight: all strips congruent, so `|a_j| = 1 / sqrt(m)`.
pub fn rho_closed_form(mode: ModeIndex, y: f64) -> f64 {
    strip_trace(mode, y).abs() / (mode.m as f64).sqrt()
}

/// DtN operator on node data of [`mode_partition`], exact for sine
/// polynomials of degree at most `nodes`. The basis is the sine modes
/// `q = 2..=nodes` on each interface; the `q = 1` mode is excluded by S.
pub fn dtn_operator(mode: ModeIndex, nodes: usize) -> Result<DtnOperator> {
    mode.check()?;
    let ni = mode.m - 1;
    let total = ni * nodes;
    let dy = mode.height / (nodes + 1) as f64;
    let weights = DVector::from_element(total, dy);
    if ni == 0 {
        return Ok(DtnOperator::empty(0));
    }
    let norm = (2.0 / mode.height).sqrt();
    let mut columns = Vec::new();
    let mut blocks = Vec::new();
    for q in 1..=nodes {
        let b = block(mode, q)?;
        if b.dim() == 0 {
            continue;
        }
        for i in 0..ni {
            let mut col = DVector::zeros(total);
            for k in 0..nodes {
                col[i * nodes + k] = norm * (PI * (q * (k + 1)) as f64 / (nodes + 1) as f64).sin();
            }
            columns.push(col);
        }
        blocks.push(b);
    }
    let d = columns.len();
    let basis = DMatrix::from_columns(&columns);
    let mut raw = DMatrix::zeros(d, d);
    let mut offset = 0;
    for b in &blocks {
        raw.view_mut((offset, offset), (ni, ni)).copy_from(&b.matrix);
        offset += ni;
    }
    Ok(DtnOperator::from_raw(raw, basis, weights))
}

/// Interface data `f = v_i sin(q pi y / b)` and the deformation `phi = f / rho`
/// at the nodes of `p`, in global node order.
pub fn reconstruct_eigenfunctions(
    item: &SpectrumItem,
    mode: ModeIndex,
    p: &Partition,
    rho: &DVector<f64>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    if item.vector.len() != p.interfaces.len() {
        return Err(Error::InvalidInput("eigenvector does not match the partition".into()));
    }
    let f = DVector::from_iterator(
        p.dof_count(),
        p.interfaces.iter().enumerate().flat_map(|(i, iface)| {
            let v = item.vector[i];
            iface
                .nodes
                .iter()
                .map(move |n| v * (item.q as f64 * PI * n.y / mode.height).sin())
        }),
    );
    if rho.len() != f.len() {
        return Err(Error::InvalidInput("rho does not match the partition".into()));
    }
    if let Some(k) = rho.iter().position(|&r| !(r > 0.0)) {
        return Err(Error::Genericity(format!("rho vanishes at interface node {k}")));
    }
    let phi = f.component_div(rho);
    Ok((f, phi))
}
