//! Vertical strips with curved interfaces `x = gamma_i(y)`: first Dirichlet
//! eigenvalues on a mapped reference rectangle, the surrogate energy
//! `L(t) = sum_j a_j² lambda_1(Omega_j(t))` and its second derivative.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{chebyshev_u, BandedCholesky, SparseSym};
use crate::separable::{self, ModeIndex, SineData};

pub const DEFAULT_SPACING: f64 = 1.0 / 200.0;
pub const DEFAULT_STEP: f64 = 1e-2;

/// Largest allowed relative difference between the 3-point and 5-point
/// curvature estimates.
pub const STEP_SIZE_TOL: f64 = 0.2;

const MAX_ITERATIONS: usize = 500;
const ITERATION_TOL: f64 = 1e-14;

/// Interface deformation profile on `0 <= y <= b`. Coefficient `k` belongs to `q = k + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    /// `sum_q c_q sin(q pi y / b)`.
    SineSeries(Vec<f64>),
    /// `sum_q c_q sin(q pi y / b) / sin(pi y / b)`, finite at both ends.
    SineRatio(Vec<f64>),
}

impl Profile {
    pub fn zero() -> Self {
        Profile::SineSeries(Vec::new())
    }

    /// Value and y-derivative.
    pub fn eval(&self, y: f64, height: f64) -> (f64, f64) {
        let k = PI / height;
        match self {
            Profile::SineSeries(c) => c.iter().enumerate().fold((0.0, 0.0), |(v, d), (i, &cq)| {
                let q = (i + 1) as f64;
                (v + cq * (q * k * y).sin(), d + cq * q * k * (q * k * y).cos())
            }),
            Profile::SineRatio(c) => {
                let (s, co) = (k * y).sin_cos();
                c.iter().enumerate().fold((0.0, 0.0), |(v, d), (i, &cq)| {
                    let (u, du) = chebyshev_u(i, co);
                    (v + cq * u, d - cq * du * s * k)
                })
            }
        }
    }
}

/// A curve `x = x(y)` sampled with its derivative at `y_k = k b / n`, `k = 0..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub x: Vec<f64>,
    pub dx: Vec<f64>,
}

impl Curve {
    pub fn straight(x: f64, n: usize) -> Self {
        Self {
            x: vec![x; n + 1],
            dx: vec![0.0; n + 1],
        }
    }

    pub fn from_fn(n: usize, height: f64, f: impl Fn(f64) -> (f64, f64)) -> Self {
        let (x, dx) = (0..=n).map(|k| f(k as f64 * height / n as f64)).unzip();
        Self { x, dx }
    }

    pub fn intervals(&self) -> usize {
        self.x.len() - 1
    }
}

/// First Dirichlet eigenvalue of `{left(y) < x < right(y), 0 < y < b}` with
/// `n_xi` cells across the strip and `left.intervals()` cells along y.
pub fn strip_lambda1(left: &Curve, right: &Curve, height: f64, n_xi: usize) -> Result<f64> {
    let n_eta = left.intervals();
    if right.intervals() != n_eta || n_eta < 2 || n_xi < 2 {
        return Err(Error::InvalidInput(
            "curves must share a sampling of at least 2 cells".into(),
        ));
    }
    let width: Vec<f64> = left.x.iter().zip(&right.x).map(|(l, r)| r - l).collect();
    if let Some(k) = width.iter().position(|&w| !(w > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "strip width {} at y = {}",
            width[k],
            k as f64 * height / n_eta as f64
        )));
    }
    let dwidth: Vec<f64> = left.dx.iter().zip(&right.dx).map(|(l, r)| r - l).collect();
    let (hx, hy) = (1.0 / n_xi as f64, height / n_eta as f64);
    let (mx, my) = (n_xi - 1, n_eta - 1);
    let idx = |i: usize, j: usize| (j - 1) * mx + (i - 1);
    let interior = |i: usize, j: usize| (1..=mx).contains(&i) && (1..=my).contains(&j);

    // Energy density (v_xi/W)² + (v_eta - c v_xi)² times W, with
    // c = (left' + xi W') / W.
    let c = |xi: f64, j: usize| (left.dx[j] + xi * dwidth[j]) / width[j];
    let k11 = |xi: f64, j: usize| 1.0 / width[j] + width[j] * c(xi, j).powi(2);
    let k12 = |i: usize, j: usize| -width[j] * c(i as f64 * hx, j);

    let n = mx * my;
    let mut a = SparseSym::new(n);
    let mut mass = vec![0.0; n];
    let cross = 1.0 / (4.0 * hx * hy);
    for j in 1..=my {
        for i in 1..=mx {
            let r = idx(i, j);
            mass[r] = width[j];
            let east = k11((i as f64 + 0.5) * hx, j) / (hx * hx);
            let west = k11((i as f64 - 0.5) * hx, j) / (hx * hx);
            let north = 0.5 * (width[j] + width[j + 1]) / (hy * hy);
            let south = 0.5 * (width[j] + width[j - 1]) / (hy * hy);
            a.add_sym(r, r, east + west + north + south);
            if i < mx {
                a.add_sym(r, idx(i + 1, j), -east);
            }
            if j < my {
                a.add_sym(r, idx(i, j + 1), -north);
            }
            // Mixed term, each diagonal pair added once from its lower-left end.
            if interior(i + 1, j + 1) {
                a.add_sym(r, idx(i + 1, j + 1), -(k12(i + 1, j) + k12(i, j + 1)) * cross);
            }
            if i > 1 && interior(i - 1, j + 1) {
                a.add_sym(r, idx(i - 1, j + 1), (k12(i - 1, j) + k12(i, j + 1)) * cross);
            }
        }
    }

    // Shift below a lower bound for the first eigenvalue so the shifted
    // matrix stays positive definite.
    let w_max = width.iter().cloned().fold(0.0, f64::max);
    let one_d = |h: f64, len: f64| (4.0 / (h * h)) * (PI * h / (2.0 * len)).sin().powi(2);
    let mut shift = 0.9 * (one_d(hx * w_max, w_max) + one_d(hy, height));
    let factor = loop {
        match BandedCholesky::factor(&a.shifted(shift, &mass)) {
            Ok(f) => break f,
            Err(Error::NotPositiveDefinite { .. }) if shift > 0.0 => {
                shift = if shift < 1e-8 { 0.0 } else { 0.5 * shift };
            }
            Err(e) => return Err(e),
        }
    };

    let mut v: Vec<f64> = (0..n)
        .map(|r| {
            let (i, j) = (r % mx + 1, r / mx + 1);
            (PI * i as f64 * hx).sin() * (PI * j as f64 * hy / height).sin()
        })
        .collect();
    let rayleigh = |v: &[f64]| {
        let av = a.matvec(v);
        let num: f64 = av.iter().zip(v).map(|(x, y)| x * y).sum();
        let den: f64 = v.iter().zip(&mass).map(|(x, m)| x * x * m).sum();
        num / den
    };
    let mut lambda = rayleigh(&v);
    for _ in 0..MAX_ITERATIONS {
        let rhs: Vec<f64> = v.iter().zip(&mass).map(|(x, m)| x * m).collect();
        let mut next = factor.solve(&rhs);
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        next.iter_mut().for_each(|x| *x /= norm);
        v = next;
        let updated = rayleigh(&v);
        let done = (updated - lambda).abs() <= ITERATION_TOL * updated;
        lambda = updated;
        if done {
            return Ok(lambda);
        }
    }
    Err(Error::NonConvergence(format!(
        "inverse iteration did not settle in {MAX_ITERATIONS} steps"
    )))
}

/// Vertical-strip partition of `[0, width] x [0, height]` deformed along
/// per-interface profiles: interface `i` sits at
/// `positions[i] + t * normal_signs[i] * directions[i](y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StripFamily {
    pub width: f64,
    pub height: f64,
    pub positions: Vec<f64>,
    /// Sign of the x-component of the chosen unit normal on each interface.
    pub normal_signs: Vec<i8>,
    pub directions: Vec<Profile>,
    /// `a_j²` per strip.
    pub weights: Vec<f64>,
    pub n_eta: usize,
    /// Cells across each strip, fixed by the undeformed widths.
    pub n_xi: Vec<usize>,
}

impl StripFamily {
    pub fn new(
        width: f64,
        height: f64,
        positions: Vec<f64>,
        normal_signs: Vec<i8>,
        directions: Vec<Profile>,
        weights: Vec<f64>,
        h: f64,
    ) -> Result<Self> {
        let m = positions.len() + 1;
        if normal_signs.len() != m - 1 || directions.len() != m - 1 || weights.len() != m {
            return Err(Error::InvalidInput("family sizes do not match the strip count".into()));
        }
        if !(h > 0.0) {
            return Err(Error::InvalidInput(format!("spacing must be positive, got {h}")));
        }
        let mut walls = vec![0.0];
        walls.extend(&positions);
        walls.push(width);
        let mut n_xi = Vec::with_capacity(m);
        for pair in walls.windows(2) {
            let w = pair[1] - pair[0];
            if !(w > 0.0) {
                return Err(Error::InvalidInput("interface positions must increase".into()));
            }
            n_xi.push(((w / h).round() as usize).max(2));
        }
        Ok(Self {
            width,
            height,
            positions,
            normal_signs,
            directions,
            weights,
            n_eta: ((height / h).round() as usize).max(2),
            n_xi,
        })
    }

    /// The `m` nodal strips of a separable mode, canonically oriented
    /// (normal signs alternate starting with +1) and equally weighted.
    pub fn for_mode(mode: ModeIndex, directions: Vec<Profile>, h: f64) -> Result<Self> {
        mode.check()?;
        let m = mode.m;
        let signs = (0..m - 1).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
        Self::new(
            mode.width,
            mode.height,
            mode.interface_positions(),
            signs,
            directions,
            vec![1.0 / m as f64; m],
            h,
        )
    }

    pub fn strip_count(&self) -> usize {
        self.weights.len()
    }

    /// All curves at parameter `t`, walls included, left to right.
    pub fn curves(&self, t: f64) -> Result<Vec<Curve>> {
        let n = self.n_eta;
        let mut curves = vec![Curve::straight(0.0, n)];
        for (i, &x0) in self.positions.iter().enumerate() {
            let s = t * self.normal_signs[i] as f64;
            let prof = &self.directions[i];
            curves.push(Curve::from_fn(n, self.height, |y| {
                let (v, d) = prof.eval(y, self.height);
                (x0 + s * v, s * d)
            }));
        }
        curves.push(Curve::straight(self.width, n));
        for pair in curves.windows(2) {
            if let Some(k) = (0..=n).find(|&k| pair[1].x[k] <= pair[0].x[k]) {
                return Err(Error::OrderingViolation {
                    t,
                    y: k as f64 * self.height / n as f64,
                });
            }
        }
        Ok(curves)
    }
}

/// `L(t) = sum_j a_j² lambda_1(Omega_j(t))`.
pub fn surrogate_energy(family: &StripFamily, t: f64) -> Result<f64> {
    let curves = family.curves(t)?;
    let mut total = 0.0;
    for (j, pair) in curves.windows(2).enumerate() {
        total += family.weights[j] * strip_lambda1(&pair[0], &pair[1], family.height, family.n_xi[j])?;
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessianCheck {
    pub t0: f64,
    /// `L` at `t = -2t0, -t0, 0, t0, 2t0`.
    pub values: [f64; 5],
    pub first_derivative: f64,
    pub second_3pt: f64,
    pub second_5pt: f64,
    pub quad_form: f64,
    pub floor: f64,
    pub discrepancy: f64,
}

/// Compares `L''(0)` from the five-point stencil with `quad_form_value`.
/// `floor` bounds the denominator from below and marks curvatures too small
/// for the step-size check.
pub fn hessian_check(family: &StripFamily, quad_form_value: f64, t0: f64, floor: f64) -> Result<HessianCheck> {
    let mut values = [0.0; 5];
    for (k, v) in values.iter_mut().enumerate() {
        *v = surrogate_energy(family, (k as f64 - 2.0) * t0)?;
    }
    let [m2, m1, z, p1, p2] = values;
    let second_3pt = (p1 - 2.0 * z + m1) / (t0 * t0);
    let second_5pt = (-p2 + 16.0 * p1 - 30.0 * z + 16.0 * m1 - m2) / (12.0 * t0 * t0);
    let first_derivative = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * t0);
    if second_5pt.abs() > floor {
        let relative = (second_3pt - second_5pt).abs() / second_5pt.abs();
        if relative > STEP_SIZE_TOL {
            return Err(Error::StepSize {
                relative: 100.0 * relative,
            });
        }
    }
    Ok(HessianCheck {
        t0,
        values,
        first_derivative,
        second_3pt,
        second_5pt,
        quad_form: quad_form_value,
        floor,
        discrepancy: (second_5pt - quad_form_value).abs() / quad_form_value.abs().max(floor),
    })
}

/// Interface polylines `(x, y)` of a family at one `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub t: f64,
    pub interfaces: Vec<Vec<(f64, f64)>>,
}

impl Snapshot {
    /// Horizontal distance between interfaces `i` and `i + 1` at height `y`,
    /// by linear interpolation.
    pub fn gap(&self, i: usize, y: f64) -> f64 {
        let at = |line: &[(f64, f64)]| {
            let k = line
                .windows(2)
                .position(|w| w[0].1 <= y && y <= w[1].1)
                .unwrap_or(line.len() - 2);
            let ((x0, y0), (x1, y1)) = (line[k], line[k + 1]);
            x0 + (x1 - x0) * (y - y0) / (y1 - y0)
        };
        at(&self.interfaces[i + 1]) - at(&self.interfaces[i])
    }
}

pub fn emit_deformation(family: &StripFamily, ts: &[f64]) -> Result<Vec<Snapshot>> {
    ts.iter()
        .map(|&t| {
            let curves = family.curves(t)?;
            let n = family.n_eta;
            let interfaces = curves[1..curves.len() - 1]
                .iter()
                .map(|c| (0..=n).map(|k| (c.x[k], k as f64 * family.height / n as f64)).collect())
                .collect();
            Ok(Snapshot { t, interfaces })
        })
        .collect()
}

/// Weight amplitude `rho_0` with `rho(y) = rho_0 sin(pi y / b)` for a mode.
fn rho_amplitude(mode: ModeIndex) -> f64 {
    separable::rho_closed_form(mode, 0.5 * mode.height)
}

/// Deformation `phi = f / rho` for the `k`-th DtN eigenvector of a separable
/// mode (1-based, ascending eigenvalue), normalized so that `||rho phi|| = 1`.
pub fn mode_direction(mode: ModeIndex, k: usize) -> Result<Vec<Profile>> {
    let q_max = mode.required_cutoff().max(k + 3);
    let spectrum = separable::dtn_spectrum(mode, q_max)?;
    let item = spectrum
        .items
        .get(k.wrapping_sub(1))
        .ok_or_else(|| Error::InvalidInput(format!("no DtN eigenvector {k}")))?;
    let scale = (2.0 / mode.height).sqrt() / rho_amplitude(mode);
    Ok(item
        .vector
        .iter()
        .map(|&v| {
            let mut c = vec![0.0; item.q];
            c[item.q - 1] = v * scale;
            Profile::SineRatio(c)
        })
        .collect())
}

/// Seeded random direction in F: `rho phi` is a combination of
/// `sin(q pi y / b)`, `q in q_range`, on every interface, with `||rho phi|| = 1`.
pub fn random_direction(mode: ModeIndex, seed: u64, q_range: std::ops::RangeInclusive<usize>) -> Result<Vec<Profile>> {
    if *q_range.start() < 2 {
        return Err(Error::InvalidInput("directions in F have no q = 1 component".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q_top = *q_range.end();
    let mut coeffs: Vec<Vec<f64>> = (0..mode.m - 1)
        .map(|_| {
            (1..=q_top)
                .map(|q| {
                    if q_range.contains(&q) {
                        rng.gen_range(-1.0..1.0)
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect();
    let rho0 = rho_amplitude(mode);
    let norm2: f64 = coeffs
        .iter()
        .flatten()
        .map(|c| (c * rho0).powi(2) * 0.5 * mode.height)
        .sum();
    let scale = 1.0 / norm2.sqrt();
    coeffs.iter_mut().flatten().for_each(|c| *c *= scale);
    Ok(coeffs.into_iter().map(Profile::SineRatio).collect())
}

/// `2 <Lambda(rho phi), rho phi>` from the separable closed form, for
/// sine-ratio profiles on the strips of `mode`.
pub fn direction_quad_form(mode: ModeIndex, directions: &[Profile]) -> Result<f64> {
    let rho0 = rho_amplitude(mode);
    let q_top = directions
        .iter()
        .map(|p| match p {
            Profile::SineRatio(c) => Ok(c.len()),
            Profile::SineSeries(_) => Err(Error::InvalidInput(
                "closed-form quadratic form needs sine-ratio profiles".into(),
            )),
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .max()
        .unwrap_or(0);
    let coeffs = (1..=q_top)
        .map(|q| {
            let c = DVector::from_iterator(
                directions.len(),
                directions.iter().map(|p| match p {
                    Profile::SineRatio(c) => c.get(q - 1).copied().unwrap_or(0.0) * rho0,
                    Profile::SineSeries(_) => 0.0,
                }),
            );
            (q, c)
        })
        .filter(|(_, c)| c.amax() > 0.0)
        .collect();
    Ok(2.0 * separable::quadratic_form(mode, &SineData { coeffs })?)
}
