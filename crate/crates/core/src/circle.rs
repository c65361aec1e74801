//! Closed-form backend for equal-arc partitions of a circle.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::criticality::{self, ConstrainedBasis, TraceSet, EXACT_CRITICALITY_TOL};
use crate::dtn::DtnOperator;
use crate::error::{Error, Result};
use crate::partition::{CurveKind, Domain, Interface, Partition, Subdomain, SubdomainShape};

/// Absolute tolerance on the per-arc compatibility functional.
pub const COMPATIBILITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcGroundState {
    pub length: f64,
    pub lambda: f64,
    /// Amplitude of the unit-normalized state `amplitude * sin(pi s / length)`.
    pub amplitude: f64,
    /// Outward normal derivative, identical at both endpoints.
    pub endpoint_derivative: f64,
}

pub fn circle_ground_state(length: f64) -> Result<ArcGroundState> {
    if !(length > 0.0) {
        return Err(Error::InvalidInput(format!(
            "arc length must be positive, got {length}"
        )));
    }
    let freq = PI / length;
    let amplitude = (2.0 / length).sqrt();
    Ok(ArcGroundState {
        length,
        lambda: freq * freq,
        amplitude,
        endpoint_derivative: -freq * amplitude,
    })
}

/// `k` points on a circle of circumference `circumference`; arc `j` runs from
/// point `j` to point `j + 1` (cyclically) and interface `j` sits at point `j + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CirclePartition {
    pub circumference: f64,
    pub points: Vec<f64>,
}

impl CirclePartition {
    pub fn new(circumference: f64, points: Vec<f64>) -> Result<Self> {
        if !(circumference > 0.0) || points.len() < 2 {
            return Err(Error::InvalidInput(
                "a circle partition needs a positive circumference and at least two points".into(),
            ));
        }
        let p = Self { circumference, points };
        if p.arc_lengths().iter().any(|&l| !(l > 0.0)) {
            return Err(Error::InvalidInput(
                "points must be strictly increasing within one period".into(),
            ));
        }
        Ok(p)
    }

    pub fn equal(k: usize, circumference: f64) -> Result<Self> {
        let len = circumference / k as f64;
        Self::new(circumference, (0..k).map(|j| j as f64 * len).collect())
    }

    pub fn k(&self) -> usize {
        self.points.len()
    }

    pub fn arc_lengths(&self) -> Vec<f64> {
        let k = self.k();
        (0..k)
            .map(|j| {
                let next = if j + 1 == k {
                    self.points[0] + self.circumference
                } else {
                    self.points[j + 1]
                };
                next - self.points[j]
            })
            .collect()
    }

    pub fn is_equipartition(&self) -> bool {
        let arcs = self.arc_lengths();
        arcs.iter().all(|l| ((l - arcs[0]) / arcs[0]).abs() < 1e-12)
    }

    /// Partition descriptor with `nu = nu_signs[i]` times the arclength direction at interface `i`.
    pub fn to_partition(&self, nu_signs: &[i8]) -> Result<Partition> {
        let k = self.k();
        if nu_signs.len() != k {
            return Err(Error::InvalidInput(format!("expected {k} orientation flags")));
        }
        let arcs = self.arc_lengths();
        let subdomains = (0..k)
            .map(|id| Subdomain {
                id,
                shape: SubdomainShape::Arc {
                    start: self.points[id],
                    length: arcs[id],
                },
            })
            .collect();
        let r = self.circumference / (2.0 * PI);
        let interfaces = (0..k)
            .map(|i| {
                let s = self.points[i] + arcs[i];
                let theta = s / r;
                Interface::new(
                    i,
                    [i, (i + 1) % k],
                    nu_signs[i],
                    CurveKind::Point,
                    &[(s, r * theta.cos(), r * theta.sin())],
                )
            })
            .collect();
        Partition::new(
            Domain::Circle {
                circumference: self.circumference,
            },
            subdomains,
            interfaces,
        )
    }

    /// Outward derivatives of the arc ground states at every interface.
    pub fn traces(&self) -> Result<TraceSet> {
        let arcs = self.arc_lengths();
        let k = self.k();
        let mut values = Vec::with_capacity(k);
        for i in 0..k {
            let left = circle_ground_state(arcs[i])?.endpoint_derivative;
            let right = circle_ground_state(arcs[(i + 1) % k])?.endpoint_derivative;
            values.push([vec![left], vec![right]]);
        }
        Ok(TraceSet::new(values))
    }

    fn require_equipartition(&self) -> Result<()> {
        if self.is_equipartition() {
            Ok(())
        } else {
            Err(Error::InvalidInput(
                "arcs have unequal lengths; not an equipartition".into(),
            ))
        }
    }
}

/// Two-sided normal-derivative mismatch for interface data `f`, one value per
/// point. Each arc solves `u'' + lambda* u = 0` with `u = chi f` at its ends
/// and `int u psi = 0`.
pub fn circle_mismatch(p: &CirclePartition, nu_signs: &[i8], f: &DVector<f64>) -> Result<DVector<f64>> {
    p.require_equipartition()?;
    let k = p.k();
    if f.len() != k || nu_signs.len() != k {
        return Err(Error::InvalidInput(format!("expected {k} interface values")));
    }
    let len = p.arc_lengths()[0];
    let freq = PI / len;
    // Outward derivative of arc j at its left end (interface j-1) and right end (interface j).
    let mut outward = vec![[0.0; 2]; k];
    for (j, out) in outward.iter_mut().enumerate() {
        let prev = (j + k - 1) % k;
        // Arc j is side 1 of interface j-1 and side 0 of interface j.
        let alpha = -f64::from(nu_signs[prev]) * f[prev];
        let beta = f64::from(nu_signs[j]) * f[j];
        // u = A cos(freq s) + B sin(freq s); u(0) = A and u(len) = -A.
        let defect = (alpha + beta).abs();
        if defect > COMPATIBILITY_TOL {
            return Err(Error::Incompatible {
                subdomain: j,
                defect,
                tolerance: COMPATIBILITY_TOL,
            });
        }
        let a = alpha;
        // int u psi = 0 with psi ~ sin(freq s).
        let (int_cos_sin, int_sin_sin) = (0.0, 0.5 * len);
        let b = -a * int_cos_sin / int_sin_sin;
        // u'(0) = B freq, u'(len) = -B freq.
        out[0] = -b * freq;
        out[1] = -b * freq;
    }
    Ok(DVector::from_iterator(
        k,
        (0..k).map(|i| {
            let next = (i + 1) % k;
            let s = f64::from(nu_signs[i]);
            s * outward[i][1] - s * outward[next][0]
        }),
    ))
}

/// DtN operator on the discrete S of an equal-arc partition, plus its S basis.
pub fn circle_dtn(p: &CirclePartition, nu_signs: &[i8]) -> Result<(DtnOperator, ConstrainedBasis)> {
    p.require_equipartition()?;
    let partition = p.to_partition(nu_signs)?;
    let s = criticality::subspace_s_basis(&partition, &p.traces()?)?;
    let d = s.dim();
    let mut images = DMatrix::zeros(p.k(), d);
    for c in 0..d {
        let f = s.basis.column(c).into_owned();
        images.set_column(c, &circle_mismatch(p, nu_signs, &f)?);
    }
    let weights = partition.weights();
    let raw = s.basis.transpose() * DMatrix::from_diagonal(&weights) * images;
    Ok((DtnOperator::from_raw(raw, s.basis.clone(), weights), s))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TangentReport {
    pub f_basis: DMatrix<f64>,
    /// Whether every F direction moves all points by the same arclength (a rotation).
    pub is_rotation: bool,
}

impl TangentReport {
    pub fn dim(&self) -> usize {
        self.f_basis.ncols()
    }
}

/// Discrete F for an equal-arc partition, compared against rigid rotation.
pub fn circle_tangent_check(p: &CirclePartition, nu_signs: &[i8]) -> Result<TangentReport> {
    p.require_equipartition()?;
    let partition = p.to_partition(nu_signs)?;
    let traces = p.traces()?;
    let (a, _) = criticality::solve_coefficients(&partition, &traces)?;
    let rho = criticality::compute_rho(&partition, &a, &traces, EXACT_CRITICALITY_TOL)?;
    let f = criticality::subspace_f_basis(&partition, &traces, &rho)?;
    let is_rotation = f.dim() == 1 && {
        let displacement: Vec<f64> = f
            .basis
            .column(0)
            .iter()
            .zip(nu_signs)
            .map(|(phi, &s)| phi * f64::from(s))
            .collect();
        displacement
            .iter()
            .all(|d| (d - displacement[0]).abs() < 1e-12 * displacement[0].abs())
    };
    Ok(TangentReport {
        f_basis: f.basis,
        is_rotation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flips(k: usize) -> impl Iterator<Item = Vec<i8>> {
        (0..1u32 << k).map(move |mask| (0..k).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect())
    }

    #[test]
    fn ground_state_closed_forms() {
        assert!((circle_ground_state(PI / 2.0).unwrap().lambda - 4.0).abs() < 1e-14);
        assert!((circle_ground_state(2.0 * PI / 3.0).unwrap().lambda - 2.25).abs() < 1e-14);
        let g = circle_ground_state(1.0).unwrap();
        assert!((g.endpoint_derivative + PI * 2f64.sqrt()).abs() < 1e-14);
        assert!(circle_ground_state(0.0).is_err());
    }

    /// Symbolic oracle: u = A cos(pi s / l) has vanishing endpoint derivatives, so Lambda = 0.
    #[test]
    fn equal_arcs_have_zero_dtn() {
        for k in [2, 3, 4, 5] {
            let p = CirclePartition::equal(k, 2.0 * PI).unwrap();
            for nu in flips(k) {
                let (op, s) = circle_dtn(&p, &nu).unwrap();
                assert_eq!(op.dim(), 1, "k = {k}");
                assert_eq!(s.dim(), 1);
                assert!(op.matrix.amax() <= 1e-12);
                assert!((&op.matrix - op.matrix.transpose()).amax() <= 1e-14);
            }
        }
    }

    #[test]
    fn zero_data_maps_to_zero() {
        let p = CirclePartition::equal(3, 2.0 * PI).unwrap();
        let out = circle_mismatch(&p, &[1, 1, 1], &DVector::zeros(3)).unwrap();
        assert_eq!(out, DVector::zeros(3));
    }

    #[test]
    fn incompatible_data_names_the_arc() {
        let p = CirclePartition::equal(4, 2.0 * PI).unwrap();
        let f = DVector::from_vec(vec![1.0, 1.0, 0.5, 1.0]);
        match circle_mismatch(&p, &[1; 4], &f) {
            Err(Error::Incompatible { subdomain, .. }) => assert_eq!(subdomain, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unequal_arcs_are_rejected() {
        let p = CirclePartition::new(2.0 * PI, vec![0.0, 1.0, 3.0]).unwrap();
        assert!(circle_dtn(&p, &[1, 1, 1]).is_err());
    }

    #[test]
    fn tangent_space_is_rotation() {
        for k in [2, 3, 4] {
            let p = CirclePartition::equal(k, 2.0 * PI).unwrap();
            for nu in flips(k) {
                let t = circle_tangent_check(&p, &nu).unwrap();
                assert_eq!(t.dim(), 1);
                assert!(t.is_rotation, "k = {k}, nu = {nu:?}");
            }
            let t = circle_tangent_check(&p, &vec![1; k]).unwrap();
            let c = t.f_basis.column(0);
            assert!(c.iter().all(|x| (x - c[0]).abs() < 1e-12));
        }
    }

    #[test]
    fn flip_leaves_spectrum_unchanged() {
        for k in [3, 4] {
            let p = CirclePartition::equal(k, 2.0 * PI).unwrap();
            let base = circle_dtn(&p, &vec![1; k]).unwrap().0.eigenvalues();
            for nu in flips(k) {
                let e = circle_dtn(&p, &nu).unwrap().0.eigenvalues();
                assert_eq!(e.len(), base.len());
                assert!(e.iter().zip(&base).all(|(x, y)| (x - y).abs() <= 1e-12));
            }
        }
    }
}
