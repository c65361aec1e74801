//! Partitions of model domains: subdomains, interface components with their
//! quadrature nodes, the choice of unit normal along the interfaces and the
//! resulting per-subdomain sign data.

mod format;
mod graph;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use format::{read_partition, write_partition};
pub use graph::NeighborGraph;

/// Relative tolerance for the measure budget of subdomains against the domain.
pub const MEASURE_BUDGET_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    Circle { circumference: f64 },
    Rectangle { width: f64, height: f64 },
    Torus { width: f64, height: f64 },
}

impl Domain {
    pub fn unit_square() -> Self {
        Domain::Rectangle {
            width: 1.0,
            height: 1.0,
        }
    }

    /// Length (circle) or area (rectangle, torus).
    pub fn measure(&self) -> f64 {
        match *self {
            Domain::Circle { circumference } => circumference,
            Domain::Rectangle { width, height } | Domain::Torus { width, height } => width * height,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubdomainShape {
    /// Arc of a circle starting at arclength `start`.
    Arc { start: f64, length: f64 },
    /// Planar region, described by its bounding box and area.
    Region {
        x_min: f64,
        x_max: f64,
        y_min: f64,
        y_max: f64,
        area: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Subdomain {
    pub id: usize,
    pub shape: SubdomainShape,
}

impl Subdomain {
    pub fn measure(&self) -> f64 {
        match self.shape {
            SubdomainShape::Arc { length, .. } => length,
            SubdomainShape::Region { area, .. } => area,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveKind {
    /// A single point (one-dimensional domains); counting measure.
    Point,
    /// An open curve whose endpoints lie on the outer boundary. Endpoints are
    /// excluded from the node set.
    Open { start: f64, end: f64 },
    /// A closed curve parameterized over one period.
    Closed { period: f64 },
}

impl CurveKind {
    /// Composite trapezoid weights for nodes at the given parameters.
    pub fn weights(&self, params: &[f64]) -> Vec<f64> {
        let n = params.len();
        match *self {
            CurveKind::Point => vec![1.0; n],
            CurveKind::Open { start, end } => (0..n)
                .map(|k| {
                    let prev = if k == 0 { start } else { params[k - 1] };
                    let next = if k + 1 == n { end } else { params[k + 1] };
                    0.5 * (next - prev)
                })
                .collect(),
            CurveKind::Closed { period } => (0..n)
                .map(|k| {
                    let prev = if k == 0 { params[n - 1] - period } else { params[k - 1] };
                    let next = if k + 1 == n { params[0] + period } else { params[k + 1] };
                    0.5 * (next - prev)
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceNode {
    pub parameter: f64,
    pub x: f64,
    pub y: f64,
    pub weight: f64,
}

/// One connected component of the partition boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Interface {
    pub id: usize,
    pub adjacent: [usize; 2],
    /// The chosen unit normal is `nu_sign` times the outward normal of `adjacent[0]`.
    pub nu_sign: i8,
    pub kind: CurveKind,
    pub nodes: Vec<InterfaceNode>,
}

impl Interface {
    /// Builds an interface from `(parameter, x, y)` samples; weights follow from `kind`.
    pub fn new(id: usize, adjacent: [usize; 2], nu_sign: i8, kind: CurveKind, samples: &[(f64, f64, f64)]) -> Self {
        let params: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let weights = kind.weights(&params);
        let nodes = samples
            .iter()
            .zip(weights)
            .map(|(&(parameter, x, y), weight)| InterfaceNode {
                parameter,
                x,
                y,
                weight,
            })
            .collect();
        Self {
            id,
            adjacent,
            nu_sign,
            kind,
            nodes,
        }
    }

    /// `nu . nu_j` for the adjacent subdomain on the given side (0 or 1).
    pub fn chi(&self, side: usize) -> f64 {
        let s = f64::from(self.nu_sign);
        if side == 0 {
            s
        } else {
            -s
        }
    }

    /// Side (0 or 1) on which `subdomain` lies, if it is adjacent.
    pub fn side_of(&self, subdomain: usize) -> Option<usize> {
        self.adjacent.iter().position(|&a| a == subdomain)
    }
}

/// The signs `chi_j = nu . nu_j` for every (subdomain, interface) incidence.
#[derive(Debug, Clone, PartialEq)]
pub struct ChiAssignment {
    /// `(subdomain, interface, sign)` triples.
    pub entries: Vec<(usize, usize, i8)>,
}

impl ChiAssignment {
    pub fn sign(&self, subdomain: usize, interface: usize) -> Option<i8> {
        self.entries
            .iter()
            .find(|e| e.0 == subdomain && e.1 == interface)
            .map(|e| e.2)
    }

    /// Whether chi is constant over the boundary of `subdomain`.
    pub fn is_constant_on(&self, subdomain: usize) -> bool {
        let mut signs = self.entries.iter().filter(|e| e.0 == subdomain).map(|e| e.2);
        match signs.next() {
            Some(first) => signs.all(|s| s == first),
            None => true,
        }
    }

    /// Checks that the two incident values multiply to -1 on every interface.
    pub fn is_antisymmetric(&self) -> bool {
        let mut ids: Vec<usize> = self.entries.iter().map(|e| e.1).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.iter().all(|&i| {
            let s: Vec<i8> = self.entries.iter().filter(|e| e.1 == i).map(|e| e.2).collect();
            s.len() == 2 && s[0] * s[1] == -1
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub domain: Domain,
    pub subdomains: Vec<Subdomain>,
    pub interfaces: Vec<Interface>,
}

impl Partition {
    pub fn new(domain: Domain, subdomains: Vec<Subdomain>, interfaces: Vec<Interface>) -> Result<Self> {
        let p = Self {
            domain,
            subdomains,
            interfaces,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.subdomains.len();
        if k == 0 {
            return Err(Error::MalformedPartition("no subdomains".into()));
        }
        for (i, s) in self.subdomains.iter().enumerate() {
            if s.id != i {
                return Err(Error::MalformedPartition(format!(
                    "subdomain at position {i} has id {}",
                    s.id
                )));
            }
            if s.measure() <= 0.0 {
                return Err(Error::MalformedPartition(format!(
                    "subdomain {i} has nonpositive measure"
                )));
            }
        }
        for (i, iface) in self.interfaces.iter().enumerate() {
            let [a, b] = iface.adjacent;
            if iface.id != i {
                return Err(Error::MalformedPartition(format!(
                    "interface at position {i} has id {}",
                    iface.id
                )));
            }
            if a == b || a >= k || b >= k {
                return Err(Error::MalformedPartition(format!(
                    "interface {i} must separate two distinct subdomains, got {a} and {b}"
                )));
            }
            if iface.nu_sign != 1 && iface.nu_sign != -1 {
                return Err(Error::MalformedPartition(format!(
                    "interface {i} has orientation flag {}",
                    iface.nu_sign
                )));
            }
            if iface.nodes.is_empty() {
                return Err(Error::MalformedPartition(format!("interface {i} has no nodes")));
            }
        }
        let total: f64 = self.subdomains.iter().map(Subdomain::measure).sum();
        let expected = self.domain.measure();
        if ((total - expected) / expected).abs() > MEASURE_BUDGET_TOL {
            return Err(Error::MalformedPartition(format!(
                "subdomain measures sum to {total}, domain measure is {expected}"
            )));
        }
        Ok(())
    }

    pub fn subdomain_count(&self) -> usize {
        self.subdomains.len()
    }

    /// Total number of interface nodes (degrees of freedom on Sigma).
    pub fn dof_count(&self) -> usize {
        self.interfaces.iter().map(|i| i.nodes.len()).sum()
    }

    /// Offset of the first node of each interface in the global node numbering.
    pub fn dof_offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.interfaces.len());
        let mut acc = 0;
        for iface in &self.interfaces {
            offsets.push(acc);
            acc += iface.nodes.len();
        }
        offsets
    }

    pub fn weights(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.dof_count(),
            self.interfaces.iter().flat_map(|i| i.nodes.iter().map(|n| n.weight)),
        )
    }

    pub fn chi_assignment(&self) -> ChiAssignment {
        let mut entries = Vec::with_capacity(2 * self.interfaces.len());
        for iface in &self.interfaces {
            for side in 0..2 {
                entries.push((iface.adjacent[side], iface.id, iface.chi(side) as i8));
            }
        }
        ChiAssignment { entries }
    }

    /// One edge per interface component.
    pub fn neighbor_graph(&self) -> Result<NeighborGraph> {
        let k = self.subdomains.len();
        let mut edges = Vec::with_capacity(self.interfaces.len());
        for iface in &self.interfaces {
            let [a, b] = iface.adjacent;
            if a == b || a >= k || b >= k {
                return Err(Error::MalformedPartition(format!(
                    "interface {} must separate two distinct subdomains, got {a} and {b}",
                    iface.id
                )));
            }
            edges.push((a, b));
        }
        Ok(NeighborGraph::new(k, edges))
    }

    /// A sign map `eta` with opposite signs on neighbors, if one exists.
    pub fn check_bipartite(&self) -> Option<Vec<i8>> {
        self.neighbor_graph().ok()?.two_coloring()
    }

    /// Copy of the partition with the given orientation flags.
    pub fn with_orientation(&self, nu_signs: &[i8]) -> Result<Partition> {
        if nu_signs.len() != self.interfaces.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} orientation flags, got {}",
                self.interfaces.len(),
                nu_signs.len()
            )));
        }
        let mut p = self.clone();
        for (iface, &s) in p.interfaces.iter_mut().zip(nu_signs) {
            iface.nu_sign = s;
        }
        p.validate()?;
        Ok(p)
    }

    /// Orientation induced by a sign map: `nu = eta(Omega_j) nu_j` on the boundary of each `Omega_j`.
    pub fn oriented_by(&self, eta: &[i8]) -> Result<Partition> {
        let signs: Vec<i8> = self.interfaces.iter().map(|i| eta[i.adjacent[0]]).collect();
        self.with_orientation(&signs)
    }

    /// Orientation induced by the bipartite coloring when one exists, unchanged otherwise.
    pub fn canonically_oriented(&self) -> Partition {
        match self.check_bipartite() {
            Some(eta) => self.oriented_by(&eta).unwrap_or_else(|_| self.clone()),
            None => self.clone(),
        }
    }
}
