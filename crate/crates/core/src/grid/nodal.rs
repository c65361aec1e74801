use std::collections::VecDeque;

use super::{Boundary, Direction, DiscreteEigenpair, Grid};
use crate::criticality::TraceSet;
use crate::error::{Error, Result};
use crate::partition::{CurveKind, Domain, Interface, Partition, Subdomain, SubdomainShape};

/// Nodes with `|psi| < ZERO_REL_TOL * max|psi|` are treated as nodal.
pub const ZERO_REL_TOL: f64 = 1e-8;

/// Nodal partition of a grid eigenvector whose zero set lies on gridlines.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPartition {
    pub grid: Grid,
    pub partition: Partition,
    pub nodal_count: usize,
    pub eigenvalue: f64,
    /// Nodal domain of each unknown; `None` on the nodal set.
    pub component: Vec<Option<usize>>,
    /// Grid node of every interface node, per interface.
    pub interface_nodes: Vec<Vec<usize>>,
    /// Direction pointing from each interface into its `adjacent[0]` side.
    pub into_first: Vec<Direction>,
    /// Positive ground state of each nodal domain, unit in the grid L² pairing,
    /// stored over all unknowns (zero outside the domain).
    pub ground_states: Vec<Vec<f64>>,
}

impl GridPartition {
    pub fn subdomain_nodes(&self, j: usize) -> Vec<usize> {
        (0..self.component.len())
            .filter(|&k| self.component[k] == Some(j))
            .collect()
    }

    /// Direction from interface `i` into the subdomain on `side`.
    pub fn inward(&self, i: usize, side: usize) -> Direction {
        if side == 0 {
            self.into_first[i]
        } else {
            self.into_first[i].opposite()
        }
    }

    /// The two nodes at distance h and 2h from `node` in direction `dir`, both
    /// inside subdomain `j`.
    pub fn stencil(&self, node: usize, dir: Direction, j: usize) -> Result<(usize, usize)> {
        let g = &self.grid;
        let n1 = g.neighbor(node, dir);
        let n2 = n1.and_then(|n| g.neighbor(n, dir));
        match (n1, n2) {
            (Some(a), Some(b)) if self.component[a] == Some(j) && self.component[b] == Some(j) => Ok((a, b)),
            _ => Err(Error::UnsupportedGeometry(format!(
                "nodal domain {j} is thinner than two cells next to node {node}"
            ))),
        }
    }

    /// One-sided second-order outward normal derivatives of the ground states.
    pub fn traces(&self) -> Result<TraceSet> {
        let h = self.grid.h;
        let mut values = Vec::with_capacity(self.interface_nodes.len());
        for (i, nodes) in self.interface_nodes.iter().enumerate() {
            let mut sides: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
            for (side, out) in sides.iter_mut().enumerate() {
                let j = self.partition.interfaces[i].adjacent[side];
                let psi = &self.ground_states[j];
                for &node in nodes {
                    let (a, b) = self.stencil(node, self.inward(i, side), j)?;
                    out.push((-4.0 * psi[a] + psi[b]) / (2.0 * h));
                }
            }
            values.push(sides);
        }
        Ok(TraceSet::new(values))
    }
}

/// Flood-fills the sign components of `pair.vector` and turns the zero
/// gridlines between them into interfaces, canonically oriented.
pub fn extract_nodal_partition(grid: &Grid, pair: &DiscreteEigenpair) -> Result<GridPartition> {
    let psi = &pair.vector;
    let n = grid.node_count();
    if psi.len() != n {
        return Err(Error::InvalidInput("eigenvector does not match the grid".into()));
    }
    let max = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let zero: Vec<bool> = psi.iter().map(|v| v.abs() < ZERO_REL_TOL * max).collect();

    let mut component = vec![None; n];
    let mut count = 0;
    for start in 0..n {
        if zero[start] || component[start].is_some() {
            continue;
        }
        component[start] = Some(count);
        let mut queue = VecDeque::from([start]);
        while let Some(v) = queue.pop_front() {
            for d in Direction::ALL {
                let Some(w) = grid.neighbor(v, d) else { continue };
                if zero[w] {
                    continue;
                }
                if (psi[w] > 0.0) != (psi[v] > 0.0) {
                    return Err(Error::UnsupportedGeometry(format!(
                        "sign change between nodes {v} and {w} off the gridlines"
                    )));
                }
                if component[w].is_none() {
                    component[w] = Some(count);
                    queue.push_back(w);
                }
            }
        }
        count += 1;
    }

    let (mx, my) = (grid.mx(), grid.my());
    let zero_col: Vec<bool> = (0..mx).map(|i| (0..my).all(|j| zero[grid.index(i, j)])).collect();
    let zero_row: Vec<bool> = (0..my).map(|j| (0..mx).all(|i| zero[grid.index(i, j)])).collect();
    for k in (0..n).filter(|&k| zero[k]) {
        let (i, j) = grid.ij(k);
        match (zero_col[i], zero_row[j]) {
            (false, false) => {
                return Err(Error::UnsupportedGeometry(format!(
                    "nodal set is not aligned with gridlines at ({}, {})",
                    grid.x(i),
                    grid.y(j)
                )))
            }
            (true, true) => {
                return Err(Error::UnsupportedGeometry(format!(
                    "nodal lines cross at ({}, {})",
                    grid.x(i),
                    grid.y(j)
                )))
            }
            _ => {}
        }
    }

    // Interfaces: maximal runs along each zero gridline with the same pair of neighbors.
    let mut interfaces = Vec::new();
    let mut interface_nodes = Vec::new();
    let mut into_first = Vec::new();
    let vertical = (0..mx).filter(|&i| zero_col[i]).map(|i| (true, i));
    let horizontal = (0..my).filter(|&j| zero_row[j]).map(|j| (false, j));
    for (is_col, line) in vertical.chain(horizontal) {
        let (len, period, back, fwd) = if is_col {
            (my, grid.height, Direction::West, Direction::East)
        } else {
            (mx, grid.width, Direction::South, Direction::North)
        };
        let node_at = |s: usize| {
            if is_col {
                grid.index(line, s)
            } else {
                grid.index(s, line)
            }
        };
        let mut runs: Vec<((usize, usize), Vec<usize>)> = Vec::new();
        for s in 0..len {
            let node = node_at(s);
            let side = |d| grid.neighbor(node, d).and_then(|w| component[w]);
            let (Some(a), Some(b)) = (side(back), side(fwd)) else {
                return Err(Error::UnsupportedGeometry(format!(
                    "nodal line at node {node} does not separate two nodal domains"
                )));
            };
            match runs.last_mut() {
                Some((pair, nodes)) if *pair == (a, b) => nodes.push(node),
                _ => runs.push(((a, b), vec![node])),
            }
        }
        let full = runs.len() == 1;
        for ((a, b), nodes) in runs {
            let samples: Vec<(f64, f64, f64)> = nodes
                .iter()
                .map(|&k| {
                    let (i, j) = grid.ij(k);
                    let (x, y) = (grid.x(i), grid.y(j));
                    (if is_col { y } else { x }, x, y)
                })
                .collect();
            let kind = match (grid.boundary, full) {
                (Boundary::Periodic, true) => CurveKind::Closed { period },
                (Boundary::Dirichlet, true) => CurveKind::Open {
                    start: 0.0,
                    end: period,
                },
                _ => {
                    let first = samples[0].0 - grid.h;
                    let last = samples[samples.len() - 1].0 + grid.h;
                    CurveKind::Open {
                        start: first,
                        end: last,
                    }
                }
            };
            // The outward normal of the back side points forward.
            interfaces.push(Interface::new(interfaces.len(), [a, b], 1, kind, &samples));
            interface_nodes.push(nodes);
            into_first.push(back);
        }
    }

    // Areas by cell counting: each cell belongs to the domain of its nonzero corners.
    let mut area = vec![0usize; count];
    let mut bbox = vec![[f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY]; count];
    let h = grid.h;
    for cj in 0..grid.ny {
        for ci in 0..grid.nx {
            let corners = [(ci, cj), (ci + 1, cj), (ci, cj + 1), (ci + 1, cj + 1)];
            let mut owner = None;
            for (gi, gj) in corners {
                let idx = match grid.boundary {
                    Boundary::Dirichlet => {
                        if gi == 0 || gj == 0 || gi == grid.nx || gj == grid.ny {
                            continue;
                        }
                        grid.index(gi - 1, gj - 1)
                    }
                    Boundary::Periodic => grid.index(gi % grid.nx, gj % grid.ny),
                };
                if let Some(c) = component[idx] {
                    if owner.is_some_and(|o| o != c) {
                        return Err(Error::UnsupportedGeometry(format!(
                            "cell ({ci}, {cj}) touches two nodal domains"
                        )));
                    }
                    owner = Some(c);
                }
            }
            let Some(c) = owner else {
                return Err(Error::UnsupportedGeometry(format!(
                    "cell ({ci}, {cj}) has only nodal corners"
                )));
            };
            area[c] += 1;
            let b = &mut bbox[c];
            let (x0, y0) = (ci as f64 * h, cj as f64 * h);
            b[0] = b[0].min(x0);
            b[1] = b[1].max(x0 + h);
            b[2] = b[2].min(y0);
            b[3] = b[3].max(y0 + h);
        }
    }
    let subdomains = (0..count)
        .map(|id| Subdomain {
            id,
            shape: SubdomainShape::Region {
                x_min: bbox[id][0],
                x_max: bbox[id][1],
                y_min: bbox[id][2],
                y_max: bbox[id][3],
                area: area[id] as f64 * h * h,
            },
        })
        .collect();
    let domain = match grid.boundary {
        Boundary::Dirichlet => Domain::Rectangle {
            width: grid.width,
            height: grid.height,
        },
        Boundary::Periodic => Domain::Torus {
            width: grid.width,
            height: grid.height,
        },
    };
    let partition = Partition::new(domain, subdomains, interfaces)?.canonically_oriented();

    let ground_states = (0..count)
        .map(|j| {
            let mut v: Vec<f64> = (0..n)
                .map(|k| if component[k] == Some(j) { psi[k].abs() } else { 0.0 })
                .collect();
            let norm = (h * h * v.iter().map(|x| x * x).sum::<f64>()).sqrt();
            v.iter_mut().for_each(|x| *x /= norm);
            v
        })
        .collect();

    Ok(GridPartition {
        grid: *grid,
        partition,
        nodal_count: count,
        eigenvalue: pair.value,
        component,
        interface_nodes,
        into_first,
        ground_states,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{eigenpair, eigensolve, rectangle_label};
    use super::*;

    #[test]
    fn mode_31_has_three_strips() {
        let g = Grid::rectangle(1.0, 1.0, 1.0 / 60.0).unwrap();
        let gp = extract_nodal_partition(&g, &eigenpair(&g, rectangle_label(3, 1)).unwrap()).unwrap();
        assert_eq!(gp.nodal_count, 3);
        assert_eq!(gp.partition.interfaces.len(), 2);
        for (iface, x) in gp.partition.interfaces.iter().zip([1.0 / 3.0, 2.0 / 3.0]) {
            assert!(iface.nodes.iter().all(|n| (n.x - x).abs() < 1e-12));
            assert_eq!(iface.nodes.len(), 59);
        }
        assert_eq!(gp.partition.check_bipartite(), Some(vec![1, -1, 1]));
        for s in &gp.partition.subdomains {
            assert!((s.measure() - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ground_state_has_one_domain() {
        let g = Grid::rectangle(1.0, 1.0, 1.0 / 30.0).unwrap();
        let gp = extract_nodal_partition(&g, &eigensolve(&g, 1).unwrap()[0]).unwrap();
        assert_eq!(gp.nodal_count, 1);
        assert!(gp.partition.interfaces.is_empty());
    }

    #[test]
    fn mode_21_and_13() {
        let g = Grid::rectangle(1.0, 1.0, 1.0 / 30.0).unwrap();
        let gp = extract_nodal_partition(&g, &eigenpair(&g, rectangle_label(2, 1)).unwrap()).unwrap();
        assert_eq!((gp.nodal_count, gp.partition.interfaces.len()), (2, 1));
        let gp = extract_nodal_partition(&g, &eigenpair(&g, rectangle_label(1, 3)).unwrap()).unwrap();
        assert_eq!((gp.nodal_count, gp.partition.interfaces.len()), (3, 2));
        assert!(gp
            .partition
            .interfaces
            .iter()
            .all(|i| i.nodes.iter().all(|n| n.y == i.nodes[0].y)));
    }

    #[test]
    fn crossing_and_misaligned_sets_are_rejected() {
        let g = Grid::rectangle(1.0, 1.0, 1.0 / 30.0).unwrap();
        let crossing = eigenpair(&g, rectangle_label(2, 2)).unwrap();
        assert!(matches!(
            extract_nodal_partition(&g, &crossing),
            Err(Error::UnsupportedGeometry(_))
        ));
        let pairs = eigensolve(&g, 3).unwrap();
        let mixed: Vec<f64> = pairs[1]
            .vector
            .iter()
            .zip(&pairs[2].vector)
            .map(|(a, b)| a + 0.7 * b)
            .collect();
        let pair = DiscreteEigenpair {
            vector: mixed,
            ..pairs[1].clone()
        };
        assert!(matches!(
            extract_nodal_partition(&g, &pair),
            Err(Error::UnsupportedGeometry(_))
        ));
    }

    #[test]
    fn torus_strips_share_two_interfaces() {
        let g = Grid::torus(1.0, 1.0, 1.0 / 40.0).unwrap();
        // Label 2 is the sine-like factor with frequency one.
        let gp = extract_nodal_partition(&g, &eigenpair(&g, (2, 0)).unwrap()).unwrap();
        assert_eq!(gp.nodal_count, 2);
        assert_eq!(gp.partition.interfaces.len(), 2);
        assert!(gp
            .partition
            .interfaces
            .iter()
            .all(|i| matches!(i.kind, CurveKind::Closed { .. }) && i.nodes.len() == 40));
        assert!(gp.partition.check_bipartite().is_some());
    }
}
