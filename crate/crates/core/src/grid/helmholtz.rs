use super::{Direction, GridPartition};
use crate::error::{Error, Result};
use crate::linalg::{BandedCholesky, SparseSym};

#[derive(Debug, Clone, PartialEq)]
pub struct HelmholtzSolution {
    /// Solution on the subdomain's unknowns, in the order of `SubdomainSolver::nodes`.
    pub u: Vec<f64>,
    /// Normalized discrete compatibility functional of the boundary data.
    pub compatibility: f64,
    /// Size of the right-hand side component along the ground state that was
    /// removed before solving, relative to the right-hand side.
    pub defect: f64,
}

/// Resonant Dirichlet problem `(-Delta_h - lambda*) u = 0` on one nodal domain,
/// with prescribed values on its interface nodes and `sum u psi_j = 0`.
#[derive(Debug, Clone)]
pub struct SubdomainSolver {
    pub subdomain: usize,
    pub nodes: Vec<usize>,
    local: Vec<Option<usize>>,
    /// Ground state on `nodes`, unit Euclidean norm.
    psi: Vec<f64>,
    /// Interface nodes on the boundary with their outward ground-state derivative.
    boundary: Vec<(usize, f64)>,
    factor: BandedCholesky,
    pin: usize,
    h: f64,
    lambda: f64,
}

impl SubdomainSolver {
    pub fn new(gp: &GridPartition, subdomain: usize, lambda: f64) -> Result<Self> {
        let grid = &gp.grid;
        let nodes = gp.subdomain_nodes(subdomain);
        if nodes.is_empty() {
            return Err(Error::InvalidInput(format!("subdomain {subdomain} has no nodes")));
        }
        let mut local = vec![None; grid.node_count()];
        for (k, &g) in nodes.iter().enumerate() {
            local[g] = Some(k);
        }
        let h = grid.h;
        let inv = 1.0 / (h * h);
        let mut a = SparseSym::new(nodes.len());
        for (k, &g) in nodes.iter().enumerate() {
            a.add_sym(k, k, 4.0 * inv - lambda);
            for d in [Direction::East, Direction::North] {
                if let Some(l) = grid.neighbor(g, d).and_then(|w| local[w]) {
                    a.add_sym(k, l, -inv);
                }
            }
        }
        let mut psi: Vec<f64> = nodes.iter().map(|&g| gp.ground_states[subdomain][g]).collect();
        let norm = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
        psi.iter_mut().for_each(|x| *x /= norm);
        // Pinning the largest ground-state entry leaves a positive definite
        // principal submatrix.
        let pin = (0..psi.len())
            .max_by(|&x, &y| psi[x].total_cmp(&psi[y]))
            .expect("nonempty");
        let factor = BandedCholesky::factor(&a.pinned(pin))?;

        let traces = gp.traces()?;
        let mut boundary = Vec::new();
        for (i, iface) in gp.partition.interfaces.iter().enumerate() {
            if let Some(side) = iface.side_of(subdomain) {
                for (m, &g) in gp.interface_nodes[i].iter().enumerate() {
                    boundary.push((g, traces.values[i][side][m]));
                }
            }
        }
        Ok(Self {
            subdomain,
            nodes,
            local,
            psi,
            boundary,
            factor,
            pin,
            h,
            lambda,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn local_index(&self, grid_node: usize) -> Option<usize> {
        self.local[grid_node]
    }

    /// Solves with boundary values `data[g]` at the interface grid nodes `g`
    /// (entries elsewhere are ignored). Fails when the compatibility functional,
    /// relative to `scale` (the L² norm of the full interface data, or `None` for
    /// the norm of this subdomain's share), exceeds `tolerance`.
    pub fn solve(
        &self,
        gp: &GridPartition,
        data: &[f64],
        scale: Option<f64>,
        tolerance: f64,
    ) -> Result<HelmholtzSolution> {
        let grid = &gp.grid;
        let inv = 1.0 / (self.h * self.h);

        let num: f64 = self.boundary.iter().map(|&(g, t)| data[g] * t).sum::<f64>() * self.h;
        let norm_f = scale
            .unwrap_or_else(|| (self.boundary.iter().map(|&(g, _)| data[g] * data[g]).sum::<f64>() * self.h).sqrt());
        let norm_t = (self.boundary.iter().map(|&(_, t)| t * t).sum::<f64>() * self.h).sqrt();
        let compatibility = if norm_f == 0.0 {
            0.0
        } else {
            num.abs() / (norm_f * norm_t)
        };
        if compatibility > tolerance {
            return Err(Error::Incompatible {
                subdomain: self.subdomain,
                defect: compatibility,
                tolerance,
            });
        }

        let mut b = vec![0.0; self.nodes.len()];
        for (k, &g) in self.nodes.iter().enumerate() {
            for d in Direction::ALL {
                if let Some(w) = grid.neighbor(g, d) {
                    if self.local[w].is_none() {
                        b[k] += data[w] * inv;
                    }
                }
            }
        }
        let b_norm = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        let along: f64 = b.iter().zip(&self.psi).map(|(x, p)| x * p).sum();
        for (x, p) in b.iter_mut().zip(&self.psi) {
            *x -= along * p;
        }
        b[self.pin] = 0.0;
        let mut u = self.factor.solve(&b);
        let c: f64 = u.iter().zip(&self.psi).map(|(x, p)| x * p).sum();
        for (x, p) in u.iter_mut().zip(&self.psi) {
            *x -= c * p;
        }
        Ok(HelmholtzSolution {
            u,
            compatibility,
            defect: if b_norm == 0.0 { 0.0 } else { along.abs() / b_norm },
        })
    }

    /// Outward normal derivative at interface grid node `g` by the one-sided
    /// three-point stencil, given boundary value `value` there.
    pub fn outward_derivative(
        &self,
        gp: &GridPartition,
        solution: &HelmholtzSolution,
        g: usize,
        inward: Direction,
        value: f64,
    ) -> Result<f64> {
        let (a, b) = gp.stencil(g, inward, self.subdomain)?;
        let ua = solution.u[self.local[a].expect("inside")];
        let ub = solution.u[self.local[b].expect("inside")];
        Ok((3.0 * value - 4.0 * ua + ub) / (2.0 * self.h))
    }

    /// `(-Delta_h - lambda*) u - b` on the subdomain for the given boundary data.
    pub fn equation_residual(&self, gp: &GridPartition, data: &[f64], u: &[f64]) -> Vec<f64> {
        let grid = &gp.grid;
        let inv = 1.0 / (self.h * self.h);
        self.nodes
            .iter()
            .enumerate()
            .map(|(k, &g)| {
                let mut s = (4.0 * inv - self.lambda) * u[k];
                for d in Direction::ALL {
                    if let Some(w) = grid.neighbor(g, d) {
                        match self.local[w] {
                            Some(l) => s -= inv * u[l],
                            None => s -= inv * data[w],
                        }
                    }
                }
                s
            })
            .collect()
    }

    /// Euclidean pairing of a subdomain vector with the ground state.
    pub fn psi_component(&self, u: &[f64]) -> f64 {
        u.iter().zip(&self.psi).map(|(x, p)| x * p).sum()
    }
}
