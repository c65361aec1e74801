use nalgebra::{DMatrix, DVector};

use super::{GridPartition, SubdomainSolver};
use crate::criticality::ConstrainedBasis;
use crate::dtn::DtnOperator;
use crate::error::{Error, Result};
use crate::partition::Partition;

/// `sum_j chi_j du_j/dnu_j` at every interface node for data `f` (global node
/// order of `partition`), where `u_j` solves the resonant problem on domain `j`
/// with boundary values `chi_j f`.
pub fn interface_mismatch(
    gp: &GridPartition,
    partition: &Partition,
    solvers: &[SubdomainSolver],
    f: &DVector<f64>,
) -> Result<DVector<f64>> {
    let offsets = partition.dof_offsets();
    let tolerance = 50.0 * gp.grid.h;
    let mut out = DVector::zeros(partition.dof_count());
    let scale = f.component_mul(f).dot(&partition.weights()).sqrt();
    let mut data = vec![0.0; gp.grid.node_count()];
    for solver in solvers {
        let j = solver.subdomain;
        let mut touched = Vec::new();
        for (i, iface) in partition.interfaces.iter().enumerate() {
            if let Some(side) = iface.side_of(j) {
                let chi = iface.chi(side);
                for (m, &g) in gp.interface_nodes[i].iter().enumerate() {
                    data[g] = chi * f[offsets[i] + m];
                    touched.push((i, side, m, g));
                }
            }
        }
        let solution = solver.solve(gp, &data, Some(scale), tolerance)?;
        for &(i, side, m, g) in &touched {
            let chi = partition.interfaces[i].chi(side);
            let d = solver.outward_derivative(gp, &solution, g, gp.inward(i, side), data[g])?;
            out[offsets[i] + m] += chi * d;
        }
        for &(_, _, _, g) in &touched {
            data[g] = 0.0;
        }
    }
    Ok(out)
}

/// Two-sided DtN operator on the span of `s`, assembled column by column and
/// symmetrized. `partition` must be `gp.partition` up to orientation flags.
pub fn assemble_dtn(gp: &GridPartition, partition: &Partition, s: &ConstrainedBasis) -> Result<DtnOperator> {
    let n = partition.dof_count();
    if n == 0 {
        return Ok(DtnOperator::empty(0));
    }
    let solvers = (0..partition.subdomain_count())
        .map(|j| SubdomainSolver::new(gp, j, gp.eigenvalue))
        .collect::<Result<Vec<_>>>()?;
    let d = s.dim();
    let mut images = DMatrix::zeros(n, d);
    for c in 0..d {
        let f = s.basis.column(c).into_owned();
        images.set_column(c, &interface_mismatch(gp, partition, &solvers, &f)?);
    }
    let weights = partition.weights();
    let raw = s.basis.transpose() * DMatrix::from_diagonal(&weights) * images;
    let op = DtnOperator::from_raw(raw, s.basis.clone(), weights);
    let limit = 100.0 * gp.grid.h;
    if op.asymmetry > limit {
        return Err(Error::AssemblyInconsistency {
            asymmetry: op.asymmetry,
            limit,
        });
    }
    Ok(op)
}
