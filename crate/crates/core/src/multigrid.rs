//! Multigrid cycles on the reduced (free-dof) system and the convergence
//! measurements built on them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dense::BorderedSolver;
use crate::grid::{BoundaryKind, DofLayout, Family, MeshSpec};
use crate::operator::{StokesProblem, WallTreatment};
use crate::smoothers::{Smoother, SmootherSpec, SweepStats};
use crate::sparse::{self, SparseMatrix};
use crate::transfer::{coarse_matrix, CoarseOperator, Interpolation, TransferPair, TransferSpec};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CycleKind {
    /// Two levels with an exact coarse solve.
    TwoGrid,
    V,
    W,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleSpec {
    pub kind: CycleKind,
    pub nu1: usize,
    pub nu2: usize,
    pub smoother: SmootherSpec,
    pub transfer: TransferSpec,
    pub wall: WallTreatment,
    /// Cell count of the coarsest level for V and W cycles.
    pub coarsest_n: usize,
}

impl CycleSpec {
    pub fn two_grid(smoother: SmootherSpec, nu1: usize, nu2: usize) -> Self {
        Self {
            kind: CycleKind::TwoGrid,
            nu1,
            nu2,
            smoother,
            transfer: TransferSpec::default(),
            wall: WallTreatment::default(),
            coarsest_n: 2,
        }
    }

    pub fn with_kind(mut self, kind: CycleKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_transfer(mut self, transfer: TransferSpec) -> Self {
        self.transfer = transfer;
        self
    }

    pub fn with_wall(mut self, wall: WallTreatment) -> Self {
        self.wall = wall;
        self
    }

    /// Default discretization choices for a boundary kind: bilinear
    /// interpolation throughout, Galerkin coarsening on periodic meshes,
    /// rediscretization with injected wall values on Dirichlet meshes.
    pub fn for_boundary(self, bc: BoundaryKind) -> Self {
        match bc {
            BoundaryKind::Periodic => self
                .with_transfer(TransferSpec {
                    interpolation: Interpolation::Bilinear,
                    coarse: CoarseOperator::Galerkin,
                })
                .with_wall(WallTreatment::Reflect),
            BoundaryKind::Dirichlet => self
                .with_transfer(TransferSpec {
                    interpolation: Interpolation::Bilinear,
                    coarse: CoarseOperator::Rediscretized,
                })
                .with_wall(WallTreatment::Injection),
        }
    }
}

/// Null space of the system on one level: one constant per family on
/// periodic meshes, the constant pressure on Dirichlet meshes.
pub fn null_space(layout: &DofLayout) -> Vec<Vec<f64>> {
    let families: &[Family] = match layout.mesh.bc {
        BoundaryKind::Periodic => &Family::ALL,
        BoundaryKind::Dirichlet => &[Family::P],
    };
    families
        .iter()
        .map(|&f| {
            (0..layout.n_free())
                .map(|k| {
                    if layout.family_of_free(k) == f {
                        1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// Remove the null-space component (family means) from a free-dof vector.
pub fn project_out_null(layout: &DofLayout, x: &mut [f64]) {
    for basis in null_space(layout) {
        let count: f64 = basis.iter().sum();
        let mean = x.iter().zip(&basis).map(|(a, b)| a * b).sum::<f64>() / count;
        for (v, b) in x.iter_mut().zip(&basis) {
            *v -= mean * b;
        }
    }
}

pub fn family_norms(layout: &DofLayout, x: &[f64]) -> [f64; 3] {
    let mut acc = [0.0; 3];
    for (k, v) in x.iter().enumerate() {
        acc[layout.family_of_free(k).ordinal()] += v * v;
    }
    acc.map(f64::sqrt)
}

fn l2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

#[derive(Debug, Clone)]
pub struct Level {
    pub layout: DofLayout,
    pub matrix: SparseMatrix,
    pub smoother: Smoother,
}

/// Levels from finest (index 0) to coarsest, with transfers between
/// consecutive levels and a direct solver on the coarsest.
#[derive(Debug, Clone)]
pub struct Hierarchy {
    pub spec: CycleSpec,
    pub levels: Vec<Level>,
    pub transfers: Vec<TransferPair>,
    coarse_solver: BorderedSolver,
}

impl Hierarchy {
    pub fn new(problem: &StokesProblem, spec: CycleSpec) -> Result<Self> {
        let mesh = problem.mesh;
        let depth = match spec.kind {
            CycleKind::TwoGrid => 2,
            CycleKind::V | CycleKind::W => {
                if spec.coarsest_n == 0 || !mesh.n.is_multiple_of(spec.coarsest_n) {
                    return Err(Error::InvalidCycle(format!(
                        "coarsest size {} does not divide {}",
                        spec.coarsest_n, mesh.n
                    )));
                }
                let ratio = mesh.n / spec.coarsest_n;
                if !ratio.is_power_of_two() || ratio < 2 {
                    return Err(Error::InvalidCycle(format!(
                        "{} is not a power-of-two refinement of {}",
                        mesh.n, spec.coarsest_n
                    )));
                }
                ratio.trailing_zeros() as usize + 1
            }
        };
        let (layout, matrix, _) = problem.reduced_system();
        let mut levels = Vec::with_capacity(depth);
        let mut transfers = Vec::with_capacity(depth - 1);
        let smoother = Smoother::new(spec.smoother, &layout, &matrix)?;
        levels.push(Level {
            layout,
            matrix,
            smoother,
        });
        let mut current: MeshSpec = mesh;
        for _ in 1..depth {
            let pair = TransferPair::new(current, spec.transfer.interpolation)?;
            let fine = levels.last().expect("non-empty");
            let matrix = coarse_matrix(spec.transfer.coarse, &fine.matrix, &pair, spec.wall);
            let layout = pair.coarse.clone();
            let smoother = Smoother::new(spec.smoother, &layout, &matrix)?;
            current = layout.mesh;
            levels.push(Level {
                layout,
                matrix,
                smoother,
            });
            transfers.push(pair);
        }
        let coarsest = levels.last().expect("non-empty");
        let coarse_solver = BorderedSolver::new(
            &sparse::to_dense(&coarsest.matrix),
            &null_space(&coarsest.layout),
        )?;
        Ok(Self {
            spec,
            levels,
            transfers,
            coarse_solver,
        })
    }

    pub fn fine(&self) -> &Level {
        &self.levels[0]
    }

    /// One cycle starting at `level`.
    pub fn cycle(&self, level: usize, x: &mut [f64], b: &[f64], stats: &mut SweepStats) {
        if level + 1 == self.levels.len() {
            let sol = self.coarse_solver.solve(b);
            x.copy_from_slice(&sol);
            return;
        }
        let lv = &self.levels[level];
        lv.smoother.smooth(&lv.matrix, x, b, self.spec.nu1, stats);
        let ax = sparse::matvec(&lv.matrix, x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let t = &self.transfers[level];
        let rc = sparse::matvec(&t.restriction, &r);
        let mut ec = vec![0.0; rc.len()];
        let visits = match self.spec.kind {
            CycleKind::W if level + 2 < self.levels.len() => 2,
            _ => 1,
        };
        for _ in 0..visits {
            self.cycle(level + 1, &mut ec, &rc, stats);
        }
        let correction = sparse::matvec(&t.interpolation, &ec);
        for (xi, ci) in x.iter_mut().zip(&correction) {
            *xi += ci;
        }
        lv.smoother.smooth(&lv.matrix, x, b, self.spec.nu2, stats);
    }

    pub fn residual(&self, x: &[f64], b: &[f64]) -> Vec<f64> {
        let ax = sparse::matvec(&self.levels[0].matrix, x);
        b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
    }
}

/// How convergence is measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Protocol {
    /// Zero right-hand side, random initial guess, error-norm ratios.
    Homogeneous { cycles: usize, seed: u64 },
    /// Manufactured right-hand side, zero initial guess, residual ratios.
    Manufactured { cycles: usize },
}

/// Error growth beyond this factor of the initial error counts as divergence.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    /// Per-cycle reduction factors.
    pub factors: Vec<f64>,
    /// Reduction factor of the last cycle.
    pub rho: f64,
    /// Geometric mean of the last five factors.
    pub rho_mean: f64,
    pub diverged: bool,
    /// Per-family norms `[u, v, p]` of the measured quantity after each cycle,
    /// starting with the initial state.
    pub history: Vec<[f64; 3]>,
}

impl ConvergenceReport {
    fn from_norms(norms: &[f64], history: Vec<[f64; 3]>, diverged: bool) -> Self {
        let factors: Vec<f64> = norms
            .windows(2)
            .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
            .collect();
        let rho = factors.last().copied().unwrap_or(0.0);
        let tail = &factors[factors.len().saturating_sub(5)..];
        let rho_mean = if tail.is_empty() || tail.iter().any(|&f| f <= 0.0) {
            rho
        } else {
            (tail.iter().map(|f| f.ln()).sum::<f64>() / tail.len() as f64).exp()
        };
        Self {
            factors,
            rho,
            rho_mean,
            diverged,
            history,
        }
    }
}

/// Run a protocol on a hierarchy built for `mesh`.
pub fn measure_convergence(
    mesh: MeshSpec,
    spec: CycleSpec,
    protocol: Protocol,
) -> Result<ConvergenceReport> {
    match protocol {
        Protocol::Homogeneous { cycles, seed } => {
            let problem = StokesProblem::homogeneous(mesh, spec.wall);
            let hier = Hierarchy::new(&problem, spec)?;
            let layout = &hier.fine().layout;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut x: Vec<f64> = (0..layout.n_free())
                .map(|_| rng.random_range(-1.0..=1.0))
                .collect();
            project_out_null(layout, &mut x);
            let b = vec![0.0; x.len()];
            let mut norms = vec![l2(&x)];
            let mut history = vec![family_norms(layout, &x)];
            let mut diverged = false;
            let mut stats = SweepStats::default();
            for _ in 0..cycles {
                hier.cycle(0, &mut x, &b, &mut stats);
                project_out_null(layout, &mut x);
                let e = l2(&x);
                norms.push(e);
                history.push(family_norms(layout, &x));
                if !e.is_finite() || e > DIVERGENCE_LIMIT * norms[0] {
                    diverged = true;
                    break;
                }
            }
            Ok(ConvergenceReport::from_norms(&norms, history, diverged))
        }
        Protocol::Manufactured { cycles } => {
            let problem = StokesProblem::manufactured(mesh, spec.wall);
            let hier = Hierarchy::new(&problem, spec)?;
            let (layout, _, b) = problem.reduced_system();
            let mut x = vec![0.0; layout.n_free()];
            let r0 = hier.residual(&x, &b);
            let mut norms = vec![l2(&r0)];
            let mut history = vec![family_norms(&layout, &r0)];
            let mut diverged = false;
            let mut stats = SweepStats::default();
            for _ in 0..cycles {
                hier.cycle(0, &mut x, &b, &mut stats);
                let r = hier.residual(&x, &b);
                let rn = l2(&r);
                norms.push(rn);
                history.push(family_norms(&layout, &r));
                if !rn.is_finite() || rn > DIVERGENCE_LIMIT * norms[0] {
                    diverged = true;
                    break;
                }
            }
            Ok(ConvergenceReport::from_norms(&norms, history, diverged))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::smoothers::SmootherKind;

    #[test]
    fn coarse_solve_alone_is_exact() {
        // a two-grid cycle on n = 2 with no smoothing still reduces through the
        // coarse correction only; the direct solver itself must be exact
        let mesh = MeshSpec::new(4, BoundaryKind::Dirichlet).unwrap();
        let problem = StokesProblem::manufactured(mesh, WallTreatment::Reflect);
        let spec = CycleSpec::two_grid(SmootherSpec::new(SmootherKind::Vanka, 0.7), 1, 1);
        let hier = Hierarchy::new(&problem, spec).unwrap();
        let coarse = hier.levels.last().unwrap();
        let n = coarse.layout.n_free();
        let mut x_true: Vec<f64> = (0..n).map(|k| ((k * 7 % 11) as f64) - 5.0).collect();
        project_out_null(&coarse.layout, &mut x_true);
        let b = sparse::matvec(&coarse.matrix, &x_true);
        let x = hier.coarse_solver.solve(&b);
        for (a, b) in x.iter().zip(&x_true) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_cycle_depth() {
        let mesh = MeshSpec::new(12, BoundaryKind::Periodic).unwrap();
        let problem = StokesProblem::homogeneous(mesh, WallTreatment::Reflect);
        let spec = CycleSpec::two_grid(SmootherSpec::new(SmootherKind::Vanka, 0.7), 1, 1)
            .with_kind(CycleKind::V);
        assert!(matches!(
            Hierarchy::new(&problem, spec),
            Err(Error::InvalidCycle(_))
        ));
    }

    #[test]
    fn vanka_two_grid_converges() {
        for bc in [BoundaryKind::Periodic, BoundaryKind::Dirichlet] {
            let mesh = MeshSpec::new(16, bc).unwrap();
            let spec = CycleSpec::two_grid(SmootherSpec::new(SmootherKind::Vanka, 0.7), 1, 1);
            let rep = measure_convergence(
                mesh,
                spec,
                Protocol::Homogeneous {
                    cycles: 10,
                    seed: 1,
                },
            )
            .unwrap();
            assert!(!rep.diverged);
            assert!(rep.rho < 0.5, "{bc:?}: {}", rep.rho);
        }
    }
}
