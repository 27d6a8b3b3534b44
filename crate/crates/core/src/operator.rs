//! The MAC discretization of the Stokes system.
//!
//! Rows are ordered like the unknowns: u-momentum rows live on u points,
//! v-momentum rows on v points and continuity rows on cell centres:
//!
//! ```text
//! (4u(i,j) − u(i±1,j) − u(i,j±1))/h² + (p(i,j) − p(i−1,j))/h = f₁
//! (4v(i,j) − v(i±1,j) − v(i,j±1))/h² + (p(i,j) − p(i,j−1))/h = f₂
//! (u(i+1,j) − u(i,j))/h + (v(i,j+1) − v(i,j))/h               = 0
//! ```
//!
//! With Dirichlet boundaries the prescribed normal velocities get identity
//! rows, and tangential neighbours that fall outside the domain are replaced
//! by a ghost value determined by [`WallTreatment`]. All boundary data is
//! folded into the right-hand side so that [`StokesProblem::apply`] is linear.

use std::f64::consts::PI;

use crate::grid::{BoundaryData, BoundaryKind, DofLayout, Family, MeshSpec, StaggeredField};
use crate::sparse::{self, SparseMatrix};
use crate::{Error, Result};

/// Ghost value used for a tangential velocity half a cell outside the wall.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum WallTreatment {
    /// Linear extrapolation through the wall value: `ghost = 2g − interior`.
    #[default]
    Reflect,
    /// The wall value itself: `ghost = g`.
    Injection,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RhsKind {
    Homogeneous,
    PeriodicManufactured,
    DirichletManufactured,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StokesProblem {
    pub mesh: MeshSpec,
    /// Momentum forcing (`f₁` on u points, `f₂` on v points, zero on p).
    pub rhs: StaggeredField,
    pub boundary: BoundaryData,
    pub wall: WallTreatment,
}

impl StokesProblem {
    /// Periodic forcing is projected to zero mean per family.
    pub fn new(
        mesh: MeshSpec,
        mut rhs: StaggeredField,
        boundary: BoundaryData,
        wall: WallTreatment,
    ) -> Result<Self> {
        if rhs.mesh != mesh {
            return Err(Error::MeshMismatch {
                expected: mesh.n,
                got: rhs.mesh.n,
            });
        }
        if !boundary.conforms_to(mesh) {
            return Err(Error::InvalidMesh(
                "boundary traces do not match the mesh".into(),
            ));
        }
        rhs.p.iter_mut().for_each(|x| *x = 0.0);
        if mesh.bc == BoundaryKind::Periodic {
            for f in Family::ALL {
                rhs.subtract_family_mean(f);
            }
        }
        Ok(Self {
            mesh,
            rhs,
            boundary,
            wall,
        })
    }

    pub fn homogeneous(mesh: MeshSpec, wall: WallTreatment) -> Self {
        let boundary = match mesh.bc {
            BoundaryKind::Periodic => BoundaryData::none(),
            BoundaryKind::Dirichlet => BoundaryData::zero(mesh),
        };
        Self::new(mesh, StaggeredField::zeros(mesh), boundary, wall).expect("consistent")
    }

    pub fn manufactured(mesh: MeshSpec, wall: WallTreatment) -> Self {
        match mesh.bc {
            BoundaryKind::Periodic => {
                Self::new(mesh, build_rhs_periodic(mesh), BoundaryData::none(), wall)
                    .expect("consistent")
            }
            BoundaryKind::Dirichlet => {
                let (rhs, bd) = build_rhs_dirichlet(mesh);
                Self::new(mesh, rhs, bd, wall).expect("consistent")
            }
        }
    }

    pub fn with_rhs(mesh: MeshSpec, kind: RhsKind, wall: WallTreatment) -> Result<Self> {
        match (kind, mesh.bc) {
            (RhsKind::Homogeneous, _) => Ok(Self::homogeneous(mesh, wall)),
            (RhsKind::PeriodicManufactured, BoundaryKind::Periodic)
            | (RhsKind::DirichletManufactured, BoundaryKind::Dirichlet) => {
                Ok(Self::manufactured(mesh, wall))
            }
            _ => Err(Error::InvalidMesh(format!(
                "right-hand side {kind:?} does not match {:?} boundaries",
                mesh.bc
            ))),
        }
    }

    fn check(&self, x: &StaggeredField) -> Result<()> {
        if x.mesh != self.mesh {
            return Err(Error::MeshMismatch {
                expected: self.mesh.n,
                got: x.mesh.n,
            });
        }
        Ok(())
    }

    /// Linear part of the ghost value for a tangential neighbour outside the
    /// wall, given the interior value next to it.
    fn ghost(&self, interior: f64) -> f64 {
        match self.wall {
            WallTreatment::Reflect => -interior,
            WallTreatment::Injection => 0.0,
        }
    }

    /// Matrix-free application of the discrete operator.
    pub fn apply(&self, x: &StaggeredField) -> Result<StaggeredField> {
        self.check(x)?;
        let mesh = self.mesh;
        let n = mesh.n as isize;
        let h = mesh.h();
        let h2 = h * h;
        let periodic = mesh.bc == BoundaryKind::Periodic;
        let g = |f: Family, i: isize, j: isize| x.get(f, i, j).expect("in range");
        let mut out = StaggeredField::zeros(mesh);

        let (nx, ny) = mesh.extent(Family::U);
        for j in 0..ny as isize {
            for i in 0..nx as isize {
                let value = if mesh.is_prescribed(Family::U, i as usize, j as usize) {
                    g(Family::U, i, j)
                } else {
                    let c = g(Family::U, i, j);
                    let south = if !periodic && j == 0 {
                        self.ghost(c)
                    } else {
                        g(Family::U, i, j - 1)
                    };
                    let north = if !periodic && j == n - 1 {
                        self.ghost(c)
                    } else {
                        g(Family::U, i, j + 1)
                    };
                    (4.0 * c - g(Family::U, i - 1, j) - g(Family::U, i + 1, j) - south - north) / h2
                        + (g(Family::P, i, j) - g(Family::P, i - 1, j)) / h
                };
                out.set(Family::U, i, j, value)?;
            }
        }

        let (nx, ny) = mesh.extent(Family::V);
        for j in 0..ny as isize {
            for i in 0..nx as isize {
                let value = if mesh.is_prescribed(Family::V, i as usize, j as usize) {
                    g(Family::V, i, j)
                } else {
                    let c = g(Family::V, i, j);
                    let west = if !periodic && i == 0 {
                        self.ghost(c)
                    } else {
                        g(Family::V, i - 1, j)
                    };
                    let east = if !periodic && i == n - 1 {
                        self.ghost(c)
                    } else {
                        g(Family::V, i + 1, j)
                    };
                    (4.0 * c - west - east - g(Family::V, i, j - 1) - g(Family::V, i, j + 1)) / h2
                        + (g(Family::P, i, j) - g(Family::P, i, j - 1)) / h
                };
                out.set(Family::V, i, j, value)?;
            }
        }

        for j in 0..n {
            for i in 0..n {
                let div = (g(Family::U, i + 1, j) - g(Family::U, i, j) + g(Family::V, i, j + 1)
                    - g(Family::V, i, j))
                    / h;
                out.set(Family::P, i, j, div)?;
            }
        }
        Ok(out)
    }

    /// Full right-hand side `b` of `L x = b`: forcing plus folded wall terms on
    /// momentum rows, prescribed values on boundary rows, zero on continuity.
    pub fn system_rhs(&self) -> StaggeredField {
        let mut b = self.rhs.clone();
        let mesh = self.mesh;
        if mesh.bc == BoundaryKind::Periodic {
            return b;
        }
        let n = mesh.n;
        let h2 = mesh.h() * mesh.h();
        let bd = &self.boundary;
        let weight = match self.wall {
            WallTreatment::Reflect => 2.0,
            WallTreatment::Injection => 1.0,
        };
        for i in 1..n {
            // u rows next to the bottom/top walls; wall values at x = i·h
            b.u[i] += weight * bd.u_bottom[i] / h2;
            b.u[(n - 1) * (n + 1) + i] += weight * bd.u_top[i] / h2;
        }
        for j in 1..n {
            b.v[j * n] += weight * bd.v_left[j] / h2;
            b.v[j * n + n - 1] += weight * bd.v_right[j] / h2;
        }
        bd.embed(&mut b);
        b
    }

    /// `b − L x`; zero on prescribed dofs whenever `x` carries the boundary data.
    pub fn residual(&self, x: &StaggeredField) -> Result<StaggeredField> {
        let mut r = self.system_rhs();
        r.axpy(-1.0, &self.apply(x)?);
        Ok(r)
    }

    /// Assemble `L` over all dofs (identity rows on prescribed dofs).
    pub fn assemble(&self) -> SparseMatrix {
        let mesh = self.mesh;
        let n = mesh.n as isize;
        let h = mesh.h();
        let h2 = h * h;
        let periodic = mesh.bc == BoundaryKind::Periodic;
        let idx = |f: Family, i: isize, j: isize| mesh.dof_index(f, i, j).expect("in range");
        let mut t = Vec::new();
        let diag_wall = match self.wall {
            WallTreatment::Reflect => 1.0,
            WallTreatment::Injection => 0.0,
        };

        let (nx, ny) = mesh.extent(Family::U);
        for j in 0..ny as isize {
            for i in 0..nx as isize {
                let row = idx(Family::U, i, j);
                if mesh.is_prescribed(Family::U, i as usize, j as usize) {
                    t.push((row, row, 1.0));
                    continue;
                }
                let mut diag = 4.0;
                t.push((row, idx(Family::U, i - 1, j), -1.0 / h2));
                t.push((row, idx(Family::U, i + 1, j), -1.0 / h2));
                if periodic || j > 0 {
                    t.push((row, idx(Family::U, i, j - 1), -1.0 / h2));
                } else {
                    diag += diag_wall;
                }
                if periodic || j < n - 1 {
                    t.push((row, idx(Family::U, i, j + 1), -1.0 / h2));
                } else {
                    diag += diag_wall;
                }
                t.push((row, row, diag / h2));
                t.push((row, idx(Family::P, i, j), 1.0 / h));
                t.push((row, idx(Family::P, i - 1, j), -1.0 / h));
            }
        }

        let (nx, ny) = mesh.extent(Family::V);
        for j in 0..ny as isize {
            for i in 0..nx as isize {
                let row = idx(Family::V, i, j);
                if mesh.is_prescribed(Family::V, i as usize, j as usize) {
                    t.push((row, row, 1.0));
                    continue;
                }
                let mut diag = 4.0;
                if periodic || i > 0 {
                    t.push((row, idx(Family::V, i - 1, j), -1.0 / h2));
                } else {
                    diag += diag_wall;
                }
                if periodic || i < n - 1 {
                    t.push((row, idx(Family::V, i + 1, j), -1.0 / h2));
                } else {
                    diag += diag_wall;
                }
                t.push((row, idx(Family::V, i, j - 1), -1.0 / h2));
                t.push((row, idx(Family::V, i, j + 1), -1.0 / h2));
                t.push((row, row, diag / h2));
                t.push((row, idx(Family::P, i, j), 1.0 / h));
                t.push((row, idx(Family::P, i, j - 1), -1.0 / h));
            }
        }

        for j in 0..n {
            for i in 0..n {
                let row = idx(Family::P, i, j);
                t.push((row, idx(Family::U, i + 1, j), 1.0 / h));
                t.push((row, idx(Family::U, i, j), -1.0 / h));
                t.push((row, idx(Family::V, i, j + 1), 1.0 / h));
                t.push((row, idx(Family::V, i, j), -1.0 / h));
            }
        }
        let total = mesh.total_dofs();
        sparse::from_triplets(total, total, t)
    }

    /// The system restricted to free dofs: `A_ff x_f = b_f − A_fb g`.
    pub fn reduced_system(&self) -> (DofLayout, SparseMatrix, Vec<f64>) {
        let layout = DofLayout::new(self.mesh);
        let full = self.assemble();
        let b_full = self.system_rhs().to_vec();
        let mut g = vec![0.0; self.mesh.total_dofs()];
        let mut bnd = StaggeredField::zeros(self.mesh);
        self.boundary.embed(&mut bnd);
        for (idx, v) in bnd.to_vec().into_iter().enumerate() {
            if layout.free_index(idx).is_none() {
                g[idx] = v;
            }
        }
        let coupling = sparse::matvec(&full, &g);
        let mut trip = Vec::new();
        let mut b = Vec::with_capacity(layout.n_free());
        for (r, &full_row) in layout.free_indices().iter().enumerate() {
            let row = full.row(full_row);
            for (&c, &v) in row.col_indices().iter().zip(row.values()) {
                if let Some(fc) = layout.free_index(c) {
                    trip.push((r, fc, v));
                }
            }
            b.push(b_full[full_row] - coupling[full_row]);
        }
        let a = sparse::from_triplets(layout.n_free(), layout.n_free(), trip);
        (layout, a, b)
    }

    /// Full field from free values plus the prescribed boundary data.
    pub fn expand(&self, layout: &DofLayout, free: &[f64]) -> StaggeredField {
        let mut field = layout.scatter(free);
        self.boundary.embed(&mut field);
        field
    }
}

/// Forcing of the periodic test problem, sampled on the staggered lattices.
pub fn build_rhs_periodic(mesh: MeshSpec) -> StaggeredField {
    let two_pi = 2.0 * PI;
    let mut f = StaggeredField::from_fn(mesh, |family, x, y| match family {
        Family::U => {
            let s = (two_pi * x).sin() * (two_pi * y).sin();
            8.0 * PI * PI * s - two_pi * s
        }
        Family::V => {
            let c = (two_pi * x).cos() * (two_pi * y).cos();
            8.0 * PI * PI * c + two_pi * c
        }
        Family::P => 0.0,
    });
    for fam in Family::ALL {
        f.subtract_family_mean(fam);
    }
    f
}

/// Forcing and boundary traces of the Dirichlet test problem; the boundary
/// values are `u = 0` and `v = cos(πx)·cos(πy)` restricted to the walls.
pub fn build_rhs_dirichlet(mesh: MeshSpec) -> (StaggeredField, BoundaryData) {
    let f = StaggeredField::from_fn(mesh, |family, x, y| match family {
        Family::U => 2.0 * PI * PI * (PI * x).sin() * (PI * y).sin() + PI * (PI * x).cos(),
        Family::V => 2.0 * PI * PI * (PI * x).cos() * (PI * y).cos() - PI * (PI * y).sin(),
        Family::P => 0.0,
    });
    let bd = BoundaryData::from_fns(mesh, |_, _| 0.0, |x, y| (PI * x).cos() * (PI * y).cos());
    (f, bd)
}
