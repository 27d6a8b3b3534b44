//! Staggered-grid geometry, index maps and field storage.
//!
//! Indices are zero-based. On an `n × n` cell mesh of the unit square:
//!
//! * `u(i, j)` lives on the vertical edge at `(i·h, (j + ½)·h)`,
//! * `v(i, j)` on the horizontal edge at `((i + ½)·h, j·h)`,
//! * `p(i, j)` at the cell centre `((i + ½)·h, (j + ½)·h)`.
//!
//! With Dirichlet boundaries `u` has `(n + 1) × n` entries and `v` has
//! `n × (n + 1)`; the columns `u(0, ·)`, `u(n, ·)` and rows `v(·, 0)`,
//! `v(·, n)` are prescribed. Periodic meshes drop the duplicated edge line
//! so every family stores `n × n` values and indices wrap modulo `n`.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundaryKind {
    Periodic,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    U,
    V,
    P,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::U, Family::V, Family::P];

    pub fn ordinal(self) -> usize {
        match self {
            Family::U => 0,
            Family::V => 1,
            Family::P => 2,
        }
    }

    /// Offset of the family's lattice from the cell corner, in units of `h`.
    pub fn stagger(self) -> (f64, f64) {
        match self {
            Family::U => (0.0, 0.5),
            Family::V => (0.5, 0.0),
            Family::P => (0.5, 0.5),
        }
    }
}

/// Uniform mesh of the unit square with `n` cells per direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MeshSpec {
    pub n: usize,
    pub bc: BoundaryKind,
}

impl MeshSpec {
    pub fn new(n: usize, bc: BoundaryKind) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMesh("n must be positive".into()));
        }
        Ok(Self { n, bc })
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Standard coarsening: halve the cell count.
    pub fn coarsen(&self) -> Result<MeshSpec> {
        if !self.n.is_multiple_of(2) {
            return Err(Error::NotCoarsenable(self.n));
        }
        Ok(MeshSpec {
            n: self.n / 2,
            bc: self.bc,
        })
    }

    /// Logical `(nx, ny)` extent of one unknown family.
    pub fn extent(&self, family: Family) -> (usize, usize) {
        let n = self.n;
        match (self.bc, family) {
            (BoundaryKind::Periodic, _) | (_, Family::P) => (n, n),
            (BoundaryKind::Dirichlet, Family::U) => (n + 1, n),
            (BoundaryKind::Dirichlet, Family::V) => (n, n + 1),
        }
    }

    pub fn family_len(&self, family: Family) -> usize {
        let (nx, ny) = self.extent(family);
        nx * ny
    }

    pub fn total_dofs(&self) -> usize {
        Family::ALL.iter().map(|&f| self.family_len(f)).sum()
    }

    fn family_offset(&self, family: Family) -> usize {
        match family {
            Family::U => 0,
            Family::V => self.family_len(Family::U),
            Family::P => self.family_len(Family::U) + self.family_len(Family::V),
        }
    }

    /// Resolve possibly out-of-range indices: wrap for periodic meshes,
    /// reject for Dirichlet meshes.
    pub fn resolve(&self, family: Family, i: isize, j: isize) -> Result<(usize, usize)> {
        let (nx, ny) = self.extent(family);
        match self.bc {
            BoundaryKind::Periodic => Ok((
                i.rem_euclid(nx as isize) as usize,
                j.rem_euclid(ny as isize) as usize,
            )),
            BoundaryKind::Dirichlet => {
                if i < 0 || j < 0 || i as usize >= nx || j as usize >= ny {
                    Err(Error::IndexOutOfRange {
                        family,
                        i,
                        j,
                        n: self.n,
                    })
                } else {
                    Ok((i as usize, j as usize))
                }
            }
        }
    }

    /// Flat index: u-block, then v-block, then p-block, row-major (i fastest).
    pub fn dof_index(&self, family: Family, i: isize, j: isize) -> Result<usize> {
        let (i, j) = self.resolve(family, i, j)?;
        let (nx, _) = self.extent(family);
        Ok(self.family_offset(family) + j * nx + i)
    }

    pub fn u_index(&self, i: isize, j: isize) -> Result<usize> {
        self.dof_index(Family::U, i, j)
    }

    pub fn v_index(&self, i: isize, j: isize) -> Result<usize> {
        self.dof_index(Family::V, i, j)
    }

    pub fn p_index(&self, i: isize, j: isize) -> Result<usize> {
        self.dof_index(Family::P, i, j)
    }

    /// Inverse of [`MeshSpec::dof_index`].
    pub fn locate(&self, index: usize) -> Option<(Family, usize, usize)> {
        let mut rest = index;
        for family in Family::ALL {
            let len = self.family_len(family);
            if rest < len {
                let (nx, _) = self.extent(family);
                return Some((family, rest % nx, rest / nx));
            }
            rest -= len;
        }
        None
    }

    /// Whether the dof carries a prescribed Dirichlet value.
    pub fn is_prescribed(&self, family: Family, i: usize, j: usize) -> bool {
        if self.bc == BoundaryKind::Periodic {
            return false;
        }
        match family {
            Family::U => i == 0 || i == self.n,
            Family::V => j == 0 || j == self.n,
            Family::P => false,
        }
    }

    /// Physical coordinates of a dof.
    pub fn position(&self, family: Family, i: usize, j: usize) -> (f64, f64) {
        let h = self.h();
        let (sx, sy) = family.stagger();
        ((i as f64 + sx) * h, (j as f64 + sy) * h)
    }
}

/// Numbering of the relaxation-eligible (non-prescribed) dofs.
#[derive(Debug, Clone)]
pub struct DofLayout {
    pub mesh: MeshSpec,
    free: Vec<usize>,
    free_of: Vec<Option<usize>>,
}

impl DofLayout {
    pub fn new(mesh: MeshSpec) -> Self {
        let total = mesh.total_dofs();
        let mut free = Vec::with_capacity(total);
        let mut free_of = vec![None; total];
        for (idx, slot) in free_of.iter_mut().enumerate() {
            let (f, i, j) = mesh.locate(idx).expect("index within total");
            if !mesh.is_prescribed(f, i, j) {
                *slot = Some(free.len());
                free.push(idx);
            }
        }
        Self {
            mesh,
            free,
            free_of,
        }
    }

    pub fn n_free(&self) -> usize {
        self.free.len()
    }

    /// Full index of the k-th free dof.
    pub fn full_index(&self, k: usize) -> usize {
        self.free[k]
    }

    pub fn free_indices(&self) -> &[usize] {
        &self.free
    }

    pub fn free_index(&self, full: usize) -> Option<usize> {
        self.free_of[full]
    }

    /// Free index of `(family, i, j)`; `None` when prescribed or outside a
    /// Dirichlet mesh.
    pub fn free_at(&self, family: Family, i: isize, j: isize) -> Option<usize> {
        self.mesh
            .dof_index(family, i, j)
            .ok()
            .and_then(|full| self.free_of[full])
    }

    pub fn family_of_free(&self, k: usize) -> Family {
        self.mesh.locate(self.free[k]).expect("valid index").0
    }

    pub fn gather(&self, field: &StaggeredField) -> Vec<f64> {
        let full = field.to_vec();
        self.free.iter().map(|&idx| full[idx]).collect()
    }

    /// Scatter free values into a field whose prescribed entries are zero.
    pub fn scatter(&self, values: &[f64]) -> StaggeredField {
        let mut full = vec![0.0; self.mesh.total_dofs()];
        for (k, &idx) in self.free.iter().enumerate() {
            full[idx] = values[k];
        }
        StaggeredField::from_vec(self.mesh, &full)
    }
}

/// The `(u, v, p)` triple on its three interleaved lattices.
#[derive(Debug, Clone, PartialEq)]
pub struct StaggeredField {
    pub mesh: MeshSpec,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub p: Vec<f64>,
}

impl StaggeredField {
    pub fn zeros(mesh: MeshSpec) -> Self {
        Self {
            mesh,
            u: vec![0.0; mesh.family_len(Family::U)],
            v: vec![0.0; mesh.family_len(Family::V)],
            p: vec![0.0; mesh.family_len(Family::P)],
        }
    }

    /// Sample `f(family, x, y)` at every dof location.
    pub fn from_fn(mesh: MeshSpec, mut f: impl FnMut(Family, f64, f64) -> f64) -> Self {
        let mut field = Self::zeros(mesh);
        for family in Family::ALL {
            let (nx, ny) = mesh.extent(family);
            for j in 0..ny {
                for i in 0..nx {
                    let (x, y) = mesh.position(family, i, j);
                    field.family_mut(family)[j * nx + i] = f(family, x, y);
                }
            }
        }
        field
    }

    pub fn family(&self, family: Family) -> &[f64] {
        match family {
            Family::U => &self.u,
            Family::V => &self.v,
            Family::P => &self.p,
        }
    }

    pub fn family_mut(&mut self, family: Family) -> &mut Vec<f64> {
        match family {
            Family::U => &mut self.u,
            Family::V => &mut self.v,
            Family::P => &mut self.p,
        }
    }

    pub fn get(&self, family: Family, i: isize, j: isize) -> Result<f64> {
        let (i, j) = self.mesh.resolve(family, i, j)?;
        let (nx, _) = self.mesh.extent(family);
        Ok(self.family(family)[j * nx + i])
    }

    pub fn set(&mut self, family: Family, i: isize, j: isize, value: f64) -> Result<()> {
        let (i, j) = self.mesh.resolve(family, i, j)?;
        let (nx, _) = self.mesh.extent(family);
        self.family_mut(family)[j * nx + i] = value;
        Ok(())
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.mesh.total_dofs());
        out.extend_from_slice(&self.u);
        out.extend_from_slice(&self.v);
        out.extend_from_slice(&self.p);
        out
    }

    pub fn from_vec(mesh: MeshSpec, values: &[f64]) -> Self {
        assert_eq!(values.len(), mesh.total_dofs(), "vector length mismatch");
        let nu = mesh.family_len(Family::U);
        let nv = mesh.family_len(Family::V);
        Self {
            mesh,
            u: values[..nu].to_vec(),
            v: values[nu..nu + nv].to_vec(),
            p: values[nu + nv..].to_vec(),
        }
    }

    pub fn family_norm(&self, family: Family) -> f64 {
        self.family(family)
            .iter()
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm(&self) -> f64 {
        Family::ALL
            .iter()
            .map(|&f| self.family_norm(f).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    pub fn family_mean(&self, family: Family) -> f64 {
        let values = self.family(family);
        values.iter().sum::<f64>() / values.len() as f64
    }

    pub fn subtract_family_mean(&mut self, family: Family) {
        let mean = self.family_mean(family);
        for x in self.family_mut(family).iter_mut() {
            *x -= mean;
        }
    }

    pub fn axpy(&mut self, alpha: f64, other: &StaggeredField) {
        for family in Family::ALL {
            for (a, b) in self.family_mut(family).iter_mut().zip(other.family(family)) {
                *a += alpha * b;
            }
        }
    }
}

/// Dirichlet boundary traces.
///
/// `u_left`/`u_right` are the prescribed normal velocities on the columns
/// `u(0, ·)`/`u(n, ·)`; `v_bottom`/`v_top` likewise for `v(·, 0)`/`v(·, n)`.
/// The tangential traces are sampled on the walls themselves: `u_bottom`,
/// `u_top` at `x = i·h` (`i = 0..=n`) and `v_left`, `v_right` at `y = j·h`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BoundaryData {
    pub u_left: Vec<f64>,
    pub u_right: Vec<f64>,
    pub u_bottom: Vec<f64>,
    pub u_top: Vec<f64>,
    pub v_bottom: Vec<f64>,
    pub v_top: Vec<f64>,
    pub v_left: Vec<f64>,
    pub v_right: Vec<f64>,
}

impl BoundaryData {
    /// Empty data (periodic meshes).
    pub fn none() -> Self {
        Self::default()
    }

    pub fn zero(mesh: MeshSpec) -> Self {
        Self::from_fns(mesh, |_, _| 0.0, |_, _| 0.0)
    }

    /// Sample the velocity boundary functions `u(x, y)` and `v(x, y)`.
    pub fn from_fns(
        mesh: MeshSpec,
        u: impl Fn(f64, f64) -> f64,
        v: impl Fn(f64, f64) -> f64,
    ) -> Self {
        if mesh.bc == BoundaryKind::Periodic {
            return Self::none();
        }
        let n = mesh.n;
        let h = mesh.h();
        let mid = |k: usize| (k as f64 + 0.5) * h;
        let node = |k: usize| k as f64 * h;
        Self {
            u_left: (0..n).map(|j| u(0.0, mid(j))).collect(),
            u_right: (0..n).map(|j| u(1.0, mid(j))).collect(),
            u_bottom: (0..=n).map(|i| u(node(i), 0.0)).collect(),
            u_top: (0..=n).map(|i| u(node(i), 1.0)).collect(),
            v_bottom: (0..n).map(|i| v(mid(i), 0.0)).collect(),
            v_top: (0..n).map(|i| v(mid(i), 1.0)).collect(),
            v_left: (0..=n).map(|j| v(0.0, node(j))).collect(),
            v_right: (0..=n).map(|j| v(1.0, node(j))).collect(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.u_left.is_empty()
    }

    /// Check trace lengths against the mesh.
    pub fn conforms_to(&self, mesh: MeshSpec) -> bool {
        match mesh.bc {
            BoundaryKind::Periodic => self.is_empty(),
            BoundaryKind::Dirichlet => {
                let n = mesh.n;
                [&self.u_left, &self.u_right, &self.v_bottom, &self.v_top]
                    .iter()
                    .all(|t| t.len() == n)
                    && [&self.u_bottom, &self.u_top, &self.v_left, &self.v_right]
                        .iter()
                        .all(|t| t.len() == n + 1)
            }
        }
    }

    /// Write the prescribed normal-velocity values into `field`.
    pub fn embed(&self, field: &mut StaggeredField) {
        let mesh = field.mesh;
        if mesh.bc == BoundaryKind::Periodic {
            return;
        }
        let n = mesh.n;
        for j in 0..n {
            field.u[j * (n + 1)] = self.u_left[j];
            field.u[j * (n + 1) + n] = self.u_right[j];
        }
        for i in 0..n {
            field.v[i] = self.v_bottom[i];
            field.v[n * n + i] = self.v_top[i];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dirichlet(n: usize) -> MeshSpec {
        MeshSpec::new(n, BoundaryKind::Dirichlet).unwrap()
    }

    fn periodic(n: usize) -> MeshSpec {
        MeshSpec::new(n, BoundaryKind::Periodic).unwrap()
    }

    #[test]
    fn coarsening() {
        assert_eq!(periodic(32).coarsen().unwrap().n, 16);
        assert_eq!(dirichlet(2).coarsen().unwrap().n, 1);
        assert_eq!(dirichlet(3).coarsen(), Err(Error::NotCoarsenable(3)));
        let mut m = dirichlet(32);
        let mut chain = vec![m.n];
        while m.n > 2 {
            m = m.coarsen().unwrap();
            chain.push(m.n);
        }
        assert_eq!(chain, vec![32, 16, 8, 4, 2]);
    }

    #[test]
    fn dof_counts() {
        assert_eq!(dirichlet(2).total_dofs(), 16);
        assert_eq!(periodic(2).total_dofs(), 12);
        assert_eq!(dirichlet(2).u_index(0, 0).unwrap(), 0);
        assert_eq!(periodic(2).u_index(0, 0).unwrap(), 0);
    }

    #[test]
    fn index_round_trip() {
        for mesh in [dirichlet(4), periodic(4), dirichlet(3)] {
            for idx in 0..mesh.total_dofs() {
                let (f, i, j) = mesh.locate(idx).unwrap();
                assert_eq!(mesh.dof_index(f, i as isize, j as isize).unwrap(), idx);
            }
            assert!(mesh.locate(mesh.total_dofs()).is_none());
        }
    }

    #[test]
    fn periodic_wrap_and_dirichlet_range() {
        let m = periodic(4);
        for j in 0..4 {
            assert_eq!(m.u_index(4, j).unwrap(), m.u_index(0, j).unwrap());
            assert_eq!(m.v_index(j, -1).unwrap(), m.v_index(j, 3).unwrap());
        }
        let d = dirichlet(4);
        assert!(d.u_index(4, 3).is_ok());
        assert!(d.u_index(5, 0).is_err());
        assert!(d.u_index(0, 4).is_err());
        assert!(d.p_index(-1, 0).is_err());
    }

    #[test]
    fn dirichlet_mask_excludes_exactly_the_boundary_normals() {
        let mesh = dirichlet(4);
        let layout = DofLayout::new(mesh);
        // (n+1)n u, n(n+1) v minus 2n prescribed each, plus n^2 p
        assert_eq!(layout.n_free(), 2 * (5 * 4 - 8) + 16);
        for idx in 0..mesh.total_dofs() {
            let (f, i, j) = mesh.locate(idx).unwrap();
            let boundary = match f {
                Family::U => i == 0 || i == 4,
                Family::V => j == 0 || j == 4,
                Family::P => false,
            };
            assert_eq!(layout.free_index(idx).is_none(), boundary);
        }
        assert_eq!(DofLayout::new(periodic(4)).n_free(), 48);
    }

    #[test]
    fn positions_follow_stagger() {
        let m = dirichlet(4);
        assert_eq!(m.position(Family::U, 0, 0), (0.0, 0.125));
        assert_eq!(m.position(Family::V, 0, 0), (0.125, 0.0));
        assert_eq!(m.position(Family::P, 1, 2), (0.375, 0.625));
    }

    #[test]
    fn embed_boundary() {
        let mesh = dirichlet(2);
        let bd = BoundaryData::from_fns(mesh, |_, y| y, |x, _| 10.0 + x);
        assert!(bd.conforms_to(mesh));
        let mut f = StaggeredField::zeros(mesh);
        bd.embed(&mut f);
        assert_eq!(f.get(Family::U, 2, 1).unwrap(), 0.75);
        assert_eq!(f.get(Family::V, 1, 2).unwrap(), 10.75);
        assert_eq!(f.get(Family::U, 1, 1).unwrap(), 0.0);
    }
}
