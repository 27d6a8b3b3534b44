//! Grid transfers between a mesh and its standard coarsening, and the coarse
//! operators built from them.
//!
//! Stencils are written on doubled coordinates: a point at `(x, y)` in units
//! of the fine spacing `h` is stored as `(2x, 2y)`, so every staggered
//! position is an integer.

use std::collections::HashMap;

use crate::grid::{BoundaryKind, DofLayout, Family, MeshSpec, StaggeredField};
use crate::operator::{StokesProblem, WallTreatment};
use crate::sparse::{self, SparseMatrix};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Interpolation {
    /// Bilinear interpolation on each staggered lattice, with odd reflection
    /// of velocities and even reflection of pressure at Dirichlet walls.
    #[default]
    Bilinear,
    /// Scaled adjoint of the restriction, `P = 4·Rᵀ`: linear normal to the
    /// edge, piecewise constant along it; pressure piecewise constant.
    AdjointRestriction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CoarseOperator {
    /// `A_H = R A_h P`.
    #[default]
    Galerkin,
    /// The same discretization assembled on the coarse mesh.
    Rediscretized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct TransferSpec {
    pub interpolation: Interpolation,
    pub coarse: CoarseOperator,
}

/// Entries `(dx, dy, weight)` in doubled fine coordinates, relative to the
/// coarse dof.
pub type Stencil = Vec<(i64, i64, f64)>;

fn tensor(xs: &[(i64, f64)], ys: &[(i64, f64)]) -> Stencil {
    xs.iter()
        .flat_map(|&(dx, wx)| ys.iter().map(move |&(dy, wy)| (dx, dy, wx * wy)))
        .collect()
}

fn transpose(s: Stencil) -> Stencil {
    s.into_iter().map(|(dx, dy, w)| (dy, dx, w)).collect()
}

/// Restriction weights: six points for each velocity, four for pressure.
pub fn restriction_stencil(family: Family) -> Stencil {
    let along = [(-2, 0.125), (0, 0.25), (2, 0.125)];
    let across = [(-1, 1.0), (1, 1.0)];
    match family {
        Family::U => tensor(&along, &across),
        Family::V => transpose(tensor(&along, &across)),
        Family::P => tensor(&[(-1, 0.5), (1, 0.5)], &[(-1, 0.5), (1, 0.5)]),
    }
}

/// Interpolation weights: the coarse dof's contribution to nearby fine dofs.
pub fn interpolation_stencil(kind: Interpolation, family: Family) -> Stencil {
    match kind {
        Interpolation::AdjointRestriction => restriction_stencil(family)
            .into_iter()
            .map(|(dx, dy, w)| (dx, dy, 4.0 * w))
            .collect(),
        Interpolation::Bilinear => {
            let nodal = [(-2, 0.5), (0, 1.0), (2, 0.5)];
            let centred = [(-3, 0.25), (-1, 0.75), (1, 0.75), (3, 0.25)];
            match family {
                Family::U => tensor(&nodal, &centred),
                Family::V => tensor(&centred, &nodal),
                Family::P => tensor(&centred, &centred),
            }
        }
    }
}

fn doubled_position(family: Family, i: usize, j: usize) -> (i64, i64) {
    let (sx, sy) = family.stagger();
    (
        2 * i as i64 + (2.0 * sx) as i64,
        2 * j as i64 + (2.0 * sy) as i64,
    )
}

/// Free fine dof at a doubled position, if the position is on the family's
/// lattice and inside the domain.
fn fine_dof_at(layout: &DofLayout, family: Family, x2: i64, y2: i64) -> Option<usize> {
    let (sx, sy) = family.stagger();
    let (ox, oy) = ((2.0 * sx) as i64, (2.0 * sy) as i64);
    if (x2 - ox).rem_euclid(2) != 0 || (y2 - oy).rem_euclid(2) != 0 {
        return None;
    }
    layout.free_at(family, ((x2 - ox) / 2) as isize, ((y2 - oy) / 2) as isize)
}

/// Images of a coarse position across the walls of a Dirichlet mesh, with the
/// reflection sign. The identity image comes first.
fn images(mesh: MeshSpec, family: Family, x: i64, y: i64, reflect: bool) -> Vec<(i64, i64, f64)> {
    let mut out = vec![(x, y, 1.0)];
    if !reflect || mesh.bc == BoundaryKind::Periodic {
        return out;
    }
    let top = 2 * mesh.n as i64;
    let sign = if family == Family::P { 1.0 } else { -1.0 };
    let xs = [(x, 1.0), (-x, sign), (2 * top - x, sign)];
    let ys = [(y, 1.0), (-y, sign), (2 * top - y, sign)];
    for (a, &(mx, sx)) in xs.iter().enumerate() {
        for (b, &(my, sy)) in ys.iter().enumerate() {
            if a + b > 0 {
                out.push((mx, my, sx * sy));
            }
        }
    }
    out
}

/// Restriction on free dofs: `coarse_free × fine_free`.
pub fn restriction_matrix(fine: &DofLayout, coarse: &DofLayout) -> SparseMatrix {
    let mut trip = Vec::new();
    for k in 0..coarse.n_free() {
        let (f, ci, cj) = coarse.mesh.locate(coarse.full_index(k)).expect("valid");
        let (cx, cy) = doubled_position(f, ci, cj);
        for (dx, dy, w) in restriction_stencil(f) {
            if let Some(col) = fine_dof_at(fine, f, 2 * cx + dx, 2 * cy + dy) {
                trip.push((k, col, w));
            }
        }
    }
    sparse::from_triplets(coarse.n_free(), fine.n_free(), trip)
}

/// Interpolation on free dofs: `fine_free × coarse_free`.
pub fn interpolation_matrix(
    kind: Interpolation,
    fine: &DofLayout,
    coarse: &DofLayout,
) -> SparseMatrix {
    let reflect = kind == Interpolation::Bilinear;
    let mut entries: HashMap<(usize, usize), f64> = HashMap::new();
    for k in 0..coarse.n_free() {
        let (f, ci, cj) = coarse.mesh.locate(coarse.full_index(k)).expect("valid");
        let (cx, cy) = doubled_position(f, ci, cj);
        for (ix, iy, sign) in images(fine.mesh, f, 2 * cx, 2 * cy, reflect) {
            for (dx, dy, w) in interpolation_stencil(kind, f) {
                if let Some(row) = fine_dof_at(fine, f, ix + dx, iy + dy) {
                    *entries.entry((row, k)).or_insert(0.0) += sign * w;
                }
            }
        }
    }
    sparse::from_triplets(
        fine.n_free(),
        coarse.n_free(),
        entries.into_iter().map(|((r, c), v)| (r, c, v)),
    )
}

/// Restriction and interpolation between a mesh and its coarsening.
#[derive(Debug, Clone)]
pub struct TransferPair {
    pub fine: DofLayout,
    pub coarse: DofLayout,
    pub restriction: SparseMatrix,
    pub interpolation: SparseMatrix,
}

impl TransferPair {
    pub fn new(fine_mesh: MeshSpec, kind: Interpolation) -> Result<Self> {
        let fine = DofLayout::new(fine_mesh);
        let coarse = DofLayout::new(fine_mesh.coarsen()?);
        let restriction = restriction_matrix(&fine, &coarse);
        let interpolation = interpolation_matrix(kind, &fine, &coarse);
        Ok(Self {
            fine,
            coarse,
            restriction,
            interpolation,
        })
    }

    pub fn restrict(&self, fine: &StaggeredField) -> StaggeredField {
        let r = sparse::matvec(&self.restriction, &self.fine.gather(fine));
        self.coarse.scatter(&r)
    }

    pub fn interpolate(&self, coarse: &StaggeredField) -> StaggeredField {
        let p = sparse::matvec(&self.interpolation, &self.coarse.gather(coarse));
        self.fine.scatter(&p)
    }
}

/// Coarse-grid matrix on the coarse free dofs.
pub fn coarse_matrix(
    kind: CoarseOperator,
    fine_matrix: &SparseMatrix,
    pair: &TransferPair,
    wall: WallTreatment,
) -> SparseMatrix {
    match kind {
        CoarseOperator::Galerkin => sparse::prune(
            &sparse::triple_product(&pair.restriction, fine_matrix, &pair.interpolation),
            1e-14,
        ),
        CoarseOperator::Rediscretized => {
            StokesProblem::homogeneous(pair.coarse.mesh, wall)
                .reduced_system()
                .1
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(n: usize, bc: BoundaryKind, kind: Interpolation) -> TransferPair {
        TransferPair::new(MeshSpec::new(n, bc).unwrap(), kind).unwrap()
    }

    #[test]
    fn restriction_weights_sum_to_one() {
        for f in Family::ALL {
            let s: f64 = restriction_stencil(f).iter().map(|e| e.2).sum();
            assert!((s - 1.0).abs() < 1e-15);
            assert_eq!(
                restriction_stencil(f).len(),
                if f == Family::P { 4 } else { 6 }
            );
        }
    }

    #[test]
    fn constants_are_preserved_periodic() {
        for kind in [Interpolation::Bilinear, Interpolation::AdjointRestriction] {
            let t = pair(8, BoundaryKind::Periodic, kind);
            let ones = StaggeredField::from_fn(t.fine.mesh, |_, _, _| 1.0);
            let r = t.restrict(&ones);
            assert!(r.to_vec().iter().all(|v| (v - 1.0).abs() < 1e-14));
            let back = t.interpolate(&r);
            assert!(back.to_vec().iter().all(|v| (v - 1.0).abs() < 1e-14));
        }
    }

    #[test]
    fn bilinear_reproduces_linear_pressure() {
        let t = pair(8, BoundaryKind::Periodic, Interpolation::Bilinear);
        // a linear function away from the periodic seam
        let c = StaggeredField::from_fn(t.coarse.mesh, |_, x, y| 2.0 * x - y);
        let f = t.interpolate(&c);
        let want = StaggeredField::from_fn(t.fine.mesh, |_, x, y| 2.0 * x - y);
        for j in 1..7 {
            for i in 1..7 {
                let g = f.get(Family::P, i, j).unwrap();
                let w = want.get(Family::P, i, j).unwrap();
                assert!((g - w).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn adjoint_variant_is_scaled_transpose() {
        for bc in [BoundaryKind::Periodic, BoundaryKind::Dirichlet] {
            let t = pair(8, bc, Interpolation::AdjointRestriction);
            let rt = sparse::to_dense(&t.restriction).transpose() * 4.0;
            let p = sparse::to_dense(&t.interpolation);
            assert!((rt - p).amax() < 1e-15);
        }
    }

    #[test]
    fn dirichlet_interpolation_vanishes_towards_walls() {
        let t = pair(8, BoundaryKind::Dirichlet, Interpolation::Bilinear);
        let c = StaggeredField::from_fn(
            t.coarse.mesh,
            |f, _, _| if f == Family::P { 0.0 } else { 1.0 },
        );
        let mut c = c;
        crate::grid::BoundaryData::zero(t.coarse.mesh).embed(&mut c);
        let f = t.interpolate(&c);
        // tangential velocity next to the bottom wall: (3/4 - 1/4)·1
        assert!((f.get(Family::U, 4, 0).unwrap() - 0.5).abs() < 1e-14);
        assert!((f.get(Family::U, 4, 3).unwrap() - 1.0).abs() < 1e-14);
        // normal velocity next to the left wall: half the first interior value
        assert!((f.get(Family::U, 1, 3).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn galerkin_pressure_block_is_zero() {
        for kind in [Interpolation::Bilinear, Interpolation::AdjointRestriction] {
            for bc in [BoundaryKind::Periodic, BoundaryKind::Dirichlet] {
                let t = pair(8, bc, kind);
                let (_, a, _) = StokesProblem::homogeneous(t.fine.mesh, WallTreatment::Reflect)
                    .reduced_system();
                let ac = coarse_matrix(CoarseOperator::Galerkin, &a, &t, WallTreatment::Reflect);
                for (r, c, v) in ac.triplet_iter() {
                    let fr = t.coarse.family_of_free(r);
                    let fc = t.coarse.family_of_free(c);
                    if fr == Family::P && fc == Family::P {
                        assert!(v.abs() < 1e-10, "{kind:?} {bc:?}");
                    }
                }
            }
        }
    }
}
