//! Coupled block relaxation for the staggered Stokes system.
//!
//! Every smoother here is a sequence of damped block solves
//! `x_B ← x_B + ω·A_BB⁻¹·(b − A x)_B`, where a block `B` collects a few
//! velocity and pressure unknowns of one cell and `A_BB` is the restriction
//! of the system matrix to the block's rows and columns. Rows and columns are
//! paired: the equation attached to a velocity dof is the momentum equation
//! at that edge, and the one attached to a pressure dof is the continuity
//! equation of its cell.
//!
//! Gauss–Seidel variants update `x` in place so later blocks see earlier
//! updates; Jacobi variants read every off-block value from the state at the
//! start of the sweep.

use crate::dense::solve_full_pivot;
use crate::grid::{BoundaryKind, DofLayout, Family, MeshSpec};
use crate::sparse::SparseMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SmootherKind {
    /// Overlapping 5-unknown cell blocks.
    Vanka,
    /// Non-overlapping 3-unknown blocks, Gauss–Seidel update.
    TriadGS,
    /// Non-overlapping 3-unknown blocks, Jacobi update.
    TriadJacobi,
    /// Four triad sweeps with rotated block layouts.
    TriadModified,
    /// Triad sweep plus one overlapping block at the corner cell whose triad
    /// block degenerates to a lone pressure.
    TriadPlusCorner,
    /// Triad sweep plus overlapping blocks on the cells along the walls.
    TriadPlusBoundary,
    /// Triad sweep plus full Vanka blocks on every boundary cell.
    TriadPlusVankaBoundary,
}

impl SmootherKind {
    pub fn is_triad(self) -> bool {
        !matches!(self, SmootherKind::Vanka)
    }

    pub fn phase_count(self) -> usize {
        match self {
            SmootherKind::TriadModified => 4,
            _ => 1,
        }
    }

    fn needs_dirichlet(self) -> bool {
        matches!(
            self,
            SmootherKind::TriadPlusCorner
                | SmootherKind::TriadPlusBoundary
                | SmootherKind::TriadPlusVankaBoundary
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Ordering {
    /// Lexicographic, row by row from the bottom-left cell.
    Forward,
    /// Reverse lexicographic, from the top-right cell.
    Backward,
    /// Cells with even `i + j` first, then odd.
    RedBlack,
    /// Colors `(i + 2j) mod 5`.
    FiveColor,
    /// Colors `(i mod 3) + 3·(j mod 3)`.
    NineColor,
}

impl Ordering {
    pub fn colors(self) -> usize {
        match self {
            Ordering::Forward | Ordering::Backward => 1,
            Ordering::RedBlack => 2,
            Ordering::FiveColor => 5,
            Ordering::NineColor => 9,
        }
    }

    pub fn color_of(self, i: usize, j: usize) -> usize {
        match self {
            Ordering::Forward | Ordering::Backward => 0,
            Ordering::RedBlack => (i + j) % 2,
            Ordering::FiveColor => (i + 2 * j) % 5,
            Ordering::NineColor => i % 3 + 3 * (j % 3),
        }
    }
}

/// Row-by-row sweep direction, named by the corner the sweep starts from.
/// `Forward` starts bottom-left and moves right, then up; `Backward` is its
/// exact reverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Direction {
    #[default]
    Forward,
    Backward,
    FromBottomRight,
    FromTopLeft,
}

impl Direction {
    pub fn flip(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
            Direction::FromBottomRight => Direction::FromTopLeft,
            Direction::FromTopLeft => Direction::FromBottomRight,
        }
    }

    /// Signs `(sx, sy)`: `+1` when the sweep runs towards increasing index.
    pub fn signs(self) -> (i64, i64) {
        match self {
            Direction::Forward => (1, 1),
            Direction::Backward => (-1, -1),
            Direction::FromBottomRight => (-1, 1),
            Direction::FromTopLeft => (1, -1),
        }
    }

    /// Whether the cell at offset `(dx, dy)` is visited before the origin.
    pub fn precedes(self, dx: i64, dy: i64) -> bool {
        let (sx, sy) = self.signs();
        sy * dy < 0 || (dy == 0 && sx * dx < 0)
    }
}

/// Which edges of a cell a triad block takes, and the sweep direction used
/// while relaxing those blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TriadPhase {
    pub u_right: bool,
    pub v_top: bool,
    pub direction: Direction,
}

impl TriadPhase {
    pub const fn new(u_right: bool, v_top: bool, direction: Direction) -> Self {
        Self {
            u_right,
            v_top,
            direction,
        }
    }
}

/// Left/bottom, right/bottom, left/top, right/top, all swept lexicographically.
pub const DEFAULT_MODIFIED_PHASES: [TriadPhase; 4] = [
    TriadPhase::new(false, false, Direction::Forward),
    TriadPhase::new(true, false, Direction::Forward),
    TriadPhase::new(false, true, Direction::Forward),
    TriadPhase::new(true, true, Direction::Forward),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmootherSpec {
    pub kind: SmootherKind,
    pub omega: f64,
    pub ordering: Ordering,
    /// Sweep direction inside each color of a colored ordering.
    pub within_color: Direction,
    /// Block layouts of [`SmootherKind::TriadModified`].
    pub modified_phases: [TriadPhase; 4],
}

impl SmootherSpec {
    pub fn new(kind: SmootherKind, omega: f64) -> Self {
        Self {
            kind,
            omega,
            ordering: Ordering::Forward,
            within_color: Direction::Forward,
            modified_phases: DEFAULT_MODIFIED_PHASES,
        }
    }

    pub fn with_ordering(mut self, ordering: Ordering) -> Self {
        self.ordering = ordering;
        self
    }

    pub fn with_within_color(mut self, direction: Direction) -> Self {
        self.within_color = direction;
        self
    }

    pub fn validate(&self, mesh: MeshSpec) -> Result<()> {
        if !(self.omega > 0.0 && self.omega < 2.0) {
            return Err(Error::InvalidSmoother(format!(
                "omega = {} outside (0, 2)",
                self.omega
            )));
        }
        match self.ordering {
            Ordering::FiveColor | Ordering::NineColor if self.kind != SmootherKind::Vanka => {
                return Err(Error::InvalidSmoother(format!(
                    "{:?} ordering requires the Vanka smoother",
                    self.ordering
                )))
            }
            Ordering::RedBlack if self.kind == SmootherKind::Vanka => {
                return Err(Error::InvalidSmoother(
                    "red-black ordering is not conflict-free for Vanka blocks".into(),
                ))
            }
            _ => {}
        }
        if self.kind == SmootherKind::TriadJacobi && self.ordering != Ordering::Forward {
            return Err(Error::InvalidSmoother(
                "Jacobi relaxation is order independent; use Forward".into(),
            ));
        }
        if self.kind.needs_dirichlet() && mesh.bc != BoundaryKind::Dirichlet {
            return Err(Error::InvalidSmoother(format!(
                "{:?} augments Dirichlet boundaries only",
                self.kind
            )));
        }
        Ok(())
    }
}

/// Unknowns of one relaxation block; the block's equations are the rows
/// paired with the same unknowns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockDef {
    pub cell: (usize, usize),
    pub dofs: Vec<(Family, usize, usize)>,
}

impl BlockDef {
    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }
}

/// Cells in the order a sweep visits them.
pub fn cell_order(ordering: Ordering, within: Direction, n: usize) -> Vec<(usize, usize)> {
    let lex: Vec<(usize, usize)> = (0..n).flat_map(|j| (0..n).map(move |i| (i, j))).collect();
    let directed = |mut cells: Vec<(usize, usize)>, d: Direction| {
        let (sx, sy) = d.signs();
        cells.sort_by_key(|&(i, j)| (sy * j as i64, sx * i as i64));
        cells
    };
    match ordering {
        Ordering::Forward => directed(lex, within),
        Ordering::Backward => directed(lex, within.flip()),
        _ => {
            let mut out = Vec::with_capacity(n * n);
            for color in 0..ordering.colors() {
                let cells = lex
                    .iter()
                    .copied()
                    .filter(|&(i, j)| ordering.color_of(i, j) == color)
                    .collect();
                out.extend(directed(cells, within));
            }
            out
        }
    }
}

fn keep_free(mesh: MeshSpec, dofs: &[(Family, isize, isize)]) -> Vec<(Family, usize, usize)> {
    dofs.iter()
        .filter_map(|&(f, i, j)| {
            let (i, j) = mesh.resolve(f, i, j).ok()?;
            (!mesh.is_prescribed(f, i, j)).then_some((f, i, j))
        })
        .collect()
}

pub fn vanka_block(mesh: MeshSpec, i: usize, j: usize) -> BlockDef {
    let (i, j) = (i as isize, j as isize);
    BlockDef {
        cell: (i as usize, j as usize),
        dofs: keep_free(
            mesh,
            &[
                (Family::U, i, j),
                (Family::U, i + 1, j),
                (Family::V, i, j),
                (Family::V, i, j + 1),
                (Family::P, i, j),
            ],
        ),
    }
}

pub fn triad_block(mesh: MeshSpec, i: usize, j: usize, u_right: bool, v_top: bool) -> BlockDef {
    let (ii, jj) = (i as isize, j as isize);
    BlockDef {
        cell: (i, j),
        dofs: keep_free(
            mesh,
            &[
                (Family::U, ii + u_right as isize, jj),
                (Family::V, ii, jj + v_top as isize),
                (Family::P, ii, jj),
            ],
        ),
    }
}

/// Blocks of one phase in sweep order.
pub fn enumerate_blocks(
    spec: &SmootherSpec,
    mesh: MeshSpec,
    phase: usize,
) -> Result<Vec<BlockDef>> {
    if phase >= spec.kind.phase_count() {
        return Err(Error::InvalidPhase {
            kind: spec.kind,
            phase,
        });
    }
    let n = mesh.n;
    let blocks = match spec.kind {
        SmootherKind::Vanka => cell_order(spec.ordering, spec.within_color, n)
            .into_iter()
            .map(|(i, j)| vanka_block(mesh, i, j))
            .collect(),
        SmootherKind::TriadModified => {
            let ph = spec.modified_phases[phase];
            cell_order(spec.ordering, ph.direction, n)
                .into_iter()
                .map(|(i, j)| triad_block(mesh, i, j, ph.u_right, ph.v_top))
                .collect()
        }
        _ => cell_order(spec.ordering, spec.within_color, n)
            .into_iter()
            .map(|(i, j)| triad_block(mesh, i, j, false, false))
            .collect(),
    };
    Ok(blocks)
}

/// Extra overlapping blocks relaxed after the triad sweep of the
/// boundary-augmented smoothers.
pub fn augmentation_blocks(kind: SmootherKind, mesh: MeshSpec) -> Vec<BlockDef> {
    let n = mesh.n;
    let boundary_cells = || {
        (0..n)
            .flat_map(move |j| (0..n).map(move |i| (i, j)))
            .filter(move |&(i, j)| i == 0 || j == 0 || i == n - 1 || j == n - 1)
    };
    match kind {
        SmootherKind::TriadPlusCorner => vec![vanka_block(mesh, 0, 0)],
        SmootherKind::TriadPlusBoundary => boundary_cells()
            .map(|(i, j)| triad_block(mesh, i, j, i == 0, j == 0))
            .collect(),
        SmootherKind::TriadPlusVankaBoundary => boundary_cells()
            .map(|(i, j)| vanka_block(mesh, i, j))
            .collect(),
        _ => Vec::new(),
    }
}

/// A block bound to a level's free-dof numbering, with its local matrix.
#[derive(Debug, Clone)]
pub struct CompiledBlock {
    pub dofs: Vec<usize>,
    local: Vec<f64>,
    /// Off-block entries in the block's rows (reads of outside dofs).
    pub off_block_reads: usize,
    /// Nonzeros in the block's rows.
    pub row_nnz: usize,
}

impl CompiledBlock {
    pub fn new(a: &SparseMatrix, dofs: Vec<usize>) -> Self {
        let k = dofs.len();
        let mut local = vec![0.0; k * k];
        let mut off = 0;
        let mut nnz = 0;
        for (r, &row) in dofs.iter().enumerate() {
            let rv = a.row(row);
            for (&c, &v) in rv.col_indices().iter().zip(rv.values()) {
                nnz += 1;
                match dofs.iter().position(|&d| d == c) {
                    Some(pos) => local[r * k + pos] = v,
                    None => off += 1,
                }
            }
        }
        Self {
            dofs,
            local,
            off_block_reads: off,
            row_nnz: nnz,
        }
    }

    pub fn local_matrix(&self) -> &[f64] {
        &self.local
    }
}

/// Counters accumulated while smoothing.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SweepStats {
    pub flops: u64,
    pub off_block_reads: u64,
    pub blocks: u64,
    pub skipped_blocks: u64,
    /// Per free dof update counts, when enabled.
    pub updates: Option<Vec<u32>>,
}

impl SweepStats {
    pub fn with_update_counts(n_dofs: usize) -> Self {
        Self {
            updates: Some(vec![0; n_dofs]),
            ..Self::default()
        }
    }
}

/// One damped block solve. `snapshot` supplies off-block values for Jacobi
/// semantics; otherwise the current `x` is read. Returns `false` when the
/// local matrix is singular and the block was skipped.
pub fn relax_block(
    a: &SparseMatrix,
    block: &CompiledBlock,
    x: &mut [f64],
    b: &[f64],
    omega: f64,
    snapshot: Option<&[f64]>,
    stats: &mut SweepStats,
) -> bool {
    let k = block.dofs.len();
    if k == 0 {
        return true;
    }
    let source: &[f64] = snapshot.unwrap_or(x);
    let mut r: Vec<f64> = block
        .dofs
        .iter()
        .map(|&row| {
            let rv = a.row(row);
            let ax: f64 = rv
                .col_indices()
                .iter()
                .zip(rv.values())
                .map(|(&c, &v)| v * source[c])
                .sum();
            b[row] - ax
        })
        .collect();
    let mut local = block.local.clone();
    stats.blocks += 1;
    stats.off_block_reads += block.off_block_reads as u64;
    stats.flops += 2 * block.row_nnz as u64;
    match solve_full_pivot(&mut local, &mut r, k) {
        Some(ops) => {
            stats.flops += ops + 2 * k as u64;
            for (&d, delta) in block.dofs.iter().zip(&r) {
                x[d] += omega * delta;
            }
            if let Some(counts) = stats.updates.as_mut() {
                for &d in &block.dofs {
                    counts[d] += 1;
                }
            }
            true
        }
        None => {
            stats.skipped_blocks += 1;
            false
        }
    }
}

#[derive(Debug, Clone)]
pub struct Stage {
    pub blocks: Vec<CompiledBlock>,
    pub jacobi: bool,
}

/// A smoother compiled against one level's matrix.
#[derive(Debug, Clone)]
pub struct Smoother {
    pub spec: SmootherSpec,
    pub stages: Vec<Stage>,
}

impl Smoother {
    pub fn new(spec: SmootherSpec, layout: &DofLayout, a: &SparseMatrix) -> Result<Self> {
        let mesh = layout.mesh;
        spec.validate(mesh)?;
        let compile = |defs: Vec<BlockDef>| -> Vec<CompiledBlock> {
            defs.into_iter()
                .map(|def| {
                    let dofs = def
                        .dofs
                        .iter()
                        .map(|&(f, i, j)| {
                            layout
                                .free_at(f, i as isize, j as isize)
                                .expect("block dofs are free")
                        })
                        .collect();
                    CompiledBlock::new(a, dofs)
                })
                .collect()
        };
        let mut stages = Vec::new();
        for phase in 0..spec.kind.phase_count() {
            stages.push(Stage {
                blocks: compile(enumerate_blocks(&spec, mesh, phase)?),
                jacobi: spec.kind == SmootherKind::TriadJacobi,
            });
        }
        let extra = augmentation_blocks(spec.kind, mesh);
        if !extra.is_empty() {
            stages.push(Stage {
                blocks: compile(extra),
                jacobi: false,
            });
        }
        Ok(Self { spec, stages })
    }

    /// One complete smoothing iteration.
    pub fn sweep(&self, a: &SparseMatrix, x: &mut [f64], b: &[f64], stats: &mut SweepStats) {
        for stage in &self.stages {
            if stage.jacobi {
                let snapshot = x.to_vec();
                for block in &stage.blocks {
                    relax_block(a, block, x, b, self.spec.omega, Some(&snapshot), stats);
                }
            } else {
                for block in &stage.blocks {
                    relax_block(a, block, x, b, self.spec.omega, None, stats);
                }
            }
        }
    }

    pub fn smooth(
        &self,
        a: &SparseMatrix,
        x: &mut [f64],
        b: &[f64],
        steps: usize,
        stats: &mut SweepStats,
    ) {
        for _ in 0..steps {
            self.sweep(a, x, b, stats);
        }
    }
}
