//! Local Fourier analysis of the smoothers and two-grid cycles on the
//! infinite staggered grid.
//!
//! A Fourier mode of frequency `θ` takes the value `a_f·exp(iθ·x/h)` at a dof
//! of family `f` located at `x`, so every symbol below is built from physical
//! positions. Overlapping block smoothers are analysed with a generalized
//! ansatz: a dof that belongs to `T` blocks carries a separate amplitude after
//! each of its `T` updates, and one block solve links those amplitudes.

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64 as C;

use crate::grid::Family;
use crate::smoothers::{Direction, SmootherKind, SmootherSpec};
use crate::transfer::{interpolation_stencil, restriction_stencil, CoarseOperator, Interpolation};
use crate::Result;

/// One operator coefficient: the row dof of family `row` in cell `0`
/// couples to the dof of family `col` in cell `(dx, dy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilEntry {
    pub row: Family,
    pub col: Family,
    pub dx: i64,
    pub dy: i64,
    pub value: f64,
}

/// Constant-coefficient operator on the infinite staggered grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorStencil {
    pub h: f64,
    pub entries: Vec<StencilEntry>,
}

fn pos(f: Family, dx: i64, dy: i64) -> (f64, f64) {
    let (sx, sy) = f.stagger();
    (dx as f64 + sx, dy as f64 + sy)
}

fn phase(theta: (f64, f64), x: (f64, f64)) -> C {
    C::from_polar(1.0, theta.0 * x.0 + theta.1 * x.1)
}

impl OperatorStencil {
    /// The staggered Stokes operator with mesh width `h`: five-point
    /// Laplacians, backward-difference gradient, forward-difference
    /// divergence in the continuity rows.
    pub fn stokes(h: f64) -> Self {
        let mut e = Vec::new();
        let lap = 1.0 / (h * h);
        for f in [Family::U, Family::V] {
            e.push(StencilEntry {
                row: f,
                col: f,
                dx: 0,
                dy: 0,
                value: 4.0 * lap,
            });
            for (dx, dy) in [(-1, 0), (1, 0), (0, -1), (0, 1)] {
                e.push(StencilEntry {
                    row: f,
                    col: f,
                    dx,
                    dy,
                    value: -lap,
                });
            }
        }
        let g = 1.0 / h;
        e.push(StencilEntry {
            row: Family::U,
            col: Family::P,
            dx: 0,
            dy: 0,
            value: g,
        });
        e.push(StencilEntry {
            row: Family::U,
            col: Family::P,
            dx: -1,
            dy: 0,
            value: -g,
        });
        e.push(StencilEntry {
            row: Family::V,
            col: Family::P,
            dx: 0,
            dy: 0,
            value: g,
        });
        e.push(StencilEntry {
            row: Family::V,
            col: Family::P,
            dx: 0,
            dy: -1,
            value: -g,
        });
        e.push(StencilEntry {
            row: Family::P,
            col: Family::U,
            dx: 1,
            dy: 0,
            value: g,
        });
        e.push(StencilEntry {
            row: Family::P,
            col: Family::U,
            dx: 0,
            dy: 0,
            value: -g,
        });
        e.push(StencilEntry {
            row: Family::P,
            col: Family::V,
            dx: 0,
            dy: 1,
            value: g,
        });
        e.push(StencilEntry {
            row: Family::P,
            col: Family::V,
            dx: 0,
            dy: 0,
            value: -g,
        });
        Self { h, entries: e }
    }

    pub fn row(&self, f: Family) -> impl Iterator<Item = &StencilEntry> {
        self.entries.iter().filter(move |e| e.row == f)
    }

    /// The 3×3 symbol, ordered `(u, v, p)`.
    pub fn symbol(&self, theta: (f64, f64)) -> Matrix3<C> {
        let mut m = Matrix3::zeros();
        for e in &self.entries {
            let d = pos(e.col, e.dx, e.dy);
            let o = pos(e.row, 0, 0);
            m[(e.row.ordinal(), e.col.ordinal())] += e.value * phase(theta, (d.0 - o.0, d.1 - o.1));
        }
        m
    }
}

/// Closed form of the operator symbol, used as an independent check.
pub fn stokes_symbol(h: f64, theta: (f64, f64)) -> Matrix3<C> {
    let a = C::from((4.0 - 2.0 * theta.0.cos() - 2.0 * theta.1.cos()) / (h * h));
    let g1 = C::new(0.0, 2.0 * (theta.0 / 2.0).sin() / h);
    let g2 = C::new(0.0, 2.0 * (theta.1 / 2.0).sin() / h);
    let z = C::from(0.0);
    Matrix3::new(a, z, g1, z, a, g2, g1, g2, z)
}

/// Unknowns of one block relative to the block's cell.
pub type BlockPattern = Vec<(Family, i64, i64)>;

pub fn vanka_pattern() -> BlockPattern {
    vec![
        (Family::U, 0, 0),
        (Family::U, 1, 0),
        (Family::V, 0, 0),
        (Family::V, 0, 1),
        (Family::P, 0, 0),
    ]
}

pub fn triad_pattern(u_right: bool, v_top: bool) -> BlockPattern {
    vec![
        (Family::U, u_right as i64, 0),
        (Family::V, 0, v_top as i64),
        (Family::P, 0, 0),
    ]
}

/// How a sweep visits the blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Update {
    GaussSeidel(Direction),
    Jacobi,
}

fn precedes(update: Update, cx: i64, cy: i64) -> bool {
    match update {
        Update::Jacobi => false,
        Update::GaussSeidel(d) => d.precedes(cx, cy),
    }
}

/// Symbol of one sweep of damped block relaxation with the given pattern.
pub fn block_smoother_symbol(
    op: &OperatorStencil,
    pattern: &BlockPattern,
    update: Update,
    omega: f64,
    theta: (f64, f64),
) -> Matrix3<C> {
    // offsets of each family inside the block
    let offsets = |f: Family| -> Vec<(i64, i64)> {
        pattern
            .iter()
            .filter(|p| p.0 == f)
            .map(|p| (p.1, p.2))
            .collect()
    };
    let fam_offsets: Vec<Vec<(i64, i64)>> = Family::ALL.iter().map(|&f| offsets(f)).collect();
    // number of blocks holding dof (f, cell) processed before the block at 0
    let updates_before = |f: Family, cx: i64, cy: i64| -> usize {
        fam_offsets[f.ordinal()]
            .iter()
            .filter(|&&(ox, oy)| precedes(update, cx - ox, cy - oy))
            .count()
    };
    let t_max: Vec<usize> = fam_offsets.iter().map(|o| o.len()).collect();
    // unknown slot of amplitude (f, t) for t >= 1
    let base: Vec<usize> = {
        let mut b = vec![0; 3];
        for k in 1..3 {
            b[k] = b[k - 1] + t_max[k - 1];
        }
        b
    };
    let slot = |f: Family, t: usize| base[f.ordinal()] + t - 1;
    let k = pattern.len();
    let mut lhs = DMatrix::<C>::zeros(k, k);
    let mut rhs = DMatrix::<C>::zeros(k, 3);
    // place coefficient `c` on amplitude (f, t): unknowns to the left,
    // original amplitudes to the right
    let mut put = |row: usize, f: Family, t: usize, c: C, on_left: bool| {
        if t == 0 {
            let c = if on_left { -c } else { c };
            rhs[(row, f.ordinal())] += c;
        } else {
            let c = if on_left { c } else { -c };
            lhs[(row, slot(f, t))] += c;
        }
    };
    for (r, &(rf, rx, ry)) in pattern.iter().enumerate() {
        for e in op.row(rf) {
            let (cx, cy) = (rx + e.dx, ry + e.dy);
            let ph = phase(theta, pos(e.col, cx, cy)) * e.value;
            let t = updates_before(e.col, cx, cy);
            let in_block = pattern
                .iter()
                .any(|&(f, x, y)| f == e.col && x == cx && y == cy);
            if in_block {
                // A_BB x_new = (1 - ω) A_BB x_old - ω A_off x_off
                put(r, e.col, t + 1, ph, true);
                put(r, e.col, t, ph * (1.0 - omega), false);
            } else {
                put(r, e.col, t, -ph * omega, false);
            }
        }
    }
    let z = lhs
        .lu()
        .solve(&rhs)
        .unwrap_or_else(|| DMatrix::from_element(k, 3, C::new(f64::NAN, f64::NAN)));
    let mut s = Matrix3::zeros();
    for f in Family::ALL {
        let (o, t) = (f.ordinal(), t_max[f.ordinal()]);
        if t == 0 {
            s[(o, o)] = C::from(1.0);
        } else {
            for c in 0..3 {
                s[(o, c)] = z[(slot(f, t), c)];
            }
        }
    }
    s
}

/// Smoothing symbol of a smoother on the periodic grid. Colored orderings and
/// boundary augmentations have no single-frequency symbol and are rejected.
pub fn smoother_symbol(
    op: &OperatorStencil,
    spec: &SmootherSpec,
    theta: (f64, f64),
) -> Result<Matrix3<C>> {
    use crate::smoothers::Ordering;
    let direction = match spec.ordering {
        Ordering::Forward => spec.within_color,
        Ordering::Backward => spec.within_color.flip(),
        _ => {
            return Err(crate::Error::InvalidSmoother(format!(
                "{:?} ordering has no single-frequency symbol",
                spec.ordering
            )))
        }
    };
    let gs = |d: Direction| Update::GaussSeidel(d);
    Ok(match spec.kind {
        SmootherKind::Vanka => {
            block_smoother_symbol(op, &vanka_pattern(), gs(direction), spec.omega, theta)
        }
        SmootherKind::TriadGS => block_smoother_symbol(
            op,
            &triad_pattern(false, false),
            gs(direction),
            spec.omega,
            theta,
        ),
        SmootherKind::TriadJacobi => block_smoother_symbol(
            op,
            &triad_pattern(false, false),
            Update::Jacobi,
            spec.omega,
            theta,
        ),
        SmootherKind::TriadModified => {
            let mut s = Matrix3::identity();
            for ph in spec.modified_phases {
                let d = match spec.ordering {
                    Ordering::Backward => ph.direction.flip(),
                    _ => ph.direction,
                };
                let p = block_smoother_symbol(
                    op,
                    &triad_pattern(ph.u_right, ph.v_top),
                    gs(d),
                    spec.omega,
                    theta,
                );
                s = p * s;
            }
            s
        }
        k => {
            return Err(crate::Error::InvalidSmoother(format!(
                "{k:?} modifies boundaries and has no periodic symbol"
            )))
        }
    })
}

/// Harmonic shifts in the order `(0,0), (1,1), (1,0), (0,1)`.
pub const HARMONICS: [(u8, u8); 4] = [(0, 0), (1, 1), (1, 0), (0, 1)];

fn shifted(theta: (f64, f64), xi: (u8, u8)) -> (f64, f64) {
    use std::f64::consts::PI;
    (theta.0 + PI * xi.0 as f64, theta.1 + PI * xi.1 as f64)
}

/// Sign of the coarse lattice of family `f` under harmonic `xi`.
pub fn alias_sign(f: Family, xi: (u8, u8)) -> f64 {
    let e = match f {
        Family::U => xi.1,
        Family::V => xi.0,
        Family::P => xi.0 + xi.1,
    };
    if e % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Restriction symbol, `3 × 12`.
pub fn restriction_symbol(theta: (f64, f64)) -> DMatrix<C> {
    let mut r = DMatrix::zeros(3, 12);
    for (a, &xi) in HARMONICS.iter().enumerate() {
        let t = shifted(theta, xi);
        for f in Family::ALL {
            let s: C = restriction_stencil(f)
                .iter()
                .map(|&(dx, dy, w)| w * phase(t, (dx as f64 / 2.0, dy as f64 / 2.0)))
                .sum();
            r[(f.ordinal(), 3 * a + f.ordinal())] = s * alias_sign(f, xi);
        }
    }
    r
}

/// Interpolation symbol, `12 × 3`.
pub fn interpolation_symbol(kind: Interpolation, theta: (f64, f64)) -> DMatrix<C> {
    let mut p = DMatrix::zeros(12, 3);
    for (a, &xi) in HARMONICS.iter().enumerate() {
        let t = shifted(theta, xi);
        for f in Family::ALL {
            let s: C = interpolation_stencil(kind, f)
                .iter()
                .map(|&(dx, dy, w)| w * phase(t, (-dx as f64 / 2.0, -dy as f64 / 2.0)))
                .sum();
            p[(3 * a + f.ordinal(), f.ordinal())] = s * 0.25 * alias_sign(f, xi);
        }
    }
    p
}

fn block_diag(blocks: impl Fn((f64, f64)) -> Matrix3<C>, theta: (f64, f64)) -> DMatrix<C> {
    let mut m = DMatrix::zeros(12, 12);
    for (a, &xi) in HARMONICS.iter().enumerate() {
        let b = blocks(shifted(theta, xi));
        m.view_mut((3 * a, 3 * a), (3, 3)).copy_from(&b);
    }
    m
}

/// Configuration of a two-grid analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoGridLfa {
    pub smoother: SmootherSpec,
    pub nu1: usize,
    pub nu2: usize,
    pub interpolation: Interpolation,
    pub coarse: CoarseOperator,
    pub h: f64,
}

impl TwoGridLfa {
    pub fn new(smoother: SmootherSpec, nu1: usize, nu2: usize) -> Self {
        Self {
            smoother,
            nu1,
            nu2,
            interpolation: Interpolation::default(),
            coarse: CoarseOperator::default(),
            h: 1.0 / 32.0,
        }
    }

    /// Smoother symbol on the four harmonics, `12 × 12`.
    pub fn smoother_block(&self, op: &OperatorStencil, theta: (f64, f64)) -> Result<DMatrix<C>> {
        let mut m = DMatrix::zeros(12, 12);
        for (a, &xi) in HARMONICS.iter().enumerate() {
            let b = smoother_symbol(op, &self.smoother, shifted(theta, xi))?;
            m.view_mut((3 * a, 3 * a), (3, 3)).copy_from(&b);
        }
        Ok(m)
    }

    /// Two-grid error-propagation symbol at a low frequency `theta`.
    pub fn symbol(&self, theta: (f64, f64)) -> Result<DMatrix<C>> {
        let op = OperatorStencil::stokes(self.h);
        let lh = block_diag(|t| op.symbol(t), theta);
        let r = restriction_symbol(theta);
        let p = interpolation_symbol(self.interpolation, theta);
        let lc: DMatrix<C> = match self.coarse {
            CoarseOperator::Galerkin => &r * &lh * &p,
            CoarseOperator::Rediscretized => {
                let coarse = OperatorStencil::stokes(2.0 * self.h);
                let s = coarse.symbol((2.0 * theta.0, 2.0 * theta.1));
                DMatrix::from_fn(3, 3, |i, j| s[(i, j)])
            }
        };
        let lc_inv = lc
            .try_inverse()
            .ok_or(crate::Error::SingularCoarse { rank: 0, dim: 3 })?;
        let cgc = DMatrix::<C>::identity(12, 12) - &p * lc_inv * &r * &lh;
        let s = self.smoother_block(&op, theta)?;
        let mut e = cgc;
        for _ in 0..self.nu1 {
            e = &e * &s;
        }
        for _ in 0..self.nu2 {
            e = &s * &e;
        }
        Ok(e)
    }
}

pub fn spectral_radius(m: &DMatrix<C>) -> f64 {
    // The unbounded Schur iteration can cycle on nonnormal input, so cap it
    // and fall back to the norm of a high power.
    if let Some(schur) = nalgebra::linalg::Schur::try_new(m.clone(), 1e-14, 10_000) {
        if let Some(ev) = schur.eigenvalues() {
            return ev.iter().fold(0.0f64, |a, z| a.max(z.norm()));
        }
    }
    power_radius(m)
}

/// Gelfand estimate `‖M^k‖^(1/k)` with repeated squaring up to `k = 2^40`.
fn power_radius(m: &DMatrix<C>) -> f64 {
    let mut p = m.clone();
    let mut log_scale = 0.0f64;
    let mut k = 1.0f64;
    for _ in 0..40 {
        let norm = p.norm();
        if norm == 0.0 {
            return 0.0;
        }
        p /= C::new(norm, 0.0);
        log_scale += norm.ln() / k;
        p = &p * &p;
        k *= 2.0;
    }
    (log_scale + p.norm().ln() / k).exp()
}

/// Sample points of the low-frequency box: an `m × m` cell-centred grid of
/// `[-π/2, π/2)²`, skipping points within `eps` of the origin.
pub fn low_frequency_samples(m: usize, eps: f64) -> Vec<(f64, f64)> {
    use std::f64::consts::PI;
    let step = PI / m as f64;
    let coord = |k: usize| -PI / 2.0 + (k as f64 + 0.5) * step;
    (0..m)
        .flat_map(|b| (0..m).map(move |a| (coord(a), coord(b))))
        .filter(|&(x, y)| (x * x + y * y).sqrt() >= eps)
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LfaSample {
    pub theta: (f64, f64),
    pub rho: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LfaSweep {
    pub samples: Vec<LfaSample>,
    /// Largest spectral radius over the samples.
    pub rho: f64,
}

/// Two-grid convergence factor estimate over a sampled low-frequency box.
pub fn two_grid_factor(cfg: &TwoGridLfa, m: usize, eps: f64) -> Result<LfaSweep> {
    let mut samples = Vec::new();
    let mut rho = 0.0f64;
    for theta in low_frequency_samples(m, eps) {
        let r = spectral_radius(&cfg.symbol(theta)?);
        rho = rho.max(r);
        samples.push(LfaSample { theta, rho: r });
    }
    Ok(LfaSweep { samples, rho })
}

/// Smoothing factor: largest spectral radius of the smoother restricted to
/// the high harmonics (an ideal coarse correction removes the low one).
pub fn smoothing_factor(smoother: &SmootherSpec, nu: usize, h: f64, m: usize) -> Result<f64> {
    let op = OperatorStencil::stokes(h);
    let cfg = TwoGridLfa::new(*smoother, nu, 0);
    let mut q = DMatrix::<C>::identity(12, 12);
    for d in 0..3 {
        q[(d, d)] = C::from(0.0);
    }
    let mut best = 0.0f64;
    for theta in low_frequency_samples(m, 0.0) {
        let s = cfg.smoother_block(&op, theta)?;
        let mut e = q.clone();
        for _ in 0..nu {
            e = &e * &s;
        }
        best = best.max(spectral_radius(&e).powf(1.0 / nu as f64));
    }
    Ok(best)
}
