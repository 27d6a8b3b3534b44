//! Oracle and invariant checks of the `properties` suite. Each check reports
//! its worst observed deviation next to the tolerance it must meet.

use std::collections::HashSet;

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use stokes_mg::lfa::{smoother_symbol, OperatorStencil};
use stokes_mg::multigrid::measure_convergence;
use stokes_mg::smoothers::{enumerate_blocks, Smoother, SweepStats};
use stokes_mg::sparse::{self, SparseMatrix};
use stokes_mg::transfer::TransferPair;
use stokes_mg::*;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyRow {
    pub check: String,
    pub worst: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl PropertyRow {
    fn new(check: &str, worst: f64, tolerance: f64) -> Self {
        Self {
            check: check.to_string(),
            worst,
            tolerance,
            passed: worst <= tolerance,
        }
    }
}

const KINDS: [SmootherKind; 7] = [
    SmootherKind::Vanka,
    SmootherKind::TriadGS,
    SmootherKind::TriadJacobi,
    SmootherKind::TriadModified,
    SmootherKind::TriadPlusCorner,
    SmootherKind::TriadPlusBoundary,
    SmootherKind::TriadPlusVankaBoundary,
];

const ORDERINGS: [Ordering; 5] = [
    Ordering::Forward,
    Ordering::Backward,
    Ordering::RedBlack,
    Ordering::FiveColor,
    Ordering::NineColor,
];

/// Every smoother and ordering combination accepted on `mesh`.
fn valid_specs(mesh: MeshSpec) -> Vec<SmootherSpec> {
    KINDS
        .iter()
        .flat_map(|&k| {
            ORDERINGS
                .iter()
                .map(move |&o| SmootherSpec::new(k, 0.7).with_ordering(o))
        })
        .filter(|s| s.validate(mesh).is_ok())
        .collect()
}

struct System {
    layout: DofLayout,
    matrix: SparseMatrix,
    h: f64,
}

fn system(n: usize, bc: BoundaryKind) -> System {
    let mesh = MeshSpec::new(n, bc).expect("valid mesh");
    let (layout, matrix, _) =
        StokesProblem::homogeneous(mesh, WallTreatment::default()).reduced_system();
    System {
        layout,
        matrix,
        h: mesh.h(),
    }
}

fn random_vec(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let den = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-300);
    num / den
}

const AMP: [(f64, f64); 3] = [(0.7, -0.2), (-0.4, 0.9), (0.3, 0.5)];

fn amp() -> Vector3<C> {
    Vector3::from_iterator(AMP.iter().map(|&(a, b)| C::new(a, b)))
}

/// The Fourier mode with amplitudes `a` sampled at every free dof.
fn mode(s: &System, theta: (f64, f64), a: &Vector3<C>) -> Vec<C> {
    (0..s.layout.n_free())
        .map(|k| {
            let (f, i, j) = s
                .layout
                .mesh
                .locate(s.layout.full_index(k))
                .expect("free dof");
            let (x, y) = s.layout.mesh.position(f, i, j);
            a[f.ordinal()] * C::from_polar(1.0, (theta.0 * x + theta.1 * y) / s.h)
        })
        .collect()
}

fn apply_complex(z: &[C], f: impl Fn(&mut Vec<f64>)) -> Vec<C> {
    let mut re: Vec<f64> = z.iter().map(|c| c.re).collect();
    let mut im: Vec<f64> = z.iter().map(|c| c.im).collect();
    f(&mut re);
    f(&mut im);
    re.into_iter().zip(im).map(|(a, b)| C::new(a, b)).collect()
}

fn grid_frequencies(n: usize) -> Vec<(f64, f64)> {
    let t = |k: i64| 2.0 * std::f64::consts::PI * k as f64 / n as f64;
    let half = n as i64 / 2;
    (-half + 1..=half)
        .flat_map(|k1| (-half + 1..=half).map(move |k2| (k1, k2)))
        .filter(|&k| k != (0, 0))
        .map(|(k1, k2)| (t(k1), t(k2)))
        .collect()
}

fn max_gap(got: &[C], want: &[C], keep: impl Fn(usize) -> bool) -> f64 {
    got.iter()
        .zip(want)
        .enumerate()
        .filter(|(k, _)| keep(*k))
        .map(|(_, (a, b))| (a - b).norm())
        .fold(0.0, f64::max)
}

fn symbol(s: &System, spec: &SmootherSpec, theta: (f64, f64)) -> Matrix3<C> {
    smoother_symbol(&OperatorStencil::stokes(s.h), spec, theta).expect("symbol of a valid smoother")
}

fn sweep_fn<'a>(s: &'a System, spec: SmootherSpec) -> impl Fn(&mut Vec<f64>) + 'a {
    let smoother = Smoother::new(spec, &s.layout, &s.matrix).expect("valid smoother");
    move |v: &mut Vec<f64>| {
        let b = vec![0.0; v.len()];
        smoother.sweep(&s.matrix, v, &b, &mut SweepStats::default());
    }
}

/// Operator symbol against the assembled matrix on every frequency of a
/// periodic `n = 8` mesh, measured in units of `1/h²`.
pub fn operator_symbol_oracle() -> PropertyRow {
    let s = system(8, BoundaryKind::Periodic);
    let op = OperatorStencil::stokes(s.h);
    let worst = grid_frequencies(8)
        .into_iter()
        .map(|theta| {
            let x = mode(&s, theta, &amp());
            let got = apply_complex(&x, |v| *v = sparse::matvec(&s.matrix, v));
            let want = mode(&s, theta, &(op.symbol(theta) * amp()));
            max_gap(&got, &want, |_| true) * s.h * s.h
        })
        .fold(0.0, f64::max);
    PropertyRow::new("operator-symbol-n8", worst, 1e-10)
}

/// Triad Jacobi is order free, so its symbol is exact on the `n = 8` mesh.
pub fn jacobi_symbol_oracle() -> PropertyRow {
    let s = system(8, BoundaryKind::Periodic);
    let spec = SmootherSpec::new(SmootherKind::TriadJacobi, 0.45);
    let sweep = sweep_fn(&s, spec);
    let worst = grid_frequencies(8)
        .into_iter()
        .map(|theta| {
            let got = apply_complex(&mode(&s, theta, &amp()), &sweep);
            let want = mode(&s, theta, &(symbol(&s, &spec, theta) * amp()));
            max_gap(&got, &want, |_| true)
        })
        .fold(0.0, f64::max);
    PropertyRow::new("triad-jacobi-symbol-n8", worst, 1e-8)
}

/// Gauss-Seidel symbol against a real sweep. On a finite periodic mesh the
/// sweep reads stale values across the seam where it starts and fresh ones
/// where it ends, so only the window `margin..n-tail` along the sweep is
/// compared, relative to the largest expected amplitude.
pub fn gauss_seidel_symbol_oracle(
    name: &str,
    spec: SmootherSpec,
    n: usize,
    margin: usize,
    tail: usize,
) -> PropertyRow {
    let s = system(n, BoundaryKind::Periodic);
    let sweep = sweep_fn(&s, spec);
    let backward = spec.ordering == Ordering::Backward;
    let keep = |k: usize| {
        let (_, i, j) = s
            .layout
            .mesh
            .locate(s.layout.full_index(k))
            .expect("free dof");
        let (i, j) = if backward {
            (n - 1 - i, n - 1 - j)
        } else {
            (i, j)
        };
        (margin..n - tail).contains(&i) && (margin..n - tail).contains(&j)
    };
    let all = grid_frequencies(n);
    let worst = all
        .iter()
        .copied()
        .step_by(all.len() / 24)
        .map(|theta| {
            let got = apply_complex(&mode(&s, theta, &amp()), &sweep);
            let want = mode(&s, theta, &(symbol(&s, &spec, theta) * amp()));
            let scale = want.iter().map(|z| z.norm()).fold(1.0, f64::max);
            max_gap(&got, &want, keep) / scale
        })
        .fold(0.0, f64::max);
    PropertyRow::new(name, worst, 1e-8)
}

/// An exact solution is left unchanged by every smoother.
pub fn fixed_point() -> PropertyRow {
    let mut worst = 0.0f64;
    for bc in [BoundaryKind::Periodic, BoundaryKind::Dirichlet] {
        let s = system(8, bc);
        let mut x = random_vec(s.layout.n_free(), 3);
        stokes_mg::multigrid::project_out_null(&s.layout, &mut x);
        let b = sparse::matvec(&s.matrix, &x);
        for spec in valid_specs(s.layout.mesh) {
            let smoother = Smoother::new(spec, &s.layout, &s.matrix).expect("valid smoother");
            let mut y = x.clone();
            smoother.sweep(&s.matrix, &mut y, &b, &mut SweepStats::default());
            worst = worst.max(rel_diff(&y, &x));
        }
    }
    PropertyRow::new("exact-solution-fixed", worst, 1e-10)
}

/// With a zero right-hand side a sweep is a linear map.
pub fn linearity() -> PropertyRow {
    let mut worst = 0.0f64;
    for bc in [BoundaryKind::Periodic, BoundaryKind::Dirichlet] {
        let s = system(8, bc);
        let len = s.layout.n_free();
        let (x, y) = (random_vec(len, 5), random_vec(len, 6));
        for spec in valid_specs(s.layout.mesh) {
            let sweep = sweep_fn(&s, spec);
            let mut combo: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - 2.5 * b).collect();
            let (mut sx, mut sy) = (x.clone(), y.clone());
            sweep(&mut combo);
            sweep(&mut sx);
            sweep(&mut sy);
            let want: Vec<f64> = sx.iter().zip(&sy).map(|(a, b)| a - 2.5 * b).collect();
            worst = worst.max(rel_diff(&combo, &want));
        }
    }
    PropertyRow::new("sweep-linearity", worst, 1e-10)
}

/// Counts dofs shared by two triad blocks of the same phase.
pub fn triad_non_overlap() -> PropertyRow {
    let mut repeats = 0usize;
    for bc in [BoundaryKind::Periodic, BoundaryKind::Dirichlet] {
        for n in [4, 8] {
            let mesh = MeshSpec::new(n, bc).expect("valid mesh");
            for kind in [
                SmootherKind::TriadGS,
                SmootherKind::TriadJacobi,
                SmootherKind::TriadModified,
            ] {
                let spec = SmootherSpec::new(kind, 0.7);
                for phase in 0..kind.phase_count() {
                    let mut seen = HashSet::new();
                    for block in enumerate_blocks(&spec, mesh, phase).expect("valid phase") {
                        repeats += block.dofs.iter().filter(|d| !seen.insert(**d)).count();
                    }
                }
            }
        }
    }
    PropertyRow::new("triad-blocks-disjoint", repeats as f64, 0.0)
}

/// Counts pairs of same-color blocks where one writes what the other
/// touches. Zero conflicts means each color can be relaxed in parallel.
pub fn coloring_validity() -> PropertyRow {
    let mut conflicts = 0usize;
    for (bc, n) in [
        (BoundaryKind::Dirichlet, 4),
        (BoundaryKind::Dirichlet, 8),
        (BoundaryKind::Periodic, 8),
    ] {
        let s = system(n, bc);
        let mesh = s.layout.mesh;
        let specs = valid_specs(mesh)
            .into_iter()
            .filter(|sp| sp.ordering.colors() > 1)
            .filter(|sp| {
                matches!(
                    sp.kind,
                    SmootherKind::Vanka | SmootherKind::TriadGS | SmootherKind::TriadModified
                )
            })
            .filter(|sp| bc == BoundaryKind::Dirichlet || sp.kind != SmootherKind::Vanka);
        for spec in specs {
            for phase in 0..spec.kind.phase_count() {
                let blocks = enumerate_blocks(&spec, mesh, phase).expect("valid phase");
                for color in 0..spec.ordering.colors() {
                    let feet: Vec<(HashSet<usize>, HashSet<usize>)> = blocks
                        .iter()
                        .filter(|b| spec.ordering.color_of(b.cell.0, b.cell.1) == color)
                        .map(|b| {
                            let writes: HashSet<usize> = b
                                .dofs
                                .iter()
                                .filter_map(|&(f, i, j)| {
                                    s.layout.free_at(f, i as isize, j as isize)
                                })
                                .collect();
                            let reads = writes
                                .iter()
                                .flat_map(|&r| s.matrix.row(r).col_indices().to_vec())
                                .collect();
                            (writes, reads)
                        })
                        .collect();
                    for (x, (wx, _)) in feet.iter().enumerate() {
                        for (y, (wy, ry)) in feet.iter().enumerate() {
                            if x != y && !(wx.is_disjoint(wy) && wx.is_disjoint(ry)) {
                                conflicts += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    PropertyRow::new("coloring-conflict-free", conflicts as f64, 0.0)
}

/// Restriction and interpolation map constants to the same constants.
pub fn transfer_constants() -> PropertyRow {
    let mut worst = 0.0f64;
    for kind in [Interpolation::Bilinear, Interpolation::AdjointRestriction] {
        let mesh = MeshSpec::new(8, BoundaryKind::Periodic).expect("valid mesh");
        let t = TransferPair::new(mesh, kind).expect("coarsenable mesh");
        let value = |f: Family| [1.0, -2.0, 0.5][f.ordinal()];
        let fine = StaggeredField::from_fn(mesh, |f, _, _| value(f));
        let coarse = StaggeredField::from_fn(t.coarse.mesh, |f, _, _| value(f));
        for (field, want) in [
            (t.restrict(&fine), &coarse),
            (t.interpolate(&coarse), &fine),
        ] {
            for f in Family::ALL {
                let gap = field
                    .family(f)
                    .iter()
                    .zip(want.family(f))
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                worst = worst.max(gap);
            }
        }
    }
    PropertyRow::new("transfer-preserves-constants", worst, 1e-12)
}

/// The same seed gives bit-identical convergence reports.
pub fn determinism() -> PropertyRow {
    let mesh = MeshSpec::new(8, BoundaryKind::Dirichlet).expect("valid mesh");
    let spec = CycleSpec::two_grid(SmootherSpec::new(SmootherKind::Vanka, 0.7), 2, 2)
        .for_boundary(BoundaryKind::Dirichlet);
    let protocol = Protocol::Homogeneous {
        cycles: 5,
        seed: 11,
    };
    let a = measure_convergence(mesh, spec, protocol);
    let b = measure_convergence(mesh, spec, protocol);
    let same = matches!((&a, &b), (Ok(x), Ok(y)) if x == y);
    PropertyRow::new("fixed-seed-determinism", if same { 0.0 } else { 1.0 }, 0.0)
}

/// The full suite, in a fixed order.
pub fn run_all() -> Vec<PropertyRow> {
    let gs = SmootherSpec::new(SmootherKind::TriadGS, 0.7);
    vec![
        operator_symbol_oracle(),
        jacobi_symbol_oracle(),
        gauss_seidel_symbol_oracle("triad-gs-forward-symbol-window", gs, 64, 40, 2),
        gauss_seidel_symbol_oracle(
            "triad-gs-backward-symbol-window",
            gs.with_ordering(Ordering::Backward),
            64,
            40,
            2,
        ),
        gauss_seidel_symbol_oracle(
            "vanka-symbol-window",
            SmootherSpec::new(SmootherKind::Vanka, 0.7),
            128,
            48,
            32,
        ),
        gauss_seidel_symbol_oracle(
            "modified-triad-symbol-window",
            SmootherSpec::new(SmootherKind::TriadModified, 0.7),
            128,
            48,
            32,
        ),
        fixed_point(),
        linearity(),
        triad_non_overlap(),
        coloring_validity(),
        transfer_constants(),
        determinism(),
    ]
}
