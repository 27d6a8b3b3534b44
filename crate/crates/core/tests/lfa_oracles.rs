//! Fourier symbols checked against the assembled operator and real sweeps on
//! periodic meshes.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64 as C;
use stokes_mg::lfa::{smoother_symbol, OperatorStencil};
use stokes_mg::smoothers::{Smoother, SweepStats};
use stokes_mg::*;

struct Setup {
    layout: DofLayout,
    matrix: stokes_mg::sparse::SparseMatrix,
    h: f64,
}

fn periodic(n: usize) -> Setup {
    let mesh = MeshSpec::new(n, BoundaryKind::Periodic).unwrap();
    let (layout, matrix, _) =
        StokesProblem::homogeneous(mesh, WallTreatment::default()).reduced_system();
    Setup {
        layout,
        matrix,
        h: mesh.h(),
    }
}

/// Location `(family, i, j)` and Fourier phase of each free dof.
fn mode(s: &Setup, theta: (f64, f64), amp: &Vector3<C>) -> Vec<C> {
    (0..s.layout.n_free())
        .map(|k| {
            let (f, i, j) = s.layout.mesh.locate(s.layout.full_index(k)).unwrap();
            let (x, y) = s.layout.mesh.position(f, i, j);
            amp[f.ordinal()] * C::from_polar(1.0, (theta.0 * x + theta.1 * y) / s.h)
        })
        .collect()
}

/// Applies a real linear map to a complex vector part by part.
fn apply(z: &[C], mut f: impl FnMut(&mut Vec<f64>)) -> Vec<C> {
    let mut re: Vec<f64> = z.iter().map(|c| c.re).collect();
    let mut im: Vec<f64> = z.iter().map(|c| c.im).collect();
    f(&mut re);
    f(&mut im);
    re.into_iter().zip(im).map(|(a, b)| C::new(a, b)).collect()
}

fn grid_frequencies(n: usize) -> Vec<(f64, f64)> {
    let t = |k: i64| 2.0 * std::f64::consts::PI * k as f64 / n as f64;
    let mut out = Vec::new();
    for k1 in -(n as i64) / 2 + 1..=n as i64 / 2 {
        for k2 in -(n as i64) / 2 + 1..=n as i64 / 2 {
            if (k1, k2) != (0, 0) {
                out.push((t(k1), t(k2)));
            }
        }
    }
    out
}

const AMP: [(f64, f64); 3] = [(0.7, -0.2), (-0.4, 0.9), (0.3, 0.5)];

fn amp() -> Vector3<C> {
    Vector3::from_iterator(AMP.iter().map(|&(a, b)| C::new(a, b)))
}

fn max_mismatch(got: &[C], want: &[C], keep: impl Fn(usize) -> bool) -> f64 {
    got.iter()
        .zip(want)
        .enumerate()
        .filter(|(k, _)| keep(*k))
        .map(|(_, (a, b))| (a - b).norm())
        .fold(0.0, f64::max)
}

#[test]
fn operator_symbol_matches_assembled_matrix() {
    let s = periodic(8);
    let op = OperatorStencil::stokes(s.h);
    let scale = 1.0 / (s.h * s.h);
    for theta in grid_frequencies(8) {
        let a = amp();
        let x = mode(&s, theta, &a);
        let got = apply(&x, |v| *v = stokes_mg::sparse::matvec(&s.matrix, v));
        let want = mode(&s, theta, &(op.symbol(theta) * a));
        assert!(
            max_mismatch(&got, &want, |_| true) <= 1e-10 * scale,
            "theta {theta:?}"
        );
    }
}

fn sweep_of(s: &Setup, spec: SmootherSpec) -> impl Fn(&mut Vec<f64>) + '_ {
    let smoother = Smoother::new(spec, &s.layout, &s.matrix).unwrap();
    move |v: &mut Vec<f64>| {
        let b = vec![0.0; v.len()];
        smoother.sweep(&s.matrix, v, &b, &mut SweepStats::default());
    }
}

fn symbol_of(s: &Setup, spec: &SmootherSpec, theta: (f64, f64)) -> Matrix3<C> {
    smoother_symbol(&OperatorStencil::stokes(s.h), spec, theta).unwrap()
}

#[test]
fn jacobi_symbol_matches_dense_sweep() {
    let s = periodic(8);
    let spec = SmootherSpec::new(SmootherKind::TriadJacobi, 0.45);
    let sweep = sweep_of(&s, spec);
    for theta in grid_frequencies(8) {
        let x = mode(&s, theta, &amp());
        let got = apply(&x, &sweep);
        let want = mode(&s, theta, &(symbol_of(&s, &spec, theta) * amp()));
        assert!(
            max_mismatch(&got, &want, |_| true) <= 1e-8,
            "theta {theta:?}"
        );
    }
}

/// Gauss-Seidel sweeps on a finite periodic mesh read wrong-generation values
/// across the seam: stale ones where the sweep starts and fresh ones where
/// it ends. The discrepancy decays geometrically along the sweep, so only
/// cells at least `margin` cells past the start and `tail` cells before the
/// end are compared, relative to the largest expected amplitude.
fn check_gauss_seidel(spec: SmootherSpec, n: usize, margin: usize, tail: usize, tol: f64) {
    let s = periodic(n);
    let sweep = sweep_of(&s, spec);
    let forward = spec.ordering == Ordering::Forward;
    let keep = |k: usize| {
        let (_, i, j) = s.layout.mesh.locate(s.layout.full_index(k)).unwrap();
        let (i, j) = if forward {
            (i, j)
        } else {
            (n - 1 - i, n - 1 - j)
        };
        (margin..n - tail).contains(&i) && (margin..n - tail).contains(&j)
    };
    let mut worst = 0.0f64;
    let all = grid_frequencies(n);
    for theta in all.iter().copied().step_by(all.len() / 60) {
        let x = mode(&s, theta, &amp());
        let got = apply(&x, &sweep);
        let want = mode(&s, theta, &(symbol_of(&s, &spec, theta) * amp()));
        let scale = want.iter().map(|z| z.norm()).fold(1.0, f64::max);
        worst = worst.max(max_mismatch(&got, &want, keep) / scale);
    }
    assert!(worst <= tol, "worst mismatch {worst:e}");
}

#[test]
fn triad_gauss_seidel_symbol_matches_interior_of_sweep() {
    let spec = SmootherSpec::new(SmootherKind::TriadGS, 0.7);
    check_gauss_seidel(spec, 64, 40, 2, 1e-8);
    check_gauss_seidel(spec.with_ordering(Ordering::Backward), 64, 40, 2, 1e-8);
}

#[test]
fn vanka_symbol_matches_interior_of_sweep() {
    check_gauss_seidel(
        SmootherSpec::new(SmootherKind::Vanka, 0.7),
        128,
        48,
        32,
        1e-8,
    );
}

#[test]
fn modified_triad_symbol_matches_interior_of_sweep() {
    let spec = SmootherSpec::new(SmootherKind::TriadModified, 0.7);
    check_gauss_seidel(spec, 128, 48, 32, 1e-8);
}
