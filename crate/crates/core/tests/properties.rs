//! Structural invariants of the grid, operator, smoothers, transfers and
//! cycles, checked on randomized inputs.

use std::collections::HashSet;

use nalgebra::DVector;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stokes_mg::lfa::{
    self, alias_sign, interpolation_symbol, restriction_symbol, TwoGridLfa, HARMONICS,
};
use stokes_mg::smoothers::{enumerate_blocks, Smoother, SweepStats};
use stokes_mg::sparse::{self, SparseMatrix};
use stokes_mg::transfer::{coarse_matrix, TransferPair};
use stokes_mg::*;

const ALL_KINDS: [SmootherKind; 7] = [
    SmootherKind::Vanka,
    SmootherKind::TriadGS,
    SmootherKind::TriadJacobi,
    SmootherKind::TriadModified,
    SmootherKind::TriadPlusCorner,
    SmootherKind::TriadPlusBoundary,
    SmootherKind::TriadPlusVankaBoundary,
];

fn bc_strategy() -> impl Strategy<Value = BoundaryKind> {
    prop_oneof![Just(BoundaryKind::Periodic), Just(BoundaryKind::Dirichlet)]
}

fn family_strategy() -> impl Strategy<Value = Family> {
    prop_oneof![Just(Family::U), Just(Family::V), Just(Family::P)]
}

fn random_vec(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

fn reduced(n: usize, bc: BoundaryKind) -> (DofLayout, SparseMatrix) {
    let mesh = MeshSpec::new(n, bc).unwrap();
    let (layout, a, _) =
        StokesProblem::homogeneous(mesh, WallTreatment::default()).reduced_system();
    (layout, a)
}

fn rel_diff(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    let den: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt().max(1e-300);
    num / den
}

fn valid_specs(bc: BoundaryKind) -> Vec<SmootherSpec> {
    let mesh = MeshSpec::new(4, bc).unwrap();
    ALL_KINDS
        .iter()
        .map(|&k| {
            SmootherSpec::new(
                k,
                if k == SmootherKind::TriadJacobi {
                    0.45
                } else {
                    0.7
                },
            )
        })
        .filter(|s| s.validate(mesh).is_ok())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn index_map_round_trips(
        n in prop_oneof![Just(2usize), Just(4), Just(8), Just(16)],
        bc in bc_strategy(),
        family in family_strategy(),
        a in 0usize..17,
        b in 0usize..17,
    ) {
        let mesh = MeshSpec::new(n, bc).unwrap();
        let (nx, ny) = mesh.extent(family);
        let (i, j) = (a % nx, b % ny);
        let idx = mesh.dof_index(family, i as isize, j as isize).unwrap();
        prop_assert_eq!(mesh.locate(idx), Some((family, i, j)));
    }

    #[test]
    fn periodic_indices_wrap(
        n in prop_oneof![Just(2usize), Just(4), Just(8)],
        family in family_strategy(),
        i in -20isize..20,
        j in -20isize..20,
        k in -2isize..3,
    ) {
        let mesh = MeshSpec::new(n, BoundaryKind::Periodic).unwrap();
        let shift = k * n as isize;
        prop_assert_eq!(
            mesh.dof_index(family, i + shift, j - shift).unwrap(),
            mesh.dof_index(family, i, j).unwrap()
        );
    }

    #[test]
    fn matrix_free_equals_assembled(
        n in prop_oneof![Just(2usize), Just(4), Just(8)],
        bc in bc_strategy(),
        seed in any::<u64>(),
    ) {
        let mesh = MeshSpec::new(n, bc).unwrap();
        let problem = StokesProblem::homogeneous(mesh, WallTreatment::default());
        let mut x = StaggeredField::from_vec(mesh, &random_vec(mesh.total_dofs(), seed));
        BoundaryData::zero(mesh).embed(&mut x);
        let free = problem.apply(&x).unwrap().to_vec();
        let assembled = sparse::matvec(&problem.assemble(), &x.to_vec());
        prop_assert!(rel_diff(&free, &assembled) <= 1e-13);
    }

    #[test]
    fn exact_solution_is_fixed_by_every_smoother(bc in bc_strategy(), seed in any::<u64>()) {
        let (layout, a) = reduced(4, bc);
        let mut xs = random_vec(layout.n_free(), seed);
        multigrid::project_out_null(&layout, &mut xs);
        let b = sparse::matvec(&a, &xs);
        for spec in valid_specs(bc) {
            let smoother = Smoother::new(spec, &layout, &a).unwrap();
            let mut x = xs.clone();
            smoother.sweep(&a, &mut x, &b, &mut SweepStats::default());
            prop_assert!(rel_diff(&x, &xs) <= 1e-13, "{:?}", spec.kind);
        }
    }

    #[test]
    fn sweeps_are_linear_in_the_error(
        bc in bc_strategy(),
        seed in any::<u64>(),
        alpha in -2.0f64..2.0,
        beta in -2.0f64..2.0,
    ) {
        let (layout, a) = reduced(4, bc);
        let x = random_vec(layout.n_free(), seed);
        let y = random_vec(layout.n_free(), seed ^ 0x9e37_79b9);
        let zero = vec![0.0; x.len()];
        for spec in valid_specs(bc) {
            let smoother = Smoother::new(spec, &layout, &a).unwrap();
            let run = |v: &[f64]| {
                let mut v = v.to_vec();
                smoother.sweep(&a, &mut v, &zero, &mut SweepStats::default());
                v
            };
            let mixed: Vec<f64> = x.iter().zip(&y).map(|(p, q)| alpha * p + beta * q).collect();
            let (sx, sy) = (run(&x), run(&y));
            let combined: Vec<f64> = sx.iter().zip(&sy).map(|(p, q)| alpha * p + beta * q).collect();
            let got = run(&mixed);
            let scale = combined.iter().chain(&got).fold(1.0f64, |m, v| m.max(v.abs()));
            let err = got.iter().zip(&combined).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
            prop_assert!(err <= 1e-12 * scale, "{:?}", spec.kind);
        }
    }

    #[test]
    fn two_grid_error_propagation_is_linear(
        bc in bc_strategy(),
        seed in any::<u64>(),
        alpha in -2.0f64..2.0,
        beta in -2.0f64..2.0,
    ) {
        let mesh = MeshSpec::new(8, bc).unwrap();
        let spec = CycleSpec::two_grid(SmootherSpec::new(SmootherKind::TriadGS, 0.7), 2, 2);
        let hier = Hierarchy::new(&StokesProblem::homogeneous(mesh, spec.wall), spec).unwrap();
        let len = hier.fine().layout.n_free();
        let zero = vec![0.0; len];
        let run = |v: &[f64]| {
            let mut v = v.to_vec();
            hier.cycle(0, &mut v, &zero, &mut SweepStats::default());
            v
        };
        let x = random_vec(len, seed);
        let y = random_vec(len, seed.wrapping_add(1));
        let mixed: Vec<f64> = x.iter().zip(&y).map(|(p, q)| alpha * p + beta * q).collect();
        let (ex, ey) = (run(&x), run(&y));
        let combined: Vec<f64> = ex.iter().zip(&ey).map(|(p, q)| alpha * p + beta * q).collect();
        let got = run(&mixed);
        let err = got.iter().zip(&combined).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
        prop_assert!(err <= 1e-10);
    }

    #[test]
    fn galerkin_operator_matches_triple_application(bc in bc_strategy(), seed in any::<u64>()) {
        let (_, a) = reduced(4, bc);
        let pair = TransferPair::new(MeshSpec::new(4, bc).unwrap(), Interpolation::Bilinear).unwrap();
        let ac = coarse_matrix(CoarseOperator::Galerkin, &a, &pair, WallTreatment::default());
        let xc = random_vec(pair.coarse.n_free(), seed);
        let chained = sparse::matvec(
            &pair.restriction,
            &sparse::matvec(&a, &sparse::matvec(&pair.interpolation, &xc)),
        );
        prop_assert!(rel_diff(&sparse::matvec(&ac, &xc), &chained) <= 1e-13);
    }

    #[test]
    fn two_grid_symbol_is_symmetric_in_frequency(t1 in -1.5f64..1.5, t2 in -1.5f64..1.5) {
        prop_assume!(t1.abs() + t2.abs() > 0.05);
        for (kind, omega) in [
            (SmootherKind::Vanka, 0.7),
            (SmootherKind::TriadGS, 0.7),
            (SmootherKind::TriadJacobi, 0.45),
        ] {
            let cfg = TwoGridLfa::new(SmootherSpec::new(kind, omega), 2, 2);
            let a = lfa::spectral_radius(&cfg.symbol((t1, t2)).unwrap());
            let b = lfa::spectral_radius(&cfg.symbol((-t1, -t2)).unwrap());
            prop_assert!((a - b).abs() <= 1e-9, "{kind:?}: {a} vs {b}");
        }
    }
}

#[test]
fn triad_blocks_do_not_overlap_within_a_phase() {
    for bc in [BoundaryKind::Periodic, BoundaryKind::Dirichlet] {
        for n in [2, 4, 8] {
            let mesh = MeshSpec::new(n, bc).unwrap();
            for kind in [
                SmootherKind::TriadGS,
                SmootherKind::TriadJacobi,
                SmootherKind::TriadModified,
            ] {
                let spec = SmootherSpec::new(kind, 0.7);
                for phase in 0..kind.phase_count() {
                    let mut seen = HashSet::new();
                    for block in enumerate_blocks(&spec, mesh, phase).unwrap() {
                        for d in block.dofs {
                            assert!(seen.insert(d), "{kind:?} phase {phase} repeats {d:?}");
                        }
                    }
                }
            }
        }
    }
}

/// Free indices each block writes and the free indices its equations read.
fn footprint(
    layout: &DofLayout,
    a: &SparseMatrix,
    dofs: &[(Family, usize, usize)],
) -> (HashSet<usize>, HashSet<usize>) {
    let writes: HashSet<usize> = dofs
        .iter()
        .filter_map(|&(f, i, j)| layout.free_at(f, i as isize, j as isize))
        .collect();
    let reads = writes
        .iter()
        .flat_map(|&r| a.row(r).col_indices().to_vec())
        .collect();
    (writes, reads)
}

fn assert_coloring_valid(spec: SmootherSpec, bc: BoundaryKind, n: usize) {
    let mesh = MeshSpec::new(n, bc).unwrap();
    let (layout, a) = reduced(n, bc);
    for phase in 0..spec.kind.phase_count() {
        let blocks = enumerate_blocks(&spec, mesh, phase).unwrap();
        for color in 0..spec.ordering.colors() {
            let members: Vec<_> = blocks
                .iter()
                .filter(|b| spec.ordering.color_of(b.cell.0, b.cell.1) == color)
                .map(|b| footprint(&layout, &a, &b.dofs))
                .collect();
            for (x, (wx, _)) in members.iter().enumerate() {
                for (y, (wy, ry)) in members.iter().enumerate() {
                    if x != y {
                        assert!(
                            wx.is_disjoint(wy) && wx.is_disjoint(ry),
                            "{:?} {:?} n={n} {bc:?}: color {color} conflict",
                            spec.kind,
                            spec.ordering
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn colorings_have_no_read_write_conflicts() {
    let rb = |k| SmootherSpec::new(k, 0.7).with_ordering(Ordering::RedBlack);
    for n in [4, 8] {
        for spec in [
            rb(SmootherKind::TriadGS),
            rb(SmootherKind::TriadModified),
            SmootherSpec::new(SmootherKind::Vanka, 0.7).with_ordering(Ordering::FiveColor),
            SmootherSpec::new(SmootherKind::Vanka, 0.7).with_ordering(Ordering::NineColor),
        ] {
            assert_coloring_valid(spec, BoundaryKind::Dirichlet, n);
        }
        assert_coloring_valid(rb(SmootherKind::TriadGS), BoundaryKind::Periodic, n);
        assert_coloring_valid(rb(SmootherKind::TriadModified), BoundaryKind::Periodic, n);
    }
}

fn fourier_vector(layout: &DofLayout, theta: (f64, f64), amp: [C; 3]) -> Vec<C> {
    let h = layout.mesh.h();
    (0..layout.n_free())
        .map(|k| {
            let (f, i, j) = layout.mesh.locate(layout.full_index(k)).unwrap();
            let (x, y) = layout.mesh.position(f, i, j);
            amp[f.ordinal()] * C::from_polar(1.0, (theta.0 * x + theta.1 * y) / h)
        })
        .collect()
}

fn complex_matvec(m: &SparseMatrix, z: &[C]) -> Vec<C> {
    let re: Vec<f64> = z.iter().map(|c| c.re).collect();
    let im: Vec<f64> = z.iter().map(|c| c.im).collect();
    sparse::matvec(m, &re)
        .into_iter()
        .zip(sparse::matvec(m, &im))
        .map(|(a, b)| C::new(a, b))
        .collect()
}

fn max_gap(a: &[C], b: &[C]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

#[test]
fn transfer_symbols_match_dense_transfers_on_fourier_modes() {
    let n = 8;
    let amp = [C::new(0.6, 0.1), C::new(-0.3, 0.8), C::new(0.2, -0.5)];
    let b = DVector::from_row_slice(&amp);
    for kind in [Interpolation::Bilinear, Interpolation::AdjointRestriction] {
        let pair =
            TransferPair::new(MeshSpec::new(n, BoundaryKind::Periodic).unwrap(), kind).unwrap();
        let step = 2.0 * std::f64::consts::PI / n as f64;
        for k1 in -1i32..=2 {
            for k2 in -1i32..=2 {
                let theta = (k1 as f64 * step, k2 as f64 * step);
                // The coarse mode has frequency 2θ in coarse cell units.
                let coarse_theta = (2.0 * theta.0, 2.0 * theta.1);
                let rs = restriction_symbol(theta);
                let ps = interpolation_symbol(kind, theta);
                // Restriction: each harmonic lands on the coarse mode at 2θ.
                for (a, &xi) in HARMONICS.iter().enumerate() {
                    let t = (
                        theta.0 + std::f64::consts::PI * xi.0 as f64,
                        theta.1 + std::f64::consts::PI * xi.1 as f64,
                    );
                    let got =
                        complex_matvec(&pair.restriction, &fourier_vector(&pair.fine, t, amp));
                    let coeff = rs.view((0, 3 * a), (3, 3)) * &b;
                    let want =
                        fourier_vector(&pair.coarse, coarse_theta, [coeff[0], coeff[1], coeff[2]]);
                    assert!(max_gap(&got, &want) <= 1e-10, "R {kind:?} {theta:?} {xi:?}");
                }
                // Interpolation: a coarse mode spreads over the four harmonics.
                let got = complex_matvec(
                    &pair.interpolation,
                    &fourier_vector(&pair.coarse, coarse_theta, amp),
                );
                let mut want = vec![C::new(0.0, 0.0); got.len()];
                for (a, &xi) in HARMONICS.iter().enumerate() {
                    let t = (
                        theta.0 + std::f64::consts::PI * xi.0 as f64,
                        theta.1 + std::f64::consts::PI * xi.1 as f64,
                    );
                    let coeff = ps.view((3 * a, 0), (3, 3)) * &b;
                    let part = fourier_vector(&pair.fine, t, [coeff[0], coeff[1], coeff[2]]);
                    for (w, p) in want.iter_mut().zip(part) {
                        *w += p;
                    }
                }
                assert!(max_gap(&got, &want) <= 1e-10, "P {kind:?} {theta:?}");
            }
        }
    }
    // The alias signs are those of the coarse lattices.
    assert_eq!(alias_sign(Family::P, (1, 1)), 1.0);
    assert_eq!(alias_sign(Family::U, (1, 0)), 1.0);
    assert_eq!(alias_sign(Family::U, (0, 1)), -1.0);
}

#[test]
fn smoothers_damp_oscillatory_modes() {
    for (kind, omega) in [
        (SmootherKind::Vanka, 0.7),
        (SmootherKind::TriadGS, 0.7),
        (SmootherKind::TriadJacobi, 0.45),
    ] {
        let mu = lfa::smoothing_factor(&SmootherSpec::new(kind, omega), 1, 1.0 / 32.0, 16).unwrap();
        assert!(mu < 1.0, "{kind:?}: {mu}");
    }
}

#[test]
fn fixed_seed_gives_identical_reports() {
    let mesh = MeshSpec::new(8, BoundaryKind::Periodic).unwrap();
    let spec = CycleSpec::two_grid(SmootherSpec::new(SmootherKind::Vanka, 0.7), 2, 2);
    let run = || {
        multigrid::measure_convergence(
            mesh,
            spec,
            Protocol::Homogeneous {
                cycles: 6,
                seed: 11,
            },
        )
        .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    assert!(a
        .factors
        .iter()
        .zip(&b.factors)
        .all(|(x, y)| x.to_bits() == y.to_bits()));
}
