//! Arithmetic and communication cost of one smoothing sweep, from closed
//! forms and from instrumented sweeps.

use crate::grid::{BoundaryKind, DofLayout, MeshSpec};
use crate::operator::{StokesProblem, WallTreatment};
use crate::smoothers::{Ordering, Smoother, SmootherKind, SmootherSpec, SweepStats};
use crate::{Error, Result};

/// Which block-count polynomial scales the arithmetic constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum BlockCount {
    /// `c · N²`.
    #[default]
    Square,
    /// `c · (N−1)²`.
    InteriorSquare,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CostReport {
    pub kind: SmootherKind,
    /// Blocks per direction.
    pub n: u64,
    pub arithmetic_ops: u64,
    pub communication_steps: u64,
    pub colors: u64,
    pub sync_phases: u64,
}

/// Per-block constants `(arithmetic, communication)`.
fn constants(kind: SmootherKind) -> Result<(u64, u64)> {
    match kind {
        SmootherKind::Vanka => Ok((139, 60)),
        SmootherKind::TriadGS | SmootherKind::TriadJacobi => Ok((44, 12)),
        SmootherKind::TriadModified => Ok((176, 48)),
        other => Err(Error::InvalidSmoother(format!(
            "{other:?} has no closed-form cost"
        ))),
    }
}

/// Colors of the parallel schedule: two for triads, five or nine for Vanka.
pub fn parallel_colors(spec: &SmootherSpec) -> u64 {
    match (spec.kind, spec.ordering) {
        (SmootherKind::Vanka, Ordering::NineColor) => 9,
        (SmootherKind::Vanka, _) => 5,
        _ => 2,
    }
}

pub fn predict_costs(spec: &SmootherSpec, n: u64, count: BlockCount) -> Result<CostReport> {
    if n == 0 {
        return Err(Error::InvalidMesh("block count must be positive".into()));
    }
    let (arith, comm) = constants(spec.kind)?;
    let blocks = match count {
        BlockCount::Square => n * n,
        BlockCount::InteriorSquare => (n - 1) * (n - 1),
    };
    let colors = parallel_colors(spec);
    Ok(CostReport {
        kind: spec.kind,
        n,
        arithmetic_ops: arith * blocks,
        communication_steps: comm * n * n,
        colors,
        sync_phases: colors * spec.kind.phase_count() as u64,
    })
}

/// Counts one sweep on a periodic `n × n` mesh, where every block is
/// complete. Each local solve is charged its elimination flops plus the
/// residual rows, each read of a dof outside the block one communication step.
pub fn count_ops(spec: &SmootherSpec, n: usize) -> Result<CostReport> {
    let mesh = MeshSpec::new(n, BoundaryKind::Periodic)?;
    let (layout, a, _): (DofLayout, _, _) =
        StokesProblem::homogeneous(mesh, WallTreatment::default()).reduced_system();
    let smoother = Smoother::new(*spec, &layout, &a)?;
    let mut x = vec![0.0; layout.n_free()];
    let b = vec![0.0; layout.n_free()];
    let mut stats = SweepStats::default();
    smoother.sweep(&a, &mut x, &b, &mut stats);
    let colors = parallel_colors(spec);
    Ok(CostReport {
        kind: spec.kind,
        n: n as u64,
        arithmetic_ops: stats.flops,
        communication_steps: stats.off_block_reads,
        colors,
        sync_phases: colors * spec.kind.phase_count() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: SmootherKind) -> SmootherSpec {
        SmootherSpec::new(kind, 0.7)
    }

    #[test]
    fn closed_forms() {
        let v = predict_costs(&spec(SmootherKind::Vanka), 32, BlockCount::Square).unwrap();
        assert_eq!((v.arithmetic_ops, v.communication_steps), (142_336, 61_440));
        let t = predict_costs(&spec(SmootherKind::TriadGS), 1, BlockCount::Square).unwrap();
        assert_eq!((t.arithmetic_ops, t.communication_steps), (44, 12));
        for n in [1, 16, 32] {
            let t = predict_costs(&spec(SmootherKind::TriadGS), n, BlockCount::Square).unwrap();
            let m =
                predict_costs(&spec(SmootherKind::TriadModified), n, BlockCount::Square).unwrap();
            assert_eq!(m.arithmetic_ops, 4 * t.arithmetic_ops);
            assert_eq!(m.communication_steps, 4 * t.communication_steps);
            assert_eq!(m.arithmetic_ops, 176 * n * n);
        }
        let m = predict_costs(
            &spec(SmootherKind::TriadModified),
            32,
            BlockCount::InteriorSquare,
        )
        .unwrap();
        assert_eq!(m.arithmetic_ops, 176 * 31 * 31);
    }

    #[test]
    fn colors_and_phases() {
        let t = predict_costs(&spec(SmootherKind::TriadGS), 4, BlockCount::Square).unwrap();
        assert_eq!((t.colors, t.sync_phases), (2, 2));
        let m = predict_costs(&spec(SmootherKind::TriadModified), 4, BlockCount::Square).unwrap();
        assert_eq!((m.colors, m.sync_phases), (2, 8));
        let v9 = spec(SmootherKind::Vanka).with_ordering(Ordering::NineColor);
        assert_eq!(
            predict_costs(&v9, 4, BlockCount::Square)
                .unwrap()
                .sync_phases,
            9
        );
        assert_eq!(
            predict_costs(&spec(SmootherKind::Vanka), 4, BlockCount::Square)
                .unwrap()
                .colors,
            5
        );
    }

    #[test]
    fn rejected_inputs() {
        assert!(predict_costs(&spec(SmootherKind::TriadGS), 0, BlockCount::Square).is_err());
        assert!(
            predict_costs(&spec(SmootherKind::TriadPlusCorner), 4, BlockCount::Square).is_err()
        );
    }

    #[test]
    fn instrumented_counts_scale_with_block_count() {
        let a = count_ops(&spec(SmootherKind::TriadGS), 8).unwrap();
        let b = count_ops(&spec(SmootherKind::TriadGS), 16).unwrap();
        assert_eq!(b.arithmetic_ops, 4 * a.arithmetic_ops);
        assert_eq!(b.communication_steps, 4 * a.communication_steps);
        // Twelve outside reads per triad block.
        assert_eq!(a.communication_steps, 12 * 64);
    }
}
