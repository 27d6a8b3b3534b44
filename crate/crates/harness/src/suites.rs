//! Named experiment suites.

use stokes_mg::*;

use crate::config::{default_omega, Experiment, RhsChoice};
use crate::{HarnessError, Result};

#[derive(Debug, Clone, Copy)]
pub struct SuiteInfo {
    pub name: &'static str,
    pub summary: &'static str,
}

pub const SUITES: &[SuiteInfo] = &[
    SuiteInfo {
        name: "paper-lfa-sweep",
        summary: "LFA two-grid factor against omega for Vanka, triad GS and triad Jacobi",
    },
    SuiteInfo {
        name: "paper-periodic-twogrid",
        summary: "periodic two-grid factors of the three basic smoothers, with LFA",
    },
    SuiteInfo {
        name: "paper-dirichlet-twogrid",
        summary: "Dirichlet two-grid factors of Vanka and backward triad GS",
    },
    SuiteInfo {
        name: "paper-table-1",
        summary: "Dirichlet triad GS: forward, backward, red-black, backward with nu = 6",
    },
    SuiteInfo {
        name: "paper-fig11-hybrids",
        summary: "triad smoothers augmented at the corner, the walls, or with Vanka wall blocks",
    },
    SuiteInfo {
        name: "paper-modified-triad",
        summary: "Dirichlet two-grid factor of the four-phase triad smoother next to Vanka",
    },
    SuiteInfo {
        name: "colored",
        summary: "red-black triads and five- and nine-color Vanka on both boundary kinds",
    },
    SuiteInfo {
        name: "costs",
        summary: "closed-form and instrumented arithmetic and communication counts",
    },
    SuiteInfo {
        name: "paper-curves",
        summary: "manufactured-solution V-cycle curves and the Dirichlet triad Jacobi run",
    },
    SuiteInfo {
        name: "properties",
        summary: "symbol oracles and solver invariants",
    },
];

/// Everything a suite asks for.
#[derive(Debug, Clone, Default)]
pub struct SuitePlan {
    pub experiments: Vec<Experiment>,
    pub costs: bool,
    pub properties: bool,
}

impl SuitePlan {
    pub fn merge(&mut self, other: SuitePlan) {
        self.experiments.extend(other.experiments);
        self.costs |= other.costs;
        self.properties |= other.properties;
    }
}

fn spec(kind: SmootherKind) -> SmootherSpec {
    SmootherSpec::new(kind, default_omega(kind))
}

fn ordered(kind: SmootherKind, ordering: Ordering) -> SmootherSpec {
    spec(kind).with_ordering(ordering)
}

const P: BoundaryKind = BoundaryKind::Periodic;
const D: BoundaryKind = BoundaryKind::Dirichlet;

/// Omega grid of the LFA sweep: 0.30 to 1.00 in steps of 0.05.
pub fn lfa_omegas() -> Vec<f64> {
    (6..=20).map(|k| k as f64 * 0.05).collect()
}

fn basic_three() -> [(&'static str, SmootherSpec); 3] {
    [
        ("vanka", spec(SmootherKind::Vanka)),
        ("triad-gs", spec(SmootherKind::TriadGS)),
        ("triad-jacobi", spec(SmootherKind::TriadJacobi)),
    ]
}

fn curve(id: &str, bc: BoundaryKind, s: SmootherSpec) -> Experiment {
    let mut e = Experiment::baseline(id, bc, s);
    e.cycle.kind = CycleKind::V;
    e.rhs = match bc {
        BoundaryKind::Periodic => RhsChoice::PeriodicManufactured,
        BoundaryKind::Dirichlet => RhsChoice::DirichletManufactured,
    };
    e.cycles = 10;
    e
}

pub fn plan(name: &str) -> Result<SuitePlan> {
    let mut plan = SuitePlan::default();
    let ex = &mut plan.experiments;
    match name {
        "paper-lfa-sweep" => {
            for (id, s) in basic_three() {
                let mut e = Experiment::baseline(&format!("lfa-{id}"), P, s).with_lfa(lfa_omegas());
                e.measure = false;
                ex.push(e);
            }
        }
        "paper-periodic-twogrid" => {
            for (id, s) in basic_three() {
                ex.push(
                    Experiment::baseline(&format!("periodic-{id}"), P, s).with_lfa(vec![s.omega]),
                );
            }
        }
        "paper-dirichlet-twogrid" => {
            ex.push(Experiment::baseline(
                "dirichlet-vanka",
                D,
                spec(SmootherKind::Vanka),
            ));
            ex.push(Experiment::baseline(
                "dirichlet-triad-gs-backward",
                D,
                ordered(SmootherKind::TriadGS, Ordering::Backward),
            ));
        }
        "paper-table-1" => {
            let gs = |o| ordered(SmootherKind::TriadGS, o);
            ex.push(Experiment::baseline("gs-forward", D, gs(Ordering::Forward)));
            ex.push(Experiment::baseline(
                "gs-backward",
                D,
                gs(Ordering::Backward),
            ));
            ex.push(Experiment::baseline(
                "gs-red-black",
                D,
                gs(Ordering::RedBlack),
            ));
            ex.push(Experiment::baseline("gs-backward-nu6", D, gs(Ordering::Backward)).with_nu(6));
        }
        "paper-fig11-hybrids" => {
            ex.push(Experiment::baseline(
                "hybrid-corner",
                D,
                spec(SmootherKind::TriadPlusCorner),
            ));
            ex.push(Experiment::baseline(
                "hybrid-boundary",
                D,
                spec(SmootherKind::TriadPlusBoundary),
            ));
            ex.push(Experiment::baseline(
                "hybrid-vanka-boundary",
                D,
                spec(SmootherKind::TriadPlusVankaBoundary),
            ));
        }
        "paper-modified-triad" => {
            ex.push(Experiment::baseline(
                "modified-triad",
                D,
                spec(SmootherKind::TriadModified),
            ));
            ex.push(Experiment::baseline(
                "modified-reference-vanka",
                D,
                spec(SmootherKind::Vanka),
            ));
        }
        "colored" => {
            ex.push(Experiment::baseline(
                "periodic-triad-red-black",
                P,
                ordered(SmootherKind::TriadGS, Ordering::RedBlack),
            ));
            ex.push(Experiment::baseline(
                "periodic-vanka-5color",
                P,
                ordered(SmootherKind::Vanka, Ordering::FiveColor),
            ));
            ex.push(Experiment::baseline(
                "dirichlet-modified-red-black",
                D,
                ordered(SmootherKind::TriadModified, Ordering::RedBlack),
            ));
            ex.push(Experiment::baseline(
                "dirichlet-vanka-9color",
                D,
                ordered(SmootherKind::Vanka, Ordering::NineColor),
            ));
            ex.push(Experiment::baseline(
                "dirichlet-vanka-5color",
                D,
                ordered(SmootherKind::Vanka, Ordering::FiveColor),
            ));
        }
        "costs" => plan.costs = true,
        "paper-curves" => {
            for (id, s) in basic_three() {
                ex.push(curve(&format!("curve-periodic-{id}"), P, s));
            }
            ex.push(curve("curve-dirichlet-vanka", D, spec(SmootherKind::Vanka)));
            ex.push(curve(
                "curve-dirichlet-modified-triad",
                D,
                spec(SmootherKind::TriadModified),
            ));
            ex.push(curve(
                "curve-dirichlet-triad-gs",
                D,
                spec(SmootherKind::TriadGS),
            ));
            ex.push(curve(
                "curve-dirichlet-triad-gs-backward",
                D,
                ordered(SmootherKind::TriadGS, Ordering::Backward),
            ));
            ex.push(curve(
                "curve-dirichlet-triad-jacobi",
                D,
                spec(SmootherKind::TriadJacobi),
            ));
            let mut jacobi =
                Experiment::baseline("dirichlet-triad-jacobi", D, spec(SmootherKind::TriadJacobi));
            jacobi.cycles = 100;
            ex.push(jacobi);
        }
        "properties" => plan.properties = true,
        other => return Err(HarnessError::UnknownSuite(other.to_string())),
    }
    Ok(plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_listed_suite_resolves_and_validates() {
        for s in SUITES {
            let p = plan(s.name).unwrap();
            for e in &p.experiments {
                e.validate().unwrap_or_else(|m| panic!("{}: {m}", e.id));
            }
            assert!(
                !p.experiments.is_empty() || p.costs || p.properties,
                "{}",
                s.name
            );
        }
    }

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(matches!(plan("nope"), Err(HarnessError::UnknownSuite(_))));
    }

    #[test]
    fn experiment_ids_are_unique() {
        let mut all = SuitePlan::default();
        for s in SUITES {
            all.merge(plan(s.name).unwrap());
        }
        let mut ids: Vec<_> = all.experiments.iter().map(|e| e.id.clone()).collect();
        let len = ids.len();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), len);
    }

    #[test]
    fn omega_grid_contains_the_chosen_weights() {
        let w = lfa_omegas();
        for target in [0.45, 0.7] {
            assert!(w.iter().any(|x| (x - target).abs() < 1e-12));
        }
    }
}
