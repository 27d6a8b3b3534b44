//! Experiment configuration: a flat, versioned TOML schema resolved into
//! solver types.

use serde::Deserialize;
use stokes_mg::operator::RhsKind;
use stokes_mg::smoothers::{Direction, TriadPhase};
use stokes_mg::*;

use crate::{HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bc {
    Periodic,
    Dirichlet,
}

impl From<Bc> for BoundaryKind {
    fn from(b: Bc) -> Self {
        match b {
            Bc::Periodic => BoundaryKind::Periodic,
            Bc::Dirichlet => BoundaryKind::Dirichlet,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsChoice {
    Homogeneous,
    PeriodicManufactured,
    DirichletManufactured,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindName {
    Vanka,
    TriadGs,
    TriadJacobi,
    TriadModified,
    TriadPlusCorner,
    TriadPlusBoundary,
    TriadPlusVankaBoundary,
}

impl From<KindName> for SmootherKind {
    fn from(k: KindName) -> Self {
        match k {
            KindName::Vanka => SmootherKind::Vanka,
            KindName::TriadGs => SmootherKind::TriadGS,
            KindName::TriadJacobi => SmootherKind::TriadJacobi,
            KindName::TriadModified => SmootherKind::TriadModified,
            KindName::TriadPlusCorner => SmootherKind::TriadPlusCorner,
            KindName::TriadPlusBoundary => SmootherKind::TriadPlusBoundary,
            KindName::TriadPlusVankaBoundary => SmootherKind::TriadPlusVankaBoundary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderingName {
    Forward,
    Backward,
    RedBlack,
    FiveColor,
    NineColor,
}

impl From<OrderingName> for Ordering {
    fn from(o: OrderingName) -> Self {
        match o {
            OrderingName::Forward => Ordering::Forward,
            OrderingName::Backward => Ordering::Backward,
            OrderingName::RedBlack => Ordering::RedBlack,
            OrderingName::FiveColor => Ordering::FiveColor,
            OrderingName::NineColor => Ordering::NineColor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Corner {
    BottomLeft,
    TopRight,
    BottomRight,
    TopLeft,
}

impl From<Corner> for Direction {
    fn from(c: Corner) -> Self {
        match c {
            Corner::BottomLeft => Direction::Forward,
            Corner::TopRight => Direction::Backward,
            Corner::BottomRight => Direction::FromBottomRight,
            Corner::TopLeft => Direction::FromTopLeft,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CycleName {
    TwoGrid,
    V,
    W,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InterpolationName {
    Bilinear,
    AdjointRestriction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoarseName {
    Galerkin,
    Rediscretized,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WallName {
    Reflect,
    Injection,
}

/// The file format. Every key except `schema` is optional.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub schema: u32,
    pub id: Option<String>,
    pub n: Option<usize>,
    pub bc: Option<Bc>,
    pub rhs: Option<RhsChoice>,
    pub smoother: Option<KindName>,
    pub omega: Option<f64>,
    pub ordering: Option<OrderingName>,
    pub within: Option<Corner>,
    /// Start corners of the four modified-triad phases.
    pub phase_starts: Option<Vec<Corner>>,
    pub nu1: Option<usize>,
    pub nu2: Option<usize>,
    pub cycle: Option<CycleName>,
    pub coarsest_n: Option<usize>,
    pub cycles: Option<usize>,
    pub seed: Option<u64>,
    pub interpolation: Option<InterpolationName>,
    pub coarse: Option<CoarseName>,
    pub wall: Option<WallName>,
    pub measure: Option<bool>,
    pub lfa: Option<bool>,
    pub lfa_omegas: Option<Vec<f64>>,
    pub sample_density: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LfaRequest {
    pub omegas: Vec<f64>,
    pub sample_density: usize,
}

/// One fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub id: String,
    pub mesh: MeshSpec,
    pub rhs: RhsChoice,
    pub cycle: CycleSpec,
    pub cycles: usize,
    pub seed: u64,
    /// Run the cycle and record convergence.
    pub measure: bool,
    pub lfa: Option<LfaRequest>,
}

pub const DEFAULT_N: usize = 32;
pub const DEFAULT_CYCLES: usize = 20;
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_SAMPLE_DENSITY: usize = 32;

/// Relaxation weight used for each smoother unless overridden.
pub fn default_omega(kind: SmootherKind) -> f64 {
    match kind {
        SmootherKind::TriadJacobi => 0.45,
        _ => 0.7,
    }
}

impl Experiment {
    /// Two-grid, ν1 = ν2 = 2, homogeneous problem on the default mesh.
    pub fn baseline(id: &str, bc: BoundaryKind, smoother: SmootherSpec) -> Self {
        let mesh = MeshSpec::new(DEFAULT_N, bc).expect("valid default mesh");
        Self {
            id: id.to_string(),
            mesh,
            rhs: RhsChoice::Homogeneous,
            cycle: CycleSpec::two_grid(smoother, 2, 2).for_boundary(bc),
            cycles: DEFAULT_CYCLES,
            seed: DEFAULT_SEED,
            measure: true,
            lfa: None,
        }
    }

    pub fn with_nu(mut self, nu: usize) -> Self {
        self.cycle.nu1 = nu;
        self.cycle.nu2 = nu;
        self
    }

    pub fn with_lfa(mut self, omegas: Vec<f64>) -> Self {
        self.lfa = Some(LfaRequest {
            omegas,
            sample_density: DEFAULT_SAMPLE_DENSITY,
        });
        self
    }

    pub fn protocol(&self) -> Protocol {
        match self.rhs {
            RhsChoice::Homogeneous => Protocol::Homogeneous {
                cycles: self.cycles,
                seed: self.seed,
            },
            _ => Protocol::Manufactured {
                cycles: self.cycles,
            },
        }
    }

    pub fn rhs_kind(&self) -> RhsKind {
        match self.rhs {
            RhsChoice::Homogeneous => RhsKind::Homogeneous,
            RhsChoice::PeriodicManufactured => RhsKind::PeriodicManufactured,
            RhsChoice::DirichletManufactured => RhsKind::DirichletManufactured,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        let n = self.mesh.n;
        if n < 4 || !n.is_multiple_of(2) {
            return Err(format!("n = {n} must be even and at least 4"));
        }
        if self.cycle.kind != CycleKind::TwoGrid {
            let c = self.cycle.coarsest_n;
            if c < 2 || c > n / 2 || !n.is_multiple_of(c) || !(n / c).is_power_of_two() {
                return Err(format!("n = {n} does not coarsen to coarsest_n = {c}"));
            }
        }
        self.cycle
            .smoother
            .validate(self.mesh)
            .map_err(|e| e.to_string())?;
        let bc_ok = match self.rhs {
            RhsChoice::Homogeneous => true,
            RhsChoice::PeriodicManufactured => self.mesh.bc == BoundaryKind::Periodic,
            RhsChoice::DirichletManufactured => self.mesh.bc == BoundaryKind::Dirichlet,
        };
        if !bc_ok {
            return Err(format!(
                "rhs {:?} does not match {:?} boundaries",
                self.rhs, self.mesh.bc
            ));
        }
        if self.measure && self.cycles == 0 {
            return Err("cycles must be positive".into());
        }
        if let Some(l) = &self.lfa {
            if l.sample_density == 0 {
                return Err("sample_density must be positive".into());
            }
            if let Some(w) = l.omegas.iter().find(|w| !(**w > 0.0 && **w < 2.0)) {
                return Err(format!("lfa omega {w} outside (0, 2)"));
            }
        }
        Ok(())
    }
}

/// Line (1-based) of the first assignment to `key`, for diagnostics.
fn line_of(text: &str, key: &str) -> Option<usize> {
    text.lines()
        .position(|l| {
            let l = l.trim_start();
            l.strip_prefix(key)
                .is_some_and(|rest| rest.trim_start().starts_with('='))
        })
        .map(|i| i + 1)
}

fn config_error(text: &str, key: &str, message: String) -> HarnessError {
    HarnessError::Config {
        line: line_of(text, key),
        message,
    }
}

/// Parse and resolve a configuration file's contents.
pub fn parse(text: &str) -> Result<Experiment> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| HarnessError::Config {
        line: e.span().map(|s| text[..s.start].matches('\n').count() + 1),
        message: e.message().to_string(),
    })?;
    if raw.schema != SCHEMA_VERSION {
        return Err(config_error(
            text,
            "schema",
            format!(
                "unsupported schema {} (expected {SCHEMA_VERSION})",
                raw.schema
            ),
        ));
    }
    let bc: BoundaryKind = raw.bc.unwrap_or(Bc::Periodic).into();
    let n = raw.n.unwrap_or(DEFAULT_N);
    let mesh = MeshSpec::new(n, bc).map_err(|e| config_error(text, "n", e.to_string()))?;
    let kind: SmootherKind = raw.smoother.unwrap_or(KindName::Vanka).into();
    let mut smoother = SmootherSpec::new(kind, raw.omega.unwrap_or_else(|| default_omega(kind)));
    if let Some(o) = raw.ordering {
        smoother = smoother.with_ordering(o.into());
    }
    if let Some(w) = raw.within {
        smoother = smoother.with_within_color(w.into());
    }
    if let Some(starts) = &raw.phase_starts {
        if starts.len() != 4 {
            return Err(config_error(
                text,
                "phase_starts",
                format!("expected 4 phase start corners, got {}", starts.len()),
            ));
        }
        for (phase, &c) in smoother.modified_phases.iter_mut().zip(starts) {
            *phase = TriadPhase::new(phase.u_right, phase.v_top, c.into());
        }
    }
    let nu1 = raw.nu1.unwrap_or(2);
    let nu2 = raw.nu2.unwrap_or(nu1);
    let mut cycle = CycleSpec::two_grid(smoother, nu1, nu2).for_boundary(bc);
    cycle.kind = match raw.cycle.unwrap_or(CycleName::TwoGrid) {
        CycleName::TwoGrid => CycleKind::TwoGrid,
        CycleName::V => CycleKind::V,
        CycleName::W => CycleKind::W,
    };
    if let Some(c) = raw.coarsest_n {
        cycle.coarsest_n = c;
    }
    if let Some(i) = raw.interpolation {
        cycle.transfer.interpolation = match i {
            InterpolationName::Bilinear => Interpolation::Bilinear,
            InterpolationName::AdjointRestriction => Interpolation::AdjointRestriction,
        };
    }
    if let Some(c) = raw.coarse {
        cycle.transfer.coarse = match c {
            CoarseName::Galerkin => CoarseOperator::Galerkin,
            CoarseName::Rediscretized => CoarseOperator::Rediscretized,
        };
    }
    if let Some(w) = raw.wall {
        cycle.wall = match w {
            WallName::Reflect => WallTreatment::Reflect,
            WallName::Injection => WallTreatment::Injection,
        };
    }
    let lfa = if raw.lfa.unwrap_or(false) || raw.lfa_omegas.is_some() {
        Some(LfaRequest {
            omegas: raw
                .lfa_omegas
                .clone()
                .unwrap_or_else(|| vec![smoother.omega]),
            sample_density: raw.sample_density.unwrap_or(DEFAULT_SAMPLE_DENSITY),
        })
    } else {
        None
    };
    let exp = Experiment {
        id: raw.id.clone().unwrap_or_else(|| "config".to_string()),
        mesh,
        rhs: raw.rhs.unwrap_or(RhsChoice::Homogeneous),
        cycle,
        cycles: raw.cycles.unwrap_or(DEFAULT_CYCLES),
        seed: raw.seed.unwrap_or(DEFAULT_SEED),
        measure: raw.measure.unwrap_or(true),
        lfa,
    };
    exp.validate().map_err(|m| {
        let key = if m.starts_with("n =") {
            "n"
        } else if m.contains("coarsest_n") {
            "coarsest_n"
        } else if m.contains("omega =") {
            "omega"
        } else if m.contains("ordering") || m.contains("Forward") {
            "ordering"
        } else if m.contains("rhs") {
            "rhs"
        } else if m.contains("cycles") {
            "cycles"
        } else if m.contains("lfa") || m.contains("sample") {
            "lfa_omegas"
        } else {
            "smoother"
        };
        config_error(text, key, m)
    })?;
    Ok(exp)
}
