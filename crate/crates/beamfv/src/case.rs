//! Benchmark case definitions: geometry, section, boundary conditions, load
//! schedule, and what to monitor. Pure data plus validation; the solver
//! consumes these, the CLI serialises them.

use crate::geometry::{
    build_uniform_mesh, make_arc, make_straight, ArcOrientation, BeamMesh, GeometryError,
    InitialGeometry,
};
use crate::solver::SolverSettings;
use crate::state::{Material, MaterialError};
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

#[derive(Clone, Debug, PartialEq)]
pub enum CaseError {
    Geometry(GeometryError),
    Material(MaterialError),
    EmptySchedule,
    StageHasNoSteps { stage: usize },
    NonFiniteFactor { stage: usize },
    MonitorFaceOutOfRange { face: usize, faces: usize },
    PointLoadOutsideBeam { at: f64, length: f64 },
    CrownRequiresArc,
    NoCrownOnArc,
    NonPositiveTolerance { tolerance: f64 },
    NoIterationsAllowed,
}

impl fmt::Display for CaseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseError::Geometry(e) => write!(f, "geometry: {e}"),
            CaseError::Material(e) => write!(f, "material: {e}"),
            CaseError::EmptySchedule => write!(f, "load schedule has no stages"),
            CaseError::StageHasNoSteps { stage } => {
                write!(f, "schedule stage {stage} has zero steps")
            }
            CaseError::NonFiniteFactor { stage } => {
                write!(f, "schedule stage {stage} has a non-finite target factor")
            }
            CaseError::MonitorFaceOutOfRange { face, faces } => {
                write!(f, "monitor face {face} out of range (mesh has faces 0..{faces})")
            }
            CaseError::PointLoadOutsideBeam { at, length } => {
                write!(f, "point load at arc length {at} outside the beam [0, {length}]")
            }
            CaseError::CrownRequiresArc => {
                write!(f, "crown location is only defined for arc geometry")
            }
            CaseError::NoCrownOnArc => {
                write!(f, "the arc never passes a topmost point (no crown)")
            }
            CaseError::NonPositiveTolerance { tolerance } => {
                write!(f, "solver tolerance must be positive, got {tolerance}")
            }
            CaseError::NoIterationsAllowed => {
                write!(f, "solver must allow at least one iteration")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for CaseError {}

impl From<GeometryError> for CaseError {
    fn from(e: GeometryError) -> Self {
        CaseError::Geometry(e)
    }
}

impl From<MaterialError> for CaseError {
    fn from(e: MaterialError) -> Self {
        CaseError::Material(e)
    }
}

/// Initial mean-line shape. Arcs lie in the xy-plane; `start_tangent` is the
/// angle of the tangent at s = 0 against the x-axis (rad), `span` the swept
/// angle (rad), so the beam length is `radius * span`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", deny_unknown_fields))]
pub enum GeometrySpec {
    Straight {
        length: f64,
    },
    Arc {
        radius: f64,
        span: f64,
        start_tangent: f64,
        orientation: ArcOrientation,
    },
}

impl GeometrySpec {
    pub fn length(&self) -> f64 {
        match *self {
            GeometrySpec::Straight { length } => length,
            GeometrySpec::Arc { radius, span, .. } => radius * span,
        }
    }
}

/// Cross-section stiffness moduli (axial, two shear; torsion, two bending).
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct MaterialSpec {
    pub ea: f64,
    pub ga2: f64,
    pub ga3: f64,
    pub gj: f64,
    pub ei2: f64,
    pub ei3: f64,
}

impl MaterialSpec {
    pub fn build(&self) -> Result<Material, MaterialError> {
        Material::new(self.ea, self.ga2, self.ga3, self.gj, self.ei2, self.ei3)
    }
}

/// One family's boundary condition at one end. Values are the targets at
/// load factor 1 and scale linearly with the factor: Dirichlet carries a
/// prescribed displacement or rotation-vector ramp, Neumann an applied force
/// or moment.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", deny_unknown_fields))]
pub enum Condition {
    Dirichlet(crate::so3::Vec3),
    Neumann(crate::so3::Vec3),
}

/// Boundary conditions of one end face.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct EndCondition {
    pub translation: Condition,
    pub rotation: Condition,
}

impl EndCondition {
    /// All six components fixed to zero.
    pub const CLAMPED: EndCondition = EndCondition {
        translation: Condition::Dirichlet(crate::so3::Vec3::ZERO),
        rotation: Condition::Dirichlet(crate::so3::Vec3::ZERO),
    };

    /// Translation pinned, rotation moment-free.
    pub const HINGED: EndCondition = EndCondition {
        translation: Condition::Dirichlet(crate::so3::Vec3::ZERO),
        rotation: Condition::Neumann(crate::so3::Vec3::ZERO),
    };

    /// Fully load-free.
    pub const FREE: EndCondition = EndCondition {
        translation: Condition::Neumann(crate::so3::Vec3::ZERO),
        rotation: Condition::Neumann(crate::so3::Vec3::ZERO),
    };
}

/// Where a concentrated load acts.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", deny_unknown_fields))]
pub enum PointLoadLocation {
    /// Topmost point of an arc (largest y).
    Crown,
    /// Arc length from the west end (m).
    ArcLength(f64),
}

/// A concentrated force, lumped into the containing cell as an equivalent
/// distributed load over that cell.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct PointLoad {
    pub force: crate::so3::Vec3,
    pub location: PointLoadLocation,
}

/// Loads at load factor 1.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Loading {
    /// Distributed force per unit reference length (N/m).
    pub distributed_force: crate::so3::Vec3,
    /// Distributed torque per unit reference length (N).
    pub distributed_moment: crate::so3::Vec3,
    #[cfg_attr(feature = "serde", serde(default))]
    pub point: Option<PointLoad>,
}

impl Loading {
    pub const NONE: Loading = Loading {
        distributed_force: crate::so3::Vec3::ZERO,
        distributed_moment: crate::so3::Vec3::ZERO,
        point: None,
    };
}

/// Which face the per-increment monitor samples.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", deny_unknown_fields))]
pub enum MonitorPoint {
    WestFace,
    EastFace,
    Face(usize),
    Crown,
}

/// A complete, runnable benchmark definition.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct CaseDefinition {
    pub name: String,
    pub geometry: GeometrySpec,
    pub material: MaterialSpec,
    pub cells: usize,
    pub west: EndCondition,
    pub east: EndCondition,
    pub loading: Loading,
    pub solver: SolverSettings,
    pub monitor: MonitorPoint,
}

impl CaseDefinition {
    pub fn build_mesh(&self) -> Result<BeamMesh, CaseError> {
        Ok(build_uniform_mesh(self.cells, self.geometry.length())?)
    }

    pub fn build_geometry(&self, mesh: &BeamMesh) -> Result<InitialGeometry, CaseError> {
        match self.geometry {
            GeometrySpec::Straight { .. } => Ok(make_straight(mesh)),
            GeometrySpec::Arc {
                radius,
                start_tangent,
                orientation,
                ..
            } => Ok(make_arc(mesh, radius, start_tangent, orientation)?),
        }
    }

    pub fn build_material(&self) -> Result<Material, CaseError> {
        Ok(self.material.build()?)
    }

    /// Arc length of the crown (topmost point) for arc geometry: where the
    /// tangent passes horizontal with the curve locally concave down.
    pub fn crown_arc_length(&self) -> Result<f64, CaseError> {
        let (radius, span, start_tangent, orientation) = match self.geometry {
            GeometrySpec::Arc {
                radius,
                span,
                start_tangent,
                orientation,
            } => (radius, span, start_tangent, orientation),
            GeometrySpec::Straight { .. } => return Err(CaseError::CrownRequiresArc),
        };
        let q = orientation.sign();
        // tangent angle alpha(s) = start + q s / R; y'(s) = sin(alpha),
        // y''(s) = q cos(alpha) / R: a maximum needs sin = 0 and q cos < 0
        let alpha_end = start_tangent + q * span;
        let lo = start_tangent.min(alpha_end);
        let hi = start_tangent.max(alpha_end);
        let mut k = crate::math::ceil(lo / PI) as i64;
        while (k as f64) * PI <= hi {
            let alpha = (k as f64) * PI;
            if alpha > lo && alpha < hi && q * crate::math::cos(alpha) < 0.0 {
                return Ok(q * radius * (alpha - start_tangent));
            }
            k += 1;
        }
        Err(CaseError::NoCrownOnArc)
    }

    fn point_load_arc_length(&self, load: &PointLoad) -> Result<f64, CaseError> {
        match load.location {
            PointLoadLocation::Crown => self.crown_arc_length(),
            PointLoadLocation::ArcLength(s) => Ok(s),
        }
    }

    /// Per-cell distributed loads at load factor 1, with any point load
    /// lumped into the cell whose centre is nearest (ties go west).
    pub fn distributed_loads(
        &self,
        mesh: &BeamMesh,
    ) -> Result<(Vec<crate::so3::Vec3>, Vec<crate::so3::Vec3>), CaseError> {
        let mut f_c = alloc::vec![self.loading.distributed_force; mesh.cells];
        let t_c = alloc::vec![self.loading.distributed_moment; mesh.cells];
        if let Some(load) = &self.loading.point {
            let s = self.point_load_arc_length(load)?;
            if !(0.0..=mesh.length).contains(&s) {
                return Err(CaseError::PointLoadOutsideBeam {
                    at: s,
                    length: mesh.length,
                });
            }
            let cell = nearest_index(&mesh.cell_centres, s);
            f_c[cell] += load.force * (1.0 / mesh.l_c);
        }
        Ok((f_c, t_c))
    }

    /// Face index the monitor samples.
    pub fn monitor_face(&self, mesh: &BeamMesh) -> Result<usize, CaseError> {
        match self.monitor {
            MonitorPoint::WestFace => Ok(0),
            MonitorPoint::EastFace => Ok(mesh.cells),
            MonitorPoint::Face(i) => {
                if i <= mesh.cells {
                    Ok(i)
                } else {
                    Err(CaseError::MonitorFaceOutOfRange {
                        face: i,
                        faces: mesh.cells + 1,
                    })
                }
            }
            MonitorPoint::Crown => {
                let s = self.crown_arc_length()?;
                Ok(nearest_index(&mesh.faces, s))
            }
        }
    }

    /// Checks everything that does not require running: geometry and
    /// material constructibility, schedule shape, monitor and load targets.
    pub fn validate(&self) -> Result<(), CaseError> {
        let mesh = self.build_mesh()?;
        self.build_geometry(&mesh)?;
        self.build_material()?;
        if self.solver.schedule.is_empty() {
            return Err(CaseError::EmptySchedule);
        }
        for (i, stage) in self.solver.schedule.iter().enumerate() {
            if stage.steps == 0 {
                return Err(CaseError::StageHasNoSteps { stage: i });
            }
            if !stage.to_factor.is_finite() {
                return Err(CaseError::NonFiniteFactor { stage: i });
            }
        }
        if !(self.solver.tolerance > 0.0) {
            return Err(CaseError::NonPositiveTolerance {
                tolerance: self.solver.tolerance,
            });
        }
        if self.solver.max_iterations == 0 {
            return Err(CaseError::NoIterationsAllowed);
        }
        self.distributed_loads(&mesh)?;
        self.monitor_face(&mesh)?;
        Ok(())
    }
}

/// Index of the entry closest to `x`; the first (westmost) wins ties.
fn nearest_index(values: &[f64], x: f64) -> usize {
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (i, &v) in values.iter().enumerate() {
        let d = (v - x).abs();
        if d < best_dist {
            best_dist = d;
            best = i;
        }
    }
    best
}
