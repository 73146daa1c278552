//! Uniform one-dimensional mesh and the initial (stress-free) beam geometry.
//!
//! The mesh is a line of `m` equal cells along arc length. Face `i` sits
//! between cells `i-1` and `i`; faces 0 and `m` are the beam ends. Geometry is
//! carried at faces and cell centres: centreline position, unit tangent, and
//! the initial triad `Lambda_0` mapping material axes to space.

use crate::math;
use crate::so3::{exp_so3, RotationMatrix, Vec3};
use alloc::vec::Vec;
use core::fmt;

/// Outward axis direction of a cell's west face.
pub const D_WEST: f64 = -1.0;
/// Outward axis direction of a cell's east face.
pub const D_EAST: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GeometryError {
    /// At least two control volumes are required.
    TooFewCells { cells: usize },
    NonPositiveLength { length: f64 },
    NonPositiveRadius { radius: f64 },
    /// Arc span `length / radius` must lie strictly inside (0, 2 pi).
    SpanOutOfRange { span: f64 },
}

impl fmt::Display for GeometryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GeometryError::TooFewCells { cells } => {
                write!(f, "mesh needs at least 2 cells, got {cells}")
            }
            GeometryError::NonPositiveLength { length } => {
                write!(f, "beam length must be positive, got {length}")
            }
            GeometryError::NonPositiveRadius { radius } => {
                write!(f, "arc radius must be positive, got {radius}")
            }
            GeometryError::SpanOutOfRange { span } => {
                write!(f, "arc span must lie in (0, 2 pi), got {span}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for GeometryError {}

/// Uniform cell-centred mesh.
///
/// `l_w`/`l_e` are the distances between the interpolation points straddling
/// the west/east face of each cell: the neighbour centroid distance `l_c` at
/// interior faces, `l_c / 2` (centre to face) at the two boundary faces. They
/// feed the face-derivative stencils. The moment-equation arm weight is
/// `l_c / 2` per face at every cell, because the two-point trapezoid over a
/// cell must integrate to the full cell length.
///
/// `gamma_w`/`gamma_e` weight the neighbouring cell's value in linear face
/// interpolation, `[.]_e = gamma_e [.]_E + (1 - gamma_e) [.]_C`; they are 1/2
/// at interior faces of a uniform mesh and unused (zero) at boundary faces.
#[derive(Clone, Debug)]
pub struct BeamMesh {
    pub cells: usize,
    pub length: f64,
    pub l_c: f64,
    /// Arc-length positions of the `cells + 1` faces.
    pub faces: Vec<f64>,
    /// Arc-length positions of the cell centres.
    pub cell_centres: Vec<f64>,
    pub l_w: Vec<f64>,
    pub l_e: Vec<f64>,
    pub gamma_w: Vec<f64>,
    pub gamma_e: Vec<f64>,
}

pub fn build_uniform_mesh(cells: usize, length: f64) -> Result<BeamMesh, GeometryError> {
    if cells < 2 {
        return Err(GeometryError::TooFewCells { cells });
    }
    if !(length > 0.0) {
        return Err(GeometryError::NonPositiveLength { length });
    }
    let l_c = length / cells as f64;
    let faces: Vec<f64> = (0..=cells).map(|i| i as f64 * l_c).collect();
    let cell_centres: Vec<f64> = (0..cells).map(|i| (i as f64 + 0.5) * l_c).collect();
    let mut l_w = alloc::vec![l_c; cells];
    let mut l_e = alloc::vec![l_c; cells];
    l_w[0] = 0.5 * l_c;
    l_e[cells - 1] = 0.5 * l_c;
    let mut gamma_w = alloc::vec![0.5; cells];
    let mut gamma_e = alloc::vec![0.5; cells];
    gamma_w[0] = 0.0;
    gamma_e[cells - 1] = 0.0;
    Ok(BeamMesh {
        cells,
        length,
        l_c,
        faces,
        cell_centres,
        l_w,
        l_e,
        gamma_w,
        gamma_e,
    })
}

/// Turning sense of an arc in the xy-plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum ArcOrientation {
    CounterClockwise,
    Clockwise,
}

impl ArcOrientation {
    /// Sign of d(alpha)/ds: +1 counter-clockwise, -1 clockwise.
    #[inline]
    pub(crate) fn sign(self) -> f64 {
        match self {
            ArcOrientation::CounterClockwise => 1.0,
            ArcOrientation::Clockwise => -1.0,
        }
    }
}

/// Initial centreline and triads sampled at faces (`_f`, `cells + 1` entries)
/// and cell centres (`_c`, `cells` entries).
///
/// `r0slope_f` is the face gradient of the initial centreline by the same
/// two-point stencils later applied to the displacement field (neighbouring
/// centres at interior faces, centre-to-face at the ends). Strains are built
/// from and referenced to this discrete slope, not the analytic tangent
/// `r0prime_f`, so an undeformed or rigidly moved beam carries exactly zero
/// strain on any mesh.
#[derive(Clone, Debug)]
pub struct InitialGeometry {
    pub r0_f: Vec<Vec3>,
    pub lambda0_f: Vec<RotationMatrix>,
    pub r0prime_f: Vec<Vec3>,
    pub r0slope_f: Vec<Vec3>,
    pub r0_c: Vec<Vec3>,
    pub lambda0_c: Vec<RotationMatrix>,
    pub r0prime_c: Vec<Vec3>,
}

/// Straight beam along the global x-axis starting at the origin.
pub fn make_straight(mesh: &BeamMesh) -> InitialGeometry {
    let at = |s: f64| (Vec3::new(s, 0.0, 0.0), RotationMatrix::IDENTITY, Vec3::E1);
    sample(mesh, at)
}

/// Circular arc in the xy-plane starting at the origin.
///
/// `start_tangent` is the angle (rad) of the unit tangent at `s = 0` measured
/// from the x-axis; the tangent angle evolves as
/// `alpha(s) = start_tangent +/- s / radius`. Positions, tangents, and triads
/// are evaluated analytically at every face and centre, so the triad identity
/// `Lambda_0^T r_0' = e_1` holds to machine precision.
pub fn make_arc(
    mesh: &BeamMesh,
    radius: f64,
    start_tangent: f64,
    orientation: ArcOrientation,
) -> Result<InitialGeometry, GeometryError> {
    if !(radius > 0.0) {
        return Err(GeometryError::NonPositiveRadius { radius });
    }
    let span = mesh.length / radius;
    if !(span > 0.0 && span < 2.0 * core::f64::consts::PI) {
        return Err(GeometryError::SpanOutOfRange { span });
    }
    let q = orientation.sign();
    let (sin0, cos0) = (math::sin(start_tangent), math::cos(start_tangent));
    let at = |s: f64| {
        let alpha = start_tangent + q * s / radius;
        let (sin_a, cos_a) = (math::sin(alpha), math::cos(alpha));
        let r = Vec3::new(q * radius * (sin_a - sin0), -q * radius * (cos_a - cos0), 0.0);
        let triad = exp_so3(Vec3::new(0.0, 0.0, alpha));
        (r, triad, Vec3::new(cos_a, sin_a, 0.0))
    };
    Ok(sample(mesh, at))
}

fn sample<F>(mesh: &BeamMesh, at: F) -> InitialGeometry
where
    F: Fn(f64) -> (Vec3, RotationMatrix, Vec3),
{
    let mut g = InitialGeometry {
        r0_f: Vec::with_capacity(mesh.cells + 1),
        lambda0_f: Vec::with_capacity(mesh.cells + 1),
        r0prime_f: Vec::with_capacity(mesh.cells + 1),
        r0slope_f: Vec::with_capacity(mesh.cells + 1),
        r0_c: Vec::with_capacity(mesh.cells),
        lambda0_c: Vec::with_capacity(mesh.cells),
        r0prime_c: Vec::with_capacity(mesh.cells),
    };
    for &s in &mesh.faces {
        let (r, triad, tangent) = at(s);
        g.r0_f.push(r);
        g.lambda0_f.push(triad);
        g.r0prime_f.push(tangent);
    }
    for &s in &mesh.cell_centres {
        let (r, triad, tangent) = at(s);
        g.r0_c.push(r);
        g.lambda0_c.push(triad);
        g.r0prime_c.push(tangent);
    }
    let last = mesh.cells - 1;
    g.r0slope_f
        .push((g.r0_c[0] - g.r0_f[0]) * (1.0 / mesh.l_w[0]));
    for i in 1..mesh.cells {
        g.r0slope_f
            .push((g.r0_c[i] - g.r0_c[i - 1]) * (1.0 / mesh.l_e[i - 1]));
    }
    g.r0slope_f
        .push((g.r0_f[mesh.cells] - g.r0_c[last]) * (1.0 / mesh.l_e[last]));
    g
}
