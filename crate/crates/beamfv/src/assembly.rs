//! Linearised coefficient blocks and assembly of the force and moment
//! balances into a 6x6 block-tridiagonal Newton system.
//!
//! Unknown ordering per cell is [dw; dpsi]; row ordering is [force; moment].
//! The residual on the right-hand side is the face-flux balance of the
//! stored state, so its roots are exactly the discrete equilibria, and the
//! coefficient matrices are evaluated at the same faces, which makes the
//! assembled blocks the exact derivative of that balance; the face
//! interpolation weights enter through the increment interpolation.
//! Boundary faces are patched separately. East faces enter flux
//! differences with +, west faces with -, and the moment-arm terms
//! `(l_c / 2) (r' x n)` add with + at both faces.

use crate::boundary::BoundaryPatch;
use crate::geometry::BeamMesh;
use crate::so3::{hat, Mat3, Vec3};
use crate::state::{BeamState, Material};
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use crate::geometry::InitialGeometry;

/// A pivot below this fraction of the block's largest entry is treated as
/// singular; the system is then ill-posed (for example all-Neumann with a
/// free rigid mode) rather than merely ill-conditioned.
pub const PIVOT_RATIO: f64 = 1e-13;

/// Stacked [dw; dpsi] increment or [force; moment] residual at one cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vec6(pub [f64; 6]);

impl Vec6 {
    pub const ZERO: Vec6 = Vec6([0.0; 6]);

    #[inline]
    pub fn from_parts(w: Vec3, psi: Vec3) -> Self {
        Vec6([w[0], w[1], w[2], psi[0], psi[1], psi[2]])
    }

    #[inline]
    pub fn parts(self) -> (Vec3, Vec3) {
        (
            Vec3::new(self.0[0], self.0[1], self.0[2]),
            Vec3::new(self.0[3], self.0[4], self.0[5]),
        )
    }

    pub fn norm(self) -> f64 {
        crate::math::sqrt(self.0.iter().map(|x| x * x).sum())
    }
}

impl Index<usize> for Vec6 {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vec6 {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for Vec6 {
    type Output = Vec6;
    fn add(self, o: Vec6) -> Vec6 {
        let mut r = self;
        for i in 0..6 {
            r.0[i] += o.0[i];
        }
        r
    }
}

impl AddAssign for Vec6 {
    fn add_assign(&mut self, o: Vec6) {
        for i in 0..6 {
            self.0[i] += o.0[i];
        }
    }
}

impl Sub for Vec6 {
    type Output = Vec6;
    fn sub(self, o: Vec6) -> Vec6 {
        let mut r = self;
        for i in 0..6 {
            r.0[i] -= o.0[i];
        }
        r
    }
}

impl Neg for Vec6 {
    type Output = Vec6;
    fn neg(self) -> Vec6 {
        let mut r = self;
        for x in &mut r.0 {
            *x = -*x;
        }
        r
    }
}

impl Mul<f64> for Vec6 {
    type Output = Vec6;
    fn mul(self, s: f64) -> Vec6 {
        let mut r = self;
        for x in &mut r.0 {
            *x *= s;
        }
        r
    }
}

/// Dense 6x6 block in row-major layout.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat6(pub [[f64; 6]; 6]);

impl Mat6 {
    pub const ZERO: Mat6 = Mat6([[0.0; 6]; 6]);

    pub const IDENTITY: Mat6 = {
        let mut m = [[0.0; 6]; 6];
        let mut i = 0;
        while i < 6 {
            m[i][i] = 1.0;
            i += 1;
        }
        Mat6(m)
    };

    /// Assembles [[a, b], [c, d]] from 3x3 quadrants.
    pub fn from_blocks(a: Mat3, b: Mat3, c: Mat3, d: Mat3) -> Self {
        let mut m = Mat6::ZERO;
        m.add_block(0, 0, &a);
        m.add_block(0, 3, &b);
        m.add_block(3, 0, &c);
        m.add_block(3, 3, &d);
        m
    }

    /// Adds a 3x3 block with its upper-left corner at (row0, col0).
    pub fn add_block(&mut self, row0: usize, col0: usize, b: &Mat3) {
        for i in 0..3 {
            for j in 0..3 {
                self.0[row0 + i][col0 + j] += b.0[i][j];
            }
        }
    }

    /// Extracts the 3x3 block with upper-left corner at (row0, col0).
    pub fn block(&self, row0: usize, col0: usize) -> Mat3 {
        let mut b = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                b.0[i][j] = self.0[row0 + i][col0 + j];
            }
        }
        b
    }

    pub fn frobenius(&self) -> f64 {
        crate::math::sqrt(self.0.iter().flatten().map(|x| x * x).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .fold(0.0f64, |acc, x| acc.max(x.abs()))
    }
}

impl Add for Mat6 {
    type Output = Mat6;
    fn add(self, o: Mat6) -> Mat6 {
        let mut r = self;
        for i in 0..6 {
            for j in 0..6 {
                r.0[i][j] += o.0[i][j];
            }
        }
        r
    }
}

impl AddAssign for Mat6 {
    fn add_assign(&mut self, o: Mat6) {
        for i in 0..6 {
            for j in 0..6 {
                self.0[i][j] += o.0[i][j];
            }
        }
    }
}

impl Sub for Mat6 {
    type Output = Mat6;
    fn sub(self, o: Mat6) -> Mat6 {
        let mut r = self;
        for i in 0..6 {
            for j in 0..6 {
                r.0[i][j] -= o.0[i][j];
            }
        }
        r
    }
}

impl Mul<f64> for Mat6 {
    type Output = Mat6;
    fn mul(self, s: f64) -> Mat6 {
        let mut r = self;
        for row in &mut r.0 {
            for x in row {
                *x *= s;
            }
        }
        r
    }
}

impl Mul<Vec6> for Mat6 {
    type Output = Vec6;
    fn mul(self, v: Vec6) -> Vec6 {
        let mut r = Vec6::ZERO;
        for i in 0..6 {
            let mut s = 0.0;
            for j in 0..6 {
                s += self.0[i][j] * v.0[j];
            }
            r.0[i] = s;
        }
        r
    }
}

impl Mul<Mat6> for Mat6 {
    type Output = Mat6;
    fn mul(self, o: Mat6) -> Mat6 {
        let mut r = Mat6::ZERO;
        for i in 0..6 {
            for k in 0..6 {
                let a = self.0[i][k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..6 {
                    r.0[i][j] += a * o.0[k][j];
                }
            }
        }
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingularBlock;

impl fmt::Display for SingularBlock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "6x6 block is singular to working precision")
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SingularBlock {}

/// LU factorisation of a 6x6 block with partial pivoting.
#[derive(Clone, Copy, Debug)]
pub struct Lu6 {
    lu: [[f64; 6]; 6],
    perm: [usize; 6],
}

impl Lu6 {
    pub fn factor(m: Mat6) -> Result<Self, SingularBlock> {
        let scale = m.max_abs();
        if scale == 0.0 {
            return Err(SingularBlock);
        }
        let mut lu = m.0;
        let mut perm = [0usize; 6];
        for (i, p) in perm.iter_mut().enumerate() {
            *p = i;
        }
        for k in 0..6 {
            let mut pivot_row = k;
            let mut pivot_abs = lu[k][k].abs();
            for r in (k + 1)..6 {
                let a = lu[r][k].abs();
                if a > pivot_abs {
                    pivot_abs = a;
                    pivot_row = r;
                }
            }
            if pivot_abs <= PIVOT_RATIO * scale {
                return Err(SingularBlock);
            }
            if pivot_row != k {
                lu.swap(k, pivot_row);
                perm.swap(k, pivot_row);
            }
            let inv = 1.0 / lu[k][k];
            for r in (k + 1)..6 {
                let f = lu[r][k] * inv;
                lu[r][k] = f;
                for c in (k + 1)..6 {
                    lu[r][c] -= f * lu[k][c];
                }
            }
        }
        Ok(Lu6 { lu, perm })
    }

    pub fn solve(&self, b: Vec6) -> Vec6 {
        let mut y = [0.0; 6];
        for i in 0..6 {
            let mut s = b.0[self.perm[i]];
            for j in 0..i {
                s -= self.lu[i][j] * y[j];
            }
            y[i] = s;
        }
        let mut x = [0.0; 6];
        for i in (0..6).rev() {
            let mut s = y[i];
            for j in (i + 1)..6 {
                s -= self.lu[i][j] * x[j];
            }
            x[i] = s / self.lu[i][i];
        }
        Vec6(x)
    }

    /// Solves for each column of `b`.
    pub fn solve_mat(&self, b: Mat6) -> Mat6 {
        let mut out = Mat6::ZERO;
        for c in 0..6 {
            let mut col = Vec6::ZERO;
            for r in 0..6 {
                col.0[r] = b.0[r][c];
            }
            let x = self.solve(col);
            for r in 0..6 {
                out.0[r][c] = x.0[r];
            }
        }
        out
    }
}

/// Solves a 3x3 system by LU with partial pivoting. Returns None when the
/// matrix is singular relative to its largest entry.
pub fn solve3(a: Mat3, b: Vec3) -> Option<Vec3> {
    Some(Vec3(lu3(a)?.apply(b.0)))
}

/// Solves for each column of `b`.
pub fn solve3_mat(a: Mat3, b: Mat3) -> Option<Mat3> {
    let lu = lu3(a)?;
    let bt = b.transpose();
    let mut out = Mat3::ZERO;
    for c in 0..3 {
        let x = lu.apply(bt.0[c]);
        for r in 0..3 {
            out.0[r][c] = x[r];
        }
    }
    Some(out)
}

struct Lu3 {
    lu: [[f64; 3]; 3],
    perm: [usize; 3],
}

impl Lu3 {
    fn apply(&self, b: [f64; 3]) -> [f64; 3] {
        let mut y = [0.0; 3];
        for i in 0..3 {
            let mut s = b[self.perm[i]];
            for j in 0..i {
                s -= self.lu[i][j] * y[j];
            }
            y[i] = s;
        }
        let mut x = [0.0; 3];
        for i in (0..3).rev() {
            let mut s = y[i];
            for j in (i + 1)..3 {
                s -= self.lu[i][j] * x[j];
            }
            x[i] = s / self.lu[i][i];
        }
        x
    }
}

fn lu3(a: Mat3) -> Option<Lu3> {
    let scale = a
        .0
        .iter()
        .flatten()
        .fold(0.0f64, |acc, x| acc.max(x.abs()));
    if scale == 0.0 {
        return None;
    }
    let mut lu = a.0;
    let mut perm = [0usize, 1, 2];
    for k in 0..3 {
        let mut pivot_row = k;
        let mut pivot_abs = lu[k][k].abs();
        for r in (k + 1)..3 {
            let v = lu[r][k].abs();
            if v > pivot_abs {
                pivot_abs = v;
                pivot_row = r;
            }
        }
        if pivot_abs <= PIVOT_RATIO * scale {
            return None;
        }
        if pivot_row != k {
            lu.swap(k, pivot_row);
            perm.swap(k, pivot_row);
        }
        let inv = 1.0 / lu[k][k];
        for r in (k + 1)..3 {
            let f = lu[r][k] * inv;
            lu[r][k] = f;
            for c in (k + 1)..3 {
                lu[r][c] -= f * lu[k][c];
            }
        }
    }
    Some(Lu3 { lu, perm })
}

/// Pointwise linearisation coefficients of the flux terms.
///
/// `c_expw`, `c_expm`, `c_expmw` are the explicit flux values (the spatial
/// force, moment, and moment-arm cross product); the matrices multiply the
/// increment stencils: `c_ww` and `c_wpsi` act in the force flux, `c_mpsi`,
/// `c_mpsi2` in the moment flux, and `c_mw`, `c_mwpsi` in the arm term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientSet {
    pub c_expw: Vec3,
    pub c_ww: Mat3,
    pub c_wpsi: Mat3,
    pub c_expm: Vec3,
    pub c_mpsi: Mat3,
    pub c_mpsi2: Mat3,
    pub c_expmw: Vec3,
    pub c_mw: Mat3,
    pub c_mwpsi: Mat3,
}

/// Evaluates the coefficient set at one point from the total triad, the
/// mean-line tangent, and the material strains there.
pub fn coefficient_set(
    lambda_t: &crate::so3::RotationMatrix,
    rprime: Vec3,
    gamma: Vec3,
    k: Vec3,
    material: &Material,
) -> CoefficientSet {
    let rot = *lambda_t.mat();
    let n = rot * material.force_of(gamma);
    let m = rot * material.moment_of(k);
    let c_ww = rot * Mat3::diag(material.c_n) * rot.transpose();
    let c_mpsi2 = rot * Mat3::diag(material.c_m) * rot.transpose();
    let rhat = hat(rprime);
    let c_wpsi = c_ww * rhat - hat(n);
    let c_mw = rhat * c_ww - hat(n);
    CoefficientSet {
        c_expw: n,
        c_ww,
        c_wpsi,
        c_expm: m,
        c_mpsi: -hat(m),
        c_mpsi2,
        c_expmw: rprime.cross(n),
        c_mw,
        c_mwpsi: rhat * c_wpsi,
    }
}

/// Coefficient set at one face, evaluated from the face-stored fields.
/// Interior-face sets feed the row assembly; the boundary-face sets (faces
/// 0 and m) feed the boundary patches and the recovery maps.
pub fn face_coefficient_set(
    state: &BeamState,
    geom: &InitialGeometry,
    material: &Material,
    face: usize,
) -> CoefficientSet {
    coefficient_set(
        &state.lambda_t_f(geom, face),
        state.rprime_f[face],
        state.gamma_f[face],
        state.k_f[face],
        material,
    )
}

/// Coefficient sets at every face, evaluated from the face-stored fields.
pub fn face_coefficient_sets(
    state: &BeamState,
    geom: &InitialGeometry,
    material: &Material,
) -> Vec<CoefficientSet> {
    (0..state.lambda_f.len())
        .map(|i| face_coefficient_set(state, geom, material, i))
        .collect()
}

/// Coefficient sets at every cell centre, with the cell strains and tangent
/// taken as arithmetic means of the adjacent face values and the triad from
/// the cell-stored rotation. Interpolating these to the faces agrees with
/// the face-evaluated sets to second order in the spacing; assembly uses
/// the face evaluation, which is exact for the stored flux fields.
pub fn compute_coefficients(
    state: &BeamState,
    geom: &InitialGeometry,
    mesh: &BeamMesh,
    material: &Material,
) -> Vec<CoefficientSet> {
    (0..mesh.cells)
        .map(|i| {
            coefficient_set(
                &state.lambda_t_c(geom, i),
                (state.rprime_f[i] + state.rprime_f[i + 1]) * 0.5,
                (state.gamma_f[i] + state.gamma_f[i + 1]) * 0.5,
                (state.k_f[i] + state.k_f[i + 1]) * 0.5,
                material,
            )
        })
        .collect()
}

/// One assembled 6x6-block row: A_W dX_{C-1} + A_C dX_C + A_E dX_{C+1} = R.
#[derive(Clone, Copy, Debug)]
pub struct BlockRow {
    pub a_w: Mat6,
    pub a_c: Mat6,
    pub a_e: Mat6,
    pub r: Vec6,
}

impl BlockRow {
    pub const ZERO: BlockRow = BlockRow {
        a_w: Mat6::ZERO,
        a_c: Mat6::ZERO,
        a_e: Mat6::ZERO,
        r: Vec6::ZERO,
    };
}

/// The full Newton system, one block row per cell.
#[derive(Clone, Debug)]
pub struct BlockTridiagonalSystem {
    pub rows: Vec<BlockRow>,
}

/// 3x3 stencil blocks of one balance-equation family at one cell:
/// index 0 = west neighbour, 1 = centre, 2 = east neighbour.
#[derive(Clone, Copy, Debug)]
pub struct RowStencil {
    pub w: [Mat3; 3],
    pub psi: [Mat3; 3],
    pub rhs: Vec3,
}

impl RowStencil {
    const ZERO: RowStencil = RowStencil {
        w: [Mat3::ZERO; 3],
        psi: [Mat3::ZERO; 3],
        rhs: Vec3::ZERO,
    };
}

/// Contribution of one interior face to the row of the cell that owns it,
/// split by target column (the neighbour across the face, and the centre).
struct FaceHalf {
    neigh_w: Mat3,
    neigh_psi: Mat3,
    centre_w: Mat3,
    centre_psi: Mat3,
    rhs: Vec3,
}

/// Force-flux contribution of a face with outward orientation `q`
/// (+1 east, -1 west), neighbour increment-interpolation weight `g`, and
/// derivative stencil distance `l`. The set is the face's own; its `c_expw`
/// is the stored face flux, so the rhs and the matrix linearise the same
/// compact balance.
fn force_face_half(set: &CoefficientSet, q: f64, g: f64, l: f64) -> FaceHalf {
    let grad = set.c_ww * (1.0 / l);
    FaceHalf {
        neigh_w: grad,
        neigh_psi: set.c_wpsi * (q * g),
        centre_w: -grad,
        centre_psi: set.c_wpsi * (q * (1.0 - g)),
        rhs: set.c_expw * (-q),
    }
}

/// Moment-flux plus arm-term contribution of a face; `arm` is the moment-arm
/// half-length l_c / 2, which enters with + at both faces.
fn moment_face_half(set: &CoefficientSet, q: f64, g: f64, l: f64, arm: f64) -> FaceHalf {
    let grad_psi = set.c_mpsi2 * (1.0 / l);
    let arm_w = set.c_mw * (q * arm / l);
    FaceHalf {
        neigh_w: arm_w,
        neigh_psi: grad_psi + set.c_mpsi * (q * g) + set.c_mwpsi * (arm * g),
        centre_w: -arm_w,
        centre_psi: -grad_psi + set.c_mpsi * (q * (1.0 - g)) + set.c_mwpsi * (arm * (1.0 - g)),
        rhs: set.c_expm * (-q) - set.c_expmw * arm,
    }
}

fn accumulate(stencil: &mut RowStencil, half: &FaceHalf, neighbour_slot: usize) {
    stencil.w[neighbour_slot] += half.neigh_w;
    stencil.psi[neighbour_slot] += half.neigh_psi;
    stencil.w[1] += half.centre_w;
    stencil.psi[1] += half.centre_psi;
    stencil.rhs += half.rhs;
}

/// Force-balance row of one cell: interior-face fluxes plus the distributed
/// load source. `face_sets` holds one set per face (m + 1), evaluated from
/// the face-stored fields; cell i owns faces i (west) and i + 1 (east).
/// Boundary faces contribute nothing here; the boundary patch supplies them.
pub fn assemble_force_row(
    face_sets: &[CoefficientSet],
    mesh: &BeamMesh,
    f_c: Vec3,
    cell: usize,
) -> RowStencil {
    let m = mesh.cells;
    let mut st = RowStencil::ZERO;
    if cell + 1 < m {
        let g = mesh.gamma_e[cell];
        let half = force_face_half(&face_sets[cell + 1], 1.0, g, mesh.l_e[cell]);
        accumulate(&mut st, &half, 2);
    }
    if cell > 0 {
        let g = mesh.gamma_w[cell];
        let half = force_face_half(&face_sets[cell], -1.0, g, mesh.l_w[cell]);
        accumulate(&mut st, &half, 0);
    }
    st.rhs += f_c * (-mesh.l_c);
    st
}

/// Moment-balance row of one cell: interior-face moment fluxes, the
/// moment-arm terms, and the distributed torque source.
pub fn assemble_moment_row(
    face_sets: &[CoefficientSet],
    mesh: &BeamMesh,
    t_c: Vec3,
    cell: usize,
) -> RowStencil {
    let m = mesh.cells;
    let arm = 0.5 * mesh.l_c;
    let mut st = RowStencil::ZERO;
    if cell + 1 < m {
        let g = mesh.gamma_e[cell];
        let half = moment_face_half(&face_sets[cell + 1], 1.0, g, mesh.l_e[cell], arm);
        accumulate(&mut st, &half, 2);
    }
    if cell > 0 {
        let g = mesh.gamma_w[cell];
        let half = moment_face_half(&face_sets[cell], -1.0, g, mesh.l_w[cell], arm);
        accumulate(&mut st, &half, 0);
    }
    st.rhs += t_c * (-mesh.l_c);
    st
}

/// Assembles the full block-tridiagonal system: face-evaluated interior
/// stencils for every cell, distributed sources, and the two boundary
/// patches. `f_c` and `t_c` are the load-factor-scaled distributed force
/// (N/m) and torque (N) per cell.
pub fn assemble_system(
    face_sets: &[CoefficientSet],
    mesh: &BeamMesh,
    f_c: &[Vec3],
    t_c: &[Vec3],
    west: &BoundaryPatch,
    east: &BoundaryPatch,
) -> BlockTridiagonalSystem {
    let m = mesh.cells;
    debug_assert_eq!(face_sets.len(), m + 1);
    debug_assert_eq!(f_c.len(), m);
    debug_assert_eq!(t_c.len(), m);

    let mut rows = alloc::vec![BlockRow::ZERO; m];
    for (i, row) in rows.iter_mut().enumerate() {
        let force = assemble_force_row(face_sets, mesh, f_c[i], i);
        let moment = assemble_moment_row(face_sets, mesh, t_c[i], i);
        for (slot, target) in [&mut row.a_w, &mut row.a_c, &mut row.a_e]
            .into_iter()
            .enumerate()
        {
            target.add_block(0, 0, &force.w[slot]);
            target.add_block(0, 3, &force.psi[slot]);
            target.add_block(3, 0, &moment.w[slot]);
            target.add_block(3, 3, &moment.psi[slot]);
        }
        row.r += Vec6::from_parts(force.rhs, moment.rhs);
    }

    rows[0].a_c += west.a_c;
    rows[0].r += west.r;
    rows[m - 1].a_c += east.a_c;
    rows[m - 1].r += east.r;

    BlockTridiagonalSystem { rows }
}
