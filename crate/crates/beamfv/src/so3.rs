//! Rotation algebra on SO(3) with the rotation-vector parametrisation.
//!
//! Rotations are stored as proper orthonormal 3x3 matrices. The exponential
//! map uses the Rodrigues closed form, the differential of the exponential is
//! the tangent operator `T`; both switch to truncated Taylor series below
//! [`SMALL_ANGLE`] where the closed-form coefficients lose accuracy.

use crate::math;
use core::fmt;
use core::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

/// Angle (rad) below which Rodrigues and tangent coefficients switch to
/// their quartic Taylor series. At 1e-4 the series truncation error is below
/// 1e-25 while the closed forms still carry full double precision, so both
/// branches agree to machine accuracy at the switch point.
pub const SMALL_ANGLE: f64 = 1e-4;

/// Frobenius defect `|R^T R - I|_F` accepted when validating a rotation.
pub const ORTHONORMALITY_TOL: f64 = 1e-12;

/// Errors from rotation construction and the tangent operator domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum So3Error {
    /// Candidate matrix is not orthonormal within [`ORTHONORMALITY_TOL`].
    NotOrthonormal { defect: f64 },
    /// Candidate matrix is orthonormal but has determinant near -1.
    NotProperRotation { det: f64 },
    /// Tangent operator requested at or beyond the chart boundary |psi| >= pi.
    TangentDomain { angle: f64 },
}

impl fmt::Display for So3Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            So3Error::NotOrthonormal { defect } => {
                write!(f, "matrix is not orthonormal (defect {defect:e})")
            }
            So3Error::NotProperRotation { det } => {
                write!(f, "matrix is not a proper rotation (det {det})")
            }
            So3Error::TangentDomain { angle } => {
                write!(f, "rotation vector magnitude {angle} outside tangent domain [0, pi)")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for So3Error {}

/// Column vector in R^3.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Vec3(pub [f64; 3]);

impl Vec3 {
    pub const ZERO: Self = Vec3([0.0; 3]);
    pub const E1: Self = Vec3([1.0, 0.0, 0.0]);
    pub const E2: Self = Vec3([0.0, 1.0, 0.0]);
    pub const E3: Self = Vec3([0.0, 0.0, 1.0]);

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3([x, y, z])
    }

    #[inline]
    pub fn dot(self, rhs: Self) -> f64 {
        self.0[0] * rhs.0[0] + self.0[1] * rhs.0[1] + self.0[2] * rhs.0[2]
    }

    #[inline]
    pub fn cross(self, rhs: Self) -> Self {
        let a = self.0;
        let b = rhs.0;
        Vec3([
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ])
    }

    #[inline]
    pub fn norm(self) -> f64 {
        math::sqrt(self.dot(self))
    }

    /// Outer product `self * rhs^T`.
    pub fn outer(self, rhs: Self) -> Mat3 {
        let mut m = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[i] * rhs.0[j];
            }
        }
        m
    }
}

impl Index<usize> for Vec3 {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Vec3 {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.0[i]
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    #[inline]
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1], self.0[2] + rhs.0[2]])
    }
}

impl AddAssign for Vec3 {
    #[inline]
    fn add_assign(&mut self, rhs: Vec3) {
        *self = *self + rhs;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    #[inline]
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1], self.0[2] - rhs.0[2]])
    }
}

impl SubAssign for Vec3 {
    #[inline]
    fn sub_assign(&mut self, rhs: Vec3) {
        *self = *self - rhs;
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    #[inline]
    fn neg(self) -> Vec3 {
        Vec3([-self.0[0], -self.0[1], -self.0[2]])
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    #[inline]
    fn mul(self, s: f64) -> Vec3 {
        Vec3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

/// Row-major 3x3 matrix.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

impl Mat3 {
    pub const ZERO: Self = Mat3([[0.0; 3]; 3]);
    #[rustfmt::skip]
    pub const IDENTITY: Self = Mat3([
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
    ]);

    /// Diagonal matrix with the entries of `d`.
    pub fn diag(d: Vec3) -> Self {
        let mut m = Mat3::ZERO;
        m.0[0][0] = d[0];
        m.0[1][1] = d[1];
        m.0[2][2] = d[2];
        m
    }

    pub fn transpose(self) -> Self {
        let mut m = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[j][i];
            }
        }
        m
    }

    pub fn trace(self) -> f64 {
        self.0[0][0] + self.0[1][1] + self.0[2][2]
    }

    pub fn det(self) -> f64 {
        let m = self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    pub fn frobenius(self) -> f64 {
        let mut s = 0.0;
        for row in self.0 {
            for v in row {
                s += v * v;
            }
        }
        math::sqrt(s)
    }

    pub fn column(self, j: usize) -> Vec3 {
        Vec3([self.0[0][j], self.0[1][j], self.0[2][j]])
    }
}

impl Index<usize> for Mat3 {
    type Output = [f64; 3];
    #[inline]
    fn index(&self, i: usize) -> &[f64; 3] {
        &self.0[i]
    }
}

impl IndexMut<usize> for Mat3 {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut [f64; 3] {
        &mut self.0[i]
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, rhs: Mat3) -> Mat3 {
        let mut m = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[i][j] + rhs.0[i][j];
            }
        }
        m
    }
}

impl AddAssign for Mat3 {
    fn add_assign(&mut self, rhs: Mat3) {
        *self = *self + rhs;
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, rhs: Mat3) -> Mat3 {
        let mut m = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] = self.0[i][j] - rhs.0[i][j];
            }
        }
        m
    }
}

impl SubAssign for Mat3 {
    fn sub_assign(&mut self, rhs: Mat3) {
        *self = *self - rhs;
    }
}

impl Neg for Mat3 {
    type Output = Mat3;
    fn neg(self) -> Mat3 {
        Mat3::ZERO - self
    }
}

impl Mul<f64> for Mat3 {
    type Output = Mat3;
    fn mul(self, s: f64) -> Mat3 {
        let mut m = self;
        for i in 0..3 {
            for j in 0..3 {
                m.0[i][j] *= s;
            }
        }
        m
    }
}

impl Mul<Vec3> for Mat3 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        let mut r = Vec3::ZERO;
        for i in 0..3 {
            r.0[i] = self.0[i][0] * v.0[0] + self.0[i][1] * v.0[1] + self.0[i][2] * v.0[2];
        }
        r
    }
}

impl Mul<Mat3> for Mat3 {
    type Output = Mat3;
    fn mul(self, rhs: Mat3) -> Mat3 {
        let mut m = Mat3::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for (k, rhs_row) in rhs.0.iter().enumerate() {
                    s += self.0[i][k] * rhs_row[j];
                }
                m.0[i][j] = s;
            }
        }
        m
    }
}

/// Skew-symmetric matrix of `v`, so that `hat(v) * u == v.cross(u)`.
#[rustfmt::skip]
pub fn hat(v: Vec3) -> Mat3 {
    let [x, y, z] = v.0;
    Mat3([
        [0.0,  -z,   y],
        [ z,  0.0,  -x],
        [-y,   x,  0.0],
    ])
}

/// Axial vector of the skew-symmetric part of `m`.
///
/// The symmetric part is discarded first, so `vee` is well-defined for
/// near-skew matrices produced by finite differences.
pub fn vee(m: Mat3) -> Vec3 {
    let a = (m - m.transpose()) * 0.5;
    Vec3([a.0[2][1], a.0[0][2], a.0[1][0]])
}

/// Frobenius norm of `R^T R - I`.
pub fn orthonormality_defect(m: &Mat3) -> f64 {
    (m.transpose() * *m - Mat3::IDENTITY).frobenius()
}

/// Proper orthonormal matrix; the invariants are enforced at construction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationMatrix(Mat3);

impl RotationMatrix {
    pub const IDENTITY: Self = RotationMatrix(Mat3::IDENTITY);

    /// Validates orthonormality (`|R^T R - I|_F <= 1e-12`) and determinant
    /// (`|det - 1| <= 1e-12`).
    pub fn new(m: Mat3) -> Result<Self, So3Error> {
        let defect = orthonormality_defect(&m);
        if !(defect <= ORTHONORMALITY_TOL) {
            return Err(So3Error::NotOrthonormal { defect });
        }
        let det = m.det();
        if !(math::abs(det - 1.0) <= ORTHONORMALITY_TOL) {
            return Err(So3Error::NotProperRotation { det });
        }
        Ok(RotationMatrix(m))
    }

    /// For products of already-validated rotations, which stay orthonormal to
    /// machine precision.
    #[inline]
    pub(crate) fn from_mat_unchecked(m: Mat3) -> Self {
        RotationMatrix(m)
    }

    #[inline]
    pub fn mat(&self) -> &Mat3 {
        &self.0
    }

    /// Inverse rotation.
    #[inline]
    pub fn transpose(self) -> Self {
        RotationMatrix(self.0.transpose())
    }
}

impl Mul<RotationMatrix> for RotationMatrix {
    type Output = RotationMatrix;
    #[inline]
    fn mul(self, rhs: RotationMatrix) -> RotationMatrix {
        RotationMatrix(self.0 * rhs.0)
    }
}

impl Mul<Vec3> for RotationMatrix {
    type Output = Vec3;
    #[inline]
    fn mul(self, v: Vec3) -> Vec3 {
        self.0 * v
    }
}

/// Rodrigues coefficients (sin t / t, (1 - cos t) / t^2) by closed form.
///
/// The second uses `2 sin^2(t/2)` to avoid the `1 - cos` cancellation.
pub(crate) fn exp_coeffs_closed(t: f64) -> (f64, f64) {
    let s_half = math::sin(0.5 * t);
    (math::sin(t) / t, 2.0 * s_half * s_half / (t * t))
}

pub(crate) fn exp_coeffs_series(t: f64) -> (f64, f64) {
    let t2 = t * t;
    let a = 1.0 - t2 / 6.0 * (1.0 - t2 / 20.0);
    let b = 0.5 - t2 / 24.0 * (1.0 - t2 / 30.0);
    (a, b)
}

/// Exponential map: rotation by angle `|psi|` about the axis `psi / |psi|`.
pub fn exp_so3(psi: Vec3) -> RotationMatrix {
    let t = psi.norm();
    let (a, b) = if t < SMALL_ANGLE {
        exp_coeffs_series(t)
    } else {
        exp_coeffs_closed(t)
    };
    let k = hat(psi);
    RotationMatrix(Mat3::IDENTITY + k * a + (k * k) * b)
}

/// Tangent coefficients (sin t / t, (1 - cos t) / t^2, (t - sin t) / t^3).
pub(crate) fn tangent_coeffs_closed(t: f64) -> (f64, f64, f64) {
    let (a, b) = exp_coeffs_closed(t);
    (a, b, (t - math::sin(t)) / (t * t * t))
}

pub(crate) fn tangent_coeffs_series(t: f64) -> (f64, f64, f64) {
    let (a, b) = exp_coeffs_series(t);
    let t2 = t * t;
    let c = 1.0 / 6.0 - t2 / 120.0 * (1.0 - t2 / 42.0);
    (a, b, c)
}

/// Tangent operator of the exponential map,
/// `T(psi) = a I + b hat(psi) + c psi psi^T`.
///
/// Defined on the chart `|psi| < pi`; larger increments must be re-chunked by
/// the caller.
pub fn tangent(psi: Vec3) -> Result<Mat3, So3Error> {
    let t = psi.norm();
    if t >= core::f64::consts::PI {
        return Err(So3Error::TangentDomain { angle: t });
    }
    let (a, b, c) = if t < SMALL_ANGLE {
        tangent_coeffs_series(t)
    } else {
        tangent_coeffs_closed(t)
    };
    Ok(Mat3::IDENTITY * a + hat(psi) * b + psi.outer(psi) * c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    fn assert_mat_close(a: &Mat3, b: &Mat3, tol: f64) {
        assert!((*a - *b).frobenius() <= tol, "{a:?}\nvs\n{b:?}\n(tol {tol})");
    }

    /// Matrix exponential by scaled-and-squared Taylor series; independent of
    /// the Rodrigues closed form.
    fn exp_series_oracle(m: Mat3) -> Mat3 {
        let mut scaled = m;
        let mut squarings = 0u32;
        while scaled.frobenius() > 0.25 {
            scaled = scaled * 0.5;
            squarings += 1;
        }
        let mut sum = Mat3::IDENTITY;
        let mut term = Mat3::IDENTITY;
        for k in 1..=24 {
            term = term * scaled * (1.0 / k as f64);
            sum += term;
        }
        for _ in 0..squarings {
            sum = sum * sum;
        }
        sum
    }

    fn vec3_strategy(mag: f64) -> impl Strategy<Value = Vec3> {
        (-mag..mag, -mag..mag, -mag..mag).prop_map(|(x, y, z)| Vec3::new(x, y, z))
    }

    #[test]
    fn hat_maps_to_cross_product() {
        let a = Vec3::new(0.3, -1.2, 0.7);
        let b = Vec3::new(-0.5, 0.4, 2.0);
        let lhs = hat(a) * b;
        let rhs = a.cross(b);
        assert!((lhs - rhs).norm() <= 1e-15);
    }

    #[test]
    fn vee_discards_symmetric_part() {
        let sym = Mat3([[1.0, 2.0, 3.0], [2.0, 4.0, 5.0], [3.0, 5.0, 6.0]]);
        assert_eq!(vee(sym), Vec3::ZERO);
    }

    #[test]
    fn exp_of_zero_is_identity() {
        assert_eq!(exp_so3(Vec3::ZERO).mat(), &Mat3::IDENTITY);
    }

    #[test]
    fn exp_quarter_turn_about_z_maps_e1_to_e2() {
        let r = exp_so3(Vec3::new(0.0, 0.0, core::f64::consts::FRAC_PI_2));
        assert!((r * Vec3::E1 - Vec3::E2).norm() <= 1e-15);
    }

    #[test]
    fn exp_trace_matches_series_oracle() {
        let psi = Vec3::new(0.3, -0.4, 0.5);
        let r = exp_so3(psi);
        // 1 + 2 cos(sqrt(0.5))
        assert_close(r.mat().trace(), 2.520_489_194_151_260_3, 1e-12);
        let oracle = exp_series_oracle(hat(psi));
        assert_mat_close(r.mat(), &oracle, 1e-13);
    }

    #[test]
    fn exp_branches_agree_at_the_switch_angle() {
        for t in [0.97e-4, 1.0e-4, 1.03e-4] {
            let psi = Vec3::new(0.6, -0.48, 0.64) * t; // unit axis times t
            let (ac, bc) = exp_coeffs_closed(t);
            let (as_, bs) = exp_coeffs_series(t);
            let k = hat(psi);
            let closed = Mat3::IDENTITY + k * ac + (k * k) * bc;
            let series = Mat3::IDENTITY + k * as_ + (k * k) * bs;
            assert_mat_close(&closed, &series, 1e-14);

            let (_, _, cc) = tangent_coeffs_closed(t);
            let (_, _, cs) = tangent_coeffs_series(t);
            let closed_t = Mat3::IDENTITY * ac + k * bc + psi.outer(psi) * cc;
            let series_t = Mat3::IDENTITY * as_ + k * bs + psi.outer(psi) * cs;
            assert_mat_close(&closed_t, &series_t, 1e-14);
        }
    }

    #[test]
    fn tangent_at_zero_is_identity() {
        assert_mat_close(&tangent(Vec3::ZERO).unwrap(), &Mat3::IDENTITY, 1e-15);
    }

    #[test]
    fn tangent_near_pi_about_z() {
        let t = tangent(Vec3::new(0.0, 0.0, core::f64::consts::PI - 1e-9)).unwrap();
        let two_over_pi = 2.0 / core::f64::consts::PI;
        #[rustfmt::skip]
        let expected = Mat3([
            [0.0,         -two_over_pi, 0.0],
            [two_over_pi,  0.0,         0.0],
            [0.0,          0.0,         1.0],
        ]);
        assert_mat_close(&t, &expected, 1e-8);
    }

    #[test]
    fn tangent_rejects_angles_at_and_beyond_pi() {
        let pi = core::f64::consts::PI;
        for mag in [pi, pi + 0.1, 2.0 * pi] {
            let err = tangent(Vec3::new(0.0, mag, 0.0)).unwrap_err();
            assert!(matches!(err, So3Error::TangentDomain { .. }), "{err}");
        }
    }

    /// First-order check of the tangent operator: for a rotation-vector path
    /// psi(s), the material curvature of exp(hat(psi)) is T(psi)^T psi'.
    #[test]
    fn tangent_transpose_gives_material_curvature_rate() {
        let psi = Vec3::new(0.4, -0.2, 0.9);
        let dpsi = Vec3::new(-0.3, 0.11, 0.23);
        let eps = 1e-6;
        let r_plus = exp_so3(psi + dpsi * eps);
        let r_minus = exp_so3(psi - dpsi * eps);
        let deriv = (*r_plus.mat() - *r_minus.mat()) * (0.5 / eps);
        let k_fd = vee(exp_so3(psi).mat().transpose() * deriv);
        let k_t = tangent(psi).unwrap().transpose() * dpsi;
        assert!((k_fd - k_t).norm() <= 1e-9, "{k_fd:?} vs {k_t:?}");
    }

    #[test]
    fn rotation_validation_rejects_defective_matrices() {
        let mut m = Mat3::IDENTITY;
        m[0][0] = 1.0 + 1e-6;
        assert!(matches!(
            RotationMatrix::new(m),
            Err(So3Error::NotOrthonormal { .. })
        ));

        let mut reflect = Mat3::IDENTITY;
        reflect[2][2] = -1.0;
        assert!(matches!(
            RotationMatrix::new(reflect),
            Err(So3Error::NotProperRotation { .. })
        ));

        assert!(RotationMatrix::new(*exp_so3(Vec3::new(1.0, 2.0, -0.5)).mat()).is_ok());
    }

    #[test]
    fn composed_updates_do_not_drift_off_the_manifold() {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let mut r = RotationMatrix::IDENTITY;
        for _ in 0..10_000 {
            let psi = Vec3::new(
                rng.gen_range(-0.3..0.3),
                rng.gen_range(-0.3..0.3),
                rng.gen_range(-0.3..0.3),
            );
            r = exp_so3(psi) * r;
        }
        let defect = orthonormality_defect(r.mat());
        assert!(defect <= 1e-10, "drift defect {defect:e}");
        assert!((r.mat().det() - 1.0).abs() <= 1e-10);
    }

    proptest! {
        #[test]
        fn hat_vee_roundtrip(v in vec3_strategy(10.0)) {
            let back = vee(hat(v));
            prop_assert!((back - v).norm() <= 1e-12 * (1.0 + v.norm()));
        }

        #[test]
        fn exp_is_orthonormal_with_unit_determinant(v in vec3_strategy(12.0)) {
            let r = exp_so3(v);
            prop_assert!(orthonormality_defect(r.mat()) <= 1e-13);
            prop_assert!((r.mat().det() - 1.0).abs() <= 1e-13);
        }

        #[test]
        fn exp_matches_series_oracle(v in vec3_strategy(6.0)) {
            let r = exp_so3(v);
            let oracle = exp_series_oracle(hat(v));
            prop_assert!((*r.mat() - oracle).frobenius() <= 1e-13);
        }

        #[test]
        fn exp_inverse_is_exp_of_negation(v in vec3_strategy(6.0)) {
            let r = exp_so3(v) * exp_so3(-v);
            prop_assert!((*r.mat() - Mat3::IDENTITY).frobenius() <= 1e-13);
        }
    }
}
