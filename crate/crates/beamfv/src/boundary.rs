//! Boundary conditions at the two end faces.
//!
//! Each end carries one constraint per unknown family, and the families are
//! handled independently when the adjacent cell's Newton row is assembled
//! ([`build_patch`]): a Dirichlet family keeps the two-point gradient
//! coupling to the cell and moves every prescribed-increment term to the
//! right-hand side, while a Neumann family replaces the face flux by the
//! applied load outright, generating no matrix coefficients for that face.
//!
//! After the linear solve the face increments are recovered from the
//! adjacent cell's increments through affine maps ([`build_maps`]):
//!
//! ```text
//! dpsi_b = S_psi dpsi_C + c_psi
//! dw_b   = S_w dw_C + T_wpsi dpsi_b + c_w
//! ```
//!
//! Dirichlet constraints pin the face increment (S = 0, c = remaining ramp
//! increment). Neumann constraints choose the face increment so that the
//! linearised face flux equals the applied load; substituting the recovered
//! increments back into the linearised flux reproduces that load, so the
//! face update is consistent with the flux the assembled row assumed.

use crate::assembly::{solve3_mat, CoefficientSet, Mat6, Vec6};
use crate::so3::{Mat3, Vec3};
use core::fmt;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BoundaryError {
    /// The rotation-family block C_mpsi2/dx + q C_mpsi is not invertible.
    SingularRotationBlock,
    /// The translation-family block C_ww/dx is not invertible.
    SingularTranslationBlock,
}

impl fmt::Display for BoundaryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryError::SingularRotationBlock => {
                write!(f, "boundary rotation block is singular; reduce the cell size")
            }
            BoundaryError::SingularTranslationBlock => {
                write!(f, "boundary translation block is singular")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for BoundaryError {}

/// One family's constraint at one end, resolved for the current Newton
/// iteration: Dirichlet carries the increment still to impose (target minus
/// accumulated), Neumann the applied flux at the current load factor.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Constraint {
    Dirichlet { remaining: Vec3 },
    Neumann { applied: Vec3 },
}

/// Both families' constraints at one end.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EndTargets {
    pub translation: Constraint,
    pub rotation: Constraint,
}

/// Affine recovery maps of one boundary face.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryMaps {
    pub s_psi: Mat3,
    pub c_psi: Vec3,
    pub s_w: Mat3,
    pub t_wpsi: Mat3,
    pub c_w: Vec3,
}

/// Builds the recovery maps for one end. `q` is the outward orientation
/// (+1 east, -1 west) and `dx` the face-to-centre distance l_c / 2. `set` is
/// the coefficient set evaluated at the boundary face.
pub fn build_maps(
    targets: &EndTargets,
    set: &CoefficientSet,
    q: f64,
    dx: f64,
) -> Result<BoundaryMaps, BoundaryError> {
    let inv_dx = 1.0 / dx;

    let (s_psi, c_psi) = match targets.rotation {
        Constraint::Dirichlet { remaining } => (Mat3::ZERO, remaining),
        Constraint::Neumann { applied } => {
            // demand dm_b = applied - m*:
            // (C_mpsi2/dx + q C_mpsi) dpsi_b = C_mpsi2/dx dpsi_C + q (applied - m*)
            let d = set.c_mpsi2 * inv_dx + set.c_mpsi * q;
            let rhs_mat = set.c_mpsi2 * inv_dx;
            let s = solve3_mat(d, rhs_mat).ok_or(BoundaryError::SingularRotationBlock)?;
            let c = crate::assembly::solve3(d, (applied - set.c_expm) * q)
                .ok_or(BoundaryError::SingularRotationBlock)?;
            (s, c)
        }
    };

    let (s_w, t_wpsi, c_w) = match targets.translation {
        Constraint::Dirichlet { remaining } => (Mat3::ZERO, Mat3::ZERO, remaining),
        Constraint::Neumann { applied } => {
            // demand dn_b = applied - n*:
            // C_ww (dw_b - dw_C)/dx = q (applied - n*) - q C_wpsi dpsi_b
            let a = set.c_ww * inv_dx;
            let t = solve3_mat(a, set.c_wpsi * (-q))
                .ok_or(BoundaryError::SingularTranslationBlock)?;
            let c = crate::assembly::solve3(a, (applied - set.c_expw) * q)
                .ok_or(BoundaryError::SingularTranslationBlock)?;
            (Mat3::IDENTITY, t, c)
        }
    };

    Ok(BoundaryMaps {
        s_psi,
        c_psi,
        s_w,
        t_wpsi,
        c_w,
    })
}

/// Recovers the boundary-face increments from the solved adjacent-cell
/// increments, for the state update.
pub fn recover_boundary_kinematics(
    maps: &BoundaryMaps,
    dw_c: Vec3,
    dpsi_c: Vec3,
) -> (Vec3, Vec3) {
    let dpsi_b = maps.s_psi * dpsi_c + maps.c_psi;
    let dw_b = maps.s_w * dw_c + maps.t_wpsi * dpsi_b + maps.c_w;
    (dw_b, dpsi_b)
}

/// One end's contribution to the Newton system: a block added to the
/// adjacent cell's diagonal and a right-hand side added to its residual row.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryPatch {
    pub a_c: Mat6,
    pub r: Vec6,
}

/// Assembles the boundary-face contribution to the adjacent cell's row.
///
/// `set` is the coefficient set evaluated at the boundary face, `rprime_b`
/// the current mean-line tangent there, `q` the outward orientation (+1
/// east, -1 west), `dx` the face-to-centre distance, and `arm` the
/// moment-arm half-length l_c / 2.
///
/// A Dirichlet family keeps the two-point gradient coupling to the cell and
/// moves the prescribed face increment to the right-hand side. A Neumann
/// family replaces the face flux by the applied load (the force flux in the
/// force row and in the moment-arm term, the moment flux in the moment row),
/// so it contributes no matrix coefficients; cross terms carrying its
/// unknown face increment are left to the post-solve recovery.
pub fn build_patch(
    targets: &EndTargets,
    set: &CoefficientSet,
    rprime_b: Vec3,
    q: f64,
    dx: f64,
    arm: f64,
) -> BoundaryPatch {
    let mut a_c = Mat6::ZERO;
    let mut r_w = Vec3::ZERO;
    let mut r_psi = Vec3::ZERO;
    let dpsi_b = match targets.rotation {
        Constraint::Dirichlet { remaining } => Some(remaining),
        Constraint::Neumann { .. } => None,
    };

    match targets.translation {
        // q n_b -> q n_bar; arm (r' x n)_b -> arm (r'* x n_bar)
        Constraint::Neumann { applied } => {
            r_w -= applied * q;
            r_psi -= rprime_b.cross(applied) * arm;
        }
        // q n_b = q n* + C_ww (dw_b - dw_C)/dx + q C_wpsi dpsi_b
        // arm (r' x n)_b = arm [(r' x n)* + q C_mw (dw_b - dw_C)/dx
        //                       + C_mwpsi dpsi_b]
        Constraint::Dirichlet { remaining } => {
            let grad = set.c_ww * (1.0 / dx);
            a_c.add_block(0, 0, &(-grad));
            r_w -= set.c_expw * q + grad * remaining;
            let arm_grad = set.c_mw * (arm * q / dx);
            a_c.add_block(3, 0, &(-arm_grad));
            r_psi -= set.c_expmw * arm + arm_grad * remaining;
            if let Some(dpsi_b) = dpsi_b {
                r_w -= (set.c_wpsi * dpsi_b) * q;
                r_psi -= (set.c_mwpsi * dpsi_b) * arm;
            }
        }
    }

    match targets.rotation {
        // q m_b -> q m_bar
        Constraint::Neumann { applied } => {
            r_psi -= applied * q;
        }
        // q m_b = q m* + C_mpsi2 (dpsi_b - dpsi_C)/dx + q C_mpsi dpsi_b
        Constraint::Dirichlet { remaining } => {
            let grad = set.c_mpsi2 * (1.0 / dx);
            a_c.add_block(3, 3, &(-grad));
            r_psi -= set.c_expm * q + grad * remaining + (set.c_mpsi * remaining) * q;
        }
    }

    BoundaryPatch {
        a_c,
        r: Vec6::from_parts(r_w, r_psi),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{coefficient_set, face_coefficient_sets};
    use crate::geometry::{build_uniform_mesh, make_straight, D_EAST, D_WEST};
    use crate::so3::{exp_so3, RotationMatrix};
    use crate::state::{update_state, BeamState, FaceIncrements, Material};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn test_material() -> Material {
        Material::new(1.0e4, 5.0e3, 5.0e3, 100.0, 100.0, 100.0).unwrap()
    }

    fn rest_set(material: &Material) -> CoefficientSet {
        coefficient_set(
            &RotationMatrix::IDENTITY,
            Vec3::E1,
            Vec3::ZERO,
            Vec3::ZERO,
            material,
        )
    }

    #[test]
    fn dirichlet_maps_pin_the_face_increments() {
        let material = test_material();
        let set = rest_set(&material);
        let remaining_w = Vec3::new(0.1, -0.2, 0.3);
        let remaining_psi = Vec3::new(-0.4, 0.5, 0.6);
        let targets = EndTargets {
            translation: Constraint::Dirichlet {
                remaining: remaining_w,
            },
            rotation: Constraint::Dirichlet {
                remaining: remaining_psi,
            },
        };
        let maps = build_maps(&targets, &set, D_WEST, 0.5).unwrap();
        let (dw_b, dpsi_b) =
            recover_boundary_kinematics(&maps, Vec3::new(9.0, 9.0, 9.0), Vec3::new(-3.0, 1.0, 2.0));
        assert_eq!(dw_b, remaining_w);
        assert_eq!(dpsi_b, remaining_psi);
    }

    #[test]
    fn stress_free_neumann_end_follows_the_cell_rigidly() {
        let material = test_material();
        let set = rest_set(&material);
        let targets = EndTargets {
            translation: Constraint::Neumann { applied: Vec3::ZERO },
            rotation: Constraint::Neumann { applied: Vec3::ZERO },
        };
        let dx = 0.5;
        let dpsi_c = Vec3::new(0.02, -0.01, 0.03);
        let dw_c = Vec3::new(0.4, 0.1, -0.2);

        // east: the face sits at +dx e1 from the centre, so it moves by the
        // lever arm dpsi x (dx e1) on top of the cell displacement
        let maps = build_maps(&targets, &set, D_EAST, dx).unwrap();
        let (dw_b, dpsi_b) = recover_boundary_kinematics(&maps, dw_c, dpsi_c);
        assert!((dpsi_b - dpsi_c).norm() <= 1e-14);
        let lever = dpsi_c.cross(Vec3::E1 * dx);
        assert!((dw_b - (dw_c + lever)).norm() <= 1e-14);

        // west: the lever points the other way
        let maps = build_maps(&targets, &set, D_WEST, dx).unwrap();
        let (dw_b, dpsi_b) = recover_boundary_kinematics(&maps, dw_c, dpsi_c);
        assert!((dpsi_b - dpsi_c).norm() <= 1e-14);
        assert!((dw_b - (dw_c - lever)).norm() <= 1e-14);
    }

    #[test]
    fn rest_state_end_moment_rotates_the_face_by_the_compliance() {
        // straight beam at rest, applied m = (0,0,5), EI_3 = 100, dx = 0.5:
        // dpsi_b = dx * m / EI_3 = (0, 0, 0.025)
        let material = test_material();
        let set = rest_set(&material);
        let targets = EndTargets {
            translation: Constraint::Neumann { applied: Vec3::ZERO },
            rotation: Constraint::Neumann {
                applied: Vec3::new(0.0, 0.0, 5.0),
            },
        };
        let maps = build_maps(&targets, &set, D_EAST, 0.5).unwrap();
        let (_, dpsi_b) = recover_boundary_kinematics(&maps, Vec3::ZERO, Vec3::ZERO);
        assert!((dpsi_b - Vec3::new(0.0, 0.0, 0.025)).norm() <= 1e-14);
    }

    #[test]
    fn hinged_end_pins_translation_and_frees_rotation() {
        let material = test_material();
        let set = rest_set(&material);
        let targets = EndTargets {
            translation: Constraint::Dirichlet { remaining: Vec3::ZERO },
            rotation: Constraint::Neumann { applied: Vec3::ZERO },
        };
        let maps = build_maps(&targets, &set, D_WEST, 0.5).unwrap();
        let dpsi_c = Vec3::new(0.1, 0.2, -0.1);
        let (dw_b, dpsi_b) = recover_boundary_kinematics(&maps, Vec3::new(1.0, 1.0, 1.0), dpsi_c);
        assert_eq!(dw_b, Vec3::ZERO);
        assert!((dpsi_b - dpsi_c).norm() <= 1e-14);
    }

    /// Substituting the recovered increments back into the linearised flux
    /// expressions reproduces the applied loads.
    #[test]
    fn recovered_increments_reproduce_the_applied_fluxes() {
        let material = test_material();
        let mesh = build_uniform_mesh(6, 12.0).unwrap();
        let geom = make_straight(&mesh);
        let mut state = BeamState::initial(&mesh, &geom);
        // a bent, stretched state so every coefficient block is non-trivial
        let dw: alloc::vec::Vec<Vec3> = mesh
            .cell_centres
            .iter()
            .map(|&s| Vec3::new(0.01 * s, 0.03 * s * s / 12.0, -0.02 * s))
            .collect();
        let dpsi: alloc::vec::Vec<Vec3> = mesh
            .cell_centres
            .iter()
            .map(|&s| Vec3::new(0.04 * s, -0.02 * s, 0.05 * s))
            .collect();
        let bounds = FaceIncrements {
            dw_west: Vec3::ZERO,
            dpsi_west: Vec3::ZERO,
            dw_east: Vec3::new(0.12, 0.36, -0.24),
            dpsi_east: Vec3::new(0.48, -0.24, 0.6),
        };
        update_state(&mut state, &mesh, &geom, &material, &dw, &dpsi, &bounds).unwrap();
        let sets = face_coefficient_sets(&state, &geom, &material);

        let mut rng = ChaCha8Rng::seed_from_u64(0xb0b);
        for (q, face, dx) in [(D_WEST, 0usize, mesh.l_w[0]), (D_EAST, 6, mesh.l_e[5])] {
            let set = &sets[face];
            let nbar = Vec3::new(
                rng.gen_range(-50.0..50.0),
                rng.gen_range(-50.0..50.0),
                rng.gen_range(-50.0..50.0),
            );
            let mbar = Vec3::new(
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
            );
            let targets = EndTargets {
                translation: Constraint::Neumann { applied: nbar },
                rotation: Constraint::Neumann { applied: mbar },
            };
            let maps = build_maps(&targets, set, q, dx).unwrap();
            let dw_c = Vec3::new(0.3, -0.7, 0.2);
            let dpsi_c = Vec3::new(-0.1, 0.2, 0.4);
            let (dw_b, dpsi_b) = recover_boundary_kinematics(&maps, dw_c, dpsi_c);

            let dn = set.c_ww * ((dw_b - dw_c) * (q / dx)) + set.c_wpsi * dpsi_b;
            let dm = set.c_mpsi2 * ((dpsi_b - dpsi_c) * (q / dx)) + set.c_mpsi * dpsi_b;
            let n_lin = set.c_expw + dn;
            let m_lin = set.c_expm + dm;
            assert!(
                (n_lin - nbar).norm() <= 1e-10 * nbar.norm(),
                "force flux {n_lin:?} vs {nbar:?}"
            );
            assert!(
                (m_lin - mbar).norm() <= 1e-10 * mbar.norm(),
                "moment flux {m_lin:?} vs {mbar:?}"
            );
        }
    }

    #[test]
    fn neumann_faces_contribute_only_the_applied_fluxes_to_the_rhs() {
        // flux replacement: no matrix coefficients at all, and the rhs
        // carries -q n_bar, -q m_bar, and the lagged arm flux
        let material = test_material();
        let rprime_b = Vec3::new(0.95, 0.2, -0.1);
        let set = coefficient_set(
            &exp_so3(Vec3::new(0.2, -0.3, 0.1)),
            rprime_b,
            Vec3::new(0.01, -0.02, 0.005),
            Vec3::new(0.1, 0.05, -0.2),
            &material,
        );
        let nbar = Vec3::new(10.0, -20.0, 5.0);
        let mbar = Vec3::new(1.0, 2.0, -3.0);
        let targets = EndTargets {
            translation: Constraint::Neumann { applied: nbar },
            rotation: Constraint::Neumann { applied: mbar },
        };
        let (dx, arm) = (0.5, 0.5);
        let patch = build_patch(&targets, &set, rprime_b, D_EAST, dx, arm);
        assert_eq!(patch.a_c, Mat6::ZERO);
        let (r_w, r_psi) = patch.r.parts();
        assert!((r_w + nbar).norm() <= 1e-12 * nbar.norm());
        let moment_part = mbar + rprime_b.cross(nbar) * arm;
        assert!((r_psi + moment_part).norm() <= 1e-12 * moment_part.norm());
    }

    #[test]
    fn dirichlet_faces_keep_the_gradient_coupling_to_the_cell() {
        // rest state with nothing left to impose: the rhs vanishes and the
        // matrix carries exactly the two-point gradient and arm couplings
        let material = test_material();
        let set = rest_set(&material);
        let targets = EndTargets {
            translation: Constraint::Dirichlet { remaining: Vec3::ZERO },
            rotation: Constraint::Dirichlet { remaining: Vec3::ZERO },
        };
        let (dx, arm) = (0.5, 0.5);
        let patch = build_patch(&targets, &set, Vec3::E1, D_WEST, dx, arm);
        assert_eq!(patch.r, Vec6::ZERO);
        assert_eq!(patch.a_c.block(0, 0), set.c_ww * (-1.0 / dx));
        assert_eq!(patch.a_c.block(3, 3), set.c_mpsi2 * (-1.0 / dx));
        // west face: q = -1 flips the arm coupling's sign
        assert_eq!(patch.a_c.block(3, 0), set.c_mw * (arm / dx));
        assert_eq!(patch.a_c.block(0, 3), Mat3::ZERO);

        // a prescribed ramp piece moves to the rhs: at rest n* = m* = 0, so
        // the force row sees -C_ww rem_w / dx - q C_wpsi rem_psi
        let rem_w = Vec3::new(0.01, -0.02, 0.03);
        let rem_psi = Vec3::new(0.04, 0.05, -0.06);
        let ramp = EndTargets {
            translation: Constraint::Dirichlet { remaining: rem_w },
            rotation: Constraint::Dirichlet { remaining: rem_psi },
        };
        let patch = build_patch(&ramp, &set, Vec3::E1, D_WEST, dx, arm);
        let (r_w, _) = patch.r.parts();
        let expected = -(set.c_ww * rem_w * (1.0 / dx)) + set.c_wpsi * rem_psi;
        assert!((r_w - expected).norm() <= 1e-14 * expected.norm());
    }

    #[test]
    fn hinged_faces_mix_gradient_coupling_with_flux_replacement() {
        // translation Dirichlet keeps its force and arm couplings; the
        // moment flux is replaced by m_bar = 0, so the rotation columns and
        // the moment-flux diagonal stay empty
        let material = test_material();
        let set = coefficient_set(
            &exp_so3(Vec3::new(0.1, 0.2, -0.3)),
            Vec3::new(0.9, 0.1, 0.05),
            Vec3::new(0.02, 0.01, -0.01),
            Vec3::new(0.05, -0.1, 0.2),
            &material,
        );
        let targets = EndTargets {
            translation: Constraint::Dirichlet { remaining: Vec3::ZERO },
            rotation: Constraint::Neumann { applied: Vec3::ZERO },
        };
        let (dx, arm) = (0.25, 0.25);
        let patch = build_patch(&targets, &set, Vec3::new(0.9, 0.1, 0.05), D_EAST, dx, arm);
        assert_eq!(patch.a_c.block(0, 0), set.c_ww * (-1.0 / dx));
        assert_eq!(patch.a_c.block(3, 0), set.c_mw * (-arm / dx));
        assert_eq!(patch.a_c.block(0, 3), Mat3::ZERO);
        assert_eq!(patch.a_c.block(3, 3), Mat3::ZERO);
        let (r_w, r_psi) = patch.r.parts();
        assert!((r_w + set.c_expw).norm() <= 1e-14 * set.c_expw.norm());
        assert!((r_psi + set.c_expmw * arm).norm() <= 1e-14);
    }

    #[test]
    fn degenerate_sets_surface_singular_map_errors() {
        let material = test_material();
        let mut set = rest_set(&material);
        set.c_mpsi2 = Mat3::ZERO;
        let rot_free = EndTargets {
            translation: Constraint::Dirichlet { remaining: Vec3::ZERO },
            rotation: Constraint::Neumann { applied: Vec3::ZERO },
        };
        assert_eq!(
            build_maps(&rot_free, &set, D_EAST, 0.5).unwrap_err(),
            BoundaryError::SingularRotationBlock
        );

        let mut set = rest_set(&material);
        set.c_ww = Mat3::ZERO;
        let trans_free = EndTargets {
            translation: Constraint::Neumann { applied: Vec3::ZERO },
            rotation: Constraint::Dirichlet { remaining: Vec3::ZERO },
        };
        assert_eq!(
            build_maps(&trans_free, &set, D_EAST, 0.5).unwrap_err(),
            BoundaryError::SingularTranslationBlock
        );
    }
}
