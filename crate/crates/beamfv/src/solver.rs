//! Load stepping and Newton-Raphson iteration: the block Thomas direct
//! solver, the per-increment Newton loop, and the schedule driver that runs
//! a whole case with rollback on failed increments.

use crate::assembly::{
    assemble_system, face_coefficient_sets, BlockTridiagonalSystem, Lu6, Mat6, Vec6,
};
use crate::boundary::{
    build_maps, build_patch, recover_boundary_kinematics, BoundaryError, BoundaryMaps, Constraint,
    EndTargets,
};
use crate::case::{CaseDefinition, CaseError, Condition, EndCondition};
use crate::geometry::{BeamMesh, InitialGeometry, D_EAST, D_WEST};
use crate::so3::Vec3;
use crate::state::{
    strain_energy, update_state, BeamState, FaceIncrements, Material, StateError,
};
use alloc::vec::Vec;
use core::fmt;

/// One leg of the load schedule: `steps` equal increments of the load factor
/// ending exactly at `to_factor`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct Stage {
    pub steps: usize,
    pub to_factor: f64,
}

/// Newton and load-stepping parameters of a case.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(deny_unknown_fields))]
pub struct SolverSettings {
    /// Convergence threshold on the normalised increment norm.
    pub tolerance: f64,
    pub max_iterations: usize,
    pub schedule: Vec<Stage>,
    /// Length normalising translation increments in the residual; the beam
    /// length when absent.
    #[cfg_attr(feature = "serde", serde(default))]
    pub reference_length: Option<f64>,
}

impl SolverSettings {
    /// Default Newton controls with a single equal-step ramp to factor 1.
    pub fn single_stage(steps: usize) -> Self {
        SolverSettings {
            tolerance: 1e-10,
            max_iterations: 30,
            schedule: alloc::vec![Stage {
                steps,
                to_factor: 1.0
            }],
            reference_length: None,
        }
    }

    pub fn controls(&self, beam_length: f64) -> NewtonControls {
        NewtonControls {
            tolerance: self.tolerance,
            max_iterations: self.max_iterations,
            reference_length: self.reference_length.unwrap_or(beam_length),
        }
    }
}

/// Largest rotation increment (rad) applied in one Newton update. Steps
/// beyond it are damped uniformly before the line search: the
/// rotation-vector update must stay well inside the exp chart's pi-ball,
/// and soft sections (tiny GJ or EI) can answer a small moment imbalance
/// with a multi-radian twist that overshoots it. Damping preserves the
/// step direction and the fixed points.
const ROTATION_STEP_CAP: f64 = 1.5;

/// Sufficient-decrease constant of the backtracking line search. The
/// linear model predicts the residual shrinks by the step fraction, so any
/// small positive margin separates real progress from noise.
const ARMIJO_SLOPE: f64 = 1.0e-4;

/// Halvings the line search tries before accepting the step anyway. The
/// rotation cap already bounds the accepted step, so a forced acceptance
/// cannot leave the chart; it only concedes that no nearby fraction of the
/// step reduces the residual.
const MAX_BACKTRACKS: u32 = 12;

/// Newton-loop controls shared by every increment of a run.
#[derive(Clone, Copy, Debug)]
pub struct NewtonControls {
    pub tolerance: f64,
    pub max_iterations: usize,
    pub reference_length: f64,
}

/// Why an increment could not be completed. Non-convergence is an expected
/// outcome near limit points (it is how buckling shows up in a load-driven
/// run); the other variants indicate the step was too large or the problem
/// ill-posed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FailureKind {
    MaxIterationsExceeded { residual: f64 },
    SingularPivot { cell: usize },
    SingularBoundary(BoundaryError),
    RotationIncrementTooLarge { face: usize, angle: f64 },
}

impl fmt::Display for FailureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FailureKind::MaxIterationsExceeded { residual } => {
                write!(f, "Newton did not converge (residual {residual:.3e})")
            }
            FailureKind::SingularPivot { cell } => {
                write!(f, "singular pivot block at cell {cell}")
            }
            FailureKind::SingularBoundary(e) => write!(f, "boundary elimination failed: {e}"),
            FailureKind::RotationIncrementTooLarge { face, angle } => write!(
                f,
                "rotation increment {angle:.3} rad at face {face} left the tangent chart"
            ),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FailureKind {}

/// Face-stored fields sampled at the monitor face after an increment, plus
/// the total strain energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonitorSample {
    pub w: Vec3,
    pub rprime: Vec3,
    pub n: Vec3,
    pub m: Vec3,
    pub energy: f64,
}

/// Outcome of one load increment.
#[derive(Clone, Debug, PartialEq)]
pub struct IncrementReport {
    /// 1-based index over the whole schedule.
    pub increment: usize,
    pub load_factor: f64,
    pub iterations: usize,
    /// Normalised increment norm of the last Newton iteration.
    pub residual: f64,
    pub converged: bool,
    pub residual_history: Vec<f64>,
    pub monitor: MonitorSample,
}

/// The discrete problem data fixed across load increments. `f_c` and `t_c`
/// are the distributed loads at factor 1.
#[derive(Clone, Debug)]
pub struct Model {
    pub mesh: BeamMesh,
    pub geom: InitialGeometry,
    pub material: Material,
    pub west: EndCondition,
    pub east: EndCondition,
    pub f_c: Vec<Vec3>,
    pub t_c: Vec<Vec3>,
}

impl Model {
    pub fn from_case(case: &CaseDefinition) -> Result<Model, CaseError> {
        let mesh = case.build_mesh()?;
        let geom = case.build_geometry(&mesh)?;
        let material = case.build_material()?;
        let (f_c, t_c) = case.distributed_loads(&mesh)?;
        Ok(Model {
            mesh,
            geom,
            material,
            west: case.west,
            east: case.east,
            f_c,
            t_c,
        })
    }
}

/// Load factor of the Dirichlet rotation ramp already imposed at each end.
/// End rotations compose multiplicatively on SO(3), so each iteration imposes
/// only the factor interval not yet applied.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AppliedRotation {
    pub west: f64,
    pub east: f64,
}

/// Pivot failure in the block Thomas sweep: the eliminated diagonal block of
/// this cell was singular to working precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SingularPivot {
    pub cell: usize,
}

impl fmt::Display for SingularPivot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "singular pivot block at cell {}", self.cell)
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SingularPivot {}

/// Direct solution of a block-tridiagonal system by the Thomas algorithm
/// with 6x6 LU pivot blocks: one forward elimination sweep, one
/// back-substitution sweep.
pub fn block_thomas_solve(system: &BlockTridiagonalSystem) -> Result<Vec<Vec6>, SingularPivot> {
    let m = system.rows.len();
    debug_assert!(m > 0);
    let mut upper: Vec<Mat6> = Vec::with_capacity(m);
    let mut x: Vec<Vec6> = Vec::with_capacity(m);
    for (i, row) in system.rows.iter().enumerate() {
        let (pivot, rhs) = if i == 0 {
            (row.a_c, row.r)
        } else {
            (row.a_c - row.a_w * upper[i - 1], row.r - row.a_w * x[i - 1])
        };
        let lu = Lu6::factor(pivot).map_err(|_| SingularPivot { cell: i })?;
        upper.push(lu.solve_mat(row.a_e));
        x.push(lu.solve(rhs));
    }
    for i in (0..m.saturating_sub(1)).rev() {
        let correction = upper[i] * x[i + 1];
        x[i] = x[i] - correction;
    }
    Ok(x)
}

/// Scale-free convergence measure: the largest per-cell Newton increment,
/// translations normalised by the reference length, rotations in radians.
pub fn residual_norm(dw_c: &[Vec3], dpsi_c: &[Vec3], reference_length: f64) -> f64 {
    let mut worst = 0.0f64;
    for (dw, dpsi) in dw_c.iter().zip(dpsi_c) {
        worst = worst.max(dw.norm() / reference_length).max(dpsi.norm());
    }
    worst
}

/// Boundary targets for the current Newton iteration at load factor
/// `factor`: Dirichlet conditions carry the part of the ramp not yet
/// imposed, Neumann conditions the flux at the current factor.
fn resolve_targets(
    end: &EndCondition,
    state: &BeamState,
    face: usize,
    applied_rotation: f64,
    factor: f64,
) -> EndTargets {
    let translation = match end.translation {
        Condition::Dirichlet(target) => Constraint::Dirichlet {
            remaining: target * factor - state.w_f[face],
        },
        Condition::Neumann(value) => Constraint::Neumann {
            applied: value * factor,
        },
    };
    let rotation = match end.rotation {
        Condition::Dirichlet(target) => Constraint::Dirichlet {
            remaining: target * (factor - applied_rotation),
        },
        Condition::Neumann(value) => Constraint::Neumann {
            applied: value * factor,
        },
    };
    EndTargets {
        translation,
        rotation,
    }
}

/// Assembles the block system and boundary recovery maps at the current
/// state: one Newton iteration's linearisation.
fn assemble_iteration(
    model: &Model,
    state: &BeamState,
    applied: &AppliedRotation,
    factor: f64,
    f_scaled: &[Vec3],
    t_scaled: &[Vec3],
) -> Result<(BlockTridiagonalSystem, BoundaryMaps, BoundaryMaps), FailureKind> {
    let m = model.mesh.cells;
    let face_sets = face_coefficient_sets(state, &model.geom, &model.material);
    let west_targets = resolve_targets(&model.west, state, 0, applied.west, factor);
    let east_targets = resolve_targets(&model.east, state, m, applied.east, factor);
    let west_maps = build_maps(&west_targets, &face_sets[0], D_WEST, model.mesh.l_w[0])
        .map_err(FailureKind::SingularBoundary)?;
    let east_maps = build_maps(&east_targets, &face_sets[m], D_EAST, model.mesh.l_e[m - 1])
        .map_err(FailureKind::SingularBoundary)?;
    let arm = 0.5 * model.mesh.l_c;
    let west_patch = build_patch(
        &west_targets,
        &face_sets[0],
        state.rprime_f[0],
        D_WEST,
        model.mesh.l_w[0],
        arm,
    );
    let east_patch = build_patch(
        &east_targets,
        &face_sets[m],
        state.rprime_f[m],
        D_EAST,
        model.mesh.l_e[m - 1],
        arm,
    );
    let system = assemble_system(
        &face_sets,
        &model.mesh,
        f_scaled,
        t_scaled,
        &west_patch,
        &east_patch,
    );
    Ok((system, west_maps, east_maps))
}

/// Largest right-hand-side entry of the assembled system: the residual of
/// the face-flux balance plus any prescription not yet imposed. Only ratios
/// of this norm are ever compared, so mixing force and moment rows is fine.
fn rhs_infinity_norm(system: &BlockTridiagonalSystem) -> f64 {
    let mut worst = 0.0f64;
    for row in &system.rows {
        for i in 0..6 {
            worst = worst.max(row.r[i].abs());
        }
    }
    worst
}

/// Runs the Newton loop for one load increment, mutating `state` in place.
///
/// Each iteration solves the exact linearisation, caps the rotation
/// increment at [`ROTATION_STEP_CAP`], and backtracks the step until the
/// assembled residual satisfies a sufficient-decrease test; partially
/// applied steps advance the Dirichlet rotation ramps by the same fraction.
/// Convergence requires a full, uncapped step below the tolerance, which
/// guarantees the ramps are imposed completely.
///
/// Non-convergence within the iteration budget is an `Ok` report with
/// `converged == false`. Hard failures (singular pivot, singular boundary
/// elimination, a rotation increment outside the tangent chart) return `Err`
/// and may leave `state` mid-iteration; callers that need to retry must
/// snapshot beforehand, as [`run_case`] does.
pub fn run_increment(
    model: &Model,
    state: &mut BeamState,
    applied: &mut AppliedRotation,
    increment: usize,
    factor: f64,
    monitor_face: usize,
    controls: &NewtonControls,
) -> Result<IncrementReport, FailureKind> {
    let m = model.mesh.cells;
    let f_scaled: Vec<Vec3> = model.f_c.iter().map(|&v| v * factor).collect();
    let t_scaled: Vec<Vec3> = model.t_c.iter().map(|&v| v * factor).collect();

    let mut history = Vec::new();
    let mut converged = false;
    let (mut system, mut west_maps, mut east_maps) =
        assemble_iteration(model, state, applied, factor, &f_scaled, &t_scaled)?;
    let mut merit = rhs_infinity_norm(&system);
    for _ in 0..controls.max_iterations {
        let solution =
            block_thomas_solve(&system).map_err(|e| FailureKind::SingularPivot { cell: e.cell })?;

        let mut dw_c = Vec::with_capacity(m);
        let mut dpsi_c = Vec::with_capacity(m);
        for v in &solution {
            let (w, psi) = v.parts();
            dw_c.push(w);
            dpsi_c.push(psi);
        }
        let (dw_west, dpsi_west) = recover_boundary_kinematics(&west_maps, dw_c[0], dpsi_c[0]);
        let (dw_east, dpsi_east) =
            recover_boundary_kinematics(&east_maps, dw_c[m - 1], dpsi_c[m - 1]);

        let worst_rotation = dpsi_c
            .iter()
            .map(|p| p.norm())
            .fold(dpsi_west.norm().max(dpsi_east.norm()), f64::max);
        let cap = if worst_rotation > ROTATION_STEP_CAP {
            ROTATION_STEP_CAP / worst_rotation
        } else {
            1.0
        };

        let snapshot = state.clone();
        let applied_snapshot = *applied;
        let mut scale = cap;
        for attempt in 0..=MAX_BACKTRACKS {
            let dw_try: Vec<Vec3> = dw_c.iter().map(|&v| v * scale).collect();
            let dpsi_try: Vec<Vec3> = dpsi_c.iter().map(|&v| v * scale).collect();
            update_state(
                state,
                &model.mesh,
                &model.geom,
                &model.material,
                &dw_try,
                &dpsi_try,
                &FaceIncrements {
                    dw_west: dw_west * scale,
                    dpsi_west: dpsi_west * scale,
                    dw_east: dw_east * scale,
                    dpsi_east: dpsi_east * scale,
                },
            )
            .map_err(|StateError::RotationIncrementTooLarge { face, angle }| {
                FailureKind::RotationIncrementTooLarge { face, angle }
            })?;
            applied.west += (factor - applied.west) * scale;
            applied.east += (factor - applied.east) * scale;

            let (trial_system, trial_west, trial_east) =
                assemble_iteration(model, state, applied, factor, &f_scaled, &t_scaled)?;
            let trial_merit = rhs_infinity_norm(&trial_system);
            if trial_merit <= merit * (1.0 - ARMIJO_SLOPE * scale) || attempt == MAX_BACKTRACKS {
                system = trial_system;
                west_maps = trial_west;
                east_maps = trial_east;
                merit = trial_merit;
                break;
            }
            *state = snapshot.clone();
            *applied = applied_snapshot;
            scale *= 0.5;
        }

        let residual = scale * residual_norm(&dw_c, &dpsi_c, controls.reference_length);
        history.push(residual);
        if residual <= controls.tolerance && scale == 1.0 {
            converged = true;
            break;
        }
    }

    let monitor = MonitorSample {
        w: state.w_f[monitor_face],
        rprime: state.rprime_f[monitor_face],
        n: state.n_f[monitor_face],
        m: state.m_f[monitor_face],
        energy: strain_energy(state, &model.mesh, &model.material),
    };
    Ok(IncrementReport {
        increment,
        load_factor: factor,
        iterations: history.len(),
        residual: history.last().copied().unwrap_or(f64::INFINITY),
        converged,
        residual_history: history,
        monitor,
    })
}

/// An increment the schedule could not get past: the attempted factor and
/// what went wrong. The run keeps the state of the last converged increment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Abort {
    pub failure: FailureKind,
    pub at_factor: f64,
}

/// A finished (or aborted) run: the final state, one report per converged
/// increment, and the abort record when the schedule was cut short.
#[derive(Clone, Debug)]
pub struct CaseRun {
    pub model: Model,
    pub state: BeamState,
    pub reports: Vec<IncrementReport>,
    pub aborted: Option<Abort>,
}

impl CaseRun {
    /// Load factor of the last converged increment, 0 before any.
    pub fn last_converged_factor(&self) -> f64 {
        self.reports.last().map_or(0.0, |r| r.load_factor)
    }
}

/// Validates the case, then walks the load schedule. Each increment starts
/// from a snapshot; on failure the snapshot is restored and the remaining
/// schedule abandoned, so the returned state is the last converged one.
pub fn run_case(case: &CaseDefinition) -> Result<CaseRun, CaseError> {
    case.validate()?;
    let model = Model::from_case(case)?;
    let monitor_face = case.monitor_face(&model.mesh)?;
    let controls = case.solver.controls(model.mesh.length);

    let mut state = BeamState::initial(&model.mesh, &model.geom);
    let mut applied = AppliedRotation::default();
    let mut reports = Vec::new();
    let mut aborted = None;
    let mut prev_factor = 0.0f64;
    let mut increment = 0usize;

    'schedule: for stage in &case.solver.schedule {
        for k in 1..=stage.steps {
            increment += 1;
            let factor = if k == stage.steps {
                stage.to_factor
            } else {
                prev_factor + (stage.to_factor - prev_factor) * (k as f64 / stage.steps as f64)
            };
            // the rotation tracker needs no snapshot: the schedule stops at
            // the first failure, so the tracker is never consulted again
            let snapshot = state.clone();
            let outcome = run_increment(
                &model,
                &mut state,
                &mut applied,
                increment,
                factor,
                monitor_face,
                &controls,
            );
            match outcome {
                Ok(report) if report.converged => reports.push(report),
                Ok(report) => {
                    state = snapshot;
                    aborted = Some(Abort {
                        failure: FailureKind::MaxIterationsExceeded {
                            residual: report.residual,
                        },
                        at_factor: factor,
                    });
                    break 'schedule;
                }
                Err(failure) => {
                    state = snapshot;
                    aborted = Some(Abort {
                        failure,
                        at_factor: factor,
                    });
                    break 'schedule;
                }
            }
        }
        prev_factor = stage.to_factor;
    }

    Ok(CaseRun {
        model,
        state,
        reports,
        aborted,
    })
}
