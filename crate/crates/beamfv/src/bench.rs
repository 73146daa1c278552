//! The verification suite: executable definitions of the five benchmark
//! cases, analytic oracles, error metrics, convergence-order estimation,
//! buckling detection, and the acceptance checks built on them. Timing and
//! the mesh-sweep fan-out need the operating system, so this module is
//! `std`-gated; the solver itself stays no_std-capable.

use crate::assembly::{
    assemble_system, face_coefficient_set, face_coefficient_sets, BlockRow,
    BlockTridiagonalSystem, Mat6, Vec6,
};
use crate::boundary::{build_patch, BoundaryPatch, Constraint, EndTargets};
use crate::case::{
    CaseDefinition, CaseError, Condition, EndCondition, GeometrySpec, Loading, MaterialSpec,
    MonitorPoint, PointLoad, PointLoadLocation,
};
use crate::geometry::{
    build_uniform_mesh, make_arc, make_straight, ArcOrientation, BeamMesh, InitialGeometry,
    D_EAST, D_WEST,
};
use crate::so3::{exp_so3, orthonormality_defect, tangent, RotationMatrix, Vec3, SMALL_ANGLE};
use crate::solver::{block_thomas_solve, run_case, CaseRun, SolverSettings, Stage};
use crate::state::{
    rotational_strain_by_definition, strain_energy, update_state, BeamState, FaceIncrements,
    Material,
};
use core::fmt;
use std::f64::consts::PI;
use std::time::Instant;

/// Acceptance band of the fitted convergence order for the second-order
/// discretisation.
pub const ORDER_BAND: (f64, f64) = (1.8, 2.2);

/// Tip rotation and in-plane tip displacements of a cantilever under a pure
/// end moment: the exact solution is a circular arc of curvature M_z / EI.
/// Returns `(psi_z, w_x, w_y)` where `w_x` is the axial shortening magnitude
/// `L - x_tip`. A zero moment returns the analytic limit `(0, 0, 0)`.
pub fn euler_analytic(m_z: f64, length: f64, ei: f64) -> (f64, f64, f64) {
    assert!(ei > 0.0 && length > 0.0);
    let psi = m_z * length / ei;
    if psi == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    let half = 0.5 * psi;
    let w_x = length - (length / half) * half.sin() * half.cos();
    let w_y = (length / half) * half.sin() * half.sin();
    (psi, w_x, w_y)
}

/// Percent relative error `|(numeric - reference) / reference| * 100`.
/// `None` when the reference is zero and the measure is undefined.
pub fn relative_error(numeric: f64, reference: f64) -> Option<f64> {
    if reference == 0.0 {
        return None;
    }
    Some(((numeric - reference) / reference).abs() * 100.0)
}

/// Least-squares slope of `ln(error)` against `ln(h)` over a mesh sweep
/// (`h` proportional to `1 / cells`). `None` with fewer than three levels,
/// mismatched inputs, or any non-positive error.
pub fn convergence_order(cells: &[usize], errors: &[f64]) -> Option<f64> {
    if cells.len() < 3 || cells.len() != errors.len() {
        return None;
    }
    if errors.iter().any(|e| !(*e > 0.0)) || cells.iter().any(|&m| m == 0) {
        return None;
    }
    let n = cells.len() as f64;
    let xs: Vec<f64> = cells.iter().map(|&m| -(m as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / n;
    let y_mean = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - x_mean) * (x - x_mean)).sum();
    Some(sxy / sxx)
}

/// Dense Gaussian-elimination oracle for block-tridiagonal systems: builds
/// the full 6m x 6m matrix and solves it with scalar partial pivoting.
/// Panics on pivot collapse; intended for well-conditioned verification
/// systems, not production solves.
pub fn dense_block_solve(system: &BlockTridiagonalSystem) -> Vec<Vec6> {
    let m = system.rows.len();
    let n = 6 * m;
    let mut a = vec![vec![0.0f64; n + 1]; n];
    for (i, row) in system.rows.iter().enumerate() {
        for bi in 0..6 {
            let r = 6 * i + bi;
            for bj in 0..6 {
                if i > 0 {
                    a[r][6 * (i - 1) + bj] = row.a_w.0[bi][bj];
                }
                a[r][6 * i + bj] = row.a_c.0[bi][bj];
                if i + 1 < m {
                    a[r][6 * (i + 1) + bj] = row.a_e.0[bi][bj];
                }
            }
            a[r][n] = row.r[bi];
        }
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        let scale = a[col][col];
        assert!(scale.abs() > 1e-300, "dense oracle hit a zero pivot");
        for r in col + 1..n {
            let factor = a[r][col] / scale;
            if factor == 0.0 {
                continue;
            }
            for c in col..=n {
                let sub = factor * a[col][c];
                a[r][c] -= sub;
            }
        }
    }
    let mut x = vec![0.0f64; n];
    for r in (0..n).rev() {
        let mut s = a[r][n];
        for c in r + 1..n {
            s -= a[r][c] * x[c];
        }
        x[r] = s / a[r][r];
    }
    (0..m)
        .map(|i| {
            let mut v = Vec6::ZERO;
            for bi in 0..6 {
                v[bi] = x[6 * i + bi];
            }
            v
        })
        .collect()
}

fn circular_section(e: f64, g: f64, r: f64) -> MaterialSpec {
    let area = PI * r * r;
    let second_moment = PI * r.powi(4) / 4.0;
    MaterialSpec {
        ea: e * area,
        ga2: g * area,
        ga3: g * area,
        gj: g * 2.0 * second_moment,
        ei2: e * second_moment,
        ei3: e * second_moment,
    }
}

/// Rigid rotation of a quarter-circle cantilever: 10 turns about the global
/// x-axis prescribed at the clamped end in 100 increments. Objectivity
/// demands zero strain energy throughout and, since 20 pi is the identity
/// rotation, zero net displacement at the end.
pub fn rigid_rotation_case() -> CaseDefinition {
    CaseDefinition {
        name: "rigid_rotation".into(),
        geometry: GeometrySpec::Arc {
            radius: 100.0,
            span: PI / 2.0,
            start_tangent: 0.0,
            orientation: ArcOrientation::CounterClockwise,
        },
        material: circular_section(1.0e9, 0.5e9, 1.0e-3),
        cells: 10,
        west: EndCondition {
            translation: Condition::Dirichlet(Vec3::ZERO),
            rotation: Condition::Dirichlet(Vec3::new(20.0 * PI, 0.0, 0.0)),
        },
        east: EndCondition::FREE,
        loading: Loading::NONE,
        solver: SolverSettings::single_stage(100),
        monitor: MonitorPoint::EastFace,
    }
}

fn bending_section() -> MaterialSpec {
    MaterialSpec {
        ea: 1.0e4,
        ga2: 5.0e3,
        ga3: 5.0e3,
        gj: 100.0,
        ei2: 100.0,
        ei3: 100.0,
    }
}

/// In-plane pure bending: a straight cantilever rolled into a full circle by
/// the tip moment M_z = 20 pi in 4 increments.
pub fn pure_bending_case() -> CaseDefinition {
    CaseDefinition {
        name: "pure_bending".into(),
        geometry: GeometrySpec::Straight { length: 10.0 },
        material: bending_section(),
        cells: 10,
        west: EndCondition::CLAMPED,
        east: EndCondition {
            translation: Condition::Neumann(Vec3::ZERO),
            rotation: Condition::Neumann(Vec3::new(0.0, 0.0, 20.0 * PI)),
        },
        loading: Loading::NONE,
        solver: SolverSettings::single_stage(4),
        monitor: MonitorPoint::EastFace,
    }
}

/// Pure bending stopped at M_z = 2.5 pi (an eighth of the closure moment),
/// the configuration quoted against the analytic arc solution.
pub fn pure_bending_accuracy_case() -> CaseDefinition {
    let mut case = pure_bending_case();
    case.name = "pure_bending_2_5pi".into();
    case.solver.schedule = vec![Stage {
        steps: 2,
        to_factor: 0.125,
    }];
    case
}

/// Out-of-plane coiling into a helix: tip force (0, 0, 50) N and tip moment
/// (0, 0, 200 pi) N.m applied together over 2000 increments.
pub fn helix_case() -> CaseDefinition {
    CaseDefinition {
        name: "helix".into(),
        geometry: GeometrySpec::Straight { length: 10.0 },
        material: bending_section(),
        cells: 100,
        west: EndCondition::CLAMPED,
        east: EndCondition {
            translation: Condition::Neumann(Vec3::new(0.0, 0.0, 50.0)),
            rotation: Condition::Neumann(Vec3::new(0.0, 0.0, 200.0 * PI)),
        },
        loading: Loading::NONE,
        solver: SolverSettings::single_stage(2000),
        monitor: MonitorPoint::EastFace,
    }
}

/// The 45-degree bend: a quarter-of-a-quarter circle cantilever in the
/// xy-plane (unit square cross-section, E = 1e7 Pa, nu = 0) pushed out of
/// plane by a 600 N tip force along z, in 10 increments.
pub fn bend45_case() -> CaseDefinition {
    let e = 1.0e7;
    let g = 0.5e7;
    CaseDefinition {
        name: "bend45".into(),
        geometry: GeometrySpec::Arc {
            radius: 100.0,
            span: PI / 4.0,
            start_tangent: 0.0,
            orientation: ArcOrientation::CounterClockwise,
        },
        material: MaterialSpec {
            ea: e,
            ga2: g,
            ga3: g,
            gj: e / 12.0,
            ei2: e / 12.0,
            ei3: e / 12.0,
        },
        cells: 10,
        west: EndCondition::CLAMPED,
        east: EndCondition {
            translation: Condition::Neumann(Vec3::new(0.0, 0.0, 600.0)),
            rotation: Condition::Neumann(Vec3::ZERO),
        },
        loading: Loading::NONE,
        solver: SolverSettings::single_stage(10),
        monitor: MonitorPoint::EastFace,
    }
}

/// The 45-degree bend driven in reverse: the mesh-converged tip displacement
/// is prescribed and the tip force is recovered from the boundary flux.
pub fn bend45_displacement_case() -> CaseDefinition {
    let mut case = bend45_case();
    case.name = "bend45_displacement".into();
    case.east = EndCondition {
        translation: Condition::Dirichlet(Vec3::new(-23.5607, -13.6048, 53.4756)),
        rotation: Condition::Neumann(Vec3::ZERO),
    };
    case
}

/// The 215-degree deep arch, hinged west / clamped east, with a unit point
/// load pushing the crown down; staged schedule of 1 N steps to 8 N and
/// 0.005 N steps beyond, into the buckling load.
pub fn arch_buckling_case() -> CaseDefinition {
    CaseDefinition {
        name: "arch_buckling".into(),
        geometry: GeometrySpec::Arc {
            radius: 100.0,
            span: 215.0 * PI / 180.0,
            start_tangent: 107.5 * PI / 180.0,
            orientation: ArcOrientation::Clockwise,
        },
        material: MaterialSpec {
            ea: 4.0e4,
            ga2: 2.0e4,
            ga3: 2.0e4,
            gj: 1.0e4,
            ei2: 1.0e4,
            ei3: 1.0e4,
        },
        cells: 40,
        west: EndCondition::HINGED,
        east: EndCondition::CLAMPED,
        loading: Loading {
            distributed_force: Vec3::ZERO,
            distributed_moment: Vec3::ZERO,
            point: Some(PointLoad {
                force: Vec3::new(0.0, -1.0, 0.0),
                location: PointLoadLocation::Crown,
            }),
        },
        solver: SolverSettings {
            tolerance: 1e-10,
            max_iterations: 30,
            schedule: vec![
                Stage {
                    steps: 8,
                    to_factor: 8.0,
                },
                Stage {
                    steps: 300,
                    to_factor: 9.5,
                },
            ],
            reference_length: None,
        },
        monitor: MonitorPoint::Crown,
    }
}

/// The benchmark set: the five verification cases, with the 45-degree bend
/// contributing both its load-driven and displacement-driven forms.
pub fn standard_cases() -> Vec<CaseDefinition> {
    vec![
        rigid_rotation_case(),
        pure_bending_case(),
        helix_case(),
        bend45_case(),
        bend45_displacement_case(),
        arch_buckling_case(),
    ]
}

/// Looks a benchmark case up by name.
pub fn standard_case(name: &str) -> Option<CaseDefinition> {
    standard_cases().into_iter().find(|c| c.name == name)
}

/// One mesh-refinement sweep: the monitored tip value, percent relative
/// error, and wall clock per mesh level, plus the fitted order when at
/// least three levels carry a well-defined error.
#[derive(Clone, Debug)]
pub struct BenchmarkResult {
    pub case: String,
    pub meshes: Vec<usize>,
    pub values: Vec<Vec3>,
    pub errors_percent: Vec<f64>,
    pub order: Option<f64>,
    pub seconds: Vec<f64>,
}

/// Runs `base` once per mesh size, one solver instance per level fanned out
/// on its own thread; results come back in mesh order with per-run wall
/// clock.
pub fn mesh_sweep(
    base: &CaseDefinition,
    meshes: &[usize],
) -> Result<Vec<(CaseRun, f64)>, CaseError> {
    std::thread::scope(|scope| {
        let workers: Vec<_> = meshes
            .iter()
            .map(|&cells| {
                let mut case = base.clone();
                case.cells = cells;
                scope.spawn(move || {
                    let start = Instant::now();
                    let run = run_case(&case)?;
                    Ok((run, start.elapsed().as_secs_f64()))
                })
            })
            .collect();
        workers
            .into_iter()
            .map(|w| w.join().expect("mesh sweep worker panicked"))
            .collect()
    })
}

/// Outcome of driving a staged schedule toward an instability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum BucklingOutcome {
    /// An increment failed to converge; a load-driven quasi-static solver
    /// cannot pass a limit point, so the last converged load estimates the
    /// critical one.
    Critical { load: f64, attempted: f64 },
    /// Every increment converged; no instability below the final factor.
    ScheduleExhausted { final_factor: f64 },
}

/// Runs the case until an increment fails to converge and reports the last
/// converged load factor as the critical load.
pub fn detect_buckling(case: &CaseDefinition) -> Result<BucklingOutcome, CaseError> {
    let run = run_case(case)?;
    Ok(match run.aborted {
        Some(abort) => BucklingOutcome::Critical {
            load: run.last_converged_factor(),
            attempted: abort.at_factor,
        },
        None => BucklingOutcome::ScheduleExhausted {
            final_factor: run.last_converged_factor(),
        },
    })
}

/// Outcome of one acceptance check.
#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: {} [{:.2} s]",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds
        )
    }
}

fn check(
    name: &'static str,
    body: impl FnOnce() -> Result<(bool, String), CaseError>,
) -> CheckResult {
    let start = Instant::now();
    let (passed, detail) = match body() {
        Ok(outcome) => outcome,
        Err(e) => (false, format!("setup failed: {e}")),
    };
    CheckResult {
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn fmt_list(values: &[f64]) -> String {
    let mut out = String::from("[");
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        out.push_str(&format!("{v:.3e}"));
    }
    out.push(']');
    out
}

fn in_order_band(order: Option<f64>) -> bool {
    order.is_some_and(|p| (ORDER_BAND.0..=ORDER_BAND.1).contains(&p))
}

fn fmt_order(order: Option<f64>) -> String {
    match order {
        Some(p) => format!("{p:.2}"),
        None => "undefined".into(),
    }
}

/// Rigid rotation of the curved beam: energy stays at machine zero and ten
/// full turns bring every point back to its reference position.
pub fn criterion_objectivity() -> CheckResult {
    check("objectivity", || {
        let case = rigid_rotation_case();
        let start = Instant::now();
        let run = run_case(&case)?;
        let secs = start.elapsed().as_secs_f64();
        let length = run.model.mesh.length;
        let energy = strain_energy(&run.state, &run.model.mesh, &run.model.material);
        let peak = run
            .reports
            .iter()
            .map(|r| r.monitor.energy)
            .fold(energy, f64::max);
        let max_disp = run
            .state
            .w_f
            .iter()
            .chain(run.state.w_c.iter())
            .map(|w| w.norm())
            .fold(0.0, f64::max);
        let ok = run.aborted.is_none()
            && energy <= 1e-20
            && max_disp <= 1e-10 * length
            && secs <= 10.0;
        Ok((
            ok,
            format!(
                "energy {energy:.1e} J (peak {peak:.1e}, bound 1e-20), \
                 max |w| {max_disp:.1e} m (bound {:.1e}), {secs:.2} s (bound 10)",
                1e-10 * length
            ),
        ))
    })
}

/// Tip displacements under M_z = 2.5 pi against the analytic arc solution.
pub fn criterion_pure_bending_accuracy() -> CheckResult {
    check("pure_bending_accuracy", || {
        let case = pure_bending_accuracy_case();
        let start = Instant::now();
        let run = run_case(&case)?;
        let secs = start.elapsed().as_secs_f64();
        let tip = run.state.w_f[run.model.mesh.cells];
        let (_, wx_ref, wy_ref) = euler_analytic(2.5 * PI, 10.0, 100.0);
        let ex = relative_error(tip[0].abs(), wx_ref).unwrap();
        let ey = relative_error(tip[1], wy_ref).unwrap();
        let ok = run.aborted.is_none() && ex <= 1.0 && ey <= 0.2 && secs <= 1.0;
        Ok((
            ok,
            format!(
                "|w_x| {:.5} m vs {wx_ref:.5} ({ex:.3} %, bound 1.0), \
                 w_y {:.5} m vs {wy_ref:.5} ({ey:.3} %, bound 0.2), {secs:.2} s (bound 1)",
                tip[0].abs(),
                tip[1]
            ),
        ))
    })
}

/// M_z = 20 pi in 4 increments rolls the beam into a circle whose tip lands
/// back on the clamp.
pub fn criterion_full_circle_closure() -> CheckResult {
    check("full_circle_closure", || {
        let case = pure_bending_case();
        let start = Instant::now();
        let run = run_case(&case)?;
        let secs = start.elapsed().as_secs_f64();
        let m = run.model.mesh.cells;
        let length = run.model.mesh.length;
        let gap = (run.model.geom.r0_f[m] + run.state.w_f[m] - run.model.geom.r0_f[0]).norm();
        let total_iters: usize = run.reports.iter().map(|r| r.iterations).sum();
        let avg = total_iters as f64 / run.reports.len().max(1) as f64;
        let ok =
            run.aborted.is_none() && gap <= 0.02 * length && avg <= 10.0 && secs <= 1.0;
        Ok((
            ok,
            format!(
                "tip gap {gap:.4} m (bound {:.2}), avg iterations {avg:.1} (bound 10), \
                 {secs:.2} s (bound 1)",
                0.02 * length
            ),
        ))
    })
}

/// Mesh convergence of the pure-bending tip displacement against the
/// analytic values at second order.
pub fn criterion_pure_bending_convergence() -> CheckResult {
    check("pure_bending_convergence", || {
        let meshes = [5usize, 10, 20, 40];
        let sweep = mesh_sweep(&pure_bending_accuracy_case(), &meshes)?;
        let aborted = sweep.iter().any(|(run, _)| run.aborted.is_some());
        let (_, wx_ref, wy_ref) = euler_analytic(2.5 * PI, 10.0, 100.0);
        let ref_norm = (wx_ref * wx_ref + wy_ref * wy_ref).sqrt();
        let errors: Vec<f64> = sweep
            .iter()
            .map(|(run, _)| {
                let tip = run.state.w_f[run.model.mesh.cells];
                let dx = tip[0].abs() - wx_ref;
                let dy = tip[1] - wy_ref;
                (dx * dx + dy * dy).sqrt() / ref_norm * 100.0
            })
            .collect();
        let order = convergence_order(&meshes, &errors);
        let ok = !aborted && in_order_band(order);
        Ok((
            ok,
            format!(
                "errors {} % at meshes {meshes:?}, fitted order {} (band [{}, {}])",
                fmt_list(&errors),
                fmt_order(order),
                ORDER_BAND.0,
                ORDER_BAND.1
            ),
        ))
    })
}

/// 45-degree bend tip displacement magnitudes against the reported values
/// and the published envelope.
pub fn criterion_bend45_displacements() -> CheckResult {
    check("bend45_displacements", || {
        let run = run_case(&bend45_case())?;
        let tip = run.state.w_f[run.model.mesh.cells];
        let measured = [tip[0].abs(), tip[1].abs(), tip[2].abs()];
        let reported = [23.540, 13.564, 53.225];
        let envelope_lo = [23.48, 13.4, 53.08];
        let envelope_hi = [23.87, 13.73, 53.71];
        let mut errors = [0.0f64; 3];
        let mut ok = run.aborted.is_none();
        for i in 0..3 {
            errors[i] = relative_error(measured[i], reported[i]).unwrap();
            ok &= errors[i] <= 0.5
                && measured[i] >= envelope_lo[i]
                && measured[i] <= envelope_hi[i];
        }
        Ok((
            ok,
            format!(
                "|w| = ({:.3}, {:.3}, {:.3}) m vs ({:.3}, {:.3}, {:.3}), \
                 errors ({:.2}, {:.2}, {:.2}) % (bound 0.5), envelope [23.48-23.87, 13.4-13.73, 53.08-53.71]",
                measured[0], measured[1], measured[2],
                reported[0], reported[1], reported[2],
                errors[0], errors[1], errors[2]
            ),
        ))
    })
}

/// 45-degree bend mesh convergence: displacements against the 80-cell
/// reference, and recovered tip force in the displacement-driven variant.
pub fn criterion_bend45_convergence() -> CheckResult {
    check("bend45_convergence", || {
        let meshes_disp = [5usize, 10, 20, 40, 80];
        let sweep_disp = mesh_sweep(&bend45_case(), &meshes_disp)?;
        let mut aborted = sweep_disp.iter().any(|(run, _)| run.aborted.is_some());
        let tips: Vec<Vec3> = sweep_disp
            .iter()
            .map(|(run, _)| run.state.w_f[run.model.mesh.cells])
            .collect();
        let reference = tips[4];
        let errors_disp: Vec<f64> = tips[..4]
            .iter()
            .map(|tip| (*tip - reference).norm() / reference.norm() * 100.0)
            .collect();
        let order_disp = convergence_order(&meshes_disp[..4], &errors_disp);

        let meshes_force = [10usize, 20, 40, 80, 160];
        let sweep_force = mesh_sweep(&bend45_displacement_case(), &meshes_force)?;
        aborted |= sweep_force.iter().any(|(run, _)| run.aborted.is_some());
        let forces: Vec<Vec3> = sweep_force
            .iter()
            .map(|(run, _)| run.state.n_f[run.model.mesh.cells])
            .collect();
        let errors_force: Vec<f64> = forces
            .iter()
            .map(|n| relative_error(n[2], 600.0).unwrap())
            .collect();
        let order_force = convergence_order(&meshes_force, &errors_force);
        let n_x: Vec<f64> = forces.iter().map(|n| n[0].abs()).collect();
        let n_y: Vec<f64> = forces.iter().map(|n| n[1].abs()).collect();
        let monotone = n_x.windows(2).all(|p| p[1] < p[0])
            && n_y.windows(2).all(|p| p[1] < p[0]);
        let ok = !aborted
            && in_order_band(order_disp)
            && in_order_band(order_force)
            && monotone
            && n_x[4] <= 0.5;
        Ok((
            ok,
            format!(
                "displacement errors {} % order {} ; n_z errors {} % order {} \
                 (band [{}, {}]); |n_x| {} N monotone {monotone}, finest {:.2} N (bound 0.5)",
                fmt_list(&errors_disp),
                fmt_order(order_disp),
                fmt_list(&errors_force),
                fmt_order(order_force),
                ORDER_BAND.0,
                ORDER_BAND.1,
                fmt_list(&n_x),
                n_x[4]
            ),
        ))
    })
}

/// Load-displacement curves of the 45-degree bend to 3000 N in 30 N steps:
/// every increment converges and the tip components evolve monotonically.
pub fn criterion_load_displacement_curve() -> CheckResult {
    check("load_displacement_curve", || {
        let mut case = bend45_case();
        case.name = "bend45_3000".into();
        case.cells = 8;
        case.solver.schedule = vec![Stage {
            steps: 100,
            to_factor: 5.0,
        }];
        let run = run_case(&case)?;
        let w: Vec<Vec3> = run.reports.iter().map(|r| r.monitor.w).collect();
        let monotone = |f: &dyn Fn(&Vec3) -> f64| {
            w.windows(2).all(|pair| f(&pair[1]) >= f(&pair[0]) - 1e-12)
        };
        let z_up = monotone(&|v: &Vec3| v[2]);
        let x_down = monotone(&|v: &Vec3| -v[0]);
        let y_down = monotone(&|v: &Vec3| -v[1]);
        let finite = w.iter().all(|v| v.norm().is_finite());
        let ok = run.aborted.is_none() && z_up && x_down && y_down && finite;
        Ok((
            ok,
            format!(
                "increments {}, aborted {}, monotone w_z {z_up} / -w_x {x_down} / -w_y {y_down}, \
                 final w = ({:.2}, {:.2}, {:.2}) m",
                run.reports.len(),
                run.aborted.is_some(),
                w.last().map_or(0.0, |v| v[0]),
                w.last().map_or(0.0, |v| v[1]),
                w.last().map_or(0.0, |v| v[2])
            ),
        ))
    })
}

/// The helix case completes and the tip's out-of-plane displacement
/// oscillates through zero as the beam coils.
pub fn criterion_helix() -> CheckResult {
    check("helix", || {
        let start = Instant::now();
        let run = run_case(&helix_case())?;
        let secs = start.elapsed().as_secs_f64();
        let mut sign_changes = 0usize;
        let mut prev = 0.0f64;
        for report in &run.reports {
            let z = report.monitor.w[2];
            if z != 0.0 {
                if prev != 0.0 && z.signum() != prev.signum() {
                    sign_changes += 1;
                }
                prev = z;
            }
        }
        let ok = run.aborted.is_none() && sign_changes >= 3 && secs <= 120.0;
        Ok((
            ok,
            format!(
                "increments {}, w_z sign changes {sign_changes} (need >= 3), {secs:.1} s (bound 120)",
                run.reports.len()
            ),
        ))
    })
}

/// Staged loading of the deep arch finds the buckling load as the last
/// converged increment.
pub fn criterion_arch_buckling() -> CheckResult {
    check("arch_buckling", || {
        let start = Instant::now();
        let outcome = detect_buckling(&arch_buckling_case())?;
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            BucklingOutcome::Critical { load, attempted } => {
                let ok = (9.0..=9.2).contains(&load) && secs <= 30.0;
                Ok((
                    ok,
                    format!(
                        "critical load {load:.3} N (band [9.0, 9.2]; exact reference 8.97 N), \
                         first failed increment {attempted:.3} N, {secs:.1} s (bound 30)"
                    ),
                ))
            }
            BucklingOutcome::ScheduleExhausted { final_factor } => Ok((
                false,
                format!("no instability up to {final_factor:.3} N; schedule exhausted"),
            )),
        }
    })
}

/// SplitMix64, a tiny deterministic generator for the property spot checks
/// so the dev-only RNG crates stay out of the library.
struct SplitMix64(u64);

impl SplitMix64 {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    /// Uniform in [-1, 1).
    fn next_signed(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 52) as f64 * 2.0 - 1.0
    }
}

/// Smooth low-mode cell fields for building generic deformed states; each
/// component carries a distinct sine mode so no symmetry survives.
fn smooth_increments(cells: usize, amp_w: f64, amp_psi: f64, phase: f64) -> (Vec<Vec3>, Vec<Vec3>) {
    let mut dw = Vec::with_capacity(cells);
    let mut dpsi = Vec::with_capacity(cells);
    for i in 0..cells {
        let x = (i as f64 + 0.5) / cells as f64;
        let mut w = Vec3::ZERO;
        let mut p = Vec3::ZERO;
        for k in 0..3 {
            let mode = (k + 1) as f64;
            w[k] = amp_w * (PI * mode * x + phase * (k as f64 + 1.0)).sin();
            p[k] = amp_psi * (0.8 * PI * mode * x + 1.7 * phase + k as f64).cos();
        }
        dw.push(w);
        dpsi.push(p);
    }
    (dw, dpsi)
}

fn clamped_patches(
    state: &BeamState,
    mesh: &BeamMesh,
    geom: &InitialGeometry,
    material: &Material,
) -> (BoundaryPatch, BoundaryPatch) {
    let targets = EndTargets {
        translation: Constraint::Dirichlet {
            remaining: Vec3::ZERO,
        },
        rotation: Constraint::Dirichlet {
            remaining: Vec3::ZERO,
        },
    };
    let m = mesh.cells;
    let arm = 0.5 * mesh.l_c;
    let west = build_patch(
        &targets,
        &face_coefficient_set(state, geom, material, 0),
        state.rprime_f[0],
        D_WEST,
        mesh.l_w[0],
        arm,
    );
    let east = build_patch(
        &targets,
        &face_coefficient_set(state, geom, material, m),
        state.rprime_f[m],
        D_EAST,
        mesh.l_e[m - 1],
        arm,
    );
    (west, east)
}

fn residual_vector(
    state: &BeamState,
    mesh: &BeamMesh,
    geom: &InitialGeometry,
    material: &Material,
) -> Vec<Vec6> {
    let face_sets = face_coefficient_sets(state, geom, material);
    let (west, east) = clamped_patches(state, mesh, geom, material);
    let zero = vec![Vec3::ZERO; mesh.cells];
    let system = assemble_system(&face_sets, mesh, &zero, &zero, &west, &east);
    system.rows.iter().map(|row| row.r).collect()
}

/// Worst relative mismatch between the assembled Jacobian's directional
/// derivative and a central finite difference of the residual, over a
/// straight and a curved beam in generic deformed states.
fn fd_jacobian_worst_error() -> f64 {
    const EPS: f64 = 1e-7;
    let material = Material::new(1.0e4, 5.0e3, 5.0e3, 100.0, 100.0, 100.0).unwrap();
    let cells = 12usize;
    let zero_bounds = FaceIncrements {
        dw_west: Vec3::ZERO,
        dpsi_west: Vec3::ZERO,
        dw_east: Vec3::ZERO,
        dpsi_east: Vec3::ZERO,
    };
    let mut worst = 0.0f64;
    for curved in [false, true] {
        let mesh = build_uniform_mesh(cells, 10.0).unwrap();
        let geom = if curved {
            make_arc(&mesh, 20.0 / PI, 0.2, ArcOrientation::CounterClockwise).unwrap()
        } else {
            make_straight(&mesh)
        };
        let mut state = BeamState::initial(&mesh, &geom);
        for pass in 0..2 {
            let (dw, dpsi) = smooth_increments(cells, 0.05, 0.08, 0.7 + 1.3 * pass as f64);
            update_state(&mut state, &mesh, &geom, &material, &dw, &dpsi, &zero_bounds).unwrap();
        }

        let face_sets = face_coefficient_sets(&state, &geom, &material);
        let (west, east) = clamped_patches(&state, &mesh, &geom, &material);
        let zero = vec![Vec3::ZERO; cells];
        let system = assemble_system(&face_sets, &mesh, &zero, &zero, &west, &east);

        for dir in 0..2 {
            let (dw, dpsi) = smooth_increments(cells, 0.1, 0.1, 0.3 + 2.1 * dir as f64);
            let delta: Vec<Vec6> = (0..cells)
                .map(|i| Vec6::from_parts(dw[i], dpsi[i]))
                .collect();

            let mut plus = state.clone();
            let dw_p: Vec<Vec3> = dw.iter().map(|v| *v * EPS).collect();
            let dpsi_p: Vec<Vec3> = dpsi.iter().map(|v| *v * EPS).collect();
            update_state(&mut plus, &mesh, &geom, &material, &dw_p, &dpsi_p, &zero_bounds)
                .unwrap();
            let mut minus = state.clone();
            let dw_m: Vec<Vec3> = dw.iter().map(|v| *v * -EPS).collect();
            let dpsi_m: Vec<Vec3> = dpsi.iter().map(|v| *v * -EPS).collect();
            update_state(&mut minus, &mesh, &geom, &material, &dw_m, &dpsi_m, &zero_bounds)
                .unwrap();
            let r_plus = residual_vector(&plus, &mesh, &geom, &material);
            let r_minus = residual_vector(&minus, &mesh, &geom, &material);

            let mut jd_norm2 = 0.0;
            let mut diff_norm2 = 0.0;
            for i in 0..cells {
                let row = &system.rows[i];
                let mut jd = row.a_c * delta[i];
                if i > 0 {
                    jd += row.a_w * delta[i - 1];
                }
                if i + 1 < cells {
                    jd += row.a_e * delta[i + 1];
                }
                let fd = (r_plus[i] - r_minus[i]) * (-1.0 / (2.0 * EPS));
                jd_norm2 += jd.norm() * jd.norm();
                diff_norm2 += (jd - fd).norm() * (jd - fd).norm();
            }
            worst = worst.max((diff_norm2 / jd_norm2).sqrt());
        }
    }
    worst
}

fn random_dominant_rows(rng: &mut SplitMix64, m: usize) -> Vec<BlockRow> {
    (0..m)
        .map(|i| {
            let mut row = BlockRow::ZERO;
            let mut fill = |mat: &mut Mat6| {
                for r in 0..6 {
                    for c in 0..6 {
                        mat.0[r][c] = rng.next_signed();
                    }
                }
            };
            if i > 0 {
                fill(&mut row.a_w);
            }
            if i + 1 < m {
                fill(&mut row.a_e);
            }
            fill(&mut row.a_c);
            for d in 0..6 {
                row.a_c.0[d][d] += 20.0;
                row.r[d] = 3.0 * rng.next_signed();
            }
            row
        })
        .collect()
}

/// Worst relative deviation of the block Thomas solver from the dense
/// oracle over random diagonally dominant systems up to 50 block rows.
fn thomas_vs_dense_worst_error() -> f64 {
    let mut rng = SplitMix64(0x0bad_5eed_0bad_5eed);
    let mut worst = 0.0f64;
    for &m in &[7usize, 23, 50] {
        let system = BlockTridiagonalSystem {
            rows: random_dominant_rows(&mut rng, m),
        };
        let fast = block_thomas_solve(&system).unwrap();
        let dense = dense_block_solve(&system);
        let scale = dense.iter().map(|v| v.norm()).fold(1.0f64, f64::max);
        for (f, d) in fast.iter().zip(&dense) {
            worst = worst.max((*f - *d).norm() / scale);
        }
    }
    worst
}

/// Orthonormality defect of a triad after many compounded exponential
/// updates, the way the solver accumulates face rotations.
fn so3_drift(updates: usize) -> f64 {
    let mut rng = SplitMix64(0xd41f_7d41_f7d4_1f7d);
    let mut lambda = RotationMatrix::IDENTITY;
    for _ in 0..updates {
        let psi = Vec3::new(rng.next_signed(), rng.next_signed(), rng.next_signed()) * 0.3;
        lambda = exp_so3(psi) * lambda;
    }
    orthonormality_defect(lambda.mat())
}

/// Largest entry jump of the exponential map and the tangent operator
/// across the series/closed-form switchover angle.
fn branch_agreement_error() -> f64 {
    let axis = Vec3::new(0.36, -0.48, 0.8);
    let below = axis * (SMALL_ANGLE * (1.0 - 1e-9));
    let above = axis * (SMALL_ANGLE * (1.0 + 1e-9));
    let exp_gap = (*exp_so3(below).mat() - *exp_so3(above).mat()).frobenius();
    let tan_gap = (tangent(below).unwrap() - tangent(above).unwrap()).frobenius();
    exp_gap.max(tan_gap)
}

/// Fitted order at which the incrementally accumulated curvature and the
/// curvature recomputed from the triad-derivative definition agree under
/// mesh refinement, for a constant-twist ramp.
fn two_route_curvature_order() -> Option<f64> {
    let meshes = [8usize, 16, 32];
    let rate = 0.3;
    let length = 10.0;
    let material = Material::new(1.0e4, 5.0e3, 5.0e3, 100.0, 100.0, 100.0).unwrap();
    let mut errors = Vec::new();
    for &m in &meshes {
        let mesh = build_uniform_mesh(m, length).unwrap();
        let geom = make_straight(&mesh);
        let mut state = BeamState::initial(&mesh, &geom);
        let dw = vec![Vec3::ZERO; m];
        let dpsi: Vec<Vec3> = mesh
            .cell_centres
            .iter()
            .map(|&s| Vec3::E1 * (rate * s))
            .collect();
        let bounds = FaceIncrements {
            dw_west: Vec3::ZERO,
            dpsi_west: Vec3::ZERO,
            dw_east: Vec3::ZERO,
            dpsi_east: Vec3::E1 * (rate * length),
        };
        update_state(&mut state, &mesh, &geom, &material, &dw, &dpsi, &bounds).unwrap();
        let by_definition = rotational_strain_by_definition(&state, &mesh, &geom);
        let err = by_definition
            .iter()
            .enumerate()
            .map(|(j, kd)| (state.k_f[j + 1] - *kd).norm())
            .fold(0.0f64, f64::max);
        errors.push(err);
    }
    convergence_order(&meshes, &errors)
}

/// The always-on numerical property suite in spot-check form: Jacobian
/// exactness, Thomas-vs-dense agreement, SO(3) drift, branch continuity,
/// and two-route curvature convergence.
pub fn criterion_property_spot_checks() -> CheckResult {
    check("property_spot_checks", || {
        let fd = fd_jacobian_worst_error();
        let thomas = thomas_vs_dense_worst_error();
        let drift = so3_drift(10_000);
        let branch = branch_agreement_error();
        let k_order = two_route_curvature_order();
        let ok = fd <= 1e-5
            && thomas <= 1e-11
            && drift <= 1e-10
            && branch <= 1e-14
            && in_order_band(k_order);
        Ok((
            ok,
            format!(
                "fd jacobian {fd:.1e} (bound 1e-5), thomas vs dense {thomas:.1e} (bound 1e-11), \
                 so3 drift {drift:.1e} (bound 1e-10), branch gap {branch:.1e} (bound 1e-14), \
                 curvature order {} (band [{}, {}])",
                fmt_order(k_order),
                ORDER_BAND.0,
                ORDER_BAND.1
            ),
        ))
    })
}

/// The acceptance checks in criterion order.
pub const CHECKS: [(&str, fn() -> CheckResult); 10] = [
    ("objectivity", criterion_objectivity),
    ("pure_bending_accuracy", criterion_pure_bending_accuracy),
    ("full_circle_closure", criterion_full_circle_closure),
    ("pure_bending_convergence", criterion_pure_bending_convergence),
    ("bend45_displacements", criterion_bend45_displacements),
    ("bend45_convergence", criterion_bend45_convergence),
    ("load_displacement_curve", criterion_load_displacement_curve),
    ("helix", criterion_helix),
    ("arch_buckling", criterion_arch_buckling),
    ("property_spot_checks", criterion_property_spot_checks),
];

/// Runs every acceptance check whose name contains `filter` (all checks
/// when the filter is empty), in criterion order.
pub fn verification_checks(filter: &str) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .filter(|(name, _)| name.contains(filter))
        .map(|(_, run)| run())
        .collect()
}
