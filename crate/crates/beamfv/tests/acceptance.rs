//! The acceptance suite: one test per verification criterion, each printing
//! its PASS/FAIL line (run with `--nocapture` to see them on success).

use beamfv::bench;

fn run(criterion: fn() -> bench::CheckResult) {
    let result = criterion();
    println!("{result}");
    assert!(result.passed, "{result}");
}

#[test]
fn rigid_rotation_preserves_zero_strain_and_returns_home() {
    run(bench::criterion_objectivity);
}

#[test]
fn pure_bending_tip_matches_the_analytic_arc() {
    run(bench::criterion_pure_bending_accuracy);
}

#[test]
fn four_large_increments_roll_the_beam_into_a_closed_circle() {
    run(bench::criterion_full_circle_closure);
}

#[test]
fn pure_bending_converges_at_second_order() {
    run(bench::criterion_pure_bending_convergence);
}

#[test]
fn bend45_tip_displacements_sit_in_the_published_envelope() {
    run(bench::criterion_bend45_displacements);
}

#[test]
fn bend45_converges_at_second_order_in_both_driving_modes() {
    run(bench::criterion_bend45_convergence);
}

#[test]
fn bend45_load_displacement_curves_are_smooth_to_3000_newtons() {
    run(bench::criterion_load_displacement_curve);
}

#[test]
fn tip_loads_coil_the_beam_into_a_helix() {
    run(bench::criterion_helix);
}

#[test]
fn the_deep_arch_buckles_at_the_reference_load() {
    run(bench::criterion_arch_buckling);
}

#[test]
fn numerical_property_spot_checks_hold() {
    run(bench::criterion_property_spot_checks);
}
