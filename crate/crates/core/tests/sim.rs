use darwinics::constrained::HamiltonianForm;
use darwinics::darwin::{canonical_angular_momentum, TwoBodyState};
use darwinics::model::{LineCharge, LineSolenoid, MagneticDipole, PointCharge};
use darwinics::sim::{
    integrate, ledger_report, scattering_run, time_reversal_error, Body, BodySpec, DynamicalSystem, IntegrateOptions,
    Method, Provider, ScatterMode, ScatteringSetup,
};
use darwinics::{Context, Error, Vec3};

fn pair(a: Body, b: Body) -> Vec<BodySpec> {
    vec![BodySpec::new("a", a), BodySpec::new("b", b)]
}

fn feynman(ctx: Context) -> DynamicalSystem {
    let s = TwoBodyState::feynman(1.0, 1.0, 1.0, 10.0);
    DynamicalSystem::new(ctx, pair(Body::Charge(s.body1), Body::Charge(s.body2)), Provider::Darwin)
}

#[test]
fn free_particles_move_in_straight_lines() {
    let a = PointCharge::new(0.0, 1.0, Vec3::ZERO, Vec3::new(1.0, 2.0, 0.5));
    let b = PointCharge::new(0.0, 2.0, Vec3::new(5.0, 0.0, 0.0), Vec3::new(-1.0, 0.0, 0.0));
    let sys = DynamicalSystem::new(Context::nondimensional(100.0), pair(Body::Charge(a), Body::Charge(b)), Provider::Darwin);
    let traj = integrate(&sys, 0.0, 2.0, &IntegrateOptions::with_tol(1e-10)).unwrap();
    let end = traj.bodies[0].positions.last().unwrap();
    assert!((*end - Vec3::new(2.0, 4.0, 1.0)).norm() < 1e-14);
    assert!((*traj.bodies[1].positions.last().unwrap() - Vec3::new(3.0, 0.0, 0.0)).norm() < 1e-14);
}

/// Coulomb attraction with c effectively infinite: Kepler orbits.
#[test]
fn kepler_orbit_conserves_energy_and_angular_momentum() {
    let ctx = Context::nondimensional(1e8);
    let (k, m1, m2, r0) = (1.0f64, 1.0f64, 1.0f64, 1.0f64);
    let mu = m1 * m2 / (m1 + m2);
    // eccentric bound orbit: 0.8 of the circular speed
    let v_rel = 0.8 * (k / (mu * r0)).sqrt();
    let a = PointCharge::new(1.0, m1, Vec3::ZERO, Vec3::Y * (-v_rel * m2 / (m1 + m2)));
    let b = PointCharge::new(-1.0, m2, Vec3::X * r0, Vec3::Y * (v_rel * m1 / (m1 + m2)));
    let sys = DynamicalSystem::new(ctx, pair(Body::Charge(a), Body::Charge(b)), Provider::Darwin);
    // closed-form period from the vis-viva semi-major axis
    let energy = 0.5 * mu * v_rel * v_rel - k / r0;
    let semi = -k / (2.0 * energy);
    let period = 2.0 * std::f64::consts::PI * (mu * semi.powi(3) / k).sqrt();
    let opts = IntegrateOptions::with_tol(1e-10).sampled(0.0, 10.0 * period, 101);
    let traj = integrate(&sys, 0.0, 10.0 * period, &opts).unwrap();
    let report = ledger_report(&traj).unwrap();
    assert!(report.energy_drift / energy.abs() < 1e-8, "{:e}", report.energy_drift / energy.abs());
    let l0 = canonical_angular_momentum(&ctx, &TwoBodyState::new(a, b), Vec3::ZERO).unwrap();
    for i in 0..traj.times.len() {
        let s = TwoBodyState::new(
            PointCharge::new(1.0, m1, traj.bodies[0].positions[i], traj.bodies[0].velocities[i]),
            PointCharge::new(-1.0, m2, traj.bodies[1].positions[i], traj.bodies[1].velocities[i]),
        );
        let l = canonical_angular_momentum(&ctx, &s, Vec3::ZERO).unwrap();
        assert!((l - l0).norm() / l0.norm() < 1e-8);
    }
    // back at the start after whole periods
    let rel = *traj.bodies[1].positions.last().unwrap() - *traj.bodies[0].positions.last().unwrap();
    assert!((rel - Vec3::X * r0).norm() < 1e-6, "{rel}");
}

#[test]
fn feynman_canonical_flat_mechanical_curved() {
    let sys = feynman(Context::nondimensional(100.0));
    let t1 = 10.0 * 1.0 / 10.0;
    let traj = integrate(&sys, 0.0, t1, &IntegrateOptions::with_tol(1e-10).sampled(0.0, t1, 201)).unwrap();
    let r = ledger_report(&traj).unwrap();
    assert!(r.canonical_drift_rel < 1e-8, "{}", r.canonical_drift_rel);
    assert!(r.mechanical_delta.y.abs() > 1e3 * r.canonical_drift, "{:?}", r);
    assert!((r.mechanical_delta + r.field_delta).norm() < 1e-8 * r.mechanical_delta.norm().max(1.0));
    assert!(r.balance_residual < 1e-6, "{}", r.balance_residual);
    assert!((r.balance_ratio.unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn fixed_step_drift_is_fourth_order() {
    let sys = feynman(Context::nondimensional(100.0));
    let drift = |h: f64| {
        let mut opts = IntegrateOptions::default();
        opts.ode.method = Method::Rk4 { step: h };
        let traj = integrate(&sys, 0.0, 1.0, &opts).unwrap();
        ledger_report(&traj).unwrap().canonical_drift
    };
    let (d1, d2) = (drift(2e-3), drift(1e-3));
    assert!(d1 / d2 >= 4.0, "{d1:e} {d2:e}");
}

#[test]
fn adaptive_drift_falls_with_tolerance() {
    let sys = feynman(Context::nondimensional(100.0));
    let drift = |tol: f64| ledger_report(&integrate(&sys, 0.0, 1.0, &IntegrateOptions::with_tol(tol)).unwrap()).unwrap().canonical_drift;
    let (a, b) = (drift(1e-6), drift(1e-9));
    assert!(b < a / 4.0, "{a:e} {b:e}");
}

#[test]
fn time_reversal_darwin_and_constrained() {
    let tol = 1e-10;
    let opts = IntegrateOptions::with_tol(tol);
    let e = time_reversal_error(&feynman(Context::nondimensional(100.0)), 1.0, &opts).unwrap();
    assert!(e < 10.0 * tol, "{e:e}");

    let ctx = Context::nondimensional(20.0);
    let q = PointCharge::new(1.0, 1.0, Vec3::new(-2.0, 0.7, 0.1), Vec3::new(1.0, 0.0, 0.2));
    let d = MagneticDipole::new(Vec3::new(0.3, 0.2, 1.0), 2.0, Vec3::ZERO, Vec3::new(0.0, 0.1, 0.0));
    let sys = DynamicalSystem::new(ctx, pair(Body::Charge(q), Body::Dipole(d)), Provider::ConstrainedLagrangian);
    let e = time_reversal_error(&sys, 3.0, &opts).unwrap();
    assert!(e < 10.0 * tol, "{e:e}");
}

#[test]
fn constrained_ab_run_is_force_free_and_flat() {
    let ctx = Context::nondimensional(30.0);
    let q = PointCharge::new(1.0, 1.0, Vec3::new(-5.0, 1.0, 0.0), Vec3::X * 2.0);
    let s = LineSolenoid::new(3.0, Vec3::ZERO, 4.0, Vec3::new(0.0, 0.3, 0.0));
    let sys = DynamicalSystem::new(ctx, pair(Body::Charge(q), Body::Solenoid(s)), Provider::ConstrainedLagrangian);
    let traj = integrate(&sys, 0.0, 5.0, &IntegrateOptions::with_tol(1e-10).sampled(0.0, 5.0, 51)).unwrap();
    for b in &traj.bodies {
        assert!(b.velocities.iter().all(|v| (*v - b.velocities[0]).norm() < 1e-15));
    }
    let r = ledger_report(&traj).unwrap();
    assert!(r.mechanical_change < 1e-14);
    assert!(r.canonical_drift < 1e-9, "{}", r.canonical_drift);
    assert!(r.energy_drift < 1e-9, "{}", r.energy_drift);
}

#[test]
fn static_system_has_no_drift() {
    let ctx = Context::nondimensional(30.0);
    let q = PointCharge::new(1.0, 1.0, Vec3::new(2.0, 1.0, 0.0), Vec3::ZERO);
    let s = LineSolenoid::stationary(3.0, Vec3::ZERO);
    let sys = DynamicalSystem::new(ctx, pair(Body::Charge(q), Body::Solenoid(s)), Provider::UnconstrainedForce);
    let traj = integrate(&sys, 0.0, 1.0, &IntegrateOptions::default()).unwrap();
    let r = ledger_report(&traj).unwrap();
    assert_eq!((r.canonical_drift, r.energy_drift, r.mechanical_change), (0.0, 0.0, 0.0));
}

#[test]
fn validation_rejects_incompatible_systems() {
    let ctx = Context::nondimensional(30.0);
    let q = PointCharge::new(1.0, 1.0, Vec3::X, Vec3::ZERO);
    let w = LineCharge::stationary(1.0, Vec3::ZERO);
    let sys = DynamicalSystem::new(ctx, pair(Body::Charge(q), Body::Wire(w)), Provider::ConstrainedLagrangian);
    assert!(matches!(sys.validate(), Err(Error::InvalidInput(_))));
    let s = feynman(ctx);
    let mut fixed = s.clone();
    fixed.bodies.iter_mut().for_each(|b| b.dynamic = false);
    assert!(fixed.validate().is_err());
    let mut un = s.clone();
    un.provider = Provider::UnconstrainedForce;
    assert!(un.validate().is_err());
    let d = MagneticDipole::new(Vec3::Z, 1.0, Vec3::X, Vec3::ZERO);
    let moving_source = DynamicalSystem::new(ctx, pair(Body::Dipole(d), Body::Wire(w)), Provider::Hamiltonian);
    assert!(moving_source.validate().is_err());
}

#[test]
fn close_approach_reports_underflow_with_state() {
    // head-on attraction: collision in finite time
    let ctx = Context::nondimensional(1e6);
    let a = PointCharge::new(1.0, 1.0, Vec3::ZERO, Vec3::ZERO);
    let b = PointCharge::new(-1.0, 1.0, Vec3::X, Vec3::ZERO);
    let sys = DynamicalSystem::new(ctx, pair(Body::Charge(a), Body::Charge(b)), Provider::Darwin);
    match integrate(&sys, 0.0, 10.0, &IntegrateOptions::with_tol(1e-10)) {
        Err(Error::StepSizeUnderflow { state, .. }) => assert!(!state.is_empty()),
        Err(Error::CoincidentPoints { .. }) | Err(Error::SingularSystem(_)) | Err(Error::OutOfRegime(_)) => {}
        other => panic!("{other:?}"),
    }
}

fn dipole_near_charge(provider: Provider) -> DynamicalSystem {
    let ctx = Context::nondimensional(50.0);
    let d = MagneticDipole::new(Vec3::new(0.2, -0.1, 1.0), 1.0, Vec3::new(-3.0, 1.0, 0.2), Vec3::new(1.0, 0.1, 0.0));
    let q = PointCharge::new(2.0, 1.0, Vec3::ZERO, Vec3::ZERO);
    DynamicalSystem::new(ctx, vec![BodySpec::new("dipole", Body::Dipole(d)), BodySpec::new("charge", Body::Charge(q)).fixed()], provider)
}

#[test]
fn hidden_momentum_and_exact_hamiltonian_follow_the_lagrangian() {
    let opts = IntegrateOptions::with_tol(1e-11).sampled(0.0, 6.0, 31);
    let lag = integrate(&dipole_near_charge(Provider::ConstrainedLagrangian), 0.0, 6.0, &opts).unwrap();
    let hid = integrate(&dipole_near_charge(Provider::HiddenMomentum), 0.0, 6.0, &opts).unwrap();
    let ham = integrate(&dipole_near_charge(Provider::Hamiltonian).with_form(HamiltonianForm::Exact), 0.0, 6.0, &opts).unwrap();
    let moved = (lag.bodies[0].velocities.last().unwrap().clone() - lag.bodies[0].velocities[0]).norm();
    assert!(moved > 1e-4, "{moved}");
    for i in 0..lag.times.len() {
        for other in [&hid, &ham] {
            assert!((lag.bodies[0].positions[i] - other.bodies[0].positions[i]).norm() < 1e-8);
            assert!((lag.bodies[0].velocities[i] - other.bodies[0].velocities[i]).norm() < 1e-8);
        }
    }
    let r = ledger_report(&ham).unwrap();
    assert!(r.energy_drift < 1e-9 && r.canonical_drift > 1e-6);
}

#[test]
fn hidden_momentum_in_a_wire_field() {
    let ctx = Context::nondimensional(50.0);
    let d = MagneticDipole::new(Vec3::Z, 1.0, Vec3::new(-3.0, 1.0, 0.0), Vec3::new(1.0, 0.0, 0.0));
    let w = LineCharge::stationary(1.5, Vec3::ZERO);
    let sys = DynamicalSystem::new(ctx, vec![BodySpec::new("dipole", Body::Dipole(d)), BodySpec::new("wire", Body::Wire(w)).fixed()], Provider::HiddenMomentum);
    let traj = integrate(&sys, 0.0, 6.0, &IntegrateOptions::with_tol(1e-10)).unwrap();
    assert!((traj.bodies[0].velocities.last().unwrap().clone() - Vec3::X).norm() < 1e-12);
}

fn ab_scatter(flux: f64, provider: Provider) -> DynamicalSystem {
    let ctx = Context::nondimensional(20.0);
    let q = PointCharge::new(1.0, 1.0, Vec3::ZERO, Vec3::ZERO);
    let s = LineSolenoid::new(flux, Vec3::ZERO, 5.0, Vec3::ZERO);
    DynamicalSystem::new(ctx, pair(Body::Charge(q), Body::Solenoid(s)), provider)
}

#[test]
fn ab_fly_by_displaces_without_net_impulse() {
    let setup = ScatteringSetup::new(1.0, 2.0);
    for mode in [ScatterMode::ImpulseApprox, ScatterMode::Full] {
        let r = scattering_run(&ab_scatter(2.0, Provider::UnconstrainedForce), &setup, mode).unwrap();
        // half-passage impulse 2κq/(cb)
        let half = 2.0 * (2.0 / (4.0 * std::f64::consts::PI)) / 20.0;
        let d = r.displacements[1].norm();
        assert!(d > 1e-4, "{mode:?} {d}");
        let tol = if mode == ScatterMode::Full { 1e-3 } else { 1e-6 };
        assert!(r.impulses[1].norm() < tol * half, "{mode:?} {:?}", r.impulses[1]);
        assert!(r.impulses[1].norm() <= r.impulse_error.max(1e-15), "{mode:?}");
        assert!(r.impulses[0].norm() < 1e-12);
    }
}

#[test]
fn full_mode_approaches_impulse_approximation_with_weak_coupling() {
    let setup = ScatteringSetup::new(1.0, 2.0);
    let dev = |k: f64| {
        let sys = ab_scatter(2.0 * k, Provider::UnconstrainedForce);
        let ia = scattering_run(&sys, &setup, ScatterMode::ImpulseApprox).unwrap();
        let full = scattering_run(&sys, &setup, ScatterMode::Full).unwrap();
        (full.displacements[1] - ia.displacements[1]).norm() / ia.displacements[1].norm()
    };
    let (d1, d2, d4) = (dev(1.0), dev(0.5), dev(0.25));
    assert!(d1 < 0.1, "{d1}");
    assert!((d2 / d1 - 0.5).abs() < 0.1 && (d4 / d2 - 0.5).abs() < 0.1, "{d1:e} {d2:e} {d4:e}");
}

fn ms_scatter(provider: Provider) -> DynamicalSystem {
    let ctx = Context::nondimensional(10.0);
    let q = PointCharge::new(1.0, 1.0, Vec3::ZERO, Vec3::ZERO);
    let d = MagneticDipole::new(Vec3::new(0.0, 0.0, 0.5), 3.0, Vec3::ZERO, Vec3::ZERO);
    DynamicalSystem::new(ctx, pair(Body::Charge(q), Body::Dipole(d)), provider)
}

#[test]
fn mott_schwinger_constrained_is_equal_and_opposite_at_every_time() {
    let mut sys = ms_scatter(Provider::ConstrainedLagrangian);
    sys.bodies[0].body.set_state(Vec3::new(-20.0, 1.0, 0.3), Vec3::X * 2.0);
    let traj = integrate(&sys, 0.0, 20.0, &IntegrateOptions::with_tol(1e-11).sampled(0.0, 20.0, 41)).unwrap();
    let r = ledger_report(&traj).unwrap();
    assert!(r.canonical_drift < 1e-9, "{}", r.canonical_drift);
    let bodies = sys.bodies_at(&sys.initial_state().unwrap()).unwrap();
    let a = sys.accelerations(&bodies).unwrap();
    let f = [a[0] * sys.bodies[0].mass(), a[1] * sys.bodies[1].mass()];
    assert!((f[0] + f[1]).norm() < 1e-12 * f[0].norm());
}

#[test]
fn mott_schwinger_same_exchange_different_displacement() {
    let setup = ScatteringSetup::new(1.0, 2.0);
    let con = scattering_run(&ms_scatter(Provider::ConstrainedLagrangian), &setup, ScatterMode::ImpulseApprox).unwrap();
    let unc = scattering_run(&ms_scatter(Provider::UnconstrainedForce), &setup, ScatterMode::ImpulseApprox).unwrap();
    let scale = con.impulses[0].norm().max(con.impulses[1].norm());
    for i in 0..2 {
        assert!((con.impulses[i] - unc.impulses[i]).norm() < 1e-6 * scale.max(1e-3), "{i}: {:?} {:?}", con.impulses[i], unc.impulses[i]);
    }
    let dd = (con.displacements[1] - unc.displacements[1]).norm();
    assert!(dd > 1e-3 * con.displacements[1].norm().max(unc.displacements[1].norm()), "{dd}");
}

#[test]
fn scattering_preconditions() {
    let sys = ms_scatter(Provider::ConstrainedLagrangian);
    let mut setup = ScatteringSetup::new(1.0, 2.0);
    setup.cutoff = 10.0;
    assert!(scattering_run(&sys, &setup, ScatterMode::ImpulseApprox).is_err());
    let fast = ScatteringSetup::new(1.0, 20.0);
    assert!(matches!(scattering_run(&sys, &fast, ScatterMode::Full), Err(Error::OutOfRegime(_))));
}
