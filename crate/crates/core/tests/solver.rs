use thermostat_core::solver::{
    bk_iterate, sweep_rho, verify_solution, InitialDirection, SolveOptions, Solver,
};
use thermostat_core::{problems, BFunctional, Error, ProblemSpec, SourceFn, UnaryFn};

fn opts(n: usize) -> SolveOptions {
    SolveOptions {
        n,
        n_hist: n / 4,
        ..SolveOptions::default()
    }
}

fn gamma_only() -> ProblemSpec {
    ProblemSpec {
        f: SourceFn::constant(0.0),
        b: BFunctional::constant(1.0),
        ..problems::linear_oracle()
    }
}

#[test]
fn functional_only_problem() {
    let spec = gamma_only();
    for rho in [0.5, 1.0, 3.0] {
        let r = bk_iterate(&spec, rho, &opts(64)).unwrap();
        assert!(r.converged);
        // F u = γ with ‖γ‖ = 2
        assert!((r.lambda - rho / 2.0).abs() < 1e-12);
        for (&t, &v) in r.u.mesh().nodes().iter().zip(r.deviation().values()) {
            assert!((v - rho * t.max(0.0)).abs() < 1e-12);
        }
    }
}

#[test]
fn deterministic() {
    let spec = problems::exponential_reflection();
    let a = bk_iterate(&spec, 1.0, &opts(64)).unwrap();
    let b = bk_iterate(&spec, 1.0, &opts(64)).unwrap();
    assert_eq!(a.lambda.to_bits(), b.lambda.to_bits());
    assert_eq!(a.iterations, b.iterations);
    assert!(a
        .u
        .values()
        .iter()
        .zip(b.u.values())
        .all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn all_builtins_converge_and_verify() {
    for name in problems::NAMES {
        let spec = problems::builtin(name).unwrap().spec;
        let r = bk_iterate(&spec, 1.0, &opts(128)).unwrap();
        assert!(r.converged, "{name}");
        let v = verify_solution(&spec, &r).unwrap();
        assert!(v.lambda_valid, "{name}");
        assert!(v.integral_residual < 1e-9, "{name}");
        assert!(v.cone_defect <= 1e-9 && v.boundary_gap <= 1e-12, "{name}");
        assert_eq!(v.history_defect, 0.0, "{name}");
        assert!(v.bc_residual < 1e-3, "{name}: {}", v.bc_residual);
    }
}

#[test]
fn start_direction_does_not_change_the_answer() {
    let spec = problems::exponential_reflection();
    let solver = Solver::new(spec, opts(64)).unwrap();
    let from_gamma = solver.solve(1.0).unwrap();
    let bump = InitialDirection::Function(UnaryFn::new("t(2-t)", |t| t * (2.0 - t)));
    let from_bump = solver.solve_from(1.0, &bump).unwrap();
    assert!(from_bump.converged);
    assert!((from_gamma.lambda - from_bump.lambda).abs() < 1e-9);
}

#[test]
fn sequential_and_parallel_sweeps_agree() {
    let spec = problems::exponential_reflection();
    let rhos = [0.5, 1.0, 1.5, 2.0];
    let seq = sweep_rho(&spec, &rhos, &opts(64), false).unwrap();
    let par = sweep_rho(&spec, &rhos, &opts(64), true).unwrap();
    assert!(seq.all_converged() && par.all_converged());
    assert!(par.parallel && !seq.parallel);
    for ((_, a), (_, b)) in seq.points.iter().zip(&par.points) {
        let (a, b) = (a.as_ref().unwrap(), b.as_ref().unwrap());
        assert!((a.lambda - b.lambda).abs() < 1e-9);
    }
    // warm starts save work after the first radius
    let seq_work: usize = seq
        .points
        .iter()
        .skip(1)
        .map(|(_, p)| p.as_ref().unwrap().iterations)
        .sum();
    let par_work: usize = par
        .points
        .iter()
        .skip(1)
        .map(|(_, p)| p.as_ref().unwrap().iterations)
        .sum();
    assert!(seq_work <= par_work);
}

#[test]
fn sweep_records_per_radius_failures() {
    let spec = ProblemSpec {
        f: SourceFn::constant(0.0),
        ..problems::linear_oracle()
    };
    let branch = sweep_rho(&spec, &[1.0, 2.0], &opts(32), false).unwrap();
    assert_eq!(branch.points.len(), 2);
    assert!(branch
        .points
        .iter()
        .all(|(_, p)| matches!(p, Err(Error::DegenerateImage))));
    assert!(branch.to_csv().contains("2,NaN,NaN,0,false"));
}

#[test]
fn violated_sign_condition_stops_the_solver() {
    let spec = ProblemSpec {
        f: SourceFn::new("u-2", |_, u, _| u - 2.0),
        ..problems::exponential_reflection()
    };
    let err = bk_iterate(&spec, 1.0, &opts(32)).unwrap_err();
    assert!(matches!(err, Error::NegativeSource { .. }), "{err:?}");
}

#[test]
fn solution_csv_layout() {
    let r = bk_iterate(&problems::linear_oracle(), 1.0, &opts(32)).unwrap();
    let csv = r.u.to_csv("u");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,u"));
    assert_eq!(lines.count(), r.u.mesh().len());
}

#[test]
fn exponential_reflection_regression() {
    let spec = problems::exponential_reflection();
    for (rho, lambda) in [
        (0.5, 0.980087589361),
        (1.0, 1.311607669009),
        (2.0, 0.886676536971),
    ] {
        let r = bk_iterate(&spec, rho, &SolveOptions::default()).unwrap();
        assert!((r.lambda - lambda).abs() < 1e-9, "rho={rho}: {}", r.lambda);
    }
}
