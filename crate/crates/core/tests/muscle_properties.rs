use proptest::prelude::*;

use gaitsim::geometry::MuscleGeometry;
use gaitsim::muscle::hill::{evaluate, solve_fiber_velocity, Equilibrium};
use gaitsim::muscle::{CurveSet, MuscleId, MuscleKind, MuscleParams, SolverSettings};
use gaitsim::plant::{BodyParams, Joint};

fn kind() -> impl Strategy<Value = MuscleKind> {
    (0usize..7).prop_map(|i| MuscleKind::ALL[i])
}

proptest! {
    #[test]
    fn fiber_velocity_solve_balances_forces(
        kind in kind(),
        a in 0.01f64..1.0,
        lm in 0.45f64..1.7,
        lt in 0.98f64..1.07,
        guess in -2.0f64..2.0,
    ) {
        let c = CurveSet::default();
        let p = MuscleParams::reference(kind);
        let eq = Equilibrium::new(a, lm, lt, &c, &p);
        let sol = solve_fiber_velocity(&eq, guess, &SolverSettings::default()).unwrap();
        prop_assert!(eq.residual(sol.velocity).abs() < 1e-6 * p.f_opt);
    }

    #[test]
    fn evaluated_state_is_consistent(kind in kind(), a in 0.01f64..1.0, stretch in -0.01f64..0.03) {
        let c = CurveSet::default();
        let p = MuscleParams::reference(kind);
        let path = p.l_slack * (1.0 + stretch) + p.l_opt * p.alpha_opt.cos();
        let s = evaluate(kind.name(), a, 1.0, path, 0.0, &c, &p, &SolverSettings::default()).unwrap();
        prop_assert!((s.fiber_force * s.pennation.cos() - s.tendon_force).abs() < 1e-6 * p.f_opt);
        let rebuilt = p.l_slack * s.tendon_length + p.l_opt * s.fiber_length * s.pennation.cos();
        prop_assert!((rebuilt - path).abs() < 1e-12);
    }

    #[test]
    fn moment_arms_match_length_derivative(
        side in 0usize..2,
        k in 0usize..7,
        hip in -0.6f64..0.9,
        knee in -1.6f64..0.0,
        ankle in -0.7f64..0.5,
    ) {
        let geo = MuscleGeometry::default_for(&BodyParams::default()).unwrap();
        let id = MuscleId::from_index(7 * side + k);
        let leg = [hip, knee, ankle];
        let e = geo.evaluate(id, leg).unwrap();
        for (joint, arm) in e.spanned() {
            let j = Joint::ALL.iter().position(|x| *x == joint).unwrap();
            let h = 1e-6;
            let mut hi = leg;
            let mut lo = leg;
            hi[j] += h;
            lo[j] -= h;
            let dl = (geo.evaluate(id, hi).unwrap().length - geo.evaluate(id, lo).unwrap().length) / (2.0 * h);
            // The signed arm is the negative length derivative.
            prop_assert!((arm + dl).abs() < 1e-7, "{:?} {joint:?}: {arm} vs {}", id, -dl);
        }
    }
}
