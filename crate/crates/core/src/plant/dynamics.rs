//! Lagrangian equations of motion D(q) q̈ + C(q, q̇) q̇ + G(q) = Q.

use nalgebra::Vector2;

use super::kinematics::{BodyId, Kinematics, MatQ, VecQ};
use crate::error::{Result, SimError};

/// Mass matrix, velocity-product forces and gravity evaluated at one state.
#[derive(Clone, Debug)]
pub struct EomTerms {
    pub mass: MatQ,
    /// C(q, q̇) q̇.
    pub coriolis: VecQ,
    pub gravity: VecQ,
}

fn angle_row(b: BodyId) -> VecQ {
    let mut a = VecQ::zeros();
    for &c in b.angle_coordinates() {
        a[c] = 1.0;
    }
    a
}

/// D = Σ I_j a_j a_jᵀ + Σ m_j J_jᵀ J_j, with a_j the (constant) map from q̇
/// to the absolute angular rate of body j.
pub fn mass_matrix(kin: &Kinematics<'_>) -> MatQ {
    let mut d = MatQ::zeros();
    for b in BodyId::all() {
        let seg = kin.body.segment(b.segment);
        let a = angle_row(b);
        d += seg.inertia_kgm2 * a * a.transpose();
        let p = kin.com(b);
        d += seg.mass_kg * p.jac.transpose() * p.jac;
    }
    d
}

/// C = Σ m_j J_jᵀ J̇_j.
pub fn coriolis_matrix(kin: &Kinematics<'_>) -> MatQ {
    let mut c = MatQ::zeros();
    for b in BodyId::all() {
        let seg = kin.body.segment(b.segment);
        let p = kin.com(b);
        c += seg.mass_kg * p.jac.transpose() * p.jac_dot;
    }
    c
}

/// G = Σ m_j g ∂y_j/∂q.
pub fn gravity_vector(kin: &Kinematics<'_>) -> VecQ {
    let mut g = VecQ::zeros();
    for b in BodyId::all() {
        let seg = kin.body.segment(b.segment);
        let p = kin.com(b);
        g += seg.mass_kg * kin.body.gravity_mps2 * p.jac.row(1).transpose();
    }
    g
}

/// All three terms in a single pass over the bodies.
pub fn eom_terms(kin: &Kinematics<'_>) -> EomTerms {
    let mut mass = MatQ::zeros();
    let mut coriolis = VecQ::zeros();
    let mut gravity = VecQ::zeros();
    let g = kin.body.gravity_mps2;
    for b in BodyId::all() {
        let seg = kin.body.segment(b.segment);
        let a = angle_row(b);
        let p = kin.com(b);
        let jt = p.jac.transpose();
        mass += seg.inertia_kgm2 * a * a.transpose();
        mass += seg.mass_kg * jt * p.jac;
        coriolis += seg.mass_kg * jt * p.jdot_qd;
        gravity += seg.mass_kg * g * jt * Vector2::new(0.0, 1.0);
    }
    EomTerms {
        mass,
        coriolis,
        gravity,
    }
}

/// Kinetic energy ½ Σ (I_j θ̇_j² + m_j |v_j|²).
pub fn kinetic_energy(kin: &Kinematics<'_>) -> f64 {
    BodyId::all()
        .map(|b| {
            let seg = kin.body.segment(b.segment);
            let (_, omega) = kin.angle(b);
            let v = kin.com(b).vel;
            0.5 * (seg.inertia_kgm2 * omega * omega + seg.mass_kg * v.norm_squared())
        })
        .sum()
}

/// Potential energy Σ m_j g y_j.
pub fn potential_energy(kin: &Kinematics<'_>) -> f64 {
    BodyId::all()
        .map(|b| {
            let seg = kin.body.segment(b.segment);
            seg.mass_kg * kin.body.gravity_mps2 * kin.com(b).pos.y
        })
        .sum()
}

/// Solve D q̈ = Q − C q̇ − G by Cholesky factorization.
pub fn forward_dynamics(terms: &EomTerms, q_gen: &VecQ, t: f64) -> Result<VecQ> {
    let rhs = q_gen - terms.coriolis - terms.gravity;
    let chol = terms
        .mass
        .cholesky()
        .ok_or(SimError::SingularMassMatrix { t })?;
    Ok(chol.solve(&rhs))
}

/// Solve (D + A) q̈ = Q − C q̇ − G for a general correction `A`, used when
/// part of the generalized force depends on q̈ itself.
pub fn forward_dynamics_augmented(
    terms: &EomTerms,
    augment: &MatQ,
    q_gen: &VecQ,
    t: f64,
) -> Result<VecQ> {
    let rhs = q_gen - terms.coriolis - terms.gravity;
    let m = terms.mass + augment;
    m.lu().solve(&rhs).ok_or(SimError::SingularMassMatrix { t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::body::BodyParams;
    use rand::{Rng, SeedableRng};

    fn random_state(seed: u64) -> (VecQ, VecQ) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let q = VecQ::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let qd = VecQ::from_fn(|_, _| rng.gen_range(-3.0..3.0));
        (q, qd)
    }

    #[test]
    fn single_pass_agrees_with_separate_terms() {
        let body = BodyParams::default();
        let (q, qd) = random_state(1);
        let k = Kinematics::new(&body, &q, &qd);
        let t = eom_terms(&k);
        assert!((t.mass - mass_matrix(&k)).abs().max() < 1e-12);
        assert!((t.coriolis - coriolis_matrix(&k) * qd).abs().max() < 1e-10);
        assert!((t.gravity - gravity_vector(&k)).abs().max() < 1e-10);
    }

    #[test]
    fn translational_rows_carry_total_mass_and_weight() {
        let body = BodyParams::default();
        let (q, qd) = random_state(2);
        let k = Kinematics::new(&body, &q, &qd);
        let d = mass_matrix(&k);
        let m = body.total_mass();
        assert!((d[(0, 0)] - m).abs() < 1e-12);
        assert!((d[(1, 1)] - m).abs() < 1e-12);
        assert!(d[(0, 1)].abs() < 1e-12);
        let g = gravity_vector(&k);
        assert!(g[0].abs() < 1e-12);
        assert!((g[1] - m * body.gravity_mps2).abs() < 1e-10);
    }

    #[test]
    fn zero_velocity_has_no_velocity_forces() {
        let body = BodyParams::default();
        let (q, _) = random_state(3);
        let k = Kinematics::new(&body, &q, &VecQ::zeros());
        assert_eq!(eom_terms(&k).coriolis, VecQ::zeros());
    }

    #[test]
    fn solve_residual_is_tiny() {
        let body = BodyParams::default();
        let (q, qd) = random_state(4);
        let k = Kinematics::new(&body, &q, &qd);
        let t = eom_terms(&k);
        let qg = VecQ::from_fn(|i, _| (i as f64 - 5.0) * 3.0);
        let qdd = forward_dynamics(&t, &qg, 0.0).unwrap();
        let r = t.mass * qdd + t.coriolis + t.gravity - qg;
        assert!(r.amax() < 1e-8);
    }
}
