//! Damped, elastic-tendon Hill model with massless fibers.
//!
//! The fiber length is a state; its velocity follows from the force balance
//! between the fiber (projected onto the tendon line) and the tendon, solved
//! with Newton's method on the velocity.

use serde::{Deserialize, Serialize};

use super::curves::CurveSet;
use super::MuscleKind;
use crate::error::{Result, SimError};

/// Fixed physiology of one musculotendon unit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuscleParams {
    /// Optimal (maximum isometric) fiber force, N.
    pub f_opt: f64,
    /// Optimal fiber length, m.
    pub l_opt: f64,
    /// Tendon slack length, m.
    pub l_slack: f64,
    /// Pennation at optimal fiber length, rad.
    pub alpha_opt: f64,
    /// Fiber damping coefficient (normalized force per normalized velocity).
    pub beta: f64,
    /// Maximum contraction velocity, optimal lengths per second.
    pub v_max: f64,
    pub tau_act: f64,
    pub tau_deact: f64,
    pub a_min: f64,
}

/// Largest pennation angle the model allows.
pub const ALPHA_MAX: f64 = 84.0 * std::f64::consts::PI / 180.0;

impl MuscleParams {
    /// Reference physiology for the 70-75 kg adult model.
    pub fn reference(kind: MuscleKind) -> Self {
        let (f_opt, l_opt, l_slack, alpha_deg) = match kind {
            MuscleKind::Ta => (1759.0, 0.098, 0.223, 5.0),
            MuscleKind::Sol => (3549.0, 0.05, 0.25, 25.0),
            MuscleKind::Gas => (2342.0, 0.06, 0.39, 17.0),
            MuscleKind::Fem => (4530.0, 0.087, 0.136, 3.0),
            MuscleKind::Ham => (2594.0, 0.109, 0.31, 0.0),
            MuscleKind::Glu => (1944.0, 0.147, 0.127, 0.0),
            MuscleKind::Ili => (1759.0, 0.1, 0.163, 8.0),
        };
        Self {
            f_opt,
            l_opt,
            l_slack,
            alpha_opt: f64::to_radians(alpha_deg),
            beta: 0.1,
            v_max: 10.0,
            tau_act: 0.01,
            tau_deact: 0.04,
            a_min: 0.01,
        }
    }

    /// Range checks; `prefix` names the config section, e.g. `muscles.sol`.
    pub fn validate(&self, prefix: &str) -> Result<()> {
        for (name, v) in [
            ("f_opt", self.f_opt),
            ("l_opt", self.l_opt),
            ("l_slack", self.l_slack),
            ("beta", self.beta),
            ("v_max", self.v_max),
            ("tau_act", self.tau_act),
            ("tau_deact", self.tau_deact),
        ] {
            crate::plant::body::positive(&format!("{prefix}.{name}"), v)?;
        }
        if !(self.alpha_opt.is_finite() && (0.0..ALPHA_MAX).contains(&self.alpha_opt)) {
            return Err(SimError::config(
                format!("{prefix}.alpha_opt"),
                format!("{} outside [0, {ALPHA_MAX:.4})", self.alpha_opt),
            ));
        }
        if !(self.a_min > 0.0 && self.a_min < 1.0) {
            return Err(SimError::config(format!("{prefix}.a_min"), format!("{} outside (0, 1)", self.a_min)));
        }
        Ok(())
    }

    /// Shortest admissible normalized fiber length.
    pub fn min_fiber_length(&self) -> f64 {
        (1.05 * self.alpha_opt.sin()).max(0.1)
    }

    /// Fiber thickness l_opt·sin(α_opt), constant under the pennation model.
    pub fn fiber_height(&self) -> f64 {
        self.l_opt * self.alpha_opt.sin()
    }
}

/// Pennation angle of a fiber of normalized length `fiber_len`.
///
/// The fiber height stays constant, so sin α = sin α_opt / l̃^M; the angle is
/// clamped at [`ALPHA_MAX`] when the fiber collapses.
pub fn pennation(fiber_len: f64, alpha_opt: f64) -> f64 {
    if alpha_opt == 0.0 {
        return 0.0;
    }
    let s = alpha_opt.sin() / fiber_len;
    if !(s < ALPHA_MAX.sin()) || fiber_len <= 0.0 {
        ALPHA_MAX
    } else {
        s.asin()
    }
}

/// Total fiber force F_opt (a f^L f^V + β ṽ + f^PE), N.
pub fn fiber_force(
    a: f64,
    fiber_len: f64,
    fiber_vel: f64,
    curves: &CurveSet,
    f_opt: f64,
    beta: f64,
) -> f64 {
    f_opt
        * (a * curves.active_fl.value(fiber_len) * curves.force_velocity.value(fiber_vel)
            + beta * fiber_vel
            + curves.passive_fl.value(fiber_len))
}

/// Tendon force F_opt f^T(l̃^T), N.
pub fn tendon_force(tendon_len: f64, curves: &CurveSet, f_opt: f64) -> f64 {
    f_opt * curves.tendon_fl.value(tendon_len)
}

/// Instantaneous state of one musculotendon unit.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MuscleState {
    pub activation: f64,
    /// Fiber length over optimal fiber length.
    pub fiber_length: f64,
    /// Fiber velocity in units of the maximum contraction velocity.
    pub fiber_velocity: f64,
    /// Pennation angle, rad.
    pub pennation: f64,
    /// Tendon length over slack length.
    pub tendon_length: f64,
    /// Total fiber force, N.
    pub fiber_force: f64,
    /// Tendon force, N.
    pub tendon_force: f64,
    /// Active (contractile element) force, N.
    pub active_force: f64,
}

/// Result of the fiber-velocity solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FiberSolution {
    pub velocity: f64,
    /// Force residual ε at `velocity`, N.
    pub residual: f64,
    pub iterations: usize,
}

/// Force balance along the tendon for fixed lengths and activation.
///
/// The length-dependent curve values are evaluated once; only f^V depends on
/// the unknown velocity.
#[derive(Clone, Copy, Debug)]
pub struct Equilibrium<'a> {
    curves: &'a CurveSet,
    f_opt: f64,
    beta: f64,
    a_fl: f64,
    fpe: f64,
    cos_alpha: f64,
    ft: f64,
}

impl<'a> Equilibrium<'a> {
    pub fn new(
        a: f64,
        fiber_len: f64,
        tendon_len: f64,
        curves: &'a CurveSet,
        params: &MuscleParams,
    ) -> Self {
        let alpha = pennation(fiber_len, params.alpha_opt);
        Self {
            curves,
            f_opt: params.f_opt,
            beta: params.beta,
            a_fl: a * curves.active_fl.value(fiber_len),
            fpe: curves.passive_fl.value(fiber_len),
            cos_alpha: alpha.cos(),
            ft: curves.tendon_fl.value(tendon_len),
        }
    }

    /// Residual ε(ṽ) = F^M cos α − F^T, N.
    pub fn residual(&self, v: f64) -> f64 {
        let fv = self.curves.force_velocity.value(v);
        self.f_opt * ((self.a_fl * fv + self.beta * v + self.fpe) * self.cos_alpha - self.ft)
    }

    /// Residual and its derivative with respect to ṽ.
    pub fn residual_and_slope(&self, v: f64) -> (f64, f64) {
        let (fv, dfv) = self.curves.force_velocity.eval(v);
        let eps = self.f_opt * ((self.a_fl * fv + self.beta * v + self.fpe) * self.cos_alpha - self.ft);
        let slope = self.f_opt * (self.a_fl * dfv + self.beta) * self.cos_alpha;
        (eps, slope)
    }

    /// Fixed-point guess from the inverted force-velocity curve with the
    /// damping term dropped.
    pub fn inverse_guess(&self) -> Option<f64> {
        if self.a_fl <= 1e-12 || self.cos_alpha <= 0.0 {
            return None;
        }
        let target = (self.ft / self.cos_alpha - self.fpe) / self.a_fl;
        self.curves.force_velocity.inverse(target)
    }
}

/// Solver controls.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSettings {
    /// Convergence threshold on |ε| as a fraction of F_opt.
    pub tol_rel: f64,
    pub max_newton: usize,
    pub max_bisection: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tol_rel: 1e-6,
            max_newton: 100,
            max_bisection: 200,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        crate::plant::body::positive("solver.tol_rel", self.tol_rel)?;
        if self.max_newton == 0 {
            return Err(SimError::config("solver.max_newton", "must be at least 1"));
        }
        if self.max_bisection == 0 {
            return Err(SimError::config("solver.max_bisection", "must be at least 1"));
        }
        Ok(())
    }
}

/// Solve the force balance for the normalized fiber velocity.
///
/// Newton from `guess` with step halving whenever the residual grows; if that
/// does not converge, bisection on a bracket (ε is strictly increasing in ṽ
/// whenever β > 0).
pub fn solve_fiber_velocity(
    eq: &Equilibrium<'_>,
    guess: f64,
    settings: &SolverSettings,
) -> std::result::Result<FiberSolution, FiberSolution> {
    let tol = settings.tol_rel * eq.f_opt;
    let mut v = if guess.is_finite() { guess } else { 0.0 };
    let (mut eps, mut slope) = eq.residual_and_slope(v);
    let mut iterations = 0;
    while iterations < settings.max_newton {
        if eps.abs() < tol {
            return Ok(FiberSolution {
                velocity: v,
                residual: eps,
                iterations,
            });
        }
        iterations += 1;
        if !(slope > 0.0) {
            break;
        }
        let mut step = eps / slope;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = v - step;
            let (e, s) = eq.residual_and_slope(trial);
            if e.abs() < eps.abs() {
                v = trial;
                eps = e;
                slope = s;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if eps.abs() < tol {
        return Ok(FiberSolution {
            velocity: v,
            residual: eps,
            iterations,
        });
    }

    // Bracket and bisect.
    let mut width = 1.0;
    let (mut lo, mut hi) = (v - width, v + width);
    let mut expansions = 0;
    while !(eq.residual(lo) < 0.0 && eq.residual(hi) > 0.0) {
        width *= 2.0;
        lo = v - width;
        hi = v + width;
        expansions += 1;
        if expansions > 60 {
            return Err(FiberSolution {
                velocity: v,
                residual: eps,
                iterations,
            });
        }
    }
    for _ in 0..settings.max_bisection {
        iterations += 1;
        let mid = 0.5 * (lo + hi);
        let e = eq.residual(mid);
        if e.abs() < tol {
            return Ok(FiberSolution {
                velocity: mid,
                residual: e,
                iterations,
            });
        }
        if e < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    Err(FiberSolution {
        velocity: mid,
        residual: eq.residual(mid),
        iterations,
    })
}

/// Evaluate the full musculotendon state for a given path length.
///
/// `fiber_len` is the integrated state; the tendon length follows from
/// l^MT = l^T + l^M cos α. `guess` seeds the velocity solve.
#[allow(clippy::too_many_arguments)]
pub fn evaluate(
    name: &str,
    activation: f64,
    fiber_len: f64,
    path_len: f64,
    guess: f64,
    curves: &CurveSet,
    params: &MuscleParams,
    settings: &SolverSettings,
) -> Result<MuscleState> {
    let alpha = pennation(fiber_len, params.alpha_opt);
    let cos_alpha = alpha.cos();
    let tendon_len = (path_len - params.l_opt * fiber_len * cos_alpha) / params.l_slack;
    let eq = Equilibrium::new(activation, fiber_len, tendon_len, curves, params);
    let sol = solve_fiber_velocity(&eq, guess, settings).map_err(|s| SimError::FiberSolve {
        muscle: name.to_string(),
        residual: s.residual,
        iterations: s.iterations,
    })?;
    let v = sol.velocity;
    let active_norm = activation * curves.active_fl.value(fiber_len) * curves.force_velocity.value(v);
    let fiber = fiber_force(activation, fiber_len, v, curves, params.f_opt, params.beta);
    Ok(MuscleState {
        activation,
        fiber_length: fiber_len,
        fiber_velocity: v,
        pennation: alpha,
        tendon_length: tendon_len,
        fiber_force: fiber,
        tendon_force: tendon_force(tendon_len, curves, params.f_opt),
        active_force: params.f_opt * active_norm,
    })
}

/// Static (zero fiber velocity) fiber length for a given path length and
/// activation, as a normalized length.
///
/// Falls back to the fiber length that leaves the tendon exactly at slack
/// when no force balance exists in the admissible range.
pub fn init_fiber_length(path_len: f64, activation: f64, curves: &CurveSet, params: &MuscleParams) -> f64 {
    let w = params.fiber_height();
    let balance = |lm: f64| {
        let alpha = pennation(lm, params.alpha_opt);
        let lt = (path_len - params.l_opt * lm * alpha.cos()) / params.l_slack;
        (activation * curves.active_fl.value(lm) + curves.passive_fl.value(lm)) * alpha.cos()
            - curves.tendon_fl.value(lt)
    };
    let lo0 = params.min_fiber_length();
    let hi0 = ((path_len * path_len + w * w).sqrt() / params.l_opt).max(lo0);
    let slack_fallback = || {
        let along = (path_len - params.l_slack).max(0.0);
        ((along * along + w * w).sqrt() / params.l_opt).max(lo0)
    };
    let (mut lo, mut hi) = (lo0, hi0);
    let (glo, ghi) = (balance(lo), balance(hi));
    if !(glo < 0.0 && ghi >= 0.0) {
        return slack_fallback();
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if balance(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::muscle::MuscleKind;

    fn sol_params() -> MuscleParams {
        MuscleParams::reference(MuscleKind::Sol)
    }

    #[test]
    fn pennation_at_optimal_length_is_alpha_opt() {
        let p = sol_params();
        assert!((pennation(1.0, p.alpha_opt) - p.alpha_opt).abs() < 1e-15);
    }

    #[test]
    fn pennation_of_shortened_soleus() {
        let a = pennation(0.8, 25f64.to_radians());
        let expected = (25f64.to_radians().sin() / 0.8).asin();
        assert!((a - expected).abs() < 1e-15);
        assert!((a.to_degrees() - 31.9).abs() < 0.05);
    }

    #[test]
    fn pennation_is_zero_for_parallel_fibers() {
        for l in [0.3, 1.0, 1.7] {
            assert_eq!(pennation(l, 0.0), 0.0);
        }
    }

    #[test]
    fn pennation_clamps_collapsed_fiber() {
        assert_eq!(pennation(0.05, 25f64.to_radians()), ALPHA_MAX);
    }

    #[test]
    fn tendon_force_is_zero_at_and_below_slack() {
        let c = CurveSet::default();
        assert_eq!(tendon_force(1.0, &c, 1000.0), 0.0);
        assert_eq!(tendon_force(0.98, &c, 1000.0), 0.0);
        assert!((tendon_force(1.049, &c, 1000.0) - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn fiber_force_terms() {
        let c = CurveSet::default();
        let f = fiber_force(1.0, 1.0, 0.0, &c, 2000.0, 0.1);
        assert!((f - 2000.0 * (1.0 + c.passive_fl.value(1.0))).abs() < 1e-9);
        let slack = fiber_force(1e-9, 0.9, 0.0, &c, 2000.0, 0.1);
        assert!(slack.abs() < 1e-5);
        let damped = fiber_force(0.01, 0.9, 0.5, &c, 2000.0, 0.1);
        let active = 0.01 * c.active_fl.value(0.9) * c.force_velocity.value(0.5);
        assert!((damped - 2000.0 * (0.05 + active)).abs() < 1e-9);
    }

    #[test]
    fn isometric_state_solves_to_zero_velocity() {
        let c = CurveSet::default();
        let p = sol_params();
        let a = 0.4;
        let lm = 0.95;
        let alpha = pennation(lm, p.alpha_opt);
        // Pick the tendon length that balances the isometric fiber force.
        let target = (a * c.active_fl.value(lm) + c.passive_fl.value(lm)) * alpha.cos();
        let (mut lo, mut hi) = (1.0, 1.1);
        for _ in 0..200 {
            let mid: f64 = 0.5 * (lo + hi);
            if c.tendon_fl.value(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let eq = Equilibrium::new(a, lm, 0.5 * (lo + hi), &c, &p);
        let s = solve_fiber_velocity(&eq, 0.0, &SolverSettings::default()).unwrap();
        assert_eq!(s.iterations, 0);
        assert!(s.velocity.abs() < 1e-12);
    }

    #[test]
    fn weak_tendon_means_shortening() {
        let c = CurveSet::default();
        let p = sol_params();
        let eq = Equilibrium::new(0.5, 1.0, 1.01, &c, &p);
        let s = solve_fiber_velocity(&eq, 0.0, &SolverSettings::default()).unwrap();
        assert!(s.velocity < 0.0);
        assert!(s.residual.abs() < 1e-6 * p.f_opt);
    }

    #[test]
    fn static_initialization_at_slack_geometry() {
        let c = CurveSet::default();
        for kind in MuscleKind::ALL {
            let p = MuscleParams::reference(kind);
            let lmt = p.l_slack + p.l_opt * p.alpha_opt.cos();
            let lm = init_fiber_length(lmt, p.a_min, &c, &p);
            // A slightly loaded tendon takes up some of the slack path.
            assert!(lm > 0.9 && lm <= 1.0 + 1e-12, "{kind:?}: {lm}");
            let st = evaluate("m", p.a_min, lm, lmt, 0.0, &c, &p, &SolverSettings::default()).unwrap();
            assert!(st.fiber_velocity.abs() < 1e-3);
        }
    }
}
