//! Classic fourth-order Runge-Kutta stepping for fixed-size state vectors.

use nalgebra::SVector;

use crate::error::{Result, SimError};

/// Advance `x` from `t` by `h`. The derivative callback may fail, in which
/// case the step is abandoned.
pub fn rk4_step<const N: usize, F>(t: f64, x: &SVector<f64, N>, h: f64, mut f: F) -> Result<SVector<f64, N>>
where
    F: FnMut(f64, &SVector<f64, N>) -> Result<SVector<f64, N>>,
{
    let k1 = f(t, x)?;
    let k2 = f(t + 0.5 * h, &(x + 0.5 * h * k1))?;
    let k3 = f(t + 0.5 * h, &(x + 0.5 * h * k2))?;
    let k4 = f(t + h, &(x + h * k3))?;
    let next = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if let Some(i) = next.iter().position(|v| !v.is_finite()) {
        return Err(SimError::NonFinite {
            t: t + h,
            what: format!("state component {i}"),
        });
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Vector1, Vector2};

    fn oscillator(_: f64, x: &Vector2<f64>) -> Result<Vector2<f64>> {
        Ok(Vector2::new(x[1], -x[0]))
    }

    #[test]
    fn oscillator_energy_is_conserved() {
        let h = 0.5e-3;
        let mut x = Vector2::new(1.0, 0.0);
        let steps = (10.0 * std::f64::consts::TAU / h).round() as usize;
        for i in 0..steps {
            x = rk4_step(i as f64 * h, &x, h, oscillator).unwrap();
        }
        let energy = 0.5 * x.norm_squared();
        assert!(((energy - 0.5) / 0.5).abs() < 1e-6);
    }

    #[test]
    fn constant_velocity_is_exact() {
        let f = |_: f64, x: &Vector2<f64>| Ok(Vector2::new(x[1], 0.0));
        let mut x = Vector2::new(0.25, 1.5);
        for i in 0..1000 {
            x = rk4_step(i as f64 * 1e-3, &x, 1e-3, f).unwrap();
        }
        assert!((x[0] - 1.75).abs() < 1e-12);
        assert_eq!(x[1], 1.5);
    }

    #[test]
    fn step_halving_shows_fourth_order() {
        // y' = -y + sin t, y(0) = 1.
        let f = |t: f64, y: &Vector1<f64>| Ok(Vector1::new(-y[0] + t.sin()));
        let exact = |t: f64| 1.5 * (-t).exp() + 0.5 * (t.sin() - t.cos());
        let err = |h: f64| {
            let n = (3.0 / h).round() as usize;
            let mut y = Vector1::new(1.0);
            for i in 0..n {
                y = rk4_step(i as f64 * h, &y, h, f).unwrap();
            }
            (y[0] - exact(3.0)).abs()
        };
        let ratio = err(0.05) / err(0.025);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn non_finite_state_is_reported() {
        let f = |_: f64, _: &Vector1<f64>| Ok(Vector1::new(f64::INFINITY));
        assert!(matches!(
            rk4_step(0.0, &Vector1::new(0.0), 0.1, f),
            Err(SimError::NonFinite { .. })
        ));
    }
}
