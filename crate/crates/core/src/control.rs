//! Steering laws: the impulsive law that holds the estimated spot at the
//! detector center, plus zero and proportional baselines.
//!
//! A law for one station is a function of that station's own filter state and
//! event history only; it never sees the truth state, the power processes, or
//! the other station's events.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::SystemMatrices;

#[derive(Debug, Clone, PartialEq)]
pub enum ControlLaw {
    /// u = 0.
    Zero,
    /// Continuous term u = -(CB)^-1 (CA + Cdot) xhat, plus an impulse
    /// -B (CB)^-1 C M r at each detection that cancels the filter jump's
    /// effect on C xhat. Keeps C xhat = 0 exactly in continuous time.
    Optimal,
    /// u = -gain * (C xhat).
    Proportional { gain: DMatrix<f64> },
}

impl ControlLaw {
    pub fn name(&self) -> &'static str {
        match self {
            ControlLaw::Zero => "zero",
            ControlLaw::Optimal => "optimal",
            ControlLaw::Proportional { .. } => "proportional",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "zero" => Ok(ControlLaw::Zero),
            "optimal" => Ok(ControlLaw::Optimal),
            "proportional" => Ok(ControlLaw::Proportional {
                gain: DMatrix::identity(2, 2),
            }),
            other => Err(Error::SchemaViolation(format!(
                "unknown controller '{other}' (expected zero, optimal or proportional)"
            ))),
        }
    }
}

/// Drift control for the current state estimate.
pub fn continuous_control(
    law: &ControlLaw,
    xhat: &DVector<f64>,
    mats: &SystemMatrices,
) -> Result<DVector<f64>> {
    match law {
        ControlLaw::Zero => Ok(DVector::zeros(2)),
        ControlLaw::Proportional { gain } => Ok(-(gain * (&mats.c * xhat))),
        ControlLaw::Optimal => {
            let cb = &mats.c * &mats.b;
            let cb_inv = crate::symmat::inv_2x2(&cb).ok_or(Error::CbSingular {
                station: '?',
                at: f64::NAN,
            })?;
            let drift = (&mats.c * &mats.a + &mats.cdot) * xhat;
            Ok(-(cb_inv * drift))
        }
    }
}

/// State increment applied at a detection event, to both the estimate and the
/// plant: -B (CB)^-1 C M r under the optimal law, zero otherwise.
pub fn event_impulse(
    law: &ControlLaw,
    r: &DVector<f64>,
    gain_m: &DMatrix<f64>,
    mats: &SystemMatrices,
) -> Result<DVector<f64>> {
    match law {
        ControlLaw::Optimal => {
            let cb = &mats.c * &mats.b;
            let cb_inv = crate::symmat::inv_2x2(&cb).ok_or(Error::CbSingular {
                station: '?',
                at: f64::NAN,
            })?;
            Ok(-(&mats.b * (cb_inv * (&mats.c * (gain_m * r)))))
        }
        _ => Ok(DVector::zeros(mats.a.nrows())),
    }
}

/// Maximum of |C xhat_t| over a sampled estimate trajectory. Zero in exact
/// arithmetic under the optimal law with C0 xhat0 = 0; O(dt) in the discrete
/// loop.
pub fn hold_invariant_deviation<'a>(
    samples: impl IntoIterator<Item = (f64, &'a DVector<f64>)>,
    schedule: &crate::model::Schedule,
) -> Result<f64> {
    let mut max_dev: f64 = 0.0;
    for (t, xhat) in samples {
        let mats = schedule.matrices_at(t)?;
        max_dev = max_dev.max((&mats.c * xhat).norm());
    }
    Ok(max_dev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};
    use rand_distr::StandardNormal;

    fn mats(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>) -> SystemMatrices {
        SystemMatrices {
            a,
            b,
            c: c.clone(),
            d: DMatrix::identity(2, 2),
            cdot: DMatrix::zeros(c.nrows(), c.ncols()),
        }
    }

    #[test]
    fn optimal_drift_vanishes_for_static_plant() {
        let m = mats(
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
        );
        let xhat = DVector::from_vec(vec![0.3, -0.7]);
        let u = continuous_control(&ControlLaw::Optimal, &xhat, &m).unwrap();
        assert!(u.norm() < 1e-15);
    }

    #[test]
    fn optimal_drift_reduces_to_minus_ca_xhat() {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.2, -0.1, 0.8]);
        let m = mats(a.clone(), DMatrix::identity(2, 2), DMatrix::identity(2, 2));
        let xhat = DVector::from_vec(vec![1.0, 2.0]);
        let u = continuous_control(&ControlLaw::Optimal, &xhat, &m).unwrap();
        let want = -(&a * &xhat);
        assert!((u - want).norm() < 1e-14);
    }

    #[test]
    fn zero_law_is_zero() {
        let m = mats(
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
        );
        let xhat = DVector::from_vec(vec![5.0, -3.0]);
        let u = continuous_control(&ControlLaw::Zero, &xhat, &m).unwrap();
        assert_eq!(u, DVector::zeros(2));
        let imp = event_impulse(
            &ControlLaw::Zero,
            &DVector::from_vec(vec![1.0, 1.0]),
            &DMatrix::identity(2, 2),
            &m,
        )
        .unwrap();
        assert_eq!(imp, DVector::zeros(2));
    }

    #[test]
    fn impulse_is_zero_for_zero_location() {
        let m = mats(
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
        );
        let imp = event_impulse(
            &ControlLaw::Optimal,
            &DVector::zeros(2),
            &DMatrix::identity(2, 2) * 0.5,
            &m,
        )
        .unwrap();
        assert!(imp.norm() == 0.0);
    }

    #[test]
    fn impulse_worked_example() {
        // C = I, B = I, M = I/2, r = (2, 0) -> increment (-1, 0).
        let m = mats(
            DMatrix::zeros(2, 2),
            DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
        );
        let imp = event_impulse(
            &ControlLaw::Optimal,
            &DVector::from_vec(vec![2.0, 0.0]),
            &(DMatrix::identity(2, 2) * 0.5),
            &m,
        )
        .unwrap();
        assert!((imp - DVector::from_vec(vec![-1.0, 0.0])).norm() < 1e-14);
    }

    #[test]
    fn filter_jump_plus_impulse_keeps_c_xhat_at_zero() {
        // If C xhat = 0 before an event, the combined jump
        // M (r - C xhat) - B (CB)^-1 C M r leaves C xhat at zero exactly.
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..100 {
            let n = rng.gen_range(2..=5);
            let c = DMatrix::from_fn(2, n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let b = DMatrix::from_fn(n, 2, |_, _| rng.sample::<f64, _>(StandardNormal));
            let cb = &c * &b;
            if crate::symmat::inv_2x2(&cb).is_none() {
                continue;
            }
            let m = SystemMatrices {
                a: DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal)),
                b,
                c: c.clone(),
                d: DMatrix::identity(n, n),
                cdot: DMatrix::zeros(2, n),
            };
            let gain_m = DMatrix::from_fn(n, 2, |_, _| rng.sample::<f64, _>(StandardNormal));
            let r = DVector::from_fn(2, |_, _| rng.sample::<f64, _>(StandardNormal));

            // xhat with C xhat = 0: project a random vector onto the null space.
            let x_raw = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            let c_pinv = c.clone().pseudo_inverse(1e-12).unwrap();
            let xhat = &x_raw - &c_pinv * (&c * &x_raw);
            assert!((&c * &xhat).norm() < 1e-10);

            let filter_jump = &gain_m * (&r - &c * &xhat);
            let impulse = event_impulse(&ControlLaw::Optimal, &r, &gain_m, &m).unwrap();
            let after = &xhat + filter_jump + impulse;
            assert!(
                (&c * &after).norm() < 1e-9,
                "C xhat after combined jump must stay zero"
            );
        }
    }
}
