//! The spatially homogeneous layer: reaction terms in both variable
//! conventions, the cooperative change of variables, and the kinetic ODE
//! flow with its convergence and no-closed-orbit checks.
//!
//! Competitive variables are (u, v) with equilibria (0,1) unstable and
//! (1,0) stable. The cooperative transform (u, v) -> (u, 1-v) maps them to
//! (0,0) and (1,1); the comparison principle acts componentwise there.

use crate::numeric::{rk45, OdeOutcome};
use crate::params::KineticParams;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum KineticsError {
    #[error("state ({u}, {v}) outside the unit square")]
    InvalidState { u: f64, v: f64 },
    #[error("dulac divergence has a pole at u = 0 or v = 1 (u = {u}, v = {v})")]
    DulacPole { u: f64, v: f64 },
    #[error("ODE step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("trajectory left [0,1]^2 by {excess:.3e} at t = {t}, beyond the tolerance")]
    LeftUnitSquare { t: f64, excess: f64 },
}

/// A point state of the kinetic system; both components in [0,1].
/// The same type carries competitive (u, v) and cooperative (u, 1-v)
/// coordinates; the functions below say which they expect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointState {
    pub u: f64,
    pub v: f64,
}

impl PointState {
    pub fn new(u: f64, v: f64) -> Result<Self, KineticsError> {
        if !(0.0..=1.0).contains(&u) || !(0.0..=1.0).contains(&v) {
            return Err(KineticsError::InvalidState { u, v });
        }
        Ok(PointState { u, v })
    }
}

/// Competitive reaction rates (r1 u (1-u-a1 v), r2 v (1-v-a2 u)).
pub fn reaction_competitive(s: PointState, p: &KineticParams) -> (f64, f64) {
    (
        p.r1() * s.u * (1.0 - s.u - p.a1() * s.v),
        p.r2() * s.v * (1.0 - s.v - p.a2() * s.u),
    )
}

/// The cooperative change of variables (u, v) -> (u, 1-v). It is an
/// involution, so it serves as its own inverse.
pub fn to_cooperative(s: PointState) -> PointState {
    PointState {
        u: s.u,
        v: 1.0 - s.v,
    }
}

pub fn from_cooperative(s: PointState) -> PointState {
    to_cooperative(s)
}

/// Cooperative reaction rates (r1 u (1-a1-u+a1 v), r2 (1-v)(a2 u - v));
/// equals the conjugation of `reaction_competitive` by the transform.
pub fn reaction_cooperative(s: PointState, p: &KineticParams) -> (f64, f64) {
    (
        p.r1() * s.u * (1.0 - p.a1() - s.u + p.a1() * s.v),
        p.r2() * (1.0 - s.v) * (p.a2() * s.u - s.v),
    )
}

/// Divergence of the Dulac-weighted field, -r1/(1-v) - r2/u, in cooperative
/// coordinates. Strictly negative on the open square, which rules out closed
/// orbits of the kinetic flow.
pub fn dulac_divergence(s: PointState, p: &KineticParams) -> Result<f64, KineticsError> {
    if s.u == 0.0 || s.v == 1.0 {
        return Err(KineticsError::DulacPole { u: s.u, v: s.v });
    }
    Ok(-p.r1() / (1.0 - s.v) - p.r2() / s.u)
}

/// A kinetic trajectory in cooperative coordinates. States are stored as
/// accepted by the integrator; `clamped` reports whether any component was
/// clipped to [0,1] for reporting (within tolerance).
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<PointState>,
    pub tol: f64,
    pub clamped: bool,
}

impl Trajectory {
    pub fn terminal(&self) -> PointState {
        *self.states.last().expect("trajectory has at least one state")
    }

    /// CSV export: t, omega1, omega2.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,omega1,omega2\n");
        for (t, s) in self.times.iter().zip(&self.states) {
            out.push_str(&format!("{t},{},{}\n", s.u, s.v));
        }
        out
    }
}

/// Integrate the cooperative kinetic system from `initial` (cooperative
/// coordinates) to `horizon` with an adaptive RK45 step. The flow must stay
/// in [0,1]^2; an excursion beyond `tol` is an integration failure, smaller
/// excursions are clamped for reporting only.
pub fn kinetic_ode_solve(
    initial: PointState,
    p: &KineticParams,
    horizon: f64,
    tol: f64,
) -> Result<Trajectory, KineticsError> {
    let rhs = {
        let p = *p;
        move |_t: f64, y: &[f64; 2]| {
            let (f1, f2) = reaction_cooperative(PointState { u: y[0], v: y[1] }, &p);
            [f1, f2]
        }
    };

    let mut times = Vec::new();
    let mut raw: Vec<[f64; 2]> = Vec::new();
    let outcome = rk45(
        &rhs,
        [initial.u, initial.v],
        0.0,
        horizon,
        tol,
        tol,
        &mut |t, y| {
            times.push(t);
            raw.push(*y);
        },
        &mut |_, _| false,
    );
    if let OdeOutcome::StepUnderflow { t } = outcome {
        return Err(KineticsError::StepUnderflow { t });
    }

    let mut clamped = false;
    let mut states = Vec::with_capacity(raw.len());
    for (i, y) in raw.iter().enumerate() {
        for &c in y {
            let excess = (-c).max(c - 1.0);
            if excess > tol {
                return Err(KineticsError::LeftUnitSquare {
                    t: times[i],
                    excess,
                });
            }
            if excess > 0.0 {
                clamped = true;
            }
        }
        states.push(PointState {
            u: y[0].clamp(0.0, 1.0),
            v: y[1].clamp(0.0, 1.0),
        });
    }
    Ok(Trajectory {
        times,
        states,
        tol,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::sample_params;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p(d1: f64, d2: f64, r1: f64, r2: f64, a1: f64, a2: f64) -> KineticParams {
        KineticParams::new(d1, d2, r1, r2, a1, a2).unwrap()
    }

    fn preset() -> KineticParams {
        p(1.0, 1.0, 1.0, 1.0, 0.5, 1.5)
    }

    #[test]
    fn competitive_equilibria_and_hand_value() {
        let pp = preset();
        let z = |u, v| reaction_competitive(PointState { u, v }, &pp);
        assert_eq!(z(0.0, 1.0), (0.0, 0.0));
        assert_eq!(z(1.0, 0.0), (0.0, 0.0));
        assert_eq!(z(0.0, 0.0), (0.0, 0.0));
        // (0.5)(1 - 0.5 - 0.25) = 0.125 and (0.5)(1 - 0.5 - 0.75) = -0.125
        let (fu, fv) = z(0.5, 0.5);
        assert!((fu - 0.125).abs() < 1e-15);
        assert!((fv + 0.125).abs() < 1e-15);
    }

    #[test]
    fn cooperative_transform_is_involution() {
        let s = PointState { u: 0.3, v: 0.8 };
        assert_eq!(to_cooperative(PointState { u: 0.0, v: 1.0 }), PointState { u: 0.0, v: 0.0 });
        assert_eq!(to_cooperative(PointState { u: 1.0, v: 0.0 }), PointState { u: 1.0, v: 1.0 });
        assert_eq!(from_cooperative(to_cooperative(s)), s);
    }

    #[test]
    fn cooperative_reaction_matches_conjugated_competitive() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let pp = sample_params(&mut rng);
            let s = PointState {
                u: rng.gen_range(0.0..1.0),
                v: rng.gen_range(0.0..1.0),
            };
            // s is cooperative; conjugate: back to competitive, apply the
            // competitive field, push the tangent through d(1-v) = -dv.
            let comp = from_cooperative(s);
            let (fu, fv) = reaction_competitive(comp, &pp);
            let (g1, g2) = reaction_cooperative(s, &pp);
            assert!((g1 - fu).abs() < 1e-14, "u rates differ: {g1} vs {fu}");
            assert!((g2 + fv).abs() < 1e-14, "v rates differ: {g2} vs {}", -fv);
        }
    }

    #[test]
    fn equilibria_in_unit_square_by_newton_sweep() {
        // Independent oracle: Newton's method on the competitive field from a
        // grid of starting points; collect the roots that land in [0,1]^2.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let pp = sample_params(&mut rng);
            let mut roots: Vec<(f64, f64)> = Vec::new();
            for i in 0..=24 {
                for j in 0..=24 {
                    let mut u = i as f64 / 24.0;
                    let mut v = j as f64 / 24.0;
                    for _ in 0..100 {
                        let f1 = pp.r1() * u * (1.0 - u - pp.a1() * v);
                        let f2 = pp.r2() * v * (1.0 - v - pp.a2() * u);
                        let j11 = pp.r1() * (1.0 - 2.0 * u - pp.a1() * v);
                        let j12 = -pp.r1() * u * pp.a1();
                        let j21 = -pp.r2() * v * pp.a2();
                        let j22 = pp.r2() * (1.0 - 2.0 * v - pp.a2() * u);
                        let det = j11 * j22 - j12 * j21;
                        if det.abs() < 1e-14 {
                            break;
                        }
                        let du = (f1 * j22 - f2 * j12) / det;
                        let dv = (j11 * f2 - j21 * f1) / det;
                        u -= du;
                        v -= dv;
                        if du.abs() + dv.abs() < 1e-13 {
                            break;
                        }
                    }
                    let f = reaction_competitive(
                        PointState {
                            u: u.clamp(-0.5, 1.5).max(0.0).min(1.0),
                            v: v.clamp(-0.5, 1.5).max(0.0).min(1.0),
                        },
                        &pp,
                    );
                    let inside = (-1e-9..=1.0 + 1e-9).contains(&u)
                        && (-1e-9..=1.0 + 1e-9).contains(&v);
                    if inside && f.0.abs() < 1e-10 && f.1.abs() < 1e-10 {
                        if !roots
                            .iter()
                            .any(|r| (r.0 - u).abs() < 1e-6 && (r.1 - v).abs() < 1e-6)
                        {
                            roots.push((u, v));
                        }
                    }
                }
            }
            roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let expect = [(0.0, 0.0), (0.0, 1.0), (1.0, 0.0)];
            assert_eq!(
                roots.len(),
                3,
                "expected exactly the three boundary equilibria for {pp:?}, got {roots:?}"
            );
            for (r, e) in roots.iter().zip(expect.iter()) {
                assert!((r.0 - e.0).abs() < 1e-6 && (r.1 - e.1).abs() < 1e-6);
            }
            // The algebraic fourth root sits outside the unit square for
            // every monostable parameter set (u* > 1, v* < 0 when a1 a2 < 1).
            let den = 1.0 - pp.a1() * pp.a2();
            if den.abs() > 1e-9 {
                let u_star = (1.0 - pp.a1()) / den;
                let v_star = (1.0 - pp.a2()) / den;
                assert!(
                    !(0.0..=1.0).contains(&u_star) || !(0.0..=1.0).contains(&v_star),
                    "coexistence root unexpectedly inside the square for {pp:?}"
                );
            }
        }
    }

    #[test]
    fn ode_equilibria_are_fixed() {
        for init in [PointState { u: 0.0, v: 0.0 }, PointState { u: 1.0, v: 1.0 }] {
            let traj = kinetic_ode_solve(init, &preset(), 50.0, 1e-9).unwrap();
            let end = traj.terminal();
            assert!((end.u - init.u).abs() < 1e-9 && (end.v - init.v).abs() < 1e-9);
        }
    }

    #[test]
    fn ode_small_seed_converges_to_one_one() {
        let traj = kinetic_ode_solve(PointState { u: 0.01, v: 0.0 }, &preset(), 200.0, 1e-9)
            .unwrap();
        let end = traj.terminal();
        assert!(
            (end.u - 1.0).abs() < 1e-6 && (end.v - 1.0).abs() < 1e-6,
            "terminal state {end:?}"
        );
    }

    #[test]
    fn ode_flow_from_corner_is_monotone() {
        let traj = kinetic_ode_solve(PointState { u: 0.01, v: 0.0 }, &preset(), 100.0, 1e-9)
            .unwrap();
        // slack an order above the integrator tolerance
        for w in traj.states.windows(2) {
            assert!(w[1].u >= w[0].u - 1e-8, "u not nondecreasing: {w:?}");
            assert!(w[1].v >= w[0].v - 1e-8, "v not nondecreasing: {w:?}");
        }
    }

    #[test]
    fn dulac_hand_value_pole_and_sign() {
        let pp = preset();
        let d = dulac_divergence(PointState { u: 0.5, v: 0.5 }, &pp).unwrap();
        assert!((d + 4.0).abs() < 1e-12);
        assert!(matches!(
            dulac_divergence(PointState { u: 0.0, v: 0.5 }, &pp),
            Err(KineticsError::DulacPole { .. })
        ));
        assert!(matches!(
            dulac_divergence(PointState { u: 0.5, v: 1.0 }, &pp),
            Err(KineticsError::DulacPole { .. })
        ));

        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let pp = sample_params(&mut rng);
            for i in 0..100 {
                for j in 0..100 {
                    let s = PointState {
                        u: (i as f64 + 0.5) / 100.0,
                        v: (j as f64 + 0.5) / 100.0,
                    };
                    assert!(dulac_divergence(s, &pp).unwrap() < 0.0);
                }
            }
        }
    }

    #[test]
    fn trajectory_csv_has_header_and_rows() {
        let traj = kinetic_ode_solve(PointState { u: 0.5, v: 0.5 }, &preset(), 1.0, 1e-9).unwrap();
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,omega1,omega2"));
        assert!(lines.count() >= 2);
    }
}
