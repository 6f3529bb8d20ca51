#![allow(dead_code)]

use magswim_core::{Control, ControlSignal, State, SwimmerParams};
use proptest::prelude::*;
use rand::Rng;

pub const P0: SwimmerParams = SwimmerParams::REFERENCE;

/// Parameters with anisotropic drag (`eta > xi`) and moments of either sign.
pub fn random_params<R: Rng>(rng: &mut R) -> SwimmerParams {
    loop {
        let xi1 = rng.random_range(0.5..2.0);
        let xi2 = rng.random_range(0.5..2.0);
        let sign = |r: &mut R| if r.random_bool(0.5) { 1.0 } else { -1.0 };
        let p = SwimmerParams {
            l1: rng.random_range(0.5..2.0),
            l2: rng.random_range(0.5..2.0),
            xi1,
            xi2,
            eta1: xi1 * rng.random_range(1.2..3.0),
            eta2: xi2 * rng.random_range(1.2..3.0),
            m1: sign(rng) * rng.random_range(0.5..2.0),
            m2: sign(rng) * rng.random_range(0.5..2.0),
            kappa: rng.random_range(0.5..2.0),
        };
        if p.satisfies_assumption1() {
            return p;
        }
    }
}

pub fn assumption1_params() -> impl Strategy<Value = SwimmerParams> {
    (
        (0.5..2.0f64, 0.5..2.0f64, 0.5..2.0f64, 0.5..2.0f64),
        (1.2..3.0f64, 1.2..3.0f64),
        (0.5..2.0f64, 0.5..2.0f64, any::<bool>(), any::<bool>()),
        0.5..2.0f64,
    )
        .prop_map(|((l1, l2, xi1, xi2), (r1, r2), (a1, a2, s1, s2), kappa)| SwimmerParams {
            l1,
            l2,
            xi1,
            xi2,
            eta1: xi1 * r1,
            eta2: xi2 * r2,
            m1: if s1 { a1 } else { -a1 },
            m2: if s2 { a2 } else { -a2 },
            kappa,
        })
        .prop_filter("standing assumption", |p| p.satisfies_assumption1())
}

/// Anisotropic swimmers whose straight set `{alpha = 0}` is invariant: `m2`
/// is solved from the magnetization condition.
pub fn straight_invariant_params() -> impl Strategy<Value = SwimmerParams> {
    (0.5..2.0f64, 0.5..2.0f64, 0.5..2.0f64, 1.2..3.0f64, 0.5..2.0f64, 0.5..2.0f64).prop_map(
        |(l1, l2, xi, ratio, m1, kappa)| {
            let eta = xi * ratio;
            let (r1, r2) = (eta * l1 * l1, eta * l2 * l2);
            let m2 = m1 * (3.0 + 4.0 * l2 / l1 + r2 / r1) / (3.0 + 4.0 * l1 / l2 + r1 / r2);
            SwimmerParams { l1, l2, xi1: xi, xi2: xi, eta1: eta, eta2: eta, m1, m2, kappa }
        },
    )
}

/// Isotropic drag: `eta_i = xi_i`. Lengths and drags are kept away from the
/// stiff corner where the joint relaxes on the integrator's time step.
pub fn isotropic_params() -> impl Strategy<Value = SwimmerParams> {
    (1.0..2.0f64, 1.0..2.0f64, 1.0..2.0f64, 1.0..2.0f64, 0.5..2.0f64, -2.0..-0.5f64, 0.5..1.5f64)
        .prop_map(|(l1, l2, xi1, xi2, m1, m2, kappa)| SwimmerParams {
            l1,
            l2,
            xi1,
            xi2,
            eta1: xi1,
            eta2: xi2,
            m1,
            m2,
            kappa,
        })
}

pub fn state() -> impl Strategy<Value = State> {
    (-2.0..2.0f64, -2.0..2.0f64, -3.0..3.0f64, -1.2..1.2f64).prop_map(|(x, y, th, al)| State::new(x, y, th, al))
}

/// Piecewise-constant signal with `values.len()` equal pieces on `[0, duration]`.
pub fn piecewise(duration: f64, values: &[(f64, f64)]) -> ControlSignal {
    let n = values.len();
    let knots = (0..=n).map(|i| duration * i as f64 / n as f64).collect();
    let values = values.iter().map(|&(a, b)| Control::new(a, b)).collect();
    ControlSignal::piecewise_constant(knots, values).unwrap()
}

pub fn bounded_signal(duration: f64, pieces: usize, amp: f64) -> impl Strategy<Value = ControlSignal> {
    proptest::collection::vec((-amp..amp, -amp..amp), pieces).prop_map(move |v| piecewise(duration, &v))
}

pub fn random_signal<R: Rng>(rng: &mut R, duration: f64, pieces: usize, amp: f64) -> ControlSignal {
    let v: Vec<(f64, f64)> = (0..pieces).map(|_| (rng.random_range(-amp..amp), rng.random_range(-amp..amp))).collect();
    piecewise(duration, &v)
}
