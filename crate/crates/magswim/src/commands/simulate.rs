use std::f64::consts::TAU;

use anyhow::Context;
use magswim_core::model::first_integrals;
use magswim_core::{integrate, Control, ControlSignal, IntegrateOptions, SignalKind, State, SwimmerParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{core_failure, Code, Ctx, Failure, Provenance, WithCode};
use crate::cli::{Component, SignalChoice, SimulateArgs};
use crate::io;

#[derive(Serialize)]
struct Summary<'a> {
    #[serde(flatten)]
    provenance: Provenance<'a>,
    inputs_hash: String,
    args: &'a SimulateArgs,
    signal_kind: SignalKind,
    steps: usize,
    z0: State,
    final_state: State,
    /// `(x, y)` of the final state minus that of the initial one.
    net_displacement: [f64; 2],
    max_abs_alpha: f64,
    /// Largest deviation of the two conserved quantities from their initial
    /// values; only for isotropic drag.
    first_integral_drift: Option<[f64; 2]>,
    local_error: f64,
    accumulated_error: f64,
}

/// The field law selected on the command line, on `[0, horizon]`.
pub(crate) fn build_signal(
    args: &SimulateArgs,
    horizon: f64,
    dt_max: f64,
    seed: u64,
) -> anyhow::Result<ControlSignal> {
    let sig = match args.signal {
        SignalChoice::Zero => ControlSignal::zero(horizon)?,
        SignalChoice::Constant => ControlSignal::constant(Control::new(args.h_par, args.h_perp), horizon)?,
        SignalChoice::Sine => {
            let n = (horizon / dt_max).ceil().max(1.0) as usize;
            let (a, w) = (args.amplitude, TAU * args.periods / horizon);
            let component = args.component;
            ControlSignal::sampled_from_fn(horizon, n, |t| {
                let v = a * (w * t).sin();
                match component {
                    Component::Par => Control::new(v, 0.0),
                    Component::Perp => Control::new(0.0, v),
                }
            })?
        }
        SignalChoice::Random => {
            anyhow::ensure!(args.pieces > 0, "--pieces must be positive");
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = args.amplitude;
            let n = args.pieces;
            let knots = (0..=n).map(|i| horizon * i as f64 / n as f64).collect();
            let values = (0..n)
                .map(|_| Control::new(rng.random_range(-a..=a), rng.random_range(-a..=a)))
                .collect();
            ControlSignal::piecewise_constant(knots, values)?
        }
        SignalChoice::File => {
            let path = args.signal_file.as_deref().context("--signal file needs --signal-file")?;
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            io::signal_from_json(&text).with_context(|| format!("in {}", path.display()))?
        }
    };
    Ok(sig)
}

fn drift(p: &SwimmerParams, states: &[State]) -> Option<[f64; 2]> {
    let c0 = first_integrals(p, &states[0])?;
    let mut d = [0.0_f64; 2];
    for z in states {
        let c = first_integrals(p, z)?;
        d[0] = d[0].max((c.0 - c0.0).abs());
        d[1] = d[1].max((c.1 - c0.1).abs());
    }
    Some(d)
}

pub(super) fn run(ctx: &Ctx, args: &SimulateArgs) -> Result<Code, Failure> {
    let c = ctx.common;
    let code = if args.signal == SignalChoice::File { Code::Io } else { Code::Simulation };
    let sig = build_signal(args, c.horizon, c.dt_max, c.seed).code(code)?;
    ctx.params.check().map_err(|e| core_failure(e, Code::Assumption))?;
    let tr = integrate(&ctx.params, &args.z0, &sig, &IntegrateOptions::with_dt(c.dt_max))
        .map_err(|e| core_failure(e, Code::Simulation))?;

    let z1 = tr.final_state();
    let summary = Summary {
        provenance: ctx.provenance(),
        inputs_hash: io::inputs_hash(&(&ctx.params, &sig, &args.z0, c.dt_max)).code(Code::Io)?,
        args,
        signal_kind: sig.kind(),
        steps: tr.stats.steps,
        z0: args.z0,
        final_state: z1,
        net_displacement: [z1.x - args.z0.x, z1.y - args.z0.y],
        max_abs_alpha: tr.max_abs_alpha(),
        first_integral_drift: drift(&ctx.params, &tr.states),
        local_error: tr.stats.local_error,
        accumulated_error: tr.stats.accumulated_error,
    };
    io::write_trajectory_csv(&ctx.out("trajectory.csv")?, &tr).code(Code::Io)?;
    std::fs::write(ctx.out("signal.json")?, io::signal_to_json(&sig).code(Code::Io)?).code(Code::Io)?;
    io::write_json(&ctx.out("simulate.json")?, &summary).code(Code::Io)?;

    println!("steps            {}", summary.steps);
    println!("final state      {:?}", z1);
    println!("net displacement {:?}", summary.net_displacement);
    println!("max |alpha|      {:e}", summary.max_abs_alpha);
    if let Some(d) = summary.first_integral_drift {
        println!("integral drift   {:e} {:e}", d[0], d[1]);
    }
    Ok(Code::Ok)
}
