use magswim_core::control::{steer, PhaseReport, ReturnLoopConfig, SteeringConfig, SteeringProblem};
use magswim_core::{integrate, IntegrateOptions, State};
use serde::Serialize;

use super::{core_failure, Code, Ctx, Failure, Provenance, WithCode};
use crate::cli::SteerArgs;
use crate::io;

#[derive(Serialize)]
struct Pair {
    h_par: f64,
    h_perp: f64,
}

#[derive(Serialize)]
struct Report<'a> {
    #[serde(flatten)]
    provenance: Provenance<'a>,
    inputs_hash: String,
    z_i: State,
    z_f: State,
    #[serde(rename = "T")]
    horizon: f64,
    epsilon: f64,
    residual: f64,
    iterations: usize,
    sup_norms: Pair,
    bound_rhs: Pair,
    achieved: State,
    max_excursion: f64,
    w_radius: f64,
    converged: bool,
    bounds_ok: bool,
    inside_w: bool,
    phases: &'a [PhaseReport; 2],
    pass: bool,
}

pub(super) fn run(ctx: &Ctx, args: &SteerArgs) -> Result<Code, Failure> {
    let c = ctx.common;
    ctx.params.check().map_err(|e| core_failure(e, Code::Assumption))?;
    let opts = IntegrateOptions::fast(c.dt_max);
    let config = SteeringConfig {
        beta: c.beta,
        intervals: args.intervals,
        v_radius: args.v_radius,
        w_radius: args.w_radius,
        max_iter: args.max_iter,
        opts,
        loop_config: ReturnLoopConfig {
            opts: IntegrateOptions::with_dt(c.dt_max),
            ..ReturnLoopConfig::default()
        },
        ..SteeringConfig::default()
    };
    let problem = SteeringProblem {
        config,
        ..SteeringProblem::new(args.z_i, args.z_f, c.horizon, args.epsilon)
    };
    let r = steer(&ctx.params, &problem).map_err(|e| core_failure(e, Code::Steering))?;

    let report = Report {
        provenance: ctx.provenance(),
        inputs_hash: io::inputs_hash(&(&ctx.params, &problem)).code(Code::Io)?,
        z_i: r.z_i,
        z_f: r.z_f,
        horizon: r.horizon,
        epsilon: r.epsilon,
        residual: r.residual,
        iterations: r.iterations(),
        sup_norms: Pair {
            h_par: r.sup_norm_par,
            h_perp: r.sup_norm_perp,
        },
        bound_rhs: Pair {
            h_par: r.bound_par,
            h_perp: r.bound_perp,
        },
        achieved: r.achieved,
        max_excursion: r.max_excursion,
        w_radius: args.w_radius,
        converged: r.converged,
        bounds_ok: r.bounds_ok,
        inside_w: r.inside_w,
        phases: &r.phases,
        pass: r.pass(),
    };
    let tr = integrate(&ctx.params, &r.z_i, &r.signal, &opts).map_err(|e| core_failure(e, Code::Simulation))?;
    io::write_trajectory_csv(&ctx.out("control.csv")?, &tr).code(Code::Io)?;
    std::fs::write(ctx.out("control.json")?, io::signal_to_json(&r.signal).code(Code::Io)?).code(Code::Io)?;
    io::write_json(&ctx.out("steer.json")?, &report).code(Code::Io)?;

    println!("residual   {:e}", r.residual);
    println!("iterations {}", report.iterations);
    println!("sup |h_par|  {:.6} < {:.6}", r.sup_norm_par, r.bound_par);
    println!("sup |h_perp| {:.6} < {:.6}", r.sup_norm_perp, r.bound_perp);
    println!("excursion  {:e} (radius {})", r.max_excursion, args.w_radius);
    println!("{}", if r.pass() { "pass" } else { "FAIL" });
    Ok(if r.pass() { Code::Ok } else { Code::Steering })
}
