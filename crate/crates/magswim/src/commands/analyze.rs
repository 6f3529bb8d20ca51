use magswim_core::analysis::{
    bad_bracket_test, gramian_rank, kalman_rank_at_origin, larc_certificate, linearize_along, x5_beta_rank,
};
use magswim_core::control::{reference_loop, ReturnLoopConfig};
use magswim_core::{Error, IntegrateOptions, SwimmerParams};
use serde::Serialize;
use serde_json::{json, Value};

use super::{core_failure, Code, Ctx, Failure, Provenance, WithCode};
use crate::cli::AnalyzeArgs;
use crate::io;

/// One certificate. For the Kalman, LARC and bad-bracket checks `pass`
/// means the outcome agrees with the structural prediction for the
/// parameter set; for `x5` and `gramian` it means the certificate was
/// obtained at the given `beta`. Checks that are not `required` do not enter
/// the bundle verdict.
#[derive(Clone, Debug, Serialize)]
pub struct CheckReport {
    pub check: &'static str,
    pub inputs_hash: String,
    pub rank: Option<usize>,
    pub margins: Value,
    pub pass: bool,
    pub required: bool,
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Bundle {
    pub assumption1_holds: bool,
    pub kalman: Option<usize>,
    pub larc: Option<usize>,
    pub bad_bracket_in_span: Option<bool>,
    pub x5_nonzero: Option<bool>,
    pub gramian: Option<usize>,
    pub checks: Vec<CheckReport>,
    pub pass: bool,
}

#[derive(Serialize)]
struct Inputs<'a> {
    params: &'a SwimmerParams,
    beta: f64,
    horizon: f64,
    dt_max: f64,
    x5_points: usize,
    gramian: bool,
}

/// Consistency failures abort; anything else is recorded on the check.
fn soft<T>(r: magswim_core::Result<T>) -> magswim_core::Result<Result<T, String>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e @ Error::Inconsistent { .. }) => Err(e),
        Err(e) => Ok(Err(e.to_string())),
    }
}

fn failed(check: &'static str, hash: &str, error: String, pass: bool, required: bool) -> CheckReport {
    CheckReport {
        check,
        inputs_hash: hash.to_owned(),
        rank: None,
        margins: Value::Null,
        pass,
        required,
        error: Some(error),
    }
}

/// `alpha = 0.4 k / (n + 1)` for `k = -n..=n`; zero itself is skipped by the
/// determinant check.
pub fn x5_grid(n: usize) -> Vec<f64> {
    let n = n as i64;
    (-n..=n).map(|k| 0.4 * k as f64 / (n + 1) as f64).collect()
}

/// Runs every certificate for `p`; the Gramian is taken along the first
/// half of the reference loop `(0, beta)` of duration `horizon`.
pub fn certify(
    p: &SwimmerParams,
    beta: f64,
    horizon: f64,
    dt_max: f64,
    x5_points: usize,
    with_gramian: bool,
) -> anyhow::Result<Bundle> {
    let hash = io::inputs_hash(&Inputs {
        params: p,
        beta,
        horizon,
        dt_max,
        x5_points,
        gramian: with_gramian,
    })?;
    let v = p.validate()?;
    let a1 = v.assumption1_holds;
    let mut checks = Vec::new();
    let mut bundle = Bundle {
        assumption1_holds: a1,
        kalman: None,
        larc: None,
        bad_bracket_in_span: None,
        x5_nonzero: None,
        gramian: None,
        checks: Vec::new(),
        pass: false,
    };

    checks.push(match soft(kalman_rank_at_origin(p))? {
        Ok(k) => {
            bundle.kalman = Some(k.rank.rank);
            CheckReport {
                check: "kalman",
                inputs_hash: hash.clone(),
                rank: Some(k.rank.rank),
                margins: json!({ "singular_values": k.rank.singular_values, "threshold": k.rank.threshold }),
                pass: k.rank.rank <= 2,
                required: true,
                error: None,
            }
        }
        Err(e) => failed("kalman", &hash, e, false, true),
    });

    checks.push(match soft(larc_certificate(p))? {
        Ok(l) => {
            bundle.larc = Some(l.rank.rank);
            CheckReport {
                check: "larc",
                inputs_hash: hash.clone(),
                rank: Some(l.rank.rank),
                margins: json!({
                    "sigma_min": l.rank.sigma_min(),
                    "normalized_det_334": l.normalized_det_334,
                    "normalized_det_434": l.normalized_det_434,
                }),
                pass: (l.rank.rank == 4) == v.drag_anisotropy,
                required: true,
                error: None,
            }
        }
        Err(e) => failed("larc", &hash, e, false, true),
    });

    let balanced = (p.m1 + p.m2).abs() <= 1e-12 * (p.m1.abs() + p.m2.abs());
    checks.push(match soft(bad_bracket_test(p))? {
        Ok(b) => {
            bundle.bad_bracket_in_span = Some(b.in_span_x3_x4);
            CheckReport {
                check: "bad_bracket",
                inputs_hash: hash.clone(),
                rank: None,
                margins: json!({
                    "span_residual": b.span_residual,
                    "f101_norm": b.f101_norm,
                    "x34_coefficient": b.x34_coefficient,
                    "predicted_x34_coefficient": b.predicted_x34_coefficient,
                }),
                pass: b.in_span_x3_x4 == balanced,
                required: a1,
                error: None,
            }
        }
        // Without a bracket basis there is nothing to decompose against.
        Err(e) => failed("bad_bracket", &hash, e, false, a1),
    });

    // With m1 + m2 = 0 the bad bracket is neutralized and the return-method
    // certificates below are not needed.
    let return_needed = a1 && !balanced;
    let alphas = x5_grid(x5_points);
    checks.push(match soft(x5_beta_rank(p, beta, &alphas))? {
        Ok(x) => {
            let nonzero = x.nonzero_off_origin() && !x.degenerate;
            bundle.x5_nonzero = Some(nonzero);
            let min = x.normalized.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
            CheckReport {
                check: "x5",
                inputs_hash: hash.clone(),
                rank: None,
                margins: json!({ "alpha_bar": x.alpha_bar, "min_abs_normalized_det": min }),
                pass: nonzero,
                required: return_needed,
                error: None,
            }
        }
        Err(e) => failed("x5", &hash, e, false, return_needed),
    });

    if with_gramian {
        let cfg = ReturnLoopConfig {
            t_bar: horizon,
            opts: IntegrateOptions::with_dt(dt_max),
            ..ReturnLoopConfig::default()
        };
        let g = soft(reference_loop(p, horizon, beta, &cfg).and_then(|lp| {
            let s = linearize_along(p, &lp.trajectory)?;
            gramian_rank(&s, 0.0, 0.5 * horizon)
        }))?;
        checks.push(match g {
            Ok(g) => {
                bundle.gramian = Some(g.rank);
                CheckReport {
                    check: "gramian",
                    inputs_hash: hash.clone(),
                    rank: Some(g.rank),
                    margins: json!({
                        "sigma_min": g.sigma_min,
                        "singular_values": g.singular_values,
                        "error_estimates": g.error_estimates,
                    }),
                    pass: g.rank == 4,
                    required: return_needed,
                    error: None,
                }
            }
            Err(e) => failed("gramian", &hash, e, false, return_needed),
        });
    }

    bundle.pass = checks.iter().all(|c| c.pass || !c.required);
    bundle.checks = checks;
    Ok(bundle)
}

#[derive(Serialize)]
struct Output<'a> {
    #[serde(flatten)]
    provenance: Provenance<'a>,
    #[serde(flatten)]
    bundle: &'a Bundle,
}

pub(super) fn run(ctx: &Ctx, args: &AnalyzeArgs) -> Result<Code, Failure> {
    let c = ctx.common;
    ctx.params.check().map_err(|e| core_failure(e, Code::Assumption))?;
    let bundle = certify(&ctx.params, c.beta, c.horizon, c.dt_max, args.x5_points, true).code(Code::Simulation)?;
    for check in &bundle.checks {
        let rank = check.rank.map(|r| r.to_string()).unwrap_or_else(|| "-".into());
        let verdict = match (check.pass, check.required) {
            (true, _) => "pass",
            (false, true) => "FAIL",
            (false, false) => "fail (not required)",
        };
        println!("{:<12} rank {:<3} {verdict}", check.check, rank);
        if let Some(e) = &check.error {
            println!("{:<12} {e}", "");
        }
    }
    io::write_json(
        &ctx.out("analyze.json")?,
        &Output {
            provenance: ctx.provenance(),
            bundle: &bundle,
        },
    )
    .code(Code::Io)?;
    Ok(if !bundle.assumption1_holds {
        Code::Assumption
    } else if !bundle.pass {
        Code::Simulation
    } else {
        Code::Ok
    })
}
