use magswim_core::ValidationReport;
use serde::Serialize;

use super::{core_failure, Code, Ctx, Failure, Provenance, WithCode};
use crate::io;

#[derive(Serialize)]
struct Condition {
    name: &'static str,
    holds: bool,
}

#[derive(Serialize)]
struct Output<'a> {
    #[serde(flatten)]
    provenance: Provenance<'a>,
    inputs_hash: String,
    report: ValidationReport,
    conditions: Vec<Condition>,
    failed: Vec<&'static str>,
}

pub(super) fn run(ctx: &Ctx) -> Result<Code, Failure> {
    let report = ctx.params.validate().map_err(|e| core_failure(e, Code::Assumption))?;
    let conditions = vec![
        Condition {
            name: "positivity",
            holds: report.positivity,
        },
        Condition {
            name: "drag anisotropy",
            holds: report.drag_anisotropy,
        },
        Condition {
            name: "normal drag dominates",
            holds: report.normal_drag_dominates,
        },
        Condition {
            name: "magnetization nondegenerate",
            holds: report.magnetization_nondegenerate,
        },
    ];
    let failed: Vec<_> = conditions.iter().filter(|c| !c.holds).map(|c| c.name).collect();
    for c in &conditions {
        println!("{:<30}{}", c.name, if c.holds { "ok" } else { "FAIL" });
    }
    println!("{:<30}{}", "magnetization combination", report.magnetization_combination);
    println!("{:<30}{}", "isotropic drag", report.isotropic_drag);
    println!("{:<30}{}", "straight set invariant", report.straight_set_invariant);
    println!(
        "{:<30}{}",
        "standing assumption",
        if report.assumption1_holds { "holds" } else { "FAILS" }
    );

    let out = Output {
        provenance: ctx.provenance(),
        inputs_hash: io::inputs_hash(&ctx.params).code(Code::Io)?,
        report,
        conditions,
        failed,
    };
    io::write_json(&ctx.out("validate.json")?, &out).code(Code::Io)?;
    Ok(if report.assumption1_holds { Code::Ok } else { Code::Assumption })
}
