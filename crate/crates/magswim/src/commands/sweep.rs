use magswim_core::SwimmerParams;
use serde::Serialize;

use super::{certify, Code, Ctx, Failure, Provenance, WithCode};
use crate::cli::{ParamField, SweepArgs};
use crate::io;

fn field_mut(p: &mut SwimmerParams, f: ParamField) -> &mut f64 {
    match f {
        ParamField::L1 => &mut p.l1,
        ParamField::L2 => &mut p.l2,
        ParamField::Xi1 => &mut p.xi1,
        ParamField::Xi2 => &mut p.xi2,
        ParamField::Eta1 => &mut p.eta1,
        ParamField::Eta2 => &mut p.eta2,
        ParamField::M1 => &mut p.m1,
        ParamField::M2 => &mut p.m2,
        ParamField::Kappa => &mut p.kappa,
    }
}

fn name(f: ParamField) -> &'static str {
    match f {
        ParamField::L1 => "l1",
        ParamField::L2 => "l2",
        ParamField::Xi1 => "xi1",
        ParamField::Xi2 => "xi2",
        ParamField::Eta1 => "eta1",
        ParamField::Eta2 => "eta2",
        ParamField::M1 => "m1",
        ParamField::M2 => "m2",
        ParamField::Kappa => "kappa",
    }
}

#[derive(Clone, Debug, Default, Serialize)]
struct Row {
    x: f64,
    y: f64,
    valid: bool,
    assumption1_holds: bool,
    magnetization_combination: Option<f64>,
    kalman: Option<usize>,
    larc: Option<usize>,
    bad_bracket_in_span: Option<bool>,
    x5_nonzero: Option<bool>,
    gramian: Option<usize>,
    pass: bool,
    error: Option<String>,
}

#[derive(Serialize)]
struct Output<'a> {
    #[serde(flatten)]
    provenance: Provenance<'a>,
    x_field: &'static str,
    y_field: &'static str,
    rows: &'a [Row],
}

fn cell<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

pub(super) fn run(ctx: &Ctx, args: &SweepArgs) -> Result<Code, Failure> {
    let c = ctx.common;
    let mut rows = Vec::new();
    for &x in &args.x_range.values() {
        for &y in &args.y_range.values() {
            let mut p = ctx.params;
            *field_mut(&mut p, args.x_field) = x;
            *field_mut(&mut p, args.y_field) = y;
            let mut row = Row { x, y, ..Row::default() };
            match p.validate() {
                Err(e) => row.error = Some(e.to_string()),
                Ok(v) => {
                    row.valid = true;
                    row.assumption1_holds = v.assumption1_holds;
                    row.magnetization_combination = Some(v.magnetization_combination);
                    match certify(&p, c.beta, c.horizon, c.dt_max, 20, !args.no_gramian) {
                        Ok(b) => {
                            row.kalman = b.kalman;
                            row.larc = b.larc;
                            row.bad_bracket_in_span = b.bad_bracket_in_span;
                            row.x5_nonzero = b.x5_nonzero;
                            row.gramian = b.gramian;
                            row.pass = b.pass;
                        }
                        Err(e) => row.error = Some(format!("{e:#}")),
                    }
                }
            }
            rows.push(row);
        }
    }

    let path = ctx.out("sweep.csv")?;
    let mut w = csv::Writer::from_path(&path).code(Code::Io)?;
    let (xn, yn) = (name(args.x_field), name(args.y_field));
    w.write_record([
        xn,
        yn,
        "valid",
        "assumption1_holds",
        "magnetization_combination",
        "kalman",
        "larc",
        "bad_bracket_in_span",
        "x5_nonzero",
        "gramian",
        "pass",
        "error",
    ])
    .code(Code::Io)?;
    for r in &rows {
        w.write_record([
            r.x.to_string(),
            r.y.to_string(),
            r.valid.to_string(),
            r.assumption1_holds.to_string(),
            cell(&r.magnetization_combination),
            cell(&r.kalman),
            cell(&r.larc),
            cell(&r.bad_bracket_in_span),
            cell(&r.x5_nonzero),
            cell(&r.gramian),
            r.pass.to_string(),
            r.error.clone().unwrap_or_default(),
        ])
        .code(Code::Io)?;
    }
    w.flush().code(Code::Io)?;
    io::write_json(
        &ctx.out("sweep.json")?,
        &Output {
            provenance: ctx.provenance(),
            x_field: xn,
            y_field: yn,
            rows: &rows,
        },
    )
    .code(Code::Io)?;
    let valid = rows.iter().filter(|r| r.valid).count();
    let holds = rows.iter().filter(|r| r.assumption1_holds).count();
    println!("{} points, {valid} valid, {holds} satisfy the standing assumption", rows.len());
    Ok(Code::Ok)
}
