//! Command-line front end. Every command prints one canonical JSON document.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde_json::{json, Value};

use crate::abgrp::FinAbPresentation;
use crate::chartglue::intersect;
use crate::error::Error;
use crate::genfun::{wps_oracle_chi, wps_weights, wps_z_closed, z_global, z_oracle, QSeries};
use crate::intlinalg::IntMatrix;
use crate::modstab::{modified_slope, rank2_slope_stable, wps_chi_formula, Polarization, StabilityReport, SubLineBundle};
use crate::sheafrep::{
    characteristic_function, fine_gradings, frame, glue_check_all, line_bundle_chart_data, line_bundle_windows,
    CharacteristicFunction, EquivariantLineBundle, P1Point, SheafData,
};
use crate::stackyfan::StackyFan;

#[derive(Parser, Debug)]
#[command(name = "toricstack", version, about = "Toric sheaves on smooth toric DM stacks")]
pub struct Cli {
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check the fan conditions.
    Validate { fan: PathBuf },
    /// Gale dual DG(β) and the images of the dual basis.
    Gale { fan: PathBuf },
    /// Local group of every top cone.
    Localgroups { fan: PathBuf },
    /// Box elements of every top cone.
    Box { fan: PathBuf },
    /// Overlap data of two top cones.
    Intersect { fan: PathBuf, i: usize, j: usize },
    /// Chart data and gluing check of the line bundle L_B.
    #[command(allow_negative_numbers = true)]
    Picard {
        fan: PathBuf,
        #[arg(required = true)]
        b: Vec<i64>,
    },
    /// Gluing check of a sheaf file on every pair of charts.
    #[command(name = "glue-check", allow_negative_numbers = true)]
    GlueCheck {
        fan: PathBuf,
        sheaf: PathBuf,
        /// `lo_1 .. lo_d hi_1 .. hi_d`, shared by every chart.
        #[arg(long, num_args = 2..)]
        window: Option<Vec<i64>>,
    },
    /// Characteristic function and its framing.
    Charfn { fan: PathBuf, sheaf: PathBuf },
    /// Slope stability of a sheaf file.
    Stability { fan: PathBuf, sheaf: PathBuf },
    /// χ of O(x) on P(a,b,c).
    #[command(allow_negative_numbers = true)]
    Chi(ChiArgs),
    /// Generating function of rank-1 torsion-free sheaves with fixed c1.
    #[command(allow_negative_numbers = true)]
    Zseries {
        fan: PathBuf,
        #[arg(long, num_args = 1.., required = true)]
        c1: Vec<i64>,
        #[arg(long, default_value_t = 10)]
        order: usize,
        #[arg(long)]
        compare: bool,
    },
}

#[derive(Args, Debug)]
pub struct ChiArgs {
    pub a: i64,
    pub b: i64,
    pub c: i64,
    #[arg(long, default_value_t = 0)]
    pub from: i64,
    #[arg(long, default_value_t = 10)]
    pub to: i64,
    #[arg(long)]
    pub compare: bool,
}

#[derive(Debug)]
enum Failure {
    Parse(String),
    Domain(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Domain(e)
    }
}

type Out = std::result::Result<Value, Failure>;

/// Exit code and the JSON document for one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub json: Value,
    pub out: Option<PathBuf>,
}

impl Outcome {
    pub fn render(&self) -> String {
        let mut s = serde_json::to_string(&self.json).expect("json value serializes");
        s.push('\n');
        s
    }
}

pub fn execute<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let text = e.to_string();
            let json = if code == 0 { json!({ "help": text }) } else { json!({ "error": text.trim() }) };
            return Outcome { code, json, out: None };
        }
    };
    let out = cli.out.clone();
    let result = with_threads(|| dispatch(&cli.command));
    match result {
        Ok(json) => Outcome { code: 0, json, out },
        Err(Failure::Parse(msg)) => Outcome { code: 2, json: json!({ "error": msg }), out },
        Err(Failure::Domain(e)) => Outcome { code: 1, json: error_json(&e), out },
    }
}

/// Runs the command line, writes the JSON and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let outcome = execute(argv);
    let text = outcome.render();
    match &outcome.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                print!("{}", json!({ "error": format!("cannot write {}: {e}", path.display()) }));
                println!();
                return 2;
            }
        }
        None => print!("{text}"),
    }
    outcome.code
}

fn with_threads<F: FnOnce() -> Out + Send>(f: F) -> Out {
    let Ok(raw) = std::env::var("TORICSTACK_THREADS") else { return f() };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Failure::Parse(format!("TORICSTACK_THREADS must be a positive integer, got {raw:?}")))?;
    if n == 0 {
        return Err(Failure::Parse("TORICSTACK_THREADS must be positive".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Failure::Domain(Error::Internal(e.to_string())))?;
    pool.install(f)
}

fn error_json(e: &Error) -> Value {
    let kind = match e {
        Error::NotAHomomorphism => "not_a_homomorphism",
        Error::InvalidFan(_) => "invalid_fan",
        Error::Unsupported(_) => "unsupported",
        Error::NotTopCone(_) => "not_top_cone",
        Error::SameCone(_) => "same_cone",
        Error::WindowExcludesGenerator => "window_excludes_generator",
        Error::InsufficientSaturation { .. } => "insufficient_saturation",
        Error::DecomposableCandidate(_) => "decomposable_candidate",
        Error::OutsideVanishingRange { .. } => "outside_vanishing_range",
        Error::NonFiniteCoefficient { .. } => "non_finite_coefficient",
        Error::InvalidArgument(_) => "invalid_argument",
        Error::Internal(_) => "internal",
    };
    json!({ "error": e.to_string(), "kind": kind })
}

fn read(path: &PathBuf) -> std::result::Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Parse(format!("cannot read {}: {e}", path.display())))
}

fn load_fan(path: &PathBuf) -> std::result::Result<StackyFan, Failure> {
    StackyFan::from_json(&read(path)?).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn load_valid_fan(path: &PathBuf) -> std::result::Result<StackyFan, Failure> {
    let fan = load_fan(path)?;
    fan.check()?;
    Ok(fan)
}

fn load_sheaf(path: &PathBuf) -> std::result::Result<SheafData, Failure> {
    SheafData::from_json(&read(path)?).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn int(x: &BigInt) -> Value {
    match x.to_i64() {
        Some(v) => json!(v),
        None => json!(x.to_string()),
    }
}

fn ints(v: &[BigInt]) -> Value {
    Value::Array(v.iter().map(int).collect())
}

fn rat(x: &BigRational) -> Value {
    json!(x.to_string())
}

fn matrix(m: &IntMatrix) -> Value {
    Value::Array(m.to_rows().iter().map(|r| ints(r)).collect())
}

fn group(g: &FinAbPresentation) -> Value {
    json!({
        "rank": g.free_rank(),
        "torsion": ints(g.torsion()),
        "order": g.order().as_ref().map(int).unwrap_or(Value::Null),
    })
}

fn series(s: &QSeries) -> Value {
    json!({ "leading": rat(&s.leading), "coefficients": ints(&s.coeffs) })
}

fn point(p: &P1Point) -> Value {
    match p {
        P1Point::Point(x, y) => json!([x, y]),
        P1Point::Generic(_) => json!("generic"),
    }
}

fn dispatch(cmd: &Command) -> Out {
    match cmd {
        Command::Validate { fan } => {
            let fan = load_fan(fan)?;
            let report = fan.validate();
            Ok(json!({
                "valid": report.valid,
                "failures": report.failures,
                "rank": fan.d,
                "rays": fan.n(),
                "top_cones": fan.cones.len(),
            }))
        }
        Command::Gale { fan } => {
            let fan = load_valid_fan(fan)?;
            let (dg, _) = fan.gale_dual()?;
            let imgs = fan.beta_dual_images()?;
            Ok(json!({
                "DG": { "rank": dg.free_rank(), "torsion": ints(dg.torsion()) },
                "beta_dual": imgs.iter().map(|v| ints(v)).collect::<Vec<_>>(),
            }))
        }
        Command::Localgroups { fan } => {
            let fan = load_valid_fan(fan)?;
            let mut cones = Vec::new();
            for c in 0..fan.cones.len() {
                let g = fan.local_group(c)?;
                cones.push(json!({ "cone": c, "rays": fan.cones[c], "group": group(&g) }));
            }
            Ok(json!({ "cones": cones }))
        }
        Command::Box { fan } => {
            let fan = load_valid_fan(fan)?;
            let mut cones = Vec::new();
            for c in 0..fan.cones.len() {
                let elems = fan.box_elements(c)?;
                let order = fan.local_group(c)?.order();
                let list: Vec<Value> = elems
                    .iter()
                    .map(|e| {
                        json!({
                            "q": e.q.iter().map(rat).collect::<Vec<_>>(),
                            "lattice_point": ints(&e.lattice_point),
                        })
                    })
                    .collect();
                cones.push(json!({
                    "cone": c,
                    "size": elems.len(),
                    "group_order": order.as_ref().map(int).unwrap_or(Value::Null),
                    "elements": list,
                }));
            }
            Ok(json!({ "cones": cones }))
        }
        Command::Intersect { fan, i, j } => {
            let fan = load_valid_fan(fan)?;
            let ci = intersect(&fan, *i, *j)?;
            let audit = ci.audit();
            if !audit.is_empty() {
                return Err(Error::Internal(audit.join("; ")).into());
            }
            Ok(json!({
                "i": ci.i,
                "j": ci.j,
                "shared": ci.shared,
                "p": ci.p(),
                "DG_i": group(&ci.chart_i.group),
                "DG_j": group(&ci.chart_j.group),
                "DG_union": group(&ci.dg_union),
                "DH": group(&ci.dh),
                "XK": group(&ci.k_chars),
                "C": matrix(&ci.c),
                "A": matrix(&ci.a),
                "chi": matrix(&ci.chi),
                "basis1": ci.basis1.iter().map(|v| ints(v)).collect::<Vec<_>>(),
                "basis2": ci.basis2.iter().map(|v| ints(v)).collect::<Vec<_>>(),
                "mu": ci.mu.iter().map(|v| ints(v)).collect::<Vec<_>>(),
            }))
        }
        Command::Picard { fan, b } => {
            let fan = load_valid_fan(fan)?;
            let lb = EquivariantLineBundle::new(b.clone());
            let mut charts = Vec::new();
            for c in 0..fan.cones.len() {
                let data = line_bundle_chart_data(&fan, &lb, c)?;
                charts.push(json!({
                    "cone": c,
                    "position": data.position,
                    "generator": ints(&data.generator),
                    "fine_grading": ints(&data.fine_grading),
                    "box_q": data.box_element.q.iter().map(rat).collect::<Vec<_>>(),
                }));
            }
            let sol = fine_gradings(&fan, &lb)?;
            let reports = glue_check_all(&fan, &line_bundle_windows(&fan, &lb)?)?;
            Ok(json!({
                "B": b,
                "charts": charts,
                "fine_grading_ambiguity": int(&sol.ambiguity),
                "glues": reports.iter().all(|r| r.ok),
            }))
        }
        Command::GlueCheck { fan, sheaf, window } => {
            let fan = load_valid_fan(fan)?;
            let data = load_sheaf(sheaf)?;
            let windows = match window {
                None => data.windows(&fan)?,
                Some(w) => {
                    if w.len() != 2 * fan.d {
                        return Err(Failure::Parse(format!("--window needs {} integers", 2 * fan.d)));
                    }
                    let (lo, hi) = w.split_at(fan.d);
                    if lo.iter().zip(hi).any(|(l, h)| l > h) {
                        return Err(Failure::Parse("--window needs lo <= hi in every coordinate".into()));
                    }
                    data.windows_in(&fan, lo, hi)?
                }
            };
            let reports = glue_check_all(&fan, &windows)?;
            let ok = reports.iter().all(|r| r.ok);
            Ok(json!({ "ok": ok, "pairs": serde_json::to_value(&reports).expect("reports serialize") }))
        }
        Command::Charfn { fan, sheaf } => {
            let fan = load_valid_fan(fan)?;
            let data = load_sheaf(sheaf)?;
            let cf = characteristic_function(&fan, &data.windows(&fan)?)?;
            Ok(json!({ "rank": data.rank(), "charts": charfn_json(&cf), "framed": charfn_json(&frame(&cf)) }))
        }
        Command::Stability { fan, sheaf } => {
            let fan = load_valid_fan(fan)?;
            let pol = Polarization::from_fan(&fan)?;
            let data = load_sheaf(sheaf)?;
            match &data {
                SheafData::Rank2(r) => Ok(stability_json(&rank2_slope_stable(&fan, &pol, r)?)),
                _ => {
                    let slope = modified_slope(&fan, &pol, &data)?;
                    Ok(json!({ "verdict": "stable", "slope": rat(&slope), "candidates": [], "witness": null }))
                }
            }
        }
        Command::Chi(args) => chi(args),
        Command::Zseries { fan, c1, order, compare } => {
            let fan = load_valid_fan(fan)?;
            let pol = Polarization::from_fan(&fan)?;
            let z = z_oracle(&fan, &pol, c1, *order)?;
            let mut out = json!({
                "order": order,
                "c1": c1,
                "chi0": int(&z.chi0),
                "chi0_method": "lattice_h0",
                "leading": rat(&z.series.leading),
                "coefficients": ints(&z.series.coeffs),
                "per_chart": z.per_chart.iter().map(|s| ints(&s.coeffs)).collect::<Vec<_>>(),
            });
            if *compare {
                out["compare"] = zcompare(&fan, &pol, c1, *order, &z.series)?;
            }
            Ok(out)
        }
    }
}

fn charfn_json(cf: &CharacteristicFunction) -> Value {
    Value::Array(
        cf.charts
            .iter()
            .map(|c| {
                json!({
                    "cone": c.cone,
                    "box_key": ints(&c.box_key),
                    "lo": c.lo,
                    "hi": c.hi,
                    "saturation": c.saturation,
                    "dims": c.dims.iter().map(|(x, d)| json!({ "x": x, "dim": d })).collect::<Vec<_>>(),
                })
            })
            .collect(),
    )
}

fn sub_json(s: &SubLineBundle) -> Value {
    json!({ "line": point(&s.line), "B": s.b, "slope": rat(&s.slope), "margin": rat(&s.margin) })
}

fn stability_json(r: &StabilityReport) -> Value {
    json!({
        "verdict": serde_json::to_value(r.verdict).expect("verdict serializes"),
        "slope": rat(&r.slope),
        "candidates": r.candidates.iter().map(sub_json).collect::<Vec<_>>(),
        "witness": sub_json(&r.witness),
    })
}

fn chi(args: &ChiArgs) -> Out {
    if args.from > args.to {
        return Err(Failure::Parse("--from must not exceed --to".into()));
    }
    let (a, b, c) = (args.a, args.b, args.c);
    let mut values = Vec::new();
    let (mut compared, mut agreeing, mut non_integral) = (0, 0, 0);
    for x in args.from..=args.to {
        let f = wps_chi_formula(a, b, c, x)?;
        let mut entry = json!({ "x": x, "formula": rat(&f) });
        if !f.is_integer() {
            non_integral += 1;
        }
        if args.compare {
            let oracle = wps_oracle_chi([a, b, c], x);
            entry["oracle"] = oracle.as_ref().map(int).unwrap_or(Value::Null);
            entry["agree"] = match &oracle {
                Some(o) => {
                    compared += 1;
                    let same = BigRational::from_integer(o.clone()) == f;
                    if same {
                        agreeing += 1;
                    }
                    json!(same)
                }
                None => Value::Null,
            };
        }
        values.push(entry);
    }
    let mut out = json!({ "weights": [a, b, c], "values": values });
    if args.compare {
        out["summary"] = json!({
            "compared": compared,
            "agreeing": agreeing,
            "formula_non_integral": non_integral,
            "oracle_from": a * b * c - 1,
        });
    }
    Ok(out)
}

fn zcompare(fan: &StackyFan, pol: &Polarization, c1: &[i64], order: usize, oracle: &QSeries) -> Out {
    let weight = order.min(3);
    let global = z_global(fan, pol, weight)?;
    let product = &oracle.coeffs[..=weight];
    let factorization = json!({
        "weight": weight,
        "global": ints(&global),
        "product": ints(product),
        "consistent": global.as_slice() == product,
    });
    let closed = match wps_weights(fan, c1)? {
        None => Value::Null,
        Some((w, x)) => {
            let z = wps_z_closed(w[0], w[1], w[2], x, order)?;
            let diffs: Vec<Value> = oracle
                .coeffs
                .iter()
                .zip(&z.coeffs)
                .enumerate()
                .filter(|(_, (o, c))| o != c)
                .map(|(k, (o, c))| json!({ "w": k, "oracle": int(o), "closed": int(c), "delta": int(&(o - c)) }))
                .collect();
            json!({
                "weights": w,
                "x": x,
                "closed": series(&z),
                "leading_equal": z.leading == oracle.leading,
                "coefficient_diffs": diffs,
                "agree": z == *oracle,
            })
        }
    };
    Ok(json!({ "factorization": factorization, "wps": closed }))
}
