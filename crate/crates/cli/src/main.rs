use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use trs_core::dynamics_numeric::{
    basin_probe, center_manifold_jet, shoot_asymptotic, shoot_couple, BasinOptions, ChartMap, CoupleShootOptions,
    Horn, NumericTrajectory, ShootOptions, TrsField,
};
use trs_core::error::Error;
use trs_core::linear_systems::{
    has_good_spectrum, reduce_linear_full, unstability_index, LinearSystem, ReduceOptions, Reduced,
};
use trs_core::series_core::blocks::compatible;
use trs_core::series_core::{Json, MultiSeries, PolyMatrix};
use trs_core::straightener::{extract_rotational, straighten_field, verify_omega_properties, StraightenerEval};
use trs_core::vf_couples::{
    check_invariance, default_working_order, recognize_trs_vf, reduce_vf_trs, refine_trs, replay_chain,
    FormalCurve, InvariantCouple, TRSVFForm, TransformChain, VfOptions,
};

#[derive(Parser)]
#[command(name = "trs", version, about = "Reduction to TRS normal form and asymptotic trajectories")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Reduce a linear system `x^{p+1} y' = A(x) y`.
    ReduceLinear(Common),
    /// Reduce an invariant couple, then refine to type (q, N, M).
    ReduceVf(Common),
    /// Shoot a trajectory asymptotic to the curve and certify its contact.
    Trajectory(Common),
    /// Estimate the dimension of the stay-set of a TRS form.
    Basin(Common),
    /// Run the applicable invariant checks and print a pass/fail matrix.
    Verify(Common),
}

#[derive(Args, Clone)]
struct Common {
    input: PathBuf,
    #[arg(long)]
    working_order: Option<usize>,
    /// Vestigial height.
    #[arg(long = "N", default_value_t = 0)]
    n_order: usize,
    /// Smoothness parameter.
    #[arg(long = "M", default_value_t = 0)]
    m_order: usize,
    /// Integrator step budget.
    #[arg(long)]
    fuel: Option<usize>,
    /// Relative integration tolerance.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Certification window `x0:x1`.
    #[arg(long, default_value = "0.01:0.3")]
    window: String,
    /// Horn `k:C:eps`.
    #[arg(long, default_value = "1:1:0.05")]
    horn: String,
    /// Contact order to certify; defaults to `N`, at least 1.
    #[arg(long)]
    contact: Option<usize>,
    /// Seed jet order; defaults to contact + 2.
    #[arg(long)]
    seed_order: Option<usize>,
    /// Basin seeds.
    #[arg(long, default_value_t = 64)]
    seeds: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

struct Failure {
    op: &'static str,
    err: Error,
}

type Run<T> = std::result::Result<T, Failure>;

trait Op<T> {
    fn op(self, op: &'static str) -> Run<T>;
}

impl<T> Op<T> for trs_core::error::Result<T> {
    fn op(self, op: &'static str) -> Run<T> {
        self.map_err(|err| Failure { op, err })
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) => 2,
        Error::InsufficientPrecision { .. }
        | Error::EmptyPrecision
        | Error::Fuel(_)
        | Error::SeedTooCoarse { .. }
        | Error::InsufficientWindow
        | Error::Escape { .. } => 4,
        Error::Undecidable(_) | Error::TangentUndefined(_) => 5,
        _ => 3,
    }
}

fn parse_err(msg: String) -> Failure {
    Failure { op: "parse", err: Error::Parse(msg) }
}

fn read_json(path: &Path) -> Run<Value> {
    let s = fs::read_to_string(path).map_err(|e| parse_err(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&s).map_err(|e| parse_err(format!("{}: {e}", path.display())))
}

fn parse_floats(s: &str, n: usize, what: &str) -> Run<Vec<f64>> {
    let v: Vec<f64> = s.split(':').map(str::parse).collect::<std::result::Result<_, _>>().map_err(|_| {
        parse_err(format!("--{what} expects {n} numbers separated by ':', got {s:?}"))
    })?;
    if v.len() != n {
        return Err(parse_err(format!("--{what} expects {n} numbers separated by ':', got {s:?}")));
    }
    Ok(v)
}

fn window(c: &Common) -> Run<(f64, f64)> {
    let w = parse_floats(&c.window, 2, "window")?;
    Ok((w[0], w[1]))
}

fn horn(c: &Common) -> Run<Horn> {
    let h = parse_floats(&c.horn, 3, "horn")?;
    if h[0] < 0.0 || h[0].fract() != 0.0 {
        return Err(parse_err(format!("horn order must be a nonnegative integer, got {}", h[0])));
    }
    Ok(Horn { k: h[0] as usize, c: h[1], eps: h[2] })
}

fn config(cmd: &str, c: &Common) -> Value {
    json!({
        "command": cmd,
        "input": c.input.display().to_string(),
        "working_order": c.working_order,
        "N": c.n_order,
        "M": c.m_order,
        "fuel": c.fuel,
        "tol": c.tol,
        "seed": c.seed,
        "window": c.window,
        "horn": c.horn,
        "contact": c.contact,
        "seed_order": c.seed_order,
        "seeds": c.seeds,
    })
}

fn write(out: &Option<PathBuf>, name: &str, body: &str) -> Run<()> {
    let Some(dir) = out else { return Ok(()) };
    let io = |e: std::io::Error| Failure { op: "write", err: Error::Precondition(format!("{}: {e}", dir.display())) };
    fs::create_dir_all(dir).map_err(io)?;
    fs::write(dir.join(name), body).map_err(io)
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json values always serialize") + "\n"
}

/// Writes `{config, key: value}` to `out/name` and returns it.
fn emit(c: &Common, cfg: &Value, name: &str, key: &str, v: Value) -> Run<Value> {
    let doc = json!({"config": cfg, key: v});
    write(&c.out, name, &pretty(&doc))?;
    Ok(doc)
}

enum Input {
    System(LinearSystem),
    Couple(InvariantCouple),
    Form(TRSVFForm),
}

fn load(path: &Path) -> Run<Input> {
    let v = read_json(path)?;
    if v.get("vf").is_some() {
        InvariantCouple::from_json(&v).map(Input::Couple).op("parse")
    } else if v.get("exponents").is_some() {
        TRSVFForm::from_json(&v).map(Input::Form).op("parse")
    } else if v.get("A").is_some() {
        LinearSystem::from_json(&v).map(Input::System).op("parse")
    } else {
        Err(parse_err(format!("{}: not a linear system, couple or TRS form", path.display())))
    }
}

fn reduce_linear(c: &Common) -> Run<Value> {
    let Input::System(s) = load(&c.input)? else {
        return Err(parse_err("reduce-linear expects a linear system".into()));
    };
    let cfg = config("reduce-linear", c);
    let wo = c.working_order.unwrap_or(s.a.trunc());
    let r = reduce_linear_full(&s, ReduceOptions::new(wo)).op("reduce_linear_full")?;
    emit(c, &cfg, "chain.json", "chain", r.chain.to_json())?;
    let (verdict, body) = match &r.result {
        Reduced::Regular(sys) => ("regular", sys.to_json()),
        Reduced::Trs(f) => ("trs", f.to_json()),
    };
    emit(c, &cfg, "form.json", verdict, body.clone())?;
    Ok(json!({"config": cfg, "verdict": verdict, "steps": r.chain.len(), verdict: body}))
}

fn couple_working_order(c: &Common, cp: &InvariantCouple) -> Run<usize> {
    if let Some(k) = c.working_order {
        return Ok(k);
    }
    let inv = check_invariance(cp).op("check_invariance")?;
    if !inv.holds {
        return Err(Failure {
            op: "check_invariance",
            err: Error::Precondition(format!("curve is not invariant: failure at order {:?}", inv.failure)),
        });
    }
    Ok(default_working_order(cp.n(), inv.m.unwrap_or(0), c.n_order, c.m_order).min(cp.vf.trunc()))
}

struct ReducedCouple {
    chain: TransformChain,
    couple: InvariantCouple,
    form: TRSVFForm,
}

fn reduce_and_refine(c: &Common, cp: &InvariantCouple) -> Run<ReducedCouple> {
    let wo = couple_working_order(c, cp)?;
    let inv = check_invariance(&cp.truncate(wo)).op("check_invariance")?;
    if !inv.holds {
        return Err(Failure {
            op: "check_invariance",
            err: Error::Precondition(format!("curve is not invariant: failure at order {:?}", inv.failure)),
        });
    }
    let red = reduce_vf_trs(cp, VfOptions::new(wo)).op("reduce_vf_trs")?;
    if c.n_order == 0 && c.m_order == 0 {
        return Ok(ReducedCouple { chain: red.chain, couple: red.couple, form: red.form });
    }
    let refined = refine_trs(&red.couple, c.n_order, c.m_order).op("refine_trs")?;
    let mut chain = red.chain;
    chain.extend(refined.chain);
    Ok(ReducedCouple { chain, couple: refined.couple, form: refined.form })
}

fn reduce_vf(c: &Common) -> Run<Value> {
    let Input::Couple(cp) = load(&c.input)? else {
        return Err(parse_err("reduce-vf expects an invariant couple".into()));
    };
    let cfg = config("reduce-vf", c);
    let r = reduce_and_refine(c, &cp)?;
    emit(c, &cfg, "chain.json", "chain", r.chain.to_json())?;
    emit(c, &cfg, "form.json", "form", r.form.to_json())?;
    emit(c, &cfg, "couple.json", "couple", r.couple.to_json())?;
    Ok(json!({"config": cfg, "steps": r.chain.len(), "form": r.form.to_json()}))
}

fn csv(t: &NumericTrajectory) -> String {
    let n = t.dim();
    let mut s = String::from("x");
    for i in 0..n {
        s.push_str(&format!(",y{}", i + 1));
    }
    s.push('\n');
    for (x, y) in t.xs.iter().zip(&t.ys) {
        s.push_str(&format!("{x:e}"));
        for v in y {
            s.push_str(&format!(",{v:e}"));
        }
        s.push('\n');
    }
    s
}

fn shoot_options(c: &Common, contact: usize) -> Run<ShootOptions> {
    let mut o = ShootOptions::new(contact, c.seed_order.unwrap_or(contact + 2), window(c)?);
    o.integrator.rtol = c.tol;
    if let Some(f) = c.fuel {
        o.integrator.max_steps = f;
    }
    Ok(o)
}

fn trajectory(c: &Common) -> Run<Value> {
    let cfg = config("trajectory", c);
    let contact = c.contact.unwrap_or(c.n_order.max(1));
    let shoot = shoot_options(c, contact)?;
    let (shot, straightened) = match load(&c.input)? {
        Input::Couple(cp) => {
            let wo = couple_working_order(c, &cp)?;
            let o = CoupleShootOptions {
                n_order: c.n_order,
                m_order: c.m_order,
                working_order: Some(wo),
                straighten: true,
                shoot,
            };
            let cs = shoot_couple(&cp, &o).op("shoot_couple")?;
            (cs.shot, cs.straightened)
        }
        Input::Form(f) => {
            let curve = FormalCurve::zero(f.n(), contact + 2);
            match extract_rotational(&f.bs, &f.exps, f.q) {
                Some(r) => {
                    let sf = straighten_field(&f, &r).op("straighten_field")?;
                    let chart = ChartMap::identity().then_straighten(StraightenerEval::new(r));
                    (shoot_asymptotic(&sf, &chart, &curve, &shoot).op("shoot_asymptotic")?, true)
                }
                None => {
                    let tf = TrsField::from_form(&f).op("field")?;
                    (shoot_asymptotic(&tf, &ChartMap::identity(), &curve, &shoot).op("shoot_asymptotic")?, false)
                }
            }
        }
        Input::System(_) => return Err(parse_err("trajectory expects a couple or a TRS form".into())),
    };
    write(&c.out, "trajectory.csv", &csv(&shot.trajectory))?;
    let body = json!({
        "contact": shot.report.to_json(),
        "straightened": straightened,
        "sweeps": shot.sweeps,
        "signs": shot.signs,
        "steps": {
            "accepted": shot.chart_trajectory.stats.accepted,
            "rejected": shot.chart_trajectory.stats.rejected,
            "implicit": shot.chart_trajectory.stats.implicit,
        },
    });
    emit(c, &cfg, "contact.json", "report", body)
}

fn load_form(c: &Common) -> Run<TRSVFForm> {
    match load(&c.input)? {
        Input::Form(f) => Ok(f),
        Input::Couple(cp) => Ok(reduce_and_refine(c, &cp)?.form),
        Input::System(_) => Err(parse_err("expected a couple or a TRS form".into())),
    }
}

/// Whether `y = 0` is invariant: no pure-`x` term in `V`.
fn zero_curve_invariant(f: &TRSVFForm) -> bool {
    f.v.iter().all(|v| v.terms().keys().all(|a| a[1..].iter().any(|&e| e > 0)))
}

fn basin_options(c: &Common) -> BasinOptions {
    let mut o = BasinOptions { seeds: c.seeds, rng_seed: c.seed, ..BasinOptions::default() };
    if let Some(f) = c.fuel {
        o.integrator.max_steps = f;
    }
    o
}

fn basin(c: &Common) -> Run<Value> {
    let cfg = config("basin", c);
    let form = load_form(c)?;
    let h = horn(c)?;
    if !zero_curve_invariant(&form) {
        return Err(Failure {
            op: "basin_probe",
            err: Error::Precondition("y = 0 is not invariant: V has pure-x terms".into()),
        });
    }
    let f = TrsField::from_form(&form).op("field")?;
    let u = unstability_index(&form.bs, &form.exps).op("unstability_index")?;
    let r = basin_probe(&f, &FormalCurve::zero(form.n(), h.k + 1), &h, &basin_options(c)).op("basin_probe")?;
    let body = json!({"unstability_index": u, "expected_dimension": 1 + u, "probe": r.to_json()});
    emit(c, &cfg, "basin.json", "report", body)
}

fn check(name: &str, pass: Option<bool>, detail: Value) -> Value {
    let status = match pass {
        Some(true) => "pass",
        Some(false) => "fail",
        None => "skipped",
    };
    json!({"name": name, "status": status, "detail": detail})
}

fn err_check(name: &str, e: Error) -> Value {
    check(name, Some(false), json!(e.to_string()))
}

fn form_checks(c: &Common, f: &TRSVFForm, out: &mut Vec<Value>) {
    match has_good_spectrum(&f.c) {
        Ok(g) => out.push(check("good_spectrum", Some(g), json!(null))),
        Err(e) => out.push(err_check("good_spectrum", e)),
    }
    let cm = PolyMatrix::constant(f.c.clone(), 0);
    match compatible(&cm, &f.d, &f.bs) {
        Ok(g) => out.push(check("compatible", Some(g), json!(null))),
        Err(e) => out.push(err_check("compatible", e)),
    }
    let ydeg = f.v.iter().map(MultiSeries::degree_y).max().unwrap_or(0).max(1);
    let k = f.v.iter().map(MultiSeries::trunc).min().unwrap_or(0) + f.q + 1 + f.n_order + f.m_order * ydeg;
    let back = f.to_field(k).and_then(|vf| recognize_trs_vf(&vf, f.q, f.n_order, f.m_order));
    match back {
        Ok(g) => out.push(check("roundtrip", Some(g.c == f.c && g.exps == f.exps), json!({"order": k}))),
        Err(e) => out.push(err_check("roundtrip", e)),
    }
    match extract_rotational(&f.bs, &f.exps, f.q) {
        Some(r) => {
            let xs: Vec<f64> = (1..=8).map(|i| 0.05 * i as f64).collect();
            match verify_omega_properties(&r, &r, Some(&f.c), &xs) {
                Ok(rep) => {
                    out.push(check("omega_orthogonal", Some(rep.orthogonality < 1e-10), json!(rep.orthogonality)));
                    out.push(check("omega_group_law", Some(rep.group_law < 1e-10), json!(rep.group_law)));
                    out.push(check("omega_ode", Some(rep.ode_integral.min(rep.ode_direct) < 1e-6), json!({
                        "supported_sign": format!("{:?}", rep.supported),
                        "integral_residual": rep.ode_integral,
                        "direct_residual": rep.ode_direct,
                    })));
                }
                Err(e) => out.push(err_check("omega", e)),
            }
        }
        None => out.push(check("omega", None, json!("no dominant rotation"))),
    }
    let deg = f.q + 1 + f.n_order + 2;
    match center_manifold_jet(f, deg) {
        Ok(cmj) => out.push(check("center_manifold_divisible", Some(cmj.divisible), json!({
            "degree": deg,
            "x_order": cmj.x_order,
            "needed": f.q + 1 + f.n_order,
        }))),
        Err(e) => out.push(err_check("center_manifold_divisible", e)),
    }
    let u = unstability_index(&f.bs, &f.exps);
    let shape = horn(c);
    match (u, shape) {
        (Ok(u), Ok(h)) if zero_curve_invariant(f) && extract_rotational(&f.bs, &f.exps, f.q).is_none() => {
            let probe = TrsField::from_form(f)
                .and_then(|tf| basin_probe(&tf, &FormalCurve::zero(f.n(), h.k + 1), &h, &basin_options(c)));
            match probe {
                Ok(r) => out.push(check("basin_dimension", Some(r.dimension == 1 + u && r.ambiguous_fraction < 0.01), json!({
                    "empirical": r.dimension,
                    "expected": 1 + u,
                    "ambiguous_fraction": r.ambiguous_fraction,
                }))),
                Err(e) => out.push(err_check("basin_dimension", e)),
            }
        }
        (Err(e), _) => out.push(err_check("basin_dimension", e)),
        (_, Err(f)) => out.push(err_check("basin_dimension", f.err)),
        _ => out.push(check("basin_dimension", None, json!("y = 0 not invariant or rotation present"))),
    }
}

fn verify(c: &Common) -> Run<Value> {
    let cfg = config("verify", c);
    let mut checks = Vec::new();
    match load(&c.input)? {
        Input::Form(f) => form_checks(c, &f, &mut checks),
        Input::Couple(cp) => {
            match check_invariance(&cp) {
                Ok(i) => checks.push(check("invariance", Some(i.holds), json!({"verified_order": i.verified_order}))),
                Err(e) => checks.push(err_check("invariance", e)),
            }
            match reduce_and_refine(c, &cp) {
                Ok(r) => {
                    let wo = r.couple.vf.trunc();
                    let replayed = replay_chain(&cp.truncate(wo.max(r.couple.curve.trunc())), &r.chain);
                    match replayed {
                        Ok(rc) => {
                            let k = rc.vf.trunc().min(r.couple.vf.trunc());
                            let same = rc.vf.truncate(k) == r.couple.vf.truncate(k);
                            checks.push(check("replay", Some(same), json!({"order": k})));
                        }
                        Err(e) => checks.push(err_check("replay", e)),
                    }
                    form_checks(c, &r.form, &mut checks);
                }
                Err(f) => checks.push(err_check(f.op, f.err)),
            }
        }
        Input::System(s) => {
            let wo = c.working_order.unwrap_or(s.a.trunc());
            match reduce_linear_full(&s, ReduceOptions::new(wo)) {
                Ok(r) => {
                    let replayed = trs_core::linear_systems::replay(&s, &r.chain).map(|t| t == r.system);
                    match replayed {
                        Ok(g) => checks.push(check("replay", Some(g), json!(null))),
                        Err(e) => checks.push(err_check("replay", e)),
                    }
                    if let Reduced::Trs(f) = &r.result {
                        match has_good_spectrum(&f.c) {
                            Ok(g) => checks.push(check("good_spectrum", Some(g), json!(null))),
                            Err(e) => checks.push(err_check("good_spectrum", e)),
                        }
                    }
                }
                Err(e) => checks.push(err_check("reduce_linear_full", e)),
            }
        }
    }
    let all = checks.iter().all(|c| c["status"] != "fail");
    emit(c, &cfg, "verify.json", "report", json!({"all_pass": all, "checks": checks}))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match &cli.cmd {
        Cmd::ReduceLinear(c) => reduce_linear(c),
        Cmd::ReduceVf(c) => reduce_vf(c),
        Cmd::Trajectory(c) => trajectory(c),
        Cmd::Basin(c) => basin(c),
        Cmd::Verify(c) => verify(c),
    };
    match res {
        Ok(v) => {
            print!("{}", pretty(&v));
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}: {}", f.op, f.err);
            ExitCode::from(exit_code(&f.err))
        }
    }
}
