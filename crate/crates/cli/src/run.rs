use crate::svg::emit_histogram;
use crate::verify::run_battery;
use crate::{
    Cli, CoeffsCmd, Command, DualArgs, ExpsumCmd, Failure, Format, HarnessCmd, MethodArg, ModeArg,
    MomentsCmd, QrPrimesCmd, SeriesArgs, SumKind, VoronoiCmd,
};
use apmoments::coeffs::{self, CoefficientSeries, Cusp, WeightKind, MAX_DELTA_LENGTH};
use apmoments::expsum::{self, Method};
use apmoments::harness::{self, DualParams, ReportOptions};
use apmoments::qrprimes::{self, ZSpec};
use apmoments::saliemoments::{self, MomentTuple};
use apmoments::voronoi::{self, WindowSpec, WindowTransform};
use apmoments::PrimePowerModulus;
use serde::Serialize;
use serde_json::json;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

type Outcome = Result<(), Failure>;

fn invalid<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Validation(msg.into()))
}

fn write_out(cli: &Cli, text: &str) -> Outcome {
    match &cli.out {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn format(cli: &Cli, default: Format, allowed: &[Format]) -> Result<Format, Failure> {
    let f = cli.format.unwrap_or(default);
    if !allowed.contains(&f) {
        return invalid(format!("format {f:?} is not available for this command"));
    }
    Ok(f)
}

fn emit_json(cli: &Cli, result: impl Serialize) -> Outcome {
    format(cli, Format::Json, &[Format::Json])?;
    write_json(cli, result)
}

fn write_json(cli: &Cli, result: impl Serialize) -> Outcome {
    let doc = json!({ "config": cli, "result": result });
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Failure::Io(e.to_string()))?;
    text.push('\n');
    write_out(cli, &text)
}

/// CSV with the resolved configuration as a leading comment line.
fn emit_csv(cli: &Cli, header: &str, rows: &[String], trailer: &[String]) -> Outcome {
    let config = serde_json::to_string(cli).map_err(|e| Failure::Io(e.to_string()))?;
    let mut text = format!("# config: {config}\n{header}\n");
    for r in rows.iter().chain(trailer) {
        text.push_str(r);
        text.push('\n');
    }
    write_out(cli, &text)
}

fn parse_weight(s: &str) -> Result<WeightKind, Failure> {
    let parsed = match s.split_once(':') {
        Some(("integral", k)) => k.parse().ok().map(|kappa| WeightKind::Integral { kappa }),
        Some(("half", l)) => l.parse().ok().map(|ell| WeightKind::HalfIntegral { ell }),
        _ => None,
    };
    match parsed {
        Some(WeightKind::Integral { kappa }) if kappa % 2 == 1 => invalid("integral weight must be even"),
        Some(k) => Ok(k),
        None => invalid(format!("weight must be integral:<kappa> or half:<ell>, got {s}")),
    }
}

fn window(path: &Option<std::path::PathBuf>) -> Result<WindowSpec, Failure> {
    Ok(match path {
        Some(p) => WindowSpec::from_csv(p)?,
        None => WindowSpec::default_bump(),
    })
}

fn modulus(q: u64) -> Result<PrimePowerModulus, Failure> {
    Ok(PrimePowerModulus::from_q(q)?)
}

/// Series named by `spec`, long enough for `len` terms when generated.
fn series_for(spec: &str, len: usize, cusp: Cusp) -> Result<CoefficientSeries, Failure> {
    let len = len.max(1);
    if let Some(path) = spec.strip_prefix("file:") {
        let s = coeffs::load_with_sidecar(Path::new(path))?;
        if s.cusp != cusp {
            return invalid(format!("{path} holds the {:?} expansion, expected {cusp:?}", s.cusp));
        }
        return Ok(s);
    }
    match (spec, cusp) {
        ("delta", Cusp::Infinity) => {
            if len > MAX_DELTA_LENGTH {
                return invalid(format!("{len} Delta coefficients exceed the budget of {MAX_DELTA_LENGTH}"));
            }
            Ok(coeffs::generate_delta(len)?)
        }
        ("delta", _) => invalid("Delta has a single expansion; use it as --coeffs"),
        ("theta-eta", Cusp::Infinity) => Ok(coeffs::theta_eta_form(len)?.0),
        ("theta-eta", _) => Ok(coeffs::theta_eta_form(len)?.1),
        _ => invalid(format!("series must be delta, theta-eta or file:<path>, got {spec}")),
    }
}

/// Direct and dual series for the given mode.
fn series_pair(
    args: &SeriesArgs,
    mode: ModeArg,
    direct_len: usize,
    dual_len: usize,
) -> Result<(CoefficientSeries, Option<CoefficientSeries>), Failure> {
    match mode {
        ModeArg::Integral => {
            if args.dual.is_some() {
                return invalid("--dual applies to half-integral mode only");
            }
            let s = series_for(&args.coeffs, direct_len.max(dual_len), Cusp::Infinity)?;
            if !matches!(s.kind, WeightKind::Integral { .. }) {
                return invalid("integral mode needs an integral-weight series");
            }
            Ok((s, None))
        }
        ModeArg::Half => {
            let dual_spec = match (&args.dual, args.coeffs.as_str()) {
                (Some(d), _) => d.clone(),
                (None, "theta-eta") => "theta-eta".to_string(),
                (None, _) => return invalid("half-integral mode needs --dual with the cusp-0 series"),
            };
            let s = series_for(&args.coeffs, direct_len, Cusp::Infinity)?;
            let d = series_for(&dual_spec, dual_len, Cusp::Zero)?;
            if !matches!(s.kind, WeightKind::HalfIntegral { .. }) || s.kind != d.kind {
                return invalid("half-integral mode needs two series of the same half-integral weight");
            }
            Ok((s, Some(d)))
        }
    }
}

pub fn dispatch(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Expsum(cmd) => expsum_cmd(cli, cmd),
        Command::Moments(cmd) => moments_cmd(cli, cmd),
        Command::Voronoi(cmd) => voronoi_cmd(cli, cmd),
        Command::Coeffs(cmd) => coeffs_cmd(cli, cmd),
        Command::Harness(cmd) => harness_cmd(cli, cmd),
        Command::QrPrimes(cmd) => qr_cmd(cli, cmd),
        Command::VerifyAll(args) => {
            let checks = run_battery(args.samples, cli.seed);
            let failed = checks.iter().filter(|c| !c.pass).count();
            emit_json(cli, json!({ "checks": checks, "all_pass": failed == 0 }))?;
            if failed > 0 {
                return Err(Failure::Numerical(format!("{failed} checks failed")));
            }
            Ok(())
        }
    }
}

fn expsum_cmd(cli: &Cli, cmd: &ExpsumCmd) -> Outcome {
    let ExpsumCmd::Eval { q, m, n, kind, method, nu } = cmd;
    let q = modulus(*q)?;
    let method_lib = match method {
        MethodArg::Closed => Method::ClosedForm,
        MethodArg::Direct => Method::Direct,
    };
    let value = match kind {
        SumKind::Kloosterman => expsum::kloosterman(*m, *n, &q, method_lib)?.value,
        SumKind::Salie => expsum::salie(*m, *n, &q, method_lib)?.value,
        SumKind::Sa => expsum::sa(*m, &q).into(),
        SumKind::Gauss => expsum::gauss_sum(*nu, *m, &q),
    };
    emit_json(cli, json!({ "value": value, "abs": value.norm() }))
}

fn moments_cmd(cli: &Cli, cmd: &MomentsCmd) -> Outcome {
    match cmd {
        MomentsCmd::Salie { q, nu, m, class } => {
            if nu.is_some_and(|k| k != m.len()) {
                return invalid(format!("--nu {} does not match {} shifts", nu.unwrap_or(0), m.len()));
            }
            let t = MomentTuple::new(modulus(*q)?, m.clone(), class.sign())?;
            let formula = saliemoments::salie_moment_formula(&t)?;
            let brute = saliemoments::salie_moment_bruteforce(&t)?;
            emit_json(cli, json!({ "formula": formula, "bruteforce": brute, "diff": (formula - brute).abs() }))
        }
        MomentsCmd::Zero { signs, values } => {
            if signs.iter().any(|&e| e != 1 && e != -1) {
                return invalid("signs must be +1 or -1");
            }
            let zero = saliemoments::sqrt_sum_is_zero(signs, values)?;
            emit_json(cli, json!({ "is_zero": zero }))
        }
        MomentsCmd::Qpoly { values } => {
            let v = saliemoments::q_poly(values)?;
            emit_json(cli, json!({ "q_poly": v.to_string() }))
        }
        MomentsCmd::DeltaBound { q, y, m } => {
            let r = saliemoments::check_delta_bound(&modulus(*q)?, *y, m)?;
            emit_json(cli, r)
        }
    }
}

fn voronoi_cmd(cli: &Cli, cmd: &VoronoiCmd) -> Outcome {
    match cmd {
        VoronoiCmd::Check { q, b, x, mode, series, tail_tol, window: wpath } => {
            let w = window(wpath)?;
            let pq = modulus(*q)?;
            let qf = *q as f64;
            let y = match mode {
                ModeArg::Integral => qf * qf / x,
                ModeArg::Half => 4.0 * qf * qf / x,
            };
            let direct_len = (w.support().1 * x).floor() as usize;
            // The dual sum is extended until B(m/Y) is negligible, near m/Y ~ 2e5.
            let dual_len = ((y * 2e5).ceil() as usize).clamp(1 << 16, MAX_DELTA_LENGTH);
            let (s, d) = series_pair(series, *mode, direct_len, dual_len)?;
            let t = WindowTransform::with_defaults(w, s.kind)?;
            let r = voronoi::voronoi_residual(&s, d.as_ref(), &pq, *b, *x, &t, *tail_tol)?;
            emit_json(cli, r)
        }
        VoronoiCmd::Plancherel { weight, window: wpath } => {
            let t = WindowTransform::with_defaults(window(wpath)?, parse_weight(weight)?)?;
            emit_json(cli, voronoi::plancherel_check(&t)?)
        }
        VoronoiCmd::Transform { weight, x, window: wpath } => {
            let t = WindowTransform::with_defaults(window(wpath)?, parse_weight(weight)?)?;
            let values = t.b_values(x)?;
            let rows: Vec<_> = x.iter().zip(&values).map(|(x, b)| json!({ "x": x, "b": b })).collect();
            emit_json(cli, rows)
        }
    }
}

fn coeffs_cmd(cli: &Cli, cmd: &CoeffsCmd) -> Outcome {
    match cmd {
        CoeffsCmd::GenDelta { x } => {
            let Some(path) = &cli.out else {
                return invalid("gen-delta writes its CSV to --out");
            };
            let s = coeffs::generate_delta(*x)?;
            coeffs::write_coefficients(&s, path)?;
            let summary = json!({
                "config": cli,
                "result": {
                    "file": path,
                    "sidecar": coeffs::sidecar_path(path),
                    "length": s.len(),
                    "head": &s.values()[..s.len().min(5)],
                }
            });
            let text = serde_json::to_string_pretty(&summary).map_err(|e| Failure::Io(e.to_string()))?;
            println!("{text}");
            Ok(())
        }
        CoeffsCmd::Check { file } => {
            let s = coeffs::load_with_sidecar(file)?;
            let grid: Vec<usize> = [100, 1000, 10_000, 100_000].into_iter().filter(|&g| g <= s.len()).collect();
            let rankin = if grid.is_empty() { None } else { Some(coeffs::rankin_estimate(&s, &grid)?) };
            emit_json(
                cli,
                json!({
                    "kind": s.kind,
                    "cusp": s.cusp,
                    "length": s.len(),
                    "growth_advisories": coeffs::growth_advisory(&s),
                    "rankin": rankin,
                }),
            )
        }
        CoeffsCmd::Tau { n } => {
            let top = n.iter().copied().max().unwrap_or(1);
            if n.contains(&0) {
                return invalid("tau is indexed from 1");
            }
            let tau = coeffs::tau_exact(top)?;
            let rows: BTreeMap<String, String> = n.iter().map(|&k| (k.to_string(), tau[k - 1].to_string())).collect();
            emit_json(cli, rows)
        }
    }
}

fn dual_params(args: &DualArgs, kind: WeightKind) -> Result<DualParams, Failure> {
    let q = PrimePowerModulus::new(args.p, args.n)?;
    let params = DualParams::from_y(args.y, q, kind, args.eta)?;
    Ok(match args.cutoff {
        Some(m) => params.with_cutoff(m)?,
        None => params,
    })
}

/// Kind of the series named by `spec` without generating it.
fn declared_kind(spec: &str, mode: ModeArg) -> Result<WeightKind, Failure> {
    if let Some(path) = spec.strip_prefix("file:") {
        return Ok(coeffs::read_metadata(Path::new(path))?.kind);
    }
    Ok(match (spec, mode) {
        ("theta-eta", _) => WeightKind::HalfIntegral { ell: 4 },
        (_, ModeArg::Integral) => WeightKind::Integral { kappa: 12 },
        (_, ModeArg::Half) => return invalid("half-integral mode needs theta-eta or file series"),
    })
}

fn class_key(nu: u32, e: i8) -> String {
    format!("nu{nu}{}", if e > 0 { "plus" } else { "minus" })
}

fn harness_cmd(cli: &Cli, cmd: &HarnessCmd) -> Outcome {
    match cmd {
        HarnessCmd::Moments { dual, nu, class, mode, series, delta, calibration, expected } => {
            let kind = declared_kind(&series.coeffs, *mode)?;
            let params = dual_params(dual, kind)?;
            let w = WindowSpec::default_bump();
            let direct_len = (w.support().1 * params.x).floor() as usize;
            let (s, d) = series_pair(series, *mode, direct_len, params.m_max)?;
            let t = WindowTransform::with_defaults(w, s.kind)?;
            let dual_series = d.as_ref().unwrap_or(&s);
            let e = class.sign();
            let calibration = match (calibration, expected) {
                (Some(c), _) => Some(*c),
                (None, Some(path)) => {
                    let text = std::fs::read_to_string(path)?;
                    let v: serde_json::Value = serde_json::from_str(&text)
                        .map_err(|err| Failure::Validation(format!("{}: {err}", path.display())))?;
                    let v = v.get("result").unwrap_or(&v);
                    v["moment_budget_ratio"][class_key(*nu, e)].as_f64()
                }
                (None, None) => None,
            };
            let direct = harness::compute_e(&s, &params, t.window())?;
            let options = ReportOptions { delta: *delta, calibration };
            let report = harness::moment_report(&direct, s.cusp, dual_series, &params, &t, *nu, e, options)?;
            emit_json(cli, report)
        }
        HarnessCmd::Distribution { dual, svg, bins, no_overlay } => {
            let kind = WeightKind::Integral { kappa: 12 };
            let params = dual_params(dual, kind)?;
            let s = series_for("delta", params.m_max, Cusp::Infinity)?;
            let t = WindowTransform::with_defaults(WindowSpec::default_bump(), kind)?;
            let m = harness::compute_dual_m(&s, &params, &t)?;
            let v_plus = harness::restricted_variance(&s, &params, &t, 1)?;
            let values = m.unit_values();
            let record = harness::distribution_test(&values, v_plus)?;
            let squares = harness::distribution_test(&m.class_values(1), v_plus)?;
            let least = qrprimes::least_nonresidue(dual.p);
            let overlay = (!*no_overlay).then_some(v_plus);
            let picture = emit_histogram(&values, *bins, overlay);
            if let Some(path) = svg {
                std::fs::write(path, &picture)?;
            }
            let result = json!({
                "params": params,
                "least_nonresidue": least,
                "all_dual_terms_are_residues": (params.m_max as u64) <= least,
                "v_plus": v_plus,
                "units": record,
                "square_classes": {
                    "moments": squares.empirical,
                    "gaussian": [0.0, 2.0 * v_plus, 0.0, 12.0 * v_plus * v_plus],
                },
            });
            match format(cli, Format::Json, &[Format::Json, Format::Svg])? {
                Format::Svg => write_out(cli, &picture),
                _ => write_json(cli, result),
            }
        }
        HarnessCmd::DualVsDirect { p_list, n, y, cutoff } => {
            let fmt = format(cli, Format::Csv, &[Format::Csv, Format::Json])?;
            let m_max = cutoff.unwrap_or((y * 1e5).ceil() as usize);
            let top = p_list.iter().copied().max().unwrap_or(3);
            let q_top = PrimePowerModulus::new(top, *n)?.q() as f64;
            let direct_len = (2.0 * q_top * q_top / y).floor() as usize;
            let s = series_for("delta", direct_len.max(m_max), Cusp::Infinity)?;
            let t = WindowTransform::with_defaults(WindowSpec::default_bump(), s.kind)?;
            let rows = harness::dual_vs_direct(&s, &t, p_list, *n, *y, m_max)?;
            let gaps: Vec<f64> = rows.iter().map(|r| r.max_gap).collect();
            let decreasing = harness::strictly_decreasing(&gaps);
            if fmt == Format::Json {
                return write_json(cli, json!({ "rows": rows, "strictly_decreasing": decreasing }));
            }
            let lines: Vec<String> = rows
                .iter()
                .map(|r| format!("{},{},{},{},{},{:e},{:e}", r.p, r.q, r.x, r.y, r.m_max, r.max_gap, r.mean_gap))
                .collect();
            emit_csv(cli, "p,q,X,Y,m_max,max_gap,mean_gap", &lines, &[format!("# strictly_decreasing: {decreasing}")])
        }
        HarnessCmd::Calibrate { p } => emit_json(cli, calibrate(*p)?),
    }
}

/// Reference constants from one run at the given prime, q = p^2, Y = 2.
fn calibrate(p: u64) -> Result<serde_json::Value, Failure> {
    let y = 2.0;
    let m_max = 200_000;
    let kind = WeightKind::Integral { kappa: 12 };
    let q = PrimePowerModulus::new(p, 2)?;
    let params = DualParams::from_y(y, q, kind, harness::DEFAULT_ETA)?.with_cutoff(m_max)?;
    let direct_len = (2.0 * params.x).floor() as usize;
    let s = series_for("delta", direct_len.max(m_max), Cusp::Infinity)?;
    let t = WindowTransform::with_defaults(WindowSpec::default_bump(), kind)?;
    let row = harness::dual_vs_direct(&s, &t, &[p], 2, y, m_max)?[0];
    let direct = harness::compute_e(&s, &params, t.window())?;
    let mut ratios = BTreeMap::new();
    for nu in 1..=4 {
        for e in [1i8, -1] {
            let r = harness::moment_report(&direct, s.cusp, &s, &params, &t, nu, e, ReportOptions::new())?;
            ratios.insert(class_key(nu, e), r.budget_ratio);
        }
    }
    Ok(json!({
        "reference_p": p,
        "exponent": 2,
        "y": y,
        "cutoff": m_max,
        "dual_direct_max_gap": row.max_gap,
        "moment_budget_ratio": ratios,
    }))
}

fn qr_cmd(cli: &Cli, cmd: &QrPrimesCmd) -> Outcome {
    match cmd {
        QrPrimesCmd::Search { x, z } => {
            let zspec: ZSpec = z.parse()?;
            let records = qrprimes::search(*x, zspec)?;
            match format(cli, Format::Csv, &[Format::Csv, Format::Json])? {
                Format::Json => write_json(cli, records),
                _ => {
                    let rows: Vec<String> = records.iter().map(|r| format!("{},{}", r.p, r.least_nonresidue)).collect();
                    emit_csv(cli, "p,least_nonresidue", &rows, &[])
                }
            }
        }
        QrPrimesCmd::Charsum { q, x } => emit_json(cli, qrprimes::character_prime_sums(*q, *x)?),
    }
}
