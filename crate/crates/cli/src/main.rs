//! `pwsim` command-line front end.

mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use pwsim::analysis::{
    closed_form_probability, contamination_estimate, design_w_class, designed_circuit, evaluate,
    optimize_probability, scan_fidelity, verify_design, AxisRange, Bounds, FidelityScan, TriggerPolicy, WTarget,
    YieldModel,
};
use pwsim::numfmt::sig17;
use pwsim::postselection::DetectorModel;
use pwsim::schemes::{build_scheme, Circuit, CircuitDef, Compensation, Scheme, SchemeParams, SIGNAL_MODES};

use config::{overlay, read_json, CliError, CliResult, Range, Triple};

#[derive(Parser)]
#[command(name = "pwsim", version, about = "Simulate post-selected linear-optical W-state sources")]
struct Cli {
    /// JSON file whose fields override the subcommand's flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for grid scans.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Post-selection probability, trigger branches and W fidelity.
    Simulate(SimulateArgs),
    /// Maximize the post-selection probability over reflectivities.
    Optimize(OptimizeArgs),
    /// Fidelity over a grid of splitter errors, with a polynomial fit.
    ScanFidelity(ScanArgs),
    /// Losses and phases for a non-uniform W-class target.
    Design(DesignArgs),
    /// Rate comparison with GHZ and single-photon-source set-ups.
    Yield(YieldArgs),
    /// Three-pair false accepts with lossy detectors.
    Contamination(ContaminationArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SchemeChoice {
    Builtin(Scheme),
    Custom,
}

impl std::str::FromStr for SchemeChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("custom") {
            return Ok(SchemeChoice::Custom);
        }
        s.parse::<Scheme>().map(SchemeChoice::Builtin).map_err(|e| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum CompensationArg {
    Auto,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum DetectorKind {
    /// Click/no-click detectors.
    Threshold,
    /// Photon-number-resolving detectors.
    Pnr,
}

fn scheme_from_str<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<SchemeChoice>, D::Error> {
    Option::<String>::deserialize(d)?.map(|s| s.parse().map_err(serde::de::Error::custom)).transpose()
}

fn trigger_from_str<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<TriggerPolicy>, D::Error> {
    Option::<String>::deserialize(d)?.map(|s| s.parse().map_err(serde::de::Error::custom)).transpose()
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SimulateArgs {
    /// I, II, sps or custom.
    #[arg(long)]
    #[serde(deserialize_with = "scheme_from_str")]
    scheme: Option<SchemeChoice>,
    /// r1^2 (defaults to the scheme's optimum).
    #[arg(long)]
    r1sq: Option<f64>,
    #[arg(long)]
    r2sq: Option<f64>,
    #[arg(long)]
    r3sq: Option<f64>,
    /// Reflected-V phases `phi1,phi2,phi3`.
    #[arg(long)]
    phi: Option<Triple>,
    /// Transmitted-V phases `psi1,psi2,psi3`.
    #[arg(long)]
    psi: Option<Triple>,
    #[arg(long, value_enum)]
    compensation: Option<CompensationArg>,
    /// Reflectivity differences `d_k = delta_kH - delta_kV`, split +-d_k/2.
    #[arg(long)]
    delta: Option<Triple>,
    /// Explicit H errors `delta_1H,delta_2H,delta_3H` (with --delta-v).
    #[arg(long)]
    delta_h: Option<Triple>,
    #[arg(long)]
    delta_v: Option<Triple>,
    /// d1v, d1h or both.
    #[arg(long)]
    #[serde(deserialize_with = "trigger_from_str")]
    trigger: Option<TriggerPolicy>,
    /// Circuit description for `--scheme custom`.
    #[arg(long)]
    circuit: Option<PathBuf>,
    /// Write the conditional state here.
    #[arg(long)]
    dump_state: Option<PathBuf>,
    #[arg(long, value_enum)]
    output: Option<OutputFormat>,
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct OptimizeArgs {
    #[arg(long)]
    #[serde(deserialize_with = "scheme_from_str")]
    scheme: Option<SchemeChoice>,
    /// Lower bounds on `r1^2,r2^2,r3^2`.
    #[arg(long)]
    lo: Option<Triple>,
    /// Upper bounds on `r1^2,r2^2,r3^2`.
    #[arg(long)]
    hi: Option<Triple>,
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ScanArgs {
    #[arg(long)]
    #[serde(deserialize_with = "scheme_from_str")]
    scheme: Option<SchemeChoice>,
    #[arg(long)]
    #[serde(deserialize_with = "trigger_from_str")]
    trigger: Option<TriggerPolicy>,
    /// `min,max,step` or a fixed value for d1.
    #[arg(long, allow_hyphen_values = true)]
    d1: Option<Range>,
    #[arg(long, allow_hyphen_values = true)]
    d2: Option<Range>,
    #[arg(long, allow_hyphen_values = true)]
    d3: Option<Range>,
    #[arg(long, value_enum)]
    output: Option<OutputFormat>,
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct DesignArgs {
    /// Real parts of `c1,c2,c3` (terms with V in 3', 3, 2).
    #[arg(long, allow_hyphen_values = true)]
    target: Option<Triple>,
    /// Imaginary parts of `c1,c2,c3`.
    #[arg(long, allow_hyphen_values = true)]
    target_im: Option<Triple>,
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct YieldArgs {
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    sps_rate: Option<f64>,
    #[arg(long)]
    stimulated_gain: Option<f64>,
    #[arg(long)]
    ghz_reference: Option<f64>,
}

#[derive(Args, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct ContaminationArgs {
    #[arg(long)]
    #[serde(deserialize_with = "scheme_from_str")]
    scheme: Option<SchemeChoice>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Detector efficiency.
    #[arg(long)]
    efficiency: Option<f64>,
    #[arg(long, value_enum)]
    detector: Option<DetectorKind>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            let mut stdout = std::io::stdout().lock();
            if stdout.write_all(out.as_bytes()).and_then(|_| stdout.flush()).is_err() {
                return ExitCode::from(3);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> CliResult<String> {
    if let Some(n) = cli.jobs {
        if n == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Internal(format!("thread pool: {e}")))?;
    }
    let config = cli.config.as_deref();
    match cli.command {
        Command::Simulate(mut a) => {
            if let Some(p) = config {
                let c: SimulateArgs = read_json(p, "config")?;
                overlay!(a, c, [
                    scheme, r1sq, r2sq, r3sq, phi, psi, compensation, delta, delta_h, delta_v, trigger, circuit,
                    dump_state, output
                ]);
            }
            simulate(a)
        }
        Command::Optimize(mut a) => {
            if let Some(p) = config {
                let c: OptimizeArgs = read_json(p, "config")?;
                overlay!(a, c, [scheme, lo, hi]);
            }
            optimize(a)
        }
        Command::ScanFidelity(mut a) => {
            if let Some(p) = config {
                let c: ScanArgs = read_json(p, "config")?;
                overlay!(a, c, [scheme, trigger, d1, d2, d3, output]);
            }
            scan(a)
        }
        Command::Design(mut a) => {
            if let Some(p) = config {
                let c: DesignArgs = read_json(p, "config")?;
                overlay!(a, c, [target, target_im]);
            }
            design(a)
        }
        Command::Yield(mut a) => {
            if let Some(p) = config {
                let c: YieldArgs = read_json(p, "config")?;
                overlay!(a, c, [gamma, sps_rate, stimulated_gain, ghz_reference]);
            }
            yields(a)
        }
        Command::Contamination(mut a) => {
            if let Some(p) = config {
                let c: ContaminationArgs = read_json(p, "config")?;
                overlay!(a, c, [scheme, gamma, efficiency, detector]);
            }
            contamination(a)
        }
    }
}

fn builtin(choice: Option<SchemeChoice>) -> CliResult<Scheme> {
    match choice.unwrap_or(SchemeChoice::Builtin(Scheme::I)) {
        SchemeChoice::Builtin(s) => Ok(s),
        SchemeChoice::Custom => Err(CliError::Usage("this command needs a built-in scheme (I, II or sps)".into())),
    }
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn opt_num(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".to_string(), sig17)
}

fn scheme_params(scheme: Scheme, a: &SimulateArgs) -> CliResult<SchemeParams> {
    let mut params = SchemeParams::design_optimum(scheme);
    for (k, v) in [a.r1sq, a.r2sq, a.r3sq].into_iter().enumerate() {
        if let Some(x) = v {
            params.r2[k] = [x, x];
        }
    }
    let (dh, dv) = match (a.delta_h, a.delta_v, a.delta) {
        (Some(h), Some(v), _) => (h.0, v.0),
        (Some(_), None, _) | (None, Some(_), _) => {
            return Err(CliError::Usage("--delta-h and --delta-v must be given together".into()))
        }
        (None, None, Some(d)) => (d.0.map(|x| 0.5 * x), d.0.map(|x| -0.5 * x)),
        (None, None, None) => ([0.0; 3], [0.0; 3]),
    };
    for k in 0..3 {
        let base = params.r2[k][0];
        params.r2[k] = [base + dh[k], base + dv[k]];
    }
    params.phi = a.phi.map_or([0.0; 3], |t| t.0);
    params.psi = a.psi.map_or([0.0; 3], |t| t.0);
    params.compensation = match a.compensation {
        Some(CompensationArg::None) => Compensation::None,
        _ => Compensation::Auto,
    };
    params.validate(scheme)?;
    Ok(params)
}

fn simulate(a: SimulateArgs) -> CliResult<String> {
    let choice = match (a.scheme, &a.circuit) {
        (None, Some(_)) => SchemeChoice::Custom,
        (s, _) => s.unwrap_or(SchemeChoice::Builtin(Scheme::I)),
    };
    let policy = a.trigger.unwrap_or_default();
    let (circuit, scheme, params) = match choice {
        SchemeChoice::Custom => {
            let path = a.circuit.as_ref().ok_or_else(|| CliError::Usage("--scheme custom needs --circuit".into()))?;
            let def: CircuitDef = read_json(path, "circuit")?;
            (Circuit::from_def(def)?, None, None)
        }
        SchemeChoice::Builtin(s) => {
            let params = scheme_params(s, &a)?;
            (build_scheme(s, &params)?, Some(s), Some(params))
        }
    };
    let scorable = SIGNAL_MODES.iter().all(|m| circuit.registry().contains_spatial(&(*m).into()));
    let (probability, fid, branches, conditional) = if scorable {
        let e = evaluate(&circuit, policy, &WTarget::equal())?;
        (e.probability, e.fidelity, e.branches, e.conditional)
    } else {
        let r = circuit.postselect()?;
        (r.probability, None, Vec::new(), r.conditional)
    };
    let closed_form = match (scheme, &params) {
        (Some(s), Some(p)) if p.is_polarization_independent() => Some(closed_form_probability(s, p)?),
        _ => None,
    };
    let mut dump_registry = Value::Null;
    if let Some(path) = &a.dump_state {
        let text = conditional.as_ref().map(|s| s.dump()).unwrap_or_default();
        write_file(path, &text)?;
        if let Some(s) = &conditional {
            dump_registry = json!(s.registry().labels().iter().map(ToString::to_string).collect::<Vec<_>>());
        }
    }
    if a.output == Some(OutputFormat::Csv) {
        let p = |i: usize| branches.get(i).map(|b| b.probability);
        return Ok(format!(
            "probability,fidelity,probability_d1v,probability_d1h\n{},{},{},{}\n",
            sig17(probability),
            opt_num(fid),
            opt_num(p(0)),
            opt_num(p(1))
        ));
    }
    let report = json!({
        "command": "simulate",
        "scheme": scheme.map_or_else(|| "custom".to_string(), |s| s.to_string()),
        "params": params,
        "trigger": if circuit.trigger().is_some() { json!(policy) } else { Value::Null },
        "probability": probability,
        "closed_form_probability": closed_form,
        "fidelity": fid,
        "branches": branches,
        "state_registry": dump_registry,
    });
    to_json(&report)
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    std::fs::write(path, text).map_err(|e| CliError::Usage(format!("cannot write `{}`: {e}", path.display())))
}

fn optimize(a: OptimizeArgs) -> CliResult<String> {
    let scheme = builtin(a.scheme)?;
    let d = Bounds::default();
    let bounds = Bounds { lo: a.lo.map_or(d.lo, |t| t.0), hi: a.hi.map_or(d.hi, |t| t.0) };
    let r = optimize_probability(scheme, &bounds)?;
    to_json(&json!({ "command": "optimize", "result": r }))
}

fn scan(a: ScanArgs) -> CliResult<String> {
    let scheme = builtin(a.scheme)?;
    let policy = a.trigger.unwrap_or_default();
    let fixed = Range(AxisRange::fixed(0.0));
    let ranges = [a.d1.unwrap_or(fixed).0, a.d2.unwrap_or(fixed).0, a.d3.unwrap_or(fixed).0];
    let s = scan_fidelity(scheme, policy, ranges)?;
    match a.output.unwrap_or(OutputFormat::Csv) {
        OutputFormat::Csv => Ok(scan_csv(&s)),
        OutputFormat::Json => to_json(&json!({ "command": "scan-fidelity", "scan": s })),
    }
}

fn scan_csv(s: &FidelityScan) -> String {
    let mut out = String::from("delta1,delta2,delta3,fidelity\n");
    for r in &s.rows {
        let f = if r.fidelity.is_finite() { Some(r.fidelity) } else { None };
        out.push_str(&format!("{},{},{},{}\n", sig17(r.delta[0]), sig17(r.delta[1]), sig17(r.delta[2]), opt_num(f)));
    }
    out.push_str(&format!("# scheme {} trigger {}\n", s.scheme, serde_json::to_value(s.policy).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()));
    match &s.fit {
        None => out.push_str("# fit unavailable (too few finite points)\n"),
        Some(fit) => {
            out.push_str(&format!("# fit points {} rms_residual {}\n", fit.points, sig17(fit.rms_residual)));
            out.push_str(&format!("# fit constant {}\n", sig17(fit.constant)));
            out.push_str("# term,fitted,printed\n");
            for t in &fit.quadratic {
                out.push_str(&format!("# {},{},{}\n", t.term, sig17(t.fitted), opt_num(t.printed)));
            }
        }
    }
    out
}

fn design(a: DesignArgs) -> CliResult<String> {
    let re = a.target.ok_or_else(|| CliError::Usage("--target is required".into()))?.0;
    let im = a.target_im.map_or([0.0; 3], |t| t.0);
    let target = WTarget::new([0, 1, 2].map(|k| Complex64::new(re[k], im[k])))?;
    let settings = design_w_class(&target);
    let report = verify_design(&settings)?;
    let circuit = designed_circuit(&settings)?;
    to_json(&json!({ "command": "design", "design": report, "circuit": circuit.def() }))
}

fn yield_model(gamma: Option<f64>, a: Option<&YieldArgs>) -> YieldModel {
    let d = YieldModel::default();
    YieldModel {
        gamma: gamma.unwrap_or(d.gamma),
        sps_rate: a.and_then(|a| a.sps_rate).unwrap_or(d.sps_rate),
        stimulated_gain: a.and_then(|a| a.stimulated_gain).unwrap_or(d.stimulated_gain),
        ghz_reference: a.and_then(|a| a.ghz_reference).unwrap_or(d.ghz_reference),
    }
}

fn yields(a: YieldArgs) -> CliResult<String> {
    let model = yield_model(a.gamma, Some(&a));
    let r = pwsim::analysis::yield_report(&model)?;
    to_json(&json!({ "command": "yield", "report": r }))
}

fn contamination(a: ContaminationArgs) -> CliResult<String> {
    let scheme = builtin(a.scheme)?;
    let model = yield_model(a.gamma, None);
    let detectors = DetectorModel {
        efficiency: a.efficiency.unwrap_or(1.0),
        photon_number_resolving: a.detector == Some(DetectorKind::Pnr),
    };
    let r = contamination_estimate(scheme, &model, &detectors)?;
    to_json(&json!({ "command": "contamination", "report": r }))
}
