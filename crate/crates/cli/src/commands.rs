use std::fs;
use std::io::Write;
use std::path::Path;

use convord::samples_csv::write_simulation;
use convord::verify::{counterexample_report, TestReport};
use convord::{
    check_cx, check_icx, check_st, diatomic_decompose, run_simulation, samples_csv, validate_decomposition,
    Decomposition, Distribution, JumpModel, Rational, Scalar, SelectionRule, Simulation, SimulationConfig,
    SimulationMode,
};
use serde_json::{json, Value};

use crate::args::{
    CheckOrderArgs, Command, CounterexampleArgs, DecomposeArgs, Figure1Args, Mode, Order, SimulateArgs, VerifyArgs,
};
use crate::pipeline::{config_from_echo, parse_jump_spec, render_table, verify_simulation};
use crate::CliError;

/// Run one command. `Ok(false)` means the command worked but its check failed.
pub fn dispatch(command: Command) -> Result<bool, CliError> {
    match command {
        Command::CheckOrder(a) => cmd_check_order(&a),
        Command::Decompose(a) => cmd_decompose(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::Counterexample(a) => cmd_counterexample(&a),
        Command::Figure1(a) => cmd_figure1(&a),
    }
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn read_law(path: &Path) -> Result<Distribution, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn read_decomposition(path: &Path) -> Result<Decomposition, CliError> {
    let dec: Decomposition =
        serde_json::from_str(&read_text(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let total = dec.atoms.iter().fold(Rational::from_count(0), |acc, a| acc + a.weight.clone());
    if total != Rational::from_count(1) {
        return Err(CliError::Input(format!("{}: weights sum to {}", path.display(), total.to_text())));
    }
    Ok(dec)
}

/// Write to `path`, or to stdout when there is none.
fn emit(path: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| CliError::Input(format!("{}: {e}", p.display()))),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Input(format!("stdout: {e}"))),
    }
}

fn pretty(value: &Value) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("JSON values serialize");
    bytes.push(b'\n');
    bytes
}

fn to_value<S: serde::Serialize>(s: &S) -> Value {
    serde_json::to_value(s).expect("report types serialize")
}

pub fn cmd_check_order(args: &CheckOrderArgs) -> Result<bool, CliError> {
    let mu = read_law(&args.mu)?;
    let nu = read_law(&args.nu)?;
    let verdict = match args.order {
        Order::Cx => check_cx(&mu, &nu),
        Order::Icx => check_icx(&mu, &nu),
        Order::St => check_st(&mu, &nu),
    };
    let mut out = to_value(&verdict);
    out["config"] = json!({
        "command": "check-order",
        "order": args.order.name(),
        "mu": to_value(&mu),
        "nu": to_value(&nu),
    });
    emit(None, &pretty(&out))?;
    Ok(verdict.holds)
}

/// Decomposition JSON with the validation outcome and a config echo.
fn decomposition_document(dec: &Decomposition, mu: &Distribution, nu: &Distribution, config: Value) -> (Value, bool) {
    let report = validate_decomposition(dec, mu, nu);
    let mut doc = to_value(dec);
    doc["config"] = config;
    doc["validation"] = to_value(&report);
    (doc, report.all_pass())
}

/// Decompose and validate; a pair that is not ordered is a failed check.
fn decompose_validated(mu: &Distribution, nu: &Distribution, rule: SelectionRule) -> Result<Decomposition, CliError> {
    let dec = diatomic_decompose(mu, nu, rule)?;
    let report = validate_decomposition(&dec, mu, nu);
    if !report.all_pass() {
        return Err(CliError::Failed(format!("decomposition failed validation:\n{report}")));
    }
    Ok(dec)
}

pub fn cmd_decompose(args: &DecomposeArgs) -> Result<bool, CliError> {
    let mu = read_law(&args.mu)?;
    let nu = read_law(&args.nu)?;
    let rule = SelectionRule::from(args.rule);
    let dec = diatomic_decompose(&mu, &nu, rule)?;
    let config = json!({
        "command": "decompose",
        "rule": rule.name(),
        "mu": to_value(&mu),
        "nu": to_value(&nu),
    });
    let (doc, valid) = decomposition_document(&dec, &mu, &nu, config);
    eprint!("{}", validate_decomposition(&dec, &mu, &nu));
    if !valid {
        return Err(CliError::Failed("decomposition failed validation; nothing written".into()));
    }
    emit(args.out.as_deref(), &pretty(&doc))?;
    eprintln!("{} atoms, rule {}", dec.atoms.len(), rule.name());
    Ok(true)
}

fn simulation_config(args: &SimulateArgs) -> Result<SimulationConfig, CliError> {
    let decomposition = match (&args.decomposition, &args.mu, &args.nu) {
        (Some(path), _, _) => read_decomposition(path)?,
        (None, Some(mu), Some(nu)) => decompose_validated(&read_law(mu)?, &read_law(nu)?, args.rule.into())?,
        _ => return Err(CliError::Input("give --decomposition or both --mu and --nu".into())),
    };
    let mode = match args.mode {
        Mode::Compound => {
            let spec = args
                .jumps
                .as_deref()
                .ok_or_else(|| CliError::Input("compound mode needs --jumps".into()))?;
            SimulationMode::Compound(parse_jump_spec(spec)?)
        }
        Mode::Poisson => SimulationMode::Poisson {
            rate: args
                .rate
                .ok_or_else(|| CliError::Input("poisson mode needs --rate".into()))?,
        },
    };
    Ok(SimulationConfig {
        mode,
        decomposition,
        n: args.n as usize,
        seed: args.seed,
    })
}

fn simulation_csv(sim: &Simulation) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    write_simulation(sim, &mut buf)?;
    Ok(buf)
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<bool, CliError> {
    let config = simulation_config(args)?;
    let sim = run_simulation(&config)?;
    emit(args.out.as_deref(), &simulation_csv(&sim)?)?;
    Ok(true)
}

fn echo_object(echo: &[(String, String)]) -> Value {
    let mut map = serde_json::Map::new();
    for (k, v) in echo {
        let value = if k == "decomposition" {
            serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.clone()))
        } else {
            Value::String(v.clone())
        };
        map.insert(k.clone(), value);
    }
    Value::Object(map)
}

fn report_document(config: Value, tests: &[TestReport]) -> Value {
    json!({
        "config": config,
        "pass": tests.iter().all(|t| t.pass),
        "tests": to_value(&tests),
    })
}

pub fn cmd_verify(args: &VerifyArgs) -> Result<bool, CliError> {
    let text = read_text(&args.samples)?;
    let sim = samples_csv::read_simulation(text.as_bytes())
        .map_err(|e| CliError::Input(format!("{}: {e}", args.samples.display())))?;
    let echo = match &sim {
        Simulation::Exact(s) => s.echo.clone(),
        Simulation::Float(s) => s.echo.clone(),
    };
    let config = config_from_echo(&echo)?;
    let tests = verify_simulation(&config, &sim, args.reference_n as usize)?;
    print!("{}", render_table(&tests));
    if let Some(path) = &args.json {
        let mut config = echo_object(&echo);
        config["command"] = json!("verify");
        config["reference_n"] = json!(args.reference_n.to_string());
        emit(Some(path), &pretty(&report_document(config, &tests)))?;
    }
    Ok(tests.iter().all(|t| t.pass))
}

pub fn cmd_counterexample(args: &CounterexampleArgs) -> Result<bool, CliError> {
    let mut doc = to_value(&counterexample_report());
    doc["config"] = json!({ "command": "counterexample" });
    emit(args.out.as_deref(), &pretty(&doc))?;
    Ok(true)
}

/// Counts `2..=5` uniformly against `1, 3` with mass 1/4 each and `4, 5, 6`
/// with mass 1/6 each; both have mean 7/2.
pub fn figure1_pair() -> (Distribution, Distribution) {
    let q = |p: i64, d: i64| Rational::new(p.into(), d.into());
    let mu = Distribution::new((2..=5).map(|k| (q(k, 1), q(1, 4)))).expect("valid law");
    let nu = Distribution::new(
        [(1, q(1, 4)), (3, q(1, 4)), (4, q(1, 6)), (5, q(1, 6)), (6, q(1, 6))]
            .into_iter()
            .map(|(k, w)| (q(k, 1), w)),
    )
    .expect("valid law");
    (mu, nu)
}

/// Half-width allowed between each sample mean and 7/2.
pub const FIGURE1_MEAN_TOLERANCE: f64 = 0.15;

fn mean_near(name: &str, values: &[f64], target: f64) -> TestReport {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let gap = (mean - target).abs();
    TestReport {
        name: name.into(),
        statistic: gap,
        reference: format!("|sample mean - {target}|"),
        threshold: FIGURE1_MEAN_TOLERANCE,
        pass: gap < FIGURE1_MEAN_TOLERANCE,
        n_samples: values.len(),
        notes: format!("mean={mean:.6}"),
    }
}

fn scatter_tsv(sim: &Simulation, echo: &[(String, String)]) -> Vec<u8> {
    let mut out = String::new();
    for (k, v) in echo {
        out.push_str(&format!("# {k}={v}\n"));
    }
    out.push_str("a\tb\n");
    for (a, b) in sim.a_values().iter().zip(sim.b_values()) {
        out.push_str(&format!("{a}\t{b}\n"));
    }
    out.into_bytes()
}

pub fn cmd_figure1(args: &Figure1Args) -> Result<bool, CliError> {
    let (mu, nu) = figure1_pair();
    let rule = SelectionRule::LeftCurtain;
    let dec = diatomic_decompose(&mu, &nu, rule)?;
    let run_config = json!({
        "command": "figure1",
        "seed": args.seed.to_string(),
        "n": args.n.to_string(),
        "reference_n": args.reference_n.to_string(),
        "jumps": "exp:1",
        "rule": rule.name(),
    });
    let (doc, valid) = decomposition_document(&dec, &mu, &nu, run_config.clone());

    let config = SimulationConfig {
        mode: SimulationMode::Compound(JumpModel::Exponential(1.0)),
        decomposition: dec,
        n: args.n as usize,
        seed: args.seed,
    };
    let sim = run_simulation(&config)?;
    let mut tests = vec![TestReport {
        name: "decomposition".into(),
        statistic: if valid { 0.0 } else { 1.0 },
        reference: "exact validation of weights, sandwich and both marginals".into(),
        threshold: 0.0,
        pass: valid,
        n_samples: config.decomposition.atoms.len(),
        notes: format!("{} atoms", config.decomposition.atoms.len()),
    }];
    tests.extend(verify_simulation(&config, &sim, args.reference_n as usize)?);
    tests.push(mean_near("mean-a", &sim.a_values(), 3.5));
    tests.push(mean_near("mean-b", &sim.b_values(), 3.5));

    let dir = &args.out_dir;
    fs::create_dir_all(dir).map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    emit(Some(&dir.join("decomposition.json")), &pretty(&doc))?;
    emit(Some(&dir.join("samples.csv")), &simulation_csv(&sim)?)?;
    emit(Some(&dir.join("report.json")), &pretty(&report_document(run_config, &tests)))?;
    emit(Some(&dir.join("scatter.tsv")), &scatter_tsv(&sim, &config.echo()))?;
    print!("{}", render_table(&tests));
    Ok(tests.iter().all(|t| t.pass))
}
