use std::path::{Path, PathBuf};
use std::process::ExitCode;

use iaps_core::experiments::output::emit_csv;
use iaps_core::experiments::plot::{emit_plot, layout_svg, render_svg};
use iaps_core::experiments::{run_experiment, run_figure, run_infeasible_fraction, ExperimentSpec, TrialDraw, FIGURES};
use iaps_core::optimize::{solve_p2, SensingStream};
use iaps_core::scenario::{write_channels_csv, write_layout_csv, ScenarioConfig};
use iaps_core::Error;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::Common;

/// Runs with more than this share of infeasible trials exit with status 2.
const INFEASIBLE_LIMIT: f64 = 0.5;

#[derive(Debug)]
pub struct CliError {
    kind: &'static str,
    message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { kind: "config", message: message.into() }
    }

    pub fn report(&self) -> ExitCode {
        eprintln!("error[{}]: {}", self.kind, self.message);
        ExitCode::from(1)
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let kind = match &e {
            Error::Config(_) | Error::Json(_) => "config",
            Error::Domain(_) => "domain",
            Error::Dimension(_) => "dimension",
            Error::Numeric(_) => "numeric",
            Error::Degenerate(_) => "geometry",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        };
        Self { kind, message: e.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self { kind: "io", message: e.to_string() }
    }
}

pub type CliResult<T> = Result<T, CliError>;

pub fn init_threads(threads: Option<usize>) -> CliResult<()> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(CliError::config("--threads must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::config(format!("thread pool: {e}")))
}

fn read_json(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError { kind: "io", message: format!("{}: {e}", path.display()) })?;
    serde_json::from_str(&text).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn apply_overrides(target: &mut Value, overrides: &[String]) -> CliResult<()> {
    let obj = target
        .as_object_mut()
        .ok_or_else(|| CliError::config("configuration must be a JSON object"))?;
    for item in overrides {
        let (key, raw) = item
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("override {item:?} is not KEY=VALUE")))?;
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        obj.insert(key.trim().to_string(), value);
    }
    Ok(())
}

fn parse_config(value: Value) -> CliResult<ScenarioConfig> {
    let config: ScenarioConfig =
        serde_json::from_value(value).map_err(|e| CliError::config(format!("scenario config: {e}")))?;
    config.validate()?;
    Ok(config)
}

/// Scenario config from the defaults, the optional file and the `--set` overrides, in that order.
pub fn load_config(common: &Common) -> CliResult<ScenarioConfig> {
    let mut value = match &common.config {
        Some(path) => read_json(path)?,
        None => serde_json::to_value(ScenarioConfig::default()).expect("config serializes"),
    };
    apply_overrides(&mut value, &common.overrides)?;
    parse_config(value)
}

pub fn output_dir(common: &Common) -> CliResult<PathBuf> {
    let dir = common
        .out
        .clone()
        .or_else(|| std::env::var_os("IAPS_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError { kind: "io", message: format!("{}: {e}", dir.display()) })?;
    Ok(dir)
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn write_manifest(dir: &Path, command: &str, body: Value) -> CliResult<()> {
    let mut manifest = json!({
        "command": command,
        "versions": {
            "iaps-cli": env!("CARGO_PKG_VERSION"),
            "iaps-core": iaps_core::VERSION,
        },
    });
    let target = manifest.as_object_mut().unwrap();
    if let Value::Object(fields) = body {
        target.extend(fields);
    }
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(dir.join("manifest.json"), text + "\n")?;
    Ok(())
}

fn config_fields(config: &ScenarioConfig) -> Value {
    let canonical = serde_json::to_vec(config).expect("config serializes");
    json!({ "config": config, "config_sha256": sha256_hex(&canonical) })
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Value::Object(a), Value::Object(b)) = (&mut a, b) {
        a.extend(b);
    }
    a
}

pub fn gen_scenario(common: &Common) -> CliResult<u8> {
    let mut config = load_config(common)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    let dir = output_dir(common)?;
    let draw = TrialDraw::new(&config, config.seed, 0)?;
    write_layout_csv(&draw.layout, &dir.join("layout.csv"))?;
    std::fs::write(dir.join("layout.svg"), layout_svg(&draw.layout, config.region_m))?;
    write_channels_csv(&draw.channels, &dir.join("channels.csv"))?;
    let alloc = solve_p2(&draw.rows, &draw.gains, config.p_max_mw(), SensingStream::Included)?;
    let allocation = json!({
        "status": format!("{:?}", alloc.status),
        "p_mw": alloc.p,
        "objective": alloc.objective,
        "gap": alloc.gap,
    });
    std::fs::write(
        dir.join("allocation.json"),
        serde_json::to_string_pretty(&allocation).expect("allocation serializes") + "\n",
    )?;
    let body = merge(
        json!({
            "seed": config.seed,
            "trial": 0,
            "outputs": ["layout.csv", "layout.svg", "channels.csv", "allocation.json"],
        }),
        config_fields(&config),
    );
    write_manifest(&dir, "gen-scenario", body)?;
    println!("scenario written to {}", dir.display());
    Ok(0)
}

/// An experiment spec is recognized by its `sweep` field.
fn load_spec(common: &Common) -> CliResult<Option<ExperimentSpec>> {
    let Some(path) = &common.config else { return Ok(None) };
    let mut value = read_json(path)?;
    if value.get("sweep").is_none() {
        return Ok(None);
    }
    let config = value.get_mut("config").map(Value::take);
    let mut config = config.unwrap_or_else(|| serde_json::to_value(ScenarioConfig::default()).unwrap());
    apply_overrides(&mut config, &common.overrides)?;
    value["config"] = serde_json::to_value(parse_config(config)?).unwrap();
    let mut spec: ExperimentSpec =
        serde_json::from_value(value).map_err(|e| CliError::config(format!("experiment spec: {e}")))?;
    if let Some(t) = common.trials {
        spec.trials = t;
    }
    if let Some(s) = common.seed {
        spec.seed = s;
    }
    spec.validate()?;
    Ok(Some(spec))
}

pub fn run(common: &Common) -> CliResult<u8> {
    let dir = output_dir(common)?;
    if let Some(spec) = load_spec(common)? {
        if common.figure.is_some() {
            return Err(CliError::config("--figure cannot be combined with an experiment spec"));
        }
        let points = run_experiment(&spec)?;
        let name = &spec.figure;
        let outputs = write_tables(&dir, name, &points)?;
        let fraction = run_infeasible_fraction(name, &points);
        let spec_json = serde_json::to_vec(&spec).expect("spec serializes");
        let body = merge(
            json!({
                "spec": spec,
                "spec_sha256": sha256_hex(&spec_json),
                "seed": spec.seed,
                "trials": spec.trials,
                "threads": rayon::current_num_threads(),
                "infeasible_fraction": fraction,
                "outputs": outputs,
            }),
            config_fields(&spec.config),
        );
        write_manifest(&dir, "run", body)?;
        return Ok(finish(name, fraction, &dir));
    }

    let figure = common
        .figure
        .clone()
        .ok_or_else(|| CliError::config(format!("run needs --figure (one of {}) or an experiment spec in --config", FIGURES.join(", "))))?;
    let config = load_config(common)?;
    let trials = common.trials.unwrap_or(config.trials);
    let seed = common.seed.unwrap_or(config.seed);
    if trials == 0 {
        return Err(CliError::config("--trials must be at least 1"));
    }
    let mut body = json!({
        "figure": figure,
        "seed": seed,
        "trials": trials,
        "threads": rayon::current_num_threads(),
        "rerun": rerun_line(&figure, trials, seed, &config),
    });
    let fraction = if figure == "fig5" {
        let draw = TrialDraw::new(&config, seed, 0)?;
        write_layout_csv(&draw.layout, &dir.join("fig5.csv"))?;
        std::fs::write(dir.join("fig5.svg"), layout_svg(&draw.layout, config.region_m))?;
        body["outputs"] = json!(["fig5.csv", "fig5.svg"]);
        0.0
    } else {
        let points = run_figure(&figure, &config, trials, seed)?;
        body["outputs"] = json!(write_tables(&dir, &figure, &points)?);
        run_infeasible_fraction(&figure, &points)
    };
    body["infeasible_fraction"] = json!(fraction);
    write_manifest(&dir, "run", merge(body, config_fields(&config)))?;
    Ok(finish(&figure, fraction, &dir))
}

fn rerun_line(figure: &str, trials: usize, seed: u64, config: &ScenarioConfig) -> String {
    let defaults = serde_json::to_value(ScenarioConfig::default()).unwrap();
    let current = serde_json::to_value(config).unwrap();
    let mut line = format!("iaps run --figure {figure} --trials {trials} --seed {seed}");
    if let (Value::Object(d), Value::Object(c)) = (defaults, current) {
        for (k, v) in c {
            if d.get(&k) != Some(&v) && k != "trials" && k != "seed" {
                line.push_str(&format!(" --set {k}={v}"));
            }
        }
    }
    line
}

fn write_tables(dir: &Path, name: &str, points: &[iaps_core::experiments::CurvePoint]) -> CliResult<Vec<String>> {
    let csv = format!("{name}.csv");
    let svg = format!("{name}.svg");
    emit_csv(points, &dir.join(&csv))?;
    std::fs::write(dir.join(&svg), render_svg(points))?;
    Ok(vec![csv, svg])
}

fn finish(name: &str, fraction: f64, dir: &Path) -> u8 {
    println!("{name}: artifacts in {} (infeasible fraction {fraction:.3})", dir.display());
    if fraction > INFEASIBLE_LIMIT {
        eprintln!("error[infeasible]: {:.1}% of trials infeasible", 100.0 * fraction);
        return 2;
    }
    0
}

pub fn plot(csv: &Path, common: &Common) -> CliResult<u8> {
    let out = match &common.out {
        Some(p) if p.extension().is_some_and(|e| e == "svg") => p.clone(),
        _ => {
            let stem = csv.file_stem().map_or("plot".into(), |s| s.to_string_lossy().into_owned());
            output_dir(common)?.join(format!("{stem}.svg"))
        }
    };
    emit_plot(csv, &out)?;
    println!("{}", out.display());
    Ok(0)
}

pub fn oracle(common: &Common) -> CliResult<u8> {
    use iaps_oracle::tables;
    let dir = output_dir(common)?;
    let chi = tables::chi2_grid(50);
    let mut text = String::from("xi,rho,sf\n");
    for (xi, rho, sf) in &chi {
        text.push_str(&format!("{xi},{rho},{sf}\n"));
    }
    std::fs::write(dir.join("oracle_chi2.csv"), text)?;
    let votes = tables::voting_table();
    let mut text = String::from("voters,kappa,pd,pfa,error\n");
    for (n, k, pd, pfa, e) in &votes {
        text.push_str(&format!("{n},{k},{pd},{pfa},{e}\n"));
    }
    std::fs::write(dir.join("oracle_voting.csv"), text)?;
    let lp = lp_table();
    let mut text = String::from("toy,vertex_value,grid_value\n");
    for (i, (v, g)) in lp.iter().enumerate() {
        text.push_str(&format!("{i},{v},{g}\n"));
    }
    std::fs::write(dir.join("oracle_lp.csv"), text)?;
    let checksums = json!({
        "chi2": format!("{:016x}", tables::checksum(chi.iter().map(|r| r.2))),
        "voting": format!("{:016x}", tables::checksum(votes.iter().map(|r| r.4))),
        "lp": format!("{:016x}", tables::checksum(lp.iter().flat_map(|&(v, g)| [v, g]))),
    });
    std::fs::write(dir.join("oracle_summary.txt"), tables::render())?;
    write_manifest(
        &dir,
        "oracle",
        json!({
            "checksums": checksums,
            "outputs": ["oracle_chi2.csv", "oracle_voting.csv", "oracle_lp.csv", "oracle_summary.txt"],
        }),
    )?;
    println!("oracle tables written to {}", dir.display());
    Ok(0)
}

/// Two-variable power-allocation toys solved by vertex enumeration and by grid search.
fn lp_table() -> Vec<(f64, f64)> {
    use iaps_oracle::lp;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
    (0..20)
        .map(|_| {
            let c: Vec<f64> = (0..2).map(|_| rng.random_range(0.1..2.0)).collect();
            let a = vec![
                vec![-rng.random_range(1.0..3.0), rng.random_range(0.0..0.3)],
                vec![rng.random_range(0.0..0.3), -rng.random_range(1.0..3.0)],
                vec![1.0, 1.0],
            ];
            let b = vec![-1.0, -1.0, 10.0];
            let v = lp::vertex_enumeration(&c, &a, &b, 1e-10).map_or(f64::NAN, |r| r.1);
            let g = lp::grid_search(&c, &a, &b, &[10.0, 10.0], 400).map_or(f64::NAN, |r| r.1);
            (v, g)
        })
        .collect()
}
