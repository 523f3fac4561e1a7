use std::fmt;
use std::io::Write;

use lowtail::criteria::{report_all, CriterionReport, McBudget};
use lowtail::fredholm::{fredholm_det, laplace_transform_mc, FredholmSetup, KernelParams};
use lowtail::hill::{hill_spectrum, Boundary, HillConfig};
use lowtail::noise::{derive_seed, tag, NoisePath};
use lowtail::rate_function::{phi_minus, phi_minus_scaled};
use lowtail::stochastic_airy::{
    ldp_estimate, riccati_count_sao, sandwich_check, sao_matrix_count, sao_spectrum, SandwichGrids, SaoConfig,
};
use lowtail::variational::{variational_value, DiscretizationParams};
use lowtail::wkb::wkb_trials;
use lowtail::LabError;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::{BoundaryArg, Cli, Command, FredholmAction, Format, SaoAction, SaoGrid, Skip};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub enum CliError {
    Lab(LabError),
    Output(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Lab(e) => e.exit_code() as u8,
            CliError::Output(_) => 74,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Lab(e) => write!(f, "{e}"),
            CliError::Output(e) => write!(f, "cannot write output: {e}"),
        }
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        CliError::Lab(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e)
    }
}

type Res<T> = std::result::Result<T, CliError>;

fn to_value(v: impl Serialize) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

fn sao_config(grid: &SaoGrid, cap: f64, seed: u64) -> Res<SaoConfig> {
    Ok(SaoConfig::new(grid.beta, grid.domain_l, grid.grid_n, cap, seed)?)
}

fn emit(cli: &Cli, body: &str) -> Res<()> {
    match &cli.out {
        Some(p) => std::fs::write(p, body)?,
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    Ok(())
}

fn json_document(command: &str, seed: u64, result: Value) -> String {
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "seed": seed,
        "result": result,
    });
    let mut s = serde_json::to_string_pretty(&doc).expect("json values serialize");
    s.push('\n');
    s
}

fn rate_fn_csv(z_min: f64, z_max: f64, steps: usize, beta: f64) -> Res<String> {
    if steps == 0 || z_min.is_nan() || z_max.is_nan() || z_min > z_max {
        return Err(LabError::Config(format!("need steps >= 1 and z_min <= z_max, got {steps}, {z_min}, {z_max}")).into());
    }
    let mut out = String::from("z,phi,phi_scaled\n");
    for k in 0..steps {
        let z = if steps == 1 { z_min } else { z_min + (z_max - z_min) * k as f64 / (steps - 1) as f64 };
        out.push_str(&format!("{z},{},{}\n", phi_minus(z)?, phi_minus_scaled(beta, z)?));
    }
    Ok(out)
}

fn rate_fn_json(z_min: f64, z_max: f64, steps: usize, beta: f64) -> Res<Value> {
    let csv = rate_fn_csv(z_min, z_max, steps, beta)?;
    let rows: Vec<Value> = csv
        .lines()
        .skip(1)
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|x| x.parse().expect("own output")).collect();
            json!({ "z": v[0], "phi": v[1], "phi_scaled": v[2] })
        })
        .collect();
    Ok(json!({ "beta": beta, "rows": rows }))
}

fn report_value(reports: &[CriterionReport]) -> Value {
    json!({
        "all_passed": reports.iter().all(|r| r.passed),
        "criteria": reports.iter().map(to_value).collect::<Vec<_>>(),
    })
}

/// Runs one command and returns the process exit code.
pub fn run(cli: &Cli) -> Res<u8> {
    let seed = cli.seed;
    let module_seed = |name: &str| derive_seed(seed, &[tag(name)]);
    let format = cli.format.unwrap_or(match cli.command {
        Command::RateFn(_) => Format::Csv,
        _ => Format::Json,
    });
    if format == Format::Csv && !matches!(cli.command, Command::RateFn(_)) {
        return Err(LabError::Config("csv output is available for rate-fn only".into()).into());
    }

    let (name, result, code) = match &cli.command {
        Command::RateFn(a) => {
            if format == Format::Csv {
                emit(cli, &rate_fn_csv(a.z_min, a.z_max, a.steps, a.beta)?)?;
                return Ok(0);
            }
            ("rate-fn", rate_fn_json(a.z_min, a.z_max, a.steps, a.beta)?, 0)
        }
        Command::Variational(a) => {
            let v = variational_value(a.z, a.beta)?;
            let c = phi_minus_scaled(a.beta, a.z)?;
            let r = json!({
                "z": a.z,
                "beta": a.beta,
                "variational_value": v,
                "closed_form": c,
                "rel_err": if c == 0.0 { (v - c).abs() } else { (v / c - 1.0).abs() },
            });
            ("variational", r, 0)
        }
        Command::Hill(a) => {
            let boundary = match a.boundary {
                BoundaryArg::Dirichlet => Boundary::Dirichlet,
                BoundaryArg::Periodic => Boundary::Periodic,
            };
            let cfg = HillConfig::new(a.j, a.xi, a.beta, boundary, a.grid_n, a.cap)?;
            let path = NoisePath::brownian(cfg.step(), cfg.grid_n, derive_seed(module_seed("hill"), &[a.index]));
            let s = hill_spectrum(&cfg, &path)?;
            ("hill", json!({ "config": to_value(cfg), "index": a.index, "spectrum": to_value(&s) }), 0)
        }
        Command::Sao { action } => {
            let root = module_seed("sao");
            match action {
                SaoAction::Spectrum { grid, cap, index } => {
                    let cfg = sao_config(grid, *cap, root)?;
                    let s = sao_spectrum(&cfg, &cfg.path(*index))?;
                    ("sao spectrum", json!({ "config": to_value(cfg), "index": index, "spectrum": to_value(&s) }), 0)
                }
                SaoAction::Count { grid, lambda, index } => {
                    let cfg = sao_config(grid, 0.0, root)?;
                    let p = cfg.path(*index);
                    let r = json!({
                        "config": to_value(cfg),
                        "index": index,
                        "lambda": lambda,
                        "riccati": riccati_count_sao(*lambda, &cfg, &p)?,
                        "matrix": sao_matrix_count(*lambda, &cfg, &p)?,
                    });
                    ("sao count", r, 0)
                }
                SaoAction::Sandwich { grid, z, t, a, levels, hill_grid_n, samples } => {
                    let params = match levels {
                        Some(n) => DiscretizationParams::new(*t, *a, *n)?,
                        None => DiscretizationParams::for_deviation(*z, *t, *a)?,
                    };
                    let grids = SandwichGrids { hill_grid_n: *hill_grid_n, sao: sao_config(grid, 0.0, root)? };
                    let s = sandwich_check(*z, *t, grid.beta, &params, *samples, &grids)?;
                    let r = json!({
                        "params": to_value(params),
                        "report": to_value(&s),
                        "ordered_within_3_sigma": s.ordered_within(3.0),
                    });
                    ("sao sandwich", r, 0)
                }
                SaoAction::Ldp { grid, z, t, a, samples, importance } => {
                    let cfg = sao_config(grid, 0.0, root)?;
                    let e = ldp_estimate(*z, *t, grid.beta, *a, &cfg, *samples, *importance)?;
                    let r = json!({
                        "z": z,
                        "t": t,
                        "a": a,
                        "beta": grid.beta,
                        "importance": importance,
                        "mean": e.mean,
                        "stderr": e.stderr,
                        "samples": e.samples,
                        "limit": -phi_minus_scaled(grid.beta, *z)?,
                    });
                    ("sao ldp", r, 0)
                }
            }
        }
        Command::Fredholm(f) => {
            let setup = FredholmSetup::new(f.xmax, f.grid_n, FredholmSetup::default().inner_per_panel)?;
            match &f.action {
                None => {
                    let p = KernelParams::new(f.s, f.t)?;
                    let d = fredholm_det(&p, &setup)?;
                    ("fredholm", json!({ "s": f.s, "t": f.t, "det": to_value(d) }), 0)
                }
                Some(FredholmAction::Compare { s, t, samples, sao_grid_n, domain_l }) => {
                    let p = KernelParams::new(s.unwrap_or(f.s), t.unwrap_or(f.t))?;
                    let d = fredholm_det(&p, &setup)?;
                    let cfg = SaoConfig::new(2.0, *domain_l, *sao_grid_n, p.truncation_level(), module_seed("fredholm"))?;
                    let e = laplace_transform_mc(&p, &cfg, *samples)?;
                    let r = json!({
                        "s": p.s,
                        "t": p.t,
                        "det": d.value,
                        "mc_mean": e.mean,
                        "mc_stderr": e.stderr,
                        "samples": e.samples,
                        "sigma_distance": (d.value - e.mean).abs() / e.stderr,
                    });
                    ("fredholm compare", r, 0)
                }
            }
        }
        Command::Wkb(w) => ("wkb", to_value(wkb_trials(w.trials, w.grid_n, module_seed("wkb"))?), 0),
        Command::Report(r) => {
            let reports = report_all(seed, r.skip == Some(Skip::Mc), &McBudget::default())?;
            for rep in &reports {
                eprintln!("{}", rep.line());
            }
            let code = if reports.iter().all(|r| r.passed) { 0 } else { 3 };
            ("report", report_value(&reports), code)
        }
    };
    emit(cli, &json_document(name, seed, result))?;
    Ok(code)
}
