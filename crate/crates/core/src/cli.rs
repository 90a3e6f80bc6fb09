//! Command-line orchestrator: reads a run configuration, executes one
//! pipeline, writes CSV/JSON artifacts atomically, prints a one-line summary.
//!
//! Exit codes: 0 success, 2 configuration/parameter error, 3 numerical
//! inconsistency, 4 non-convergence, 64 usage (unknown subcommand/recipe).

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::ground_action::{bracket, nondegeneracy_check, Grid};
use crate::kam::{self, KamSolution, SolutionKind};
use crate::mane;
use crate::model::{Family, InteractionModel, ModelSpec};
use crate::recipes;
use crate::report::{config_object, fmt_sig, to_value, write_csv, write_json};
use crate::substrate::{self, SubstrateSpec};

#[derive(Parser)]
#[command(
    name = "fklab",
    version,
    about = "Ground actions, Mañé potentials and weak KAM solutions for \
             Frenkel\u{2013}Kontorova chains on periodic and quasi-periodic substrates"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// Run configuration file (flat `key = value` with dotted sections).
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `run.out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker thread count (overrides `run.threads`).
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for sampling-based checks (overrides `run.seed`).
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate the quasi-periodic substrate and write its points.
    Substrate(Common),
    /// Bracket the ground action and decide the pinning verdict.
    GroundAction(Common),
    /// Tabulate the Mañé potential from a reference point.
    Mane(Common),
    /// Solve for a fundamental configuration and the preferred ordering.
    Fundamental(Common),
    /// Build a localized weak KAM solution of a given type.
    Kam {
        #[command(flatten)]
        common: Common,
        /// Solution kind: I, II, or III (overrides `run.type`).
        #[arg(long = "type")]
        kind: Option<String>,
    },
    /// Classify a stored solution by growth and argmin direction.
    Classify {
        #[command(flatten)]
        common: Common,
        /// Solution JSON written by `kam` (default `<out>/kam_solution.json`).
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Sweep the drift and report brackets, verdicts and orderings.
    Sweep(Common),
    /// Re-check the weak KAM properties of a stored solution.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Solution JSON written by `kam` (default `<out>/kam_solution.json`).
        #[arg(long)]
        solution: Option<PathBuf>,
    },
    /// Run a named acceptance recipe (AC0-smoke, AC1..AC12, or `all`).
    Recipe {
        name: String,
        /// Output directory for recipe artifacts.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker thread count.
        #[arg(long)]
        threads: Option<usize>,
    },
}

/// Entry point used by `main`; returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = e.print();
            return code;
        }
    };

    if let Cmd::Recipe { name, out, threads } = &cli.cmd {
        init_threads(*threads);
        if !recipes::is_known(name) {
            eprintln!("unknown recipe '{name}' (expected AC0-smoke, AC1..AC12, or all)");
            return 64;
        }
        return match recipes::run_recipe(name, out.as_deref()) {
            Ok(outcome) => {
                for line in &outcome.lines {
                    println!("{line}");
                }
                if outcome.pass {
                    0
                } else {
                    1
                }
            }
            Err(e) => {
                eprintln!("{e}");
                e.exit_code()
            }
        };
    }

    match dispatch(&cli.cmd) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}

fn init_threads(threads: Option<usize>) {
    if let Some(t) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
}

struct Ctx {
    cfg: RunConfig,
    out_dir: PathBuf,
}

fn ctx(common: &Common) -> Result<Ctx> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(out) = &common.out {
        cfg.set("run.out_dir", &out.display().to_string());
    }
    if let Some(t) = common.threads {
        cfg.set("run.threads", &t.to_string());
    }
    if let Some(s) = common.seed {
        cfg.set("run.seed", &s.to_string());
    }
    if let Some(t) = cfg.raw("run.threads") {
        let t: usize = t.parse().map_err(|_| {
            Error::config(format!("config field 'run.threads': '{t}' is not a thread count"))
        })?;
        init_threads(Some(t));
    }
    let out_dir = PathBuf::from(cfg.str_or("run.out_dir", "out"));
    std::fs::create_dir_all(&out_dir)
        .map_err(|e| Error::io(out_dir.display().to_string(), e))?;
    Ok(Ctx { cfg, out_dir })
}

fn substrate_spec(cfg: &RunConfig) -> Result<SubstrateSpec> {
    SubstrateSpec::new(cfg.f64("substrate.alpha")?, cfg.f64("substrate.rho")?)
}

fn model_and_grid(cfg: &RunConfig) -> Result<(InteractionModel, Grid)> {
    let family = Family::parse(cfg.require("model.family")?)?;
    let lambda = cfg.f64("model.lambda")?;
    let coupling = cfg.f64("model.K")?;
    let substrate = match family {
        Family::QuasiPeriodic => Some(substrate_spec(cfg)?),
        Family::Periodic => None,
    };
    let (lo, hi) = cfg.pair_f64("grid.window")?;
    let step = cfg.f64("grid.step")?;
    let g = Grid::new(lo, hi, step)?;
    let spec = ModelSpec { lambda, coupling, family, substrate };
    spec.validate()?;
    let pad = 1.0 + lambda.abs();
    let m = InteractionModel::for_window(spec, lo - pad, hi + pad)?;
    Ok((m, g))
}

/// The calibration level for this run: explicit `run.e_bar` if present,
/// otherwise the bracket estimate; either way the bracket actually used is
/// returned for embedding into the report.
fn resolve_e_bar(cfg: &RunConfig, m: &InteractionModel, g: &Grid) -> Result<(f64, Value)> {
    if cfg.raw("run.e_bar").is_some() {
        let v = cfg.f64("run.e_bar")?;
        return Ok((v, json!({"lower": v, "upper": v, "estimate": v, "source": "config"})));
    }
    let n_max = cfg.usize_or("run.n_max", 16)?;
    let br = bracket(m, g, n_max)?;
    let value = br.estimate;
    Ok((
        value,
        json!({
            "lower": br.lower,
            "upper": br.upper,
            "estimate": br.estimate,
            "source": "bracket",
        }),
    ))
}

fn report_with(cfg: &RunConfig, fields: Vec<(&str, Value)>) -> Value {
    let mut map = serde_json::Map::new();
    map.insert("config".to_string(), config_object(cfg));
    for (k, v) in fields {
        map.insert(k.to_string(), v);
    }
    Value::Object(map)
}

fn dispatch(cmd: &Cmd) -> Result<String> {
    match cmd {
        Cmd::Substrate(common) => cmd_substrate(&ctx(common)?),
        Cmd::GroundAction(common) => cmd_ground_action(&ctx(common)?),
        Cmd::Mane(common) => cmd_mane(&ctx(common)?),
        Cmd::Fundamental(common) => cmd_fundamental(&ctx(common)?),
        Cmd::Kam { common, kind } => cmd_kam(&ctx(common)?, kind.as_deref()),
        Cmd::Classify { common, solution } => cmd_classify(&ctx(common)?, solution.as_deref()),
        Cmd::Sweep(common) => cmd_sweep(&ctx(common)?),
        Cmd::Verify { common, solution } => cmd_verify(&ctx(common)?, solution.as_deref()),
        Cmd::Recipe { .. } => unreachable!("handled in run"),
    }
}

fn cmd_substrate(ctx: &Ctx) -> Result<String> {
    let cfg = &ctx.cfg;
    let spec = substrate_spec(cfg)?;
    let raw = cfg.require("substrate.k_range")?;
    let parts: Vec<&str> = raw.split(',').map(|p| p.trim()).collect();
    if parts.len() != 2 {
        return Err(Error::config(format!(
            "config field 'substrate.k_range': expected 'k_min,k_max', got '{raw}'"
        )));
    }
    let k_min: i64 = parts[0].parse().map_err(|_| {
        Error::config(format!("config field 'substrate.k_range': '{}' is not an integer", parts[0]))
    })?;
    let k_max: i64 = parts[1].parse().map_err(|_| {
        Error::config(format!("config field 'substrate.k_range': '{}' is not an integer", parts[1]))
    })?;
    let sub = substrate::generate(&spec, k_min, k_max)?;
    let rows: Vec<Vec<String>> = (k_min..=k_max)
        .map(|k| {
            vec![
                k.to_string(),
                fmt_sig(sub.point(k).expect("k inside generated range")),
                substrate::letter(k, spec.alpha).to_string(),
            ]
        })
        .collect();
    let csv = ctx.out_dir.join("substrate.csv");
    write_csv(&csv, &["k", "q_k", "letter"], &rows)?;
    let (wlo, whi) = sub.window();
    let report = report_with(
        cfg,
        vec![
            ("alpha", json!(spec.alpha)),
            ("rho", json!(spec.rho)),
            ("k_range", json!([k_min, k_max])),
            ("count", json!(rows.len())),
            ("window", json!([wlo, whi])),
            ("frequency_1", json!(sub.subword_frequency(&[1])?)),
            ("e_bar_bracket", Value::Null),
        ],
    );
    let jsonp = ctx.out_dir.join("substrate.json");
    write_json(&jsonp, &report)?;
    Ok(format!(
        "substrate: {} points on [{:.3}, {:.3}] -> {}, {}",
        rows.len(),
        wlo,
        whi,
        csv.display(),
        jsonp.display()
    ))
}

fn cmd_ground_action(ctx: &Ctx) -> Result<String> {
    let cfg = &ctx.cfg;
    let (m, g) = model_and_grid(cfg)?;
    let n_max = cfg.usize_or("run.n_max", 16)?;
    let rep = nondegeneracy_check(&m, &g, n_max)?;
    let rows: Vec<Vec<String>> = rep
        .bracket
        .history
        .iter()
        .map(|h| {
            vec![
                h.n.to_string(),
                fmt_sig(h.chain_per_bond),
                h.cycle_per_bond.map(fmt_sig).unwrap_or_default(),
            ]
        })
        .collect();
    let csv = ctx.out_dir.join("ground_action.csv");
    write_csv(&csv, &["n", "chain_per_bond", "cycle_per_bond"], &rows)?;
    let report = report_with(
        cfg,
        vec![
            ("verdict", json!(rep.verdict)),
            ("self_interaction", json!(rep.self_interaction)),
            (
                "e_bar_bracket",
                json!({
                    "lower": rep.bracket.lower,
                    "upper": rep.bracket.upper,
                    "estimate": rep.bracket.estimate,
                    "source": "bracket",
                }),
            ),
            ("detail", to_value(&rep)?),
        ],
    );
    let jsonp = ctx.out_dir.join("ground_action.json");
    write_json(&jsonp, &report)?;
    Ok(format!(
        "ground-action: verdict {} bracket [{}, {}] -> {}",
        rep.verdict.name(),
        fmt_sig(rep.bracket.lower),
        fmt_sig(rep.bracket.upper),
        jsonp.display()
    ))
}

fn cmd_mane(ctx: &Ctx) -> Result<String> {
    let cfg = &ctx.cfg;
    let (m, g) = model_and_grid(cfg)?;
    let ref_point = cfg.f64_or("run.ref_point", 0.0)?;
    let (e_bar, bracket_json) = resolve_e_bar(cfg, &m, &g)?;
    let t = mane::mane_table(&m, &g, ref_point, e_bar)?;
    let rows: Vec<Vec<String>> = (0..t.values.len())
        .map(|j| {
            vec![
                j.to_string(),
                fmt_sig(t.grid.node(j)),
                fmt_sig(t.values[j]),
                t.predecessor[j].to_string(),
            ]
        })
        .collect();
    let csv = ctx.out_dir.join("mane_table.csv");
    write_csv(&csv, &["index", "x", "value", "predecessor"], &rows)?;
    let report = report_with(
        cfg,
        vec![
            ("ref_point", json!(t.ref_point)),
            ("ref_index", json!(t.ref_index)),
            ("e_bar_used", json!(t.e_bar_used)),
            ("e_bar_bracket", bracket_json),
            ("r_search", json!(t.r_search)),
            ("nodes", json!(t.values.len())),
            ("value_at_ref", json!(t.values[t.ref_index])),
        ],
    );
    let jsonp = ctx.out_dir.join("mane_table.json");
    write_json(&jsonp, &report)?;
    Ok(format!(
        "mane: table from {} over {} nodes, S(ref,ref) = {} -> {}",
        fmt_sig(t.ref_point),
        t.values.len(),
        fmt_sig(t.values[t.ref_index]),
        csv.display()
    ))
}

fn cmd_fundamental(ctx: &Ctx) -> Result<String> {
    let cfg = &ctx.cfg;
    let (m, g) = model_and_grid(cfg)?;
    let n = cfg.usize_or("run.n", 8)?;
    let chain = mane::fundamental_configuration(&m, &g, n)?;
    let rows: Vec<Vec<String>> = chain
        .points
        .iter()
        .enumerate()
        .map(|(k, x)| vec![k.to_string(), fmt_sig(*x)])
        .collect();
    let csv = ctx.out_dir.join("fundamental.csv");
    write_csv(&csv, &["k", "x"], &rows)?;

    let sizes = cfg.list_usize_or("run.sizes", &[])?;
    let ordering = if sizes.is_empty() {
        Value::Null
    } else {
        let n_max = cfg.usize_or("run.n_max", 16)?;
        let verdict = nondegeneracy_check(&m, &g, n_max)?.verdict;
        // Free blocks need ~one jump radius per bond; probe the ordering on
        // a dedicated window sized for the largest block instead of
        // requiring the run window to fit it.
        let spec = *m.spec();
        let vmax = match spec.family {
            Family::Periodic => 2.0,
            Family::QuasiPeriodic => {
                let rho = spec.substrate.as_ref().map(|s| s.rho).unwrap_or(1.0);
                2.0 * rho * rho
            }
        };
        let level = 0.5 * spec.lambda * spec.lambda + spec.coupling * vmax + 2.0;
        let r0 = spec.jump_radius(level)?;
        let n_big = *sizes.iter().max().unwrap() as f64;
        let half = 0.5 * (n_big * r0 + 4.0) + 1.0;
        let go = Grid::new(-half, half, g.step)?;
        let pad = 1.0 + spec.lambda.abs();
        let mo = InteractionModel::for_window(spec, -half - pad, half + pad)?;
        to_value(&mane::preferred_ordering(&mo, &go, &sizes, verdict)?)?
    };
    let report = report_with(
        cfg,
        vec![
            ("n", json!(n)),
            ("energy", json!(chain.energy)),
            ("displacement", json!(chain.displacement())),
            ("rotation", json!(chain.rotation())),
            ("strictly_monotone", json!(chain.strictly_monotone())),
            ("ordering", ordering),
            ("e_bar_bracket", Value::Null),
        ],
    );
    let jsonp = ctx.out_dir.join("fundamental.json");
    write_json(&jsonp, &report)?;
    Ok(format!(
        "fundamental: n = {n}, energy = {}, displacement = {} -> {}",
        fmt_sig(chain.energy),
        fmt_sig(chain.displacement()),
        csv.display()
    ))
}

fn solution_paths(ctx: &Ctx) -> (PathBuf, PathBuf) {
    (ctx.out_dir.join("kam_solution.csv"), ctx.out_dir.join("kam_solution.json"))
}

fn cmd_kam(ctx: &Ctx, kind_flag: Option<&str>) -> Result<String> {
    let cfg = &ctx.cfg;
    let (m, g) = model_and_grid(cfg)?;
    let kind = SolutionKind::parse(kind_flag.unwrap_or_else(|| cfg.str_or("run.type", "I")))?;
    let epsilon = cfg.i64_or("run.epsilon", 1)? as i8;
    let max_iter = cfg.usize_or("run.max_iter", 500)?;
    let tol = cfg.f64_or("run.tol_fixed_point", 1e-8)?;
    let (e_bar, bracket_json) = resolve_e_bar(cfg, &m, &g)?;
    let sol = kam::build_solution(&m, &g, kind, epsilon, e_bar, max_iter, tol)?;
    let rows: Vec<Vec<String>> = (0..sol.values.len())
        .map(|j| {
            vec![
                j.to_string(),
                fmt_sig(g.node(j)),
                fmt_sig(sol.values[j]),
                sol.argmin_map[j].to_string(),
            ]
        })
        .collect();
    let (csv, jsonp) = solution_paths(ctx);
    write_csv(&csv, &["index", "x", "value", "argmin"], &rows)?;
    let report = report_with(
        cfg,
        vec![("e_bar_bracket", bracket_json), ("solution", to_value(&sol)?)],
    );
    write_json(&jsonp, &report)?;
    Ok(format!(
        "kam: type {} solution, residual {}, interior [{}, {}] -> {}",
        sol.type_label,
        fmt_sig(sol.residual),
        sol.interior.0,
        sol.interior.1,
        jsonp.display()
    ))
}

fn load_solution(path: &Path) -> Result<KamSolution> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read solution {}: {e}", path.display())))?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Error::config(format!("solution {} is not JSON: {e}", path.display())))?;
    let sol = value
        .get("solution")
        .ok_or_else(|| {
            Error::config(format!("solution {} has no 'solution' object", path.display()))
        })?
        .clone();
    serde_json::from_value(sol)
        .map_err(|e| Error::config(format!("solution {} is malformed: {e}", path.display())))
}

fn check_solution_grid(sol: &KamSolution, g: &Grid) -> Result<()> {
    if sol.grid != *g {
        return Err(Error::config(format!(
            "solution grid [{}, {}] step {} does not match grid.window/grid.step",
            sol.grid.lo, sol.grid.hi, sol.grid.step
        )));
    }
    Ok(())
}

fn solution_bracket_json(sol: &KamSolution) -> Value {
    json!({
        "lower": sol.e_bar_used,
        "upper": sol.e_bar_used,
        "estimate": sol.e_bar_used,
        "source": "solution",
    })
}

fn cmd_classify(ctx: &Ctx, solution: Option<&Path>) -> Result<String> {
    let cfg = &ctx.cfg;
    let (m, g) = model_and_grid(cfg)?;
    let default_path = solution_paths(ctx).1;
    let sol = load_solution(solution.unwrap_or(&default_path))?;
    check_solution_grid(&sol, &g)?;
    let epsilon = if sol.epsilon_used == 1 || sol.epsilon_used == -1 {
        sol.epsilon_used
    } else {
        cfg.i64_or("run.epsilon", 1)? as i8
    };
    let rep = kam::classify(&m, &g, &sol, epsilon)?;
    let report = report_with(
        cfg,
        vec![
            ("label", json!(rep.label)),
            ("e_bar_bracket", solution_bracket_json(&sol)),
            ("classification", to_value(&rep)?),
        ],
    );
    let jsonp = ctx.out_dir.join("classify.json");
    write_json(&jsonp, &report)?;
    Ok(format!(
        "classify: label {} (growth {}, direction {}) -> {}",
        rep.label,
        rep.growth_label,
        rep.direction_label,
        jsonp.display()
    ))
}

fn cmd_verify(ctx: &Ctx, solution: Option<&Path>) -> Result<String> {
    let cfg = &ctx.cfg;
    let (m, g) = model_and_grid(cfg)?;
    let default_path = solution_paths(ctx).1;
    let sol = load_solution(solution.unwrap_or(&default_path))?;
    check_solution_grid(&sol, &g)?;
    let tol = cfg.f64_or("run.tol_residual", 1e-5)?;
    let rep = kam::verify_weak_kam(&m, &g, &sol, tol)?;
    let report = report_with(
        cfg,
        vec![
            ("passed", json!(rep.passed)),
            ("e_bar_bracket", solution_bracket_json(&sol)),
            ("verification", to_value(&rep)?),
        ],
    );
    let jsonp = ctx.out_dir.join("verify.json");
    write_json(&jsonp, &report)?;
    Ok(format!(
        "verify: {} (sub-action {}, calibration {}, c* {}) -> {}",
        if rep.passed { "passed" } else { "FAILED" },
        fmt_sig(rep.sub_action_max_violation),
        fmt_sig(rep.calibration_residual),
        fmt_sig(rep.c_star_median),
        jsonp.display()
    ))
}

fn cmd_sweep(ctx: &Ctx) -> Result<String> {
    let cfg = &ctx.cfg;
    let family = Family::parse(cfg.require("model.family")?)?;
    let substrate = match family {
        Family::QuasiPeriodic => Some(substrate_spec(cfg)?),
        Family::Periodic => None,
    };
    let template = ModelSpec {
        lambda: cfg.f64_or("model.lambda", 0.0)?,
        coupling: cfg.f64("model.K")?,
        family,
        substrate,
    };
    let (lo, hi) = cfg.pair_f64("grid.window")?;
    let g = Grid::new(lo, hi, cfg.f64("grid.step")?)?;
    let lambdas = cfg.list_f64("run.lambdas")?;
    let n_max = cfg.usize_or("run.n_max", 16)?;
    let sizes = cfg.list_usize_or("run.sizes", &[])?;
    let rep = kam::lambda_sweep(&template, &lambdas, &g, n_max, &sizes)?;
    let rows: Vec<Vec<String>> = rep
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt_sig(r.lambda),
                fmt_sig(r.lower),
                fmt_sig(r.upper),
                fmt_sig(r.estimate),
                fmt_sig(r.self_interaction),
                r.verdict.name().to_string(),
                r.epsilon.map(|e| e.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    let csv = ctx.out_dir.join("sweep.csv");
    write_csv(
        &csv,
        &["lambda", "lower", "upper", "estimate", "self_interaction", "verdict", "epsilon"],
        &rows,
    )?;
    let report = report_with(
        cfg,
        vec![
            ("sweep", to_value(&rep)?),
            ("e_bar_bracket", json!({"source": "per-row (see sweep.rows)"})),
        ],
    );
    let jsonp = ctx.out_dir.join("sweep.json");
    write_json(&jsonp, &report)?;
    let fmt_opt = |v: Option<f64>| v.map(fmt_sig).unwrap_or_else(|| "none".to_string());
    Ok(format!(
        "sweep: {} drifts, lambda+ {} lambda- {} -> {}",
        rep.rows.len(),
        fmt_opt(rep.lambda_plus_est),
        fmt_opt(rep.lambda_minus_est),
        csv.display()
    ))
}
