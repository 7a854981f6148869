use std::io::{self, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use hisd_core::dynamics::{run_trajectory, GhisdProjection, Mode, SchemeParams, StepRecord};
use hisd_core::io::{
    rate_table_report, write_atomic, write_json, write_rate_table_csv, write_trajectory_csv, Report,
};
use hisd_core::lab::{
    compare_with_expected, expected_table, ghisd_equivalence, lemma_suite, preset, rate_table,
    Check, ExperimentConfig, PRESET_NAMES,
};
use hisd_core::landscape::{check_derivatives, sample_points, FD_STEP};
use hisd_core::{
    DirectionFrame, Eckhardt, EnergyLandscape, HisdError, MinyaevQuapp, ModelKind, SaddleState,
};
use serde::Serialize;

use crate::{CheckArgs, ConvergeArgs, Format, List, RunArgs, SetupArgs, Suite};

/// Directions supplied on the command line may deviate from orthogonality
/// by this much after normalization.
const FRAME_ORTH_TOL: f64 = 1e-6;
const EQUIV_TAU: f64 = 1.0 / 128.0;
const EQUIV_TOL: f64 = 1e-13;

pub fn exit_code(err: &anyhow::Error) -> u8 {
    let io = err.chain().any(|c| {
        c.downcast_ref::<io::Error>().is_some()
            || matches!(
                c.downcast_ref::<HisdError>().map(HisdError::root),
                Some(HisdError::Io(_))
            )
    });
    if io {
        2
    } else {
        1
    }
}

/// Writes to `path` atomically, or to stdout.
fn emit(
    path: Option<&Path>,
    fill: impl FnOnce(&mut dyn Write) -> hisd_core::Result<()>,
) -> Result<()> {
    match path {
        Some(p) => write_atomic(p, fill).with_context(|| format!("writing {}", p.display())),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            fill(&mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn frame_from(vectors: &[List], k: Option<usize>) -> Result<DirectionFrame> {
    if vectors.is_empty() {
        bail!("at least one --v direction is required");
    }
    if let Some(k) = k {
        if k != vectors.len() {
            bail!("--k {k} but {} --v vectors given", vectors.len());
        }
    }
    Ok(DirectionFrame::normalized(
        vectors.iter().map(|v| v.0.clone()).collect(),
        FRAME_ORTH_TOL,
    )?)
}

fn scheme_coefficients(setup: &SetupArgs, mode: Mode) -> Result<(f64, f64)> {
    let beta = setup.beta.unwrap_or(1.0);
    let gamma = setup.gamma.unwrap_or(1.0);
    if mode == Mode::GHiSD && (beta != 1.0 || gamma != 1.0) {
        bail!("GHiSD fixes beta = gamma = 1");
    }
    if mode == Mode::HiSD && setup.ghisd_unscaled_projection {
        bail!("--ghisd-unscaled-projection only applies to --mode ghisd");
    }
    Ok((beta, gamma))
}

fn projection(setup: &SetupArgs) -> GhisdProjection {
    if setup.ghisd_unscaled_projection {
        GhisdProjection::Unscaled
    } else {
        GhisdProjection::FullBracket
    }
}

fn default_mode(model: ModelKind) -> Mode {
    if model.is_gradient() {
        Mode::HiSD
    } else {
        Mode::GHiSD
    }
}

#[derive(Serialize)]
struct RunConfig {
    model: ModelKind,
    mode: Mode,
    k: usize,
    beta: f64,
    gamma: f64,
    t_final: f64,
    tau: f64,
    x0: Vec<f64>,
    frame: DirectionFrame,
    projection: GhisdProjection,
}

#[derive(Serialize)]
struct RunRow<'a> {
    #[serde(flatten)]
    record: &'a StepRecord,
    #[serde(skip_serializing_if = "Option::is_none")]
    energy: Option<f64>,
}

pub fn run(args: RunArgs) -> Result<bool> {
    let s = &args.setup;
    let model = s.model.ok_or_else(|| anyhow!("--model is required"))?;
    let mode = s.mode.unwrap_or_else(|| default_mode(model));
    let x0 = s.x0.clone().ok_or_else(|| anyhow!("--x0 is required"))?.0;
    let frame = frame_from(&s.v, s.k)?;
    let (beta, gamma) = scheme_coefficients(s, mode)?;
    let t_final = s.t_final.unwrap_or(1.0);
    if args.record_intermediates && args.format == Format::Csv {
        bail!("--record-intermediates needs --format json");
    }

    let mut params = match mode {
        Mode::HiSD => SchemeParams::hisd(frame.k(), args.tau, beta, gamma),
        Mode::GHiSD => SchemeParams::ghisd(frame.k(), args.tau),
    };
    params.projection = projection(s);
    let built = model.build();
    let view = built.as_model();
    let landscape = view.landscape();
    if args.energy && landscape.is_none() {
        bail!("--energy needs a gradient model; {model} has no energy");
    }
    let initial = SaddleState::new(x0.clone(), frame.clone())?;
    let traj = run_trajectory(
        &initial,
        &params,
        built.as_model(),
        t_final,
        args.record_intermediates,
    )?;

    let energy = if args.energy { landscape } else { None };
    match args.format {
        Format::Csv => emit(args.output.as_deref(), |w| {
            write_trajectory_csv(w, &traj, energy)
        })?,
        Format::Json => {
            let config = RunConfig {
                model,
                mode,
                k: frame.k(),
                beta,
                gamma,
                t_final,
                tau: args.tau,
                x0,
                frame,
                projection: params.projection,
            };
            let rows: Vec<RunRow> = traj
                .records
                .iter()
                .map(|record| RunRow {
                    record,
                    energy: energy.map(|l| l.energy(&record.state.x)),
                })
                .collect();
            let no_rates: [(); 0] = [];
            let report = Report {
                config: &config,
                rows: &rows,
                rates: &no_rates,
                checks: &[],
            };
            emit(args.output.as_deref(), |w| write_json(w, &report))?;
        }
    }
    Ok(true)
}

fn converge_config(args: &ConvergeArgs) -> Result<ExperimentConfig> {
    let s = &args.setup;
    let mut cfg = match &args.preset {
        Some(name) => preset(name)?,
        None => {
            let model = s
                .model
                .ok_or_else(|| anyhow!("--model or --preset is required"))?;
            ExperimentConfig {
                name: "custom".into(),
                model,
                mode: default_mode(model),
                beta: 1.0,
                gamma: 1.0,
                t_final: 1.0,
                x0: s
                    .x0
                    .clone()
                    .ok_or_else(|| anyhow!("--x0 is required without --preset"))?
                    .0,
                frame: frame_from(&s.v, s.k)?,
                taus: args
                    .taus
                    .clone()
                    .ok_or_else(|| anyhow!("--taus is required without --preset"))?
                    .0,
                tau_ref: args
                    .ref_tau
                    .ok_or_else(|| anyhow!("--ref-tau is required without --preset"))?,
                projection: GhisdProjection::FullBracket,
            }
        }
    };
    if let Some(m) = s.model {
        cfg.model = m;
    }
    if let Some(m) = s.mode {
        cfg.mode = m;
    }
    if let Some(x0) = &s.x0 {
        cfg.x0 = x0.0.clone();
    }
    if !s.v.is_empty() {
        cfg.frame = frame_from(&s.v, s.k)?;
    } else if let Some(k) = s.k {
        if k != cfg.frame.k() {
            bail!(
                "--k {k} does not match the preset's {} directions",
                cfg.frame.k()
            );
        }
    }
    if let Some(t) = s.t_final {
        cfg.t_final = t;
    }
    let (beta, gamma) = scheme_coefficients(s, cfg.mode)?;
    if s.beta.is_some() || s.gamma.is_some() {
        cfg.beta = beta;
        cfg.gamma = gamma;
    }
    cfg.projection = projection(s);
    if let Some(t) = &args.taus {
        cfg.taus = t.0.clone();
    }
    if let Some(t) = args.ref_tau {
        cfg.tau_ref = t;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_checks(out: &mut dyn Write, checks: &[Check]) -> io::Result<()> {
    for c in checks {
        writeln!(
            out,
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        )?;
    }
    Ok(())
}

pub fn converge(args: ConvergeArgs) -> Result<bool> {
    let cfg = converge_config(&args)?;
    let expected = args.expect.as_deref().map(expected_table).transpose()?;
    let table = rate_table(&cfg)?;
    let checks = expected
        .map(|e| compare_with_expected(&table, &e))
        .unwrap_or_default();

    match args.format {
        Format::Csv => emit(args.output.as_deref(), |w| write_rate_table_csv(w, &table))?,
        Format::Json => emit(args.output.as_deref(), |w| {
            write_json(w, &rate_table_report(&cfg, &table, &checks))
        })?,
    }
    if checks.is_empty() {
        return Ok(true);
    }
    let passed = checks.iter().filter(|c| c.passed).count();
    let mut err = io::stderr().lock();
    print_checks(&mut err, &checks)?;
    writeln!(err, "{passed}/{} checks passed", checks.len())?;
    Ok(passed == checks.len())
}

fn derivative_checks() -> Vec<Check> {
    let points = sample_points(100, 2, -3.0, 3.0, 0x5eed);
    let surfaces: [(&str, &dyn EnergyLandscape); 2] =
        [("minyaev-quapp", &MinyaevQuapp), ("eckhardt", &Eckhardt)];
    surfaces
        .into_iter()
        .map(|(name, l)| {
            let r = check_derivatives(l, &points, FD_STEP);
            Check::new(
                format!("derivatives {name}"),
                r.passes(),
                format!(
                    "{} points: force rel err {:.2e}, neg-Hessian abs err {:.2e}, asymmetry {:.1e}",
                    r.points, r.force_rel_error, r.hessian_abs_error, r.asymmetry
                ),
            )
        })
        .collect()
}

pub fn check(args: CheckArgs) -> Result<bool> {
    let names: Vec<&str> = match &args.preset {
        Some(p) => vec![p.as_str()],
        None => PRESET_NAMES
            .iter()
            .copied()
            .filter(|n| n.starts_with("table"))
            .collect(),
    };
    let configs = names
        .iter()
        .map(|n| preset(n))
        .collect::<hisd_core::Result<Vec<_>>>()?;
    let mut checks = Vec::new();

    if matches!(args.suite, Suite::Lemmas | Suite::All) {
        for cfg in &configs {
            let taus = args.taus.as_ref().map_or(&cfg.taus, |t| &t.0);
            let report = lemma_suite(cfg, taus)?;
            for v in &report.violations {
                eprintln!("bound violation ({}): {v}", cfg.name);
            }
            checks.extend(report.checks().into_iter().map(|mut c| {
                c.name = format!("{} {}", cfg.name, c.name);
                c
            }));
        }
    }
    if matches!(args.suite, Suite::Derivatives | Suite::All) {
        checks.extend(derivative_checks());
    }
    if matches!(args.suite, Suite::GhisdEquiv | Suite::All) {
        for cfg in configs.iter().filter(|c| c.model.is_gradient()) {
            let dev = ghisd_equivalence(cfg, EQUIV_TAU)?;
            checks.push(Check::new(
                format!("{} ghisd-equiv", cfg.name),
                dev <= EQUIV_TOL,
                format!("max component deviation {dev:.3e} (tau = 1/128, limit {EQUIV_TOL:e})"),
            ));
        }
    }

    let passed = checks.iter().filter(|c| c.passed).count();
    let mut out = io::stdout().lock();
    print_checks(&mut out, &checks)?;
    writeln!(out, "{passed}/{} checks passed", checks.len())?;
    if let Some(path) = &args.output {
        #[derive(Serialize)]
        struct CheckConfig<'a> {
            suite: String,
            presets: &'a [&'a str],
        }
        let config = CheckConfig {
            suite: format!("{:?}", args.suite).to_lowercase(),
            presets: &names,
        };
        let empty: [(); 0] = [];
        let report = Report {
            config: &config,
            rows: &empty,
            rates: &empty,
            checks: &checks,
        };
        emit(Some(path), |w| write_json(w, &report))?;
    }
    Ok(passed == checks.len())
}
