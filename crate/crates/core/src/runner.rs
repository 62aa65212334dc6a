//! Scenario dispatch: a parsed config in, a run directory of deterministic
//! artifacts out (trajectory.csv / events.jsonl / kernels.csv / sweep.csv
//! plus a manifest that is itself a runnable config).

use crate::config::{
    FrfConfig, RunConfig, ScenarioKind, SweepBackendConfig, SweepDirectionConfig,
};
use crate::error::{Error, Result};
use crate::hybrid::{simulate, HybridTrajectory, IntegratorConfig};
use crate::io;
use crate::model::ModeLabel;
use crate::scenarios::{
    build_friction_oscillator, build_twofold, flag_bistability, frequency_sweep,
    FrictionParams, LinearStringModal, SweepBackend, SweepDirection, SweepPoint, SweepSettings,
    TwofoldParams,
};
use crate::string::{StringParams, StringReduction};
use crate::tol;
use rayon::prelude::*;
use std::path::{Path, PathBuf};

pub const OUT_ROOT_ENV: &str = "SLIPWAVE_OUT_ROOT";

/// Output root precedence: explicit flag, then the environment override,
/// then the current directory.
pub fn resolve_out_root(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os(OUT_ROOT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

#[derive(Debug)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub files: Vec<String>,
}

/// Construct every component of the run without integrating anything.
pub fn validate_config(config: &RunConfig) -> Result<()> {
    let ib = &config.integrator;
    integrator_config(config, false).and_then(|c| c.validate())?;
    if !(ib.t_end > ib.t_start) {
        return Err(Error::Config(format!(
            "integrator needs t_end > t_start, got [{}, {}]",
            ib.t_start, ib.t_end
        )));
    }
    if ib.record_stride == 0 {
        return Err(Error::Config("record_stride must be at least 1".into()));
    }
    match config.scenario {
        ScenarioKind::LinearString => {
            let sc = require(&config.linear_string, "linear_string")?;
            let modal = LinearStringModal::new(sc.c, sc.xi_star, sc.n_modes)?;
            sc.forcing.build()?;
            if let Some(z0) = &sc.z0 {
                if z0.len() != 2 * modal.n_modes {
                    return Err(Error::Config(format!(
                        "z0 length {} does not match 2N = {}",
                        z0.len(),
                        2 * modal.n_modes
                    )));
                }
            }
        }
        ScenarioKind::StringKernels => {
            let sc = require(&config.string_kernels, "string_kernels")?;
            StringParams::new(sc.c, sc.beta, sc.nonlinearity, sc.xi_star, sc.n_modes)?;
            if let Some(cbar) = sc.cbar {
                if !(cbar > 0.0) {
                    return Err(Error::Config(format!(
                        "tabulation speed cbar must be positive, got {cbar}"
                    )));
                }
            }
            if !(sc.t_min >= 0.0 && sc.t_max > sc.t_min) || sc.points < 2 || sc.k_terms < 1 {
                return Err(Error::Config(
                    "kernel grid needs 0 <= t_min < t_max, points >= 2, k_terms >= 1".into(),
                ));
            }
        }
        ScenarioKind::NonlinearStringFrf => {
            let sc = require(&config.nonlinear_string_frf, "nonlinear_string_frf")?;
            StringParams::new(sc.c, sc.beta, sc.nonlinearity, sc.xi_star, sc.n_modes)?;
            if !(sc.omega_min > 0.0 && sc.omega_max >= sc.omega_min) || sc.points < 1 {
                return Err(Error::Config(
                    "sweep grid needs 0 < omega_min <= omega_max and points >= 1".into(),
                ));
            }
            if !(sc.dt > 0.0 && sc.amplitude.is_finite() && sc.lplus_scale >= 0.0) {
                return Err(Error::Config(
                    "sweep needs dt > 0, finite amplitude, lplus_scale >= 0".into(),
                ));
            }
            if sc.min_periods == 0 || sc.max_periods < sc.min_periods {
                return Err(Error::Config(
                    "sweep needs 1 <= min_periods <= max_periods".into(),
                ));
            }
        }
        ScenarioKind::Friction => {
            let sc = require(&config.friction, "friction")?;
            build_friction_oscillator(friction_params(sc))?;
            let mode0 = ModeLabel::parse(&sc.mode0)?;
            if sc.y0.len() != 3 {
                return Err(Error::Config("friction state y0 has length 3".into()));
            }
            if mode0 == ModeLabel::Sliding && sc.lambda0.is_none() {
                return Err(Error::Config(
                    "sliding start needs an explicit lambda0".into(),
                ));
            }
        }
        ScenarioKind::Twofold => {
            let sc = require(&config.twofold, "twofold")?;
            build_twofold(twofold_params(sc))?;
            let mode0 = ModeLabel::parse(&sc.mode0)?;
            if sc.y0.len() != 4 {
                return Err(Error::Config("two-fold state y0 has length 4".into()));
            }
            if mode0 == ModeLabel::Sliding && sc.lambda0.is_none() {
                return Err(Error::Config(
                    "sliding start needs an explicit lambda0".into(),
                ));
            }
        }
    }
    Ok(())
}

fn require<'a, T>(opt: &'a Option<T>, name: &str) -> Result<&'a T> {
    opt.as_ref()
        .ok_or_else(|| Error::Config(format!("missing [{name}] table")))
}

fn friction_params(sc: &crate::config::FrictionConfig) -> FrictionParams {
    FrictionParams {
        l_plus: sc.l_plus,
        sigma: sc.sigma,
        beta: sc.beta,
        l_inf: sc.l_inf,
        alpha: sc.alpha,
        v0: sc.v0,
    }
}

fn twofold_params(sc: &crate::config::TwofoldConfig) -> TwofoldParams {
    TwofoldParams {
        v_minus: sc.v_minus,
        v_plus: sc.v_plus,
        sigma: sc.sigma,
        l_plus: sc.l_plus,
    }
}

fn integrator_config(config: &RunConfig, stop_at_first_exit: bool) -> Result<IntegratorConfig> {
    let ib = &config.integrator;
    Ok(IntegratorConfig {
        dt: ib.dt,
        event_tol: ib.event_tol,
        h_tol: ib.h_tol,
        lambda_tol: ib.lambda_tol,
        max_events: ib.max_events,
        stop_at_first_exit,
    })
}

fn decimate(mut traj: HybridTrajectory, stride: usize) -> HybridTrajectory {
    if stride > 1 && traj.samples.len() > 2 {
        let last = traj.samples.len() - 1;
        let mut kept = Vec::with_capacity(last / stride + 2);
        for (i, s) in traj.samples.drain(..).enumerate() {
            if i % stride == 0 || i == last {
                kept.push(s);
            }
        }
        traj.samples = kept;
    }
    traj
}

pub fn execute(config: &RunConfig, root: &Path) -> Result<RunOutcome> {
    validate_config(config)?;
    let out_dir = root.join(&config.output.dir);
    std::fs::create_dir_all(&out_dir)?;
    let mut report = toml::Table::new();
    let mut files = Vec::new();

    match config.scenario {
        ScenarioKind::Friction | ScenarioKind::Twofold => {
            let (model, y0, mode0, lambda0, stop) = match config.scenario {
                ScenarioKind::Friction => {
                    let sc = config.friction.as_ref().unwrap();
                    (
                        build_friction_oscillator(friction_params(sc))?,
                        sc.y0.clone(),
                        ModeLabel::parse(&sc.mode0)?,
                        sc.lambda0,
                        false,
                    )
                }
                _ => {
                    let sc = config.twofold.as_ref().unwrap();
                    (
                        build_twofold(twofold_params(sc))?,
                        sc.y0.clone(),
                        ModeLabel::parse(&sc.mode0)?,
                        sc.lambda0,
                        sc.stop_at_exit,
                    )
                }
            };
            let icfg = integrator_config(config, stop)?;
            let span = (config.integrator.t_start, config.integrator.t_end);
            let traj = simulate(&model, &y0, mode0, lambda0, span, &icfg)?;
            let traj = decimate(traj, config.integrator.record_stride);
            write_out(&out_dir, "trajectory.csv", &io::trajectory_csv(&traj), &mut files)?;
            write_out(&out_dir, "events.jsonl", &io::events_jsonl(&traj), &mut files)?;
            report.insert("samples".into(), (traj.samples.len() as i64).into());
            report.insert("events".into(), (traj.events.len() as i64).into());
            report.insert(
                "ambiguous_switches".into(),
                (traj.uniqueness_flags.len() as i64).into(),
            );
            if let Some(s) = traj.samples.last() {
                report.insert("t_final".into(), s.t.into());
            }
        }
        ScenarioKind::LinearString => {
            let sc = config.linear_string.as_ref().unwrap();
            let modal = LinearStringModal::new(sc.c, sc.xi_star, sc.n_modes)?;
            let forcing = sc.forcing.build()?;
            let z0 = sc
                .z0
                .clone()
                .unwrap_or_else(|| vec![0.0; 2 * modal.n_modes]);
            let span = (config.integrator.t_start, config.integrator.t_end);
            let traj = modal.simulate(
                &z0,
                &forcing,
                span,
                config.integrator.dt,
                config.integrator.record_stride,
            )?;
            write_out(&out_dir, "trajectory.csv", &io::trajectory_csv(&traj), &mut files)?;
            write_out(&out_dir, "events.jsonl", &io::events_jsonl(&traj), &mut files)?;
            report.insert("samples".into(), (traj.samples.len() as i64).into());
            if let Some(s) = traj.samples.last() {
                report.insert(
                    "contact_displacement_final".into(),
                    modal.contact_displacement(&s.y).into(),
                );
            }
        }
        ScenarioKind::StringKernels => {
            let sc = config.string_kernels.as_ref().unwrap();
            let params = StringParams::new(sc.c, sc.beta, sc.nonlinearity, sc.xi_star, sc.n_modes)?;
            let red = StringReduction::new(params);
            let cbar = sc.cbar.unwrap_or(sc.c);
            let ts: Vec<f64> = (0..sc.points)
                .map(|i| {
                    sc.t_min + (sc.t_max - sc.t_min) * i as f64 / (sc.points - 1) as f64
                })
                .collect();
            let rows: Vec<io::KernelRow> = ts
                .par_iter()
                .map(|&t| -> Result<io::KernelRow> {
                    let ev = red.kernel_l0(cbar, t, sc.k_terms)?;
                    Ok(io::KernelRow {
                        t,
                        kernel: ev.value,
                        kernel_exp: red.kernel_l0_exp(cbar, t),
                        tail_bound: ev.tail_bound,
                    })
                })
                .collect::<Result<_>>()?;
            let slow = ts
                .iter()
                .filter(|&&t| sc.beta * t * (sc.k_terms as f64) < 5.0)
                .count();
            write_out(&out_dir, "kernels.csv", &io::kernels_csv(&rows), &mut files)?;
            report.insert("k_terms".into(), (sc.k_terms as i64).into());
            report.insert("lplus".into(), red.lplus(cbar).into());
            report.insert("sigma".into(), red.sigma(cbar).into());
            report.insert("lminus".into(), red.lminus(cbar).value.into());
            report.insert("slow_convergence_points".into(), (slow as i64).into());
            let max_tail = rows.iter().map(|r| r.tail_bound).fold(0.0, f64::max);
            report.insert("max_tail_bound".into(), max_tail.into());
        }
        ScenarioKind::NonlinearStringFrf => {
            let sc = config.nonlinear_string_frf.as_ref().unwrap();
            let params = StringParams::new(sc.c, sc.beta, sc.nonlinearity, sc.xi_star, sc.n_modes)?;
            let red = StringReduction::new(params);
            let omegas: Vec<f64> = if sc.points == 1 {
                vec![sc.omega_min]
            } else {
                (0..sc.points)
                    .map(|i| {
                        sc.omega_min
                            + (sc.omega_max - sc.omega_min) * i as f64 / (sc.points - 1) as f64
                    })
                    .collect()
            };
            let settings = SweepSettings {
                amplitude: sc.amplitude,
                dt: sc.dt,
                min_periods: sc.min_periods,
                max_periods: sc.max_periods,
                steady_rel: tol::SWEEP_STEADY_REL,
                steps_per_period_min: 200,
                steady_window: sc.steady_window,
                steady_span: sc.steady_span,
            };
            let backend = match sc.backend {
                SweepBackendConfig::Kappa => SweepBackend::Kappa {
                    lplus_scale: sc.lplus_scale,
                },
                SweepBackendConfig::FullMemory => SweepBackend::FullMemory,
            };
            let (up, down) = run_sweeps(&red, backend, &omegas, sc, &settings)?;
            write_out(&out_dir, "sweep.csv", &io::sweep_csv(&up, &down), &mut files)?;
            let flags = flag_bistability(&up, &down);
            report.insert(
                "bistable_omegas".into(),
                toml::Value::Array(flags.iter().map(|(w, _)| (*w).into()).collect()),
            );
            report.insert("points_up".into(), (up.len() as i64).into());
            report.insert("points_down".into(), (down.len() as i64).into());
        }
    }

    let manifest = io::manifest_toml(config, report)?;
    write_out(&out_dir, "manifest.toml", &manifest, &mut files)?;
    Ok(RunOutcome { out_dir, files })
}

fn run_sweeps(
    red: &StringReduction,
    backend: SweepBackend,
    omegas: &[f64],
    sc: &FrfConfig,
    settings: &SweepSettings,
) -> Result<(Vec<SweepPoint>, Vec<SweepPoint>)> {
    match sc.direction {
        SweepDirectionConfig::Up => Ok((
            frequency_sweep(red, backend, omegas, SweepDirection::Up, settings)?,
            Vec::new(),
        )),
        SweepDirectionConfig::Down => Ok((
            Vec::new(),
            frequency_sweep(red, backend, omegas, SweepDirection::Down, settings)?,
        )),
        SweepDirectionConfig::Both => {
            let (up, down) = rayon::join(
                || frequency_sweep(red, backend, omegas, SweepDirection::Up, settings),
                || frequency_sweep(red, backend, omegas, SweepDirection::Down, settings),
            );
            Ok((up?, down?))
        }
    }
}

fn write_out(dir: &Path, name: &str, contents: &str, files: &mut Vec<String>) -> Result<()> {
    io::write_file(&dir.join(name), contents)?;
    files.push(name.to_string());
    Ok(())
}

/// Write the machine-readable error record next to the outputs when the run
/// directory is known, mirroring what goes to stderr.
pub fn record_error(config: Option<&RunConfig>, root: &Path, err: &Error) {
    if let Some(cfg) = config {
        let dir = root.join(&cfg.output.dir);
        if dir.is_dir() {
            let _ = std::fs::write(dir.join("error.json"), io::error_record(err) + "\n");
        }
    }
}
