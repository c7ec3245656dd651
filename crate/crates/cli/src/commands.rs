use std::fs;
use std::path::{Path, PathBuf};

use serde_json::json;

use muskat_core::dn::{dn_apply, solve_vw};
use muskat_core::evolution::{EvolutionConfig, Evolver};
use muskat_core::linear::{solve_t3, LinearOptions};
use muskat_core::norms::{
    dyadic_norm, dyadic_table, partition_residual, sobolev_norm, NormSpec, NormVariant,
};
use muskat_core::wave::{solve_traveling_wave, WaveConfig};
use muskat_core::SurfaceField;

use crate::config::{parse_config_file, Format, RunConfig};
use crate::records::{self, write_json, write_text};
use crate::selftest::run_selftest;
use crate::{Cli, CliError, Command, RunArgs};

fn prepare(args: &RunArgs) -> Result<(RunConfig, PathBuf), CliError> {
    if !args.config.is_file() {
        return Err(CliError::Usage(format!(
            "config file {} does not exist",
            args.config.display()
        )));
    }
    let cfg = parse_config_file(&args.config)?;
    let out = args.out.clone().unwrap_or_else(|| cfg.output.directory.clone());
    ensure_dir(&out)?;
    Ok((cfg, out))
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn in_pool<T: Send>(threads: usize, job: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start thread pool: {e}")))?;
    Ok(pool.install(job))
}

fn wave_config(cfg: &RunConfig) -> WaveConfig {
    let mut w = WaveConfig::new(cfg.solver.gamma, cfg.phi0.clone());
    w.s = cfg.solver.s;
    w.tol = cfg.solver.tol;
    w.max_iter = cfg.solver.max_iter;
    w.dn = cfg.solver.dn_options();
    w
}

pub fn run_parsed(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Tw(a) => {
            let (cfg, out) = prepare(&a.run)?;
            in_pool(cfg.solver.threads, || tw(&cfg, &out))?
        }
        Command::Evolve(a) => {
            let (cfg, out) = prepare(a)?;
            in_pool(cfg.solver.threads, || evolve(&cfg, &out))?
        }
        Command::Linear(a) => {
            let (cfg, out) = prepare(&a.run)?;
            let data = a
                .data
                .clone()
                .or_else(|| cfg.linear_data.clone())
                .ok_or_else(|| CliError::Usage("linear needs `--data` or `[linear] data`".into()))?;
            in_pool(cfg.solver.threads, || linear(&cfg, &data, &out))?
        }
        Command::Dn(a) => {
            let selftest = a.selftest || a.action.is_some();
            let cfg_path = a.config.clone();
            match (selftest, cfg_path) {
                (true, path) => {
                    let (seed, threads, out) = match path {
                        Some(p) => {
                            let (cfg, out) = prepare(&RunArgs {
                                config: p,
                                out: a.out.clone(),
                            })?;
                            (cfg.seed, cfg.solver.threads, Some(out))
                        }
                        None => {
                            if let Some(o) = &a.out {
                                ensure_dir(o)?;
                            }
                            (1, 0, a.out.clone())
                        }
                    };
                    in_pool(threads, || selftest_cmd(seed, out.as_deref()))?
                }
                (false, Some(p)) => {
                    let (cfg, out) = prepare(&RunArgs {
                        config: p,
                        out: a.out.clone(),
                    })?;
                    in_pool(cfg.solver.threads, || dn(&cfg, &out))?
                }
                (false, None) => Err(CliError::Usage("dn needs `--config PATH` or `--selftest`".into())),
            }
        }
        Command::Norms(a) => {
            let (cfg, out) = prepare(a)?;
            norms(&cfg, &out)
        }
    }
}

fn tw(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let sol = solve_traveling_wave(&wave_config(cfg))?;
    if cfg.output.wants(Format::Json) {
        write_json(out, "traveling_wave.json", &records::traveling_wave_value(&sol, cfg.solver.gamma, cfg.solver.s))?;
    }
    if cfg.output.wants(Format::Csv) {
        write_text(out, "history.csv", &records::history_csv(&sol))?;
    }
    println!(
        "traveling wave: {} iterations, contraction {:.3e}, steady residual {:.3e}",
        sol.history.len(),
        sol.contraction_estimate,
        sol.steady_residual
    );
    Ok(())
}

fn evolve(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let f0 = cfg
        .evolution
        .f0
        .clone()
        .ok_or_else(|| CliError::Usage("evolve needs `[evolution] f0`".into()))?;
    let eta_star = match &cfg.evolution.eta_star {
        Some(e) => e.clone(),
        None => solve_traveling_wave(&wave_config(cfg))?.eta_star,
    };
    let mut ec = EvolutionConfig::new(cfg.solver.gamma, cfg.phi0.clone(), eta_star, f0);
    ec.dt = cfg.evolution.dt;
    ec.t_final = cfg.evolution.t_final;
    ec.integrator = cfg.evolution.integrator;
    ec.s = cfg.solver.s;
    ec.dn = cfg.solver.dn_options();
    ec.nonlinear = cfg.evolution.nonlinear;
    let ev = Evolver::new(ec)?;
    let rep = ev.evolve()?;
    if cfg.output.wants(Format::Json) {
        write_json(out, "decay_report.json", &records::decay_value(&rep, ev.dn_sweeps()))?;
    }
    if cfg.output.wants(Format::Csv) {
        write_text(out, "evolution.csv", &records::decay_csv(&rep))?;
    }
    println!(
        "evolution: {} steps, final norm {:.3e}, fitted rate {}, monotone {}",
        rep.times.len() - 1,
        rep.hs_norms.last().copied().unwrap_or(0.0),
        rep.fitted_rate.map_or("n/a".to_string(), |r| format!("{r:.6}")),
        rep.monotone
    );
    Ok(())
}

fn linear(cfg: &RunConfig, data_path: &Path, out: &Path) -> Result<(), CliError> {
    let text = fs::read_to_string(data_path).map_err(|source| CliError::Io {
        path: data_path.to_path_buf(),
        source,
    })?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(muskat_core::Error::from)?;
    let data = records::linear_data_from_value(value)?;
    let opts = LinearOptions {
        gamma: cfg.solver.gamma,
        tol: cfg.solver.tol,
        residual_tol: None,
    };
    let sol = solve_t3(&data, &opts)?;
    if cfg.output.wants(Format::Json) {
        write_json(out, "linear_solution.json", &records::linear_solution_value(&sol, opts.gamma))?;
    }
    if cfg.output.wants(Format::Csv) {
        write_text(out, "residuals.csv", &records::residuals_csv(&sol))?;
    }
    println!("linear solve: max residual {:.3e}", sol.residuals.max());
    Ok(())
}

fn selftest_cmd(seed: u64, out: Option<&Path>) -> Result<(), CliError> {
    let report = run_selftest(seed)?;
    let text = serde_json::to_string_pretty(&report).expect("plain data serializes");
    println!("{text}");
    if let Some(dir) = out {
        write_text(dir, "dn_selftest.json", &(text + "\n"))?;
    }
    if report.passed {
        Ok(())
    } else {
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name).collect();
        Err(CliError::SelfTest(failed.join(", ")))
    }
}

fn dn(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let f = cfg
        .dn_f
        .clone()
        .ok_or_else(|| CliError::Usage("dn needs `[dn] f`".into()))?;
    let eta = cfg.dn_eta.clone().unwrap_or_else(|| SurfaceField::zeros(cfg.spec));
    let opts = cfg.solver.dn_options();
    let pair = solve_vw(&eta, &f, &opts)?;
    let g = dn_apply(&eta, &f, &opts)?;
    if cfg.output.wants(Format::Json) {
        let doc = json!({
            "iterations": pair.iterations,
            "contraction_factor": pair.contraction_factor(),
            "g": records::surface_value(&g),
        });
        write_json(out, "dn.json", &doc)?;
    }
    if cfg.output.wants(Format::Csv) {
        write_text(out, "dn_steps.csv", &records::steps_csv(&pair.step_history))?;
    }
    println!("dn: {} sweeps, contraction {:.3e}", pair.iterations, pair.contraction_factor());
    Ok(())
}

fn norms(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let f = cfg.norms_field.clone().unwrap_or_else(|| cfg.phi0.clone());
    let s = cfg.norms_s;
    let table = dyadic_table(&f);
    let aniso = NormSpec::new(s, NormVariant::AnisoWeightDiag, 2.0)?.surface(&f);
    if cfg.output.wants(Format::Json) {
        let doc = json!({
            "s": s,
            "sobolev": sobolev_norm(&f, s),
            "dyadic": dyadic_norm(&f, s, false),
            "dyadic_sharp": dyadic_norm(&f, s, true),
            "aniso_weight_diag": aniso,
            "partition_residual": partition_residual(&f),
        });
        write_json(out, "norms.json", &doc)?;
    }
    if cfg.output.wants(Format::Csv) {
        write_text(out, "norms.csv", &records::dyadic_csv(&table))?;
    }
    println!("norms: {} dyadic blocks", table.len());
    Ok(())
}
