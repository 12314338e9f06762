//! Subcommand implementations.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use num_complex::Complex64;
use serde_json::{json, Value};
use spatial_arma::delannoy::{
    asymptotic_decay_diagnostic, counting_box, counting_function, delannoy_closed_a, delannoy_closed_b,
    delannoy_field, delannoy_recursive, jacobi_delannoy_identity, DelannoyParams,
};
use spatial_arma::existence::{check_causal, check_first_order_2d, check_linear_stationary, ExistenceReport};
use spatial_arma::export::{coefficients_csv, field_csv, field_pgm, fmt_f64};
use spatial_arma::simulator::{
    arma_residual, linear_field, nonunique_perturbation, parseval_tail, sample_noise, truncation_tail_bound,
};
use spatial_arma::spectral::{
    causal_alpha, classify_h2, default_h2_box, default_quadrature, fourier_psi, l2_spectral_sequence_from,
    zero_search_torus,
};
use spatial_arma::{arma_polys, CoefficientField, IndexBox, ModelSpec, NoiseSpec, SupportKind, TorusGrid};

use crate::config::Config;
use crate::{
    CheckArgs, CheckMode, Cli, CliError, CliResult, CoeffsArgs, Command, DelannoyAction, Method, SimulateArgs,
    SpectrumArgs,
};

pub fn dispatch(cli: Cli) -> CliResult<u8> {
    let cfg = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Check(a) => cmd_check(a, &cfg),
        Command::Coeffs(a) => cmd_coeffs(a, &cfg),
        Command::Simulate(a) => cmd_simulate(a, &cfg),
        Command::Delannoy(a) => cmd_delannoy(a.action),
        Command::Spectrum(a) => cmd_spectrum(a, &cfg),
    }
}

fn enum_from_config<T: ValueEnum>(cfg: &Config, key: &str) -> CliResult<Option<T>> {
    cfg.string(key)?
        .map(|s| T::from_str(&s, true).map_err(|e| CliError::usage(format!("config key {key:?}: {e}"))))
        .transpose()
}

fn load_model(flag: Option<PathBuf>, cfg: &Config) -> CliResult<ModelSpec> {
    let path = match flag {
        Some(p) => p,
        None => cfg.path("model")?.ok_or_else(|| CliError::usage("--model is required"))?,
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::usage(format!("cannot read model {}: {e}", path.display())))?;
    Ok(ModelSpec::from_json_str(&text)?)
}

fn noise_or_default(flag: Option<NoiseSpec>, cfg: &Config) -> CliResult<NoiseSpec> {
    Ok(match flag {
        Some(n) => n,
        None => cfg.noise("noise")?.unwrap_or_else(|| NoiseSpec::gaussian(1.0)),
    })
}

fn model_json(model: &ModelSpec) -> CliResult<Value> {
    Ok(serde_json::from_str(&model.to_json_string())?)
}

fn print_json(v: &Value) -> CliResult<()> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, v)?;
    writeln!(out)?;
    Ok(())
}

fn write_json(path: &Path, v: &Value) -> CliResult<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn run_check(model: &ModelSpec, noise: &NoiseSpec, mode: CheckMode) -> CliResult<ExistenceReport> {
    let has_ar = model.ar_terms().next().is_some();
    let first_order = model.first_order_params().filter(|_| has_ar);
    let mode = match mode {
        CheckMode::Auto if first_order.is_some() => CheckMode::FirstOrder,
        CheckMode::Auto if has_ar && model.is_causal_mode() => CheckMode::Causal,
        CheckMode::Auto => CheckMode::Linear,
        m => m,
    };
    Ok(match mode {
        CheckMode::FirstOrder => {
            let (a, b, c) = first_order.ok_or_else(|| {
                CliError::usage("first-order mode needs Phi = 1 - a z1 - b z2 - c z1 z2 with real weights and no MA part")
            })?;
            check_first_order_2d(a, b, c, noise)?
        }
        CheckMode::Causal => check_causal(model, noise)?,
        _ => check_linear_stationary(model, noise)?,
    })
}

fn cmd_check(a: CheckArgs, cfg: &Config) -> CliResult<u8> {
    let model = load_model(a.model, cfg)?;
    let noise = noise_or_default(a.noise, cfg)?;
    let mode = match a.mode {
        Some(m) => m,
        None => enum_from_config(cfg, "mode")?.unwrap_or(CheckMode::Auto),
    };
    let report = run_check(&model, &noise, mode)?;
    let mut v = report.to_json();
    v["model"] = model_json(&model)?;
    v["noise"] = json!(noise.to_string());
    print_json(&v)?;
    Ok(report.verdict.exit_code() as u8)
}

fn next_pow2(x: usize) -> usize {
    x.max(1).next_power_of_two()
}

/// Grid points per axis for the FFT method: a per-dimension default raised to
/// meet the aliasing preconditions.
fn fft_grid(model: &ModelSpec, box_size: usize, flag: Option<usize>) -> usize {
    if let Some(m) = flag {
        return m;
    }
    let d = model.dim();
    let base = match d {
        1 => 4096,
        2 => 256,
        3 => 64,
        _ => 16,
    };
    let (lo, hi) = model.shift_bounds();
    let reach = lo.iter().chain(&hi).map(|x| x.unsigned_abs() as usize).max().unwrap_or(0);
    base.max(next_pow2(4 * reach)).max(next_pow2(2 * (2 * box_size + 1)))
}

fn default_method(model: &ModelSpec) -> Method {
    if model.first_order_params().is_some() && model.ar_terms().next().is_some() {
        Method::Delannoy
    } else if model.is_causal_mode() {
        Method::Recursion
    } else {
        Method::Fft
    }
}

fn coefficients(model: &ModelSpec, method: Method, box_size: usize, grid: Option<usize>) -> CliResult<CoefficientField> {
    let d = model.dim();
    Ok(match method {
        Method::Recursion if model.is_trivial() => CoefficientField::from_entries(
            d,
            &[(vec![0; d], Complex64::new(1.0, 0.0))],
            SupportKind::CausalOrthant,
        )?
        .fit_decay(),
        Method::Recursion => causal_alpha(model, &vec![box_size; d])?,
        Method::Fft => {
            let m = fft_grid(model, box_size, grid);
            fourier_psi(model, &TorusGrid::cube(d, m)?, &IndexBox::symmetric(d, box_size))?
        }
        Method::Delannoy => {
            let (a, b, c) = model
                .first_order_params()
                .filter(|_| model.ar_terms().next().is_some())
                .ok_or_else(|| CliError::usage("the delannoy method needs a first-order planar model"))?;
            delannoy_field(DelannoyParams::new(a, b, c), box_size)
        }
    })
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::Fft => "fft",
        Method::Recursion => "recursion",
        Method::Delannoy => "delannoy",
    }
}

fn fit_json(method: Method, c: &CoefficientField) -> Value {
    json!({
        "method": method_name(method),
        "support_kind": c.support_kind(),
        "box": c.index_box(),
        "decay_fit": c.decay_fit(),
    })
}

fn cmd_coeffs(a: CoeffsArgs, cfg: &Config) -> CliResult<u8> {
    let model = load_model(a.model, cfg)?;
    let method = match a.method {
        Some(m) => m,
        None => enum_from_config(cfg, "method")?.unwrap_or_else(|| default_method(&model)),
    };
    let box_size = a.box_size.or(cfg.usize("box")?).unwrap_or(10);
    let grid = a.grid.or(cfg.usize("grid")?);
    let c = coefficients(&model, method, box_size, grid)?;
    match a.out.or(cfg.path("out")?) {
        Some(dir) => {
            std::fs::create_dir_all(&dir)?;
            let mut w = BufWriter::new(File::create(dir.join("coefficients.csv"))?);
            coefficients_csv(&mut w, &c)?;
            w.flush()?;
            write_json(&dir.join("decay_fit.json"), &fit_json(method, &c))?;
        }
        None => {
            let mut out = BufWriter::new(std::io::stdout().lock());
            coefficients_csv(&mut out, &c)?;
            out.flush()?;
        }
    }
    Ok(0)
}

fn cmd_simulate(a: SimulateArgs, cfg: &Config) -> CliResult<u8> {
    let model = load_model(a.model, cfg)?;
    let noise = noise_or_default(a.noise, cfg)?;
    let d = model.dim();
    let side = a.window.or(cfg.usize("window")?).unwrap_or(64);
    if side == 0 {
        return Err(CliError::usage("--window must be positive"));
    }
    let truncation = a.truncation.or(cfg.usize("truncation")?).unwrap_or(30);
    let box_size = a.box_size.or(cfg.usize("box")?).unwrap_or(truncation);
    let seed = a.seed.or(cfg.u64("seed")?).unwrap_or(0);
    let method = match a.method {
        Some(m) => m,
        None => enum_from_config(cfg, "method")?.unwrap_or_else(|| default_method(&model)),
    };
    let grid = a.grid.or(cfg.usize("grid")?);
    let out = a
        .out
        .or(cfg.path("out")?)
        .ok_or_else(|| CliError::usage("--out is required"))?;
    let lambda = match a.perturb {
        Some(l) => Some(l),
        None => cfg.floats("perturb")?,
    };
    let u = a.perturb_u.or(cfg.f64("perturb_u")?).unwrap_or(0.0);

    let window = IndexBox::new(vec![0; d], vec![side as i64 - 1; d])?;
    let coeffs = coefficients(&model, method, box_size, grid)?;
    let y = linear_field(&coeffs, &noise, &window, truncation, seed)?;
    let z = sample_noise(&noise, &window, seed);
    let residual = arma_residual(&model, &y, &z)?;
    let bound = truncation_tail_bound(&model, &coeffs, &noise, &window, truncation, seed)?;
    let parseval = parseval_tail(&coeffs, &noise, truncation);

    let mut report = json!({
        "model": model_json(&model)?,
        "noise": noise.to_string(),
        "seed": seed,
        "method": method_name(method),
        "window": window,
        "truncation": truncation,
        "coefficients": fit_json(method, &coeffs),
        "residual": residual,
        "tail_bound": bound,
        "within_bound": residual.max_abs <= bound.bound,
        "parseval_tail": parseval,
    });

    let field = match lambda {
        Some(lambda) => {
            let perturbed = nonunique_perturbation(&y, &lambda, u)?;
            let r2 = arma_residual(&model, &perturbed, &z)?;
            let deltas: Vec<f64> = r2
                .values
                .iter()
                .zip(&residual.values)
                .map(|(p, q)| (p - q).norm())
                .collect();
            let (phi, _) = arma_polys(&model);
            let symbol = phi.eval_torus(&lambda);
            report["perturbation"] = json!({
                "lambda": lambda,
                "u": u,
                "phi_at_lambda_abs": symbol.norm(),
                "residual": r2,
                "delta_min": deltas.iter().copied().fold(f64::INFINITY, f64::min),
                "delta_max": deltas.iter().copied().fold(0.0, f64::max),
            });
            perturbed
        }
        None => y,
    };

    std::fs::create_dir_all(&out)?;
    let mut w = BufWriter::new(File::create(out.join("field.csv"))?);
    field_csv(&mut w, &field)?;
    w.flush()?;
    if d == 2 {
        let mut w = BufWriter::new(File::create(out.join("field.pgm"))?);
        field_pgm(&mut w, &field)?;
        w.flush()?;
    }
    write_json(&out.join("residual.json"), &report)?;
    print_json(&json!({
        "residual_max_abs": residual.max_abs,
        "tail_bound": bound.bound,
        "within_bound": residual.max_abs <= bound.bound,
        "out": out.display().to_string(),
    }))?;
    Ok(0)
}

fn delannoy_params(phi: &[f64]) -> CliResult<DelannoyParams> {
    match phi {
        [a, b, c] => Ok(DelannoyParams::new(*a, *b, *c)),
        _ => Err(CliError::usage("--phi takes three comma-separated weights")),
    }
}

fn cmd_delannoy(action: DelannoyAction) -> CliResult<u8> {
    match action {
        DelannoyAction::Table { phi, max } => {
            let p = delannoy_params(&phi)?;
            let mut out = BufWriter::new(std::io::stdout().lock());
            writeln!(out, "n,k,recursive,closed_a,closed_b")?;
            for n in 0..=max as i64 {
                for k in 0..=max as i64 {
                    writeln!(
                        out,
                        "{n},{k},{},{},{}",
                        fmt_f64(delannoy_recursive(p, n, k)?),
                        fmt_f64(delannoy_closed_a(p, n, k)?),
                        fmt_f64(delannoy_closed_b(p, n, k)?)
                    )?;
                }
            }
            out.flush()?;
        }
        DelannoyAction::Identity { phi, beta, k } => {
            let p = delannoy_params(&phi)?;
            let mut rows = Vec::new();
            for b in 0..=beta {
                for j in 0..=k {
                    rows.push(jacobi_delannoy_identity(p, b, j)?);
                }
            }
            let max_abs_diff = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
            print_json(&json!({"phi": phi, "max_abs_diff": max_abs_diff, "rows": rows}))?;
        }
        DelannoyAction::Counting { phi, x } => {
            let p = delannoy_params(&phi)?;
            let mut rows = Vec::new();
            for &xi in &x {
                let b = counting_box(p, xi)?;
                let f = counting_function(p, xi, b)?;
                let l2 = xi.ln().powi(2);
                rows.push(json!({"x": xi, "box": b, "count": f, "log2_x": l2, "ratio": f as f64 / l2}));
            }
            print_json(&json!({"phi": phi, "rows": rows}))?;
        }
        DelannoyAction::Asymptotic { theta, beta, from, to } => {
            if from > to {
                return Err(CliError::usage("--from must not exceed --to"));
            }
            let t = asymptotic_decay_diagnostic(theta, beta, from..=to)?;
            print_json(&serde_json::to_value(t)?)?;
        }
    }
    Ok(0)
}

fn cmd_spectrum(a: SpectrumArgs, cfg: &Config) -> CliResult<u8> {
    let model = load_model(a.model, cfg)?;
    let d = model.dim();
    let (base0, levels0) = default_quadrature(d);
    let base = a.grid.or(cfg.usize("grid")?).unwrap_or(base0);
    let levels = a.levels.or(cfg.usize("levels")?).unwrap_or(levels0);
    let l2 = l2_spectral_sequence_from(&model, base, levels)?;
    let (phi, _) = arma_polys(&model);
    let zeros = zero_search_torus(&phi, 1e-9)?;
    let mut v = json!({
        "model": model_json(&model)?,
        "l2": l2,
        "torus_zeros": zeros,
    });
    if a.h2 {
        let alpha = causal_alpha(&model, &vec![default_h2_box(d); d])?;
        v["h2"] = serde_json::to_value(classify_h2(&alpha)?)?;
    }
    print_json(&v)?;
    Ok(0)
}
