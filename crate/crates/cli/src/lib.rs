//! Command-line front end: argument parsing, dispatch and output rendering.
//!
//! Exit status: 0 success, 1 audit failed, 2 usage error, 3 invalid domain
//! or parameters, 4 numerical non-convergence.

#![cfg_attr(test, allow(clippy::excessive_precision))]

pub mod args;
pub mod output;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde_json::json;

use bgauss::experiment::{run_experiment, ExperimentRow};
use bgauss::graph::query_sensitivity;
use bgauss::multivariate::{calibrate_multi, release_multi};
use bgauss::univariate::{self, calibrate, effective_shift};
use bgauss::verify::{audit_multi, audit_uni, AuditReport};
use bgauss::{BoxDomain, Error, Interval, PrivacySpec};

pub use args::{parse_args, Command, OutputFormat, RunConfig, UsageError};
use output::{indexed, num, Rendered};

pub const EXIT_OK: i32 = 0;
pub const EXIT_AUDIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

const DEFAULT_GRID_UNI: usize = 200;
const DEFAULT_GRID_BOX: usize = 60;

/// What a run produced. `stderr` is empty whenever `code` is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn exit_code_for(e: &Error) -> i32 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_DOMAIN
    }
}

pub fn run(config: &RunConfig) -> Outcome {
    match dispatch(&config.command) {
        Ok((rendered, code)) => Outcome {
            code,
            stdout: rendered.render(config.format),
            stderr: String::new(),
        },
        Err(e) => Outcome {
            code: exit_code_for(&e),
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        },
    }
}

/// Parse and run in one step, as the binary does.
pub fn main_with_args<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match parse_args(argv) {
        Ok(cfg) => run(&cfg),
        Err(e) if e.help => Outcome {
            code: EXIT_OK,
            stdout: e.message,
            stderr: String::new(),
        },
        Err(e) => Outcome {
            code: EXIT_USAGE,
            stdout: String::new(),
            stderr: e.message,
        },
    }
}

fn dispatch(cmd: &Command) -> bgauss::Result<(Rendered, i32)> {
    match cmd {
        Command::CalibrateUni {
            a,
            b,
            epsilon,
            delta_q,
        } => calibrate_uni_cmd(*a, *b, *epsilon, *delta_q).map(|r| (r, EXIT_OK)),
        Command::CalibrateMulti {
            a,
            b,
            epsilon,
            delta_q,
        } => calibrate_multi_cmd(a, b, *epsilon, *delta_q).map(|r| (r, EXIT_OK)),
        Command::Sample {
            a,
            b,
            epsilon,
            delta_q,
            s,
            seed,
            count,
        } => sample_cmd(a, b, *epsilon, *delta_q, s, *seed, *count).map(|r| (r, EXIT_OK)),
        Command::Audit {
            a,
            b,
            epsilon,
            delta_q,
            grid_n,
            sigma,
        } => audit_cmd(a, b, *epsilon, *delta_q, *grid_n, *sigma),
        Command::Experiment { eps_list, k } => experiment_cmd(eps_list, *k).map(|r| (r, EXIT_OK)),
    }
}

fn width_warning(d: &Interval, spec: &PrivacySpec) -> Vec<String> {
    if spec.delta_q() > d.width() {
        vec![format!(
            "delta_q = {} exceeds the domain width {}; the adjacency shift is clamped to {}",
            spec.delta_q(),
            d.width(),
            effective_shift(d, spec)
        )]
    } else {
        Vec::new()
    }
}

fn calibrate_uni_cmd(a: f64, b: f64, epsilon: f64, delta_q: f64) -> bgauss::Result<Rendered> {
    let d = Interval::new(a, b)?;
    let spec = PrivacySpec::new(epsilon, delta_q)?;
    let cal = calibrate(&d, &spec)?;
    let warnings = width_warning(&d, &spec);
    let json = json!({
        "command": "calibrate-uni",
        "domain": {"a": a, "b": b},
        "epsilon": epsilon,
        "delta_q": delta_q,
        "effective_shift": effective_shift(&d, &spec),
        "sigma_star_sq": cal.sigma_star_sq,
        "sigma_star": cal.sigma_star(),
        "sigma0_sq": cal.sigma0_sq,
        "delta_c": univariate::delta_c(cal.sigma_star(), &d, &spec)?,
        "residual": cal.residual,
        "iterations": cal.iterations,
        "bracket_width": cal.bracket_width,
        "warnings": warnings,
    });
    let header = [
        "a",
        "b",
        "epsilon",
        "delta_q",
        "sigma_star_sq",
        "sigma0_sq",
        "residual",
        "iterations",
    ];
    let row = vec![
        num(a),
        num(b),
        num(epsilon),
        num(delta_q),
        num(cal.sigma_star_sq),
        num(cal.sigma0_sq),
        num(cal.residual),
        cal.iterations.to_string(),
    ];
    Ok(Rendered {
        json,
        header: header.iter().map(|s| s.to_string()).collect(),
        rows: vec![row],
        warnings,
    })
}

fn calibrate_multi_cmd(
    a: &[f64],
    b: &[f64],
    epsilon: f64,
    delta_q: f64,
) -> bgauss::Result<Rendered> {
    let domain = BoxDomain::new(a.to_vec(), b.to_vec())?;
    let spec = PrivacySpec::new(epsilon, delta_q)?;
    let cal = calibrate_multi(&domain, &spec)?;
    let m = domain.dim();
    let json = json!({
        "command": "calibrate-multi",
        "domain": {"a": a, "b": b},
        "epsilon": epsilon,
        "delta_q": delta_q,
        "sigma_star_sq": cal.sigma_star_sq,
        "sigma_star": cal.sigma_star(),
        "sigma0_sq": cal.sigma0_sq,
        "c_star": cal.c_star.c,
        "c_star_norm": cal.c_star.norm2,
        "residual": cal.residual,
        "iterations": cal.iterations,
        "bracket_width": cal.bracket_width,
        "inner_solver_stats": {
            "kkt_residual": cal.inner_solver_stats.kkt_residual,
            "ascent_iterations": cal.inner_solver_stats.ascent_iterations,
            "projection_sweeps": cal.inner_solver_stats.projection_sweeps,
        },
        "warnings": Vec::<String>::new(),
    });
    let mut header: Vec<String> = [
        "epsilon",
        "delta_q",
        "sigma_star_sq",
        "sigma0_sq",
        "residual",
        "iterations",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend(indexed("c_star_", m));
    let mut row = vec![
        num(epsilon),
        num(delta_q),
        num(cal.sigma_star_sq),
        num(cal.sigma0_sq),
        num(cal.residual),
        cal.iterations.to_string(),
    ];
    row.extend(cal.c_star.c.iter().map(|&v| num(v)));
    Ok(Rendered {
        json,
        header,
        rows: vec![row],
        warnings: Vec::new(),
    })
}

fn sample_cmd(
    a: &[f64],
    b: &[f64],
    epsilon: f64,
    delta_q: f64,
    s: &[f64],
    seed: u64,
    count: usize,
) -> bgauss::Result<Rendered> {
    let spec = PrivacySpec::new(epsilon, delta_q)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let m = a.len();
    let (sigma_star_sq, draws, warnings): (f64, Vec<Vec<f64>>, Vec<String>) = if m == 1 {
        let d = Interval::new(a[0], b[0])?;
        if !d.contains(s[0]) {
            return Err(Error::QueryValueOutsideDomain { value: s.to_vec() });
        }
        let cal = calibrate(&d, &spec)?;
        let draws = (0..count)
            .map(|_| univariate::release(s[0], &d, &cal, &mut rng).map(|z| vec![z]))
            .collect::<bgauss::Result<_>>()?;
        (cal.sigma_star_sq, draws, width_warning(&d, &spec))
    } else {
        let domain = BoxDomain::new(a.to_vec(), b.to_vec())?;
        if !domain.contains(s) {
            return Err(Error::QueryValueOutsideDomain { value: s.to_vec() });
        }
        let cal = calibrate_multi(&domain, &spec)?;
        let draws = (0..count)
            .map(|_| release_multi(s, &domain, &cal, &mut rng))
            .collect::<bgauss::Result<_>>()?;
        (cal.sigma_star_sq, draws, Vec::new())
    };
    let samples: Vec<serde_json::Value> = draws
        .iter()
        .map(|z| if m == 1 { json!(z[0]) } else { json!(z) })
        .collect();
    let json = json!({
        "command": "sample",
        "domain": {"a": a, "b": b},
        "epsilon": epsilon,
        "delta_q": delta_q,
        "s": s,
        "seed": seed,
        "count": count,
        "sigma_star_sq": sigma_star_sq,
        "samples": samples,
        "warnings": warnings,
    });
    Ok(Rendered {
        json,
        header: indexed("z", m).collect(),
        rows: draws
            .iter()
            .map(|z| z.iter().map(|&v| num(v)).collect())
            .collect(),
        warnings,
    })
}

fn audit_cmd(
    a: &[f64],
    b: &[f64],
    epsilon: f64,
    delta_q: f64,
    grid_n: Option<usize>,
    sigma: Option<f64>,
) -> bgauss::Result<(Rendered, i32)> {
    let spec = PrivacySpec::new(epsilon, delta_q)?;
    let report: AuditReport = if a.len() == 1 {
        let d = Interval::new(a[0], b[0])?;
        let sigma = match sigma {
            Some(s) => s,
            None => calibrate(&d, &spec)?.sigma_star(),
        };
        audit_uni(sigma, &d, &spec, grid_n.unwrap_or(DEFAULT_GRID_UNI))?
    } else {
        let domain = BoxDomain::new(a.to_vec(), b.to_vec())?;
        if domain.dim() > bgauss::verify::MAX_AUDIT_DIM {
            return Err(Error::DimensionTooLarge {
                m: domain.dim(),
                max: bgauss::verify::MAX_AUDIT_DIM,
            });
        }
        let sigma = match sigma {
            Some(s) => s,
            None => calibrate_multi(&domain, &spec)?.sigma_star(),
        };
        audit_multi(sigma, &domain, &spec, grid_n.unwrap_or(DEFAULT_GRID_BOX))?
    };
    let m = report.argmax_point.s.len();
    let mut header: Vec<String> = ["sup_log_ratio", "epsilon_target", "passed"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    header.extend(indexed("s_", m));
    header.extend(indexed("s_prime_", m));
    header.extend(indexed("z_", m));
    header.extend(indexed("grid_", m));
    let p = &report.argmax_point;
    let mut row = vec![
        num(report.sup_log_ratio),
        num(report.epsilon_target),
        report.passed.to_string(),
    ];
    for v in p.s.iter().chain(&p.s_prime).chain(&p.z) {
        row.push(num(*v));
    }
    row.extend(report.grid_resolution.iter().map(|g| g.to_string()));
    let code = if report.passed {
        EXIT_OK
    } else {
        EXIT_AUDIT_FAILED
    };
    let json = serde_json::to_value(&report).expect("report serializes");
    Ok((
        Rendered {
            json,
            header,
            rows: vec![row],
            warnings: Vec::new(),
        },
        code,
    ))
}

fn experiment_cmd(eps_list: &[f64], k: u32) -> bgauss::Result<Rendered> {
    let rows: Vec<ExperimentRow> = run_experiment(eps_list, k)?;
    let json = json!({
        "command": "experiment",
        "k": k,
        "delta_q": query_sensitivity(k),
        "rows": rows,
    });
    Ok(Rendered {
        json,
        header: ["epsilon", "sigma_gg_sq", "sigma_bg_sq", "percent_reduction"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    num(r.epsilon),
                    num(r.sigma_gg_sq),
                    num(r.sigma_bg_sq),
                    num(r.percent_reduction),
                ]
            })
            .collect(),
        warnings: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn go(s: &str) -> Outcome {
        main_with_args(std::iter::once("bgauss").chain(s.split_whitespace()))
    }

    #[test]
    fn calibrate_uni_json() {
        let o = go("calibrate-uni --a 0 --b 1 --eps 1 --dq 0.5");
        assert_eq!(o.code, 0, "{}", o.stderr);
        assert!(o.stderr.is_empty());
        let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
        let s2 = v["sigma_star_sq"].as_f64().unwrap();
        assert!((s2 - 0.73653399751615789765).abs() < 1e-10);
        assert!(v["warnings"].as_array().unwrap().is_empty());
    }

    #[test]
    fn wide_sensitivity_warns_in_output() {
        let o = go("calibrate-uni --a 0 --b 1 --eps 1 --dq 2");
        assert_eq!(o.code, 0);
        assert!(o.stderr.is_empty());
        let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
        assert_eq!(v["warnings"].as_array().unwrap().len(), 1);
    }

    #[test]
    fn domain_errors_exit_three() {
        assert_eq!(
            go("calibrate-uni --a 1 --b 0 --eps 1 --dq 0.5").code,
            EXIT_DOMAIN
        );
        assert_eq!(
            go("sample --a 0 --b 1 --eps 1 --dq 0.5 --s 2 --seed 1").code,
            EXIT_DOMAIN
        );
        assert_eq!(
            go("audit --a 0,0,0,0 --b 1,1,1,1 --eps 1 --dq 0.5 --grid-n 16").code,
            EXIT_DOMAIN
        );
    }

    #[test]
    fn numerical_errors_exit_four() {
        let e = Error::NonConvergence {
            what: "x",
            iterations: 1,
            residual: 1.0,
        };
        assert_eq!(exit_code_for(&e), EXIT_NUMERICAL);
        assert_eq!(
            exit_code_for(&Error::InternalBracketError("x".into())),
            EXIT_NUMERICAL
        );
        assert_eq!(exit_code_for(&Error::NonPositiveSigma(0.0)), EXIT_DOMAIN);
    }

    #[test]
    fn audit_exit_codes() {
        let o = go("audit --a 0 --b 1 --eps 1 --dq 0.5 --grid-n 40");
        assert_eq!(o.code, EXIT_OK);
        let v: serde_json::Value = serde_json::from_str(&o.stdout).unwrap();
        assert_eq!(v["passed"], json!(true));
        let o = go("audit --a 0 --b 1 --eps 0.1 --dq 0.5 --grid-n 40 --sigma 0.3");
        assert_eq!(o.code, EXIT_AUDIT_FAILED);
        assert!(o.stderr.is_empty());
    }

    #[test]
    fn sample_replays_and_formats() {
        let cmd = "sample --a 0,1 --b 10,9 --eps 1 --dq 4.47213595499958 --s 5,5 --seed 42 --count 5 --format csv";
        let o = go(cmd);
        assert_eq!(o.code, 0, "{}", o.stderr);
        assert_eq!(go(cmd), o);
        let lines: Vec<&str> = o.stdout.lines().collect();
        assert_eq!(lines[0], "z0,z1");
        assert_eq!(lines.len(), 6);
        let other = go(&cmd.replace("--seed 42", "--seed 43"));
        assert_ne!(other.stdout, o.stdout);
    }

    #[test]
    fn table_format_lists_fields() {
        let o = go("calibrate-uni --a 0 --b 1 --eps 1 --dq 0.5 --format table");
        assert!(o.stdout.lines().any(|l| l.starts_with("sigma_star_sq")));
    }
}
