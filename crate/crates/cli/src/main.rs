use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qmle_cli::certify::{certify_poly, PolySpec};
use qmle_cli::config::{assignment, read_file, resolve, SEED_ENV};
use qmle_cli::error::{EXIT_CONFIG, EXIT_OK};
use qmle_cli::run::{estimate, scale_sweep, write_csv};
use qmle_cli::verify::{backend_plans, compare_backends, verify};
use qmle_cli::{CliError, Config};
use serde::Serialize;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "qmle", version, about = "Multi-level quantum entropy estimation, simulated classically")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Global {
    /// JSON config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Set any config key, e.g. `--set pipeline.perturb_map=true`.
    #[arg(long = "set", value_name = "KEY=JSON", global = true)]
    set: Vec<String>,
    #[arg(long, global = true)]
    eps: Option<f64>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Overrides both the config and the QMLE_SEED variable.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, value_enum, global = true)]
    functional: Option<Functional>,
    #[arg(long, global = true)]
    q: Option<f64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, value_enum, global = true)]
    dist: Option<DistKind>,
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Zipf exponent.
    #[arg(long, global = true)]
    s: Option<f64>,
    /// Probability file, one value per line.
    #[arg(long, global = true)]
    path: Option<PathBuf>,
    #[arg(long, value_enum, global = true)]
    backend: Option<BackendKind>,
    /// Dense backend: draw a random purification from this seed.
    #[arg(long, global = true)]
    purification_seed: Option<u64>,
    #[arg(long, value_enum, global = true)]
    profile: Option<ProfileKind>,
    /// Seed for the adversarial profile.
    #[arg(long, global = true)]
    profile_seed: Option<u64>,
    #[arg(long, global = true)]
    perturb_map: bool,
    /// Write JSON here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Functional {
    Tsallis,
    Shannon,
    Renyi,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistKind {
    Uniform,
    Zipf,
    File,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Block,
    Dense,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProfileKind {
    Ideal,
    Smooth,
    Adversarial,
}

#[derive(Subcommand)]
enum Cmd {
    /// Repeat the estimator and report accuracy and query counts.
    Estimate,
    /// Sweep eps and n, fitting log queries against 1/eps and n.
    ScaleSweep {
        /// Comma-separated eps values.
        #[arg(long, value_delimiter = ',')]
        sweep_eps: Vec<f64>,
        /// Comma-separated n values.
        #[arg(long, value_delimiter = ',')]
        sweep_n: Vec<usize>,
        #[arg(long)]
        seeds: Option<u64>,
        /// Per-seed rows as CSV.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Fits and per-point means as JSON.
        #[arg(long)]
        fit_json: Option<PathBuf>,
    },
    /// Check plan conditions, error budgets, certificates and backend agreement.
    Verify {
        /// Halve every level bound first; the checks should then fail.
        #[arg(long)]
        sabotage_bounds: bool,
    },
    /// Build one polynomial and print it with its certificate.
    CertifyPoly {
        #[arg(long, value_enum)]
        family: Family,
        #[arg(long)]
        c: Option<f64>,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        nu: Option<f64>,
        #[arg(long)]
        beta: Option<f64>,
        #[arg(long)]
        j: Option<u32>,
        /// Target sup error.
        #[arg(long)]
        tol: f64,
    },
    /// Compare block and dense amplitudes on random small distributions.
    CompareBackends {
        #[arg(long)]
        cases: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    NegPower,
    PosPower,
    SqrtLog,
}

fn need<T>(v: Option<T>, name: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Config(format!("--{name} is required for this family")))
}

impl Global {
    fn overrides(&self) -> Result<Vec<Value>, CliError> {
        let mut o = Vec::new();
        if let Some(f) = self.functional {
            o.push(match f {
                Functional::Tsallis => json!({ "functional": { "kind": "tsallis", "q": self.q.unwrap_or(2.0) } }),
                Functional::Shannon => json!({ "functional": { "kind": "shannon" } }),
                Functional::Renyi => json!({ "functional": { "kind": "renyi", "alpha": need(self.alpha, "alpha")? } }),
            });
        } else {
            if let Some(q) = self.q {
                o.push(json!({ "functional": { "kind": "tsallis", "q": q } }));
            }
            if let Some(a) = self.alpha {
                o.push(json!({ "functional": { "kind": "renyi", "alpha": a } }));
            }
        }
        match self.dist {
            Some(DistKind::Uniform) => o.push(json!({ "distribution": { "kind": "uniform", "n": need(self.n, "n")? } })),
            Some(DistKind::Zipf) => o.push(json!({ "distribution": {
                "kind": "zipf", "n": need(self.n, "n")?, "s": self.s.unwrap_or(1.0) } })),
            Some(DistKind::File) => o.push(json!({ "distribution": { "kind": "file", "path": need(self.path.clone(), "path")? } })),
            None => {
                if let Some(n) = self.n {
                    o.push(json!({ "distribution": { "n": n } }));
                }
                if let Some(s) = self.s {
                    o.push(json!({ "distribution": { "s": s } }));
                }
            }
        }
        match (self.backend, self.purification_seed) {
            (Some(BackendKind::Block), _) => o.push(json!({ "backend": { "kind": "block" } })),
            (Some(BackendKind::Dense), None) => o.push(json!({ "backend": { "kind": "dense", "purification": "fixed" } })),
            (_, Some(s)) => o.push(json!({ "backend": { "kind": "dense", "purification": { "random_seeded": s } } })),
            (None, None) => {}
        }
        match self.profile {
            Some(ProfileKind::Ideal) => o.push(json!({ "pipeline": { "profile": { "kind": "ideal" } } })),
            Some(ProfileKind::Smooth) => o.push(json!({ "pipeline": { "profile": { "kind": "smooth" } } })),
            Some(ProfileKind::Adversarial) => o.push(json!({ "pipeline": { "profile": {
                "kind": "adversarial", "seed": self.profile_seed.unwrap_or(0) } } })),
            None => {}
        }
        if self.perturb_map {
            o.push(json!({ "pipeline": { "perturb_map": true } }));
        }
        if let Some(e) = self.eps {
            o.push(json!({ "eps": e }));
        }
        if let Some(t) = self.trials {
            o.push(json!({ "trials": t }));
        }
        for s in &self.set {
            o.push(assignment(s)?);
        }
        // The seed flag outranks everything, `--set seed=` included.
        if let Some(s) = self.seed {
            o.push(json!({ "seed": s }));
        }
        Ok(o)
    }

    fn config(&self, extra: Vec<Value>) -> Result<Config, CliError> {
        let file = self.config.as_deref().map(read_file).transpose()?;
        let env_seed = std::env::var(SEED_ENV).ok();
        let mut o = self.overrides()?;
        // Subcommand flags sit between `--set` and `--seed`.
        let seed = self.seed.map(|_| o.pop().expect("seed override"));
        o.extend(extra);
        o.extend(seed);
        resolve(file, env_seed.as_deref(), o)
    }
}

fn emit<T: Serialize>(value: &T, out: Option<&PathBuf>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).expect("outputs serialize");
    match out {
        Some(path) => std::fs::write(path, text + "\n")?,
        None => {
            let mut w = io::stdout().lock();
            writeln!(w, "{text}")?;
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let g = &cli.global;
    match cli.cmd {
        Cmd::Estimate => emit(&estimate(&g.config(Vec::new())?)?, g.out.as_ref()),
        Cmd::ScaleSweep { sweep_eps, sweep_n, seeds, csv, fit_json } => {
            let mut extra = Vec::new();
            if !sweep_eps.is_empty() {
                extra.push(json!({ "sweep": { "eps": sweep_eps } }));
            }
            if !sweep_n.is_empty() {
                extra.push(json!({ "sweep": { "n": sweep_n } }));
            }
            if let Some(s) = seeds {
                extra.push(json!({ "sweep": { "seeds": s } }));
            }
            let out = scale_sweep(&g.config(extra)?)?;
            if let Some(path) = csv {
                write_csv(&out.rows, BufWriter::new(File::create(path)?))?;
            }
            if let Some(path) = fit_json {
                emit(&out, Some(&path))?;
            }
            emit(&out, g.out.as_ref())
        }
        Cmd::Verify { sabotage_bounds } => {
            let extra = if sabotage_bounds { vec![json!({ "verify": { "sabotage_bounds": true } })] } else { Vec::new() };
            let cfg = config_or_default_eps(g, extra)?;
            let out = verify(&cfg)?;
            emit(&out, g.out.as_ref())?;
            if out.passed {
                Ok(())
            } else {
                let failed = out.plans.iter().filter(|p| !p.passed).count();
                Err(CliError::ChecksFailed(format!(
                    "{failed} of {} plans failed; backend comparison {}",
                    out.plans.len(),
                    if out.backends.passed { "passed" } else { "failed" }
                )))
            }
        }
        Cmd::CertifyPoly { family, c, delta, nu, beta, j, tol } => {
            let spec = match family {
                Family::NegPower => PolySpec::NegPower { c: need(c, "c")?, delta: need(delta, "delta")?, eps: tol },
                Family::PosPower => {
                    PolySpec::PosPower { c: need(c, "c")?, nu: need(nu, "nu")?, beta: need(beta, "beta")?, eta: tol }
                }
                Family::SqrtLog => PolySpec::SqrtLog { j: need(j, "j")?, tol },
            };
            emit(&certify_poly(spec)?, g.out.as_ref())
        }
        Cmd::CompareBackends { cases } => {
            let extra = cases.map(|c| json!({ "verify": { "backend_cases": c } })).into_iter().collect();
            let cfg = config_or_default_eps(g, extra)?;
            let out = compare_backends(cfg.verify.backend_cases, cfg.seed, &backend_plans(cfg.eps)?, &cfg.pipeline)?;
            emit(&out, g.out.as_ref())?;
            if out.passed {
                Ok(())
            } else {
                Err(CliError::ChecksFailed(format!("max backend gap {:e} above {:e}", out.max_diff, out.tolerance)))
            }
        }
    }
}

/// Verification runs its own eps grid, so the top-level eps may be omitted.
fn config_or_default_eps(g: &Global, extra: Vec<Value>) -> Result<Config, CliError> {
    let mut extra = extra;
    extra.insert(0, json!({ "eps": 0.2 }));
    let has_eps = g.eps.is_some()
        || g.set.iter().any(|s| s.starts_with("eps="))
        || g.config.as_deref().map(read_file).transpose()?.is_some_and(|v| v.get("eps").is_some());
    if has_eps {
        extra.remove(0);
    }
    g.config(extra)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
