//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

use std::f64::consts::PI;
use std::process::Command;
use std::time::{Duration, Instant};

use qmle_cli::config::{assignment, resolve};
use qmle_cli::run::{estimate, scale_sweep, write_csv};
use qmle_cli::verify::{backend_plans, compare_backends, verify, VerifyOutput};
use qmle_cli::Config;
use qmle_core::ae::{ae_distribution, two_stage_ae};
use qmle_core::encode::dense::Purification;
use qmle_core::poly::build_neg_power;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn config(sets: &[&str]) -> Config {
    let o = sets.iter().map(|s| assignment(s).expect("assignment")).collect();
    resolve(None, None, o).expect("config")
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn success_run(sets: &[&str], limit: Duration) -> Outcome {
    let start = Instant::now();
    let out = estimate(&config(sets)).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    let s = &out.summary;
    let detail = format!(
        "{}/{} within eps, mean |err| {:.2e}, mean queries {:.3e}, {:.1}s (limit {}s)",
        s.successes,
        s.trials,
        s.mean_abs_error,
        s.mean_queries,
        took.as_secs_f64(),
        limit.as_secs()
    );
    ensure(3 * s.successes >= 2 * s.trials && took <= limit, detail)
}

fn uniform_collision() -> Outcome {
    success_run(
        &[r#"distribution={"kind":"uniform","n":64}"#, r#"functional={"kind":"tsallis","q":2}"#, "eps=0.1", "trials=50"],
        Duration::from_secs(120),
    )
}

fn zipf_half_order() -> Outcome {
    success_run(
        &[r#"distribution={"kind":"zipf","n":256,"s":1}"#, r#"functional={"kind":"tsallis","q":0.5}"#, "eps=0.25", "trials=50"],
        Duration::from_secs(600),
    )
}

fn shannon_uniform() -> Outcome {
    success_run(
        &[r#"distribution={"kind":"uniform","n":16}"#, r#"functional={"kind":"shannon"}"#, "eps=0.2", "trials=50"],
        Duration::from_secs(600),
    )
}

fn backend_equivalence() -> Outcome {
    let cfg = config(&["eps=0.1"]);
    let plans = backend_plans(0.1).map_err(|e| e.to_string())?;
    let out = compare_backends(20, 99, &plans, &cfg.pipeline).map_err(|e| e.to_string())?;
    let both = out.cases.iter().filter(|c| c.purification == Purification::Fixed).count();
    ensure(
        out.passed && out.cases.len() == 40 && both == 20 && out.cases.iter().all(|c| c.probs.len() <= 8),
        format!("{} comparisons, max gap {:.2e} (tol {:.0e})", out.cases.len(), out.max_diff, out.tolerance),
    )
}

fn budgets(v: &VerifyOutput) -> Outcome {
    let runs: usize = v.plans.iter().map(|p| p.budget.runs).sum();
    let failures: usize = v.plans.iter().map(|p| p.budget.failures).sum();
    let worst = v.plans.iter().map(|p| p.budget.worst_error_ratio).fold(0.0, f64::max);
    let conditions = v.plans.iter().filter(|p| !p.conditions.passed()).count();
    ensure(
        failures == 0 && conditions == 0 && runs > 0,
        format!(
            "{} plans, {runs} budget runs (ideal, smooth, 20 adversarial), {failures} failures, \
             {conditions} plans failing conditions, worst error/bound {worst:.3}",
            v.plans.len()
        ),
    )
}

fn localization_completeness(v: &VerifyOutput) -> Outcome {
    let loc: usize = v.plans.iter().map(|p| p.budget.localization_checked).sum();
    let comp: usize = v.plans.iter().map(|p| p.budget.completeness_checked).sum();
    let wl = v.plans.iter().map(|p| p.budget.worst_localization_ratio).fold(0.0, f64::max);
    let wc = v.plans.iter().map(|p| p.budget.worst_completeness_ratio).fold(0.0, f64::max);
    ensure(
        loc > 0 && comp > 0 && wl <= 1.0 && wc <= 1.0,
        format!("{loc} localization checks (worst ratio {wl:.3}), {comp} completeness checks (worst ratio {wc:.3})"),
    )
}

fn certificates(v: &VerifyOutput) -> Outcome {
    let polys: usize = v.plans.iter().map(|p| p.certificates.polys).sum();
    let bad = v.plans.iter().filter(|p| !p.certificates.passed()).count();
    let cap = v.plans.iter().map(|p| p.certificates.worst_cap).fold(0.0, f64::max);
    // One polynomial re-measured against its target on a fresh grid.
    let (c, delta, eps) = (0.5, 2f64.powi(-8), 1e-6);
    let p = build_neg_power(c, delta, eps).map_err(|e| e.to_string())?;
    let sup = (0..8192)
        .map(|i| delta + (1.0 - delta) * i as f64 / 8191.0)
        .map(|x| (p.eval(x).unwrap() - 0.5 * (delta / x).powf(c)).abs())
        .fold(0.0, f64::max);
    ensure(
        bad == 0 && cap <= 1.0 + 1e-9 && sup <= eps,
        format!("{polys} plan polynomials certified, worst measured |P| {cap:.6}, spot sup error {sup:.2e} <= {eps:.0e}"),
    )
}

fn amplitude_estimation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let floor = 8.0 / (PI * PI);
    let mut worst = 1.0f64;
    for _ in 0..100 {
        let a: f64 = rng.random();
        let t: u64 = rng.random_range(1..5000);
        let tf = t as f64;
        let r = 2.0 * PI * (a * (1.0 - a)).sqrt() / tf + PI * PI / (tf * tf);
        worst = worst.min(ae_distribution(a, t).map_err(|e| e.to_string())?.mass_within(a, r));
    }
    let (eps, eta, reps) = (0.05, 0.1, 300);
    let mut worst_rate = 1.0f64;
    for a in [0.0, eps / 4.0, eps / 2.0, 2.0 * eps, 0.1, 0.5, 0.9] {
        let mut ok = 0;
        for _ in 0..reps {
            let out = two_stage_ae(a, 1, eps, eta, &mut rng).map_err(|e| e.to_string())?;
            ok += usize::from((out.estimate - a).abs() <= eps);
        }
        worst_rate = worst_rate.min(ok as f64 / reps as f64);
    }
    ensure(
        worst >= floor - 1e-12 && worst_rate >= 1.0 - eta,
        format!("min mass within radius {worst:.4} (need {floor:.4}), min two-stage hit rate {worst_rate:.3} (need 0.9)"),
    )
}

fn slopes() -> Outcome {
    let eps_axis = r#"sweep={"eps":[0.2,0.1,0.05,0.025],"n":[],"seeds":5}"#;
    let cases = [
        ("q=2.5 vs 1/eps", "inv_eps", 2.5, 1.0, 0.5, eps_axis, r#"distribution={"kind":"uniform","n":64}"#),
        ("q=1.25 vs 1/eps", "inv_eps", 1.25, 2.0, 0.6, eps_axis, r#"distribution={"kind":"uniform","n":64}"#),
        (
            "q=0.5 vs n",
            "n",
            0.5,
            1.5,
            0.5,
            r#"sweep={"eps":[0.2],"n":[16,64,256,1024],"seeds":5}"#,
            r#"distribution={"kind":"uniform","n":16}"#,
        ),
    ];
    let mut parts = Vec::new();
    let mut ok = true;
    for (label, axis, q, want, tol, sweep, dist) in cases {
        let f = format!(r#"functional={{"kind":"tsallis","q":{q}}}"#);
        let out = scale_sweep(&config(&[&f, dist, sweep, "eps=0.2"])).map_err(|e| e.to_string())?;
        let fit = out.fit(axis).ok_or_else(|| format!("{label}: no fit"))?;
        ok &= (fit.slope - want).abs() <= tol;
        parts.push(format!("{label} slope {:.2} (want {want}±{tol})", fit.slope));
    }
    ensure(ok, parts.join(", "))
}

fn run_binary(args: &[&str], seed_env: &str) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_qmle"))
        .args(args)
        .env("QMLE_SEED", seed_env)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("qmle {args:?} exited {:?}", out.status.code()));
    }
    Ok(out.stdout)
}

fn determinism() -> Outcome {
    let sets = [r#"distribution={"kind":"zipf","n":32,"s":1}"#, r#"functional={"kind":"tsallis","q":0.5}"#, "eps=0.2", "trials=8"];
    let a = serde_json::to_vec(&estimate(&config(&sets)).map_err(|e| e.to_string())?).unwrap();
    let b = serde_json::to_vec(&estimate(&config(&sets)).map_err(|e| e.to_string())?).unwrap();
    let sweep = [r#"functional={"kind":"tsallis","q":2}"#, "eps=0.2", r#"sweep={"eps":[0.2,0.1],"n":[8,16],"seeds":3}"#];
    let csv = || -> Result<Vec<u8>, String> {
        let mut buf = Vec::new();
        write_csv(&scale_sweep(&config(&sweep)).map_err(|e| e.to_string())?.rows, &mut buf).map_err(|e| e.to_string())?;
        Ok(buf)
    };
    let (c1, c2) = (csv()?, csv()?);
    let args = ["estimate", "--eps", "0.2", "--dist", "uniform", "--n", "16", "--functional", "shannon", "--trials", "4"];
    let (r1, r2) = (run_binary(&args, "41")?, run_binary(&args, "41")?);
    let other = run_binary(&args, "42")?;
    ensure(
        a == b && c1 == c2 && r1 == r2 && r1 != other,
        format!(
            "library JSON {} bytes, sweep CSV {} bytes, binary stdout {} bytes identical across reruns; seed change alters output",
            a.len(),
            c1.len(),
            r1.len()
        ),
    )
}

fn main() {
    let grid = verify(&config(&["eps=0.2"]));
    let grid = grid.as_ref().map_err(|e| e.to_string());
    let on_grid = |f: fn(&VerifyOutput) -> Outcome| grid.clone().and_then(f);

    let results: Vec<(&str, Outcome)> = vec![
        ("uniform(64) collision entropy, eps 0.1", uniform_collision()),
        ("zipf(256) order-1/2 Tsallis, eps 0.25", zipf_half_order()),
        ("Shannon on uniform(16), eps 0.2", shannon_uniform()),
        ("dense and block backends agree", backend_equivalence()),
        ("error budgets over the plan grid", on_grid(budgets)),
        ("localization and completeness", on_grid(localization_completeness)),
        ("polynomial certificates", on_grid(certificates)),
        ("amplitude estimation", amplitude_estimation()),
        ("query scaling slopes", slopes()),
        ("byte-identical reruns", determinism()),
    ];
    let mut failed = 0;
    for (k, (name, r)) in results.iter().enumerate() {
        match r {
            Ok(d) => println!("PASS [{:>2}] {name}: {d}", k + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {d}", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
