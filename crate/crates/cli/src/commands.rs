//! Subcommand implementations. Every command derives its randomness from
//! the top-level seed via stable hashing of (seed, subcommand label,
//! trial index), so reruns are byte-identical.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array1;
use rand::Rng;

use diagosc_core::basis::{build_fourier_basis, validate_basis as basis_report};
use diagosc_core::dynamics::{classify_instance, verify_separation};
use diagosc_core::interaction::DiagonalizableSystem;
use diagosc_core::modes::{gaussian_output_density, mode_frequency};
use diagosc_core::rng::{derive, hash_label, stream_rng};
use diagosc_core::stats::Z_99;
use diagosc_core::stochastic::{
    clt_check, estimate_coherence_probability, independence_check, qc_tilde, sample_frequencies,
    verify_coherence_dichotomy, ModeSpec,
};
use diagosc_core::{FrequencyDistribution, PeriodicFunction, StepControl};

use crate::config::{
    require_min_n, require_positive, DensityCfg, ModeCurveCfg, QcScanCfg, SimulateCfg,
    ValidateBasisCfg, VerifyCfg,
};
use crate::CliError;

/// Resolved global options; per-command flag overrides live here too.
pub struct Ctx {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub schema_check: bool,
    pub n: Option<usize>,
    pub epsilon: Option<f64>,
    pub sigma: Option<f64>,
    pub trials: Option<usize>,
    pub t_end: Option<f64>,
}

impl Ctx {
    fn out_or(&self, default: &str) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from(default))
    }

    fn child_seed(&self, label: &str, index: u64) -> u64 {
        derive(self.seed, &[hash_label(label), index])
    }
}

fn parse_mode(spec: &str) -> Result<PeriodicFunction, CliError> {
    match spec {
        "sin" => Ok(PeriodicFunction::sine()),
        "triangle" => Ok(PeriodicFunction::triangle()),
        other => {
            if let Some(path) = other.strip_prefix("sampled:") {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("cannot read {path}: {e}")))?;
                let samples: Vec<f64> = text
                    .split_whitespace()
                    .map(|t| t.parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| CliError::Config(format!("{path}: {e}")))?;
                Ok(PeriodicFunction::from_samples(
                    format!("sampled:{path}"),
                    2.0 * std::f64::consts::PI,
                    samples,
                )?)
            } else {
                Err(CliError::Config(format!(
                    "unknown mode function '{other}' (expected sin, triangle, or sampled:<path>)"
                )))
            }
        }
    }
}

fn parse_dist(kind: &str, sigma: f64) -> Result<FrequencyDistribution, CliError> {
    match kind {
        "gaussian" => Ok(FrequencyDistribution::gaussian(0.0, sigma)?),
        "uniform" => Ok(FrequencyDistribution::uniform(0.0, sigma)?),
        "two-point" => Ok(FrequencyDistribution::two_point(0.0, sigma)?),
        other => Err(CliError::Config(format!(
            "unknown distribution '{other}' (expected gaussian, uniform, or two-point)"
        ))),
    }
}

/// Emitted file kinds the `--schema-check` flag knows how to re-validate.
enum Schema {
    Csv { header: &'static str, columns: usize },
    BasisCsv,
    TrajectoryCsv,
    Json,
}

fn check_schema(path: &Path, schema: &Schema) -> Result<(), CliError> {
    let text = std::fs::read_to_string(path)?;
    let fail = |m: String| Err(CliError::Verification(format!("{}: {m}", path.display())));
    match schema {
        Schema::Csv { header, columns } => {
            let mut lines = text.lines();
            match lines.next() {
                Some(h) if h == *header => {}
                other => return fail(format!("bad header {other:?}, expected {header:?}")),
            }
            for (i, line) in lines.enumerate() {
                let fields = line.split(',').count();
                if fields != *columns {
                    return fail(format!("row {i}: {fields} fields, expected {columns}"));
                }
            }
            Ok(())
        }
        Schema::BasisCsv => {
            let reader = std::io::BufReader::new(File::open(path)?);
            match diagosc_core::BasisMatrix::read_csv(reader) {
                Ok(_) => Ok(()),
                Err(e) => fail(e.to_string()),
            }
        }
        Schema::TrajectoryCsv => {
            let mut lines = text.lines();
            match lines.next() {
                Some(h) if h.starts_with("t,theta1") => {}
                other => return fail(format!("bad header {other:?}")),
            }
            Ok(())
        }
        Schema::Json => {
            let v: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Verification(format!("{}: {e}", path.display())))?;
            match v.get("schema_version").and_then(|x| x.as_u64()) {
                Some(1) => Ok(()),
                other => fail(format!("schema_version {other:?}, expected 1")),
            }
        }
    }
}

fn finish(ctx: &Ctx, path: &Path, schema: Schema) -> Result<(), CliError> {
    if ctx.schema_check {
        check_schema(path, &schema)?;
    }
    println!("wrote {}", path.display());
    Ok(())
}

pub fn mode_curve(ctx: &Ctx, cfg: ModeCurveCfg) -> Result<(), CliError> {
    let p = parse_mode(cfg.mode.as_deref().unwrap_or("sin"))?;
    let epsilon = ctx.epsilon.or(cfg.epsilon).unwrap_or(1.0);
    if epsilon < 0.0 {
        return Err(CliError::Config(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let a_min = cfg.a_min.unwrap_or(-3.0);
    let a_max = cfg.a_max.unwrap_or(3.0);
    let step = require_positive("step", cfg.step.unwrap_or(0.01))?;
    if a_max < a_min {
        return Err(CliError::Config(format!("empty grid [{a_min}, {a_max}]")));
    }
    let points = ((a_max - a_min) / step).round() as usize;

    let path = ctx.out_or("mode_curve.csv");
    let mut out = BufWriter::new(File::create(&path)?);
    writeln!(out, "a,mu")?;
    for i in 0..=points {
        let a = a_min + i as f64 * step;
        let mu = mode_frequency(&p, a, epsilon)?.mu;
        writeln!(out, "{a},{mu}")?;
    }
    out.flush()?;
    drop(out);
    finish(ctx, &path, Schema::Csv { header: "a,mu", columns: 2 })
}

pub fn density(ctx: &Ctx, cfg: DensityCfg) -> Result<(), CliError> {
    let epsilon = require_positive("epsilon", ctx.epsilon.or(cfg.epsilon).unwrap_or(1.0))?;
    let mu_max = require_positive("mu_max", cfg.mu_max.unwrap_or(4.0))?;
    let step = require_positive("step", cfg.step.unwrap_or(0.01))?;
    let bin_width = require_positive("bin_width", cfg.bin_width.unwrap_or(0.1))?;
    let mc_samples = ctx.trials.or(cfg.mc_samples).unwrap_or(0);

    let g = gaussian_output_density(epsilon)?;
    let path = ctx.out_or("density.csv");
    let mut out = BufWriter::new(File::create(&path)?);
    writeln!(out, "kind,mu,value")?;
    writeln!(out, "atom,0,{}", g.atom_weight)?;
    let points = (2.0 * mu_max / step).round() as usize;
    for i in 0..=points {
        let mu = -mu_max + i as f64 * step;
        writeln!(out, "continuous,{mu},{}", g.continuous(mu))?;
    }

    if mc_samples > 0 {
        use rayon::prelude::*;
        let d = FrequencyDistribution::gaussian(0.0, 1.0)?;
        let seed = ctx.child_seed("density", 0);
        let mus: Vec<f64> = (0..mc_samples as u64)
            .into_par_iter()
            .map(|k| {
                let a = d.sample(&mut stream_rng(seed, k));
                if a.abs() <= epsilon {
                    0.0
                } else {
                    a.signum() * (a * a - epsilon * epsilon).sqrt()
                }
            })
            .collect();
        let at_zero = mus.iter().filter(|&&m| m == 0.0).count();
        writeln!(out, "mc_atom,0,{}", at_zero as f64 / mc_samples as f64)?;
        let bins = (2.0 * mu_max / bin_width).round() as usize;
        let mut counts = vec![0usize; bins];
        for &m in &mus {
            if m != 0.0 && m.abs() < mu_max {
                let idx = ((m + mu_max) / bin_width) as usize;
                counts[idx.min(bins - 1)] += 1;
            }
        }
        for (i, c) in counts.iter().enumerate() {
            let center = -mu_max + (i as f64 + 0.5) * bin_width;
            let dens = *c as f64 / (mc_samples as f64 * bin_width);
            writeln!(out, "mc,{center},{dens}")?;
        }
    }
    out.flush()?;
    drop(out);
    finish(ctx, &path, Schema::Csv { header: "kind,mu,value", columns: 3 })
}

pub fn qc_scan(ctx: &Ctx, cfg: QcScanCfg) -> Result<(), CliError> {
    let n_list = cfg.n_list.unwrap_or_else(|| vec![4, 8, 16]);
    let n_list: Vec<usize> = match ctx.n {
        Some(n) => vec![require_min_n(n)?],
        None => {
            for &n in &n_list {
                require_min_n(n)?;
            }
            n_list
        }
    };
    let sigma = require_positive("sigma", ctx.sigma.or(cfg.sigma).unwrap_or(1.0))?;
    let trials = ctx.trials.or(cfg.trials).unwrap_or(10_000);
    if trials == 0 {
        return Err(CliError::Config("trials must be at least 1".into()));
    }
    let dist = parse_dist(cfg.dist.as_deref().unwrap_or("gaussian"), sigma)?;
    let eps_min = cfg.epsilon_min.unwrap_or(0.0);
    let eps_max = cfg.epsilon_max.unwrap_or(4.0);
    let eps_step = require_positive("epsilon_step", cfg.epsilon_step.unwrap_or(0.25))?;
    let eps_grid: Vec<f64> = match ctx.epsilon {
        Some(e) => vec![e],
        None => {
            let k = ((eps_max - eps_min) / eps_step).round() as usize;
            (0..=k).map(|i| eps_min + i as f64 * eps_step).collect()
        }
    };

    let path = ctx.out_or("qc_scan.csv");
    let mut out = BufWriter::new(File::create(&path)?);
    writeln!(out, "N,epsilon,sigma,trials,q_c_hat,ci,q_tilde")?;
    for (ni, &n) in n_list.iter().enumerate() {
        for (ei, &eps) in eps_grid.iter().enumerate() {
            let seed = ctx.child_seed("qc-scan", (ni * eps_grid.len() + ei) as u64);
            let est =
                estimate_coherence_probability(n, eps, &dist, &ModeSpec::sine(), trials, seed)?;
            writeln!(
                out,
                "{n},{eps},{sigma},{trials},{},{},{}",
                est.q_c_hat,
                est.ci_halfwidth,
                qc_tilde(eps, sigma, n)
            )?;
        }
    }
    out.flush()?;
    drop(out);
    finish(
        ctx,
        &path,
        Schema::Csv { header: "N,epsilon,sigma,trials,q_c_hat,ci,q_tilde", columns: 7 },
    )
}

pub fn simulate(ctx: &Ctx, cfg: SimulateCfg) -> Result<(), CliError> {
    let n = require_min_n(ctx.n.or(cfg.n).unwrap_or(8))?;
    let epsilon = ctx.epsilon.or(cfg.epsilon).unwrap_or(1.0);
    if epsilon < 0.0 {
        return Err(CliError::Config(format!("epsilon must be nonnegative, got {epsilon}")));
    }
    let sigma = require_positive("sigma", ctx.sigma.or(cfg.sigma).unwrap_or(1.0))?;
    let t_end = require_positive("t_end", ctx.t_end.or(cfg.t_end).unwrap_or(200.0))?;
    let points = cfg.points.unwrap_or(2001);
    let pair_tol = require_positive("pair_tol", cfg.pair_tol.unwrap_or(1e-3))?;
    let dist = parse_dist(cfg.dist.as_deref().unwrap_or("gaussian"), sigma)?;
    let mode = parse_mode(cfg.mode.as_deref().unwrap_or("sin"))?;

    let omega = sample_frequencies(&dist, n, ctx.child_seed("simulate", 0))?;
    let mut r = stream_rng(ctx.child_seed("simulate", 1), 0);
    let theta0: Array1<f64> = (0..n)
        .map(|_| r.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
        .collect();
    let basis = build_fourier_basis(n)?;
    let sys = DiagonalizableSystem::new(basis, epsilon, omega, vec![mode; n - 1])?;

    let ctrl = StepControl::default();
    let (record, traj) = classify_instance(&sys, &theta0, t_end, points, pair_tol, ctrl)?;
    let separation = verify_separation(&sys, &theta0, t_end.min(100.0), 101, ctrl)?;

    let traj_path = cfg
        .trajectory_out
        .unwrap_or_else(|| PathBuf::from("trajectory.csv"));
    let mut tout = BufWriter::new(File::create(&traj_path)?);
    traj.write_csv(&mut tout)?;
    tout.flush()?;
    drop(tout);

    // record fields at top level, with the separation check alongside;
    // serde_json orders keys deterministically
    let mut doc = match serde_json::to_value(&record) {
        Ok(serde_json::Value::Object(m)) => m,
        _ => return Err(CliError::Numerical("report serialization".into())),
    };
    doc.insert(
        "separation".into(),
        serde_json::to_value(&separation).map_err(|e| CliError::Numerical(e.to_string()))?,
    );
    let path = ctx.out_or("simulate.json");
    std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap() + "\n")?;

    if ctx.schema_check {
        check_schema(&traj_path, &Schema::TrajectoryCsv)?;
    }
    println!("wrote {}", traj_path.display());
    finish(ctx, &path, Schema::Json)
}

pub fn verify(ctx: &Ctx, cfg: VerifyCfg) -> Result<(), CliError> {
    let n = require_min_n(ctx.n.or(cfg.n).unwrap_or(8))?;
    let epsilon = require_positive("epsilon", ctx.epsilon.or(cfg.epsilon).unwrap_or(1.0))?;
    let sigma = require_positive("sigma", ctx.sigma.or(cfg.sigma).unwrap_or(1.0))?;
    let trials = ctx.trials.or(cfg.trials).unwrap_or(10_000);
    let trend_n_list = cfg.trend_n_list.unwrap_or_else(|| vec![4, 8, 16, 32, 64]);
    let trend_trials = cfg.trend_trials.unwrap_or(20_000);
    let clt_size = cfg.clt_size.unwrap_or(1000);
    let clt_samples = cfg.clt_samples.unwrap_or(10_000);
    for &m in &trend_n_list {
        require_min_n(m)?;
    }
    if trials == 0 || trend_trials == 0 || clt_samples == 0 {
        return Err(CliError::Config("trial counts must be at least 1".into()));
    }

    let gaussian = FrequencyDistribution::gaussian(0.0, sigma)?;
    let uniform = FrequencyDistribution::uniform(0.0, sigma)?;

    let dich = verify_coherence_dichotomy(
        n,
        epsilon,
        &gaussian,
        &ModeSpec::sine(),
        trials,
        ctx.child_seed("verify", 0),
        1e-9,
    )?;
    let dich_pass = dich.partial_not_coherent_nonmarginal == 0;

    let trend: Vec<_> = trend_n_list
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            estimate_coherence_probability(
                m,
                epsilon,
                &gaussian,
                &ModeSpec::sine(),
                trend_trials,
                ctx.child_seed("verify", 100 + i as u64),
            )
        })
        .collect::<Result<_, _>>()?;
    let trend_pass = trend.windows(2).all(|w| {
        w[1].q_c_hat <= w[0].q_c_hat + w[0].ci_at(Z_99) + w[1].ci_at(Z_99)
    });

    let clt = clt_check(clt_size, 0, &uniform, clt_samples, ctx.child_seed("verify", 200))?;
    let joint: Vec<_> = [(1.0, 1.0), (1.0, -2.0)]
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            independence_check(
                clt_size,
                (0, 1),
                w,
                &uniform,
                clt_samples,
                ctx.child_seed("verify", 300 + i as u64),
            )
        })
        .collect::<Result<_, _>>()?;
    let clt_pass = clt.pass && joint.iter().all(|r| r.pass);

    let basis = build_fourier_basis(n)?;
    let basis_rep = basis_report(&basis, 1e-12);
    let basis_pass = basis_rep.orthogonality_ok();

    let pass = dich_pass && trend_pass && clt_pass && basis_pass;
    let doc = serde_json::json!({
        "schema_version": 1,
        "dichotomy_pass": dich_pass,
        "dichotomy": dich,
        "trend_pass": trend_pass,
        "trend": trend,
        "clt_pass": clt_pass,
        "clt": clt,
        "joint": joint,
        "basis_pass": basis_pass,
        "basis": basis_rep,
        "pass": pass,
    });
    let path = ctx.out_or("verify.json");
    std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap() + "\n")?;
    finish(ctx, &path, Schema::Json)?;

    println!(
        "dichotomy {} | trend {} | limit {} | basis {}",
        verdict(dich_pass),
        verdict(trend_pass),
        verdict(clt_pass),
        verdict(basis_pass)
    );
    if pass {
        Ok(())
    } else {
        Err(CliError::Verification("one or more checks failed".into()))
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

pub fn validate_basis(ctx: &Ctx, cfg: ValidateBasisCfg) -> Result<(), CliError> {
    let n = require_min_n(ctx.n.or(cfg.n).unwrap_or(8))?;
    let tol = require_positive("tol", cfg.tol.unwrap_or(1e-12))?;
    let w = build_fourier_basis(n)?;
    let rep = basis_report(&w, tol);

    let path = ctx.out_or("basis.csv");
    let mut out = BufWriter::new(File::create(&path)?);
    w.write_csv(&mut out)?;
    out.flush()?;
    drop(out);

    println!("{}", serde_json::to_string_pretty(&rep).unwrap());
    finish(ctx, &path, Schema::BasisCsv)?;
    if rep.orthogonality_ok() {
        Ok(())
    } else {
        Err(CliError::Verification(format!(
            "orthonormality {:.3e}, uniform {:.3e} exceed tol {tol:.1e}",
            rep.orthonormality_err, rep.uniform_err
        )))
    }
}
