//! Batch experiment runner: simulate chains and detect regenerations, scan
//! Cesàro averages, sweep density sets, evaluate uniformity bounds, and run
//! the self-verification suite. All commands are deterministic given
//! `(config, seed)`; output files carry the config digest in a `#` header.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use gautomata::automaton::{self, AutomatonParams, Word};
use gautomata::cesaro::{
    self, build_rtilde, rtilde_eligible, validate_h123, DensityParams, ScanMode, SumSpec,
};
use gautomata::chains::{self, Kernel, TailMode};
use gautomata::config::{self, Config};
use gautomata::error::{Error, Result};
use gautomata::group::{self, GroupSpec};
use gautomata::renewal::{self, InterarrivalLaw};
use gautomata::rng::UniformStream;
use gautomata::stats;

#[derive(Parser)]
#[command(name = "gautomata", version, about = "group automata over chains with complete connections: simulation and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Mc,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Experiment configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Seed override (takes precedence over the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a trajectory, detect regeneration times, write the path CSV.
    Simulate(CommonArgs),
    /// Scan Cesàro averages of cylinder laws against the uniform measure.
    Cesaro {
        #[command(flatten)]
        common: CommonArgs,
        /// exact transfer recursion or monte carlo sampling.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
    },
    /// Inter-regeneration block diagnostics (gaps, uniformity, independence).
    RegenStats(CommonArgs),
    /// Density sweep of the digit-condition index sets.
    Density(CommonArgs),
    /// Deviation-from-uniform of weighted sums against the constructive bound.
    Lemma41(CommonArgs),
    /// Run the invariant suite; machine-readable PASS/FAIL lines.
    Verify {
        /// Optional configuration (fault injection knobs).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Restrict to one section: group | automaton | chains | renewal | cesaro.
        #[arg(long)]
        section: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate(args) => run_simulate(&args),
        Command::Cesaro { common, mode } => run_cesaro(&common, mode),
        Command::RegenStats(args) => run_regen_stats(&args),
        Command::Density(args) => run_density(&args),
        Command::Lemma41(args) => run_lemma41(&args),
        Command::Verify { config, section, seed, out } => {
            run_verify(config.as_deref(), section.as_deref(), seed, out.as_deref())
        }
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn emit(out: Option<&std::path::Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn resolve_seed(cfg: &Config, flag: Option<u64>) -> Result<u64> {
    match flag {
        Some(s) => Ok(s),
        None => cfg.get_u64_or("experiment", "seed", 0),
    }
}

fn run_simulate(args: &CommonArgs) -> Result<ExitCode> {
    let cfg = Config::load(&args.config)?;
    let spec = config::load_group(&cfg)?;
    let kernel = config::load_kernel(&cfg, &spec)?;
    let past = config::load_past(&cfg, &spec)?;
    let n = cfg.get_u64_or("experiment", "n", 10_000)? as usize;
    let tail_tol = cfg.get_f64_or("experiment", "tail_tol", chains::DEFAULT_TAIL_TOL)?;
    let seed = resolve_seed(&cfg, args.seed)?;
    let sample = chains::sample_path_with(&kernel, &past, n, seed, tail_tol)?;
    let beta = kernel.beta();
    let mean_gap = if sample.regens.len() >= 2 {
        let span = sample.regens.last().unwrap() - sample.regens[0];
        span as f64 / (sample.regens.len() - 1) as f64
    } else {
        f64::NAN
    };
    let mut text = String::new();
    let _ = writeln!(text, "# command = simulate");
    let _ = writeln!(text, "# config_digest = {}", cfg.digest());
    let _ = writeln!(text, "# seed = {seed}");
    let _ = writeln!(text, "# n = {n}");
    let _ = writeln!(text, "# tail_tol = {tail_tol}");
    let _ = writeln!(text, "# regens = {}", sample.regens.len());
    let _ = writeln!(text, "# candidates = {}", sample.candidates.len());
    let _ = writeln!(text, "# regen_density = {}", sample.regens.len() as f64 / n as f64);
    let _ = writeln!(text, "# beta = {beta}");
    let _ = writeln!(text, "# expected_gap = {}", 1.0 / beta);
    let _ = writeln!(text, "# mean_gap = {mean_gap}");
    let _ = writeln!(text, "n,x,u,regen");
    let mut regen_at = vec![false; n];
    for &t in &sample.regens {
        regen_at[t] = true;
    }
    for t in 0..n {
        let _ = writeln!(
            text,
            "{t},{},{},{}",
            spec.index_of(&sample.xs[t]),
            sample.us[t],
            u8::from(regen_at[t])
        );
    }
    emit(args.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn run_cesaro(args: &CommonArgs, mode_flag: Option<ModeArg>) -> Result<ExitCode> {
    let cfg = Config::load(&args.config)?;
    let spec = config::load_group(&cfg)?;
    let kernel = config::load_kernel(&cfg, &spec)?;
    let past = config::load_past(&cfg, &spec)?;
    let params = config::load_automaton(&cfg, spec.clone())?;
    let j_set: Vec<usize> = match cfg.get("experiment", "j") {
        Some(_) => cfg
            .get_u64_list("experiment", "j")?
            .into_iter()
            .map(|j| j as usize)
            .collect(),
        None => vec![0],
    };
    let m_grid = match cfg.get("experiment", "m_grid") {
        Some(_) => cfg.get_u64_list("experiment", "m_grid")?,
        None => (4..=14).map(|t| 1u64 << t).collect(),
    };
    let seed = resolve_seed(&cfg, args.seed)?;
    let mode_name = match mode_flag {
        Some(ModeArg::Exact) => "exact",
        Some(ModeArg::Mc) => "mc",
        None => cfg.get_str_or("experiment", "mode", "exact"),
    };
    let mode = match mode_name {
        "exact" => ScanMode::Exact,
        "mc" => ScanMode::MonteCarlo {
            trials: cfg.get_u64_or("experiment", "trials", 400)? as usize,
        },
        other => return Err(Error::Config(format!("unknown mode `{other}`"))),
    };
    let report = cesaro::cesaro_scan(&kernel, &past, &params, &j_set, &m_grid, mode, seed)?;
    let mut text = String::new();
    let _ = writeln!(text, "# command = cesaro");
    let _ = writeln!(text, "# config_digest = {}", cfg.digest());
    let _ = writeln!(text, "# seed = {seed}");
    let _ = writeln!(text, "# mode = {mode_name}");
    let _ = writeln!(text, "# j = {j_set:?}");
    let _ = writeln!(text, "M,cylinder,probability,tv,stderr");
    for (i, &m) in report.m_grid.iter().enumerate() {
        for (cyl, &p) in report.averages[i].iter().enumerate() {
            let se = report.stderr[i].get(cyl).copied().unwrap_or(0.0);
            let _ = writeln!(text, "{m},{cyl},{p},{},{se}", report.tv[i]);
        }
    }
    emit(args.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn run_regen_stats(args: &CommonArgs) -> Result<ExitCode> {
    let cfg = Config::load(&args.config)?;
    let spec = config::load_group(&cfg)?;
    let kernel = config::load_kernel(&cfg, &spec)?;
    let past = config::load_past(&cfg, &spec)?;
    let n = cfg.get_u64_or("experiment", "n", 100_000)? as usize;
    let tail_tol = cfg.get_f64_or("experiment", "tail_tol", chains::DEFAULT_TAIL_TOL)?;
    let seed = resolve_seed(&cfg, args.seed)?;
    let sample = chains::sample_path_with(&kernel, &past, n, seed, tail_tol)?;
    let blocks = chains::regeneration_blocks(&sample);
    if blocks.is_empty() {
        return Err(Error::Precondition("fewer than 2 regenerations detected".into()));
    }
    let beta = kernel.beta();
    let lengths: Vec<f64> = blocks.iter().map(|b| b.len() as f64).collect();
    let mean_len = lengths.iter().sum::<f64>() / lengths.len() as f64;
    let mut first_counts = vec![0u64; spec.order() as usize];
    for b in &blocks {
        first_counts[spec.index_of(&b[0]) as usize] += 1;
    }
    let chi = stats::chi_square_uniform(&first_counts, 0.01)?;
    let z = stats::lag1_permutation_z(&lengths, 500, seed ^ 0xB10C)?;
    let mut text = String::new();
    let _ = writeln!(text, "# command = regen-stats");
    let _ = writeln!(text, "# config_digest = {}", cfg.digest());
    let _ = writeln!(text, "# seed = {seed}");
    let _ = writeln!(text, "# n = {n}");
    let _ = writeln!(text, "# blocks = {}", blocks.len());
    let _ = writeln!(text, "# beta = {beta}");
    let _ = writeln!(text, "# expected_gap = {}", 1.0 / beta);
    let _ = writeln!(text, "# mean_block_length = {mean_len}");
    let _ = writeln!(
        text,
        "# first_symbol_chi2 = {} (critical {} at 0.01, rejected = {})",
        chi.statistic, chi.critical, chi.rejected
    );
    let _ = writeln!(text, "# block_length_lag1_z = {z}");
    let _ = writeln!(text, "block,length,first_symbol");
    for (i, b) in blocks.iter().enumerate() {
        let _ = writeln!(text, "{i},{},{}", b.len(), spec.index_of(&b[0]));
    }
    emit(args.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn run_density(args: &CommonArgs) -> Result<ExitCode> {
    let cfg = Config::load(&args.config)?;
    let p = cfg.get_u64_or("group", "p", 2)?;
    let alpha = cfg.get_f64_or("density", "alpha", 0.4)?;
    let m_grid = match cfg.get("density", "m_grid") {
        Some(_) => cfg.get_u64_list("density", "m_grid")?,
        None => (8..=20).map(|t| 1u64 << t).collect(),
    };
    let with_prime = cfg.get("density", "eps").is_some();
    let mut text = String::new();
    let _ = writeln!(text, "# command = density");
    let _ = writeln!(text, "# config_digest = {}", cfg.digest());
    let _ = writeln!(text, "# p = {p}");
    let _ = writeln!(text, "# alpha = {alpha}");
    if with_prime {
        let _ = writeln!(text, "M,count,density,count_r_prime,count_r_double_prime");
    } else {
        let _ = writeln!(text, "M,count,density");
    }
    for &big_m in &m_grid {
        let (count, dens) = group::density_set(big_m, alpha, p)?;
        if with_prime {
            let ell = cfg.get_u64_or("density", "ell", 1)?;
            let eps = cfg.get_f64("density", "eps")?;
            let eps_prime = cfg.get_f64("density", "eps_prime")?;
            let (np, nd) = group::density_sets_prime(big_m, ell, eps, eps_prime, p)?;
            let _ = writeln!(text, "{big_m},{count},{dens},{np},{nd}");
        } else {
            let _ = writeln!(text, "{big_m},{count},{dens}");
        }
    }
    emit(args.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

fn run_lemma41(args: &CommonArgs) -> Result<ExitCode> {
    let cfg = Config::load(&args.config)?;
    let spec = config::load_group(&cfg)?;
    let kernel = config::load_kernel(&cfg, &spec)?;
    let past = config::load_past(&cfg, &spec)?;
    let trials = cfg.get_u64_or("experiment", "trials", 5_000)? as usize;
    let seed = resolve_seed(&cfg, args.seed)?;
    let report = if cfg.has_section("sum") {
        let sum = SumSpec::new(
            cfg.get_u64_list("sum", "indices")?,
            cfg.get_u64_list("sum", "coeffs")?,
        )?;
        cesaro::lemma41_diagnostic(&sum, &kernel, &past, trials, seed)?
    } else {
        let params = config::load_automaton(&cfg, spec.clone())?;
        let m = cfg.get_u64("experiment", "m")?;
        let j_set = cfg.get_u64_list("experiment", "j")?;
        let dp = DensityParams {
            big_m: cfg.get_u64_or("density", "big_m", 1 << 20)?,
            alpha: cfg.get_f64_or("density", "alpha", 0.49)?,
            eps: cfg.get_f64_or("density", "eps", 0.47)?,
            eps_prime: cfg.get_f64_or("density", "eps_prime", 0.009)?,
        };
        let fam = build_rtilde(m, &j_set, spec.p(), &dp)?;
        cesaro::lemma41_joint_diagnostic(&fam, &kernel, &past, &params, trials, seed)?
    };
    let mut text = String::new();
    let _ = writeln!(text, "# command = lemma41");
    let _ = writeln!(text, "# config_digest = {}", cfg.digest());
    let _ = writeln!(text, "# seed = {seed}");
    let _ = writeln!(text, "n,deviation,stderr,bound,vacuous,trials");
    let _ = writeln!(
        text,
        "{},{},{},{},{},{}",
        report.n_star, report.deviation, report.stderr, report.bound, report.vacuous, report.trials
    );
    emit(args.out.as_deref(), &text)?;
    Ok(ExitCode::SUCCESS)
}

struct VerifyContext {
    seed: u64,
    lines: Vec<String>,
    failures: usize,
}

impl VerifyContext {
    fn check(&mut self, name: &str, result: std::result::Result<(), String>) {
        match result {
            Ok(()) => self.lines.push(format!("PASS {name}")),
            Err(detail) => {
                self.failures += 1;
                self.lines.push(format!("FAIL {name}: {detail}"));
            }
        }
    }
}

fn run_verify(
    config: Option<&std::path::Path>,
    section: Option<&str>,
    seed: Option<u64>,
    out: Option<&std::path::Path>,
) -> Result<ExitCode> {
    let cfg = match config {
        Some(path) => Some(Config::load(path)?),
        None => None,
    };
    let mut ctx = VerifyContext { seed: seed.unwrap_or(0), lines: Vec::new(), failures: 0 };
    let fault = cfg
        .as_ref()
        .and_then(|c| c.get("verify", "inject_fault"))
        .map(str::to_string);
    let sections: Vec<&str> = match section {
        Some(s) => vec![s],
        None => vec!["group", "automaton", "chains", "renewal", "cesaro"],
    };
    for s in &sections {
        match *s {
            "group" => verify_group(&mut ctx),
            "automaton" => verify_automaton(&mut ctx, fault.as_deref()),
            "chains" => verify_chains(&mut ctx),
            "renewal" => verify_renewal(&mut ctx),
            "cesaro" => verify_cesaro(&mut ctx),
            other => return Err(Error::Config(format!("unknown verify section `{other}`"))),
        }
    }
    let mut text = String::new();
    for line in &ctx.lines {
        let _ = writeln!(text, "{line}");
    }
    let _ = writeln!(
        text,
        "{} checks, {} failures",
        ctx.lines.len(),
        ctx.failures
    );
    emit(out, &text)?;
    if ctx.failures > 0 {
        Ok(ExitCode::from(4))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn verify_group(ctx: &mut VerifyContext) {
    // binomial residues against a mod-p Pascal triangle built independently
    ctx.check("group.binomial_residues_vs_pascal", {
        let mut result = Ok(());
        'outer: for p in [2u64, 3, 5] {
            let n = 300usize;
            let mut row = vec![0u64; n + 1];
            row[0] = 1;
            for m in 0..=n {
                for k in (1..=m).rev() {
                    row[k] = (row[k] + row[k - 1]) % p;
                }
                for k in 0..=m {
                    if group::lucas_binomial(m as u64, k as u64, p) != row[k] {
                        result = Err(format!("mismatch at p={p} m={m} k={k}"));
                        break 'outer;
                    }
                }
            }
        }
        result
    });
    ctx.check("group.unit_scalars_are_bijections", {
        let mut result = Ok(());
        for spec in [
            GroupSpec::new(2, &[2]).unwrap(),
            GroupSpec::new(3, &[1]).unwrap(),
            GroupSpec::new(2, &[1, 1]).unwrap(),
        ] {
            for a in 1..=12u64 {
                if spec.is_unit_scalar(a) {
                    let mut seen: Vec<u64> =
                        spec.elements().map(|g| spec.index_of(&spec.scalar_mul(a, &g))).collect();
                    seen.sort_unstable();
                    seen.dedup();
                    if seen.len() as u64 != spec.order() {
                        result = Err(format!("scalar {a} is not a bijection"));
                    }
                }
            }
        }
        result
    });
    ctx.check("group.triangular_systems_uniquely_solvable", {
        let stream = UniformStream::new(ctx.seed ^ 0x5151);
        let specs = [
            GroupSpec::new(2, &[1]).unwrap(),
            GroupSpec::new(2, &[2]).unwrap(),
            GroupSpec::new(3, &[1]).unwrap(),
            GroupSpec::new(2, &[1, 1]).unwrap(),
        ];
        let mut result = Ok(());
        let mut ctr = 0u64;
        'outer: for trial in 0..50usize {
            let spec = &specs[trial % specs.len()];
            let p = spec.p();
            let l = 1 + (trial % 3);
            let mut matrix = vec![vec![0u64; l]; l];
            for (i, row) in matrix.iter_mut().enumerate() {
                for (j, a) in row.iter_mut().enumerate() {
                    let r = stream.below(ctr, 20);
                    ctr += 1;
                    *a = if i == j {
                        let mut v = r;
                        while v % p == 0 {
                            v += 1;
                        }
                        v
                    } else if j > i {
                        r * p
                    } else {
                        r
                    };
                }
            }
            match group::check_system_s(&matrix, spec) {
                Ok(true) => {}
                Ok(false) => {
                    result = Err(format!("nonzero kernel for matrix {matrix:?}"));
                    break 'outer;
                }
                Err(e) => {
                    result = Err(format!("checker error: {e}"));
                    break 'outer;
                }
            }
        }
        result
    });
    ctx.check("group.density_recount", {
        let big_m = 1u64 << 12;
        match group::density_set(big_m, 0.4, 2) {
            Ok((count, _)) => {
                let threshold = 0.4 * group::log_log_base_p(big_m, 2);
                let recount =
                    (0..=big_m).filter(|m| (m.count_ones() as f64) >= threshold).count() as u64;
                if count == recount {
                    Ok(())
                } else {
                    Err(format!("{count} vs recount {recount}"))
                }
            }
            Err(e) => Err(e.to_string()),
        }
    });
}

fn verify_automaton(ctx: &mut VerifyContext, fault: Option<&str>) {
    ctx.check("automaton.unit_scalar_parameters", {
        let spec = GroupSpec::new(2, &[1]).unwrap();
        let (mu, nu) = match fault {
            // deliberately broken parameter pair: mu shares the prime
            Some("bad_mu") => (2u64, 1u64),
            _ => (1, 1),
        };
        match AutomatonParams::new(mu, nu, spec) {
            Ok(_) => Ok(()),
            Err(e) => Err(e.to_string()),
        }
    });
    ctx.check("automaton.closed_form_matches_iteration", {
        let mut result = Ok(());
        'outer: for (p, exps, mu, nu) in [
            (2u64, vec![1u32], 1u64, 1u64),
            (2, vec![2], 3, 1),
            (3, vec![1], 1, 2),
            (2, vec![1, 1], 1, 3),
        ] {
            let spec = GroupSpec::new(p, &exps).unwrap();
            let params = AutomatonParams::new(mu, nu, spec.clone()).unwrap();
            let stream = UniformStream::new(ctx.seed ^ 0xA7);
            for trial in 0..25u64 {
                let m = (trial % 13) as usize;
                let len = m + 3;
                let elems: Vec<_> = (0..len)
                    .map(|i| {
                        spec.element_at(stream.below(1000 * trial + i as u64, spec.order()))
                    })
                    .collect();
                let w = Word::new(0, elems).unwrap();
                let it = automaton::iterate(&w, m, &params).unwrap();
                for i in 0..it.len() {
                    let cf = automaton::apply_closed_form(&w, m, i as i64, &params).unwrap();
                    if cf != *it.at(i as i64) {
                        result = Err(format!("mismatch p={p} m={m} i={i}"));
                        break 'outer;
                    }
                }
            }
        }
        result
    });
    ctx.check("automaton.unit_flags_match_binomial_residues", {
        let spec = GroupSpec::new(2, &[2]).unwrap();
        let params = AutomatonParams::new(3, 1, spec).unwrap();
        let mut result = Ok(());
        for m in 0..60usize {
            let c = automaton::coefficients(m, &params);
            for k in 0..=m {
                if c.unit[k] != (group::lucas_binomial(m as u64, k as u64, 2) != 0) {
                    result = Err(format!("flag mismatch at m={m} k={k}"));
                }
            }
        }
        result
    });
}

fn default_kernels() -> Vec<Kernel> {
    let z2 = GroupSpec::new(2, &[1]).unwrap();
    let zero = z2.zero();
    vec![
        Kernel::product(z2.clone(), vec![0.3, 0.7]).unwrap(),
        Kernel::markov(
            z2.clone(),
            1,
            vec![vec![0.7, 0.3], vec![0.3, 0.7]],
            vec![zero.clone()],
        )
        .unwrap(),
        Kernel::geometric_mixture(
            z2,
            0.05,
            0.5,
            vec![vec![vec![0.7, 0.3], vec![0.2, 0.8]]],
            zero,
        )
        .unwrap(),
    ]
}

fn verify_chains(ctx: &mut VerifyContext) {
    ctx.check("chains.kernel_normalization", {
        let mut result = Ok(());
        for kernel in default_kernels() {
            let spec = kernel.spec().clone();
            let stream = UniformStream::new(ctx.seed ^ 0xC4);
            for trial in 0..200u64 {
                let len = stream.below(trial, 5) as usize;
                let past: Vec<_> = (0..len)
                    .map(|i| spec.element_at(stream.below(7 * trial + i as u64 + 1, spec.order())))
                    .collect();
                let total: f64 = (0..spec.order() as usize)
                    .map(|g| kernel.eval_idx(g, &past, TailMode::DefaultTail))
                    .sum();
                if (total - 1.0).abs() > 1e-12 {
                    result = Err(format!("normalization off by {}", (total - 1.0).abs()));
                }
            }
        }
        result
    });
    ctx.check("chains.threshold_sequence_monotone_with_summable_defect", {
        let mut result = Ok(());
        for kernel in default_kernels() {
            let a = kernel.a_seq(32);
            for i in 1..a.len() {
                if a[i] + 1e-15 < a[i - 1] {
                    result = Err(format!("decrease at {i}"));
                }
            }
            let defect: f64 = a.iter().skip(1).map(|&v| 1.0 - v).sum();
            if !(defect.is_finite() && defect < 10.0) {
                result = Err(format!("defect sum {defect}"));
            }
        }
        result
    });
    ctx.check("chains.layout_coverage", {
        let mut result = Ok(());
        for kernel in default_kernels() {
            let spec = kernel.spec().clone();
            let a = kernel.a_seq(6);
            for w in 0..spec.order() {
                match chains::build_layout(&kernel, &[spec.element_at(w)], 4) {
                    Ok(layout) => {
                        for lev in 0..=4i64 {
                            if layout.coverage_through(lev) + 1e-12 < a[(lev + 1) as usize] {
                                result = Err(format!("coverage gap at level {lev}"));
                            }
                        }
                    }
                    Err(e) => result = Err(e.to_string()),
                }
            }
        }
        result
    });
    ctx.check("chains.regens_independent_of_past", {
        let kernel = &default_kernels()[1];
        let spec = kernel.spec().clone();
        let a = chains::sample_path(kernel, &[spec.zero()], 5_000, ctx.seed ^ 9).unwrap();
        let b =
            chains::sample_path(kernel, &[spec.element_at(1)], 5_000, ctx.seed ^ 9).unwrap();
        if a.regens == b.regens {
            Ok(())
        } else {
            Err("detected times changed with the past".into())
        }
    });
}

fn verify_renewal(ctx: &mut VerifyContext) {
    ctx.check("renewal.density_recursion_converges_to_rate", {
        let mut result = Ok(());
        for law in [
            InterarrivalLaw::Geometric { beta: 0.3 },
            InterarrivalLaw::TwoPoint { k1: 1, k2: 4, p1: 0.6 },
        ] {
            let b = law.renewal_density(1000);
            if (b[1000] - law.rate()).abs() > 1e-3 {
                result = Err(format!("beta_1000 = {} vs {}", b[1000], law.rate()));
            }
        }
        result
    });
    ctx.check("renewal.miss_probability_matches_geometric_closed_form", {
        let law = InterarrivalLaw::Geometric { beta: 0.3 };
        let a: Vec<usize> = (0..8).map(|i| 3 * i).collect();
        match renewal::miss_probability(&law, &a, 20_000, ctx.seed ^ 0x11) {
            Ok((est, se)) => {
                let exact = 0.7f64.powi(a.len() as i32);
                if (est - exact).abs() < 3.0 * se + 1e-9 {
                    Ok(())
                } else {
                    Err(format!("{est} vs {exact} (se {se})"))
                }
            }
            Err(e) => Err(e.to_string()),
        }
    });
    ctx.check("renewal.bound_shrinks_with_n", {
        let law = InterarrivalLaw::Geometric { beta: 0.3 };
        let e1 = renewal::epsilon_min(&law, 64);
        let e2 = renewal::epsilon_min(&law, 1024);
        if e2 <= e1 && e2 < 0.1 {
            Ok(())
        } else {
            Err(format!("eps(64) = {e1}, eps(1024) = {e2}"))
        }
    });
}

fn verify_cesaro(ctx: &mut VerifyContext) {
    ctx.check("cesaro.uniform_initial_is_fixed_point", {
        let spec = GroupSpec::new(2, &[1]).unwrap();
        let kernel = Kernel::uniform_product(spec.clone());
        let params = AutomatonParams::new(1, 1, spec).unwrap();
        match cesaro::cesaro_scan(&kernel, &[], &params, &[0], &[16, 64], ScanMode::Exact, 0) {
            Ok(rep) => {
                if rep.tv.iter().all(|&tv| tv <= 1e-10) {
                    Ok(())
                } else {
                    Err(format!("tv = {:?}", rep.tv))
                }
            }
            Err(e) => Err(e.to_string()),
        }
    });
    ctx.check("cesaro.parity_closed_form", {
        let spec = GroupSpec::new(2, &[1]).unwrap();
        let kernel = Kernel::product(spec, vec![0.7, 0.3]).unwrap();
        let sum = SumSpec::new((0..8).collect(), vec![1; 8]).unwrap();
        match cesaro::exact_sum_distribution(&sum, &kernel, &[]) {
            Ok(t) => {
                let expect = (1.0 + 0.4f64.powi(8)) / 2.0;
                if (t.probs[0] - expect).abs() < 1e-12 {
                    Ok(())
                } else {
                    Err(format!("{} vs {expect}", t.probs[0]))
                }
            }
            Err(e) => Err(e.to_string()),
        }
    });
    ctx.check("cesaro.index_families_satisfy_hypotheses", {
        let dp = DensityParams { big_m: 1 << 20, alpha: 0.49, eps: 0.47, eps_prime: 0.009 };
        let j_set = [0u64, 1];
        let mut checked = 0usize;
        let mut result = Ok(());
        for m in 64u64..50_000 {
            if !rtilde_eligible(m, &j_set, 2, &dp) {
                continue;
            }
            match build_rtilde(m, &j_set, 2, &dp).and_then(|fam| validate_h123(&fam)) {
                Ok(()) => checked += 1,
                Err(e) => {
                    result = Err(format!("m = {m}: {e}"));
                    break;
                }
            }
            if checked >= 20 {
                break;
            }
        }
        if result.is_ok() && checked < 20 {
            result = Err(format!("only {checked} eligible indices found"));
        }
        result
    });
}
