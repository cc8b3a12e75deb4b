//! `raclab` — command-line front end for the random-access channel
//! laboratory.
//!
//! Exit codes: 0 success, 2 validation error, 3 numerical infeasibility,
//! 1 anything else (including failed `verify` properties).

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{build_channel, parse_count, parse_f64_list, parse_u64_list, EpsSpec, F64List, FileConfig, U64List};
use output::{fmt_float, write_json, Cell, Csv};
use raclab_core::adder::{adder_stats, emit_figure_data, StatsMode};
use raclab_core::bound::{evaluate_bound, BoundMethod};
use raclab_core::channel::check_assumptions;
use raclab_core::design::{
    choose_parameters, rate_curve_from_pairs, solve_blocklength, solve_message_size,
    sweep_rate_region, MessageCount, ThresholdMode,
};
use raclab_core::detect::{
    estimate_test_errors, hoeffding_threshold, ks_threshold, marginal_on_full_alphabet,
    minimax_quantile, n0_expansion, TestSpec, TestStatistic,
};
use raclab_core::infodensity::{
    joint_density_pmf, verify_orderings_from_stats, ChannelStatistics, LN_2,
};
use raclab_core::sim::{estimate_error_rates, CodebookMode};
use raclab_core::{Error, ZeroTestKind};

#[derive(Parser)]
#[command(
    name = "raclab",
    version,
    about = "Finite-blocklength laboratory for symmetric random-access channels"
)]
struct Cli {
    /// Worker thread cap (falls back to RACLAB_THREADS, then all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON experiment configuration; explicit flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct ChannelArgs {
    /// Channel family: adder | binary | file.
    #[arg(long)]
    channel: Option<String>,
    /// Erasure probability of the adder family.
    #[arg(long)]
    delta: Option<f64>,
    /// Maximum number of transmitters.
    #[arg(long = "K")]
    max_users: Option<usize>,
    /// Matched-input bias of the binary family.
    #[arg(long)]
    a: Option<f64>,
    /// Crossover of the binary family.
    #[arg(long)]
    b: Option<f64>,
    /// JSON channel description.
    #[arg(long)]
    channel_file: Option<String>,
    /// Bernoulli parameter of the input distribution.
    #[arg(long)]
    px: Option<f64>,
}

impl ChannelArgs {
    fn resolve(&self, cfg: &FileConfig) -> raclab_core::Result<config::ChannelChoice> {
        build_channel(
            self.channel.as_deref().or(cfg.channel.as_deref()),
            self.delta.or(cfg.delta),
            self.max_users.or(cfg.max_users),
            self.a.or(cfg.a),
            self.b.or(cfg.b),
            self.channel_file.as_deref().or(cfg.channel_file.as_deref()),
            self.px.or(cfg.px),
        )
    }
}

#[derive(Subcommand)]
enum Command {
    /// Exact per-k statistics of a channel family (CSV + JSON).
    Stats {
        #[command(flatten)]
        channel: ChannelArgs,
        /// CSV output path.
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON output path.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Exact vs series adder-erasure statistics per user count.
    AdderStats {
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        kmax: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Smallest blocklengths meeting a message size and error targets.
    Blocklengths {
        #[command(flatten)]
        channel: ChannelArgs,
        /// Message size in bits (log2 M).
        #[arg(long)]
        logm: Option<f64>,
        /// Error budgets: scalar or comma list eps_0..eps_K.
        #[arg(long, value_parser = parse_f64_list)]
        eps: Option<F64List>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Two-user achievable rate region over a Bernoulli input grid.
    RateRegion {
        #[arg(long)]
        a: Option<f64>,
        #[arg(long)]
        b: Option<f64>,
        #[arg(long)]
        logm: Option<f64>,
        #[arg(long, value_parser = parse_f64_list)]
        eps: Option<F64List>,
        /// Grid step for the Bernoulli parameter.
        #[arg(long)]
        grid: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Per-user rate curves at fixed single-user blocklengths.
    RateCurve {
        #[command(flatten)]
        channel: ChannelArgs,
        /// Single-user blocklengths, comma separated.
        #[arg(long, value_parser = parse_u64_list)]
        n1: Option<U64List>,
        #[arg(long, value_parser = parse_f64_list)]
        eps: Option<F64List>,
        /// Largest user count on the curve.
        #[arg(long)]
        kmax: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Error-bound terms for one user count under a designed code.
    Bound {
        #[command(flatten)]
        channel: ChannelArgs,
        /// True number of active transmitters.
        #[arg(long)]
        k: Option<usize>,
        /// Message count.
        #[arg(long = "M")]
        m: Option<u64>,
        #[arg(long, value_parser = parse_f64_list)]
        eps: Option<F64List>,
        /// Data blocklengths n_1..n_K (otherwise solved from eps).
        #[arg(long, value_parser = parse_u64_list)]
        n: Option<U64List>,
        /// Zero-transmitter test: hoeffding | ks.
        #[arg(long)]
        test: Option<String>,
        #[arg(long, value_parser = parse_count)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Evaluate by full convolution instead of Monte Carlo.
        #[arg(long)]
        exact: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Zero-transmitter test thresholds, error estimates, and minimax
    /// quantile.
    Detect {
        #[command(flatten)]
        channel: ChannelArgs,
        /// Statistic: hoeffding | ks.
        #[arg(long)]
        test: Option<String>,
        #[arg(long)]
        n0: Option<u64>,
        /// Type-I error budget.
        #[arg(long)]
        eps0: Option<f64>,
        /// Threshold override (otherwise from the formula).
        #[arg(long)]
        gamma0: Option<f64>,
        #[arg(long, value_parser = parse_count)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo simulation of coding epochs at every user count.
    Simulate {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long = "M")]
        m: Option<u64>,
        #[arg(long, value_parser = parse_f64_list)]
        eps: Option<F64List>,
        #[arg(long, value_parser = parse_u64_list)]
        n: Option<U64List>,
        #[arg(long)]
        test: Option<String>,
        #[arg(long, value_parser = parse_count)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        /// Reuse one codebook across epochs instead of redrawing.
        #[arg(long)]
        frozen_codebook: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the structural property battery; nonzero exit on failure.
    Verify {
        #[command(flatten)]
        channel: ChannelArgs,
        #[arg(long)]
        json: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match &cli.config {
        Some(path) => match FileConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        },
        None => FileConfig::default(),
    };
    let threads = cli
        .threads
        .or(cfg.threads)
        .or_else(|| std::env::var("RACLAB_THREADS").ok().and_then(|v| v.parse().ok()));
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli.command, &cfg) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::InvalidParameter(_) | Error::InvalidChannel(_) | Error::Json(_) => 2,
                Error::Infeasible(_) | Error::TableOverflow(_) | Error::BudgetExceeded(_) => 3,
                Error::Io(_) => 1,
            })
        }
    }
}

fn parse_test_kind(s: Option<&str>) -> raclab_core::Result<ZeroTestKind> {
    match s.unwrap_or("hoeffding") {
        "hoeffding" => Ok(ZeroTestKind::Hoeffding),
        "ks" => Ok(ZeroTestKind::Ks),
        other => Err(Error::InvalidParameter(format!(
            "unknown test {other:?} (hoeffding | ks)"
        ))),
    }
}

fn eps_from(flag: Option<F64List>, cfg: &FileConfig, k_max: usize) -> raclab_core::Result<Vec<f64>> {
    match (flag.map(|l| l.0), &cfg.eps) {
        (Some(v), _) if v.len() == 1 => EpsSpec::Scalar(v[0]).expand(k_max),
        (Some(v), _) => EpsSpec::PerUser(v).expand(k_max),
        (None, Some(spec)) => spec.expand(k_max),
        (None, None) => Err(Error::InvalidParameter("missing --eps".into())),
    }
}

/// Per-k (I, V) in bits, solved blocklengths, and the resulting design.
fn design_from(
    choice: &config::ChannelChoice,
    stats: &ChannelStatistics,
    m: u64,
    eps: &[f64],
    n_override: Option<Vec<u64>>,
    test: ZeroTestKind,
) -> raclab_core::Result<raclab_core::CodeDesign> {
    let k_max = stats.max_users();
    let n = match n_override {
        Some(n) => n,
        None => {
            let log_m = (m as f64).log2();
            let mut n = Vec::with_capacity(k_max);
            for k in 1..=k_max {
                let i_bits = stats.mutual_information(k) / LN_2;
                let v_bits2 = stats.dispersion(k) / (LN_2 * LN_2);
                let mut nk = solve_blocklength(i_bits, v_bits2, k, log_m, eps[k])?;
                if let Some(&prev) = n.last() {
                    if nk <= prev {
                        nk = prev + 1;
                    }
                }
                n.push(nk);
            }
            n
        }
    };
    choose_parameters(
        &choice.ch,
        &choice.px,
        stats,
        MessageCount::from_count(m)?,
        eps,
        &n,
        test,
        &ThresholdMode::NormalApprox,
    )
}

fn run(command: Command, cfg: &FileConfig) -> raclab_core::Result<ExitCode> {
    match command {
        Command::Stats { channel, out, json } => {
            cfg.check_task("stats")?;
            let choice = channel.resolve(cfg)?;
            let stats = ChannelStatistics::compute(&choice.ch, &choice.px)?;
            let mut csv = Csv::new(
                "units: I_k nats, V_k nats^2, T_k nats^3, B_k dimensionless",
                &["k", "I_k_nats", "V_k_nats2", "T_k", "B_k"],
            );
            for s in &stats.per_user {
                csv.row(&[
                    Cell::U(s.users as u64),
                    Cell::F(s.mutual_information),
                    Cell::F(s.dispersion),
                    Cell::F(s.third_abs_moment),
                    Cell::F(s.berry_esseen),
                ]);
            }
            let out = out.or_else(|| cfg.out.clone().map(PathBuf::from));
            let json = json.or_else(|| cfg.json.clone().map(PathBuf::from));
            if let Some(path) = &out {
                csv.write(path)?;
            } else {
                print!("{}", csv.into_string());
            }
            if let Some(path) = &json {
                write_json(path, &stats)?;
            }
            println!(
                "stats: {} K={} I_1={} nats",
                choice.label,
                stats.max_users(),
                fmt_float(stats.mutual_information(1))
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::AdderStats { delta, kmax, out } => {
            cfg.check_task("adder-stats")?;
            let delta = delta.or(cfg.delta).unwrap_or(0.2);
            let kmax = kmax.or(cfg.kmax).unwrap_or(50);
            let rows = emit_figure_data(delta, kmax)?;
            let mut csv = Csv::new(
                "units: I columns nats, V columns nats^2",
                &["k", "I_exact", "I_approx", "V_exact", "V_approx"],
            );
            for r in &rows {
                csv.row(&[
                    Cell::U(r.k),
                    Cell::F(r.i_exact),
                    Cell::F(r.i_approx),
                    Cell::F(r.v_exact),
                    Cell::F(r.v_approx),
                ]);
            }
            let out = out.or_else(|| cfg.out.clone().map(PathBuf::from));
            if let Some(path) = &out {
                csv.write(path)?;
            } else {
                print!("{}", csv.into_string());
            }
            println!("adder-stats: delta={delta} k<=>{kmax} rows={}", rows.len());
            Ok(ExitCode::SUCCESS)
        }

        Command::Blocklengths {
            channel,
            logm,
            eps,
            out,
            json,
        } => {
            cfg.check_task("blocklengths")?;
            let choice = channel.resolve(cfg)?;
            let stats = ChannelStatistics::compute(&choice.ch, &choice.px)?;
            let k_max = stats.max_users();
            let logm = logm
                .or(cfg.logm)
                .ok_or_else(|| Error::InvalidParameter("missing --logm".into()))?;
            let eps = eps_from(eps, cfg, k_max)?;
            let mut rows = Vec::new();
            for k in 1..=k_max {
                let i_bits = stats.mutual_information(k) / LN_2;
                let v_bits2 = stats.dispersion(k) / (LN_2 * LN_2);
                let n_k = solve_blocklength(i_bits, v_bits2, k, logm, eps[k])?;
                rows.push((k, n_k, logm / n_k as f64));
            }
            let mut csv = Csv::new(
                "units: R_k bits per channel use",
                &["k", "n_k", "R_k_bits"],
            );
            for &(k, n_k, r) in &rows {
                csv.row(&[Cell::U(k as u64), Cell::U(n_k), Cell::F(r)]);
            }
            let out = out.or_else(|| cfg.out.clone().map(PathBuf::from));
            if let Some(path) = &out {
                csv.write(path)?;
            } else {
                print!("{}", csv.into_string());
            }
            if let Some(path) = json.or_else(|| cfg.json.clone().map(PathBuf::from)) {
                let doc: Vec<_> = rows
                    .iter()
                    .map(|&(k, n_k, r)| {
                        serde_json::json!({"k": k, "n_k": n_k, "rate_bits": r})
                    })
                    .collect();
                write_json(&path, &doc)?;
            }
            let ns: Vec<String> = rows.iter().map(|r| r.1.to_string()).collect();
            println!("blocklengths: {} logm={logm} n=({})", choice.label, ns.join(", "));
            Ok(ExitCode::SUCCESS)
        }

        Command::RateRegion {
            a,
            b,
            logm,
            eps,
            grid,
            out,
            json,
        } => {
            cfg.check_task("rate-region")?;
            let a = a.or(cfg.a).ok_or_else(|| Error::InvalidParameter("missing --a".into()))?;
            let b = b.or(cfg.b).ok_or_else(|| Error::InvalidParameter("missing --b".into()))?;
            let logm = logm.or(cfg.logm).unwrap_or(1000.0);
            let eps = eps_from(eps, cfg, 2)?;
            let grid = grid.or(cfg.grid).unwrap_or(0.005);
            let ch = raclab_core::channel::make_binary_example(a, b)?;
            let region = sweep_rate_region(&ch, logm, &eps, grid)?;
            let mut csv = Csv::new(
                "units: R columns bits per channel use; feasible/dominant are 0/1 flags",
                &["p", "feasible", "R1", "R2", "n1", "n2", "dominant"],
            );
            for pt in &region.points {
                let (r1, r2, n1, n2) = if pt.feasible {
                    (
                        pt.rates.rates_bits[0],
                        pt.rates.rates_bits[1],
                        pt.n[0],
                        pt.n[1],
                    )
                } else {
                    (f64::NAN, f64::NAN, 0, 0)
                };
                csv.row(&[
                    Cell::F(pt.p),
                    Cell::B(pt.feasible),
                    Cell::F(r1),
                    Cell::F(r2),
                    Cell::U(n1),
                    Cell::U(n2),
                    Cell::B(pt.dominant),
                ]);
            }
            let out = out.or_else(|| cfg.out.clone().map(PathBuf::from));
            if let Some(path) = &out {
                csv.write(path)?;
            } else {
                print!("{}", csv.into_string());
            }
            if let Some(path) = json.or_else(|| cfg.json.clone().map(PathBuf::from)) {
                write_json(&path, &region)?;
            }
            let dominant: Vec<String> = region
                .dominant_points()
                .map(|p| {
                    format!(
                        "p={} (R1, R2)=({}, {})",
                        p.p,
                        fmt_float(p.rates.rates_bits[0]),
                        fmt_float(p.rates.rates_bits[1])
                    )
                })
                .collect();
            println!(
                "rate-region: a={a} b={b} logm={logm} grid={grid}: {} dominant point(s): {}",
                dominant.len(),
                dominant.join("; ")
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::RateCurve {
            channel,
            n1,
            eps,
            kmax,
            out,
            json,
        } => {
            cfg.check_task("rate-curve")?;
            let n1_list = n1
                .map(|l| l.0)
                .or_else(|| cfg.n1.clone())
                .unwrap_or_else(|| vec![20, 100, 500, 2500]);
            let eps = match eps.map(|l| l.0).or_else(|| cfg.eps.as_ref().and_then(|e| match e {
                EpsSpec::Scalar(v) => Some(vec![*v]),
                EpsSpec::PerUser(v) => Some(v.clone()),
            })) {
                Some(v) if v.len() == 1 => v[0],
                Some(_) => {
                    return Err(Error::InvalidParameter(
                        "rate-curve uses a single error target".into(),
                    ))
                }
                None => 1e-6,
            };
            let kmax = kmax.or(cfg.kmax).unwrap_or(30);
            // adder channels use the closed form; anything else is
            // enumerated exactly
            let kind = channel.channel.as_deref().or(cfg.channel.as_deref()).unwrap_or("adder");
            let (pairs, label): (Vec<(f64, f64)>, String) = if kind == "adder" {
                let delta = channel.delta.or(cfg.delta).unwrap_or(0.2);
                let pairs = (1..=kmax)
                    .map(|k| {
                        let (i, v) = adder_stats(k, delta, StatsMode::Exact)?;
                        Ok((i / LN_2, v / (LN_2 * LN_2)))
                    })
                    .collect::<raclab_core::Result<Vec<_>>>()?;
                (pairs, format!("adder(delta={delta})"))
            } else {
                let choice = channel.resolve(cfg)?;
                let stats = ChannelStatistics::compute(&choice.ch, &choice.px)?;
                let pairs = (1..=stats.max_users())
                    .map(|k| {
                        (
                            stats.mutual_information(k) / LN_2,
                            stats.dispersion(k) / (LN_2 * LN_2),
                        )
                    })
                    .collect();
                (pairs, choice.label.clone())
            };
            let mut csv = Csv::new(
                "units: rate columns bits per channel use",
                &["n1", "k", "n_k", "R_k_bits", "capacity_per_user_bits"],
            );
            let mut curves = Vec::new();
            for &n1 in &n1_list {
                let curve = rate_curve_from_pairs(&pairs, n1, eps)?;
                for row in &curve.rows {
                    csv.row(&[
                        Cell::U(n1),
                        Cell::U(row.k as u64),
                        Cell::U(row.n_k),
                        Cell::F(row.rate_bits),
                        Cell::F(row.capacity_per_user_bits),
                    ]);
                }
                curves.push(curve);
            }
            let out = out.or_else(|| cfg.out.clone().map(PathBuf::from));
            if let Some(path) = &out {
                csv.write(path)?;
            } else {
                print!("{}", csv.into_string());
            }
            if let Some(path) = json.or_else(|| cfg.json.clone().map(PathBuf::from)) {
                write_json(&path, &curves)?;
            }
            println!(
                "rate-curve: {label} eps={eps} n1 in {n1_list:?} k<={kmax}"
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Bound {
            channel,
            k,
            m,
            eps,
            n,
            test,
            trials,
            seed,
            exact,
            out,
        } => {
            cfg.check_task("bound")?;
            let choice = channel.resolve(cfg)?;
            let stats = ChannelStatistics::compute(&choice.ch, &choice.px)?;
            let k = k.or(cfg.k).unwrap_or(stats.max_users());
            let m = m.or(cfg.m).unwrap_or(16);
            let eps = eps_from(eps, cfg, stats.max_users())?;
            let test = parse_test_kind(test.as_deref().or(cfg.test.as_deref()))?;
            let design = design_from(&choice, &stats, m, &eps, n.map(|l| l.0).or_else(|| cfg.n.clone()), test)?;
            let method = if exact || cfg.exact == Some(true) {
                BoundMethod::Exact
            } else {
                BoundMethod::MonteCarlo {
                    trials: trials.or(cfg.trials).unwrap_or(100_000),
                    seed: seed.or(cfg.seed).unwrap_or(0),
                }
            };
            let report = evaluate_bound(&choice.ch, &choice.px, &design, k, method)?;
            let doc = serde_json::json!({ "design": design, "report": report });
            if let Some(path) = out.or_else(|| cfg.out.clone().map(PathBuf::from)) {
                write_json(&path, &doc)?;
            } else {
                println!("{}", serde_json::to_string_pretty(&doc)?);
            }
            println!(
                "bound: {} k={k} total={} (+/- {})",
                choice.label,
                fmt_float(report.total),
                fmt_float(report.total_std_error)
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Detect {
            channel,
            test,
            n0,
            eps0,
            gamma0,
            trials,
            seed,
            out,
        } => {
            cfg.check_task("detect")?;
            let choice = channel.resolve(cfg)?;
            let kind = match test.as_deref().or(cfg.test.as_deref()).unwrap_or("ks") {
                "ks" => TestStatistic::Ks,
                "hoeffding" => TestStatistic::Hoeffding,
                other => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown test {other:?} (hoeffding | ks)"
                    )))
                }
            };
            let n0 = n0.or(cfg.n0).unwrap_or(200);
            let eps0 = eps0.or(cfg.eps0).unwrap_or(0.05);
            let alphabet = choice.ch.outputs(choice.ch.max_users()).len();
            let gamma0 = gamma0.or(cfg.gamma0).unwrap_or(match kind {
                TestStatistic::Ks => ks_threshold(n0, eps0),
                TestStatistic::Hoeffding => hoeffding_threshold(n0, alphabet),
                TestStatistic::Llr => f64::NAN,
            });
            let trials = trials.or(cfg.trials).unwrap_or(100_000);
            let seed = seed.or(cfg.seed).unwrap_or(0);
            let report =
                estimate_test_errors(&choice.ch, &choice.px, kind, n0, gamma0, trials, seed)?;
            let null = marginal_on_full_alphabet(&choice.ch, &choice.px, 0)?;
            let alternatives: Vec<Vec<f64>> = (1..=choice.ch.max_users())
                .map(|k| marginal_on_full_alphabet(&choice.ch, &choice.px, k))
                .collect::<raclab_core::Result<_>>()?;
            let minimax = minimax_quantile(&null, &alternatives, eps0, trials.max(10_000), seed)?;
            let spec = TestSpec {
                kind,
                threshold: vec![gamma0],
                null: null.clone(),
                alternatives: alternatives.clone(),
            };
            spec.validate()?;
            let n0_opt = minimax
                .b
                .map(|b| n0_expansion(minimax.d_min, b, 2290))
                .transpose()?;
            let doc = serde_json::json!({
                "test": spec,
                "errors": report,
                "d_min": minimax.d_min,
                "i_min": minimax.i_min,
                "b": minimax.b,
                "n0_expansion_at_n1_2290": n0_opt,
            });
            if let Some(path) = out.or_else(|| cfg.out.clone().map(PathBuf::from)) {
                write_json(&path, &doc)?;
            } else {
                println!("{}", serde_json::to_string_pretty(&doc)?);
            }
            println!(
                "detect: {} test={kind:?} n0={n0} gamma0={} alpha={}",
                choice.label,
                fmt_float(gamma0),
                fmt_float(report.alpha.rate)
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Simulate {
            channel,
            m,
            eps,
            n,
            test,
            trials,
            seed,
            frozen_codebook,
            out,
        } => {
            cfg.check_task("simulate")?;
            let choice = channel.resolve(cfg)?;
            let stats = ChannelStatistics::compute(&choice.ch, &choice.px)?;
            let m = m.or(cfg.m).unwrap_or(16);
            let eps = eps_from(eps, cfg, stats.max_users())?;
            let test = parse_test_kind(test.as_deref().or(cfg.test.as_deref()))?;
            let design = design_from(&choice, &stats, m, &eps, n.map(|l| l.0).or_else(|| cfg.n.clone()), test)?;
            let trials = trials.or(cfg.trials).unwrap_or(5_000);
            let seed = seed.or(cfg.seed).unwrap_or(0);
            let mode = if frozen_codebook {
                CodebookMode::Frozen
            } else {
                CodebookMode::FreshPerEpoch
            };
            let mut results = Vec::new();
            for k in 0..=stats.max_users() {
                results.push(estimate_error_rates(
                    &choice.ch, &choice.px, &design, k, trials, seed, mode,
                )?);
            }
            let doc = serde_json::json!({ "design": design, "results": results });
            if let Some(path) = out.or_else(|| cfg.out.clone().map(PathBuf::from)) {
                write_json(&path, &doc)?;
            } else {
                println!("{}", serde_json::to_string_pretty(&doc)?);
            }
            let summary: Vec<String> = results
                .iter()
                .map(|r| format!("k={}: {}", r.k, fmt_float(r.error_rate)))
                .collect();
            println!(
                "simulate: {} M={m} trials={trials}: {}",
                choice.label,
                summary.join(", ")
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Verify { channel, json } => {
            cfg.check_task("verify")?;
            let choice = channel.resolve(cfg)?;
            let mut checks: Vec<(String, bool, String)> = Vec::new();

            let assumptions = check_assumptions(&choice.ch, &choice.px)?;
            checks.push((
                "assumptions.friendliness".into(),
                assumptions.friendliness,
                format!("margin {}", fmt_float(assumptions.friendliness_margin)),
            ));
            checks.push((
                "assumptions.interference".into(),
                assumptions.interference,
                format!("strength {}", fmt_float(assumptions.interference_strength)),
            ));
            checks.push((
                "assumptions.output-separation".into(),
                assumptions.output_separation_ok,
                format!("delta0 {}", fmt_float(assumptions.output_separation)),
            ));
            checks.push((
                "assumptions.dispersion-positive".into(),
                assumptions.dispersion_positive,
                format!("min V_k {}", fmt_float(assumptions.min_dispersion)),
            ));

            let stats = ChannelStatistics::compute(&choice.ch, &choice.px)?;
            let orderings = verify_orderings_from_stats(&stats);
            for (name, group) in [
                ("orderings.per-user-rate", &orderings.per_user_rate),
                ("orderings.conditional-rate", &orderings.conditional_rate),
                ("orderings.cross-expectation-weak", &orderings.cross_expectation_weak),
                ("orderings.cross-expectation-strict", &orderings.cross_expectation_strict),
                ("orderings.chain-increasing", &orderings.chain_increasing),
            ] {
                let pass = group.iter().all(|c| c.pass);
                let worst = group
                    .iter()
                    .map(|c| c.margin)
                    .fold(f64::INFINITY, f64::min);
                checks.push((name.into(), pass, format!("min margin {}", fmt_float(worst))));
            }

            let mut chain_ok = true;
            let mut chain_worst = 0.0f64;
            for k in 1..=stats.max_users() {
                let total: f64 = (1..=k).map(|i| stats.chain_mi(i, k)).sum();
                let gap = (total - stats.mutual_information(k)).abs();
                chain_worst = chain_worst.max(gap);
                chain_ok &= gap <= 1e-10;
            }
            checks.push((
                "identity.chain-rule".into(),
                chain_ok,
                format!("max gap {}", fmt_float(chain_worst)),
            ));

            let mut disp_ok = true;
            let mut disp_worst = 0.0f64;
            for k in 1..=stats.max_users() {
                let pmf = joint_density_pmf(&choice.ch, &choice.px, k, k, k)?;
                let gap = (pmf.variance() - (pmf.second_moment() - pmf.mean() * pmf.mean())).abs();
                disp_worst = disp_worst.max(gap);
                disp_ok &= gap <= 1e-9;
            }
            checks.push((
                "identity.dispersion-routes".into(),
                disp_ok,
                format!("max gap {}", fmt_float(disp_worst)),
            ));

            let round_trip = (|| -> raclab_core::Result<bool> {
                let i_bits = stats.mutual_information(1) / LN_2;
                let v_bits2 = stats.dispersion(1) / (LN_2 * LN_2);
                let n1 = 500u64;
                let log_m = solve_message_size(i_bits, v_bits2, n1, 1e-3)?;
                let back = solve_blocklength(i_bits, v_bits2, 1, log_m, 1e-3)?;
                Ok(back == n1 || back == n1 + 1)
            })();
            match round_trip {
                Ok(pass) => checks.push((
                    "design.round-trip".into(),
                    pass,
                    "message size <-> blocklength at n1 = 500".into(),
                )),
                Err(e) => checks.push(("design.round-trip".into(), false, format!("{e}"))),
            }

            let mut all = true;
            for (name, pass, detail) in &checks {
                println!("{} {name} — {detail}", if *pass { "PASS" } else { "FAIL" });
                all &= *pass;
            }
            if let Some(path) = json.or_else(|| cfg.json.clone().map(PathBuf::from)) {
                let doc: Vec<_> = checks
                    .iter()
                    .map(|(name, pass, detail)| {
                        serde_json::json!({"name": name, "pass": pass, "detail": detail})
                    })
                    .collect();
                write_json(&path, &doc)?;
            }
            println!(
                "verify: {} {}",
                choice.label,
                if all { "all checks passed" } else { "FAILURES PRESENT" }
            );
            Ok(if all { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}
