use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use cv_edr::io::{analyze_recorded, parse_config, write_recorded, write_results};
use cv_edr::metrics::{build_report, minimize_branciard, EdrReport};
use cv_edr::sampling::{trial_records, TrialStats};
use cv_edr::sweep::{compare_analytic_empirical, run_sweep, StateSpec, SweepConfig};
use cv_edr::{Error, GaussianState, Result, Transmission};

/// Error-disturbance relations for Gaussian states under heterodyne measurement.
#[derive(Parser)]
#[command(name = "cv-edr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a transmission sweep and write sweep.csv, bounds.csv and report.json.
    Sweep {
        /// key=value configuration file; defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the analytic report at one transmission.
    Report {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        t: f64,
    },
    /// Find the transmission minimising the Branciard left-hand side.
    Minimize {
        #[command(flatten)]
        state: StateArgs,
    },
    /// Estimate error and disturbance from recorded quadrature files.
    Analyze {
        /// X-basis records (x_c, x_d); repeat for several repetitions.
        #[arg(long = "x", required = true)]
        x: Vec<PathBuf>,
        /// P-basis records (p_c, p_d), paired with --x in order.
        #[arg(long = "p", required = true)]
        p: Vec<PathBuf>,
        /// Direct t=1 X records of the signal, one per repetition.
        #[arg(long = "ref-x", requires = "ref_p")]
        ref_x: Vec<PathBuf>,
        /// Direct t=1 P records of the signal, one per repetition.
        #[arg(long = "ref-p", requires = "ref_x")]
        ref_p: Vec<PathBuf>,
        #[arg(long)]
        t: f64,
    },
    /// Write synthetic recorded-data files for one state and transmission.
    Gen {
        #[command(flatten)]
        state: StateArgs,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 500_000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        trials: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct StateArgs {
    /// coherent | squeezed_pure | squeezed_db | thermal
    #[arg(long)]
    state: String,
    /// Family parameter as key=value (mean_x, mean_p, r, sqz_db, antisqz_db).
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    /// Detection efficiency applied to the signal before the beam splitter.
    #[arg(long)]
    loss_eff: Option<f64>,
}

impl StateArgs {
    fn signal(&self) -> Result<(StateSpec, GaussianState)> {
        let spec = StateSpec::from_params(&self.state, &self.params)?;
        let s = spec.build()?;
        let s = match self.loss_eff {
            Some(eff) => s.apply_loss(eff)?,
            None => s,
        };
        Ok((spec, s))
    }
}

fn parse_param(s: &str) -> std::result::Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected key=value, got '{s}'"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("cannot parse '{v}' as a number"))?;
    Ok((k.trim().to_string(), v))
}

fn verdict(violated: bool) -> &'static str {
    if violated {
        "violated"
    } else {
        "valid"
    }
}

fn print_report(label: &str, r: &EdrReport) {
    println!("state            {label}");
    println!("t                {}", r.t);
    println!("epsilon          {:.17}", r.epsilon);
    println!("eta              {:.17}", r.eta);
    println!("sigma_a          {:.17}", r.sigma_a);
    println!("sigma_b          {:.17}", r.sigma_b);
    println!("c_ab             {}", r.c_ab);
    println!("lhs_heisenberg   {:.17}  {}", r.lhs_heisenberg, verdict(r.heisenberg_violated));
    println!("lhs_ozawa        {:.17}  {}", r.lhs_ozawa, verdict(r.ozawa_violated));
    println!(
        "lhs_branciard    {:.17}  {}{}",
        r.lhs_branciard,
        verdict(r.branciard_violated),
        if r.branciard_clamped { " (discriminant clamped)" } else { "" }
    );
}

fn print_error_bars(stats: &TrialStats) {
    println!("trials           {}", stats.trials());
    for (name, s) in [
        ("epsilon", &stats.epsilon),
        ("eta", &stats.eta),
        ("sigma_a", &stats.sigma_a),
        ("sigma_b", &stats.sigma_b),
        ("lhs_heisenberg", &stats.lhs_heisenberg),
        ("lhs_ozawa", &stats.lhs_ozawa),
        ("lhs_branciard", &stats.lhs_branciard),
    ] {
        println!("{:<16} {:.17} +/- {:.3e}", format!("{name}_rms"), s.mean, s.rms_error_bar);
    }
    println!("branciard_clamped_trials {}", stats.branciard_clamped_trials);
}

fn run(cli: Cli) -> Result<()> {
    let meter = GaussianState::vacuum();
    match cli.command {
        Command::Sweep { config, out } => {
            let cfg = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
                    parse_config(&text).map_err(|e| match e {
                        Error::Parse { line, msg, .. } => Error::Parse { path: path.display().to_string(), line, msg },
                        other => other,
                    })?
                }
                None => SweepConfig::default(),
            };
            let mut result = run_sweep(&cfg)?;
            result.metadata.timestamp = std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .ok()
                .map(|d| d.as_secs());
            let files = write_results(&result, &out)?;
            println!("rows             {}", result.rows.len());
            println!("wrote            {}", files.sweep_csv.display());
            println!("wrote            {}", files.bounds_csv.display());
            println!("wrote            {}", files.report_json.display());
            if cfg.include_empirical {
                for d in compare_analytic_empirical(&result)? {
                    println!(
                        "{:<16} max|dev| {:.3e}  mean|dev| {:.3e}  outside 3 bars {}/{}",
                        d.quantity, d.max_abs, d.mean_abs, d.outside_3_bars, d.points
                    );
                }
            }
        }
        Command::Report { state, t } => {
            let (spec, signal) = state.signal()?;
            let r = build_report(&signal, &meter, Transmission::new(t)?);
            print_report(&spec.label(), &r);
        }
        Command::Minimize { state } => {
            let (spec, signal) = state.signal()?;
            let (t, lhs) = minimize_branciard(&signal, &meter);
            if !lhs.is_finite() {
                return Err(Error::Numerical("minimisation produced a non-finite value".into()));
            }
            println!("state            {}", spec.label());
            println!("t_star           {:.6}", t.t());
            println!("lhs_star         {lhs:.17}");
        }
        Command::Analyze { x, p, ref_x, ref_p, t } => {
            let t = Transmission::new(t)?;
            let reference = if ref_x.is_empty() { None } else { Some((&ref_x[..], &ref_p[..])) };
            let a = analyze_recorded(&x, &p, reference, t)?;
            print_report("recorded", &a.stats.mean_report());
            println!(
                "sigma_source     {}",
                if a.direct_sigma { "reference records" } else { "reconstructed from outputs" }
            );
            if a.stats.trials() > 1 {
                print_error_bars(&a.stats);
            }
        }
        Command::Gen { state, t, n, seed, trials, out } => {
            let (_, signal) = state.signal()?;
            let t = Transmission::new(t)?;
            if trials == 0 {
                return Err(Error::Validation("trials must be >= 1".into()));
            }
            std::fs::create_dir_all(&out).map_err(|e| Error::Io { path: out.clone(), source: e })?;
            for k in 0..trials {
                let rec = trial_records(&signal, &meter, t, n, seed, k)?;
                for (name, batch) in [("x", &rec.x), ("p", &rec.p), ("ref_x", &rec.ref_x), ("ref_p", &rec.ref_p)] {
                    let path = out.join(format!("{name}_{k:03}.csv"));
                    write_recorded(batch, &path)?;
                    println!("wrote            {}", path.display());
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            let first = first.trim_start_matches("error: ");
            eprintln!("error[validation]: {first}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {}", e.kind(), e.to_string().replace('\n', " "));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
