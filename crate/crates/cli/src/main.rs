use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use imitation_core::complete::{run_complete_traced, CompleteRun, BAND_EPS};
use imitation_core::config::{config_stats, InitialSpec};
use imitation_core::cycle::{default_max_generations, run_to_absorption_traced};
use imitation_core::oracle::{
    complete_chain, gamblers_ruin_duration, merging_times, solve_absorption,
};
use imitation_core::rng::CounterRng;
use imitation_core::sweep::{
    planted_run, run_scaling, run_sweep, write_csv, write_pgm, write_scaling_csv,
};
use imitation_core::{
    classify, Axis, CompleteState, CycleState, DomainError, GameParams, Initial, OracleError,
    ScalingSpec, SweepError, SweepSpec, Topology,
};

#[derive(Parser)]
#[command(
    name = "imitation",
    version,
    about = "Proportional imitation dynamics on cycles and complete graphs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// One run on the n-cycle until steady or the generation cap.
    Cycle(RunArgs),
    /// One run on the complete graph K_n.
    Complete(RunArgs),
    /// Grid sweep over (S, T); writes CSV and optionally a PGM heatmap.
    Sweep(SweepArgs),
    /// Absorption-time statistics across graph sizes at one (S, T).
    Scaling(ScalingArgs),
    /// Exact Markov-chain solve, or the closed-form merging/ruin times.
    Oracle(OracleArgs),
    /// Run statistics of an initial cycle configuration.
    Stats(StatsArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Topo {
    Cycle,
    Complete,
}

impl From<Topo> for Topology {
    fn from(t: Topo) -> Self {
        match t {
            Topo::Cycle => Topology::Cycle,
            Topo::Complete => Topology::Complete,
        }
    }
}

#[derive(Args, Clone)]
struct Point {
    /// Sucker payoff in [-1, 1].
    #[arg(long = "S", allow_negative_numbers = true)]
    s: f64,
    /// Temptation payoff in [0, 2].
    #[arg(long = "T")]
    t: f64,
}

#[derive(Args, Clone)]
struct InitArgs {
    /// Explicit cycle configuration, e.g. 0011010.
    #[arg(long)]
    init: Option<String>,
    /// Per-vertex cooperation probability on the cycle.
    #[arg(long, default_value_t = 0.5)]
    pc: f64,
    /// Initial cooperator fraction on K_n.
    #[arg(long, default_value_t = 0.5)]
    theta0: f64,
    /// Start the cycle from a single run of this many cooperators.
    #[arg(long, conflicts_with = "init")]
    planted: Option<usize>,
}

impl InitArgs {
    fn initial(&self, topology: Topology) -> Initial {
        match topology {
            Topology::Complete => Initial::Fraction(self.theta0),
            Topology::Cycle => match (&self.init, self.planted) {
                (Some(bits), _) => Initial::Bits(bits.clone()),
                (None, Some(len)) => Initial::PlantedRun(len),
                (None, None) => Initial::CoopProb(self.pc),
            },
        }
    }
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[command(flatten)]
    point: Point,
    /// Generation cap; defaults to 10 n ceil(log2 n) on the cycle and 10^6 on K_n.
    #[arg(long)]
    gens: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    init: InitArgs,
    /// Write every visited state to this file ("-" for stdout).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// On K_n, jump over generations in which nothing switches.
    #[arg(long)]
    skip_idle: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_enum, default_value = "cycle")]
    topology: Topo,
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Grid cells per axis.
    #[arg(long, default_value_t = 20)]
    steps: usize,
    /// Shortcut for the 100 x 100 grid.
    #[arg(long, conflicts_with = "steps")]
    full: bool,
    #[arg(long = "S-min", default_value_t = -1.0, allow_negative_numbers = true)]
    s_min: f64,
    #[arg(long = "S-max", default_value_t = 1.0, allow_negative_numbers = true)]
    s_max: f64,
    #[arg(long = "T-min", default_value_t = 0.0)]
    t_min: f64,
    #[arg(long = "T-max", default_value_t = 2.0)]
    t_max: f64,
    #[arg(long, default_value_t = 10_000)]
    gens: u64,
    #[arg(long, default_value_t = 100)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    init: InitArgs,
    /// Snap one T sample per S column onto each border line.
    #[arg(long)]
    include_borders: bool,
    /// CSV output path ("-" for stdout).
    #[arg(long, default_value = "-")]
    out: PathBuf,
    /// Optional PGM heatmap path.
    #[arg(long)]
    pgm: Option<PathBuf>,
}

#[derive(Args)]
struct ScalingArgs {
    #[arg(long, value_enum, default_value = "cycle")]
    topology: Topo,
    #[command(flatten)]
    point: Point,
    /// Graph sizes, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "64,128,256,512,1024,2048,4096"
    )]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 200)]
    reps: usize,
    #[arg(long)]
    gens: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    init: InitArgs,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long, value_enum, default_value = "cycle")]
    topology: Topo,
    #[arg(long, default_value_t = 8)]
    n: usize,
    #[arg(long = "S", allow_negative_numbers = true)]
    s: Option<f64>,
    #[arg(long = "T")]
    t: Option<f64>,
    /// Print the merging times for switching probabilities B and D_BAR instead.
    #[arg(long, num_args = 2, value_names = ["B", "D_BAR"])]
    merging: Option<Vec<f64>>,
    /// Print the ruin duration for step probabilities R, Q and start L instead.
    #[arg(long, num_args = 3, value_names = ["R", "Q", "L"])]
    ruin: Option<Vec<f64>>,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

#[derive(Args)]
struct StatsArgs {
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    init: InitArgs,
    /// Window lengths for the all-cooperator window counts.
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
    windows: Vec<usize>,
    #[arg(long, default_value = "-")]
    out: PathBuf,
}

fn open_out(path: &PathBuf) -> Result<Box<dyn Write>> {
    if path.as_os_str() == "-" {
        Ok(Box::new(BufWriter::new(io::stdout().lock())))
    } else {
        let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
        Ok(Box::new(BufWriter::new(f)))
    }
}

fn params(point: &Point) -> Result<GameParams> {
    Ok(GameParams::new(point.s, point.t)?)
}

fn cmd_cycle(args: RunArgs) -> Result<()> {
    let p = params(&args.point)?;
    let state = match args.init.initial(Topology::Cycle) {
        Initial::Bits(b) => CycleState::from_bitstring(&b)?,
        Initial::PlantedRun(len) => {
            if len > args.n || args.n < 3 {
                return Err(DomainError::Invalid(format!(
                    "planted run of {len} in n = {}",
                    args.n
                ))
                .into());
            }
            planted_run(args.n, len)
        }
        _ => InitialSpec::new(args.n, args.init.pc, args.seed)?.sample_seeded(),
    };
    let cap = args
        .gens
        .unwrap_or_else(|| default_max_generations(state.len()));
    let rng = CounterRng::new(args.seed);
    let mut trace = args.trace.as_ref().map(open_out).transpose()?;
    let mut io_err = None;
    let report = run_to_absorption_traced(&state, &p, cap, &rng, |s| {
        if let Some(w) = trace.as_mut() {
            if let Err(e) = writeln!(w, "{}", s.snapshot()) {
                io_err.get_or_insert(e);
            }
        }
    });
    if let Some(e) = io_err {
        return Err(e.into());
    }
    if let Some(mut w) = trace {
        w.flush()?;
    }
    let d = &report.final_state_summary;
    println!(
        "zone={} quadrant={:?}",
        classify(&p).zone,
        classify(&p).quadrant
    );
    println!(
        "outcome={:?} generations={} final_coop_fraction={} longest_c_run={} longest_d_run={}",
        report.outcome,
        report.generations,
        report.final_coop_fraction,
        d.longest_c_run,
        d.longest_d_run
    );
    Ok(())
}

fn cmd_complete(args: RunArgs) -> Result<()> {
    let p = params(&args.point)?;
    let state = CompleteState::from_fraction(args.n, args.init.theta0)?;
    let opts = CompleteRun {
        max_generations: args.gens.unwrap_or(1_000_000),
        band_eps: Some(BAND_EPS),
        skip_idle: args.skip_idle,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut trace = args.trace.as_ref().map(open_out).transpose()?;
    if let Some(w) = trace.as_mut() {
        writeln!(w, "generation,delta")?;
    }
    let mut io_err = None;
    let report = run_complete_traced(&state, &p, opts, &mut rng, |s| {
        if let Some(w) = trace.as_mut() {
            if let Err(e) = writeln!(w, "{},{}", s.generation(), s.delta()) {
                io_err.get_or_insert(e);
            }
        }
    });
    if let Some(e) = io_err {
        return Err(e.into());
    }
    if let Some(mut w) = trace {
        w.flush()?;
    }
    if let Some(c) = imitation_core::complete::critical_point(args.n, &p) {
        println!("delta_star={} integer={}", c.delta_star, c.is_integer);
    }
    println!(
        "outcome={:?} generations={} final_delta={} final_coop_fraction={} band_entry={}",
        report.outcome,
        report.generations,
        report.final_delta,
        report.final_coop_fraction,
        report
            .band_entry
            .map_or("none".to_string(), |g| g.to_string())
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let steps = if args.full { 100 } else { args.steps };
    let topology = Topology::from(args.topology);
    let spec = SweepSpec {
        topology,
        n: args.n,
        initial: args.init.initial(topology),
        s_axis: Axis::new(args.s_min, args.s_max, steps),
        t_axis: Axis::new(args.t_min, args.t_max, steps),
        max_generations: args.gens,
        reps: args.reps,
        seed: args.seed,
        include_borders: args.include_borders,
    };
    spec.validate()?;
    let table = run_sweep(&spec)?;
    write_csv(&table, open_out(&args.out)?)?;
    if let Some(path) = &args.pgm {
        write_pgm(&table, open_out(path)?)?;
    }
    Ok(())
}

fn cmd_scaling(args: ScalingArgs) -> Result<()> {
    let topology = Topology::from(args.topology);
    let spec = ScalingSpec {
        topology,
        s: args.point.s,
        t: args.point.t,
        initial: args.init.initial(topology),
        sizes: args.sizes,
        reps: args.reps,
        seed: args.seed,
        max_generations: args.gens,
    };
    let rows = run_scaling(&spec)?;
    for r in rows.iter().filter(|r| r.flagged()) {
        eprintln!(
            "warning: n={} timed out in {}/{} runs",
            r.n, r.n_timeout, r.reps
        );
    }
    write_scaling_csv(&rows, open_out(&args.out)?)?;
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<()> {
    let mut out = open_out(&args.out)?;
    if let Some(v) = &args.merging {
        let (t1, t2, t3) = merging_times(v[0], v[1])?;
        writeln!(out, "tau1,tau2,tau3\n{t1},{t2},{t3}")?;
        return Ok(());
    }
    if let Some(v) = &args.ruin {
        if v[2].fract() != 0.0 || v[2] < 0.0 {
            return Err(DomainError::Invalid(format!("start {} is not a state", v[2])).into());
        }
        let d = gamblers_ruin_duration(v[0], v[1], v[2] as usize)?;
        writeln!(out, "duration\n{d}")?;
        return Ok(());
    }
    let (Some(s), Some(t)) = (args.s, args.t) else {
        return Err(
            DomainError::Invalid("--S and --T are required for a chain solve".into()).into(),
        );
    };
    let p = GameParams::new(s, t)?;
    match Topology::from(args.topology) {
        Topology::Cycle => {
            let n = args.n;
            let chain = solve_absorption(n, &p)?;
            chain.write_csv(out, |m| {
                CycleState::from_mask(n, m as u64)
                    .map_or_else(|_| m.to_string(), |s| s.to_bitstring())
            })?;
        }
        Topology::Complete => {
            let chain = complete_chain(args.n, &p)?;
            chain.write_csv(out, |d| d.to_string())?;
        }
    }
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let state = match &args.init.init {
        Some(bits) => CycleState::from_bitstring(bits)?,
        None => InitialSpec::new(args.n, args.init.pc, args.seed)?.sample_seeded(),
    };
    let st = config_stats(&state, &args.windows);
    let mut out = open_out(&args.out)?;
    let mut header = vec![
        "n".to_string(),
        "cooperators".to_string(),
        "longest_c_run".to_string(),
        "longest_d_run".to_string(),
        "longest_alternating".to_string(),
        "longest_non_barrier".to_string(),
    ];
    let mut row = vec![
        state.len().to_string(),
        state.cooperators().to_string(),
        st.longest_c_run.to_string(),
        st.longest_d_run.to_string(),
        st.longest_alternating.to_string(),
        st.longest_non_barrier.to_string(),
    ];
    for (l, r) in &st.window_counts {
        header.push(format!("r_{l}"));
        row.push(r.to_string());
    }
    writeln!(out, "{}\n{}", header.join(","), row.join(","))?;
    out.flush()?;
    Ok(())
}

fn is_validation(err: &anyhow::Error) -> bool {
    err.downcast_ref::<DomainError>().is_some()
        || matches!(
            err.downcast_ref::<SweepError>(),
            Some(SweepError::Domain(_))
        )
        || matches!(
            err.downcast_ref::<OracleError>(),
            Some(OracleError::Domain(_) | OracleError::TooLarge { .. })
        )
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Cycle(a) => cmd_cycle(a),
        Command::Complete(a) => cmd_complete(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Scaling(a) => cmd_scaling(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Stats(a) => cmd_stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if is_validation(&e) {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
