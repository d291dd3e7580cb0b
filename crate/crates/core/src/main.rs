use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use solc::assembler::System;
use solc::compiler::{
    compile_adder, gate_count_report, FactorSpec, SubsetSumSpec, DEFAULT_RAMP,
};
use solc::device::validate_params;
use solc::gate::check_gate_configs;
use solc::integrator::{initial_state, integrate, IntegrationOpts, Method, Outcome};
use solc::netlist::Netlist;
use solc::runner::{
    decode_readout, estimate_success_probability, family_instance, scaling_sweep, solve,
    write_atomic, Family, Machine, Problem, SolveOpts,
};
use solc::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "solc", version, about = "Self-organizing logic circuit simulator")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Parameter file (key=value lines); falls back to $SOLC_PARAMS.
    #[arg(long, global = true)]
    params: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true)]
    dt: Option<f64>,
    #[arg(long = "t-max", global = true)]
    t_max: Option<f64>,
    #[arg(long, global = true)]
    method: Option<Method>,
    /// Write the JSON result (or netlist, for `compile`) here instead of stdout.
    #[arg(long, short = 'o', global = true)]
    out: Option<PathBuf>,
    /// Record node voltages every n steps.
    #[arg(long = "record-every", global = true)]
    record_every: Option<usize>,
    /// Independent trials; more than one reports a success probability.
    #[arg(long, global = true, default_value_t = 1)]
    trials: usize,
    /// Extra attempts from fresh random states after a failed one.
    #[arg(long, global = true, default_value_t = 0)]
    retries: u32,
    /// Fold constant bits of subset-sum elements into wiring.
    #[arg(long = "fold-constants", global = true)]
    fold_constants: bool,
    /// Trajectory CSV path (enables recording every 100 steps if unset).
    #[arg(long, global = true)]
    csv: Option<PathBuf>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Factor an integer by relaxing a multiplier circuit.
    Factor {
        n: u64,
        /// Width of n in bits (defaults to its bit length, at least 4).
        #[arg(long)]
        bits: Option<usize>,
    },
    /// Find a subset of the set summing to the target.
    SubsetSum {
        #[arg(long, value_delimiter = ',', required = true)]
        set: Vec<u64>,
        #[arg(long)]
        target: u64,
        /// Bits per element.
        #[arg(long)]
        precision: Option<usize>,
    },
    /// Integrate a netlist file.
    Simulate { netlist: PathBuf },
    /// Emit a netlist and its gate count report.
    Compile {
        #[command(subcommand)]
        target: CompileTarget,
    },
    /// Structural and dynamic scaling sweep.
    Sweep {
        family: SweepFamily,
        /// Range `lo:hi:step` (inclusive) of n_n for factor.
        #[arg(long, default_value = "6:12:3")]
        bits: String,
        /// Range of precisions for subset-sum.
        #[arg(long, default_value = "2:6:1")]
        precision: String,
        /// Number of elements for subset-sum.
        #[arg(long = "elements", default_value_t = 3)]
        elements: usize,
        /// Also write the CSV report.
        #[arg(long = "report-csv")]
        report_csv: Option<PathBuf>,
    },
    /// Static check of every gate configuration.
    CheckGates,
    /// Print the effective parameters and any warnings.
    Params,
}

#[derive(Subcommand, Debug)]
enum CompileTarget {
    Factor {
        /// Number to factor; defaults to a balanced semiprime of the width.
        n: Option<u64>,
        #[arg(long)]
        bits: Option<usize>,
    },
    SubsetSum {
        #[arg(long, value_delimiter = ',', required = true)]
        set: Vec<u64>,
        #[arg(long)]
        target: u64,
        #[arg(long)]
        precision: Option<usize>,
    },
    /// Ripple adder run in reverse, `adderN` style names accepted as `adder N`.
    Adder {
        width: usize,
        /// Pinned sum; defaults to 2^width + 1.
        #[arg(long)]
        sum: Option<u64>,
    },
    #[command(name = "adder1", hide = true)]
    Adder1,
    #[command(name = "adder2", hide = true)]
    Adder2,
    #[command(name = "adder3", hide = true)]
    Adder3,
    #[command(name = "adder4", hide = true)]
    Adder4,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum SweepFamily {
    Factor,
    SubsetSum,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn integration_opts(g: &Global) -> Result<IntegrationOpts> {
    let mut o = IntegrationOpts { seed: g.seed, ..Default::default() };
    if let Some(dt) = g.dt {
        o.dt = dt;
        o.eq_dwell = 100.0 * dt;
    }
    if let Some(t) = g.t_max {
        o.t_max = t;
    }
    if let Some(m) = g.method {
        o.method = m;
    }
    o.record_every = match (g.record_every, &g.csv) {
        (Some(k), _) => k,
        (None, Some(_)) => 100,
        (None, None) => 0,
    };
    o.validate()?;
    Ok(o)
}

fn solve_opts(g: &Global) -> Result<SolveOpts> {
    Ok(SolveOpts { integration: integration_opts(g)?, retries: g.retries, ramp: DEFAULT_RAMP })
}

fn emit(g: &Global, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable") + "\n";
    match &g.out {
        Some(p) => write_atomic(p, text.as_bytes()),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Problem(msg.into())
}

fn run(cli: &Cli) -> Result<i32> {
    let g = &cli.global;
    match &cli.cmd {
        Command::Factor { n, bits } => cmd_factor(g, *n, *bits),
        Command::SubsetSum { set, target, precision } => {
            let mut spec = SubsetSumSpec::new(set.clone(), *target, *precision)?;
            spec.fold_constants = g.fold_constants;
            if spec.is_trivial() {
                return Err(usage("target 0 is met only by the empty subset"));
            }
            run_problem(g, Problem::SubsetSum(spec))
        }
        Command::Simulate { netlist } => cmd_simulate(g, netlist),
        Command::Compile { target } => cmd_compile(g, target),
        Command::Sweep { family, bits, precision, elements, report_csv } => {
            let (fam, range) = match family {
                SweepFamily::Factor => (Family::Factor, bits),
                SweepFamily::SubsetSum => (Family::SubsetSum { n: *elements }, precision),
            };
            let sizes = parse_range(range)?;
            let machine = Machine::load(g.params.as_deref())?;
            let trials = g.trials;
            let rep = scaling_sweep(fam, &sizes, trials, &machine, &solve_opts(g)?)?;
            if let Some(p) = report_csv {
                let mut buf = Vec::new();
                rep.write_csv(&mut buf)?;
                write_atomic(p, &buf)?;
            }
            emit(g, &serde_json::to_value(&rep).expect("serializable"))?;
            Ok(0)
        }
        Command::CheckGates => {
            let machine = Machine::load(g.params.as_deref())?;
            let rows = check_gate_configs(&machine.tables, &machine.dev);
            let mut failed = 0;
            for r in &rows {
                let bits: String = r.bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
                let kind = if r.consistent { "consistent" } else { "inconsistent" };
                let verdict = if r.passed { "PASS" } else { "FAIL" };
                failed += usize::from(!r.passed);
                eprintln!("{:<4} {bits} {kind:<12} {verdict} {}", r.kind, r.detail);
            }
            let zero_ok = rows.iter().filter(|r| r.consistent && r.passed).count();
            let zero_all = rows.iter().filter(|r| r.consistent).count();
            eprintln!("{zero_ok}/{zero_all} zero-current checks pass, {failed} failures total");
            emit(g, &serde_json::to_value(&rows).expect("serializable"))?;
            Ok(if failed == 0 { 0 } else { 2 })
        }
        Command::Params => {
            let machine = Machine::load(g.params.as_deref())?;
            for w in validate_params(&machine.dev.p)? {
                eprintln!("warning: {w}");
            }
            print!("{}", machine.dev.p.to_kv_string());
            Ok(0)
        }
    }
}

fn cmd_factor(g: &Global, n: u64, bits: Option<usize>) -> Result<i32> {
    if n < 4 {
        return Err(usage(format!("n must be at least 4, got {n}")));
    }
    let width = (64 - n.leading_zeros()) as usize;
    if let Some(b) = bits {
        if b < width {
            return Err(usage(format!("{n} needs {width} bits, --bits {b} is too small")));
        }
    }
    if n.is_multiple_of(2) {
        // Even inputs never reach the circuit.
        emit(
            g,
            &json!({
                "status": "solved", "verified": true, "n": n,
                "answer": {"factors": {"p": 2, "q": n / 2}}, "note": "even input",
            }),
        )?;
        return Ok(0);
    }
    let spec = FactorSpec::new(n, Some(bits.unwrap_or(width).max(4)))?;
    run_problem(g, Problem::Factor(spec))
}

fn run_problem(g: &Global, problem: Problem) -> Result<i32> {
    let machine = Machine::load(g.params.as_deref())?;
    let opts = solve_opts(g)?;
    if g.trials > 1 {
        let est = estimate_success_probability(&problem, &machine, g.trials, &opts)?;
        let code = if est.successes > 0 { 0 } else { 2 };
        emit(g, &json!({"problem": problem, "estimate": est}))?;
        return Ok(code);
    }
    let out = solve(&problem, &machine, &opts)?;
    if let Some(csv) = &g.csv {
        // Re-run the reported seed with recording on.
        let compiled = problem.compile(opts.ramp)?;
        let sys = System::assemble(&compiled.netlist, &machine.dev, &machine.tables)?;
        let io = IntegrationOpts { seed: out.seed, ..opts.integration.clone() };
        let r = integrate(&sys, &initial_state(&sys, out.seed), &io)?;
        let mut buf = Vec::new();
        r.trajectory.write_csv(&mut buf)?;
        write_atomic(csv, &buf)?;
    }
    emit(g, &json!({"problem": problem, "result": out}))?;
    Ok(out.status.exit_code())
}

fn cmd_simulate(g: &Global, path: &Path) -> Result<i32> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let net = Netlist::deserialize(&text).map_err(|e| match e {
        Error::Parse { line, msg } => {
            Error::Parse { line, msg: format!("{}: {msg}", path.display()) }
        }
        other => other,
    })?;
    let machine = Machine::load(g.params.as_deref())?;
    let sys = System::assemble(&net, &machine.dev, &machine.tables)?;
    let opts = integration_opts(g)?;
    let r = integrate(&sys, &initial_state(&sys, g.seed), &opts)?;
    if let Some(csv) = &g.csv {
        let mut buf = Vec::new();
        r.trajectory.write_csv(&mut buf)?;
        write_atomic(csv, &buf)?;
    }
    let groups = if net.readout.is_empty() {
        None
    } else {
        decode_readout(&sys, &r.state, r.t_end, opts.eq_tol_v).ok()
    };
    let values: Option<Vec<_>> = groups.as_ref().map(|gs| {
        gs.iter().map(|b| json!({"name": b.name, "value": b.value(), "bits": b.bits})).collect()
    });
    emit(
        g,
        &json!({
            "outcome": r.outcome, "t_end": r.t_end, "t_converged": r.t_converged,
            "steps": r.steps, "audit": r.audit, "readout": values, "fault": r.fault,
        }),
    )?;
    Ok(match r.outcome {
        Outcome::Converged => 0,
        Outcome::BudgetExhausted => 2,
        Outcome::Fault => 1,
    })
}

fn cmd_compile(g: &Global, target: &CompileTarget) -> Result<i32> {
    let compiled = match target {
        CompileTarget::Factor { n, bits } => {
            let problem = match (n, bits) {
                (Some(n), b) => {
                    let width = (64 - n.leading_zeros()) as usize;
                    Problem::Factor(FactorSpec::new(*n, Some(b.unwrap_or(width).max(4)))?)
                }
                (None, Some(b)) => family_instance(Family::Factor, *b)?,
                (None, None) => return Err(usage("compile factor needs N or --bits")),
            };
            problem.compile(DEFAULT_RAMP)?
        }
        CompileTarget::SubsetSum { set, target, precision } => {
            let mut spec = SubsetSumSpec::new(set.clone(), *target, *precision)?;
            spec.fold_constants = g.fold_constants;
            Problem::SubsetSum(spec).compile(DEFAULT_RAMP)?
        }
        CompileTarget::Adder { width, sum } => adder(*width, *sum)?,
        CompileTarget::Adder1 => adder(1, None)?,
        CompileTarget::Adder2 => adder(2, None)?,
        CompileTarget::Adder3 => adder(3, None)?,
        CompileTarget::Adder4 => adder(4, None)?,
    };
    let report = gate_count_report(&compiled.netlist);
    let text = compiled.netlist.serialize();
    match &g.out {
        Some(p) => write_atomic(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    eprintln!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    Ok(0)
}

fn adder(width: usize, sum: Option<u64>) -> Result<solc::compiler::Compiled> {
    compile_adder(width, sum.unwrap_or((1u64 << width) + 1), DEFAULT_RAMP)
}

/// Parses `lo:hi[:step]` into an inclusive list.
fn parse_range(s: &str) -> Result<Vec<usize>> {
    let parts: Vec<usize> = s
        .split(':')
        .map(|p| p.trim().parse().map_err(|_| usage(format!("bad range {s:?}"))))
        .collect::<Result<_>>()?;
    let (lo, hi, step) = match parts[..] {
        [a] => (a, a, 1),
        [a, b] => (a, b, 1),
        [a, b, c] if c > 0 => (a, b, c),
        _ => return Err(usage(format!("bad range {s:?}"))),
    };
    if lo > hi {
        return Err(usage(format!("empty range {s:?}")));
    }
    Ok((lo..=hi).step_by(step).collect())
}
