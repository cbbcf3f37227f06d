//! Command-line front end: verify, canonicalize, inspect holes, fill
//! them from an assignment file, run functions, and search for hole
//! assignments that match a target function.
//!
//! Exit codes: 0 on success, 1 when the input is rejected (diagnostics,
//! unknown names, failed searches), 2 on command-line usage errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use holeir::holes;
use holeir::interp::{self, EquivPolicy, DEFAULT_FUEL};
use holeir::synth::{self, CandidatePools, SynthConfig, SynthOutcome};
use holeir::textio::{parse_assignments, parse_module, print_function, print_module, value_names};
use holeir::verifier;
use holeir::{IntConst, Module, Type, ValueRef};

#[derive(Parser)]
#[command(name = "holeir", about = "SSA IR with first-class symbolic holes")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Check a module; print one diagnostic per line.
    Verify {
        file: PathBuf,
    },
    /// Parse a module and print its canonical form.
    Print {
        file: PathBuf,
        /// Output file (default stdout).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// List holes as a table: name, declared type, resolved type, deps.
    Holes {
        file: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Apply a hole-assignment file and print the resulting module.
    Fill {
        file: PathBuf,
        /// Assignment file: one `@hole = ...` entry per line.
        #[arg(long, value_name = "FILE")]
        assign: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Execute a function on constant arguments.
    Run {
        file: PathBuf,
        /// Function to run, with or without the `@` sigil.
        #[arg(long = "fn", value_name = "NAME")]
        func: String,
        /// Comma-separated integer arguments.
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            value_name = "N,N,..."
        )]
        args: Vec<i128>,
        /// Instruction budget.
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: u64,
        /// Reject arguments that do not fit their parameter width
        /// instead of truncating them.
        #[arg(long)]
        width_check: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Search hole assignments making a sketch equivalent to a target.
    Superopt {
        file: PathBuf,
        /// Hole-free reference function.
        #[arg(long, value_name = "NAME")]
        target: String,
        /// Function containing the holes to solve for.
        #[arg(long, value_name = "NAME")]
        sketch: String,
        /// Constant seeds, instantiated at every width the module uses
        /// (default: 0, 1, -1, 2, width-1).
        #[arg(
            long,
            value_delimiter = ',',
            allow_negative_numbers = true,
            value_name = "N,N,..."
        )]
        consts: Option<Vec<i128>>,
        /// Candidate budget.
        #[arg(long, value_name = "N")]
        budget: Option<u64>,
        /// Check equivalence on N seeded samples instead of choosing a
        /// policy automatically.
        #[arg(long, value_name = "N")]
        sample: Option<u64>,
        /// Seed for sampled equivalence checking.
        #[arg(long, value_name = "S")]
        seed: Option<u64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    ExitCode::from(dispatch(Cli::parse().cmd))
}

fn read_file(path: &Path) -> Result<String, u8> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        1
    })
}

/// Parse a module, sending diagnostics (prefixed with the file name) to
/// stderr on failure.
fn load_module(path: &Path) -> Result<Module, u8> {
    let text = read_file(path)?;
    parse_module(&text).map_err(|diags| {
        for d in diags {
            eprintln!("{}:{d}", path.display());
        }
        1
    })
}

fn emit(output: &Option<PathBuf>, text: &str) -> u8 {
    match output {
        None => {
            print!("{text}");
            0
        }
        Some(path) => match std::fs::write(path, text) {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: cannot write {}: {e}", path.display());
                1
            }
        },
    }
}

fn dispatch(cmd: Cmd) -> u8 {
    match cmd {
        Cmd::Verify { file } => cmd_verify(&file),
        Cmd::Print { file, output } => match load_module(&file) {
            Ok(m) => emit(&output, &print_module(&m)),
            Err(code) => code,
        },
        Cmd::Holes { file, output } => match load_module(&file) {
            Ok(m) => emit(&output, &holes_table(&m)),
            Err(code) => code,
        },
        Cmd::Fill { file, assign, output } => cmd_fill(&file, &assign, &output),
        Cmd::Run { file, func, args, fuel, width_check, output } => {
            cmd_run(&file, &func, &args, fuel, width_check, &output)
        }
        Cmd::Superopt { file, target, sketch, consts, budget, sample, seed, output } => {
            cmd_superopt(&file, &target, &sketch, consts.as_deref(), budget, sample, seed, &output)
        }
    }
}

fn cmd_verify(file: &Path) -> u8 {
    let text = match read_file(file) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let diags = match parse_module(&text) {
        Ok(m) => verifier::verify(&m),
        Err(diags) => diags,
    };
    if diags.is_empty() {
        return 0;
    }
    for d in &diags {
        println!("{}:{d}", file.display());
    }
    1
}

fn holes_table(m: &Module) -> String {
    let header = ["NAME", "DECLARED", "RESOLVED", "DEPS"];
    let mut rows: Vec<[String; 4]> = Vec::new();
    for h in holes::list_holes(m) {
        let names = value_names(m.func(h.func));
        let deps = if h.deps.is_empty() {
            "-".to_string()
        } else {
            h.deps
                .iter()
                .map(|v| match v {
                    ValueRef::Const(c) => format!("{} {c}", c.ty()),
                    other => format!("%{}", names[other]),
                })
                .collect::<Vec<_>>()
                .join(", ")
        };
        rows.push([
            format!("@{}", h.name),
            h.declared_type.to_string(),
            h.resolved_type.map_or_else(|| "-".to_string(), |t| t.to_string()),
            deps,
        ]);
    }
    let mut width = [0usize; 4];
    for k in 0..4 {
        width[k] = header[k].len();
        for row in &rows {
            width[k] = width[k].max(row[k].len());
        }
    }
    let line = |cells: [&str; 4]| -> String {
        let mut s = String::new();
        for (k, cell) in cells.iter().enumerate() {
            if k > 0 {
                s.push_str("  ");
            }
            if k + 1 < 4 {
                s.push_str(&format!("{cell:<w$}", w = width[k]));
            } else {
                s.push_str(cell);
            }
        }
        s.push('\n');
        s
    };
    let mut out = line(header);
    for row in &rows {
        out.push_str(&line([&row[0], &row[1], &row[2], &row[3]]));
    }
    out
}

fn cmd_fill(file: &Path, assign: &Path, output: &Option<PathBuf>) -> u8 {
    let m = match load_module(file) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let atext = match read_file(assign) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let set = match parse_assignments(&atext) {
        Ok(s) => s,
        Err(diags) => {
            for d in diags {
                eprintln!("{}:{d}", assign.display());
            }
            return 1;
        }
    };
    match synth::fill(&m, &set) {
        Ok(filled) => emit(output, &print_module(&filled)),
        Err(e) => {
            eprintln!("{}: {e}", assign.display());
            1
        }
    }
}

/// Both the unsigned and the two's-complement reading are accepted, the
/// same rule the parser applies to constants.
fn representable(width: u32, value: i128) -> bool {
    if value < 0 {
        width == 128 || value >= -(1i128 << (width - 1))
    } else {
        width == 128 || value as u128 <= IntConst::mask(width)
    }
}

fn cmd_run(
    file: &Path,
    func: &str,
    args: &[i128],
    fuel: u64,
    width_check: bool,
    output: &Option<PathBuf>,
) -> u8 {
    let m = match load_module(file) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let name = func.trim_start_matches('@');
    let Some(f) = m.func_by_name(name) else {
        eprintln!("error: unknown function @{name}");
        return 1;
    };
    let params = m.func(f).ty().params.clone();
    if args.len() != params.len() {
        eprintln!("error: @{name} takes {} arguments, got {}", params.len(), args.len());
        return 1;
    }
    let mut consts = Vec::with_capacity(args.len());
    for (k, (&v, ty)) in args.iter().zip(&params).enumerate() {
        let Type::Int(w) = ty else {
            eprintln!("error: parameter {k} of @{name} has unresolved type {ty}");
            return 1;
        };
        if width_check && !representable(*w, v) {
            eprintln!("error: argument {k} ({v}) does not fit {ty}");
            return 1;
        }
        consts.push(IntConst::from_i128(*w, v));
    }
    match interp::run(&m, name, &consts, fuel) {
        Ok(res) => {
            let text = match res.value {
                Some(c) => format!("{} {c}\n", c.ty()),
                None => "void\n".to_string(),
            };
            emit(output, &text)
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_superopt(
    file: &Path,
    target: &str,
    sketch: &str,
    consts: Option<&[i128]>,
    budget: Option<u64>,
    sample: Option<u64>,
    seed: Option<u64>,
    output: &Option<PathBuf>,
) -> u8 {
    let m = match load_module(file) {
        Ok(m) => m,
        Err(code) => return code,
    };
    let pools = match consts {
        Some(seeds) => CandidatePools::with_constant_seeds(&m, seeds),
        None => CandidatePools::default(),
    };
    let mut cfg = SynthConfig::default();
    if let Some(b) = budget {
        cfg.max_candidates = b;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(n) = sample {
        cfg.policy = Some(EquivPolicy::Sampled { samples: n, seed: cfg.seed });
    }
    let target = target.trim_start_matches('@');
    let sketch = sketch.trim_start_matches('@');
    match synth::superopt(&m, target, sketch, &pools, &cfg) {
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
        Ok(SynthOutcome::NotFound { candidates_tried }) => {
            eprintln!("no solution after {candidates_tried} candidates");
            1
        }
        Ok(SynthOutcome::Solution(sol)) => {
            let f = sol
                .filled_module
                .func_by_name(sketch)
                .expect("solved sketch exists in the filled module");
            let text = format!(
                "{}\n{}\n",
                sol.assignments,
                print_function(&sol.filled_module, f)
            );
            emit(output, &text)
        }
    }
}
