//! The `vlad` command line: `run`, `repl` and `gradcheck`.

use std::io::{self, BufRead, IsTerminal, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::gradcheck::{self, Options, HEADER};
use crate::reader::print_value;
use crate::runtime::{Interpreter, Value, DEFAULT_STEP_BUDGET};

pub const EXIT_OK: i32 = 0;
pub const EXIT_LANGUAGE: i32 = 1;
pub const EXIT_RESOURCE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "vlad", version, about = "Lambda calculus with reverse-mode AD")]
pub struct Cli {
    #[command(flatten)]
    pub config: Config,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Config {
    /// Do not load stdlib.vl
    #[arg(long, global = true)]
    pub no_stdlib: bool,
    /// Apply-step budget per top-level form
    #[arg(long, global = true, default_value_t = DEFAULT_STEP_BUDGET, value_parser = clap::value_parser!(u64).range(1..))]
    pub steps: u64,
    /// Print the reverse-transformed source of the final closure instead of its value
    #[arg(long, global = true)]
    pub emit_transformed: bool,
    /// Log every application to stderr
    #[arg(long, global = true)]
    pub trace: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate a program and print its last value
    Run { path: PathBuf },
    /// Read-eval-print loop; `:transform <lambda>` and `:quit` are available
    Repl,
    /// Compare gradients with finite differences
    Gradcheck {
        /// Program to load before checking
        path: Option<PathBuf>,
        #[arg(long = "fn")]
        function: String,
        #[arg(long, num_args = 1.., required = true, allow_negative_numbers = true)]
        at: Vec<f64>,
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
    },
}

fn exit_code(e: &Error) -> i32 {
    if e.is_resource() {
        EXIT_RESOURCE
    } else {
        EXIT_LANGUAGE
    }
}

fn report(e: &Error) -> i32 {
    eprintln!("error: {e}");
    exit_code(e)
}

fn interpreter(config: &Config) -> Result<Interpreter, Error> {
    let mut it = if config.no_stdlib {
        Interpreter::new()
    } else {
        Interpreter::with_stdlib()?
    };
    it.set_step_budget(config.steps);
    it.set_trace(config.trace);
    Ok(it)
}

fn read_source(path: &Path) -> Result<String, i32> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        EXIT_RESOURCE
    })
}

/// Runs a parsed command line and returns the process exit status.
pub fn execute(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Run { path } => run(path, &cli.config),
        Command::Repl => repl(&cli.config, &mut io::stdin().lock(), &mut io::stdout()),
        Command::Gradcheck {
            path,
            function,
            at,
            h,
            tol,
        } => check(path.as_deref(), function, at, Options { h: *h, tol: *tol }, &cli.config),
    };
    result.unwrap_or_else(|code| code)
}

fn run(path: &Path, config: &Config) -> Result<i32, i32> {
    let text = read_source(path)?;
    let mut it = interpreter(config).map_err(|e| report(&e))?;
    let last = it.load(&text).map_err(|e| report(&e))?;
    if let Some(v) = last {
        if config.emit_transformed {
            println!("{}", it.transform_value(&v).map_err(|e| report(&e))?);
        } else {
            println!("{}", print_value(&v));
        }
    }
    Ok(EXIT_OK)
}

/// Depth of unclosed parentheses, ignoring comments.
fn open_parens(text: &str) -> i64 {
    let mut depth = 0;
    for line in text.lines() {
        for c in line.chars() {
            match c {
                ';' => break,
                '(' | '[' => depth += 1,
                ')' | ']' => depth -= 1,
                _ => {}
            }
        }
    }
    depth
}

/// The loop behind `vlad repl`, reading from `input` and printing to `out`.
pub fn repl(config: &Config, input: &mut dyn BufRead, out: &mut dyn Write) -> Result<i32, i32> {
    let mut it = interpreter(config).map_err(|e| report(&e))?;
    let interactive = io::stdin().is_terminal();
    let mut pending = String::new();
    loop {
        if interactive {
            let _ = write!(out, "{}", if pending.is_empty() { "> " } else { "  " });
            let _ = out.flush();
        }
        let mut line = String::new();
        match input.read_line(&mut line) {
            Ok(0) => break,
            Ok(_) => {}
            Err(e) => {
                eprintln!("error: {e}");
                return Err(EXIT_RESOURCE);
            }
        }
        pending.push_str(&line);
        if open_parens(&pending) > 0 {
            continue;
        }
        let text = std::mem::take(&mut pending);
        let trimmed = text.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed == ":quit" {
            break;
        }
        let outcome = match trimmed.strip_prefix(":transform") {
            Some(rest) => it.transform_source(rest.trim()),
            None => it
                .load(trimmed)
                .map(|v| v.map(|v| print_value(&v)).unwrap_or_default()),
        };
        match outcome {
            Ok(s) if s.is_empty() => {}
            Ok(s) => {
                let _ = writeln!(out, "{s}");
            }
            Err(e) => {
                let _ = writeln!(out, "error: {e}");
            }
        }
        let _ = out.flush();
    }
    Ok(EXIT_OK)
}

fn check(
    path: Option<&Path>,
    name: &str,
    at: &[f64],
    opts: Options,
    config: &Config,
) -> Result<i32, i32> {
    let mut it = interpreter(config).map_err(|e| report(&e))?;
    if let Some(path) = path {
        let text = read_source(path)?;
        it.load(&text).map_err(|e| report(&e))?;
    }
    let f = it.lookup(name).ok_or_else(|| {
        eprintln!("error: unknown function `{name}`");
        EXIT_LANGUAGE
    })?;
    if !matches!(f, Value::Closure(_) | Value::Primitive(_) | Value::Custom(_)) {
        eprintln!("error: `{name}` is {}, not a function", f.shape());
        return Err(EXIT_LANGUAGE);
    }
    println!("{HEADER}");
    let mut all_pass = true;
    for &x in at {
        let row = gradcheck::check(&it, &f, x, opts).map_err(|e| report(&e))?;
        all_pass &= row.passed();
        println!("{row}");
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_LANGUAGE })
}
