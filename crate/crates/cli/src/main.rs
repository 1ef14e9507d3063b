use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use diffiety_cli::dsl::{self, Located, ProblemSpec, Query};
use diffiety_cli::report::Format;
use diffiety_cli::run::{CliError, Options, Session, DEFAULT_MAX_ORDER};
use diffiety_core::symkernel::parse_case_path;

#[derive(Parser)]
#[command(name = "diffiety", version, about = "Diffieties, standard bases, symmetries and involutivity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Problem file in the `.dfy` language.
    file: PathBuf,
    /// Window order L; overrides `order=` in the file.
    #[arg(long)]
    order: Option<usize>,
    /// Seed for the randomized "not too special" choices.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Branches to follow at undecided pivots, e.g. `nnz`.
    #[arg(long)]
    case: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the queries of the file, or the default analyses when it has none.
    Analyze(Common),
    /// Standard basis: K, mu, tau and pi with certificates.
    StandardBasis(Common),
    /// Build a variation from (z, p) and verify it.
    Variations {
        #[command(flatten)]
        common: Common,
        /// The x-component z; omit or pass `z` to solve for it.
        #[arg(long)]
        z: Option<String>,
        /// One p^j per seed of the standard basis.
        #[arg(long)]
        p: Vec<String>,
        /// Components along the tau forms.
        #[arg(long)]
        zk: Vec<String>,
    },
    /// Check a point map given by a seeds file of `x = …`, `u = …` lines.
    CheckSymmetry {
        #[command(flatten)]
        common: Common,
        seeds: PathBuf,
    },
    /// Wave method: symmetries from W-functions.
    Wave {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        w: Vec<String>,
        /// Forward seeds: images of x̄, w̄1_0, ….
        #[arg(long)]
        fwd: Vec<String>,
        /// Backward seeds: images of x, w1_0, ….
        #[arg(long)]
        bwd: Vec<String>,
    },
    /// Graded dimensions, Hilbert polynomial and injectivity classes.
    Hilbert(Common),
    /// Cartan test of a first-order system.
    Cartan(Common),
}

fn arg(value: &str) -> Located<String> {
    Located {
        value: value.to_string(),
        line: 0,
        col: 0,
    }
}

fn query(name: &str, spec: &ProblemSpec, extra: Vec<(String, Located<String>)>) -> Query {
    let mut args: Vec<(String, Located<String>)> = spec
        .queries
        .iter()
        .find(|q| q.analysis.value == name)
        .map(|q| q.args.clone())
        .unwrap_or_default();
    if !extra.is_empty() {
        let keys: Vec<String> = extra.iter().map(|(k, _)| k.clone()).collect();
        args.retain(|(k, _)| !keys.contains(k) && (k == "order" || k == "seed"));
        args.extend(extra);
    }
    Query {
        analysis: arg(name),
        args,
    }
}

fn read(path: &Path) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
}

/// Seeds file: one `target = expression` per line, `#` comments.
fn seed_args(text: &str, path: &Path) -> Result<Vec<(String, Located<String>)>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("{}:{}: expected `target = expression`", path.display(), i + 1))?;
        let col = raw.find('=').map_or(1, |p| p + 2 + (raw[p + 1..].len() - raw[p + 1..].trim_start().len()));
        out.push((
            k.trim().to_string(),
            Located {
                value: v.trim().to_string(),
                line: i + 1,
                col,
            },
        ));
    }
    Ok(out)
}

/// Builds the queries of a subcommand once the problem file is parsed.
type QueryBuilder = Box<dyn Fn(&ProblemSpec) -> Result<Vec<Query>, String>>;

fn run(cli: Cli) -> Result<i32, String> {
    let (common, make): (Common, QueryBuilder) = match cli.command {
        Command::Analyze(c) => (c, Box::new(|s: &ProblemSpec| Ok(s.queries.clone()))),
        Command::StandardBasis(c) => (c, Box::new(|s: &ProblemSpec| Ok(vec![query("standard-basis", s, vec![])]))),
        Command::Hilbert(c) => (c, Box::new(|s: &ProblemSpec| Ok(vec![query("hilbert", s, vec![])]))),
        Command::Cartan(c) => (c, Box::new(|s: &ProblemSpec| Ok(vec![query("cartan", s, vec![])]))),
        Command::Variations { common, z, p, zk } => {
            let mut extra: Vec<(String, Located<String>)> = Vec::new();
            extra.extend(z.iter().map(|v| ("z".to_string(), arg(v))));
            extra.extend(p.iter().map(|v| ("p".to_string(), arg(v))));
            extra.extend(zk.iter().map(|v| ("zk".to_string(), arg(v))));
            (common, Box::new(move |s: &ProblemSpec| Ok(vec![query("variations", s, extra.clone())])))
        }
        Command::CheckSymmetry { common, seeds } => {
            let extra = seed_args(&read(&seeds)?, &seeds)?;
            (common, Box::new(move |s: &ProblemSpec| Ok(vec![query("check-symmetry", s, extra.clone())])))
        }
        Command::Wave { common, w, fwd, bwd } => {
            let mut extra: Vec<(String, Located<String>)> = Vec::new();
            extra.extend(w.iter().map(|v| ("w".to_string(), arg(v))));
            extra.extend(fwd.iter().map(|v| ("fwd".to_string(), arg(v))));
            extra.extend(bwd.iter().map(|v| ("bwd".to_string(), arg(v))));
            (common, Box::new(move |s: &ProblemSpec| Ok(vec![query("wave", s, extra.clone())])))
        }
    };
    let file = common.file.display().to_string();
    let spec = dsl::parse(&read(&common.file)?).map_err(|e| format!("{file}:{e}"))?;
    let case = match &common.case {
        Some(p) => Some(parse_case_path(p).ok_or_else(|| format!("bad --case path `{p}`; use n and z"))?),
        None => None,
    };
    let max_order = match std::env::var("DIFFIETY_MAX_ORDER") {
        Ok(v) => v.parse().map_err(|_| format!("DIFFIETY_MAX_ORDER must be an integer, got `{v}`"))?,
        Err(_) => DEFAULT_MAX_ORDER,
    };
    let opts = Options {
        order: common.order,
        seed: common.seed,
        case,
        max_order,
    };
    let queries = make(&spec)?;
    let session = Session::new(&spec, opts).map_err(|e| describe(&file, e))?;
    let report = session.run(&queries).map_err(|e| describe(&file, e))?;
    print!("{}", report.render(common.format));
    Ok(report.exit_code())
}

fn describe(file: &str, e: CliError) -> String {
    match e {
        CliError::Dsl(d) => format!("{file}:{d}"),
        other => other.to_string(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
