//! `pvarsym` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pvarsym::harness::{run_experiment, Outcome, RunOptions, EXPERIMENT_IDS};
use pvarsym::paths::{read_binary, read_csv, write_binary, write_csv, GridSpec, SamplePath};
use pvarsym::pvar::{pvar_components, pvar_exact};
use pvarsym::registry::{BuiltModel, Config};
use pvarsym::symbols::{
    index_beta_inf_unif, index_beta_inf_unif1, index_beta_inf_x, index_beta_loc, index_spot, IndexEstimate,
};
use pvarsym::util::{format_f64, parse_f64};
use pvarsym::{Error, RandomState};

#[derive(Parser, Debug)]
#[command(name = "pvarsym", version, about = "Symbols, indices and p-variation of Levy-type processes")]
struct Cli {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the configuration).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the configuration).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for parallel estimators.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Evaluate q(x, xi).
    Symbol {
        model: String,
        #[arg(long, allow_hyphen_values = true)]
        x: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        xi: String,
    },
    /// Estimate an index; prints one CSV row.
    Index {
        model: String,
        #[arg(long, value_enum)]
        kind: IndexKind,
        #[arg(long, allow_hyphen_values = true)]
        at: Option<String>,
    },
    /// Simulate sample paths into `<out>/simulate/<model>/`.
    Simulate {
        model: String,
        #[arg(long, default_value_t = 1.0)]
        horizon: f64,
        #[arg(long, default_value_t = 10)]
        level: u32,
        #[arg(long, default_value_t = 1)]
        paths: usize,
        /// Start point; defaults to the model's own (1 for gbm, else 0).
        #[arg(long, allow_hyphen_values = true)]
        x0: Option<String>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Exact p-variation of a path file (CSV or binary).
    Pvar {
        input: PathBuf,
        #[arg(long)]
        p: f64,
        /// Also report per-coordinate values and the norm sandwich.
        #[arg(long)]
        components: bool,
    },
    /// Run one registered experiment.
    Experiment {
        id: String,
        #[arg(long)]
        quick: bool,
        /// JSON object overriding experiment parameters.
        #[arg(long)]
        params: Option<String>,
    },
    /// Run every registered experiment.
    Suite {
        #[arg(long)]
        quick: bool,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum IndexKind {
    Beta1,
    Beta2,
    Spot,
    Loc,
    X,
    Unif,
    Unif1,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Format {
    Csv,
    Bin,
}

/// Failure with the exit code to report.
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Io(_) | Error::Internal(_) => 3,
            _ => 2,
        };
        Failure { code, msg: e.to_string() }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: 2, msg: msg.into() }
}

fn parse_vec(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| parse_f64(t).filter(|v| v.is_finite()).ok_or_else(|| usage(format!("bad number {t:?} in {s:?}"))))
        .collect()
}

fn vector_or_zero(arg: &Option<String>, d: usize, what: &str) -> Result<Vec<f64>, Failure> {
    let v = match arg {
        Some(s) => parse_vec(s)?,
        None => vec![0.0; d],
    };
    if v.len() != d {
        return Err(usage(format!("{what} has {} entries, model dimension is {d}", v.len())));
    }
    Ok(v)
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn format_part(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else {
        format!("{v:.12}")
    }
}

fn format_complex(re: f64, im: f64) -> String {
    let sign = if im < 0.0 { '-' } else { '+' };
    format!("{} {} {}i", format_part(re), sign, format_part(im.abs()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let mut config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        config.seed = s;
    }
    if let Some(o) = &cli.out {
        config.out = o.clone();
    }
    let workers = cli.workers.unwrap_or(0);
    if workers > 0 {
        // ignore the error when a pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    }
    match cli.cmd {
        Cmd::Symbol { model, x, xi } => cmd_symbol(&config, &model, &x, &xi),
        Cmd::Index { model, kind, at } => cmd_index(&config, &model, kind, &at),
        Cmd::Simulate { model, horizon, level, paths, x0, format } => {
            cmd_simulate(&config, &model, horizon, level, paths, &x0, format)
        }
        Cmd::Pvar { input, p, components } => cmd_pvar(&input, p, components),
        Cmd::Experiment { id, quick, params } => {
            let overrides = match params {
                Some(s) => Some(serde_json::from_str(&s).map_err(|e| usage(format!("--params: {e}")))?),
                None => None,
            };
            let opts = RunOptions { config: config.clone(), seed: None, workers, out: Some(config.out.clone()), quick, overrides };
            let r = run_experiment(&id, &opts)?;
            println!("{}", r.summary_line());
            Ok(if r.verdict == Outcome::Fail { 4 } else { 0 })
        }
        Cmd::Suite { quick } => {
            let opts = RunOptions { config: config.clone(), seed: None, workers, out: Some(config.out.clone()), quick, overrides: None };
            let mut failed = false;
            for id in EXPERIMENT_IDS {
                let r = run_experiment(id, &opts)?;
                println!("{}", r.summary_line());
                failed |= r.verdict == Outcome::Fail;
            }
            Ok(if failed { 4 } else { 0 })
        }
    }
}

fn cmd_symbol(config: &Config, name: &str, x: &Option<String>, xi: &str) -> Result<u8, Failure> {
    let m = config.model(name)?;
    let d = m.dim();
    let x = vector_or_zero(x, d, "--x")?;
    let xi = parse_vec(xi)?;
    if xi.len() != d {
        return Err(usage(format!("--xi has {} entries, model dimension is {d}", xi.len())));
    }
    let e = m.symbol.eval_flagged(&x, &xi)?;
    println!("{}", format_complex(e.value.re, e.value.im));
    let note = if e.outside_domain { " (x outside the model domain)" } else { "" };
    println!("provenance: {}{note}", m.symbol.provenance());
    Ok(0)
}

fn classical(m: &BuiltModel, beta2: bool) -> Result<IndexEstimate, Failure> {
    let levy = m.levy.as_ref().ok_or_else(|| usage(format!("{} is not a Levy model; beta1/beta2 need one", m.name)))?;
    let c = levy.classical_indices();
    let est = if beta2 { c.numeric_beta2 } else { c.numeric_beta1 };
    est.ok_or_else(|| Failure { code: 3, msg: "growth fit failed".into() })
}

fn cmd_index(config: &Config, name: &str, kind: IndexKind, at: &Option<String>) -> Result<u8, Failure> {
    let m = config.model(name)?;
    let g = config.grid_for(m.dim());
    let point = || -> Result<Vec<f64>, Failure> {
        match at {
            Some(_) => vector_or_zero(at, m.dim(), "--at"),
            None => Err(usage("this index kind requires --at")),
        }
    };
    let dom = m.symbol.default_domain();
    let (label, est) = match kind {
        IndexKind::Beta1 => ("beta1", classical(&m, false)?),
        IndexKind::Beta2 => ("beta2", classical(&m, true)?),
        IndexKind::Spot => ("spot", index_spot(&m.symbol, &point()?, &g)?),
        IndexKind::Loc => ("loc", index_beta_loc(&m.symbol, &point()?, &g)?),
        IndexKind::X => ("x", index_beta_inf_x(&m.symbol, &point()?, &g)?),
        IndexKind::Unif => ("unif", index_beta_inf_unif(&m.symbol, &dom, &g)?),
        IndexKind::Unif1 => ("unif1", index_beta_inf_unif1(&m.symbol, &dom, &g)?),
    };
    println!("model,kind,estimate,slope,residual,unbounded_flag");
    println!(
        "{},{},{},{},{},{}",
        csv_field(name),
        label,
        format_f64(est.value),
        format_f64(est.slope),
        format_f64(est.residual_rms),
        est.unbounded
    );
    Ok(0)
}

fn cmd_simulate(
    config: &Config,
    name: &str,
    horizon: f64,
    level: u32,
    paths: usize,
    x0: &Option<String>,
    format: Format,
) -> Result<u8, Failure> {
    let m = config.model(name)?;
    let x0 = match x0 {
        Some(_) => vector_or_zero(x0, m.dim(), "--x0")?,
        None => m.start.clone(),
    };
    let grid = GridSpec::new(horizon, level)?;
    let dir = config.out.join("simulate").join(name);
    std::fs::create_dir_all(&dir).map_err(Error::from)?;
    for i in 0..paths {
        let mut rng = RandomState::derive(config.seed, &format!("simulate/{name}"), i as u64);
        let p = m.sampler.sample_from(&x0, &grid, &mut rng, false)?;
        let file = match format {
            Format::Csv => dir.join(format!("path-{i}.csv")),
            Format::Bin => dir.join(format!("path-{i}.bin")),
        };
        match format {
            Format::Csv => write_csv(&p, &file)?,
            Format::Bin => write_binary(&p, &file)?,
        }
    }
    println!("simulated {paths} path(s) of {name} with {} steps into {}", grid.steps(), dir.display());
    Ok(0)
}

fn load_path(file: &Path) -> Result<SamplePath, Failure> {
    let mut magic = [0u8; 8];
    let head = std::fs::File::open(file)
        .and_then(|mut f| std::io::Read::read(&mut f, &mut magic))
        .map_err(Error::from)?;
    if head == 8 && &magic == pvarsym::paths::BINARY_MAGIC {
        Ok(read_binary(file, "file")?)
    } else {
        Ok(read_csv(file, "file")?)
    }
}

fn cmd_pvar(file: &Path, p: f64, components: bool) -> Result<u8, Failure> {
    let path = load_path(file)?;
    if components {
        let r = pvar_components(&path.values, p)?;
        println!("total,{}", format_f64(r.total.value));
        for (i, c) in r.components.iter().enumerate() {
            println!("v{},{}", i + 1, format_f64(c.value));
        }
        println!("lower,{}", format_f64(r.lower));
        println!("upper,{}", format_f64(r.upper));
        println!("sandwich_holds,{}", r.sandwich_holds);
    } else {
        println!("{}", format_f64(pvar_exact(&path.values, p)?.value));
    }
    Ok(0)
}
