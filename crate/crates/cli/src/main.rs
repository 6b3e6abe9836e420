//! `cocoweb`: run confluence tools on a problem from the command line, print
//! a problem's category, or start the web service.

use std::io::{self, Read, Write};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use cocoweb_core::{
    infer_category, resolve_tools, scan_registry, validate_selection, Engine, RunResult, TimeoutPolicy, ToolSpec,
};
use cocoweb_server::config::{DEFAULT_COPS_BASE_URL, DEFAULT_COPS_PATH_TEMPLATE};
use cocoweb_server::cops::CopsClient;
use cocoweb_server::ServiceConfig;

const USAGE_ERROR: u8 = 2;

#[derive(Parser)]
#[command(name = "cocoweb", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run tools on one problem and report their answers.
    Run(RunArgs),
    /// Print the format category of a problem file.
    Categorize {
        /// Problem file, or "-" for stdin.
        problem: PathBuf,
    },
    /// Start the HTTP service.
    Serve(ServeArgs),
}

#[derive(Args)]
struct Paths {
    #[arg(long, env = "CONFIG_ROOT")]
    config_root: PathBuf,
    #[arg(long, env = "BIN_ROOT")]
    bin_root: PathBuf,
    #[arg(long, env = "SCRATCH_DIR", default_value_os_t = std::env::temp_dir().join("cocoweb"))]
    scratch_dir: PathBuf,
    #[arg(long, env = "COPS_BASE_URL", default_value = DEFAULT_COPS_BASE_URL)]
    cops_base_url: String,
    #[arg(long, env = "COPS_PATH_TEMPLATE", default_value = DEFAULT_COPS_PATH_TEMPLATE)]
    cops_path_template: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputMode {
    Plain,
    Table,
    Json,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    paths: Paths,
    /// Problem file, or "-" for stdin.
    #[arg(required_unless_present = "cop", conflicts_with = "cop")]
    problem: Option<PathBuf>,
    /// Fetch problem number N from the Cops database instead.
    #[arg(long, value_name = "N", value_parser = clap::value_parser!(u64).range(1..))]
    cop: Option<u64>,
    /// Comma-separated tool ids, or "all" for every registered tool.
    #[arg(long, short, value_delimiter = ',', required = true)]
    tools: Vec<String>,
    #[arg(long)]
    soft: Option<u64>,
    #[arg(long)]
    term: Option<u64>,
    #[arg(long)]
    kill: Option<u64>,
    #[arg(long, value_enum, default_value = "plain")]
    output: OutputMode,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    paths: Paths,
    #[arg(long, env = "LISTEN_ADDR", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    #[arg(long, env = "MAX_SOFT_TIMEOUT", default_value_t = TimeoutPolicy::default().soft_s)]
    max_soft_timeout: u64,
    #[arg(long, env = "RELOAD_SECRET", hide_env_values = true)]
    reload_secret: Option<String>,
    /// Directory with the web UI, served at "/".
    #[arg(long, env = "STATIC_DIR")]
    static_dir: Option<PathBuf>,
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("cocoweb: {msg}");
    ExitCode::from(USAGE_ERROR)
}

fn read_problem(path: &PathBuf) -> io::Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        std::fs::read_to_string(path)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Categorize { problem } => match read_problem(&problem) {
            Ok(text) => {
                println!("{}", infer_category(&text));
                ExitCode::SUCCESS
            }
            Err(e) => fail(format!("{}: {e}", problem.display())),
        },
        Command::Run(args) => run(args),
        Command::Serve(args) => serve(args),
    }
}

fn policy(args: &RunArgs) -> Result<TimeoutPolicy, String> {
    let d = TimeoutPolicy::default();
    TimeoutPolicy::new(args.soft.unwrap_or(d.soft_s), args.term.unwrap_or(d.term_s), args.kill.unwrap_or(d.kill_s))
        .map_err(|e| e.to_string())
}

fn run(args: RunArgs) -> ExitCode {
    let policy = match policy(&args) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let report = match scan_registry(&args.paths.config_root) {
        Ok(r) => r,
        Err(e) => return fail(e),
    };
    for w in &report.warnings {
        eprintln!("cocoweb: skipping {}: {}", w.path.display(), w.message);
    }
    let tree = report.tree;
    let tools: Vec<ToolSpec> = if args.tools.len() == 1 && args.tools[0] == "all" {
        tree.tools().cloned().collect()
    } else {
        match resolve_tools(&args.tools, &tree) {
            Ok(t) => t,
            Err(e) => return fail(e),
        }
    };
    if tools.is_empty() {
        return fail("no tools selected");
    }

    let text = match (&args.problem, args.cop) {
        (Some(path), _) => match read_problem(path) {
            Ok(t) => t,
            Err(e) => return fail(format!("{}: {e}", path.display())),
        },
        (None, Some(n)) => {
            let client = CopsClient::new(&args.paths.cops_base_url, &args.paths.cops_path_template);
            let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
            match rt.block_on(client.fetch(n)) {
                Ok(t) => t,
                Err(e) => return fail(e),
            }
        }
        (None, None) => unreachable!("clap requires a problem or --cop"),
    };

    for w in validate_selection(infer_category(&text), &tools) {
        eprintln!("cocoweb: warning: {}", w.message);
    }

    let engine = Engine::new(&args.paths.bin_root, &args.paths.scratch_dir);
    let mode = args.output;
    let mut stdout = io::stdout().lock();
    if let OutputMode::Table = mode {
        let _ = writeln!(stdout, "{:<40} {:<8} {:>9}", "TOOL", "ANSWER", "TIME");
    }
    let results = engine.run_selection(&tools, &text, &policy, &mut |p| {
        if let cocoweb_core::engine::Progress::Finished(_, r) = p {
            let _ = print_result(&mut stdout, mode, r);
        }
    });
    if let OutputMode::Json = mode {
        let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&results).expect("results serialize"));
    }
    if results.iter().all(|r| r.answer.is_definite()) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn print_result(out: &mut impl Write, mode: OutputMode, r: &RunResult) -> io::Result<()> {
    match mode {
        OutputMode::Plain => {
            writeln!(out, "==> {} ({})", r.tool_id, r.answer)?;
            write!(out, "{}", r.output)
        }
        OutputMode::Table => writeln!(out, "{:<40} {:<8} {:>8.2}s", r.tool_id, r.answer.as_str(), r.elapsed_s),
        OutputMode::Json => Ok(()),
    }
}

fn serve(args: ServeArgs) -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .init();
    let mut config = ServiceConfig::new(args.paths.config_root, args.paths.bin_root);
    config.scratch_dir = args.paths.scratch_dir;
    config.cops_base_url = args.paths.cops_base_url;
    config.cops_path_template = args.paths.cops_path_template;
    config.max_soft_timeout = args.max_soft_timeout;
    config.reload_secret = args.reload_secret;
    config.listen_addr = args.listen;
    config.static_dir = args.static_dir;
    let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
    match rt.block_on(cocoweb_server::serve(config)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(e),
    }
}
