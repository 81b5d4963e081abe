use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use stencilc::codegen::generate;
use stencilc::diag::Diagnostic;
use stencilc::exec::grid::GridBuffer;
use stencilc::exec::{
    compare, initial_grids, run, run_target, ComparisonReport, Grids, ProfileReport,
};
use stencilc::frontend::BackendKind;
use stencilc::pipeline::{compile_source, Compiled, Options, Plan};
use stencilc::planning::{parse_override, parse_value};
use stencilc::sim::{load_program, Simulator};
use stencilc::{dataflow, dump};

/// Stencil DSL compiler, executor and dataflow simulator.
#[derive(Parser)]
#[command(name = "stencilc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate backend source for a .stpy program.
    Compile {
        #[command(flatten)]
        src: Source,
        /// Directory for generated files.
        #[arg(short, long, default_value = ".")]
        out: PathBuf,
        /// Write generated code to stdout instead of files.
        #[arg(long)]
        print_code: bool,
        /// Also write the intermediate dumps (.vhir, .hir, .stencil, .plan, .dfir).
        #[arg(long)]
        save_temps: bool,
        /// Print phase timings.
        #[arg(long)]
        profile: bool,
    },
    /// Print stencil facts, regions, plan or lowered forms.
    Inspect {
        #[command(flatten)]
        src: Source,
        /// Backend plan and symbol tables.
        #[arg(long)]
        plan: bool,
        /// Dataflow patterns, schedule, states and SSA.
        #[arg(long)]
        dfir: bool,
        /// Lowered target.
        #[arg(long)]
        hir: bool,
        /// Validated source.
        #[arg(long)]
        vhir: bool,
    },
    /// Execute the resolved plan with the reference executor.
    Run {
        #[command(flatten)]
        src: Source,
        /// Initial contents of a target grid, `name=path`.
        #[arg(long = "grid", value_name = "NAME=PATH")]
        grids: Vec<String>,
        /// Fill grids without a file with log-uniform values in [1e-4, 1e5].
        #[arg(long)]
        seed: Option<u64>,
        /// Directory receiving `<name>.grid` for every target grid.
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Compare against the naive reference run.
        #[arg(long)]
        oracle: bool,
        #[command(flatten)]
        tol: Tolerance,
        #[arg(long)]
        profile: bool,
    },
    /// Run a dataflow program (layout.df and program.df) on a grid file.
    Simulate {
        /// Directory holding layout.df and program.df.
        program: PathBuf,
        /// Input grid file.
        #[arg(long)]
        grid: PathBuf,
        /// Where to write the final grid.
        #[arg(short, long)]
        out: PathBuf,
        /// Write the step trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Worker threads evaluating PEs.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Compare two grid files.
    Diff {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        tol: Tolerance,
    },
}

#[derive(Args)]
struct Source {
    /// Program source (.stpy).
    input: PathBuf,
    /// Target to compile when the file defines several.
    #[arg(long)]
    target: Option<String>,
    /// seq, omp, gpu (cuda) or dataflow.
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    template: Option<String>,
    /// Block size: threadsPerBlock for gpu, blockDims for omp.
    #[arg(long, value_name = "A,B[,C]")]
    block: Option<String>,
    /// Backend parameter override, `key=value`.
    #[arg(long = "param", short = 'p', value_name = "KEY=VALUE")]
    params: Vec<String>,
    /// Target parameter value, `name=value`.
    #[arg(long = "bind", value_name = "NAME=VALUE")]
    binds: Vec<String>,
}

#[derive(Args)]
struct Tolerance {
    /// Largest normalized pointwise error accepted.
    #[arg(long, default_value_t = 1e-7)]
    max_tol: f64,
    /// Largest normalized root-mean-square error accepted.
    #[arg(long, default_value_t = 1e-8)]
    rmsd_tol: f64,
}

enum Failure {
    Diagnostics(Vec<String>),
    Tolerance(String),
    Internal(String),
}

impl Failure {
    fn input(msg: impl Into<String>) -> Self {
        Failure::Diagnostics(vec![msg.into()])
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let r = match cli.command {
        Command::Compile {
            src,
            out,
            print_code,
            save_temps,
            profile,
        } => cmd_compile(&src, &out, print_code, save_temps, profile),
        Command::Inspect {
            src,
            plan,
            dfir,
            hir,
            vhir,
        } => cmd_inspect(&src, plan, dfir, hir, vhir),
        Command::Run {
            src,
            grids,
            seed,
            out,
            oracle,
            tol,
            profile,
        } => cmd_run(&src, &grids, seed, out.as_deref(), oracle, &tol, profile),
        Command::Simulate {
            program,
            grid,
            out,
            trace,
            workers,
        } => cmd_simulate(&program, &grid, &out, trace.as_deref(), workers),
        Command::Diff { a, b, tol } => cmd_diff(&a, &b, &tol),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Diagnostics(d)) => {
            for l in d {
                eprintln!("{l}");
            }
            ExitCode::from(1)
        }
        Err(Failure::Tolerance(m)) => {
            eprintln!("tolerance exceeded: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(3)
        }
    }
}

fn options(s: &Source) -> Result<Options, Failure> {
    let mut o = Options {
        target: s.target.clone(),
        ..Options::default()
    };
    if let Some(b) = &s.backend {
        o.backend = Some(BackendKind::from_name(b).ok_or_else(|| {
            Failure::input(format!(
                "unknown backend `{b}` (expected seq, omp, gpu, cuda or dataflow)"
            ))
        })?);
    }
    if let Some(t) = &s.template {
        o.params.push(("template".into(), parse_value(t)));
    }
    for p in &s.params {
        o.params.push(parse_override(p).map_err(Failure::input)?);
    }
    for b in &s.binds {
        let (k, v) = b
            .split_once('=')
            .ok_or_else(|| Failure::input(format!("expected name=value, got `{b}`")))?;
        o.binds.insert(k.trim().into(), v.trim().into());
    }
    Ok(o)
}

/// `--block` maps onto the parameter of the backend that ends up selected.
fn block_param(s: &Source, c: &Compiled) -> Option<&'static str> {
    s.block.as_ref()?;
    match c.config.backend {
        BackendKind::Gpu => Some("threadsPerBlock"),
        BackendKind::Omp => Some("blockDims"),
        _ => None,
    }
}

fn render(file: &Path, d: &[Diagnostic]) -> Vec<String> {
    let f = file.display().to_string();
    d.iter().map(|x| x.render(&f)).collect()
}

fn compile(s: &Source) -> Result<(Compiled, std::time::Duration), Failure> {
    let text = std::fs::read_to_string(&s.input)
        .map_err(|e| Failure::input(format!("{}: {e}", s.input.display())))?;
    let start = Instant::now();
    let mut opts = options(s)?;
    let mut c =
        compile_source(&text, &opts).map_err(|d| Failure::Diagnostics(render(&s.input, &d)))?;
    if let (Some(key), Some(b)) = (block_param(s, &c), &s.block) {
        opts.params.push((key.into(), parse_value(b)));
        c = compile_source(&text, &opts).map_err(|d| Failure::Diagnostics(render(&s.input, &d)))?;
    } else if s.block.is_some() {
        return Err(Failure::input(format!(
            "--block has no meaning for the {} backend",
            c.config.backend
        )));
    }
    for w in render(&s.input, &c.warnings) {
        eprintln!("{w}");
    }
    Ok((c, start.elapsed()))
}

fn write(path: &Path, text: &str) -> Outcome {
    if let Some(d) = path.parent() {
        std::fs::create_dir_all(d).map_err(|e| Failure::input(format!("{}: {e}", d.display())))?;
    }
    std::fs::write(path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn stem(p: &Path) -> String {
    p.file_stem()
        .map_or("program".into(), |s| s.to_string_lossy().into_owned())
}

fn cmd_compile(
    s: &Source,
    out: &Path,
    print_code: bool,
    save_temps: bool,
    profile: bool,
) -> Outcome {
    let wall = Instant::now();
    let (c, frontend) = compile(s)?;
    let t = Instant::now();
    let a = generate(&c.target, &c.plan).map_err(Failure::input)?;
    let codegen = t.elapsed();
    for (name, text) in &a.files {
        if print_code {
            println!("// ---- {name}");
            print!("{text}");
        } else {
            write(&out.join(name), text)?;
            println!("wrote {}", out.join(name).display());
        }
    }
    if save_temps {
        let base = stem(&s.input);
        let mut dumps = vec![
            ("vhir", dump::vhir(&c)),
            ("hir", dump::hir(&c)),
            ("stencil", dump::stencil(&c)),
            ("plan", dump::plan(&c)),
        ];
        if let Some(d) = dump::dfir(&c) {
            dumps.push(("dfir", d));
        }
        for (ext, text) in dumps {
            let p = out.join(format!("{base}.{ext}"));
            write(&p, &text)?;
            println!("wrote {}", p.display());
        }
    }
    if profile {
        let r = ProfileReport {
            frontend,
            codegen,
            execution: Default::default(),
        };
        print!("{r}");
        println!("total: {:.6} s", wall.elapsed().as_secs_f64());
    }
    Ok(())
}

fn cmd_inspect(s: &Source, plan: bool, dfir: bool, hir: bool, vhir: bool) -> Outcome {
    let (c, _) = compile(s)?;
    let any = plan || dfir || hir || vhir;
    if vhir {
        print!("{}", dump::vhir(&c));
    }
    if hir {
        print!("{}", dump::hir(&c));
    }
    if !any {
        print!("{}", dump::stencil(&c));
    }
    if plan {
        print!("{}", dump::plan(&c));
    }
    if dfir {
        match dump::dfir(&c) {
            Some(d) => print!("{d}"),
            None => return Err(Failure::input("--dfir needs the dataflow backend")),
        }
    }
    Ok(())
}

fn load_grid(p: &Path) -> Result<GridBuffer, Failure> {
    GridBuffer::read_file(p).map_err(|e| Failure::input(format!("{}: {e}", p.display())))
}

fn check(report: &ComparisonReport, label: &str, tol: &Tolerance) -> Outcome {
    println!("{label}: {report}");
    if report.within(tol.max_tol, tol.rmsd_tol) {
        Ok(())
    } else {
        Err(Failure::Tolerance(format!(
            "{label}: {report} (limits max={:e} rmsd={:e})",
            tol.max_tol, tol.rmsd_tol
        )))
    }
}

fn cmd_run(
    s: &Source,
    files: &[String],
    seed: Option<u64>,
    out: Option<&Path>,
    oracle: bool,
    tol: &Tolerance,
    profile: bool,
) -> Outcome {
    let wall = Instant::now();
    let (c, frontend) = compile(s)?;
    let h = &c.target;
    let mut grids = initial_grids(h);
    let mut given = Vec::new();
    for f in files {
        let (name, path) = f
            .split_once('=')
            .ok_or_else(|| Failure::input(format!("expected name=path, got `{f}`")))?;
        if !grids.contains_key(name) {
            return Err(Failure::input(format!(
                "target `{}` has no grid `{name}`",
                h.name
            )));
        }
        grids.insert(name.to_string(), load_grid(Path::new(path))?);
        given.push(name.to_string());
    }
    if let Some(seed) = seed {
        for (n, (name, g)) in grids.iter_mut().enumerate() {
            if !given.contains(name) {
                g.fill_log_uniform(seed.wrapping_add(n as u64), 1e-4, 1e5);
            }
        }
    }
    let input = grids.clone();
    let t = Instant::now();
    let result: Grids = match &c.plan {
        Plan::Dataflow(p) => {
            stencilc::exec::check_grids(h, &grids).map_err(|e| Failure::input(e.to_string()))?;
            let mut sim = Simulator::new((**p).clone(), &grids[&p.input])
                .map_err(|e| Failure::input(e.to_string()))?;
            let (g, _) = sim
                .run_to_exit()
                .map_err(|e| Failure::Internal(e.to_string()))?;
            g
        }
        plan => {
            let stats =
                run(h, &mut grids, &plan.engine()).map_err(|e| Failure::input(e.to_string()))?;
            if stats.nonfinite > 0 {
                eprintln!(
                    "warning: {} non-finite values in the result",
                    stats.nonfinite
                );
            }
            grids
        }
    };
    let execution = t.elapsed();
    if let Some(dir) = out {
        for (name, g) in &result {
            let p = dir.join(format!("{name}.grid"));
            std::fs::create_dir_all(dir)
                .map_err(|e| Failure::input(format!("{}: {e}", dir.display())))?;
            g.write_file(&p)
                .map_err(|e| Failure::input(format!("{}: {e}", p.display())))?;
            println!("wrote {}", p.display());
        }
    }
    if profile {
        print!(
            "{}",
            ProfileReport {
                frontend,
                codegen: Default::default(),
                execution,
            }
        );
        println!("total: {:.6} s", wall.elapsed().as_secs_f64());
    }
    if oracle {
        let mut want = input;
        run_target(h, &mut want).map_err(|e| Failure::Internal(e.to_string()))?;
        let mut failed = None;
        for (name, w) in &want {
            let r = compare(&result[name], w).map_err(|e| Failure::Internal(e.to_string()))?;
            if let Err(f) = check(&r, name, tol) {
                failed.get_or_insert(f);
            }
        }
        if let Some(f) = failed {
            return Err(f);
        }
    }
    Ok(())
}

fn cmd_simulate(
    dir: &Path,
    grid: &Path,
    out: &Path,
    trace: Option<&Path>,
    workers: Option<usize>,
) -> Outcome {
    let read = |f: &str| {
        let p = dir.join(f);
        std::fs::read_to_string(&p).map_err(|e| Failure::input(format!("{}: {e}", p.display())))
    };
    let layout = read(dataflow::LAYOUT_FILE)?;
    let program = read(dataflow::PROGRAM_FILE)?;
    let g = load_grid(grid)?;
    let artifact = stencilc::codegen::GeneratedArtifact {
        files: vec![
            (dataflow::LAYOUT_FILE.into(), layout),
            (dataflow::PROGRAM_FILE.into(), program),
        ],
        entry: String::new(),
        backend: BackendKind::Dataflow,
        fingerprint: String::new(),
    };
    let mut sim = load_program(&artifact, &g).map_err(|e| Failure::input(e.to_string()))?;
    if let Some(n) = workers {
        sim = sim.with_workers(n);
    }
    let result = sim.program.result.clone();
    let (grids, t) = sim
        .run_to_exit()
        .map_err(|e| Failure::Internal(e.to_string()))?;
    grids[&result]
        .write_file(out)
        .map_err(|e| Failure::input(format!("{}: {e}", out.display())))?;
    println!(
        "wrote {} ({} steps, timer {})",
        out.display(),
        t.steps.len(),
        t.timer
    );
    if let Some(p) = trace {
        write(p, &t.to_string())?;
    }
    Ok(())
}

fn cmd_diff(a: &Path, b: &Path, tol: &Tolerance) -> Outcome {
    let ga = load_grid(a)?;
    let gb = load_grid(b)?;
    let r = compare(&ga, &gb).map_err(|e| Failure::input(e.to_string()))?;
    check(&r, "diff", tol)
}
