use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rsp_core::cost::{estimate_hw_cost, lookup_array_delay};
use rsp_core::dse::{explore, Kernel, SearchSpace, SelectionPolicy};
use rsp_core::kernel::{generate_matmul_context, parse_context, serialize_context};
use rsp_core::report::{Report, ReportFormat};
use rsp_core::sim::{reference_matmul, simulate, MemoryImage};
use rsp_core::{rearrange, ArchParams, CostTable, RearrangedContext};

#[derive(Parser, Debug)]
#[command(name = "rsp", version, about = "Resource sharing and pipelining explorer for PE arrays")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a kernel context.
    Genkernel {
        #[command(subcommand)]
        kernel: GenKernel,
    },
    /// Estimate the array area of an architecture.
    Estimate {
        #[arg(long)]
        arch: PathBuf,
        /// Cost table file, or `default` for the built-in 8x8 data.
        #[arg(long, default_value = "default")]
        costs: String,
    },
    /// Rearrange a context for a shared/pipelined architecture.
    Schedule {
        #[arg(long)]
        context: PathBuf,
        #[arg(long)]
        arch: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run a context cycle by cycle over a memory image.
    Simulate {
        /// Plain or rearranged context.
        #[arg(long)]
        context: PathBuf,
        #[arg(long)]
        arch: PathBuf,
        #[arg(long)]
        memory: PathBuf,
        /// Compare region Z with C * X * Y.
        #[arg(long)]
        check: bool,
    },
    /// Enumerate, evaluate and Pareto-filter a design space.
    Explore {
        #[arg(long)]
        space: PathBuf,
        /// Comma-separated context files; each file stem names its kernel.
        #[arg(long, value_delimiter = ',', required = true)]
        kernels: Vec<PathBuf>,
        #[arg(long, default_value = "default")]
        costs: String,
        #[arg(long, default_value = "text")]
        report: ReportArg,
        #[arg(long, value_enum, default_value_t = PolicyArg::MinEt)]
        policy: PolicyArg,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum GenKernel {
    /// N x N matrix multiply `Z = C * X * Y` on an N x N array.
    Matmul {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        stages: usize,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Debug, Clone, Copy)]
struct ReportArg(ReportFormat);

impl std::str::FromStr for ReportArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.parse().map(ReportArg).map_err(|e: rsp_core::report::ReportError| e.to_string())
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolicyArg {
    MinEt,
    MinArea,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn load_arch(path: &Path) -> Result<ArchParams> {
    serde_json::from_str(&read(path)?).with_context(|| format!("{}: invalid architecture", path.display()))
}

fn load_costs(spec: &str) -> Result<CostTable> {
    if spec == "default" {
        return Ok(CostTable::default_table());
    }
    let path = Path::new(spec);
    CostTable::from_json_str(&read(path)?).with_context(|| format!("{}: invalid cost table", path.display()))
}

fn load_context(path: &Path) -> Result<rsp_core::Context> {
    parse_context(&read(path)?).with_context(|| format!("{}: invalid context", path.display()))
}

fn load_any_context(path: &Path) -> Result<RearrangedContext> {
    let text = read(path)?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("{}: not JSON", path.display()))?;
    if RearrangedContext::is_rearranged_document(&value) {
        RearrangedContext::from_value(&value).with_context(|| format!("{}: invalid rearranged context", path.display()))
    } else {
        let ctx = parse_context(&text).with_context(|| format!("{}: invalid context", path.display()))?;
        Ok(RearrangedContext::identity(&ctx))
    }
}

fn format_matrix(rows: &[Vec<Option<i64>>]) -> String {
    rows.iter()
        .map(|r| {
            r.iter()
                .map(|v| v.map_or_else(|| "_".to_string(), |v| v.to_string()))
                .collect::<Vec<_>>()
                .join(" ")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Genkernel {
            kernel: GenKernel::Matmul { n, stages, output },
        } => {
            let ctx = generate_matmul_context(n, stages)?;
            write(&output, &serialize_context(&ctx))?;
            println!(
                "wrote {} ({} ops, {} cycles)",
                output.display(),
                ctx.ops().len(),
                ctx.length_cycles()
            );
        }
        Command::Estimate { arch, costs } => {
            let arch = load_arch(&arch)?;
            let costs = load_costs(&costs)?;
            let est = estimate_hw_cost(&arch, &costs)?;
            println!("arch: {}", arch.variant_key());
            println!("estimated slices: {:.2}", est.estimated_slices);
            println!("base slices: {:.2}", est.base_slices);
            println!("constraint satisfied: {}", est.satisfies_constraint);
            match lookup_array_delay(&arch, &costs) {
                Ok(d) => println!("array delay (ns): {d:.2}"),
                Err(e) => log::warn!("no delay for {}: {e}", arch.variant_key()),
            }
        }
        Command::Schedule { context, arch, output } => {
            let ctx = load_context(&context)?;
            let arch = load_arch(&arch)?;
            let r = rearrange(&ctx, &arch)?;
            println!("arch: {}", arch.variant_key());
            println!("original cycles: {}", r.original_length());
            println!("pipeline extension: {}", r.rp_latency_extension);
            println!("sharing stalls: {}", r.rs_stall_count);
            println!("bus stalls: {}", r.rp_stall_count);
            println!("total cycles: {}", r.total_cycles);
            if let Some(out) = output {
                write(&out, &r.to_json())?;
                println!("wrote {}", out.display());
            }
        }
        Command::Simulate {
            context,
            arch,
            memory,
            check,
        } => {
            let r = load_any_context(&context)?;
            let arch = load_arch(&arch)?;
            let mem = MemoryImage::from_json_str(&read(&memory)?)
                .with_context(|| format!("{}: invalid memory image", memory.display()))?;
            let out = simulate(&r, &arch, &mem)?;
            let z = out
                .region_rows("Z")
                .with_context(|| format!("{}: no region `Z`", memory.display()))?;
            println!("Z =\n{}", format_matrix(&z));
            if check {
                let matrix = |name: &str| {
                    mem.region_matrix(name)
                        .with_context(|| format!("{}: region `{name}` missing or incomplete", memory.display()))
                };
                let (x, y) = (matrix("X")?, matrix("Y")?);
                let c = *mem
                    .constants
                    .get("C")
                    .with_context(|| format!("{}: constant `C` missing", memory.display()))?;
                let expected = reference_matmul(&x, &y, c, x.len(), mem.width_bits)?;
                if out.region_matrix("Z").as_ref() == Some(&expected) {
                    println!("check: PASS");
                } else {
                    println!("expected =\n{}", format_matrix(
                        &expected.iter().map(|r| r.iter().map(|&v| Some(v)).collect()).collect::<Vec<_>>()
                    ));
                    bail!("check: FAIL, Z differs from C * X * Y");
                }
            }
        }
        Command::Explore {
            space,
            kernels,
            costs,
            report,
            policy,
            output,
        } => {
            let space = SearchSpace::from_json_str(&read(&space)?)
                .with_context(|| format!("{}: invalid search space", space.display()))?;
            let costs = load_costs(&costs)?;
            let kernels = kernels
                .iter()
                .map(|p| {
                    let name = p
                        .file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| p.display().to_string());
                    Ok(Kernel::new(name, load_context(p)?))
                })
                .collect::<Result<Vec<_>>>()?;
            let policy = match policy {
                PolicyArg::MinEt => SelectionPolicy::MinEt,
                PolicyArg::MinArea => SelectionPolicy::MinArea,
            };
            let x = explore(&space, &kernels, &costs, policy)?;
            let rep = Report::from_exploration(&x);
            let text = rep.render(report.0)?;
            match output {
                Some(out) => {
                    write(&out, &text)?;
                    println!("wrote {}", out.display());
                    println!("Pareto set: {}", rep.pareto.join(", "));
                    println!("Selected: {}", rep.optimal.as_deref().unwrap_or("none"));
                }
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
