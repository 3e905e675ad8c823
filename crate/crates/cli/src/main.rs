use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use mppsoc::rewrite::{dry_run_report, generate_in, render, GenError, GenReport, TemplateKind};
use mppsoc::sim::{load_program, reduce_sum, RunOptions};
use mppsoc::{parse_config, validate, CostModel, MppSoCConfig, SimMachine, TemplateSource};

const GEN_REPORT: &str = ".last_gen_report";
const SIM_REPORT: &str = ".last_sim_report";

#[derive(Parser)]
#[command(
    name = "mppsocgen",
    version,
    about = "Configure, generate and simulate mppSoC instances"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration against the design rules.
    Validate { config: PathBuf },
    /// Write the configured VHDL files.
    Generate {
        config: PathBuf,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
        /// Template directory (default: the bundled library).
        #[arg(long)]
        templates: Option<PathBuf>,
        /// Also write the list of generated files, for downstream tools.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Print the report without writing anything.
        #[arg(long)]
        force_report_only: bool,
    },
    /// Run an application on the simulated machine.
    Simulate {
        config: PathBuf,
        /// `reduce` or `asm:FILE`.
        #[arg(long, default_value = "reduce")]
        app: String,
        /// `A..B` (inclusive), `v1,v2,...` or `@FILE`; one value per PE.
        #[arg(long)]
        values: Option<String>,
        #[arg(long)]
        cost_model: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        report: Format,
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
    },
    /// Print the reports of the last generate and simulate runs.
    Report {
        #[arg(short, long, default_value = "out")]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        report: Format,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Kv,
}

/// An error with its exit code: 1 bad input, 2 I/O or templates, 3 simulation.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Display) -> Self {
        Failure {
            code: 1,
            message: message.to_string(),
        }
    }

    fn io(message: impl Display) -> Self {
        Failure {
            code: 2,
            message: message.to_string(),
        }
    }

    fn sim(message: impl Display) -> Self {
        Failure {
            code: 3,
            message: message.to_string(),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn located(path: &Path, line: Option<usize>, err: impl Display) -> String {
    match line {
        Some(l) => format!("{}:{l}: {err}", path.display()),
        None => format!("{}: {err}", path.display()),
    }
}

fn load_config(path: &Path) -> Result<MppSoCConfig, Failure> {
    let text = read(path)?;
    parse_config(&text).map_err(|e| Failure::input(located(path, e.line(), &e)))
}

fn load_valid_config(path: &Path) -> Result<MppSoCConfig, Failure> {
    let config = load_config(path)?;
    let report = validate(&config);
    if !report.is_valid() {
        return Err(Failure::input(format!(
            "{}: {}",
            path.display(),
            report.to_string().trim_end()
        )));
    }
    Ok(config)
}

fn base_dir(config: &Path) -> &Path {
    config
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
}

fn cmd_validate(config: &Path) -> Result<(), Failure> {
    let config_value = load_config(config)?;
    let report = validate(&config_value);
    print!("{report}");
    if report.is_valid() {
        Ok(())
    } else {
        Err(Failure {
            code: 1,
            message: String::new(),
        })
    }
}

fn gen_failure(e: GenError) -> Failure {
    match e {
        GenError::BadImageWord { .. } | GenError::ImageTooLarge { .. } => Failure::input(e),
        _ => Failure::io(e),
    }
}

fn cmd_generate(
    config: &Path,
    out: &Path,
    templates: Option<PathBuf>,
    manifest: Option<PathBuf>,
    report_only: bool,
) -> Result<(), Failure> {
    let source = templates.map_or(TemplateSource::Bundled, TemplateSource::Dir);
    let start = Instant::now();
    if report_only {
        let c = load_config(config)?;
        let report = validate(&c);
        if !report.is_valid() {
            eprint!("{report}");
        }
        let files = render(&c, &source, base_dir(config)).map_err(gen_failure)?;
        print!("{}", dry_run_report(&files, start.elapsed()));
        eprintln!("dry run: nothing written ({:.2?})", start.elapsed());
        return Ok(());
    }
    let c = load_valid_config(config)?;
    let report = generate_in(&c, &source, out, base_dir(config)).map_err(gen_failure)?;
    write(&out.join(GEN_REPORT), &report.to_kv())?;
    if let Some(path) = manifest {
        let list: String = TemplateKind::ALL
            .iter()
            .map(|k| format!("{}\n", out.join(k.file_name()).display()))
            .collect();
        write(&path, &list)?;
    }
    print!("{report}");
    eprintln!("generated in {:.2?}", report.elapsed);
    Ok(())
}

fn parse_values(spec: &str) -> Result<Vec<i64>, Failure> {
    let (text, origin) = match spec.strip_prefix('@') {
        Some(file) => (read(Path::new(file))?, file.to_string()),
        None => (spec.to_string(), "--values".to_string()),
    };
    if let Some((a, b)) = text.trim().split_once("..") {
        let lo: i64 = a
            .trim()
            .parse()
            .map_err(|_| Failure::input(format!("{origin}: bad range start `{a}`")))?;
        let hi: i64 = b
            .trim()
            .parse()
            .map_err(|_| Failure::input(format!("{origin}: bad range end `{b}`")))?;
        return Ok((lo..=hi).collect());
    }
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let body = line.split('#').next().unwrap_or("");
        for tok in body
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
        {
            let v = tok.parse().map_err(|_| {
                Failure::input(format!("{origin}:{}: `{tok}` is not an integer", idx + 1))
            })?;
            values.push(v);
        }
    }
    Ok(values)
}

fn load_costs(path: Option<&Path>) -> Result<CostModel, Failure> {
    match path {
        None => Ok(CostModel::default()),
        Some(p) => {
            let text = read(p)?;
            CostModel::parse(&text).map_err(|e| Failure::input(format!("{}: {e}", p.display())))
        }
    }
}

fn save_sim_report(out: &Path, kv: &str) -> Result<(), Failure> {
    fs::create_dir_all(out).map_err(|e| Failure::io(format!("{}: {e}", out.display())))?;
    write(&out.join(SIM_REPORT), kv)
}

fn cmd_simulate(
    config: &Path,
    app: &str,
    values: Option<&str>,
    cost_model: Option<&Path>,
    format: Format,
    out: &Path,
) -> Result<(), Failure> {
    let c = load_valid_config(config)?;
    let costs = load_costs(cost_model)?;
    let values = values.map(parse_values).transpose()?;
    if app == "reduce" {
        let values = values.unwrap_or_else(|| (0..c.pe_count() as i64).collect());
        let report = reduce_sum(&c, &values, &costs).map_err(Failure::sim)?;
        save_sim_report(out, &report.to_kv())?;
        match format {
            Format::Text => print!("{report}"),
            Format::Kv => print!("{}", report.to_kv()),
        }
        return Ok(());
    }
    let Some(file) = app.strip_prefix("asm:") else {
        return Err(Failure::input(format!(
            "unknown app `{app}` (expected reduce or asm:FILE)"
        )));
    };
    let file = Path::new(file);
    let program =
        load_program(&read(file)?).map_err(|e| Failure::input(located(file, e.line(), &e)))?;
    let mut machine = SimMachine::new(&c, costs).map_err(Failure::sim)?;
    if let Some(values) = values {
        if values.len() > machine.pe_count() {
            return Err(Failure::input(format!(
                "{} values for {} PEs",
                values.len(),
                machine.pe_count()
            )));
        }
        for (pe, v) in values.into_iter().enumerate() {
            machine.write_word(pe, 0, v as u32).map_err(Failure::sim)?;
        }
    }
    let report = machine
        .run_with(&program, RunOptions { snapshot: true })
        .map_err(|e| Failure::sim(located(file, e.line(), &e)))?;
    save_sim_report(out, &report.to_kv())?;
    match format {
        Format::Text => {
            print!("{report}");
            for (pe, regs) in report
                .snapshot
                .iter()
                .flat_map(|s| s.regs.iter().enumerate())
            {
                let regs: Vec<String> = regs
                    .iter()
                    .enumerate()
                    .map(|(r, v)| format!("r{r}={v}"))
                    .collect();
                println!("pe{pe}: {}", regs.join(" "));
            }
        }
        Format::Kv => print!("{}", report.to_kv()),
    }
    Ok(())
}

/// Renders a saved key-value report as one `key=value ...` line.
fn kv_as_text(kv: &str) -> String {
    let fields: Vec<&str> = kv.lines().filter(|l| !l.starts_with("report=")).collect();
    format!("{}\n", fields.join(" "))
}

fn cmd_report(out: &Path, format: Format) -> Result<(), Failure> {
    let mut found = false;
    let gen = out.join(GEN_REPORT);
    if gen.exists() {
        found = true;
        let kv = read(&gen)?;
        match (format, GenReport::from_kv(&kv)) {
            (Format::Text, Some(r)) => print!("{r}"),
            (Format::Text, None) => {
                return Err(Failure::io(format!(
                    "{}: not a generate report",
                    gen.display()
                )))
            }
            (Format::Kv, _) => print!("{kv}"),
        }
    }
    let sim = out.join(SIM_REPORT);
    if sim.exists() {
        found = true;
        let kv = read(&sim)?;
        match format {
            Format::Text => print!("{}", kv_as_text(&kv)),
            Format::Kv => print!("{kv}"),
        }
    }
    if !found {
        return Err(Failure::io(format!("{}: no saved reports", out.display())));
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { config } => cmd_validate(&config),
        Command::Generate {
            config,
            out,
            templates,
            manifest,
            force_report_only,
        } => cmd_generate(&config, &out, templates, manifest, force_report_only),
        Command::Simulate {
            config,
            app,
            values,
            cost_model,
            report,
            out,
        } => cmd_simulate(
            &config,
            &app,
            values.as_deref(),
            cost_model.as_deref(),
            report,
            &out,
        ),
        Command::Report { out, report } => cmd_report(&out, report),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("mppsocgen: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}
