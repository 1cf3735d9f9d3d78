use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ctgen_core::analytics::Summary;
use ctgen_core::experiment::{
    discover, read_catalog, read_sut, run_campaign, run_once, write_run, CampaignConfig,
    ExperimentError,
};
use ctgen_core::{Budget, ConstraintCatalog, GenConfig, Mode, SearchConfig};

#[derive(Parser)]
#[command(
    name = "ctgen",
    version,
    about = "Constraint-guided unit test generation for tensor APIs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check constraint catalogs and list rejected entries.
    Validate {
        #[arg(required = true)]
        catalogs: Vec<PathBuf>,
    },
    /// Run one search over a module and emit its tests.
    Generate(GenerateArgs),
    /// Compare constrained and unconstrained generation over a corpus.
    Experiment(ExperimentArgs),
}

#[derive(Args, Clone)]
struct GenFlags {
    /// Probability of an arbitrary argument where a constraint exists.
    #[arg(long, default_value_t = 0.25)]
    invalid_prob: f64,
    #[arg(long, default_value_t = 5)]
    max_ndim: u32,
    #[arg(long, default_value_t = 5)]
    max_dim_size: usize,
    #[arg(long, default_value_t = 1)]
    min_dim_size: usize,
    /// Magnitude bound for numbers drawn from unbounded domains.
    #[arg(long, default_value_t = 1000.0)]
    clamp: f64,
}

impl GenFlags {
    fn config(&self) -> Result<GenConfig, String> {
        let cfg = GenConfig {
            invalid_prob: self.invalid_prob,
            max_ndim: self.max_ndim,
            max_dim_size: self.max_dim_size,
            min_dim_size: self.min_dim_size,
            clamp: self.clamp,
            ..GenConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Clone)]
struct BudgetFlags {
    /// Wall-clock budget per run.
    #[arg(long, default_value_t = 10.0)]
    budget_seconds: f64,
    /// Fixed number of generations instead of a time budget.
    #[arg(long, conflicts_with = "budget_seconds")]
    iterations: Option<u64>,
}

impl BudgetFlags {
    fn budget(&self) -> Result<Budget, String> {
        match self.iterations {
            Some(n) => Ok(Budget::Iterations(n)),
            None if self.budget_seconds.is_finite() && self.budget_seconds > 0.0 => {
                Ok(Budget::Seconds(self.budget_seconds))
            }
            None => Err(format!(
                "budget of {} seconds must be positive",
                self.budget_seconds
            )),
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    sut: PathBuf,
    /// Catalog used for constrained generation and compliance labels.
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long, default_value = "constrained")]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    budget: BudgetFlags,
    #[command(flatten)]
    gen: GenFlags,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    sut_dir: PathBuf,
    #[arg(long)]
    catalog_dir: PathBuf,
    /// Repetitions per module and mode.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// Master seed every run seed is derived from.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    budget: BudgetFlags,
    #[command(flatten)]
    gen: GenFlags,
    #[arg(long)]
    out: PathBuf,
    /// Reuse run files already present under `--out`.
    #[arg(long)]
    resume: bool,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

enum Failure {
    Usage(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn validate(paths: &[PathBuf]) -> Result<ExitCode, Failure> {
    let mut catalog = ConstraintCatalog::default();
    for path in paths {
        catalog.merge(read_catalog(path)?);
    }
    let d = &catalog.diagnostics;
    println!("accepted: {}", d.accepted);
    println!("rejected: {}", d.rejected);
    for r in &d.rejections {
        println!("  {r}");
    }
    Ok(if d.rejected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn generate(args: &GenerateArgs) -> Result<ExitCode, Failure> {
    let gen = args.gen.config().map_err(Failure::Usage)?;
    let search = SearchConfig {
        budget: args.budget.budget().map_err(Failure::Usage)?,
        seed: args.seed,
        ..SearchConfig::default()
    };
    let sut = read_sut(&args.sut)?;
    let catalog = match &args.catalog {
        Some(path) => read_catalog(path)?,
        None => ConstraintCatalog::default(),
    };
    let run = run_once(&sut, &catalog, args.mode, &gen, &search);
    let files = write_run(&args.out, &sut, &run)?;
    let r = &run.record;
    println!(
        "{} [{}] coverage {:.4} ({}/{}) after {} iterations",
        r.module, r.mode, r.coverage, r.covered, r.total, r.iterations
    );
    println!(
        "tests: {} compliant, {} non-compliant, {} quarantined",
        r.compliance.compliant,
        r.compliance.non_compliant,
        r.quarantined.len()
    );
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn print_summary(s: &Summary) {
    println!(
        "{:<14} {:>8} {:>8} {:>7} {:>9} {:>7}",
        "module", "constr", "unconstr", "A12", "p", "verdict"
    );
    for m in &s.modules {
        let p = m.p_value.map_or("n/a".to_string(), |p| format!("{p:.4}"));
        let sig = if m.significant == Some(true) { "*" } else { "" };
        println!(
            "{:<14} {:>8.4} {:>8.4} {:>7.3} {:>9} {:>7}{sig}",
            m.module,
            m.mean_coverage_constrained,
            m.mean_coverage_unconstrained,
            m.a12,
            p,
            format!("{:?}", m.verdict).to_lowercase(),
        );
    }
    println!(
        "better {} ({} sig), equal {}, worse {} ({} sig); mean A12 {:.3}",
        s.better, s.better_significant, s.equal, s.worse, s.worse_significant, s.mean_a12
    );
    println!(
        "mean relative coverage: constrained {:.1}%, unconstrained {:.1}%",
        s.mean_relative_coverage_constrained, s.mean_relative_coverage_unconstrained
    );
    println!(
        "compliant tests: constrained {}/{}, unconstrained {}/{}",
        s.compliance_constrained.compliant,
        s.compliance_constrained.generated,
        s.compliance_unconstrained.compliant,
        s.compliance_unconstrained.generated
    );
    for e in &s.excluded {
        eprintln!("excluded {}: {}", e.module, e.reason);
    }
}

fn experiment(args: &ExperimentArgs) -> Result<ExitCode, Failure> {
    let cfg = CampaignConfig {
        seeds: args.seeds,
        master_seed: args.seed,
        gen: args.gen.config().map_err(Failure::Usage)?,
        budget: args.budget.budget().map_err(Failure::Usage)?,
        jobs: args.jobs,
        resume: args.resume,
        alpha: 0.05,
    };
    if cfg.seeds == 0 || cfg.jobs == 0 {
        return Err(Failure::Usage("--seeds and --jobs must be positive".into()));
    }
    let (subjects, notes) = discover(&args.sut_dir, &args.catalog_dir)?;
    for n in notes {
        eprintln!("{n}");
    }
    let campaign = run_campaign(&subjects, &cfg, &args.out, &|r, reused| {
        eprintln!(
            "{} {} seed {}: {:.4}{}",
            r.module,
            r.mode,
            r.seed,
            r.coverage,
            if reused { " (resumed)" } else { "" }
        );
    })?;
    print_summary(&campaign.summary);
    println!(
        "runs: {} computed, {} resumed; wrote {}",
        campaign.computed,
        campaign.reused,
        args.out.join("summary.json").display()
    );
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = std::panic::catch_unwind(|| match &cli.command {
        Command::Validate { catalogs } => validate(catalogs),
        Command::Generate(args) => generate(args),
        Command::Experiment(args) => experiment(args),
    });
    match result {
        Ok(Ok(code)) => code,
        Ok(Err(Failure::Usage(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(_) => ExitCode::from(1),
    }
}
