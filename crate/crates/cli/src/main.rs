use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use synthaudit_core::distance::DistanceSpace;
use synthaudit_core::multivariate::{consistency_rate, parse_rules};
use synthaudit_core::report::svg::render_svg;
use synthaudit_core::report::{
    render_verdicts, run_audit_on, AuditConfig, AuditInputs, AuditReport,
};
use synthaudit_core::{AuditError, Result};

#[derive(Parser)]
#[command(
    name = "synthaudit",
    version,
    about = "Fidelity and privacy audit of synthetic tabular data"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Audit configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the seed from the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output file; the report goes to stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Records the run time in the report metadata.
    #[arg(long, global = true)]
    timestamp: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Fidelity and privacy blocks.
    Audit,
    /// Fidelity blocks only.
    Fidelity,
    /// Privacy blocks only.
    Privacy,
    /// Distance to closest record only.
    Dcr,
    /// Membership inference and the file-membership test only.
    Mi,
    /// Attribute inference only.
    Attr,
    /// Consistency rule tools.
    Rules {
        #[command(subcommand)]
        action: RulesAction,
    },
    /// Draws the charts of a report as SVG.
    Render {
        /// Report JSON written by an audit.
        report: PathBuf,
    },
    /// Distance between one real and one synthetic record.
    Distance {
        /// Real row index, then synthetic row index (0-based).
        #[arg(long, num_args = 2, value_names = ["REAL", "SYNTHETIC"])]
        pair: Vec<usize>,
    },
}

#[derive(Subcommand)]
enum RulesAction {
    /// Parses a rule file and optionally counts violations in data files.
    Check {
        /// Rule file.
        rules: PathBuf,
        /// Schema; taken from the configuration when absent.
        #[arg(long)]
        schema: Option<PathBuf>,
        /// CSV files to evaluate the rules on.
        #[arg(long)]
        data: Vec<PathBuf>,
    },
}

#[derive(Clone, Copy)]
enum Scope {
    All,
    Fidelity,
    Privacy,
    Dcr,
    Mi,
    Attr,
}

fn load_config(g: &Global) -> Result<AuditConfig> {
    let path = g
        .config
        .as_deref()
        .ok_or_else(|| AuditError::ConfigInvalid("--config is required".into()))?;
    let mut cfg = AuditConfig::from_file(path)?;
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if g.timestamp {
        cfg.output.timestamp = true;
    }
    Ok(cfg)
}

fn restrict(cfg: &mut AuditConfig, scope: Scope) {
    let p = &mut cfg.privacy;
    match scope {
        Scope::All => {}
        Scope::Fidelity => p.enabled = false,
        Scope::Privacy => cfg.fidelity.enabled = false,
        Scope::Dcr | Scope::Mi | Scope::Attr => {
            cfg.fidelity.enabled = false;
            let keep_mi = matches!(scope, Scope::Mi);
            p.membership.enabled &= keep_mi;
            p.file_membership.enabled &= keep_mi;
            p.attribute.enabled &= matches!(scope, Scope::Attr);
            p.dcr.enabled &= matches!(scope, Scope::Dcr);
            if let Some(e) = p.exposure.as_mut() {
                e.enabled = false;
            }
        }
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| AuditError::Io {
            path: p.to_path_buf(),
            source: e,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn audit(g: &Global, scope: Scope) -> Result<u8> {
    let mut cfg = load_config(g)?;
    restrict(&mut cfg, scope);
    let inputs = AuditInputs::load(&cfg)?;
    let report = run_audit_on(&cfg, &inputs);
    let json = report.to_json()?;
    let target = g.out.clone().or_else(|| cfg.output.report.clone());
    write_or_print(target.as_deref(), &json)?;
    let summary = render_verdicts(&report);
    if target.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    Ok(report.exit_code() as u8)
}

fn rules_check(g: &Global, rules: &Path, schema: Option<&Path>, data: &[PathBuf]) -> Result<u8> {
    let schema = match schema {
        Some(p) => synthaudit_core::data::Schema::from_toml_file(p)?,
        None => synthaudit_core::data::Schema::from_toml_file(&load_config(g)?.data.schema)?,
    };
    let text = std::fs::read_to_string(rules).map_err(|e| AuditError::Io {
        path: rules.to_path_buf(),
        source: e,
    })?;
    let parsed = parse_rules(&text, &schema)?;
    let mut out = String::new();
    for r in &parsed {
        out.push_str(&format!("{} [{}]: {}\n", r.name, r.severity, r.expression));
    }
    for path in data {
        let ds = synthaudit_core::data::Dataset::load_csv(path, &schema)?;
        let c = consistency_rate(&ds, &parsed)?;
        out.push_str(&format!(
            "{}: {} of {} records inconsistent ({})\n",
            path.display(),
            c.inconsistent_records,
            c.records,
            synthaudit_core::report::fmt_value(c.violation_fraction)
        ));
        for r in &c.rules {
            out.push_str(&format!("  {}: {}\n", r.name, r.violations));
        }
    }
    write_or_print(g.out.as_deref(), &out)?;
    Ok(0)
}

fn render(g: &Global, report: &Path) -> Result<u8> {
    let text = std::fs::read_to_string(report).map_err(|e| AuditError::Io {
        path: report.to_path_buf(),
        source: e,
    })?;
    write_or_print(
        g.out.as_deref(),
        &render_svg(&AuditReport::from_json(&text)?),
    )?;
    Ok(0)
}

fn distance(g: &Global, pair: &[usize]) -> Result<u8> {
    let cfg = load_config(g)?;
    let inputs = AuditInputs::load(&cfg)?;
    let space = DistanceSpace::fit(&cfg.privacy.distance, &inputs.real, &[&inputs.synthetic])?;
    let r = space.encode(&inputs.real)?;
    let s = space.encode(&inputs.synthetic)?;
    let (i, j) = (pair[0], pair[1]);
    if i >= r.len() || j >= s.len() {
        return Err(AuditError::InvalidArgument(format!(
            "row pair ({i}, {j}) out of range"
        )));
    }
    write_or_print(g.out.as_deref(), &format!("{}\n", r.distance(i, &s, j)?))?;
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    let g = &cli.global;
    if let Some(j) = g.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build_global()
            .map_err(|e| AuditError::InvalidArgument(e.to_string()))?;
    }
    match &cli.command {
        Command::Audit => audit(g, Scope::All),
        Command::Fidelity => audit(g, Scope::Fidelity),
        Command::Privacy => audit(g, Scope::Privacy),
        Command::Dcr => audit(g, Scope::Dcr),
        Command::Mi => audit(g, Scope::Mi),
        Command::Attr => audit(g, Scope::Attr),
        Command::Rules {
            action:
                RulesAction::Check {
                    rules,
                    schema,
                    data,
                },
        } => rules_check(g, rules, schema.as_deref(), data),
        Command::Render { report } => render(g, report),
        Command::Distance { pair } => distance(g, pair),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let msg = e.to_string();
            eprintln!("error: {msg}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                let text = s.to_string();
                if !msg.contains(&text) {
                    eprintln!("  caused by: {text}");
                }
                source = s.source();
            }
            ExitCode::from(2)
        }
    }
}
