use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rulefactor::activation::rule_fidelity;
use rulefactor::error::Error;
use rulefactor::io;
use rulefactor::model::{validate_against, Clustering, PatientRecord, RuleSet};
use rulefactor::relevance::{explain_global, explain_local, ExplanationReport, Normalize};
use rulefactor::report::{
    batch_profiles, batch_to_json, format_rank_table, render_heatmap, render_radar,
    RadarSpec,
};
use rulefactor::service::{self, ServiceConfig};

const EXIT_INPUT: u8 = 1;
const EXIT_NO_ACTIVATION: u8 = 2;

#[derive(Parser)]
#[command(name = "rulefactor", version, about = "Factor-level attribution for rule-based risk models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizeArg {
    Literal,
    Minmax2x,
}

impl From<NormalizeArg> for Normalize {
    fn from(v: NormalizeArg) -> Normalize {
        match v {
            NormalizeArg::Literal => Normalize::Literal,
            NormalizeArg::Minmax2x => Normalize::Minmax2x,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Json,
}

#[derive(Args)]
struct ModelArgs {
    /// Rule DSL file (.rules)
    #[arg(long)]
    rules: PathBuf,
    /// Clustering file (.factors); omit to use the identity clustering
    #[arg(long)]
    factors: Option<PathBuf>,
    /// Which clustering in the factors file to use
    #[arg(long)]
    clustering: Option<String>,
    /// Fail on attributes the clustering does not map
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct OutputArgs {
    /// Output directory for emitted files
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: FormatArg,
    #[arg(long, value_enum, default_value = "literal")]
    normalize: NormalizeArg,
    /// Limit table rows
    #[arg(long)]
    top_k: Option<usize>,
    /// Record the crate version in JSON metadata
    #[arg(long)]
    stamp: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and cross-check a rule set and clustering file
    Validate(ModelArgs),
    /// Explain the whole rule set
    ExplainGlobal {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Explain the prediction for one patient record
    ExplainLocal {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Patient record (.json object or .csv ATTR=value lines)
        #[arg(long)]
        patient: PathBuf,
    },
    /// Explain many records and emit a cross-profile heatmap
    Batch {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        output: OutputArgs,
        /// Directory of patient records, or a single JSON array file
        #[arg(long)]
        patients: PathBuf,
    },
    /// Measure per-rule fidelity against labeled samples
    Fidelity {
        #[command(flatten)]
        model: ModelArgs,
        /// CSV with attribute columns plus MODEL_LABEL
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a saved report JSON as a radar SVG
    Render {
        /// Report JSON produced by explain-global/explain-local
        #[arg(long)]
        report: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Start the HTTP service
    Serve {
        /// TOML config file (bind, rules_path, factors_path, ...)
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long)]
        factors: Option<PathBuf>,
        #[arg(long)]
        clustering: Option<String>,
        #[arg(long, value_enum, default_value = "literal")]
        normalize: NormalizeArg,
    },
}

fn load_model(args: &ModelArgs) -> anyhow::Result<(RuleSet, Clustering)> {
    let rules_text = std::fs::read_to_string(&args.rules)?;
    let ruleset = io::parse_rules(&rules_text)
        .map_err(|e| anyhow::anyhow!("{}", e.with_file(&args.rules.display().to_string())))?;
    let clustering = match &args.factors {
        None => Clustering::identity(&ruleset),
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            let all = io::parse_clusterings(&text)
                .map_err(|e| anyhow::anyhow!("{}", e.with_file(&path.display().to_string())))?;
            match &args.clustering {
                Some(name) => all
                    .into_iter()
                    .find(|c| c.name() == name.as_str())
                    .ok_or_else(|| anyhow::anyhow!("clustering '{name}' not found in {}", path.display()))?,
                None if all.len() == 1 => all.into_iter().next().unwrap(),
                None => anyhow::bail!(
                    "{} declares multiple clusterings; pick one with --clustering",
                    path.display()
                ),
            }
        }
    };
    // lenient by default in the CLI: unmapped attributes become singletons
    let (effective, report) = validate_against(&ruleset, &clustering, args.strict)?;
    for attr in &report.auto_singletons {
        eprintln!("note: attribute {attr} not in clustering; using singleton factor");
    }
    Ok((ruleset, effective))
}

fn load_patient(path: &Path) -> anyhow::Result<PatientRecord> {
    let text = std::fs::read_to_string(path)?;
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("patient");
    let record = if path.extension().and_then(|e| e.to_str()) == Some("json") {
        io::parse_record_json(&text, stem)?
    } else {
        io::parse_record_kv(&text, stem)?
    };
    Ok(record)
}

fn load_patients(path: &Path) -> anyhow::Result<Vec<PatientRecord>> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = std::fs::read_dir(path)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                matches!(p.extension().and_then(|e| e.to_str()), Some("json") | Some("csv"))
            })
            .collect();
        entries.sort();
        if entries.is_empty() {
            anyhow::bail!("no .json or .csv records in {}", path.display());
        }
        entries.iter().map(|p| load_patient(p)).collect()
    } else {
        let text = std::fs::read_to_string(path)?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        let items = value
            .as_array()
            .ok_or_else(|| anyhow::anyhow!("{} must hold a JSON array of records", path.display()))?;
        items
            .iter()
            .enumerate()
            .map(|(i, v)| Ok(io::record_from_value(v, &format!("record{}", i + 1))?))
            .collect()
    }
}

fn write_or_print(out: &Option<PathBuf>, name: &str, content: &str) -> anyhow::Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            let path = dir.join(name);
            std::fs::write(&path, content)?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn report_json(report: &ExplanationReport, stamp: bool) -> String {
    let mut v = report.to_json();
    if stamp {
        v["meta"] = serde_json::json!({"version": env!("CARGO_PKG_VERSION")});
    }
    serde_json::to_string_pretty(&v).unwrap() + "\n"
}

fn emit_report(
    report: &ExplanationReport,
    scope_name: &str,
    output: &OutputArgs,
) -> anyhow::Result<()> {
    let json = report_json(report, output.stamp);
    let text = format_rank_table(report, output.top_k);
    match &output.out {
        Some(_) => {
            write_or_print(&output.out, &format!("{scope_name}.report.json"), &json)?;
            write_or_print(&output.out, &format!("{scope_name}.report.txt"), &text)?;
            if report.factor_scores.len() >= 3 {
                let spec = RadarSpec::from_report(report, scope_name);
                write_or_print(
                    &output.out,
                    &format!("{scope_name}.radar.svg"),
                    &render_radar(&spec)?,
                )?;
            } else {
                eprintln!("note: fewer than 3 factors; radar chart skipped");
            }
        }
        None => match output.format {
            FormatArg::Json => print!("{json}"),
            FormatArg::Text => print!("{text}"),
        },
    }
    Ok(())
}

fn run() -> anyhow::Result<u8> {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate(model) => {
            let (ruleset, clustering) = load_model(&model)?;
            println!(
                "ok: {} rules, {} attributes, {} classes; clustering '{}' with {} factors",
                ruleset.len(),
                ruleset.attribute_universe().len(),
                ruleset.class_labels().len(),
                clustering.name(),
                clustering.factors().len()
            );
            Ok(0)
        }
        Command::ExplainGlobal { model, output } => {
            let (ruleset, clustering) = load_model(&model)?;
            let report = explain_global(&ruleset, &clustering, output.normalize.into())?;
            emit_report(&report, "global", &output)?;
            Ok(0)
        }
        Command::ExplainLocal { model, output, patient } => {
            let (ruleset, clustering) = load_model(&model)?;
            let record = load_patient(&patient)?;
            match explain_local(&ruleset, &clustering, &record, output.normalize.into()) {
                Ok(report) => {
                    emit_report(&report, &record.id, &output)?;
                    Ok(0)
                }
                Err(Error::NoActivation { patient_id }) => {
                    eprintln!("no rule activates for record '{patient_id}'");
                    Ok(EXIT_NO_ACTIVATION)
                }
                Err(e) => Err(e.into()),
            }
        }
        Command::Batch { model, output, patients } => {
            let (ruleset, clustering) = load_model(&model)?;
            let records = load_patients(&patients)?;
            let (spec, outcomes) =
                batch_profiles(&ruleset, &clustering, &records, output.normalize.into())?;
            let json = serde_json::to_string_pretty(&batch_to_json(
                &spec,
                &outcomes,
                output.normalize.into(),
                clustering.name(),
            ))
            .unwrap()
                + "\n";
            match &output.out {
                Some(_) => {
                    write_or_print(&output.out, "batch.report.json", &json)?;
                    write_or_print(&output.out, "batch.heatmap.svg", &render_heatmap(&spec)?)?;
                }
                None => print!("{json}"),
            }
            for o in &outcomes {
                if !o.activated() {
                    eprintln!("note: no rule activates for record '{}'", o.patient_id);
                }
            }
            Ok(0)
        }
        Command::Fidelity { model, samples, out } => {
            let (ruleset, _) = load_model(&model)?;
            let text = std::fs::read_to_string(&samples)?;
            let labeled = io::parse_labeled_samples(&text)?;
            let reports = rule_fidelity(&ruleset, &labeled);
            let mut csv = String::from("rule_id,activations,matches,fidelity\n");
            for r in &reports {
                let f = r.fidelity.map(|f| format!("{f:.6}")).unwrap_or_default();
                csv.push_str(&format!("{},{},{},{}\n", r.rule_id, r.activations, r.matches, f));
            }
            match out {
                Some(dir) => write_or_print(&Some(dir), "fidelity.csv", &csv)?,
                None => print!("{csv}"),
            }
            Ok(0)
        }
        Command::Render { report, out } => {
            let text = std::fs::read_to_string(&report)?;
            let v: serde_json::Value = serde_json::from_str(&text)?;
            let factors = v["factor_scores"]
                .as_array()
                .ok_or_else(|| anyhow::anyhow!("not a report JSON: missing factor_scores"))?;
            let axes: Vec<String> = factors
                .iter()
                .map(|f| f["factor"].as_str().unwrap_or_default().to_string())
                .collect();
            let values: Vec<f64> =
                factors.iter().map(|f| f["score"].as_f64().unwrap_or(0.0)).collect();
            let normalize = Normalize::parse(v["normalize"].as_str().unwrap_or("literal"))
                .unwrap_or(Normalize::Literal);
            let title = match v["scope"]["type"].as_str() {
                Some("local") => format!(
                    "local explanation: {}",
                    v["scope"]["patient_id"].as_str().unwrap_or("?")
                ),
                _ => "global explanation".to_string(),
            };
            let spec = RadarSpec { axes, values, title, axis_max: normalize.axis_max() };
            let svg = render_radar(&spec)?;
            let name = report
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("report")
                .trim_end_matches(".report")
                .to_string();
            match out {
                Some(dir) => write_or_print(&Some(dir), &format!("{name}.radar.svg"), &svg)?,
                None => print!("{svg}"),
            }
            Ok(0)
        }
        Command::Serve { config, bind, rules, factors, clustering, normalize } => {
            let mut cfg = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(&path)?;
                    toml::from_str::<ServiceConfig>(&text)?
                }
                None => ServiceConfig {
                    bind: bind.clone(),
                    rules_path: rules
                        .as_ref()
                        .ok_or_else(|| anyhow::anyhow!("serve needs --rules or --config"))?
                        .display()
                        .to_string(),
                    factors_path: factors
                        .as_ref()
                        .ok_or_else(|| anyhow::anyhow!("serve needs --factors or --config"))?
                        .display()
                        .to_string(),
                    default_clustering: clustering.clone(),
                    normalize: Normalize::from(normalize).as_str().to_string(),
                },
            };
            cfg.apply_env_overrides();
            let runtime = tokio::runtime::Runtime::new()?;
            runtime.block_on(service::serve(cfg))?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
