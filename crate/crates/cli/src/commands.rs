use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use procert::certification::{
    estimate_exhaustive, estimate_monte_carlo, relevant_for_gate, subsample_sweep, CertificationReport, Experiment,
};
use procert::channels::{average_fidelity, choi, noisy_gate, Gate};
use procert::golden;
use procert::linalg::eigh;
use procert::tomography::{collect, fidelity_from_tomography, invert, project_physical, write_records_csv};

use crate::config::{Format, RunConfig, Samples};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(procert::Error),
    Io(std::io::Error),
    Check(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(procert::Error::Io(_) | procert::Error::Csv(_) | procert::Error::Json(_)) => 1,
            CliError::Core(_) => 2,
            CliError::Io(_) => 1,
            CliError::Check(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Check(msg) => f.write_str(msg),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<procert::Error> for CliError {
    fn from(e: procert::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Core(e.into())
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Copy, Clone, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum TableFormat {
    Text,
    Json,
    Csv,
}

fn experiment(config: &RunConfig) -> Result<Experiment> {
    let channel = noisy_gate(config.gate, &config.noise, config.noise_placement)?;
    let calibration = config.calibration.build(config.gate.qubits())?;
    Ok(Experiment::new(channel, calibration)?)
}

/// Report destination: `--output`, else a file in the output directory, else stdout.
fn destination(config: &RunConfig, output_dir: Option<&Path>, command: &str) -> Option<PathBuf> {
    config.output.clone().or_else(|| {
        output_dir.map(|dir| dir.join(format!("{command}-{}.{}", config.gate, config.format.extension())))
    })
}

fn emit(body: &str, target: Option<&Path>, summary: &str) -> Result<()> {
    match target {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(path, body)?;
            println!("{summary}");
            println!("wrote {}", path.display());
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn json_document(value: serde_json::Value) -> String {
    let mut text = serde_json::to_string_pretty(&value).expect("document serializes");
    text.push('\n');
    text
}

fn csv_document<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn enumerate(gate: Gate, count_only: bool, values: bool, check_golden: bool, format: TableFormat) -> Result<()> {
    let set = relevant_for_gate(gate)?;
    if check_golden {
        let expected = golden::table(gate);
        let mut mismatches = Vec::new();
        for (row, (op, g)) in set.iter().zip(&expected).enumerate() {
            let got = if golden::is_signed(gate) { op.signed_word() } else { op.word };
            if got != *g {
                mismatches.push(format!("row {}: computed {got}, table {g}", row + 1));
            }
        }
        if set.len() != expected.len() {
            mismatches.push(format!("computed {} rows, table has {}", set.len(), expected.len()));
        }
        if !mismatches.is_empty() {
            for m in &mismatches {
                println!("{m}");
            }
            return Err(CliError::Check(format!("{gate}: {} differences from bundled table", mismatches.len())));
        }
        let kind = if golden::is_signed(gate) { "signed" } else { "unsigned" };
        println!("{gate}: {} rows match the bundled {kind} table", set.len());
        return Ok(());
    }
    if count_only {
        println!("{}", set.len());
        return Ok(());
    }
    #[derive(Serialize)]
    struct Row {
        index: usize,
        word: String,
        ideal_expectation: f64,
        relevance: f64,
    }
    let rows: Vec<Row> = set
        .iter()
        .map(|op| Row {
            index: op.index,
            word: op.signed_word().to_string(),
            ideal_expectation: op.ideal_expectation,
            relevance: op.relevance,
        })
        .collect();
    let text = match format {
        TableFormat::Text if values => {
            rows.iter().map(|r| format!("{}\t{:+.6}\t{:.6}\n", r.word, r.ideal_expectation, r.relevance)).collect()
        }
        TableFormat::Text => set.render_table(),
        TableFormat::Json => json_document(json!({
            "command": "enumerate",
            "gate": gate.to_string(),
            "count": rows.len(),
            "operators": rows,
        })),
        TableFormat::Csv => csv_document(&rows)?,
    };
    print!("{text}");
    Ok(())
}

fn certify_summary(config: &RunConfig, r: &CertificationReport) -> String {
    format!(
        "{} {}: F = {:.6} ± {:.6}, F̄ = {:.6}, {} operators, {} settings, seed {}",
        config.gate,
        config.noise,
        r.process_fidelity,
        r.std_error,
        r.average_fidelity,
        r.n_operators_sampled,
        r.n_settings,
        r.seed
    )
}

#[derive(Serialize)]
struct CertifyRow {
    method: String,
    process_fidelity: f64,
    average_fidelity: f64,
    std_error: f64,
    ci90_low: f64,
    ci90_high: f64,
    d: usize,
    n_operators_sampled: usize,
    n_settings: usize,
    shots_per_setting: u32,
    eigenstate_sampling: bool,
    seed: u64,
}

pub fn certify(config: &RunConfig, output_dir: Option<&Path>) -> Result<()> {
    let exp = experiment(config)?;
    let relevant = relevant_for_gate(config.gate)?;
    let mode = config.readout_mode();
    let report = match config.samples {
        Samples::All if config.eigenstate_sampling => {
            return Err(CliError::Usage("--eigenstate-sampling needs a sample count".into()));
        }
        Samples::All => estimate_exhaustive(&exp, &relevant, mode)?,
        Samples::Count(n) => estimate_monte_carlo(&exp, &relevant, n, config.eigenstate_sampling, mode, config.seed)?,
    };
    let body = match config.format {
        Format::Json => json_document(json!({ "command": "certify", "config": config, "report": report })),
        Format::Csv => csv_document(&[CertifyRow {
            method: serde_json::to_value(report.method)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default(),
            process_fidelity: report.process_fidelity,
            average_fidelity: report.average_fidelity,
            std_error: report.std_error,
            ci90_low: report.ci90[0],
            ci90_high: report.ci90[1],
            d: report.d,
            n_operators_sampled: report.n_operators_sampled,
            n_settings: report.n_settings,
            shots_per_setting: report.shots_per_setting,
            eigenstate_sampling: report.eigenstate_sampling,
            seed: report.seed,
        }])?,
    };
    let target = destination(config, output_dir, "certify");
    emit(&body, target.as_deref(), &certify_summary(config, &report))
}

#[derive(Serialize)]
struct TomographyReport {
    d: usize,
    n_records: usize,
    f_tom: f64,
    f_ml_star: f64,
    average_fidelity_tom: f64,
    average_fidelity_ml_star: f64,
    raw_trace: f64,
    raw_min_eigenvalue: f64,
}

pub fn tomography(config: &RunConfig, output_dir: Option<&Path>, records_path: Option<&Path>) -> Result<()> {
    let exp = experiment(config)?;
    let records = collect(&exp, config.readout_mode())?;
    let raw = invert(&records)?;
    let projected = project_physical(&raw)?;
    let ideal = choi(&config.gate.channel());
    let d = raw.d();
    let f_tom = fidelity_from_tomography(&ideal, &raw)?;
    let f_ml_star = fidelity_from_tomography(&ideal, &projected)?;
    let report = TomographyReport {
        d,
        n_records: records.len(),
        f_tom,
        f_ml_star,
        average_fidelity_tom: average_fidelity(f_tom, d),
        average_fidelity_ml_star: average_fidelity(f_ml_star, d),
        raw_trace: raw.trace(),
        raw_min_eigenvalue: eigh(&raw.matrix)?.values.last().copied().unwrap_or(f64::NAN),
    };

    let target = destination(config, output_dir, "tomography");
    let records_target = records_path.map(Path::to_path_buf).or_else(|| {
        target.as_ref().map(|t| t.with_extension("records.csv"))
    });
    if let Some(path) = &records_target {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        let mut file = fs::File::create(path)?;
        write_records_csv(&records, &mut file)?;
        file.flush()?;
    }

    let body = match config.format {
        Format::Json => json_document(json!({ "command": "tomography", "config": config, "report": report })),
        Format::Csv => csv_document(&[&report])?,
    };
    let summary = format!(
        "{} {}: F_tom = {:.6}, F_ML* = {:.6} from {} records",
        config.gate, config.noise, f_tom, f_ml_star, report.n_records
    );
    emit(&body, target.as_deref(), &summary)?;
    if let Some(path) = records_target {
        if target.is_some() {
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

pub fn sweep(config: &RunConfig, output_dir: Option<&Path>, counts: &[usize], trials: usize) -> Result<()> {
    if counts.is_empty() {
        return Err(CliError::Usage("--counts needs at least one value".into()));
    }
    let exp = experiment(config)?;
    let relevant = relevant_for_gate(config.gate)?;
    let rows = subsample_sweep(&exp, &relevant, counts, trials, config.readout_mode(), config.seed)?;
    let body = match config.format {
        Format::Json => json_document(json!({ "command": "sweep", "config": config, "trials": trials, "rows": rows })),
        Format::Csv => {
            #[derive(Serialize)]
            struct Row {
                samples: usize,
                mean_average_fidelity: f64,
                half_width: f64,
                mean_fidelity: f64,
                mean_average_fidelity_without_replacement: f64,
                half_width_without_replacement: f64,
                bootstrap_half_width: f64,
            }
            let table: Vec<Row> = rows
                .iter()
                .map(|r| Row {
                    samples: r.samples,
                    mean_average_fidelity: r.mean_average_fidelity,
                    half_width: r.half_width,
                    mean_fidelity: r.mean_fidelity,
                    mean_average_fidelity_without_replacement: r.mean_average_fidelity_without_replacement,
                    half_width_without_replacement: r.half_width_without_replacement,
                    bootstrap_half_width: r.bootstrap_half_width,
                })
                .collect();
            csv_document(&table)?
        }
    };
    let summary = format!("{} {}: {} sample counts × {trials} trials", config.gate, config.noise, rows.len());
    emit(&body, destination(config, output_dir, "sweep").as_deref(), &summary)
}
