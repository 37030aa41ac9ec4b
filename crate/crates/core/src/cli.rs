//! Command-line front end: `encode`, `decode`, `analyze` and `model`.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::codec::{decode_stream, encode_stream, CodecError, DecodeMode, EncodedContainer, SegmentConfig};
use crate::corpus::{analyze_corpus, emit_histogram_csv, emit_report, AnalysisOptions, CorpusError, ReportFormat};
use crate::flash_model::{
    cell_error_rate, coupling_shift, intrinsic_field, ispp_steps, program_time, read_disturb_field,
    relative_field_change, worst_case_coupling, worst_case_coupling_reduction, CellLevel, ModelError, ParamFile,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_INTEGRITY: i32 = 3;
pub const EXIT_PARAMS: i32 = 4;

/// Environment variable naming a default parameter file.
pub const PARAMS_ENV: &str = "ILWC_PARAMS";

#[derive(Debug, Parser)]
#[command(name = "ilwc", version, about = "Inverted limited weight coding for NAND flash data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode a file into an ILWC container.
    Encode {
        #[arg(long, value_parser = parse_segment)]
        segment: SegmentConfig,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Decode an ILWC container.
    Decode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Decode past weight-law violations and record them.
        #[arg(long)]
        lenient: bool,
        /// Error-record sidecar (default: <output>.errors.json).
        #[arg(long, requires = "lenient")]
        errors: Option<PathBuf>,
    },
    /// Measure bit statistics and model outputs over a file corpus.
    Analyze(AnalyzeArgs),
    /// Evaluate flash-model formulas for given scalars.
    Model(ModelArgs),
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    #[arg(long, value_delimiter = ',', value_parser = parse_segment, default_value = "2,4,8")]
    segment: Vec<SegmentConfig>,
    #[arg(long, default_value = "json")]
    format: ReportFormat,
    /// Report path, or `-` for standard output.
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    recursive: bool,
    /// Extension filter, e.g. `pdf,mp3`.
    #[arg(long, value_delimiter = ',')]
    ext: Vec<String>,
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value = "mlc")]
    cell_level: CellLevel,
    #[arg(long, default_value_t = crate::corpus::DEFAULT_BIN_WIDTH)]
    bin_width: f64,
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long)]
    params: Option<PathBuf>,
    /// Threshold shift to program, in volts.
    #[arg(long, allow_negative_numbers = true)]
    ispp_dv: Option<f64>,
    #[arg(long, requires = "field_after", allow_negative_numbers = true)]
    field_before: Option<f64>,
    #[arg(long, requires = "field_before", allow_negative_numbers = true)]
    field_after: Option<f64>,
    #[arg(long, requires = "worst_case_dv_after")]
    worst_case_dv_before: Option<f64>,
    #[arg(long, requires = "worst_case_dv_before")]
    worst_case_dv_after: Option<f64>,
    /// Wordline neighbour and two bitline neighbour shifts.
    #[arg(long, value_delimiter = ',', num_args = 3, allow_negative_numbers = true)]
    coupling: Option<Vec<f64>>,
    #[arg(long, allow_negative_numbers = true)]
    read_disturb_vth: Option<f64>,
    /// Mean threshold voltage for the cell error model.
    #[arg(long, allow_negative_numbers = true)]
    cer_vth: Option<f64>,
}

fn parse_segment(s: &str) -> Result<SegmentConfig, String> {
    let n: u32 = s.trim().parse().map_err(|_| format!("'{s}' is not a segment width"))?;
    SegmentConfig::for_stream(n).map_err(|e| e.to_string())
}

struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::new(EXIT_IO, format!("{}: {e}", path.display()))
}

/// Runs the CLI with the process's standard streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    return EXIT_OK;
                }
                _ => EXIT_USAGE,
            };
            let _ = write!(err, "{}", e.render());
            return code;
        }
    };
    let result = match cli.command {
        Command::Encode {
            segment,
            input,
            output,
        } => cmd_encode(segment, &input, &output),
        Command::Decode {
            input,
            output,
            lenient,
            errors,
        } => cmd_decode(&input, &output, lenient, errors, err),
        Command::Analyze(a) => cmd_analyze(a, out),
        Command::Model(m) => cmd_model(m, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn same_file(a: &Path, b: &Path) -> bool {
    match (fs::canonicalize(a), fs::canonicalize(b)) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

fn refuse_overwrite(input: &Path, output: &Path) -> Result<(), Failure> {
    if same_file(input, output) {
        return Err(Failure::new(
            EXIT_USAGE,
            format!("refusing to overwrite input {}", input.display()),
        ));
    }
    Ok(())
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> Result<(), Failure> {
    let file = File::create(path).map_err(|e| io_failure(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| io_failure(path, e))
}

fn cmd_encode(segment: SegmentConfig, input: &Path, output: &Path) -> Result<(), Failure> {
    refuse_overwrite(input, output)?;
    let data = fs::read(input).map_err(|e| io_failure(input, e))?;
    let container = encode_stream(&data, segment).map_err(|e| Failure::new(EXIT_USAGE, e.to_string()))?;
    write_file(output, |w| match container.write_to(w) {
        Ok(()) => Ok(()),
        Err(CodecError::Io(e)) => Err(e),
        Err(e) => Err(io::Error::other(e.to_string())),
    })
}

fn cmd_decode(
    input: &Path,
    output: &Path,
    lenient: bool,
    errors: Option<PathBuf>,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    refuse_overwrite(input, output)?;
    let bytes = fs::read(input).map_err(|e| io_failure(input, e))?;
    let container = EncodedContainer::from_bytes(&bytes)
        .map_err(|e| Failure::new(EXIT_IO, format!("{}: malformed container: {e}", input.display())))?;
    let mode = if lenient { DecodeMode::Lenient } else { DecodeMode::Strict };
    let decoded = match decode_stream(&container, mode) {
        Ok(d) => d,
        Err(CodecError::Integrity {
            codeword_index,
            raw_bits,
            weight,
        }) => {
            return Err(Failure::new(
                EXIT_INTEGRITY,
                format!(
                    "integrity failure at codeword index {codeword_index}: raw bits {raw_bits:0width$b} have weight {weight}",
                    width = container.config().map(|c| c.k() as usize).unwrap_or(0)
                ),
            ))
        }
        Err(e) => return Err(Failure::new(EXIT_IO, format!("{}: {e}", input.display()))),
    };
    write_file(output, |w| w.write_all(&decoded.bytes))?;
    if lenient {
        let sidecar = errors.unwrap_or_else(|| {
            let mut p = output.as_os_str().to_owned();
            p.push(".errors.json");
            PathBuf::from(p)
        });
        refuse_overwrite(input, &sidecar)?;
        write_file(&sidecar, |w| {
            serde_json::to_writer_pretty(&mut *w, &decoded.errors)?;
            w.write_all(b"\n")
        })?;
        if !decoded.errors.is_empty() {
            let _ = writeln!(
                err,
                "warning: {} codeword(s) violated the weight law; see {}",
                decoded.errors.len(),
                sidecar.display()
            );
        }
    }
    Ok(())
}

fn load_params(explicit: Option<&Path>) -> Result<ParamFile, Failure> {
    let from_env = std::env::var_os(PARAMS_ENV).map(PathBuf::from);
    let Some(path) = explicit.map(Path::to_path_buf).or(from_env) else {
        return Ok(ParamFile::default());
    };
    let text = fs::read_to_string(&path).map_err(|e| io_failure(&path, e))?;
    ParamFile::parse(&text).map_err(|e| Failure::new(EXIT_PARAMS, format!("{}: {e}", path.display())))
}

fn cmd_analyze(a: AnalyzeArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let params = load_params(a.params.as_deref())?;
    let to_stdout = a.output.as_os_str() == "-";
    if !to_stdout {
        if let Some(input) = a.inputs.iter().find(|i| same_file(i, &a.output)) {
            return Err(Failure::new(
                EXIT_USAGE,
                format!("refusing to overwrite input {}", input.display()),
            ));
        }
    }
    let opts = AnalysisOptions {
        configs: a.segment,
        params: params.params,
        cell_level: a.cell_level,
        bin_width: a.bin_width,
        recursive: a.recursive,
        extensions: a
            .ext
            .iter()
            .map(|e| e.trim().trim_start_matches('.').to_ascii_lowercase())
            .filter(|e| !e.is_empty())
            .collect(),
        jobs: a.jobs.unwrap_or(0),
    };
    let report = analyze_corpus(&a.inputs, &opts).map_err(|e| match e {
        CorpusError::Io { .. } | CorpusError::NoRoots | CorpusError::NoReadableFiles => {
            Failure::new(EXIT_IO, e.to_string())
        }
        other => Failure::new(EXIT_USAGE, other.to_string()),
    })?;
    let emit_err = |e: CorpusError| Failure::new(EXIT_IO, e.to_string());
    if to_stdout {
        emit_report(&report, a.format, &mut *out).map_err(emit_err)?;
        return Ok(());
    }
    let file = File::create(&a.output).map_err(|e| io_failure(&a.output, e))?;
    emit_report(&report, a.format, BufWriter::new(file)).map_err(emit_err)?;
    if a.format == ReportFormat::Csv {
        for (config, hist) in &report.histograms {
            let mut p = a.output.as_os_str().to_owned();
            p.push(format!(".hist-{config}.csv"));
            let path = PathBuf::from(p);
            let file = File::create(&path).map_err(|e| io_failure(&path, e))?;
            emit_histogram_csv(hist, BufWriter::new(file)).map_err(emit_err)?;
        }
    }
    Ok(())
}

fn model_failure(e: ModelError) -> Failure {
    Failure::new(EXIT_USAGE, e.to_string())
}

fn cmd_model(m: ModelArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let file = load_params(m.params.as_deref())?;
    let p = &file.params;
    let mut lines: Vec<(String, String)> = Vec::new();
    let mut push = |k: &str, v: String| lines.push((k.to_string(), v));

    if let Some(dv) = m.ispp_dv {
        let steps = ispp_steps(dv, p).map_err(model_failure)?;
        push("ispp_dv", dv.to_string());
        push("n_steps", steps.to_string());
        push("program_time", program_time(steps, p).to_string());
    }
    if let (Some(before), Some(after)) = (m.field_before, m.field_after) {
        push("intrinsic_field_before", intrinsic_field(before, p).map_err(model_failure)?.to_string());
        push("intrinsic_field_after", intrinsic_field(after, p).map_err(model_failure)?.to_string());
        push(
            "relative_field_change",
            relative_field_change(before, after, p).map_err(model_failure)?.to_string(),
        );
    }
    if let (Some(before), Some(after)) = (m.worst_case_dv_before, m.worst_case_dv_after) {
        push("coupling_before", worst_case_coupling(before, p).map_err(model_failure)?.to_string());
        push("coupling_after", worst_case_coupling(after, p).map_err(model_failure)?.to_string());
        push(
            "coupling_reduction",
            worst_case_coupling_reduction(before, after, p).map_err(model_failure)?.to_string(),
        );
        let steps_before = ispp_steps(before, p).map_err(model_failure)?;
        let steps_after = ispp_steps(after, p).map_err(model_failure)?;
        push("n_steps_before", steps_before.to_string());
        push("n_steps_after", steps_after.to_string());
        if steps_before > 0 {
            let gain = (steps_before as f64 - steps_after as f64) / steps_before as f64;
            push("ispp_reduction", gain.to_string());
        }
    }
    if let Some(c) = &m.coupling {
        push("coupling_shift", coupling_shift(c[0], c[1], c[2], p).to_string());
    }
    if let Some(v) = m.read_disturb_vth {
        push("read_disturb_field", read_disturb_field(v, p).map_err(model_failure)?.to_string());
    }
    if let Some(v) = m.cer_vth {
        let missing = file.missing_error_model_keys();
        if !missing.is_empty() {
            return Err(Failure::new(
                EXIT_PARAMS,
                format!(
                    "cell error model needs explicit coefficients in the parameter file (missing: {})",
                    missing.join(", ")
                ),
            ));
        }
        push("cell_error_rate", cell_error_rate(v, p).map_err(model_failure)?.to_string());
    }
    if lines.is_empty() {
        return Err(Failure::new(EXIT_USAGE, "model: no quantity requested"));
    }
    for (k, v) in lines {
        writeln!(out, "{k}={v}").map_err(|e| io_failure(Path::new("<stdout>"), e))?;
    }
    Ok(())
}
