//! Corpus analysis: uncoded vs ILWC-coded bit statistics, cell-state
//! distributions, gains and model outputs per file and in aggregate.
//!
//! Files are read once. Each configuration keeps a histogram of
//! `(pending MLC bit, source byte)` pairs; every per-file figure is derived
//! from those counts, so results do not depend on chunking or thread count.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::codec::{ByteCodeTable, CodecError, SegmentConfig};
use crate::flash_model::{
    mean_threshold_voltage, program_energy, relative_field_change, total_pulses, CellLevel,
    CellStateDistribution, FlashParams, ModelError, StateCounter,
};
use crate::metrics::{coding_gain, BitStats};

pub const REPORT_VERSION: u32 = 1;
pub const DEFAULT_BIN_WIDTH: f64 = 0.005;
const CHUNK: usize = 1 << 20;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("none of the input roots exist")]
    NoRoots,
    #[error("no readable files matched")]
    NoReadableFiles,
    #[error("histogram bin width must be in (0, 1], got {0}")]
    BadBinWidth(f64),
    #[error(transparent)]
    Codec(#[from] CodecError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Pool(String),
}

/// One analysed stream form: the raw bytes or their ILWC encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum Configuration {
    Uncoded,
    Ilwc(SegmentConfig),
}

impl Configuration {
    pub fn overhead(self) -> f64 {
        match self {
            Configuration::Uncoded => 0.0,
            Configuration::Ilwc(cfg) => cfg.overhead(),
        }
    }

    /// Stored bits per source byte.
    pub fn bits_per_byte(self) -> u32 {
        match self {
            Configuration::Uncoded => 8,
            Configuration::Ilwc(cfg) => cfg.coded_bits_per_byte(),
        }
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Configuration::Uncoded => f.write_str("uncoded"),
            Configuration::Ilwc(cfg) => write!(f, "{}", cfg.n()),
        }
    }
}

impl From<Configuration> for String {
    fn from(c: Configuration) -> Self {
        c.to_string()
    }
}

impl TryFrom<String> for Configuration {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        if s == "uncoded" {
            return Ok(Configuration::Uncoded);
        }
        let n: u32 = s.parse().map_err(|_| format!("unknown configuration '{s}'"))?;
        SegmentConfig::for_stream(n)
            .map(Configuration::Ilwc)
            .map_err(|e| e.to_string())
    }
}

/// Per-byte stored bits and the MLC pairing transitions for one configuration.
struct StreamProfile {
    width: u32,
    code: [u32; 256],
    /// Indexed by pending-bit state (0 none, 1 pending 0, 2 pending 1) then byte.
    mlc: Vec<[([u8; 4], u8); 256]>,
}

fn pending_index(p: Option<bool>) -> u8 {
    match p {
        None => 0,
        Some(false) => 1,
        Some(true) => 2,
    }
}

fn pending_from_index(i: u8) -> Option<bool> {
    match i {
        0 => None,
        1 => Some(false),
        _ => Some(true),
    }
}

impl StreamProfile {
    fn build(config: Configuration) -> Self {
        let width = config.bits_per_byte();
        let mut code = [0u32; 256];
        for (b, slot) in code.iter_mut().enumerate() {
            *slot = match config {
                Configuration::Uncoded => b as u32,
                Configuration::Ilwc(cfg) => ByteCodeTable::for_config(cfg)
                    .expect("stream width")
                    .coded(b as u8),
            };
        }
        let mlc = (0..3u8)
            .map(|pending| {
                let mut row = [([0u8; 4], 0u8); 256];
                for (b, slot) in row.iter_mut().enumerate() {
                    let mut counter = StateCounter::new(CellLevel::Mlc);
                    counter.set_pending(pending_from_index(pending));
                    let mut counts = [0u8; 4];
                    for i in (0..width).rev() {
                        if let Some(s) = counter.push((code[b] >> i) & 1 == 1) {
                            counts[s.index()] += 1;
                        }
                    }
                    *slot = (counts, pending_index(counter.pending()));
                }
                row
            })
            .collect();
        Self { width, code, mlc }
    }

    fn get(config: Configuration) -> &'static StreamProfile {
        static PROFILES: [OnceLock<StreamProfile>; 4] =
            [OnceLock::new(), OnceLock::new(), OnceLock::new(), OnceLock::new()];
        let slot = match config {
            Configuration::Uncoded => &PROFILES[0],
            Configuration::Ilwc(cfg) => match cfg.n() {
                2 => &PROFILES[1],
                4 => &PROFILES[2],
                _ => &PROFILES[3],
            },
        };
        slot.get_or_init(|| StreamProfile::build(config))
    }
}

/// Streaming accumulator for one configuration.
struct ConfigAccumulator {
    config: Configuration,
    profile: &'static StreamProfile,
    pairs: Vec<[u64; 256]>,
    pending: u8,
    bytes: u64,
}

impl ConfigAccumulator {
    fn new(config: Configuration) -> Self {
        Self {
            config,
            profile: StreamProfile::get(config),
            pairs: vec![[0u64; 256]; 3],
            pending: 0,
            bytes: 0,
        }
    }

    fn update(&mut self, chunk: &[u8]) {
        let mut pending = self.pending as usize;
        let table = &self.profile.mlc;
        for &b in chunk {
            self.pairs[pending][b as usize] += 1;
            pending = table[pending][b as usize].1 as usize;
        }
        self.pending = pending as u8;
        self.bytes += chunk.len() as u64;
    }

    /// Bit statistics and cell distributions of the stored stream.
    fn finish(&self) -> Option<StreamCounts> {
        if self.bytes == 0 {
            return None;
        }
        let mut ones = 0u64;
        let mut mlc = [0u64; 4];
        for (pending, row) in self.pairs.iter().enumerate() {
            for (b, &count) in row.iter().enumerate() {
                if count == 0 {
                    continue;
                }
                ones += count * u64::from(self.profile.code[b].count_ones());
                let (cells, _) = self.profile.mlc[pending][b];
                for (acc, c) in mlc.iter_mut().zip(cells) {
                    *acc += count * u64::from(c);
                }
            }
        }
        let total_bits = self.bytes * u64::from(self.profile.width);
        let mut mlc_counter = StateCounter::new(CellLevel::Mlc);
        mlc_counter.add_counts(&mlc);
        mlc_counter.set_pending(pending_from_index(self.pending));
        let (mlc, _) = mlc_counter.finish();
        Some(StreamCounts {
            bits: BitStats::from_counts(ones, total_bits).expect("non-empty"),
            slc: CellStateDistribution::from_counts(CellLevel::Slc, &[ones, total_bits - ones]),
            mlc,
        })
    }
}

struct StreamCounts {
    bits: BitStats,
    slc: CellStateDistribution,
    mlc: CellStateDistribution,
}

/// Results of one configuration for one file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigResult {
    pub config: Configuration,
    pub bits: BitStats,
    pub overhead: f64,
    pub coding_gain: f64,
    pub slc: CellStateDistribution,
    pub mlc: CellStateDistribution,
    /// Mean threshold voltage at the report's cell level.
    pub mean_vth: f64,
    /// Relative drop of the intrinsic field versus the uncoded stream.
    pub relative_field_change: Option<f64>,
    pub energy: f64,
    pub pe: Option<f64>,
    pub energy_gain: Option<f64>,
    pub ispp_pulses_total: u64,
}

impl ConfigResult {
    fn distribution(&self, level: CellLevel) -> &CellStateDistribution {
        match level {
            CellLevel::Slc => &self.slc,
            CellLevel::Mlc => &self.mlc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub size_bytes: u64,
    /// Empty for zero-length files.
    pub results: Vec<ConfigResult>,
}

impl FileEntry {
    pub fn result(&self, config: Configuration) -> Option<&ConfigResult> {
        self.results.iter().find(|r| r.config == config)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Skipped {
    pub path: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_width: f64,
    pub bins: Vec<u64>,
}

impl Histogram {
    pub fn new(bin_width: f64) -> Result<Self, CorpusError> {
        if !(bin_width > 0.0 && bin_width <= 1.0) {
            return Err(CorpusError::BadBinWidth(bin_width));
        }
        let n = ((1.0 / bin_width) - 1e-9).ceil().max(1.0) as usize;
        Ok(Self {
            bin_width,
            bins: vec![0; n],
        })
    }

    pub fn add(&mut self, p1: f64) {
        let idx = ((p1 / self.bin_width) as usize).min(self.bins.len() - 1);
        self.bins[idx] += 1;
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }

    pub fn bin_start(&self, i: usize) -> f64 {
        i as f64 * self.bin_width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    /// Files with at least one byte.
    pub files: u64,
    pub ones: u64,
    pub total_bits: u64,
    /// Bit-weighted: total ones over total bits.
    pub p1_weighted: Option<f64>,
    pub p1_per_file_mean: Option<f64>,
    pub coding_gain: Option<f64>,
    pub pe: Option<f64>,
    pub energy_gain: Option<f64>,
    pub mean_vth: Option<f64>,
    pub relative_field_change: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub version: u32,
    pub cell_level: CellLevel,
    pub generated_with_params: FlashParams,
    /// Coded segment widths; the uncoded stream is always analysed too.
    pub configurations: Vec<u32>,
    pub files: Vec<FileEntry>,
    pub skipped: Vec<Skipped>,
    pub aggregates: BTreeMap<Configuration, Aggregate>,
    pub histograms: BTreeMap<Configuration, Histogram>,
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub configs: Vec<SegmentConfig>,
    pub params: FlashParams,
    /// Level used for mean V_th, field change, energy and pulse counts.
    pub cell_level: CellLevel,
    pub bin_width: f64,
    pub recursive: bool,
    /// Lower-case extensions without the dot; empty accepts everything.
    pub extensions: BTreeSet<String>,
    /// Worker threads; 0 picks the available parallelism.
    pub jobs: usize,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            configs: crate::codec::STREAM_WIDTHS
                .iter()
                .map(|&n| SegmentConfig::for_stream(n).expect("stream width"))
                .collect(),
            params: FlashParams::default(),
            cell_level: CellLevel::Mlc,
            bin_width: DEFAULT_BIN_WIDTH,
            recursive: true,
            extensions: BTreeSet::new(),
            jobs: 0,
        }
    }
}

impl AnalysisOptions {
    /// Uncoded first, then coded widths ascending, without duplicates.
    pub fn configurations(&self) -> Vec<Configuration> {
        let mut set: BTreeSet<Configuration> =
            self.configs.iter().map(|&c| Configuration::Ilwc(c)).collect();
        set.insert(Configuration::Uncoded);
        set.into_iter().collect()
    }
}

fn io_err(path: &Path, source: io::Error) -> CorpusError {
    CorpusError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Computes every per-configuration figure from a byte source.
pub fn analyze_reader<R: Read>(
    mut reader: R,
    opts: &AnalysisOptions,
) -> io::Result<Result<Vec<ConfigResult>, ModelError>> {
    let configs = opts.configurations();
    let mut accs: Vec<ConfigAccumulator> = configs.iter().map(|&c| ConfigAccumulator::new(c)).collect();
    let mut buf = vec![0u8; CHUNK];
    loop {
        let n = match reader.read(&mut buf) {
            Ok(0) => break,
            Ok(n) => n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => continue,
            Err(e) => return Err(e),
        };
        for acc in &mut accs {
            acc.update(&buf[..n]);
        }
    }
    let counts: Vec<(Configuration, Option<StreamCounts>)> =
        accs.iter().map(|a| (a.config, a.finish())).collect();
    Ok(build_results(counts, opts))
}

fn build_results(
    counts: Vec<(Configuration, Option<StreamCounts>)>,
    opts: &AnalysisOptions,
) -> Result<Vec<ConfigResult>, ModelError> {
    let p = &opts.params;
    let level = opts.cell_level;
    let mut results: Vec<ConfigResult> = Vec::with_capacity(counts.len());
    for (config, stream) in counts {
        let Some(stream) = stream else {
            return Ok(Vec::new());
        };
        let overhead = config.overhead();
        let dist = match level {
            CellLevel::Slc => &stream.slc,
            CellLevel::Mlc => &stream.mlc,
        };
        let energy = program_energy(dist, dist.total_cells(), p)?;
        results.push(ConfigResult {
            config,
            bits: stream.bits,
            overhead,
            coding_gain: coding_gain(overhead, stream.bits.p1).expect("valid domain"),
            mean_vth: mean_threshold_voltage(dist, p),
            ispp_pulses_total: total_pulses(dist, p)?,
            energy,
            slc: stream.slc,
            mlc: stream.mlc,
            relative_field_change: None,
            pe: None,
            energy_gain: None,
        });
    }
    let base = results
        .iter()
        .find(|r| r.config == Configuration::Uncoded)
        .map(|r| (r.mean_vth, r.energy));
    if let Some((base_vth, base_energy)) = base {
        for r in &mut results {
            r.relative_field_change = relative_field_change(base_vth, r.mean_vth, p).ok();
            if base_energy > 0.0 {
                let pe = 1.0 - r.energy / base_energy;
                r.pe = Some(pe);
                r.energy_gain = Some(pe * r.coding_gain);
            }
        }
    }
    Ok(results)
}

pub fn analyze_file(path: &Path, opts: &AnalysisOptions) -> Result<FileEntry, CorpusError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let size_bytes = file.metadata().map_err(|e| io_err(path, e))?.len();
    let results = analyze_reader(file, opts).map_err(|e| io_err(path, e))??;
    let size_bytes = results
        .first()
        .map(|r| r.bits.total_bits / u64::from(r.config.bits_per_byte()))
        .unwrap_or(size_bytes);
    Ok(FileEntry {
        path: path.display().to_string(),
        size_bytes,
        results,
    })
}

fn extension_matches(path: &Path, filters: &BTreeSet<String>) -> bool {
    if filters.is_empty() {
        return true;
    }
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| filters.contains(&e.to_ascii_lowercase()))
        .unwrap_or(false)
}

/// Expands roots into the candidate file list plus entries that could not be visited.
fn collect_files(
    roots: &[PathBuf],
    opts: &AnalysisOptions,
) -> Result<(BTreeSet<PathBuf>, Vec<Skipped>), CorpusError> {
    let mut files = BTreeSet::new();
    let mut skipped = Vec::new();
    let mut any_root = false;
    for root in roots {
        let meta = match std::fs::symlink_metadata(root) {
            Ok(m) => m,
            Err(e) => {
                skipped.push(Skipped {
                    path: root.display().to_string(),
                    reason: e.to_string(),
                });
                continue;
            }
        };
        any_root = true;
        if !meta.is_dir() && !std::fs::metadata(root).map(|m| m.is_dir()).unwrap_or(false) {
            files.insert(root.clone());
            continue;
        }
        let mut walk = WalkDir::new(root).follow_links(false).sort_by_file_name();
        if !opts.recursive {
            walk = walk.max_depth(1);
        }
        for entry in walk {
            match entry {
                Ok(entry) => {
                    let ft = entry.file_type();
                    if ft.is_dir() {
                        continue;
                    }
                    if !extension_matches(entry.path(), &opts.extensions) {
                        continue;
                    }
                    if ft.is_symlink() {
                        skipped.push(Skipped {
                            path: entry.path().display().to_string(),
                            reason: "symbolic link not followed".into(),
                        });
                    } else if ft.is_file() {
                        files.insert(entry.into_path());
                    } else {
                        skipped.push(Skipped {
                            path: entry.path().display().to_string(),
                            reason: "not a regular file".into(),
                        });
                    }
                }
                Err(e) => skipped.push(Skipped {
                    path: e
                        .path()
                        .map(|p| p.display().to_string())
                        .unwrap_or_else(|| root.display().to_string()),
                    reason: e.to_string(),
                }),
            }
        }
    }
    if !any_root {
        return Err(CorpusError::NoRoots);
    }
    Ok((files, skipped))
}

pub fn analyze_corpus(roots: &[PathBuf], opts: &AnalysisOptions) -> Result<CorpusReport, CorpusError> {
    // Reject a bad bin width before doing any I/O.
    Histogram::new(opts.bin_width)?;
    let (files, mut skipped) = collect_files(roots, opts)?;
    let files: Vec<PathBuf> = files.into_iter().collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| CorpusError::Pool(e.to_string()))?;
    let outcomes: Vec<Result<FileEntry, CorpusError>> =
        pool.install(|| files.par_iter().map(|f| analyze_file(f, opts)).collect());

    let mut entries = Vec::new();
    for (path, outcome) in files.iter().zip(outcomes) {
        match outcome {
            Ok(entry) => entries.push(entry),
            Err(CorpusError::Io { source, .. }) => skipped.push(Skipped {
                path: path.display().to_string(),
                reason: source.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    if entries.is_empty() {
        return Err(CorpusError::NoReadableFiles);
    }
    build_report(entries, skipped, opts)
}

/// Assembles a report from finished entries; ordering is canonicalized here.
pub fn build_report(
    mut entries: Vec<FileEntry>,
    mut skipped: Vec<Skipped>,
    opts: &AnalysisOptions,
) -> Result<CorpusReport, CorpusError> {
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    skipped.sort_by(|a, b| a.path.cmp(&b.path).then_with(|| a.reason.cmp(&b.reason)));
    let configs = opts.configurations();
    let p = &opts.params;
    let level = opts.cell_level;

    let mut histograms = BTreeMap::new();
    let mut aggregates = BTreeMap::new();
    for &config in &configs {
        let mut hist = Histogram::new(opts.bin_width)?;
        let mut dist = CellStateDistribution::empty(level);
        let (mut files, mut ones, mut total_bits, mut energy) = (0u64, 0u64, 0u64, 0.0f64);
        let mut p1_sum = 0.0;
        for r in entries.iter().filter_map(|e| e.result(config)) {
            hist.add(r.bits.p1);
            files += 1;
            ones += r.bits.ones;
            total_bits += r.bits.total_bits;
            p1_sum += r.bits.p1;
            energy += r.energy;
            dist.add(r.distribution(level));
        }
        histograms.insert(config, hist);
        let p1_weighted = (total_bits > 0).then(|| ones as f64 / total_bits as f64);
        aggregates.insert(
            config,
            (
                Aggregate {
                    files,
                    ones,
                    total_bits,
                    p1_weighted,
                    p1_per_file_mean: (files > 0).then(|| p1_sum / files as f64),
                    coding_gain: p1_weighted.map(|v| (1.0 - config.overhead()) * v),
                    pe: None,
                    energy_gain: None,
                    mean_vth: (files > 0).then(|| mean_threshold_voltage(&dist, p)),
                    relative_field_change: None,
                },
                energy,
            ),
        );
    }
    let base = aggregates
        .get(&Configuration::Uncoded)
        .map(|(a, e)| (a.mean_vth, *e));
    let mut out = BTreeMap::new();
    for (config, (mut agg, energy)) in aggregates {
        if let Some((base_vth, base_energy)) = base {
            if let (Some(bv), Some(v)) = (base_vth, agg.mean_vth) {
                agg.relative_field_change = relative_field_change(bv, v, p).ok();
            }
            if base_energy > 0.0 && agg.files > 0 {
                let pe = 1.0 - energy / base_energy;
                agg.pe = Some(pe);
                agg.energy_gain = agg.coding_gain.map(|cg| pe * cg);
            }
        }
        out.insert(config, agg);
    }

    Ok(CorpusReport {
        version: REPORT_VERSION,
        cell_level: level,
        generated_with_params: *p,
        configurations: opts.configs.iter().map(|c| c.n()).collect::<BTreeSet<_>>().into_iter().collect(),
        files: entries,
        skipped,
        aggregates: out,
        histograms,
    })
}

impl CorpusReport {
    /// A report with no files, for the given options.
    pub fn empty(opts: &AnalysisOptions) -> Result<Self, CorpusError> {
        build_report(Vec::new(), Vec::new(), opts)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(format!("unknown report format '{other}'")),
        }
    }
}

pub const CSV_HEADER: [&str; 16] = [
    "path",
    "size_bytes",
    "config",
    "p1",
    "overhead",
    "coding_gain",
    "p_s11",
    "p_s10",
    "p_s01",
    "p_s00",
    "mean_vth",
    "rel_field_change",
    "energy",
    "pe",
    "energy_gain",
    "ispp_pulses_total",
];

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes the report. CSV carries one row per (file, configuration); histograms
/// go through [`emit_histogram_csv`].
pub fn emit_report<W: Write>(report: &CorpusReport, format: ReportFormat, mut sink: W) -> Result<(), CorpusError> {
    match format {
        ReportFormat::Json => {
            serde_json::to_writer_pretty(&mut sink, report)?;
            sink.write_all(b"\n").map_err(|e| io_err(Path::new("<report>"), e))?;
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(&mut sink);
            w.write_record(CSV_HEADER)?;
            let mut configs: Vec<Configuration> = vec![Configuration::Uncoded];
            configs.extend(report.configurations.iter().filter_map(|&n| {
                SegmentConfig::for_stream(n).ok().map(Configuration::Ilwc)
            }));
            for entry in &report.files {
                for &config in &configs {
                    let mut row = vec![entry.path.clone(), entry.size_bytes.to_string(), config.to_string()];
                    match entry.result(config) {
                        Some(r) => {
                            let probs = r.mlc.probabilities();
                            row.extend([r.bits.p1.to_string(), r.overhead.to_string(), r.coding_gain.to_string()]);
                            row.extend(probs.iter().map(|v| v.to_string()));
                            row.extend([
                                r.mean_vth.to_string(),
                                opt(r.relative_field_change),
                                r.energy.to_string(),
                                opt(r.pe),
                                opt(r.energy_gain),
                                r.ispp_pulses_total.to_string(),
                            ]);
                        }
                        None => row.extend(std::iter::repeat_n(String::new(), CSV_HEADER.len() - 3)),
                    }
                    w.write_record(&row)?;
                }
            }
            w.flush().map_err(|e| io_err(Path::new("<report>"), e))?;
        }
    }
    sink.flush().map_err(|e| io_err(Path::new("<report>"), e))?;
    Ok(())
}

/// `bin_start,count` rows for one configuration's histogram.
pub fn emit_histogram_csv<W: Write>(hist: &Histogram, sink: W) -> Result<(), CorpusError> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["bin_start", "count"])?;
    for (i, count) in hist.bins.iter().enumerate() {
        w.write_record([format!("{:.6}", hist.bin_start(i)), count.to_string()])?;
    }
    w.flush().map_err(|e| io_err(Path::new("<histogram>"), e))?;
    Ok(())
}
