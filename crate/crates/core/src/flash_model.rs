//! Analytical NAND flash cell model.
//!
//! Voltages are threshold voltages relative to the erased baseline, so the
//! erased state (`S11` for MLC, `Erased` for SLC) sits at 0 V. Field values
//! are in normalized units: only their ratios are meaningful with the default
//! `cap_ratio`, `t_ox` and `v_thi`.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use bitvec::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("bit sequence is empty")]
    EmptyInput,
    #[error("oxide thickness must be positive, got {0}")]
    NonPositiveOxide(f64),
    #[error("relative change undefined: reference voltage equals v_thi ({0} V)")]
    ZeroReference(f64),
    #[error("cell error model needs a positive threshold voltage, got {0}")]
    NonPositiveVth(f64),
    #[error("ISPP needs positive delta_v_pp and beta_ispp (got {delta_v_pp}, {beta_ispp})")]
    BadIspp { delta_v_pp: f64, beta_ispp: f64 },
    #[error("negative voltage shift {0}")]
    NegativeShift(f64),
    #[error("cell count must be positive")]
    NoCells,
    #[error("uncoded program energy is zero")]
    ZeroBaselineEnergy,
    #[error("distribution levels differ")]
    LevelMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellLevel {
    Slc,
    Mlc,
}

impl CellLevel {
    pub fn states(self) -> &'static [CellState] {
        match self {
            CellLevel::Slc => &[CellState::Erased, CellState::Programmed],
            CellLevel::Mlc => &[CellState::S11, CellState::S10, CellState::S01, CellState::S00],
        }
    }
}

impl FromStr for CellLevel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "slc" => Ok(CellLevel::Slc),
            "mlc" => Ok(CellLevel::Mlc),
            other => Err(format!("unknown cell level '{other}'")),
        }
    }
}

/// Stored state of one cell. MLC states are named by their (high, low) bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CellState {
    Erased,
    Programmed,
    S11,
    S10,
    S01,
    S00,
}

impl CellState {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            CellState::Erased
        } else {
            CellState::Programmed
        }
    }

    pub fn from_pair(hi: bool, lo: bool) -> Self {
        match (hi, lo) {
            (true, true) => CellState::S11,
            (true, false) => CellState::S10,
            (false, true) => CellState::S01,
            (false, false) => CellState::S00,
        }
    }

    /// Position of the state within its level's [`CellLevel::states`].
    pub fn index(self) -> usize {
        match self {
            CellState::Erased | CellState::S11 => 0,
            CellState::Programmed | CellState::S10 => 1,
            CellState::S01 => 2,
            CellState::S00 => 3,
        }
    }

    pub fn level(self) -> CellLevel {
        match self {
            CellState::Erased | CellState::Programmed => CellLevel::Slc,
            _ => CellLevel::Mlc,
        }
    }
}

/// Cell counts per state for one level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellStateDistribution {
    pub level: CellLevel,
    /// Indexed like [`CellLevel::states`].
    pub counts: Vec<u64>,
    /// An MLC stream of odd length had its final cell padded with a `1` bit.
    pub padded_trailing_bit: bool,
}

impl CellStateDistribution {
    pub fn empty(level: CellLevel) -> Self {
        Self {
            level,
            counts: vec![0; level.states().len()],
            padded_trailing_bit: false,
        }
    }

    pub fn from_counts(level: CellLevel, counts: &[u64]) -> Self {
        assert_eq!(counts.len(), level.states().len(), "state count mismatch");
        Self {
            level,
            counts: counts.to_vec(),
            padded_trailing_bit: false,
        }
    }

    pub fn total_cells(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn count(&self, state: CellState) -> u64 {
        assert_eq!(state.level(), self.level);
        self.counts[state.index()]
    }

    pub fn probability(&self, state: CellState) -> f64 {
        let total = self.total_cells();
        if total == 0 {
            return 0.0;
        }
        self.count(state) as f64 / total as f64
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.level
            .states()
            .iter()
            .map(|&s| self.probability(s))
            .collect()
    }

    pub fn add(&mut self, other: &CellStateDistribution) {
        assert_eq!(self.level, other.level);
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.padded_trailing_bit |= other.padded_trailing_bit;
    }
}

/// Incremental bit-to-cell mapper; MLC pairs are formed over the whole stream.
#[derive(Debug, Clone)]
pub struct StateCounter {
    dist: CellStateDistribution,
    pending: Option<bool>,
}

impl StateCounter {
    pub fn new(level: CellLevel) -> Self {
        Self {
            dist: CellStateDistribution::empty(level),
            pending: None,
        }
    }

    /// Feeds one bit; returns the state of a cell completed by it.
    #[inline]
    pub fn push(&mut self, bit: bool) -> Option<CellState> {
        let state = match self.dist.level {
            CellLevel::Slc => CellState::from_bit(bit),
            CellLevel::Mlc => match self.pending.take() {
                None => {
                    self.pending = Some(bit);
                    return None;
                }
                Some(hi) => CellState::from_pair(hi, bit),
            },
        };
        self.dist.counts[state.index()] += 1;
        Some(state)
    }

    /// The high bit of an unfinished MLC pair.
    pub fn pending(&self) -> Option<bool> {
        self.pending
    }

    pub fn add_counts(&mut self, counts: &[u64]) {
        for (a, b) in self.dist.counts.iter_mut().zip(counts) {
            *a += b;
        }
    }

    pub fn set_pending(&mut self, pending: Option<bool>) {
        self.pending = pending;
    }

    /// Pads a trailing odd bit with `1` and returns the counts.
    pub fn finish(mut self) -> (CellStateDistribution, Option<CellState>) {
        let mut last = None;
        if self.pending.is_some() {
            last = self.push(true);
            self.dist.padded_trailing_bit = true;
        }
        (self.dist, last)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateMapping {
    pub distribution: CellStateDistribution,
    pub states: Vec<CellState>,
}

pub fn map_bits_to_states(
    bits: &BitSlice<u8, Msb0>,
    level: CellLevel,
) -> Result<StateMapping, ModelError> {
    if bits.is_empty() {
        return Err(ModelError::EmptyInput);
    }
    let mut counter = StateCounter::new(level);
    let mut states = Vec::with_capacity(match level {
        CellLevel::Slc => bits.len(),
        CellLevel::Mlc => bits.len().div_ceil(2),
    });
    for bit in bits.iter().by_vals() {
        states.extend(counter.push(bit));
    }
    let (distribution, last) = counter.finish();
    states.extend(last);
    Ok(StateMapping {
        distribution,
        states,
    })
}

/// Every tunable of the cell model. Field names double as parameter-file keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlashParams {
    pub mu_s11: f64,
    pub mu_s10: f64,
    pub mu_s01: f64,
    pub mu_s00: f64,
    pub slc_programmed_dv: f64,
    pub v_thi: f64,
    /// C_ono / (C_ono + C_ox), with any other constant factor folded in.
    pub cap_ratio: f64,
    pub t_ox: f64,
    pub gamma_fg1: f64,
    pub gamma_fg2: f64,
    /// Gate voltage on deselected wordlines during reads.
    pub v_pass: f64,
    pub delta_v_pp: f64,
    pub beta_ispp: f64,
    pub t_step: f64,
    pub alpha1: f64,
    pub beta1: f64,
    pub alpha2: f64,
    pub beta2: f64,
    /// Program/erase cycles.
    pub n_pe: f64,
    pub e_pulse: f64,
    pub e_cell_base: f64,
}

/// Placeholder cell-error coefficients. Real devices need measured values.
pub const PLACEHOLDER_ERROR_MODEL: [f64; 4] = [0.1, 1.0, 1.0e-7, 0.0];

/// Keys that must be set explicitly before the cell error model is evaluated from the CLI.
pub const ERROR_MODEL_KEYS: [&str; 4] = ["alpha1", "beta1", "alpha2", "beta2"];

impl Default for FlashParams {
    fn default() -> Self {
        let [alpha1, beta1, alpha2, beta2] = PLACEHOLDER_ERROR_MODEL;
        Self {
            mu_s11: 0.0,
            mu_s10: 1.1,
            mu_s01: 2.25,
            mu_s00: 3.5,
            slc_programmed_dv: 2.0,
            v_thi: 0.0,
            cap_ratio: 1.0,
            t_ox: 1.0,
            gamma_fg1: 0.1,
            gamma_fg2: 0.05,
            v_pass: 5.0,
            delta_v_pp: 0.2,
            beta_ispp: 1.14,
            t_step: 1.0e-5,
            alpha1,
            beta1,
            alpha2,
            beta2,
            n_pe: 13.35e5,
            e_pulse: 1.0,
            e_cell_base: 0.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("line {line}: expected 'key = value'")]
    Syntax { line: usize },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key '{key}' given twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: '{value}' is not a number")]
    BadValue { line: usize, value: String },
    #[error("invalid parameter {key} = {value}: {reason}")]
    Invalid {
        key: &'static str,
        value: f64,
        reason: &'static str,
    },
}

impl FlashParams {
    pub const KEYS: [&'static str; 21] = [
        "mu_s11",
        "mu_s10",
        "mu_s01",
        "mu_s00",
        "slc_programmed_dv",
        "v_thi",
        "cap_ratio",
        "t_ox",
        "gamma_fg1",
        "gamma_fg2",
        "v_pass",
        "delta_v_pp",
        "beta_ispp",
        "t_step",
        "alpha1",
        "beta1",
        "alpha2",
        "beta2",
        "n_pe",
        "e_pulse",
        "e_cell_base",
    ];

    fn field_mut(&mut self, key: &str) -> Option<&mut f64> {
        Some(match key {
            "mu_s11" => &mut self.mu_s11,
            "mu_s10" => &mut self.mu_s10,
            "mu_s01" => &mut self.mu_s01,
            "mu_s00" => &mut self.mu_s00,
            "slc_programmed_dv" => &mut self.slc_programmed_dv,
            "v_thi" => &mut self.v_thi,
            "cap_ratio" => &mut self.cap_ratio,
            "t_ox" => &mut self.t_ox,
            "gamma_fg1" => &mut self.gamma_fg1,
            "gamma_fg2" => &mut self.gamma_fg2,
            "v_pass" => &mut self.v_pass,
            "delta_v_pp" => &mut self.delta_v_pp,
            "beta_ispp" => &mut self.beta_ispp,
            "t_step" => &mut self.t_step,
            "alpha1" => &mut self.alpha1,
            "beta1" => &mut self.beta1,
            "alpha2" => &mut self.alpha2,
            "beta2" => &mut self.beta2,
            "n_pe" => &mut self.n_pe,
            "e_pulse" => &mut self.e_pulse,
            "e_cell_base" => &mut self.e_cell_base,
            _ => return None,
        })
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        let mut copy = *self;
        copy.field_mut(key).map(|v| *v)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        for key in Self::KEYS {
            let v = self.get(key).expect("known key");
            if !v.is_finite() {
                return Err(ParamError::Invalid {
                    key,
                    value: v,
                    reason: "must be finite",
                });
            }
        }
        let checks: [(&'static str, f64, bool, &'static str); 10] = [
            ("delta_v_pp", self.delta_v_pp, self.delta_v_pp > 0.0, "must be > 0"),
            ("beta_ispp", self.beta_ispp, self.beta_ispp > 0.0, "must be > 0"),
            (
                "cap_ratio",
                self.cap_ratio,
                self.cap_ratio > 0.0 && self.cap_ratio <= 1.0,
                "must be in (0, 1]",
            ),
            ("t_ox", self.t_ox, self.t_ox > 0.0, "must be > 0"),
            ("gamma_fg1", self.gamma_fg1, self.gamma_fg1 >= 0.0, "must be >= 0"),
            ("gamma_fg2", self.gamma_fg2, self.gamma_fg2 >= 0.0, "must be >= 0"),
            ("n_pe", self.n_pe, self.n_pe >= 0.0, "must be >= 0"),
            ("e_pulse", self.e_pulse, self.e_pulse >= 0.0, "must be >= 0"),
            ("e_cell_base", self.e_cell_base, self.e_cell_base >= 0.0, "must be >= 0"),
            ("t_step", self.t_step, self.t_step >= 0.0, "must be >= 0"),
        ];
        for (key, value, ok, reason) in checks {
            if !ok {
                return Err(ParamError::Invalid { key, value, reason });
            }
        }
        Ok(())
    }

    /// Threshold voltage of a state relative to the erased baseline.
    pub fn state_voltage(&self, state: CellState) -> f64 {
        match state {
            CellState::Erased => 0.0,
            CellState::Programmed => self.slc_programmed_dv,
            CellState::S11 => self.mu_s11,
            CellState::S10 => self.mu_s10,
            CellState::S01 => self.mu_s01,
            CellState::S00 => self.mu_s00,
        }
    }
}

/// Parsed parameter file: values plus the keys that were set explicitly.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamFile {
    pub params: FlashParams,
    pub explicit: BTreeSet<String>,
}

impl ParamFile {
    /// Parses flat `key = value` text. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ParamError> {
        let mut params = FlashParams::default();
        let mut explicit = BTreeSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ParamError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            let slot = params.field_mut(key).ok_or_else(|| ParamError::UnknownKey {
                line,
                key: key.to_string(),
            })?;
            *slot = value.parse().map_err(|_| ParamError::BadValue {
                line,
                value: value.to_string(),
            })?;
            if !explicit.insert(key.to_string()) {
                return Err(ParamError::DuplicateKey {
                    line,
                    key: key.to_string(),
                });
            }
        }
        params.validate()?;
        Ok(Self { params, explicit })
    }

    pub fn missing_error_model_keys(&self) -> Vec<&'static str> {
        ERROR_MODEL_KEYS
            .into_iter()
            .filter(|k| !self.explicit.contains(*k))
            .collect()
    }
}

impl fmt::Display for FlashParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for key in Self::KEYS {
            writeln!(f, "{key} = {}", self.get(key).expect("known key"))?;
        }
        Ok(())
    }
}

/// Probability-weighted mean threshold voltage.
pub fn mean_threshold_voltage(dist: &CellStateDistribution, p: &FlashParams) -> f64 {
    dist.level
        .states()
        .iter()
        .map(|&s| dist.probability(s) * p.state_voltage(s))
        .sum()
}

fn check_oxide(p: &FlashParams) -> Result<(), ModelError> {
    if p.t_ox <= 0.0 {
        return Err(ModelError::NonPositiveOxide(p.t_ox));
    }
    Ok(())
}

/// Oxide field from stored charge: `cap_ratio * (v_th - v_thi) / t_ox`.
pub fn intrinsic_field(v_th: f64, p: &FlashParams) -> Result<f64, ModelError> {
    check_oxide(p)?;
    Ok(p.cap_ratio * (v_th - p.v_thi) / p.t_ox)
}

/// Fractional drop of the intrinsic field going from `v_before` to `v_after`.
pub fn relative_field_change(v_before: f64, v_after: f64, p: &FlashParams) -> Result<f64, ModelError> {
    let reference = v_before - p.v_thi;
    if reference == 0.0 {
        return Err(ModelError::ZeroReference(v_before));
    }
    Ok((v_before - v_after) / reference)
}

/// Threshold shift coupled into a cell from its wordline and bitline neighbours.
pub fn coupling_shift(
    dv_wordline_neighbor: f64,
    dv_bitline_a: f64,
    dv_bitline_b: f64,
    p: &FlashParams,
) -> f64 {
    p.gamma_fg1 * dv_wordline_neighbor + p.gamma_fg2 * (dv_bitline_a + dv_bitline_b)
}

/// Coupling shift when all three neighbours move by `dv_max`.
pub fn worst_case_coupling(dv_max: f64, p: &FlashParams) -> Result<f64, ModelError> {
    if dv_max < 0.0 {
        return Err(ModelError::NegativeShift(dv_max));
    }
    Ok((p.gamma_fg1 + 2.0 * p.gamma_fg2) * dv_max)
}

/// Fractional reduction of the worst-case coupling shift between two maximum swings.
pub fn worst_case_coupling_reduction(
    dv_before: f64,
    dv_after: f64,
    p: &FlashParams,
) -> Result<f64, ModelError> {
    let before = worst_case_coupling(dv_before, p)?;
    let after = worst_case_coupling(dv_after, p)?;
    if before == 0.0 {
        return Err(ModelError::ZeroReference(dv_before));
    }
    Ok((before - after) / before)
}

/// Read-disturb field under `v_pass`: `cap_ratio * ((v_pass - v_thi) - v_th) / t_ox`.
pub fn read_disturb_field(v_th: f64, p: &FlashParams) -> Result<f64, ModelError> {
    check_oxide(p)?;
    Ok(p.cap_ratio * ((p.v_pass - p.v_thi) - v_th) / p.t_ox)
}

/// Empirical cell error count at mean threshold voltage `v_th` after `n_pe` cycles.
pub fn cell_error_rate(v_th: f64, p: &FlashParams) -> Result<f64, ModelError> {
    if v_th <= 0.0 || v_th.is_nan() {
        return Err(ModelError::NonPositiveVth(v_th));
    }
    let ln_v = v_th.ln();
    Ok((p.alpha1 * ln_v + p.beta1) * ((p.alpha2 * ln_v + p.beta2) * p.n_pe).exp() - 1.0)
}

/// Pulses needed to raise a cell by `dv_th`: `ceil(dv_th / (beta * delta_v_pp))`.
///
/// Quotients within 1e-9 (relative) of an integer are snapped to it so that
/// exact multiples do not gain a spurious pulse from rounding.
pub fn ispp_steps(dv_th: f64, p: &FlashParams) -> Result<u64, ModelError> {
    if p.delta_v_pp <= 0.0 || p.beta_ispp <= 0.0 {
        return Err(ModelError::BadIspp {
            delta_v_pp: p.delta_v_pp,
            beta_ispp: p.beta_ispp,
        });
    }
    if dv_th < 0.0 || dv_th.is_nan() {
        return Err(ModelError::NegativeShift(dv_th));
    }
    let q = dv_th / (p.beta_ispp * p.delta_v_pp);
    let nearest = q.round();
    let steps = if (q - nearest).abs() <= 1e-9 * nearest.max(1.0) {
        nearest
    } else {
        q.ceil()
    };
    Ok(steps as u64)
}

pub fn program_time(steps: u64, p: &FlashParams) -> f64 {
    steps as f64 * p.t_step
}

/// Pulses needed to program one cell of `state` from the erased baseline.
pub fn state_pulses(state: CellState, p: &FlashParams) -> Result<u64, ModelError> {
    ispp_steps(p.state_voltage(state).max(0.0), p)
}

/// Total ISPP pulses to program every cell counted in `dist`.
pub fn total_pulses(dist: &CellStateDistribution, p: &FlashParams) -> Result<u64, ModelError> {
    let mut total = 0;
    for &s in dist.level.states() {
        total += dist.count(s) * state_pulses(s, p)?;
    }
    Ok(total)
}

/// Surrogate program energy: each cell costs `e_cell_base + pulses * e_pulse`.
pub fn program_energy(
    dist: &CellStateDistribution,
    total_cells: u64,
    p: &FlashParams,
) -> Result<f64, ModelError> {
    if total_cells == 0 {
        return Err(ModelError::NoCells);
    }
    let mut per_cell = 0.0;
    for &s in dist.level.states() {
        let pulses = state_pulses(s, p)? as f64;
        per_cell += dist.probability(s) * (p.e_cell_base + pulses * p.e_pulse);
    }
    Ok(total_cells as f64 * per_cell)
}

/// `1 - E_coded / E_uncoded`, each stream charged for the cells it actually occupies.
pub fn program_energy_reduction(
    uncoded: &CellStateDistribution,
    coded: &CellStateDistribution,
    p: &FlashParams,
) -> Result<f64, ModelError> {
    if uncoded.level != coded.level {
        return Err(ModelError::LevelMismatch);
    }
    let base = program_energy(uncoded, uncoded.total_cells(), p)?;
    if base == 0.0 {
        return Err(ModelError::ZeroBaselineEnergy);
    }
    let coded_energy = program_energy(coded, coded.total_cells(), p)?;
    Ok(1.0 - coded_energy / base)
}

/// Device geometries used for the program-energy comparisons, kept as reference presets.
pub mod presets {
    use super::CellLevel;

    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct DeviceGeometry {
        pub name: &'static str,
        pub level: CellLevel,
        pub page_size_bytes: u64,
        pub feature_size_nm: u32,
        pub pages_per_block: u64,
        pub blocks_per_plane: u64,
        pub planes_per_die: u64,
        pub dies_per_chip: u64,
    }

    impl DeviceGeometry {
        pub fn capacity_bytes(&self) -> u64 {
            self.page_size_bytes
                * self.pages_per_block
                * self.blocks_per_plane
                * self.planes_per_die
                * self.dies_per_chip
        }
    }

    pub const SLC_A: DeviceGeometry = DeviceGeometry {
        name: "SLC-A",
        level: CellLevel::Slc,
        page_size_bytes: 2048,
        feature_size_nm: 73,
        pages_per_block: 64,
        blocks_per_plane: 2048,
        planes_per_die: 2,
        dies_per_chip: 1,
    };

    pub const SLC_B: DeviceGeometry = DeviceGeometry {
        name: "SLC-B",
        feature_size_nm: 72,
        ..SLC_A
    };

    pub const MLC_A: DeviceGeometry = DeviceGeometry {
        name: "MLC-A",
        level: CellLevel::Mlc,
        feature_size_nm: 72,
        pages_per_block: 128,
        ..SLC_A
    };

    pub const ALL: [DeviceGeometry; 3] = [SLC_A, SLC_B, MLC_A];
}
