//! Perfect n/2 inverted limited weight coding (ILWC).
//!
//! An `n`-bit segment is widened to `k = n + 1` bits by prepending a `0` flag
//! bit. If the widened word carries at most `m = n / 2` ones it is inverted,
//! so every emitted codeword carries strictly more than `m` ones. Exactly half
//! of the `2^k` words satisfy that weight law, which lets the decoder flag any
//! stored word that violates it.
//!
//! Streams are handled for `n` in {2, 4, 8} so segments never straddle a byte.
//! Segments are taken most-significant-first from each byte and codewords are
//! packed most-significant-bit-first into the payload of an [`EncodedContainer`].

use std::io::{self, Read, Write};
use std::sync::OnceLock;

use bitvec::prelude::*;
use thiserror::Error;

/// Container magic, ASCII `ILWC`.
pub const MAGIC: [u8; 4] = *b"ILWC";
pub const FORMAT_VERSION: u8 = 1;
/// Magic, version, segment width, two reserved bytes and the u64 length.
pub const HEADER_LEN: usize = 16;

/// Segment widths supported by the stream codec.
pub const STREAM_WIDTHS: [u32; 3] = [2, 4, 8];

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("segment width {0} is not an even value in [2, 32]")]
    InvalidSegmentWidth(u32),
    #[error("segment width {0} cannot be used for streams (expected 2, 4 or 8)")]
    UnsupportedStreamWidth(u32),
    #[error("data word {data:#x} does not fit in {n} bits")]
    DataOutOfRange { data: u64, n: u32 },
    #[error("codeword {raw:#x} does not fit in {k} bits")]
    CodewordOutOfRange { raw: u64, k: u32 },
    #[error("codeword {raw_bits:#b} has weight {weight}, must exceed {m}")]
    InvalidWeight { raw_bits: u64, weight: u32, m: u32 },
    #[error("limited weight parameters out of range (n={n}, k={k}, m={m})")]
    LwcParametersOutOfRange { n: u32, k: u32, m: u32 },
    #[error("container header truncated ({0} bytes)")]
    TruncatedHeader(usize),
    #[error("bad container magic {0:02x?}")]
    BadMagic([u8; 4]),
    #[error("unsupported container version {0}")]
    BadVersion(u8),
    #[error("unsupported container segment width {0}")]
    BadSegmentWidth(u8),
    #[error("container reserved bytes are not zero")]
    NonZeroReserved,
    #[error("payload is {actual} bytes, header implies {expected}")]
    PayloadLengthMismatch { expected: u64, actual: u64 },
    #[error("payload padding bits are not zero")]
    NonZeroPadding,
    #[error("integrity failure at codeword {codeword_index}: {raw_bits:#b} has weight {weight}")]
    Integrity {
        codeword_index: u64,
        raw_bits: u64,
        weight: u32,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = CodecError> = std::result::Result<T, E>;

/// Parameters of one perfect ILWC configuration: `k = n + 1`, `m = n / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SegmentConfig {
    n: u32,
}

impl SegmentConfig {
    pub fn new(n: u32) -> Result<Self> {
        if !n.is_multiple_of(2) || !(2..=32).contains(&n) {
            return Err(CodecError::InvalidSegmentWidth(n));
        }
        Ok(Self { n })
    }

    /// Like [`SegmentConfig::new`] but restricted to widths that divide a byte.
    pub fn for_stream(n: u32) -> Result<Self> {
        if !STREAM_WIDTHS.contains(&n) {
            return Err(CodecError::UnsupportedStreamWidth(n));
        }
        Self::new(n)
    }

    pub fn n(self) -> u32 {
        self.n
    }

    pub fn k(self) -> u32 {
        self.n + 1
    }

    pub fn m(self) -> u32 {
        self.n / 2
    }

    /// Added redundancy `(k - n) / n`.
    pub fn overhead(self) -> f64 {
        1.0 / self.n as f64
    }

    fn segments_per_byte(self) -> u32 {
        8 / self.n
    }

    /// Coded bits produced per source byte.
    pub fn coded_bits_per_byte(self) -> u32 {
        self.segments_per_byte() * self.k()
    }

    fn data_mask(self) -> u64 {
        (1u64 << self.n) - 1
    }

    fn codeword_mask(self) -> u64 {
        (1u64 << self.k()) - 1
    }
}

/// A `k`-bit codeword; the flag bit is the most significant of the `k` bits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Codeword {
    pub bits: u64,
    pub width: u32,
}

impl Codeword {
    pub fn weight(self) -> u32 {
        codeword_weight(self.bits)
    }

    pub fn flag(self) -> bool {
        (self.bits >> (self.width - 1)) & 1 == 1
    }

    /// True when the weight law `weight > m` holds.
    pub fn is_valid(self, cfg: SegmentConfig) -> bool {
        self.weight() > cfg.m()
    }
}

/// Number of `1` bits in `w`.
pub fn codeword_weight(w: u64) -> u32 {
    w.count_ones()
}

pub fn encode_segment(data: u64, cfg: SegmentConfig) -> Result<Codeword> {
    if data > cfg.data_mask() {
        return Err(CodecError::DataOutOfRange { data, n: cfg.n });
    }
    // The flag bit is already zero: `data` fits in n bits.
    let widened = data;
    let bits = if codeword_weight(widened) > cfg.m() {
        widened
    } else {
        !widened & cfg.codeword_mask()
    };
    Ok(Codeword {
        bits,
        width: cfg.k(),
    })
}

/// Applies the flag-bit rule without checking the weight law.
fn decode_unchecked(raw: u64, cfg: SegmentConfig) -> u64 {
    let flag = (raw >> cfg.n) & 1 == 1;
    if flag {
        !raw & cfg.data_mask()
    } else {
        raw & cfg.data_mask()
    }
}

pub fn decode_segment(raw: u64, cfg: SegmentConfig) -> Result<u64> {
    if raw > cfg.codeword_mask() {
        return Err(CodecError::CodewordOutOfRange { raw, k: cfg.k() });
    }
    let weight = codeword_weight(raw);
    if weight <= cfg.m() {
        return Err(CodecError::InvalidWeight {
            raw_bits: raw,
            weight,
            m: cfg.m(),
        });
    }
    Ok(decode_unchecked(raw, cfg))
}

fn binomial(n: u32, r: u32) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        // exact at every step: acc * (n - i) is divisible by (i + 1)
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc
}

/// Number of `k`-bit words with weight at most `m`.
fn limited_weight_count(k: u32, m: u32) -> u128 {
    (0..=m).map(|i| binomial(k, i)).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PerfectParameters {
    pub k: u32,
    pub m: u32,
    pub holds: bool,
}

/// Checks that `sum_{i<=n/2} C(n+1, i) == 2^n` in exact arithmetic.
pub fn verify_perfect_parameters(n: u32) -> Result<PerfectParameters> {
    let cfg = SegmentConfig::new(n)?;
    let holds = limited_weight_count(cfg.k(), cfg.m()) == 1u128 << n;
    Ok(PerfectParameters {
        k: cfg.k(),
        m: cfg.m(),
        holds,
    })
}

/// Whether `k`-bit words of weight at most `m` can represent all `n`-bit values.
pub fn lwc_feasible(n: u32, k: u32, m: u32) -> Result<bool> {
    if !(1..=64).contains(&n) || !(1..=64).contains(&k) || m < 1 || m > k {
        return Err(CodecError::LwcParametersOutOfRange { n, k, m });
    }
    Ok(limited_weight_count(k, m) >= 1u128 << n)
}

/// Per-byte codeword bits for a stream width, built once from [`encode_segment`].
#[derive(Debug)]
pub struct ByteCodeTable {
    cfg: SegmentConfig,
    coded: [u32; 256],
    /// Flag-rule decode of every k-bit word plus whether it obeys the weight law.
    decoded: Vec<(u8, bool)>,
}

impl ByteCodeTable {
    fn build(cfg: SegmentConfig) -> Self {
        let mut coded = [0u32; 256];
        let per_byte = cfg.segments_per_byte();
        for (byte, slot) in coded.iter_mut().enumerate() {
            let mut acc = 0u32;
            for s in 0..per_byte {
                let shift = 8 - cfg.n * (s + 1);
                let seg = (byte as u64 >> shift) & cfg.data_mask();
                let cw = encode_segment(seg, cfg).expect("segment fits");
                acc = (acc << cfg.k()) | cw.bits as u32;
            }
            *slot = acc;
        }
        let decoded = (0..1u64 << cfg.k())
            .map(|raw| {
                (
                    decode_unchecked(raw, cfg) as u8,
                    codeword_weight(raw) > cfg.m(),
                )
            })
            .collect();
        Self {
            cfg,
            coded,
            decoded,
        }
    }

    /// The table for a stream width (2, 4 or 8).
    pub fn for_config(cfg: SegmentConfig) -> Result<&'static ByteCodeTable> {
        static TABLES: [OnceLock<ByteCodeTable>; 3] =
            [OnceLock::new(), OnceLock::new(), OnceLock::new()];
        let slot = match cfg.n {
            2 => &TABLES[0],
            4 => &TABLES[1],
            8 => &TABLES[2],
            n => return Err(CodecError::UnsupportedStreamWidth(n)),
        };
        Ok(slot.get_or_init(|| Self::build(cfg)))
    }

    pub fn config(&self) -> SegmentConfig {
        self.cfg
    }

    /// Coded bits of `byte`, right-aligned; the width is `cfg.coded_bits_per_byte()`.
    #[inline]
    pub fn coded(&self, byte: u8) -> u32 {
        self.coded[byte as usize]
    }
}

struct BitWriter {
    out: Vec<u8>,
    acc: u64,
    pending: u32,
}

impl BitWriter {
    fn with_capacity(bytes: usize) -> Self {
        Self {
            out: Vec::with_capacity(bytes),
            acc: 0,
            pending: 0,
        }
    }

    #[inline]
    fn push(&mut self, value: u32, width: u32) {
        self.acc = (self.acc << width) | u64::from(value);
        self.pending += width;
        while self.pending >= 8 {
            self.pending -= 8;
            self.out.push((self.acc >> self.pending) as u8);
        }
        self.acc &= (1u64 << self.pending) - 1;
    }

    fn finish(mut self) -> Vec<u8> {
        if self.pending > 0 {
            self.out.push((self.acc << (8 - self.pending)) as u8);
        }
        self.out
    }
}

struct BitReader<'a> {
    data: &'a [u8],
    pos: usize,
    acc: u64,
    available: u32,
}

impl<'a> BitReader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Self {
            data,
            pos: 0,
            acc: 0,
            available: 0,
        }
    }

    /// Reads `width` (<= 32) bits; the caller guarantees they exist.
    #[inline]
    fn read(&mut self, width: u32) -> u64 {
        while self.available < width {
            self.acc = (self.acc << 8) | u64::from(self.data[self.pos]);
            self.pos += 1;
            self.available += 8;
        }
        self.available -= width;
        let v = (self.acc >> self.available) & ((1u64 << width) - 1);
        self.acc &= (1u64 << self.available) - 1;
        v
    }
}

/// Framed on-disk form of an encoded byte stream.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedContainer {
    pub segment_n: u8,
    pub original_length: u64,
    pub payload: Vec<u8>,
}

impl EncodedContainer {
    pub fn config(&self) -> Result<SegmentConfig> {
        SegmentConfig::for_stream(u32::from(self.segment_n))
            .map_err(|_| CodecError::BadSegmentWidth(self.segment_n))
    }

    /// Payload bits before padding.
    pub fn payload_bit_len(&self) -> Result<u64> {
        let cfg = self.config()?;
        Ok(self.original_length * u64::from(cfg.coded_bits_per_byte()))
    }

    /// The coded bits without the final-byte padding.
    pub fn payload_bits(&self) -> Result<&BitSlice<u8, Msb0>> {
        let len = self.payload_bit_len()? as usize;
        self.check_payload_len()?;
        Ok(&self.payload.view_bits::<Msb0>()[..len])
    }

    fn check_payload_len(&self) -> Result<()> {
        let expected = self.payload_bit_len()?.div_ceil(8);
        let actual = self.payload.len() as u64;
        if expected != actual {
            return Err(CodecError::PayloadLengthMismatch { expected, actual });
        }
        let pad = (8 - self.payload_bit_len()? % 8) % 8;
        if pad > 0 {
            let last = *self.payload.last().expect("non-empty when padded");
            if last & ((1u8 << pad) - 1) != 0 {
                return Err(CodecError::NonZeroPadding);
            }
        }
        Ok(())
    }

    pub fn header_bytes(&self) -> [u8; HEADER_LEN] {
        let mut h = [0u8; HEADER_LEN];
        h[..4].copy_from_slice(&MAGIC);
        h[4] = FORMAT_VERSION;
        h[5] = self.segment_n;
        h[8..].copy_from_slice(&self.original_length.to_le_bytes());
        h
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + self.payload.len());
        out.extend_from_slice(&self.header_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn write_to<W: Write>(&self, mut sink: W) -> Result<()> {
        sink.write_all(&self.header_bytes())?;
        sink.write_all(&self.payload)?;
        sink.flush()?;
        Ok(())
    }

    /// Parses and validates a serialized container.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(CodecError::TruncatedHeader(bytes.len()));
        }
        let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
        if magic != MAGIC {
            return Err(CodecError::BadMagic(magic));
        }
        if bytes[4] != FORMAT_VERSION {
            return Err(CodecError::BadVersion(bytes[4]));
        }
        let segment_n = bytes[5];
        if !STREAM_WIDTHS.contains(&u32::from(segment_n)) {
            return Err(CodecError::BadSegmentWidth(segment_n));
        }
        if bytes[6] != 0 || bytes[7] != 0 {
            return Err(CodecError::NonZeroReserved);
        }
        let original_length = u64::from_le_bytes(bytes[8..16].try_into().expect("8 bytes"));
        let container = Self {
            segment_n,
            original_length,
            payload: bytes[HEADER_LEN..].to_vec(),
        };
        container.check_payload_len()?;
        Ok(container)
    }

    pub fn read_from<R: Read>(mut source: R) -> Result<Self> {
        let mut bytes = Vec::new();
        source.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }
}

pub fn encode_stream(input: &[u8], cfg: SegmentConfig) -> Result<EncodedContainer> {
    let table = ByteCodeTable::for_config(cfg)?;
    let width = cfg.coded_bits_per_byte();
    let bits = input.len() as u64 * u64::from(width);
    let mut writer = BitWriter::with_capacity(bits.div_ceil(8) as usize);
    for &byte in input {
        writer.push(table.coded(byte), width);
    }
    Ok(EncodedContainer {
        segment_n: cfg.n as u8,
        original_length: input.len() as u64,
        payload: writer.finish(),
    })
}

/// Encodes `input` and writes the framed container to `sink`.
pub fn encode_stream_to<W: Write>(input: &[u8], cfg: SegmentConfig, sink: W) -> Result<()> {
    encode_stream(input, cfg)?.write_to(sink)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DecodeMode {
    /// Stop at the first codeword that breaks the weight law.
    #[default]
    Strict,
    /// Decode every codeword by the flag rule and record weight-law violations.
    Lenient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct DecodeErrorRecord {
    pub codeword_index: u64,
    pub raw_bits: u64,
    pub weight: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DecodeOutput {
    pub bytes: Vec<u8>,
    pub errors: Vec<DecodeErrorRecord>,
}

pub fn decode_stream(container: &EncodedContainer, mode: DecodeMode) -> Result<DecodeOutput> {
    let cfg = container.config()?;
    container.check_payload_len()?;
    let table = ByteCodeTable::for_config(cfg)?;
    let k = cfg.k();
    let per_byte = cfg.segments_per_byte();
    let mut reader = BitReader::new(&container.payload);
    let mut bytes = Vec::with_capacity(container.original_length as usize);
    let mut errors = Vec::new();
    let mut index = 0u64;
    for _ in 0..container.original_length {
        let mut byte = 0u8;
        for _ in 0..per_byte {
            let raw = reader.read(k);
            let (seg, valid) = table.decoded[raw as usize];
            if !valid {
                let record = DecodeErrorRecord {
                    codeword_index: index,
                    raw_bits: raw,
                    weight: codeword_weight(raw),
                };
                match mode {
                    DecodeMode::Strict => {
                        return Err(CodecError::Integrity {
                            codeword_index: record.codeword_index,
                            raw_bits: record.raw_bits,
                            weight: record.weight,
                        })
                    }
                    DecodeMode::Lenient => errors.push(record),
                }
            }
            // n == 8 shifts the whole accumulator out; widen to avoid overflow.
            byte = ((u16::from(byte) << cfg.n) as u8) | seg;
            index += 1;
        }
        bytes.push(byte);
    }
    Ok(DecodeOutput { bytes, errors })
}
