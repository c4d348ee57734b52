//! `CSIDS` dataset files.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "CSIDS" | version u32 | kind u8 | ndims u32 | dims u32… | count u64 | seed u64
//!         | config_len u32 | config (UTF-8 TOML)
//! records: ue_id u32 | slot u32 | origin u8 | task_id u32 (u32::MAX = none) | payload
//! ```
//!
//! Payloads are f32 pairs `(re, im)`. A time-channel record holds `n_d` taps of
//! `n_r × n_t` in row-major order; a CSI record holds `W` (`n_t × n_sb`,
//! row-major) followed by `n_sb` eigenvalues. Values are narrowed to f32 on
//! write, so a record survives `read(write(x))` bit-exactly once it is
//! f32-representable (see [`round_to_f32`]).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::channel::{CsiEigen, Origin, SystemConfig, TimeChannel};
use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

pub const DATASET_MAGIC: &[u8; 5] = b"CSIDS";
pub const DATASET_VERSION: u32 = 1;
const NO_TASK: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordKind {
    TimeChannel,
    CsiEigen,
}

impl RecordKind {
    fn tag(self) -> u8 {
        match self {
            RecordKind::TimeChannel => 0,
            RecordKind::CsiEigen => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RecordKind::TimeChannel => "time-channel",
            RecordKind::CsiEigen => "csi-eigen",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetHeader {
    pub kind: RecordKind,
    /// `[n_d, n_r, n_t]` for channels, `[n_t, n_sb]` for CSI.
    pub dims: Vec<u32>,
    pub count: u64,
    /// Seed the records were generated from.
    pub seed: u64,
    /// Configuration echo.
    pub config: String,
}

impl DatasetHeader {
    pub fn time_channel(sys: &SystemConfig, seed: u64, config: impl Into<String>) -> Self {
        Self {
            kind: RecordKind::TimeChannel,
            dims: vec![sys.n_d as u32, sys.n_r as u32, sys.n_t as u32],
            count: 0,
            seed,
            config: config.into(),
        }
    }

    pub fn csi(n_t: usize, n_sb: usize, seed: u64, config: impl Into<String>) -> Self {
        Self {
            kind: RecordKind::CsiEigen,
            dims: vec![n_t as u32, n_sb as u32],
            count: 0,
            seed,
            config: config.into(),
        }
    }

    fn payload_values(&self) -> usize {
        let d: Vec<usize> = self.dims.iter().map(|&v| v as usize).collect();
        match self.kind {
            RecordKind::TimeChannel => 2 * d[0] * d[1] * d[2],
            RecordKind::CsiEigen => 2 * d[0] * d[1] + d[1],
        }
    }

    fn check_dims(&self) -> Result<()> {
        let want = match self.kind {
            RecordKind::TimeChannel => 3,
            RecordKind::CsiEigen => 2,
        };
        if self.dims.len() != want || self.dims.contains(&0) {
            return Err(Error::Format(format!(
                "{} header has dims {:?}",
                self.kind.name(),
                self.dims
            )));
        }
        Ok(())
    }
}

/// Rounds every stored value through f32, matching what a file keeps.
pub fn round_to_f32(z: Complex64) -> Complex64 {
    Complex64::new(z.re as f32 as f64, z.im as f32 as f64)
}

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_complex(buf: &mut Vec<u8>, z: Complex64) {
    buf.extend_from_slice(&(z.re as f32).to_le_bytes());
    buf.extend_from_slice(&(z.im as f32).to_le_bytes());
}

fn meta_bytes(buf: &mut Vec<u8>, ue: u32, slot: u32, origin: Origin, task: Option<u32>) {
    put_u32(buf, ue);
    put_u32(buf, slot);
    buf.push(origin.tag());
    put_u32(buf, task.unwrap_or(NO_TASK));
}

/// Streaming writer; the record count is patched into the header on
/// [`finish`](Self::finish).
pub struct DatasetWriter<W: Write + Seek> {
    out: W,
    header: DatasetHeader,
    count_offset: u64,
    buf: Vec<u8>,
}

impl<W: Write + Seek> DatasetWriter<W> {
    pub fn new(mut out: W, header: DatasetHeader) -> Result<Self> {
        header.check_dims()?;
        let mut buf = Vec::new();
        buf.extend_from_slice(DATASET_MAGIC);
        put_u32(&mut buf, DATASET_VERSION);
        buf.push(header.kind.tag());
        put_u32(&mut buf, header.dims.len() as u32);
        for &d in &header.dims {
            put_u32(&mut buf, d);
        }
        let count_offset = buf.len() as u64;
        buf.extend_from_slice(&0u64.to_le_bytes());
        buf.extend_from_slice(&header.seed.to_le_bytes());
        let config_len = u32::try_from(header.config.len())
            .map_err(|_| Error::Format("config echo too long".into()))?;
        put_u32(&mut buf, config_len);
        buf.extend_from_slice(header.config.as_bytes());
        let start = out.stream_position()?;
        out.write_all(&buf)?;
        buf.clear();
        Ok(Self {
            out,
            header: DatasetHeader { count: 0, ..header },
            count_offset: start + count_offset,
            buf,
        })
    }

    fn expect_kind(&self, kind: RecordKind) -> Result<()> {
        if self.header.kind != kind {
            return Err(Error::Format(format!(
                "writing a {} record into a {} file",
                kind.name(),
                self.header.kind.name()
            )));
        }
        Ok(())
    }

    pub fn write_channel(&mut self, h: &TimeChannel) -> Result<()> {
        self.expect_kind(RecordKind::TimeChannel)?;
        let d = &self.header.dims;
        let (n_d, n_r, n_t) = (d[0] as usize, d[1] as usize, d[2] as usize);
        if h.taps.len() != n_d || h.taps.iter().any(|t| t.rows() != n_r || t.cols() != n_t) {
            return Err(Error::Shape(format!("channel does not match dims {d:?}")));
        }
        self.buf.clear();
        meta_bytes(&mut self.buf, h.ue_id, h.slot, h.origin, None);
        for tap in &h.taps {
            for &z in tap.as_slice() {
                put_complex(&mut self.buf, z);
            }
        }
        self.out.write_all(&self.buf)?;
        self.header.count += 1;
        Ok(())
    }

    pub fn write_csi(&mut self, s: &CsiEigen) -> Result<()> {
        self.expect_kind(RecordKind::CsiEigen)?;
        let d = &self.header.dims;
        let (n_t, n_sb) = (d[0] as usize, d[1] as usize);
        if s.w.rows() != n_t || s.w.cols() != n_sb || s.eigvals.len() != n_sb {
            return Err(Error::Shape(format!(
                "csi sample does not match dims {d:?}"
            )));
        }
        self.buf.clear();
        meta_bytes(&mut self.buf, s.ue_id, s.slot, s.origin, s.task_id);
        for &z in s.w.as_slice() {
            put_complex(&mut self.buf, z);
        }
        for &v in &s.eigvals {
            self.buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        self.out.write_all(&self.buf)?;
        self.header.count += 1;
        Ok(())
    }

    /// Patches the record count and returns the underlying writer.
    pub fn finish(mut self) -> Result<W> {
        let end = self.out.stream_position()?;
        self.out.seek(SeekFrom::Start(self.count_offset))?;
        self.out.write_all(&self.header.count.to_le_bytes())?;
        self.out.seek(SeekFrom::Start(end))?;
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Per-record metadata: ue, slot, origin and task.
type RecordMeta = (u32, u32, Origin, Option<u32>);

/// Streaming reader over the records of one file.
pub struct DatasetReader<R: Read> {
    input: R,
    pub header: DatasetHeader,
    remaining: u64,
    buf: Vec<u8>,
}

fn read_array<const N: usize>(r: &mut impl Read) -> Result<[u8; N]> {
    let mut b = [0u8; N];
    r.read_exact(&mut b).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format("file truncated".into()),
        _ => Error::Io(e),
    })?;
    Ok(b)
}

fn get_u32(r: &mut impl Read) -> Result<u32> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn f32_at(b: &[u8], k: usize) -> f64 {
    f32::from_le_bytes(b[4 * k..4 * k + 4].try_into().expect("4 bytes")) as f64
}

fn u32_at(b: &[u8], off: usize) -> u32 {
    u32::from_le_bytes(b[off..off + 4].try_into().expect("4 bytes"))
}

const META_LEN: usize = 13;

impl<R: Read> DatasetReader<R> {
    pub fn new(mut input: R) -> Result<Self> {
        if &read_array::<5>(&mut input)? != DATASET_MAGIC {
            return Err(Error::Format("not a CSIDS dataset (bad magic)".into()));
        }
        let version = get_u32(&mut input)?;
        if version != DATASET_VERSION {
            return Err(Error::Format(format!(
                "unsupported dataset version {version}"
            )));
        }
        let kind = match read_array::<1>(&mut input)?[0] {
            0 => RecordKind::TimeChannel,
            1 => RecordKind::CsiEigen,
            k => return Err(Error::Format(format!("unknown record kind {k}"))),
        };
        let ndims = get_u32(&mut input)?;
        if ndims > 8 {
            return Err(Error::Format(format!("{ndims} dims")));
        }
        let dims = (0..ndims)
            .map(|_| get_u32(&mut input))
            .collect::<Result<Vec<_>>>()?;
        let count = u64::from_le_bytes(read_array(&mut input)?);
        let seed = u64::from_le_bytes(read_array(&mut input)?);
        let len = get_u32(&mut input)? as usize;
        let mut text = vec![0u8; len];
        input
            .read_exact(&mut text)
            .map_err(|_| Error::Format("file truncated".into()))?;
        let config = String::from_utf8(text)
            .map_err(|_| Error::Format("config echo is not UTF-8".into()))?;
        let header = DatasetHeader {
            kind,
            dims,
            count,
            seed,
            config,
        };
        header.check_dims()?;
        let buf = vec![0u8; META_LEN + 4 * header.payload_values()];
        Ok(Self {
            input,
            remaining: count,
            header,
            buf,
        })
    }

    fn next_record(&mut self, kind: RecordKind) -> Result<Option<RecordMeta>> {
        if self.header.kind != kind {
            return Err(Error::Format(format!(
                "expected {} records, file holds {}",
                kind.name(),
                self.header.kind.name()
            )));
        }
        if self.remaining == 0 {
            let mut probe = [0u8; 1];
            if self.input.read(&mut probe)? != 0 {
                return Err(Error::Format("records beyond the declared count".into()));
            }
            return Ok(None);
        }
        self.input
            .read_exact(&mut self.buf)
            .map_err(|_| Error::Format(format!("body ends {} records early", self.remaining)))?;
        self.remaining -= 1;
        let b = &self.buf;
        let origin = Origin::from_tag(b[8])
            .ok_or_else(|| Error::Format(format!("bad origin tag {}", b[8])))?;
        let task = u32_at(b, 9);
        Ok(Some((
            u32_at(b, 0),
            u32_at(b, 4),
            origin,
            (task != NO_TASK).then_some(task),
        )))
    }

    pub fn next_channel(&mut self) -> Result<Option<TimeChannel>> {
        let Some((ue_id, slot, origin, _)) = self.next_record(RecordKind::TimeChannel)? else {
            return Ok(None);
        };
        let d = &self.header.dims;
        let (n_d, n_r, n_t) = (d[0] as usize, d[1] as usize, d[2] as usize);
        let body = &self.buf[META_LEN..];
        let per_tap = n_r * n_t;
        let taps = (0..n_d)
            .map(|k| {
                let data = (0..per_tap)
                    .map(|e| {
                        let idx = 2 * (k * per_tap + e);
                        Complex64::new(f32_at(body, idx), f32_at(body, idx + 1))
                    })
                    .collect();
                ComplexMatrix::from_vec(n_r, n_t, data).map_err(|e| Error::Format(e.to_string()))
            })
            .collect::<Result<_>>()?;
        Ok(Some(TimeChannel {
            taps,
            ue_id,
            slot,
            origin,
        }))
    }

    pub fn next_csi(&mut self) -> Result<Option<CsiEigen>> {
        let Some((ue_id, slot, origin, task_id)) = self.next_record(RecordKind::CsiEigen)? else {
            return Ok(None);
        };
        let d = &self.header.dims;
        let (n_t, n_sb) = (d[0] as usize, d[1] as usize);
        let body = &self.buf[META_LEN..];
        let data = (0..n_t * n_sb)
            .map(|e| Complex64::new(f32_at(body, 2 * e), f32_at(body, 2 * e + 1)))
            .collect();
        let w =
            ComplexMatrix::from_vec(n_t, n_sb, data).map_err(|e| Error::Format(e.to_string()))?;
        let eigvals = (0..n_sb)
            .map(|l| f32_at(body, 2 * n_t * n_sb + l))
            .collect();
        Ok(Some(CsiEigen {
            w,
            eigvals,
            ue_id,
            slot,
            task_id,
            origin,
        }))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn open(path: &Path) -> Result<DatasetReader<BufReader<File>>> {
    DatasetReader::new(BufReader::new(File::open(path)?))
}

pub fn write_csi_file(path: &Path, header: DatasetHeader, samples: &[CsiEigen]) -> Result<()> {
    let mut w = DatasetWriter::new(create(path)?, header)?;
    for s in samples {
        w.write_csi(s)?;
    }
    w.finish()?;
    Ok(())
}

pub fn write_channel_file(
    path: &Path,
    header: DatasetHeader,
    channels: &[TimeChannel],
) -> Result<()> {
    let mut w = DatasetWriter::new(create(path)?, header)?;
    for h in channels {
        w.write_channel(h)?;
    }
    w.finish()?;
    Ok(())
}

pub fn read_csi_file(path: &Path) -> Result<(DatasetHeader, Vec<CsiEigen>)> {
    let mut r = open(path)?;
    let mut out = Vec::with_capacity(r.header.count.min(1 << 20) as usize);
    while let Some(s) = r.next_csi()? {
        out.push(s);
    }
    Ok((r.header, out))
}

pub fn read_channel_file(path: &Path) -> Result<(DatasetHeader, Vec<TimeChannel>)> {
    let mut r = open(path)?;
    let mut out = Vec::with_capacity(r.header.count.min(1 << 20) as usize);
    while let Some(h) = r.next_channel()? {
        out.push(h);
    }
    Ok((r.header, out))
}

/// Splits records into runs of equal consecutive keys.
pub fn group_runs<T, K: PartialEq + Copy>(
    records: Vec<T>,
    key: impl Fn(&T) -> K,
) -> Vec<(K, Vec<T>)> {
    let mut groups: Vec<(K, Vec<T>)> = Vec::new();
    for r in records {
        let k = key(&r);
        match groups.last_mut() {
            Some((g, v)) if *g == k => v.push(r),
            _ => groups.push((k, vec![r])),
        }
    }
    groups
}
