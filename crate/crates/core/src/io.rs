//! Deterministic artifact storage: binary field snapshots, process-state
//! checkpoints carrying the integrator phase, plain-text series, and hash
//! manifests for artifact bundles.
//!
//! Every write goes through a temp-file-plus-rename so a reader never sees
//! a partial artifact, and no artifact embeds wall-clock data, so rerunning
//! the same configuration reproduces every byte.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::delay::{HistorySegment, ProcessState};
use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};
use crate::stepper::{RunRecord, Scheme};

const FIELD_MAGIC: &[u8; 8] = b"NSVFLD1\0";
const CHECKPOINT_MAGIC: &[u8; 8] = b"NSVCKP1\0";
/// File name of a bundle's manifest.
pub const MANIFEST_NAME: &str = "manifest.json";

fn corrupt(path: &Path, detail: impl Into<String>) -> Error {
    Error::CorruptArtifact { path: path.display().to_string(), detail: detail.into() }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    match fs::read(path) {
        Ok(b) => Ok(b),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            Err(Error::missing(path.display().to_string()))
        }
        Err(e) => Err(e.into()),
    }
}

/// Writes `bytes` to `path` through a sibling temp file and an atomic
/// rename, so concurrent readers observe either the old or the new content.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::config(format!("cannot write to '{}'", path.display())))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Lowercase hex SHA-256 of a byte string.
pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// SHA-256 digest as raw bytes (used to bind checkpoints to their config).
pub fn sha256_bytes(bytes: &[u8]) -> [u8; 32] {
    Sha256::digest(bytes).into()
}

// ---------------------------------------------------------------------------
// Little-endian binary encoding helpers.

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8], path: &'a Path) -> Reader<'a> {
        Reader { buf, pos: 0, path }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(corrupt(self.path, format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(corrupt(self.path, format!("{} trailing bytes", self.buf.len() - self.pos)));
        }
        Ok(())
    }
}

fn push_coeffs(out: &mut Vec<u8>, field: &SpectralField) {
    for c in field.coeffs() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
}

fn read_coeffs(r: &mut Reader<'_>, grid: Grid) -> Result<SpectralField> {
    let mut field = SpectralField::zeros(grid);
    for c in field.coeffs_mut() {
        c.re = r.f64()?;
        c.im = r.f64()?;
    }
    if !field.is_finite() {
        return Err(corrupt(r.path, "non-finite coefficient"));
    }
    Ok(field)
}

fn push_grid(out: &mut Vec<u8>, grid: Grid) {
    out.extend_from_slice(&(grid.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(grid.n() as u32).to_le_bytes());
    out.extend_from_slice(&grid.box_length().to_le_bytes());
}

fn read_grid(r: &mut Reader<'_>) -> Result<Grid> {
    let dim = r.u32()? as usize;
    let n = r.u32()? as usize;
    let box_length = r.f64()?;
    Grid::new(dim, n, box_length)
        .map_err(|e| corrupt(r.path, format!("invalid grid header: {e}")))
}

// ---------------------------------------------------------------------------
// Field snapshots.

/// Saves one spectral field with its observation time.
pub fn save_field(path: &Path, field: &SpectralField, time: f64) -> Result<()> {
    let mut out = Vec::with_capacity(24 + field.coeffs().len() * 16);
    out.extend_from_slice(FIELD_MAGIC);
    push_grid(&mut out, field.grid());
    out.extend_from_slice(&time.to_le_bytes());
    push_coeffs(&mut out, field);
    atomic_write(path, &out)
}

/// Loads a field snapshot, returning the field and its observation time.
/// Coefficients are restored bit for bit (no re-projection).
pub fn load_field(path: &Path) -> Result<(SpectralField, f64)> {
    let bytes = read_bytes(path)?;
    let mut r = Reader::new(&bytes, path);
    if r.take(8)? != FIELD_MAGIC {
        return Err(corrupt(path, "bad magic (not a field snapshot)"));
    }
    let grid = read_grid(&mut r)?;
    let time = r.f64()?;
    let field = read_coeffs(&mut r, grid)?;
    r.finish()?;
    if field.divergence_linf() > 1e-6 {
        return Err(corrupt(path, "stored field is far from divergence-free"));
    }
    Ok((field, time))
}

// ---------------------------------------------------------------------------
// Checkpoints.

/// A restartable solver state: the full history segment, the multi-step
/// integrator phase, and the digest of the governing configuration.
#[derive(Debug, Clone)]
pub struct Checkpoint {
    pub state: ProcessState,
    pub scheme: Scheme,
    /// Explicit part of the previous step (present after the first step of
    /// a two-step scheme).
    pub phase: Option<SpectralField>,
    /// SHA-256 of the configuration this state was produced under.
    pub config_sha256: [u8; 32],
}

/// Saves a checkpoint; `phase` is the integrator's stored explicit part
/// (see `Stepper::phase`).
pub fn save_checkpoint(
    path: &Path,
    state: &ProcessState,
    scheme: Scheme,
    phase: Option<&SpectralField>,
    config_sha256: [u8; 32],
) -> Result<()> {
    let hist = state.history();
    let grid = hist.grid();
    let mut out = Vec::new();
    out.extend_from_slice(CHECKPOINT_MAGIC);
    push_grid(&mut out, grid);
    out.extend_from_slice(&hist.dt().to_le_bytes());
    out.extend_from_slice(&hist.anchor().to_le_bytes());
    out.extend_from_slice(&hist.newest_index().to_le_bytes());
    out.extend_from_slice(&(hist.slot_count() as u32).to_le_bytes());
    out.push(match scheme {
        Scheme::Euler => 0,
        Scheme::Cnab2 => 1,
    });
    out.push(phase.is_some() as u8);
    out.extend_from_slice(&config_sha256);
    for i in 0..hist.slot_count() {
        push_coeffs(&mut out, hist.slot(i));
    }
    if let Some(p) = phase {
        push_coeffs(&mut out, p);
    }
    atomic_write(path, &out)
}

/// Loads a checkpoint bit for bit.
pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = read_bytes(path)?;
    let mut r = Reader::new(&bytes, path);
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(corrupt(path, "bad magic (not a checkpoint)"));
    }
    let grid = read_grid(&mut r)?;
    let dt = r.f64()?;
    let anchor = r.f64()?;
    let newest_index = r.i64()?;
    let slot_count = r.u32()? as usize;
    if !(2..=1_000_000).contains(&slot_count) {
        return Err(corrupt(path, format!("implausible slot count {slot_count}")));
    }
    let scheme = match r.take(1)?[0] {
        0 => Scheme::Euler,
        1 => Scheme::Cnab2,
        x => return Err(corrupt(path, format!("unknown scheme tag {x}"))),
    };
    let has_phase = match r.take(1)?[0] {
        0 => false,
        1 => true,
        x => return Err(corrupt(path, format!("bad phase flag {x}"))),
    };
    let config_sha256: [u8; 32] = r.take(32)?.try_into().expect("32 bytes");
    let mut slots = Vec::with_capacity(slot_count);
    for _ in 0..slot_count {
        slots.push(read_coeffs(&mut r, grid)?);
    }
    let phase = if has_phase { Some(read_coeffs(&mut r, grid)?) } else { None };
    r.finish()?;
    let history = HistorySegment::from_slots(grid, dt, anchor, newest_index, slots)
        .map_err(|e| corrupt(path, format!("inconsistent history: {e}")))?;
    Ok(Checkpoint { state: ProcessState::new(history), scheme, phase, config_sha256 })
}

// ---------------------------------------------------------------------------
// Scalar series.

/// Writes a run's scalar series as plain text: two `# key=value` comment
/// lines (step size and worst energy residual), a header, then one row per
/// sample.  The derivative column of row `i` covers the step that produced
/// sample `i` (row 0 carries 0).  Floats are printed in shortest-roundtrip
/// scientific notation, so reading the file back is lossless.
pub fn write_run_csv(path: &Path, record: &RunRecord) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "# dt={:e}", record.dt);
    let _ = writeln!(out, "# energy_residual_max={:e}", record.energy_residual_max);
    let _ = writeln!(out, "t,h_sq,v_sq,da_sq,f_vdual_sq,g_h_sq,deriv_v_sq");
    for i in 0..record.len() {
        let deriv = if i == 0 { 0.0 } else { record.deriv_v_sq[i - 1] };
        let _ = writeln!(
            out,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
            record.times[i],
            record.h_sq[i],
            record.v_sq[i],
            record.da_sq[i],
            record.f_vdual_sq[i],
            record.g_h_sq[i],
            deriv,
        );
    }
    atomic_write(path, out.as_bytes())
}

fn parse_f64(path: &Path, s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| corrupt(path, format!("bad float '{s}'")))
}

/// Reads a series file written by [`write_run_csv`] back into a record.
pub fn read_run_csv(path: &Path) -> Result<RunRecord> {
    let text = String::from_utf8(read_bytes(path)?)
        .map_err(|_| corrupt(path, "series file is not UTF-8"))?;
    let mut lines = text.lines();
    let dt_line = lines.next().ok_or_else(|| corrupt(path, "empty series file"))?;
    let dt = parse_f64(
        path,
        dt_line
            .strip_prefix("# dt=")
            .ok_or_else(|| corrupt(path, "missing dt comment"))?,
    )?;
    let res_line = lines.next().ok_or_else(|| corrupt(path, "missing residual comment"))?;
    let energy_residual_max = parse_f64(
        path,
        res_line
            .strip_prefix("# energy_residual_max=")
            .ok_or_else(|| corrupt(path, "missing residual comment"))?,
    )?;
    let header = lines.next().ok_or_else(|| corrupt(path, "missing header"))?;
    if header != "t,h_sq,v_sq,da_sq,f_vdual_sq,g_h_sq,deriv_v_sq" {
        return Err(corrupt(path, "unexpected column header"));
    }
    let mut record = RunRecord {
        dt,
        times: Vec::new(),
        v_sq: Vec::new(),
        h_sq: Vec::new(),
        da_sq: Vec::new(),
        f_vdual_sq: Vec::new(),
        g_h_sq: Vec::new(),
        deriv_v_sq: Vec::new(),
        energy_residual_max,
    };
    for (i, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 7 {
            return Err(corrupt(path, format!("row {i} has {} columns", cols.len())));
        }
        record.times.push(parse_f64(path, cols[0])?);
        record.h_sq.push(parse_f64(path, cols[1])?);
        record.v_sq.push(parse_f64(path, cols[2])?);
        record.da_sq.push(parse_f64(path, cols[3])?);
        record.f_vdual_sq.push(parse_f64(path, cols[4])?);
        record.g_h_sq.push(parse_f64(path, cols[5])?);
        if i > 0 {
            record.deriv_v_sq.push(parse_f64(path, cols[6])?);
        }
    }
    if record.times.is_empty() {
        return Err(corrupt(path, "series has no rows"));
    }
    Ok(record)
}

// ---------------------------------------------------------------------------
// JSON artifacts and bundle manifests.

/// Serializes a value as pretty JSON (atomic write).
pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::config(format!("serialization failed: {e}")))?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

/// Loads a JSON artifact.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = read_bytes(path)?;
    serde_json::from_slice(&bytes).map_err(|e| corrupt(path, format!("invalid JSON: {e}")))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

/// Content inventory of an artifact bundle.  Contains no timestamps — only
/// names, sizes, and digests — so identical runs produce identical bundles.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    /// What the bundle holds (e.g. "run", "certificates", "measure").
    pub kind: String,
    pub tool: String,
    pub entries: Vec<ManifestEntry>,
}

/// Hashes the named files inside `dir` and writes `manifest.json` there.
pub fn write_manifest(dir: &Path, kind: &str, names: &[&str]) -> Result<Manifest> {
    let mut entries = Vec::with_capacity(names.len());
    let mut sorted: Vec<&str> = names.to_vec();
    sorted.sort_unstable();
    for name in sorted {
        let bytes = read_bytes(&dir.join(name))?;
        entries.push(ManifestEntry {
            name: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: sha256_hex(&bytes),
        });
    }
    let manifest = Manifest {
        kind: kind.to_string(),
        tool: format!("nsv-cli {}", env!("CARGO_PKG_VERSION")),
        entries,
    };
    save_json(&dir.join(MANIFEST_NAME), &manifest)?;
    Ok(manifest)
}

/// Loads a bundle's manifest and verifies every entry's size and digest.
pub fn verify_bundle(dir: &Path) -> Result<Manifest> {
    let manifest: Manifest = load_json(&dir.join(MANIFEST_NAME))?;
    for entry in &manifest.entries {
        let path = dir.join(&entry.name);
        let bytes = read_bytes(&path)?;
        if bytes.len() as u64 != entry.bytes {
            return Err(corrupt(
                &path,
                format!("size {} differs from manifest ({})", bytes.len(), entry.bytes),
            ));
        }
        let digest = sha256_hex(&bytes);
        if digest != entry.sha256 {
            return Err(corrupt(&path, "digest differs from manifest"));
        }
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::delay::DelaySpec;
    use crate::forcing::{Amplitude, Forcing};
    use crate::params::PhysicalParams;
    use crate::spectral::ModeSeed;
    use crate::stepper::Stepper;

    fn grid() -> Grid {
        Grid::new(2, 16, 2.0 * std::f64::consts::PI).unwrap()
    }

    fn tmpdir() -> tempfile::TempDir {
        tempfile::tempdir().expect("create temp dir")
    }

    fn bits(f: &SpectralField) -> Vec<(u64, u64)> {
        f.coeffs().iter().map(|c| (c.re.to_bits(), c.im.to_bits())).collect()
    }

    #[test]
    fn field_snapshot_roundtrips_bitwise() {
        let dir = tmpdir();
        let path = dir.path().join("u.field");
        let field = SpectralField::random(grid(), 42, 0.7, 1.3);
        save_field(&path, &field, 1.5).unwrap();
        let (loaded, time) = load_field(&path).unwrap();
        assert_eq!(time, 1.5);
        assert_eq!(bits(&field), bits(&loaded));
        assert!(!path.with_file_name("u.field.tmp").exists());
    }

    #[test]
    fn corrupt_and_missing_fields_are_distinguished() {
        let dir = tmpdir();
        let path = dir.path().join("u.field");
        assert!(matches!(load_field(&path), Err(Error::MissingArtifact(_))));
        let field = SpectralField::random(grid(), 1, 0.5, 1.3);
        save_field(&path, &field, 0.0).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 3);
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(load_field(&path), Err(Error::CorruptArtifact { .. })));
        fs::write(&path, b"garbagegarbage").unwrap();
        assert!(matches!(load_field(&path), Err(Error::CorruptArtifact { .. })));
    }

    #[test]
    fn checkpoint_roundtrips_state_scheme_phase_and_hash() {
        let dir = tmpdir();
        let path = dir.path().join("state.ckpt");
        let p = PhysicalParams::on_grid(1.0, 1.0, 0.25, grid()).unwrap();
        let f = Forcing::from_modes(
            grid(),
            &[ModeSeed { k: [0, 1, 0], comp: 0, re: 0.4, im: 0.1 }],
            Amplitude::Constant { value: 1.0 },
        )
        .unwrap();
        let mut stepper = Stepper::new(p, f, DelaySpec::none(), Scheme::Cnab2).unwrap();
        let u0 = SpectralField::random(grid(), 3, 0.6, 1.4);
        let mut state = stepper.initial_state(u0.clone(), 0.0, 0.0625, |_| u0.clone()).unwrap();
        for _ in 0..5 {
            stepper.step(&mut state).unwrap();
        }
        let hash = sha256_bytes(b"the governing config");
        save_checkpoint(&path, &state, Scheme::Cnab2, stepper.phase(), hash).unwrap();
        let ck = load_checkpoint(&path).unwrap();
        assert_eq!(ck.scheme, Scheme::Cnab2);
        assert_eq!(ck.config_sha256, hash);
        assert_eq!(ck.state.t().to_bits(), state.t().to_bits());
        assert_eq!(ck.state.history().slot_count(), state.history().slot_count());
        for i in 0..state.history().slot_count() {
            assert_eq!(bits(state.history().slot(i)), bits(ck.state.history().slot(i)));
        }
        assert_eq!(
            bits(stepper.phase().expect("phase after steps")),
            bits(ck.phase.as_ref().expect("stored phase"))
        );
    }

    #[test]
    fn resumed_run_matches_uninterrupted_run_bitwise() {
        let p = PhysicalParams::on_grid(1.0, 1.0, 0.25, grid()).unwrap();
        let f = Forcing::from_modes(
            grid(),
            &[ModeSeed { k: [1, 1, 0], comp: 1, re: 0.2, im: 0.3 }],
            Amplitude::Periodic { mean: 1.0, amp: 0.3, omega: 2.0 },
        )
        .unwrap();
        let u0 = SpectralField::random(grid(), 7, 0.5, 1.4);
        let mk_state = |s: &Stepper| s.initial_state(u0.clone(), 0.0, 0.0625, |_| u0.clone());

        // Uninterrupted reference.
        let mut direct = Stepper::new(p, f.clone(), DelaySpec::none(), Scheme::Cnab2).unwrap();
        let mut ref_state = mk_state(&direct).unwrap();
        for _ in 0..12 {
            direct.step(&mut ref_state).unwrap();
        }

        // Run 5 steps, checkpoint, reload into a fresh stepper, run 7 more.
        let dir = tmpdir();
        let path = dir.path().join("mid.ckpt");
        let mut first = Stepper::new(p, f.clone(), DelaySpec::none(), Scheme::Cnab2).unwrap();
        let mut state = mk_state(&first).unwrap();
        for _ in 0..5 {
            first.step(&mut state).unwrap();
        }
        save_checkpoint(&path, &state, Scheme::Cnab2, first.phase(), [0u8; 32]).unwrap();
        let ck = load_checkpoint(&path).unwrap();
        let mut second = Stepper::new(p, f, DelaySpec::none(), ck.scheme).unwrap();
        second.restore_phase(ck.phase.clone());
        let mut resumed = ck.state;
        for _ in 0..7 {
            second.step(&mut resumed).unwrap();
        }
        assert_eq!(bits(ref_state.u()), bits(resumed.u()));
        assert_eq!(ref_state.t().to_bits(), resumed.t().to_bits());
    }

    #[test]
    fn run_series_roundtrips_losslessly() {
        let dir = tmpdir();
        let path = dir.path().join("series.csv");
        let p = PhysicalParams::on_grid(1.0, 1.0, 0.25, grid()).unwrap();
        let f = Forcing::from_modes(
            grid(),
            &[ModeSeed { k: [0, 1, 0], comp: 0, re: 0.5, im: 0.0 }],
            Amplitude::Periodic { mean: 0.8, amp: 0.4, omega: 3.0 },
        )
        .unwrap();
        let mut stepper = Stepper::new(p, f, DelaySpec::none(), Scheme::Cnab2).unwrap();
        let u0 = SpectralField::random(grid(), 11, 0.6, 1.5);
        let mut state = stepper.initial_state(u0.clone(), 0.0, 0.0625, |_| u0.clone()).unwrap();
        let record = stepper.evolve(&mut state, 20).unwrap();
        write_run_csv(&path, &record).unwrap();
        let loaded = read_run_csv(&path).unwrap();
        assert_eq!(record.dt.to_bits(), loaded.dt.to_bits());
        assert_eq!(
            record.energy_residual_max.to_bits(),
            loaded.energy_residual_max.to_bits()
        );
        let cmp = |a: &[f64], b: &[f64]| {
            assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(b) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        };
        cmp(&record.times, &loaded.times);
        cmp(&record.h_sq, &loaded.h_sq);
        cmp(&record.v_sq, &loaded.v_sq);
        cmp(&record.da_sq, &loaded.da_sq);
        cmp(&record.f_vdual_sq, &loaded.f_vdual_sq);
        cmp(&record.g_h_sq, &loaded.g_h_sq);
        cmp(&record.deriv_v_sq, &loaded.deriv_v_sq);
    }

    #[test]
    fn manifests_verify_and_catch_tampering() {
        let dir = tmpdir();
        fs::write(dir.path().join("a.txt"), b"alpha").unwrap();
        fs::write(dir.path().join("b.txt"), b"beta").unwrap();
        let m = write_manifest(dir.path(), "run", &["b.txt", "a.txt"]).unwrap();
        // Entries are sorted by name regardless of call order.
        assert_eq!(m.entries[0].name, "a.txt");
        verify_bundle(dir.path()).unwrap();
        fs::write(dir.path().join("b.txt"), b"tampered").unwrap();
        assert!(matches!(verify_bundle(dir.path()), Err(Error::CorruptArtifact { .. })));
        fs::remove_file(dir.path().join("b.txt")).unwrap();
        assert!(matches!(verify_bundle(dir.path()), Err(Error::MissingArtifact(_))));
    }
}
