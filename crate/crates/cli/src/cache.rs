//! On-disk eigenbasis cache.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! magic        8 bytes   "BXTDSEBC"
//! version      u32
//! fingerprint  32 bytes  sha256 of the resolved system description
//! payload_len  u64
//! payload      payload_len bytes
//! checksum     32 bytes  sha256 of the payload
//! ```
//!
//! The payload holds `ip`, `threshold`, the block table (label, rows,
//! states, energies, column-major coefficients) and one dipole set per
//! orientation (orientation tag, then `row, col, rows, cols` and the
//! column-major matrix of every stored block).

use boxtdse::atom::ModelAtomSpec;
use boxtdse::system::{build_system, calibrated_atom, BuiltSystem, SystemSpec};
use boxtdse::two_center::TwoCenterSpec;
use boxtdse::{Component, CouplingBlock, DipoleCouplingSet, EigenBasis, EigenBlock, Orientation, Parity, SymmetryBlock};
use faer::Mat;
use sha2::{Digest, Sha256};
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const MAGIC: &[u8; 8] = b"BXTDSEBC";
pub const VERSION: u32 = 1;
pub const CACHE_DIR_ENV: &str = "BOXTDSE_CACHE_DIR";
const HEADER_LEN: usize = 8 + 4 + 32 + 8;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("not a basis cache (bad magic)")]
    BadMagic,
    #[error("cache format version {0} is not supported")]
    Version(u32),
    #[error("cache file is truncated")]
    Truncated,
    #[error("cache payload checksum mismatch")]
    Checksum,
    #[error("malformed cache: {0}")]
    Malformed(String),
    #[error("cache i/o: {0}")]
    Io(#[from] io::Error),
}

/// Everything a propagation needs from the field-free problem.
#[derive(Debug, Clone)]
pub struct BasisCache {
    pub fingerprint: [u8; 32],
    pub ip: f64,
    pub basis: EigenBasis,
    pub couplings: Vec<DipoleCouplingSet>,
}

fn describe(spec: &SystemSpec, target_ip: Option<f64>) -> String {
    let mut s = match spec {
        SystemSpec::Atom(ModelAtomSpec {
            alpha,
            r_max,
            n_splines,
            order,
            l_max,
            quad_points,
        }) => format!("atom alpha={alpha:?} r_max={r_max:?} splines={n_splines} order={order} l_max={l_max} quad={quad_points}"),
        SystemSpec::TwoCenter(TwoCenterSpec {
            r,
            xi_max,
            xi_splines,
            xi_order,
            eta_splines,
            eta_order,
            lambda_max,
            include_repulsion,
            quad_points,
            eta_node_limit,
        }) => format!(
            "two-center r={r:?} xi_max={xi_max:?} xi={xi_splines}/{xi_order} eta={eta_splines}/{eta_order} \
             lambda_max={lambda_max} repulsion={include_repulsion} quad={quad_points} eta_nodes={eta_node_limit:?}"
        ),
    };
    if let Some(ip) = target_ip {
        s.push_str(&format!(" target_ip={ip:?}"));
    }
    s
}

pub fn fingerprint(spec: &SystemSpec, target_ip: Option<f64>) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(format!("boxtdse basis v{VERSION}\n"));
    h.update(describe(spec, target_ip));
    h.finalize().into()
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn fingerprint_hex(spec: &SystemSpec, target_ip: Option<f64>) -> String {
    hex(&fingerprint(spec, target_ip))
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn mat(&mut self, m: &Mat<f64>) {
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                self.f64(m[(i, j)]);
            }
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CacheError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or(CacheError::Truncated)?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, CacheError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, CacheError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, CacheError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn len(&mut self) -> Result<usize, CacheError> {
        let v = self.u64()?;
        usize::try_from(v).ok().filter(|&n| n <= self.buf.len()).ok_or(CacheError::Truncated)
    }
    fn f64(&mut self) -> Result<f64, CacheError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn mat(&mut self, rows: usize, cols: usize) -> Result<Mat<f64>, CacheError> {
        let n = rows.checked_mul(cols).and_then(|n| n.checked_mul(8)).ok_or(CacheError::Truncated)?;
        let data = self.take(n)?;
        Ok(Mat::from_fn(rows, cols, |i, j| {
            let k = 8 * (j * rows + i);
            f64::from_le_bytes(data[k..k + 8].try_into().unwrap())
        }))
    }
}

fn label_tag(label: SymmetryBlock) -> (u8, u32, u8, u8) {
    match label {
        SymmetryBlock::Atomic { l } => (0, l, 0, 0),
        SymmetryBlock::Diatomic { lambda, parity, component } => (
            1,
            lambda,
            match parity {
                Parity::Gerade => 0,
                Parity::Ungerade => 1,
            },
            match component {
                Component::Symmetric => 0,
                Component::PlusM => 1,
                Component::MinusM => 2,
            },
        ),
    }
}

fn label_from_tag(kind: u8, angular: u32, parity: u8, component: u8) -> Result<SymmetryBlock, CacheError> {
    let bad = || CacheError::Malformed(format!("block label tag ({kind}, {angular}, {parity}, {component})"));
    match kind {
        0 => Ok(SymmetryBlock::Atomic { l: angular }),
        1 => Ok(SymmetryBlock::Diatomic {
            lambda: angular,
            parity: match parity {
                0 => Parity::Gerade,
                1 => Parity::Ungerade,
                _ => return Err(bad()),
            },
            component: match component {
                0 => Component::Symmetric,
                1 => Component::PlusM,
                2 => Component::MinusM,
                _ => return Err(bad()),
            },
        }),
        _ => Err(bad()),
    }
}

fn orientation_tag(o: Orientation) -> u8 {
    match o {
        Orientation::Parallel => 0,
        Orientation::Perpendicular => 1,
        Orientation::Atom => 2,
    }
}

impl BasisCache {
    pub fn from_built(fingerprint: [u8; 32], built: BuiltSystem) -> Self {
        Self {
            fingerprint,
            ip: built.ip,
            basis: built.basis,
            couplings: built.couplings,
        }
    }

    pub fn couplings_for(&self, o: Orientation) -> Option<&DipoleCouplingSet> {
        self.couplings.iter().find(|c| c.orientation == o)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut p = Writer(Vec::new());
        p.f64(self.ip);
        p.f64(self.basis.threshold);
        p.u32(self.basis.blocks.len() as u32);
        for b in &self.basis.blocks {
            let (kind, angular, parity, component) = label_tag(b.label);
            p.u8(kind);
            p.u32(angular);
            p.u8(parity);
            p.u8(component);
            p.u64(b.coefficients.nrows() as u64);
            p.u64(b.energies.len() as u64);
            for &e in &b.energies {
                p.f64(e);
            }
            p.mat(&b.coefficients);
        }
        p.u32(self.couplings.len() as u32);
        for set in &self.couplings {
            p.u8(orientation_tag(set.orientation));
            p.u32(set.blocks.len() as u32);
            for blk in &set.blocks {
                p.u64(blk.row as u64);
                p.u64(blk.col as u64);
                p.u64(blk.matrix.nrows() as u64);
                p.u64(blk.matrix.ncols() as u64);
                p.mat(&blk.matrix);
            }
        }
        let payload = p.0;
        let mut out = Writer(Vec::with_capacity(HEADER_LEN + payload.len() + 32));
        out.0.extend_from_slice(MAGIC);
        out.u32(VERSION);
        out.0.extend_from_slice(&self.fingerprint);
        out.u64(payload.len() as u64);
        out.0.extend_from_slice(&payload);
        out.0.extend_from_slice(&Sha256::digest(&payload));
        out.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CacheError> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(8).map_err(|_| CacheError::BadMagic)? != MAGIC {
            return Err(CacheError::BadMagic);
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(CacheError::Version(version));
        }
        let fingerprint: [u8; 32] = r.take(32)?.try_into().unwrap();
        let n = r.len()?;
        let payload = r.take(n)?;
        let checksum = r.take(32)?;
        if r.pos != bytes.len() {
            return Err(CacheError::Malformed("trailing bytes".into()));
        }
        if Sha256::digest(payload).as_slice() != checksum {
            return Err(CacheError::Checksum);
        }

        let mut p = Reader { buf: payload, pos: 0 };
        let ip = p.f64()?;
        let threshold = p.f64()?;
        let n_blocks = p.u32()? as usize;
        let mut blocks = Vec::new();
        for _ in 0..n_blocks {
            let label = label_from_tag(p.u8()?, p.u32()?, p.u8()?, p.u8()?)?;
            let rows = p.len()?;
            let states = p.len()?;
            let energies = (0..states).map(|_| p.f64()).collect::<Result<Vec<_>, _>>()?;
            let coefficients = p.mat(rows, states)?;
            blocks.push(EigenBlock {
                label,
                energies,
                coefficients,
            });
        }
        let basis = EigenBasis { blocks, threshold };
        let n_sets = p.u32()? as usize;
        let mut couplings = Vec::new();
        for _ in 0..n_sets {
            let orientation = match p.u8()? {
                0 => Orientation::Parallel,
                1 => Orientation::Perpendicular,
                2 => Orientation::Atom,
                t => return Err(CacheError::Malformed(format!("orientation tag {t}"))),
            };
            let n = p.u32()? as usize;
            let mut set = DipoleCouplingSet::new(orientation);
            for _ in 0..n {
                let row = p.len()?;
                let col = p.len()?;
                let rows = p.len()?;
                let cols = p.len()?;
                let matrix = p.mat(rows, cols)?;
                set.blocks.push(CouplingBlock { row, col, matrix });
            }
            if !set.consistent_with(&basis) {
                return Err(CacheError::Malformed(format!("{orientation} couplings do not fit the block table")));
            }
            couplings.push(set);
        }
        if p.pos != payload.len() {
            return Err(CacheError::Malformed("payload has trailing bytes".into()));
        }
        Ok(Self {
            fingerprint,
            ip,
            basis,
            couplings,
        })
    }

    pub fn load(path: &Path) -> Result<Self, CacheError> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// Written to a sibling temporary file and renamed into place, so
    /// readers never see a partial cache.
    pub fn store(&self, path: &Path) -> Result<(), CacheError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        fs::write(&tmp, self.to_bytes())?;
        fs::rename(&tmp, path)?;
        Ok(())
    }
}

pub fn cache_dir() -> PathBuf {
    std::env::var_os(CACHE_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(".boxtdse-cache"))
}

pub fn cache_path(dir: &Path, fingerprint: &[u8; 32]) -> PathBuf {
    dir.join(format!("basis-{}.bin", &hex(fingerprint)[..16]))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheStatus {
    Loaded,
    Built,
    /// The file existed but was unusable.
    Rebuilt(String),
}

/// Load the cache for `spec`, building and storing it when it is missing,
/// damaged, stale or `force` is set.
pub fn load_or_build(
    dir: &Path,
    spec: &SystemSpec,
    target_ip: Option<f64>,
    force: bool,
) -> Result<(BasisCache, PathBuf, CacheStatus), crate::CliError> {
    let fp = fingerprint(spec, target_ip);
    let path = cache_path(dir, &fp);
    let mut status = CacheStatus::Built;
    if !force && path.exists() {
        match BasisCache::load(&path) {
            Ok(c) if c.fingerprint == fp => return Ok((c, path, CacheStatus::Loaded)),
            Ok(_) => status = CacheStatus::Rebuilt("fingerprint mismatch".into()),
            Err(e) => status = CacheStatus::Rebuilt(e.to_string()),
        }
    }
    let spec = match (spec, target_ip) {
        (SystemSpec::Atom(a), Some(ip)) => SystemSpec::Atom(calibrated_atom(ip, a)?),
        _ => spec.clone(),
    };
    let built = build_system(&spec, spec.orientations())?;
    let cache = BasisCache::from_built(fp, built);
    cache.store(&path).map_err(|e| crate::CliError::Io(format!("{}: {e}", path.display())))?;
    Ok((cache, path, status))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> BasisCache {
        let spec = SystemSpec::TwoCenter(TwoCenterSpec::small_preset(2.0).with_lambda_max(1));
        let built = build_system(&spec, spec.orientations()).unwrap();
        BasisCache::from_built(fingerprint(&spec, None), built)
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let c = sample();
        let bytes = c.to_bytes();
        let back = BasisCache::from_bytes(&bytes).unwrap();
        assert_eq!(back.to_bytes(), bytes);
        assert_eq!(back.ip.to_bits(), c.ip.to_bits());
        assert_eq!(back.basis.n_states(), c.basis.n_states());
        assert_eq!(back.couplings.len(), 2);
    }

    #[test]
    fn damage_is_detected() {
        let bytes = sample().to_bytes();
        assert!(matches!(BasisCache::from_bytes(&bytes[..bytes.len() - 1]), Err(CacheError::Truncated)));
        assert!(matches!(BasisCache::from_bytes(&bytes[..100]), Err(CacheError::Truncated)));
        assert!(matches!(BasisCache::from_bytes(b"nope"), Err(CacheError::BadMagic)));
        let mut flipped = bytes.clone();
        flipped[HEADER_LEN + 3] ^= 1;
        assert!(matches!(BasisCache::from_bytes(&flipped), Err(CacheError::Checksum)));
        let mut version = bytes;
        version[8] = 9;
        assert!(matches!(BasisCache::from_bytes(&version), Err(CacheError::Version(9))));
    }

    #[test]
    fn fingerprint_tracks_every_field() {
        let a = SystemSpec::Atom(ModelAtomSpec::fast_preset(0.1));
        let b = SystemSpec::Atom(ModelAtomSpec::fast_preset(0.1).with_l_max(3));
        assert_eq!(fingerprint(&a, None), fingerprint(&a.clone(), None));
        assert_ne!(fingerprint(&a, None), fingerprint(&b, None));
        assert_ne!(fingerprint(&a, None), fingerprint(&a, Some(0.59)));
    }
}
