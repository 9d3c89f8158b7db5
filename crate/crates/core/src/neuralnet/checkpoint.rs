//! Binary checkpoint: header, provenance, then named little-endian `f32`
//! parameter blocks.
//!
//! ```text
//! magic[8] version:u32 d_in:u32 d_h:u32 flags:u32
//! config_len:u32 config(JSON)
//! n_blocks:u32 { name_len:u32 name len:u64 f32[len] }*
//! ```

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use super::params::{BiGruAttParams, ResetPlacement, BLOCK_NAMES};
use super::train::TrainConfig;
use super::NnError;

pub const CHECKPOINT_MAGIC: [u8; 8] = *b"BGRUATT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

const FLAG_RESET_BEFORE: u32 = 1;
const FLAG_F64: u32 = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub params: BiGruAttParams<f32>,
    /// Configuration (including seed) that produced the parameters.
    pub config: TrainConfig,
    /// Whether training ran in 64-bit floats; the stored blocks are 32-bit
    /// either way.
    pub trained_f64: bool,
}

fn err(path: &Path, message: impl Into<String>) -> NnError {
    NnError::Checkpoint {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn encode(ck: &Checkpoint) -> Result<Vec<u8>, serde_json::Error> {
    let p = &ck.params;
    let mut out = Vec::with_capacity(64 + 4 * p.num_params());
    out.extend_from_slice(&CHECKPOINT_MAGIC);
    let mut flags = 0;
    if p.reset == ResetPlacement::BeforeMatmul {
        flags |= FLAG_RESET_BEFORE;
    }
    if ck.trained_f64 {
        flags |= FLAG_F64;
    }
    for v in [CHECKPOINT_VERSION, p.d_in() as u32, p.d_h() as u32, flags] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let config = serde_json::to_vec(&ck.config)?;
    out.extend_from_slice(&(config.len() as u32).to_le_bytes());
    out.extend_from_slice(&config);
    out.extend_from_slice(&(BLOCK_NAMES.len() as u32).to_le_bytes());
    for (name, block) in BLOCK_NAMES.iter().zip(p.blocks()) {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(block.len() as u64).to_le_bytes());
        for x in block {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    Ok(out)
}

/// Writes to a sibling temporary file, then renames over `path`.
pub fn save_checkpoint(ck: &Checkpoint, path: impl AsRef<Path>) -> Result<(), NnError> {
    let path = path.as_ref();
    ck.params.check_shapes().map_err(|m| err(path, m))?;
    let bytes = encode(ck).map_err(|e| err(path, e.to_string()))?;
    let io = |e| NnError::Io {
        path: path.to_path_buf(),
        source: e,
    };
    let mut tmp_name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(&bytes).map_err(io)?;
    f.sync_all().map_err(io)?;
    drop(f);
    fs::rename(&tmp, path).map_err(io)
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
    path: PathBuf,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], NnError> {
        if self.data.len() - self.pos < n {
            return Err(err(&self.path, format!("truncated at byte {}", self.pos)));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, NnError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, NnError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint, NnError> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| NnError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut r = Reader {
        data: &data,
        pos: 0,
        path: path.to_path_buf(),
    };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(err(path, "not a checkpoint (bad magic)"));
    }
    let version = r.u32()?;
    if version != CHECKPOINT_VERSION {
        return Err(err(path, format!("unsupported version {version}")));
    }
    let d_in = r.u32()? as usize;
    let d_h = r.u32()? as usize;
    let flags = r.u32()?;
    if flags & !(FLAG_RESET_BEFORE | FLAG_F64) != 0 {
        return Err(err(path, format!("unknown flags {flags:#x}")));
    }
    let config_len = r.u32()? as usize;
    let config: TrainConfig =
        serde_json::from_slice(r.take(config_len)?).map_err(|e| err(path, format!("config: {e}")))?;

    let mut params = BiGruAttParams::<f32>::zeros(d_in, d_h);
    params.reset = if flags & FLAG_RESET_BEFORE != 0 {
        ResetPlacement::BeforeMatmul
    } else {
        ResetPlacement::AfterMatmul
    };
    let n_blocks = r.u32()? as usize;
    if n_blocks != BLOCK_NAMES.len() {
        return Err(err(path, format!("{n_blocks} blocks, expected {}", BLOCK_NAMES.len())));
    }
    for (name, block) in BLOCK_NAMES.iter().zip(params.blocks_mut()) {
        let name_len = r.u32()? as usize;
        let found = r.take(name_len)?;
        if found != name.as_bytes() {
            return Err(err(
                path,
                format!("expected block {name}, found {:?}", String::from_utf8_lossy(found)),
            ));
        }
        let len = r.u64()? as usize;
        if len != block.len() {
            return Err(err(path, format!("block {name}: {len} values, expected {}", block.len())));
        }
        let bytes = r.take(len.checked_mul(4).ok_or_else(|| err(path, "block too large"))?)?;
        for (x, b) in block.iter_mut().zip(bytes.chunks_exact(4)) {
            *x = f32::from_le_bytes(b.try_into().unwrap());
        }
    }
    if r.pos != data.len() {
        return Err(err(path, "trailing bytes"));
    }
    if !params.is_finite() {
        return Err(err(path, "non-finite parameter"));
    }
    Ok(Checkpoint {
        params,
        config,
        trained_f64: flags & FLAG_F64 != 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample(seed: u64, reset: ResetPlacement) -> Checkpoint {
        let params = BiGruAttParams::<f32>::init(5, 3, reset, &mut ChaCha8Rng::seed_from_u64(seed));
        Checkpoint {
            params,
            config: TrainConfig {
                seed,
                ..TrainConfig::default()
            },
            trained_f64: seed % 2 == 0,
        }
    }

    fn same_bits(a: &BiGruAttParams<f32>, b: &BiGruAttParams<f32>) -> bool {
        a.blocks()
            .iter()
            .zip(b.blocks())
            .all(|(x, y)| x.len() == y.len() && x.iter().zip(y.iter()).all(|(u, v)| u.to_bits() == v.to_bits()))
    }

    #[test]
    fn round_trip_and_no_temp_left() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        let ck = sample(3, ResetPlacement::BeforeMatmul);
        save_checkpoint(&ck, &path).unwrap();
        let back = load_checkpoint(&path).unwrap();
        assert_eq!(back, ck);
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn corrupt_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.ckpt");
        save_checkpoint(&sample(1, ResetPlacement::AfterMatmul), &path).unwrap();
        let good = fs::read(&path).unwrap();

        fs::write(&path, &good[..good.len() - 3]).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(NnError::Checkpoint { .. })));
        let mut bad = good.clone();
        bad[0] = b'X';
        fs::write(&path, &bad).unwrap();
        assert!(matches!(load_checkpoint(&path), Err(NnError::Checkpoint { .. })));
        let mut extra = good.clone();
        extra.push(0);
        fs::write(&path, &extra).unwrap();
        assert!(load_checkpoint(&path).is_err());
        assert!(matches!(load_checkpoint(dir.path().join("missing")), Err(NnError::Io { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn random_payloads_round_trip_bit_exactly(seed in any::<u64>(), bits in proptest::collection::vec(any::<u32>(), 4)) {
            let mut ck = sample(seed, ResetPlacement::AfterMatmul);
            // arbitrary finite bit patterns, including subnormals and -0.0
            for (x, b) in ck.params.u_p.iter_mut().zip(&bits) {
                let f = f32::from_bits(*b);
                *x = if f.is_finite() { f } else { -0.0 };
            }
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("c");
            save_checkpoint(&ck, &path).unwrap();
            let back = load_checkpoint(&path).unwrap();
            prop_assert!(same_bits(&back.params, &ck.params));
            prop_assert_eq!(back.config, ck.config);
        }
    }
}
