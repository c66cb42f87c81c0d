//! Binary weights file.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "AHWT"            magic
//! u32               format version
//! 10 × u32          encoder_hidden, projection, encoder_blocks, decoder_layers,
//!                   decoder_hidden, chord_vocab_size, prev_chord_embedding,
//!                   batch_size, patience, max_epochs
//! 3 × f64           dropout, learning_rate, grad_clip
//! u64               seed
//! u64               vocabulary hash
//! u32               tensor count
//! per tensor:       u32 name length, name (UTF-8), u32 rank, rank × u32 dims,
//!                   product(dims) × f32
//! 32 bytes          SHA-256 of everything above
//! ```

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::network::Params;
use super::{ModelConfig, ModelError, ModelWeights};
use crate::scalar::Scalar;

pub const WEIGHTS_MAGIC: &[u8; 4] = b"AHWT";
pub const WEIGHTS_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

fn put_u32(buf: &mut Vec<u8>, v: usize) -> Result<(), ModelError> {
    let v = u32::try_from(v).map_err(|_| ModelError::Format(format!("value {v} does not fit in 32 bits")))?;
    buf.extend_from_slice(&v.to_le_bytes());
    Ok(())
}

pub(crate) fn encode_weights<T: Scalar>(w: &ModelWeights<T>) -> Result<Vec<u8>, ModelError> {
    let c = &w.config;
    let mut buf = Vec::new();
    buf.extend_from_slice(WEIGHTS_MAGIC);
    buf.extend_from_slice(&WEIGHTS_VERSION.to_le_bytes());
    for v in [
        c.encoder_hidden,
        c.projection,
        c.encoder_blocks,
        c.decoder_layers,
        c.decoder_hidden,
        c.chord_vocab_size,
        c.prev_chord_embedding,
        c.batch_size,
        c.patience,
        c.max_epochs,
    ] {
        put_u32(&mut buf, v)?;
    }
    for v in [c.dropout, c.learning_rate, c.grad_clip] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.extend_from_slice(&c.seed.to_le_bytes());
    buf.extend_from_slice(&w.vocab_hash.to_le_bytes());
    let named = w.params.named();
    put_u32(&mut buf, named.len())?;
    for (name, t) in named {
        put_u32(&mut buf, name.len())?;
        buf.extend_from_slice(name.as_bytes());
        put_u32(&mut buf, t.shape.len())?;
        for &d in &t.shape {
            put_u32(&mut buf, d)?;
        }
        for &v in &t.data {
            buf.extend_from_slice(&v.to_f32_bits().to_le_bytes());
        }
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest);
    Ok(buf)
}

/// Writes `w` as 32-bit floats. Saving double-precision weights rounds them.
pub fn save_weights<T: Scalar>(w: &ModelWeights<T>, path: &Path) -> Result<(), ModelError> {
    w.check_finite()?;
    let bytes = encode_weights(w)?;
    fs::write(path, bytes).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], ModelError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(ModelError::Format(format!(
                "truncated while reading {what} at byte {}",
                self.pos
            ))),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn usize(&mut self, what: &str) -> Result<usize, ModelError> {
        Ok(self.u32(what)? as usize)
    }

    fn u64(&mut self, what: &str) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self, what: &str) -> Result<f64, ModelError> {
        Ok(f64::from_bits(self.u64(what)?))
    }
}

pub(crate) fn decode_weights<T: Scalar>(bytes: &[u8]) -> Result<ModelWeights<T>, ModelError> {
    if bytes.len() < 8 || &bytes[..4] != WEIGHTS_MAGIC {
        return Err(ModelError::Format("missing AHWT magic".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != WEIGHTS_VERSION {
        return Err(ModelError::UnsupportedVersion {
            found: version,
            expected: WEIGHTS_VERSION,
        });
    }
    if bytes.len() < 8 + DIGEST_LEN {
        return Err(ModelError::Format("truncated file".into()));
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body).as_slice() != digest {
        return Err(ModelError::Format(
            "checksum mismatch (file truncated or corrupted)".into(),
        ));
    }
    let mut r = Reader { bytes: body, pos: 8 };
    let mut counts = [0usize; 10];
    for c in counts.iter_mut() {
        *c = r.usize("config")?;
    }
    let config = ModelConfig {
        encoder_hidden: counts[0],
        projection: counts[1],
        encoder_blocks: counts[2],
        decoder_layers: counts[3],
        decoder_hidden: counts[4],
        chord_vocab_size: counts[5],
        prev_chord_embedding: counts[6],
        batch_size: counts[7],
        patience: counts[8],
        max_epochs: counts[9],
        dropout: r.f64("config")?,
        learning_rate: r.f64("config")?,
        grad_clip: r.f64("config")?,
        seed: r.u64("config")?,
    };
    config.validate()?;
    let vocab_hash = r.u64("vocabulary hash")?;

    // The template fixes the expected names and shapes.
    let mut params: Params<T> = Params::init(&config, &mut ChaCha8Rng::seed_from_u64(0));
    let names = params.tensor_names();
    let count = r.usize("tensor count")?;
    if count != names.len() {
        return Err(ModelError::Format(format!(
            "file holds {count} tensors, config implies {}",
            names.len()
        )));
    }
    for (expected, t) in names.iter().zip(params.tensors_mut()) {
        let len = r.usize("tensor name length")?;
        let name = std::str::from_utf8(r.take(len, "tensor name")?)
            .map_err(|_| ModelError::Format("tensor name is not UTF-8".into()))?;
        if name != expected {
            return Err(ModelError::Format(format!(
                "expected tensor `{expected}`, found `{name}`"
            )));
        }
        let rank = r.usize("rank")?;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.usize("dims")?);
        }
        if shape != t.shape {
            return Err(ModelError::Shape(format!(
                "tensor `{name}` has shape {shape:?}, config implies {:?}",
                t.shape
            )));
        }
        let raw = r.take(4 * t.data.len(), name)?;
        for (v, chunk) in t.data.iter_mut().zip(raw.chunks_exact(4)) {
            *v = T::from_f32_bits(u32::from_le_bytes(chunk.try_into().expect("4 bytes")));
        }
    }
    if r.pos != body.len() {
        return Err(ModelError::Format(format!("{} trailing bytes", body.len() - r.pos)));
    }
    let w = ModelWeights {
        config,
        vocab_hash,
        params,
    };
    w.check_finite()?;
    Ok(w)
}

pub fn load_weights(path: &Path) -> Result<ModelWeights<f32>, ModelError> {
    let bytes = fs::read(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_weights(&bytes)
}

/// Loads weights and refuses them unless they were trained against the
/// vocabulary with hash `vocab_hash`.
pub fn load_weights_expecting(path: &Path, vocab_hash: u64) -> Result<ModelWeights<f32>, ModelError> {
    let w = load_weights(path)?;
    if w.vocab_hash != vocab_hash {
        return Err(ModelError::VocabMismatch {
            expected: w.vocab_hash,
            found: vocab_hash,
        });
    }
    Ok(w)
}
