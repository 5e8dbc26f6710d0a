//! Little-endian binary model files. The byte layout is documented in
//! `docs/model-format.md`.

use std::io::{Read, Write};
use std::path::Path;

use super::{FeatureConfig, LinearTextModel, LintextError, Loss, TrainConfig};

pub const MAGIC: [u8; 4] = *b"QDLM";
pub const FORMAT_VERSION: u32 = 1;

pub fn write_model<W: Write>(model: &LinearTextModel, w: &mut W) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(64 + 4 * (model.embeddings.len() + model.output.len() + model.rows.len()));
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());

    let fc = &model.features;
    for v in [fc.char_ngram_min, fc.char_ngram_max, fc.word_ngram_min, fc.word_ngram_max] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    buf.push(u8::from(fc.use_char));
    buf.push(u8::from(fc.use_word));
    buf.extend_from_slice(&fc.hash_buckets.to_le_bytes());
    buf.extend_from_slice(&fc.embed_dim.to_le_bytes());

    let tc = &model.train;
    buf.push(match tc.loss {
        Loss::Softmax => 0,
        Loss::Hinge => 1,
    });
    buf.extend_from_slice(&tc.learning_rate.to_le_bytes());
    buf.extend_from_slice(&tc.epochs.to_le_bytes());
    buf.extend_from_slice(&tc.seed.to_le_bytes());
    buf.extend_from_slice(&tc.l2.to_le_bytes());
    buf.push(u8::from(tc.lr_decay));

    buf.extend_from_slice(&(model.labels.len() as u32).to_le_bytes());
    for label in &model.labels {
        buf.extend_from_slice(&(label.len() as u32).to_le_bytes());
        buf.extend_from_slice(label.as_bytes());
    }

    buf.extend_from_slice(&(model.rows.len() as u32).to_le_bytes());
    for r in &model.rows {
        buf.extend_from_slice(&r.to_le_bytes());
    }
    for v in model.embeddings.iter().chain(&model.output) {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)
}

struct Cursor<'a> {
    bytes: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], LintextError> {
        if self.bytes.len() < n {
            return Err(LintextError::Truncated);
        }
        let (head, tail) = self.bytes.split_at(n);
        self.bytes = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8, LintextError> {
        Ok(self.take(1)?[0])
    }

    fn flag(&mut self) -> Result<bool, LintextError> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(LintextError::Corrupt(format!("invalid flag byte {b}"))),
        }
    }

    fn u32(&mut self) -> Result<u32, LintextError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, LintextError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, LintextError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>, LintextError> {
        let bytes = self.take(n.checked_mul(4).ok_or(LintextError::Truncated)?)?;
        Ok(bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

/// Parses a model from its serialized bytes.
pub fn read_model_bytes(bytes: &[u8]) -> Result<LinearTextModel, LintextError> {
    let mut c = Cursor { bytes };
    let magic: [u8; 4] = c.take(4)?.try_into().unwrap();
    if magic != MAGIC {
        return Err(LintextError::BadMagic(magic));
    }
    let version = c.u32()?;
    if version != FORMAT_VERSION {
        return Err(LintextError::UnsupportedVersion(version));
    }
    let features = FeatureConfig {
        char_ngram_min: c.u32()?,
        char_ngram_max: c.u32()?,
        word_ngram_min: c.u32()?,
        word_ngram_max: c.u32()?,
        use_char: c.flag()?,
        use_word: c.flag()?,
        hash_buckets: c.u32()?,
        embed_dim: c.u32()?,
    };
    let loss = match c.u8()? {
        0 => Loss::Softmax,
        1 => Loss::Hinge,
        b => return Err(LintextError::Corrupt(format!("unknown loss tag {b}"))),
    };
    let train = TrainConfig {
        loss,
        learning_rate: c.f32()?,
        epochs: c.u32()?,
        seed: c.u64()?,
        l2: c.f32()?,
        lr_decay: c.flag()?,
    };
    if features.embed_dim == 0 || features.hash_buckets == 0 {
        return Err(LintextError::Corrupt("zero embedding dimension or hash space".into()));
    }

    let n_labels = c.u32()? as usize;
    let mut labels = Vec::with_capacity(n_labels.min(1 << 16));
    for _ in 0..n_labels {
        let len = c.u32()? as usize;
        let raw = c.take(len)?;
        let s = std::str::from_utf8(raw).map_err(|e| LintextError::Corrupt(format!("label is not UTF-8: {e}")))?;
        labels.push(s.to_string());
    }

    let n_rows = c.u32()? as usize;
    let dim = features.embed_dim as usize;
    let mut rows = Vec::with_capacity(n_rows.min(1 << 24));
    for _ in 0..n_rows {
        rows.push(c.u32()?);
    }
    let embeddings = c.f32s(n_rows.checked_mul(dim).ok_or(LintextError::Truncated)?)?;
    let output = c.f32s(n_labels * dim)?;
    if !c.bytes.is_empty() {
        return Err(LintextError::Corrupt(format!("{} trailing bytes", c.bytes.len())));
    }
    LinearTextModel::from_parts(features, train, labels, rows, embeddings, output)
}

pub fn read_model<R: Read>(r: &mut R) -> Result<LinearTextModel, LintextError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(|source| LintextError::Io {
        path: "<reader>".into(),
        source,
    })?;
    read_model_bytes(&bytes)
}

pub fn save_model(model: &LinearTextModel, path: impl AsRef<Path>) -> Result<(), LintextError> {
    let path = path.as_ref();
    let io_err = |source| LintextError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut buf = Vec::new();
    write_model(model, &mut buf).map_err(io_err)?;
    std::fs::write(path, buf).map_err(io_err)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<LinearTextModel, LintextError> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|source| LintextError::Io {
        path: path.display().to_string(),
        source,
    })?;
    read_model_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_model() -> LinearTextModel {
        let fc = FeatureConfig { embed_dim: 3, hash_buckets: 1 << 16, ..Default::default() };
        let tc = TrainConfig { seed: 42, loss: Loss::Hinge, l2: 1e-4, ..Default::default() };
        LinearTextModel::from_parts(
            fc,
            tc,
            vec!["DA".into(), "MSA".into()],
            vec![7, 300, 65535],
            (0..9).map(|i| i as f32 / 7.0).collect(),
            vec![0.5, -0.25, 1e-30, f32::MIN_POSITIVE, -3.0, 2.0],
        )
        .unwrap()
    }

    fn bytes(m: &LinearTextModel) -> Vec<u8> {
        let mut b = Vec::new();
        write_model(m, &mut b).unwrap();
        b
    }

    #[test]
    fn round_trip_is_exact() {
        let m = small_model();
        let b = bytes(&m);
        let back = read_model_bytes(&b).unwrap();
        assert_eq!(back, m);
        assert_eq!(bytes(&back), b);
    }

    #[test]
    fn header_errors_are_distinct() {
        let b = bytes(&small_model());

        let mut wrong_magic = b.clone();
        wrong_magic[0] = b'X';
        assert!(matches!(read_model_bytes(&wrong_magic), Err(LintextError::BadMagic(_))));

        let mut wrong_version = b.clone();
        wrong_version[4..8].copy_from_slice(&7u32.to_le_bytes());
        assert!(matches!(read_model_bytes(&wrong_version), Err(LintextError::UnsupportedVersion(7))));

        for cut in [0, 3, 10, 40, b.len() - 1] {
            let r = read_model_bytes(&b[..cut]);
            assert!(matches!(r, Err(LintextError::Truncated) | Err(LintextError::BadMagic(_))), "cut {cut}: {r:?}");
        }
        assert!(matches!(read_model_bytes(&b[..b.len() - 1]), Err(LintextError::Truncated)));

        let mut trailing = b.clone();
        trailing.push(0);
        assert!(matches!(read_model_bytes(&trailing), Err(LintextError::Corrupt(_))));
    }
}
