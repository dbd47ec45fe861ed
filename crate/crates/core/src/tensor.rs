//! Feature maps, domain-tagged batches and the `.fmt` binary tensor file.
//!
//! A [`FeatureMap`] is one instance of an `N x C x F x T` batch, stored as
//! 32-bit reals in `(c, f, t)` row-major order. Reductions over feature maps
//! elsewhere in the crate accumulate in `f64`.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

const FMT_MAGIC: &[u8; 4] = b"FMT1";

/// Source corpus of a batch item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DomainTag {
    Desed,
    Maestro,
}

impl DomainTag {
    pub fn as_byte(self) -> u8 {
        match self {
            DomainTag::Desed => 0,
            DomainTag::Maestro => 1,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(DomainTag::Desed),
            1 => Some(DomainTag::Maestro),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DomainTag::Desed => "DESED",
            DomainTag::Maestro => "MAESTRO",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "DESED" => Some(DomainTag::Desed),
            "MAESTRO" => Some(DomainTag::Maestro),
            _ => None,
        }
    }
}

impl fmt::Display for DomainTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Shape of a single feature map: (channels, frequency bins, frames).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Dims {
    pub channels: usize,
    pub freqs: usize,
    pub frames: usize,
}

impl Dims {
    pub fn new(channels: usize, freqs: usize, frames: usize) -> Self {
        Dims {
            channels,
            freqs,
            frames,
        }
    }

    pub fn len(&self) -> usize {
        self.channels * self.freqs * self.frames
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.channels, self.freqs, self.frames)
    }
}

/// A `C x F x T` array of finite 32-bit reals.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    dims: Dims,
    data: Vec<f32>,
}

impl FeatureMap {
    /// Wraps `data` laid out as `(c, f, t)` row-major.
    pub fn new(channels: usize, freqs: usize, frames: usize, data: Vec<f32>) -> Result<Self> {
        let dims = Dims::new(channels, freqs, frames);
        if channels == 0 || freqs == 0 || frames == 0 {
            return Err(Error::InvalidParameter(format!(
                "feature map dims must be positive, got {dims}"
            )));
        }
        if data.len() != dims.len() {
            return Err(Error::shape(
                format!("{} values for {dims}", dims.len()),
                format!("{} values", data.len()),
            ));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "non-finite value at flat index {pos}"
            )));
        }
        Ok(FeatureMap { dims, data })
    }

    pub fn filled(channels: usize, freqs: usize, frames: usize, value: f32) -> Result<Self> {
        Self::new(channels, freqs, frames, vec![value; channels * freqs * frames])
    }

    /// Builds a map by evaluating `f(c, f, t)` at every position.
    pub fn from_fn(
        channels: usize,
        freqs: usize,
        frames: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(channels * freqs * frames);
        for c in 0..channels {
            for fi in 0..freqs {
                for t in 0..frames {
                    data.push(f(c, fi, t));
                }
            }
        }
        Self::new(channels, freqs, frames, data)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn channels(&self) -> usize {
        self.dims.channels
    }

    pub fn freqs(&self) -> usize {
        self.dims.freqs
    }

    pub fn frames(&self) -> usize {
        self.dims.frames
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn index(&self, c: usize, f: usize, t: usize) -> usize {
        (c * self.dims.freqs + f) * self.dims.frames + t
    }

    #[inline]
    pub fn get(&self, c: usize, f: usize, t: usize) -> f32 {
        self.data[self.index(c, f, t)]
    }

    /// The contiguous time row for channel `c`, bin `f`.
    pub fn row(&self, c: usize, f: usize) -> &[f32] {
        let start = self.index(c, f, 0);
        &self.data[start..start + self.dims.frames]
    }

    /// Applies `f` elementwise, keeping the shape. Fails if `f` produces a
    /// non-finite value.
    pub fn map(&self, mut f: impl FnMut(usize, usize, usize, f32) -> f32) -> Result<Self> {
        let d = self.dims;
        Self::from_fn(d.channels, d.freqs, d.frames, |c, fi, t| {
            f(c, fi, t, self.get(c, fi, t))
        })
    }
}

/// An ordered, shape-homogeneous list of domain-tagged feature maps.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    items: Vec<(FeatureMap, DomainTag)>,
}

impl Batch {
    pub fn items(&self) -> &[(FeatureMap, DomainTag)] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn dims(&self) -> Dims {
        self.items[0].0.dims()
    }

    pub fn maps(&self) -> impl Iterator<Item = &FeatureMap> {
        self.items.iter().map(|(m, _)| m)
    }

    pub fn tags(&self) -> impl Iterator<Item = DomainTag> + '_ {
        self.items.iter().map(|(_, d)| *d)
    }

    pub fn into_items(self) -> Vec<(FeatureMap, DomainTag)> {
        self.items
    }

    /// Builds a batch from already paired items, checking the batch invariants.
    pub fn from_items(items: Vec<(FeatureMap, DomainTag)>) -> Result<Self> {
        let Some(first) = items.first() else {
            return Err(Error::EmptyBatch);
        };
        let dims = first.0.dims();
        for (m, _) in &items[1..] {
            if m.dims() != dims {
                return Err(Error::shape(dims.to_string(), m.dims().to_string()));
            }
        }
        Ok(Batch { items })
    }

    /// Writes the batch as an `.fmt` file.
    pub fn write_fmt(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(file);
        self.write_fmt_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn write_fmt_to(&self, w: &mut impl Write) -> Result<()> {
        let d = self.dims();
        w.write_all(FMT_MAGIC)?;
        for v in [self.len(), d.channels, d.freqs, d.frames] {
            let v = u32::try_from(v)
                .map_err(|_| Error::InvalidParameter(format!("dimension {v} exceeds u32")))?;
            w.write_all(&v.to_le_bytes())?;
        }
        for (m, _) in &self.items {
            for v in m.data() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        let tags: Vec<u8> = self.tags().map(DomainTag::as_byte).collect();
        w.write_all(&tags)?;
        Ok(())
    }

    pub fn read_fmt(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::read_fmt_from(&mut bytes.as_slice()).map_err(|e| match e {
            Error::Parse { line, msg, .. } => Error::parse(path, line, msg),
            other => other,
        })
    }

    /// Decodes an `.fmt` stream. Parse errors report line 0 (binary file).
    pub fn read_fmt_from(r: &mut impl Read) -> Result<Self> {
        let bad = |msg: String| Error::parse(Path::new("<fmt>"), 0, msg);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)
            .map_err(|_| bad("truncated header".into()))?;
        if &magic != FMT_MAGIC {
            return Err(bad(format!("bad magic {magic:?}")));
        }
        let mut header = [0usize; 4];
        for h in header.iter_mut() {
            let mut b = [0u8; 4];
            r.read_exact(&mut b).map_err(|_| bad("truncated header".into()))?;
            *h = u32::from_le_bytes(b) as usize;
        }
        let [n, c, f, t] = header;
        if n == 0 {
            return Err(Error::EmptyBatch);
        }
        let per_item = c * f * t;
        let mut buf = vec![0u8; n * per_item * 4];
        r.read_exact(&mut buf)
            .map_err(|_| bad("truncated tensor payload".into()))?;
        let mut tags = vec![0u8; n];
        r.read_exact(&mut tags)
            .map_err(|_| bad("truncated domain tags".into()))?;
        let mut rest = Vec::new();
        r.read_to_end(&mut rest)?;
        if !rest.is_empty() {
            return Err(bad(format!("{} trailing bytes", rest.len())));
        }

        let mut items = Vec::with_capacity(n);
        for (i, chunk) in buf.chunks_exact(per_item * 4).enumerate() {
            let data: Vec<f32> = chunk
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            let map = FeatureMap::new(c, f, t, data)?;
            let tag = DomainTag::from_byte(tags[i])
                .ok_or_else(|| bad(format!("unknown domain tag {} for item {i}", tags[i])))?;
            items.push((map, tag));
        }
        Batch::from_items(items)
    }
}

/// Pairs `maps` with `tags` into a batch, preserving order.
pub fn make_batch(maps: Vec<FeatureMap>, tags: Vec<DomainTag>) -> Result<Batch> {
    if maps.len() != tags.len() {
        return Err(Error::shape(
            format!("{} domain tags", maps.len()),
            format!("{} domain tags", tags.len()),
        ));
    }
    Batch::from_items(maps.into_iter().zip(tags).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(c: usize, f: usize, t: usize) -> FeatureMap {
        FeatureMap::from_fn(c, f, t, |ci, fi, ti| (ci * 100 + fi * 10 + ti) as f32).unwrap()
    }

    #[test]
    fn make_batch_keeps_order() {
        let b = make_batch(
            vec![ramp(1, 4, 8), ramp(1, 4, 8)],
            vec![DomainTag::Desed, DomainTag::Maestro],
        )
        .unwrap();
        assert_eq!(b.len(), 2);
        assert_eq!(
            b.tags().collect::<Vec<_>>(),
            vec![DomainTag::Desed, DomainTag::Maestro]
        );
    }

    #[test]
    fn make_batch_rejects_mixed_shapes() {
        let err = make_batch(
            vec![ramp(1, 4, 8), ramp(1, 4, 9)],
            vec![DomainTag::Desed, DomainTag::Maestro],
        )
        .unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch { .. }));
    }

    #[test]
    fn make_batch_rejects_empty() {
        assert!(matches!(
            make_batch(vec![], vec![]).unwrap_err(),
            Error::EmptyBatch
        ));
    }

    #[test]
    fn feature_map_rejects_nan_and_zero_dims() {
        assert!(FeatureMap::new(1, 1, 2, vec![0.0, f32::NAN]).is_err());
        assert!(FeatureMap::new(0, 1, 1, vec![]).is_err());
        assert!(FeatureMap::new(1, 2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn fmt_layout_is_bit_exact() {
        let m = FeatureMap::new(1, 1, 2, vec![1.0, -2.5]).unwrap();
        let b = make_batch(vec![m], vec![DomainTag::Maestro]).unwrap();
        let mut out = Vec::new();
        b.write_fmt_to(&mut out).unwrap();

        let mut expected = b"FMT1".to_vec();
        for v in [1u32, 1, 1, 2] {
            expected.extend_from_slice(&v.to_le_bytes());
        }
        expected.extend_from_slice(&1.0f32.to_le_bytes());
        expected.extend_from_slice(&(-2.5f32).to_le_bytes());
        expected.push(1);
        assert_eq!(out, expected);

        let back = Batch::read_fmt_from(&mut out.as_slice()).unwrap();
        assert_eq!(back, b);
    }

    #[test]
    fn fmt_rejects_corruption() {
        let b = make_batch(vec![ramp(1, 2, 3)], vec![DomainTag::Desed]).unwrap();
        let mut out = Vec::new();
        b.write_fmt_to(&mut out).unwrap();

        let mut bad_magic = out.clone();
        bad_magic[0] = b'X';
        assert!(Batch::read_fmt_from(&mut bad_magic.as_slice()).is_err());

        let truncated = &out[..out.len() - 2];
        assert!(Batch::read_fmt_from(&mut &truncated[..]).is_err());

        let mut bad_tag = out.clone();
        *bad_tag.last_mut().unwrap() = 7;
        assert!(Batch::read_fmt_from(&mut bad_tag.as_slice()).is_err());
    }
}
