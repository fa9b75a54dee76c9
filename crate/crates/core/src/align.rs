//! Feature-space alignment math: cosine similarity, per-location argmax
//! correspondence between feature grids, and the channel-reduction rule.
//!
//! Grids load from a small binary container: `magic, H, W, D` as 32-bit
//! little-endian unsigned integers followed by `H*W*D` 32-bit little-endian
//! floats in row-major order.

use std::fs;
use std::path::Path;

use thiserror::Error;

/// Container magic: the bytes `FGRD` as a little-endian u32.
pub const FEATURE_GRID_MAGIC: u32 = u32::from_le_bytes(*b"FGRD");

#[derive(Debug, Error)]
pub enum AlignError {
    #[error("vector has zero norm")]
    ZeroVector,
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("argument must be at least 1")]
    NonPositive,
    #[error("non-finite feature value")]
    NonFinite,
    #[error("grid shape is not rectangular")]
    RaggedGrid,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: invalid feature-grid container: {msg}")]
    Container { path: String, msg: String },
}

/// A feature vector with at least one finite component.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureVector {
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self, AlignError> {
        if values.is_empty() {
            return Err(AlignError::NonPositive);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(AlignError::NonFinite);
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Cosine similarity `a·b / (‖a‖‖b‖)`, clamped to [-1, 1] against rounding.
pub fn cosine_similarity(a: &FeatureVector, b: &FeatureVector) -> Result<f64, AlignError> {
    if a.len() != b.len() {
        return Err(AlignError::DimensionMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    cosine_raw(a.values(), b.values())
}

fn cosine_raw(a: &[f64], b: &[f64]) -> Result<f64, AlignError> {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(AlignError::ZeroVector);
    }
    // sqrt(na * nb) keeps self-similarity exactly 1 (sqrt(x*x) == x in IEEE
    // arithmetic); fall back to the factored form if the product underflows.
    let mut denom = (na * nb).sqrt();
    if denom == 0.0 || !denom.is_finite() {
        denom = na.sqrt() * nb.sqrt();
    }
    Ok((dot / denom).clamp(-1.0, 1.0))
}

/// An H x W grid of D-dimensional feature vectors, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureGrid {
    height: usize,
    width: usize,
    depth: usize,
    data: Vec<f64>,
}

impl FeatureGrid {
    pub fn new(
        height: usize,
        width: usize,
        depth: usize,
        data: Vec<f64>,
    ) -> Result<Self, AlignError> {
        if height == 0 || width == 0 || depth == 0 {
            return Err(AlignError::NonPositive);
        }
        if data.len() != height * width * depth {
            return Err(AlignError::RaggedGrid);
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(AlignError::NonFinite);
        }
        Ok(Self {
            height,
            width,
            depth,
            data,
        })
    }

    /// Build from nested rows of vectors, checking rectangularity and
    /// uniform dimensionality.
    pub fn from_rows(rows: Vec<Vec<FeatureVector>>) -> Result<Self, AlignError> {
        let height = rows.len();
        let width = rows.first().map(|r| r.len()).unwrap_or(0);
        if height == 0 || width == 0 {
            return Err(AlignError::NonPositive);
        }
        let depth = rows[0][0].len();
        let mut data = Vec::with_capacity(height * width * depth);
        for row in &rows {
            if row.len() != width {
                return Err(AlignError::RaggedGrid);
            }
            for v in row {
                if v.len() != depth {
                    return Err(AlignError::DimensionMismatch {
                        left: depth,
                        right: v.len(),
                    });
                }
                data.extend_from_slice(v.values());
            }
        }
        Self::new(height, width, depth, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn cells(&self) -> usize {
        self.height * self.width
    }

    /// Feature vector at flat cell index (row-major).
    pub fn cell(&self, flat: usize) -> &[f64] {
        let start = flat * self.depth;
        &self.data[start..start + self.depth]
    }

    pub fn at(&self, row: usize, col: usize) -> &[f64] {
        self.cell(row * self.width + col)
    }
}

/// For each cell of `a`, the flat index of the most cosine-similar cell of
/// `b` and that similarity. Ties resolve to the lowest flat index. Grids may
/// differ in H x W but must share D.
pub fn correspondence_map(
    a: &FeatureGrid,
    b: &FeatureGrid,
) -> Result<Vec<(usize, f64)>, AlignError> {
    if a.depth() != b.depth() {
        return Err(AlignError::DimensionMismatch {
            left: a.depth(),
            right: b.depth(),
        });
    }
    let mut out = Vec::with_capacity(a.cells());
    for i in 0..a.cells() {
        let va = a.cell(i);
        let mut best = (0usize, f64::NEG_INFINITY);
        for j in 0..b.cells() {
            let sim = cosine_raw(va, b.cell(j))?;
            if sim > best.1 {
                best = (j, sim);
            }
        }
        out.push(best);
    }
    Ok(out)
}

/// Channel count after reduction: `max(1, in_channels / factor)` with floor
/// division.
pub fn channel_reduction(in_channels: usize, factor: usize) -> Result<usize, AlignError> {
    if in_channels < 1 || factor < 1 {
        return Err(AlignError::NonPositive);
    }
    Ok((in_channels / factor).max(1))
}

pub fn save_feature_grid(grid: &FeatureGrid, path: impl AsRef<Path>) -> Result<(), AlignError> {
    let path = path.as_ref();
    let mut bytes = Vec::with_capacity(16 + grid.data.len() * 4);
    for header in [
        FEATURE_GRID_MAGIC,
        grid.height as u32,
        grid.width as u32,
        grid.depth as u32,
    ] {
        bytes.extend_from_slice(&header.to_le_bytes());
    }
    for &v in &grid.data {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| AlignError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

pub fn load_feature_grid(path: impl AsRef<Path>) -> Result<FeatureGrid, AlignError> {
    let path = path.as_ref();
    let container = |msg: &str| AlignError::Container {
        path: path.display().to_string(),
        msg: msg.to_string(),
    };
    let bytes = fs::read(path).map_err(|e| AlignError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    if bytes.len() < 16 {
        return Err(container("file shorter than header"));
    }
    let word = |i: usize| u32::from_le_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]);
    if word(0) != FEATURE_GRID_MAGIC {
        return Err(container("bad magic"));
    }
    let (h, w, d) = (word(4) as usize, word(8) as usize, word(12) as usize);
    let expected = 16
        + h.checked_mul(w)
            .and_then(|hw| hw.checked_mul(d))
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| container("dimensions overflow"))?;
    if bytes.len() != expected {
        return Err(container("payload length does not match dimensions"));
    }
    let data: Vec<f64> = bytes[16..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    FeatureGrid::new(h, w, d, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fv(values: &[f64]) -> FeatureVector {
        FeatureVector::new(values.to_vec()).unwrap()
    }

    #[test]
    fn cosine_basics() {
        assert_eq!(
            cosine_similarity(&fv(&[1.0, 0.0, 0.0]), &fv(&[0.0, 1.0, 0.0])).unwrap(),
            0.0
        );
        assert_eq!(
            cosine_similarity(&fv(&[1.0, 2.0, 3.0]), &fv(&[2.0, 4.0, 6.0])).unwrap(),
            1.0
        );
        let s = cosine_similarity(&fv(&[1.0, 1.0]), &fv(&[1.0, 0.0])).unwrap();
        assert!((s - 2f64.sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn cosine_error_paths() {
        assert!(matches!(
            cosine_similarity(&fv(&[0.0, 0.0]), &fv(&[1.0, 0.0])),
            Err(AlignError::ZeroVector)
        ));
        assert!(matches!(
            cosine_similarity(&fv(&[1.0]), &fv(&[1.0, 0.0])),
            Err(AlignError::DimensionMismatch { .. })
        ));
        assert!(FeatureVector::new(vec![f64::NAN]).is_err());
        assert!(FeatureVector::new(vec![]).is_err());
    }

    #[test]
    fn channel_reduction_examples() {
        assert_eq!(channel_reduction(256, 4).unwrap(), 64);
        assert_eq!(channel_reduction(3, 4).unwrap(), 1);
        assert_eq!(channel_reduction(7, 2).unwrap(), 3);
        assert_eq!(channel_reduction(5, 1).unwrap(), 5);
        assert!(matches!(
            channel_reduction(0, 4),
            Err(AlignError::NonPositive)
        ));
        assert!(matches!(
            channel_reduction(4, 0),
            Err(AlignError::NonPositive)
        ));
    }

    fn random_grid(h: usize, w: usize, d: usize, seed: u64) -> FeatureGrid {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..h * w * d)
            .map(|_| rng.random::<f64>() * 2.0 - 1.0 + 0.01)
            .collect();
        FeatureGrid::new(h, w, d, data).unwrap()
    }

    #[test]
    fn identity_correspondence() {
        let g = random_grid(4, 4, 8, 60);
        let map = correspondence_map(&g, &g).unwrap();
        for (i, &(j, sim)) in map.iter().enumerate() {
            assert_eq!(i, j);
            assert_eq!(sim, 1.0);
        }
    }

    #[test]
    fn recovers_planted_permutation() {
        let g = random_grid(3, 5, 6, 61);
        // Permute cells reversibly.
        let cells = g.cells();
        let perm: Vec<usize> = (0..cells).map(|i| (i * 7 + 3) % cells).collect();
        let mut data = vec![0.0; cells * g.depth()];
        for (i, &p) in perm.iter().enumerate() {
            data[p * g.depth()..(p + 1) * g.depth()].copy_from_slice(g.cell(i));
        }
        let permuted = FeatureGrid::new(3, 5, 6, data).unwrap();
        let map = correspondence_map(&g, &permuted).unwrap();
        for (i, &(j, sim)) in map.iter().enumerate() {
            assert_eq!(j, perm[i]);
            assert!(sim > 1.0 - 1e-12);
        }
    }

    #[test]
    fn matches_exhaustive_argmax() {
        let a = random_grid(4, 4, 8, 62);
        let b = random_grid(4, 4, 8, 63);
        let map = correspondence_map(&a, &b).unwrap();
        for (i, mapped) in map.iter().enumerate() {
            let mut best = (0usize, f64::NEG_INFINITY);
            for j in 0..b.cells() {
                let va = FeatureVector::new(a.cell(i).to_vec()).unwrap();
                let vb = FeatureVector::new(b.cell(j).to_vec()).unwrap();
                let sim = cosine_similarity(&va, &vb).unwrap();
                if sim > best.1 {
                    best = (j, sim);
                }
            }
            assert_eq!(mapped, &best);
        }
    }

    #[test]
    fn container_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("grid.fgrd");
        // Values representable in f32 so the round trip is exact.
        let data: Vec<f64> = (0..2 * 3 * 4).map(|i| (i as f32 * 0.25) as f64).collect();
        let grid = FeatureGrid::new(2, 3, 4, data).unwrap();
        save_feature_grid(&grid, &path).unwrap();
        let back = load_feature_grid(&path).unwrap();
        assert_eq!(grid, back);
    }

    #[test]
    fn container_rejects_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.fgrd");
        std::fs::write(&path, b"nope").unwrap();
        assert!(matches!(
            load_feature_grid(&path),
            Err(AlignError::Container { .. })
        ));

        let grid = FeatureGrid::new(1, 1, 2, vec![1.0, 2.0]).unwrap();
        save_feature_grid(&grid, &path).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 1);
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            load_feature_grid(&path),
            Err(AlignError::Container { .. })
        ));
    }

    proptest! {
        #[test]
        fn cosine_scale_invariance(
            v in proptest::collection::vec(-10.0f64..10.0, 1..16),
            w_extra in -10.0f64..10.0,
            lambda in 0.001f64..100.0,
            mu in 0.001f64..100.0,
        ) {
            let mut w = v.clone();
            w.reverse();
            w.push(w_extra);
            w.truncate(v.len());
            prop_assume!(v.iter().any(|&x| x != 0.0));
            prop_assume!(w.iter().any(|&x| x != 0.0));
            let a = FeatureVector::new(v.clone()).unwrap();
            let b = FeatureVector::new(w.clone()).unwrap();
            let scaled_a = FeatureVector::new(v.iter().map(|&x| x * lambda).collect()).unwrap();
            let scaled_b = FeatureVector::new(w.iter().map(|&x| x * mu).collect()).unwrap();
            let s1 = cosine_similarity(&a, &b).unwrap();
            let s2 = cosine_similarity(&scaled_a, &scaled_b).unwrap();
            prop_assert!((s1 - s2).abs() < 1e-12);
            // Symmetry.
            let s3 = cosine_similarity(&b, &a).unwrap();
            prop_assert_eq!(s1, s3);
        }
    }
}
