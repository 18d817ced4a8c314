//! Big-endian IDX files (the MNIST / Fashion-MNIST distribution format).

use std::path::Path;

use super::data::Sample;
use crate::error::{Error, Result};

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

fn header(bytes: &[u8], path: &Path, magic: u32, dims: usize) -> Result<Vec<usize>> {
    let needed = 4 * (1 + dims);
    if bytes.len() < needed {
        return Err(Error::Truncated {
            path: path.into(),
            needed,
            found: bytes.len(),
        });
    }
    let word = |i: usize| u32::from_be_bytes(bytes[4 * i..4 * i + 4].try_into().expect("4 bytes"));
    let found = word(0);
    if found != magic {
        return Err(Error::BadMagic {
            path: path.into(),
            expected: magic,
            found,
        });
    }
    Ok((1..=dims).map(|i| word(i) as usize).collect())
}

fn body<'a>(bytes: &'a [u8], path: &Path, offset: usize, len: usize) -> Result<&'a [u8]> {
    bytes.get(offset..offset + len).ok_or_else(|| Error::Truncated {
        path: path.into(),
        needed: offset + len,
        found: bytes.len(),
    })
}

/// Images as flattened pixel rows scaled to `[0, 1]`.
pub fn parse_idx_images(bytes: &[u8], path: &Path) -> Result<Vec<Vec<f64>>> {
    let dims = header(bytes, path, IMAGES_MAGIC, 3)?;
    let (count, pixels) = (dims[0], dims[1] * dims[2]);
    let data = body(bytes, path, 16, count * pixels)?;
    Ok(data
        .chunks_exact(pixels.max(1))
        .take(count)
        .map(|img| img.iter().map(|&p| f64::from(p) / 255.0).collect())
        .collect())
}

pub fn parse_idx_labels(bytes: &[u8], path: &Path) -> Result<Vec<usize>> {
    let dims = header(bytes, path, LABELS_MAGIC, 1)?;
    let data = body(bytes, path, 8, dims[0])?;
    Ok(data.iter().map(|&l| usize::from(l)).collect())
}

pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Vec<Sample>> {
    let (images_path, labels_path) = (images_path.as_ref(), labels_path.as_ref());
    let read = |p: &Path| std::fs::read(p).map_err(|e| Error::io(p, e));
    let images = parse_idx_images(&read(images_path)?, images_path)?;
    let labels = parse_idx_labels(&read(labels_path)?, labels_path)?;
    if images.len() != labels.len() {
        return Err(Error::CountMismatch {
            images: images.len(),
            labels: labels.len(),
        });
    }
    Ok(images
        .into_iter()
        .zip(labels)
        .map(|(features, label)| Sample { features, label })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn images_file(count: u32, rows: u32, cols: u32, pixels: &[u8]) -> Vec<u8> {
        let mut out = Vec::new();
        for w in [IMAGES_MAGIC, count, rows, cols] {
            out.extend_from_slice(&w.to_be_bytes());
        }
        out.extend_from_slice(pixels);
        out
    }

    fn labels_file(labels: &[u8]) -> Vec<u8> {
        let mut out = LABELS_MAGIC.to_be_bytes().to_vec();
        out.extend_from_slice(&(labels.len() as u32).to_be_bytes());
        out.extend_from_slice(labels);
        out
    }

    #[test]
    fn loads_hand_built_fixture() {
        let dir = tempfile::tempdir().unwrap();
        let pixels: Vec<u8> = (0..18).map(|i| (i * 15) as u8).collect();
        std::fs::write(dir.path().join("img"), images_file(2, 3, 3, &pixels)).unwrap();
        std::fs::write(dir.path().join("lbl"), labels_file(&[7, 2])).unwrap();

        let samples = load_idx(dir.path().join("img"), dir.path().join("lbl")).unwrap();
        assert_eq!(samples.len(), 2);
        assert_eq!(samples[0].label, 7);
        assert_eq!(samples[1].label, 2);
        assert_eq!(samples[0].features.len(), 9);
        assert_eq!(samples[0].features[1], 15.0 / 255.0);
        assert_eq!(samples[1].features[8], 255.0 / 255.0);
    }

    #[test]
    fn images_file_as_labels_is_bad_magic() {
        let path = Path::new("labels");
        let err = parse_idx_labels(&images_file(1, 1, 1, &[0]), path).unwrap_err();
        assert!(matches!(
            err,
            Error::BadMagic {
                found: IMAGES_MAGIC,
                expected: LABELS_MAGIC,
                ..
            }
        ));
    }

    #[test]
    fn truncated_and_mismatched_files() {
        let path = Path::new("x");
        assert!(matches!(
            parse_idx_images(&images_file(2, 2, 2, &[0; 7]), path),
            Err(Error::Truncated { needed: 24, .. })
        ));
        assert!(matches!(
            parse_idx_labels(&LABELS_MAGIC.to_be_bytes(), path),
            Err(Error::Truncated { .. })
        ));

        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("img"), images_file(1, 1, 2, &[0, 1])).unwrap();
        std::fs::write(dir.path().join("lbl"), labels_file(&[1, 1])).unwrap();
        assert!(matches!(
            load_idx(dir.path().join("img"), dir.path().join("lbl")),
            Err(Error::CountMismatch { images: 1, labels: 2 })
        ));
        assert!(matches!(
            load_idx(dir.path().join("missing"), dir.path().join("lbl")),
            Err(Error::Io { .. })
        ));
    }
}
