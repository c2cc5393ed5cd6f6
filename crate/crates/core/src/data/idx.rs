//! IDX container reading/writing (the MNIST on-disk format).
//!
//! Big-endian headers: images carry magic `0x00000803` and dims
//! `(count, rows, cols)`, labels carry magic `0x00000801` and `(count)`;
//! payloads are unsigned bytes. Pixels are scaled by 1/255 on load.

use std::fs;
use std::path::Path;

use crate::data::set::LabeledSet;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const IMAGES_MAGIC: u32 = 0x0000_0803;
const LABELS_MAGIC: u32 = 0x0000_0801;

struct Cursor<'a> {
    buf: &'a [u8],
    off: u64,
}

impl<'a> Cursor<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, off: 0 }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let start = self.off as usize;
        let end = start.checked_add(n).ok_or_else(|| Error::Format {
            offset: self.off,
            reason: format!("{what}: length overflow"),
        })?;
        if end > self.buf.len() {
            return Err(Error::Format {
                offset: self.off,
                reason: format!(
                    "{what}: need {n} bytes, only {} remain",
                    self.buf.len() - start
                ),
            });
        }
        self.off = end as u64;
        Ok(&self.buf[start..end])
    }

    fn u32_be(&mut self, what: &str) -> Result<u32> {
        let bytes = self.take(4, what)?;
        Ok(u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]))
    }
}

fn parse_images(buf: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let mut cur = Cursor::new(buf);
    let magic = cur.u32_be("images magic")?;
    if magic != IMAGES_MAGIC {
        return Err(Error::Format {
            offset: 0,
            reason: format!("bad images magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"),
        });
    }
    let count = cur.u32_be("image count")? as usize;
    let rows = cur.u32_be("image rows")? as usize;
    let cols = cur.u32_be("image cols")? as usize;
    let d = rows.checked_mul(cols).ok_or_else(|| Error::Format {
        offset: 4,
        reason: "image dimensions overflow".into(),
    })?;
    if d == 0 {
        return Err(Error::Format {
            offset: 8,
            reason: "zero image dimensions".into(),
        });
    }
    let payload = cur.take(count * d, "image payload")?;
    if cur.off as usize != buf.len() {
        return Err(Error::Format {
            offset: cur.off,
            reason: format!("{} trailing bytes", buf.len() - cur.off as usize),
        });
    }
    Ok((count, d, payload.to_vec()))
}

fn parse_labels(buf: &[u8]) -> Result<Vec<u8>> {
    let mut cur = Cursor::new(buf);
    let magic = cur.u32_be("labels magic")?;
    if magic != LABELS_MAGIC {
        return Err(Error::Format {
            offset: 0,
            reason: format!("bad labels magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"),
        });
    }
    let count = cur.u32_be("label count")? as usize;
    let payload = cur.take(count, "label payload")?;
    if cur.off as usize != buf.len() {
        return Err(Error::Format {
            offset: cur.off,
            reason: format!("{} trailing bytes", buf.len() - cur.off as usize),
        });
    }
    Ok(payload.to_vec())
}

/// Loads a paired IDX image/label file into a labeled set. Pixels land in
/// `[0,1]` (divided by 255), images are flattened row-major, and the class
/// count is `max(label) + 1`.
pub fn load_idx<F: Scalar>(images_path: &Path, labels_path: &Path) -> Result<LabeledSet<F>> {
    let images_buf = fs::read(images_path)?;
    let labels_buf = fs::read(labels_path)?;
    let (count, d, pixels) = parse_images(&images_buf)?;
    let labels = parse_labels(&labels_buf)?;
    if labels.len() != count {
        return Err(Error::Format {
            offset: 4,
            reason: format!("{count} images but {} labels", labels.len()),
        });
    }
    let xs: Vec<F> = pixels
        .into_iter()
        .map(|b| F::from_f64_lossy(f64::from(b) / 255.0))
        .collect();
    let ys: Vec<usize> = labels.into_iter().map(usize::from).collect();
    let num_classes = ys.iter().max().map_or(0, |m| m + 1).max(2);
    LabeledSet::from_flat(xs, d, Some(ys), num_classes)
}

/// Loads an images-only IDX file as an unlabeled set (class count supplied
/// by the caller).
pub fn load_idx_images<F: Scalar>(images_path: &Path, num_classes: usize) -> Result<LabeledSet<F>> {
    let images_buf = fs::read(images_path)?;
    let (_, d, pixels) = parse_images(&images_buf)?;
    let xs: Vec<F> = pixels
        .into_iter()
        .map(|b| F::from_f64_lossy(f64::from(b) / 255.0))
        .collect();
    LabeledSet::from_flat(xs, d, None, num_classes)
}

/// Quantizes features to bytes (`round(x * 255)`) and writes IDX files.
/// Data loaded from IDX round-trips bit-exactly on the byte domain. The
/// label file is only written when the set carries labels.
pub fn save_idx<F: Scalar>(
    set: &LabeledSet<F>,
    images_path: &Path,
    labels_path: Option<&Path>,
) -> Result<()> {
    let n = set.len();
    let d = set.dim();
    let mut images = Vec::with_capacity(16 + n * d);
    images.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
    images.extend_from_slice(&(n as u32).to_be_bytes());
    images.extend_from_slice(&1u32.to_be_bytes());
    images.extend_from_slice(&(d as u32).to_be_bytes());
    for row in set.rows() {
        for v in row {
            let byte = (v.to_f64_lossy().clamp(0.0, 1.0) * 255.0).round() as u8;
            images.push(byte);
        }
    }
    fs::write(images_path, images)?;

    if let Some(path) = labels_path {
        let ys = set
            .labels()
            .ok_or_else(|| Error::Domain("set has no labels to write".into()))?;
        if set.num_classes() > 256 {
            return Err(Error::Domain(
                "IDX labels are bytes; more than 256 classes".into(),
            ));
        }
        let mut labels = Vec::with_capacity(8 + n);
        labels.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
        labels.extend_from_slice(&(n as u32).to_be_bytes());
        labels.extend(ys.iter().map(|&y| y as u8));
        fs::write(path, labels)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn write(path: &Path, bytes: &[u8]) {
        fs::write(path, bytes).unwrap();
    }

    fn images_file(count: u32, rows: u32, cols: u32, payload: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        v.extend_from_slice(&IMAGES_MAGIC.to_be_bytes());
        v.extend_from_slice(&count.to_be_bytes());
        v.extend_from_slice(&rows.to_be_bytes());
        v.extend_from_slice(&cols.to_be_bytes());
        v.extend_from_slice(payload);
        v
    }

    fn labels_file(count: u32, payload: &[u8]) -> Vec<u8> {
        let mut v = Vec::new();
        v.extend_from_slice(&LABELS_MAGIC.to_be_bytes());
        v.extend_from_slice(&count.to_be_bytes());
        v.extend_from_slice(payload);
        v
    }

    #[test]
    fn all_255_pixels_scale_to_exactly_one() {
        let dir = tempdir().unwrap();
        let img = dir.path().join("img");
        let lab = dir.path().join("lab");
        write(&img, &images_file(1, 28, 28, &[255u8; 784]));
        write(&lab, &labels_file(1, &[3]));
        let set: LabeledSet<f64> = load_idx(&img, &lab).unwrap();
        assert_eq!(set.dim(), 784);
        assert!(set.row(0).iter().all(|&v| v == 1.0));
        assert_eq!(set.label(0), Some(3));
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let dir = tempdir().unwrap();
        let img = dir.path().join("img");
        let lab = dir.path().join("lab");
        let mut bad = images_file(1, 2, 2, &[0u8; 4]);
        bad[3] = 0x04; // corrupt the magic
        write(&img, &bad);
        write(&lab, &labels_file(1, &[0]));
        match load_idx::<f64>(&img, &lab) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 0),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn declared_count_must_match_label_bytes() {
        let dir = tempdir().unwrap();
        let img = dir.path().join("img");
        let lab = dir.path().join("lab");
        write(&img, &images_file(10, 1, 1, &[0u8; 10]));
        write(&lab, &labels_file(10, &[0u8; 9]));
        assert!(matches!(
            load_idx::<f64>(&img, &lab),
            Err(Error::Format { .. })
        ));
    }

    #[test]
    fn truncated_image_payload_names_offset() {
        let dir = tempdir().unwrap();
        let img = dir.path().join("img");
        let lab = dir.path().join("lab");
        write(&img, &images_file(2, 2, 2, &[7u8; 5]));
        write(&lab, &labels_file(2, &[0, 1]));
        match load_idx::<f64>(&img, &lab) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 16),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn byte_round_trip_is_exact() {
        let dir = tempdir().unwrap();
        let set = LabeledSet::<f64>::new(
            vec![vec![0.0, 1.0, 37.0 / 255.0], vec![0.5, 0.25, 200.0 / 255.0]],
            Some(vec![1, 0]),
            2,
        )
        .unwrap();
        let img = dir.path().join("img");
        let lab = dir.path().join("lab");
        save_idx(&set, &img, Some(&lab)).unwrap();
        let back: LabeledSet<f64> = load_idx(&img, &lab).unwrap();
        // Compare on the byte domain: a second save must be identical.
        let img2 = dir.path().join("img2");
        let lab2 = dir.path().join("lab2");
        save_idx(&back, &img2, Some(&lab2)).unwrap();
        assert_eq!(fs::read(&img).unwrap(), fs::read(&img2).unwrap());
        assert_eq!(fs::read(&lab).unwrap(), fs::read(&lab2).unwrap());
    }
}
