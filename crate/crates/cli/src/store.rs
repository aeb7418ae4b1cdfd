//! Content-addressed image directory.

use std::path::{Path, PathBuf};

use forge_core::manifest::write_atomic;
use forge_core::{ImageBuffer, Result};

#[derive(Debug, Clone)]
pub struct ImageStore {
    root: PathBuf,
}

impl ImageStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, image_ref: &str) -> PathBuf {
        self.root.join(image_ref)
    }

    pub fn load(&self, image_ref: &str) -> Result<ImageBuffer> {
        ImageBuffer::load(self.path(image_ref))
    }

    /// Store under `{sha256}.ppm` and return that ref. Existing files are
    /// left alone: equal names mean equal bytes.
    pub fn put(&self, image: &ImageBuffer) -> Result<String> {
        let image_ref = image.content_ref();
        let path = self.path(&image_ref);
        if !path.exists() {
            write_atomic(&path, &image.encode_ppm())?;
        }
        Ok(image_ref)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn put_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let store = ImageStore::new(dir.path());
        let img = ImageBuffer::filled(3, 2, &[1, 2, 3]).unwrap();
        let r = store.put(&img).unwrap();
        assert_eq!(r, img.content_ref());
        assert_eq!(store.load(&r).unwrap(), img);
        assert_eq!(store.put(&img).unwrap(), r);
    }
}
