//! Run manifests: the resolved configuration plus a SHA-256 per artifact,
//! enough to verify that a rerun reproduced the outputs bit for bit.

use crate::error::{io_err, Result};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// `<output>.manifest`, next to the artifact it describes.
pub fn default_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest");
    PathBuf::from(name)
}

pub fn write_manifest(
    path: &Path,
    command: &str,
    config: &[(&'static str, String)],
    artifacts: &[(&str, &Path)],
) -> Result<()> {
    let mut out = String::new();
    out.push_str(&format!("command = {command}\n"));
    for (key, value) in config {
        out.push_str(&format!("{key} = {value}\n"));
    }
    for (name, artifact) in artifacts {
        let bytes = std::fs::read(artifact)
            .map_err(io_err(format!("cannot hash {}", artifact.display())))?;
        out.push_str(&format!(
            "artifact {name} = {} sha256={} bytes={}\n",
            artifact.display(),
            sha256_hex(&bytes),
            bytes.len()
        ));
    }
    std::fs::write(path, out).map_err(io_err(format!("cannot write {}", path.display())))?;
    log::info!("manifest written to {}", path.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        // FIPS 180-2 appendix B.1 test vector.
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_lists_config_and_hashes() {
        let dir = tempfile::tempdir().unwrap();
        let artifact = dir.path().join("out.bin");
        std::fs::write(&artifact, b"abc").unwrap();
        let manifest = default_path(&artifact);
        assert!(manifest.to_string_lossy().ends_with("out.bin.manifest"));
        write_manifest(
            &manifest,
            "compress",
            &[("seed", "1".into())],
            &[("bitstream", &artifact)],
        )
        .unwrap();
        let text = std::fs::read_to_string(&manifest).unwrap();
        assert!(text.contains("command = compress"));
        assert!(text.contains("seed = 1"));
        assert!(text.contains("sha256=ba7816bf"));
        assert!(text.contains("bytes=3"));
    }
}
