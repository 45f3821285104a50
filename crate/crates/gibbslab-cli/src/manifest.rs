//! Run manifests: every output directory holds exactly one `manifest.json`
//! recording the resolved inputs, the seed, the tolerance set, the artifact
//! version and the wall time. The manifest hash covers the reproducibility
//! fields only (not the wall time), and is embedded in every figure.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub master_seed: u64,
    pub ball_radius: f64,
    pub ball_cap: usize,
    pub potential: String,
    pub representation: String,
    pub tolerances: BTreeMap<String, f64>,
    pub artifact_version: String,
    pub manifest_hash: String,
    pub wall_time_s: f64,
}

impl RunManifest {
    pub fn new(
        command: &str,
        config: BTreeMap<String, String>,
        master_seed: u64,
        ball_radius: f64,
        ball_cap: usize,
        potential: String,
        representation: String,
    ) -> Self {
        let mut tolerances = BTreeMap::new();
        tolerances.insert("busemann_tol".to_string(), gibbslab::hypgeom::BUSEMANN_TOL);
        tolerances.insert("cocycle_tol".to_string(), gibbslab::potential::DEFAULT_COCYCLE_TOL);
        tolerances.insert("quadrature_step".to_string(), gibbslab::potential::QUADRATURE_STEP);
        tolerances.insert("section_tol".to_string(), gibbslab::cocycle::SECTION_TOL);
        let mut m = RunManifest {
            command: command.to_string(),
            config,
            master_seed,
            ball_radius,
            ball_cap,
            potential,
            representation,
            tolerances,
            artifact_version: env!("CARGO_PKG_VERSION").to_string(),
            manifest_hash: String::new(),
            wall_time_s: 0.0,
        };
        m.manifest_hash = m.compute_hash();
        m
    }

    fn compute_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.command.as_bytes());
        for (k, v) in &self.config {
            hasher.update(k.as_bytes());
            hasher.update(b"=");
            hasher.update(v.as_bytes());
            hasher.update(b";");
        }
        hasher.update(self.master_seed.to_le_bytes());
        hasher.update(self.ball_radius.to_le_bytes());
        hasher.update(self.ball_cap.to_le_bytes());
        hasher.update(self.potential.as_bytes());
        hasher.update(self.representation.as_bytes());
        for (k, v) in &self.tolerances {
            hasher.update(k.as_bytes());
            hasher.update(v.to_le_bytes());
        }
        hasher.update(self.artifact_version.as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn short_hash(&self) -> &str {
        &self.manifest_hash[..8]
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let body = serde_json::to_string_pretty(self).expect("manifest serialises");
        std::fs::write(dir.join("manifest.json"), body)
    }
}

/// Chooses the output directory: an explicit `--out`, else
/// `$OUTPUT_DIR/<command>-<hash8>`, else `runs/<command>-<hash8>`.
/// Existing non-empty directories are never reused: a numeric suffix is
/// appended so prior runs stay untouched.
pub fn output_dir(explicit: Option<&Path>, command: &str, hash8: &str) -> std::io::Result<PathBuf> {
    let base = match explicit {
        Some(p) => p.to_path_buf(),
        None => {
            let root = std::env::var_os("OUTPUT_DIR")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("runs"));
            root.join(format!("{command}-{hash8}"))
        }
    };
    let mut dir = base.clone();
    let mut k = 1;
    while dir.exists() && dir.read_dir().map(|mut d| d.next().is_some()).unwrap_or(false) {
        k += 1;
        dir = PathBuf::from(format!("{}-{k}", base.display()));
    }
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}
