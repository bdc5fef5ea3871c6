//! On-disk layout of a run and the manifest that records it.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use stylebench_neural::WeightFile;

use crate::dataset::{read_cache, write_cache, PlayerDataset};
use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::harness::seeds::SeedSet;
use crate::policy::{embedding_from_weight_file, embeddings_to_weight_file, PlayerEmbedding, PolicyModel};
use crate::style::{AutoEncoder, PcaProjector};

/// File names under an output directory.
#[derive(Clone, Debug)]
pub struct Layout {
    pub root: PathBuf,
}

/// Player names restricted to `[A-Za-z0-9._-]` for use in file names.
pub fn safe_name(player: &str) -> String {
    player
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_') { c } else { '_' })
        .collect()
}

fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::MissingArtifact(path.to_path_buf()))
    }
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }
    Ok(())
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }

    pub fn dataset_path(&self, player: &str, split: &str) -> PathBuf {
        self.root.join("datasets").join(format!("{}.{split}.sbd", safe_name(player)))
    }

    pub fn policy_path(&self) -> PathBuf {
        self.root.join("models/policy.sbw")
    }

    pub fn embeddings_path(&self) -> PathBuf {
        self.root.join("models/embeddings.sbw")
    }

    pub fn autoencoder_path(&self) -> PathBuf {
        self.root.join("models/autoencoder.sbw")
    }

    pub fn projector_path(&self) -> PathBuf {
        self.root.join("models/projector.json")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.root.join("reports")
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn save_datasets(&self, datasets: &[PlayerDataset]) -> Result<()> {
        for d in datasets {
            for (split, pairs) in [("train", &d.train), ("test", &d.test)] {
                let p = self.dataset_path(&d.player, split);
                ensure_parent(&p)?;
                write_cache(&p, &d.player, pairs)?;
            }
        }
        Ok(())
    }

    pub fn load_datasets(&self, players: &[String]) -> Result<Vec<PlayerDataset>> {
        players
            .iter()
            .map(|player| {
                let (_, train) = read_cache(&self.dataset_path(player, "train"))?;
                let (_, test) = read_cache(&self.dataset_path(player, "test"))?;
                let games = |pairs: &[crate::dataset::StateActionPair]| {
                    let mut ids: Vec<u32> = pairs.iter().map(|p| p.game_id).collect();
                    ids.dedup();
                    ids.len()
                };
                Ok(PlayerDataset {
                    player: player.clone(),
                    train_games: games(&train),
                    test_games: games(&test),
                    train,
                    test,
                })
            })
            .collect()
    }

    fn save_weights(&self, path: &Path, wf: &WeightFile) -> Result<()> {
        ensure_parent(path)?;
        Ok(wf.save(path)?)
    }

    fn load_weights(&self, path: &Path) -> Result<WeightFile> {
        require(path)?;
        Ok(WeightFile::load(path)?)
    }

    pub fn save_policy(&self, model: &PolicyModel) -> Result<()> {
        self.save_weights(&self.policy_path(), &model.to_weight_file())
    }

    pub fn load_policy(&self) -> Result<PolicyModel> {
        PolicyModel::from_weight_file(&self.load_weights(&self.policy_path())?)
    }

    pub fn save_embeddings(&self, embeddings: &[PlayerEmbedding]) -> Result<()> {
        self.save_weights(&self.embeddings_path(), &embeddings_to_weight_file(embeddings))
    }

    pub fn load_embeddings(&self, players: &[String]) -> Result<Vec<PlayerEmbedding>> {
        let wf = self.load_weights(&self.embeddings_path())?;
        players.iter().map(|p| embedding_from_weight_file(&wf, p)).collect()
    }

    pub fn save_autoencoder(&self, ae: &AutoEncoder) -> Result<()> {
        self.save_weights(&self.autoencoder_path(), &ae.to_weight_file())
    }

    pub fn load_autoencoder(&self) -> Result<AutoEncoder> {
        AutoEncoder::from_weight_file(&self.load_weights(&self.autoencoder_path())?)
    }

    pub fn save_projector(&self, p: &PcaProjector) -> Result<()> {
        let path = self.projector_path();
        ensure_parent(&path)?;
        let json = serde_json::json!({ "method": "pca", "pca": p });
        fs::write(&path, serde_json::to_string_pretty(&json).expect("serializable"))
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load_projector(&self) -> Result<PcaProjector> {
        let path = self.projector_path();
        require(&path)?;
        let text = fs::read_to_string(&path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        let mut v: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if v["method"] != "pca" {
            return Err(Error::Config(format!("{}: unsupported projector method {}", path.display(), v["method"])));
        }
        serde_json::from_value(v["pca"].take()).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// Run record: config echo, seeds, artifact checksums and stage timings.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub config: Option<ExperimentConfig>,
    pub seeds: Option<SeedSet>,
    pub threads: usize,
    /// Relative path -> SHA-256 of every file under models/, datasets/ and
    /// reports/.
    pub artifacts: BTreeMap<String, String>,
    /// Stage name -> wall-clock seconds.
    pub timings: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn new(cfg: &ExperimentConfig) -> Self {
        Manifest {
            config: Some(cfg.clone()),
            seeds: Some(cfg.seeds()),
            threads: rayon::current_num_threads(),
            ..Manifest::default()
        }
    }

    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = std::time::Instant::now();
        let out = f()?;
        *self.timings.entry(stage.to_string()).or_default() += t.elapsed().as_secs_f64();
        Ok(out)
    }

    pub fn write(&mut self, layout: &Layout) -> Result<()> {
        self.artifacts.clear();
        for sub in ["datasets", "models", "reports"] {
            let dir = layout.root.join(sub);
            let Ok(entries) = fs::read_dir(&dir) else { continue };
            let mut files: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_file()).collect();
            files.sort();
            for f in files {
                let rel = f.strip_prefix(&layout.root).unwrap_or(&f).to_string_lossy().replace('\\', "/");
                self.artifacts.insert(rel, sha256_file(&f)?);
            }
        }
        let path = layout.manifest_path();
        ensure_parent(&path)?;
        fs::write(&path, serde_json::to_string_pretty(self).expect("serializable"))
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_file_safe() {
        assert_eq!(safe_name("Carlsen, Magnus"), "Carlsen__Magnus");
        assert_eq!(safe_name("uniform-random"), "uniform-random");
    }

    #[test]
    fn missing_artifacts_are_named() {
        let dir = tempfile::tempdir().unwrap();
        let l = Layout::new(dir.path());
        match l.load_policy() {
            Err(Error::MissingArtifact(p)) => assert!(p.ends_with("models/policy.sbw")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(l.load_datasets(&["x".into()]), Err(Error::MissingArtifact(_))));
        assert!(matches!(l.load_projector(), Err(Error::MissingArtifact(_))));
    }
}
