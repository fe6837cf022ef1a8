//! Flat JSON run configuration shared by every subcommand.

use std::path::Path;

use graphimpute::cll::{CllConfig, Similarity};
use graphimpute::eval::ProbeConfig;
use graphimpute::mae::{LinkingPlan, MaskMode, SimilarityInput, TrainConfig};
use graphimpute::{Error, FpConfig, Result, SyntheticSpec};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Transductive,
    Inductive,
    Both,
}

impl Mode {
    pub fn transductive(self) -> bool {
        matches!(self, Mode::Transductive | Mode::Both)
    }

    pub fn inductive(self) -> bool {
        matches!(self, Mode::Inductive | Mode::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MissingMode {
    /// Each entry goes missing independently.
    Uniform,
    /// Whole feature rows go missing.
    Structural,
}

/// Every tunable of the pipeline. Serialized field order is fixed, so the
/// JSON form doubles as the input of the config hash.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    // Synthetic data.
    pub nodes: usize,
    pub classes: usize,
    pub p_in: f64,
    pub p_out: f64,
    pub feature_dim: usize,
    pub class_mean_scale: f64,
    pub noise_sigma: f64,
    pub train_frac: f64,
    pub val_frac: f64,
    pub missing_rate: f64,
    pub missing_mode: MissingMode,

    // Feature propagation.
    pub fp_max_iters: usize,
    pub fp_tol: f64,

    // Co-label linking.
    pub cll: bool,
    pub cll_k: usize,
    pub cll_tau: f64,
    pub cll_m: Option<usize>,
    pub cll_sim: Similarity,
    pub cll_sim_input: SimilarityInput,

    // Autoencoder.
    pub epochs: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub hidden_dim: usize,
    pub latent_dim: usize,
    pub sce_gamma: f64,
    pub mask_rate: f64,
    pub drop_rate: f64,
    pub mask_mode: MaskMode,

    // Evaluation.
    pub bins: usize,
    pub probe_iters: usize,
    pub probe_l2: f64,
    pub link_val_frac: f64,
    pub link_test_frac: f64,

    // Benchmark.
    pub seed: u64,
    pub seeds: usize,
    pub mode: Mode,
    pub rec: bool,
    pub assertions: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let data = SyntheticSpec::default();
        let fp = FpConfig::default();
        let cll = CllConfig::default();
        let mae = TrainConfig::default();
        let probe = ProbeConfig::default();
        RunConfig {
            nodes: data.num_nodes,
            classes: data.num_classes,
            p_in: data.p_in,
            p_out: data.p_out,
            feature_dim: data.feature_dim,
            class_mean_scale: data.class_mean_scale,
            noise_sigma: data.noise_sigma,
            train_frac: data.train_frac,
            val_frac: data.val_frac,
            missing_rate: 0.9,
            missing_mode: MissingMode::Uniform,
            fp_max_iters: fp.max_iters,
            fp_tol: fp.tolerance,
            cll: true,
            cll_k: cll.k,
            cll_tau: cll.tau,
            cll_m: cll.candidate_size,
            cll_sim: cll.similarity,
            cll_sim_input: SimilarityInput::default(),
            epochs: mae.epochs,
            learning_rate: mae.learning_rate,
            weight_decay: mae.weight_decay,
            hidden_dim: mae.hidden_dim,
            latent_dim: mae.latent_dim,
            sce_gamma: mae.sce_gamma,
            mask_rate: mae.mask_rate,
            drop_rate: mae.edge_drop_rate,
            mask_mode: mae.mask_mode,
            bins: graphimpute::eval::DEFAULT_BINS,
            probe_iters: probe.iterations,
            probe_l2: probe.l2,
            link_val_frac: 0.05,
            link_test_frac: 0.1,
            seed: 0,
            seeds: 5,
            mode: Mode::Both,
            rec: true,
            assertions: true,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Input(format!("config {}: {e}", path.display())))
    }

    /// Check every parameter against the module contracts.
    pub fn validate(&self) -> Result<()> {
        self.data_spec(0).validate()?;
        if !(0.0..1.0).contains(&self.missing_rate) {
            return Err(Error::Input("missing_rate must be in [0, 1)".into()));
        }
        self.fp().validate()?;
        self.cll_config(0).validate(self.nodes)?;
        self.train_config(0).validate()?;
        if self.bins == 0 {
            return Err(Error::Input("bins must be >= 1".into()));
        }
        if !(self.probe_l2 >= 0.0 && self.probe_l2.is_finite()) {
            return Err(Error::Input("probe_l2 must be finite and >= 0".into()));
        }
        let fracs_ok = self.link_val_frac >= 0.0
            && self.link_test_frac > 0.0
            && self.link_val_frac + self.link_test_frac < 1.0;
        if !fracs_ok {
            return Err(Error::Input(
                "link fractions must be >= 0, test > 0, and sum below 1".into(),
            ));
        }
        if self.seeds == 0 {
            return Err(Error::Input("seeds must be >= 1".into()));
        }
        Ok(())
    }

    /// `sha256` over the canonical JSON serialization.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn data_spec(&self, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            num_nodes: self.nodes,
            num_classes: self.classes,
            p_in: self.p_in,
            p_out: self.p_out,
            feature_dim: self.feature_dim,
            class_mean_scale: self.class_mean_scale,
            noise_sigma: self.noise_sigma,
            seed,
            train_frac: self.train_frac,
            val_frac: self.val_frac,
        }
    }

    pub fn fp(&self) -> FpConfig {
        FpConfig {
            max_iters: self.fp_max_iters,
            tolerance: self.fp_tol,
        }
    }

    pub fn cll_config(&self, seed: u64) -> CllConfig {
        CllConfig {
            k: self.cll_k,
            tau: self.cll_tau,
            candidate_size: self.cll_m,
            similarity: self.cll_sim,
            seed,
        }
    }

    pub fn linking(&self, seed: u64) -> LinkingPlan {
        LinkingPlan {
            config: self.cll_config(seed),
            similarity_input: self.cll_sim_input,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            hidden_dim: self.hidden_dim,
            latent_dim: self.latent_dim,
            sce_gamma: self.sce_gamma,
            mask_rate: self.mask_rate,
            edge_drop_rate: self.drop_rate,
            mask_mode: self.mask_mode,
            seed,
        }
    }

    pub fn probe(&self) -> ProbeConfig {
        ProbeConfig {
            iterations: self.probe_iters,
            l2: self.probe_l2,
        }
    }

    /// Seeds of the benchmark runs, in report order.
    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds as u64).map(|i| self.seed + i).collect()
    }
}
