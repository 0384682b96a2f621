//! Declarative experiment configuration, loaded from TOML.

use std::path::{Path, PathBuf};

use plagguard_core::attacks::{InsertionPool, RefactorOp};
use plagguard_core::generator::GeneratorConfig;
use plagguard_core::matcher::{DefenseConfig, MatchParams};
use plagguard_core::smm::SmmParams;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// Detector variant: which defenses run around the matcher.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Base,
    Tsn,
    Smm,
    Both,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Base, Variant::Tsn, Variant::Smm, Variant::Both];

    pub fn label(self) -> &'static str {
        match self {
            Variant::Base => "Base",
            Variant::Tsn => "TSN",
            Variant::Smm => "SMM",
            Variant::Both => "Both",
        }
    }

    pub fn defenses(self, smm: SmmParams) -> DefenseConfig {
        let mut d = match self {
            Variant::Base => DefenseConfig::none(),
            Variant::Tsn => DefenseConfig::tsn(),
            Variant::Smm => DefenseConfig::smm(),
            Variant::Both => DefenseConfig::both(),
        };
        d.smm_params = smm;
        d
    }
}

/// Pair category: original pairs, plagiarism-to-source pairs, or pairs of
/// fully generated programs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "OP", alias = "op")]
    Op,
    #[serde(rename = "P2S", alias = "p2s")]
    P2s,
    #[serde(rename = "FG", alias = "fg")]
    Fg,
}

impl Category {
    pub fn label(self) -> &'static str {
        match self {
            Category::Op => "OP",
            Category::P2s => "P2S",
            Category::Fg => "FG",
        }
    }

    /// Significance level for tests on this category.
    pub fn alpha(self) -> f64 {
        match self {
            Category::Fg => plagguard_core::stats::ALPHA_GENERATION,
            Category::Op | Category::P2s => plagguard_core::stats::ALPHA_PLAGIARISM,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum StageKind {
    Unrelated,
    Insertion,
    Refactoring,
    LlmObf,
    LlmGen,
    ThresholdCost,
}

impl StageKind {
    pub const ALL: [StageKind; 6] = [
        StageKind::Unrelated,
        StageKind::Insertion,
        StageKind::Refactoring,
        StageKind::LlmObf,
        StageKind::LlmGen,
        StageKind::ThresholdCost,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StageKind::Unrelated => "unrelated",
            StageKind::Insertion => "insertion",
            StageKind::Refactoring => "refactoring",
            StageKind::LlmObf => "llm_obf",
            StageKind::LlmGen => "llm_gen",
            StageKind::ThresholdCost => "threshold_cost",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    /// Submission directory to ingest. When absent, a synthetic corpus is
    /// generated.
    pub dir: Option<PathBuf>,
    pub programs: usize,
    pub generator: GeneratorConfig,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            dir: None,
            programs: 40,
            generator: GeneratorConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InsertionConfig {
    /// Number of originals to attack; `None` attacks all of them.
    pub programs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefactoringConfig {
    pub programs: Option<usize>,
    pub intensity: usize,
    pub ops: Vec<RefactorOp>,
}

impl Default for RefactoringConfig {
    fn default() -> Self {
        RefactoringConfig {
            programs: None,
            intensity: 30,
            ops: RefactorOp::ALL.to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdCostConfig {
    pub programs: usize,
    pub threshold: f64,
    pub max_iters: usize,
    pub pool: InsertionPool,
    /// Detector variants the attack is run against.
    pub targets: Vec<Variant>,
    /// Iteration budget of the extra pure-dead-code run against TSN, which
    /// is expected to stall; 0 skips it.
    pub stall_iters: usize,
}

impl Default for ThresholdCostConfig {
    fn default() -> Self {
        ThresholdCostConfig {
            programs: 5,
            threshold: 25.0,
            max_iters: 1500,
            pool: InsertionPool::Mixed,
            targets: vec![Variant::Base, Variant::Both],
            stall_iters: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmConfig {
    /// Prompt template file (JSON lines).
    pub prompts: Option<PathBuf>,
    /// Assignment text substituted into generation prompts.
    pub assignment: String,
    /// Programs requested per generation prompt.
    pub n: usize,
    /// Originals sent to each obfuscation prompt; `None` sends all.
    pub programs: Option<usize>,
    /// Where `llm-attack` writes and the LLM stages read; defaults to
    /// `<output_dir>/llm`.
    pub artifacts_dir: Option<PathBuf>,
    pub reject_divergent: bool,
}

impl Default for LlmConfig {
    fn default() -> Self {
        LlmConfig {
            prompts: None,
            assignment: String::new(),
            n: 10,
            programs: None,
            artifacts_dir: None,
            reject_divergent: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    pub seed: u64,
    pub variants: Vec<Variant>,
    pub categories: Vec<Category>,
    pub stages: Vec<StageKind>,
    pub match_params: MatchParams,
    pub smm: SmmParams,
    pub corpus: CorpusConfig,
    pub insertion: InsertionConfig,
    pub refactoring: RefactoringConfig,
    pub threshold_cost: ThresholdCostConfig,
    pub llm: LlmConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            output_dir: PathBuf::from("plagguard-out"),
            seed: 42,
            variants: Variant::ALL.to_vec(),
            categories: vec![Category::Op, Category::P2s, Category::Fg],
            stages: vec![
                StageKind::Unrelated,
                StageKind::Insertion,
                StageKind::Refactoring,
                StageKind::ThresholdCost,
            ],
            match_params: MatchParams::default(),
            smm: SmmParams::default(),
            corpus: CorpusConfig::default(),
            insertion: InsertionConfig::default(),
            refactoring: RefactoringConfig::default(),
            threshold_cost: ThresholdCostConfig::default(),
            llm: LlmConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.variants.is_empty() {
            return Err(HarnessError::Config("at least one variant is required".into()));
        }
        if self.categories.is_empty() {
            return Err(HarnessError::Config("at least one pair category is required".into()));
        }
        if self.match_params.min_match_len == 0 {
            return Err(HarnessError::Config("min_match_len must be at least 1".into()));
        }
        if self.corpus.dir.is_none() && self.corpus.programs < 2 {
            return Err(HarnessError::Config(
                "a generated corpus needs at least 2 programs".into(),
            ));
        }
        let t = self.threshold_cost.threshold;
        if !(t > 0.0 && t <= 100.0) {
            return Err(HarnessError::Config(format!("threshold must be in (0, 100], got {t}")));
        }
        if self.refactoring.intensity > 0 && self.refactoring.ops.is_empty() {
            return Err(HarnessError::Config("refactoring needs at least one op".into()));
        }
        Ok(())
    }

    /// Variants in canonical order, Base first when present.
    pub fn sorted_variants(&self) -> Vec<Variant> {
        let mut v = self.variants.clone();
        v.sort();
        v.dedup();
        v
    }

    pub fn llm_dir(&self) -> PathBuf {
        self.llm
            .artifacts_dir
            .clone()
            .unwrap_or_else(|| self.output_dir.join("llm"))
    }
}

/// Per-item seed derived from the experiment seed, a stage tag and an index
/// (splitmix64 over an FNV-1a hash of the tag).
pub fn derive_seed(base: u64, tag: &str, index: u64) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in tag.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    let mut z = base ^ h ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg = ExperimentConfig::from_toml(
            "seed = 7\nvariants = [\"base\", \"both\"]\ncategories = [\"OP\"]\n[smm]\nmax_gap = 3\n[threshold_cost]\npool = \"pure_dead\"\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.variants, vec![Variant::Base, Variant::Both]);
        assert_eq!(cfg.smm.max_gap, 3);
        assert_eq!(cfg.smm.min_neighbor_len, 2);
        assert_eq!(cfg.threshold_cost.pool, InsertionPool::PureDead);
        assert_eq!(cfg.corpus.programs, 40);
    }

    #[test]
    fn empty_selections_are_rejected() {
        assert!(ExperimentConfig::from_toml("variants = []").is_err());
        assert!(ExperimentConfig::from_toml("categories = []").is_err());
        assert!(ExperimentConfig::from_toml("bogus = 1").is_err());
    }

    #[test]
    fn derived_seeds_differ_by_tag_and_index() {
        assert_ne!(derive_seed(1, "insertion", 0), derive_seed(1, "refactoring", 0));
        assert_ne!(derive_seed(1, "insertion", 0), derive_seed(1, "insertion", 1));
        assert_eq!(derive_seed(1, "insertion", 3), derive_seed(1, "insertion", 3));
    }
}
