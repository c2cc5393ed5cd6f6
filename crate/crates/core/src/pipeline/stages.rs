//! The staged experiment driver.
//!
//! Every stage reads its inputs from the previous stage's on-disk artifacts
//! and is skipped when its input fingerprint already matches, so reruns are
//! byte-identical whether they hit the cache or not.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::attack::{
    fgsm, jsma_batch, load_adv_set, save_adv_set, tune_attack_with, AdvSet, AttackConfig,
    AttackKind,
};
use crate::baselines::{
    activation_bounds, dsa, gini, kde_score, maxp, nac, nbc, pe, random_rank, rank_by, Direction,
    NetworkActivations, RankedList, TrainRefs,
};
use crate::data::{load_idx, save_idx, split_indices, synth_blobs, LabeledSet, SplitSpec};
use crate::error::{Error, Result};
use crate::metrics::{apfd, fault_records, fdr, rauc, retrain_eval, EvalReport, FaultRecord};
use crate::mutation::{MutantPool, MutantSpec, PoolManifest};
use crate::nn::{load_network, save_network, Network, TrainConfig};
use crate::pipeline::artifacts::{
    ensure_dir, read_json, read_stage_info, require_artifact, stage_cached, stage_hash, write_json,
    write_stage, RunLock,
};
use crate::pipeline::config::{AttackStrength, DatasetSpec, ExperimentConfig};
use crate::seed;
use crate::sprt::{
    calibrate_nmax, calibrate_zeta, prioritize, PrioritizedSuite, SprtConfig, SprtState,
};
use crate::surrogate::{build_surrogate, LabelOracle, NetworkOracle, SurrogateConfig};

/// Pool size used for threshold calibration.
const ZETA_POOL: usize = 100;

/// Canonical method order for reports.
pub const METHOD_ORDER: [&str; 9] = [
    "lbt", "random", "gini", "pe", "maxp", "nac", "nbc", "dsa", "kde",
];

/// Pipeline stages in execution order.
pub const STAGE_ORDER: [&str; 7] = [
    "data",
    "train-mut",
    "gen-adv",
    "build-surrogate",
    "calibrate",
    "prioritize",
    "evaluate",
];

#[derive(Serialize, Deserialize)]
struct SplitArtifact {
    prioritize_ids: Vec<usize>,
    eval_ids: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct CalibrationArtifact {
    zeta_h: f64,
    n_max: usize,
    subset_ids: Vec<usize>,
    states: Vec<SprtState>,
}

/// The evaluation stage's JSON artifact: the per-method rows plus the exact
/// configuration that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub reports: Vec<EvalReport>,
}

/// Stage driver bound to one config and output directory.
pub struct Pipeline {
    cfg: ExperimentConfig,
    out: PathBuf,
}

impl Pipeline {
    pub fn new(cfg: ExperimentConfig, out: impl Into<PathBuf>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            out: out.into(),
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.cfg
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    /// Takes the single-writer lock for this output directory.
    pub fn lock(&self) -> Result<RunLock> {
        RunLock::acquire(&self.out)
    }

    fn dir(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn echo_config(&self) -> Result<()> {
        ensure_dir(&self.out)?;
        fs::write(self.out.join("config.json"), self.cfg.to_json()?)?;
        Ok(())
    }

    // ----- fingerprints ---------------------------------------------------

    fn hash_data(&self) -> Result<String> {
        let ds = serde_json::to_string(&self.cfg.dataset)?;
        Ok(stage_hash(&["data", &ds, &self.cfg.seed.to_string()]))
    }

    fn hash_mut(&self) -> Result<String> {
        let m = serde_json::to_string(&self.cfg.model)?;
        Ok(stage_hash(&["train-mut", &self.hash_data()?, &m]))
    }

    fn hash_adv(&self) -> Result<String> {
        let a = serde_json::to_string(&self.cfg.attack)?;
        Ok(stage_hash(&[
            "gen-adv",
            &self.hash_mut()?,
            &a,
            &self.cfg.eval_fraction.to_string(),
        ]))
    }

    fn hash_surrogate(&self) -> Result<String> {
        let s = serde_json::to_string(&self.cfg.surrogate)?;
        Ok(stage_hash(&["build-surrogate", &self.hash_mut()?, &s]))
    }

    fn hash_calibrate(&self) -> Result<String> {
        let m = serde_json::to_string(&self.cfg.mutation)?;
        let s = serde_json::to_string(&self.cfg.sprt)?;
        Ok(stage_hash(&[
            "calibrate",
            &self.hash_surrogate()?,
            &self.hash_adv()?,
            &m,
            &s,
        ]))
    }

    fn hash_prioritize(&self) -> Result<String> {
        Ok(stage_hash(&["prioritize", &self.hash_calibrate()?]))
    }

    fn hash_evaluate(&self) -> Result<String> {
        let b = serde_json::to_string(&self.cfg.baselines)?;
        let r = serde_json::to_string(&self.cfg.retrain)?;
        Ok(stage_hash(&["evaluate", &self.hash_prioritize()?, &b, &r]))
    }

    // ----- artifact loaders ----------------------------------------------

    fn load_split_sets(&self) -> Result<(LabeledSet<f64>, LabeledSet<f64>)> {
        let dir = self.dir("data");
        require_artifact(&dir.join("stage.json"), "train-mut")?;
        let info = read_stage_info(&dir)?;
        let num_classes = info["num_classes"]
            .as_u64()
            .ok_or_else(|| Error::Config("data stage info missing num_classes".into()))?
            as usize;
        let train = load_idx::<f64>(&dir.join("train.images.idx"), &dir.join("train.labels.idx"))?
            .with_num_classes(num_classes)?;
        let val = load_idx::<f64>(&dir.join("val.images.idx"), &dir.join("val.labels.idx"))?
            .with_num_classes(num_classes)?;
        Ok((train, val))
    }

    fn load_mut(&self) -> Result<Network<f64>> {
        let path = self.dir("mut").join("network.json");
        require_artifact(&path, "train-mut")?;
        load_network(&path)
    }

    fn load_adv(&self) -> Result<AdvSet<f64>> {
        require_artifact(&self.dir("adv").join("stage.json"), "gen-adv")?;
        load_adv_set(&self.dir("adv"), "set")
    }

    fn load_adv_split(&self) -> Result<SplitArtifact> {
        read_json(&self.dir("adv").join("split.json"), "gen-adv")
    }

    fn load_surrogate(&self) -> Result<Network<f64>> {
        let path = self.dir("surrogate").join("network.json");
        require_artifact(&path, "build-surrogate")?;
        load_network(&path)
    }

    fn load_calibration(&self) -> Result<(PoolManifest, CalibrationArtifact)> {
        let manifest: PoolManifest =
            read_json(&self.dir("calibrate").join("pool.json"), "calibrate")?;
        let cal: CalibrationArtifact =
            read_json(&self.dir("calibrate").join("calibration.json"), "calibrate")?;
        Ok((manifest, cal))
    }

    fn load_suite(&self) -> Result<PrioritizedSuite> {
        read_json(&self.dir("suite").join("suite.json"), "prioritize")
    }

    fn mutant_template(&self) -> MutantSpec {
        MutantSpec {
            operator: self.cfg.mutation.operator,
            rate: self.cfg.mutation.rate,
            gf_sigma: self.cfg.mutation.gf_sigma,
            seed: 0,
        }
    }

    fn sprt_config(&self, zeta_h: f64) -> SprtConfig {
        SprtConfig {
            alpha: self.cfg.sprt.alpha,
            beta: self.cfg.sprt.beta,
            delta: self.cfg.sprt.delta,
            zeta_h,
            p_clamp: self.cfg.sprt.p_clamp,
            subset_fraction: self.cfg.sprt.subset_fraction,
            decided_target: self.cfg.sprt.decided_target,
            nmax_ceiling: self.cfg.sprt.nmax_ceiling,
        }
    }

    /// Rebuilds the mutant pool from its manifest (mutation is
    /// deterministic, so only accepted seeds are re-materialized).
    fn restore_pool(
        &self,
        base: Network<f64>,
        manifest: &PoolManifest,
        x_val: LabeledSet<f64>,
    ) -> Result<MutantPool<f64>> {
        MutantPool::restore(
            base,
            self.mutant_template(),
            manifest.base_seed,
            manifest.min_agreement,
            x_val,
            &manifest.candidates,
        )
    }

    // ----- stages ---------------------------------------------------------

    /// Materializes the benign train/validation splits.
    pub fn run_data(&self) -> Result<()> {
        self.echo_config()?;
        let dir = self.dir("data");
        ensure_dir(&dir)?;
        let hash = self.hash_data()?;
        if stage_cached(&dir, &hash) {
            return Ok(());
        }

        let (train, val) = match &self.cfg.dataset {
            DatasetSpec::Blobs {
                train_per_class,
                val_per_class,
                classes,
                dim,
                spread,
            } => {
                let train = synth_blobs::<f64>(
                    *train_per_class,
                    *classes,
                    *dim,
                    *spread,
                    seed::child(self.cfg.seed, "data-train"),
                )?;
                let val = synth_blobs::<f64>(
                    *val_per_class,
                    *classes,
                    *dim,
                    *spread,
                    seed::child(self.cfg.seed, "data-val"),
                )?;
                (train, val)
            }
            DatasetSpec::Idx {
                images,
                labels,
                train,
                val,
            } => {
                let full = load_idx::<f64>(images, labels)?;
                if train + val > full.len() {
                    return Err(Error::Config(format!(
                        "dataset holds {} rows, need {} train + {} val",
                        full.len(),
                        train,
                        val
                    )));
                }
                let spec = SplitSpec {
                    fractions: vec![1.0],
                    seed: seed::child(self.cfg.seed, "data-shuffle"),
                };
                let order = split_indices(full.len(), &spec)?.pop().expect("one part");
                let train_set = full.subset(&order[..*train]);
                let val_set = full.subset(&order[*train..train + val]);
                (train_set, val_set)
            }
        };

        save_idx(
            &train,
            &dir.join("train.images.idx"),
            Some(&dir.join("train.labels.idx")),
        )?;
        save_idx(
            &val,
            &dir.join("val.images.idx"),
            Some(&dir.join("val.labels.idx")),
        )?;
        write_stage(
            &dir,
            &hash,
            serde_json::json!({
                "num_classes": train.num_classes(),
                "dim": train.dim(),
                "train_rows": train.len(),
                "val_rows": val.len(),
            }),
        )
    }

    /// Trains the model under test.
    pub fn run_train_mut(&self) -> Result<()> {
        self.echo_config()?;
        let dir = self.dir("mut");
        ensure_dir(&dir)?;
        let hash = self.hash_mut()?;
        if stage_cached(&dir, &hash) {
            return Ok(());
        }

        let (train, val) = self.load_split_sets()?;
        let init = Network::mlp(
            train.dim(),
            &self.cfg.model.hidden,
            train.num_classes(),
            seed::child(self.cfg.seed, "mut-init"),
        )?;
        let tcfg = TrainConfig {
            learning_rate: self.cfg.model.learning_rate,
            epochs: self.cfg.model.epochs,
            batch_size: self.cfg.model.batch_size,
            seed: seed::child(self.cfg.seed, "mut-train"),
            l2: self.cfg.model.l2,
        };
        let net = crate::nn::sgd_train(&init, &train, &tcfg)?;
        save_network(&net, &dir.join("network.json"))?;
        let benign_acc = net.accuracy(&val)?;
        write_stage(
            &dir,
            &hash,
            serde_json::json!({ "benign_accuracy": benign_acc }),
        )
    }

    /// Tunes (or applies) the attack and writes the adversarial set plus its
    /// prioritize/eval split.
    pub fn run_gen_adv(&self) -> Result<()> {
        self.echo_config()?;
        let dir = self.dir("adv");
        ensure_dir(&dir)?;
        let hash = self.hash_adv()?;
        if stage_cached(&dir, &hash) {
            return Ok(());
        }

        let net = self.load_mut()?;
        let (_, val) = self.load_split_sets()?;
        let attack_cfg = match (&self.cfg.attack.strength, self.cfg.attack.kind) {
            (AttackStrength::Band, kind) => {
                tune_attack_with(&net, &val, kind, self.cfg.attack.gamma)?
            }
            (AttackStrength::Explicit { value }, AttackKind::Fgsm) => AttackConfig::fgsm(*value),
            (AttackStrength::Explicit { value }, AttackKind::Jsma) => {
                AttackConfig::jsma(*value, self.cfg.attack.gamma)
            }
        };
        let adv = match self.cfg.attack.kind {
            AttackKind::Fgsm => fgsm(&net, &val, attack_cfg.epsilon)?,
            AttackKind::Jsma => jsma_batch(&net, &val, &attack_cfg)?,
        };
        save_adv_set(&adv, &dir, "set")?;

        let acc_benign = net.accuracy(&val)?;
        let acc_adv = net.accuracy(&adv.adversarial_labeled()?)?;
        let split_spec = SplitSpec {
            fractions: vec![1.0 - self.cfg.eval_fraction, self.cfg.eval_fraction],
            seed: seed::child(self.cfg.seed, "adv-split"),
        };
        let mut parts = split_indices(adv.len(), &split_spec)?;
        let eval_ids = parts.pop().expect("two parts");
        let prioritize_ids = parts.pop().expect("two parts");
        write_json(
            &dir.join("split.json"),
            &SplitArtifact {
                prioritize_ids,
                eval_ids,
            },
        )?;

        write_stage(
            &dir,
            &hash,
            serde_json::json!({
                "attack": attack_cfg,
                "benign_accuracy": acc_benign,
                "adversarial_accuracy": acc_adv,
            }),
        )
    }

    /// Builds the behavioral model against the trained model's labels.
    pub fn run_build_surrogate(&self) -> Result<()> {
        self.echo_config()?;
        let dir = self.dir("surrogate");
        ensure_dir(&dir)?;
        let hash = self.hash_surrogate()?;
        if stage_cached(&dir, &hash) {
            return Ok(());
        }

        let net = self.load_mut()?;
        let (train, val) = self.load_split_sets()?;
        let want = self.cfg.surrogate.seed_points.min(train.len());
        let spec = SplitSpec {
            fractions: vec![1.0],
            seed: seed::child(self.cfg.seed, "surrogate-seed-points"),
        };
        let order = split_indices(train.len(), &spec)?.pop().expect("one part");
        let x_init = train.subset(&order[..want]).unlabeled();

        let b0 = Network::mlp(
            train.dim(),
            &self.cfg.surrogate.hidden,
            train.num_classes(),
            seed::child(self.cfg.seed, "surrogate-init"),
        )?;
        let scfg = SurrogateConfig {
            tau: self.cfg.surrogate.tau,
            patience: self.cfg.surrogate.patience,
            lambda: self.cfg.surrogate.lambda,
            max_rounds: self.cfg.surrogate.max_rounds,
            train: TrainConfig {
                learning_rate: self.cfg.surrogate.learning_rate,
                epochs: self.cfg.surrogate.epochs,
                batch_size: self.cfg.surrogate.batch_size,
                seed: seed::child(self.cfg.seed, "surrogate-train"),
                l2: self.cfg.surrogate.l2,
            },
        };
        let oracle = NetworkOracle::new(&net);
        let (surrogate, trace) = build_surrogate(&b0, &oracle, &x_init, &val, &scfg)?;
        save_network(&surrogate, &dir.join("network.json"))?;
        fs::write(dir.join("trace.csv"), trace.to_csv())?;
        write_stage(
            &dir,
            &hash,
            serde_json::json!({
                "similarity": trace.final_similarity(),
                "terminal": trace.terminal,
                "rounds": trace.rounds.len(),
                "oracle_queries": oracle.queries(),
            }),
        )
    }

    /// Grows the 100-mutant pool, measures the benign score threshold, and
    /// calibrates the mutant budget on the probe subset.
    pub fn run_calibrate(&self) -> Result<()> {
        self.echo_config()?;
        let dir = self.dir("calibrate");
        ensure_dir(&dir)?;
        let hash = self.hash_calibrate()?;
        if stage_cached(&dir, &hash) {
            return Ok(());
        }

        let surrogate = self.load_surrogate()?;
        let (_, val) = self.load_split_sets()?;
        let adv = self.load_adv()?;
        let split = self.load_adv_split()?;

        let mut pool = MutantPool::new(
            surrogate,
            self.mutant_template(),
            seed::child(self.cfg.seed, "pool"),
            self.cfg.mutation.min_agreement,
            val.clone(),
        )?;
        pool.grow(ZETA_POOL)?;
        let zeta_h = calibrate_zeta(&pool, &val)?;
        let sprt_cfg = self.sprt_config(zeta_h);

        let part = adv.adversarials.subset(&split.prioritize_ids);
        let calibration = calibrate_nmax(
            &mut pool,
            &part,
            &sprt_cfg,
            seed::child(self.cfg.seed, "nmax-subset"),
        )?;
        // Remap probe ids from part-local to adversarial-set row indices.
        let subset_ids: Vec<usize> = calibration
            .subset_ids
            .iter()
            .map(|&i| split.prioritize_ids[i])
            .collect();
        let states: Vec<SprtState> = calibration
            .states
            .into_iter()
            .map(|mut s| {
                s.input_id = split.prioritize_ids[s.input_id];
                s
            })
            .collect();

        write_json(&dir.join("pool.json"), &pool.manifest()?)?;
        write_json(
            &dir.join("calibration.json"),
            &CalibrationArtifact {
                zeta_h,
                n_max: calibration.n_max,
                subset_ids,
                states,
            },
        )?;
        write_stage(
            &dir,
            &hash,
            serde_json::json!({
                "zeta_h": zeta_h,
                "n_max": calibration.n_max,
                "pool_size": pool.len(),
            }),
        )
    }

    /// Runs the sequential test over the remaining adversarial inputs and
    /// writes the prioritized suite.
    pub fn run_prioritize(&self) -> Result<()> {
        self.echo_config()?;
        let dir = self.dir("suite");
        ensure_dir(&dir)?;
        let hash = self.hash_prioritize()?;
        if stage_cached(&dir, &hash) {
            return Ok(());
        }

        let surrogate = self.load_surrogate()?;
        let (_, val) = self.load_split_sets()?;
        let adv = self.load_adv()?;
        let split = self.load_adv_split()?;
        let (manifest, calibration) = self.load_calibration()?;
        let pool = self.restore_pool(surrogate, &manifest, val)?;

        let probe: HashSet<usize> = calibration.subset_ids.iter().copied().collect();
        let rest_ids: Vec<usize> = split
            .prioritize_ids
            .iter()
            .copied()
            .filter(|id| !probe.contains(id))
            .collect();

        let sprt_cfg = self.sprt_config(calibration.zeta_h);
        let suite = prioritize(
            &pool,
            &adv.adversarials,
            &rest_ids,
            calibration.n_max,
            &sprt_cfg,
            &calibration.states,
        )?;
        write_json(&dir.join("suite.json"), &suite)?;
        fs::write(dir.join("lbt.csv"), suite.to_csv(&sprt_cfg)?)?;
        write_stage(
            &dir,
            &hash,
            serde_json::json!({
                "k": suite.selected.len(),
                "discarded": suite.discarded.len(),
                "undecided": suite.undecided.len(),
                "n_max": suite.n_max,
            }),
        )
    }

    /// Per-method score vectors over the prioritization part, higher-first
    /// or lower-first as each method demands.
    fn baseline_ranking(
        &self,
        method: &str,
        rank_seed: u64,
        part_ids: &[usize],
        adv: &AdvSet<f64>,
        net: &Network<f64>,
        train: &LabeledSet<f64>,
    ) -> Result<RankedList> {
        if method == "random" {
            return random_rank(part_ids, rank_seed);
        }
        let provider = NetworkActivations::new(net);
        let mut scores = Vec::with_capacity(part_ids.len());
        match method {
            "gini" | "pe" | "maxp" => {
                for &id in part_ids {
                    let probs = net.forward_row(adv.adversarials.row(id))?;
                    scores.push(match method {
                        "gini" => gini(&probs)?,
                        "pe" => pe(&probs)?,
                        _ => maxp(&probs)?,
                    });
                }
            }
            "nac" => {
                for &id in part_ids {
                    scores.push(nac(
                        &provider,
                        adv.adversarials.row(id),
                        self.cfg.baselines.nac_threshold,
                    )?);
                }
            }
            "nbc" => {
                let bounds = activation_bounds(&provider, train)?;
                for &id in part_ids {
                    scores.push(nbc(&provider, adv.adversarials.row(id), &bounds)?);
                }
            }
            "dsa" | "kde" => {
                let refs = TrainRefs::new(&provider, train)?;
                for &id in part_ids {
                    scores.push(match method {
                        "dsa" => dsa(&provider, adv.adversarials.row(id), &refs)?,
                        _ => kde_score(&provider, adv.adversarials.row(id), &refs)?,
                    });
                }
            }
            other => return Err(Error::Config(format!("unknown method `{other}`"))),
        }
        let direction = match method {
            "maxp" | "kde" => Direction::LowerFirst,
            _ => Direction::HigherFirst,
        };
        rank_by(part_ids, &scores, direction)
    }

    fn enabled_baselines(&self) -> Vec<&'static str> {
        let b = &self.cfg.baselines;
        METHOD_ORDER
            .iter()
            .copied()
            .filter(|m| match *m {
                "lbt" => false,
                "random" => b.random,
                "gini" => b.gini,
                "pe" => b.pe,
                "maxp" => b.maxp,
                "nac" => b.nac,
                "nbc" => b.nbc,
                "dsa" => b.dsa,
                "kde" => b.kde,
                _ => false,
            })
            .collect()
    }

    /// Ranks every enabled baseline, evaluates all methods at the LBT
    /// budget, computes retraining deltas, and writes the report.
    pub fn run_evaluate(&self) -> Result<Vec<EvalReport>> {
        self.echo_config()?;
        let dir = self.dir("report");
        let base_dir = self.dir("baselines");
        ensure_dir(&dir)?;
        ensure_dir(&base_dir)?;
        let hash = self.hash_evaluate()?;
        if stage_cached(&dir, &hash) {
            let manifest: RunManifest = read_json(&dir.join("report.json"), "evaluate")?;
            return Ok(manifest.reports);
        }

        let net = self.load_mut()?;
        let (train, _) = self.load_split_sets()?;
        let adv = self.load_adv()?;
        let split = self.load_adv_split()?;
        let suite = self.load_suite()?;

        let mut part_ids = split.prioritize_ids.clone();
        part_ids.sort_unstable();
        let true_labels = adv
            .originals
            .labels()
            .expect("originals carry ground truth");

        // Fault records over the whole prioritization part.
        let part_truth: Vec<usize> = part_ids.iter().map(|&id| true_labels[id]).collect();
        let part_preds: Vec<usize> = part_ids
            .iter()
            .map(|&id| net.predict_row(adv.adversarials.row(id)))
            .collect::<Result<_>>()?;
        let part_records = fault_records(&part_ids, &part_truth, &part_preds)?;
        let total_faults = part_records.iter().filter(|r| r.is_fault()).count();
        if total_faults == 0 {
            return Err(Error::Domain(
                "the adversarial set revealed no faults; nothing to evaluate".into(),
            ));
        }
        let record_of: std::collections::HashMap<usize, FaultRecord> =
            part_records.iter().map(|r| (r.input_id, *r)).collect();

        let k = suite.selected.len();
        if k == 0 {
            return Err(Error::Domain(
                "the sequential test selected no inputs; nothing to evaluate".into(),
            ));
        }

        // Evaluation split for retraining deltas.
        let eval_set = {
            let rows = adv.adversarials.subset(&split.eval_ids);
            let ys: Vec<usize> = split.eval_ids.iter().map(|&id| true_labels[id]).collect();
            rows.with_labels(ys)?
        };
        let retrain_cfg = TrainConfig {
            learning_rate: self.cfg.retrain.learning_rate,
            epochs: self.cfg.retrain.epochs,
            batch_size: self.cfg.retrain.batch_size,
            seed: seed::child(self.cfg.seed, "retrain"),
            l2: self.cfg.retrain.l2,
        };

        let evaluate_method = |method: &str, permutation: &[usize]| -> Result<EvalReport> {
            let subset_records: Vec<FaultRecord> =
                permutation.iter().map(|id| record_of[id]).collect();
            let fdr_v = fdr(permutation, &part_records, total_faults)?;
            let (apfd_raw, apfd_norm) = apfd(permutation, &subset_records)?;
            let rauc_v = rauc(permutation, &subset_records)?;

            let selected_set = {
                let rows = adv.adversarials.subset(permutation);
                let ys: Vec<usize> = permutation.iter().map(|&id| true_labels[id]).collect();
                rows.with_labels(ys)?
            };
            let delta = retrain_eval(
                &net,
                &selected_set,
                permutation,
                &eval_set,
                &split.eval_ids,
                &retrain_cfg,
            )?;

            let report = EvalReport {
                method: method.to_string(),
                k,
                fdr: fdr_v,
                apfd_raw,
                apfd_norm,
                rauc: rauc_v,
                retrain_delta: Some(delta),
                seed: self.cfg.seed,
            };
            report.validate()?;
            Ok(report)
        };

        let mut reports = Vec::new();
        reports.push(evaluate_method("lbt", &suite.selected_ids())?);

        for method in self.enabled_baselines() {
            let ranked = self.baseline_ranking(
                method,
                seed::child(self.cfg.seed, "baseline-random"),
                &part_ids,
                &adv,
                &net,
                &train,
            )?;
            let header = serde_json::json!({ "method": method, "k": k, "seed": self.cfg.seed });
            fs::write(
                base_dir.join(format!("{method}.csv")),
                ranked.to_csv(k, &header)?,
            )?;
            write_json(&base_dir.join(format!("{method}.json")), &ranked)?;
            reports.push(evaluate_method(method, &ranked.top_k(k))?);
        }

        let mut csv = String::from(EvalReport::csv_header());
        csv.push('\n');
        for r in &reports {
            csv.push_str(&r.csv_row());
            csv.push('\n');
        }
        fs::write(dir.join("report.csv"), csv)?;
        write_json(
            &dir.join("report.json"),
            &RunManifest {
                config: self.cfg.clone(),
                reports: reports.clone(),
            },
        )?;
        write_stage(
            &dir,
            &hash,
            serde_json::json!({ "methods": reports.len(), "k": k }),
        )?;
        Ok(reports)
    }

    /// Runs every stage in order under the run lock.
    pub fn run_all(&self) -> Result<Vec<EvalReport>> {
        let _lock = self.lock()?;
        self.run_through(STAGE_ORDER[STAGE_ORDER.len() - 1])
    }

    /// Runs stages up to and including `stage` (caller holds no lock).
    pub fn run_through(&self, stage: &str) -> Result<Vec<EvalReport>> {
        let upto = STAGE_ORDER
            .iter()
            .position(|s| *s == stage)
            .ok_or_else(|| Error::Config(format!("unknown stage `{stage}`")))?;
        for name in &STAGE_ORDER[..=upto] {
            self.run_stage_inner(name)?;
        }
        if upto == STAGE_ORDER.len() - 1 {
            let manifest: RunManifest =
                read_json(&self.dir("report").join("report.json"), "evaluate")?;
            Ok(manifest.reports)
        } else {
            Ok(Vec::new())
        }
    }

    fn run_stage_inner(&self, name: &str) -> Result<()> {
        match name {
            "data" => self.run_data(),
            "train-mut" => self.run_train_mut(),
            "gen-adv" => self.run_gen_adv(),
            "build-surrogate" => self.run_build_surrogate(),
            "calibrate" => self.run_calibrate(),
            "prioritize" => self.run_prioritize(),
            "evaluate" => self.run_evaluate().map(|_| ()),
            other => Err(Error::Config(format!("unknown stage `{other}`"))),
        }
    }

    // ----- views and single-method utilities ------------------------------

    /// Formats the finished report as an aligned text table.
    pub fn report_table(&self) -> Result<String> {
        let manifest: RunManifest = read_json(&self.dir("report").join("report.json"), "evaluate")?;
        let reports = manifest.reports;
        let mut out = String::new();
        out.push_str(&format!(
            "{:<8} {:>6} {:>8} {:>10} {:>10} {:>8} {:>14}\n",
            "method", "k", "fdr", "apfd_raw", "apfd_norm", "rauc", "retrain_delta"
        ));
        for r in &reports {
            out.push_str(&format!(
                "{:<8} {:>6} {:>8.4} {:>10.4} {:>10.4} {:>8.4} {:>14}\n",
                r.method,
                r.k,
                r.fdr,
                r.apfd_raw,
                r.apfd_norm,
                r.rauc,
                r.retrain_delta
                    .map_or(String::from("-"), |d| format!("{d:+.4}")),
            ));
        }
        Ok(out)
    }

    /// Re-ranks one method on demand (the `prioritize --method` path).
    pub fn rank_method(&self, method: &str, rank_seed: u64) -> Result<RankedList> {
        if method == "lbt" {
            return Err(Error::Config(
                "lbt ranking is the `prioritize` stage itself; run it without --method".into(),
            ));
        }
        let net = self.load_mut()?;
        let (train, _) = self.load_split_sets()?;
        let adv = self.load_adv()?;
        let split = self.load_adv_split()?;
        let mut part_ids = split.prioritize_ids;
        part_ids.sort_unstable();
        self.baseline_ranking(method, rank_seed, &part_ids, &adv, &net, &train)
    }

    /// Recomputes the retraining delta for one finished method.
    pub fn retrain_method(&self, method: &str) -> Result<f64> {
        let net = self.load_mut()?;
        let adv = self.load_adv()?;
        let split = self.load_adv_split()?;
        let true_labels = adv
            .originals
            .labels()
            .expect("originals carry ground truth");

        let permutation: Vec<usize> = if method == "lbt" {
            self.load_suite()?.selected_ids()
        } else {
            let ranked: RankedList = read_json(
                &self.dir("baselines").join(format!("{method}.json")),
                "evaluate",
            )?;
            let suite = self.load_suite()?;
            ranked.top_k(suite.selected.len())
        };
        if permutation.is_empty() {
            return Err(Error::Domain("nothing selected to retrain on".into()));
        }

        let selected_set = {
            let rows = adv.adversarials.subset(&permutation);
            let ys: Vec<usize> = permutation.iter().map(|&id| true_labels[id]).collect();
            rows.with_labels(ys)?
        };
        let eval_set = {
            let rows = adv.adversarials.subset(&split.eval_ids);
            let ys: Vec<usize> = split.eval_ids.iter().map(|&id| true_labels[id]).collect();
            rows.with_labels(ys)?
        };
        let retrain_cfg = TrainConfig {
            learning_rate: self.cfg.retrain.learning_rate,
            epochs: self.cfg.retrain.epochs,
            batch_size: self.cfg.retrain.batch_size,
            seed: seed::child(self.cfg.seed, "retrain"),
            l2: self.cfg.retrain.l2,
        };
        retrain_eval(
            &net,
            &selected_set,
            &permutation,
            &eval_set,
            &split.eval_ids,
            &retrain_cfg,
        )
    }

    /// Calibration summary for the `calibrate` subcommand.
    pub fn calibration_summary(&self) -> Result<String> {
        let (_, cal) = self.load_calibration()?;
        let cfg = self.sprt_config(cal.zeta_h);
        Ok(format!(
            "zeta_h = {:.6}\nn_max = {}\np0 = {:.6}\np1 = {:.6}\nalpha = {}\nbeta = {}\ndelta = {}\nprobe_subset = {}\n",
            cal.zeta_h,
            cal.n_max,
            cfg.p0(),
            cfg.p1(),
            cfg.alpha,
            cfg.beta,
            cfg.delta,
            cal.subset_ids.len(),
        ))
    }
}
