//! Knowledge-driven meta task environment.
//!
//! CSI samples are synthesised as `W = S_p(:, S) · Ê · F(:, F)ᴴ` with random
//! unitary spatial groups `S_p = U^h ⊗ U^v` and one frequency basis `F`, then
//! normalised per subband. Index sets nest task ⊇ UE ⊇ slot so that samples
//! of one UE share dominant directions while slots still differ.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{CsiEigen, Origin, SystemConfig};
use crate::error::{Error, Result};
use crate::numerics::{
    complex_gaussian, gram_schmidt, kron, vec_norm, ComplexMatrix, Purpose, RngStream,
};

const MAX_REDRAWS: usize = 16;

/// Sizing of the meta task environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaEnvConfig {
    /// Number of tasks `T`.
    pub tasks: usize,
    /// Number of spatial basis groups `P`.
    pub groups: usize,
    /// Maximum UEs per task.
    pub max_ues: usize,
    /// Maximum slots per UE.
    pub max_slots: usize,
    /// Spatial diversity degree `L_task`.
    pub l_task: usize,
    /// Frequency diversity degree `M_task`.
    pub m_task: usize,
    /// Slot-level spatial diversity scale.
    pub alpha: f64,
    /// Slot-level frequency diversity scale.
    pub beta: f64,
    #[serde(default)]
    pub seed: u64,
}

impl MetaEnvConfig {
    /// Desk defaults: T=200, P=8, up to 8 UEs × 8 slots, `L_task = 6`,
    /// `M_task = n_sb`, α = β = 0.75.
    pub fn desk(sys: &SystemConfig) -> Self {
        Self {
            tasks: 200,
            groups: 8,
            max_ues: 8,
            max_slots: 8,
            l_task: 6.min(sys.n_t),
            m_task: 6.min(sys.n_sb),
            alpha: 0.75,
            beta: 0.75,
            seed: 0,
        }
    }

    pub fn validate(&self, sys: &SystemConfig) -> Result<()> {
        for (name, v) in [
            ("meta_env.tasks", self.tasks),
            ("meta_env.groups", self.groups),
            ("meta_env.max_ues", self.max_ues),
            ("meta_env.max_slots", self.max_slots),
            ("meta_env.l_task", self.l_task),
            ("meta_env.m_task", self.m_task),
        ] {
            if v == 0 {
                return Err(Error::config(name, "must be at least 1"));
            }
        }
        if self.l_task > sys.n_t {
            return Err(Error::config(
                "meta_env.l_task",
                format!("must not exceed n_t = {}", sys.n_t),
            ));
        }
        if self.m_task > sys.n_sb {
            return Err(Error::config(
                "meta_env.m_task",
                format!("must not exceed n_sb = {}", sys.n_sb),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config("meta_env.alpha", "must lie in (0, 1]"));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::config("meta_env.beta", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Unitary spatial group `S = U^h ⊗ U^v` with its factors.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGroup {
    pub horizontal: ComplexMatrix,
    pub vertical: ComplexMatrix,
    pub basis: ComplexMatrix,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    pub spatial_groups: Vec<SpatialGroup>,
    pub freq_basis: ComplexMatrix,
}

fn random_unitary(rng: &mut RngStream, n: usize) -> Result<ComplexMatrix> {
    let mut last = None;
    for _ in 0..=MAX_REDRAWS {
        match gram_schmidt(&complex_gaussian(rng, n, n)) {
            Ok(u) => return Ok(u),
            Err(e @ Error::RankDeficient { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one draw"))
}

/// Draws `P` spatial groups and the frequency basis by orthogonalising
/// complex Gaussian matrices.
pub fn build_bases(
    sys: &SystemConfig,
    cfg: &MetaEnvConfig,
    rng: &mut RngStream,
) -> Result<BasisSet> {
    let mut spatial_groups = Vec::with_capacity(cfg.groups);
    for _ in 0..cfg.groups {
        let horizontal = random_unitary(rng, sys.n_h)?;
        let vertical = random_unitary(rng, sys.n_v)?;
        let basis = kron(&horizontal, &vertical);
        spatial_groups.push(SpatialGroup {
            horizontal,
            vertical,
            basis,
        });
    }
    let freq_basis = random_unitary(rng, sys.n_sb)?;
    Ok(BasisSet {
        spatial_groups,
        freq_basis,
    })
}

/// Dominant index sets of one UE inside a task.
#[derive(Debug, Clone, PartialEq)]
pub struct UeStructure {
    /// `S̃_m ⊆ Ŝ_j`, zero-based port-basis indices.
    pub spatial: Vec<usize>,
    /// `F̃_m ⊆ F̂_j`, zero-based frequency-basis indices.
    pub freq: Vec<usize>,
}

/// Random structure of one task, before any sample is drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskStructure {
    pub task_id: u32,
    pub group: usize,
    pub spatial: Vec<usize>,
    pub freq: Vec<usize>,
    pub n_ues: usize,
    pub n_slots: usize,
    pub ues: Vec<UeStructure>,
}

/// Provenance of one synthesised slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub ue: usize,
    pub slot: usize,
    pub spatial: Vec<usize>,
    pub freq: Vec<usize>,
    /// Projection coefficients `Ê`, kept only when requested.
    pub coeffs: Option<ComplexMatrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaTask {
    pub structure: TaskStructure,
    /// Samples grouped by UE, then slot. Parallel to `slots`.
    pub samples: Vec<CsiEigen>,
    pub slots: Vec<SlotRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaEnv {
    pub config: MetaEnvConfig,
    pub bases: BasisSet,
    pub tasks: Vec<MetaTask>,
}

impl MetaEnv {
    pub fn sample_count(&self) -> usize {
        self.tasks.iter().map(|t| t.samples.len()).sum()
    }
}

/// Draws the UE/slot counts, basis group and nested index sets of task `j`.
pub fn sample_task_structure(
    sys: &SystemConfig,
    cfg: &MetaEnvConfig,
    task_id: u32,
    rng: &mut RngStream,
) -> TaskStructure {
    let n_ues = rng.uniform_int(1, cfg.max_ues);
    let n_slots = rng.uniform_int(1, cfg.max_slots);
    let group = rng.uniform_int(0, cfg.groups - 1);
    let all_ports: Vec<usize> = (0..sys.n_t).collect();
    let all_bands: Vec<usize> = (0..sys.n_sb).collect();
    let spatial = rng.choose_without_replacement(&all_ports, cfg.l_task);
    let freq = rng.choose_without_replacement(&all_bands, cfg.m_task);
    let ues = (0..n_ues)
        .map(|_| {
            let l_m = rng.uniform_int(1, cfg.l_task);
            let m_m = rng.uniform_int(1, cfg.m_task);
            UeStructure {
                spatial: rng.choose_without_replacement(&spatial, l_m),
                freq: rng.choose_without_replacement(&freq, m_m),
            }
        })
        .collect();
    TaskStructure {
        task_id,
        group,
        spatial,
        freq,
        n_ues,
        n_slots,
        ues,
    }
}

/// `⌈scale · n⌉`, kept within `[1, n]`.
pub fn slot_count(scale: f64, n: usize) -> usize {
    ((scale * n as f64).ceil() as usize).clamp(1, n)
}

/// One synthesised slot with the factors that produced it.
#[derive(Debug, Clone)]
pub struct SynthSample {
    pub csi: CsiEigen,
    pub spatial: Vec<usize>,
    pub freq: Vec<usize>,
    pub coeffs: ComplexMatrix,
}

/// Normalised `S_p(:, S_mn) · Ê · F(:, F_mn)ᴴ`.
pub fn compose_sample(
    basis: &BasisSet,
    group: usize,
    spatial: &[usize],
    freq: &[usize],
    coeffs: &ComplexMatrix,
) -> ComplexMatrix {
    let s = basis.spatial_groups[group].basis.select_columns(spatial);
    let f = basis.freq_basis.select_columns(freq);
    s.matmul(coeffs).matmul(&f.adjoint())
}

/// Synthesises the CSI of slot `slot` of UE `ue` in `task`.
pub fn synth_sample(
    basis: &BasisSet,
    cfg: &MetaEnvConfig,
    task: &TaskStructure,
    ue: usize,
    slot: usize,
    rng: &mut RngStream,
) -> Result<SynthSample> {
    let ue_set = &task.ues[ue];
    let spatial = rng
        .choose_without_replacement(&ue_set.spatial, slot_count(cfg.alpha, ue_set.spatial.len()));
    let freq =
        rng.choose_without_replacement(&ue_set.freq, slot_count(cfg.beta, ue_set.freq.len()));

    let mut degenerate = 0;
    for _ in 0..MAX_REDRAWS {
        let coeffs = complex_gaussian(rng, spatial.len(), freq.len());
        let mut w = compose_sample(basis, task.group, &spatial, &freq, &coeffs);
        let norms: Vec<f64> = (0..w.cols()).map(|l| vec_norm(&w.column(l))).collect();
        if let Some(l) = norms.iter().position(|&n| n < 1e-15) {
            degenerate = l;
            continue;
        }
        for (l, n) in norms.iter().enumerate() {
            let col: Vec<_> = w.column(l).iter().map(|z| z / n).collect();
            w.set_column(l, &col);
        }
        let n_sb = w.cols();
        return Ok(SynthSample {
            csi: CsiEigen {
                w,
                eigvals: vec![0.0; n_sb],
                ue_id: ue as u32,
                slot: slot as u32,
                task_id: Some(task.task_id),
                origin: Origin::MetaSynth,
            },
            spatial,
            freq,
            coeffs,
        });
    }
    Err(Error::DegenerateColumn {
        column: degenerate,
        attempts: MAX_REDRAWS,
    })
}

/// Deterministic per-task generator; tasks can be produced in any order.
#[derive(Debug, Clone)]
pub struct TaskGenerator {
    pub sys: SystemConfig,
    pub config: MetaEnvConfig,
    pub bases: BasisSet,
    pub keep_coeffs: bool,
}

impl TaskGenerator {
    pub fn new(sys: &SystemConfig, cfg: &MetaEnvConfig) -> Result<Self> {
        sys.validate()?;
        cfg.validate(sys)?;
        let mut rng = RngStream::keyed(cfg.seed, Purpose::Bases, &[]);
        let bases = build_bases(sys, cfg, &mut rng)?;
        Ok(Self {
            sys: *sys,
            config: cfg.clone(),
            bases,
            keep_coeffs: false,
        })
    }

    pub fn keep_coefficients(mut self, keep: bool) -> Self {
        self.keep_coeffs = keep;
        self
    }

    pub fn task(&self, task_id: u32) -> Result<MetaTask> {
        let seed = self.config.seed;
        let mut rng = RngStream::keyed(seed, Purpose::TaskStructure, &[task_id as u64]);
        let structure = sample_task_structure(&self.sys, &self.config, task_id, &mut rng);
        let total = structure.n_ues * structure.n_slots;
        let mut samples = Vec::with_capacity(total);
        let mut slots = Vec::with_capacity(total);
        for ue in 0..structure.n_ues {
            for slot in 0..structure.n_slots {
                let mut rng = RngStream::keyed(
                    seed,
                    Purpose::SlotSample,
                    &[task_id as u64, ue as u64, slot as u64],
                );
                let s = synth_sample(&self.bases, &self.config, &structure, ue, slot, &mut rng)?;
                samples.push(s.csi);
                slots.push(SlotRecord {
                    ue,
                    slot,
                    spatial: s.spatial,
                    freq: s.freq,
                    coeffs: self.keep_coeffs.then_some(s.coeffs),
                });
            }
        }
        Ok(MetaTask {
            structure,
            samples,
            slots,
        })
    }

    /// Generates tasks `range` in parallel, returned in task order.
    pub fn tasks(&self, range: std::ops::Range<u32>) -> Result<Vec<MetaTask>> {
        range.into_par_iter().map(|j| self.task(j)).collect()
    }

    pub fn into_env(self) -> Result<MetaEnv> {
        let tasks = self.tasks(0..self.config.tasks as u32)?;
        Ok(MetaEnv {
            config: self.config,
            bases: self.bases,
            tasks,
        })
    }
}

/// Builds the full environment in memory.
pub fn build_meta_env(sys: &SystemConfig, cfg: &MetaEnvConfig) -> Result<MetaEnv> {
    TaskGenerator::new(sys, cfg)?.into_env()
}

fn is_subset(sub: &[usize], sup: &[usize]) -> bool {
    sub.iter().all(|x| sup.contains(x))
}

fn is_distinct(v: &[usize]) -> bool {
    let mut s = v.to_vec();
    s.sort_unstable();
    s.windows(2).all(|w| w[0] != w[1])
}

/// Checks nesting, cardinality and normalisation of one task; returns one
/// message per violation.
pub fn audit_task(sys: &SystemConfig, cfg: &MetaEnvConfig, task: &MetaTask) -> Vec<String> {
    let mut bad = Vec::new();
    let st = &task.structure;
    let j = st.task_id;
    if st.spatial.len() != cfg.l_task
        || !is_distinct(&st.spatial)
        || st.spatial.iter().any(|&i| i >= sys.n_t)
    {
        bad.push(format!("task {j}: task spatial set {:?}", st.spatial));
    }
    if st.freq.len() != cfg.m_task
        || !is_distinct(&st.freq)
        || st.freq.iter().any(|&i| i >= sys.n_sb)
    {
        bad.push(format!("task {j}: task frequency set {:?}", st.freq));
    }
    if st.group >= cfg.groups {
        bad.push(format!("task {j}: group {} out of range", st.group));
    }
    if !(1..=cfg.max_ues).contains(&st.n_ues) || !(1..=cfg.max_slots).contains(&st.n_slots) {
        bad.push(format!(
            "task {j}: {} ues x {} slots out of range",
            st.n_ues, st.n_slots
        ));
    }
    if st.ues.len() != st.n_ues || task.samples.len() != st.n_ues * st.n_slots {
        bad.push(format!("task {j}: sample count {}", task.samples.len()));
    }
    for (m, ue) in st.ues.iter().enumerate() {
        if ue.spatial.is_empty()
            || ue.spatial.len() > cfg.l_task
            || !is_distinct(&ue.spatial)
            || !is_subset(&ue.spatial, &st.spatial)
        {
            bad.push(format!("task {j} ue {m}: spatial set {:?}", ue.spatial));
        }
        if ue.freq.is_empty()
            || ue.freq.len() > cfg.m_task
            || !is_distinct(&ue.freq)
            || !is_subset(&ue.freq, &st.freq)
        {
            bad.push(format!("task {j} ue {m}: frequency set {:?}", ue.freq));
        }
    }
    for (rec, sample) in task.slots.iter().zip(&task.samples) {
        let Some(ue) = st.ues.get(rec.ue) else {
            bad.push(format!("task {j}: slot references ue {}", rec.ue));
            continue;
        };
        let want_s = slot_count(cfg.alpha, ue.spatial.len());
        let want_f = slot_count(cfg.beta, ue.freq.len());
        if rec.spatial.len() != want_s
            || !is_distinct(&rec.spatial)
            || !is_subset(&rec.spatial, &ue.spatial)
        {
            bad.push(format!(
                "task {j} ue {} slot {}: spatial {:?}",
                rec.ue, rec.slot, rec.spatial
            ));
        }
        if rec.freq.len() != want_f || !is_distinct(&rec.freq) || !is_subset(&rec.freq, &ue.freq) {
            bad.push(format!(
                "task {j} ue {} slot {}: frequency {:?}",
                rec.ue, rec.slot, rec.freq
            ));
        }
        if sample.ue_id as usize != rec.ue
            || sample.slot as usize != rec.slot
            || sample.task_id != Some(j)
        {
            bad.push(format!("task {j}: sample metadata mismatch"));
        }
        if sample.max_norm_error() >= 1e-12 {
            bad.push(format!(
                "task {j} ue {} slot {}: column norm",
                rec.ue, rec.slot
            ));
        }
    }
    bad
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg(sys: &SystemConfig) -> MetaEnvConfig {
        MetaEnvConfig {
            tasks: 2,
            max_ues: 2,
            max_slots: 3,
            seed: 5,
            ..MetaEnvConfig::desk(sys)
        }
    }

    #[test]
    fn bases_are_unitary_kronecker_products() {
        let sys = SystemConfig::desk();
        let cfg = MetaEnvConfig {
            groups: 4,
            ..MetaEnvConfig::desk(&sys)
        };
        let mut rng = RngStream::new(1, 0);
        let b = build_bases(&sys, &cfg, &mut rng).unwrap();
        assert_eq!(b.spatial_groups.len(), 4);
        for g in &b.spatial_groups {
            assert!(g.basis.unitarity_defect() < 1e-10);
            assert_eq!(g.basis, kron(&g.horizontal, &g.vertical));
        }
        assert!(b.freq_basis.unitarity_defect() < 1e-10);
    }

    #[test]
    fn scalar_spatial_groups_for_single_port() {
        let sys = SystemConfig::new(1, 1, 1, 2, 4, 1);
        let cfg = MetaEnvConfig {
            l_task: 1,
            ..MetaEnvConfig::desk(&sys)
        };
        let b = build_bases(&sys, &cfg, &mut RngStream::new(2, 0)).unwrap();
        for g in &b.spatial_groups {
            assert_eq!((g.basis.rows(), g.basis.cols()), (1, 1));
            assert!((g.basis[(0, 0)].norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn single_ue_single_slot_tasks() {
        let sys = SystemConfig::desk();
        let cfg = MetaEnvConfig {
            tasks: 5,
            max_ues: 1,
            max_slots: 1,
            ..MetaEnvConfig::desk(&sys)
        };
        let env = build_meta_env(&sys, &cfg).unwrap();
        assert!(env.tasks.iter().all(|t| t.samples.len() == 1));
    }

    #[test]
    fn full_sets_when_sampling_everything() {
        let sys = SystemConfig::desk();
        let cfg = MetaEnvConfig {
            l_task: sys.n_t,
            m_task: sys.n_sb,
            ..MetaEnvConfig::desk(&sys)
        };
        let mut rng = RngStream::new(3, 0);
        for j in 0..200 {
            let st = sample_task_structure(&sys, &cfg, j, &mut rng);
            let mut s = st.spatial.clone();
            s.sort_unstable();
            assert_eq!(s, (0..sys.n_t).collect::<Vec<_>>());
            for ue in &st.ues {
                if ue.spatial.len() == sys.n_t {
                    let mut u = ue.spatial.clone();
                    u.sort_unstable();
                    assert_eq!(u, s);
                }
            }
        }
    }

    #[test]
    fn rank_one_when_single_directions() {
        let sys = SystemConfig::desk();
        let cfg = MetaEnvConfig::desk(&sys);
        let bases = build_bases(&sys, &cfg, &mut RngStream::new(4, 0)).unwrap();
        let task = TaskStructure {
            task_id: 0,
            group: 1,
            spatial: vec![0, 1, 2, 3, 4, 5],
            freq: vec![0, 1, 2, 3],
            n_ues: 1,
            n_slots: 1,
            ues: vec![UeStructure {
                spatial: vec![3],
                freq: vec![2],
            }],
        };
        let s = synth_sample(&bases, &cfg, &task, 0, 0, &mut RngStream::new(5, 0)).unwrap();
        let w = &s.csi.w;
        let c0 = w.column(0);
        for l in 1..w.cols() {
            let overlap = crate::numerics::inner(&c0, &w.column(l)).norm();
            assert!((overlap - 1.0).abs() < 1e-12);
        }
        // Columns are the chosen spatial basis vector up to phase.
        let sv = bases.spatial_groups[1].basis.column(3);
        assert!((crate::numerics::inner(&sv, &c0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn projection_energy_confined_to_selected_indices() {
        // Spatial confinement survives subband normalisation; frequency
        // confinement holds for the pre-normalisation composition.
        let sys = SystemConfig::desk();
        let cfg = MetaEnvConfig::desk(&sys);
        let gen = TaskGenerator::new(&sys, &cfg)
            .unwrap()
            .keep_coefficients(true);
        let outside_energy = |proj: &ComplexMatrix, rows: &[usize], cols: &[usize]| {
            let mut outside = 0.0;
            for i in 0..proj.rows() {
                for l in 0..proj.cols() {
                    if !(rows.contains(&i) && cols.contains(&l)) {
                        outside += proj[(i, l)].norm_sqr();
                    }
                }
            }
            outside / proj.frobenius_norm_sqr()
        };
        for j in 0..20 {
            let task = gen.task(j).unwrap();
            let s = &gen.bases.spatial_groups[task.structure.group].basis;
            let f = &gen.bases.freq_basis;
            let all_freq: Vec<usize> = (0..sys.n_sb).collect();
            for (rec, sample) in task.slots.iter().zip(&task.samples) {
                let proj = s.adjoint_matmul(&sample.w);
                assert!(outside_energy(&proj, &rec.spatial, &all_freq) < 1e-20);

                let raw = compose_sample(
                    &gen.bases,
                    task.structure.group,
                    &rec.spatial,
                    &rec.freq,
                    rec.coeffs.as_ref().unwrap(),
                );
                let proj = s.adjoint_matmul(&raw).matmul(f);
                assert!(outside_energy(&proj, &rec.spatial, &rec.freq) < 1e-20);
            }
        }
    }

    #[test]
    fn samples_reconstruct_from_stored_factors() {
        let sys = SystemConfig::desk();
        let cfg = MetaEnvConfig::desk(&sys);
        let gen = TaskGenerator::new(&sys, &cfg)
            .unwrap()
            .keep_coefficients(true);
        let task = gen.task(7).unwrap();
        for (rec, sample) in task.slots.iter().zip(&task.samples) {
            let mut w = compose_sample(
                &gen.bases,
                task.structure.group,
                &rec.spatial,
                &rec.freq,
                rec.coeffs.as_ref().unwrap(),
            );
            crate::channel::normalize_columns(&mut w).unwrap();
            assert!(w.sub(&sample.w).frobenius_norm() < 1e-12);
        }
    }

    #[test]
    fn small_env_structure_and_determinism() {
        let sys = SystemConfig::desk();
        let cfg = small_cfg(&sys);
        let env = build_meta_env(&sys, &cfg).unwrap();
        assert_eq!(env.tasks.len(), 2);
        for t in &env.tasks {
            assert!(t.samples.len() <= 6);
            assert!(audit_task(&sys, &cfg, t).is_empty());
        }
        assert_eq!(env, build_meta_env(&sys, &cfg).unwrap());
    }

    #[test]
    fn ue_count_is_uniform() {
        // Chi-square against uniform over 1..=8 with 7 degrees of freedom;
        // 18.48 is the 0.99 quantile.
        let sys = SystemConfig::desk();
        let cfg = MetaEnvConfig::desk(&sys);
        let mut counts = [0usize; 8];
        for j in 0..10_000u32 {
            let mut rng = RngStream::keyed(31, Purpose::TaskStructure, &[j as u64]);
            let st = sample_task_structure(&sys, &cfg, j, &mut rng);
            counts[st.n_ues - 1] += 1;
        }
        let expected = 10_000.0 / 8.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 18.48, "chi2 {chi2}, counts {counts:?}");
    }

    #[test]
    fn config_validation_rejects_oversized_sets() {
        let sys = SystemConfig::desk();
        let bad = MetaEnvConfig {
            l_task: sys.n_t + 1,
            ..MetaEnvConfig::desk(&sys)
        };
        assert!(
            matches!(bad.validate(&sys), Err(Error::Config { field, .. }) if field == "meta_env.l_task")
        );
        let bad = MetaEnvConfig {
            alpha: 0.0,
            ..MetaEnvConfig::desk(&sys)
        };
        assert!(bad.validate(&sys).is_err());
    }
}
