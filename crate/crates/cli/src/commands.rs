use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use qdeim_pinn::estimator::PdeSpec;
use qdeim_pinn::generate::{generate_synthetic, GeneratorConfig, InitialCondition};
use qdeim_pinn::harness::{
    error_points, export_results, greedy_count_range, kmeans_with, plot_data, read_records_csv,
    read_records_json, sweep_greedy, sweep_random, ClusterSummary, ExperimentRecord, ResultFormat,
    SweepConfig,
};
use qdeim_pinn::sampler::{qdeim_sample, random_sample, QdeimConfig, SamplePoint, SampleSet, SamplerKind};
use qdeim_pinn::siren::to_checkpoint_string;
use qdeim_pinn::snapshot::{load_snapshot, to_csv, to_matrix_text, SnapshotFormat, SnapshotMatrix};
use qdeim_pinn::trainer::{init_network, train, TrainConfig};

use crate::args::*;
use crate::config::FileConfig;
use crate::manifest::{write_atomic, RunManifest};

pub struct Ctx {
    pub common: Common,
    pub file: FileConfig,
    pub manifest: RunManifest,
}

impl Ctx {
    fn out(&self, name: impl AsRef<Path>) -> PathBuf {
        self.common.out_dir.join(name)
    }

    fn ext(&self) -> &'static str {
        match self.common.format {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }

    fn result_format(&self) -> ResultFormat {
        match self.common.format {
            Format::Csv => ResultFormat::Csv,
            Format::Json => ResultFormat::Json,
        }
    }

    fn emit(&mut self, name: impl AsRef<Path>, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.out(name);
        write_atomic(&path, bytes)?;
        self.manifest.output(&path)?;
        Ok(path)
    }

    fn input_file(&mut self, path: &Path) -> Result<()> {
        if !path.is_file() {
            bail!("input file {} does not exist", path.display());
        }
        self.manifest.input(path)
    }
}

// ---------- shared resolution ----------

fn resolve_spec(ctx: &mut Ctx, data: &DataArgs) -> Result<PdeSpec> {
    let spec_file = match &data.spec_file {
        Some(p) => Some(p.clone()),
        None => ctx.file.path("spec_file")?,
    };
    let spec = if let Some(path) = spec_file {
        ctx.input_file(&path)?;
        PdeSpec::from_json_file(&path)?
    } else {
        let name = match &data.pde {
            Some(n) => n.clone(),
            None => ctx
                .file
                .string("pde")?
                .context("no PDE given: pass --pde (allen-cahn, burgers, kdv) or --spec-file")?,
        };
        PdeSpec::preset(&name)?
    };
    ctx.manifest.config("pde", &spec)?;
    Ok(spec)
}

fn resolve_generator(ctx: &Ctx, spec: &PdeSpec, flags: &GeneratorFlags) -> Result<GeneratorConfig> {
    let mut cfg = match GeneratorConfig::preset(&spec.name) {
        Ok(preset) => ctx.file.section("generator", preset)?,
        Err(e) => ctx
            .file
            .section_only("generator")?
            .with_context(|| format!("{e}; give a 'generator' config section or --input"))?,
    };
    if let Some(v) = flags.n {
        cfg.n = v;
    }
    if let Some(v) = flags.m {
        cfg.m = v;
    }
    if let Some(v) = flags.x_min {
        cfg.x_min = v;
    }
    if let Some(v) = flags.x_max {
        cfg.x_max = v;
    }
    if let Some(v) = flags.t_max {
        cfg.t_max = v;
    }
    if let Some(name) = &flags.init {
        cfg.init = InitialCondition::by_name(name)?;
    }
    if let Some(v) = flags.gen_seed {
        cfg.seed = v;
    }
    Ok(cfg)
}

fn snapshot_format(arg: Option<SnapshotFormatArg>, path: &Path) -> SnapshotFormat {
    match arg {
        Some(SnapshotFormatArg::MatrixText) => SnapshotFormat::MatrixText,
        Some(SnapshotFormatArg::Csv) => SnapshotFormat::Csv,
        None => SnapshotFormat::from_path(path),
    }
}

/// The snapshot from `--input`, or generated from the preset when absent.
fn resolve_snapshot(ctx: &mut Ctx, data: &DataArgs, gen: &GeneratorFlags, spec: &PdeSpec) -> Result<SnapshotMatrix> {
    let input = match &data.input {
        Some(p) => Some(p.clone()),
        None => ctx.file.path("input")?,
    };
    if let Some(path) = input {
        ctx.input_file(&path)?;
        let s = load_snapshot(&path, snapshot_format(data.input_format, &path))
            .with_context(|| format!("loading snapshot {}", path.display()))?;
        return Ok(s);
    }
    let cfg = resolve_generator(ctx, spec, gen)?;
    ctx.manifest.config("generator", &cfg)?;
    ctx.manifest.seed("generator", cfg.seed);
    Ok(generate_synthetic(spec, &cfg)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
struct SamplerSettings {
    t_div: usize,
    eps: f64,
    squared_energy: bool,
    random: bool,
    size: Option<usize>,
    seed: u64,
}

impl SamplerSettings {
    fn for_pde(name: &str) -> Self {
        let q = QdeimConfig::for_pde(name).unwrap_or(QdeimConfig {
            t_div: 1,
            eps_thr: 1e-3,
            squared_energy: false,
        });
        Self {
            t_div: q.t_div,
            eps: q.eps_thr,
            ..Self::default()
        }
    }
}

impl Default for SamplerSettings {
    fn default() -> Self {
        Self {
            t_div: 1,
            eps: 1e-3,
            squared_energy: false,
            random: false,
            size: None,
            seed: 0,
        }
    }
}

fn resolve_sampler(ctx: &Ctx, spec: &PdeSpec, f: &SamplerFlags) -> Result<SamplerSettings> {
    let mut s = ctx.file.section("sampler", SamplerSettings::for_pde(&spec.name))?;
    if let Some(v) = f.t_div {
        s.t_div = v;
    }
    if let Some(v) = f.eps {
        s.eps = v;
    }
    s.squared_energy |= f.squared_energy;
    s.random |= f.random;
    if f.size.is_some() {
        s.size = f.size;
    }
    if let Some(v) = f.seed {
        s.seed = v;
    }
    Ok(s)
}

fn draw_samples(ctx: &mut Ctx, snap: &SnapshotMatrix, settings: &SamplerSettings) -> Result<SampleSet> {
    ctx.manifest.config("sampler", settings)?;
    if settings.random {
        let size = settings.size.context("--random needs --size")?;
        ctx.manifest.seed("sampler", settings.seed);
        Ok(random_sample(snap, size, settings.seed)?)
    } else {
        let cfg = QdeimConfig {
            t_div: settings.t_div,
            eps_thr: settings.eps,
            squared_energy: settings.squared_energy,
        };
        cfg.validate()?;
        Ok(qdeim_sample(snap, &cfg)?)
    }
}

fn resolve_train(ctx: &Ctx, spec: &PdeSpec, f: &TrainFlags) -> Result<TrainConfig> {
    let mut c = ctx.file.section("train", TrainConfig::for_pde(&spec.name))?;
    if let Some(v) = f.max_iter {
        c.max_iter = v;
    }
    if let Some(v) = f.lr {
        c.learning_rate = v;
    }
    if f.base_lr.is_some() {
        c.base_lr = f.base_lr;
    }
    if f.max_lr.is_some() {
        c.max_lr = f.max_lr;
    }
    if let Some(v) = f.step_size_up {
        c.step_size_up = v;
    }
    if let Some(v) = f.gamma {
        c.gamma = v;
    }
    if let Some(v) = f.mu1 {
        c.mu1 = v;
    }
    if let Some(v) = f.mu2 {
        c.mu2 = v;
    }
    if let Some(v) = f.train_seed {
        c.seed = v;
    }
    if let Some(v) = f.omega0 {
        c.omega0 = v;
    }
    if let Some(v) = &f.widths {
        c.widths = v.clone();
    }
    if f.batch_size.is_some() {
        c.batch_size = f.batch_size;
    }
    c.validate()?;
    Ok(c)
}

#[derive(Serialize, Deserialize)]
struct SampleFile {
    pde: String,
    sampler: SamplerKind,
    seed: Option<u64>,
    ranks: Vec<usize>,
    spatial_pivots: Vec<Vec<usize>>,
    temporal_pivots: Vec<Vec<usize>>,
    points: Vec<SamplePoint>,
}

fn render_samples(ctx: &Ctx, pde: &str, set: &SampleSet) -> Result<Vec<u8>> {
    match ctx.common.format {
        Format::Csv => {
            let mut buf = Vec::new();
            set.write_csv(&mut buf)?;
            Ok(buf)
        }
        Format::Json => {
            let file = SampleFile {
                pde: pde.to_string(),
                sampler: set.source,
                seed: set.seed,
                ranks: set.ranks(),
                spatial_pivots: set.spatial_pivots.clone(),
                temporal_pivots: set.temporal_pivots.clone(),
                points: set.points.clone(),
            };
            Ok(serde_json::to_vec_pretty(&file)?)
        }
    }
}

fn read_samples(path: &Path) -> Result<SampleSet> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let f: SampleFile = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if f.points.is_empty() {
            bail!("{} holds no samples", path.display());
        }
        Ok(SampleSet {
            points: f.points,
            spatial_pivots: f.spatial_pivots,
            temporal_pivots: f.temporal_pivots,
            source: f.sampler,
            seed: f.seed,
        })
    } else {
        Ok(SampleSet::read_csv(path, SamplerKind::Greedy)?)
    }
}

fn render_records(ctx: &Ctx, records: &mut [ExperimentRecord]) -> Result<Vec<u8>> {
    if !ctx.common.timing {
        for r in records.iter_mut() {
            r.wall_time_s = 0.0;
        }
    }
    let mut buf = Vec::new();
    export_results(records, &mut buf, ctx.result_format())?;
    Ok(buf)
}

fn report_failures(records: &[ExperimentRecord]) -> Result<()> {
    let failed: Vec<&ExperimentRecord> = records.iter().filter(|r| r.failure.is_some()).collect();
    let diverged = records.iter().filter(|r| r.diverged).count();
    if diverged > 0 {
        eprintln!("{diverged} of {} runs diverged", records.len());
    }
    if failed.is_empty() {
        return Ok(());
    }
    for r in &failed {
        eprintln!(
            "failed: t_div={:?} eps={:?} size={:?} seed={:?}: {}",
            r.t_div,
            r.eps_thr,
            r.size,
            r.seed,
            r.failure.as_deref().unwrap_or("")
        );
    }
    bail!("{} of {} runs failed", failed.len(), records.len())
}

// ---------- commands ----------

pub fn generate(ctx: &mut Ctx, a: &GenerateArgs) -> Result<()> {
    let spec = resolve_spec(ctx, &a.data)?;
    let cfg = resolve_generator(ctx, &spec, &a.gen)?;
    ctx.manifest.config("generator", &cfg)?;
    ctx.manifest.seed("generator", cfg.seed);
    let snap = generate_synthetic(&spec, &cfg)?;
    let bytes = match SnapshotFormat::from_path(&a.output) {
        SnapshotFormat::MatrixText => to_matrix_text(&snap).into_bytes(),
        SnapshotFormat::Csv => to_csv(&snap).into_bytes(),
    };
    let path = ctx.emit(&a.output, &bytes)?;
    println!("wrote {}×{} snapshot to {}", snap.n(), snap.m(), path.display());
    Ok(())
}

pub fn sample(ctx: &mut Ctx, a: &SampleArgs) -> Result<()> {
    let spec = resolve_spec(ctx, &a.data)?;
    let snap = resolve_snapshot(ctx, &a.data, &a.gen, &spec)?;
    let settings = resolve_sampler(ctx, &spec, &a.sampler)?;
    let set = draw_samples(ctx, &snap, &settings)?;
    let bytes = render_samples(ctx, &spec.name, &set)?;
    let path = ctx.emit(format!("samples.{}", ctx.ext()), &bytes)?;
    if set.source == SamplerKind::Greedy {
        println!("{} samples (ranks {:?}) -> {}", set.len(), set.ranks(), path.display());
    } else {
        println!("{} samples -> {}", set.len(), path.display());
    }
    Ok(())
}

pub fn train_cmd(ctx: &mut Ctx, a: &TrainArgs) -> Result<()> {
    let spec = resolve_spec(ctx, &a.data)?;
    let snap = resolve_snapshot(ctx, &a.data, &a.gen, &spec)?;
    let samples_path = match &a.samples {
        Some(p) => Some(p.clone()),
        None => ctx.file.path("samples")?,
    };
    let set = match samples_path {
        Some(p) => {
            ctx.input_file(&p)?;
            read_samples(&p)?
        }
        None => {
            let settings = resolve_sampler(ctx, &spec, &a.sampler)?;
            draw_samples(ctx, &snap, &settings)?
        }
    };
    let cfg = resolve_train(ctx, &spec, &a.train)?;
    ctx.manifest.config("train", &cfg)?;
    ctx.manifest.seed("train", cfg.seed);

    let mut net = init_network(&cfg)?;
    let result = train(&mut net, &set, &spec, snap.scales(), &cfg)?;

    let traj = match ctx.common.format {
        Format::Csv => {
            let mut buf = Vec::new();
            result.write_trajectory_csv(&mut buf)?;
            buf
        }
        Format::Json => serde_json::to_vec_pretty(&serde_json::json!({
            "terms": result.term_names,
            "lr": result.lr_history,
            "loss": result.loss_history,
            "p": result.p_trajectory,
        }))?,
    };
    ctx.emit(format!("trajectory.{}", ctx.ext()), &traj)?;
    let summary = result.summary_json(ctx.common.timing)?;
    ctx.emit("summary.json", summary.as_bytes())?;
    ctx.emit("checkpoint.txt", to_checkpoint_string(&net).as_bytes())?;

    println!("{} samples, {} iterations{}", set.len(), result.iterations, if result.diverged { " (diverged)" } else { "" });
    for (i, name) in result.term_names.iter().enumerate() {
        let err = result
            .rel_errors
            .as_ref()
            .and_then(|e| e[i])
            .map_or(String::new(), |e| format!("  rel. error {e:.3e}"));
        println!("  {name:>10}: {:+.6e}{err}", result.final_p[i]);
    }
    if result.diverged {
        bail!("training diverged after {} iterations", result.iterations);
    }
    Ok(())
}

fn resolve_sweep(ctx: &Ctx, spec: &PdeSpec, f: &SweepFlags) -> Result<SweepConfig> {
    let mut s = ctx.file.section("sweep", SweepConfig::for_pde(&spec.name))?;
    if let Some(v) = &f.t_divs {
        s.t_divs = v.clone();
    }
    if let Some(v) = f.eps_min {
        s.eps_min = v;
    }
    if let Some(v) = f.eps_max {
        s.eps_max = v;
    }
    if let Some(v) = f.eps_count {
        s.eps_count = v;
    }
    if let Some(v) = f.jobs {
        s.jobs = v;
    }
    s.validate()?;
    Ok(s)
}

pub fn sweep(ctx: &mut Ctx, a: &SweepArgs) -> Result<()> {
    let spec = resolve_spec(ctx, &a.data)?;
    let snap = resolve_snapshot(ctx, &a.data, &a.gen, &spec)?;
    let sweep = resolve_sweep(ctx, &spec, &a.sweep)?;
    let cfg = resolve_train(ctx, &spec, &a.train)?;
    ctx.manifest.config("sweep", &sweep)?;
    ctx.manifest.config("train", &cfg)?;
    ctx.manifest.seed("train", cfg.seed);

    let mut records = sweep_greedy(&snap, &spec, &sweep, &cfg)?;
    let bytes = render_records(ctx, &mut records)?;
    let path = ctx.emit(format!("sweep.{}", ctx.ext()), &bytes)?;
    let plot = plot_data(&spec.name, &spec.term_names(), &records, &[]);
    ctx.emit("sweep_plot.json", &serde_json::to_vec_pretty(&plot)?)?;
    println!("{} runs -> {}", records.len(), path.display());
    report_failures(&records)
}

pub fn baseline(ctx: &mut Ctx, a: &BaselineArgs) -> Result<()> {
    let spec = resolve_spec(ctx, &a.data)?;
    let snap = resolve_snapshot(ctx, &a.data, &a.gen, &spec)?;
    let mut sweep = ctx.file.section("sweep", SweepConfig::for_pde(&spec.name))?;
    if let Some(v) = a.reps {
        sweep.repetitions = v;
    }
    if let Some(v) = a.seed {
        sweep.base_seed = v;
    }
    if let Some(v) = a.jobs {
        sweep.jobs = v;
    }
    if let Some(v) = a.eps_min {
        sweep.eps_min = v;
    }
    if let Some(v) = a.eps_max {
        sweep.eps_max = v;
    }
    sweep.validate()?;
    let (min_n, max_n) = match (a.min, a.max) {
        (Some(lo), Some(hi)) => (lo, hi),
        (lo, hi) => {
            let (glo, ghi) = greedy_count_range(&snap, &sweep)?;
            (lo.unwrap_or(glo), hi.unwrap_or(ghi))
        }
    };
    let cfg = resolve_train(ctx, &spec, &a.train)?;
    ctx.manifest.config("sweep", &sweep)?;
    ctx.manifest.config("train", &cfg)?;
    ctx.manifest.config("sizes", &(min_n, max_n))?;
    ctx.manifest.seed("baseline", sweep.base_seed);
    ctx.manifest.seed("train", cfg.seed);

    let mut records = sweep_random(&snap, &spec, min_n, max_n, &sweep, &cfg)?;
    let bytes = render_records(ctx, &mut records)?;
    let path = ctx.emit(format!("baseline.{}", ctx.ext()), &bytes)?;
    println!("{} runs over sizes {min_n}..={max_n} -> {}", records.len(), path.display());
    report_failures(&records)
}

#[derive(Serialize)]
struct CoefficientClusters {
    coef_index: usize,
    term: Option<String>,
    n_points: usize,
    summary: ClusterSummary,
}

pub fn cluster(ctx: &mut Ctx, a: &ClusterArgs) -> Result<()> {
    let mut records = Vec::new();
    for path in &a.results {
        ctx.input_file(path)?;
        let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let mut part = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
            read_records_json(f)?
        } else {
            read_records_csv(f)?
        };
        records.append(&mut part);
    }
    let greedy: Vec<ExperimentRecord> = records
        .into_iter()
        .filter(|r| r.sampler == SamplerKind::Greedy)
        .collect();
    if greedy.is_empty() {
        bail!("no greedy records in the result files");
    }
    ctx.manifest.config("cluster", &serde_json::json!({
        "k": a.k, "n_init": a.n_init, "standardize": a.standardize,
    }))?;
    ctx.manifest.seed("cluster", a.seed);

    let terms = PdeSpec::preset(&greedy[0].pde).ok().map(|s| s.term_names());
    let n_coef = greedy.iter().map(|r| r.rel_errors.len()).max().unwrap_or(0);
    let mut out = Vec::new();
    for c in 0..n_coef {
        let points = error_points(&greedy, c);
        if points.is_empty() {
            continue;
        }
        let k = a.k.min(points.len());
        let summary = kmeans_with(&points, k, a.n_init, a.seed, a.standardize)?;
        out.push(CoefficientClusters {
            coef_index: c,
            term: terms.as_ref().and_then(|t| t.get(c).cloned()),
            n_points: points.len(),
            summary,
        });
    }
    let bytes = match ctx.common.format {
        Format::Json => serde_json::to_vec_pretty(&out)?,
        Format::Csv => {
            let mut s = String::from("coef_index,cluster,n_samples,rel_error,members\n");
            for cc in &out {
                for (i, (n, e)) in cc.summary.centroids.iter().enumerate() {
                    let members = cc.summary.labels.iter().filter(|&&l| l == i).count();
                    s.push_str(&format!("{},{i},{n:.16e},{e:.16e},{members}\n", cc.coef_index));
                }
            }
            s.into_bytes()
        }
    };
    let path = ctx.emit(format!("clusters.{}", ctx.ext()), &bytes)?;
    let pairs: Vec<(usize, ClusterSummary)> = out.iter().map(|c| (c.coef_index, c.summary.clone())).collect();
    let plot = plot_data(
        &greedy[0].pde,
        &terms.clone().unwrap_or_else(|| (1..=n_coef).map(|i| format!("p{i}")).collect()),
        &greedy,
        &pairs,
    );
    ctx.emit("cluster_plot.json", &serde_json::to_vec_pretty(&plot)?)?;
    println!("{} coefficient clusterings from {} records -> {}", out.len(), greedy.len(), path.display());
    Ok(())
}
