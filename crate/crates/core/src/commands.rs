//! The operations behind the `satnet` binary. Each returns its printable
//! report so the binary stays a thin argument parser.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::BufWriter;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::cnf::{maxsat_count, to_signs, CnfInstance};
use crate::config::{RunConfig, TaskKind};
use crate::error::{Error, Result};
use crate::layer::{LayerConfig, SatLayer};
use crate::oracle::{run_gradcheck, GradcheckOptions, GradcheckReport};
use crate::sdp::{self, RoundingObjective, SolveOptions, SphereEmbedding};
use crate::tasks::{gen_parity, gen_sudoku, permute_dataset, Dataset, Permutation, SudokuSample};
use crate::train::{
    evaluate_dataset, train_epoch, Adam, AdamConfig, EpochMetrics, EvalMode, MaskedBits, MetricsWriter, ParityChain,
    Scoring,
};
use crate::weights;

/// Process exit status for a failed command: 2 for numerical failures, 1 otherwise.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NonFiniteGradient { .. } | Error::NonFiniteEvaluation { .. } => 2,
        _ => 1,
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn create_parent(path: &Path) -> Result<()> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => Ok(fs::create_dir_all(dir)?),
        _ => Ok(()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GenTask {
    Parity { length: usize },
    Sudoku { size: usize, permutation_seed: Option<u64> },
}

impl GenTask {
    pub fn from_name(name: &str, length: usize, size: usize, permutation_seed: Option<u64>) -> Result<Self> {
        match name {
            "parity" => Ok(Self::Parity { length }),
            "sudoku" => Ok(Self::Sudoku { size, permutation_seed }),
            other => Err(Error::InvalidArgument(format!("unknown task `{other}` (parity | sudoku)"))),
        }
    }
}

impl From<TaskKind> for GenTask {
    fn from(t: TaskKind) -> Self {
        match t {
            TaskKind::Parity { length } => Self::Parity { length },
            TaskKind::Sudoku { size, permutation_seed } => Self::Sudoku { size, permutation_seed },
        }
    }
}

/// Builds a dataset in memory.
pub fn generate(task: GenTask, count: usize, seed: u64) -> Result<Dataset> {
    Ok(match task {
        GenTask::Parity { length } => Dataset::Parity { length, seed, samples: gen_parity(length, count, seed)? },
        GenTask::Sudoku { size, permutation_seed } => {
            let mut samples = gen_sudoku(size, count, seed)?;
            if let Some(p) = permutation_seed {
                samples = permute_dataset(&samples, &Permutation::random(size * size * size, p))?;
            }
            Dataset::Sudoku { size, seed, permuted: permutation_seed, samples }
        }
    })
}

/// Writes `out`, `out.manifest` and, for permuted Sudoku, `out.perm`.
pub fn cmd_gen(task: GenTask, count: usize, seed: u64, out: &Path) -> Result<String> {
    let data = generate(task, count, seed)?;
    let text = data.to_text();
    create_parent(out)?;
    fs::write(out, &text)?;

    let mut manifest = String::new();
    let _ = writeln!(manifest, "format = satnet-dataset v1");
    match task {
        GenTask::Parity { length } => {
            let _ = writeln!(manifest, "task = parity\nlength = {length}");
        }
        GenTask::Sudoku { size, permutation_seed } => {
            let _ = writeln!(manifest, "task = sudoku\nsize = {size}");
            if let Some(p) = permutation_seed {
                let perm = Permutation::random(size * size * size, p);
                let perm_path = with_suffix(out, "perm");
                fs::write(&perm_path, perm.to_text())?;
                let _ = writeln!(manifest, "permutation_seed = {p}\npermutation_file = {}", perm_path.display());
            }
        }
    }
    let checksum = sha256_hex(text.as_bytes());
    let _ = writeln!(manifest, "count = {count}\nseed = {seed}\nsha256 = {checksum}");
    fs::write(with_suffix(out, "manifest"), &manifest)?;
    Ok(format!("wrote {count} {} records to {} (sha256 {checksum})", data.task(), out.display()))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

pub fn load_dataset(path: &Path) -> Result<Dataset> {
    Dataset::from_text(&fs::read_to_string(path)?)
}

/// Layer shape a dataset needs, given the aux/clause counts.
fn layer_config(cfg: &RunConfig) -> Result<LayerConfig> {
    Ok(LayerConfig::new(cfg.n_real(), cfg.n_aux, cfg.m)?.with_seed(cfg.seed).with_solver(cfg.tol, cfg.max_sweeps))
}

fn check_layer_fits(layer: &SatLayer, data: &Dataset) -> Result<()> {
    let need = match data {
        Dataset::Parity { .. } => 3,
        Dataset::Sudoku { size, .. } => size * size * size,
    };
    if layer.config().n_real != need {
        return Err(Error::Dimension(format!(
            "weights have {} real variables, {} data needs {need}",
            layer.config().n_real,
            data.task()
        )));
    }
    Ok(())
}

/// Scoring for a Sudoku dataset, following its permutation if any.
pub fn sudoku_scoring(size: usize, permuted: Option<u64>) -> Result<Scoring> {
    let perm = permuted.map(|p| Permutation::random(size * size * size, p));
    Scoring::sudoku(size, perm.as_ref())
}

fn sudoku_samples(samples: &[SudokuSample]) -> Vec<crate::layer::Sample> {
    samples.iter().map(SudokuSample::to_sample).collect()
}

/// Scores `layer` on `data`.
pub fn evaluate(layer: &SatLayer, data: &Dataset, mode: EvalMode, chain: &ParityChain) -> Result<EpochMetrics> {
    check_layer_fits(layer, data)?;
    match data {
        Dataset::Parity { samples, .. } => evaluate_dataset(samples, layer, chain, mode),
        Dataset::Sudoku { size, permuted, samples, .. } => {
            let obj = MaskedBits::new(sudoku_scoring(*size, *permuted)?);
            evaluate_dataset(&sudoku_samples(samples), layer, &obj, mode)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train: EpochMetrics,
    pub test: Option<EpochMetrics>,
}

pub struct TrainOutcome {
    pub layer: SatLayer,
    pub best: SatLayer,
    pub history: Vec<EpochRecord>,
}

/// Where a training run writes its outputs.
pub struct RunFiles {
    pub metrics: PathBuf,
    pub final_weights: PathBuf,
    pub best_weights: PathBuf,
}

impl RunFiles {
    pub fn in_dir(dir: &Path) -> Self {
        Self {
            metrics: dir.join("metrics.csv"),
            final_weights: dir.join("final.weights"),
            best_weights: dir.join("best.weights"),
        }
    }
}

/// Train/evaluate loop. Best weights are those with the lowest test sample
/// error (train error when there is no test set). `progress` sees every
/// epoch and may end the run early by returning `ControlFlow::Break`.
pub fn fit(
    cfg: &RunConfig,
    train: &Dataset,
    test: Option<&Dataset>,
    initial: SatLayer,
    files: Option<&RunFiles>,
    mut progress: impl FnMut(&EpochRecord) -> ControlFlow<()>,
) -> Result<TrainOutcome> {
    if train.is_empty() {
        return Err(Error::InvalidArgument("training set is empty".into()));
    }
    check_layer_fits(&initial, train)?;
    if let Some(t) = test {
        check_layer_fits(&initial, t)?;
    }
    let mut layer = initial;
    let mut opt = Adam::new(layer.weights().matrix().as_slice().len(), AdamConfig::with_lr(cfg.lr));
    let chain = ParityChain { train_mode: cfg.chain_mode };
    let mut writer = match files {
        Some(f) => {
            create_parent(&f.metrics)?;
            Some(MetricsWriter::new(BufWriter::new(File::create(&f.metrics)?))?)
        }
        None => None,
    };
    let save = |l: &SatLayer, p: &Path| -> Result<()> {
        create_parent(p)?;
        weights::save(l, p)
    };

    let mut best = layer.clone();
    let mut best_err = f64::INFINITY;
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let shuffle_seed = cfg.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(epoch as u64);
        let train_m = match train {
            Dataset::Parity { samples, .. } => {
                train_epoch(samples, &mut layer, &mut opt, &chain, cfg.batch_size, shuffle_seed)?
            }
            Dataset::Sudoku { size, permuted, samples, .. } => {
                let obj = MaskedBits::new(sudoku_scoring(*size, *permuted)?);
                train_epoch(&sudoku_samples(samples), &mut layer, &mut opt, &obj, cfg.batch_size, shuffle_seed)?
            }
        };
        let test_m = match test {
            Some(t) if !t.is_empty() => Some(evaluate(&layer, t, cfg.eval_mode, &chain)?),
            _ => None,
        };
        let rec = EpochRecord { epoch, train: train_m, test: test_m };
        if let Some(w) = writer.as_mut() {
            w.row(epoch, "train", &train_m)?;
            if let Some(m) = &test_m {
                w.row(epoch, "test", m)?;
            }
        }
        let err = test_m.unwrap_or(train_m).sample_error;
        if err < best_err {
            best_err = err;
            best = layer.clone();
            if let Some(f) = files {
                save(&best, &f.best_weights)?;
            }
        }
        history.push(rec);
        if progress(&rec).is_break() {
            break;
        }
    }
    if let Some(f) = files {
        save(&layer, &f.final_weights)?;
        if cfg.epochs == 0 {
            save(&layer, &f.best_weights)?;
        }
    }
    Ok(TrainOutcome { layer, best, history })
}

/// Training and test sets named by a config, loaded or generated.
pub fn load_run_data(cfg: &RunConfig) -> Result<(Dataset, Option<Dataset>)> {
    let task = GenTask::from(cfg.task);
    match &cfg.train_data {
        Some(path) => {
            let train = load_dataset(path)?;
            let test = cfg.test_data.as_deref().map(load_dataset).transpose()?;
            Ok((train, test))
        }
        None => {
            let all = generate(task, cfg.train_count + cfg.test_count, cfg.data_seed)?;
            let (train, test) = all.split_at(cfg.train_count);
            Ok((train, (!test.is_empty()).then_some(test)))
        }
    }
}

pub fn cmd_train(cfg: &RunConfig, mut log: impl FnMut(&str)) -> Result<String> {
    let (train, test) = load_run_data(cfg)?;
    let initial = match &cfg.resume {
        Some(path) => {
            let layer = weights::load(path)?;
            let want = layer_config(cfg)?;
            let got = layer.config();
            if (got.n_real, got.n_aux, got.m) != (want.n_real, want.n_aux, want.m) {
                return Err(Error::Dimension(format!(
                    "resume weights are n_real={} n_aux={} m={}, config asks for n_real={} n_aux={} m={}",
                    got.n_real, got.n_aux, got.m, want.n_real, want.n_aux, want.m
                )));
            }
            let mut layer = layer;
            layer.set_solver(cfg.tol, cfg.max_sweeps);
            layer
        }
        None => SatLayer::new(layer_config(cfg)?)?,
    };
    let files = RunFiles::in_dir(&cfg.out_dir);
    log(&format!(
        "training {} on {} examples ({} test), n_aux={} m={} lr={}",
        train.task(),
        train.len(),
        test.as_ref().map_or(0, Dataset::len),
        cfg.n_aux,
        cfg.m,
        cfg.lr
    ));
    let outcome = fit(cfg, &train, test.as_ref(), initial, Some(&files), |r| {
        let mut line = format!(
            "epoch {:>3}  train loss {:.4} bit err {:.4} sample err {:.4} ({:.1}s)",
            r.epoch, r.train.loss, r.train.bit_error, r.train.sample_error, r.train.wall_seconds
        );
        if let Some(t) = &r.test {
            let _ = write!(line, "  test loss {:.4} bit err {:.4} sample err {:.4}", t.loss, t.bit_error, t.sample_error);
        }
        log(&line);
        ControlFlow::Continue(())
    })?;
    let last = outcome.history.last();
    Ok(format!(
        "wrote {}, {} and {} after {} epochs{}",
        files.final_weights.display(),
        files.best_weights.display(),
        files.metrics.display(),
        outcome.history.len(),
        last.and_then(|r| r.test).map(|t| format!("; final test sample error {:.4}", t.sample_error)).unwrap_or_default()
    ))
}

pub fn cmd_eval(weights_path: &Path, data_path: &Path, mode: EvalMode) -> Result<String> {
    let layer = weights::load(weights_path)?;
    let data = load_dataset(data_path)?;
    if data.is_empty() {
        return Err(Error::InvalidArgument(format!("{} has no records", data_path.display())));
    }
    let m = evaluate(&layer, &data, mode, &ParityChain::default())?;
    Ok(format!(
        "examples {}\nloss {:.6}\nbit_accuracy {:.6}\nsample_accuracy {:.6}\nseconds {:.2}",
        data.len(),
        m.loss,
        1.0 - m.bit_error,
        1.0 - m.sample_error,
        m.wall_seconds
    ))
}

/// Solves one instance read from `input`: a line of `0`/`1`/`?` characters,
/// one per real variable, with `?` marking outputs.
pub fn cmd_solve_bits(weights_path: &Path, input: &str, mode: EvalMode, seed: u64) -> Result<String> {
    let layer = weights::load(weights_path)?;
    let line = input.lines().map(str::trim).find(|l| !l.is_empty()).unwrap_or("");
    let n_real = layer.config().n_real;
    if line.chars().count() != n_real {
        return Err(Error::Dimension(format!("expected {n_real} characters of 0/1/?, got {}", line.chars().count())));
    }
    let mut known = Vec::new();
    let mut z_known = Vec::new();
    for (i, ch) in line.chars().enumerate() {
        match ch {
            '0' | '1' => {
                known.push(i);
                z_known.push(if ch == '1' { 1.0 } else { 0.0 });
            }
            '?' => {}
            other => return Err(Error::InvalidArgument(format!("unexpected character `{other}` at {i}"))),
        }
    }
    let ctx = layer.forward(&known, &z_known)?;
    let mut z = ctx.full_assignment(n_real);
    match mode {
        EvalMode::Probability => {
            return Ok(z.iter().map(|p| format!("{p:.4}")).collect::<Vec<_>>().join(" "));
        }
        EvalMode::Threshold => {}
        EvalMode::Round(n) => {
            let rounded = layer.round_outputs(&ctx, n, seed, RoundingObjective::Relaxed)?;
            for (&o, r) in ctx.outputs.iter().zip(rounded) {
                if o < n_real {
                    z[o] = r;
                }
            }
        }
    }
    Ok(z.iter().map(|&p| if p >= 0.5 { '1' } else { '0' }).collect())
}

/// Solves a DIMACS instance with the relaxation and reports the rounded assignment.
pub fn cmd_solve_cnf(text: &str, samples: usize, seed: u64) -> Result<String> {
    let cnf = CnfInstance::from_dimacs(text)?;
    let s = sdp::clause_matrix_from_cnf(&cnf)?;
    let n = cnf.num_vars();
    let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
    let v = SphereEmbedding::random(sdp::rank_for(n.max(1)), n, &mut rng);
    let outputs: Vec<usize> = (1..=n).collect();
    let fwd = sdp::coordinate_descent_forward(v, &s, &outputs, &SolveOptions::default())?;
    let r = sdp::randomized_round(&fwd.embedding, &s, samples.max(1), seed, RoundingObjective::ClauseCount)?;
    let assignment = &r.assignment;
    let sat = maxsat_count(&to_signs(assignment), &cnf)?;
    let lits: Vec<String> =
        assignment.iter().enumerate().map(|(i, &b)| if b { format!("{}", i + 1) } else { format!("-{}", i + 1) }).collect();
    Ok(format!(
        "c sweeps {} converged {}\ns satisfied {sat} of {}\nv {} 0",
        fwd.sweeps,
        fwd.converged,
        cnf.num_clauses(),
        lits.join(" ")
    ))
}

/// Runs the finite-difference check. The report is returned either way;
/// callers decide the exit status from [`GradcheckReport::passed`].
pub fn cmd_gradcheck(opts: &GradcheckOptions) -> Result<GradcheckReport> {
    run_gradcheck(opts)
}

pub fn cmd_inspect(weights_path: &Path) -> Result<String> {
    let bytes = fs::read(weights_path)?;
    let layer = weights::decode(&bytes)?;
    let c = layer.config();
    let s = layer.weights().matrix();
    let fro = s.as_slice().iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut out = String::new();
    let _ = writeln!(out, "file       {}", weights_path.display());
    let _ = writeln!(out, "version    {}", weights::VERSION);
    let _ = writeln!(out, "bytes      {}", bytes.len());
    let _ = writeln!(out, "n_real     {}", c.n_real);
    let _ = writeln!(out, "n_aux      {}", c.n_aux);
    let _ = writeln!(out, "m          {}", c.m);
    let _ = writeln!(out, "k          {}", c.k);
    let _ = writeln!(out, "solver     tol {:e}, max {} sweeps", c.tol, c.max_sweeps);
    let _ = writeln!(out, "init seed  {}", c.seed);
    let _ = writeln!(out, "|S|_F      {fro:.6}");
    let _ = writeln!(out, "max |S_ij| {:.6}", s.max_abs());
    let _ = write!(out, "sha256     {}", sha256_hex(&bytes));
    Ok(out)
}
