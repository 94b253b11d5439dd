// Copyright 2026 The rona Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Command-line front end.
//!
//! Configuration comes from an optional flat `key = value` file (with `#`
//! comments), overridden by flags. Every command that trains writes the
//! resolved configuration, a metrics CSV, a checkpoint and a summary into
//! `--out`; configuration and data errors are reported before that
//! directory is touched.
//!
//! Exit codes: 0 success, 1 other failure, 2 configuration error, 3 budget
//! infeasible or exceeded.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::{load_idx, split, synth, Dataset, SplitSpec};
use crate::error::{RonaError, Result};
use crate::models::{build, describe, Arch, ModelSpec};
use crate::nn::checkpoint::{load_network, save_network};
use crate::nn::{softmax_temp, Network, Tensor};
use crate::pipeline::{
    compression_report, evaluate, run_student, train_aux_teacher, train_teacher, Evaluation, TeacherConfig,
    TrainingConfig,
};
use crate::privacy::{epsilon_for, Accountant};
use crate::query_select::{cover_radius, select, Selector};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

pub fn exit_code(err: &RonaError) -> i32 {
    match err {
        RonaError::Config(_) | RonaError::Usage(_) => EXIT_CONFIG,
        RonaError::BudgetInfeasible(_) | RonaError::BudgetExceeded(_) => EXIT_BUDGET,
        _ => EXIT_FAILURE,
    }
}

#[derive(Debug, Parser)]
#[command(name = "rona", about = "Private model compression with a sanitized teacher")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train the teacher (and the auxiliary teacher when the bound is adaptive).
    TrainTeacher(RunArgs),
    /// Train a student privately from a teacher.
    Distill {
        #[command(flatten)]
        run: RunArgs,
        /// Teacher checkpoint; trained from scratch when absent.
        #[arg(long)]
        teacher: Option<PathBuf>,
        /// Auxiliary teacher checkpoint; trained from scratch when needed and absent.
        #[arg(long)]
        aux_teacher: Option<PathBuf>,
    },
    /// Tabulate epsilon against the number of queries.
    Accountant {
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        queries: usize,
        #[arg(long, default_value_t = 1e-5)]
        delta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare query selectors on a freshly self-trained student.
    SelectDemo(RunArgs),
    /// Evaluate a checkpoint on the test set.
    Eval {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        arch: Arch,
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Print the layer table of an architecture.
    DescribeArch {
        #[arg(long)]
        arch: Arch,
        /// Sample shape as CxHxW; defaults to the architecture's own.
        #[arg(long)]
        input: Option<String>,
        #[arg(long, default_value_t = 10)]
        classes: usize,
    },
}

#[derive(Debug, Args, Default)]
struct RunArgs {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long)]
    eps_budget: Option<String>,
    #[arg(long)]
    delta: Option<String>,
    /// kcenter | random | margin | diverse
    #[arg(long)]
    selector: Option<String>,
    /// loss | target
    #[arg(long)]
    sanitize_mode: Option<String>,
    /// Comma-separated classes that are entirely sensitive.
    #[arg(long)]
    mask_classes: Option<String>,
    /// synth | idx
    #[arg(long)]
    dataset: Option<String>,
    #[arg(long)]
    train_images: Option<String>,
    #[arg(long)]
    train_labels: Option<String>,
    #[arg(long)]
    test_images: Option<String>,
    #[arg(long)]
    test_labels: Option<String>,
    /// Any configuration key, as key=value; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

/// Where the data comes from and how it is split.
#[derive(Debug, Clone, PartialEq)]
pub struct DataConfig {
    pub dataset: String,
    pub train_images: Option<PathBuf>,
    pub train_labels: Option<PathBuf>,
    pub test_images: Option<PathBuf>,
    pub test_labels: Option<PathBuf>,
    pub public_frac: f64,
    pub mask_classes: BTreeSet<usize>,
    pub data_seed: u64,
    pub synth_classes: usize,
    pub synth_per_class: usize,
    pub synth_test_per_class: usize,
    pub teacher_arch: Option<Arch>,
    pub student_arch: Option<Arch>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            dataset: "synth".into(),
            train_images: None,
            train_labels: None,
            test_images: None,
            test_labels: None,
            public_frac: 0.8,
            mask_classes: BTreeSet::new(),
            data_seed: 0,
            synth_classes: 4,
            synth_per_class: 100,
            synth_test_per_class: 50,
            teacher_arch: None,
            student_arch: None,
        }
    }
}

fn cfg_err(key: &str, value: &str) -> RonaError {
    RonaError::config(format!("key '{key}': cannot parse '{value}'"))
}

fn path_text(p: &Option<PathBuf>) -> String {
    p.as_ref().map_or_else(|| "none".into(), |p| p.display().to_string())
}

impl DataConfig {
    pub const KEYS: &'static [&'static str] = &[
        "dataset",
        "train_images",
        "train_labels",
        "test_images",
        "test_labels",
        "public_frac",
        "mask_classes",
        "data_seed",
        "synth_classes",
        "synth_per_class",
        "synth_test_per_class",
        "teacher_arch",
        "student_arch",
    ];

    /// Returns `Ok(false)` if `key` is not a data key.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool> {
        let v = value.trim();
        let path = |v: &str| (v != "none").then(|| PathBuf::from(v));
        let arch = |v: &str| -> Result<Option<Arch>> {
            if v == "auto" {
                Ok(None)
            } else {
                v.parse().map(Some).map_err(|_| cfg_err(key, v))
            }
        };
        match key {
            "dataset" => {
                if v != "synth" && v != "idx" {
                    return Err(RonaError::config(format!("key 'dataset': expected synth or idx, got '{v}'")));
                }
                self.dataset = v.into();
            }
            "train_images" => self.train_images = path(v),
            "train_labels" => self.train_labels = path(v),
            "test_images" => self.test_images = path(v),
            "test_labels" => self.test_labels = path(v),
            "public_frac" => self.public_frac = v.parse().map_err(|_| cfg_err(key, v))?,
            "mask_classes" => {
                self.mask_classes = v
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| s.parse().map_err(|_| cfg_err(key, v)))
                    .collect::<Result<_>>()?
            }
            "data_seed" => self.data_seed = v.parse().map_err(|_| cfg_err(key, v))?,
            "synth_classes" => self.synth_classes = v.parse().map_err(|_| cfg_err(key, v))?,
            "synth_per_class" => self.synth_per_class = v.parse().map_err(|_| cfg_err(key, v))?,
            "synth_test_per_class" => self.synth_test_per_class = v.parse().map_err(|_| cfg_err(key, v))?,
            "teacher_arch" => self.teacher_arch = arch(v)?,
            "student_arch" => self.student_arch = arch(v)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn to_kv(&self) -> String {
        let arch = |a: Option<Arch>| a.map_or_else(|| "auto".into(), |a| a.to_string());
        let masked: Vec<String> = self.mask_classes.iter().map(usize::to_string).collect();
        let mut out = String::new();
        let _ = writeln!(out, "dataset = {}", self.dataset);
        let _ = writeln!(out, "train_images = {}", path_text(&self.train_images));
        let _ = writeln!(out, "train_labels = {}", path_text(&self.train_labels));
        let _ = writeln!(out, "test_images = {}", path_text(&self.test_images));
        let _ = writeln!(out, "test_labels = {}", path_text(&self.test_labels));
        let _ = writeln!(out, "public_frac = {}", self.public_frac);
        let _ = writeln!(out, "mask_classes = {}", masked.join(","));
        let _ = writeln!(out, "data_seed = {}", self.data_seed);
        let _ = writeln!(out, "synth_classes = {}", self.synth_classes);
        let _ = writeln!(out, "synth_per_class = {}", self.synth_per_class);
        let _ = writeln!(out, "synth_test_per_class = {}", self.synth_test_per_class);
        let _ = writeln!(out, "teacher_arch = {}", arch(self.teacher_arch));
        let _ = writeln!(out, "student_arch = {}", arch(self.student_arch));
        out
    }

    fn arches(&self) -> (Arch, Arch) {
        let default_teacher = if self.dataset == "synth" { Arch::TeacherMicro } else { Arch::TeacherSmall };
        let teacher = self.teacher_arch.unwrap_or(default_teacher);
        (teacher, self.student_arch.unwrap_or(teacher.counterpart()))
    }
}

/// Training and data configuration together, as read from file and flags.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    pub training: TrainingConfig,
    pub data: DataConfig,
}

impl RunConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if self.data.set(key, value)? {
            return Ok(());
        }
        self.training.set(key, value)
    }

    /// Apply a `key = value` document; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| RonaError::config(format!("line {}: expected key = value, got '{line}'", n + 1)))?;
            self.set(k.trim(), v)?;
        }
        Ok(())
    }

    pub fn to_kv(&self) -> String {
        format!("{}{}", self.training.to_kv(), self.data.to_kv())
    }

    fn resolve(args: &RunArgs) -> Result<Self> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &args.config {
            let text = fs::read_to_string(path)
                .map_err(|e| RonaError::config(format!("config file {}: {e}", path.display())))?;
            cfg.apply_text(&text)?;
        }
        let flags = [
            ("seed", &args.seed),
            ("sigma", &args.sigma),
            ("eps_budget", &args.eps_budget),
            ("delta", &args.delta),
            ("selector", &args.selector),
            ("sanitize_mode", &args.sanitize_mode),
            ("mask_classes", &args.mask_classes),
            ("dataset", &args.dataset),
            ("train_images", &args.train_images),
            ("train_labels", &args.train_labels),
            ("test_images", &args.test_images),
            ("test_labels", &args.test_labels),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)
                    .map_err(|e| RonaError::config(format!("flag --{}: {e}", key.replace('_', "-"))))?;
            }
        }
        for kv in &args.overrides {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| RonaError::config(format!("flag --set: expected KEY=VALUE, got '{kv}'")))?;
            cfg.set(k.trim(), v)?;
        }
        cfg.training.validate()?;
        Ok(cfg)
    }
}

/// Train/test data with the train part split into public and sensitive.
pub struct Data {
    pub public: Dataset,
    pub sensitive: Dataset,
    pub test: Dataset,
}

fn require(p: &Option<PathBuf>, key: &str) -> Result<PathBuf> {
    p.clone().ok_or_else(|| RonaError::config(format!("key '{key}' is required for dataset = idx")))
}

pub fn load_data(cfg: &DataConfig) -> Result<Data> {
    let (train, test) = match cfg.dataset.as_str() {
        "synth" => (
            synth(cfg.synth_classes, cfg.synth_per_class, cfg.data_seed)?,
            synth(cfg.synth_classes, cfg.synth_test_per_class, cfg.data_seed.wrapping_add(1))?,
        ),
        _ => {
            let train = load_idx(require(&cfg.train_images, "train_images")?, require(&cfg.train_labels, "train_labels")?)?;
            let test = load_idx(require(&cfg.test_images, "test_images")?, require(&cfg.test_labels, "test_labels")?)?;
            let k = train.class_count().max(test.class_count());
            (train.with_class_count(k)?, test.with_class_count(k)?)
        }
    };
    let spec = if cfg.mask_classes.is_empty() {
        SplitSpec::fraction(cfg.public_frac, cfg.data_seed)?
    } else {
        SplitSpec::class_mask(cfg.mask_classes.iter().copied())
    };
    let (public, sensitive) = split(&train, &spec)?;
    Ok(Data { public, sensitive, test })
}

fn spec_for(arch: Arch, ds: &Dataset) -> ModelSpec {
    ModelSpec::new(arch, ds.class_count()).with_input(ds.sample_shape())
}

fn write_checkpoint(net: &Network, path: &Path) -> Result<()> {
    save_network(net, fs::File::create(path)?)
}

fn read_checkpoint(spec: &ModelSpec, path: &Path) -> Result<Network> {
    let mut net = build(spec, 0)?;
    load_network(&mut net, fs::File::open(path)?)?;
    Ok(net)
}

fn out_dir(p: &Option<PathBuf>) -> Result<PathBuf> {
    let dir = p.clone().unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn eval_csv(e: &Evaluation) -> String {
    let mut s = String::from("class,count,accuracy\n");
    for (c, (a, n)) in e.per_class.iter().zip(&e.class_counts).enumerate() {
        let _ = writeln!(s, "{c},{n},{}", a.map_or(String::new(), |a| format!("{a:.6}")));
    }
    let _ = writeln!(s, "all,{},{:.6}", e.class_counts.iter().sum::<usize>(), e.accuracy);
    s
}

fn cmd_train_teacher(args: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = RunConfig::resolve(args)?;
    let data = load_data(&cfg.data)?;
    let (teacher_arch, _) = cfg.data.arches();
    let spec = spec_for(teacher_arch, &data.public);
    let t = &cfg.training;
    let teacher = train_teacher(&data.public, Some(&data.sensitive), &spec, &TeacherConfig::teacher(t), t.seed)?;
    let aux = if t.bound.is_none() {
        Some(train_aux_teacher(&data.public, &spec, &TeacherConfig::auxiliary(t), t.seed.wrapping_add(100))?)
    } else {
        None
    };
    let dir = out_dir(&args.out)?;
    let mut metrics = String::from("model,train_acc,test_acc\n");
    let train_all = data.public.concat(&data.sensitive)?;
    for (name, net) in std::iter::once(("teacher", &teacher)).chain(aux.iter().map(|a| ("aux_teacher", a))) {
        let tr = evaluate(net, &train_all)?.accuracy;
        let te = evaluate(net, &data.test)?.accuracy;
        let _ = writeln!(metrics, "{name},{tr:.6},{te:.6}");
        write_checkpoint(net, &dir.join(format!("{name}.ckpt")))?;
    }
    fs::write(dir.join("config.txt"), cfg.to_kv())?;
    fs::write(dir.join("metrics.csv"), &metrics)?;
    let summary = format!("architecture: {teacher_arch}\nparams: {}\n", teacher.param_count());
    fs::write(dir.join("summary.txt"), &summary)?;
    write!(out, "{metrics}")?;
    Ok(())
}

fn cmd_distill(args: &RunArgs, teacher_ckpt: &Option<PathBuf>, aux_ckpt: &Option<PathBuf>, out: &mut dyn Write) -> Result<()> {
    let cfg = RunConfig::resolve(args)?;
    let data = load_data(&cfg.data)?;
    let (teacher_arch, student_arch) = cfg.data.arches();
    let tspec = spec_for(teacher_arch, &data.public);
    let sspec = spec_for(student_arch, &data.public);
    let t = &cfg.training;
    let teacher = match teacher_ckpt {
        Some(p) => read_checkpoint(&tspec, p)?,
        None => train_teacher(&data.public, Some(&data.sensitive), &tspec, &TeacherConfig::teacher(t), t.seed)?,
    };
    let aux = match (aux_ckpt, t.use_teacher && t.bound.is_none()) {
        (Some(p), _) => Some(read_checkpoint(&tspec, p)?),
        (None, true) => Some(train_aux_teacher(
            &data.public,
            &tspec,
            &TeacherConfig::auxiliary(t),
            t.seed.wrapping_add(100),
        )?),
        (None, false) => None,
    };
    let (student, mut report) = run_student(t, &teacher, aux.as_ref(), &data.public, Some(&data.test), &sspec)?;
    let probe: Vec<usize> = (0..data.test.len().min(256)).collect();
    report.compression = Some(compression_report(&teacher, &student, &data.test.images().select_rows(&probe)?, 5)?);
    report.teacher_eval = Some(evaluate(&teacher, &data.test)?);
    report.config = cfg.to_kv();
    let dir = out_dir(&args.out)?;
    fs::write(dir.join("config.txt"), &report.config)?;
    fs::write(dir.join("metrics.csv"), report.metrics_csv())?;
    write_checkpoint(&student, &dir.join("student.ckpt"))?;
    let summary = report.summary();
    fs::write(dir.join("summary.txt"), &summary)?;
    write!(out, "{summary}")?;
    Ok(())
}

fn cmd_accountant(sigma: f64, queries: usize, delta: f64, dir: &Option<PathBuf>, out: &mut dyn Write) -> Result<()> {
    if queries == 0 {
        return Err(RonaError::config("flag --queries: must be at least 1"));
    }
    epsilon_for(1, sigma, delta).map_err(|e| RonaError::config(format!("flag --sigma/--delta: {e}")))?;
    let mut acc = Accountant::new();
    let mut csv = String::from("T,epsilon\n");
    for t in 1..=queries {
        acc.accumulate(sigma)?;
        let _ = writeln!(csv, "{t},{:.6}", acc.epsilon(delta)?);
    }
    if let Some(d) = dir {
        fs::create_dir_all(d)?;
        fs::write(d.join("accountant.csv"), &csv)?;
    }
    write!(out, "{csv}")?;
    Ok(())
}

fn cmd_select_demo(args: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = RunConfig::resolve(args)?;
    let data = load_data(&cfg.data)?;
    let (_, student_arch) = cfg.data.arches();
    let t = &cfg.training;
    let n_q = t.query_count(data.public.len())?;
    // one epoch of self learning gives the distances some structure
    let student = train_teacher(
        &data.public,
        None,
        &spec_for(student_arch, &data.public),
        &TeacherConfig { epochs: 1, ..TeacherConfig::teacher(t) },
        t.seed,
    )?;
    let probs: Tensor = softmax_temp(&student.predict(data.public.images(), 256)?, 1.0)?;
    let mut csv = String::from("selector,n_q,lambda\n");
    for kind in Selector::ALL {
        let mut rng = ChaCha8Rng::seed_from_u64(t.seed);
        let qs = select(kind, &probs, n_q, &mut rng)?;
        let _ = writeln!(csv, "{kind},{n_q},{:.6}", cover_radius(&probs, &qs)?.lambda);
    }
    let dir = out_dir(&args.out)?;
    fs::write(dir.join("config.txt"), cfg.to_kv())?;
    fs::write(dir.join("metrics.csv"), &csv)?;
    write_checkpoint(&student, &dir.join("student.ckpt"))?;
    fs::write(dir.join("summary.txt"), format!("pool: {}\nquery_samples: {n_q}\n", data.public.len()))?;
    write!(out, "{csv}")?;
    Ok(())
}

fn cmd_eval(args: &RunArgs, arch: Arch, ckpt: &Path, out: &mut dyn Write) -> Result<()> {
    let cfg = RunConfig::resolve(args)?;
    let data = load_data(&cfg.data)?;
    let net = read_checkpoint(&spec_for(arch, &data.test), ckpt)?;
    let csv = eval_csv(&evaluate(&net, &data.test)?);
    if let Some(d) = &args.out {
        fs::create_dir_all(d)?;
        fs::write(d.join("eval.csv"), &csv)?;
    }
    write!(out, "{csv}")?;
    Ok(())
}

fn parse_shape(s: &str) -> Result<Vec<usize>> {
    s.split('x')
        .map(|d| d.trim().parse().map_err(|_| RonaError::config(format!("flag --input: bad shape '{s}'"))))
        .collect()
}

fn cmd_describe(arch: Arch, input: &Option<String>, classes: usize, out: &mut dyn Write) -> Result<()> {
    let mut spec = ModelSpec::new(arch, classes);
    if let Some(s) = input {
        spec = spec.with_input(&parse_shape(s)?);
    }
    write!(out, "{}", describe(&build(&spec, 0)?))?;
    Ok(())
}

/// Run one command with explicit output streams; returns the exit code.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    let result = match &cli.command {
        Command::TrainTeacher(a) => cmd_train_teacher(a, out),
        Command::Distill { run, teacher, aux_teacher } => cmd_distill(run, teacher, aux_teacher, out),
        Command::Accountant { sigma, queries, delta, out: dir } => cmd_accountant(*sigma, *queries, *delta, dir, out),
        Command::SelectDemo(a) => cmd_select_demo(a, out),
        Command::Eval { run, arch, checkpoint } => cmd_eval(run, *arch, checkpoint, out),
        Command::DescribeArch { arch, input, classes } => cmd_describe(*arch, input, *classes, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// Run one command against the process's stdout and stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(argv, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
