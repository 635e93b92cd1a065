//! The four commands behind the `l80` binary.
//!
//! Each command writes its products into `config.out_dir`, together with
//! `config.txt` (the complete effective configuration) and `manifest.txt`
//! (command, version, inputs, outputs). Re-running the command with
//! `--config config.txt` and the same inputs reproduces the outputs bit for
//! bit. All files are written atomically.
//!
//! | command  | reads                          | writes |
//! |----------|--------------------------------|--------|
//! | simulate | -                              | `trajectory.l80t` |
//! | train    | a nine-component trajectory    | `model.txt`, `*_net.l80n`, `loss_*.csv` |
//! | close    | a model directory, opt. truth  | `closure.l80t`, `summary.txt`, diagnostics CSVs |
//! | lobes    | any trajectory                 | `sojourns.csv`, `histogram.csv`, `lobes.txt` |

use std::path::{Path, PathBuf};

use crate::closure::{run_closure, ClosureSystem};
use crate::config::{ExperimentConfig, TgwChoice};
use crate::diagnostics::{amplitude, hf_residual, spectral_deficit, top_peak_fraction, y_columns, Band, SpectralDeficit};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::integrator::{spinup_then_record_partial, steps_for};
use crate::kv::{KvDoc, KvWriter};
use crate::model::State9;
use crate::neural::io::{load_mlp, save_mlp};
use crate::neural::{train_slow_pair, train_vanilla, FitConfig, Parameterization, ParameterizationKind, TrainOutcome};
use crate::signal::estimate_t_gw;
use crate::statistics::{
    fit_exponential, max_sojourn, records_csv, sojourn_histogram, trajectory_transitions, ExpFit, Histogram, LobeSpec,
    LobeSummary, Transitions,
};
use crate::trajectory::Trajectory;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const TRAJECTORY_FILE: &str = "trajectory.l80t";
pub const CLOSURE_FILE: &str = "closure.l80t";
pub const MODEL_FILE: &str = "model.txt";
pub const CONFIG_FILE: &str = "config.txt";
pub const MANIFEST_FILE: &str = "manifest.txt";

/// Gravity-wave band used by `close`: periods from 0.1 to 0.5 day.
pub const GW_BAND: Band = Band { fmin: 2.0, fmax: 10.0 };

struct Manifest {
    command: &'static str,
    inputs: Vec<(String, PathBuf)>,
    outputs: Vec<String>,
    status: String,
}

impl Manifest {
    fn new(command: &'static str) -> Self {
        Manifest { command, inputs: Vec::new(), outputs: Vec::new(), status: "ok".into() }
    }

    fn input(&mut self, name: &str, path: &Path) {
        self.inputs.push((name.into(), path.to_path_buf()));
    }

    fn write(&mut self, dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
        write_atomic(dir.join(name), bytes)?;
        self.outputs.push(name.into());
        Ok(())
    }

    fn save_traj(&mut self, dir: &Path, name: &str, traj: &Trajectory, csv: bool) -> Result<()> {
        let mut bin = Vec::new();
        traj.write_binary(&mut bin)?;
        self.write(dir, name, &bin)?;
        if csv {
            let mut text = Vec::new();
            traj.write_csv(&mut text)?;
            self.write(dir, &Path::new(name).with_extension("csv").to_string_lossy(), &text)?;
        }
        Ok(())
    }

    fn finish(&self, cfg: &ExperimentConfig) -> Result<()> {
        let dir = &cfg.out_dir;
        write_atomic(dir.join(CONFIG_FILE), cfg.to_text().as_bytes())?;
        let mut w = KvWriter::new();
        w.entry("command", self.command)
            .entry("version", VERSION)
            .entry("seed", cfg.seed)
            .entry("config", CONFIG_FILE)
            .entry("status", &self.status);
        if !self.inputs.is_empty() {
            w.section("inputs");
            for (k, p) in &self.inputs {
                w.entry(k, p.display());
            }
        }
        w.section("outputs");
        for (i, o) in self.outputs.iter().enumerate() {
            w.entry(&format!("file{}", i + 1), o);
        }
        write_atomic(dir.join(MANIFEST_FILE), w.finish().as_bytes())
    }
}

fn prepare_dir(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out_dir)?;
    Ok(())
}

#[derive(Debug)]
pub struct SimulateReport {
    pub trajectory: Trajectory,
    pub path: PathBuf,
}

/// Spin-up from the documented seed state, then record.
pub fn cmd_simulate(cfg: &ExperimentConfig) -> Result<SimulateReport> {
    prepare_dir(cfg)?;
    let it = &cfg.integration;
    let params = cfg.model.params();
    let run = spinup_then_record_partial(&params, &State9::SEED, it.spinup_days, it.record_days, it.dt_days, it.stride);
    let mut m = Manifest::new("simulate");
    if let Some(t) = &run.traj {
        m.save_traj(&cfg.out_dir, TRAJECTORY_FILE, t, cfg.csv)?;
    }
    if let Some(e) = run.error {
        m.status = format!("failed: {e}");
        m.finish(cfg)?;
        return Err(e);
    }
    m.finish(cfg)?;
    Ok(SimulateReport { trajectory: run.traj.expect("successful run"), path: cfg.out_dir.join(TRAJECTORY_FILE) })
}

#[derive(Debug)]
pub struct TrainReport {
    pub param: Parameterization,
    /// One outcome per fitted network, in fitting order.
    pub stages: Vec<(&'static str, TrainOutcome)>,
    pub t_gw_days: Option<f64>,
}

fn write_stage(w: &mut KvWriter, name: &str, s: &TrainOutcome) {
    w.section(name)
        .entry("best_epoch", s.best_epoch)
        .entry("train_mse", s.best_train())
        .entry("val_mse", s.best_val())
        .entry("test_mse", s.best_test());
    if let Some(e) = s.aborted_at {
        w.entry("aborted_at", e);
    }
}

/// Fits the configured kind of parameterization to `trajectory`.
pub fn cmd_train(cfg: &ExperimentConfig, trajectory: &Path) -> Result<TrainReport> {
    prepare_dir(cfg)?;
    let traj = Trajectory::load(trajectory)?;
    let net = &cfg.network;
    let fit = FitConfig {
        arch: net.arch,
        split: cfg.split_mode(),
        init_seed: cfg.seed,
        train: net.train,
        span_days: cfg.training.span_days,
        sample_stride: cfg.training.sample_stride,
    };
    let mut m = Manifest::new("train");
    m.input("trajectory", trajectory);
    let dir = &cfg.out_dir;
    let mut sidecar = KvWriter::new();
    sidecar.entry("kind", net.kind.name()).entry("arch", net.arch).entry("split", net.split).entry("seed", cfg.seed);
    let report = match net.kind {
        ParameterizationKind::SlowPair => {
            let t_gw = match cfg.t_gw {
                TgwChoice::Days(d) => d,
                TgwChoice::Auto => estimate_t_gw(&traj)?,
            };
            let f = train_slow_pair(&traj, &cfg.filter_for(t_gw), &fit)?;
            save_mlp(&f.z_stage.params, dir.join("z_net.l80n"))?;
            save_mlp(&f.x_stage.params, dir.join("x_net.l80n"))?;
            m.outputs.extend(["z_net.l80n".into(), "x_net.l80n".into()]);
            m.write(dir, "loss_z.csv", f.z_stage.history.to_csv().as_bytes())?;
            m.write(dir, "loss_x.csv", f.x_stage.history.to_csv().as_bytes())?;
            sidecar.entry("t_gw_days", t_gw);
            write_stage(&mut sidecar, "z", &f.z_stage);
            write_stage(&mut sidecar, "x", &f.x_stage);
            TrainReport { param: f.param, stages: vec![("z", f.z_stage), ("x", f.x_stage)], t_gw_days: Some(t_gw) }
        }
        ParameterizationKind::Vanilla => {
            let f = train_vanilla(&traj, &fit)?;
            save_mlp(&f.stage.params, dir.join("v_net.l80n"))?;
            m.outputs.push("v_net.l80n".into());
            m.write(dir, "loss_v.csv", f.stage.history.to_csv().as_bytes())?;
            write_stage(&mut sidecar, "v", &f.stage);
            TrainReport { param: f.param, stages: vec![("v", f.stage)], t_gw_days: None }
        }
        ParameterizationKind::External => unreachable!("rejected by validation"),
    };
    m.write(dir, MODEL_FILE, sidecar.finish().as_bytes())?;
    m.finish(cfg)?;
    Ok(report)
}

/// Reads a directory written by [`cmd_train`].
pub fn load_model(dir: &Path) -> Result<Parameterization> {
    let path = dir.join(MODEL_FILE);
    let text = std::fs::read_to_string(&path)
        .map_err(|e| Error::Format(format!("cannot read {}: {e}", path.display())))?;
    let mut doc = KvDoc::parse(&text)?;
    let kind: ParameterizationKind = doc.require::<String>("kind")?.parse()?;
    match kind {
        ParameterizationKind::SlowPair => {
            Parameterization::slow_pair(load_mlp(dir.join("z_net.l80n"))?, load_mlp(dir.join("x_net.l80n"))?)
        }
        ParameterizationKind::Vanilla => Parameterization::vanilla(load_mlp(dir.join("v_net.l80n"))?),
        ParameterizationKind::External => Err(Error::Format("external maps cannot be loaded from disk".into())),
    }
}

#[derive(Debug)]
pub struct LobeReport {
    pub spec: LobeSpec,
    pub transitions: Transitions,
    pub histogram: Option<Histogram>,
    pub fit: Option<ExpFit>,
    pub summary: LobeSummary,
}

/// Lobe statistics of `traj`. Missing sojourns or too few bins leave the
/// histogram or fit empty rather than failing.
pub fn lobe_report(traj: &Trajectory, cfg: &ExperimentConfig) -> Result<LobeReport> {
    let spec = cfg.lobe_spec(traj.n_components())?;
    let transitions = trajectory_transitions(traj, &spec)?;
    let histogram = if transitions.records.is_empty() {
        None
    } else {
        Some(sojourn_histogram(&transitions.records, cfg.lobes.bin_days)?)
    };
    let fit = match &histogram {
        Some(h) => match fit_exponential(h, &cfg.lobes.fit) {
            Ok(f) => Some(f),
            Err(Error::TooFewBins(_)) => None,
            Err(e) => return Err(e),
        },
        None => None,
    };
    let summary = LobeSummary::new(&spec, &transitions, fit.clone());
    Ok(LobeReport { spec, transitions, histogram, fit, summary })
}

fn write_lobes(m: &mut Manifest, dir: &Path, r: &LobeReport) -> Result<()> {
    m.write(dir, "sojourns.csv", records_csv(&r.transitions.records).as_bytes())?;
    let hist = r.histogram.as_ref().map(Histogram::to_csv).unwrap_or_else(|| "bin_center,count\n".into());
    m.write(dir, "histogram.csv", hist.as_bytes())?;
    m.write(dir, "lobes.txt", r.summary.to_text().as_bytes())
}

/// Sojourn statistics of the `y3` series in `trajectory`.
pub fn cmd_lobes(cfg: &ExperimentConfig, trajectory: &Path) -> Result<LobeReport> {
    prepare_dir(cfg)?;
    let traj = Trajectory::load(trajectory)?;
    let mut m = Manifest::new("lobes");
    m.input("trajectory", trajectory);
    let report = lobe_report(&traj, cfg)?;
    write_lobes(&mut m, &cfg.out_dir, &report)?;
    m.finish(cfg)?;
    Ok(report)
}

#[derive(Debug)]
pub struct CloseReport {
    /// `y1..y3` followed by the diagnosed `x1..x3`.
    pub closure: Trajectory,
    pub y0: [f64; 3],
    pub lobes: LobeReport,
    pub deficit: Option<SpectralDeficit>,
    pub residual_mean: Option<[f64; 3]>,
    pub residual_std: Option<[f64; 3]>,
}

/// Runs the closed model from `model_dir`. With a `truth` trajectory the
/// run starts from its last `y` and the bundle gains the high-frequency
/// residual and spectral deficit; otherwise it starts from `closure.y0` or
/// the documented seed state. On blow-up the recorded prefix is saved.
pub fn cmd_close(cfg: &ExperimentConfig, model_dir: &Path, truth: Option<&Path>) -> Result<CloseReport> {
    prepare_dir(cfg)?;
    let map = load_model(model_dir)?;
    let truth = truth.map(|p| Trajectory::load(p).map(|t| (p, t))).transpose()?;
    let mut m = Manifest::new("close");
    m.input("model", model_dir);
    let y0 = match (&cfg.closure.y0, &truth) {
        (Some(y), _) => *y,
        (None, Some((_, t))) => {
            if t.is_empty() {
                return Err(Error::InsufficientData("empty truth trajectory".into()));
            }
            let c = y_columns(t.n_components())?;
            let last = t.last();
            [last[c[0]], last[c[1]], last[c[2]]]
        }
        (None, None) => State9::SEED.y,
    };
    if let Some((p, _)) = &truth {
        m.input("truth", p);
    }
    let sys = ClosureSystem::new(cfg.model.params(), map)?;
    let cl = &cfg.closure;
    let run = run_closure(&sys, y0, cl.dt_days, steps_for(cl.days, cl.dt_days), cl.stride, true);
    let dir = &cfg.out_dir;
    if let Some(t) = &run.traj {
        m.save_traj(dir, CLOSURE_FILE, t, cfg.csv)?;
    }
    if let Some(e) = run.error {
        m.status = format!("failed: {e}");
        m.finish(cfg)?;
        return Err(e);
    }
    let closure = run.traj.expect("successful run");

    let lobes = lobe_report(&closure, cfg)?;
    write_lobes(&mut m, dir, &lobes)?;

    let mut summary = KvWriter::new();
    summary.entry("kind", sys.kind().name()).entry("y0", format!("{}, {}, {}", y0[0], y0[1], y0[2]));
    summary.entry("samples", closure.len()).entry("span_days", closure.span());
    let y3 = closure.component(2);
    summary.entry("y3_amplitude", amplitude(&y3)).entry("y3_top_peak_fraction", top_peak_fraction(&y3, closure.dt())?);
    let max_abs = closure.samples().flat_map(|s| s[..3].iter()).fold(0.0f64, |a, v| a.max(v.abs()));
    summary.entry("max_abs_y", max_abs).entry("max_sojourn_days", max_sojourn(&lobes.transitions.records));

    let (mut deficit, mut residual_mean, mut residual_std) = (None, None, None);
    if let Some((_, t)) = &truth {
        if t.n_components() == 9 {
            let r = hf_residual(t, &sys.map)?;
            m.write(dir, "hf_residual.csv", r.to_csv().as_bytes())?;
            summary.section("hf_residual");
            for j in 0..3 {
                summary.entry(&format!("mean{}", j + 1), r.mean[j]).entry(&format!("std{}", j + 1), r.std[j]);
            }
            residual_mean = Some(r.mean);
            residual_std = Some(r.std);
        }
        let d = spectral_deficit(t, &closure, GW_BAND)?;
        m.write(dir, "spectral_deficit.csv", d.to_csv().as_bytes())?;
        summary.section("spectral_deficit");
        for j in 0..3 {
            summary.entry(&format!("ratio{}", j + 1), d.ratio[j]);
        }
        deficit = Some(d);
    }
    m.write(dir, "summary.txt", summary.finish().as_bytes())?;
    m.finish(cfg)?;
    Ok(CloseReport { closure, y0, lobes, deficit, residual_mean, residual_std })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::Arch;

    fn cfg_in(dir: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.out_dir = dir.to_path_buf();
        cfg
    }

    #[test]
    fn simulate_writes_manifest_and_config() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = cfg_in(tmp.path());
        cfg.integration.spinup_days = 0.0;
        cfg.integration.record_days = 2.0;
        cfg.training.span_days = None;
        let r = cmd_simulate(&cfg).unwrap();
        assert_eq!(r.trajectory.len(), 193);
        assert_eq!(Trajectory::load(&r.path).unwrap(), r.trajectory);
        let again = ExperimentConfig::load(tmp.path().join(CONFIG_FILE)).unwrap();
        assert_eq!(again, cfg);
        let manifest = std::fs::read_to_string(tmp.path().join(MANIFEST_FILE)).unwrap();
        assert!(manifest.contains("command = simulate") && manifest.contains(VERSION));
    }

    #[test]
    fn train_then_load_round_trips() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = cfg_in(tmp.path());
        cfg.integration.spinup_days = 10.0;
        cfg.integration.record_days = 20.0;
        cfg.training.span_days = Some(15.0);
        cfg.network.arch = Arch::new(1, 3);
        cfg.network.train.epochs = 20;
        let sim = cmd_simulate(&cfg).unwrap();
        for kind in [ParameterizationKind::SlowPair, ParameterizationKind::Vanilla] {
            cfg.network.kind = kind;
            let r = cmd_train(&cfg, &sim.path).unwrap();
            let loaded = load_model(tmp.path()).unwrap();
            assert_eq!(loaded.kind(), kind);
            let y = [0.1, -0.2, 0.3];
            assert_eq!(loaded.x_estimate(&y), r.param.x_estimate(&y));
        }
    }

    #[test]
    fn lobes_tolerate_no_transitions() {
        let traj = Trajectory::new(0.0, 1.0, 3, vec![0.0; 30]).unwrap();
        let r = lobe_report(&traj, &ExperimentConfig::default()).unwrap();
        assert!(r.transitions.records.is_empty() && r.histogram.is_none() && r.fit.is_none());
    }
}
