//! Experiment configuration files.
//!
//! ```text
//! regime = hlf            # or a [model] section with every coefficient
//! seed = 0
//!
//! [integration]
//! spinup_days = 100
//! record_days = 701
//! dt_days = 0.0005208333333333333
//! stride = 20
//!
//! [filter]
//! t_gw_days = auto        # or a number of days
//!
//! [network]
//! kind = slow_pair
//! arch = 1x5
//! split = random
//! epochs = 2000
//! learning_rate = 0.001
//!
//! [training]
//! span_days = 700
//! sample_stride = 4
//!
//! [closure]
//! days = 1000
//! dt_days = 0.0005208333333333333
//! stride = 20
//! y0 = 0.1, -0.1, 0.2     # optional
//!
//! [lobes]
//! y_b = 0.2               # optional, regime default otherwise
//! bin_days = 5
//! min_count = 5
//! fit_from_days = 10
//!
//! [output]
//! dir = out
//! csv = false
//! ```
//!
//! Every key is optional except where noted; unknown keys are errors.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::integrator::{DEFAULT_DT_DAYS, DEFAULT_STRIDE};
use crate::kv::{KvDoc, KvWriter};
use crate::model::{ModelParams, Regime};
use crate::neural::{Arch, ParameterizationKind, SplitMode, TrainConfig};
use crate::signal::{FilterSpec, DEFAULT_T_GW_DAYS};
use crate::statistics::{FitOptions, LobeSpec, DEFAULT_BIN_DAYS};

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSource {
    Preset(Regime),
    Inline(ModelParams),
}

impl ModelSource {
    pub fn params(&self) -> ModelParams {
        match self {
            ModelSource::Preset(r) => r.params(),
            ModelSource::Inline(p) => p.clone(),
        }
    }

    pub fn regime(&self) -> Option<Regime> {
        match self {
            ModelSource::Preset(r) => Some(*r),
            ModelSource::Inline(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationSpec {
    pub spinup_days: f64,
    pub record_days: f64,
    pub dt_days: f64,
    pub stride: usize,
}

impl Default for IntegrationSpec {
    fn default() -> Self {
        IntegrationSpec { spinup_days: 100.0, record_days: 701.0, dt_days: DEFAULT_DT_DAYS, stride: DEFAULT_STRIDE }
    }
}

/// Gravity-wave period used for the filter window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TgwChoice {
    Days(f64),
    /// Estimated from the trajectory's spectrum.
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkSpec {
    pub kind: ParameterizationKind,
    pub arch: Arch,
    pub split: &'static str,
    pub train: TrainConfig,
}

impl Default for NetworkSpec {
    fn default() -> Self {
        NetworkSpec { kind: ParameterizationKind::SlowPair, arch: Arch::new(1, 5), split: "random", train: TrainConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingSpec {
    pub span_days: Option<f64>,
    pub sample_stride: usize,
}

impl Default for TrainingSpec {
    fn default() -> Self {
        TrainingSpec { span_days: Some(700.0), sample_stride: 4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosureSpec {
    pub days: f64,
    pub dt_days: f64,
    pub stride: usize,
    /// Starting point; defaults to the last state of the truth trajectory
    /// when one is given.
    pub y0: Option<[f64; 3]>,
}

impl Default for ClosureSpec {
    fn default() -> Self {
        ClosureSpec { days: 1000.0, dt_days: DEFAULT_DT_DAYS, stride: DEFAULT_STRIDE, y0: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LobeOptions {
    pub y_b: Option<f64>,
    pub bin_days: f64,
    pub fit: FitOptions,
}

impl Default for LobeOptions {
    fn default() -> Self {
        LobeOptions { y_b: None, bin_days: DEFAULT_BIN_DAYS, fit: FitOptions::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSource,
    pub seed: u64,
    pub integration: IntegrationSpec,
    pub t_gw: TgwChoice,
    pub network: NetworkSpec,
    pub training: TrainingSpec,
    pub closure: ClosureSpec,
    pub lobes: LobeOptions,
    pub out_dir: PathBuf,
    pub csv: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: ModelSource::Preset(Regime::Hlf),
            seed: 0,
            integration: IntegrationSpec::default(),
            t_gw: TgwChoice::Days(DEFAULT_T_GW_DAYS),
            network: NetworkSpec::default(),
            training: TrainingSpec::default(),
            closure: ClosureSpec::default(),
            lobes: LobeOptions::default(),
            out_dir: PathBuf::from("out"),
            csv: false,
        }
    }
}

fn split_name(s: &str) -> Result<&'static str> {
    match s {
        "random" => Ok("random"),
        "predefined" => Ok("predefined"),
        other => Err(Error::Config(format!("unknown split `{other}` (expected random or predefined)"))),
    }
}

fn parse_triple(s: &str) -> Result<[f64; 3]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Error::Config(format!("expected three comma-separated numbers, got `{s}`"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let mut out = [0.0; 3];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.parse().map_err(|_| bad())?;
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut doc = KvDoc::parse(text)?;
        let mut cfg = ExperimentConfig::default();

        let regime = doc.take::<Regime>("regime")?;
        let has_inline = doc.contains("model.a1") || doc.contains("model.F1") || doc.contains("model.dt_model_days");
        cfg.model = match (regime, has_inline) {
            (Some(_), true) => return Err(Error::Config("give either `regime` or a [model] section, not both".into())),
            (Some(r), false) => ModelSource::Preset(r),
            (None, true) => ModelSource::Inline(ModelParams::from_doc(&mut doc, "model.")?),
            (None, false) => ModelSource::Preset(Regime::Hlf),
        };
        if let Some(v) = doc.take("seed")? {
            cfg.seed = v;
        }

        let it = &mut cfg.integration;
        if let Some(v) = doc.take("integration.spinup_days")? {
            it.spinup_days = v;
        }
        if let Some(v) = doc.take("integration.record_days")? {
            it.record_days = v;
        }
        if let Some(v) = doc.take("integration.dt_days")? {
            it.dt_days = v;
        }
        if let Some(v) = doc.take("integration.stride")? {
            it.stride = v;
        }

        if let Some(v) = doc.take_str("filter.t_gw_days") {
            cfg.t_gw = if v == "auto" {
                TgwChoice::Auto
            } else {
                TgwChoice::Days(v.parse().map_err(|_| Error::Config(format!("bad t_gw_days `{v}`")))?)
            };
        }

        let net = &mut cfg.network;
        if let Some(v) = doc.take_str("network.kind") {
            net.kind = v.parse()?;
        }
        if let Some(v) = doc.take_str("network.arch") {
            net.arch = v.parse()?;
        }
        if let Some(v) = doc.take_str("network.split") {
            net.split = split_name(&v)?;
        }
        if let Some(v) = doc.take("network.epochs")? {
            net.train.epochs = v;
        }
        if let Some(v) = doc.take("network.learning_rate")? {
            net.train.learning_rate = v;
        }

        if let Some(v) = doc.take_str("training.span_days") {
            cfg.training.span_days = if v == "all" {
                None
            } else {
                Some(v.parse().map_err(|_| Error::Config(format!("bad span_days `{v}`")))?)
            };
        }
        if let Some(v) = doc.take("training.sample_stride")? {
            cfg.training.sample_stride = v;
        }

        let cl = &mut cfg.closure;
        if let Some(v) = doc.take("closure.days")? {
            cl.days = v;
        }
        if let Some(v) = doc.take("closure.dt_days")? {
            cl.dt_days = v;
        }
        if let Some(v) = doc.take("closure.stride")? {
            cl.stride = v;
        }
        if let Some(v) = doc.take_str("closure.y0") {
            cl.y0 = Some(parse_triple(&v)?);
        }

        let lo = &mut cfg.lobes;
        if let Some(v) = doc.take("lobes.y_b")? {
            lo.y_b = Some(v);
        }
        if let Some(v) = doc.take("lobes.bin_days")? {
            lo.bin_days = v;
        }
        if let Some(v) = doc.take("lobes.min_count")? {
            lo.fit.min_count = v;
        }
        if let Some(v) = doc.take("lobes.fit_from_days")? {
            lo.fit.from_days = v;
        }

        if let Some(v) = doc.take_str("output.dir") {
            cfg.out_dir = PathBuf::from(v);
        }
        if let Some(v) = doc.take("output.csv")? {
            cfg.csv = v;
        }

        doc.reject_unknown()?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.params().validate()?;
        let it = &self.integration;
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} must be positive, got {v}")))
            }
        };
        positive(it.dt_days, "integration.dt_days")?;
        positive(self.closure.dt_days, "closure.dt_days")?;
        positive(self.lobes.bin_days, "lobes.bin_days")?;
        if !(it.spinup_days >= 0.0) || !(it.record_days >= 0.0) || !(self.closure.days >= 0.0) {
            return Err(Error::Config("durations must be non-negative".into()));
        }
        if it.stride == 0 || self.closure.stride == 0 || self.training.sample_stride == 0 {
            return Err(Error::Config("strides must be at least 1".into()));
        }
        if let Some(span) = self.training.span_days {
            positive(span, "training.span_days")?;
            if span > it.record_days {
                return Err(Error::Config(format!(
                    "training span ({span} days) exceeds the recorded span ({} days)",
                    it.record_days
                )));
            }
        }
        if let TgwChoice::Days(t) = self.t_gw {
            positive(t, "filter.t_gw_days")?;
        }
        if let Some(y_b) = self.lobes.y_b {
            positive(y_b, "lobes.y_b")?;
        }
        if self.network.kind == ParameterizationKind::External {
            return Err(Error::Config("external parameterizations cannot be trained".into()));
        }
        if self.network.train.epochs == 0 || !(self.network.train.learning_rate > 0.0) {
            return Err(Error::Config("training needs at least one epoch and a positive learning rate".into()));
        }
        Ok(())
    }

    pub fn split_mode(&self) -> SplitMode {
        SplitMode::parse(self.network.split, self.seed).expect("validated split name")
    }

    /// Lobe thresholds for a trajectory with `n_components` columns.
    pub fn lobe_spec(&self, n_components: usize) -> Result<LobeSpec> {
        let component = LobeSpec::y3_index(n_components)?;
        match self.lobes.y_b {
            Some(y_b) => LobeSpec::new(y_b, component),
            None => Ok(LobeSpec::for_regime(self.model.regime().unwrap_or(Regime::Hlf), component)),
        }
    }

    pub fn filter_for(&self, t_gw_days: f64) -> FilterSpec {
        FilterSpec::from_t_gw(t_gw_days)
    }

    /// The full configuration, including defaults, in the format
    /// [`parse`](Self::parse) reads.
    pub fn to_text(&self) -> String {
        let mut w = KvWriter::new();
        match &self.model {
            ModelSource::Preset(r) => {
                w.entry("regime", r);
            }
            ModelSource::Inline(_) => {}
        }
        w.entry("seed", self.seed);
        if let ModelSource::Inline(p) = &self.model {
            w.section("model");
            p.write_entries(&mut w);
        }
        let it = &self.integration;
        w.section("integration")
            .entry("spinup_days", it.spinup_days)
            .entry("record_days", it.record_days)
            .entry("dt_days", it.dt_days)
            .entry("stride", it.stride);
        w.section("filter");
        match self.t_gw {
            TgwChoice::Days(d) => w.entry("t_gw_days", d),
            TgwChoice::Auto => w.entry("t_gw_days", "auto"),
        };
        let net = &self.network;
        w.section("network")
            .entry("kind", net.kind.name())
            .entry("arch", net.arch)
            .entry("split", net.split)
            .entry("epochs", net.train.epochs)
            .entry("learning_rate", net.train.learning_rate);
        w.section("training");
        match self.training.span_days {
            Some(s) => w.entry("span_days", s),
            None => w.entry("span_days", "all"),
        };
        w.entry("sample_stride", self.training.sample_stride);
        let cl = &self.closure;
        w.section("closure").entry("days", cl.days).entry("dt_days", cl.dt_days).entry("stride", cl.stride);
        if let Some(y) = cl.y0 {
            w.entry("y0", format!("{}, {}, {}", y[0], y[1], y[2]));
        }
        w.section("lobes");
        if let Some(y_b) = self.lobes.y_b {
            w.entry("y_b", y_b);
        }
        w.entry("bin_days", self.lobes.bin_days)
            .entry("min_count", self.lobes.fit.min_count)
            .entry("fit_from_days", self.lobes.fit.from_days);
        w.section("output").entry("dir", self.out_dir.display()).entry("csv", self.csv);
        w.finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(ExperimentConfig::parse("").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn round_trip() {
        let mut cfg = ExperimentConfig::default();
        cfg.seed = 42;
        cfg.t_gw = TgwChoice::Auto;
        cfg.network.arch = Arch::new(5, 20);
        cfg.network.kind = ParameterizationKind::Vanilla;
        cfg.network.split = "predefined";
        cfg.closure.y0 = Some([0.1, -0.25, 1.0 / 3.0]);
        cfg.lobes.y_b = Some(0.05);
        cfg.training.span_days = None;
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
        cfg.model = ModelSource::Inline(Regime::Slow.params());
        assert_eq!(ExperimentConfig::parse(&cfg.to_text()).unwrap(), cfg);
    }

    #[test]
    fn unknown_keys_rejected() {
        let err = ExperimentConfig::parse("[network]\nwidth = 5\n").unwrap_err();
        assert!(matches!(err, Error::Config(ref m) if m.contains("network.width")), "{err}");
        assert!(ExperimentConfig::parse("regime = medium\n").is_err());
    }

    #[test]
    fn span_must_fit_record() {
        let err = ExperimentConfig::parse("[integration]\nrecord_days = 100\n[training]\nspan_days = 700\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn regime_and_inline_are_exclusive() {
        let inline = format!("[model]\n{}", Regime::Slow.params().to_preset_string());
        let cfg = ExperimentConfig::parse(&inline).unwrap();
        assert_eq!(cfg.model.params(), Regime::Slow.params());
        assert!(ExperimentConfig::parse(&format!("regime = hlf\n{inline}")).is_err());
        // a partial inline model is missing keys
        assert!(ExperimentConfig::parse("[model]\nF1 = 0.1\n").is_err());
    }

    #[test]
    fn lobe_defaults_follow_regime() {
        let cfg = ExperimentConfig::parse("regime = slow\n").unwrap();
        assert_eq!(cfg.lobe_spec(9).unwrap(), LobeSpec { y_b: 0.05, component: 5 });
        assert_eq!(cfg.lobe_spec(3).unwrap().component, 2);
    }
}
