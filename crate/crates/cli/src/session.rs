use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use pap::analysis::report::{write_timing, Format, Manifest};
use pap::config::{Run, RunConfig};
use pap::dynamics::Stepping;

use crate::error::{CliError, CliResult};
use crate::Common;

/// One command invocation: the resolved run, its output directory and the
/// manifest being assembled.
pub struct Session {
    pub run: Run,
    pub dir: PathBuf,
    pub format: Format,
    manifest: Manifest,
    started: Instant,
}

impl Session {
    /// Loads the config, applies the shared flags and then `extra`, and resolves the model.
    pub fn open(command: &str, common: &Common, extra: impl FnOnce(&mut RunConfig)) -> CliResult<Self> {
        let started = Instant::now();
        let origin = common.config.display().to_string();
        let text = std::fs::read_to_string(&common.config)
            .map_err(|e| CliError::usage(format!("{origin}: cannot read config: {e}")))?;
        let mut config = RunConfig::from_json(&text, &origin)?;
        apply_common(&mut config, common);
        extra(&mut config);
        let base_dir = common.config.parent().map(Path::to_path_buf).unwrap_or_default();
        let run = config.resolve(&base_dir)?;

        let dir = common.output_root.join(&run.config.output).join(command);
        let mut recorded = run.config.clone();
        recorded.model = run.model_path.canonicalize().unwrap_or_else(|_| run.model_path.clone());
        let value = serde_json::to_value(&recorded).map_err(pap::Error::from)?;
        let manifest = Manifest::new(command, value, run.sys.fingerprint());
        Ok(Self { run, dir, format: common.format.into(), manifest, started })
    }

    pub fn record(&mut self, paths: &[PathBuf]) {
        self.manifest.add_outputs(&self.dir, paths);
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.manifest.notes.push(note.into());
    }

    /// Creates `name` in the output directory and records it.
    pub fn create(&mut self, name: &str) -> CliResult<BufWriter<File>> {
        std::fs::create_dir_all(&self.dir)?;
        let path = self.dir.join(name);
        let file = File::create(&path)?;
        self.record(&[path]);
        Ok(BufWriter::new(file))
    }

    pub fn write_json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> CliResult<()> {
        let path = pap::analysis::report::write_json(&self.dir, name, value)?;
        self.record(&[path]);
        Ok(())
    }

    /// Runs the command body, then writes the manifest (marked failed on
    /// error) and the wall-clock timing next to the outputs.
    pub fn execute(mut self, body: impl FnOnce(&mut Session) -> CliResult<()>) -> CliResult<()> {
        let result = body(&mut self);
        if let Err(e) = &result {
            self.manifest.failed = true;
            self.manifest.notes.push(format!("error: {e}"));
        }
        self.manifest.write(&self.dir)?;
        write_timing(&self.dir, self.started.elapsed().as_secs_f64())?;
        result
    }
}

fn apply_common(config: &mut RunConfig, common: &Common) {
    if let Some(out) = &common.output {
        config.output = out.clone();
    }
    if let Some(dt) = common.fixed_step {
        config.propagator.stepping = Stepping::Fixed { dt };
    }
    if let Some(v) = common.scale {
        config.pulse.scale = v;
    }
    if let Some(v) = common.alpha_w {
        config.pulse.alpha_w = v;
    }
    if let Some(v) = common.sigma_w {
        config.pulse.sigma_w = v;
    }
}

pub fn flush(mut w: BufWriter<File>) -> CliResult<()> {
    w.flush()?;
    Ok(())
}
