//! Output files. Every CSV starts with a `# `-prefixed copy of the resolved
//! spec and every JSON document embeds it, so each file is self-describing.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::spec::RunSpec;
use crate::CliError;

pub struct OutputDir {
    dir: PathBuf,
    prefix: String,
    header: String,
    spec_json: serde_json::Value,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

impl OutputDir {
    pub fn create(spec: &RunSpec) -> Result<Self, CliError> {
        let dir = PathBuf::from(&spec.output.dir);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let header = spec.to_toml().lines().map(|l| format!("# {l}\n")).collect::<String>();
        let spec_json = serde_json::to_value(spec).map_err(|e| CliError::Validation(e.to_string()))?;
        Ok(OutputDir {
            dir,
            prefix: spec.output.prefix.clone(),
            header,
            spec_json,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(format!("{}_{name}", self.prefix))
    }

    /// Write `name` as CSV: spec header block, then whatever `body` emits.
    pub fn csv(
        &self,
        name: &str,
        body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>,
    ) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let file = fs::File::create(&path).map_err(io_err(&path))?;
        let mut w = BufWriter::new(file);
        w.write_all(self.header.as_bytes())
            .and_then(|_| body(&mut w))
            .and_then(|_| w.flush())
            .map_err(io_err(&path))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    /// Write `name` as pretty JSON `{"spec": ..., <fields of payload>}`.
    pub fn json<T: Serialize>(&self, name: &str, payload: &T) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut doc = serde_json::Map::new();
        doc.insert("spec".into(), self.spec_json.clone());
        match serde_json::to_value(payload).map_err(|e| CliError::Validation(e.to_string()))? {
            serde_json::Value::Object(m) => doc.extend(m),
            other => {
                doc.insert("data".into(), other);
            }
        }
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(doc))
            .map_err(|e| CliError::Validation(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(io_err(&path))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }
}
