use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};

use vortexcorr::pairs::QUADRATURE_ORDERS;

use crate::config::RunConfig;
use crate::error::CliError;

pub const TOOL: &str = "vortexcorr";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Metadata embedded in every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub seed: Option<u64>,
    pub quadrature: Map<String, Value>,
    pub flags: Vec<String>,
}

impl Provenance {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        let mut quadrature: Map<String, Value> = QUADRATURE_ORDERS
            .iter()
            .map(|(k, v)| (k.to_string(), json!(v)))
            .collect();
        if let Some(g) = config.grid {
            quadrature.insert("grid".into(), json!(g));
        }
        let mut config = config.clone();
        config.out = None;
        Provenance {
            tool: TOOL,
            version: VERSION,
            command: command.into(),
            config_hash: config.hash(),
            seed: config.seed,
            quadrature,
            config,
            flags: Vec::new(),
        }
    }

    pub fn with_flags<I: IntoIterator<Item = S>, S: Into<String>>(mut self, flags: I) -> Self {
        self.flags.extend(flags.into_iter().map(Into::into));
        self
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("provenance serializes")
    }

    pub fn to_map(&self) -> Map<String, Value> {
        match self.to_value() {
            Value::Object(m) => m,
            _ => unreachable!(),
        }
    }

    fn line(&self) -> String {
        serde_json::to_string(self).expect("provenance serializes")
    }
}

/// Creates the output directory and tracks what was written.
pub struct Sink {
    dir: PathBuf,
    pub provenance: Provenance,
    pub written: Vec<PathBuf>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Output {
        path: path.display().to_string(),
        source,
    }
}

impl Sink {
    pub fn new(dir: PathBuf, provenance: Provenance) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(Sink {
            dir,
            provenance,
            written: Vec::new(),
        })
    }

    fn file<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<(), CliError>,
    {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(io_err(&path))?;
        let mut w = BufWriter::new(f);
        body(&mut w)?;
        w.flush().map_err(io_err(&path))?;
        self.written.push(path);
        Ok(())
    }

    /// CSV preceded by one `# provenance: {...}` comment line.
    pub fn csv<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut dyn Write) -> vortexcorr::Result<()>,
    {
        let line = self.provenance.line();
        let path = self.dir.join(name);
        self.file(name, |w| {
            writeln!(w, "# provenance: {line}").map_err(io_err(&path))?;
            body(w)?;
            Ok(())
        })
    }

    /// JSON object with a `provenance` member added.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut v = serde_json::to_value(value).map_err(vortexcorr::Error::from)?;
        match &mut v {
            Value::Object(m) => {
                m.insert("provenance".into(), self.provenance.to_value());
            }
            other => {
                v = json!({ "data": other.take(), "provenance": self.provenance.to_value() });
            }
        }
        let path = self.dir.join(name);
        self.file(name, |w| {
            serde_json::to_writer_pretty(&mut *w, &v).map_err(vortexcorr::Error::from)?;
            writeln!(w).map_err(io_err(&path))
        })
    }

    /// SVG with provenance in a comment after the root element opens.
    pub fn svg(&mut self, name: &str, document: &str) -> Result<(), CliError> {
        let comment = format!(
            "<!-- provenance: {} -->\n",
            self.provenance.line().replace("--", "-\u{2010}")
        );
        let doc = match document.find('\n') {
            Some(k) => format!("{}{}{}", &document[..=k], comment, &document[k + 1..]),
            None => format!("{document}\n{comment}"),
        };
        let path = self.dir.join(name);
        self.file(name, |w| w.write_all(doc.as_bytes()).map_err(io_err(&path)))
    }

    pub fn raw<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut dyn Write) -> vortexcorr::Result<()>,
    {
        self.file(name, |w| body(w).map_err(CliError::from))
    }
}
