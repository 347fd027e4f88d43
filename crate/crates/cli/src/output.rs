use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use num_complex::Complex64 as C64;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::args::Io;
use crate::Validation;

/// Overlays the `--config` JSON object onto the parsed flags.
pub fn resolve<T: Serialize + DeserializeOwned>(args: T, io: &Io) -> Result<T> {
    let Some(path) = &io.config else { return Ok(args) };
    let text = fs::read_to_string(path).map_err(|e| Validation(format!("reading {}: {e}", path.display())))?;
    let over: Value =
        serde_json::from_str(&text).map_err(|e| Validation(format!("parsing {}: {e}", path.display())))?;
    let Value::Object(over) = over else {
        return Err(Validation("config must be a JSON object".into()).into());
    };
    let mut base = serde_json::to_value(&args)?;
    if let Value::Object(b) = &mut base {
        for (k, v) in over {
            b.insert(k, v);
        }
    }
    Ok(serde_json::from_value(base).map_err(|e| Validation(format!("config: {e}")))?)
}

pub struct Out {
    dir: PathBuf,
    plot: bool,
}

impl Out {
    pub fn new(io: &Io) -> Result<Self> {
        fs::create_dir_all(&io.out_dir).with_context(|| format!("creating {}", io.out_dir.display()))?;
        Ok(Out {
            dir: io.out_dir.clone(),
            plot: io.plot_script,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn csv(&self, name: &str) -> Result<csv::Writer<fs::File>> {
        let p = self.path(name);
        csv::Writer::from_path(&p).with_context(|| format!("writing {}", p.display()))
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let p = self.path(name);
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        fs::write(&p, s).with_context(|| format!("writing {}", p.display()))
    }

    /// Gnuplot script plotting `columns` of `csv_name` against its first column.
    pub fn plot(&self, csv_name: &str, columns: &[&str], logscale_y: bool) -> Result<()> {
        if !self.plot {
            return Ok(());
        }
        let stem = Path::new(csv_name)
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("plot");
        let mut s = String::from("set datafile separator ','\nset key autotitle columnhead\n");
        if logscale_y {
            s.push_str("set logscale y\n");
        }
        let plots: Vec<String> = columns
            .iter()
            .map(|c| format!("'{csv_name}' using 1:'{c}' with lines"))
            .collect();
        s.push_str(&format!("plot {}\npause -1\n", plots.join(", \\\n     ")));
        let p = self.path(&format!("{stem}.gp"));
        fs::write(&p, s).with_context(|| format!("writing {}", p.display()))
    }
}

pub fn parse_complex(s: &str) -> Result<C64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let bad = || Validation(format!("expected `re,im`, got `{s}`"));
    match parts.as_slice() {
        [re] => Ok(C64::new(re.parse().map_err(|_| bad())?, 0.0)),
        [re, im] => Ok(C64::new(re.parse().map_err(|_| bad())?, im.parse().map_err(|_| bad())?)),
        _ => Err(bad().into()),
    }
}

/// Shortest round-trip form, exponent notation for small and large values.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

/// Absent values become empty CSV fields.
pub fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}
