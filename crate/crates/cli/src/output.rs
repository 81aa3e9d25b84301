use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use epictrl_core::centrality::Grouping;
use epictrl_core::dynamics::{per_capita_resource, ControlSchedule, CostModel, Trajectory};
use epictrl_core::fmt::num;
use serde_json::Value;

use crate::error::CliError;

/// Where a command's files go.
#[derive(Debug, Clone)]
pub enum Sink {
    /// Report on standard output, no side files.
    Stdout,
    /// Report at `report`, side files in `dir`.
    Files { dir: PathBuf, report: PathBuf },
}

impl Sink {
    /// A path ending in `.json` names the report itself; anything else is a
    /// directory that receives `report.json` and the CSV files.
    pub fn new(out: Option<&Path>) -> Result<Sink, CliError> {
        let Some(out) = out else {
            return Ok(Sink::Stdout);
        };
        let (dir, report) = if out.extension().is_some_and(|e| e == "json") {
            let dir = match out.parent() {
                Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
                _ => PathBuf::from("."),
            };
            (dir, out.to_path_buf())
        } else {
            (out.to_path_buf(), out.join("report.json"))
        };
        fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
        Ok(Sink::Files { dir, report })
    }

    pub fn is_stdout(&self) -> bool {
        matches!(self, Sink::Stdout)
    }

    pub fn report(&self, value: &Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("report serializes");
        text.push('\n');
        match self {
            Sink::Stdout => io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e)),
            Sink::Files { report, .. } => {
                fs::write(report, text).map_err(|e| CliError::io(report, e))
            }
        }
    }

    /// Writes `name` in the output directory; a no-op without one.
    pub fn file(
        &self,
        name: &str,
        body: impl FnOnce(&mut dyn Write) -> io::Result<()>,
    ) -> Result<(), CliError> {
        let Sink::Files { dir, .. } = self else {
            return Ok(());
        };
        let path = dir.join(name);
        let run = || -> io::Result<()> {
            let mut w = BufWriter::new(File::create(&path)?);
            body(&mut w)?;
            w.flush()
        };
        run().map_err(|e| CliError::io(&path, e))
    }

    pub fn solution_files(
        &self,
        controls: &ControlSchedule,
        state: &Trajectory,
        cost: &dyn CostModel,
        grp: &Grouping,
    ) -> Result<(), CliError> {
        self.file("controls.csv", |w| controls.write_csv(w))?;
        self.file("trajectory.csv", |w| state.write_csv(w))?;
        self.file("per_group_resource.csv", |w| {
            write_resource_csv(controls, cost, grp, w)
        })
    }
}

pub fn write_resource_csv(
    controls: &ControlSchedule,
    cost: &dyn CostModel,
    grp: &Grouping,
    w: &mut dyn Write,
) -> io::Result<()> {
    writeln!(w, "group,size,fraction,spend,per_capita_resource")?;
    for m in 0..grp.group_count() {
        let per_capita = per_capita_resource(controls, cost, m).map_err(io::Error::other)?;
        let p = grp.fraction(m);
        writeln!(
            w,
            "{m},{},{},{},{}",
            grp.size(m),
            num(p),
            num(per_capita * p),
            num(per_capita)
        )?;
    }
    Ok(())
}

pub fn write_seed_csv(values: &[f64], shares: &[f64], w: &mut dyn Write) -> io::Result<()> {
    writeln!(w, "group,seed_fraction,mass_share")?;
    for (m, (x, s)) in values.iter().zip(shares).enumerate() {
        writeln!(w, "{m},{},{}", num(*x), num(*s))?;
    }
    Ok(())
}
