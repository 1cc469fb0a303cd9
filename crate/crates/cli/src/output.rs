//! Output directory handling and run metadata.

use crate::config::RunConfig;
use anyhow::{Context, Result};
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub const TOOL_VERSION: &str = concat!("vortexholo ", env!("CARGO_PKG_VERSION"));

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn writer(&self, name: &str) -> Result<BufWriter<File>> {
        let p = self.path(name);
        let f = File::create(&p).with_context(|| format!("creating {}", p.display()))?;
        Ok(BufWriter::new(f))
    }

    /// Write `<name>` holding a `[run]` table, the command's summary and the
    /// echoed configuration.
    pub fn write_metadata<S: Serialize>(
        &self,
        name: &str,
        command: &str,
        status: &str,
        summary: &S,
        cfg: &RunConfig,
    ) -> Result<()> {
        #[derive(Serialize)]
        struct Run<'a> {
            tool: &'a str,
            command: &'a str,
            status: &'a str,
        }
        #[derive(Serialize)]
        struct Meta<'a, S: Serialize> {
            run: Run<'a>,
            summary: &'a S,
            config: &'a RunConfig,
        }
        let meta = Meta {
            run: Run {
                tool: TOOL_VERSION,
                command,
                status,
            },
            summary,
            config: cfg,
        };
        let mut w = self.writer(name)?;
        w.write_all(toml::to_string(&meta)?.as_bytes())?;
        w.flush()?;
        Ok(())
    }
}
