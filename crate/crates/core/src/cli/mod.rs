//! Command-line surface: every subcommand renders a deterministic CSV table
//! whose first line records the resolved configuration.

pub mod commands;
pub mod config;
pub mod csv;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::error::{Error, Result};

pub use commands::{execute, CommandOutput, SweepGrid, SweepPoint};
pub use config::{AxisVar, GridSpec, RunConfig, Scale, SweepAxis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Molecule formation probability against sweep time for several n_b
    Fig2,
    /// Formation probability against sweep amplitude for several scattering strengths
    Fig3,
    /// Entanglement entropy against sweep time for several n_b
    Fig4,
    /// Compare the closed form against direct Schrodinger propagation
    Verify,
    /// Steady-state molecule-number distribution and output statistics
    Steady,
    /// Time evolution of the molecule-number distribution
    Evolve,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fig2 => "fig2",
            Command::Fig3 => "fig3",
            Command::Fig4 => "fig4",
            Command::Verify => "verify",
            Command::Steady => "steady",
            Command::Evolve => "evolve",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "dksweep", version, about = "Tanh-sweep photoassociation: figures, oracle checks and molecular output")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Flat `key = value` configuration file
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Write CSV here instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Override a configuration key (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,

    /// Entropy form: amplitude (-sum |D| ln |D|) or probability (-sum |D|^2 ln |D|^2)
    #[arg(long, global = true, value_name = "MODE")]
    pub entropy_mode: Option<String>,

    /// Oracle integration window in units of T
    #[arg(long, global = true, value_name = "M")]
    pub window: Option<f64>,

    /// Oracle integrator tolerance
    #[arg(long, global = true, value_name = "X")]
    pub tol: Option<f64>,
}

impl Cli {
    /// Builds the run configuration; `read_file` supplies the config file text.
    pub fn resolve_with<F>(&self, read_file: F) -> Result<RunConfig>
    where
        F: Fn(&std::path::Path) -> Result<String>,
    {
        let mut cfg = RunConfig::defaults(self.command);
        if let Some(path) = &self.config {
            cfg.apply_text(&read_file(path)?)?;
        }
        for kv in &self.set {
            cfg.apply_override(kv)?;
        }
        if let Some(mode) = &self.entropy_mode {
            cfg.set("entropy_mode", mode)?;
        }
        if let Some(w) = self.window {
            cfg.window = w;
        }
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        if let Some(out) = &self.out {
            cfg.out = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        self.resolve_with(|p| {
            std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
        })
    }
}
