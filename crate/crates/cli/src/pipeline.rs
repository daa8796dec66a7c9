//! Stage results shared between commands, computed on first use so that
//! `report` builds each of them once.

use std::sync::Arc;

use gapkit_core::model::Model;
use gapkit_core::stats::{simulate_process, Trajectory};
use gapkit_core::transfer::{lasota_yorke_constants, LYConstants, TransferError};
use gapkit_core::ulam::{
    assemble_ulam, build_grid, spectral_report, Grid, SpectralReport, StochasticMatrix,
};

use crate::config::RunConfig;
use crate::CliError;

pub struct UlamStage {
    pub grid: Grid,
    pub matrix: StochasticMatrix,
}

/// Lasota–Yorke constants, or why no radius gives a contraction.
pub type LYOutcome = Result<LYConstants, String>;

pub struct Pipeline {
    cfg: RunConfig,
    model: Arc<Model>,
    ly: Option<Arc<LYOutcome>>,
    ulam: Option<Arc<UlamStage>>,
    spectrum: Option<Arc<SpectralReport>>,
    trajectory: Option<Arc<Trajectory>>,
}

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Result<Self, CliError> {
        let model = Arc::new(Model::new(cfg.model.clone(), cfg.geometry.resolution)?);
        Ok(Self {
            cfg,
            model,
            ly: None,
            ulam: None,
            spectrum: None,
            trajectory: None,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn model(&self) -> Arc<Model> {
        Arc::clone(&self.model)
    }

    pub fn lasota_yorke(&mut self) -> Result<Arc<LYOutcome>, CliError> {
        if let Some(v) = &self.ly {
            return Ok(Arc::clone(v));
        }
        let eps0 = self.cfg.transfer.eps0.unwrap_or(self.model.geometry.eps0);
        let ly = match lasota_yorke_constants(&self.model, eps0) {
            Ok(c) => Ok(c),
            Err(e @ TransferError::NoContraction(_)) => Err(e.to_string()),
            Err(e) => return Err(e.into()),
        };
        let v = Arc::new(ly);
        self.ly = Some(Arc::clone(&v));
        Ok(v)
    }

    pub fn ulam(&mut self) -> Result<Arc<UlamStage>, CliError> {
        if let Some(v) = &self.ulam {
            return Ok(Arc::clone(v));
        }
        let grid = build_grid(&self.model, &self.cfg.ulam.grid)?;
        let matrix = assemble_ulam(&self.model, &grid, &self.cfg.assembly_options())?;
        let v = Arc::new(UlamStage { grid, matrix });
        self.ulam = Some(Arc::clone(&v));
        Ok(v)
    }

    pub fn spectrum(&mut self) -> Result<Arc<SpectralReport>, CliError> {
        if let Some(v) = &self.spectrum {
            return Ok(Arc::clone(v));
        }
        let u = self.ulam()?;
        let report = spectral_report(
            &u.matrix,
            &u.grid,
            &self.cfg.stationary_options(),
            &self.cfg.subdominant_options(),
        )?;
        let v = Arc::new(report);
        self.spectrum = Some(Arc::clone(&v));
        Ok(v)
    }

    pub fn trajectory(&mut self) -> Result<Arc<Trajectory>, CliError> {
        if let Some(v) = &self.trajectory {
            return Ok(Arc::clone(v));
        }
        let s = &self.cfg.simulate;
        let v = Arc::new(simulate_process(
            &self.model,
            &s.x0,
            s.steps,
            self.cfg.seed,
        )?);
        self.trajectory = Some(Arc::clone(&v));
        Ok(v)
    }
}
