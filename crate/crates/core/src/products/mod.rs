//! The three barrier products and their references.

pub mod caplet;
pub mod closed_form;
pub mod log_libor;
pub mod projection;
pub mod swaption;
pub mod trigger_swap;

use crate::error::Result;
use crate::harness::MCResult;
use crate::lmm::LmmModel;
use crate::walk::Algorithm;

use caplet::{price_caplet_mc, CapletSpec};
use swaption::{price_swaption_mc, SwaptionSpec};
use trigger_swap::{price_trigger_swap_mc, TriggerSwapSpec};

/// A fully specified pricing problem.
#[derive(Debug, Clone)]
pub enum Product {
    Caplet { spec: CapletSpec, optimal_f: bool },
    TriggerSwap { model: LmmModel, spec: TriggerSwapSpec },
    Swaption { model: LmmModel, spec: SwaptionSpec },
}

impl Product {
    pub fn price(&self, algorithm: Algorithm, h: f64, n_paths: u64, seed: u64) -> Result<MCResult> {
        match self {
            Product::Caplet { spec, optimal_f } => {
                price_caplet_mc(spec, algorithm, h, n_paths, *optimal_f, seed)
            }
            Product::TriggerSwap { model, spec } => {
                price_trigger_swap_mc(model, spec, algorithm, h, n_paths, seed)
            }
            Product::Swaption { model, spec } => {
                price_swaption_mc(model, spec, algorithm, h, n_paths, seed)
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Product::Caplet { .. } => "caplet",
            Product::TriggerSwap { .. } => "trigger_swap",
            Product::Swaption { .. } => "swaption",
        }
    }
}
