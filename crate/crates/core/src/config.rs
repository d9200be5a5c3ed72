//! JSON run configuration.
//!
//! A configuration names one product, carries a market block describing the
//! LIBOR curve, exactly one product block, and a numerics block. The schema is
//! shipped as `configs/run_config.schema.json`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lmm::{ForwardCurve, LmmModel, TenorStructure, VolModel};
use crate::products::caplet::CapletSpec;
use crate::products::swaption::SwaptionSpec;
use crate::products::trigger_swap::TriggerSwapSpec;
use crate::products::Product;
use crate::sde::steps_for;
use crate::walk::Algorithm;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductKind {
    Caplet,
    TriggerSwap,
    Swaption,
}

impl ProductKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProductKind::Caplet => "caplet",
            ProductKind::TriggerSwap => "trigger_swap",
            ProductKind::Swaption => "swaption",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub tenor_start: f64,
    pub tenor_end: f64,
    pub delta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flat_rate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flat_vol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vols: Option<Vec<f64>>,
    pub beta: f64,
}

impl MarketConfig {
    pub fn tenor(&self) -> Result<TenorStructure> {
        TenorStructure::from_range(self.tenor_start, self.tenor_end, self.delta)
            .map_err(|e| Error::Config(format!("market: {e}")))
    }

    pub fn model(&self) -> Result<LmmModel> {
        let tenor = self.tenor()?;
        let n = tenor.n_rates();
        let curve = match (&self.flat_rate, &self.rates) {
            (Some(r), None) => ForwardCurve::flat(*r, n),
            (None, Some(rs)) => ForwardCurve::new(rs.clone()),
            _ => {
                return Err(Error::Config(
                    "market: give exactly one of `flat_rate` or `rates`".into(),
                ))
            }
        }
        .map_err(|e| Error::Config(format!("market: {e}")))?;
        let vol = match (&self.flat_vol, &self.vols) {
            (Some(v), None) => VolModel::Flat(*v),
            (None, Some(vs)) => VolModel::PerRate(vs.clone()),
            _ => {
                return Err(Error::Config(
                    "market: give exactly one of `flat_vol` or `vols`".into(),
                ))
            }
        };
        LmmModel::new(tenor, curve, vol, self.beta).map_err(|e| Error::Config(format!("market: {e}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapletConfig {
    /// Rate `L^i`; its fixing date, initial value and volatility come from the
    /// market block.
    pub rate_index: usize,
    pub strike: f64,
    pub barrier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriggerSwapConfig {
    pub strike: f64,
    /// Common barrier for every rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barrier: Option<f64>,
    /// Per-rate barriers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barriers: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwaptionConfig {
    pub strike: f64,
    pub r_up: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_list: Option<Vec<f64>>,
    pub n_paths: u64,
    /// Defaults to 0 when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default)]
    pub use_optimal_f: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub product: ProductKind,
    #[serde(default = "default_algorithm")]
    pub algorithm: Algorithm,
    pub market: MarketConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caplet: Option<CapletConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trigger_swap: Option<TriggerSwapConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub swaption: Option<SwaptionConfig>,
    pub numerics: NumericsConfig,
    /// Reference price for bias columns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

fn default_algorithm() -> Algorithm {
    Algorithm::Order1
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> std::io::Result<Result<Self>> {
        let text = std::fs::read_to_string(path)?;
        Ok(Self::from_json(&text))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn seed(&self) -> u64 {
        self.numerics.seed.unwrap_or(0)
    }

    /// Reference configuration for `kind`.
    pub fn reference_setup(kind: ProductKind) -> Self {
        let numerics = |h: f64| NumericsConfig {
            h: Some(h),
            h_list: None,
            n_paths: 100_000,
            seed: Some(0),
            use_optimal_f: false,
        };
        match kind {
            ProductKind::Caplet => RunConfig {
                product: kind,
                algorithm: Algorithm::Order1,
                market: MarketConfig {
                    tenor_start: 0.0,
                    tenor_end: 10.0,
                    delta: 1.0,
                    flat_rate: Some(0.13),
                    rates: None,
                    flat_vol: Some(0.25),
                    vols: None,
                    beta: 0.0,
                },
                caplet: Some(CapletConfig {
                    rate_index: 9,
                    strike: 0.01,
                    barrier: 0.28,
                }),
                trigger_swap: None,
                swaption: None,
                numerics: NumericsConfig {
                    h_list: Some(vec![0.1, 0.05, 0.02, 0.01]),
                    ..numerics(0.02)
                },
                reference: Some(0.065_713_451_9),
                output: None,
            },
            ProductKind::TriggerSwap => RunConfig {
                product: kind,
                algorithm: Algorithm::Order1,
                market: MarketConfig {
                    tenor_start: 5.0,
                    tenor_end: 16.0,
                    delta: 1.0,
                    flat_rate: Some(0.04),
                    rates: None,
                    flat_vol: Some(0.2),
                    vols: None,
                    beta: 0.2,
                },
                caplet: None,
                trigger_swap: Some(TriggerSwapConfig {
                    strike: 0.01,
                    barrier: Some(0.13),
                    barriers: None,
                }),
                swaption: None,
                numerics: NumericsConfig {
                    h_list: Some(vec![0.25, 0.2, 0.125, 0.1, 0.0625, 0.05]),
                    ..numerics(0.05)
                },
                reference: Some(5.46e-2),
                output: None,
            },
            ProductKind::Swaption => RunConfig {
                product: kind,
                algorithm: Algorithm::Order1,
                market: MarketConfig {
                    tenor_start: 10.0,
                    tenor_end: 20.0,
                    delta: 1.0,
                    flat_rate: Some(0.05),
                    rates: None,
                    flat_vol: Some(0.1),
                    vols: None,
                    beta: 0.1,
                },
                caplet: None,
                trigger_swap: None,
                swaption: Some(SwaptionConfig {
                    strike: 0.01,
                    r_up: 0.075,
                }),
                numerics: NumericsConfig {
                    h_list: Some(vec![0.25, 0.2, 0.125, 0.1, 0.0625, 0.03125]),
                    ..numerics(0.0625)
                },
                reference: Some(0.15506),
                output: None,
            },
        }
    }

    /// Checks block structure, market data, product data and that `h` (if
    /// given) aligns every date the product needs on the grid.
    pub fn validate(&self) -> Result<()> {
        let blocks = [
            (ProductKind::Caplet, self.caplet.is_some()),
            (ProductKind::TriggerSwap, self.trigger_swap.is_some()),
            (ProductKind::Swaption, self.swaption.is_some()),
        ];
        let present: Vec<_> = blocks.iter().filter(|b| b.1).map(|b| b.0.as_str()).collect();
        if present.len() != 1 {
            return Err(Error::Config(format!(
                "exactly one product block is required, found {}: [{}]",
                present.len(),
                present.join(", ")
            )));
        }
        if !blocks.iter().any(|b| b.0 == self.product && b.1) {
            return Err(Error::Config(format!(
                "product is `{}` but the `{}` block is missing",
                self.product.as_str(),
                self.product.as_str()
            )));
        }
        let n = &self.numerics;
        if n.h.is_none() && n.h_list.is_none() {
            return Err(Error::Config("numerics: give `h` or `h_list`".into()));
        }
        if n.n_paths < 2 {
            return Err(Error::Config(format!(
                "numerics: n_paths must be at least 2, got {}",
                n.n_paths
            )));
        }
        let hs = n.h.iter().chain(n.h_list.iter().flatten());
        if let Some(bad) = hs.clone().find(|h| !(**h > 0.0 && h.is_finite())) {
            return Err(Error::Config(format!("numerics: step h = {bad} must be positive")));
        }
        if n.use_optimal_f && self.product != ProductKind::Caplet {
            return Err(Error::Config(
                "numerics: use_optimal_f is only available for the caplet".into(),
            ));
        }
        self.build_product()?;
        if let Some(h) = n.h {
            self.check_alignment(h)?;
        }
        Ok(())
    }

    /// Dates that must lie on the time grid.
    pub fn grid_dates(&self) -> Result<Vec<(String, f64)>> {
        let tenor = self.market.tenor()?;
        let n = tenor.n_rates();
        Ok(match self.product {
            ProductKind::Caplet => {
                let i = self.caplet.map(|c| c.rate_index).unwrap_or(0);
                vec![(format!("T_{i}"), tenor.date(i.min(n)))]
            }
            ProductKind::TriggerSwap => (0..n).map(|i| (format!("T_{i}"), tenor.date(i))).collect(),
            ProductKind::Swaption => vec![("T_0".to_string(), tenor.date(0))],
        })
    }

    pub fn check_alignment(&self, h: f64) -> Result<()> {
        for (name, t) in self.grid_dates()? {
            steps_for(t, h, &name)?;
        }
        Ok(())
    }

    pub fn build_product(&self) -> Result<Product> {
        let model = self.market.model()?;
        match self.product {
            ProductKind::Caplet => {
                let c = self.caplet.ok_or_else(|| Error::Config("missing caplet block".into()))?;
                let nr = model.n_rates();
                if c.rate_index >= nr {
                    return Err(Error::Config(format!(
                        "caplet: rate_index {} out of range for {nr} rates",
                        c.rate_index
                    )));
                }
                let spec = CapletSpec {
                    rate_index: c.rate_index,
                    expiry: model.tenor.date(c.rate_index),
                    strike: c.strike,
                    barrier: c.barrier,
                    sigma: model.vol.sigma(c.rate_index, 0.0),
                    initial_rate: model.curve.rates()[c.rate_index],
                };
                spec.validate().map_err(|e| Error::Config(format!("caplet: {e}")))?;
                Ok(Product::Caplet {
                    spec,
                    optimal_f: self.numerics.use_optimal_f,
                })
            }
            ProductKind::TriggerSwap => {
                let c = self
                    .trigger_swap
                    .as_ref()
                    .ok_or_else(|| Error::Config("missing trigger_swap block".into()))?;
                let barriers = match (&c.barrier, &c.barriers) {
                    (Some(h), None) => vec![*h; model.n_rates()],
                    (None, Some(hs)) => hs.clone(),
                    _ => {
                        return Err(Error::Config(
                            "trigger_swap: give exactly one of `barrier` or `barriers`".into(),
                        ))
                    }
                };
                let spec = TriggerSwapSpec {
                    strike: c.strike,
                    barriers,
                };
                spec.validate(&model)
                    .map_err(|e| Error::Config(format!("trigger_swap: {e}")))?;
                Ok(Product::TriggerSwap { model, spec })
            }
            ProductKind::Swaption => {
                let c = self
                    .swaption
                    .ok_or_else(|| Error::Config("missing swaption block".into()))?;
                let spec = SwaptionSpec {
                    strike: c.strike,
                    r_up: c.r_up,
                };
                spec.validate().map_err(|e| Error::Config(format!("swaption: {e}")))?;
                Ok(Product::Swaption { model, spec })
            }
        }
    }
}
