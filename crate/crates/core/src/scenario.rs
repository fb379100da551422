//! JSON scenario files: network intensities, the pool, an optional miner and
//! optional reward laws.
//!
//! ```json
//! {
//!   "network": {"lambda": 6, "mu": 60, "q": 0.1},
//!   "pool": {"p_I": 0.1, "f": 0.02, "b": 1000, "u": 20000, "t": 336},
//!   "miner": {"p_i": 0.001, "u": 1000, "t": 336,
//!             "electricity": {"network_kwh_per_hour": 13180584.07, "price_per_kwh": 0.06, "currency_per_mu": 231.85}},
//!   "rewards": {"share": {"weights": [1.0], "rates": [0.0102]}, "scale": 10.2}
//! }
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::miner::miner_electricity_cost;
use crate::model::{derive_pool_params, CombExp, MinerParams, NetworkParams, PoolParams, RewardLaw};

/// Yearly network consumption of 115.541 TWh spread over the hours of a year.
pub const REFERENCE_NETWORK_KWH_PER_HOUR: f64 = 115.541e9 / (365.25 * 24.0);
pub const REFERENCE_PRICE_PER_KWH: f64 = 0.06;
/// Dollars per money unit (1000 MU = 6.25 BTC).
pub const REFERENCE_USD_PER_MU: f64 = 231.85;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub lambda: f64,
    pub mu: f64,
    pub q: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolSpec {
    #[serde(rename = "p_I")]
    pub p_pool: f64,
    pub f: f64,
    pub b: f64,
    pub u: f64,
    pub t: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElectricitySpec {
    pub network_kwh_per_hour: f64,
    pub price_per_kwh: f64,
    pub currency_per_mu: f64,
}

impl ElectricitySpec {
    pub fn reference() -> Self {
        Self {
            network_kwh_per_hour: REFERENCE_NETWORK_KWH_PER_HOUR,
            price_per_kwh: REFERENCE_PRICE_PER_KWH,
            currency_per_mu: REFERENCE_USD_PER_MU,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinerSpec {
    pub p_i: f64,
    /// Cost rate in MU per hour; derived from `electricity` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_i: Option<f64>,
    pub u: f64,
    pub t: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub electricity: Option<ElectricitySpec>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RewardsSpec {
    /// Share reward law; exponential with mean `w` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub share: Option<CombExp>,
    /// `B_r = scale * W` in law; `b / w` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub network: NetworkSpec,
    pub pool: PoolSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub miner: Option<MinerSpec>,
    #[serde(default)]
    pub rewards: RewardsSpec,
}

impl Scenario {
    /// Network of 6 blocks/hour with `q = 0.1`, a pool with a tenth of the
    /// hashpower and 2% fee, and a miner holding 0.1% of the network.
    pub fn reference() -> Self {
        Self {
            network: NetworkSpec {
                lambda: 6.0,
                mu: 60.0,
                q: 0.1,
            },
            pool: PoolSpec {
                p_pool: 0.1,
                f: 0.02,
                b: 1000.0,
                u: 20_000.0,
                t: 336.0,
            },
            miner: Some(MinerSpec {
                p_i: 0.001,
                c_i: None,
                u: 1000.0,
                t: 336.0,
                electricity: Some(ElectricitySpec::reference()),
            }),
            rewards: RewardsSpec::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| invalid("scenario", e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid("scenario", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn network_params(&self) -> Result<NetworkParams> {
        NetworkParams::with_share_rate(self.network.lambda, self.network.mu, self.network.q)
    }

    /// Pool parameters with the exact share reward `w = (1 - f) b q`.
    pub fn pool_params(&self) -> Result<PoolParams> {
        let p = &self.pool;
        derive_pool_params(&self.network_params()?, p.p_pool, p.f, p.b, p.u, p.t)
    }

    /// Pool parameters on the integer lattice, with the rounding applied to `w`.
    pub fn lattice_pool_params(&self) -> Result<(PoolParams, f64)> {
        let params = self.pool_params()?;
        if params.b().fract() != 0.0 {
            return Err(invalid("b", format!("lattice solver needs an integer block reward, got {}", params.b())));
        }
        params.with_rounded_share_reward()
    }

    /// Share reward law for the random-reward variant.
    pub fn share_law(&self) -> Result<CombExp> {
        match &self.rewards.share {
            Some(law) => Ok(law.clone()),
            None => CombExp::exponential(1.0 / self.pool_params()?.w()),
        }
    }

    /// Scale `a` of the block reward law.
    pub fn block_scale(&self) -> Result<f64> {
        match self.rewards.scale {
            Some(a) => Ok(a),
            None => {
                let p = self.pool_params()?;
                Ok(p.b() / p.w())
            }
        }
    }

    fn miner_spec(&self) -> Result<&MinerSpec> {
        self.miner
            .as_ref()
            .ok_or_else(|| invalid("miner", "scenario has no miner section"))
    }

    /// Cost rate of the miner in MU per hour.
    pub fn miner_cost(&self) -> Result<f64> {
        let m = self.miner_spec()?;
        match (m.c_i, &m.electricity) {
            (Some(c), _) => Ok(c),
            (None, Some(e)) => Ok(miner_electricity_cost(
                m.p_i,
                e.network_kwh_per_hour,
                e.price_per_kwh,
                e.currency_per_mu,
            )),
            (None, None) => Err(invalid("c_i", "give c_i or an electricity section")),
        }
    }

    /// Miner parameters with the pool's deterministic share reward.
    pub fn miner_params(&self) -> Result<MinerParams> {
        let m = self.miner_spec()?;
        let w = self.pool_params()?.w();
        MinerParams::new(
            m.p_i,
            self.miner_cost()?,
            &self.network_params()?,
            RewardLaw::deterministic(w)?,
            m.u,
            m.t,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_round_trips_through_json() {
        let s = Scenario::reference();
        let back = Scenario::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn reference_derivations() {
        let s = Scenario::reference();
        let (p, shift) = s.lattice_pool_params().unwrap();
        assert_eq!(p.w(), 98.0);
        assert!(shift.abs() < 1e-9);
        assert!((s.miner_cost().unwrap() - 3.41098).abs() < 1e-4);
        assert!((s.block_scale().unwrap() - 1000.0 / 98.0).abs() < 1e-9);
        assert_eq!(s.share_law().unwrap().rates()[0], 1.0 / p.w());
    }

    #[test]
    fn rejects_unknown_fields_and_bad_values() {
        assert!(Scenario::from_json(r#"{"network":{"lambda":6,"mu":60,"q":0.1,"x":1},"pool":{"p_I":0.1,"f":0,"b":10,"u":0,"t":1}}"#).is_err());
        let s = Scenario::from_json(r#"{"network":{"lambda":6,"mu":60,"q":0.1},"pool":{"p_I":0.1,"f":1.5,"b":10,"u":0,"t":1}}"#).unwrap();
        assert!(s.pool_params().is_err());
        assert!(s.miner_params().is_err());
    }
}
