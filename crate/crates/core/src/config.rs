//! Every tunable in one block. Reports carry a copy of the block they ran
//! with.

use serde::{Deserialize, Serialize};

use crate::arith::DEFAULT_ARITH_CAP;
use crate::derivation::DEFAULT_PARTITION_CAP;
use crate::error::{Error, Result};
use crate::pixel::PixelConfig;
use crate::rules::regularity::DEFAULT_EPS;
use crate::rules::MineParams;
use crate::schema::DEFAULT_FUEL;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub pixel: PixelConfig,
    pub mine: MineParams,
    /// Small-change fraction for regularity case 2.
    pub eps: f64,
    pub partition_cap: usize,
    /// Operand size limit for difference and convolution.
    pub arith_cap: usize,
    /// Schema step budget.
    pub fuel: u64,
    /// Search expansions per problem.
    pub budget: usize,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            pixel: PixelConfig::default(),
            mine: MineParams::default(),
            eps: DEFAULT_EPS,
            partition_cap: DEFAULT_PARTITION_CAP,
            arith_cap: DEFAULT_ARITH_CAP,
            fuel: DEFAULT_FUEL,
            budget: 100_000,
        }
    }
}

impl Config {
    /// Parses a JSON config; missing keys keep their defaults.
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Config = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        })?;
        c.check()?;
        Ok(c)
    }

    pub fn check(&self) -> Result<()> {
        self.mine.check()?;
        let bad = |m: &str| Err(Error::Precondition(m.into()));
        if !(self.eps >= 0.0 && self.eps < 1.0) {
            return bad("eps outside [0,1)");
        }
        if self.fuel == 0 || self.budget == 0 || self.partition_cap == 0 {
            return bad("fuel, budget and partition cap must be positive");
        }
        let px = &self.pixel;
        if px.orientation_bins == 0 || px.angle_bin_deg <= 0.0 || px.levels < 2 {
            return bad("pixel bins must be positive and levels at least 2");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_json_keeps_defaults() {
        let c = Config::from_json(r#"{"eps": 0.2, "pixel": {"orientation_bins": 8}}"#).unwrap();
        assert_eq!(c.eps, 0.2);
        assert_eq!(c.pixel.orientation_bins, 8);
        assert_eq!(c.pixel.angle_bin_deg, 30.0);
        assert_eq!(c.fuel, DEFAULT_FUEL);
        let round = Config::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(round, c);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(Config::from_json(r#"{"budget": 0}"#).is_err());
        assert!(Config::from_json(r#"{"eps": 1.5}"#).is_err());
        assert!(Config::from_json(r#"{"bins": 3}"#).is_err());
        assert!(Config::from_json("{").is_err());
    }
}
