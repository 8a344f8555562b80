//! TOML description of a spread.
//!
//! ```toml
//! dim = 5
//! energy_constant = 1.0        # optional, defaults to Y(Sⁿ)
//! fixed_indices = [1, 2, 4]
//! lower = [0.99, 1.54, 1.72, 2.38]
//! upper = [1.01, 1.57, 1.76, 2.43]
//!
//! [[member]]
//! label = "K1"
//! values = [1.0, 0.48, 0.23]
//! laplacian = [-1.0, -0.5, 0.2]
//! solvable = true              # optional
//! samples = [...]              # optional
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sphere;

use super::ladder::{Spread, SpreadMember, StripLadder};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpreadFile {
    pub dim: usize,
    pub energy_constant: Option<f64>,
    pub fixed_indices: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    #[serde(default, rename = "member")]
    pub members: Vec<MemberEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MemberEntry {
    pub label: String,
    pub values: Vec<f64>,
    pub laplacian: Vec<f64>,
    pub solvable: Option<bool>,
    #[serde(default)]
    pub samples: Vec<f64>,
    /// Source expression, informational.
    pub expression: Option<String>,
}

impl SpreadFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Invalid(format!("spread file: {e}")))
    }

    pub fn into_spread(self) -> Result<Spread> {
        if self.dim < 3 {
            return Err(Error::UnsupportedDimension {
                n: self.dim,
                reason: "spreads need n ≥ 3".into(),
            });
        }
        let ladder = StripLadder::new(self.lower, self.upper)?;
        if self.fixed_indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Invalid(
                "fixed_indices must be strictly increasing".into(),
            ));
        }
        if let Some(&i) = self
            .fixed_indices
            .iter()
            .find(|&&i| i == 0 || i > ladder.len())
        {
            return Err(Error::Invalid(format!(
                "fixed index {i} is not a strip of the ladder"
            )));
        }
        let members = self
            .members
            .into_iter()
            .map(|m| SpreadMember {
                label: m.label,
                values: m.values,
                laplacian: m.laplacian,
                solvable: m.solvable,
                samples: m.samples,
            })
            .collect();
        Ok(Spread {
            n: self.dim,
            energy_constant: self
                .energy_constant
                .unwrap_or_else(|| sphere::yamabe_constant(self.dim)),
            ladder,
            fixed_indices: self.fixed_indices,
            members,
        })
    }
}

pub fn parse_spread(text: &str) -> Result<Spread> {
    SpreadFile::parse(text)?.into_spread()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_file() {
        let s = parse_spread(
            r#"
dim = 5
energy_constant = 1.0
fixed_indices = [1]
lower = [0.9]
upper = [1.1]
[[member]]
label = "a"
values = [1.0]
laplacian = [-1.0]
"#,
        )
        .unwrap();
        assert_eq!(s.members.len(), 1);
        assert_eq!(s.ladder.len(), 1);
        assert!(parse_spread("dim = 5\nbogus = 1").is_err());
    }
}
