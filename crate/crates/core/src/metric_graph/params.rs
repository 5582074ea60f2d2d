use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::length::{format_length, serde_frac, Length};

/// Named geometric constants used across the constructions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Param {
    /// Four-point hyperbolicity constant.
    Delta,
    /// Projection separation above which broken paths track geodesics.
    D,
    /// Tracking constant of broken projection paths.
    C1,
    /// Quasiconvexity constant of edge-space images.
    C2,
    /// `C1 + C2`; the ladder's neighborhood radius.
    C,
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
    /// Maximum of the projection constants.
    PMax,
    /// Bounded-penetration constant.
    B,
    K0,
    K1,
    K2,
    /// Coarse-Lipschitz constant of the ladder retraction.
    C0,
    /// Per-step displacement bound of vertical rays.
    RayC,
    /// Tracking constant between pel-geodesics and their retracted images.
    TrackC1,
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Param::Delta => "delta",
            Param::D => "D",
            Param::C1 => "C1",
            Param::C2 => "C2",
            Param::C => "C",
            Param::P1 => "P1",
            Param::P2 => "P2",
            Param::P3 => "P3",
            Param::P4 => "P4",
            Param::P5 => "P5",
            Param::P6 => "P6",
            Param::P7 => "P7",
            Param::PMax => "P",
            Param::B => "B",
            Param::K0 => "K0",
            Param::K1 => "K1",
            Param::K2 => "K2",
            Param::C0 => "C0",
            Param::RayC => "ray_C",
            Param::TrackC1 => "track_C1",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Configured,
    Measured { instance: String, operation: String },
    Derived { rule: String },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constant {
    pub name: Param,
    #[serde(with = "serde_frac")]
    pub value: Length,
    pub provenance: Provenance,
}

/// A table of constants, each tagged configured, measured or derived.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeometryParams {
    entries: BTreeMap<Param, Constant>,
}

impl GeometryParams {
    pub fn new() -> Self {
        Self::default()
    }

    fn insert(&mut self, name: Param, value: Length, provenance: Provenance) -> Result<()> {
        if value < Ratio::from_integer(0) {
            return Err(Error::domain(format!(
                "{name} must be non-negative, got {}",
                format_length(&value)
            )));
        }
        self.entries.insert(
            name,
            Constant {
                name,
                value,
                provenance,
            },
        );
        if matches!(name, Param::C1 | Param::C2) {
            self.refresh_c();
        }
        Ok(())
    }

    fn refresh_c(&mut self) {
        if self
            .entries
            .get(&Param::C)
            .is_some_and(|c| c.provenance == Provenance::Configured)
        {
            return;
        }
        if let (Some(c1), Some(c2)) = (self.get(Param::C1), self.get(Param::C2)) {
            self.entries.insert(
                Param::C,
                Constant {
                    name: Param::C,
                    value: c1 + c2,
                    provenance: Provenance::Derived {
                        rule: "C1 + C2".into(),
                    },
                },
            );
        }
    }

    pub fn configure(&mut self, name: Param, value: Length) -> Result<()> {
        self.insert(name, value, Provenance::Configured)
    }

    pub fn record(
        &mut self,
        name: Param,
        value: Length,
        instance: impl Into<String>,
        operation: impl Into<String>,
    ) -> Result<()> {
        self.insert(
            name,
            value,
            Provenance::Measured {
                instance: instance.into(),
                operation: operation.into(),
            },
        )
    }

    pub fn derive(&mut self, name: Param, value: Length, rule: impl Into<String>) -> Result<()> {
        self.insert(name, value, Provenance::Derived { rule: rule.into() })
    }

    pub fn get(&self, name: Param) -> Option<Length> {
        self.entries.get(&name).map(|c| c.value)
    }

    pub fn entry(&self, name: Param) -> Option<&Constant> {
        self.entries.get(&name)
    }

    pub fn require(&self, name: Param) -> Result<Length> {
        self.get(name)
            .ok_or_else(|| Error::domain(format!("constant {name} is neither configured nor measured")))
    }

    pub fn entries(&self) -> impl Iterator<Item = &Constant> {
        self.entries.values()
    }

    /// `D`, defaulting to `4·delta + 1` (recorded as derived) when absent.
    pub fn d_or_default(&mut self) -> Result<Length> {
        if let Some(d) = self.get(Param::D) {
            return Ok(d);
        }
        let delta = self.require(Param::Delta)?;
        let d = delta * 4 + 1;
        self.derive(Param::D, d, "4*delta + 1")?;
        Ok(d)
    }

    /// Recomputes the aggregate projection constant from whatever `P1..P7` are present.
    pub fn refresh_pmax(&mut self) {
        let ps = [
            Param::P1,
            Param::P2,
            Param::P3,
            Param::P4,
            Param::P5,
            Param::P6,
            Param::P7,
        ];
        if let Some(m) = ps.iter().filter_map(|&p| self.get(p)).max() {
            let _ = self.derive(Param::PMax, m, "max(P1..P7)");
        }
    }

    /// Checks the table's internal consistency.
    pub fn validate(&self) -> Result<()> {
        if let (Some(c1), Some(c2), Some(c)) = (
            self.get(Param::C1),
            self.get(Param::C2),
            self.entries.get(&Param::C),
        ) {
            if c.provenance != Provenance::Configured && c.value != c1 + c2 {
                return Err(Error::invariant("C differs from C1 + C2"));
            }
        }
        for c in self.entries.values() {
            if let Provenance::Measured { instance, .. } = &c.provenance {
                if instance.is_empty() {
                    return Err(Error::invariant(format!(
                        "measured constant {} has no instance id",
                        c.name
                    )));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::length::{frac, int};

    #[test]
    fn c_tracks_c1_plus_c2() {
        let mut p = GeometryParams::new();
        p.record(Param::C1, frac(3, 2), "inst", "tracking").unwrap();
        assert_eq!(p.get(Param::C), None);
        p.record(Param::C2, int(2), "inst", "quasiconvexity").unwrap();
        assert_eq!(p.get(Param::C), Some(frac(7, 2)));
        p.validate().unwrap();
        p.configure(Param::C, int(1)).unwrap();
        p.record(Param::C1, int(5), "inst", "tracking").unwrap();
        assert_eq!(p.get(Param::C), Some(int(1)));
    }

    #[test]
    fn default_d_and_negatives() {
        let mut p = GeometryParams::new();
        assert!(p.d_or_default().is_err());
        p.record(Param::Delta, frac(1, 2), "inst", "four_point_delta").unwrap();
        assert_eq!(p.d_or_default().unwrap(), int(3));
        assert!(matches!(
            p.entry(Param::D).unwrap().provenance,
            Provenance::Derived { .. }
        ));
        assert!(p.configure(Param::B, int(-1)).is_err());
    }
}
