//! Default parameter sheet. Every entry carries the inequality that defines it and
//! whether the value is a default or a user override. Closed-form caps are evaluated;
//! constants that only exist implicitly are listed without a value.

use serde::Serialize;

use crate::error::{Error, Result};

/// Below this, `d` makes cluster pairs indistinguishable from empty at desk scale.
pub const DESK_MIN_D: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Default,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SheetEntry {
    pub name: String,
    pub value: Option<f64>,
    pub rule: String,
    pub source: Source,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterSheet {
    pub entries: Vec<SheetEntry>,
}

impl ParameterSheet {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|e| e.name == name).and_then(|e| e.value)
    }

    pub fn entry(&self, name: &str) -> Option<&SheetEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Override (or add) a value; the entry is marked as user-set.
    pub fn set(&mut self, name: &str, value: f64) {
        match self.entries.iter_mut().find(|e| e.name == name) {
            Some(e) => {
                e.value = Some(value);
                e.source = Source::User;
            }
            None => self.entries.push(SheetEntry { name: name.into(), value: Some(value), rule: "user supplied".into(), source: Source::User, note: None }),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("sheet serializes")
    }
}

fn entry(name: &str, value: Option<f64>, rule: &str, note: Option<String>) -> SheetEntry {
    SheetEntry { name: name.into(), value, rule: rule.into(), source: Source::Default, note }
}

/// Defaults for `(r, p, gamma, Delta)`.
pub fn parameter_sheet(r: usize, p: f64, gamma: f64, delta: usize) -> Result<ParameterSheet> {
    if r < 1 {
        return Err(Error::InvalidArgument("r must be at least 1".into()));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidProbability(p));
    }
    if !(gamma > 0.0 && gamma < 1.0 / r as f64) {
        return Err(Error::InvalidArgument(format!("gamma must lie in (0, 1/r), got {gamma}")));
    }
    if delta < 1 {
        return Err(Error::InvalidArgument("Delta must be at least 1".into()));
    }
    let rf = r as f64;
    let d = gamma * p / 90.0;
    let d_note = (d < DESK_MIN_D).then(|| format!("{d:.2e} is likely too small for desk-scale hosts; override recommended"));
    let c = (d / 8.0).powi(delta as i32);
    let eps = 0.5 * (d * p / (6.0 * rf * delta as f64)).min(c);
    let entries = vec![
        entry("r", Some(rf), "chromatic number of H", None),
        entry("p", Some(p), "edge probability", None),
        entry("gamma", Some(gamma), "0 < gamma < 1/r", None),
        entry("Delta", Some(delta as f64), "maximum degree of H", None),
        entry("delta_floor_factor", Some(1.0 - 1.0 / rf + gamma), "min degree >= (1 - 1/r + gamma) n p", None),
        entry("d", Some(d), "d <= gamma p / 90", d_note),
        entry("c", Some(c), "c <= (d/8)^Delta", None),
        entry(
            "eps",
            Some(eps),
            "eps <= (1/2) min{dp/(6 r Delta), (d/8)^Delta, implicit constants}",
            Some("upper bound from the closed-form terms only".into()),
        ),
        entry("alpha", None, "alpha from the blow-up step at (d/2, Delta, c, r)", Some("implicit; no closed form".into())),
        entry("b0", None, "b0 = 2 b' T for the bad-set bound", Some("implicit; no closed form".into())),
        entry("K0", None, "K0 bounds the number of columns", Some("implicit; no closed form".into())),
        entry("xi", None, "xi <= (1/2) min{xi0, (1-eps) alpha eps^2 c / (144 Delta (K0 r)^2)}", Some("depends on alpha and K0".into())),
        entry("beta_over_xi_sq", Some(1.0 / (3026.0 * rf.powi(3))), "beta <= xi^2 / (3026 r^3)", None),
        entry("beta_over_xi_sq_spanning", Some(1.0 / (6052.0 * rf.powi(3))), "beta <= min{xi^2/(6052 r^3), 1/(b0 Delta^5)}", None),
        entry("block_factor", Some(200.0), "every block holds at least 200 beta n vertices", None),
    ];
    Ok(ParameterSheet { entries })
}
