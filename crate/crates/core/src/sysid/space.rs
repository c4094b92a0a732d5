//! Identifiable parameter space and the mapping from φ to a chain model.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::sim::ChainModel;

use super::SysidError;

/// One identifiable quantity. A parameter with `lower == upper` is fixed.
///
/// With `offset_of` set, the entry's physical value is the named parameter
/// plus an offset in `[lower, upper]`, and only the offset is searched.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpec {
    pub name: String,
    pub unit: String,
    pub lower: f64,
    pub upper: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset_of: Option<String>,
}

impl ParamSpec {
    fn new(name: &str, unit: &str, lower: f64, upper: f64) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
            lower,
            upper,
            offset_of: None,
        }
    }

    pub fn is_free(&self) -> bool {
        self.upper > self.lower
    }
}

/// Names understood by [`SimParams::apply`].
pub const KNOWN_PARAMS: [&str; 11] = [
    "kt",
    "r_ter",
    "armature",
    "eta_fw",
    "eta_bw",
    "f_c",
    "k_v",
    "f_s",
    "base_mass",
    "base_com_x",
    "base_com_z",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSpace {
    pub params: Vec<ParamSpec>,
}

impl Default for ParamSpace {
    fn default() -> Self {
        let mut f_s = ParamSpec::new("f_s", "N·m", 0.0, 0.25);
        f_s.offset_of = Some("f_c".into());
        Self {
            params: vec![
                ParamSpec::new("kt", "N·m/A", 0.003, 0.009),
                ParamSpec::new("r_ter", "Ω", 4.0, 9.0),
                ParamSpec::new("armature", "kg·m²", 0.0025, 0.011),
                ParamSpec::new("eta_fw", "-", 1.0, 1.0),
                ParamSpec::new("eta_bw", "-", 0.6, 1.0),
                ParamSpec::new("f_c", "N·m", 0.01, 0.25),
                ParamSpec::new("k_v", "N·m·s/rad", 0.0025, 0.15),
                f_s,
                ParamSpec::new("base_mass", "kg", 0.0, 0.5),
                ParamSpec::new("base_com_x", "m", -0.02, 0.02),
                ParamSpec::new("base_com_z", "m", -0.02, 0.02),
            ],
        }
    }
}

impl ParamSpace {
    pub fn validate(&self) -> Result<(), SysidError> {
        let bad = |m: String| Err(SysidError::InvalidSpace(m));
        if self.params.is_empty() {
            return bad("no parameters".into());
        }
        for (i, p) in self.params.iter().enumerate() {
            if !KNOWN_PARAMS.contains(&p.name.as_str()) {
                return bad(format!("unknown parameter `{}`", p.name));
            }
            if self.params[..i].iter().any(|q| q.name == p.name) {
                return bad(format!("duplicate parameter `{}`", p.name));
            }
            if !(p.lower.is_finite() && p.upper.is_finite()) || p.lower > p.upper {
                return bad(format!("`{}` has bounds [{}, {}]", p.name, p.lower, p.upper));
            }
            if let Some(base) = &p.offset_of {
                match self.index_of(base) {
                    Some(j) if j < i && self.params[j].offset_of.is_none() => {}
                    _ => return bad(format!("`{}` is coupled to `{base}`, which must precede it", p.name)),
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Number of searched dimensions.
    pub fn dim(&self) -> usize {
        self.params.iter().filter(|p| p.is_free()).count()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.params.iter().position(|p| p.name == name)
    }

    pub fn names(&self) -> Vec<String> {
        self.params.iter().map(|p| p.name.clone()).collect()
    }

    /// Maps a point of `[0,1]^dim` to physical values. Inputs are clamped.
    pub fn denormalize(&self, u: &[f64]) -> SimParams {
        assert_eq!(u.len(), self.dim(), "normalized vector has wrong length");
        let mut values = Vec::with_capacity(self.len());
        let mut k = 0;
        for p in &self.params {
            let raw = if p.is_free() {
                let x = u[k].clamp(0.0, 1.0);
                k += 1;
                p.lower + x * (p.upper - p.lower)
            } else {
                p.lower
            };
            let v = match &p.offset_of {
                Some(base) => values[self.index_of(base).unwrap()] + raw,
                None => raw,
            };
            values.push(v);
        }
        SimParams { values }
    }

    /// Inverse of [`denormalize`](Self::denormalize) for in-bounds φ.
    pub fn normalize(&self, phi: &SimParams) -> Vec<f64> {
        assert_eq!(phi.values.len(), self.len(), "parameter vector has wrong length");
        self.params
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_free())
            .map(|(i, p)| {
                let raw = match &p.offset_of {
                    Some(base) => phi.values[i] - phi.values[self.index_of(base).unwrap()],
                    None => phi.values[i],
                };
                (raw - p.lower) / (p.upper - p.lower)
            })
            .collect()
    }

    pub fn contains(&self, phi: &SimParams) -> bool {
        phi.values.len() == self.len()
            && self
                .normalize(phi)
                .iter()
                .all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x))
    }

    /// Value of `name` in φ, if the space has it.
    pub fn get(&self, phi: &SimParams, name: &str) -> Option<f64> {
        self.index_of(name).map(|i| phi.values[i])
    }

    /// Copy with the searched range of some entries replaced. For a coupled
    /// entry the range applies to its offset.
    pub fn with_bounds(&self, bounds: &BTreeMap<String, [f64; 2]>) -> Result<Self, SysidError> {
        let mut out = self.clone();
        for (name, &[lo, hi]) in bounds {
            let i = out
                .index_of(name)
                .ok_or_else(|| SysidError::InvalidSpace(format!("unknown parameter `{name}`")))?;
            out.params[i].lower = lo;
            out.params[i].upper = hi;
        }
        out.validate()?;
        Ok(out)
    }

    /// The same space with a lossless gear pinned in both directions, i.e.
    /// a model without directional transmission efficiency.
    pub fn without_dte(&self) -> Self {
        let mut out = self.clone();
        for p in &mut out.params {
            if p.name == "eta_fw" || p.name == "eta_bw" {
                p.lower = 1.0;
                p.upper = 1.0;
            }
        }
        out
    }
}

/// A point φ of the parameter space, one physical value per entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub values: Vec<f64>,
}

impl SimParams {
    /// Copies φ into a chain: actuator terms go to every joint, base terms
    /// to the body carried by the last link. Names absent from the space
    /// keep the template's values.
    pub fn apply(&self, space: &ParamSpace, template: &ChainModel) -> Result<ChainModel, SysidError> {
        if self.values.len() != space.len() {
            return Err(SysidError::InvalidSpace(format!(
                "φ has {} values for {} parameters",
                self.values.len(),
                space.len()
            )));
        }
        let mut chain = template.clone();
        for (p, &v) in space.params.iter().zip(&self.values) {
            match p.name.as_str() {
                "base_mass" => chain.base.mass_offset = v,
                "base_com_x" => chain.base.com_offset_x = v,
                "base_com_z" => chain.base.com_offset_z = v,
                name => {
                    for j in &mut chain.joints {
                        let a = &mut j.actuator;
                        match name {
                            "kt" => a.motor.kt = v,
                            "r_ter" => a.motor.r_ter = v,
                            "armature" => a.motor.armature = v,
                            "eta_fw" => a.gear.eta_fw = v,
                            "eta_bw" => a.gear.eta_bw = v,
                            "f_c" => a.friction.f_c = v,
                            "k_v" => a.friction.k_v = v,
                            "f_s" => a.friction.f_s = v,
                            other => {
                                return Err(SysidError::InvalidSpace(format!("unknown parameter `{other}`")))
                            }
                        }
                    }
                }
            }
        }
        chain.validate()?;
        Ok(chain)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn default_space_layout() {
        let s = ParamSpace::default();
        s.validate().unwrap();
        assert_eq!(s.len(), 11);
        assert_eq!(s.dim(), 10);
        let lo = s.denormalize(&[0.0; 10]);
        let hi = s.denormalize(&[1.0; 10]);
        assert_eq!(s.get(&lo, "eta_fw"), Some(1.0));
        assert_eq!(s.get(&hi, "eta_fw"), Some(1.0));
        assert_eq!(s.get(&hi, "f_s"), Some(0.5));
        assert_eq!(s.get(&lo, "f_s"), Some(0.01));
        assert_eq!(s.get(&hi, "r_ter"), Some(9.0));
    }

    #[test]
    fn bound_overrides_and_dte_free_space() {
        let s = ParamSpace::default();
        let b: BTreeMap<String, [f64; 2]> = [("eta_bw".to_string(), [0.6, 0.65]), ("f_s".to_string(), [0.2, 0.25])].into();
        let n = s.with_bounds(&b).unwrap();
        let top = n.denormalize(&[1.0; 10]);
        assert_eq!(n.get(&top, "eta_bw"), Some(0.65));
        assert_eq!(n.get(&top, "f_s"), Some(0.5));
        assert!(s.contains(&top));
        assert!(s.with_bounds(&[("nope".to_string(), [0.0, 1.0])].into()).is_err());
        assert!(s.with_bounds(&[("kt".to_string(), [1.0, 0.0])].into()).is_err());

        let d = s.without_dte();
        assert_eq!(d.dim(), 9);
        let phi = d.denormalize(&[0.3; 9]);
        assert_eq!(d.get(&phi, "eta_bw"), Some(1.0));
    }

    #[test]
    fn rejects_bad_spaces() {
        let mut s = ParamSpace::default();
        s.params[0].lower = 1.0;
        assert!(s.validate().is_err());
        let mut s = ParamSpace::default();
        s.params[7].offset_of = Some("nope".into());
        assert!(s.validate().is_err());
        let mut s = ParamSpace::default();
        s.params[1].name = "kt".into();
        assert!(s.validate().is_err());
        let mut s = ParamSpace::default();
        s.params.swap(5, 7);
        assert!(s.validate().is_err());
    }

    #[test]
    fn applies_to_every_joint() {
        let s = ParamSpace::default();
        let phi = s.denormalize(&[0.5; 10]);
        let chain = phi.apply(&s, &ChainModel::leg_on_board()).unwrap();
        for j in &chain.joints {
            assert!((j.actuator.gear.eta_bw - 0.8).abs() < 1e-15);
            assert!(j.actuator.friction.f_s >= j.actuator.friction.f_c);
        }
        assert!((chain.base.mass_offset - 0.25).abs() < 1e-15);
        assert_eq!(chain.base.com_offset_x, 0.0);
    }

    #[test]
    fn space_json_round_trip() {
        let s = ParamSpace::default();
        let back: ParamSpace = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
        assert_eq!(back, s);
    }

    proptest! {
        #[test]
        fn normalization_round_trip(u in proptest::collection::vec(0.0f64..=1.0, 10)) {
            let s = ParamSpace::default();
            let phi = s.denormalize(&u);
            prop_assert!(s.contains(&phi));
            let f_c = s.get(&phi, "f_c").unwrap();
            prop_assert!(s.get(&phi, "f_s").unwrap() >= f_c);
            let back = s.normalize(&phi);
            for (a, b) in u.iter().zip(&back) {
                prop_assert!((a - b).abs() < 1e-12, "{} vs {}", a, b);
            }
            let again = s.denormalize(&back);
            for (a, b) in phi.values.iter().zip(&again.values) {
                prop_assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
            }
        }
    }
}
