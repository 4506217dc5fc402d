//! Sectioned TOML configuration. A config file only needs the values it
//! changes; everything else falls back to the reference model.

use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use gaitsim::geometry::MuscleGeometry;
use gaitsim::muscle::{MetabolicParams, MuscleKind, MuscleParams, SolverSettings};
use gaitsim::optimizer::{FitnessConfig, OptimizerConfig};
use gaitsim::plant::{
    BodyParams, ContactParams, InitialPose, InteractionParams, JointLimitParams, PlantModel, Timing,
};
use gaitsim::reflex::{PhaseRules, ReflexParams};
use gaitsim::SimError;

use crate::error::Result;

pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MuscleTable {
    pub ta: MuscleParams,
    pub sol: MuscleParams,
    pub gas: MuscleParams,
    pub fem: MuscleParams,
    pub ham: MuscleParams,
    pub glu: MuscleParams,
    pub ili: MuscleParams,
}

impl Default for MuscleTable {
    fn default() -> Self {
        let r = MuscleParams::reference;
        Self {
            ta: r(MuscleKind::Ta),
            sol: r(MuscleKind::Sol),
            gas: r(MuscleKind::Gas),
            fem: r(MuscleKind::Fem),
            ham: r(MuscleKind::Ham),
            glu: r(MuscleKind::Glu),
            ili: r(MuscleKind::Ili),
        }
    }
}

impl MuscleTable {
    /// In `MuscleKind::ALL` order.
    pub fn to_array(&self) -> [MuscleParams; 7] {
        [
            self.ta.clone(),
            self.sol.clone(),
            self.gas.clone(),
            self.fem.clone(),
            self.ham.clone(),
            self.glu.clone(),
            self.ili.clone(),
        ]
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub schema_version: u32,
    pub body: BodyParams,
    pub contact: ContactParams,
    pub interaction: InteractionParams,
    pub limits: JointLimitParams,
    pub muscles: MuscleTable,
    pub solver: SolverSettings,
    pub metabolic: MetabolicParams,
    pub phase_rules: PhaseRules,
    pub timing: Timing,
    pub initial: InitialPose,
    pub fitness: FitnessConfig,
    pub optimizer: OptimizerConfig,
}

impl Config {
    pub fn reference() -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            ..Self::default()
        }
    }

    /// Parse overrides and apply them on top of the reference values.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let user: Table = text.parse().map_err(|e: toml::de::Error| SimError::Parse {
            what: "config".into(),
            reason: e.message().to_string(),
        })?;
        if let Some(v) = user.get("schema_version") {
            let found = v.as_integer();
            if found != Some(i64::from(CONFIG_SCHEMA_VERSION)) {
                return Err(SimError::Schema {
                    what: "config schema_version".into(),
                    found: v.to_string(),
                    expected: CONFIG_SCHEMA_VERSION.to_string(),
                }
                .into());
            }
        }
        let cfg: Config = overlay(&Self::reference(), &user, "config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.plant_model(0.0)?;
        self.initial.validate()?;
        self.fitness.validate()?;
        self.optimizer.validate()?;
        Ok(())
    }

    /// Assemble and range-check the plant for ground slope `slope`.
    pub fn plant_model(&self, slope: f64) -> Result<PlantModel> {
        let mut m = PlantModel::with_defaults(slope)?;
        m.body = self.body.clone();
        m.body.validate()?;
        m.geometry = MuscleGeometry::default_for(&m.body)?;
        m.contact = self.contact;
        m.interaction = self.interaction;
        m.limits = self.limits;
        m.muscles = self.muscles.to_array();
        m.solver = self.solver;
        m.metabolic = self.metabolic;
        m.phase_rules = self.phase_rules;
        m.timing = self.timing;
        m.validate()?;
        Ok(m)
    }
}

/// Reflex parameters from a flat TOML record. Missing keys keep the bundled
/// seed values.
pub fn params_from_toml_str(text: &str) -> Result<ReflexParams> {
    let mut user: Table = text.parse().map_err(|e: toml::de::Error| SimError::Parse {
        what: "params".into(),
        reason: e.message().to_string(),
    })?;
    user.remove("schema_version");
    let p: ReflexParams = overlay(&ReflexParams::default(), &user, "reflex")?;
    p.validate()?;
    Ok(p)
}

pub fn load_params(path: &Path) -> Result<ReflexParams> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::io(path, e))?;
    params_from_toml_str(&text)
}

pub fn params_to_toml_string(p: &ReflexParams) -> String {
    toml::to_string(p).expect("params serialize")
}

fn overlay<T: Serialize + for<'de> Deserialize<'de>>(base: &T, user: &Table, what: &str) -> Result<T> {
    let mut merged = Table::try_from(base).expect("defaults serialize to a table");
    merge(&mut merged, user, "")?;
    Value::Table(merged).try_into().map_err(|e: toml::de::Error| {
        SimError::Parse {
            what: what.into(),
            reason: e.message().to_string(),
        }
        .into()
    })
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

/// Closest sibling key, if any is plausibly a typo of `key`.
fn suggest<'a>(key: &str, candidates: impl Iterator<Item = &'a String>) -> Option<&'a String> {
    let limit = (key.len() / 3).max(2);
    candidates
        .map(|c| (strsim::levenshtein(key, c), c))
        .filter(|(d, _)| *d <= limit)
        .min()
        .map(|(_, c)| c)
}

fn merge(base: &mut Table, user: &Table, path: &str) -> Result<()> {
    for (k, v) in user {
        let key = join(path, k);
        let Some(slot) = base.get_mut(k) else {
            return Err(SimError::UnknownKey {
                suggestion: suggest(k, base.keys()).map(|s| join(path, s)),
                key,
            }
            .into());
        };
        match (slot, v) {
            (Value::Table(b), Value::Table(u)) => merge(b, u, &key)?,
            (slot, v) => *slot = coerce(slot, v, &key)?,
        }
    }
    Ok(())
}

fn coerce(default: &Value, v: &Value, key: &str) -> Result<Value> {
    match (default, v) {
        (Value::Float(_), Value::Integer(i)) => Ok(Value::Float(*i as f64)),
        (Value::Array(d), Value::Array(u)) => {
            if d.len() != u.len() {
                return Err(SimError::config(key, format!("expected {} elements, found {}", d.len(), u.len())).into());
            }
            d.iter()
                .zip(u)
                .map(|(d, u)| coerce(d, u, key))
                .collect::<Result<Vec<_>>>()
                .map(Value::Array)
        }
        (d, u) if d.type_str() == u.type_str() => Ok(u.clone()),
        (d, u) => Err(SimError::config(key, format!("expected {}, found {}", d.type_str(), u.type_str())).into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::HarnessError;

    fn key_of(e: HarnessError) -> (String, Option<String>) {
        match e {
            HarnessError::Sim(SimError::ConfigValue { key, .. }) => (key, None),
            HarnessError::Sim(SimError::UnknownKey { key, suggestion }) => (key, suggestion),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn empty_file_gives_reference_values() {
        let cfg = Config::from_toml_str("").unwrap();
        assert_eq!(cfg, Config::reference());
        assert_eq!(cfg.contact.k, 160000.0);
        assert_eq!(cfg.muscles.ta.f_opt, 1759.0);
        assert_eq!(cfg.interaction.k_int_nm_per_deg, 100.0);
    }

    #[test]
    fn negative_stiffness_names_the_key() {
        let e = Config::from_toml_str("[contact]\nk = -1\n").unwrap_err();
        assert_eq!(key_of(e).0, "contact.k");
    }

    #[test]
    fn unknown_key_gets_a_suggestion() {
        let e = Config::from_toml_str("[contact]\nkk = 1.0\n").unwrap_err();
        let (key, suggestion) = key_of(e);
        assert_eq!(key, "contact.kk");
        assert_eq!(suggestion.as_deref(), Some("contact.k"));
        let e = Config::from_toml_str("[contakt]\nk = 1.0\n").unwrap_err();
        assert_eq!(key_of(e).1.as_deref(), Some("contact"));
    }

    #[test]
    fn integers_are_accepted_for_floats() {
        let cfg = Config::from_toml_str("[contact]\nk = 200000\n[muscles.sol]\nf_opt = 4000\n").unwrap();
        assert_eq!(cfg.contact.k, 200000.0);
        assert_eq!(cfg.muscles.sol.f_opt, 4000.0);
        assert_eq!(cfg.muscles.gas, Config::reference().muscles.gas);
    }

    #[test]
    fn wrong_type_is_rejected() {
        let e = Config::from_toml_str("[contact]\nk = \"stiff\"\n").unwrap_err();
        assert_eq!(key_of(e).0, "contact.k");
        let e = Config::from_toml_str("[body]\nheel_m = [0.1]\n").unwrap_err();
        assert_eq!(key_of(e).0, "body.heel_m");
    }

    #[test]
    fn wrong_schema_version_is_rejected() {
        let e = Config::from_toml_str("schema_version = 99\n").unwrap_err();
        assert!(matches!(e, HarnessError::Sim(SimError::Schema { .. })), "{e}");
        assert!(Config::from_toml_str("schema_version = 1\n").is_ok());
    }

    #[test]
    fn defaults_round_trip_through_text() {
        let text = Config::reference().to_toml_string();
        assert_eq!(Config::from_toml_str(&text).unwrap(), Config::reference());
    }

    #[test]
    fn params_overlay_and_range_check() {
        let p = params_from_toml_str("k_f_sol = 2.5\n").unwrap();
        assert_eq!(p.k_f_sol, 2.5);
        assert_eq!(p.k_l_ta, ReflexParams::default().k_l_ta);
        let e = params_from_toml_str("k_f_sol = -2.5\n").unwrap_err();
        assert_eq!(key_of(e).0, "reflex.k_f_sol");
        let e = params_from_toml_str("k_f_sool = 1\n").unwrap_err();
        assert_eq!(key_of(e).1.as_deref(), Some("k_f_sol"));
        let text = params_to_toml_string(&p);
        assert_eq!(params_from_toml_str(&text).unwrap(), p);
    }
}
