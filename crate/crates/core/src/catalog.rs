//! Module definitions, on-site availability and composition metrics.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::ParseError;
use crate::geometry::{Placement, Pose};

pub const DEFAULT_CATALOG_TOML: &str = include_str!("../data/catalog.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModuleKind {
    Base,
    StraightJoint,
    ElbowJoint,
    Link,
    EndEffector,
}

impl ModuleKind {
    pub fn is_joint(self) -> bool {
        matches!(self, ModuleKind::StraightJoint | ModuleKind::ElbowJoint)
    }

    /// Kinds allowed strictly between the base and the end effector.
    pub fn is_interior(self) -> bool {
        matches!(
            self,
            ModuleKind::StraightJoint | ModuleKind::ElbowJoint | ModuleKind::Link
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    pub axis: [f64; 3],
    #[serde(rename = "limits_rad")]
    pub limits: [f64; 2],
    #[serde(rename = "torque_limit_nm")]
    pub torque_limit: f64,
}

/// Collision capsule in the module's proximal frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapsuleSpec {
    #[serde(rename = "a_m")]
    pub a: [f64; 3],
    #[serde(rename = "b_m")]
    pub b: [f64; 3],
    #[serde(rename = "radius_m")]
    pub radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModuleSpec {
    pub id: String,
    pub kind: ModuleKind,
    /// Proximal-to-distal connector transform.
    pub transform: Placement,
    #[serde(rename = "mass_kg")]
    pub mass: f64,
    #[serde(rename = "com_m")]
    pub com: [f64; 3],
    #[serde(rename = "assembly_time_s", default = "default_assembly_time")]
    pub assembly_time: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub joint: Option<JointSpec>,
    #[serde(default)]
    pub capsules: Vec<CapsuleSpec>,
}

fn default_assembly_time() -> f64 {
    60.0
}

impl ModuleSpec {
    pub fn proximal_to_distal(&self) -> Pose {
        self.transform.pose()
    }

    pub fn validate(&self) -> Result<(), (String, String)> {
        let err = |field: &str, msg: String| Err((field.to_string(), msg));
        if self.id.is_empty() {
            return err("id", "must not be empty".into());
        }
        if !(self.mass >= 0.0) {
            return err("mass_kg", format!("must be >= 0, got {}", self.mass));
        }
        if let Some(c) = self.capsules.iter().find(|c| !(c.radius > 0.0)) {
            return err("capsules", format!("radius must be > 0, got {}", c.radius));
        }
        match (self.kind.is_joint(), &self.joint) {
            (true, None) => return err("joint", "required for joint modules".into()),
            (false, Some(_)) => return err("joint", "only allowed on joint modules".into()),
            (true, Some(j)) => {
                let n = Vector3::from(j.axis).norm();
                if (n - 1.0).abs() > 1e-9 {
                    return err("joint.axis", format!("must be a unit vector (norm {n})"));
                }
                if !(j.limits[0] < j.limits[1]) {
                    return err("joint.limits_rad", "min must be < max".into());
                }
                if !(j.torque_limit >= 0.0) {
                    return err("joint.torque_limit_nm", "must be >= 0".into());
                }
            }
            (false, None) => {}
        }
        Ok(())
    }
}

/// Distance between the proximal and distal connection interfaces.
pub fn module_size(spec: &ModuleSpec) -> f64 {
    Vector3::from(spec.transform.translation).norm()
}

/// Ordered module ids; the genome of a candidate robot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct ModuleSequence(pub Vec<String>);

impl ModuleSequence {
    pub fn new<S: Into<String>>(ids: impl IntoIterator<Item = S>) -> Self {
        ModuleSequence(ids.into_iter().map(Into::into).collect())
    }

    pub fn empty() -> Self {
        ModuleSequence(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.0
    }

    pub fn count(&self, id: &str) -> usize {
        self.0.iter().filter(|m| *m == id).count()
    }

    /// Parses `a;b;c` (commas are accepted too).
    pub fn parse(s: &str) -> Self {
        ModuleSequence::new(
            s.split([';', ','])
                .map(str::trim)
                .filter(|t| !t.is_empty()),
        )
    }
}

impl fmt::Display for ModuleSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join(";"))
    }
}

/// Largest `n` such that both sequences agree on their first `n` modules.
pub fn common_prefix_length(a: &ModuleSequence, b: &ModuleSequence) -> usize {
    a.0.iter().zip(b.0.iter()).take_while(|(x, y)| x == y).count()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AssemblyViolation {
    Empty,
    MissingBase,
    MissingEndEffector,
    MisplacedBase(usize),
    MisplacedEndEffector(usize),
    UnknownModule(String),
    AvailabilityExceeded {
        id: String,
        used: usize,
        available: u32,
    },
}

impl fmt::Display for AssemblyViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssemblyViolation::Empty => write!(f, "empty sequence"),
            AssemblyViolation::MissingBase => write!(f, "missing base"),
            AssemblyViolation::MissingEndEffector => write!(f, "missing end effector"),
            AssemblyViolation::MisplacedBase(i) => write!(f, "base module at interior position {i}"),
            AssemblyViolation::MisplacedEndEffector(i) => {
                write!(f, "end effector at interior position {i}")
            }
            AssemblyViolation::UnknownModule(id) => write!(f, "unknown module `{id}`"),
            AssemblyViolation::AvailabilityExceeded {
                id,
                used,
                available,
            } => write!(f, "availability exceeded: `{id}` used {used}x, {available} available"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    modules: BTreeMap<String, ModuleSpec>,
    availability: BTreeMap<String, u32>,
}

#[derive(Serialize, Deserialize)]
struct CatalogFile {
    module: Vec<CatalogEntry>,
}

#[derive(Serialize, Deserialize)]
struct CatalogEntry {
    #[serde(flatten)]
    spec: ModuleSpec,
    availability: u32,
}

impl Catalog {
    pub fn new(
        modules: impl IntoIterator<Item = ModuleSpec>,
        availability: BTreeMap<String, u32>,
    ) -> Result<Self, String> {
        let mut map = BTreeMap::new();
        for m in modules {
            m.validate().map_err(|(f, e)| format!("module `{}`: {f}: {e}", m.id))?;
            if map.insert(m.id.clone(), m.clone()).is_some() {
                return Err(format!("duplicate module id `{}`", m.id));
            }
        }
        if let Some(k) = availability.keys().find(|k| !map.contains_key(*k)) {
            return Err(format!("availability for unknown module `{k}`"));
        }
        Ok(Self {
            modules: map,
            availability,
        })
    }

    /// Parses the TOML catalog format; `origin` names the source in error messages.
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ParseError> {
        let file: CatalogFile = toml::from_str(text).map_err(|e| ParseError::syntax(origin, e))?;
        let mut modules = Vec::new();
        let mut availability = BTreeMap::new();
        for (i, entry) in file.module.into_iter().enumerate() {
            entry.spec.validate().map_err(|(field, msg)| {
                ParseError::field(origin, format!("module[{i}] ({}).{field}", entry.spec.id), msg)
            })?;
            if availability.insert(entry.spec.id.clone(), entry.availability).is_some() {
                return Err(ParseError::field(
                    origin,
                    format!("module[{i}].id"),
                    format!("duplicate id `{}`", entry.spec.id),
                ));
            }
            modules.push(entry.spec);
        }
        Catalog::new(modules, availability).map_err(|e| ParseError::field(origin, "module", e))
    }

    pub fn load(path: &Path) -> Result<Self, ParseError> {
        let text = std::fs::read_to_string(path).map_err(|source| ParseError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    pub fn to_toml_string(&self) -> String {
        let file = CatalogFile {
            module: self
                .modules
                .values()
                .map(|m| CatalogEntry {
                    spec: m.clone(),
                    availability: self.availability(&m.id),
                })
                .collect(),
        };
        toml::to_string(&file).expect("catalog serializes")
    }

    pub fn get(&self, id: &str) -> Option<&ModuleSpec> {
        self.modules.get(id)
    }

    pub fn modules(&self) -> impl Iterator<Item = &ModuleSpec> {
        self.modules.values()
    }

    /// Number of modules with this id available on site (0 if unknown).
    pub fn availability(&self, id: &str) -> u32 {
        self.availability.get(id).copied().unwrap_or(0)
    }

    pub fn set_availability(&mut self, id: &str, count: u32) {
        if self.modules.contains_key(id) {
            self.availability.insert(id.to_string(), count);
        }
    }

    pub fn ids_of_kind(&self, pred: impl Fn(ModuleKind) -> bool) -> Vec<String> {
        self.modules
            .values()
            .filter(|m| pred(m.kind))
            .map(|m| m.id.clone())
            .collect()
    }

    /// Sum of module sizes; modules unknown to the catalog contribute nothing.
    pub fn total_size(&self, seq: &ModuleSequence) -> f64 {
        seq.ids()
            .iter()
            .filter_map(|id| self.get(id))
            .map(module_size)
            .sum()
    }
}

/// The bundled default catalog.
pub fn default_catalog() -> Catalog {
    Catalog::from_toml_str(DEFAULT_CATALOG_TOML, "<bundled catalog.toml>").expect("bundled catalog is valid")
}

/// Placement rules only (base first, end effector last, known ids); ignores availability.
pub fn structure_valid(seq: &ModuleSequence, cat: &Catalog) -> Result<(), AssemblyViolation> {
    let ids = seq.ids();
    if ids.is_empty() {
        return Err(AssemblyViolation::Empty);
    }
    let kinds = ids
        .iter()
        .map(|id| {
            cat.get(id)
                .map(|m| m.kind)
                .ok_or_else(|| AssemblyViolation::UnknownModule(id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if kinds[0] != ModuleKind::Base {
        return Err(AssemblyViolation::MissingBase);
    }
    if kinds.len() < 2 || kinds[kinds.len() - 1] != ModuleKind::EndEffector {
        return Err(AssemblyViolation::MissingEndEffector);
    }
    for (i, k) in kinds.iter().enumerate().take(kinds.len() - 1).skip(1) {
        match k {
            ModuleKind::Base => return Err(AssemblyViolation::MisplacedBase(i)),
            ModuleKind::EndEffector => return Err(AssemblyViolation::MisplacedEndEffector(i)),
            _ => {}
        }
    }
    Ok(())
}

/// Whether the sequence can be physically assembled from the catalog.
pub fn assembly_valid(seq: &ModuleSequence, cat: &Catalog) -> Result<(), AssemblyViolation> {
    structure_valid(seq, cat)?;
    let mut used: BTreeMap<&str, usize> = BTreeMap::new();
    for id in seq.ids() {
        *used.entry(id).or_default() += 1;
    }
    for (id, n) in used {
        let available = cat.availability(id);
        if n > available as usize {
            return Err(AssemblyViolation::AvailabilityExceeded {
                id: id.to_string(),
                used: n,
                available,
            });
        }
    }
    Ok(())
}
