//! TOML schemas for species, materials and scenarios.
//!
//! All three file kinds carry `schema = 1` and reject unknown keys. Errors
//! name the file and, where the problem can be located, the line and
//! column.
//!
//! ```toml
//! schema = 1
//! species = "LiH"             # looked up in species_file or the bundled set
//! surface = "Au"              # looked up in material_file or the bundled set
//! z_m = 5e-6
//! temperature_K = 300.0
//! # species_file = "my_species.toml"
//! # material_file = "my_materials.toml"
//! # [tolerances]
//! # rel_tol = 1e-9
//! ```

use std::fs;
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::Spanned;

use crate::material::SurfaceModel;
use crate::numerics::Tolerances;
use crate::potential::Scenario;
use crate::spectrum::{Level, Preparation, SpeciesState, TransitionSpec};
use crate::units::{debye2_to_si, HBAR};
use crate::{Error, Result};

pub const SCHEMA_VERSION: u32 = 1;

const BUNDLED_SPECIES: &str = include_str!("../data/species.toml");
const BUNDLED_MATERIALS: &str = include_str!("../data/materials.toml");

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpeciesFile {
    schema: Spanned<u32>,
    #[serde(default)]
    species: Vec<Spanned<SpeciesRecord>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SpeciesRecord {
    name: String,
    levels: Vec<LevelRecord>,
    #[serde(default)]
    transitions: Vec<TransitionRecord>,
    preparation: PreparationKind,
    prepared_level: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LevelRecord {
    #[serde(rename = "energy_J")]
    energy_j: Option<f64>,
    omega_rad_s: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TransitionRecord {
    from: usize,
    to: usize,
    d2_debye2: f64,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum PreparationKind {
    Eigenstate,
    ThermalEnsemble,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialFile {
    schema: Spanned<u32>,
    #[serde(default)]
    material: Vec<Spanned<MaterialRecord>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MaterialRecord {
    name: String,
    model: ModelKind,
    omega_p: Option<f64>,
    gamma: Option<f64>,
}

#[derive(Deserialize, Clone, Copy)]
#[serde(rename_all = "snake_case")]
enum ModelKind {
    PerfectReflector,
    Drude,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    schema: Spanned<u32>,
    species: Spanned<String>,
    species_file: Option<String>,
    surface: Spanned<String>,
    material_file: Option<String>,
    z_m: Spanned<f64>,
    #[serde(rename = "temperature_K")]
    temperature_k: Spanned<f64>,
    #[serde(default)]
    tolerances: Tolerances,
}

/// Source text plus a label for error messages.
struct Source<'a> {
    text: &'a str,
    origin: &'a str,
}

impl Source<'_> {
    fn error(&self, span: Option<Range<usize>>, message: impl Into<String>) -> Error {
        let message = message.into();
        let message = match span {
            Some(span) => {
                let (line, col) = line_col(self.text, span.start);
                format!("line {line}, column {col}: {message}")
            }
            None => message,
        };
        Error::Config {
            path: self.origin.to_string(),
            message,
        }
    }

    fn parse<T: for<'de> Deserialize<'de>>(&self) -> Result<T> {
        toml::from_str(self.text).map_err(|e| self.error(e.span(), e.message().trim()))
    }

    fn check_schema(&self, schema: &Spanned<u32>) -> Result<()> {
        if *schema.get_ref() == SCHEMA_VERSION {
            Ok(())
        } else {
            Err(self.error(
                Some(schema.span()),
                format!(
                    "unsupported schema {}; this build reads schema {SCHEMA_VERSION}",
                    schema.get_ref()
                ),
            ))
        }
    }
}

/// 1-based line and column of a byte offset.
fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before
        .rfind('\n')
        .map_or(before.len(), |i| before.len() - i - 1)
        + 1;
    (line, col)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpeciesCatalog {
    species: Vec<SpeciesState>,
}

impl SpeciesCatalog {
    pub fn bundled() -> Self {
        parse_species(BUNDLED_SPECIES, "<bundled species>").expect("bundled species data is valid")
    }

    pub fn get(&self, name: &str) -> Option<&SpeciesState> {
        self.species.iter().find(|s| s.name == name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.species.iter().map(|s| s.name.as_str()).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &SpeciesState> {
        self.species.iter()
    }

    pub fn len(&self) -> usize {
        self.species.len()
    }

    pub fn is_empty(&self) -> bool {
        self.species.is_empty()
    }
}

pub fn parse_species(text: &str, origin: &str) -> Result<SpeciesCatalog> {
    let src = Source { text, origin };
    let file: SpeciesFile = src.parse()?;
    src.check_schema(&file.schema)?;
    let mut species: Vec<SpeciesState> = Vec::new();
    for entry in file.species {
        let span = entry.span();
        let record = entry.into_inner();
        let at = |msg: String| src.error(Some(span.clone()), msg);
        if species.iter().any(|s| s.name == record.name) {
            return Err(at(format!("duplicate species '{}'", record.name)));
        }
        let levels = record
            .levels
            .iter()
            .enumerate()
            .map(|(i, l)| match (l.energy_j, l.omega_rad_s) {
                (Some(e), None) => Ok(Level { energy: e }),
                (None, Some(w)) => Ok(Level { energy: HBAR * w }),
                _ => Err(at(format!(
                    "species '{}', level {i}: give exactly one of energy_J or omega_rad_s",
                    record.name
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        let transitions = record
            .transitions
            .iter()
            .map(|t| TransitionSpec {
                from: t.from,
                to: t.to,
                d2: debye2_to_si(t.d2_debye2),
            })
            .collect();
        let preparation = match (record.preparation, record.prepared_level) {
            (PreparationKind::Eigenstate, level) => Preparation::Eigenstate(level.unwrap_or(0)),
            (PreparationKind::ThermalEnsemble, None) => Preparation::ThermalEnsemble,
            (PreparationKind::ThermalEnsemble, Some(_)) => {
                return Err(at(format!(
                    "species '{}': prepared_level only applies to an eigenstate",
                    record.name
                )))
            }
        };
        let state = SpeciesState::new(record.name, levels, transitions, preparation)
            .map_err(|e| at(e.to_string()))?;
        species.push(state);
    }
    Ok(SpeciesCatalog { species })
}

pub fn load_species(path: &Path) -> Result<SpeciesCatalog> {
    parse_species(&read(path)?, &path.display().to_string())
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaterialCatalog {
    materials: Vec<(String, SurfaceModel)>,
}

impl MaterialCatalog {
    pub fn bundled() -> Self {
        parse_materials(BUNDLED_MATERIALS, "<bundled materials>")
            .expect("bundled material data is valid")
    }

    pub fn get(&self, name: &str) -> Option<SurfaceModel> {
        self.materials
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, m)| *m)
    }

    pub fn names(&self) -> Vec<&str> {
        self.materials.iter().map(|(n, _)| n.as_str()).collect()
    }
}

pub fn parse_materials(text: &str, origin: &str) -> Result<MaterialCatalog> {
    let src = Source { text, origin };
    let file: MaterialFile = src.parse()?;
    src.check_schema(&file.schema)?;
    let mut materials: Vec<(String, SurfaceModel)> = Vec::new();
    for entry in file.material {
        let span = entry.span();
        let r = entry.into_inner();
        let at = |msg: String| src.error(Some(span.clone()), msg);
        if materials.iter().any(|(n, _)| *n == r.name) {
            return Err(at(format!("duplicate material '{}'", r.name)));
        }
        let model = match (r.model, r.omega_p, r.gamma) {
            (ModelKind::PerfectReflector, None, None) => SurfaceModel::PerfectReflector,
            (ModelKind::PerfectReflector, _, _) => {
                return Err(at(format!(
                    "material '{}': a perfect reflector takes no parameters",
                    r.name
                )))
            }
            (ModelKind::Drude, Some(omega_p), Some(gamma)) => {
                SurfaceModel::drude(omega_p, gamma).map_err(|e| at(e.to_string()))?
            }
            (ModelKind::Drude, _, _) => {
                return Err(at(format!(
                    "material '{}': a Drude model needs omega_p and gamma",
                    r.name
                )))
            }
        };
        materials.push((r.name, model));
    }
    Ok(MaterialCatalog { materials })
}

pub fn load_materials(path: &Path) -> Result<MaterialCatalog> {
    parse_materials(&read(path)?, &path.display().to_string())
}

/// Parses a scenario. Relative `species_file` / `material_file` paths
/// are resolved against `base_dir`.
pub fn parse_scenario(text: &str, origin: &str, base_dir: Option<&Path>) -> Result<Scenario> {
    let src = Source { text, origin };
    let file: ScenarioFile = src.parse()?;
    src.check_schema(&file.schema)?;
    let resolve = |p: &str| -> PathBuf {
        let p = Path::new(p);
        match base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        }
    };

    let catalog = match &file.species_file {
        Some(p) => load_species(&resolve(p))?,
        None => SpeciesCatalog::bundled(),
    };
    let species = catalog
        .get(file.species.get_ref())
        .cloned()
        .ok_or_else(|| {
            src.error(
                Some(file.species.span()),
                format!(
                    "unknown species '{}'; available: {}",
                    file.species.get_ref(),
                    catalog.names().join(", ")
                ),
            )
        })?;

    let materials = match &file.material_file {
        Some(p) => load_materials(&resolve(p))?,
        None => MaterialCatalog::bundled(),
    };
    let surface = materials.get(file.surface.get_ref()).ok_or_else(|| {
        src.error(
            Some(file.surface.span()),
            format!(
                "unknown surface '{}'; available: {}",
                file.surface.get_ref(),
                materials.names().join(", ")
            ),
        )
    })?;

    let z = *file.z_m.get_ref();
    if !(z.is_finite() && z > 0.0) {
        return Err(src.error(
            Some(file.z_m.span()),
            format!("z_m must be positive, got {z}"),
        ));
    }
    let t = *file.temperature_k.get_ref();
    if !(t.is_finite() && t >= 0.0) {
        return Err(src.error(
            Some(file.temperature_k.span()),
            format!("temperature_K must be non-negative, got {t}"),
        ));
    }
    file.tolerances
        .validate()
        .map_err(|e| src.error(None, format!("tolerances: {e}")))?;
    Scenario::new(species, surface, z, t, file.tolerances)
        .map_err(|e| src.error(None, e.to_string()))
}

pub fn load_scenario(path: &Path) -> Result<Scenario> {
    parse_scenario(&read(path)?, &path.display().to_string(), path.parent())
}
