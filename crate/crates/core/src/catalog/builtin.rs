use serde::{Deserialize, Serialize};

use super::{CableSpec, Catalog, CatalogError, ComponentSpec};

const BUILTIN_JSON: &str = include_str!("../../data/builtin_catalog.json");

pub const CATALOG_FORMAT_VERSION: u32 = 1;

/// On-disk catalog file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogDocument {
    pub format_version: u32,
    #[serde(default)]
    pub components: Vec<ComponentSpec>,
    #[serde(default)]
    pub cables: Vec<CableSpec>,
}

impl CatalogDocument {
    pub fn into_catalog(self) -> Result<Catalog, CatalogError> {
        Catalog::from_parts(self.components, self.cables)
    }

    pub fn from_catalog(catalog: &Catalog) -> Self {
        Self {
            format_version: CATALOG_FORMAT_VERSION,
            components: catalog.components.values().cloned().collect(),
            cables: catalog.cables.values().cloned().collect(),
        }
    }
}

/// MV5xx cascadable/terminal multiswitches, the MR512 radial multiswitch,
/// SD5xx taps and splitter, a line amplifier, a settable attenuator, an IF-IF
/// headend, and trunk/drop coax.
pub fn builtin_catalog() -> Catalog {
    let doc: CatalogDocument = serde_json::from_str(BUILTIN_JSON).expect("built-in catalog parses");
    doc.into_catalog().expect("built-in catalog is valid")
}
