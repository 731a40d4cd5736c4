use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::{DateTime, Utc};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitVector;
use crate::error::{Error, Result};

pub const DEFAULT_ID_WIDTH: usize = 48;

/// One app installation as its vendor knows it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct InstallationId {
    pub app_name: String,
    pub bits: BitVector,
}

impl InstallationId {
    pub fn width(&self) -> usize {
        self.bits.len()
    }

    pub fn hex(&self) -> String {
        id_hex(&self.bits)
    }
}

/// Hex form when the width allows it, otherwise the binary string.
pub(crate) fn id_hex(bits: &BitVector) -> String {
    bits.to_hex().unwrap_or_else(|| bits.to_string())
}

#[derive(Debug, Clone)]
pub enum IdPolicy {
    Sequential,
    Random(ChaCha8Rng),
}

impl IdPolicy {
    pub fn random(seed: u64) -> Self {
        IdPolicy::Random(ChaCha8Rng::seed_from_u64(seed))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstallationRecord {
    pub identity: String,
    pub created_at: DateTime<Utc>,
}

/// A vendor's installation database: unique ids of one fixed width.
#[derive(Debug, Clone, PartialEq)]
pub struct VendorRegistry {
    vendor: String,
    width: usize,
    entries: BTreeMap<u64, InstallationRecord>,
    next_sequential: u64,
}

#[derive(Serialize, Deserialize)]
struct RegistryDoc {
    vendor: String,
    entries: Vec<EntryDoc>,
}

#[derive(Serialize, Deserialize)]
struct EntryDoc {
    id_hex: String,
    identity: String,
    created_at: DateTime<Utc>,
}

impl VendorRegistry {
    pub fn new(vendor: impl Into<String>, width: usize) -> Result<Self> {
        if !(1..=64).contains(&width) {
            return Err(Error::invalid(format!(
                "id width must be 1..=64, got {width}"
            )));
        }
        Ok(VendorRegistry {
            vendor: vendor.into(),
            width,
            entries: BTreeMap::new(),
            next_sequential: 0,
        })
    }

    pub fn vendor(&self) -> &str {
        &self.vendor
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn capacity(&self) -> u128 {
        1u128 << self.width
    }

    fn mask(&self) -> u64 {
        if self.width == 64 {
            u64::MAX
        } else {
            (1u64 << self.width) - 1
        }
    }

    /// Hand out a fresh id and record who it belongs to.
    pub fn allocate(
        &mut self,
        identity: impl Into<String>,
        policy: &mut IdPolicy,
        created_at: DateTime<Utc>,
    ) -> Result<InstallationId> {
        if self.entries.len() as u128 >= self.capacity() {
            return Err(Error::Capacity { width: self.width });
        }
        let mask = self.mask();
        let value = match policy {
            IdPolicy::Sequential => {
                let mut v = self.next_sequential & mask;
                while self.entries.contains_key(&v) {
                    v = v.wrapping_add(1) & mask;
                }
                self.next_sequential = v.wrapping_add(1);
                v
            }
            IdPolicy::Random(rng) => loop {
                let v = rng.random::<u64>() & mask;
                if !self.entries.contains_key(&v) {
                    break v;
                }
            },
        };
        self.entries.insert(
            value,
            InstallationRecord {
                identity: identity.into(),
                created_at,
            },
        );
        Ok(InstallationId {
            app_name: self.vendor.clone(),
            bits: BitVector::from_u64(value, self.width),
        })
    }

    pub fn lookup(&self, bits: &BitVector) -> Option<&InstallationRecord> {
        if bits.len() != self.width {
            return None;
        }
        self.entries.get(&bits.to_u64()?)
    }

    pub fn ids(&self) -> impl Iterator<Item = InstallationId> + '_ {
        self.entries.keys().map(|&v| InstallationId {
            app_name: self.vendor.clone(),
            bits: BitVector::from_u64(v, self.width),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = RegistryDoc {
            vendor: self.vendor.clone(),
            entries: self
                .entries
                .iter()
                .map(|(&v, rec)| EntryDoc {
                    id_hex: id_hex(&BitVector::from_u64(v, self.width)),
                    identity: rec.identity.clone(),
                    created_at: rec.created_at,
                })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Load a registry document; every `id_hex` must encode exactly `width` bits.
    pub fn from_json(text: &str, width: usize) -> Result<Self> {
        let doc: RegistryDoc = serde_json::from_str(text)?;
        let mut reg = VendorRegistry::new(doc.vendor, width)?;
        for e in doc.entries {
            let bits = if width.is_multiple_of(4) {
                BitVector::from_hex(&e.id_hex)?
            } else {
                e.id_hex.parse()?
            };
            if bits.len() != width {
                return Err(Error::invalid(format!(
                    "id `{}` has {} bits, registry width is {width}",
                    e.id_hex,
                    bits.len()
                )));
            }
            let v = bits.to_u64().expect("width <= 64");
            let rec = InstallationRecord {
                identity: e.identity,
                created_at: e.created_at,
            };
            if reg.entries.insert(v, rec).is_some() {
                return Err(Error::invalid(format!("duplicate id `{}`", e.id_hex)));
            }
            reg.next_sequential = reg.next_sequential.max(v.wrapping_add(1));
        }
        Ok(reg)
    }

    /// Replace the file at `path` with this registry.
    pub fn save(&self, path: &Path) -> Result<()> {
        let tmp = path.with_extension("json.tmp");
        fs::write(&tmp, self.to_json()?)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path, width: usize) -> Result<Self> {
        VendorRegistry::from_json(&fs::read_to_string(path)?, width)
    }
}
