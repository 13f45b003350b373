use std::fmt;

use crate::error::{Error, Result};

/// Label that absorbs brands missing from the catalog.
pub const OTHER_LABEL: &str = "Other";

/// 1-based brand identifier within a [`BrandCatalog`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BrandId(pub usize);

impl BrandId {
    /// 0-based position for array indexing.
    pub fn index(self) -> usize {
        self.0 - 1
    }

    pub fn from_index(index: usize) -> Self {
        BrandId(index + 1)
    }
}

impl fmt::Display for BrandId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Brand {
    pub id: BrandId,
    pub label: String,
}

/// Ordered set of brands; the first brand is the reference category.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BrandCatalog {
    brands: Vec<Brand>,
}

impl BrandCatalog {
    pub fn new<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::invalid("brand catalog needs at least two brands"));
        }
        let mut brands = Vec::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            let label = label.as_ref().trim();
            if label.is_empty() {
                return Err(Error::invalid("brand labels must be non-empty"));
            }
            if brands
                .iter()
                .any(|b: &Brand| b.label.eq_ignore_ascii_case(label))
            {
                return Err(Error::invalid(format!("duplicate brand label {label:?}")));
            }
            brands.push(Brand {
                id: BrandId(i + 1),
                label: label.to_string(),
            });
        }
        Ok(Self { brands })
    }

    /// Nokia, Apple, Samsung, Other.
    pub fn mobile_default() -> Self {
        Self::new(&["Nokia", "Apple", "Samsung", OTHER_LABEL]).expect("static catalog")
    }

    pub fn len(&self) -> usize {
        self.brands.len()
    }

    pub fn is_empty(&self) -> bool {
        self.brands.is_empty()
    }

    pub fn brands(&self) -> &[Brand] {
        &self.brands
    }

    pub fn labels(&self) -> Vec<String> {
        self.brands.iter().map(|b| b.label.clone()).collect()
    }

    pub fn label(&self, id: BrandId) -> &str {
        &self.brands[id.index()].label
    }

    pub fn find(&self, label: &str) -> Option<BrandId> {
        let label = label.trim();
        self.brands
            .iter()
            .find(|b| b.label.eq_ignore_ascii_case(label))
            .map(|b| b.id)
    }

    pub fn other(&self) -> Option<BrandId> {
        self.find(OTHER_LABEL)
    }

    /// Exact match, else the catalog's "Other" brand.
    pub fn resolve(&self, label: &str) -> Option<BrandId> {
        self.find(label).or_else(|| self.other())
    }

    pub fn ids(&self) -> impl Iterator<Item = BrandId> + '_ {
        self.brands.iter().map(|b| b.id)
    }
}
