use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Bandwidth, BamKind};

/// Capacity plus one bandwidth-constraint vector, interpreted by a specific model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BamConfig {
    pub capacity: Bandwidth,
    pub bc: Vec<Bandwidth>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConfigError {
    #[error("capacity must be positive")]
    ZeroCapacity,
    #[error("at least one traffic class is required")]
    NoClasses,
    #[error("{kind}: expected {expected} bandwidth constraints, found {found}")]
    ClassCount { kind: BamKind, expected: usize, found: usize },
    #[error("MAM: BC{class} = {value} exceeds capacity {capacity}")]
    CapAboveCapacity { class: usize, value: Bandwidth, capacity: Bandwidth },
    #[error("RDM: nesting rule BC0 <= BC1 <= ... violated at BC{class} = {value} < BC{prev_class} = {prev}")]
    NotNested { class: usize, value: Bandwidth, prev_class: usize, prev: Bandwidth },
    #[error("RDM: outermost doll BC{class} = {value} must equal capacity {capacity}")]
    OuterDoll { class: usize, value: Bandwidth, capacity: Bandwidth },
    #[error("ATCS: native shares sum to {sum}, must equal capacity {capacity}")]
    SharesSum { sum: Bandwidth, capacity: Bandwidth },
}

impl BamConfig {
    pub fn new(capacity: Bandwidth, bc: Vec<Bandwidth>) -> Self {
        Self { capacity, bc }
    }

    pub fn classes(&self) -> usize {
        self.bc.len()
    }

    /// Checks the constraint vector against the algebra of `kind`. All violations are reported.
    pub fn validate(&self, kind: BamKind) -> Vec<ConfigError> {
        let mut errors = Vec::new();
        if self.capacity == 0 {
            errors.push(ConfigError::ZeroCapacity);
        }
        if self.bc.is_empty() {
            errors.push(ConfigError::NoClasses);
            return errors;
        }
        let capacity = self.capacity;
        match kind {
            BamKind::Mam => {
                for (class, &value) in self.bc.iter().enumerate() {
                    if value > capacity {
                        errors.push(ConfigError::CapAboveCapacity { class, value, capacity });
                    }
                }
            }
            BamKind::Rdm => {
                for (class, pair) in self.bc.windows(2).enumerate() {
                    if pair[1] < pair[0] {
                        errors.push(ConfigError::NotNested {
                            class: class + 1,
                            value: pair[1],
                            prev_class: class,
                            prev: pair[0],
                        });
                    }
                }
                let last = self.bc.len() - 1;
                if self.bc[last] != capacity {
                    errors.push(ConfigError::OuterDoll { class: last, value: self.bc[last], capacity });
                }
            }
            BamKind::Atcs => {
                let sum: Bandwidth = self.bc.iter().sum();
                if sum != capacity {
                    errors.push(ConfigError::SharesSum { sum, capacity });
                }
            }
        }
        errors
    }
}

/// The constraint vectors for all three models on one link.
///
/// A link keeps all three so it can switch model at runtime without being reconfigured.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BamParameters {
    pub capacity: Bandwidth,
    pub mam: Vec<Bandwidth>,
    pub rdm: Vec<Bandwidth>,
    pub atcs: Vec<Bandwidth>,
}

impl BamParameters {
    pub fn new(capacity: Bandwidth, mam: Vec<Bandwidth>, rdm: Vec<Bandwidth>, atcs: Vec<Bandwidth>) -> Self {
        Self { capacity, mam, rdm, atcs }
    }

    pub fn classes(&self) -> usize {
        self.mam.len()
    }

    pub fn bc(&self, kind: BamKind) -> &[Bandwidth] {
        match kind {
            BamKind::Mam => &self.mam,
            BamKind::Rdm => &self.rdm,
            BamKind::Atcs => &self.atcs,
        }
    }

    pub fn config(&self, kind: BamKind) -> BamConfig {
        BamConfig::new(self.capacity, self.bc(kind).to_vec())
    }

    pub fn validate(&self) -> Vec<ConfigError> {
        let expected = self.classes();
        let mut errors = Vec::new();
        for kind in BamKind::ALL {
            let found = self.bc(kind).len();
            if found != expected {
                errors.push(ConfigError::ClassCount { kind, expected, found });
                continue;
            }
            errors.extend(
                self.config(kind)
                    .validate(kind)
                    .into_iter()
                    .filter(|e| kind == BamKind::Mam || !matches!(e, ConfigError::ZeroCapacity | ConfigError::NoClasses)),
            );
        }
        errors
    }
}
