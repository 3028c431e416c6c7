use std::borrow::Borrow;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::AutomataError;

/// An abstract message or response class, e.g. `USER`, `R331`, `MALFORMED`.
///
/// Symbols are cheap to clone (shared string) and are guaranteed to be
/// non-empty and free of whitespace and commas, so they can be embedded in
/// DOT labels, comma lists and log lines without quoting.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub const MALFORMED: &'static str = "MALFORMED";

    pub fn new(name: &str) -> Result<Self, AutomataError> {
        if name.is_empty() {
            return Err(AutomataError::InvalidSymbol {
                name: name.to_string(),
                reason: "empty",
            });
        }
        if name.chars().any(char::is_whitespace) {
            return Err(AutomataError::InvalidSymbol {
                name: name.to_string(),
                reason: "contains whitespace",
            });
        }
        if name.contains(',') {
            return Err(AutomataError::InvalidSymbol {
                name: name.to_string(),
                reason: "contains a comma",
            });
        }
        Ok(Symbol(Arc::from(name)))
    }

    /// The reserved symbol standing for any corrupted message.
    pub fn malformed() -> Self {
        Symbol(Arc::from(Self::MALFORMED))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn is_malformed(&self) -> bool {
        &*self.0 == Self::MALFORMED
    }
}

/// Parses a list of symbols from a comma separated string, ignoring blanks
/// around the separators.
pub fn parse_symbol_list(text: &str) -> Result<Vec<Symbol>, AutomataError> {
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    text.split(',').map(|s| Symbol::new(s.trim())).collect()
}

/// Shorthand for building symbol sequences in tests and tables.
///
/// Panics on invalid names, so only use it with literals.
pub fn symbols(names: &[&str]) -> Vec<Symbol> {
    names
        .iter()
        .map(|n| Symbol::new(n).expect("invalid symbol literal"))
        .collect()
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Symbol {
    type Err = AutomataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Symbol::new(s)
    }
}

impl Borrow<str> for Symbol {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for Symbol {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl PartialEq<str> for Symbol {
    fn eq(&self, other: &str) -> bool {
        &*self.0 == other
    }
}

impl PartialEq<&str> for Symbol {
    fn eq(&self, other: &&str) -> bool {
        &*self.0 == *other
    }
}

impl Serialize for Symbol {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Symbol {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        Symbol::new(&raw).map_err(serde::de::Error::custom)
    }
}
