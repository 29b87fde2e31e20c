//! Loading configuration files and merging them with command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;

use crate::report::Format;
use crate::CliError;

/// Fields every configuration may carry.
pub trait Shared {
    fn seed(&self) -> Option<u64>;
    fn out(&self) -> Option<&PathBuf>;
    fn format(&self) -> Option<Format>;
}

macro_rules! impl_shared {
    ($t:ty) => {
        impl $crate::config::Shared for $t {
            fn seed(&self) -> Option<u64> {
                self.seed
            }
            fn out(&self) -> Option<&std::path::PathBuf> {
                self.out.as_ref()
            }
            fn format(&self) -> Option<$crate::report::Format> {
                self.format
            }
        }
    };
}
pub(crate) use impl_shared;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

/// Flag values win over the file; the seed defaults to 0.
pub struct Effective {
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

pub fn effective(
    cfg: &impl Shared,
    seed: Option<u64>,
    out: Option<&PathBuf>,
    format: Option<Format>,
) -> Effective {
    Effective {
        seed: seed.or(cfg.seed()).unwrap_or(0),
        out: out.or(cfg.out()).cloned(),
        format: format.or(cfg.format()).unwrap_or_default(),
    }
}
