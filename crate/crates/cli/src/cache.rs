//! Version-keyed cache for quadrature rules and numerical energy constants.
//!
//! Layout under the cache root:
//! `v<version>/quadrature/product-n<n>-l<level>.bin` and
//! `v<version>/constants/energy-n<n>-l<level>.txt`, the latter holding the
//! IEEE bit pattern of the value in hex.

use std::path::PathBuf;

use bubbletower_core::variational::{energy_constant_numeric, product_rule, QuadratureRule};

use crate::config::LoadedConfig;
use crate::error::CliError;
use crate::report::{write_atomic, VERSION};

pub struct Cache {
    dir: Option<PathBuf>,
}

impl Cache {
    /// `[run] cache_dir`, else `BUBBLETOWER_CACHE_DIR`, else `<out>/.cache`.
    pub fn new(cfg: &LoadedConfig, enabled: bool) -> Self {
        let root = match &cfg.config.run.cache_dir {
            Some(d) => cfg.resolve(d),
            None => std::env::var_os("BUBBLETOWER_CACHE_DIR")
                .map(PathBuf::from)
                .unwrap_or_else(|| cfg.out.join(".cache")),
        };
        Cache {
            dir: enabled.then(|| root.join(format!("v{VERSION}"))),
        }
    }

    pub fn product_rule(&self, n: usize, level: usize) -> Result<QuadratureRule, CliError> {
        let compute = || product_rule(n, level).map_err(|e| CliError::from_core("quadrature", e));
        let Some(dir) = &self.dir else {
            return compute();
        };
        let path = dir
            .join("quadrature")
            .join(format!("product-n{n}-l{level}.bin"));
        if let Ok(rule) = QuadratureRule::read_cache(&path) {
            if rule.n == n && rule.level == level {
                return Ok(rule);
            }
        }
        let rule = compute()?;
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::input(format!("cache {}: {e}", parent.display())))?;
        }
        rule.write_cache(&path)
            .map_err(|e| CliError::from_core("cache", e))?;
        Ok(rule)
    }

    pub fn energy_constant(&self, n: usize, level: usize) -> Result<f64, CliError> {
        let compute = || {
            energy_constant_numeric(n, level).map_err(|e| CliError::from_core("energy constant", e))
        };
        let Some(dir) = &self.dir else {
            return compute();
        };
        let path = dir
            .join("constants")
            .join(format!("energy-n{n}-l{level}.txt"));
        if let Some(v) = std::fs::read_to_string(&path)
            .ok()
            .and_then(|s| u64::from_str_radix(s.trim(), 16).ok())
        {
            return Ok(f64::from_bits(v));
        }
        let v = compute()?;
        write_atomic(&path, format!("{:016x}\n", v.to_bits()).as_bytes())?;
        Ok(v)
    }
}
