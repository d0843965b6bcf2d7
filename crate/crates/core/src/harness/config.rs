//! Grid configuration files.

use std::path::Path;

use serde::Deserialize;

use crate::bootstrap::TieRule;
use crate::dgp::DgpSpec;
use crate::error::{Error, Result};
use crate::evaluation::ORACLE_DRAWS;
use crate::functionals::Functional;
use crate::method::{MethodId, ResampleSettings};

pub const SAMPLE_SIZES: [usize; 7] = [4, 8, 16, 32, 64, 128, 256];
pub const ALPHAS: [f64; 6] = [0.025, 0.05, 0.25, 0.75, 0.95, 0.975];
pub const RESAMPLE_COUNTS: [usize; 3] = [10, 100, 1000];

/// Grid description as written in a TOML file. List entries may be `"all"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dgps: Vec<String>,
    pub functionals: Vec<String>,
    pub ns: Vec<usize>,
    pub alphas: Vec<f64>,
    #[serde(default = "default_b")]
    pub b: usize,
    /// Inner resamples for the double bootstrap; defaults to `b`.
    #[serde(default)]
    pub b_inner: Option<usize>,
    #[serde(default = "default_b_inner_bt")]
    pub b_inner_bt: usize,
    #[serde(default = "default_n_rep")]
    pub n_rep: usize,
    pub methods: Vec<String>,
    #[serde(default)]
    pub seed: u64,
    /// Score distances to the exact interval (costly oracle).
    #[serde(default)]
    pub exact: bool,
    #[serde(default)]
    pub tie_rule: TieRule,
    #[serde(default = "default_oracle_draws")]
    pub oracle_draws: usize,
}

fn default_b() -> usize {
    1000
}

fn default_b_inner_bt() -> usize {
    50
}

fn default_n_rep() -> usize {
    10_000
}

fn default_oracle_draws() -> usize {
    ORACLE_DRAWS
}

/// One (dgp, functional, n) combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellSpec {
    pub dgp: DgpSpec,
    pub functional: Functional,
    pub n: usize,
}

impl CellSpec {
    pub fn label(&self) -> String {
        format!("{}/{}/{}", self.dgp.as_str(), self.functional.as_str(), self.n)
    }
}

/// Validated run description.
#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    pub cells: Vec<CellSpec>,
    pub alphas: Vec<f64>,
    pub methods: Vec<MethodId>,
    pub settings: ResampleSettings,
    pub n_rep: usize,
    pub seed: u64,
    pub exact: bool,
    pub oracle_draws: usize,
}

impl ExperimentPlan {
    /// Number of (cell, alpha) combinations.
    pub fn combinations(&self) -> usize {
        self.cells.len() * self.alphas.len()
    }
}

fn expand<T: Copy>(names: &[String], all: &[T], parse: impl Fn(&str) -> Result<T>, what: &str) -> Result<Vec<T>> {
    if names.is_empty() {
        return Err(Error::Config(format!("`{what}` must not be empty")));
    }
    if names.iter().any(|n| n == "all") {
        return Ok(all.to_vec());
    }
    names.iter().map(|n| parse(n).map_err(|e| Error::Config(e.to_string()))).collect()
}

impl GridConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_owned(), source })?;
        Self::from_toml(&text)
    }

    /// The complete grid: every legal (dgp, functional) pair, all sizes and
    /// levels, all methods.
    pub fn full() -> Self {
        GridConfig {
            dgps: vec!["all".into()],
            functionals: vec!["all".into()],
            ns: SAMPLE_SIZES.to_vec(),
            alphas: ALPHAS.to_vec(),
            b: default_b(),
            b_inner: None,
            b_inner_bt: default_b_inner_bt(),
            n_rep: default_n_rep(),
            methods: vec!["all".into()],
            seed: 0,
            exact: false,
            tie_rule: TieRule::default(),
            oracle_draws: ORACLE_DRAWS,
        }
    }

    pub fn plan(&self) -> Result<ExperimentPlan> {
        let dgps = expand(&self.dgps, &DgpSpec::ALL, str::parse, "dgps")?;
        let functionals = expand(&self.functionals, &Functional::ALL, str::parse, "functionals")?;
        let all_methods: Vec<MethodId> = MethodId::all().collect();
        let mut methods = expand(&self.methods, &all_methods, str::parse, "methods")?;
        methods.sort();
        methods.dedup();
        if self.ns.is_empty() || self.alphas.is_empty() {
            return Err(Error::Config("`ns` and `alphas` must not be empty".into()));
        }
        if let Some(n) = self.ns.iter().find(|n| !SAMPLE_SIZES.contains(n)) {
            return Err(Error::Config(format!("sample size {n} is not one of {SAMPLE_SIZES:?}")));
        }
        if let Some(a) = self.alphas.iter().find(|a| !ALPHAS.contains(a)) {
            return Err(Error::Config(format!("alpha {a} is not one of {ALPHAS:?}")));
        }
        if !RESAMPLE_COUNTS.contains(&self.b) {
            return Err(Error::Config(format!("b = {} is not one of {RESAMPLE_COUNTS:?}", self.b)));
        }
        if self.n_rep == 0 {
            return Err(Error::Config("n_rep must be at least 1".into()));
        }
        if self.exact && self.oracle_draws < 1000 {
            return Err(Error::Config("oracle_draws must be at least 1000".into()));
        }
        let settings = ResampleSettings {
            b: self.b,
            b_inner: self.b_inner.unwrap_or(self.b),
            b_inner_bt: self.b_inner_bt,
            tie_rule: self.tie_rule,
        };
        settings.validate().map_err(|e| Error::Config(e.to_string()))?;

        let mut ns = self.ns.clone();
        ns.sort_unstable();
        ns.dedup();
        let mut alphas = self.alphas.clone();
        alphas.sort_by(f64::total_cmp);
        alphas.dedup();
        let mut cells = Vec::new();
        for &dgp in &dgps {
            for &functional in &functionals {
                if !dgp.supports(functional) {
                    continue;
                }
                for &n in &ns {
                    cells.push(CellSpec { dgp, functional, n });
                }
            }
        }
        cells.sort();
        cells.dedup();
        if cells.is_empty() {
            return Err(Error::Config("no legal (dgp, functional) pair in the grid".into()));
        }
        Ok(ExperimentPlan {
            cells,
            alphas,
            methods,
            settings,
            n_rep: self.n_rep,
            seed: self.seed,
            exact: self.exact,
            oracle_draws: self.oracle_draws,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_grid_has_1386_combinations() {
        let plan = GridConfig::full().plan().unwrap();
        assert_eq!(plan.cells.len(), 33 * 7);
        assert_eq!(plan.combinations(), 1386);
        assert_eq!(plan.methods.len(), 17);
    }

    #[test]
    fn parses_minimal_file() {
        let cfg = GridConfig::from_toml(
            r#"
            dgps = ["normal", "bernoulli_0.9"]
            functionals = ["mean"]
            ns = [8, 4]
            alphas = [0.95, 0.05]
            methods = ["pb", "t_test"]
            n_rep = 10
            "#,
        )
        .unwrap();
        let plan = cfg.plan().unwrap();
        assert_eq!(plan.cells.len(), 4);
        assert_eq!(plan.alphas, vec![0.05, 0.95]);
        assert_eq!(plan.settings.b_inner, 1000);
        assert_eq!(plan.settings.b_inner_bt, 50);
    }

    #[test]
    fn rejects_bad_configs() {
        let base = |extra: &str| {
            format!(
                "dgps = [\"normal\"]\nfunctionals = [\"mean\"]\nns = [4]\nalphas = [0.95]\nmethods = [\"pb\"]\n{extra}"
            )
        };
        assert!(GridConfig::from_toml(&base("colour = 1")).is_err());
        for bad in ["n_rep = 0", "b = 7", "b_inner_bt = 1"] {
            let cfg = GridConfig::from_toml(&base(bad)).unwrap();
            assert!(matches!(cfg.plan(), Err(Error::Config(_))), "{bad}");
        }
        let cfg = GridConfig::from_toml(&base("").replace("[4]", "[5]")).unwrap();
        assert!(cfg.plan().is_err());
        let cfg = GridConfig::from_toml(&base("").replace("\"mean\"", "\"corr\"")).unwrap();
        assert!(cfg.plan().is_err());
    }
}
