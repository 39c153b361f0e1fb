use std::collections::BTreeMap;
use std::sync::Arc;

use super::{
    AnalysisDef, ConstantPropagation, LiveVariables, ReachingDefinitions, SeededBug,
    TaintAnalysis, TaintConfig,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown analysis `{0}`")]
pub struct UnknownAnalysis(pub String);

/// The four correct analyses: taint, reaching-defs, liveness, constants.
pub fn builtin_analyses(config: TaintConfig) -> Vec<Arc<dyn AnalysisDef>> {
    vec![
        Arc::new(TaintAnalysis::new(config)),
        Arc::new(ReachingDefinitions),
        Arc::new(LiveVariables),
        Arc::new(ConstantPropagation),
    ]
}

/// Analyses addressable by name.
///
/// Besides the built-ins this holds `taint-bug1` .. `taint-bug6` (one seeded
/// bug each) and `taint-variant-a` / `taint-variant-b`, which carry bugs
/// 1-3 and 4-6 together.
#[derive(Clone)]
pub struct Registry {
    analyses: BTreeMap<String, Arc<dyn AnalysisDef>>,
}

impl Registry {
    pub fn empty() -> Self {
        Registry {
            analyses: BTreeMap::new(),
        }
    }

    pub fn with_builtins(config: TaintConfig) -> Self {
        let mut registry = Self::empty();
        for analysis in builtin_analyses(config.clone()) {
            registry.insert(analysis);
        }
        for bug in SeededBug::ALL {
            registry.insert(Arc::new(TaintAnalysis::with_bugs(
                bug.analysis_name(),
                config.clone(),
                [bug],
            )));
        }
        let (a, b) = SeededBug::ALL.split_at(3);
        registry.insert(Arc::new(TaintAnalysis::with_bugs(
            "taint-variant-a",
            config.clone(),
            a.iter().copied(),
        )));
        registry.insert(Arc::new(TaintAnalysis::with_bugs(
            "taint-variant-b",
            config,
            b.iter().copied(),
        )));
        registry
    }

    /// Add or replace an analysis under its own name.
    pub fn insert(&mut self, analysis: Arc<dyn AnalysisDef>) {
        self.analyses.insert(analysis.name().to_string(), analysis);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn AnalysisDef>, UnknownAnalysis> {
        self.analyses
            .get(name)
            .cloned()
            .ok_or_else(|| UnknownAnalysis(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.analyses.keys().map(String::as_str)
    }
}

impl Default for Registry {
    fn default() -> Self {
        Self::with_builtins(TaintConfig::default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names() {
        let r = Registry::default();
        let names: Vec<_> = r.names().collect();
        assert_eq!(
            names,
            [
                "constants",
                "liveness",
                "reaching-defs",
                "taint",
                "taint-bug1",
                "taint-bug2",
                "taint-bug3",
                "taint-bug4",
                "taint-bug5",
                "taint-bug6",
                "taint-variant-a",
                "taint-variant-b"
            ]
        );
        assert_eq!(r.get("foo").err(), Some(UnknownAnalysis("foo".into())));
    }

    #[test]
    fn builtins_have_documented_directions() {
        use crate::dataflow::Direction;
        let dirs: Vec<_> = builtin_analyses(TaintConfig::default())
            .iter()
            .map(|a| (a.name().to_string(), a.direction()))
            .collect();
        assert_eq!(dirs[2], ("liveness".to_string(), Direction::Backward));
        assert!(dirs.iter().filter(|(_, d)| *d == Direction::Forward).count() == 3);
    }
}
