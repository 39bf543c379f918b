use serde::Serialize;

/// One runnable experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExperimentInfo {
    pub name: &'static str,
    /// Result being exercised.
    pub topic: &'static str,
    pub description: &'static str,
}

/// Every experiment, in the order `dperm list` prints them.
pub const EXPERIMENTS: &[ExperimentInfo] = &[
    ExperimentInfo {
        name: "audit",
        topic: "pure and approximate DP",
        description: "exact privacy-loss audit over all neighbouring datasets of a tiny universe",
    },
    ExperimentInfo {
        name: "stability",
        topic: "privacy implies stability",
        description: "exact uniform stability against e^eps - 1 and 2 eps",
    },
    ExperimentInfo {
        name: "aerm",
        topic: "universal AERM bound",
        description: "exact AERM gap of the exponential mechanism against its sample-size bound",
    },
    ExperimentInfo {
        name: "utility-tail",
        topic: "utility tail bound",
        description: "exact tail probability of the objective against the sublevel-set bound",
    },
    ExperimentInfo {
        name: "consistency",
        topic: "stability plus AERM gives consistency",
        description: "excess risk decomposed into stability and AERM gap, exact or Monte Carlo",
    },
    ExperimentInfo {
        name: "counterexample",
        topic: "packing lower bound",
        description: "worst AERM gap over packed datasets as the hypothesis grid is refined",
    },
    ExperimentInfo {
        name: "phase",
        topic: "subsampling phase transition",
        description: "excess risk of ERM on n^(1-r) subsampled points for r in {0, 1/2, 1}",
    },
    ExperimentInfo {
        name: "boost",
        topic: "high-confidence boosting",
        description: "failure frequency of the boosted learner against delta",
    },
    ExperimentInfo {
        name: "rates",
        topic: "Laplace-perturbed ERM rate",
        description: "log-log slope of excess risk with eps(n) = n^(-9/10)",
    },
    ExperimentInfo {
        name: "sublevel",
        topic: "sublevel-set growth condition",
        description: "Monte Carlo estimate of K and rho in E[mu(H)/mu(S_t)] <= K t^(-rho)",
    },
];

pub fn find(name: &str) -> Option<&'static ExperimentInfo> {
    EXPERIMENTS.iter().find(|e| e.name == name)
}

/// Fixed-width text table.
pub fn render_table() -> String {
    let width = EXPERIMENTS.iter().map(|e| e.name.len()).max().unwrap_or(0);
    let topic_width = EXPERIMENTS.iter().map(|e| e.topic.len()).max().unwrap_or(0);
    let mut out = format!("{:<width$}  {:<topic_width$}  description\n", "name", "topic");
    for e in EXPERIMENTS {
        out.push_str(&format!("{:<width$}  {:<topic_width$}  {}\n", e.name, e.topic, e.description));
    }
    out
}

pub fn render_json() -> String {
    serde_json::to_string_pretty(EXPERIMENTS).expect("static catalog serializes")
}
