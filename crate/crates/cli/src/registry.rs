//! Catalogue of runnable experiments.

use serde::Serialize;

use crate::config::Experiment;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ExperimentInfo {
    pub experiment: Experiment,
    pub description: &'static str,
    pub anchor: &'static str,
}

pub fn info(experiment: Experiment) -> ExperimentInfo {
    let (description, anchor) = match experiment {
        Experiment::Ids => ("disorder-averaged finite-volume IDS N(E)/|Λ| on an energy grid", "Thm. 3.1"),
        Experiment::BcGap => ("Dirichlet/Neumann IDS gap on increasing boxes", "Prop. 4.4"),
        Experiment::Truncation => ("IDS deviation under truncation V -> V 1{|V| < n}", "Lemma 4.2"),
        Experiment::Tightness => ("low-energy profile of N(E) and its log-log slope", "Eq. (3.12)"),
        Experiment::Weyl => ("high-energy Weyl law for the free operator", "Remark (vii)"),
        Experiment::GaussianTail => ("E^-2 log N(E) in the Gaussian low-energy tail", "Remark (vii)"),
        Experiment::Landau => ("lowest Landau cluster on a magnetic torus", "property (C)"),
        Experiment::SupportSpectrum => ("growth set of the averaged IDS against realization spectra", "Cor. 3.3(i)"),
        Experiment::MomentCheck => ("Monte Carlo local moment bound for convolution potentials", "Lemma 3.4"),
        Experiment::MeasureDemo => ("synthetic measure families: vague convergence, tightness, kernels", "§4.1"),
    };
    ExperimentInfo { experiment, description, anchor }
}

pub fn registry() -> Vec<ExperimentInfo> {
    Experiment::ALL.iter().map(|&e| info(e)).collect()
}

/// One line per experiment: `name  description  [anchor]`.
pub fn render() -> String {
    let width = Experiment::ALL.iter().map(|e| e.name().len()).max().unwrap_or(0);
    registry().iter().map(|i| format!("{:width$}  {}  [{}]\n", i.experiment.name(), i.description, i.anchor)).collect()
}
