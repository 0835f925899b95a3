//! Fidelity targets, closed forms, optimization, perturbation analysis,
//! state design and rate estimates.

mod design;
mod evaluate;
mod fastprob;
mod optimize;
mod perturbation;
mod target;
mod yields;

pub use design::{design_w_class, designed_circuit, verify_design, DesignReport, DesignSettings};
pub use evaluate::{closed_form_probability, evaluate, Branch, Evaluation, TriggerPolicy};
pub use fastprob::{detection_probability, permanent};
pub use optimize::{
    optimize_probability, paper_claim, probability_at, Bounds, OptimizationResult, PaperClaim, TracePoint,
};
pub use perturbation::{
    fidelity_hessian, perturbed_fidelity, printed_hessian, scan_fidelity, AxisRange, FidelityScan, FitTerm,
    Hessian, PolynomialFit, ScanRow, MIN_HESSIAN_STEP,
};
pub use target::{fidelity, fidelity_to, state_fidelity, w_registry, WTarget};
pub use yields::{contamination_estimate, yield_report, ContaminationReport, YieldModel, YieldReport};
