//! Finite-horizon simulations of stagewise constructions.

mod ads;
mod escaping;
mod gamma;
mod mirror;
mod modulus;
mod priority;
mod script;

pub use ads::{ads_extract, AdsConfig, AdsOutcome};
pub use escaping::{escaping_select, EscapeRun, EscapeViolation, Harvest};
pub use gamma::{
    check_single_disabled, delta_extract, delta_success_bound, gamma_build, BuiltOrder,
    DeltaOutcome, DeltaStatus, Direction, GammaEvent, GammaEventKind, GammaNode,
};
pub use mirror::{mirror_double, mirror_precedes, LinearOrderView, RankOrder};
pub use modulus::ModulusApprox;
pub use priority::{
    all_transitive, check_stability, check_state_invariants, check_verdicts, priority_build,
    transitivity_violation, PriorityBuild, Requirement, RequirementSnapshot, StageRecord, Verdict,
};
pub use script::{parse_scripts, AdversaryScript, Measure, ScriptEntry, MAX_PREFIX};
