//! Cognitive subjects, regularity detection, associative rules over
//! recognition logs, rule mining and legitimacy feedback.

pub mod log;
pub mod mining;
pub mod regularity;
pub mod rule;
pub mod situation;
pub mod subject;
pub mod synth;

pub use log::{Recognition, RecognitionLog};
pub use mining::{mine_rules, MineParams};
pub use regularity::{
    detect_regularity_case1, detect_regularity_case2, detect_regularity_case3, verify_regularity_case4,
    Evidence, Grammar, Recipe, RegularityCase, RegularityReport,
};
pub use rule::{eval_rule, laplace, validate_rule, AssociativeRule, Consequent, Prediction, Validation};
pub use situation::{Member, MicroSituation, Polarity, RelationReq, Window};
pub use subject::{update_legitimacy, Observation, Recognizer, Subject, SubjectRegistry};
