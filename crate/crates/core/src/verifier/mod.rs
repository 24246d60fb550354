//! Runnable checks of the moment, evidence and entropy inequalities, and
//! contraction-rate measurements.

pub mod battery;
pub mod calibration;
pub mod checks;
pub mod oracle;
pub mod partition;
pub mod rate;
pub mod shell;

pub use battery::{
    builtin_instances, identity_suite, run_battery, run_instance, BatteryInstance, BuiltinModel,
    IdentityRecord, InstanceKind,
};
pub use calibration::{
    ball_quotient, calibrate_gauss_seq_c, weight_quotient_rows, BallQuotient, GaussSeqCalibration,
    WeightQuotientRow,
};
pub use checks::{
    check_inequality_one, check_lemma, check_prop0_prop3, check_prop2, check_prop4, decide,
    BoundCheck, BoundSetup, CheckConfig, CheckName, Estimate, EvidenceLemma, FiniteMetric,
    OracleComparison, Verdict,
};
pub use oracle::{Atom, FiniteModel};
pub use partition::{
    partition_condition, poisson_partition_instance, PartitionConditionReport, PartitionInstance,
};
pub use rate::{
    ar_curve, discrete_curve, fit_slope, gauss_seq_curve, ArCurveConfig, DiscreteCurveSpec,
    GaussSeqCurveConfig, RateCheckConfig, RateCurve, SlopeFit,
};
pub use shell::{
    check_global_condition, check_shell_condition, ShellParams, ShellReport, ShellRow,
};
