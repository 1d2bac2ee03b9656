//! Phase-space tube combinatorics and Monte-Carlo estimators for the
//! near-periodic, looping and recurrent sets.

pub mod cover;
pub mod measure;
pub mod phase;
pub mod resolution;

pub use cover::{
    build_good_cover, nonselflooping_test, split_bad_good, tubes_disjoint, CoverSplit, GoodCover,
    LoopVerdict, LoopWitness, Tube, FAMILY_BUDGET,
};
pub use measure::{
    circle_union_measure, looping_pair_measure, near_periodic_measure, recurrence_measure,
    torus_looping_exact, torus_near_periodic_ball_exact, torus_near_periodic_exact, CosphereSet,
    FiberCircle, LoopingEstimate, MeasureEstimate, RecurrenceParams, RecurrenceReport,
    RecurrenceRow, Submanifold, KAPPA,
};
pub use phase::{BasePoint, Embedded, Orbit, PhaseSpace, State};
pub use resolution::{
    check_sublogarithmic, omega, sublog_inequalities, OmegaEstimate, ResolutionForm,
    ResolutionFunction, SublogCertificate, SublogReport,
};
