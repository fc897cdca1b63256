//! Films, fields and exponent schedules.

pub mod field;
pub mod region;
pub mod schedule;

pub use field::{
    field_eval, jump_set, rescale_from_unit, rescale_to_unit, Field, FieldKind, Regularity,
    SmoothFn, SmoothKind,
};
pub use region::{BoxRegion, ThinFilm, UnitFilm};
pub use schedule::Schedule;
