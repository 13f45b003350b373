//! One function per subcommand. Each returns the files it wrote.

mod diagnose;
mod estimate;
mod fit;
mod report;
mod simulate;

pub use diagnose::{diagnose, ENVELOPE_PASS_FRACTION};
pub use estimate::estimate;
pub use fit::fit;
pub use report::report;
pub use simulate::simulate;
