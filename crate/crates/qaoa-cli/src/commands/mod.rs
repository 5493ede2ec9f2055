//! One module per subcommand.

pub mod assemble;
pub mod curate;
pub mod evaluate;
pub mod stats;
pub mod stratify;
pub mod synthesize;
