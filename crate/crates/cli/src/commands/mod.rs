//! One module per subcommand. Each exposes an options struct and a pure
//! `run` returning the produced artifacts, so the whole pipeline is
//! drivable from tests without spawning the binary; `main` only parses
//! flags, writes files, and maps errors to exit codes.

pub mod aggregate;
pub mod agreement;
pub mod anchor;
pub mod judge_score;
pub mod nulls;
pub mod validate;
