//! One module per subcommand.

pub mod bifurcation;
pub mod rotation;
pub mod simulate;
pub mod verify;
