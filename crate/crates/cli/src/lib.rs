//! Front-end plumbing for the guidance library: config parsing, trace and
//! SVG export, and the release-check battery. The `fovrelay` binary is a
//! thin shell over these modules, so integration tests can exercise the
//! same code paths in-process.

pub mod config;
pub mod svg;
pub mod trace;
pub mod verify;

/// Process exit codes used by the binary.
pub mod exit {
    /// Everything worked.
    pub const OK: u8 = 0;
    /// Bad usage, unparsable or invalid configuration.
    pub const INVALID: u8 = 1;
    /// The simulation itself failed (collision, degenerate geometry).
    pub const SIMULATION: u8 = 2;
    /// Filesystem trouble.
    pub const IO: u8 = 3;
}
