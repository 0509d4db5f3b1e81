pub mod codec;
pub mod topology;
pub mod analytics;
pub mod control_plane;
pub mod forwarding;
pub mod simulation;
