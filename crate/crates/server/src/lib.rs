//! Discussion-room server.
//!
//! Participants connect over TCP, join a room and stream one feature frame
//! per tick. Once the room is full its clock starts; each tick's frames are
//! folded through the metrics engine and every participant receives only
//! their own feedback. Rooms in no-feedback mode compute and log the same
//! feedback without sending it. Each session is written to a replayable
//! log under the configured log directory.

pub mod config;
pub mod room;
pub mod sink;
pub mod transport;

pub use config::ServerConfig;
pub use room::{Delivery, RoomCore, RoomError, RoomSettings, RoomStats};
pub use sink::{FileSink, LogSink, MemorySink};
pub use transport::Server;
