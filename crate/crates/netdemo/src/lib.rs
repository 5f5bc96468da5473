pub mod chat;
pub mod files;
pub mod frame;
pub mod net;
