pub mod dataset;
pub mod manifest;
pub mod pipeline;
pub mod plot;
pub mod server;
