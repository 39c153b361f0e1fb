//! Line-delimited JSON protocol.
//!
//! Every line a client sends is a [`Request`]; the server answers each with
//! exactly one [`Response`] carrying the same `id`, then pushes any
//! [`Event`]s the request caused. Events never overtake the response that
//! triggered them.

mod server;
mod wire;

pub use server::{serve_stdio, serve_tcp, ConnId, Server, DEFAULT_PORT};
pub use wire::{
    edge_json, facts_json, report_json, ErrorBody, Event, Op, Request, Response,
};
