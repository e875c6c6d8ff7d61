//! Client for a Trends-compatible RSV source, the mock server that speaks
//! the same wire contract, and whole-snapshot acquisition.

mod client;
pub mod mock;
mod pull;
pub mod wire;

pub use client::{ClientConfig, RetryPolicy, StateValues, TrendsClient, TrendsError, BASE_URL_ENV, DEFAULT_REQUESTS_PER_MINUTE};
pub use mock::{MockData, MockServer, RequestRecord, Scripted};
pub use pull::{pull_snapshot, PullError, PullPlan};
