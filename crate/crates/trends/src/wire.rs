//! JSON wire contract shared by the client and the mock server.
//!
//! `GET /trends/over_time?q&geo&from&to&gran` answers [`OverTimeResponse`];
//! `GET /trends/by_state?q&from&to` answers [`ByStateResponse`].

use serde::{Deserialize, Serialize};

pub const OVER_TIME_PATH: &str = "/trends/over_time";
pub const BY_STATE_PATH: &str = "/trends/by_state";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WirePoint {
    pub date: String,
    pub value: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverTimeResponse {
    pub points: Vec<WirePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireState {
    pub geo: String,
    pub value: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ByStateResponse {
    pub states: Vec<WireState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireError {
    pub error: String,
}
