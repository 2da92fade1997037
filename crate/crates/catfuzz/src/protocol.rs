//! Line-delimited JSON wire protocol between the engine and a worker.
//!
//! One request per line on the worker's stdin, one response per line on its
//! stdout, exactly one request in flight. A crash is signalled by the worker
//! exiting without answering.

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: u64,
    #[serde(flatten)]
    pub body: RequestBody,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum RequestBody {
    /// `args` are encoded values.
    Invoke { function: String, args: Vec<Json> },
    Ping,
    ListFunctions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: u64,
    #[serde(flatten)]
    pub body: ResponseBody,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result", rename_all = "snake_case")]
pub enum ResponseBody {
    Ok,
    Exception {
        class: String,
        message: String,
    },
    Pong,
    Functions {
        names: Vec<String>,
        /// Parameter counts, parallel to `names`. Optional: harnesses that
        /// omit it need arities on the command line.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        arities: Option<Vec<usize>>,
    },
    /// The request line could not be parsed.
    Error { message: String },
}

/// Exception class a harness reports when argument reconstruction failed
/// before the target was called.
pub const SETUP_ERROR: &str = "SetupError";
pub const UNKNOWN_FUNCTION: &str = "UnknownFunction";

pub fn encode_line<T: Serialize>(msg: &T) -> String {
    let mut line = serde_json::to_string(msg).expect("protocol messages always serialize");
    line.push('\n');
    line
}
