//! Newline-delimited JSON messages exchanged with trainer workers.
//!
//! ```text
//! -> {"op":"hello","version":1}
//! <- {"op":"hello","version":1,"learners":["a","b"]}
//! -> {"op":"train_eval","learner":"a","n":500,"seed":7}
//! <- {"op":"result","learner":"a","n":500,"train_acc":0.9,"val_acc":0.8,"cost_seconds":1.5}
//! -> {"op":"shutdown"}
//! <- {"op":"error","code":"train_failed","message":"..."}
//! ```
//!
//! Unknown fields are ignored on both sides.

use serde::{Deserialize, Serialize};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Request {
    Hello { version: u32 },
    TrainEval { learner: String, n: u64, seed: u64 },
    Shutdown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    TrainFailed,
    BadRequest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Response {
    Hello {
        version: u32,
        learners: Vec<String>,
    },
    Result {
        learner: String,
        n: u64,
        train_acc: f64,
        val_acc: f64,
        cost_seconds: f64,
        /// Optional echo of the request seed.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Error {
        code: ErrorCode,
        message: String,
    },
}

/// Encode as one line (no trailing newline).
pub fn encode<T: Serialize>(msg: &T) -> String {
    serde_json::to_string(msg).expect("protocol messages always serialize")
}

pub fn decode_request(line: &str) -> Result<Request, serde_json::Error> {
    serde_json::from_str(line.trim_end())
}

pub fn decode_response(line: &str) -> Result<Response, serde_json::Error> {
    serde_json::from_str(line.trim_end())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn requests_encode_exactly() {
        assert_eq!(
            encode(&Request::Hello { version: 1 }),
            r#"{"op":"hello","version":1}"#
        );
        assert_eq!(
            encode(&Request::TrainEval {
                learner: "rf".into(),
                n: 500,
                seed: 42
            }),
            r#"{"op":"train_eval","learner":"rf","n":500,"seed":42}"#
        );
        assert_eq!(encode(&Request::Shutdown), r#"{"op":"shutdown"}"#);
    }

    #[test]
    fn responses_decode_and_ignore_unknown_fields() {
        let r = decode_response(
            r#"{"op":"result","learner":"rf","n":500,"train_acc":0.9,"val_acc":0.8,"cost_seconds":1.5,"host":"x"}"#,
        )
        .unwrap();
        assert_eq!(
            r,
            Response::Result {
                learner: "rf".into(),
                n: 500,
                train_acc: 0.9,
                val_acc: 0.8,
                cost_seconds: 1.5,
                seed: None
            }
        );
        let e = decode_response(r#"{"op":"error","code":"bad_request","message":"nope"}"#).unwrap();
        assert_eq!(
            e,
            Response::Error {
                code: ErrorCode::BadRequest,
                message: "nope".into()
            }
        );
        assert!(decode_response(r#"{"op":"result","n":1}"#).is_err());
        assert!(decode_response("not json").is_err());
    }

    proptest! {
        #[test]
        fn train_eval_round_trips(name in "[a-zA-Z0-9_.-]{1,24}", n in any::<u64>(), seed in any::<u64>()) {
            let req = Request::TrainEval { learner: name, n, seed };
            prop_assert_eq!(decode_request(&encode(&req)).unwrap(), req);
        }

        #[test]
        fn result_floats_round_trip(t in 0.0f64..=1.0, v in 0.0f64..=1.0, c in 0.0f64..1e6) {
            let resp = Response::Result { learner: "x".into(), n: 3, train_acc: t, val_acc: v, cost_seconds: c, seed: Some(9) };
            prop_assert_eq!(decode_response(&encode(&resp)).unwrap(), resp);
        }
    }
}
