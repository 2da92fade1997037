//! Wire-protocol server for the synthetic suite.
//!
//! Besides the targets it answers a few fault-injection functions that are
//! not listed by `list_functions`: `__abort`, `__exit` (argument: exit
//! code), `__exit_clean`, `__hang`, `__garbage` and `__sleep` (argument:
//! milliseconds).

use std::io::{BufRead, Write};
use std::time::Duration;

use catfuzz_core::Value;

use super::objects::{materialize, Obj};
use super::targets::{self, Fault};
use crate::protocol::{encode_line, Request, RequestBody, Response, ResponseBody, SETUP_ERROR, UNKNOWN_FUNCTION};

fn planted_abort(id: &str) -> ! {
    eprintln!("planted: {id}");
    std::process::abort()
}

fn fault_injection(name: &str, args: &[Obj], out: &mut impl Write) -> Option<ResponseBody> {
    match (name, args) {
        ("__abort", _) => planted_abort("injected"),
        ("__exit", [Obj::Int(code)]) => std::process::exit(*code as i32),
        ("__exit_clean", _) => std::process::exit(0),
        ("__hang", _) => loop {
            std::thread::sleep(Duration::from_secs(3600));
        },
        ("__garbage", _) => {
            let _ = out.write_all(b"this is not json\n");
            let _ = out.flush();
            std::process::exit(0)
        }
        ("__sleep", [Obj::Int(ms)]) => {
            std::thread::sleep(Duration::from_millis((*ms).max(0) as u64));
            Some(ResponseBody::Ok)
        }
        _ => None,
    }
}

fn invoke(function: &str, args: &[serde_json::Value], out: &mut impl Write) -> ResponseBody {
    let mut objs = Vec::with_capacity(args.len());
    for a in args {
        let built = Value::from_json(a)
            .map_err(|e| e.to_string())
            .and_then(|v| materialize(&v).map_err(|f| f.0));
        match built {
            Ok(o) => objs.push(o),
            Err(message) => {
                return ResponseBody::Exception {
                    class: SETUP_ERROR.into(),
                    message,
                }
            }
        }
    }
    if let Some(r) = fault_injection(function, &objs, out) {
        return r;
    }
    match targets::call(function, &objs) {
        None => ResponseBody::Exception {
            class: UNKNOWN_FUNCTION.into(),
            message: function.into(),
        },
        Some(Ok(())) => ResponseBody::Ok,
        Some(Err(Fault::Raise(r))) => ResponseBody::Exception {
            class: r.class.into(),
            message: r.message,
        },
        Some(Err(Fault::Abort(id))) => planted_abort(id),
    }
}

/// Serves requests until stdin closes.
pub fn serve(input: impl BufRead, mut out: impl Write) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = match serde_json::from_str::<Request>(&line) {
            Err(e) => Response {
                id: serde_json::from_str::<serde_json::Value>(&line)
                    .ok()
                    .and_then(|j| j.get("id").and_then(|i| i.as_u64()))
                    .unwrap_or(0),
                body: ResponseBody::Error { message: e.to_string() },
            },
            Ok(Request { id, body }) => Response {
                id,
                body: match body {
                    RequestBody::Ping => ResponseBody::Pong,
                    RequestBody::ListFunctions => ResponseBody::Functions {
                        names: targets::NAMES.iter().map(|s| s.to_string()).collect(),
                        arities: Some(
                            targets::NAMES
                                .iter()
                                .map(|n| targets::arity(n).expect("listed"))
                                .collect(),
                        ),
                    },
                    RequestBody::Invoke { function, args } => invoke(&function, &args, &mut out),
                },
            },
        };
        out.write_all(encode_line(&response).as_bytes())?;
        out.flush()?;
    }
    Ok(())
}
