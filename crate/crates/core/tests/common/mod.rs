//! Shared fixtures for the integration tests: a local chat-completions stub
//! and small prompt cases.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};

use counteract::llm::PromptCase;
use counteract::mining::{ClassificationRule, Item, MiningConfig};
use counteract::planner::{Directive, Plan, PlanOrigin};
use counteract::preprocess::{DiscretizedData, Interval};

/// One request as seen by the stub.
#[derive(Debug, Clone)]
pub struct Seen {
    pub authorization: Option<String>,
    pub body: serde_json::Value,
}

type Handler = dyn Fn(usize, &Seen) -> (u16, String) + Send + Sync;

/// An HTTP/1.1 server on an ephemeral port answering every request through
/// `handler(request_index, request)`. Lives until the test process exits.
pub struct Stub {
    pub base_url: String,
    pub seen: Arc<Mutex<Vec<Seen>>>,
}

impl Stub {
    pub fn start(handler: impl Fn(usize, &Seen) -> (u16, String) + Send + Sync + 'static) -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let base_url = format!("http://{}", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let handler: Arc<Handler> = Arc::new(handler);
        let log = Arc::clone(&seen);
        std::thread::spawn(move || {
            for stream in listener.incoming().flatten() {
                let handler = Arc::clone(&handler);
                let log = Arc::clone(&log);
                std::thread::spawn(move || serve(stream, &*handler, &log));
            }
        });
        Self { base_url, seen }
    }

    pub fn requests(&self) -> Vec<Seen> {
        self.seen.lock().unwrap().clone()
    }
}

fn serve(stream: TcpStream, handler: &Handler, log: &Mutex<Vec<Seen>>) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut line = String::new();
    if reader.read_line(&mut line).unwrap_or(0) == 0 {
        return;
    }
    let mut headers = BTreeMap::new();
    loop {
        line.clear();
        reader.read_line(&mut line).unwrap();
        let l = line.trim_end();
        if l.is_empty() {
            break;
        }
        if let Some((k, v)) = l.split_once(':') {
            headers.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
        }
    }
    let len: usize = headers.get("content-length").and_then(|v| v.parse().ok()).unwrap_or(0);
    let mut body = vec![0u8; len];
    reader.read_exact(&mut body).unwrap();
    let seen = Seen {
        authorization: headers.get("authorization").cloned(),
        body: serde_json::from_slice(&body).unwrap_or(serde_json::Value::Null),
    };
    let index = {
        let mut log = log.lock().unwrap();
        log.push(seen.clone());
        log.len() - 1
    };
    let (status, text) = handler(index, &seen);
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {status} STUB\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
        text.len()
    );
    let _ = stream.flush();
}

/// A chat-completions body with one choice per content.
pub fn chat_body<S: AsRef<str>>(contents: &[S]) -> String {
    let choices: Vec<_> = contents
        .iter()
        .enumerate()
        .map(|(i, c)| serde_json::json!({"index": i, "message": {"role": "assistant", "content": c.as_ref()}}))
        .collect();
    serde_json::json!({"object": "chat.completion", "choices": choices}).to_string()
}

/// The user message of a request.
pub fn prompt_of(seen: &Seen) -> String {
    seen.body["messages"][0]["content"].as_str().unwrap_or_default().to_string()
}

pub fn requested_n(seen: &Seen) -> usize {
    seen.body["n"].as_u64().unwrap_or(1) as usize
}

/// Replies with `n` copies of the prompt.
pub fn echo(_: usize, seen: &Seen) -> (u16, String) {
    (200, chat_body(&vec![prompt_of(seen); requested_n(seen)]))
}

/// A guided case moving NUMPAR from (0.995, 1.005] into (1.025, 2.005].
pub fn guided_case(id: &str) -> PromptCase {
    let mut directives = BTreeMap::new();
    directives.insert(
        "NUMPAR".to_string(),
        Directive::MoveTo {
            target: Interval::new(1.025, 2.005).unwrap(),
            from: Some(Interval::new(0.995, 1.005).unwrap()),
        },
    );
    directives.insert("LOC".to_string(), Directive::NoChange);
    PromptCase {
        case_id: id.to_string(),
        buggy_code: format!("int f_{id}(int a) {{ return a / 0; }}"),
        commit_message: format!("Fix division in {id}"),
        plan: Some(Plan {
            directives,
            origin: PlanOrigin::planner("counteract"),
        }),
        template: "counteract-v1".to_string(),
    }
}

/// Every antecedent over at most `max_len` distinct features, checked by direct counting.
pub fn brute_force(data: &DiscretizedData, cfg: &MiningConfig) -> Vec<(Vec<Item>, bool, usize, usize)> {
    let d = data.features.len();
    let n = data.len();
    let mut out = Vec::new();
    for mask in 1u32..(1 << d) {
        let feats: Vec<usize> = (0..d).filter(|f| mask & (1 << f) != 0).collect();
        if feats.len() > cfg.max_len {
            continue;
        }
        let combos: usize = feats.iter().map(|&f| data.n_bins[f]).product();
        for mut code in 0..combos {
            let mut items = Vec::new();
            for &f in &feats {
                items.push(Item { feature: f, bin: code % data.n_bins[f] });
                code /= data.n_bins[f];
            }
            for class in [false, true] {
                let ante = data
                    .rows
                    .iter()
                    .filter(|r| items.iter().all(|it| r[it.feature] == it.bin))
                    .count();
                let hits = data
                    .rows
                    .iter()
                    .zip(&data.labels)
                    .filter(|(r, &l)| l == class && items.iter().all(|it| r[it.feature] == it.bin))
                    .count();
                if hits as f64 / n as f64 >= cfg.min_support
                    && hits as f64 / ante as f64 >= cfg.min_confidence
                {
                    out.push((items.clone(), class, hits, ante));
                }
            }
        }
    }
    out.sort();
    out
}

pub fn as_tuples(rules: &[ClassificationRule]) -> Vec<(Vec<Item>, bool, usize, usize)> {
    let mut v: Vec<_> = rules
        .iter()
        .map(|r| (r.antecedent.clone(), r.consequent, r.support_count, r.antecedent_count))
        .collect();
    v.sort();
    v
}
