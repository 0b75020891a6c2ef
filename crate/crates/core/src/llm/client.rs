use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::{Error, Result};

/// Anything that can turn a prompt into `n` completions.
pub trait CompletionSource: Sync {
    fn complete(&self, prompt: &str, n: usize) -> Result<Vec<String>>;

    /// Strings that must never reach persisted artifacts.
    fn secrets(&self) -> Vec<String> {
        Vec::new()
    }
}

/// An OpenAI-compatible chat-completions endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EndpointConfig {
    /// Base URL; `/v1/chat/completions` is appended.
    pub base_url: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    pub temperature: f64,
    pub timeout_secs: u64,
    /// Retries after the first attempt on 5xx, 429 and transport failures.
    pub max_retries: u32,
    /// First backoff; doubled after each failed attempt.
    pub backoff_ms: u64,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:8000".into(),
            model: "codellama-7b-instruct".into(),
            api_key_env: "COUNTERACT_LLM_API_KEY".into(),
            temperature: 0.0,
            timeout_secs: 120,
            max_retries: 3,
            backoff_ms: 500,
        }
    }
}

pub struct HttpCompletionSource {
    config: EndpointConfig,
    api_key: String,
    agent: ureq::Agent,
}

impl HttpCompletionSource {
    /// Reads the credential from `config.api_key_env`.
    pub fn from_env(config: EndpointConfig) -> Result<Self> {
        let api_key = std::env::var(&config.api_key_env).map_err(|_| {
            Error::Credential(format!("environment variable `{}` is not set", config.api_key_env))
        })?;
        Ok(Self::new(config, api_key))
    }

    pub fn new(config: EndpointConfig, api_key: String) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build();
        Self { config, api_key, agent }
    }

    pub fn url(&self) -> String {
        format!("{}/v1/chat/completions", self.config.base_url.trim_end_matches('/'))
    }

    fn request_once(&self, prompt: &str, n: usize) -> std::result::Result<Vec<String>, Attempt> {
        let body = json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "n": n,
        });
        let response = self
            .agent
            .post(&self.url())
            .set("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(body);
        let text = match response {
            Ok(r) => r
                .into_string()
                .map_err(|e| Attempt::Retry(format!("reading response body: {e}")))?,
            Err(ureq::Error::Status(code @ (401 | 403), _)) => {
                return Err(Attempt::Fatal(Error::Credential(format!(
                    "endpoint rejected the credential from `{}` (HTTP {code})",
                    self.config.api_key_env
                ))))
            }
            Err(ureq::Error::Status(code, _)) if code == 429 || code >= 500 => {
                return Err(Attempt::Retry(format!("HTTP {code}")))
            }
            Err(ureq::Error::Status(code, r)) => {
                let detail = r.into_string().unwrap_or_default();
                return Err(Attempt::Fatal(Error::Protocol(format!("HTTP {code}: {}", truncate(&detail)))));
            }
            Err(ureq::Error::Transport(t)) => return Err(Attempt::Retry(t.to_string())),
        };
        parse_choices(&text).map_err(Attempt::Fatal)
    }

    fn request(&self, prompt: &str, n: usize) -> Result<Vec<String>> {
        let attempts = self.config.max_retries + 1;
        let mut wait = Duration::from_millis(self.config.backoff_ms);
        let mut last = String::new();
        for attempt in 1..=attempts {
            match self.request_once(prompt, n) {
                Ok(v) => return Ok(v),
                Err(Attempt::Fatal(e)) => return Err(e),
                Err(Attempt::Retry(msg)) => {
                    log::warn!("completion attempt {attempt}/{attempts} failed: {msg}");
                    last = msg;
                    if attempt < attempts {
                        std::thread::sleep(wait);
                        wait *= 2;
                    }
                }
            }
        }
        Err(Error::Transient {
            attempts,
            message: last,
        })
    }
}

enum Attempt {
    Retry(String),
    Fatal(Error),
}

fn truncate(s: &str) -> String {
    s.chars().take(200).collect()
}

/// `choices[].message.content` of a chat-completions response.
pub fn parse_choices(text: &str) -> Result<Vec<String>> {
    let v: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::Protocol(format!("response is not JSON ({e}): {}", truncate(text))))?;
    let choices = v
        .get("choices")
        .and_then(|c| c.as_array())
        .ok_or_else(|| Error::Protocol("response has no `choices` array".into()))?;
    choices
        .iter()
        .map(|c| {
            c.pointer("/message/content")
                .and_then(|m| m.as_str())
                .map(str::to_owned)
                .ok_or_else(|| Error::Protocol("choice without `message.content`".into()))
        })
        .collect()
}

impl CompletionSource for HttpCompletionSource {
    /// Requests `n` choices, repeating the call if the server returns fewer.
    fn complete(&self, prompt: &str, n: usize) -> Result<Vec<String>> {
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let got = self.request(prompt, n - out.len())?;
            if got.is_empty() {
                return Err(Error::Protocol("response has no choices".into()));
            }
            out.extend(got);
        }
        out.truncate(n);
        Ok(out)
    }

    fn secrets(&self) -> Vec<String> {
        vec![self.api_key.clone()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn choices_are_extracted() {
        let body = r#"{"choices":[{"message":{"role":"assistant","content":"a"}},{"message":{"content":"b"}}]}"#;
        assert_eq!(parse_choices(body).unwrap(), ["a", "b"]);
        assert!(matches!(parse_choices("<html>"), Err(Error::Protocol(_))));
        assert!(matches!(parse_choices("{}"), Err(Error::Protocol(_))));
    }

    #[test]
    fn missing_credential_names_the_variable() {
        let cfg = EndpointConfig {
            api_key_env: "COUNTERACT_TEST_UNSET_VARIABLE".into(),
            ..EndpointConfig::default()
        };
        let e = HttpCompletionSource::from_env(cfg).err().unwrap();
        assert!(matches!(e, Error::Credential(ref m) if m.contains("COUNTERACT_TEST_UNSET_VARIABLE")));
    }
}
