use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ProviderBackend, ProviderError, ProviderRequest, ProviderResponse};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpEndpoint {
    /// Requests go to `<base_url>/<kind>`.
    pub base_url: String,
    #[serde(default = "default_timeout")]
    pub timeout_s: f64,
    /// Environment variable holding a bearer token.
    #[serde(default)]
    pub auth_env: Option<String>,
}

fn default_timeout() -> f64 {
    120.0
}

/// Posts envelopes to a provider endpoint.
pub struct HttpBackend {
    endpoint: HttpEndpoint,
    client: reqwest::blocking::Client,
    token: Option<String>,
}

impl HttpBackend {
    pub fn new(endpoint: HttpEndpoint) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(endpoint.timeout_s.max(0.001)))
            .build()
            .map_err(|e| ProviderError::Config(format!("http client: {e}")))?;
        let token = match &endpoint.auth_env {
            Some(var) => Some(std::env::var(var).map_err(|_| {
                ProviderError::Config(format!("auth token variable `{var}` is not set"))
            })?),
            None => None,
        };
        Ok(HttpBackend {
            endpoint,
            client,
            token,
        })
    }

    pub fn url_for(&self, req: &ProviderRequest) -> String {
        format!(
            "{}/{}",
            self.endpoint.base_url.trim_end_matches('/'),
            req.kind.as_str()
        )
    }
}

impl ProviderBackend for HttpBackend {
    fn call(&self, req: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let transport = |message: String| ProviderError::Transport {
            kind: req.kind,
            message,
        };
        let mut builder = self.client.post(self.url_for(req)).json(req);
        if let Some(token) = &self.token {
            builder = builder.bearer_auth(token);
        }
        let resp = builder.send().map_err(|e| transport(e.to_string()))?;
        let status = resp.status();
        if status.as_u16() == 429 || status.is_server_error() {
            return Err(transport(format!("http {status}")));
        }
        let body = resp.text().map_err(|e| transport(e.to_string()))?;
        match serde_json::from_str::<ProviderResponse>(&body) {
            Ok(envelope) => Ok(envelope),
            Err(_) if !status.is_success() => Err(ProviderError::Remote {
                kind: req.kind,
                message: format!("http {status}: {}", body.chars().take(200).collect::<String>()),
            }),
            Err(e) => Err(ProviderError::InvalidResponse {
                kind: req.kind,
                reason: format!("bad envelope: {e}"),
            }),
        }
    }
}
