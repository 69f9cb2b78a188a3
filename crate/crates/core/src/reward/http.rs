use std::time::Duration;

use super::backend::{BackendError, LogitBackend, LogitRequest, LogitResponse};

/// Environment variable holding the default backend URL.
pub const BACKEND_URL_ENV: &str = "VERBALIGN_BACKEND_URL";

/// Backend reached over HTTP: each request is a JSON `POST` to `url`.
#[derive(Debug)]
pub struct HttpBackend {
    url: String,
    agent: ureq::Agent,
}

impl HttpBackend {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        Self {
            url: url.into(),
            agent,
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl LogitBackend for HttpBackend {
    fn logprobs(&self, request: &LogitRequest) -> Result<LogitResponse, BackendError> {
        let mut response = self.agent.post(&self.url).send_json(request).map_err(|e| match e {
            ureq::Error::StatusCode(code) if (400..500).contains(&code) => {
                BackendError::Protocol(format!("HTTP {code} from {}", self.url))
            }
            other => BackendError::Unavailable(format!("{}: {other}", self.url)),
        })?;
        response
            .body_mut()
            .read_json::<LogitResponse>()
            .map_err(|e| BackendError::Protocol(format!("bad response body: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::thread;

    /// Answers one request with a canned JSON body.
    fn one_shot_server(status: &'static str, body: String) -> (String, thread::JoinHandle<String>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/logprobs", listener.local_addr().unwrap());
        let handle = thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut length = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    length = v.trim().parse().unwrap();
                }
            }
            let mut req = vec![0; length];
            reader.read_exact(&mut req).unwrap();
            let mut stream = stream;
            write!(
                stream,
                "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            )
            .unwrap();
            String::from_utf8(req).unwrap()
        });
        (url, handle)
    }

    #[test]
    fn round_trip_over_http() {
        let body = r#"{"id":"q","tokens":["hi"],"logprobs":[-0.25],"offsets":[0]}"#.to_string();
        let (url, server) = one_shot_server("200 OK", body);
        let backend = HttpBackend::new(url, Duration::from_secs(5));
        let resp = backend.logprobs(&LogitRequest::new("q", "hi")).unwrap();
        assert_eq!(resp.logprobs, [-0.25]);
        let sent: LogitRequest = serde_json::from_str(&server.join().unwrap()).unwrap();
        assert_eq!(sent, LogitRequest::new("q", "hi"));
    }

    #[test]
    fn client_error_is_protocol() {
        let (url, server) = one_shot_server("400 Bad Request", "{}".into());
        let backend = HttpBackend::new(url, Duration::from_secs(5));
        let err = backend.logprobs(&LogitRequest::new("q", "hi")).unwrap_err();
        assert!(matches!(err, BackendError::Protocol(_)), "{err}");
        server.join().unwrap();
    }

    #[test]
    fn closed_port_is_unavailable() {
        let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
        let backend = HttpBackend::new(format!("http://127.0.0.1:{port}/"), Duration::from_secs(2));
        let err = backend.logprobs(&LogitRequest::new("q", "hi")).unwrap_err();
        assert!(matches!(err, BackendError::Unavailable(_)));
    }
}
