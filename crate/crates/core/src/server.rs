//! Running axum routers on a background thread, and the mock model
//! backends used by tests, examples and offline runs.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tokio::sync::oneshot;

use crate::embedkit::{EmbedRequest, EmbedResponse, EmbeddingBackend, HashEmbedder};
use crate::genclient::{GenError, GenerationRequest, ScriptedBackend};
use crate::nlpmetrics::{ClassifyRequest, ClassifyResponse, LexiconSentiment, SentimentBackend};

/// A router served on its own Tokio runtime. Dropping the handle shuts
/// the server down gracefully.
pub struct ServerHandle {
    addr: SocketAddr,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<std::io::Result<()>>>,
}

impl ServerHandle {
    /// Binds `addr` (port 0 picks a free port) and starts serving.
    pub fn spawn(router: Router, addr: SocketAddr) -> std::io::Result<Self> {
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()?;
        let listener = runtime.block_on(tokio::net::TcpListener::bind(addr))?;
        let addr = listener.local_addr()?;
        let (tx, rx) = oneshot::channel::<()>();
        let thread = std::thread::spawn(move || {
            runtime.block_on(async move {
                axum::serve(listener, router)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await
            })
        });
        Ok(Self {
            addr,
            shutdown: Some(tx),
            thread: Some(thread),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Stops accepting connections and waits for in-flight requests.
    pub fn shutdown(mut self) -> std::io::Result<()> {
        self.stop()
    }

    fn stop(&mut self) -> std::io::Result<()> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        match self.thread.take() {
            Some(t) => t.join().unwrap_or_else(|_| Err(std::io::Error::other("server thread panicked"))),
            None => Ok(()),
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        let _ = self.stop();
    }
}

/// Scripted stand-ins for the generation, embedding and classifier
/// services. Any of the three may be absent, which answers 404.
#[derive(Default)]
pub struct MockBackends {
    pub generate: Option<ScriptedBackend>,
    pub embed: Option<HashEmbedder>,
    pub classify: Option<LexiconSentiment>,
    /// The first this-many `/generate` requests answer 503.
    pub fail_first: usize,
    served: AtomicUsize,
}

impl MockBackends {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_generate(mut self, backend: ScriptedBackend) -> Self {
        self.generate = Some(backend);
        self
    }

    pub fn with_embed(mut self, backend: HashEmbedder) -> Self {
        self.embed = Some(backend);
        self
    }

    pub fn with_classify(mut self, backend: LexiconSentiment) -> Self {
        self.classify = Some(backend);
        self
    }

    pub fn with_fail_first(mut self, n: usize) -> Self {
        self.fail_first = n;
        self
    }

    /// Requests that reached `/generate`, including injected failures.
    pub fn generate_calls(&self) -> usize {
        self.served.load(Ordering::SeqCst)
    }
}

#[derive(Serialize, Deserialize)]
struct TextBody {
    text: String,
}

fn error(status: StatusCode, message: String) -> Response {
    (status, Json(serde_json::json!({ "error": message }))).into_response()
}

async fn generate(State(m): State<Arc<MockBackends>>, Json(req): Json<GenerationRequest>) -> Response {
    let n = m.served.fetch_add(1, Ordering::SeqCst);
    let Some(backend) = &m.generate else {
        return error(StatusCode::NOT_FOUND, "no generation backend".into());
    };
    if n < m.fail_first {
        return error(StatusCode::SERVICE_UNAVAILABLE, "injected failure".into());
    }
    match backend.respond(&req) {
        Ok(text) => Json(TextBody { text }).into_response(),
        Err(GenError::InvalidRequest(e)) => error(StatusCode::BAD_REQUEST, e),
        Err(GenError::MalformedResponse(_)) => "not json".into_response(),
        Err(e) => error(StatusCode::SERVICE_UNAVAILABLE, e.to_string()),
    }
}

async fn embed(State(m): State<Arc<MockBackends>>, Json(req): Json<EmbedRequest>) -> Response {
    let Some(backend) = &m.embed else {
        return error(StatusCode::NOT_FOUND, "no embedding backend".into());
    };
    let texts: Vec<&str> = req.texts.iter().map(String::as_str).collect();
    match backend.embed_raw(&texts) {
        Ok(vectors) => Json(EmbedResponse { vectors }).into_response(),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()),
    }
}

async fn classify(State(m): State<Arc<MockBackends>>, Json(req): Json<ClassifyRequest>) -> Response {
    let Some(backend) = &m.classify else {
        return error(StatusCode::NOT_FOUND, "no classifier".into());
    };
    let texts: Vec<&str> = req.texts.iter().map(String::as_str).collect();
    match backend.classify(&texts) {
        Ok(labels) => Json(ClassifyResponse {
            labels: labels.into_iter().map(|l| l.value).collect(),
        })
        .into_response(),
        Err(e) => error(StatusCode::BAD_REQUEST, e.to_string()),
    }
}

/// `/generate`, `/embed` and `/classify` backed by `mocks`.
pub fn mock_router(mocks: Arc<MockBackends>) -> Router {
    Router::new()
        .route("/generate", post(generate))
        .route("/embed", post(embed))
        .route("/classify", post(classify))
        .with_state(mocks)
}

/// Starts the mock backends on a free loopback port.
pub fn spawn_mock(mocks: Arc<MockBackends>) -> std::io::Result<ServerHandle> {
    ServerHandle::spawn(mock_router(mocks), SocketAddr::from(([127, 0, 0, 1], 0)))
}
