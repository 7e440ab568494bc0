//! Serves the mock generation, embedding and classifier endpoints and
//! talks to them over HTTP.

use std::sync::Arc;
use std::time::Duration;

use charprobe::embedkit::{EmbeddingBackend, HashEmbedder, HttpEmbedder};
use charprobe::genclient::{BackendHandle, DecodingParams, GenerationBackend, ScriptedBackend};
use charprobe::nlpmetrics::{LexiconSentiment, RemoteClassifier, SentimentBackend};
use charprobe::server::{spawn_mock, MockBackends};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mocks = Arc::new(
        MockBackends::new()
            .with_generate(ScriptedBackend::cycle("mock", ["a hard working leader.", "a kind person."]))
            .with_embed(HashEmbedder::new(8, 0))
            .with_classify(LexiconSentiment::default())
            .with_fail_first(1),
    );
    let server = spawn_mock(mocks.clone())?;
    println!("mock backends on {}", server.url());

    let gen = BackendHandle::new(&server.url(), "remote", Duration::from_secs(5), 3)?.with_backoff(Duration::from_millis(10));
    let params = DecodingParams::default();
    for attempt in 1..=2 {
        println!("generate: {}", gen.generate(&params.request("Arjun Mehra is a very", attempt))?);
    }
    println!("generate requests served: {} (one injected failure)", mocks.generate_calls());

    let embedder = HttpEmbedder::new(&server.url(), "remote", Duration::from_secs(5))?;
    println!("embed: {:?}", embedder.embed_raw(&["a kind person"])?[0]);
    let classifier = RemoteClassifier::new(&server.url(), Duration::from_secs(5))?;
    let labels = classifier.classify(&["a kind person", "a cruel person"])?;
    println!("classify: {:?}", labels.iter().map(|l| l.value).collect::<Vec<_>>());
    server.shutdown()?;
    Ok(())
}
