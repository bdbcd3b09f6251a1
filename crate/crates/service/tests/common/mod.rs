#![allow(dead_code)]

use std::path::Path;

use narrative_service::{AppState, Config, Store};
use serde_json::{json, Value};
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

/// A service instance on an ephemeral local port.
pub struct Server {
    pub base: String,
    stop: Option<oneshot::Sender<()>>,
    task: Option<JoinHandle<std::io::Result<()>>>,
}

impl Server {
    pub async fn start(store: &Path, keep_failed: bool, static_dir: Option<&Path>) -> Server {
        let (store, _) = Store::open(store, keep_failed).expect("open store");
        let config = Config { static_dir: static_dir.map(Path::to_path_buf), ..Config::default() };
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let base = format!("http://{}", listener.local_addr().unwrap());
        let (stop, rx) = oneshot::channel();
        let task = tokio::spawn(narrative_service::serve(listener, AppState::new(store, config), async {
            let _ = rx.await;
        }));
        Server { base, stop: Some(stop), task: Some(task) }
    }

    pub async fn shutdown(mut self) {
        let _ = self.stop.take().unwrap().send(());
        self.task.take().unwrap().await.unwrap().unwrap();
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }
}

pub async fn post(client: &reqwest::Client, url: &str, body: &Value) -> (u16, Value) {
    let r = client.post(url).json(body).send().await.unwrap();
    let status = r.status().as_u16();
    let v = r.json().await.unwrap_or(Value::Null);
    (status, v)
}

/// Trace sweeping left to right over `[0, duration]` seconds; `offset`
/// shifts it vertically so sessions are distinguishable.
pub fn trace(duration: f64, offset: f64) -> Value {
    let n = (duration / 0.05) as usize;
    let pts: Vec<Value> = (0..=n)
        .map(|k| {
            let t = k as f64 * 0.05;
            json!({"x": (0.1 + 0.8 * t / duration * 1e6).round() / 1e6, "y": offset, "t": (t * 1e6).round() / 1e6})
        })
        .collect();
    json!([pts])
}

/// Word stream for `words`, 0.5 s per word.
pub fn words(words: &[&str]) -> Value {
    Value::Array(
        words
            .iter()
            .enumerate()
            .map(|(k, w)| json!({"utterance": w, "start_time": 0.5 * k as f64, "end_time": 0.5 * k as f64 + 0.4}))
            .collect(),
    )
}

/// Runs create, capture, transcript and finalize; returns the finalize body.
pub async fn full_session(client: &reqwest::Client, server: &Server, image: &str, asr: &[&str], caption: &str, y: f64) -> (u16, Value) {
    let (status, created) = post(client, &server.url("/api/sessions"), &json!({"image_ref": image})).await;
    assert_eq!(status, 201, "{created}");
    let id = created["session_id"].as_str().unwrap().to_string();
    let duration = 0.5 * asr.len().max(1) as f64;
    let (status, v) = post(
        client,
        &server.url(&format!("/api/sessions/{id}/capture")),
        &json!({"trace": trace(duration, y), "automatic_transcript": words(asr)}),
    )
    .await;
    assert_eq!(status, 200, "{v}");
    let (status, v) = post(client, &server.url(&format!("/api/sessions/{id}/transcript")), &json!({"caption": caption})).await;
    assert_eq!(status, 200, "{v}");
    post(client, &server.url(&format!("/api/sessions/{id}/finalize")), &json!({})).await
}

pub async fn list(client: &reqwest::Client, server: &Server, query: &str) -> Vec<Value> {
    let text = client.get(server.url(&format!("/api/narratives{query}"))).send().await.unwrap().text().await.unwrap();
    text.lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}
