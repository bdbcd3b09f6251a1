//! HTTP backend for live annotation: an annotator narrates while hovering
//! over an image, types what they said, and the service aligns the two,
//! gates the result and appends it to a corpus file.
//!
//! | method | path | body |
//! |---|---|---|
//! | POST | `/api/sessions` | `{"image_ref", "annotator_id"?}` |
//! | GET | `/api/sessions/{id}` | |
//! | POST | `/api/sessions/{id}/capture` | `{"trace": [[{x,y,t}]], "automatic_transcript": [{utterance,start_time,end_time}]}` |
//! | POST | `/api/sessions/{id}/transcript` | `{"caption"}` |
//! | POST | `/api/sessions/{id}/finalize` | `{"threshold"?}` |
//! | GET | `/api/narratives?image_id=&pass=` | newline-delimited corpus records |
//!
//! Errors are `{"error": "..."}` with 400 (malformed request), 404 (unknown
//! session), 409 (wrong session state) or 422 (invalid trace, pipeline
//! failure).

mod api;
pub mod session;
pub mod store;

pub use api::{router, ApiError, AppState, Config};
pub use store::{LoadReport, Store};

/// Serves `state` on `listener` until `shutdown` resolves.
pub async fn serve(
    listener: tokio::net::TcpListener,
    state: AppState,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}
