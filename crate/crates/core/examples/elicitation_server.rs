//! Serves the session API on the given port (default 8080).
//!
//! ```text
//! curl -X POST localhost:8080/sessions -H 'content-type: application/json' \
//!      -d '{"labels": ["x", "y", "z"]}'
//! ```

use std::sync::Arc;

use pcm_entropy::service::{serve, SessionStore};

#[tokio::main]
async fn main() -> std::io::Result<()> {
    let port = std::env::args()
        .nth(1)
        .and_then(|p| p.parse().ok())
        .unwrap_or(8080u16);
    serve(([127, 0, 0, 1], port).into(), Arc::new(SessionStore::new())).await
}
