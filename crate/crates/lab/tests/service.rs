use std::net::SocketAddr;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use rlif_lab::protocol::{ErrorCode, ServerFrame, ServerMessage, PROTOCOL_VERSION};
use rlif_lab::server::{router, Health, ServeConfig};
use rlif_lab::session::{read_log, SessionConfig};
use tokio::io::{AsyncReadExt, AsyncWriteExt};
use tokio::net::{TcpListener, TcpStream};
use tokio_tungstenite::tungstenite::Message;

async fn spawn(config: ServeConfig) -> SocketAddr {
    let app = router(config).unwrap();
    let listener = TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(async move { axum::serve(listener, app).await.unwrap() });
    addr
}

async fn health(addr: SocketAddr) -> Health {
    let mut stream = TcpStream::connect(addr).await.unwrap();
    stream
        .write_all(b"GET /health HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n")
        .await
        .unwrap();
    let mut response = String::new();
    stream.read_to_string(&mut response).await.unwrap();
    assert!(response.starts_with("HTTP/1.1 200"), "{response}");
    let body = response.split("\r\n\r\n").nth(1).unwrap();
    serde_json::from_str(body).unwrap()
}

type Socket = tokio_tungstenite::WebSocketStream<tokio_tungstenite::MaybeTlsStream<TcpStream>>;

async fn next_frame(ws: &mut Socket) -> ServerFrame {
    loop {
        let msg = tokio::time::timeout(Duration::from_secs(10), ws.next())
            .await
            .expect("server answers")
            .unwrap()
            .unwrap();
        if let Message::Text(text) = msg {
            let frame: ServerFrame = serde_json::from_str(&text).unwrap();
            assert_eq!(frame.v, PROTOCOL_VERSION);
            return frame;
        }
    }
}

async fn send(ws: &mut Socket, text: &str) {
    ws.send(Message::Text(text.into())).await.unwrap();
}

async fn next_error(ws: &mut Socket) -> ErrorCode {
    loop {
        if let ServerMessage::Error { code, .. } = next_frame(ws).await.msg {
            return code;
        }
    }
}

fn slow_session() -> SessionConfig {
    SessionConfig {
        tick_ms: 10_000,
        ..SessionConfig::default()
    }
}

#[tokio::test]
async fn health_reports_version() {
    let addr = spawn(ServeConfig::default()).await;
    let h = health(addr).await;
    assert_eq!(h.status, "ok");
    assert_eq!(h.v, PROTOCOL_VERSION);
    assert_eq!(h.sessions, 0);
}

#[tokio::test]
async fn session_greets_and_rejects_bad_frames() {
    let addr = spawn(ServeConfig {
        session: slow_session(),
        ..ServeConfig::default()
    })
    .await;
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/session")).await.unwrap();
    let ServerMessage::SessionHello { grid, n_actions, .. } = next_frame(&mut ws).await.msg else {
        panic!("first frame is the hello");
    };
    assert_eq!((grid.width, grid.height, n_actions), (6, 6, 4));
    assert!(matches!(next_frame(&mut ws).await.msg, ServerMessage::StateUpdate(_)));
    assert_eq!(health(addr).await.sessions, 1);

    send(&mut ws, "{not json").await;
    assert_eq!(next_error(&mut ws).await, ErrorCode::Malformed);
    send(&mut ws, r#"{"v":9,"type":"release"}"#).await;
    assert_eq!(next_error(&mut ws).await, ErrorCode::UnsupportedVersion);
    send(&mut ws, r#"{"v":1,"type":"release"}"#).await;
    assert_eq!(next_error(&mut ws).await, ErrorCode::NotInControl);

    // the connection survives errors and still serves valid requests
    send(&mut ws, r#"{"v":1,"type":"start_round"}"#).await;
    let ServerMessage::StateUpdate(update) = next_frame(&mut ws).await.msg else {
        panic!("start_round answers with a state update");
    };
    assert_eq!(update.round, 1);
    send(&mut ws, r#"{"v":1,"type":"intervene_start","action":2}"#).await;
    let ServerMessage::StateUpdate(update) = next_frame(&mut ws).await.msg else {
        panic!("intervene_start answers with a state update");
    };
    assert_eq!(update.step, 1);
    assert_eq!(update.last_transition.unwrap().a, 2);
}

#[tokio::test]
async fn closed_sessions_are_logged() {
    let logs = tempfile::tempdir().unwrap();
    let addr = spawn(ServeConfig {
        session: SessionConfig {
            tick_ms: 10,
            ..SessionConfig::default()
        },
        log_dir: Some(logs.path().to_path_buf()),
        ..ServeConfig::default()
    })
    .await;
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/session")).await.unwrap();
    next_frame(&mut ws).await;
    next_frame(&mut ws).await;
    send(&mut ws, r#"{"v":1,"type":"start_round"}"#).await;
    loop {
        if let ServerMessage::RoundEnd { round, .. } = next_frame(&mut ws).await.msg {
            assert_eq!(round, 1);
            break;
        }
    }
    ws.close(None).await.unwrap();

    let path = logs.path().join("session-1.jsonl");
    for _ in 0..100 {
        if path.exists() && health(addr).await.sessions == 0 {
            break;
        }
        tokio::time::sleep(Duration::from_millis(50)).await;
    }
    let log = read_log(std::io::BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
    assert_eq!(log.history.len(), 1);
    assert!(!log.dataset.is_empty());
    let replayed = rlif_lab::session::replay(&log).unwrap();
    assert_eq!(replayed.dataset(), &log.dataset);
    assert_eq!(replayed.history(), log.history.as_slice());
}
