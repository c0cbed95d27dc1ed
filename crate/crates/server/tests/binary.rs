use std::net::TcpListener;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use vizenv_core::protocol::{Compression, Handshake};
use vizenv_core::render::ViewMask;
use vizenv_server::client::Client;

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

#[test]
fn serve_honours_port_env_var() {
    let port = free_port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_vizenv"))
        .args(["serve", "--bind", "127.0.0.1"])
        .env("VIZENV_PORT", port.to_string())
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let deadline = Instant::now() + Duration::from_secs(10);
    let client = loop {
        match Client::connect(("127.0.0.1", port)) {
            Ok(c) => break Some(c),
            Err(_) if Instant::now() < deadline => std::thread::sleep(Duration::from_millis(20)),
            Err(_) => break None,
        }
    };
    let result = client.map(|mut c| c.register(Handshake::new(16, 12, ViewMask::ALL, Compression::Raw)));
    child.kill().unwrap();
    child.wait().unwrap();
    let reg = result.expect("server reachable").unwrap();
    assert_eq!(reg.scenes.len(), 4);
}

#[test]
fn missing_scene_file_exits_2() {
    let status = Command::new(env!("CARGO_BIN_EXE_vizenv"))
        .args(["serve", "--port", "0", "--scene", "/nonexistent/scene.json"])
        .stderr(Stdio::null())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let status = Command::new(env!("CARGO_BIN_EXE_vizenv")).arg("--bogus").stderr(Stdio::null()).status().unwrap();
    assert_eq!(status.code(), Some(1));
}
