//! Acceptance suite: one PASS/FAIL line per top-level criterion.
//!
//! Runs without the libtest harness so the report lines show up in a plain
//! `cargo test` run. Exits nonzero when any criterion fails.

use std::collections::HashSet;
use std::net::{IpAddr, Ipv4Addr};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vizenv_core::eval::{
    benchmark_flow, bounding_box_iou, endpoint_error, estimate_flow_blockmatch, iou, to_csv, BenchConfig,
    BlockMatchParams, GrayImage, Mask,
};
use vizenv_core::math::{Quat, Vec3};
use vizenv_core::motion::{waypoint_pose, World, DEFAULT_DT};
use vizenv_core::protocol::{
    decode_message, encode_message, frame_overhead, pack_views, unpack_views, Compression, ErrorCode, Handshake,
    Request, Response, WireMessage,
};
use vizenv_core::render::{
    depth_byte, project, rasterize, render_depth, render_views, CameraFrame, CameraIntrinsics, FlowField, FrameViews,
    ViewKind, ViewMask,
};
use vizenv_core::scene::{builtin_scene, Kinematics, MoverConfig, Pose, Scene, Snapshot};
use vizenv_server::client::Client;
use vizenv_server::{start, ServerConfig, ServerHandle};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("ground-truth flow correctness", flow_correctness),
        ("estimator foil on the rotating cube", estimator_foil),
        ("flow cost ordering and scaling", flow_cost_ordering),
        ("view encodings", view_encodings),
        ("protocol robustness", protocol_robustness),
        ("waypoint controller", waypoint_controller),
        ("depth contract", depth_contract),
        ("iou metrics", metrics),
        ("end-to-end liveness", liveness),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or(p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{}] {name}: {detail} ({secs:.1} s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{}] {name}: {detail} ({secs:.1} s)", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------------------
// shared helpers

fn local_server(tick_rate: f64, seed: u64) -> ServerHandle {
    start(ServerConfig { bind: IpAddr::V4(Ipv4Addr::LOCALHOST), port: 0, tick_rate, seed, ..Default::default() })
        .expect("server starts")
}

fn scene_index(name: &str) -> u8 {
    vizenv_core::scene::builtin_scene_names().iter().position(|n| *n == name).expect("built-in") as u8
}

/// Rigid motion of `pose` over `dt` under constant linear and world-frame
/// angular velocity.
fn advance(k: &Kinematics, dt: f64) -> Pose {
    Pose::new(
        k.pose.position + k.linear_velocity * dt,
        (Quat::from_rotation_vector(k.angular_velocity * dt) * k.pose.orientation).normalized(),
    )
}

/// Finite-difference oracle: every covered pixel's surface point is carried
/// rigidly with its object for `dt`, the camera likewise, and both positions
/// are projected. Returns the displacement field in pixels over `dt`.
#[allow(clippy::needless_range_loop)]
fn oracle_displacement(snap: &Snapshot, camera: &Kinematics, intr: &CameraIntrinsics, dt: f64) -> (FlowField, Mask) {
    let g = rasterize(snap, &camera.pose, intr);
    let frame0 = CameraFrame::new(&camera.pose);
    let frame1 = CameraFrame::new(&advance(camera, dt));
    let mut out = FlowField::zeros(intr.width, intr.height);
    let mut mask = vec![false; intr.pixel_count()];
    let w = intr.width as usize;
    for i in 0..intr.pixel_count() {
        if !g.is_covered(i) {
            continue;
        }
        let body = snap.object_kinematics(g.object_index[i] as usize);
        let world = frame0.to_world(g.point[i]);
        let local = body.pose.inverse_transform_point(world);
        let moved = advance(&body, dt).transform_point(local);
        let (u0, v0) = ((i % w) as f64 + 0.5, (i / w) as f64 + 0.5);
        let Ok((u1, v1)) = project(frame1.to_camera(moved), intr) else { continue };
        out.data[2 * i] = (u1 - u0) as f32;
        out.data[2 * i + 1] = (v1 - v0) as f32;
        mask[i] = true;
    }
    (out, Mask::new(intr.width, intr.height, mask).expect("sized"))
}

fn world_at(scene: &Arc<Scene>, seed: u64, tick: u64) -> World {
    let mut w = World::new(scene.clone(), seed, DEFAULT_DT).expect("world");
    while w.tick() < tick {
        w.step();
    }
    w
}

// ---------------------------------------------------------------------------
// [1]

fn flow_correctness() -> Outcome {
    let dt = 1e-3;
    let scene = Arc::new(builtin_scene("optical").map_err(err)?);
    let intr = CameraIntrinsics::for_camera(&scene.camera, 128, 96).map_err(err)?;
    let mut worst: f64 = 0.0;
    let mut covered = 0;
    for tick in [0, 37, 240, 555] {
        let snap = world_at(&scene, 7, tick).snapshot();
        let camera = snap.mover();
        let v = render_views(&snap, &camera, &intr, ViewMask::only(ViewKind::Flow)).map_err(err)?;
        let analytic = v.flow.expect("flow").scaled(dt as f32);
        let (oracle, mask) = oracle_displacement(&snap, &camera, &intr, dt);
        check(mask.count() > 500, || format!("only {} covered pixels at tick {tick}", mask.count()))?;
        let e = endpoint_error(&analytic, &oracle, Some(&mask)).map_err(err)?;
        covered += e.count;
        worst = worst.max(e.median);
    }
    check(worst < 0.1, || format!("median EPE {worst:.3e} px ≥ 0.1"))?;

    // a static scene seen by a static camera has exactly zero flow
    let still = Arc::new(builtin_scene("still_life").map_err(err)?);
    let snap = world_at(&still, 7, 90).snapshot();
    let intr_s = CameraIntrinsics::for_camera(&still.camera, 128, 96).map_err(err)?;
    let v = render_views(&snap, &snap.mover(), &intr_s, ViewMask::ALL).map_err(err)?;
    let flow = v.flow.expect("flow");
    check(flow.data.iter().all(|&x| x == 0.0), || "static scene has nonzero flow".into())?;
    check(v.depth.expect("depth").iter().any(|&d| d > 0), || "static scene renders nothing".into())?;
    Ok(format!("worst per-frame median EPE {worst:.2e} px over {covered} pixels (Δt = 1e-3 s); static flow exactly 0"))
}

// ---------------------------------------------------------------------------
// [2]

fn estimator_foil() -> Outcome {
    let scene = Arc::new(builtin_scene("cube").map_err(err)?);
    let intr = CameraIntrinsics::for_camera(&scene.camera, 128, 96).map_err(err)?;
    let params = BlockMatchParams::default();
    let mut bm_medians = Vec::new();
    let mut oracle_medians = Vec::new();
    for tick in [10, 100, 200] {
        let w0 = world_at(&scene, 3, tick);
        let mut w1 = w0.clone();
        w1.step();
        let (s0, s1) = (w0.snapshot(), w1.snapshot());
        let camera = s0.mover();
        let v0 = render_views(&s0, &camera, &intr, ViewMask::ALL).map_err(err)?;
        let v1 = render_views(&s1, &s1.mover(), &intr, ViewMask::only(ViewKind::Main)).map_err(err)?;
        let per_frame = v0.flow.expect("flow").scaled(DEFAULT_DT as f32);
        let cube_id = scene.objects[0].instance_id;
        let mask = Mask::from_instance_view(v0.object.as_ref().expect("object"), 128, 96, cube_id).map_err(err)?;
        check(mask.count() > 300, || format!("cube covers only {} pixels", mask.count()))?;

        let a = GrayImage::from_bgr(v0.main.as_ref().expect("main"), 128, 96).map_err(err)?;
        let b = GrayImage::from_bgr(v1.main.as_ref().expect("main"), 128, 96).map_err(err)?;
        let estimate = estimate_flow_blockmatch(&a, &b, &params).map_err(err)?;
        bm_medians.push(endpoint_error(&estimate, &per_frame, Some(&mask)).map_err(err)?.median);

        let (oracle, oracle_mask) = oracle_displacement(&s0, &camera, &intr, DEFAULT_DT);
        let both = Mask::new(128, 96, mask.data.iter().zip(&oracle_mask.data).map(|(a, b)| *a && *b).collect())
            .map_err(err)?;
        oracle_medians.push(endpoint_error(&per_frame, &oracle, Some(&both)).map_err(err)?.median);
    }
    let bm = bm_medians.iter().sum::<f64>() / bm_medians.len() as f64;
    let analytic = oracle_medians.iter().sum::<f64>() / oracle_medians.len() as f64;
    check(bm > 0.0 && bm >= 10.0 * analytic, || format!("block matching {bm:.3e} px vs analytic {analytic:.3e} px"))?;
    let worst_analytic = oracle_medians.iter().cloned().fold(0.0, f64::max);
    check(worst_analytic < 0.05, || format!("analytic vs oracle {worst_analytic:.3e} px/frame ≥ 0.05"))?;
    let ratio = if analytic > 0.0 { format!("{:.0}x", bm / analytic) } else { "unbounded".into() };
    Ok(format!("block-match median EPE {bm:.3} px/frame vs analytic {analytic:.2e} px/frame (ratio {ratio})"))
}

// ---------------------------------------------------------------------------
// [3]

fn flow_cost_ordering() -> Outcome {
    let scene = Arc::new(builtin_scene("optical").map_err(err)?);
    let cfg = BenchConfig::default();
    let records = benchmark_flow(scene, &cfg).map_err(err)?;
    check(records.len() == 12, || format!("{} records", records.len()))?;
    let csv = to_csv(&records);
    let path = std::env::temp_dir().join("vizenv_acceptance_bench.csv");
    std::fs::write(&path, &csv).map_err(err)?;

    let mean = |w: u32, h: u32, method: &str| {
        records.iter().find(|r| (r.width, r.height) == (w, h) && r.method == method).map(|r| r.mean_s)
    };
    let mut speedups = Vec::new();
    for &(w, h) in &cfg.resolutions {
        let (e, b) = (mean(w, h, "engine_flow").ok_or("missing")?, mean(w, h, "block_matching").ok_or("missing")?);
        check(e < b, || format!("{w}x{h}: engine {e:.3e} s not faster than block matching {b:.3e} s"))?;
        speedups.push(b / e);
    }
    let mut scaling = Vec::new();
    for ((w, h), (w2, h2)) in [((160, 120), (320, 240)), ((256, 192), (512, 384)), ((320, 240), (640, 480))] {
        let f = mean(w2, h2, "engine_flow").ok_or("missing")? / mean(w, h, "engine_flow").ok_or("missing")?;
        check(f <= 6.0, || format!("engine time grew {f:.2}x from {w}x{h} to {w2}x{h2}"))?;
        scaling.push(f);
    }
    let min_speedup = speedups.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(format!(
        "engine faster at all 6 resolutions (min speedup {min_speedup:.1}x, n = {}); 4x pixels => {} time; CSV at {}",
        cfg.samples,
        scaling.iter().map(|f| format!("{f:.2}x")).collect::<Vec<_>>().join("/"),
        path.display()
    ))
}

// ---------------------------------------------------------------------------
// [4]

fn view_encodings() -> Outcome {
    let (w, h) = (96u32, 72u32);
    let seed = 11;
    let optical = scene_index("optical");
    let mut frames: Vec<FrameViews> = Vec::new();
    let mut raw_packed = Vec::new();
    for _run in 0..2 {
        let server = local_server(0.001, seed);
        for compression in [Compression::Raw, Compression::Gzip] {
            let mut c = Client::connect(server.local_addr()).map_err(err)?;
            c.register(Handshake::new(w, h, ViewMask::ALL, compression)).map_err(err)?;
            c.change_scene(optical).map_err(err)?;
            let packed = c.get_frame_raw().map_err(err)?;
            if compression == Compression::Raw {
                raw_packed.push(packed.clone());
            }
            frames.push(unpack_views(&packed, w, h).map_err(err)?);
            c.delete().map_err(err)?;
        }
    }
    check(frames.windows(2).all(|p| p[0] == p[1]), || "frames differ across runs or compression modes".into())?;
    check(raw_packed[0] == raw_packed[1], || "raw wire bytes differ across runs".into())?;

    // reference: the same scene and seed rendered in-process
    let scene = Arc::new(builtin_scene("optical").map_err(err)?);
    let snap = World::new(scene.clone(), seed, DEFAULT_DT).map_err(err)?.snapshot();
    let intr = CameraIntrinsics::for_camera(&scene.camera, w, h).map_err(err)?;
    let reference = render_views(&snap, &snap.mover(), &intr, ViewMask::ALL).map_err(err)?;
    check(frames[0] == reference, || "served frame differs from the in-process render".into())?;

    let f = &frames[0];
    let n = (w * h) as usize;
    let shapes = [
        f.main.as_ref().map(Vec::len) == Some(3 * n),
        f.category.as_ref().map(Vec::len) == Some(n),
        f.object.as_ref().map(Vec::len) == Some(3 * n),
        f.flow.as_ref().map(|x| x.data.len()) == Some(2 * n),
        f.depth.as_ref().map(Vec::len) == Some(n),
    ];
    check(shapes.iter().all(|&s| s), || format!("wrong shapes {shapes:?}"))?;
    Ok(format!("4 sessions over 2 server runs (raw and gzip) byte-identical to the in-process render at {w}x{h}"))
}

// ---------------------------------------------------------------------------
// [5]

const CHARS: &[char] = &['a', 'Z', '0', '_', ' ', 'é', 'ß', '→', '日', '🙂'];

fn random_string(rng: &mut ChaCha8Rng) -> String {
    (0..rng.gen_range(0..12)).map(|_| CHARS[rng.gen_range(0..CHARS.len())]).collect()
}

fn random_f32(rng: &mut ChaCha8Rng) -> f32 {
    loop {
        let v = f32::from_bits(rng.gen());
        if !v.is_nan() {
            return v;
        }
    }
}

fn random_request(rng: &mut ChaCha8Rng) -> Request {
    let v3 = |rng: &mut ChaCha8Rng| [random_f32(rng), random_f32(rng), random_f32(rng)];
    match rng.gen_range(0..7) {
        0 => Request::Register(Handshake::new(
            rng.gen_range(1..=1024),
            rng.gen_range(1..=768),
            ViewMask(rng.gen_range(1..32)),
            if rng.gen() { Compression::Gzip } else { Compression::Raw },
        )),
        1 => Request::ChangeScene(rng.gen()),
        2 => Request::GetFrame,
        3 => Request::SetPosition(v3(rng)),
        4 => Request::SetRotation(v3(rng)),
        5 => Request::ToggleFollow,
        _ => Request::Delete,
    }
}

fn random_response(rng: &mut ChaCha8Rng) -> Response {
    let table = |rng: &mut ChaCha8Rng| (0..rng.gen_range(0..6)).map(|_| (rng.gen(), random_string(rng))).collect();
    match rng.gen_range(0..8) {
        0 => Response::Registered {
            agent_id: rng.gen(),
            scenes: (0..rng.gen_range(0..6)).map(|_| random_string(rng)).collect(),
            categories: table(rng),
        },
        1 => Response::SceneChanged(table(rng)),
        2 => Response::Frame((0..rng.gen_range(0..64)).map(|_| rng.gen()).collect()),
        3 => Response::PositionSet,
        4 => Response::RotationSet,
        5 => Response::FollowToggled(rng.gen()),
        6 => Response::Deleted,
        _ => Response::Error {
            code: [ErrorCode::BadRequest, ErrorCode::UnknownScene, ErrorCode::Internal][rng.gen_range(0..3)],
            message: random_string(rng),
        },
    }
}

fn random_views(rng: &mut ChaCha8Rng) -> FrameViews {
    let (w, h) = (rng.gen_range(1..10u32), rng.gen_range(1..10u32));
    let n = (w * h) as usize;
    let mask = ViewMask(rng.gen_range(0..32));
    let mut bytes = |len: usize, kind: ViewKind| {
        mask.contains(kind).then(|| (0..len).map(|_| rng.gen::<u8>()).collect::<Vec<u8>>())
    };
    let main = bytes(3 * n, ViewKind::Main);
    let category = bytes(n, ViewKind::Category);
    let object = bytes(3 * n, ViewKind::Object);
    let depth = bytes(n, ViewKind::Depth);
    let flow = mask
        .contains(ViewKind::Flow)
        .then(|| FlowField { width: w, height: h, data: (0..2 * n).map(|_| random_f32(rng)).collect() });
    FrameViews { width: w, height: h, main, category, object, flow, depth }
}

/// Truncating `bytes` anywhere must yield a truncation error.
fn truncations_fail(bytes: &[u8], rng: &mut ChaCha8Rng) -> Result<(), String> {
    let cuts: Vec<usize> = if bytes.len() <= 40 {
        (0..bytes.len()).collect()
    } else {
        (0..8).map(|_| rng.gen_range(0..bytes.len())).collect()
    };
    for cut in cuts {
        match decode_message(&bytes[..cut]) {
            Err(e) if e.is_truncation() => {}
            other => return Err(format!("cut at {cut}/{}: {other:?}", bytes.len())),
        }
    }
    Ok(())
}

fn protocol_robustness() -> Outcome {
    const CASES: usize = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5A11);
    for i in 0..CASES {
        let req = random_request(&mut rng);
        let msg = req.to_message();
        let bytes = encode_message(msg.opcode, &msg.body).map_err(err)?;
        let (decoded, used) = decode_message(&bytes).map_err(err)?;
        check(used == bytes.len(), || format!("request case {i}: consumed {used}"))?;
        let back = Request::from_message(&decoded).map_err(|e| format!("request case {i}: {e}"))?;
        check(back == req, || format!("request case {i}: {req:?} -> {back:?}"))?;
        truncations_fail(&bytes, &mut rng)?;
        for cut in 0..msg.body.len() {
            // shortened bodies never decode to a request
            check(Request::from_message(&WireMessage::new(msg.opcode, msg.body[..cut].to_vec())).is_err(), || {
                format!("request case {i}: body cut at {cut} decoded")
            })?;
        }

        let resp = random_response(&mut rng);
        let msg = resp.to_message().map_err(err)?;
        let bytes = encode_message(msg.opcode, &msg.body).map_err(err)?;
        let back = Response::from_message(&decode_message(&bytes).map_err(err)?.0).map_err(err)?;
        check(back == resp, || format!("response case {i}: {resp:?} -> {back:?}"))?;
        truncations_fail(&bytes, &mut rng)?;

        let views = random_views(&mut rng);
        let n = views.mask().kinds().count();
        for compression in [Compression::Raw, Compression::Gzip] {
            let packed = pack_views(&views, compression).map_err(err)?;
            let unpacked = unpack_views(&packed, views.width, views.height).map_err(err)?;
            let same_bits = |a: &FrameViews, b: &FrameViews| {
                let bits = |f: &FrameViews| f.flow.as_ref().map(|x| x.data.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
                a.main == b.main && a.category == b.category && a.object == b.object && a.depth == b.depth && bits(a) == bits(b)
            };
            check(same_bits(&unpacked, &views), || format!("views case {i} ({compression:?}) changed"))?;
            let overhead = frame_overhead(&packed).map_err(err)?;
            check(overhead <= 1 + 14 * n, || format!("overhead {overhead} > 1 + 14·{n}"))?;
            let cut = rng.gen_range(0..packed.len());
            check(unpack_views(&packed[..cut], views.width, views.height).is_err(), || {
                format!("views case {i}: truncated pack decoded")
            })?;
        }
    }

    // overhead on real frames for every view subset
    let server = local_server(0.001, 0);
    let mut worst = 0.0f64;
    for mask in 1u8..32 {
        let mut c = Client::connect(server.local_addr()).map_err(err)?;
        c.register(Handshake::new(64, 48, ViewMask(mask), Compression::Gzip)).map_err(err)?;
        let packed = c.get_frame_raw().map_err(err)?;
        let n = ViewMask(mask).kinds().count();
        let overhead = frame_overhead(&packed).map_err(err)?;
        check(overhead <= 1 + 14 * n, || format!("served frame overhead {overhead} > 1 + 14·{n}"))?;
        worst = worst.max(overhead as f64 / (1 + 14 * n) as f64);
        c.delete().map_err(err)?;
    }
    Ok(format!(
        "{CASES} request, {CASES} response and {CASES} view-pack cases round-trip; all truncations rejected; \
         overhead 1 + 10·n bytes (≤ {:.0}% of the 1 + 14·n budget)",
        worst * 100.0
    ))
}

// ---------------------------------------------------------------------------
// [6]

/// Straight-from-the-definition interpolation over equal-length segments.
fn hand_pose(cfg: &MoverConfig, t: f64) -> (Vec3, Quat) {
    let n = cfg.waypoints.len();
    let seg = cfg.total_time / n as f64;
    let t = t.rem_euclid(cfg.total_time);
    let k = ((t / seg).floor() as usize).min(n - 1);
    let s = (t - k as f64 * seg) / seg;
    let (a, b) = (cfg.waypoints[k], cfg.waypoints[(k + 1) % n]);
    let p = a.position + (b.position - a.position) * s;
    let qa = a.orientation;
    let mut qb = b.orientation;
    if qa.dot(qb) < 0.0 {
        qb = -qb;
    }
    (p, (qa * (1.0 - s) + qb * s).normalized())
}

fn waypoint_controller() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut worst_p: f64 = 0.0;
    let mut worst_q: f64 = 0.0;
    let mut worst_wrap: f64 = 0.0;
    for _ in 0..25 {
        let waypoints = (0..3)
            .map(|_| {
                Pose::from_euler_deg(
                    Vec3::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)),
                    [rng.gen_range(-180.0..180.0), rng.gen_range(-180.0..180.0), rng.gen_range(-180.0..180.0)],
                )
            })
            .collect();
        let cfg = MoverConfig { waypoints, total_time: rng.gen_range(1.0..30.0) };
        for _ in 0..20 {
            let t = rng.gen_range(0.0..cfg.total_time * 2.0);
            let got = waypoint_pose(&cfg, t);
            let (p, q) = hand_pose(&cfg, t);
            worst_p = worst_p.max((got.position - p).norm());
            worst_q = worst_q.max(1.0 - got.orientation.dot(q).abs());
        }
        let eps = 1e-9;
        let before = waypoint_pose(&cfg, cfg.total_time - eps);
        let at = waypoint_pose(&cfg, 0.0);
        let after = waypoint_pose(&cfg, cfg.total_time + eps);
        worst_wrap = worst_wrap.max((before.position - at.position).norm()).max((after.position - at.position).norm());
        check((at.position - cfg.waypoints[0].position).norm() < 1e-12, || "t = 0 is not the first waypoint".into())?;
    }
    check(worst_p < 1e-6, || format!("position error {worst_p:.3e} m"))?;
    check(worst_q < 1e-9, || format!("orientation error {worst_q:.3e}"))?;
    check(worst_wrap < 1e-6, || format!("wrap discontinuity {worst_wrap:.3e} m"))?;
    Ok(format!(
        "25 configs x 20 probes: max position error {worst_p:.1e} m, wrap jump {worst_wrap:.1e} m"
    ))
}

// ---------------------------------------------------------------------------
// [7]

fn depth_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (near, far) = (0.1, 20.0);
    check(depth_byte(near, near, far) == 255 && depth_byte(far, near, far) == 0, || "endpoints wrong".into())?;

    // covered pixels from real renders of the room from random viewpoints
    let scene = Arc::new(builtin_scene("room_simple").map_err(err)?);
    let snap = World::new(scene.clone(), 0, DEFAULT_DT).map_err(err)?.snapshot();
    let intr = CameraIntrinsics::from_fov(64, 48, 70.0, near, far).map_err(err)?;
    let mut samples: Vec<(f64, u8)> = Vec::new();
    for _ in 0..10 {
        let pose = Pose::from_euler_deg(
            Vec3::new(rng.gen_range(-2.0..2.0), rng.gen_range(0.5..2.0), rng.gen_range(-2.0..2.0)),
            [rng.gen_range(-30.0..10.0), rng.gen_range(-180.0..180.0), 0.0],
        );
        let g = rasterize(&snap, &pose, &intr);
        let depth = render_depth(&g, near, far);
        samples.extend((0..g.instance_id.len()).filter(|&i| g.is_covered(i)).map(|i| (g.point[i].z, depth[i])));
    }
    check(samples.len() > 1000, || format!("only {} covered pixels", samples.len()))?;
    for _ in 0..1000 {
        let (a, b) = (samples[rng.gen_range(0..samples.len())], samples[rng.gen_range(0..samples.len())]);
        let (near_one, far_one) = if a.0 < b.0 { (a, b) } else { (b, a) };
        check(near_one.1 >= far_one.1, || format!("Z {} -> {} but Z {} -> {}", near_one.0, near_one.1, far_one.0, far_one.1))?;
        check(near_one.0 >= near && far_one.0 <= far, || "covered depth outside [near, far]".into())?;
    }
    // and synthetic pairs spanning the whole range
    for _ in 0..1000 {
        let (za, zb) = (rng.gen_range(near..=far), rng.gen_range(near..=far));
        let (lo, hi) = if za < zb { (za, zb) } else { (zb, za) };
        check(depth_byte(lo, near, far) >= depth_byte(hi, near, far), || format!("{lo} vs {hi}"))?;
    }
    Ok(format!("near -> 255, far -> 0, monotone over 1000 rendered and 1000 synthetic pairs ({} pixels)", samples.len()))
}

// ---------------------------------------------------------------------------
// [8]

fn metrics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..100 {
        // mix of densities, including empty masks
        let density = [0.0, 0.02, 0.3, 0.7][case % 4];
        let random_mask = |rng: &mut ChaCha8Rng| {
            let data: Vec<bool> = (0..32 * 32).map(|_| rng.gen_bool(density)).collect();
            Mask::new(32, 32, data).expect("sized")
        };
        let (a, b) = (random_mask(&mut rng), random_mask(&mut rng));
        let set = |m: &Mask| -> HashSet<(u32, u32)> {
            (0..32u32).flat_map(|y| (0..32u32).map(move |x| (x, y))).filter(|&(x, y)| m.data[(y * 32 + x) as usize]).collect()
        };
        let (sa, sb) = (set(&a), set(&b));
        let union = sa.union(&sb).count();
        let expect_iou = if union == 0 { 1.0 } else { sa.intersection(&sb).count() as f64 / union as f64 };
        let got = iou(&a, &b).map_err(err)?;
        check(got == expect_iou, || format!("case {case}: iou {got} vs {expect_iou}"))?;
        check(iou(&b, &a).map_err(err)? == got, || format!("case {case}: iou not symmetric"))?;

        let bbox_set = |s: &HashSet<(u32, u32)>| -> Option<HashSet<(u32, u32)>> {
            let x0 = s.iter().map(|p| p.0).min()?;
            let x1 = s.iter().map(|p| p.0).max()?;
            let y0 = s.iter().map(|p| p.1).min()?;
            let y1 = s.iter().map(|p| p.1).max()?;
            Some((y0..=y1).flat_map(|y| (x0..=x1).map(move |x| (x, y))).collect())
        };
        let expect_bbox = match (bbox_set(&sa), bbox_set(&sb)) {
            (None, None) => 1.0,
            (None, _) | (_, None) => 0.0,
            (Some(p), Some(q)) => p.intersection(&q).count() as f64 / p.union(&q).count() as f64,
        };
        let got = bounding_box_iou(&a, &b).map_err(err)?;
        check(got == expect_bbox, || format!("case {case}: bbox iou {got} vs {expect_bbox}"))?;
    }
    Ok("iou and bounding_box_iou equal brute-force set counts on 100 random 32x32 pairs".into())
}

// ---------------------------------------------------------------------------
// [9]

fn liveness() -> Outcome {
    let server = local_server(60.0, 0);
    let start = Instant::now();
    let mut c = Client::connect(server.local_addr()).map_err(err)?;
    c.register(Handshake::new(256, 192, ViewMask::ALL, Compression::Raw)).map_err(err)?;
    c.change_scene(scene_index("optical")).map_err(err)?;
    let mut bytes = 0usize;
    for _ in 0..100 {
        let v = c.get_frame().map_err(err)?;
        bytes += v.main.map_or(0, |m| m.len());
    }
    c.delete().map_err(err)?;
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    check(bytes == 100 * 256 * 192 * 3, || "short frames".into())?;

    let deadline = Instant::now() + Duration::from_secs(5);
    while (server.live_sessions() > 0 || server.open_connections() > 0 || server.scenes().iter().any(|s| s.is_running()))
        && Instant::now() < deadline
    {
        std::thread::sleep(Duration::from_millis(5));
    }
    check(server.live_sessions() == 0, || format!("{} sessions leaked", server.live_sessions()))?;
    check(server.open_connections() == 0, || format!("{} connections leaked", server.open_connections()))?;
    check(server.scenes().iter().all(|s| !s.is_running()), || "a scene keeps ticking with no agents".into())?;
    Ok(format!("REGISTER, CHANGE_SCENE, 100 GET_FRAME at 256x192 in {:.2} s; no sessions leaked", elapsed.as_secs_f64()))
}
