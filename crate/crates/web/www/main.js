import init, { Demo, scene_names } from "./pkg/vizenv_web.js";

await init();

const W = 256, H = 192;
const $ = (id) => document.getElementById(id);
const ctx = $("out").getContext("2d");
let demo, playing = true;

for (const name of scene_names().split("\n")) {
  $("scene").add(new Option(name, name));
}

function load() {
  demo?.free();
  demo = new Demo($("scene").value, W, H);
  $("follow").checked = true;
  $("stats").textContent = "";
}

function draw() {
  const px = demo.render($("view").value);
  ctx.putImageData(new ImageData(new Uint8ClampedArray(px), W, H), 0, 0);
  $("clock").textContent = `t = ${demo.time.toFixed(2)} s`;
  $("follow").checked = demo.follow;
}

function frame() {
  if (playing) demo.step(1);
  draw();
  requestAnimationFrame(frame);
}

$("scene").onchange = load;
$("play").onclick = () => {
  playing = !playing;
  $("play").textContent = playing ? "Pause" : "Play";
};
$("follow").onchange = (e) => demo.set_follow(e.target.checked);
$("compare").onclick = () => {
  const c = demo.compare_flow();
  $("stats").textContent =
    `pixels on objects   ${c.pixels}\n` +
    `mean |flow|         ${c.mean_flow_magnitude.toFixed(3)} px/frame\n` +
    `block-match EPE     median ${c.blockmatch_median_epe.toFixed(3)}, mean ${c.blockmatch_mean_epe.toFixed(3)}\n` +
    `analytic flow error 0 by construction`;
  c.free();
};

const keys = { w: [0.1, 0, 0], s: [-0.1, 0, 0], a: [0, -0.1, 0], d: [0, 0.1, 0], q: [0, 0, 3], e: [0, 0, -3] };
document.addEventListener("keydown", (ev) => {
  const k = keys[ev.key.toLowerCase()];
  if (k) demo.nudge(...k);
});

load();
requestAnimationFrame(frame);
