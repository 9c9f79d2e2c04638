import init, { TrackingDemo, totalVarianceCurve, coefficientTrace } from "./pkg/trackbench_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

let demo = null;
let timer = null;

function reset() {
  stop();
  try {
    demo = new TrackingDemo($("preset").value, $("kind").value, num("lambda"), num("particles"), BigInt(num("seed")));
    draw();
  } catch (e) {
    demo = null;
    $("trackOut").textContent = String(e);
  }
}

function drawBox(ctx, b, scale, colour) {
  ctx.strokeStyle = colour;
  ctx.lineWidth = 2;
  ctx.strokeRect(b[0] * scale, b[1] * scale, b[2] * scale, b[3] * scale);
}

function draw() {
  const w = demo.width(), h = demo.height();
  const img = new ImageData(new Uint8ClampedArray(demo.rgba()), w, h);
  const off = new OffscreenCanvas(w, h);
  off.getContext("2d").putImageData(img, 0, 0);
  const canvas = $("frame");
  const ctx = canvas.getContext("2d");
  ctx.imageSmoothingEnabled = false;
  const scale = canvas.width / w;
  ctx.drawImage(off, 0, 0, canvas.width, h * scale);
  drawBox(ctx, demo.groundTruth(), scale, "#2a2");
  drawBox(ctx, demo.estimate(), scale, "#d22");
  const c = Array.from(demo.coefficients()).map((v) => v.toFixed(3));
  $("trackOut").textContent =
    `frame ${demo.frameIndex() + 1}/${demo.frameCount()}  CLE ${demo.cle().toFixed(2)} px  ` +
    `overlap ${demo.overlap().toFixed(3)}  solve ${demo.solveMs().toFixed(1)} ms\n` +
    `coefficients ${c.slice(0, 10).join(" ")}${c.length > 10 ? " …" : ""}`;
}

function step() {
  if (!demo) return false;
  try {
    const more = demo.step();
    draw();
    return more;
  } catch (e) {
    $("trackOut").textContent += `\n${e}`;
    return false;
  }
}

function stop() {
  if (timer !== null) clearInterval(timer);
  timer = null;
  $("play").textContent = "Play";
}

function play() {
  if (timer !== null) return stop();
  $("play").textContent = "Pause";
  timer = setInterval(() => { if (!step()) stop(); }, 60);
}

// Log-scale line plot; non-finite values are drawn as a gap.
function plot(canvas, xs, ys, { logX = false, label = "" } = {}) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, pad = 40;
  ctx.clearRect(0, 0, W, H);
  const fx = logX ? Math.log10 : (v) => v;
  const finite = ys.filter((v) => Number.isFinite(v) && v > 0);
  if (finite.length === 0) return;
  const lo = Math.log10(Math.min(...finite)), hi = Math.log10(Math.max(...finite));
  const span = hi - lo || 1;
  const x0 = fx(xs[0]), x1 = fx(xs[xs.length - 1]);
  const px = (v) => pad + ((fx(v) - x0) / (x1 - x0 || 1)) * (W - 2 * pad);
  const py = (v) => H - pad - ((Math.log10(v) - lo) / span) * (H - 2 * pad);
  ctx.strokeStyle = "#888";
  ctx.strokeRect(pad, pad, W - 2 * pad, H - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.fillText(`1e${hi.toFixed(1)}`, 2, pad + 4);
  ctx.fillText(`1e${lo.toFixed(1)}`, 2, H - pad);
  ctx.fillText(label, pad, H - 12);
  ctx.strokeStyle = "#25a";
  ctx.lineWidth = 2;
  ctx.beginPath();
  let pen = false;
  xs.forEach((x, i) => {
    const y = ys[i];
    if (!(Number.isFinite(y) && y > 0)) { pen = false; return; }
    if (pen) ctx.lineTo(px(x), py(y)); else ctx.moveTo(px(x), py(y));
    pen = true;
  });
  ctx.stroke();
}

function runVariance() {
  const lambdas = Array.from({ length: 41 }, (_, i) => 10 ** (-4 + i * 0.15));
  try {
    const v = totalVarianceCurve(1n, num("tvD"), num("tvN"), num("tvSpread"), new Float64Array(lambdas));
    plot($("tv"), lambdas, Array.from(v.slice(1)), { logX: true, label: "λ (log) against total ridge variance (log)" });
    $("tvOut").textContent = `OLS total variance: ${v[0]}\nridge at λ=${lambdas[27].toFixed(2)}: ${v[1 + 27].toExponential(3)}`;
  } catch (e) {
    $("tvOut").textContent = String(e);
  }
}

function runTrace() {
  try {
    const t = Array.from(coefficientTrace(num("traceLambda"), num("traceFrames"), 100));
    plot($("trace"), t.map((_, i) => i + 1), t, { label: "frame against max |coefficient| (log)" });
    $("traceOut").textContent = `peak max |coefficient|: ${Math.max(...t).toExponential(3)} over ${t.length} frames`;
  } catch (e) {
    $("traceOut").textContent = String(e);
  }
}

await init();
$("reset").onclick = reset;
$("step").onclick = () => { stop(); step(); };
$("play").onclick = play;
$("tvRun").onclick = runVariance;
$("traceRun").onclick = runTrace;
reset();
runVariance();
runTrace();
