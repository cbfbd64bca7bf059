import init, { profile_curve, reflection, Field2d, symbol_spectrum, symbol_complete } from "./pkg/pmlwave_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);
const list = (id) => $(id).value.split(",").map((s) => parseFloat(s)).filter((v) => !Number.isNaN(v));

function drawProfile() {
  const a = num("pa"), l = num("pl"), z = num("pz");
  const cv = $("profile"), ctx = cv.getContext("2d");
  const zs = profile_curve(a, l, z, cv.width);
  ctx.clearRect(0, 0, cv.width, cv.height);
  // physical domain
  const inner = a / (a + l);
  ctx.fillStyle = "#eef4ff";
  ctx.fillRect(cv.width * (1 - inner) / 2, 0, cv.width * inner, cv.height);
  ctx.beginPath();
  zs.forEach((v, i) => {
    const y = cv.height - 10 - (cv.height - 20) * (z > 0 ? v / z : 0);
    i ? ctx.lineTo(i, y) : ctx.moveTo(i, y);
  });
  ctx.strokeStyle = "#c33";
  ctx.stroke();
  $("pr").textContent = `reflection at c = 1: ${reflection(1, l, z).toExponential(3)}`;
}

let field = null, running = false;

function restart() {
  try {
    field = new Field2d($("fp").value, num("fdx"), num("fz"));
  } catch (e) {
    $("ft").textContent = String(e);
    field = null;
    return;
  }
  const cv = $("field");
  cv.width = field.width();
  cv.height = field.height();
  cv.style.width = cv.style.height = "480px";
  running = true;
  requestAnimationFrame(frame);
}

function frame() {
  if (!field || !running) return;
  try {
    const t = field.advance(4);
    const cv = $("field"), ctx = cv.getContext("2d");
    const img = new ImageData(new Uint8ClampedArray(field.pixels(num("fg"))), cv.width, cv.height);
    ctx.putImageData(img, 0, 0);
    const f = field.inner_fraction(), w = cv.width;
    ctx.strokeStyle = "#39f";
    ctx.strokeRect(w * (1 - f) / 2, w * (1 - f) / 2, w * f, w * f);
    $("ft").textContent = `t = ${t.toFixed(3)}`;
  } catch (e) {
    $("ft").textContent = String(e);
    running = false;
    return;
  }
  requestAnimationFrame(frame);
}

function spectrum() {
  const zeta = Float64Array.from(list("sz")), k = Float64Array.from(list("sk")), c = num("sc");
  const cv = $("spectrum"), ctx = cv.getContext("2d");
  ctx.clearRect(0, 0, cv.width, cv.height);
  let ev, complete;
  try {
    ev = symbol_spectrum(zeta, k, c);
    complete = symbol_complete(zeta, k, c);
  } catch (e) {
    $("so").textContent = String(e);
    return;
  }
  const pairs = [];
  for (let i = 0; i < ev.length; i += 2) pairs.push([ev[i], ev[i + 1]]);
  const r = Math.max(1e-9, ...pairs.map(([re, im]) => Math.hypot(re, im))) * 1.2;
  const px = (v) => cv.width / 2 + (v / r) * (cv.width / 2);
  const py = (v) => cv.height / 2 - (v / r) * (cv.height / 2);
  ctx.strokeStyle = "#ccc";
  ctx.beginPath();
  ctx.moveTo(0, cv.height / 2); ctx.lineTo(cv.width, cv.height / 2);
  ctx.moveTo(cv.width / 2, 0); ctx.lineTo(cv.width / 2, cv.height);
  ctx.stroke();
  ctx.fillStyle = "#c33";
  for (const [re, im] of pairs) {
    ctx.beginPath();
    ctx.arc(px(re), py(im), 4, 0, 2 * Math.PI);
    ctx.fill();
  }
  const lines = pairs.map(([re, im]) => `${re.toExponential(2).padStart(10)} ${im >= 0 ? "+" : "-"} ${Math.abs(im).toFixed(6)} i`);
  $("so").textContent = `${complete ? "complete" : "defective"} eigenvector set\n` + lines.join("\n");
}

await init();
for (const id of ["pa", "pl", "pz"]) $(id).addEventListener("input", drawProfile);
$("fstart").addEventListener("click", restart);
$("fpause").addEventListener("click", () => {
  running = !running;
  if (running) requestAnimationFrame(frame);
});
$("sgo").addEventListener("click", spectrum);
drawProfile();
spectrum();
restart();
