import init, { innerPath, outerPath, scheduleCurves } from "./pkg/ippp_demo.js";

const num = (id) => Number(document.getElementById(id).value);
const str = (id) => document.getElementById(id).value;

function show(id, text, isError) {
  const el = document.getElementById(id);
  el.textContent = text;
  el.className = isError ? "err" : "";
}

// maps [-s, s]^2 onto a square canvas
function planeView(canvas, s) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width;
  ctx.clearRect(0, 0, w, canvas.height);
  const px = (x) => ((x + s) / (2 * s)) * w;
  const py = (y) => w - ((y + s) / (2 * s)) * w;
  const circle = (r, style, fill) => {
    ctx.beginPath();
    ctx.arc(px(0), py(0), (r / (2 * s)) * w, 0, 2 * Math.PI);
    if (fill) { ctx.fillStyle = fill; ctx.fill(); }
    ctx.strokeStyle = style;
    ctx.stroke();
  };
  const path = (pts, style) => {
    ctx.strokeStyle = style;
    ctx.beginPath();
    pts.forEach(([x, y], i) => (i ? ctx.lineTo(px(x), py(y)) : ctx.moveTo(px(x), py(y))));
    ctx.stroke();
    ctx.fillStyle = style;
    for (const [x, y] of pts) ctx.fillRect(px(x) - 2, py(y) - 2, 4, 4);
  };
  const dot = ([x, y], style) => {
    ctx.fillStyle = style;
    ctx.beginPath();
    ctx.arc(px(x), py(y), 5, 0, 2 * Math.PI);
    ctx.fill();
  };
  ctx.strokeStyle = "#eee";
  ctx.beginPath();
  ctx.moveTo(px(-s), py(0)); ctx.lineTo(px(s), py(0));
  ctx.moveTo(px(0), py(-s)); ctx.lineTo(px(0), py(s));
  ctx.stroke();
  return { ctx, circle, path, dot };
}

// log-scale line chart of several named series
function logChart(canvas, series, title) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, m = 50;
  ctx.clearRect(0, 0, w, h);
  const all = series.flatMap((s) => s.values.filter((v) => v > 0 && isFinite(v)));
  if (!all.length) return;
  const lo = Math.log10(Math.min(...all)), hi = Math.log10(Math.max(...all)) + 1e-9;
  const n = Math.max(...series.map((s) => s.values.length));
  const px = (i) => m + (i / Math.max(n - 1, 1)) * (w - 2 * m);
  const py = (v) => h - m - ((Math.log10(v) - lo) / (hi - lo || 1)) * (h - 2 * m);
  ctx.strokeStyle = "#444";
  ctx.strokeRect(m, m, w - 2 * m, h - 2 * m);
  ctx.fillStyle = "#222";
  ctx.font = "12px sans-serif";
  ctx.fillText(title, m, m - 20);
  ctx.fillText(`1e${hi.toFixed(1)}`, 4, m + 4);
  ctx.fillText(`1e${lo.toFixed(1)}`, 4, h - m);
  ctx.fillText(`k = ${n - 1}`, w - m - 40, h - m + 16);
  series.forEach((s, j) => {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    let started = false;
    s.values.forEach((v, i) => {
      if (!(v > 0) || !isFinite(v)) return;
      if (started) ctx.lineTo(px(i), py(v)); else { ctx.moveTo(px(i), py(v)); started = true; }
    });
    ctx.stroke();
    ctx.fillStyle = s.color;
    ctx.fillText(s.name, m + 10 + 90 * j, h - 12);
  });
}

function runInner() {
  try {
    const r = JSON.parse(innerPath(num("h11"), num("h12"), num("h22"), num("q1"), num("q2"), num("rad"), num("tol")));
    const s = Math.max(1.2 * num("rad"), ...r.path.flat().map(Math.abs)) * 1.05;
    const v = planeView(document.getElementById("inner-canvas"), s);
    v.circle(num("rad"), "#888");
    v.path(r.path, "#1f77b4");
    v.dot(r.x, "#d62728");
    show("inner-out",
      `x = (${r.x[0].toFixed(6)}, ${r.x[1].toFixed(6)})\nomega = ${r.omega.toExponential(3)}\n` +
      `proximal steps = ${r.prox_steps} (${r.rejected} rejected), restarts = ${r.restarts}`);
  } catch (e) {
    show("inner-out", String(e), true);
  }
}

function runOuter() {
  try {
    const r = JSON.parse(outerPath(num("a1"), num("a2"), num("x1"), num("x2"), str("sched"), num("gamma"), num("beta"), num("kmax")));
    const v = planeView(document.getElementById("outer-canvas"), 2.1);
    v.circle(2, "#888");
    v.circle(1, "#d62728", "rgba(214,39,40,0.08)");
    v.path(r.centers, "#1f77b4");
    v.dot([num("a1"), num("a2")], "#2ca02c");
    v.dot(r.x_out, "#d62728");
    logChart(document.getElementById("outer-metrics"), [
      { name: "S", color: "#1f77b4", values: r.records.map((x) => x.S) },
      { name: "F", color: "#d62728", values: r.records.map((x) => x.F) },
    ], "stationarity S and infeasibility F per outer iteration");
    show("outer-out",
      `status = ${r.status}, outer iterations = ${r.records.length}, selected k = ${r.selected}\n` +
      `x = (${r.x_out[0].toFixed(5)}, ${r.x_out[1].toFixed(5)}), |x| = ${Math.hypot(...r.x_out).toFixed(5)}, lambda = ${r.lambda.toFixed(4)}`);
  } catch (e) {
    show("outer-out", String(e), true);
  }
}

function runSchedule() {
  try {
    const r = JSON.parse(scheduleCurves(str("c-sched"), num("c-gamma"), num("c-beta"), num("c-k")));
    logChart(document.getElementById("sched-canvas"), [
      { name: "gamma_k", color: "#1f77b4", values: r.gamma },
      { name: "beta_k", color: "#d62728", values: r.beta },
      { name: "eps_hat_k", color: "#2ca02c", values: r.eps_hat },
    ], "schedule values (log scale)");
    const last = r.gamma.length - 1;
    show("sched-out",
      `k = ${last}: gamma = ${r.gamma[last].toPrecision(5)}, beta = ${r.beta[last].toPrecision(5)}, eps_hat = ${r.eps_hat[last].toExponential(3)}`);
  } catch (e) {
    show("sched-out", String(e), true);
  }
}

await init();
document.getElementById("run-inner").onclick = runInner;
document.getElementById("run-outer").onclick = runOuter;
document.getElementById("run-sched").onclick = runSchedule;
runInner();
runOuter();
runSchedule();
