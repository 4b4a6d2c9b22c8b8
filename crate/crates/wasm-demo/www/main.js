import init, { chimera_layout, run_gauge_scan, run_je_sweep } from "./pkg/anneal_tuner_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const status = (msg) => { $("status").textContent = msg; };

function lattice() {
  return [num("rows"), num("cols"), num("shore")];
}

function guarded(fn) {
  return () => {
    status("running...");
    // let the status paint before the blocking call
    setTimeout(() => {
      try { fn(); status(""); } catch (e) { status(String(e)); }
    }, 10);
  };
}

function drawLattice() {
  const [rows, cols, shore] = lattice();
  const data = JSON.parse(chimera_layout(rows, cols, shore));
  const cv = $("lattice");
  const ctx = cv.getContext("2d");
  const cell = Math.min((cv.width - 20) / cols, (cv.height - 20) / rows);
  const px = (n) => [10 + n.x * cell, 10 + n.y * cell];
  const byId = new Map(data.nodes.map((n) => [n.id, n]));
  ctx.clearRect(0, 0, cv.width, cv.height);
  ctx.lineWidth = 0.6;
  for (const [a, b] of data.edges) {
    const na = byId.get(a), nb = byId.get(b);
    ctx.strokeStyle = na.row === nb.row && na.col === nb.col ? "#bbb" : "#48c";
    const [xa, ya] = px(na), [xb, yb] = px(nb);
    ctx.beginPath(); ctx.moveTo(xa, ya); ctx.lineTo(xb, yb); ctx.stroke();
  }
  for (const n of data.nodes) {
    const [x, y] = px(n);
    ctx.fillStyle = n.side === "L" ? "#d62" : "#284";
    ctx.beginPath(); ctx.arc(x, y, 3, 0, 2 * Math.PI); ctx.fill();
  }
}

function axes(ctx, cv, label) {
  ctx.clearRect(0, 0, cv.width, cv.height);
  ctx.strokeStyle = "#888";
  ctx.strokeRect(40, 10, cv.width - 50, cv.height - 40);
  ctx.fillStyle = "#333";
  ctx.fillText(label, 45, cv.height - 12);
}

function runScan() {
  const [rows, cols, shore] = lattice();
  const data = JSON.parse(run_gauge_scan(rows, cols, shore, num("gauges"), num("reads"), num("eps"), num("sigmah"), num("sigma"), num("seed")));
  const g = data.gauges.slice().sort((a, b) => a.elite_rank - b.elite_rank);
  const cv = $("scanplot"), ctx = cv.getContext("2d");
  axes(ctx, cv, "gauges by elite rank; bar = elite score, dot = lowest energy");
  const vals = g.flatMap((x) => [x.score, x.lowest]);
  const lo = Math.min(...vals), hi = Math.max(...vals);
  const h = cv.height - 40, w = (cv.width - 50) / g.length;
  const y = (v) => 10 + (hi === lo ? 0.5 : (v - lo) / (hi - lo)) * (h - 4);
  g.forEach((x, i) => {
    ctx.fillStyle = "#48c";
    ctx.fillRect(40 + i * w + 1, 10, Math.max(1, w - 2), y(x.score) - 10);
    ctx.fillStyle = "#d62";
    ctx.beginPath(); ctx.arc(40 + (i + 0.5) * w, y(x.lowest), 2.5, 0, 2 * Math.PI); ctx.fill();
  });
  ctx.fillStyle = "#333";
  ctx.fillText(lo.toFixed(1), 2, 20);
  ctx.fillText(hi.toFixed(1), 2, h + 8);
  const rowsHtml = g.slice(0, 10).map((x) =>
    `<tr><td>${x.id}</td><td>${x.score.toFixed(3)}</td><td>${x.lowest}</td><td>${x.lowest_count}</td><td>${x.elite_rank}</td><td>${x.greedy_rank}</td></tr>`).join("");
  $("scantable").innerHTML =
    `<table><tr><th>gauge</th><th>elite score</th><th>lowest</th><th>count</th><th>elite rank</th><th>greedy rank</th></tr>${rowsHtml}</table>`;
}

function runSweep() {
  const [rows, cols, shore] = lattice();
  const data = JSON.parse(run_je_sweep(rows, cols, shore, num("jereads"), num("eps"), num("sigma"), num("seed")));
  const pts = data.points;
  const cv = $("jeplot"), ctx = cv.getContext("2d");
  axes(ctx, cv, `J_E (log scale), ${data.logical_vars} logical spins; blue = elite score, green = strict-embedding fraction`);
  const lx = pts.map((p) => Math.log(p.je));
  const x = (v) => 40 + ((v - lx[0]) / (lx[lx.length - 1] - lx[0] || 1)) * (cv.width - 60) + 5;
  const scores = pts.map((p) => p.score);
  const lo = Math.min(...scores), hi = Math.max(...scores);
  const h = cv.height - 40;
  const ys = (v) => 10 + (hi === lo ? 0.5 : (v - lo) / (hi - lo)) * (h - 4);
  const yf = (f) => 10 + (1 - f) * (h - 4);
  const line = (color, yfn, key) => {
    ctx.strokeStyle = color; ctx.fillStyle = color; ctx.beginPath();
    pts.forEach((p, i) => { const X = x(lx[i]), Y = yfn(p[key]); i ? ctx.lineTo(X, Y) : ctx.moveTo(X, Y); });
    ctx.stroke();
    pts.forEach((p, i) => { ctx.beginPath(); ctx.arc(x(lx[i]), yfn(p[key]), 3, 0, 2 * Math.PI); ctx.fill(); });
  };
  line("#48c", ys, "score");
  line("#284", yf, "f_se");
  ctx.fillStyle = "#333";
  pts.forEach((p, i) => { if (i % 2 === 0) ctx.fillText(p.je.toFixed(2), x(lx[i]) - 10, h + 22); });
}

await init();
$("draw").onclick = guarded(drawLattice);
$("scan").onclick = guarded(runScan);
$("sweep").onclick = guarded(runSweep);
drawLattice();
status("");
