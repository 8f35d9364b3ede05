import init, { zeta_curve, fixture_bounds, fixture_sweep } from "./pkg/cusum_sentinel_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const COLORS = ["#1f6fb2", "#d9661f", "#2b9348", "#9b2fae"];

function fmt(v) {
  if (v === null || v === undefined) return "-";
  const a = Math.abs(v);
  return a !== 0 && (a < 1e-3 || a >= 1e5) ? v.toExponential(4) : v.toPrecision(6);
}

// Line plot of several series on one canvas; `logX`/`logY` switch axes to log10.
function plot(canvas, series, { logX = false, logY = false, xLabel = "", yLabel = "", guides = [] } = {}) {
  const ctx = canvas.getContext("2d");
  const W = canvas.width, H = canvas.height, L = 70, R = 15, T = 15, B = 40;
  ctx.clearRect(0, 0, W, H);
  const tx = (v) => (logX ? Math.log10(v) : v);
  const ty = (v) => (logY ? Math.log10(v) : v);
  const pts = series.flatMap((s) => s.x.map((x, i) => [tx(x), ty(s.y[i])])).filter(([x, y]) => isFinite(x) && isFinite(y));
  if (pts.length === 0) return;
  let [x0, x1] = [Math.min(...pts.map((p) => p[0])), Math.max(...pts.map((p) => p[0]))];
  let [y0, y1] = [Math.min(...pts.map((p) => p[1])), Math.max(...pts.map((p) => p[1]))];
  if (x0 === x1) { x0 -= 1; x1 += 1; }
  if (y0 === y1) { y0 -= 1; y1 += 1; }
  const px = (x) => L + ((x - x0) / (x1 - x0)) * (W - L - R);
  const py = (y) => H - B - ((y - y0) / (y1 - y0)) * (H - T - B);

  ctx.strokeStyle = "#999";
  ctx.fillStyle = "#444";
  ctx.font = "12px system-ui";
  ctx.strokeRect(L, T, W - L - R, H - T - B);
  for (let i = 0; i <= 4; i++) {
    const xv = x0 + ((x1 - x0) * i) / 4, yv = y0 + ((y1 - y0) * i) / 4;
    ctx.fillText(fmt(logX ? 10 ** xv : xv), px(xv) - 20, H - B + 16);
    ctx.fillText(fmt(logY ? 10 ** yv : yv), 4, py(yv) + 4);
  }
  ctx.fillText(xLabel, W / 2 - 30, H - 6);
  ctx.fillText(yLabel, L + 6, T + 14);

  ctx.setLineDash([4, 4]);
  for (const g of guides) {
    const gx = tx(g);
    if (gx >= x0 && gx <= x1) {
      ctx.beginPath();
      ctx.moveTo(px(gx), T);
      ctx.lineTo(px(gx), H - B);
      ctx.stroke();
    }
  }
  ctx.setLineDash([]);

  series.forEach((s, k) => {
    ctx.strokeStyle = ctx.fillStyle = COLORS[k % COLORS.length];
    ctx.lineWidth = 2;
    ctx.beginPath();
    let started = false;
    s.x.forEach((x, i) => {
      const X = tx(x), Y = ty(s.y[i]);
      if (!isFinite(X) || !isFinite(Y)) return;
      started ? ctx.lineTo(px(X), py(Y)) : ctx.moveTo(px(X), py(Y));
      started = true;
      if (s.markers) ctx.fillRect(px(X) - 2, py(Y) - 2, 4, 4);
    });
    ctx.stroke();
    if (s.label) ctx.fillText(s.label, W - R - 140, T + 16 + 16 * k);
  });
  ctx.lineWidth = 1;
}

function guarded(errId, f) {
  return () => {
    $(errId).textContent = "";
    try {
      f();
    } catch (e) {
      $(errId).textContent = String(e.message ?? e);
    }
  };
}

const drawZeta = guarded("z-err", () => {
  const r = num("z-x");
  const c = JSON.parse(zeta_curve(num("z-rl"), num("z-ru"), num("z-s2"), -r, r, 801));
  plot($("z-canvas"), [{ x: c.x, y: c.zeta }], { xLabel: "x̃", yLabel: "ζ", guides: c.breakpoints });
});

const drawBounds = guarded("b-err", () => {
  const b = JSON.parse(fixture_bounds(num("b-s2"), num("b-rl"), num("b-ru"), num("b-g")));
  const ceiling = b.delay_ceiling.kind === "vacuous" ? "vacuous (Σ L ≈ 0)" : fmt(b.delay_ceiling.value);
  const sum = (v) => v.reduce((a, x) => a + x, 0);
  $("b-table").innerHTML = `
    <tr><th>meters × states</th><td>${b.meters} × ${b.states}</td></tr>
    <tr><th>Σ U (pre-attack drift bound)</th><td>${fmt(sum(b.per_meter_upper))}</td></tr>
    <tr><th>Σ L (post-attack drift bound)</th><td>${fmt(sum(b.per_meter_lower))}</td></tr>
    <tr><th>threshold floor h</th><td>${fmt(b.h_floor)}</td></tr>
    <tr><th>delay ceiling at h</th><td>${ceiling}</td></tr>`;
  const idx = b.per_meter_upper.map((_, i) => i + 1);
  plot(
    $("b-canvas"),
    [
      { x: idx, y: b.per_meter_upper, label: "U_m", markers: true },
      { x: idx, y: b.per_meter_lower.map((v) => (v > 0 ? v : NaN)), label: "L_m (>0 only)", markers: true },
    ],
    { logY: true, xLabel: "meter", yLabel: "bound (log)" },
  );
});

const drawSweep = guarded("s-err", () => {
  const sigmas = $("s-s2").value.split(",").map(Number).filter((v) => v > 0).slice(0, 4);
  const series = sigmas.map((s2) => {
    const out = JSON.parse(
      fixture_sweep(s2, num("s-rl"), num("s-ru"), num("s-a"), num("s-h0"), num("s-h1"), num("s-n"), num("s-r"), num("s-seed")),
    );
    if (out.warnings.length) $("s-err").textContent += out.warnings.join("\n") + "\n";
    return { x: out.rows.map((r) => r.edd), y: out.rows.map((r) => r.arl), label: `σ² = ${s2}`, markers: true };
  });
  plot($("s-canvas"), series, { logY: true, xLabel: "detection delay", yLabel: "ARL (log)" });
});

await init();
$("z-go").onclick = drawZeta;
$("b-go").onclick = drawBounds;
$("s-go").onclick = drawSweep;
drawZeta();
drawBounds();
