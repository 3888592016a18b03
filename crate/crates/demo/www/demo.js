import init, { energy_compaction, theory_mse_vs_order, aoa_objective_curve } from "./pkg/csi_demo.js";

const COLORS = { dct2: "#1f77b4", polynomial: "#d62728", klt: "#2ca02c", objective: "#444" };

function num(id) {
  return Number(document.getElementById(id).value);
}

// Draws named series on a canvas. `logY` plots log10 of positive values.
function plot(canvas, xs, series, { logY = false, markers = [] } = {}) {
  const dpr = window.devicePixelRatio || 1;
  const w = canvas.clientWidth, h = canvas.clientHeight;
  canvas.width = w * dpr;
  canvas.height = h * dpr;
  const ctx = canvas.getContext("2d");
  ctx.scale(dpr, dpr);
  ctx.clearRect(0, 0, w, h);
  const pad = { l: 56, r: 120, t: 10, b: 28 };
  const tf = logY ? (v) => (v > 0 ? Math.log10(v) : NaN) : (v) => v;
  const all = Object.values(series).flat().map(tf).filter(Number.isFinite);
  let lo = Math.min(...all), hi = Math.max(...all);
  if (logY) { lo = Math.floor(lo); hi = Math.ceil(hi); }
  if (hi === lo) { hi += 1; lo -= 1; }
  const x0 = xs[0], x1 = xs[xs.length - 1];
  const sx = (x) => pad.l + ((x - x0) / (x1 - x0)) * (w - pad.l - pad.r);
  const sy = (v) => pad.t + ((hi - v) / (hi - lo)) * (h - pad.t - pad.b);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad.l, pad.t, w - pad.l - pad.r, h - pad.t - pad.b);
  ctx.fillStyle = "#333";
  ctx.font = "11px sans-serif";
  const ticks = logY ? hi - lo : 4;
  for (let i = 0; i <= ticks; i++) {
    const v = lo + ((hi - lo) * i) / ticks;
    ctx.fillText(logY ? `1e${v}` : v.toFixed(2), 4, sy(v) + 4);
  }
  for (let i = 0; i <= 4; i++) {
    const x = x0 + ((x1 - x0) * i) / 4;
    ctx.fillText(x.toFixed(0), sx(x) - 8, h - 10);
  }
  let row = 0;
  for (const [name, ys] of Object.entries(series)) {
    ctx.strokeStyle = COLORS[name] || "#000";
    ctx.lineWidth = 1.6;
    ctx.beginPath();
    let started = false;
    ys.forEach((y, i) => {
      const v = tf(y);
      if (!Number.isFinite(v)) return;
      if (started) ctx.lineTo(sx(xs[i]), sy(v));
      else { ctx.moveTo(sx(xs[i]), sy(v)); started = true; }
    });
    ctx.stroke();
    ctx.fillStyle = ctx.strokeStyle;
    ctx.fillText(name, w - pad.r + 10, pad.t + 14 + 16 * row++);
  }
  for (const { x, color } of markers) {
    ctx.strokeStyle = color;
    ctx.setLineDash([4, 3]);
    ctx.beginPath();
    ctx.moveTo(sx(x), pad.t);
    ctx.lineTo(sx(x), h - pad.b);
    ctx.stroke();
    ctx.setLineDash([]);
  }
}

function guarded(fn) {
  return () => {
    try {
      fn();
      document.getElementById("status").textContent = "";
    } catch (err) {
      document.getElementById("status").textContent = String(err);
    }
  };
}

const drawCompaction = guarded(() => {
  const v = JSON.parse(energy_compaction(
    num("ec-m"), num("ec-as"), num("ec-aoa"), num("ec-d"), document.getElementById("ec-aligned").checked));
  plot(document.getElementById("ec-plot"), v.orders, { dct2: v.dct2, polynomial: v.polynomial, klt: v.klt });
});

const drawTheory = guarded(() => {
  document.getElementById("th-snr-v").textContent = num("th-snr");
  const v = JSON.parse(theory_mse_vs_order(
    num("th-m"), num("th-as"), num("th-aoa"), 0.5, num("th-snr"), num("th-t")));
  plot(document.getElementById("th-plot"), v.orders,
    { dct2: v.dct2, polynomial: v.polynomial, klt: v.klt }, { logY: true });
  document.getElementById("th-opt").textContent =
    `NMSE-minimizing order: DCT-2 ${v.optimal.dct2}, polynomial ${v.optimal.polynomial}, KLT ${v.optimal.klt}`;
});

const drawAoa = guarded(() => {
  const v = JSON.parse(aoa_objective_curve(
    num("aoa-m"), num("aoa-as"), num("aoa-true"), 0.5, num("aoa-snr"), num("aoa-order"), BigInt(num("aoa-seed")), 721));
  plot(document.getElementById("aoa-plot"), v.angles_deg, { objective: v.objective }, {
    markers: [{ x: v.true_deg, color: "#2ca02c" }, { x: v.phi_hat_deg, color: "#d62728" }],
  });
  document.getElementById("aoa-est").textContent =
    `estimate ${v.phi_hat_deg.toFixed(3)} deg (green: true AoA, red: estimate)`;
});

await init();
for (const [prefix, draw] of [["ec", drawCompaction], ["th", drawTheory], ["aoa", drawAoa]]) {
  document.querySelectorAll(`input[id^=${prefix}-]`).forEach((el) => el.addEventListener("input", draw));
}
drawCompaction();
drawTheory();
drawAoa();
