import init, { z_curve, preconditioned_spectrum, cond_growth } from "./pkg/sinc_pint_demo.js";

const PAD = 48;

// Scatter or line plot of (x, y) pairs; axes optionally logarithmic.
function plot(canvas, xs, ys, { logX = false, logY = false, line = false, guides = [] } = {}) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height;
  ctx.clearRect(0, 0, w, h);
  const fx = logX ? Math.log10 : (v) => v;
  const fy = logY ? Math.log10 : (v) => v;
  const px = xs.map(fx), py = ys.map(fy);
  const span = (vals) => {
    let lo = Math.min(...vals), hi = Math.max(...vals);
    if (hi - lo < 1e-12) { lo -= 0.5; hi += 0.5; }
    const pad = 0.05 * (hi - lo);
    return [lo - pad, hi + pad];
  };
  const [x0, x1] = span(px);
  const [y0, y1] = span(py.concat(guides.filter((g) => g.y !== undefined).map((g) => fy(g.y))));
  const sx = (v) => PAD + ((v - x0) / (x1 - x0)) * (w - 2 * PAD);
  const sy = (v) => h - PAD + ((v - y0) / (y1 - y0)) * (2 * PAD - h);

  ctx.strokeStyle = "#888";
  ctx.fillStyle = "#333";
  ctx.font = "11px sans-serif";
  ctx.strokeRect(PAD, PAD / 2, w - 2 * PAD, h - 1.5 * PAD);
  for (let k = 0; k <= 4; k++) {
    const vx = x0 + ((x1 - x0) * k) / 4, vy = y0 + ((y1 - y0) * k) / 4;
    ctx.fillText(tick(vx, logX), sx(vx) - 14, h - PAD + 16);
    ctx.fillText(tick(vy, logY), 2, sy(vy) + 4);
  }
  for (const g of guides) {
    ctx.strokeStyle = g.color;
    ctx.setLineDash([4, 4]);
    ctx.beginPath();
    if (g.y !== undefined) {
      ctx.moveTo(PAD, sy(fy(g.y)));
      ctx.lineTo(w - PAD, sy(fy(g.y)));
    } else {
      const steps = 120;
      for (let k = 0; k <= steps; k++) {
        const t = (2 * Math.PI * k) / steps;
        const X = sx(g.cx + g.r * Math.cos(t)), Y = sy(g.r * Math.sin(t));
        k === 0 ? ctx.moveTo(X, Y) : ctx.lineTo(X, Y);
      }
    }
    ctx.stroke();
  }
  ctx.setLineDash([]);
  ctx.strokeStyle = ctx.fillStyle = "#1f5fa8";
  if (line) {
    ctx.beginPath();
    px.forEach((v, i) => (i === 0 ? ctx.moveTo(sx(v), sy(py[i])) : ctx.lineTo(sx(v), sy(py[i]))));
    ctx.stroke();
  }
  px.forEach((v, i) => {
    ctx.beginPath();
    ctx.arc(sx(v), sy(py[i]), 2.5, 0, 2 * Math.PI);
    ctx.fill();
  });
}

function tick(v, log) {
  return log ? `1e${v.toFixed(1)}` : v.toPrecision(3);
}

function pairs(flat) {
  const xs = [], ys = [];
  for (let k = 0; k < flat.length; k += 2) {
    xs.push(flat[k]);
    ys.push(flat[k + 1]);
  }
  return [xs, ys];
}

function report(id, ok, text) {
  const el = document.getElementById(id);
  el.textContent = text;
  el.className = "verdict " + (ok ? "pass" : "fail");
}

function guarded(id, f) {
  return () => {
    try {
      f();
    } catch (e) {
      report(id, false, String(e.message ?? e));
    }
  };
}

const num = (id) => Number(document.getElementById(id).value);

function runZ() {
  const [mu, z] = pairs(z_curve(num("z-m"), 200));
  plot(document.getElementById("z-plot"), mu, z, { logX: true, line: true, guides: [{ y: 0, color: "#aaa" }, { y: 2, color: "#c33" }] });
  const bad = z.filter((v) => !(v >= 0 && v < 2)).length;
  report("z-verdict", bad === 0, `${bad === 0 ? "PASS" : "FAIL"}: ${bad} of ${z.length} samples outside [0, 2)`);
}

function runSpectrum() {
  const problem = document.getElementById("s-problem").value;
  const omega = num("s-omega");
  const s = preconditioned_spectrum(problem, num("s-m"), omega);
  const guides = [];
  if (problem === "wave" && omega < 1) {
    const c = 2 / (2 - omega);
    guides.push({ cx: c, r: omega / (2 - omega), color: "#c33" });
    guides.push({ cx: c, r: omega / ((2 - omega) * (1 - omega)), color: "#c33" });
  }
  plot(document.getElementById("s-plot"), Array.from(s.re()), Array.from(s.im()), { guides });
  report("s-verdict", s.passed(), s.verdict());
  s.free();
}

function runCond() {
  const omega = num("c-omega");
  const [ms, cond] = pairs(cond_growth(omega, num("c-m")));
  plot(document.getElementById("c-plot"), ms, cond, { logX: true, logY: true, line: true });
  const last = cond[cond.length - 1];
  report("c-verdict", Number.isFinite(last), `Cond2(V) = ${last.toExponential(3)} at M = ${ms[ms.length - 1]}, omega = ${omega}`);
}

await init();
document.getElementById("z-run").onclick = guarded("z-verdict", runZ);
document.getElementById("s-run").onclick = guarded("s-verdict", runSpectrum);
document.getElementById("c-run").onclick = guarded("c-verdict", runCond);
runZ();
runSpectrum();
runCond();
