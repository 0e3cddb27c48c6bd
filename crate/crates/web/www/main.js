import init, { summary, meanCurves, tcCurve, mprimeCurve } from "./pkg/persist_lab_web.js";

const COLORS = ["#1f77b4", "#d62728", "#2ca02c"];
const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function rates() {
  return [num("lambda"), num("a"), num("b")];
}

// Splits a flat row-major array into columns.
function columns(flat, width) {
  const cols = Array.from({ length: width }, () => []);
  for (let i = 0; i < flat.length; i += width) {
    for (let k = 0; k < width; k++) cols[k].push(flat[i + k]);
  }
  return cols;
}

function plot(canvas, xs, series, opts = {}) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = { l: 60, r: 20, t: 15, b: 35 };
  ctx.clearRect(0, 0, w, h);
  const fx = opts.logX ? Math.log10 : (v) => v;
  const xv = xs.map(fx);
  const ys = series.flatMap((s) => s.values).filter(Number.isFinite);
  const [x0, x1] = [Math.min(...xv), Math.max(...xv)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y0 === y1) { y0 -= 1; y1 += 1; }
  const px = (v) => pad.l + ((fx(v) - x0) / (x1 - x0)) * (w - pad.l - pad.r);
  const py = (v) => h - pad.b - ((v - y0) / (y1 - y0)) * (h - pad.t - pad.b);

  ctx.strokeStyle = "#000";
  ctx.strokeRect(pad.l, pad.t, w - pad.l - pad.r, h - pad.t - pad.b);
  ctx.fillStyle = "#000";
  ctx.font = "12px sans-serif";
  ctx.textAlign = "center";
  for (let i = 0; i <= 4; i++) {
    const v = opts.logX ? 10 ** (x0 + ((x1 - x0) * i) / 4) : x0 + ((x1 - x0) * i) / 4;
    ctx.fillText(v.toPrecision(3), px(v), h - pad.b + 15);
  }
  ctx.fillText(opts.xLabel ?? "", (w + pad.l) / 2, h - 4);
  ctx.textAlign = "right";
  for (let i = 0; i <= 4; i++) {
    const v = y0 + ((y1 - y0) * i) / 4;
    ctx.fillText(v.toPrecision(3), pad.l - 5, py(v) + 4);
  }

  for (const [y, dash] of opts.hLines ?? []) {
    if (y < y0 || y > y1) continue;
    ctx.setLineDash(dash);
    ctx.strokeStyle = "#888";
    ctx.beginPath();
    ctx.moveTo(pad.l, py(y));
    ctx.lineTo(w - pad.r, py(y));
    ctx.stroke();
  }
  for (const [x, label] of opts.vLines ?? []) {
    if (!Number.isFinite(x) || fx(x) < x0 || fx(x) > x1) continue;
    ctx.setLineDash([2, 3]);
    ctx.strokeStyle = "#555";
    ctx.beginPath();
    ctx.moveTo(px(x), pad.t);
    ctx.lineTo(px(x), h - pad.b);
    ctx.stroke();
    ctx.textAlign = "left";
    ctx.fillText(label, px(x) + 4, pad.t + 12);
  }
  series.forEach((s, k) => {
    ctx.setLineDash(k === 0 ? [] : [6, 4]);
    ctx.strokeStyle = COLORS[k % COLORS.length];
    ctx.lineWidth = 2;
    ctx.beginPath();
    s.values.forEach((v, i) => (i === 0 ? ctx.moveTo(px(xs[i]), py(v)) : ctx.lineTo(px(xs[i]), py(v))));
    ctx.stroke();
    ctx.lineWidth = 1;
    ctx.fillStyle = COLORS[k % COLORS.length];
    ctx.textAlign = "left";
    ctx.fillText(s.name, pad.l + 8, pad.t + 14 + 14 * k);
  });
  ctx.setLineDash([]);
}

function guarded(fn) {
  return () => {
    $("error").textContent = "";
    try {
      fn();
    } catch (e) {
      $("error").textContent = String(e.message ?? e);
    }
  };
}

function runMean() {
  const [l, a, b] = rates();
  const s = summary(l, a, b, false);
  const tMax = Math.max(1.5 * s.tc, 1e-3);
  const [t, x, y] = columns(meanCurves(l, a, b, tMax, 300), 3);
  plot($("mean-plot"), t, [
    { name: "y(t) persistent", values: y },
    { name: "x(t) normal", values: x },
  ], { xLabel: "t", hLines: [[1, [4, 3]]], vLines: [[s.t_star, "t*"], [s.tc, "Tc"]] });
  $("mean-facts").textContent =
    `nu1 = ${s.nu1.toPrecision(8)}   nu2 = ${s.nu2.toPrecision(8)}\n` +
    `c1 = ${s.c1.toPrecision(8)}   c2 = ${s.c2.toPrecision(8)}\n` +
    `t* = ${s.t_star.toPrecision(8)}   Tc = ${s.tc.toPrecision(10)}`;
  s.free();
}

function runTc() {
  const [, a, b] = rates();
  const [lam, tc] = columns(tcCurve(a, b, num("lmin"), num("lmax"), 120), 2);
  plot($("tc-plot"), lam, [{ name: "Tc", values: tc }], { xLabel: "lambda", logX: true });
}

function runMprime() {
  const [l, a, b] = rates();
  const s = summary(l, a, b, true);
  const [d, m, lo, hi] = columns(mprimeCurve(l, a, b, num("dmin"), num("dmax"), 120), 4);
  plot($("mprime-plot"), d, [
    { name: "m'(delta)", values: m },
    { name: "lower envelope", values: lo },
    { name: "upper envelope", values: hi },
  ], { xLabel: "delta", logX: true, hLines: [[0, [4, 3]]], vLines: [[s.delta_c, "delta_c"]] });
  $("mprime-facts").textContent =
    `delta_c = ${s.delta_c.toPrecision(8)}   lower bound = ${s.delta_c_lower_bound.toPrecision(8)}`;
  s.free();
}

await init();
$("run-mean").addEventListener("click", guarded(runMean));
$("run-tc").addEventListener("click", guarded(runTc));
$("run-mprime").addEventListener("click", guarded(runMprime));
guarded(runMean)();
