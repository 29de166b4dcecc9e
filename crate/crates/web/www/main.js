import init, {
  misalignmentCurve, bandwidthCurve, keyRateMap, chirpFromSpectrum,
} from "./pkg/hom_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);
const PAD = { l: 55, r: 15, t: 15, b: 40 };

function frame(ctx, w, h, xr, yr, xlab, ylab, logX) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#888";
  ctx.strokeRect(PAD.l, PAD.t, w - PAD.l - PAD.r, h - PAD.t - PAD.b);
  ctx.fillStyle = "#000";
  ctx.font = "12px sans-serif";
  ctx.fillText(xlab, w / 2 - 40, h - 8);
  ctx.save();
  ctx.translate(14, h / 2 + 30);
  ctx.rotate(-Math.PI / 2);
  ctx.fillText(ylab, 0, 0);
  ctx.restore();
  const fx = logX ? Math.log10 : (x) => x;
  const sx = (x) => PAD.l + (fx(x) - fx(xr[0])) / (fx(xr[1]) - fx(xr[0])) * (w - PAD.l - PAD.r);
  const sy = (y) => h - PAD.b - (y - yr[0]) / (yr[1] - yr[0]) * (h - PAD.t - PAD.b);
  for (const x of [xr[0], xr[1]]) ctx.fillText(x.toPrecision(3), sx(x) - 10, h - PAD.b + 14);
  for (const y of [yr[0], yr[1]]) ctx.fillText(y.toFixed(2), 8, sy(y) + 4);
  return { sx, sy };
}

function line(canvas, xs, ys, xlab, ylab, logX) {
  const ctx = canvas.getContext("2d");
  const ymax = Math.max(0.5, ...ys);
  const { sx, sy } = frame(ctx, canvas.width, canvas.height,
    [xs[0], xs[xs.length - 1]], [0, ymax], xlab, ylab, logX);
  ctx.strokeStyle = "#1f5fbf";
  ctx.lineWidth = 2;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(sx(x), sy(ys[i])) : ctx.moveTo(sx(x), sy(ys[i]))));
  ctx.stroke();
}

function heat(canvas, m) {
  const ctx = canvas.getContext("2d");
  const b = m.betas(), t = m.delta_ts(), r = m.r_rel();
  const { sx, sy } = frame(ctx, canvas.width, canvas.height,
    [b[0], b[b.length - 1]], [t[0], t[t.length - 1]], "β (ps⁻²)", "Δt (ps)", false);
  const cw = (sx(b[b.length - 1]) - sx(b[0])) / (b.length - 1);
  const ch = (sy(t[0]) - sy(t[t.length - 1])) / (t.length - 1);
  t.forEach((dt, j) => b.forEach((beta, i) => {
    const v = r[j * b.length + i];
    ctx.fillStyle = `hsl(${220 - 220 * v}, 70%, ${25 + 35 * v}%)`;
    ctx.fillRect(sx(beta) - cw / 2, sy(dt) - ch / 2, cw + 1, ch + 1);
  }));
  ctx.strokeStyle = "#fff";
  ctx.lineWidth = 1.5;
  m.levels().forEach((lvl, k) => {
    const pts = m.contour(k);
    ctx.beginPath();
    let pen = false;
    for (let i = 0; i < pts.length; i += 2) {
      if (Number.isNaN(pts[i])) { pen = false; continue; }
      const X = sx(pts[i]), Y = sy(pts[i + 1]);
      pen ? ctx.lineTo(X, Y) : ctx.moveTo(X, Y);
      pen = true;
    }
    ctx.stroke();
  });
}

function redraw() {
  $("status").textContent = "";
  try {
    const fwhm = num("fwhm"), spec = num("spec"), jit = num("jitter");
    $("beta").textContent = `β = ${chirpFromSpectrum(fwhm, spec).toFixed(5)} ps⁻²`;
    const range = num("range");
    const mis = misalignmentCurve(fwhm, spec, jit, num("filter"), range, 241);
    line($("mis"), mis.params(), mis.values(), "Δt (ps)", "V", false);
    const bw = bandwidthCurve(fwhm, spec, jit, num("rho"), 5, 2000, 80);
    line($("bw"), bw.params(), bw.values(), "filter FWHM (GHz)", "V", true);
    const levels = new Float64Array($("levels").value.split(",").map(Number));
    heat($("map"), keyRateMap(fwhm, jit, num("bmax"), num("tmax"), 61, 61, levels));
  } catch (e) {
    $("status").textContent = String(e.message ?? e);
  }
}

await init();
document.querySelectorAll("input").forEach((el) => el.addEventListener("change", redraw));
redraw();
