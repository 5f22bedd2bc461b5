import init, { crps_explorer, diurnal_curve, calibration_demo } from "./pkg/pvpp_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function axes(ctx, w, h) {
  ctx.clearRect(0, 0, w, h);
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(30, 10); ctx.lineTo(30, h - 20); ctx.lineTo(w - 10, h - 20);
  ctx.stroke();
}

function line(canvas, xs, ys, xr, yr, color) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height;
  const px = (x) => 30 + (w - 40) * (x - xr[0]) / (xr[1] - xr[0]);
  const py = (y) => h - 20 - (h - 30) * (y - yr[0]) / (yr[1] - yr[0] || 1);
  ctx.strokeStyle = color;
  ctx.lineWidth = 2;
  ctx.beginPath();
  xs.forEach((x, i) => (i ? ctx.lineTo(px(x), py(ys[i])) : ctx.moveTo(px(x), py(ys[i]))));
  ctx.stroke();
  return { px, py, ctx };
}

function show(out, f) {
  try {
    out.classList.remove("err");
    f();
  } catch (e) {
    out.classList.add("err");
    out.textContent = String(e);
  }
}

function updateCrps() {
  show($("c-out"), () => {
    const upper = $("c-upper").value === "" ? NaN : num("c-upper");
    const v = JSON.parse(crps_explorer(num("c-mu"), num("c-sigma"), num("c-lower"), upper, num("c-y"), 400));
    const canvas = $("c-plot");
    axes(canvas.getContext("2d"), canvas.width, canvas.height);
    const xr = [v.x[0], v.x[v.x.length - 1]];
    const { px, ctx } = line(canvas, v.x, v.cdf, xr, [0, 1], "#1764ab");
    const y = num("c-y");
    ctx.strokeStyle = "#c33";
    ctx.beginPath(); ctx.moveTo(px(y), 10); ctx.lineTo(px(y), canvas.height - 20); ctx.stroke();
    $("c-out").textContent =
      `CRPS ${v.crps.toFixed(5)}   dCRPS/dmu ${v.d_mu.toFixed(4)}   dCRPS/dsigma ${v.d_sigma.toFixed(4)}\n` +
      `mean ${v.mean.toFixed(4)}   median ${v.median.toFixed(4)}   5% ${v.q05.toFixed(4)}   95% ${v.q95.toFixed(4)}\n` +
      `mass at lower ${v.mass_lower.toFixed(4)}   mass at upper ${v.mass_upper.toFixed(4)}`;
  });
}

function updateChain() {
  show($("d-out"), () => {
    const hours = JSON.parse(diurnal_curve($("d-date").value, num("d-k"), num("d-t"), num("d-w"), num("d-tilt")));
    const canvas = $("d-plot");
    axes(canvas.getContext("2d"), canvas.width, canvas.height);
    const hs = hours.map((r) => r.local_hour);
    line(canvas, hs, hours.map((r) => r.ghi), [1, 24], [0, 1300], "#e69500");
    line(canvas, hs, hours.map((r) => r.poa), [1, 24], [0, 1300], "#7a4");
    line(canvas, hs, hours.map((r) => r.power_mw), [1, 24], [0, 20], "#1764ab");
    const energy = hours.reduce((s, r) => s + r.power_mw, 0);
    $("d-out").textContent =
      "orange GHI, green plane of array (0 to 1300 W/m²), blue power (0 to 20 MW)\n" +
      `daily energy ${energy.toFixed(1)} MWh, peak ${Math.max(...hours.map((r) => r.power_mw)).toFixed(2)} MW`;
  });
}

function updateCalib() {
  show($("p-out"), () => {
    const v = JSON.parse(calibration_demo(num("p-bias"), num("p-spread"), Math.round(num("p-n")), 7n));
    const canvas = $("p-plot");
    const ctx = canvas.getContext("2d");
    axes(ctx, canvas.width, canvas.height);
    const total = v.pit_counts.reduce((a, b) => a + b, 0);
    const dens = v.pit_counts.map((c) => (c * v.pit_counts.length) / total);
    const top = Math.max(2, ...dens);
    const bw = (canvas.width - 40) / dens.length;
    ctx.fillStyle = "#1764ab";
    dens.forEach((d, i) => {
      const bh = (canvas.height - 30) * d / top;
      ctx.fillRect(30 + i * bw + 1, canvas.height - 20 - bh, bw - 2, bh);
    });
    const one = canvas.height - 20 - (canvas.height - 30) / top;
    ctx.strokeStyle = "#c33";
    ctx.beginPath(); ctx.moveTo(30, one); ctx.lineTo(canvas.width - 10, one); ctx.stroke();
    $("p-out").textContent =
      `coverage ${v.coverage.toFixed(1)}% (nominal ${v.nominal.toFixed(1)}%)\n` +
      `mean CRPS ${v.mean_crps.toFixed(3)} vs ${v.ideal_crps.toFixed(3)} for the true distributions`;
  });
}

await init();
for (const el of document.querySelectorAll("#crps input")) el.addEventListener("input", updateCrps);
for (const el of document.querySelectorAll("#chain input")) el.addEventListener("input", updateChain);
for (const el of document.querySelectorAll("#calib input")) el.addEventListener("change", updateCalib);
updateCrps();
updateChain();
updateCalib();
