import init, { dirichlet_table, landau_levels, peak_profile } from "./pkg/peaklab_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function showTable() {
  const rows = JSON.parse(dirichlet_table(num("c"), num("kmax"), num("bound")));
  $("table").innerHTML =
    "<tr><th>k</th><th>m</th><th>|kc − m|</th></tr>" +
    rows.map((r) => `<tr><td>${r.k}</td><td>${r.m}</td><td>${r.err.toExponential(3)}</td></tr>`).join("");
}

function showLevels() {
  try {
    const v = landau_levels(num("lgrid"), num("lflux"), num("lcount"));
    $("levels").textContent = Array.from(v, (x) => x.toFixed(6)).join("\n");
  } catch (e) {
    $("levels").textContent = String(e);
  }
}

let center = [0, 0];

function showPeak() {
  const n = num("pgrid");
  const canvas = $("canvas");
  canvas.width = n;
  canvas.height = n;
  let v;
  try {
    v = peak_profile(n, num("pflux"), num("pk"), center[0], center[1]);
  } catch (e) {
    $("peakinfo").textContent = String(e);
    return;
  }
  const max = v.reduce((a, b) => Math.max(a, b), 0);
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(n, n);
  // site index is x * N + y; draw x to the right and y upward
  for (let x = 0; x < n; x++) {
    for (let y = 0; y < n; y++) {
      const t = v[x * n + y] / max;
      const p = 4 * ((n - 1 - y) * n + x);
      img.data[p] = 255 * t;
      img.data[p + 1] = 255 * t * t;
      img.data[p + 2] = 255 * (1 - t) * 0.6;
      img.data[p + 3] = 255;
    }
  }
  ctx.putImageData(img, 0, 0);
  $("peakinfo").textContent =
    `centre (${center[0]}, ${center[1]}), |s_h(x)| = ${v[center[0] * n + center[1]].toFixed(4)}, max ${max.toFixed(4)}`;
}

$("canvas").addEventListener("click", (ev) => {
  const n = num("pgrid");
  const r = ev.target.getBoundingClientRect();
  center = [
    Math.floor(((ev.clientX - r.left) / r.width) * n),
    n - 1 - Math.floor(((ev.clientY - r.top) / r.height) * n),
  ];
  showPeak();
});

await init();
$("status").textContent = "";
$("dirichlet").onclick = showTable;
$("landau").onclick = showLevels;
for (const id of ["pgrid", "pflux", "pk"]) $(id).onchange = showPeak;
showTable();
showPeak();
