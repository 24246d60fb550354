import init, { divergences, hausdorff_profile, gauss_seq_rate } from "./pkg/contraction_web.js";

const $ = (id) => document.getElementById(id);
const fmt = (x) => (typeof x === "number" ? (Math.abs(x) < 1e-3 && x !== 0 ? x.toExponential(3) : x.toFixed(6)) : String(x));

function table(rows, cols) {
  const head = cols.map((c) => `<th>${c}</th>`).join("");
  const body = rows.map((r) => `<tr>${cols.map((c) => `<td>${fmt(r[c])}</td>`).join("")}</tr>`).join("");
  return `<table><tr>${head}</tr>${body}</table>`;
}

function show(el, json, render) {
  const v = JSON.parse(json);
  el.innerHTML = v.error ? `<p class="error">${v.error}</p>` : render(v);
}

// log-log polyline plot; each series is {name, xs, ys, dashed}
function loglog(series, w = 520, h = 300, pad = 44) {
  const pts = series.flatMap((s) => s.xs.map((x, i) => [x, s.ys[i]])).filter(([x, y]) => x > 0 && y > 0);
  if (!pts.length) return "";
  const lx = pts.map((p) => Math.log10(p[0])), ly = pts.map((p) => Math.log10(p[1]));
  let [x0, x1, y0, y1] = [Math.min(...lx), Math.max(...lx), Math.min(...ly), Math.max(...ly)];
  if (x1 - x0 < 1e-9) x1 = x0 + 1;
  if (y1 - y0 < 1e-9) { y0 -= 0.5; y1 += 0.5; }
  const sx = (x) => pad + ((Math.log10(x) - x0) / (x1 - x0)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((Math.log10(y) - y0) / (y1 - y0)) * (h - 2 * pad);
  const colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
  let out = `<svg width="${w}" height="${h}" font-size="11"><path d="M${pad} ${pad}V${h - pad}H${w - pad}" fill="none" stroke="#000"/>`;
  series.forEach((s, k) => {
    const p = s.xs.map((x, i) => [x, s.ys[i]]).filter(([x, y]) => x > 0 && y > 0);
    const c = colors[k % colors.length];
    out += `<polyline fill="none" stroke="${c}" stroke-width="2" ${s.dashed ? 'stroke-dasharray="5 4"' : ""} points="${p.map(([x, y]) => `${sx(x)},${sy(y)}`).join(" ")}"/>`;
    out += `<text x="${w - pad - 150}" y="${pad + 14 * k}" fill="${c}">${s.name}</text>`;
  });
  out += `<text x="${w / 2}" y="${h - 8}" text-anchor="middle">log-log axes</text></svg>`;
  return out;
}

function runDivergences() {
  show($("div-out"), divergences($("div-f").value, $("div-g").value), (v) =>
    table(
      [
        { quantity: "H", value: v.hellinger },
        { quantity: "H*", value: v.hellinger_star },
        { quantity: "H/√3 (lower)", value: v.sandwich_lower },
        { quantity: "sup(f/g)^¼·H (upper)", value: v.sandwich_upper },
        { quantity: "E_f √(f/g)", value: v.inverse_root_moment },
        { quantity: "E_f √(g/f)", value: v.affinity },
        { quantity: "|E_f√(f/g) − 1 − 1.5H*²|", value: v.identity_error },
        { quantity: "|E_f√(g/f) − 1 + H²/2|", value: v.affinity_error },
      ],
      ["quantity", "value"],
    ),
  );
}

function runProfile() {
  show(
    $("hp-out"),
    hausdorff_profile($("hp-points").value, $("hp-weights").value, Number($("hp-alpha").value), $("hp-deltas").value),
    (rows) =>
      table(rows, ["delta", "covering_number", "hausdorff_constant", "lower", "upper", "exact"]) +
      loglog([
        { name: "C(δ)", xs: rows.map((r) => r.delta), ys: rows.map((r) => r.hausdorff_constant) },
        { name: "N(δ)", xs: rows.map((r) => r.delta), ys: rows.map((r) => r.covering_number) },
        { name: "Π^α N^(1−α)", xs: rows.map((r) => r.delta), ys: rows.map((r) => r.upper), dashed: true },
      ]),
  );
}

function runRate() {
  $("gs-out").textContent = "running…";
  // let the status paint before the synchronous computation
  setTimeout(() => {
    const json = gauss_seq_rate(Number($("gs-gamma").value), Number($("gs-reps").value), Number($("gs-max").value), BigInt($("gs-seed").value));
    show($("gs-out"), json, (v) => {
      const anchor = v.radius[0] / Math.pow(v.n[0], v.predicted);
      return (
        `<p>fitted slope ${fmt(v.slope)} (95% band ${fmt(v.slope_lower)} … ${fmt(v.slope_upper)}), predicted ${fmt(v.predicted)}</p>` +
        table(v.n.map((n, i) => ({ n, epsilon_n: v.epsilon_n[i], radius: v.radius[i], tail_mass: v.tail_mass[i] })), ["n", "epsilon_n", "radius", "tail_mass"]) +
        loglog([
          { name: "median 0.9-radius", xs: v.n, ys: v.radius },
          { name: "predicted rate", xs: v.n, ys: v.n.map((n) => anchor * Math.pow(n, v.predicted)), dashed: true },
        ])
      );
    });
  }, 10);
}

await init();
$("div-run").onclick = runDivergences;
$("hp-run").onclick = runProfile;
$("gs-run").onclick = runRate;
runDivergences();
runProfile();
