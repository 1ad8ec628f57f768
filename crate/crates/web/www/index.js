import init, { explore, compareOracle, sampleAndDiscover } from "./pkg/mimb_web.js";

const $ = (id) => document.getElementById(id);
const list = (xs) => (xs.length ? xs.join(", ") : "∅");
const inputs = () => [$("graph").value, $("family").value, $("target").value];

function run(outId, f) {
  $("error").textContent = "";
  try {
    $(outId).innerHTML = f();
  } catch (e) {
    $(outId).innerHTML = "";
    $("error").textContent = e.message ?? String(e);
  }
}

function renderExplore(r) {
  const rows = r.experiments.map((x, i) => {
    const cut = x.removed_edges.map(([a, b]) => `<span class="cut">${a}→${b}</span>`).join(" ");
    return `<tr><td>${i}</td><td>${list(x.manipulated)}</td><td>${cut || "none"}</td><td>${list(x.mb)}</td></tr>`;
  });
  const rep = r.report;
  const mark = (ok) => (ok ? '<span class="pass">holds</span>' : '<span class="fail">violated</span>');
  return `<table><tr><th>#</th><th>manipulated</th><th>edges cut</th><th>blanket of ${rep.target}</th></tr>${rows.join("")}</table>
    <table>
      <tr><th>true MB</th><td>${list(rep.mb)}</td></tr>
      <tr><th>parents</th><td>${list(rep.pa)}</td></tr>
      <tr><th>union</th><td>${list(rep.union)}</td><td>${rep.union_row}: ${rep.union_relation}${rep.union_subcase ? ` (${rep.union_subcase})` : ""}</td><td>${mark(rep.union_pass)}</td></tr>
      <tr><th>intersection</th><td>${list(rep.intersection)}</td><td>${rep.intersection_row}: ${rep.intersection_relation}</td><td>${mark(rep.intersection_pass)}</td></tr>
    </table>`;
}

function renderComparison(r) {
  const row = (name, s) =>
    `<tr><td>${name}</td><td>${list(s.mb)}</td><td>${list(s.pa)}</td><td>${s.score.precision.toFixed(2)}</td><td>${s.score.recall.toFixed(2)}</td><td>${s.score.f1.toFixed(2)}</td><td>${s.n_tests} (${s.tests_per_dataset.join(" + ")})</td></tr>`;
  return `<table>
    <tr><th></th><th>MB</th><th>parents</th><th>precision</th><th>recall</th><th>F1</th><th>tests</th></tr>
    <tr><td>truth</td><td>${list(r.truth_mb)}</td><td>${list(r.truth_pa)}</td><td colspan="4"></td></tr>
    ${row("MIMB", r.mimb)}${row("baseline", r.baseline)}
  </table>`;
}

await init();

$("explore").onclick = () => run("explore-out", () => renderExplore(JSON.parse(explore(...inputs()))));
$("compare").onclick = () =>
  run("compare-out", () =>
    renderComparison(JSON.parse(compareOracle(...inputs(), Number($("max-cond").value), $("symmetry").checked))),
  );
$("sample").onclick = () =>
  run("sample-out", () =>
    renderComparison(
      JSON.parse(sampleAndDiscover(...inputs(), Number($("rows").value), Number($("alpha").value), Number($("seed").value))),
    ),
  );
