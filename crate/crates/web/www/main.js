import init, { extractionScene, explainScene, lemmaScene } from "./pkg/cfx_web.js";

// must match the canvas geometry in src/svg.rs and the data box in src/scene.rs
const PAD = 28, SIZE = 420, LO = 0, HI = 6;

function show(section, run) {
  const plot = section.querySelector(".plot");
  const summary = section.querySelector(".summary");
  summary.classList.remove("error");
  summary.textContent = "working…";
  // let the browser paint before blocking on the computation
  setTimeout(() => {
    try {
      const scene = run();
      plot.innerHTML = scene.svg;
      summary.textContent = scene.summary;
      scene.free();
    } catch (e) {
      summary.classList.add("error");
      summary.textContent = String(e.message || e);
    }
  }, 10);
}

function extraction() {
  const section = document.getElementById("extract");
  const f = section.querySelector("form");
  const size = () => 2 ** Number(f.log2.value);
  f.log2.addEventListener("input", () => { f.shown.value = size(); });
  const go = () => show(section, () =>
    extractionScene(f.dataset.value, f.strategy.value, size(), Number(f.run.value)));
  f.addEventListener("submit", (e) => { e.preventDefault(); go(); });
  go();
}

function explain() {
  const section = document.getElementById("explain");
  const f = section.querySelector("form");
  const plot = section.querySelector(".plot");
  let point = [1.5, 2.0];
  const go = () => show(section, () =>
    explainScene(f.dataset.value, point[0], point[1], Number(f.threshold.value)));
  f.threshold.addEventListener("input", () => { f.shown.value = Number(f.threshold.value).toFixed(2); });
  f.threshold.addEventListener("change", go);
  f.dataset.addEventListener("change", go);
  plot.addEventListener("click", (e) => {
    const svg = plot.querySelector("svg");
    if (!svg) return;
    const r = svg.getBoundingClientRect();
    const scale = (SIZE + 2 * PAD) / r.width;
    const u = ((e.clientX - r.left) * scale - PAD) / SIZE;
    const v = 1 - ((e.clientY - r.top) * scale - PAD) / SIZE;
    if (u < 0 || u > 1 || v < 0 || v > 1) return;
    point = [LO + u * (HI - LO), LO + v * (HI - LO)];
    go();
  });
  go();
}

function lemma() {
  const section = document.getElementById("lemma");
  const f = section.querySelector("form");
  f.addEventListener("submit", (e) => {
    e.preventDefault();
    f.seed.value = Number(f.seed.value) + 1;
    show(section, () => lemmaScene(Number(f.seed.value)));
  });
  f.seed.addEventListener("change", () => show(section, () => lemmaScene(Number(f.seed.value))));
  show(section, () => lemmaScene(Number(f.seed.value)));
}

const status = document.getElementById("status");
init().then(() => {
  status.textContent = "The first scene on each dataset trains its cloud model in the page; later scenes reuse it.";
  lemma();
  extraction();
  explain();
}).catch((e) => {
  status.classList.add("error");
  status.textContent = "Could not load the WebAssembly module: " + e;
});
