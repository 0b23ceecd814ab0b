import init, { MapSession, sampleGraph } from "./pkg/citymap_web.js";

const $ = id => document.getElementById(id);
let session = null;
let picked = null;

function status(text) {
  $("status").textContent = text;
}

function draw() {
  if (!session) return;
  const channel = $("channel").value || undefined;
  $("map").innerHTML = session.svg(channel, $("flat").checked);
  picked = null;
  $("links").textContent = "";
}

function build() {
  try {
    const started = performance.now();
    session?.free();
    session = new MapSession($("graph").value);
    const select = $("channel");
    select.length = 1;
    for (const name of session.channels()) select.add(new Option(name, name));
    draw();
    const ms = Math.round(performance.now() - started);
    status(`${session.summary()}\nbuilt in ${ms} ms\n${session.warnings().join("\n")}`);
  } catch (err) {
    session = null;
    $("map").innerHTML = "";
    status(`error: ${err.message ?? err}`);
  }
}

function highlight(event) {
  const building = event.target.closest(".building");
  const map = $("map");
  picked?.classList.remove("picked");
  if (!session || !building || building === picked) {
    picked = null;
    for (const link of map.querySelectorAll(".link")) link.classList.remove("dim");
    $("links").textContent = "";
    return;
  }
  picked = building;
  building.classList.add("picked");
  const id = building.dataset.id;
  const ids = new Set(session.highlight(id));
  for (const link of map.querySelectorAll(".link")) link.classList.toggle("dim", !ids.has(link.dataset.id));
  const lines = [...map.querySelectorAll(".link")]
    .filter(link => ids.has(link.dataset.id))
    .map(link => link.dataset.source === id ? `-> ${link.dataset.target}` : `<- ${link.dataset.source}`);
  $("links").textContent = `${id}: ${ids.size} links\n` + lines.join("\n");
}

function sample() {
  $("graph").value = sampleGraph(Number($("classes").value), Number($("seed").value));
}

await init();
$("sample").onclick = () => { sample(); build(); };
$("build").onclick = build;
$("channel").onchange = draw;
$("flat").onchange = draw;
$("map").onclick = highlight;
$("links").style.whiteSpace = "pre";
sample();
build();
