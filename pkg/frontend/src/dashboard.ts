/**
 * Active-learning dashboard: per-iteration F1 curve from the history CSV
 * endpoint plus the service's queue summary.
 *
 * The table and the curve's data attributes carry the CSV field strings
 * unchanged; floats are parsed only to place points on the canvas.
 */

import { historyCsv, summary } from "./api.js";

export interface HistoryTable {
  header: string[];
  rows: string[][];
}

/** Split the raw CSV, dropping the leading # provenance comment. */
export function parseHistoryCsv(text: string): HistoryTable {
  // history fields are plain numbers, so a comma split is exact
  const lines = text.split("\n").filter((ln) => ln.length > 0 && !ln.startsWith("#"));
  if (lines.length === 0) return { header: [], rows: [] };
  const [head, ...rest] = lines;
  return { header: head.split(","), rows: rest.map((ln) => ln.split(",")) };
}

const WIDTH = 420;
const HEIGHT = 180;
const PAD = 24;

function curveSvg(table: HistoryTable): SVGSVGElement {
  const iterCol = table.header.indexOf("iteration");
  const f1Col = table.header.indexOf("mean_f1");
  const svg = document.createElementNS("http://www.w3.org/2000/svg", "svg");
  svg.setAttribute("viewBox", `0 0 ${WIDTH} ${HEIGHT}`);
  svg.setAttribute("class", "f1-curve");
  const n = table.rows.length;
  if (n === 0 || iterCol < 0 || f1Col < 0) return svg;

  const x = (i: number) => PAD + (n === 1 ? 0 : (i * (WIDTH - 2 * PAD)) / (n - 1));
  const y = (f1: number) => HEIGHT - PAD - f1 * (HEIGHT - 2 * PAD);

  const points = table.rows.map((row, i) => {
    const f1 = Number.parseFloat(row[f1Col]);
    return `${x(i)},${y(f1)}`;
  });
  const line = document.createElementNS("http://www.w3.org/2000/svg", "polyline");
  line.setAttribute("points", points.join(" "));
  line.setAttribute("fill", "none");
  line.setAttribute("stroke", "#2266aa");
  svg.appendChild(line);

  table.rows.forEach((row, i) => {
    const dot = document.createElementNS("http://www.w3.org/2000/svg", "circle");
    dot.setAttribute("cx", String(x(i)));
    dot.setAttribute("cy", String(y(Number.parseFloat(row[f1Col]))));
    dot.setAttribute("r", "3");
    dot.setAttribute("class", "f1-point");
    // displayed values stay byte-identical to the CSV
    dot.setAttribute("data-iteration", row[iterCol]);
    dot.setAttribute("data-f1", row[f1Col]);
    svg.appendChild(dot);
  });
  return svg;
}

export async function renderDashboard(root: HTMLElement): Promise<void> {
  root.textContent = "";
  const [csvText, sum] = await Promise.all([historyCsv(), summary()]);
  const table = parseHistoryCsv(csvText);

  root.appendChild(curveSvg(table));

  const grid = document.createElement("table");
  grid.className = "history-table";
  const headRow = document.createElement("tr");
  for (const name of table.header) {
    const th = document.createElement("th");
    th.textContent = name;
    headRow.appendChild(th);
  }
  grid.appendChild(headRow);
  for (const row of table.rows) {
    const tr = document.createElement("tr");
    for (const cell of row) {
      const td = document.createElement("td");
      td.textContent = cell;
      tr.appendChild(td);
    }
    grid.appendChild(tr);
  }
  root.appendChild(grid);

  const status = document.createElement("div");
  status.className = "queue-summary";
  status.textContent =
    `resolved ${sum.resolved} | pending ${sum.pending} | conflicts ${sum.conflicts} | ` +
    `mean confidence ${sum.mean_confidence}`;
  root.appendChild(status);
}
