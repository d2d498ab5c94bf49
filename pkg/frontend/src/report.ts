// Run output rendering: output fields/tables filled from a RunResult, plus
// the report document (headings, paragraphs, tables, line/bar charts as SVG).

import { cellText } from "./render.js";
import { CellJson, ReportSection, RunResultJson } from "./types.js";
import { VNode, h } from "./vdom.js";

export function renderOutputs(result: RunResultJson): VNode {
  const entries = Object.entries(result.outputs);
  return h("dl", { class: "run-outputs" }, entries.flatMap(([id, value]) => [
    h("dt", { "data-output": id }, [id]),
    h("dd", { "data-output-value": id }, [
      Array.isArray(value) ? gridTable(value as CellJson[][]) : cellText(value as CellJson),
    ]),
  ]));
}

function gridTable(rows: CellJson[][], labels: string[] = []): VNode {
  return h("table", { class: "value-grid" }, [
    ...(labels.length > 0
      ? [h("thead", {}, [h("tr", {}, labels.map((l) => h("th", {}, [l])))])]
      : []),
    h("tbody", {}, rows.map((row) =>
      h("tr", {}, row.map((cell) => h("td", {}, [cellText(cell)]))))),
  ]);
}

export function renderReport(report: { sections: ReportSection[] }): VNode {
  return h("article", { class: "report" }, report.sections.map(renderSection));
}

function renderSection(section: ReportSection): VNode {
  if (section.kind === "Heading") {
    return h("h2", { class: "report-heading" }, [section.text ?? ""]);
  }
  if (section.kind === "Paragraph") {
    return h("p", { class: "report-paragraph" }, [section.text ?? ""]);
  }
  if (section.kind === "Table") {
    return h("div", { class: "report-table" },
      [gridTable(section.rows ?? [], section.labels ?? [])]);
  }
  if (section.kind === "Chart") {
    return renderChart(section);
  }
  return h("div", { class: "unknown-section", role: "alert" },
    [`Unsupported report section "${section.kind}".`]);
}

const WIDTH = 360;
const HEIGHT = 160;
const PAD = 10;

function renderChart(section: ReportSection): VNode {
  const series = section.series ?? [];
  const points = series.flatMap((s) => s.points.filter((p): p is number => p !== null));
  const max = Math.max(1e-9, ...points.map((p) => Math.abs(p)));
  const body: VNode[] = [];
  for (const [seriesIndex, s] of series.entries()) {
    const values = s.points;
    if (section.chart === "BAR") {
      const slot = (WIDTH - 2 * PAD) / Math.max(1, values.length);
      const barWidth = slot / Math.max(1, series.length);
      values.forEach((value, i) => {
        if (value === null) return;
        const height = (Math.abs(value) / max) * (HEIGHT - 2 * PAD);
        body.push(h("rect", {
          class: `bar series-${seriesIndex}`,
          x: String(PAD + i * slot + seriesIndex * barWidth),
          y: String(HEIGHT - PAD - height),
          width: String(Math.max(1, barWidth - 2)),
          height: String(height),
        }));
      });
    } else {
      const step = (WIDTH - 2 * PAD) / Math.max(1, values.length - 1);
      const path = values
        .map((value, i) => {
          if (value === null) return "";
          const x = PAD + i * step;
          const y = HEIGHT - PAD - (Math.abs(value) / max) * (HEIGHT - 2 * PAD);
          return `${i === 0 ? "M" : "L"}${x.toFixed(1)},${y.toFixed(1)}`;
        })
        .filter((p) => p !== "")
        .join(" ");
      body.push(h("path", { class: `line series-${seriesIndex}`, d: path, fill: "none" }));
    }
  }
  const legend = h("div", { class: "chart-legend" },
    series.map((s) => h("span", { class: "legend-entry" }, [s.label])));
  return h("figure", { class: "report-chart", "data-chart": section.chart ?? "" }, [
    h("svg", {
      viewBox: `0 0 ${WIDTH} ${HEIGHT}`,
      width: String(WIDTH),
      height: String(HEIGHT),
    }, body),
    legend,
  ]);
}
