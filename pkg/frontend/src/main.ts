// Browser entry point: connect, pick an app, render its form, run it.

import { ApiClient, HttpApiClient } from "./api.js";
import { RunController } from "./controller.js";
import { FormModel } from "./form.js";
import { formatOutput, renderForm } from "./render.js";
import { renderOutputs, renderReport } from "./report.js";
import { cellText } from "./render.js";
import { CellJson } from "./types.js";
import { VNode, h, mount } from "./vdom.js";

function clear(el: Element): void {
  while (el.firstChild) el.removeChild(el.firstChild);
}

function repaintInto(el: Element, nodes: (VNode | string)[]): void {
  clear(el);
  for (const node of nodes) mount(node, el);
}

async function openApp(client: ApiClient, appId: string, root: Element): Promise<void> {
  const app = await client.getApp(appId);
  const model = new FormModel(app);
  const controller = new RunController(client, model, repaint);

  function statusPanel(): VNode[] {
    const s = controller.state;
    const nodes: VNode[] = [];
    if (s.banner !== null) {
      nodes.push(h("div", { class: "banner", role: "alert" }, [
        s.banner,
        ...(s.staleDefinition
          ? [h("button", { class: "reload", type: "button" }, ["Reload app"], {
              click: () => void openApp(client, appId, root),
            })]
          : []),
      ]));
    }
    if (s.phase === "running") {
      nodes.push(h("div", { class: "running" }, [`Running… job ${s.jobId ?? ""}`]));
    }
    if (s.phase === "failed" && s.failure !== null) {
      nodes.push(h("div", { class: "failure-panel", role: "alert" }, [
        `Run failed (${s.failure.code}): ${s.failure.message}. `,
        `Quote job id ${s.jobId ?? "?"} when contacting support.`,
      ]));
    }
    if (s.phase === "done" && s.result !== null) {
      if (s.result.outcome === "ACTION_ERROR") {
        nodes.push(h("div", { class: "action-error", role: "alert" }, [s.result.message]));
      }
      nodes.push(renderOutputs(s.result));
      if (s.result.report !== null) {
        nodes.push(renderReport(s.result.report));
      }
    }
    return nodes;
  }

  const outputFormats = new Map<string, string>();
  (function collect(doc: { kind: string; id: string; format?: string;
      tabs?: unknown[]; children?: unknown[] }) {
    if (doc.kind === "OutputField" && doc.format !== undefined) {
      outputFormats.set(doc.id, doc.format);
    }
    for (const child of (doc.tabs ?? []).concat(doc.children ?? [])) {
      collect(child as typeof doc);
    }
  })(app.document.root);

  function fillOutputs(formEl: Element): void {
    const result = controller.state.result;
    if (result === null) return;
    for (const [id, value] of Object.entries(result.outputs)) {
      const slot = formEl.querySelector(`[data-component="${id}"] .output-value`);
      if (slot !== null && !Array.isArray(value)) {
        slot.textContent = formatOutput(value as CellJson, outputFormats.get(id));
      }
      const tbody = formEl.querySelector(`[data-component="${id}"] tbody`);
      if (tbody !== null && Array.isArray(value)) {
        clear(tbody);
        for (const row of value as CellJson[][]) {
          mount(h("tr", {}, row.map((cell) => h("td", {}, [cellText(cell)]))), tbody as Element);
        }
      }
    }
  }

  function repaint(): void {
    repaintInto(root, [
      renderForm(model, {
        onInput: (id, raw) => model.setValue(id, raw),
        onTab: (index) => {
          model.activeTab = index;
          repaint();
        },
        onButton: (id) => void controller.submit(id),
      }),
      h("div", { class: "run-controls" }, [
        h("button", { class: "submit", type: "button" }, ["Run"], {
          click: () => void controller.submit(null),
        }),
      ]),
      h("div", { class: "status-area" }, statusPanel()),
    ]);
    fillOutputs(root);
  }

  repaint();
}

async function connect(): Promise<void> {
  const root = document.getElementById("app");
  if (root === null) return;
  const params = new URLSearchParams(window.location.search);
  const server = params.get("server") ?? window.location.origin;
  const token = params.get("token") ?? "";
  if (token === "") {
    repaintInto(root, [
      h("p", { class: "hint" }, [
        "Append ?server=http://127.0.0.1:8333&token=<your token> to the URL to connect.",
      ]),
    ]);
    return;
  }
  const client = new HttpApiClient(server, token);
  const apps = await client.listApps();
  repaintInto(root, [
    h("h1", {}, ["Available applications"]),
    h("ul", { class: "app-list" }, apps.map((app) =>
      h("li", {}, [
        h("button", { class: "open-app", type: "button" }, [`${app.title} (r${app.revision})`], {
          click: () => void openApp(client, app.app_id, root),
        }),
      ]))),
  ]);
}

void connect();
