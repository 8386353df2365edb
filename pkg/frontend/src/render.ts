// SVG/DOM rendering. Pure projection of the view model: no state of its
// own beyond the DOM nodes it owns.

import { ExplorerViewModel } from "./viewmodel.js";
import { cocktailKey } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  text?: string
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function svgEl(tag: string, attrs: Record<string, string> = {}): SVGElement {
  const node = document.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
}

export class ExplorerRenderer {
  constructor(
    private readonly root: HTMLElement,
    private readonly vm: ExplorerViewModel,
    private readonly onPick: (cocktail: string[]) => void,
    private readonly onReset: () => void,
    private readonly onWhatIf: () => void
  ) {}

  render(): void {
    this.root.replaceChildren();
    this.root.append(
      this.banner(),
      this.graph(),
      this.clockPanel(),
      this.controls(),
      this.whatIfPanel(),
      this.costChart(),
      this.historyPanel()
    );
  }

  private banner(): HTMLElement {
    const box = el("div", { class: "banner" });
    box.append(
      el("span", { class: "round" }, `round ${this.vm.round}`),
      el("span", { class: "state" }, `state: ${this.vm.currentState}`),
      el("span", { class: "recommend" }, this.vm.recommendationBanner())
    );
    if (this.vm.halted) {
      box.append(el("span", { class: "halted" }, "session terminated"));
    }
    if (this.vm.lastError) {
      box.append(el("span", { class: "error-toast" }, this.vm.lastError));
    }
    return box;
  }

  private graph(): HTMLElement {
    const wrap = el("div", { class: "graph" });
    const svg = svgEl("svg", { width: "720", height: "480" });
    const positions = new Map(this.vm.layout.map((p) => [p.id, p]));
    const enabledTargets = new Set(
      this.vm.enabledEdges.filter((e) => e.enabled).map((e) => e.to)
    );
    for (const edge of this.vm.model?.edges ?? []) {
      const a = positions.get(edge.from);
      const b = positions.get(edge.to);
      if (!a || !b) continue;
      const highlighted =
        edge.from === this.vm.currentState && enabledTargets.has(edge.to);
      svg.append(
        svgEl("line", {
          x1: String(a.x), y1: String(a.y), x2: String(b.x), y2: String(b.y),
          class: highlighted ? "edge enabled" : "edge",
        })
      );
    }
    for (const pos of this.vm.layout) {
      const group = svgEl("g", {});
      const current = pos.id === this.vm.currentState;
      group.append(
        svgEl("circle", {
          cx: String(pos.x), cy: String(pos.y), r: "26",
          class: current ? "node current" : "node",
        })
      );
      const label = svgEl("text", {
        x: String(pos.x), y: String(pos.y + 4), "text-anchor": "middle",
        class: "node-label",
      });
      label.textContent = pos.id;
      group.append(label);
      svg.append(group);
    }
    wrap.append(svg);
    return wrap;
  }

  private clockPanel(): HTMLElement {
    const box = el("div", { class: "clocks" });
    const valuation = this.vm.clockValuation;
    const parts = Object.keys(valuation)
      .sort()
      .map((c) => `${c} = ${valuation[c]}`);
    box.textContent = parts.length ? `clocks: ${parts.join(", ")}` : "untimed model";
    return box;
  }

  private controls(): HTMLElement {
    const box = el("div", { class: "controls" });
    for (const cocktail of this.vm.menu) {
      const name = cocktail.length ? cocktailKey(cocktail) : "no drugs";
      const button = el("button", { class: "pick" }, `give {${name}}`);
      button.disabled = this.vm.halted;
      button.addEventListener("click", () => this.onPick(cocktail));
      box.append(button);
    }
    const whatIf = el("button", { class: "whatif" }, "what if?");
    whatIf.disabled = this.vm.halted;
    whatIf.addEventListener("click", () => this.onWhatIf());
    const reset = el("button", { class: "reset" }, "reset");
    reset.addEventListener("click", () => this.onReset());
    box.append(whatIf, reset);
    return box;
  }

  private whatIfPanel(): HTMLElement {
    const box = el("div", { class: "whatif-panel" });
    if (!this.vm.whatIf.length) return box;
    box.append(el("h3", {}, "what-if preview (server dry runs)"));
    const table = el("table", {});
    const header = el("tr", {});
    for (const caption of ["cocktail", "adversary", "next state", "cost delta"]) {
      header.append(el("th", {}, caption));
    }
    table.append(header);
    for (const entry of this.vm.whatIf) {
      const row = el("tr", {});
      row.append(
        el("td", {}, entry.cocktail.length ? cocktailKey(entry.cocktail) : "-"),
        el("td", {}, entry.envMove),
        el("td", {}, entry.nextState + (entry.halted ? " (halts)" : "")),
        el("td", {}, entry.costDelta.map((x) => x.toFixed(4)).join(", "))
      );
      table.append(row);
    }
    box.append(table);
    return box;
  }

  private costChart(): HTMLElement {
    const box = el("div", { class: "cost-chart" });
    const series = this.vm.costSeries;
    const latest = series[series.length - 1];
    box.append(
      el("h3", {}, `accumulated cost: ${latest ? latest.cost.map((x) => x.toFixed(4)).join(", ") : "0"}`)
    );
    const svg = svgEl("svg", { width: "720", height: "120" });
    if (series.length > 1) {
      const max = Math.max(...series.map((p) => p.cost[0] ?? 0), 1e-9);
      const points = series
        .map((p, i) => {
          const x = (i / (series.length - 1)) * 700 + 10;
          const y = 110 - ((p.cost[0] ?? 0) / max) * 100;
          return `${x.toFixed(1)},${y.toFixed(1)}`;
        })
        .join(" ");
      svg.append(svgEl("polyline", { points, class: "cost-line" }));
    }
    box.append(svg);
    return box;
  }

  private historyPanel(): HTMLElement {
    const box = el("div", { class: "history" });
    box.append(el("h3", {}, "moves"));
    const list = el("ol", {});
    for (const move of this.vm.history) {
      const cocktail = move.cocktail.length ? cocktailKey(move.cocktail) : "-";
      list.append(
        el(
          "li",
          {},
          `round ${move.round}: gave {${cocktail}}, adversary ${move.env_move}, now ${move.state_after}`
        )
      );
    }
    box.append(list);
    return box;
  }
}
