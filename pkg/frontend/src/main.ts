// Entry point: wire the view model to the DOM against a local service.

import { ServiceClient } from "./api.js";
import { ExplorerRenderer } from "./render.js";
import { ExplorerViewModel } from "./viewmodel.js";

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("service") ?? "http://127.0.0.1:8642";
  const policy = params.get("policy") ?? "uniform-random";
  const seed = Number(params.get("seed") ?? "0");

  const vm = new ExplorerViewModel(new ServiceClient(base), policy, seed);
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");

  const renderer = new ExplorerRenderer(
    root,
    vm,
    (cocktail) => {
      void vm.playRound(cocktail).then(() => renderer.render());
    },
    () => {
      void vm.reset().then(() => renderer.render());
    },
    () => {
      void vm.computeWhatIf().then(() => renderer.render());
    }
  );

  await vm.start();
  renderer.render();
}

void boot().catch((err) => {
  const root = document.getElementById("app");
  if (root) {
    root.textContent = `cannot reach the service: ${err}`;
  }
});
