/** Single-page bootstrap: org picker, hash routing, one SSE connection. */

import { GatewayClient } from "./api.js";
import { clear, el } from "./dom.js";
import { EventFeed } from "./sse.js";
import type { ChainEventMessage, Org } from "./types.js";
import { ORGS } from "./types.js";
import {
  RegistryState,
  renderDashboard,
  renderDossier,
  renderFeed,
  renderRegistry,
} from "./views.js";

const client = new GatewayClient("");
const registryState: RegistryState = {
  filters: {},
  sort: { key: "serialNumber", descending: false },
  pageIndex: 0,
};
const feedEvents: [number, ChainEventMessage][] = [];

const content = document.getElementById("content") as HTMLElement;
const feedTicker = document.getElementById("ticker") as HTMLElement;

const feed = new EventFeed((seq, event) => {
  feedEvents.push([seq, event]);
  feedTicker.textContent = `last event: ${event.name} (#${seq})`;
  const route = currentRoute();
  if (route[0] === "feed") render();
  if (route[0] === "dashboard") render(); // census counters move live
});
feed.connect();

function currentRoute(): string[] {
  const hash = window.location.hash.replace(/^#\/?/, "");
  return hash ? hash.split("/") : ["dashboard"];
}

async function render(): Promise<void> {
  const route = currentRoute();
  switch (route[0]) {
    case "registry":
      await renderRegistry(content, client, registryState, render);
      break;
    case "blade":
      await renderDossier(content, client, decodeURIComponent(route[1] ?? ""), render);
      break;
    case "feed":
      renderFeed(content, feedEvents);
      break;
    default:
      await renderDashboard(content, client);
  }
}

function buildChrome(): void {
  const nav = document.getElementById("nav") as HTMLElement;
  clear(nav);
  nav.append(
    el("a", { href: "#/dashboard" }, ["Dashboard"]),
    el("a", { href: "#/registry" }, ["Registry"]),
    el("a", { href: "#/feed" }, ["Events"]),
  );
  const picker = document.getElementById("org-picker") as HTMLElement;
  clear(picker);
  picker.append("acting as ");
  const selectNode = el("select", {
    onchange: (ev) => {
      client.org = (ev.target as HTMLSelectElement).value as Org;
      render();
    },
  });
  for (const org of ORGS) {
    const option = el("option", { value: org }, [org]);
    if (org === client.org) option.setAttribute("selected", "");
    selectNode.append(option);
  }
  picker.append(selectNode);
}

window.addEventListener("hashchange", render);
buildChrome();
render();
