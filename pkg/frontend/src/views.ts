/** Screen renderers. Every figure on screen comes from a gateway response;
 * nothing here recomputes blade state locally. */

import { GatewayClient, GatewayError } from "./api.js";
import { badge, clear, el, stateBadge } from "./dom.js";
import { actionGates } from "./gating.js";
import { RegistryFilters, SortSpec, filterBlades, page, sortBlades } from "./registry.js";
import type {
  BladeRecord,
  ChainEventMessage,
  HistoryResponse,
  InspectionEvent,
} from "./types.js";
import { BLADE_STATES, ORGS } from "./types.js";

function fmtBytes(n: number): string {
  if (n > 1024 * 1024) return `${(n / 1024 / 1024).toFixed(1)} MiB`;
  if (n > 1024) return `${(n / 1024).toFixed(1)} KiB`;
  return `${n} B`;
}

function errorBanner(message: string): HTMLElement {
  return el("div", { class: "banner error" }, [message]);
}

// -- dashboard ---------------------------------------------------------------

export async function renderDashboard(root: HTMLElement, client: GatewayClient): Promise<void> {
  clear(root);
  try {
    const stats = await client.getStats();
    const cards = el("div", { class: "cards" });
    for (const state of BLADE_STATES) {
      cards.append(
        el("div", { class: "card" }, [
          el("div", { class: "card-number" }, [String(stats.census[state] ?? 0)]),
          stateBadge(state),
        ]),
      );
    }
    root.append(
      el("h2", {}, ["Fleet dashboard"]),
      cards,
      el("div", { class: "cards" }, [
        el("div", { class: "card" }, [
          el("div", { class: "card-number" }, [String(stats.inspection_due)]),
          el("div", {}, ["inspections due"]),
        ]),
        el("div", { class: "card" }, [
          el("div", { class: "card-number" }, [String(stats.chain_height)]),
          el("div", {}, ["chain height"]),
        ]),
        el("div", { class: "card" }, [
          el("div", { class: "card-number" }, [String(stats.artifacts.count)]),
          el("div", {}, [`artifacts (${fmtBytes(stats.artifacts.total_bytes)})`]),
        ]),
        el("div", { class: "card" }, [
          el("div", { class: "card-number" }, [stats.detector.modelVersion]),
          el("div", {}, [`detector ${stats.detector.modelName}`]),
        ]),
      ]),
    );
  } catch (err) {
    root.append(errorBanner(`gateway unreachable: ${(err as Error).message}`));
  }
}

// -- registry ----------------------------------------------------------------

export interface RegistryState {
  filters: RegistryFilters;
  sort: SortSpec;
  pageIndex: number;
}

export async function renderRegistry(
  root: HTMLElement,
  client: GatewayClient,
  state: RegistryState,
  rerender: () => void,
): Promise<void> {
  clear(root);
  let blades: BladeRecord[];
  try {
    // Server-side state filter mirrors the chaincode query; the remaining
    // filters are pure client-side projections.
    blades = (await client.listBlades(state.filters.state || undefined)).blades;
  } catch (err) {
    root.append(errorBanner(`gateway unreachable: ${(err as Error).message}`));
    return;
  }
  const visible = sortBlades(filterBlades(blades, state.filters), state.sort);
  const { rows, pages } = page(visible, state.pageIndex);

  const controls = el("div", { class: "controls" }, [
    el("input", {
      placeholder: "serial contains...",
      value: state.filters.serial ?? "",
      oninput: (ev) => {
        state.filters.serial = (ev.target as HTMLInputElement).value;
        state.pageIndex = 0;
        rerender();
      },
    }),
    select(["", ...ORGS], state.filters.owner ?? "", (value) => {
      state.filters.owner = value || undefined;
      state.pageIndex = 0;
      rerender();
    }, "any owner"),
    select(["", ...BLADE_STATES], state.filters.state ?? "", (value) => {
      state.filters.state = value || undefined;
      state.pageIndex = 0;
      rerender();
    }, "any state"),
  ]);

  const header = el("tr", {});
  const columns: [string, SortSpec["key"]][] = [
    ["Serial", "serialNumber"],
    ["Owner", "currentOwner"],
    ["State", "currentState"],
    ["Hours", "totalFlightHours"],
    ["Cycles", "totalFlightCycles"],
    ["Updated", "updatedAt"],
  ];
  for (const [label, key] of columns) {
    header.append(
      el("th", {
        onclick: () => {
          state.sort = {
            key,
            descending: state.sort.key === key ? !state.sort.descending : false,
          };
          rerender();
        },
      }, [label + (state.sort.key === key ? (state.sort.descending ? " ▼" : " ▲") : "")]),
    );
  }
  const table = el("table", { class: "registry" }, [header]);
  for (const blade of rows) {
    table.append(
      el("tr", {}, [
        el("td", {}, [
          el("a", { href: `#/blade/${blade.serialNumber}` }, [blade.serialNumber]),
        ]),
        el("td", {}, [blade.currentOwner]),
        el("td", {}, [stateBadge(blade.currentState)]),
        el("td", {}, [blade.totalFlightHours]),
        el("td", {}, [String(blade.totalFlightCycles)]),
        el("td", {}, [blade.updatedAt]),
      ]),
    );
  }
  const pager = el("div", { class: "pager" }, [
    el("button", {
      disabled: state.pageIndex === 0,
      onclick: () => {
        state.pageIndex -= 1;
        rerender();
      },
    }, ["prev"]),
    ` page ${state.pageIndex + 1}/${pages} (${visible.length} blades) `,
    el("button", {
      disabled: state.pageIndex >= pages - 1,
      onclick: () => {
        state.pageIndex += 1;
        rerender();
      },
    }, ["next"]),
  ]);
  root.append(el("h2", {}, ["Blade registry"]), controls, table, pager);
}

function select(
  options: string[],
  current: string,
  onChange: (value: string) => void,
  emptyLabel: string,
): HTMLElement {
  const node = el("select", {
    onchange: (ev) => onChange((ev.target as HTMLSelectElement).value),
  });
  for (const option of options) {
    const item = el("option", { value: option }, [option || emptyLabel]);
    if (option === current) item.setAttribute("selected", "");
    node.append(item);
  }
  return node;
}

// -- dossier ----------------------------------------------------------------

export async function renderDossier(
  root: HTMLElement,
  client: GatewayClient,
  serial: string,
  rerender: () => void,
): Promise<void> {
  clear(root);
  let history: HistoryResponse;
  try {
    history = await client.getHistory(serial);
  } catch (err) {
    root.append(errorBanner((err as Error).message));
    return;
  }
  const blade = history.blade;
  const gates = actionGates(blade, history.inspections, client.org);

  const facts = el("table", { class: "facts" });
  const fields: [string, string][] = [
    ["State", blade.currentState],
    ["Owner", blade.currentOwner],
    ["Total flight hours", blade.totalFlightHours],
    ["Total flight cycles", String(blade.totalFlightCycles)],
    ["Hours since inspection", blade.hoursSinceInspection],
    ["Cycles since inspection", String(blade.cyclesSinceInspection)],
    ["Days since inspection", String(blade.daysSinceInspection)],
    ["Due reason", blade.inspectionDueReason || "—"],
    ["Next inspection due", blade.nextInspectionDue || "—"],
    ["Manufactured", blade.manufactureDate],
  ];
  for (const [label, value] of fields) {
    facts.append(el("tr", {}, [el("th", {}, [label]), el("td", {}, [value])]));
  }

  const actions = el("div", { class: "actions" });
  const act = (label: string, enabled: boolean, run: () => Promise<unknown>) =>
    actions.append(
      el("button", {
        disabled: !enabled,
        onclick: async () => {
          try {
            await run();
          } catch (err) {
            alert(err instanceof GatewayError ? err.message : String(err));
          }
          rerender();
        },
      }, [label]),
    );
  act("Release to AIRLINE", gates.release, () => client.release(serial, "AIRLINE"));
  act("Approve return to service", gates.approve, () => client.approve(serial));
  act("Send to repair", gates.repair, () => client.sendToRepair(serial));
  act("Complete repair", gates.completeRepair, () =>
    client.completeRepair(serial, prompt("repair notes") ?? ""));
  act("Scrap", gates.scrap, () => client.scrap(serial, prompt("scrap reason") ?? ""));

  root.append(
    el("h2", {}, [`Blade ${serial} `, stateBadge(blade.currentState)]),
    facts,
    actions,
  );

  if (gates.inspect) root.append(inspectionForm(client, serial, rerender));

  root.append(el("h3", {}, [`Inspections (${history.inspections.length})`]));
  for (const event of [...history.inspections].reverse()) {
    root.append(inspectionCard(client, event));
  }
  if (history.repairs.length) {
    root.append(el("h3", {}, [`Repairs & disposals (${history.repairs.length})`]));
    for (const event of [...history.repairs].reverse()) {
      root.append(
        el("div", { class: "inspection" }, [
          el("strong", {}, [event.inspectionType]),
          ` ${event.timestamp} by ${event.inspector}@${event.organization} `,
          el("em", {}, [event.notes]),
        ]),
      );
    }
  }
}

function inspectionForm(client: GatewayClient, serial: string, rerender: () => void): HTMLElement {
  const MAX_UPLOAD = 16 * 1024 * 1024;
  const file = el("input", { type: "file" }) as HTMLInputElement;
  const notes = el("input", { placeholder: "notes" }) as HTMLInputElement;
  const status = el("span", { class: "muted" });
  const button = el("button", {
    onclick: async () => {
      const selected = file.files?.[0];
      if (!selected) {
        status.textContent = "choose an image first";
        return;
      }
      if (selected.size > MAX_UPLOAD) {
        status.textContent = `file too large (${fmtBytes(selected.size)} > ${fmtBytes(MAX_UPLOAD)})`;
        return; // client-side rejection before any upload
      }
      status.textContent = "running detection and committing...";
      try {
        const result = await client.submitInspection(serial, selected, notes.value);
        status.textContent =
          `committed ${result.tx_id.slice(0, 12)}…: ${result.event.overallResult}, ` +
          `${result.event.defectCount} defect(s), cid ${result.artifact.cid.slice(0, 18)}…`;
      } catch (err) {
        status.textContent = err instanceof GatewayError ? err.message : String(err);
      }
      rerender();
    },
  }, ["Submit inspection"]);
  return el("div", { class: "inspect-form" }, [
    el("h3", {}, ["Submit inspection (as MRO)"]),
    file, notes, button, status,
  ]);
}

function inspectionCard(client: GatewayClient, event: InspectionEvent): HTMLElement {
  const card = el("div", { class: "inspection" });
  card.append(
    el("div", {}, [
      badge(event.overallResult, `result-${event.overallResult.toLowerCase()}`),
      ` ${event.inspectionType} — ${event.inspectionDate} by ${event.inspector}@${event.organization}`,
    ]),
    el("div", { class: "muted" }, [
      `model ${event.aiModelName} ${event.aiModelVersion} · ${event.defectCount} defect(s) · ` +
      `${event.flightHoursAtInspection} h / ${event.flightCyclesAtInspection} cyc at inspection`,
    ]),
  );
  if (event.detectedDefects.length) {
    const list = el("ul", {});
    for (const defect of event.detectedDefects) {
      list.append(
        el("li", {}, [
          `${defect.defectType} (${(defect.confidence * 100).toFixed(1)}%) ` +
          `box [${defect.x1},${defect.y1}]–[${defect.x2},${defect.y2}]`,
        ]),
      );
    }
    card.append(list);
  }
  if (event.imageIPFS) {
    const verdict = el("span", {});
    card.append(
      el("div", { class: "evidence" }, [
        el("div", {}, [
          "artifact ",
          el("a", { href: client.artifactUrl(event.imageIPFS) }, [event.imageIPFS.slice(0, 24) + "…"]),
        ]),
        el("div", { class: "mono" }, [`on-chain sha256 ${event.imageHash}`]),
        el("button", {
          onclick: async () => {
            verdict.textContent = "verifying…";
            try {
              const result = await client.verifyEvidence(event.eventID);
              clear(verdict as HTMLElement);
              verdict.append(
                badge(result.verified ? "MATCH" : "MISMATCH", result.verified ? "ok" : "bad"),
                el("div", { class: "mono" }, [`expected ${result.expected_hash}`]),
                el("div", { class: "mono" }, [`recomputed ${result.actual_hash || "(unreachable)"}`]),
              );
            } catch (err) {
              verdict.textContent = `verification error: ${(err as Error).message}`;
            }
          },
        }, ["Verify evidence"]),
        verdict,
      ]),
    );
  }
  return card;
}

// -- live feed -----------------------------------------------------------------

export function renderFeed(root: HTMLElement, events: [number, ChainEventMessage][]): void {
  clear(root);
  root.append(el("h2", {}, ["Live event feed"]));
  const list = el("div", { class: "feed" });
  for (const [seq, event] of [...events].reverse().slice(0, 200)) {
    const serial =
      (event.payload["serialNumber"] as string | undefined) ??
      ((event.payload["blade"] as Record<string, unknown> | undefined)?.[
        "serialNumber"
      ] as string | undefined) ??
      "";
    list.append(
      el("div", { class: "feed-item" }, [
        el("span", { class: "muted" }, [`#${seq} block ${event.block_number} `]),
        badge(event.name, "event"),
        ` ${serial}`,
      ]),
    );
  }
  if (!events.length) list.append(el("div", { class: "muted" }, ["no events yet"]));
  root.append(list);
}
