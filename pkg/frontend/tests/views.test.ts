// @vitest-environment jsdom
import { describe, expect, it } from "vitest";

import { GatewayClient } from "../src/api.js";
import { renderDossier, renderFeed, renderRegistry } from "../src/views.js";
import type { BladeRecord, ChainEventMessage, InspectionEvent } from "../src/types.js";

function blade(serial: string, overrides: Partial<BladeRecord> = {}): BladeRecord {
  return {
    serialNumber: serial,
    currentState: "UNDER_INSPECTION",
    currentOwner: "AIRLINE",
    manufactureDate: "2025-01-01T00:00:00Z",
    totalFlightHours: "510.0",
    totalFlightCycles: 17,
    lastFlightDate: "2025-07-01T00:00:00Z",
    hoursSinceInspection: "510.0",
    cyclesSinceInspection: 17,
    daysSinceInspection: 10,
    inspectionDueReason: "HOURS_EXCEEDED",
    nextInspectionDue: "",
    lastInspectionDate: "2025-01-02T00:00:00Z",
    totalInspections: 2,
    inspectionHistory: ["E0", "E1"],
    createdAt: "",
    updatedAt: "2025-07-02T00:00:00Z",
    ...overrides,
  };
}

const EVENT: InspectionEvent = {
  eventID: "E1",
  serialNumber: "B1",
  inspectionDate: "2025-07-02T00:00:00Z",
  inspectionType: "SCHEDULED",
  aiModelName: "StubDetector",
  aiModelVersion: "1.0.0",
  detectedDefects: [
    { defectType: "corrosion", confidence: 0.82, x1: 10, y1: 10, x2: 60, y2: 70 },
  ],
  defectCount: 1,
  overallResult: "FAIL",
  inspector: "inspector1",
  organization: "MRO",
  imageIPFS: "cas1-" + "ab".repeat(32),
  imageHash: "ab".repeat(32),
  flightHoursAtInspection: "510.0",
  flightCyclesAtInspection: 17,
  notes: "",
  timestamp: "2025-07-02T00:00:00Z",
};

const QA_EVENT: InspectionEvent = {
  ...EVENT,
  eventID: "E0",
  inspectionType: "MANUFACTURING_QA",
  detectedDefects: [],
  defectCount: 0,
  overallResult: "PASS",
  inspector: "OEM_QA",
  organization: "OEM",
  imageIPFS: "",
  imageHash: "",
};

function mockClient(responses: Record<string, unknown>): GatewayClient {
  const client = new GatewayClient("", async (url) => {
    for (const [prefix, body] of Object.entries(responses)) {
      if (url.startsWith(prefix)) {
        return new Response(JSON.stringify(body), { status: 200 });
      }
    }
    return new Response(JSON.stringify({ error: "not found" }), { status: 404 });
  });
  client.org = "MRO";
  return client;
}

describe("dossier view", () => {
  it("shows CID and on-chain hash for each inspection with evidence", async () => {
    const client = mockClient({
      "/api/blades/B1/history": {
        blade: blade("B1"),
        inspections: [QA_EVENT, EVENT],
        repairs: [],
      },
    });
    const root = document.createElement("main");
    await renderDossier(root, client, "B1", () => {});
    expect(root.textContent).toContain(EVENT.imageIPFS.slice(0, 24));
    expect(root.textContent).toContain(`on-chain sha256 ${EVENT.imageHash}`);
    expect(root.textContent).toContain("corrosion (82.0%)");
    expect(root.textContent).toContain("StubDetector 1.0.0");
    // Latest result is FAIL: repair enabled, approve disabled.
    const buttons = Array.from(root.querySelectorAll("button"));
    const byLabel = (label: string) => buttons.find((b) => b.textContent === label)!;
    expect(byLabel("Send to repair").disabled).toBe(false);
    expect(byLabel("Approve return to service").disabled).toBe(true);
  });

  it("renders a mismatch with both digests when evidence verification fails", async () => {
    const client = mockClient({
      "/api/blades/B1/history": {
        blade: blade("B1"),
        inspections: [QA_EVENT, EVENT],
        repairs: [],
      },
      "/api/inspections/E1/verify": {
        eventID: "E1",
        verified: false,
        expected_hash: EVENT.imageHash,
        actual_hash: "cd".repeat(32),
        reason: "hash mismatch",
      },
    });
    const root = document.createElement("main");
    await renderDossier(root, client, "B1", () => {});
    const verify = Array.from(root.querySelectorAll("button")).find(
      (b) => b.textContent === "Verify evidence",
    )!;
    verify.click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(root.textContent).toContain("MISMATCH");
    expect(root.textContent).toContain(`expected ${EVENT.imageHash}`);
    expect(root.textContent).toContain(`recomputed ${"cd".repeat(32)}`);
  });

  it("renders a match badge for intact evidence", async () => {
    const client = mockClient({
      "/api/blades/B1/history": {
        blade: blade("B1"),
        inspections: [QA_EVENT, EVENT],
        repairs: [],
      },
      "/api/inspections/E1/verify": {
        eventID: "E1",
        verified: true,
        expected_hash: EVENT.imageHash,
        actual_hash: EVENT.imageHash,
      },
    });
    const root = document.createElement("main");
    await renderDossier(root, client, "B1", () => {});
    Array.from(root.querySelectorAll("button"))
      .find((b) => b.textContent === "Verify evidence")!
      .click();
    await new Promise((resolve) => setTimeout(resolve, 0));
    expect(root.textContent).toContain("MATCH");
    expect(root.textContent).not.toContain("MISMATCH");
  });

  it("disables every mutating button on a scrapped blade", async () => {
    const client = mockClient({
      "/api/blades/B1/history": {
        blade: blade("B1", { currentState: "FAILED_SCRAPPED" }),
        inspections: [QA_EVENT, EVENT],
        repairs: [],
      },
    });
    const root = document.createElement("main");
    await renderDossier(root, client, "B1", () => {});
    for (const button of root.querySelectorAll("button")) {
      if (button.textContent !== "Verify evidence") {
        expect(button.disabled, button.textContent ?? "").toBe(true);
      }
    }
  });
});

describe("registry view", () => {
  it("requests the exact server-side state filter", async () => {
    const urls: string[] = [];
    const client = new GatewayClient("", async (url) => {
      urls.push(url);
      return new Response(JSON.stringify({ blades: [blade("B9", { currentState: "INSPECTION_DUE" })], count: 1 }), { status: 200 });
    });
    const root = document.createElement("main");
    await renderRegistry(
      root,
      client,
      { filters: { state: "INSPECTION_DUE" }, sort: { key: "serialNumber", descending: false }, pageIndex: 0 },
      () => {},
    );
    expect(urls[0]).toBe("/api/blades?state=INSPECTION_DUE");
    expect(root.textContent).toContain("B9");
  });

  it("shows a degraded banner when the gateway is down", async () => {
    const client = new GatewayClient("", async () => {
      throw new Error("connection refused");
    });
    const root = document.createElement("main");
    await renderRegistry(
      root,
      client,
      { filters: {}, sort: { key: "serialNumber", descending: false }, pageIndex: 0 },
      () => {},
    );
    expect(root.textContent).toContain("gateway unreachable");
  });
});

describe("feed view", () => {
  it("renders events newest-first without refetching", () => {
    const events: [number, ChainEventMessage][] = [
      [0, { name: "InspectionDueEvent", payload: { serialNumber: "B1" }, tx_id: "t0", block_number: 3, tx_index: 0, event_index: 0 }],
      [1, { name: "BladeScrapedEvent", payload: { serialNumber: "B2" }, tx_id: "t1", block_number: 4, tx_index: 0, event_index: 0 }],
    ];
    const root = document.createElement("main");
    renderFeed(root, events);
    const items = Array.from(root.querySelectorAll(".feed-item")).map((n) => n.textContent);
    expect(items[0]).toContain("BladeScrapedEvent");
    expect(items[0]).toContain("B2");
    expect(items[1]).toContain("InspectionDueEvent");
  });
});
