import { describe, expect, it } from "vitest";

import { filterBlades, page, sortBlades } from "../src/registry.js";
import type { BladeRecord } from "../src/types.js";

function blade(serial: string, overrides: Partial<BladeRecord> = {}): BladeRecord {
  return {
    serialNumber: serial,
    currentState: "IN_SERVICE",
    currentOwner: "AIRLINE",
    manufactureDate: "",
    totalFlightHours: "0.0",
    totalFlightCycles: 0,
    lastFlightDate: "",
    hoursSinceInspection: "0.0",
    cyclesSinceInspection: 0,
    daysSinceInspection: 0,
    inspectionDueReason: "",
    nextInspectionDue: "",
    lastInspectionDate: "",
    totalInspections: 0,
    inspectionHistory: [],
    createdAt: "",
    updatedAt: "",
    ...overrides,
  };
}

const FLEET = [
  blade("BLD-001", { totalFlightHours: "120.5", currentState: "INSPECTION_DUE" }),
  blade("BLD-002", { totalFlightHours: "15.0" }),
  blade("BLD-003", { totalFlightHours: "990.0", currentOwner: "OEM", currentState: "MANUFACTURED" }),
  blade("XYZ-9", { totalFlightHours: "120.5" }),
];

describe("registry projections", () => {
  it("filters by serial substring, case-insensitive", () => {
    expect(filterBlades(FLEET, { serial: "bld" }).map((b) => b.serialNumber)).toEqual([
      "BLD-001", "BLD-002", "BLD-003",
    ]);
    expect(filterBlades(FLEET, { serial: "XYZ" })).toHaveLength(1);
  });

  it("filters by state and owner exactly", () => {
    expect(filterBlades(FLEET, { state: "INSPECTION_DUE" }).map((b) => b.serialNumber)).toEqual(
      ["BLD-001"],
    );
    expect(filterBlades(FLEET, { owner: "OEM" }).map((b) => b.serialNumber)).toEqual(["BLD-003"]);
    expect(filterBlades(FLEET, {})).toHaveLength(4);
  });

  it("empty fleet gives an empty table", () => {
    expect(filterBlades([], { serial: "B" })).toEqual([]);
  });

  it("sorts flight hours numerically, not lexically", () => {
    const sorted = sortBlades(FLEET, { key: "totalFlightHours", descending: false });
    expect(sorted.map((b) => b.totalFlightHours)).toEqual(["15.0", "120.5", "120.5", "990.0"]);
    const hours = sorted.map((b) => parseFloat(b.totalFlightHours));
    for (let i = 1; i < hours.length; i++) expect(hours[i]).toBeGreaterThanOrEqual(hours[i - 1]);
  });

  it("descending sort reverses with a stable tiebreak", () => {
    const sorted = sortBlades(FLEET, { key: "totalFlightHours", descending: true });
    expect(sorted[0].totalFlightHours).toBe("990.0");
    expect(sorted.at(-1)!.totalFlightHours).toBe("15.0");
  });

  it("does not mutate its input", () => {
    const before = FLEET.map((b) => b.serialNumber);
    sortBlades(FLEET, { key: "updatedAt", descending: true });
    expect(FLEET.map((b) => b.serialNumber)).toEqual(before);
  });

  it("pages with a clamped index", () => {
    const rows = Array.from({ length: 60 }, (_, i) => i);
    expect(page(rows, 0, 25).rows).toHaveLength(25);
    expect(page(rows, 2, 25).rows).toHaveLength(10);
    expect(page(rows, 99, 25).rows).toHaveLength(10); // clamped to last page
    expect(page(rows, 0, 25).pages).toBe(3);
    expect(page([], 0).pages).toBe(1);
  });
});
