import { describe, expect, it } from "vitest";

import { actionGates, latestResult } from "../src/gating.js";
import type { BladeRecord, BladeState, InspectionEvent, Org } from "../src/types.js";

function blade(state: BladeState, history: string[] = []): BladeRecord {
  return {
    serialNumber: "B1",
    currentState: state,
    currentOwner: "AIRLINE",
    manufactureDate: "2025-01-01T00:00:00Z",
    totalFlightHours: "10.0",
    totalFlightCycles: 2,
    lastFlightDate: "",
    hoursSinceInspection: "10.0",
    cyclesSinceInspection: 2,
    daysSinceInspection: 3,
    inspectionDueReason: "",
    nextInspectionDue: "",
    lastInspectionDate: "",
    totalInspections: history.length,
    inspectionHistory: history,
    createdAt: "",
    updatedAt: "",
  };
}

function inspection(id: string, result: InspectionEvent["overallResult"]): InspectionEvent {
  return {
    eventID: id,
    serialNumber: "B1",
    inspectionDate: "",
    inspectionType: "SCHEDULED",
    aiModelName: "M",
    aiModelVersion: "1",
    detectedDefects: [],
    defectCount: 0,
    overallResult: result,
    inspector: "inspector1",
    organization: "MRO",
    imageIPFS: "",
    imageHash: "",
    flightHoursAtInspection: "0.0",
    flightCyclesAtInspection: 0,
    notes: "",
    timestamp: "",
  };
}

const MUTATING = ["release", "logFlight", "inspect", "approve", "repair", "completeRepair", "scrap"] as const;

describe("action gating mirrors the lifecycle transition set", () => {
  it("enables approve only for UNDER_INSPECTION with PASS", () => {
    const gates = actionGates(blade("UNDER_INSPECTION", ["e1"]), [inspection("e1", "PASS")], "MRO");
    expect(gates.approve).toBe(true);
    expect(gates.repair).toBe(false);
  });

  it("enables repair only for UNDER_INSPECTION with FAIL or CRITICAL", () => {
    for (const result of ["FAIL", "CRITICAL"] as const) {
      const gates = actionGates(blade("UNDER_INSPECTION", ["e1"]), [inspection("e1", result)], "MRO");
      expect(gates.repair).toBe(true);
      expect(gates.approve).toBe(false);
    }
  });

  it("disables all mutating actions for a scrapped blade", () => {
    const gates = actionGates(blade("FAILED_SCRAPPED", ["e1"]), [inspection("e1", "FAIL")], "MRO");
    for (const key of MUTATING) expect(gates[key], key).toBe(false);
  });

  it("matches the full state x action truth table for MRO", () => {
    const expected: Record<BladeState, string[]> = {
      MANUFACTURED: [],
      IN_SERVICE: [],
      INSPECTION_DUE: ["inspect"],
      UNDER_INSPECTION: ["repair", "scrap"], // latest FAIL below
      UNDER_REPAIR: ["completeRepair", "scrap"],
      FAILED_SCRAPPED: [],
    };
    for (const [state, enabled] of Object.entries(expected) as [BladeState, string[]][]) {
      const gates = actionGates(blade(state, ["e1"]), [inspection("e1", "FAIL")], "MRO");
      for (const key of MUTATING) {
        expect(gates[key], `${state}.${key}`).toBe(enabled.includes(key));
      }
    }
  });

  it("gates by organization", () => {
    const due = blade("INSPECTION_DUE", ["e1"]);
    const events = [inspection("e1", "PASS")];
    expect(actionGates(due, events, "MRO").inspect).toBe(true);
    for (const org of ["OEM", "AIRLINE", "REGULATOR"] as Org[]) {
      expect(actionGates(due, events, org).inspect).toBe(false);
    }
    const fresh = blade("MANUFACTURED");
    expect(actionGates(fresh, [], "OEM").release).toBe(true);
    expect(actionGates(fresh, [], "MRO").release).toBe(false);
    const flying = blade("IN_SERVICE");
    expect(actionGates(flying, [], "AIRLINE").logFlight).toBe(true);
    expect(actionGates(flying, [], "OEM").logFlight).toBe(false);
  });

  it("latestResult resolves the last history entry", () => {
    const b = blade("UNDER_INSPECTION", ["e1", "e2"]);
    const events = [inspection("e1", "PASS"), inspection("e2", "CRITICAL")];
    expect(latestResult(b, events)).toBe("CRITICAL");
    expect(latestResult(blade("MANUFACTURED"), [])).toBeNull();
  });
});
