/** Action gating: a button is enabled iff the corresponding chaincode
 * precondition can hold. The blade state never gets computed locally; this
 * projects the gateway's own record and latest inspection result. */

import type { BladeRecord, InspectionEvent, Org } from "./types.js";

export interface ActionGates {
  release: boolean;
  logFlight: boolean;
  inspect: boolean;
  approve: boolean;
  repair: boolean;
  completeRepair: boolean;
  scrap: boolean;
}

export function latestResult(
  blade: BladeRecord,
  inspections: InspectionEvent[],
): InspectionEvent["overallResult"] | null {
  const lastId = blade.inspectionHistory[blade.inspectionHistory.length - 1];
  const match = inspections.find((event) => event.eventID === lastId);
  return match ? match.overallResult : null;
}

export function actionGates(
  blade: BladeRecord,
  inspections: InspectionEvent[],
  org: Org,
): ActionGates {
  const state = blade.currentState;
  const result = latestResult(blade, inspections);
  return {
    release: state === "MANUFACTURED" && org === "OEM",
    logFlight: state === "IN_SERVICE" && org === blade.currentOwner,
    inspect: state === "INSPECTION_DUE" && org === "MRO",
    approve:
      state === "UNDER_INSPECTION" &&
      result === "PASS" &&
      (org === "MRO" || org === "OEM"),
    repair:
      state === "UNDER_INSPECTION" &&
      (result === "FAIL" || result === "CRITICAL") &&
      org === "MRO",
    completeRepair: state === "UNDER_REPAIR" && org === "MRO",
    scrap:
      (state === "UNDER_INSPECTION" || state === "UNDER_REPAIR") &&
      (org === "MRO" || org === "OEM"),
  };
}
