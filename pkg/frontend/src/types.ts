/** Record shapes as served by the gateway. Flight hours travel as decimal strings. */

export type BladeState =
  | "MANUFACTURED"
  | "IN_SERVICE"
  | "INSPECTION_DUE"
  | "UNDER_INSPECTION"
  | "UNDER_REPAIR"
  | "FAILED_SCRAPPED";

export const BLADE_STATES: BladeState[] = [
  "MANUFACTURED",
  "IN_SERVICE",
  "INSPECTION_DUE",
  "UNDER_INSPECTION",
  "UNDER_REPAIR",
  "FAILED_SCRAPPED",
];

export interface BladeRecord {
  serialNumber: string;
  currentState: BladeState;
  currentOwner: string;
  manufactureDate: string;
  totalFlightHours: string;
  totalFlightCycles: number;
  lastFlightDate: string;
  hoursSinceInspection: string;
  cyclesSinceInspection: number;
  daysSinceInspection: number;
  inspectionDueReason: string;
  nextInspectionDue: string;
  lastInspectionDate: string;
  totalInspections: number;
  inspectionHistory: string[];
  createdAt: string;
  updatedAt: string;
}

export interface Defect {
  defectType: "corrosion" | "nick" | "dent" | "scratch";
  confidence: number;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export interface InspectionEvent {
  eventID: string;
  serialNumber: string;
  inspectionDate: string;
  inspectionType: string;
  aiModelName: string;
  aiModelVersion: string;
  detectedDefects: Defect[];
  defectCount: number;
  overallResult: "PASS" | "FAIL" | "CRITICAL";
  inspector: string;
  organization: string;
  imageIPFS: string;
  imageHash: string;
  flightHoursAtInspection: string;
  flightCyclesAtInspection: number;
  notes: string;
  timestamp: string;
}

export interface ChainEventMessage {
  name: string;
  payload: Record<string, unknown>;
  tx_id: string;
  block_number: number;
  tx_index: number;
  event_index: number;
}

export interface StatsResponse {
  census: Record<BladeState, number>;
  inspection_due: number;
  chain_height: number;
  event_count: number;
  artifacts: { count: number; total_bytes: number };
  detector: { modelName: string; modelVersion: string };
}

export interface VerifyResponse {
  eventID: string;
  verified: boolean;
  expected_hash: string;
  actual_hash: string;
  reason?: string;
  elapsed_ms?: number;
}

export interface HistoryResponse {
  blade: BladeRecord;
  inspections: InspectionEvent[];
  repairs: InspectionEvent[];
}

export type Org = "OEM" | "AIRLINE" | "MRO" | "REGULATOR";
export const ORGS: Org[] = ["OEM", "AIRLINE", "MRO", "REGULATOR"];
