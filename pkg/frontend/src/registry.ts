/** Registry projections: pure filter/sort/page over gateway blade lists. */

import type { BladeRecord } from "./types.js";

export interface RegistryFilters {
  serial?: string;
  owner?: string;
  state?: string;
}

export type SortKey =
  | "serialNumber"
  | "currentOwner"
  | "currentState"
  | "totalFlightHours"
  | "totalFlightCycles"
  | "updatedAt";

export interface SortSpec {
  key: SortKey;
  descending: boolean;
}

export function filterBlades(blades: BladeRecord[], filters: RegistryFilters): BladeRecord[] {
  const serial = (filters.serial ?? "").trim().toLowerCase();
  return blades.filter((blade) => {
    if (serial && !blade.serialNumber.toLowerCase().includes(serial)) return false;
    if (filters.owner && blade.currentOwner !== filters.owner) return false;
    if (filters.state && blade.currentState !== filters.state) return false;
    return true;
  });
}

function sortValue(blade: BladeRecord, key: SortKey): string | number {
  if (key === "totalFlightHours") return parseFloat(blade.totalFlightHours);
  return blade[key];
}

export function sortBlades(blades: BladeRecord[], spec: SortSpec): BladeRecord[] {
  const sorted = [...blades].sort((a, b) => {
    const va = sortValue(a, spec.key);
    const vb = sortValue(b, spec.key);
    if (va < vb) return -1;
    if (va > vb) return 1;
    return a.serialNumber < b.serialNumber ? -1 : 1; // stable tiebreak
  });
  return spec.descending ? sorted.reverse() : sorted;
}

export function page<T>(rows: T[], pageIndex: number, pageSize = 25): { rows: T[]; pages: number } {
  const pages = Math.max(1, Math.ceil(rows.length / pageSize));
  const start = Math.min(pageIndex, pages - 1) * pageSize;
  return { rows: rows.slice(start, start + pageSize), pages };
}
