/** Gateway client. Every call carries the selected org as the X-Org header;
 * chaincode rejections surface verbatim so views can render the exact
 * on-chain error strings. */

import type {
  BladeRecord,
  HistoryResponse,
  InspectionEvent,
  Org,
  StatsResponse,
  VerifyResponse,
} from "./types.js";

export class GatewayError extends Error {
  constructor(message: string, public readonly status: number) {
    super(message);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class GatewayClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  org: Org = "REGULATOR";

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { "X-Org": this.org } };
    if (body !== undefined) {
      if (body instanceof FormData) {
        init.body = body;
      } else {
        (init.headers as Record<string, string>)["Content-Type"] = "application/json";
        init.body = JSON.stringify(body);
      }
    }
    const response = await this.fetchImpl(this.baseUrl + path, init);
    const text = await response.text();
    const data = text ? JSON.parse(text) : {};
    if (!response.ok) {
      throw new GatewayError(data.error ?? `HTTP ${response.status}`, response.status);
    }
    return data as T;
  }

  listBlades(state?: string): Promise<{ blades: BladeRecord[]; count: number }> {
    const query = state ? `?state=${encodeURIComponent(state)}` : "";
    return this.request("GET", `/api/blades${query}`);
  }

  getBlade(serial: string): Promise<BladeRecord> {
    return this.request("GET", `/api/blades/${encodeURIComponent(serial)}`);
  }

  getHistory(serial: string): Promise<HistoryResponse> {
    return this.request("GET", `/api/blades/${encodeURIComponent(serial)}/history`);
  }

  getStats(): Promise<StatsResponse> {
    return this.request("GET", "/api/stats");
  }

  manufacture(serial: string, manufactureDate: string): Promise<{ tx_id: string; blade: BladeRecord }> {
    return this.request("POST", "/api/blades", { serialNumber: serial, manufactureDate });
  }

  release(serial: string, airline: string): Promise<{ tx_id: string; blade: BladeRecord }> {
    return this.request("POST", `/api/blades/${encodeURIComponent(serial)}/release`, { airline });
  }

  logFlight(
    serial: string,
    flightHours: string,
    flightCycles: number,
    flightDate: string,
  ): Promise<{ tx_id: string; blade: BladeRecord }> {
    return this.request("POST", `/api/blades/${encodeURIComponent(serial)}/flights`, {
      flightHours,
      flightCycles,
      flightDate,
    });
  }

  submitInspection(
    serial: string,
    image: File | Blob,
    notes: string,
  ): Promise<{ tx_id: string; event: InspectionEvent; detection: unknown; artifact: { cid: string; sha256: string } }> {
    const form = new FormData();
    form.append("image", image);
    form.append("notes", notes);
    return this.request("POST", `/api/blades/${encodeURIComponent(serial)}/inspections`, form);
  }

  approve(serial: string): Promise<{ tx_id: string; blade: BladeRecord }> {
    return this.request("POST", `/api/blades/${encodeURIComponent(serial)}/approve`, {});
  }

  sendToRepair(serial: string): Promise<{ tx_id: string; blade: BladeRecord }> {
    return this.request("POST", `/api/blades/${encodeURIComponent(serial)}/repair`, {});
  }

  completeRepair(serial: string, notes: string): Promise<{ tx_id: string; blade: BladeRecord }> {
    return this.request("POST", `/api/blades/${encodeURIComponent(serial)}/repair/complete`, { notes });
  }

  scrap(serial: string, reason: string): Promise<{ tx_id: string; blade: BladeRecord }> {
    return this.request("POST", `/api/blades/${encodeURIComponent(serial)}/scrap`, { reason });
  }

  verifyEvidence(eventId: string): Promise<VerifyResponse> {
    return this.request("GET", `/api/inspections/${encodeURIComponent(eventId)}/verify`);
  }

  artifactUrl(cid: string): string {
    return `${this.baseUrl}/api/artifacts/${encodeURIComponent(cid)}`;
  }
}
