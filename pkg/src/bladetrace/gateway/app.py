"""REST + SSE gateway: the oracle layer between clients and the ledger.

Every mutating endpoint maps 1:1 onto a chaincode function and runs the full
endorse -> order -> validate -> commit path before responding. The gateway
holds no writable blade state of its own; restarting it loses nothing.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
from typing import Iterator, Optional

from fastapi import FastAPI, File, Form, Header, Query, Request, UploadFile
from fastapi.responses import JSONResponse, Response, StreamingResponse

from ..cas import ArtifactNotFound, ContentStore
from ..contract.types import STATES
from ..detection import DetectionError, Detector
from .network import (
    ChaincodeRejection,
    EndorsementMismatch,
    GatewayError,
    MvccConflict,
    Network,
    OrderingTimeout,
)
from .proofs import generate_proof, verify_event_artifact

logger = logging.getLogger(__name__)

NOT_FOUND_ERRORS = ("blade not found",)
FORBIDDEN_ERRORS = ("caller organization not authorized", "caller is not the current owner")


def _error_response(exc: Exception) -> JSONResponse:
    if isinstance(exc, ChaincodeRejection):
        message = str(exc)
        if message in NOT_FOUND_ERRORS or message.startswith("inspection event not found"):
            return JSONResponse(status_code=404, content={"error": message})
        if message in FORBIDDEN_ERRORS:
            return JSONResponse(status_code=403, content={"error": message})
        return JSONResponse(status_code=409, content={"error": message})
    if isinstance(exc, MvccConflict):
        return JSONResponse(status_code=409, content={"error": str(exc)})
    if isinstance(exc, (EndorsementMismatch, OrderingTimeout)):
        return JSONResponse(status_code=503, content={"error": str(exc)})
    if isinstance(exc, DetectionError):
        return JSONResponse(status_code=502, content={"error": f"detector failure: {exc}"})
    if isinstance(exc, GatewayError):
        return JSONResponse(status_code=400, content={"error": str(exc)})
    raise exc


class EventBroker:
    """Fan-out of committed chain events with per-subscriber queues.

    Subscribers joining with a cursor replay everything after it; slow
    consumers are evicted rather than blocking commit progress.
    """

    QUEUE_SIZE = 1000

    def __init__(self, network: Network):
        self._network = network

    def stream(
        self,
        cursor: int,
        heartbeat_s: float,
        limit: Optional[int],
        max_heartbeats: Optional[int] = None,
    ) -> Iterator[str]:
        q: "queue.Queue" = queue.Queue(maxsize=self.QUEUE_SIZE)
        dead = threading.Event()

        def on_event(seq: int, event) -> None:
            if dead.is_set():
                return
            try:
                q.put_nowait((seq, event))
            except queue.Full:
                dead.set()  # slow consumer: evict

        unsubscribe = self._network.subscribe_events(on_event)
        sent = 0
        heartbeats = 0
        last_seq = cursor
        try:
            for seq, event in self._network.events_since(cursor + 1):
                yield self._format(seq, event)
                last_seq = seq
                sent += 1
                if limit is not None and sent >= limit:
                    return
            while not dead.is_set():
                try:
                    seq, event = q.get(timeout=heartbeat_s)
                except queue.Empty:
                    yield ": heartbeat\n\n"
                    heartbeats += 1
                    if max_heartbeats is not None and heartbeats >= max_heartbeats:
                        return
                    continue
                if seq <= last_seq:
                    continue  # already replayed
                yield self._format(seq, event)
                last_seq = seq
                sent += 1
                if limit is not None and sent >= limit:
                    return
        finally:
            dead.set()
            unsubscribe()

    @staticmethod
    def _format(seq: int, event) -> str:
        data = {
            "name": event.name,
            "payload": json.loads(event.payload.decode("utf-8")),
            "tx_id": event.tx_id,
            "block_number": event.block_number,
            "tx_index": event.tx_index,
            "event_index": event.event_index,
        }
        return f"id: {seq}\nevent: {event.name}\ndata: {json.dumps(data)}\n\n"


def create_app(
    network: Network,
    store: ContentStore,
    detector: Detector,
    ui_dir: Optional[str] = None,
) -> FastAPI:
    app = FastAPI(title="blade traceability gateway")
    broker = EventBroker(network)

    @app.middleware("http")
    async def request_log(request: Request, call_next):
        import time as _time

        start = _time.perf_counter()
        response = await call_next(request)
        logger.info(
            json.dumps(
                {
                    "method": request.method,
                    "path": request.url.path,
                    "org": request.headers.get("x-org", ""),
                    "status": response.status_code,
                    "duration_ms": round((_time.perf_counter() - start) * 1000, 2),
                },
                sort_keys=True,
            )
        )
        return response

    def resolve_org(x_org: Optional[str]) -> str:
        if not x_org:
            raise GatewayError("missing X-Org header")
        if x_org not in network.config.orgs:
            raise GatewayError(f"unknown organization: {x_org}")
        return x_org

    @app.exception_handler(GatewayError)
    async def handle_gateway_error(_request: Request, exc: GatewayError):
        return _error_response(exc)

    @app.exception_handler(DetectionError)
    async def handle_detection_error(_request: Request, exc: DetectionError):
        return _error_response(exc)

    # -- blade lifecycle -------------------------------------------------

    @app.post("/api/blades")
    def manufacture(body: dict, x_org: Optional[str] = Header(default=None)):
        org = resolve_org(x_org)
        result = network.submit(
            org,
            "ManufactureBlade",
            [body.get("serialNumber", ""), body.get("manufactureDate", network.now_iso())],
            timestamp=body.get("timestamp"),
        )
        return {"tx_id": result["tx_id"], "blade": result["payload"]}

    @app.post("/api/blades/{serial}/release")
    def release(serial: str, body: dict, x_org: Optional[str] = Header(default=None)):
        org = resolve_org(x_org)
        result = network.submit(
            org,
            "ReleaseToService",
            [serial, body.get("airline", "")],
            timestamp=body.get("timestamp"),
        )
        return {"tx_id": result["tx_id"], "blade": result["payload"]}

    @app.post("/api/blades/{serial}/flights")
    def log_flight(serial: str, body: dict, x_org: Optional[str] = Header(default=None)):
        org = resolve_org(x_org)
        result = network.submit(
            org,
            "LogFlightOperation",
            [
                serial,
                str(body.get("flightHours", "")),
                str(body.get("flightCycles", "")),
                body.get("flightDate", network.now_iso()),
            ],
            timestamp=body.get("timestamp"),
        )
        return {"tx_id": result["tx_id"], "blade": result["payload"]}

    @app.post("/api/blades/{serial}/inspections")
    def submit_inspection(
        serial: str,
        image: UploadFile = File(...),
        notes: str = Form(default=""),
        width: int = Form(default=1024),
        height: int = Form(default=1024),
        timestamp: Optional[str] = Form(default=None),
        x_org: Optional[str] = Header(default=None),
    ):
        """The inspection workflow: detect, store artifact, bind hashes on-chain."""
        org = resolve_org(x_org)
        content = image.file.read()
        report = detector.detect(content, width, height)
        ref = store.put(content)
        inspection_payload = {
            "modelName": report.modelName,
            "modelVersion": report.modelVersion,
            "defects": [d.to_dict() for d in report.defects],
            "result": report.overallResult,
            "notes": notes,
        }
        result = network.submit(
            org,
            "SubmitInspectionResult",
            [serial, json.dumps(inspection_payload), ref.cid, ref.sha256],
            timestamp=timestamp,
        )
        return {
            "tx_id": result["tx_id"],
            "event": result["payload"],
            "detection": report.to_dict(),
            "artifact": ref.to_dict(),
        }

    @app.post("/api/blades/{serial}/approve")
    def approve(
        serial: str, body: Optional[dict] = None, x_org: Optional[str] = Header(default=None)
    ):
        org = resolve_org(x_org)
        result = network.submit(
            org, "ApproveReturnToService", [serial], timestamp=(body or {}).get("timestamp")
        )
        return {"tx_id": result["tx_id"], "blade": result["payload"]}

    @app.post("/api/blades/{serial}/repair")
    def send_repair(
        serial: str, body: Optional[dict] = None, x_org: Optional[str] = Header(default=None)
    ):
        org = resolve_org(x_org)
        result = network.submit(
            org, "SendToRepair", [serial], timestamp=(body or {}).get("timestamp")
        )
        return {"tx_id": result["tx_id"], "blade": result["payload"]}

    @app.post("/api/blades/{serial}/repair/complete")
    def complete_repair(
        serial: str, body: Optional[dict] = None, x_org: Optional[str] = Header(default=None)
    ):
        org = resolve_org(x_org)
        notes = (body or {}).get("notes", "")
        result = network.submit(
            org, "CompleteRepair", [serial, notes], timestamp=(body or {}).get("timestamp")
        )
        return {"tx_id": result["tx_id"], "blade": result["payload"]}

    @app.post("/api/blades/{serial}/scrap")
    def scrap(serial: str, body: Optional[dict] = None, x_org: Optional[str] = Header(default=None)):
        org = resolve_org(x_org)
        reason = (body or {}).get("reason", "")
        result = network.submit(
            org, "ScrapBlade", [serial, reason], timestamp=(body or {}).get("timestamp")
        )
        return {"tx_id": result["tx_id"], "blade": result["payload"]}

    # -- reads ----------------------------------------------------------------

    @app.get("/api/blades")
    def list_blades(
        state: Optional[str] = Query(default=None),
        x_org: Optional[str] = Header(default=None),
    ):
        org = resolve_org(x_org)
        if state is not None:
            blades = network.evaluate(org, "QueryBladesByState", [state])
        else:
            blades = []
            for s in STATES:
                blades.extend(network.evaluate(org, "QueryBladesByState", [s]))
            blades.sort(key=lambda b: b["serialNumber"])
        return {"blades": blades, "count": len(blades)}

    @app.get("/api/blades/{serial}")
    def get_blade(serial: str, x_org: Optional[str] = Header(default=None)):
        org = resolve_org(x_org)
        return network.evaluate(org, "GetBlade", [serial])

    @app.get("/api/blades/{serial}/history")
    def get_history(serial: str, x_org: Optional[str] = Header(default=None)):
        org = resolve_org(x_org)
        return network.evaluate(org, "GetBladeCompleteHistory", [serial])

    @app.get("/api/blades/{serial}/proof")
    def get_proof(serial: str, x_org: Optional[str] = Header(default=None)):
        resolve_org(x_org)
        try:
            return generate_proof(network, store, serial)
        except ChaincodeRejection as exc:
            return _error_response(exc)

    @app.get("/api/inspections/{event_id}/verify")
    def verify_inspection(event_id: str, x_org: Optional[str] = Header(default=None)):
        resolve_org(x_org)
        result = verify_event_artifact(network, store, event_id)
        if result is None:
            return JSONResponse(
                status_code=404, content={"error": f"inspection event not found: {event_id}"}
            )
        return result

    # -- artifacts ---------------------------------------------------------------

    def _upload(file: UploadFile) -> dict:
        content = file.file.read()
        ref = store.put(content)
        out = ref.to_dict()
        out["empty"] = ref.size_bytes == 0
        return out

    @app.post("/api/artifacts/upload")
    def upload_artifact(file: UploadFile = File(...), x_org: Optional[str] = Header(default=None)):
        resolve_org(x_org)
        return _upload(file)

    # Compatibility alias for the legacy storage-specific path.
    @app.post("/api/ipfs/upload")
    def upload_artifact_alias(
        file: UploadFile = File(...), x_org: Optional[str] = Header(default=None)
    ):
        resolve_org(x_org)
        return _upload(file)

    @app.get("/api/artifacts/{cid}")
    def fetch_artifact(cid: str):
        try:
            content = store.get(cid)
        except ArtifactNotFound:
            return JSONResponse(status_code=404, content={"error": f"unknown cid: {cid}"})
        return Response(content=content, media_type="application/octet-stream")

    # -- events & stats ---------------------------------------------------------

    @app.get("/api/events/stream")
    def stream_events(
        request: Request,
        cursor: Optional[int] = Query(default=None),
        heartbeat: float = Query(default=1.0),
        limit: Optional[int] = Query(default=None),
        max_heartbeats: Optional[int] = Query(default=None),
    ):
        # EventSource clients cannot set custom headers, so the stream takes
        # its replay cursor from Last-Event-ID or a query parameter. limit /
        # max_heartbeats bound the stream for tests and curl diagnostics.
        last_id = request.headers.get("last-event-id")
        start = cursor if cursor is not None else (int(last_id) if last_id else -1)
        return StreamingResponse(
            broker.stream(start, heartbeat, limit, max_heartbeats),
            media_type="text/event-stream",
        )

    @app.get("/api/stats")
    def stats(x_org: Optional[str] = Header(default=None)):
        org = resolve_org(x_org)
        census = {}
        for s in STATES:
            census[s] = len(network.evaluate(org, "QueryBladesByState", [s]))
        return {
            "census": census,
            "inspection_due": census["INSPECTION_DUE"],
            "chain_height": network.anchor_peer.height,
            "event_count": network.event_count(),
            "artifacts": {"count": store.count(), "total_bytes": store.total_bytes()},
            "detector": detector.describe(),
        }

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app


def build_detector(spec: str) -> Detector:
    """Detector selection: "stub", "stub:<version>", or "http:<base-url>"."""
    from ..detection import ExternalDetector, StubDetector

    if spec.startswith("http:") or spec.startswith("https:"):
        return ExternalDetector(spec)
    if spec.startswith("stub:"):
        return StubDetector(model_version=spec.split(":", 1)[1])
    return StubDetector()


def main() -> None:
    """Run the gateway as a real HTTP server (demo entry point).

    A JSON config file (--config or GATEWAY_CONFIG) may set thresholds,
    endorsement_min_orgs, batching (max_txs_per_block, batch_timeout),
    time_scale, role gates, and the detector; flags and env override ports
    and paths.
    """
    import argparse
    import os

    import uvicorn

    from .network import NetworkConfig

    parser = argparse.ArgumentParser(description="blade traceability gateway")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=int(os.environ.get("GATEWAY_PORT", 8000)))
    parser.add_argument("--workdir", default=os.environ.get("GATEWAY_WORKDIR", "./gateway-data"))
    parser.add_argument("--ui-dir", default=os.environ.get("GATEWAY_UI_DIR"))
    parser.add_argument("--config", default=os.environ.get("GATEWAY_CONFIG"))
    args = parser.parse_args()

    raw = {}
    if args.config:
        with open(args.config, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    config = NetworkConfig()
    for key in (
        "thresholds",
        "endorsement_min_orgs",
        "role_gates_enabled",
        "max_txs_per_block",
        "batch_timeout",
        "seed",
        "time_scale",
        "commit_timeout_s",
    ):
        if key in raw:
            setattr(config, key, raw[key])
    detector = build_detector(raw.get("detector", "stub"))

    logging.basicConfig(level=logging.INFO, format="%(message)s")
    network = Network(workdir=args.workdir, config=config)
    network.start()
    store = ContentStore(raw.get("cas_dir") or os.path.join(args.workdir, "cas"))
    app = create_app(network, store, detector, ui_dir=args.ui_dir)
    try:
        uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    finally:
        network.stop()


if __name__ == "__main__":
    main()
