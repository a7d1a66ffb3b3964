"""Record real sim-service responses for the UI tests.

Replays the acceptance flow (load laser with pattern=both, raise startLaser,
step 5 times, polling after every action) against the in-process service and
writes every exchange to test/fixtures/flow.json.  Run from the repo root:

    python3 frontend/scripts/record_fixture.py
"""
import json
import pathlib

from fastapi.testclient import TestClient

from statepat.service import create_app

ROOT = pathlib.Path(__file__).resolve().parents[2]
OUT = ROOT / "frontend" / "test" / "fixtures" / "flow.json"

laser_text = (ROOT / "models" / "laser.scm").read_text()
client = TestClient(create_app(default_model_text=laser_text))
exchanges = []


def record(method: str, path: str, body=None):
    if method == "GET":
        resp = client.get(path)
    elif method == "DELETE":
        resp = client.delete(path)
    else:
        resp = client.post(path, json=body)
    exchanges.append(
        {
            "method": method,
            "path": path,
            "request": body,
            "status": resp.status_code,
            "response": resp.json() if resp.content else None,
        }
    )
    return resp.json() if resp.content else None


created = record("POST", "/sessions", {"model_text": laser_text, "pattern": "both", "order": None})
sid = created["session_id"]
record("GET", f"/sessions/{sid}")
record("POST", f"/sessions/{sid}/events", {"event": "startLaser"})
record("GET", f"/sessions/{sid}")
for _ in range(5):
    record("POST", f"/sessions/{sid}/step", {"count": 1})
    record("GET", f"/sessions/{sid}")

# A malformed model, for the diagnostics-panel test.
record("POST", "/sessions", {"model_text": "model\n", "pattern": None, "order": None})
# An invalid execution order, for the inline-error test.
record("POST", "/sessions", {"model_text": laser_text, "pattern": "both", "order": [1, 1]})
# A reorder flow: fresh session under Ventilator<Laser (only successful
# creations advance the session counter, so this one is s2).
reordered = record("POST", "/sessions", {"model_text": laser_text, "pattern": "both", "order": [2, 1]})
record("GET", f"/sessions/{reordered['session_id']}")
# An untransformed session, for the collapsed-inspector test.
plain = record("POST", "/sessions", {"model_text": laser_text, "pattern": None, "order": None})
record("GET", f"/sessions/{plain['session_id']}")

OUT.parent.mkdir(parents=True, exist_ok=True)
OUT.write_text(json.dumps(exchanges, indent=1))
print(f"wrote {OUT} ({len(exchanges)} exchanges)")
