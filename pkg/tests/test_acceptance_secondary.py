"""Secondary acceptance: the reference client in offline stub mode.

Requires the TypeScript client to be built (llm-client/dist/main.js);
tests skip with a pointer to the build command when it is absent.
"""
import shutil
from pathlib import Path

import pytest

from renego.bridge import SubprocessTransport, conformance_suite
from renego.harness import default_config, run_match

CLIENT_DIR = Path(__file__).parent.parent / "llm-client"
CLIENT_MAIN = CLIENT_DIR / "dist" / "main.js"
STUB_DIR = CLIENT_DIR / "stub_completions"

needs_client = pytest.mark.skipif(
    shutil.which("node") is None or not CLIENT_MAIN.exists(),
    reason="reference client not built; run `npm install && npm run build` in llm-client/",
)


def client_argv():
    return ["node", str(CLIENT_MAIN), "--stub", str(STUB_DIR)]


def report(name: str, passed: bool, detail: str = ""):
    print(f"\n[{'PASS' if passed else 'FAIL'}] {name}" + (f" -- {detail}" if detail else ""))
    assert passed, f"{name}: {detail}"


@needs_client
def test_stub_client_passes_full_conformance():
    with SubprocessTransport(client_argv(), timeout=30.0) as transport:
        result = conformance_suite(transport)
    checks = {c.name for c in result.checks}
    assert any("self-simulate-rewards" in name for name in checks)
    assert any("evaluate/three-candidates" in name for name in checks)
    report("secondary: offline stub client passes the full conformance "
           "battery (both games, act/simulate/evaluate, reward-list parsing)",
           result.passed, result.summary().replace("\n", "; "))


@needs_client
def test_stubbed_end_to_end_match():
    config = default_config()
    config.name = "bridge-e2e"
    config.run = {"episodes": 2, "seeds": [0], "out_dir": "unused"}
    config.agents = {
        "agent1": {"kind": "persona", "family": "rational"},
        "agent2": {"kind": "bridge_subprocess", "argv": client_argv(),
                   "timeout": 30.0},
    }
    log = run_match(config, 0)
    ok = (log.episodes == 2
          and all(r.cause.value in ("accepted", "rejected", "horizon_exceeded")
                  for r in log.records)
          and all(len(r.trajectory) >= 1 for r in log.records))
    causes = [r.cause.value for r in log.records]
    report("secondary: stubbed end-to-end match of 2 episodes completes with "
           "a valid match log", ok, f"causes={causes}")
