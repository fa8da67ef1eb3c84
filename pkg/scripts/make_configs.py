"""Regenerate the bundled synthetic hardware configs in src/dismap/configs/.

Topologies follow the public coupling maps of 20-qubit (Almaden-style) and
27-qubit heavy-hex (Falcon-style) devices. Calibration numbers are synthetic,
drawn from a fixed seed in ranges typical of those devices.
"""
import json
import random
from pathlib import Path

OUT = Path(__file__).resolve().parents[1] / "src" / "dismap" / "configs"

ALMADEN_20 = ([(i, i + 1) for r in range(4) for i in range(5 * r, 5 * r + 4)]
              + [(1, 6), (3, 8), (5, 10), (7, 12), (9, 14), (11, 16), (13, 18)])
FALCON_27 = [(0, 1), (1, 2), (1, 4), (2, 3), (3, 5), (4, 7), (5, 8), (6, 7), (7, 10), (8, 9),
             (8, 11), (10, 12), (11, 14), (12, 13), (12, 15), (13, 14), (14, 16), (15, 18),
             (16, 19), (17, 18), (18, 21), (19, 20), (19, 22), (21, 23), (22, 25), (23, 24),
             (24, 25), (25, 26)]
FALCON_7 = [(0, 1), (1, 2), (1, 3), (3, 5), (4, 5), (5, 6)]


def worker(wid, name, n, edges, rng):
    err_1q = [round(rng.uniform(2e-4, 1e-3), 6) for _ in range(n)]
    err_ro = [round(rng.uniform(0.01, 0.04), 5) for _ in range(n)]
    err_2q = {f"{a}-{b}": round(rng.uniform(0.006, 0.02), 5) for a, b in edges}
    for q in rng.sample(range(n), max(1, n // 8)):
        err_ro[q] = round(rng.uniform(0.08, 0.15), 5)
        err_1q[q] = round(rng.uniform(2e-3, 5e-3), 6)
    for a, b in rng.sample(edges, max(1, len(edges) // 10)):
        err_2q[f"{a}-{b}"] = round(rng.uniform(0.04, 0.08), 5)
    return {"id": wid, "name": name, "qubits": n, "edges": [list(e) for e in edges],
            "err_1q": err_1q, "err_2q": err_2q, "err_readout": err_ro}


def write(name, workers, k, max_links=2, sr=0.95, note=""):
    data = {"name": name, "note": note, "default_sr": sr, "max_links": max_links,
            "candidates_per_worker": k, "workers": workers}
    (OUT / f"{name}.json").write_text(json.dumps(data, indent=1) + "\n")


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    note = "synthetic calibration data; topologies follow public 20/27-qubit coupling maps"
    rng = random.Random(2024)
    write("3workers", [worker(0, "almaden-like", 20, ALMADEN_20, rng),
                       worker(1, "auckland-like", 27, FALCON_27, rng),
                       worker(2, "toronto-like", 27, FALCON_27, rng)], k=3, note=note)
    rng = random.Random(2025)
    write("4x20", [worker(i, f"almaden-like-{i}", 20, ALMADEN_20, rng) for i in range(4)],
          k=2, note=note)
    rng = random.Random(2026)
    write("2x7", [worker(i, f"falcon7-like-{i}", 7, FALCON_7, rng) for i in range(2)],
          k=2, max_links=1, note=note)


if __name__ == "__main__":
    main()
