"""Recomputes the oracle values and compares them with the frozen copy."""
import json
import sys
from pathlib import Path

here = Path(__file__).parent
sys.path.insert(0, str(here))
try:
    import cell_oracle
except ImportError as e:
    print(f"oracle dependencies missing ({e}); skipping")
    sys.exit(0)


def walk(a, b, path=""):
    if isinstance(a, dict):
        assert a.keys() == b.keys(), path
        for k in a:
            walk(a[k], b[k], f"{path}.{k}")
    elif isinstance(a, list):
        assert len(a) == len(b), path
        for i, (x, y) in enumerate(zip(a, b)):
            walk(x, y, f"{path}[{i}]")
    else:
        assert abs(a - b) <= 1e-11 * max(1.0, abs(a)), f"{path}: {a} vs {b}"


walk(json.loads((here / "oracle_values.json").read_text()), cell_oracle.compute())
print("oracle values reproduce")
