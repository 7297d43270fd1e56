import sys
from pathlib import Path

_root = Path(__file__).resolve().parent
for _p in (str(_root), str(_root / "src")):
    if _p not in sys.path:
        sys.path.insert(0, _p)
