from __future__ import annotations

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]   # repository root
sys.path.insert(0, str(ROOT / "src"))        # geometry/, dynamics/, reports/

from reports.cli import main


if __name__ == "__main__":
    raise SystemExit(main())
