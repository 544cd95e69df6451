"""Write the scenario JSON Schema to docs/scenario.schema.json."""
import json
from pathlib import Path

from loewnerkit.schema import SCHEMA

out = Path(__file__).resolve().parents[1] / "docs" / "scenario.schema.json"
out.write_text(json.dumps(SCHEMA, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
print(f"wrote {out}")
