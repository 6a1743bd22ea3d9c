import base64
import csv
import io
import json
import math
import sys
from datetime import datetime, timezone
from enum import Enum
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
from PIL import Image

from constants import HUMAN_FLOAT_FORMAT, MACHINE_FLOAT_FORMAT, SCHEMA_VERSION, VERSION

# key left out of the canonical form of every document
TIMESTAMP_KEY = "generated_at"


def format_value(value: Any, machine: bool = True) -> str:
    if isinstance(value, Enum):
        return str(value.value)
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value) or math.isinf(value):
            return str(value)
        return (MACHINE_FLOAT_FORMAT if machine else HUMAN_FLOAT_FORMAT).format(value)
    return str(value)


def provenance(config: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    """Header block of every output: artifact version, schema version and the resolved config."""
    return {
        "version": VERSION,
        "schema": SCHEMA_VERSION,
        "config": config or {},
        TIMESTAMP_KEY: datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def _strip_timestamp(payload: Any) -> Any:
    if isinstance(payload, dict):
        return {k: _strip_timestamp(v) for k, v in payload.items() if k != TIMESTAMP_KEY}
    if isinstance(payload, list):
        return [_strip_timestamp(v) for v in payload]
    return payload


def canonical_json(payload: Any) -> str:
    """Sorted keys, no whitespace, timestamp removed; equal across reruns of a seeded command."""
    return json.dumps(_strip_timestamp(payload), sort_keys=True, separators=(",", ":"))


def to_json(payload: Any) -> str:
    return json.dumps(payload, sort_keys=True, indent=2)


def to_csv(header: Sequence[str], rows: Iterable[Sequence[Any]], meta: Optional[Dict[str, Any]] = None, machine: bool = True) -> str:
    """CSV text; `meta` goes first as a single `# {json}` comment line."""
    buffer = io.StringIO()
    if meta is not None:
        buffer.write("# " + json.dumps(meta, sort_keys=True, separators=(",", ":")) + "\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_value(v, machine) for v in row])
    return buffer.getvalue()


def read_csv(text: str) -> List[List[str]]:
    """Rows of a CSV written by to_csv, comment lines skipped (header row included)."""
    lines = [line for line in text.splitlines() if not line.startswith("#")]
    return [row for row in csv.reader(lines)]


def emit(text: str, out: Optional[str] = None) -> None:
    if out in (None, "", "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(out, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)


def mask_to_image(mask: np.ndarray) -> Image.Image:
    """Grayscale 0/255 image of a boolean grid; grid row 0 (lowest Im z) becomes the bottom line."""
    pixels = np.where(np.asarray(mask, dtype=bool)[::-1], 255, 0).astype(np.uint8)
    return Image.fromarray(pixels)


def write_pgm(mask: np.ndarray, path: str) -> None:
    # Pillow writes mode "L" through the PPM plugin as binary P5
    mask_to_image(mask).save(path, format="PPM")


def pil_image_to_base64(image: Image.Image, format="PNG") -> str:
    if format not in ["PNG", "PPM"]:
        format = "PNG"
    image_stream = io.BytesIO()
    image.save(image_stream, format=format)
    return base64.b64encode(image_stream.getvalue()).decode("utf-8")
