from pathlib import Path
import csv
import hashlib
import json
import math
from typing import Any, Iterable, Sequence


def load_json(path: str | Path) -> dict:
    with open(path) as f_in:
        j = json.load(f_in)
    return j


def dump_json(obj: Any, path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w") as f_out:
        json.dump(obj, f_out, indent=2, sort_keys=False)
        f_out.write("\n")
    return path


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def format_cell(value: Any) -> str:
    """CSV cell text: floats via repr so reruns are byte-identical, bools lower-case."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return repr(value)
    if value is None:
        return ""
    return str(value)


def write_csv(path: str | Path, columns: Sequence[str], rows: Iterable[dict]) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as f_out:
        writer = csv.writer(f_out, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(row.get(c)) for c in columns])
    return path


def read_csv(path: str | Path) -> list[dict[str, str]]:
    with open(path, newline="") as f_in:
        return list(csv.DictReader(f_in))
