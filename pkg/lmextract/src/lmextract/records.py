"""Feature-file records and atomic NDJSON serialization.

The output format is what the audit pipeline's corpus loader ingests: one
JSON object per line with fields ``id``, ``feature``, ``value`` and
``model``.  Scalar features are reals in [0, 1]; embeddings are 768-long
float arrays; a null value marks a record whose input produced nothing.
Files are written to a temp path and renamed into place, and every file
gets a ``<name>.manifest.json`` sidecar recording the producing model.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

EMBEDDING_DIM = 768

SCALAR_FEATURES = ("sentiment", "fluency")
FEATURES = SCALAR_FEATURES + ("embedding",)


@dataclass
class FeatureFileRecord:
    entity_id: str
    feature: str
    value: float | list[float] | None
    model: str

    def validate(self) -> None:
        if self.feature not in FEATURES:
            raise ValueError(f"unknown feature {self.feature!r}")
        if self.value is None:
            return
        if self.feature in SCALAR_FEATURES:
            if not isinstance(self.value, float) or not 0.0 <= self.value <= 1.0:
                raise ValueError(f"{self.feature} value {self.value!r} outside [0, 1]")
        else:
            if len(self.value) != EMBEDDING_DIM:
                raise ValueError(f"embedding dimension {len(self.value)} != {EMBEDDING_DIM}")


def write_feature_file(records: list[FeatureFileRecord], path) -> Path:
    """Validate and write records atomically; emits the manifest sidecar."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    models = set()
    lines = []
    for record in records:
        record.validate()
        models.add(record.model)
        lines.append(json.dumps({
            "id": record.entity_id,
            "feature": record.feature,
            "value": record.value,
            "model": record.model,
        }))
    fd, tmp_name = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write("\n".join(lines) + ("\n" if lines else ""))
        os.replace(tmp_name, path)
    except BaseException:
        try:
            os.unlink(tmp_name)
        except OSError:
            pass
        raise

    manifest = {
        "feature": records[0].feature if records else None,
        "models": sorted(models),
        "n_records": len(records),
        "n_missing": sum(1 for r in records if r.value is None),
    }
    manifest_path = path.with_name(path.name + ".manifest.json")
    manifest_path.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n", encoding="utf-8")
    return path


def read_feature_file(path) -> list[FeatureFileRecord]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        records.append(FeatureFileRecord(
            entity_id=obj["id"],
            feature=obj["feature"],
            value=obj["value"],
            model=obj.get("model", ""),
        ))
    return records


def read_text_dump(path) -> dict[str, str]:
    """Input side: NDJSON ``{id, text}`` records keyed by entity id."""
    texts: dict[str, str] = {}
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        obj = json.loads(line)
        if "id" not in obj or "text" not in obj:
            raise ValueError(f"{path}:{line_no}: expected fields 'id' and 'text'")
        texts[str(obj["id"])] = obj["text"] if obj["text"] is not None else ""
    return texts


def read_title_abstract_dump(path) -> dict[str, tuple[str, str]]:
    """Input side: NDJSON ``{id, title, abstract}`` records."""
    pairs: dict[str, tuple[str, str]] = {}
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        obj = json.loads(line)
        if "id" not in obj:
            raise ValueError(f"{path}:{line_no}: expected field 'id'")
        pairs[str(obj["id"])] = (obj.get("title") or "", obj.get("abstract") or "")
    return pairs
