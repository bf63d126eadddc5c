#!/usr/bin/env python3
"""Regenerate the template manifest from the asset files.

Run after any deliberate template edit; the test suite pins assets to the
checksums recorded here, so stale manifests fail loudly.
"""
from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path

TEMPLATE_DIR = Path(__file__).resolve().parent.parent / "src" / "simforge" / "templates"

# Directive blocks injected by the renderer itself; callers never pass these.
BUILTIN_VARS = {"mermaidDirections", "roughDirections"}

# Raw markers whose brace contents are not a clean variable name.
MARKER_ALIASES = {
    ".join('; ')": "jsErrors",
    "errorMessages.join('; ')": "errorMessages",
    "JSON.stringify(newAssumptions)": "newAssumptions",
}

# Templates rendered alongside image attachments.
EXPECTS_IMAGES = {
    "suggest_change_type",
    "populate_add_node",
    "populate_add_edge",
    "populate_edit_assumptions",
    "populate_redraw",
    "populate_edit_node",
    "populate_edit_edge",
    "populate_remove_node",
    "populate_remove_edge",
    "subgraph_selector",
    "sketch_to_svg",
    "svg_substitute",
    "verification",
}

# Everything not listed here ships as-documented source text ("canon").
LOCAL_TEMPLATES = {"independent_variable", "code_patch"}

MARKER_RE = re.compile(r"(?<!\\)\$\{([^}]*)\}")


def main() -> None:
    manifest: dict[str, dict] = {}
    for path in sorted(TEMPLATE_DIR.glob("*.txt")):
        body = path.read_bytes()
        raw_markers = MARKER_RE.findall(body.decode("utf-8"))
        seen: list[str] = []
        for raw in raw_markers:
            name = MARKER_ALIASES.get(raw, raw)
            if name not in seen:
                seen.append(name)
        required = [v for v in seen if v not in BUILTIN_VARS]
        tid = path.stem
        manifest[tid] = {
            "required_vars": required,
            "expects_images": tid in EXPECTS_IMAGES,
            "source": "local" if tid in LOCAL_TEMPLATES else "canon",
            "sha256": hashlib.sha256(body).hexdigest(),
        }
    out = TEMPLATE_DIR / "manifest.json"
    out.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {out} ({len(manifest)} templates)")


if __name__ == "__main__":
    main()
