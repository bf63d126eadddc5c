"""Static checks over generated simulation documents."""
from __future__ import annotations

import re

_CANVAS_RE = re.compile(r"<canvas\b", re.IGNORECASE)
_DEBUG_FLAG = "window.LOG_DEBUG"
_LOGDEBUG_DEF_RE = re.compile(r"(?:function\s+logDebug\s*\(|(?:const|let|var)\s+logDebug\s*=)")

MARKER_CANVAS = "canvas"
MARKER_DEBUG_FLAG = "window.LOG_DEBUG"
MARKER_LOGDEBUG = "logDebug"


def missing_markers(document: str) -> tuple[str, ...]:
    """Names of required instrumentation markers absent from the document."""
    missing = []
    if not _CANVAS_RE.search(document):
        missing.append(MARKER_CANVAS)
    if _DEBUG_FLAG not in document:
        missing.append(MARKER_DEBUG_FLAG)
    if not _LOGDEBUG_DEF_RE.search(document):
        missing.append(MARKER_LOGDEBUG)
    return tuple(missing)


def debug_flag_default_false(document: str) -> bool:
    return bool(re.search(r"window\.LOG_DEBUG\s*=\s*false", document))


def svg_element(text: str) -> str | None:
    """The single balanced <svg>...</svg> element in text, if there is one."""
    opens = len(re.findall(r"<svg\b", text))
    closes = text.count("</svg>")
    if opens != 1 or closes != 1:
        return None
    start = re.search(r"<svg\b", text)
    end = text.find("</svg>")
    if start is None or end < start.start():
        return None
    return text[start.start() : end + len("</svg>")]
