"""The fixed catalogue of cephalometric landmarks and clinical lines.

Sixteen named skull points feed the standard analyses. Eleven of them are
reported as detected points; the remaining five (Po, Go, UIA, LIA, LIT)
only ever appear through the four clinical lines they define.
"""

# Canonical short names, in the order used for reports and files.
LANDMARK_NAMES = (
    "Me", "Pog", "Gn",
    "N", "S", "ANS", "PNS", "A", "B", "UIT", "UIA",
    "Po", "Or", "Go", "LIT", "LIA",
)

FULL_NAMES = {
    "Me": "Menton",
    "Pog": "Pogonion",
    "Gn": "Gnathion",
    "N": "Nasion",
    "S": "Sella",
    "ANS": "Anterior Nasal Spine",
    "PNS": "Posterior Nasal Spine",
    "A": "A point",
    "B": "B point",
    "UIT": "Upper Incisor Tip",
    "UIA": "Upper Incisor Apex",
    "Po": "Porion",
    "Or": "Orbitale",
    "Go": "Gonion",
    "LIT": "Lower Incisor Tip",
    "LIA": "Lower Incisor Apex",
}

# Accept full names as aliases when parsing annotation files.
_ALIASES = {full: short for short, full in FULL_NAMES.items()}


def canonical_name(name: str) -> str | None:
    """Map a landmark label to its canonical short name, or None."""
    if name in FULL_NAMES:
        return name
    return _ALIASES.get(name)


# Mechanism assignment. Chin landmarks come from edge tracing, the next
# eight from weighted template matching; everything else is only reachable
# through the estimated lines.
EDGE_TRACED = ("Me", "Gn", "Pog")
TEMPLATE_MATCHED = ("A", "ANS", "B", "N", "Or", "PNS", "S", "UIT")
# Po is matched by template as well, but only as raw input to the
# Frankfort line; it is never reported as a detected point.
AUX_TEMPLATE_MATCHED = ("Po",)

DETECTED_POINTS = EDGE_TRACED + TEMPLATE_MATCHED

# The four clinical lines, keyed by their report names.
LINE_NAMES = ("Po-Or", "Go-Me", "UIT-UIA", "LIT-LIA")

LINE_ENDPOINTS = {
    "Po-Or": ("Po", "Or"),
    "Go-Me": ("Go", "Me"),
    "UIT-UIA": ("UIT", "UIA"),
    "LIT-LIA": ("LIT", "LIA"),
}

# Lines whose inclination is estimated by fitting edges inside a learned
# region (the Frankfort Po-Or line is derived from points instead).
EDGE_FITTED_LINES = ("Go-Me", "UIT-UIA", "LIT-LIA")

# Region-model keys for the edge-fitted lines (apex-to-tip order).
LINE_REGION_KEYS = {
    "Go-Me": "Go-Me",
    "UIT-UIA": "UIA-UIT",
    "LIT-LIA": "LIA-LIT",
}

# A line's millimetre threshold converts to degrees with half the endpoint
# displacement when at least one endpoint is independently detectable by
# edge tracing or template matching, and the full displacement otherwise.
# LIT-LIA is the only line with neither endpoint detected independently.
LINE_ENDPOINTS_INDEPENDENT = {
    "Po-Or": True,
    "Go-Me": True,
    "UIT-UIA": True,
    "LIT-LIA": False,
}

# Row order for reports: points by mechanism, then lines.
REPORT_ITEM_ORDER = DETECTED_POINTS + LINE_NAMES
