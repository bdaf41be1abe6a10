"""Constants for the procedural sprite dataset.

Colours are kept far from key green (0, 1, 0) in RGB so the chroma-key
baseline can separate them from a green fill.
"""

SHAPES: tuple[str, ...] = ("circle", "square", "star")

COLORS: dict[str, tuple[float, float, float]] = {
    "red": (0.90, 0.10, 0.10),
    "orange": (0.95, 0.55, 0.10),
    "yellow": (0.95, 0.85, 0.15),
    "blue": (0.10, 0.20, 0.90),
    "purple": (0.55, 0.15, 0.75),
    "white": (0.95, 0.95, 0.95),
}

MOTIONS: tuple[str, ...] = ("drift", "oscillate", "rotate", "static", "blink")

DIRECTIONS: dict[str, tuple[int, int]] = {
    "right": (1, 0),
    "left": (-1, 0),
    "down": (0, 1),
    "up": (0, -1),
}

# Caption phrase per motion; drift is completed with its direction.
MOTION_PHRASES: dict[str, str] = {
    "drift": "drifting",
    "oscillate": "swaying",
    "rotate": "spinning",
    "static": "resting",
    "blink": "blinking",
}

CAPTION_TEMPLATE = "a {color} {shape} {motion}"

SOFT_EDGE_ALPHA = 0.5

DEFAULT_FPS = 8
FRAME_PATTERN = "frame_{index:04d}.png"
FRAME_GLOB = "frame_*.png"
META_FILENAME = "meta.json"
BOXES_FILENAME = "boxes.txt"
MANIFEST_FILENAME = "manifest.jsonl"
FILTER_REPORT_FILENAME = "filter_report.json"

SPLITS: tuple[str, ...] = ("train", "eval")
