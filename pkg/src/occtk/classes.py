"""Semantic class table shared by every stage.

Codes 1..16 follow the column order of the benchmark's per-class tables.
"""

FREE = 0
UNKNOWN = 255

CLASS_NAMES = (
    "barrier",
    "bicycle",
    "bus",
    "car",
    "construction_vehicle",
    "motorcycle",
    "pedestrian",
    "traffic_cone",
    "trailer",
    "truck",
    "driveable_surface",
    "other_flat",
    "sidewalk",
    "terrain",
    "manmade",
    "vegetation",
)

NUM_CLASSES = len(CLASS_NAMES)
CLASS_CODES = {name: code for code, name in enumerate(CLASS_NAMES, start=1)}

# a few spelling variants seen in annotation dumps
_ALIASES = {
    "drivable_surface": "driveable_surface",
    "construction vehicle": "construction_vehicle",
    "traffic cone": "traffic_cone",
    "driveable surface": "driveable_surface",
    "drivable surface": "driveable_surface",
    "other flat": "other_flat",
}

FOREGROUND = frozenset(range(1, 11))
BACKGROUND = frozenset(range(11, 17))

BARRIER, BICYCLE, BUS, CAR, CONSTRUCTION_VEHICLE, MOTORCYCLE, PEDESTRIAN, \
    TRAFFIC_CONE, TRAILER, TRUCK, DRIVEABLE_SURFACE, OTHER_FLAT, SIDEWALK, \
    TERRAIN, MANMADE, VEGETATION = range(1, 17)

ROAD_CLASSES = frozenset({DRIVEABLE_SURFACE, SIDEWALK, TERRAIN})
VEHICLE_CLASSES = frozenset({BICYCLE, BUS, CAR, CONSTRUCTION_VEHICLE, MOTORCYCLE, TRAILER, TRUCK})
# planning keeps vehicles and pedestrians only
PLANNING_CLASSES = VEHICLE_CLASSES | {PEDESTRIAN}
IRREGULAR_CLASSES = (TRUCK, TRAILER, CONSTRUCTION_VEHICLE)


def class_code(name: str) -> int:
    """Map a class name to its label code; raises KeyError for unknown names."""
    key = name.strip().lower()
    key = _ALIASES.get(key, key)
    if key not in CLASS_CODES:
        raise KeyError(name)
    return CLASS_CODES[key]


def class_name(code: int) -> str:
    if code == FREE:
        return "free"
    if code == UNKNOWN:
        return "unknown"
    return CLASS_NAMES[code - 1]
