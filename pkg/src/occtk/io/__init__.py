"""File formats, manifests and synthetic scenes."""

from occtk.io.manifest import ManifestError, read_manifest, write_manifest
from occtk.io.occ1 import Occ1FormatError, decode_occ, encode_occ, read_occ, write_occ
from occtk.io.points import PointsFormatError, read_points, write_points
from occtk.io.synth import ArmVehicle, SynthConfig, SynthScene, irregular_gap, synth_scene, write_scene

__all__ = [
    "ArmVehicle", "ManifestError", "SynthConfig", "SynthScene", "irregular_gap", "synth_scene", "write_scene", "Occ1FormatError", "PointsFormatError", "decode_occ", "encode_occ",
    "read_manifest", "read_occ", "read_points", "write_manifest", "write_occ", "write_points",
]
