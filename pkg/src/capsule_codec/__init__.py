"""RAW Bayer capsule-image codec, bubble analysis, frame-rate control and energy model."""

from .codec import CompressedStream, decode_frame, encode_frame, encode_frame_stats
from .color import forward_rct, inverse_rct
from .frame import BayerFrame, PlaneSet, load_frame, mosaic_rggb, store_frame
from .transform import QuantTables, default_tables, lossless_tables

__all__ = [
    "BayerFrame",
    "CompressedStream",
    "PlaneSet",
    "QuantTables",
    "decode_frame",
    "default_tables",
    "encode_frame",
    "encode_frame_stats",
    "forward_rct",
    "inverse_rct",
    "load_frame",
    "lossless_tables",
    "mosaic_rggb",
    "store_frame",
]
