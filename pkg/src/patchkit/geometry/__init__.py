from .layout import (
    FORMAT_VERSION,
    AntennaGeometry,
    CopperLayer,
    DielectricLayer,
    FeedPort,
    LayerStack,
    SlotSpec,
    alignment_marks,
    board_margin,
    build_mono,
    build_slotted,
    build_stacked,
    default_board,
    feed_line,
    slot_shape,
)
from .masks import export_masks, layer_svg
from .raster import pec_cell_counts, rasterize, resolution_warnings
from .shapes import Rect, Shape

__all__ = [
    "FORMAT_VERSION",
    "AntennaGeometry",
    "CopperLayer",
    "DielectricLayer",
    "FeedPort",
    "LayerStack",
    "Rect",
    "Shape",
    "SlotSpec",
    "alignment_marks",
    "board_margin",
    "build_mono",
    "build_slotted",
    "build_stacked",
    "default_board",
    "export_masks",
    "feed_line",
    "layer_svg",
    "pec_cell_counts",
    "rasterize",
    "resolution_warnings",
    "slot_shape",
]
