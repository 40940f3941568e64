"""Layered antenna geometries: mono inset-fed, U-slotted, and stacked patches.

Board coordinates put the feed edge on ``y = board.y0``; the feed strip
runs along +y into the (top) patch.  Copper is zero-thickness.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from ..constants import C0, MM
from ..design import PatchDesign, SubstrateSpec
from ..errors import GeometryError, MarginError, PlacementError
from .shapes import QUANTUM, Rect, Shape

FORMAT_VERSION = 1
MARK_ARM = 2 * MM
MARK_OFFSET = 3 * MM  # crosses sit outside the board corners


@dataclass(frozen=True)
class CopperLayer:
    name: str
    shape: Shape
    role: str = "signal"  # "ground" | "patch" | "signal"


@dataclass(frozen=True)
class DielectricLayer:
    substrate: SubstrateSpec

    @property
    def thickness(self) -> float:
        return self.substrate.height


@dataclass(frozen=True)
class LayerStack:
    layers: tuple  # bottom to top
    board: Rect

    def __post_init__(self):
        if not self.layers or not isinstance(self.layers[0], CopperLayer):
            raise GeometryError("bottom layer must be a copper ground")
        for a, b in zip(self.layers, self.layers[1:]):
            if isinstance(a, CopperLayer) == isinstance(b, CopperLayer):
                raise GeometryError("copper and dielectric layers must alternate")
        for lay in self.layers:
            if isinstance(lay, DielectricLayer) and not lay.thickness > 0:
                raise GeometryError("dielectric thickness must be > 0")

    @property
    def copper(self) -> list[CopperLayer]:
        return [l for l in self.layers if isinstance(l, CopperLayer)]

    def copper_heights(self) -> list[float]:
        """z of every copper layer, ground at 0."""
        z, out = 0.0, []
        for lay in self.layers:
            if isinstance(lay, CopperLayer):
                out.append(z)
            else:
                z += lay.thickness
        return out

    @property
    def total_thickness(self) -> float:
        return sum(l.thickness for l in self.layers if isinstance(l, DielectricLayer))


@dataclass(frozen=True)
class FeedPort:
    """Feed strip cross-section where it leaves the board edge.

    ``layer`` indexes :attr:`LayerStack.copper`.  The strip enters from the
    side of the board along +y (reference plane at ``y_ref``).
    """

    layer: int
    x_center: float
    width: float
    y_ref: float
    orientation: str = "side+y"


@dataclass(frozen=True)
class AntennaGeometry:
    kind: str
    stack: LayerStack
    port: FeedPort
    alignment_marks: tuple[tuple[float, float], ...]
    f_design: tuple[float, ...] = ()
    min_features: tuple[tuple[str, float], ...] = ()
    warnings: tuple[str, ...] = field(default=(), compare=False)

    @property
    def board(self) -> Rect:
        return self.stack.board

    def validate(self) -> None:
        b = self.board
        for lay in self.stack.copper:
            bb = lay.shape.bounds()
            if bb is not None and not b.contains_rect(bb):
                raise GeometryError(f"copper layer {lay.name!r} leaves the board outline")
        ground = self.stack.copper[0].shape
        if not ground.same_region(Shape.of(b)):
            raise GeometryError("ground plane must cover the full board")
        p = self.port
        trace = self.stack.copper[p.layer].shape
        if not trace.contains(p.x_center, p.y_ref + 10 * QUANTUM):
            raise GeometryError("port does not sit on a copper trace")

    # -- persistence ---------------------------------------------------------
    def to_text(self) -> str:
        b = self.board
        lines = [
            f"format_version = {FORMAT_VERSION}",
            f"kind = {self.kind}",
            f"board = {b.x0!r} {b.y0!r} {b.x1!r} {b.y1!r}",
            f"f_design = {' '.join(repr(f) for f in self.f_design)}",
            f"layers = {len(self.stack.layers)}",
        ]
        for n, lay in enumerate(self.stack.layers):
            if isinstance(lay, CopperLayer):
                lines.append(f"layer.{n}.type = copper")
                lines.append(f"layer.{n}.name = {lay.name}")
                lines.append(f"layer.{n}.role = {lay.role}")
                lines.append(f"layer.{n}.shape = {lay.shape.to_text()}")
            else:
                s = lay.substrate
                lines.append(f"layer.{n}.type = dielectric")
                lines.append(f"layer.{n}.eps_r = {s.eps_r!r}")
                lines.append(f"layer.{n}.height = {s.height!r}")
                lines.append(f"layer.{n}.loss_tangent = {s.loss_tangent!r}")
        p = self.port
        lines.append(f"port = {p.layer} {p.x_center!r} {p.width!r} {p.y_ref!r} {p.orientation}")
        lines.append("marks = " + "; ".join(f"{x!r} {y!r}" for x, y in self.alignment_marks))
        lines.append(
            "min_features = " + "; ".join(f"{name} {v!r}" for name, v in self.min_features)
        )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> AntennaGeometry:
        kv = {}
        for ln in text.splitlines():
            if not ln.strip() or ln.lstrip().startswith("#"):
                continue
            key, _, val = ln.partition("=")
            kv[key.strip()] = val.strip()
        try:
            version = int(kv["format_version"])
            if version != FORMAT_VERSION:
                raise GeometryError(f"unsupported geometry format version {version}")
            board = Rect(*(float(v) for v in kv["board"].split()))
            layers = []
            for n in range(int(kv["layers"])):
                if kv[f"layer.{n}.type"] == "copper":
                    layers.append(
                        CopperLayer(
                            kv[f"layer.{n}.name"],
                            Shape.from_text(kv[f"layer.{n}.shape"]),
                            kv[f"layer.{n}.role"],
                        )
                    )
                else:
                    layers.append(
                        DielectricLayer(
                            SubstrateSpec(
                                float(kv[f"layer.{n}.eps_r"]),
                                float(kv[f"layer.{n}.height"]),
                                float(kv[f"layer.{n}.loss_tangent"]),
                            )
                        )
                    )
            pl, px, pw, py, po = kv["port"].split()
            marks = tuple(
                tuple(float(v) for v in m.split()) for m in kv.get("marks", "").split(";") if m.strip()
            )
            feats = tuple(
                (m.split()[0], float(m.split()[1]))
                for m in kv.get("min_features", "").split(";")
                if m.strip()
            )
            f_design = tuple(float(v) for v in kv.get("f_design", "").split())
        except (KeyError, ValueError, IndexError) as exc:
            if isinstance(exc, GeometryError):
                raise
            raise GeometryError(f"malformed geometry file: {exc}") from exc
        return cls(
            kv["kind"],
            LayerStack(tuple(layers), board),
            FeedPort(int(pl), float(px), float(pw), float(py), po),
            marks,
            f_design,
            feats,
        )


@dataclass(frozen=True)
class SlotSpec:
    total_length: float
    width: float
    bend_count: int = 2
    offset_x: float = 0.0
    offset_y: float = 0.0
    clearance: float = 1 * MM

    def __post_init__(self):
        if self.total_length < 0:
            raise GeometryError("slot total_length must be >= 0")
        if not self.width > 0:
            raise GeometryError("slot width must be > 0")
        if self.bend_count not in (0, 2):
            raise GeometryError("only straight (0) and U-shaped (2) slots are supported")
        if self.clearance < 0:
            raise GeometryError("slot clearance must be >= 0")


# -- helpers ---------------------------------------------------------------
def board_margin(f_lowest: float) -> float:
    return C0 / f_lowest / 4.0


def default_board(width: float, length: float, f_lowest: float) -> Rect:
    """Board with a quarter free-space wavelength around a ``width x length`` footprint."""
    m = board_margin(f_lowest)
    bw = _snap(width + 2 * m)
    bh = _snap(length + 2 * m)
    return Rect(0.0, 0.0, bw, bh)


def _snap(v: float, step: float = 0.1 * MM) -> float:
    """Round up to a whole 0.1 mm so board outlines stay tidy."""
    return math.ceil(v / step - 1e-9) * step


def alignment_marks(board: Rect) -> tuple[tuple[float, float], ...]:
    o = MARK_OFFSET
    return (
        (board.x0 - o, board.y0 - o),
        (board.x1 + o, board.y0 - o),
        (board.x0 - o, board.y1 + o),
        (board.x1 + o, board.y1 + o),
    )


def _check_margin(board: Rect, footprint: Rect, f_lowest: float) -> None:
    m = board_margin(f_lowest)
    gaps = (
        footprint.x0 - board.x0,
        board.x1 - footprint.x1,
        footprint.y0 - board.y0,
        board.y1 - footprint.y1,
    )
    if min(gaps) < m - 1e-9:
        raise MarginError(
            f"board leaves {min(gaps) / MM:.2f} mm around the patch; "
            f"need at least lambda0/4 = {m / MM:.2f} mm"
        )


def inset_patch(design: PatchDesign, cx: float, cy: float, y_feed: float) -> tuple[Shape, Rect]:
    """Patch with inset notches plus the feed strip from ``y_feed`` up to the inset point.

    Returns the copper shape and the bare patch rectangle.
    """
    w, l = design.width, design.length
    patch = Rect.from_center(cx, cy, w, l)
    wt, g, x0 = design.feed_width, design.gap, design.inset_distance
    if wt + 2 * g >= w:
        raise PlacementError("feed strip and gaps are wider than the patch")
    if x0 >= l:
        raise PlacementError("inset depth exceeds patch length")
    shape = Shape.of(patch)
    if x0 > 0:
        shape = shape.subtract(Rect(cx - wt / 2 - g, patch.y0, cx + wt / 2 + g, patch.y0 + x0))
    shape = shape.union(Rect(cx - wt / 2, y_feed, cx + wt / 2, patch.y0 + x0))
    return shape, patch


def _mono_features(design: PatchDesign) -> list[tuple[str, float]]:
    feats = [("feed_width", design.feed_width)]
    if design.inset_distance > 0:
        feats.append(("gap", design.gap))
    return feats


# -- builders --------------------------------------------------------------
def build_mono(design: PatchDesign, board: Rect | None = None) -> AntennaGeometry:
    if board is None:
        board = default_board(design.width, design.length, design.f0)
    cx, cy = board.center
    patch = Rect.from_center(cx, cy, design.width, design.length)
    _check_margin(board, patch, design.f0)
    top, _ = inset_patch(design, cx, cy, board.y0)
    stack = LayerStack(
        (
            CopperLayer("ground", Shape.of(board), "ground"),
            DielectricLayer(design.substrate),
            CopperLayer("top", top, "patch"),
        ),
        board,
    )
    geo = AntennaGeometry(
        "mono",
        stack,
        FeedPort(1, cx, design.feed_width, board.y0),
        alignment_marks(board),
        (design.f0,),
        tuple(_mono_features(design)),
    )
    geo.validate()
    return geo


def slot_shape(patch: Rect, slot: SlotSpec, keepout: Rect | None = None) -> Shape:
    """U-shaped (or straight) slot: base parallel to the patch width near the far edge.

    The legs run back toward the feed edge.  Centerline length is exactly
    ``slot.total_length``; the carved area is ``total_length * width``.
    """
    w, c = slot.width, slot.clearance
    cx = patch.center[0] + slot.offset_x
    yb = patch.y1 - c - w / 2 + slot.offset_y  # base centerline
    total = slot.total_length
    if slot.bend_count == 0:
        shape = Shape.of(Rect(cx - total / 2, yb - w / 2, cx + total / 2, yb + w / 2))
    else:
        b = patch.width - 2 * c - w
        a = (total - b) / 2
        if a < w:
            a = w
            b = total - 2 * a
        if b < w:
            raise PlacementError(f"slot of {total / MM:.2f} mm is too short to fold into a U")
        xl, xr = cx - b / 2, cx + b / 2
        shape = Shape.of(
            Rect(xl - w / 2, yb - w / 2, xr + w / 2, yb + w / 2),
            Rect(xl - w / 2, yb - a, xl + w / 2, yb),
            Rect(xr - w / 2, yb - a, xr + w / 2, yb),
        )
    bb = shape.bounds()
    inner = Rect(patch.x0 + c, patch.y0 + c, patch.x1 - c, patch.y1 - c) if 2 * c < min(
        patch.width, patch.height
    ) else None
    if inner is None or not inner.contains_rect(bb) or not (
        bb.x0 > patch.x0 and bb.x1 < patch.x1 and bb.y0 > patch.y0 and bb.y1 < patch.y1
    ):
        raise PlacementError(
            f"slot ({total / MM:.2f} mm x {w / MM:.2f} mm) does not fold inside the patch "
            f"with {c / MM:.2f} mm clearance"
        )
    if keepout is not None:
        for r in shape.rectangles():
            if r.intersects(keepout):
                raise PlacementError("slot collides with the inset feed region")
    return shape


def build_slotted(
    design: PatchDesign, slot: SlotSpec, board: Rect | None = None
) -> AntennaGeometry:
    mono = build_mono(design, board)
    if slot.total_length == 0:
        return mono
    board = mono.board
    cx, cy = board.center
    patch = Rect.from_center(cx, cy, design.width, design.length)
    keep = Rect(
        cx - design.feed_width / 2 - design.gap,
        patch.y0,
        cx + design.feed_width / 2 + design.gap,
        patch.y0 + max(design.inset_distance, QUANTUM * 1000),
    )
    cut = slot_shape(patch, slot, keep)
    top = mono.stack.copper[1]
    layers = list(mono.stack.layers)
    layers[2] = replace(top, shape=top.shape.subtract(cut))
    geo = replace(
        mono,
        kind="slotted",
        stack=LayerStack(tuple(layers), board),
        min_features=mono.min_features + (("slot_width", slot.width),),
    )
    geo.validate()
    return geo


def build_stacked(
    lower: PatchDesign,
    upper: PatchDesign,
    dy: float,
    substrates: tuple[SubstrateSpec, SubstrateSpec] | None = None,
    board: Rect | None = None,
) -> AntennaGeometry:
    """Ground, lower patch (no feed), upper inset patch fed from the board side.

    The upper patch center sits ``dy`` from the lower patch center along +y.
    """
    if abs(dy) >= lower.length / 2:
        raise PlacementError(
            f"|dy| = {abs(dy) / MM:.2f} mm must be below half the lower patch length "
            f"({lower.length / 2 / MM:.2f} mm)"
        )
    if substrates is None:
        substrates = (lower.substrate, upper.substrate)
    f_low = min(lower.f0, upper.f0)
    if board is None:
        board = default_board(
            max(lower.width, upper.width), max(lower.length, upper.length) + 2 * abs(dy), f_low
        )
    cx, cy = board.center
    lower_rect = Rect.from_center(cx, cy, lower.width, lower.length)
    upper_rect = Rect.from_center(cx, cy + dy, upper.width, upper.length)
    if not board.contains_rect(upper_rect):
        raise PlacementError("displacement pushes the upper patch off the board")
    _check_margin(board, lower_rect, f_low)
    top, _ = inset_patch(upper, cx, cy + dy, board.y0)
    stack = LayerStack(
        (
            CopperLayer("ground", Shape.of(board), "ground"),
            DielectricLayer(substrates[0]),
            CopperLayer("middle", Shape.of(lower_rect), "patch"),
            DielectricLayer(substrates[1]),
            CopperLayer("top", top, "patch"),
        ),
        board,
    )
    geo = AntennaGeometry(
        "stacked",
        stack,
        FeedPort(2, cx, upper.feed_width, board.y0),
        alignment_marks(board),
        (lower.f0, upper.f0),
        tuple(_mono_features(upper)),
    )
    geo.validate()
    return geo


def feed_line(geometry: AntennaGeometry) -> AntennaGeometry:
    """Same stack with the patches removed: only the feed strip spanning the board."""
    b = geometry.board
    p = geometry.port
    strip = Shape.of(Rect(p.x_center - p.width / 2, b.y0, p.x_center + p.width / 2, b.y1))
    layers = []
    copper_idx = 0
    for lay in geometry.stack.layers:
        if isinstance(lay, CopperLayer):
            if copper_idx == 0:
                layers.append(lay)
            elif copper_idx == p.layer:
                layers.append(CopperLayer(lay.name, strip, "signal"))
            else:
                layers.append(CopperLayer(lay.name, Shape(), lay.role))
            copper_idx += 1
        else:
            layers.append(lay)
    return AntennaGeometry(
        "feedline",
        LayerStack(tuple(layers), b),
        p,
        geometry.alignment_marks,
        geometry.f_design,
        (("feed_width", p.width),),
    )
