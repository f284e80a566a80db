"""Readers and writers for every on-disk format the pipeline touches.

Documents are JSON with a versioned ``schema`` field:

* ``fv-calib/1``  camera intrinsics, depth scale and depth-to-color extrinsics
* ``fv-det/1``    2D detections
* ``fv-rle/1``    run-length encoded binary masks
* ``fv-box/1``    reconstructed 3D boxes

Depth frames are 16-bit grayscale PNG; masks are 8-bit single-channel PNG
(or RLE documents); point clouds are PLY, ASCII or binary little-endian.

All parse failures surface as :class:`~fvkit.core.FvError` subclasses.
"""

from __future__ import annotations

import io
import json
import logging
import struct
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np
from PIL import Image

from .core import (
    Aabb3,
    BinaryMask,
    CameraIntrinsics,
    ColorFrame,
    DepthFrame,
    Detection2D,
    FormatError,
    FrameBundle,
    FvError,
    LabeledCloud,
    ParseError,
    PointCloud,
    RigidTransform,
    ValidationError,
)
from .cloudproc import aabb_wireframe
from .pipeline import PipelineConfig
from .synth import Box, NoiseSpec, Plane, Primitive, SceneSpec, Sphere

logger = logging.getLogger(__name__)

CALIB_SCHEMA = "fv-calib/1"
DET_SCHEMA = "fv-det/1"
RLE_SCHEMA = "fv-rle/1"
BOX_SCHEMA = "fv-box/1"

DEFAULT_DEPTH_SCALE = 0.001

_PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


# ---------------------------------------------------------------- helpers


def _load_json(text, what: str) -> dict:
    if isinstance(text, (bytes, bytearray)):
        try:
            text = bytes(text).decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ParseError(f"{what}: not UTF-8 text ({exc})") from None
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, TypeError, RecursionError) as exc:
        raise ParseError(f"{what}: invalid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise ParseError(f"{what}: top level must be an object")
    return doc


def _check_schema(doc: dict, expected: str, what: str) -> None:
    if doc.get("schema") != expected:
        raise ParseError(f"{what}: field 'schema' must be {expected!r}, got {doc.get('schema')!r}")


def _get(doc, key: str, path: str):
    if not isinstance(doc, dict) or key not in doc:
        raise ParseError(f"missing field '{path}'")
    return doc[key]


def _number(doc, key: str, path: str) -> float:
    v = _get(doc, key, path)
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ParseError(f"field '{path}' must be a number, got {v!r}")
    return v


def _integer(doc, key: str, path: str) -> int:
    v = _get(doc, key, path)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"field '{path}' must be an integer, got {v!r}")
    return v


def _numbers(doc, key: str, path: str, n: int) -> list:
    v = _get(doc, key, path)
    if not isinstance(v, list) or len(v) != n:
        raise ParseError(f"field '{path}' must be a list of {n} numbers")
    for x in v:
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ParseError(f"field '{path}' must be a list of {n} numbers, found {x!r}")
    return v


def _dumps(doc: dict) -> str:
    return json.dumps(doc, indent=2) + "\n"


# ---------------------------------------------------------------- calibration


@dataclass(frozen=True)
class Calibration:
    color: CameraIntrinsics
    depth: CameraIntrinsics
    extrinsics: RigidTransform
    depth_scale: float = DEFAULT_DEPTH_SCALE


_INTRINSIC_FIELDS = ("fx", "fy", "cx", "cy", "width", "height")


def _parse_intrinsics(doc, name: str) -> CameraIntrinsics:
    sub = _get(doc, name, name)
    vals = {}
    for f in _INTRINSIC_FIELDS:
        path = f"{name}.{f}"
        vals[f] = _integer(sub, f, path) if f in ("width", "height") else _number(sub, f, path)
    try:
        return CameraIntrinsics(**vals)
    except ValidationError as exc:
        raise ValidationError(f"{name}: {exc}") from None


def load_calibration(text) -> Calibration:
    doc = _load_json(text, "calibration")
    _check_schema(doc, CALIB_SCHEMA, "calibration")
    color = _parse_intrinsics(doc, "color")
    depth = _parse_intrinsics(doc, "depth")
    scale = _number(doc, "depth_scale", "depth_scale") if "depth_scale" in doc else DEFAULT_DEPTH_SCALE
    if not scale > 0:
        raise ValidationError(f"depth_scale must be > 0, got {scale}")
    ext = _get(doc, "extrinsics", "extrinsics")
    rot = _numbers(ext, "rotation", "extrinsics.rotation", 9)
    trans = _numbers(ext, "translation", "extrinsics.translation", 3)
    try:
        T = RigidTransform(np.reshape(rot, (3, 3)), trans)
    except ValidationError as exc:
        raise ValidationError(f"extrinsics: {exc}") from None
    return Calibration(color, depth, T, float(scale))


def parse_calibration(text) -> tuple[CameraIntrinsics, CameraIntrinsics, RigidTransform]:
    """Return (color intrinsics, depth intrinsics, depth-to-color transform)."""
    c = load_calibration(text)
    return c.color, c.depth, c.extrinsics


def _intrinsics_doc(K: CameraIntrinsics) -> dict:
    return {"fx": K.fx, "fy": K.fy, "cx": K.cx, "cy": K.cy, "width": K.width, "height": K.height}


def calibration_to_dict(calib: Calibration) -> dict:
    return {
        "schema": CALIB_SCHEMA,
        "color": _intrinsics_doc(calib.color),
        "depth": _intrinsics_doc(calib.depth),
        "depth_scale": calib.depth_scale,
        "extrinsics": {
            "rotation": calib.extrinsics.rotation.reshape(-1).tolist(),
            "translation": calib.extrinsics.translation.tolist(),
        },
    }


def write_calibration(calib: Calibration) -> str:
    """Serialize; the rotation maps depth-camera into color-camera coordinates."""
    return _dumps(calibration_to_dict(calib))


# ---------------------------------------------------------------- PNG frames


def _png_header(data: bytes) -> tuple[int, int, int, int]:
    """(width, height, bit depth, color type) from the IHDR chunk."""
    if len(data) < 33 or data[:8] != _PNG_MAGIC or data[12:16] != b"IHDR":
        raise FormatError("not a PNG file")
    width, height, bit_depth, color_type = struct.unpack(">IIBB", data[16:26])
    return width, height, bit_depth, color_type


def _decode_png(data: bytes) -> np.ndarray:
    try:
        with Image.open(io.BytesIO(data)) as im:
            im.load()
            return np.array(im)
    except (OSError, ValueError, SyntaxError, zlib.error, Image.DecompressionBombError) as exc:
        raise FormatError(f"corrupt PNG: {exc}") from None


def load_depth_png(data: bytes, depth_scale: float = DEFAULT_DEPTH_SCALE) -> DepthFrame:
    data = bytes(data)
    w, h, bits, ctype = _png_header(data)
    if bits != 16 or ctype != 0:
        raise FormatError(f"depth PNG must be 16-bit single-channel, got {bits}-bit color type {ctype}")
    arr = _decode_png(data)
    if arr.shape != (h, w):
        raise FormatError(f"decoded depth has shape {arr.shape}, header says {(h, w)}")
    return DepthFrame(arr.astype(np.uint16), depth_scale)


def save_depth_png(depth: DepthFrame) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(depth.data, dtype=np.uint16)).save(buf, format="PNG")
    return buf.getvalue()


def load_color_png(data: bytes) -> ColorFrame:
    arr = _decode_png(bytes(data))
    if arr.ndim != 3 or arr.shape[2] not in (3, 4) or arr.dtype != np.uint8:
        raise FormatError(f"color PNG must be 8-bit RGB, got shape {arr.shape}")
    return ColorFrame(arr[:, :, :3])


def save_color_png(color: ColorFrame) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.ascontiguousarray(color.data)).save(buf, format="PNG")
    return buf.getvalue()


def load_mask(data: bytes, width: Optional[int] = None, height: Optional[int] = None) -> BinaryMask:
    """Single-channel PNG; samples above 127 are foreground."""
    data = bytes(data)
    w, h, bits, ctype = _png_header(data)
    if ctype != 0:
        raise FormatError(f"mask PNG must be single-channel, got color type {ctype}")
    if (width is not None and w != width) or (height is not None and h != height):
        raise FormatError(f"mask is {w}x{h}, expected {width}x{height}")
    arr = _decode_png(data)
    if bits == 1:
        return BinaryMask(arr.astype(bool))
    if bits == 16:
        arr = arr.astype(np.uint32) >> 8
    return BinaryMask(arr > 127)


def save_mask(mask: BinaryMask) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(mask.bits.astype(np.uint8) * 255).save(buf, format="PNG")
    return buf.getvalue()


def load_soft_mask(data: bytes) -> np.ndarray:
    """Single-channel PNG scaled to [0, 1]."""
    data = bytes(data)
    _, _, bits, ctype = _png_header(data)
    if ctype != 0:
        raise FormatError("soft mask PNG must be single-channel")
    arr = _decode_png(data).astype(np.float64)
    return arr / float(2**bits - 1)


# ---------------------------------------------------------------- RLE


def rle_runs(mask: BinaryMask) -> list[tuple[int, int]]:
    flat = mask.bits.reshape(-1)
    if flat.size == 0:
        return []
    change = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    starts = np.concatenate([[0], change])
    lengths = np.diff(np.concatenate([starts, [flat.size]]))
    return [(int(flat[s]), int(n)) for s, n in zip(starts, lengths)]


def rle_encode(mask: BinaryMask) -> str:
    runs = [{"value": v, "length": n} for v, n in rle_runs(mask)]
    return json.dumps({"schema": RLE_SCHEMA, "width": mask.width, "height": mask.height, "runs": runs})


def rle_decode(text) -> BinaryMask:
    doc = _load_json(text, "mask RLE")
    _check_schema(doc, RLE_SCHEMA, "mask RLE")
    w = _integer(doc, "width", "width")
    h = _integer(doc, "height", "height")
    if w < 1 or h < 1:
        raise FormatError(f"mask RLE: invalid size {w}x{h}")
    runs = _get(doc, "runs", "runs")
    if not isinstance(runs, list):
        raise ParseError("field 'runs' must be a list")
    values, lengths = [], []
    for i, run in enumerate(runs):
        v = _integer(run, "value", f"runs[{i}].value")
        n = _integer(run, "length", f"runs[{i}].length")
        if v not in (0, 1) or n < 0:
            raise FormatError(f"mask RLE: bad run {i}: value={v}, length={n}")
        values.append(v)
        lengths.append(n)
    if sum(lengths) != w * h:
        raise FormatError(f"mask RLE: runs cover {sum(lengths)} pixels, expected {w * h}")
    bits = np.repeat(np.array(values, dtype=bool), lengths)
    return BinaryMask(bits.reshape(h, w))


# ---------------------------------------------------------------- detections


def load_detections(text, width: Optional[int] = None, height: Optional[int] = None) -> list[Detection2D]:
    """Parse a detections document; boxes are clamped when a frame size is given."""
    doc = _load_json(text, "detections")
    _check_schema(doc, DET_SCHEMA, "detections")
    items = _get(doc, "detections", "detections")
    if not isinstance(items, list):
        raise ParseError("field 'detections' must be a list")
    out = []
    for i, item in enumerate(items):
        path = f"detections[{i}]"
        class_id = _integer(item, "class_id", f"{path}.class_id")
        label = item.get("label", str(class_id)) if isinstance(item, dict) else None
        if not isinstance(label, str):
            raise ParseError(f"field '{path}.label' must be text")
        conf = _number(item, "confidence", f"{path}.confidence")
        box = _numbers(item, "box", f"{path}.box", 4)
        try:
            det = Detection2D(class_id, label, float(conf), tuple(box))
            if width is not None and height is not None:
                det = det.clamped(width, height)
        except ValidationError as exc:
            raise ValidationError(f"{path}: {exc}") from None
        out.append(det)
    return out


def write_detections(detections: Iterable[Detection2D]) -> str:
    items = [
        {"class_id": d.class_id, "label": d.label, "confidence": d.confidence, "box": list(d.box)}
        for d in detections
    ]
    return _dumps({"schema": DET_SCHEMA, "detections": items})


# ---------------------------------------------------------------- boxes


def write_boxes(objects: Iterable[LabeledCloud], wireframes: bool = False) -> str:
    """fv-box/1 document; with ``wireframes`` each object also carries its
    eight ``corners`` and twelve ``edges`` (corner index pairs)."""
    items = []
    for o in objects:
        item = {
            "label": o.label,
            "class_id": o.class_id,
            "min": o.box.min.tolist(),
            "max": o.box.max.tolist(),
            "point_count": len(o.cloud),
        }
        if wireframes:
            corners, edges = aabb_wireframe(o.box)
            item["corners"] = corners.tolist()
            item["edges"] = [list(e) for e in edges]
        items.append(item)
    return _dumps({"schema": BOX_SCHEMA, "objects": items})


def load_boxes(text) -> list[dict]:
    """Parse a box document into dicts with ``label, class_id, box, point_count``."""
    doc = _load_json(text, "boxes")
    _check_schema(doc, BOX_SCHEMA, "boxes")
    items = _get(doc, "objects", "objects")
    if not isinstance(items, list):
        raise ParseError("field 'objects' must be a list")
    out = []
    for i, item in enumerate(items):
        path = f"objects[{i}]"
        lo = _numbers(item, "min", f"{path}.min", 3)
        hi = _numbers(item, "max", f"{path}.max", 3)
        try:
            box = Aabb3(lo, hi)
        except ValidationError as exc:
            raise ValidationError(f"{path}: {exc}") from None
        out.append({
            "label": item.get("label", ""),
            "class_id": _integer(item, "class_id", f"{path}.class_id"),
            "box": box,
            "point_count": _integer(item, "point_count", f"{path}.point_count"),
        })
    return out


# ---------------------------------------------------------------- PLY

_PLY_TYPES = {
    "char": "i1", "int8": "i1", "uchar": "u1", "uint8": "u1",
    "short": "i2", "int16": "i2", "ushort": "u2", "uint16": "u2",
    "int": "i4", "int32": "i4", "uint": "u4", "uint32": "u4",
    "float": "f4", "float32": "f4", "double": "f8", "float64": "f8",
}


def write_ply(cloud: PointCloud, binary: bool = False) -> bytes:
    """ASCII output stores doubles; binary output stores little-endian float32."""
    n = len(cloud)
    has_color = cloud.colors is not None
    ftype = "float" if binary else "double"
    header = ["ply", f"format {'binary_little_endian' if binary else 'ascii'} 1.0",
              f"element vertex {n}"]
    header += [f"property {ftype} {a}" for a in "xyz"]
    if has_color:
        header += [f"property uchar {c}" for c in ("red", "green", "blue")]
    header.append("end_header")
    head = ("\n".join(header) + "\n").encode("ascii")
    if binary:
        fields = [("x", "<f4"), ("y", "<f4"), ("z", "<f4")]
        if has_color:
            fields += [("red", "u1"), ("green", "u1"), ("blue", "u1")]
        rec = np.empty(n, dtype=fields)
        for i, a in enumerate("xyz"):
            rec[a] = cloud.points[:, i]
        if has_color:
            for i, c in enumerate(("red", "green", "blue")):
                rec[c] = cloud.colors[:, i]
        return head + rec.tobytes()
    lines = []
    for i in range(n):
        row = " ".join(repr(float(x)) for x in cloud.points[i])
        if has_color:
            row += " " + " ".join(str(int(c)) for c in cloud.colors[i])
        lines.append(row)
    body = ("\n".join(lines) + "\n").encode("ascii") if lines else b""
    return head + body


def _parse_ply_header(data: bytes):
    end = data.find(b"end_header")
    if not data.startswith(b"ply") or end < 0:
        raise FormatError("not a PLY file")
    nl = data.find(b"\n", end)
    body_start = len(data) if nl < 0 else nl + 1
    try:
        lines = data[:end].decode("ascii").splitlines()
    except UnicodeDecodeError:
        raise FormatError("PLY header is not ASCII") from None
    fmt = None
    elements: list[list] = []
    for line in lines[1:]:
        parts = line.split()
        if not parts or parts[0] in ("comment", "obj_info"):
            continue
        if parts[0] == "format" and len(parts) >= 2:
            fmt = parts[1]
        elif parts[0] == "element" and len(parts) == 3:
            try:
                count = int(parts[2])
            except ValueError:
                raise FormatError(f"bad element count in {line!r}") from None
            if count < 0:
                raise FormatError(f"negative element count in {line!r}")
            elements.append([parts[1], count, []])
        elif parts[0] == "property" and elements:
            if len(parts) == 3 and parts[1] in _PLY_TYPES:
                elements[-1][2].append((parts[2], _PLY_TYPES[parts[1]]))
            else:
                raise FormatError(f"unsupported property declaration {line!r}")
        else:
            raise FormatError(f"unexpected PLY header line {line!r}")
    if fmt not in ("ascii", "binary_little_endian"):
        raise FormatError(f"unsupported PLY format {fmt!r}")
    return fmt, elements, body_start


def read_ply(data: bytes) -> PointCloud:
    data = bytes(data)
    fmt, elements, body_start = _parse_ply_header(data)
    extra = [name for name, _, _ in elements if name != "vertex"]
    if extra:
        raise FormatError(f"unsupported PLY elements: {', '.join(extra)}")
    if not elements:
        raise FormatError("PLY has no vertex element")
    _, n, props = elements[0]
    names = [p[0] for p in props]
    if not all(a in names for a in "xyz"):
        raise FormatError("PLY vertex element lacks x/y/z properties")
    dtype = np.dtype([(name, "<" + t) for name, t in props])
    body = data[body_start:]
    if fmt == "binary_little_endian":
        if len(body) < n * dtype.itemsize:
            raise FormatError(f"PLY body truncated: {len(body)} bytes for {n} vertices")
        rec = np.frombuffer(body, dtype=dtype, count=n)
        cols = {name: rec[name].astype(np.float64) for name in names}
    else:
        try:
            rows = body.decode("ascii").split()
        except UnicodeDecodeError:
            raise FormatError("PLY ASCII body is not ASCII") from None
        if len(rows) < n * len(names):
            raise FormatError(f"PLY body truncated: {len(rows)} values for {n} vertices")
        try:
            table = np.array(rows[: n * len(names)], dtype=np.float64).reshape(n, len(names))
        except ValueError:
            raise FormatError("PLY ASCII body contains non-numeric values") from None
        cols = {name: table[:, i] for i, name in enumerate(names)}
    pts = np.column_stack([cols["x"], cols["y"], cols["z"]]) if n else np.empty((0, 3))
    colors = None
    if all(c in names for c in ("red", "green", "blue")):
        colors = np.column_stack([cols["red"], cols["green"], cols["blue"]]) if n else np.empty((0, 3))
        colors = np.clip(colors, 0, 255).astype(np.uint8)
    try:
        return PointCloud(pts, colors)
    except ValidationError as exc:
        raise FormatError(f"PLY vertices invalid: {exc}") from None


# ---------------------------------------------------------------- bundles
#
# A bundle directory holds:
#   calib.json        fv-calib/1
#   depth.png         16-bit depth in the depth camera's pixel grid
#   color.png         optional RGB frame
#   detections.json   fv-det/1 (optional; absent means no detections)
#   masks/NNN.png     one mask per detection, in the color frame's pixel grid
#                     (masks/NNN.rle.json is accepted instead of a PNG)


def _mask_path(masks_dir: Path, i: int) -> Optional[Path]:
    for name in (f"{i:03d}.png", f"{i:03d}.rle.json"):
        p = masks_dir / name
        if p.exists():
            return p
    return None


def load_bundle(directory) -> FrameBundle:
    d = Path(directory)
    try:
        calib = load_calibration((d / "calib.json").read_bytes())
        depth = load_depth_png((d / "depth.png").read_bytes(), calib.depth_scale)
        color = load_color_png((d / "color.png").read_bytes()) if (d / "color.png").exists() else None
        det_path = d / "detections.json"
        w, h = calib.color.width, calib.color.height
        detections = load_detections(det_path.read_bytes(), w, h) if det_path.exists() else []
        masks = []
        for i in range(len(detections)):
            p = _mask_path(d / "masks", i)
            if p is None:
                raise FormatError(f"bundle {d}: missing mask for detection {i}")
            if p.suffix == ".png":
                masks.append(load_mask(p.read_bytes(), w, h))
            else:
                m = rle_decode(p.read_bytes())
                if (m.width, m.height) != (w, h):
                    raise FormatError(f"{p}: mask is {m.width}x{m.height}, expected {w}x{h}")
                masks.append(m)
        return FrameBundle(depth, calib.color, calib.depth, calib.extrinsics, detections, masks, color)
    except FileNotFoundError as exc:
        raise FormatError(f"bundle {d}: missing file {exc.filename}") from None
    except FvError as exc:
        raise type(exc)(f"bundle {d}: {exc}") from None


def save_bundle(bundle: FrameBundle, directory) -> Path:
    d = Path(directory)
    (d / "masks").mkdir(parents=True, exist_ok=True)
    calib = Calibration(bundle.intrinsics_color, bundle.intrinsics_depth, bundle.extrinsics,
                        bundle.depth.depth_scale)
    (d / "calib.json").write_text(write_calibration(calib))
    (d / "depth.png").write_bytes(save_depth_png(bundle.depth))
    if bundle.color is not None:
        (d / "color.png").write_bytes(save_color_png(bundle.color))
    (d / "detections.json").write_text(write_detections(bundle.detections))
    for i, m in enumerate(bundle.masks):
        (d / "masks" / f"{i:03d}.png").write_bytes(save_mask(m))
    return d


def list_bundles(directory) -> list[Path]:
    """Bundle directories under ``directory`` (or ``directory`` itself)."""
    root = Path(directory)
    if (root / "calib.json").exists():
        return [root]
    return sorted(p for p in root.iterdir() if p.is_dir() and (p / "calib.json").exists())



# ---------------------------------------------------------------- scene / noise / config
#
# fv-scene/1: {"schema": "fv-scene/1",
#              "primitives": [{"type": "sphere", "center": [3], "radius": r, "label", "class_id"},
#                             {"type": "box", "min": [3], "max": [3], ...},
#                             {"type": "plane", "normal": [3], "offset": d, ...}],
#              "background": {"normal": [3], "offset": d}}          (optional)
# fv-noise/1: {"schema": "fv-noise/1", "sigma", "dropout_rate", "outlier_rate",
#              "outlier_magnitude", "seed"}                           (all optional)

SCENE_SCHEMA = "fv-scene/1"
NOISE_SCHEMA = "fv-noise/1"


def load_scene(text):
    doc = _load_json(text, "scene")
    _check_schema(doc, SCENE_SCHEMA, "scene")
    items = _get(doc, "primitives", "primitives")
    if not isinstance(items, list):
        raise ParseError("field 'primitives' must be a list")
    prims = []
    for i, item in enumerate(items):
        path = f"primitives[{i}]"
        kind = _get(item, "type", f"{path}.type")
        try:
            if kind == "sphere":
                shape = Sphere(_numbers(item, "center", f"{path}.center", 3), _number(item, "radius", f"{path}.radius"))
            elif kind == "box":
                shape = Box(_numbers(item, "min", f"{path}.min", 3), _numbers(item, "max", f"{path}.max", 3))
            elif kind == "plane":
                shape = Plane(_numbers(item, "normal", f"{path}.normal", 3), _number(item, "offset", f"{path}.offset"))
            else:
                raise ParseError(f"field '{path}.type' must be sphere, box or plane, got {kind!r}")
        except ValidationError as exc:
            raise ValidationError(f"{path}: {exc}") from None
        label = item.get("label", kind)
        class_id = item.get("class_id", i)
        if not isinstance(label, str) or isinstance(class_id, bool) or not isinstance(class_id, int):
            raise ParseError(f"{path}: label must be text and class_id an integer")
        prims.append(Primitive(shape, label, class_id))
    background = None
    if doc.get("background") is not None:
        bg = doc["background"]
        try:
            background = Plane(_numbers(bg, "normal", "background.normal", 3), _number(bg, "offset", "background.offset"))
        except ValidationError as exc:
            raise ValidationError(f"background: {exc}") from None
    return SceneSpec(prims, background)


def load_noise(text):
    doc = _load_json(text, "noise")
    _check_schema(doc, NOISE_SCHEMA, "noise")
    vals = {}
    for f in ("sigma", "dropout_rate", "outlier_rate", "outlier_magnitude"):
        if f in doc:
            vals[f] = float(_number(doc, f, f))
    if "seed" in doc:
        vals["seed"] = _integer(doc, "seed", "seed")
    return NoiseSpec(**vals)


def load_config(text):
    return PipelineConfig.from_dict(_load_json(text, "pipeline config"))
