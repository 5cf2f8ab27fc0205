"""Command-line front end: synthesis, reconstruction and numerical studies.

Scene configurations are YAML documents::

    shape: {kind: kite}                       # or spline (radii, center) / circle (radius, center)
    receivers: {radius: 6, count: 8}          # or {radius, angles} or a list of points
    incident: {kind: example1}                # or bump-plane / point-sources
    time: {T: 20, Nt: 1024, stages: 2}
    space: {Ns: 256}
    synth: {Nt: 2048, Ns: 512}                # data grid, defaults to twice the time/space grid
    inverse:
      alpha1: 0.02
      alpha2: 0.5
      initial: {radius: 0.5, center: [-1, -1.5], Q: 40}
      noise: {delta: 0.0, seed: 0}

Exit codes: 0 success (or tolerance stop), 2 configuration or input error,
3 numerical failure, 4 maximum-iteration stop.
"""

import argparse
import csv
import hashlib
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from . import __version__, inverse, timedomain
from .geometry import SplineCurve, SplineStarShape, circle_curve, kite_curve
from .incident import IncidentWaveSpec, Pulse, example1_wave, example3_wave
from .timedomain import Scene, TimeSignals, make_grid

log = logging.getLogger("tdscat")

FORMAT_VERSION = 1

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_MAXITER = 0, 2, 3, 4

# large grids: synthesis 2000/20000, inversion 1000/5000
FULL_SCALE = {"synth": (2000, 20000), "inverse": (1000, 5000)}


class ConfigError(ValueError):
    """Invalid configuration or input file; the message names the location."""


# ------------------------------------------------------------------ YAML with line anchors


def _plain(node, path, lines):
    """Convert a composed YAML node to Python objects, recording key lines."""
    lines[path] = node.start_mark.line + 1
    if isinstance(node, yaml.MappingNode):
        out = {}
        for knode, vnode in node.value:
            key = str(yaml.safe_load(yaml.serialize(knode)))
            out[key] = _plain(vnode, f"{path}.{key}" if path else key, lines)
        return out
    if isinstance(node, yaml.SequenceNode):
        return [_plain(v, f"{path}[{i}]", lines) for i, v in enumerate(node.value)]
    return yaml.safe_load(yaml.serialize(node))


class _Doc:
    """Nested mapping access with ``file:line`` anchored errors."""

    def __init__(self, data, lines, source):
        self.data, self.lines, self.source = data, lines, source

    def where(self, path):
        key = path
        while key and key not in self.lines:
            key = key.rpartition(".")[0]
        line = self.lines.get(key, 1)
        return "command line" if line is None else f"{self.source}:{line}"

    def error(self, path, msg):
        return ConfigError(f"{self.where(path)}: {path}: {msg}")

    def get(self, path, default=None):
        node = self.data
        for part in path.split("."):
            if not isinstance(node, dict) or part not in node:
                return default
            node = node[part]
        return node

    def number(self, path, default=None, kind=float, positive=False, minimum=None):
        val = self.get(path, default)
        if val is None:
            raise self.error(path, "required value is missing")
        try:
            if kind is int and (isinstance(val, bool) or float(val) != int(val)):
                raise ValueError
            out = kind(val)
        except (TypeError, ValueError):
            raise self.error(path, f"expected {kind.__name__}, got {val!r}") from None
        if not np.isfinite(out):
            raise self.error(path, "must be finite")
        if positive and not out > 0:
            raise self.error(path, f"must be positive, got {out}")
        if minimum is not None and out < minimum:
            raise self.error(path, f"must be at least {minimum}, got {out}")
        return out

    def points(self, path, value=None):
        val = self.get(path) if value is None else value
        try:
            arr = np.asarray(val, dtype=float)
        except (TypeError, ValueError):
            raise self.error(path, "expected a list of [x, y] points") from None
        arr = np.atleast_2d(arr)
        if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] == 0 or not np.all(np.isfinite(arr)):
            raise self.error(path, "expected a list of [x, y] points")
        return arr


def load_document(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read configuration ({exc.strerror})") from None
    try:
        node = yaml.compose(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: YAML error: {exc}") from None
    lines = {}
    data = {} if node is None else _plain(node, "", lines)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}:1: top level must be a mapping")
    doc = _Doc(data, lines, str(path))
    version = data.get("format_version", FORMAT_VERSION)
    if version != FORMAT_VERSION:
        raise doc.error("format_version", f"unsupported version {version!r}")
    return doc


# ------------------------------------------------------------------ scene configuration


@dataclass
class SceneConfig:
    curve: object
    shape: SplineStarShape
    receivers: np.ndarray
    incident: IncidentWaveSpec
    T: float
    Nt: int
    stages: int
    Ns: int
    synth_Nt: int
    synth_Ns: int
    gn: inverse.GNConfig
    initial: SplineStarShape
    noise_delta: float
    noise_seed: int
    raw: dict = field(repr=False, default_factory=dict)
    doc: _Doc = field(repr=False, default=None)

    def scene(self, check=True) -> Scene:
        return Scene(self.curve, self.receivers, self.incident, self.T, shape=self.shape, check=check)

    def scene_hash(self):
        blob = json.dumps(_canonical(self.raw), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


def _canonical(obj):
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _canonical(obj.tolist())
    return obj


def _shape(doc, path):
    kind = doc.get(f"{path}.kind", "kite")
    center = doc.points(f"{path}.center", doc.get(f"{path}.center", [0.0, 0.0]))[0]
    if kind == "kite":
        if np.any(center != 0):
            raise doc.error(f"{path}.center", "the kite is fixed at the origin")
        return kite_curve(), None
    if kind == "circle":
        r = doc.number(f"{path}.radius", 1.0, positive=True)
        Q = doc.get(f"{path}.Q")
        if Q is None:
            return circle_curve(r, center), None
        shape = SplineStarShape.circle(r, center, Q=doc.number(f"{path}.Q", kind=int, minimum=4))
        return SplineCurve(shape), shape
    if kind == "spline":
        radii = doc.get(f"{path}.radii")
        try:
            shape = SplineStarShape(np.asarray(radii, dtype=float), center)
        except (TypeError, ValueError) as exc:
            raise doc.error(f"{path}.radii", str(exc)) from None
        return SplineCurve(shape), shape
    raise doc.error(f"{path}.kind", f"unknown shape kind {kind!r} (kite, circle, spline)")


def _receivers(doc):
    spec = doc.get("receivers", {"radius": 6.0, "count": 8})
    if isinstance(spec, dict):
        r = doc.number("receivers.radius", 6.0, positive=True)
        if "angles" in spec:
            ang = np.asarray(doc.get("receivers.angles"), dtype=float).ravel()
        else:
            count = doc.number("receivers.count", 8, kind=int, minimum=1)
            ang = np.arange(count) * np.pi / 4 if count == 8 else 2 * np.pi * np.arange(count) / count
        if ang.size == 0:
            raise doc.error("receivers", "no receivers given")
        return np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)
    return doc.points("receivers")


def _incident(doc):
    kind = doc.get("incident.kind", "example1")
    try:
        if kind == "example1":
            return example1_wave()
        if kind == "bump-plane":
            pulses = [Pulse(*p) for p in doc.get("incident.pulses", [])]
            return IncidentWaveSpec("bump-plane", direction=tuple(doc.get("incident.direction", (1.0, 0.0))), pulses=tuple(pulses))
        if kind == "point-sources":
            return example3_wave(doc.points("incident.sources"))
    except (TypeError, ValueError) as exc:
        raise doc.error("incident", str(exc)) from None
    raise doc.error("incident.kind", f"unknown incident kind {kind!r} (example1, bump-plane, point-sources)")


def load_config(path, overrides=None) -> SceneConfig:
    """Parse a scene configuration; ``overrides`` maps dotted keys to values."""
    doc = load_document(path)
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        node = doc.data
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise doc.error(key, "cannot override a non-mapping entry")
        node[parts[-1]] = val
        doc.lines[key] = None
    curve, shape = _shape(doc, "shape")
    receivers = _receivers(doc)
    inc = _incident(doc)
    T = doc.number("time.T", 20.0, positive=True)
    Nt = doc.number("time.Nt", 1024, kind=int, minimum=1)
    stages = doc.number("time.stages", 2, kind=int, minimum=1)
    if stages > 3:
        raise doc.error("time.stages", "Radau IIA is available for 1, 2 or 3 stages")
    Ns = doc.number("space.Ns", 256, kind=int, minimum=8)
    synth_Nt = doc.number("synth.Nt", 2 * Nt, kind=int, minimum=1)
    synth_Ns = doc.number("synth.Ns", 2 * Ns, kind=int, minimum=8)
    try:
        gn = inverse.GNConfig(
            alpha1=doc.number("inverse.alpha1", 0.02, minimum=0.0),
            alpha2=doc.number("inverse.alpha2", 0.5, minimum=0.0),
            tol=doc.number("inverse.tol", 1e-3, positive=True),
            max_iter=doc.number("inverse.max_iter", 50, kind=int, minimum=1),
        )
    except ValueError as exc:
        raise doc.error("inverse", str(exc)) from None
    init_r = doc.number("inverse.initial.radius", 0.5, positive=True)
    init_c = doc.points("inverse.initial.center", doc.get("inverse.initial.center", [-1.0, -1.5]))[0]
    init_Q = doc.number("inverse.initial.Q", 40, kind=int, minimum=4)
    cfg = SceneConfig(
        curve=curve,
        shape=shape,
        receivers=receivers,
        incident=inc,
        T=T,
        Nt=Nt,
        stages=stages,
        Ns=Ns,
        synth_Nt=synth_Nt,
        synth_Ns=synth_Ns,
        gn=gn,
        initial=SplineStarShape.circle(init_r, init_c, Q=init_Q),
        noise_delta=doc.number("inverse.noise.delta", 0.0, minimum=0.0),
        noise_seed=doc.number("inverse.noise.seed", 0, kind=int, minimum=0),
        raw=doc.data,
        doc=doc,
    )
    try:
        cfg.scene()
    except ValueError as exc:
        raise ConfigError(f"{doc.source}: invalid scene: {exc}") from None
    return cfg


# ------------------------------------------------------------------ file formats


def _fmt(x):
    return repr(float(x))


def write_json(path, obj):
    obj = dict(obj)
    obj.setdefault("format_version", FORMAT_VERSION)
    Path(path).write_text(json.dumps(_canonical(obj), sort_keys=True, indent=2) + "\n")


def read_json(path):
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: cannot read JSON ({exc})") from None
    if obj.get("format_version") != FORMAT_VERSION:
        raise ConfigError(f"{path}: unsupported format_version {obj.get('format_version')!r}")
    return obj


def write_csv(path, header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    Path(path).write_text(buf.getvalue())


def sidecar_path(path):
    return Path(path).with_suffix(".json")


def write_signals(path, signals: TimeSignals, meta):
    header = ["t"] + [f"z{j + 1}" for j in range(signals.M)]
    write_csv(path, header, np.column_stack([signals.times, signals.values.T]))
    write_json(sidecar_path(path), dict(meta, tau=signals.tau, N=signals.N, M=signals.M))


def read_signals(path):
    path = Path(path)
    meta = read_json(sidecar_path(path))
    try:
        raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"{path}: cannot read signals ({exc})") from None
    if raw.shape != (meta["N"], meta["M"] + 1):
        raise ConfigError(f"{path}: table shape {raw.shape} disagrees with its metadata")
    return TimeSignals(float(meta["tau"]), raw[:, 1:].T.copy()), meta


def resample_to_grid(data: TimeSignals, meta, cfg: SceneConfig) -> TimeSignals:
    """Restrict measured node values to the reconstruction time grid."""
    if data.M != len(cfg.receivers):
        raise ConfigError(f"data have {data.M} receivers, configuration has {len(cfg.receivers)}")
    if not np.isclose(meta.get("T", data.tau * data.N), cfg.T, rtol=1e-12):
        raise ConfigError(f"data final time {meta.get('T')} differs from configured T = {cfg.T}")
    if "receivers" in meta and not np.allclose(np.asarray(meta["receivers"]), cfg.receivers, atol=1e-12):
        raise ConfigError("data receiver positions differ from the configuration")
    if data.N % cfg.Nt:
        raise ConfigError(f"data step count {data.N} is not a multiple of Nt = {cfg.Nt}")
    k = data.N // cfg.Nt
    return TimeSignals(data.tau * k, data.values[:, k - 1 :: k].copy())


# ------------------------------------------------------------------ commands


def _overrides(args):
    return {
        "time.Nt": getattr(args, "nt", None),
        "space.Ns": getattr(args, "ns", None),
        "time.stages": getattr(args, "stages", None),
        "inverse.alpha1": getattr(args, "alpha1", None),
        "inverse.noise.delta": getattr(args, "noise_delta", None),
        "inverse.noise.seed": getattr(args, "seed", None),
    }


def _config(args, synth=False):
    ov = _overrides(args)
    if synth:
        # on the synthesis command the grid flags address the data grid
        ov["synth.Nt"], ov["synth.Ns"] = ov.pop("time.Nt"), ov.pop("space.Ns")
    if getattr(args, "full_scale", False):
        (ov["synth.Ns"], ov["synth.Nt"]) = FULL_SCALE["synth"]
        (ov["space.Ns"], ov["time.Nt"]) = FULL_SCALE["inverse"]
    return load_config(args.config, ov)


def _out_dir(path):
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def cmd_synth(args):
    cfg = _config(args, synth=True)
    grid = make_grid(cfg.stages, cfg.T, cfg.synth_Nt)
    sig = timedomain.forward(cfg.scene(), cfg.synth_Ns, grid, workers=args.workers)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    meta = {
        "T": cfg.T,
        "m": cfg.stages,
        "Ns": cfg.synth_Ns,
        "receivers": cfg.receivers,
        "scene_hash": cfg.scene_hash(),
        "version": __version__,
    }
    write_signals(out, sig, meta)
    log.info("wrote %s (%d steps, %d receivers)", out, sig.N, sig.M)
    return EXIT_OK


def cmd_reconstruct(args):
    cfg = _config(args)
    raw, meta = read_signals(args.data)
    data = resample_to_grid(raw, meta, cfg)
    data = inverse.add_noise(data, cfg.noise_delta, cfg.noise_seed)
    ctx = inverse.InversionContext(cfg.receivers, cfg.incident, make_grid(cfg.stages, cfg.T, cfg.Nt), cfg.Ns, args.workers)
    out = _out_dir(args.out)
    trace = inverse.gauss_newton(cfg.initial, data, cfg.gn, ctx)
    lines = [json.dumps(dict(r.as_dict(), format_version=FORMAT_VERSION), sort_keys=True) for r in trace.records]
    (out / "trace.jsonl").write_text("\n".join(lines) + "\n")
    final = trace.final_shape
    write_json(
        out / "final_shape.json",
        {
            "radii": final.radii,
            "center": final.center,
            "Q": final.Q,
            "iterations": trace.iterations,
            "reason": trace.reason,
            "f": trace.final.f,
            "f_reg": trace.final.f_reg,
            "noise_delta": cfg.noise_delta,
            "noise_seed": cfg.noise_seed,
        },
    )
    write_csv(out / "final_shape.csv", ["x", "y"], SplineCurve(final).polyline(1024))
    log.info("%s after %d iterations, f = %.3e", trace.reason, trace.iterations, trace.final.f)
    if trace.reason == "tolerance":
        return EXIT_OK
    if trace.reason == "max_iterations":
        return EXIT_MAXITER
    return EXIT_NUMERIC


def convergence_table(scene: Scene, m, Nt, Ns, levels=4, reference=16, receiver=0, workers=None):
    """Errors at one receiver for ``Nt, 2 Nt, ...`` against ``reference * Nt`` steps.

    The error is the largest node deviation from the reference signal.
    Returns rows ``(N, tau, error, eoc)`` with ``eoc`` NaN on the first row.
    """
    if reference < 2 ** (levels - 1) or reference & (reference - 1):
        raise ValueError("reference factor must be a power of two beyond the finest level")
    sub = Scene(scene.curve, scene.receivers[receiver : receiver + 1], scene.incident, scene.T, check=False)
    ref = timedomain.forward(sub, Ns, make_grid(m, scene.T, reference * Nt), workers=workers).values[0]
    rows, prev = [], None
    for k in range(levels):
        N = Nt * 2**k
        u = timedomain.forward(sub, Ns, make_grid(m, scene.T, N), workers=workers).values[0]
        step = reference * Nt // N
        err = float(np.abs(u - ref[step - 1 :: step]).max())
        eoc = float("nan") if prev is None else float(np.log2(prev / err))
        rows.append((N, scene.T / N, err, eoc))
        prev = err
    return rows


def cmd_convergence(args):
    cfg = _config(args)
    rows = convergence_table(
        cfg.scene(), cfg.stages, cfg.Nt, cfg.Ns, levels=args.levels, reference=args.reference, receiver=args.receiver, workers=args.workers
    )
    write_csv(args.out, ["N", "tau", "error", "eoc"], rows)
    return EXIT_OK


TAYLOR_EPS = (4e-2, 2e-2, 1e-2, 5e-3)


def taylor_table(scene: Scene, Ns, grid, direction, eps=TAYLOR_EPS, workers=None):
    """Remainders ``||F(p + eps h) - F(p) - eps F'(p) h||`` for a shape direction."""
    if scene.shape is None:
        raise ValueError("the Taylor test needs a spline shape")
    direction = np.asarray(direction, dtype=float)
    jac = timedomain.shape_jacobian(scene, Ns, grid, workers=workers)
    lin = jac.apply(direction)
    rows = []
    for e in eps:
        moved = SplineStarShape.from_params(scene.shape.params() + e * direction)
        fwd = timedomain.forward(scene.with_curve(SplineCurve(moved), moved), Ns, grid, workers=workers)
        rows.append((e, (fwd - jac.forward - lin.scaled(e)).norm()))
    return [(e, r, float("nan") if k == 0 else rows[k - 1][1] / r) for k, (e, r) in enumerate(rows)]


def cmd_taylor(args):
    cfg = _config(args)
    if cfg.shape is None:
        raise ConfigError(f"{args.config}: the Taylor test needs shape.kind spline (or circle with Q)")
    rng = np.random.default_rng(cfg.noise_seed if args.seed is None else args.seed)
    direction = rng.standard_normal(cfg.shape.Q + 2)
    direction /= np.linalg.norm(direction)
    grid = make_grid(cfg.stages, cfg.T, cfg.Nt)
    rows = taylor_table(cfg.scene(), cfg.Ns, grid, direction, workers=args.workers)
    write_csv(args.out, ["eps", "remainder", "ratio"], rows)
    return EXIT_OK


def _probe_grid(doc, args):
    box = args.box if args.box is not None else doc.get("snapshots.box", [-8.0, 8.0, -8.0, 8.0])
    n = args.grid if args.grid is not None else doc.get("snapshots.n", 81)
    try:
        x0, x1, y0, y1 = map(float, box)
        n = int(n)
    except (TypeError, ValueError):
        raise doc.error("snapshots", "box must be [xmin, xmax, ymin, ymax] and n an integer") from None
    if n < 2 or not (x1 > x0 and y1 > y0):
        raise doc.error("snapshots", "empty probe grid")
    X, Y = np.meshgrid(np.linspace(x0, x1, n), np.linspace(y0, y1, n))
    return np.column_stack([X.ravel(), Y.ravel()])


def admissible_probes(curve, Ns, probes):
    """Mask of probes outside the obstacle and its near-boundary exclusion zone."""
    from shapely import contains_xy
    from shapely.geometry import Polygon

    smp = curve.sample(Ns)
    inside = contains_xy(Polygon(curve.polyline(4 * Ns)).buffer(0), probes[:, 0], probes[:, 1])
    dist = np.hypot(probes[:, None, 0] - smp.points[None, :, 0], probes[:, None, 1] - smp.points[None, :, 1]).min(axis=1)
    return ~inside & (dist > 2.0 * smp.weights.max())


def cmd_snapshots(args):
    cfg = _config(args)
    scene = cfg.scene()
    grid = make_grid(cfg.stages, cfg.T, cfg.Nt)
    explicit = cfg.doc.get("snapshots.probes")
    probes = cfg.doc.points("snapshots.probes") if explicit is not None else _probe_grid(cfg.doc, args)
    ok = admissible_probes(cfg.curve, cfg.Ns, probes)
    if explicit is not None and not ok.all():
        bad = ", ".join(f"({x:g}, {y:g})" for x, y in probes[~ok])
        raise ConfigError(f"{cfg.doc.where('snapshots.probes')}: probes inside the obstacle or its exclusion zone: {bad}")
    times = args.times if args.times is not None else cfg.doc.get("snapshots.times", [cfg.T / 2, cfg.T])
    idx = np.rint(np.asarray(times, dtype=float) / grid.tau).astype(int)
    if np.any(idx < 0) or np.any(idx > grid.N):
        raise ConfigError(f"snapshot times must lie in [0, {cfg.T}]")
    vals = np.full((len(idx), len(probes)), np.nan)
    if ok.any():
        vals[:, ok] = timedomain.field_snapshots(scene, probes[ok], idx, cfg.Ns, grid, total=args.total, workers=args.workers)
    out = _out_dir(args.out)
    files = []
    for k, n in enumerate(idx):
        name = f"snapshot_{n:06d}.csv"
        write_csv(out / name, ["x", "y", "u"], np.column_stack([probes, vals[k]]))
        files.append({"file": name, "node": int(n), "t": float(n * grid.tau)})
    write_json(out / "snapshots.json", {"files": files, "total": bool(args.total), "excluded": int((~ok).sum()), "scene_hash": cfg.scene_hash()})
    return EXIT_OK


# ------------------------------------------------------------------ entry point


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="scene configuration (YAML)")
    common.add_argument("--nt", type=int, help="number of time steps")
    common.add_argument("--ns", type=int, help="number of boundary collocation points")
    common.add_argument("--stages", type=int, help="Radau IIA stages (1, 2 or 3)")
    common.add_argument("--alpha1", type=float, help="curvature penalty weight")
    common.add_argument("--noise-delta", type=float, help="relative noise level")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--workers", type=int, help="parallel frequency solves (default TDSCAT_WORKERS or 1)")
    common.add_argument("--full-scale", action="store_true", help="use the large grids (synthesis 2000/20000, inversion 1000/5000)")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="tdscat", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", parents=[common], help="synthesize receiver signals")
    s.add_argument("--out", required=True, help="output CSV (metadata goes next to it as .json)")
    s.set_defaults(func=cmd_synth)

    r = sub.add_parser("reconstruct", parents=[common], help="Gauss-Newton shape reconstruction")
    r.add_argument("data", help="measured signals CSV written by synth")
    r.add_argument("--out", required=True, help="output directory")
    r.set_defaults(func=cmd_reconstruct)

    c = sub.add_parser("convergence", parents=[common], help="temporal convergence table")
    c.add_argument("--out", required=True)
    c.add_argument("--levels", type=int, default=4)
    c.add_argument("--reference", type=int, default=16, help="reference refinement factor relative to --nt")
    c.add_argument("--receiver", type=int, default=0)
    c.set_defaults(func=cmd_convergence)

    t = sub.add_parser("taylor", parents=[common], help="Taylor remainder table of the domain derivative")
    t.add_argument("--out", required=True)
    t.set_defaults(func=cmd_taylor)

    n = sub.add_parser("snapshots", parents=[common], help="field values on a probe grid")
    n.add_argument("--out", required=True, help="output directory")
    n.add_argument("--times", type=float, nargs="+")
    n.add_argument("--grid", type=int, help="probe points per axis")
    n.add_argument("--box", type=float, nargs=4, metavar=("XMIN", "XMAX", "YMIN", "YMAX"))
    n.add_argument("--total", action="store_true", help="add the incident field")
    n.set_defaults(func=cmd_snapshots)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.workers is not None and args.workers < 1:
        print("error: --workers must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (np.linalg.LinAlgError, FloatingPointError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
