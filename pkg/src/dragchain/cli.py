"""Command-line interface: reason over a scene, evaluate predictions,
export drag-condition files, serve the HTTP API.

Exit codes for ``reason``: 0 when validation passed, 3 when trajectories
were produced but validation failed, 1 on input errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any

from .dataset import load_index, stats
from .errors import DragchainError, ParseError
from .metrics import evaluate
from .model import Trajectory, canonical_dumps, drag_from_json, scene_from_json, trajectory_from_json
from .perception import make_backend
from .pipeline import PipelineConfig, run_pipeline

log = logging.getLogger("dragchain")

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_UNVALIDATED = 3

_CONFIG_ALIASES = {
    "k": "candidates_per_iteration",
    "K": "candidates_per_iteration",
    "max_iter": "max_iterations",
    "tau": "backward_tolerance",
    "frames": "frame_count",
    "seed": "rng_seed",
}


def config_from_dict(raw: dict[str, Any]) -> PipelineConfig:
    fields = PipelineConfig.__dataclass_fields__
    kwargs: dict[str, Any] = {}
    for key, value in raw.items():
        name = _CONFIG_ALIASES.get(key, key)
        if name not in fields:
            raise ParseError(f"unknown config key {key!r}")
        kwargs[name] = value
    return PipelineConfig(**kwargs)


def _load_json(path: str) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ParseError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc.msg}", source=path, offset=exc.pos) from None


def _build_config(args: argparse.Namespace) -> PipelineConfig:
    raw: dict[str, Any] = {}
    if args.config:
        loaded = _load_json(args.config)
        if not isinstance(loaded, dict):
            raise ParseError(f"{args.config}: config must be a JSON object")
        raw.update(loaded)
    for flag, key in (
        ("seed", "rng_seed"),
        ("frames", "frame_count"),
        ("tau", "backward_tolerance"),
        ("k", "candidates_per_iteration"),
        ("max_iter", "max_iterations"),
    ):
        value = getattr(args, flag)
        if value is not None:
            raw[key] = value
    return config_from_dict(raw)


def cmd_reason(args: argparse.Namespace) -> int:
    scene = scene_from_json(_load_json(args.scene))
    drag = drag_from_json(_load_json(args.drag))
    cfg = _build_config(args)
    backend = make_backend(args.backend) if args.backend else None
    log.info("reasoning over %s with %d-point drag", args.scene, len(drag.points.points))
    result = run_pipeline(scene, drag, backend=backend, cfg=cfg, image_ref=args.image_ref)
    print(canonical_dumps(result.as_dict()))
    return EXIT_OK if result.report.passed else EXIT_UNVALIDATED


def _read_trajectory_file(path: Path) -> tuple[list[Trajectory], str | None]:
    raw = json.loads(path.read_text())
    if isinstance(raw, list):
        return [trajectory_from_json(t) for t in raw], None
    if isinstance(raw, dict) and "trajectories" in raw:
        trajectories = [trajectory_from_json(t) for t in raw["trajectories"]]
        controlled = raw.get("controlled_id")
        return trajectories, (str(controlled) if controlled is not None else None)
    raise ParseError(f"{path}: expected a trajectory list or an object with 'trajectories'")


def _collect_trajectory_dir(root: Path) -> dict[str, tuple[list[Trajectory], str | None]]:
    out: dict[str, tuple[list[Trajectory], str | None]] = {}
    for path in sorted(root.glob("*.json")):
        try:
            out[path.stem] = _read_trajectory_file(path)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: {exc.msg}", source=str(path), offset=exc.pos) from None
    return out


def _collect_ground_truth(root: Path) -> dict[str, tuple[list[Trajectory], str | None]]:
    if (root / "index.json").exists():
        index = load_index(root)
        return {
            v.id: (list(v.trajectories), v.controlled_id or None) for v in index.videos
        }
    return _collect_trajectory_dir(root)


def cmd_evaluate(args: argparse.Namespace) -> int:
    pred = _collect_trajectory_dir(Path(args.pred))
    gt = _collect_ground_truth(Path(args.gt))
    shared = sorted(set(pred) & set(gt))
    if not shared:
        print("no overlapping video ids between prediction and ground truth", file=sys.stderr)
        return EXIT_INPUT_ERROR
    videos = {
        vid: (pred[vid][0], gt[vid][0], gt[vid][1])
        for vid in shared
    }
    print(canonical_dumps(evaluate(videos, mode=args.match)))
    return EXIT_OK


def cmd_export_drag(args: argparse.Namespace) -> int:
    raw = _load_json(args.result)
    if isinstance(raw, dict) and "trajectories" in raw:
        trajectories = [trajectory_from_json(t) for t in raw["trajectories"]]
    elif isinstance(raw, list):
        trajectories = [trajectory_from_json(t) for t in raw]
    else:
        raise ParseError(f"{args.result}: expected result JSON or a trajectory list")
    if args.format == "canonical":
        payload: Any = [
            {"object_id": t.object_id, "points": [p.as_list() for p in t.points]}
            for t in trajectories
        ]
    else:
        rows = [
            (frame, t.object_id, p.x, p.y)
            for t in trajectories
            for frame, p in enumerate(t.points)
        ]
        rows.sort(key=lambda r: (r[0], r[1]))
        payload = [[object_id, x, y] for _, object_id, x, y in rows]
    text = canonical_dumps(payload)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def cmd_stats(args: argparse.Namespace) -> int:
    index = load_index(args.root)
    print(canonical_dumps(stats(index)))
    return EXIT_OK


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .server import create_app

    app = create_app(default_backend=args.backend)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON file with pipeline configuration")
    parser.add_argument("--seed", type=int, default=None, help="candidate perturbation seed")
    parser.add_argument("--frames", type=int, default=None, help="output trajectory frame count")
    parser.add_argument("--tau", type=float, default=None, help="backward validation tolerance (px)")
    parser.add_argument("--k", type=int, default=None, help="candidates per iteration")
    parser.add_argument("--max-iter", dest="max_iter", type=int, default=None, help="reasoning iteration budget")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dragchain",
        description="Reason multi-object motion trajectories from a single drag.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_reason = sub.add_parser("reason", help="run the reasoning pipeline on a scene + drag")
    p_reason.add_argument("scene", help="scene JSON file")
    p_reason.add_argument("drag", help="drag JSON file")
    p_reason.add_argument(
        "--backend",
        help="perception backend, fixture:<path> or remote:<url> (default: scene annotations)",
    )
    p_reason.add_argument("--image-ref", dest="image_ref", default=None, help="image reference for remote backends")
    _add_config_flags(p_reason)
    p_reason.set_defaults(func=cmd_reason)

    p_eval = sub.add_parser("evaluate", help="score predicted trajectories against ground truth")
    p_eval.add_argument("pred", help="directory of per-video prediction JSON files")
    p_eval.add_argument("gt", help="directory of ground-truth files or an annotation root with index.json")
    p_eval.add_argument("--match", choices=["auto", "id", "spatial"], default="auto")
    p_eval.set_defaults(func=cmd_evaluate)

    p_export = sub.add_parser("export-drag", help="convert a result to a drag-condition file")
    p_export.add_argument("result", help="result JSON from the reason command")
    p_export.add_argument("--format", choices=["canonical", "flat"], default="canonical")
    p_export.add_argument("--out", default=None, help="output path (default: stdout)")
    p_export.set_defaults(func=cmd_export_drag)

    p_stats = sub.add_parser("stats", help="print dataset statistics for an annotation root")
    p_stats.add_argument("root")
    p_stats.set_defaults(func=cmd_stats)

    p_serve = sub.add_parser("serve", help="run the HTTP API")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8008)
    p_serve.add_argument("--backend", default=None, help="default perception backend for sessions")
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("CDRAG_LOG", "WARNING").upper())
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DragchainError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
