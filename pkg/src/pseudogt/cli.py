"""``pseudogt`` command line: flow, tag, eval, analyze, adapt.

Precedence for every parameter is: built-in default < ``--config`` JSON
document < explicit flag.  The config document may hold the sections
``flow``, ``tag``, ``adapt`` and ``eval``.  ``PSEUDOGT_WORKERS`` sets the
default worker count for ``eval``.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .adapt import AdaptConfig, select_adaptation_examples
from .evaluation import (
    EvalPolicy,
    erosion_dilation_analysis,
    evaluate_dataset,
    render_analysis,
    render_table,
)
from .flow import FlowParams, compute_flow, flow_magnitude
from .imaging import (
    FormatError,
    check_same_shape,
    ensure_parent,
    load_confidence,
    load_image,
    load_mask,
    save_image,
    save_mask,
    write_flo,
)
from .tagger import TagConfig, load_proposals, tag_from_flow

log = logging.getLogger("pseudogt")

WORKERS_ENV = "PSEUDOGT_WORKERS"
_IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".ppm", ".pgm"}


class CLIError(Exception):
    pass


def _flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def _add_dataclass_flags(parser, cls, dest_prefix: str):
    group = parser.add_argument_group(f"{dest_prefix} parameters")
    for f in dataclasses.fields(cls):
        default = f.default
        dest = f"{dest_prefix}__{f.name}"
        if isinstance(default, bool):
            group.add_argument(_flag(f.name), dest=dest, default=None,
                               action=argparse.BooleanOptionalAction,
                               help=f"(default: {default})")
        else:
            kind = float if isinstance(default, float) else int
            group.add_argument(_flag(f.name), dest=dest, type=kind, default=None,
                               help=f"(default: {default})")


def _build_config(cls, section: str, args, file_cfg: dict):
    values = dict(file_cfg.get(section, {}))
    unknown = set(values) - {f.name for f in dataclasses.fields(cls)}
    if unknown:
        raise CLIError(f"config section '{section}': unknown keys {sorted(unknown)}")
    for f in dataclasses.fields(cls):
        v = getattr(args, f"{section}__{f.name}", None)
        if v is not None:
            values[f.name] = v
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise CLIError(f"invalid {section} parameters: {exc}") from exc


def _read_config(path) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise CLIError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise CLIError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise CLIError(f"{path}: config must be a JSON object")
    return doc


def _require_file(path, what: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise CLIError(f"{what} not found: {p}")
    return p


def _write_json(doc, path) -> None:
    ensure_parent(path)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _magnitude_image(flow) -> np.ndarray:
    mag = flow_magnitude(flow)
    peak = mag.max()
    return mag / peak if peak > 0 else mag


# ---------------------------------------------------------------------------
# subcommands

def cmd_flow(args, file_cfg) -> int:
    params = _build_config(FlowParams, "flow", args, file_cfg)
    first = load_image(_require_file(args.first, "first frame"))
    second = load_image(_require_file(args.second, "second frame"))
    check_same_shape(first, second, what="frames")
    flow = compute_flow(first, second, params)
    ensure_parent(args.out)
    write_flo(flow, args.out)
    if args.magnitude:
        ensure_parent(args.magnitude)
        save_image(_magnitude_image(flow), args.magnitude)
    log.info("wrote %s", args.out)
    return 0


def _sequence_frames(seq_dir: Path) -> list[Path]:
    if not seq_dir.is_dir():
        raise CLIError(f"sequence directory not found: {seq_dir}")
    root = seq_dir / "frames" if (seq_dir / "frames").is_dir() else seq_dir
    return sorted(p for p in root.iterdir() if p.suffix.lower() in _IMAGE_SUFFIXES)


def cmd_tag(args, file_cfg) -> int:
    flow_params = _build_config(FlowParams, "flow", args, file_cfg)
    tag_cfg = _build_config(TagConfig, "tag", args, file_cfg)
    frames = _sequence_frames(Path(args.sequence_dir))
    k = args.frame
    if len(frames) < 2:
        raise CLIError(f"{args.sequence_dir}: need at least 2 frames, found {len(frames)}")
    if not 0 <= k < len(frames) - 1:
        raise CLIError(f"--frame {k} out of range for {len(frames)} frames")
    first = load_image(frames[k])
    second = load_image(frames[k + 1])
    check_same_shape(first, second, what="frames")

    proposals = []
    if args.proposals is not None:
        ppath = Path(args.proposals)
        if ppath.is_dir():
            ppath = ppath / "proposals.json"
        _require_file(ppath, "proposals manifest")
        proposals = load_proposals(ppath)

    flow = compute_flow(first, second, flow_params)
    result = tag_from_flow(flow, proposals, tag_cfg)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_mask(result.mask, out / "pseudo_gt.png")
    save_mask(result.flow_mask, out / "flow_mask.png")
    write_flo(flow, out / "flow.flo")
    provenance = result.provenance()
    provenance.update({
        "frames": [frames[k].name, frames[k + 1].name],
        "frame_index": k,
        "n_proposals": len(proposals),
        "flow_params": flow_params.to_dict(),
    })
    _write_json(provenance, out / "provenance.json")
    if result.status != "ok":
        log.warning("%s: %s", args.sequence_dir, result.status)
    print(f"source={result.source} selected={','.join(result.selected_ids) or '-'} status={result.status}")
    return 0


def cmd_eval(args, file_cfg) -> int:
    policy = _build_config(EvalPolicy, "eval", args, file_cfg)
    workers = args.workers
    if workers is None:
        workers = int(os.environ.get(WORKERS_ENV, "1"))
    _require_file(args.manifest, "manifest")
    report = evaluate_dataset(args.manifest, policy, workers=max(1, workers))
    ensure_parent(args.out)
    Path(args.out).write_text(report.to_json())
    table = render_table(report)
    if args.table:
        ensure_parent(args.table)
        Path(args.table).write_text(table)
    sys.stdout.write(table)
    return 0


def _parse_radii(text: str) -> list[int]:
    parts = [p.strip() for p in text.split(",") if p.strip()]
    try:
        radii = [int(p) for p in parts]
    except ValueError as exc:
        raise CLIError(f"bad --radii value {text!r}") from exc
    if any(r < 1 for r in radii):
        raise CLIError("radii must be >= 1")
    return radii


def cmd_analyze(args, file_cfg) -> int:
    radii = _parse_radii(args.radii)
    pseudo = load_mask(_require_file(args.pseudo_gt, "pseudo ground truth"))
    gt = load_mask(_require_file(args.ground_truth, "ground truth"))
    rows = erosion_dilation_analysis(pseudo, gt, radii)
    _write_json({"radii": radii, "structuring_element": "disk", "rows": rows}, args.out)
    table = render_analysis(rows)
    if args.table:
        ensure_parent(args.table)
        Path(args.table).write_text(table)
    sys.stdout.write(table)
    return 0


def cmd_adapt(args, file_cfg) -> int:
    cfg = _build_config(AdaptConfig, "adapt", args, file_cfg)
    conf = load_confidence(_require_file(args.confidence, "confidence map"))
    last = load_mask(_require_file(args.last_mask, "last mask"))
    ex = select_adaptation_examples(conf, last, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_mask(ex.positives, out / "positives.png")
    save_mask(ex.negatives, out / "negatives.png")
    _write_json({
        "adapt_config": cfg.to_dict(),
        "positives": int(ex.positives.sum()),
        "negatives": int(ex.negatives.sum()),
        "dontcare": int(ex.dontcare.sum()),
    }, out / "examples.json")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pseudogt", description=__doc__.splitlines()[0])
    ap.add_argument("--config", help="JSON document overriding defaults (flags win)")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("flow", help="estimate optical flow between two frames")
    p.add_argument("first")
    p.add_argument("second")
    p.add_argument("--out", required=True, help="output .flo path")
    p.add_argument("--magnitude", help="optional normalised magnitude PNG")
    _add_dataclass_flags(p, FlowParams, "flow")
    p.set_defaults(func=cmd_flow)

    p = sub.add_parser("tag", help="build the pseudo ground truth for a frame pair")
    p.add_argument("sequence_dir")
    p.add_argument("--proposals", help="proposals.json or the directory holding it")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--frame", type=int, default=0, help="tag frame K using frames K and K+1")
    _add_dataclass_flags(p, FlowParams, "flow")
    _add_dataclass_flags(p, TagConfig, "tag")
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("eval", help="score predicted masks against ground truth")
    p.add_argument("manifest")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--table", help="also write the rendered table here")
    p.add_argument("--workers", type=int, default=None, help=f"default from ${WORKERS_ENV} or 1")
    _add_dataclass_flags(p, EvalPolicy, "eval")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("analyze", help="erode/dilate the pseudo ground truth and rescore")
    p.add_argument("pseudo_gt")
    p.add_argument("ground_truth")
    p.add_argument("--radii", default="5", help="comma-separated radii; empty for baseline only")
    p.add_argument("--out", required=True)
    p.add_argument("--table")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("adapt", help="harvest online-adaptation examples")
    p.add_argument("confidence")
    p.add_argument("last_mask")
    p.add_argument("--out", required=True, help="output directory")
    _add_dataclass_flags(p, AdaptConfig, "adapt")
    p.set_defaults(func=cmd_adapt)
    return ap


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(message)s")
    try:
        return args.func(args, _read_config(args.config))
    except (CLIError, FormatError, ValueError, OSError) as exc:
        print(f"pseudogt {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
