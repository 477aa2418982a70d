"""Command line entry points.

Subcommands: workspace-report, render, run, analyze, serve, device-test.
Any engine error exits nonzero with the error code and message on stderr.
"""

import argparse
import glob
import json
import os
import sys
import time

from .config import load_config
from .errors import DeltaPadError, GeometryInfeasible
from .experiment import (
    SessionSpec,
    analyze_sessions,
    create_session,
    load_session,
    next_stimulus,
    record_response,
    save_session,
    summarize,
)
from .geometry import workspace_report
from .patterns import CONTACT_IDS, STRETCH_DIRECTIONS
from .playback import pulses_for_pose
from .protocol import encode_frame
from .simulator import (
    FingerPadModel,
    SimTransport,
    VirtualDevice,
    default_contact_responder,
    default_stretch_responder,
    perfect_responder,
    responder_rng,
    simulate_trial,
    subject_ability,
    synthetic_response,
)
from .trajectory import render_contact_trial, render_stretch_trial, write_csv
from .transport import SerialTransport, send_frame


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2))


def _render_trial(mode: str, pattern: str, cfg, force: float = 1.0):
    if mode == "contact":
        return render_contact_trial(pattern, cfg.render, cfg.geometry,
                                    cfg.workspace, cfg.layout, force=force)
    return render_stretch_trial(pattern, cfg.render, cfg.geometry,
                                cfg.workspace, cfg.layout, normal_force=force)


def cmd_workspace_report(args) -> int:
    cfg = load_config(args.config)
    try:
        report = workspace_report(cfg.geometry, cfg.workspace, step=args.step)
    except GeometryInfeasible as exc:
        _print_json(exc.report)
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 2
    _print_json(report)
    return 0


def cmd_render(args) -> int:
    cfg = load_config(args.config)
    valid = CONTACT_IDS if args.mode == "contact" else STRETCH_DIRECTIONS
    if args.pattern not in valid:
        print(f"error: pattern {args.pattern!r} not in {valid}", file=sys.stderr)
        return 2
    traj = _render_trial(args.mode, args.pattern, cfg, force=args.force)
    out = args.out or f"{args.mode}_{args.pattern}.csv"
    write_csv(traj, out)
    print(f"wrote {len(traj.waypoints)} waypoints "
          f"({traj.total_duration:.2f} s) to {out}")
    return 0


def _open_playback(device: str, cfg):
    """Returns (transport, virtual_device_or_None) for a device string."""
    if device == "sim":
        hover = (0.0, 0.0, cfg.layout.contact_plane_z - cfg.render.hover_height)
        vdev = VirtualDevice.at_pose(cfg.geometry, hover, calibration=cfg.servo)
        return SimTransport(vdev, dt=cfg.render.dt), vdev
    if device.startswith("serial:"):
        return SerialTransport(device.split(":", 1)[1]), None
    if device == "none":
        return None, None
    raise ValueError(f"unknown device {device!r} (sim, none, serial:<path>)")


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    spec = SessionSpec(mode=args.mode, subject_id=args.subject,
                       rng_seed=args.seed, repetitions=args.repetitions)
    if args.responder == "perfect":
        responder = perfect_responder(args.mode)
    elif args.mode == "contact":
        responder = default_contact_responder()
    else:
        responder = default_stretch_responder()

    transport, vdev = _open_playback(args.device, cfg)
    pad = cfg.pad
    session = create_session(spec)
    rng = responder_rng(spec.rng_seed, spec.subject_id)
    ability = subject_ability(rng) if responder.subject_spread else 0
    realtime = args.device.startswith("serial:")
    try:
        for _ in range(len(session.sequence)):
            idx, _stim = next_stimulus(session, layout=cfg.layout)
            pattern = session.sequence[idx]
            traj = _render_trial(args.mode, pattern, cfg,
                                 force=spec.force_calibration)
            if vdev is not None:
                simulate_trial(traj, vdev, pad, cfg.render)
            elif transport is not None:
                for i, wp in enumerate(traj.waypoints):
                    pulses = pulses_for_pose(cfg.geometry, cfg.servo, wp.pose)
                    send_frame(transport, encode_frame(pulses,
                                                       wp.vibration_duty,
                                                       i % 256))
                    if realtime:
                        time.sleep(cfg.render.dt)
            answer, confidence = synthetic_response(responder, pattern, rng,
                                                    ability)
            record_response(session, idx, answer, confidence)
            if not args.quiet:
                print(f"trial {idx:3d}: {pattern:>2s} -> {answer:>2s} "
                      f"(confidence {confidence})")
    finally:
        if transport is not None:
            transport.close()

    os.makedirs(args.out, exist_ok=True)
    path = os.path.join(args.out, f"{args.subject}_{args.mode}_{args.seed}.json")
    save_session(session, path)
    report = summarize([session])
    report["session_file"] = path
    _print_json(report)
    return 0


def cmd_analyze(args) -> int:
    paths = sorted(glob.glob(os.path.join(args.dir, "*.json")))
    sessions = []
    for p in paths:
        try:
            s = load_session(p)
        except (ValueError, KeyError, TypeError, json.JSONDecodeError):
            continue  # skip non-session JSON
        if args.mode and s.spec.mode != args.mode:
            continue
        sessions.append(s)
    if not sessions:
        print(f"error: no session files under {args.dir}", file=sys.stderr)
        return 2
    analysis = analyze_sessions(sessions)
    if args.out:
        with open(args.out, "w") as fh:
            json.dump(analysis, fh, indent=2)
        print(f"wrote {args.out}")
    else:
        _print_json(analysis)
    return 0


def cmd_serve(args) -> int:
    import uvicorn
    from dataclasses import replace

    from .config import AppConfig
    from .service import create_app

    cfg = load_config(args.config)
    svc = cfg.service
    if args.port is not None:
        svc = replace(svc, port=args.port)
    if args.host is not None:
        svc = replace(svc, host=args.host)
    if args.data_dir is not None:
        svc = replace(svc, data_dir=args.data_dir)
    if args.device is not None:
        svc = replace(svc, backend=args.device)
    cfg = replace(cfg, service=svc)
    app = create_app(cfg, realtime=not args.no_realtime)
    uvicorn.run(app, host=cfg.service.host, port=cfg.service.port,
                log_level="info")
    return 0


def cmd_device_test(args) -> int:
    cfg = load_config(args.config)
    transport, vdev = _open_playback(args.device, cfg)
    if transport is None:
        print("error: device-test needs a device ('sim' or 'serial:<path>')",
              file=sys.stderr)
        return 2
    traj = _render_trial("contact", "C", cfg)
    realtime = args.device.startswith("serial:")
    print(f"streaming center-touch trial: {len(traj.waypoints)} frames "
          f"over {traj.total_duration:.2f} s")
    try:
        for i, wp in enumerate(traj.waypoints):
            pulses = pulses_for_pose(cfg.geometry, cfg.servo, wp.pose)
            send_frame(transport, encode_frame(pulses, wp.vibration_duty,
                                               i % 256))
            if realtime:
                time.sleep(cfg.render.dt)
    finally:
        transport.close()
    if vdev is not None:
        pose = vdev.pose
        print(f"final sim pose: ({pose[0]:.3f}, {pose[1]:.3f}, {pose[2]:.3f}) mm")
    print("ok")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="deltapad",
        description="Fingertip delta haptic display toolkit")
    parser.add_argument("--config", default=None,
                        help="JSON config file (defaults built in)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("workspace-report",
                       help="grid-check reachability, force range, conditioning")
    p.add_argument("--step", type=float, default=0.5, help="grid step in mm")
    p.set_defaults(func=cmd_workspace_report)

    p = sub.add_parser("render", help="render one trial trajectory to CSV")
    p.add_argument("--mode", choices=("contact", "stretch"), required=True)
    p.add_argument("--pattern", required=True,
                   help="contact point id or stretch direction")
    p.add_argument("--force", type=float, default=1.0)
    p.add_argument("--out", default=None, help="output CSV path")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("run", help="run a full session with a synthetic responder")
    p.add_argument("--mode", choices=("contact", "stretch"), required=True)
    p.add_argument("--subject", required=True)
    p.add_argument("--device", default="sim",
                   help="sim, none, or serial:<path> (default sim)")
    p.add_argument("--responder", choices=("default", "perfect"),
                   default="default")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repetitions", type=int, default=5)
    p.add_argument("--out", default="./sessions", help="session output dir")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("analyze", help="analyze a directory of session files")
    p.add_argument("dir")
    p.add_argument("--mode", choices=("contact", "stretch"), default=None)
    p.add_argument("--out", default=None, help="write report JSON here")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("serve", help="start the HTTP/WebSocket service")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--host", default=None)
    p.add_argument("--data-dir", default=None)
    p.add_argument("--device", default=None, help="sim or serial:<path>")
    p.add_argument("--no-realtime", action="store_true",
                   help="play trajectories as fast as possible")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("device-test", help="stream a center-touch trial")
    p.add_argument("--device", required=True, help="sim or serial:<path>")
    p.set_defaults(func=cmd_device_test)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DeltaPadError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
