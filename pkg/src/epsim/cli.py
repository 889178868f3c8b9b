"""Configuration-driven scenario runner.

Subcommands: simulate, analyze, noise-budget, freq-response, stream,
serve, replay.  Exit codes: 0 success, 2 configuration error, 3 input
data error, 4 transport error, 5 internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (EventSeries, cwt_filter, detect_breath_peaks,
                       detect_r_peaks, integrate_rc, spirometry_analyze,
                       timing_stats)
from .errors import EpsimError, InsufficientDataError
from .frontend import named_block_tf
from .noise import ARCH_CT, ARCH_SI, BandSpec, integrated_input_noise, \
    noise_budget_rows
from .scenario import (ConfigError, build_frontend, build_noise,
                       load_config, manifest_dict, run_scenario)
from .telemetry import (PACKET_BYTES, SessionError, UdpTransport,
                        base_receive, node_stream, read_session,
                        replay_channels, write_session)
from .waveform import WaveformBuffer

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_TRANSPORT = 4
EXIT_INTERNAL = 5


def _write_events_csv(path: Path, events: dict[str, np.ndarray]) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("kind,time_s\n")
        for kind in sorted(events):
            for t in np.asarray(events[kind], dtype=float).tolist():
                fh.write(f"{kind},{t!r}\n")


def _read_events_csv(path: Path) -> dict[str, np.ndarray]:
    events: dict[str, list[float]] = {}
    with open(path) as fh:
        fh.readline()
        for line in fh:
            if not line.strip():
                continue
            kind, t = line.strip().split(",", 1)
            events.setdefault(kind, []).append(float(t))
    return {k: np.array(v) for k, v in events.items()}


def cmd_simulate(config_path: str, out_dir: str,
                 seed_override: int | None = None) -> int:
    cfg = load_config(config_path)
    if seed_override is not None:
        cfg.values["run"]["seed"] = int(seed_override)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    recordings = run_scenario(cfg)
    for rec in recordings:
        rec_dir = out / f"rec_{rec.index:03d}"
        rec_dir.mkdir(exist_ok=True)
        rec.result.ecg_channel.to_csv(rec_dir / "ecg.csv")
        rec.result.rc_channel.to_csv(rec_dir / "rc.csv")
        _write_events_csv(rec_dir / "events.csv", rec.truth_events)
        info = {
            "index": rec.index,
            "distance_cm": rec.distance_cm,
            "repeat": rec.repeat,
            "seed": rec.seed,
            "saturated": rec.result.metadata["saturated"],
        }
        if rec.mcl_suppression_db is not None:
            info["mcl_suppression_db"] = rec.mcl_suppression_db
        (rec_dir / "recording.json").write_text(
            json.dumps(info, sort_keys=True, indent=1) + "\n")
    manifest = manifest_dict(cfg, len(recordings))
    (out / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=1) + "\n")
    print(f"wrote {len(recordings)} recording(s) to {out}")
    return EXIT_OK


def _analyze_recording(rec_dir: Path, rows: list, breath_rows: list,
                       reports: list) -> None:
    events = _read_events_csv(rec_dir / "events.csv")
    ecg = WaveformBuffer.from_csv(rec_dir / "ecg.csv")
    rc = WaveformBuffer.from_csv(rec_dir / "rc.csv")
    name = rec_dir.name

    if "r_peak" in events and len(events["r_peak"]) >= 2:
        filt = cwt_filter(ecg, 5.0, 30.0)
        detected = detect_r_peaks(filt)
        try:
            st = timing_stats(EventSeries(events["r_peak"], "r_peak"), detected)
            for d in st.diffs:
                rows.append((name, d))
            reports.append(f"{name}: beats ref={len(events['r_peak'])} "
                           f"det={len(detected)} mean={st.mean_diff * 1e3:.3f} ms "
                           f"std={st.std_diff * 1e3:.3f} ms")
        except InsufficientDataError as exc:
            reports.append(f"{name}: beat matching failed ({exc})")
    if "breath_peak" in events and len(events["breath_peak"]) >= 2:
        integ = integrate_rc(rc)
        detected = detect_breath_peaks(integ)
        try:
            st = timing_stats(EventSeries(events["breath_peak"], "breath_peak"),
                              detected)
            for d in st.diffs:
                breath_rows.append((name, d))
            reports.append(f"{name}: breaths ref={len(events['breath_peak'])} "
                           f"det={len(detected)} std={st.std_diff:.4f} s")
        except InsufficientDataError as exc:
            reports.append(f"{name}: breath matching failed ({exc})")
        flow = rc.with_samples(np.gradient(integ.samples, 1.0 / rc.fs),
                               label="flow")
        spiro = spirometry_analyze(flow)
        if spiro is not None:
            reports.append(f"{name}: spirometry fvc={spiro.fvc:.4g} "
                           f"pef={spiro.pef:.4g} fef25_75={spiro.fef_25_75:.4g}")


def _write_diff_tables(out: Path, tag: str, rows: list) -> None:
    if not rows:
        return
    diffs = np.array([d for _, d in rows])
    with open(out / f"{tag}_interval_diffs.csv", "w", newline="") as fh:
        fh.write("recording,diff_s\n")
        for name, d in rows:
            fh.write(f"{name},{float(d)!r}\n")
    xs = np.sort(diffs)
    cdf = np.arange(1, xs.size + 1) / xs.size
    with open(out / f"{tag}_cdf.csv", "w", newline="") as fh:
        fh.write("diff_s,cdf\n")
        for x, c in zip(xs.tolist(), cdf.tolist()):
            fh.write(f"{x!r},{c!r}\n")
    hist, edges = np.histogram(diffs, bins=31)
    with open(out / f"{tag}_hist.csv", "w", newline="") as fh:
        fh.write("bin_center_s,count\n")
        for k, h in enumerate(hist):
            fh.write(f"{float((edges[k] + edges[k + 1]) / 2)!r},{int(h)}\n")


def cmd_analyze(recordings_dir: str, out_dir: str) -> int:
    root = Path(recordings_dir)
    rec_dirs = sorted(p for p in root.glob("rec_*") if p.is_dir())
    if not rec_dirs:
        print(f"no recordings under {root}", file=sys.stderr)
        return EXIT_INPUT
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rows: list = []
    breath_rows: list = []
    reports: list[str] = []
    for rec_dir in rec_dirs:
        _analyze_recording(rec_dir, rows, breath_rows, reports)
    _write_diff_tables(out, "beat", rows)
    _write_diff_tables(out, "breath", breath_rows)
    summary = [f"recordings: {len(rec_dirs)}"]
    if rows:
        diffs = np.array([d for _, d in rows])
        summary.append(f"beat intervals: n={diffs.size} "
                       f"mean={np.mean(diffs) * 1e3:.3f} ms "
                       f"std={np.std(diffs) * 1e3:.3f} ms")
    if breath_rows:
        diffs = np.array([d for _, d in breath_rows])
        summary.append(f"breath intervals: n={diffs.size} "
                       f"mean={np.mean(diffs):.4f} s std={np.std(diffs):.4f} s")
    report_text = "\n".join(summary + [""] + reports) + "\n"
    (out / "report.txt").write_text(report_text)
    print(report_text, end="")
    return EXIT_OK


def cmd_noise_budget(config_path: str | None, out_dir: str) -> int:
    spec = build_noise(load_config(config_path)) if config_path else None
    if spec is None:
        from .noise import NoiseSpec
        spec = NoiseSpec()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    freqs = np.logspace(-1, 3, 200)
    for arch in (ARCH_CT, ARCH_SI):
        with open(out / f"noise_budget_{arch}.csv", "w", newline="") as fh:
            fh.write("c_c_pf,f_hz,term_shot,term_en,term_thermal,total\n")
            for c_pf in (1.0, 2.0, 4.0, 8.0):
                for row in noise_budget_rows(spec, c_pf * 1e-12, freqs, arch):
                    fh.write(f"{c_pf!r}," + ",".join(repr(float(v)) for v in row) + "\n")
    with open(out / "integrated_noise.csv", "w", newline="") as fh:
        fh.write("architecture,band,c_c_pf,v_n_rms\n")
        for arch in (ARCH_CT, ARCH_SI):
            for band in (BandSpec.ecg(), BandSpec.eeg(), BandSpec.emg()):
                for c_pf in (1.0, 2.0, 4.0, 8.0):
                    v = integrated_input_noise(spec, c_pf * 1e-12, band, arch)
                    fh.write(f"{arch},{band.name},{c_pf!r},{v!r}\n")
    print(f"wrote noise budget tables to {out}")
    return EXIT_OK


def cmd_freq_response(config_path: str | None, block: str, out_path: str) -> int:
    from .frontend import FrontEndConfig
    cfg = build_frontend(load_config(config_path)) if config_path \
        else FrontEndConfig()
    tf = named_block_tf(block, cfg)
    freqs = np.arange(0.05, 500.0, 0.05)  # resolves 0.8 Hz-wide notches
    with open(out_path, "w", newline="") as fh:
        fh.write("f_hz,mag_db,phase_deg\n")
        for f_hz, mag, ph in tf.frequency_rows(freqs):
            fh.write(f"{float(f_hz)!r},{float(mag)!r},{float(ph)!r}\n")
    print(f"wrote {block} frequency response to {out_path}")
    return EXIT_OK


def _parse_endpoint(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"endpoint must be host:port, got {text!r}")
    return host, int(port)


def cmd_stream(config_path: str, endpoint: str, *, pace: str = "accelerated",
               node_id: int = 1) -> int:
    cfg = load_config(config_path)
    recordings = run_scenario(cfg)
    rec = recordings[0]
    transport = UdpTransport(_parse_endpoint(endpoint))
    try:
        n = node_stream(rec.result.ecg_channel, rec.result.rc_channel,
                        transport, node_id=node_id, pace=pace)
    finally:
        transport.close()
    print(f"streamed {n} packets ({n * PACKET_BYTES} bytes) to {endpoint}")
    return EXIT_OK


def cmd_serve(endpoint: str, session_path: str, *,
              idle_timeout: float = 2.0,
              expect_packets: int | None = None) -> int:
    transport = UdpTransport(_parse_endpoint(endpoint), bind=True)
    try:
        log = base_receive(transport, idle_timeout=idle_timeout,
                           expect_packets=expect_packets)
    finally:
        transport.close()
    write_session(log, session_path)
    print(f"received {len(log.packets)} packets, "
          f"{log.missing_packets()} missing, "
          f"{len(log.anomalies)} anomalies -> {session_path}")
    return EXIT_OK


def cmd_replay(session_path: str, out_dir: str) -> int:
    log = read_session(session_path)
    if not log.packets:
        print(f"session {session_path} holds no packets", file=sys.stderr)
        return EXIT_INPUT
    ch0, ch1 = replay_channels(log)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ch0.to_csv(out / "ch0.csv")
    ch1.to_csv(out / "ch1.csv")
    print(f"replayed {len(log.packets)} packets "
          f"({len(log.gaps)} gap ranges) to {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epsim",
        description="Non-contact electric-potential sensing simulator")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a scenario and write recordings")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None,
                   help="override the config seed")

    p = sub.add_parser("analyze", help="analyze a directory of recordings")
    p.add_argument("--recordings", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("noise-budget", help="emit noise budget tables")
    p.add_argument("--config", default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("freq-response", help="dump a block's frequency response")
    p.add_argument("--config", default=None)
    p.add_argument("--block", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("stream", help="stream a scenario over UDP")
    p.add_argument("--config", required=True)
    p.add_argument("--endpoint", required=True)
    p.add_argument("--pace", choices=("realtime", "accelerated"),
                   default="accelerated")
    p.add_argument("--node-id", type=int, default=1)

    p = sub.add_parser("serve", help="receive packets and write a session file")
    p.add_argument("--endpoint", required=True)
    p.add_argument("--session", required=True)
    p.add_argument("--idle-timeout", type=float, default=2.0)
    p.add_argument("--expect-packets", type=int, default=None)

    p = sub.add_parser("replay", help="replay a session file to CSV channels")
    p.add_argument("--session", required=True)
    p.add_argument("--out", required=True)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args.config, args.out, args.seed)
        if args.command == "analyze":
            return cmd_analyze(args.recordings, args.out)
        if args.command == "noise-budget":
            return cmd_noise_budget(args.config, args.out)
        if args.command == "freq-response":
            return cmd_freq_response(args.config, args.block, args.out)
        if args.command == "stream":
            return cmd_stream(args.config, args.endpoint, pace=args.pace,
                              node_id=args.node_id)
        if args.command == "serve":
            return cmd_serve(args.endpoint, args.session,
                             idle_timeout=args.idle_timeout,
                             expect_packets=args.expect_packets)
        if args.command == "replay":
            return cmd_replay(args.session, args.out)
        return EXIT_INTERNAL
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SessionError, OSError) as exc:
        print(f"transport error: {exc}", file=sys.stderr)
        return EXIT_TRANSPORT
    except EpsimError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
