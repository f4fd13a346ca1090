"""Command-line front end: ``rgbcrypt {keygen,encrypt,decrypt,send,recv,inspect}``."""

from __future__ import annotations

import argparse
import os
import sys
import threading

from . import codec
from .cipher import KeySchedule, decrypt, encrypt
from .errors import CipherError, CodecError, FramingError, InvalidKeyError, TransportError
from .framing import PacketFormat
from .keygen import make_key
from .points import format_keyfile, parse_keyfile
from .transport import (
    FileChannel,
    Listener,
    MemoryChannel,
    ReceiveReport,
    connect,
    light_encode,
    parse_endpoint,
    receive,
    receive_records,
    send,
    write_stream,
)

KEY_ENV = "RGBCRYPT_KEY"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_CIPHER = 4
EXIT_TRANSPORT = 5

FORMAT_NAMES = [f.cli_name for f in PacketFormat]


class UsageError(Exception):
    pass


def _read_input(path) -> bytes:
    if path in (None, "-"):
        return sys.stdin.buffer.read()
    with open(path, "rb") as fh:
        return fh.read()


def _write_output(path, data: bytes) -> None:
    if path in (None, "-"):
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
        return
    with open(path, "wb") as fh:
        fh.write(data)


def _err(msg):
    print(msg, file=sys.stderr)


def load_schedule(args) -> KeySchedule:
    path = args.key or os.environ.get(KEY_ENV)
    if not path:
        raise UsageError(f"no key given (use --key or set {KEY_ENV})")
    try:
        with open(path, encoding="ascii") as fh:
            text = fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise UsageError(f"cannot read key file {path}: {exc}") from None
    return KeySchedule.from_sequences(parse_keyfile(text), args.per_axis_modulo)


def _fmt_ratio(r) -> str:
    if r is None:
        return "n/a"
    return f"{r.numerator}/{r.denominator} ({float(r):.4f})"


def _report_line(report) -> str:
    wire = getattr(report, "wire_ipr_ratio", None)
    line = f"symbols {report.symbols} packets {report.packets} ipr {_fmt_ratio(report.ipr_ratio)}"
    if hasattr(report, "wire_ipr_ratio"):
        line += f" wire-ipr {_fmt_ratio(wire)}"
    return line


# -- commands -----------------------------------------------------------------------


def cmd_keygen(args):
    kw = {}
    if args.kind in ("unimodular", "composite") and args.steps is not None:
        kw["steps"] = args.steps
    if args.kind == "composite" and args.length is not None:
        kw["length"] = args.length
    if args.kind == "translate" and len(args.params) != 3:
        raise UsageError("translate needs three integers: dr dg db")
    try:
        seq = make_key(args.kind, args.params, seed=args.seed, **kw)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    text = f"# rgbcrypt key ({args.kind})\n" + format_keyfile(seq)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="ascii") as fh:
            fh.write(text)
    return EXIT_OK


def cmd_encrypt(args):
    schedule = load_schedule(args)
    em = encrypt(_read_input(args.input), schedule)
    out = MemoryChannel()
    # container: async-coarse stream with the key fingerprint as its first frame
    write_stream(out, em.records, PacketFormat.ASYNC_COARSE, fingerprint=em.fingerprint)
    out.close()
    data = b"".join(iter(out.read, b""))
    _write_output(args.out, data)
    return EXIT_OK


def _read_stream(path, report):
    with FileChannel(path, "r") as ch:
        return receive_records(ch, report)


def cmd_decrypt(args):
    schedule = load_schedule(args)
    report = ReceiveReport()
    records = _read_stream(args.input, report)
    if report.fingerprint is not None and report.fingerprint != schedule.fingerprint:
        _err("warning: key fingerprint does not match the key used for encryption")
    _write_output(args.out, decrypt(records, schedule))
    return EXIT_OK


def cmd_send(args):
    schedule = load_schedule(args)
    fmt = PacketFormat.parse(args.format)
    message = args.text.encode("latin-1") if args.text is not None else _read_input(args.input)
    if args.transport == "memory":
        channel = MemoryChannel()
        report = ReceiveReport()
        result = {}

        def rx():
            try:
                result["data"] = receive(schedule, channel, report)
            except Exception as exc:  # re-raised on the main thread
                result["error"] = exc

        t = threading.Thread(target=rx)
        t.start()
        sent = send(message, schedule, fmt, channel, batch=args.batch)
        t.join()
        _err(f"sent: {_report_line(sent)}")
        if "error" in result:
            raise result["error"]
        _err(f"received: {_report_line(report)}")
        _write_output(args.out, result["data"])
        return EXIT_OK
    if not args.endpoint:
        raise UsageError(f"--endpoint is required for the {args.transport} transport")
    if args.transport == "net":
        channel = connect(*parse_endpoint(args.endpoint))
    else:
        channel = FileChannel(args.endpoint, "w")
    sent = send(message, schedule, fmt, channel, batch=args.batch)
    _err(f"sent: {_report_line(sent)}")
    return EXIT_OK


def cmd_recv(args):
    schedule = load_schedule(args)
    if not args.endpoint:
        raise UsageError("--endpoint is required")
    report = ReceiveReport()
    if args.transport == "net":
        host, port = parse_endpoint(args.endpoint)
        with Listener(host, port) as listener:
            _err(f"listening on {listener.host}:{listener.port}")
            channel = listener.accept(timeout=args.timeout)
            try:
                data = receive(schedule, channel, report)
            finally:
                channel.close()
    elif args.transport == "file":
        with FileChannel(args.endpoint, "r") as channel:
            data = receive(schedule, channel, report)
    else:
        raise UsageError("recv supports the net and file transports (memory runs inside send)")
    _err(f"received: {_report_line(report)}")
    _write_output(args.out, data)
    return EXIT_OK


def cmd_inspect(args):
    report = ReceiveReport()
    records = _read_stream(args.input, report)
    out = sys.stdout
    fmt = report.format.cli_name
    for i, rec in enumerate(records, 1):
        sym = light_encode(rec)
        point = ",".join(str(v) for v in codec.demangle(rec))
        print(
            f"record {i}: residue {rec.residue:02X} waf {rec.waf} bpa {rec.bpa} "
            f"point ({point}) color {sym.hex}",
            file=out,
        )
        if args.verbose:
            print(
                f"    residue as polynomial {codec.polynomial_view(rec.residue)}, "
                f"octal {codec.base_view(rec.residue, 'octal')}",
                file=out,
            )
    print(f"format {fmt}", file=out)
    print(f"{len(records)} records", file=out)
    print(f"packets {report.packets} ipr {_fmt_ratio(report.ipr_ratio)}", file=out)
    if report.fingerprint is not None:
        print(f"key fingerprint {report.fingerprint.hex()}", file=out)
    return EXIT_OK


# -- argument parsing ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rgbcrypt",
        description="Color-oriented 3D RGB cipher: keys, files and simulated transmission.",
        epilog=f"The key file defaults to ${KEY_ENV} when --key is omitted.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def key_opts(p):
        p.add_argument("--key", help=f"key file (default: ${KEY_ENV})")
        p.add_argument(
            "--per-axis-modulo",
            type=int,
            metavar="N",
            help="reduce every axis mod 2**N after each key op (add/sub keys only, N >= 4)",
        )

    p = sub.add_parser("keygen", help="write a key file")
    p.add_argument("kind", choices=["translate", "unimodular", "composite"])
    p.add_argument("params", nargs="*", type=int, help="dr dg db for translate")
    p.add_argument("--seed", type=int, help="seed for random kinds (reproducible output)")
    p.add_argument("--steps", type=int, help="generator steps per random matrix")
    p.add_argument("--length", type=int, help="number of ops in a composite key")
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=cmd_keygen)

    for name, func, help_ in (
        ("encrypt", cmd_encrypt, "encrypt a file into a container"),
        ("decrypt", cmd_decrypt, "decrypt a container (or a file-transport stream)"),
    ):
        p = sub.add_parser(name, help=help_)
        p.add_argument("input", help="input path, '-' for stdin")
        key_opts(p)
        p.add_argument("--out", help="output path (default: stdout)")
        p.set_defaults(func=func)

    p = sub.add_parser("send", help="encrypt and transmit a message")
    p.add_argument("input", nargs="?", help="message file, '-' for stdin")
    p.add_argument("--text", help="send this text instead of a file")
    key_opts(p)
    p.add_argument("--format", choices=FORMAT_NAMES, default="async-coarse")
    p.add_argument("--transport", choices=["memory", "net", "file"], default="memory")
    p.add_argument("--endpoint", help="host:port (net) or path (file)")
    p.add_argument("--batch", type=int, default=256, help="records per coarse packet")
    p.add_argument("--out", help="memory transport: where to write the received message")
    p.set_defaults(func=cmd_send)

    p = sub.add_parser("recv", help="receive and decrypt a transmission")
    key_opts(p)
    p.add_argument("--transport", choices=["net", "file"], default="net")
    p.add_argument("--endpoint", help="host:port to listen on (net) or path (file)")
    p.add_argument("--timeout", type=float, default=None, help="seconds to wait for a sender")
    p.add_argument("--out", help="output path (default: stdout)")
    p.set_defaults(func=cmd_recv)

    p = sub.add_parser("inspect", help="describe the records in a container or stream file")
    p.add_argument("input")
    p.add_argument("-v", "--verbose", action="store_true", help="also show polynomial/octal views")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "per_axis_modulo", None) is not None and args.per_axis_modulo < 4:
        parser.error("--per-axis-modulo needs N >= 4")
    if args.command == "send" and args.input is None and args.text is None:
        parser.error("send needs an input file or --text")
    if getattr(args, "batch", 1) < 1 or getattr(args, "batch", 1) > 0xFFFF:
        parser.error("--batch must be in [1, 65535]")
    try:
        return args.func(args)
    except UsageError as exc:
        _err(f"error: {exc}")
        return EXIT_USAGE
    except CipherError as exc:
        _err(f"error: {exc}")
        return EXIT_CIPHER
    except TransportError as exc:
        _err(f"error: {exc}")
        return EXIT_TRANSPORT
    except (FramingError, InvalidKeyError, CodecError) as exc:
        _err(f"error: {exc}")
        return EXIT_PARSE
    except OSError as exc:
        _err(f"error: {exc}")
        return EXIT_TRANSPORT


if __name__ == "__main__":
    sys.exit(main())
